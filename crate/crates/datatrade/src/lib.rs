//! Solver and verification toolkit for two-market data-trade mechanism design.
//!
//! An intermediary collects taste data from consumers through a service menu
//! and resells it to a monopolist producer as binary price recommendations.
//! This crate houses the closed-form optimal mechanisms for that problem, an
//! independent grid-search oracle that re-solves the full constrained program
//! from scratch, a Monte Carlo simulator of the posted-mechanism game, and a
//! regulation-analysis layer (data-trade bans, bargaining-power sweeps,
//! welfare accounting).

pub mod closed_form;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod sim;

pub use closed_form::{
    classify_regime, pi_h_interval, solve_bargaining, solve_binary_service, solve_boundary,
    solve_general, solve_no_data_market, BoundarySolutions, Regime, RegimeTag, Selection,
    ServiceSpace, SolutionBundle, SolveError, SolveOptions,
};
pub use model::{
    check_constraints, consumer_interim_payoff, derive_constants, intermediary_payoff, posterior,
    producer_revenue, surplus_breakdown, trade_gain_decomposition, ConstraintName,
    ConstraintRecord, ConstraintReport, ConsumerAction, ConsumerType, DerivedConstants, Mechanism,
    ModelError, Primitives, Signal, SurplusBreakdown, TradeGain, DEFAULT_EPS,
};
pub use oracle::{grid_solve, optimal_fees_given, verify_closed_form, GridSpec, OracleResult, VerificationReport};
pub use policy::{
    beta_sweep, compare_ban, efficiency_check, full_disclosure_optimal, full_privacy_optimal,
    surplus_table, BanComparison, BanVerdict, BetaSweepRow, EfficiencyCheck, SurplusTableRow,
};
pub use sim::{best_response_report, simulate, BestResponse, Estimate, SimReport};
