//! Core economy model: primitives, mechanisms, and every pointwise formula of
//! the contracting game — posteriors, recommendation-obedient pricing,
//! producer revenue, consumer interim payoffs, the eight-constraint ledger,
//! and surplus accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-width of the knife-edge band around `mu0 = v_L / v_H`.
pub const BOUNDARY_BAND: f64 = 1e-12;

/// Default tolerance for constraint satisfaction.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid primitives: field `{field}` {reason}")]
    InvalidPrimitives {
        field: &'static str,
        reason: &'static str,
    },
    #[error("posterior undefined: signal `{0}` is never sent")]
    UndefinedPosterior(Signal),
}

/// Economy parameters: taste locations, product valuations, prior, and the
/// baseline service utility.
///
/// Wire format uses the stable field names `L`, `H`, `V`, `v_L`, `v_H`, `mu0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Primitives {
    /// Taste location of type-L consumers.
    #[serde(rename = "L")]
    pub taste_low: f64,
    /// Taste location of type-H consumers. Must exceed `taste_low`.
    #[serde(rename = "H")]
    pub taste_high: f64,
    /// Baseline utility from consuming the service (money units).
    #[serde(rename = "V")]
    pub base_utility: f64,
    /// Type-L willingness to pay for the product. Must be positive.
    #[serde(rename = "v_L")]
    pub value_low: f64,
    /// Type-H willingness to pay for the product. Must exceed `value_low`.
    #[serde(rename = "v_H")]
    pub value_high: f64,
    /// Prior probability of type H, in (0, 1).
    #[serde(rename = "mu0")]
    pub prior_high: f64,
}

impl Primitives {
    pub fn new(
        taste_low: f64,
        taste_high: f64,
        base_utility: f64,
        value_low: f64,
        value_high: f64,
        prior_high: f64,
    ) -> Self {
        Self {
            taste_low,
            taste_high,
            base_utility,
            value_low,
            value_high,
            prior_high,
        }
    }

    /// Checks the model invariants, naming the offending field on failure.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |field, reason| Err(ModelError::InvalidPrimitives { field, reason });
        for (field, v) in [
            ("L", self.taste_low),
            ("H", self.taste_high),
            ("V", self.base_utility),
            ("v_L", self.value_low),
            ("v_H", self.value_high),
            ("mu0", self.prior_high),
        ] {
            if !v.is_finite() {
                return err(field, "must be finite");
            }
        }
        if self.taste_high <= self.taste_low {
            return err("H", "must exceed L (taste spread delta must be positive)");
        }
        if self.value_low <= 0.0 {
            return err("v_L", "must be positive");
        }
        if self.value_high <= self.value_low {
            return err("v_H", "must exceed v_L");
        }
        if !(self.prior_high > 0.0 && self.prior_high < 1.0) {
            return err("mu0", "must lie strictly inside (0, 1)");
        }
        Ok(())
    }

    /// Derived constants without validation; see [`derive_constants`] for the
    /// checked entry point. Pre: invariants hold.
    pub fn constants(&self) -> DerivedConstants {
        let delta = self.taste_high - self.taste_low;
        let dv = self.value_high - self.value_low;
        let mu = self.prior_high;
        let value_ratio = self.value_low / self.value_high;
        let c_ratio = (1.0 - mu) * self.value_low / (mu * dv);
        let boundary = (mu - value_ratio).abs() <= BOUNDARY_BAND;
        // The knife edge resolves the producer's pricing tie to p0 = v_H and
        // raises the boundary flag; downstream code branches on the flag.
        let (p0, outside_high) = if boundary || mu > value_ratio {
            (self.value_high, 0.0)
        } else {
            (self.value_low, dv)
        };
        DerivedConstants {
            delta,
            dv,
            c_ratio,
            r0: f64::max(self.value_high * mu, self.value_low),
            p0,
            outside_high,
            boundary,
        }
    }
}

/// Constants derived from [`Primitives`]: spreads, the obedience slope `C`,
/// the no-data product price and revenue, and the type-H outside option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Taste spread `H - L`.
    pub delta: f64,
    /// Valuation spread `v_H - v_L`.
    pub dv: f64,
    /// Obedience slope `C = (1 - mu0) v_L / (mu0 (v_H - v_L))`.
    #[serde(rename = "C")]
    pub c_ratio: f64,
    /// Product revenue without any data: `max(v_H mu0, v_L)`.
    #[serde(rename = "R0")]
    pub r0: f64,
    /// Product price under prior information.
    pub p0: f64,
    /// Type-H consumer's payoff from rejecting the contract.
    #[serde(rename = "outside_H")]
    pub outside_high: f64,
    /// True when `mu0` sits on the `v_L / v_H` knife edge.
    pub boundary: bool,
}

impl DerivedConstants {
    /// Ratio `delta^2 / dv` comparing horizontal to vertical differentiation.
    pub fn distortion_ratio(&self) -> f64 {
        self.delta * self.delta / self.dv
    }
}

/// Validates primitives and computes the derived constants.
pub fn derive_constants(p: &Primitives) -> Result<DerivedConstants, ModelError> {
    p.validate()?;
    Ok(p.constants())
}

/// A posted contract: service provisions and fees per reported type, the
/// disclosure policy over the two price-recommendation signals, and the
/// lump-sum data fee.
///
/// `pi(h|theta) = 1 - pi(l|theta)` implicitly; only the low-signal
/// probabilities are stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mechanism {
    /// Service provided on an L report.
    #[serde(rename = "x_L")]
    pub service_low: f64,
    /// Service provided on an H report.
    #[serde(rename = "x_H")]
    pub service_high: f64,
    /// Service fee charged on an L report.
    #[serde(rename = "f_L")]
    pub fee_low: f64,
    /// Service fee charged on an H report.
    #[serde(rename = "f_H")]
    pub fee_high: f64,
    /// Probability the low-price signal is disclosed for an L report.
    #[serde(rename = "pi_lL")]
    pub disclose_low: f64,
    /// Probability the low-price signal is disclosed for an H report.
    #[serde(rename = "pi_lH")]
    pub disclose_high: f64,
    /// Lump-sum data fee paid by the producer.
    #[serde(rename = "T")]
    pub data_fee: f64,
}

impl Mechanism {
    /// Probability of the low-price signal given a report.
    pub fn disclose(&self, report: ConsumerType) -> f64 {
        match report {
            ConsumerType::Low => self.disclose_low,
            ConsumerType::High => self.disclose_high,
        }
    }

    /// Service/fee pair attached to a report.
    pub fn menu(&self, report: ConsumerType) -> (f64, f64) {
        match report {
            ConsumerType::Low => (self.service_low, self.fee_low),
            ConsumerType::High => (self.service_high, self.fee_high),
        }
    }
}

/// The two disclosed signals; each is a price recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Signal {
    /// Recommends the low product price `v_L`.
    #[serde(rename = "l")]
    Low,
    /// Recommends the high product price `v_H`.
    #[serde(rename = "h")]
    High,
}

impl std::fmt::Display for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::Low => write!(f, "l"),
            Signal::High => write!(f, "h"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConsumerType {
    #[serde(rename = "L")]
    Low,
    #[serde(rename = "H")]
    High,
}

/// A consumer's move after observing the posted contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsumerAction {
    Reject,
    ReportLow,
    ReportHigh,
}

/// Producer's posterior probability of type H after observing `signal`.
///
/// Errors when the signal is sent with probability zero; the obedience check
/// treats never-sent signals as vacuously obedient instead of dividing 0/0.
pub fn posterior(p: &Primitives, m: &Mechanism, signal: Signal) -> Result<f64, ModelError> {
    let mu = p.prior_high;
    let (from_high, from_low) = match signal {
        Signal::Low => (m.disclose_high, m.disclose_low),
        Signal::High => (1.0 - m.disclose_high, 1.0 - m.disclose_low),
    };
    let total = mu * from_high + (1.0 - mu) * from_low;
    if total <= 0.0 {
        return Err(ModelError::UndefinedPosterior(signal));
    }
    Ok(mu * from_high / total)
}

/// Expected product revenue when the producer obeys the recommendations:
/// everyone pays `v_L` after the low signal, type H pays `v_H` after the high
/// signal.
pub fn producer_revenue(p: &Primitives, m: &Mechanism) -> f64 {
    let mu = p.prior_high;
    let low_price_mass = mu * m.disclose_high + (1.0 - mu) * m.disclose_low;
    low_price_mass * p.value_low + mu * (1.0 - m.disclose_high) * p.value_high
}

/// The producer's net gain from the data trade split into its two channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeGain {
    /// Change in high-type rent capture (negative when the trade shifts
    /// surplus to type-H consumers).
    pub extraction: f64,
    /// Change in low-type market coverage.
    pub inclusion: f64,
    /// `extraction + inclusion`, equal to `R(pi) - R0`.
    pub total: f64,
}

/// Decomposes `R(pi) - R0` into surplus-extraction and market-inclusion
/// components relative to the no-data benchmark.
pub fn trade_gain_decomposition(p: &Primitives, m: &Mechanism) -> TradeGain {
    let dc = p.constants();
    let mu = p.prior_high;
    // Without data the producer serves type L (and discounts type H) exactly
    // when the prior already favors the low price.
    let no_data_low_price = if p.prior_high < p.value_low / p.value_high && !dc.boundary {
        1.0
    } else {
        0.0
    };
    let extraction = -mu * dc.dv * (m.disclose_high - no_data_low_price);
    let inclusion = (1.0 - mu) * p.value_low * (m.disclose_low - no_data_low_price);
    TradeGain {
        extraction,
        inclusion,
        total: extraction + inclusion,
    }
}

/// Interim payoff of a consumer of `true_type` choosing `action` against the
/// posted contract, assuming an obedient producer.
///
/// Rejecting consumers face the prior-information price `p0`.
pub fn consumer_interim_payoff(
    p: &Primitives,
    m: &Mechanism,
    true_type: ConsumerType,
    action: ConsumerAction,
) -> f64 {
    let dc = p.constants();
    let report = match action {
        ConsumerAction::Reject => {
            return match true_type {
                ConsumerType::High => dc.outside_high,
                ConsumerType::Low => 0.0,
            };
        }
        ConsumerAction::ReportLow => ConsumerType::Low,
        ConsumerAction::ReportHigh => ConsumerType::High,
    };
    let (service, fee) = m.menu(report);
    let taste = match true_type {
        ConsumerType::Low => p.taste_low,
        ConsumerType::High => p.taste_high,
    };
    // Only type H ever clears a price above v_L, so only type H collects
    // product-market surplus, dv with probability pi(l|report).
    let product_surplus = match true_type {
        ConsumerType::High => dc.dv * m.disclose(report),
        ConsumerType::Low => 0.0,
    };
    p.base_utility - (service - taste).powi(2) - fee + product_surplus
}

/// Names of the eight constraints in the intermediary's program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintName {
    /// Type-H truth-telling.
    #[serde(rename = "IC_H")]
    IcHigh,
    /// Type-L truth-telling.
    #[serde(rename = "IC_L")]
    IcLow,
    /// Type-H participation.
    #[serde(rename = "IR_H")]
    IrHigh,
    /// Type-L participation.
    #[serde(rename = "IR_L")]
    IrLow,
    /// Combined producer obedience.
    #[serde(rename = "OB")]
    Obedience,
    /// Producer participation in the data trade.
    #[serde(rename = "IR_P")]
    IrProducer,
    /// `pi(l|L)` inside the unit interval.
    #[serde(rename = "FE_lL")]
    FeasibleLow,
    /// `pi(l|H)` inside the unit interval.
    #[serde(rename = "FE_lH")]
    FeasibleHigh,
}

impl ConstraintName {
    pub const ALL: [ConstraintName; 8] = [
        ConstraintName::IcHigh,
        ConstraintName::IcLow,
        ConstraintName::IrHigh,
        ConstraintName::IrLow,
        ConstraintName::Obedience,
        ConstraintName::IrProducer,
        ConstraintName::FeasibleLow,
        ConstraintName::FeasibleHigh,
    ];
}

/// One constraint's signed slack (lhs minus rhs) and its satisfied flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintRecord {
    pub name: ConstraintName,
    pub slack: f64,
    pub satisfied: bool,
}

/// Per-constraint slack ledger for a (primitives, mechanism, beta) triple.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintReport {
    pub eps: f64,
    pub beta: f64,
    pub constraints: Vec<ConstraintRecord>,
}

impl ConstraintReport {
    pub fn get(&self, name: ConstraintName) -> &ConstraintRecord {
        self.constraints
            .iter()
            .find(|r| r.name == name)
            .expect("all eight constraints are always present")
    }

    pub fn all_satisfied(&self) -> bool {
        self.constraints.iter().all(|r| r.satisfied)
    }

    /// True when the named constraint holds with equality at tolerance `tol`.
    pub fn binding(&self, name: ConstraintName, tol: f64) -> bool {
        self.get(name).slack.abs() <= tol
    }
}

/// Signed slack of the combined obedience constraint. Never-sent signals are
/// vacuously obedient under this form.
pub fn obedience_slack(p: &Primitives, disclose_low: f64, disclose_high: f64) -> f64 {
    let vr = p.value_low / p.value_high;
    let mu = p.prior_high;
    vr * (1.0 - mu) * disclose_low - (1.0 - vr) * mu * disclose_high - f64::max(vr - mu, 0.0)
}

/// Evaluates all eight constraints' slacks; violations are data, not errors.
pub fn check_constraints(p: &Primitives, m: &Mechanism, beta: f64, eps: f64) -> ConstraintReport {
    let dc = p.constants();
    let truthful_high =
        consumer_interim_payoff(p, m, ConsumerType::High, ConsumerAction::ReportHigh);
    let truthful_low = consumer_interim_payoff(p, m, ConsumerType::Low, ConsumerAction::ReportLow);
    let misreport_high =
        consumer_interim_payoff(p, m, ConsumerType::High, ConsumerAction::ReportLow);
    let misreport_low =
        consumer_interim_payoff(p, m, ConsumerType::Low, ConsumerAction::ReportHigh);

    let slacks = [
        (ConstraintName::IcHigh, truthful_high - misreport_high),
        (ConstraintName::IcLow, truthful_low - misreport_low),
        (ConstraintName::IrHigh, truthful_high - dc.outside_high),
        (ConstraintName::IrLow, truthful_low),
        (
            ConstraintName::Obedience,
            obedience_slack(p, m.disclose_low, m.disclose_high),
        ),
        (
            ConstraintName::IrProducer,
            producer_revenue(p, m) - dc.r0 - m.data_fee,
        ),
        (
            ConstraintName::FeasibleLow,
            f64::min(m.disclose_low, 1.0 - m.disclose_low),
        ),
        (
            ConstraintName::FeasibleHigh,
            f64::min(m.disclose_high, 1.0 - m.disclose_high),
        ),
    ];
    ConstraintReport {
        eps,
        beta,
        constraints: slacks
            .into_iter()
            .map(|(name, slack)| ConstraintRecord {
                name,
                slack,
                satisfied: slack >= -eps,
            })
            .collect(),
    }
}

/// The intermediary's total profit: expected service fees plus the data fee.
///
/// Callers constructing mechanisms set `T = beta * (R(pi) - R0)`; this
/// operation only sums what the mechanism carries.
pub fn intermediary_payoff(p: &Primitives, m: &Mechanism, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&beta), "beta must lie in (0, 1]");
    p.prior_high * m.fee_high + (1.0 - p.prior_high) * m.fee_low + m.data_fee
}

/// Mass-weighted surpluses of every player and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurplusBreakdown {
    pub intermediary: f64,
    pub producer: f64,
    /// Aggregate type-H consumer surplus (per-capita payoff times mass mu0).
    #[serde(rename = "consumer_H")]
    pub consumer_high: f64,
    /// Aggregate type-L consumer surplus.
    #[serde(rename = "consumer_L")]
    pub consumer_low: f64,
    pub welfare: f64,
}

/// Splits total welfare across the intermediary, producer, and consumers,
/// assuming truthful participation. Warns (but still computes) when the
/// mechanism violates a constraint at the default tolerance.
pub fn surplus_breakdown(p: &Primitives, m: &Mechanism, beta: f64) -> SurplusBreakdown {
    let report = check_constraints(p, m, beta, DEFAULT_EPS);
    if !report.all_satisfied() {
        let names: Vec<&str> = report
            .constraints
            .iter()
            .filter(|r| !r.satisfied)
            .map(|r| match r.name {
                ConstraintName::IcHigh => "IC_H",
                ConstraintName::IcLow => "IC_L",
                ConstraintName::IrHigh => "IR_H",
                ConstraintName::IrLow => "IR_L",
                ConstraintName::Obedience => "OB",
                ConstraintName::IrProducer => "IR_P",
                ConstraintName::FeasibleLow => "FE_lL",
                ConstraintName::FeasibleHigh => "FE_lH",
            })
            .collect();
        log::warn!(
            "surplus_breakdown: mechanism violates {} at eps {DEFAULT_EPS}",
            names.join(", ")
        );
    }
    let mu = p.prior_high;
    let intermediary = intermediary_payoff(p, m, beta);
    let producer = producer_revenue(p, m) - m.data_fee;
    let consumer_high =
        mu * consumer_interim_payoff(p, m, ConsumerType::High, ConsumerAction::ReportHigh);
    let consumer_low =
        (1.0 - mu) * consumer_interim_payoff(p, m, ConsumerType::Low, ConsumerAction::ReportLow);
    SurplusBreakdown {
        intermediary,
        producer,
        consumer_high,
        consumer_low,
        welfare: intermediary + producer + consumer_high + consumer_low,
    }
}
