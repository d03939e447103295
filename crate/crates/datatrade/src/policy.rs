//! Regulation analysis: the data-trade ban comparison, the efficiency test,
//! full-privacy/full-disclosure classification, and bargaining-power sweeps.

use serde::Serialize;

use crate::closed_form::{
    classify_regime, solve_bargaining, solve_boundary, solve_general, solve_no_data_market,
    RegimeTag, SolveError, SolveOptions,
};
use crate::model::{surplus_breakdown, Mechanism, Primitives, SurplusBreakdown};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BanVerdict {
    BanReducesWelfare,
    BanNeutral,
}

/// Welfare with the data market against the no-trade benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BanComparison {
    pub with_trade: SurplusBreakdown,
    pub without_trade: SurplusBreakdown,
    pub welfare_delta: f64,
    pub verdict: BanVerdict,
}

/// Compares surpluses with and without the data market. On the knife edge
/// the branch with the larger welfare represents the traded side.
pub fn compare_ban(p: &Primitives) -> Result<BanComparison, SolveError> {
    let opts = SolveOptions::default();
    let regime = classify_regime(p)?;
    let with_trade = if regime.tag == RegimeTag::Boundary {
        let both = solve_boundary(p, &opts)?;
        let branch = if both.large_branch.welfare >= both.small_branch.welfare {
            both.large_branch
        } else {
            both.small_branch
        };
        surplus_breakdown(p, &branch.mechanism, 1.0)
    } else {
        surplus_breakdown(p, &solve_general(p, &opts)?.mechanism, 1.0)
    };
    let without_trade = surplus_breakdown(p, &solve_no_data_market(p)?.mechanism, 1.0);
    let welfare_delta = with_trade.welfare - without_trade.welfare;
    Ok(BanComparison {
        with_trade,
        without_trade,
        welfare_delta,
        verdict: if welfare_delta > 1e-9 {
            BanVerdict::BanReducesWelfare
        } else {
            BanVerdict::BanNeutral
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyCheck {
    pub efficient: bool,
    /// First-best welfare minus the mechanism's welfare.
    pub gap: f64,
}

/// Distance of a mechanism's welfare from the first best
/// `V + mu0 v_H + (1 - mu0) v_L` (correct service for all, product sold to
/// all).
pub fn efficiency_check(p: &Primitives, m: &Mechanism) -> EfficiencyCheck {
    let first_best =
        p.base_utility + p.prior_high * p.value_high + (1.0 - p.prior_high) * p.value_low;
    let gap = first_best - surplus_breakdown(p, m, 1.0).welfare;
    EfficiencyCheck {
        efficient: gap <= 1e-9,
        gap,
    }
}

/// Whether an uninformative disclosure (`pi(l|H) = pi(l|L)`) belongs to the
/// optimal set: true exactly under a small prior.
pub fn full_privacy_optimal(p: &Primitives) -> Result<bool, SolveError> {
    let regime = classify_regime(p)?;
    if regime.tag == RegimeTag::Boundary {
        return Err(SolveError::Boundary);
    }
    Ok(!regime.tag.is_large_mu())
}

/// Whether fully revealing disclosure (`pi(l|L) = 1`, `pi(l|H) = 0`) belongs
/// to the optimal set.
pub fn full_disclosure_optimal(p: &Primitives) -> Result<bool, SolveError> {
    let regime = classify_regime(p)?;
    let t = regime.thresholds;
    match regime.tag {
        RegimeTag::Boundary => Err(SolveError::Boundary),
        tag if tag.is_large_mu() => Ok(t.ratio >= t.dv_share),
        _ => Ok(t.ratio >= 1.0),
    }
}

/// One bargaining-power level of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaSweepRow {
    pub beta: f64,
    #[serde(rename = "pi_lL")]
    pub pi_ll: f64,
    #[serde(rename = "pi_lH")]
    pub pi_lh: f64,
    pub intermediary: f64,
    pub producer: f64,
    pub consumers: f64,
    pub welfare: f64,
    /// `beta (R(pi) - R0)` carried by the solved mechanism.
    pub data_revenue: f64,
}

/// Solves the design at each bargaining power and tabulates surpluses. All
/// surplus columns are invariant in `beta`; the equilibrium data revenue is
/// zero below full power.
pub fn beta_sweep(p: &Primitives, betas: &[f64]) -> Result<Vec<BetaSweepRow>, SolveError> {
    let opts = SolveOptions::default();
    betas
        .iter()
        .map(|&beta| {
            let bundle = if beta == 1.0 {
                solve_general(p, &opts)?
            } else {
                solve_bargaining(p, beta, &opts)?
            };
            let s = surplus_breakdown(p, &bundle.mechanism, beta);
            Ok(BetaSweepRow {
                beta,
                pi_ll: bundle.mechanism.disclose_low,
                pi_lh: bundle.mechanism.disclose_high,
                intermediary: s.intermediary,
                producer: s.producer,
                consumers: s.consumer_high + s.consumer_low,
                welfare: s.welfare,
                data_revenue: bundle.mechanism.data_fee,
            })
        })
        .collect()
}

/// One economy's surplus triples with and without the data market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurplusTableRow {
    pub mu0: f64,
    /// `delta^2 / dv`.
    pub ratio: f64,
    pub regime: RegimeTag,
    pub with_intermediary: f64,
    pub with_producer: f64,
    pub with_consumers: f64,
    pub without_intermediary: f64,
    pub without_producer: f64,
    pub without_consumers: f64,
}

/// Tabulates the surplus distribution for each economy.
pub fn surplus_table(ps: &[Primitives]) -> Result<Vec<SurplusTableRow>, SolveError> {
    let opts = SolveOptions::default();
    ps.iter()
        .map(|p| {
            let regime = classify_regime(p)?;
            if regime.tag == RegimeTag::Boundary {
                return Err(SolveError::Boundary);
            }
            let with = surplus_breakdown(p, &solve_general(p, &opts)?.mechanism, 1.0);
            let without = surplus_breakdown(p, &solve_no_data_market(p)?.mechanism, 1.0);
            Ok(SurplusTableRow {
                mu0: p.prior_high,
                ratio: regime.thresholds.ratio,
                regime: regime.tag,
                with_intermediary: with.intermediary,
                with_producer: with.producer,
                with_consumers: with.consumer_high + with.consumer_low,
                without_intermediary: without.intermediary,
                without_producer: without.producer,
                without_consumers: without.consumer_high + without.consumer_low,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{p1, p2, p3, p4, p5};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ban_comparison_fixtures() {
        let c = compare_ban(&p1()).unwrap();
        assert!((c.welfare_delta - 0.4).abs() < 1e-12);
        assert_eq!(c.verdict, BanVerdict::BanReducesWelfare);
        assert!((c.with_trade.welfare - 11.6).abs() < 1e-12);
        assert!((c.without_trade.welfare - 11.2).abs() < 1e-12);

        let c = compare_ban(&p3()).unwrap();
        assert!((c.welfare_delta - 0.2).abs() < 1e-12);
        assert_eq!(c.verdict, BanVerdict::BanReducesWelfare);

        let c = compare_ban(&p4()).unwrap();
        assert!(c.welfare_delta.abs() < 1e-12);
        assert_eq!(c.verdict, BanVerdict::BanNeutral);
    }

    #[test]
    fn ban_never_helps_and_bites_only_under_large_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let v_low = 0.5 + rng.random::<f64>();
            let v_high = v_low + 0.5 + rng.random::<f64>();
            let vr = v_low / v_high;
            let mut mu0 = 0.05 + 0.9 * rng.random::<f64>();
            // Keep clear of the knife edge; the boundary is handled separately.
            if (mu0 - vr).abs() < 1e-6 {
                mu0 += 1e-3;
            }
            let ratio = 0.1 + 2.0 * rng.random::<f64>();
            let delta = (ratio * (v_high - v_low)).sqrt();
            let p = Primitives::new(-0.5, -0.5 + delta, 10.0, v_low, v_high, mu0);
            let c = compare_ban(&p).unwrap();
            assert!(c.welfare_delta >= -1e-12, "{p:?}");
            assert_eq!(c.welfare_delta > 1e-9, mu0 > vr, "{p:?}");
        }
    }

    #[test]
    fn ban_leaves_producer_and_consumers_unchanged() {
        for p in [p1(), p2(), p3(), p4(), p5()] {
            let c = compare_ban(&p).unwrap();
            assert!((c.with_trade.producer - c.without_trade.producer).abs() < 1e-12);
            let with_consumers = c.with_trade.consumer_high + c.with_trade.consumer_low;
            let without_consumers = c.without_trade.consumer_high + c.without_trade.consumer_low;
            assert!((with_consumers - without_consumers).abs() < 1e-12);
        }
    }

    #[test]
    fn efficiency_fixtures() {
        let opts = SolveOptions::default();
        let m1 = solve_general(&p1(), &opts).unwrap().mechanism;
        let e = efficiency_check(&p1(), &m1);
        assert!(e.efficient && e.gap.abs() < 1e-12);

        let m3 = solve_general(&p3(), &opts).unwrap().mechanism;
        let e = efficiency_check(&p3(), &m3);
        assert!(!e.efficient);
        assert!((e.gap - 0.2).abs() < 1e-12, "11.6 - 11.4, got {}", e.gap);

        let m4 = solve_general(&p4(), &opts).unwrap().mechanism;
        assert!(efficiency_check(&p4(), &m4).efficient);
    }

    #[test]
    fn privacy_and_disclosure_flags() {
        assert!(!full_privacy_optimal(&p1()).unwrap());
        assert!(full_privacy_optimal(&p4()).unwrap());
        assert!(full_privacy_optimal(&p5()).unwrap());

        assert!(full_disclosure_optimal(&p1()).unwrap());
        assert!(full_disclosure_optimal(&p2()).unwrap());
        assert!(!full_disclosure_optimal(&p3()).unwrap());
        assert!(full_disclosure_optimal(&p4()).unwrap());
        assert!(!full_disclosure_optimal(&p5()).unwrap());
    }

    #[test]
    fn beta_sweep_constant_columns() {
        let betas = [0.25, 0.5, 0.75, 1.0];
        let rows = beta_sweep(&p1(), &betas).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!((row.intermediary - 10.4).abs() < 1e-12);
            assert!((row.welfare - rows[0].welfare).abs() < 1e-12);
            assert!((row.producer - rows[0].producer).abs() < 1e-12);
            assert!((row.consumers - rows[0].consumers).abs() < 1e-12);
            assert!(row.data_revenue.abs() < 1e-12);
        }

        let rows = beta_sweep(&p4(), &betas).unwrap();
        for row in &rows {
            assert!((row.intermediary - 10.0).abs() < 1e-12);
            if row.beta < 1.0 {
                assert_eq!(row.pi_lh, 1.0);
            }
        }

        let rows = beta_sweep(&p3(), &[0.5]).unwrap();
        assert!((rows[0].pi_lh - 0.5).abs() < 1e-12);
        assert!((rows[0].welfare - 11.4).abs() < 1e-12);
    }

    #[test]
    fn surplus_table_reproduces_fixture_rows() {
        let rows = surplus_table(&[p1(), p2(), p4()]).unwrap();
        assert!((rows[0].with_intermediary - 10.4).abs() < 1e-12);
        assert!((rows[0].with_producer - 1.2).abs() < 1e-12);
        assert!(rows[0].with_consumers.abs() < 1e-12);
        assert!((rows[0].without_intermediary - 10.0).abs() < 1e-12);

        assert!((rows[1].with_intermediary - 10.35).abs() < 1e-4);

        assert!((rows[2].with_intermediary - 10.0).abs() < 1e-12);
        assert!((rows[2].with_producer - 1.0).abs() < 1e-12);
        assert!((rows[2].with_consumers - 0.3).abs() < 1e-12);
        assert!((rows[2].without_consumers - 0.3).abs() < 1e-12);
    }
}
