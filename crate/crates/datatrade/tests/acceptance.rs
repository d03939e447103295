//! Acceptance suite. One test per criterion; each prints a PASS line after
//! its assertions (run with `--nocapture` to see them).
//!
//! Expected values come from independent routes: a literal transcription of
//! the closed-form formulas (criterion 1), the grid oracle (criterion 2),
//! and direct constraint/identity algebra elsewhere.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use datatrade::closed_form::{
    classify_regime, pi_h_interval, solve_bargaining, solve_binary_service, solve_general,
    RegimeTag, Selection, SolutionBundle, SolveOptions,
};
use datatrade::fixtures;
use datatrade::model::{
    check_constraints, obedience_slack, producer_revenue, surplus_breakdown,
    trade_gain_decomposition, ConstraintName, Mechanism, Primitives,
};
use datatrade::oracle::verify_closed_form;
use datatrade::policy::{beta_sweep, compare_ban, full_disclosure_optimal, full_privacy_optimal};
use datatrade::report::{RangeSpec, SweepSpec};
use datatrade::sim::simulate;

fn pass(criterion: u32, label: &str) {
    println!("[acceptance] criterion {criterion} ({label}): PASS");
}

/// Everything the closed form pins down at its optimum, evaluated directly
/// from the primitives without touching the solver.
struct Direct {
    x_low: f64,
    x_high: f64,
    fee_low: f64,
    fee_high: f64,
    pi_ll: f64,
    pi_lh: f64,
    data_fee: f64,
    interval: [f64; 2],
    payoff: f64,
    welfare: f64,
}

fn direct_formulas(p: &Primitives, binary: bool) -> Direct {
    let (l, h, v) = (p.taste_low, p.taste_high, p.base_utility);
    let (vl, vh, mu) = (p.value_low, p.value_high, p.prior_high);
    let delta = h - l;
    let dv = vh - vl;
    let ratio = delta * delta / dv;
    let c = (1.0 - mu) * vl / (mu * dv);
    if mu > vl / vh {
        let (shift, pi_ll, stated_payoff) = if binary {
            let pi_ll = f64::min(ratio, 1.0);
            (0.0, pi_ll, v + (1.0 - mu) * vl * pi_ll)
        } else if ratio >= 1.0 {
            (0.0, 1.0, v + (1.0 - mu) * vl)
        } else if ratio > dv / (vl + vh) {
            let shift = (dv - delta * delta) / (2.0 * delta);
            (shift, 1.0, v + (1.0 - mu) * vl - (1.0 - mu) * shift * shift)
        } else {
            let shift = delta * vl / dv;
            let pi_ll = ratio * (vh + vl) / dv;
            (
                shift,
                pi_ll,
                v + (1.0 - mu) * (delta / dv) * (delta / dv) * vl * vh,
            )
        };
        let interval = [0.0, c * pi_ll];
        let pi_lh = interval[1];
        Direct {
            x_low: l - shift,
            x_high: h,
            fee_low: v - shift * shift,
            fee_high: v + pi_lh * dv,
            pi_ll,
            pi_lh,
            data_fee: -mu * pi_lh * dv + (1.0 - mu) * vl * pi_ll,
            interval,
            payoff: stated_payoff,
            welfare: stated_payoff + mu * vh,
        }
    } else {
        let interval = [f64::max(1.0 - ratio, 0.0), 1.0];
        let pi_lh = 1.0;
        Direct {
            x_low: l,
            x_high: h,
            fee_low: v,
            fee_high: v + (pi_lh - 1.0) * dv,
            pi_ll: 1.0,
            pi_lh,
            data_fee: mu * (1.0 - pi_lh) * dv,
            interval,
            payoff: v,
            welfare: v + (1.0 - mu) * vl + mu * vh,
        }
    }
}

fn assert_matches_direct(bundle: &SolutionBundle, direct: &Direct, tag: &str) {
    let m = &bundle.mechanism;
    let checks = [
        ("x_L", m.service_low, direct.x_low),
        ("x_H", m.service_high, direct.x_high),
        ("f_L", m.fee_low, direct.fee_low),
        ("f_H", m.fee_high, direct.fee_high),
        ("pi_lL", m.disclose_low, direct.pi_ll),
        ("pi_lH", m.disclose_high, direct.pi_lh),
        ("T", m.data_fee, direct.data_fee),
        ("pi_lH_lo", bundle.pi_lh_interval[0], direct.interval[0]),
        ("pi_lH_hi", bundle.pi_lh_interval[1], direct.interval[1]),
        ("payoff", bundle.payoff, direct.payoff),
        ("welfare", bundle.welfare, direct.welfare),
    ];
    for (name, got, want) in checks {
        assert!(
            (got - want).abs() <= 1e-12,
            "{tag}: {name} = {got}, direct formula gives {want}"
        );
    }
}

#[test]
fn criterion_01_closed_form_reproduction() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    for (i, p) in fixtures::all().iter().enumerate() {
        let general = solve_general(p, &opts).unwrap();
        assert_matches_direct(&general, &direct_formulas(p, false), &format!("P{} general", i + 1));
        let binary = solve_binary_service(p, &opts).unwrap();
        assert_matches_direct(&binary, &direct_formulas(p, true), &format!("P{} binary", i + 1));
    }
    // Spot-check the frozen fixture values at their stated precision.
    let b = solve_general(&fixtures::p1(), &opts).unwrap();
    assert!((b.payoff - 10.4).abs() < 1e-12 && (b.welfare - 11.6).abs() < 1e-12);
    let b = solve_general(&fixtures::p2(), &opts).unwrap();
    assert!((b.mechanism.service_low + 0.35355).abs() < 1e-4);
    assert!((b.mechanism.fee_low - 9.875).abs() < 1e-4 && (b.payoff - 10.35).abs() < 1e-4);
    let b = solve_general(&fixtures::p3(), &opts).unwrap();
    assert!((b.mechanism.service_low + 0.5).abs() < 1e-12 && (b.payoff - 10.2).abs() < 1e-12);
    let b = solve_general(&fixtures::p4(), &opts).unwrap();
    assert!((b.payoff - 10.0).abs() < 1e-12 && (b.welfare - 11.3).abs() < 1e-12);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    pass(1, "closed-form reproduction, P1-P5, general + binary");
}

/// Draws one economy inside the requested regime; V = 10 throughout.
fn draw_in_regime(tag: RegimeTag, rng: &mut ChaCha8Rng) -> Primitives {
    loop {
        let vl = 0.6 + 0.8 * rng.random::<f64>();
        let dv = 0.6 + 1.0 * rng.random::<f64>();
        let vh = vl + dv;
        let vr = vl / vh;
        let thr = dv / (vl + vh);
        let (large, ratio) = match tag {
            RegimeTag::LargeMuNoDist => (true, 1.0 + 1.5 * rng.random::<f64>()),
            RegimeTag::LargeMuMidDist => (
                true,
                thr + (0.98 - thr) * (0.1 + 0.85 * rng.random::<f64>()),
            ),
            RegimeTag::LargeMuDeepDist => (true, thr * (0.45 + 0.45 * rng.random::<f64>())),
            RegimeTag::SmallMuHighDelta => (false, 1.0 + 1.5 * rng.random::<f64>()),
            RegimeTag::SmallMuLowDelta => (false, 0.3 + 0.6 * rng.random::<f64>()),
            RegimeTag::Boundary => unreachable!("never drawn"),
        };
        let mu = if large {
            vr + (0.95 - vr) * (0.15 + 0.8 * rng.random::<f64>())
        } else {
            0.05 + (vr - 0.1) * rng.random::<f64>()
        };
        let taste_low = -1.0 + 2.0 * rng.random::<f64>();
        let p = Primitives::new(
            taste_low,
            taste_low + (ratio * dv).sqrt(),
            10.0,
            vl,
            vh,
            mu,
        );
        if classify_regime(&p).unwrap().tag == tag {
            return p;
        }
    }
}

#[test]
fn criterion_02_oracle_equivalence() {
    let start = Instant::now();
    let mut cases: Vec<Primitives> = fixtures::all().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(90210);
    for tag in [
        RegimeTag::LargeMuNoDist,
        RegimeTag::LargeMuMidDist,
        RegimeTag::LargeMuDeepDist,
        RegimeTag::SmallMuHighDelta,
        RegimeTag::SmallMuLowDelta,
    ] {
        for _ in 0..4 {
            cases.push(draw_in_regime(tag, &mut rng));
        }
    }
    assert_eq!(cases.len(), 25);
    for p in &cases {
        for beta in [1.0, 0.5] {
            let report = verify_closed_form(p, beta, 5e-3, 0.02, 3).unwrap();
            assert!(
                report.agree,
                "oracle disagrees on {p:?} at beta {beta}: {report:?}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    pass(2, "oracle equivalence on 25 economies x 2 betas");
}

#[test]
fn criterion_03_constraint_suite() {
    let opts = SolveOptions::default();
    for p in fixtures::all() {
        let large = classify_regime(&p).unwrap().tag.is_large_mu();
        let mut mechanisms: Vec<(Mechanism, f64, bool)> = vec![
            (solve_general(&p, &opts).unwrap().mechanism, 1.0, false),
            (
                solve_general(&p, &SolveOptions::with_selection(Selection::Lower))
                    .unwrap()
                    .mechanism,
                1.0,
                false,
            ),
            (
                solve_general(&p, &SolveOptions::with_selection(Selection::Midpoint))
                    .unwrap()
                    .mechanism,
                1.0,
                false,
            ),
            (solve_binary_service(&p, &opts).unwrap().mechanism, 1.0, false),
        ];
        for beta in [0.25, 0.5, 0.75] {
            mechanisms.push((
                solve_bargaining(&p, beta, &opts).unwrap().mechanism,
                beta,
                large,
            ));
        }
        for (m, beta, ob_must_bind) in mechanisms {
            let report = check_constraints(&p, &m, beta, 1e-9);
            for record in &report.constraints {
                assert!(
                    record.slack >= -1e-9,
                    "{:?} violated on {p:?}: {record:?}",
                    record.name
                );
            }
            assert!(report.binding(ConstraintName::IrLow, 1e-9), "{p:?}");
            assert!(report.binding(ConstraintName::IrHigh, 1e-9), "{p:?}");
            if ob_must_bind {
                assert!(
                    report.binding(ConstraintName::Obedience, 1e-9),
                    "OB must bind at beta {beta} on {p:?}"
                );
            }
        }
    }
    pass(3, "all constraints hold, IRs bind, OB binds under partial power");
}

#[test]
fn criterion_04_interval_payoff_invariance() {
    for p in [fixtures::p1(), fixtures::p3(), fixtures::p4()] {
        let [lo, hi] = pi_h_interval(&p).unwrap();
        let mut reference = None;
        for k in 0..=10 {
            let value = lo + (hi - lo) * k as f64 / 10.0;
            let bundle = solve_general(
                &p,
                &SolveOptions::with_selection(Selection::Explicit(value)),
            )
            .unwrap();
            let reference = *reference.get_or_insert(bundle.payoff);
            assert!(
                (bundle.payoff - reference).abs() <= 1e-12,
                "payoff varies over the interval on {p:?}: {} vs {reference}",
                bundle.payoff
            );
        }
    }
    pass(4, "payoff constant across 11 points of pi(l|H) interval");
}

#[test]
fn criterion_05_ban_comparison() {
    for (p, expected) in [
        (fixtures::p1(), 0.4),
        (fixtures::p3(), 0.2),
        (fixtures::p4(), 0.0),
    ] {
        let c = compare_ban(&p).unwrap();
        assert!(
            (c.welfare_delta - expected).abs() <= 1e-12,
            "{p:?}: delta {} want {expected}",
            c.welfare_delta
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut draws = 0;
    while draws < 200 {
        let vl = 0.5 + rng.random::<f64>();
        let vh = vl + 0.5 + rng.random::<f64>();
        let vr = vl / vh;
        let mu = 0.05 + 0.9 * rng.random::<f64>();
        if (mu - vr).abs() < 1e-6 {
            continue;
        }
        let ratio = 0.1 + 2.0 * rng.random::<f64>();
        let delta = (ratio * (vh - vl)).sqrt();
        let p = Primitives::new(0.0, delta, 10.0, vl, vh, mu);
        let c = compare_ban(&p).unwrap();
        assert!(c.welfare_delta >= -1e-12, "{p:?}");
        assert_eq!(
            c.welfare_delta > 1e-9,
            mu > vr,
            "{p:?}: delta {}",
            c.welfare_delta
        );
        draws += 1;
    }
    pass(5, "ban deltas exact on fixtures; sign matches prior on 200 draws");
}

#[test]
fn criterion_06_bargaining_sweep() {
    let betas = [0.25, 0.5, 0.75, 1.0];
    for p in [fixtures::p1(), fixtures::p3(), fixtures::p4()] {
        let rows = beta_sweep(&p, &betas).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!((row.intermediary - rows[0].intermediary).abs() <= 1e-12, "{p:?}");
            assert!((row.producer - rows[0].producer).abs() <= 1e-12, "{p:?}");
            assert!((row.consumers - rows[0].consumers).abs() <= 1e-12, "{p:?}");
            assert!((row.welfare - rows[0].welfare).abs() <= 1e-12, "{p:?}");
            if row.beta < 1.0 {
                assert!(row.data_revenue.abs() <= 1e-12, "{p:?}: {}", row.data_revenue);
            }
        }
    }
    pass(6, "surplus columns beta-invariant; zero data revenue below full power");
}

#[test]
fn criterion_07_classification_map() {
    let spec = SweepSpec {
        mu0_range: RangeSpec::new(0.05, 0.95, 50),
        ratio_range: RangeSpec::new(0.04, 2.0, 50),
        base: fixtures::p1(),
    };
    let opts = SolveOptions::default();
    let mut cells = 0;
    for &mu0 in &spec.mu0_range.points() {
        for &ratio in &spec.ratio_range.points() {
            let p = spec.cell(mu0, ratio);
            let regime = classify_regime(&p).unwrap();
            assert_ne!(regime.tag, RegimeTag::Boundary, "grid must avoid the knife edge");
            let bundle = solve_general(&p, &opts).unwrap();
            let [lo, hi] = bundle.pi_lh_interval;
            // Null information: some pi with pi(l|H) = pi(l|L) is optimal.
            let null_member =
                bundle.mechanism.disclose_low >= lo - 1e-12 && bundle.mechanism.disclose_low <= hi + 1e-12;
            assert_eq!(
                full_privacy_optimal(&p).unwrap(),
                null_member,
                "full-privacy flag disagrees with the optimal set at mu0 {mu0} ratio {ratio}"
            );
            // Full information: pi(l|L) = 1 with pi(l|H) = 0 is optimal.
            let full_member = bundle.mechanism.disclose_low >= 1.0 - 1e-12 && lo <= 1e-12;
            assert_eq!(
                full_disclosure_optimal(&p).unwrap(),
                full_member,
                "full-disclosure flag disagrees with the optimal set at mu0 {mu0} ratio {ratio}"
            );
            cells += 1;
        }
    }
    assert_eq!(cells, 2500);
    pass(7, "privacy/disclosure flags match optimal sets on the 50x50 map");
}

#[test]
fn criterion_08_decomposition_and_jensen() {
    let mut rng = ChaCha8Rng::seed_from_u64(8128);
    for p in fixtures::all() {
        let dc = p.constants();
        let full_info = p.prior_high * p.value_high + (1.0 - p.prior_high) * p.value_low;
        let mut accepted = 0;
        while accepted < 1000 {
            let pi_ll: f64 = rng.random();
            let pi_lh: f64 = rng.random();
            let m = Mechanism {
                service_low: p.taste_low,
                service_high: p.taste_high,
                fee_low: p.base_utility,
                fee_high: p.base_utility,
                disclose_low: pi_ll,
                disclose_high: pi_lh,
                data_fee: 0.0,
            };
            // The revenue decomposition is an identity over the whole square.
            let gain = trade_gain_decomposition(&p, &m);
            let revenue = producer_revenue(&p, &m);
            assert!(
                (gain.total - (revenue - dc.r0)).abs() <= 1e-12,
                "{p:?} pi=({pi_ll},{pi_lh})"
            );
            assert!(revenue <= full_info + 1e-12);
            // The lower Jensen bound applies to obedient disclosures.
            if obedience_slack(&p, pi_ll, pi_lh) < 0.0 {
                continue;
            }
            assert!(
                revenue >= dc.r0 - 1e-12,
                "{p:?} pi=({pi_ll},{pi_lh}): {revenue} < {}",
                dc.r0
            );
            accepted += 1;
        }
    }
    pass(8, "revenue decomposition exact and Jensen bounds hold on 1000 draws per fixture");
}

#[test]
fn criterion_09_simulator() {
    let start = Instant::now();
    let opts = SolveOptions::default();
    for p in [fixtures::p1(), fixtures::p4()] {
        let mechanism = solve_general(&p, &opts).unwrap().mechanism;
        let analytic = surplus_breakdown(&p, &mechanism, 1.0);
        let report = simulate(&p, &mechanism, 200_000, 1234);
        let close = |name: &str, mean: f64, se: f64, target: f64| {
            assert!(
                (mean - target).abs() <= 3.0 * se + 1e-9,
                "{name} {mean} vs {target} (se {se}) on {p:?}"
            );
        };
        close(
            "intermediary",
            report.intermediary_profit.mean,
            report.intermediary_profit.std_error,
            analytic.intermediary,
        );
        close(
            "producer",
            report.producer_profit.mean,
            report.producer_profit.std_error,
            analytic.producer,
        );
        close(
            "consumer_H",
            report.consumer_surplus_high.mean,
            report.consumer_surplus_high.std_error,
            analytic.consumer_high,
        );
        close(
            "consumer_L",
            report.consumer_surplus_low.mean,
            report.consumer_surplus_low.std_error,
            analytic.consumer_low,
        );
        assert_eq!(report.acceptance_rate_low.mean, 1.0);
        assert_eq!(report.acceptance_rate_high.mean, 1.0);
        assert_eq!(report.truthful_rate_low.mean, 1.0);
        assert_eq!(report.truthful_rate_high.mean, 1.0);
        assert!(report.obedience_ok_low && report.obedience_ok_high, "{p:?}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass(9, "simulated surpluses within 3 SE; rates exactly 1; obedient prices");
}

#[test]
fn criterion_10_translation_invariance() {
    let opts = SolveOptions::default();
    for p in fixtures::all() {
        let base = solve_general(&p, &opts).unwrap();
        for shift in [-3.0, 1.7] {
            let moved_p = Primitives {
                taste_low: p.taste_low + shift,
                taste_high: p.taste_high + shift,
                ..p
            };
            let moved = solve_general(&moved_p, &opts).unwrap();
            let m = &moved.mechanism;
            let b = &base.mechanism;
            assert!((m.service_low - (b.service_low + shift)).abs() <= 1e-12);
            assert!((m.service_high - (b.service_high + shift)).abs() <= 1e-12);
            for (got, want) in [
                (m.fee_low, b.fee_low),
                (m.fee_high, b.fee_high),
                (m.disclose_low, b.disclose_low),
                (m.disclose_high, b.disclose_high),
                (m.data_fee, b.data_fee),
                (moved.pi_lh_interval[0], base.pi_lh_interval[0]),
                (moved.pi_lh_interval[1], base.pi_lh_interval[1]),
                (moved.payoff, base.payoff),
                (moved.welfare, base.welfare),
            ] {
                assert!((got - want).abs() <= 1e-12, "{p:?} shift {shift}");
            }
        }
    }
    pass(10, "taste shifts move provisions only");
}
