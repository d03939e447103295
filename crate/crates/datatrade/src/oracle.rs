//! Independent numerical verification. Re-solves the intermediary's full
//! constrained program by exhaustive grid search over provisions and
//! disclosure probabilities, with an exact inner solver for the two service
//! fees, never consulting the closed forms.

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{
    solve_bargaining, solve_boundary, solve_general, RegimeTag, ServiceSpace, SolveError,
    SolveOptions,
};
use crate::model::{derive_constants, obedience_slack, Mechanism, ModelError, Primitives};

/// Search-grid configuration. Spans are half-widths below `L` (for `x_L`)
/// and above `H` (for `x_H`); each refinement round shrinks the pitch by 10x
/// around the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub step: f64,
    pub refine_rounds: u32,
    #[serde(rename = "x_span_L")]
    pub x_span_low: f64,
    #[serde(rename = "x_span_H")]
    pub x_span_high: f64,
    pub beta: f64,
    #[serde(skip)]
    pub service_space: ServiceSpace,
}

impl GridSpec {
    /// Default spec: pitch 0.02, three refinement rounds, and spans
    /// `(dv + delta^2)/delta + 1` wide enough to cover both closed-form
    /// distortions without encoding them.
    pub fn for_primitives(p: &Primitives, beta: f64) -> Self {
        let dc = p.constants();
        let span = (dc.dv + dc.delta * dc.delta) / dc.delta + 1.0;
        Self {
            step: 0.02,
            refine_rounds: 3,
            x_span_low: span,
            x_span_high: span,
            beta,
            service_space: ServiceSpace::General,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |field, reason| Err(ModelError::InvalidPrimitives { field, reason });
        if !(self.step > 0.0 && self.step.is_finite()) {
            return err("step", "must be positive");
        }
        if !(self.x_span_low > 0.0 && self.x_span_high > 0.0) {
            return err("x_span", "spans must be positive");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return err("beta", "must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Which expandable search edges the incumbent landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BoundaryHit {
    #[serde(rename = "x_L")]
    pub x_low: bool,
    #[serde(rename = "x_H")]
    pub x_high: bool,
}

/// Best mechanism found by the grid search and search metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best: Mechanism,
    pub payoff: f64,
    pub evaluations: u64,
    pub boundary_hit: BoundaryHit,
}

/// Componentwise-maximal feasible fee pair for fixed provisions and
/// disclosure, or `None` when the incentive polytope is empty.
///
/// The four fee constraints are difference constraints plus upper bounds, so
/// the feasible set is a lattice whose top element maximizes any
/// positive-weight fee objective:
/// `f_H = min(D_H, D_L + A)`, `f_L = min(D_L, D_H + B)` with
/// `A` the IC_H bound on `f_H - f_L`, `B` the IC_L bound on `f_L - f_H`,
/// and `D_H`, `D_L` the participation bounds. Infeasible iff `A + B < 0`.
pub fn optimal_fees_given(
    p: &Primitives,
    service_low: f64,
    service_high: f64,
    disclose_low: f64,
    disclose_high: f64,
) -> Option<(f64, f64)> {
    let dc = p.constants();
    let a = (service_low - p.taste_high).powi(2) - (service_high - p.taste_high).powi(2)
        + (disclose_high - disclose_low) * dc.dv;
    let b = (service_high - p.taste_low).powi(2) - (service_low - p.taste_low).powi(2);
    if a + b < 0.0 {
        return None;
    }
    let d_low = p.base_utility - (service_low - p.taste_low).powi(2);
    let d_high = p.base_utility - (service_high - p.taste_high).powi(2)
        + disclose_high * dc.dv
        - dc.outside_high;
    Some((f64::min(d_low, d_high + b), f64::min(d_high, d_low + a)))
}

/// One grid point strictly preferred over another: higher payoff, ties broken
/// by lexicographically smaller `(x_L, x_H, pi_lL, pi_lH)`.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    payoff: f64,
    key: [f64; 4],
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.payoff != b.payoff {
        return a.payoff > b.payoff;
    }
    for (x, y) in a.key.iter().zip(b.key.iter()) {
        if x != y {
            return x < y;
        }
    }
    false
}

fn merge(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if better(&y, &x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Evaluates every cell of the axis product and returns the best candidate
/// plus the number of objective evaluations.
fn search_cells(
    p: &Primitives,
    beta: f64,
    xl_vals: &[f64],
    xh_vals: &[f64],
    pll_vals: &[f64],
    plh_vals: &[f64],
) -> (Option<Candidate>, u64) {
    let dc = p.constants();
    let mu = p.prior_high;
    let one_mu = 1.0 - mu;
    let n_lh = plh_vals.len();

    // Per disclosure pair: the fee-difference shift, the trade gain, and the
    // largest obedient pi(l|H) index for each pi(l|L).
    let mut pair_shift = vec![0.0f64; pll_vals.len() * n_lh];
    let mut pair_gain = vec![0.0f64; pll_vals.len() * n_lh];
    let mut ob_limit = vec![usize::MAX; pll_vals.len()];
    for (i, &pll) in pll_vals.iter().enumerate() {
        let mut limit = usize::MAX;
        for (j, &plh) in plh_vals.iter().enumerate() {
            pair_shift[i * n_lh + j] = (plh - pll) * dc.dv;
            pair_gain[i * n_lh + j] =
                (mu * plh + one_mu * pll) * p.value_low + mu * (1.0 - plh) * p.value_high - dc.r0;
            if obedience_slack(p, pll, plh) >= -1e-12 {
                limit = j;
            }
        }
        // Obedience tightens as pi(l|H) grows, so the feasible set is a prefix.
        ob_limit[i] = limit;
    }
    let high_dv: Vec<f64> = plh_vals.iter().map(|&plh| plh * dc.dv).collect();

    xl_vals
        .par_iter()
        .map(|&xl| {
            let sq_ll = (xl - p.taste_low).powi(2);
            let sq_lh = (xl - p.taste_high).powi(2);
            let d_low = p.base_utility - sq_ll;
            let mut best: Option<Candidate> = None;
            let mut count = 0u64;
            for &xh in xh_vals {
                let sq_hh = (xh - p.taste_high).powi(2);
                let sq_hl = (xh - p.taste_low).powi(2);
                let a_base = sq_lh - sq_hh;
                let b = sq_hl - sq_ll;
                let dh_base = p.base_utility - sq_hh - dc.outside_high;
                for (i, &pll) in pll_vals.iter().enumerate() {
                    let limit = ob_limit[i];
                    if limit == usize::MAX {
                        continue;
                    }
                    for j in 0..=limit {
                        let a = a_base + pair_shift[i * n_lh + j];
                        if a + b < 0.0 {
                            continue;
                        }
                        count += 1;
                        let d_high = dh_base + high_dv[j];
                        let fee_high = f64::min(d_high, d_low + a);
                        let fee_low = f64::min(d_low, d_high + b);
                        let payoff =
                            mu * fee_high + one_mu * fee_low + beta * pair_gain[i * n_lh + j];
                        let cand = Candidate {
                            payoff,
                            key: [xl, xh, pll, plh_vals[j]],
                        };
                        if best.as_ref().is_none_or(|cur| better(&cand, cur)) {
                            best = Some(cand);
                        }
                    }
                }
            }
            (best, count)
        })
        .reduce(
            || (None, 0),
            |(a, ca), (b, cb)| (merge(a, b), ca + cb),
        )
}

fn descending_axis(top: f64, span: f64, step: f64) -> Vec<f64> {
    let n = (span / step).ceil().max(1.0) as i64;
    (0..=n).map(|k| top - (n - k) as f64 * step).collect()
}

fn ascending_axis(bottom: f64, span: f64, step: f64) -> Vec<f64> {
    let n = (span / step).ceil().max(1.0) as i64;
    (0..=n).map(|k| bottom + k as f64 * step).collect()
}

fn unit_axis(step: f64) -> Vec<f64> {
    let n = (1.0 / step).ceil() as i64;
    let mut vals: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(1.0)).collect();
    vals.dedup();
    vals
}

fn local_axis(center: f64, half_width: f64, step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let m = (half_width / step).round().max(1.0) as i64;
    (-m..=m)
        .map(|j| center + j as f64 * step)
        .filter(|v| *v >= lo - 1e-15 && *v <= hi + 1e-15)
        .map(|v| v.clamp(lo, hi))
        .collect()
}

/// Exhaustive grid search over `(x_L, x_H, pi(l|L), pi(l|H))` with exact
/// inner fees, obedience as a hard filter, local refinement around the
/// incumbent, and automatic span doubling when the incumbent lands on an
/// expandable edge.
///
/// Deterministic: ties break toward lexicographically smaller coordinates
/// regardless of evaluation order.
pub fn grid_solve(p: &Primitives, spec: &GridSpec) -> Result<OracleResult, ModelError> {
    let dc = derive_constants(p)?;
    spec.validate()?;
    let binary = spec.service_space == ServiceSpace::Binary;

    let pll_vals = unit_axis(spec.step);
    let plh_vals = pll_vals.clone();

    let mut span_low = spec.x_span_low;
    let mut span_high = spec.x_span_high;
    let mut evaluations = 0u64;
    let mut doublings = 0;
    let (mut incumbent, hit) = loop {
        let xl_vals = if binary {
            vec![p.taste_low]
        } else {
            descending_axis(p.taste_low, span_low, spec.step)
        };
        let xh_vals = if binary {
            vec![p.taste_high]
        } else {
            ascending_axis(p.taste_high, span_high, spec.step)
        };
        let (best, count) = search_cells(p, spec.beta, &xl_vals, &xh_vals, &pll_vals, &plh_vals);
        evaluations += count;
        let best = best.expect("the no-trade point is always feasible");
        let hit = BoundaryHit {
            x_low: !binary && best.key[0] <= xl_vals[0] + 0.5 * spec.step,
            x_high: !binary && best.key[1] >= xh_vals[xh_vals.len() - 1] - 0.5 * spec.step,
        };
        if (hit.x_low || hit.x_high) && doublings < 3 {
            if hit.x_low {
                span_low *= 2.0;
            }
            if hit.x_high {
                span_high *= 2.0;
            }
            doublings += 1;
            continue;
        }
        break (best, hit);
    };

    let mut pitch = spec.step;
    for _ in 0..spec.refine_rounds {
        let fine = pitch * 0.1;
        let window = 2.0 * pitch;
        let xl_vals = if binary {
            vec![p.taste_low]
        } else {
            local_axis(
                incumbent.key[0],
                window,
                fine,
                p.taste_low - span_low,
                p.taste_low,
            )
        };
        let xh_vals = if binary {
            vec![p.taste_high]
        } else {
            local_axis(
                incumbent.key[1],
                window,
                fine,
                p.taste_high,
                p.taste_high + span_high,
            )
        };
        let pll_local = local_axis(incumbent.key[2], window, fine, 0.0, 1.0);
        let plh_local = local_axis(incumbent.key[3], window, fine, 0.0, 1.0);
        let (best, count) = search_cells(p, spec.beta, &xl_vals, &xh_vals, &pll_local, &plh_local);
        evaluations += count;
        if let Some(cand) = best {
            if better(&cand, &incumbent) {
                incumbent = cand;
            }
        }
        pitch = fine;
    }

    let [service_low, service_high, disclose_low, disclose_high] = incumbent.key;
    let (fee_low, fee_high) =
        optimal_fees_given(p, service_low, service_high, disclose_low, disclose_high)
            .expect("incumbent survived the feasibility filter");
    let mut best = Mechanism {
        service_low,
        service_high,
        fee_low,
        fee_high,
        disclose_low,
        disclose_high,
        data_fee: 0.0,
    };
    best.data_fee = spec.beta * (crate::model::producer_revenue(p, &best) - dc.r0);
    Ok(OracleResult {
        best,
        payoff: incumbent.payoff,
        evaluations,
        boundary_hit: hit,
    })
}

/// Oracle-vs-closed-form agreement for one economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationReport {
    pub agree: bool,
    pub closed_payoff: f64,
    pub oracle_payoff: f64,
    /// Signed `closed_payoff - oracle_payoff`.
    pub gap: f64,
}

/// Runs the grid oracle against the closed-form payoff. Agreement requires
/// the gap within `tol` in both directions: the oracle must reach the closed
/// form (grid fine enough) and must not beat it (closed form optimal). On the
/// knife edge both branch solutions are evaluated and the larger payoff must
/// agree.
pub fn verify_closed_form(
    p: &Primitives,
    beta: f64,
    tol: f64,
    step: f64,
    refine_rounds: u32,
) -> Result<VerificationReport, SolveError> {
    let regime = crate::closed_form::classify_regime(p)?;
    let opts = SolveOptions::default();
    let closed_payoff = if regime.tag == RegimeTag::Boundary {
        let both = solve_boundary(p, &opts)?;
        f64::max(both.large_branch.payoff, both.small_branch.payoff)
    } else if beta == 1.0 {
        solve_general(p, &opts)?.payoff
    } else {
        solve_bargaining(p, beta, &opts)?.payoff
    };
    let spec = GridSpec {
        step,
        refine_rounds,
        ..GridSpec::for_primitives(p, beta)
    };
    let oracle = grid_solve(p, &spec)?;
    let gap = closed_payoff - oracle.payoff;
    Ok(VerificationReport {
        agree: gap.abs() <= tol,
        closed_payoff,
        oracle_payoff: oracle.payoff,
        gap,
    })
}
