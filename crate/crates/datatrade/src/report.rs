//! Deterministic report emission: 12-significant-digit numeric formatting,
//! JSON rounding, fixed-column CSV tables, and the regime-map sweep over
//! `(mu0, delta^2/dv)`.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::closed_form::{
    classify_regime, solve_boundary, solve_general, BoundarySolutions, Regime, RegimeTag,
    SolutionBundle, SolveError, SolveOptions,
};
use crate::model::{surplus_breakdown, ModelError, Primitives};
use crate::oracle::VerificationReport;
use crate::policy::{BanComparison, BetaSweepRow, SurplusTableRow};

/// Significant digits carried by all emitted numbers; coarse enough to be
/// stable across runs, fine enough to assert 1e-9 tolerances from text.
pub const SIG_DIGITS: i32 = 12;

/// Rounds to `sig` significant decimal digits.
pub fn round_sig(x: f64, sig: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(sig - 1 - magnitude);
    (x * factor).round() / factor
}

/// Shortest decimal form of the value rounded to [`SIG_DIGITS`].
pub fn fmt_sig(x: f64) -> String {
    format!("{}", round_sig(x, SIG_DIGITS))
}

fn round_json_numbers(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(f, SIG_DIGITS)) {
                        *v = Value::Number(rounded);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json_numbers),
        Value::Object(map) => map.values_mut().for_each(round_json_numbers),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to [`SIG_DIGITS`].
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize infallibly");
    round_json_numbers(&mut v);
    let mut out = serde_json::to_string_pretty(&v).expect("json value prints");
    out.push('\n');
    out
}

/// Inclusive range with a fixed number of grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl RangeSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.steps.max(2);
        (0..n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Grid specification for the regime map: prior on one axis, taste-spread
/// ratio on the other, realized by varying `H` with everything else fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub mu0_range: RangeSpec,
    pub ratio_range: RangeSpec,
    pub base: Primitives,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |field, reason| Err(ModelError::InvalidPrimitives { field, reason });
        for (field, r) in [("mu0_range", &self.mu0_range), ("ratio_range", &self.ratio_range)] {
            if r.steps < 2 {
                return err(field, "needs at least 2 steps");
            }
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return err(field, "bounds must be finite with lo <= hi");
            }
        }
        if !(self.mu0_range.lo > 0.0 && self.mu0_range.hi < 1.0) {
            return err("mu0_range", "must stay strictly inside (0, 1)");
        }
        if self.ratio_range.lo <= 0.0 {
            return err("ratio_range", "ratios must be positive");
        }
        self.base.validate()
    }

    /// The economy at one grid cell: `H = L + sqrt(ratio * dv)` so the
    /// realized `delta^2/dv` hits the requested ratio.
    pub fn cell(&self, mu0: f64, ratio: f64) -> Primitives {
        let dv = self.base.value_high - self.base.value_low;
        Primitives {
            taste_high: self.base.taste_low + (ratio * dv).sqrt(),
            prior_high: mu0,
            ..self.base
        }
    }
}

/// One cell of the regime map. Boundary cells carry the `Boundary` tag and
/// the values of the larger-welfare branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeMapRow {
    pub mu0: f64,
    pub ratio: f64,
    pub regime: RegimeTag,
    #[serde(rename = "pi_lL")]
    pub pi_ll: f64,
    #[serde(rename = "pi_lH_lo")]
    pub pi_lh_lo: f64,
    #[serde(rename = "pi_lH_hi")]
    pub pi_lh_hi: f64,
    #[serde(rename = "x_L")]
    pub x_low: f64,
    pub intermediary: f64,
    pub producer: f64,
    pub consumers: f64,
    pub welfare: f64,
    pub welfare_ban: f64,
}

fn map_cell(p: &Primitives, mu0: f64, ratio: f64) -> Result<RegimeMapRow, SolveError> {
    let opts = SolveOptions::default();
    let regime = classify_regime(p)?;
    let bundle = if regime.tag == RegimeTag::Boundary {
        let BoundarySolutions {
            large_branch,
            small_branch,
            ..
        } = solve_boundary(p, &opts)?;
        if large_branch.welfare >= small_branch.welfare {
            large_branch
        } else {
            small_branch
        }
    } else {
        solve_general(p, &opts)?
    };
    let s = surplus_breakdown(p, &bundle.mechanism, 1.0);
    let ban = crate::closed_form::solve_no_data_market(p)?;
    Ok(RegimeMapRow {
        mu0,
        ratio,
        regime: regime.tag,
        pi_ll: bundle.mechanism.disclose_low,
        pi_lh_lo: bundle.pi_lh_interval[0],
        pi_lh_hi: bundle.pi_lh_interval[1],
        x_low: bundle.mechanism.service_low,
        intermediary: s.intermediary,
        producer: s.producer,
        consumers: s.consumer_high + s.consumer_low,
        welfare: s.welfare,
        welfare_ban: ban.welfare,
    })
}

/// Solves every grid cell, rows ordered by `(mu0, ratio)` regardless of the
/// parallel evaluation order.
pub fn regime_map(spec: &SweepSpec) -> Result<Vec<RegimeMapRow>, SolveError> {
    spec.validate()?;
    let mu0s = spec.mu0_range.points();
    let ratios = spec.ratio_range.points();
    let cells: Vec<(f64, f64)> = mu0s
        .iter()
        .flat_map(|&m| ratios.iter().map(move |&r| (m, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(mu0, ratio)| map_cell(&spec.cell(mu0, ratio), mu0, ratio))
        .collect()
}

pub const REGIME_MAP_HEADER: &str =
    "mu0,ratio,regime,pi_lL,pi_lH_lo,pi_lH_hi,x_L,intermediary,producer,consumers,welfare,welfare_ban";

pub fn regime_map_csv(rows: &[RegimeMapRow]) -> String {
    let mut out = String::from(REGIME_MAP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig(r.mu0),
            fmt_sig(r.ratio),
            r.regime.as_str(),
            fmt_sig(r.pi_ll),
            fmt_sig(r.pi_lh_lo),
            fmt_sig(r.pi_lh_hi),
            fmt_sig(r.x_low),
            fmt_sig(r.intermediary),
            fmt_sig(r.producer),
            fmt_sig(r.consumers),
            fmt_sig(r.welfare),
            fmt_sig(r.welfare_ban),
        ));
    }
    out
}

pub fn classify_csv(regime: &Regime) -> String {
    let t = regime.thresholds;
    format!(
        "regime,ratio,dv_share,value_ratio,mu0\n{},{},{},{},{}\n",
        regime.tag.as_str(),
        fmt_sig(t.ratio),
        fmt_sig(t.dv_share),
        fmt_sig(t.value_ratio),
        fmt_sig(t.mu0),
    )
}

const BUNDLE_HEADER: &str =
    "regime,x_L,x_H,f_L,f_H,pi_lL,pi_lH,T,pi_lH_lo,pi_lH_hi,payoff,welfare";

fn bundle_row(b: &SolutionBundle) -> String {
    let m = &b.mechanism;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        b.regime.tag.as_str(),
        fmt_sig(m.service_low),
        fmt_sig(m.service_high),
        fmt_sig(m.fee_low),
        fmt_sig(m.fee_high),
        fmt_sig(m.disclose_low),
        fmt_sig(m.disclose_high),
        fmt_sig(m.data_fee),
        fmt_sig(b.pi_lh_interval[0]),
        fmt_sig(b.pi_lh_interval[1]),
        fmt_sig(b.payoff),
        fmt_sig(b.welfare),
    )
}

pub fn bundle_csv(b: &SolutionBundle) -> String {
    format!("{BUNDLE_HEADER}\n{}\n", bundle_row(b))
}

pub fn boundary_csv(both: &BoundarySolutions) -> String {
    format!(
        "branch,{BUNDLE_HEADER}\nlarge,{}\nsmall,{}\n",
        bundle_row(&both.large_branch),
        bundle_row(&both.small_branch),
    )
}

pub fn verification_csv(v: &VerificationReport) -> String {
    format!(
        "agree,closed_payoff,oracle_payoff,gap\n{},{},{},{}\n",
        v.agree,
        fmt_sig(v.closed_payoff),
        fmt_sig(v.oracle_payoff),
        fmt_sig(v.gap),
    )
}

pub fn ban_csv(c: &BanComparison) -> String {
    let verdict = match c.verdict {
        crate::policy::BanVerdict::BanReducesWelfare => "ban_reduces_welfare",
        crate::policy::BanVerdict::BanNeutral => "ban_neutral",
    };
    format!(
        "verdict,welfare_delta,with_welfare,without_welfare\n{verdict},{},{},{}\n",
        fmt_sig(c.welfare_delta),
        fmt_sig(c.with_trade.welfare),
        fmt_sig(c.without_trade.welfare),
    )
}

pub fn beta_sweep_csv(rows: &[BetaSweepRow]) -> String {
    let mut out =
        String::from("beta,pi_lL,pi_lH,intermediary,producer,consumers,welfare,data_revenue\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_sig(r.beta),
            fmt_sig(r.pi_ll),
            fmt_sig(r.pi_lh),
            fmt_sig(r.intermediary),
            fmt_sig(r.producer),
            fmt_sig(r.consumers),
            fmt_sig(r.welfare),
            fmt_sig(r.data_revenue),
        ));
    }
    out
}

pub fn surplus_table_csv(rows: &[SurplusTableRow]) -> String {
    let mut out = String::from(
        "mu0,ratio,regime,with_intermediary,with_producer,with_consumers,\
         without_intermediary,without_producer,without_consumers\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            fmt_sig(r.mu0),
            fmt_sig(r.ratio),
            r.regime.as_str(),
            fmt_sig(r.with_intermediary),
            fmt_sig(r.with_producer),
            fmt_sig(r.with_consumers),
            fmt_sig(r.without_intermediary),
            fmt_sig(r.without_producer),
            fmt_sig(r.without_consumers),
        ));
    }
    out
}
