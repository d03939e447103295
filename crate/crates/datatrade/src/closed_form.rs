//! Regime classification and construction of the closed-form optimal
//! mechanisms: full-bargaining-power designs for binary and general service
//! spaces, the partial-bargaining-power design, the no-data-market benchmark,
//! and the knife-edge case that returns both branch solutions.

use serde::Serialize;

use crate::model::{
    derive_constants, intermediary_payoff, producer_revenue, surplus_breakdown, Mechanism,
    ModelError, Primitives,
};

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("mu0 lies on the v_L/v_H knife edge; use solve_boundary")]
    Boundary,
    #[error("solve_boundary requires knife-edge primitives (mu0 = v_L/v_H)")]
    NotBoundary,
    #[error("beta must lie strictly inside (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("explicit pi(l|H) selection {value} outside the admissible interval [{lo}, {hi}]")]
    SelectionOutsideInterval { value: f64, lo: f64, hi: f64 },
}

/// Parameter regions of the optimal-mechanism characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeTag {
    /// `mu0 > v_L/v_H`, `delta^2/dv >= 1`: no service distortion.
    #[serde(rename = "LargeMu_NoDist")]
    LargeMuNoDist,
    /// `mu0 > v_L/v_H`, `dv/(v_L+v_H) < delta^2/dv < 1`: bottom distortion,
    /// full low-type disclosure.
    #[serde(rename = "LargeMu_MidDist")]
    LargeMuMidDist,
    /// `mu0 > v_L/v_H`, `delta^2/dv <= dv/(v_L+v_H)`: bottom distortion and
    /// partial low-type disclosure.
    #[serde(rename = "LargeMu_DeepDist")]
    LargeMuDeepDist,
    /// `mu0 < v_L/v_H`, `delta^2/dv >= 1`.
    #[serde(rename = "SmallMu_HighDelta")]
    SmallMuHighDelta,
    /// `mu0 < v_L/v_H`, `delta^2/dv < 1`.
    #[serde(rename = "SmallMu_LowDelta")]
    SmallMuLowDelta,
    /// `mu0 = v_L/v_H` within the knife-edge band.
    #[serde(rename = "Boundary")]
    Boundary,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::LargeMuNoDist => "LargeMu_NoDist",
            RegimeTag::LargeMuMidDist => "LargeMu_MidDist",
            RegimeTag::LargeMuDeepDist => "LargeMu_DeepDist",
            RegimeTag::SmallMuHighDelta => "SmallMu_HighDelta",
            RegimeTag::SmallMuLowDelta => "SmallMu_LowDelta",
            RegimeTag::Boundary => "Boundary",
        }
    }

    pub fn is_large_mu(&self) -> bool {
        matches!(
            self,
            RegimeTag::LargeMuNoDist | RegimeTag::LargeMuMidDist | RegimeTag::LargeMuDeepDist
        )
    }
}

/// The quantities the classification compares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeThresholds {
    /// `delta^2 / dv`.
    pub ratio: f64,
    /// `dv / (v_L + v_H)`.
    pub dv_share: f64,
    /// `v_L / v_H`.
    pub value_ratio: f64,
    pub mu0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub thresholds: RegimeThresholds,
}

/// Classifies the economy into its optimal-mechanism regime.
pub fn classify_regime(p: &Primitives) -> Result<Regime, ModelError> {
    let dc = derive_constants(p)?;
    let thresholds = RegimeThresholds {
        ratio: dc.distortion_ratio(),
        dv_share: dc.dv / (p.value_low + p.value_high),
        value_ratio: p.value_low / p.value_high,
        mu0: p.prior_high,
    };
    let tag = if dc.boundary {
        RegimeTag::Boundary
    } else if p.prior_high > thresholds.value_ratio {
        if thresholds.ratio >= 1.0 {
            RegimeTag::LargeMuNoDist
        } else if thresholds.ratio > thresholds.dv_share {
            RegimeTag::LargeMuMidDist
        } else {
            RegimeTag::LargeMuDeepDist
        }
    } else if thresholds.ratio >= 1.0 {
        RegimeTag::SmallMuHighDelta
    } else {
        RegimeTag::SmallMuLowDelta
    };
    Ok(Regime { tag, thresholds })
}

/// Picks a point from the set-valued `pi(l|H)`.
///
/// The default is the upper endpoint: it is the limit of the unique
/// partial-bargaining-power solution as the intermediary's power tends to
/// one, which makes full power the continuous limit of partial power.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Selection {
    #[default]
    Upper,
    Lower,
    Midpoint,
    Explicit(f64),
}

impl Selection {
    fn resolve(&self, lo: f64, hi: f64) -> Result<f64, SolveError> {
        match *self {
            Selection::Upper => Ok(hi),
            Selection::Lower => Ok(lo),
            Selection::Midpoint => Ok(0.5 * (lo + hi)),
            Selection::Explicit(value) => {
                if value < lo - 1e-12 || value > hi + 1e-12 {
                    Err(SolveError::SelectionOutsideInterval { value, lo, hi })
                } else {
                    Ok(value.clamp(lo, hi))
                }
            }
        }
    }
}

impl std::str::FromStr for Selection {
    type Err = String;

    /// Accepts `upper`, `lower`, `mid`/`midpoint`, or `value=<float>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper" => Ok(Selection::Upper),
            "lower" => Ok(Selection::Lower),
            "mid" | "midpoint" => Ok(Selection::Midpoint),
            _ => match s.strip_prefix("value=") {
                Some(v) => v
                    .parse::<f64>()
                    .map(Selection::Explicit)
                    .map_err(|e| format!("bad explicit selection `{v}`: {e}")),
                None => Err(format!(
                    "unknown selection `{s}` (expected upper|lower|mid|value=<v>)"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ServiceSpace {
    Binary,
    #[default]
    General,
}

impl std::str::FromStr for ServiceSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(ServiceSpace::Binary),
            "general" => Ok(ServiceSpace::General),
            _ => Err(format!("unknown service space `{s}` (expected general|binary)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub selection: Selection,
    pub service_space: ServiceSpace,
}

impl SolveOptions {
    pub fn with_selection(selection: Selection) -> Self {
        Self {
            selection,
            ..Self::default()
        }
    }
}

/// A solved mechanism together with the admissible `pi(l|H)` interval, the
/// regime it came from, and its headline payoff and welfare.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionBundle {
    pub mechanism: Mechanism,
    /// Endpoints of the optimal `pi(l|H)` set at the solved `pi(l|L)`.
    #[serde(rename = "pi_lH_interval")]
    pub pi_lh_interval: [f64; 2],
    pub regime: Regime,
    /// Intermediary payoff at the bargaining power used to build the bundle.
    pub payoff: f64,
    pub welfare: f64,
}

/// Both knife-edge branch solutions. The enumeration is not exhaustive: the
/// knife edge admits further fee structures mixing the two participation
/// forms, which the characterization leaves open.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundarySolutions {
    /// Solution of the large-prior program (outside option 0, `p0 = v_H`).
    pub large_branch: SolutionBundle,
    /// Solution of the small-prior program (outside option `dv`, `p0 = v_L`).
    pub small_branch: SolutionBundle,
    /// Always false; see the type-level note.
    pub exhaustive: bool,
}

/// Service provision, low-type disclosure, and the `pi(l|H)` interval that
/// the regime prescribes.
struct Prescription {
    service_low_shift: f64,
    disclose_low: f64,
    interval: [f64; 2],
}

fn large_mu_prescription(p: &Primitives, ratio: f64, dv_share: f64) -> Prescription {
    let dc = p.constants();
    if ratio >= 1.0 {
        Prescription {
            service_low_shift: 0.0,
            disclose_low: 1.0,
            interval: [0.0, dc.c_ratio],
        }
    } else if ratio > dv_share {
        Prescription {
            service_low_shift: (dc.dv - dc.delta * dc.delta) / (2.0 * dc.delta),
            disclose_low: 1.0,
            interval: [0.0, dc.c_ratio],
        }
    } else {
        let disclose_low = ratio * (p.value_high + p.value_low) / dc.dv;
        Prescription {
            service_low_shift: dc.delta * p.value_low / dc.dv,
            disclose_low,
            interval: [0.0, dc.c_ratio * disclose_low],
        }
    }
}

fn small_mu_prescription(ratio: f64) -> Prescription {
    Prescription {
        service_low_shift: 0.0,
        disclose_low: 1.0,
        interval: [f64::max(1.0 - ratio, 0.0), 1.0],
    }
}

/// Builds the mechanism with the participation constraints of both types
/// binding, the stated data fee `T = beta (R(pi) - R0)`, and the bundle's
/// payoff and welfare.
fn build_bundle(
    p: &Primitives,
    regime: Regime,
    pres: &Prescription,
    disclose_high: f64,
    outside_high: f64,
    r0: f64,
    beta: f64,
) -> SolutionBundle {
    let dc = p.constants();
    let service_low = p.taste_low - pres.service_low_shift;
    let service_high = p.taste_high;
    let fee_low = p.base_utility - (service_low - p.taste_low).powi(2);
    let fee_high =
        p.base_utility - (service_high - p.taste_high).powi(2) + dc.dv * disclose_high
            - outside_high;
    let mut mechanism = Mechanism {
        service_low,
        service_high,
        fee_low,
        fee_high,
        disclose_low: pres.disclose_low,
        disclose_high,
        data_fee: 0.0,
    };
    mechanism.data_fee = beta * (producer_revenue(p, &mechanism) - r0);
    let payoff = intermediary_payoff(p, &mechanism, beta);
    let welfare = surplus_breakdown(p, &mechanism, beta).welfare;
    SolutionBundle {
        mechanism,
        pi_lh_interval: pres.interval,
        regime,
        payoff,
        welfare,
    }
}

/// Optimal mechanism over the unrestricted service space, full bargaining
/// power. Knife-edge primitives are rejected toward [`solve_boundary`].
pub fn solve_general(p: &Primitives, opts: &SolveOptions) -> Result<SolutionBundle, SolveError> {
    let regime = classify_regime(p)?;
    let dc = p.constants();
    let t = regime.thresholds;
    let pres = match regime.tag {
        RegimeTag::Boundary => return Err(SolveError::Boundary),
        RegimeTag::LargeMuNoDist | RegimeTag::LargeMuMidDist | RegimeTag::LargeMuDeepDist => {
            large_mu_prescription(p, t.ratio, t.dv_share)
        }
        RegimeTag::SmallMuHighDelta | RegimeTag::SmallMuLowDelta => small_mu_prescription(t.ratio),
    };
    let disclose_high = opts.selection.resolve(pres.interval[0], pres.interval[1])?;
    Ok(build_bundle(
        p,
        regime,
        &pres,
        disclose_high,
        dc.outside_high,
        dc.r0,
        1.0,
    ))
}

/// Optimal mechanism when the service menu is restricted to the two taste
/// locations. Provisions are never distorted; the low-type disclosure caps at
/// `delta^2/dv` instead.
pub fn solve_binary_service(
    p: &Primitives,
    opts: &SolveOptions,
) -> Result<SolutionBundle, SolveError> {
    let regime = classify_regime(p)?;
    let dc = p.constants();
    let t = regime.thresholds;
    let pres = match regime.tag {
        RegimeTag::Boundary => return Err(SolveError::Boundary),
        RegimeTag::LargeMuNoDist | RegimeTag::LargeMuMidDist | RegimeTag::LargeMuDeepDist => {
            let disclose_low = f64::min(t.ratio, 1.0);
            Prescription {
                service_low_shift: 0.0,
                disclose_low,
                interval: [0.0, dc.c_ratio * disclose_low],
            }
        }
        RegimeTag::SmallMuHighDelta | RegimeTag::SmallMuLowDelta => small_mu_prescription(t.ratio),
    };
    let disclose_high = opts.selection.resolve(pres.interval[0], pres.interval[1])?;
    Ok(build_bundle(
        p,
        regime,
        &pres,
        disclose_high,
        dc.outside_high,
        dc.r0,
        1.0,
    ))
}

/// Routes on the requested service space.
pub fn solve(p: &Primitives, opts: &SolveOptions) -> Result<SolutionBundle, SolveError> {
    match opts.service_space {
        ServiceSpace::General => solve_general(p, opts),
        ServiceSpace::Binary => solve_binary_service(p, opts),
    }
}

/// Optimal mechanism when the intermediary keeps only a share `beta` of the
/// data-trade gain. The disclosure becomes unique: obedience binds under a
/// large prior, and both disclosure probabilities hit one under a small
/// prior. The payoff coincides with the full-power payoff.
///
/// Provisions follow the general service space; the `service_space` option is
/// ignored here.
pub fn solve_bargaining(
    p: &Primitives,
    beta: f64,
    opts: &SolveOptions,
) -> Result<SolutionBundle, SolveError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SolveError::InvalidBeta(beta));
    }
    let _ = opts;
    let regime = classify_regime(p)?;
    let dc = p.constants();
    let t = regime.thresholds;
    let (pres, disclose_high) = match regime.tag {
        RegimeTag::Boundary => return Err(SolveError::Boundary),
        RegimeTag::LargeMuNoDist | RegimeTag::LargeMuMidDist | RegimeTag::LargeMuDeepDist => {
            let mut pres = large_mu_prescription(p, t.ratio, t.dv_share);
            let unique = dc.c_ratio * pres.disclose_low;
            pres.interval = [unique, unique];
            (pres, unique)
        }
        RegimeTag::SmallMuHighDelta | RegimeTag::SmallMuLowDelta => {
            let pres = Prescription {
                service_low_shift: 0.0,
                disclose_low: 1.0,
                interval: [1.0, 1.0],
            };
            (pres, 1.0)
        }
    };
    Ok(build_bundle(
        p,
        regime,
        &pres,
        disclose_high,
        dc.outside_high,
        dc.r0,
        beta,
    ))
}

/// Benchmark without a data market: correct provisions, fees equal to the
/// full service value, and the degenerate no-trade disclosure (always the
/// high signal under a large prior, always the low signal otherwise) so that
/// downstream accounting works uniformly.
pub fn solve_no_data_market(p: &Primitives) -> Result<SolutionBundle, SolveError> {
    let regime = classify_regime(p)?;
    let dc = p.constants();
    let large = !dc.boundary && p.prior_high > regime.thresholds.value_ratio;
    let disclose = if large { 0.0 } else { 1.0 };
    let mechanism = Mechanism {
        service_low: p.taste_low,
        service_high: p.taste_high,
        fee_low: p.base_utility,
        fee_high: p.base_utility,
        disclose_low: disclose,
        disclose_high: disclose,
        data_fee: 0.0,
    };
    let payoff = intermediary_payoff(p, &mechanism, 1.0);
    let welfare = surplus_breakdown(p, &mechanism, 1.0).welfare;
    Ok(SolutionBundle {
        mechanism,
        pi_lh_interval: [disclose, disclose],
        regime,
        payoff,
        welfare,
    })
}

/// Evaluates both branch solutions at the knife edge `mu0 = v_L/v_H`.
///
/// The branches resolve the producer's off-path pricing tie differently: the
/// large branch prices high off path (type-H outside option 0), the small
/// branch prices low (outside option `dv`). Their payoffs differ by
/// `mu0 * dv` times the surplus the small branch leaves to type H; their
/// welfares coincide exactly when `delta^2 >= dv`. The returned enumeration
/// is not exhaustive.
pub fn solve_boundary(
    p: &Primitives,
    opts: &SolveOptions,
) -> Result<BoundarySolutions, SolveError> {
    let regime = classify_regime(p)?;
    if regime.tag != RegimeTag::Boundary {
        return Err(SolveError::NotBoundary);
    }
    let dc = p.constants();
    let t = regime.thresholds;

    let large_pres = match opts.service_space {
        ServiceSpace::General => large_mu_prescription(p, t.ratio, t.dv_share),
        ServiceSpace::Binary => {
            let disclose_low = f64::min(t.ratio, 1.0);
            Prescription {
                service_low_shift: 0.0,
                disclose_low,
                interval: [0.0, dc.c_ratio * disclose_low],
            }
        }
    };
    let large_sel = opts
        .selection
        .resolve(large_pres.interval[0], large_pres.interval[1])?;
    let large_branch = build_bundle(p, regime, &large_pres, large_sel, 0.0, dc.r0, 1.0);

    let small_pres = small_mu_prescription(t.ratio);
    let small_sel = opts
        .selection
        .resolve(small_pres.interval[0], small_pres.interval[1])?;
    let small_branch = build_bundle(p, regime, &small_pres, small_sel, dc.dv, dc.r0, 1.0);

    Ok(BoundarySolutions {
        large_branch,
        small_branch,
        exhaustive: false,
    })
}

/// The admissible `pi(l|H)` interval at the regime's optimal `pi(l|L)`,
/// general service space.
pub fn pi_h_interval(p: &Primitives) -> Result<[f64; 2], SolveError> {
    let regime = classify_regime(p)?;
    let t = regime.thresholds;
    match regime.tag {
        RegimeTag::Boundary => Err(SolveError::Boundary),
        RegimeTag::LargeMuNoDist | RegimeTag::LargeMuMidDist | RegimeTag::LargeMuDeepDist => {
            Ok(large_mu_prescription(p, t.ratio, t.dv_share).interval)
        }
        RegimeTag::SmallMuHighDelta | RegimeTag::SmallMuLowDelta => {
            Ok(small_mu_prescription(t.ratio).interval)
        }
    }
}
