//! Monte Carlo play-out of a posted mechanism along the game's timing: type
//! draw, consumer accept/report best response, signal draw, producer pricing
//! per its own best response, purchase decision.
//!
//! Every consumer draws from an independent ChaCha8 stream derived from the
//! master seed and the consumer index, so sampling can shard across workers
//! while the merged report stays bit-identical to the single-threaded run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{
    consumer_interim_payoff, posterior, ConsumerAction, ConsumerType, Mechanism, Primitives,
    Signal,
};

/// Payoff tolerance under which actions count as tied.
const TIE_EPS: f64 = 1e-9;

/// Deterministic best responses implied by a posted contract: one action per
/// consumer type and one price per signal, with ties broken toward truthful
/// acceptance and toward the recommended price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub action_low: ConsumerAction,
    pub action_high: ConsumerAction,
    pub price_after_low: f64,
    pub price_after_high: f64,
    /// Producer follows the low-price recommendation after signal `l`.
    pub obedient_low: bool,
    /// Producer follows the high-price recommendation after signal `h`.
    pub obedient_high: bool,
}

impl BestResponse {
    pub fn action(&self, ty: ConsumerType) -> ConsumerAction {
        match ty {
            ConsumerType::Low => self.action_low,
            ConsumerType::High => self.action_high,
        }
    }

    pub fn price(&self, signal: Signal) -> f64 {
        match signal {
            Signal::Low => self.price_after_low,
            Signal::High => self.price_after_high,
        }
    }
}

fn best_action(p: &Primitives, m: &Mechanism, ty: ConsumerType) -> ConsumerAction {
    let truthful = match ty {
        ConsumerType::Low => ConsumerAction::ReportLow,
        ConsumerType::High => ConsumerAction::ReportHigh,
    };
    let misreport = match ty {
        ConsumerType::Low => ConsumerAction::ReportHigh,
        ConsumerType::High => ConsumerAction::ReportLow,
    };
    let u_truthful = consumer_interim_payoff(p, m, ty, truthful);
    let u_misreport = consumer_interim_payoff(p, m, ty, misreport);
    let u_reject = consumer_interim_payoff(p, m, ty, ConsumerAction::Reject);
    let best = u_truthful.max(u_misreport).max(u_reject);
    // Preference order inside the tie band: truthful report, then the other
    // report, then rejection.
    if u_truthful >= best - TIE_EPS {
        truthful
    } else if u_misreport >= best - TIE_EPS {
        misreport
    } else {
        ConsumerAction::Reject
    }
}

/// Producer's price after a signal: the recommendation unless the posterior
/// strictly prefers the other price. Never-sent signals keep the
/// recommendation (vacuous obedience).
fn best_price(p: &Primitives, m: &Mechanism, signal: Signal) -> f64 {
    match posterior(p, m, signal) {
        Err(_) => match signal {
            Signal::Low => p.value_low,
            Signal::High => p.value_high,
        },
        Ok(mu_s) => match signal {
            Signal::Low => {
                if mu_s * p.value_high > p.value_low + TIE_EPS {
                    p.value_high
                } else {
                    p.value_low
                }
            }
            Signal::High => {
                if p.value_low > mu_s * p.value_high + TIE_EPS {
                    p.value_low
                } else {
                    p.value_high
                }
            }
        },
    }
}

/// Computes each type's best action against the posted contract and the
/// producer's best price after each signal.
pub fn best_response_report(p: &Primitives, m: &Mechanism) -> BestResponse {
    let price_after_low = best_price(p, m, Signal::Low);
    let price_after_high = best_price(p, m, Signal::High);
    BestResponse {
        action_low: best_action(p, m, ConsumerType::Low),
        action_high: best_action(p, m, ConsumerType::High),
        price_after_low,
        price_after_high,
        obedient_low: price_after_low == p.value_low,
        obedient_high: price_after_high == p.value_high,
    }
}

/// Sample mean and standard error (`sample std / sqrt(n)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self) -> Estimate {
        if self.n == 0 {
            return Estimate::default();
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let std_error = if self.n > 1 {
            let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_error }
    }

    fn shifted(&self, offset: f64) -> Estimate {
        let mut e = self.estimate();
        e.mean += offset;
        e
    }
}

/// Empirical aggregates from simulating a posted mechanism.
///
/// Consumer surpluses are mass-weighted aggregates: each draw contributes its
/// surplus when it has the named type and zero otherwise, so the means are
/// directly comparable to the analytic surplus breakdown. The lump-sum data
/// fee is folded into the intermediary and producer profit means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub n: u64,
    pub seed: u64,
    pub intermediary_profit: Estimate,
    pub producer_profit: Estimate,
    #[serde(rename = "consumer_surplus_L")]
    pub consumer_surplus_low: Estimate,
    #[serde(rename = "consumer_surplus_H")]
    pub consumer_surplus_high: Estimate,
    #[serde(rename = "acceptance_rate_L")]
    pub acceptance_rate_low: Estimate,
    #[serde(rename = "acceptance_rate_H")]
    pub acceptance_rate_high: Estimate,
    #[serde(rename = "truthful_rate_L")]
    pub truthful_rate_low: Estimate,
    #[serde(rename = "truthful_rate_H")]
    pub truthful_rate_high: Estimate,
    /// Fraction of accepted type-L consumers charged the low price.
    #[serde(rename = "low_price_rate_L")]
    pub low_price_rate_low: Estimate,
    /// Fraction of accepted type-H consumers charged the low price.
    #[serde(rename = "low_price_rate_H")]
    pub low_price_rate_high: Estimate,
    /// Realized signal counts among accepted consumers, `l` then `h`.
    pub signal_counts: [u64; 2],
    pub price_after_low_signal: f64,
    pub price_after_high_signal: f64,
    #[serde(rename = "obedience_ok_l")]
    pub obedience_ok_low: bool,
    #[serde(rename = "obedience_ok_h")]
    pub obedience_ok_high: bool,
}

impl SimReport {
    /// Plot-ready CSV of per-signal price frequencies.
    pub fn price_frequency_csv(&self) -> String {
        let total = (self.signal_counts[0] + self.signal_counts[1]).max(1) as f64;
        let mut out = String::from("signal,count,frequency,price,obedience_ok\n");
        for (idx, (name, price, ok)) in [
            ("l", self.price_after_low_signal, self.obedience_ok_low),
            ("h", self.price_after_high_signal, self.obedience_ok_high),
        ]
        .iter()
        .enumerate()
        {
            out.push_str(&format!(
                "{name},{},{},{},{}\n",
                self.signal_counts[idx],
                crate::report::fmt_sig(self.signal_counts[idx] as f64 / total),
                crate::report::fmt_sig(*price),
                ok
            ));
        }
        out
    }
}

/// Simulates `n` independent consumers against the posted mechanism.
/// Deterministic given `(p, m, n, seed)`.
pub fn simulate(p: &Primitives, m: &Mechanism, n: u64, seed: u64) -> SimReport {
    assert!(n >= 1, "simulate requires at least one draw");
    let dc = p.constants();
    let br = best_response_report(p, m);

    let mut fee = Accumulator::default();
    let mut revenue = Accumulator::default();
    let mut surplus_low = Accumulator::default();
    let mut surplus_high = Accumulator::default();
    let mut accept = [Accumulator::default(), Accumulator::default()];
    let mut truthful = [Accumulator::default(), Accumulator::default()];
    let mut low_price = [Accumulator::default(), Accumulator::default()];
    let mut signal_counts = [0u64; 2];

    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        let ty = if rng.random::<f64>() < p.prior_high {
            ConsumerType::High
        } else {
            ConsumerType::Low
        };
        let (taste, value, slot) = match ty {
            ConsumerType::Low => (p.taste_low, p.value_low, 0usize),
            ConsumerType::High => (p.taste_high, p.value_high, 1usize),
        };
        let action = br.action(ty);
        let (consumer_fee, producer_rev, surplus);
        match action {
            ConsumerAction::Reject => {
                accept[slot].push(0.0);
                truthful[slot].push(0.0);
                consumer_fee = 0.0;
                // Rejected consumers trade at the prior-information price.
                let buys = value >= dc.p0;
                producer_rev = if buys { dc.p0 } else { 0.0 };
                surplus = if buys { value - dc.p0 } else { 0.0 };
            }
            ConsumerAction::ReportLow | ConsumerAction::ReportHigh => {
                let report = if action == ConsumerAction::ReportLow {
                    ConsumerType::Low
                } else {
                    ConsumerType::High
                };
                accept[slot].push(1.0);
                truthful[slot].push(if report == ty { 1.0 } else { 0.0 });
                let (service, menu_fee) = m.menu(report);
                let signal = if rng.random::<f64>() < m.disclose(report) {
                    Signal::Low
                } else {
                    Signal::High
                };
                signal_counts[match signal {
                    Signal::Low => 0,
                    Signal::High => 1,
                }] += 1;
                let price = br.price(signal);
                low_price[slot].push(if price == p.value_low { 1.0 } else { 0.0 });
                let buys = value >= price;
                consumer_fee = menu_fee;
                producer_rev = if buys { price } else { 0.0 };
                surplus = p.base_utility - (service - taste).powi(2) - menu_fee
                    + if buys { value - price } else { 0.0 };
            }
        }
        fee.push(consumer_fee);
        revenue.push(producer_rev);
        surplus_low.push(if ty == ConsumerType::Low { surplus } else { 0.0 });
        surplus_high.push(if ty == ConsumerType::High { surplus } else { 0.0 });
    }

    SimReport {
        n,
        seed,
        intermediary_profit: fee.shifted(m.data_fee),
        producer_profit: revenue.shifted(-m.data_fee),
        consumer_surplus_low: surplus_low.estimate(),
        consumer_surplus_high: surplus_high.estimate(),
        acceptance_rate_low: accept[0].estimate(),
        acceptance_rate_high: accept[1].estimate(),
        truthful_rate_low: truthful[0].estimate(),
        truthful_rate_high: truthful[1].estimate(),
        low_price_rate_low: low_price[0].estimate(),
        low_price_rate_high: low_price[1].estimate(),
        signal_counts,
        price_after_low_signal: br.price_after_low,
        price_after_high_signal: br.price_after_high,
        obedience_ok_low: br.obedient_low,
        obedience_ok_high: br.obedient_high,
    }
}
