//! Closed-form click, acceptance and cost formulas.
//!
//! Powers such as `(1 − P_α)^k` are evaluated as `exp(k·ln(1 − P_α))` and
//! binomial sums are accumulated in log space, so `k` up to 10⁶ is safe.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{check_intensity, ChannelParams};

/// Probability that the detector clicks on an in-set (+α) pulse.
///
/// `min(1, (1 − e^{−2(1−ν)Iη}) + p_d)`.
pub fn click_prob_plus(params: &ChannelParams, intensity: f64) -> f64 {
    let mean = 2.0 * (1.0 - params.visibility()) * intensity * params.eta();
    (-(-mean).exp_m1() + params.dark_rate()).min(1.0)
}

/// Probability that the detector clicks on a missing-element (−α) pulse.
///
/// `min(1, (1 − e^{−2Iη}) + p_d)`.
pub fn click_prob_minus(params: &ChannelParams, intensity: f64) -> f64 {
    let mean = 2.0 * intensity * params.eta();
    (-(-mean).exp_m1() + params.dark_rate()).min(1.0)
}

/// Non-click probability of a −α pulse in the lossless, noiseless case.
pub fn ideal_nonclick(intensity: f64) -> f64 {
    (-2.0 * intensity).exp()
}

/// Probability that every one of the m missing pulses clicks, ideal case.
pub fn ideal_success(intensity: f64, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    (m as f64 * (-(-2.0 * intensity).exp_m1()).ln()).exp()
}

/// All per-period statistics for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStats {
    pub p_click_plus: f64,
    pub p_click_minus: f64,
    pub efficiency: f64,
    pub correct_prob: f64,
    pub success_prob: f64,
    /// `n·I / P_suc`; infinite when the success probability is zero.
    pub quantum_samples: f64,
}

impl ProtocolStats {
    pub fn compute(params: &ChannelParams, intensity: f64, m: u64, k: u64) -> Result<Self> {
        check_intensity(intensity)?;
        check_sizes(m, k)?;
        let a = click_prob_plus(params, intensity);
        let b = click_prob_minus(params, intensity);
        let efficiency = ln_efficiency_from(a, b, m, k).exp();
        let success_prob = ln_success_from(a, b, m, k).exp();
        let correct_prob = if efficiency > 0.0 { success_prob / efficiency } else { 0.0 };
        let n = (m + k) as f64;
        let quantum_samples = if success_prob > 0.0 {
            n * intensity / success_prob
        } else {
            f64::INFINITY
        };
        Ok(Self {
            p_click_plus: a,
            p_click_minus: b,
            efficiency,
            correct_prob,
            success_prob,
            quantum_samples,
        })
    }
}

fn check_sizes(m: u64, k: u64) -> Result<()> {
    if m == 0 {
        return Err(invalid("m", "must be >= 1"));
    }
    if k == 0 {
        return Err(invalid("k", "must be >= 1"));
    }
    Ok(())
}

/// `x·ln(y)` with the convention `0·ln(0) = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `x·ln(1 − p)` with the convention `0·ln(0) = 0`.
fn xlog1m(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (-p).ln_1p()
    }
}

/// `ln(n!)`. Exact summation for small `n`, Stirling series above.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    if n < 256 {
        return (2..=n).map(|t| (t as f64).ln()).sum();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (std::f64::consts::TAU * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln C(n, r)`; `-inf` when `r > n`.
pub(crate) fn ln_choose(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    if r <= 1024 {
        let base = (n - r) as f64;
        return (1..=r).map(|t| ((base + t as f64) / t as f64).ln()).sum();
    }
    ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)
}

/// `ln C(n, r) + r·ln p + (n − r)·ln(1 − p)`.
fn ln_binom_pmf(n: u64, r: u64, p: f64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    ln_choose(n, r) + xlny(r as f64, p) + xlog1m((n - r) as f64, p)
}

fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

pub(crate) fn ln_efficiency_from(a: f64, b: f64, m: u64, k: u64) -> f64 {
    // i of the m missing pulses click and the other m − i clicks come from
    // the k in-set pulses.
    log_sum_exp((0..=m).map(|i| ln_binom_pmf(m, i, b) + ln_binom_pmf(k, m - i, a)))
}

/// `ln(E − P_suc)`: the accepted periods that contain a false click.
pub(crate) fn ln_excess_from(a: f64, b: f64, m: u64, k: u64) -> f64 {
    log_sum_exp((0..m).map(|i| ln_binom_pmf(m, i, b) + ln_binom_pmf(k, m - i, a)))
}

pub(crate) fn ln_success_from(a: f64, b: f64, m: u64, k: u64) -> f64 {
    xlny(m as f64, b) + xlog1m(k as f64, a)
}

/// Probability that a period produces exactly m clicks (E = M/N).
pub fn efficiency(params: &ChannelParams, intensity: f64, m: u64, k: u64) -> Result<f64> {
    check_intensity(intensity)?;
    check_sizes(m, k)?;
    let a = click_prob_plus(params, intensity);
    let b = click_prob_minus(params, intensity);
    Ok(ln_efficiency_from(a, b, m, k).exp())
}

/// `P(m,k) = P_{−α}^m (1 − P_α)^k / E`.
pub fn correct_prob(params: &ChannelParams, intensity: f64, m: u64, k: u64) -> Result<f64> {
    let stats = ProtocolStats::compute(params, intensity, m, k)?;
    if stats.efficiency == 0.0 {
        return Err(Error::DegenerateEfficiency);
    }
    Ok(stats.correct_prob)
}

/// The m = 1 correct probability written out term by term, for `S_j`.
pub fn correct_prob_m1(params: &ChannelParams, intensity: f64, n: u64) -> Result<f64> {
    check_intensity(intensity)?;
    if n < 2 {
        return Err(invalid("n", "must be >= 2"));
    }
    let a = click_prob_plus(params, intensity);
    let b = click_prob_minus(params, intensity);
    let k = (n - 1) as f64;
    let plus_none = xlog1m(k, a).exp();
    let plus_one = k * a * xlog1m(k - 1.0, a).exp();
    let denom = (1.0 - b) * plus_one + b * plus_none;
    if denom == 0.0 {
        return Err(Error::DegenerateEfficiency);
    }
    Ok(b * plus_none / denom)
}

/// `P_suc = E × P(m,k) = P_{−α}^m (1 − P_α)^k`.
pub fn success_prob(params: &ChannelParams, intensity: f64, m: u64, k: u64) -> Result<f64> {
    check_intensity(intensity)?;
    check_sizes(m, k)?;
    let a = click_prob_plus(params, intensity);
    let b = click_prob_minus(params, intensity);
    Ok(ln_success_from(a, b, m, k).exp())
}

/// Expected photon cost to learn S once, `R = n·I / P_suc`.
pub fn quantum_samples(params: &ChannelParams, intensity: f64, n: u64, m: u64) -> Result<f64> {
    if m >= n {
        return Err(invalid("m", format!("must be < n = {n}")));
    }
    let p = success_prob(params, intensity, m, n - m)?;
    sample_cost(n, intensity, p)
}

/// `n·I / P_suc` for an externally measured success probability.
pub fn sample_cost(n: u64, intensity: f64, success: f64) -> Result<f64> {
    check_intensity(intensity)?;
    if success.is_nan() || success <= 0.0 {
        return Err(Error::ZeroSuccess);
    }
    Ok(n as f64 * intensity / success)
}

/// Classical sample cost `k·ln k`; zero for `k = 1`.
pub fn classical_limit(k: u64) -> f64 {
    let k = k as f64;
    if k <= 1.0 {
        0.0
    } else {
        k * k.ln()
    }
}

/// Expected number of uniform draws to see all k coupons, `k·H_k`.
pub fn classical_expected(k: u64) -> f64 {
    // smallest terms first
    let harmonic: f64 = (1..=k).rev().map(|i| 1.0 / i as f64).sum();
    k as f64 * harmonic
}
