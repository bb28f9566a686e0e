use serde::{Deserialize, Serialize};

use super::window::ClickRates;
use crate::analytic::ln_excess_from;
use crate::error::{invalid, Error, Result};
use crate::model::{check_intensity, ChannelParams};
use crate::montecarlo::BatchStats;
use crate::optimize::golden_section_min;

/// Click probabilities and the (η, ν) that reproduce them at the given
/// intensity and dark-count rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub p_click_plus: f64,
    pub p_click_minus: f64,
    pub eta: f64,
    pub visibility: f64,
    /// True when no false clicks are needed to explain the data and ν was
    /// pinned to 1.
    pub at_boundary: bool,
    /// The other solution when the data admit two, as `(η, ν)`.
    pub alternate: Option<(f64, f64)>,
}

impl EffectiveParams {
    pub fn to_channel_params(&self, dark_rate: f64) -> Result<ChannelParams> {
        ChannelParams::new(self.eta, dark_rate, self.visibility)
    }
}

/// `(η, ν)` from the two click probabilities.
fn invert_clicks(a: f64, b: f64, intensity: f64, dark_rate: f64) -> Result<(f64, f64)> {
    // P_{−α} = 1 − e^{−2Iη} + p_d,  P_α = 1 − e^{−2(1−ν)Iη} + p_d
    let light_minus = b - dark_rate;
    if !(light_minus > 0.0 && light_minus < 1.0) {
        return Err(Error::NonInvertible(format!("P_-α = {b} leaves no signal above dark counts")));
    }
    let eta = -(-light_minus).ln_1p() / (2.0 * intensity);
    let light_plus = (a - dark_rate).max(0.0);
    if light_plus >= 1.0 {
        return Err(Error::NonInvertible(format!("P_α = {a} saturates")));
    }
    let deficit = -(-light_plus).ln_1p() / (2.0 * intensity * eta);
    if deficit > 1.0 {
        return Err(Error::NonInvertible(format!("P_α = {a} exceeds P_-α = {b}")));
    }
    Ok((eta, 1.0 - deficit))
}

fn check_operating_point(intensity: f64) -> Result<()> {
    check_intensity(intensity)?;
    if intensity == 0.0 {
        return Err(invalid("intensity", "must be > 0 to separate light from dark counts"));
    }
    Ok(())
}

/// Inverts the click model from a batch: `success_hat` fixes `P_{−α}` for a
/// given `P_α`, and `efficiency_hat` then pins `P_α`.
///
/// For fixed success the excess `E − P_suc` is zero at `P_α = p_d`, rises,
/// and returns to zero where `P_{−α}` hits 1, so two roots can exist. The
/// one with fewer false clicks (higher visibility) is returned and the other
/// is reported in `alternate`; when per-bin click counts are available,
/// [`estimate_from_click_rates`] has no such ambiguity.
pub fn estimate_effective_params(
    stats: &BatchStats,
    intensity: f64,
    n: u64,
    m: u64,
    dark_rate: f64,
) -> Result<EffectiveParams> {
    check_operating_point(intensity)?;
    if m == 0 || m >= n {
        return Err(invalid("m", format!("need 1 <= m < n = {n}")));
    }
    if stats.accepted == 0 {
        return Err(Error::NonInvertible("no accepted periods".into()));
    }
    if stats.correct == 0 {
        return Err(Error::NonInvertible("no correct periods".into()));
    }
    let k = n - m;
    let success = stats.success_hat;
    let target = stats.efficiency_hat - success;
    let mf = m as f64;

    // P_{−α} implied by the observed success for a given P_α
    let minus_for = |a: f64| (success.ln() - k as f64 * (-a).ln_1p()) / mf;
    // ln(E − P_suc), evaluated directly to avoid cancellation at small P_α
    let ln_excess = |a: f64| {
        let ln_b = minus_for(a);
        if ln_b > 0.0 {
            return f64::NEG_INFINITY;
        }
        ln_excess_from(a, ln_b.exp(), m, k)
    };

    let a_lo = dark_rate;
    // where P_{−α} reaches 1
    let a_hi = -(success.ln() / k as f64).exp_m1();
    if a_lo >= a_hi {
        return Err(Error::NonInvertible("success rate leaves no room for false clicks".into()));
    }
    let ln_target = target.ln();

    if ln_target <= ln_excess(a_lo) {
        let b = minus_for(a_lo).exp();
        let (eta, _) = invert_clicks(a_lo, b, intensity, dark_rate)?;
        return Ok(EffectiveParams {
            p_click_plus: a_lo,
            p_click_minus: b,
            eta,
            visibility: 1.0,
            at_boundary: true,
            alternate: None,
        });
    }

    // peak of the excess, searched in ln P_α
    let (la, lb) = (a_lo.max(1e-300).ln(), a_hi.ln());
    let peak = golden_section_min(|x| -ln_excess(x.exp()), la, lb, 1e-13);
    if ln_excess(peak.exp()) < ln_target {
        return Err(Error::NonInvertible(format!(
            "excess acceptance {target:.6} exceeds the model maximum {:.6}",
            ln_excess(peak.exp()).exp()
        )));
    }
    // bisection in ln P_α; `rising` says which side of the peak [lo, hi] is on
    let root = |mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if (ln_excess(mid.exp()) < ln_target) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    let a = root(la, peak, true);
    let (eta, visibility) = invert_clicks(a, minus_for(a).exp(), intensity, dark_rate)?;
    let a_alt = root(peak, lb, false);
    let alternate = invert_clicks(a_alt, minus_for(a_alt).exp(), intensity, dark_rate).ok();
    Ok(EffectiveParams {
        p_click_plus: a,
        p_click_minus: minus_for(a).exp(),
        eta,
        visibility,
        at_boundary: false,
        alternate,
    })
}

/// Inverts measured per-bin click frequencies: `P_{−α}` from the bins of
/// S̄ gives η, `P_α` from the bins of S then gives ν.
pub fn estimate_from_click_rates(rates: &ClickRates, intensity: f64, dark_rate: f64) -> Result<EffectiveParams> {
    check_operating_point(intensity)?;
    if rates.minus_trials == 0 || rates.plus_trials == 0 {
        return Err(Error::NonInvertible("no bins observed".into()));
    }
    let b = rates.minus_clicks as f64 / rates.minus_trials as f64;
    let a = rates.plus_clicks as f64 / rates.plus_trials as f64;
    let at_boundary = a <= dark_rate;
    let (eta, visibility) = invert_clicks(a, b, intensity, dark_rate)?;
    Ok(EffectiveParams {
        p_click_plus: a,
        p_click_minus: b,
        eta,
        visibility,
        at_boundary,
        alternate: None,
    })
}
