use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::{EventLog, EventRecord, RunMeta};
use super::window::TimeWindow;
use crate::error::{invalid, Result};
use crate::model::{check_intensity, ChannelParams, CouponInstance};
use crate::montecarlo::{substream, CHUNK};

/// Constant density over `[start_ps, end_ps)` with relative `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_ps: u32,
    pub end_ps: u32,
    pub weight: f64,
}

/// Piecewise-constant arrival-time density over a bin, normalised to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetProfile {
    segments: Vec<Segment>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl OffsetProfile {
    pub fn new(mut segments: Vec<Segment>, bin_ps: u32) -> Result<Self> {
        segments.retain(|s| s.weight != 0.0);
        segments.sort_by_key(|s| s.start_ps);
        if segments.is_empty() {
            return Err(invalid("profile", "needs at least one segment with positive weight"));
        }
        for s in &segments {
            if s.start_ps >= s.end_ps || s.end_ps > bin_ps {
                return Err(invalid("profile", format!("segment [{}, {}) outside the bin", s.start_ps, s.end_ps)));
            }
            if !(s.weight.is_finite() && s.weight > 0.0) {
                return Err(invalid("profile", format!("weight {} must be positive", s.weight)));
            }
        }
        if segments.windows(2).any(|w| w[1].start_ps < w[0].end_ps) {
            return Err(invalid("profile", "segments overlap"));
        }
        let total: f64 = segments.iter().map(|s| s.weight).sum();
        let mut acc = 0.0;
        let cumulative = segments
            .iter()
            .map(|s| {
                acc += s.weight / total;
                acc
            })
            .collect();
        Ok(Self { segments, cumulative })
    }

    pub fn uniform(bin_ps: u32) -> Result<Self> {
        Self::new(vec![Segment { start_ps: 0, end_ps: bin_ps, weight: 1.0 }], bin_ps)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Probability that an arrival falls inside `window`.
    pub fn mass(&self, window: TimeWindow) -> f64 {
        let total: f64 = self.segments.iter().map(|s| s.weight).sum();
        self.segments
            .iter()
            .map(|s| {
                let lo = s.start_ps.max(window.start_ps);
                let hi = s.end_ps.min(window.end_ps);
                if hi <= lo {
                    0.0
                } else {
                    s.weight * f64::from(hi - lo) / f64::from(s.end_ps - s.start_ps)
                }
            })
            .sum::<f64>()
            / total
    }

    /// Integer offset drawn from the density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.segments.len() - 1);
        let s = self.segments[i];
        rng.random_range(s.start_ps..s.end_ps)
    }

    fn rebuild(self, bin_ps: u32) -> Result<Self> {
        Self::new(self.segments, bin_ps)
    }
}

/// Where signal photons and extra false-click photons arrive in a bin.
///
/// Bins of S receive, on top of the `(1−ν)` imperfect-interference mean
/// (timed like the signal), leakage light of mean `2·δ·I·η` timed by the
/// `leakage` profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageProfile {
    pub signal: OffsetProfile,
    pub leakage: OffsetProfile,
    /// δ, the extra visibility deficit carried by the leakage light.
    pub leakage_deficit: f64,
}

impl LeakageProfile {
    pub fn new(signal: OffsetProfile, leakage: OffsetProfile, leakage_deficit: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&leakage_deficit) {
            return Err(invalid("leakage_deficit", format!("{leakage_deficit} must lie in [0, 1]")));
        }
        Ok(Self { signal, leakage, leakage_deficit })
    }

    /// Uniform signal and no leakage.
    pub fn clean(bin_ps: u32) -> Result<Self> {
        Self::new(OffsetProfile::uniform(bin_ps)?, OffsetProfile::uniform(bin_ps)?, 0.0)
    }

    /// Uniform signal with leakage split evenly over the first and last
    /// `edge_ps` of the bin.
    pub fn edges(bin_ps: u32, edge_ps: u32, leakage_deficit: f64) -> Result<Self> {
        if edge_ps == 0 || 2 * edge_ps > bin_ps {
            return Err(invalid("edge_ps", format!("{edge_ps} must be in 1..={}", bin_ps / 2)));
        }
        let leakage = OffsetProfile::new(
            vec![
                Segment { start_ps: 0, end_ps: edge_ps, weight: 1.0 },
                Segment { start_ps: bin_ps - edge_ps, end_ps: bin_ps, weight: 1.0 },
            ],
            bin_ps,
        )?;
        Self::new(OffsetProfile::uniform(bin_ps)?, leakage, leakage_deficit)
    }

    /// Re-validates a deserialised profile against a bin length.
    pub fn validated(self, bin_ps: u32) -> Result<Self> {
        Self::new(self.signal.rebuild(bin_ps)?, self.leakage.rebuild(bin_ps)?, self.leakage_deficit)
    }

    /// Ground truth seen through `window`: η scaled by the signal mass,
    /// visibility lowered by the leakage share, dark rate scaled by width.
    pub fn effective_params(&self, params: &ChannelParams, window: TimeWindow, bin_ps: u32) -> Result<ChannelParams> {
        let s = self.signal.mass(window);
        let l = if self.leakage_deficit > 0.0 { self.leakage.mass(window) } else { 0.0 };
        let dark = params.dark_rate() * f64::from(window.width()) / f64::from(bin_ps);
        if s == 0.0 {
            return ChannelParams::new(0.0, dark, 1.0);
        }
        let deficit = (1.0 - params.visibility()) + self.leakage_deficit * l / s;
        ChannelParams::new(params.eta() * s, dark, 1.0 - deficit)
    }
}

/// Generates time-tagged events for `periods` coupon periods.
///
/// Every detected photon is recorded, so a bin clicks inside a window with
/// probability `1 − e^{−λ(W)}`. Dark counts add one event with probability
/// `p_d` per bin at a uniform offset. Periods are generated in chunks on
/// separate substreams, so the output does not depend on the thread count.
pub fn generate_synthetic(
    seed: u64,
    instance: &CouponInstance,
    params: &ChannelParams,
    intensity: f64,
    periods: u64,
    profile: &LeakageProfile,
    bin_ps: u32,
) -> Result<EventLog> {
    check_intensity(intensity)?;
    if periods == 0 {
        return Err(invalid("periods", "must be >= 1"));
    }
    if bin_ps == 0 {
        return Err(invalid("bin_ps", "must be >= 1"));
    }
    let profile = profile.clone().validated(bin_ps)?;
    let base = 2.0 * intensity * params.eta();
    let lambda_minus = base;
    let lambda_vis = base * (1.0 - params.visibility());
    let lambda_leak = base * profile.leakage_deficit;
    let lambda_plus = lambda_vis + lambda_leak;
    let gen = PeriodGen {
        instance,
        profile: &profile,
        minus: (lambda_minus > 0.0).then(|| Poisson::new(lambda_minus).expect("positive mean")),
        p_plus_bin: -(-lambda_plus).exp_m1(),
        lambda_plus,
        leak_share: if lambda_plus > 0.0 { lambda_leak / lambda_plus } else { 0.0 },
        dark_rate: params.dark_rate(),
        bin_ps,
    };

    let chunks = periods.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<EventRecord>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let first = c * CHUNK;
            let last = (first + CHUNK).min(periods);
            let mut out = Vec::new();
            for p in first..last {
                let start = out.len();
                gen.period(p, &mut rng, &mut out);
                out[start..].sort_unstable();
            }
            out
        })
        .collect();

    Ok(EventLog {
        meta: RunMeta {
            n: instance.n(),
            missing: instance.missing().to_vec(),
            periods,
            intensity,
            bin_ps,
        },
        records: per_chunk.concat(),
    })
}

struct PeriodGen<'a> {
    instance: &'a CouponInstance,
    profile: &'a LeakageProfile,
    minus: Option<Poisson<f64>>,
    p_plus_bin: f64,
    lambda_plus: f64,
    leak_share: f64,
    dark_rate: f64,
    bin_ps: u32,
}

impl PeriodGen<'_> {
    fn period<R: Rng + ?Sized>(&self, period_id: u64, rng: &mut R, out: &mut Vec<EventRecord>) {
        let push = |out: &mut Vec<EventRecord>, bin: usize, offset_ps: u32| {
            out.push(EventRecord { period_id, bin_index: bin as u32, offset_ps });
        };

        if let Some(minus) = &self.minus {
            for &bin in self.instance.missing() {
                let photons = minus.sample(rng) as u64;
                for _ in 0..photons {
                    push(out, bin, self.profile.signal.sample(rng));
                }
            }
        }

        let k = self.instance.k();
        let lit = binomial(k, self.p_plus_bin, rng);
        if lit > 0 {
            let members = self.instance.members();
            for j in index::sample(rng, k, lit) {
                for _ in 0..zero_truncated_poisson(self.lambda_plus, rng) {
                    let offset = if rng.random_bool(self.leak_share) {
                        self.profile.leakage.sample(rng)
                    } else {
                        self.profile.signal.sample(rng)
                    };
                    push(out, members[j], offset);
                }
            }
        }

        let n = self.instance.n();
        let dark = binomial(n, self.dark_rate, rng);
        if dark > 0 {
            for j in index::sample(rng, n, dark) {
                push(out, j + 1, rng.random_range(0..self.bin_ps));
            }
        }
    }
}

fn binomial<R: Rng + ?Sized>(trials: usize, p: f64, rng: &mut R) -> usize {
    if trials == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        trials
    } else {
        Binomial::new(trials as u64, p).expect("p in (0,1)").sample(rng) as usize
    }
}

/// Poisson(λ) conditioned on ≥ 1, by inversion over the tail.
fn zero_truncated_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    let e = (-lambda).exp();
    let mut v = rng.random::<f64>() * -(-lambda).exp_m1();
    let mut pk = e;
    for k in 1..10_000u64 {
        pk *= lambda / k as f64;
        if v <= pk {
            return k;
        }
        v -= pk;
    }
    // only reached through rounding for very large λ
    lambda.round().max(1.0) as u64
}
