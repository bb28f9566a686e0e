//! Trial-level simulation of the coherent-state protocol and of the classical
//! coupon collector.
//!
//! Every batch is split into fixed-size chunks. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `c`, and chunk results are
//! integer counts, so a batch is bit-identical whatever the thread count.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{click_prob_minus, click_prob_plus};
use crate::error::{invalid, Result};
use crate::model::{check_intensity, ChannelParams, CouponInstance, PeriodOutcome};

/// Periods (or collector runs) per independent substream.
pub const CHUNK: u64 = 4096;

pub(crate) fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Click probabilities for one operating point, resolved once per batch.
#[derive(Debug, Clone, Copy)]
pub struct ClickModel {
    pub p_plus: f64,
    pub p_minus: f64,
}

impl ClickModel {
    pub fn new(params: &ChannelParams, intensity: f64) -> Result<Self> {
        check_intensity(intensity)?;
        Ok(Self {
            p_plus: click_prob_plus(params, intensity),
            p_minus: click_prob_minus(params, intensity),
        })
    }

    /// Draws the set of clicked bins for one period. Missing-element bins
    /// click with `p_minus` each; the number of false clicks among the k
    /// members of S is Binomial(k, `p_plus`), placed uniformly.
    pub fn sample_clicks<R: Rng + ?Sized>(&self, instance: &CouponInstance, rng: &mut R) -> Vec<usize> {
        let mut clicks: Vec<usize> = instance
            .missing()
            .iter()
            .copied()
            .filter(|_| rng.random_bool(self.p_minus))
            .collect();
        let k = instance.k();
        let false_clicks = self.false_clicks(k, rng);
        if false_clicks > 0 {
            let members = instance.members();
            clicks.extend(index::sample(rng, k, false_clicks).into_iter().map(|j| members[j]));
        }
        clicks
    }

    fn false_clicks<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> usize {
        if self.p_plus >= 1.0 {
            k
        } else if self.p_plus <= 0.0 {
            0
        } else {
            Binomial::new(k as u64, self.p_plus).expect("p in (0,1)").sample(rng) as usize
        }
    }

    /// Same draw as [`sample_clicks`](Self::sample_clicks) reduced to
    /// `(missing bins clicked, member bins clicked)`, without placing the
    /// false clicks.
    pub fn sample_counts<R: Rng + ?Sized>(&self, m: usize, k: usize, rng: &mut R) -> (usize, usize) {
        let hits = (0..m).filter(|_| rng.random_bool(self.p_minus)).count();
        (hits, self.false_clicks(k, rng))
    }
}

/// Simulates one coupon period and decodes it.
pub fn simulate_period<R: Rng + ?Sized>(
    rng: &mut R,
    instance: &CouponInstance,
    params: &ChannelParams,
    intensity: f64,
) -> Result<PeriodOutcome> {
    let model = ClickModel::new(params, intensity)?;
    Ok(PeriodOutcome::decode(instance, model.sample_clicks(instance, rng)))
}

/// Aggregate counts over a batch of periods with the derived ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n: u64,
    pub intensity: f64,
    /// N
    pub periods: u64,
    /// M: periods with exactly m clicks
    pub accepted: u64,
    pub correct: u64,
    pub efficiency_hat: f64,
    /// `None` when no period was accepted.
    pub correct_hat: Option<f64>,
    pub success_hat: f64,
    /// `n·I·N / correct`; `None` when no period was correct.
    pub quantum_samples_hat: Option<f64>,
}

impl BatchStats {
    pub fn from_counts(n: u64, intensity: f64, periods: u64, accepted: u64, correct: u64) -> Result<Self> {
        if periods == 0 {
            return Err(invalid("periods", "must be >= 1"));
        }
        if accepted > periods || correct > accepted {
            return Err(invalid(
                "counts",
                format!("need correct <= accepted <= periods, got {correct}/{accepted}/{periods}"),
            ));
        }
        let nf = periods as f64;
        Ok(Self {
            n,
            intensity,
            periods,
            accepted,
            correct,
            efficiency_hat: accepted as f64 / nf,
            correct_hat: (accepted > 0).then(|| correct as f64 / accepted as f64),
            success_hat: correct as f64 / nf,
            quantum_samples_hat: (correct > 0).then(|| n as f64 * intensity * nf / correct as f64),
        })
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    accepted: u64,
    correct: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally { accepted: self.accepted + o.accepted, correct: self.correct + o.correct }
    }
}

/// Runs `periods` independent periods. Parallel over chunks on the current
/// rayon pool.
pub fn run_batch(
    seed: u64,
    instance: &CouponInstance,
    params: &ChannelParams,
    intensity: f64,
    periods: u64,
) -> Result<BatchStats> {
    if periods == 0 {
        return Err(invalid("periods", "must be >= 1"));
    }
    let model = ClickModel::new(params, intensity)?;
    let (m, k) = (instance.m(), instance.k());
    let chunks = periods.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(periods - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..len {
                // decode rule on counts: accepted iff m clicks in total,
                // correct iff they are exactly the m missing bins
                let (hits, false_clicks) = model.sample_counts(m, k, &mut rng);
                t.accepted += (hits + false_clicks == m) as u64;
                t.correct += (hits == m && false_clicks == 0) as u64;
            }
            t
        })
        .reduce(Tally::default, |a, b| a + b);
    BatchStats::from_counts(instance.n() as u64, intensity, periods, tally.accepted, tally.correct)
}

/// Uniform draws with replacement until all k coupons have been seen.
pub fn classical_collector(seed: u64, k: u64) -> Result<u64> {
    check_k(k)?;
    let mut rng = substream(seed, 0);
    Ok(collect_once(&mut rng, k, u64::MAX))
}

fn check_k(k: u64) -> Result<()> {
    if k == 0 {
        return Err(invalid("k", "must be >= 1"));
    }
    Ok(())
}

/// Draw count to completion, or `budget + 1` once the budget is exhausted.
fn collect_once<R: Rng + ?Sized>(rng: &mut R, k: u64, budget: u64) -> u64 {
    let mut seen = vec![false; k as usize];
    let mut missing = k;
    let mut draws = 0u64;
    while missing > 0 {
        if draws == budget {
            return budget + 1;
        }
        draws += 1;
        let c = rng.random_range(0..k) as usize;
        if !seen[c] {
            seen[c] = true;
            missing -= 1;
        }
    }
    draws
}

/// Draw counts of `runs` independent collectors.
pub fn classical_collector_runs(seed: u64, k: u64, runs: u64) -> Result<Vec<u64>> {
    check_k(k)?;
    let chunks = runs.div_ceil(CHUNK);
    let out = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(runs - c * CHUNK);
            (0..len).map(move |_| collect_once(&mut rng, k, u64::MAX)).collect::<Vec<_>>()
        })
        .collect();
    Ok(out)
}

/// A binomial proportion with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64) -> Self {
        const Z: f64 = 1.959_963_984_540_054;
        let n = trials as f64;
        let p = successes as f64 / n;
        let z2 = Z * Z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Self {
            successes,
            trials,
            estimate: p,
            wilson_low: (centre - half).max(0.0),
            wilson_high: (centre + half).min(1.0),
        }
    }

    pub fn std_err(&self) -> f64 {
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

/// Fraction of collectors that finish within `budget` draws.
pub fn classical_success_within(seed: u64, k: u64, budget: u64, runs: u64) -> Result<Proportion> {
    check_k(k)?;
    if budget < k {
        return Err(invalid("budget", format!("{budget} draws cannot cover {k} coupons")));
    }
    if runs == 0 {
        return Err(invalid("runs", "must be >= 1"));
    }
    let chunks = runs.div_ceil(CHUNK);
    let done: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(runs - c * CHUNK);
            (0..len).filter(|_| collect_once(&mut rng, k, budget) <= budget).count() as u64
        })
        .sum();
    Ok(Proportion::new(done, runs))
}

/// Extreme-value approximation `exp(−k·e^{−T/k})` to the completion
/// probability within T draws.
pub fn gumbel_completion(k: u64, budget: u64) -> f64 {
    let k = k as f64;
    (-k * (-(budget as f64) / k).exp()).exp()
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[u64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{classical_expected, ProtocolStats};

    #[test]
    fn deterministic_limit_always_correct() {
        let p = ChannelParams::new(1.0, 0.0, 1.0).unwrap();
        let inst = CouponInstance::new(8, [1, 3, 4, 8]).unwrap();
        let mut rng = substream(1, 0);
        for _ in 0..200 {
            let out = simulate_period(&mut rng, &inst, &p, 40.0).unwrap();
            assert!(out.is_accepted() && out.is_correct());
            assert_eq!(out.clicked_bins(), &[2, 5, 6, 7]);
        }
    }

    #[test]
    fn dark_vacuum_is_discarded() {
        let p = ChannelParams::new(0.7, 0.0, 0.99).unwrap();
        let inst = CouponInstance::single_missing(10, 4).unwrap();
        let mut rng = substream(2, 0);
        for _ in 0..100 {
            let out = simulate_period(&mut rng, &inst, &p, 0.0).unwrap();
            assert!(out.clicked_bins().is_empty());
            assert!(!out.is_accepted());
        }
    }

    #[test]
    fn batch_bounds() {
        let inst = CouponInstance::single_missing(10, 4).unwrap();
        let p = ChannelParams::reference();
        assert!(run_batch(0, &inst, &p, 1.0, 0).is_err());
        let one = run_batch(0, &inst, &p, 1.0, 1).unwrap();
        assert!(one.accepted <= 1 && one.correct <= 1);
        let b = run_batch(5, &inst, &p, 1.0, 10_000).unwrap();
        assert_eq!((b.success_hat * b.periods as f64).round() as u64, b.correct);
        assert!(b.correct <= b.accepted && b.accepted <= b.periods);
    }

    #[test]
    fn batch_independent_of_thread_count() {
        let inst = CouponInstance::new(50, (1..=47).collect::<Vec<_>>()).unwrap();
        let p = ChannelParams::new(0.5, 1e-3, 0.99).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_batch(99, &inst, &p, 1.5, 50_000).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn small_grid_agrees_with_closed_form() {
        for (n, members, i, params) in [
            (6usize, vec![1usize, 2, 3, 4], 1.0, ChannelParams::new(0.6, 0.01, 0.9).unwrap()),
            (20, (1..=19).collect(), 0.5, ChannelParams::new(0.8, 1e-3, 0.95).unwrap()),
            (12, vec![2, 4, 6, 8, 10, 12], 2.0, ChannelParams::new(0.3, 0.02, 0.97).unwrap()),
        ] {
            let inst = CouponInstance::new(n, members).unwrap();
            let periods = 200_000u64;
            let b = run_batch(11, &inst, &params, i, periods).unwrap();
            let s = ProtocolStats::compute(&params, i, inst.m() as u64, inst.k() as u64).unwrap();
            let se = |p: f64, n: f64| (p * (1.0 - p) / n).sqrt();
            let nf = periods as f64;
            assert!((b.efficiency_hat - s.efficiency).abs() <= 3.0 * se(s.efficiency, nf));
            assert!((b.success_hat - s.success_prob).abs() <= 3.0 * se(s.success_prob, nf));
            let ma = b.accepted as f64;
            assert!((b.correct_hat.unwrap() - s.correct_prob).abs() <= 3.0 * se(s.correct_prob, ma));
        }
    }

    #[test]
    fn collector_edges() {
        assert_eq!(classical_collector(3, 1).unwrap(), 1);
        assert!(classical_collector(3, 0).is_err());
        assert!(classical_collector(3, 10).unwrap() >= 10);
        assert_eq!(classical_collector(8, 50).unwrap(), classical_collector(8, 50).unwrap());
    }

    #[test]
    fn collector_mean_k2_and_k10() {
        for (k, runs) in [(2u64, 200_000u64), (10, 50_000)] {
            let xs = classical_collector_runs(4, k, runs).unwrap();
            let (mean, se) = mean_and_se(&xs);
            assert!((mean - classical_expected(k)).abs() < 3.0 * se, "k={k} mean={mean}");
        }
    }

    #[test]
    fn success_within_budget() {
        assert!(classical_success_within(0, 10, 9, 10).is_err());
        // 1 − (1/2)^2 by enumeration of three-draw sequences
        let p = classical_success_within(6, 2, 3, 100_000).unwrap();
        assert!((p.estimate - 0.75).abs() < 3.0 * (0.75f64 * 0.25 / 1e5).sqrt());
        assert!(p.wilson_low < p.estimate && p.estimate < p.wilson_high);
        let p = classical_success_within(6, 1, 1, 10).unwrap();
        assert_eq!(p.estimate, 1.0);
    }

    #[test]
    fn wilson_interval_contains_known_values() {
        let p = Proportion::new(50, 100);
        assert!((p.wilson_low - 0.4038).abs() < 1e-4);
        assert!((p.wilson_high - 0.5962).abs() < 1e-4);
        let zero = Proportion::new(0, 20);
        assert_eq!(zero.wilson_low, 0.0);
    }
}
