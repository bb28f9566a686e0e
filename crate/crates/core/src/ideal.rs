//! Exact small-n reference for the single-copy projective measurement.
//!
//! Measuring `|S⟩` against `{|[n]⟩⟨[n]|, 1 − |[n]⟩⟨[n]|}` yields the second
//! outcome with probability m/n, leaving
//! `|ψ⟩ = √(m/n)|S⟩ − √(k/n)|S̄⟩`. A computational-basis readout of `|ψ⟩`
//! then returns each index with its squared amplitude.

use num_rational::Ratio;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::CouponInstance;
use crate::montecarlo::{substream, CHUNK};

/// Above this universe size only floating-point values are kept.
pub const EXACT_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Serialize)]
pub struct IdealOutcomeDistribution {
    n: usize,
    m: usize,
    k: usize,
    pub p_outcome2: f64,
    /// Conditional readout probability of index `i` (1-based) at `[i - 1]`.
    pub per_index_conditional: Vec<f64>,
    #[serde(skip)]
    exact: Option<ExactDistribution>,
}

#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub p_outcome2: Ratio<u64>,
    pub per_index_conditional: Vec<Ratio<u64>>,
}

impl ExactDistribution {
    pub fn total_conditional(&self) -> Ratio<u128> {
        self.per_index_conditional
            .iter()
            .map(|r| Ratio::new(*r.numer() as u128, *r.denom() as u128))
            .fold(Ratio::from_integer(0), |acc, r| acc + r)
    }
}

/// Builds the outcome distribution by squaring the amplitudes of `|ψ⟩`
/// index by index.
pub fn ideal_distribution(instance: &CouponInstance) -> IdealOutcomeDistribution {
    let (n, m, k) = (instance.n(), instance.m(), instance.k());

    // |ψ⟩ = c_S·|S⟩ − c_Sbar·|S̄⟩ with |S⟩ = k^{-1/2} Σ_{i∈S}|i⟩ and
    // |S̄⟩ = m^{-1/2} Σ_{i∉S}|i⟩; squared coefficients are rational.
    let c_s_sq = (m as f64 / n as f64, Ratio::new(m as u64, n as u64));
    let c_sbar_sq = (k as f64 / n as f64, Ratio::new(k as u64, n as u64));
    let exact = n <= EXACT_LIMIT;

    let mut float = Vec::with_capacity(n);
    let mut rational = Vec::with_capacity(if exact { n } else { 0 });
    for i in 1..=n {
        let (coef, size) = if instance.contains(i) { (c_s_sq, k) } else { (c_sbar_sq, m) };
        float.push(coef.0 / size as f64);
        if exact {
            rational.push(coef.1 / Ratio::from_integer(size as u64));
        }
    }

    IdealOutcomeDistribution {
        n,
        m,
        k,
        p_outcome2: m as f64 / n as f64,
        per_index_conditional: float,
        exact: exact.then(|| ExactDistribution {
            p_outcome2: Ratio::new(m as u64, n as u64),
            per_index_conditional: rational,
        }),
    }
}

impl IdealOutcomeDistribution {
    pub fn exact(&self) -> Option<&ExactDistribution> {
        self.exact.as_ref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Conditional probability of index `i` (1-based).
    pub fn conditional(&self, i: usize) -> f64 {
        self.per_index_conditional[i - 1]
    }

    /// Probability that one copy reveals a specific missing element.
    pub fn per_copy_hit(&self) -> f64 {
        self.p_outcome2 * self.k as f64 / (self.n as f64 * self.m as f64)
    }

    /// One measured copy: `None` for the first outcome, otherwise the index
    /// read out of `|ψ⟩`.
    pub fn sample<R: Rng + ?Sized>(&self, instance: &CouponInstance, rng: &mut R) -> Option<usize> {
        if !rng.random_bool(self.p_outcome2) {
            return None;
        }
        // total conditional mass on S̄ is k/n, spread uniformly
        if rng.random_bool(self.k as f64 / self.n as f64) {
            let missing = instance.complement();
            Some(missing[rng.random_range(0..missing.len())])
        } else {
            let members = instance.members();
            Some(members[rng.random_range(0..members.len())])
        }
    }
}

/// Number of copies of `|S⟩` consumed until every element of `S̄` has been
/// read out. First-outcome results and indices from S carry no information
/// for this learner and are dropped.
pub fn simulate_ideal_learning(seed: u64, instance: &CouponInstance) -> u64 {
    let dist = ideal_distribution(instance);
    let mut rng = substream(seed, 0);
    learn_with(&dist, instance, &mut rng)
}

fn learn_with<R: Rng + ?Sized>(
    dist: &IdealOutcomeDistribution,
    instance: &CouponInstance,
    rng: &mut R,
) -> u64 {
    let mut seen = vec![false; instance.n() + 1];
    let mut remaining = instance.m();
    let mut copies = 0u64;
    while remaining > 0 {
        copies += 1;
        if let Some(i) = dist.sample(instance, rng) {
            if !instance.contains(i) && !seen[i] {
                seen[i] = true;
                remaining -= 1;
            }
        }
    }
    copies
}

/// Copy counts for `runs` independent learners, each on its own substream.
pub fn simulate_ideal_learning_runs(seed: u64, instance: &CouponInstance, runs: u64) -> Vec<u64> {
    let dist = ideal_distribution(instance);
    (0..runs)
        .map(|r| {
            let mut rng = substream(seed, r);
            learn_with(&dist, instance, &mut rng)
        })
        .collect()
}

/// Tallies of single-copy measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdealSampleCounts {
    pub samples: u64,
    pub outcome2: u64,
    /// Second-outcome readouts that named an element of S̄.
    pub missing_hits: u64,
    /// Readouts of index `i` at `[i - 1]`.
    pub per_index: Vec<u64>,
}

/// Measures `samples` independent copies, chunked on substreams.
pub fn sample_outcomes(seed: u64, instance: &CouponInstance, samples: u64) -> Result<IdealSampleCounts> {
    if samples == 0 {
        return Err(invalid("samples", "must be >= 1"));
    }
    let dist = ideal_distribution(instance);
    let n = instance.n();
    let empty = || IdealSampleCounts { samples: 0, outcome2: 0, missing_hits: 0, per_index: vec![0; n] };
    let counts = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let mut t = empty();
            t.samples = CHUNK.min(samples - c * CHUNK);
            for _ in 0..t.samples {
                if let Some(i) = dist.sample(instance, &mut rng) {
                    t.outcome2 += 1;
                    t.missing_hits += !instance.contains(i) as u64;
                    t.per_index[i - 1] += 1;
                }
            }
            t
        })
        .reduce(empty, |mut a, b| {
            a.samples += b.samples;
            a.outcome2 += b.outcome2;
            a.missing_hits += b.missing_hits;
            a.per_index.iter_mut().zip(&b.per_index).for_each(|(x, y)| *x += y);
            a
        });
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n4_example() {
        let inst = CouponInstance::new(4, [1, 2, 3]).unwrap();
        let d = ideal_distribution(&inst);
        let ex = d.exact().unwrap();
        assert_eq!(ex.p_outcome2, Ratio::new(1, 4));
        assert_eq!(ex.per_index_conditional[3], Ratio::new(3, 4));
        for i in 0..3 {
            assert_eq!(ex.per_index_conditional[i], Ratio::new(1, 12));
        }
        assert_eq!(ex.total_conditional(), Ratio::from_integer(1));
        assert!((d.conditional(4) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn n2_example() {
        let inst = CouponInstance::new(2, [1]).unwrap();
        let ex = ideal_distribution(&inst).exact().cloned().unwrap();
        assert_eq!(ex.p_outcome2, Ratio::new(1, 2));
        assert_eq!(ex.per_index_conditional, vec![Ratio::new(1, 2); 2]);
    }

    #[test]
    fn conditionals_normalised() {
        for (n, members) in [
            (10, vec![1, 5, 9]),
            (37, (1..=30).collect::<Vec<_>>()),
            (10_000, (2..=10_000).collect()),
        ] {
            let inst = CouponInstance::new(n, members).unwrap();
            let d = ideal_distribution(&inst);
            assert_eq!(d.exact().unwrap().total_conditional(), Ratio::from_integer(1));
            let total: f64 = d.per_index_conditional.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let inst = CouponInstance::single_missing(20_000, 3).unwrap();
        let d = ideal_distribution(&inst);
        assert!(d.exact().is_none());
        let total: f64 = d.per_index_conditional.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_and_member_weights() {
        let inst = CouponInstance::new(9, [2, 4, 6, 8]).unwrap();
        let d = ideal_distribution(&inst);
        let (n, m, k) = (9.0, 5.0, 4.0);
        for i in 1..=9 {
            let want = if inst.contains(i) { m / (n * k) } else { k / (n * m) };
            assert!((d.conditional(i) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_learning_is_reproducible() {
        let inst = CouponInstance::new(6, [1, 2, 4]).unwrap();
        assert_eq!(simulate_ideal_learning(17, &inst), simulate_ideal_learning(17, &inst));
        assert_eq!(
            simulate_ideal_learning_runs(3, &inst, 50),
            simulate_ideal_learning_runs(3, &inst, 50)
        );
    }

    #[test]
    fn n4_mean_copies_geometric() {
        // E[copies] = 1 / (1/4 · 3/4) = 16/3, Var = (1 − p)/p²
        let inst = CouponInstance::new(4, [1, 2, 3]).unwrap();
        let runs = 100_000;
        let counts = simulate_ideal_learning_runs(2024, &inst, runs);
        let p = ideal_distribution(&inst).per_copy_hit();
        assert!((p - 3.0 / 16.0).abs() < 1e-15);
        let mean = counts.iter().sum::<u64>() as f64 / runs as f64;
        let sd = ((1.0 - p) / (p * p)).sqrt();
        assert!((mean - 16.0 / 3.0).abs() < 3.0 * sd / (runs as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn m1_copies_fit_geometric_pmf() {
        let inst = CouponInstance::single_missing(5, 2).unwrap();
        let p = ideal_distribution(&inst).per_copy_hit();
        let runs = 60_000u64;
        let counts = simulate_ideal_learning_runs(9, &inst, runs);
        for t in 1..=5u64 {
            let want = (1.0 - p).powi(t as i32 - 1) * p;
            let got = counts.iter().filter(|&&c| c == t).count() as f64 / runs as f64;
            let se = (want * (1.0 - want) / runs as f64).sqrt();
            assert!((got - want).abs() < 4.0 * se, "t={t} got {got} want {want}");
        }
    }

    #[test]
    fn sampled_counts_match_distribution() {
        let inst = CouponInstance::single_missing(4, 4).unwrap();
        let c = sample_outcomes(5, &inst, 200_000).unwrap();
        assert_eq!(c.samples, 200_000);
        assert_eq!(c.per_index.iter().sum::<u64>(), c.outcome2);
        let p = ideal_distribution(&inst).per_copy_hit();
        let got = c.missing_hits as f64 / c.samples as f64;
        assert!((got - p).abs() < 4.0 * (p * (1.0 - p) / 2e5).sqrt(), "{got} vs {p}");
        assert_eq!(sample_outcomes(5, &inst, 200_000).unwrap(), c);
    }
}
