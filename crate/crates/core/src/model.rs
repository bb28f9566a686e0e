//! Domain types shared by every other module.
//!
//! Indices are 1-based throughout: the universe is `[n] = {1, ..., n}`.

use std::collections::BTreeSet;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Hardware imperfections of the interferometer and detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    eta: f64,
    dark_rate: f64,
    visibility: f64,
}

impl ChannelParams {
    pub fn new(eta: f64, dark_rate: f64, visibility: f64) -> Result<Self> {
        check_unit("eta", eta)?;
        check_unit("dark_rate", dark_rate)?;
        check_unit("visibility", visibility)?;
        Ok(Self { eta, dark_rate, visibility })
    }

    /// Lossless, noiseless, perfectly visible interferometer.
    pub fn ideal() -> Self {
        Self { eta: 1.0, dark_rate: 0.0, visibility: 1.0 }
    }

    /// Simulation parameters used for the intensity sweep and the
    /// classical/quantum crossover: η = 0.68, p_d = 1e-8, ν = 0.99998.
    pub fn reference() -> Self {
        Self { eta: 0.68, dark_rate: 1e-8, visibility: 0.99998 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dark_rate(&self) -> f64 {
        self.dark_rate
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }
}

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid(name, format!("{v} is outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_intensity(intensity: f64) -> Result<()> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(invalid("intensity", format!("{intensity} must be a finite value >= 0")));
    }
    Ok(())
}

/// The universe `[n]` together with the hidden set `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct CouponInstance {
    n: usize,
    members: Vec<usize>,
    missing: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    n: usize,
    /// 1-based members of S.
    s_members: Vec<usize>,
}

impl TryFrom<RawInstance> for CouponInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        CouponInstance::new(raw.n, raw.s_members)
    }
}

impl From<CouponInstance> for RawInstance {
    fn from(inst: CouponInstance) -> Self {
        RawInstance { n: inst.n, s_members: inst.members }
    }
}

impl CouponInstance {
    /// Builds an instance from the members of `S`. Order does not matter but
    /// duplicates are rejected.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInstance("duplicate member in S".into()));
        }
        if let Some(&bad) = members.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::InvalidInstance(format!("member {bad} is outside 1..={n}")));
        }
        let k = members.len();
        if k == 0 || k >= n {
            return Err(Error::InvalidInstance(format!(
                "need 1 <= k < n, got k={k}, n={n}"
            )));
        }
        let missing = set_difference(n, &members);
        Ok(Self { n, members, missing })
    }

    /// Builds an instance from the missing elements `S̄` instead.
    pub fn from_missing(n: usize, missing: impl IntoIterator<Item = usize>) -> Result<Self> {
        let missing: BTreeSet<usize> = missing.into_iter().collect();
        if let Some(&bad) = missing.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::InvalidInstance(format!("missing index {bad} is outside 1..={n}")));
        }
        Self::new(n, (1..=n).filter(|i| !missing.contains(i)))
    }

    /// A uniformly random m-subset of `[n]` as `S̄`, drawn from
    /// `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn seeded(n: usize, m: usize, seed: u64) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::InvalidInstance(format!("need 1 <= m < n, got m={m}, n={n}")));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Self::from_missing(n, rand::seq::index::sample(&mut rng, n, m).into_iter().map(|i| i + 1))
    }

    /// `S_j = [n] ∖ {j}`, the single-missing-element instance used by the
    /// m = 1 experiments.
    pub fn single_missing(n: usize, j: usize) -> Result<Self> {
        Self::from_missing(n, [j])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.members.len()
    }

    pub fn m(&self) -> usize {
        self.n - self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// `S̄ = [n] ∖ S`, sorted.
    pub fn complement(&self) -> Vec<usize> {
        self.missing.clone()
    }

    /// Borrowed view of `S̄`.
    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    /// Encodes `|α, S⟩`: +1 phase on members of S, −1 elsewhere.
    pub fn encode(&self, intensity: f64) -> Result<PulseTrain> {
        check_intensity(intensity)?;
        let signs = (1..=self.n)
            .map(|i| if self.contains(i) { PulseSign::Plus } else { PulseSign::Minus })
            .collect();
        Ok(PulseTrain { intensity, signs })
    }
}

fn set_difference(n: usize, sorted: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - sorted.len());
    let mut it = sorted.iter().peekable();
    for i in 1..=n {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PulseSign {
    Plus,
    Minus,
}

impl PulseSign {
    pub fn as_i8(self) -> i8 {
        match self {
            PulseSign::Plus => 1,
            PulseSign::Minus => -1,
        }
    }
}

/// Per-pulse phase encoding of a coherent pulse train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    intensity: f64,
    signs: Vec<PulseSign>,
}

impl PulseTrain {
    /// The local reference train `|α, [n]⟩`: every pulse in phase.
    pub fn reference(n: usize, intensity: f64) -> Result<Self> {
        check_intensity(intensity)?;
        Ok(Self { intensity, signs: vec![PulseSign::Plus; n] })
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn signs(&self) -> &[PulseSign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// μ = n·I.
    pub fn total_mean_photons(&self) -> f64 {
        self.signs.len() as f64 * self.intensity
    }

    pub fn minus_count(&self) -> usize {
        self.signs.iter().filter(|s| **s == PulseSign::Minus).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Exactly m bins clicked; the guessed set is S = [n] ∖ clicks.
    Accepted { guessed_set: Vec<usize> },
    Discarded,
}

/// What the detector showed during one coupon period and how it decodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    clicked_bins: Vec<usize>,
    verdict: Verdict,
    correct: bool,
}

impl PeriodOutcome {
    /// Decodes a click pattern: accept iff exactly m bins clicked, correct
    /// iff the clicks are exactly `S̄`.
    pub fn decode(instance: &CouponInstance, mut clicked_bins: Vec<usize>) -> Self {
        clicked_bins.sort_unstable();
        clicked_bins.dedup();
        if clicked_bins.len() != instance.m() {
            return Self { clicked_bins, verdict: Verdict::Discarded, correct: false };
        }
        let correct = clicked_bins.iter().all(|&i| !instance.contains(i));
        let guessed_set = (1..=instance.n())
            .filter(|i| clicked_bins.binary_search(i).is_err())
            .collect();
        Self { clicked_bins, verdict: Verdict::Accepted { guessed_set }, correct }
    }

    pub fn clicked_bins(&self) -> &[usize] {
        &self.clicked_bins
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self.verdict, Verdict::Accepted { .. })
    }

    /// Always false for discarded periods.
    pub fn is_correct(&self) -> bool {
        self.correct
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_out_of_range() {
        assert!(ChannelParams::new(1.1, 0.0, 1.0).is_err());
        assert!(ChannelParams::new(0.5, -1e-9, 1.0).is_err());
        assert!(ChannelParams::new(0.5, 0.0, f64::NAN).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn instance_bounds() {
        assert!(CouponInstance::new(4, [1, 2, 3, 4]).is_err());
        assert!(CouponInstance::new(4, []).is_err());
        assert!(CouponInstance::new(4, [1, 1]).is_err());
        assert!(CouponInstance::new(4, [0, 1]).is_err());
        assert!(CouponInstance::new(4, [5]).is_err());
        let inst = CouponInstance::new(2, [1]).unwrap();
        assert_eq!((inst.k(), inst.m()), (1, 1));
    }

    #[test]
    fn complement_small() {
        let inst = CouponInstance::new(4, [3, 1, 2]).unwrap();
        assert_eq!(inst.complement(), vec![4]);

        let inst = CouponInstance::new(100, (1..=100).filter(|&i| i != 7 && i != 42)).unwrap();
        assert_eq!(inst.complement(), vec![7, 42]);
    }

    #[test]
    fn complement_every_single_missing_index() {
        let n = 2000;
        for j in 1..=n {
            let inst = CouponInstance::single_missing(n, j).unwrap();
            // set-difference oracle
            let oracle: Vec<usize> =
                (1..=n).filter(|i| !inst.members().contains(i)).collect();
            assert_eq!(inst.complement(), oracle);
            assert_eq!(oracle, vec![j]);
        }
    }

    #[test]
    fn encode_examples() {
        let inst = CouponInstance::new(4, [1, 2, 3]).unwrap();
        let train = inst.encode(1.0).unwrap();
        let signs: Vec<i8> = train.signs().iter().map(|s| s.as_i8()).collect();
        assert_eq!(signs, vec![1, 1, 1, -1]);
        assert_eq!(train.total_mean_photons(), 4.0);

        let inst = CouponInstance::single_missing(2000, 1).unwrap();
        let train = inst.encode(1.0).unwrap();
        assert_eq!(train.total_mean_photons(), 2000.0);
        assert_eq!(train.minus_count(), 1);

        assert_eq!(inst.encode(0.0).unwrap().total_mean_photons(), 0.0);
        assert!(inst.encode(-0.1).is_err());
    }

    #[test]
    fn reference_train_is_all_plus() {
        let t = PulseTrain::reference(5, 2.0).unwrap();
        assert_eq!(t.minus_count(), 0);
        assert_eq!(t.total_mean_photons(), 10.0);
    }

    #[test]
    fn decode_rules() {
        let inst = CouponInstance::new(5, [1, 2, 4]).unwrap();
        let out = PeriodOutcome::decode(&inst, vec![5, 3]);
        assert!(out.is_accepted() && out.is_correct());
        assert_eq!(out.verdict(), &Verdict::Accepted { guessed_set: vec![1, 2, 4] });

        let out = PeriodOutcome::decode(&inst, vec![1, 3]);
        assert!(out.is_accepted() && !out.is_correct());

        let out = PeriodOutcome::decode(&inst, vec![3]);
        assert_eq!(out.verdict(), &Verdict::Discarded);
        assert!(!out.is_correct());
    }

    #[test]
    fn instance_serde_rejects_invalid() {
        let bad = r#"{"n":3,"s_members":[1,2,3]}"#;
        assert!(serde_json::from_str::<CouponInstance>(bad).is_err());
        let ok = r#"{"n":3,"s_members":[3,1]}"#;
        let inst: CouponInstance = serde_json::from_str(ok).unwrap();
        assert_eq!(inst.complement(), vec![2]);
    }

    #[test]
    fn seeded_instances_are_reproducible() {
        let a = CouponInstance::seeded(50, 3, 8).unwrap();
        assert_eq!(a, CouponInstance::seeded(50, 3, 8).unwrap());
        assert_eq!(a.m(), 3);
        assert!(CouponInstance::seeded(5, 5, 0).is_err());
    }
}
