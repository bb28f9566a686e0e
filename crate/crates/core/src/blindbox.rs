//! The blind-box game: Alice hides m of n balls, Bob buys detection periods
//! at a price proportional to the light he asks for and is paid the
//! classical information cost if he names the missing balls.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{classical_limit, sample_cost, success_prob};
use crate::error::{invalid, Error, Result};
use crate::model::{check_intensity, ChannelParams, CouponInstance};
use crate::montecarlo::{substream, ClickModel, CHUNK};

/// Logarithm used for the middle factor of the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardLog {
    /// `(n−m)·ln(n−m)·log₂n`, the reading that matches the published
    /// reward values.
    #[default]
    Natural,
    /// `(n−m)·log₂(n−m)·log₂n`.
    Binary,
}

/// Bits paid for one period at per-pulse intensity `intensity`:
/// `n·I·log₂n`.
pub fn price(n: u64, intensity: f64) -> f64 {
    n as f64 * intensity * (n as f64).log2()
}

/// Reward for a correct guess, `(n−m)·ln(n−m)·log₂n`.
pub fn classical_resources(n: u64, m: u64) -> Result<f64> {
    classical_resources_with(n, m, RewardLog::Natural)
}

pub fn classical_resources_with(n: u64, m: u64, log: RewardLog) -> Result<f64> {
    if m >= n || n - m < 2 {
        return Err(invalid("m", format!("need n - m >= 2, got n = {n}, m = {m}")));
    }
    let k = n - m;
    let middle = match log {
        RewardLog::Natural => classical_limit(k),
        RewardLog::Binary => k as f64 * (k as f64).log2(),
    };
    Ok(middle * (n as f64).log2())
}

/// Expected spend when retrying at a fixed intensity until a period shows
/// exactly the missing balls: `price / P_suc`.
pub fn expected_quantum_resources(params: &ChannelParams, n: u64, m: u64, intensity: f64) -> Result<f64> {
    if m == 0 || m >= n {
        return Err(invalid("m", format!("need 1 <= m < n = {n}")));
    }
    let s = success_prob(params, intensity, m, n - m)?;
    resources_from_success(n, intensity, s)
}

/// Same as [`expected_quantum_resources`] with a measured success rate.
pub fn resources_from_success(n: u64, intensity: f64, success: f64) -> Result<f64> {
    Ok(sample_cost(n, intensity, success)? * (n as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub m: usize,
    pub params: ChannelParams,
    #[serde(default)]
    pub reward_log: RewardLog,
}

impl GameConfig {
    pub fn new(n: usize, m: usize, params: ChannelParams) -> Result<Self> {
        let c = Self { n, m, params, reward_log: RewardLog::Natural };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.m >= self.n {
            return Err(invalid("m", format!("need 1 <= m < n, got n = {}, m = {}", self.n, self.m)));
        }
        Ok(())
    }

    /// Payout for a correct guess. A single remaining ball carries no
    /// information, so `n − m = 1` pays 0.
    pub fn reward(&self) -> f64 {
        classical_resources_with(self.n as u64, self.m as u64, self.reward_log).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameState {
    Open,
    Won,
    Lost,
}

/// One bought period: what was paid and which bins clicked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Play {
    pub intensity: f64,
    pub price: f64,
    /// 1-based, ascending.
    pub clicked_bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessResult {
    pub state: GameState,
    pub payoff: f64,
    pub net: f64,
    pub revealed_missing: Vec<usize>,
}

/// A single game. The hidden set and every click pattern come from one
/// ChaCha8 stream seeded by `seed`, so the seed plus the sequence of
/// intensities replays a session exactly.
#[derive(Debug, Clone)]
pub struct GameSession {
    config: GameConfig,
    seed: u64,
    instance: CouponInstance,
    rng: ChaCha8Rng,
    spent: f64,
    plays: Vec<Play>,
    state: GameState,
    payoff: f64,
}

pub fn new_session(seed: u64, config: GameConfig) -> Result<GameSession> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let missing = index::sample(&mut rng, config.n, config.m).into_iter().map(|i| i + 1);
    let instance = CouponInstance::from_missing(config.n, missing)?;
    Ok(GameSession {
        config,
        seed,
        instance,
        rng,
        spent: 0.0,
        plays: Vec::new(),
        state: GameState::Open,
        payoff: 0.0,
    })
}

impl GameSession {
    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn plays(&self) -> &[Play] {
        &self.plays
    }

    pub fn state(&self) -> GameState {
        self.state
    }

    pub fn payoff(&self) -> f64 {
        self.payoff
    }

    pub fn net(&self) -> f64 {
        self.payoff - self.spent
    }

    /// The hidden set regardless of state; callers facing the player
    /// should use [`revealed_missing`](Self::revealed_missing).
    pub fn hidden_missing(&self) -> &[usize] {
        self.instance.missing()
    }

    /// The hidden set once the game is over.
    pub fn revealed_missing(&self) -> Option<&[usize]> {
        (self.state != GameState::Open).then(|| self.instance.missing())
    }

    /// Buys one period at `intensity` and returns the clicked bins.
    pub fn play(&mut self, intensity: f64) -> Result<&Play> {
        if self.state != GameState::Open {
            return Err(Error::SessionClosed);
        }
        check_intensity(intensity)?;
        let model = ClickModel::new(&self.config.params, intensity)?;
        let mut clicked_bins = model.sample_clicks(&self.instance, &mut self.rng);
        clicked_bins.sort_unstable();
        let price = price(self.config.n as u64, intensity);
        self.spent += price;
        self.plays.push(Play { intensity, price, clicked_bins });
        Ok(self.plays.last().expect("just pushed"))
    }

    /// Closes the game. A guess of the wrong size or with invalid indices
    /// is rejected and leaves the game open.
    pub fn guess(&mut self, guessed_missing: &[usize]) -> Result<GuessResult> {
        if self.state != GameState::Open {
            return Err(Error::SessionClosed);
        }
        let m = self.config.m;
        if guessed_missing.len() != m {
            return Err(Error::GuessSize { expected: m, got: guessed_missing.len() });
        }
        let mut g = guessed_missing.to_vec();
        g.sort_unstable();
        g.dedup();
        if g.len() != m {
            return Err(invalid("missing", "guess repeats an index"));
        }
        if let Some(&bad) = g.iter().find(|&&i| i == 0 || i > self.config.n) {
            return Err(invalid("missing", format!("index {bad} outside 1..={}", self.config.n)));
        }
        if g == self.instance.missing() {
            self.state = GameState::Won;
            self.payoff = self.config.reward();
        } else {
            self.state = GameState::Lost;
            self.payoff = 0.0;
        }
        Ok(GuessResult {
            state: self.state,
            payoff: self.payoff,
            net: self.net(),
            revealed_missing: self.instance.missing().to_vec(),
        })
    }
}

/// Spend over many games under the retry-until-correct policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrySummary {
    pub runs: u64,
    pub intensity: f64,
    pub price: f64,
    pub mean_plays: f64,
    pub mean_spend: f64,
    pub std_err_spend: f64,
    pub expected_spend: f64,
    pub reward: f64,
}

/// Plays each game at a fixed intensity until a period shows exactly the
/// missing balls. Runs are chunked on substreams like every other batch.
pub fn simulate_retry_until_correct(
    seed: u64,
    config: &GameConfig,
    intensity: f64,
    runs: u64,
) -> Result<RetrySummary> {
    config.validate()?;
    if runs == 0 {
        return Err(invalid("runs", "must be >= 1"));
    }
    let (n, m) = (config.n as u64, config.m as u64);
    let expected_spend = expected_quantum_resources(&config.params, n, m, intensity)?;
    let model = ClickModel::new(&config.params, intensity)?;
    let (m, k) = (config.m, config.n - config.m);
    let chunks = runs.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(runs - c * CHUNK);
            let mut acc = (0u128, 0u128);
            for _ in 0..len {
                let mut plays = 0u64;
                loop {
                    plays += 1;
                    let (hits, false_clicks) = model.sample_counts(m, k, &mut rng);
                    if hits == m && false_clicks == 0 {
                        break;
                    }
                }
                acc.0 += plays as u128;
                acc.1 += (plays as u128) * (plays as u128);
            }
            acc
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p = price(n, intensity);
    let r = runs as f64;
    let mean_plays = sum as f64 / r;
    let var_plays = if runs > 1 { (sum_sq as f64 - r * mean_plays * mean_plays) / (r - 1.0) } else { 0.0 };
    Ok(RetrySummary {
        runs,
        intensity,
        price: p,
        mean_plays,
        mean_spend: mean_plays * p,
        std_err_spend: p * (var_plays.max(0.0) / r).sqrt(),
        expected_spend,
        reward: config.reward(),
    })
}
