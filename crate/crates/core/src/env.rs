//! Synthetic contextual linear bandit instances.
//!
//! `θ*` is uniform on the unit sphere. Each round offers `K` unit actions:
//! one optimal action with `⟨x, θ*⟩ = 0.75` and `K − 1` suboptimal ones whose
//! inner product is uniform on an interval, placed uniformly on the
//! corresponding slice of the sphere.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Normal, StandardNormal};

use crate::bandit::DecisionSet;
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng, Stream};

pub const OPTIMAL_DOT: f64 = 0.75;
pub const SUBOPTIMAL_LOW: f64 = -0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// Suboptimal arms lie below the optimal one by at least `Δ`.
    Forced(f64),
    /// Suboptimal arms share the optimal arm's upper end.
    None,
}

impl GapMode {
    pub fn value(self) -> f64 {
        match self {
            GapMode::Forced(g) => g,
            GapMode::None => 0.0,
        }
    }

    pub fn from_value(gap: f64) -> Self {
        if gap > 0.0 {
            GapMode::Forced(gap)
        } else {
            GapMode::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardModel {
    /// `±1` with mean `⟨x, θ*⟩`.
    PlusMinusOne,
    /// `⟨x, θ*⟩ + N(0, σ²)`.
    GaussianNoise(f64),
}

impl RewardModel {
    /// Subgaussian scale handed to the confidence width.
    pub fn subgaussian_sigma(self) -> f64 {
        match self {
            RewardModel::PlusMinusOne => 1.0,
            RewardModel::GaussianNoise(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub d: usize,
    /// Actions per round.
    pub k: usize,
    pub gap: GapMode,
    pub reward: RewardModel,
}

impl EnvConfig {
    pub fn new(d: usize, gap: GapMode, reward: RewardModel) -> Self {
        Self {
            d,
            k: d * d,
            gap,
            reward,
        }
    }

    pub fn with_actions(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Interval of mean rewards for suboptimal arms.
    pub fn suboptimal_interval(&self) -> (f64, f64) {
        (SUBOPTIMAL_LOW, OPTIMAL_DOT - self.gap.value())
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParameter(format!(
                "decision sets need d >= 3, got {}",
                self.d
            )));
        }
        if self.k == 0 {
            return Err(Error::EmptyDecisionSet);
        }
        let (lo, hi) = self.suboptimal_interval();
        if !(hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "gap {} is too large",
                self.gap.value()
            )));
        }
        Ok(())
    }
}

/// The environment's unknown unit parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenParameter {
    pub theta_star: DVector<f64>,
}

fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

pub fn gen_theta_star<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<HiddenParameter> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!(
            "theta* needs d >= 2, got {d}"
        )));
    }
    loop {
        let g = gaussian_vector(d, rng);
        let norm = g.norm();
        if norm > 0.0 {
            return Ok(HiddenParameter {
                theta_star: g / norm,
            });
        }
    }
}

/// Writes a unit vector with `⟨x, θ⟩ = a`, uniform on that slice of the
/// sphere, into `out`.
fn slice_point<R: Rng + ?Sized>(theta: &[f64], a: f64, rng: &mut R, out: &mut [f64]) {
    loop {
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        let proj: f64 = theta.iter().zip(out.iter()).map(|(t, g)| t * g).sum();
        for (o, t) in out.iter_mut().zip(theta) {
            *o -= t * proj;
        }
        let norm = out.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let scale = (1.0 - a * a).sqrt() / norm;
            for (o, t) in out.iter_mut().zip(theta) {
                *o = t * a + *o * scale;
            }
            return;
        }
    }
}

pub fn gen_decision_set<R: Rng + ?Sized>(
    theta: &HiddenParameter,
    cfg: &EnvConfig,
    rng: &mut R,
) -> Result<DecisionSet> {
    cfg.validate()?;
    let (lo, hi) = cfg.suboptimal_interval();
    let optimal_at = rng.random_range(0..cfg.k);
    let mut actions = DMatrix::zeros(cfg.d, cfg.k);
    let th = theta.theta_star.as_slice();
    for (j, col) in actions.as_mut_slice().chunks_exact_mut(cfg.d).enumerate() {
        let a = if j == optimal_at {
            OPTIMAL_DOT
        } else if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        };
        slice_point(th, a, rng, col);
    }
    DecisionSet::new(actions)
}

pub fn draw_reward<R: Rng + ?Sized>(
    x: &DVector<f64>,
    theta: &HiddenParameter,
    model: RewardModel,
    rng: &mut R,
) -> Result<f64> {
    let mean = x.dot(&theta.theta_star);
    match model {
        RewardModel::PlusMinusOne => {
            if mean.abs() > 1.0 + 1e-9 {
                return Err(Error::Domain(format!(
                    "mean reward {mean} outside [-1, 1] for the +-1 model"
                )));
            }
            let p = (1.0 + mean) / 2.0;
            Ok(if rng.random::<f64>() < p { 1.0 } else { -1.0 })
        }
        RewardModel::GaussianNoise(sigma) => {
            let noise =
                Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(mean + rng.sample(noise))
        }
    }
}

/// `max_{x∈D}⟨θ*, x⟩ − ⟨θ*, x_chosen⟩`.
pub fn pseudo_regret_increment(
    decisions: &DecisionSet,
    chosen: usize,
    theta: &HiddenParameter,
) -> f64 {
    let means = decisions.matrix().tr_mul(&theta.theta_star);
    let best = means.max();
    (best - means[chosen]).max(0.0)
}

/// One environment instance with its own decision and reward streams.
#[derive(Debug, Clone)]
pub struct Environment {
    pub cfg: EnvConfig,
    pub theta: HiddenParameter,
    decision_rng: SimRng,
    reward_rng: SimRng,
}

impl Environment {
    pub fn new(cfg: EnvConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let theta = gen_theta_star(cfg.d, &mut stream(seed, Stream::Theta))?;
        Ok(Self {
            cfg,
            theta,
            decision_rng: stream(seed, Stream::Decisions),
            reward_rng: stream(seed, Stream::Rewards),
        })
    }

    pub fn next_decision_set(&mut self) -> Result<DecisionSet> {
        gen_decision_set(&self.theta, &self.cfg, &mut self.decision_rng)
    }

    pub fn reward(&mut self, x: &DVector<f64>) -> Result<f64> {
        draw_reward(x, &self.theta, self.cfg.reward, &mut self.reward_rng)
    }

    pub fn regret(&self, decisions: &DecisionSet, chosen: usize) -> f64 {
        pseudo_regret_increment(decisions, chosen, &self.theta)
    }
}
