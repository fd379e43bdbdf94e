//! One bandit run: environment, private tree, and the optimistic policy.

use nalgebra::{DMatrix, DVector};

use crate::bandit::{
    select_action, AccurateBounds, BanditParams, ConfidenceEllipsoid, DecisionSet, PrivatizedState,
};
use crate::env::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::noise::{MechanismNoise, NoiseMechanism};
use crate::tree::{AugmentedRow, PrivateGramTree};

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    pub index: usize,
    pub action: DVector<f64>,
    pub reward: f64,
    pub beta: f64,
    /// Instantaneous pseudo-regret (uses `θ*`; measurement only).
    pub regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub env: EnvConfig,
    pub params: BanditParams,
    pub mechanism: NoiseMechanism,
    pub seed: u64,
}

impl SimConfig {
    /// Standard configuration for the synthetic environment: unit actions,
    /// unit `θ*`, `α = 1/n`, `L̃² = 2`.
    pub fn standard(env: EnvConfig, n: usize, mechanism: NoiseMechanism, seed: u64) -> Self {
        let params = BanditParams::unit_sphere(env.d, n, env.reward.subgaussian_sigma());
        Self {
            env,
            params,
            mechanism,
            seed,
        }
    }
}

/// Sequential simulation. The policy half (`V_t`, `ũ_t`, `β_t`, the arg max)
/// never touches `θ*`; the environment uses it only to draw rewards and to
/// score regret.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: BanditParams,
    mechanism: NoiseMechanism,
    bounds: AccurateBounds,
    shift: f64,
    env: Environment,
    tree: PrivateGramTree<MechanismNoise>,
    t: usize,
    cum_regret: f64,
    last_state: Option<PrivatizedState>,
    last_ellipsoid: Option<ConfidenceEllipsoid>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.params.validate()?;
        if cfg.mechanism.d != cfg.params.d || cfg.env.d != cfg.params.d {
            return Err(Error::InvalidParameter(
                "environment, mechanism and bandit dimensions disagree".into(),
            ));
        }
        let bounds = cfg.mechanism.accurate_bounds()?;
        let shift = cfg.mechanism.shift();
        let env = Environment::new(cfg.env, cfg.seed)?;
        let mut tree = PrivateGramTree::new(
            cfg.params.n,
            cfg.mechanism.tree_noise(),
            cfg.params.d,
            cfg.seed,
        )?;
        if cfg.mechanism.kind.is_private() {
            tree = tree.with_row_bound(cfg.params.l_tilde);
        }
        Ok(Self {
            params: cfg.params,
            mechanism: cfg.mechanism,
            bounds,
            shift,
            env,
            tree,
            t: 0,
            cum_regret: 0.0,
            last_state: None,
            last_ellipsoid: None,
        })
    }

    pub fn params(&self) -> &BanditParams {
        &self.params
    }

    pub fn mechanism(&self) -> &NoiseMechanism {
        &self.mechanism
    }

    pub fn bounds(&self) -> &AccurateBounds {
        &self.bounds
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn tree(&self) -> &PrivateGramTree<MechanismNoise> {
        &self.tree
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn cum_regret(&self) -> f64 {
        self.cum_regret
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.params.n
    }

    /// State the policy acted on in the most recent round.
    pub fn last_state(&self) -> Option<&PrivatizedState> {
        self.last_state.as_ref()
    }

    pub fn last_ellipsoid(&self) -> Option<&ConfidenceEllipsoid> {
        self.last_ellipsoid.as_ref()
    }

    /// Privatized `(V_t, ũ_t)` for the upcoming round.
    fn privatized_state(&self, t: usize) -> Result<PrivatizedState> {
        let release = self.tree.query(t)?;
        let d = self.params.d;
        let v = release.gram + DMatrix::identity(d, d) * self.shift;
        PrivatizedState::new(t, v, release.moment)
    }

    /// Plays one round on a fresh decision set from the environment.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let decisions = self.env.next_decision_set()?;
        self.run_round_with(decisions)
    }

    /// Plays one round on a caller-supplied decision set.
    pub fn run_round_with(&mut self, decisions: DecisionSet) -> Result<RoundRecord> {
        let t = self.t + 1;
        if t > self.params.n {
            return Err(Error::QueryBeyondHorizon {
                round: t,
                horizon: self.params.n,
            });
        }
        if decisions.dim() != self.params.d {
            return Err(Error::InvalidParameter(
                "decision set has the wrong dimension".into(),
            ));
        }
        if decisions.max_norm() > self.params.l + 1e-9 {
            return Err(Error::Domain(format!(
                "round {t}: action norm exceeds L = {}",
                self.params.l
            )));
        }
        let state = self.privatized_state(t)?;
        let ellipsoid = ConfidenceEllipsoid::build(&state, &self.bounds, &self.params).map_err(
            |e| match e {
                Error::NotPositiveDefinite { .. } => Error::NotPositiveDefinite { round: Some(t) },
                other => other,
            },
        )?;
        let (index, action) = select_action(&decisions, &ellipsoid)?;
        let reward = self.env.reward(&action)?;
        let regret = self.env.regret(&decisions, index);
        self.tree
            .insert(t, &AugmentedRow::new(action.clone(), reward))?;
        self.t = t;
        self.cum_regret += regret;
        let record = RoundRecord {
            t,
            index,
            action,
            reward,
            beta: ellipsoid.beta,
            regret,
            cum_regret: self.cum_regret,
        };
        self.last_state = Some(state);
        self.last_ellipsoid = Some(ellipsoid);
        Ok(record)
    }

    /// Runs to the horizon, calling `observe` after every round.
    pub fn run_with<F: FnMut(&Simulation, &RoundRecord)>(&mut self, mut observe: F) -> Result<()> {
        while !self.is_done() {
            let rec = self.run_round()?;
            observe(self, &rec);
        }
        Ok(())
    }

    /// Runs to the horizon and returns every round record.
    pub fn run_to_end(&mut self) -> Result<Vec<RoundRecord>> {
        let mut out = Vec::with_capacity(self.params.n - self.t);
        self.run_with(|_, r| out.push(r.clone()))?;
        Ok(out)
    }
}
