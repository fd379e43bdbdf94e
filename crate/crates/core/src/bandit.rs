//! Linear UCB with changing regularizers.
//!
//! The policy sees only a regularized Gram matrix `V_t = G_t + H_t` and a
//! perturbed moment vector `ũ_t = u_t + h_t`. Where those come from (a plain
//! ridge regularizer, or a private tree release) is the caller's business.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, SpdFactor};

/// Slack allowed below zero under the square root of the confidence width.
pub const BETA_CLAMP_TOL: f64 = 1e-6;

/// Problem-level constants the policy relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditParams {
    /// Action dimension.
    pub d: usize,
    /// Horizon.
    pub n: usize,
    /// Confidence parameter in (0, 1).
    pub alpha: f64,
    /// Bound on action norms.
    pub l: f64,
    /// Bound on absolute mean reward, at least 1.
    pub b: f64,
    /// Bound on `‖θ*‖`.
    pub s: f64,
    /// Subgaussian scale of the reward noise.
    pub sigma: f64,
    /// Bound on the norm of an augmented row `[xᵀ, y]`.
    pub l_tilde: f64,
}

impl BanditParams {
    /// Unit actions, unit parameter, rewards in [-1, 1], `α = 1/n`.
    pub fn unit_sphere(d: usize, n: usize, sigma: f64) -> Self {
        Self {
            d,
            n,
            alpha: 1.0 / n.max(2) as f64,
            l: 1.0,
            b: 1.0,
            s: 1.0,
            sigma,
            l_tilde: 2f64.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.d == 0 {
            return bad("d must be positive");
        }
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.l > 0.0 && self.s > 0.0 && self.sigma >= 0.0 && self.l_tilde > 0.0) {
            return bad("norm bounds must be positive");
        }
        if !(self.b >= 1.0) {
            return bad("B must be at least 1");
        }
        Ok(())
    }
}

/// High-probability bounds on the regularizer: `ρ_min I ⪯ H_t ⪯ ρ_max I` and
/// `‖h_t‖_{H_t⁻¹} ≤ γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccurateBounds {
    pub rho_min: f64,
    pub rho_max: f64,
    pub gamma: f64,
}

impl AccurateBounds {
    pub fn new(rho_min: f64, rho_max: f64, gamma: f64) -> Result<Self> {
        if !(rho_min > 0.0 && rho_min <= rho_max && rho_max.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "accurate bounds need 0 < rho_min <= rho_max and gamma >= 0, got ({rho_min}, {rho_max}, {gamma})"
            )));
        }
        Ok(Self {
            rho_min,
            rho_max,
            gamma,
        })
    }
}

/// Finite set of actions for one round, stored as the columns of a `d × K`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSet {
    actions: DMatrix<f64>,
}

impl DecisionSet {
    pub fn new(actions: DMatrix<f64>) -> Result<Self> {
        if actions.ncols() == 0 {
            return Err(Error::EmptyDecisionSet);
        }
        Ok(Self { actions })
    }

    pub fn from_vectors(actions: &[DVector<f64>]) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::EmptyDecisionSet);
        }
        Ok(Self {
            actions: DMatrix::from_columns(actions),
        })
    }

    pub fn dim(&self) -> usize {
        self.actions.nrows()
    }

    pub fn len(&self) -> usize {
        self.actions.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.ncols() == 0
    }

    pub fn action(&self, i: usize) -> DVector<f64> {
        self.actions.column(i).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.actions
    }

    pub fn max_norm(&self) -> f64 {
        self.actions
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

/// What the policy is allowed to see at round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedState {
    pub t: usize,
    pub v: DMatrix<f64>,
    pub u_tilde: DVector<f64>,
}

impl PrivatizedState {
    pub fn new(t: usize, v: DMatrix<f64>, u_tilde: DVector<f64>) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() != u_tilde.len() {
            return Err(Error::InvalidParameter(format!(
                "state shapes disagree: V is {}x{}, u is {}",
                v.nrows(),
                v.ncols(),
                u_tilde.len()
            )));
        }
        if asymmetry(&v) > 1e-9 {
            return Err(Error::Domain(format!("V_{t} is not symmetric")));
        }
        Ok(Self { t, v, u_tilde })
    }

    fn factor(&self) -> Result<SpdFactor> {
        SpdFactor::new(&self.v).ok_or(Error::NotPositiveDefinite {
            round: Some(self.t),
        })
    }
}

/// `{θ : ‖θ − center‖_V ≤ β}` together with the factorization of `V`.
#[derive(Debug, Clone)]
pub struct ConfidenceEllipsoid {
    pub center: DVector<f64>,
    pub beta: f64,
    factor: SpdFactor,
}

impl ConfidenceEllipsoid {
    /// Factorizes `V_t` once, then derives the regressor and the width.
    pub fn build(
        state: &PrivatizedState,
        bounds: &AccurateBounds,
        params: &BanditParams,
    ) -> Result<Self> {
        let factor = state.factor()?;
        let center = factor.solve(&state.u_tilde);
        let beta = compute_beta(state.t, factor.log_det(), bounds, params)?;
        Ok(Self {
            center,
            beta,
            factor,
        })
    }

    /// Ellipsoid with an explicitly chosen center and width.
    pub fn from_parts(v: &DMatrix<f64>, center: DVector<f64>, beta: f64) -> Result<Self> {
        let factor = SpdFactor::new(v).ok_or(Error::NotPositiveDefinite { round: None })?;
        Ok(Self {
            center,
            beta,
            factor,
        })
    }

    pub fn log_det(&self) -> f64 {
        self.factor.log_det()
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    /// `‖θ − center‖_V`.
    pub fn distance(&self, theta: &DVector<f64>) -> f64 {
        self.factor.norm_sq(&(theta - &self.center)).sqrt()
    }

    pub fn contains(&self, theta: &DVector<f64>) -> bool {
        self.distance(theta) <= self.beta
    }

    /// UCB scores `⟨θ̃, x⟩ + β‖x‖_{V⁻¹}` for every action.
    pub fn scores(&self, decisions: &DecisionSet) -> Vec<f64> {
        let x = decisions.matrix();
        let means = x.tr_mul(&self.center);
        if self.beta == 0.0 {
            return means.iter().copied().collect();
        }
        self.factor
            .inv_norms(x)
            .into_iter()
            .zip(means.iter())
            .map(|(w, m)| m + self.beta * w)
            .collect()
    }
}

/// `θ̃ = V⁻¹ũ` through the SPD factorization.
pub fn compute_regressor(state: &PrivatizedState) -> Result<DVector<f64>> {
    Ok(state.factor()?.solve(&state.u_tilde))
}

/// Confidence width
/// `β_t = σ√(2 log(2/α) + log det V_t − d log ρ_min) + S√ρ_max + γ`.
pub fn compute_beta(
    t: usize,
    log_det_v: f64,
    bounds: &AccurateBounds,
    params: &BanditParams,
) -> Result<f64> {
    let d = params.d as f64;
    let mut radicand = 2.0 * (2.0 / params.alpha).ln() + log_det_v - d * bounds.rho_min.ln();
    if radicand < 0.0 {
        if radicand < -BETA_CLAMP_TOL {
            return Err(Error::Domain(format!(
                "round {t}: log det V = {log_det_v} is below d log rho_min by more than 2 log(2/alpha)"
            )));
        }
        radicand = 0.0;
    }
    Ok(params.sigma * radicand.sqrt() + params.s * bounds.rho_max.sqrt() + bounds.gamma)
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Optimistic action choice over a finite decision set.
pub fn select_action(
    decisions: &DecisionSet,
    ellipsoid: &ConfidenceEllipsoid,
) -> Result<(usize, DVector<f64>)> {
    let scores = ellipsoid.scores(decisions);
    let index = argmax_lowest(&scores).ok_or(Error::EmptyDecisionSet)?;
    Ok((index, decisions.action(index)))
}

fn regret_bracket(params: &BanditParams, bounds: &AccurateBounds) -> f64 {
    let n = params.n as f64;
    let d = params.d as f64;
    let growth = n * params.l * params.l / (d * bounds.rho_min);
    let noise_term = params.sigma
        * (2.0 * (2.0 / params.alpha).ln() + d * (bounds.rho_max / bounds.rho_min + growth).ln());
    let reg_term = (params.s * bounds.rho_max.sqrt() + bounds.gamma) * (d * growth.ln_1p()).sqrt();
    noise_term + reg_term
}

/// Right-hand side of the high-probability pseudo-regret bound: the general
/// `√n` form when `gap` is `None`, the gap-dependent form otherwise.
pub fn evaluate_regret_bound(
    params: &BanditParams,
    bounds: &AccurateBounds,
    gap: Option<f64>,
) -> f64 {
    let bracket = regret_bracket(params, bounds);
    match gap {
        None => params.b * (8.0 * params.n as f64).sqrt() * bracket,
        Some(delta) => 8.0 * params.b / delta * bracket * bracket,
    }
}
