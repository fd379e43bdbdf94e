//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use jdp_bandit::{
    AccurateBounds, BanditParams, DecisionSet, EnvConfig, Environment, GapMode, RewardModel,
};
use nalgebra::{DMatrix, DVector};

/// Grid spacing used to make every running sum exact in floating point.
pub const GRID: f64 = 1.0 / 1024.0;

/// Rounds every coordinate toward zero onto the `2⁻¹⁰` grid. Norms can only
/// shrink, so unit-ball actions stay in the ball.
pub fn quantize(ds: &DecisionSet) -> DecisionSet {
    let m = ds.matrix().map(|v| (v / GRID).trunc() * GRID);
    DecisionSet::new(m).unwrap()
}

/// Plain ridge LinUCB written directly against dense nalgebra matrices: the
/// Gram matrix and moment vector are accumulated in place, one round at a
/// time, with no tree and no noise.
pub struct DenseLinUcb {
    pub params: BanditParams,
    pub bounds: AccurateBounds,
    pub gram: DMatrix<f64>,
    pub moment: DVector<f64>,
}

pub struct DenseStep {
    pub theta: DVector<f64>,
    pub beta: f64,
    pub index: usize,
}

impl DenseLinUcb {
    pub fn new(params: BanditParams, rho: f64) -> Self {
        let d = params.d;
        Self {
            bounds: AccurateBounds {
                rho_min: rho,
                rho_max: rho,
                gamma: 0.0,
            },
            gram: DMatrix::identity(d, d) * rho,
            moment: DVector::zeros(d),
            params,
        }
    }

    pub fn choose(&self, ds: &DecisionSet) -> DenseStep {
        let chol = self.gram.clone().cholesky().expect("ridge Gram is SPD");
        let theta = chol.solve(&self.moment);
        let l = chol.l();
        let mut log_det = 0.0;
        for i in 0..self.params.d {
            log_det += 2.0 * l[(i, i)].ln();
        }
        let p = &self.params;
        let radicand = 2.0 * (2.0 / p.alpha).ln() + log_det - p.d as f64 * self.bounds.rho_min.ln();
        let beta = p.sigma * radicand.max(0.0).sqrt()
            + p.s * self.bounds.rho_max.sqrt()
            + self.bounds.gamma;
        let means = ds.matrix().tr_mul(&theta);
        let mut best = (0, f64::NEG_INFINITY);
        for j in 0..ds.len() {
            let x = ds.action(j);
            let w = l.solve_lower_triangular(&x).unwrap();
            let score = means[j] + beta * w.norm();
            if score > best.1 {
                best = (j, score);
            }
        }
        DenseStep {
            theta,
            beta,
            index: best.0,
        }
    }

    pub fn update(&mut self, x: &DVector<f64>, y: f64) {
        self.gram += x * x.transpose();
        self.moment += x * y;
    }
}

pub fn pm1_env(d: usize, k: usize, gap: f64) -> EnvConfig {
    EnvConfig::new(d, GapMode::from_value(gap), RewardModel::PlusMinusOne).with_actions(k)
}

/// Fresh environment sharing the decision and reward streams of `seed`.
pub fn environment(cfg: &EnvConfig, seed: u64) -> Environment {
    Environment::new(cfg.clone(), seed).unwrap()
}

/// `log det` via a dense Cholesky factor.
pub fn log_det(m: &DMatrix<f64>) -> f64 {
    let chol = m.clone().cholesky().expect("SPD");
    2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// `xᵀ M⁻¹ x` through a dense solve.
pub fn inv_quad(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    let chol = m.clone().cholesky().expect("SPD");
    x.dot(&chol.solve(x))
}

pub fn min_max_eigen(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = m.clone().symmetric_eigenvalues();
    (ev.min(), ev.max())
}
