//! Node-noise distributions and the privacy/accuracy parameters derived from
//! them.
//!
//! Two private mechanisms are supported. Wishart noise `W_{d+1}(L̃² I, k)` is
//! PSD by construction and may additionally be shifted down by `c I`.
//! Symmetrized Gaussian noise is shifted up by `2Υ I` so that the released
//! Gram block stays positive definite with high probability. The
//! non-private baseline adds the constant ridge `ρ I` and no noise at all.
//!
//! Shifts are applied once per query to the aggregated `d × d` block, never
//! per node.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::bandit::AccurateBounds;
use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::tree::{budget_split, tree_depth, BudgetPath, BudgetSplit, NodeNoise};

/// Above this many degrees of freedom Wishart draws use the Bartlett
/// decomposition instead of forming `GᵀG` explicitly.
const BARTLETT_MIN_DOF: u64 = 256;

/// Draws `W ~ W_dim(scale · I, dof)`, i.e. `GᵀG` for a `dof × dim` matrix `G`
/// with i.i.d. `N(0, scale)` entries.
pub fn wishart_sample<R: Rng + ?Sized>(
    dim: usize,
    scale: f64,
    dof: u64,
    rng: &mut R,
) -> DMatrix<f64> {
    assert!(dof >= 1, "Wishart degrees of freedom must be positive");
    if dim == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut w = if dof < BARTLETT_MIN_DOF || dof < dim as u64 {
        let g = DMatrix::from_fn(dof as usize, dim, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        g.tr_mul(&g)
    } else {
        // Bartlett: A lower triangular, A_ii² ~ χ²(dof − i), A_ij ~ N(0,1) below.
        let mut a = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let chi = ChiSquared::new((dof - i as u64) as f64).expect("positive dof");
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        &a * a.transpose()
    };
    w *= scale;
    symmetrize(&mut w);
    w
}

/// Draws `Z = (Z' + Z'ᵀ)/√2` with `Z'_ij ~ N(0, σ²)` i.i.d.; off-diagonal
/// variance is `σ²`, diagonal variance `2σ²`.
pub fn gaussian_sym_sample<R: Rng + ?Sized>(
    dim: usize,
    sigma_noise: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        sigma_noise * rng.sample::<f64, _>(StandardNormal)
    });
    let mut z = DMatrix::zeros(dim, dim);
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..dim {
        for j in 0..dim {
            z[(i, j)] = (raw[(i, j)] + raw[(j, i)]) / r2;
        }
    }
    z
}

/// `k = d + 1 + ⌈224 m ε⁻² ln(8m/δ) ln(2/δ)⌉`.
pub fn compute_wishart_k(eps: f64, delta: f64, m: usize, d: usize) -> u64 {
    let m = m as f64;
    let product = 224.0 * m / (eps * eps) * (8.0 * m / delta).ln() * (2.0 / delta).ln();
    d as u64 + 1 + product.ceil() as u64
}

/// Degrees of freedom required for `(ε₀, δ₀)`-DP of a single Gram release:
/// `d + 1 + 28 ε₀⁻² ln(4/δ₀)`.
pub fn wishart_dof_premise(split: &BudgetSplit, d: usize) -> f64 {
    d as f64 + 1.0 + 28.0 / (split.eps0 * split.eps0) * (4.0 / split.delta0).ln()
}

fn tail8(d: usize, n: usize, alpha: f64) -> f64 {
    (d as f64).sqrt() + (2.0 * (8.0 * n as f64 / alpha).ln()).sqrt()
}

fn tail2(d: usize, n: usize, alpha: f64) -> f64 {
    (d as f64).sqrt() + (2.0 * (2.0 * n as f64 / alpha).ln()).sqrt()
}

/// Shift for the Wishart regularizer:
/// `c = L̃²(√(mk) − √d − √(2 ln(8n/α)))² − 4L̃²√(mk)(√d + √(2 ln(8n/α)))`.
pub fn compute_wishart_shift_c(
    l_tilde: f64,
    m: usize,
    k: u64,
    n: usize,
    alpha: f64,
    d: usize,
) -> Result<f64> {
    let lt2 = l_tilde * l_tilde;
    let smk = (m as f64 * k as f64).sqrt();
    let t = tail8(d, n, alpha);
    if !(smk > t) {
        return Err(Error::InvalidRegime(format!(
            "sqrt(mk) = {smk} does not exceed sqrt(d) + sqrt(2 ln(8n/alpha)) = {t}"
        )));
    }
    Ok(lt2 * (smk - t).powi(2) - 4.0 * lt2 * smk * t)
}

/// Per-entry standard deviation of the Gaussian node noise,
/// `σ_noise² = 16 m L̃⁴ ln(4/δ)² / ε²`.
pub fn compute_sigma_noise(l_tilde: f64, m: usize, delta: f64, eps: f64) -> f64 {
    4.0 * (m as f64).sqrt() * l_tilde * l_tilde * (4.0 / delta).ln() / eps
}

/// Operator-norm bound on the Gaussian `d × d` noise block,
/// `Υ = √32 m L̃² ln(4/δ)(4√d + 2 ln(2n/α))/ε`.
pub fn compute_upsilon(
    l_tilde: f64,
    m: usize,
    n: usize,
    alpha: f64,
    delta: f64,
    eps: f64,
    d: usize,
) -> f64 {
    32f64.sqrt()
        * m as f64
        * l_tilde
        * l_tilde
        * (4.0 / delta).ln()
        * (4.0 * (d as f64).sqrt() + 2.0 * (2.0 * n as f64 / alpha).ln())
        / eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    NonPrivate,
    WishartShifted,
    WishartUnshifted,
    GaussianShifted,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 4] = [
        MechanismKind::NonPrivate,
        MechanismKind::GaussianShifted,
        MechanismKind::WishartShifted,
        MechanismKind::WishartUnshifted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::NonPrivate => "NonPrivate",
            MechanismKind::WishartShifted => "WishartShifted",
            MechanismKind::WishartUnshifted => "WishartUnshifted",
            MechanismKind::GaussianShifted => "GaussianShifted",
        }
    }

    pub fn is_private(self) -> bool {
        self != MechanismKind::NonPrivate
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nonprivate" | "non-private" | "none" => Ok(MechanismKind::NonPrivate),
            "wishart" | "wishartshifted" | "wishart-shifted" => Ok(MechanismKind::WishartShifted),
            "wishartunshifted" | "wishart-unshifted" => Ok(MechanismKind::WishartUnshifted),
            "gaussian" | "gaussianshifted" | "gaussian-shifted" => {
                Ok(MechanismKind::GaussianShifted)
            }
            other => Err(Error::Config(format!("unknown mechanism '{other}'"))),
        }
    }
}

/// Concrete per-node sampler handed to the tree.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismNoise {
    Zero { dim: usize },
    Wishart { dim: usize, scale: f64, dof: u64 },
    Gaussian { dim: usize, sigma: f64 },
}

impl NodeNoise for MechanismNoise {
    fn dim(&self) -> usize {
        match *self {
            MechanismNoise::Zero { dim }
            | MechanismNoise::Wishart { dim, .. }
            | MechanismNoise::Gaussian { dim, .. } => dim,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        self.sample_sum(1, rng)
    }

    /// Sums of independent draws stay in the family: `count` Wishart(k) draws
    /// are one Wishart(count·k) draw, `count` Gaussian draws are one draw
    /// with `σ√count`.
    fn sample_sum<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> DMatrix<f64> {
        match *self {
            MechanismNoise::Zero { dim } => DMatrix::zeros(dim, dim),
            _ if count == 0 => DMatrix::zeros(self.dim(), self.dim()),
            MechanismNoise::Wishart { dim, scale, dof } => {
                wishart_sample(dim, scale, dof * count as u64, rng)
            }
            MechanismNoise::Gaussian { dim, sigma } => {
                gaussian_sym_sample(dim, sigma * (count as f64).sqrt(), rng)
            }
        }
    }
}

/// A mechanism together with every parameter derived from the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMechanism {
    pub kind: MechanismKind,
    /// Action dimension (the Gram block is `d × d`, node noise `(d+1) × (d+1)`).
    pub d: usize,
    pub n: usize,
    pub alpha: f64,
    pub l_tilde: f64,
    /// Ridge for the non-private baseline.
    pub rho: f64,
    pub eps: f64,
    pub delta: f64,
    pub m: usize,
    pub split: Option<BudgetSplit>,
    pub k: Option<u64>,
    pub shift_c: Option<f64>,
    pub sigma_noise: Option<f64>,
    pub upsilon: Option<f64>,
    /// Replaces the default shift so that the lower eigenvalue bound equals
    /// this value.
    pub rho_min_override: Option<f64>,
}

impl NoiseMechanism {
    pub fn non_private(rho: f64, d: usize, n: usize) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge rho must be positive, got {rho}"
            )));
        }
        Ok(Self {
            kind: MechanismKind::NonPrivate,
            d,
            n,
            alpha: 1.0 / n.max(2) as f64,
            l_tilde: 0.0,
            rho,
            eps: f64::INFINITY,
            delta: 0.0,
            m: tree_depth(n),
            split: None,
            k: None,
            shift_c: None,
            sigma_noise: None,
            upsilon: None,
            rho_min_override: None,
        })
    }

    /// Derives all parameters of a private mechanism for horizon `n`.
    pub fn private(
        kind: MechanismKind,
        eps: f64,
        delta: f64,
        d: usize,
        l_tilde: f64,
        n: usize,
        alpha: f64,
    ) -> Result<Self> {
        if !kind.is_private() {
            return Err(Error::InvalidParameter(
                "use NoiseMechanism::non_private for the baseline".into(),
            ));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) || !(l_tilde > 0.0) || n == 0 {
            return Err(Error::InvalidParameter(
                "need alpha in (0,1), L~ > 0, n > 0".into(),
            ));
        }
        let m = tree_depth(n);
        let mut mech = Self {
            kind,
            d,
            n,
            alpha,
            l_tilde,
            rho: 0.0,
            eps,
            delta,
            m,
            split: None,
            k: None,
            shift_c: None,
            sigma_noise: None,
            upsilon: None,
            rho_min_override: None,
        };
        match kind {
            MechanismKind::WishartShifted | MechanismKind::WishartUnshifted => {
                mech.split = Some(budget_split(eps, delta, m, BudgetPath::Wishart));
                let k = compute_wishart_k(eps, delta, m, d);
                mech.k = Some(k);
                let smk = (m as f64 * k as f64).sqrt();
                if !(smk > tail8(d, n, alpha)) {
                    return Err(Error::InvalidRegime(format!(
                        "Wishart lower eigenvalue bound is not positive (sqrt(mk) = {smk})"
                    )));
                }
                if kind == MechanismKind::WishartShifted {
                    mech.shift_c = Some(compute_wishart_shift_c(l_tilde, m, k, n, alpha, d)?);
                }
            }
            MechanismKind::GaussianShifted => {
                mech.split = Some(budget_split(eps, delta, m, BudgetPath::Gaussian));
                mech.sigma_noise = Some(compute_sigma_noise(l_tilde, m, delta, eps));
                mech.upsilon = Some(compute_upsilon(l_tilde, m, n, alpha, delta, eps, d));
            }
            MechanismKind::NonPrivate => unreachable!(),
        }
        Ok(mech)
    }

    /// Re-targets the shift so that the lower eigenvalue bound of the
    /// regularizer becomes `rho_min`. Only meaningful for private kinds.
    pub fn with_rho_min(mut self, rho_min: f64) -> Result<Self> {
        if !self.kind.is_private() {
            return Err(Error::InvalidParameter(
                "the non-private ridge has no shift".into(),
            ));
        }
        if !(rho_min > 0.0 && rho_min.is_finite()) {
            return Err(Error::InvalidRegime(format!(
                "target rho_min {rho_min} is not positive"
            )));
        }
        self.rho_min_override = Some(rho_min);
        Ok(self)
    }

    /// Unshifted Wishart eigenvalue bounds `L̃²(√(mk) ∓ (√d + √(2 ln(8n/α))))²`.
    fn wishart_raw_bounds(&self) -> (f64, f64) {
        let lt2 = self.l_tilde * self.l_tilde;
        let smk = (self.m as f64 * self.k.expect("Wishart k") as f64).sqrt();
        let t = tail8(self.d, self.n, self.alpha);
        (lt2 * (smk - t).powi(2), lt2 * (smk + t).powi(2))
    }

    /// Multiple of the identity added to the aggregated `d × d` block at
    /// query time.
    pub fn shift(&self) -> f64 {
        match self.kind {
            MechanismKind::NonPrivate => self.rho,
            MechanismKind::WishartShifted | MechanismKind::WishartUnshifted => {
                match self.rho_min_override {
                    Some(target) => target - self.wishart_raw_bounds().0,
                    None => -self.shift_c.unwrap_or(0.0),
                }
            }
            MechanismKind::GaussianShifted => {
                let ups = self.upsilon.expect("Gaussian upsilon");
                match self.rho_min_override {
                    Some(target) => target + ups,
                    None => 2.0 * ups,
                }
            }
        }
    }

    /// `(ρ_min, ρ_max, γ)`, accurate with probability `1 − α/2n` per round.
    pub fn accurate_bounds(&self) -> Result<AccurateBounds> {
        let (d, n, alpha) = (self.d, self.n, self.alpha);
        match self.kind {
            MechanismKind::NonPrivate => AccurateBounds::new(self.rho, self.rho, 0.0),
            MechanismKind::WishartUnshifted | MechanismKind::WishartShifted => {
                let (rho_min, rho_max) = self.wishart_raw_bounds();
                let gamma = self.l_tilde * tail2(d, n, alpha);
                if let Some(target) = self.rho_min_override {
                    let c = rho_min - target;
                    // Shifting down inflates ‖h‖_{H⁻¹} by at most √(ρ_min/(ρ_min − c));
                    // shifting up never inflates it.
                    let g = if c > 0.0 {
                        gamma * (rho_min / target).sqrt()
                    } else {
                        gamma
                    };
                    return AccurateBounds::new(target, rho_max - c, g);
                }
                if self.kind == MechanismKind::WishartUnshifted {
                    return AccurateBounds::new(rho_min, rho_max, gamma);
                }
                let lt2 = self.l_tilde * self.l_tilde;
                let smk = (self.m as f64 * self.k.expect("Wishart k") as f64).sqrt();
                let rho_min_s = 4.0 * lt2 * smk * tail8(d, n, alpha);
                let gamma_s = self.l_tilde * (smk * tail2(d, n, alpha)).sqrt();
                AccurateBounds::new(rho_min_s, 2.0 * rho_min_s, gamma_s)
            }
            MechanismKind::GaussianShifted => {
                let ups = self.upsilon.expect("Gaussian upsilon");
                let sigma = self.sigma_noise.expect("Gaussian sigma");
                let (rho_min, rho_max) = match self.rho_min_override {
                    Some(target) => (target, target + 2.0 * ups),
                    None => (ups, 3.0 * ups),
                };
                let gamma = sigma * (self.m as f64 / rho_min).sqrt() * tail2(d, n, alpha);
                AccurateBounds::new(rho_min, rho_max, gamma)
            }
        }
    }

    /// Sampler for one tree node, `(d+1) × (d+1)`.
    pub fn node_noise(&self) -> Result<MechanismNoise> {
        let dim = self.d + 1;
        match self.kind {
            MechanismKind::NonPrivate => Err(Error::NoNodeNoise("NonPrivate")),
            MechanismKind::WishartShifted | MechanismKind::WishartUnshifted => {
                Ok(MechanismNoise::Wishart {
                    dim,
                    scale: self.l_tilde * self.l_tilde,
                    dof: self.k.expect("Wishart k"),
                })
            }
            MechanismKind::GaussianShifted => Ok(MechanismNoise::Gaussian {
                dim,
                sigma: self.sigma_noise.expect("Gaussian sigma"),
            }),
        }
    }

    /// Node sampler used by the simulation: zero noise for the baseline.
    pub fn tree_noise(&self) -> MechanismNoise {
        self.node_noise()
            .unwrap_or(MechanismNoise::Zero { dim: self.d + 1 })
    }

    /// Short label, including any non-default shift.
    pub fn label(&self) -> String {
        match self.rho_min_override {
            Some(r) => format!("{}@rho_min={:.6e}", self.kind, r),
            None => self.kind.to_string(),
        }
    }

    /// Derived parameters as `key=value` pairs for run metadata.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mechanism".to_string(), self.label()),
            ("m".to_string(), self.m.to_string()),
            ("shift".to_string(), format!("{:e}", self.shift())),
        ];
        if self.kind.is_private() {
            out.push(("eps".into(), self.eps.to_string()));
            out.push(("delta".into(), self.delta.to_string()));
        } else {
            out.push(("rho".into(), self.rho.to_string()));
        }
        if let Some(s) = &self.split {
            out.push(("eps0".into(), format!("{:e}", s.eps0)));
            out.push(("delta0".into(), format!("{:e}", s.delta0)));
        }
        if let Some(k) = self.k {
            out.push(("k".into(), k.to_string()));
        }
        if let Some(c) = self.shift_c {
            out.push(("c".into(), format!("{c:e}")));
        }
        if let Some(u) = self.upsilon {
            out.push(("upsilon".into(), format!("{u:e}")));
        }
        if let Some(s) = self.sigma_noise {
            out.push(("sigma_noise".into(), format!("{s:e}")));
        }
        if let Ok(b) = self.accurate_bounds() {
            out.push(("rho_min".into(), format!("{:e}", b.rho_min)));
            out.push(("rho_max".into(), format!("{:e}", b.rho_max)));
            out.push(("gamma".into(), format!("{:e}", b.gamma)));
        }
        out
    }
}
