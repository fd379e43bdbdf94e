use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Symmetric positive-definite factorization `V = L Lᵀ`.
///
/// All solves and `V⁻¹`-norms go through the triangular factor; no explicit
/// inverse is ever formed.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
    /// Lower factor, row-major, for the batched forward substitution.
    rows: Vec<f64>,
    diag: Vec<f64>,
}

impl SpdFactor {
    /// Returns `None` when `m` is not numerically positive definite.
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        let chol = Cholesky::new(m.clone())?;
        let l = chol.l_dirty();
        let d = l.nrows();
        let mut log_det = 0.0;
        let mut rows = vec![0.0; d * d];
        let mut diag = vec![0.0; d];
        for i in 0..d {
            let lii = l[(i, i)];
            if !(lii > 0.0) || !lii.is_finite() {
                return None;
            }
            log_det += 2.0 * lii.ln();
            diag[i] = lii;
            for j in 0..i {
                rows[i * d + j] = l[(i, j)];
            }
        }
        Some(Self {
            chol,
            log_det,
            rows,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `log det V`, accumulated from the factor diagonal.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `L⁻¹ X` for a batch of column vectors.
    pub fn whiten(&self, xs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = xs.clone();
        self.chol
            .l_dirty()
            .solve_lower_triangular_unchecked_mut(&mut out);
        out
    }

    /// `‖x_j‖_{V⁻¹}` for every column `x_j` of `xs`, by forward substitution
    /// against the factor. All columns are swept together, one coordinate at
    /// a time, so the inner loops run over contiguous action blocks.
    pub fn inv_norms(&self, xs: &DMatrix<f64>) -> Vec<f64> {
        let d = self.diag.len();
        let k = xs.ncols();
        assert_eq!(xs.nrows(), d, "dimension mismatch");
        let mut w = xs.transpose();
        let w = w.as_mut_slice();
        let mut acc = vec![0.0; k];
        for i in 0..d {
            let (done, rest) = w.split_at_mut(i * k);
            let row = &mut rest[..k];
            for j in 0..i {
                let c = self.rows[i * d + j];
                for (r, p) in row.iter_mut().zip(&done[j * k..(j + 1) * k]) {
                    *r -= c * p;
                }
            }
            let lii = self.diag[i];
            for (r, a) in row.iter_mut().zip(acc.iter_mut()) {
                *r /= lii;
                *a += *r * *r;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// `‖x‖²_{V⁻¹} = ‖L⁻¹x‖²`.
    pub fn inv_norm_sq(&self, x: &DVector<f64>) -> f64 {
        let mut w = x.clone();
        self.chol
            .l_dirty()
            .solve_lower_triangular_unchecked_mut(&mut w);
        w.norm_squared()
    }

    /// `‖x‖²_V = ‖Lᵀx‖²`.
    pub fn norm_sq(&self, x: &DVector<f64>) -> f64 {
        let l = self.chol.l();
        (l.transpose() * x).norm_squared()
    }
}

/// Relative Frobenius asymmetry `‖M − Mᵀ‖_F / ‖M‖_F` (0 for the zero matrix).
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / scale
}

/// Forces exact symmetry by averaging with the transpose.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
