//! Tree-based private running sums of the augmented Gram matrix.
//!
//! Round `t` contributes the outer product of `[x_tᵀ, y_t]`. Every dyadic
//! interval of rounds is a node; when a node's interval completes its data
//! sum is frozen together with one noise draw. A prefix `[1, t−1]` is the sum
//! of at most `m` such nodes, and queries are topped up with noise-only
//! draws so that every release carries exactly `m` noise terms.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{keyed_stream, SimRng, Stream};

/// Source of per-node noise matrices.
pub trait NodeNoise {
    fn dim(&self) -> usize;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64>;

    /// Sum of `count` independent draws.
    fn sample_sum<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for _ in 0..count {
            acc += self.sample(rng);
        }
        acc
    }
}

/// Noise sampler that never perturbs anything.
#[derive(Debug, Clone, Copy)]
pub struct ZeroNoise {
    pub dim: usize,
}

impl NodeNoise for ZeroNoise {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample<R: Rng + ?Sized>(&self, _rng: &mut R) -> DMatrix<f64> {
        DMatrix::zeros(self.dim, self.dim)
    }
}

/// `m = ⌈log₂ n + 1⌉`, computed exactly on integers.
pub fn tree_depth(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetPath {
    Wishart,
    Gaussian,
}

/// Privacy budget assigned to each node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSplit {
    pub eps0: f64,
    pub delta0: f64,
}

/// Per-node budget: `ε₀ = ε/√(8 m ln(2/δ))` on both paths; `δ₀ = δ/(2m)`
/// for Wishart nodes and `δ/2` for Gaussian nodes (zCDP composition).
pub fn budget_split(eps: f64, delta: f64, m: usize, path: BudgetPath) -> BudgetSplit {
    let eps0 = eps / (8.0 * m as f64 * (2.0 / delta).ln()).sqrt();
    let delta0 = match path {
        BudgetPath::Wishart => delta / (2.0 * m as f64),
        BudgetPath::Gaussian => delta / 2.0,
    };
    BudgetSplit { eps0, delta0 }
}

/// One augmented data row `[xᵀ, y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRow {
    pub x: DVector<f64>,
    pub y: f64,
}

impl AugmentedRow {
    pub fn new(x: DVector<f64>, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.y * self.y).sqrt()
    }

    fn outer(&self) -> DMatrix<f64> {
        let d = self.x.len();
        let mut v = DVector::zeros(d + 1);
        v.rows_mut(0, d).copy_from(&self.x);
        v[d] = self.y;
        &v * v.transpose()
    }
}

/// A finalized node kept for forensics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub level: usize,
    /// First round covered (1-based, inclusive).
    pub start: usize,
    /// Last round covered (inclusive).
    pub end: usize,
    pub matrix: DMatrix<f64>,
}

/// Noisy prefix release `M̃_t`, split into its Gram block and moment column.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeRelease {
    /// Top-left `d × d` block.
    pub gram: DMatrix<f64>,
    /// First `d` entries of the last column.
    pub moment: DVector<f64>,
    /// Data-bearing nodes in the dyadic decomposition.
    pub nodes_used: usize,
    /// Noise-only draws added to reach `m` noise terms.
    pub padding: usize,
}

/// Binary-tree accumulator over a fixed horizon.
///
/// Only the most recent finalized node of each level can appear in a future
/// prefix, so memory is `O(m)` matrices unless the archive is enabled.
#[derive(Debug, Clone)]
pub struct PrivateGramTree<N> {
    horizon: usize,
    n_padded: usize,
    depth: usize,
    dim: usize,
    noise: N,
    node_rng: SimRng,
    padding_seed: u64,
    partial: Vec<DMatrix<f64>>,
    latest: Vec<Option<DMatrix<f64>>>,
    inserted: usize,
    row_bound: Option<f64>,
    clipped: usize,
    archive: Option<Vec<NodeRecord>>,
}

impl<N: NodeNoise> PrivateGramTree<N> {
    /// Tree over `n` rounds of `d`-dimensional actions. `seed` drives the
    /// node and padding noise.
    pub fn new(n: usize, noise: N, d: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "tree horizon must be at least 1".into(),
            ));
        }
        let dim = d + 1;
        if noise.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "noise dimension {} does not match d + 1 = {dim}",
                noise.dim()
            )));
        }
        let depth = tree_depth(n);
        Ok(Self {
            horizon: n,
            n_padded: n.next_power_of_two(),
            depth,
            dim,
            noise,
            node_rng: crate::rng::stream(seed, Stream::NodeNoise),
            padding_seed: seed,
            partial: vec![DMatrix::zeros(dim, dim); depth],
            latest: vec![None; depth],
            inserted: 0,
            row_bound: None,
            clipped: 0,
            archive: None,
        })
    }

    /// Rows whose norm exceeds `bound` are rescaled onto the sphere of that
    /// radius before insertion.
    pub fn with_row_bound(mut self, bound: f64) -> Self {
        self.row_bound = Some(bound);
        self
    }

    /// Keep every finalized node (for dumps and structural tests).
    pub fn with_archive(mut self) -> Self {
        self.archive = Some(Vec::new());
        self
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_padded(&self) -> usize {
        self.n_padded
    }

    /// `m`, the number of levels and of noise terms per release.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn clipped_rows(&self) -> usize {
        self.clipped
    }

    pub fn archive(&self) -> Option<&[NodeRecord]> {
        self.archive.as_deref()
    }

    pub fn noise(&self) -> &N {
        &self.noise
    }

    /// Adds round `t`'s row and finalizes every node whose interval ends at `t`.
    pub fn insert(&mut self, t: usize, row: &AugmentedRow) -> Result<()> {
        let expected = self.inserted + 1;
        if t != expected {
            return Err(Error::OutOfOrderInsert { expected, got: t });
        }
        if t > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "round {t} is beyond horizon {}",
                self.horizon
            )));
        }
        if row.x.len() + 1 != self.dim {
            return Err(Error::InvalidParameter(format!(
                "row has dimension {}, tree expects {}",
                row.x.len(),
                self.dim - 1
            )));
        }
        let mut outer = row.outer();
        if let Some(bound) = self.row_bound {
            let norm = row.norm();
            if norm > bound + 1e-9 {
                if self.clipped == 0 {
                    log::warn!("round {t}: row norm {norm} exceeds bound {bound}; rescaling");
                }
                self.clipped += 1;
                let s = bound / norm;
                outer *= s * s;
            }
        }
        for level in 0..self.depth {
            self.partial[level] += &outer;
            if t.is_multiple_of(1usize << level) {
                let data =
                    std::mem::replace(&mut self.partial[level], DMatrix::zeros(self.dim, self.dim));
                let node = data + self.noise.sample(&mut self.node_rng);
                if let Some(archive) = self.archive.as_mut() {
                    archive.push(NodeRecord {
                        level,
                        start: t + 1 - (1 << level),
                        end: t,
                        matrix: node.clone(),
                    });
                }
                self.latest[level] = Some(node);
            }
        }
        self.inserted = t;
        Ok(())
    }

    /// Levels of the dyadic decomposition of `[1, t−1]`, largest first.
    pub fn decomposition(t: usize) -> impl Iterator<Item = usize> {
        let prefix = t.saturating_sub(1);
        (0..usize::BITS as usize)
            .rev()
            .filter(move |&l| (prefix >> l) & 1 == 1)
    }

    /// Full noisy `(d+1) × (d+1)` release for round `t`, before any shift.
    ///
    /// Must be called after rounds `1..t−1` are inserted and before round `t`
    /// is. Padding noise is a deterministic function of `(seed, t)`, so
    /// repeated queries return identical matrices.
    pub fn query_full(&self, t: usize) -> Result<(DMatrix<f64>, usize, usize)> {
        if t == 0 || t > self.horizon {
            return Err(Error::QueryBeyondHorizon {
                round: t,
                horizon: self.horizon,
            });
        }
        if t != self.inserted + 1 {
            return Err(Error::StaleQuery {
                round: t,
                expected: self.inserted + 1,
            });
        }
        let mut total = DMatrix::zeros(self.dim, self.dim);
        let mut used = 0;
        for level in Self::decomposition(t) {
            let node = self.latest[level]
                .as_ref()
                .expect("prefix node finalized before query");
            total += node;
            used += 1;
        }
        let padding = self.depth - used;
        let mut rng = keyed_stream(self.padding_seed, Stream::Padding, t as u64);
        total += self.noise.sample_sum(padding, &mut rng);
        Ok((total, used, padding))
    }

    /// Noisy `(G̃_t, ũ_t)` for round `t`.
    pub fn query(&self, t: usize) -> Result<TreeRelease> {
        let (full, nodes_used, padding) = self.query_full(t)?;
        let d = self.dim - 1;
        Ok(TreeRelease {
            gram: full.view((0, 0), (d, d)).into_owned(),
            moment: full.view((0, d), (d, 1)).column(0).into_owned(),
            nodes_used,
            padding,
        })
    }

    /// Writes `level,start,end,row,col,value` for every archived node (or the
    /// currently retained nodes when the archive is off).
    pub fn dump_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "level,start,end,row,col,value")?;
        let retained: Vec<NodeRecord>;
        let nodes: &[NodeRecord] = match &self.archive {
            Some(a) => a,
            None => {
                retained = self
                    .latest
                    .iter()
                    .enumerate()
                    .filter_map(|(level, m)| {
                        let m = m.as_ref()?;
                        let width = 1usize << level;
                        let end = self.inserted / width * width;
                        Some(NodeRecord {
                            level,
                            start: end + 1 - width,
                            end,
                            matrix: m.clone(),
                        })
                    })
                    .collect();
                &retained
            }
        };
        for node in nodes {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    writeln!(
                        out,
                        "{},{},{},{},{},{:.16e}",
                        node.level,
                        node.start,
                        node.end,
                        r,
                        c,
                        node.matrix[(r, c)]
                    )?;
                }
            }
        }
        Ok(())
    }
}
