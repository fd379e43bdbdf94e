//! Jointly differentially private linear UCB.
//!
//! The optimistic policy in [`bandit`] acts on a regularized Gram matrix and
//! a perturbed moment vector. [`tree`] maintains those statistics as noisy
//! running sums over a binary tree, with node noise from [`noise`] (Wishart
//! or symmetrized Gaussian, each with its shift). [`env`] generates the
//! synthetic instances, [`sim`] runs a single bandit, and [`harness`] runs
//! whole experiment grids and writes CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandit;
pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod rng;
pub mod sim;
pub mod tree;

pub use bandit::{
    compute_beta, compute_regressor, evaluate_regret_bound, select_action, AccurateBounds,
    BanditParams, ConfidenceEllipsoid, DecisionSet, PrivatizedState,
};
pub use env::{EnvConfig, Environment, GapMode, HiddenParameter, RewardModel};
pub use error::{Error, Result};
pub use harness::{Experiment, RegretTrace, RunConfig};
pub use noise::{MechanismKind, MechanismNoise, NoiseMechanism};
pub use sim::{RoundRecord, SimConfig, Simulation};
pub use tree::{AugmentedRow, BudgetSplit, NodeNoise, PrivateGramTree, ZeroNoise};
