//! Fixtures shared by the benchmarks.

use jdp_bandit::{
    AugmentedRow, ConfidenceEllipsoid, DecisionSet, EnvConfig, Environment, GapMode, MechanismKind,
    NoiseMechanism, RewardModel, SimConfig, Simulation,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn mechanism(kind: MechanismKind, d: usize, n: usize) -> NoiseMechanism {
    if kind.is_private() {
        NoiseMechanism::private(kind, 1.0, 0.1, d, 2f64.sqrt(), n, 1.0 / n as f64)
            .expect("benchmark parameters are valid")
    } else {
        NoiseMechanism::non_private(1.0, d, n).expect("benchmark parameters are valid")
    }
}

/// A simulation with `K = d²` actions over horizon `n`.
pub fn simulation(kind: MechanismKind, d: usize, n: usize, seed: u64) -> Simulation {
    let env = EnvConfig::new(d, GapMode::Forced(0.1), RewardModel::PlusMinusOne);
    Simulation::new(SimConfig::standard(env, n, mechanism(kind, d, n), seed))
        .expect("benchmark simulation")
}

pub fn decision_set(d: usize, k: usize, seed: u64) -> DecisionSet {
    let cfg = EnvConfig::new(d, GapMode::None, RewardModel::PlusMinusOne).with_actions(k);
    Environment::new(cfg, seed)
        .and_then(|mut e| e.next_decision_set())
        .expect("benchmark decision set")
}

/// An ellipsoid shaped like one from a few hundred rounds of data.
pub fn ellipsoid(d: usize, seed: u64) -> ConfidenceEllipsoid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(d, 4 * d, |_, _| rng.random_range(-1.0..1.0));
    let v = &a * a.transpose() + DMatrix::identity(d, d);
    let center = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    ConfidenceEllipsoid::from_parts(&v, center, 3.0).expect("SPD by construction")
}

pub fn rows(d: usize, count: usize, seed: u64) -> Vec<AugmentedRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: DVector<f64> = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let x = &x / x.norm().max(1.0);
            AugmentedRow::new(x, if rng.random::<bool>() { 1.0 } else { -1.0 })
        })
        .collect()
}
