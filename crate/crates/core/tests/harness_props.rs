use jdp_bandit::harness::{
    self, checkpoints, mean_final_regret, plan_cells, read_csv_file, run_cell, write_csv,
    write_csv_file, Experiment, RegretTrace, RunConfig, CSV_HEADER,
};
use jdp_bandit::{Error, MechanismKind, RewardModel};
use proptest::prelude::*;

fn small(experiment: Experiment) -> RunConfig {
    let mut cfg = RunConfig::for_experiment(experiment);
    cfg.n = Some(400);
    cfg.d = vec![3];
    cfg.repeats = 2;
    cfg.checkpoints = 20;
    cfg
}

fn csv_bytes(traces: &[RegretTrace]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(traces, &mut buf).unwrap();
    buf
}

fn trace(id: &str, points: Vec<(usize, f64)>) -> RegretTrace {
    RegretTrace {
        run_id: id.into(),
        experiment: "single".into(),
        mechanism: "NonPrivate".into(),
        d: 3,
        k: 9,
        n: 10,
        eps: None,
        delta: None,
        gap: 0.1,
        seed: 1,
        checkpoints: points,
        metadata: Vec::new(),
        wall_time_secs: 0.0,
        error: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_is_independent_of_run_order(
        finals in prop::collection::vec(0.0f64..1e6, 1..30),
        perm_seed in any::<u64>()
    ) {
        let traces: Vec<RegretTrace> = finals
            .iter()
            .enumerate()
            .map(|(i, &r)| trace(&format!("r{i}"), vec![(10, r)]))
            .collect();
        let mut shuffled = traces.clone();
        // Fisher–Yates driven by a simple LCG.
        let mut s = perm_seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = mean_final_regret(&traces).unwrap();
        let b = mean_final_regret(&shuffled).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn checkpoints_are_sorted_and_end_at_n(n in 1usize..10_000_000, count in 1usize..500) {
        let c = checkpoints(n, count);
        prop_assert_eq!(*c.last().unwrap(), n);
        prop_assert!(c[0] >= 1);
        prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn floats_survive_the_csv(values in prop::collection::vec(any::<f64>(), 1..20)) {
        let values: Vec<f64> = values.into_iter().filter(|v| v.is_finite()).collect();
        prop_assume!(!values.is_empty());
        let tr = trace("x", values.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_csv_file(&[tr], &path).unwrap();
        let rows = read_csv_file(&path).unwrap();
        for (row, v) in rows.iter().zip(&values) {
            prop_assert_eq!(row.cum_regret.to_bits(), v.to_bits());
        }
    }
}

#[test]
fn empty_batch_writes_only_the_header() {
    let text = String::from_utf8(csv_bytes(&[])).unwrap();
    assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
}

#[test]
fn one_trace_with_two_checkpoints_is_three_lines() {
    let text = String::from_utf8(csv_bytes(&[trace("a", vec![(5, 1.0), (10, 2.5)])])).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(!text.contains('\r'));
}

#[test]
fn failed_runs_become_nan_rows() {
    let mut tr = trace("bad", vec![(5, 1.0)]);
    tr.error = Some("invalid regime".into());
    let text = String::from_utf8(csv_bytes(&[tr])).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(",0,NaN"), "{row}");
}

#[test]
fn resumed_batch_reproduces_the_full_batch() {
    let cfg = small(Experiment::Exp2VariantComparison);
    let full = harness::run_experiment(&cfg).unwrap();
    let cells = plan_cells(&cfg).unwrap();
    let half = cells.len() / 2;
    // First half, "interrupted", then the rest in a fresh pass.
    let mut resumed: Vec<RegretTrace> = cells[..half].iter().map(run_cell).collect();
    resumed.extend(cells[half..].iter().map(run_cell));
    assert_eq!(csv_bytes(&full), csv_bytes(&resumed));
}

#[test]
fn traces_are_monotone_and_bounded() {
    for exp in [
        Experiment::Exp2VariantComparison,
        Experiment::Exp3ShiftSweep,
    ] {
        let mut cfg = small(exp);
        cfg.sweep_points = 3;
        for tr in harness::run_experiment(&cfg).unwrap() {
            assert!(tr.error.is_none(), "{}: {:?}", tr.run_id, tr.error);
            assert_eq!(tr.checkpoints.last().unwrap().0, tr.n);
            let mut prev = 0.0;
            for &(t, r) in &tr.checkpoints {
                assert!(r >= prev && r <= 2.0 * t as f64);
                prev = r;
            }
        }
    }
}

#[test]
fn plans_have_the_expected_shape() {
    let cfg = small(Experiment::Exp2VariantComparison);
    // Two gap settings, four mechanisms, two repeats.
    assert_eq!(plan_cells(&cfg).unwrap().len(), 16);

    let mut exp3 = small(Experiment::Exp3ShiftSweep);
    exp3.gap = Some(0.1);
    exp3.sweep_points = 5;
    assert_eq!(plan_cells(&exp3).unwrap().len(), 2 * 5 * 2);

    let mut exp1 = RunConfig::for_experiment(Experiment::Exp1RegretVsDim);
    exp1.repeats = 3;
    let cells = plan_cells(&exp1).unwrap();
    assert_eq!(cells.len(), 5 * 3);
    assert!(cells
        .iter()
        .all(|c| c.env.k == c.env.d * c.env.d && c.n == 100_000));
}

#[test]
fn config_text_is_parsed_with_experiment_first() {
    let cfg = RunConfig::from_kv_str(
        "# comment\nd = 7\nexperiment = exp2\nreward = gaussian:0.5\nmechanism = WishartShifted\n\nn=1000\n",
    )
    .unwrap();
    assert_eq!(cfg.experiment, Experiment::Exp2VariantComparison);
    assert_eq!(cfg.d, vec![7]);
    assert_eq!(cfg.n, Some(1000));
    assert_eq!(cfg.reward, RewardModel::GaussianNoise(0.5));
    assert_eq!(cfg.mechanism, MechanismKind::WishartShifted);
}

#[test]
fn bad_configs_are_config_errors() {
    for text in [
        "d = 2",
        "repeats = 0",
        "bogus = 1",
        "eps = -1",
        "n = ten",
        "gap 0.1",
    ] {
        match RunConfig::from_kv_str(text).and_then(|c| c.validate()) {
            Err(Error::Config(_)) => {}
            other => panic!("{text}: {other:?}"),
        }
    }
}
