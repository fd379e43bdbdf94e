//! Experiment orchestration: grids of independent runs, log-spaced regret
//! checkpoints, CSV persistence and the regret-vs-dimension slope fit.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::env::{EnvConfig, GapMode, RewardModel};
use crate::error::{Error, Result};
use crate::noise::{MechanismKind, NoiseMechanism};
use crate::sim::{SimConfig, Simulation};

pub const CSV_HEADER: [&str; 12] = [
    "run_id",
    "experiment",
    "mechanism",
    "d",
    "K",
    "n",
    "eps",
    "delta",
    "gap",
    "seed",
    "t",
    "cum_regret",
];

/// Default dimension grid for the regret-vs-dimension experiment.
pub const EXP1_DIMS: [usize; 5] = [4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Non-private regret as a function of dimension, `K = d²`.
    Exp1RegretVsDim,
    /// All four variants, with and without a forced gap.
    Exp2VariantComparison,
    /// Sweep of the lower eigenvalue bound for both private mechanisms.
    Exp3ShiftSweep,
    Single,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Exp1RegretVsDim => "exp1",
            Experiment::Exp2VariantComparison => "exp2",
            Experiment::Exp3ShiftSweep => "exp3",
            Experiment::Single => "single",
        }
    }

    fn default_n(self) -> usize {
        match self {
            Experiment::Exp1RegretVsDim => 100_000,
            _ => 200_000,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp1" | "regret-vs-dim" | "exp1regretvsdim" => Ok(Experiment::Exp1RegretVsDim),
            "exp2" | "variants" | "exp2variantcomparison" => Ok(Experiment::Exp2VariantComparison),
            "exp3" | "shift-sweep" | "exp3shiftsweep" => Ok(Experiment::Exp3ShiftSweep),
            "single" => Ok(Experiment::Single),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

/// Batch configuration. Unset optional fields take per-experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: Option<usize>,
    /// Dimension grid (Exp1) or the single dimension (other experiments).
    pub d: Vec<usize>,
    /// Actions per round; defaults to `d²`.
    pub k: Option<usize>,
    pub mechanism: MechanismKind,
    pub eps: f64,
    pub delta: f64,
    /// `None` runs both gap settings where the experiment has two.
    pub gap: Option<f64>,
    pub reward: RewardModel,
    /// Defaults to `1/n`.
    pub alpha: Option<f64>,
    /// Ridge of the non-private baseline.
    pub rho: f64,
    pub repeats: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Points in the shift sweep.
    pub sweep_points: usize,
    pub checkpoints: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Single,
            n: None,
            d: vec![5],
            k: None,
            mechanism: MechanismKind::GaussianShifted,
            eps: 1.0,
            delta: 0.1,
            gap: None,
            reward: RewardModel::PlusMinusOne,
            alpha: None,
            rho: 1.0,
            repeats: 1,
            seed: 0,
            out: None,
            sweep_points: 7,
            checkpoints: 200,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

impl RunConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            ..Self::default()
        };
        if experiment == Experiment::Exp1RegretVsDim {
            cfg.d = EXP1_DIMS.to_vec();
            cfg.mechanism = MechanismKind::NonPrivate;
            cfg.gap = Some(0.1);
        }
        cfg
    }

    /// Applies one `key=value` setting. Keys match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "experiment" => {
                let exp: Experiment = value.parse()?;
                if exp != self.experiment {
                    let keep = self.clone();
                    *self = Self::for_experiment(exp);
                    self.seed = keep.seed;
                    self.out = keep.out;
                }
            }
            "n" => self.n = Some(parse(&key, value)?),
            "d" => {
                self.d = value
                    .split(',')
                    .map(|v| parse(&key, v))
                    .collect::<Result<_>>()?
            }
            "k" | "actions" => self.k = Some(parse(&key, value)?),
            "mechanism" => self.mechanism = value.parse()?,
            "eps" => self.eps = parse(&key, value)?,
            "delta" => self.delta = parse(&key, value)?,
            "gap" => {
                self.gap = match value {
                    "both" | "auto" | "" => None,
                    v => Some(parse(&key, v)?),
                }
            }
            "reward" => {
                self.reward = match value {
                    "pm1" | "plusminusone" | "+-1" => RewardModel::PlusMinusOne,
                    "gaussian" => RewardModel::GaussianNoise(1.0),
                    v => match v.strip_prefix("gaussian:") {
                        Some(s) => RewardModel::GaussianNoise(parse(&key, s)?),
                        None => return Err(Error::Config(format!("unknown reward model '{v}'"))),
                    },
                }
            }
            "alpha" => self.alpha = Some(parse(&key, value)?),
            "rho" => self.rho = parse(&key, value)?,
            "repeats" => self.repeats = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "sweep-points" => self.sweep_points = parse(&key, value)?,
            "checkpoints" => self.checkpoints = parse(&key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text. Blank lines and `#` comments are
    /// ignored; `experiment` is applied first so that its defaults do not
    /// clobber later keys.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut cfg = Self::default();
        pairs.sort_by_key(|(k, _)| k != "experiment");
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn horizon(&self) -> usize {
        self.n.unwrap_or_else(|| self.experiment.default_n())
    }

    pub fn alpha_for(&self, n: usize) -> f64 {
        self.alpha.unwrap_or(1.0 / n.max(2) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.d.is_empty() {
            return bad("dimension grid is empty".into());
        }
        if let Some(&d) = self.d.iter().find(|&&d| d < 3) {
            return bad(format!("dimension {d} is below 3"));
        }
        if self.horizon() == 0 {
            return bad("n must be positive".into());
        }
        if self.k == Some(0) {
            return bad("K must be positive".into());
        }
        if !(self.eps > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("need eps > 0 and delta in (0,1)".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return bad("alpha must lie in (0,1)".into());
            }
        }
        if let Some(g) = self.gap {
            if !(0.0..1.5).contains(&g) {
                return bad(format!("gap {g} outside [0, 1.5)"));
            }
        }
        if !(self.rho > 0.0) {
            return bad("rho must be positive".into());
        }
        if self.experiment == Experiment::Exp3ShiftSweep && self.sweep_points == 0 {
            return bad("shift grid is empty".into());
        }
        if self.checkpoints == 0 {
            return bad("need at least one checkpoint".into());
        }
        Ok(())
    }
}

/// Cumulative-regret trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub run_id: String,
    pub experiment: String,
    pub mechanism: String,
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub gap: f64,
    pub seed: u64,
    /// `(t, cumulative pseudo-regret)` at log-spaced rounds, ending at `n`.
    pub checkpoints: Vec<(usize, f64)>,
    pub metadata: Vec<(String, String)>,
    pub wall_time_secs: f64,
    /// Set when the cell could not run (e.g. an invalid shift regime).
    pub error: Option<String>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> Option<f64> {
        self.checkpoints.last().map(|&(_, r)| r)
    }

    /// Cumulative regret at the last checkpoint not after `t`.
    pub fn regret_at(&self, t: usize) -> Option<f64> {
        self.checkpoints
            .iter()
            .take_while(|&&(s, _)| s <= t)
            .last()
            .map(|&(_, r)| r)
    }

    /// `key=value` lines describing the run.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("run_id={}", self.run_id),
            format!("seed={}", self.seed),
        ];
        out.extend(self.metadata.iter().map(|(k, v)| format!("{k}={v}")));
        out.push(format!("wall_time_secs={:.3}", self.wall_time_secs));
        if let Some(e) = &self.error {
            out.push(format!("error={e}"));
        }
        out
    }
}

/// About `count` log-spaced rounds in `[1, n]`, always including `n`.
pub fn checkpoints(n: usize, count: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let count = count.max(1);
    let mut out: Vec<usize> = (0..count)
        .map(|i| {
            let f = if count == 1 {
                1.0
            } else {
                i as f64 / (count - 1) as f64
            };
            ((n as f64).powf(f).round() as usize).clamp(1, n)
        })
        .collect();
    out.push(n);
    out.sort_unstable();
    out.dedup();
    out
}

/// `count` log-spaced values spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// A single run in a batch.
#[derive(Debug, Clone)]
pub struct Cell {
    pub run_id: String,
    pub experiment: Experiment,
    pub env: EnvConfig,
    pub n: usize,
    pub mechanism: std::result::Result<NoiseMechanism, String>,
    pub label: String,
    pub seed: u64,
    pub checkpoints: usize,
}

fn build_mechanism(
    kind: MechanismKind,
    cfg: &RunConfig,
    d: usize,
    n: usize,
) -> Result<NoiseMechanism> {
    if kind.is_private() {
        NoiseMechanism::private(
            kind,
            cfg.eps,
            cfg.delta,
            d,
            2f64.sqrt(),
            n,
            cfg.alpha_for(n),
        )
    } else {
        NoiseMechanism::non_private(cfg.rho, d, n)
    }
}

fn gap_settings(cfg: &RunConfig) -> Vec<f64> {
    match cfg.gap {
        Some(g) => vec![g],
        None => vec![0.0, 0.1],
    }
}

/// Expands a batch configuration into its runs, in a fixed order.
pub fn plan_cells(cfg: &RunConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let n = cfg.horizon();
    let exp = cfg.experiment;
    let mut specs: Vec<(
        usize,
        f64,
        std::result::Result<NoiseMechanism, String>,
        String,
    )> = Vec::new();
    let push_kind = |specs: &mut Vec<_>, kind: MechanismKind, d: usize, gap: f64| {
        let mech = build_mechanism(kind, cfg, d, n).map_err(|e| e.to_string());
        specs.push((d, gap, mech, kind.name().to_string()));
    };
    match exp {
        Experiment::Exp1RegretVsDim => {
            for &d in &cfg.d {
                push_kind(
                    &mut specs,
                    MechanismKind::NonPrivate,
                    d,
                    cfg.gap.unwrap_or(0.1),
                );
            }
        }
        Experiment::Exp2VariantComparison => {
            for gap in gap_settings(cfg) {
                for kind in MechanismKind::ALL {
                    push_kind(&mut specs, kind, cfg.d[0], gap);
                }
            }
        }
        Experiment::Exp3ShiftSweep => {
            let d = cfg.d[0];
            for gap in gap_settings(cfg) {
                for kind in [
                    MechanismKind::GaussianShifted,
                    MechanismKind::WishartShifted,
                ] {
                    match build_mechanism(kind, cfg, d, n).and_then(|m| {
                        let centre = m.accurate_bounds()?.rho_min;
                        Ok((m, centre))
                    }) {
                        Ok((base, centre)) => {
                            for rho_min in log_grid(centre / 16.0, centre * 16.0, cfg.sweep_points)
                            {
                                let mech = base
                                    .clone()
                                    .with_rho_min(rho_min)
                                    .map_err(|e| e.to_string());
                                let label = format!("{kind}@rho_min={rho_min:.6e}");
                                specs.push((d, gap, mech, label));
                            }
                        }
                        Err(e) => specs.push((d, gap, Err(e.to_string()), kind.name().to_string())),
                    }
                }
            }
        }
        Experiment::Single => {
            push_kind(&mut specs, cfg.mechanism, cfg.d[0], cfg.gap.unwrap_or(0.1))
        }
    }

    let mut cells = Vec::with_capacity(specs.len() * cfg.repeats);
    for (d, gap, mech, label) in specs {
        let env = EnvConfig::new(d, GapMode::from_value(gap), cfg.reward)
            .with_actions(cfg.k.unwrap_or(d * d));
        for r in 0..cfg.repeats {
            let seed = cfg.seed.wrapping_add(r as u64);
            cells.push(Cell {
                run_id: format!("{}-{}-gap{}-d{}-r{}", exp, label, gap, d, r),
                experiment: exp,
                env: env.clone(),
                n,
                mechanism: mech.clone(),
                label: label.clone(),
                seed,
                checkpoints: cfg.checkpoints,
            });
        }
    }
    Ok(cells)
}

/// Runs one cell to its horizon. Failures are recorded on the trace.
pub fn run_cell(cell: &Cell) -> RegretTrace {
    let start = Instant::now();
    let mut trace = RegretTrace {
        run_id: cell.run_id.clone(),
        experiment: cell.experiment.name().to_string(),
        mechanism: cell.label.clone(),
        d: cell.env.d,
        k: cell.env.k,
        n: cell.n,
        eps: None,
        delta: None,
        gap: cell.env.gap.value(),
        seed: cell.seed,
        checkpoints: Vec::new(),
        metadata: Vec::new(),
        wall_time_secs: 0.0,
        error: None,
    };
    let mech = match &cell.mechanism {
        Ok(m) => m.clone(),
        Err(e) => {
            trace.error = Some(e.clone());
            return trace;
        }
    };
    if mech.kind.is_private() {
        trace.eps = Some(mech.eps);
        trace.delta = Some(mech.delta);
    }
    trace.metadata = mech.metadata();
    let result = Simulation::new(SimConfig::standard(
        cell.env.clone(),
        cell.n,
        mech,
        cell.seed,
    ))
    .and_then(|mut sim| {
        let marks = checkpoints(cell.n, cell.checkpoints);
        let mut next = 0;
        let mut points = Vec::with_capacity(marks.len());
        sim.run_with(|_, rec| {
            if next < marks.len() && rec.t == marks[next] {
                points.push((rec.t, rec.cum_regret));
                next += 1;
            }
        })?;
        Ok(points)
    });
    match result {
        Ok(points) => trace.checkpoints = points,
        Err(e) => trace.error = Some(e.to_string()),
    }
    trace.wall_time_secs = start.elapsed().as_secs_f64();
    trace
}

/// Runs every cell of the batch in parallel; output order follows the plan.
pub fn run_experiment(cfg: &RunConfig) -> Result<Vec<RegretTrace>> {
    let cells = plan_cells(cfg)?;
    Ok(cells.par_iter().map(run_cell).collect())
}

/// Order-independent sum: values are sorted before accumulation.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Mean final regret over successful traces; independent of trace order.
pub fn mean_final_regret<'a, I: IntoIterator<Item = &'a RegretTrace>>(traces: I) -> Option<f64> {
    let mut finals: Vec<f64> = traces
        .into_iter()
        .filter_map(|t| t.final_regret())
        .collect();
    if finals.is_empty() {
        return None;
    }
    let n = finals.len() as f64;
    Some(stable_sum(&mut finals) / n)
}

/// Mean cumulative regret at each checkpoint shared by all traces.
pub fn mean_curve(traces: &[&RegretTrace]) -> Vec<(usize, f64)> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    first
        .checkpoints
        .iter()
        .filter_map(|&(t, _)| {
            let mut vals: Vec<f64> = traces
                .iter()
                .map(|tr| {
                    tr.checkpoints
                        .iter()
                        .find(|&&(s, _)| s == t)
                        .map(|&(_, r)| r)
                })
                .collect::<Option<_>>()?;
            let n = vals.len() as f64;
            Some((t, stable_sum(&mut vals) / n))
        })
        .collect()
}

/// Least-squares slope of `ln(regret)` against `ln(d)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(d, r)| !(d > 0.0 && r > 0.0)) {
        return Err(Error::DegenerateFit("all points must be positive".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all dimensions are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Float formatting used in the CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes the traces as CSV (LF endings, UTF-8). Failed runs produce one
/// row with `t = 0` and `cum_regret = NaN`.
pub fn write_csv<W: Write>(traces: &[RegretTrace], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for tr in traces {
        let fixed = [
            tr.run_id.clone(),
            tr.experiment.clone(),
            tr.mechanism.clone(),
            tr.d.to_string(),
            tr.k.to_string(),
            tr.n.to_string(),
            fmt_opt(tr.eps),
            fmt_opt(tr.delta),
            fmt_f64(tr.gap),
            tr.seed.to_string(),
        ];
        let rows: Vec<(usize, f64)> = if tr.error.is_some() {
            vec![(0, f64::NAN)]
        } else {
            tr.checkpoints.clone()
        };
        for (t, r) in rows {
            let mut rec: Vec<String> = fixed.to_vec();
            rec.push(t.to_string());
            rec.push(fmt_f64(r));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(traces: &[RegretTrace], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(traces, BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub run_id: String,
    pub experiment: String,
    pub mechanism: String,
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub gap: f64,
    pub seed: u64,
    pub t: usize,
    pub cum_regret: f64,
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CsvRow>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let bad = |what: &str| Error::Config(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, what: &str| -> Result<f64> { get(i).parse().map_err(|_| bad(what)) };
        let opt = |i: usize, what: &str| -> Result<Option<f64>> {
            if get(i).is_empty() {
                Ok(None)
            } else {
                num(i, what).map(Some)
            }
        };
        out.push(CsvRow {
            run_id: get(0).to_string(),
            experiment: get(1).to_string(),
            mechanism: get(2).to_string(),
            d: get(3).parse().map_err(|_| bad("d"))?,
            k: get(4).parse().map_err(|_| bad("K"))?,
            n: get(5).parse().map_err(|_| bad("n"))?,
            eps: opt(6, "eps")?,
            delta: opt(7, "delta")?,
            gap: num(8, "gap")?,
            seed: get(9).parse().map_err(|_| bad("seed"))?,
            t: get(10).parse().map_err(|_| bad("t"))?,
            cum_regret: num(11, "cum_regret")?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(points: Vec<(usize, f64)>) -> RegretTrace {
        RegretTrace {
            run_id: "r".into(),
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
            metadata: vec![],
            wall_time_secs: 0.0,
            error: None,
        }
    }

    #[test]
    fn slope_of_exact_power_laws() {
        let quad: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&d| (d, d * d)).collect();
        assert!((fit_loglog_slope(&quad).unwrap() - 2.0).abs() < 1e-9);
        let lin: Vec<(f64, f64)> = [3.0, 5.0, 7.0].iter().map(|&d| (d, 4.5 * d)).collect();
        assert!((fit_loglog_slope(&lin).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slope_degenerate_inputs() {
        assert!(matches!(
            fit_loglog_slope(&[(4.0, 1.0), (4.0, 2.0), (4.0, 3.0)]),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_loglog_slope(&[(4.0, 1.0), (8.0, 2.0)]).is_err());
        assert!(fit_loglog_slope(&[(4.0, 1.0), (8.0, 0.0), (9.0, 1.0)]).is_err());
    }

    #[test]
    fn checkpoint_grid() {
        let c = checkpoints(200_000, 200);
        assert_eq!(*c.first().unwrap(), 1);
        assert_eq!(*c.last().unwrap(), 200_000);
        assert!(c.len() > 150 && c.len() <= 201);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(checkpoints(1, 200), vec![1]);
    }

    #[test]
    fn empty_and_small_csv() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", CSV_HEADER.join(","))
        );

        let mut buf = Vec::new();
        write_csv(&[trace(vec![(1, 0.5), (10, 1.25)])], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains('\r'));
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .ends_with(",1,5.0000000000000000e-1"));
    }

    #[test]
    fn error_trace_row() {
        let mut t = trace(vec![]);
        t.error = Some("invalid regime".into());
        let mut buf = Vec::new();
        write_csv(&[t], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with(",0,NaN"));
    }

    #[test]
    fn config_parsing_and_overrides() {
        let cfg = RunConfig::from_kv_str(
            "# comment\nn = 5000\nexperiment = exp1\nd=4,8,16\nrepeats=3\nseed=42\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::Exp1RegretVsDim);
        assert_eq!(cfg.d, vec![4, 8, 16]);
        assert_eq!(cfg.horizon(), 5000);
        assert_eq!(cfg.mechanism, MechanismKind::NonPrivate);
        assert_eq!((cfg.repeats, cfg.seed), (3, 42));
        assert!(RunConfig::from_kv_str("bogus=1").is_err());
        assert!(RunConfig::from_kv_str("n").is_err());
        assert!(RunConfig::from_kv_str("n=abc").is_err());
        let mut cfg = RunConfig::default();
        cfg.set("--mechanism", "wishart-unshifted").unwrap();
        cfg.set("reward", "gaussian:0.1").unwrap();
        cfg.set("gap", "0").unwrap();
        assert_eq!(cfg.mechanism, MechanismKind::WishartUnshifted);
        assert_eq!(cfg.reward, RewardModel::GaussianNoise(0.1));
        assert_eq!(cfg.gap, Some(0.0));
        assert_eq!(cfg.alpha_for(1000), 1e-3);
    }

    #[test]
    fn validation() {
        let cfg = RunConfig {
            repeats: 0,
            ..RunConfig::default()
        };
        assert!(matches!(plan_cells(&cfg), Err(Error::Config(_))));
        for d in [vec![], vec![2]] {
            let cfg = RunConfig {
                d,
                ..RunConfig::default()
            };
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn plans_cover_grids() {
        let mut cfg = RunConfig::for_experiment(Experiment::Exp2VariantComparison);
        cfg.repeats = 2;
        assert_eq!(plan_cells(&cfg).unwrap().len(), 2 * 4 * 2);
        let mut cfg = RunConfig::for_experiment(Experiment::Exp3ShiftSweep);
        cfg.gap = Some(0.1);
        let cells = plan_cells(&cfg).unwrap();
        assert_eq!(cells.len(), 2 * 7);
        assert!(cells.iter().all(|c| c.mechanism.is_ok()));
        let cfg = RunConfig::for_experiment(Experiment::Exp1RegretVsDim);
        let cells = plan_cells(&cfg).unwrap();
        assert_eq!(cells.len(), EXP1_DIMS.len());
        assert_eq!(cells[1].env.k, 64);
    }

    #[test]
    fn invalid_regime_becomes_error_row() {
        // Tiny horizon with a huge eps makes the Wishart lower bound vanish.
        let mut cfg = RunConfig::for_experiment(Experiment::Exp2VariantComparison);
        cfg.n = Some(50);
        cfg.eps = 1e4;
        cfg.gap = Some(0.1);
        cfg.d = vec![3];
        let traces = run_experiment(&cfg).unwrap();
        assert_eq!(traces.len(), 4);
        let wishart: Vec<_> = traces
            .iter()
            .filter(|t| t.mechanism.starts_with("Wishart"))
            .collect();
        assert!(wishart
            .iter()
            .all(|t| t.error.as_deref().unwrap().contains("invalid regime")));
        assert!(traces
            .iter()
            .filter(|t| !t.mechanism.starts_with("Wishart"))
            .all(|t| t.error.is_none()));
    }

    #[test]
    fn mean_is_order_independent() {
        let ts: Vec<RegretTrace> = [0.1, 1e8, 3.3, 1e-9, 7.0]
            .iter()
            .map(|&v| trace(vec![(10, v)]))
            .collect();
        let a = mean_final_regret(&ts).unwrap();
        let rev: Vec<RegretTrace> = ts.iter().rev().cloned().collect();
        assert_eq!(a, mean_final_regret(&rev).unwrap());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 256.0, 7);
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[6] - 256.0).abs() < 1e-9);
        assert!((g[3] - 16.0).abs() < 1e-9);
    }
}
