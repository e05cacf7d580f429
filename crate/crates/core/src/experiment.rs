//! Parameter sweeps over the three engines, CSV output and engine comparison.
//!
//! A sweep runs every grid point of one scenario parameter for each series (a
//! labelled set of overrides and engines). Rows come out in grid order:
//! series, then point, then engine, then repetition.
//!
//! The CSV starts with a `# config-hash: <sha256>` comment over the resolved
//! sweep, followed by the header [`CSV_COLUMNS`]. Metrics an engine does not
//! produce are left empty.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::analysis::{self, solve_steady_state, AnalysisModel, StateSpace};
use crate::error::{ConfigError, Error, ParseError, Result};
use crate::matrix::TransitionMatrix;
use crate::model::ScenarioConfig;
use crate::oracle::oracle_transition_matrix;
use crate::scenario::{apply_setting, to_scenario_text, KEYS};
use crate::sim::{self, Estimate, MetricsReport};

pub const MAX_GRID_POINTS: usize = 10_000;
pub const DEFAULT_SLOTS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;

pub const CSV_COLUMNS: &[&str] = &[
    "label",
    "param",
    "value",
    "engine",
    "rep",
    "seed",
    "slots",
    "throughput_bps",
    "throughput_ci",
    "utilization",
    "utilization_ci",
    "collision_prob",
    "collision_ci",
    "collision_given_pu",
    "collision_per_use",
    "fairness",
    "buffered_fraction",
    "buffered_ci",
    "mean_wait_slots",
    "mean_wait_ci",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Analysis,
    Sim,
    Oracle,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Analysis, Engine::Sim, Engine::Oracle];

    fn deterministic(self) -> bool {
        self != Engine::Sim
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Analysis => "analysis",
            Engine::Sim => "sim",
            Engine::Oracle => "oracle",
        })
    }
}

impl FromStr for Engine {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "analysis" => Ok(Engine::Analysis),
            "sim" | "simulation" => Ok(Engine::Sim),
            "oracle" => Ok(Engine::Oracle),
            other => Err(ParseError::new(1, format!("unknown engine `{other}`"))),
        }
    }
}

/// `all` or a comma-separated engine list.
pub fn parse_engines(text: &str) -> Result<Vec<Engine>, ParseError> {
    if text.trim() == "all" {
        return Ok(Engine::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in text.split(',') {
        let e: Engine = item.parse()?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Ok(out)
}

/// One grid point: its printed value and the settings it applies.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub value: String,
    pub settings: Vec<(String, String)>,
}

/// Parse `param=start:stop:step` or `param=v1,v2,...`.
///
/// Range endpoints are inclusive and values are rounded to 12 decimals.
pub fn parse_grid(text: &str) -> Result<(String, Vec<String>), ParseError> {
    let (param, spec) = text
        .split_once('=')
        .ok_or_else(|| ParseError::new(1, "sweep must be <param>=<start:stop:step|list>"))?;
    let param = param.trim();
    if !KEYS.contains(&param) {
        return Err(ParseError::new(1, format!("unknown sweep parameter `{param}`")));
    }
    let spec = spec.trim();
    let values = if spec.contains(':') && !spec.contains(',') && is_range(spec) {
        range_values(spec)?
    } else {
        let values: Vec<String> = spec.split(',').map(|v| v.trim().to_string()).collect();
        if values.iter().any(String::is_empty) {
            return Err(ParseError::new(1, "empty grid value"));
        }
        values
    };
    if values.len() > MAX_GRID_POINTS {
        return Err(ParseError::new(1, format!("grid exceeds {MAX_GRID_POINTS} points")));
    }
    Ok((param.to_string(), values))
}

fn is_range(spec: &str) -> bool {
    let parts: Vec<&str> = spec.split(':').collect();
    parts.len() == 3 && parts.iter().all(|p| p.trim().parse::<f64>().is_ok())
}

fn range_values(spec: &str) -> Result<Vec<String>, ParseError> {
    let nums: Vec<f64> = spec.split(':').map(|p| p.trim().parse().unwrap_or(f64::NAN)).collect();
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
        return Err(ParseError::new(1, "range needs finite start <= stop and step > 0"));
    }
    let span = (stop - start) / step;
    if span >= MAX_GRID_POINTS as f64 {
        return Err(ParseError::new(1, format!("grid exceeds {MAX_GRID_POINTS} points")));
    }
    let count = (span + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let v = start + i as f64 * step;
            ((v * 1e12).round() / 1e12).to_string()
        })
        .collect())
}

/// Labelled overrides applied on top of the base scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub overrides: Vec<(String, String)>,
    pub engines: Vec<Engine>,
}

impl Series {
    pub fn new(label: impl Into<String>, engines: &[Engine]) -> Self {
        Self {
            label: label.into(),
            overrides: Vec::new(),
            engines: engines.to_vec(),
        }
    }

    pub fn set(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.overrides.push((key.to_string(), value.to_string()));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub param: String,
    pub points: Vec<GridPoint>,
    pub series: Vec<Series>,
    pub seed: u64,
    pub slots: u64,
    pub reps: u32,
}

impl SweepSpec {
    /// Single-series sweep from a `param=grid` expression.
    pub fn from_grid(base: ScenarioConfig, grid: &str, engines: &[Engine]) -> Result<Self> {
        let (param, values) = parse_grid(grid)?;
        let points = values
            .into_iter()
            .map(|v| GridPoint {
                settings: vec![(param.clone(), v.clone())],
                value: v,
            })
            .collect();
        let spec = Self {
            base,
            param,
            points,
            series: vec![Series::new("", engines)],
            seed: DEFAULT_SEED,
            slots: DEFAULT_SLOTS,
            reps: 1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Scenario of one series at one grid point.
    pub fn scenario(&self, series: usize, point: usize) -> Result<ScenarioConfig> {
        let mut cfg = self.base.clone();
        let s = &self.series[series];
        let p = &self.points[point];
        for (k, v) in s.overrides.iter().chain(&p.settings) {
            apply_sweep_setting(&mut cfg, k, v)
                .map_err(|msg| ConfigError::new(format!("{} {}={}: {msg}", s.label, p.value, k)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every grid scenario before any engine runs.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(ConfigError::new("sweep grid is empty").into());
        }
        if self.series.is_empty() || self.series.iter().any(|s| s.engines.is_empty()) {
            return Err(ConfigError::new("every series needs at least one engine").into());
        }
        if self.reps == 0 {
            return Err(ConfigError::new("repetitions must be positive").into());
        }
        if self.series.iter().any(|s| s.engines.contains(&Engine::Sim)) && self.slots < sim::MIN_SLOTS {
            return Err(ConfigError::new(format!("at least {} slots are required", sim::MIN_SLOTS)).into());
        }
        for s in 0..self.series.len() {
            for p in 0..self.points.len() {
                self.scenario(s, p)?;
            }
        }
        Ok(())
    }

    /// Seed of one simulation run.
    pub fn run_seed(&self, series: usize, point: usize, rep: u32) -> u64 {
        let index = ((series * self.points.len() + point) as u64) * self.reps as u64 + rep as u64;
        splitmix64(self.seed ^ splitmix64(index.wrapping_add(1)))
    }

    /// SHA-256 over the resolved sweep.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(to_scenario_text(&self.base));
        h.update(format!("param={}\nseed={}\nslots={}\nreps={}\n", self.param, self.seed, self.slots, self.reps));
        for s in &self.series {
            h.update(format!("series={:?} {:?} {:?}\n", s.label, s.overrides, s.engines));
        }
        for p in &self.points {
            h.update(format!("point={:?} {:?}\n", p.value, p.settings));
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `apply_setting` plus two numeric shorthands: a bare number for `penalty`
/// means `power:<a>` and for `priority` replaces `p_h`, keeping the buffer.
fn apply_sweep_setting(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    if let Ok(x) = value.parse::<f64>() {
        match key {
            "penalty" => return apply_setting(cfg, key, &format!("power:{x}")),
            "priority" => {
                let buffer = cfg
                    .priority
                    .map(|p| p.buffer_size)
                    .ok_or("a bare p_h needs a priority buffer in the scenario")?;
                return apply_setting(cfg, key, &format!("{x}:{buffer}"));
            }
            _ => {}
        }
    }
    apply_setting(cfg, key, value)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Metric columns of one row; `None` prints as an empty field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowMetrics {
    pub throughput_bps: Option<f64>,
    pub throughput_ci: Option<f64>,
    pub utilization: Option<f64>,
    pub utilization_ci: Option<f64>,
    pub collision_prob: Option<f64>,
    pub collision_ci: Option<f64>,
    pub collision_given_pu: Option<f64>,
    pub collision_per_use: Option<f64>,
    pub fairness: Option<f64>,
    pub buffered_fraction: Option<f64>,
    pub buffered_ci: Option<f64>,
    pub mean_wait_slots: Option<f64>,
    pub mean_wait_ci: Option<f64>,
}

impl RowMetrics {
    fn exact(throughput_bps: f64, utilization: f64) -> Self {
        Self {
            throughput_bps: Some(throughput_bps),
            utilization: Some(utilization),
            ..Self::default()
        }
    }

    fn from_report(r: &MetricsReport) -> Self {
        Self {
            throughput_bps: Some(r.throughput_bps.mean),
            throughput_ci: Some(r.throughput_bps.ci),
            utilization: Some(r.utilization.mean),
            utilization_ci: Some(r.utilization.ci),
            collision_prob: Some(r.collision_prob.mean),
            collision_ci: Some(r.collision_prob.ci),
            collision_given_pu: Some(r.collision_given_pu.mean),
            collision_per_use: Some(r.collision_per_use.mean),
            fairness: r.fairness,
            buffered_fraction: Some(r.buffered_fraction.mean),
            buffered_ci: Some(r.buffered_fraction.ci),
            mean_wait_slots: r.mean_wait_slots.map(|e| e.mean),
            mean_wait_ci: r.mean_wait_slots.map(|e| e.ci),
        }
    }

    fn fields(&self) -> [Option<f64>; 13] {
        [
            self.throughput_bps,
            self.throughput_ci,
            self.utilization,
            self.utilization_ci,
            self.collision_prob,
            self.collision_ci,
            self.collision_given_pu,
            self.collision_per_use,
            self.fairness,
            self.buffered_fraction,
            self.buffered_ci,
            self.mean_wait_slots,
            self.mean_wait_ci,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub param: String,
    pub value: String,
    pub engine: Engine,
    pub rep: u32,
    /// Simulation seed; `None` for the exact engines.
    pub seed: Option<u64>,
    pub slots: Option<u64>,
    pub metrics: RowMetrics,
}

/// Throughput and utilization from the oracle matrix.
pub fn oracle_metrics(cfg: &ScenarioConfig) -> Result<(f64, f64)> {
    AnalysisModel::new(cfg)?;
    let (space, matrix) = oracle_transition_matrix(cfg)?;
    Ok(exact_metrics(cfg, &space, &matrix)?)
}

fn exact_metrics(cfg: &ScenarioConfig, space: &StateSpace, matrix: &TransitionMatrix) -> Result<(f64, f64)> {
    let steady = solve_steady_state(matrix)?;
    Ok((
        analysis::throughput(&steady.pi, space.states(), cfg),
        analysis::utilization(&steady.pi, space.states(), cfg),
    ))
}

fn run_engine(cfg: &ScenarioConfig, engine: Engine, slots: u64, seed: u64) -> Result<RowMetrics> {
    match engine {
        Engine::Analysis => {
            let r = analysis::analyze(cfg)?;
            Ok(RowMetrics::exact(r.throughput_bps, r.utilization))
        }
        Engine::Oracle => {
            let (r, u) = oracle_metrics(cfg)?;
            Ok(RowMetrics::exact(r, u))
        }
        Engine::Sim => Ok(RowMetrics::from_report(&sim::run(cfg, slots, seed)?)),
    }
}

/// Run every (series, point, engine, repetition) of `spec` in parallel.
///
/// Exact engines are evaluated once per point and repeated across
/// repetitions.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for (si, s) in spec.series.iter().enumerate() {
        for pi in 0..spec.points.len() {
            for &engine in &s.engines {
                let reps = if engine.deterministic() { 1 } else { spec.reps };
                for rep in 0..reps {
                    jobs.push((si, pi, engine, rep));
                }
            }
        }
    }
    let results: Vec<RowMetrics> = jobs
        .par_iter()
        .map(|&(si, pi, engine, rep)| {
            let cfg = spec.scenario(si, pi)?;
            run_engine(&cfg, engine, spec.slots, spec.run_seed(si, pi, rep))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (&(si, pi, engine, rep), metrics) in jobs.iter().zip(results) {
        let reps = if engine.deterministic() { 0..spec.reps } else { rep..rep + 1 };
        for r in reps {
            rows.push(SweepRow {
                label: spec.series[si].label.clone(),
                param: spec.param.clone(),
                value: spec.points[pi].value.clone(),
                engine,
                rep: r,
                seed: (!engine.deterministic()).then(|| spec.run_seed(si, pi, r)),
                slots: (!engine.deterministic()).then_some(spec.slots),
                metrics: metrics.clone(),
            });
        }
    }
    Ok(rows)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV text of a finished sweep.
pub fn to_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut out = format!("# config-hash: {}\n{}\n", spec.config_hash(), CSV_COLUMNS.join(","));
    for row in rows {
        let mut fields = vec![
            csv_field(&row.label),
            csv_field(&row.param),
            csv_field(&row.value),
            row.engine.to_string(),
            row.rep.to_string(),
            row.seed.map(|s| s.to_string()).unwrap_or_default(),
            row.slots.map(|s| s.to_string()).unwrap_or_default(),
        ];
        fields.extend(row.metrics.fields().iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

/// Gnuplot script drawing throughput against the swept value, one curve per
/// series and engine.
pub fn gnuplot_script(spec: &SweepSpec, csv_path: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set key outside");
    let _ = writeln!(out, "set xlabel '{}'", spec.param);
    let _ = writeln!(out, "set ylabel 'throughput [b/s]'");
    let mut curves = Vec::new();
    for s in &spec.series {
        for e in &s.engines {
            curves.push(format!(
                "'{csv_path}' using (strcol(1) eq '{label}' && strcol(4) eq '{e}' && $5 == 0 ? $3 : 1/0):8 \
                 with linespoints title '{label} {e}'",
                label = s.label.replace('\'', "")
            ));
        }
    }
    let _ = writeln!(out, "plot {}", curves.join(", \\\n     "));
    out
}

/// Tolerances and simulation budget for [`compare_engines`].
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub slots: u64,
    pub seed: u64,
    pub oracle_tolerance: f64,
    pub sim_tolerance: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            slots: 1_000_000,
            seed: DEFAULT_SEED,
            oracle_tolerance: 1e-10,
            sim_tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Largest entrywise analysis/oracle difference; `None` outside the
    /// oracle's size bounds.
    pub oracle_max_diff: Option<f64>,
    pub analysis_throughput_bps: f64,
    pub oracle_throughput_bps: Option<f64>,
    pub sim_throughput_bps: Estimate,
    /// `|analysis - sim| / analysis`.
    pub sim_rel_diff: f64,
    pub sim_within_ci: bool,
    pub options: CompareOptions,
}

impl CompareReport {
    pub fn oracle_ok(&self) -> bool {
        self.oracle_max_diff.is_none_or(|d| d <= self.options.oracle_tolerance)
    }

    pub fn sim_ok(&self) -> bool {
        self.sim_rel_diff <= self.options.sim_tolerance
    }

    pub fn passed(&self) -> bool {
        self.oracle_ok() && self.sim_ok()
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "ok" } else { "FAIL" };
        match self.oracle_max_diff {
            Some(d) => writeln!(
                f,
                "oracle: max |analysis - oracle| = {d:e} (tolerance {:e}) {}",
                self.options.oracle_tolerance,
                verdict(self.oracle_ok())
            )?,
            None => writeln!(f, "oracle: skipped, scenario exceeds oracle bounds")?,
        }
        writeln!(f, "analysis: R = {} b/s", self.analysis_throughput_bps)?;
        if let Some(r) = self.oracle_throughput_bps {
            writeln!(f, "oracle: R = {r} b/s")?;
        }
        writeln!(
            f,
            "sim: R = {} +/- {} b/s ({} slots, seed {})",
            self.sim_throughput_bps.mean, self.sim_throughput_bps.ci, self.options.slots, self.options.seed
        )?;
        writeln!(
            f,
            "sim: relative difference {:.4}% (tolerance {}%) {}, analysis {} the 95% CI",
            100.0 * self.sim_rel_diff,
            100.0 * self.options.sim_tolerance,
            verdict(self.sim_ok()),
            if self.sim_within_ci { "inside" } else { "outside" }
        )?;
        write!(f, "verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Compare analysis, oracle and simulation on `cfg`.
pub fn compare_engines(cfg: &ScenarioConfig, opts: &CompareOptions) -> Result<CompareReport> {
    let (space, matrix) = analysis::build_transition_matrix(cfg)?;
    compare_with_matrix(cfg, &space, &matrix, opts)
}

/// [`compare_engines`] with a caller-supplied analysis matrix over `space`.
pub fn compare_with_matrix(
    cfg: &ScenarioConfig,
    space: &StateSpace,
    matrix: &TransitionMatrix,
    opts: &CompareOptions,
) -> Result<CompareReport> {
    if matrix.size() != space.len() {
        return Err(ConfigError::new(format!(
            "matrix has {} states, the scenario has {}",
            matrix.size(),
            space.len()
        ))
        .into());
    }
    let (analysis_r, _) = exact_metrics(cfg, space, matrix)?;
    let (oracle_max_diff, oracle_r) = match oracle_transition_matrix(cfg) {
        Ok((ospace, omatrix)) => {
            let (r, _) = exact_metrics(cfg, &ospace, &omatrix)?;
            (Some(matrix.max_abs_diff(&omatrix)), Some(r))
        }
        Err(Error::Capacity { .. }) => (None, None),
        Err(e) => return Err(e),
    };
    let report = sim::run(cfg, opts.slots, opts.seed)?;
    let est = report.throughput_bps;
    let rel = if analysis_r > 0.0 {
        (analysis_r - est.mean).abs() / analysis_r
    } else {
        est.mean.abs()
    };
    Ok(CompareReport {
        oracle_max_diff,
        analysis_throughput_bps: analysis_r,
        oracle_throughput_bps: oracle_r,
        sim_throughput_bps: est,
        sim_rel_diff: rel,
        sim_within_ci: est.covers(analysis_r),
        options: opts.clone(),
    })
}

/// Names and one-line descriptions of the built-in sweeps.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig1a", "PU activity, small network, flexible and K-only bonding"),
    ("fig1b", "PU activity, large network, flexible and K-only bonding"),
    ("fig2a", "user pool size, M=4, T=2 ms, q_p=0.1, d=1 kB"),
    ("fig2b", "user pool size, M=4, T=5 ms, q_p=0.1, d=1 kB"),
    ("fig2c", "user pool size, M=8, T=2 ms, q_p=0.05, d=1 kB"),
    ("fig2d", "user pool size, M=8, T=5 ms, q_p=0.05, d=1 kB"),
    ("fig3a", "frame size under bond penalties, small network, q_p=0.1"),
    ("fig3b", "frame size under bond penalties, large network, q_p=0.1"),
    ("fig3c", "penalty exponent, M=4, N=12, d=1 kB, T=2 ms"),
    ("fig3d", "penalty exponent, M=8, N=24, d=1 kB, T=2 ms"),
    ("fig4", "channel pool size with N=2M, drop vs switching, T_p=100 us"),
    ("fig5a", "PU imbalance, small network, random vs least-used, q_p=0.2"),
    ("fig5b", "PU imbalance, large network, random vs least-used, q_p=0.2"),
    ("fig6", "priority rate, small network, B in {2,4}, K in {1,2,4}, q_p=0.05"),
    ("fig7a", "frame size under adaptive schedules, small network"),
    ("fig7b", "frame size under adaptive schedules, large network"),
    ("fig8a", "on/off run-length laws, small network"),
    ("fig8b", "on/off run-length laws, large network"),
];

const EXACT_AND_SIM: &[Engine] = &[Engine::Analysis, Engine::Sim];
const SIM: &[Engine] = &[Engine::Sim];

fn points(param: &str, grid: &str) -> (String, Vec<GridPoint>) {
    let (param, values) = parse_grid(&format!("{param}={grid}")).expect("preset grid");
    let pts = values
        .into_iter()
        .map(|v| GridPoint {
            settings: vec![(param.clone(), v.clone())],
            value: v,
        })
        .collect();
    (param, pts)
}

fn sweep(base: ScenarioConfig, (param, points): (String, Vec<GridPoint>), series: Vec<Series>) -> SweepSpec {
    SweepSpec {
        base,
        param,
        points,
        series,
        seed: DEFAULT_SEED,
        slots: DEFAULT_SLOTS,
        reps: 1,
    }
}

fn bond_series(prefix: &str, bonds: &[u32], engines: &[Engine]) -> Vec<Series> {
    bonds
        .iter()
        .map(|k| Series::new(format!("{prefix}K={k}"), engines).set("max_bond", k))
        .collect()
}

fn activity_preset(base: ScenarioConfig) -> SweepSpec {
    let mut series = bond_series("A ", &[1, 2, 3], EXACT_AND_SIM);
    for k in [2, 3] {
        series.push(
            Series::new(format!("N K={k}"), SIM)
                .set("max_bond", k)
                .set("bonding_policy", "k-only"),
        );
    }
    sweep(base, points("pu_activity", "0:0.9:0.05"), series)
}

fn pool_preset(channels: u32, slot_seconds: f64, activity: f64) -> SweepSpec {
    let base = ScenarioConfig {
        num_data_channels: channels,
        slot_seconds,
        pu_activity: activity,
        frame_bits: 8_000.0,
        ..ScenarioConfig::small()
    };
    sweep(base, points("num_users", "2:40:2"), bond_series("", &[1, 2, 3], EXACT_AND_SIM))
}

fn frame_penalty_preset(base: ScenarioConfig) -> SweepSpec {
    let base = ScenarioConfig {
        pu_activity: 0.1,
        ..base
    };
    let mut series = vec![Series::new("K=1", EXACT_AND_SIM).set("max_bond", 1)];
    for k in [2, 3] {
        for a in [0.0, 0.1, 0.5] {
            series.push(
                Series::new(format!("K={k} a={a}"), EXACT_AND_SIM)
                    .set("max_bond", k)
                    .set("penalty", format!("power:{a}")),
            );
        }
    }
    sweep(base, points("frame_bits", "8000:160000:8000"), series)
}

fn exponent_preset(channels: u32, users: u32) -> SweepSpec {
    let base = ScenarioConfig {
        num_data_channels: channels,
        num_users: users,
        frame_bits: 8_000.0,
        slot_seconds: 2e-3,
        ..ScenarioConfig::small()
    };
    let mut series = Vec::new();
    for k in [1, 2, 3] {
        for q in [0.05, 0.1] {
            series.push(
                Series::new(format!("K={k} q_p={q}"), EXACT_AND_SIM)
                    .set("max_bond", k)
                    .set("pu_activity", q),
            );
        }
    }
    sweep(base, points("penalty", "0:0.1:0.01"), series)
}

fn pool_size_preset() -> SweepSpec {
    let pts = (4..=20)
        .step_by(2)
        .map(|m: u32| GridPoint {
            value: m.to_string(),
            settings: vec![
                ("num_data_channels".into(), m.to_string()),
                ("num_users".into(), (2 * m).to_string()),
            ],
        })
        .collect();
    let mut series = Vec::new();
    for (q, d) in [(0.1, "5kB"), (0.3, "20kB")] {
        for (tag, disruption) in [("A", "drop"), ("S", "switch:100us")] {
            for k in [1, 2, 3] {
                series.push(
                    Series::new(format!("{tag} K={k} q_p={q} d={d}"), SIM)
                        .set("pu_activity", q)
                        .set("frame_bits", d)
                        .set("disruption", disruption)
                        .set("max_bond", k),
                );
            }
        }
    }
    sweep(ScenarioConfig::small(), ("num_data_channels".into(), pts), series)
}

fn imbalance_preset(base: ScenarioConfig) -> SweepSpec {
    let base = ScenarioConfig {
        pu_activity: 0.2,
        ..base
    };
    let mut series = Vec::new();
    for (tag, sel) in [("R", "random"), ("L", "least-used")] {
        for k in [1, 2, 3] {
            series.push(
                Series::new(format!("{tag} K={k}"), SIM)
                    .set("selection", sel)
                    .set("max_bond", k),
            );
        }
    }
    sweep(base, points("pu_imbalance", "0:3:0.25"), series)
}

fn priority_preset() -> SweepSpec {
    let base = ScenarioConfig {
        pu_activity: 0.05,
        ..ScenarioConfig::small()
    };
    let mut series = Vec::new();
    for b in [2, 4] {
        for k in [1, 2, 4] {
            series.push(
                Series::new(format!("B={b} K={k}"), SIM)
                    .set("priority", format!("0:{b}"))
                    .set("max_bond", k),
            );
        }
    }
    sweep(base, points("priority", "0:1:0.1"), series)
}

fn adaptive_preset(base: ScenarioConfig) -> SweepSpec {
    let mut series = Vec::new();
    for (tag, policy) in [("A", "adaptive"), ("N", "adaptive-k-only")] {
        for bonds in [[3, 2, 1], [3, 3, 3], [1, 1, 1]] {
            let schedule = format!("{policy}:0={},0.05={},0.1={}", bonds[0], bonds[1], bonds[2]);
            series.push(
                Series::new(format!("{tag} {{{},{},{}}}", bonds[0], bonds[1], bonds[2]), SIM)
                    .set("max_bond", 3)
                    .set("bonding_policy", schedule),
            );
        }
    }
    sweep(base, points("frame_bits", "8000:160000:8000"), series)
}

fn traffic_preset(base: ScenarioConfig) -> SweepSpec {
    let mut series = Vec::new();
    for law in ["EE", "EL", "LE", "LL"] {
        for k in [2, 3] {
            series.push(
                Series::new(format!("{law} K={k}"), SIM)
                    .set("pu_traffic", law)
                    .set("max_bond", k),
            );
        }
    }
    sweep(base, points("pu_activity", "0.1,0.2,0.3"), series)
}

/// Built-in sweep by name.
pub fn preset(name: &str) -> Option<SweepSpec> {
    let small = ScenarioConfig::small;
    let large = ScenarioConfig::large;
    Some(match name {
        "fig1a" => activity_preset(small()),
        "fig1b" => activity_preset(large()),
        "fig2a" => pool_preset(4, 2e-3, 0.1),
        "fig2b" => pool_preset(4, 5e-3, 0.1),
        "fig2c" => pool_preset(8, 2e-3, 0.05),
        "fig2d" => pool_preset(8, 5e-3, 0.05),
        "fig3a" => frame_penalty_preset(small()),
        "fig3b" => frame_penalty_preset(large()),
        "fig3c" => exponent_preset(4, 12),
        "fig3d" => exponent_preset(8, 24),
        "fig4" => pool_size_preset(),
        "fig5a" => imbalance_preset(small()),
        "fig5b" => imbalance_preset(large()),
        "fig6" => priority_preset(),
        "fig7a" => adaptive_preset(small()),
        "fig7b" => adaptive_preset(large()),
        "fig8a" => traffic_preset(small()),
        "fig8b" => traffic_preset(large()),
        _ => return None,
    })
}
