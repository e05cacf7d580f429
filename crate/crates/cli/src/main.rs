use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chanbond::analysis::{self, enumerate_states};
use chanbond::experiment::{
    compare_engines, compare_with_matrix, gnuplot_script, parse_engines, preset, run_sweep, to_csv,
    CompareOptions, SweepSpec, PRESETS,
};
use chanbond::optimizer::{optimize_schedule, throughput_by_bond, ScheduleConstraints};
use chanbond::oracle::oracle_transition_matrix;
use chanbond::scenario::parse_scenario;
use chanbond::{Error, ScenarioConfig, TransitionMatrix};
use clap::{Args, Parser, Subcommand};

/// Channel-bonding OSA MAC performance toolkit.
#[derive(Parser)]
#[command(name = "chanbond", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one scenario parameter (or run a preset) and write CSV.
    Sweep(SweepArgs),
    /// Compare analysis, oracle and simulation on one scenario.
    Compare(CompareArgs),
    /// Choose the best bond order for each PU activity level.
    Optimize(OptimizeArgs),
    /// Print a transition matrix as `row,col,probability` CSV.
    Matrix(MatrixArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct SweepArgs {
    /// Base scenario file; the small network when absent.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// `<param>=<start:stop:step>` or `<param>=<v1,v2,...>`.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    sweep: Option<String>,
    /// Built-in sweep, see `chanbond presets`.
    #[arg(long)]
    preset: Option<String>,
    /// analysis, sim, oracle, a comma list of these, or all.
    #[arg(long, default_value = "analysis,sim", conflicts_with = "preset")]
    engine: String,
    /// Measured slots per simulation run.
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation repetitions per grid point.
    #[arg(long)]
    reps: Option<u32>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script plotting the CSV.
    #[arg(long, requires = "out")]
    emit_gnuplot: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    slots: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use this `row,col,probability` CSV as the analysis matrix.
    #[arg(long)]
    analysis_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated PU activity levels, one per interval.
    #[arg(long, default_value = "0,0.05,0.1")]
    activities: String,
    #[arg(long, default_value_t = 3)]
    k_max: u32,
    /// Required detection probability.
    #[arg(long, default_value_t = 0.9)]
    required_detect: f64,
    /// Largest allowed false-alarm probability.
    #[arg(long, default_value_t = 0.1)]
    required_false_alarm: f64,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// analysis or oracle.
    #[arg(long, default_value = "analysis")]
    engine: String,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Constraint(_) | Error::Unsupported(_) | Error::Undefined(_) => 2,
        Error::Capacity { .. } | Error::Convergence { .. } | Error::Singular(_) => 3,
        Error::Io(_) => 4,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Write to stdout; a closed pipe ends output quietly.
fn emit(text: &str) -> Result<(), Error> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Error::Io(e)),
        _ => Ok(()),
    }
}

fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig, Error> {
    match path {
        Some(p) => parse_scenario(&read(p)?),
        None => Ok(ScenarioConfig::small()),
    }
}

fn sweep(args: SweepArgs) -> Result<u8, Error> {
    let mut spec = match &args.preset {
        Some(name) => preset(name).ok_or_else(|| {
            Error::Config(chanbond::ConfigError::new(format!(
                "unknown preset `{name}`, see `chanbond presets`"
            )))
        })?,
        None => {
            let base = load_scenario(args.scenario.as_deref())?;
            let engines = parse_engines(&args.engine)?;
            SweepSpec::from_grid(base, args.sweep.as_deref().unwrap_or_default(), &engines)?
        }
    };
    if let Some(s) = args.slots {
        spec.slots = s;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(r) = args.reps {
        spec.reps = r;
    }
    let rows = run_sweep(&spec)?;
    let csv = to_csv(&spec, &rows);
    match &args.out {
        Some(path) => {
            write(path, &csv)?;
            if let Some(plot) = &args.emit_gnuplot {
                write(plot, &gnuplot_script(&spec, &path.to_string_lossy()))?;
            }
        }
        None => emit(&csv)?,
    }
    Ok(0)
}

fn compare(args: CompareArgs) -> Result<u8, Error> {
    let cfg = load_scenario(args.scenario.as_deref())?;
    let opts = CompareOptions {
        slots: args.slots,
        seed: args.seed,
        ..CompareOptions::default()
    };
    let report = match &args.analysis_matrix {
        Some(path) => {
            let space = enumerate_states(&cfg)?;
            let matrix = TransitionMatrix::from_csv(&read(path)?, space.len())?;
            compare_with_matrix(&cfg, &space, &matrix, &opts)?
        }
        None => compare_engines(&cfg, &opts)?,
    };
    emit(&format!("{report}\n"))?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn optimize(args: OptimizeArgs) -> Result<u8, Error> {
    let cfg = load_scenario(args.scenario.as_deref())?;
    let activities = args
        .activities
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(chanbond::ParseError::new(1, format!("bad activity `{v}`"))))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let constraints = ScheduleConstraints {
        k_max: args.k_max,
        required_detect: args.required_detect,
        required_false_alarm: args.required_false_alarm,
    };
    let schedule = optimize_schedule(&cfg, &activities, constraints)?;
    let mut out = format!(
        "q_p,chosen_k,{}\n",
        (1..=args.k_max).map(|k| format!("r_k{k}_bps")).collect::<Vec<_>>().join(",")
    );
    for seg in &schedule.segments {
        let rates = throughput_by_bond(&cfg, seg.pu_activity, args.k_max)?;
        let rates: Vec<String> = rates.iter().map(|r| r.to_string()).collect();
        out += &format!("{},{},{}\n", seg.pu_activity, seg.bond, rates.join(","));
    }
    let bonds: Vec<String> = schedule.bonds().iter().map(|b| b.to_string()).collect();
    out += &format!("# schedule {{{}}}\n", bonds.join(","));
    let policy: Vec<String> = schedule
        .segments
        .iter()
        .map(|s| format!("{}={}", s.pu_activity, s.bond))
        .collect();
    out += &format!("# bonding_policy = adaptive:{}\n", policy.join(","));
    emit(&out)?;
    Ok(0)
}

fn matrix(args: MatrixArgs) -> Result<u8, Error> {
    let cfg = load_scenario(args.scenario.as_deref())?;
    let (_, matrix) = match args.engine.as_str() {
        "analysis" => analysis::build_transition_matrix(&cfg)?,
        "oracle" => oracle_transition_matrix(&cfg)?,
        other => {
            return Err(Error::Parse(chanbond::ParseError::new(
                1,
                format!("matrix engine must be analysis or oracle, not `{other}`"),
            )))
        }
    };
    emit(&matrix.to_csv())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Optimize(a) => optimize(a),
        Command::Matrix(a) => matrix(a),
        Command::Presets => {
            let list: String = PRESETS.iter().map(|(name, about)| format!("{name:8} {about}\n")).collect();
            emit(&list).map(|_| 0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
