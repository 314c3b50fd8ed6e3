//! Command-line surface: subcommands, deterministic seeding, CSV/JSON
//! emission. Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{BoundsReport, WStar};
use crate::config::Config;
use crate::estimators::make_w_grid;
use crate::seeding::{derive_seed, job_id, JobKind};
use crate::sim::{simulate_run, ChangePoint, Location, RunResult, Scenario};
use crate::sweep::{
    self, best_feasible, classify, run_sweep, summarize, Constraints, FeasibilityClass,
    SweepRecord,
};
use crate::stats::Estimate;

#[derive(Parser)]
#[command(
    name = "lscd",
    about = "Two-location switching change detection: simulate, estimate, bound, sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the config replication count.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Simulate one trajectory and print its outcome.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Change times "A,B" with each side `never`, a local observation
        /// index `N`, or a global slot `global:N`.
        #[arg(long, default_value = "never,never")]
        scenario: String,
        /// Start location, A or B.
        #[arg(long)]
        start: Location,
        /// Emit the run as a one-row trace CSV instead of JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Estimate ARLs, delay assemblies and energy rate for the configured
    /// tuple.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Emit a flat estimate-table CSV instead of JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate every closed-form bound for the configured tuple.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep a (gamma_a, gamma_b, n) grid and classify feasibility.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid spec "ga=2:8:1;gb=2:8:1;n=1,3,5" (ranges `lo:hi:step` or
        /// comma lists). Default: ga,gb in 2..8 step 1, n in {1,3,5}.
        #[arg(long)]
        grid: Option<String>,
        /// Classify on 3-sigma pessimistic interval ends.
        #[arg(long)]
        strict: bool,
    },
    /// Summarize a sweep CSV against the config constraints.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep CSV produced by the sweep subcommand.
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) => m,
            CliError::Runtime(m) => m,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Entry point used by the binary.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(runtime_err),
        Some(_) => Err(CliError::Config("threads must be >= 1".to_string())),
        None => Ok(f()),
    }
}

fn load_config(common: &CommonArgs) -> Result<Config, CliError> {
    let mut cfg = Config::from_path(&common.config).map_err(config_err)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.reps = reps;
    }
    cfg.validate().map_err(config_err)?;
    Ok(cfg)
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path).map_err(runtime_err)?);
            f.write_all(text.as_bytes()).map_err(runtime_err)?;
            f.flush().map_err(runtime_err)
        }
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(runtime_err)
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            scenario,
            start,
            trace,
        } => cmd_simulate(&common, &scenario, start, trace),
        Command::Estimate { common, trace } => cmd_estimate(&common, trace),
        Command::Bounds { common } => cmd_bounds(&common),
        Command::Sweep {
            common,
            grid,
            strict,
        } => cmd_sweep(&common, grid.as_deref(), strict),
        Command::Report { common, input } => cmd_report(&common, &input),
    }
}

fn parse_change_point(s: &str) -> Result<ChangePoint, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("never") {
        return Ok(ChangePoint::Never);
    }
    if let Some(rest) = t.strip_prefix("global:") {
        return rest
            .parse::<u64>()
            .map(ChangePoint::GlobalTime)
            .map_err(|e| format!("bad global change time {rest:?}: {e}"));
    }
    t.parse::<u64>()
        .map(ChangePoint::LocalObservation)
        .map_err(|e| format!("bad change time {t:?}: {e}"))
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("scenario must be \"A,B\", got {s:?}"));
    }
    let a = parse_change_point(parts[0])?;
    let b = parse_change_point(parts[1])?;
    Scenario::new(a, b).map_err(|e| e.to_string())
}

fn trace_csv(result: &RunResult) -> String {
    let mut text = String::from("run_id,alarm_time,alarm_location,delay,energy,false_alarm\n");
    let opt_u64 = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    text.push_str(&format!(
        "0,{},{},{},{},{}\n",
        opt_u64(result.alarm_time),
        result
            .alarm_location
            .map(|l| l.to_string())
            .unwrap_or_default(),
        opt_u64(result.detection_delay),
        sweep::fmt_float(result.energy),
        result.false_alarm,
    ));
    text
}

fn cmd_simulate(
    common: &CommonArgs,
    scenario: &str,
    start: Location,
    trace: bool,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let scenario = parse_scenario(scenario).map_err(CliError::Config)?;
    let loc_a = cfg.location_a().map_err(config_err)?;
    let loc_b = cfg.location_b().map_err(config_err)?;
    let uav = cfg.uav().map_err(config_err)?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, job_id(JobKind::SimulateRun, 0, 0), 0));
    let result = with_threads(common.threads, || {
        simulate_run(
            &loc_a,
            &loc_b,
            &uav,
            &scenario,
            start,
            &mut rng,
            cfg.horizon,
        )
    })?
    .map_err(runtime_err)?;

    let text = if trace {
        trace_csv(&result)
    } else {
        let mut s = serde_json::to_string_pretty(&result).map_err(runtime_err)?;
        s.push('\n');
        s
    };
    write_output(&common.out, &text)
}

fn cmd_estimate(common: &CommonArgs, trace: bool) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let uav = cfg.uav().map_err(config_err)?;
    let constraints = cfg.constraints().map_err(config_err)?;
    let params = cfg.sweep_params(false);
    let model_a = cfg.model_a.build().map_err(config_err)?;
    let model_b = cfg.model_b.build().map_err(config_err)?;
    let metrics = with_threads(common.threads, || {
        sweep::estimate_metrics(
            model_a,
            model_b,
            cfg.gamma_a,
            cfg.gamma_b,
            cfg.n_a,
            cfg.n_b,
            &uav,
            &constraints,
            &params,
        )
    })?
    .map_err(runtime_err)?;
    let text = if trace {
        let mut csv = Vec::new();
        metrics.write_csv(cfg.seed, &mut csv).map_err(runtime_err)?;
        String::from_utf8(csv).expect("csv is utf8")
    } else {
        let mut s = serde_json::to_string_pretty(&metrics).map_err(runtime_err)?;
        s.push('\n');
        s
    };
    write_output(&common.out, &text)
}

fn bounds_reports(cfg: &Config) -> Result<(BoundsReport, BoundsReport), CliError> {
    let an_a = cfg
        .model_a
        .build()
        .map_err(config_err)?
        .analytics()
        .map_err(runtime_err)?;
    let an_b = cfg
        .model_b
        .build()
        .map_err(config_err)?
        .analytics()
        .map_err(runtime_err)?;
    let report = |gl: f64, glp: f64, n: u32, al, alp| {
        BoundsReport::compute(
            gl,
            glp,
            n,
            cfg.tau,
            al,
            alp,
            &make_w_grid(gl, cfg.w_grid_size),
            WStar::Unknown,
        )
    };
    let a = report(cfg.gamma_a, cfg.gamma_b, cfg.n_a, &an_a, &an_b).map_err(runtime_err)?;
    let b = report(cfg.gamma_b, cfg.gamma_a, cfg.n_b, &an_b, &an_a).map_err(runtime_err)?;
    Ok((a, b))
}

fn bounds_table(location: &str, r: &BoundsReport) -> String {
    let mut t = String::new();
    t.push_str(&format!(
        "location {location}: gamma={} other_gamma={} n={} tau={}\n",
        r.gamma_l, r.gamma_lp, r.n, r.tau
    ));
    let mut row = |name: &str, v: f64| t.push_str(&format!("  {name:<32} {v:.12e}\n"));
    row("arl_lower", r.arl_lower);
    row("arl_upper", r.arl_upper);
    row("arl_ratio_liminf", r.arl_ratio_liminf);
    row("arl_ratio_limsup", r.arl_ratio_limsup);
    row("wadd_upper", r.wadd_upper);
    row("c1", r.c1);
    row("c2", r.c2);
    row("c_prime", r.c_prime);
    row("cycle_time_upper", r.cycle.cycle_time_upper);
    row("bottom_exit_upper", r.cycle.bottom_exit_upper);
    row("post_change_cycle_time_upper", r.cycle.post_change_cycle_time_upper);
    t
}

fn cmd_bounds(common: &CommonArgs) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let (a, b) = bounds_reports(&cfg)?;
    if let Some(path) = &common.out {
        let json = serde_json::json!({ "location_a": a, "location_b": b });
        let mut text = serde_json::to_string_pretty(&json).map_err(runtime_err)?;
        text.push('\n');
        return write_output(&Some(path.clone()), &text);
    }
    let mut text = bounds_table("A", &a);
    text.push_str(&bounds_table("B", &b));
    text.push_str("flags:\n");
    for f in &a.flags {
        text.push_str(&format!("  - {f}\n"));
    }
    write_output(&None, &text)
}

fn parse_axis_f64(s: &str) -> Result<Vec<f64>, String> {
    if let Some((lo, rest)) = s.split_once(':') {
        let (hi, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("range must be lo:hi:step, got {s:?}"))?;
        let (lo, hi, step): (f64, f64, f64) = (
            lo.parse().map_err(|e| format!("{s:?}: {e}"))?,
            hi.parse().map_err(|e| format!("{s:?}: {e}"))?,
            step.parse().map_err(|e| format!("{s:?}: {e}"))?,
        );
        if step.is_nan() || step <= 0.0 || hi < lo {
            return Err(format!("bad range {s:?}"));
        }
        let mut v = Vec::new();
        let mut x = lo;
        while x <= hi + 1e-9 * step {
            v.push(x);
            x += step;
        }
        Ok(v)
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
            .collect()
    }
}

fn parse_grid_spec(s: &str) -> Result<Vec<(f64, f64, u32)>, String> {
    let mut ga = None;
    let mut gb = None;
    let mut ns = None;
    for part in s.split(';') {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| format!("grid part must be key=values, got {part:?}"))?;
        match key.trim() {
            "ga" => ga = Some(parse_axis_f64(val)?),
            "gb" => gb = Some(parse_axis_f64(val)?),
            "n" => {
                ns = Some(
                    parse_axis_f64(val)?
                        .into_iter()
                        .map(|x| {
                            if x >= 1.0 && x.fract() == 0.0 {
                                Ok(x as u32)
                            } else {
                                Err(format!("n values must be integers >= 1, got {x}"))
                            }
                        })
                        .collect::<Result<Vec<u32>, String>>()?,
                )
            }
            other => return Err(format!("unknown grid axis {other:?} (use ga, gb, n)")),
        }
    }
    let (ga, gb, ns) = (
        ga.ok_or("grid spec missing ga=")?,
        gb.ok_or("grid spec missing gb=")?,
        ns.ok_or("grid spec missing n=")?,
    );
    let mut grid = Vec::new();
    for &n in &ns {
        for &a in &ga {
            for &b in &gb {
                grid.push((a, b, n));
            }
        }
    }
    if grid.is_empty() {
        return Err("empty grid".to_string());
    }
    Ok(grid)
}

fn cmd_sweep(common: &CommonArgs, grid: Option<&str>, strict: bool) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let grid = match grid {
        Some(spec) => parse_grid_spec(spec).map_err(CliError::Config)?,
        None => sweep::default_grid(),
    };
    let uav = cfg.uav().map_err(config_err)?;
    let constraints = cfg.constraints().map_err(config_err)?;
    let params = cfg.sweep_params(strict);
    let model_a = cfg.model_a.build().map_err(config_err)?;
    let model_b = cfg.model_b.build().map_err(config_err)?;
    let records = with_threads(common.threads, || {
        run_sweep(&grid, model_a, model_b, &uav, &constraints, &params)
    })?
    .map_err(runtime_err)?;

    let mut csv = Vec::new();
    sweep::write_csv(&records, &mut csv).map_err(runtime_err)?;
    let csv = String::from_utf8(csv).expect("csv is utf8");
    let summary = summarize(&records);
    let mut summary_json = serde_json::to_string_pretty(&summary).map_err(runtime_err)?;
    summary_json.push('\n');

    match &common.out {
        Some(path) => {
            write_output(&Some(path.clone()), &csv)?;
            print!("{summary_json}");
            std::io::stdout().flush().map_err(runtime_err)
        }
        None => {
            print!("{csv}");
            print!("{summary_json}");
            std::io::stdout().flush().map_err(runtime_err)
        }
    }
}

/// Reconstruct sweep records from the fixed-schema CSV.
fn parse_sweep_csv(path: &Path) -> Result<Vec<SweepRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(runtime_err)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| runtime_err("empty CSV"))?;
    if header != sweep::CSV_HEADER {
        return Err(runtime_err(format!(
            "unexpected CSV header; want {:?}",
            sweep::CSV_HEADER
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 13 {
            return Err(runtime_err(format!("line {}: want 13 fields", i + 2)));
        }
        let num = |j: usize| -> Result<f64, CliError> {
            f[j].parse::<f64>()
                .map_err(|e| runtime_err(format!("line {} field {j}: {e}", i + 2)))
        };
        let class = match f[12] {
            "feasible" => Some(FeasibilityClass::Feasible),
            "energy_violation" => Some(FeasibilityClass::EnergyViolation),
            "arl_violation" => Some(FeasibilityClass::ArlViolation),
            "both_violation" => Some(FeasibilityClass::BothViolation),
            "error" => None,
            other => return Err(runtime_err(format!("line {}: bad class {other:?}", i + 2))),
        };
        records.push(SweepRecord {
            gamma_a: num(0)?,
            gamma_b: num(1)?,
            n: f[2]
                .parse()
                .map_err(|e| runtime_err(format!("line {}: {e}", i + 2)))?,
            arl_a: Estimate {
                mean: num(3)?,
                se: num(4)?,
                reps: 0,
            },
            arl_b: Estimate {
                mean: num(5)?,
                se: num(6)?,
                reps: 0,
            },
            energy_rate: Estimate {
                mean: num(7)?,
                se: num(8)?,
                reps: 0,
            },
            wadd_a: num(9)?,
            wadd_b: num(10)?,
            objective: num(11)?,
            class,
            error: if class.is_none() {
                Some("recorded as error".to_string())
            } else {
                None
            },
        });
    }
    Ok(records)
}

fn cmd_report(common: &CommonArgs, input: &Path) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let constraints: Constraints = cfg.constraints().map_err(config_err)?;
    let records = parse_sweep_csv(input)?;

    // Reclassify from the stored means so the report is consistent with the
    // config it is read under.
    let records: Vec<SweepRecord> = records
        .into_iter()
        .map(|mut r| {
            if r.error.is_none() {
                r.class = Some(classify(
                    r.arl_a.mean,
                    r.arl_b.mean,
                    r.energy_rate.mean,
                    &constraints,
                ));
            }
            r
        })
        .collect();
    let summary = summarize(&records);

    let mut text = String::new();
    text.push_str(&format!(
        "tuples {}  feasible {}  energy_violation {}  arl_violation {}  both_violation {}  errors {}\n",
        summary.tuples,
        summary.feasible,
        summary.energy_violation,
        summary.arl_violation,
        summary.both_violation,
        summary.errors,
    ));
    if let Some(best) = best_feasible(&records) {
        text.push_str(&format!(
            "best feasible: gamma_a={} gamma_b={} n={} objective={:.6} energy={:.6} arl_a={:.1} arl_b={:.1}\n",
            best.gamma_a,
            best.gamma_b,
            best.n,
            best.objective,
            best.energy_rate.mean,
            best.arl_a.mean,
            best.arl_b.mean,
        ));
    } else {
        text.push_str("best feasible: none\n");
    }
    write_output(&common.out, &text)
}
