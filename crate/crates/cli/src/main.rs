use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dtsp_nav::io::{
    compare, generate_field, mission_csv, plan, read_field, reference_csv, render_svg, simulate, write_field,
    ExperimentConfig, IoError, PlannerKind,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_MISSION: u8 = 3;
const EXIT_SOLVER: u8 = 4;
const DEFAULT_OUT: &str = "out";

#[derive(Parser)]
#[command(name = "dtsp-nav", version, about = "Plan and fly curvature-constrained waypoint tours")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a tour and write tour JSON, reference CSV, and an SVG.
    Plan(RunArgs),
    /// Plan, then fly the tour with the NMPC controller.
    Simulate(RunArgs),
    /// Plan (and optionally fly) one field under two configurations.
    Compare(CompareArgs),
    /// Write a random field CSV.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
struct Overrides {
    /// JSON configuration file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_planner)]
    planner: Option<PlannerKind>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    open_tour: bool,
    /// Output directory [default: config output_dir, else ./out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    field: PathBuf,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    field: PathBuf,
    /// Field for run b; must hold the same targets as --field.
    #[arg(long)]
    field_b: Option<PathBuf>,
    #[command(flatten)]
    opts: Overrides,
    /// Configuration for run b [default: same as run a]
    #[arg(long)]
    config_b: Option<PathBuf>,
    #[arg(long, value_parser = parse_planner)]
    planner_b: Option<PlannerKind>,
    /// Also fly both tours and compare closed-loop metrics.
    #[arg(long)]
    simulate: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 20.0)]
    width: f64,
    #[arg(long, default_value_t = 20.0)]
    height: f64,
    #[arg(long, default_value_t = 0.5)]
    min_sep: f64,
    /// Directory for field.csv; prints to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_planner(s: &str) -> Result<PlannerKind, String> {
    s.parse()
}

/// Error carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_VALIDATION,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn load_config(path: Option<&Path>, o: &Overrides) -> Result<ExperimentConfig, IoError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(p) = o.planner {
        cfg.planner = p;
    }
    if let Some(k) = o.k {
        cfg.k = k;
    }
    if let Some(r) = o.rho {
        cfg.rho = r;
    }
    if o.open_tour {
        cfg.closed_tour = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(o: &Overrides, cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    let dir = o
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_plan(a: &RunArgs) -> Result<(), Failure> {
    let field = read_field(&a.field)?;
    let cfg = load_config(a.opts.config.as_deref(), &a.opts)?;
    let p = plan(&field, &cfg)?;
    let dir = out_dir(&a.opts, &cfg)?;
    write(&dir, "tour.json", &p.tour_file(&field).to_json())?;
    write(&dir, "reference.csv", &reference_csv(&p.polylines(&field)))?;
    write(&dir, "plan.svg", &render_svg(&field, &p, None))?;
    println!(
        "{} tour over {} targets: {:.3} m (euclidean {:.3} m)",
        cfg.planner.name(),
        field.len(),
        p.total_cost,
        p.euclidean_cost
    );
    Ok(())
}

fn run_simulate(a: &RunArgs) -> Result<(), Failure> {
    let field = read_field(&a.field)?;
    let cfg = load_config(a.opts.config.as_deref(), &a.opts)?;
    let out = simulate(&field, &cfg)?;
    let dir = out_dir(&a.opts, &cfg)?;
    write(&dir, "tour.json", &out.plan.tour_file(&field).to_json())?;
    write(&dir, "reference.csv", &reference_csv(&out.plan.polylines(&field)))?;
    write(&dir, "mission.csv", &mission_csv(&out.log))?;
    write(&dir, "summary.json", &out.summary.to_json())?;
    write(&dir, "mission.svg", &render_svg(&field, &out.plan, Some(&out.log)))?;
    let s = &out.summary;
    println!(
        "reached {}/{} waypoints, max error {:.4} m, flown {:.3} m vs reference {:.3} m",
        s.waypoints_reached, s.targets, s.max_position_error, s.closed_loop_length, s.reference_length
    );
    match &s.failure {
        None => Ok(()),
        Some(f) => Err(Failure {
            code: EXIT_MISSION,
            error: anyhow::anyhow!("mission failed before tour position {}: {}", f.waypoint, f.reason),
        }),
    }
}

fn run_compare(a: &CompareArgs) -> Result<(), Failure> {
    let field_a = read_field(&a.field)?;
    let field_b = match &a.field_b {
        Some(p) => read_field(p)?,
        None => field_a.clone(),
    };
    let cfg_a = load_config(a.opts.config.as_deref(), &a.opts)?;
    let mut opts_b = a.opts.clone();
    if a.planner_b.is_some() {
        opts_b.planner = a.planner_b;
    }
    let cfg_b = load_config(a.config_b.as_deref().or(a.opts.config.as_deref()), &opts_b)?;
    let report = compare(&field_a, &field_b, &cfg_a, &cfg_b, a.simulate)?;
    let dir = out_dir(&a.opts, &cfg_a)?;
    write(&dir, "compare.txt", &report.to_text())?;
    write(&dir, "compare.csv", &report.to_csv())?;
    print!("{}", report.to_text());
    Ok(())
}

fn run_generate(a: &GenerateArgs) -> Result<(), Failure> {
    let pts = generate_field(a.seed, a.count, a.width, a.height, a.min_sep)?;
    let comment = format!(
        "seed {} count {} width {} height {} min_sep {}",
        a.seed, a.count, a.width, a.height, a.min_sep
    );
    let text = write_field(&pts, Some(&comment));
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(dir, "field.csv", &text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => run_plan(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Compare(a) => run_compare(a),
        Command::Generate(a) => run_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
