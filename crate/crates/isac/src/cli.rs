//! Command-line front end.
//!
//! Exit codes: 0 success, 1 infeasible, 2 usage or input error, 3 numerical
//! failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use isac_core::conic::{ConicSolver, SolverSettings};
use isac_core::model::watts_to_dbw;
use isac_core::orchestrator::{
    gamma_sweep, isotropic_limit, max_min_illumination, run, AoOptions, Context, Method, OrchestratorError,
};
use isac_core::Scenario;

use crate::artifact::RunArtifact;
use crate::cbf::CbfDump;
use crate::export::{self, Grid};
use crate::scenario_file::load_scenario;
use crate::solver::ClarabelSolver;
use crate::StdClock;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "isac", version, about = "UAV-assisted networked ISAC design: beamforming, association, trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and report the achievable illumination floor.
    Validate {
        /// Scenario file, or `paper` for the bundled deployment.
        scenario: PathBuf,
    },
    /// Run the joint design.
    Solve(RunArgs),
    /// Run a benchmark (straight flight or isotropic transmission).
    Baseline(RunArgs),
    /// Average sum rate of each method over a list of illumination thresholds.
    Sweep(SweepArgs),
    /// Illumination power over a grid for one slot of a saved run.
    Beampattern(BeampatternArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Proposed,
    Straight,
    Isotropic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Proposed => Method::Proposed,
            MethodArg::Straight => Method::StraightFlight,
            MethodArg::Isotropic => Method::Isotropic,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file, or `paper` for the bundled deployment.
    pub scenario: PathBuf,
    /// Re-discretize the mission into this many slots (total duration kept).
    #[arg(long)]
    pub slots: Option<usize>,
    /// Recorded in the artifact; the pipeline itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub max_outer: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Illumination threshold in dBW (overrides the scenario).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_dbw: Option<f64>,
    /// Artifact path; the per-slot table goes next to it as `<stem>.slots.csv`.
    #[arg(long, default_value = "run.json")]
    pub out: PathBuf,
    /// Write every conic subproblem to this directory in CBF format.
    #[arg(long)]
    pub dump_cbf: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated thresholds in dBW.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub gamma_dbw: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Proposed, MethodArg::Straight, MethodArg::Isotropic])]
    pub methods: Vec<MethodArg>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BeampatternArgs {
    /// Run artifact written by `solve` or `baseline`.
    pub artifact: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub slot: usize,
    /// Evaluation altitude in meters; defaults to the sensing altitude.
    #[arg(long)]
    pub altitude: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 400.0, allow_negative_numbers = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub y_min: f64,
    #[arg(long, default_value_t = 400.0, allow_negative_numbers = true)]
    pub y_max: f64,
    #[arg(long, default_value_t = 81)]
    pub nx: usize,
    #[arg(long, default_value_t = 81)]
    pub ny: usize,
    /// Grid table; UAV annotations go to `<stem>.uavs.csv`.
    #[arg(long, default_value = "beampattern.csv")]
    pub out: PathBuf,
}

fn companion(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

fn load(common: &Common, err: &mut dyn Write) -> Result<Scenario, i32> {
    match load_scenario(&common.scenario) {
        Ok(s) => Ok(match common.slots {
            Some(n) => {
                let s = s.with_num_slots(n);
                if let Err(e) = s.validate() {
                    let _ = writeln!(err, "error: --slots {n}: {e}");
                    return Err(EXIT_USAGE);
                }
                s
            }
            None => s,
        }),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Err(EXIT_USAGE)
        }
    }
}

fn error_code(e: &OrchestratorError) -> i32 {
    match e {
        e if e.is_infeasible() => EXIT_INFEASIBLE,
        OrchestratorError::Scenario(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn create(path: &Path, err: &mut dyn Write) -> Result<BufWriter<File>, i32> {
    File::create(path).map(BufWriter::new).map_err(|e| {
        let _ = writeln!(err, "error: cannot create {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn options(common: &Common) -> AoOptions {
    AoOptions { max_outer: common.max_outer, ..AoOptions::default() }
}

fn cmd_validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let solver = ClarabelSolver::default();
    let best = match max_min_illumination(&scenario, &solver, &SolverSettings::default()) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let _ = writeln!(out, "gbs: {}  uavs: {}  sensing points: {}  slots: {}", scenario.num_gbs(), scenario.num_uavs(), scenario.num_sensing(), scenario.num_slots);
    let _ = writeln!(out, "gamma: {:.4} dBW", watts_to_dbw(scenario.gamma));
    let _ = writeln!(out, "max_min_illumination: {:.4} dBW", watts_to_dbw(best.watts));
    let _ = writeln!(out, "isotropic_limit: {:.4} dBW", watts_to_dbw(isotropic_limit(&scenario)));
    if scenario.gamma > best.watts {
        let _ = writeln!(out, "status: infeasible");
        EXIT_INFEASIBLE
    } else {
        let _ = writeln!(out, "status: ok");
        EXIT_OK
    }
}

fn cmd_run(args: &RunArgs, baseline: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let method = match (baseline, args.method) {
        (false, None) => MethodArg::Proposed,
        (true, None) => MethodArg::Straight,
        (true, Some(MethodArg::Proposed)) => {
            let _ = writeln!(err, "error: baseline takes --method straight or isotropic");
            return EXIT_USAGE;
        }
        (_, Some(m)) => m,
    };
    let mut scenario = match load(&args.common, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(g) = args.gamma_dbw {
        scenario = scenario.with_gamma_dbw(g);
    }
    let solver: Box<dyn ConicSolver> = match &args.dump_cbf {
        Some(dir) => {
            if let Err(e) = std::fs::create_dir_all(dir) {
                let _ = writeln!(err, "error: {}: {e}", dir.display());
                return EXIT_USAGE;
            }
            Box::new(CbfDump::new(ClarabelSolver::default(), dir.clone()))
        }
        None => Box::new(ClarabelSolver::default()),
    };
    let clock = StdClock::new();
    let ctx = Context { solver: solver.as_ref(), clock: &clock };
    let outcome = match run(&scenario, method.into(), &ctx, &options(&args.common)) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return error_code(&e);
        }
    };
    let artifact = RunArtifact::from_outcome(&scenario, &outcome, args.common.seed);
    if let Err(e) = artifact.write(&args.out) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    let slots_path = companion(&args.out, "slots");
    let file = match create(&slots_path, err) {
        Ok(f) => f,
        Err(code) => return code,
    };
    if let Err(e) = export::write_slots(file, &outcome.design, &scenario) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    let _ = writeln!(
        out,
        "{}: average sum rate {:.6} bps/Hz over {} slots, {} outer iterations",
        outcome.method.name(),
        outcome.average_sum_rate(),
        scenario.num_slots,
        outcome.trace.outer.len()
    );
    let _ = writeln!(out, "wrote {} and {}", args.out.display(), slots_path.display());
    if let Some(e) = &outcome.error {
        let _ = writeln!(err, "error: {e}");
        return error_code(e);
    }
    if !outcome.violations.is_empty() {
        let _ = writeln!(err, "error: final design violates constraints: {:?}", outcome.violations.violations);
        return EXIT_NUMERICAL;
    }
    EXIT_OK
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load(&args.common, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    let solver = ClarabelSolver::default();
    let ctx = Context::new(&solver);
    let sweep = gamma_sweep(&scenario, &args.gamma_dbw, &methods, &ctx, &options(&args.common));
    let file = match create(&args.out, err) {
        Ok(f) => f,
        Err(code) => return code,
    };
    if let Err(e) = export::write_sweep(file, &sweep) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    for p in &sweep.points {
        match (p.avg_rate, &p.error) {
            (Some(r), _) => {
                let _ = writeln!(out, "{:>8.2} dBW  {:<10} {:.6}", p.gamma_dbw, p.method.name(), r);
            }
            (None, Some(e)) => {
                let _ = writeln!(out, "{:>8.2} dBW  {:<10} infeasible ({e})", p.gamma_dbw, p.method.name());
            }
            (None, None) => {
                let _ = writeln!(out, "{:>8.2} dBW  {:<10} infeasible", p.gamma_dbw, p.method.name());
            }
        }
    }
    let _ = writeln!(out, "wrote {}", args.out.display());
    EXIT_OK
}

fn cmd_beampattern(args: &BeampatternArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let loaded = RunArtifact::read(&args.artifact).and_then(|a| Ok((a.scenario()?, a.design()?)));
    let (scenario, design) = match loaded {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    if args.slot >= scenario.num_slots {
        let _ = writeln!(err, "error: slot {} out of range (artifact has {} slots)", args.slot, scenario.num_slots);
        return EXIT_USAGE;
    }
    let grid = Grid { x_min: args.x_min, x_max: args.x_max, y_min: args.y_min, y_max: args.y_max, nx: args.nx, ny: args.ny };
    let altitude = args.altitude.unwrap_or(scenario.sensing_altitude);
    let pattern = match export::beampattern(&design, &scenario, args.slot, altitude, &grid) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let uav_path = companion(&args.out, "uavs");
    let written = create(&args.out, err).and_then(|f| {
        export::write_beampattern(f, &pattern).map_err(|_| EXIT_USAGE)?;
        let g = create(&uav_path, err)?;
        export::write_beampattern_uavs(g, &pattern).map_err(|_| EXIT_USAGE)
    });
    if let Err(code) = written {
        return code;
    }
    let _ = writeln!(out, "wrote {} and {}", args.out.display(), uav_path.display());
    EXIT_OK
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Validate { scenario } => cmd_validate(scenario, out, err),
        Command::Solve(args) => cmd_run(args, false, out, err),
        Command::Baseline(args) => cmd_run(args, true, out, err),
        Command::Sweep(args) => cmd_sweep(args, out, err),
        Command::Beampattern(args) => cmd_beampattern(args, out, err),
    }
}
