//! Command-line front end.
//!
//! Every resolved value is taken from the command line, else from the
//! `--config` file (`key = value` lines), else from the built-in default, and
//! is echoed into `manifest.txt`. A manifest is itself a valid config file, so
//! `--config manifest.txt --force` reproduces a run byte for byte.
//!
//! Exit status: 0 on success, 1 on runtime failure, 2 on usage errors.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::convolution::{prop1_sweep, stress_family};
use crate::experiments::{
    load_data, make_divfree, moment_matrix, run_experiment, slow_field_experiment,
    symmetry_decay_experiment, DataSpec, ExperimentConfig, ExperimentReport, Generator,
    SAMPLE_TIMES,
};
use crate::field::VectorField;
use crate::indices::{raster_svg, region_raster};
use crate::kernels::{sample_kernel, KernelFamily};
use crate::report::{parse_key_values, Manifest, Report, Table};
use crate::solver::{Engine, SolverConfig};
use crate::weighted::WeightedIndex;
use crate::{snapshot, Error, GridSpec};

#[derive(Debug, Parser)]
#[command(
    name = "mhdlab",
    version,
    about = "Free-space MHD mild-solution laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the kernel profiles and report their weighted sup bounds.
    Kernels(KernelsArgs),
    /// Sweep the convolution inequality over lambda for the stress family.
    ConvCheck(ConvArgs),
    /// Classify the (1/p0, theta0) plane for fixed (p1, theta1).
    Regions(RegionsArgs),
    /// Evolve initial data and write the trajectory.
    Evolve(EvolveArgs),
    /// Spreading experiment with B0 = 0, or the slow-B experiment.
    Spread(SpreadArgs),
    /// Cyclic-symmetric data, optionally perturbed.
    Symmetry(SymmetryArgs),
    /// Moment matrix along a trajectory.
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace existing output files.
    #[arg(long)]
    pub force: bool,
    /// Config file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Spatial dimension (2 or 3).
    #[arg(long)]
    pub d: Option<usize>,
    /// Points per axis (power of two, at least 16).
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-extent of the box.
    #[arg(long = "L")]
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Macro step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub quad_nodes: Option<usize>,
    /// Picard tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub picard_max: Option<usize>,
    /// Lorentz coupling.
    #[arg(long = "S")]
    pub s: Option<f64>,
    #[arg(long = "Re")]
    pub re: Option<f64>,
    #[arg(long = "Rm")]
    pub rm: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Inner radius of the decay fits (default L/8).
    #[arg(long)]
    pub fit_min: Option<f64>,
    /// Outer radius of the decay fits (default L/2).
    #[arg(long)]
    pub fit_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Sampling time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Also write both kernels as snapshots.
    #[arg(long)]
    pub dump: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Kernel order N.
    #[arg(long)]
    pub order: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Stress family member, or `all`.
    #[arg(long)]
    pub member: Option<String>,
    /// Sweep lambda = 2^0 .. 2^-levels.
    #[arg(long)]
    pub levels: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RegionsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub d: Option<usize>,
    /// Integrability of B0 (`inf` allowed).
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    /// Cells per axis.
    #[arg(long)]
    pub raster: Option<usize>,
    #[arg(long)]
    pub theta_max: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Velocity data: snapshot path or `kind[:key=value,...]`.
    #[arg(long)]
    pub data: Option<String>,
    /// Magnetic data (generator spec), `none` for B0 = 0.
    #[arg(long)]
    pub b_data: Option<String>,
    /// Seed for generated data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write a snapshot every k macro steps (0 disables).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SpreadArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run the slow-B experiment with this decay rate of B0.
    #[arg(long)]
    pub slow_b: Option<f64>,
    /// Amplitude of the slow B0.
    #[arg(long)]
    pub b_amp: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SymmetryArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Symmetry order.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub amp: Option<f64>,
    /// Asymmetric perturbation relative to max |u0|.
    #[arg(long)]
    pub perturbation: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use B0 = u0.
    #[arg(long)]
    pub coupled: bool,
}

/// Failure of a command, mapped to its exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn status(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runtime error tagged with the module that raised it.
fn at(module: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::Runtime(format!("{module}: {e}"))
}

/// Usage error tagged with the option that carried the bad value.
fn usage(key: &'static str) -> impl Fn(Error) -> CliError {
    move |e| CliError::Usage(format!("--{key}: {e}"))
}

/// Layered configuration: flag, then config file, then default.
struct Resolver {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    manifest: Manifest,
}

impl Resolver {
    fn new(command: &str, config: Option<&Path>) -> CliResult<Self> {
        let mut file = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
            let pairs = parse_key_values(&text)
                .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
            file.extend(pairs);
        }
        if let Some(c) = file.remove("command") {
            if c != command {
                return Err(CliError::Usage(format!(
                    "config file is for command {c:?}, not {command:?}"
                )));
            }
        }
        file.remove("version");
        let mut manifest = Manifest::new();
        manifest.set("command", command);
        manifest.set("version", env!("CARGO_PKG_VERSION"));
        Ok(Self {
            file,
            used: BTreeSet::new(),
            manifest,
        })
    }

    fn from_file<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>> {
        self.used.insert(key.to_string());
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: bad value {v:?}"))),
        }
    }

    fn value<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> CliResult<T> {
        let file = self.from_file(key)?;
        let v = flag.or(file).unwrap_or(default);
        self.manifest.set(key, &v);
        Ok(v)
    }

    /// Like [`Resolver::value`] with no default; absent values print as `none`.
    fn optional<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        let file = if self.file.get(key).map(String::as_str) == Some("none") {
            self.used.insert(key.to_string());
            None
        } else {
            self.from_file(key)?
        };
        let v = flag.or(file);
        match &v {
            Some(x) => self.manifest.set(key, x),
            None => self.manifest.set(key, "none"),
        };
        Ok(v)
    }

    fn switch(&mut self, key: &str, flag: bool) -> CliResult<bool> {
        let file: Option<bool> = self.from_file(key)?;
        let v = flag || file.unwrap_or(false);
        self.manifest.set(key, v);
        Ok(v)
    }

    fn common(&mut self, c: &Common, command: &str) -> CliResult<(PathBuf, bool)> {
        let out = self.value(
            "out",
            c.out.clone().map(|p| p.display().to_string()),
            format!("out/{command}"),
        )?;
        let force = self.switch("force", c.force)?;
        Ok((PathBuf::from(out), force))
    }

    fn grid(&mut self, g: &GridArgs, default: (usize, usize, f64)) -> CliResult<GridSpec> {
        let d = self.value("d", g.d, default.0)?;
        let n = self.value("n", g.n, default.1)?;
        let l = self.value("L", g.l, default.2)?;
        GridSpec::new(d, n, l).map_err(usage("n"))
    }

    fn solver(&mut self, s: &SolverArgs, defaults: SolverConfig) -> CliResult<SolverConfig> {
        let cfg = SolverConfig {
            dt: self.value("dt", s.dt, defaults.dt)?,
            horizon: self.value("T", s.t_end, defaults.horizon)?,
            quad_nodes: self.value("quad_nodes", s.quad_nodes, defaults.quad_nodes)?,
            tol: self.value("tol", s.tol, defaults.tol)?,
            picard_max: self.value("picard_max", s.picard_max, defaults.picard_max)?,
            s: self.value("S", s.s, defaults.s)?,
            re: self.value("Re", s.re, defaults.re)?,
            rm: self.value("Rm", s.rm, defaults.rm)?,
            ..defaults
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// Data spec with `seed` applied; the rendered spec goes to the manifest.
    fn data(
        &mut self,
        key: &str,
        flag: Option<String>,
        default: &str,
        seed: Option<u64>,
    ) -> CliResult<DataSpec> {
        let file: Option<String> = self.from_file(key)?;
        let text = flag.or(file).unwrap_or_else(|| default.to_string());
        let mut spec =
            DataSpec::parse(&text).map_err(|e| CliError::Usage(format!("--{key}: {e}")))?;
        if let Some(s) = seed {
            spec.seed = s;
        }
        self.manifest.set(key, spec.render());
        Ok(spec)
    }

    fn seed(&mut self, flag: Option<u64>) -> CliResult<Option<u64>> {
        self.optional("seed", flag)
    }

    /// Rejects config keys that no option consumed.
    fn finish(self) -> CliResult<Manifest> {
        let unknown: Vec<&String> = self
            .file
            .keys()
            .filter(|k| !self.used.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Usage(format!("unknown config keys: {unknown:?}")));
        }
        Ok(self.manifest)
    }
}

/// A resolved command ready to write its files.
struct Job {
    report: Report,
    out: PathBuf,
    force: bool,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("mhdlab: {e}");
            e.status()
        }
    }
}

/// Runs one command and writes its report; returns the written paths.
pub fn dispatch(command: &Command) -> CliResult<Vec<PathBuf>> {
    let job = match command {
        Command::Kernels(a) => kernels(a)?,
        Command::ConvCheck(a) => conv_check(a)?,
        Command::Regions(a) => regions(a)?,
        Command::Evolve(a) => evolve(a)?,
        Command::Spread(a) => spread(a)?,
        Command::Symmetry(a) => symmetry(a)?,
        Command::Moments(a) => moments(a)?,
    };
    job.report.emit(&job.out, job.force).map_err(at("report"))
}

/// Fails before any computation when the output would be overwritten.
fn precheck(out: &Path, force: bool) -> CliResult<()> {
    let m = out.join("manifest.txt");
    if !force && m.exists() {
        return Err(CliError::Runtime(format!(
            "report: {}: output exists (use --force to overwrite)",
            m.display()
        )));
    }
    Ok(())
}

fn kernels(a: &KernelsArgs) -> CliResult<Job> {
    let mut r = Resolver::new("kernels", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "kernels")?;
    let grid = r.grid(&a.grid, (2, 256, 32.0))?;
    let t = r.value("t", a.t, 1.0)?;
    let dump = r.switch("dump", a.dump)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let d = grid.d() as f64;
    let mut table = Table::new(&["family", "t", "order", "bound", "imag_residue"]);
    for (family, orders) in [
        (KernelFamily::F, [d + 1.0, d + 1.5]),
        (KernelFamily::G, [d + 1.0, 8.0]),
    ] {
        let k = sample_kernel(family, t, &grid).map_err(at("kernels"))?;
        for order in orders {
            table.push(vec![
                family.name().to_string(),
                t.to_string(),
                order.to_string(),
                k.bound_constant(order).to_string(),
                k.imag_residue().to_string(),
            ]);
        }
        if dump {
            let comps: Vec<&[f64]> = k.components().iter().map(|c| c.values()).collect();
            let bytes =
                snapshot::encode(&k.grid(), family.name(), &comps).map_err(at("snapshot"))?;
            report.binary(&format!("{}.bin", family.name()), bytes);
        }
    }
    report.table("kernel_bounds.csv", table);
    Ok(Job { report, out, force })
}

fn conv_check(a: &ConvArgs) -> CliResult<Job> {
    let mut r = Resolver::new("conv-check", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "conv-check")?;
    let grid = r.grid(&a.grid, (2, 256, 16.0))?;
    let order = r.value("order", a.order, 3.0)?;
    let input = WeightedIndex::new(r.value("a", a.a, 2.0)?, r.value("alpha", a.alpha, 2.0)?)
        .map_err(usage("a"))?;
    let output = WeightedIndex::new(r.value("p", a.p, 4.0)?, r.value("theta", a.theta, 0.0)?)
        .map_err(usage("p"))?;
    let member = r.value("member", a.member.clone(), "all".to_string())?;
    let levels = r.value("levels", a.levels, 6)?;
    let seed = r.value("seed", a.seed, 0)?;
    let mut report = Report::new(r.finish()?);
    let family = stress_family(&grid, seed);
    if member != "all" && !family.iter().any(|(n, _)| *n == member) {
        let names: Vec<&str> = family.iter().map(|(n, _)| n.as_str()).collect();
        return Err(CliError::Usage(format!(
            "--member: {member:?} is not one of {names:?} or all"
        )));
    }
    precheck(&out, force)?;
    let lambdas: Vec<f64> = (0..=levels as i32).map(|k| 2f64.powi(-k)).collect();
    for (name, f) in family
        .iter()
        .filter(|(n, _)| member == "all" || *n == member)
    {
        let rep = prop1_sweep(f, order, input, output, &lambdas).map_err(at("convolution"))?;
        report.table(&format!("conv_check_{name}.csv"), rep.to_table());
    }
    Ok(Job { report, out, force })
}

fn regions(a: &RegionsArgs) -> CliResult<Job> {
    let mut r = Resolver::new("regions", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "regions")?;
    let d = r.value("d", a.d, 2)?;
    let p1 = r.value("p1", a.p1, f64::INFINITY)?;
    let theta1 = r.value("theta1", a.theta1, 1.5)?;
    let res = r.value("raster", a.raster, 100)?;
    let theta_max = r.value("theta_max", a.theta_max, 4.0)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let cells = region_raster(d, p1, theta1, res, theta_max).map_err(usage("p1"))?;
    let mut table = Table::new(&["inv_p0", "theta0", "class"]);
    for c in &cells {
        table.push(vec![
            c.inv_p0.to_string(),
            c.theta0.to_string(),
            c.region.name().to_string(),
        ]);
    }
    let title = format!("d={d} p1={p1} theta1={theta1}");
    report.table("regions.csv", table);
    report.text("regions.svg", raster_svg(&cells, res, &title));
    Ok(Job { report, out, force })
}

/// Velocity data, plus the magnetic field when read from a snapshot.
fn initial_data(spec: &DataSpec, grid: &GridSpec) -> CliResult<(VectorField, Option<VectorField>)> {
    match &spec.generator {
        Generator::File(path) => {
            let (u, b) = load_data(path).map_err(at("snapshot"))?;
            if u.grid() != grid {
                return Err(CliError::Usage(format!(
                    "--data: {} is on grid {:?}; pass matching --d/--n/--L",
                    path.display(),
                    u.grid()
                )));
            }
            Ok((u, Some(b)))
        }
        _ => Ok((make_divfree(grid, spec).map_err(usage("data"))?, None)),
    }
}

fn experiment_config(
    r: &mut Resolver,
    grid: GridSpec,
    s: &SolverArgs,
    fit: &FitArgs,
) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(grid);
    let solver = r.solver(
        s,
        SolverConfig {
            horizon: 0.5,
            ..cfg.solver
        },
    )?;
    cfg.times = SAMPLE_TIMES
        .iter()
        .copied()
        .filter(|&t| t < solver.horizon * (1.0 - 1e-12))
        .chain([solver.horizon])
        .collect();
    cfg.fit_range = (
        r.value("fit_min", fit.fit_min, cfg.fit_range.0)?,
        r.value("fit_max", fit.fit_max, cfg.fit_range.1)?,
    );
    cfg.solver = solver;
    Ok(cfg)
}

fn attach_warnings(report: &mut Report, warnings: &[String]) {
    if warnings.is_empty() {
        return;
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
    report.text(
        "warnings.txt",
        warnings.iter().map(|w| format!("{w}\n")).collect(),
    );
}

fn evolve(a: &EvolveArgs) -> CliResult<Job> {
    let mut r = Resolver::new("evolve", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "evolve")?;
    let grid = r.grid(&a.grid, (2, 128, 16.0))?;
    let cfg = r.solver(&a.solver, SolverConfig::default())?;
    let seed = r.seed(a.seed)?;
    let spec = r.data("data", a.data.clone(), "dipole:amp=0.5", seed)?;
    let b_spec = match r.optional::<String>("b_data", a.b_data.clone())?.as_deref() {
        None | Some("none") => None,
        Some(text) => {
            let mut s = DataSpec::parse(text).map_err(usage("b-data"))?;
            if let Some(v) = seed {
                s.seed = v;
            }
            r.manifest.set("b_data", s.render());
            Some(s)
        }
    };
    let every = r.value("snapshot_every", a.snapshot_every, 0)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let (u0, file_b) = initial_data(&spec, &grid)?;
    let b0 = match (b_spec, file_b) {
        (Some(s), _) => make_divfree(&grid, &s).map_err(usage("b-data"))?,
        (None, Some(b)) => b,
        (None, None) => VectorField::zeros(grid),
    };
    let traj = Engine::new(&grid, &cfg)
        .and_then(|e| e.solve(&u0, &b0))
        .map_err(at("solver"))?;
    let mut table = Table::new(&["t", "energy", "residual", "div_u", "div_B"]);
    for (i, res) in traj.residual_history().into_iter().enumerate() {
        table.push_f64(&[
            traj.states[i].t,
            traj.energy[i],
            res,
            traj.div_u[i],
            traj.div_b[i],
        ]);
    }
    report.table("trajectory.csv", table);
    if every > 0 {
        for (i, s) in traj.states.iter().enumerate().step_by(every) {
            let comps: Vec<&[f64]> =
                s.u.components()
                    .iter()
                    .chain(s.b.components())
                    .map(|c| c.values())
                    .collect();
            let bytes = snapshot::encode(&grid, "uB", &comps).map_err(at("snapshot"))?;
            report.binary(&format!("snapshot_{i:05}.bin"), bytes);
        }
    }
    attach_warnings(&mut report, &traj.warnings);
    Ok(Job { report, out, force })
}

fn spread(a: &SpreadArgs) -> CliResult<Job> {
    let mut r = Resolver::new("spread", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "spread")?;
    let grid = r.grid(&a.grid, (2, 512, 64.0))?;
    let cfg = experiment_config(&mut r, grid, &a.solver, &a.fit)?;
    let seed = r.seed(a.seed)?;
    let spec = r.data("data", a.data.clone(), "dipole:amp=1", seed)?;
    let slow_b = r.optional("slow_b", a.slow_b)?;
    let b_amp = r.value("b_amp", a.b_amp, 0.5)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let rep = match slow_b {
        Some(eta1) => slow_field_experiment(eta1, b_amp, &cfg),
        None => {
            let (u0, _) = initial_data(&spec, &grid)?;
            run_experiment("spread", &u0, &VectorField::zeros(grid), &cfg)
        }
    }
    .map_err(at("experiments"))?;
    finish_experiment(&mut report, "spread.csv", &rep);
    Ok(Job { report, out, force })
}

fn finish_experiment(report: &mut Report, name: &str, rep: &ExperimentReport) {
    report.table(name, rep.to_table());
    attach_warnings(report, &rep.warnings);
}

fn symmetry(a: &SymmetryArgs) -> CliResult<Job> {
    let mut r = Resolver::new("symmetry", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "symmetry")?;
    let grid = r.grid(&a.grid, (2, 512, 64.0))?;
    let cfg = experiment_config(&mut r, grid, &a.solver, &a.fit)?;
    let order = r.value("order", a.order, 3)?;
    let amp = r.value("amp", a.amp, 1.0)?;
    let perturbation = r.value("perturbation", a.perturbation, 0.0)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let s = symmetry_decay_experiment(order, amp, perturbation, &cfg).map_err(at("experiments"))?;
    let mut table = Table::new(&["t", "exponent", "std_err", "bins", "super_polynomial"]);
    for (t, e) in &s.exponents {
        table.push(vec![
            t.to_string(),
            e.eta.to_string(),
            e.half_width.to_string(),
            e.used.to_string(),
            u8::from(e.super_polynomial).to_string(),
        ]);
    }
    finish_experiment(&mut report, "symmetry.csv", &s.report);
    report.table("symmetry_exponents.csv", table);
    Ok(Job { report, out, force })
}

fn moments(a: &MomentsArgs) -> CliResult<Job> {
    let mut r = Resolver::new("moments", a.common.config.as_deref())?;
    let (out, force) = r.common(&a.common, "moments")?;
    let grid = r.grid(&a.grid, (2, 512, 64.0))?;
    let cfg = experiment_config(&mut r, grid, &a.solver, &a.fit)?;
    let seed = r.seed(a.seed)?;
    let spec = r.data("data", a.data.clone(), "cyclic:n=3,amp=1", seed)?;
    let coupled = r.switch("coupled", a.coupled)?;
    let mut report = Report::new(r.finish()?);
    precheck(&out, force)?;
    let (u0, file_b) = initial_data(&spec, &grid)?;
    let b0 = match (coupled, file_b) {
        (true, _) => u0.clone(),
        (false, Some(b)) => b,
        (false, None) => VectorField::zeros(grid),
    };
    let rep = run_experiment("moments", &u0, &b0, &cfg).map_err(at("experiments"))?;
    let mut table = Table::new(&[
        "t", "m11", "m12", "m13", "m22", "m23", "m33", "norm", "defect",
    ]);
    for &t in &cfg.times {
        let mm = moment_matrix(rep.trajectory.at(t));
        let m = mm.m;
        table.push_f64(&[
            t, m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2], mm.norm, mm.defect,
        ]);
    }
    finish_experiment(&mut report, "moments.csv", &rep);
    report.table("moment_matrix.csv", table);
    Ok(Job { report, out, force })
}
