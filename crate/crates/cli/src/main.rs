//! `nsalpha` command-line driver.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 numerical
//! failure (non-convergence, blow-up, failed basis validation).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use nsalpha::diagnostics::{read_error_csv, sup_err_h1_sq, sup_err_l2_sq, write_energy_csv, write_error_csv};
use nsalpha::eigenbasis::{read_basis, write_basis};
use nsalpha::experiments::*;
use nsalpha::manifest::{Config, RunManifest};
use nsalpha::solver::{InitSpec, Stepper};
use nsalpha::{EigenBasis, Error};

#[derive(Parser)]
#[command(name = "nsalpha", version, about = "Spectral-Galerkin Navier-Stokes / NS-alpha solver and experiment harness")]
struct Cli {
    /// Worker threads for concurrent runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, validate and save an eigenbasis.
    Eigen(EigenArgs),
    /// Integrate one configuration.
    Run(RunArgs),
    /// Convergence sweep in alpha or n.
    Sweep(SweepArgs),
    /// Long-time error in windows against a reference run.
    Global(GlobalArgs),
    /// Decay of a perturbation between two solutions.
    Perturb(PerturbArgs),
    /// Recompute the summary of a finished experiment from its files.
    Report(ReportArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Domain {
    Torus,
    Square,
}

#[derive(Args)]
struct EigenArgs {
    #[arg(long, value_enum)]
    domain: Domain,
    #[arg(long)]
    modes: usize,
    /// Grid points per side (torus) or mesh intervals (square).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
#[group(id = "basis_source", required = true, multiple = false)]
struct BasisArgs {
    /// Basis file written by `eigen`.
    #[arg(long, group = "basis_source")]
    basis: Option<PathBuf>,
    /// Build a torus basis with this many modes in memory instead.
    #[arg(long, group = "basis_source")]
    torus: Option<usize>,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration entry (`key=value`); repeatable, wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Continue from a checkpoint file.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SweepKind {
    Alpha,
    N,
    Dirichlet,
}

#[derive(Copy, Clone, ValueEnum)]
enum PreconditionArg {
    Literal,
    Measured,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum)]
    kind: SweepKind,
    /// Comma-separated alpha values (decreasing) ...
    #[arg(long, value_delimiter = ',', conflicts_with = "n_list", required_unless_present = "n_list")]
    list: Vec<f64>,
    /// ... or truncation levels (increasing).
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long)]
    n_ref: Option<usize>,
    #[arg(long)]
    dt_ref: Option<f64>,
    #[arg(long, value_enum)]
    precondition: Option<PreconditionArg>,
}

#[derive(Args)]
struct GlobalArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    n_ref: Option<usize>,
    #[arg(long)]
    dt_ref: Option<f64>,
    #[arg(long)]
    windows: Option<usize>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    basis: BasisArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    burn: Option<f64>,
    /// Norm scale of the random perturbation.
    #[arg(long)]
    zeta_amplitude: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory of a `sweep`, `global` or `perturb` command.
    #[arg(long)]
    dir: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Eigen(a) => cmd_eigen(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Global(a) => cmd_global(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(inner) if inner.is_numerical() => 3,
        _ => 2,
    }
}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn cmd_eigen(a: EigenArgs) -> Result<u8> {
    if a.modes == 0 {
        return Err(config_err("--modes must be positive"));
    }
    let basis = match a.domain {
        Domain::Torus => EigenBasis::torus(a.modes, a.grid.unwrap_or_else(|| EigenBasis::min_torus_grid(a.modes)))?,
        Domain::Square => EigenBasis::square(a.modes, a.grid.unwrap_or(64))?,
    };
    let report = basis.validate();
    println!("{report}");
    write_basis(&basis, BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?))?;
    info!("wrote {} modes to {}", basis.len(), a.out.display());
    Ok(if report.passed() { 0 } else { 3 })
}

fn load_basis(b: &BasisArgs) -> Result<(EigenBasis, Option<PathBuf>)> {
    match (&b.basis, b.torus) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| config_err(format!("cannot open basis {}: {e}", path.display())))?;
            let basis = read_basis(BufReader::new(file))
                .map_err(|e| config_err(format!("cannot read basis {}: {e}", path.display())))?;
            Ok((basis, Some(path.clone())))
        }
        (None, Some(n)) => Ok((EigenBasis::torus_auto(n)?, None)),
        (None, None) => Err(config_err("one of --basis or --torus is required")),
    }
}

fn load_config(c: &ConfigArgs) -> Result<Config> {
    let mut cfg = match &c.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for s in &c.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set expects KEY=VALUE, got '{s}'")))?;
        cfg.set(k.trim(), v.trim());
    }
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, summary: &Summary) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

fn finish(mut manifest: RunManifest, dir: &Path) -> Result<()> {
    manifest.finish();
    manifest.save(&dir.join("manifest.txt"))?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<u8> {
    let mut cfg = load_config(&a.config)?;
    if let Some(p) = &a.resume {
        cfg.set("init", "checkpoint");
        cfg.set("init_checkpoint", p.display());
    }
    let (basis, basis_path) = load_basis(&a.basis)?;
    let solver = cfg.solver_config()?;
    prepare_out(&a.config.out)?;
    let manifest = RunManifest::new(&cfg, basis_path, a.config.out.clone())?;
    let stepper = Stepper::new(&basis, solver)?;
    let traj = stepper.integrate()?;
    write_energy_csv(BufWriter::new(File::create(a.config.out.join("energy.csv"))?), &traj.energy)?;
    stepper.checkpoint(&traj.final_state).save(&a.config.out.join("final.nsa1"))?;
    if traj.cfl_warnings > 0 {
        log::warn!("{} steps exceeded the CFL limit", traj.cfl_warnings);
    }
    let last = traj.energy.last().expect("at least the initial record");
    println!("t = {}  E0 = {:.12e}  E_alpha = {:.12e}  steps = {}", last.t, last.e0, last.e_alpha, traj.steps);
    finish(manifest, &a.config.out)?;
    Ok(0)
}

fn set_opt<T: ToString>(cfg: &mut Config, key: &str, v: Option<T>) {
    if let Some(v) = v {
        cfg.set(key, v);
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn cmd_sweep(a: SweepArgs) -> Result<u8> {
    let mut cfg = load_config(&a.config)?;
    let kind = match a.kind {
        SweepKind::Alpha => "alpha",
        SweepKind::N => "n",
        SweepKind::Dirichlet => "dirichlet",
    };
    cfg.set("experiment", kind);
    if !a.list.is_empty() {
        cfg.set("alpha_list", join(&a.list));
    }
    if !a.n_list.is_empty() {
        cfg.set("n_list", join(&a.n_list));
    }
    set_opt(&mut cfg, "n_ref", a.n_ref);
    set_opt(&mut cfg, "dt_ref", a.dt_ref);
    set_opt(
        &mut cfg,
        "precondition",
        a.precondition.map(|p| match p {
            PreconditionArg::Literal => "literal",
            PreconditionArg::Measured => "measured",
        }),
    );
    let param = match (cfg.list::<f64>("alpha_list")?, cfg.list::<usize>("n_list")?) {
        (Some(al), None) => SweepParam::Alpha(al),
        (None, Some(nl)) => SweepParam::N(nl),
        _ => return Err(config_err("give exactly one of --list (alpha) or --n-list")),
    };
    match (a.kind, &param) {
        (SweepKind::Alpha, SweepParam::N(_)) => return Err(config_err("--kind alpha needs --list")),
        (SweepKind::N, SweepParam::Alpha(_)) => return Err(config_err("--kind n needs --n-list")),
        _ => {}
    }
    let (basis, basis_path) = load_basis(&a.basis)?;
    let base = cfg.solver_config()?;
    let spec = SweepSpec {
        n_ref: cfg.get_or("n_ref", 4 * base.n.max(param_max_n(&param)))?,
        dt_ref: cfg.get_or("dt_ref", base.dt / 4.0)?,
        precondition: match cfg.raw("precondition").unwrap_or("literal") {
            "literal" => Precondition::Literal,
            "measured" => Precondition::Measured,
            other => return Err(config_err(format!("unknown precondition '{other}'"))),
        },
        base,
        param,
    };
    let out = &a.config.out;
    prepare_out(out)?;
    let manifest = RunManifest::new(&cfg, basis_path, out.clone())?;
    let result = run_sweep(&basis, &spec)?;

    let mut members = BufWriter::new(File::create(out.join("members.csv"))?);
    writeln!(members, "param,lambda_next,sup_err_L2_sq,sup_err_H1_sq,file")?;
    for (i, s) in result.series.iter().enumerate() {
        let file = format!("errors_{i:02}.csv");
        write_error_csv(BufWriter::new(File::create(out.join(&file))?), &s.records)?;
        writeln!(members, "{:.16e},{:.16e},{:.16e},{:.16e},{file}", s.param, s.lambda_next, s.sup_l2_sq, s.sup_h1_sq)?;
    }
    members.flush()?;
    write_points(&out.join("points.csv"), &result.fit)?;
    let summary = match a.kind {
        SweepKind::Dirichlet => Summary::from_fit(kind, &result.dirichlet),
        _ => Summary::from_fit(kind, &result.fit),
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if let Some(slope) = result.slope_vs_alpha() {
        info!("slope of sup err^2 against alpha: {slope:.4}");
    }
    finish(manifest, out)?;
    Ok(0)
}

fn param_max_n(p: &SweepParam) -> usize {
    match p {
        SweepParam::Alpha(_) => 0,
        SweepParam::N(ns) => ns.iter().copied().max().unwrap_or(0),
    }
}

/// Log-log points of a fit for plotting.
fn write_points(path: &Path, fit: &RateFit) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "ln_x,ln_y,ln_y_fit")?;
    for (x, y) in &fit.points {
        writeln!(w, "{x:.16e},{y:.16e},{:.16e}", fit.intercept + fit.slope * x)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_global(a: GlobalArgs) -> Result<u8> {
    let mut cfg = load_config(&a.config)?;
    cfg.set("experiment", "global");
    set_opt(&mut cfg, "n_ref", a.n_ref);
    set_opt(&mut cfg, "dt_ref", a.dt_ref);
    set_opt(&mut cfg, "windows", a.windows);
    let (basis, basis_path) = load_basis(&a.basis)?;
    let base = cfg.solver_config()?;
    let spec = GlobalTimeSpec {
        n_ref: cfg.get_or("n_ref", 4 * base.n)?,
        dt_ref: cfg.get_or("dt_ref", base.dt / 4.0)?,
        windows: cfg.get_or("windows", 10)?,
        base,
    };
    let out = &a.config.out;
    prepare_out(out)?;
    let manifest = RunManifest::new(&cfg, basis_path, out.clone())?;
    let report = run_global_time(&basis, &spec)?;
    write_error_csv(BufWriter::new(File::create(out.join("errors.csv"))?), &report.series)?;
    let summary = Summary::from_windows(&report);
    write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    info!(
        "last window {:.3e}, first-quarter max {:.3e}",
        report.last_window_sup, report.first_quarter_max
    );
    finish(manifest, out)?;
    Ok(0)
}

fn cmd_perturb(a: PerturbArgs) -> Result<u8> {
    let mut cfg = load_config(&a.config)?;
    cfg.set("experiment", "perturbation");
    set_opt(&mut cfg, "t0", a.t0);
    set_opt(&mut cfg, "burn", a.burn);
    set_opt(&mut cfg, "zeta_amplitude", a.zeta_amplitude);
    let (basis, basis_path) = load_basis(&a.basis)?;
    let base = cfg.solver_config()?;
    let seed: u64 = cfg.get_or("seed", 0)?;
    let spec = PerturbationSpec {
        zeta0: InitSpec::SpectralDecay {
            s: cfg.get_or("zeta_s", 1.0)?,
            seed: seed.wrapping_add(1),
            amplitude: cfg.get_or("zeta_amplitude", 1e-3)?,
        },
        t0: cfg.get_or("t0", 0.0)?,
        burn: cfg.get_or("burn", 0.0)?,
        base,
    };
    let out = &a.config.out;
    prepare_out(out)?;
    let manifest = RunManifest::new(&cfg, basis_path, out.clone())?;
    let fit = run_perturbation(&basis, &spec)?;
    write_zeta_csv(&out.join("zeta.csv"), &fit.times, &fit.zeta_sq)?;
    let summary = Summary::from_perturbation(&fit);
    write_json(&out.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if !fit.bound_holds() {
        log::warn!("fitted bound does not hold on the fit window");
    }
    finish(manifest, out)?;
    Ok(0)
}

fn write_zeta_csv(path: &Path, times: &[f64], zeta_sq: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,zeta_sq")?;
    for (t, z) in times.iter().zip(zeta_sq) {
        writeln!(w, "{t:.16e},{z:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_zeta_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    if lines.next() != Some("t,zeta_sq") {
        bail!(Error::Format(format!("{}: unexpected header", path.display())));
    }
    let (mut ts, mut zs) = (Vec::new(), Vec::new());
    for line in lines.filter(|l| !l.is_empty()) {
        let (t, z) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("{}: bad row '{line}'", path.display())))?;
        ts.push(t.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{t}'")))?);
        zs.push(z.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{z}'")))?);
    }
    Ok((ts, zs))
}

/// Rebuild `summary.json` from the manifest and the stored CSV files only.
fn cmd_report(a: ReportArgs) -> Result<u8> {
    let manifest = RunManifest::load(&a.dir.join("manifest.txt"))
        .map_err(|e| config_err(format!("cannot load manifest in {}: {e}", a.dir.display())))?;
    let cfg = &manifest.config;
    let summary = match cfg.raw("experiment") {
        Some(kind @ ("alpha" | "n" | "dirichlet")) => {
            let text = fs::read_to_string(a.dir.join("members.csv"))?;
            let (mut l2, mut h1, mut lambdas) = (Vec::new(), Vec::new(), Vec::new());
            for line in text.lines().skip(1).filter(|l| !l.is_empty()) {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() != 5 {
                    bail!(Error::Format(format!("members.csv: bad row '{line}'")));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{s}'")));
                let (param, lambda) = (num(cols[0])?, num(cols[1])?);
                let records = read_error_csv(BufReader::new(File::open(a.dir.join(cols[4]))?))?;
                let (x2, x1) = if cfg.raw("alpha_list").is_some() {
                    (param * param, param)
                } else {
                    (lambda, lambda)
                };
                l2.push((x2, sup_err_l2_sq(&records)));
                h1.push((x1, sup_err_h1_sq(&records)));
                lambdas.push(lambda);
            }
            let by_n = cfg.raw("alpha_list").is_none();
            let bound = |p: f64| lambdas.iter().map(|l| l.powf(p)).collect::<Vec<_>>();
            let fit = if kind == "dirichlet" {
                let f = fit_rate(&h1)?;
                if by_n { f.with_bound(&bound(-0.5))? } else { f }
            } else {
                let f = fit_rate(&l2)?;
                if by_n { f.with_bound(&bound(-1.5))? } else { f }
            };
            Summary::from_fit(kind, &fit)
        }
        Some("global") => {
            let records = read_error_csv(BufReader::new(File::open(a.dir.join("errors.csv"))?))?;
            let t_end: f64 = cfg.get_or("t_end", cfg.solver_config()?.t_end)?;
            let windows = cfg.get_or("windows", 10)?;
            Summary::from_windows(&windowed_report(&records, t_end, windows, f64::NAN)?)
        }
        Some("perturbation") => {
            let (times, zeta_sq) = read_zeta_csv(&a.dir.join("zeta.csv"))?;
            let first = zeta_sq.first().copied().ok_or_else(|| Error::Format("zeta.csv is empty".into()))?;
            let (t0, zeta0_norm) = (cfg.get_or("t0", 0.0)?, first.sqrt());
            Summary::from_perturbation(&fit_perturbation(times, zeta_sq, t0, zeta0_norm, cfg.get_or("burn", 0.0)?)?)
        }
        other => return Err(config_err(format!("no experiment recorded in the manifest ({other:?})"))),
    };
    write_json(&a.dir.join("summary.json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}
