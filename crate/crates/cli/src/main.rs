//! `nrch`: wave-train speeds, profiles, stability counts, threshold scans and
//! simulations from the command line.
//!
//! Exit status: 0 on success, 2 for usage errors and invalid parameters, 1
//! for numerical failures.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use manifest::RunManifest;
use nrch_core::pde::{self, SimConfig};
use nrch_core::stability::threshold::write_scan_csv;
use nrch_core::stability::{threshold_scan, ContourOptions, Dispersion, Mode, Regime, ThresholdOptions};
use nrch_core::wavetrain::{self, DimensionalParams, ModelParams};
use nrch_core::{fmt_f64, Error};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "NRCH_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "nrch",
    version,
    about = "Sharp-interface wave-trains of the non-reciprocal Cahn-Hilliard model"
)]
struct Cli {
    /// Worker threads for scans and batch runs.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output directory (defaults to $NRCH_OUT_DIR, then the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Wave-train speed from the speed equation.
    Speed(SpeedArgs),
    /// Sample a wave-train profile and its diffuse composite to CSV.
    Profile(ProfileArgs),
    /// Count unstable eigenvalues of one mode with the argument principle.
    Stability(StabilityArgs),
    /// Scan Hopf thresholds over tau, wavenumber and circulant index.
    Threshold(ThresholdArgs),
    /// Run the pseudo-spectral simulation.
    Simulate(SimulateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
struct SpeedArgs {
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    n_fronts: usize,
    #[command(flatten)]
    dimensional: DimensionalArgs,
}

#[derive(Args, Debug, Clone)]
struct DimensionalArgs {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Domain length L.
    #[arg(long)]
    length: Option<f64>,
    /// Domain height H (defaults to L).
    #[arg(long)]
    height: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d12: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d21: Option<f64>,
    #[arg(long)]
    d22: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct ProfileArgs {
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    n_fronts: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value = "profile.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct StabilityArgs {
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    n_fronts: usize,
    /// Transverse wavenumber index; omega = 2 pi q / rho.
    #[arg(long, default_value_t = 1)]
    q: u32,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Use this omega directly instead of q and rho.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long)]
    traveling: bool,
    /// Fixed contour truncation; chosen from the asymptote when omitted.
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long, default_value = "trace.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct ThresholdArgs {
    /// Comma list or range `a:b[:step]`.
    #[arg(long, default_value = "1")]
    tau_grid: String,
    /// Wavenumber indices q (omega = 2 pi q / rho); comma list or range.
    #[arg(long)]
    q_grid: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Wavenumbers omega directly; comma list or range.
    #[arg(long)]
    omega_grid: Option<String>,
    #[arg(long, default_value = "0")]
    k_set: String,
    #[arg(long, default_value_t = 1)]
    n_fronts: usize,
    #[arg(long)]
    traveling: bool,
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    theta_min: f64,
    #[arg(long, default_value = "thresholds.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct SimulateArgs {
    /// Key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the file and flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    n_fronts: Option<usize>,
    /// Records with t below this fraction of t_end are ignored for the speed.
    #[arg(long, default_value_t = 0.5)]
    transient: f64,
}

#[derive(Args, Debug, Clone)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<f64> = spec
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad range {spec:?}"))?;
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (*a, *b, 1.0),
            [a, b, s] => (*a, *b, *s),
            _ => return Err(anyhow!(Error::InvalidParameter(format!("bad range {spec:?}")))),
        };
        if step.is_nan() || step <= 0.0 || b < a {
            return Err(anyhow!(Error::InvalidParameter(format!("bad range {spec:?}"))));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| a + i as f64 * step).collect())
    } else {
        spec.split(',')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad number {p:?}")))
            .collect()
    }
}

struct RunCtx {
    out_dir: PathBuf,
    jobs: usize,
    argv: Vec<String>,
}

impl RunCtx {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn cmd_speed(a: &SpeedArgs, ctx: &RunCtx, m: &mut RunManifest) -> anyhow::Result<()> {
    let d = &a.dimensional;
    let dims = [d.kappa, d.beta, d.length, d.d12, d.d21, d.d22];
    let dp = if dims.iter().all(Option::is_some) {
        let length = d.length.unwrap();
        Some(DimensionalParams {
            kappa: d.kappa.unwrap(),
            beta: d.beta.unwrap(),
            length,
            height: d.height.unwrap_or(length),
            d12: d.d12.unwrap(),
            d21: d.d21.unwrap(),
            d22: d.d22.unwrap(),
        })
    } else if dims.iter().any(Option::is_some) {
        return Err(anyhow!(Error::InvalidParameter(
            "dimensional mode needs all of --kappa --beta --length --d12 --d21 --d22".into()
        )));
    } else {
        None
    };
    let theta = match (a.theta, &dp) {
        (Some(t), _) => t,
        (None, Some(dp)) => dp.theta(),
        (None, None) => return Err(anyhow!(Error::InvalidParameter("--theta is required".into()))),
    };
    let tau = match (&dp, a.theta) {
        (Some(dp), None) => dp.to_model()?.tau,
        _ => a.tau,
    };
    let xi = wavetrain::solve_xi(theta);
    let c0 = wavetrain::speed(theta, tau, a.n_fronts)?;
    let mut out = String::new();
    out += &format!(
        "theta={}\ntau={}\nN={}\nxi={}\nc0={}\n",
        fmt_f64(theta),
        fmt_f64(tau),
        a.n_fronts,
        fmt_f64(xi),
        fmt_f64(c0)
    );
    let mut params = json!({"theta": theta, "tau": tau, "n_fronts": a.n_fronts});
    if let Some(dp) = dp {
        let s = wavetrain::dimensional_speeds(&dp)?;
        out += &format!("c_sharp={}\n", fmt_f64(s.c_sharp));
        match s.c_bm {
            Some(c) => out += &format!("c_bm={}\n", fmt_f64(c)),
            None => out += "c_bm=NaN\nc_bm_real=false\n",
        }
        params["dimensional"] = serde_json::to_value(dp)?;
    }
    print!("{out}");
    let path = ctx.path(Path::new("speed.txt"));
    write_file(&path, out.as_bytes())?;
    m.parameters = params;
    m.add_output(&path)?;
    Ok(())
}

fn cmd_profile(a: &ProfileArgs, ctx: &RunCtx, m: &mut RunManifest) -> anyhow::Result<()> {
    if a.samples == 0 {
        return Err(anyhow!(Error::InvalidParameter("--samples must be positive".into())));
    }
    let params = ModelParams::new(a.epsilon, a.tau, a.theta, 1.0)?;
    let profile = wavetrain::build_profile(&params, a.n_fronts)?;
    let fields = wavetrain::composite_fields(&profile, &params)?;
    let mut buf = Vec::new();
    wavetrain::write_profile_csv(&mut buf, &fields, &params, a.samples)?;
    let path = ctx.path(&a.out);
    write_file(&path, &buf)?;
    println!("c0={}\nxi={}", fmt_f64(profile.c0), fmt_f64(profile.xi));
    if fields.overlap_warning {
        eprintln!("warning: neighbouring interfaces overlap at this epsilon");
    }
    m.parameters =
        json!({"theta": a.theta, "tau": a.tau, "n_fronts": a.n_fronts, "epsilon": a.epsilon, "samples": a.samples});
    m.add_output(&path)?;
    Ok(())
}

fn cmd_stability(a: &StabilityArgs, ctx: &RunCtx, m: &mut RunManifest) -> anyhow::Result<()> {
    let mode = match a.omega {
        Some(w) => Mode::from_omega(w, a.k, a.n_fronts)?,
        None => Mode::new(a.q, a.rho, a.k, a.n_fronts)?,
    };
    let regime = if a.traveling {
        Regime::Traveling
    } else {
        Regime::Stationary
    };
    let d = Dispersion::new(regime, mode, a.tau, a.theta, a.n_fronts)?;
    let opts = ContourOptions {
        lambda_max: a.lambda_max,
        ..Default::default()
    };
    let trace = d.count_unstable(&opts)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf)?;
    let path = ctx.path(&a.out);
    write_file(&path, &buf)?;
    println!(
        "Z={}\nraw={}\nomega={}\nlambda_cut={}",
        trace.z,
        fmt_f64(trace.raw),
        fmt_f64(mode.omega),
        fmt_f64(trace.tail_cut)
    );
    m.parameters = json!({
        "theta": a.theta, "tau": a.tau, "n_fronts": a.n_fronts, "q": a.q, "rho": a.rho,
        "omega": mode.omega, "k": a.k, "traveling": a.traveling, "lambda_max": a.lambda_max,
    });
    m.result = json!({"Z": trace.z, "raw": trace.raw});
    m.add_output(&path)?;
    Ok(())
}

fn cmd_threshold(a: &ThresholdArgs, ctx: &RunCtx, m: &mut RunManifest) -> anyhow::Result<()> {
    let taus = parse_grid(&a.tau_grid)?;
    let omegas = match (&a.q_grid, &a.omega_grid) {
        (Some(q), None) => parse_grid(q)?
            .into_iter()
            .map(|q| 2.0 * std::f64::consts::PI * q / a.rho)
            .collect::<Vec<_>>(),
        (None, Some(w)) => parse_grid(w)?,
        _ => {
            return Err(anyhow!(Error::InvalidParameter(
                "give exactly one of --q-grid and --omega-grid".into()
            )))
        }
    };
    let ks: Vec<usize> = parse_grid(&a.k_set)?.into_iter().map(|k| k as usize).collect();
    let regime = if a.traveling {
        Regime::Traveling
    } else {
        Regime::Stationary
    };
    let opts = ThresholdOptions {
        theta_min: a.theta_min,
        ..Default::default()
    };
    let started = Instant::now();
    let rows = threshold_scan(&taus, &omegas, &ks, a.n_fronts, regime, &opts)?;
    let mut buf = Vec::new();
    write_scan_csv(&mut buf, &rows)?;
    let path = ctx.path(&a.out);
    write_file(&path, &buf)?;
    let best = rows
        .iter()
        .filter(|r| r.converged)
        .max_by(|x, y| x.theta_star.total_cmp(&y.theta_star));
    if let Some(b) = best {
        println!(
            "max_theta_star={}\nat_omega={}\nat_k={}\nat_tau={}",
            fmt_f64(b.theta_star),
            fmt_f64(b.omega),
            b.k,
            fmt_f64(b.tau)
        );
    } else {
        println!("max_theta_star=NaN");
    }
    let converged = rows.iter().filter(|r| r.converged).count();
    println!("rows={}\nconverged={}", rows.len(), converged);
    let summary = json!({
        "tau_grid": taus, "omega_grid": omegas, "k_set": ks, "n_fronts": a.n_fronts,
        "traveling": a.traveling, "theta_range": [opts.theta_min, opts.theta_max],
        "sweep_points": opts.sweep_points, "residual_tol": opts.residual_tol,
        "tail_tolerance": opts.contour.tail_tolerance, "rows": rows.len(), "converged": converged,
        "wall_time_s": started.elapsed().as_secs_f64(), "jobs": ctx.jobs,
    });
    let summary_path = path.with_extension("json");
    write_file(&summary_path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    m.parameters = summary;
    m.add_output(&path)?;
    m.add_output(&summary_path)?;
    Ok(())
}

fn sim_config(a: &SimulateArgs, m: &mut RunManifest) -> anyhow::Result<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(p) = &a.config {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        cfg.apply_text(&text)?;
        m.add_input(p)?;
    }
    let mut set = |k: &str, v: Option<String>| -> anyhow::Result<()> {
        if let Some(v) = v {
            cfg.set(k, &v).map_err(|e| anyhow!(Error::InvalidParameter(e)))?;
        }
        Ok(())
    };
    set("theta", a.theta.map(|x| x.to_string()))?;
    set("tau", a.tau.map(|x| x.to_string()))?;
    set("epsilon", a.epsilon.map(|x| x.to_string()))?;
    set("rho", a.rho.map(|x| x.to_string()))?;
    set("nx", a.nx.map(|x| x.to_string()))?;
    set("ny", a.ny.map(|x| x.to_string()))?;
    set("dt", a.dt.map(|x| x.to_string()))?;
    set("t_end", a.t_end.map(|x| x.to_string()))?;
    set("n_fronts", a.n_fronts.map(|x| x.to_string()))?;
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!(Error::InvalidParameter(format!("--set expects KEY=VALUE, got {kv:?}"))))?;
        cfg.set(k, v).map_err(|e| anyhow!(Error::InvalidParameter(e)))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(a: &SimulateArgs, ctx: &RunCtx, m: &mut RunManifest) -> anyhow::Result<()> {
    let cfg = sim_config(a, m)?;
    let dir = ctx.out_dir.clone();
    fs::create_dir_all(&dir)?;
    let config_path = dir.join("config.txt");
    write_file(&config_path, cfg.to_text().as_bytes())?;
    let out = pde::run(&cfg, Some(&dir))?;
    let mut buf = Vec::new();
    out.diagnostics.write_csv(&mut buf)?;
    let diag_path = dir.join("diagnostics.csv");
    write_file(&diag_path, &buf)?;
    let first = &out.diagnostics.records[0];
    let last = out.diagnostics.records.last().expect("at least one record");
    println!(
        "t={}\nmass_u_drift={}\nmass_v_drift={}",
        fmt_f64(last.t),
        fmt_f64(last.mass_u - first.mass_u),
        fmt_f64(last.mass_v - first.mass_v)
    );
    let mut result = json!({"t": last.t});
    match pde::measure_speed(&out.diagnostics, a.transient * cfg.t_end) {
        Ok(s) => {
            let xi_num = cfg.params.tau * s.peak / (4.0 * cfg.n_fronts as f64);
            println!(
                "speed={}\nspeed_crossing={}\nxi_num={}",
                fmt_f64(s.peak),
                fmt_f64(s.crossing),
                fmt_f64(xi_num)
            );
            println!("xi_asymptotic={}", fmt_f64(wavetrain::solve_xi(cfg.params.theta)));
            result["speed"] = json!(s.peak);
            result["xi_num"] = json!(xi_num);
        }
        Err(e) => println!("speed=NaN\nspeed_error={e}"),
    }
    m.parameters = serde_json::to_value(&cfg)?;
    m.result = result;
    m.add_output(&config_path)?;
    m.add_output(&diag_path)?;
    for s in &out.snapshots {
        m.add_output(&dir.join(&s.u_file))?;
        m.add_output(&dir.join(&s.v_file))?;
    }
    if !out.snapshots.is_empty() {
        m.add_output(&dir.join("snapshots.json"))?;
    }
    Ok(())
}

fn manifest_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Speed(_) => "speed",
        Command::Profile(_) => "profile",
        Command::Stability(_) => "stability",
        Command::Threshold(_) => "threshold",
        Command::Simulate(_) => "simulate",
        Command::Replay(_) => "replay",
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    if let Command::Replay(r) = &cli.command {
        let recorded = RunManifest::load(&r.manifest)?;
        let mut args = recorded.argv.clone();
        if args.is_empty() {
            return Err(anyhow!(Error::InvalidParameter(
                "manifest has no recorded command".into()
            )));
        }
        args[0] = argv[0].clone();
        if let Some(dir) = &cli.out_dir {
            let mut kept = Vec::with_capacity(args.len());
            let mut it = args.into_iter();
            while let Some(s) = it.next() {
                if s == "--out-dir" {
                    it.next();
                } else if !s.starts_with("--out-dir=") {
                    kept.push(s);
                }
            }
            args = kept;
            args.splice(1..1, ["--out-dir".to_string(), dir.display().to_string()]);
        }
        let inner = Cli::try_parse_from(&args).map_err(|e| anyhow!(Error::InvalidParameter(e.to_string())))?;
        return execute(inner, args);
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = RunCtx {
        out_dir,
        jobs: cli.jobs.max(1),
        argv,
    };
    init_threads(ctx.jobs);
    let name = manifest_name(&cli.command);
    let mut manifest = RunManifest::new(name, ctx.argv.clone(), ctx.jobs);
    let started = Instant::now();
    match &cli.command {
        Command::Speed(a) => cmd_speed(a, &ctx, &mut manifest)?,
        Command::Profile(a) => cmd_profile(a, &ctx, &mut manifest)?,
        Command::Stability(a) => cmd_stability(a, &ctx, &mut manifest)?,
        Command::Threshold(a) => cmd_threshold(a, &ctx, &mut manifest)?,
        Command::Simulate(a) => cmd_simulate(a, &ctx, &mut manifest)?,
        Command::Replay(_) => unreachable!(),
    }
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    let path = ctx.path(Path::new(&format!("{name}.manifest.json")));
    write_file(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(())
}

#[cfg(feature = "parallel")]
fn init_threads(jobs: usize) {
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
}

#[cfg(not(feature = "parallel"))]
fn init_threads(jobs: usize) {
    if jobs > 1 {
        log::warn!("built without the parallel feature; --jobs {jobs} ignored");
    }
}

fn is_usage_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(Error::InvalidParameter(_)) | Some(Error::Config { .. }) | Some(Error::Domain { .. })
        )
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e:#}");
            if is_usage_error(&e) {
                let _ = writeln!(std::io::stderr(), "run `nrch --help` for usage");
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
