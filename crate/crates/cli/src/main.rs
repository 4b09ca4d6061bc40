#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{CommandFactory, Parser, Subcommand};

use foldyn::acceptance;
use foldyn::analysis::{
    bifurcation_scan, classify_regime, detect_cycle, find_period_p_points, fixed_points, lyapunov, three_cycle_seed,
    two_cycle, AnalysisError, BifurcationConfig, CycleDetection, R0Policy, Stability, DEFAULT_INTERVAL,
};
use foldyn::csv::{write_bifurcation, write_orbit, write_scalar_orbit};
use foldyn::dynamics::{iterate_planar, iterate_second_order, Termination};
use foldyn::folding::{check_proposition, fold, initial_values, reduce_first_order, ReduceError};
use foldyn::parser::{parse_spec_bytes, SystemSpec};
use foldyn::presets::{preset_text, PRESETS};
use foldyn::scalar::{approx_eq, format_sig17, Scalar};
use foldyn::system::{degeneracy, determinants, validate_system, PlanarPoint};

const DEFAULT_STEPS: u64 = 1000;
const DEFAULT_TRANSIENT: u64 = 500;
const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_SEED: u64 = 0;
const DEFAULT_MAX_PERIOD: usize = 64;
const SCAN_GRID: usize = 20_000;
const SCAN_TOL: f64 = 1e-13;
const THREADS_VAR: &str = "FOLDYN_THREADS";

#[derive(Parser)]
#[command(name = "foldyn", version, about = "Fold planar semilinear rational systems and analyse the reduced map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a system, print its determinants and folded equation, and reduce it when degenerate
    Fold {
        /// Spec file, or `builtin:NAME` for an embedded example
        spec: String,
    },
    /// Iterate the planar system from the spec's initial point
    Simulate {
        spec: String,
        #[arg(long)]
        steps: Option<u64>,
        /// Orbit CSV path; the folded orbit goes next to it as `*.folded.csv`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regime, fixed points, cycles and Lyapunov exponent of the reduced map
    Analyze {
        spec: String,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        transient: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_PERIOD)]
        max_period: usize,
        /// Interval searched for cycle points, as `lo:hi`
        #[arg(long, value_parser = parse_interval)]
        interval: Option<(f64, f64)>,
        /// Largest period scanned for cycle points (0 disables the scan)
        #[arg(long, default_value_t = 8)]
        scan_periods: usize,
        /// Write the reduced orbit from the initial point as CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the attractor of r' = r + q + 1/r over a range of q
    Bifurcate {
        /// q range as `lo:hi`
        #[arg(long, value_parser = parse_interval, allow_hyphen_values = true, default_value = "-1.95:-1.42")]
        interval: (f64, f64),
        #[arg(long, default_value_t = 1000)]
        q_steps: usize,
        #[arg(long, default_value_t = DEFAULT_TRANSIENT)]
        transient: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Random starting points per q, drawn from this seed
        #[arg(long, default_value_t = DEFAULT_SEED, conflicts_with = "r0")]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        starts: usize,
        /// Use one fixed starting point instead of random ones
        #[arg(long)]
        r0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks on the built-in examples
    VerifyPaper {
        /// Run a single criterion, e.g. `A5`
        #[arg(long)]
        only: Option<String>,
    },
    /// List the built-in example systems
    Presets,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound `{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound `{hi}`: {e}"))?;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err("bounds must be finite".into());
    }
    Ok((lo, hi))
}

/// Failure classes, each with its own exit status.
enum Failure {
    Validation(String),
    Parse(String),
    Terminated(String),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Parse(_) => 2,
            Failure::Terminated(_) => 3,
            Failure::Internal(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        let _ = Cli::command().print_help();
        println!();
        return ExitCode::SUCCESS;
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fold { spec } => cmd_fold(&spec),
        Command::Simulate { spec, steps, out } => cmd_simulate(&spec, steps, out.as_deref()),
        Command::Analyze { spec, steps, transient, tol, max_period, interval, scan_periods, out } => {
            cmd_analyze(&spec, AnalyzeOpts { steps, transient, tol, max_period, interval, scan_periods, out })
        }
        Command::Bifurcate { interval, q_steps, transient, samples, seed, starts, r0, out } => {
            let r0 = match r0 {
                Some(r) => R0Policy::Fixed(r),
                None => R0Policy::Random { seed, count: starts },
            };
            cmd_bifurcate(interval, q_steps, transient, samples, r0, out.as_deref())
        }
        Command::VerifyPaper { only } => cmd_verify(only.as_deref()),
        Command::Presets => {
            for (name, _) in PRESETS {
                println!("builtin:{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) | Failure::Parse(m) | Failure::Terminated(m) => eprintln!("error: {m}"),
                Failure::Internal(e) => eprintln!("internal error: {e:#}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn load_spec(arg: &str) -> Result<SystemSpec, Failure> {
    let bytes = match arg.strip_prefix("builtin:") {
        Some(name) => preset_text(name)
            .ok_or_else(|| Failure::Parse(format!("no built-in example named `{name}`")))?
            .as_bytes()
            .to_vec(),
        None => std::fs::read(arg).map_err(|e| Failure::Parse(format!("cannot read {arg}: {e}")))?,
    };
    parse_spec_bytes(&bytes).map_err(|e| Failure::Parse(format!("{arg}: {e}")))
}

fn require_valid(spec: &SystemSpec) -> CmdResult {
    let violations = validate_system(&spec.system);
    if violations.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Err(Failure::Validation(list.join("; ")))
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_fold(path: &str) -> CmdResult {
    let spec = load_spec(path)?;
    require_valid(&spec)?;
    let sys = &spec.system;
    let mut out = String::new();
    writeln!(out, "system: valid").unwrap();
    let d = determinants(sys).context("determinants")?;
    writeln!(out, "D'ab = {}\nD''ab = {}\nD'cb = {}\nD''cb = {}", d.dab_p, d.dab_pp, d.dcb_p, d.dcb_pp).unwrap();
    let eq = fold(sys).context("folding")?;
    writeln!(out, "{eq}").unwrap();
    let check = degeneracy(sys, foldyn::scalar::DEFAULT_REL_TOL).context("degeneracy check")?;
    let how = if check.tolerance_based { "within tolerance" } else { "exact" };
    match check_proposition(sys, foldyn::scalar::DEFAULT_REL_TOL) {
        Ok(report) => {
            let map = reduce_first_order(sys, foldyn::scalar::DEFAULT_REL_TOL).context("reduction")?;
            writeln!(out, "degenerate: yes ({how})").unwrap();
            writeln!(out, "a = {}\nq = {}\ns = {}", map.a, report.q, report.s).unwrap();
            writeln!(
                out,
                "hypotheses: a = 1 {}, b'' = b D'cb {}, q < 0 {}",
                yes_no(report.a_is_one),
                yes_no(report.bpp_equals_b_dcb_p),
                yes_no(report.q_negative)
            )
            .unwrap();
            writeln!(out, "regime: {}", report.regime).unwrap();
            writeln!(out, "parts: {}", report.parts_label()).unwrap();
        }
        Err(ReduceError::NotDegenerate(nd)) => writeln!(out, "degenerate: no ({how}): {nd}").unwrap(),
        Err(e) => writeln!(out, "degenerate: no reduction ({e})").unwrap(),
    }
    print!("{out}");
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn folded_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "orbit".into());
    out.with_file_name(format!("{stem}.folded.csv"))
}

fn initial_point(spec: &SystemSpec) -> Result<(f64, f64), Failure> {
    let (x0, y0) = spec.initial.ok_or_else(|| Failure::Validation("spec has no [initial] section".into()))?;
    Ok((x0.to_f64(), y0.to_f64()))
}

fn cmd_simulate(path: &str, steps: Option<u64>, out: Option<&Path>) -> CmdResult {
    let spec = load_spec(path)?;
    require_valid(&spec)?;
    let (x0, y0) = initial_point(&spec)?;
    let steps = steps.or(spec.run.and_then(|r| r.steps)).unwrap_or(DEFAULT_STEPS) as usize;
    let orbit = iterate_planar(&spec.system, PlanarPoint::new(x0, y0), steps);
    let eq = fold(&spec.system).context("folding")?;
    let k = eq.coeffs();
    let xs: Vec<f64> = orbit.points.iter().map(|p| p.x).collect();
    let residual = xs.windows(3).map(|w| k.scaled_residual(w[0], w[1], w[2])).fold(0.0, f64::max);
    let (f0, f1) = initial_values(&spec.system, x0, y0);
    let folded = iterate_second_order(&eq, f0, f1, steps.saturating_sub(1));

    println!("steps = {}", orbit.points.len() - 1);
    println!("termination = {}", orbit.termination);
    println!("max folding residual = {residual:e}");
    if let Some(out) = out {
        let mut w = create(out)?;
        write_orbit(&mut w, &orbit)?;
        w.flush()?;
        let fpath = folded_path(out);
        let mut w = create(&fpath)?;
        write_scalar_orbit(&mut w, &folded.values)?;
        w.flush()?;
        println!("orbit written to {}", out.display());
        println!("folded orbit written to {}", fpath.display());
    }
    match orbit.termination {
        Termination::Completed => Ok(()),
        t => Err(Failure::Terminated(format!("orbit stopped early: {t}"))),
    }
}

struct AnalyzeOpts {
    steps: Option<u64>,
    transient: Option<u64>,
    tol: Option<f64>,
    max_period: usize,
    interval: Option<(f64, f64)>,
    scan_periods: usize,
    out: Option<PathBuf>,
}

fn cmd_analyze(path: &str, opts: AnalyzeOpts) -> CmdResult {
    let spec = load_spec(path)?;
    require_valid(&spec)?;
    let run = spec.run.unwrap_or_default();
    let steps = opts.steps.or(run.steps).unwrap_or(DEFAULT_STEPS) as usize;
    let transient = opts.transient.or(run.transient).unwrap_or(DEFAULT_TRANSIENT) as usize;
    let tol = opts.tol.or(run.tol).unwrap_or(DEFAULT_TOL);
    let (lo, hi) = opts.interval.unwrap_or(DEFAULT_INTERVAL);
    if !(tol > 0.0) || !(0.0 < lo && lo < hi) {
        return Err(Failure::Validation(format!("need tol > 0 and 0 < lo < hi (got tol={tol}, interval={lo}:{hi})")));
    }
    let rel_tol = foldyn::scalar::DEFAULT_REL_TOL;
    let map = match reduce_first_order(&spec.system, rel_tol) {
        Ok(m) => m,
        Err(e) => return Err(Failure::Validation(e.to_string())),
    };
    let k = map.coeffs();
    println!("map: r' = a r + q + s/r with a = {}, q = {}, s = {}", map.a, map.q, map.s);
    let unit = approx_eq(&map.a, &Scalar::ONE, rel_tol) && approx_eq(&map.s, &Scalar::ONE, rel_tol);
    if unit {
        println!("regime: {}", classify_regime(k.q, rel_tol));
    } else {
        println!("regime: not classified (needs a = s = 1)");
    }

    match fixed_points(&map) {
        Ok(fps) => {
            for (r, m) in fps {
                println!(
                    "fixed point: r = {}, multiplier = {}, {}",
                    format_sig17(r),
                    format_sig17(m),
                    Stability::from_multiplier(m)
                );
            }
        }
        Err(e) => println!("fixed point: {e}"),
    }
    if unit {
        if let Ok(c) = two_cycle(&map, rel_tol) {
            println!("closed-form 2-cycle:\n{c}");
        }
        if let Ok(c) = three_cycle_seed(&map, rel_tol) {
            println!("3-cycle:\n{c}");
        }
    }

    let (x0, y0) = initial_point(&spec)?;
    let (_, r0) = initial_values(&spec.system, x0, y0);
    println!("r0 = {}", format_sig17(r0));
    let detection = detect_cycle(&map, r0, transient, opts.max_period, tol).map_err(analysis_failure)?;
    match detection {
        CycleDetection::Periodic(c) => println!("orbit: periodic\n{c}"),
        CycleDetection::Aperiodic => println!("orbit: aperiodic (no period <= {} found)", opts.max_period),
    }
    match lyapunov(&map, r0, transient, steps.max(1)) {
        Ok(l) => println!("lyapunov = {}", format_sig17(l)),
        Err(AnalysisError::DerivativeSingular { step, .. }) => {
            println!("lyapunov = -inf (orbit hits a critical point at step {step})")
        }
        Err(e) => return Err(analysis_failure(e)),
    }

    if opts.scan_periods > 0 {
        for p in 1..=opts.scan_periods {
            let scan = find_period_p_points(&map, p, lo, hi, SCAN_GRID, SCAN_TOL).map_err(analysis_failure)?;
            println!("period {p}: {} cycle(s) in [{lo}, {hi}]", scan.cycles.len());
        }
    }
    if let Some(out) = opts.out {
        let orbit = foldyn::dynamics::iterate_first_order(&map, r0, steps);
        let mut w = create(&out)?;
        write_scalar_orbit(&mut w, &orbit.values)?;
        w.flush()?;
        println!("reduced orbit written to {}", out.display());
    }
    Ok(())
}

fn analysis_failure(e: AnalysisError) -> Failure {
    match e {
        AnalysisError::OrbitTerminated(t) => Failure::Terminated(format!("orbit stopped early: {t}")),
        AnalysisError::InvalidArgument(m) => Failure::Validation(m),
        e => Failure::Internal(e.into()),
    }
}

fn threads_from_env() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Failure::Validation(format!("{THREADS_VAR} must be a nonnegative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

fn cmd_bifurcate(
    (q_lo, q_hi): (f64, f64),
    q_steps: usize,
    transient: u64,
    samples: usize,
    r0: R0Policy,
    out: Option<&Path>,
) -> CmdResult {
    if let R0Policy::Random { count: 0, .. } = r0 {
        return Err(Failure::Validation("--starts must be at least 1".into()));
    }
    let cfg = BifurcationConfig {
        q_lo,
        q_hi,
        q_steps,
        r0,
        transient: transient as usize,
        samples,
        threads: threads_from_env()?,
    };
    let rows = bifurcation_scan(&cfg).map_err(|e| Failure::Validation(e.to_string()))?;
    let rel_tol = foldyn::scalar::DEFAULT_REL_TOL;
    let mut counts = [0usize; 5];
    let mut terminated = 0;
    for row in &rows {
        if row.termination.is_some() {
            terminated += 1;
        }
        let r = classify_regime(row.q, rel_tol);
        let flags = [r.bounded_positive, r.stable_two_cycle, r.period_three, r.all_periods, r.li_yorke_chaos];
        for (c, f) in counts.iter_mut().zip(flags) {
            *c += f as usize;
        }
    }
    println!("q cells = {}", rows.len());
    let names = ["BoundedPositive", "StableTwoCycle", "PeriodThree", "AllPeriods", "LiYorkeChaos"];
    for (name, c) in names.iter().zip(counts) {
        println!("{name} = {c}");
    }
    println!("terminated = {terminated}");
    if let Some(out) = out {
        let mut w = create(out)?;
        write_bifurcation(&mut w, &rows)?;
        w.flush()?;
        println!("bifurcation data written to {}", out.display());
    }
    Ok(())
}

fn cmd_verify(only: Option<&str>) -> CmdResult {
    let outcomes =
        match only {
            Some(id) => vec![acceptance::run_criterion(id)
                .ok_or_else(|| Failure::Validation(format!("unknown criterion `{id}`")))?],
            None => acceptance::run_all(),
        };
    for o in &outcomes {
        println!("{o}");
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
        Ok(())
    } else {
        Err(Failure::Validation(format!("failed: {}", failed.join(", "))))
    }
}
