use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use randflight::density::{self, diverges_at_boundary, Evaluator};
use randflight::limits::{self, LimitTrace};
use randflight::simulate::{self, OneDimMode, SimConfig};
use randflight::{Error, FlatRecord, FlightParams, Law, StationaryParams};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "randflight", version, about = "Markov random flights: densities, simulation, limit checks")]
struct Cli {
    /// Worker threads (results never depend on it)
    #[arg(long, global = true, env = "RANDFLIGHT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a transition density (--c --lambda --t) or a stationary density (--a --rho)
    Density(DensityArgs),
    /// Write the stationary radial profile for one of the figures fig1..fig5
    Figure(FigureArgs),
    /// Run a Monte Carlo simulation and print a summary
    Simulate(SimulateArgs),
    /// Run a validation suite; exit status 0 only if every check passes
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// Radius to evaluate at (repeatable)
    #[arg(long = "r", allow_negative_numbers = true)]
    radii: Vec<f64>,
    /// Evaluate on the grid (i + 1/2)R/N, i < N, instead of explicit radii
    #[arg(long, conflicts_with = "radii")]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl Figure {
    fn params(self) -> (usize, f64) {
        match self {
            Figure::Fig1 => (1, 7.0),
            Figure::Fig2 => (2, 7.0),
            Figure::Fig3 => (4, 4.0),
            Figure::Fig4 => (6, 4.0),
            Figure::Fig5 => (3, 0.01),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }
}

const FIGURE_RHO: f64 = 5.0;

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(value_enum)]
    name: Figure,
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    paths: u64,
    /// Seed; drawn from entropy and printed when absent
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 65_536)]
    batch_size: usize,
    /// Write every path to this CSV file
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Include terminal positions in the dump
    #[arg(long, requires = "dump")]
    positions: bool,
    /// In R^1, draw each new direction uniformly from {-1, +1} instead of reversing
    #[arg(long)]
    uniform_1d: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Gof,
    Kac,
    Sdc,
    R3,
    All,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Paths per simulation (default 1000000 for gof, 10000000 for r3)
    #[arg(long)]
    paths: Option<u64>,
    /// Also write the results as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes, each with its own exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Numerical(String),
    Io(io::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) | Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } => Failure::Numerical(e.to_string()),
            Error::Underpowered { .. } => Failure::Validation(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    let result = match cli.cmd {
        Command::Density(a) => cmd_density(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Validation(msg) => eprintln!("validation failed: {msg}"),
                Failure::Numerical(msg) => eprintln!("numerical error: {msg}"),
                Failure::Io(e) => eprintln!("i/o error: {e}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn law_from(a: &DensityArgs) -> Result<Law, Failure> {
    match (a.c, a.lambda, a.t, a.a, a.rho) {
        (Some(c), Some(lambda), Some(t), None, None) => {
            Ok(Law::Transition(FlightParams::new(a.m, c, lambda, t)?))
        }
        (None, None, None, Some(intensity), Some(rho)) => {
            Ok(Law::Stationary(StationaryParams::new(a.m, intensity, rho)?))
        }
        _ => Err(Failure::Usage(
            "give either --c --lambda --t (transition) or --a --rho (stationary)".into(),
        )),
    }
}

fn law_header(law: &Law) -> String {
    match law {
        Law::Transition(fp) => format!("law=transition {}", fp.to_kv()),
        Law::Stationary(sp) => format!("law=stationary {}", sp.to_kv()),
    }
}

fn cmd_density(args: DensityArgs) -> CmdResult {
    let law = law_from(&args)?;
    let ev = Evaluator::new(&law)?;
    let big_r = law.support_radius();
    let radii: Vec<f64> = match args.grid {
        Some(n) if n >= 1 => (0..n).map(|i| (i as f64 + 0.5) * big_r / n as f64).collect(),
        Some(_) => return Err(Failure::Usage("--grid must be >= 1".into())),
        None if args.radii.is_empty() => {
            return Err(Failure::Usage("give at least one --r or a --grid".into()))
        }
        None => args.radii.clone(),
    };
    let mut rows = Vec::with_capacity(radii.len());
    for &r in &radii {
        let e = ev.eval(r.abs())?;
        if e.boundary_singular {
            eprintln!("warning: r={r} is within the divergent boundary band; value saturated");
        }
        rows.push(e);
    }
    let mut w = open_output(&args.out)?;
    let note = if law.dim() == 3 { " asymptotic=o(a^3)" } else { "" };
    writeln!(w, "# randflight {VERSION} density {}{note}", law_header(&law))?;
    let Some(first) = rows.first() else {
        return Ok(());
    };
    writeln!(w, "{}", first.csv_header())?;
    for (e, r) in rows.iter().zip(&radii) {
        let mut e = *e;
        e.radius = *r;
        writeln!(w, "{}", e.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_figure(args: FigureArgs) -> CmdResult {
    if args.grid < 2 {
        return Err(Failure::Usage("--grid must be >= 2".into()));
    }
    let (m, a) = args.name.params();
    let law = Law::Stationary(StationaryParams::new(m, a, FIGURE_RHO)?);
    let mut w = open_output(&args.out)?;
    writeln!(
        w,
        "# randflight {VERSION} figure {} {} singular_mass={} boundary_divergent={}",
        args.name.name(),
        law_header(&law),
        law.singular_mass(),
        diverges_at_boundary(m)
    )?;
    if m == 1 {
        // signed abscissa on (−ρ, ρ)
        let ev = Evaluator::new(&law)?;
        let n = args.grid;
        let step = 2.0 * FIGURE_RHO / n as f64;
        writeln!(w, "x,ac_density")?;
        for i in 0..n {
            let x = -FIGURE_RHO + (i as f64 + 0.5) * step;
            writeln!(w, "{x},{}", ev.eval(x.abs())?.ac_density)?;
        }
    } else {
        let profile = density::radial_profile(&law, args.grid)?;
        writeln!(w, "r,ac_density")?;
        for (r, v) in profile.radii.iter().zip(&profile.values) {
            writeln!(w, "{r},{v}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let fp = FlightParams::new(args.m, args.c, args.lambda, args.t)?;
    if args.paths == 0 {
        return Err(Failure::Usage("--paths must be >= 1".into()));
    }
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            eprintln!("seed={s}");
            s
        }
    };
    let mode = if args.uniform_1d {
        OneDimMode::Resample
    } else {
        OneDimMode::Alternating
    };
    let cfg = SimConfig::new(fp, args.paths, seed)?
        .with_batch_size(args.batch_size)
        .with_one_dim(mode);
    cfg.validate()?;
    let summary = match &args.dump {
        Some(path) => {
            let (summary, samples) = simulate::run_with_samples(&cfg)?;
            let with_positions = args.positions && args.paths <= simulate::MAX_STORED_POSITIONS;
            if args.positions && !with_positions {
                eprintln!("warning: too many paths to keep positions; dumping radii only");
            }
            let mut w = BufWriter::new(File::create(path)?);
            simulate::write_samples_csv(&mut w, &samples, fp.m, with_positions)?;
            w.flush()?;
            summary
        }
        None => simulate::run(&cfg)?,
    };
    let mut w = open_output(&None)?;
    writeln!(
        w,
        "# randflight {VERSION} simulate {} paths={} seed={seed} one_dim={}",
        fp.to_kv(),
        args.paths,
        if args.uniform_1d { "resample" } else { "alternating" }
    )?;
    let q = |p: f64| -> f64 {
        let r = &summary.radii_sorted;
        if r.is_empty() {
            f64::NAN
        } else {
            r[((p * r.len() as f64) as usize).min(r.len() - 1)]
        }
    };
    let rows = [
        ("n_paths", summary.n_paths.to_string()),
        ("n_zero_switch", summary.n_zero_switch.to_string()),
        ("zero_switch_fraction", summary.zero_switch_fraction().to_string()),
        ("expected_zero_switch", fp.singular_mass().to_string()),
        ("mean_switches", summary.mean_switches.to_string()),
        ("expected_switches", fp.mean_switches().to_string()),
        ("mean_radius", summary.mean_radius.to_string()),
        ("median_radius_switched", q(0.5).to_string()),
        ("support_radius", fp.support_radius().to_string()),
    ];
    writeln!(w, "quantity,value")?;
    for (k, v) in rows {
        writeln!(w, "{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// One line of a validation report.
struct Check {
    suite: &'static str,
    case: String,
    metric: &'static str,
    value: f64,
    threshold: f64,
    status: Status,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Underpowered,
    NonConvergent,
    Info,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Underpowered => "underpowered",
            Status::NonConvergent => "nonconvergent",
            Status::Info => "info",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl FlatRecord for Check {
    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("suite", self.suite.to_string()),
            ("case", self.case.clone()),
            ("metric", self.metric.to_string()),
            ("value", format!("{:.6e}", self.value)),
            ("threshold", format!("{:.6e}", self.threshold)),
            ("status", self.status.label().to_string()),
        ]
    }
}

fn error_check(suite: &'static str, case: String, e: &Error) -> Result<Check, Failure> {
    let status = match e {
        Error::Underpowered { .. } => Status::Underpowered,
        Error::NonConvergence { .. } => Status::NonConvergent,
        _ => return Err(Failure::Usage(e.to_string())),
    };
    eprintln!("{suite} {case}: {e}");
    Ok(Check {
        suite,
        case,
        metric: "error",
        value: f64::NAN,
        threshold: f64::NAN,
        status,
    })
}

const SDC_TIMES: [f64; 3] = [1.0, 10.0, 1000.0];
const SDC_TOL: f64 = 1e-10;
const KAC_LADDER: [f64; 3] = [10.0, 100.0, 1000.0];
const KAC_M1_TOL: f64 = 0.02;
const GOF_DEFAULT_PATHS: u64 = 1_000_000;
const R3_DEFAULT_PATHS: u64 = 10_000_000;

fn suite_sdc(out: &mut Vec<Check>) -> CmdResult {
    for m in [1, 2, 4, 6] {
        for a in [0.5, 4.0, 7.0] {
            for rho in [1.0, 5.0] {
                let sp = StationaryParams::new(m, a, rho)?;
                let case = format!("m={m} a={a} rho={rho}");
                match limits::sdc_invariance_check(&sp, &SDC_TIMES) {
                    Ok(d) => out.push(Check {
                        suite: "sdc",
                        case: case.clone(),
                        metric: "max_rel_discrepancy",
                        value: d,
                        threshold: SDC_TOL,
                        status: Status::of(d <= SDC_TOL),
                    }),
                    Err(e) => out.push(error_check("sdc", case.clone(), &e)?),
                }
                let k = limits::sdc_continuity(&sp, 1e-6)?;
                out.push(Check {
                    suite: "sdc",
                    case,
                    metric: "continuity_gain",
                    value: k,
                    threshold: f64::NAN,
                    status: Status::Info,
                });
            }
        }
    }
    Ok(())
}

fn suite_kac(out: &mut Vec<Check>, traces: &mut Vec<LimitTrace>) -> CmdResult {
    for m in [1, 2, 4] {
        let trace = match limits::kac_limit_trace(1.0, 1.0, &KAC_LADDER, m) {
            Ok(t) => t,
            Err(e) => {
                out.push(error_check("kac", format!("m={m}"), &e)?);
                continue;
            }
        };
        for (i, (lambda, _)) in trace.ladder.iter().enumerate() {
            out.push(Check {
                suite: "kac",
                case: format!("m={m} lambda={lambda}"),
                metric: "sup_distance",
                value: trace.distances[i],
                threshold: if m == 1 && i + 1 == trace.ladder.len() {
                    KAC_M1_TOL
                } else {
                    f64::NAN
                },
                status: if m == 1 && i + 1 == trace.ladder.len() {
                    Status::of(trace.distances[i] <= KAC_M1_TOL)
                } else {
                    Status::Info
                },
            });
        }
        out.push(Check {
            suite: "kac",
            case: format!("m={m}"),
            metric: "strictly_decreasing",
            value: if trace.strictly_decreasing() { 1.0 } else { 0.0 },
            threshold: 1.0,
            status: Status::of(trace.strictly_decreasing()),
        });
        traces.push(trace);
    }
    Ok(())
}

fn suite_gof(out: &mut Vec<Check>, seed: u64, paths: u64) -> CmdResult {
    for m in [1, 2, 4, 6] {
        let fp = FlightParams::new(m, 1.0, 1.0, 3.0)?;
        let case = format!("m={m} lambda=1 c=1 t=3 paths={paths} seed={seed}");
        let summary = simulate::run(&SimConfig::new(fp, paths, seed)?)?;
        match limits::gof_against_analytic(&summary, &fp) {
            Ok(g) => {
                out.push(Check {
                    suite: "gof",
                    case: case.clone(),
                    metric: "ks_statistic",
                    value: g.ks_statistic,
                    threshold: g.ks_threshold,
                    status: Status::of(g.ks_pass),
                });
                out.push(Check {
                    suite: "gof",
                    case,
                    metric: "singular_z",
                    value: g.singular_z_score,
                    threshold: g.z_threshold,
                    status: Status::of(g.singular_pass),
                });
            }
            Err(e) => out.push(error_check("gof", case, &e)?),
        }
    }
    Ok(())
}

fn suite_r3(out: &mut Vec<Check>, seed: u64, paths: u64) -> CmdResult {
    let (a, rho) = (0.01, 5.0);
    let case = format!("a={a} rho={rho} paths={paths} seed={seed}");
    let rep = match limits::r3_asymptotic_check(a, rho, paths, seed) {
        Ok(r) => r,
        Err(e) => {
            out.push(error_check("r3", case, &e)?);
            return Ok(());
        }
    };
    out.push(Check {
        suite: "r3",
        case: case.clone(),
        metric: "mass_gap",
        value: rep.mass_gap,
        threshold: limits::R3_MASS_GAP_TOL,
        status: Status::of(rep.mass_pass()),
    });
    for b in &rep.bins {
        out.push(Check {
            suite: "r3",
            case: format!("bin [{}, {})", b.lo, b.hi),
            metric: "bin_z",
            value: b.z,
            threshold: limits::R3_BIN_SIGMAS,
            status: Status::of(b.z.abs() <= limits::R3_BIN_SIGMAS),
        });
    }
    out.push(Check {
        suite: "r3",
        case: case.clone(),
        metric: "sup_hist_deviation",
        value: rep.sup_deviation,
        threshold: f64::NAN,
        status: Status::Info,
    });
    out.push(Check {
        suite: "r3",
        case: case.clone(),
        metric: "ks_statistic",
        value: rep.gof.ks_statistic,
        threshold: rep.gof.ks_threshold,
        status: Status::Info,
    });
    out.push(Check {
        suite: "r3",
        case,
        metric: "minimal_at_origin_and_increasing",
        value: if rep.shape_pass() { 1.0 } else { 0.0 },
        threshold: 1.0,
        status: Status::of(rep.shape_pass()),
    });
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> CmdResult {
    if args.paths == Some(0) {
        return Err(Failure::Usage("--paths must be >= 1".into()));
    }
    let mut checks = Vec::new();
    let mut traces = Vec::new();
    let run_all = args.suite == Suite::All;
    if run_all || args.suite == Suite::Sdc {
        suite_sdc(&mut checks)?;
    }
    if run_all || args.suite == Suite::Kac {
        suite_kac(&mut checks, &mut traces)?;
    }
    if run_all || args.suite == Suite::Gof {
        suite_gof(&mut checks, args.seed, args.paths.unwrap_or(GOF_DEFAULT_PATHS))?;
    }
    if run_all || args.suite == Suite::R3 {
        suite_r3(&mut checks, args.seed, args.paths.unwrap_or(R3_DEFAULT_PATHS))?;
    }

    let mut stdout = io::stdout().lock();
    for t in &traces {
        writeln!(stdout, "{t}")?;
    }
    let rows: Vec<_> = checks.iter().map(|c| c.fields()).collect();
    write!(stdout, "{}", limits::text_table(&rows))?;
    if let Some(path) = &args.out {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# randflight {VERSION} validate seed={}", args.seed)?;
        if let Some(first) = checks.first() {
            writeln!(w, "{}", first.csv_header())?;
        }
        for c in &checks {
            writeln!(w, "{}", c.csv_row())?;
        }
        w.flush()?;
    }

    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let (fail, nonconv, under) = (
        count(Status::Fail),
        count(Status::NonConvergent),
        count(Status::Underpowered),
    );
    writeln!(
        stdout,
        "summary: {} pass, {fail} fail, {under} underpowered, {nonconv} nonconvergent",
        count(Status::Pass)
    )?;
    stdout.flush()?;
    if fail > 0 {
        Err(Failure::Validation(format!("{fail} check(s) failed")))
    } else if nonconv > 0 {
        Err(Failure::Numerical(format!("{nonconv} check(s) did not converge")))
    } else if under > 0 {
        Err(Failure::Validation(format!("{under} check(s) underpowered")))
    } else {
        Ok(())
    }
}
