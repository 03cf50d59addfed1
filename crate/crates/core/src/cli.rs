//! Command-line interface: argument parsing, artifact I/O, and exit codes.
//!
//! Exit codes: 0 success, 1 a check evaluated and failed, 2 input or
//! configuration error. All reports are JSON with a `"schema"` marker;
//! identical inputs and seeds produce byte-identical files (wall-clock
//! timings are only recorded under `--timing`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dirichlet::{
    royden_split, DirichletProblem, EnergyMode, EnergySpec, SolveOptions, SweepMode,
};
use crate::error::{Error, Result};
use crate::generate;
use crate::geometry::ProxySpace;
use crate::net::{extract_net, KappaNet};
use crate::report::{
    read_json, read_text, to_json_string, write_json, write_text, AuditReport, DecomposeReport,
    FieldFile, NetFile, ProfileReport, QiReport, SolveReport, SplitStageReport, ValidateReport,
    SCHEMA,
};
use crate::transfer::{build_partition, discretize, smooth, Domain};
use crate::verify::{curve_csv, run_named, SuiteReport, VerificationReport};

#[derive(Parser)]
#[command(
    name = "roydennet",
    version,
    about = "Separated nets, function transfer, and p-Dirichlet analysis on weighted graphs"
)]
struct Cli {
    /// Worker threads for audits and verification sweeps. Accepted for
    /// compatibility; results never depend on it.
    #[arg(long, global = true, env = "ROYDENNET_THREADS")]
    threads: Option<usize>,

    /// Record wall-clock runtimes in reports. Off by default so that equal
    /// inputs yield byte-identical reports.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect or create space files.
    Space {
        #[command(subcommand)]
        cmd: SpaceCmd,
    },
    /// Extract and audit separated nets.
    Net {
        #[command(subcommand)]
        cmd: NetCmd,
    },
    /// Move scalar fields between a space and a net.
    Transfer {
        #[command(subcommand)]
        cmd: TransferCmd,
    },
    /// Solve a p-Dirichlet boundary problem.
    Solve(SolveArgs),
    /// Split a field into p-harmonic and potential parts over growing balls.
    Decompose(DecomposeArgs),
    /// Run a verification check (or `all`) and write its report.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum SpaceCmd {
    /// Parse a space file and report its basic statistics.
    Validate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report ball-volume growth over a radius schedule.
    Profile {
        file: PathBuf,
        /// Comma-separated radii; defaults to eight steps up to the
        /// diameter estimate.
        #[arg(long, value_delimiter = ',')]
        radii: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a deterministic fixture space.
    Generate {
        #[command(subcommand)]
        kind: GenerateCmd,
    },
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Unit-edge path on n vertices.
    Path {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// nx × ny grid with unit edges.
    Lattice2d {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rooted tree where every vertex has the given degree.
    RegularTree {
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Triangulated disk with hyperbolic edge lengths and area weights.
    HyperbolicDiskMesh {
        #[arg(long)]
        rings: usize,
        /// Hyperbolic spacing between consecutive rings.
        #[arg(long, default_value_t = 0.48)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum NetCmd {
    /// Greedily extract a maximal κ-separated net.
    Extract {
        space: PathBuf,
        #[arg(long)]
        kappa: f64,
        /// File with one vertex id per line giving the insertion order.
        #[arg(long)]
        order: Option<PathBuf>,
        /// Net adjacency threshold; defaults to 3κ.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify every net invariant against its space.
    Audit {
        space: PathBuf,
        net: PathBuf,
        /// Radii at which to report the largest net-point count per ball.
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        /// Also fit and re-verify distortion constants for the inclusion.
        #[arg(long)]
        qi: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TransferCmd {
    /// Net field -> space field via the partition of unity.
    Smooth {
        space: PathBuf,
        net: PathBuf,
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Space field -> net field via 4κ-ball averages.
    Discretize {
        space: PathBuf,
        net: PathBuf,
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepArg {
    GaussSeidel,
    Jacobi,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnergyArg {
    /// Unit coefficient per edge.
    Combinatorial,
    /// Coefficients from vertex weights and edge lengths.
    LengthWeighted,
}

impl EnergyArg {
    fn mode(self) -> EnergyMode {
        match self {
            EnergyArg::Combinatorial => EnergyMode::Combinatorial,
            EnergyArg::LengthWeighted => EnergyMode::LengthWeighted,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    space: PathBuf,
    #[arg(long)]
    p: f64,
    /// Field file holding the boundary values (a subset of vertices).
    #[arg(long)]
    boundary: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    #[arg(long, value_enum, default_value_t = SweepArg::GaussSeidel)]
    sweep: SweepArg,
    /// Energy coefficients; defaults to the convention of the space kind.
    #[arg(long, value_enum)]
    energy: Option<EnergyArg>,
    /// Field file with initial values for the free vertices.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Where to write the solution field; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the solve report; stdout when the field goes to a file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    space: PathBuf,
    /// Field file with a value for every vertex.
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    p: f64,
    /// Base vertex id of the ball exhaustion.
    #[arg(long)]
    base: u64,
    /// Strictly increasing ball radii, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_sweeps: usize,
    #[arg(long, value_enum)]
    energy: Option<EnergyArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-stage h/u field files.
    #[arg(long)]
    fields: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// One of: all, partition, smoothing-energy, discretization-energy,
    /// poincare, ray-discretization, ray-smoothing, roundtrip.
    check: String,
    space: PathBuf,
    /// Net file; omit it and pass --kappa to extract a net in-process.
    net: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 32)]
    trials: usize,
    /// Solver tolerance for the round-trip stages.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Directory for CSV curve dumps of the ray checks.
    #[arg(long)]
    curves: Option<PathBuf>,
}

/// Parses and executes `argv`, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.exit_code() == 0 { 0 } else { 2 };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

struct Timer {
    start: Option<Instant>,
}

impl Timer {
    fn new(enabled: bool) -> Timer {
        Timer {
            start: enabled.then(Instant::now),
        }
    }

    fn elapsed_ms(&self) -> Option<u64> {
        self.start.map(|s| s.elapsed().as_millis() as u64)
    }
}

fn load_space(path: &Path) -> Result<Arc<ProxySpace>> {
    Ok(Arc::new(ProxySpace::parse(&read_text(path)?)?))
}

fn load_net(space: &Arc<ProxySpace>, path: &Path) -> Result<KappaNet> {
    read_json::<NetFile>(path)?.into_net(space)
}

/// Writes the artifact to `out`, or prints it to stdout when `out` is None.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            print!("{}", to_json_string(value)?);
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::invalid("threads must be at least 1"));
        }
    }
    let timing = cli.timing;
    match cli.cmd {
        Cmd::Space { cmd } => space_cmd(cmd),
        Cmd::Net { cmd } => net_cmd(cmd),
        Cmd::Transfer { cmd } => transfer_cmd(cmd),
        Cmd::Solve(args) => solve_cmd(args, timing),
        Cmd::Decompose(args) => decompose_cmd(args, timing),
        Cmd::Verify(args) => verify_cmd(args, timing),
    }
}

fn space_cmd(cmd: SpaceCmd) -> Result<i32> {
    match cmd {
        SpaceCmd::Validate { file, out } => {
            let space = load_space(&file)?;
            emit(out.as_deref(), &ValidateReport::new(&space))?;
        }
        SpaceCmd::Profile { file, radii, out } => {
            let space = load_space(&file)?;
            let radii = if radii.is_empty() {
                let d = space.diameter_estimate();
                (1..=8).map(|i| d * i as f64 / 8.0).collect()
            } else {
                radii
            };
            let profile = space.volume_profile(&radii, space.ids())?;
            let report = ProfileReport {
                schema: SCHEMA.to_string(),
                vertices: space.len(),
                edges: space.edges().len(),
                kind: space.kind(),
                degree_bound: space.degree_bound(),
                total_volume: space.total_volume(),
                diameter_estimate: space.diameter_estimate(),
                radii: profile.radii,
                volume_min: profile.vmin,
                volume_max: profile.vmax,
            };
            emit(out.as_deref(), &report)?;
        }
        SpaceCmd::Generate { kind } => {
            let (space, out) = match kind {
                GenerateCmd::Path { n, out } => (generate::path(n)?, out),
                GenerateCmd::Lattice2d { nx, ny, out } => (generate::lattice2d(nx, ny)?, out),
                GenerateCmd::RegularTree { degree, depth, out } => {
                    (generate::regular_tree(degree, depth)?, out)
                }
                GenerateCmd::HyperbolicDiskMesh { rings, delta, out } => {
                    (generate::hyperbolic_disk_mesh(rings, delta)?, out)
                }
            };
            write_text(&out, &space.to_text())?;
            emit(None, &ValidateReport::new(&space))?;
        }
    }
    Ok(0)
}

fn parse_order_file(path: &Path) -> Result<Vec<u64>> {
    let mut order = Vec::new();
    for (lineno, line) in read_text(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for tok in line.split_whitespace() {
            order.push(tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("expected a vertex id, got \"{tok}\""),
            })?);
        }
    }
    Ok(order)
}

fn net_cmd(cmd: NetCmd) -> Result<i32> {
    match cmd {
        NetCmd::Extract {
            space,
            kappa,
            order,
            threshold,
            out,
        } => {
            let space = load_space(&space)?;
            let order = order.as_deref().map(parse_order_file).transpose()?;
            let net = extract_net(&space, kappa, order.as_deref(), threshold)?;
            for warning in net.warnings() {
                eprintln!("warning: {warning}");
            }
            write_json(&out, &NetFile::from_net(&net))?;
            Ok(0)
        }
        NetCmd::Audit {
            space,
            net,
            r,
            qi,
            out,
        } => {
            let space = load_space(&space)?;
            let net = load_net(&space, &net)?;
            let mut report = AuditReport::new(&net);
            for &radius in &r {
                report
                    .bounded_geometry
                    .insert(format!("{radius}"), net.bounded_geometry(radius)?);
            }
            if qi {
                let est = net.estimate_qi()?;
                let verified = net.verify_qi(&est).is_ok();
                report.ok = report.ok && verified;
                report.quasi_isometry = Some(QiReport::new(&est, verified));
            }
            let ok = report.ok;
            emit(out.as_deref(), &report)?;
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn transfer_cmd(cmd: TransferCmd) -> Result<i32> {
    match cmd {
        TransferCmd::Smooth {
            space,
            net,
            field,
            out,
        } => {
            let space = load_space(&space)?;
            let net = load_net(&space, &net)?;
            let fbar = read_json::<FieldFile>(&field)?.to_net_field(&net)?;
            let pou = build_partition(&net)?;
            let smoothed = smooth(&pou, &fbar)?;
            emit(out.as_deref(), &FieldFile::from_proxy(&space, &smoothed.values))?;
        }
        TransferCmd::Discretize {
            space,
            net,
            field,
            out,
        } => {
            let space = load_space(&space)?;
            let net = load_net(&space, &net)?;
            let f = read_json::<FieldFile>(&field)?.to_proxy_field(&space)?;
            let fstar = discretize(&net, &f)?;
            emit(out.as_deref(), &FieldFile::from_net(&net, &fstar.values))?;
        }
    }
    Ok(0)
}

fn solve_options(
    tol: f64,
    max_sweeps: usize,
    sweep: SweepArg,
    init: Option<Vec<f64>>,
) -> Result<SolveOptions> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tol must be positive (got {tol})")));
    }
    Ok(SolveOptions {
        tol,
        max_sweeps,
        mode: match sweep {
            SweepArg::GaussSeidel => SweepMode::GaussSeidel,
            SweepArg::Jacobi => SweepMode::Jacobi,
        },
        init,
    })
}

fn energy_spec(p: f64, energy: Option<EnergyArg>, space: &ProxySpace) -> Result<EnergySpec> {
    match energy {
        Some(arg) => EnergySpec::new(p, arg.mode()),
        None => EnergySpec::for_space(p, space),
    }
}

fn solve_cmd(args: SolveArgs, timing: bool) -> Result<i32> {
    let timer = Timer::new(timing);
    let space = load_space(&args.space)?;
    let spec = energy_spec(args.p, args.energy, &space)?;
    let boundary_file = read_json::<FieldFile>(&args.boundary)?;
    if boundary_file.domain != Domain::Proxy {
        return Err(Error::DomainMismatch {
            expected: Domain::Proxy.to_string(),
            found: boundary_file.domain.to_string(),
        });
    }
    let boundary = boundary_file.boundary_pairs()?;
    let init = args
        .init
        .as_deref()
        .map(|path| {
            read_json::<FieldFile>(path)?
                .to_proxy_field(&space)
                .map(|f| f.values)
        })
        .transpose()?;
    let opts = solve_options(args.tol, args.max_sweeps, args.sweep, init)?;
    let problem = DirichletProblem::new(space.clone(), spec, &boundary)?;
    let solution = problem.solve(&opts)?;

    let mut report = SolveReport::new(args.p, spec.mode, args.tol, &solution);
    report.runtime_ms = timer.elapsed_ms();
    let field = FieldFile::from_proxy(&space, &solution.values);
    match &args.out {
        Some(path) => {
            write_json(path, &field)?;
            emit(args.report.as_deref(), &report)?;
        }
        None => {
            emit(None, &field)?;
            if let Some(report_path) = &args.report {
                write_json(report_path, &report)?;
            }
        }
    }
    Ok(0)
}

fn decompose_cmd(args: DecomposeArgs, timing: bool) -> Result<i32> {
    let timer = Timer::new(timing);
    let space = load_space(&args.space)?;
    let spec = energy_spec(args.p, args.energy, &space)?;
    let field = read_json::<FieldFile>(&args.field)?.to_proxy_field(&space)?;
    let opts = solve_options(args.tol, args.max_sweeps, SweepArg::GaussSeidel, None)?;
    let split = royden_split(&space, &field.values, spec, args.base, &args.radii, &opts)?;

    if let Some(dir) = &args.fields {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for stage in &split.stages {
            let tag = format!("{}", stage.radius).replace('.', "_");
            write_json(
                &dir.join(format!("h_{tag}.json")),
                &FieldFile::from_proxy(&space, &stage.h),
            )?;
            write_json(
                &dir.join(format!("u_{tag}.json")),
                &FieldFile::from_proxy(&space, &stage.u),
            )?;
        }
    }

    let mut report = DecomposeReport {
        schema: SCHEMA.to_string(),
        p: args.p,
        mode: spec.mode,
        base: split.base,
        radii: split.radii.clone(),
        stages: split.stages.iter().map(SplitStageReport::new).collect(),
        runtime_ms: None,
    };
    report.runtime_ms = timer.elapsed_ms();
    emit(args.out.as_deref(), &report)?;
    Ok(0)
}

fn verify_cmd(args: VerifyArgs, timing: bool) -> Result<i32> {
    let timer = Timer::new(timing);
    let space = load_space(&args.space)?;
    let net = match (&args.net, args.kappa) {
        (Some(path), None) => load_net(&space, path)?,
        (None, Some(kappa)) => {
            let net = extract_net(&space, kappa, None, None)?;
            for warning in net.warnings() {
                eprintln!("warning: {warning}");
            }
            net
        }
        (Some(_), Some(_)) => {
            return Err(Error::invalid(
                "pass either a net file or --kappa, not both",
            ))
        }
        (None, None) => {
            return Err(Error::invalid(
                "a net is required: pass a net file or --kappa",
            ))
        }
    };
    let opts = solve_options(args.tol, 100_000, SweepArg::GaussSeidel, None)?;
    let reports = run_named(&net, &args.check, args.p, args.seed, args.trials, &opts)?;

    if let Some(dir) = &args.curves {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for report in &reports {
            if !report.curve.is_empty() {
                write_text(
                    &dir.join(format!("{}.csv", report.check)),
                    &curve_csv(&report.curve),
                )?;
            }
        }
    }

    let pass = reports.iter().all(|r| r.pass);
    for report in &reports {
        eprintln!(
            "{}: {}",
            report.check,
            if report.pass { "pass" } else { "FAIL" }
        );
    }
    if args.check == "all" {
        let mut suite = SuiteReport::new(reports);
        suite.runtime_ms = timer.elapsed_ms();
        write_json(&args.out, &suite)?;
    } else {
        let mut report: VerificationReport = reports.into_iter().next().unwrap();
        report.runtime_ms = timer.elapsed_ms();
        write_json(&args.out, &report)?;
    }
    Ok(if pass { 0 } else { 1 })
}
