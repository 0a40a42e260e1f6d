use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use h2aca::cross::RowPivot;
use h2aca::h2::BasisMode;
use h2aca::harness::{
    run_experiment, selftest, table1_experiment, ExperimentConfig, GeometrySpec, Method, Table1Options,
};
use h2aca::kernel::KernelSpec;

#[derive(Parser)]
#[command(name = "h2aca", version, about = "H- and H2-matrix compression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build compressed operators and compare them with the dense matrix.
    Run(Box<RunArgs>),
    /// Cross approximation vs Chebyshev interpolation on a cube grid.
    Table1(Table1Args),
    /// Run the built-in invariant checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Ellipsoid,
    Cube,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Newton,
    Fractional,
    Power,
}

#[derive(Clone, Copy, ValueEnum)]
enum PivotArg {
    MaxResidual,
    FillDistance,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Nested,
    Uniform,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    geometry: Option<GeometryArg>,
    /// Point count (ellipsoid) or points per axis (cube).
    #[arg(long)]
    n: Option<usize>,
    /// Point file for `--geometry file`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Exponent of `--kernel power`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Order of `--kernel fractional` (d = 3).
    #[arg(long)]
    s: Option<f64>,
    /// Comma-separated subset of dense,h,h2.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long = "nmin-h")]
    n_min_h: Option<usize>,
    #[arg(long = "nmin-h2")]
    n_min_h2: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    shell_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    row_pivot: Option<PivotArg>,
    #[arg(long, value_enum)]
    basis_mode: Option<ModeArg>,
    /// Report path; the report goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for per-cluster convergence CSV files.
    #[arg(long)]
    convergence_csv: Option<PathBuf>,
}

#[derive(Args)]
struct Table1Args {
    /// Half width of the cube.
    #[arg(long, default_value_t = 0.5)]
    half_width: f64,
    #[arg(long, value_enum)]
    row_pivot: Option<PivotArg>,
    /// Also write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn pivot(p: PivotArg) -> RowPivot {
    match p {
        PivotArg::MaxResidual => RowPivot::MaxResidual,
        PivotArg::FillDistance => RowPivot::FillDistance,
    }
}

fn build_config(a: &RunArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
        None => {
            let Some(g) = a.geometry else {
                return Err("either --config or --geometry is required".into());
            };
            ExperimentConfig::new(geometry(g, a)?)
        }
    };
    if let (Some(g), Some(_)) = (a.geometry, &a.config) {
        cfg.geometry = geometry(g, a)?;
    } else if let Some(n) = a.n {
        match &mut cfg.geometry {
            GeometrySpec::EllipsoidSurface { n: m } | GeometrySpec::CubeGrid { n: m, .. } => *m = n,
            GeometrySpec::File { .. } => return Err("--n does not apply to file geometry".into()),
        }
    }
    if let Some(k) = a.kernel {
        cfg.kernel = match k {
            KernelArg::Newton => KernelSpec::Newton,
            KernelArg::Fractional => KernelSpec::Fractional { d: 3, s: a.s.unwrap_or(0.2) },
            KernelArg::Power => KernelSpec::Power {
                alpha: a.alpha.unwrap_or(1.0),
                scale: 1.0,
            },
        };
    }
    if let Some(v) = a.eta {
        cfg.eta = v;
    }
    if let Some(v) = a.eps {
        cfg.eps = v;
    }
    if let Some(v) = &a.methods {
        cfg.methods = v.clone();
    }
    if let Some(v) = a.n_min_h {
        cfg.n_min_h = v;
    }
    if let Some(v) = a.n_min_h2 {
        cfg.n_min_h2 = v;
    }
    if let Some(v) = a.k_max {
        cfg.k_max = v;
    }
    if let Some(v) = a.shell_samples {
        cfg.shell_samples = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.row_pivot {
        cfg.row_pivot = pivot(v);
    }
    if let Some(v) = a.basis_mode {
        cfg.basis_mode = match v {
            ModeArg::Nested => BasisMode::Nested,
            ModeArg::Uniform => BasisMode::Uniform,
        };
    }
    if a.out.is_some() {
        cfg.out = a.out.clone();
    }
    if a.convergence_csv.is_some() {
        cfg.convergence_csv = a.convergence_csv.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn geometry(g: GeometryArg, a: &RunArgs) -> Result<GeometrySpec, String> {
    Ok(match g {
        GeometryArg::Ellipsoid => GeometrySpec::EllipsoidSurface { n: a.n.unwrap_or(2000) },
        GeometryArg::Cube => GeometrySpec::CubeGrid {
            n: a.n.unwrap_or(12),
            half_width: 0.5,
        },
        GeometryArg::File => GeometrySpec::File {
            path: a.points.clone().ok_or("--geometry file needs --points")?,
        },
    })
}

fn run(a: &RunArgs) -> ExitCode {
    let cfg = match build_config(a) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.out {
        Some(path) => {
            if let Err(e) = report.write(path) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            for m in &report.methods {
                let err = m.errors.as_ref().map_or("n/a".to_string(), |e| format!("{:.3e}", e.max));
                eprintln!(
                    "{:>5}  compression {:>7.3}%  max matvec error {err}",
                    m.method.to_string(),
                    m.compression_percent
                );
            }
        }
        None => println!("{}", report.to_json()),
    }
    for g in report.guards.iter().filter(|g| !g.passed) {
        eprintln!("guard failed: {} = {:e} (limit {:e})", g.name, g.value, g.limit);
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn table1(a: &Table1Args) -> ExitCode {
    let mut opts = Table1Options {
        half_width: a.half_width,
        ..Table1Options::default()
    };
    if let Some(p) = a.row_pivot {
        opts.row_pivot = pivot(p);
    }
    match table1_experiment(&opts) {
        Ok(r) => {
            print!("{}", r.to_text());
            if let Some(path) = &a.out {
                let json = serde_json::to_string_pretty(&r).expect("report serializes");
                if let Err(e) = std::fs::write(path, json + "\n") {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run_selftest() -> ExitCode {
    let checks = selftest();
    for c in &checks {
        println!("{} {:<26} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("H2ACA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("H2ACA_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match &cli.command {
        Command::Run(a) => run(a),
        Command::Table1(a) => table1(a),
        Command::Selftest => run_selftest(),
    }
}
