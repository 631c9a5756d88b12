// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curvmom::fields::FdOrder;
use curvmom::suites::FactorChoice;

use crate::config::{parse_tolerance, read_config_file, Partial, UsageError};

#[derive(Parser, Debug)]
#[command(
    name = "curvmom",
    version,
    about = "Verify curvature-aware momentum and kinetic operators on embedded surfaces"
)]
#[command(after_help = "Per-check tolerances: --tol-<check> <value>, e.g. --tol-weingarten 1e-4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Export nodal geometry (H, K, √g, normal, metric) and compare with closed forms.
    Geom(Common),
    /// Run the geometry identity suite.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        debug_corrupt_normal: bool,
    },
    /// Compare the ordered kinetic energies with the Laplace-Beltrami operator.
    Ordering {
        #[command(flatten)]
        common: Common,
        /// auto, ode, closed or constant
        #[arg(long)]
        factors: Option<FactorChoice>,
    },
    /// Solve the ordering factors and check them.
    Factors(Common),
    /// Hermiticity defects of the momenta and the Laplacian.
    Hermiticity {
        #[command(flatten)]
        common: Common,
        /// Number of seeded field pairs.
        #[arg(long)]
        pairs: Option<usize>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// plane, monge, monge-sine, sphere, spheroid, torus, cylinder or catenoid
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Points per coordinate.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_xi: Option<usize>,
    #[arg(long)]
    n_zeta: Option<usize>,
    /// Distance kept from the ends of non-periodic coordinates.
    #[arg(long)]
    margin: Option<f64>,
    /// Finite-difference order: 2, 4 or 6.
    #[arg(long)]
    fd_order: Option<FdOrder>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bandlimit of the seeded test fields.
    #[arg(long)]
    bandlimit: Option<usize>,
    /// Half-width of the band excluded around singular lines of the factors.
    #[arg(long)]
    band: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write CSV exports into this directory.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// key = value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn partial(&self) -> Partial {
        Partial {
            surface: self.surface.clone(),
            a: self.a,
            b: self.b,
            n: self.n,
            n_xi: self.n_xi,
            n_zeta: self.n_zeta,
            margin: self.margin,
            fd_order: self.fd_order,
            seed: self.seed,
            hbar: self.hbar,
            mass: self.mass,
            bandlimit: self.bandlimit,
            band: self.band,
            json: self.json.clone(),
            csv_dir: self.csv_dir.clone(),
            ..Default::default()
        }
    }
}

type Tolerances = Vec<(String, f64)>;

/// Splits `--tol-<check> <v>` and `--tol-<check>=<v>` out of the arguments.
fn extract_tolerances(args: Vec<String>) -> Result<(Vec<String>, Tolerances), UsageError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut tols = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(tail) = arg.strip_prefix("--tol-") else {
            rest.push(arg);
            continue;
        };
        let (name, value) = match tail.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError(format!("missing value for `{arg}`")))?;
                (tail.to_string(), v)
            }
        };
        if name.is_empty() {
            return Err(UsageError("`--tol-` needs a check name".into()));
        }
        let t = parse_tolerance(&format!("--tol-{name}"), &value)?;
        tols.push((name, t));
    }
    Ok((rest, tols))
}

fn run(args: Vec<String>) -> Result<ExitCode, UsageError> {
    let (args, tols) = extract_tolerances(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::from(e.exit_code() as u8));
        }
    };
    let (name, common, mut extra, corrupt) = match &cli.command {
        Command::Geom(c) => ("geom", c, Partial::default(), false),
        Command::Check {
            common,
            debug_corrupt_normal,
        } => ("check", common, Partial::default(), *debug_corrupt_normal),
        Command::Ordering { common, factors } => (
            "ordering",
            common,
            Partial {
                factors: *factors,
                ..Default::default()
            },
            false,
        ),
        Command::Factors(c) => ("factors", c, Partial::default(), false),
        Command::Hermiticity { common, pairs } => (
            "hermiticity",
            common,
            Partial {
                pairs: *pairs,
                ..Default::default()
            },
            false,
        ),
    };
    extra.tolerances = tols.into_iter().collect();
    let flags = extra.or(common.partial());
    let merged = match &common.config {
        Some(path) => flags.or(read_config_file(path)?),
        None => flags,
    };
    let mut cfg = config::RunConfig::resolve(name, merged)?;
    cfg.options.corrupt_normal = corrupt;
    commands::execute(&cfg)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
