use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use curvmom::fields::{fmt17, write_columns_csv, TrigSeries};
use curvmom::operators::{OrderingFactors, Quantizer};
use curvmom::suites::{self, FactorChoice};
use curvmom::{reference_check, Error, Expectation, Grid, Report};
use ndarray::Array2;

use crate::config::{RunConfig, UsageError};

/// Tolerance of the closed-form comparisons in `geom`.
const REFERENCE_TOL: f64 = 1e-10;

pub fn execute(cfg: &RunConfig) -> Result<ExitCode, UsageError> {
    let started = Instant::now();
    let grid = cfg.grid()?;
    if let Some(dir) = &cfg.csv_dir {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let mut report = match cfg.command.as_str() {
        "geom" => geom(cfg, &grid)?,
        "check" => suites::geometry_suite(&grid, &cfg.options)?,
        "ordering" => ordering(cfg, &grid)?,
        "factors" => factors(cfg, &grid)?,
        "hermiticity" => suites::hermiticity_suite(&grid, &cfg.options)?,
        other => return Err(UsageError(format!("unknown command `{other}`"))),
    };
    report.command = cfg.command.clone();
    report.config = cfg.echo();
    for (name, t) in &cfg.tolerances {
        report.override_tolerance(name, *t);
    }

    if let Some(dir) = &cfg.csv_dir {
        write_checks_csv(&report, &dir.join("checks.csv"))?;
    }
    if let Some(path) = &cfg.json {
        let mut text =
            serde_json::to_string_pretty(&report).map_err(|e| UsageError(e.to_string()))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| io_error(path, e))?;
    }
    print_table(&report);
    println!("wall time: {:.3} s", started.elapsed().as_secs_f64());
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn io_error(path: &Path, e: std::io::Error) -> UsageError {
    UsageError(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, UsageError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn print_table(report: &Report) {
    let width = report
        .checks
        .iter()
        .map(|c| c.name.len())
        .max()
        .unwrap_or(0)
        .max(5);
    println!(
        "{:width$}  {:>12}  {:>10}  {:<11}  status",
        "check", "max", "tolerance", "expect"
    );
    for c in &report.checks {
        let expect = match c.expectation {
            Expectation::Below => "below",
            Expectation::Above => "above",
            Expectation::ReportOnly => "report-only",
        };
        let tol = if c.tolerance.is_finite() {
            format!("{:.1e}", c.tolerance)
        } else {
            "-".into()
        };
        let status = if c.passed { "ok" } else { "FAIL" };
        let at = c
            .location
            .map(|[u, v]| format!("  at ({u:.4}, {v:.4})"))
            .unwrap_or_default();
        println!(
            "{:width$}  {:>12.4e}  {tol:>10}  {expect:<11}  {status}{at}",
            c.name, c.max_residual
        );
    }
    let failed = report.failures().count();
    println!(
        "{}: {} checks, {failed} failed",
        report.command,
        report.checks.len()
    );
}

fn write_checks_csv(report: &Report, path: &Path) -> Result<(), UsageError> {
    let mut w = create(path)?;
    let mut line = |s: String| writeln!(w, "{s}").map_err(|e| io_error(path, e));
    line("name,max_residual,tolerance,expectation,passed".into())?;
    for c in &report.checks {
        let exp = match c.expectation {
            Expectation::Below => "below",
            Expectation::Above => "above",
            Expectation::ReportOnly => "report_only",
        };
        line(format!(
            "{},{},{},{exp},{}",
            c.name,
            fmt17(c.max_residual),
            fmt17(c.tolerance),
            c.passed
        ))?;
    }
    Ok(())
}

fn write_grid_csv(
    path: &Path,
    grid: &Grid,
    columns: &[(&str, &Array2<f64>)],
) -> Result<(), UsageError> {
    write_columns_csv(grid, columns, create(path)?).map_err(UsageError::from)
}

fn geom(cfg: &RunConfig, grid: &std::sync::Arc<Grid>) -> Result<Report, UsageError> {
    if let Some(dir) = &cfg.csv_dir {
        for (name, values) in suites::geometry_table(grid) {
            write_grid_csv(
                &dir.join(format!("{name}.csv")),
                grid,
                &[("value", &values)],
            )?;
        }
    }
    match reference_check(grid.chart(), grid, REFERENCE_TOL) {
        Ok(r) => Ok(r),
        Err(Error::MissingReference(_)) => Ok(Report::new("geom")),
        Err(e) => Err(e.into()),
    }
}

fn ordering(cfg: &RunConfig, grid: &std::sync::Arc<Grid>) -> Result<Report, UsageError> {
    let factors = suites::build_factors(grid, cfg.factors)?;
    let report = suites::ordering_suite(grid, &factors, &cfg.options)?;
    if let Some(dir) = &cfg.csv_dir {
        let q = Quantizer::new(grid, cfg.options.order, cfg.options.phys)?;
        let psi = TrigSeries::random(grid, cfg.options.seed, cfg.options.bandlimit)?.sample(grid);
        let excess = &q.naive_p_squared(&psi)? - &q.kinetic_reference(&psi)?;
        let c = cfg.options.phys.kinetic_prefactor();
        let expected = psi.mul_real(&q.mean_curvature().mapv(|h| c * h * h));
        let parts =
            |f: &curvmom::ScalarField| (f.values().mapv(|z| z.re), f.values().mapv(|z| z.im));
        let (mr, mi) = parts(&excess);
        let (er, ei) = parts(&expected);
        write_grid_csv(
            &dir.join("excess.csv"),
            grid,
            &[
                ("measured_re", &mr),
                ("measured_im", &mi),
                ("expected_re", &er),
                ("expected_im", &ei),
            ],
        )?;
        if cfg.factors != FactorChoice::Constant {
            write_factors(dir, grid, &factors)?;
        }
    }
    Ok(report)
}

fn factors(cfg: &RunConfig, grid: &std::sync::Arc<Grid>) -> Result<Report, UsageError> {
    let (report, solved) = suites::factors_suite(grid, &cfg.options)?;
    if let Some(dir) = &cfg.csv_dir {
        write_factors(dir, grid, &solved)?;
    }
    Ok(report)
}

/// `factors.csv` over the grid, plus one `f_<axis>.csv` curve per axis
/// along the coordinate the factor depends on.
fn write_factors(dir: &Path, grid: &Grid, f: &OrderingFactors<f64>) -> Result<(), UsageError> {
    write_grid_csv(
        &dir.join("factors.csv"),
        grid,
        &[
            ("f_x", f.factor(0)),
            ("f_y", f.factor(1)),
            ("f_z", f.factor(2)),
        ],
    )?;
    let names = grid.chart().coord_names();
    for (k, axis) in ["x", "y", "z"].iter().enumerate() {
        let values = f.factor(k);
        // constant along ζ means the curve runs along ξ
        let along_xi = values
            .rows()
            .into_iter()
            .all(|r| r.iter().all(|&v| v == r[0]));
        let coord = if along_xi { 0 } else { 1 };
        let path = dir.join(format!("f_{axis}.csv"));
        let mut w = create(&path)?;
        let mut line = |s: String| writeln!(w, "{s}").map_err(|e| io_error(&path, e));
        line(format!("{},f_{axis}", names[coord]))?;
        for i in 0..grid.shape()[coord] {
            let v = if coord == 0 {
                values[[i, 0]]
            } else {
                values[[0, i]]
            };
            line(format!("{},{}", fmt17(grid.coord(coord, i)), fmt17(v)))?;
        }
    }
    Ok(())
}
