mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use raycasimir::assembly::{self, AssemblySettings, Normalization};
use raycasimir::channels::{pfa_energy, pfa_force};
use raycasimir::piston::{self, EpsteinParams};
use raycasimir::Geometry;

use grid::Grid;
use output::{ConvergenceRow, EnergyRow, ForceRow, Format, PistonRow};

const UNITS: &str = "\
Units: hbar = c = 1. Lengths are in any fixed unit; energies come out
in 1/length and forces in 1/length^2, printed as plain numbers. Forces
are -dE/da, so attraction is negative. F_total_over_Fpfa divides the
total (Neumann plus Dirichlet) by twice the parallel-plate force
-zeta(3) s / (8 pi a^3).

Exit status: 0 when every point converged, 2 when some point stopped at
the order cap or failed to converge, 1 on usage or I/O errors.";

#[derive(Parser, Debug)]
#[command(name = "raycasimir", version, about = "Ray-optics Casimir forces between two squares inside sidewalls", after_help = UNITS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energy channels at one geometry.
    Energy {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Force channels at one geometry.
    Force {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Forces over a grid of sidewall gaps h.
    SweepH {
        #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
        s: f64,
        /// Gap grid as lo:hi:step.
        #[arg(long = "h-grid", default_value = "0:1:0.025", value_parser = nonnegative_grid, allow_hyphen_values = true)]
        h_grid: Grid,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Forces over a grid of square separations a.
    SweepA {
        #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, default_value_t = 0.25, value_parser = nonnegative, allow_negative_numbers = true)]
        h: f64,
        /// Separation grid as lo:hi:step.
        #[arg(long = "a-grid", default_value = "1:16:1", value_parser = positive_grid, allow_hyphen_values = true)]
        a_grid: Grid,
        /// Reference for the extra normalized column.
        #[arg(long, value_enum, default_value_t = Normalize::Pfa)]
        normalize: Normalize,
        #[command(flatten)]
        numeric: NumericArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form values at h = 0.
    Piston {
        #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
        s: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Energy partial sums at every order up to --max-order.
    Convergence {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long = "max-order", default_value_t = 101, value_parser = clap::value_parser!(u64).range(3..))]
        max_order: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
struct GeometryArgs {
    /// Separation between the squares.
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
    a: f64,
    /// Side of each square.
    #[arg(long, default_value_t = 1.0, value_parser = positive, allow_negative_numbers = true)]
    s: f64,
    /// Gap between each square and the sidewall.
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative, allow_negative_numbers = true)]
    h: f64,
}

#[derive(Args, Debug)]
struct NumericArgs {
    /// Relative tolerance on successive partial sums.
    #[arg(long, default_value_t = 1e-4, value_parser = tolerance, allow_negative_numbers = true)]
    tol: f64,
    /// Highest reflection order.
    #[arg(long = "max-order", default_value_t = 401, value_parser = clap::value_parser!(u64).range(3..))]
    max_order: u64,
}

impl NumericArgs {
    fn settings(&self) -> AssemblySettings {
        AssemblySettings { tolerance: self.tol, max_order: self.max_order, ..Default::default() }
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Normalize {
    Pfa,
    Piston,
}

fn number(text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|e| format!("`{text}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

fn positive(text: &str) -> Result<f64, String> {
    let v = number(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be > 0, got {v}"))
    }
}

fn nonnegative(text: &str) -> Result<f64, String> {
    let v = number(text)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be >= 0, got {v}"))
    }
}

fn tolerance(text: &str) -> Result<f64, String> {
    let v = number(text)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must be in (0, 1), got {v}"))
    }
}

fn nonnegative_grid(text: &str) -> Result<Grid, String> {
    let g: Grid = text.parse()?;
    if g.lo < 0.0 {
        return Err(format!("grid `{text}` must be >= 0"));
    }
    Ok(g)
}

fn positive_grid(text: &str) -> Result<Grid, String> {
    let g: Grid = text.parse()?;
    if !(g.lo > 0.0) {
        return Err(format!("grid `{text}` must be > 0"));
    }
    Ok(g)
}

enum Failure {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl From<raycasimir::Error> for Failure {
    fn from(e: raycasimir::Error) -> Self {
        match e {
            raycasimir::Error::NotConverged { .. } | raycasimir::Error::NonFinite(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn emit<R: output::Row>(rows: &[R], out: &OutputArgs) -> Result<(), Failure> {
    output::write_rows(rows, out.format, out.out.as_deref()).map_err(|e| {
        let dest = out.out.as_ref().map_or("stdout".to_string(), |p| p.display().to_string());
        Failure::Io(format!("writing {dest}: {e}"))
    })
}

fn report_failures(records: &[assembly::SweepRecord]) {
    for r in records {
        if let Some(e) = &r.error {
            eprintln!("warning: a={} s={} h={}: {e}", r.geometry.a, r.geometry.s, r.geometry.h);
        } else if !r.converged {
            eprintln!(
                "warning: a={} s={} h={}: stopped at the order cap ({}/{})",
                r.geometry.a, r.geometry.s, r.geometry.h, r.even_order, r.odd_order
            );
        }
    }
}

fn run(command: &Command) -> Outcome {
    match command {
        Command::Energy { geometry, numeric, out } => {
            let g = Geometry::new(geometry.a, geometry.s, geometry.h)?;
            let r = assembly::energy_breakdown(&g, &numeric.settings())?;
            emit(&[EnergyRow::new(g.a, g.s, g.h, &r)], out)?;
            Ok(r.converged())
        }
        Command::Force { geometry, numeric, out } => {
            Geometry::new(geometry.a, geometry.s, geometry.h)?;
            let recs =
                assembly::sweep_a(&[geometry.a], geometry.s, geometry.h, &numeric.settings(), Normalization::Pfa)?;
            report_failures(&recs);
            emit(&[ForceRow::from_record(&recs[0], false)], out)?;
            Ok(recs[0].converged)
        }
        Command::SweepH { a, s, h_grid, numeric, out } => {
            let sweep = assembly::sweep_h(*a, *s, &h_grid.values(), &numeric.settings())?;
            report_failures(&sweep.records);
            let rows: Vec<ForceRow> = sweep.records.iter().map(|r| ForceRow::from_record(r, false)).collect();
            emit(&rows, out)?;
            match sweep.extremum {
                Some(e) => eprintln!("interior minimum of |F_total| at h = {:.4} (grid point {})", e.h, e.grid_h),
                None => eprintln!("no interior minimum of |F_total| on this grid"),
            }
            Ok(sweep.records.iter().all(|r| r.converged))
        }
        Command::SweepA { s, h, a_grid, normalize, numeric, out } => {
            let norm = match normalize {
                Normalize::Pfa => Normalization::Pfa,
                Normalize::Piston => Normalization::PistonAtSameA,
            };
            let recs = assembly::sweep_a(&a_grid.values(), *s, *h, &numeric.settings(), norm)?;
            report_failures(&recs);
            let rows: Vec<ForceRow> =
                recs.iter().map(|r| ForceRow::from_record(r, norm == Normalization::PistonAtSameA)).collect();
            emit(&rows, out)?;
            Ok(recs.iter().all(|r| r.converged))
        }
        Command::Piston { a, s, out } => {
            let g = Geometry::new(*a, *s, 0.0)?;
            let z2 = piston::epstein_z2(EpsteinParams::new(*a, *s), piston::PISTON_TOLERANCE)?.value;
            let e_even = piston::piston_even_energy(*a, *s)? + pfa_energy(&g);
            let f_even = piston::piston_even_force(*a, *s)? + pfa_force(&g);
            let row = PistonRow {
                a: *a,
                s: *s,
                z2,
                e_even,
                e_odd: piston::piston_odd_energy(*a, *s)?,
                e_total: 2.0 * e_even,
                f_even,
                f_odd: piston::piston_odd_force(*a, *s)?,
                f_total: 2.0 * f_even,
            };
            emit(&[row], out)?;
            Ok(true)
        }
        Command::Convergence { geometry, max_order, out } => {
            let g = Geometry::new(geometry.a, geometry.s, geometry.h)?;
            let study = assembly::convergence_study(&g, *max_order, &AssemblySettings::default())?;
            emit(&ConvergenceRow::from_study(&study), out)?;
            for rep in [&study.even, &study.odd] {
                if let Some(slope) = rep.fitted_slope {
                    eprintln!("{:?}: log-log slope of successive differences {slope:.3}", rep.channel);
                }
            }
            Ok(true)
        }
    }
}

fn threads(command: &Command) -> Option<u16> {
    match command {
        Command::Energy { out, .. }
        | Command::Force { out, .. }
        | Command::SweepH { out, .. }
        | Command::SweepA { out, .. }
        | Command::Piston { out, .. }
        | Command::Convergence { out, .. } => out.threads,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match threads(&cli.command) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n as usize).build() {
            Ok(pool) => pool.install(|| run(&cli.command)),
            Err(e) => Err(Failure::Io(format!("thread pool: {e}"))),
        },
        None => run(&cli.command),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure::Usage(m) | Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
