use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fvs::mesh::{generate_fvs_grid, generate_square_grid, read_mesh, write_mesh};
use fvs::space::{Discretization, Family};
use fvs::verify::{split_triangle_check, unisolvency_sweep};
use fvs::study::{compute_errors, run_study, solution_csv, solve_manufactured, ManufacturedSolution, StudyConfig};
use fvs::{assembly::CoefficientField, Error, Result};

#[derive(Parser)]
#[command(name = "fvs", version, about = "C1-Pk quadrilateral macro elements for clamped plates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Full,
    Condensed,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Full => Family::Full,
            FamilyArg::Condensed => Family::Condensed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Write a mesh as JSON.
    Mesh {
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long, default_value_t = 0.625)]
        alpha: f64,
        /// Uniform N×N square grid instead of the level grid.
        #[arg(long)]
        square: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve the manufactured interface problem and write DOF values.
    Solve {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = FamilyArg::Full)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1.0)]
        mu0: f64,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, default_value_t = 0.625)]
        alpha: f64,
        /// Read the mesh from a JSON file instead of generating it.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Convergence table over a range of grid levels.
    Study {
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = FamilyArg::Full)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1.0)]
        mu0: f64,
        /// Inclusive level range `LMIN:LMAX`.
        #[arg(long, value_parser = parse_range)]
        grids: (usize, usize),
        #[arg(long, default_value_t = 0.625)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the lemma and unisolvency property suites.
    Verify {
        /// Restrict to one degree (default 3..=5 for unisolvency, 3..=6 for the split-triangle check).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected LMIN:LMAX, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err(format!("invalid level range {s:?}"));
    }
    Ok((a, b))
}

fn write_out(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh { level, alpha, square, output } => {
            let mesh = match square {
                Some(n) => generate_square_grid(n)?,
                None => generate_fvs_grid(level, alpha)?,
            };
            write_mesh(&mesh, &output)?;
            eprintln!("{} vertices, {} quads -> {}", mesh.vertices().len(), mesh.quads().len(), output.display());
        }
        Command::Solve { k, family, mu0, level, alpha, mesh, output } => {
            let mesh = match mesh {
                Some(p) => read_mesh(p)?,
                None => generate_fvs_grid(level, alpha)?,
            };
            let disc = Discretization::new(mesh, k, family.into())?;
            let sol = solve_manufactured(disc, mu0)?;
            let exact = ManufacturedSolution::new(mu0);
            let e = compute_errors(&sol.disc, &sol.coeffs, &exact, &CoefficientField::interface(mu0), 30)?;
            std::fs::write(&output, solution_csv(&sol.disc, &sol.coeffs))?;
            eprintln!(
                "{} free DOFs, residual {:.2e}; L2 {:.3e}, H1 {:.3e}, energy {:.3e} -> {}",
                sol.free_dofs,
                sol.info.relative_residual,
                e.l2,
                e.h1,
                e.energy,
                output.display()
            );
        }
        Command::Study { k, family, mu0, grids, alpha, format, output } => {
            let config = StudyConfig { k, family: family.into(), mu0, grids: grids.0..=grids.1, alpha };
            let report = run_study(&config)?;
            let text = match format {
                Format::Markdown => report.to_markdown(),
                Format::Csv => report.to_csv(),
            };
            write_out(output.as_ref(), &text)?;
        }
        Command::Verify { k, seed, trials } => verify(k, seed, trials)?,
    }
    Ok(())
}

fn verify(k: Option<usize>, seed: u64, trials: usize) -> Result<()> {
    if k.is_some_and(|k| k < 3) {
        return Err(Error::UnsupportedDegree(k.unwrap_or(0)));
    }
    let sweep_degrees: Vec<usize> = k.map_or((3..=5).collect(), |k| vec![k]);
    let lemma_degrees: Vec<usize> = k.map_or((3..=6).collect(), |k| vec![k]);
    let mut ok = true;
    for &k in &sweep_degrees {
        let s = unisolvency_sweep(k, trials, seed);
        let pass = s.failures.is_empty() && s.max_duality_error < 1e-10 && s.max_c1_jump < 1e-9;
        ok &= pass;
        println!(
            "{} unisolvency k={k}: {} quads, {} failures, condition {:.2e}..{:.2e} (median {:.2e}), duality {:.1e}, C1 jump {:.1e} (skipped diagonal {:.1e})",
            if pass { "PASS" } else { "FAIL" },
            s.trials,
            s.failures.len(),
            s.min_condition,
            s.max_condition,
            s.median_condition,
            s.max_duality_error,
            s.max_c1_jump,
            s.max_skipped_jump
        );
        for (t, q, msg) in &s.failures {
            println!("  trial {t}: {q:?}: {msg}");
        }
    }
    for &k in &lemma_degrees {
        for m in 1..=k - 2 {
            let r = split_triangle_check(k, m, trials, seed)?;
            let pass = r.passed(1e-9);
            ok &= pass;
            println!(
                "{} split-triangle k={k} m={m}: nullity {}..{}, violation {:.1e}, order m+2 control {:.1e}, at x0 {:.1e}",
                if pass { "PASS" } else { "FAIL" },
                r.min_nullity,
                r.max_nullity,
                r.max_violation,
                r.min_control,
                r.max_at_x0
            );
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument("verification failed".into()))
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fvs: error: {e}");
            ExitCode::FAILURE
        }
    }
}
