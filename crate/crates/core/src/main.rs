//! Command-line front end: mesh generation and the conditioning, scattering
//! and RCS studies, written as CSV.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efie_spectral::em::QuadratureConfig;
use efie_spectral::experiments::{
    cond_vs_frequency, cond_vs_refinement, rcs_check, scattering_run, write_csv, ExperimentConfig, Formulation,
    Geometry, Record, SolverMethod,
};
use efie_spectral::filters::{FilterOptions, InnerSolver};
use efie_spectral::krylov::SolverOptions;
use efie_spectral::mesh::{generate_icosphere, MeshFormat};
use efie_spectral::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "efie-spectral", version, about = "EFIE solver with loop-star and spectral-filter preconditioning")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Points of the triangle quadrature rule (1, 3, 4, 6, 7 or 12).
    #[arg(long, global = true, default_value_t = 7)]
    quad_order: usize,

    /// Spectral filter sharpness (even, 2 to 8).
    #[arg(long, global = true, default_value_t = 2)]
    filter_sharpness: u32,

    /// Tolerance of the conjugate-gradient filter backend.
    #[arg(long, global = true, default_value_t = 1e-10)]
    filter_tol: f64,

    /// Solve filter systems with conjugate gradient instead of Cholesky.
    #[arg(long, global = true)]
    filter_cg: bool,

    /// Fixed highest filter band index.
    #[arg(long, global = true)]
    bands_override: Option<usize>,

    /// Relative residual tolerance of the Krylov solver.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,

    #[arg(long, global = true, default_value_t = 5000)]
    max_iterations: usize,

    /// Krylov method: gmres or cgnr.
    #[arg(long, global = true, default_value = "gmres")]
    solver: String,

    /// Write dense operators (binary container) into this directory.
    #[arg(long, global = true)]
    dump_operators: Option<PathBuf>,

    /// Write loop/star maps and Laplacians (Matrix Market) into this directory.
    #[arg(long, global = true)]
    dump_sparse: Option<PathBuf>,

    /// Estimate condition numbers by Lanczos bidiagonalization.
    #[arg(long, global = true)]
    estimate: bool,

    /// Record wall time in the CSV (makes output run-dependent).
    #[arg(long, global = true)]
    walltime: bool,

    /// CSV output file; standard output when absent.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Experiments.
    Run {
        #[command(subcommand)]
        command: RunCommand,
    },
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Write an icosphere as OFF or Gmsh v2 (by extension).
    GenSphere {
        #[arg(long, default_value_t = 2)]
        subdivisions: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Output mesh path (.off or .msh).
        #[arg(long)]
        mesh_out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum RunCommand {
    /// Condition number against frequency.
    CondFreq {
        /// `icosphere:<subdivisions>[:<radius>]` or a mesh file.
        #[arg(long, default_value = "icosphere:2")]
        geometry: String,
        /// Frequencies in Hz.
        #[arg(long, value_delimiter = ',', default_value = "1,100,10000,1000000")]
        freqs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "raw,loop-star,spectral")]
        formulations: Vec<String>,
    },
    /// Condition number against icosphere refinement.
    CondH {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        subdivisions: Vec<u32>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1.0)]
        freq: f64,
        #[arg(long, value_delimiter = ',', default_value = "loop-star,spectral")]
        formulations: Vec<String>,
    },
    /// Solve a scattering problem and report iteration counts.
    Scatter {
        #[arg(long, default_value = "icosphere:2")]
        geometry: String,
        #[arg(long, default_value_t = 1000.0)]
        freq: f64,
        #[arg(long, value_delimiter = ',', default_value = "loop-star,spectral")]
        formulations: Vec<String>,
        /// Directory for current vectors and per-triangle magnitudes.
        #[arg(long)]
        currents_dir: Option<PathBuf>,
    },
    /// Compare bistatic RCS of a sphere with the Mie series.
    RcsCheck {
        #[arg(long, default_value = "icosphere:3")]
        geometry: String,
        #[arg(long, default_value_t = 1.0)]
        ka: f64,
        /// Scattering angles per cut plane.
        #[arg(long, default_value_t = 37)]
        samples: usize,
        #[arg(long, default_value = "spectral")]
        formulation: String,
    },
}

fn parse_formulations(names: &[String]) -> Result<Vec<Formulation>> {
    names.iter().map(|s| s.parse()).collect()
}

fn config(g: &GlobalOpts, geometry: Geometry, freqs: Vec<f64>, formulations: Vec<Formulation>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::new(geometry, freqs, formulations);
    c.quadrature = QuadratureConfig::with_points(g.quad_order)?;
    c.filter = FilterOptions {
        sharpness: g.filter_sharpness,
        tol: g.filter_tol,
        bands_override: g.bands_override,
        solver: if g.filter_cg {
            InnerSolver::ConjugateGradient
        } else {
            InnerSolver::Cholesky
        },
    };
    c.solver = SolverOptions {
        tol: g.tol,
        max_iterations: g.max_iterations,
        restart: None,
    };
    c.method = g.solver.parse::<SolverMethod>()?;
    c.estimate = g.estimate;
    c.record_walltime = g.walltime;
    c.dump_operators = g.dump_operators.clone();
    c.dump_sparse = g.dump_sparse.clone();
    Ok(c)
}

fn emit(g: &GlobalOpts, records: &[Record]) -> Result<()> {
    match &g.output {
        Some(path) => write_csv(records, std::fs::File::create(path)?),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(records, &mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Mesh {
            command: MeshCommand::GenSphere {
                subdivisions,
                radius,
                mesh_out,
            },
        } => {
            let format = MeshFormat::from_path(&mesh_out)
                .ok_or_else(|| Error::Config(format!("unknown mesh extension: {}", mesh_out.display())))?;
            let mesh = generate_icosphere(subdivisions, radius)?;
            mesh.write(&mesh_out, format)?;
            eprintln!(
                "wrote {} ({} vertices, {} edges, {} triangles)",
                mesh_out.display(),
                mesh.num_vertices(),
                mesh.num_edges(),
                mesh.num_triangles()
            );
            Ok(())
        }
        Command::Run { command } => {
            let records = match command {
                RunCommand::CondFreq {
                    geometry,
                    freqs,
                    formulations,
                } => {
                    let c = config(g, geometry.parse()?, freqs, parse_formulations(&formulations)?)?;
                    cond_vs_frequency(&c)?
                }
                RunCommand::CondH {
                    subdivisions,
                    radius,
                    freq,
                    formulations,
                } => {
                    let geometries: Vec<Geometry> = subdivisions
                        .iter()
                        .map(|&s| Geometry::Icosphere { subdivisions: s, radius })
                        .collect();
                    let first = geometries.first().cloned().unwrap_or(Geometry::icosphere(1));
                    let c = config(g, first, vec![freq], parse_formulations(&formulations)?)?;
                    cond_vs_refinement(&c, &geometries)?.records
                }
                RunCommand::Scatter {
                    geometry,
                    freq,
                    formulations,
                    currents_dir,
                } => {
                    let mut c = config(g, geometry.parse()?, vec![freq], parse_formulations(&formulations)?)?;
                    c.currents_dir = currents_dir;
                    scattering_run(&c)?.records
                }
                RunCommand::RcsCheck {
                    geometry,
                    ka,
                    samples,
                    formulation,
                } => {
                    let c = config(g, geometry.parse()?, vec![1.0], vec![formulation.parse()?])?;
                    rcs_check(&c, ka, samples)?.records
                }
            };
            emit(g, &records)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
