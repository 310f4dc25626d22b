use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use romio_core::experiment::{alpha_sweep, run_experiment, write_experiment, ExperimentSpec};
use romio_core::io::{
    read_complex, read_grid, read_mask, write_atomic, write_complex, write_grid, write_mask,
    write_toml, ElementKind, StackHeader,
};
use romio_core::report::{singular_value_report, to_csv, with_mean_rows, MetricsRow};
use romio_core::{
    decompose, estimate_maps, map_error_stats, residual_phase_mse, select_uniform_subset,
    simulate_stack, Axis, Error, EstimateMaps, GeoMaps, PixelStatus, Result, RomioConfig,
    SearchGrid, SimulationConfig,
};

#[derive(Parser)]
#[command(
    name = "romio",
    version,
    about = "Robust low-rank filtering of InSAR phase stacks"
)]
struct Cli {
    /// Experiment spec (TOML); command-line flags override its values.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file for CSV reports).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate noisy stacks with ground truth.
    Simulate {
        /// Number of seeds, starting at --seed.
        #[arg(long)]
        repeat: Option<usize>,
        #[arg(long)]
        outlier_fraction: Option<f64>,
        #[arg(long)]
        snr_db: Option<f64>,
    },
    /// Split a stack into low-rank and sparse outlier parts.
    Decompose {
        /// Stack to decompose (header path or stem).
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Romio)]
        mode: Mode,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Periodogram estimation of elevation and deformation maps.
    Estimate {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Compare estimated maps (and optionally a filtered stack) with truth.
    Evaluate {
        /// Directory written by `estimate`.
        estimates: PathBuf,
        /// Directory holding `elevation` and `deformation` truth maps.
        #[arg(long)]
        truth: PathBuf,
        /// Filtered stack, for the residual-phase MSE.
        #[arg(long, requires = "clean")]
        stack: Option<PathBuf>,
        /// Noise-free reference stack.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long, default_value = "custom")]
        scenario: String,
        #[arg(long, default_value = "unknown")]
        method: String,
    },
    /// Keep a well-spread subset of the images.
    Subset {
        input: PathBuf,
        #[arg(long)]
        n_images: usize,
    },
    /// Normalised singular values of every mode unfolding, as CSV.
    Svreport { input: PathBuf },
    /// Run a full experiment from --spec.
    Experiment {
        /// Also run an α sweep of RoMIO at these values.
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Horpca,
    Romio,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    grid_elev_min: Option<f64>,
    #[arg(long)]
    grid_elev_max: Option<f64>,
    #[arg(long)]
    grid_elev_step: Option<f64>,
    #[arg(long)]
    grid_defo_min: Option<f64>,
    #[arg(long)]
    grid_defo_max: Option<f64>,
    #[arg(long)]
    grid_defo_step: Option<f64>,
    #[arg(long)]
    grid_refine: Option<usize>,
}

impl GridArgs {
    fn apply(&self, grid: &mut SearchGrid) {
        let set = |axis: &mut Axis, min: Option<f64>, max: Option<f64>, step: Option<f64>| {
            axis.min = min.unwrap_or(axis.min);
            axis.max = max.unwrap_or(axis.max);
            axis.step = step.unwrap_or(axis.step);
        };
        set(
            &mut grid.elevation,
            self.grid_elev_min,
            self.grid_elev_max,
            self.grid_elev_step,
        );
        set(
            &mut grid.deformation,
            self.grid_defo_min,
            self.grid_defo_max,
            self.grid_defo_step,
        );
        grid.refine = self.grid_refine.unwrap_or(grid.refine);
    }
}

fn load_spec(path: Option<&Path>) -> Result<ExperimentSpec> {
    match path {
        Some(p) => romio_core::io::read_toml(p),
        None => Ok(ExperimentSpec::default()),
    }
}

fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| Error::InvalidArgument("--out is required".into()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn provenance() -> String {
    format!("romio {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Serialize)]
struct DecomposeDiagnostics<'a> {
    mode: &'static str,
    input: String,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    mu: f64,
    gamma: f64,
    wall_seconds: f64,
    config: &'a RomioConfig,
    feasibility_residuals: &'a [f64],
}

fn run(cli: Cli) -> Result<()> {
    let mut spec = load_spec(cli.spec.as_deref())?;
    if let Some(seed) = cli.seed {
        spec.simulation.seed = seed;
    }
    let out = cli.out.as_deref();

    match cli.command {
        Command::Simulate {
            repeat,
            outlier_fraction,
            snr_db,
        } => {
            if let Some(r) = repeat {
                spec.repeat = r;
            }
            if let Some(p) = outlier_fraction {
                spec.simulation.outlier_fraction = p;
            }
            if let Some(s) = snr_db {
                spec.simulation.snr_db = s;
            }
            spec.validate()?;
            let dir = require_out(out)?;
            create_dir(dir)?;
            write_toml(&dir.join("spec.toml"), &spec)?;
            let meta = spec.geometry();
            for seed in spec.seeds() {
                let cfg = SimulationConfig {
                    seed,
                    ..spec.simulation.clone()
                };
                let sim = simulate_stack(&cfg, &meta)?;
                let sub = dir.join(format!("seed_{seed}"));
                create_dir(&sub)?;
                let header = |kind| {
                    StackHeader::new([0; 3], kind)
                        .with_seed(seed)
                        .with_provenance(provenance())
                };
                write_complex(
                    &sub.join("noisy"),
                    &sim.noisy,
                    header(ElementKind::Complex).with_metadata(&meta),
                )?;
                write_complex(
                    &sub.join("clean"),
                    &sim.clean,
                    header(ElementKind::Complex).with_metadata(&meta),
                )?;
                write_grid(
                    &sub.join("elevation"),
                    &sim.maps.elevation,
                    header(ElementKind::Real).with_units("m"),
                )?;
                let defo_units = match meta.motion_model {
                    romio_core::MotionModel::Linear => "mm/year",
                    romio_core::MotionModel::Seasonal { .. } => "mm",
                };
                write_grid(
                    &sub.join("deformation"),
                    &sim.maps.deformation,
                    header(ElementKind::Real).with_units(defo_units),
                )?;
                write_mask(
                    &sub.join("outliers"),
                    sim.noisy.dims(),
                    &sim.outlier_mask,
                    header(ElementKind::Mask),
                )?;
                eprintln!("wrote {}", sub.display());
            }
        }

        Command::Decompose {
            input,
            mode,
            alpha,
            mu,
            max_iter,
            tol,
        } => {
            let dir = require_out(out)?;
            let (g, header) = read_complex(&input)?;
            let mut cfg = match mode {
                Mode::Romio => spec.romio.clone(),
                Mode::Horpca => spec.horpca.clone(),
            };
            if let Some(a) = alpha {
                cfg.alpha = a;
                cfg.gamma = None;
            }
            if mu.is_some() {
                cfg.mu = mu;
            }
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = tol {
                cfg.feasibility_tol = t;
            }
            cfg.validate()?;
            create_dir(dir)?;
            let start = Instant::now();
            let res = decompose(&g, &cfg)?;
            let wall = start.elapsed().as_secs_f64();
            let tag = match mode {
                Mode::Romio => "romio",
                Mode::Horpca => "horpca",
            };
            let base = StackHeader {
                provenance: format!("{} {tag} of {}", provenance(), input.display()),
                ..header
            };
            write_complex(&dir.join("x_hat"), &res.x_hat, base.clone())?;
            write_complex(&dir.join("e_hat"), &res.e_hat, base)?;
            write_toml(
                &dir.join("diagnostics.toml"),
                &DecomposeDiagnostics {
                    mode: tag,
                    input: input.display().to_string(),
                    iterations: res.iterations,
                    converged: res.converged,
                    final_residual: res.final_residual(),
                    mu: res.mu,
                    gamma: res.gamma,
                    wall_seconds: wall,
                    config: &cfg,
                    feasibility_residuals: &res.feasibility_residuals,
                },
            )?;
            eprintln!(
                "{tag}: {} iterations, converged {}, residual {:.3e}",
                res.iterations,
                res.converged,
                res.final_residual()
            );
        }

        Command::Estimate { input, grid } => {
            let dir = require_out(out)?;
            let (g, header) = read_complex(&input)?;
            let meta = header.metadata.clone().ok_or_else(|| {
                Error::InvalidArgument("input stack has no acquisition metadata".into())
            })?;
            let mut search = spec.grid;
            grid.apply(&mut search);
            search.validate()?;
            create_dir(dir)?;
            let est = estimate_maps(&g, &meta, &search)?;
            write_toml(&dir.join("grid.toml"), &search)?;
            let h = |units: &str| {
                StackHeader::new([0; 3], ElementKind::Real)
                    .with_units(units)
                    .with_provenance(format!("{} estimate of {}", provenance(), input.display()))
            };
            write_grid(&dir.join("elevation"), &est.elevation, h("m"))?;
            write_grid(&dir.join("deformation"), &est.deformation, h("mm/year"))?;
            write_grid(&dir.join("objective"), &est.objective, h("1"))?;
            let valid: Vec<bool> = est
                .status
                .iter()
                .map(|&s| s != PixelStatus::Invalid)
                .collect();
            let (rows, cols) = est.elevation.shape();
            write_mask(
                &dir.join("valid"),
                [rows, cols, 1],
                &valid,
                StackHeader::new([0; 3], ElementKind::Mask),
            )?;
            eprintln!("{} of {} pixels valid", est.valid_count(), valid.len());
        }

        Command::Evaluate {
            estimates,
            truth,
            stack,
            clean,
            scenario,
            method,
        } => {
            let path = require_out(out)?;
            let (elevation, _) = read_grid(&estimates.join("elevation"))?;
            let (deformation, _) = read_grid(&estimates.join("deformation"))?;
            let (objective, _) = read_grid(&estimates.join("objective"))?;
            let (valid, _) = read_mask(&estimates.join("valid"))?;
            let est = EstimateMaps {
                elevation,
                deformation,
                objective,
                status: valid
                    .iter()
                    .map(|&v| {
                        if v {
                            PixelStatus::Valid
                        } else {
                            PixelStatus::Invalid
                        }
                    })
                    .collect(),
            };
            let truth_maps = GeoMaps::new(
                read_grid(&truth.join("elevation"))?.0,
                read_grid(&truth.join("deformation"))?.0,
            )?;
            let n_images = match (&stack, &clean) {
                (Some(s), _) => romio_core::io::read_header(s)?.dims[2],
                _ => 0,
            };
            let mut row = MetricsRow::new(&scenario, spec.simulation.seed, &method, n_images);
            if let (Some(s), Some(c)) = (&stack, &clean) {
                let (x, _) = read_complex(s)?;
                let (x_true, _) = read_complex(c)?;
                row.mse_rad2 = Some(residual_phase_mse(&x, &x_true)?);
            }
            match map_error_stats(&est, &truth_maps)? {
                Some(stats) => row = row.with_stats(&stats),
                None => eprintln!("no valid pixels; statistics left empty"),
            }
            write_atomic(path, to_csv(&with_mean_rows(&[row]))?.as_bytes())?;
        }

        Command::Subset { input, n_images } => {
            let dest = require_out(out)?;
            let (g, header) = read_complex(&input)?;
            let meta = header.metadata.clone().ok_or_else(|| {
                Error::InvalidArgument("input stack has no acquisition metadata".into())
            })?;
            let pick = select_uniform_subset(&meta, n_images)?;
            let sub_meta = meta.select_images(&pick)?;
            let h = StackHeader {
                metadata: Some(sub_meta),
                provenance: format!("{} images {pick:?} of {}", provenance(), input.display()),
                ..header
            };
            write_complex(dest, &g.select_images(&pick)?, h)?;
            eprintln!("kept images {pick:?}");
        }

        Command::Svreport { input } => {
            let path = require_out(out)?;
            let (g, _) = read_complex(&input)?;
            write_atomic(path, to_csv(&singular_value_report(&g)?)?.as_bytes())?;
        }

        Command::Experiment { alphas } => {
            if cli.spec.is_none() {
                return Err(Error::InvalidArgument("experiment needs --spec".into()));
            }
            let dir = require_out(out)?;
            let log = |line: &str| eprintln!("{line}");
            let result = run_experiment(&spec, log)?;
            let metrics = write_experiment(dir, &spec, &result)?;
            eprintln!("wrote {}", metrics.display());
            if !alphas.is_empty() {
                let points = alpha_sweep(&spec, &alphas, log)?;
                write_atomic(&dir.join("alpha_sweep.csv"), to_csv(&points)?.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
