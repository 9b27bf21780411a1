use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dilute::experiments::{ExperimentConfig, PotentialSpec};
use dilute::{Error, ErrorKind, Result};

mod commands;
mod table;

use table::Table;

/// Scattering constants, lower-bound checks and trial-state Monte Carlo
/// for dilute Bose gases with two- and three-body interactions.
#[derive(Debug, Parser)]
#[command(name = "dilute", version)]
struct Cli {
    /// TOML experiment config; potentials and settings not given as flags
    /// are read from here.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output file (directory for `report`); standard output when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Potentials {
    /// Two-body potential: `zero`, `soft_sphere:AMP,R`, `gaussian:AMP,WIDTH,R` or `table:PATH`.
    #[arg(long = "v", value_name = "SPEC", value_parser = parse_spec)]
    two_body: Option<PotentialSpec>,
    /// Three-body potential: as for `--v`, plus `grid6:PATH`.
    #[arg(long = "w", value_name = "SPEC", value_parser = parse_spec)]
    three_body: Option<PotentialSpec>,
}

#[derive(Debug, Args, Clone, Default)]
struct GridArgs {
    #[arg(long)]
    particles: Option<usize>,
    /// Nodes per axis.
    #[arg(long)]
    nodes: Option<usize>,
    /// Box side.
    #[arg(long = "box")]
    side: Option<f64>,
    /// Eigensolver residual tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-body scattering length.
    Scatter2 {
        #[command(flatten)]
        potentials: Potentials,
        /// Write the cut-off profile `f_ℓ` as two-column text.
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
        /// Cut-off length for `--table`; defaults to four support radii.
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Three-body scattering energy.
    Scatter3 {
        #[command(flatten)]
        potentials: Potentials,
        /// Write the cut-off hyperradial profile as two-column text.
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
        /// Cut-off length for `--table`; defaults to four support radii.
        #[arg(long)]
        ell: Option<f64>,
    },
    /// Nonnegativity of the Dyson gap operators.
    DysonCheck {
        #[command(flatten)]
        potentials: Potentials,
        /// Softener scale `R`.
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        /// Constant in the three-body coefficient `b(1 − cR₀/R₁)`.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Finite elements in the radial sector.
        #[arg(long, default_value_t = 2000)]
        elements: usize,
    },
    /// Temple lower bound against the exact grid ground state.
    Temple {
        #[command(flatten)]
        potentials: Potentials,
        #[command(flatten)]
        grid: GridArgs,
        /// Kinetic fractions to try.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1")]
        eps: Vec<f64>,
    },
    /// Exact ground state on the grid.
    Exact {
        #[command(flatten)]
        potentials: Potentials,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Trial-state Monte Carlo.
    Jastrow {
        #[command(flatten)]
        potentials: Potentials,
        #[arg(long)]
        particles: Option<usize>,
        /// Box side; exclusive with `--rho`.
        #[arg(long = "box", conflicts_with = "rho")]
        side: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        ell1: Option<f64>,
        #[arg(long)]
        ell2: Option<f64>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        batches: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        /// Write every `--dump-every`-th configuration of the first chain.
        #[arg(long, value_name = "PATH")]
        dump_samples: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        dump_every: usize,
    },
    /// Sweep over the config's scaling and density grid.
    Sweep,
    /// Summary and plot data for a sweep CSV.
    Report {
        /// CSV written by `sweep`.
        csv: PathBuf,
    },
}

fn parse_spec(s: &str) -> std::result::Result<PotentialSpec, String> {
    let (kind, args) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> std::result::Result<Vec<f64>, String> {
        args.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect()
    };
    match kind {
        "zero" => Ok(PotentialSpec::Zero),
        "soft_sphere" => match nums()?.as_slice() {
            &[amplitude, radius] => Ok(PotentialSpec::SoftSphere { amplitude, radius }),
            _ => Err("soft_sphere takes AMP,R".into()),
        },
        "gaussian" | "truncated_gaussian" => match nums()?.as_slice() {
            &[amplitude, width, radius] => Ok(PotentialSpec::TruncatedGaussian {
                amplitude,
                width,
                radius,
            }),
            _ => Err("gaussian takes AMP,WIDTH,R".into()),
        },
        "table" if !args.is_empty() => Ok(PotentialSpec::Table { path: args.into() }),
        "grid6" if !args.is_empty() => Ok(PotentialSpec::Grid6 { path: args.into() }),
        _ => Err(format!("unknown potential `{s}`")),
    }
}

/// Settings shared by every subcommand after merging flags into the config.
pub struct Context {
    pub config: Option<ExperimentConfig>,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Context {
    fn potentials(&self, p: &Potentials) -> (PotentialSpec, PotentialSpec) {
        let from_cfg =
            |f: fn(&ExperimentConfig) -> &PotentialSpec| self.config.as_ref().map(f).cloned().unwrap_or_default();
        (
            p.two_body.clone().unwrap_or_else(|| from_cfg(|c| &c.two_body)),
            p.three_body.clone().unwrap_or_else(|| from_cfg(|c| &c.three_body)),
        )
    }
}

fn emit(out: Option<&Path>, table: &Table) -> Result<()> {
    let text = table.to_csv()?;
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidInput("--workers must be positive".into()));
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = Context {
        seed: cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0),
        workers: cli.workers,
        config,
    };
    let out = cli.out.as_deref();
    let table = match cli.command {
        Command::Scatter2 { potentials, table, ell } => {
            let (v, _) = ctx.potentials(&potentials);
            commands::scatter2(&v, table.as_deref(), ell)?
        }
        Command::Scatter3 { potentials, table, ell } => {
            let (_, w) = ctx.potentials(&potentials);
            commands::scatter3(&w, table.as_deref(), ell)?
        }
        Command::DysonCheck {
            potentials,
            r,
            c,
            elements,
        } => {
            let (v, w) = ctx.potentials(&potentials);
            commands::dyson_check(&v, &w, r, c, elements)?
        }
        Command::Temple { potentials, grid, eps } => {
            let (v, w) = ctx.potentials(&potentials);
            commands::temple(&v, &w, &commands::grid_settings(&ctx, &grid), &eps, ctx.seed)?
        }
        Command::Exact { potentials, grid } => {
            let (v, w) = ctx.potentials(&potentials);
            commands::exact(&v, &w, &commands::grid_settings(&ctx, &grid), ctx.seed)?
        }
        Command::Jastrow {
            potentials,
            particles,
            side,
            rho,
            ell1,
            ell2,
            chains,
            sweeps,
            batches,
            step,
            dump_samples,
            dump_every,
        } => {
            let (v, w) = ctx.potentials(&potentials);
            let args = commands::JastrowArgs {
                particles,
                side,
                rho,
                ell1,
                ell2,
                chains,
                sweeps,
                batches,
                step,
                dump: dump_samples.map(|p| (p, dump_every)),
            };
            commands::jastrow(&ctx, &v, &w, &args)?
        }
        Command::Sweep => {
            let mut cfg = ctx
                .config
                .clone()
                .ok_or_else(|| Error::Config("sweep needs --config".into()))?;
            cfg.seed = ctx.seed;
            if let Some(n) = ctx.workers {
                cfg.workers = n;
            }
            let rows = dilute::experiments::run_sweep(&cfg)?;
            let target = out.map(Path::to_path_buf).or(cfg.output.clone());
            let mut buf = Vec::new();
            dilute::experiments::write_csv(&rows, &mut buf)?;
            match target {
                Some(path) => fs::write(&path, &buf).map_err(|source| Error::Io { path, source })?,
                None => std::io::stdout().write_all(&buf).map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })?,
            }
            return Ok(());
        }
        Command::Report { csv } => {
            let rows = dilute::experiments::read_csv(&csv)?;
            let report = dilute::experiments::emit_report(&rows, out)?;
            print!("{}", report.summary);
            return Ok(());
        }
    };
    emit(out, &table)
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
            match e.kind() {
                ErrorKind::Validation => ExitCode::from(1),
                ErrorKind::Numerical => ExitCode::from(2),
            }
        }
    }
}
