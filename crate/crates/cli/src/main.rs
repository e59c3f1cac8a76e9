use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wnrefl_cli::commands::{self, BemMode, MeshKind};
use wnrefl_cli::config::{Method, Reflector, RunConfig};
use wnrefl_core::{Error, Result};

#[derive(Parser)]
#[command(name = "wnrefl", version, about = "Wavenumber-domain reflection matrices and nonlocal BEM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; overrides --preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Output directory [default: <out-root>/<command>]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "WNREFL_OUT", default_value = "wnrefl-out")]
    out_root: PathBuf,
    #[arg(long, value_enum)]
    reflector: Option<Reflector>,
    #[arg(long)]
    frequency: Option<f64>,
    #[arg(long)]
    sources: Option<usize>,
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Fixed LASSO penalty instead of held-out selection.
    #[arg(long)]
    lambda: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::preset(&self.preset)?,
        };
        if let Some(r) = self.reflector {
            cfg.geometry.reflector = r;
        }
        if let Some(f) = self.frequency {
            cfg.medium.f = f;
        }
        if let Some(q) = self.sources {
            cfg.sources.count = q;
        }
        if let Some(m) = self.modes {
            cfg.grid.modes = m;
        }
        if let Some(m) = self.method {
            cfg.estimator.method = m;
        }
        if self.lambda.is_some() {
            cfg.estimator.lambda = self.lambda;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| self.out_root.join(name))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a preset as TOML.
    Preset { name: String },
    /// Generate and export a mesh.
    Mesh {
        #[arg(long, value_enum)]
        kind: MeshKind,
        #[command(flatten)]
        common: Common,
    },
    /// Rigid-reflector BEM for every source: incident and reflected pressures.
    Dataset {
        #[command(flatten)]
        common: Common,
    },
    /// Estimate the reflection matrix from a dataset.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Directivity maps for one-hot incident modes.
    Directivity {
        #[arg(long)]
        estimate: PathBuf,
        /// Comma-separated incidence angles in degrees.
        #[arg(long, value_delimiter = ',')]
        angles: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Spatial admittance on the open surface from a reflection matrix.
    Admittance {
        #[arg(long)]
        estimate: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sound field on the two vertical sections.
    Bem {
        #[arg(long, value_enum)]
        mode: BemMode,
        #[arg(long)]
        admittance: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Cosine similarity and MSE of a BEM run against a reference run.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn done(dir: &Path) {
    println!("wrote {}", dir.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preset { name } => print!("{}", RunConfig::preset(&name)?.to_toml()),
        Command::Mesh { kind, common } => {
            let out = common.out("mesh");
            let m = commands::mesh(&common.config()?, kind, &out)?;
            println!("{} elements", m.metadata["elements"]);
            done(&out);
        }
        Command::Dataset { common } => {
            let out = common.out("dataset");
            commands::dataset(&common.config()?, &out)?;
            done(&out);
        }
        Command::Estimate { dataset, common } => {
            let out = common.out("estimate");
            let m = commands::estimate(&common.config()?, &dataset, &out)?;
            println!(
                "diagonal energy ratio {}, spectral norm {}",
                m.metadata["diagonal_energy_ratio"], m.metadata["spectral_norm"]
            );
            done(&out);
        }
        Command::Directivity { estimate, angles, common } => {
            let mut cfg = common.config()?;
            if let Some(a) = angles {
                cfg.directivity.angles_deg = a;
                cfg.validate()?;
            }
            let out = common.out("directivity");
            match commands::directivity(&cfg, &estimate, &out)? {
                Some(_) => done(&out),
                None => println!("no angles, nothing written"),
            }
        }
        Command::Admittance { estimate, common } => {
            let out = common.out("admittance");
            commands::admittance(&common.config()?, &estimate, &out)?;
            done(&out);
        }
        Command::Bem { mode, admittance, common } => {
            let out = common.out("bem");
            commands::bem(&common.config()?, mode, admittance.as_deref(), &out)?;
            done(&out);
        }
        Command::Compare { reference, candidate, out } => {
            let (metrics, _) = commands::compare(&reference, &candidate, out.as_deref())?;
            println!("{:<8} {:>12} {:>12}", "section", "cosine", "mse");
            for m in metrics {
                println!("{:<8} {:>12.6} {:>12.4e}", m.name, m.cosine_similarity, m.mse);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::from(match e {
                Error::Io(_) => 3,
                _ => 1,
            })
        }
    }
}
