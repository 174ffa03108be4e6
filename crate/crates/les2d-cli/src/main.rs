//! Command-line driver for the les2d experiment pipeline. Every command
//! reads the shared key/value configuration (plus `--set` overrides) and
//! works inside a run directory.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

use les2d::checkpoint::{read_checkpoint, write_checkpoint};
use les2d::closures::{ClosureModel, NeuralVariant};
use les2d::dataset::SnapshotDataset;
use les2d::diagnostics::energy_spectrum;
use les2d::pipeline::calibrate::calibrate_smagorinsky;
use les2d::pipeline::data::generate_training_data;
use les2d::pipeline::decay::{decay_reference, run_decaying_experiment};
use les2d::pipeline::ensemble::run_ensemble;
use les2d::pipeline::kolmogorov::run_kolmogorov_experiment;
use les2d::pipeline::output;
use les2d::pipeline::skewdiag::skew_term_diagnostics;
use les2d::pipeline::training::train_closure;
use les2d::pipeline::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "les2d",
    about = "Structure-preserving 2D LES closure-modeling experiments",
    version
)]
struct Cli {
    /// Plain-text key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key (repeatable), e.g. --set seed=3.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Run directory for all inputs and outputs.
    #[arg(long, global = true, default_value = "runs/default")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate fine reference runs and filtered training datasets.
    GenData,
    /// Sweep the Smagorinsky constant against the training data.
    CalibrateSmag {
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Train a closure (cnn | div | skew) on the generated datasets.
    Train {
        #[arg(long)]
        variant: String,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Decaying-turbulence evaluation of all available closures.
    RunDecay {
        #[arg(long)]
        resolution: Option<usize>,
        /// Smagorinsky constant override (default: calibrated checkpoint).
        #[arg(long)]
        cs: Option<f64>,
        /// Also run the dynamic Smagorinsky model.
        #[arg(long)]
        with_dyn_smag: bool,
    },
    /// Kolmogorov-flow evaluation of all available closures.
    RunKolmogorov {
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        cs: Option<f64>,
    },
    /// Train an ensemble of replicas and evaluate their consistency.
    RunEnsemble {
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 5)]
        replicas: usize,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Energy spectrum of one dataset snapshot.
    Spectrum {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_name = "FILE")]
        out_file: Option<PathBuf>,
    },
    /// Term-wise diagnostics of a trained skew-symmetric closure.
    SkewDiag {
        #[arg(long)]
        resolution: Option<usize>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    for item in &cli.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got '{item}'"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_variant(name: &str) -> Result<NeuralVariant> {
    match name {
        "cnn" => Ok(NeuralVariant::Cnn),
        "div" => Ok(NeuralVariant::Div),
        "skew" => Ok(NeuralVariant::Skew),
        other => bail!("unknown variant '{other}' (expected cnn, div or skew)"),
    }
}

fn pick_resolution(cfg: &ExperimentConfig, requested: Option<usize>) -> Result<usize> {
    match requested {
        Some(r) if cfg.coarse_resolutions.contains(&r) => Ok(r),
        Some(r) => bail!(
            "resolution {r} not in configured coarse_resolutions {:?}",
            cfg.coarse_resolutions
        ),
        None => Ok(*cfg.coarse_resolutions.last().expect("validated non-empty")),
    }
}

fn dataset_path(dir: &Path, resolution: usize, sim: usize) -> PathBuf {
    dir.join(format!("data_r{resolution}_sim{sim}.lesd"))
}

fn checkpoint_path(dir: &Path, name: &str, resolution: usize) -> PathBuf {
    dir.join(format!("{name}_r{resolution}.lesp"))
}

fn load_datasets(dir: &Path, resolution: usize) -> Result<Vec<SnapshotDataset>> {
    let mut datasets = Vec::new();
    for sim in 0.. {
        let path = dataset_path(dir, resolution, sim);
        if !path.exists() {
            break;
        }
        datasets.push(SnapshotDataset::read(&path)?);
    }
    if datasets.is_empty() {
        bail!(
            "no datasets for resolution {resolution} in {} (run gen-data first)",
            dir.display()
        );
    }
    Ok(datasets)
}

fn smagorinsky_constant(dir: &Path, resolution: usize, flag: Option<f64>) -> Result<f64> {
    if let Some(cs) = flag {
        return Ok(cs);
    }
    let path = checkpoint_path(dir, "smag", resolution);
    if path.exists() {
        match read_checkpoint(&path)? {
            ClosureModel::Smagorinsky { cs } => return Ok(cs),
            other => bail!(
                "{} holds a {:?}, not a Smagorinsky model",
                path.display(),
                other
            ),
        }
    }
    bail!(
        "no calibrated Smagorinsky constant for resolution {resolution}; \
         run calibrate-smag or pass --cs"
    )
}

/// Gather every closure with an artifact in the run directory, plus the
/// parameter-free ones.
fn gather_closures(
    dir: &Path,
    resolution: usize,
    cs: f64,
    with_dyn_smag: bool,
) -> Result<Vec<(String, ClosureModel)>> {
    let mut list = vec![
        ("nc".to_string(), ClosureModel::NoClosure),
        ("smag".to_string(), ClosureModel::Smagorinsky { cs }),
    ];
    if with_dyn_smag {
        list.push(("dyn-smag".to_string(), ClosureModel::DynamicSmagorinsky));
    }
    for name in ["cnn", "div", "skew"] {
        let path = checkpoint_path(dir, name, resolution);
        if path.exists() {
            let model = read_checkpoint(&path)?;
            if let ClosureModel::Cnn { spec, theta } = &model {
                list.push((
                    "cnn-c".to_string(),
                    ClosureModel::CnnClipped {
                        spec: spec.clone(),
                        theta: theta.clone(),
                    },
                ));
            }
            list.push((name.to_string(), model));
        }
    }
    Ok(list)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating run directory {}", cli.out.display()))?;
    output::write_config_snapshot(&cli.out, &cfg)?;

    match &cli.command {
        Command::GenData => {
            let data = generate_training_data(&cfg)?;
            for (resolution, sets) in &data.per_resolution {
                for (sim, ds) in sets.iter().enumerate() {
                    let path = dataset_path(&cli.out, *resolution, sim);
                    ds.write(&path)?;
                    println!(
                        "wrote {} ({} snapshots at {}x{})",
                        path.display(),
                        ds.len(),
                        ds.nx,
                        ds.ny
                    );
                }
            }
        }

        Command::CalibrateSmag { resolution } => {
            let resolution = pick_resolution(&cfg, *resolution)?;
            let datasets = load_datasets(&cli.out, resolution)?;
            let result = calibrate_smagorinsky(&datasets, cfg.t_train);
            let csv: String = std::iter::once("cs,log_spectrum_distance_sq".to_string())
                .chain(result.sweep.iter().map(|(cs, e)| format!("{cs},{e}")))
                .collect::<Vec<_>>()
                .join("\n");
            std::fs::write(cli.out.join(format!("calibration_r{resolution}.csv")), csv)?;
            let model = ClosureModel::Smagorinsky { cs: result.best_cs };
            write_checkpoint(&model, &checkpoint_path(&cli.out, "smag", resolution))?;
            println!("calibrated Cs = {:.2} at {resolution}^2", result.best_cs);
        }

        Command::Train {
            variant,
            resolution,
        } => {
            let variant = parse_variant(variant)?;
            let resolution = pick_resolution(&cfg, *resolution)?;
            let datasets = load_datasets(&cli.out, resolution)?;
            let seed = cfg.training_init_seed(variant as u64);
            let trained = train_closure(&datasets, variant, &cfg, seed)?;
            let path = checkpoint_path(&cli.out, variant.name(), resolution);
            write_checkpoint(&trained.to_closure_model(), &path)?;
            output::write_loss_history_csv(
                &cli.out
                    .join(format!("{}_r{resolution}_loss.csv", variant.name())),
                &trained.history,
            )?;
            let last = trained.history.last();
            println!(
                "trained {} at {resolution}^2: relative loss {:.4} -> {}",
                variant.name(),
                last.map(|h| h.relative_loss).unwrap_or(f64::NAN),
                path.display()
            );
        }

        Command::RunDecay {
            resolution,
            cs,
            with_dyn_smag,
        } => {
            let resolution = pick_resolution(&cfg, *resolution)?;
            let cs = smagorinsky_constant(&cli.out, resolution, *cs)?;
            let closures = gather_closures(&cli.out, resolution, cs, *with_dyn_smag)?;
            let report = run_decaying_experiment(closures, resolution, &cfg)?;
            let dir = cli.out.join(format!("decay_r{resolution}"));
            output::write_decay_report(&dir, &report)?;
            println!("decay report in {}", dir.display());
            for outcome in &report.outcomes {
                match outcome.blowup {
                    None => println!("  {}: completed", outcome.name),
                    Some(e) => println!("  {}: unstable at t = {:.4}", outcome.name, e.t),
                }
            }
        }

        Command::RunKolmogorov { resolution, cs } => {
            let resolution = pick_resolution(&cfg, *resolution)?;
            let cs = smagorinsky_constant(&cli.out, resolution, *cs)?;
            let closures = gather_closures(&cli.out, resolution, cs, false)?;
            let report = run_kolmogorov_experiment(closures, resolution, &cfg)?;
            let dir = cli.out.join(format!("kolmogorov_r{resolution}"));
            output::write_kolmogorov_report(&dir, &report)?;
            println!("kolmogorov report in {}", dir.display());
        }

        Command::RunEnsemble {
            variant,
            replicas,
            resolution,
        } => {
            let variant = parse_variant(variant)?;
            let resolution = pick_resolution(&cfg, *resolution)?;
            let datasets = load_datasets(&cli.out, resolution)?;
            let report = run_ensemble(variant, *replicas, &datasets, resolution, &cfg)?;
            let dir = cli
                .out
                .join(format!("ensemble_{}_r{resolution}", variant.name()));
            output::write_ensemble_report(&dir, &report)?;
            println!(
                "ensemble report in {} ({}/{} stable)",
                dir.display(),
                report.stable_count(),
                report.replicas.len()
            );
        }

        Command::Spectrum {
            dataset,
            index,
            out_file,
        } => {
            let ds = SnapshotDataset::read(dataset)?;
            if *index >= ds.len() {
                bail!(
                    "dataset holds {} snapshots, index {index} out of range",
                    ds.len()
                );
            }
            let spec = energy_spectrum(&ds.velocities[*index]);
            let path = out_file.clone().unwrap_or_else(|| {
                cli.out.join(format!(
                    "spectrum_{}_{index}.csv",
                    dataset.file_stem().unwrap_or_default().to_string_lossy()
                ))
            });
            output::write_spectrum_csv(&path, &spec)?;
            println!("wrote {}", path.display());
        }

        Command::SkewDiag { resolution } => {
            let resolution = pick_resolution(&cfg, *resolution)?;
            let path = checkpoint_path(&cli.out, "skew", resolution);
            let (spec, theta) = match read_checkpoint(&path)? {
                ClosureModel::Skew { spec, theta, .. } => (spec, theta),
                other => bail!("{} holds a {:?}, not a skew model", path.display(), other),
            };
            let reference = decay_reference(&cfg, resolution, cfg.eval_seed())?;
            let report = skew_term_diagnostics(&spec, &theta, &reference, cfg.t_train);
            let dir = cli.out.join(format!("skewdiag_r{resolution}"));
            output::write_skewdiag_report(&dir, &report)?;
            println!("skew diagnostics in {}", dir.display());
        }
    }
    Ok(())
}
