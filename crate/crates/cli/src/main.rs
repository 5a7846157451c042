use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use fingerloc::config::ExperimentConfig;
use fingerloc::formats::{self, RadioMapFile, ReportFile};
use fingerloc::pipeline;
use fingerloc_core::eval::{baseline_mean_error, evaluate};
use fingerloc_core::position_net::{train, PositionModel};
use fingerloc_core::rssi_filter::{filter_trace, ingest_csv};
use fingerloc_core::zone_classifier::assign_zones;

#[derive(Parser)]
#[command(
    name = "fingerloc",
    about = "RSSI fingerprinting indoor-positioning pipeline",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Experiment config JSON; defaults apply for every missing field.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override the synthesis seed from the config.
    #[arg(long)]
    synthesis_seed: Option<u64>,
    /// Override the training seed from the config.
    #[arg(long)]
    training_seed: Option<u64>,
    /// Override the train/test split seed from the config.
    #[arg(long)]
    split_seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => formats::read_json(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.synthesis_seed {
            config.seeds.synthesis = seed;
        }
        if let Some(seed) = self.training_seed {
            config.seeds.training = seed;
        }
        if let Some(seed) = self.split_seed {
            config.seeds.split = seed;
        }
        config.validate().context("stage config")?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the source-placement problem and write the result JSON.
    Place {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short, default_value = "placement.json")]
        out: PathBuf,
    },
    /// Synthesize the radio map and the survey trace.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Placement JSON from `place`; defaults to the config placement.
        #[arg(long)]
        placement: Option<PathBuf>,
        #[arg(long, default_value = "radio_map.json")]
        out_map: PathBuf,
        #[arg(long, default_value = "trace.csv")]
        out_trace: PathBuf,
    },
    /// Kalman-filter a raw trace CSV into a raw-vs-filtered CSV.
    Filter {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short, default_value = "filtered.csv")]
        output: PathBuf,
    },
    /// Attach zone labels to a radio map.
    BuildDb {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        map: PathBuf,
        #[arg(long, short, default_value = "labeled_map.json")]
        out: PathBuf,
    },
    /// Train the per-zone position models from the seeded survey dataset.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        placement: Option<PathBuf>,
        #[arg(long, default_value = "model.json")]
        out_model: PathBuf,
        #[arg(long, default_value = "loss.csv")]
        out_loss: PathBuf,
    },
    /// Evaluate a trained model on the seeded test split.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        /// Labeled radio map used as the KNN database.
        #[arg(long)]
        map: PathBuf,
        #[arg(long, short, default_value = "report.json")]
        out: PathBuf,
    },
    /// Derive plot-data CSVs from an existing report (and optional filtered
    /// trace).
    Report {
        /// Report JSON produced by `evaluate` or `run`.
        #[arg(long)]
        report: PathBuf,
        /// Raw-vs-filtered CSV produced by `filter`; copied alongside the
        /// plot data when given.
        #[arg(long)]
        filtered: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the full pipeline and write every artifact.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn placement_from(
    config: &ExperimentConfig,
    file: &Option<PathBuf>,
) -> anyhow::Result<fingerloc_core::placement_opt::PlacementResult> {
    match file {
        Some(path) => formats::read_json(path).context("stage place"),
        None => pipeline::resolve_placement(config).context("stage place"),
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Place { config, out } => {
            let config = config.load()?;
            let result = pipeline::resolve_placement(&config).context("stage place")?;
            formats::write_json(&out, &result)?;
            println!(
                "placement objective {:.4} -> {}",
                result.best_objective,
                out.display()
            );
        }
        Command::Simulate {
            config,
            placement,
            out_map,
            out_trace,
        } => {
            let config = config.load()?;
            let placement = placement_from(&config, &placement)?;
            let dataset = pipeline::build_dataset(&config, &placement.best_placement)
                .context("stage dataset")?;
            let map = pipeline::build_labeled_map(&config, &dataset)
                .context("stage build-db")?;
            let file = RadioMapFile::from_rps(
                config.room,
                placement.best_placement.clone(),
                config.path_loss,
                &map,
            )?;
            formats::write_json(&out_map, &file)?;
            fs::write(
                &out_trace,
                fingerloc_core::rssi_filter::trace_to_csv(&dataset.trace),
            )?;
            println!(
                "{} RPs -> {}, {} samples -> {}",
                map.len(),
                out_map.display(),
                dataset.trace.len(),
                out_trace.display()
            );
        }
        Command::Filter {
            config,
            input,
            output,
        } => {
            let config = config.load()?;
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let trace = ingest_csv(&text).context("stage filter")?;
            let filtered = filter_trace(&trace, &config.kalman).context("stage filter")?;
            fs::write(&output, formats::filtered_trace_to_csv(&filtered.samples))?;
            println!(
                "filtered {} samples ({} dropped) -> {}",
                filtered.samples.len(),
                filtered.dropped,
                output.display()
            );
        }
        Command::BuildDb { config, map, out } => {
            let config = config.load()?;
            let file: RadioMapFile = formats::read_json(&map)?;
            let labeled = assign_zones(
                &file.to_rps(),
                &config.room,
                config.effective_zone_rows(),
                config.effective_zone_cols(),
            )
            .context("stage build-db")?;
            let out_file =
                RadioMapFile::from_rps(file.room, file.placement, file.path_loss, &labeled)?;
            formats::write_json(&out, &out_file)?;
            println!("labeled {} RPs -> {}", labeled.len(), out.display());
        }
        Command::Train {
            config,
            placement,
            out_model,
            out_loss,
        } => {
            let config = config.load()?;
            let placement = placement_from(&config, &placement)?;
            let dataset = pipeline::build_dataset(&config, &placement.best_placement)
                .context("stage dataset")?;
            let mut train_config = config.train;
            train_config.seed = config.seeds.training;
            let model = train(&dataset.train_set, &train_config).context("stage train")?;
            formats::write_json(&out_model, &model)?;
            fs::write(&out_loss, formats::loss_history_to_csv(&model))?;
            println!(
                "trained {} zone models -> {}",
                model.zones.len(),
                out_model.display()
            );
        }
        Command::Evaluate {
            config,
            model,
            map,
            out,
        } => {
            let config = config.load()?;
            let model: PositionModel = formats::read_json(&model)?;
            let map_file: RadioMapFile = formats::read_json(&map)?;
            let db = map_file.to_rps();
            let dataset = pipeline::build_dataset(&config, &map_file.placement)
                .context("stage dataset")?;
            let report = evaluate(&model, &db, &config.knn, &dataset.test_set)
                .context("stage evaluate")?;
            let baseline =
                baseline_mean_error(&db, &dataset.test_set).context("stage evaluate")?;
            let file = ReportFile {
                seeds: config.seeds,
                baseline_mean_error_m: baseline,
                report,
            };
            formats::write_json(&out, &file)?;
            println!(
                "mean error {:.3} m (baseline {:.3} m) -> {}",
                file.report.mean_error_m,
                baseline,
                out.display()
            );
        }
        Command::Report {
            report,
            filtered,
            out_dir,
        } => {
            let file: ReportFile = formats::read_json(&report)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(
                out_dir.join("scatter.csv"),
                formats::scatter_to_csv(&file.report),
            )?;
            fs::write(
                out_dir.join("error_cdf.csv"),
                formats::error_cdf_to_csv(&file.report),
            )?;
            if let Some(src) = filtered {
                fs::copy(&src, out_dir.join("filtered.csv"))
                    .with_context(|| format!("copying {}", src.display()))?;
            }
            println!("plot data -> {}", out_dir.display());
        }
        Command::Run { config, out_dir } => {
            let config = config.load()?;
            let artifacts = pipeline::run_experiment(&config)?;
            pipeline::write_artifacts(&config, &artifacts, &out_dir)?;
            println!(
                "mean error {:.3} m, baseline {:.3} m, {} test points -> {}",
                artifacts.report.mean_error_m,
                artifacts.baseline_mean_error_m,
                artifacts.report.points.len(),
                out_dir.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
