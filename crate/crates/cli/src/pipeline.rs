//! End-to-end experiment orchestration: placement → synthesis → traces →
//! filtering → labeled database → training → evaluation, with every stage
//! reusable on its own by the CLI subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use fingerloc_core::eval::{baseline_mean_error, evaluate, EvalReport};
use fingerloc_core::placement_opt::{
    optimize_placement, placement_objective, NeighborhoodSpec, PlacementResult,
};
use fingerloc_core::position_net::{train, PositionModel, TrainSample};
use fingerloc_core::radio_model::{build_rp_grid, generate_trace, synthesize_radio_map};
use fingerloc_core::rssi_filter::{filter_trace, trace_to_csv, FilterOutput};
use fingerloc_core::zone_classifier::{assign_zones, zone_of};
use fingerloc_core::{Fingerprint, Placement, ReferencePoint, RssiSample};

use crate::config::{ExperimentConfig, PlacementSpec};
use crate::formats;

/// Everything a full experiment run produces, before any file is written.
pub struct ExperimentArtifacts {
    pub placement: PlacementResult,
    pub radio_map: Vec<ReferencePoint>,
    pub trace: Vec<RssiSample>,
    pub filtered: FilterOutput,
    pub train_set: BTreeMap<usize, Vec<TrainSample>>,
    pub test_set: Vec<(Fingerprint, (f64, f64))>,
    pub model: PositionModel,
    pub report: EvalReport,
    pub baseline_mean_error_m: f64,
}

pub fn neighborhood_spec(config: &ExperimentConfig) -> anyhow::Result<NeighborhoodSpec> {
    Ok(match config.neighborhood_radius_m {
        Some(r) => NeighborhoodSpec::new(r)?,
        None => NeighborhoodSpec::from_grid(&config.room)?,
    })
}

/// Fixed placements are echoed with their objective value; `optimize` runs
/// the swarm.
pub fn resolve_placement(config: &ExperimentConfig) -> anyhow::Result<PlacementResult> {
    let rps = build_rp_grid(&config.room)?;
    let spec = neighborhood_spec(config)?;
    match &config.placement {
        PlacementSpec::Fixed(sources) => {
            let placement = Placement::new(sources.clone());
            let objective =
                placement_objective(&placement, &rps, &spec, &config.path_loss)?;
            Ok(PlacementResult {
                best_placement: placement,
                best_objective: objective,
                objective_history: vec![objective],
            })
        }
        PlacementSpec::Optimize => Ok(optimize_placement(
            &rps,
            &spec,
            &config.path_loss,
            &config.room,
            config.source_count,
            &config.pso,
        )?),
    }
}

/// Build the labeled offline database from the surveyed dataset. Each RP
/// contributes `db_entries_per_rp` entries (sub-group means of its filtered
/// training samples), which averages most of the measurement noise out of
/// the database while keeping enough entries per RP for a clear KNN vote.
pub fn build_labeled_map(
    config: &ExperimentConfig,
    dataset: &Dataset,
) -> anyhow::Result<Vec<ReferencePoint>> {
    let rps = build_rp_grid(&config.room)?;
    anyhow::ensure!(
        dataset.rp_fingerprints.len() == rps.len(),
        "dataset covers {} RPs, grid has {}",
        dataset.rp_fingerprints.len(),
        rps.len()
    );
    let mut entries = Vec::new();
    for (rp, fps) in rps.iter().zip(&dataset.rp_fingerprints) {
        for fp in fps {
            entries.push(ReferencePoint {
                id: entries.len(),
                x: rp.x,
                y: rp.y,
                zone: None,
                fingerprint: Some(fp.clone()),
            });
        }
    }
    Ok(assign_zones(
        &entries,
        &config.room,
        config.effective_zone_rows(),
        config.effective_zone_cols(),
    )?)
}

/// One-shot synthesized radio map (a single noisy draw per RP), kept as the
/// quick way to inspect what the propagation model predicts on the grid.
pub fn synthesized_map(
    config: &ExperimentConfig,
    placement: &Placement,
) -> anyhow::Result<Vec<ReferencePoint>> {
    let rps = build_rp_grid(&config.room)?;
    Ok(synthesize_radio_map(
        placement,
        &rps,
        &config.path_loss,
        config.noise_sigma_db,
        config.seeds.synthesis,
    )?)
}

/// Survey locations for data collection: the RP grid itself plus, when
/// enabled, the midpoint of every grid cell (off-grid test coverage).
pub fn survey_locations(config: &ExperimentConfig) -> anyhow::Result<Vec<(f64, f64)>> {
    let rps = build_rp_grid(&config.room)?;
    let mut locations: Vec<(f64, f64)> = rps.iter().map(|rp| (rp.x, rp.y)).collect();
    if config.include_midpoints {
        let (rows, cols) = (config.room.grid_rows, config.room.grid_cols);
        for row in 0..rows.saturating_sub(1) {
            for col in 0..cols.saturating_sub(1) {
                let a = &rps[row * cols + col];
                let b = &rps[(row + 1) * cols + col + 1];
                locations.push(((a.x + b.x) / 2.0, (a.y + b.y) / 2.0));
            }
        }
    }
    Ok(locations)
}

/// The trace RNG stream is offset from the radio-map stream so the map and
/// the online samples are independent draws of the same seed set.
fn trace_seed(config: &ExperimentConfig) -> u64 {
    config.seeds.synthesis.wrapping_add(1)
}

pub struct Dataset {
    pub locations: Vec<(f64, f64)>,
    pub trace: Vec<RssiSample>,
    pub filtered: FilterOutput,
    pub train_set: BTreeMap<usize, Vec<TrainSample>>,
    pub test_set: Vec<(Fingerprint, (f64, f64))>,
    /// Database fingerprints per RP, in RP id order: sub-group means of the
    /// RP's filtered training samples. These become the offline radio map.
    pub rp_fingerprints: Vec<Vec<Fingerprint>>,
}

/// All zones whose cell, expanded by `zone_overlap_m`, contains the location.
/// The location's own zone always comes first. The overlap gives every zone
/// model training coverage just past its boundary, where the classifier may
/// still send queries.
fn training_zones(
    config: &ExperimentConfig,
    zone_rows: usize,
    zone_cols: usize,
    loc: (f64, f64),
) -> anyhow::Result<Vec<usize>> {
    let own = zone_of(&config.room, zone_rows, zone_cols, loc.0, loc.1)?;
    let cell_w = config.room.width_m / zone_cols as f64;
    let cell_h = config.room.length_m / zone_rows as f64;
    let h = config.zone_overlap_m;
    let mut zones = vec![own];
    for row in 0..zone_rows {
        for col in 0..zone_cols {
            let zone = row * zone_cols + col;
            let inside_x = loc.0 >= col as f64 * cell_w - h
                && loc.0 <= (col + 1) as f64 * cell_w + h;
            let inside_y = loc.1 >= row as f64 * cell_h - h
                && loc.1 <= (row + 1) as f64 * cell_h + h;
            if zone != own && inside_x && inside_y {
                zones.push(zone);
            }
        }
    }
    Ok(zones)
}

/// Generate, filter, and split the survey samples.
///
/// Each survey location contributes `samples_per_point` Kalman-filtered
/// fingerprints; `train_fraction` of them (seeded shuffle) become training
/// samples labeled with the location's zone, the rest become test queries.
pub fn build_dataset(config: &ExperimentConfig, placement: &Placement) -> anyhow::Result<Dataset> {
    let locations = survey_locations(config)?;
    let trace = generate_trace(
        placement,
        &locations,
        &config.path_loss,
        config.noise_sigma_db,
        config.samples_per_point,
        trace_seed(config),
    )?;
    // Each location is its own survey session: the filter restarts there
    // instead of dragging the previous location's RSSI estimate along.
    let k = placement.len();
    let spp = config.samples_per_point;
    let mut filtered = FilterOutput {
        samples: Vec::with_capacity(trace.len()),
        dropped: 0,
    };
    for segment in trace.chunks(spp * k) {
        let out = filter_trace(segment, &config.kalman)?;
        filtered.dropped += out.dropped;
        filtered.samples.extend(out.samples);
    }
    anyhow::ensure!(
        filtered.dropped == 0,
        "synthetic trace unexpectedly contained {} dropped samples",
        filtered.dropped
    );
    let mut per_location: Vec<Vec<Fingerprint>> = vec![Vec::with_capacity(spp); locations.len()];
    for (tick, chunk) in filtered.samples.chunks_exact(k).enumerate() {
        let mut rssi = Vec::with_capacity(k);
        for (l, sample) in chunk.iter().enumerate() {
            anyhow::ensure!(
                sample.source_id == l,
                "trace grouping lost source alignment at tick {tick}"
            );
            rssi.push(sample.rssi_filtered_dbm);
        }
        per_location[tick / spp].push(Fingerprint::new(rssi));
    }

    let zone_rows = config.effective_zone_rows();
    let zone_cols = config.effective_zone_cols();
    let n_rps = config.room.grid_rows * config.room.grid_cols;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seeds.split);
    let mut train_set: BTreeMap<usize, Vec<TrainSample>> = BTreeMap::new();
    let mut test_set = Vec::new();
    let mut rp_fingerprints = Vec::with_capacity(n_rps);
    for (loc_idx, (loc, fingerprints)) in locations.iter().zip(per_location).enumerate() {
        let zones = training_zones(config, zone_rows, zone_cols, *loc)?;
        let n = fingerprints.len();
        let mut indices: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        let n_train =
            ((config.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let groups = config.db_entries_per_rp.min(n_train);
        let mut sums = vec![(vec![0.0; k], 0usize); groups];
        for (rank, &idx) in indices.iter().enumerate() {
            let fp = fingerprints[idx].clone();
            if rank < n_train {
                let (sum, count) = &mut sums[rank % groups];
                for (acc, v) in sum.iter_mut().zip(&fp.rssi_dbm) {
                    *acc += v;
                }
                *count += 1;
                for &zone in &zones {
                    train_set.entry(zone).or_default().push((fp.clone(), *loc));
                }
            } else {
                test_set.push((fp, *loc));
            }
        }
        if loc_idx < n_rps {
            rp_fingerprints.push(
                sums.into_iter()
                    .map(|(sum, count)| {
                        Fingerprint::new(sum.into_iter().map(|v| v / count as f64).collect())
                    })
                    .collect(),
            );
        }
    }
    Ok(Dataset {
        locations,
        trace,
        filtered,
        train_set,
        test_set,
        rp_fingerprints,
    })
}

/// Run every stage of the experiment. Errors carry the failing stage name.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<ExperimentArtifacts> {
    config.validate().context("stage config")?;
    let placement = resolve_placement(config).context("stage place")?;
    let dataset = build_dataset(config, &placement.best_placement).context("stage dataset")?;
    let radio_map = build_labeled_map(config, &dataset).context("stage build-db")?;

    let mut train_config = config.train;
    train_config.seed = config.seeds.training;
    let model = train(&dataset.train_set, &train_config).context("stage train")?;

    let report =
        evaluate(&model, &radio_map, &config.knn, &dataset.test_set).context("stage evaluate")?;
    let baseline = baseline_mean_error(&radio_map, &dataset.test_set).context("stage evaluate")?;

    Ok(ExperimentArtifacts {
        placement,
        radio_map,
        trace: dataset.trace,
        filtered: dataset.filtered,
        train_set: dataset.train_set,
        test_set: dataset.test_set,
        model,
        report,
        baseline_mean_error_m: baseline,
    })
}

/// Write the full artifact set into `out_dir`.
pub fn write_artifacts(
    config: &ExperimentConfig,
    artifacts: &ExperimentArtifacts,
    out_dir: &Path,
) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    formats::write_json(&out_dir.join("placement.json"), &artifacts.placement)?;
    let map_file = formats::RadioMapFile::from_rps(
        config.room,
        artifacts.placement.best_placement.clone(),
        config.path_loss,
        &artifacts.radio_map,
    )?;
    formats::write_json(&out_dir.join("radio_map.json"), &map_file)?;
    fs::write(out_dir.join("trace.csv"), trace_to_csv(&artifacts.trace))?;
    fs::write(
        out_dir.join("filtered.csv"),
        formats::filtered_trace_to_csv(&artifacts.filtered.samples),
    )?;
    formats::write_json(&out_dir.join("model.json"), &artifacts.model)?;
    fs::write(
        out_dir.join("loss.csv"),
        formats::loss_history_to_csv(&artifacts.model),
    )?;
    let report_file = formats::ReportFile {
        seeds: config.seeds,
        baseline_mean_error_m: artifacts.baseline_mean_error_m,
        report: artifacts.report.clone(),
    };
    formats::write_json(&out_dir.join("report.json"), &report_file)?;
    fs::write(
        out_dir.join("scatter.csv"),
        formats::scatter_to_csv(&artifacts.report),
    )?;
    fs::write(
        out_dir.join("error_cdf.csv"),
        formats::error_cdf_to_csv(&artifacts.report),
    )?;
    Ok(())
}
