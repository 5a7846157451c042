//! Experiment configuration file schema. Every field has a default, so an
//! empty JSON object `{}` is a valid config describing the reference
//! experiment.

use fingerloc_core::placement_opt::PsoConfig;
use fingerloc_core::position_net::TrainConfig;
use fingerloc_core::rssi_filter::KalmanParams;
use fingerloc_core::zone_classifier::KnnConfig;
use fingerloc_core::{PathLossParams, RoomSpec};
use serde::{Deserialize, Serialize};

/// The three named randomness streams; every output artifact echoes them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub synthesis: u64,
    pub training: u64,
    pub split: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            synthesis: 1,
            training: 2,
            split: 3,
        }
    }
}

/// Either a fixed source placement or "solve the placement problem first".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementSpec {
    Optimize,
    Fixed(Vec<(f64, f64)>),
}

impl Default for PlacementSpec {
    /// The reference three-source placement for the 7x4 room.
    fn default() -> Self {
        PlacementSpec::Fixed(vec![(1.5, 1.5), (4.0, 2.5), (7.0, 1.5)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub room: RoomSpec,
    pub path_loss: PathLossParams,
    pub placement: PlacementSpec,
    /// Number of sources to place when `placement` is `optimize`.
    pub source_count: usize,
    pub noise_sigma_db: f64,
    /// Noisy fingerprints generated per survey location.
    pub samples_per_point: usize,
    /// Fraction of each location's samples used for training.
    pub train_fraction: f64,
    /// Also survey the midpoints between adjacent grid points; their samples
    /// join the same train/test split.
    pub include_midpoints: bool,
    pub kalman: KalmanParams,
    pub knn: KnnConfig,
    pub zone_rows: usize,
    pub zone_cols: usize,
    /// Survey locations within this margin of a zone boundary also join the
    /// neighboring zone's training set, so each zone model stays accurate for
    /// queries the classifier places just across the boundary.
    pub zone_overlap_m: f64,
    /// Database fingerprints stored per RP (sub-group means of its training
    /// samples). Matching the classifier's k lets a query at an RP collect a
    /// unanimous vote from its own RP.
    pub db_entries_per_rp: usize,
    /// Neighborhood radius for the placement objective; derived from the RP
    /// grid spacing when absent.
    pub neighborhood_radius_m: Option<f64>,
    pub pso: PsoConfig,
    pub train: TrainConfig,
    /// Train one global model instead of one per zone (ablation mode).
    pub single_model: bool,
    pub seeds: Seeds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            room: RoomSpec {
                width_m: 7.0,
                length_m: 4.0,
                grid_rows: 3,
                grid_cols: 6,
                margin_m: 0.5,
            },
            path_loss: PathLossParams::default(),
            placement: PlacementSpec::default(),
            source_count: 3,
            noise_sigma_db: 2.0,
            samples_per_point: 50,
            train_fraction: 0.8,
            include_midpoints: true,
            kalman: KalmanParams::default(),
            knn: KnnConfig::default(),
            zone_rows: 3,
            zone_cols: 2,
            zone_overlap_m: 0.75,
            db_entries_per_rp: 3,
            neighborhood_radius_m: None,
            pso: PsoConfig::default(),
            train: TrainConfig::default(),
            single_model: false,
            seeds: Seeds::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        RoomSpec::new(
            self.room.width_m,
            self.room.length_m,
            self.room.grid_rows,
            self.room.grid_cols,
            self.room.margin_m,
        )?;
        PathLossParams::new(self.path_loss.rssi0_dbm, self.path_loss.d0_m, self.path_loss.alpha)?;
        KalmanParams::new(
            self.kalman.process_noise,
            self.kalman.measurement_noise,
            self.kalman.init_state,
            self.kalman.init_cov,
        )?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            anyhow::bail!("train_fraction must lie in (0, 1)");
        }
        if self.samples_per_point < 2 {
            anyhow::bail!("samples_per_point must be at least 2 to allow a split");
        }
        if self.effective_zone_rows() == 0 || self.effective_zone_cols() == 0 {
            anyhow::bail!("zone grid must be at least 1x1");
        }
        if !(self.zone_overlap_m >= 0.0 && self.zone_overlap_m.is_finite()) {
            anyhow::bail!("zone_overlap_m must be finite and non-negative");
        }
        if self.db_entries_per_rp == 0 {
            anyhow::bail!("db_entries_per_rp must be at least 1");
        }
        if let PlacementSpec::Fixed(sources) = &self.placement {
            if sources.is_empty() {
                anyhow::bail!("fixed placement must contain at least one source");
            }
            for &(x, y) in sources {
                if !self.room.contains(x, y) {
                    anyhow::bail!("fixed source ({x}, {y}) lies outside the room");
                }
            }
        } else if self.source_count == 0 {
            anyhow::bail!("source_count must be at least 1");
        }
        Ok(())
    }

    pub fn effective_zone_rows(&self) -> usize {
        if self.single_model {
            1
        } else {
            self.zone_rows
        }
    }

    pub fn effective_zone_cols(&self) -> usize {
        if self.single_model {
            1
        } else {
            self.zone_cols
        }
    }
}
