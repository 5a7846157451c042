//! On-disk artifact formats: radio map JSON, report JSON, and the CSV
//! side-files used for plotting.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use fingerloc_core::eval::EvalReport;
use fingerloc_core::rssi_filter::FilteredSample;
use fingerloc_core::{Fingerprint, PathLossParams, Placement, ReferencePoint, RoomSpec};

use crate::config::Seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub zone: Option<usize>,
    pub rssi: Vec<f64>,
}

/// Persisted radio map: the survey geometry plus one fingerprint per RP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioMapFile {
    pub room: RoomSpec,
    pub placement: Placement,
    pub path_loss: PathLossParams,
    pub rps: Vec<RpRecord>,
}

impl RadioMapFile {
    pub fn from_rps(
        room: RoomSpec,
        placement: Placement,
        path_loss: PathLossParams,
        rps: &[ReferencePoint],
    ) -> anyhow::Result<Self> {
        let records = rps
            .iter()
            .map(|rp| {
                let fp = rp
                    .fingerprint
                    .as_ref()
                    .with_context(|| format!("RP {} has no fingerprint", rp.id))?;
                Ok(RpRecord {
                    id: rp.id,
                    x: rp.x,
                    y: rp.y,
                    zone: rp.zone,
                    rssi: fp.rssi_dbm.clone(),
                })
            })
            .collect::<anyhow::Result<_>>()?;
        Ok(RadioMapFile {
            room,
            placement,
            path_loss,
            rps: records,
        })
    }

    pub fn to_rps(&self) -> Vec<ReferencePoint> {
        self.rps
            .iter()
            .map(|r| ReferencePoint {
                id: r.id,
                x: r.x,
                y: r.y,
                zone: r.zone,
                fingerprint: Some(Fingerprint::new(r.rssi.clone())),
            })
            .collect()
    }
}

/// Evaluation report artifact; echoes the seeds that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub seeds: Seeds,
    pub baseline_mean_error_m: f64,
    pub report: EvalReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub const FILTERED_CSV_HEADER: &str = "timestamp_ms,source_id,rssi_dbm,rssi_filtered_dbm";

/// Raw-vs-filtered trace, one row per accepted sample.
pub fn filtered_trace_to_csv(samples: &[FilteredSample]) -> String {
    let mut out = String::from(FILTERED_CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.timestamp_ms, s.source_id, s.rssi_dbm, s.rssi_filtered_dbm
        ));
    }
    out
}

/// Per-zone, per-epoch training loss.
pub fn loss_history_to_csv(model: &fingerloc_core::position_net::PositionModel) -> String {
    let mut out = String::from("zone,epoch,loss\n");
    for (zone, zm) in &model.zones {
        for (epoch, loss) in zm.loss_history.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", zone, epoch + 1, loss));
        }
    }
    out
}

/// Actual-vs-estimated positions for scatter plotting.
pub fn scatter_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("true_x,true_y,pred_x,pred_y,error_m\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.truth.0, p.truth.1, p.predicted.0, p.predicted.1, p.error_m
        ));
    }
    out
}

/// Empirical error CDF samples.
pub fn error_cdf_to_csv(report: &EvalReport) -> String {
    let mut out = String::from("error_m,probability\n");
    let n = report.error_cdf_m.len();
    for (i, e) in report.error_cdf_m.iter().enumerate() {
        out.push_str(&format!("{},{}\n", e, (i + 1) as f64 / n as f64));
    }
    out
}
