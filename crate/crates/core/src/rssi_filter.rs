//! Scalar Kalman filtering of per-source RSSI streams, plus CSV trace parsing.
//!
//! Each signal source gets its own independent filter. The recursion per
//! measurement m is
//!
//! ```text
//! pc = c + pn
//! kg = pc / (pc + mn)
//! s' = s + kg (m - s)
//! c' = (1 - kg) pc
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_model::RssiSample;

/// Readings with |rssi| above this are treated as sensor garbage and dropped.
pub const MAX_PLAUSIBLE_RSSI_DBM: f64 = 200.0;

/// How the filter state is seeded before the first measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitState {
    /// Take the first accepted measurement as the initial state.
    FirstMeasurement,
    /// Start from a fixed dBm value.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanParams {
    /// Process noise pn (dBm²).
    pub process_noise: f64,
    /// Measurement noise mn (dBm²).
    pub measurement_noise: f64,
    pub init_state: InitState,
    /// Initial covariance (dBm²).
    pub init_cov: f64,
}

impl KalmanParams {
    pub fn new(
        process_noise: f64,
        measurement_noise: f64,
        init_state: InitState,
        init_cov: f64,
    ) -> Result<Self> {
        if process_noise.is_nan() || process_noise < 0.0 {
            return Err(Error::Config("process noise must be non-negative".to_string()));
        }
        if measurement_noise.is_nan() || measurement_noise <= 0.0 {
            return Err(Error::Config("measurement noise must be positive".to_string()));
        }
        if init_cov.is_nan() || init_cov < 0.0 {
            return Err(Error::Config("initial covariance must be non-negative".to_string()));
        }
        Ok(KalmanParams {
            process_noise,
            measurement_noise,
            init_state,
            init_cov,
        })
    }

    /// Covariance the recursion converges to under a constant input stream:
    /// the positive root of c² + pn·c − pn·mn = 0.
    pub fn steady_state_cov(&self) -> f64 {
        let pn = self.process_noise;
        let mn = self.measurement_noise;
        (-pn + crate::math::sqrt(pn * pn + 4.0 * pn * mn)) / 2.0
    }
}

impl Default for KalmanParams {
    /// Slow-varying state, unit-variance measurement.
    fn default() -> Self {
        KalmanParams {
            process_noise: 0.008,
            measurement_noise: 1.0,
            init_state: InitState::FirstMeasurement,
            init_cov: 1.0,
        }
    }
}

/// State estimate s (dBm) and covariance c (dBm²) for one RSSI stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KalmanState {
    pub s: f64,
    pub c: f64,
}

/// One predict/update cycle. Non-finite measurements are rejected with the
/// state left untouched.
pub fn kalman_step(state: &KalmanState, m: f64, params: &KalmanParams) -> Result<KalmanState> {
    if !m.is_finite() {
        return Err(Error::Domain(format!("non-finite measurement {m}")));
    }
    let pc = state.c + params.process_noise;
    let kg = pc / (pc + params.measurement_noise);
    Ok(KalmanState {
        s: state.s + kg * (m - state.s),
        c: (1.0 - kg) * pc,
    })
}

/// A raw sample together with its filtered value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredSample {
    pub timestamp_ms: u64,
    pub source_id: usize,
    pub rssi_dbm: f64,
    pub rssi_filtered_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    /// Filtered samples, sorted by timestamp then source id.
    pub samples: Vec<FilteredSample>,
    /// Count of non-finite or implausible readings that were dropped.
    pub dropped: usize,
}

/// Run one independent Kalman filter per source over the trace.
///
/// Samples must be in non-decreasing timestamp order within each source.
/// Non-finite or implausible readings are dropped and counted rather than
/// fed to the filter.
pub fn filter_trace(trace: &[RssiSample], params: &KalmanParams) -> Result<FilterOutput> {
    let mut states: BTreeMap<usize, (KalmanState, u64)> = BTreeMap::new();
    let mut samples = Vec::with_capacity(trace.len());
    let mut dropped = 0usize;

    for sample in trace {
        if let Some((_, last_ts)) = states.get(&sample.source_id) {
            if sample.timestamp_ms < *last_ts {
                return Err(Error::OutOfOrder {
                    source_id: sample.source_id,
                    timestamp_ms: sample.timestamp_ms,
                });
            }
        }
        if !sample.rssi_dbm.is_finite() || sample.rssi_dbm.abs() > MAX_PLAUSIBLE_RSSI_DBM {
            dropped += 1;
            continue;
        }
        let next = match states.get(&sample.source_id) {
            Some((state, _)) => kalman_step(state, sample.rssi_dbm, params)?,
            None => {
                let init = KalmanState {
                    s: match params.init_state {
                        InitState::FirstMeasurement => sample.rssi_dbm,
                        InitState::Fixed(v) => v,
                    },
                    c: params.init_cov,
                };
                kalman_step(&init, sample.rssi_dbm, params)?
            }
        };
        states.insert(sample.source_id, (next, sample.timestamp_ms));
        samples.push(FilteredSample {
            timestamp_ms: sample.timestamp_ms,
            source_id: sample.source_id,
            rssi_dbm: sample.rssi_dbm,
            rssi_filtered_dbm: next.s,
        });
    }

    samples.sort_by(|a, b| {
        (a.timestamp_ms, a.source_id).cmp(&(b.timestamp_ms, b.source_id))
    });
    Ok(FilterOutput { samples, dropped })
}

pub const TRACE_CSV_HEADER: &str = "timestamp_ms,source_id,rssi_dbm";

/// Parse a trace from CSV text with header `timestamp_ms,source_id,rssi_dbm`.
/// Errors name the 1-based line number of the offending row.
pub fn ingest_csv(text: &str) -> Result<Vec<RssiSample>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Format {
                line: 1,
                message: format!(
                    "unknown header {:?}, expected {:?}",
                    header.trim(),
                    TRACE_CSV_HEADER
                ),
            })
        }
        None => {
            return Err(Error::Format {
                line: 1,
                message: "empty input, expected a header row".to_string(),
            })
        }
    }

    let mut samples = Vec::new();
    let mut last_ts: BTreeMap<usize, u64> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let row = line.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse_err = |field: &str, value: &str| Error::Format {
            line: line_no,
            message: format!("invalid {field} value {value:?}"),
        };
        let timestamp_ms: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err("timestamp_ms", fields[0]))?;
        let source_id: usize = fields[1]
            .parse()
            .map_err(|_| parse_err("source_id", fields[1]))?;
        let rssi_dbm: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err("rssi_dbm", fields[2]))?;
        if !rssi_dbm.is_finite() {
            return Err(parse_err("rssi_dbm", fields[2]));
        }
        if let Some(prev) = last_ts.get(&source_id) {
            if timestamp_ms < *prev {
                return Err(Error::OutOfOrder {
                    source_id,
                    timestamp_ms,
                });
            }
        }
        last_ts.insert(source_id, timestamp_ms);
        samples.push(RssiSample {
            timestamp_ms,
            source_id,
            rssi_dbm,
        });
    }
    Ok(samples)
}

/// Render a raw trace back to the canonical CSV format.
pub fn trace_to_csv(trace: &[RssiSample]) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for s in trace {
        out.push_str(&format!("{},{},{}\n", s.timestamp_ms, s.source_id, s.rssi_dbm));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kalman_step_hand_computed() {
        // frozen hand calculation: pc = 1.01, kg = 1.01/2.01,
        // s' = -50 + (1.01/2.01)·2, c' = (1/2.01)·1.01
        let params = KalmanParams::new(0.01, 1.0, InitState::Fixed(-50.0), 1.0).unwrap();
        let state = KalmanState { s: -50.0, c: 1.0 };
        let next = kalman_step(&state, -48.0, &params).unwrap();
        assert_relative_eq!(next.s, -48.9950, epsilon = 1e-4);
        assert_relative_eq!(next.c, 0.50249, epsilon = 1e-4);
    }

    #[test]
    fn kalman_step_trusts_measurement_when_mn_tiny() {
        let params = KalmanParams::new(0.01, 1e-12, InitState::Fixed(0.0), 1.0).unwrap();
        let state = KalmanState { s: -50.0, c: 1.0 };
        let next = kalman_step(&state, -48.0, &params).unwrap();
        assert_relative_eq!(next.s, -48.0, epsilon = 1e-9);
    }

    #[test]
    fn kalman_step_ignores_measurement_when_frozen() {
        let params = KalmanParams::new(0.0, 1.0, InitState::Fixed(0.0), 0.0).unwrap();
        let state = KalmanState { s: -50.0, c: 0.0 };
        let next = kalman_step(&state, -10.0, &params).unwrap();
        assert_eq!(next.s, -50.0);
        assert_eq!(next.c, 0.0);
    }

    #[test]
    fn kalman_step_rejects_non_finite() {
        let params = KalmanParams::default();
        let state = KalmanState { s: -50.0, c: 1.0 };
        assert!(kalman_step(&state, f64::NAN, &params).is_err());
        assert!(kalman_step(&state, f64::INFINITY, &params).is_err());
    }

    #[test]
    fn gain_bounds_and_covariance_shrink() {
        let params = KalmanParams::default();
        let mut state = KalmanState { s: -50.0, c: 5.0 };
        for i in 0..100 {
            let pc = state.c + params.process_noise;
            let next = kalman_step(&state, -48.0 + (i % 3) as f64, &params).unwrap();
            let kg = pc / (pc + params.measurement_noise);
            assert!((0.0..1.0).contains(&kg));
            assert!(next.c < pc);
            assert!(next.c <= params.measurement_noise.min(pc));
            state = next;
        }
    }

    #[test]
    fn covariance_converges_to_steady_state() {
        let params = KalmanParams::default();
        let c_inf = params.steady_state_cov();
        let mut state = KalmanState { s: -50.0, c: 1.0 };
        for _ in 0..10_000 {
            state = kalman_step(&state, -50.0, &params).unwrap();
        }
        assert!((state.c - c_inf).abs() < 1e-9, "c={} c_inf={}", state.c, c_inf);
    }

    #[test]
    fn constant_input_converges_to_constant() {
        let params = KalmanParams::default();
        let mut state = KalmanState { s: -70.0, c: 1.0 };
        let mut prev_err = (state.s - (-50.0f64)).abs();
        for _ in 0..5_000 {
            state = kalman_step(&state, -50.0, &params).unwrap();
            let err = (state.s - (-50.0f64)).abs();
            assert!(err <= prev_err + 1e-12);
            prev_err = err;
        }
        assert!(prev_err < 1e-6);
    }

    #[test]
    fn filter_trace_empty() {
        let out = filter_trace(&[], &KalmanParams::default()).unwrap();
        assert!(out.samples.is_empty());
        assert_eq!(out.dropped, 0);
    }

    #[test]
    fn filter_trace_constant_is_identity_with_first_measurement_init() {
        let trace: Vec<RssiSample> = (0..20)
            .map(|i| RssiSample {
                timestamp_ms: i * 100,
                source_id: 0,
                rssi_dbm: -55.0,
            })
            .collect();
        let out = filter_trace(&trace, &KalmanParams::default()).unwrap();
        assert_eq!(out.samples.len(), 20);
        for s in &out.samples {
            assert_eq!(s.rssi_filtered_dbm, -55.0);
        }
    }

    #[test]
    fn filter_trace_equals_folding_kalman_step() {
        let params = KalmanParams::default();
        let trace: Vec<RssiSample> = (0..50)
            .map(|i| RssiSample {
                timestamp_ms: i * 10,
                source_id: 0,
                rssi_dbm: -60.0 + ((i * 7) % 5) as f64,
            })
            .collect();
        let out = filter_trace(&trace, &params).unwrap();

        let mut state = KalmanState {
            s: trace[0].rssi_dbm,
            c: params.init_cov,
        };
        for (i, sample) in trace.iter().enumerate() {
            state = kalman_step(&state, sample.rssi_dbm, &params).unwrap();
            assert_eq!(out.samples[i].rssi_filtered_dbm, state.s);
        }
    }

    #[test]
    fn filter_trace_keeps_sources_independent() {
        let params = KalmanParams::default();
        let mixed: Vec<RssiSample> = (0..30)
            .flat_map(|i| {
                [
                    RssiSample { timestamp_ms: i * 100, source_id: 0, rssi_dbm: -40.0 },
                    RssiSample { timestamp_ms: i * 100, source_id: 1, rssi_dbm: -80.0 },
                ]
            })
            .collect();
        let out = filter_trace(&mixed, &params).unwrap();
        for s in &out.samples {
            let expected = if s.source_id == 0 { -40.0 } else { -80.0 };
            assert_eq!(s.rssi_filtered_dbm, expected);
        }
    }

    #[test]
    fn filter_trace_rejects_out_of_order() {
        let trace = [
            RssiSample { timestamp_ms: 100, source_id: 0, rssi_dbm: -50.0 },
            RssiSample { timestamp_ms: 50, source_id: 0, rssi_dbm: -50.0 },
        ];
        assert!(matches!(
            filter_trace(&trace, &KalmanParams::default()),
            Err(Error::OutOfOrder { source_id: 0, timestamp_ms: 50 })
        ));
    }

    #[test]
    fn filter_trace_drops_garbage() {
        let trace = [
            RssiSample { timestamp_ms: 0, source_id: 0, rssi_dbm: -50.0 },
            RssiSample { timestamp_ms: 100, source_id: 0, rssi_dbm: -500.0 },
            RssiSample { timestamp_ms: 200, source_id: 0, rssi_dbm: -51.0 },
        ];
        let out = filter_trace(&trace, &KalmanParams::default()).unwrap();
        assert_eq!(out.dropped, 1);
        assert_eq!(out.samples.len(), 2);
    }

    #[test]
    fn ingest_header_only() {
        let samples = ingest_csv("timestamp_ms,source_id,rssi_dbm\n").unwrap();
        assert!(samples.is_empty());
    }

    #[test]
    fn ingest_round_trip() {
        let text = "timestamp_ms,source_id,rssi_dbm\n0,0,-50.5\n100,1,-60\n200,0,-51.25\n";
        let samples = ingest_csv(text).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[0], RssiSample { timestamp_ms: 0, source_id: 0, rssi_dbm: -50.5 });
        assert_eq!(samples[2].rssi_dbm, -51.25);
        assert_eq!(ingest_csv(&trace_to_csv(&samples)).unwrap(), samples);
    }

    #[test]
    fn ingest_reports_bad_line_number() {
        let text = "timestamp_ms,source_id,rssi_dbm\n0,0,-50\n100,0,-51\n200,0,abc\n";
        match ingest_csv(text) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_rejects_unknown_header() {
        assert!(matches!(
            ingest_csv("time,source,rssi\n"),
            Err(Error::Format { line: 1, .. })
        ));
    }
}
