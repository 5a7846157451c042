//! Log-distance path-loss prediction, reference-point grids, and seeded
//! synthetic radio-map / trace generation.
//!
//! The propagation model is `rssi0 - 10·alpha·log10(d/d0)`; synthetic
//! shadowing is i.i.d. Gaussian in dB drawn from a seeded generator, so a
//! zero noise sigma makes synthesis exactly deterministic.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Milliseconds between consecutive samples in a generated trace.
pub const TRACE_SAMPLE_INTERVAL_MS: u64 = 100;

/// Parameters of the log-distance path-loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Reference signal strength (dBm) at distance `d0_m`.
    pub rssi0_dbm: f64,
    /// Reference distance in meters, fixed per deployment.
    pub d0_m: f64,
    /// Path-loss exponent; larger means faster decay with distance.
    pub alpha: f64,
}

impl PathLossParams {
    pub fn new(rssi0_dbm: f64, d0_m: f64, alpha: f64) -> Result<Self> {
        if !rssi0_dbm.is_finite() {
            return Err(Error::Config("rssi0 must be finite".to_string()));
        }
        if d0_m.is_nan() || d0_m <= 0.0 {
            return Err(Error::Config("d0 must be positive".to_string()));
        }
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(Error::Config("alpha must be positive".to_string()));
        }
        Ok(PathLossParams {
            rssi0_dbm,
            d0_m,
            alpha,
        })
    }
}

impl Default for PathLossParams {
    /// Typical indoor values; tune `alpha` against measured data when available.
    fn default() -> Self {
        PathLossParams {
            rssi0_dbm: -40.0,
            d0_m: 1.0,
            alpha: 2.5,
        }
    }
}

/// Room rectangle plus the reference-point grid laid out inside it.
///
/// `width_m` spans the x axis, `length_m` the y axis. The grid has
/// `grid_cols` columns along x and `grid_rows` rows along y, inset from the
/// walls by `margin_m` on every side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub width_m: f64,
    pub length_m: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub margin_m: f64,
}

impl RoomSpec {
    pub fn new(
        width_m: f64,
        length_m: f64,
        grid_rows: usize,
        grid_cols: usize,
        margin_m: f64,
    ) -> Result<Self> {
        if width_m.is_nan() || width_m <= 0.0 || length_m.is_nan() || length_m <= 0.0 {
            return Err(Error::Config("room dimensions must be positive".to_string()));
        }
        if grid_rows * grid_cols == 0 {
            return Err(Error::Config("grid must contain at least one point".to_string()));
        }
        if margin_m < 0.0 || 2.0 * margin_m >= width_m || 2.0 * margin_m >= length_m {
            return Err(Error::Config("margin leaves no usable area".to_string()));
        }
        Ok(RoomSpec {
            width_m,
            length_m,
            grid_rows,
            grid_cols,
            margin_m,
        })
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width_m).contains(&x) && (0.0..=self.length_m).contains(&y)
    }

    /// Center-to-center spacing between adjacent grid points, (dx, dy).
    pub fn grid_spacing(&self) -> (f64, f64) {
        let dx = if self.grid_cols > 1 {
            (self.width_m - 2.0 * self.margin_m) / (self.grid_cols - 1) as f64
        } else {
            0.0
        };
        let dy = if self.grid_rows > 1 {
            (self.length_m - 2.0 * self.margin_m) / (self.grid_rows - 1) as f64
        } else {
            0.0
        };
        (dx, dy)
    }
}

/// Ordered vector of RSSI values (dBm), one per signal source.
///
/// Index `l` always refers to source `l` of the active placement; the
/// ordering is fixed so features never permute between training and
/// inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub rssi_dbm: Vec<f64>,
}

impl Fingerprint {
    pub fn new(rssi_dbm: Vec<f64>) -> Self {
        Fingerprint { rssi_dbm }
    }

    pub fn len(&self) -> usize {
        self.rssi_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rssi_dbm.is_empty()
    }
}

/// A surveyed reference point of the radio map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub zone: Option<usize>,
    pub fingerprint: Option<Fingerprint>,
}

/// Coordinates of the k signal sources, in canonical source order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub sources: Vec<(f64, f64)>,
}

impl Placement {
    pub fn new(sources: Vec<(f64, f64)>) -> Self {
        Placement { sources }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }
}

/// One raw RSSI reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RssiSample {
    pub timestamp_ms: u64,
    pub source_id: usize,
    pub rssi_dbm: f64,
}

/// Log-distance path-loss prediction at distance `d` meters.
pub fn predict_rssi(params: &PathLossParams, d: f64) -> Result<f64> {
    if !d.is_finite() || d <= 0.0 {
        return Err(Error::Domain(format!(
            "distance must be positive and finite, got {d}"
        )));
    }
    Ok(params.rssi0_dbm - 10.0 * params.alpha * math::log10(d / params.d0_m))
}

/// Euclidean distance between two fingerprints in RSSI space.
pub fn fingerprint_distance(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let sum: f64 = a
        .rssi_dbm
        .iter()
        .zip(&b.rssi_dbm)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(math::sqrt(sum))
}

/// Lay out `grid_rows × grid_cols` reference points evenly inside the room,
/// `margin_m` in from each wall. Ids are row-major, row 0 at the lowest y.
pub fn build_rp_grid(room: &RoomSpec) -> Result<Vec<ReferencePoint>> {
    RoomSpec::new(
        room.width_m,
        room.length_m,
        room.grid_rows,
        room.grid_cols,
        room.margin_m,
    )?;
    let usable_w = room.width_m - 2.0 * room.margin_m;
    let usable_l = room.length_m - 2.0 * room.margin_m;
    let mut rps = Vec::with_capacity(room.grid_rows * room.grid_cols);
    for row in 0..room.grid_rows {
        let y = if room.grid_rows > 1 {
            room.margin_m + usable_l * row as f64 / (room.grid_rows - 1) as f64
        } else {
            room.margin_m + usable_l / 2.0
        };
        for col in 0..room.grid_cols {
            let x = if room.grid_cols > 1 {
                room.margin_m + usable_w * col as f64 / (room.grid_cols - 1) as f64
            } else {
                room.margin_m + usable_w / 2.0
            };
            rps.push(ReferencePoint {
                id: row * room.grid_cols + col,
                x,
                y,
                zone: None,
                fingerprint: None,
            });
        }
    }
    Ok(rps)
}

/// Noiseless fingerprint of position (x, y) under the path-loss model.
/// Errors if the position coincides with a source.
pub fn ideal_fingerprint(
    placement: &Placement,
    params: &PathLossParams,
    x: f64,
    y: f64,
) -> Result<Fingerprint> {
    let mut rssi = Vec::with_capacity(placement.len());
    for &(sx, sy) in &placement.sources {
        let d = math::hypot(x - sx, y - sy);
        if d == 0.0 {
            return Err(Error::Domain(format!(
                "point ({x}, {y}) coincides with a signal source"
            )));
        }
        rssi.push(predict_rssi(params, d)?);
    }
    Ok(Fingerprint::new(rssi))
}

/// Fill in each reference point's fingerprint from the path-loss model plus
/// Gaussian shadowing of std `noise_sigma_db` drawn from the seeded
/// generator. `noise_sigma_db == 0` performs no draws at all.
pub fn synthesize_radio_map(
    placement: &Placement,
    rps: &[ReferencePoint],
    params: &PathLossParams,
    noise_sigma_db: f64,
    seed: u64,
) -> Result<Vec<ReferencePoint>> {
    if placement.is_empty() {
        return Err(Error::Config("placement must contain at least one source".to_string()));
    }
    if noise_sigma_db.is_nan() || noise_sigma_db < 0.0 {
        return Err(Error::Config("noise sigma must be non-negative".to_string()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = if noise_sigma_db > 0.0 {
        Some(Normal::new(0.0, noise_sigma_db).expect("sigma checked above"))
    } else {
        None
    };
    let mut out = Vec::with_capacity(rps.len());
    for rp in rps {
        let mut fp = ideal_fingerprint(placement, params, rp.x, rp.y)?;
        if let Some(n) = &noise {
            for v in &mut fp.rssi_dbm {
                *v += n.sample(&mut rng);
            }
        }
        let mut rp = rp.clone();
        rp.fingerprint = Some(fp);
        out.push(rp);
    }
    Ok(out)
}

/// Emit `samples_per_point` noisy RSSI samples per path point and source,
/// with monotone timestamps. An empty path yields an empty trace.
pub fn generate_trace(
    placement: &Placement,
    true_path: &[(f64, f64)],
    params: &PathLossParams,
    noise_sigma_db: f64,
    samples_per_point: usize,
    seed: u64,
) -> Result<Vec<RssiSample>> {
    if samples_per_point == 0 {
        return Err(Error::Config("samples_per_point must be at least 1".to_string()));
    }
    if noise_sigma_db.is_nan() || noise_sigma_db < 0.0 {
        return Err(Error::Config("noise sigma must be non-negative".to_string()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = if noise_sigma_db > 0.0 {
        Some(Normal::new(0.0, noise_sigma_db).expect("sigma checked above"))
    } else {
        None
    };
    let mut trace = Vec::with_capacity(true_path.len() * samples_per_point * placement.len());
    let mut tick: u64 = 0;
    for &(x, y) in true_path {
        let ideal = ideal_fingerprint(placement, params, x, y)?;
        for _ in 0..samples_per_point {
            let timestamp_ms = tick * TRACE_SAMPLE_INTERVAL_MS;
            for (source_id, base) in ideal.rssi_dbm.iter().enumerate() {
                let mut rssi_dbm = *base;
                if let Some(n) = &noise {
                    rssi_dbm += n.sample(&mut rng);
                }
                trace.push(RssiSample {
                    timestamp_ms,
                    source_id,
                    rssi_dbm,
                });
            }
            tick += 1;
        }
    }
    Ok(trace)
}

/// Euclidean distance in the room plane.
pub fn planar_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    math::hypot(a.0 - b.0, a.1 - b.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> PathLossParams {
        PathLossParams::new(-40.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn predict_rssi_reference_points() {
        let p = params();
        assert_relative_eq!(predict_rssi(&p, 1.0).unwrap(), -40.0);
        assert_relative_eq!(predict_rssi(&p, 10.0).unwrap(), -60.0);
        assert_relative_eq!(predict_rssi(&p, 100.0).unwrap(), -80.0);
    }

    #[test]
    fn predict_rssi_rejects_nonpositive_distance() {
        let p = params();
        assert!(matches!(predict_rssi(&p, 0.0), Err(Error::Domain(_))));
        assert!(matches!(predict_rssi(&p, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn predict_rssi_monotone_decreasing() {
        let p = params();
        let mut prev = predict_rssi(&p, 0.1).unwrap();
        for i in 1..200 {
            let d = 0.1 + i as f64 * 0.25;
            let v = predict_rssi(&p, d).unwrap();
            assert!(v < prev, "not decreasing at d={d}");
            prev = v;
        }
    }

    #[test]
    fn fingerprint_distance_examples() {
        let a = Fingerprint::new(alloc::vec![-50.0, -60.0, -70.0]);
        assert_relative_eq!(fingerprint_distance(&a, &a).unwrap(), 0.0);
        let b = Fingerprint::new(alloc::vec![-50.0]);
        let c = Fingerprint::new(alloc::vec![-53.0]);
        assert_relative_eq!(fingerprint_distance(&b, &c).unwrap(), 3.0);
        let d = Fingerprint::new(alloc::vec![0.0, 0.0]);
        let e = Fingerprint::new(alloc::vec![3.0, 4.0]);
        assert_relative_eq!(fingerprint_distance(&d, &e).unwrap(), 5.0);
    }

    #[test]
    fn fingerprint_distance_shape_error() {
        let a = Fingerprint::new(alloc::vec![0.0]);
        let b = Fingerprint::new(alloc::vec![0.0, 1.0]);
        assert!(matches!(
            fingerprint_distance(&a, &b),
            Err(Error::ShapeMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn grid_reference_layout_has_18_points() {
        let room = RoomSpec::new(7.0, 4.0, 3, 6, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        assert_eq!(rps.len(), 18);
        for rp in &rps {
            assert!(room.contains(rp.x, rp.y));
            assert!(rp.x > 0.0 && rp.x < room.width_m);
            assert!(rp.y > 0.0 && rp.y < room.length_m);
        }
        // row-major ids
        for (i, rp) in rps.iter().enumerate() {
            assert_eq!(rp.id, i);
        }
    }

    #[test]
    fn grid_single_point_at_center() {
        let room = RoomSpec::new(4.0, 6.0, 1, 1, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        assert_eq!(rps.len(), 1);
        assert_relative_eq!(rps[0].x, 2.0);
        assert_relative_eq!(rps[0].y, 3.0);
    }

    #[test]
    fn grid_2x2_with_margin_hits_inner_square() {
        let room = RoomSpec::new(2.0, 2.0, 2, 2, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        let coords: Vec<(f64, f64)> = rps.iter().map(|rp| (rp.x, rp.y)).collect();
        assert_eq!(
            coords,
            alloc::vec![(0.5, 0.5), (1.5, 0.5), (0.5, 1.5), (1.5, 1.5)]
        );
    }

    #[test]
    fn synthesis_noiseless_matches_model() {
        let placement = Placement::new(alloc::vec![(0.0, 0.0)]);
        let p = params();
        let rps = alloc::vec![
            ReferencePoint { id: 0, x: 0.0, y: 1.0, zone: None, fingerprint: None },
            ReferencePoint { id: 1, x: 0.0, y: 10.0, zone: None, fingerprint: None },
        ];
        let map = synthesize_radio_map(&placement, &rps, &p, 0.0, 7).unwrap();
        let fp0 = map[0].fingerprint.as_ref().unwrap();
        let fp1 = map[1].fingerprint.as_ref().unwrap();
        assert_relative_eq!(fp0.rssi_dbm[0], -40.0);
        assert_relative_eq!(fp1.rssi_dbm[0], -60.0);
    }

    #[test]
    fn synthesis_seed_reproducible() {
        let placement = Placement::new(alloc::vec![(0.0, 0.0), (5.0, 5.0)]);
        let p = params();
        let room = RoomSpec::new(7.0, 4.0, 3, 6, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        let a = synthesize_radio_map(&placement, &rps, &p, 2.0, 42).unwrap();
        let b = synthesize_radio_map(&placement, &rps, &p, 2.0, 42).unwrap();
        assert_eq!(a, b);
        let c = synthesize_radio_map(&placement, &rps, &p, 2.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthesis_rejects_rp_on_source() {
        let placement = Placement::new(alloc::vec![(1.0, 1.0)]);
        let p = params();
        let rps = alloc::vec![ReferencePoint {
            id: 0,
            x: 1.0,
            y: 1.0,
            zone: None,
            fingerprint: None
        }];
        assert!(matches!(
            synthesize_radio_map(&placement, &rps, &p, 0.0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn trace_noiseless_constant() {
        let placement = Placement::new(alloc::vec![(0.0, 0.0)]);
        let p = params();
        let trace = generate_trace(&placement, &[(0.0, 10.0)], &p, 0.0, 3, 0).unwrap();
        assert_eq!(trace.len(), 3);
        for s in &trace {
            assert_relative_eq!(s.rssi_dbm, -60.0);
            assert_eq!(s.source_id, 0);
        }
        assert!(trace.windows(2).all(|w| w[0].timestamp_ms < w[1].timestamp_ms));
    }

    #[test]
    fn trace_empty_path_is_empty() {
        let placement = Placement::new(alloc::vec![(0.0, 0.0)]);
        let trace = generate_trace(&placement, &[], &params(), 1.0, 5, 0).unwrap();
        assert!(trace.is_empty());
    }

    #[test]
    fn trace_seed_reproducible() {
        let placement = Placement::new(alloc::vec![(0.0, 0.0), (3.0, 1.0)]);
        let path = [(1.0, 1.0), (2.0, 2.0)];
        let a = generate_trace(&placement, &path, &params(), 2.0, 4, 9).unwrap();
        let b = generate_trace(&placement, &path, &params(), 2.0, 4, 9).unwrap();
        assert_eq!(a, b);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn distance_is_a_metric(
                a in proptest::collection::vec(-100.0f64..0.0, 3),
                b in proptest::collection::vec(-100.0f64..0.0, 3),
                c in proptest::collection::vec(-100.0f64..0.0, 3),
            ) {
                let fa = Fingerprint::new(a);
                let fb = Fingerprint::new(b);
                let fc = Fingerprint::new(c);
                let dab = fingerprint_distance(&fa, &fb).unwrap();
                let dba = fingerprint_distance(&fb, &fa).unwrap();
                let dac = fingerprint_distance(&fa, &fc).unwrap();
                let dcb = fingerprint_distance(&fc, &fb).unwrap();
                prop_assert!(dab >= 0.0);
                prop_assert!((dab - dba).abs() < 1e-12);
                prop_assert!(dab <= dac + dcb + 1e-9);
                let daa = fingerprint_distance(&fa, &fa).unwrap();
                prop_assert_eq!(daa, 0.0);
            }

            #[test]
            fn path_loss_monotone(d1 in 0.01f64..50.0, d2 in 0.01f64..50.0) {
                prop_assume!(d2 > d1);
                let p = PathLossParams::new(-40.0, 1.0, 2.5).unwrap();
                prop_assert!(predict_rssi(&p, d2).unwrap() < predict_rssi(&p, d1).unwrap());
            }
        }
    }
}
