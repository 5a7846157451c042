//! Fingerprint-dissimilarity objective over signal-source placements and a
//! particle swarm maximizer for it.
//!
//! The objective sums, over every reference point i and every neighbor j
//! within radius r of i, the RSSI-space distance between the noiseless
//! fingerprints at i and j. Better placements spread neighboring
//! fingerprints apart, which is what makes fingerprint matching work.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_model::{
    fingerprint_distance, ideal_fingerprint, planar_distance, PathLossParams, Placement,
    ReferencePoint, RoomSpec,
};

/// Penalty returned to the swarm when a candidate placement puts a source
/// exactly on a reference point. Large enough to dominate any real objective.
const COINCIDENCE_PENALTY: f64 = -1e12;

/// Neighborhood radius r: RPj is a neighbor of RPi iff dist(RPi, RPj) < r.
/// The inequality is strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSpec {
    pub radius_m: f64,
}

impl NeighborhoodSpec {
    pub fn new(radius_m: f64) -> Result<Self> {
        if radius_m.is_nan() || radius_m <= 0.0 {
            return Err(Error::Config("neighborhood radius must be positive".to_string()));
        }
        Ok(NeighborhoodSpec { radius_m })
    }

    /// 1.5× the larger grid spacing: wide enough to include diagonal grid
    /// neighbors, narrow enough to exclude two-step ones.
    pub fn from_grid(room: &RoomSpec) -> Result<Self> {
        let (dx, dy) = room.grid_spacing();
        let spacing = if dx > dy { dx } else { dy };
        if spacing == 0.0 {
            return Err(Error::Config(
                "cannot derive a neighborhood radius from a single-point grid".to_string(),
            ));
        }
        NeighborhoodSpec::new(1.5 * spacing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub swarm_size: usize,
    pub max_iters: usize,
    /// Inertia weight.
    pub inertia: f64,
    /// Cognitive (personal-best) acceleration.
    pub cognitive: f64,
    /// Social (global-best) acceleration.
    pub social: f64,
    /// Velocity clamp as a fraction of each dimension's range.
    pub velocity_clamp: f64,
    pub seed: u64,
}

impl Default for PsoConfig {
    /// Constriction-style defaults; stable on most smooth objectives.
    fn default() -> Self {
        PsoConfig {
            swarm_size: 30,
            max_iters: 300,
            inertia: 0.729,
            cognitive: 1.49445,
            social: 1.49445,
            velocity_clamp: 0.2,
            seed: 0,
        }
    }
}

impl PsoConfig {
    fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 || self.max_iters == 0 {
            return Err(Error::Config("swarm_size and max_iters must be at least 1".to_string()));
        }
        if self.inertia < 0.0 || self.cognitive < 0.0 || self.social < 0.0 {
            return Err(Error::Config("PSO coefficients must be non-negative".to_string()));
        }
        if self.velocity_clamp.is_nan() || self.velocity_clamp <= 0.0 {
            return Err(Error::Config("velocity clamp must be positive".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub best_placement: Placement,
    pub best_objective: f64,
    /// Global best after initialization and after each iteration; non-decreasing.
    pub objective_history: Vec<f64>,
}

/// Axis-aligned search region D for the source coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn of_room(room: &RoomSpec) -> Self {
        Bounds {
            x_min: 0.0,
            x_max: room.width_m,
            y_min: 0.0,
            y_max: room.length_m,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.x_max.partial_cmp(&self.x_min) != Some(core::cmp::Ordering::Greater)
            || self.y_max.partial_cmp(&self.y_min) != Some(core::cmp::Ordering::Greater)
        {
            return Err(Error::Config("degenerate search bounds".to_string()));
        }
        Ok(())
    }
}

/// Indices j ≠ i whose geometric distance to RPi is strictly below r.
pub fn neighborhood(
    rps: &[ReferencePoint],
    i: usize,
    spec: &NeighborhoodSpec,
) -> Result<Vec<usize>> {
    let rp = rps.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: rps.len(),
    })?;
    Ok(rps
        .iter()
        .enumerate()
        .filter(|(j, other)| {
            *j != i && planar_distance((rp.x, rp.y), (other.x, other.y)) < spec.radius_m
        })
        .map(|(j, _)| j)
        .collect())
}

/// Σᵢ Σ_{j∈A(i)} E(Θᵢ, Θⱼ) with noiseless model fingerprints.
///
/// Both (i, j) and (j, i) contribute, matching the double sum as written.
pub fn placement_objective(
    placement: &Placement,
    rps: &[ReferencePoint],
    spec: &NeighborhoodSpec,
    params: &PathLossParams,
) -> Result<f64> {
    let fingerprints: Vec<_> = rps
        .iter()
        .map(|rp| ideal_fingerprint(placement, params, rp.x, rp.y))
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..rps.len() {
        for j in neighborhood(rps, i, spec)? {
            total += fingerprint_distance(&fingerprints[i], &fingerprints[j])?;
        }
    }
    Ok(total)
}

/// Maximize `objective` over placements of `k` sources inside `bounds` with
/// a global-best particle swarm. Deterministic for a fixed seed.
///
/// Particles are flat 2k-dimensional vectors (x₁, y₁, …, x_k, y_k);
/// out-of-bounds components are clamped and their velocity zeroed. An
/// objective evaluation error marks that particle position infeasible; if
/// every initial particle is infeasible the optimization fails.
pub fn pso_optimize<F>(
    objective: F,
    bounds: &Bounds,
    k: usize,
    config: &PsoConfig,
) -> Result<PlacementResult>
where
    F: Fn(&Placement) -> Result<f64>,
{
    config.validate()?;
    bounds.validate()?;
    if k == 0 {
        return Err(Error::Config("need at least one source".to_string()));
    }

    let dims = 2 * k;
    let lo = |d: usize| if d.is_multiple_of(2) { bounds.x_min } else { bounds.y_min };
    let hi = |d: usize| if d.is_multiple_of(2) { bounds.x_max } else { bounds.y_max };
    let vmax: Vec<f64> = (0..dims)
        .map(|d| config.velocity_clamp * (hi(d) - lo(d)))
        .collect();

    let decode = |pos: &[f64]| {
        Placement::new(pos.chunks_exact(2).map(|c| (c[0], c[1])).collect())
    };
    let eval = |pos: &[f64]| objective(&decode(pos)).ok();

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let mut positions: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(config.swarm_size);
    for _ in 0..config.swarm_size {
        let pos: Vec<f64> = (0..dims).map(|d| rng.random_range(lo(d)..=hi(d))).collect();
        let vel: Vec<f64> = (0..dims)
            .map(|d| rng.random_range(-vmax[d]..=vmax[d]))
            .collect();
        positions.push(pos);
        velocities.push(vel);
    }

    let mut personal_best = positions.clone();
    let mut personal_best_value: Vec<Option<f64>> =
        positions.iter().map(|p| eval(p)).collect();

    let (mut gbest_idx, mut gbest_value) = personal_best_value
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| {
            Error::Optimization("objective failed at every initial particle".to_string())
        })?;
    let mut gbest = personal_best[gbest_idx].clone();

    let mut history = vec![gbest_value];

    for _ in 0..config.max_iters {
        for p in 0..config.swarm_size {
            for d in 0..dims {
                let r1: f64 = rng.random_range(0.0..1.0);
                let r2: f64 = rng.random_range(0.0..1.0);
                let v = config.inertia * velocities[p][d]
                    + config.cognitive * r1 * (personal_best[p][d] - positions[p][d])
                    + config.social * r2 * (gbest[d] - positions[p][d]);
                velocities[p][d] = v.clamp(-vmax[d], vmax[d]);
                positions[p][d] += velocities[p][d];
                if positions[p][d] < lo(d) {
                    positions[p][d] = lo(d);
                    velocities[p][d] = 0.0;
                } else if positions[p][d] > hi(d) {
                    positions[p][d] = hi(d);
                    velocities[p][d] = 0.0;
                }
            }
            if let Some(value) = eval(&positions[p]) {
                if personal_best_value[p].is_none_or(|best| value > best) {
                    personal_best_value[p] = Some(value);
                    personal_best[p] = positions[p].clone();
                    if value > gbest_value {
                        gbest_value = value;
                        gbest_idx = p;
                        gbest = positions[p].clone();
                    }
                }
            }
        }
        history.push(gbest_value);
    }
    let _ = gbest_idx;

    Ok(PlacementResult {
        best_placement: decode(&gbest),
        best_objective: gbest_value,
        objective_history: history,
    })
}

/// Solve the placement problem for a given room and RP set.
///
/// Wraps `placement_objective` with a large negative penalty on source–RP
/// coincidence so the swarm can move off the singularity instead of dying.
pub fn optimize_placement(
    rps: &[ReferencePoint],
    spec: &NeighborhoodSpec,
    params: &PathLossParams,
    room: &RoomSpec,
    k: usize,
    config: &PsoConfig,
) -> Result<PlacementResult> {
    let bounds = Bounds::of_room(room);
    pso_optimize(
        |placement| {
            Ok(placement_objective(placement, rps, spec, params)
                .unwrap_or(COINCIDENCE_PENALTY))
        },
        &bounds,
        k,
        config,
    )
}
