//! Spatial zone partition of the reference points and KNN zone
//! classification of online fingerprints.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::radio_model::{fingerprint_distance, Fingerprint, ReferencePoint, RoomSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k_neighbors: usize,
}

impl Default for KnnConfig {
    /// Odd default reduces vote ties.
    fn default() -> Self {
        KnnConfig { k_neighbors: 3 }
    }
}

/// Zone label of coordinates (x, y) under a `zone_rows × zone_cols` grid
/// partition of the room. Points exactly on an interior boundary belong to
/// the lower-index cell. Labels are row-major, dense in 0..rows·cols.
pub fn zone_of(room: &RoomSpec, zone_rows: usize, zone_cols: usize, x: f64, y: f64) -> Result<usize> {
    if zone_rows == 0 || zone_cols == 0 {
        return Err(Error::Config("zone grid must be at least 1x1".to_string()));
    }
    if !room.contains(x, y) {
        return Err(Error::Domain(format!("point ({x}, {y}) outside the room")));
    }
    let cell = |coord: f64, extent: f64, n: usize| -> usize {
        let u = coord / (extent / n as f64);
        let mut idx = math::floor(u) as usize;
        // exact boundary goes to the lower cell
        if idx > 0 && u == idx as f64 {
            idx -= 1;
        }
        idx.min(n - 1)
    };
    let col = cell(x, room.width_m, zone_cols);
    let row = cell(y, room.length_m, zone_rows);
    Ok(row * zone_cols + col)
}

/// Label every reference point with the zone cell containing it.
pub fn assign_zones(
    rps: &[ReferencePoint],
    room: &RoomSpec,
    zone_rows: usize,
    zone_cols: usize,
) -> Result<Vec<ReferencePoint>> {
    rps.iter()
        .map(|rp| {
            let zone = zone_of(room, zone_rows, zone_cols, rp.x, rp.y)?;
            let mut rp = rp.clone();
            rp.zone = Some(zone);
            Ok(rp)
        })
        .collect()
}

/// Majority vote among the k nearest database fingerprints.
///
/// Distance ties are broken by lower entry id, vote ties by the single
/// nearest neighbor's label; the result never depends on database order.
pub fn knn_classify(
    query: &Fingerprint,
    db: &[ReferencePoint],
    config: &KnnConfig,
) -> Result<usize> {
    if db.is_empty() {
        return Err(Error::Config("empty classification database".to_string()));
    }
    if config.k_neighbors == 0 || config.k_neighbors > db.len() {
        return Err(Error::Config(format!(
            "k_neighbors {} out of range 1..={}",
            config.k_neighbors,
            db.len()
        )));
    }

    let mut scored: Vec<(f64, usize, usize)> = db
        .iter()
        .map(|rp| {
            let fp = rp.fingerprint.as_ref().ok_or_else(|| {
                Error::Config(format!("database entry {} has no fingerprint", rp.id))
            })?;
            let zone = rp
                .zone
                .ok_or_else(|| Error::Config(format!("database entry {} has no zone", rp.id)))?;
            Ok((fingerprint_distance(query, fp)?, rp.id, zone))
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let top = &scored[..config.k_neighbors];
    let mut votes: Vec<(usize, usize)> = Vec::new();
    for &(_, _, zone) in top {
        match votes.iter_mut().find(|(z, _)| *z == zone) {
            Some((_, n)) => *n += 1,
            None => votes.push((zone, 1)),
        }
    }
    let max_votes = votes.iter().map(|(_, n)| *n).max().unwrap();
    let tied = votes.iter().filter(|(_, n)| *n == max_votes).count();
    if tied > 1 {
        Ok(top[0].2)
    } else {
        Ok(votes.iter().find(|(_, n)| *n == max_votes).unwrap().0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio_model::{build_rp_grid, synthesize_radio_map, PathLossParams, Placement};

    fn fp(values: &[f64]) -> Fingerprint {
        Fingerprint::new(values.to_vec())
    }

    fn entry(id: usize, zone: usize, values: &[f64]) -> ReferencePoint {
        ReferencePoint {
            id,
            x: 0.0,
            y: 0.0,
            zone: Some(zone),
            fingerprint: Some(fp(values)),
        }
    }

    #[test]
    fn single_zone_labels_everything_zero() {
        let room = RoomSpec::new(7.0, 4.0, 3, 6, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        let labeled = assign_zones(&rps, &room, 1, 1).unwrap();
        assert!(labeled.iter().all(|rp| rp.zone == Some(0)));
    }

    #[test]
    fn reference_layout_gives_six_zones_of_three() {
        // 6x3 RP grid, 3 zone rows x 2 zone cols: zone cells are
        // 3.5 m wide and 4/3 m tall, so each holds 3 RPs of one grid row
        let room = RoomSpec::new(7.0, 4.0, 3, 6, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        let labeled = assign_zones(&rps, &room, 3, 2).unwrap();
        let mut counts = [0usize; 6];
        for rp in &labeled {
            counts[rp.zone.unwrap()] += 1;
        }
        assert_eq!(counts, [3; 6]);
        // hand-verified membership: RP 0 at (0.5, 0.5) is zone 0,
        // RP 5 at (6.5, 0.5) is zone 1, RP 17 at (6.5, 3.5) is zone 5
        assert_eq!(labeled[0].zone, Some(0));
        assert_eq!(labeled[5].zone, Some(1));
        assert_eq!(labeled[17].zone, Some(5));
    }

    #[test]
    fn boundary_point_goes_to_lower_cell() {
        let room = RoomSpec::new(4.0, 4.0, 2, 2, 0.5).unwrap();
        // x = 2.0 sits exactly on the column boundary of a 2x2 zone grid
        assert_eq!(zone_of(&room, 2, 2, 2.0, 1.0).unwrap(), 0);
        assert_eq!(zone_of(&room, 2, 2, 2.0 + 1e-9, 1.0).unwrap(), 1);
        assert_eq!(zone_of(&room, 2, 2, 1.0, 2.0).unwrap(), 0);
    }

    #[test]
    fn rp_outside_room_errors() {
        let room = RoomSpec::new(4.0, 4.0, 2, 2, 0.5).unwrap();
        assert!(zone_of(&room, 2, 2, 5.0, 1.0).is_err());
        assert!(zone_of(&room, 2, 2, 1.0, -0.1).is_err());
    }

    #[test]
    fn knn_exact_match_k1() {
        let db = [
            entry(0, 0, &[-50.0, -60.0]),
            entry(1, 1, &[-70.0, -40.0]),
        ];
        let label = knn_classify(&fp(&[-70.0, -40.0]), &db, &KnnConfig { k_neighbors: 1 }).unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn knn_global_majority() {
        let db = [
            entry(0, 0, &[-50.0, -50.0]),
            entry(1, 0, &[-51.0, -51.0]),
            entry(2, 1, &[-90.0, -90.0]),
        ];
        let label = knn_classify(&fp(&[-60.0, -60.0]), &db, &KnnConfig { k_neighbors: 3 }).unwrap();
        assert_eq!(label, 0);
    }

    #[test]
    fn knn_vote_tie_breaks_to_nearest() {
        let db = [
            entry(0, 0, &[-50.0]),
            entry(1, 1, &[-58.0]),
            entry(2, 0, &[-70.0]),
            entry(3, 1, &[-80.0]),
        ];
        // query -55: distances 5, 3, 15, 25 -> top-2 = {1 (zone 1), 0 (zone 0)},
        // tie broken by nearest (entry 1)
        let label = knn_classify(&fp(&[-55.0]), &db, &KnnConfig { k_neighbors: 2 }).unwrap();
        assert_eq!(label, 1);
    }

    #[test]
    fn knn_errors_on_empty_db_or_bad_k() {
        let db = [entry(0, 0, &[-50.0])];
        assert!(knn_classify(&fp(&[-50.0]), &[], &KnnConfig::default()).is_err());
        assert!(knn_classify(&fp(&[-50.0]), &db, &KnnConfig { k_neighbors: 0 }).is_err());
        assert!(knn_classify(&fp(&[-50.0]), &db, &KnnConfig { k_neighbors: 2 }).is_err());
    }

    /// Exhaustive-sort oracle: sort all distances, take k, majority with the
    /// same documented tie rules.
    fn knn_oracle(query: &Fingerprint, db: &[ReferencePoint], k: usize) -> usize {
        let mut all: Vec<(f64, usize, usize)> = db
            .iter()
            .map(|rp| {
                let f = rp.fingerprint.as_ref().unwrap();
                let d = query
                    .rssi_dbm
                    .iter()
                    .zip(&f.rssi_dbm)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, rp.id, rp.zone.unwrap())
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let top = &all[..k];
        let mut counts: alloc::collections::BTreeMap<usize, usize> = Default::default();
        for &(_, _, z) in top {
            *counts.entry(z).or_default() += 1;
        }
        let best = *counts.values().max().unwrap();
        let winners: Vec<usize> = counts
            .iter()
            .filter(|(_, &n)| n == best)
            .map(|(&z, _)| z)
            .collect();
        if winners.len() == 1 {
            winners[0]
        } else {
            top[0].2
        }
    }

    #[test]
    fn knn_matches_exhaustive_oracle() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let db: Vec<ReferencePoint> = (0..10)
            .map(|i| {
                entry(
                    i,
                    i % 3,
                    &[
                        rng.random_range(-90.0..-30.0),
                        rng.random_range(-90.0..-30.0),
                        rng.random_range(-90.0..-30.0),
                    ],
                )
            })
            .collect();
        for _ in 0..200 {
            let q = fp(&[
                rng.random_range(-90.0..-30.0),
                rng.random_range(-90.0..-30.0),
                rng.random_range(-90.0..-30.0),
            ]);
            let got = knn_classify(&q, &db, &KnnConfig { k_neighbors: 3 }).unwrap();
            assert_eq!(got, knn_oracle(&q, &db, 3));
        }
    }

    #[test]
    fn knn_permutation_invariant() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(17);
        let db: Vec<ReferencePoint> = (0..12)
            .map(|i| {
                entry(
                    i,
                    i % 4,
                    &[rng.random_range(-90.0..-30.0), rng.random_range(-90.0..-30.0)],
                )
            })
            .collect();
        let mut shuffled = db.clone();
        shuffled.reverse();
        shuffled.swap(0, 5);
        for _ in 0..50 {
            let q = fp(&[rng.random_range(-90.0..-30.0), rng.random_range(-90.0..-30.0)]);
            let cfg = KnnConfig { k_neighbors: 4 };
            assert_eq!(
                knn_classify(&q, &db, &cfg).unwrap(),
                knn_classify(&q, &shuffled, &cfg).unwrap()
            );
        }
    }

    #[test]
    fn zero_noise_map_self_classifies_perfectly() {
        let room = RoomSpec::new(7.0, 4.0, 3, 6, 0.5).unwrap();
        let rps = build_rp_grid(&room).unwrap();
        let placement = Placement::new(alloc::vec![(1.5, 1.5), (4.0, 2.5), (7.0, 1.5)]);
        let params = PathLossParams::default();
        let map = synthesize_radio_map(&placement, &rps, &params, 0.0, 0).unwrap();
        let db = assign_zones(&map, &room, 3, 2).unwrap();
        for rp in &db {
            let label = knn_classify(
                rp.fingerprint.as_ref().unwrap(),
                &db,
                &KnnConfig { k_neighbors: 1 },
            )
            .unwrap();
            assert_eq!(label, rp.zone.unwrap());
        }
    }
}
