//! Splitting the observation budget across 10-cycle partitions.

use crate::error::{Error, Result};
use crate::geogrid::{OverlayFrame, Scenario};
use crate::utility::{anticipated_utility_map, known_target_map, UtilityMap};

pub const PARTITION_CYCLES: usize = 10;

pub fn n_partitions(n_cycles: usize) -> usize {
    n_cycles.div_ceil(PARTITION_CYCLES)
}

/// Observation allowance per partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionBudget {
    pub counts: Vec<u32>,
}

impl PartitionBudget {
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, partition: usize) -> u32 {
        self.counts.get(partition).copied().unwrap_or(0)
    }
}

/// Largest-remainder apportionment of `total` by `weights`. Remainder ties go
/// to the earlier entry; all-zero weights fall back to an even split.
pub fn apportion(weights: &[f64], total: u32) -> Vec<u32> {
    let n = weights.len();
    if n == 0 {
        return Vec::new();
    }
    let sum: f64 = weights.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return distribute_uniform(total, n).counts;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<u32> = quotas.iter().map(|q| q.floor() as u32).collect();
    let given: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(given) as usize) {
        counts[i] += 1;
    }
    counts
}

/// Even split; the first `budget % partitions` partitions get one extra.
pub fn distribute_uniform(budget: u32, partitions: usize) -> PartitionBudget {
    if partitions == 0 {
        return PartitionBudget { counts: Vec::new() };
    }
    let base = budget / partitions as u32;
    let extra = (budget % partitions as u32) as usize;
    PartitionBudget {
        counts: (0..partitions).map(|i| base + (i < extra) as u32).collect(),
    }
}

/// Partition owning each grid column, or `None` for columns the sensor never
/// reaches. A column goes to the partition whose midpoint nadir is nearest.
pub fn column_partitions(scenario: &Scenario) -> Vec<Option<usize>> {
    let geom = scenario.geometry();
    let n = scenario.n_cycles();
    let parts = n_partitions(n);
    let km_per_cell = scenario.flight().km_per_cycle() / geom.resolution_km();
    let mid_pos: Vec<f64> = (0..parts)
        .map(|k| {
            let start = k * PARTITION_CYCLES;
            let end = (start + PARTITION_CYCLES).min(n) - 1;
            (start + end) as f64 / 2.0 * km_per_cell
        })
        .collect();
    let h = geom.half_extent_cells();
    let lo = geom.nadir_col(0).saturating_sub(h);
    let hi = geom.nadir_col(n - 1) + h;
    let mut k = 0;
    (0..geom.width())
        .map(|col| {
            if col < lo || col > hi {
                return None;
            }
            let x = col as f64;
            while k + 1 < parts && (mid_pos[k + 1] - x).abs() < (mid_pos[k] - x).abs() {
                k += 1;
            }
            Some(k)
        })
        .collect()
}

/// Sum of `map` over the envelope rows of each partition's columns.
pub fn partition_weights(scenario: &Scenario, map: &UtilityMap) -> Vec<f64> {
    let geom = scenario.geometry();
    let mut w = vec![0.0; n_partitions(scenario.n_cycles())];
    let Some(env) = geom.sensor_envelope(0) else {
        return w;
    };
    for (col, part) in column_partitions(scenario).into_iter().enumerate() {
        if let Some(k) = part {
            w[k] += (env.row_lo..=env.row_hi)
                .map(|row| map.get(col, row))
                .sum::<f64>();
        }
    }
    w
}

/// Apportions `budget` over partitions `from_partition..` by `map`; earlier
/// partitions get zero.
pub fn distribute_by_map(
    scenario: &Scenario,
    map: &UtilityMap,
    budget: u32,
    from_partition: usize,
) -> PartitionBudget {
    let weights = partition_weights(scenario, map);
    let mut counts = vec![0; weights.len()];
    if from_partition < weights.len() {
        let tail = apportion(&weights[from_partition..], budget);
        counts[from_partition..].copy_from_slice(&tail);
    }
    PartitionBudget { counts }
}

/// Apportions by the clear-sky utility of the known targets.
pub fn distribute_preinformed(scenario: &Scenario, budget: u32) -> Result<PartitionBudget> {
    let map = known_target_map(scenario)?;
    Ok(distribute_by_map(scenario, &map, budget, 0))
}

/// Apportions the remaining budget by the utility an overlay frame predicts.
pub fn distribute_gsdi(
    scenario: &Scenario,
    frame: &OverlayFrame,
    budget_remaining: u32,
    from_partition: usize,
) -> Result<PartitionBudget> {
    if scenario.overlay().is_none() {
        return Err(Error::param("GSDI needs a geostationary overlay"));
    }
    let map = anticipated_utility_map(scenario, frame)?;
    Ok(distribute_by_map(
        scenario,
        &map,
        budget_remaining,
        from_partition,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flight::make_flight;
    use crate::geogrid::{
        degrade_to_overlay, gen_cloud_field, storm_field_from_cells, DegradeParams, EnvGrid,
        GridKind, StormCell,
    };
    use crate::testutil::clear_ca_scenario;
    use crate::utility::{UtilityKind, UtilityModel};
    use proptest::prelude::*;

    #[test]
    fn uniform_examples() {
        let d = distribute_uniform(100, 45);
        assert_eq!(d.counts.iter().filter(|&&c| c == 3).count(), 10);
        assert!(d.counts[..10].iter().all(|&c| c == 3));
        assert!(d.counts[10..].iter().all(|&c| c == 2));
        assert_eq!(d.total(), 100);
        assert!(distribute_uniform(100, 50).counts.iter().all(|&c| c == 2));
        assert!(distribute_uniform(0, 7).counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn apportion_examples() {
        assert_eq!(apportion(&[3.0, 1.0], 4), vec![3, 1]);
        assert_eq!(apportion(&[0.0, 5.0, 0.0], 9), vec![0, 9, 0]);
        assert_eq!(
            apportion(&[2.0; 45], 100),
            distribute_uniform(100, 45).counts
        );
        assert_eq!(apportion(&[1.0, 1.0, 1.0], 2), vec![1, 1, 0]);
        assert_eq!(apportion(&[0.0, 0.0], 3), vec![2, 1]);
    }

    #[test]
    fn columns_map_monotonically() {
        let s = clear_ca_scenario(450, 10.0);
        let parts = column_partitions(&s);
        let assigned: Vec<usize> = parts.iter().flatten().copied().collect();
        assert!(assigned.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(assigned[0], 0);
        assert_eq!(*assigned.last().unwrap(), n_partitions(450) - 1);
        // Beyond the last envelope nothing is assigned.
        assert_eq!(*parts.last().unwrap(), None);
    }

    #[test]
    fn preinformed_rejects_unknown_targets() {
        let s = clear_ca_scenario(50, 10.0);
        assert!(matches!(
            distribute_preinformed(&s, 100),
            Err(Error::UnsupportedModel("CA"))
        ));
    }

    #[test]
    fn gsdi_identity_matches_truth() {
        let flight = make_flight(450, 6.0, 270.0, 500.0).unwrap();
        let shape = flight.grid_shape(10.0).unwrap();
        let truth = gen_cloud_field(shape, 0.6, 8, 11).unwrap();
        let overlay = degrade_to_overlay(&truth, &DegradeParams::identity(1, 150), 0).unwrap();
        let s =
            crate::geogrid::Scenario::builder(truth, flight, UtilityModel::new(UtilityKind::CA))
                .overlay(overlay)
                .build()
                .unwrap();
        let frame = &s.overlay().unwrap().frames()[0];
        for from in [0, 7, 30] {
            let g = distribute_gsdi(&s, frame, 60, from).unwrap();
            let t = distribute_by_map(&s, s.truth_utility_map(), 60, from);
            assert_eq!(g, t);
            assert_eq!(g.total(), 60);
            assert!(g.counts[..from].iter().all(|&c| c == 0));
        }
    }

    #[test]
    fn gsdi_uniform_sky_is_near_uniform() {
        let s = clear_ca_scenario(450, 10.0);
        let map = s.truth_utility_map().clone();
        let d = distribute_by_map(&s, &map, 100, 0);
        let u = distribute_uniform(100, d.len());
        let max_dev = d
            .counts
            .iter()
            .zip(&u.counts)
            .map(|(a, b)| (*a as i64 - *b as i64).abs())
            .max()
            .unwrap();
        // The last partition also owns the envelope beyond the final nadir.
        assert!(max_dev <= 2, "{d:?}");
        let interior = &d.counts[1..d.len() - 1];
        assert!(interior.iter().all(|&c| c == 2 || c == 3), "{d:?}");
    }

    #[test]
    fn storm_cluster_attracts_budget() {
        // A saturated storm about 25 columns long over a dry background.
        let flight = make_flight(100, 6.0, 270.0, 500.0).unwrap();
        let shape = flight.grid_shape(10.0).unwrap();
        let rain = storm_field_from_cells(
            shape,
            &[StormCell {
                col: 120.0,
                row: 13.0,
                amplitude: 1000.0,
                radius: 5.0,
            }],
            40.0,
        )
        .unwrap();
        let overlay = degrade_to_overlay(&rain, &DegradeParams::identity(1, 150), 0).unwrap();
        let s = crate::geogrid::Scenario::builder(rain, flight, UtilityModel::storm(40.0))
            .overlay(overlay)
            .build()
            .unwrap();
        let d = distribute_gsdi(&s, &s.overlay().unwrap().frames()[0], 100, 0).unwrap();
        let parts = column_partitions(&s);
        let cluster: std::collections::BTreeSet<usize> =
            (100..=140).filter_map(|c| parts[c]).collect();
        let share: u32 = cluster.iter().map(|&k| d.counts[k]).sum();
        assert!(share > 80, "cluster share {share}: {d:?}");
    }

    #[test]
    fn zero_population_weights_follow_column_counts() {
        let flight = make_flight(120, 6.0, 270.0, 500.0).unwrap();
        let shape = flight.grid_shape(10.0).unwrap();
        let clouds =
            EnvGrid::filled(GridKind::CloudMask, shape.width, shape.height, 10.0, 1.0).unwrap();
        let pop =
            EnvGrid::filled(GridKind::Population, shape.width, shape.height, 10.0, 0.0).unwrap();
        let s =
            crate::geogrid::Scenario::builder(clouds, flight, UtilityModel::new(UtilityKind::CAPD))
                .population(pop)
                .build()
                .unwrap();
        let map = known_target_map(&s).unwrap();
        assert!(map.values.iter().all(|&v| v == 10.0));
        let d = distribute_preinformed(&s, 12).unwrap();
        assert_eq!(d.total(), 12);
        let parts = column_partitions(&s);
        let widths: Vec<f64> = (0..d.len())
            .map(|k| parts.iter().filter(|p| **p == Some(k)).count() as f64)
            .collect();
        assert_eq!(d.counts, apportion(&widths, 12));
    }

    proptest! {
        #[test]
        fn apportion_conserves(weights in proptest::collection::vec(0.0f64..1e4, 1..60), total in 0u32..300) {
            let c = apportion(&weights, total);
            prop_assert_eq!(c.iter().sum::<u32>(), total);
            prop_assert_eq!(c.len(), weights.len());
            let sum: f64 = weights.iter().sum();
            if sum > 0.0 {
                for (w, &k) in weights.iter().zip(&c) {
                    let q = total as f64 * w / sum;
                    prop_assert!((k as f64 - q).abs() < 1.0 + 1e-9);
                }
            }
        }

        #[test]
        fn uniform_conserves(budget in 0u32..500, parts in 1usize..100) {
            let d = distribute_uniform(budget, parts);
            prop_assert_eq!(d.total(), budget);
            let (lo, hi) = (d.counts.iter().min().unwrap(), d.counts.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}
