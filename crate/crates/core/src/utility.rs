//! Utility models: value of observing a cell, from truth or from an overlay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::{Cell, EnvGrid, OverlayFrame, Scenario};

pub const CLOUDY_UTILITY: f64 = 1.0;
pub const CLEAR_UTILITY: f64 = 10.0;
pub const TARGET_UTILITY: f64 = 100.0;
pub const DEFAULT_POP_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UtilityKind {
    /// Cloud avoidance.
    CA,
    /// Cloud avoidance weighted by population density.
    CAPD,
    /// Cloud avoidance with random target areas.
    CART,
    /// Storm hunting.
    SH,
}

impl UtilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            UtilityKind::CA => "CA",
            UtilityKind::CAPD => "CAPD",
            UtilityKind::CART => "CART",
            UtilityKind::SH => "SH",
        }
    }

    /// Whether the truth grid is a cloud mask (every kind but storm hunting).
    pub fn uses_clouds(self) -> bool {
        self != UtilityKind::SH
    }
}

impl std::fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityModel {
    pub kind: UtilityKind,
    /// Precipitation rate worth the maximum storm-hunting utility, mm/hr.
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_pop_scale")]
    pub pop_scale: f64,
}

fn default_r_max() -> f64 {
    1.0
}

fn default_pop_scale() -> f64 {
    DEFAULT_POP_SCALE
}

/// Utility of one cell plus whether a storm rate had to be clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellUtility {
    pub value: f64,
    pub clamped: bool,
}

impl UtilityModel {
    pub fn new(kind: UtilityKind) -> Self {
        UtilityModel {
            kind,
            r_max: default_r_max(),
            pop_scale: DEFAULT_POP_SCALE,
        }
    }

    pub fn storm(r_max: f64) -> Self {
        UtilityModel {
            r_max,
            ..UtilityModel::new(UtilityKind::SH)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == UtilityKind::SH && !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(Error::param(format!(
                "r_max must be positive, got {}",
                self.r_max
            )));
        }
        if !(self.pop_scale.is_finite() && self.pop_scale > 0.0) {
            return Err(Error::param("pop_scale must be positive"));
        }
        Ok(())
    }

    pub fn clear_sky(&self, population: f64) -> f64 {
        10f64.powf(population / self.pop_scale + 1.0)
    }

    /// `primary` is the cloud flag (1 = cloudy) or the precipitation rate for
    /// storm hunting. `population` and `target` are ignored where unused.
    pub fn evaluate(&self, primary: f64, population: f64, target: bool) -> CellUtility {
        let plain = |value| CellUtility {
            value,
            clamped: false,
        };
        match self.kind {
            UtilityKind::SH => {
                let clamped = primary > self.r_max;
                let r = primary.min(self.r_max);
                CellUtility {
                    value: 100f64.powf(r / self.r_max),
                    clamped,
                }
            }
            _ if primary >= 0.5 => plain(CLOUDY_UTILITY),
            UtilityKind::CA => plain(CLEAR_UTILITY),
            UtilityKind::CAPD => plain(self.clear_sky(population)),
            UtilityKind::CART => plain(if target {
                TARGET_UTILITY
            } else {
                CLEAR_UTILITY
            }),
        }
    }
}

/// Per-cell utility over a truth-resolution grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    /// Cells whose storm rate exceeded `r_max`.
    pub clamped: usize,
}

impl UtilityMap {
    #[inline]
    pub fn at(&self, cell: Cell) -> f64 {
        self.values[cell.row * self.width + cell.col]
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    fn build(width: usize, height: usize, f: impl Fn(usize, usize) -> CellUtility) -> Self {
        let mut values = Vec::with_capacity(width * height);
        let mut clamped = 0;
        for row in 0..height {
            for col in 0..width {
                let u = f(col, row);
                clamped += u.clamped as usize;
                values.push(u.value);
            }
        }
        UtilityMap {
            width,
            height,
            values,
            clamped,
        }
    }
}

fn aux(grid: Option<&EnvGrid>, col: usize, row: usize) -> f64 {
    grid.map_or(0.0, |g| g.get(col, row))
}

fn warn_clamped(map: &UtilityMap, what: &str, r_max: f64) {
    if map.clamped > 0 {
        log::warn!(
            "{what}: {} cells exceed r_max = {r_max} mm/hr and were clamped",
            map.clamped
        );
    }
}

/// Truth utility of every cell. Inputs are assumed to share the truth shape.
pub fn truth_utility_map(
    model: &UtilityModel,
    truth: &EnvGrid,
    population: Option<&EnvGrid>,
    targets: Option<&EnvGrid>,
) -> UtilityMap {
    let map = UtilityMap::build(truth.width(), truth.height(), |col, row| {
        model.evaluate(
            truth.get(col, row),
            aux(population, col, row),
            aux(targets, col, row) >= 0.5,
        )
    });
    warn_clamped(&map, "truth", model.r_max);
    map
}

#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Truth,
    Geo(&'a OverlayFrame),
}

pub fn utility(scenario: &Scenario, cell: Cell, source: Source<'_>) -> Result<f64> {
    if !scenario.truth().contains(cell) {
        return Err(Error::param(format!("cell {cell:?} outside the grid")));
    }
    match source {
        Source::Truth => Ok(scenario.truth_utility(cell)),
        Source::Geo(frame) => {
            let f = scenario
                .overlay()
                .ok_or_else(|| Error::param("scenario has no overlay"))?
                .coarsening();
            let primary = frame.grid.get(cell.col / f, cell.row / f);
            Ok(scenario
                .utility_model()
                .evaluate(
                    primary,
                    aux(scenario.population(), cell.col, cell.row),
                    aux(scenario.targets(), cell.col, cell.row) >= 0.5,
                )
                .value)
        }
    }
}

/// Utility the overlay frame predicts for every truth cell. Cloud or rain
/// comes from the frame; population and targets from the static grids.
pub fn anticipated_utility_map(scenario: &Scenario, frame: &OverlayFrame) -> Result<UtilityMap> {
    let f = scenario
        .overlay()
        .ok_or_else(|| Error::param("scenario has no overlay"))?
        .coarsening();
    let model = scenario.utility_model();
    let (pop, tgt) = (scenario.population(), scenario.targets());
    let truth = scenario.truth();
    let map = UtilityMap::build(truth.width(), truth.height(), |col, row| {
        model.evaluate(
            frame.grid.get(col / f, row / f),
            aux(pop, col, row),
            aux(tgt, col, row) >= 0.5,
        )
    });
    warn_clamped(&map, "overlay", model.r_max);
    Ok(map)
}

/// Clear-sky utility of every cell for the models with known targets.
pub fn known_target_map(scenario: &Scenario) -> Result<UtilityMap> {
    let model = scenario.utility_model();
    if !matches!(model.kind, UtilityKind::CAPD | UtilityKind::CART) {
        return Err(Error::UnsupportedModel(model.kind.as_str()));
    }
    let (pop, tgt) = (scenario.population(), scenario.targets());
    let truth = scenario.truth();
    Ok(UtilityMap::build(
        truth.width(),
        truth.height(),
        |col, row| model.evaluate(0.0, aux(pop, col, row), aux(tgt, col, row) >= 0.5),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants() {
        let ca = UtilityModel::new(UtilityKind::CA);
        assert_eq!(ca.evaluate(0.0, 0.0, false).value, 10.0);
        assert_eq!(ca.evaluate(1.0, 0.0, false).value, 1.0);
        let cart = UtilityModel::new(UtilityKind::CART);
        assert_eq!(cart.evaluate(0.0, 0.0, true).value, 100.0);
        assert_eq!(cart.evaluate(0.0, 0.0, false).value, 10.0);
        assert_eq!(cart.evaluate(1.0, 0.0, true).value, 1.0);
    }

    #[test]
    fn capd_formula() {
        let m = UtilityModel::new(UtilityKind::CAPD);
        assert_eq!(m.evaluate(0.0, 10_000.0, false).value, 100.0);
        assert_eq!(m.evaluate(0.0, 0.0, false).value, 10.0);
        assert_eq!(m.evaluate(1.0, 10_000.0, false).value, 1.0);
        // 21,700 people/km² gives roughly the largest CAPD utility reported.
        let top = m.evaluate(0.0, 21_700.0, false).value;
        assert!((top - 1479.1).abs() < 1.0, "{top}");
    }

    #[test]
    fn storm_formula() {
        let m = UtilityModel::storm(40.0);
        assert_eq!(m.evaluate(0.0, 0.0, false).value, 1.0);
        assert_eq!(m.evaluate(40.0, 0.0, false).value, 100.0);
        assert_eq!(m.evaluate(20.0, 0.0, false).value, 10.0);
        let over = m.evaluate(55.0, 0.0, false);
        assert_eq!(over.value, 100.0);
        assert!(over.clamped);
        assert!(UtilityModel::storm(0.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn storm_scale_invariant(r in 0.0f64..50.0, rmax in 1.0f64..50.0, k in 0.01f64..100.0) {
            let a = UtilityModel::storm(rmax).evaluate(r, 0.0, false).value;
            let b = UtilityModel::storm(rmax * k).evaluate(r * k, 0.0, false).value;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            prop_assert!((1.0..=100.0).contains(&a));
        }

        #[test]
        fn capd_increasing(p in 0.0f64..22_000.0, dp in 1.0f64..1000.0) {
            let m = UtilityModel::new(UtilityKind::CAPD);
            prop_assert!(m.evaluate(0.0, p + dp, false).value > m.evaluate(0.0, p, false).value);
            prop_assert!(m.evaluate(0.0, p, false).value >= 1.0);
        }

        #[test]
        fn storm_increasing_below_rmax(r in 0.0f64..39.0, dr in 0.01f64..1.0) {
            let m = UtilityModel::storm(40.0);
            prop_assert!(m.evaluate(r + dr, 0.0, false).value > m.evaluate(r, 0.0, false).value);
        }
    }
}
