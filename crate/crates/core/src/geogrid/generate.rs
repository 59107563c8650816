//! Synthetic environment generators.
//!
//! Every generator is a pure function of its parameters and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{EnvGrid, GridKind};
use crate::error::{Error, Result};
use crate::flight::FlightPath;

/// Precipitation below this rate is truncated to exactly zero (mm/hr).
pub const PRECIP_FLOOR_MM_HR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub width: usize,
    pub height: usize,
    pub resolution_km: f64,
}

impl GridShape {
    pub fn new(width: usize, height: usize, resolution_km: f64) -> Self {
        GridShape {
            width,
            height,
            resolution_km,
        }
    }

    pub fn of(grid: &EnvGrid) -> Self {
        GridShape::new(grid.width(), grid.height(), grid.resolution_km())
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("grid dimensions must be at least 1x1"));
        }
        if !(self.resolution_km.is_finite() && self.resolution_km > 0.0) {
            return Err(Error::param("resolution_km must be positive"));
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        self.width * self.height
    }
}

/// Spatially correlated binary cloud mask.
///
/// Uniform noise is smoothed with three separable box-blur passes of radius
/// `correlation_len` and the top `round(coverage * N)` cells are marked cloudy,
/// so the cloudy fraction is exact up to one cell.
pub fn gen_cloud_field(
    shape: GridShape,
    coverage: f64,
    correlation_len: usize,
    seed: u64,
) -> Result<EnvGrid> {
    gen_cloud_field_multiscale(
        shape,
        coverage,
        &[CloudScale {
            correlation_len,
            weight: 1.0,
        }],
        seed,
    )
}

/// One layer of a multi-scale cloud field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudScale {
    /// Box-blur radius in cells.
    pub correlation_len: usize,
    /// Relative weight of this layer after normalizing it to unit variance.
    pub weight: f64,
}

/// Cloud mask thresholded from a weighted sum of smoothed noise layers, e.g.
/// small cumulus-sized cells on top of large frontal systems.
pub fn gen_cloud_field_multiscale(
    shape: GridShape,
    coverage: f64,
    scales: &[CloudScale],
    seed: u64,
) -> Result<EnvGrid> {
    shape.validate()?;
    if !(0.0..=1.0).contains(&coverage) {
        return Err(Error::param(format!(
            "coverage must be in [0, 1], got {coverage}"
        )));
    }
    if scales.is_empty() {
        return Err(Error::param("need at least one cloud scale"));
    }
    for sc in scales {
        if sc.correlation_len == 0 {
            return Err(Error::param("correlation_len must be >= 1"));
        }
        if !(sc.weight.is_finite() && sc.weight >= 0.0) {
            return Err(Error::param("cloud scale weights must be non-negative"));
        }
    }
    let n = shape.cells();
    let n_cloudy = ((coverage * n as f64).round() as usize).min(n);
    let mut mask = vec![0.0; n];
    if n_cloudy == n {
        mask.fill(1.0);
    } else if n_cloudy > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = vec![0.0; n];
        for sc in scales {
            let mut layer: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            for _ in 0..3 {
                box_blur(&mut layer, shape.width, shape.height, sc.correlation_len);
            }
            let mean = layer.iter().sum::<f64>() / n as f64;
            let var = layer.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let scale = if var > 0.0 {
                sc.weight / var.sqrt()
            } else {
                0.0
            };
            for (f, v) in field.iter_mut().zip(&layer) {
                *f += (v - mean) * scale;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        // Highest values first; index breaks ties so the selection is total.
        order.select_nth_unstable_by(n_cloudy - 1, |&a, &b| {
            field[b].total_cmp(&field[a]).then(a.cmp(&b))
        });
        for &i in &order[..n_cloudy] {
            mask[i] = 1.0;
        }
    }
    EnvGrid::new(
        GridKind::CloudMask,
        shape.width,
        shape.height,
        shape.resolution_km,
        mask,
    )
}

fn box_blur(field: &mut [f64], width: usize, height: usize, radius: usize) {
    let mut line = Vec::with_capacity(width.max(height));
    for row in 0..height {
        line.clear();
        line.extend_from_slice(&field[row * width..(row + 1) * width]);
        blur_line(&line, radius, |i, v| field[row * width + i] = v);
    }
    for col in 0..width {
        line.clear();
        line.extend((0..height).map(|row| field[row * width + col]));
        blur_line(&line, radius, |i, v| field[i * width + col] = v);
    }
}

/// Running-sum box filter with clamped edges.
fn blur_line(src: &[f64], radius: usize, mut out: impl FnMut(usize, f64)) {
    let n = src.len() as isize;
    let r = radius as isize;
    let at = |i: isize| src[i.clamp(0, n - 1) as usize];
    let mut sum: f64 = (-r..=r).map(at).sum();
    let norm = 1.0 / (2 * r + 1) as f64;
    for i in 0..n {
        out(i as usize, sum * norm);
        sum += at(i + r + 1) - at(i - r);
    }
}

/// One Gaussian precipitation cell. Positions are in (fractional) grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StormCell {
    pub col: f64,
    pub row: f64,
    pub amplitude: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StormParams {
    pub n_cells: usize,
    /// mm/hr
    pub peak_rate: f64,
    /// Gaussian sigma in cells.
    pub cluster_radius: f64,
}

/// Sum-of-Gaussian-bumps precipitation field, capped at `peak_rate`, with
/// values under [`PRECIP_FLOOR_MM_HR`] set to zero.
pub fn gen_storm_field(shape: GridShape, params: &StormParams, seed: u64) -> Result<EnvGrid> {
    shape.validate()?;
    if !(params.peak_rate.is_finite() && params.peak_rate > 0.0) {
        return Err(Error::param("peak_rate must be positive"));
    }
    if !(params.cluster_radius.is_finite() && params.cluster_radius > 0.0) {
        return Err(Error::param("cluster_radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells: Vec<StormCell> = (0..params.n_cells)
        .map(|i| StormCell {
            col: rng.gen::<f64>() * shape.width as f64,
            row: rng.gen::<f64>() * shape.height as f64,
            // The first cell always reaches the configured peak.
            amplitude: if i == 0 {
                params.peak_rate
            } else {
                params.peak_rate * rng.gen_range(0.5..=1.0)
            },
            radius: params.cluster_radius * rng.gen_range(0.75..=1.25),
        })
        .collect();
    storm_field_from_cells(shape, &cells, params.peak_rate)
}

pub fn storm_field_from_cells(
    shape: GridShape,
    cells: &[StormCell],
    peak_rate: f64,
) -> Result<EnvGrid> {
    shape.validate()?;
    let mut values = vec![0.0; shape.cells()];
    for c in cells {
        let reach = (c.radius * 4.0).ceil() as isize;
        let (c0, r0) = (c.col.round() as isize, c.row.round() as isize);
        let rows = (r0 - reach).max(0)..=(r0 + reach).min(shape.height as isize - 1);
        for row in rows {
            let cols = (c0 - reach).max(0)..=(c0 + reach).min(shape.width as isize - 1);
            for col in cols {
                let d2 = (col as f64 - c.col).powi(2) + (row as f64 - c.row).powi(2);
                values[row as usize * shape.width + col as usize] +=
                    c.amplitude * (-d2 / (2.0 * c.radius * c.radius)).exp();
            }
        }
    }
    for v in &mut values {
        *v = if *v < PRECIP_FLOOR_MM_HR {
            0.0
        } else {
            v.min(peak_rate)
        };
    }
    EnvGrid::new(
        GridKind::Precip,
        shape.width,
        shape.height,
        shape.resolution_km,
        values,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationParams {
    pub n_cities: usize,
    /// people/km²
    pub max_density: f64,
    /// Gaussian sigma of a city in cells.
    pub city_radius: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            n_cities: 8,
            max_density: 22_000.0,
            city_radius: 4.0,
        }
    }
}

/// Sparse population-density hotspots. Overlapping cities combine by maximum,
/// so each city center holds exactly its peak density.
pub fn gen_population_field(
    shape: GridShape,
    params: &PopulationParams,
    seed: u64,
) -> Result<EnvGrid> {
    shape.validate()?;
    if !(params.max_density.is_finite() && params.max_density >= 0.0) {
        return Err(Error::param("max_density must be non-negative"));
    }
    if !(params.city_radius.is_finite() && params.city_radius > 0.0) {
        return Err(Error::param("city_radius must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0f64; shape.cells()];
    for i in 0..params.n_cities {
        let col = rng.gen_range(0..shape.width);
        let row = rng.gen_range(0..shape.height);
        let peak = if i == 0 {
            params.max_density
        } else {
            params.max_density * rng.gen_range(0.2..=1.0)
        };
        let sigma = params.city_radius * rng.gen_range(0.75..=1.25);
        let reach = (sigma * 4.0).ceil() as isize;
        for r in
            (row as isize - reach).max(0)..=(row as isize + reach).min(shape.height as isize - 1)
        {
            for c in
                (col as isize - reach).max(0)..=(col as isize + reach).min(shape.width as isize - 1)
            {
                let d2 = (c - col as isize).pow(2) as f64 + (r - row as isize).pow(2) as f64;
                let v = peak * (-d2 / (2.0 * sigma * sigma)).exp();
                let slot = &mut values[r as usize * shape.width + c as usize];
                *slot = slot.max(v);
            }
        }
    }
    EnvGrid::new(
        GridKind::Population,
        shape.width,
        shape.height,
        shape.resolution_km,
        values,
    )
}

/// Axis-aligned square target area, in cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSquare {
    pub side_km: f64,
    pub col0: isize,
    pub row0: isize,
    pub side_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetParams {
    pub n_targets: usize,
    pub min_side_km: f64,
    pub max_side_km: f64,
}

impl Default for TargetParams {
    fn default() -> Self {
        TargetParams {
            n_targets: 20,
            min_side_km: 20.0,
            max_side_km: 100.0,
        }
    }
}

pub fn random_target_squares(
    shape: GridShape,
    params: &TargetParams,
    seed: u64,
) -> Result<Vec<TargetSquare>> {
    shape.validate()?;
    if !(params.min_side_km > 0.0 && params.min_side_km <= params.max_side_km) {
        return Err(Error::param(format!(
            "need 0 < min_side_km <= max_side_km, got {} and {}",
            params.min_side_km, params.max_side_km
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = shape.resolution_km;
    Ok((0..params.n_targets)
        .map(|_| {
            let side_km = rng.gen_range(params.min_side_km..=params.max_side_km);
            let cx = rng.gen::<f64>() * shape.width as f64 * res;
            let cy = rng.gen::<f64>() * shape.height as f64 * res;
            let side_cells = (side_km / res).floor() as usize;
            let half = side_cells as f64 / 2.0;
            TargetSquare {
                side_km,
                col0: (cx / res - half).round() as isize,
                row0: (cy / res - half).round() as isize,
                side_cells,
            }
        })
        .collect())
}

pub fn targets_mask(shape: GridShape, squares: &[TargetSquare]) -> Result<EnvGrid> {
    shape.validate()?;
    let mut values = vec![0.0; shape.cells()];
    for sq in squares {
        let rows = sq.row0.max(0)..(sq.row0 + sq.side_cells as isize).min(shape.height as isize);
        for r in rows {
            let cols = sq.col0.max(0)..(sq.col0 + sq.side_cells as isize).min(shape.width as isize);
            for c in cols {
                values[r as usize * shape.width + c as usize] = 1.0;
            }
        }
    }
    EnvGrid::new(
        GridKind::TargetMask,
        shape.width,
        shape.height,
        shape.resolution_km,
        values,
    )
}

/// Random square target areas spread over the flyover extent.
pub fn gen_random_targets(
    flight: &FlightPath,
    resolution_km: f64,
    params: &TargetParams,
    seed: u64,
) -> Result<EnvGrid> {
    let shape = flight.grid_shape(resolution_km)?;
    let squares = random_target_squares(shape, params, seed)?;
    targets_mask(shape, &squares)
}
