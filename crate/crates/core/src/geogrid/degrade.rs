//! Geostationary overlay model: a coarse, stale, noisy copy of the truth grid.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::EnvGrid;
#[cfg(test)]
use super::grid::GridKind;
use crate::error::{Error, Result};

/// One time-stamped overlay snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayFrame {
    pub valid_at_cycle: usize,
    pub grid: EnvGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoOverlay {
    frames: Vec<OverlayFrame>,
    cadence_cycles: usize,
    latency_cycles: usize,
    coarsening: usize,
}

impl GeoOverlay {
    pub fn new(
        frames: Vec<OverlayFrame>,
        cadence_cycles: usize,
        latency_cycles: usize,
        coarsening: usize,
    ) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::param("overlay needs at least one frame"));
        }
        if coarsening == 0 {
            return Err(Error::param("coarsening must be >= 1"));
        }
        if frames
            .windows(2)
            .any(|w| w[0].valid_at_cycle >= w[1].valid_at_cycle)
        {
            return Err(Error::param(
                "overlay frame times must be strictly increasing",
            ));
        }
        let first = &frames[0].grid;
        if frames
            .iter()
            .any(|f| !f.grid.same_shape(first) || f.grid.kind() != first.kind())
        {
            return Err(Error::param("overlay frames must share kind and shape"));
        }
        Ok(GeoOverlay {
            frames,
            cadence_cycles,
            latency_cycles,
            coarsening,
        })
    }

    pub fn frames(&self) -> &[OverlayFrame] {
        &self.frames
    }

    pub fn cadence_cycles(&self) -> usize {
        self.cadence_cycles
    }

    pub fn latency_cycles(&self) -> usize {
        self.latency_cycles
    }

    pub fn coarsening(&self) -> usize {
        self.coarsening
    }

    /// Index of the most recent frame valid at `cycle`.
    pub fn frame_index_at(&self, cycle: usize) -> Option<usize> {
        self.frames
            .partition_point(|f| f.valid_at_cycle <= cycle)
            .checked_sub(1)
    }

    pub fn frame_at(&self, cycle: usize) -> Option<&OverlayFrame> {
        self.frame_index_at(cycle).map(|i| &self.frames[i])
    }

    /// Whether every frame covers the extent of `truth` at this coarsening.
    pub fn covers(&self, truth: &EnvGrid) -> bool {
        let f = self.coarsening;
        let g = &self.frames[0].grid;
        g.width() == truth.width().div_ceil(f)
            && g.height() == truth.height().div_ceil(f)
            && g.resolution_km() == truth.resolution_km() * f as f64
    }
}

/// Asymmetric label-flip rates for binary overlays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipBias {
    pub cloudy_to_clear: f64,
    pub clear_to_cloudy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DegradeParams {
    pub coarsening: usize,
    /// Per-cell agreement with the shifted, coarsened truth (binary grids).
    pub accuracy: f64,
    /// Overrides `accuracy` with per-class flip rates when set.
    pub flip_bias: Option<FlipBias>,
    /// Target mean absolute error over all cells (continuous grids).
    pub noise_mae: f64,
    pub advect_cells_per_cycle: f64,
    pub cadence_cycles: usize,
    pub latency_cycles: usize,
    pub n_frames: usize,
}

impl Default for DegradeParams {
    fn default() -> Self {
        DegradeParams {
            coarsening: 1,
            accuracy: 1.0,
            flip_bias: None,
            noise_mae: 0.0,
            advect_cells_per_cycle: 0.0,
            cadence_cycles: 150,
            latency_cycles: 0,
            n_frames: 1,
        }
    }
}

impl DegradeParams {
    /// Accuracy 1, no advection, no coarsening: frames equal the truth.
    pub fn identity(n_frames: usize, cadence_cycles: usize) -> Self {
        DegradeParams {
            n_frames,
            cadence_cycles,
            ..Default::default()
        }
    }

    /// Rigid along-track shift applied to every frame, in truth cells.
    pub fn shift_cells(&self) -> isize {
        (self.advect_cells_per_cycle * self.latency_cycles as f64).round() as isize
    }

    fn validate(&self) -> Result<()> {
        if self.coarsening == 0 {
            return Err(Error::param("coarsening must be >= 1"));
        }
        if !(self.accuracy > 0.5 && self.accuracy <= 1.0) {
            return Err(Error::param(format!(
                "accuracy must be in (0.5, 1], got {}",
                self.accuracy
            )));
        }
        if let Some(b) = self.flip_bias {
            let ok = |p: f64| (0.0..0.5).contains(&p);
            if !ok(b.cloudy_to_clear) || !ok(b.clear_to_cloudy) {
                return Err(Error::param("flip rates must be in [0, 0.5)"));
            }
        }
        if !(self.noise_mae.is_finite() && self.noise_mae >= 0.0) {
            return Err(Error::param("noise_mae must be non-negative"));
        }
        if !self.advect_cells_per_cycle.is_finite() {
            return Err(Error::param("advect_cells_per_cycle must be finite"));
        }
        if self.n_frames == 0 {
            return Err(Error::param("n_frames must be >= 1"));
        }
        if self.n_frames > 1 && self.cadence_cycles == 0 {
            return Err(Error::param(
                "cadence_cycles must be >= 1 with several frames",
            ));
        }
        Ok(())
    }
}

/// The noise-free frame content: truth shifted by the staleness offset and
/// downsampled. Binary blocks take the majority (ties cloudy); continuous
/// blocks take the mean. Edge blocks cover only the cells that exist.
pub fn overlay_reference(truth: &EnvGrid, params: &DegradeParams) -> Result<EnvGrid> {
    params.validate()?;
    let shifted = shift_along_track(truth, params.shift_cells());
    Ok(downsample(&shifted, params.coarsening))
}

pub fn degrade_to_overlay(
    truth: &EnvGrid,
    params: &DegradeParams,
    seed: u64,
) -> Result<GeoOverlay> {
    let reference = overlay_reference(truth, params)?;
    let frames = (0..params.n_frames)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(frame_seed(seed, k));
            let grid = if truth.kind().is_binary() {
                flip_labels(&reference, params, &mut rng)
            } else {
                add_noise(&reference, params.noise_mae, &mut rng)
            };
            OverlayFrame {
                valid_at_cycle: k * params.cadence_cycles,
                grid,
            }
        })
        .collect();
    GeoOverlay::new(
        frames,
        params.cadence_cycles,
        params.latency_cycles,
        params.coarsening,
    )
}

fn frame_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn shift_along_track(grid: &EnvGrid, shift: isize) -> EnvGrid {
    if shift == 0 {
        return grid.clone();
    }
    let (w, h) = (grid.width(), grid.height());
    let mut values = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let src = (col as isize - shift).clamp(0, w as isize - 1) as usize;
            values.push(grid.get(src, row));
        }
    }
    rebuild(grid, w, h, grid.resolution_km(), values)
}

fn downsample(grid: &EnvGrid, f: usize) -> EnvGrid {
    if f == 1 {
        return grid.clone();
    }
    let (w, h) = (grid.width().div_ceil(f), grid.height().div_ceil(f));
    let mut values = Vec::with_capacity(w * h);
    for br in 0..h {
        for bc in 0..w {
            let rows = br * f..((br + 1) * f).min(grid.height());
            let cols = bc * f..((bc + 1) * f).min(grid.width());
            let count = rows.len() * cols.len();
            let sum: f64 = rows
                .flat_map(|r| cols.clone().map(move |c| (c, r)))
                .map(|(c, r)| grid.get(c, r))
                .sum();
            values.push(if grid.kind().is_binary() {
                // Majority, with ties resolving to 1.
                if 2.0 * sum >= count as f64 {
                    1.0
                } else {
                    0.0
                }
            } else {
                sum / count as f64
            });
        }
    }
    rebuild(grid, w, h, grid.resolution_km() * f as f64, values)
}

fn rebuild(like: &EnvGrid, w: usize, h: usize, res: f64, values: Vec<f64>) -> EnvGrid {
    EnvGrid::new(like.kind(), w, h, res, values).expect("derived grid keeps value invariants")
}

fn flip_labels(reference: &EnvGrid, params: &DegradeParams, rng: &mut ChaCha8Rng) -> EnvGrid {
    let mut values = reference.values().to_vec();
    let n = values.len();
    let mut flip = |idx: &[usize], p: f64, rng: &mut ChaCha8Rng| {
        let k = ((p * idx.len() as f64).round() as usize).min(idx.len());
        for i in sample(rng, idx.len(), k).into_iter() {
            let v = &mut values[idx[i]];
            *v = 1.0 - *v;
        }
    };
    match params.flip_bias {
        None => {
            let all: Vec<usize> = (0..n).collect();
            flip(&all, 1.0 - params.accuracy, rng);
        }
        Some(b) => {
            let (cloudy, clear): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| reference.values()[i] == 1.0);
            flip(&cloudy, b.cloudy_to_clear, rng);
            flip(&clear, b.clear_to_cloudy, rng);
        }
    }
    rebuild(
        reference,
        reference.width(),
        reference.height(),
        reference.resolution_km(),
        values,
    )
}

/// Laplace noise on nonzero cells, clamped at zero, with its scale bisected so
/// the overall mean absolute error equals `target_mae`.
fn add_noise(reference: &EnvGrid, target_mae: f64, rng: &mut ChaCha8Rng) -> EnvGrid {
    let base = reference.values();
    let wet: Vec<usize> = (0..base.len()).filter(|&i| base[i] > 0.0).collect();
    if target_mae == 0.0 || wet.is_empty() {
        return reference.clone();
    }
    let unit: Vec<f64> = wet
        .iter()
        .map(|_| {
            let u: f64 = rng.gen::<f64>() - 0.5;
            -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
        })
        .collect();
    let n = base.len() as f64;
    let mae = |scale: f64| {
        wet.iter()
            .zip(&unit)
            .map(|(&i, &z)| ((base[i] + scale * z).max(0.0) - base[i]).abs())
            .sum::<f64>()
            / n
    };
    let mut hi = target_mae.max(1e-6);
    while mae(hi) < target_mae {
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mae(mid) < target_mae {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut values = base.to_vec();
    for (&i, &z) in wet.iter().zip(&unit) {
        values[i] = (base[i] + hi * z).max(0.0);
    }
    rebuild(
        reference,
        reference.width(),
        reference.height(),
        reference.resolution_km(),
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::generate::{gen_cloud_field, gen_storm_field, GridShape, StormParams};

    fn clouds() -> EnvGrid {
        gen_cloud_field(GridShape::new(256, 128, 1.0), 0.55, 5, 3).unwrap()
    }

    #[test]
    fn identity_frames_equal_truth() {
        let truth = clouds();
        let ov = degrade_to_overlay(&truth, &DegradeParams::identity(3, 150), 9).unwrap();
        for f in ov.frames() {
            assert_eq!(f.grid, truth);
        }
    }

    #[test]
    fn binary_agreement_is_calibrated() {
        let truth = clouds();
        let params = DegradeParams {
            accuracy: 0.8,
            coarsening: 2,
            advect_cells_per_cycle: 0.05,
            latency_cycles: 40,
            n_frames: 4,
            ..Default::default()
        };
        let reference = overlay_reference(&truth, &params).unwrap();
        let ov = degrade_to_overlay(&truth, &params, 1).unwrap();
        for f in ov.frames() {
            let a = f.grid.agreement(&reference);
            assert!((0.78..=0.82).contains(&a), "agreement {a}");
        }
    }

    #[test]
    fn frame_times_follow_cadence() {
        let params = DegradeParams {
            n_frames: 4,
            cadence_cycles: 150,
            ..Default::default()
        };
        let ov = degrade_to_overlay(&clouds(), &params, 0).unwrap();
        let times: Vec<_> = ov.frames().iter().map(|f| f.valid_at_cycle).collect();
        assert_eq!(times, vec![0, 150, 300, 450]);
        assert_eq!(ov.frame_at(160).unwrap().valid_at_cycle, 150);
        assert_eq!(ov.frame_at(0).unwrap().valid_at_cycle, 0);
        assert_eq!(ov.frame_at(10_000).unwrap().valid_at_cycle, 450);
    }

    #[test]
    fn majority_ties_go_cloudy() {
        let g = EnvGrid::new(GridKind::CloudMask, 2, 2, 1.0, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let d = downsample(&g, 2);
        assert_eq!(d.values(), &[1.0]);
        let g = EnvGrid::new(GridKind::CloudMask, 2, 2, 1.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(downsample(&g, 2).values(), &[0.0]);
    }

    #[test]
    fn ragged_coarsening_pads_edges() {
        let g = EnvGrid::new(GridKind::Precip, 3, 1, 1.0, vec![1.0, 3.0, 5.0]).unwrap();
        let d = downsample(&g, 2);
        assert_eq!((d.width(), d.height()), (2, 1));
        assert_eq!(d.values(), &[2.0, 5.0]);
        assert_eq!(d.resolution_km(), 2.0);
    }

    #[test]
    fn shift_moves_content_forward() {
        let g = EnvGrid::new(GridKind::CloudMask, 4, 1, 1.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = shift_along_track(&g, 2);
        assert_eq!(s.values(), &[1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn continuous_noise_hits_target_mae() {
        let truth = gen_storm_field(
            GridShape::new(300, 27, 10.0),
            &StormParams {
                n_cells: 6,
                peak_rate: 60.0,
                cluster_radius: 3.0,
            },
            2,
        )
        .unwrap();
        let params = DegradeParams {
            noise_mae: 0.19,
            ..Default::default()
        };
        let ov = degrade_to_overlay(&truth, &params, 5).unwrap();
        let mae = ov.frames()[0].grid.mean_abs_error(&truth);
        assert!((mae - 0.19).abs() < 1e-6, "mae {mae}");
        assert!(ov.frames()[0].grid.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn asymmetric_flips_follow_class_rates() {
        let truth = clouds();
        let params = DegradeParams {
            flip_bias: Some(FlipBias {
                cloudy_to_clear: 0.1,
                clear_to_cloudy: 0.3,
            }),
            ..Default::default()
        };
        let ov = degrade_to_overlay(&truth, &params, 4).unwrap();
        let g = &ov.frames()[0].grid;
        let (mut fn_, mut cloudy, mut fp, mut clear) = (0, 0, 0, 0);
        for (t, o) in truth.values().iter().zip(g.values()) {
            if *t == 1.0 {
                cloudy += 1;
                fn_ += (*o == 0.0) as usize;
            } else {
                clear += 1;
                fp += (*o == 1.0) as usize;
            }
        }
        assert!((fn_ as f64 / cloudy as f64 - 0.1).abs() < 1e-3);
        assert!((fp as f64 / clear as f64 - 0.3).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_params() {
        let truth = clouds();
        for p in [
            DegradeParams {
                accuracy: 0.5,
                ..Default::default()
            },
            DegradeParams {
                coarsening: 0,
                ..Default::default()
            },
            DegradeParams {
                n_frames: 0,
                ..Default::default()
            },
        ] {
            assert!(degrade_to_overlay(&truth, &p, 0).is_err());
        }
    }
}
