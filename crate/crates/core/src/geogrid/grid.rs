use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid cell index. Ordering is row-major: `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    CloudMask,
    Precip,
    Population,
    TargetMask,
}

impl GridKind {
    pub fn is_binary(self) -> bool {
        matches!(self, GridKind::CloudMask | GridKind::TargetMask)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::CloudMask => "cloudmask",
            GridKind::Precip => "precip",
            GridKind::Population => "population",
            GridKind::TargetMask => "targetmask",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "cloudmask" => GridKind::CloudMask,
            "precip" => GridKind::Precip,
            "population" => GridKind::Population,
            "targetmask" => GridKind::TargetMask,
            _ => return None,
        })
    }
}

/// A 2D scalar field over the flyover.
///
/// Columns run along-track, rows cross-track. Values are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvGrid {
    width: usize,
    height: usize,
    resolution_km: f64,
    kind: GridKind,
    values: Vec<f64>,
}

impl EnvGrid {
    pub fn new(
        kind: GridKind,
        width: usize,
        height: usize,
        resolution_km: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("grid dimensions must be nonzero"));
        }
        if !(resolution_km.is_finite() && resolution_km > 0.0) {
            return Err(Error::param(format!(
                "resolution_km must be positive, got {resolution_km}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::param(format!(
                "expected {} values for {width}x{height}, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|&v| !valid_value(kind, v)) {
            return Err(Error::param(format!(
                "invalid {} value {} at index {i}",
                kind.as_str(),
                values[i]
            )));
        }
        Ok(EnvGrid {
            width,
            height,
            resolution_km,
            kind,
            values,
        })
    }

    pub fn filled(
        kind: GridKind,
        width: usize,
        height: usize,
        resolution_km: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(
            kind,
            width,
            height,
            resolution_km,
            vec![value; width.saturating_mul(height)],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution_km(&self) -> f64 {
        self.resolution_km
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn at(&self, cell: Cell) -> f64 {
        self.get(cell.col, cell.row)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    pub fn same_shape(&self, other: &EnvGrid) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.resolution_km == other.resolution_km
    }

    /// Fraction of cells with a value other than zero.
    pub fn nonzero_fraction(&self) -> f64 {
        self.values.iter().filter(|&&v| v != 0.0).count() as f64 / self.values.len() as f64
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Fraction of cells whose values agree exactly with `other`.
    pub fn agreement(&self, other: &EnvGrid) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        let same = self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.values.len() as f64
    }

    pub fn mean_abs_error(&self, other: &EnvGrid) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        sum / self.values.len() as f64
    }
}

fn valid_value(kind: GridKind, v: f64) -> bool {
    if kind.is_binary() {
        v == 0.0 || v == 1.0
    } else {
        v.is_finite() && v >= 0.0
    }
}
