//! Discretized flyover: trajectory, lookahead visibility, and the state
//! transition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geogrid::{Cell, GridShape, OverlayFrame, Scenario};
use crate::slew::{Geometry, SlewCycles};

pub const CYCLE_SECONDS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightPath {
    pub n_cycles: usize,
    pub cycle_seconds: f64,
    pub ground_speed_km_s: f64,
    pub swath_km: f64,
    pub altitude_km: f64,
    pub lookahead_km: f64,
}

/// Builds a flight with a 45° forward-looking lookahead sensor, which sees
/// one altitude ahead of nadir.
pub fn make_flight(
    n_cycles: usize,
    ground_speed_km_s: f64,
    swath_km: f64,
    altitude_km: f64,
) -> Result<FlightPath> {
    let f = FlightPath {
        n_cycles,
        cycle_seconds: CYCLE_SECONDS,
        ground_speed_km_s,
        swath_km,
        altitude_km,
        lookahead_km: altitude_km,
    };
    f.validate()?;
    Ok(f)
}

impl FlightPath {
    pub fn validate(&self) -> Result<()> {
        if self.n_cycles == 0 {
            return Err(Error::param("n_cycles must be >= 1"));
        }
        for (name, v) in [
            ("cycle_seconds", self.cycle_seconds),
            ("ground_speed_km_s", self.ground_speed_km_s),
            ("swath_km", self.swath_km),
            ("altitude_km", self.altitude_km),
            ("lookahead_km", self.lookahead_km),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn km_per_cycle(&self) -> f64 {
        self.ground_speed_km_s * self.cycle_seconds
    }

    /// Grid covering every nadir position plus the lookahead beyond the last one.
    pub fn grid_shape(&self, resolution_km: f64) -> Result<GridShape> {
        self.validate()?;
        if !(resolution_km.is_finite() && resolution_km > 0.0) {
            return Err(Error::param("resolution_km must be positive"));
        }
        let along = (self.n_cycles - 1) as f64 * self.km_per_cycle() + self.lookahead_km;
        let width = (along / resolution_km + 1e-9).floor() as usize + 1;
        let height = ((self.swath_km / resolution_km).round() as usize).max(1);
        Ok(GridShape::new(width, height, resolution_km))
    }
}

/// The part of the truth grid the lookahead sensor has sensed by some cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LookaheadView {
    pub cycle: usize,
    pub visible_through_col: usize,
}

impl LookaheadView {
    pub fn at(geom: &Geometry, cycle: usize) -> Self {
        LookaheadView {
            cycle,
            visible_through_col: (geom.nadir_col(cycle) + geom.lookahead_cells())
                .min(geom.width() - 1),
        }
    }

    #[inline]
    pub fn contains(&self, cell: Cell) -> bool {
        cell.col <= self.visible_through_col
    }
}

pub fn lookahead_view(scenario: &Scenario, cycle: usize) -> LookaheadView {
    LookaheadView::at(scenario.geometry(), cycle)
}

/// Most recent overlay frame valid at `cycle`, if the scenario has an overlay.
pub fn geo_view(scenario: &Scenario, cycle: usize) -> Option<&OverlayFrame> {
    scenario.overlay()?.frame_at(cycle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PendingSlew {
    pub target: Cell,
    /// Cycles left including the arrival cycle; always >= 1.
    pub remaining: u32,
    pub observe: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SatState {
    pub cycle: usize,
    pub point: Cell,
    pub obs_used: u32,
    pub pending: Option<PendingSlew>,
}

impl SatState {
    /// Cycle 0, pointing at nadir, nothing observed.
    pub fn initial(geom: &Geometry) -> Self {
        SatState {
            cycle: 0,
            point: geom.nadir_cell(0),
            obs_used: 0,
            pending: None,
        }
    }

    pub fn nadir_col(&self, geom: &Geometry) -> usize {
        geom.nadir_col(self.cycle)
    }

    /// Observations taken plus one reserved by an in-flight slew.
    pub fn committed(&self) -> u32 {
        self.obs_used + self.pending.map_or(0, |p| p.observe as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action {
    pub target: Cell,
    pub observe: bool,
}

impl Action {
    pub fn observe(target: Cell) -> Self {
        Action {
            target,
            observe: true,
        }
    }

    pub fn point(target: Cell) -> Self {
        Action {
            target,
            observe: false,
        }
    }

    pub fn hold(state: &SatState) -> Self {
        match state.pending {
            Some(p) => Action::continue_slew(&p),
            None => Action::point(state.point),
        }
    }

    pub fn continue_slew(p: &PendingSlew) -> Self {
        Action {
            target: p.target,
            observe: p.observe,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintViolation {
    #[error("observation budget exceeded ({used} > {budget})")]
    Budget { used: u32, budget: u32 },
    #[error("target column {col} not yet seen (visible through {visible_through})")]
    UnseenTarget { col: usize, visible_through: usize },
    #[error("target {0:?} never enters the sensor envelope")]
    Envelope(Cell),
    #[error("slew needs {needed} cycles, observation recorded after {taken}")]
    SlewTime { needed: u32, taken: u32 },
    #[error("action deviates from the in-flight slew")]
    PendingSlew,
    #[error("target {0:?} outside the grid")]
    OutOfGrid(Cell),
    #[error("flight is over")]
    FlightOver,
    #[error("recorded observation {recorded:?} but replay gives {expected:?}")]
    ObservationMismatch {
        recorded: Option<Cell>,
        expected: Option<Cell>,
    },
    #[error("recorded utility {recorded} but truth gives {expected}")]
    UtilityMismatch { recorded: f64, expected: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: SatState,
    /// Cell observed during this cycle.
    pub observed: Option<Cell>,
}

/// Applies `action` during `state.cycle`.
///
/// A hold (same target, no observation) is always legal. Any other action must
/// target a seen cell that the sensor can reach inside the envelope; if that
/// takes more than one cycle the slew stays pending and the only legal action
/// is to continue it. Observations happen at the end of the arrival cycle.
pub fn transition(scenario: &Scenario, state: &SatState, action: Action) -> Result<Step> {
    let geom = scenario.geometry();
    let fail = |violation| Error::Constraint {
        cycle: state.cycle,
        violation,
    };
    if state.cycle >= scenario.flight().n_cycles {
        return Err(fail(ConstraintViolation::FlightOver));
    }
    if !scenario.truth().contains(action.target) {
        return Err(fail(ConstraintViolation::OutOfGrid(action.target)));
    }
    let mut next = SatState {
        cycle: state.cycle + 1,
        ..*state
    };
    let mut observed = None;

    if let Some(p) = state.pending {
        if action != Action::continue_slew(&p) {
            return Err(fail(ConstraintViolation::PendingSlew));
        }
        if p.remaining == 1 {
            next.pending = None;
            next.point = p.target;
            if p.observe {
                next.obs_used += 1;
                observed = Some(p.target);
            }
        } else {
            next.pending = Some(PendingSlew {
                remaining: p.remaining - 1,
                ..p
            });
        }
        return Ok(Step {
            state: next,
            observed,
        });
    }

    if !action.observe && action.target == state.point {
        return Ok(Step {
            state: next,
            observed,
        });
    }
    let view = LookaheadView::at(geom, state.cycle);
    if !view.contains(action.target) {
        return Err(fail(ConstraintViolation::UnseenTarget {
            col: action.target.col,
            visible_through: view.visible_through_col,
        }));
    }
    if action.observe && state.committed() + 1 > scenario.budget() {
        return Err(fail(ConstraintViolation::Budget {
            used: state.committed() + 1,
            budget: scenario.budget(),
        }));
    }
    match geom.slew_cycles(state.point, action.target, state.cycle) {
        SlewCycles::Unreachable => Err(fail(ConstraintViolation::Envelope(action.target))),
        SlewCycles::Cycles(1) => {
            next.point = action.target;
            if action.observe {
                next.obs_used += 1;
                observed = Some(action.target);
            }
            Ok(Step {
                state: next,
                observed,
            })
        }
        SlewCycles::Cycles(k) => {
            next.pending = Some(PendingSlew {
                target: action.target,
                remaining: k - 1,
                observe: action.observe,
            });
            Ok(Step {
                state: next,
                observed,
            })
        }
    }
}
