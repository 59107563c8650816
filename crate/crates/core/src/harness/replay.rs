//! Feasibility replay built only from the pointing geometry and the slew-time
//! formula, so a planner or transition bug cannot vouch for itself.

use super::episode::TraceStep;
use crate::geogrid::{Cell, Scenario};
use crate::slew::slew_time_1axis;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayViolation {
    #[error("trace has {found} steps, flight has {expected} cycles")]
    Length { expected: usize, found: usize },
    #[error("step {index} is labelled cycle {found}")]
    CycleLabel { index: usize, found: usize },
    #[error("target {0:?} outside the grid")]
    OutOfGrid(Cell),
    #[error("observation {observation_index} exceeds the budget of {budget}")]
    Budget { observation_index: u32, budget: u32 },
    #[error("target {target:?} not visible (lookahead reaches column {visible_through})")]
    Visibility {
        target: Cell,
        visible_through: usize,
    },
    #[error("target {0:?} never inside the sensor envelope")]
    Envelope(Cell),
    #[error("in-flight slew to {0:?} interrupted")]
    PendingInterrupted(Cell),
    #[error("recorded observation {recorded:?}, replay gives {expected:?}")]
    ObservationMismatch {
        recorded: Option<Cell>,
        expected: Option<Cell>,
    },
    #[error("recorded utility {recorded}, truth gives {expected}")]
    UtilityMismatch { recorded: f64, expected: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cycle {cycle}: {violation}")]
pub struct ReplayFailure {
    pub cycle: usize,
    pub violation: ReplayViolation,
}

struct Replayer<'a> {
    scenario: &'a Scenario,
    res: f64,
    alt: f64,
    km_per_cycle: f64,
    nadir_row: usize,
}

impl Replayer<'_> {
    /// Column of the cell containing the sub-satellite point.
    fn nadir_col(&self, cycle: usize) -> f64 {
        (cycle as f64 * self.km_per_cycle / self.res + 1e-9).floor()
    }

    fn angles(&self, cell: Cell, cycle: usize) -> (f64, f64) {
        let along = (cell.col as f64 - self.nadir_col(cycle)) * self.res;
        let cross = (cell.row as f64 - self.nadir_row as f64) * self.res;
        (
            (along / self.alt).atan().to_degrees(),
            (cross / self.alt).atan().to_degrees(),
        )
    }

    /// Smallest whole number of cycles after which the sensor can rest on
    /// `to` inside the envelope, starting from `from` at `cycle`.
    fn cycles_needed(&self, from: Cell, to: Cell, cycle: usize) -> Option<usize> {
        let model = self.scenario.slew_model();
        let lim = model.max_off_nadir_deg;
        let cycle_s = self.scenario.flight().cycle_seconds;
        for k in 1.. {
            let arrival = cycle + k - 1;
            let (p1, r1) = self.angles(to, arrival);
            if r1.abs() > lim || p1 < -lim {
                return None;
            }
            if p1 > lim {
                continue;
            }
            let (p0, r0) = self.angles(from, arrival);
            let t = slew_time_1axis(model, (p1 - p0).abs())
                .ok()?
                .max(slew_time_1axis(model, (r1 - r0).abs()).ok()?);
            if t <= k as f64 * cycle_s {
                return Some(k);
            }
        }
        None
    }

    fn truth_utility(&self, cell: Cell) -> f64 {
        let s = self.scenario;
        let pop = s.population().map_or(0.0, |g| g.at(cell));
        let target = s.targets().is_some_and(|g| g.at(cell) >= 0.5);
        s.utility_model()
            .evaluate(s.truth().at(cell), pop, target)
            .value
    }
}

/// Re-validates every step of `trace`: visibility, envelope, slew time,
/// budget, recorded observations and utilities. Returns the first failure.
pub fn replay_check(scenario: &Scenario, trace: &[TraceStep]) -> Result<(), ReplayFailure> {
    let truth = scenario.truth();
    let r = Replayer {
        scenario,
        res: truth.resolution_km(),
        alt: scenario.flight().altitude_km,
        km_per_cycle: scenario.flight().km_per_cycle(),
        nadir_row: truth.height() / 2,
    };
    let lookahead_cells = (scenario.flight().lookahead_km / r.res + 1e-9).floor() as usize;
    let fail = |cycle, violation| Err(ReplayFailure { cycle, violation });

    let mut point = Cell::new(
        (r.nadir_col(0) as usize).min(truth.width() - 1),
        r.nadir_row,
    );
    let mut reserved: u32 = 0;
    // (target, arrival cycle, observe)
    let mut pending: Option<(Cell, usize, bool)> = None;

    for (index, step) in trace.iter().enumerate() {
        let t = index;
        if step.cycle != t {
            return fail(
                t,
                ReplayViolation::CycleLabel {
                    index,
                    found: step.cycle,
                },
            );
        }
        let a = step.action;
        let mut expected = None;
        if let Some((target, arrival, observe)) = pending {
            if a.target != target || a.observe != observe {
                return fail(t, ReplayViolation::PendingInterrupted(target));
            }
            if t == arrival {
                point = target;
                pending = None;
                if observe {
                    expected = Some(target);
                }
            }
        } else if a.observe || a.target != point {
            if !truth.contains(a.target) {
                return fail(t, ReplayViolation::OutOfGrid(a.target));
            }
            let nadir_col = r.nadir_col(t) as usize;
            let visible_through = (nadir_col + lookahead_cells).min(truth.width() - 1);
            if a.target.col > visible_through {
                return fail(
                    t,
                    ReplayViolation::Visibility {
                        target: a.target,
                        visible_through,
                    },
                );
            }
            if a.observe {
                reserved += 1;
                if reserved > scenario.budget() {
                    return fail(
                        t,
                        ReplayViolation::Budget {
                            observation_index: reserved,
                            budget: scenario.budget(),
                        },
                    );
                }
            }
            let Some(k) = r.cycles_needed(point, a.target, t) else {
                return fail(t, ReplayViolation::Envelope(a.target));
            };
            if k == 1 {
                point = a.target;
                if a.observe {
                    expected = Some(a.target);
                }
            } else {
                pending = Some((a.target, t + k - 1, a.observe));
            }
        }
        if step.observed != expected {
            return fail(
                t,
                ReplayViolation::ObservationMismatch {
                    recorded: step.observed,
                    expected,
                },
            );
        }
        let want = expected.map_or(0.0, |c| r.truth_utility(c));
        if (step.utility - want).abs() > 1e-9 * want.abs().max(1.0) {
            return fail(
                t,
                ReplayViolation::UtilityMismatch {
                    recorded: step.utility,
                    expected: want,
                },
            );
        }
    }
    if trace.len() != scenario.n_cycles() {
        return fail(
            trace.len(),
            ReplayViolation::Length {
                expected: scenario.n_cycles(),
                found: trace.len(),
            },
        );
    }
    Ok(())
}
