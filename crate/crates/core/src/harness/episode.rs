use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flight::{transition, Action, SatState};
use crate::geogrid::{Cell, Scenario};
use crate::planners::PlannerSpec;
use crate::utility::UtilityKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub cycle: usize,
    pub action: Action,
    pub observed: Option<Cell>,
    /// Truth utility of `observed`, zero without an observation.
    pub utility: f64,
    /// State after the action.
    pub state: SatState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub planner_id: String,
    pub seed: u64,
    pub kind: UtilityKind,
    pub total_utility: f64,
    pub observations_used: u32,
    pub trace: Vec<TraceStep>,
    pub wall_time_ms: f64,
    /// Cycles at which the planner re-apportioned its budget.
    pub redistributions: Vec<usize>,
}

impl EpisodeResult {
    pub fn observed_cells(&self) -> impl Iterator<Item = (usize, Cell)> + '_ {
        self.trace
            .iter()
            .filter_map(|s| s.observed.map(|c| (s.cycle, c)))
    }
}

/// Flies the whole scenario under `planner`. A constraint violation aborts
/// the episode; the partial trace is logged.
pub fn run_episode(scenario: &Scenario, planner: &PlannerSpec) -> Result<EpisodeResult> {
    if let Some(why) = planner.incompatibility(scenario) {
        return Err(Error::Config(format!("{} cannot run: {why}", planner.id())));
    }
    let started = Instant::now();
    let mut policy = planner.policy(scenario)?;
    let mut state = SatState::initial(scenario.geometry());
    let mut trace = Vec::with_capacity(scenario.n_cycles());
    let mut total = 0.0;
    for cycle in 0..scenario.n_cycles() {
        let action = policy.next_action(scenario, &state)?;
        let step = match transition(scenario, &state, action) {
            Ok(step) => step,
            Err(e) => {
                log::error!(
                    "{} aborted at cycle {cycle} after {} steps ({} observations): {e}",
                    planner.id(),
                    trace.len(),
                    state.obs_used
                );
                for s in &trace {
                    log::debug!("{s:?}");
                }
                return Err(e);
            }
        };
        let utility = step.observed.map_or(0.0, |c| scenario.truth_utility(c));
        total += utility;
        trace.push(TraceStep {
            cycle,
            action,
            observed: step.observed,
            utility,
            state: step.state,
        });
        state = step.state;
    }
    Ok(EpisodeResult {
        planner_id: planner.id().to_string(),
        seed: scenario.seed(),
        kind: scenario.utility_kind(),
        total_utility: total,
        observations_used: state.obs_used,
        trace,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        redistributions: policy.redistributions(),
    })
}
