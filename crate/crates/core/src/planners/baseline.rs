use super::{idle_action, ranked_one_cycle, Plan, Policy};
use crate::error::Result;
use crate::flight::{Action, LookaheadView, SatState};
use crate::geogrid::Scenario;

/// Evenly spaced nadir observations, blind to the environment.
pub fn plan_nadir_only(scenario: &Scenario) -> Plan {
    let n = scenario.n_cycles();
    let budget = scenario.budget() as usize;
    let geom = scenario.geometry();
    let mut observe = vec![false; n];
    for i in 0..budget {
        observe[i * n / budget] = true;
    }
    let actions: Vec<Action> = (0..n)
        .map(|t| Action {
            target: geom.nadir_cell(t),
            observe: observe[t],
        })
        .collect();
    let planned_utility = actions
        .iter()
        .filter(|a| a.observe)
        .map(|a| scenario.truth_utility(a.target))
        .sum();
    Plan {
        start_cycle: 0,
        actions,
        planned_utility,
    }
}

/// Follows [`plan_nadir_only`]. When tracking nadir needs a multi-cycle slew
/// (coarse grids), observations falling inside the slew move to the next
/// free cycle.
pub struct NadirOnlyPolicy {
    plan: Plan,
    owed: u32,
}

impl NadirOnlyPolicy {
    pub fn new(scenario: &Scenario) -> Self {
        NadirOnlyPolicy {
            plan: plan_nadir_only(scenario),
            owed: 0,
        }
    }
}

impl Policy for NadirOnlyPolicy {
    fn next_action(&mut self, scenario: &Scenario, state: &SatState) -> Result<Action> {
        let Some(&planned) = self.plan.actions.get(state.cycle) else {
            return Ok(idle_action(scenario, state));
        };
        if planned.observe {
            self.owed += 1;
        }
        if let Some(p) = state.pending {
            return Ok(Action::continue_slew(&p));
        }
        let observe = self.owed > 0 && state.committed() < scenario.budget();
        if observe {
            self.owed -= 1;
        }
        Ok(Action {
            target: planned.target,
            observe,
        })
    }
}

/// Observes the best one-cycle target while the cycle index is below the
/// budget, so the whole budget is spent as early as possible.
pub fn step_greedy(scenario: &Scenario, state: &SatState) -> Action {
    if state.pending.is_some()
        || state.cycle >= scenario.budget() as usize
        || state.committed() >= scenario.budget()
    {
        return idle_action(scenario, state);
    }
    let view = LookaheadView::at(scenario.geometry(), state.cycle);
    match ranked_one_cycle(scenario, state, &view).first() {
        Some(best) => Action::observe(best.cell),
        None => idle_action(scenario, state),
    }
}

pub struct GreedyPolicy;

impl Policy for GreedyPolicy {
    fn next_action(&mut self, scenario: &Scenario, state: &SatState) -> Result<Action> {
        Ok(step_greedy(scenario, state))
    }
}

/// Observes the best one-cycle target only when it beats the running mean of
/// the best values seen so far (current cycle included).
pub fn step_greedy_historical(
    scenario: &Scenario,
    state: &SatState,
    history: &mut Vec<f64>,
) -> Action {
    if state.pending.is_some() {
        return idle_action(scenario, state);
    }
    let view = LookaheadView::at(scenario.geometry(), state.cycle);
    let ranked = ranked_one_cycle(scenario, state, &view);
    let Some(best) = ranked.first() else {
        return idle_action(scenario, state);
    };
    history.push(best.utility);
    let mean = history.iter().sum::<f64>() / history.len() as f64;
    if best.utility > mean && state.committed() < scenario.budget() {
        Action::observe(best.cell)
    } else {
        idle_action(scenario, state)
    }
}

#[derive(Debug, Default)]
pub struct GreedyHistoricalPolicy {
    history: Vec<f64>,
}

impl Policy for GreedyHistoricalPolicy {
    fn next_action(&mut self, scenario: &Scenario, state: &SatState) -> Result<Action> {
        Ok(step_greedy_historical(scenario, state, &mut self.history))
    }
}

/// Sum of the `budget` largest per-cycle envelope maxima of truth utility.
/// Not achievable in general; it ignores slew time and visibility.
pub fn upper_bound(scenario: &Scenario) -> f64 {
    let geom = scenario.geometry();
    let map = scenario.truth_utility_map();
    let Some(env0) = geom.sensor_envelope(0) else {
        return 0.0;
    };
    let col_max: Vec<f64> = (0..map.width)
        .map(|col| {
            (env0.row_lo..=env0.row_hi)
                .map(|row| map.get(col, row))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut per_cycle: Vec<f64> = (0..scenario.n_cycles())
        .filter_map(|t| {
            let env = geom.sensor_envelope(t)?;
            Some(
                col_max[env.col_lo..=env.col_hi]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max),
            )
        })
        .collect();
    per_cycle.sort_by(|a, b| b.total_cmp(a));
    per_cycle.iter().take(scenario.budget() as usize).sum()
}
