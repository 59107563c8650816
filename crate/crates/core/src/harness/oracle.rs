//! Exact optimum for tiny instances by exhaustive search.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::flight::{transition, Action, SatState};
use crate::geogrid::{Cell, Scenario};
use crate::planners::Plan;

pub const ORACLE_LIMIT: f64 = 1e7;

/// Rough count of transitions the search may evaluate.
pub fn oracle_size_estimate(scenario: &Scenario) -> f64 {
    let cells = scenario.truth().len() as f64;
    scenario.n_cycles() as f64 * cells * (scenario.budget() as f64 + 1.0) * (2.0 * cells + 1.0)
}

struct Oracle<'a> {
    scenario: &'a Scenario,
    cells: Vec<Cell>,
    memo: HashMap<SatState, (f64, Action)>,
}

impl Oracle<'_> {
    /// Best utility still obtainable from `s`, trying every grid cell as a
    /// pointing or observation target. Equal values keep the first action
    /// found (hold first, then row-major cells, pointing before observing).
    fn best(&mut self, s: &SatState) -> f64 {
        if s.cycle >= self.scenario.n_cycles() {
            return 0.0;
        }
        if let Some(&(v, _)) = self.memo.get(s) {
            return v;
        }
        let mut actions = vec![Action::hold(s)];
        if s.pending.is_none() {
            for &c in &self.cells {
                actions.push(Action::point(c));
                actions.push(Action::observe(c));
            }
        }
        let mut best = (f64::NEG_INFINITY, actions[0]);
        for a in actions {
            let Ok(step) = transition(self.scenario, s, a) else {
                continue;
            };
            let gained = step
                .observed
                .map_or(0.0, |c| self.scenario.truth_utility(c));
            let v = gained + self.best(&step.state);
            if v > best.0 {
                best = (v, a);
            }
        }
        self.memo.insert(*s, best);
        best.0
    }
}

/// Maximum total utility over every feasible action sequence of the whole
/// flight, with one optimal plan.
pub fn brute_force_optimal(scenario: &Scenario) -> Result<(f64, Plan)> {
    let estimate = oracle_size_estimate(scenario);
    if estimate > ORACLE_LIMIT {
        return Err(Error::InstanceTooLarge {
            estimate,
            limit: ORACLE_LIMIT,
        });
    }
    let t = scenario.truth();
    let cells = (0..t.height())
        .flat_map(|row| (0..t.width()).map(move |col| Cell { row, col }))
        .collect();
    let mut oracle = Oracle {
        scenario,
        cells,
        memo: HashMap::new(),
    };
    let start = SatState::initial(scenario.geometry());
    let value = oracle.best(&start);

    let mut actions = Vec::with_capacity(scenario.n_cycles());
    let mut s = start;
    while s.cycle < scenario.n_cycles() {
        let (_, a) = oracle.memo[&s];
        actions.push(a);
        s = transition(scenario, &s, a)?.state;
    }
    Ok((
        value,
        Plan {
            start_cycle: 0,
            actions,
            planned_utility: value,
        },
    ))
}
