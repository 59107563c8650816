//! Short-horizon beam search over action sequences.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{idle_action, ranked_one_cycle, Plan};
use crate::error::{Error, Result};
use crate::flight::{transition, Action, LookaheadView, SatState};
use crate::geogrid::{Cell, Scenario};
use crate::slew::SlewCycles;

/// How a node's children are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChildPolicy {
    /// Best and second-best one-cycle observations plus one multi-cycle slew.
    Standard,
    /// Every feasible action: hold, and point or observe at each reachable cell.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamConfig {
    pub depth: usize,
    /// Branches kept per level; `None` keeps all.
    pub width: Option<usize>,
    pub children: ChildPolicy,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            depth: 10,
            width: Some(3),
            children: ChildPolicy::Standard,
        }
    }
}

impl BeamConfig {
    /// No pruning and every action expanded: an exact search to `depth`.
    pub fn exhaustive(depth: usize) -> Self {
        BeamConfig {
            depth,
            width: None,
            children: ChildPolicy::Exhaustive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.width == Some(0) {
            return Err(Error::param("beam depth and width must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct Node {
    state: SatState,
    utility: f64,
    obs: u32,
    actions: Vec<Action>,
}

/// Higher utility first, then fewer observations, then smaller action list.
fn rank(a: &Node, b: &Node) -> Ordering {
    b.utility
        .total_cmp(&a.utility)
        .then(a.obs.cmp(&b.obs))
        .then_with(|| a.actions.cmp(&b.actions))
}

struct Search<'a> {
    scenario: &'a Scenario,
    view: LookaheadView,
    end_cycle: usize,
    obs_allowed: u32,
    root_committed: u32,
    policy: ChildPolicy,
    /// Cells reachable before `end_cycle`, by utility then row-major order.
    by_utility: Vec<(Cell, f64)>,
}

impl Search<'_> {
    fn can_observe(&self, s: &SatState) -> bool {
        s.committed() - self.root_committed < self.obs_allowed
            && s.committed() < self.scenario.budget()
    }

    fn children(&self, s: &SatState) -> Vec<Action> {
        if s.pending.is_some() {
            return vec![Action::hold(s)];
        }
        match self.policy {
            ChildPolicy::Standard => self.standard_children(s),
            ChildPolicy::Exhaustive => self.all_children(s),
        }
    }

    fn standard_children(&self, s: &SatState) -> Vec<Action> {
        if !self.can_observe(s) {
            return vec![idle_action(self.scenario, s)];
        }
        let mut out: Vec<Action> = ranked_one_cycle(self.scenario, s, &self.view)
            .iter()
            .take(2)
            .map(|c| Action::observe(c.cell))
            .collect();
        match self.far_target(s) {
            Some(c) => out.push(Action::observe(c)),
            None => out.push(idle_action(self.scenario, s)),
        }
        out
    }

    /// Highest-utility cell needing at least two cycles of slew that still
    /// arrives before the horizon. Ties: fewer cycles, then row-major order.
    fn far_target(&self, s: &SatState) -> Option<Cell> {
        let geom = self.scenario.geometry();
        let remaining = (self.end_cycle - s.cycle) as u32;
        if remaining < 2 {
            return None;
        }
        let mut i = 0;
        while i < self.by_utility.len() {
            let u = self.by_utility[i].1;
            let mut best: Option<(u32, Cell)> = None;
            while i < self.by_utility.len() && self.by_utility[i].1 == u {
                let cell = self.by_utility[i].0;
                i += 1;
                if best.is_some_and(|(k, _)| k == 2) {
                    continue;
                }
                if let SlewCycles::Cycles(k) = geom.slew_cycles(s.point, cell, s.cycle) {
                    if (2..=remaining).contains(&k) && best.is_none_or(|(bk, _)| k < bk) {
                        best = Some((k, cell));
                    }
                }
            }
            if let Some((_, c)) = best {
                return Some(c);
            }
        }
        None
    }

    fn all_children(&self, s: &SatState) -> Vec<Action> {
        let geom = self.scenario.geometry();
        let remaining = (self.end_cycle - s.cycle) as u32;
        let observe = self.can_observe(s);
        let mut out = vec![Action::hold(s)];
        let Some(bx) = geom.reach_box(s.cycle, remaining, &self.view) else {
            return out;
        };
        for cell in bx.cells() {
            let Some(k) = geom.slew_cycles(s.point, cell, s.cycle).cycles() else {
                continue;
            };
            if k > remaining {
                continue;
            }
            if cell != s.point {
                out.push(Action::point(cell));
            }
            if observe {
                out.push(Action::observe(cell));
            }
        }
        out
    }
}

/// Best action sequence of up to `config.depth` cycles from `state`, using no
/// more than `obs_allowed` new observations. Candidate cells are limited to
/// what the lookahead sensor has revealed at `state.cycle`.
pub fn beam_search(
    scenario: &Scenario,
    state: &SatState,
    obs_allowed: u32,
    config: &BeamConfig,
) -> Result<Plan> {
    config.validate()?;
    let geom = scenario.geometry();
    let depth = config
        .depth
        .min(scenario.n_cycles().saturating_sub(state.cycle));
    let view = LookaheadView::at(geom, state.cycle);
    let end_cycle = state.cycle + depth;

    let mut by_utility: Vec<(Cell, f64)> = match (
        config.children,
        geom.reach_box(state.cycle, depth as u32, &view),
    ) {
        (ChildPolicy::Standard, Some(bx)) if depth > 0 => {
            bx.cells().map(|c| (c, scenario.truth_utility(c))).collect()
        }
        _ => Vec::new(),
    };
    by_utility.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let search = Search {
        scenario,
        view,
        end_cycle,
        obs_allowed,
        root_committed: state.committed(),
        policy: config.children,
        by_utility,
    };

    let mut beam = vec![Node {
        state: *state,
        utility: 0.0,
        obs: 0,
        actions: Vec::with_capacity(depth),
    }];
    for _ in 0..depth {
        let mut level: HashMap<SatState, Node> = HashMap::new();
        for node in &beam {
            for action in search.children(&node.state) {
                let step = transition(scenario, &node.state, action)?;
                let gained = step.observed.map_or(0.0, |c| scenario.truth_utility(c));
                let mut actions = node.actions.clone();
                actions.push(action);
                let child = Node {
                    state: step.state,
                    utility: node.utility + gained,
                    obs: step.state.committed() - search.root_committed,
                    actions,
                };
                match level.get_mut(&child.state) {
                    Some(kept) if rank(&child, kept) == Ordering::Less => *kept = child,
                    Some(_) => {}
                    None => {
                        level.insert(child.state, child);
                    }
                }
            }
        }
        beam = level.into_values().collect();
        beam.sort_by(rank);
        if let Some(w) = config.width {
            beam.truncate(w);
        }
    }
    let best = beam.into_iter().min_by(rank).expect("beam never empties");
    Ok(Plan {
        start_cycle: state.cycle,
        actions: best.actions,
        planned_utility: best.utility,
    })
}
