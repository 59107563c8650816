//! Observation planners: baselines, beam search, budget distribution, and the
//! hierarchical loop that ties them together.

mod baseline;
mod beam;
mod distribute;
mod hierarchical;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flight::{Action, LookaheadView, SatState};
use crate::geogrid::{Cell, Scenario};
use crate::utility::UtilityKind;

pub use baseline::{
    plan_nadir_only, step_greedy, step_greedy_historical, upper_bound, GreedyHistoricalPolicy,
    GreedyPolicy, NadirOnlyPolicy,
};
pub use beam::{beam_search, BeamConfig, ChildPolicy};
pub use distribute::{
    apportion, column_partitions, distribute_by_map, distribute_gsdi, distribute_preinformed,
    distribute_uniform, n_partitions, partition_weights, PartitionBudget, PARTITION_CYCLES,
};
pub use hierarchical::{run_hierarchical, HierarchicalPolicy};

/// A planned action sequence starting at `start_cycle`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub start_cycle: usize,
    pub actions: Vec<Action>,
    pub planned_utility: f64,
}

impl Plan {
    /// Actions carrying the observe flag. A multi-cycle observing slew
    /// repeats the flag on each of its cycles but observes once.
    pub fn observations(&self) -> usize {
        self.actions.iter().filter(|a| a.observe).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Distributor {
    #[serde(rename = "U")]
    Uniform,
    #[serde(rename = "P")]
    Preinformed,
    #[serde(rename = "GSDI")]
    Gsdi,
}

/// Planner selection as named in result tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlannerSpec {
    NadirOnly,
    Greedy,
    GreedyHistorical,
    Hierarchical {
        distributor: Distributor,
        beam: BeamConfig,
    },
}

impl PlannerSpec {
    pub fn hierarchical(distributor: Distributor) -> Self {
        PlannerSpec::Hierarchical {
            distributor,
            beam: BeamConfig::default(),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            PlannerSpec::NadirOnly => "NO",
            PlannerSpec::Greedy => "G",
            PlannerSpec::GreedyHistorical => "GH",
            PlannerSpec::Hierarchical { distributor, .. } => match distributor {
                Distributor::Uniform => "U",
                Distributor::Preinformed => "P",
                Distributor::Gsdi => "GSDI",
            },
        }
    }

    /// Parses a table id; hierarchical planners get `beam`.
    pub fn from_id(id: &str, beam: BeamConfig) -> Option<Self> {
        let d = |distributor| PlannerSpec::Hierarchical { distributor, beam };
        Some(match id {
            "NO" => PlannerSpec::NadirOnly,
            "G" => PlannerSpec::Greedy,
            "GH" => PlannerSpec::GreedyHistorical,
            "U" => d(Distributor::Uniform),
            "P" => d(Distributor::Preinformed),
            "GSDI" => d(Distributor::Gsdi),
            _ => return None,
        })
    }

    /// Why this planner cannot run on `scenario`, if it cannot.
    pub fn incompatibility(&self, scenario: &Scenario) -> Option<String> {
        match self {
            PlannerSpec::Hierarchical {
                distributor: Distributor::Preinformed,
                ..
            } if !matches!(
                scenario.utility_kind(),
                UtilityKind::CAPD | UtilityKind::CART
            ) =>
            {
                Some(format!(
                    "preinformed distribution needs known targets; {} has none",
                    scenario.utility_kind()
                ))
            }
            PlannerSpec::Hierarchical {
                distributor: Distributor::Gsdi,
                ..
            } if scenario.overlay().is_none() => Some("GSDI needs a geostationary overlay".into()),
            _ => None,
        }
    }

    pub fn policy(&self, scenario: &Scenario) -> Result<Box<dyn Policy>> {
        Ok(match *self {
            PlannerSpec::NadirOnly => Box::new(NadirOnlyPolicy::new(scenario)),
            PlannerSpec::Greedy => Box::new(GreedyPolicy),
            PlannerSpec::GreedyHistorical => Box::new(GreedyHistoricalPolicy::default()),
            PlannerSpec::Hierarchical { distributor, beam } => {
                Box::new(HierarchicalPolicy::new(scenario, distributor, beam)?)
            }
        })
    }
}

/// Per-cycle decision maker driven by the episode runner.
pub trait Policy {
    fn next_action(&mut self, scenario: &Scenario, state: &SatState) -> Result<Action>;

    /// Cycles at which the planner re-apportioned its budget.
    fn redistributions(&self) -> Vec<usize> {
        Vec::new()
    }
}

/// A one-cycle observation candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub cell: Cell,
    pub utility: f64,
    pub slew_s: f64,
}

/// One-cycle candidates ordered best first: utility, then shorter slew, then
/// row-major cell order.
pub(crate) fn ranked_one_cycle(
    scenario: &Scenario,
    state: &SatState,
    view: &LookaheadView,
) -> Vec<Candidate> {
    let geom = scenario.geometry();
    let mut out: Vec<Candidate> = geom
        .one_cycle_set(state.point, state.cycle, view)
        .into_iter()
        .map(|cell| Candidate {
            cell,
            utility: scenario.truth_utility(cell),
            slew_s: geom.slew_seconds(state.point, cell, state.cycle),
        })
        .collect();
    out.sort_by(|a, b| {
        b.utility
            .total_cmp(&a.utility)
            .then(a.slew_s.total_cmp(&b.slew_s))
            .then(a.cell.cmp(&b.cell))
    });
    out
}

/// What a planner does when it does not observe: continue any slew, hold a
/// pointing still inside the envelope, otherwise move back toward nadir.
pub fn idle_action(scenario: &Scenario, state: &SatState) -> Action {
    if state.pending.is_some() {
        return Action::hold(state);
    }
    let geom = scenario.geometry();
    if geom.in_envelope(state.point, state.cycle) {
        return Action::hold(state);
    }
    let view = LookaheadView::at(geom, state.cycle);
    let near_nadir = geom
        .one_cycle_set(state.point, state.cycle, &view)
        .into_iter()
        .min_by(|a, b| {
            let (pa, ra) = geom.cell_to_angles(*a, state.cycle);
            let (pb, rb) = geom.cell_to_angles(*b, state.cycle);
            (pa * pa + ra * ra)
                .total_cmp(&(pb * pb + rb * rb))
                .then(a.cmp(b))
        });
    if let Some(c) = near_nadir {
        return Action::point(c);
    }
    // Nothing within one cycle: start a longer slew to the nadir track.
    let row = geom.nadir_row();
    (geom.nadir_col(state.cycle)..=view.visible_through_col)
        .map(|col| Cell::new(col, row))
        .filter_map(|c| {
            geom.slew_cycles(state.point, c, state.cycle)
                .cycles()
                .map(|k| (k, c))
        })
        .min()
        .map_or_else(|| Action::hold(state), |(_, c)| Action::point(c))
}
