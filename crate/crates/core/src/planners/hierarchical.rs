//! The two-level planner: a budget distribution over partitions on top, a
//! beam search inside each partition.

use std::collections::VecDeque;

use super::{
    beam_search, distribute_gsdi, distribute_preinformed, distribute_uniform, idle_action,
    n_partitions, BeamConfig, Distributor, PartitionBudget, PlannerSpec, Policy, PARTITION_CYCLES,
};
use crate::error::{Error, Result};
use crate::flight::{Action, SatState};
use crate::geogrid::Scenario;
use crate::harness::{run_episode, EpisodeResult};

pub struct HierarchicalPolicy {
    distributor: Distributor,
    beam: BeamConfig,
    distribution: PartitionBudget,
    frame_index: Option<usize>,
    carry: u32,
    queue: VecDeque<Action>,
    partition: Option<usize>,
    committed_at_start: u32,
    allowance: u32,
    redistributed_at: Vec<usize>,
}

impl HierarchicalPolicy {
    pub fn new(scenario: &Scenario, distributor: Distributor, beam: BeamConfig) -> Result<Self> {
        beam.validate()?;
        let parts = n_partitions(scenario.n_cycles());
        let budget = scenario.budget();
        let (distribution, frame_index) = match distributor {
            Distributor::Uniform => (distribute_uniform(budget, parts), None),
            Distributor::Preinformed => (distribute_preinformed(scenario, budget)?, None),
            Distributor::Gsdi => {
                let overlay = scenario
                    .overlay()
                    .ok_or_else(|| Error::param("GSDI needs a geostationary overlay"))?;
                let i = overlay.frame_index_at(0).unwrap_or(0);
                (
                    distribute_gsdi(scenario, &overlay.frames()[i], budget, 0)?,
                    Some(i),
                )
            }
        };
        Ok(HierarchicalPolicy {
            distributor,
            beam,
            distribution,
            frame_index,
            carry: 0,
            queue: VecDeque::new(),
            partition: None,
            committed_at_start: 0,
            allowance: 0,
            redistributed_at: Vec::new(),
        })
    }

    pub fn distribution(&self) -> &PartitionBudget {
        &self.distribution
    }

    fn start_partition(&mut self, scenario: &Scenario, state: &SatState, p: usize) -> Result<()> {
        if self.partition.is_some() {
            let used = state.committed() - self.committed_at_start;
            self.carry = self.allowance.saturating_sub(used);
        }
        let remaining = scenario.budget().saturating_sub(state.committed());
        if self.distributor == Distributor::Gsdi {
            let overlay = scenario.overlay().expect("checked at construction");
            let latest = overlay.frame_index_at(state.cycle);
            if let Some(i) = latest.filter(|&i| Some(i) != self.frame_index) {
                self.distribution = distribute_gsdi(scenario, &overlay.frames()[i], remaining, p)?;
                self.frame_index = Some(i);
                self.carry = 0;
                self.redistributed_at.push(state.cycle);
            }
        }
        self.allowance = (self.distribution.get(p) + self.carry).min(remaining);
        self.committed_at_start = state.committed();
        self.partition = Some(p);
        let plan = beam_search(scenario, state, self.allowance, &self.beam)?;
        self.queue = plan.actions.into();
        Ok(())
    }
}

impl Policy for HierarchicalPolicy {
    fn next_action(&mut self, scenario: &Scenario, state: &SatState) -> Result<Action> {
        let p = state.cycle / PARTITION_CYCLES;
        if self.partition != Some(p) {
            self.start_partition(scenario, state, p)?;
        }
        Ok(self
            .queue
            .pop_front()
            .unwrap_or_else(|| idle_action(scenario, state)))
    }

    fn redistributions(&self) -> Vec<usize> {
        self.redistributed_at.clone()
    }
}

pub fn run_hierarchical(
    scenario: &Scenario,
    distributor: Distributor,
    config: BeamConfig,
) -> Result<EpisodeResult> {
    run_episode(
        scenario,
        &PlannerSpec::Hierarchical {
            distributor,
            beam: config,
        },
    )
}
