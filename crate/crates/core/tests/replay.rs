use proptest::prelude::*;

use dyntarget::cli::RunConfig;
use dyntarget::flight::{transition, Action, SatState};
use dyntarget::geogrid::{Cell, Scenario};
use dyntarget::harness::{replay_check, run_episode, ReplayViolation, TraceStep};
use dyntarget::planners::{Distributor, PlannerSpec};
use dyntarget::slew::SlewCycles;

fn scenario(json: &str) -> Scenario {
    RunConfig::from_json(json)
        .unwrap()
        .build_scenario(0)
        .unwrap()
}

fn ca() -> Scenario {
    scenario(r#"{"family": "CA", "flight": {"n_cycles": 120}}"#)
}

fn greedy_trace(s: &Scenario) -> Vec<TraceStep> {
    run_episode(s, &PlannerSpec::Greedy).unwrap().trace
}

fn violation(s: &Scenario, trace: &[TraceStep]) -> ReplayViolation {
    replay_check(s, trace).unwrap_err().violation
}

/// Trace built by applying `actions` with the library transition.
fn trace_of(s: &Scenario, actions: &[Action]) -> Vec<TraceStep> {
    let mut state = SatState::initial(s.geometry());
    let mut out = Vec::new();
    for (cycle, &a) in actions.iter().enumerate() {
        let step = transition(s, &state, a).unwrap();
        out.push(TraceStep {
            cycle,
            action: a,
            observed: step.observed,
            utility: step.observed.map_or(0.0, |c| s.truth_utility(c)),
            state: step.state,
        });
        state = step.state;
    }
    out
}

fn holds_to_end(s: &Scenario, mut trace: Vec<TraceStep>) -> Vec<TraceStep> {
    while trace.len() < s.n_cycles() {
        let state = trace
            .last()
            .map_or(SatState::initial(s.geometry()), |t| t.state);
        let a = Action::hold(&state);
        let step = transition(s, &state, a).unwrap();
        trace.push(TraceStep {
            cycle: trace.len(),
            action: a,
            observed: step.observed,
            utility: step.observed.map_or(0.0, |c| s.truth_utility(c)),
            state: step.state,
        });
    }
    trace
}

#[test]
fn every_planner_replays_cleanly() {
    for family in ["CA", "CAPD", "CART", "SH"] {
        let s = scenario(&format!(
            r#"{{"family": "{family}", "flight": {{"n_cycles": 150}}}}"#
        ));
        for spec in [
            PlannerSpec::NadirOnly,
            PlannerSpec::Greedy,
            PlannerSpec::GreedyHistorical,
            PlannerSpec::hierarchical(Distributor::Uniform),
            PlannerSpec::hierarchical(Distributor::Preinformed),
            PlannerSpec::hierarchical(Distributor::Gsdi),
        ] {
            if spec.incompatibility(&s).is_some() {
                continue;
            }
            let ep = run_episode(&s, &spec).unwrap();
            assert_eq!(
                replay_check(&s, &ep.trace),
                Ok(()),
                "{family} {}",
                spec.id()
            );
            let sum: f64 = ep.trace.iter().map(|t| t.utility).sum();
            assert_eq!(sum, ep.total_utility);
        }
    }
}

#[test]
fn truncated_trace_is_rejected() {
    let s = ca();
    let mut t = greedy_trace(&s);
    t.pop();
    assert_eq!(
        violation(&s, &t),
        ReplayViolation::Length {
            expected: 120,
            found: 119
        }
    );
}

#[test]
fn relabelled_cycle_is_rejected() {
    let s = ca();
    let mut t = greedy_trace(&s);
    t[5].cycle = 6;
    assert_eq!(
        violation(&s, &t),
        ReplayViolation::CycleLabel { index: 5, found: 6 }
    );
}

#[test]
fn budget_overrun_is_rejected() {
    let s = ca();
    let t = greedy_trace(&s);
    let used = t.iter().filter(|x| x.observed.is_some()).count() as u32;
    assert!(used > 1);
    let tight = s.with_budget(used - 1);
    assert_eq!(
        violation(&tight, &t),
        ReplayViolation::Budget {
            observation_index: used,
            budget: used - 1
        }
    );
}

#[test]
fn forged_utility_and_observation_are_rejected() {
    let s = ca();
    let t = greedy_trace(&s);
    let i = t.iter().position(|x| x.observed.is_some()).unwrap();

    let mut forged = t.clone();
    forged[i].utility += 1.0;
    assert!(matches!(
        violation(&s, &forged),
        ReplayViolation::UtilityMismatch { .. }
    ));

    let mut dropped = t.clone();
    dropped[i].observed = None;
    dropped[i].utility = 0.0;
    assert!(matches!(
        violation(&s, &dropped),
        ReplayViolation::ObservationMismatch { .. }
    ));
}

#[test]
fn unseen_and_out_of_envelope_targets_are_rejected() {
    let s = ca();
    let g = s.geometry();
    let mut t = holds_to_end(&s, Vec::new());

    // Beyond the lookahead sensor at cycle 10.
    let far = Cell::new(g.nadir_col(10) + g.lookahead_cells() + 1, g.nadir_row());
    t[10].action = Action::observe(far);
    assert!(matches!(
        violation(&s, &t),
        ReplayViolation::Visibility { .. }
    ));

    // Already behind the envelope at cycle 100.
    let behind = Cell::new(3, g.nadir_row());
    let mut t = holds_to_end(&s, Vec::new());
    t[100].action = Action::point(behind);
    assert_eq!(violation(&s, &t), ReplayViolation::Envelope(behind));

    let mut t = holds_to_end(&s, Vec::new());
    t[3].action = Action::point(Cell::new(5, s.truth().height()));
    assert!(matches!(violation(&s, &t), ReplayViolation::OutOfGrid(_)));
}

#[test]
fn interrupted_slew_is_rejected() {
    let s = ca();
    let g = s.geometry();
    let start = SatState::initial(g);
    let far = (0..s.truth().height())
        .flat_map(|row| (0..40).map(move |col| Cell::new(col, row)))
        .find(|&c| matches!(g.slew_cycles(start.point, c, 0), SlewCycles::Cycles(k) if k >= 3))
        .expect("some cell needs a long slew");
    let t = trace_of(&s, &[Action::observe(far)]);
    assert!(t[0].state.pending.is_some());
    let mut t = holds_to_end(&s, t);
    assert_eq!(replay_check(&s, &t), Ok(()));
    t[1].action = Action::point(t[0].state.point);
    assert_eq!(violation(&s, &t), ReplayViolation::PendingInterrupted(far));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The replay accepts exactly the steps the transition function accepts.
    #[test]
    fn replay_agrees_with_transition(
        seed in 0u64..1000,
        picks in proptest::collection::vec((0usize..60, 0usize..9, any::<bool>()), 20),
    ) {
        let s = scenario(&format!(
            r#"{{"family": "CA", "seed": {seed}, "resolution_km": 30.0, "budget": 4,
                "flight": {{"n_cycles": 20, "swath_km": 270.0}}}}"#
        ));
        let mut state = SatState::initial(s.geometry());
        let mut trace = Vec::new();
        for (cycle, &(col, row, observe)) in picks.iter().enumerate() {
            let a = match state.pending {
                Some(p) if cycle % 3 != 0 => Action::continue_slew(&p),
                _ => Action { target: Cell::new(col, row), observe },
            };
            match transition(&s, &state, a) {
                Ok(step) => {
                    trace.push(TraceStep {
                        cycle,
                        action: a,
                        observed: step.observed,
                        utility: step.observed.map_or(0.0, |c| s.truth_utility(c)),
                        state: step.state,
                    });
                    state = step.state;
                    let r = replay_check(&s, &trace);
                    prop_assert!(
                        r.is_ok() || matches!(r, Err(ref f) if matches!(f.violation, ReplayViolation::Length { .. })),
                        "replay rejects a legal prefix: {r:?}"
                    );
                }
                Err(_) => {
                    let mut bad = trace.clone();
                    bad.push(TraceStep { cycle, action: a, observed: None, utility: 0.0, state });
                    let r = replay_check(&s, &bad);
                    prop_assert!(
                        matches!(r, Err(ref f) if f.cycle == cycle && !matches!(f.violation, ReplayViolation::Length { .. })),
                        "replay accepts an illegal action {a:?}: {r:?}"
                    );
                    break;
                }
            }
        }
    }
}
