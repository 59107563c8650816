use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::flight::SatState;
use crate::geogrid::{save_grid, Scenario};
use crate::harness::{
    aggregate, brute_force_optimal, replay_check, run_episode, AggregateRow, ResultRow,
};
use crate::planners::{beam_search, upper_bound, BeamConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const ORACLE_FILE: &str = "oracle.csv";

/// Relative tolerance for comparing utilities of different searches.
const UTILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayEntry {
    pub valid_at_cycle: usize,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub seed: u64,
    pub dir: String,
    pub truth: String,
    pub overlay: Vec<OverlayEntry>,
    pub population: Option<String>,
    pub targets: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub scenarios: Vec<ScenarioEntry>,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn build_all(cfg: &RunConfig) -> Result<Vec<Scenario>> {
    (0..cfg.n_scenarios)
        .into_par_iter()
        .map(|i| cfg.build_scenario(i))
        .collect()
}

/// Writes every scenario's grids under `out/<scenario id>/` and a manifest
/// listing files, seeds and the resolved config.
pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let scenarios = build_all(cfg)?;
    create_dir(out)?;
    let mut entries = Vec::with_capacity(scenarios.len());
    for (i, s) in scenarios.iter().enumerate() {
        let id = cfg.scenario_id(i);
        let dir = out.join(&id);
        create_dir(&dir)?;
        let save = |name: &str, grid| -> Result<String> {
            save_grid(grid, &dir.join(name))?;
            Ok(format!("{id}/{name}"))
        };
        let mut overlay = Vec::new();
        if let Some(o) = s.overlay() {
            for (k, frame) in o.frames().iter().enumerate() {
                overlay.push(OverlayEntry {
                    valid_at_cycle: frame.valid_at_cycle,
                    file: save(&format!("overlay_{k:03}.grd"), &frame.grid)?,
                });
            }
        }
        entries.push(ScenarioEntry {
            seed: s.seed(),
            dir: id.clone(),
            truth: save("truth.grd", s.truth())?,
            overlay,
            population: s
                .population()
                .map(|g| save("population.grd", g))
                .transpose()?,
            targets: s.targets().map(|g| save("targets.grd", g)).transpose()?,
            id,
        });
    }
    let manifest = Manifest {
        config: cfg.clone(),
        scenarios: entries,
    };
    let mut json =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    json.push('\n');
    write_file(&out.join(MANIFEST_FILE), json.as_bytes())?;
    log::info!(
        "wrote {} scenarios to {}",
        manifest.scenarios.len(),
        out.display()
    );
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<ResultRow>,
    pub aggregate: Vec<AggregateRow>,
}

fn run_scenario(cfg: &RunConfig, index: usize) -> Result<Vec<ResultRow>> {
    let scenario = cfg.build_scenario(index)?;
    let id = cfg.scenario_id(index);
    let ub = upper_bound(&scenario);
    let mut rows = Vec::new();
    for spec in cfg.planner_specs() {
        let mut row = ResultRow {
            scenario_id: id.clone(),
            planner: spec.id().to_string(),
            utility: None,
            obs_used: None,
            ub_utility: ub,
            wall_ms: 0.0,
            note: String::new(),
        };
        if let Some(why) = spec.incompatibility(&scenario) {
            log::warn!("{id}: skipping {}: {why}", spec.id());
            row.note = format!("skipped: {why}");
            rows.push(row);
            continue;
        }
        let started = Instant::now();
        let ep = run_episode(&scenario, &spec)?;
        let wall = started.elapsed().as_secs_f64() * 1e3;
        if let Err(f) = replay_check(&scenario, &ep.trace) {
            return Err(Error::Verification(format!("{id} {}: {f}", spec.id())));
        }
        if ep.total_utility > ub * (1.0 + UTILITY_TOL) {
            return Err(Error::Verification(format!(
                "{id} {}: utility {} exceeds upper bound {ub}",
                spec.id(),
                ep.total_utility
            )));
        }
        row.utility = Some(ep.total_utility);
        row.obs_used = Some(ep.observations_used);
        if cfg.timing {
            row.wall_ms = wall;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("serializing {}: {e}", path.display())))?;
    write_file(path, &bytes)
}

/// Runs every configured planner on every scenario, checks each trace, and
/// writes per-episode and aggregate CSVs. Row order follows scenario index
/// then planner list, whatever the thread count.
pub fn cmd_run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let per_scenario: Vec<Vec<ResultRow>> = (0..cfg.n_scenarios)
        .into_par_iter()
        .map(|i| run_scenario(cfg, i))
        .collect::<Result<_>>()?;
    let rows: Vec<ResultRow> = per_scenario.into_iter().flatten().collect();
    let agg = aggregate(&rows)?;
    create_dir(out)?;
    write_csv(&out.join(RESULTS_FILE), &rows)?;
    write_csv(&out.join(AGGREGATE_FILE), &agg)?;
    Ok(RunOutcome {
        rows,
        aggregate: agg,
    })
}

/// One tiny instance compared against its exact optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub scenario_id: String,
    pub seed: u64,
    pub optimum: f64,
    pub beam_exhaustive: f64,
    pub beam_pruned: f64,
    pub upper_bound: f64,
    /// Best whole-episode utility among the configured planners.
    pub best_planner: f64,
    /// Positive where the exhaustive beam misses the optimum.
    pub exhaustive_gap: f64,
    pub pruned_gap: f64,
    pub violations: String,
}

fn exceeds(a: f64, b: f64) -> bool {
    a > b + UTILITY_TOL * b.abs().max(1.0)
}

fn oracle_instance(cfg: &RunConfig, index: usize) -> Result<OracleRow> {
    let scenario = cfg.build_scenario(index)?;
    let id = cfg.scenario_id(index);
    let (optimum, _) = brute_force_optimal(&scenario)?;
    let start = SatState::initial(scenario.geometry());
    let n = scenario.n_cycles();
    let budget = scenario.budget();
    let exhaustive = beam_search(&scenario, &start, budget, &BeamConfig::exhaustive(n))?;
    let pruned = beam_search(
        &scenario,
        &start,
        budget,
        &BeamConfig {
            depth: n,
            ..cfg.beam
        },
    )?;
    let ub = upper_bound(&scenario);

    let mut violations = Vec::new();
    if exceeds(exhaustive.planned_utility, optimum) || exceeds(optimum, exhaustive.planned_utility)
    {
        violations.push(format!(
            "exhaustive beam {} != optimum",
            exhaustive.planned_utility
        ));
    }
    if exceeds(pruned.planned_utility, optimum) {
        violations.push(format!("pruned beam {} > optimum", pruned.planned_utility));
    }
    if exceeds(optimum, ub) {
        violations.push(format!("optimum > upper bound {ub}"));
    }
    let mut best_planner = 0.0f64;
    for spec in cfg.planner_specs() {
        if spec.incompatibility(&scenario).is_some() {
            continue;
        }
        let ep = run_episode(&scenario, &spec)?;
        if let Err(f) = replay_check(&scenario, &ep.trace) {
            violations.push(format!("{}: {f}", spec.id()));
        }
        if exceeds(ep.total_utility, optimum) {
            violations.push(format!("{} {} > optimum", spec.id(), ep.total_utility));
        }
        if exceeds(ep.total_utility, ub) {
            violations.push(format!("{} {} > upper bound", spec.id(), ep.total_utility));
        }
        best_planner = best_planner.max(ep.total_utility);
    }
    Ok(OracleRow {
        scenario_id: id,
        seed: scenario.seed(),
        optimum,
        beam_exhaustive: exhaustive.planned_utility,
        beam_pruned: pruned.planned_utility,
        upper_bound: ub,
        best_planner,
        exhaustive_gap: optimum - exhaustive.planned_utility,
        pruned_gap: optimum - pruned.planned_utility,
        violations: violations.join("; "),
    })
}

/// Exact optimum versus the exhaustive and pruned beam, the planners, and
/// the upper bound on every instance. Writes `oracle.csv` when `out` is
/// given; any bound violation is an error after the report is written.
pub fn cmd_oracle(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<OracleRow>> {
    cfg.validate()?;
    let rows: Vec<OracleRow> = (0..cfg.n_scenarios)
        .into_par_iter()
        .map(|i| oracle_instance(cfg, i))
        .collect::<Result<_>>()?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_csv(&dir.join(ORACLE_FILE), &rows)?;
    }
    let bad: Vec<&OracleRow> = rows.iter().filter(|r| !r.violations.is_empty()).collect();
    if let Some(first) = bad.first() {
        return Err(Error::Verification(format!(
            "{} of {} instances violate a bound; first {}: {}",
            bad.len(),
            rows.len(),
            first.scenario_id,
            first.violations
        )));
    }
    Ok(rows)
}

/// Where a command writes when `--out` is not given.
pub fn default_out(command: &str) -> PathBuf {
    PathBuf::from("out").join(command)
}
