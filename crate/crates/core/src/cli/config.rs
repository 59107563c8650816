//! Run configuration and the synthetic scenario families it describes.
//!
//! A config file is JSON. Only `family` is required; every other key falls
//! back to the family preset, and unknown keys are rejected.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::flight::{make_flight, FlightPath};
use crate::geogrid::{
    degrade_to_overlay, gen_cloud_field_multiscale, gen_population_field, gen_random_targets,
    gen_storm_field, CloudScale, DegradeParams, PopulationParams, Scenario, StormParams,
    TargetParams,
};
use crate::planners::{BeamConfig, PlannerSpec};
use crate::utility::{UtilityKind, UtilityModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightParams {
    pub n_cycles: usize,
    pub ground_speed_km_s: f64,
    pub swath_km: f64,
    pub altitude_km: f64,
}

impl FlightParams {
    pub fn build(&self) -> Result<FlightPath> {
        make_flight(
            self.n_cycles,
            self.ground_speed_km_s,
            self.swath_km,
            self.altitude_km,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CloudParams {
    /// Cloudy fraction is drawn uniformly from this range per scenario.
    pub coverage_min: f64,
    pub coverage_max: f64,
    /// Size of individual cloud cells.
    pub correlation_km: f64,
    /// Size of large cloud systems; zero disables the second scale.
    pub system_km: f64,
    /// Weight of the large scale relative to the small one.
    pub system_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StormConfig {
    /// Number of storm cells, drawn uniformly from this range per scenario.
    pub n_cells_min: usize,
    pub n_cells_max: usize,
    pub peak_rate: f64,
    pub cluster_radius_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub n_cities: usize,
    pub max_density: f64,
    pub city_radius_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvParams {
    pub clouds: CloudParams,
    pub storms: StormConfig,
    pub population: PopulationConfig,
    pub targets: TargetParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub family: UtilityKind,
    pub n_scenarios: usize,
    /// Base seed; scenario `i` uses `seed + i` unless `seeds` lists them.
    pub seed: u64,
    pub seeds: Option<Vec<u64>>,
    pub flight: FlightParams,
    pub resolution_km: f64,
    pub budget: u32,
    pub env: EnvParams,
    /// Geostationary overlay; `null` for none.
    pub overlay: Option<DegradeParams>,
    pub planners: Vec<String>,
    pub beam: BeamConfig,
    /// Record wall-clock time in results (makes output run-dependent).
    pub timing: bool,
}

impl RunConfig {
    /// Desk-scale defaults for one scenario family.
    pub fn preset(family: UtilityKind) -> Self {
        let goes = DegradeParams {
            coarsening: 2,
            accuracy: 0.8,
            advect_cells_per_cycle: 0.05,
            cadence_cycles: 150,
            latency_cycles: 15,
            n_frames: 4,
            ..Default::default()
        };
        let meteosat = DegradeParams {
            noise_mae: 0.19,
            n_frames: 1,
            latency_cycles: 15,
            advect_cells_per_cycle: 0.05,
            ..goes
        };
        let (n_cycles, swath_km, overlay, planners) = match family {
            UtilityKind::SH => (450, 270.0, meteosat, vec!["NO", "G", "GH", "U", "GSDI"]),
            UtilityKind::CA => (525, 268.0, goes, vec!["NO", "G", "GH", "U", "GSDI"]),
            UtilityKind::CAPD | UtilityKind::CART => {
                (525, 268.0, goes, vec!["NO", "G", "GH", "U", "P", "GSDI"])
            }
        };
        RunConfig {
            family,
            n_scenarios: if family == UtilityKind::SH { 21 } else { 19 },
            seed: 1,
            seeds: None,
            flight: FlightParams {
                n_cycles,
                ground_speed_km_s: 6.0,
                swath_km,
                altitude_km: 500.0,
            },
            resolution_km: 10.0,
            budget: 100,
            env: EnvParams {
                clouds: CloudParams {
                    coverage_min: 0.5,
                    coverage_max: 0.7,
                    correlation_km: 20.0,
                    system_km: 120.0,
                    system_weight: 1.0,
                },
                storms: StormConfig {
                    n_cells_min: 3,
                    n_cells_max: 8,
                    peak_rate: 40.0,
                    cluster_radius_km: 40.0,
                },
                population: PopulationConfig {
                    n_cities: 8,
                    max_density: 22_000.0,
                    city_radius_km: 20.0,
                },
                targets: TargetParams::default(),
            },
            overlay: Some(overlay),
            planners: planners.into_iter().map(String::from).collect(),
            beam: BeamConfig::default(),
            timing: false,
        }
    }

    /// Tiny instances small enough for exhaustive search: 40 km cells, eight
    /// cycles, three observations.
    pub fn oracle_preset(family: UtilityKind) -> Self {
        let mut cfg = RunConfig::preset(family);
        cfg.n_scenarios = 50;
        cfg.resolution_km = 40.0;
        cfg.flight.n_cycles = 8;
        cfg.flight.swath_km = 280.0;
        cfg.budget = 3;
        cfg.env.clouds = CloudParams {
            coverage_min: 0.3,
            coverage_max: 0.7,
            correlation_km: 30.0,
            system_km: 0.0,
            system_weight: 0.0,
        };
        cfg.env.storms.n_cells_min = 1;
        cfg.env.storms.n_cells_max = 3;
        cfg.env.population.n_cities = 2;
        cfg.env.population.city_radius_km = 40.0;
        cfg.env.targets.n_targets = 3;
        cfg.overlay = Some(DegradeParams {
            accuracy: 0.8,
            latency_cycles: 2,
            cadence_cycles: 4,
            n_frames: 2,
            ..Default::default()
        });
        cfg.beam.depth = 4;
        cfg
    }

    /// Preset for `family` overlaid with the keys present in `json`.
    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_json_on(json, RunConfig::preset)
    }

    /// Like [`RunConfig::from_json`] with a caller-chosen preset.
    pub fn from_json_on(json: &str, preset: fn(UtilityKind) -> RunConfig) -> Result<Self> {
        let user: Value =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let family = user
            .get("family")
            .cloned()
            .ok_or_else(|| Error::Config("missing required key \"family\"".into()))?;
        let family: UtilityKind = serde_json::from_value(family)
            .map_err(|e| Error::Config(format!("bad family: {e}")))?;
        let mut merged =
            serde_json::to_value(preset(family)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let cfg: RunConfig =
            serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_on(path, RunConfig::preset)
    }

    pub fn load_on(path: &Path, preset: fn(UtilityKind) -> RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json_on(&text, preset)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_scenarios == 0 {
            return bad("n_scenarios must be >= 1".into());
        }
        if let Some(s) = &self.seeds {
            if s.len() != self.n_scenarios {
                return bad(format!(
                    "{} seeds for {} scenarios",
                    s.len(),
                    self.n_scenarios
                ));
            }
        }
        if !(self.resolution_km.is_finite() && self.resolution_km > 0.0) {
            return bad("resolution_km must be positive".into());
        }
        if self.planners.is_empty() {
            return bad("planner list is empty".into());
        }
        for p in &self.planners {
            if PlannerSpec::from_id(p, self.beam).is_none() {
                return bad(format!(
                    "unknown planner {p:?} (expected NO, G, GH, U, P or GSDI)"
                ));
            }
        }
        let c = &self.env.clouds;
        if !(0.0..=1.0).contains(&c.coverage_min)
            || !(c.coverage_min..=1.0).contains(&c.coverage_max)
        {
            return bad("need 0 <= coverage_min <= coverage_max <= 1".into());
        }
        if self.env.storms.n_cells_min > self.env.storms.n_cells_max {
            return bad("n_cells_min exceeds n_cells_max".into());
        }
        self.flight
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.beam
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn planner_specs(&self) -> Vec<PlannerSpec> {
        self.planners
            .iter()
            .filter_map(|p| PlannerSpec::from_id(p, self.beam))
            .collect()
    }

    pub fn scenario_seed(&self, index: usize) -> u64 {
        match &self.seeds {
            Some(s) => s[index],
            None => self.seed.wrapping_add(index as u64),
        }
    }

    pub fn scenario_id(&self, index: usize) -> String {
        format!("{}-{:03}", self.family.as_str().to_lowercase(), index)
    }

    /// Storm-hunting utility scale: the largest rate any scenario can hold.
    pub fn r_max(&self) -> f64 {
        self.env.storms.peak_rate
    }

    /// Generates scenario `index` from its seed.
    pub fn build_scenario(&self, index: usize) -> Result<Scenario> {
        let seed = self.scenario_seed(index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flight = self.flight.build()?;
        let res = self.resolution_km;
        let shape = flight.grid_shape(res)?;
        let env = &self.env;
        let cells = |km: f64| (km / res).max(1e-6);

        let (truth, model) = if self.family == UtilityKind::SH {
            let s = &env.storms;
            let params = StormParams {
                n_cells: rng.gen_range(s.n_cells_min..=s.n_cells_max),
                peak_rate: s.peak_rate,
                cluster_radius: cells(s.cluster_radius_km),
            };
            (
                gen_storm_field(shape, &params, rng.gen())?,
                UtilityModel::storm(self.r_max()),
            )
        } else {
            let c = &env.clouds;
            let coverage = if c.coverage_max > c.coverage_min {
                rng.gen_range(c.coverage_min..=c.coverage_max)
            } else {
                c.coverage_min
            };
            let radius = |km: f64| (km / res).round().max(1.0) as usize;
            let mut scales = vec![CloudScale {
                correlation_len: radius(c.correlation_km),
                weight: 1.0,
            }];
            if c.system_km > 0.0 && c.system_weight > 0.0 {
                scales.push(CloudScale {
                    correlation_len: radius(c.system_km),
                    weight: c.system_weight,
                });
            }
            (
                gen_cloud_field_multiscale(shape, coverage, &scales, rng.gen())?,
                UtilityModel::new(self.family),
            )
        };
        let overlay_seed: u64 = rng.gen();
        let aux_seed: u64 = rng.gen();
        let mut b = Scenario::builder(truth.clone(), flight, model)
            .budget(self.budget)
            .seed(seed);
        if let Some(o) = &self.overlay {
            b = b.overlay(degrade_to_overlay(&truth, o, overlay_seed)?);
        }
        match self.family {
            UtilityKind::CAPD => {
                let p = &env.population;
                let params = PopulationParams {
                    n_cities: p.n_cities,
                    max_density: p.max_density,
                    city_radius: cells(p.city_radius_km),
                };
                b = b.population(gen_population_field(shape, &params, aux_seed)?);
            }
            UtilityKind::CART => {
                b = b.targets(gen_random_targets(&flight, res, &env.targets, aux_seed)?);
            }
            _ => {}
        }
        b.build()
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
