use super::degrade::GeoOverlay;
use super::grid::{Cell, EnvGrid, GridKind};
use crate::error::{Error, Result};
use crate::flight::FlightPath;
use crate::slew::{Geometry, SlewModel};
use crate::utility::{truth_utility_map, UtilityKind, UtilityMap, UtilityModel};

pub const DEFAULT_BUDGET: u32 = 100;

/// One simulated flyover: environment, flight, utility model and budget.
///
/// Built through [`ScenarioBuilder`], which validates the parts and caches
/// the pointing geometry and the truth utility of every cell.
#[derive(Debug, Clone)]
pub struct Scenario {
    truth: EnvGrid,
    overlay: Option<GeoOverlay>,
    population: Option<EnvGrid>,
    targets: Option<EnvGrid>,
    flight: FlightPath,
    utility: UtilityModel,
    slew: SlewModel,
    budget: u32,
    seed: u64,
    geometry: Geometry,
    truth_utility: UtilityMap,
}

impl Scenario {
    pub fn builder(truth: EnvGrid, flight: FlightPath, utility: UtilityModel) -> ScenarioBuilder {
        ScenarioBuilder {
            truth,
            overlay: None,
            population: None,
            targets: None,
            flight,
            utility,
            slew: SlewModel::default(),
            budget: DEFAULT_BUDGET,
            seed: 0,
        }
    }

    pub fn truth(&self) -> &EnvGrid {
        &self.truth
    }

    pub fn overlay(&self) -> Option<&GeoOverlay> {
        self.overlay.as_ref()
    }

    pub fn population(&self) -> Option<&EnvGrid> {
        self.population.as_ref()
    }

    pub fn targets(&self) -> Option<&EnvGrid> {
        self.targets.as_ref()
    }

    pub fn flight(&self) -> &FlightPath {
        &self.flight
    }

    pub fn n_cycles(&self) -> usize {
        self.flight.n_cycles
    }

    pub fn utility_model(&self) -> &UtilityModel {
        &self.utility
    }

    pub fn utility_kind(&self) -> UtilityKind {
        self.utility.kind
    }

    pub fn slew_model(&self) -> &SlewModel {
        &self.slew
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    #[inline]
    pub fn truth_utility(&self, cell: Cell) -> f64 {
        self.truth_utility.at(cell)
    }

    pub fn truth_utility_map(&self) -> &UtilityMap {
        &self.truth_utility
    }

    /// Same scenario with another observation budget.
    pub fn with_budget(&self, budget: u32) -> Scenario {
        Scenario {
            budget,
            ..self.clone()
        }
    }

    /// Same scenario without its overlay.
    pub fn without_overlay(&self) -> Scenario {
        Scenario {
            overlay: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    truth: EnvGrid,
    overlay: Option<GeoOverlay>,
    population: Option<EnvGrid>,
    targets: Option<EnvGrid>,
    flight: FlightPath,
    utility: UtilityModel,
    slew: SlewModel,
    budget: u32,
    seed: u64,
}

impl ScenarioBuilder {
    pub fn overlay(mut self, overlay: GeoOverlay) -> Self {
        self.overlay = Some(overlay);
        self
    }

    pub fn population(mut self, population: EnvGrid) -> Self {
        self.population = Some(population);
        self
    }

    pub fn targets(mut self, targets: EnvGrid) -> Self {
        self.targets = Some(targets);
        self
    }

    pub fn slew(mut self, slew: SlewModel) -> Self {
        self.slew = slew;
        self
    }

    pub fn budget(mut self, budget: u32) -> Self {
        self.budget = budget;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn build(self) -> Result<Scenario> {
        self.flight.validate()?;
        self.utility.validate()?;
        let truth = &self.truth;
        let kind = self.utility.kind;
        let expected = if kind.uses_clouds() {
            GridKind::CloudMask
        } else {
            GridKind::Precip
        };
        if truth.kind() != expected {
            return Err(Error::param(format!(
                "{kind} needs a {} truth grid, got {}",
                expected.as_str(),
                truth.kind().as_str()
            )));
        }
        let aux_ok = |grid: &Option<EnvGrid>, want: GridKind, name: &str| -> Result<()> {
            match grid {
                Some(g) if g.kind() != want || !g.same_shape(truth) => Err(Error::param(format!(
                    "{name} grid must be a {} grid shaped like the truth",
                    want.as_str()
                ))),
                _ => Ok(()),
            }
        };
        aux_ok(&self.population, GridKind::Population, "population")?;
        aux_ok(&self.targets, GridKind::TargetMask, "targets")?;
        if kind == UtilityKind::CAPD && self.population.is_none() {
            return Err(Error::param("CAPD needs a population grid"));
        }
        if kind == UtilityKind::CART && self.targets.is_none() {
            return Err(Error::param("CART needs a target grid"));
        }
        if let Some(o) = &self.overlay {
            if o.frames()[0].grid.kind() != truth.kind() || !o.covers(truth) {
                return Err(Error::param("overlay does not cover the truth grid"));
            }
        }
        let geometry = Geometry::new(
            self.slew,
            &self.flight,
            truth.width(),
            truth.height(),
            truth.resolution_km(),
        )?;
        if geometry.nadir_col(self.flight.n_cycles - 1) >= truth.width() {
            return Err(Error::param(format!(
                "truth grid ({} columns) is shorter than the {}-cycle flight",
                truth.width(),
                self.flight.n_cycles
            )));
        }
        let truth_utility = truth_utility_map(
            &self.utility,
            truth,
            self.population.as_ref(),
            self.targets.as_ref(),
        );
        Ok(Scenario {
            truth: self.truth,
            overlay: self.overlay,
            population: self.population,
            targets: self.targets,
            flight: self.flight,
            utility: self.utility,
            slew: self.slew,
            budget: self.budget,
            seed: self.seed,
            geometry,
            truth_utility,
        })
    }
}
