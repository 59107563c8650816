//! Environment grids, synthetic generators, geostationary overlays, and the
//! GRD1 file format.

mod degrade;
mod generate;
mod grd;
mod grid;
mod scenario;

pub use degrade::{
    degrade_to_overlay, overlay_reference, DegradeParams, FlipBias, GeoOverlay, OverlayFrame,
};
pub use generate::{
    gen_cloud_field, gen_cloud_field_multiscale, gen_population_field, gen_random_targets,
    gen_storm_field, random_target_squares, storm_field_from_cells, targets_mask, CloudScale,
    GridShape, PopulationParams, StormCell, StormParams, TargetParams, TargetSquare,
    PRECIP_FLOOR_MM_HR,
};
pub use grd::{decode_grid, encode_grid, load_grid, save_grid};
pub use grid::{Cell, EnvGrid, GridKind};
pub use scenario::{Scenario, ScenarioBuilder, DEFAULT_BUDGET};
