use crate::flight::make_flight;
use crate::geogrid::{EnvGrid, GridKind, Scenario};
use crate::utility::{UtilityKind, UtilityModel};

/// Cloud-free CA flyover at 6 km/s, 270 km swath, 500 km altitude.
pub fn clear_ca_scenario(n_cycles: usize, res_km: f64) -> Scenario {
    let flight = make_flight(n_cycles, 6.0, 270.0, 500.0).unwrap();
    let shape = flight.grid_shape(res_km).unwrap();
    let truth =
        EnvGrid::filled(GridKind::CloudMask, shape.width, shape.height, res_km, 0.0).unwrap();
    Scenario::builder(truth, flight, UtilityModel::new(UtilityKind::CA))
        .build()
        .unwrap()
}
