//! Fixtures shared by the benchmarks.

use negbound_core::bound::MeasurementSet;
use negbound_core::experiment::ExperimentConfig;

/// Simulated data for the default experiment (64 joint outcomes plus the identity).
pub fn default_measurements() -> MeasurementSet {
    let c = ExperimentConfig::default();
    MeasurementSet::simulate(c.measurements().unwrap(), &c.subtracted_state().unwrap()).unwrap()
}

/// Same setup with a smaller signal cutoff.
pub fn small_measurements(n_max: usize) -> MeasurementSet {
    let mut c = ExperimentConfig::default();
    c.state.n_max = n_max;
    MeasurementSet::simulate(c.measurements().unwrap(), &c.subtracted_state().unwrap()).unwrap()
}
