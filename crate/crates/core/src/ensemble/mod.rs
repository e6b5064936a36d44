//! Quantum-equilibrium sampling and ensemble statistics.

pub mod histogram;
pub mod metrics;
pub mod sampling;

pub use histogram::{chi_square, total_variation, AxisBins, DensityHistogram, DEFAULT_BINS};
pub use metrics::{
    coincidence_monitor, equilibrium_metric, equivariance_test, nelson_stationarity_test, CoincidenceStats,
    EquilibriumMetric, StationarityRun, HALT_BUDGET,
};
pub use sampling::{sample_density, sample_uniform};
