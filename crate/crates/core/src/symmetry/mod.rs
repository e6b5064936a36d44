//! Exchange symmetry of fields: residuals, phases, classification.

pub mod consistency;
pub mod paths;
pub mod report;
pub mod residuals;
pub mod spinor;

pub use consistency::{pairwise_phase_consistency, winding_phase_table, ConsistencyReport, WindingTable};
pub use paths::{exchange_phase, ExchangePath, Handedness, PathPhase, Route};
pub use report::{classify, phase_distance, SymmetryReport, Tolerances, Verdict};
pub use residuals::{
    amplitude_exchange_residual, drift_exchange_residual, halton_point, velocity_exchange_residual, SampleSet,
};
pub use spinor::{classify_spinor, exchange_eigen, SpinorReport};
