//! De Broglie-Bohm and Nelson trajectories guided by evolving fields.

pub mod integrate;
pub mod velocity;

pub use integrate::{
    integrate_bohm, integrate_nelson, EnsembleKind, IntegrationOptions, NelsonParams, Scheme, SnapshotSeries,
    TrajectoryEnsemble, TrajectoryFlag,
};
pub use velocity::{bohm_velocity, nelson_drift, VectorPotentialSpec, VelocityGrid};
