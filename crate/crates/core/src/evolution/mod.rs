//! Time evolution of scalar and spinor fields and the PDE-level diagnostics.

pub mod diagnostics;
pub mod fftnd;
pub mod pauli;
pub mod potential;
pub mod stepper;

pub use diagnostics::{continuity_residual, gauge_transform, hj_residual, quantum_potential};
pub use pauli::{step_pauli, FieldProfile, MagneticSpec, PauliStepper};
pub use potential::{PotentialSpec, Profile, Region};
pub use stepper::{step_schrodinger, SplitStepper, StepperConfig};
