//! Configuration-space grids, fields and the local primitives on them.

pub mod exchange;
pub mod field;
pub mod grid;
pub mod init;
pub mod local;
pub mod path;
pub mod perm;
pub mod pwf;
pub mod support;

pub use exchange::{exchange, exchange_point, exchange_spinor, exchanged_index};
pub use field::{BranchCut, Field, Frame, NodeMask, ParticleSpec, Spin, SpinorField, NODE_EPS};
pub use grid::{Boundary, GridSpec};
pub use init::{build_field, Initializer, Orbital, Symmetry};
pub use local::{current_velocity, osmotic_velocity, Guiding};
pub use path::{unwrapped_phase_delta, wrap_phase, GridPath, TransportOptions};
