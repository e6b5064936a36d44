//! Boxed particles with measured spins, and what happens to their exchange
//! symmetry when boxes merge and spins are flipped.

pub mod layout;
pub mod protocol;

pub use layout::{build_measured_state, distinct_sequences, occupied_components, BoxLayout, Character, WallDrop};
pub use protocol::{
    component_dominance, effective_component_agreement, flipped_scalar, merge_same_spin_boxes,
    same_spin_connectivity, spin_flip_and_merge, three_particle_state, verify_scalar_symmetry,
    verify_total_symmetry, ComponentDominance, DominanceReport, EffectiveAgreement, FlipOutcome, FlipPlan,
    MergeOutcome, PairConnectivity, TotalSymmetry,
};
