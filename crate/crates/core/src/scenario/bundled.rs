//! Scenarios shipped with the crate.

use super::config::ScenarioConfig;
use crate::error::{Error, Result};

pub const BUNDLED: [(&str, &str); 6] = [
    ("two_1d_symmetry", include_str!("../../scenarios/two_1d_symmetry.toml")),
    ("two_2d_anyon_static", include_str!("../../scenarios/two_2d_anyon_static.toml")),
    ("three_1d_pairwise", include_str!("../../scenarios/three_1d_pairwise.toml")),
    ("equilibrium_doublewell", include_str!("../../scenarios/equilibrium_doublewell.toml")),
    ("coincidence", include_str!("../../scenarios/coincidence.toml")),
    ("spin_boxes", include_str!("../../scenarios/spin_boxes.toml")),
];

/// TOML text of a bundled scenario.
pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled(name: &str) -> Result<ScenarioConfig> {
    let text = bundled_text(name).ok_or_else(|| Error::Config(format!("no bundled scenario {name:?}")))?;
    ScenarioConfig::from_toml(text)
}
