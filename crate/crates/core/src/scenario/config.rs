//! Scenario files: sectioned TOML with units in the key names.

use serde::{Deserialize, Serialize};

use crate::configspace::field::{ParticleSpec, Spin};
use crate::configspace::grid::{Boundary, GridSpec};
use crate::configspace::init::{build_field, Initializer, Orbital};
use crate::error::{Error, Result};
use crate::evolution::pauli::MagneticSpec;
use crate::evolution::potential::{PotentialSpec, Region};
use crate::evolution::stepper::{aliasing_ratio, StepperConfig};
use crate::spin_protocol::{BoxLayout, Character};
use crate::symmetry::report::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Meta,
    pub grid: GridSection,
    #[serde(default)]
    pub particles: ParticlesSection,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub magnetic: MagneticSpec,
    #[serde(default)]
    pub initial: Option<Initializer>,
    pub stepper: StepperSection,
    #[serde(default)]
    pub analysis: Analysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Wall-clock budget at default sizes.
    #[serde(default = "default_budget")]
    pub budget_seconds: f64,
    #[serde(default = "default_out")]
    pub output_dir: String,
}

fn default_budget() -> f64 {
    600.0
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub particles: usize,
    pub dim: usize,
    pub points: usize,
    pub extent_length: f64,
    /// Hard-wall layers on every axis; 0 keeps the grid periodic.
    #[serde(default)]
    pub wall_cells: usize,
}

impl GridSection {
    pub fn spec(&self) -> Result<GridSpec> {
        let n = self.particles * self.dim;
        let boundary = if self.wall_cells > 0 { Boundary::HardWall { cells: self.wall_cells } } else { Boundary::Periodic };
        GridSpec::new(self.particles, self.dim, vec![self.points; n], vec![self.extent_length; n], boundary)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticlesSection {
    /// One entry per particle, or a single entry for all.
    #[serde(default = "one_vec")]
    pub mass: Vec<f64>,
    #[serde(default = "one_vec")]
    pub charge: Vec<f64>,
    #[serde(default = "one")]
    pub hbar_action: f64,
}

fn one() -> f64 {
    1.0
}

fn one_vec() -> Vec<f64> {
    vec![1.0]
}

impl Default for ParticlesSection {
    fn default() -> Self {
        ParticlesSection { mass: one_vec(), charge: one_vec(), hbar_action: 1.0 }
    }
}

impl ParticlesSection {
    pub fn specs(&self, n: usize) -> Result<Vec<ParticleSpec>> {
        let pick = |v: &[f64], i: usize, what: &str| -> Result<f64> {
            match v.len() {
                1 => Ok(v[0]),
                l if l == n => Ok(v[i]),
                l => Err(Error::Config(format!("{l} {what} values for {n} particles"))),
            }
        };
        (0..n)
            .map(|i| {
                let p = ParticleSpec { mass: pick(&self.mass, i, "mass")?, charge: pick(&self.charge, i, "charge")? };
                if !(p.mass > 0.0) {
                    return Err(Error::Config(format!("particle {i} has mass {}", p.mass)));
                }
                Ok(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperSection {
    pub dt_time: f64,
    #[serde(default)]
    pub steps: usize,
    /// Keep every `snapshot_stride`-th step (the first and last are kept).
    #[serde(default = "one_usize")]
    pub snapshot_stride: usize,
    /// Write every kept snapshot as a PWF1 dump.
    #[serde(default)]
    pub dump_snapshots: bool,
    #[serde(default)]
    pub norm_drift_max: Option<f64>,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TolerancePreset {
    #[default]
    Analytic,
    Evolved,
}

impl TolerancePreset {
    pub fn tolerances(self) -> Tolerances {
        match self {
            TolerancePreset::Analytic => Tolerances::analytic(),
            TolerancePreset::Evolved => Tolerances::evolved(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Snapshot {
    #[default]
    Initial,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryBlock {
    /// Expected verdict label (`boson`, `fermion`, `anyon`, `degenerate`,
    /// `inconsistent`); no check when absent.
    #[serde(default)]
    pub expect: Option<String>,
    #[serde(default)]
    pub tolerances: TolerancePreset,
    #[serde(default)]
    pub phase_tolerance: Option<f64>,
    #[serde(default)]
    pub residual_tolerance: Option<f64>,
    #[serde(default)]
    pub at: Snapshot,
    /// Exchange-path start; a supported point is picked when absent.
    #[serde(default)]
    pub start_length: Option<Vec<f64>>,
}

impl SymmetryBlock {
    pub fn tolerances(&self) -> Tolerances {
        let mut t = self.tolerances.tolerances();
        if let Some(p) = self.phase_tolerance {
            t.phase = p;
        }
        if let Some(r) = self.residual_tolerance {
            t.residual = r;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingBlock {
    pub windings: Vec<i32>,
    /// Expected `gamma(1)` in radians.
    #[serde(default)]
    pub gamma_expected: Option<f64>,
    #[serde(default = "milli")]
    pub phase_tolerance: f64,
    #[serde(default)]
    pub start_length: Option<Vec<f64>>,
}

fn milli() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairwiseBlock {
    #[serde(default = "first_triple")]
    pub triple: [usize; 3],
    #[serde(default = "micro")]
    pub phase_tolerance: f64,
    #[serde(default)]
    pub gamma_expected: Option<f64>,
    #[serde(default)]
    pub start_length: Option<Vec<f64>>,
}

fn first_triple() -> [usize; 3] {
    [0, 1, 2]
}

fn micro() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    #[default]
    Bohm,
    Nelson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// Low-discrepancy points inside the support; independent of the seed.
    #[default]
    Halton,
    /// Drawn from `|psi|^2` with the scenario seed.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBlock {
    pub count: usize,
    #[serde(default)]
    pub kind: TrajectoryKind,
    #[serde(default)]
    pub starts: StartRule,
    /// Integration step; the stepper's `dt_time` when absent.
    #[serde(default)]
    pub dt_time: Option<f64>,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "one")]
    pub diffusion_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumMode {
    /// Bohm ensemble compared with `|psi_t|^2` at every kept snapshot.
    #[default]
    Equivariance,
    /// Nelson walkers on a stationary state, with a drift-free control.
    NelsonStationarity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumBlock {
    pub count: usize,
    #[serde(default)]
    pub mode: EquilibriumMode,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "tv_default")]
    pub tv_max: f64,
    /// Equivariance only: compare at every `compare_every`-th kept snapshot
    /// (and the last one).
    #[serde(default = "one_usize")]
    pub compare_every: usize,
    /// Nelson only: run length.
    #[serde(default)]
    pub duration_time: Option<f64>,
    /// Nelson only: the drift-free control must exceed this distance.
    #[serde(default)]
    pub control_tv_min: Option<f64>,
    /// Nelson only: expected variance of the first coordinate.
    #[serde(default)]
    pub variance_expected: Option<f64>,
    #[serde(default = "variance_tol")]
    pub variance_tolerance: f64,
    #[serde(default)]
    pub dt_time: Option<f64>,
}

fn default_bins() -> usize {
    crate::ensemble::DEFAULT_BINS
}

fn tv_default() -> f64 {
    0.05
}

fn variance_tol() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoincidenceBlock {
    /// Trajectories started on the coincidence diagonal.
    #[serde(default)]
    pub diagonal_count: usize,
    /// Trajectories started from `|psi|^2`.
    #[serde(default)]
    pub sampled_count: usize,
    #[serde(default)]
    pub dt_time: Option<f64>,
    /// Largest allowed separation of coincident starts, in units of the extent.
    #[serde(default = "micro")]
    pub separation_max_relative: f64,
    #[serde(default)]
    pub crossings_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlipSection {
    pub mu: f64,
    pub field_strength: f64,
    pub merge_steps: usize,
    #[serde(default = "fidelity_default")]
    pub fidelity_min: f64,
}

fn fidelity_default() -> f64 {
    1.0 - 1e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBlock {
    pub boxes: Vec<Region>,
    pub spins: Vec<Spin>,
    pub orbitals: Vec<Orbital>,
    pub character: Character,
    #[serde(default = "wall_default")]
    pub wall_height: f64,
    /// Steps evolved with the walls up.
    pub walls_up_steps: usize,
    #[serde(default = "default_samples")]
    pub dominance_samples: usize,
    #[serde(default = "dominance_floor")]
    pub dominance_floor: f64,
    #[serde(default = "dominance_min")]
    pub dominance_min: f64,
    #[serde(default = "default_traj")]
    pub trajectories: usize,
    #[serde(default = "micro")]
    pub trajectory_tolerance_length: f64,
    pub flip: FlipSection,
    #[serde(default = "micro")]
    pub symmetry_tolerance: f64,
    /// Grid points per axis of the static three-particle check; 0 skips it.
    #[serde(default)]
    pub three_particle_points: usize,
}

fn wall_default() -> f64 {
    crate::configspace::grid::WALL_HEIGHT
}

fn default_samples() -> usize {
    2000
}

fn dominance_floor() -> f64 {
    1e-6
}

fn dominance_min() -> f64 {
    1.0 - 1e-8
}

fn default_traj() -> usize {
    100
}

impl SpinBlock {
    pub fn layout(&self) -> BoxLayout {
        BoxLayout { boxes: self.boxes.clone(), spins: self.spins.clone(), wall_height: self.wall_height, schedule: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    #[serde(default)]
    pub symmetry: Option<SymmetryBlock>,
    #[serde(default)]
    pub winding: Option<WindingBlock>,
    #[serde(default)]
    pub pairwise: Option<PairwiseBlock>,
    #[serde(default)]
    pub trajectories: Option<TrajectoryBlock>,
    #[serde(default)]
    pub equilibrium: Option<EquilibriumBlock>,
    #[serde(default)]
    pub coincidence: Option<CoincidenceBlock>,
    #[serde(default)]
    pub spin: Option<SpinBlock>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn stepper_config(&self) -> StepperConfig {
        StepperConfig { dt: self.stepper.dt_time, hbar: self.particles.hbar_action }
    }

    /// Re-checks the preconditions of every module the scenario will use,
    /// before anything runs or is written.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.scenario.name.trim().is_empty() {
            return Err(Error::Config("scenario name is empty".into()));
        }
        let grid = self.grid.spec().map_err(cfg_err)?;
        let particles = self.particles.specs(grid.n_particles)?;
        let s = &self.stepper;
        if !(s.dt_time > 0.0) || !s.dt_time.is_finite() {
            return Err(Error::Config(format!("dt_time must be positive, got {}", s.dt_time)));
        }
        if !(self.particles.hbar_action > 0.0) {
            return Err(Error::Config("hbar_action must be positive".into()));
        }
        if s.snapshot_stride == 0 {
            return Err(Error::Config("snapshot_stride must be at least 1".into()));
        }
        let ratio = aliasing_ratio(&grid, &particles, &self.stepper_config());
        let evolves = s.steps > 0 || self.analysis.spin.is_some();
        if evolves && ratio >= std::f64::consts::PI {
            return Err(Error::Config(format!("dt_time too large for the grid (aliasing ratio {ratio:.3})")));
        }
        if particles.windows(2).all(|w| w[0] == w[1]) {
            self.potential.check_symmetric(&grid).map_err(cfg_err)?;
        }
        let a = &self.analysis;
        match (&self.initial, &a.spin) {
            (Some(init), None) => {
                build_field(&grid, init).map_err(cfg_err)?;
                if matches!(init, Initializer::Anyon { .. }) && s.steps > 0 {
                    return Err(Error::Config("anyon states are static; set stepper.steps = 0".into()));
                }
                if self.magnetic != MagneticSpec::default() {
                    return Err(Error::Config("[magnetic] only applies to spin scenarios".into()));
                }
            }
            (None, Some(spin)) => {
                spin.layout().validate(&grid).map_err(cfg_err)?;
                if spin.orbitals.len() != grid.n_particles {
                    return Err(Error::Config("one orbital per box expected".into()));
                }
                if !(spin.flip.mu * spin.flip.field_strength != 0.0) {
                    return Err(Error::Config("spin flip needs nonzero mu and field_strength".into()));
                }
            }
            (Some(_), Some(_)) => return Err(Error::Config("[initial] and [analysis.spin] are exclusive".into())),
            (None, None) => return Err(Error::Config("an [initial] state or [analysis.spin] block is required".into())),
        }
        if let Some(sym) = &a.symmetry {
            if let Some(e) = &sym.expect {
                if !["boson", "fermion", "anyon", "degenerate", "inconsistent"].contains(&e.as_str()) {
                    return Err(Error::Config(format!("unknown verdict {e:?}")));
                }
            }
            check_start(&sym.start_length, &grid)?;
        }
        if let Some(w) = &a.winding {
            if w.windings.is_empty() {
                return Err(Error::Config("winding list is empty".into()));
            }
            check_start(&w.start_length, &grid)?;
        }
        if let Some(p) = &a.pairwise {
            let [i, j, k] = p.triple;
            if grid.n_particles < 3 || i == j || j == k || i == k || [i, j, k].iter().any(|&x| x >= grid.n_particles) {
                return Err(Error::Config(format!("bad triple {:?}", p.triple)));
            }
            check_start(&p.start_length, &grid)?;
        }
        if let Some(t) = &a.trajectories {
            positive_opt(t.dt_time, "trajectories.dt_time")?;
            if t.count == 0 || t.record_every == 0 {
                return Err(Error::Config("trajectories need count and record_every >= 1".into()));
            }
            if s.steps == 0 {
                return Err(Error::Config("trajectories need stepper.steps > 0".into()));
            }
        }
        if let Some(e) = &a.equilibrium {
            positive_opt(e.dt_time, "equilibrium.dt_time")?;
            if e.count == 0 || e.bins < 2 || e.compare_every == 0 {
                return Err(Error::Config("equilibrium needs count, compare_every >= 1 and bins >= 2".into()));
            }
            match e.mode {
                EquilibriumMode::Equivariance if s.steps == 0 => {
                    return Err(Error::Config("equivariance needs stepper.steps > 0".into()))
                }
                EquilibriumMode::NelsonStationarity if !(e.duration_time.unwrap_or(0.0) > 0.0) => {
                    return Err(Error::Config("nelson stationarity needs duration_time > 0".into()))
                }
                _ => {}
            }
        }
        if let Some(c) = &a.coincidence {
            positive_opt(c.dt_time, "coincidence.dt_time")?;
            if grid.n_particles != 2 || s.steps == 0 {
                return Err(Error::Config("coincidence needs two particles and stepper.steps > 0".into()));
            }
        }
        Ok(())
    }
}

fn check_start(start: &Option<Vec<f64>>, grid: &GridSpec) -> Result<()> {
    match start {
        Some(x) if x.len() != grid.n_axes() || !grid.contains(x) => {
            Err(Error::Config(format!("start {x:?} is not a point of the grid")))
        }
        _ => Ok(()),
    }
}

fn positive_opt(v: Option<f64>, what: &str) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0) => Err(Error::Config(format!("{what} must be positive"))),
        _ => Ok(()),
    }
}
