use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Default relative threshold below which a grid point counts as a node.
pub const NODE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec {
    pub mass: f64,
    pub charge: f64,
}

impl Default for ParticleSpec {
    fn default() -> Self {
        ParticleSpec { mass: 1.0, charge: 1.0 }
    }
}

/// Sum of `f(0..len)` over fixed chunks, so the rounding does not depend on
/// how rayon splits the work.
pub(crate) fn stable_sum<T, F>(len: usize, f: F) -> T
where
    T: Send + std::iter::Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    const CHUNK: usize = 4096;
    let parts: Vec<T> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum())
        .collect();
    parts.into_iter().sum()
}

/// How the grid coordinates relate to particle positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Axes are the particles' own coordinates.
    #[default]
    Absolute,
    /// A single "particle" carrying the relative coordinate `r = x - y` of a
    /// pair; exchange acts as `r -> -r`.
    Relative,
}

/// Sheet transition for a multi-valued phase stored on a single-valued grid.
///
/// The cut runs along the ray `theta = pi` (measured around `center` in the
/// plane of `axes`). Crossing it counter-clockwise adds `jump` to the phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchCut {
    pub axes: (usize, usize),
    pub center: (f64, f64),
    pub jump: f64,
}

impl BranchCut {
    fn angle(&self, x: &[f64]) -> f64 {
        (x[self.axes.1] - self.center.1).atan2(x[self.axes.0] - self.center.0)
    }

    /// Correction to add to the stored phase difference of a neighbor step.
    pub fn crossing_correction(&self, from: &[f64], to: &[f64]) -> f64 {
        let (ta, tb) = (self.angle(from), self.angle(to));
        if ta > std::f64::consts::FRAC_PI_2 && tb < -std::f64::consts::FRAC_PI_2 {
            self.jump
        } else if ta < -std::f64::consts::FRAC_PI_2 && tb > std::f64::consts::FRAC_PI_2 {
            -self.jump
        } else {
            0.0
        }
    }
}

/// Scalar wavefunction sampled on a configuration-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
    time: f64,
    particles: Vec<ParticleSpec>,
    hbar: f64,
    frame: Frame,
    branch_cut: Option<BranchCut>,
    max_abs: f64,
}

impl Field {
    /// Builds a normalized field from raw samples.
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        let mut f = Self::from_raw(grid, values, 0.0)?;
        f.normalize()?;
        Ok(f)
    }

    /// Wraps samples without normalizing (used by the steppers).
    pub fn from_raw(grid: GridSpec, values: Vec<Complex64>, time: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Incompatible(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        let particles = vec![ParticleSpec::default(); grid.n_particles];
        let mut f = Field {
            grid,
            values,
            time,
            particles,
            hbar: 1.0,
            frame: Frame::Absolute,
            branch_cut: None,
            max_abs: 0.0,
        };
        f.refresh_max();
        Ok(f)
    }

    /// Samples `f(x)` at every grid point and normalizes.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<Self> {
        let values: Vec<Complex64> =
            (0..grid.len()).into_par_iter().map(|k| f(&grid.point(k))).collect();
        Self::new(grid, values)
    }

    fn refresh_max(&mut self) {
        self.max_abs = self.values.par_iter().map(|z| z.norm()).reduce(|| 0.0, f64::max);
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Unnormalizable);
        }
        let s = 1.0 / n.sqrt();
        self.values.par_iter_mut().for_each(|z| *z *= s);
        self.refresh_max();
        Ok(())
    }

    /// `sum |psi|^2 * cell volume`.
    pub fn norm_sqr(&self) -> f64 {
        stable_sum(self.values.len(), |k| self.values[k].norm_sqr()) * self.grid.cell_volume()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        &self.particles
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn branch_cut(&self) -> Option<&BranchCut> {
        self.branch_cut.as_ref()
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn with_particles(mut self, particles: Vec<ParticleSpec>) -> Result<Self> {
        if particles.len() != self.grid.n_particles {
            return Err(Error::Incompatible("particle list length".into()));
        }
        if particles.iter().any(|p| !(p.mass > 0.0)) {
            return Err(Error::Incompatible("particle mass must be positive".into()));
        }
        self.particles = particles;
        Ok(self)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Result<Self> {
        if frame == Frame::Relative && self.grid.n_particles != 1 {
            return Err(Error::Incompatible("relative frame needs a single coordinate block".into()));
        }
        self.frame = frame;
        Ok(self)
    }

    pub fn with_branch_cut(mut self, cut: Option<BranchCut>) -> Self {
        self.branch_cut = cut;
        self
    }

    /// Copies metadata (masses, hbar, frame, cut) from `other`.
    pub(crate) fn with_meta_of(mut self, other: &Field) -> Self {
        self.particles = other.particles.clone();
        self.hbar = other.hbar;
        self.frame = other.frame;
        self.branch_cut = other.branch_cut;
        self
    }

    /// Number of particles the field describes (2 for a relative-frame field).
    pub fn physical_particles(&self) -> usize {
        match self.frame {
            Frame::Absolute => self.grid.n_particles,
            Frame::Relative => 2,
        }
    }

    pub fn is_node(&self, flat: usize, eps: f64) -> bool {
        self.values[flat].norm() < eps * self.max_abs
    }

    pub fn node_mask(&self, eps: f64) -> NodeMask {
        NodeMask::compute(self, eps)
    }
}

/// Boolean mask marking `|psi| < eps * max|psi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMask {
    pub mask: Vec<bool>,
    pub eps: f64,
}

impl NodeMask {
    pub fn compute(field: &Field, eps: f64) -> Self {
        let cut = eps * field.max_abs();
        NodeMask { mask: field.values().par_iter().map(|z| z.norm() < cut).collect(), eps }
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Spin-1/2 value of a single particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Spin {
    #[serde(rename = "+")]
    Up,
    #[serde(rename = "-")]
    Down,
}

impl Spin {
    pub fn symbol(self) -> char {
        match self {
            Spin::Up => '+',
            Spin::Down => '-',
        }
    }
}

/// Map between spin multi-indices and component slots.
///
/// Slot bit `n - 1 - i` is set when particle `i` is spin-down, so for two
/// particles the order is `++, +-, -+, --`.
pub fn spin_slot(spins: &[Spin]) -> usize {
    spins.iter().fold(0, |acc, &s| (acc << 1) | usize::from(s == Spin::Down))
}

pub fn slot_spins(slot: usize, n: usize) -> Vec<Spin> {
    (0..n)
        .map(|i| if slot >> (n - 1 - i) & 1 == 1 { Spin::Down } else { Spin::Up })
        .collect()
}

pub fn spin_label(spins: &[Spin]) -> String {
    spins.iter().map(|s| s.symbol()).collect()
}

/// Spinorial wavefunction for `n` spin-1/2 particles: `2^n` component fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: GridSpec,
    components: Vec<Vec<Complex64>>,
    time: f64,
    particles: Vec<ParticleSpec>,
    hbar: f64,
    max_density: f64,
}

impl SpinorField {
    pub fn new(grid: GridSpec, components: Vec<Vec<Complex64>>) -> Result<Self> {
        let mut s = Self::from_raw(grid, components, 0.0)?;
        s.normalize()?;
        Ok(s)
    }

    pub fn from_raw(grid: GridSpec, components: Vec<Vec<Complex64>>, time: f64) -> Result<Self> {
        grid.validate()?;
        if components.len() != 1 << grid.n_particles {
            return Err(Error::Incompatible(format!(
                "{} spin components for {} particles",
                components.len(),
                grid.n_particles
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::Incompatible("component length differs from grid".into()));
        }
        let particles = vec![ParticleSpec::default(); grid.n_particles];
        let mut s =
            SpinorField { grid, components, time, particles, hbar: 1.0, max_density: 0.0 };
        s.refresh_max();
        Ok(s)
    }

    /// All-zero spinor except for the given component.
    pub fn single_component(field: &Field, spins: &[Spin]) -> Result<Self> {
        let g = field.grid().clone();
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); g.len()]; 1 << g.n_particles];
        comps[spin_slot(spins)] = field.values().to_vec();
        let mut s = Self::from_raw(g, comps, field.time())?;
        s.particles = field.particles().to_vec();
        s.hbar = field.hbar();
        s.normalize()?;
        Ok(s)
    }

    fn refresh_max(&mut self) {
        let n = self.grid.len();
        self.max_density = (0..n)
            .into_par_iter()
            .map(|k| self.density_at(k))
            .reduce(|| 0.0, f64::max);
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Unnormalizable);
        }
        let s = 1.0 / n.sqrt();
        for c in &mut self.components {
            c.par_iter_mut().for_each(|z| *z *= s);
        }
        self.refresh_max();
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components
            .iter()
            .map(|c| stable_sum(c.len(), |k| c[k].norm_sqr()))
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// `sum |psi_s|^2 * cell volume` for one component.
    pub fn component_weight(&self, slot: usize) -> f64 {
        stable_sum(self.grid.len(), |k| self.components[slot][k].norm_sqr())
            * self.grid.cell_volume()
    }

    /// Spin-summed density `sum_s |psi_s|^2` at a grid point.
    pub fn density_at(&self, flat: usize) -> f64 {
        self.components.iter().map(|c| c[flat].norm_sqr()).sum()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.components
    }

    pub fn component(&self, spins: &[Spin]) -> &[Complex64] {
        &self.components[spin_slot(spins)]
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.components
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        &self.particles
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn max_density(&self) -> f64 {
        self.max_density
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn with_particles(mut self, particles: Vec<ParticleSpec>) -> Result<Self> {
        if particles.len() != self.grid.n_particles || particles.iter().any(|p| !(p.mass > 0.0)) {
            return Err(Error::Incompatible("invalid particle list".into()));
        }
        self.particles = particles;
        Ok(self)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub(crate) fn with_meta_of(mut self, other: &SpinorField) -> Self {
        self.particles = other.particles.clone();
        self.hbar = other.hbar;
        self
    }

    /// Node test on the spin-summed amplitude.
    pub fn is_node(&self, flat: usize, eps: f64) -> bool {
        self.density_at(flat).sqrt() < eps * self.max_density.sqrt()
    }

    /// One component as a scalar field (normalized on its own).
    pub fn component_field(&self, spins: &[Spin]) -> Result<Field> {
        Ok(Field::new(self.grid.clone(), self.component(spins).to_vec())?
            .with_time(self.time)
            .with_particles(self.particles.clone())?
            .with_hbar(self.hbar))
    }

    /// Spin-summed density `|Psi|^2` as a flat vector.
    pub fn density(&self) -> Vec<f64> {
        (0..self.grid.len()).into_par_iter().map(|k| self.density_at(k)).collect()
    }

    /// Applies a single-particle spin-basis change `u` (2x2 unitary, row
    /// major) to every particle.
    pub fn rotate_spin_basis(&self, u: [[Complex64; 2]; 2]) -> SpinorField {
        let n = self.grid.n_particles;
        let mut comps = self.components.clone();
        for p in 0..n {
            let bit = 1 << (n - 1 - p);
            let mut next = comps.clone();
            for slot in 0..comps.len() {
                if slot & bit != 0 {
                    continue;
                }
                let (up, dn) = (&comps[slot], &comps[slot | bit]);
                let (out_up, out_dn): (Vec<_>, Vec<_>) = up
                    .par_iter()
                    .zip(dn.par_iter())
                    .map(|(&a, &b)| (u[0][0] * a + u[0][1] * b, u[1][0] * a + u[1][1] * b))
                    .unzip();
                next[slot] = out_up;
                next[slot | bit] = out_dn;
            }
            comps = next;
        }
        let mut s = SpinorField::from_raw(self.grid.clone(), comps, self.time)
            .expect("same shape")
            .with_meta_of(self);
        s.refresh_max();
        s
    }
}
