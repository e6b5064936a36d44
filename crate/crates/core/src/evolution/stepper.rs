//! Strang split-step spectral propagation of scalar fields.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fftnd::{wavenumbers, FftNd};
use super::potential::PotentialSpec;
use crate::configspace::field::{Field, ParticleSpec};
use crate::configspace::grid::{GridSpec, WALL_HEIGHT};
use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        StepperConfig { dt, hbar: 1.0 }
    }
}

/// `dt * Emax / hbar` for the largest kinetic eigenvalue on the grid.
pub fn aliasing_ratio(grid: &GridSpec, particles: &[ParticleSpec], cfg: &StepperConfig) -> f64 {
    let emax: f64 = (0..grid.n_axes())
        .map(|a| {
            let k = PI / grid.spacing(a);
            cfg.hbar * cfg.hbar * k * k / (2.0 * particles[a / grid.dim].mass)
        })
        .sum();
    cfg.dt * emax / cfg.hbar
}

/// Split-step propagator with cached kinetic and potential phase factors.
///
/// Potentials are piecewise constant over a step and sampled at the step's
/// start time. Values at or above [`WALL_HEIGHT`] are impenetrable: the
/// amplitude there is set to zero at every half step. Other values with
/// `|V| dt / hbar > pi/2` are clamped to that bound, since larger phases
/// alias.
#[derive(Debug)]
pub struct SplitStepper {
    grid: GridSpec,
    particles: Vec<ParticleSpec>,
    cfg: StepperConfig,
    potential: PotentialSpec,
    fft: FftNd,
    kinetic: Vec<Complex64>,
    half_phases: HashMap<Vec<bool>, Arc<Vec<Complex64>>>,
}

impl SplitStepper {
    pub fn new(
        grid: &GridSpec,
        particles: &[ParticleSpec],
        potential: PotentialSpec,
        cfg: StepperConfig,
    ) -> Result<Self> {
        grid.validate()?;
        if particles.len() != grid.n_particles || particles.iter().any(|p| !(p.mass > 0.0)) {
            return Err(Error::Incompatible("particle list does not match grid".into()));
        }
        if !(cfg.dt > 0.0) || !(cfg.hbar > 0.0) {
            return Err(Error::Config("dt and hbar must be positive".into()));
        }
        let ratio = aliasing_ratio(grid, particles, &cfg);
        if ratio >= PI {
            return Err(Error::AliasingBound { ratio });
        }
        if particles.len() > 1 && particles.windows(2).all(|w| w[0] == w[1]) {
            potential.check_symmetric(grid)?;
        }
        let ks: Vec<Vec<f64>> = (0..grid.n_axes())
            .map(|a| {
                let m = particles[a / grid.dim].mass;
                wavenumbers(grid.points[a], grid.spacing(a))
                    .into_iter()
                    .map(|k| cfg.hbar * k * k / (2.0 * m))
                    .collect()
            })
            .collect();
        let kinetic = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let e: f64 = grid.multi_index(flat).iter().enumerate().map(|(a, &j)| ks[a][j]).sum();
                Complex64::from_polar(1.0, -e * cfg.dt)
            })
            .collect();
        Ok(SplitStepper {
            grid: grid.clone(),
            particles: particles.to_vec(),
            cfg,
            potential,
            fft: FftNd::new(&grid.points),
            kinetic,
            half_phases: HashMap::new(),
        })
    }

    pub fn for_field(field: &Field, potential: PotentialSpec, cfg: StepperConfig) -> Result<Self> {
        if field.branch_cut().is_some() {
            return Err(Error::Incompatible("multi-valued (branch-cut) fields are not evolved".into()));
        }
        if field.hbar() != cfg.hbar {
            return Err(Error::Incompatible("field and stepper disagree on hbar".into()));
        }
        Self::new(field.grid(), field.particles(), potential, cfg)
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        &self.particles
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Potential ceiling used by the stepper.
    pub fn clamp_height(&self) -> f64 {
        PI / 2.0 * self.cfg.hbar / self.cfg.dt
    }

    /// Potential on the grid at time `t`, including hard-wall layers.
    pub fn potential_values(&self, t: f64) -> Vec<f64> {
        let mut v = self.potential.sample(&self.grid, t);
        v.par_iter_mut().enumerate().for_each(|(k, x)| {
            if self.grid.in_wall_layer(k) {
                *x += WALL_HEIGHT;
            }
        });
        v
    }

    fn half_phase(&mut self, t: f64) -> Arc<Vec<Complex64>> {
        let key = self.potential.pulse_key(t);
        if let Some(p) = self.half_phases.get(&key) {
            return p.clone();
        }
        let cap = self.clamp_height();
        let s = self.cfg.dt / (2.0 * self.cfg.hbar);
        let phases: Vec<Complex64> = self
            .potential_values(t)
            .into_par_iter()
            .map(|v| if v >= WALL_HEIGHT { Complex64::new(0.0, 0.0) } else { Complex64::from_polar(1.0, -v.clamp(-cap, cap) * s) })
            .collect();
        let p = Arc::new(phases);
        self.half_phases.insert(key, p.clone());
        p
    }

    /// Multiplies by `exp(-i V(t) dt / 2 hbar)`.
    pub fn apply_half_potential(&mut self, v: &mut [Complex64], t: f64) {
        let p = self.half_phase(t);
        v.par_iter_mut().zip(p.par_iter()).for_each(|(z, w)| *z *= w);
    }

    /// Full kinetic step in Fourier space.
    pub fn apply_kinetic(&self, v: &mut [Complex64]) {
        self.fft.forward(v);
        v.par_iter_mut().zip(self.kinetic.par_iter()).for_each(|(z, w)| *z *= w);
        self.fft.inverse(v);
    }

    /// One Strang step of raw samples starting at time `t`.
    pub fn step_values(&mut self, v: &mut [Complex64], t: f64) {
        self.apply_half_potential(v, t);
        self.apply_kinetic(v);
        self.apply_half_potential(v, t);
    }

    pub fn step(&mut self, field: &Field) -> Result<Field> {
        if field.grid() != &self.grid {
            return Err(Error::Incompatible("field grid differs from stepper grid".into()));
        }
        if field.branch_cut().is_some() {
            return Err(Error::Incompatible("multi-valued (branch-cut) fields are not evolved".into()));
        }
        let mut v = field.values().to_vec();
        self.step_values(&mut v, field.time());
        Ok(Field::from_raw(self.grid.clone(), v, field.time() + self.cfg.dt)?.with_meta_of(field))
    }

    /// Takes `steps` steps, keeping the initial field and every `every`-th one.
    pub fn evolve(&mut self, field: &Field, steps: usize, every: usize) -> Result<Vec<Field>> {
        let every = every.max(1);
        let mut out = vec![field.clone()];
        let mut v = field.values().to_vec();
        let t0 = field.time();
        for s in 0..steps {
            self.step_values(&mut v, t0 + s as f64 * self.cfg.dt);
            if (s + 1) % every == 0 || s + 1 == steps {
                let t = t0 + (s + 1) as f64 * self.cfg.dt;
                out.push(Field::from_raw(self.grid.clone(), v.clone(), t)?.with_meta_of(field));
            }
        }
        Ok(out)
    }
}

/// One step; builds a fresh stepper (use [`SplitStepper`] for many steps).
pub fn step_schrodinger(field: &Field, potential: &PotentialSpec, cfg: StepperConfig) -> Result<Field> {
    SplitStepper::for_field(field, potential.clone(), cfg)?.step(field)
}
