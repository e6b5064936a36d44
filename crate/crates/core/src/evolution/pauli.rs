//! Split-step propagation of spinors under the Pauli Hamiltonian
//! `H = sum_i p_i^2/2m_i + V + mu sum_i S_i . B(x_i)` with `S = sigma/2`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::{PotentialSpec, Region};
use super::stepper::{SplitStepper, StepperConfig};
use crate::configspace::field::SpinorField;
use crate::configspace::grid::GridSpec;
use crate::error::{Error, Result};

type Mat2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldProfile {
    #[default]
    Zero,
    Uniform { b: [f64; 3] },
    /// `b` inside `region`, falling to zero over `ramp` outside it with a
    /// `cos^2` profile, and exactly zero beyond.
    Plateau { b: [f64; 3], region: Region, ramp: f64 },
}

impl FieldProfile {
    pub fn at(&self, x: &[f64]) -> [f64; 3] {
        match self {
            FieldProfile::Zero => [0.0; 3],
            FieldProfile::Uniform { b } => *b,
            FieldProfile::Plateau { b, region, ramp } => {
                let mut w = 1.0;
                for (d, &v) in x.iter().enumerate() {
                    let out = (region.lo[d] - v).max(v - region.hi[d]);
                    if out <= 0.0 {
                        continue;
                    }
                    if out >= *ramp {
                        return [0.0; 3];
                    }
                    w *= (std::f64::consts::FRAC_PI_2 * out / ramp).cos().powi(2);
                }
                [b[0] * w, b[1] * w, b[2] * w]
            }
        }
    }
}

/// Coupling `mu`, field profile and an optional switch-on window `[t0, t1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MagneticSpec {
    pub mu: f64,
    #[serde(default)]
    pub field: FieldProfile,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

impl MagneticSpec {
    pub fn zero() -> Self {
        MagneticSpec::default()
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.mu != 0.0
            && self.field != FieldProfile::Zero
            && self.window.is_none_or(|(t0, t1)| t0 <= t && t < t1)
    }

    /// Duration of a spin flip for field magnitude `b`: `pi hbar / (mu b)`.
    pub fn pi_pulse_duration(mu: f64, b: f64, hbar: f64) -> f64 {
        std::f64::consts::PI * hbar / (mu * b).abs()
    }
}

/// `exp(-i phi n.sigma)` for the vector `phi n = w`.
fn su2(w: [f64; 3]) -> Mat2 {
    let phi = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let c = Complex64::new(phi.cos(), 0.0);
    if phi == 0.0 {
        return [[c, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), c]];
    }
    let s = phi.sin() / phi;
    let (nx, ny, nz) = (w[0] * s, w[1] * s, w[2] * s);
    // cos(phi) - i sin(phi) n.sigma
    [
        [Complex64::new(c.re, -nz), Complex64::new(-ny, -nx)],
        [Complex64::new(ny, -nx), Complex64::new(c.re, nz)],
    ]
}

fn is_unitary(u: &Mat2) -> bool {
    let mut worst: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let z = u[r][0] * u[c][0].conj() + u[r][1] * u[c][1].conj();
            let want = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((z - want).norm());
        }
    }
    worst < 1e-12
}

#[derive(Debug)]
pub struct PauliStepper {
    scalar: SplitStepper,
    magnetic: MagneticSpec,
}

impl PauliStepper {
    pub fn for_spinor(
        spinor: &SpinorField,
        potential: PotentialSpec,
        magnetic: MagneticSpec,
        cfg: StepperConfig,
    ) -> Result<Self> {
        if spinor.hbar() != cfg.hbar {
            return Err(Error::Incompatible("spinor and stepper disagree on hbar".into()));
        }
        let scalar = SplitStepper::new(spinor.grid(), spinor.particles(), potential, cfg)?;
        Ok(PauliStepper { scalar, magnetic })
    }

    pub fn magnetic(&self) -> &MagneticSpec {
        &self.magnetic
    }

    pub fn set_magnetic(&mut self, magnetic: MagneticSpec) {
        self.magnetic = magnetic;
    }

    pub fn scalar(&mut self) -> &mut SplitStepper {
        &mut self.scalar
    }

    /// Per-point, per-particle half-step spin rotations.
    fn half_rotations(&self) -> Result<Vec<Mat2>> {
        let g: &GridSpec = self.scalar.grid();
        let cfg = self.scalar.config();
        // mu S.B dt/(2 hbar) = (mu dt / 4 hbar) sigma.B
        let scale = self.magnetic.mu * cfg.dt / (4.0 * cfg.hbar);
        let (n, dim) = (g.n_particles, g.dim);
        let mats: Vec<Mat2> = (0..g.len())
            .into_par_iter()
            .flat_map_iter(|k| {
                let x = g.point(k);
                (0..n)
                    .map(|i| {
                        let b = self.magnetic.field.at(&x[i * dim..(i + 1) * dim]);
                        su2([b[0] * scale, b[1] * scale, b[2] * scale])
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        if mats.iter().any(|u| !is_unitary(u)) {
            return Err(Error::NonHermitian);
        }
        Ok(mats)
    }

    fn apply_spin(&self, comps: &mut [Vec<Complex64>], mats: &[Mat2]) {
        let n = self.scalar.grid().n_particles;
        let ns = comps.len();
        let len = comps[0].len();
        let mut packed = vec![Complex64::new(0.0, 0.0); len * ns];
        for (s, c) in comps.iter().enumerate() {
            for (k, z) in c.iter().enumerate() {
                packed[k * ns + s] = *z;
            }
        }
        packed.par_chunks_mut(ns).enumerate().for_each(|(k, amp)| {
            for i in 0..n {
                let u = &mats[k * n + i];
                let bit = 1 << (n - 1 - i);
                for s in 0..ns {
                    if s & bit != 0 {
                        continue;
                    }
                    let (a, b) = (amp[s], amp[s | bit]);
                    amp[s] = u[0][0] * a + u[0][1] * b;
                    amp[s | bit] = u[1][0] * a + u[1][1] * b;
                }
            }
        });
        for (s, c) in comps.iter_mut().enumerate() {
            for (k, z) in c.iter_mut().enumerate() {
                *z = packed[k * ns + s];
            }
        }
    }

    pub fn step(&mut self, spinor: &SpinorField) -> Result<SpinorField> {
        if spinor.grid() != self.scalar.grid() {
            return Err(Error::Incompatible("spinor grid differs from stepper grid".into()));
        }
        let t = spinor.time();
        let mut comps = spinor.components().to_vec();
        if !self.magnetic.is_active(t) {
            // without a field the components evolve independently, and a zero
            // component stays zero
            for c in comps.iter_mut().filter(|c| c.par_iter().any(|z| *z != Complex64::new(0.0, 0.0))) {
                self.scalar.step_values(c, t);
            }
        } else {
            if !self.magnetic.mu.is_finite() {
                return Err(Error::NonHermitian);
            }
            let mats = self.half_rotations()?;
            for c in comps.iter_mut() {
                self.scalar.apply_half_potential(c, t);
            }
            self.apply_spin(&mut comps, &mats);
            for c in comps.iter_mut() {
                self.scalar.apply_kinetic(c);
            }
            self.apply_spin(&mut comps, &mats);
            for c in comps.iter_mut() {
                self.scalar.apply_half_potential(c, t);
            }
        }
        let dt = self.scalar.config().dt;
        Ok(SpinorField::from_raw(spinor.grid().clone(), comps, t + dt)?.with_meta_of(spinor))
    }

    pub fn evolve(&mut self, spinor: &SpinorField, steps: usize) -> Result<SpinorField> {
        let mut s = spinor.clone();
        for _ in 0..steps {
            s = self.step(&s)?;
        }
        Ok(s)
    }
}

pub fn step_pauli(
    spinor: &SpinorField,
    potential: &PotentialSpec,
    magnetic: &MagneticSpec,
    cfg: StepperConfig,
) -> Result<SpinorField> {
    PauliStepper::for_spinor(spinor, potential.clone(), magnetic.clone(), cfg)?.step(spinor)
}
