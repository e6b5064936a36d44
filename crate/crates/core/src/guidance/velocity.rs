//! Guidance velocities: de Broglie-Bohm velocity and Nelson drift.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::configspace::field::ParticleSpec;
use crate::configspace::grid::GridSpec;
use crate::configspace::local::{grid_velocity, interpolate_velocity, Guiding, LocalVelocity};
use crate::error::{Error, Result};

/// Single-particle vector potential `A(x)`; only the first `D` components
/// are used.
#[derive(Clone, Default)]
pub enum VectorPotentialSpec {
    #[default]
    Zero,
    Uniform([f64; 3]),
    Custom(Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>),
}

impl fmt::Debug for VectorPotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorPotentialSpec::Zero => write!(f, "Zero"),
            VectorPotentialSpec::Uniform(a) => write!(f, "Uniform({a:?})"),
            VectorPotentialSpec::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl VectorPotentialSpec {
    pub fn at(&self, x: &[f64]) -> [f64; 3] {
        match self {
            VectorPotentialSpec::Zero => [0.0; 3],
            VectorPotentialSpec::Uniform(a) => *a,
            VectorPotentialSpec::Custom(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorPotentialSpec::Zero)
    }

    /// Adds `(q_i / m_i) A(x_i)` to every particle block of `v`.
    pub fn add_to(&self, grid: &GridSpec, particles: &[ParticleSpec], x: &[f64], v: &mut [f64]) {
        if self.is_zero() {
            return;
        }
        let dim = grid.dim;
        for (i, p) in particles.iter().enumerate().take(grid.n_particles) {
            let a = self.at(&x[i * dim..(i + 1) * dim]);
            for d in 0..dim {
                v[i * dim + d] += p.charge / p.mass * a[d];
            }
        }
    }
}

/// `xdot_i = (grad_i S + q_i A(x_i)) / m_i`, spin-summed for spinors.
pub fn bohm_velocity<G: Guiding + ?Sized>(
    g: &G,
    point: &[f64],
    a: &VectorPotentialSpec,
    eps: f64,
) -> Result<Vec<f64>> {
    let mut v = interpolate_velocity(g, point, eps)?.current;
    a.add_to(g.grid(), g.particles(), point, &mut v);
    Ok(v)
}

/// Nelson drift `b_i = v_i + u_i`: current plus osmotic velocity (plus the
/// vector-potential term of the current velocity).
pub fn nelson_drift<G: Guiding + ?Sized>(
    g: &G,
    point: &[f64],
    a: &VectorPotentialSpec,
    eps: f64,
) -> Result<Vec<f64>> {
    let lv = interpolate_velocity(g, point, eps)?;
    let mut b: Vec<f64> = lv.current.iter().zip(&lv.osmotic).map(|(v, u)| v + u).collect();
    a.add_to(g.grid(), g.particles(), point, &mut b);
    Ok(b)
}

/// Current and osmotic velocities precomputed on every grid point of one
/// snapshot, with the node mask folded in.
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    grid: GridSpec,
    particles: Vec<ParticleSpec>,
    time: f64,
    /// Axis-major: `current[a * len + k]`.
    current: Vec<f64>,
    osmotic: Vec<f64>,
    node: Vec<bool>,
}

impl VelocityGrid {
    pub fn new<G: Guiding + ?Sized>(g: &G, eps: f64) -> Self {
        let grid = g.grid().clone();
        let (len, n) = (grid.len(), grid.n_axes());
        let per_point: Vec<Option<LocalVelocity>> =
            (0..len).into_par_iter().map(|k| grid_velocity(g, k, eps).ok()).collect();
        let mut current = vec![0.0; n * len];
        let mut osmotic = vec![0.0; n * len];
        let mut node = vec![false; len];
        for (k, lv) in per_point.into_iter().enumerate() {
            match lv {
                Some(lv) => {
                    for a in 0..n {
                        current[a * len + k] = lv.current[a];
                        osmotic[a * len + k] = lv.osmotic[a];
                    }
                }
                None => node[k] = true,
            }
        }
        VelocityGrid { grid, particles: g.particles().to_vec(), time: g.time(), current, osmotic, node }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> &[ParticleSpec] {
        &self.particles
    }

    /// Multilinear interpolation; `osmotic_scale` weights the osmotic part
    /// (0 gives the Bohm velocity, 1 the Nelson drift).
    pub fn velocity(&self, x: &[f64], osmotic_scale: f64, out: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        let n = g.n_axes();
        if !g.contains(x) {
            return Err(Error::OutsideExtent);
        }
        let len = g.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut base = [(0usize, 0.0f64); 12];
        for a in 0..n {
            base[a] = g.locate(a, x[a]);
        }
        for corner in 0..1usize << n {
            let mut w = 1.0;
            let mut flat = 0;
            for (a, &(k, f)) in base[..n].iter().enumerate() {
                let (idx, wa) = if corner >> a & 1 == 1 { ((k + 1) % g.points[a], f) } else { (k, 1.0 - f) };
                w *= wa;
                flat += idx * g.stride(a);
            }
            if w == 0.0 {
                continue;
            }
            if self.node[flat] {
                return Err(Error::NodeProximity { index: flat });
            }
            for a in 0..n {
                out[a] += w * (self.current[a * len + flat] + osmotic_scale * self.osmotic[a * len + flat]);
            }
        }
        Ok(())
    }
}
