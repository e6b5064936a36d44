//! Exchange residuals of velocity, drift and amplitude.

use rayon::prelude::*;

use crate::configspace::exchange::{check_pair, exchange_point, exchanged_index};
use crate::configspace::field::{Frame, NODE_EPS};
use crate::configspace::grid::GridSpec;
use crate::configspace::local::{interpolate_velocity, Guiding};
use crate::error::{Error, Result};

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `k` in base `b`.
fn radical_inverse(mut k: u64, b: u32) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / b as f64);
    while k > 0 {
        inv += (k % b as u64) as f64 * f;
        k /= b as u64;
        f /= b as f64;
    }
    inv
}

/// Halton point `k` (from 1) scaled to the grid box.
pub fn halton_point(grid: &GridSpec, k: u64) -> Vec<f64> {
    (0..grid.n_axes())
        .map(|a| {
            let l = grid.extent[a];
            -l + 2.0 * l * radical_inverse(k, PRIMES[a])
        })
        .collect()
}

/// Configurations where the residuals are evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
}

impl SampleSet {
    /// The first `count` Halton points where the amplitude at the nearest
    /// grid point is at least `floor * max` in both orderings of `(i, j)`.
    /// Gives up after `64 * count` candidates.
    pub fn halton<G: Guiding + ?Sized>(g: &G, i: usize, j: usize, count: usize, floor: f64) -> Result<Self> {
        let grid = g.grid();
        check_pair(grid, g.frame(), i, j)?;
        let max = g.density_vec().into_iter().fold(0.0, f64::max);
        let cut = floor * floor * max;
        let mut points = Vec::with_capacity(count);
        for k in 1..=64 * count as u64 {
            if points.len() == count {
                break;
            }
            let x = halton_point(grid, k);
            let y = exchange_point(grid, g.frame(), &x, i, j);
            if !grid.contains(&y) {
                continue;
            }
            if g.density(grid.nearest_flat(&x)) >= cut && g.density(grid.nearest_flat(&y)) >= cut {
                points.push(x);
            }
        }
        if points.is_empty() {
            return Err(Error::EmptySampleSet);
        }
        Ok(SampleSet { points })
    }
}

/// Maximum residual and the largest speed component seen while computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledResidual {
    pub value: f64,
    pub scale: f64,
    pub used: usize,
}

impl ScaledResidual {
    pub fn relative(&self) -> f64 {
        self.value / self.scale.max(f64::MIN_POSITIVE)
    }
}

/// `v(X)` compared with the exchanged `v(P X)`; the relative frame compares
/// `v(r)` with `-v(-r)`.
fn exchange_residual<G: Guiding + ?Sized>(
    g: &G,
    i: usize,
    j: usize,
    samples: &SampleSet,
    osmotic: f64,
) -> Result<ScaledResidual> {
    let grid = g.grid();
    let frame = g.frame();
    check_pair(grid, frame, i, j)?;
    let per: Vec<Option<(f64, f64)>> = samples
        .points
        .par_iter()
        .map(|x| {
            let y = exchange_point(grid, frame, x, i, j);
            let (a, b) = match (interpolate_velocity(g, x, NODE_EPS), interpolate_velocity(g, &y, NODE_EPS)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return None,
            };
            let va: Vec<f64> = a.current.iter().zip(&a.osmotic).map(|(c, o)| c + osmotic * o).collect();
            let vb: Vec<f64> = b.current.iter().zip(&b.osmotic).map(|(c, o)| c + osmotic * o).collect();
            let vb = match frame {
                Frame::Relative => vb.iter().map(|v| -v).collect(),
                Frame::Absolute => exchange_point(grid, frame, &vb, i, j),
            };
            let r = va.iter().zip(&vb).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let s = va.iter().chain(&vb).map(|v| v.abs()).fold(0.0, f64::max);
            Some((r, s))
        })
        .collect();
    let used: Vec<(f64, f64)> = per.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(ScaledResidual {
        value: used.iter().map(|p| p.0).fold(0.0, f64::max),
        scale: used.iter().map(|p| p.1).fold(0.0, f64::max),
        used: used.len(),
    })
}

/// Max over off-node samples of `|v_i(..x..y..) - v_j(..y..x..)|` over all
/// particles and components.
pub fn velocity_exchange_residual<G: Guiding + ?Sized>(g: &G, i: usize, j: usize, samples: &SampleSet) -> Result<f64> {
    Ok(exchange_residual(g, i, j, samples, 0.0)?.value)
}

/// Same comparison for the Nelson drift (current plus osmotic velocity).
pub fn drift_exchange_residual<G: Guiding + ?Sized>(g: &G, i: usize, j: usize, samples: &SampleSet) -> Result<f64> {
    Ok(exchange_residual(g, i, j, samples, 1.0)?.value)
}

pub fn velocity_residual_scaled<G: Guiding + ?Sized>(g: &G, i: usize, j: usize, s: &SampleSet) -> Result<ScaledResidual> {
    exchange_residual(g, i, j, s, 0.0)
}

pub fn drift_residual_scaled<G: Guiding + ?Sized>(g: &G, i: usize, j: usize, s: &SampleSet) -> Result<ScaledResidual> {
    exchange_residual(g, i, j, s, 1.0)
}

/// `max_X ||psi|(X) - |psi|(P X)|` over every grid point (coincidence set
/// included), divided by `max |psi|`. Spinors use the spin-summed density.
pub fn amplitude_exchange_residual<G: Guiding + ?Sized>(g: &G, i: usize, j: usize) -> Result<f64> {
    let grid = g.grid();
    check_pair(grid, g.frame(), i, j)?;
    let amp: Vec<f64> = g.density_vec().into_iter().map(f64::sqrt).collect();
    let max = amp.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::Unnormalizable);
    }
    let r = (0..amp.len())
        .into_par_iter()
        .map(|k| (amp[k] - amp[exchanged_index(grid, g.frame(), k, i, j)]).abs())
        .reduce(|| 0.0, f64::max);
    Ok(r / max)
}
