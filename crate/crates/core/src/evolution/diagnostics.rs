//! Residuals of the continuity and Hamilton-Jacobi equations, the quantum
//! potential, and exchange identities of the amplitude.

use num_complex::Complex64;
use rayon::prelude::*;

use super::potential::PotentialSpec;
use crate::configspace::exchange::exchanged_index;
use crate::configspace::field::{Field, NODE_EPS};
use crate::configspace::local::{d1, d2};
use crate::error::{Error, Result};

/// Value stored at masked (nodal) points.
pub const MASKED: f64 = f64::NAN;

/// Residuals are evaluated where `|psi| >= EVAL_FLOOR * max|psi|`. Further
/// out, finite-difference errors in `Laplacian R / R` grow faster than the
/// density that weights them.
pub const EVAL_FLOOR: f64 = 1e-3;

fn amplitude(f: &Field) -> Vec<f64> {
    f.values().par_iter().map(|z| z.norm()).collect()
}

/// `Q = -sum_a (hbar^2 / 2 m_a) d_a^2 R / R`, with [`MASKED`] at nodes.
pub fn quantum_potential(field: &Field) -> Vec<f64> {
    let g = field.grid();
    let r = amplitude(field);
    let hb2 = field.hbar() * field.hbar();
    (0..g.len())
        .into_par_iter()
        .map(|k| {
            if field.is_node(k, NODE_EPS) {
                return MASKED;
            }
            -(0..g.n_axes())
                .map(|a| hb2 / (2.0 * field.particles()[a / g.dim].mass) * d2(g, &r, k, a))
                .sum::<f64>()
                / r[k]
        })
        .collect()
}

fn check_pair(before: &Field, after: &Field, dt: f64) -> Result<()> {
    if before.grid() != after.grid() {
        return Err(Error::Incompatible("snapshots live on different grids".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Incompatible("dt must be positive".into()));
    }
    Ok(())
}

fn eval_set(before: &Field, after: &Field) -> Vec<bool> {
    (0..before.grid().len())
        .into_par_iter()
        .map(|k| !before.is_node(k, EVAL_FLOOR) && !after.is_node(k, EVAL_FLOOR))
        .collect()
}

/// Probability current `j_a = (hbar/m_a) Im(psi* d_a psi)` on the grid.
fn currents(f: &Field) -> Vec<Vec<f64>> {
    let g = f.grid();
    let v = f.values();
    (0..g.n_axes())
        .map(|a| {
            let c = f.hbar() / f.particles()[a / g.dim].mass;
            (0..g.len()).into_par_iter().map(|k| c * (v[k].conj() * d1(g, v, k, a)).im).collect()
        })
        .collect()
}

fn divergence(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let j = currents(f);
    (0..g.len()).into_par_iter().map(|k| (0..g.n_axes()).map(|a| d1(g, &j[a], k, a)).sum()).collect()
}

/// Max of `|d_t R^2 + div(R^2 grad S / m)|` at the midpoint of two snapshots.
///
/// The potential does not enter the continuity equation; it is accepted so
/// all residuals share one signature.
pub fn continuity_residual(before: &Field, after: &Field, dt: f64, _v: &PotentialSpec) -> Result<f64> {
    check_pair(before, after, dt)?;
    let mask = eval_set(before, after);
    let (db, da) = (divergence(before), divergence(after));
    let (vb, va) = (before.values(), after.values());
    Ok((0..mask.len())
        .into_par_iter()
        .filter(|&k| mask[k])
        .map(|k| {
            let drho = (va[k].norm_sqr() - vb[k].norm_sqr()) / dt;
            (drho + 0.5 * (db[k] + da[k])).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// `d_t S` at every grid point from the phase advance between snapshots.
///
/// Each point's advance is reduced to `(-pi, pi]`, which is neighbor
/// consistent as long as `|d_t S| dt < pi` everywhere.
pub fn phase_rate(before: &Field, after: &Field, dt: f64) -> Result<Vec<f64>> {
    check_pair(before, after, dt)?;
    let (vb, va) = (before.values(), after.values());
    Ok((0..vb.len()).into_par_iter().map(|k| (va[k] * vb[k].conj()).arg() / dt).collect())
}

fn grad_phase(f: &Field) -> Vec<Vec<f64>> {
    let g = f.grid();
    let v = f.values();
    (0..g.n_axes())
        .map(|a| {
            (0..g.len())
                .into_par_iter()
                .map(|k| {
                    let rho = v[k].norm_sqr();
                    if rho == 0.0 {
                        0.0
                    } else {
                        f.hbar() * (v[k].conj() * d1(g, v, k, a)).im / rho
                    }
                })
                .collect()
        })
        .collect()
}

/// Max of `|d_t S + sum (grad S)^2 / 2m + V + Q|` at the midpoint of two
/// snapshots, with `S` in action units (`psi = R exp(i S / hbar)`).
pub fn hj_residual(before: &Field, after: &Field, dt: f64, v: &PotentialSpec) -> Result<f64> {
    check_pair(before, after, dt)?;
    let g = before.grid();
    let mask = eval_set(before, after);
    let hbar = before.hbar();
    let ds: Vec<f64> = phase_rate(before, after, dt)?.into_iter().map(|w| w * hbar).collect();
    let (sb, sa) = (grad_phase(before), grad_phase(after));
    let (qb, qa) = (quantum_potential(before), quantum_potential(after));
    let pot = v.sample(g, before.time());
    let masses: Vec<f64> = (0..g.n_axes()).map(|a| before.particles()[a / g.dim].mass).collect();
    Ok((0..g.len())
        .into_par_iter()
        .filter(|&k| mask[k])
        .map(|k| {
            let kin: f64 = (0..g.n_axes())
                .map(|a| 0.5 * (sb[a][k].powi(2) + sa[a][k].powi(2)) / (2.0 * masses[a]))
                .sum();
            (ds[k] + kin + pot[k] + 0.5 * (qb[k] + qa[k])).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// Max of `|Q(x) - Q(P_ij x)|` over off-node points.
pub fn quantum_potential_asymmetry(field: &Field, i: usize, j: usize) -> Result<f64> {
    crate::configspace::exchange::exchange(field, i, j)?;
    let g = field.grid();
    let q = quantum_potential(field);
    Ok((0..g.len())
        .into_par_iter()
        .filter(|&k| !q[k].is_nan())
        .map(|k| {
            let p = exchanged_index(g, field.frame(), k, i, j);
            if q[p].is_nan() {
                0.0
            } else {
                (q[k] - q[p]).abs()
            }
        })
        .reduce(|| 0.0, f64::max))
}

/// Max over off-node points and all axes of `|R d R~ - R~ d R|`, with
/// `R~ = R o P_ij` the exchanged amplitude.
pub fn exchange_gradient_identity(field: &Field, i: usize, j: usize) -> Result<f64> {
    let ex = crate::configspace::exchange::exchange(field, i, j)?;
    let g = field.grid();
    let (r, rt) = (amplitude(field), amplitude(&ex));
    Ok((0..g.len())
        .into_par_iter()
        .filter(|&k| !field.is_node(k, NODE_EPS))
        .map(|k| {
            (0..g.n_axes())
                .map(|a| (r[k] * d1(g, &rt, k, a) - rt[k] * d1(g, &r, k, a)).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// `psi -> psi exp(i q sum_i Lambda(x_i) / hbar)`. Guidance velocities are
/// unchanged when paired with `A -> A - grad Lambda`.
pub fn gauge_transform(field: &Field, lambda: impl Fn(&[f64]) -> f64 + Sync, q: f64) -> Result<Field> {
    let g = field.grid();
    let (n, dim) = (g.n_particles, g.dim);
    let hbar = field.hbar();
    let v = field.values();
    let values: Vec<Complex64> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let x = g.point(k);
            let l: f64 = (0..n).map(|i| lambda(&x[i * dim..(i + 1) * dim])).sum();
            v[k] * Complex64::from_polar(1.0, q * l / hbar)
        })
        .collect();
    Ok(Field::from_raw(g.clone(), values, field.time())?.with_meta_of(field))
}
