//! Pairwise phase consistency for three or more particles and the winding
//! table of two-particle fields in `D = 2`.

use serde::{Deserialize, Serialize};

use super::paths::{exchange_phase, ExchangePath, Route};
use super::report::phase_distance;
use crate::configspace::exchange::exchange_point;
use crate::configspace::field::{Field, Frame};
use crate::configspace::path::{wrap_phase, TransportOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub triple: (usize, usize, usize),
    /// `gamma` of every pair from the first usable path given for it.
    pub gammas: Vec<((usize, usize), f64)>,
    /// Largest circular distance between any two pair phases.
    pub spread: f64,
    /// `(jk)(ik)(jk)` applied step by step from the start of the `(i, j)`
    /// path, summed.
    pub composed: f64,
    /// Direct `gamma_ij` at the same start.
    pub direct: f64,
    pub composition_error: f64,
    /// `|2 gamma_jk + gamma_ik - gamma_ij|` on the circle.
    pub relation_error: f64,
    pub consistent: bool,
}

fn first_gamma(field: &Field, paths: &[ExchangePath], pair: (usize, usize), opts: TransportOptions) -> Result<f64> {
    let mut err = None;
    for p in paths.iter().filter(|p| (p.pair.0.min(p.pair.1), p.pair.0.max(p.pair.1)) == pair) {
        match exchange_phase(field, p, opts) {
            Ok(ph) if p.winding.abs() == 1 => return Ok(p.winding.signum() as f64 * ph.gamma),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    }
    Err(err.unwrap_or_else(|| Error::InvalidPath(format!("no simple path for pair {pair:?}"))))
}

/// Same kind of path as `like` for another pair, starting at `x`.
fn path_like(field: &Field, like: &ExchangePath, a: usize, b: usize, x: &[f64]) -> Result<ExchangePath> {
    let g = field.grid();
    match like.route {
        Route::Direct => ExchangePath::direct(g, Frame::Absolute, a, b, x),
        Route::Transport { .. } => ExchangePath::rotation(g, a, b, x, like.winding.signum(), 0.0),
    }
}

/// Checks that every pair `(i, j)`, `(i, k)`, `(j, k)` of `triple` carries
/// the same exchange phase, and that composing `(jk)(ik)(jk)` reproduces the
/// direct `(ij)` exchange.
pub fn pairwise_phase_consistency(
    field: &Field,
    triple: (usize, usize, usize),
    paths: &[ExchangePath],
    tol: f64,
) -> Result<ConsistencyReport> {
    if field.physical_particles() < 3 || field.frame() != Frame::Absolute {
        return Err(Error::Incompatible("pairwise consistency needs three particles".into()));
    }
    let (i, j, k) = triple;
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let opts = TransportOptions::default();
    let pairs = [key(i, j), key(i, k), key(j, k)];
    let gammas = pairs
        .iter()
        .map(|&p| first_gamma(field, paths, p, opts).map(|g| (p, g)))
        .collect::<Result<Vec<_>>>()?;
    let spread = gammas
        .iter()
        .flat_map(|a| gammas.iter().map(move |b| phase_distance(a.1, b.1)))
        .fold(0.0, f64::max);

    let base = paths
        .iter()
        .find(|p| key(p.pair.0, p.pair.1) == key(i, j) && p.winding.abs() == 1)
        .ok_or_else(|| Error::InvalidPath("no simple path for the (i, j) pair".into()))?;
    let g = field.grid();
    let direct = exchange_phase(field, &path_like(field, base, i, j, &base.start)?, opts)?.gamma;
    let mut x = base.start.clone();
    let mut composed = 0.0;
    for (a, b) in [(j, k), (i, k), (j, k)] {
        let p = path_like(field, base, a, b, &x)?;
        composed += exchange_phase(field, &p, opts)?.raw;
        x = exchange_point(g, Frame::Absolute, &p.start, a, b);
    }
    let composition_error = phase_distance(composed, direct);
    let (g_ij, g_ik, g_jk) = (gammas[0].1, gammas[1].1, gammas[2].1);
    let relation_error = phase_distance(2.0 * g_jk + g_ik, g_ij);
    Ok(ConsistencyReport {
        triple,
        spread,
        composed: wrap_phase(composed),
        direct,
        composition_error,
        relation_error,
        consistent: spread <= tol && composition_error <= tol && relation_error <= tol,
        gammas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingRow {
    pub winding: i32,
    pub raw: f64,
    pub gamma: f64,
    /// `winding * gamma(1)` reduced to `(-pi, pi]`.
    pub expected: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingTable {
    pub gamma1: f64,
    pub rows: Vec<WindingRow>,
    pub consistent: bool,
}

/// `gamma(n)` for the given winding counts around the coincidence point of a
/// two-particle `D = 2` field (relative or absolute frame).
pub fn winding_phase_table(field: &Field, start: &[f64], windings: &[i32], tol: f64) -> Result<WindingTable> {
    let g = field.grid();
    let path = |n: i32| match field.frame() {
        Frame::Relative => ExchangePath::relative_rotation(g, start, n, 0.0),
        Frame::Absolute if g.dim == 2 && g.n_particles == 2 => ExchangePath::rotation(g, 0, 1, start, n, 0.0),
        Frame::Absolute => Err(Error::Incompatible("winding table needs two particles in D = 2".into())),
    };
    let opts = TransportOptions::default();
    let gamma1 = exchange_phase(field, &path(1)?, opts)?.gamma;
    let rows = windings
        .iter()
        .map(|&n| {
            let (raw, gamma) = if n == 0 {
                (0.0, 0.0)
            } else {
                let ph = exchange_phase(field, &path(n)?, opts)?;
                (ph.raw, ph.gamma)
            };
            let expected = wrap_phase(n as f64 * gamma1);
            Ok(WindingRow { winding: n, raw, gamma, expected, error: phase_distance(gamma, expected) })
        })
        .collect::<Result<Vec<_>>>()?;
    let consistent = rows.iter().all(|r| r.error <= tol);
    Ok(WindingTable { gamma1, rows, consistent })
}

impl WindingTable {
    pub fn to_text(&self) -> String {
        let mut s = format!("gamma1 = {}\nconsistent = {}\n", self.gamma1, self.consistent);
        for r in &self.rows {
            s += &format!(
                "winding.{:+}.raw = {}\nwinding.{:+}.gamma = {}\nwinding.{:+}.error = {}\n",
                r.winding, r.raw, r.winding, r.gamma, r.winding, r.error
            );
        }
        s
    }
}
