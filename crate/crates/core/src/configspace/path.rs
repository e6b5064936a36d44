//! Grid-snapped paths and phase transport along them.

use std::f64::consts::PI;

use super::field::{Field, NODE_EPS};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// A chain of grid points in which consecutive vertices are nearest neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    pub vertices: Vec<usize>,
}

impl GridPath {
    /// Snaps waypoints to the grid and joins them by staircase moves.
    ///
    /// Each move goes one cell along the axis with the largest remaining
    /// index difference, which keeps the staircase close to the chord.
    pub fn from_waypoints(grid: &GridSpec, waypoints: &[Vec<f64>]) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::InvalidPath("no waypoints".into()));
        }
        let n = grid.n_axes();
        let mut vertices = Vec::new();
        let mut cur: Option<Vec<isize>> = None;
        for w in waypoints {
            if w.len() != n {
                return Err(Error::InvalidPath("waypoint dimension mismatch".into()));
            }
            if !grid.contains(w) {
                return Err(Error::InvalidPath("waypoint outside grid extent".into()));
            }
            let target: Vec<isize> =
                (0..n).map(|a| grid.nearest(a, w[a]) as isize).collect();
            match cur.as_mut() {
                None => {
                    vertices.push(to_flat(grid, &target));
                    cur = Some(target);
                }
                Some(c) => loop {
                    let (axis, diff) = (0..n)
                        .map(|a| (a, target[a] - c[a]))
                        .max_by_key(|&(_, d)| d.abs())
                        .expect("n > 0");
                    if diff == 0 {
                        break;
                    }
                    c[axis] += diff.signum();
                    vertices.push(to_flat(grid, c));
                },
            }
        }
        Ok(GridPath { vertices })
    }

    pub fn start(&self) -> usize {
        self.vertices[0]
    }

    pub fn end(&self) -> usize {
        *self.vertices.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn concat(&self, other: &GridPath) -> Result<GridPath> {
        if self.end() != other.start() {
            return Err(Error::InvalidPath("paths do not join".into()));
        }
        let mut v = self.vertices.clone();
        v.extend_from_slice(&other.vertices[1..]);
        Ok(GridPath { vertices: v })
    }

    /// Checks that consecutive vertices differ by one cell along one axis.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        for w in self.vertices.windows(2) {
            let (a, b) = (grid.multi_index(w[0]), grid.multi_index(w[1]));
            let steps: usize = a
                .iter()
                .zip(&b)
                .zip(&grid.points)
                .map(|((&x, &y), &n)| {
                    let d = x.abs_diff(y);
                    d.min(n - d)
                })
                .sum();
            if steps != 1 {
                return Err(Error::InvalidPath("vertices are not grid neighbors".into()));
            }
        }
        Ok(())
    }
}

fn to_flat(grid: &GridSpec, idx: &[isize]) -> usize {
    let u: Vec<usize> = idx
        .iter()
        .zip(&grid.points)
        .map(|(&k, &n)| k.rem_euclid(n as isize) as usize)
        .collect();
    grid.flat_index(&u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Relative node threshold.
    pub eps: f64,
    /// A neighbor step must stay below `pi * (1 - margin)`.
    pub margin: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions { eps: NODE_EPS, margin: 0.05 }
    }
}

/// Phase change `S(end) - S(start)` accumulated along a grid path.
///
/// Each neighbor step is reduced to `(-pi, pi]`; steps across the field's
/// branch cut get the sheet correction before the reduction.
pub fn unwrapped_phase_delta(field: &Field, path: &GridPath, opts: TransportOptions) -> Result<f64> {
    let grid = field.grid();
    path.validate(grid)?;
    let v = field.values();
    let limit = PI * (1.0 - opts.margin);
    for &k in &path.vertices {
        if field.is_node(k, opts.eps) {
            return Err(Error::NodeProximity { index: k });
        }
    }
    let mut total = 0.0;
    for w in path.vertices.windows(2) {
        let raw = (v[w[1]] * v[w[0]].conj()).arg();
        let step = match field.branch_cut() {
            Some(cut) => wrap_phase(raw + cut.crossing_correction(&grid.point(w[0]), &grid.point(w[1]))),
            None => raw,
        };
        if step.abs() >= limit {
            return Err(Error::PhaseAliasing { step, limit });
        }
        total += step;
    }
    Ok(total)
}
