use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height of the potential used for hard walls (boundary masks and boxes).
pub const WALL_HEIGHT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Boundary {
    #[default]
    Periodic,
    /// Periodic grid whose outermost `cells` layers on every axis carry a
    /// wall potential of [`WALL_HEIGHT`].
    HardWall { cells: usize },
}

/// Regular grid over the `n_particles * dim` axes of configuration space.
///
/// Axes are particle-major: axis `p * dim + d` is coordinate `d` of particle
/// `p`. Storage is row-major with the last axis fastest. Axis `a` holds the
/// points `-L_a + k h_a` for `k = 0..N_a`, with `h_a = 2 L_a / N_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_particles: usize,
    pub dim: usize,
    pub points: Vec<usize>,
    pub extent: Vec<f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(
        n_particles: usize,
        dim: usize,
        points: Vec<usize>,
        extent: Vec<f64>,
        boundary: Boundary,
    ) -> Result<Self> {
        let g = GridSpec { n_particles, dim, points, extent, boundary };
        g.validate()?;
        Ok(g)
    }

    /// Same point count and extent on every axis.
    pub fn uniform(n_particles: usize, dim: usize, points: usize, extent: f64) -> Result<Self> {
        let n = n_particles * dim;
        Self::new(n_particles, dim, vec![points; n], vec![extent; n], Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 || self.n_particles > 4 {
            return Err(Error::InvalidGrid(format!(
                "particle count {} outside 1..=4",
                self.n_particles
            )));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!("dimension {} outside 1..=3", self.dim)));
        }
        let n = self.n_axes();
        if self.points.len() != n || self.extent.len() != n {
            return Err(Error::InvalidGrid(format!(
                "expected {n} axes, got {} point counts and {} extents",
                self.points.len(),
                self.extent.len()
            )));
        }
        if let Some(p) = self.points.iter().find(|&&p| p < 8) {
            return Err(Error::InvalidGrid(format!("axis with {p} points (< 8)")));
        }
        if let Some(l) = self.extent.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid(format!("non-positive extent {l}")));
        }
        if let Boundary::HardWall { cells } = self.boundary {
            if self.points.iter().any(|&p| 2 * cells >= p) {
                return Err(Error::InvalidGrid("hard-wall layer covers the whole axis".into()));
            }
        }
        Ok(())
    }

    pub fn n_axes(&self) -> usize {
        self.n_particles * self.dim
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extent[axis] / self.points[axis] as f64
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        -self.extent[axis] + k as f64 * self.spacing(axis)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.n_axes()).map(|a| self.spacing(a)).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.n_axes();
        let mut s = vec![1; n];
        for a in (0..n.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.points[axis + 1..].iter().product()
    }

    pub fn axis(&self, particle: usize, d: usize) -> usize {
        particle * self.dim + d
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&k, &n)| acc * n + k)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n_axes()];
        for a in (0..self.n_axes()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    /// Coordinates of the grid point with flat index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &k)| self.coord(a, k))
            .collect()
    }

    /// Flat index of the neighbor `offset` cells away along `axis`, wrapping.
    pub fn neighbor(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let n = self.points[axis] as isize;
        let stride = self.stride(axis);
        let k = (flat / stride) as isize % n;
        let nk = (k + offset).rem_euclid(n);
        (flat as isize + (nk - k) * stride as isize) as usize
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.extent)
            .all(|(&xa, &l)| xa >= -l && xa <= l && xa.is_finite())
    }

    /// Nearest grid index along `axis`, wrapping periodically.
    pub fn nearest(&self, axis: usize, x: f64) -> usize {
        let u = ((x + self.extent[axis]) / self.spacing(axis)).round() as isize;
        u.rem_euclid(self.points[axis] as isize) as usize
    }

    pub fn nearest_flat(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = x.iter().enumerate().map(|(a, &xa)| self.nearest(a, xa)).collect();
        self.flat_index(&idx)
    }

    /// Lower cell index and fractional offset of `x` along `axis`.
    pub fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let u = (x + self.extent[axis]) / self.spacing(axis);
        let k = u.floor();
        let frac = u - k;
        ((k as isize).rem_euclid(self.points[axis] as isize) as usize, frac)
    }

    pub fn particle_axes_match(&self, i: usize, j: usize) -> bool {
        (0..self.dim).all(|d| {
            let (a, b) = (self.axis(i, d), self.axis(j, d));
            self.points[a] == self.points[b] && self.extent[a] == self.extent[b]
        })
    }

    /// Whether the point with flat index `flat` sits in the hard-wall layer.
    pub fn in_wall_layer(&self, flat: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => false,
            Boundary::HardWall { cells } => self
                .multi_index(flat)
                .iter()
                .zip(&self.points)
                .any(|(&k, &n)| k < cells || k >= n - cells),
        }
    }

    /// Slice of a configuration belonging to one particle.
    pub fn particle_coords<'a>(&self, x: &'a [f64], particle: usize) -> &'a [f64] {
        &x[particle * self.dim..(particle + 1) * self.dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_axes_and_bad_extent() {
        assert!(GridSpec::uniform(1, 1, 4, 1.0).is_err());
        assert!(GridSpec::uniform(1, 1, 16, 0.0).is_err());
        assert!(GridSpec::uniform(5, 1, 16, 1.0).is_err());
        assert!(GridSpec::uniform(1, 4, 16, 1.0).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(2, 1, vec![8, 12], vec![1.0, 2.0], Boundary::Periodic).unwrap();
        for f in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(f)), f);
        }
        assert_eq!(g.strides(), vec![12, 1]);
        assert_eq!(g.len(), 96);
    }

    #[test]
    fn neighbor_wraps() {
        let g = GridSpec::uniform(1, 2, 8, 1.0).unwrap();
        let f = g.flat_index(&[0, 7]);
        assert_eq!(g.multi_index(g.neighbor(f, 1, 1)), vec![0, 0]);
        assert_eq!(g.multi_index(g.neighbor(f, 0, -1)), vec![7, 7]);
    }

    #[test]
    fn nearest_and_locate() {
        let g = GridSpec::uniform(1, 1, 16, 4.0).unwrap();
        assert_eq!(g.spacing(0), 0.5);
        assert_eq!(g.nearest(0, 0.0), 8);
        assert_eq!(g.nearest(0, 0.26), 9);
        let (k, f) = g.locate(0, 0.25);
        assert_eq!(k, 8);
        assert!((f - 0.5).abs() < 1e-12);
    }
}
