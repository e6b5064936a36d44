//! Connectivity of the support `{|psi| >= threshold}` on the grid.

use super::exchange::exchanged_index;
use super::field::Frame;
use super::grid::GridSpec;

pub const OUTSIDE: u32 = u32::MAX;

/// Whether two particles sit on the same grid point (the coincidence set).
pub fn is_coincident(grid: &GridSpec, frame: Frame, flat: usize) -> bool {
    let idx = grid.multi_index(flat);
    match frame {
        Frame::Relative => idx.iter().enumerate().all(|(a, &k)| grid.coord(a, k) == 0.0),
        Frame::Absolute => {
            let n = grid.n_particles;
            (0..n).any(|i| {
                (i + 1..n).any(|j| {
                    (0..grid.dim).all(|d| idx[grid.axis(i, d)] == idx[grid.axis(j, d)])
                })
            })
        }
    }
}

/// Labelled connected components of the support.
#[derive(Debug, Clone)]
pub struct SupportComponents {
    pub labels: Vec<u32>,
    /// `sum |psi|^2` of each component (in grid units, not normalized).
    pub weights: Vec<f64>,
}

impl SupportComponents {
    /// Flood-fills the points with `amp >= rel_threshold * max(amp)`.
    ///
    /// With `bridge_coincidence`, coincidence points count as support even
    /// where the amplitude vanishes; a grid stand-in for the fact that for
    /// `D >= 2` the particles can pass around each other.
    pub fn compute(
        grid: &GridSpec,
        frame: Frame,
        amp: &[f64],
        rel_threshold: f64,
        bridge_coincidence: bool,
    ) -> Self {
        let max = amp.iter().cloned().fold(0.0, f64::max);
        let cut = rel_threshold * max;
        let inside: Vec<bool> = (0..amp.len())
            .map(|k| amp[k] >= cut && amp[k] > 0.0 || bridge_coincidence && is_coincident(grid, frame, k))
            .collect();
        let mut labels = vec![OUTSIDE; amp.len()];
        let mut weights = Vec::new();
        let mut stack = Vec::new();
        for seed in 0..amp.len() {
            if !inside[seed] || labels[seed] != OUTSIDE {
                continue;
            }
            let label = weights.len() as u32;
            let mut w = 0.0;
            labels[seed] = label;
            stack.push(seed);
            while let Some(k) = stack.pop() {
                w += amp[k] * amp[k];
                let idx = grid.multi_index(k);
                for axis in 0..grid.n_axes() {
                    for o in [-1isize, 1] {
                        // the periodic seam is a numerical artifact, not a path
                        if o < 0 && idx[axis] == 0 || o > 0 && idx[axis] + 1 == grid.points[axis] {
                            continue;
                        }
                        let nb = grid.neighbor(k, axis, o);
                        if inside[nb] && labels[nb] == OUTSIDE {
                            labels[nb] = label;
                            stack.push(nb);
                        }
                    }
                }
            }
            weights.push(w);
        }
        SupportComponents { labels, weights }
    }

    pub fn count(&self) -> usize {
        self.weights.len()
    }

    /// Components carrying at least `min_fraction` of the total weight.
    pub fn significant(&self, min_fraction: f64) -> Vec<u32> {
        let total: f64 = self.weights.iter().sum();
        (0..self.count() as u32)
            .filter(|&c| self.weights[c as usize] >= min_fraction * total)
            .collect()
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.labels[a] != OUTSIDE && self.labels[a] == self.labels[b]
    }

    /// True if exchanging `i` and `j` maps some significant component onto a
    /// different one: the support is disconnected across the exchange orbit.
    pub fn split_by_exchange(&self, grid: &GridSpec, frame: Frame, i: usize, j: usize, min_fraction: f64) -> bool {
        let sig = self.significant(min_fraction);
        let mut seen = vec![false; self.count()];
        for k in 0..self.labels.len() {
            let l = self.labels[k];
            if l == OUTSIDE || seen[l as usize] || !sig.contains(&l) {
                continue;
            }
            seen[l as usize] = true;
            let p = exchanged_index(grid, frame, k, i, j);
            if self.labels[p] != l {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blobs_are_two_components() {
        let g = GridSpec::uniform(2, 1, 16, 4.0).unwrap();
        let amp: Vec<f64> = (0..g.len())
            .map(|k| {
                let x = g.point(k);
                let a = (-((x[0] + 2.0).powi(2) + (x[1] - 2.0).powi(2)) * 4.0).exp();
                let b = (-((x[0] - 2.0).powi(2) + (x[1] + 2.0).powi(2)) * 4.0).exp();
                a + b
            })
            .collect();
        let s = SupportComponents::compute(&g, Frame::Absolute, &amp, 1e-3, true);
        assert_eq!(s.significant(1e-6).len(), 2);
        assert!(s.split_by_exchange(&g, Frame::Absolute, 0, 1, 1e-6));
    }

    #[test]
    fn bridging_joins_triangles() {
        let g = GridSpec::uniform(2, 1, 16, 4.0).unwrap();
        let amp: Vec<f64> = (0..g.len())
            .map(|k| {
                let x = g.point(k);
                ((x[0] - x[1]) * (-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp()).abs()
            })
            .collect();
        let open = SupportComponents::compute(&g, Frame::Absolute, &amp, 1e-3, false);
        let bridged = SupportComponents::compute(&g, Frame::Absolute, &amp, 1e-3, true);
        assert!(open.split_by_exchange(&g, Frame::Absolute, 0, 1, 1e-6));
        assert!(!bridged.split_by_exchange(&g, Frame::Absolute, 0, 1, 1e-6));
    }
}
