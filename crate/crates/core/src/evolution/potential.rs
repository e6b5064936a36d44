//! Potentials on configuration space.

use serde::{Deserialize, Serialize};

use crate::configspace::exchange::exchanged_index;
use crate::configspace::field::Frame;
use crate::configspace::grid::{GridSpec, WALL_HEIGHT};
use crate::error::{Error, Result};

fn wall_height() -> f64 {
    WALL_HEIGHT
}

/// An axis-aligned single-particle region `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(d, &v)| v > self.lo[d] && v < self.hi[d])
    }

    /// Smallest region containing both.
    pub fn hull(&self, other: &Region) -> Region {
        Region {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    pub fn disjoint(&self, other: &Region) -> bool {
        (0..self.lo.len()).any(|d| self.hi[d] <= other.lo[d] || other.hi[d] <= self.lo[d])
    }
}

/// One-dimensional profile `u(xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `sum_k c_k xi^k`
    Polynomial { coeffs: Vec<f64> },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Cosine { amplitude: f64, wavenumber: f64, #[serde(default)] phase: f64 },
}

impl Profile {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * xi + c),
            Profile::Gaussian { amplitude, center, width } => {
                amplitude * (-(xi - center).powi(2) / (2.0 * width * width)).exp()
            }
            Profile::Cosine { amplitude, wavenumber, phase } => amplitude * (wavenumber * xi + phase).cos(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    /// `sum_i sum_d stiffness/2 (x_i^d - center_d)^2`
    Harmonic {
        stiffness: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// `barrier ((xi^2 - a^2)/a^2)^2` per coordinate with `a = separation/2`.
    DoubleWell { separation: f64, barrier: f64 },
    /// `height` wherever a particle is outside every box.
    BoxWalls {
        boxes: Vec<Region>,
        #[serde(default = "wall_height")]
        height: f64,
    },
    /// `U = sum_i sum_d u^d(x_i^d)`, the same profiles for every particle.
    Separable { profiles: Vec<Profile> },
    /// `sum_{i<j} strength exp(-|x_i - x_j|^2 / (2 range^2))`
    PairGaussian { strength: f64, range: f64 },
    Sum { terms: Vec<PotentialSpec> },
    /// `amplitude * inner` for `t0 <= t < t1`, zero otherwise.
    Pulse {
        t0: f64,
        t1: f64,
        amplitude: f64,
        inner: Box<PotentialSpec>,
    },
}

impl PotentialSpec {
    /// Value at configuration `x` and time `t`.
    pub fn value(&self, grid: &GridSpec, x: &[f64], t: f64) -> f64 {
        self.eval(grid, x, &|t0, t1| t0 <= t && t < t1)
    }

    fn eval(&self, grid: &GridSpec, x: &[f64], on: &dyn Fn(f64, f64) -> bool) -> f64 {
        let (n, dim) = (grid.n_particles, grid.dim);
        let particle = |i: usize| &x[i * dim..(i + 1) * dim];
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Harmonic { stiffness, center } => {
                let c = |d: usize| center.get(d).copied().unwrap_or(0.0);
                x.iter().enumerate().map(|(a, &v)| 0.5 * stiffness * (v - c(a % dim)).powi(2)).sum()
            }
            PotentialSpec::DoubleWell { separation, barrier } => {
                let a2 = (separation / 2.0).powi(2);
                x.iter().map(|&v| barrier * ((v * v - a2) / a2).powi(2)).sum()
            }
            PotentialSpec::BoxWalls { boxes, height } => {
                let outside = (0..n).filter(|&i| !boxes.iter().any(|b| b.contains(particle(i)))).count();
                outside as f64 * height
            }
            PotentialSpec::Separable { profiles } => x
                .iter()
                .enumerate()
                .map(|(a, &v)| profiles.get(a % dim).map_or(0.0, |p| p.eval(v)))
                .sum(),
            PotentialSpec::PairGaussian { strength, range } => {
                let mut s = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        let r2: f64 = particle(i).iter().zip(particle(j)).map(|(a, b)| (a - b).powi(2)).sum();
                        s += strength * (-r2 / (2.0 * range * range)).exp();
                    }
                }
                s
            }
            PotentialSpec::Sum { terms } => terms.iter().map(|p| p.eval(grid, x, on)).sum(),
            PotentialSpec::Pulse { t0, t1, amplitude, inner } => {
                if on(*t0, *t1) {
                    amplitude * inner.eval(grid, x, on)
                } else {
                    0.0
                }
            }
        }
    }

    /// Samples on every grid point at time `t`.
    pub fn sample(&self, grid: &GridSpec, t: f64) -> Vec<f64> {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(|k| self.value(grid, &grid.point(k), t)).collect()
    }

    /// Which pulses are on at `t`, in depth-first order. Two times with the
    /// same key give identical potentials.
    pub fn pulse_key(&self, t: f64) -> Vec<bool> {
        let mut key = Vec::new();
        self.collect_pulses(t, &mut key);
        key
    }

    fn collect_pulses(&self, t: f64, key: &mut Vec<bool>) {
        match self {
            PotentialSpec::Sum { terms } => terms.iter().for_each(|p| p.collect_pulses(t, key)),
            PotentialSpec::Pulse { t0, t1, inner, .. } => {
                key.push(*t0 <= t && t < *t1);
                inner.collect_pulses(t, key);
            }
            _ => {}
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        !self.pulse_key(0.0).is_empty()
    }

    /// Largest `|V(x) - V(P_ij x)|` over the grid and all particle pairs,
    /// with every pulse switched on and with every pulse off, relative to
    /// `max(1, max |V|)` so that rounding in wall terms does not count.
    pub fn max_asymmetry(&self, grid: &GridSpec) -> f64 {
        use rayon::prelude::*;
        let mut worst = 0.0f64;
        for all_on in [false, true] {
            let on = move |_: f64, _: f64| all_on;
            let v: Vec<f64> =
                (0..grid.len()).into_par_iter().map(|k| self.eval(grid, &grid.point(k), &on)).collect();
            for i in 0..grid.n_particles {
                for j in i + 1..grid.n_particles {
                    if !grid.particle_axes_match(i, j) {
                        continue;
                    }
                    let d = (0..grid.len())
                        .into_par_iter()
                        .map(|k| (v[k] - v[exchanged_index(grid, Frame::Absolute, k, i, j)]).abs())
                        .reduce(|| 0.0, f64::max);
                    let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                    worst = worst.max(d / scale);
                }
            }
        }
        worst
    }

    /// Rejects potentials that distinguish identical particles.
    pub fn check_symmetric(&self, grid: &GridSpec) -> Result<()> {
        let a = self.max_asymmetry(grid);
        if a >= 1e-12 {
            return Err(Error::AsymmetricPotential(a));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        let g = GridSpec::uniform(2, 1, 8, 2.0).unwrap();
        let v = PotentialSpec::Harmonic { stiffness: 2.0, center: vec![] };
        assert_eq!(v.value(&g, &[1.0, -0.5], 0.0), 1.25);
    }

    #[test]
    fn separable_matches_sum_of_profiles() {
        let g = GridSpec::uniform(2, 2, 8, 2.0).unwrap();
        let u0 = Profile::Polynomial { coeffs: vec![0.0, 1.0, 0.5] };
        let u1 = Profile::Cosine { amplitude: 0.3, wavenumber: 2.0, phase: 0.1 };
        let v = PotentialSpec::Separable { profiles: vec![u0.clone(), u1.clone()] };
        let x = [0.3, -0.7, 1.1, 0.2];
        let want = u0.eval(0.3) + u1.eval(-0.7) + u0.eval(1.1) + u1.eval(0.2);
        assert!((v.value(&g, &x, 0.0) - want).abs() < 1e-15);
    }

    #[test]
    fn library_is_exchange_symmetric() {
        let g = GridSpec::uniform(3, 1, 12, 3.0).unwrap();
        let lib = PotentialSpec::Sum {
            terms: vec![
                PotentialSpec::Harmonic { stiffness: 1.0, center: vec![0.2] },
                PotentialSpec::DoubleWell { separation: 2.0, barrier: 0.5 },
                PotentialSpec::PairGaussian { strength: 1.0, range: 0.5 },
                PotentialSpec::Pulse {
                    t0: 0.0,
                    t1: 0.1,
                    amplitude: 2.0,
                    inner: Box::new(PotentialSpec::Separable {
                        profiles: vec![Profile::Gaussian { amplitude: 1.0, center: 0.5, width: 0.3 }],
                    }),
                },
            ],
        };
        lib.check_symmetric(&g).unwrap();
    }

    #[test]
    fn pulse_window() {
        let g = GridSpec::uniform(1, 1, 8, 2.0).unwrap();
        let p = PotentialSpec::Pulse { t0: 1.0, t1: 2.0, amplitude: 3.0, inner: Box::new(PotentialSpec::Harmonic { stiffness: 2.0, center: vec![] }) };
        assert_eq!(p.value(&g, &[1.0], 0.5), 0.0);
        assert_eq!(p.value(&g, &[1.0], 1.0), 3.0);
        assert_eq!(p.value(&g, &[1.0], 2.0), 0.0);
        assert_eq!(p.pulse_key(1.5), vec![true]);
        assert!(p.is_time_dependent());
    }

    #[test]
    fn walls_count_escaped_particles() {
        let g = GridSpec::uniform(2, 1, 8, 4.0).unwrap();
        let v = PotentialSpec::BoxWalls {
            boxes: vec![Region { lo: vec![-3.0], hi: vec![-1.0] }, Region { lo: vec![1.0], hi: vec![3.0] }],
            height: WALL_HEIGHT,
        };
        assert_eq!(v.value(&g, &[-2.0, 2.0], 0.0), 0.0);
        assert_eq!(v.value(&g, &[0.0, 2.0], 0.0), WALL_HEIGHT);
        assert_eq!(v.value(&g, &[0.0, 0.0], 0.0), 2.0 * WALL_HEIGHT);
    }
}
