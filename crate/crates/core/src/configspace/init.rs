//! Closed-form initial states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{BranchCut, Field, Frame};
use super::grid::GridSpec;
use super::perm::permutations;
use crate::error::{Error, Result};

/// A single-particle orbital in `D` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Orbital {
    /// `prod_d exp(-(x_d - c_d)^2 / (4 sigma^2) + i k_d x_d)`; `|g|^2` has
    /// standard deviation `sigma` per axis.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// Normalized harmonic-oscillator eigenfunction (unit mass and hbar)
    /// with quantum number `levels[d]` on axis `d`.
    Hermite {
        levels: Vec<usize>,
        #[serde(default = "one")]
        omega: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    /// Standing-wave mode of a box, exactly zero outside `[lo, hi]`.
    BoxMode {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        mode: Vec<usize>,
        #[serde(default)]
        momentum: Vec<f64>,
    },
    PlaneWave { momentum: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

fn component(v: &[f64], d: usize) -> f64 {
    v.get(d).copied().unwrap_or(0.0)
}

/// Normalized 1D oscillator eigenfunction by the stable three-term recurrence.
pub fn hermite_function(n: usize, omega: f64, x: f64) -> f64 {
    let xi = omega.sqrt() * x;
    let mut prev = 0.0;
    let mut cur = (omega / std::f64::consts::PI).powf(0.25) * (-0.5 * xi * xi).exp();
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * xi * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl Orbital {
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut amp = 1.0;
        let mut phase = 0.0;
        match self {
            Orbital::Gaussian { center, sigma, momentum } => {
                for (d, &xd) in x.iter().enumerate() {
                    let u = xd - component(center, d);
                    amp *= (-u * u / (4.0 * sigma * sigma)).exp();
                    phase += component(momentum, d) * xd;
                }
            }
            Orbital::Hermite { levels, omega, center, momentum } => {
                for (d, &xd) in x.iter().enumerate() {
                    let n = levels.get(d).copied().unwrap_or(0);
                    amp *= hermite_function(n, *omega, xd - component(center, d));
                    phase += component(momentum, d) * xd;
                }
            }
            Orbital::BoxMode { lo, hi, mode, momentum } => {
                for (d, &xd) in x.iter().enumerate() {
                    let (a, b) = (lo[d], hi[d]);
                    if xd <= a || xd >= b {
                        return Complex64::new(0.0, 0.0);
                    }
                    let m = mode.get(d).copied().unwrap_or(1).max(1) as f64;
                    let w = b - a;
                    amp *= (2.0 / w).sqrt() * (m * std::f64::consts::PI * (xd - a) / w).sin();
                    phase += component(momentum, d) * xd;
                }
            }
            Orbital::PlaneWave { momentum } => {
                phase = x.iter().enumerate().map(|(d, &xd)| component(momentum, d) * xd).sum();
            }
        }
        Complex64::from_polar(amp, phase)
    }

    fn check_support(&self, grid: &GridSpec, particle: usize) -> Result<()> {
        let inside = |d: usize, v: f64| {
            let l = grid.extent[grid.axis(particle, d)];
            v >= -l && v <= l
        };
        let bad = match self {
            Orbital::Gaussian { center, sigma, .. } => {
                !(*sigma > 0.0) || (0..grid.dim).any(|d| !inside(d, component(center, d)))
            }
            Orbital::Hermite { omega, center, .. } => {
                !(*omega > 0.0) || (0..grid.dim).any(|d| !inside(d, component(center, d)))
            }
            Orbital::BoxMode { lo, hi, .. } => {
                lo.len() < grid.dim
                    || hi.len() < grid.dim
                    || (0..grid.dim).any(|d| !(lo[d] < hi[d]) || !inside(d, lo[d]) || !inside(d, hi[d]))
            }
            Orbital::PlaneWave { .. } => false,
        };
        if bad {
            Err(Error::SupportOutsideExtent(format!("{self:?} for particle {particle}")))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub state: Initializer,
}

/// Analytic-state descriptor accepted by [`build_field`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initializer {
    /// `prod_k orbitals[k](x_k)`.
    Product { orbitals: Vec<Orbital> },
    /// `sum_P sign(P)^s prod_k orbitals[P(k)](x_k)` (permanent or Slater).
    Symmetrized { orbitals: Vec<Orbital>, symmetry: Symmetry },
    /// Two particles in disjoint boxes:
    /// `first(x1) second(x2) + alpha e^{i beta} second(x1) first(x2)`.
    DisjointBox { first: Orbital, second: Orbital, alpha: f64, beta: f64 },
    /// Relative-coordinate anyon state `r exp(-(r-radius)^2/(2 width^2)) e^{i nu theta}`
    /// on a single 2D coordinate block, with a branch cut along `theta = pi`.
    Anyon { nu: f64, radius: f64, width: f64 },
    Superposition { terms: Vec<Term> },
}

impl Initializer {
    fn check(&self, grid: &GridSpec) -> Result<()> {
        let n = grid.n_particles;
        let count = |orbs: &[Orbital]| -> Result<()> {
            if orbs.len() != n {
                return Err(Error::Incompatible(format!(
                    "{} orbitals for {n} particles",
                    orbs.len()
                )));
            }
            orbs.iter().enumerate().try_for_each(|(p, o)| o.check_support(grid, p))
        };
        match self {
            Initializer::Product { orbitals } | Initializer::Symmetrized { orbitals, .. } => {
                count(orbitals)
            }
            Initializer::DisjointBox { first, second, .. } => {
                if n != 2 {
                    return Err(Error::Incompatible("disjoint-box state needs 2 particles".into()));
                }
                count(&[first.clone(), second.clone()])
            }
            Initializer::Anyon { radius, width, .. } => {
                if n != 1 || grid.dim != 2 {
                    return Err(Error::Incompatible(
                        "anyon state lives on a single 2D relative-coordinate block".into(),
                    ));
                }
                let reach = radius + 4.0 * width;
                if grid.extent.iter().any(|&l| reach > l) {
                    return Err(Error::SupportOutsideExtent(format!(
                        "anyon ring reaches {reach}"
                    )));
                }
                Ok(())
            }
            Initializer::Superposition { terms } => {
                if terms.is_empty() {
                    return Err(Error::Unnormalizable);
                }
                terms.iter().try_for_each(|t| t.state.check(grid))
            }
        }
    }

    /// Unnormalized amplitude at configuration `x`.
    pub fn eval(&self, grid: &GridSpec, x: &[f64]) -> Complex64 {
        let d = grid.dim;
        let block = |k: usize| &x[k * d..(k + 1) * d];
        match self {
            Initializer::Product { orbitals } => {
                orbitals.iter().enumerate().map(|(k, o)| o.eval(block(k))).product()
            }
            Initializer::Symmetrized { orbitals, symmetry } => permutations(orbitals.len())
                .into_iter()
                .map(|(p, s)| {
                    let term: Complex64 =
                        p.iter().enumerate().map(|(k, &pk)| orbitals[pk].eval(block(k))).product();
                    match symmetry {
                        Symmetry::Symmetric => term,
                        Symmetry::Antisymmetric => term * f64::from(s),
                    }
                })
                .sum(),
            Initializer::DisjointBox { first, second, alpha, beta } => {
                first.eval(block(0)) * second.eval(block(1))
                    + Complex64::from_polar(*alpha, *beta) * second.eval(block(0)) * first.eval(block(1))
            }
            Initializer::Anyon { nu, radius, width } => {
                let r = x[0].hypot(x[1]);
                let theta = x[1].atan2(x[0]);
                let amp = r * (-(r - radius).powi(2) / (2.0 * width * width)).exp();
                Complex64::from_polar(amp, nu * theta)
            }
            Initializer::Superposition { terms } => terms
                .iter()
                .map(|t| Complex64::new(t.re, t.im) * t.state.eval(grid, x))
                .sum(),
        }
    }
}

/// Samples an analytic state on `grid` and normalizes it.
pub fn build_field(grid: &GridSpec, init: &Initializer) -> Result<Field> {
    grid.validate()?;
    init.check(grid)?;
    let field = Field::from_fn(grid.clone(), |x| init.eval(grid, x))?;
    match init {
        Initializer::Anyon { nu, .. } => Ok(field.with_frame(Frame::Relative)?.with_branch_cut(Some(
            BranchCut { axes: (0, 1), center: (0.0, 0.0), jump: 2.0 * std::f64::consts::PI * nu },
        ))),
        _ => Ok(field),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(c: f64) -> Orbital {
        Orbital::Gaussian { center: vec![c], sigma: 1.0, momentum: vec![] }
    }

    fn herm(n: usize) -> Orbital {
        Orbital::Hermite { levels: vec![n], omega: 1.0, center: vec![], momentum: vec![] }
    }

    #[test]
    fn gaussian_product_normalized() {
        let g = GridSpec::uniform(2, 1, 256, 10.0).unwrap();
        let f = build_field(&g, &Initializer::Product { orbitals: vec![gauss(0.0), gauss(0.0)] })
            .unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.01;
        for (m, n) in [(0, 0), (1, 1), (3, 3), (0, 2), (1, 4)] {
            let s: f64 = (-1200..1200)
                .map(|k| {
                    let x = k as f64 * h;
                    hermite_function(m, 1.0, x) * hermite_function(n, 1.0, x) * h
                })
                .sum();
            let want = if m == n { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-10, "<{m}|{n}> = {s}");
        }
    }

    #[test]
    fn antisymmetrized_state_is_odd() {
        let g = GridSpec::uniform(2, 1, 64, 6.0).unwrap();
        let f = build_field(
            &g,
            &Initializer::Symmetrized { orbitals: vec![herm(0), herm(1)], symmetry: Symmetry::Antisymmetric },
        )
        .unwrap();
        let n = 64;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = f.values()[i * n + j];
                let b = f.values()[j * n + i];
                worst = worst.max((a + b).norm());
            }
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn disjoint_box_lobes_do_not_overlap() {
        let g = GridSpec::uniform(2, 1, 128, 5.0).unwrap();
        let first = Orbital::BoxMode { lo: vec![-4.0], hi: vec![-1.0], mode: vec![], momentum: vec![] };
        let second = Orbital::BoxMode { lo: vec![1.0], hi: vec![4.0], mode: vec![], momentum: vec![] };
        let overlap: f64 = (0..g.len())
            .map(|k| {
                let x = g.point(k);
                let a = first.eval(&x[..1]) * second.eval(&x[1..]);
                let b = second.eval(&x[..1]) * first.eval(&x[1..]);
                a.norm() * b.norm()
            })
            .sum::<f64>()
            * g.cell_volume();
        assert!(overlap < 1e-12);
    }

    #[test]
    fn support_outside_extent_rejected() {
        let g = GridSpec::uniform(1, 1, 32, 2.0).unwrap();
        let err = build_field(&g, &Initializer::Product { orbitals: vec![gauss(5.0)] }).unwrap_err();
        assert!(matches!(err, Error::SupportOutsideExtent(_)));
    }

    #[test]
    fn all_zero_rejected() {
        let g = GridSpec::uniform(1, 1, 32, 2.0).unwrap();
        let init = Initializer::Superposition {
            terms: vec![
                Term { re: 1.0, im: 0.0, state: Initializer::Product { orbitals: vec![gauss(0.0)] } },
                Term { re: -1.0, im: 0.0, state: Initializer::Product { orbitals: vec![gauss(0.0)] } },
            ],
        };
        assert_eq!(build_field(&g, &init).unwrap_err(), Error::Unnormalizable);
    }
}
