//! Drawing configurations from `|psi|^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::configspace::grid::GridSpec;
use crate::configspace::local::Guiding;
use crate::error::{Error, Result};

/// Folds `x` back into the periodic box `[-L, L)`.
fn fold(grid: &GridSpec, a: usize, x: f64) -> f64 {
    let l = grid.extent[a];
    if x < -l || x >= l {
        (x + l).rem_euclid(2.0 * l) - l
    } else {
        x
    }
}

/// `count` configurations from the discrete `|psi|^2` cell distribution (alias
/// method), each jittered uniformly within its cell.
pub fn sample_density<G: Guiding + ?Sized>(g: &G, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let grid = g.grid();
    let w = g.density_vec();
    if !w.iter().any(|&p| p > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let alias = WeightedAliasIndex::new(w).map_err(|_| Error::DegenerateDensity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_axes();
    Ok((0..count)
        .map(|_| {
            let k = alias.sample(&mut rng);
            let mut x = grid.point(k);
            for (a, v) in x.iter_mut().enumerate().take(n) {
                let u: f64 = rng.random();
                *v = fold(grid, a, *v + grid.spacing(a) * (u - 0.5));
            }
            x
        })
        .collect())
}

/// `count` configurations uniform over the grid box; the negative control
/// for equilibrium tests.
pub fn sample_uniform(grid: &GridSpec, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..grid.n_axes())
                .map(|a| {
                    let l = grid.extent[a];
                    rng.random_range(-l..l)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::field::Field;
    use crate::configspace::init::hermite_function;
    use num_complex::Complex64;

    #[test]
    fn ground_state_variance() {
        let g = GridSpec::uniform(1, 1, 256, 8.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(hermite_function(0, 1.0, x[0]), 0.0)).unwrap();
        let s = sample_density(&f, 100_000, 7).unwrap();
        let m = s.iter().map(|x| x[0]).sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|x| (x[0] - m).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
        assert!((var - 0.5).abs() < 0.01, "{var}");
        assert_eq!(s, sample_density(&f, 100_000, 7).unwrap());
    }

    #[test]
    fn zero_density_is_refused() {
        let g = GridSpec::uniform(1, 1, 16, 1.0).unwrap();
        let f = Field::from_raw(g, vec![Complex64::new(0.0, 0.0); 16], 0.0).unwrap();
        assert_eq!(sample_density(&f, 10, 1), Err(Error::DegenerateDensity));
    }
}
