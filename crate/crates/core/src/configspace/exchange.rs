use rayon::prelude::*;

use super::field::{Field, Frame, SpinorField};
use super::grid::GridSpec;
use crate::error::{Error, Result};

pub(crate) fn check_pair(grid: &GridSpec, frame: Frame, i: usize, j: usize) -> Result<()> {
    let n = match frame {
        Frame::Absolute => grid.n_particles,
        Frame::Relative => 2,
    };
    if i >= n {
        return Err(Error::ParticleOutOfRange(i));
    }
    if j >= n {
        return Err(Error::ParticleOutOfRange(j));
    }
    if i == j {
        return Err(Error::Incompatible("exchange needs two distinct particles".into()));
    }
    if frame == Frame::Absolute && !grid.particle_axes_match(i, j) {
        return Err(Error::MismatchedAxes { i, j });
    }
    Ok(())
}

/// Flat index of the grid point obtained by exchanging particles `i` and `j`.
///
/// In the relative frame the exchange is the inversion `r -> -r`.
pub fn exchanged_index(grid: &GridSpec, frame: Frame, flat: usize, i: usize, j: usize) -> usize {
    let mut idx = grid.multi_index(flat);
    match frame {
        Frame::Absolute => {
            for d in 0..grid.dim {
                idx.swap(grid.axis(i, d), grid.axis(j, d));
            }
        }
        Frame::Relative => {
            for (a, k) in idx.iter_mut().enumerate() {
                let n = grid.points[a];
                *k = (n - *k) % n;
            }
        }
    }
    grid.flat_index(&idx)
}

/// Exchanged configuration point (coordinates, not indices).
pub fn exchange_point(grid: &GridSpec, frame: Frame, x: &[f64], i: usize, j: usize) -> Vec<f64> {
    let mut y = x.to_vec();
    match frame {
        Frame::Absolute => {
            for d in 0..grid.dim {
                y.swap(grid.axis(i, d), grid.axis(j, d));
            }
        }
        Frame::Relative => y.iter_mut().for_each(|v| *v = -*v),
    }
    y
}

/// Permutation table `k -> P_ij k` over all grid points.
pub fn exchange_table(grid: &GridSpec, frame: Frame, i: usize, j: usize) -> Vec<usize> {
    (0..grid.len()).into_par_iter().map(|k| exchanged_index(grid, frame, k, i, j)).collect()
}

/// The field with the coordinate blocks of particles `i` and `j` transposed.
pub fn exchange(field: &Field, i: usize, j: usize) -> Result<Field> {
    check_pair(field.grid(), field.frame(), i, j)?;
    let table = exchange_table(field.grid(), field.frame(), i, j);
    let v = field.values();
    let values = table.par_iter().map(|&p| v[p]).collect();
    Ok(Field::from_raw(field.grid().clone(), values, field.time())?.with_meta_of(field))
}

fn swap_bits(slot: usize, n: usize, i: usize, j: usize) -> usize {
    let (bi, bj) = (n - 1 - i, n - 1 - j);
    let (vi, vj) = (slot >> bi & 1, slot >> bj & 1);
    if vi == vj {
        slot
    } else {
        slot ^ (1 << bi) ^ (1 << bj)
    }
}

/// Simultaneous exchange of spatial and spin indices of particles `i`, `j`.
pub fn exchange_spinor(spinor: &SpinorField, i: usize, j: usize) -> Result<SpinorField> {
    let grid = spinor.grid();
    check_pair(grid, Frame::Absolute, i, j)?;
    let n = grid.n_particles;
    let table = exchange_table(grid, Frame::Absolute, i, j);
    let comps = (0..spinor.n_components())
        .map(|s| {
            let src = &spinor.components()[swap_bits(s, n, i, j)];
            table.par_iter().map(|&p| src[p]).collect()
        })
        .collect();
    Ok(SpinorField::from_raw(grid.clone(), comps, spinor.time())?.with_meta_of(spinor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::field::{spin_slot, Spin};
    use crate::configspace::init::{build_field, Initializer, Orbital, Symmetry};
    use num_complex::Complex64;

    fn herm(n: usize) -> Orbital {
        Orbital::Hermite { levels: vec![n], omega: 1.0, center: vec![], momentum: vec![] }
    }

    #[test]
    fn symmetric_product_is_fixed() {
        let g = GridSpec::uniform(2, 1, 32, 5.0).unwrap();
        let f = build_field(&g, &Initializer::Product { orbitals: vec![herm(0), herm(0)] }).unwrap();
        let e = exchange(&f, 0, 1).unwrap();
        assert_eq!(e.values(), f.values());
    }

    #[test]
    fn antisymmetric_field_negates() {
        let g = GridSpec::uniform(2, 1, 32, 5.0).unwrap();
        let f = build_field(
            &g,
            &Initializer::Symmetrized { orbitals: vec![herm(0), herm(2)], symmetry: Symmetry::Antisymmetric },
        )
        .unwrap();
        let e = exchange(&f, 0, 1).unwrap();
        for (a, b) in e.values().iter().zip(f.values()) {
            assert!((a + b).norm() < 1e-14);
        }
    }

    #[test]
    fn involution_and_norm() {
        let g = GridSpec::uniform(3, 1, 8, 2.0).unwrap();
        let vals: Vec<Complex64> =
            (0..g.len()).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let f = Field::new(g, vals).unwrap();
        let twice = exchange(&exchange(&f, 0, 2).unwrap(), 0, 2).unwrap();
        assert_eq!(twice.values(), f.values());
        assert!((exchange(&f, 1, 2).unwrap().norm_sqr() - f.norm_sqr()).abs() < 1e-14 * f.norm_sqr());
    }

    #[test]
    fn rejects_bad_pairs() {
        let g = GridSpec::new(2, 1, vec![8, 16], vec![1.0, 1.0], Default::default()).unwrap();
        let f = Field::new(g, vec![Complex64::new(1.0, 0.0); 128]).unwrap();
        assert_eq!(exchange(&f, 0, 1).unwrap_err(), Error::MismatchedAxes { i: 0, j: 1 });
        assert!(exchange(&f, 0, 0).is_err());
        assert!(exchange(&f, 0, 2).is_err());
    }

    #[test]
    fn spinor_exchange_moves_spin_labels() {
        let g = GridSpec::uniform(2, 1, 8, 2.0).unwrap();
        let mut comps = vec![vec![Complex64::new(0.0, 0.0); g.len()]; 4];
        let pm = spin_slot(&[Spin::Up, Spin::Down]);
        let mp = spin_slot(&[Spin::Down, Spin::Up]);
        for k in 0..g.len() {
            comps[pm][k] = Complex64::new(k as f64 + 1.0, 0.0);
        }
        let s = SpinorField::new(g.clone(), comps).unwrap();
        let e = exchange_spinor(&s, 0, 1).unwrap();
        assert!(e.components()[pm].iter().all(|z| z.norm() == 0.0));
        for k in 0..g.len() {
            let p = exchanged_index(&g, Frame::Absolute, k, 0, 1);
            assert_eq!(e.components()[mp][k], s.components()[pm][p]);
        }
    }

    #[test]
    fn relative_frame_inverts() {
        let g = GridSpec::uniform(1, 2, 8, 1.0).unwrap();
        let k = g.flat_index(&[2, 5]);
        assert_eq!(g.multi_index(exchanged_index(&g, Frame::Relative, k, 0, 1)), vec![6, 3]);
        assert_eq!(exchanged_index(&g, Frame::Relative, 0, 0, 1), 0);
    }
}
