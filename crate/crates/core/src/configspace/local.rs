//! Local phase/amplitude primitives: finite-difference currents and
//! interpolated current and osmotic velocities.

use num_complex::Complex64;

use super::field::{Field, Frame, ParticleSpec, SpinorField};
use super::grid::GridSpec;
use crate::error::{Error, Result};

/// Fourth-order central first derivative of `f` along `axis` at `flat`.
pub fn d1<T>(grid: &GridSpec, f: &[T], flat: usize, axis: usize) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let h = grid.spacing(axis);
    let at = |o: isize| f[grid.neighbor(flat, axis, o)];
    (at(-2) - at(2)) * (1.0 / (12.0 * h)) + (at(1) - at(-1)) * (8.0 / (12.0 * h))
}

/// Fourth-order central second derivative along `axis`.
pub fn d2(grid: &GridSpec, f: &[f64], flat: usize, axis: usize) -> f64 {
    let h = grid.spacing(axis);
    let at = |o: isize| f[grid.neighbor(flat, axis, o)];
    (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h)
}

/// Anything that guides particles: a scalar field or a spinor whose
/// guidance sums over spin components.
pub trait Guiding: Sync {
    fn grid(&self) -> &GridSpec;
    fn particles(&self) -> &[ParticleSpec];
    fn hbar(&self) -> f64;
    fn frame(&self) -> Frame {
        Frame::Absolute
    }
    fn time(&self) -> f64;
    /// `sum_s |psi_s|^2` at a grid point.
    fn density(&self, flat: usize) -> f64;
    /// `sum_s conj(psi_s) d_a psi_s` at a grid point.
    fn current(&self, flat: usize, axis: usize) -> Complex64;
    fn is_node(&self, flat: usize, eps: f64) -> bool;
    /// All densities on the grid.
    fn density_vec(&self) -> Vec<f64> {
        (0..self.grid().len()).map(|k| self.density(k)).collect()
    }
}

impl Guiding for Field {
    fn grid(&self) -> &GridSpec {
        Field::grid(self)
    }
    fn particles(&self) -> &[ParticleSpec] {
        Field::particles(self)
    }
    fn hbar(&self) -> f64 {
        Field::hbar(self)
    }
    fn frame(&self) -> Frame {
        Field::frame(self)
    }
    fn time(&self) -> f64 {
        Field::time(self)
    }
    fn density(&self, flat: usize) -> f64 {
        self.values()[flat].norm_sqr()
    }
    fn current(&self, flat: usize, axis: usize) -> Complex64 {
        let v = self.values();
        let g = Field::grid(self);
        match self.branch_cut() {
            None => v[flat].conj() * d1(g, v, flat, axis),
            Some(cut) => {
                // continue the neighbors onto the sheet of `flat`
                let x0 = g.point(flat);
                let h = g.spacing(axis);
                let at = |o: isize| {
                    let nb = g.neighbor(flat, axis, o);
                    v[nb] * Complex64::from_polar(1.0, cut.crossing_correction(&x0, &g.point(nb)))
                };
                v[flat].conj() * ((at(-2) - at(2)) * (1.0 / (12.0 * h)) + (at(1) - at(-1)) * (8.0 / (12.0 * h)))
            }
        }
    }
    fn is_node(&self, flat: usize, eps: f64) -> bool {
        Field::is_node(self, flat, eps)
    }
}

impl Guiding for SpinorField {
    fn grid(&self) -> &GridSpec {
        SpinorField::grid(self)
    }
    fn particles(&self) -> &[ParticleSpec] {
        SpinorField::particles(self)
    }
    fn hbar(&self) -> f64 {
        SpinorField::hbar(self)
    }
    fn time(&self) -> f64 {
        SpinorField::time(self)
    }
    fn density(&self, flat: usize) -> f64 {
        self.density_at(flat)
    }
    fn current(&self, flat: usize, axis: usize) -> Complex64 {
        self.components()
            .iter()
            .map(|c| c[flat].conj() * d1(SpinorField::grid(self), c, flat, axis))
            .sum()
    }
    fn is_node(&self, flat: usize, eps: f64) -> bool {
        SpinorField::is_node(self, flat, eps)
    }
}

/// Current and osmotic velocity components (all axes) at a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalVelocity {
    pub current: Vec<f64>,
    pub osmotic: Vec<f64>,
}

/// On-grid velocities `(hbar/m) Im(J)/rho` and `(hbar/m) Re(J)/rho`.
pub fn grid_velocity<G: Guiding + ?Sized>(g: &G, flat: usize, eps: f64) -> Result<LocalVelocity> {
    if g.is_node(flat, eps) {
        return Err(Error::NodeProximity { index: flat });
    }
    let grid = g.grid();
    let rho = g.density(flat);
    let n = grid.n_axes();
    let mut current = Vec::with_capacity(n);
    let mut osmotic = Vec::with_capacity(n);
    for a in 0..n {
        let m = g.particles()[a / grid.dim].mass;
        let j = g.current(flat, a) * (g.hbar() / (m * rho));
        current.push(j.im);
        osmotic.push(j.re);
    }
    Ok(LocalVelocity { current, osmotic })
}

/// Multilinear interpolation of the on-grid velocities to an arbitrary point.
///
/// Fails with `NodeProximity` when any corner with non-zero weight is a node.
pub fn interpolate_velocity<G: Guiding + ?Sized>(g: &G, x: &[f64], eps: f64) -> Result<LocalVelocity> {
    let grid = g.grid();
    if x.len() != grid.n_axes() {
        return Err(Error::Incompatible("configuration has wrong dimension".into()));
    }
    if !grid.contains(x) {
        return Err(Error::OutsideExtent);
    }
    let n = grid.n_axes();
    let cells: Vec<(usize, f64)> = (0..n).map(|a| grid.locate(a, x[a])).collect();
    let mut out = LocalVelocity { current: vec![0.0; n], osmotic: vec![0.0; n] };
    let mut idx = vec![0usize; n];
    for corner in 0..1usize << n {
        let mut w = 1.0;
        for (a, &(k, f)) in cells.iter().enumerate() {
            if corner >> a & 1 == 1 {
                w *= f;
                idx[a] = (k + 1) % grid.points[a];
            } else {
                w *= 1.0 - f;
                idx[a] = k;
            }
        }
        if w == 0.0 {
            continue;
        }
        let v = grid_velocity(g, grid.flat_index(&idx), eps)?;
        for a in 0..n {
            out.current[a] += w * v.current[a];
            out.osmotic[a] += w * v.osmotic[a];
        }
    }
    Ok(out)
}

fn particle_block(field: &Field, particle: usize) -> Result<std::ops::Range<usize>> {
    let g = field.grid();
    if particle >= g.n_particles {
        return Err(Error::ParticleOutOfRange(particle));
    }
    Ok(particle * g.dim..(particle + 1) * g.dim)
}

/// `(hbar/m_i) Im(psi* grad_i psi)/|psi|^2` at `point` for particle `i`.
pub fn current_velocity(field: &Field, point: &[f64], particle: usize, eps: f64) -> Result<Vec<f64>> {
    let r = particle_block(field, particle)?;
    Ok(interpolate_velocity(field, point, eps)?.current[r].to_vec())
}

/// `(hbar/m_i) Re(psi* grad_i psi)/|psi|^2 = (hbar/2m_i) grad_i R^2 / R^2`.
pub fn osmotic_velocity(field: &Field, point: &[f64], particle: usize, eps: f64) -> Result<Vec<f64>> {
    let r = particle_block(field, particle)?;
    Ok(interpolate_velocity(field, point, eps)?.osmotic[r].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::field::NODE_EPS;

    fn grid1(n: usize, l: f64) -> GridSpec {
        GridSpec::uniform(1, 1, n, l).unwrap()
    }

    #[test]
    fn plane_wave_velocity() {
        // k = 2 fits the periodic box: 2 * 2L / (2 pi) = 16 / pi is not an
        // integer, so sample well inside and away from the wrap seam.
        let l = 4.0 * std::f64::consts::PI;
        let g = grid1(512, l);
        let f = Field::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x[0])).unwrap();
        let v = current_velocity(&f, &[0.3], 0, NODE_EPS).unwrap();
        let h: f64 = f.grid().spacing(0);
        // fourth-order stencil error ~ k^5 h^4 / 30
        assert!((v[0] - 2.0).abs() < 2.0f64.powi(5) * h.powi(4) / 10.0, "{}", v[0]);
        let u = osmotic_velocity(&f, &[0.3], 0, NODE_EPS).unwrap();
        assert!(u[0].abs() < 1e-10);
    }

    #[test]
    fn real_field_has_zero_current() {
        let g = grid1(128, 8.0);
        let f = Field::from_fn(g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0)).unwrap();
        for x in [-1.3, 0.0, 0.77, 2.1] {
            assert_eq!(current_velocity(&f, &[x], 0, NODE_EPS).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn gaussian_osmotic_velocity() {
        // exp(-x^2/4): grad R / R = -x/2
        let g = grid1(512, 16.0);
        let f = Field::from_fn(g, |x| Complex64::new((-x[0] * x[0] / 4.0).exp(), 0.0)).unwrap();
        let u = osmotic_velocity(&f, &[1.0], 0, NODE_EPS).unwrap();
        assert!((u[0] + 0.5).abs() < 1e-6, "{}", u[0]);
    }

    #[test]
    fn node_is_refused() {
        let g = grid1(64, 4.0);
        let f = Field::from_fn(g, |x| Complex64::new(x[0], 0.0)).unwrap();
        let err = current_velocity(&f, &[0.01], 0, NODE_EPS).unwrap_err();
        assert!(matches!(err, Error::NodeProximity { .. }));
    }

    #[test]
    fn second_derivative_of_quadratic_is_exact() {
        let g = grid1(32, 4.0);
        let f: Vec<f64> = (0..32).map(|k| g.coord(0, k).powi(2)).collect();
        assert!((d2(&g, &f, 16, 0) - 2.0).abs() < 1e-10);
    }
}
