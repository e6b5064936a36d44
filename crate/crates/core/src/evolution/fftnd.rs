//! In-place N-dimensional FFT over row-major arrays, built from 1D plans.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Lines handed to one rayon task when transforming contiguous data.
const LINES_PER_TASK: usize = 64;

pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd").field("shape", &self.shape).finish()
    }
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.axis_pass(data, axis, &self.forward[axis]);
        }
    }

    /// Inverse transform including the `1/len` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for axis in 0..self.shape.len() {
            self.axis_pass(data, axis, &self.inverse[axis]);
        }
        let s = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|z| *z *= s);
    }

    fn axis_pass(&self, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "array does not match FFT shape");
        let n = self.shape[axis];
        let stride: usize = self.shape[axis + 1..].iter().product();
        if stride == 1 {
            data.par_chunks_mut(n * LINES_PER_TASK).for_each(|c| fft.process(c));
            return;
        }
        // Strided lines: transpose each (n x stride) block so the lines
        // become contiguous, transform, and transpose back.
        let block = n * stride;
        data.par_chunks_mut(block).for_each(|b| {
            let mut tmp = vec![Complex64::new(0.0, 0.0); block];
            for k in 0..n {
                for c in 0..stride {
                    tmp[c * n + k] = b[k * stride + c];
                }
            }
            tmp.par_chunks_mut(n * LINES_PER_TASK).for_each(|c| fft.process(c));
            for k in 0..n {
                for c in 0..stride {
                    b[k * stride + c] = tmp[c * n + k];
                }
            }
        });
    }
}

/// Angular wavenumbers of an `n`-point periodic axis with spacing `h`, in FFT order.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            let m = if j < n.div_ceil(2) { j as isize } else { j as isize - n as isize };
            m as f64 * dk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(shape: &[usize], x: &[Complex64]) -> Vec<Complex64> {
        let len = x.len();
        let idx = |mut f: usize| {
            let mut v = vec![0; shape.len()];
            for a in (0..shape.len()).rev() {
                v[a] = f % shape[a];
                f /= shape[a];
            }
            v
        };
        (0..len)
            .map(|k| {
                let ki = idx(k);
                (0..len)
                    .map(|j| {
                        let ji = idx(j);
                        let ph: f64 = (0..shape.len())
                            .map(|a| -2.0 * std::f64::consts::PI * (ki[a] * ji[a]) as f64 / shape[a] as f64)
                            .sum();
                        x[j] * Complex64::from_polar(1.0, ph)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let shape = [4, 6, 5];
        let len: usize = shape.iter().product();
        let x: Vec<Complex64> =
            (0..len).map(|k| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos())).collect();
        let mut y = x.clone();
        let f = FftNd::new(&shape);
        f.forward(&mut y);
        for (a, b) in y.iter().zip(naive_dft(&shape, &x)) {
            assert!((a - b).norm() < 1e-10);
        }
        f.inverse(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(8, std::f64::consts::PI / 4.0);
        assert_eq!(k.iter().map(|v| v.round() as i32).collect::<Vec<_>>(), vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }
}
