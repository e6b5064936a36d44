//! Binned densities and the distances between them.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::configspace::grid::GridSpec;
use crate::configspace::local::Guiding;
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 32;

/// Mass below which the tails are left to the overflow bin.
const TAIL_MASS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBins {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl AxisBins {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn center(&self, b: usize) -> f64 {
        self.lo + (b as f64 + 0.5) * self.width()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }

    /// `(bin, fraction)` pairs covering the grid cell `[x_k - h/2, x_k + h/2)`,
    /// folded into the periodic box as the sampler does.
    fn cell_overlap(&self, grid: &GridSpec, k: usize) -> Vec<(usize, f64)> {
        let (h, l) = (grid.spacing(self.axis), grid.extent[self.axis]);
        let (c0, c1) = (grid.coord(self.axis, k) - h / 2.0, grid.coord(self.axis, k) + h / 2.0);
        let pieces = if c0 < -l { vec![(c0 + 2.0 * l, l), (-l, c1)] } else { vec![(c0, c1)] };
        let w = self.width();
        let mut out = Vec::new();
        for (p0, p1) in pieces {
            let first = ((p0 - self.lo) / w).floor().max(0.0) as usize;
            let last = (((p1 - self.lo) / w).ceil().max(0.0) as usize).min(self.bins);
            for b in first..last {
                let (b0, b1) = (self.lo + b as f64 * w, self.lo + (b + 1) as f64 * w);
                let o = (p1.min(b1) - p0.max(b0)).max(0.0) / h;
                if o > 0.0 {
                    out.push((b, o));
                }
            }
        }
        out
    }

    /// Bins spanning the cells that carry all but `TAIL_MASS` of the
    /// marginal of `g` along `axis`.
    pub fn auto<G: Guiding + ?Sized>(g: &G, axis: usize, bins: usize) -> Result<Self> {
        let grid = g.grid();
        let m = marginal(g, axis);
        let total: f64 = m.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        let (mut lo, mut acc) = (0, 0.0);
        while acc + m[lo] < TAIL_MASS * total {
            acc += m[lo];
            lo += 1;
        }
        let (mut hi, mut acc) = (m.len() - 1, 0.0);
        while acc + m[hi] < TAIL_MASS * total {
            acc += m[hi];
            hi -= 1;
        }
        let h = grid.spacing(axis);
        Ok(AxisBins { axis, lo: grid.coord(axis, lo) - h / 2.0, hi: grid.coord(axis, hi) + h / 2.0, bins })
    }
}

/// Grid marginal of the density along one axis (sum over all other axes).
fn marginal<G: Guiding + ?Sized>(g: &G, axis: usize) -> Vec<f64> {
    let grid = g.grid();
    let mut m = vec![0.0; grid.points[axis]];
    let stride = grid.stride(axis);
    for (k, p) in g.density_vec().into_iter().enumerate() {
        m[(k / stride) % grid.points[axis]] += p;
    }
    m
}

/// Histogram over one or more axes; other axes are marginalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub axes: Vec<AxisBins>,
    /// Row-major over `axes`, last axis fastest.
    pub counts: Vec<u64>,
    /// Samples outside the binned range.
    pub overflow: u64,
    pub total: u64,
}

impl DensityHistogram {
    pub fn from_samples<'a>(axes: Vec<AxisBins>, samples: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let len = axes.iter().map(|a| a.bins).product();
        let mut h = DensityHistogram { axes, counts: vec![0; len], overflow: 0, total: 0 };
        for x in samples {
            h.total += 1;
            match h.flat(x) {
                Some(b) => h.counts[b] += 1,
                None => h.overflow += 1,
            }
        }
        h
    }

    fn flat(&self, x: &[f64]) -> Option<usize> {
        self.axes.iter().try_fold(0, |acc, a| Some(acc * a.bins + a.index(x[a.axis])?))
    }

    pub fn bin_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.width()).product()
    }

    /// Fraction of samples per bin, then the overflow fraction.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total.max(1) as f64;
        self.counts.iter().chain(std::iter::once(&self.overflow)).map(|&c| c as f64 / n).collect()
    }

    /// Bin probabilities of the grid density of `g` on the same bins (cells
    /// split by overlap), followed by the mass outside.
    pub fn reference<G: Guiding + ?Sized>(&self, g: &G) -> Vec<f64> {
        let grid = g.grid();
        let len = self.counts.len();
        let mut p = vec![0.0; len + 1];
        let overlaps: Vec<Vec<Vec<(usize, f64)>>> = self
            .axes
            .iter()
            .map(|a| (0..grid.points[a.axis]).map(|k| a.cell_overlap(grid, k)).collect())
            .collect();
        let density = g.density_vec();
        let total: f64 = density.iter().sum();
        for (k, &rho) in density.iter().enumerate() {
            if rho == 0.0 {
                continue;
            }
            let idx = grid.multi_index(k);
            let mut cells = vec![(0usize, rho / total)];
            for (a, ov) in self.axes.iter().zip(&overlaps) {
                cells = cells
                    .into_iter()
                    .flat_map(|(b, w)| ov[idx[a.axis]].iter().map(move |&(c, f)| (b * a.bins + c, w * f)))
                    .collect();
            }
            for (b, w) in cells {
                p[b] += w;
            }
        }
        p[len] = (1.0 - p[..len].iter().sum::<f64>()).max(0.0);
        p
    }

    /// Writes `bin_center_<axis>..., count, density, reference_density`.
    pub fn write_csv<W: Write>(&self, mut w: W, reference: &[f64]) -> Result<()> {
        let cols: Vec<String> = self.axes.iter().map(|a| format!("bin_center_{}", a.axis + 1)).collect();
        writeln!(w, "{},count,density,reference_density", cols.join(","))?;
        let (vol, n) = (self.bin_volume(), self.total.max(1) as f64);
        for (b, &c) in self.counts.iter().enumerate() {
            let mut rest = b;
            let mut centers = vec![0.0; self.axes.len()];
            for (i, a) in self.axes.iter().enumerate().rev() {
                centers[i] = a.center(rest % a.bins);
                rest /= a.bins;
            }
            let cs: Vec<String> = centers.iter().map(|c| c.to_string()).collect();
            writeln!(w, "{},{c},{},{}", cs.join(","), c as f64 / (n * vol), reference[b] / vol)?;
        }
        Ok(())
    }
}

/// `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Pearson statistic over bins with expected count >= 5 (the rest pooled),
/// its degrees of freedom and upper-tail p-value.
pub fn chi_square(h: &DensityHistogram, reference: &[f64]) -> (f64, usize, f64) {
    let n = h.total as f64;
    let observed = h.counts.iter().chain(std::iter::once(&h.overflow));
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.zip(reference) {
        let e = n * p;
        if e >= 5.0 {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            pool_o += o as f64;
            pool_e += e;
        }
    }
    if pool_e >= 5.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        cells += 1;
    }
    let dof = cells.saturating_sub(1).max(1);
    let p = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(stat)).unwrap_or(f64::NAN);
    (stat, dof, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::field::Field;
    use crate::ensemble::sampling::sample_density;
    use num_complex::Complex64;

    #[test]
    fn reference_sums_to_one_and_counts_to_total() {
        let g = GridSpec::uniform(2, 1, 64, 5.0).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), 0.0)).unwrap();
        let axes = vec![AxisBins::auto(&f, 0, 16).unwrap(), AxisBins::auto(&f, 1, 16).unwrap()];
        let s = sample_density(&f, 5000, 3).unwrap();
        let h = DensityHistogram::from_samples(axes, s.iter().map(|x| x.as_slice()));
        assert_eq!(h.counts.iter().sum::<u64>() + h.overflow, h.total);
        let r = h.reference(&f);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(total_variation(&h.probabilities(), &r) < 0.1);
    }

    #[test]
    fn uniform_density_within_poisson_bands() {
        let g = GridSpec::uniform(1, 1, 64, 4.0).unwrap();
        let f = Field::from_fn(g, |_| Complex64::new(1.0, 0.0)).unwrap();
        let s = sample_density(&f, 32_000, 11).unwrap();
        let axes = vec![AxisBins { axis: 0, lo: -4.0, hi: 4.0, bins: 32 }];
        let h = DensityHistogram::from_samples(axes, s.iter().map(|x| x.as_slice()));
        // 1000 expected per bin
        assert!(h.counts.iter().all(|&c| (c as f64 - 1000.0).abs() < 4.0 * 1000f64.sqrt()), "{:?}", h.counts);
        let (_, dof, p) = chi_square(&h, &h.reference(&f));
        assert_eq!(dof, 31);
        assert!(p > 1e-4);
    }

    #[test]
    fn csv_header() {
        let h = DensityHistogram::from_samples(vec![AxisBins { axis: 0, lo: 0.0, hi: 1.0, bins: 2 }], [[0.2].as_slice()]);
        let mut out = Vec::new();
        h.write_csv(&mut out, &[0.5, 0.5, 0.0]).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.starts_with("bin_center_1,count,density,reference_density\n0.25,1,2,1\n"), "{s}");
    }
}
