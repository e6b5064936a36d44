//! Exchange classification of spinorial fields: the joint space and spin
//! exchange must map the spinor onto a multiple of itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::report::{phase_distance, residuals_for, residuals_pass, PairResiduals, Tolerances, Verdict};
use crate::configspace::exchange::exchange_spinor;
use crate::configspace::field::{stable_sum, SpinorField};
use crate::error::Result;

/// Overlap `c = <P Psi, Psi> / <Psi, Psi>` and the relative distance
/// `||P Psi - c Psi|| / ||Psi||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeEigen {
    pub pair: (usize, usize),
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl ExchangeEigen {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

pub fn exchange_eigen(spinor: &SpinorField, i: usize, j: usize) -> Result<ExchangeEigen> {
    let p = exchange_spinor(spinor, i, j)?;
    let dot = |a: &SpinorField, b: &SpinorField| -> Complex64 {
        a.components()
            .iter()
            .zip(b.components())
            .map(|(x, y)| stable_sum(x.len(), |k| x[k].conj() * y[k]))
            .sum()
    };
    let nn = dot(spinor, spinor).re;
    let c = dot(spinor, &p) / nn;
    let dist: f64 = p
        .components()
        .iter()
        .zip(spinor.components())
        .map(|(x, y)| stable_sum(x.len(), |k| (x[k] - c * y[k]).norm_sqr()))
        .sum();
    Ok(ExchangeEigen { pair: (i, j), re: c.re, im: c.im, residual: (dist / nn).sqrt() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorReport {
    pub verdict: Verdict,
    pub reason: String,
    pub pairs: Vec<PairResiduals>,
    pub eigen: Vec<ExchangeEigen>,
    pub tolerances: Tolerances,
}

/// Boson when every pair exchange fixes the spinor, fermion when every pair
/// flips its sign. Anything else, including a mixture of symmetric and
/// antisymmetric parts, is inconsistent.
pub fn classify_spinor(spinor: &SpinorField, tol: Tolerances) -> Result<SpinorReport> {
    let n = spinor.grid().n_particles;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let residuals = pairs.iter().map(|&p| residuals_for(spinor, p, &tol)).collect::<Result<Vec<_>>>()?;
    let eigen = pairs.iter().map(|&(i, j)| exchange_eigen(spinor, i, j)).collect::<Result<Vec<_>>>()?;
    let (verdict, reason) = if let Some(p) = residuals.iter().find(|p| p.support_split) {
        (Verdict::Degenerate, format!("support split by exchange of {:?}", p.pair))
    } else if let Some(e) = eigen.iter().find(|e| e.residual > tol.residual) {
        (Verdict::Inconsistent, format!("exchange of {:?} is not a multiple of the identity", e.pair))
    } else if let Some(p) = residuals.iter().find(|p| !residuals_pass(p, &tol)) {
        (Verdict::Inconsistent, format!("exchange residuals of {:?} above tolerance", p.pair))
    } else if eigen.iter().all(|e| phase_distance(e.value().arg(), 0.0) <= tol.phase) {
        (Verdict::Boson, "totally symmetric".into())
    } else if eigen.iter().all(|e| phase_distance(e.value().arg(), std::f64::consts::PI) <= tol.phase) {
        (Verdict::Fermion, "totally antisymmetric".into())
    } else {
        (Verdict::Inconsistent, "pair exchanges disagree".into())
    };
    Ok(SpinorReport { verdict, reason, pairs: residuals, eigen, tolerances: tol })
}

impl SpinorReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("verdict = {}\nreason = {}\n", self.verdict.label(), self.reason);
        for e in &self.eigen {
            let k = format!("pair.{}{}", e.pair.0 + 1, e.pair.1 + 1);
            s += &format!("{k}.overlap = {}{:+}i\n{k}.eigen_residual = {}\n", e.re, e.im, e.residual);
        }
        for p in &self.pairs {
            let k = format!("pair.{}{}", p.pair.0 + 1, p.pair.1 + 1);
            s += &format!(
                "{k}.residual.velocity = {}\n{k}.residual.drift = {}\n{k}.residual.amplitude = {}\n",
                p.velocity, p.drift, p.amplitude
            );
        }
        s += &format!("tolerance.phase = {}\ntolerance.residual = {}\n", self.tolerances.phase, self.tolerances.residual);
        s
    }
}
