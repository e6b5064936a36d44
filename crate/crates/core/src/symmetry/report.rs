//! Classification of a field's exchange behavior and the report format.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::paths::{exchange_phase, ExchangePath, Handedness};
use super::residuals::{amplitude_exchange_residual, drift_residual_scaled, velocity_residual_scaled, SampleSet};
use crate::configspace::field::{Field, Frame};
use crate::configspace::local::Guiding;
use crate::configspace::path::{wrap_phase, TransportOptions};
use crate::configspace::support::SupportComponents;
use crate::error::{Error, Result};

pub const HANDEDNESS_CONVENTION: &str = "left-handed (counter-clockwise) simple exchange is positive";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Phase tolerance in radians.
    pub phase: f64,
    /// Velocity and drift residuals, relative to the largest sampled speed;
    /// amplitude residual, relative to `max |psi|`.
    pub residual: f64,
    /// Support is `|psi| >= support_floor * max |psi|`.
    pub support_floor: f64,
    /// Components lighter than this fraction of the norm are ignored.
    pub support_min_fraction: f64,
    pub samples: usize,
}

impl Tolerances {
    pub fn analytic() -> Self {
        Tolerances { phase: 1e-5, residual: 1e-6, support_floor: 1e-3, support_min_fraction: 1e-2, samples: 1000 }
    }

    /// For evolved or anyonic fields.
    pub fn evolved() -> Self {
        Tolerances { phase: 1e-3, ..Self::analytic() }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::analytic()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Boson,
    Fermion,
    Anyon { gamma: f64 },
    /// Support disconnected across the exchange orbit.
    Degenerate,
    Inconsistent,
}

impl Verdict {
    pub fn label(&self) -> String {
        match self {
            Verdict::Boson => "boson".into(),
            Verdict::Fermion => "fermion".into(),
            Verdict::Anyon { gamma } => format!("anyon({gamma:.6})"),
            Verdict::Degenerate => "degenerate".into(),
            Verdict::Inconsistent => "inconsistent".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseEntry {
    pub pair: (usize, usize),
    pub class: String,
    pub winding: i32,
    pub handedness: Option<Handedness>,
    pub start: Vec<f64>,
    /// `(-pi, pi]`; `None` when the path was rejected.
    pub gamma: Option<f64>,
    pub raw: Option<f64>,
    pub rejected: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResiduals {
    pub pair: (usize, usize),
    pub velocity: f64,
    pub velocity_scale: f64,
    pub drift: f64,
    pub drift_scale: f64,
    pub amplitude: f64,
    pub samples: usize,
    pub support_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub verdict: Verdict,
    /// Why the verdict is what it is, in a few words.
    pub reason: String,
    pub frame: Frame,
    pub n_particles: usize,
    pub dim: usize,
    pub time: f64,
    /// Maxima over pairs: absolute velocity and drift residuals, relative
    /// amplitude residual.
    pub velocity_residual: f64,
    pub drift_residual: f64,
    pub amplitude_residual: f64,
    pub pairs: Vec<PairResiduals>,
    pub phases: Vec<PhaseEntry>,
    /// Per-pair `gamma_0` (phase of one left-handed half turn).
    pub pair_gamma: Vec<((usize, usize), f64)>,
    pub tolerances: Tolerances,
    pub convention: String,
}

/// Distance of two angles on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

fn pairs_of(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub(crate) fn residuals_for<G: Guiding + ?Sized>(g: &G, pair: (usize, usize), tol: &Tolerances) -> Result<PairResiduals> {
    let (i, j) = pair;
    let grid = g.grid();
    let samples = SampleSet::halton(g, i, j, tol.samples, tol.support_floor)?;
    let v = velocity_residual_scaled(g, i, j, &samples)?;
    let d = drift_residual_scaled(g, i, j, &samples)?;
    let amp: Vec<f64> = g.density_vec().into_iter().map(f64::sqrt).collect();
    let support = SupportComponents::compute(grid, g.frame(), &amp, tol.support_floor, true);
    Ok(PairResiduals {
        pair,
        velocity: v.value,
        velocity_scale: v.scale,
        drift: d.value,
        drift_scale: d.scale,
        amplitude: amplitude_exchange_residual(g, i, j)?,
        samples: v.used,
        support_split: support.split_by_exchange(grid, g.frame(), i, j, tol.support_min_fraction),
    })
}

pub(crate) fn residuals_pass(p: &PairResiduals, tol: &Tolerances) -> bool {
    p.velocity <= tol.residual * p.velocity_scale.max(1.0)
        && p.drift <= tol.residual * p.drift_scale.max(1.0)
        && p.amplitude <= tol.residual
}

/// Classifies a scalar field from its exchange residuals and the phases
/// along `paths`.
///
/// Every particle pair needs at least one path; rejected paths (nodes,
/// aliasing) are recorded, and the error is returned only when a pair has
/// no usable path left.
pub fn classify(field: &Field, paths: &[ExchangePath], tol: Tolerances) -> Result<SymmetryReport> {
    let grid = field.grid();
    let pairs = match field.frame() {
        Frame::Absolute => pairs_of(grid.n_particles),
        Frame::Relative => vec![(0, 1)],
    };
    let opts = TransportOptions::default();
    let mut phases = Vec::with_capacity(paths.len());
    let mut first_error: Vec<Option<Error>> = pairs.iter().map(|_| None).collect();
    for p in paths {
        let key = (p.pair.0.min(p.pair.1), p.pair.0.max(p.pair.1));
        let Some(slot) = pairs.iter().position(|&q| q == key) else {
            return Err(Error::InvalidPath(format!("pair {key:?} does not exist")));
        };
        let mut entry = PhaseEntry {
            pair: key,
            class: p.class_label(),
            winding: p.winding,
            handedness: p.handedness,
            start: p.start.clone(),
            gamma: None,
            raw: None,
            rejected: None,
        };
        match exchange_phase(field, p, opts) {
            Ok(ph) => {
                entry.gamma = Some(ph.gamma);
                entry.raw = Some(ph.raw);
            }
            Err(e) => {
                entry.rejected = Some(e.to_string());
                first_error[slot].get_or_insert(e);
            }
        }
        phases.push(entry);
    }
    for (slot, pair) in pairs.iter().enumerate() {
        if !phases.iter().any(|e| e.pair == *pair && e.gamma.is_some()) {
            return Err(first_error[slot]
                .take()
                .unwrap_or_else(|| Error::InvalidPath(format!("no exchange path for pair {pair:?}"))));
        }
    }
    let residuals = pairs.iter().map(|&p| residuals_for(field, p, &tol)).collect::<Result<Vec<_>>>()?;

    let mut pair_gamma = Vec::new();
    let mut phases_ok = true;
    for &pair in &pairs {
        let ok: Vec<&PhaseEntry> = phases.iter().filter(|e| e.pair == pair && e.gamma.is_some()).collect();
        // one half turn fixes gamma_0; every other class must be a multiple
        let base = ok
            .iter()
            .find(|e| e.winding.abs() == 1)
            .map(|e| e.winding.signum() as f64 * e.gamma.unwrap_or_default());
        match base {
            Some(g0) => {
                pair_gamma.push((pair, g0));
                phases_ok &= ok
                    .iter()
                    .all(|e| phase_distance(e.gamma.unwrap_or_default(), e.winding as f64 * g0) <= tol.phase);
            }
            None => phases_ok = false,
        }
    }
    let (verdict, reason) = decide(grid.dim, field.frame(), &residuals, &pair_gamma, phases_ok, &tol);
    Ok(SymmetryReport {
        verdict,
        reason,
        frame: field.frame(),
        n_particles: field.physical_particles(),
        dim: grid.dim,
        time: field.time(),
        velocity_residual: residuals.iter().map(|r| r.velocity).fold(0.0, f64::max),
        drift_residual: residuals.iter().map(|r| r.drift).fold(0.0, f64::max),
        amplitude_residual: residuals.iter().map(|r| r.amplitude).fold(0.0, f64::max),
        pairs: residuals,
        phases,
        pair_gamma,
        tolerances: tol,
        convention: HANDEDNESS_CONVENTION.into(),
    })
}

fn decide(
    dim: usize,
    frame: Frame,
    residuals: &[PairResiduals],
    pair_gamma: &[((usize, usize), f64)],
    phases_ok: bool,
    tol: &Tolerances,
) -> (Verdict, String) {
    if let Some(p) = residuals.iter().find(|p| p.support_split) {
        return (Verdict::Degenerate, format!("support split by exchange of {:?}", p.pair));
    }
    if let Some(p) = residuals.iter().find(|p| !residuals_pass(p, tol)) {
        return (Verdict::Inconsistent, format!("exchange residuals of {:?} above tolerance", p.pair));
    }
    if !phases_ok {
        return (Verdict::Inconsistent, "phases not a multiple of one half-turn phase".into());
    }
    let g0 = pair_gamma[0].1;
    if pair_gamma.iter().any(|(_, g)| phase_distance(*g, g0) > tol.phase) {
        return (Verdict::Inconsistent, "pairs carry different exchange phases".into());
    }
    if phase_distance(g0, 0.0) <= tol.phase {
        (Verdict::Boson, "gamma = 0".into())
    } else if phase_distance(g0, PI) <= tol.phase {
        (Verdict::Fermion, "gamma = pi".into())
    } else if dim == 2 || frame == Frame::Relative {
        (Verdict::Anyon { gamma: g0 }, "gamma neither 0 nor pi in D = 2".into())
    } else {
        (Verdict::Inconsistent, "gamma neither 0 nor pi outside D = 2".into())
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |x| format!("{x}"))
}

impl SymmetryReport {
    /// Flat `key = value` text, one entry per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("verdict", self.verdict.label());
        kv("reason", self.reason.clone());
        kv("frame", format!("{:?}", self.frame).to_lowercase());
        kv("particles", self.n_particles.to_string());
        kv("dim", self.dim.to_string());
        kv("time", self.time.to_string());
        kv("convention.handedness", self.convention.clone());
        kv("tolerance.phase", self.tolerances.phase.to_string());
        kv("tolerance.residual", self.tolerances.residual.to_string());
        kv("tolerance.support_floor", self.tolerances.support_floor.to_string());
        kv("tolerance.samples", self.tolerances.samples.to_string());
        kv("residual.velocity", self.velocity_residual.to_string());
        kv("residual.drift", self.drift_residual.to_string());
        kv("residual.amplitude", self.amplitude_residual.to_string());
        for p in &self.pairs {
            let k = format!("pair.{}{}", p.pair.0 + 1, p.pair.1 + 1);
            kv(&format!("{k}.residual.velocity"), p.velocity.to_string());
            kv(&format!("{k}.residual.velocity_scale"), p.velocity_scale.to_string());
            kv(&format!("{k}.residual.drift"), p.drift.to_string());
            kv(&format!("{k}.residual.drift_scale"), p.drift_scale.to_string());
            kv(&format!("{k}.residual.amplitude"), p.amplitude.to_string());
            kv(&format!("{k}.samples"), p.samples.to_string());
            kv(&format!("{k}.support_split"), p.support_split.to_string());
        }
        for (pair, g) in &self.pair_gamma {
            kv(&format!("pair.{}{}.gamma", pair.0 + 1, pair.1 + 1), g.to_string());
        }
        for (n, e) in self.phases.iter().enumerate() {
            let k = format!("path.{n}");
            kv(&format!("{k}.pair"), format!("{},{}", e.pair.0 + 1, e.pair.1 + 1));
            kv(&format!("{k}.class"), e.class.clone());
            kv(&format!("{k}.winding"), e.winding.to_string());
            kv(&format!("{k}.start"), fmt_vec(&e.start));
            kv(&format!("{k}.gamma"), fmt_opt(e.gamma));
            kv(&format!("{k}.raw"), fmt_opt(e.raw));
            kv(&format!("{k}.status"), e.rejected.as_ref().map_or("ok".into(), |r| format!("rejected: {r}")));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}
