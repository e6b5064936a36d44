//! Equilibrium metrics of trajectory ensembles and coincidence statistics.

use serde::{Deserialize, Serialize};

use super::histogram::{chi_square, total_variation, AxisBins, DensityHistogram, DEFAULT_BINS};
use super::sampling::sample_density;
use crate::configspace::field::Field;
use crate::configspace::local::Guiding;
use crate::error::{Error, Result};
use crate::guidance::integrate::{integrate_nelson, NelsonParams, SnapshotSeries, TrajectoryEnsemble};
use crate::guidance::velocity::VectorPotentialSpec;

/// Largest allowed fraction of halted trajectories.
pub const HALT_BUDGET: f64 = 0.01;

/// Distance between an ensemble and `|psi|^2`, taken on the 1D marginal of
/// every axis; `tv` is the worst axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMetric {
    pub time: f64,
    pub tv: f64,
    pub tv_per_axis: Vec<f64>,
    /// Chi-square statistic, degrees of freedom and p-value on the worst axis.
    pub chi2: f64,
    pub dof: usize,
    pub p_value: f64,
    pub samples: usize,
    pub reference: String,
}

/// Marginal histograms of `points` against the density of `g`.
pub fn equilibrium_metric<G: Guiding + ?Sized>(
    g: &G,
    points: &[&[f64]],
    bins: usize,
    reference: &str,
) -> Result<(EquilibriumMetric, Vec<(DensityHistogram, Vec<f64>)>)> {
    if points.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut hists = Vec::new();
    for a in 0..g.grid().n_axes() {
        let h = DensityHistogram::from_samples(vec![AxisBins::auto(g, a, bins)?], points.iter().copied());
        let r = h.reference(g);
        hists.push((h, r));
    }
    let tvs: Vec<f64> = hists.iter().map(|(h, r)| total_variation(&h.probabilities(), r)).collect();
    let worst = (0..tvs.len()).max_by(|&a, &b| tvs[a].total_cmp(&tvs[b])).expect("at least one axis");
    let (chi2, dof, p_value) = chi_square(&hists[worst].0, &hists[worst].1);
    Ok((
        EquilibriumMetric {
            time: g.time(),
            tv: tvs[worst],
            tv_per_axis: tvs,
            chi2,
            dof,
            p_value,
            samples: points.len(),
            reference: reference.to_string(),
        },
        hists,
    ))
}

fn check_halted(e: &TrajectoryEnsemble) -> Result<()> {
    let halted = e.halted();
    if halted as f64 > HALT_BUDGET * e.len() as f64 {
        return Err(Error::HaltedFraction { halted, total: e.len() });
    }
    Ok(())
}

/// One metric per snapshot, comparing the ensemble at the snapshot's time
/// with `|psi_t|^2`. Halted trajectories drop out after their halt.
pub fn equivariance_test<G: Guiding>(
    snapshots: &[G],
    ensemble: &TrajectoryEnsemble,
    bins: usize,
) -> Result<Vec<EquilibriumMetric>> {
    check_halted(ensemble)?;
    snapshots
        .iter()
        .map(|s| {
            let t = s.time();
            let i = ensemble
                .times
                .iter()
                .position(|&u| (u - t).abs() <= 1e-9 * t.abs().max(1.0))
                .ok_or_else(|| Error::Incompatible(format!("ensemble has no record at t = {t}")))?;
            let pts = ensemble.positions_at(i);
            Ok(equilibrium_metric(s, &pts, bins, &format!("|psi(t={t})|^2"))?.0)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StationarityRun {
    pub metric: EquilibriumMetric,
    pub ensemble: TrajectoryEnsemble,
}

/// Walkers drawn from `|psi|^2` of a stationary state, driven for time
/// `t_end` by the Nelson diffusion, then compared with `|psi|^2`.
pub fn nelson_stationarity_test(field: &Field, params: NelsonParams, count: usize, t_end: f64) -> Result<StationarityRun> {
    let starts = sample_density(field, count, params.seed)?;
    let t0 = field.time();
    let snaps = if t_end > 0.0 {
        vec![field.clone(), field.clone().with_time(t0 + t_end)]
    } else {
        vec![field.clone()]
    };
    let series = SnapshotSeries::new(&snaps, VectorPotentialSpec::Zero)?;
    let ensemble = integrate_nelson(&series, &starts, field.hbar(), params)?;
    check_halted(&ensemble)?;
    let last = ensemble.times.len() - 1;
    let pts = ensemble.positions_at(last);
    let metric = equilibrium_metric(&snaps[snaps.len() - 1], &pts, DEFAULT_BINS, "|psi|^2 (stationary)")?.0;
    Ok(StationarityRun { metric, ensemble })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceStats {
    /// Per trajectory: smallest particle distance over time.
    pub min_distance: Vec<f64>,
    /// Per trajectory: sign changes of `x1 - x2` (first coordinate).
    pub crossings: Vec<usize>,
    pub total_crossings: usize,
    /// Trajectories that start with the two particles on top of each other.
    pub coincident_starts: usize,
    /// Largest distance reached by any coincident-start trajectory.
    pub max_coincident_separation: f64,
}

/// Inter-particle distances of a two-particle ensemble with `dim`
/// coordinates per particle.
pub fn coincidence_monitor(ensemble: &TrajectoryEnsemble, dim: usize) -> Result<CoincidenceStats> {
    if ensemble.positions.iter().flatten().any(|x| x.len() != 2 * dim) {
        return Err(Error::Incompatible("coincidence monitor needs a two-particle ensemble".into()));
    }
    let dist = |x: &[f64]| (0..dim).map(|d| (x[d] - x[dim + d]).powi(2)).sum::<f64>().sqrt();
    let mut stats = CoincidenceStats {
        min_distance: Vec::with_capacity(ensemble.len()),
        crossings: Vec::with_capacity(ensemble.len()),
        total_crossings: 0,
        coincident_starts: 0,
        max_coincident_separation: 0.0,
    };
    for traj in &ensemble.positions {
        stats.min_distance.push(traj.iter().map(|x| dist(x)).fold(f64::INFINITY, f64::min));
        let mut last = 0.0f64;
        let mut n = 0;
        for x in traj {
            let s = x[0] - x[dim];
            if s != 0.0 {
                if last != 0.0 && s.signum() != last.signum() {
                    n += 1;
                }
                last = s;
            }
        }
        stats.crossings.push(n);
        stats.total_crossings += n;
        if traj.first().is_some_and(|x| dist(x) == 0.0) {
            stats.coincident_starts += 1;
            let m = traj.iter().map(|x| dist(x)).fold(0.0, f64::max);
            stats.max_coincident_separation = stats.max_coincident_separation.max(m);
        }
    }
    Ok(stats)
}
