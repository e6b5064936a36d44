//! Merging boxes, flipping spins and checking what exchange symmetry the
//! result carries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::layout::BoxLayout;
use crate::configspace::field::{slot_spins, spin_label, spin_slot, Field, Frame, Spin, SpinorField};
use crate::configspace::grid::GridSpec;
use crate::configspace::support::SupportComponents;
use crate::error::{Error, Result};
use crate::evolution::pauli::{FieldProfile, MagneticSpec, PauliStepper};
use crate::evolution::potential::PotentialSpec;
use crate::evolution::stepper::StepperConfig;
use crate::guidance::integrate::{integrate_bohm, IntegrationOptions, SnapshotSeries, TrajectoryFlag};
use crate::guidance::velocity::VectorPotentialSpec;
use crate::symmetry::report::{phase_distance, Tolerances, Verdict};
use crate::symmetry::spinor::{exchange_eigen, ExchangeEigen};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDominance {
    pub spins: String,
    /// Share of the total norm.
    pub weight: f64,
    /// Samples at which this component is the largest.
    pub samples: usize,
    /// Smallest `|psi_s|^2 / sum_s' |psi_s'|^2` over those samples.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub components: Vec<ComponentDominance>,
    pub min_dominance: f64,
    /// Samples dropped because the density there is below the floor.
    pub excluded: usize,
}

/// At each sample (grid-nearest), the share of the spin-summed density
/// carried by the largest component. Samples with density below
/// `floor * max density` are not counted.
pub fn component_dominance(spinor: &SpinorField, samples: &[Vec<f64>], floor: f64) -> Result<DominanceReport> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let g = spinor.grid();
    let ns = spinor.n_components();
    let total = spinor.norm_sqr();
    let mut comps: Vec<ComponentDominance> = (0..ns)
        .map(|s| ComponentDominance {
            spins: spin_label(&slot_spins(s, g.n_particles)),
            weight: spinor.component_weight(s) / total,
            samples: 0,
            min_ratio: 1.0,
        })
        .collect();
    let mut excluded = 0;
    let cut = floor * spinor.max_density();
    for x in samples {
        let k = g.nearest_flat(x);
        let rho = spinor.density_at(k);
        if !(rho > cut) {
            excluded += 1;
            continue;
        }
        let (s, top) = (0..ns)
            .map(|s| (s, spinor.components()[s][k].norm_sqr()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("components");
        comps[s].samples += 1;
        comps[s].min_ratio = comps[s].min_ratio.min(top / rho);
    }
    if excluded == samples.len() {
        return Err(Error::EmptySampleSet);
    }
    let min_dominance = comps.iter().filter(|c| c.samples > 0).map(|c| c.min_ratio).fold(1.0, f64::min);
    Ok(DominanceReport { components: comps, min_dominance, excluded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAgreement {
    /// Largest position difference over all recorded times.
    pub max_deviation: f64,
    pub compared: usize,
    /// Trajectories halted or out of the domain in either run.
    pub skipped: usize,
}

/// Integrates every start twice: guided by the full spinor and by the
/// single component that dominates at the start. The snapshots must share
/// a grid and be in time order.
pub fn effective_component_agreement(
    snapshots: &[SpinorField],
    starts: &[Vec<f64>],
    opts: IntegrationOptions,
) -> Result<EffectiveAgreement> {
    let first = snapshots.first().ok_or(Error::EmptySampleSet)?;
    let g = first.grid();
    let full = integrate_bohm(&SnapshotSeries::new(snapshots, VectorPotentialSpec::Zero)?, starts, opts)?;
    let mut by_slot: Vec<Vec<usize>> = vec![Vec::new(); first.n_components()];
    for (j, x) in starts.iter().enumerate() {
        let k = g.nearest_flat(x);
        let s = (0..first.n_components())
            .max_by(|&a, &b| first.components()[a][k].norm_sqr().total_cmp(&first.components()[b][k].norm_sqr()))
            .expect("components");
        by_slot[s].push(j);
    }
    let mut out = EffectiveAgreement { max_deviation: 0.0, compared: 0, skipped: 0 };
    for (slot, idx) in by_slot.iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let spins = slot_spins(slot, g.n_particles);
        let fields = snapshots.iter().map(|s| s.component_field(&spins)).collect::<Result<Vec<Field>>>()?;
        let sub: Vec<Vec<f64>> = idx.iter().map(|&j| starts[j].clone()).collect();
        let eff = integrate_bohm(&SnapshotSeries::new(&fields, VectorPotentialSpec::Zero)?, &sub, opts)?;
        for (e, &j) in idx.iter().enumerate() {
            if full.flags[j] != TrajectoryFlag::Ok || eff.flags[e] != TrajectoryFlag::Ok {
                out.skipped += 1;
                continue;
            }
            out.compared += 1;
            for (a, b) in full.positions[j].iter().zip(&eff.positions[e]) {
                let d = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
                out.max_deviation = out.max_deviation.max(d);
            }
        }
    }
    Ok(out)
}

/// Support connectivity of one component across the exchange of a pair of
/// particles carrying the same spin in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConnectivity {
    pub spins: String,
    pub pair: (usize, usize),
    pub connected: bool,
}

/// For every occupied component and every pair with equal spins there,
/// whether the component's support (amplitude above `tol.support_floor` of
/// its max, no coincidence bridging) joins each configuration to its
/// exchange image.
pub fn same_spin_connectivity(spinor: &SpinorField, tol: &Tolerances) -> Vec<PairConnectivity> {
    let g = spinor.grid();
    let n = g.n_particles;
    let total = spinor.norm_sqr();
    let mut out = Vec::new();
    for slot in 0..spinor.n_components() {
        if spinor.component_weight(slot) <= 1e-12 * total {
            continue;
        }
        let spins = slot_spins(slot, n);
        let amp: Vec<f64> = spinor.components()[slot].iter().map(|z| z.norm()).collect();
        let sc = SupportComponents::compute(g, Frame::Absolute, &amp, tol.support_floor, false);
        for i in 0..n {
            for j in i + 1..n {
                if spins[i] != spins[j] {
                    continue;
                }
                let split = sc.split_by_exchange(g, Frame::Absolute, i, j, tol.support_min_fraction);
                out.push(PairConnectivity { spins: spin_label(&spins), pair: (i, j), connected: !split });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub spinor: SpinorField,
    pub potential: PotentialSpec,
    pub connectivity: Vec<PairConnectivity>,
}

/// Drops the walls between boxes of equal spin and evolves for `steps`
/// with no magnetic field.
pub fn merge_same_spin_boxes(
    spinor: &SpinorField,
    layout: &BoxLayout,
    cfg: StepperConfig,
    steps: usize,
    tol: &Tolerances,
) -> Result<MergeOutcome> {
    layout.validate(spinor.grid())?;
    let potential = layout.merged_potential(&layout.same_spin_pairs());
    let mut stepper = PauliStepper::for_spinor(spinor, potential.clone(), MagneticSpec::zero(), cfg)?;
    let out = stepper.evolve(spinor, steps)?;
    let connectivity = same_spin_connectivity(&out, tol);
    Ok(MergeOutcome { spinor: out, potential, connectivity })
}

/// Spin-flip pulse settings: coupling, requested field strength and the
/// step count after the merge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipPlan {
    pub mu: f64,
    pub b: f64,
    pub merge_steps: usize,
}

#[derive(Debug, Clone)]
pub struct FlipOutcome {
    pub spinor: SpinorField,
    /// Share of the norm in the all-up component after the pulses.
    pub fidelity: f64,
    /// Field strength actually used, so the pulse is a whole number of steps.
    pub b_used: f64,
    pub pulse_steps: usize,
    pub flipped_boxes: Vec<usize>,
    /// All-up component after the merge.
    pub scalar: Field,
}

/// Flips the spin in every spin-down box with a pi pulse confined to that
/// box, then drops all walls and evolves with no field.
pub fn spin_flip_and_merge(
    spinor: &SpinorField,
    layout: &BoxLayout,
    cfg: StepperConfig,
    plan: FlipPlan,
) -> Result<FlipOutcome> {
    let g = spinor.grid();
    layout.validate(g)?;
    if !(plan.mu * plan.b != 0.0) || !(plan.mu * plan.b).is_finite() {
        return Err(Error::InvalidLayout("pulse needs finite nonzero mu and b".into()));
    }
    let tau = MagneticSpec::pi_pulse_duration(plan.mu, plan.b, cfg.hbar);
    let k = (tau / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let b_used = plan.b.signum() * std::f64::consts::PI * cfg.hbar / (plan.mu.abs() * k as f64 * cfg.dt);
    let mut stepper = PauliStepper::for_spinor(spinor, layout.potential(), MagneticSpec::zero(), cfg)?;
    let mut s = spinor.clone();
    let flipped: Vec<usize> = (0..layout.boxes.len()).filter(|&b| layout.spins[b] == Spin::Down).collect();
    for &b in &flipped {
        let gap = (0..layout.boxes.len())
            .filter(|&o| o != b)
            .map(|o| {
                let (p, q) = (&layout.boxes[b], &layout.boxes[o]);
                (0..g.dim).map(|d| (q.lo[d] - p.hi[d]).max(p.lo[d] - q.hi[d])).fold(f64::NEG_INFINITY, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        let t0 = s.time();
        stepper.set_magnetic(MagneticSpec {
            mu: plan.mu,
            field: FieldProfile::Plateau { b: [b_used, 0.0, 0.0], region: layout.boxes[b].clone(), ramp: 0.5 * gap.min(1.0) },
            // pulses are sampled at step start
            window: Some((t0 - 0.5 * cfg.dt, t0 + (k as f64 - 0.5) * cfg.dt)),
        });
        s = stepper.evolve(&s, k)?;
    }
    let fidelity = s.component_weight(0) / s.norm_sqr();
    let all: Vec<(usize, usize)> = (1..layout.boxes.len()).map(|b| (0, b)).collect();
    let mut merge = PauliStepper::for_spinor(&s, layout.merged_potential(&all), MagneticSpec::zero(), cfg)?;
    let s = merge.evolve(&s, plan.merge_steps)?;
    let scalar = s.component_field(&vec![Spin::Up; g.n_particles])?;
    Ok(FlipOutcome { spinor: s, fidelity, b_used, pulse_steps: k, flipped_boxes: flipped, scalar })
}

/// The all-up component an ideal flip of every down spin would leave:
/// `sum_s (-i)^{#down(s)} psi_s`.
pub fn flipped_scalar(spinor: &SpinorField) -> Result<Field> {
    let mut v = vec![Complex64::new(0.0, 0.0); spinor.grid().len()];
    for (slot, c) in spinor.components().iter().enumerate() {
        let f = Complex64::new(0.0, -1.0).powu(slot.count_ones());
        for (a, b) in v.iter_mut().zip(c) {
            *a += f * b;
        }
    }
    Ok(Field::new(spinor.grid().clone(), v)?
        .with_time(spinor.time())
        .with_particles(spinor.particles().to_vec())?
        .with_hbar(spinor.hbar()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalSymmetry {
    pub verdict: Verdict,
    pub pairs: Vec<ExchangeEigen>,
}

impl TotalSymmetry {
    pub fn to_text(&self) -> String {
        let mut s = format!("verdict = {}\n", self.verdict.label());
        for e in &self.pairs {
            let k = format!("pair.{}{}", e.pair.0 + 1, e.pair.1 + 1);
            s += &format!(
                "{k}.factor = {}{:+}i\n{k}.phase = {}\n{k}.eigen_residual = {}\n",
                e.re,
                e.im,
                e.value().arg(),
                e.residual
            );
        }
        s
    }
}

/// Whether every pair exchange maps the spinor onto `+1` or `-1` times
/// itself. Unlike the full classifier this does not look at the support.
pub fn verify_total_symmetry(spinor: &SpinorField, tol: &Tolerances) -> Result<TotalSymmetry> {
    let n = spinor.grid().n_particles;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(exchange_eigen(spinor, i, j)?);
        }
    }
    let near = |e: &ExchangeEigen, target: f64| {
        e.residual <= tol.residual && (e.value().norm() - 1.0).abs() <= tol.residual && phase_distance(e.value().arg(), target) <= tol.phase
    };
    let verdict = if pairs.iter().all(|e| near(e, 0.0)) {
        Verdict::Boson
    } else if pairs.iter().all(|e| near(e, std::f64::consts::PI)) {
        Verdict::Fermion
    } else {
        Verdict::Inconsistent
    };
    Ok(TotalSymmetry { verdict, pairs })
}

/// [`verify_total_symmetry`] for a scalar field.
pub fn verify_scalar_symmetry(field: &Field, tol: &Tolerances) -> Result<TotalSymmetry> {
    let n = field.grid().n_particles;
    verify_total_symmetry(&SpinorField::single_component(field, &vec![Spin::Up; n])?, tol)
}

/// Three particles in one dimension, two spin-up boxes holding `a`, `b` and
/// a spin-down box holding `c`:
///
/// - `++-`: `f(x,y,z) = a(x)b(y)c(z) + sign * b(x)a(y)c(z)`
/// - `+-+`: `factors[0] * f(x,z,y)`
/// - `-++`: `factors[1] * f(z,y,x)`
///
/// The spinor is totally (anti)symmetric only when both factors equal `sign`.
pub fn three_particle_state(
    grid: &GridSpec,
    a: impl Fn(f64) -> Complex64 + Sync,
    b: impl Fn(f64) -> Complex64 + Sync,
    c: impl Fn(f64) -> Complex64 + Sync,
    sign: f64,
    factors: [Complex64; 2],
) -> Result<SpinorField> {
    if grid.n_particles != 3 || grid.dim != 1 {
        return Err(Error::Incompatible("three particles in one dimension expected".into()));
    }
    let f = |x: f64, y: f64, z: f64| (a(x) * b(y) + sign * b(x) * a(y)) * c(z);
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; 8];
    use Spin::{Down, Up};
    let (s0, s1, s2) = (spin_slot(&[Up, Up, Down]), spin_slot(&[Up, Down, Up]), spin_slot(&[Down, Up, Up]));
    for k in 0..grid.len() {
        let p = grid.point(k);
        let (x, y, z) = (p[0], p[1], p[2]);
        comps[s0][k] = f(x, y, z);
        comps[s1][k] = factors[0] * f(x, z, y);
        comps[s2][k] = factors[1] * f(z, y, x);
    }
    SpinorField::new(grid.clone(), comps)
}
