//! Scenario orchestration: build the state, evolve, integrate, analyze and
//! write the artifacts.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::config::*;
use super::report::{Check, Relation, RunReport, Timing};
use crate::configspace::field::{Field, Frame};
use crate::configspace::init::build_field;
use crate::configspace::local::Guiding;
use crate::configspace::pwf::{write_dump, Dump};
use crate::configspace::GridSpec;
use crate::ensemble::{
    coincidence_monitor, equilibrium_metric, equivariance_test, nelson_stationarity_test, sample_density,
    DensityHistogram, HALT_BUDGET,
};
use crate::error::{Error, Result};
use crate::evolution::pauli::PauliStepper;
use crate::evolution::stepper::SplitStepper;
use crate::guidance::{
    integrate_bohm, integrate_nelson, IntegrationOptions, NelsonParams, Scheme, SnapshotSeries, TrajectoryEnsemble,
    VectorPotentialSpec,
};
use crate::spin_protocol::{
    build_measured_state, component_dominance, effective_component_agreement, flipped_scalar, spin_flip_and_merge,
    three_particle_state, verify_scalar_symmetry, verify_total_symmetry, Character, FlipPlan,
};
use crate::symmetry::{
    classify, halton_point, pairwise_phase_consistency, phase_distance, winding_phase_table, ExchangePath,
};

/// Pipeline stages; a CLI verb runs a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Evolve,
    Classify,
    Winding,
    Pairwise,
    Trajectories,
    Equilibrium,
    Coincidence,
    Spin,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Stages to run; empty runs everything the config enables.
    pub stages: Vec<Stage>,
}

/// Seed of one random stream derived from the master seed.
pub fn sub_seed(master: u64, stream: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(master);
    r.set_stream(stream);
    r.next_u64()
}

const STREAM_STARTS: u64 = 1;
const STREAM_NELSON: u64 = 2;
const STREAM_EQUILIBRIUM: u64 = 3;
const STREAM_DIAGONAL: u64 = 4;
const STREAM_COINCIDENCE: u64 = 5;
const STREAM_SPIN: u64 = 6;

struct Runner<'a> {
    cfg: &'a ScenarioConfig,
    out: &'a Path,
    report: RunReport,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl<'a> Runner<'a> {
    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Option<T> {
        let t0 = Instant::now();
        let r = f(self);
        self.report.timings.push(Timing { stage: stage.into(), seconds: t0.elapsed().as_secs_f64() });
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                let c = Check::new(format!("{stage}.completed"), 0.0, Relation::Equal, 1.0).with_detail(e.to_string());
                self.report.checks.push(c);
                None
            }
        }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.out.join(name), bytes)?;
        self.report.artifacts.push(name.to_string());
        Ok(())
    }

    fn dump(&mut self, name: &str, d: &Dump) -> Result<()> {
        let mut buf = Vec::new();
        write_dump(&mut buf, d)?;
        self.write(name, &buf)
    }

    fn payload<T: Serialize>(&mut self, key: &str, v: &T) {
        self.report.payloads.insert(key.to_string(), to_value(v));
    }

    fn check(&mut self, c: Check) {
        self.report.checks.push(c);
    }

    fn seed(&self, stream: u64) -> u64 {
        sub_seed(self.cfg.scenario.seed, stream)
    }

    fn evolve(&mut self, field: &Field) -> Result<Vec<Field>> {
        let s = &self.cfg.stepper;
        let mut stepper = SplitStepper::for_field(field, self.cfg.potential.clone(), self.cfg.stepper_config())?;
        let mut snaps = vec![field.clone()];
        let mut f = field.clone();
        for k in 1..=s.steps {
            f = stepper.step(&f)?;
            if k % s.snapshot_stride == 0 || k == s.steps {
                snaps.push(f.clone());
            }
        }
        let (n0, n1) = (field.norm_sqr(), f.norm_sqr());
        self.payload(
            "evolution",
            &serde_json::json!({
                "steps": s.steps,
                "snapshots": snaps.len(),
                "snapshot_times": snaps.iter().map(|f| f.time()).collect::<Vec<_>>(),
                "norm_initial": n0,
                "norm_final": n1,
            }),
        );
        if let Some(max) = s.norm_drift_max {
            self.check(Check::new("evolution.norm_drift", (n1 - n0).abs(), Relation::AtMost, max));
        }
        if s.dump_snapshots {
            for (k, f) in snaps.iter().enumerate() {
                self.dump(&format!("snapshot_{k:04}.pwf"), &Dump::from_field(f))?;
            }
        }
        self.dump("final.pwf", &Dump::from_field(&f))?;
        Ok(snaps)
    }

    fn classify(&mut self, f: &Field, b: &SymmetryBlock) -> Result<()> {
        let tol = b.tolerances();
        let start = b.start_length.clone().unwrap_or_else(|| densest_point(f));
        let rep = classify(f, &auto_paths(f, &start)?, tol)?;
        self.write("symmetry_report.txt", rep.to_text().as_bytes())?;
        self.write("symmetry_report.json", rep.to_json()?.as_bytes())?;
        self.payload("symmetry", &rep);
        if let Some(want) = &b.expect {
            let label = rep.verdict.label();
            let kind = label.split('(').next().unwrap_or_default();
            self.check(Check::label("symmetry.verdict", kind, want));
            let target = match want.as_str() {
                "boson" => Some(0.0),
                "fermion" => Some(PI),
                _ => None,
            };
            if let Some(target) = target {
                for &((i, j), g) in &rep.pair_gamma {
                    let c = Check::new(format!("symmetry.gamma.{}{}", i + 1, j + 1), phase_distance(g, target), Relation::AtMost, tol.phase);
                    self.check(c);
                }
                let rel = |v: f64, s: f64| v / s.max(1.0);
                let v = rep.pairs.iter().map(|p| rel(p.velocity, p.velocity_scale)).fold(0.0, f64::max);
                let d = rep.pairs.iter().map(|p| rel(p.drift, p.drift_scale)).fold(0.0, f64::max);
                self.check(Check::new("symmetry.residual.velocity", v, Relation::AtMost, tol.residual));
                self.check(Check::new("symmetry.residual.drift", d, Relation::AtMost, tol.residual));
                self.check(Check::new("symmetry.residual.amplitude", rep.amplitude_residual, Relation::AtMost, tol.residual));
            }
        }
        Ok(())
    }

    fn winding(&mut self, f: &Field, b: &WindingBlock) -> Result<()> {
        let start = b.start_length.clone().unwrap_or_else(|| densest_point(f));
        let table = winding_phase_table(f, &start, &b.windings, b.phase_tolerance)?;
        self.write("winding_table.txt", table.to_text().as_bytes())?;
        self.payload("winding", &table);
        let worst = table.rows.iter().map(|r| r.error).fold(0.0, f64::max);
        self.check(Check::new("winding.consistency", worst, Relation::AtMost, b.phase_tolerance));
        if let Some(g) = b.gamma_expected {
            for r in &table.rows {
                let c = Check::new(format!("winding.n{}", r.winding), (r.raw - r.winding as f64 * g).abs(), Relation::AtMost, b.phase_tolerance);
                self.check(c);
            }
        }
        for r in table.rows.iter().filter(|r| r.winding > 0) {
            if let Some(m) = table.rows.iter().find(|m| m.winding == -r.winding) {
                let c = Check::new(format!("winding.handedness.{}", r.winding), (r.raw + m.raw).abs(), Relation::AtMost, b.phase_tolerance);
                self.check(c);
            }
        }
        Ok(())
    }

    fn pairwise(&mut self, f: &Field, b: &PairwiseBlock) -> Result<()> {
        let [i, j, k] = b.triple;
        let start = b.start_length.clone().unwrap_or_else(|| densest_point(f));
        let g = f.grid();
        let paths = [(i, j), (i, k), (j, k)]
            .iter()
            .map(|&(a, c)| {
                if g.dim == 1 {
                    ExchangePath::direct(g, Frame::Absolute, a, c, &start)
                } else {
                    ExchangePath::rotation(g, a, c, &start, 1, 0.0)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let rep = pairwise_phase_consistency(f, (i, j, k), &paths, b.phase_tolerance)?;
        self.payload("pairwise", &rep);
        self.check(Check::new("pairwise.spread", rep.spread, Relation::AtMost, b.phase_tolerance));
        self.check(Check::new("pairwise.composition", rep.composition_error, Relation::AtMost, b.phase_tolerance));
        self.check(Check::new("pairwise.relation", rep.relation_error, Relation::AtMost, b.phase_tolerance));
        if let Some(want) = b.gamma_expected {
            for &((a, c), gam) in &rep.gammas {
                let chk = Check::new(format!("pairwise.gamma.{}{}", a + 1, c + 1), phase_distance(gam, want), Relation::AtMost, b.phase_tolerance);
                self.check(chk);
            }
        }
        Ok(())
    }

    fn trajectories(&mut self, snaps: &[Field], b: &TrajectoryBlock) -> Result<()> {
        let f0 = &snaps[0];
        let series = SnapshotSeries::new(snaps, VectorPotentialSpec::Zero)?;
        let starts = match b.starts {
            StartRule::Halton => halton_starts(f0, b.count, 1e-3)?,
            StartRule::Sampled => sample_density(f0, b.count, self.seed(STREAM_STARTS))?,
        };
        let dt = b.dt_time.unwrap_or(self.cfg.stepper.dt_time);
        let e = match b.kind {
            TrajectoryKind::Bohm => {
                integrate_bohm(&series, &starts, IntegrationOptions { dt, record_every: b.record_every, scheme: Scheme::Rk4 })?
            }
            TrajectoryKind::Nelson => {
                let p = NelsonParams {
                    seed: self.seed(STREAM_NELSON),
                    dt,
                    diffusion_scale: b.diffusion_scale,
                    drift: true,
                    record_every: b.record_every,
                };
                integrate_nelson(&series, &starts, f0.hbar(), p)?
            }
        };
        let g = f0.grid();
        let mut csv = Vec::new();
        e.write_csv(&mut csv, g.n_particles, g.dim)?;
        self.write("trajectories.csv", &csv)?;
        self.payload("trajectories", &ensemble_summary(&e));
        self.check(Check::new("trajectories.halted_fraction", e.halted() as f64 / e.len() as f64, Relation::AtMost, HALT_BUDGET));
        Ok(())
    }

    fn histograms(&mut self, tag: &str, hists: &[(DensityHistogram, Vec<f64>)]) -> Result<()> {
        for (h, r) in hists {
            let mut csv = Vec::new();
            h.write_csv(&mut csv, r)?;
            self.write(&format!("histogram_{tag}_axis{}.csv", h.axes[0].axis + 1), &csv)?;
        }
        Ok(())
    }

    fn equilibrium(&mut self, snaps: &[Field], b: &EquilibriumBlock) -> Result<()> {
        let f0 = &snaps[0];
        let dt = b.dt_time.unwrap_or(self.cfg.stepper.dt_time);
        match b.mode {
            EquilibriumMode::Equivariance => {
                let last = snaps.len() - 1;
                let compared: Vec<(usize, Field)> = (0..=last)
                    .filter(|k| k % b.compare_every == 0 || *k == last)
                    .map(|k| (k, snaps[k].clone()))
                    .collect();
                let interval = self.cfg.stepper.dt_time * (self.cfg.stepper.snapshot_stride * b.compare_every) as f64;
                let record_every = ((interval / dt).round() as usize).max(1);
                let starts = sample_density(f0, b.count, self.seed(STREAM_EQUILIBRIUM))?;
                let series = SnapshotSeries::new(snaps, VectorPotentialSpec::Zero)?;
                let e = integrate_bohm(&series, &starts, IntegrationOptions { dt, record_every, scheme: Scheme::Rk4 })?;
                let fields: Vec<Field> = compared.iter().map(|(_, f)| f.clone()).collect();
                let metrics = equivariance_test(&fields, &e, b.bins)?;
                for ((k, s), m) in compared.iter().zip(&metrics) {
                    let i = e.times.iter().position(|&u| (u - s.time()).abs() <= 1e-9 * s.time().abs().max(1.0));
                    if let Some(i) = i {
                        let (_, hists) = equilibrium_metric(s, &e.positions_at(i), b.bins, "")?;
                        self.histograms(&format!("s{k:04}"), &hists)?;
                    }
                    let c = Check::new(format!("equilibrium.tv.s{k:04}"), m.tv, Relation::AtMost, b.tv_max);
                    self.check(c.with_detail(format!("t = {}", m.time)));
                }
                self.payload("equilibrium", &metrics);
            }
            EquilibriumMode::NelsonStationarity => {
                let t_end = b.duration_time.unwrap_or_default();
                let params = NelsonParams::new(self.seed(STREAM_EQUILIBRIUM), dt);
                let run = nelson_stationarity_test(f0, params, b.count, t_end)?;
                let last = run.ensemble.times.len() - 1;
                let pts = run.ensemble.positions_at(last);
                let (_, hists) = equilibrium_metric(f0, &pts, b.bins, "")?;
                self.histograms("final", &hists)?;
                self.check(Check::new("equilibrium.tv", run.metric.tv, Relation::AtMost, b.tv_max));
                let var = variance(pts.iter().map(|x| x[0]));
                if let Some(v) = b.variance_expected {
                    self.check(Check::new("equilibrium.variance_error", (var - v).abs(), Relation::AtMost, b.variance_tolerance));
                }
                let mut payload = serde_json::json!({ "metric": to_value(&run.metric), "variance": var });
                if let Some(min) = b.control_tv_min {
                    let control = nelson_stationarity_test(f0, NelsonParams { drift: false, ..params }, b.count, t_end)?;
                    self.check(Check::new("equilibrium.control_tv", control.metric.tv, Relation::Above, min));
                    payload["control"] = to_value(&control.metric);
                }
                self.payload("equilibrium", &payload);
            }
        }
        Ok(())
    }

    fn coincidence(&mut self, snaps: &[Field], b: &CoincidenceBlock) -> Result<()> {
        let f0 = &snaps[0];
        let g = f0.grid();
        let series = SnapshotSeries::new(snaps, VectorPotentialSpec::Zero)?;
        let opts = IntegrationOptions::new(b.dt_time.unwrap_or(self.cfg.stepper.dt_time));
        let mut payload = serde_json::Map::new();
        if b.diagonal_count > 0 {
            let starts = diagonal_starts(f0, b.diagonal_count, self.seed(STREAM_DIAGONAL))?;
            let e = integrate_bohm(&series, &starts, opts)?;
            let mut csv = Vec::new();
            e.write_csv(&mut csv, g.n_particles, g.dim)?;
            self.write("coincidence_diagonal.csv", &csv)?;
            let s = coincidence_monitor(&e, g.dim)?;
            let l = g.extent.iter().cloned().fold(0.0, f64::max);
            self.check(Check::new(
                "coincidence.separation",
                s.max_coincident_separation / l,
                Relation::AtMost,
                b.separation_max_relative,
            ));
            payload.insert("diagonal".into(), serde_json::json!({
                "trajectories": e.len(),
                "halted": e.halted(),
                "max_separation": s.max_coincident_separation,
            }));
        }
        if b.sampled_count > 0 {
            let starts = sample_density(f0, b.sampled_count, self.seed(STREAM_COINCIDENCE))?;
            let e = integrate_bohm(&series, &starts, opts)?;
            let s = coincidence_monitor(&e, g.dim)?;
            if let Some(max) = b.crossings_max {
                self.check(Check::new("coincidence.crossings", s.total_crossings as f64, Relation::AtMost, max as f64));
            }
            let min = s.min_distance.iter().cloned().fold(f64::INFINITY, f64::min);
            payload.insert("sampled".into(), serde_json::json!({
                "trajectories": e.len(),
                "halted": e.halted(),
                "crossings": s.total_crossings,
                "min_distance": min,
            }));
        }
        self.payload("coincidence", &payload);
        Ok(())
    }

    fn spin(&mut self, b: &SpinBlock) -> Result<()> {
        let grid = self.cfg.grid.spec()?;
        let particles = self.cfg.particles.specs(grid.n_particles)?;
        let cfg = self.cfg.stepper_config();
        let layout = b.layout();
        let s0 = build_measured_state(&grid, &layout, &b.orbitals, b.character)?
            .with_particles(particles)?
            .with_hbar(cfg.hbar);
        self.dump("spin_initial.pwf", &Dump::from_spinor(&s0))?;
        let tol = crate::symmetry::Tolerances { residual: b.symmetry_tolerance, ..Default::default() };
        let sign = match b.character {
            Character::Symmetric => 1.0,
            Character::Antisymmetric => -1.0,
        };
        let expected = if sign > 0.0 { "boson" } else { "fermion" };

        // walls up
        let mut stepper = PauliStepper::for_spinor(&s0, layout.potential(), self.cfg.magnetic.clone(), cfg)?;
        let stride = self.cfg.stepper.snapshot_stride;
        let mut snaps = vec![s0.clone()];
        let mut done = 0;
        while done < b.walls_up_steps {
            let k = stride.min(b.walls_up_steps - done);
            let next = stepper.evolve(snaps.last().expect("non-empty"), k)?;
            snaps.push(next);
            done += k;
        }
        let seed = self.seed(STREAM_SPIN);
        let mut dominance = Vec::new();
        for (tag, s) in [("initial", &snaps[0]), ("walls_up", snaps.last().expect("non-empty"))] {
            let samples = sample_density(s, b.dominance_samples, seed)?;
            let d = component_dominance(s, &samples, b.dominance_floor)?;
            self.check(Check::new(format!("spin.dominance.{tag}"), d.min_dominance, Relation::AtLeast, b.dominance_min));
            dominance.push(d);
        }
        self.payload("spin_dominance", &dominance);
        if b.trajectories > 0 && snaps.len() > 1 {
            let starts = sample_density(&snaps[0], b.trajectories, seed.wrapping_add(1))?;
            let a = effective_component_agreement(&snaps, &starts, IntegrationOptions::new(cfg.dt))?;
            self.check(Check::new("spin.effective_trajectories", a.max_deviation, Relation::AtMost, b.trajectory_tolerance_length));
            self.payload("spin_trajectories", &a);
        }

        // flip and merge, from the prepared state
        let plan = FlipPlan { mu: b.flip.mu, b: b.flip.field_strength, merge_steps: b.flip.merge_steps };
        let out = spin_flip_and_merge(&s0, &layout, cfg, plan)?;
        self.dump("spin_scalar.pwf", &Dump::from_field(&out.scalar))?;
        self.check(Check::new("spin.flip.fidelity", out.fidelity, Relation::AtLeast, b.flip.fidelity_min));
        let sym = verify_scalar_symmetry(&out.scalar, &tol)?;
        let c = sym.pairs[0].value();
        self.check(Check::label("spin.scalar.verdict", &sym.verdict.label(), expected));
        self.check(Check::new("spin.scalar.factor_error", (c - sign).norm(), Relation::AtMost, b.symmetry_tolerance));
        self.check(Check::new("spin.scalar.eigen_residual", sym.pairs[0].residual, Relation::AtMost, b.symmetry_tolerance));
        self.write("spin_scalar_symmetry.txt", sym.to_text().as_bytes())?;
        self.payload(
            "spin_flip",
            &serde_json::json!({
                "fidelity": out.fidelity,
                "field_strength_used": out.b_used,
                "pulse_steps": out.pulse_steps,
                "flipped_boxes": out.flipped_boxes,
                "scalar": to_value(&sym),
            }),
        );

        if b.three_particle_points > 0 {
            let g3 = GridSpec::uniform(3, 1, b.three_particle_points, 6.0)?;
            let bump = |lo: f64, hi: f64| {
                move |x: f64| {
                    if x > lo && x < hi {
                        Complex64::new((PI * (x - lo) / (hi - lo)).sin(), 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }
            };
            let one = Complex64::new(sign, 0.0);
            let mut verdicts = serde_json::Map::new();
            for (tag, factors, want) in [("consistent", [one, one], expected), ("inconsistent", [one, -one], "inconsistent")] {
                let s = three_particle_state(&g3, bump(-5.5, -2.5), bump(-1.5, 1.5), bump(2.5, 5.5), sign, factors)?;
                let spinor = verify_total_symmetry(&s, &tol)?;
                let scalar = verify_scalar_symmetry(&flipped_scalar(&s)?, &tol)?;
                self.check(Check::label(format!("spin.three.{tag}.spinor"), &spinor.verdict.label(), want));
                self.check(Check::label(format!("spin.three.{tag}.scalar"), &scalar.verdict.label(), want));
                verdicts.insert(tag.into(), serde_json::json!({ "spinor": to_value(&spinor), "scalar": to_value(&scalar) }));
            }
            self.payload("spin_three_particle", &verdicts);
        }
        Ok(())
    }
}

/// Grid point of largest density (the first one on ties).
pub fn densest_point<G: Guiding + ?Sized>(g: &G) -> Vec<f64> {
    let rho = g.density_vec();
    let k = (0..rho.len()).fold(0, |best, k| if rho[k] > rho[best] { k } else { best });
    g.grid().point(k)
}

/// Exchange paths for every pair: the direct route in one dimension,
/// half turns of both handedness otherwise.
pub fn auto_paths(f: &Field, start: &[f64]) -> Result<Vec<ExchangePath>> {
    let g = f.grid();
    if f.frame() == Frame::Relative {
        return Ok(vec![ExchangePath::relative_rotation(g, start, 1, 0.0)?, ExchangePath::relative_rotation(g, start, -1, 0.0)?]);
    }
    let n = g.n_particles;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if g.dim == 1 {
                out.push(ExchangePath::direct(g, Frame::Absolute, i, j, start)?);
            } else {
                out.push(ExchangePath::rotation(g, i, j, start, 1, 0.0)?);
                out.push(ExchangePath::rotation(g, i, j, start, -1, 0.0)?);
            }
        }
    }
    Ok(out)
}

/// Halton points where `|psi| >= floor * max |psi|`; deterministic.
pub fn halton_starts<G: Guiding + ?Sized>(g: &G, count: usize, floor: f64) -> Result<Vec<Vec<f64>>> {
    let rho = g.density_vec();
    let max = rho.iter().cloned().fold(0.0, f64::max);
    let grid = g.grid();
    let mut out = Vec::with_capacity(count);
    for k in 0..64 * count as u64 {
        let x = halton_point(grid, k);
        if rho[grid.nearest_flat(&x)] >= floor * floor * max {
            out.push(x);
            if out.len() == count {
                break;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(out)
}

/// Configurations drawn from `|psi|^2` with every particle moved onto the
/// first one, kept where the density there is not negligible.
fn diagonal_starts(f: &Field, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let g = f.grid();
    let d = g.dim;
    let max = f.max_abs().powi(2);
    let out: Vec<Vec<f64>> = sample_density(f, count, seed)?
        .into_iter()
        .map(|mut x| {
            for p in 1..g.n_particles {
                for k in 0..d {
                    x[p * d + k] = x[k];
                }
            }
            x
        })
        .filter(|x| f.density(g.nearest_flat(x)) >= 1e-6 * max)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    Ok(out)
}

fn variance(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn ensemble_summary(e: &TrajectoryEnsemble) -> Value {
    let fin = e.final_positions();
    let axes = fin.first().map_or(0, |x| x.len());
    let mean: Vec<f64> = (0..axes).map(|a| fin.iter().map(|x| x[a]).sum::<f64>() / fin.len() as f64).collect();
    serde_json::json!({
        "trajectories": e.len(),
        "halted": e.halted(),
        "recorded_times": e.times.len(),
        "final_mean": mean,
    })
}

/// Runs every enabled (and requested) stage. Configuration problems are
/// errors; failed numerical checks and stage errors end up in the report,
/// which is always written to `report.txt` and `report.json`.
pub fn run_scenario(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let wanted = |s: Stage| opts.stages.is_empty() || opts.stages.contains(&s);
    let mut r = Runner {
        cfg: config,
        out: &opts.out_dir,
        report: RunReport {
            scenario: config.scenario.name.clone(),
            seed: config.scenario.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: to_value(config),
            payloads: Default::default(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            timings: Vec::new(),
        },
    };
    let a = &config.analysis;
    if let Some(spin) = &a.spin {
        if wanted(Stage::Spin) {
            r.timed("spin", |r| r.spin(spin));
        }
    } else if let Some(init) = &config.initial {
        let field = r.timed("initialize", |r| {
            let grid = config.grid.spec()?;
            let f = build_field(&grid, init)?
                .with_particles(config.particles.specs(grid.n_particles)?)?
                .with_hbar(config.particles.hbar_action);
            r.dump("initial.pwf", &Dump::from_field(&f))?;
            Ok(f)
        });
        if let Some(field) = field {
            let needs_snapshots = config.stepper.steps > 0
                && (wanted(Stage::Evolve)
                    || wanted(Stage::Trajectories) && a.trajectories.is_some()
                    || wanted(Stage::Equilibrium)
                        && a.equilibrium.as_ref().is_some_and(|e| e.mode == EquilibriumMode::Equivariance)
                    || wanted(Stage::Coincidence) && a.coincidence.is_some()
                    || wanted(Stage::Classify) && a.symmetry.as_ref().is_some_and(|s| s.at == Snapshot::Final));
            let snaps = if needs_snapshots {
                r.timed("evolve", |r| r.evolve(&field)).unwrap_or_default()
            } else {
                vec![field.clone()]
            };
            if !snaps.is_empty() {
                if let (true, Some(b)) = (wanted(Stage::Classify), &a.symmetry) {
                    let f = if b.at == Snapshot::Final { snaps.last() } else { snaps.first() };
                    let f = f.expect("non-empty").clone();
                    r.timed("classify", |r| r.classify(&f, b));
                }
                if let (true, Some(b)) = (wanted(Stage::Winding), &a.winding) {
                    r.timed("winding", |r| r.winding(&field, b));
                }
                if let (true, Some(b)) = (wanted(Stage::Pairwise), &a.pairwise) {
                    r.timed("pairwise", |r| r.pairwise(&field, b));
                }
                if snaps.len() > 1 {
                    if let (true, Some(b)) = (wanted(Stage::Trajectories), &a.trajectories) {
                        r.timed("trajectories", |r| r.trajectories(&snaps, b));
                    }
                    if let (true, Some(b)) = (wanted(Stage::Coincidence), &a.coincidence) {
                        r.timed("coincidence", |r| r.coincidence(&snaps, b));
                    }
                }
                if let (true, Some(b)) = (wanted(Stage::Equilibrium), &a.equilibrium) {
                    r.timed("equilibrium", |r| r.equilibrium(&snaps, b));
                }
            }
        }
    }
    let report = r.report;
    fs::write(opts.out_dir.join("report.txt"), report.to_text())?;
    fs::write(opts.out_dir.join("report.json"), report.to_json()?)?;
    Ok(report)
}
