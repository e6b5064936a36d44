//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! if any criterion failed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use pilotwave::configspace::{build_field, Field, GridSpec, Initializer, Orbital, ParticleSpec, Symmetry};
use pilotwave::error::Result;
use pilotwave::evolution::diagnostics::{exchange_gradient_identity, quantum_potential_asymmetry};
use pilotwave::evolution::{gauge_transform, quantum_potential, PotentialSpec, SplitStepper, StepperConfig};
use pilotwave::guidance::{bohm_velocity, integrate_bohm, IntegrationOptions, SnapshotSeries, VectorPotentialSpec};
use pilotwave::scenario::{auto_paths, bundled, bundled_text, densest_point, run_scenario, RunOptions, RunReport, ScenarioConfig, Stage};
use pilotwave::symmetry::{
    classify, pairwise_phase_consistency, phase_distance, winding_phase_table, ExchangePath, Tolerances, Verdict,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { passed, detail: detail.into() })
}

fn herm(n: usize) -> Orbital {
    Orbital::Hermite { levels: vec![n], omega: 1.0, center: vec![], momentum: vec![] }
}

fn out_dir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("pilotwave-acceptance-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(cfg: &ScenarioConfig, stages: Vec<Stage>) -> Result<RunReport> {
    run_scenario(cfg, &RunOptions { out_dir: out_dir(&cfg.scenario.name), stages })
}

fn failed_names(r: &RunReport) -> String {
    let f: Vec<String> = r.failed_checks().iter().map(|c| format!("{} = {}", c.name, c.value)).collect();
    if f.is_empty() {
        format!("{} checks", r.checks.len())
    } else {
        format!("failed: {}", f.join(", "))
    }
}

fn unitarity() -> Result<Outcome> {
    let g = GridSpec::uniform(1, 1, 256, 8.0)?;
    let f = build_field(&g, &Initializer::Product { orbitals: vec![herm(0)] })?;
    let mut s = SplitStepper::for_field(&f, PotentialSpec::Harmonic { stiffness: 1.0, center: vec![] }, StepperConfig::new(1e-3))?;
    let end = s.evolve(&f, 10_000, 10_000)?;
    let drift = (end[end.len() - 1].norm_sqr() - f.norm_sqr()).abs();
    outcome(drift < 1e-9, format!("norm drift {drift:.2e} after 1e4 steps"))
}

fn free_gaussian() -> Result<Outcome> {
    let sigma0 = 1.0;
    let g = GridSpec::uniform(1, 1, 512, 20.0)?;
    let f = build_field(&g, &Initializer::Product { orbitals: vec![Orbital::Gaussian { center: vec![0.0], sigma: sigma0, momentum: vec![] }] })?;
    let dt = 1e-3;
    let mut s = SplitStepper::for_field(&f, PotentialSpec::Zero, StepperConfig::new(dt))?;
    let snaps = s.evolve(&f, 1000, 10)?;
    let series = SnapshotSeries::new(&snaps, VectorPotentialSpec::Zero)?;
    let starts: Vec<Vec<f64>> = (0..100).map(|k| vec![-3.0 + 6.0 * (k as f64 + 0.5) / 100.0]).collect();
    let e = integrate_bohm(&series, &starts, IntegrationOptions::new(dt))?;
    // spreading of |psi|^2 with standard deviation sigma0, hbar = m = 1
    let sigma = |t: f64| sigma0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt();
    let mut worst: f64 = 0.0;
    for (x0, traj) in starts.iter().zip(&e.positions) {
        for (t, x) in e.times.iter().zip(traj) {
            let want = x0[0] * sigma(*t) / sigma0;
            worst = worst.max((x[0] - want).abs() / want.abs());
        }
    }
    outcome(worst < 1e-3 && e.halted() == 0, format!("max relative error {worst:.2e} over t in [0, 1]"))
}

fn symmetry_classification() -> Result<Outcome> {
    let g = GridSpec::uniform(2, 1, 256, 8.0)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (sym, want, target) in [(Symmetry::Symmetric, Verdict::Boson, 0.0), (Symmetry::Antisymmetric, Verdict::Fermion, PI)] {
        let f = build_field(&g, &Initializer::Symmetrized { orbitals: vec![herm(0), herm(1)], symmetry: sym })?;
        let start = densest_point(&f);
        let r = classify(&f, &auto_paths(&f, &start)?, Tolerances::analytic())?;
        let dg = phase_distance(r.pair_gamma[0].1, target);
        let worst = r.velocity_residual.max(r.drift_residual).max(r.amplitude_residual);
        ok &= r.verdict == want && dg < 1e-6 && worst < 1e-6;
        detail.push(format!("{}: |gamma - {target:.4}| = {dg:.1e}, residuals <= {worst:.1e}", r.verdict.label()));
    }
    outcome(ok, detail.join("; "))
}

fn anyon_winding() -> Result<Outcome> {
    let nu = 0.5;
    let g = GridSpec::uniform(1, 2, 256, 6.0)?;
    let f = build_field(&g, &Initializer::Anyon { nu, radius: 2.0, width: 0.5 })?;
    let table = winding_phase_table(&f, &[2.0, 0.3], &[-2, -1, 1, 2], 1e-3)?;
    let mut worst: f64 = 0.0;
    for r in &table.rows {
        // n half turns sweep the relative angle by n pi
        let oracle = nu * r.winding as f64 * PI;
        worst = worst.max((r.raw - oracle).abs());
    }
    let raw = |n: i32| table.rows.iter().find(|r| r.winding == n).map(|r| r.raw).unwrap_or(f64::NAN);
    let hand = (raw(1) + raw(-1)).abs().max((raw(2) + raw(-2)).abs());
    outcome(worst < 1e-3 && hand < 1e-3, format!("max |gamma(n) - n pi/2| = {worst:.1e}, handedness mismatch {hand:.1e}"))
}

fn pairwise_consistency() -> Result<Outcome> {
    let g = GridSpec::uniform(3, 1, 128, 7.0)?;
    let f = build_field(&g, &Initializer::Symmetrized { orbitals: vec![herm(0), herm(1), herm(2)], symmetry: Symmetry::Antisymmetric })?;
    let start = densest_point(&f);
    let paths = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| ExchangePath::direct(&g, f.frame(), i, j, &start))
        .collect::<Result<Vec<_>>>()?;
    let r = pairwise_phase_consistency(&f, (0, 1, 2), &paths, 1e-6)?;
    let worst = r.gammas.iter().map(|&(_, gam)| phase_distance(gam, PI)).fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && r.composition_error < 1e-6 && r.gammas.len() == 3,
        format!("max |gamma_ij - pi| = {worst:.1e}, composition error {:.1e}", r.composition_error),
    )
}

fn degenerate_detection() -> Result<Outcome> {
    let g = GridSpec::uniform(2, 1, 256, 8.0)?;
    let bx = |lo: f64, hi: f64| Orbital::BoxMode { lo: vec![lo], hi: vec![hi], mode: vec![1], momentum: vec![0.3] };
    let init = Initializer::DisjointBox { first: bx(-6.0, -1.0), second: bx(1.0, 6.0), alpha: 2.0, beta: 0.7 };
    let f = build_field(&g, &init)?;
    let start = densest_point(&f);
    let r = classify(&f, &auto_paths(&f, &start)?, Tolerances::analytic())?;
    let passed = r.verdict == Verdict::Degenerate
        && r.velocity_residual < 1e-6
        && r.drift_residual > 0.1
        && r.amplitude_residual > 0.1;
    outcome(
        passed,
        format!(
            "verdict {}, velocity {:.1e} (< 1e-6), drift {:.1e} (> 0.1), amplitude {:.2} (> 0.1)",
            r.verdict.label(),
            r.velocity_residual,
            r.drift_residual,
            r.amplitude_residual
        ),
    )
}

fn equivariance() -> Result<Outcome> {
    let r = run(&bundled("equilibrium_doublewell")?, vec![])?;
    let tv: Vec<f64> = r.checks.iter().filter(|c| c.name.starts_with("equilibrium.tv")).map(|c| c.value).collect();
    let worst = tv.iter().cloned().fold(0.0, f64::max);
    outcome(r.passed() && tv.len() == 5 && worst < 0.05, format!("{} snapshot times, max TV {worst:.4}; {}", tv.len(), failed_names(&r)))
}

fn nelson_stationarity() -> Result<Outcome> {
    let text = r#"
[scenario]
name = "nelson_ground_state"
seed = 5

[grid]
particles = 1
dim = 1
points = 256
extent_length = 8.0

[potential]
kind = "harmonic"
stiffness = 1.0

[initial]
kind = "product"
orbitals = [{ kind = "hermite", levels = [0] }]

[stepper]
dt_time = 0.001

[analysis.equilibrium]
count = 10000
mode = "nelson_stationarity"
duration_time = 1.0
dt_time = 0.001
tv_max = 0.05
control_tv_min = 0.2
variance_expected = 0.5
variance_tolerance = 0.02
"#;
    let r = run(&ScenarioConfig::from_toml(text)?, vec![])?;
    // stationary Ornstein-Uhlenbeck variance hbar / (2 m omega)
    let oracle = 1.0 / 2.0;
    let var = r.payloads["equilibrium"]["variance"].as_f64().unwrap_or(f64::NAN);
    let tv = r.payloads["equilibrium"]["metric"]["tv"].as_f64().unwrap_or(f64::NAN);
    let control = r.payloads["equilibrium"]["control"]["tv"].as_f64().unwrap_or(f64::NAN);
    outcome(
        r.passed() && (var - oracle).abs() <= 0.02 && tv < 0.05 && control > 0.2,
        format!("TV {tv:.4}, variance {var:.4}, control TV {control:.3}"),
    )
}

fn coincidence() -> Result<Outcome> {
    let sym = bundled("coincidence")?;
    let a = run(&sym, vec![])?;
    let sep = a.checks.iter().find(|c| c.name == "coincidence.separation").map_or(f64::NAN, |c| c.value);
    let anti_text = bundled_text("coincidence")
        .unwrap_or_default()
        .replace("symmetry = \"symmetric\"", "symmetry = \"antisymmetric\"")
        .replace("diagonal_count = 1000", "diagonal_count = 0")
        .replace("name = \"coincidence\"", "name = \"coincidence_antisymmetric\"");
    let b = run(&ScenarioConfig::from_toml(&anti_text)?, vec![])?;
    let crossings = b.checks.iter().find(|c| c.name == "coincidence.crossings").map_or(f64::NAN, |c| c.value);
    let trajectories = b.payloads["coincidence"]["sampled"]["trajectories"].as_u64().unwrap_or(0);
    outcome(
        a.passed() && b.passed() && sep < 1e-6 && crossings == 0.0 && trajectories == 10_000,
        format!("coincident separation {sep:.1e} L; {crossings} crossings in {trajectories} antisymmetric trajectories"),
    )
}

fn gauge_invariance() -> Result<Outcome> {
    // mass 2 and charge 1/2 so the (q/m) A coupling is exercised
    let g = GridSpec::uniform(1, 1, 2048, 8.0)?;
    let particle = ParticleSpec { mass: 2.0, charge: 0.5 };
    let orb = Orbital::Gaussian { center: vec![-0.8], sigma: 1.0, momentum: vec![0.7] };
    let f = build_field(&g, &Initializer::Product { orbitals: vec![orb] })?.with_particles(vec![particle])?;
    let (l, amp, q) = (8.0, 0.4, particle.charge);
    let lambda = move |x: &[f64]| amp * (PI * x[0] / l).sin();
    let minus_grad = move |x: &[f64]| [-amp * PI / l * (PI * x[0] / l).cos(), 0.0, 0.0];
    let a2 = VectorPotentialSpec::Custom(Arc::new(minus_grad));
    let dt = 2e-5;
    let mut s = SplitStepper::for_field(&f, PotentialSpec::Harmonic { stiffness: 1.0, center: vec![] }, StepperConfig::new(dt))?;
    let snaps = s.evolve(&f, 50_000, 500)?;
    let gauged: Vec<Field> = snaps.iter().map(|x| gauge_transform(x, lambda, q)).collect::<Result<_>>()?;
    let starts = pilotwave::ensemble::sample_density(&f, 100, 3)?;
    let mut dv: f64 = 0.0;
    for x in &starts {
        let v1 = bohm_velocity(&f, x, &VectorPotentialSpec::Zero, 1e-6)?;
        let v2 = bohm_velocity(&gauged[0], x, &a2, 1e-6)?;
        dv = v1.iter().zip(&v2).map(|(a, b)| (a - b).abs()).fold(dv, f64::max);
    }
    let e1 = integrate_bohm(&SnapshotSeries::new(&snaps, VectorPotentialSpec::Zero)?, &starts, IntegrationOptions::new(1e-3))?;
    let e2 = integrate_bohm(&SnapshotSeries::new(&gauged, a2)?, &starts, IntegrationOptions::new(1e-3))?;
    let mut dx: f64 = 0.0;
    for (p, q) in e1.positions.iter().zip(&e2.positions) {
        for (a, b) in p.iter().zip(q) {
            dx = a.iter().zip(b).map(|(u, w)| (u - w).abs()).fold(dx, f64::max);
        }
    }
    outcome(dv < 1e-6 && dx < 1e-6, format!("max velocity difference {dv:.1e}, max trajectory difference {dx:.1e}"))
}

fn spin_protocol() -> Result<Outcome> {
    let anti = bundled("spin_boxes")?;
    let mut sym = anti.clone();
    sym.scenario.name = "spin_boxes_symmetric".into();
    if let Some(s) = sym.analysis.spin.as_mut() {
        s.character = pilotwave::spin_protocol::Character::Symmetric;
        s.three_particle_points = 0;
    }
    let a = run(&anti, vec![])?;
    let b = run(&sym, vec![])?;
    let value = |r: &RunReport, n: &str| r.checks.iter().find(|c| c.name == n).map_or(f64::NAN, |c| c.value);
    let dom = value(&a, "spin.dominance.walls_up").min(value(&b, "spin.dominance.walls_up"));
    let traj = value(&a, "spin.effective_trajectories").max(value(&b, "spin.effective_trajectories"));
    let fac = value(&a, "spin.scalar.factor_error").max(value(&b, "spin.scalar.factor_error"));
    let three = a.checks.iter().filter(|c| c.name.starts_with("spin.three.") && c.passed).count();
    outcome(
        a.passed() && b.passed() && three == 4,
        format!(
            "min dominance {dom:.10}, trajectory deviation {traj:.1e}, |c -+ 1| {fac:.1e}, three-particle labels {three}/4; {} / {}",
            failed_names(&a),
            failed_names(&b)
        ),
    )
}

fn quantum_potential_identities() -> Result<Outcome> {
    let g1 = GridSpec::uniform(1, 1, 128, 6.0)?;
    let g2 = GridSpec::uniform(2, 1, 128, 6.0)?;
    let a = Orbital::Gaussian { center: vec![-0.5], sigma: 0.7, momentum: vec![0.4] };
    let b = herm(2);
    let qa = quantum_potential(&build_field(&g1, &Initializer::Product { orbitals: vec![a.clone()] })?);
    let qb = quantum_potential(&build_field(&g1, &Initializer::Product { orbitals: vec![b.clone()] })?);
    let prod = build_field(&g2, &Initializer::Product { orbitals: vec![a.clone(), b.clone()] })?;
    let q = quantum_potential(&prod);
    let mut add: f64 = 0.0;
    for (k, &v) in q.iter().enumerate() {
        let (i, j) = (k / 128, k % 128);
        if v.is_finite() && qa[i].is_finite() && qb[j].is_finite() {
            add = add.max((v - qa[i] - qb[j]).abs());
        }
    }
    let sym = build_field(&g2, &Initializer::Symmetrized { orbitals: vec![a, b], symmetry: Symmetry::Symmetric })?;
    let asym = quantum_potential_asymmetry(&sym, 0, 1)?;
    let ident = exchange_gradient_identity(&sym, 0, 1)?;
    outcome(
        add < 1e-8 && asym < 1e-8 && ident < 1e-8,
        format!("additivity {add:.1e}, Q exchange asymmetry {asym:.1e}, R grad R~ - R~ grad R {ident:.1e}"),
    )
}

type Criterion = (u32, &'static str, f64, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (1, "unitarity", 5.0, unitarity),
        (2, "free Gaussian trajectories", 10.0, free_gaussian),
        (3, "symmetry classification", 30.0, symmetry_classification),
        (4, "anyon winding table", 30.0, anyon_winding),
        (5, "three-particle pairwise consistency", 60.0, pairwise_consistency),
        (6, "degenerate detection", 30.0, degenerate_detection),
        (7, "equivariance", 300.0, equivariance),
        (8, "Nelson stationarity", 120.0, nelson_stationarity),
        (9, "coincidence invariance", 300.0, coincidence),
        (10, "gauge invariance", 30.0, gauge_invariance),
        (11, "spin protocol", 600.0, spin_protocol),
        (12, "quantum-potential identities", 30.0, quantum_potential_identities),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || p == &n.to_string()) {
            continue;
        }
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        let (passed, detail) = match r {
            Ok(o) => (o.passed && secs < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "{} {n:>2} {name}: {detail} [{secs:.1} s of {budget:.0} s]",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
