use pilotwave::configspace::{GridSpec, Orbital, Spin, SpinorField};
use pilotwave::ensemble::sample_density;
use pilotwave::evolution::{MagneticSpec, PauliStepper, Region, StepperConfig};
use pilotwave::guidance::IntegrationOptions;
use pilotwave::spin_protocol::*;
use pilotwave::symmetry::{Tolerances, Verdict};

const DT: f64 = 0.005;

fn setup(spins: Vec<Spin>, character: Character) -> (BoxLayout, SpinorField) {
    let g = GridSpec::uniform(2, 2, 32, 4.0).unwrap();
    let boxes = vec![
        Region { lo: vec![-3.5, -1.5], hi: vec![-0.5, 1.5] },
        Region { lo: vec![0.5, -1.5], hi: vec![3.5, 1.5] },
    ];
    let orbitals: Vec<Orbital> = boxes
        .iter()
        .zip([[0.8, 0.4], [-0.6, 0.5]])
        .map(|(r, k)| Orbital::BoxMode { lo: r.lo.clone(), hi: r.hi.clone(), mode: vec![1, 1], momentum: k.to_vec() })
        .collect();
    let layout = BoxLayout { boxes, spins, wall_height: 1e6, schedule: vec![] };
    let s = build_measured_state(&g, &layout, &orbitals, character).unwrap();
    (layout, s)
}

#[test]
fn walls_up_components_stay_apart() {
    let (layout, s) = setup(vec![Spin::Up, Spin::Down], Character::Symmetric);
    let cfg = StepperConfig::new(DT);
    let mut stepper = PauliStepper::for_spinor(&s, layout.potential(), MagneticSpec::zero(), cfg).unwrap();
    // snapshots every 4 steps up to t = 0.2
    let mut snaps = vec![s.clone()];
    for _ in 0..10 {
        let next = stepper.evolve(snaps.last().unwrap(), 4).unwrap();
        snaps.push(next);
    }
    for snap in [&snaps[0], &snaps[10]] {
        let samples = sample_density(snap, 2000, 5).unwrap();
        let d = component_dominance(snap, &samples, 1e-6).unwrap();
        assert!(d.min_dominance >= 1.0 - 1e-8, "{d:?}");
    }
    let starts = sample_density(&snaps[0], 100, 9).unwrap();
    let a = effective_component_agreement(&snaps, &starts, IntegrationOptions::new(DT)).unwrap();
    assert!(a.compared >= 80, "{a:?}");
    assert!(a.max_deviation < 1e-6, "{a:?}");
}

#[test]
fn flip_and_merge_keeps_total_symmetry() {
    let tol = Tolerances::analytic();
    for (ch, want) in [(Character::Antisymmetric, Verdict::Fermion)] {
        let (layout, s) = setup(vec![Spin::Up, Spin::Down], ch);
        assert_eq!(verify_total_symmetry(&s, &tol).unwrap().verdict, want);
        let plan = FlipPlan { mu: 1.0, b: 4.0 * std::f64::consts::PI, merge_steps: 20 };
        let out = spin_flip_and_merge(&s, &layout, StepperConfig::new(DT), plan).unwrap();
        assert_eq!(out.pulse_steps, 50);
        assert!(out.fidelity > 1.0 - 1e-5, "{}", out.fidelity);
        let r = verify_scalar_symmetry(&out.scalar, &tol).unwrap();
        assert_eq!(r.verdict, want, "{}", r.to_text());
        let c = r.pairs[0].value();
        let sign = if want == Verdict::Boson { 1.0 } else { -1.0 };
        assert!((c.re - sign).abs() < 1e-6 && c.im.abs() < 1e-6, "{c}");
        assert!(r.pairs[0].residual < 1e-6);
    }
}

#[test]
fn merging_same_spin_boxes_joins_the_support() {
    let tol = Tolerances::analytic();
    let (layout, s) = setup(vec![Spin::Up, Spin::Up], Character::Symmetric);
    let before = same_spin_connectivity(&s, &tol);
    assert!(before.iter().all(|p| !p.connected), "{before:?}");
    let out = merge_same_spin_boxes(&s, &layout, StepperConfig::new(DT), 60, &tol).unwrap();
    assert!(out.connectivity.iter().all(|p| p.connected), "{:?}", out.connectivity);
    // control: walls kept
    let mut kept = PauliStepper::for_spinor(&s, layout.potential(), MagneticSpec::zero(), StepperConfig::new(DT)).unwrap();
    let still = kept.evolve(&s, 60).unwrap();
    assert!(same_spin_connectivity(&still, &tol).iter().all(|p| !p.connected));
}
