use std::f64::consts::PI;

use num_complex::Complex64;
use pilotwave::configspace::perm::permutations;
use pilotwave::configspace::{build_field, exchange, Field, GridSpec, Initializer, Orbital, Symmetry};
use pilotwave::ensemble::{total_variation, AxisBins, DensityHistogram};
use pilotwave::evolution::{gauge_transform, PotentialSpec, SplitStepper, StepperConfig};
use pilotwave::scenario::sub_seed;
use pilotwave::symmetry::phase_distance;
use proptest::prelude::*;

fn gauss(c: f64, s: f64, k: f64) -> Orbital {
    Orbital::Gaussian { center: vec![c], sigma: s, momentum: vec![k] }
}

fn pair(c1: f64, c2: f64, k: f64, symmetry: Symmetry) -> Field {
    let g = GridSpec::uniform(2, 1, 32, 6.0).unwrap();
    build_field(&g, &Initializer::Symmetrized { orbitals: vec![gauss(c1, 0.8, k), gauss(c2, 0.6, -k)], symmetry }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exchange_is_an_involution(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, k in -1.0f64..1.0) {
        let f = Field::from_fn(GridSpec::uniform(2, 1, 16, 4.0).unwrap(), |x| {
            Complex64::new((x[0] - c1).cos(), x[1] * c2 + k)
        }).unwrap();
        let back = exchange(&exchange(&f, 0, 1).unwrap(), 0, 1).unwrap();
        prop_assert_eq!(back.values(), f.values());
    }

    #[test]
    fn symmetrized_states_are_exchange_eigenstates(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, k in -1.0f64..1.0, anti in any::<bool>()) {
        prop_assume!((c1 - c2).abs() > 0.3);
        let (sym, sign) = if anti { (Symmetry::Antisymmetric, -1.0) } else { (Symmetry::Symmetric, 1.0) };
        let f = pair(c1, c2, k, sym);
        let e = exchange(&f, 0, 1).unwrap();
        let worst = f.values().iter().zip(e.values()).map(|(a, b)| (a * sign - b).norm()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{}", worst);
    }

    #[test]
    fn split_steps_conserve_norm(stiffness in 0.1f64..3.0, barrier in 0.0f64..2.0, steps in 1usize..40) {
        let f = pair(-1.0, 1.2, 0.5, Symmetry::Symmetric);
        let v = PotentialSpec::Sum { terms: vec![
            PotentialSpec::Harmonic { stiffness, center: vec![] },
            PotentialSpec::DoubleWell { separation: 2.0, barrier },
        ] };
        let mut s = SplitStepper::for_field(&f, v, StepperConfig::new(0.01)).unwrap();
        let out = s.evolve(&f, steps, steps).unwrap();
        let last = &out[out.len() - 1];
        prop_assert!((last.norm_sqr() - f.norm_sqr()).abs() < 1e-12 * steps as f64);
        prop_assert!((last.time() - 0.01 * steps as f64).abs() < 1e-12);
    }

    #[test]
    fn gauge_transform_keeps_the_density(a in -2.0f64..2.0, q in -2.0f64..2.0) {
        let f = pair(-1.0, 1.0, 0.3, Symmetry::Antisymmetric);
        let t = gauge_transform(&f, |x| a * x[0] * x[0], q).unwrap();
        for (u, w) in f.values().iter().zip(t.values()) {
            prop_assert!((u.norm() - w.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn phase_distance_is_a_circle_metric(a in -10.0f64..10.0, b in -10.0f64..10.0, turns in -3i32..3) {
        let d = phase_distance(a, b);
        prop_assert!((0.0..=PI + 1e-12).contains(&d));
        prop_assert!((d - phase_distance(b, a)).abs() < 1e-12);
        prop_assert!((d - phase_distance(a + 2.0 * PI * turns as f64, b)).abs() < 1e-9);
    }

    #[test]
    fn sub_seeds_are_stable_and_stream_dependent(master in any::<u64>(), s in 0u64..64) {
        prop_assert_eq!(sub_seed(master, s), sub_seed(master, s));
        prop_assert_ne!(sub_seed(master, s), sub_seed(master, s + 1));
    }

    #[test]
    fn histograms_are_normalized(xs in proptest::collection::vec(-2.9f64..2.9, 1..200)) {
        let f = Field::from_fn(GridSpec::uniform(1, 1, 64, 3.0).unwrap(), |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)).unwrap();
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let h = DensityHistogram::from_samples(vec![AxisBins::auto(&f, 0, 16).unwrap()], pts.iter().map(|p| p.as_slice()));
        let p = h.probabilities();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(total_variation(&p, &p) == 0.0);
        let r = h.reference(&f);
        prop_assert!((0.0..=1.0).contains(&total_variation(&p, &r)));
    }
}

#[test]
fn permutation_signs_multiply() {
    for n in 1..=4 {
        let perms = permutations(n);
        assert_eq!(perms.len(), (1..=n).product::<usize>());
        for (p, sp) in &perms {
            for (q, sq) in &perms {
                let composed: Vec<usize> = (0..n).map(|k| p[q[k]]).collect();
                let sc = perms.iter().find(|(r, _)| *r == composed).unwrap().1;
                assert_eq!(sc, sp * sq);
            }
        }
    }
}
