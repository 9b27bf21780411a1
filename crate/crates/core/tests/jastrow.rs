use dilute::geom::Vec3;
use dilute::jastrow::{
    decoupling_bounds, default_ell1, default_ell2, initial_configuration, local_terms, log_gradient, log_trial,
    mc_estimate, upper_bound_formula, McConfig, TrialParams,
};
use dilute::potentials::{RadialPotential, ThreeBodyPotential};
use dilute::spectral::{build_hamiltonian, ground_state};
use dilute::ErrorKind;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn uniform(n: usize, l: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0; 3].map(|_| rng.random_range(0.0..l))).collect()
}

fn combined(n: usize, l: f64) -> TrialParams {
    let v = RadialPotential::soft_sphere(5.0, 0.3).unwrap();
    let w = ThreeBodyPotential::truncated_gaussian(20.0, 0.2, 0.35).unwrap();
    TrialParams::new(n, l, &v, &w, Some(0.9), Some(1.0)).unwrap()
}

#[test]
fn free_state_is_trivial() {
    let tp = TrialParams::new(
        5,
        3.0,
        &RadialPotential::zero(),
        &ThreeBodyPotential::zero(),
        None,
        None,
    )
    .unwrap();
    let x = uniform(5, 3.0, 1);
    assert_eq!(log_trial(&x, &tp), 0.0);
    assert_eq!(local_terms(&x, &tp).unwrap().total(), 0.0);
    let mc = McConfig {
        chains: 2,
        sweeps: 50,
        batches: 4,
        ..McConfig::default()
    };
    let e = mc_estimate(&tp, &mc).unwrap();
    assert_eq!(e.total.mean, 0.0);
}

#[test]
fn pair_beyond_cutoff_is_uncorrelated() {
    let v = RadialPotential::soft_sphere(5.0, 0.3).unwrap();
    let tp = TrialParams::new(2, 4.0, &v, &ThreeBodyPotential::zero(), Some(1.0), None).unwrap();
    let x = vec![[0.5, 0.5, 0.5], [1.6, 0.5, 0.5]];
    assert_eq!(log_trial(&x, &tp), 0.0);
    assert_eq!(local_terms(&x, &tp).unwrap().total(), 0.0);
    let close = vec![[0.5, 0.5, 0.5], [0.9, 0.5, 0.5]];
    assert!(log_trial(&close, &tp) < 0.0);
}

#[test]
fn distant_triple_is_uncorrelated() {
    let w = ThreeBodyPotential::truncated_gaussian(20.0, 0.2, 0.35).unwrap();
    let tp = TrialParams::new(3, 6.0, &RadialPotential::zero(), &w, None, Some(1.0)).unwrap();
    let reach = tp.three.as_ref().unwrap().ell_tilde;
    let d = 1.01 * reach;
    let x = vec![[1.0, 1.0, 1.0], [1.0 + d, 1.0, 1.0], [1.0, 1.0 + d, 1.0]];
    assert_eq!(log_trial(&x, &tp), 0.0);
    assert_eq!(local_terms(&x, &tp).unwrap().total(), 0.0);
}

#[test]
fn absent_interactions_give_zero_terms() {
    let v = RadialPotential::soft_sphere(5.0, 0.3).unwrap();
    let w = ThreeBodyPotential::truncated_gaussian(20.0, 0.2, 0.35).unwrap();
    let l = 2.0;
    let only_v = TrialParams::new(6, l, &v, &ThreeBodyPotential::zero(), Some(0.9), None).unwrap();
    let only_w = TrialParams::new(6, l, &RadialPotential::zero(), &w, None, Some(1.0)).unwrap();
    for seed in 0..20 {
        let x = uniform(6, l, seed);
        let t = local_terms(&x, &only_v).unwrap();
        assert_eq!([t.j1, t.j2, t.k1, t.k2, t.k3], [0.0; 5]);
        let t = local_terms(&x, &only_w).unwrap();
        assert_eq!([t.i1, t.i2, t.j1, t.j2], [0.0; 4]);
    }
}

#[test]
fn gradient_matches_central_differences() {
    let l = 2.0;
    let tp = combined(3, l);
    let x = vec![[0.7, 0.8, 0.9], [1.05, 0.95, 0.8], [0.85, 1.2, 1.0]];
    let grad = log_gradient(&x, &tp).unwrap();
    let step = 1e-5 * l;
    let scale = grad.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
    assert!(scale > 0.1);
    for i in 0..3 {
        for k in 0..3 {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[i][k] += step;
            minus[i][k] -= step;
            let fd = (log_trial(&plus, &tp) - log_trial(&minus, &tp)) / (2.0 * step);
            assert!(
                (fd - grad[i][k]).abs() <= 1e-6 * scale,
                "particle {i} axis {k}: {fd} vs {}",
                grad[i][k]
            );
        }
    }
}

#[test]
fn kinetic_terms_match_gradient_norm() {
    let tp = combined(6, 1.6);
    for seed in 0..10 {
        let x = uniform(6, 1.6, seed);
        if log_trial(&x, &tp) == f64::NEG_INFINITY {
            continue;
        }
        let g = log_gradient(&x, &tp).unwrap();
        let kinetic: f64 = g.iter().map(|v| v.iter().map(|c| c * c).sum::<f64>()).sum();
        let mut potential = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                let r = dilute::geom::dist2(&x[i], &x[j]).sqrt();
                potential += tp.v.value(r);
                for k in j + 1..6 {
                    potential += tp.w.eval_triple(&x[i], &x[j], &x[k]);
                }
            }
        }
        let t = local_terms(&x, &tp).unwrap();
        let want = kinetic + potential;
        assert!(
            (t.total() - want).abs() <= 1e-10 * want.abs().max(1.0),
            "{} vs {want}",
            t.total()
        );
        assert!(t.i1 >= 0.0 && t.k1 >= 0.0);
    }
}

#[test]
fn terms_are_permutation_invariant() {
    let tp = combined(7, 1.5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10 {
        let x = uniform(7, 1.5, 100 + seed);
        let t = local_terms(&x, &tp).unwrap().as_array();
        let mut perm: Vec<usize> = (0..7).collect();
        for i in (1..7).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let y: Vec<Vec3> = perm.iter().map(|&p| x[p]).collect();
        let s = local_terms(&y, &tp).unwrap().as_array();
        for (a, b) in t.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{t:?} vs {s:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn decoupling_holds(seed in any::<u64>(), n in 3usize..10) {
        let tp = combined(n, 1.5);
        let x = uniform(n, 1.5, seed);
        for i in 0..n {
            let d = decoupling_bounds(&x, i, &tp);
            prop_assert!(d.holds(), "{d:?}");
        }
    }
}

#[test]
fn initial_configuration_is_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [1usize, 8, 27, 30, 64] {
        let x = initial_configuration(n, 2.5, &mut rng);
        assert_eq!(x.len(), n);
        assert!(x.iter().flatten().all(|&c| (0.0..2.5).contains(&c)));
    }
}

#[test]
fn estimate_is_deterministic() {
    let tp = combined(6, 2.0);
    let mc = McConfig {
        chains: 3,
        sweeps: 200,
        batches: 8,
        seed: 11,
        ..McConfig::default()
    };
    let a = mc_estimate(&tp, &mc).unwrap();
    let b = mc_estimate(&tp, &mc).unwrap();
    assert_eq!(a, b);
    let sum: f64 = a.terms().iter().map(|t| t.mean).sum();
    assert!((sum - a.total.mean).abs() <= 1e-12 * a.total.mean.abs().max(1.0));
    assert!(a.i1.mean >= 0.0 && a.k1.mean >= 0.0);
}

#[test]
fn config_is_validated() {
    let tp = combined(4, 2.0);
    let bad = [
        McConfig {
            sweeps: 10,
            burn_in: Some(10),
            ..McConfig::default()
        },
        McConfig {
            step_size: Some(1.0),
            ..McConfig::default()
        },
        McConfig {
            chains: 0,
            ..McConfig::default()
        },
    ];
    for mc in bad {
        assert_eq!(mc_estimate(&tp, &mc).unwrap_err().kind(), ErrorKind::Validation);
    }
}

#[test]
fn cutoffs_are_validated() {
    let v = RadialPotential::soft_sphere(5.0, 0.3).unwrap();
    let w = ThreeBodyPotential::truncated_gaussian(20.0, 0.2, 0.35).unwrap();
    // ℓ₁ below 2R₀
    assert!(TrialParams::new(4, 2.0, &v, &w, Some(0.5), Some(1.0)).is_err());
    // ℓ₁ beyond the box
    assert!(TrialParams::new(4, 2.0, &v, &w, Some(2.5), Some(1.0)).is_err());
    // ℓ₂ beyond the box
    assert!(TrialParams::new(4, 2.0, &v, &w, Some(0.9), Some(2.5)).is_err());
}

#[test]
fn two_particles_respect_ground_energy() {
    let l = 2.0;
    let v = RadialPotential::soft_sphere(4.0, 0.45).unwrap();
    let w = ThreeBodyPotential::zero();
    let h = build_hamiltonian(2, l, 12, &v, &w).unwrap();
    let lambda = ground_state(&h, 1e-9, 1).unwrap().value;
    let tp = TrialParams::new(2, l, &v, &w, None, None).unwrap();
    let mc = McConfig {
        chains: 4,
        sweeps: 20_000,
        batches: 20,
        seed: 5,
        ..McConfig::default()
    };
    let e = mc_estimate(&tp, &mc).unwrap();
    assert!(
        e.total.mean >= lambda - 2.0 * e.total.se,
        "MC {} ± {} below exact {lambda}",
        e.total.mean,
        e.total.se
    );
}

#[test]
fn three_particles_respect_ground_energy() {
    let l = 2.0;
    let v = RadialPotential::zero();
    let w = ThreeBodyPotential::truncated_gaussian(30.0, 0.25, 0.4).unwrap();
    let h = build_hamiltonian(3, l, 5, &v, &w).unwrap();
    let lambda = ground_state(&h, 1e-9, 1).unwrap().value;
    let tp = TrialParams::new(3, l, &v, &w, None, Some(1.2)).unwrap();
    let mc = McConfig {
        chains: 4,
        sweeps: 20_000,
        batches: 20,
        seed: 6,
        ..McConfig::default()
    };
    let e = mc_estimate(&tp, &mc).unwrap();
    assert!(
        e.total.mean >= lambda - 2.0 * e.total.se,
        "MC {} ± {} below exact {lambda}",
        e.total.mean,
        e.total.se
    );
}

#[test]
fn standard_error_scales_with_chain_length() {
    let tp = combined(8, 2.0);
    let run = |sweeps| {
        let mc = McConfig {
            chains: 4,
            sweeps,
            batches: 20,
            seed: 9,
            ..McConfig::default()
        };
        mc_estimate(&tp, &mc).unwrap().total.se
    };
    let ratio = run(4000) / run(8000);
    let want = 2f64.sqrt();
    assert!(ratio > want / 1.5 && ratio < want * 1.5, "ratio {ratio}");
}

#[test]
fn default_cutoffs_are_near_optimal() {
    let (rho, a, b) = (1e-3, 0.5, 0.8);
    let pair = |l1: f64| rho * a * l1 * l1 + a / l1;
    let triple = |l2: f64| rho * l2.powi(3) + b / l2.powi(4);
    let scan = |f: &dyn Fn(f64) -> f64, centre: f64| {
        (0..=80)
            .map(|k| f(centre * 10f64.powf(-1.0 + k as f64 / 40.0)))
            .fold(f64::INFINITY, f64::min)
    };
    let l1 = default_ell1(rho);
    let l2 = default_ell2(rho, b);
    assert!(pair(l1) <= 1.1 * scan(&pair, l1));
    assert!(triple(l2) <= 1.1 * scan(&triple, l2));
}

#[test]
fn formula_leading_terms() {
    let (rho, a, b, n) = (1e-3, 0.5, 0.8, 64);
    let l1 = default_ell1(rho);
    let l2 = default_ell2(rho, b);
    let only_v = upper_bound_formula(rho, a, 0.0, l1, l2, n).unwrap();
    assert!((only_v.leading - n as f64 * 4.0 * PI * a * rho).abs() < 1e-12 * only_v.leading);
    assert_eq!(only_v.three_body_correction(), 0.0);
    let only_w = upper_bound_formula(rho, 0.0, b, l1, l2, n).unwrap();
    assert!((only_w.leading - n as f64 * b * rho * rho / 6.0).abs() < 1e-12 * only_w.leading);
    assert_eq!(only_w.two_body_correction(), 0.0);
    let both = upper_bound_formula(rho, a, b, l1, l2, n).unwrap();
    assert!(both.total() > both.leading);
    let err = upper_bound_formula(rho, a, b, 0.4, l2, n).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Validation);
}
