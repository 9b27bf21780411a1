use std::f64::consts::PI;

use dilute::geom::Vec3;
use dilute::potentials::{Grid6, ScatteringMatrix, ThreeBodyPotential};
use dilute::scatter2::Resolution;
use dilute::scatter3::{
    build_truncated_3b, effective_profile, solve_scattering_energy, variational_energy_6d, variational_minimum_6d,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Modified Bessel function `I_ν(z)` by its power series (all terms positive).
fn bessel_i(nu: u32, z: f64) -> f64 {
    let q = z * z / 4.0;
    let mut term = (z / 2.0).powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + nu) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Scattering energy of the hyperradial soft sphere `u₀ 1{s ≤ R}`.
///
/// Inside, `f ∝ I₂(κs)/(κs)²` with `κ² = u₀/2`, whose log-derivative is
/// `L = κ I₃/I₂`. Matching to `1 − β/s⁴` gives `β = L R⁵/(4 + L R)`.
fn soft_sphere_b(u0: f64, r: f64) -> f64 {
    let k = (u0 / 2.0).sqrt();
    let l = k * bessel_i(3, k * r) / bessel_i(2, k * r);
    let beta = l * r.powi(5) / (4.0 + l * r);
    ScatteringMatrix::get().det() * 8.0 * PI.powi(3) * beta
}

fn battery() -> Vec<ThreeBodyPotential> {
    vec![
        ThreeBodyPotential::soft_sphere(2.0, 1.0).unwrap(),
        ThreeBodyPotential::soft_sphere(30.0, 0.8).unwrap(),
        ThreeBodyPotential::truncated_gaussian(10.0, 0.5, 1.2).unwrap(),
    ]
}

#[test]
fn bessel_series_matches_reference_values() {
    // I₂(1) and I₃(2) from tables
    assert!((bessel_i(2, 1.0) - 0.135_747_669_767_038_3).abs() < 1e-15);
    assert!((bessel_i(3, 2.0) - 0.212_739_959_239_853_6).abs() < 1e-14);
}

#[test]
fn fem_oracle_reproduces_bessel_closed_form() {
    for &u0 in &[0.5, 5.0, 50.0] {
        let w = ThreeBodyPotential::soft_sphere(u0, 1.0).unwrap();
        let exact = soft_sphere_b(u0, 1.0);
        let (coarse, _) = variational_minimum_6d(&w, 2000).unwrap();
        let (fine, _) = variational_minimum_6d(&w, 4000).unwrap();
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!(fine >= exact * (1.0 - 1e-12));
        assert!(
            (extrapolated / exact - 1.0).abs() < 1e-6,
            "u0 = {u0}: {extrapolated} vs {exact}"
        );
    }
}

#[test]
fn ode_matches_bessel_closed_form() {
    for &u0 in &[0.1, 1.0, 10.0, 100.0] {
        let w = ThreeBodyPotential::soft_sphere(u0, 1.0).unwrap();
        let s = solve_scattering_energy(&w, Resolution::default()).unwrap();
        let exact = soft_sphere_b(u0, 1.0);
        assert!(
            (s.b_tail / exact - 1.0).abs() < 1e-8,
            "u0 = {u0}: {} vs {exact}",
            s.b_tail
        );
        assert!((s.b / exact - 1.0).abs() < 1e-6, "u0 = {u0}: {} vs {exact}", s.b);
    }
}

#[test]
fn routes_agree_on_battery() {
    for w in battery() {
        let s = solve_scattering_energy(&w, Resolution::default()).unwrap();
        assert!((s.b - s.b_tail).abs() <= 1e-4 * s.b, "{w:?}");
        assert!(s.exterior_fit_residual() < 1e-8);
        let (fem, _) = variational_minimum_6d(&w, 2000).unwrap();
        let rel = fem / s.b - 1.0;
        assert!((-1e-9..0.01).contains(&rel), "{w:?}: rel {rel}");
        let table = s.omega_table(2000);
        let e = variational_energy_6d(&table, &w).unwrap();
        assert!((e / s.b - 1.0).abs() < 0.01);
    }
}

#[test]
fn determinant_and_profile_are_consistent() {
    let s = solve_scattering_energy(&battery()[0], Resolution::default()).unwrap();
    assert!((s.det_m - 0.75f64.powf(1.5)).abs() < 1e-14);
    let mut prev = 0.0;
    for i in 0..=400 {
        let (f, df) = s.f(3.0 * i as f64 / 400.0);
        assert!((0.0..=1.0).contains(&f) && df >= 0.0 && f >= prev);
        prev = f;
    }
}

#[test]
fn general_tabulated_potential_uses_sphere_average() {
    // An m-radial function sampled on a 6D grid: the sphere average recovers
    // the hyperradial profile up to interpolation error.
    let w = ThreeBodyPotential::truncated_gaussian(10.0, 0.5, 1.0).unwrap();
    let r = w.support_radius();
    let grid = Grid6::from_fn(r, 15, |x, y| w.eval(x, y)).unwrap();
    let tab = ThreeBodyPotential::Tabulated6d(grid);
    assert!(solve_scattering_energy(&tab, Resolution::default()).is_err());
    let profile = effective_profile(&tab, 65, 2000, 1).unwrap();
    assert!(profile.support_radius() >= 1.0);
    let (fem, _) = variational_minimum_6d(&tab, 600).unwrap();
    let exact = solve_scattering_energy(&w, Resolution::default()).unwrap().b;
    assert!((fem / exact - 1.0).abs() < 0.15, "{fem} vs {exact}");
}

#[test]
fn zero_potential_has_unit_truncated_solution() {
    let t = build_truncated_3b(&ThreeBodyPotential::zero(), 4.0).unwrap();
    assert!(t.eps.iter().all(|&e| e == 0.0));
    assert_eq!(t.f(&[0.0; 3], &[0.0; 3]), 1.0);
    t.check().unwrap();
}

#[test]
fn short_cutoff_is_rejected() {
    let w = ThreeBodyPotential::soft_sphere(1.0, 1.0).unwrap();
    assert!(matches!(
        build_truncated_3b(&w, 2.0),
        Err(dilute::Error::Precondition(_))
    ));
}

fn random_pairs(count: usize, extent: f64, seed: u64) -> Vec<(Vec3, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || -> Vec3 { [0; 3].map(|_| rng.random_range(-extent..extent)) };
    (0..count).map(|_| (v(), v())).collect()
}

#[test]
fn truncated_bounds_hold_on_battery() {
    for w in battery() {
        for factor in [2.0, 4.0] {
            let ell = factor * w.support_radius();
            let t = build_truncated_3b(&w, ell).unwrap();
            t.check().unwrap();
            assert!(t.bounds.omega_const < 10.0, "{:?}", t.bounds);
            assert!(t.bounds.eps_support_x <= 2.0 * ell * ScatteringMatrix::get().norm());
            let pairs = random_pairs(100_000, 1.5 * t.ell_tilde, 7);
            assert_eq!(t.disentangling_violations(&pairs), 0);
        }
    }
}

#[test]
fn truncated_solution_has_three_body_symmetry() {
    let w = &battery()[2];
    let t = build_truncated_3b(w, 2.0 * w.support_radius()).unwrap();
    let scale = 2f64.powi((t.ell / 2.0).log2().floor() as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        // dyadic coordinates keep every difference exact
        let mut p = || -> Vec3 { [0; 3].map(|_| rng.random_range(-64i32..64) as f64 / 64.0 * scale) };
        let (x1, x2, x3) = (p(), p(), p());
        let sub = dilute::geom::sub;
        let base = t.f(&sub(&x1, &x2), &sub(&x1, &x3));
        for (a, b, c) in [
            (&x2, &x1, &x3),
            (&x3, &x2, &x1),
            (&x1, &x3, &x2),
            (&x2, &x3, &x1),
            (&x3, &x1, &x2),
        ] {
            assert_eq!(t.f(&sub(a, b), &sub(a, c)), base);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn scattering_energy_scales_as_fourth_power(u0 in 0.5f64..50.0, r in 0.5f64..1.5, delta in 0.25f64..4.0) {
        let w = ThreeBodyPotential::soft_sphere(u0, r).unwrap();
        let b = solve_scattering_energy(&w, Resolution::default()).unwrap().b;
        let bd = solve_scattering_energy(&w.rescale(delta).unwrap(), Resolution::default()).unwrap().b;
        prop_assert!((bd / (delta.powi(4) * b) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn perturbing_the_minimiser_raises_the_energy(amp in -0.2f64..0.2, centre in 0.1f64..0.9, width in 0.05f64..0.3) {
        let w = ThreeBodyPotential::soft_sphere(5.0, 1.0).unwrap();
        let s = solve_scattering_energy(&w, Resolution::default()).unwrap();
        let mut h = s.omega_table(2000);
        for (r, v) in h.radii.iter().zip(h.values.iter_mut()) {
            let t = (r - centre) / width;
            if t.abs() < 1.0 {
                *v += amp * (1.0 - t * t).powi(2);
            }
        }
        let e = variational_energy_6d(&h, &w).unwrap();
        prop_assert!(e >= s.b * (1.0 - 1e-5));
    }
}
