use std::f64::consts::PI;

use dilute::potentials::RadialPotential;
use dilute::scatter2::{
    build_truncated_2b, solve_scattering_length, variational_energy_2b, variational_minimum_2b, ProfileTable,
    Resolution,
};
use proptest::prelude::*;

fn soft_sphere_closed_form(v0: f64, r: f64) -> f64 {
    let k = (v0 / 2.0).sqrt();
    r - (k * r).tanh() / k
}

fn battery() -> Vec<RadialPotential> {
    vec![
        RadialPotential::soft_sphere(0.1, 1.0).unwrap(),
        RadialPotential::soft_sphere(1.0, 1.0).unwrap(),
        RadialPotential::soft_sphere(10.0, 1.0).unwrap(),
        RadialPotential::soft_sphere(200.0, 0.7).unwrap(),
        RadialPotential::truncated_gaussian(5.0, 0.5, 1.2).unwrap(),
        RadialPotential::tabulated(vec![0.0, 0.3, 0.6, 1.0], vec![8.0, 6.0, 2.0, 0.5]).unwrap(),
    ]
}

#[test]
fn fem_oracle_reproduces_soft_sphere_closed_form() {
    // The finite-element minimum is an independent route to 8πa; it confirms
    // the closed form before the ODE solver is compared against either.
    for &v0 in &[0.1, 1.0, 10.0] {
        let p = RadialPotential::soft_sphere(v0, 1.0).unwrap();
        let exact = soft_sphere_closed_form(v0, 1.0);
        let (coarse, _) = variational_minimum_2b(&p, 2000).unwrap();
        let (fine, _) = variational_minimum_2b(&p, 4000).unwrap();
        // second-order upper bounds: extrapolate
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!(fine >= 8.0 * PI * exact * (1.0 - 1e-12));
        let rel = (extrapolated / (8.0 * PI) - exact).abs() / exact;
        assert!(
            rel < 1e-6,
            "V0 = {v0}: FEM {extrapolated} vs closed form {exact}, rel {rel}"
        );
    }
}

#[test]
fn ode_matches_soft_sphere_closed_form() {
    for &v0 in &[0.1, 1.0, 10.0, 100.0] {
        let p = RadialPotential::soft_sphere(v0, 1.0).unwrap();
        let s = solve_scattering_length(&p, Resolution::default()).unwrap();
        let exact = soft_sphere_closed_form(v0, 1.0);
        assert!((s.a - exact).abs() <= 1e-9 * exact, "V0 = {v0}: {} vs {exact}", s.a);
        assert!(s.exterior_residual < 1e-10);
    }
}

#[test]
fn ode_agrees_with_variational_minimum_on_battery() {
    for p in battery() {
        let s = solve_scattering_length(&p, Resolution::default()).unwrap();
        let (fem, _) = variational_minimum_2b(&p, 4000).unwrap();
        let rel = (fem - 8.0 * PI * s.a) / (8.0 * PI * s.a);
        assert!((0.0..1e-3).contains(&(rel + 1e-12)), "{p:?}: rel {rel}");
    }
}

#[test]
fn refinement_converges_at_fourth_order() {
    let p = RadialPotential::truncated_gaussian(5.0, 0.5, 1.2).unwrap();
    let res = Resolution {
        initial_steps: 16,
        rel_tol: 1e-13,
        ..Resolution::default()
    };
    let s = solve_scattering_length(&p, res).unwrap();
    let r = &s.refinement;
    // differences between consecutive passes, early passes only (before round-off)
    let d: Vec<f64> = r.windows(2).map(|w| (w[1].1 - w[0].1).abs()).take(4).collect();
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 2.0, "observed order {order}");
    }
}

#[test]
fn omega_table_reproduces_eight_pi_a() {
    for p in battery() {
        let s = solve_scattering_length(&p, Resolution::default()).unwrap();
        let g = s.omega_table(2000);
        let e = variational_energy_2b(&g, &p).unwrap();
        let rel = (e / (8.0 * PI * s.a) - 1.0).abs();
        assert!(rel < 0.01, "{p:?}: {e} vs {}", 8.0 * PI * s.a);
    }
}

#[test]
fn zero_profile_and_zero_potential_give_zero() {
    let g = ProfileTable::new(vec![0.0, 0.5, 1.0], vec![0.0; 3]).unwrap();
    assert_eq!(variational_energy_2b(&g, &RadialPotential::zero()).unwrap(), 0.0);
}

#[test]
fn coarse_table_is_flagged() {
    let p = RadialPotential::soft_sphere(10.0, 1.0).unwrap();
    let radii: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let values: Vec<f64> = (0..=8).map(|i| if i % 2 == 0 { 0.2 } else { 0.8 }).collect();
    let g = ProfileTable::new(radii, values).unwrap();
    assert!(matches!(
        variational_energy_2b(&g, &p),
        Err(dilute::Error::CoarseGrid { .. })
    ));
}

#[test]
fn truncated_bounds_hold_on_battery() {
    for p in battery() {
        for factor in [2.0, 3.0, 10.0] {
            let ell = factor * p.support_radius();
            let t = build_truncated_2b(&p, ell).unwrap();
            t.check().unwrap();
            let b = t.bounds;
            assert!(b.one_minus_f2_const <= 2.0 + 1e-9, "{b:?}");
            assert!(b.eps_const < 1e3, "{b:?}");
        }
    }
}

#[test]
fn residual_constant_stays_bounded_across_cutoffs() {
    let p = RadialPotential::soft_sphere(10.0, 1.0).unwrap();
    let consts: Vec<f64> = [2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&ell| build_truncated_2b(&p, ell).unwrap().bounds.eps_const)
        .collect();
    let (lo, hi) = consts
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    assert!(hi / lo < 1.5, "eps constant drifts with ell: {consts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scattering_length_scales_linearly(v0 in 0.05f64..50.0, r in 0.3f64..2.0, alpha in 0.25f64..4.0) {
        let p = RadialPotential::soft_sphere(v0, r).unwrap();
        let a = solve_scattering_length(&p, Resolution::default()).unwrap().a;
        let a_alpha = solve_scattering_length(&p.rescale(alpha).unwrap(), Resolution::default()).unwrap().a;
        prop_assert!((a_alpha - alpha * a).abs() <= 1e-6 * alpha * a);
    }

    #[test]
    fn perturbing_the_minimiser_raises_the_energy(amp in -0.2f64..0.2, centre in 0.1f64..0.9, width in 0.05f64..0.3) {
        let p = RadialPotential::soft_sphere(5.0, 1.0).unwrap();
        let s = solve_scattering_length(&p, Resolution::default()).unwrap();
        let mut g = s.omega_table(2000);
        for (r, v) in g.radii.iter().zip(g.values.iter_mut()) {
            let t = (r - centre) / width;
            if t.abs() < 1.0 {
                *v += amp * (1.0 - t * t).powi(2);
            }
        }
        let e = variational_energy_2b(&g, &p).unwrap();
        prop_assert!(e >= 8.0 * PI * s.a * (1.0 - 1e-5));
    }

    #[test]
    fn a_is_monotone_in_amplitude(v0 in 0.1f64..20.0, bump in 0.01f64..5.0) {
        let a1 = solve_scattering_length(&RadialPotential::soft_sphere(v0, 1.0).unwrap(), Resolution::default()).unwrap().a;
        let a2 = solve_scattering_length(&RadialPotential::soft_sphere(v0 + bump, 1.0).unwrap(), Resolution::default()).unwrap().a;
        prop_assert!(a2 > a1 && a2 < 1.0);
    }
}
