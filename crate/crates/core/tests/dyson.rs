use std::f64::consts::PI;

use dilute::dyson::*;
use dilute::geom::{self, Vec3};
use dilute::potentials::{RadialPotential, ScatteringMatrix, ThreeBodyPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lowest Neumann eigenvalue on `[0, r_max]` of `−2Δψ + qψ` in `dim`
/// dimensions for radial `ψ`, by RK4 shooting and bisection on the
/// boundary slope. `breaks` must contain every discontinuity of `q`.
fn shooting_lowest(dim: f64, q: impl Fn(f64) -> f64, breaks: &[f64], r_max: f64, lo: f64, hi: f64) -> f64 {
    let slope_at_edge = |lambda: f64| -> f64 {
        let k2 = (q(0.0) - lambda) / 2.0;
        let r0 = 1e-6 * r_max;
        let mut r = r0;
        let mut psi = 1.0 + k2 * r0 * r0 / (2.0 * dim);
        let mut dpsi = k2 * r0 / dim;
        let rhs = |r: f64, p: f64, dp: f64, qv: f64| (qv - lambda) * p / 2.0 - (dim - 1.0) * dp / r;
        let mut stops: Vec<f64> = breaks.iter().copied().filter(|&b| b > r0 && b < r_max).collect();
        stops.push(r_max);
        for &stop in &stops {
            let steps = 4000;
            let h = (stop - r) / steps as f64;
            // q sampled inside the piece, so jumps sit on piece edges
            for _ in 0..steps {
                let mid = |x: f64| q(x.clamp(r + 1e-12 * h, stop - 1e-12 * h));
                let (q0, qm, q1) = (mid(r), mid(r + 0.5 * h), mid(r + h));
                let k1 = (dpsi, rhs(r, psi, dpsi, q0));
                let k2 = (
                    dpsi + 0.5 * h * k1.1,
                    rhs(r + 0.5 * h, psi + 0.5 * h * k1.0, dpsi + 0.5 * h * k1.1, qm),
                );
                let k3 = (
                    dpsi + 0.5 * h * k2.1,
                    rhs(r + 0.5 * h, psi + 0.5 * h * k2.0, dpsi + 0.5 * h * k2.1, qm),
                );
                let k4 = (dpsi + h * k3.1, rhs(r + h, psi + h * k3.0, dpsi + h * k3.1, q1));
                psi += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
                dpsi += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
                r += h;
                assert!(psi > 0.0, "bracket too high: node at r = {r}");
            }
            r = stop;
        }
        dpsi
    };
    let (mut lo, mut hi) = (lo, hi);
    assert!(slope_at_edge(lo) > 0.0 && slope_at_edge(hi) < 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if slope_at_edge(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn battery_2b() -> Vec<RadialPotential> {
    vec![
        RadialPotential::soft_sphere(1.0, 1.0).unwrap(),
        RadialPotential::soft_sphere(1000.0, 1.0).unwrap(),
        RadialPotential::truncated_gaussian(20.0, 0.4, 1.0).unwrap(),
    ]
}

fn battery_3b() -> Vec<ThreeBodyPotential> {
    vec![
        ThreeBodyPotential::soft_sphere(1.0, 1.0).unwrap(),
        ThreeBodyPotential::soft_sphere(50.0, 0.8).unwrap(),
        ThreeBodyPotential::truncated_gaussian(20.0, 0.4, 1.0).unwrap(),
    ]
}

#[test]
fn softeners_are_normalised_and_supported_in_the_annulus() {
    for r in [1.0, 4.0, 10.0] {
        let u = Softener2B::standard().scaled(r).unwrap();
        assert!((u.integral - 1.0).abs() < 1e-10);
        assert_eq!(u.value(0.249 * r), 0.0);
        assert_eq!(u.value(0.501 * r), 0.0);
        assert!(u.value(0.375 * r) > 0.0);
        let v = Softener3B::standard().scaled(r).unwrap();
        assert!((v.integral - 1.0).abs() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20000 {
            let x: Vec3 = [0; 3].map(|_| rng.random_range(-0.6 * r..0.6 * r));
            let y: Vec3 = [0; 3].map(|_| rng.random_range(-0.6 * r..0.6 * r));
            if v.value(&x, &y) > 0.0 {
                let norm = (geom::norm2(&x) + geom::norm2(&y)).sqrt();
                assert!(norm >= v.r1 && norm <= v.r2);
                for p in [[0usize, 1, 2], [1, 0, 2], [2, 1, 0]] {
                    // the triple (0, −x, −y) has relative coordinates (x, y)
                    let pts = [[0.0; 3], geom::scale(&x, -1.0), geom::scale(&y, -1.0)];
                    let (a, b, c) = (pts[p[0]], pts[p[1]], pts[p[2]]);
                    assert_eq!(v.value(&geom::sub(&a, &b), &geom::sub(&a, &c)), v.value(&x, &y));
                }
            }
        }
    }
}

#[test]
fn zero_potentials_give_nonnegative_kinetic_forms() {
    let mode = GapMode::Sector { elements: 400 };
    let g = dyson2_gap(&RadialPotential::zero(), &Softener2B::standard(), 4.0, mode).unwrap();
    assert_eq!(g.coefficient, 0.0);
    assert!(g.lambda_min >= -1e-10);
    let g = dyson3_gap(&ThreeBodyPotential::zero(), &Softener3B::standard(), 4.0, 1.0, mode).unwrap();
    assert!(g.lambda_min >= -1e-10);
    let g = dyson2_gap(
        &RadialPotential::zero(),
        &Softener2B::standard(),
        4.0,
        GapMode::Grid { points: 15 },
    )
    .unwrap();
    assert!(g.lambda_min >= -1e-10);
    let g = dyson3_gap(
        &ThreeBodyPotential::zero(),
        &Softener3B::standard(),
        4.0,
        1.0,
        GapMode::Grid { points: 7 },
    )
    .unwrap();
    assert!(g.lambda_min >= -1e-10);
}

#[test]
fn sector_gap_matches_shooting_oracle() {
    let p = RadialPotential::soft_sphere(10.0, 1.0).unwrap();
    let u = Softener2B::standard().scaled(8.0).unwrap();
    for kappa in [0.0, 10.0, 17.0, 20.0] {
        let g = dyson2_gap_with(&p, &u, kappa, GapMode::Sector { elements: 4000 }).unwrap();
        let q = |r: f64| p.value(r) - kappa * u.value(r);
        let exact = shooting_lowest(3.0, q, &[1.0, u.r1, u.r2], u.r2, -5.0, g.lambda_min + 0.05);
        assert!(
            (g.lambda_min - exact).abs() < 1e-4 * (1.0 + exact.abs()),
            "kappa {kappa}: {} vs {exact}",
            g.lambda_min
        );
    }
    let w = ThreeBodyPotential::soft_sphere(50.0, 0.8).unwrap();
    let u = Softener3B::standard().scaled(8.0).unwrap();
    let profile = w.hyperradial_profile().unwrap().clone();
    for kappa in [0.0, 40.0, 80.0] {
        let g = dyson3_gap_with(&w, &u, kappa, GapMode::Sector { elements: 4000 }).unwrap();
        let q = |s: f64| profile.value(s) - kappa * u.value_hyper(s);
        let exact = shooting_lowest(6.0, q, &[0.8, u.s1, u.s2], u.s2, -5.0, g.lambda_min + 0.05);
        assert!(
            (g.lambda_min - exact).abs() < 1e-4 * (1.0 + exact.abs()),
            "kappa {kappa}: {} vs {exact}",
            g.lambda_min
        );
    }
}

#[test]
fn two_body_gaps_are_nonnegative_and_sharp_constant_is_eight_pi_a() {
    let mode = GapMode::Sector { elements: 2000 };
    for p in battery_2b() {
        for r in [4.5, 8.0, 20.0] {
            let g = dyson2_gap(&p, &Softener2B::standard(), r, mode).unwrap();
            assert!(g.passes() && g.lambda_min > 0.0, "{p:?} R = {r}: {g:?}");
            let u = Softener2B::standard().scaled(r).unwrap();
            let (_, ratio) = critical_coefficient_2b(&p, &u, 2000).unwrap();
            // doubling 4πa reaches 8πa, which is still below the critical value
            assert!(ratio > 1.0, "{p:?} R = {r}: ratio {ratio}");
        }
    }
}

#[test]
fn three_body_gaps_are_nonnegative_and_doubling_flips_them() {
    let mode = GapMode::Sector { elements: 2000 };
    for w in battery_3b() {
        let r = 20.0 * w.support_radius();
        let g = dyson3_gap(&w, &Softener3B::standard(), r, 1.0, mode).unwrap();
        assert!(g.passes() && g.lambda_min > 0.0, "{w:?}: {g:?}");
        let u = Softener3B::standard().scaled(r).unwrap();
        let doubled = dyson3_gap_with(&w, &u, 2.0 * g.coefficient, mode).unwrap();
        assert!(doubled.lambda_min < 0.0, "{w:?}: {doubled:?}");
        let (_, ratio, c) = critical_coefficient_3b(&w, &u, 2000).unwrap();
        assert!(ratio > 0.99 && ratio < 1.2, "{w:?}: ratio {ratio}");
        assert!(c < 1.0);
    }
}

#[test]
fn grid_modes_agree_with_sector_roughly() {
    let p = RadialPotential::soft_sphere(10.0, 1.0).unwrap();
    let u = Softener2B::standard().scaled(8.0).unwrap();
    let kappa = 4.0
        * PI
        * dilute::scatter2::solve_scattering_length(&p, Default::default())
            .unwrap()
            .a;
    let sector = dyson2_gap_with(&p, &u, kappa, GapMode::Sector { elements: 2000 }).unwrap();
    let grid = dyson2_gap_with(&p, &u, kappa, GapMode::Grid { points: 33 }).unwrap();
    assert!(grid.passes());
    assert!(
        (grid.lambda_min / sector.lambda_min - 1.0).abs() < 0.5,
        "{grid:?} vs {sector:?}"
    );

    let w = ThreeBodyPotential::soft_sphere(2.0, 1.0).unwrap();
    let v = Softener3B::standard().scaled(8.0).unwrap();
    let grid = dyson3_gap_with(&w, &v, 0.0, GapMode::Grid { points: 7 }).unwrap();
    assert!(grid.lambda_min >= 0.0);
    assert!(matches!(
        dyson3_gap_with(&w, &v, 0.0, GapMode::Grid { points: 40 }),
        Err(dilute::Error::InvalidInput(_))
    ));
}

#[test]
fn gap_converges_under_refinement() {
    let p = RadialPotential::soft_sphere(1000.0, 1.0).unwrap();
    let u = Softener2B::standard().scaled(8.0).unwrap();
    let kappa = 4.0
        * PI
        * dilute::scatter2::solve_scattering_length(&p, Default::default())
            .unwrap()
            .a;
    let table = gap_convergence_2b(&p, &u, kappa, &[250, 500, 1000, 2000, 4000]).unwrap();
    let last = table.last().unwrap().1;
    assert!(last > 0.0);
    for w in table.windows(2) {
        let (d0, d1) = ((w[0].1 - last).abs(), (w[1].1 - last).abs());
        assert!(d1 <= d0 + 1e-12, "{table:?}");
    }
}

#[test]
fn preconditions_are_enforced() {
    let p = RadialPotential::soft_sphere(1.0, 1.0).unwrap();
    assert!(matches!(
        dyson2_gap(&p, &Softener2B::standard(), 3.0, GapMode::default()),
        Err(dilute::Error::Precondition(_))
    ));
    assert!(Softener2B::new(0.5, 0.5).is_err());
    let tab = ThreeBodyPotential::Tabulated6d(dilute::potentials::Grid6::from_fn(1.0, 3, |_, _| 1.0).unwrap());
    assert!(dyson3_gap(&tab, &Softener3B::standard(), 10.0, 1.0, GapMode::default()).is_err());
    assert!(ScatteringMatrix::get().norm() > 1.0);
}

/// `F_ij` and `F̃_ijk` straight from the definitions.
fn brute_force(c: &Configuration) -> (Vec<Vec<bool>>, Vec<Vec<Vec<bool>>>) {
    let x = c.positions();
    let n = x.len();
    let r = c.radius();
    let chi = |a: &Vec3, b: &Vec3| geom::norm(&geom::sub(a, b)) <= r;
    let theta = |a: &Vec3, b: &Vec3| geom::norm(&geom::sub(a, b)) > 2.0 * r;
    let mut f = vec![vec![false; n]; n];
    let mut ft = vec![vec![vec![false; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mid = geom::scale(&geom::add(&x[i], &x[j]), 0.5);
            f[i][j] = chi(&x[i], &x[j]) && (0..n).filter(|&m| m != i && m != j).all(|m| theta(&mid, &x[m]));
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let bary = geom::scale(&geom::add(&geom::add(&x[i], &x[j]), &x[k]), 1.0 / 3.0);
                ft[i][j][k] = chi(&x[i], &x[j])
                    && chi(&x[i], &x[k])
                    && (0..n)
                        .filter(|&m| m != i && m != j && m != k)
                        .all(|m| theta(&bary, &x[m]));
            }
        }
    }
    (f, ft)
}

#[test]
fn indicators_match_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut nontrivial = 0;
    for d in 0..100_000 {
        let n = if d % 3 == 0 { 3 + d % 5 } else { 4 };
        let r = [0.05, 0.1, 0.2][d % 3];
        let c = Configuration::random(n, r, 0.5, d % 2 == 0, &mut rng);
        let fields = collision_indicators(&c);
        let (f, ft) = brute_force(&c);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(fields.pair(i, j), f[i][j]);
                if f[i][j] {
                    nontrivial += 1;
                }
                for (k, &expected) in ft[i][j].iter().enumerate() {
                    assert_eq!(fields.triple(i, j, k), expected);
                }
            }
        }
    }
    assert!(nontrivial > 1000);
}

#[test]
fn trivial_configurations() {
    let far = [0.45, 0.45, 0.45];
    let c = Configuration::new(vec![[0.0; 3], [0.05, 0.0, 0.0]], 0.1, 0.5).unwrap();
    assert!(collision_indicators(&c).pair(0, 1));
    let c = Configuration::new(vec![[0.0; 3], [0.05, 0.0, 0.0], [0.0, 0.05, 0.0], far], 0.1, 0.5).unwrap();
    let fields = collision_indicators(&c);
    for i in 0..3 {
        for j in 0..3 {
            assert!(!fields.pair(i, j));
        }
    }
    assert!(fields.triple(0, 1, 2) && fields.triple(0, 2, 1));
    let sums = check_exclusion(&c).unwrap();
    assert_eq!(&sums[..3], &[1.0, 1.0, 1.0]);
    assert_eq!(sums[3], 0.0);
    let c = Configuration::new(vec![[0.0; 3], [0.05, 0.0, 0.0], far], 0.1, 0.5).unwrap();
    assert_eq!(check_exclusion(&c).unwrap(), vec![1.0, 1.0, 0.0]);
    assert!(Configuration::new(vec![[0.6, 0.0, 0.0]], 0.1, 0.5).is_err());
}

#[test]
fn exclusion_sweep_is_clean_and_thread_independent() {
    let s = exclusion_sweep(50_000, &[3, 5, 8, 12], &[0.05, 0.1, 0.2], 0.5, 9).unwrap();
    assert_eq!(s.violations, 0);
    assert_eq!(s.draws, 50_000);
    assert!(s.with_pairs > 1000 && s.with_triples > 1000, "{s:?}");
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| exclusion_sweep(50_000, &[3, 5, 8, 12], &[0.05, 0.1, 0.2], 0.5, 9).unwrap());
    assert_eq!(single, s);
}
