//! Three-body zero-energy scattering in the centre-of-mass frame.
//!
//! With `y = M⁻¹x` the kinetic form `2|M∇g|²` becomes `2|∇_y g|²`, so for an
//! m-radial potential `W(x) = w(|M⁻¹x|)` the problem is radial in six
//! dimensions:
//!
//! ```text
//! f'' + (5/s) f' = (w(s)/2) f,      f(s) = 1 − β/s⁴ outside the support.
//! ```
//!
//! The scattering energy follows either from the tail coefficient,
//! `b = det(M)·8π³·β`, or from the quadrature `b = det(M)·π³ ∫ s⁵ w f ds`.
//! Both are computed and must agree.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::potentials::{hyperradius, Profile, ScatteringMatrix, Table, ThreeBodyPotential};
use crate::radial::{self, cutoff, gauss5, HermiteTable, RadialFunctional};
use crate::scatter2::{ProfileTable, Resolution};

/// `|S⁵| = π³`.
pub const SPHERE5_AREA: f64 = PI * PI * PI;

/// Zero-energy solution of the hyperradial problem.
#[derive(Debug, Clone)]
pub struct ScatteringSolution3B {
    /// Normalised `f` and `f'` on `[0, S]`.
    table: HermiteTable,
    /// Support radius `S` of the hyperradial profile.
    pub support: f64,
    /// Tail coefficient in `f = 1 − β/s⁴`.
    pub beta: f64,
    /// Quadrature route `det(M)·π³ ∫ s⁵ w f`.
    pub b: f64,
    /// Tail route `det(M)·8π³β`.
    pub b_tail: f64,
    pub det_m: f64,
    pub refinement: Vec<(usize, f64)>,
}

/// Nodes in `[0, start·h)` come from the power series of the solution for
/// constant `w = w(0)`; the integrator starts at `start·h`, where the `5/s`
/// term is no longer stiff.
const SERIES_NODES: usize = 4;

fn series(kappa2: f64, s: f64) -> (f64, f64) {
    let mut c = 1.0;
    let (mut f, mut df) = (1.0, 0.0);
    for k in 1..12 {
        let k2 = 2.0 * k as f64;
        c *= kappa2 / (k2 * (k2 + 4.0));
        f += c * s.powi(2 * k);
        df += c * k2 * s.powi(2 * k - 1);
    }
    (f, df)
}

struct RawSolution {
    f: Vec<f64>,
    df: Vec<f64>,
    h: f64,
}

fn integrate_hyperradial(w: &Profile, support: f64, n: usize) -> RawSolution {
    let h = support / n as f64;
    let kappa2 = 0.5 * w.value(0.0);
    let mut f = Vec::with_capacity(n + 1);
    let mut df = Vec::with_capacity(n + 1);
    for i in 0..SERIES_NODES {
        let (a, b) = series(kappa2, h * i as f64);
        f.push(a);
        df.push(b);
    }
    let s0 = h * SERIES_NODES as f64;
    let (f0, df0) = series(kappa2, s0);
    let (fs, dfs) = radial::rk4_second_order(s0, support, n - SERIES_NODES, f0, df0, |s, y, dy| {
        -5.0 * dy / s + 0.5 * w.value(s) * y
    });
    f.extend(fs);
    df.extend(dfs);
    RawSolution { f, df, h }
}

fn tail_beta(raw: &RawSolution, support: f64) -> (f64, f64) {
    let (fs, dfs) = (*raw.f.last().unwrap(), *raw.df.last().unwrap());
    let amp = fs + dfs * support / 4.0;
    (dfs * support.powi(5) / (4.0 * amp), amp)
}

/// Solves the hyperradial zero-energy problem for an m-radial potential.
///
/// General tabulated potentials have no fast route; use
/// [`variational_minimum_6d`] for them.
pub fn solve_scattering_energy(w: &ThreeBodyPotential, res: Resolution) -> Result<ScatteringSolution3B> {
    let profile = w.hyperradial_profile().ok_or_else(|| {
        Error::InvalidInput(
            "the ODE route needs an m-radial potential; use the variational route for tabulated-6d".into(),
        )
    })?;
    let det_m = ScatteringMatrix::get().det();
    let support = profile.support_radius();
    let mut n = res.initial_steps.max(4 * SERIES_NODES);
    let mut refinement = Vec::new();
    let mut raw = integrate_hyperradial(profile, support, n);
    let (mut beta, _) = tail_beta(&raw, support);
    refinement.push((n, beta));
    loop {
        if 2 * n > res.max_steps {
            return Err(Error::NoConvergence(format!(
                "tail coefficient not stable after {n} steps"
            )));
        }
        let raw2 = integrate_hyperradial(profile, support, 2 * n);
        let (beta2, _) = tail_beta(&raw2, support);
        refinement.push((2 * n, beta2));
        let settled = (beta2 - beta).abs() <= res.rel_tol * beta2.abs() || beta2 == beta;
        n *= 2;
        raw = raw2;
        beta = beta2;
        if settled {
            break;
        }
    }
    let (beta, amp) = tail_beta(&raw, support);
    if raw.df.iter().any(|&d| d < 0.0) || raw.f.iter().any(|&f| f <= 0.0) {
        return Err(Error::NonMonotone { r: support });
    }
    let f: Vec<f64> = raw.f.iter().map(|v| v / amp).collect();
    let df: Vec<f64> = raw.df.iter().map(|v| v / amp).collect();
    let table = HermiteTable::new(0.0, raw.h, f, df);
    let mut integral = 0.0;
    for i in 0..n {
        let (sa, sb) = (raw.h * i as f64, raw.h * (i + 1) as f64);
        integral += gauss5(sa, sb, |s| s.powi(5) * profile.value(s) * table.eval(s).0);
    }
    let b = det_m * SPHERE5_AREA * integral;
    let b_tail = det_m * 8.0 * SPHERE5_AREA * beta;
    let scale = b.abs().max(b_tail.abs());
    if scale > 0.0 {
        let rel = (b - b_tail).abs() / scale;
        if rel > 1e-4 {
            return Err(Error::RouteDisagreement {
                what: "quadrature and tail values of b".into(),
                first: b,
                second: b_tail,
                rel,
            });
        }
    }
    Ok(ScatteringSolution3B {
        table,
        support,
        beta,
        b,
        b_tail,
        det_m,
        refinement,
    })
}

impl ScatteringSolution3B {
    /// `f(s)` and `f'(s)`.
    pub fn f(&self, s: f64) -> (f64, f64) {
        if s >= self.support {
            let s4 = s.powi(4);
            (1.0 - self.beta / s4, 4.0 * self.beta / (s4 * s))
        } else {
            self.table.eval(s)
        }
    }

    /// `ω̃ = 1 − f` and its derivative.
    pub fn omega(&self, s: f64) -> (f64, f64) {
        let (f, df) = self.f(s);
        (1.0 - f, -df)
    }

    /// `ω̃` on a uniform grid over `[0, S]`.
    pub fn omega_table(&self, intervals: usize) -> ProfileTable {
        let h = self.support / intervals as f64;
        let radii: Vec<f64> = (0..=intervals).map(|i| h * i as f64).collect();
        let values = radii.iter().map(|&s| self.omega(s).0).collect();
        ProfileTable { radii, values }
    }

    /// Largest relative deviation of `f` from `1 − β/s⁴` on a few radii
    /// beyond the support, comparing the table continuation with the tail.
    pub fn exterior_fit_residual(&self) -> f64 {
        let s = self.support;
        let (f, _) = self.table.eval(s);
        let tail = 1.0 - self.beta / s.powi(4);
        ((f - tail) / tail).abs()
    }
}

fn functional_6d() -> RadialFunctional {
    RadialFunctional {
        dim: 6,
        prefactor: ScatteringMatrix::get().det() * SPHERE5_AREA,
    }
}

/// Hyperradial profile seen by hyperradial trial functions: the potential
/// itself when m-radial, otherwise its average over the unit sphere `S⁵` in
/// `y`-coordinates, tabulated on `points` radii.
pub fn effective_profile(w: &ThreeBodyPotential, points: usize, directions: usize, seed: u64) -> Result<Profile> {
    match w {
        ThreeBodyPotential::MRadial(p) => Ok(p.clone()),
        ThreeBodyPotential::Tabulated6d(_) => {
            let m = ScatteringMatrix::get();
            let s_max = w.support_radius() / m.min_singular_value();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dirs: Vec<[f64; 6]> = (0..directions)
                .map(|_| {
                    let mut z = [0.0; 6];
                    for c in z.iter_mut() {
                        *c = StandardNormal.sample(&mut rng);
                    }
                    let n = z.iter().map(|c| c * c).sum::<f64>().sqrt();
                    z.map(|c| c / n)
                })
                .collect();
            let radii: Vec<f64> = (0..points).map(|i| s_max * i as f64 / (points - 1) as f64).collect();
            let values = radii
                .iter()
                .map(|&s| {
                    dirs.iter()
                        .map(|d| {
                            let (x, y) = m.apply(&[s * d[0], s * d[1], s * d[2]], &[s * d[3], s * d[4], s * d[5]]);
                            w.eval(&x, &y)
                        })
                        .sum::<f64>()
                        / directions as f64
                })
                .collect();
            Ok(Profile::Tabulated(Table::new(radii, values)?))
        }
    }
}

/// `∫ 2|M∇g|² + W(1 − g)²` over `ℝ⁶` for the hyperradial profile `h(s)`,
/// including the exact energy of the continuation `h(S)(S/s)⁴`.
pub fn variational_energy_6d(h: &ProfileTable, w: &ThreeBodyPotential) -> Result<f64> {
    let profile = effective_profile(w, 257, 4096, 0)?;
    if h.outer() < profile.support_radius() && !profile.is_zero() {
        return Err(Error::InvalidInput(format!(
            "profile table ends at {} inside the support {}",
            h.outer(),
            profile.support_radius()
        )));
    }
    radial::checked_functional(&functional_6d(), &h.radii, &h.values, |s| profile.value(s))
}

/// Minimum of the six-dimensional functional over piecewise-linear
/// hyperradial profiles. Equal to `b` up to discretisation for m-radial
/// potentials; an upper bound otherwise.
pub fn variational_minimum_6d(w: &ThreeBodyPotential, elements: usize) -> Result<(f64, ProfileTable)> {
    let profile = effective_profile(w, 257, 4096, 0)?;
    let outer = profile.support_radius();
    let nodes = radial::breakpoint_nodes(&profile.breakpoints(), outer, elements);
    let (value, g) = functional_6d().minimize(&nodes, |s| profile.value(s))?;
    Ok((
        value,
        ProfileTable {
            radii: nodes,
            values: g,
        },
    ))
}

/// Fitted constants of the pointwise estimates for `f̃_ℓ`, expressed in the
/// Euclidean norm `|x|` of `ℝ⁶` through the worst case over `|x| = |M y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBounds3B {
    pub f_min: f64,
    pub f_max: f64,
    /// `sup ω̃(x) |x|⁴ / b` for the untruncated minimiser.
    pub omega_const: f64,
    /// `sup |∇f̃_ℓ(x)| |x|⁵ / b`.
    pub gradient_const: f64,
    /// `sup (1 − f̃_ℓ²) |x|⁴ / b`.
    pub one_minus_f2_const: f64,
    /// `max |ε̃_ℓ| ℓ⁶ / b`.
    pub eps_const: f64,
    /// Largest hyperradius with `|ε̃_ℓ| > 1e-4 max |ε̃_ℓ|`.
    pub eps_support_s: f64,
    /// `‖M‖ · eps_support_s`, a bound on the support in `|x|`.
    pub eps_support_x: f64,
    /// `∫_{ℝ⁶} ε̃_ℓ dx`.
    pub eps_integral: f64,
}

/// Cut-off three-body solution `f̃_ℓ = 1 − χ(|M⁻¹x|/ℓ) ω̃`.
#[derive(Debug, Clone)]
pub struct TruncatedSolution3B {
    pub ell: f64,
    /// `√(3/2) ℓ`: beyond this single-pair distance `f̃_ℓ = 1`.
    pub ell_tilde: f64,
    pub b: f64,
    table: HermiteTable,
    pub eps_radii: Vec<f64>,
    /// `ε̃_ℓ = −2Δ_M f̃_ℓ + W f̃_ℓ` at hyperradii `eps_radii`.
    pub eps: Vec<f64>,
    pub bounds: TruncationBounds3B,
}

pub const TRUNCATED_INTERVALS_3B: usize = 4096;

/// Builds `f̃_ℓ` for `ℓ ≥ 2R₀` (`R₀` the support radius in `|x|`).
pub fn build_truncated_3b(w: &ThreeBodyPotential, ell: f64) -> Result<TruncatedSolution3B> {
    let r0 = w.support_radius();
    if !(ell >= 2.0 * r0) {
        return Err(Error::Precondition(format!(
            "cut-off length {ell} is below twice the support radius {r0}"
        )));
    }
    let sol = solve_scattering_energy(w, Resolution::default())?;
    Ok(truncate_3b(&sol, ell))
}

/// Cut-off solution from an already computed scattering solution.
///
/// `ε̃_ℓ` is the discrete hyperradial Laplacian of `(1 − χ_ℓ) ω̃` in flux
/// form, with face weights chosen so the stencil annihilates `s⁻⁴`. Needs
/// `ℓ ≥ 2S` with `S` the hyperradial support.
pub fn truncate_3b(sol: &ScatteringSolution3B, ell: f64) -> TruncatedSolution3B {
    let m = ScatteringMatrix::get();
    let b = sol.b;
    let f_ell = |s: f64| -> (f64, f64) {
        let (chi, dchi) = cutoff(s / ell);
        if chi == 0.0 {
            return (1.0, 0.0);
        }
        let (w, dw) = sol.omega(s);
        (1.0 - chi * w, -(dchi / ell) * w - chi * dw)
    };
    let table = HermiteTable::sample(0.0, ell, TRUNCATED_INTERVALS_3B, f_ell);

    let n = TRUNCATED_INTERVALS_3B;
    let h = 1.25 * ell / n as f64;
    let eps_radii: Vec<f64> = (0..=n).map(|i| h * i as f64).collect();
    // (1 − χ̃) ω̃ vanishes for s ≤ ℓ/2, and ω̃ = β/s⁴ beyond S ≤ ℓ/2
    let beta = sol.beta;
    let g = |s: f64| -> f64 {
        let chi = cutoff(s / ell).0;
        if chi == 1.0 {
            return 0.0;
        }
        (1.0 - chi) * beta / s.powi(4)
    };
    let face = |s0: f64, s1: f64| 4.0 * h / (s0.powi(-4) - s1.powi(-4));
    let eps: Vec<f64> = eps_radii
        .iter()
        .map(|&s| {
            if g(s - h) == 0.0 && g(s) == 0.0 && g(s + h) == 0.0 {
                return 0.0;
            }
            let (gm, g0, gp) = (g(s - h), g(s), g(s + h));
            let flux = face(s, s + h) * (gp - g0) - face(s - h, s) * (g0 - gm);
            -2.0 * flux / (h * h * s.powi(5))
        })
        .collect();
    let weighted: Vec<f64> = eps_radii
        .iter()
        .zip(&eps)
        .map(|(s, e)| sol.det_m * SPHERE5_AREA * s.powi(5) * e)
        .collect();
    let eps_integral = radial::simpson(h, &weighted);
    let eps_max = eps.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let eps_support_s = eps_radii
        .iter()
        .zip(&eps)
        .filter(|(_, e)| e.abs() > 1e-4 * eps_max)
        .map(|(s, _)| *s)
        .fold(0.0, f64::max);

    let norm = m.norm();
    let inv_norm = 1.0 / m.min_singular_value();
    let mut bounds = TruncationBounds3B {
        f_min: f64::INFINITY,
        f_max: f64::NEG_INFINITY,
        omega_const: 0.0,
        gradient_const: 0.0,
        one_minus_f2_const: 0.0,
        eps_const: if b > 0.0 { eps_max * ell.powi(6) / b } else { 0.0 },
        eps_support_s,
        eps_support_x: norm * eps_support_s,
        eps_integral,
    };
    for (s, (&f, &df)) in table.nodes().zip(table.values().iter().zip(table.derivs())) {
        bounds.f_min = bounds.f_min.min(f);
        bounds.f_max = bounds.f_max.max(f);
        if b > 0.0 && s > 0.0 {
            let x = norm * s;
            bounds.one_minus_f2_const = bounds.one_minus_f2_const.max((1.0 - f * f) * x.powi(4) / b);
            bounds.gradient_const = bounds.gradient_const.max(inv_norm * df.abs() * x.powi(5) / b);
        }
    }
    if b > 0.0 {
        // untruncated ω̃ on [0, S] and its exact tail β/s⁴ beyond
        let samples = 2048;
        for i in 1..=samples {
            let s = 2.0 * sol.support * i as f64 / samples as f64;
            let x = norm * s;
            bounds.omega_const = bounds.omega_const.max(sol.omega(s).0 * x.powi(4) / b);
        }
    }
    TruncatedSolution3B {
        ell,
        ell_tilde: (1.5f64).sqrt() * ell,
        b,
        table,
        eps_radii,
        eps,
        bounds,
    }
}

impl TruncatedSolution3B {
    /// `F_ℓ(s)` and `F_ℓ'(s)` as functions of the hyperradius.
    #[inline]
    pub fn f_hyper(&self, s: f64) -> (f64, f64) {
        if s >= self.ell {
            (1.0, 0.0)
        } else {
            self.table.eval(s)
        }
    }

    /// `f̃_ℓ(x, y)`.
    pub fn f(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.f_hyper(hyperradius(x, y)).0
    }

    pub fn table(&self) -> ProfileTable {
        ProfileTable {
            radii: self.table.nodes().collect(),
            values: self.table.values().to_vec(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let bd = &self.bounds;
        let fail = |msg: String| Err(Error::BoundViolated(msg));
        if bd.f_min < -1e-12 || bd.f_max > 1.0 + 1e-12 {
            return fail(format!("f_ell leaves [0, 1]: [{}, {}]", bd.f_min, bd.f_max));
        }
        let limit = 2.0 * self.ell * ScatteringMatrix::get().norm();
        if bd.eps_support_x > limit {
            return fail(format!("eps support {} exceeds {}", bd.eps_support_x, limit));
        }
        if self.b > 0.0 {
            let ratio = bd.eps_integral / self.b;
            if (ratio - 1.0).abs() > 0.02 {
                return fail(format!("integral of eps is {ratio} times b"));
            }
        } else if bd.eps_integral != 0.0 {
            return fail(format!("eps integrates to {} for b = 0", bd.eps_integral));
        }
        for (name, c) in [
            ("omega", bd.omega_const),
            ("gradient", bd.gradient_const),
            ("1 - f^2", bd.one_minus_f2_const),
            ("eps", bd.eps_const),
        ] {
            if !c.is_finite() {
                return fail(format!("{name} constant is not finite"));
            }
        }
        Ok(())
    }

    /// Checks `f̃_ℓ(x₁, x₂) ≥ max(𝟙{|x₁| ≥ ℓ̃}, 𝟙{|x₂| ≥ ℓ̃})` on the given
    /// pairs; returns the number of violations.
    pub fn disentangling_violations(&self, pairs: &[(Vec3, Vec3)]) -> usize {
        pairs
            .iter()
            .filter(|(x1, x2)| {
                let g = |x: &Vec3| -> f64 {
                    if crate::geom::norm(x) >= self.ell_tilde {
                        1.0
                    } else {
                        0.0
                    }
                };
                self.f(x1, x2) < g(x1).max(g(x2))
            })
            .count()
    }
}
