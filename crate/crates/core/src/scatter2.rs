//! Two-body zero-energy scattering: the scattering length `a(V)`, the
//! variational functional `∫ 2|∇g|² + V(1 − g)²` whose infimum is `8πa`,
//! and the cut-off solution `f_ℓ = 1 − χ(·/ℓ) ω` with its residual `ε_ℓ`.
//!
//! The radial equation is integrated for `u(r) = r f(r)`:
//! `u'' = (V/2) u`, `u(0) = 0`, `u'(0) = 1`. Outside the support `u` is the
//! straight line `c (r − a)`, which yields both `a` and the normalisation `c`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potentials::RadialPotential;
use crate::radial::{self, cutoff, HermiteTable, RadialFunctional};

/// Radial profile `g(r)` sampled at increasing radii starting at 0, read as
/// a piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProfileTable {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 3 {
            return Err(Error::InvalidInput(
                "profile table needs at least three rows of matching length".into(),
            ));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "profile radii must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { radii, values })
    }

    pub fn outer(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    /// Two-column text, one `radius value` row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (r, v) in self.radii.iter().zip(&self.values) {
            out.push_str(&format!("{r:.12e} {v:.12e}\n"));
        }
        out
    }
}

/// Integration controls for the radial solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    /// Steps across the support on the first pass.
    pub initial_steps: usize,
    /// Relative change of the extracted constant accepted between two halvings.
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            initial_steps: 256,
            rel_tol: 1e-10,
            max_steps: 1 << 22,
        }
    }
}

/// Zero-energy solution of the two-body problem.
#[derive(Debug, Clone)]
pub struct ScatteringSolution2B {
    /// `u` and `u'` on `[0, r_match]`.
    table: HermiteTable,
    pub a: f64,
    /// Slope `c` of the exterior line `u = c (r − a)`; `f = u / (c r)`.
    pub slope: f64,
    pub r_match: f64,
    pub support: f64,
    /// `V(0)`, used for the small-`r` expansion of `f'`.
    v0: f64,
    /// `(steps across the support, a)` for every pass of the refinement.
    pub refinement: Vec<(usize, f64)>,
    /// Relative mismatch between the integrated `u(r_match)` and the exterior line.
    pub exterior_residual: f64,
}

fn integrate_u(p: &RadialPotential, r0: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    radial::rk4_second_order(0.0, r0, n, 0.0, 1.0, |r, u, _| 0.5 * p.value(r) * u)
}

fn read_off(u: f64, du: f64, r0: f64) -> f64 {
    r0 - u / du
}

/// Solves `u'' = (V/2) u` across the support with step halving until `a`
/// is stable to `res.rel_tol`.
pub fn solve_scattering_length(p: &RadialPotential, res: Resolution) -> Result<ScatteringSolution2B> {
    let r0 = p.support_radius();
    let mut n = res.initial_steps.max(8);
    let mut refinement = Vec::new();
    let (mut u, mut du) = integrate_u(p, r0, n);
    let mut a = read_off(u[n], du[n], r0);
    refinement.push((n, a));
    loop {
        if 2 * n > res.max_steps {
            return Err(Error::NoConvergence(format!(
                "scattering length not stable after {n} steps (last change {:.3e})",
                refinement
                    .windows(2)
                    .last()
                    .map(|w| (w[1].1 - w[0].1).abs())
                    .unwrap_or(f64::NAN)
            )));
        }
        let (u2, du2) = integrate_u(p, r0, 2 * n);
        let a2 = read_off(u2[2 * n], du2[2 * n], r0);
        refinement.push((2 * n, a2));
        let settled = (a2 - a).abs() <= res.rel_tol * a2.abs() || a2 == a;
        n *= 2;
        u = u2;
        du = du2;
        a = a2;
        if settled {
            break;
        }
    }
    if let Some(i) = du.iter().position(|&d| d < 0.0) {
        return Err(Error::NonMonotone {
            r: r0 * i as f64 / n as f64,
        });
    }
    if let Some(i) = u.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::NonMonotone {
            r: r0 * (i + 1) as f64 / n as f64,
        });
    }
    let h = r0 / n as f64;
    let c = du[n];
    // One exterior step; u is linear there and RK4 is exact on it.
    let (ue, due) = (u[n] + h * du[n], du[n]);
    let r_match = r0 + h;
    let line = c * (r_match - a);
    let exterior_residual = ((ue - line) / line.abs().max(f64::MIN_POSITIVE)).abs();
    u.push(ue);
    du.push(due);
    Ok(ScatteringSolution2B {
        table: HermiteTable::new(0.0, h, u, du),
        a,
        slope: c,
        r_match,
        support: r0,
        v0: p.value(0.0),
        refinement,
        exterior_residual,
    })
}

impl ScatteringSolution2B {
    /// `u(r)` and `u'(r)`.
    pub fn u(&self, r: f64) -> (f64, f64) {
        if r <= self.r_match {
            self.table.eval(r)
        } else {
            (self.slope * (r - self.a), self.slope)
        }
    }

    /// `f(r)` and `f'(r)` for `f = 1 − ω`.
    pub fn f(&self, r: f64) -> (f64, f64) {
        let h = self.table.step();
        if r >= self.support {
            return (1.0 - self.a / r, self.a / (r * r));
        }
        if r <= 1e-3 * h {
            let f0 = 1.0 / self.slope;
            return (f0 * (1.0 + self.v0 * r * r / 12.0), f0 * self.v0 * r / 6.0);
        }
        let (u, du) = self.table.eval(r);
        (u / (self.slope * r), (du * r - u) / (self.slope * r * r))
    }

    /// The minimiser `ω = 1 − f` and its derivative.
    pub fn omega(&self, r: f64) -> (f64, f64) {
        let (f, df) = self.f(r);
        (1.0 - f, -df)
    }

    /// `ω` on a uniform grid of `intervals` intervals over `[0, support]`.
    pub fn omega_table(&self, intervals: usize) -> ProfileTable {
        let h = self.support / intervals as f64;
        let radii: Vec<f64> = (0..=intervals).map(|i| h * i as f64).collect();
        let values = radii.iter().map(|&r| self.omega(r).0).collect();
        ProfileTable { radii, values }
    }

    /// Observed convergence order of `a` from the last three refinement passes.
    pub fn observed_order(&self) -> Option<f64> {
        let k = self.refinement.len();
        if k < 3 {
            return None;
        }
        let (a0, a1, a2) = (
            self.refinement[k - 3].1,
            self.refinement[k - 2].1,
            self.refinement[k - 1].1,
        );
        let (d1, d2) = ((a1 - a0).abs(), (a2 - a1).abs());
        if d1 == 0.0 || d2 == 0.0 {
            return None;
        }
        Some((d1 / d2).log2())
    }
}

fn functional_3d() -> RadialFunctional {
    RadialFunctional {
        dim: 3,
        prefactor: 4.0 * PI,
    }
}

/// `∫ 2|∇g|² + V(1 − g)²` for the radial profile `g`, including the exact
/// energy of the harmonic continuation `g(R)·R/r` beyond the last radius `R`.
///
/// Errors with [`Error::CoarseGrid`] when the value on every other node
/// differs by more than 1%.
pub fn variational_energy_2b(g: &ProfileTable, p: &RadialPotential) -> Result<f64> {
    if g.outer() < p.support_radius() && !p.is_zero() {
        return Err(Error::InvalidInput(format!(
            "profile table ends at {} inside the support radius {}",
            g.outer(),
            p.support_radius()
        )));
    }
    radial::checked_functional(&functional_3d(), &g.radii, &g.values, |r| p.value(r))
}

/// Minimum of the functional over piecewise-linear profiles with about
/// `elements` elements on `[0, R₀]`. An upper bound for `8πa` that
/// converges at second order.
pub fn variational_minimum_2b(p: &RadialPotential, elements: usize) -> Result<(f64, ProfileTable)> {
    let nodes = radial::breakpoint_nodes(&p.profile().breakpoints(), p.support_radius(), elements);
    let (value, g) = functional_3d().minimize(&nodes, |r| p.value(r))?;
    Ok((
        value,
        ProfileTable {
            radii: nodes,
            values: g,
        },
    ))
}

/// Fitted constants and checks of the pointwise estimates for `f_ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBounds2B {
    pub f_min: f64,
    pub f_max: f64,
    /// `max ω_ℓ(r) r / a`; at most 1.
    pub omega_const: f64,
    /// `max |f_ℓ'(r)| r² / a`.
    pub gradient_const: f64,
    /// `max (1 − f_ℓ²) r / a`.
    pub one_minus_f2_const: f64,
    /// `max |ε_ℓ| ℓ³ / a`.
    pub eps_const: f64,
    /// Largest radius where `|ε_ℓ|` exceeds `1e-9 max |ε_ℓ|`.
    pub eps_support: f64,
    /// `∫ ε_ℓ` by Simpson's rule.
    pub eps_integral: f64,
}

/// Cut-off scattering solution `f_ℓ = 1 − χ(r/ℓ) ω(r)`.
#[derive(Debug, Clone)]
pub struct TruncatedSolution2B {
    pub ell: f64,
    pub a: f64,
    /// `f_ℓ` and `f_ℓ'` on `[0, ℓ]`; `f_ℓ = 1` beyond.
    table: HermiteTable,
    /// Radii of the residual grid, extending past `ℓ`.
    pub eps_radii: Vec<f64>,
    /// `ε_ℓ = −2Δf_ℓ + V f_ℓ` at `eps_radii`.
    pub eps: Vec<f64>,
    pub bounds: TruncationBounds2B,
}

/// Table resolution of the cut-off solution.
pub const TRUNCATED_INTERVALS: usize = 4096;

/// Builds `f_ℓ` for `ℓ ≥ 2R₀`.
///
/// The residual `ε_ℓ` comes from the discrete radial Laplacian applied to
/// `f_ℓ − f = (1 − χ_ℓ) ω`; the interior solution `f` contributes nothing
/// because it solves the equation exactly. The stencil is the second
/// difference of `r g`.
pub fn build_truncated_2b(p: &RadialPotential, ell: f64) -> Result<TruncatedSolution2B> {
    let r0 = p.support_radius();
    if !(ell >= 2.0 * r0) {
        return Err(Error::Precondition(format!(
            "cut-off length {ell} is below twice the support radius {r0}"
        )));
    }
    let sol = solve_scattering_length(p, Resolution::default())?;
    Ok(truncate_2b(&sol, ell))
}

/// Cut-off solution from an already computed scattering solution.
pub fn truncate_2b(sol: &ScatteringSolution2B, ell: f64) -> TruncatedSolution2B {
    let a = sol.a;
    let f_ell = |r: f64| -> (f64, f64) {
        let (chi, dchi) = cutoff(r / ell);
        if chi == 0.0 {
            return (1.0, 0.0);
        }
        let (w, dw) = sol.omega(r);
        (1.0 - chi * w, -(dchi / ell) * w - chi * dw)
    };
    let table = HermiteTable::sample(0.0, ell, TRUNCATED_INTERVALS, f_ell);

    let n = TRUNCATED_INTERVALS;
    let r_end = 1.25 * ell;
    let h = r_end / n as f64;
    let eps_radii: Vec<f64> = (0..=n).map(|i| h * i as f64).collect();
    // r (f_ℓ − f) = r (1 − χ) ω vanishes for r ≤ ℓ/2, and ω = a / r beyond
    // R₀ ≤ ℓ/2, so it equals a (1 − χ) wherever it is nonzero.
    let ug = |r: f64| -> f64 { a * (1.0 - cutoff(r / ell).0) };
    let eps: Vec<f64> = eps_radii
        .iter()
        .map(|&r| {
            if r <= 0.0 {
                return 0.0;
            }
            -2.0 * (ug(r + h) - 2.0 * ug(r) + ug(r - h)) / (h * h * r)
        })
        .collect();

    let weighted: Vec<f64> = eps_radii.iter().zip(&eps).map(|(r, e)| 4.0 * PI * r * r * e).collect();
    let eps_integral = radial::simpson(h, &weighted);
    let eps_max = eps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let eps_support = eps_radii
        .iter()
        .zip(&eps)
        .filter(|(_, e)| e.abs() > 1e-9 * eps_max)
        .map(|(r, _)| *r)
        .fold(0.0, f64::max);

    let mut bounds = TruncationBounds2B {
        f_min: f64::INFINITY,
        f_max: f64::NEG_INFINITY,
        omega_const: 0.0,
        gradient_const: 0.0,
        one_minus_f2_const: 0.0,
        eps_const: if a > 0.0 { eps_max * ell.powi(3) / a } else { 0.0 },
        eps_support,
        eps_integral,
    };
    for (r, (&f, &df)) in table.nodes().zip(table.values().iter().zip(table.derivs())) {
        bounds.f_min = bounds.f_min.min(f);
        bounds.f_max = bounds.f_max.max(f);
        if a > 0.0 && r > 0.0 {
            bounds.omega_const = bounds.omega_const.max((1.0 - f) * r / a);
            bounds.gradient_const = bounds.gradient_const.max(df.abs() * r * r / a);
            bounds.one_minus_f2_const = bounds.one_minus_f2_const.max((1.0 - f * f) * r / a);
        }
    }
    TruncatedSolution2B {
        ell,
        a,
        table,
        eps_radii,
        eps,
        bounds,
    }
}

impl TruncatedSolution2B {
    /// `f_ℓ(r)` and `f_ℓ'(r)`.
    #[inline]
    pub fn f(&self, r: f64) -> (f64, f64) {
        if r >= self.ell {
            (1.0, 0.0)
        } else {
            self.table.eval(r)
        }
    }

    /// `ω_ℓ = χ_ℓ ω = 1 − f_ℓ`.
    pub fn omega(&self, r: f64) -> f64 {
        1.0 - self.f(r).0
    }

    /// `f_ℓ` tabulated on `[0, ℓ]`.
    pub fn table(&self) -> ProfileTable {
        ProfileTable {
            radii: self.table.nodes().collect(),
            values: self.table.values().to_vec(),
        }
    }

    /// Checks every estimate that has no free constant, and that the fitted
    /// constants are finite.
    pub fn check(&self) -> Result<()> {
        let b = &self.bounds;
        let fail = |msg: String| Err(Error::BoundViolated(msg));
        if b.f_min < -1e-12 || b.f_max > 1.0 + 1e-12 {
            return fail(format!("f_ell leaves [0, 1]: [{}, {}]", b.f_min, b.f_max));
        }
        if b.omega_const > 1.0 + 1e-9 {
            return fail(format!("omega_ell exceeds a/r by factor {}", b.omega_const));
        }
        let h = self.eps_radii[1];
        if b.eps_support > self.ell + h {
            return fail(format!(
                "eps_ell supported up to {} > ell = {}",
                b.eps_support, self.ell
            ));
        }
        if self.a > 0.0 {
            let ratio = b.eps_integral / (8.0 * PI * self.a);
            if (ratio - 1.0).abs() > 0.01 {
                return fail(format!("integral of eps_ell is {ratio} times 8 pi a"));
            }
        } else if b.eps_integral != 0.0 {
            return fail(format!("eps_ell integrates to {} for a = 0", b.eps_integral));
        }
        for (name, c) in [
            ("gradient", b.gradient_const),
            ("1 - f^2", b.one_minus_f2_const),
            ("eps", b.eps_const),
        ] {
            if !c.is_finite() {
                return fail(format!("{name} constant is not finite"));
            }
        }
        Ok(())
    }
}
