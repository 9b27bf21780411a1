//! Dyson-type operator inequalities and the collision-exclusion indicators
//! used to combine them in the many-body setting.
//!
//! The two one-body inequalities are
//!
//! ```text
//! −2∇𝟙{|x| ≤ R₂}∇ + V ≥ 4πa U              on ℝ³,
//! −2∇𝟙{|x| ≤ R₂}M²∇ + W ≥ b(1 − cR₀/R₁) Ũ   on ℝ⁶,
//! ```
//!
//! with softened potentials `U`, `Ũ` of unit integral supported in the
//! annulus `R₁ ≤ |x| ≤ R₂`. Outside the ball the left side vanishes, so the
//! operator inequality is equivalent to nonnegativity of the Neumann problem
//! on the ball. [`dyson2_gap`] and [`dyson3_gap`] return its lowest
//! eigenvalue.
//!
//! In `y = M⁻¹x` the three-body kinetic form is isotropic and the region
//! `{|My| ≤ R₂}` is an ellipsoid. The hyperradial sector uses the inscribed
//! ball `|y| ≤ R₂/‖M‖`; shrinking the region only removes kinetic energy,
//! so a nonnegative gap there implies one on the ellipsoid.

mod collisions;
mod grid;

pub use collisions::{
    check_exclusion, collision_indicators, exclusion_sweep, CollisionFields, Configuration, ExclusionSweep,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::tridiagonal_lowest;
use crate::potentials::{hyperradius, RadialPotential, ScatteringMatrix, ThreeBodyPotential};
use crate::radial::{breakpoint_nodes, gauss5};
use crate::scatter2::{solve_scattering_length, Resolution};
use crate::scatter3::{solve_scattering_energy, SPHERE5_AREA};

/// Polynomial bump `c (r − R₁)² (R₂ − r)²` on `R₁ ≤ |x| ≤ R₂` in ℝ³ with
/// unit integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Softener2B {
    pub r1: f64,
    pub r2: f64,
    norm: f64,
    /// `∫U` recomputed with the quadrature used downstream.
    pub integral: f64,
}

fn bump(t0: f64, t1: f64, t: f64) -> f64 {
    if t < t0 || t > t1 {
        0.0
    } else {
        (t - t0).powi(2) * (t1 - t).powi(2)
    }
}

fn check_annulus(r1: f64, r2: f64) -> Result<()> {
    if !(r1 > 0.0 && r2 > r1 && r2.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "softener needs 0 < R1 < R2, got R1 = {r1}, R2 = {r2}"
        )));
    }
    Ok(())
}

impl Softener2B {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        check_annulus(r1, r2)?;
        // degree-six integrand: five-point Gauss is exact
        let raw = gauss5(r1, r2, |r| 4.0 * PI * r * r * bump(r1, r2, r));
        let norm = 1.0 / raw;
        let integral = gauss5(r1, r2, |r| 4.0 * PI * r * r * norm * bump(r1, r2, r));
        Ok(Self { r1, r2, norm, integral })
    }

    /// The unit-scale softener supported in `1/4 ≤ |x| ≤ 1/2`.
    pub fn standard() -> Self {
        Self::new(0.25, 0.5).expect("valid annulus")
    }

    /// `U_R = R⁻³ U(·/R)`.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.r1 * r, self.r2 * r)
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.norm * bump(self.r1, self.r2, r)
    }
}

/// m-radial bump `c (s − S₁)² (S₂ − s)²` in the hyperradius, with
/// `S₁ = R₁/σ_min(M)` and `S₂ = R₂/‖M‖` so that its support lies in
/// `R₁ ≤ |x| ≤ R₂`; unit integral over ℝ⁶.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Softener3B {
    pub r1: f64,
    pub r2: f64,
    pub s1: f64,
    pub s2: f64,
    norm: f64,
    pub integral: f64,
}

impl Softener3B {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        check_annulus(r1, r2)?;
        let m = ScatteringMatrix::get();
        let (s1, s2) = (r1 / m.min_singular_value(), r2 / m.norm());
        if s1 >= s2 {
            return Err(Error::InvalidInput(format!(
                "R2/R1 = {} leaves no hyperradial shell; need more than {}",
                r2 / r1,
                m.norm() / m.min_singular_value()
            )));
        }
        let measure = m.det() * SPHERE5_AREA;
        // degree-nine integrand: five-point Gauss is exact
        let raw = gauss5(s1, s2, |s| measure * s.powi(5) * bump(s1, s2, s));
        let norm = 1.0 / raw;
        let integral = gauss5(s1, s2, |s| measure * s.powi(5) * norm * bump(s1, s2, s));
        Ok(Self {
            r1,
            r2,
            s1,
            s2,
            norm,
            integral,
        })
    }

    pub fn standard() -> Self {
        Self::new(0.25, 0.5).expect("valid annulus")
    }

    /// `Ũ_R = R⁻⁶ Ũ(·/R)`.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.r1 * r, self.r2 * r)
    }

    /// Value as a function of the hyperradius.
    #[inline]
    pub fn value_hyper(&self, s: f64) -> f64 {
        self.norm * bump(self.s1, self.s2, s)
    }

    pub fn value(&self, x: &Vec3, y: &Vec3) -> f64 {
        self.value_hyper(hyperradius(x, y))
    }
}

/// How the gap operator is discretised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GapMode {
    /// Radial (or hyperradial) sector: linear finite elements, lumped mass,
    /// exact tridiagonal eigenvalue by Sturm bisection.
    Sector { elements: usize },
    /// Node grid on the ball (ℝ³) or ellipsoid (ℝ⁶) with `points` nodes per
    /// axis; lowest eigenvalue by Lanczos.
    Grid { points: usize },
}

impl Default for GapMode {
    fn default() -> Self {
        GapMode::Sector { elements: 2000 }
    }
}

/// Lowest eigenvalue of the discretised `kinetic + potential − κ·softener`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    pub lambda_min: f64,
    /// Coefficient `κ` multiplying the softener.
    pub coefficient: f64,
    /// Grid spacing.
    pub h: f64,
    /// Allowed negative excursion `10⁻⁵ (π/h)²`.
    pub tolerance: f64,
    pub mode: GapMode,
}

impl GapReport {
    pub fn passes(&self) -> bool {
        self.lambda_min >= -self.tolerance
    }
}

fn tolerance(h: f64) -> f64 {
    1e-5 * (PI / h).powi(2)
}

/// Lowest eigenvalue of `∫ r^{d−1}(2ψ'² + q ψ²) / ∫ r^{d−1} ψ²` over
/// piecewise-linear `ψ` on `nodes`, with lumped mass and potential.
fn sector_lowest(dim: i32, nodes: &[f64], q: impl Fn(f64) -> f64) -> f64 {
    let n = nodes.len();
    let mut mass = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    let w = |r: f64| r.powi(dim - 1);
    for e in 0..n - 1 {
        let (r0, r1) = (nodes[e], nodes[e + 1]);
        let h = r1 - r0;
        let stiff = 2.0 * gauss5(r0, r1, w) / (h * h);
        diag[e] += stiff;
        diag[e + 1] += stiff;
        off[e] -= stiff;
        let phi0 = |r: f64| (r1 - r) / h;
        let phi1 = |r: f64| (r - r0) / h;
        mass[e] += gauss5(r0, r1, |r| w(r) * phi0(r));
        mass[e + 1] += gauss5(r0, r1, |r| w(r) * phi1(r));
        diag[e] += gauss5(r0, r1, |r| w(r) * q(r) * phi0(r));
        diag[e + 1] += gauss5(r0, r1, |r| w(r) * q(r) * phi1(r));
    }
    let d: Vec<f64> = diag.iter().zip(&mass).map(|(k, m)| k / m).collect();
    let e: Vec<f64> = off
        .iter()
        .enumerate()
        .map(|(i, k)| k / (mass[i] * mass[i + 1]).sqrt())
        .collect();
    tridiagonal_lowest(&d, &e)
}

fn sector_nodes(breaks: &[f64], outer: f64, elements: usize) -> Result<Vec<f64>> {
    if elements < 8 {
        return Err(Error::InvalidInput(format!("need at least 8 elements, got {elements}")));
    }
    Ok(breakpoint_nodes(breaks, outer, elements))
}

fn two_body_precondition(p: &RadialPotential, u: &Softener2B) -> Result<()> {
    let r0 = p.support_radius();
    if !p.is_zero() && r0 >= u.r1 {
        return Err(Error::Precondition(format!(
            "support radius {r0} must lie below the softener's inner radius {}",
            u.r1
        )));
    }
    Ok(())
}

/// Gap of `−2∇𝟙{|x| ≤ R₂}∇ + V − κU` for an explicit coefficient `κ`.
pub fn dyson2_gap_with(p: &RadialPotential, u: &Softener2B, kappa: f64, mode: GapMode) -> Result<GapReport> {
    two_body_precondition(p, u)?;
    let (lambda_min, h) = match mode {
        GapMode::Sector { elements } => {
            let mut breaks = p.profile().breakpoints();
            breaks.extend([u.r1, u.r2]);
            let nodes = sector_nodes(&breaks, u.r2, elements)?;
            let h = u.r2 / elements as f64;
            (sector_lowest(3, &nodes, |r| p.value(r) - kappa * u.value(r)), h)
        }
        GapMode::Grid { points } => grid::ball_gap_3d(p, u, kappa, points)?,
    };
    Ok(GapReport {
        lambda_min,
        coefficient: kappa,
        h,
        tolerance: tolerance(h),
        mode,
    })
}

/// Gap of the two-body Dyson inequality with `U_R` and coefficient `4πa`.
pub fn dyson2_gap(p: &RadialPotential, u: &Softener2B, r: f64, mode: GapMode) -> Result<GapReport> {
    let a = if p.is_zero() {
        0.0
    } else {
        solve_scattering_length(p, Resolution::default())?.a
    };
    dyson2_gap_with(p, &u.scaled(r)?, 4.0 * PI * a, mode)
}

fn three_body_precondition(w: &ThreeBodyPotential, u: &Softener3B) -> Result<()> {
    let r0 = w.support_radius();
    if !w.is_zero() && r0 >= u.r1 {
        return Err(Error::Precondition(format!(
            "support radius {r0} must lie below the softener's inner radius {}",
            u.r1
        )));
    }
    if w.hyperradial_profile().is_none() {
        return Err(Error::InvalidInput(
            "three-body gap checks need an m-radial potential".into(),
        ));
    }
    Ok(())
}

/// Gap of `−2∇𝟙M²∇ + W − κŨ` for an explicit coefficient `κ`.
pub fn dyson3_gap_with(w: &ThreeBodyPotential, u: &Softener3B, kappa: f64, mode: GapMode) -> Result<GapReport> {
    three_body_precondition(w, u)?;
    let profile = w.hyperradial_profile().expect("checked above");
    let (lambda_min, h) = match mode {
        GapMode::Sector { elements } => {
            let mut breaks = profile.breakpoints();
            breaks.extend([u.s1, u.s2]);
            let nodes = sector_nodes(&breaks, u.s2, elements)?;
            let h = u.s2 / elements as f64;
            (
                sector_lowest(6, &nodes, |s| profile.value(s) - kappa * u.value_hyper(s)),
                h,
            )
        }
        GapMode::Grid { points } => grid::ellipsoid_gap_6d(w, u, kappa, points)?,
    };
    Ok(GapReport {
        lambda_min,
        coefficient: kappa,
        h,
        tolerance: tolerance(h),
        mode,
    })
}

/// Gap of the three-body Dyson inequality with `Ũ_R` and coefficient
/// `b(1 − cR₀/R₁)`.
pub fn dyson3_gap(w: &ThreeBodyPotential, u: &Softener3B, r: f64, c: f64, mode: GapMode) -> Result<GapReport> {
    let u = u.scaled(r)?;
    let b = if w.is_zero() {
        0.0
    } else {
        solve_scattering_energy(w, Resolution::default())?.b
    };
    let kappa = b * (1.0 - c * w.support_radius() / u.r1);
    dyson3_gap_with(w, &u, kappa, mode)
}

/// Largest `κ` for which the gap stays nonnegative, by bisection to
/// relative accuracy `rel_tol`. `scale` is the natural size of `κ`.
fn critical_coefficient(scale: f64, rel_tol: f64, gap: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(scale > 0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = scale;
    let mut doublings = 0;
    while gap(hi)? >= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NoConvergence(
                "gap stays nonnegative for every coefficient".into(),
            ));
        }
    }
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical coefficient `κ*` of the two-body inequality in the radial
/// sector, and the ratio `κ*/(8πa)`.
pub fn critical_coefficient_2b(p: &RadialPotential, u: &Softener2B, elements: usize) -> Result<(f64, f64)> {
    let a = solve_scattering_length(p, Resolution::default())?.a;
    let mode = GapMode::Sector { elements };
    let k = critical_coefficient(8.0 * PI * a, 1e-7, |k| Ok(dyson2_gap_with(p, u, k, mode)?.lambda_min))?;
    Ok((k, k / (8.0 * PI * a)))
}

/// Critical coefficient `κ*` of the three-body inequality in the
/// hyperradial sector, the ratio `κ*/b`, and the smallest `c ≥ 0` with
/// `b(1 − cR₀/R₁) ≤ κ*`.
pub fn critical_coefficient_3b(w: &ThreeBodyPotential, u: &Softener3B, elements: usize) -> Result<(f64, f64, f64)> {
    let b = solve_scattering_energy(w, Resolution::default())?.b;
    let mode = GapMode::Sector { elements };
    let k = critical_coefficient(b, 1e-7, |k| Ok(dyson3_gap_with(w, u, k, mode)?.lambda_min))?;
    let ratio = k / b;
    let c = ((1.0 - ratio) * u.r1 / w.support_radius()).max(0.0);
    Ok((k, ratio, c))
}

/// `λ_min` of the two-body gap for a sequence of sector resolutions.
pub fn gap_convergence_2b(
    p: &RadialPotential,
    u: &Softener2B,
    kappa: f64,
    elements: &[usize],
) -> Result<Vec<(usize, f64)>> {
    elements
        .iter()
        .map(|&n| {
            Ok((
                n,
                dyson2_gap_with(p, u, kappa, GapMode::Sector { elements: n })?.lambda_min,
            ))
        })
        .collect()
}
