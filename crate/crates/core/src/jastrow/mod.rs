//! Variational Monte Carlo for the Jastrow trial state
//!
//! ```text
//! Ψ = ∏_{i<j} f_{ℓ₁}(xᵢ − xⱼ) ∏_{i<j<k} f̃_{ℓ₂}(xᵢ − xⱼ, xᵢ − xₖ)
//! ```
//!
//! in the box `[0, L)³` with free boundaries. The energy is estimated from
//! `Σᵢ |∇ᵢ log Ψ|² + V + W` sampled from `|Ψ|²`, split into the seven terms
//! `I₁, I₂, J₁, J₂, K₁, K₂, K₃`.

mod cells;
mod sampler;
mod trial;

pub use cells::CellList;
pub use sampler::{initial_configuration, mc_estimate, DumpedSample, EnergyBreakdown, McConfig, TermEstimate};
pub use trial::{decoupling_bounds, local_terms, log_gradient, log_trial, Decoupling, LocalTerms};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potentials::{RadialPotential, ThreeBodyPotential};
use crate::scatter2::{solve_scattering_length, truncate_2b, Resolution, TruncatedSolution2B};
use crate::scatter3::{solve_scattering_energy, truncate_3b, TruncatedSolution3B};

/// `ℓ₁ = ρ^{−1/3}`.
pub fn default_ell1(rho: f64) -> f64 {
    rho.powf(-1.0 / 3.0)
}

/// `ℓ₂ = b^{1/4}(ρ b^{3/4})^{−1/7}`.
pub fn default_ell2(rho: f64, b: f64) -> f64 {
    b.powf(0.25) * (rho * b.powf(0.75)).powf(-1.0 / 7.0)
}

/// Trial-state parameters with the truncated scattering solutions attached.
#[derive(Debug, Clone)]
pub struct TrialParams {
    pub n: usize,
    pub l: f64,
    pub ell1: f64,
    pub ell2: f64,
    pub a: f64,
    pub b: f64,
    pub v: RadialPotential,
    pub w: ThreeBodyPotential,
    /// `None` when `V = 0`, so that `f ≡ 1`.
    pub two: Option<TruncatedSolution2B>,
    /// `None` when `W = 0`, so that `f̃ ≡ 1`.
    pub three: Option<TruncatedSolution3B>,
    /// Largest pair distance at which any factor or potential can differ
    /// from its far-field value.
    pub reach: f64,
}

impl TrialParams {
    /// Solves both scattering problems and truncates them at `ℓ₁`, `ℓ₂`
    /// (defaults when `None`).
    pub fn new(
        n: usize,
        l: f64,
        v: &RadialPotential,
        w: &ThreeBodyPotential,
        ell1: Option<f64>,
        ell2: Option<f64>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one particle".into()));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidInput(format!("box side must be positive, got {l}")));
        }
        let rho = n as f64 / l.powi(3);
        let res = Resolution::default();
        let (a, two_sol) = if v.is_zero() {
            (0.0, None)
        } else {
            let s = solve_scattering_length(v, res)?;
            (s.a, Some(s))
        };
        let (b, three_sol) = if w.is_zero() {
            (0.0, None)
        } else {
            let s = solve_scattering_energy(w, res)?;
            (s.b, Some(s))
        };
        let ell1 = ell1.unwrap_or_else(|| default_ell1(rho));
        let ell2 = match ell2 {
            Some(e) => e,
            None if b > 0.0 => default_ell2(rho, b),
            None => 0.0,
        };
        let two = match two_sol {
            Some(s) => {
                let r0 = v.support_radius();
                if !(ell1 > a && ell1 < l && ell1 >= 2.0 * r0) {
                    return Err(Error::Precondition(format!(
                        "l1 = {ell1} must satisfy a = {a:.4} < l1 < L = {l} and l1 >= 2 R0 = {}",
                        2.0 * r0
                    )));
                }
                Some(truncate_2b(&s, ell1))
            }
            None => None,
        };
        let three = match three_sol {
            Some(s) => {
                let r0 = w.support_radius();
                if !(ell2 > b.powf(0.25) && ell2 < l && ell2 >= 2.0 * r0) {
                    return Err(Error::Precondition(format!(
                        "l2 = {ell2} must satisfy b^(1/4) = {:.4} < l2 < L = {l} and l2 >= 2 R0 = {}",
                        b.powf(0.25),
                        2.0 * r0
                    )));
                }
                Some(truncate_3b(&s, ell2))
            }
            None => None,
        };
        let reach = [
            two.as_ref().map_or(0.0, |t| t.ell),
            three.as_ref().map_or(0.0, |t| t.ell_tilde),
            v.support_radius() * f64::from(u8::from(!v.is_zero())),
            w.support_radius() * f64::from(u8::from(!w.is_zero())),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        Ok(Self {
            n,
            l,
            ell1,
            ell2,
            a,
            b,
            v: v.clone(),
            w: w.clone(),
            two,
            three,
            reach,
        })
    }

    pub fn density(&self) -> f64 {
        self.n as f64 / self.l.powi(3)
    }
}

/// Leading term and correction ratios of the trial-state energy bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundFormula {
    /// `N(4πaρ + bρ²/6)`.
    pub leading: f64,
    /// `ρaℓ₁², a/ℓ₁, ρℓ₂³, b/ℓ₂⁴` with unit constants; indicative only.
    pub corrections: [f64; 4],
}

impl UpperBoundFormula {
    pub fn total(&self) -> f64 {
        self.leading * (1.0 + self.corrections.iter().sum::<f64>())
    }

    pub fn two_body_correction(&self) -> f64 {
        self.corrections[0] + self.corrections[1]
    }

    pub fn three_body_correction(&self) -> f64 {
        self.corrections[2] + self.corrections[3]
    }
}

/// Evaluates the bound. Corrections of an absent interaction are zero.
/// Fails when any correction reaches one.
pub fn upper_bound_formula(rho: f64, a: f64, b: f64, ell1: f64, ell2: f64, n: usize) -> Result<UpperBoundFormula> {
    if !(rho > 0.0 && a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need rho > 0, a >= 0, b >= 0; got {rho}, {a}, {b}"
        )));
    }
    let leading = n as f64 * (4.0 * PI * a * rho + b * rho * rho / 6.0);
    let two = if a > 0.0 {
        [rho * a * ell1 * ell1, a / ell1]
    } else {
        [0.0; 2]
    };
    let three = if b > 0.0 {
        [rho * ell2.powi(3), b / ell2.powi(4)]
    } else {
        [0.0; 2]
    };
    let corrections = [two[0], two[1], three[0], three[1]];
    let names = ["rho a l1^2", "a / l1", "rho l2^3", "b / l2^4"];
    for (name, &c) in names.iter().zip(&corrections) {
        if !(c < 1.0) {
            return Err(Error::AsymptoticRegime {
                name: (*name).into(),
                value: c,
            });
        }
    }
    Ok(UpperBoundFormula { leading, corrections })
}
