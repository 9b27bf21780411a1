//! Interaction potentials, the three-body matrix `M`, the hyperradius and
//! the gas bookkeeping type.
//!
//! Two-body potentials are radial, nonnegative and compactly supported.
//! Three-body potentials are either *m-radial* (a function of the
//! hyperradius only, which makes them symmetric under relabeling of the
//! three particles) or sampled on a regular six-dimensional grid.

mod matrix;
mod profile;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use matrix::{hyperradius, hyperradius_from_pairs, Matrix6, ScatteringMatrix};
pub use profile::{Profile, Table};

use crate::error::{ensure, Error, Result};
use crate::geom::{self, Vec3};

/// Radial two-body potential `V(|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    profile: Profile,
}

impl RadialPotential {
    pub fn new(profile: Profile) -> Self {
        Self { profile }
    }

    pub fn zero() -> Self {
        Self::new(Profile::SoftSphere {
            amplitude: 0.0,
            radius: 1.0,
        })
    }

    pub fn soft_sphere(amplitude: f64, radius: f64) -> Result<Self> {
        Ok(Self::new(Profile::soft_sphere(amplitude, radius)?))
    }

    pub fn truncated_gaussian(amplitude: f64, width: f64, radius: f64) -> Result<Self> {
        Ok(Self::new(Profile::truncated_gaussian(amplitude, width, radius)?))
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self::new(Profile::Tabulated(Table::new(radii, values)?)))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::new(Profile::Tabulated(Table::from_file(path)?)))
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `V(r)`, rejecting negative radii.
    pub fn eval(&self, r: f64) -> Result<f64> {
        ensure(r >= 0.0, || format!("radius must be nonnegative, got {r}"))?;
        Ok(self.profile.value(r))
    }

    /// `V(r)` without the sign check.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        self.profile.value(r)
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support_radius()
    }

    pub fn is_zero(&self) -> bool {
        self.profile.is_zero()
    }

    /// `V_α = α⁻² V(α⁻¹ ·)`, whose scattering length is `α a(V)`.
    pub fn rescale(&self, alpha: f64) -> Result<Self> {
        Ok(Self::new(self.profile.rescale(alpha)?))
    }
}

/// Six-dimensional samples on the cube `[-R₀, R₀]⁶` with multilinear
/// interpolation. Values outside the ball `|(x, y)| ≤ R₀` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid6 {
    radius: f64,
    points: usize,
    values: Vec<f64>,
}

impl Grid6 {
    pub fn from_fn(radius: f64, points: usize, f: impl Fn(&Vec3, &Vec3) -> f64) -> Result<Self> {
        ensure((2..=24).contains(&points), || {
            format!("points per axis must lie in 2..=24, got {points}")
        })?;
        let h = 2.0 * radius / (points - 1) as f64;
        let values = (0..points.pow(6))
            .map(|idx| {
                let mut z = [0.0; 6];
                let mut rem = idx;
                for zk in z.iter_mut() {
                    *zk = -radius + h * (rem % points) as f64;
                    rem /= points;
                }
                f(&[z[0], z[1], z[2]], &[z[3], z[4], z[5]])
            })
            .collect();
        Self::from_values(radius, points, values)
    }

    /// Reads a header line `# tabulated-6d <points> <radius>` followed by
    /// `points⁶` values, first coordinate fastest.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput(format!("{}: empty file", path.display())))?;
        let fields: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
        let (points, radius) = match fields.as_slice() {
            ["tabulated-6d", p, r] => (
                p.parse::<usize>().map_err(|e| Error::InvalidInput(e.to_string()))?,
                r.parse::<f64>().map_err(|e| Error::InvalidInput(e.to_string()))?,
            ),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{}: header must read '# tabulated-6d <points> <radius>'",
                    path.display()
                )))
            }
        };
        let values: Vec<f64> = lines
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| Error::InvalidInput(e.to_string())))
            .collect::<Result<_>>()?;
        ensure(values.len() == points.pow(6), || {
            format!("expected {} values, found {}", points.pow(6), values.len())
        })?;
        Self::from_values(radius, points, values).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
    }

    fn from_values(radius: f64, points: usize, values: Vec<f64>) -> Result<Self> {
        ensure(radius > 0.0 && radius.is_finite(), || {
            format!("radius must be positive, got {radius}")
        })?;
        ensure((2..=24).contains(&points), || {
            format!("points per axis must lie in 2..=24, got {points}")
        })?;
        for &v in &values {
            ensure(v.is_finite() && v >= 0.0, || {
                format!("sampled value must be finite and nonnegative, got {v}")
            })?;
        }
        Ok(Self { radius, points, values })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> usize {
        self.points
    }

    fn value(&self, x: &Vec3, y: &Vec3) -> f64 {
        let z = [x[0], x[1], x[2], y[0], y[1], y[2]];
        if z.iter().map(|c| c * c).sum::<f64>() > self.radius * self.radius {
            return 0.0;
        }
        let n = self.points;
        let h = 2.0 * self.radius / (n - 1) as f64;
        let mut base = [0usize; 6];
        let mut frac = [0.0; 6];
        for k in 0..6 {
            let t = ((z[k] + self.radius) / h).clamp(0.0, (n - 1) as f64);
            let i = (t.floor() as usize).min(n - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..64usize {
            let mut w = 1.0;
            let mut idx = 0usize;
            let mut stride = 1usize;
            for k in 0..6 {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx += (base[k] + bit) * stride;
                stride *= n;
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    fn rescale(&self, delta: f64) -> Self {
        Self {
            radius: self.radius * delta,
            points: self.points,
            values: self.values.iter().map(|v| v / (delta * delta)).collect(),
        }
    }
}

/// Three-body potential `W(x, y)` with `x = x₁ − x₂`, `y = x₁ − x₃`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThreeBodyPotential {
    /// `W(x, y) = w(s)` with `s` the hyperradius.
    MRadial(Profile),
    /// General samples; no fast scattering route.
    Tabulated6d(Grid6),
}

impl ThreeBodyPotential {
    pub fn zero() -> Self {
        ThreeBodyPotential::MRadial(Profile::SoftSphere {
            amplitude: 0.0,
            radius: 1.0,
        })
    }

    /// m-radial soft sphere: `amplitude` for hyperradius `s ≤ radius`.
    pub fn soft_sphere(amplitude: f64, radius: f64) -> Result<Self> {
        Ok(ThreeBodyPotential::MRadial(Profile::soft_sphere(amplitude, radius)?))
    }

    /// m-radial truncated Gaussian in the hyperradius.
    pub fn truncated_gaussian(amplitude: f64, width: f64, radius: f64) -> Result<Self> {
        Ok(ThreeBodyPotential::MRadial(Profile::truncated_gaussian(
            amplitude, width, radius,
        )?))
    }

    /// The hyperradial profile, if any.
    pub fn hyperradial_profile(&self) -> Option<&Profile> {
        match self {
            ThreeBodyPotential::MRadial(p) => Some(p),
            ThreeBodyPotential::Tabulated6d(_) => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3, y: &Vec3) -> f64 {
        match self {
            ThreeBodyPotential::MRadial(p) => p.value(hyperradius(x, y)),
            ThreeBodyPotential::Tabulated6d(g) => g.value(x, y),
        }
    }

    /// Value at the configuration `(x₁, x₂, x₃)`.
    #[inline]
    pub fn eval_triple(&self, x1: &Vec3, x2: &Vec3, x3: &Vec3) -> f64 {
        self.eval(&geom::sub(x1, x2), &geom::sub(x1, x3))
    }

    /// Support radius in the Euclidean norm of `(x, y) ∈ ℝ⁶`.
    pub fn support_radius(&self) -> f64 {
        match self {
            ThreeBodyPotential::MRadial(p) => ScatteringMatrix::get().norm() * p.support_radius(),
            ThreeBodyPotential::Tabulated6d(g) => g.radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ThreeBodyPotential::MRadial(p) => p.is_zero(),
            ThreeBodyPotential::Tabulated6d(g) => g.values.iter().all(|&v| v == 0.0),
        }
    }

    /// `W_δ = δ⁻² W(δ⁻¹ ·)`, whose scattering energy is `δ⁴ b(W)`.
    pub fn rescale(&self, delta: f64) -> Result<Self> {
        ensure(delta > 0.0 && delta.is_finite(), || {
            format!("scale factor must be positive, got {delta}")
        })?;
        Ok(match self {
            ThreeBodyPotential::MRadial(p) => ThreeBodyPotential::MRadial(p.rescale(delta)?),
            ThreeBodyPotential::Tabulated6d(g) => ThreeBodyPotential::Tabulated6d(g.rescale(delta)),
        })
    }

    /// Largest deviation between `W(x₁−x₂, x₁−x₃)` and its relabeled forms
    /// over the given particle triples.
    pub fn symmetry_defect(&self, triples: &[[Vec3; 3]]) -> f64 {
        let mut worst: f64 = 0.0;
        for t in triples {
            let reference = self.eval_triple(&t[0], &t[1], &t[2]);
            for p in PERMUTATIONS.iter().skip(1) {
                let v = self.eval_triple(&t[p[0]], &t[p[1]], &t[p[2]]);
                worst = worst.max((v - reference).abs());
            }
        }
        worst
    }

    /// Uniform random triples in `[-extent, extent]³` for symmetry checks.
    pub fn random_triples(count: usize, extent: f64, seed: u64) -> Vec<[Vec3; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = || -> Vec3 {
            [
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
            ]
        };
        (0..count).map(|_| [point(), point(), point()]).collect()
    }
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Density together with the scattering constants and the derived dilute-gas
/// scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub a: f64,
    pub b: f64,
    /// `𝔞 = max(a, ρ b)`.
    pub frak_a: f64,
    /// Gas parameter `Y = ρ 𝔞³`.
    pub y: f64,
    /// `𝔞 / √Y`, infinite when `Y = 0`.
    pub l_gp: f64,
}

impl GasState {
    pub fn new(rho: f64, a: f64, b: f64) -> Result<Self> {
        ensure(rho.is_finite() && rho > 0.0, || {
            format!("density must be positive, got {rho}")
        })?;
        ensure(a.is_finite() && a >= 0.0, || format!("a must be nonnegative, got {a}"))?;
        ensure(b.is_finite() && b >= 0.0, || format!("b must be nonnegative, got {b}"))?;
        let frak_a = a.max(rho * b);
        let y = rho * frak_a.powi(3);
        let l_gp = if y > 0.0 { frak_a / y.sqrt() } else { f64::INFINITY };
        Ok(Self {
            rho,
            a,
            b,
            frak_a,
            y,
            l_gp,
        })
    }

    /// Leading-order energy density `4πaρ² + bρ³/6`.
    pub fn predicted_energy_density(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.a * self.rho.powi(2) + self.b * self.rho.powi(3) / 6.0
    }
}
