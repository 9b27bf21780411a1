//! Exact small-system ground states on Neumann grids, Temple lower bounds and
//! the short-length-scale lower-bound formula with its error budget.
//!
//! The grid is cell-centred: each axis of the box `[−ℓ/2, ℓ/2]` carries `g`
//! nodes at `−ℓ/2 + (k + ½)h`, `h = ℓ/g`. Mirror ghost nodes give the
//! second-order Neumann stencil, whose one-dimensional eigenvalues are
//! `(4/h²) sin²(kπ/2g)`, `k = 0, …, g − 1`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::linalg::{lowest_eigenpairs, LanczosOptions, LinearOperator};
use crate::potentials::{GasState, RadialPotential, ThreeBodyPotential};

/// Upper limit on the number of grid unknowns.
pub const MAX_UNKNOWNS: usize = 11_000_000;

/// `H = ε_T Σ −Δᵢ + ε_P (Σ_{i<j} V(xᵢ − xⱼ) + Σ_{i<j<k} W(xᵢ − xⱼ, xᵢ − xₖ))`
/// on `n ≤ 3` particles, applied matrix-free. The plain Hamiltonian has
/// `ε_T = ε_P = 1`.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    n: usize,
    grid: usize,
    ell: f64,
    h: f64,
    kinetic_scale: f64,
    potential_scale: f64,
    /// Interaction energy at every node tuple.
    potential: Vec<f64>,
}

/// Grid coordinate of node `k` on one axis.
fn node(k: usize, h: f64, ell: f64) -> f64 {
    -0.5 * ell + (k as f64 + 0.5) * h
}

/// Builds the Hamiltonian. Fails with `MemoryBudget` above [`MAX_UNKNOWNS`].
pub fn build_hamiltonian(
    n: usize,
    ell: f64,
    grid: usize,
    v: &RadialPotential,
    w: &ThreeBodyPotential,
) -> Result<SparseHamiltonian> {
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "particle count must be 1, 2 or 3, got {n}"
        )));
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidInput(format!("box side must be positive, got {ell}")));
    }
    if grid < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 nodes per axis, got {grid}"
        )));
    }
    let dim = (grid as u128).pow(3 * n as u32);
    if dim > MAX_UNKNOWNS as u128 {
        return Err(Error::MemoryBudget(format!(
            "{grid} nodes per axis for {n} particles gives {dim} unknowns (limit {MAX_UNKNOWNS})"
        )));
    }
    let dim = dim as usize;
    let h = ell / grid as f64;
    let coords: Vec<f64> = (0..grid).map(|k| node(k, h, ell)).collect();
    let position = |idx: usize, particle: usize| -> Vec3 {
        let mut rest = idx / grid.pow(3 * particle as u32);
        let mut x = [0.0; 3];
        for c in x.iter_mut() {
            *c = coords[rest % grid];
            rest /= grid;
        }
        x
    };
    let potential = (0..dim)
        .into_par_iter()
        .map(|idx| {
            let x: Vec<Vec3> = (0..n).map(|p| position(idx, p)).collect();
            let mut e = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    e += v.value(crate::geom::dist2(&x[i], &x[j]).sqrt());
                }
            }
            if n == 3 {
                e += w.eval_triple(&x[0], &x[1], &x[2]);
            }
            e
        })
        .collect();
    Ok(SparseHamiltonian {
        n,
        grid,
        ell,
        h,
        kinetic_scale: 1.0,
        potential_scale: 1.0,
        potential,
    })
}

impl SparseHamiltonian {
    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn side(&self) -> f64 {
        self.ell
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `ε T + (1 − ε)(V + W)`.
    pub fn split(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "kinetic split must lie in (0, 1], got {eps}"
            )));
        }
        Ok(Self {
            kinetic_scale: eps,
            potential_scale: 1.0 - eps,
            ..self.clone()
        })
    }

    /// Kinetic part only.
    pub fn kinetic(&self) -> Self {
        Self {
            kinetic_scale: self.kinetic_scale,
            potential_scale: 0.0,
            ..self.clone()
        }
    }

    /// Interaction energy at each node tuple, unscaled.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Full diagonal: kinetic neighbour counts over `h²` plus the potential.
    pub fn diagonal(&self) -> Vec<f64> {
        let c = self.kinetic_scale / (self.h * self.h);
        (0..self.dim())
            .map(|i| c * self.neighbour_count(i) as f64 + self.potential_scale * self.potential[i])
            .collect()
    }

    fn neighbour_count(&self, i: usize) -> usize {
        let g = self.grid;
        let mut rest = i;
        let mut count = 0;
        for _ in 0..3 * self.n {
            let k = rest % g;
            rest /= g;
            count += usize::from(k > 0) + usize::from(k + 1 < g);
        }
        count
    }

    /// Node coordinates of particle `p` at flat index `idx`.
    pub fn position(&self, idx: usize, p: usize) -> Vec3 {
        let g = self.grid;
        let mut rest = idx / g.pow(3 * p as u32);
        let mut x = [0.0; 3];
        for c in x.iter_mut() {
            *c = node(rest % g, self.h, self.ell);
            rest /= g;
        }
        x
    }

    /// Flat index with the particle blocks permuted: particle `p` of the
    /// result sits where particle `perm[p]` was.
    fn permuted_index(&self, idx: usize, perm: &[usize]) -> usize {
        let block = self.grid.pow(3);
        let digits: Vec<usize> = (0..self.n).map(|p| (idx / block.pow(p as u32)) % block).collect();
        (0..self.n).map(|p| digits[perm[p]] * block.pow(p as u32)).sum()
    }

    /// Largest `|ψ(σx) − ψ(x)|` over particle permutations `σ`, relative to
    /// `max |ψ|`.
    pub fn symmetry_defect(&self, psi: &[f64]) -> f64 {
        let perms: &[&[usize]] = match self.n {
            1 => &[],
            2 => &[&[1, 0]],
            _ => &[&[1, 0, 2], &[0, 2, 1], &[2, 1, 0], &[1, 2, 0], &[2, 0, 1]],
        };
        let scale = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        perms
            .iter()
            .map(|perm| {
                (0..psi.len())
                    .into_par_iter()
                    .map(|i| (psi[self.permuted_index(i, perm)] - psi[i]).abs())
                    .reduce(|| 0.0, f64::max)
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// The same system in the unit box: `ℓ² V(ℓ·)` and `ℓ² W(ℓ·)`, same
    /// number of nodes per axis.
    pub fn rescaled(&self, v: &RadialPotential, w: &ThreeBodyPotential) -> Result<Self> {
        let inv = 1.0 / self.ell;
        let v1 = if v.is_zero() { v.clone() } else { v.rescale(inv)? };
        let w1 = if w.is_zero() { w.clone() } else { w.rescale(inv)? };
        let mut out = build_hamiltonian(self.n, 1.0, self.grid, &v1, &w1)?;
        out.kinetic_scale = self.kinetic_scale;
        out.potential_scale = self.potential_scale;
        Ok(out)
    }
}

impl LinearOperator for SparseHamiltonian {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = self.grid;
        let axes = 3 * self.n;
        let c = self.kinetic_scale / (self.h * self.h);
        let ps = self.potential_scale;
        y.par_chunks_mut(4096).enumerate().for_each(|(chunk, out)| {
            let base = chunk * 4096;
            for (off, yi) in out.iter_mut().enumerate() {
                let i = base + off;
                let xi = x[i];
                let mut lap = 0.0;
                let mut rest = i;
                let mut stride = 1;
                for _ in 0..axes {
                    let k = rest % g;
                    rest /= g;
                    if k > 0 {
                        lap += xi - x[i - stride];
                    }
                    if k + 1 < g {
                        lap += xi - x[i + stride];
                    }
                    stride *= g;
                }
                *yi = c * lap + ps * self.potential[i] * xi;
            }
        });
    }
}

/// Lowest eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub value: f64,
    /// Unit-norm, with nonnegative sum.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
}

/// Ground state with residual `‖Hψ − λψ‖ ≤ tol`, deterministic for a given
/// seed.
pub fn ground_state(h: &SparseHamiltonian, tol: f64, seed: u64) -> Result<GroundState> {
    let opts = LanczosOptions {
        tol,
        seed,
        ..LanczosOptions::default()
    };
    let pair = lowest_eigenpairs(h, 1, &opts)?.remove(0);
    let mut vector = pair.vector;
    if vector.iter().sum::<f64>() < 0.0 {
        vector.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(GroundState {
        value: pair.value,
        vector,
        residual: pair.residual,
        matvecs: pair.matvecs,
    })
}

/// `⟨ψ, Aψ⟩ / ⟨ψ, ψ⟩`.
pub fn rayleigh(a: &dyn LinearOperator, psi: &[f64]) -> f64 {
    moments(a, psi).0
}

/// `(⟨A⟩_ψ, ⟨A²⟩_ψ)` for normalised `ψ`.
fn moments(a: &dyn LinearOperator, psi: &[f64]) -> (f64, f64) {
    let mut apsi = vec![0.0; psi.len()];
    a.apply(psi, &mut apsi);
    let norm2: f64 = psi.iter().map(|x| x * x).sum();
    let mean = psi.iter().zip(&apsi).map(|(x, y)| x * y).sum::<f64>() / norm2;
    let second = apsi.iter().map(|y| y * y).sum::<f64>() / norm2;
    (mean, second)
}

/// `⟨A⟩ − (⟨A²⟩ − ⟨A⟩²)/(γ − ⟨A⟩)`, a lower bound on `λ₀(A)` whenever
/// `⟨A⟩ < γ ≤ λ₁(A)`.
pub fn temple_bound(a: &dyn LinearOperator, psi: &[f64], gamma: f64) -> Result<f64> {
    let (mean, second) = moments(a, psi);
    if mean >= gamma {
        return Err(Error::TempleInapplicable { mean, gamma });
    }
    let variance = (second - mean * mean).max(0.0);
    Ok(mean - variance / (gamma - mean))
}

/// Admissible range of `α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaWindow {
    /// `1/3 < α < 12/35`.
    #[default]
    Narrow,
    /// `1/3 < α < 2/5`.
    Wide,
}

impl AlphaWindow {
    pub fn upper(self) -> f64 {
        match self {
            AlphaWindow::Narrow => 12.0 / 35.0,
            AlphaWindow::Wide => 0.4,
        }
    }
}

/// Parameters of the Temple step: `ℓ = 𝔞 Y^{−α}`, `R = Y^β`, kinetic split
/// `ε = (Y^{α−6β} + Y^{7α−2−12β})^{1/2}` and gap `γ = επ²/2` in the unit box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TempleConfig {
    pub y: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
    pub gamma: f64,
    pub window: AlphaWindow,
}

/// `(lo, hi)` bounds on `β` for a given `α`: `α − 1/3 < β < (7α − 2)/12`.
pub fn beta_window(alpha: f64) -> (f64, f64) {
    (alpha - 1.0 / 3.0, (7.0 * alpha - 2.0) / 12.0)
}

impl TempleConfig {
    pub fn new(y: f64, alpha: f64, beta: f64, window: AlphaWindow) -> Result<Self> {
        if !(y > 0.0 && y < 1.0) {
            return Err(Error::InvalidInput(format!(
                "gas parameter must lie in (0, 1), got {y}"
            )));
        }
        let cfg = Self {
            y,
            alpha,
            beta,
            eps: (y.powf(alpha - 6.0 * beta) + y.powf(7.0 * alpha - 2.0 - 12.0 * beta)).sqrt(),
            gamma: 0.0,
            window,
        };
        cfg.check()?;
        if cfg.eps >= 1.0 {
            return Err(Error::AsymptoticRegime {
                name: "kinetic split eps".into(),
                value: cfg.eps,
            });
        }
        Ok(Self {
            gamma: cfg.eps * PI * PI / 2.0,
            ..cfg
        })
    }

    /// Centre of both windows.
    pub fn centred(y: f64, window: AlphaWindow) -> Result<Self> {
        let alpha = 0.5 * (1.0 / 3.0 + window.upper());
        let (lo, hi) = beta_window(alpha);
        Self::new(y, alpha, 0.5 * (lo + hi), window)
    }

    pub fn check(&self) -> Result<()> {
        let upper = self.window.upper();
        if !(self.alpha > 1.0 / 3.0 && self.alpha < upper) {
            return Err(Error::InvalidInput(format!(
                "alpha = {} outside (1/3, {upper:.6})",
                self.alpha
            )));
        }
        let (lo, hi) = beta_window(self.alpha);
        if !(self.beta > lo && self.beta < hi) {
            return Err(Error::InvalidInput(format!(
                "beta = {} outside ({lo:.6}, {hi:.6}) for alpha = {}",
                self.beta, self.alpha
            )));
        }
        Ok(())
    }

    /// Box side `𝔞 Y^{−α}`.
    pub fn box_side(&self, frak_a: f64) -> f64 {
        frak_a * self.y.powf(-self.alpha)
    }

    /// `γ` for a box of side `ℓ` in unscaled units.
    pub fn gamma_for_side(&self, ell: f64) -> f64 {
        self.gamma / (ell * ell)
    }

    /// Smallest exponent among the error terms relative to the leading order.
    pub fn nu(&self) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        [
            1.0 - 3.0 * (a - b),
            b,
            a - b,
            1.0 + 3.0 * b - 2.0 * a,
            0.5 * (a - 6.0 * b),
            0.5 * (7.0 * a - 2.0 - 12.0 * b),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

/// Leading terms and error budget of the lower bound on `λ₀(H̃_{n,ℓ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundReport {
    pub n: usize,
    pub ell: f64,
    /// `4πa n(n−1)/ℓ`.
    pub two_body: f64,
    /// `b n(n−1)(n−2)/(6ℓ⁴)`.
    pub three_body: f64,
    /// `ρ²𝔞ℓ⁵`, which equals `Y^{2−5α}` when `ℓ = 𝔞Y^{−α}`.
    pub prefactor: f64,
    /// `Y^{1−3(α−β)}, Y^β, Y^{α−β}, Y^{1+3β−2α}`.
    pub localisation: [f64; 4],
    /// `ε, ε⁻¹Y^{α−6β}, ε⁻¹Y^{7α−2−12β}`.
    pub temple: [f64; 3],
    /// `prefactor × (Σ localisation + Σ temple)` with unit constants.
    pub error: f64,
    /// Smallest exponent among the error families.
    pub nu: f64,
}

impl LowerBoundReport {
    pub fn leading(&self) -> f64 {
        self.two_body + self.three_body
    }

    pub fn lower_bound(&self) -> f64 {
        self.leading() - self.error
    }

    /// `error / leading`, infinite when the leading term vanishes.
    pub fn error_ratio(&self) -> f64 {
        if self.leading() > 0.0 {
            self.error / self.leading()
        } else {
            f64::INFINITY
        }
    }
}

/// Closed-form lower bound for `n` particles in the rescaled box of side
/// `ℓ`. The constants in the error terms are unknown and set to one.
pub fn prop_lower_bound(n: usize, ell: f64, gas: &GasState, cfg: &TempleConfig) -> Result<LowerBoundReport> {
    cfg.check()?;
    if (gas.y - cfg.y).abs() > 1e-12 * gas.y {
        return Err(Error::InvalidInput(format!(
            "config built for Y = {} but the gas has Y = {}",
            cfg.y, gas.y
        )));
    }
    if !(ell.is_finite() && ell > 0.0) {
        return Err(Error::InvalidInput(format!("box side must be positive, got {ell}")));
    }
    let cap = 10.0 * gas.rho * ell.powi(3);
    if n as f64 > cap {
        return Err(Error::Precondition(format!("n = {n} exceeds 10 rho l^3 = {cap:.3}")));
    }
    let nf = n as f64;
    let two_body = 4.0 * PI * gas.a * nf * (nf - 1.0).max(0.0) / ell;
    let three_body = gas.b * nf * (nf - 1.0).max(0.0) * (nf - 2.0).max(0.0) / (6.0 * ell.powi(4));
    let (y, a, b, eps) = (cfg.y, cfg.alpha, cfg.beta, cfg.eps);
    let localisation = [
        y.powf(1.0 - 3.0 * (a - b)),
        y.powf(b),
        y.powf(a - b),
        y.powf(1.0 + 3.0 * b - 2.0 * a),
    ];
    let temple = [eps, y.powf(a - 6.0 * b) / eps, y.powf(7.0 * a - 2.0 - 12.0 * b) / eps];
    let prefactor = gas.rho * gas.rho * gas.frak_a * ell.powi(5);
    let error = prefactor * (localisation.iter().sum::<f64>() + temple.iter().sum::<f64>());
    Ok(LowerBoundReport {
        n,
        ell,
        two_body,
        three_body,
        prefactor,
        localisation,
        temple,
        error,
        nu: cfg.nu(),
    })
}

/// Energies entering `E(ℓ, k + k') ≥ E(ℓ, k) + E(ℓ, k')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superadditivity {
    pub combined: f64,
    pub first: f64,
    pub second: f64,
    pub slack: f64,
}

impl Superadditivity {
    pub fn holds(&self) -> bool {
        self.combined - self.first - self.second >= -self.slack
    }
}

/// Box ground energy on the grid; zero particles have zero energy.
pub fn box_energy(
    ell: f64,
    k: usize,
    v: &RadialPotential,
    w: &ThreeBodyPotential,
    grid: usize,
    tol: f64,
) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    let h = build_hamiltonian(k, ell, grid, v, w)?;
    Ok(ground_state(&h, tol, 0)?.value)
}

/// Computes both sides of the superadditivity inequality on one grid. The
/// grid operators satisfy it exactly, so the slack only covers the
/// eigensolver tolerance.
pub fn superadditivity_check(
    ell: f64,
    k: usize,
    k2: usize,
    v: &RadialPotential,
    w: &ThreeBodyPotential,
    grid: usize,
) -> Result<Superadditivity> {
    if k + k2 > 3 {
        return Err(Error::InvalidInput(format!("k + k' = {} exceeds 3", k + k2)));
    }
    let tol = 1e-10;
    let combined = box_energy(ell, k + k2, v, w, grid, tol)?;
    let first = box_energy(ell, k, v, w, grid, tol)?;
    let second = box_energy(ell, k2, v, w, grid, tol)?;
    Ok(Superadditivity {
        combined,
        first,
        second,
        slack: 1e-8,
    })
}
