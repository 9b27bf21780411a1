//! One-dimensional numerics shared by the radial scattering problems:
//! a fixed-step RK4 integrator, Hermite tables, Gauss–Legendre quadrature,
//! the smooth cut-off `χ`, and a finite-element minimizer for the radial
//! scattering functional in three and six dimensions.

use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;

/// Five-point Gauss–Legendre rule on `[-1, 1]`, exact for degree ≤ 9.
pub const GAUSS5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrates `f` over `[a, b]` with the five-point rule.
#[inline]
pub fn gauss5(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS5.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Composite Simpson rule on uniformly spaced samples (odd count).
pub fn simpson(h: f64, samples: &[f64]) -> f64 {
    let n = samples.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples");
    let mut acc = samples[0] + samples[n - 1];
    for (i, v) in samples.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Width, in `τ = 2t − 1`, of the rounded corners of [`cutoff`].
pub const CUTOFF_EDGE: f64 = 0.1;

/// Cut-off profile: `χ(t) = 1` for `t ≤ 1/2`, `χ(t) = 0` for `t ≥ 1`,
/// monotone and C³ in between. Returns `(χ(t), χ'(t))`.
///
/// `χ` is the linear ramp `2(1 − t)` with corners rounded over
/// [`CUTOFF_EDGE`]: `−χ'` is a flat plateau entered and left through the
/// quintic smoothstep. The linear ramp minimises the gradient energy of
/// `χ(r/ℓ) a/r` over `ℓ/2 < r < ℓ`.
#[inline]
pub fn cutoff(t: f64) -> (f64, f64) {
    let tau = 2.0 * t - 1.0;
    if tau <= 0.0 {
        return (1.0, 0.0);
    }
    if tau >= 1.0 {
        return (0.0, 0.0);
    }
    let d = CUTOFF_EDGE;
    let step = |x: f64| x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    let area = |x: f64| x * x * x * x * (2.5 + x * (-3.0 + x));
    let (s, ds) = if tau < d {
        (d * area(tau / d), step(tau / d))
    } else if tau > 1.0 - d {
        (1.0 - d - d * area((1.0 - tau) / d), step((1.0 - tau) / d))
    } else {
        (tau - 0.5 * d, 1.0)
    };
    let norm = 1.0 - d;
    ((1.0 - s / norm).clamp(0.0, 1.0), -2.0 * ds / norm)
}

/// Cubic Hermite interpolation on one interval.
#[inline]
pub fn hermite(x0: f64, h: f64, f0: f64, d0: f64, f1: f64, d1: f64, x: f64) -> (f64, f64) {
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * f1
        + (t3 - t2) * h * d1;
    let d = (6.0 * t2 - 6.0 * t) * (f0 - f1) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
    (v, d)
}

/// Values and first derivatives on a uniform grid, read back with cubic
/// Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteTable {
    x0: f64,
    h: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl HermiteTable {
    pub fn new(x0: f64, h: f64, values: Vec<f64>, derivs: Vec<f64>) -> Self {
        assert!(values.len() == derivs.len() && values.len() >= 2 && h > 0.0);
        Self { x0, h, values, derivs }
    }

    /// Samples `f` (returning value and derivative) on `n + 1` nodes spanning `[x0, x1]`.
    pub fn sample(x0: f64, x1: f64, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let h = (x1 - x0) / n as f64;
        let (values, derivs) = (0..=n).map(|i| f(x0 + h * i as f64)).unzip();
        Self::new(x0, h, values, derivs)
    }

    pub fn start(&self) -> f64 {
        self.x0
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.h * (self.values.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.x0 + self.h * i as f64)
    }

    /// Value and derivative at `x`, clamped to the table range.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let last = self.values.len() - 1;
        let t = ((x - self.x0) / self.h).max(0.0);
        let i = (t as usize).min(last - 1);
        let xi = self.x0 + self.h * i as f64;
        let x = x.clamp(self.x0, self.end());
        hermite(
            xi,
            self.h,
            self.values[i],
            self.derivs[i],
            self.values[i + 1],
            self.derivs[i + 1],
            x,
        )
    }
}

/// Fixed-step classical RK4 for `y'' = F(x, y, y')` on `n` steps from `x0` to `x1`.
/// Returns `(y, y')` at every node including both ends.
pub fn rk4_second_order(
    x0: f64,
    x1: f64,
    n: usize,
    y0: f64,
    dy0: f64,
    rhs: impl Fn(f64, f64, f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let h = (x1 - x0) / n as f64;
    let mut ys = Vec::with_capacity(n + 1);
    let mut dys = Vec::with_capacity(n + 1);
    let (mut y, mut p) = (y0, dy0);
    ys.push(y);
    dys.push(p);
    for i in 0..n {
        let x = x0 + h * i as f64;
        let xh = x + 0.5 * h;
        let xe = if i + 1 == n { x1 } else { x + h };
        let k1y = p;
        let k1p = rhs(x, y, p);
        let k2y = p + 0.5 * h * k1p;
        let k2p = rhs(xh, y + 0.5 * h * k1y, p + 0.5 * h * k1p);
        let k3y = p + 0.5 * h * k2p;
        let k3p = rhs(xh, y + 0.5 * h * k2y, p + 0.5 * h * k2p);
        let k4y = p + h * k3p;
        let k4p = rhs(xe, y + h * k3y, p + h * k3p);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        ys.push(y);
        dys.push(p);
    }
    (ys, dys)
}

/// Radial reduction of `prefactor · ∫ [2|∇g|² + P (1 − g)²]` over `ℝ^dim`
/// for radial `g`, with `P` supported in the ball of radius `outer` and `g`
/// continued harmonically beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialFunctional {
    pub dim: u32,
    /// Surface measure times any Jacobian: `4π` in three dimensions,
    /// `det(M) π³` for the three-body problem in six.
    pub prefactor: f64,
}

impl RadialFunctional {
    #[inline]
    fn weight(&self, r: f64) -> f64 {
        r.powi(self.dim as i32 - 1)
    }

    /// Energy of the harmonic continuation `g_N (R/r)^{dim−2}` outside `R`, per `g_N²`.
    fn tail(&self, outer: f64) -> f64 {
        2.0 * (self.dim as f64 - 2.0) * outer.powi(self.dim as i32 - 2)
    }

    /// Value for the piecewise-linear profile through `(nodes[i], g[i])`.
    pub fn evaluate(&self, nodes: &[f64], g: &[f64], p: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for e in 0..nodes.len() - 1 {
            let (ra, rb) = (nodes[e], nodes[e + 1]);
            let h = rb - ra;
            let slope = (g[e + 1] - g[e]) / h;
            acc += gauss5(ra, rb, |r| {
                let t = (r - ra) / h;
                let gr = g[e] * (1.0 - t) + g[e + 1] * t;
                self.weight(r) * (2.0 * slope * slope + p(r) * (1.0 - gr) * (1.0 - gr))
            });
        }
        let last = *g.last().unwrap();
        self.prefactor * (acc + self.tail(*nodes.last().unwrap()) * last * last)
    }

    /// Exact minimizer over piecewise-linear profiles on `nodes`; returns the
    /// minimum value and the nodal values.
    pub fn minimize(&self, nodes: &[f64], p: impl Fn(f64) -> f64) -> Result<(f64, Vec<f64>)> {
        let n = nodes.len();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        let mut load = vec![0.0; n];
        let mut constant = 0.0;
        for e in 0..n - 1 {
            let (ra, rb) = (nodes[e], nodes[e + 1]);
            let h = rb - ra;
            let stiff = 2.0 * gauss5(ra, rb, |r| self.weight(r)) / (h * h);
            let (mut maa, mut mab, mut mbb, mut la, mut lb, mut c) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            let half = 0.5 * h;
            for &(x, w) in GAUSS5.iter() {
                let r = ra + half * (1.0 + x);
                let t = (r - ra) / h;
                let wp = w * half * self.weight(r) * p(r);
                maa += wp * (1.0 - t) * (1.0 - t);
                mab += wp * (1.0 - t) * t;
                mbb += wp * t * t;
                la += wp * (1.0 - t);
                lb += wp * t;
                c += wp;
            }
            diag[e] += stiff + maa;
            diag[e + 1] += stiff + mbb;
            off[e] += -stiff + mab;
            load[e] += la;
            load[e + 1] += lb;
            constant += c;
        }
        diag[n - 1] += self.tail(nodes[n - 1]);
        let g = solve_tridiagonal(&off, &diag, &off, &load)
            .ok_or_else(|| Error::NoConvergence("singular finite-element system".into()))?;
        let dot: f64 = load.iter().zip(&g).map(|(l, x)| l * x).sum();
        Ok((self.prefactor * (constant - dot), g))
    }
}

/// Nodes on `[0, outer]` with roughly `elements` elements, every listed
/// breakpoint inside `(0, outer)` placed on a node.
pub fn breakpoint_nodes(breakpoints: &[f64], outer: f64, elements: usize) -> Vec<f64> {
    let mut marks: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < outer).collect();
    marks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    marks.dedup();
    marks.push(outer);
    let mut nodes = vec![0.0];
    let mut prev = 0.0;
    for &m in &marks {
        let k = (((m - prev) / outer) * elements as f64).ceil().max(1.0) as usize;
        let h = (m - prev) / k as f64;
        for i in 1..k {
            nodes.push(prev + h * i as f64);
        }
        nodes.push(m);
        prev = m;
    }
    nodes
}

/// Richardson-style coarse-grid check: evaluates the functional on all
/// nodes and on every other node, and errors out when the two differ by
/// more than 1%.
pub fn checked_functional(
    functional: &RadialFunctional,
    nodes: &[f64],
    g: &[f64],
    p: impl Fn(f64) -> f64 + Copy,
) -> Result<f64> {
    if nodes.len() != g.len() || nodes.len() < 3 {
        return Err(Error::InvalidInput(
            "profile table needs at least three rows of matching length".into(),
        ));
    }
    let full = functional.evaluate(nodes, g, p);
    let mut idx: Vec<usize> = (0..nodes.len()).step_by(2).collect();
    if *idx.last().unwrap() != nodes.len() - 1 {
        idx.push(nodes.len() - 1);
    }
    let cn: Vec<f64> = idx.iter().map(|&i| nodes[i]).collect();
    let cg: Vec<f64> = idx.iter().map(|&i| g[i]).collect();
    let coarse = functional.evaluate(&cn, &cg, p);
    let scale = full.abs().max(coarse.abs());
    if scale > 0.0 && (full - coarse).abs() > 0.01 * scale {
        return Err(Error::CoarseGrid { full, coarse });
    }
    Ok(full)
}
