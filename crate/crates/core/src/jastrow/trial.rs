//! Trial-state evaluation: `log Ψ`, its gradient and the local energy terms.

use super::{CellList, TrialParams};
use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::potentials::hyperradius_from_pairs;

/// Neighbours of one particle closer than the reach.
struct Near {
    j: usize,
    /// `xᵢ − xⱼ`.
    d: Vec3,
    r: f64,
}

fn near_lists(x: &[Vec3], reach: f64, l: f64) -> Vec<Vec<Near>> {
    let n = x.len();
    let reach2 = reach * reach;
    let mut lists: Vec<Vec<Near>> = (0..n).map(|_| Vec::new()).collect();
    if reach <= 0.0 {
        return lists;
    }
    let cells = CellList::new(x, l, reach);
    let mut candidates = Vec::new();
    for i in 0..n {
        cells.candidates(&x[i], &mut candidates);
        candidates.sort_unstable();
        for &j in candidates.iter().filter(|&&j| j > i) {
            let d = geom::sub(&x[i], &x[j]);
            let r2 = geom::norm2(&d);
            if r2 < reach2 {
                let r = r2.sqrt();
                lists[i].push(Near { j, d, r });
                lists[j].push(Near {
                    j: i,
                    d: geom::scale(&d, -1.0),
                    r,
                });
            }
        }
    }
    lists
}

/// `f'(r)/f(r)` of the pair factor, zero beyond `ℓ₁`.
#[inline]
fn pair_log_derivative(tp: &TrialParams, r: f64) -> Result<f64> {
    match &tp.two {
        Some(t) if r < t.ell => {
            let (f, df) = t.f(r);
            if f > 0.0 {
                Ok(df / f)
            } else {
                Err(Error::NonFinite(format!("pair factor vanishes at r = {r}")))
            }
        }
        _ => Ok(0.0),
    }
}

/// `F'(s)/F(s)` of the triple factor in the hyperradius, zero beyond `ℓ₂`.
#[inline]
fn triple_log_derivative(tp: &TrialParams, s: f64) -> Result<f64> {
    match &tp.three {
        Some(t) if s < t.ell => {
            let (f, df) = t.f_hyper(s);
            if f > 0.0 {
                Ok(df / f)
            } else {
                Err(Error::NonFinite(format!("triple factor vanishes at s = {s}")))
            }
        }
        _ => Ok(0.0),
    }
}

fn ln_or_neg_inf(f: f64) -> f64 {
    if f > 0.0 {
        f.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `log Ψ`; `−∞` where a factor vanishes.
pub fn log_trial(x: &[Vec3], tp: &TrialParams) -> f64 {
    let lists = near_lists(x, tp.reach, tp.l);
    let mut acc = 0.0;
    for (i, near) in lists.iter().enumerate() {
        for p in near.iter().filter(|p| p.j > i) {
            if let Some(t) = &tp.two {
                acc += ln_or_neg_inf(t.f(p.r).0);
            }
        }
        if let Some(t) = &tp.three {
            for (a, p) in near.iter().enumerate() {
                for q in &near[a + 1..] {
                    if p.j < i || q.j < i {
                        continue;
                    }
                    let s = hyperradius_from_pairs(p.r * p.r, q.r * q.r, geom::dist2(&x[p.j], &x[q.j]));
                    acc += ln_or_neg_inf(t.f_hyper(s).0);
                }
            }
        }
    }
    acc
}

/// `log Ψ` restricted to the factors that involve particle `i` placed at
/// `xi`; `candidates` must contain every particle within the reach of `xi`.
pub(super) fn particle_log(x: &[Vec3], i: usize, xi: &Vec3, candidates: &[usize], tp: &TrialParams) -> f64 {
    let reach2 = tp.reach * tp.reach;
    let mut near: Vec<(usize, f64)> = Vec::with_capacity(candidates.len());
    let mut acc = 0.0;
    for &j in candidates {
        if j == i {
            continue;
        }
        let r2 = geom::dist2(xi, &x[j]);
        if r2 < reach2 {
            let r = r2.sqrt();
            if let Some(t) = &tp.two {
                acc += ln_or_neg_inf(t.f(r).0);
            }
            near.push((j, r));
        }
    }
    if let Some(t) = &tp.three {
        for (a, &(j, rj)) in near.iter().enumerate() {
            for &(k, rk) in &near[a + 1..] {
                let s = hyperradius_from_pairs(rj * rj, rk * rk, geom::dist2(&x[j], &x[k]));
                acc += ln_or_neg_inf(t.f_hyper(s).0);
            }
        }
    }
    acc
}

/// Analytic `∇ᵢ log Ψ` for every particle.
pub fn log_gradient(x: &[Vec3], tp: &TrialParams) -> Result<Vec<Vec3>> {
    let lists = near_lists(x, tp.reach, tp.l);
    let mut out = vec![[0.0; 3]; x.len()];
    for (i, near) in lists.iter().enumerate() {
        let (pairs, triples) = particle_vectors(x, near, tp)?;
        for (_, a) in &pairs {
            geom::axpy(&mut out[i], 1.0, a);
        }
        for (_, _, b) in &triples {
            geom::axpy(&mut out[i], 1.0, b);
        }
    }
    Ok(out)
}

type PairVectors = Vec<(usize, Vec3)>;
type TripleVectors = Vec<(usize, usize, Vec3)>;

/// Nonzero `Aᵢₚ = ∇ᵢ log fᵢₚ` and `Bᵢqr = ∇ᵢ log f̃ᵢqr`, with partner
/// indices given as positions in `near`.
fn particle_vectors(x: &[Vec3], near: &[Near], tp: &TrialParams) -> Result<(PairVectors, TripleVectors)> {
    let mut pairs = Vec::new();
    for (a, p) in near.iter().enumerate() {
        let g = pair_log_derivative(tp, p.r)?;
        if g != 0.0 && p.r > 0.0 {
            pairs.push((a, geom::scale(&p.d, g / p.r)));
        }
    }
    let mut triples = Vec::new();
    if let Some(t) = &tp.three {
        for (a, p) in near.iter().enumerate() {
            if p.r >= t.ell_tilde {
                continue;
            }
            for (b, q) in near.iter().enumerate().skip(a + 1) {
                if q.r >= t.ell_tilde {
                    continue;
                }
                let s = hyperradius_from_pairs(p.r * p.r, q.r * q.r, geom::dist2(&x[p.j], &x[q.j]));
                let g = triple_log_derivative(tp, s)?;
                if g != 0.0 && s > 0.0 {
                    // ∇ᵢ s = (2/3s)(2xᵢ − x_q − x_r) = (2/3s)(dᵢq + dᵢr)
                    let grad = geom::scale(&geom::add(&p.d, &q.d), 2.0 / (3.0 * s));
                    triples.push((a, b, geom::scale(&grad, g)));
                }
            }
        }
    }
    Ok((pairs, triples))
}

/// Per-configuration values of the seven energy terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalTerms {
    /// `Σ_{i≠p} |Aᵢₚ|² + Σ_{i<j} Vᵢⱼ`.
    pub i1: f64,
    /// `Σ_{p≠q} Aᵢₚ · Aᵢq`.
    pub i2: f64,
    /// `2 Σ Aᵢₚ · Bᵢₚq`, pair partner inside the triple.
    pub j1: f64,
    /// `2 Σ Aᵢₚ · Bᵢqr`, pair partner outside the triple.
    pub j2: f64,
    /// `Σ |Bᵢqr|² + Σ_{i<j<k} Wᵢⱼₖ`.
    pub k1: f64,
    /// `Σ Bᵢqr · Bᵢqr'`, triples sharing one partner.
    pub k2: f64,
    /// `Σ Bᵢqr · Bᵢst`, disjoint partner pairs.
    pub k3: f64,
}

impl LocalTerms {
    pub fn total(&self) -> f64 {
        self.i1 + self.i2 + self.j1 + self.j2 + self.k1 + self.k2 + self.k3
    }

    pub fn as_array(&self) -> [f64; 7] {
        [self.i1, self.i2, self.j1, self.j2, self.k1, self.k2, self.k3]
    }

    pub const NAMES: [&'static str; 7] = ["I1", "I2", "J1", "J2", "K1", "K2", "K3"];
}

/// The seven local terms at one configuration. Their sum is
/// `Σᵢ |∇ᵢ log Ψ|² + V + W`, whose `|Ψ|²` average is the energy.
pub fn local_terms(x: &[Vec3], tp: &TrialParams) -> Result<LocalTerms> {
    let lists = near_lists(x, tp.reach, tp.l);
    let mut t = LocalTerms::default();
    for (i, near) in lists.iter().enumerate() {
        let (pairs, triples) = particle_vectors(x, near, tp)?;
        let mut a_of = vec![[0.0; 3]; near.len()];
        let mut sa = [0.0; 3];
        let mut sa2 = 0.0;
        for (p, a) in &pairs {
            a_of[*p] = *a;
            geom::axpy(&mut sa, 1.0, a);
            sa2 += geom::norm2(a);
        }
        t.i1 += sa2;
        t.i2 += geom::norm2(&sa) - sa2;
        let mut sb = [0.0; 3];
        let mut sb2 = 0.0;
        let mut j1 = 0.0;
        let mut by_partner = vec![([0.0; 3], 0.0); near.len()];
        for (p, q, b) in &triples {
            geom::axpy(&mut sb, 1.0, b);
            let b2 = geom::norm2(b);
            sb2 += b2;
            j1 += 2.0 * geom::dot(b, &geom::add(&a_of[*p], &a_of[*q]));
            for k in [*p, *q] {
                geom::axpy(&mut by_partner[k].0, 1.0, b);
                by_partner[k].1 += b2;
            }
        }
        let k2: f64 = by_partner.iter().map(|(s, s2)| geom::norm2(s) - s2).sum();
        t.j1 += j1;
        t.j2 += 2.0 * geom::dot(&sa, &sb) - j1;
        t.k1 += sb2;
        t.k2 += k2;
        t.k3 += geom::norm2(&sb) - sb2 - k2;

        if !tp.v.is_zero() {
            let r0 = tp.v.support_radius();
            t.i1 += near
                .iter()
                .filter(|p| p.j > i && p.r <= r0)
                .map(|p| tp.v.value(p.r))
                .sum::<f64>();
        }
        if !tp.w.is_zero() {
            let r0 = tp.w.support_radius();
            for (a, p) in near.iter().enumerate() {
                if p.j < i || p.r > r0 {
                    continue;
                }
                for q in &near[a + 1..] {
                    if q.j < i || q.r > r0 {
                        continue;
                    }
                    t.k1 += tp.w.eval_triple(&x[i], &x[p.j], &x[q.j]);
                }
            }
        }
    }
    if t.as_array().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("local terms {t:?}")));
    }
    Ok(t)
}

/// The three sides of `1 − Σⱼ uᵢⱼ − Σⱼ ṽᵢⱼ ≤ ∏ⱼ fᵢⱼ² ∏ⱼ<ₖ f̃ᵢⱼₖ² ≤ 1` for one
/// particle, with `u = 1 − f²` and `ṽ = 𝟙{|x| < ℓ̃₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoupling {
    pub lower: f64,
    pub product: f64,
    pub upper: f64,
}

impl Decoupling {
    pub fn holds(&self) -> bool {
        self.lower <= self.product && self.product <= self.upper
    }
}

pub fn decoupling_bounds(x: &[Vec3], i: usize, tp: &TrialParams) -> Decoupling {
    let mut lower = 1.0;
    let mut product = 1.0;
    let n = x.len();
    for j in (0..n).filter(|&j| j != i) {
        let r = geom::dist2(&x[i], &x[j]).sqrt();
        if let Some(t) = &tp.two {
            let f = t.f(r).0;
            product *= f * f;
            lower -= 1.0 - f * f;
        }
        if let Some(t) = &tp.three {
            if r < t.ell_tilde {
                lower -= 1.0;
            }
            for k in (j + 1..n).filter(|&k| k != i) {
                let rk = geom::dist2(&x[i], &x[k]).sqrt();
                let s = hyperradius_from_pairs(r * r, rk * rk, geom::dist2(&x[j], &x[k]));
                let f = t.f_hyper(s).0;
                product *= f * f;
            }
        }
    }
    Decoupling {
        lower,
        product,
        upper: 1.0,
    }
}
