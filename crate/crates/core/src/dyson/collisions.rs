//! Collision indicators `F_ij`, `F̃_ijk` and the exclusion bound
//! `Σ_j F_ij + ½ Σ_{j,k} F̃_ijk ≤ 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Particle positions in the unit box `[−1/2, 1/2]³` with cut radius `R` and
/// boundary margin `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<Vec3>,
    r: f64,
    eta: f64,
}

impl Configuration {
    pub fn new(positions: Vec<Vec3>, r: f64, eta: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) || !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "R and eta must lie in (0, 1), got {r}, {eta}"
            )));
        }
        if let Some(p) = positions.iter().find(|p| p.iter().any(|c| !(c.abs() <= 0.5))) {
            return Err(Error::InvalidInput(format!("position {p:?} is outside the unit box")));
        }
        Ok(Self { positions, r, eta })
    }

    /// Uniform positions, or with `clustered` a random number of clusters of
    /// extent `R` so that pairs and triples within `R` are common.
    pub fn random(n: usize, r: f64, eta: f64, clustered: bool, rng: &mut impl Rng) -> Self {
        let mut uniform = || -> Vec3 { [0; 3].map(|_| rng.random_range(-0.5..0.5)) };
        let positions = if clustered && n > 1 {
            let clusters: Vec<Vec3> = (0..(n / 2).max(1)).map(|_| uniform()).collect();
            (0..n)
                .map(|_| {
                    let c = clusters[rng.random_range(0..clusters.len())];
                    c.map(|x| (x + rng.random_range(-r..r)).clamp(-0.5, 0.5))
                })
                .collect()
        } else {
            (0..n).map(|_| uniform()).collect()
        };
        Self { positions, r, eta }
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    /// Whether particle `i` lies in the shrunk box `(1 − η)Λ`.
    pub fn in_margin(&self, i: usize) -> bool {
        self.positions[i].iter().all(|c| c.abs() <= 0.5 * (1.0 - self.eta))
    }
}

/// The indicator fields of one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionFields {
    n: usize,
    pair: Vec<bool>,
    triple: Vec<bool>,
}

impl CollisionFields {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `F_ij`.
    pub fn pair(&self, i: usize, j: usize) -> bool {
        self.pair[i * self.n + j]
    }

    /// `F̃_ijk`.
    pub fn triple(&self, i: usize, j: usize, k: usize) -> bool {
        self.triple[(i * self.n + j) * self.n + k]
    }

    /// `Σ_j F_ij + ½ Σ_{j,k} F̃_ijk` for every `i`.
    pub fn sums(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let pairs = (0..n).filter(|&j| self.pair(i, j)).count();
                let triples = (0..n)
                    .flat_map(|j| (0..n).map(move |k| (j, k)))
                    .filter(|&(j, k)| self.triple(i, j, k))
                    .count();
                pairs as f64 + 0.5 * triples as f64
            })
            .collect()
    }
}

/// `F_ij` and `F̃_ijk` with sharp indicators `χ_R = 𝟙{|x| ≤ R}` and
/// `θ_2R = 𝟙{|x| > 2R}`.
///
/// A blocking particle `m` is within `2R` of the pair midpoint (resp. the
/// triple barycentre), hence within `3R` of `x_i`; only those are scanned.
pub fn collision_indicators(c: &Configuration) -> CollisionFields {
    let n = c.len();
    let x = &c.positions;
    let (r2, block2) = (c.r * c.r, 4.0 * c.r * c.r);
    let reach2 = 9.0 * c.r * c.r;
    let mut close: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut near: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d2 = geom::dist2(&x[i], &x[j]);
            if d2 <= r2 {
                close[i].push(j);
            }
            if d2 <= reach2 {
                near[i].push(j);
            }
        }
    }
    let mut pair = vec![false; n * n];
    let mut triple = vec![false; n * n * n];
    for i in 0..n {
        for &j in &close[i] {
            let mid = geom::scale(&geom::add(&x[i], &x[j]), 0.5);
            let blocked = near[i].iter().any(|&m| m != j && geom::dist2(&mid, &x[m]) <= block2);
            pair[i * n + j] = !blocked;
        }
        for &j in &close[i] {
            for &k in &close[i] {
                if j == k {
                    continue;
                }
                let bary = geom::scale(&geom::add(&geom::add(&x[i], &x[j]), &x[k]), 1.0 / 3.0);
                let blocked = near[i]
                    .iter()
                    .any(|&m| m != j && m != k && geom::dist2(&bary, &x[m]) <= block2);
                triple[(i * n + j) * n + k] = !blocked;
            }
        }
    }
    CollisionFields { n, pair, triple }
}

/// Per-particle sums of the exclusion bound. Fails if any sum exceeds one, if
/// a particle has two partners, or if both kinds of collision are active for
/// the same particle.
pub fn check_exclusion(c: &Configuration) -> Result<Vec<f64>> {
    check_fields(&collision_indicators(c))
}

fn check_fields(fields: &CollisionFields) -> Result<Vec<f64>> {
    let n = fields.n;
    for i in 0..n {
        let pairs = (0..n).filter(|&j| fields.pair(i, j)).count();
        let triples = (0..n)
            .flat_map(|j| (0..n).map(move |k| (j, k)))
            .filter(|&(j, k)| fields.triple(i, j, k))
            .count();
        if pairs > 1 || triples > 2 || (pairs > 0 && triples > 0) {
            return Err(Error::BoundViolated(format!(
                "particle {i}: {pairs} pair and {triples} ordered triple indicators active"
            )));
        }
    }
    let sums = fields.sums();
    if let Some((i, s)) = sums.iter().enumerate().find(|(_, &s)| s > 1.0) {
        return Err(Error::BoundViolated(format!("particle {i}: exclusion sum {s} > 1")));
    }
    Ok(sums)
}

/// Outcome of [`exclusion_sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExclusionSweep {
    pub draws: u64,
    pub violations: u64,
    /// Configurations with at least one active pair indicator.
    pub with_pairs: u64,
    /// Configurations with at least one active triple indicator.
    pub with_triples: u64,
}

impl ExclusionSweep {
    fn merge(self, o: Self) -> Self {
        Self {
            draws: self.draws + o.draws,
            violations: self.violations + o.violations,
            with_pairs: self.with_pairs + o.with_pairs,
            with_triples: self.with_triples + o.with_triples,
        }
    }
}

const SWEEP_CHUNK: u64 = 4096;

/// Checks the exclusion bound on `draws` random configurations with particle
/// counts from `counts` and radii from `radii`, alternating uniform and
/// clustered draws. Chunks use independent streams of `seed`, so the result
/// does not depend on the thread count.
pub fn exclusion_sweep(draws: u64, counts: &[usize], radii: &[f64], eta: f64, seed: u64) -> Result<ExclusionSweep> {
    if counts.is_empty() || radii.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one particle count and radius".into(),
        ));
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::InvalidInput(format!("radius {r} outside (0, 1)")));
    }
    let chunks = draws.div_ceil(SWEEP_CHUNK);
    let result = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let mut acc = ExclusionSweep::default();
            let start = chunk * SWEEP_CHUNK;
            for d in start..(start + SWEEP_CHUNK).min(draws) {
                let n = counts[(d as usize) % counts.len()];
                let r = radii[(d as usize / counts.len()) % radii.len()];
                let c = Configuration::random(n, r, eta, d % 2 == 1, &mut rng);
                let fields = collision_indicators(&c);
                acc.draws += 1;
                if fields.pair.iter().any(|&f| f) {
                    acc.with_pairs += 1;
                }
                if fields.triple.iter().any(|&f| f) {
                    acc.with_triples += 1;
                }
                if check_fields(&fields).is_err() {
                    acc.violations += 1;
                }
            }
            acc
        })
        .reduce(ExclusionSweep::default, ExclusionSweep::merge);
    Ok(result)
}
