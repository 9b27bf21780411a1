use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::trial::{local_terms, particle_log, LocalTerms};
use super::{CellList, TrialParams};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::stats;

/// Markov-chain settings. One sweep is `N` single-particle proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub chains: usize,
    pub sweeps: usize,
    /// Discarded sweeps; `None` means 20% of `sweeps`.
    pub burn_in: Option<usize>,
    /// Half-width of the cubic proposal; `None` means `0.4 L`.
    pub step_size: Option<f64>,
    pub seed: u64,
    /// Batches per chain for the batch-means error.
    pub batches: usize,
    /// Keep every `k`-th measured configuration of chain 0.
    pub dump_every: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            chains: 4,
            sweeps: 2000,
            burn_in: None,
            step_size: None,
            seed: 0,
            batches: 20,
            dump_every: None,
        }
    }
}

impl McConfig {
    pub fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.sweeps / 5)
    }

    pub fn step(&self, l: f64) -> f64 {
        self.step_size.unwrap_or(0.4 * l)
    }

    pub fn check(&self, l: f64) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::InvalidInput("need at least one chain".into()));
        }
        if self.sweeps <= self.burn_in() {
            return Err(Error::InvalidInput(format!(
                "sweeps ({}) must exceed burn-in ({})",
                self.sweeps,
                self.burn_in()
            )));
        }
        if self.batches < 2 || self.sweeps - self.burn_in() < self.batches {
            return Err(Error::InvalidInput(format!(
                "need at least 2 batches and one measured sweep per batch; got {} batches for {} sweeps",
                self.batches,
                self.sweeps - self.burn_in()
            )));
        }
        let step = self.step(l);
        if !(step > 0.0 && step < 0.5 * l) {
            return Err(Error::InvalidInput(format!(
                "step size {step} must lie in (0, L/2) with L = {l}"
            )));
        }
        if self.dump_every == Some(0) {
            return Err(Error::InvalidInput("dump interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermEstimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpedSample {
    pub chain: usize,
    pub sweep: usize,
    pub positions: Vec<Vec3>,
}

/// Monte Carlo estimate of `⟨Ψ, HΨ⟩ / ‖Ψ‖²` split into the seven terms.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub i1: TermEstimate,
    pub i2: TermEstimate,
    pub j1: TermEstimate,
    pub j2: TermEstimate,
    pub k1: TermEstimate,
    pub k2: TermEstimate,
    pub k3: TermEstimate,
    pub total: TermEstimate,
    pub acceptance: f64,
    pub effective_samples: f64,
    pub samples: usize,
    pub warnings: Vec<String>,
    pub dumped: Vec<DumpedSample>,
}

impl EnergyBreakdown {
    pub fn terms(&self) -> [TermEstimate; 7] {
        [self.i1, self.i2, self.j1, self.j2, self.k1, self.k2, self.k3]
    }
}

/// Cubic lattice with `⌈N^{1/3}⌉` sites per axis, first `N` sites taken,
/// each jittered by up to a tenth of the lattice spacing.
pub fn initial_configuration(n: usize, l: f64, rng: &mut impl Rng) -> Vec<Vec3> {
    let m = (1..).find(|k: &usize| k.pow(3) >= n).unwrap_or(1);
    let h = l / m as f64;
    (0..n)
        .map(|idx| {
            let k = [idx % m, (idx / m) % m, idx / (m * m)];
            k.map(|c| (c as f64 + 0.5) * h + rng.random_range(-0.1..0.1) * h)
        })
        .collect()
}

struct ChainRun {
    series: Vec<LocalTerms>,
    accepted: u64,
    proposed: u64,
    dumped: Vec<DumpedSample>,
}

fn run_chain(tp: &TrialParams, mc: &McConfig, chain: usize) -> Result<ChainRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    rng.set_stream(chain as u64);
    let n = tp.n;
    let l = tp.l;
    let step = mc.step(l);
    let burn_in = mc.burn_in();
    let mut x = initial_configuration(n, l, &mut rng);
    let reach = if tp.reach > 0.0 { tp.reach } else { l };
    let mut cells = CellList::new(&x, l, reach);
    let mut near_old = Vec::new();
    let mut near_new = Vec::new();
    let mut run = ChainRun {
        series: Vec::with_capacity(mc.sweeps - burn_in),
        accepted: 0,
        proposed: 0,
        dumped: Vec::new(),
    };
    for sweep in 0..mc.sweeps {
        for i in 0..n {
            let old = x[i];
            let new = old.map(|c| c + rng.random_range(-step..step));
            let u: f64 = rng.random();
            run.proposed += 1;
            if new.iter().any(|&c| !(0.0..l).contains(&c)) {
                continue;
            }
            cells.candidates(&old, &mut near_old);
            cells.candidates(&new, &mut near_new);
            let before = particle_log(&x, i, &old, &near_old, tp);
            let after = particle_log(&x, i, &new, &near_new, tp);
            if after == f64::NEG_INFINITY {
                continue;
            }
            if u.ln() < 2.0 * (after - before) {
                x[i] = new;
                cells.update(i, &new);
                run.accepted += 1;
            }
        }
        if sweep >= burn_in {
            run.series.push(local_terms(&x, tp)?);
            if let Some(k) = mc.dump_every {
                if chain == 0 && (sweep - burn_in) % k == 0 {
                    run.dumped.push(DumpedSample {
                        chain,
                        sweep,
                        positions: x.clone(),
                    });
                }
            }
        }
    }
    Ok(run)
}

/// Metropolis sampling of `|Ψ|²` with independent chains seeded from
/// substreams of `mc.seed`. Identical inputs give identical output
/// regardless of the thread count.
pub fn mc_estimate(tp: &TrialParams, mc: &McConfig) -> Result<EnergyBreakdown> {
    mc.check(tp.l)?;
    let runs: Vec<ChainRun> = (0..mc.chains)
        .into_par_iter()
        .map(|c| run_chain(tp, mc, c))
        .collect::<Result<_>>()?;

    let estimate = |pick: &dyn Fn(&LocalTerms) -> f64| -> TermEstimate {
        let mut all = Vec::new();
        let mut means = Vec::new();
        for run in &runs {
            let series: Vec<f64> = run.series.iter().map(pick).collect();
            let len = series.len() / mc.batches;
            means.extend(
                series
                    .chunks_exact(len)
                    .take(mc.batches)
                    .map(|c| c.iter().sum::<f64>() / len as f64),
            );
            all.extend(series);
        }
        TermEstimate {
            mean: all.iter().sum::<f64>() / all.len() as f64,
            se: stats::pooled_se(&means),
        }
    };
    let i1 = estimate(&|t| t.i1);
    let i2 = estimate(&|t| t.i2);
    let j1 = estimate(&|t| t.j1);
    let j2 = estimate(&|t| t.j2);
    let k1 = estimate(&|t| t.k1);
    let k2 = estimate(&|t| t.k2);
    let k3 = estimate(&|t| t.k3);
    let total = estimate(&|t| t.total());

    let totals: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.series.iter().map(LocalTerms::total))
        .collect();
    let samples = totals.len();
    let var = stats::variance(&totals);
    let effective_samples = if total.se > 0.0 {
        (var / (total.se * total.se)).min(samples as f64)
    } else {
        samples as f64
    };
    let accepted: u64 = runs.iter().map(|r| r.accepted).sum();
    let proposed: u64 = runs.iter().map(|r| r.proposed).sum();
    let acceptance = accepted as f64 / proposed.max(1) as f64;
    let mut warnings = Vec::new();
    if !(0.2..=0.7).contains(&acceptance) {
        let hint = if acceptance < 0.2 { "decrease" } else { "increase" };
        warnings.push(format!(
            "acceptance rate {acceptance:.3} outside [0.2, 0.7]; {hint} the step size (now {:.4e})",
            mc.step(tp.l)
        ));
    }
    let dumped = runs.into_iter().flat_map(|r| r.dumped).collect();
    Ok(EnergyBreakdown {
        i1,
        i2,
        j1,
        j2,
        k1,
        k2,
        k3,
        total,
        acceptance,
        effective_samples,
        samples,
        warnings,
        dumped,
    })
}
