//! Coarse full-grid cross-checks of the sector computations.

use super::{Softener2B, Softener3B};
use crate::error::{Error, Result};
use crate::linalg::{lowest_eigenpairs, LanczosOptions, LinearOperator};
use crate::potentials::{RadialPotential, ScatteringMatrix, ThreeBodyPotential};

/// `2/h²`-weighted graph Laplacian on the grid nodes inside a convex region,
/// plus a diagonal potential. Missing edges across the boundary give the
/// natural (Neumann) condition.
struct NodeGraph {
    offsets: Vec<usize>,
    neighbours: Vec<u32>,
    coupling: f64,
    potential: Vec<f64>,
}

impl LinearOperator for NodeGraph {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            let mut acc = self.potential[i] * x[i];
            for &j in &self.neighbours[self.offsets[i]..self.offsets[i + 1]] {
                acc += self.coupling * (x[i] - x[j as usize]);
            }
            y[i] = acc;
        }
    }
}

/// Nodes `−extent + i h` in `dim` dimensions kept by `inside`; returns their
/// coordinates and the nearest-neighbour graph.
fn build_graph(
    dim: usize,
    points: usize,
    extent: f64,
    inside: impl Fn(&[f64]) -> bool,
) -> (Vec<Vec<f64>>, Vec<usize>, Vec<u32>, f64) {
    let h = 2.0 * extent / (points - 1) as f64;
    let total = points.pow(dim as u32);
    let mut index = vec![u32::MAX; total];
    let mut coords = Vec::new();
    let mut z = vec![0.0; dim];
    for (flat, slot) in index.iter_mut().enumerate() {
        let mut rest = flat;
        for zk in z.iter_mut() {
            *zk = -extent + h * (rest % points) as f64;
            rest /= points;
        }
        if inside(&z) {
            *slot = coords.len() as u32;
            coords.push(z.clone());
        }
    }
    let mut offsets = vec![0];
    let mut neighbours = Vec::new();
    for flat in 0..total {
        if index[flat] == u32::MAX {
            continue;
        }
        let mut stride = 1;
        let mut rest = flat;
        for _ in 0..dim {
            let k = rest % points;
            rest /= points;
            if k > 0 && index[flat - stride] != u32::MAX {
                neighbours.push(index[flat - stride]);
            }
            if k + 1 < points && index[flat + stride] != u32::MAX {
                neighbours.push(index[flat + stride]);
            }
            stride *= points;
        }
        offsets.push(neighbours.len());
    }
    (coords, offsets, neighbours, h)
}

fn lowest(graph: &NodeGraph) -> Result<f64> {
    let opts = LanczosOptions {
        tol: 1e-9,
        max_basis: 80,
        ..LanczosOptions::default()
    };
    Ok(lowest_eigenpairs(graph, 1, &opts)?[0].value)
}

fn check_points(points: usize, max: usize) -> Result<()> {
    if !(5..=max).contains(&points) {
        return Err(Error::InvalidInput(format!(
            "grid mode needs between 5 and {max} points per axis, got {points}"
        )));
    }
    Ok(())
}

/// Two-body gap on the nodes of the ball `|x| ≤ R₂`; the softener is
/// renormalised so that its node sum times `h³` is one.
pub(super) fn ball_gap_3d(p: &RadialPotential, u: &Softener2B, kappa: f64, points: usize) -> Result<(f64, f64)> {
    check_points(points, 161)?;
    let r2 = u.r2;
    let (coords, offsets, neighbours, h) = build_graph(3, points, r2, |z| {
        z.iter().map(|c| c * c).sum::<f64>() <= r2 * r2 * (1.0 + 1e-12)
    });
    let radii: Vec<f64> = coords
        .iter()
        .map(|z| z.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    let u_sum: f64 = radii.iter().map(|&r| u.value(r)).sum::<f64>() * h.powi(3);
    if u_sum <= 0.0 {
        return Err(Error::Precondition("no grid node inside the softener's support".into()));
    }
    let potential = radii.iter().map(|&r| p.value(r) - kappa * u.value(r) / u_sum).collect();
    let graph = NodeGraph {
        offsets,
        neighbours,
        coupling: 2.0 / (h * h),
        potential,
    };
    Ok((lowest(&graph)?, h))
}

/// Three-body gap in `y`-coordinates on the nodes of the ellipsoid
/// `|My| ≤ R₂`; the softener is renormalised so that its node sum times
/// `det(M) h⁶` is one.
pub(super) fn ellipsoid_gap_6d(
    w: &ThreeBodyPotential,
    u: &Softener3B,
    kappa: f64,
    points: usize,
) -> Result<(f64, f64)> {
    check_points(points, 11)?;
    let m = ScatteringMatrix::get();
    let r2 = u.r2;
    let extent = r2 / m.min_singular_value();
    let (coords, offsets, neighbours, h) = build_graph(6, points, extent, |z| {
        let (x, y) = m.apply(&[z[0], z[1], z[2]], &[z[3], z[4], z[5]]);
        x.iter().chain(&y).map(|c| c * c).sum::<f64>() <= r2 * r2 * (1.0 + 1e-12)
    });
    let profile = w.hyperradial_profile().expect("m-radial");
    let hyper: Vec<f64> = coords
        .iter()
        .map(|z| z.iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    let u_sum: f64 = hyper.iter().map(|&s| u.value_hyper(s)).sum::<f64>() * m.det() * h.powi(6);
    if u_sum <= 0.0 {
        return Err(Error::Precondition("no grid node inside the softener's support".into()));
    }
    let potential = hyper
        .iter()
        .map(|&s| profile.value(s) - kappa * u.value_hyper(s) / u_sum)
        .collect();
    let graph = NodeGraph {
        offsets,
        neighbours,
        coupling: 2.0 / (h * h),
        potential,
    };
    Ok((lowest(&graph)?, h))
}
