use std::sync::OnceLock;

use nalgebra::{Matrix2, SMatrix, SymmetricEigen};

use crate::geom::{self, Vec3};

pub type Matrix6 = SMatrix<f64, 6, 6>;

/// The constant matrix `M = B ⊗ I₃` that turns the three-body kinetic term
/// into an isotropic one in `y = M⁻¹x`, with
/// `B = [[√3+1, √3−1], [√3−1, √3+1]] / (2√2)`.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    block: Matrix2<f64>,
    inverse_block: Matrix2<f64>,
    /// Eigenvalues of `M²` in ascending order, each block eigenvalue repeated three times.
    m2_eigenvalues: [f64; 6],
    det: f64,
}

impl ScatteringMatrix {
    fn build() -> Self {
        let r3 = 3f64.sqrt();
        let d = 2.0 * 2f64.sqrt();
        let block = Matrix2::new((r3 + 1.0) / d, (r3 - 1.0) / d, (r3 - 1.0) / d, (r3 + 1.0) / d);
        let inverse_block = block.try_inverse().expect("the block of M is nonsingular");
        let eig = SymmetricEigen::new(block * block).eigenvalues;
        let (lo, hi) = if eig[0] <= eig[1] {
            (eig[0], eig[1])
        } else {
            (eig[1], eig[0])
        };
        let m2_eigenvalues = [lo, lo, lo, hi, hi, hi];
        let det = m2_eigenvalues.iter().product::<f64>().sqrt();
        Self {
            block,
            inverse_block,
            m2_eigenvalues,
            det,
        }
    }

    /// Shared instance.
    pub fn get() -> &'static ScatteringMatrix {
        static M: OnceLock<ScatteringMatrix> = OnceLock::new();
        M.get_or_init(Self::build)
    }

    pub fn block(&self) -> &Matrix2<f64> {
        &self.block
    }

    pub fn inverse_block(&self) -> &Matrix2<f64> {
        &self.inverse_block
    }

    pub fn m2_eigenvalues(&self) -> &[f64; 6] {
        &self.m2_eigenvalues
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Operator norm `‖M‖`.
    pub fn norm(&self) -> f64 {
        self.m2_eigenvalues[5].sqrt()
    }

    /// Smallest singular value of `M`.
    pub fn min_singular_value(&self) -> f64 {
        self.m2_eigenvalues[0].sqrt()
    }

    pub fn full(&self) -> Matrix6 {
        kron_identity(&self.block)
    }

    pub fn inverse_full(&self) -> Matrix6 {
        kron_identity(&self.inverse_block)
    }

    /// `M⁻¹(x, y)` as a pair of 3-vectors.
    pub fn apply_inverse(&self, x: &Vec3, y: &Vec3) -> (Vec3, Vec3) {
        apply_block(&self.inverse_block, x, y)
    }

    /// `M(x, y)` as a pair of 3-vectors.
    pub fn apply(&self, x: &Vec3, y: &Vec3) -> (Vec3, Vec3) {
        apply_block(&self.block, x, y)
    }
}

fn apply_block(b: &Matrix2<f64>, x: &Vec3, y: &Vec3) -> (Vec3, Vec3) {
    let mut u = [0.0; 3];
    let mut v = [0.0; 3];
    for k in 0..3 {
        u[k] = b[(0, 0)] * x[k] + b[(0, 1)] * y[k];
        v[k] = b[(1, 0)] * x[k] + b[(1, 1)] * y[k];
    }
    (u, v)
}

fn kron_identity(b: &Matrix2<f64>) -> Matrix6 {
    let mut m = Matrix6::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..3 {
                m[(3 * i + k, 3 * j + k)] = b[(i, j)];
            }
        }
    }
    m
}

/// Hyperradius `s = |M⁻¹(x, y)|`, evaluated through the equivalent
/// pair-distance form `s² = (2/3)(|x|² + |y|² + |x − y|²)`.
///
/// The three squared distances are summed in sorted order so the result is
/// bitwise invariant under any relabeling that permutes them exactly.
#[inline]
pub fn hyperradius(x: &Vec3, y: &Vec3) -> f64 {
    hyperradius_from_pairs(geom::norm2(x), geom::norm2(y), geom::dist2(x, y))
}

/// Hyperradius from the three squared pair distances of a triple.
#[inline]
pub fn hyperradius_from_pairs(d12: f64, d13: f64, d23: f64) -> f64 {
    let (mut a, mut b, mut c) = (d12, d13, d23);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    if b > c {
        std::mem::swap(&mut b, &mut c);
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    ((2.0 / 3.0) * ((a + b) + c)).sqrt()
}
