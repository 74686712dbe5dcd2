//! Small dense Hermitian matrices in the six-level spin ⊗ ¹³C basis.
//!
//! Basis order is `{+1↑, +1↓, 0↑, 0↓, −1↑, −1↓}`. Every Hamiltonian the
//! toolkit builds is block diagonal in the ¹³C index, so most work is done on
//! the two 3×3 blocks `{+1, 0, −1}` of a fixed nuclear sublevel.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (relative defect {defect:.3e})")]
    NonHermitian { defect: f64 },
    #[error("matrix couples the ¹³C sublevels (max off-block entry {magnitude:.3e})")]
    NotBlockDiagonal { magnitude: f64 },
}

/// Nuclear (¹³C) sublevel, m_I = ±½.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CarbonSublevel {
    Up,
    Down,
}

impl CarbonSublevel {
    pub const ALL: [CarbonSublevel; 2] = [CarbonSublevel::Up, CarbonSublevel::Down];

    /// +1 for ↑, −1 for ↓; the sign that multiplies A∥ in ξ±.
    pub fn sign(self) -> f64 {
        match self {
            CarbonSublevel::Up => 1.0,
            CarbonSublevel::Down => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            CarbonSublevel::Up => 0,
            CarbonSublevel::Down => 1,
        }
    }
}

/// Electronic spin projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinProjection {
    Plus,
    Zero,
    Minus,
}

impl SpinProjection {
    pub const ALL: [SpinProjection; 3] = [SpinProjection::Plus, SpinProjection::Zero, SpinProjection::Minus];

    /// Row of this projection inside a 3×3 sublevel block.
    pub fn block_index(self) -> usize {
        match self {
            SpinProjection::Plus => 0,
            SpinProjection::Zero => 1,
            SpinProjection::Minus => 2,
        }
    }
}

/// Index of `|m_s, m_I⟩` in the six-level basis.
#[inline]
pub fn basis_index(ms: SpinProjection, sublevel: CarbonSublevel) -> usize {
    2 * ms.block_index() + sublevel.index()
}

/// Largest |Hᵢⱼ − conj(Hⱼᵢ)| relative to the largest entry (floored at 1).
pub fn hermiticity_defect<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let mut scale: f64 = 1.0;
    let mut defect: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            scale = scale.max(m[(i, j)].norm());
            defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    defect / scale
}

/// A Hermitian 6×6 matrix in the spin ⊗ ¹³C basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix6(Matrix6<C64>);

impl HermitianMatrix6 {
    /// Wraps `m`, rejecting it if it is not Hermitian to [`HERMITIAN_TOL`].
    pub fn new(m: Matrix6<C64>) -> Result<Self, LinalgError> {
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(LinalgError::NonHermitian { defect });
        }
        Ok(Self(m))
    }

    /// Assembles the matrix from the two nuclear-sublevel blocks.
    pub fn from_blocks(up: &Matrix3<C64>, down: &Matrix3<C64>) -> Result<Self, LinalgError> {
        let mut m = Matrix6::zeros();
        for (sub, block) in [(CarbonSublevel::Up, up), (CarbonSublevel::Down, down)] {
            for (r, &ms_r) in SpinProjection::ALL.iter().enumerate() {
                for (c, &ms_c) in SpinProjection::ALL.iter().enumerate() {
                    m[(basis_index(ms_r, sub), basis_index(ms_c, sub))] = block[(r, c)];
                }
            }
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix6<C64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix6<C64> {
        self.0
    }

    /// Largest magnitude of any entry coupling ↑ to ↓.
    pub fn off_block_magnitude(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if i % 2 != j % 2 {
                    worst = worst.max(self.0[(i, j)].norm());
                }
            }
        }
        worst
    }

    pub fn is_carbon_block_diagonal(&self) -> bool {
        self.off_block_magnitude() == 0.0
    }

    /// The 3×3 `{+1, 0, −1}` block of one nuclear sublevel.
    pub fn carbon_block(&self, sublevel: CarbonSublevel) -> Matrix3<C64> {
        Matrix3::from_fn(|r, c| {
            self.0[(
                basis_index(SpinProjection::ALL[r], sublevel),
                basis_index(SpinProjection::ALL[c], sublevel),
            )]
        })
    }

    /// Diagonal entries as real numbers.
    pub fn diagonal_real(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.0[(i, i)].re)
    }
}

/// Eigen-decomposition with eigenvalues ascending and eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem<const N: usize> {
    pub values: [f64; N],
    pub vectors: nalgebra::SMatrix<C64, N, N>,
}

/// Diagonalizes a 6×6 Hermitian matrix. Eigenvalues are returned in
/// ascending order and the eigenvector matrix is unitary.
pub fn diagonalize(h: &Matrix6<C64>) -> Result<Eigensystem<6>, LinalgError> {
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOL {
        return Err(LinalgError::NonHermitian { defect });
    }
    Ok(sorted_eigen(SymmetricEigen::new(*h)))
}

/// Diagonalizes one 3×3 Hermitian block.
pub fn diagonalize_block(h: &Matrix3<C64>) -> Result<Eigensystem<3>, LinalgError> {
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOL {
        return Err(LinalgError::NonHermitian { defect });
    }
    Ok(sorted_eigen(SymmetricEigen::new(*h)))
}

fn sorted_eigen<const N: usize>(
    eig: SymmetricEigen<C64, nalgebra::Const<N>>,
) -> Eigensystem<N> {
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = std::array::from_fn(|i| eig.eigenvalues[order[i]]);
    let vectors = nalgebra::SMatrix::<C64, N, N>::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    Eigensystem { values, vectors }
}

impl<const N: usize> Eigensystem<N> {
    /// exp(−i·H·t) built from this decomposition.
    pub fn propagator(&self, t: f64) -> nalgebra::SMatrix<C64, N, N> {
        let phases = nalgebra::SVector::<C64, N>::from_fn(|i, _| C64::from_polar(1.0, -self.values[i] * t));
        let scaled = nalgebra::SMatrix::<C64, N, N>::from_fn(|r, c| self.vectors[(r, c)] * phases[c]);
        scaled * self.vectors.adjoint()
    }

    /// V·diag(λ)·V†.
    pub fn reconstruct(&self) -> nalgebra::SMatrix<C64, N, N> {
        let scaled = nalgebra::SMatrix::<C64, N, N>::from_fn(|r, c| self.vectors[(r, c)] * self.values[c]);
        scaled * self.vectors.adjoint()
    }
}

/// Applies exp(−i·H·t) to a block state.
pub fn evolve_block(h: &Matrix3<C64>, t: f64, state: &Vector3<C64>) -> Result<Vector3<C64>, LinalgError> {
    if t == 0.0 {
        return Ok(*state);
    }
    let eig = diagonalize_block(h)?;
    Ok(eig.propagator(t) * state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pseudo_random_hermitian(seed: u64) -> Matrix6<C64> {
        // xorshift; only needs to be deterministic
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut m = Matrix6::zeros();
        for i in 0..6 {
            m[(i, i)] = c(10.0 * next(), 0.0);
            for j in (i + 1)..6 {
                let z = c(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let eig = diagonalize(&Matrix6::identity()).unwrap();
        for v in eig.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_matrix_gives_sorted_diagonal() {
        let d = [3.0, -1.0, 7.5, 0.0, -4.25, 2.0];
        let m = Matrix6::from_fn(|i, j| if i == j { c(d[i], 0.0) } else { c(0.0, 0.0) });
        let eig = diagonalize(&m).unwrap();
        let mut sorted = d;
        sorted.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(sorted.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn random_hermitian_reconstructs() {
        for seed in 1..50 {
            let h = pseudo_random_hermitian(seed);
            let eig = diagonalize(&h).unwrap();
            let err = (eig.reconstruct() - h).camax();
            assert!(err < 1e-10, "seed {seed}: reconstruction error {err}");
            let gram = eig.vectors.adjoint() * eig.vectors;
            let ortho = (gram - Matrix6::identity()).camax();
            assert!(ortho < 1e-10, "seed {seed}: orthonormality error {ortho}");
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = Matrix6::<C64>::identity();
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(diagonalize(&m), Err(LinalgError::NonHermitian { .. })));
        assert!(HermitianMatrix6::new(m).is_err());
    }

    #[test]
    fn blocks_round_trip_through_six_level_layout() {
        let up = Matrix3::new(
            c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0),
            c(0.0, 0.0), c(-2.0, 0.0), c(0.1, 0.2),
            c(0.5, 0.0), c(0.1, -0.2), c(-1.0, 0.0),
        );
        let down = up * c(0.5, 0.0);
        let h = HermitianMatrix6::from_blocks(&up, &down).unwrap();
        assert!(h.is_carbon_block_diagonal());
        assert_eq!(h.carbon_block(CarbonSublevel::Up), up);
        assert_eq!(h.carbon_block(CarbonSublevel::Down), down);
        assert_eq!(h.matrix()[(basis_index(SpinProjection::Minus, CarbonSublevel::Down), 1)], c(0.25, 0.0));
    }

    #[test]
    fn propagator_is_unitary() {
        let h = pseudo_random_hermitian(7);
        let eig = diagonalize(&h).unwrap();
        let u = eig.propagator(3.7);
        let err = (u.adjoint() * u - Matrix6::identity()).camax();
        assert!(err < 1e-12);
    }
}
