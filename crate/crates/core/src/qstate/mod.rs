//! Density matrices, ensembles, entropy and quantum relative entropy.
//!
//! Every entropic quantity in this crate is measured in bits.

mod bloch;
mod divergence;

pub use bloch::{bloch_to_density, density_to_bloch, BlochVector};
pub use divergence::{
    bregman_divergence, bregman_divergence_with, closed_form_audit, relative_entropy,
    relative_entropy_bloch, ClosedFormAudit, Generator, NegativeEntropy, PreparedCenter,
    PreparedState, Scaled, Sum,
};
pub(crate) use divergence::qubit_divergence;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, c, CMatrix, EIG_ZERO};

/// Tolerance used when validating states at construction.
pub const STATE_TOL: f64 = 1e-10;

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates `mat` as a density matrix. Small Hermiticity defects are
    /// symmetrised away; anything beyond [`STATE_TOL`] is rejected.
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, expected non-empty square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let defect = linalg::hermiticity_defect(&mat);
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let mat = linalg::hermitize(&mat);
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = linalg::eigvalsh(&mat)[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { mat })
    }

    /// Wraps a matrix produced by a trace-preserving computation on valid
    /// states. Only Hermiticity is restored.
    pub(crate) fn from_trusted(mat: CMatrix) -> Self {
        Self {
            mat: linalg::hermitize(&mat),
        }
    }

    /// Builds a state from its spectrum and eigenbasis.
    pub(crate) fn from_spectrum(values: &[f64], vectors: &CMatrix) -> Self {
        Self::from_trusted(linalg::from_spectrum(values, vectors))
    }

    /// |ψ⟩⟨ψ| for the normalised `amplitudes`.
    pub fn pure(amplitudes: &[linalg::C64]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.is_empty() || norm < 1e-300 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(
            amplitudes.len(),
            amplitudes.iter().map(|a| a / norm),
        );
        Ok(Self::from_trusted(&v * v.adjoint()))
    }

    /// Computational basis projector |i⟩⟨i|.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(i, i)] = c(1.0, 0.0);
        Self { mat: m }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: linalg::identity(dim).unscale(dim as f64),
        }
    }

    /// diag(p). The entries must form a probability vector.
    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            p.len(),
            p.iter().map(|&x| c(x, 0.0)),
        ));
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_full_rank(&self) -> bool {
        self.min_eigenvalue() >= EIG_ZERO
    }

    /// ρ ⊗ τ.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            mat: linalg::kron(&self.mat, &other.mat),
        }
    }

    /// Largest entrywise deviation from `other`.
    pub fn distance_max(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }

    /// Convex combination `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self::from_trusted(self.mat.scale(1.0 - t) + other.mat.scale(t))
    }
}

/// Von Neumann entropy S(ρ) = −Tr ρ log₂ ρ in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    linalg::shannon_bits(&rho.eigenvalues())
}

/// Entropy of an arbitrary Hermitian PSD matrix (no trace check).
pub(crate) fn matrix_entropy(m: &CMatrix) -> f64 {
    linalg::shannon_bits(&linalg::eigvalsh(m))
}

/// A probability-weighted list of equal-dimension states.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    states: Vec<DensityMatrix>,
    probs: Vec<f64>,
}

impl Ensemble {
    pub fn new(states: Vec<DensityMatrix>, probs: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Empty("ensemble"));
        }
        check_dim(states.len(), probs.len())?;
        let d = states[0].dim();
        for s in &states {
            check_dim(d, s.dim())?;
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Parameter("negative ensemble probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::Parameter(format!(
                "ensemble probabilities sum to {total}"
            )));
        }
        Ok(Self { states, probs })
    }

    /// Equal-weight ensemble.
    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let n = states.len().max(1);
        Self::new(states, vec![1.0 / n as f64; n])
    }

    pub fn single(state: DensityMatrix) -> Self {
        Self {
            states: vec![state],
            probs: vec![1.0],
        }
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &DensityMatrix)> {
        self.probs.iter().copied().zip(self.states.iter())
    }
}

/// The averaged state Σ pᵢ ρᵢ.
pub fn mix(e: &Ensemble) -> DensityMatrix {
    let d = e.dim();
    let mut acc = CMatrix::zeros(d, d);
    for (p, s) in e.iter() {
        acc += s.matrix().scale(p);
    }
    DensityMatrix::from_trusted(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn symmetrises_tiny_defects() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(0.5, 0.0);
        m[(1, 1)] = c(0.5, 0.0);
        m[(0, 1)] = c(0.1, 1e-12);
        m[(1, 0)] = c(0.1, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert_eq!(rho.matrix()[(0, 1)], rho.matrix()[(1, 0)].conj());
    }

    #[test]
    fn rejects_bad_trace_and_negative_spectrum() {
        assert!(DensityMatrix::diagonal(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&DensityMatrix::basis(2, 0)).abs() < 1e-12);
        assert!((von_neumann_entropy(&DensityMatrix::maximally_mixed(2)) - 1.0).abs() < 1e-12);
        // Bloch radius 0.5: eigenvalues 0.75 / 0.25.
        let rho = bloch_to_density(BlochVector::new(0.0, 0.3, 0.4)).unwrap();
        let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((von_neumann_entropy(&rho) - h).abs() < 1e-12);
        assert!((h - 0.811278124459).abs() < 1e-9);
    }

    #[test]
    fn entropy_bounded_by_log_dim() {
        let rho = DensityMatrix::maximally_mixed(5);
        assert!((von_neumann_entropy(&rho) - 5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn mix_examples() {
        let rho = bloch_to_density(BlochVector::new(0.1, 0.2, 0.3)).unwrap();
        assert!(mix(&Ensemble::single(rho.clone())).distance_max(&rho) < 1e-15);
        let e = Ensemble::new(
            vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(mix(&e).distance_max(&DensityMatrix::maximally_mixed(2)) < 1e-15);
        let e = Ensemble::new(
            vec![DensityMatrix::basis(2, 0), DensityMatrix::basis(2, 1)],
            vec![0.3, 0.7],
        )
        .unwrap();
        let want = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(mix(&e).distance_max(&want) < 1e-15);
    }

    #[test]
    fn ensemble_validation() {
        let s = DensityMatrix::basis(2, 0);
        assert!(Ensemble::new(vec![s.clone()], vec![0.9]).is_err());
        assert!(Ensemble::new(vec![s.clone(), s.clone()], vec![1.5, -0.5]).is_err());
        assert!(Ensemble::new(vec![s.clone(), DensityMatrix::basis(3, 0)], vec![0.5, 0.5]).is_err());
        assert!(Ensemble::new(vec![], vec![]).is_err());
    }
}
