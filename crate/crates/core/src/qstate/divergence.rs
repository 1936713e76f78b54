use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BlochVector, DensityMatrix};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, CMatrix, EIG_ZERO};
use crate::random;

/// Quantum relative entropy D(ρ‖σ) = Tr ρ(log₂ρ − log₂σ), evaluated in the
/// eigenbases of both arguments.
///
/// Returns `+∞` when ρ has weight on the kernel of σ.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let neg_entropy: f64 = rho.eigenvalues().iter().map(|&l| linalg::xlog2x(l)).sum();
    let (mu, v) = linalg::eigh(sigma.matrix());
    Ok(neg_entropy - cross_term(rho.matrix(), &mu, &v))
}

/// Tr ρ log₂σ from the spectral data of σ; −∞ on a support violation.
fn cross_term(rho: &CMatrix, mu: &[f64], v: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for (j, &m) in mu.iter().enumerate() {
        let col = v.column(j);
        let w = (col.adjoint() * rho * col)[(0, 0)].re;
        if m < EIG_ZERO {
            if w > EIG_ZERO {
                return f64::NEG_INFINITY;
            }
        } else {
            acc += w * m.log2();
        }
    }
    acc
}

/// A state with its negative entropy cached, for repeated divergence queries.
#[derive(Clone, Debug)]
pub struct PreparedState {
    state: DensityMatrix,
    neg_entropy: f64,
}

impl PreparedState {
    pub fn new(state: DensityMatrix) -> Self {
        let neg_entropy = state.eigenvalues().iter().map(|&l| linalg::xlog2x(l)).sum();
        Self { state, neg_entropy }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn neg_entropy(&self) -> f64 {
        self.neg_entropy
    }
}

/// A second-slot argument σ with log₂σ cached. Divergences against a
/// full-rank center cost one Hilbert–Schmidt product.
#[derive(Clone, Debug)]
pub struct PreparedCenter {
    state: DensityMatrix,
    spectrum: Vec<f64>,
    vectors: CMatrix,
    log2: Option<CMatrix>,
}

impl PreparedCenter {
    pub fn new(state: DensityMatrix) -> Self {
        let (spectrum, vectors) = linalg::eigh(state.matrix());
        let log2 = (spectrum[0] >= EIG_ZERO).then(|| {
            let logs: Vec<f64> = spectrum.iter().map(|m| m.log2()).collect();
            linalg::from_spectrum(&logs, &vectors)
        });
        Self {
            state,
            spectrum,
            vectors,
            log2,
        }
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// D(ρ‖self).
    pub fn divergence(&self, rho: &PreparedState) -> f64 {
        let cross = match &self.log2 {
            Some(l) => linalg::hs_inner(rho.state.matrix(), l),
            None => cross_term(rho.state.matrix(), &self.spectrum, &self.vectors),
        };
        rho.neg_entropy - cross
    }
}

/// Closed-form qubit relative entropy in Bloch coordinates.
///
/// With r = |ρ⃗|, s = |σ⃗|:
/// D = ½log₂¼(1−r²) + ½r·log₂((1+r)/(1−r)) − ½log₂¼(1−s²) − (1/2s)·log₂((1+s)/(1−s))·⟨ρ⃗,σ⃗⟩,
/// with the last term dropped when σ is maximally mixed.
pub fn relative_entropy_bloch(rho: BlochVector, sigma: BlochVector) -> Result<f64> {
    const EDGE: f64 = 1.0 - 1e-9;
    let r = rho.radius();
    let s = sigma.radius();
    if r >= EDGE || s >= EDGE {
        return Err(Error::Singular(format!(
            "closed form needs radii below 1 (got {r}, {s})"
        )));
    }
    let half_log_quarter = |t: f64| 0.5 * (0.25 * (1.0 - t * t)).log2();
    let atanh_term = |t: f64| ((1.0 + t) / (1.0 - t)).log2();
    let mut d = half_log_quarter(r) + 0.5 * r * atanh_term(r) - half_log_quarter(s);
    if s > 1e-12 {
        d -= atanh_term(s) / (2.0 * s) * rho.dot(sigma);
    }
    Ok(d)
}

/// Outcome of comparing the Bloch closed form with the spectral divergence.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormAudit {
    pub pairs: usize,
    pub max_abs_deviation: f64,
    pub mean_signed_deviation: f64,
    pub tolerance: f64,
}

impl ClosedFormAudit {
    pub fn agrees(&self) -> bool {
        self.max_abs_deviation <= self.tolerance
    }

    pub fn verdict(&self) -> String {
        if self.agrees() {
            format!(
                "closed form agrees with spectral divergence on {} pairs (max |dev| {:.3e} <= {:.0e})",
                self.pairs, self.max_abs_deviation, self.tolerance
            )
        } else {
            format!(
                "closed form deviates systematically on {} pairs (max |dev| {:.3e}, mean signed dev {:.3e})",
                self.pairs, self.max_abs_deviation, self.mean_signed_deviation
            )
        }
    }
}

/// Compares [`relative_entropy_bloch`] with [`relative_entropy`] on random
/// qubit pairs drawn with radius below `max_radius`.
pub fn closed_form_audit(pairs: usize, max_radius: f64, seed: u64) -> ClosedFormAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut signed = 0.0;
    for _ in 0..pairs {
        let a = random::bloch_in_ball(&mut rng, max_radius);
        let b = random::bloch_in_ball(&mut rng, max_radius);
        let closed = relative_entropy_bloch(a, b).expect("radii below edge");
        let spectral = relative_entropy(
            &super::bloch_to_density(a).unwrap(),
            &super::bloch_to_density(b).unwrap(),
        )
        .unwrap();
        worst = worst.max((closed - spectral).abs());
        signed += closed - spectral;
    }
    ClosedFormAudit {
        pairs,
        max_abs_deviation: worst,
        mean_signed_deviation: if pairs > 0 { signed / pairs as f64 } else { 0.0 },
        tolerance: 1e-9,
    }
}

/// Qubit divergence through the closed form when it passed its audit,
/// otherwise through the spectral route.
pub(crate) fn qubit_divergence(rho: BlochVector, sigma: BlochVector) -> f64 {
    use std::sync::OnceLock;
    static FAST: OnceLock<bool> = OnceLock::new();
    let fast = *FAST.get_or_init(|| closed_form_audit(200, 0.999, 0x5eed).agrees());
    if fast {
        if let Ok(d) = relative_entropy_bloch(rho, sigma) {
            return d;
        }
    }
    match (super::bloch_to_density(rho), super::bloch_to_density(sigma)) {
        (Ok(a), Ok(b)) => relative_entropy(&a, &b).unwrap_or(f64::INFINITY),
        _ => f64::INFINITY,
    }
}

/// A strictly convex generator F on density matrices together with its gradient.
pub trait Generator {
    fn value(&self, rho: &DensityMatrix) -> f64;
    fn gradient(&self, sigma: &DensityMatrix) -> Result<CMatrix>;
}

/// F(ρ) = −S(ρ) = Tr ρ log₂ρ, with ∇F(σ) = log₂σ + (1/ln 2)·I.
#[derive(Clone, Copy, Debug, Default)]
pub struct NegativeEntropy;

impl NegativeEntropy {
    /// ∇F⁻¹(M) = 2^(M − I/ln 2), renormalised to unit trace.
    pub fn gradient_inverse(&self, m: &CMatrix) -> DensityMatrix {
        let shifted = m - linalg::identity(m.nrows()).scale(1.0 / LN_2);
        let (vals, vecs) = linalg::eigh(&linalg::hermitize(&shifted));
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Subtracting the top eigenvalue only rescales, which normalisation undoes.
        let exps: Vec<f64> = vals.iter().map(|v| (v - top).exp2()).collect();
        let total: f64 = exps.iter().sum();
        let normed: Vec<f64> = exps.iter().map(|e| e / total).collect();
        DensityMatrix::from_spectrum(&normed, &vecs)
    }
}

impl Generator for NegativeEntropy {
    fn value(&self, rho: &DensityMatrix) -> f64 {
        -super::von_neumann_entropy(rho)
    }

    fn gradient(&self, sigma: &DensityMatrix) -> Result<CMatrix> {
        let (vals, vecs) = linalg::eigh(sigma.matrix());
        if vals[0] < EIG_ZERO {
            return Err(Error::Singular(format!(
                "gradient of negative entropy needs a full-rank state (min eigenvalue {:.3e})",
                vals[0]
            )));
        }
        let logs: Vec<f64> = vals.iter().map(|v| v.log2() + 1.0 / LN_2).collect();
        Ok(linalg::from_spectrum(&logs, &vecs))
    }
}

/// λ·F for a nonnegative λ.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<G>(pub f64, pub G);

impl<G: Generator> Generator for Scaled<G> {
    fn value(&self, rho: &DensityMatrix) -> f64 {
        self.0 * self.1.value(rho)
    }

    fn gradient(&self, sigma: &DensityMatrix) -> Result<CMatrix> {
        Ok(self.1.gradient(sigma)?.scale(self.0))
    }
}

/// F₁ + F₂.
#[derive(Clone, Copy, Debug)]
pub struct Sum<A, B>(pub A, pub B);

impl<A: Generator, B: Generator> Generator for Sum<A, B> {
    fn value(&self, rho: &DensityMatrix) -> f64 {
        self.0.value(rho) + self.1.value(rho)
    }

    fn gradient(&self, sigma: &DensityMatrix) -> Result<CMatrix> {
        Ok(self.0.gradient(sigma)? + self.1.gradient(sigma)?)
    }
}

/// D_F(ρ‖σ) = F(ρ) − F(σ) − ⟨ρ − σ, ∇F(σ)⟩ with ⟨A, B⟩ = Tr(A B†).
pub fn bregman_divergence_with<G: Generator>(
    generator: &G,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let grad = generator.gradient(sigma)?;
    let diff = rho.matrix() - sigma.matrix();
    Ok(generator.value(rho) - generator.value(sigma) - linalg::hs_inner(&diff, &grad))
}

/// Relative entropy as the Bregman divergence of the negative von Neumann entropy.
pub fn bregman_divergence(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    bregman_divergence_with(&NegativeEntropy, rho, sigma)
}
