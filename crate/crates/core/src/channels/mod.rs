//! Completely positive trace-preserving maps in Kraus form.

mod affine;
mod file;

pub use affine::AffineQubitMap;
pub use file::{load_channel, ChannelSpecFile};

use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::qstate::DensityMatrix;

/// Maximum Frobenius residual of Σ N†N − I accepted for a channel.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// A channel given by Kraus operators N_k (each `dim_out × dim_in`).
///
/// The environment dimension of the Stinespring dilation used by
/// [`KrausChannel::complementary`] equals the number of Kraus operators.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::MalformedChannel("no Kraus operators".into()));
        }
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::MalformedChannel("zero dimension".into()));
        }
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != dim_out || op.ncols() != dim_in {
                return Err(Error::MalformedChannel(format!(
                    "Kraus operator {k} is {}x{}, expected {dim_out}x{dim_in}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
        };
        let residual = ch.completeness_residual();
        if !(residual <= COMPLETENESS_TOL) {
            return Err(Error::InvalidChannel {
                residual,
                tol: COMPLETENESS_TOL,
            });
        }
        Ok(ch)
    }

    /// ‖Σ N_k† N_k − I‖_F.
    pub fn completeness_residual(&self) -> f64 {
        let mut acc = -linalg::identity(self.dim_in);
        for k in &self.kraus {
            acc += k.adjoint() * k;
        }
        linalg::frobenius(&acc)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn dim_env(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Σ N_k ρ N_k†.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim_in, rho.dim())?;
        Ok(DensityMatrix::from_trusted(self.apply_matrix(rho.matrix())))
    }

    /// Applies the map to an arbitrary `dim_in × dim_in` operator.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        out
    }

    /// Σ N_k† X N_k, the Heisenberg-picture dual.
    pub fn adjoint_matrix(&self, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * x * k;
        }
        out
    }

    /// An equivalent channel with the fewest Kraus operators (the Choi
    /// rank), obtained by a unitary remix of the Kraus set.
    pub fn minimal(&self) -> KrausChannel {
        let n = self.kraus.len();
        let gram = CMatrix::from_fn(n, n, |i, j| {
            self.kraus[i].iter().zip(self.kraus[j].iter()).map(|(a, b)| a.conj() * b).sum()
        });
        let (vals, vecs) = linalg::eigh(&gram);
        let scale = vals.last().copied().unwrap_or(0.0).max(1.0);
        let kraus: Vec<CMatrix> = (0..n)
            .rev()
            .filter(|&i| vals[i] > 1e-14 * scale)
            .map(|i| {
                let mut op = CMatrix::zeros(self.dim_out, self.dim_in);
                for (k, m) in self.kraus.iter().enumerate() {
                    op += m * vecs[(k, i)];
                }
                op
            })
            .collect();
        if kraus.is_empty() {
            return self.clone();
        }
        KrausChannel {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            kraus,
        }
    }

    /// The environment output of the isometry V = Σ_k N_k ⊗ |k⟩_E:
    /// ρ ↦ Σ_{jk} Tr(N_j ρ N_k†) |j⟩⟨k|.
    pub fn complementary(&self) -> KrausChannel {
        let env = self.kraus.len();
        let ops = (0..self.dim_out)
            .map(|i| CMatrix::from_fn(env, self.dim_in, |k, a| self.kraus[k][(i, a)]))
            .collect();
        KrausChannel {
            dim_in: self.dim_in,
            dim_out: env,
            kraus: ops,
        }
    }

    /// Kraus set {A_i ⊗ B_j}.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| linalg::kron(a, b)))
            .collect();
        KrausChannel {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        }
    }

    /// n-fold tensor power.
    pub fn tensor_power(&self, n: usize) -> KrausChannel {
        assert!(n >= 1, "tensor power needs n >= 1");
        (1..n).fold(self.clone(), |acc, _| acc.tensor(self))
    }

    /// Same channel on the computational basis but as a block of a larger output space.
    fn embedded(&self, scale: f64, out_dim: usize, offset: usize) -> Vec<CMatrix> {
        self.kraus
            .iter()
            .map(|k| {
                let mut big = CMatrix::zeros(out_dim, self.dim_in);
                big.view_mut((offset, 0), (self.dim_out, self.dim_in))
                    .copy_from(&k.scale(scale));
                big
            })
            .collect()
    }
}

/// The identity channel on `d` levels.
pub fn identity(d: usize) -> KrausChannel {
    KrausChannel {
        dim_in: d,
        dim_out: d,
        kraus: vec![linalg::identity(d)],
    }
}

/// ρ ↦ (1 − p)ρ + p·I/d, realised with the d² Weyl operators XᵃZᵇ.
pub fn depolarizing(p: f64, d: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("depolarizing probability {p} outside [0, 1]")));
    }
    if d == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let d2 = (d * d) as f64;
    let mut kraus = vec![linalg::identity(d).scale((1.0 - p * (d2 - 1.0) / d2).sqrt())];
    if p > 0.0 {
        let w = (p / d2).sqrt();
        for a in 0..d {
            for b in 0..d {
                if a == 0 && b == 0 {
                    continue;
                }
                // X^a Z^b |j⟩ = ω^{bj} |j + a⟩
                let op = CMatrix::from_fn(d, d, |row, col| {
                    if row == (col + a) % d {
                        let phase = 2.0 * PI * (b * col) as f64 / d as f64;
                        c(w * phase.cos(), w * phase.sin())
                    } else {
                        c(0.0, 0.0)
                    }
                });
                kraus.push(op);
            }
        }
    }
    Ok(KrausChannel {
        dim_in: d,
        dim_out: d,
        kraus,
    })
}

/// Erasure channel ρ ↦ (1 − ε)ρ ⊕ ε·Tr(ρ)|e⟩⟨e| with the flag |e⟩ = |d⟩.
///
/// Kraus set: the embedding √(1−ε)·Σᵢ|i⟩⟨i| plus √ε·|e⟩⟨i| for each input level i.
pub fn erasure(eps: f64, d: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Parameter(format!("erasure probability {eps} outside [0, 1]")));
    }
    if d == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let mut kraus = Vec::with_capacity(d + 1);
    if eps < 1.0 {
        let keep = (1.0 - eps).sqrt();
        kraus.push(CMatrix::from_fn(d + 1, d, |r, col| {
            if r == col {
                c(keep, 0.0)
            } else {
                c(0.0, 0.0)
            }
        }));
    }
    if eps > 0.0 {
        let lose = eps.sqrt();
        for i in 0..d {
            let mut op = CMatrix::zeros(d + 1, d);
            op[(d, i)] = c(lose, 0.0);
            kraus.push(op);
        }
    }
    Ok(KrausChannel {
        dim_in: d,
        dim_out: d + 1,
        kraus,
    })
}

/// p·a ⊗ |0⟩⟨0| + (1 − p)·b ⊗ |1⟩⟨1|, with the flag realised as a
/// block-diagonal output: a's outputs occupy the first `a.dim_out()` levels,
/// b's the following `b.dim_out()`.
///
/// A branch with zero weight contributes no Kraus operators.
pub fn flagged_convex(p: f64, a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("mixing probability {p} outside [0, 1]")));
    }
    check_dim(a.dim_in, b.dim_in)?;
    let out = a.dim_out + b.dim_out;
    let mut kraus = Vec::new();
    if p > 0.0 {
        kraus.extend(a.embedded(p.sqrt(), out, 0));
    }
    if p < 1.0 {
        kraus.extend(b.embedded((1.0 - p).sqrt(), out, a.dim_out));
    }
    Ok(KrausChannel {
        dim_in: a.dim_in,
        dim_out: out,
        kraus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_kraus_set_is_equivalent() {
        let twice = depolarizing(0.3, 2).unwrap().tensor(&identity(1));
        let mut ops = twice.kraus().to_vec();
        ops.extend(depolarizing(0.3, 2).unwrap().kraus().iter().map(|k| k.scale(0.0)));
        let padded = KrausChannel::new(2, 2, ops).unwrap();
        let min = padded.minimal();
        assert_eq!(min.kraus().len(), 4);
        assert_eq!(erasure(0.5, 2).unwrap().tensor_power(2).minimal().kraus().len(), 9);
        let mut rng = crate::random::stream(5, 5);
        for _ in 0..5 {
            let rho = crate::random::mixed_state(&mut rng, 2);
            assert!(min.apply(&rho).unwrap().distance_max(&padded.apply(&rho).unwrap()) < 1e-13);
            let a = crate::qstate::von_neumann_entropy(&min.complementary().apply(&rho).unwrap());
            let b = crate::qstate::von_neumann_entropy(&padded.complementary().apply(&rho).unwrap());
            assert!((a - b).abs() < 1e-10);
        }
        let x = crate::random::mixed_state(&mut rng, 2);
        let y = crate::random::mixed_state(&mut rng, 2);
        let lhs = linalg::hs_inner(&min.apply_matrix(x.matrix()), y.matrix());
        let rhs = linalg::hs_inner(x.matrix(), &min.adjoint_matrix(y.matrix()));
        assert!((lhs - rhs).abs() < 1e-13);
    }
    use crate::qstate::{bloch_to_density, von_neumann_entropy, BlochVector};
    use crate::random;
    use rand::Rng;

    fn close(a: &DensityMatrix, b: &DensityMatrix, tol: f64) -> bool {
        a.distance_max(b) <= tol
    }

    #[test]
    fn apply_examples() {
        let mut rng = random::stream(1, 0);
        let rho = random::mixed_state(&mut rng, 2);
        assert!(close(&identity(2).apply(&rho).unwrap(), &rho, 1e-15));
        let full = depolarizing(1.0, 2).unwrap();
        assert!(close(&full.apply(&rho).unwrap(), &DensityMatrix::maximally_mixed(2), 1e-15));
        let half = depolarizing(0.5, 2).unwrap();
        let out = half.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(close(&out, &DensityMatrix::diagonal(&[0.75, 0.25]).unwrap(), 1e-15));
        assert!(matches!(half.apply(&DensityMatrix::maximally_mixed(3)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn qudit_depolarizing_is_valid() {
        let ch = depolarizing(0.3, 3).unwrap();
        assert!(ch.completeness_residual() < 1e-12);
        let out = ch.apply(&DensityMatrix::basis(3, 1)).unwrap();
        let want = DensityMatrix::diagonal(&[0.1, 0.8, 0.1]).unwrap();
        assert!(close(&out, &want, 1e-12));
        assert!(depolarizing(1.5, 2).is_err());
    }

    #[test]
    fn erasure_examples() {
        let mut rng = random::stream(2, 0);
        let rho = random::mixed_state(&mut rng, 2);
        let out = erasure(0.0, 2).unwrap().apply(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out.matrix()[(i, j)] - rho.matrix()[(i, j)]).norm() < 1e-15);
            }
        }
        assert!(out.matrix()[(2, 2)].norm() < 1e-15);
        let out = erasure(1.0, 2).unwrap().apply(&rho).unwrap();
        assert!(close(&out, &DensityMatrix::basis(3, 2), 1e-15));
        let out = erasure(0.5, 2).unwrap().apply(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(close(&out, &DensityMatrix::diagonal(&[0.25, 0.25, 0.5]).unwrap(), 1e-15));
        assert!(erasure(-0.1, 2).is_err());
    }

    #[test]
    fn complementary_of_identity_is_trivial() {
        let comp = identity(2).complementary();
        assert_eq!(comp.dim_out(), 1);
        let mut rng = random::stream(3, 0);
        for _ in 0..10 {
            let out = comp.apply(&random::mixed_state(&mut rng, 2)).unwrap();
            assert!(von_neumann_entropy(&out).abs() < 1e-12);
        }
    }

    /// Explicit isometry V = Σ_k N_k ⊗ |k⟩, then Tr_B(VρV†).
    fn environment_oracle(ch: &KrausChannel, rho: &DensityMatrix) -> CMatrix {
        let env = ch.dim_env();
        let mut v = CMatrix::zeros(ch.dim_out() * env, ch.dim_in());
        for (k, op) in ch.kraus().iter().enumerate() {
            for b in 0..ch.dim_out() {
                for a in 0..ch.dim_in() {
                    v[(b * env + k, a)] = op[(b, a)];
                }
            }
        }
        let joint = &v * rho.matrix() * v.adjoint();
        linalg::trace_out_first(&joint, ch.dim_out(), env)
    }

    #[test]
    fn complementary_matches_isometry_oracle() {
        let mut rng = random::stream(4, 0);
        for ch in [depolarizing(0.3, 2).unwrap(), erasure(0.25, 2).unwrap(), depolarizing(0.2, 3).unwrap()] {
            let comp = ch.complementary();
            assert!(comp.completeness_residual() < 1e-12);
            for _ in 0..5 {
                let rho = random::mixed_state(&mut rng, ch.dim_in());
                let want = environment_oracle(&ch, &rho);
                let got = comp.apply(&rho).unwrap();
                assert!(linalg::max_abs_diff(got.matrix(), &want) < 1e-12);
            }
        }
    }

    #[test]
    fn depolarizing_environment_entropy_at_maximally_mixed() {
        let p = 0.4;
        let ch = depolarizing(p, 2).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let env = ch.complementary().apply(&rho).unwrap();
        let oracle = environment_oracle(&ch, &rho);
        let want = crate::qstate::matrix_entropy(&oracle);
        assert!((von_neumann_entropy(&env) - want).abs() < 1e-12);
        let pauli = [1.0 - 3.0 * p / 4.0, p / 4.0, p / 4.0, p / 4.0];
        assert!((want - linalg::shannon_bits(&pauli)).abs() < 1e-12);
    }

    #[test]
    fn half_erasure_is_self_complementary_in_spectrum() {
        let ch = erasure(0.5, 2).unwrap();
        let comp = ch.complementary();
        let mut rng = random::stream(5, 0);
        for _ in 0..100 {
            let rho = random::mixed_state(&mut rng, 2);
            let sb = von_neumann_entropy(&ch.apply(&rho).unwrap());
            let se = von_neumann_entropy(&comp.apply(&rho).unwrap());
            assert!((sb - se).abs() < 1e-9);
        }
    }

    #[test]
    fn tensor_factorises_on_products() {
        let a = depolarizing(0.3, 2).unwrap();
        let b = erasure(0.4, 2).unwrap();
        let ab = a.tensor(&b);
        assert_eq!((ab.dim_in(), ab.dim_out(), ab.dim_env()), (4, 6, 4 * 3));
        assert!(ab.completeness_residual() < 1e-12);
        let mut rng = random::stream(6, 0);
        for _ in 0..20 {
            let r = random::mixed_state(&mut rng, 2);
            let t = random::mixed_state(&mut rng, 2);
            let lhs = ab.apply(&r.tensor(&t)).unwrap();
            let rhs = a.apply(&r).unwrap().tensor(&b.apply(&t).unwrap());
            assert!(close(&lhs, &rhs, 1e-12));
        }
        let idid = identity(2).tensor(&identity(2));
        assert!(linalg::max_abs_diff(&idid.kraus()[0], &linalg::identity(4)) < 1e-15);
    }

    #[test]
    fn complete_positivity_on_entangled_inputs() {
        let mut rng = random::stream(7, 0);
        for ch in [depolarizing(0.7, 2).unwrap(), erasure(0.5, 2).unwrap()] {
            let ext = ch.tensor(&identity(2));
            for _ in 0..20 {
                let rho = random::mixed_state(&mut rng, 4);
                let out = ext.apply(&rho).unwrap();
                assert!(out.min_eigenvalue() > -1e-12);
                assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flagged_convex_examples() {
        let a = depolarizing(0.2, 2).unwrap();
        let b = erasure(0.5, 2).unwrap();
        let mut rng = random::stream(8, 0);
        let rho = random::mixed_state(&mut rng, 2);

        let only_a = flagged_convex(1.0, &a, &b).unwrap();
        assert_eq!(only_a.dim_env(), a.dim_env());
        let out = only_a.apply(&rho).unwrap();
        let want = a.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(&out.matrix().view((0, 0), (2, 2)).into_owned(), want.matrix()) < 1e-15);

        let only_b = flagged_convex(0.0, &a, &b).unwrap();
        let out = only_b.apply(&rho).unwrap();
        let want = b.apply(&rho).unwrap();
        assert!(linalg::max_abs_diff(&out.matrix().view((2, 2), (3, 3)).into_owned(), want.matrix()) < 1e-15);

        let ids = flagged_convex(0.5, &identity(2), &identity(2)).unwrap();
        let out = ids.apply(&rho).unwrap();
        let flag_traced = linalg::trace_out_first(out.matrix(), 2, 2);
        assert!(linalg::max_abs_diff(&flag_traced, rho.matrix()) < 1e-15);

        assert!(flagged_convex(1.2, &a, &b).is_err());
        assert!(flagged_convex(0.5, &a, &identity(3)).is_err());
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = random::stream(9, 0);
        for _ in 0..50 {
            let p: f64 = rng.random_range(0.0..1.0);
            let ch = flagged_convex(p, &depolarizing(p, 2).unwrap(), &erasure(1.0 - p, 2).unwrap()).unwrap();
            assert!(ch.completeness_residual() < 1e-9);
            let out = ch.apply(&random::mixed_state(&mut rng, 2)).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let op = linalg::identity(2).scale(0.9);
        assert!(matches!(
            KrausChannel::new(2, 2, vec![op]),
            Err(Error::InvalidChannel { .. })
        ));
        assert!(matches!(
            KrausChannel::new(2, 3, vec![linalg::identity(2)]),
            Err(Error::MalformedChannel(_))
        ));
    }

    #[test]
    fn bloch_inputs_survive_channels() {
        let rho = bloch_to_density(BlochVector::new(0.0, 0.6, 0.0)).unwrap();
        let out = depolarizing(0.5, 2).unwrap().apply(&rho).unwrap();
        let v = crate::qstate::density_to_bloch(&out).unwrap();
        assert!((v.y - 0.3).abs() < 1e-15);
    }
}
