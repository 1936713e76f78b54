//! Holevo quantities, coherent and private information, and lower-bound
//! estimators for single-use and two-use capacities.
//!
//! All capacity estimators return lower bounds: they report the best value
//! found by a local search, never a certified maximum.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::ball::minimax_ball;
use crate::channels::KrausChannel;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::optim::{self, best_index};
use crate::qstate::{matrix_entropy, mix, DensityMatrix, Ensemble};
use crate::random;

/// Values this close to zero are reported as exactly zero; the zero
/// ensemble value is always achievable.
const SNAP_ZERO: f64 = 1e-12;

/// Largest relative gap between an ensemble value and the enclosing-ball
/// radius of its outputs that still counts as agreement.
pub const BALL_AGREEMENT: f64 = 5e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Ensemble size; `None` picks the estimator's default.
    pub ensemble_size: Option<usize>,
    /// Stop a local search once it improves by less than this.
    pub tol: f64,
    pub seed: u64,
    /// Objective evaluations allowed per restart.
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            ensemble_size: None,
            tol: 1e-10,
            seed: 0,
            max_evals: 50_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Parameter("restarts must be >= 1".into()));
        }
        if self.ensemble_size == Some(0) {
            return Err(Error::Parameter("ensemble_size must be >= 1".into()));
        }
        if !(self.tol >= 0.0) || self.max_evals == 0 {
            return Err(Error::Parameter("tol must be >= 0 and max_evals >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct CapacityResult {
    /// Best value found, in bits.
    pub value: f64,
    /// The ensemble achieving `value`. Single-input quantities report the
    /// eigen-ensemble of the optimal input.
    pub ensemble: Ensemble,
    pub converged: bool,
    /// Objective evaluations spent.
    pub iterations: usize,
}

impl CapacityResult {
    fn new(value: f64, ensemble: Ensemble, converged: bool, iterations: usize) -> Self {
        Self {
            value: if value.abs() < SNAP_ZERO { 0.0 } else { value },
            ensemble,
            converged,
            iterations,
        }
    }

    /// The average input state of the achieving ensemble.
    pub fn average_input(&self) -> DensityMatrix {
        mix(&self.ensemble)
    }
}

/// S(N(σ̄)) − Σ pᵢ S(N(ρᵢ)) with σ̄ the ensemble average.
pub fn holevo_quantity(ch: &KrausChannel, e: &Ensemble) -> Result<f64> {
    check_dim(ch.dim_in(), e.dim())?;
    let mats: Vec<&CMatrix> = e.states().iter().map(|s| s.matrix()).collect();
    Ok(holevo_raw(ch, e.probs(), &mats))
}

fn holevo_raw(ch: &KrausChannel, probs: &[f64], states: &[&CMatrix]) -> f64 {
    let d = ch.dim_out();
    let mut avg = CMatrix::zeros(d, d);
    let mut conditional = 0.0;
    for (p, s) in probs.iter().zip(states) {
        let out = ch.apply_matrix(s);
        if *p > 0.0 {
            conditional += p * matrix_entropy(&out);
        }
        avg += out.scale(*p);
    }
    matrix_entropy(&avg) - conditional
}

/// S(N(ρ)) − S(N^c(ρ)); may be negative.
pub fn coherent_information(ch: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    check_dim(ch.dim_in(), rho.dim())?;
    Ok(Legs::new(ch).coherent(rho.matrix()))
}

/// χ(N, e) − χ(N^c, e).
pub fn holevo_difference(ch: &KrausChannel, e: &Ensemble) -> Result<f64> {
    Ok(holevo_quantity(ch, e)? - holevo_quantity(&ch.complementary(), e)?)
}

/// I(X:B) − I(X:E) for a classical-input ensemble of arbitrary states.
///
/// Numerically the same functional as [`holevo_difference`].
pub fn private_info(ch: &KrausChannel, e: &Ensemble) -> Result<f64> {
    holevo_difference(ch, e)
}

/// Arithmetic mean of per-use radii.
pub fn superball_radius(radii: &[f64]) -> Result<f64> {
    if radii.is_empty() {
        return Err(Error::Empty("radius list"));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::Parameter(format!("radius {r} is negative")));
    }
    Ok(radii.iter().sum::<f64>() / radii.len() as f64)
}

/// Channel together with its complementary, both with minimal Kraus sets.
struct Legs {
    main: KrausChannel,
    env: KrausChannel,
}

impl Legs {
    fn new(ch: &KrausChannel) -> Self {
        let main = ch.minimal();
        let env = main.complementary();
        Self { main, env }
    }

    fn coherent(&self, rho: &CMatrix) -> f64 {
        matrix_entropy(&self.main.apply_matrix(rho)) - matrix_entropy(&self.env.apply_matrix(rho))
    }

    /// Gradient (natural-log units) of the coherent information at ρ:
    /// N^c†(ln N^c(ρ)) − N†(ln N(ρ)).
    fn coherent_gradient(&self, rho: &CMatrix) -> CMatrix {
        let ln = |m: &CMatrix| linalg::hermitian_map(m, |x| x.max(1e-300).ln());
        self.env.adjoint_matrix(&ln(&self.env.apply_matrix(rho)))
            - self.main.adjoint_matrix(&ln(&self.main.apply_matrix(rho)))
    }
}

/// Monotone exponentiated-gradient ascent of the coherent information:
/// ρ ← exp(ln ρ + ηG)/Tr with an adaptive step.
fn coherent_ascent(legs: &Legs, start: &CMatrix, tol: f64, max_evals: usize) -> (CMatrix, f64, usize, bool) {
    let d = start.nrows();
    // Keep the start strictly positive so that ln ρ exists.
    let mut rho = linalg::hermitize(&(start.scale(1.0 - 1e-9) + linalg::identity(d).scale(1e-9 / d as f64)));
    let mut value = legs.coherent(&rho);
    let mut evals = 1;
    let mut eta = 1.0;
    let mut quiet = 0;
    while evals < max_evals {
        let grad = legs.coherent_gradient(&rho);
        let log_rho = linalg::hermitian_map(&rho, |x| x.max(1e-300).ln());
        let mut accepted = None;
        while evals < max_evals && eta > 1e-14 {
            let cand = linalg::hermitian_map(&(&log_rho + grad.scale(eta)), f64::exp);
            let cand = linalg::hermitize(&cand.unscale(cand.trace().re));
            let v = legs.coherent(&cand);
            evals += 1;
            if v > value {
                accepted = Some((cand, v));
                break;
            }
            eta *= 0.25;
        }
        match accepted {
            Some((cand, v)) => {
                quiet = if v - value <= tol { quiet + 1 } else { 0 };
                rho = cand;
                value = v;
                eta = (eta * 2.0).min(1e6);
                if quiet >= 5 {
                    return (rho, value, evals, true);
                }
            }
            None => return (rho, value, evals, eta <= 1e-14),
        }
    }
    (rho, value, evals, false)
}

fn random_input<R: Rng>(rng: &mut R, d: usize, kind: usize) -> CMatrix {
    let mm = linalg::identity(d).unscale(d as f64);
    if kind % 2 == 1 {
        random::pure_state(rng, d).matrix().scale(0.8) + mm.scale(0.2)
    } else {
        random::mixed_state(rng, d).into_matrix()
    }
}

fn eigen_ensemble(rho: &CMatrix) -> Ensemble {
    let (vals, vecs) = linalg::eigh(rho);
    let mut states = Vec::new();
    let mut probs = Vec::new();
    for (i, v) in vals.iter().enumerate().rev() {
        if *v > 1e-14 {
            let col: Vec<_> = vecs.column(i).iter().copied().collect();
            states.push(DensityMatrix::pure(&col).expect("unit eigenvector"));
            probs.push(*v);
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ensemble::new(states, probs).expect("eigen-ensemble is valid")
}

/// Multi-start maximisation of the coherent information over inputs.
///
/// Restart 0 starts at I/d; `seeds` add further fixed starts ahead of the
/// random ones. The achiever is reported as the eigen-ensemble of the best
/// input.
pub fn max_coherent_information(ch: &KrausChannel, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    coherent_search(ch, cfg, &[])
}

/// [`max_coherent_information`] with extra fixed starting inputs.
pub fn max_coherent_information_from(
    ch: &KrausChannel,
    cfg: &OptimizerConfig,
    seeds: &[CMatrix],
) -> Result<CapacityResult> {
    coherent_search(ch, cfg, seeds)
}

fn coherent_search(ch: &KrausChannel, cfg: &OptimizerConfig, seeds: &[CMatrix]) -> Result<CapacityResult> {
    cfg.validate()?;
    let d = ch.dim_in();
    for s in seeds {
        check_dim(d, s.nrows())?;
    }
    let legs = Legs::new(ch);
    let mut starts = vec![linalg::identity(d).unscale(d as f64)];
    starts.extend(seeds.iter().cloned());
    for r in starts.len()..cfg.restarts.max(starts.len()) {
        starts.push(random_input(&mut random::stream(cfg.seed, r as u64), d, r));
    }
    starts.truncate(cfg.restarts.max(1 + seeds.len()));
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| coherent_ascent(&legs, s, cfg.tol, cfg.max_evals))
        .collect();
    let best = best_index(runs.iter().map(|r| r.1)).expect("at least one restart");
    let evals = runs.iter().map(|r| r.2).sum();
    let (rho, value, _, converged) = &runs[best];
    Ok(CapacityResult::new(*value, eigen_ensemble(rho), *converged, evals))
}

/// Lower bound on the single-use quantum capacity: the larger of the best
/// coherent information over inputs and the best χ(N) − χ(N^c) over
/// pure-state ensembles.
///
/// For a pure-state ensemble with average σ̄ the difference of Holevo
/// quantities equals the coherent information of σ̄, so both legs share
/// one search and the achiever is the eigen-ensemble of the best input.
pub fn quantum_capacity_lb(ch: &KrausChannel, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    coherent_search(ch, cfg, &[])
}

/// Maximises the Holevo quantity over ensembles of pure states
/// (default size dim_in²), then re-weights the achieved outputs with the
/// enclosing-ball weights. `converged` requires the local searches to stop
/// on tolerance and the value to match the ball radius of the achieved
/// outputs within [`BALL_AGREEMENT`].
pub fn holevo_capacity(ch: &KrausChannel, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    let d = ch.dim_in();
    let m = cfg.ensemble_size.unwrap_or(d * d);
    let codec = EnsembleCodec { dim: d, size: m, mixed: false };
    let f = |x: &[f64]| {
        let (probs, states) = codec.decode(x);
        let refs: Vec<&CMatrix> = states.iter().collect();
        holevo_raw(ch, &probs, &refs)
    };
    let mut starts = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let mut rng = random::stream(cfg.seed, r as u64);
        starts.push(if r == 0 { codec.basis_start(&mut rng) } else { codec.random_start(&mut rng) });
    }
    let runs = optim::multistart_max(&f, &starts, 0.3, cfg.tol, cfg.max_evals);
    let evals = runs.iter().map(|r| r.evals).sum();
    // Each restart is polished separately so the max merge stays monotone
    // in the number of restarts.
    let polished = runs
        .par_iter()
        .map(|run| {
            let (probs, states) = codec.decode(&run.x);
            let mut ensemble = codec.ensemble(probs, states);
            let mut value = run.value;
            let outputs = ensemble
                .states()
                .iter()
                .map(|s| ch.apply(s))
                .collect::<Result<Vec<_>>>()?;
            let ball = minimax_ball(&outputs, 1e-9, 4000)?;
            if ball.lower_bound > value {
                let reweighted = Ensemble::new(ensemble.states().to_vec(), normalised(&ball.weights))?;
                let v = holevo_quantity(ch, &reweighted)?;
                if v > value {
                    value = v;
                    ensemble = reweighted;
                }
            }
            let agrees = (ball.radius - value).abs() <= BALL_AGREEMENT;
            Ok((value, ensemble, run.converged && agrees))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = best_index(polished.iter().map(|p| p.0)).expect("at least one restart");
    let (value, ensemble, converged) = polished.into_iter().nth(best).expect("index in range");
    Ok(CapacityResult::new(value, ensemble, converged, evals))
}

/// Lower bound on the single-use private capacity: χ(N) − χ(N^c) over
/// ensembles of mixed states (default size dim_in), started from the
/// eigen-ensemble of the best coherent input so it never falls below
/// [`max_coherent_information`].
pub fn private_capacity_lb(ch: &KrausChannel, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    let coherent = coherent_search(ch, cfg, &[])?;
    let d = ch.dim_in();
    let m = cfg.ensemble_size.unwrap_or(d);
    let codec = EnsembleCodec { dim: d, size: m, mixed: true };
    let legs = Legs::new(ch);
    let f = |x: &[f64]| {
        let (probs, states) = codec.decode(x);
        let refs: Vec<&CMatrix> = states.iter().collect();
        holevo_raw(&legs.main, &probs, &refs) - holevo_raw(&legs.env, &probs, &refs)
    };
    let mut starts = vec![codec.encode(&coherent.ensemble)];
    for r in 1..cfg.restarts {
        starts.push(codec.random_start(&mut random::stream(cfg.seed ^ 0x5052_4956, r as u64)));
    }
    let runs = optim::multistart_max(&f, &starts, 0.2, cfg.tol, cfg.max_evals);
    let best = best_index(runs.iter().map(|r| r.value)).expect("at least one restart");
    let evals = coherent.iterations + runs.iter().map(|r| r.evals).sum::<usize>();
    if runs[best].value <= coherent.value {
        return Ok(CapacityResult { iterations: evals, ..coherent });
    }
    let (probs, states) = codec.decode(&runs[best].x);
    Ok(CapacityResult::new(
        runs[best].value,
        codec.ensemble(probs, states),
        runs[best].converged,
        evals,
    ))
}

/// (1/n)·quantum_capacity_lb(N^{⊗n}) for n ∈ {1, 2}.
///
/// The two-use search also starts from ρ₁⊗ρ₁ built from the single-use
/// achiever, so its value is never below the single-use value.
pub fn finite_n_capacity(ch: &KrausChannel, n: usize, cfg: &OptimizerConfig) -> Result<CapacityResult> {
    match n {
        1 => quantum_capacity_lb(ch, cfg),
        2 => {
            if ch.dim_in() > 4 {
                return Err(Error::Size(format!(
                    "two-use search is limited to dim_in <= 4 (got {})",
                    ch.dim_in()
                )));
            }
            let one = quantum_capacity_lb(ch, cfg)?;
            let rho1 = one.average_input().into_matrix();
            let seed = linalg::kron(&rho1, &rho1);
            let two = coherent_search(&ch.tensor_power(2), cfg, &[seed])?;
            Ok(CapacityResult::new(
                two.value / 2.0,
                two.ensemble,
                two.converged,
                one.iterations + two.iterations,
            ))
        }
        _ => Err(Error::Unsupported(format!(
            "n = {n}: only n in {{1, 2}} is computable; larger n and the n → ∞ limit are out of reach"
        ))),
    }
}

fn normalised(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Unconstrained real parameters ↔ ensembles: per state either 2d reals
/// (pure amplitudes) or 2d² reals (A with ρ = AA†/Tr), followed by one
/// softmax logit per state.
struct EnsembleCodec {
    dim: usize,
    size: usize,
    mixed: bool,
}

impl EnsembleCodec {
    fn per_state(&self) -> usize {
        if self.mixed {
            2 * self.dim * self.dim
        } else {
            2 * self.dim
        }
    }

    fn len(&self) -> usize {
        self.size * (self.per_state() + 1)
    }

    fn decode(&self, x: &[f64]) -> (Vec<f64>, Vec<CMatrix>) {
        let d = self.dim;
        let k = self.per_state();
        let states = (0..self.size)
            .map(|i| {
                let block = &x[i * k..(i + 1) * k];
                if self.mixed {
                    let a = CMatrix::from_fn(d, d, |r, col| c(block[2 * (r * d + col)], block[2 * (r * d + col) + 1]));
                    let m = &a * a.adjoint();
                    let tr = m.trace().re;
                    if tr < 1e-300 {
                        linalg::identity(d).unscale(d as f64)
                    } else {
                        linalg::hermitize(&m.unscale(tr))
                    }
                } else {
                    let v = nalgebra::DVector::from_fn(d, |r, _| c(block[2 * r], block[2 * r + 1]));
                    let norm = v.norm();
                    if norm < 1e-300 {
                        linalg::identity(d).unscale(d as f64)
                    } else {
                        let v = v.unscale(norm);
                        &v * v.adjoint()
                    }
                }
            })
            .collect();
        let logits = &x[self.size * k..];
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        (normalised(&exps), states)
    }

    fn ensemble(&self, probs: Vec<f64>, states: Vec<CMatrix>) -> Ensemble {
        Ensemble::new(states.into_iter().map(DensityMatrix::from_trusted).collect(), probs)
            .expect("decoded ensemble is valid")
    }

    /// Encodes up to `size` members of `e`; missing slots get negligible weight.
    fn encode(&self, e: &Ensemble) -> Vec<f64> {
        let d = self.dim;
        let mut x = vec![0.0; self.len()];
        let k = self.per_state();
        for i in 0..self.size {
            let block = &mut x[i * k..(i + 1) * k];
            let (state, logit) = match e.states().get(i) {
                Some(s) => (s.matrix().clone(), e.probs()[i].max(1e-12).ln()),
                None => (linalg::identity(d).unscale(d as f64), 1e-12f64.ln()),
            };
            if self.mixed {
                let root = linalg::hermitian_map(&state, |v| v.max(0.0).sqrt());
                for r in 0..d {
                    for col in 0..d {
                        block[2 * (r * d + col)] = root[(r, col)].re;
                        block[2 * (r * d + col) + 1] = root[(r, col)].im;
                    }
                }
            } else {
                let (vals, vecs) = linalg::eigh(&state);
                for r in 0..d {
                    block[2 * r] = vecs[(r, d - 1)].re;
                    block[2 * r + 1] = vecs[(r, d - 1)].im;
                }
                let _ = vals;
            }
            x[self.size * k + i] = logit;
        }
        x
    }

    fn random_start<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    /// Computational basis states with equal weight, the remaining slots
    /// random with small weight.
    fn basis_start<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = self.random_start(rng);
        let k = self.per_state();
        for i in 0..self.size.min(self.dim) {
            let block = &mut x[i * k..(i + 1) * k];
            block.iter_mut().for_each(|v| *v = 0.0);
            if self.mixed {
                block[2 * (i * self.dim + i)] = 1.0;
            } else {
                block[2 * i] = 1.0;
            }
        }
        for i in 0..self.size {
            x[self.size * k + i] = if i < self.dim { 0.0 } else { -4.0 };
        }
        x
    }
}
