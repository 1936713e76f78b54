//! Smallest enclosing relative-entropy balls.
//!
//! The ball of a finite set {ρᵢ} is the pair (σ*, r*) with
//! r* = min_σ maxᵢ D(ρᵢ‖σ); the center sits in the second divergence slot.
//! For this orientation the optimal center is the mixture Σ wᵢρᵢ of the
//! inputs, and for any weights w the Holevo value Σ wᵢ D(ρᵢ‖Σ wⱼρⱼ) is a
//! lower bound on r*. The solver tracks both bounds and stops on their gap.

use crate::error::{check_dim, Error, Result};
use crate::linalg::CMatrix;
use crate::qstate::{
    bloch_to_density, density_to_bloch, BlochVector, DensityMatrix, PreparedCenter, PreparedState,
};

/// States attaining the radius within this slack are reported as support.
pub const SUPPORT_TOL: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct InfoBall {
    pub center: DensityMatrix,
    /// max_i D(ρᵢ‖center), in bits.
    pub radius: f64,
    /// Holevo lower bound Σ wᵢ D(ρᵢ‖center) certified by the mixture weights.
    pub lower_bound: f64,
    /// Mixture weights of the inputs that produce `center`.
    pub weights: Vec<f64>,
    pub support: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    /// Radius after each farthest-point step.
    pub radius_trace: Vec<f64>,
}

impl InfoBall {
    pub fn gap(&self) -> f64 {
        self.radius - self.lower_bound
    }
}

/// Index and distance of the input farthest from `center` (smallest index on ties).
pub fn farthest_point(center: &DensityMatrix, states: &[DensityMatrix]) -> Result<(usize, f64)> {
    if states.is_empty() {
        return Err(Error::Empty("state list"));
    }
    let prepared = PreparedCenter::new(center.clone());
    let mut best = (0, f64::NEG_INFINITY);
    for (i, s) in states.iter().enumerate() {
        check_dim(center.dim(), s.dim())?;
        let d = prepared.divergence(&PreparedState::new(s.clone()));
        if d > best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}

struct Evaluation {
    center: DensityMatrix,
    distances: Vec<f64>,
    radius: f64,
    lower: f64,
}

fn evaluate(prepared: &[PreparedState], weights: &[f64]) -> Evaluation {
    let d = prepared[0].state().dim();
    let mut acc = CMatrix::zeros(d, d);
    for (p, w) in prepared.iter().zip(weights) {
        if *w > 0.0 {
            acc += p.state().matrix().scale(*w);
        }
    }
    let center = PreparedCenter::new(DensityMatrix::from_trusted(acc));
    let distances: Vec<f64> = prepared.iter().map(|p| center.divergence(p)).collect();
    let radius = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = distances
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(d, w)| d * w)
        .sum();
    Evaluation {
        center: center.state().clone(),
        distances,
        radius,
        lower,
    }
}

/// Smallest enclosing ball of `states`.
///
/// Runs farthest-point steps c ← (1 − η)c + η·ρ_far with η = 1/(t+1) from
/// the arithmetic mean, then refines the mixture weights multiplicatively
/// (wᵢ ← wᵢ·2^{D(ρᵢ‖c)}, normalised) until `radius − lower_bound < tol`.
/// When `max_iter` runs out the best iterate is returned with
/// `converged = false`.
pub fn minimax_ball(states: &[DensityMatrix], tol: f64, max_iter: usize) -> Result<InfoBall> {
    if states.is_empty() {
        return Err(Error::Empty("state list"));
    }
    let dim = states[0].dim();
    for s in states {
        check_dim(dim, s.dim())?;
    }
    let n = states.len();
    let prepared: Vec<PreparedState> = states.iter().cloned().map(PreparedState::new).collect();

    let mut weights = vec![1.0 / n as f64; n];
    let mut eval = evaluate(&prepared, &weights);
    let mut best = (eval.radius, eval.lower, weights.clone(), eval.center.clone());
    let mut trace = vec![eval.radius];
    let mut iterations = 0;

    let farthest_budget = max_iter / 2;
    while iterations < farthest_budget && best.0 - best.1.max(eval.lower) > tol {
        iterations += 1;
        let far = argmax(&eval.distances);
        let eta = 1.0 / (iterations as f64 + 1.0);
        for w in weights.iter_mut() {
            *w *= 1.0 - eta;
        }
        weights[far] += eta;
        eval = evaluate(&prepared, &weights);
        trace.push(eval.radius);
        if eval.radius < best.0 {
            best = (eval.radius, best.1.max(eval.lower), weights.clone(), eval.center.clone());
        } else {
            best.1 = best.1.max(eval.lower);
        }
    }

    // Multiplicative refinement starting from the best farthest-point mixture.
    weights = best.2.clone();
    eval = evaluate(&prepared, &weights);
    while iterations < max_iter && best.0 - best.1 > tol {
        iterations += 1;
        let top = eval.distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (w, d) in weights.iter_mut().zip(&eval.distances) {
            *w *= (d - top).exp2();
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        eval = evaluate(&prepared, &weights);
        best.1 = best.1.max(eval.lower);
        if eval.radius < best.0 {
            best = (eval.radius, best.1, weights.clone(), eval.center.clone());
        }
    }

    let (radius, lower_bound, weights, center) = best;
    let final_eval = evaluate(&prepared, &weights);
    let support = final_eval
        .distances
        .iter()
        .enumerate()
        .filter(|(_, d)| **d >= radius - SUPPORT_TOL)
        .map(|(i, _)| i)
        .collect();
    Ok(InfoBall {
        center,
        radius,
        lower_bound,
        weights,
        support,
        converged: radius - lower_bound <= tol,
        iterations,
        radius_trace: trace,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Qubit state equidistant (in relative entropy, center in the second
/// slot) from three qubit states, searched inside their affine hull.
///
/// Returns the center and the common distance.
pub fn circumcenter3(
    a: &DensityMatrix,
    b: &DensityMatrix,
    c: &DensityMatrix,
) -> Result<(DensityMatrix, f64)> {
    let pa = density_to_bloch(a)?.to_array();
    let pb = density_to_bloch(b)?.to_array();
    let pc = density_to_bloch(c)?.to_array();
    let spread = [pb, pc]
        .iter()
        .flat_map(|p| (0..3).map(move |i| (p[i] - pa[i]).abs()))
        .fold(0.0, f64::max);
    if spread < 1e-12 {
        return Ok((a.clone(), 0.0));
    }
    for s in [a, b, c] {
        if !s.is_full_rank() {
            return Err(Error::Singular("circumcenter needs full-rank states".into()));
        }
    }
    let u = sub(pb, pa);
    let v = sub(pc, pa);
    if norm(cross(u, v)) < 1e-12 {
        return Err(Error::Degenerate("states are collinear in the Bloch ball".into()));
    }
    let point = |s: f64, t: f64| -> [f64; 3] {
        [0, 1, 2].map(|i| pa[i] + s * u[i] + t * v[i])
    };
    let dist = |p: [f64; 3], x: [f64; 3]| {
        crate::qstate::qubit_divergence(BlochVector::from_array(p), BlochVector::from_array(x))
    };
    let residual = |s: f64, t: f64| -> Option<[f64; 2]> {
        let x = point(s, t);
        if norm(x) >= 1.0 - 1e-9 {
            return None;
        }
        let da = dist(pa, x);
        Some([da - dist(pb, x), da - dist(pc, x)])
    };

    let starts = [(1.0 / 3.0, 1.0 / 3.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)];
    for &(s0, t0) in &starts {
        if let Some((s, t)) = newton2(&residual, s0, t0) {
            let x = point(s, t);
            let center = bloch_to_density(BlochVector::from_array(x))?;
            let r = dist(pa, x);
            return Ok((center, r));
        }
    }
    Err(Error::Degenerate(
        "no equidistant state inside the open Bloch ball".into(),
    ))
}

fn newton2(f: &impl Fn(f64, f64) -> Option<[f64; 2]>, mut s: f64, mut t: f64) -> Option<(f64, f64)> {
    let mut fx = f(s, t)?;
    for _ in 0..100 {
        let size = fx[0].abs().max(fx[1].abs());
        if size < 1e-13 {
            return Some((s, t));
        }
        let h = 1e-7;
        let ds = f(s + h, t).zip(f(s - h, t))?;
        let dt = f(s, t + h).zip(f(s, t - h))?;
        let j = [
            [(ds.0[0] - ds.1[0]) / (2.0 * h), (dt.0[0] - dt.1[0]) / (2.0 * h)],
            [(ds.0[1] - ds.1[1]) / (2.0 * h), (dt.0[1] - dt.1[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let step_s = (j[1][1] * fx[0] - j[0][1] * fx[1]) / det;
        let step_t = (-j[1][0] * fx[0] + j[0][0] * fx[1]) / det;
        let mut lambda = 1.0;
        loop {
            let (ns, nt) = (s - lambda * step_s, t - lambda * step_t);
            if let Some(nf) = f(ns, nt) {
                if nf[0].abs().max(nf[1].abs()) < size || lambda < 1e-6 {
                    s = ns;
                    t = nt;
                    fx = nf;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return None;
            }
        }
    }
    (fx[0].abs().max(fx[1].abs()) < 1e-10).then_some((s, t))
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}
