//! Derivative-free local search and multi-start driver.

use rayon::prelude::*;

/// Result of one local search.
#[derive(Clone, Debug)]
pub struct Local {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Stopped on tolerance rather than budget.
    pub converged: bool,
}

/// Nelder–Mead minimisation with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½).
///
/// When the simplex collapses (value spread ≤ `tol`) the search is
/// restarted once around the best vertex; if that restart improves by no
/// more than `tol` the run counts as converged.
pub fn nelder_mead<F>(f: &F, x0: &[f64], step: f64, tol: f64, max_evals: usize) -> Local
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let counter = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        counter.set(counter.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let n = x0.len();
    let mut best_x = x0.to_vec();
    let mut best = eval(x0);
    if n == 0 {
        return Local {
            x: best_x,
            value: best,
            evals: 1,
            converged: true,
        };
    }

    let mut last_round = f64::INFINITY;
    loop {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((best_x.clone(), best));
        for i in 0..n {
            let mut v = best_x.clone();
            v[i] += step;
            let fv = eval(&v);
            simplex.push((v, fv));
        }
        let mut collapsed = false;
        while counter.get() < max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if simplex[n].1 - simplex[0].1 <= tol {
                collapsed = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for (v, _) in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let towards = |t: f64, worst: &[f64]| -> Vec<f64> {
                centroid.iter().zip(worst).map(|(c, w)| c + t * (w - c)).collect()
            };
            let worst = simplex[n].0.clone();
            let reflected = towards(-1.0, &worst);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = towards(-2.0, &worst);
                let fe = eval(&expanded);
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let (contracted, fc) = if fr < simplex[n].1 {
                    let c = towards(-0.5, &worst);
                    let fc = eval(&c);
                    (c, fc)
                } else {
                    let c = towards(0.5, &worst);
                    let fc = eval(&c);
                    (c, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for (v, fv) in simplex.iter_mut().skip(1) {
                        for (x, a) in v.iter_mut().zip(&anchor) {
                            *x = a + 0.5 * (*x - a);
                        }
                        *fv = eval(v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let round_best = simplex[0].1;
        if round_best < best {
            best = round_best;
            best_x = simplex[0].0.clone();
        }
        if !collapsed || counter.get() >= max_evals {
            return Local {
                x: best_x,
                value: best,
                evals: counter.get(),
                converged: collapsed && last_round - best <= tol,
            };
        }
        if last_round - best <= tol {
            return Local {
                x: best_x,
                value: best,
                evals: counter.get(),
                converged: true,
            };
        }
        last_round = best;
    }
}

/// Maximises `f` from each start independently (in parallel) and returns
/// every local result in start order.
pub fn multistart_max<F>(f: &F, starts: &[Vec<f64>], step: f64, tol: f64, max_evals: usize) -> Vec<Local>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    starts
        .par_iter()
        .map(|x0| {
            let neg = |x: &[f64]| -f(x);
            let mut r = nelder_mead(&neg, x0, step, tol, max_evals);
            r.value = -r.value;
            r
        })
        .collect()
}

/// Index of the largest value; the earliest index wins ties.
pub fn best_index(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|b| b.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn minimises_quadratic() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum::<f64>();
        let r = nelder_mead(&f, &[5.0, 5.0, 5.0, 5.0], 0.5, 1e-14, 20_000);
        assert!(r.converged);
        for (i, v) in r.x.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-5, "{:?}", r.x);
        }
    }

    #[test]
    fn minimises_rosenbrock() {
        let r = nelder_mead(&rosenbrock, &[-1.2, 1.0], 0.1, 1e-16, 20_000);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn budget_is_respected() {
        let r = nelder_mead(&rosenbrock, &[-1.2, 1.0], 0.1, 0.0, 50);
        assert!(!r.converged);
        assert!(r.evals <= 50 + 3);
    }

    #[test]
    fn multistart_keeps_order_and_finds_global() {
        // Two peaks; the higher sits at x = 3.
        let f = |x: &[f64]| (-(x[0] + 2.0).powi(2)).exp() + 2.0 * (-(x[0] - 3.0).powi(2)).exp();
        let starts = vec![vec![-2.5], vec![2.0], vec![-1.0]];
        let runs = multistart_max(&f, &starts, 0.3, 1e-14, 2000);
        let i = best_index(runs.iter().map(|r| r.value)).unwrap();
        assert_eq!(i, 1);
        assert!((runs[1].x[0] - 3.0).abs() < 1e-4);
        assert!(runs[0].x[0] < 0.0);
    }

    #[test]
    fn best_index_prefers_first() {
        assert_eq!(best_index([1.0, 3.0, 3.0]), Some(1));
        assert_eq!(best_index(Vec::<f64>::new()), None);
    }
}
