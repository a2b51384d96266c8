//! Deterministic smooth minimizer: L-BFGS with Armijo backtracking.
//!
//! The contract is the gradient-norm tolerance and the iteration cap, not the
//! method. Everything is plain f64 arithmetic in a fixed order, so repeated
//! runs on the same inputs are bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop when the Euclidean gradient norm falls at or below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 10_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// True when the gradient tolerance was reached (as opposed to hitting
    /// the iteration cap or a stalled line search).
    pub converged: bool,
    /// Objective value after every accepted step, starting point included.
    pub trace: Vec<f64>,
}

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
/// Stop after this many consecutive steps whose relative objective decrease
/// stays below [`STALL_DECREASE`]; grinding further cannot move the iterate
/// materially.
const STALL_PATIENCE: usize = 5;
const STALL_DECREASE: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimize a smooth objective from `x0`. `objective` returns the value and
/// gradient at a point. Errors if the objective is non-finite anywhere the
/// solver evaluates it.
pub fn minimize<F>(objective: F, x0: Vec<f64>, cfg: &SolverConfig) -> Result<SolveOutcome>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let dim = x0.len();
    let mut x = x0;
    let (mut f, mut g) = objective(&x);
    if !f.is_finite() || !g.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite loss at the starting point".into()));
    }
    let mut trace = vec![f];

    // L-BFGS history of (s, y, 1/yᵀs), newest last.
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(MEMORY);
    let mut iterations = 0;
    let mut stalled = 0usize;

    for iter in 0..cfg.max_iter {
        let gnorm = norm(&g);
        if gnorm <= cfg.tol {
            return Ok(SolveOutcome {
                x,
                value: f,
                grad_norm: gnorm,
                iterations,
                converged: true,
                trace,
            });
        }
        iterations = iter + 1;

        // Two-loop recursion for the search direction.
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        if !history.is_empty() {
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * dot(s, &dir);
                for (d, yi) in dir.iter_mut().zip(y) {
                    *d -= a * yi;
                }
                alphas.push(a);
            }
            let (s_last, y_last, _) = history.last().unwrap();
            let gamma = dot(s_last, y_last) / dot(y_last, y_last);
            if gamma.is_finite() && gamma > 0.0 {
                for d in dir.iter_mut() {
                    *d *= gamma;
                }
            }
            for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &dir);
                for (d, si) in dir.iter_mut().zip(s) {
                    *d += (a - b) * si;
                }
            }
        }

        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            // Not a descent direction; drop the curvature history and fall
            // back to steepest descent.
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }

        // Backtracking line search (Armijo).
        let mut step = if history.is_empty() { (1.0 / gnorm).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let (fc, gc) = objective(&cand);
            if !fc.is_finite() {
                step *= BACKTRACK;
                continue;
            }
            if fc <= f + ARMIJO_C1 * step * slope {
                accepted = Some((cand, fc, gc));
                break;
            }
            step *= BACKTRACK;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            // Line search stalled; report the best point found so far.
            return Ok(SolveOutcome {
                grad_norm: gnorm,
                converged: false,
                x,
                value: f,
                iterations,
                trace,
            });
        };
        if !g_new.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite gradient encountered".into()));
        }

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        if ys > 1e-12 * norm(&y) * norm(&s) {
            if history.len() == MEMORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / ys));
        }

        if f - f_new <= STALL_DECREASE * (1.0 + f.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }

        x = x_new;
        f = f_new;
        g = g_new;
        trace.push(f);
        debug_assert_eq!(x.len(), dim);

        if stalled >= STALL_PATIENCE {
            let gnorm = norm(&g);
            return Ok(SolveOutcome {
                converged: gnorm <= cfg.tol,
                x,
                value: f,
                grad_norm: gnorm,
                iterations,
                trace,
            });
        }
    }

    let gnorm = norm(&g);
    Ok(SolveOutcome {
        converged: gnorm <= cfg.tol,
        x,
        value: f,
        grad_norm: gnorm,
        iterations,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let out = minimize(
            |x| {
                let f = (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2);
                (f, vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)])
            },
            vec![0.0, 0.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 3.0).abs() < 1e-5);
        assert!((out.x[1] + 1.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock_converges() {
        let out = minimize(
            |x| {
                let (a, b) = (x[0], x[1]);
                let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
                let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
                (f, g)
            },
            vec![-1.2, 1.0],
            &SolverConfig { tol: 1e-8, max_iter: 2000 },
        )
        .unwrap();
        assert!(out.converged, "grad_norm={}", out.grad_norm);
        assert!((out.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn trace_is_monotone_nonincreasing() {
        let out = minimize(
            |x| ((x[0].powi(2) + 1.0).ln(), vec![2.0 * x[0] / (x[0].powi(2) + 1.0)]),
            vec![5.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = minimize(|_| (f64::NAN, vec![0.0]), vec![0.0], &SolverConfig::default());
        assert!(r.is_err());
    }
}
