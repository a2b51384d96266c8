//! Logistic regression primitives: stable loss/gradient evaluation (plain and
//! per-sample weighted) and unconstrained training. This is the base learner
//! for every training mode in the crate.
//!
//! The loss is the negative log-likelihood Σᵢ log(1 + exp(−yᵢ·θᵀx̃ᵢ)) plus an
//! optional L2 term (l2/2)·‖θ_weights‖² that excludes the intercept. Loss and
//! gradient reductions run over fixed-size row chunks (see [`crate::exec`]),
//! so parallel and sequential builds agree bit for bit.

use crate::boundary::Boundary;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::solver::{self, SolverConfig};

/// Loss value and its gradient at one boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticLossState {
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Logistic sigmoid 1 / (1 + exp(−t)), stable in both tails.
#[inline]
pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// (softplus(t), sigmoid(t)) sharing a single exp — both appear together in
/// every loss and penalty term, and exp dominates the inner loops.
#[inline]
pub(crate) fn softplus_sigmoid(t: f64) -> (f64, f64) {
    if t >= 0.0 {
        let e = (-t).exp();
        (t + e.ln_1p(), 1.0 / (1.0 + e))
    } else {
        let e = t.exp();
        (e.ln_1p(), e / (1.0 + e))
    }
}

fn check_dims(b: &Boundary, data: &Dataset) -> Result<()> {
    if b.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim() + 1, got: b.theta().len() });
    }
    Ok(())
}

pub(crate) fn add_l2(state: &mut LogisticLossState, theta: &[f64], l2: f64) {
    if l2 == 0.0 {
        return;
    }
    let d = theta.len() - 1; // intercept excluded from the penalty
    let mut sq = 0.0;
    for (g, &t) in state.gradient[..d].iter_mut().zip(&theta[..d]) {
        sq += t * t;
        *g += l2 * t;
    }
    state.value += 0.5 * l2 * sq;
}

fn nll_chunked<W>(
    b: &Boundary,
    data: &Dataset,
    l2: f64,
    weight: W,
    parallel: bool,
) -> LogisticLossState
where
    W: Fn(usize) -> f64 + Sync,
{
    let dim = data.dim() + 1;
    let map = |range: std::ops::Range<usize>| {
        let mut value = 0.0;
        let mut gradient = vec![0.0; dim];
        for i in range {
            let x = data.row(i);
            let y = data.label(i) as f64;
            let w = weight(i);
            let t = b.signed_distance_unchecked(x);
            // d/dθ softplus(−y·θᵀx̃) = −y·σ(−y·t)·x̃
            let (sp, sg) = softplus_sigmoid(-y * t);
            value += w * sp;
            let coef = -w * y * sg;
            for (g, v) in gradient[..x.len()].iter_mut().zip(x) {
                *g += coef * v;
            }
            gradient[x.len()] += coef;
        }
        (value, gradient)
    };
    let reduce = |mut a: (f64, Vec<f64>), b: (f64, Vec<f64>)| {
        a.0 += b.0;
        exec::add_assign(&mut a.1, &b.1);
        a
    };
    let init = (0.0, vec![0.0; dim]);
    let (value, gradient) = if parallel {
        exec::fold_chunks(data.n(), init, map, reduce)
    } else {
        exec::fold_chunks_seq(data.n(), init, map, reduce)
    };
    let mut state = LogisticLossState { value, gradient };
    add_l2(&mut state, b.theta(), l2);
    state
}

/// Negative log-likelihood and gradient at `b`.
pub fn nll_and_grad(b: &Boundary, data: &Dataset, l2: f64) -> Result<LogisticLossState> {
    check_dims(b, data)?;
    if l2 < 0.0 {
        return Err(Error::InvalidInput("l2 must be nonnegative".into()));
    }
    Ok(nll_chunked(b, data, l2, |_| 1.0, true))
}

/// Sequential reference path for [`nll_and_grad`]; bit-identical to the
/// parallel path, kept public for parity tests and benches.
pub fn nll_and_grad_seq(b: &Boundary, data: &Dataset, l2: f64) -> Result<LogisticLossState> {
    check_dims(b, data)?;
    if l2 < 0.0 {
        return Err(Error::InvalidInput("l2 must be nonnegative".into()));
    }
    Ok(nll_chunked(b, data, l2, |_| 1.0, false))
}

/// Per-sample weighted negative log-likelihood; `weights ≡ 1` reduces to
/// [`nll_and_grad`].
pub fn weighted_nll_and_grad(
    b: &Boundary,
    data: &Dataset,
    weights: &[f64],
    l2: f64,
) -> Result<LogisticLossState> {
    check_dims(b, data)?;
    if weights.len() != data.n() {
        return Err(Error::DimensionMismatch { expected: data.n(), got: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative or non-finite weight {w}")));
    }
    if l2 < 0.0 {
        return Err(Error::InvalidInput("l2 must be nonnegative".into()));
    }
    Ok(nll_chunked(b, data, l2, |i| weights[i], true))
}

/// Per-row probability estimates P(y=1 | x) = σ(θᵀx̃), used as the score
/// input of the threshold post-processor.
pub fn sigmoid_scores(b: &Boundary, data: &Dataset) -> Result<Vec<f64>> {
    check_dims(b, data)?;
    Ok((0..data.n()).map(|i| sigmoid(b.signed_distance_unchecked(data.row(i)))).collect())
}

/// Result of an unconstrained fit.
#[derive(Debug, Clone)]
pub struct UnconstrainedFit {
    pub boundary: Boundary,
    /// Objective value after every accepted solver step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Train a plain logistic regression boundary (weights ≡ 1).
pub fn train_unconstrained(
    data: &Dataset,
    l2: f64,
    cfg: &SolverConfig,
) -> Result<UnconstrainedFit> {
    train_weighted(data, None, l2, cfg)
}

/// Train with optional per-sample weights; `None` means all ones.
pub fn train_weighted(
    data: &Dataset,
    weights: Option<&[f64]>,
    l2: f64,
    cfg: &SolverConfig,
) -> Result<UnconstrainedFit> {
    train_weighted_from(data, weights, l2, cfg, Boundary::zeros(data.dim()))
}

/// Same as [`train_weighted`], starting from a caller-provided boundary
/// (used for warm starts in iterative retraining loops).
pub fn train_weighted_from(
    data: &Dataset,
    weights: Option<&[f64]>,
    l2: f64,
    cfg: &SolverConfig,
    start: Boundary,
) -> Result<UnconstrainedFit> {
    if start.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim() + 1,
            got: start.theta().len(),
        });
    }
    // Validate weights/l2 once up front; the solver closure skips the checks.
    if let Some(w) = weights {
        weighted_nll_and_grad(&start, data, w, l2)?;
    } else {
        nll_and_grad(&start, data, l2)?;
    }
    let objective = |theta: &[f64]| {
        let b = Boundary::new_unchecked(theta.to_vec());
        let state = match weights {
            Some(w) => nll_chunked(&b, data, l2, |i| w[i], true),
            None => nll_chunked(&b, data, l2, |_| 1.0, true),
        };
        (state.value, state.gradient)
    };
    let out = solver::minimize(objective, start.theta().to_vec(), cfg)?;
    Ok(UnconstrainedFit {
        boundary: Boundary::new(out.x)?,
        trace: out.trace,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        converged: out.converged,
    })
}
