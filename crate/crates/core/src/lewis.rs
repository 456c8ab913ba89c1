//! ℓ∞-Lewis weights of the edge-incidence matrix.
//!
//! The weights `w` are the fixed point of `w_l = τ_l(W^{1/2} Bᵀ)`, where
//! `τ` are leverage scores. For a graph that means every edge has effective
//! resistance exactly `1/w_l`. The iteration multiplies each weight by its
//! current effective resistance and averages the iterates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, WeightVector};
use crate::laplacian::{LaplacianSystem, SolverOptions};

/// Weights are floored here so the shifted Laplacian stays positive definite.
pub const WEIGHT_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
pub struct LewisOptions {
    pub eps: f64,
    /// Iteration budget constant: `T = ceil(C / eps · ln max(m/n, 2))`.
    pub c: f64,
    /// Evaluate the residual of the running average every this many
    /// iterations (always at the first and the last).
    pub check_every: usize,
    pub solver: SolverOptions,
}

impl Default for LewisOptions {
    fn default() -> Self {
        LewisOptions {
            eps: 0.01,
            c: 4.0,
            check_every: 10,
            solver: SolverOptions::default(),
        }
    }
}

impl LewisOptions {
    pub fn with_eps(eps: f64) -> Self {
        LewisOptions {
            eps,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LewisResult {
    /// Unnormalized weights, summing to `n - 1`.
    pub w_inf: Vec<f64>,
    /// `w_inf / (n - 1)`, summing to one.
    pub g_lw: Vec<f64>,
    pub iterations: usize,
    /// Iteration budget `T`.
    pub budget: usize,
    /// `max_l |τ_l / w_l - 1|` at the returned weights.
    pub residual: f64,
    /// `max_l τ_l / w_l - 1`, the one-sided violation.
    pub upper_residual: f64,
    pub converged: bool,
    /// Number of times an iterate entry was raised to the floor.
    pub floor_hits: usize,
}

impl LewisResult {
    pub fn weights(&self) -> WeightVector {
        WeightVector(self.g_lw.clone())
    }
}

/// `T = ceil(C / eps · ln max(m/n, 2))`.
pub fn iteration_budget(n: usize, m: usize, eps: f64, c: f64) -> usize {
    let ratio = (m as f64 / n as f64).max(2.0);
    ((c / eps) * ratio.ln()).ceil().max(1.0) as usize
}

pub fn lewis_weights(graph: &Graph, eps: f64) -> Result<LewisResult> {
    lewis_weights_with(graph, &LewisOptions::with_eps(eps))
}

/// Runs the averaged fixed-point iteration.
///
/// Stops early once the two-sided residual of the running average is at most
/// `eps`. The result is flagged `converged` when the one-sided residual is at
/// most `eps`. A result that is not converged is still returned.
pub fn lewis_weights_with(graph: &Graph, opts: &LewisOptions) -> Result<LewisResult> {
    if !(opts.eps > 0.0 && opts.eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {}", opts.eps)));
    }
    if opts.c <= 0.0 {
        return Err(Error::InvalidParams(format!("iteration constant must be positive, got {}", opts.c)));
    }
    let (n, m) = (graph.n(), graph.m());
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let budget = iteration_budget(n, m, opts.eps, opts.c);
    let check_every = opts.check_every.max(1);
    let rank = (n - 1) as f64;

    let mut w = vec![rank / m as f64; m];
    let mut sum = vec![0.0; m];
    let mut floor_hits = 0;
    let mut last = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;

    for t in 1..=budget {
        sum.iter_mut().zip(&w).for_each(|(s, x)| *s += x);
        iterations = t;
        if t == 1 || t % check_every == 0 || t == budget {
            let avg: Vec<f64> = sum.iter().map(|s| s / t as f64).collect();
            last = residuals(graph, &avg, opts.solver)?;
            log::trace!("lewis: t = {t}, residual = {:.3e}, upper = {:.3e}", last.0, last.1);
            if last.0 <= opts.eps {
                break;
            }
        }
        if t == budget {
            break;
        }
        let sys = LaplacianSystem::assemble_with(graph, &WeightVector(w.clone()), opts.solver)?;
        let r = sys.edge_resistances()?;
        for (x, r) in w.iter_mut().zip(r) {
            *x *= r;
            if *x < WEIGHT_FLOOR {
                *x = WEIGHT_FLOOR;
                floor_hits += 1;
            }
        }
    }

    if floor_hits > 0 {
        log::debug!("lewis: {floor_hits} iterate entries hit the weight floor");
    }
    let total: f64 = sum.iter().sum();
    let w_inf: Vec<f64> = sum.iter().map(|s| s * rank / total).collect();
    let g_lw: Vec<f64> = w_inf.iter().map(|x| x / rank).collect();
    let (residual, upper_residual) = last;
    let converged = upper_residual <= opts.eps;
    if !converged {
        log::warn!(
            "lewis: residual {upper_residual:.3e} above eps = {} after {iterations} iterations",
            opts.eps
        );
    }
    Ok(LewisResult {
        w_inf,
        g_lw,
        iterations,
        budget,
        residual,
        upper_residual,
        converged,
        floor_hits,
    })
}

/// `(max_l |τ_l/w_l - 1|, max_l τ_l/w_l - 1)`. Both are invariant under
/// rescaling `w`.
fn residuals(graph: &Graph, w: &[f64], solver: SolverOptions) -> Result<(f64, f64)> {
    let sys = LaplacianSystem::assemble_with(graph, &WeightVector(w.to_vec()), solver)?;
    let tau = sys.leverage_scores()?;
    let mut two = 0.0f64;
    let mut up = f64::NEG_INFINITY;
    for (t, x) in tau.iter().zip(w) {
        let q = t / x - 1.0;
        two = two.max(q.abs());
        up = up.max(q);
    }
    Ok((two, up))
}

/// `max_l |τ_l(W^{1/2} Bᵀ) / w_l - 1|`.
pub fn fixed_point_residual(graph: &Graph, w: &[f64]) -> Result<f64> {
    if w.len() != graph.m() {
        return Err(Error::WeightLength {
            expected: graph.m(),
            got: w.len(),
        });
    }
    if let Some((edge, &value)) = w.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x.is_finite())) {
        return Err(Error::BadWeight { edge, value });
    }
    Ok(residuals(graph, w, SolverOptions::default())?.0)
}
