//! Certificates for the approximation ratio of Lewis weights.
//!
//! With `g_lw` the normalized Lewis weights and `K*` the optimal Kirchhoff
//! index, `K(g_lw) / K* ≤ min(α₁, α₂)` where
//!
//! - `α₁ = 2 Tr L⁺ / (n-1)²` (at most the diameter),
//! - `α₂ = max_l ‖L⁺ b_l‖² / Tr L⁺` (at most the condition number).

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, WeightVector};
use crate::laplacian::LaplacianSystem;
use crate::lewis::{lewis_weights, LewisResult};
use crate::resistance::{effective_resistances, pinv_incidence_sq_norms};

/// Largest `n` for which the maximum pairwise resistance is computed exactly.
pub const EXACT_PAIRWISE_LIMIT: usize = 500;
/// Largest `n` accepted by [`sev_diagnostics`].
pub const SEV_LIMIT: usize = 400;

/// `2 Tr L⁺ / (n-1)²`. The weights of `sys` are taken as given; the value is
/// the AM-GM certificate only when they sum to one.
pub fn alpha1(sys: &LaplacianSystem) -> Result<f64> {
    let n1 = (sys.n() - 1) as f64;
    Ok(2.0 * sys.trace_pinv()? / (n1 * n1))
}

/// `max_l ‖L⁺ b_l‖² / Tr L⁺`.
pub fn alpha2(sys: &LaplacianSystem) -> Result<f64> {
    let s = pinv_incidence_sq_norms(sys)?;
    Ok(s.iter().copied().fold(0.0, f64::max) / sys.trace_pinv()?)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GradientIdentityReport {
    pub alpha2: f64,
    /// `‖-∇ log α₁‖_∞` by central differences over the edges not skipped.
    pub finite_difference: f64,
    pub rel_err: f64,
    /// Edges with `g_l < 10 h`, left out of the difference quotient.
    pub skipped: Vec<usize>,
    pub holds: bool,
}

/// Compares `α₂` with the sup norm of `-∇ log α₁`, the latter by central
/// differences with step `h = 1e-5`.
pub fn alpha2_gradient_identity(sys: &LaplacianSystem) -> Result<GradientIdentityReport> {
    const H: f64 = 1e-5;
    let graph = sys.graph();
    let g = sys.weights();
    let a2 = alpha2(sys)?;
    let opts = sys.options();
    let (skipped, probe): (Vec<usize>, Vec<usize>) = (0..graph.m()).partition(|&l| g[l] < 10.0 * H);
    let log_tr = |l: usize, d: f64| -> Result<f64> {
        let mut w = g.to_vec();
        w[l] += d;
        let s = LaplacianSystem::assemble_with(graph, &WeightVector(w), opts)?;
        Ok(s.trace_pinv()?.ln())
    };
    let fd: Vec<f64> = probe
        .par_iter()
        .map(|&l| Ok(-(log_tr(l, H)? - log_tr(l, -H)?) / (2.0 * H)))
        .collect::<Result<_>>()?;
    let finite_difference = fd.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rel_err = (finite_difference - a2).abs() / a2;
    Ok(GradientIdentityReport {
        alpha2: a2,
        finite_difference,
        rel_err,
        skipped,
        holds: rel_err <= 1e-3,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct MoharBounds {
    /// `2 / (n R̃_max)`.
    pub bound_pairwise: f64,
    /// `2 / (n D R_max)`.
    pub bound_diam: f64,
    /// `4 / (n Σ_l R_l)`.
    pub bound_sum: f64,
    /// Largest resistance over vertex pairs.
    pub r_pair_max: f64,
    /// `false` when `r_pair_max` comes from sampled pairs and is only a lower
    /// bound, which makes `bound_pairwise` unverified.
    pub r_pair_exact: bool,
    pub r_edge_max: f64,
    pub r_edge_sum: f64,
    pub diameter: usize,
}

impl MoharBounds {
    /// Whether every bound that is certified lies below `lambda2`.
    pub fn below(&self, lambda2: f64, slack: f64) -> bool {
        (!self.r_pair_exact || self.bound_pairwise <= lambda2 + slack)
            && self.bound_diam <= lambda2 + slack
            && self.bound_sum <= lambda2 + slack
    }
}

/// Weighted lower bounds on `λ₂(L_g)`.
pub fn mohar_bounds(sys: &LaplacianSystem) -> Result<MoharBounds> {
    mohar_bounds_seeded(sys, 0)
}

pub fn mohar_bounds_seeded(sys: &LaplacianSystem, seed: u64) -> Result<MoharBounds> {
    let graph = sys.graph();
    let n = graph.n();
    let r_edge = sys.edge_resistances()?;
    let r_edge_max = r_edge.iter().copied().fold(0.0, f64::max);
    let r_edge_sum: f64 = r_edge.iter().sum();
    let diameter = graph.diameter();
    let exact = n <= EXACT_PAIRWISE_LIMIT && sys.is_dense();
    let r_pair_max = if exact {
        let inv = sys.shifted_inverse()?;
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| inv[(i, i)] + inv[(j, j)] - 2.0 * inv[(i, j)])
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    } else {
        let pairs = sample_pairs(graph, 2000, seed);
        effective_resistances(sys, &pairs)?.into_iter().fold(0.0, f64::max)
    };
    let nf = n as f64;
    Ok(MoharBounds {
        bound_pairwise: 2.0 / (nf * r_pair_max),
        bound_diam: 2.0 / (nf * diameter as f64 * r_edge_max),
        bound_sum: 4.0 / (nf * r_edge_sum),
        r_pair_max,
        r_pair_exact: exact,
        r_edge_max,
        r_edge_sum,
        diameter,
    })
}

/// Random pairs plus the endpoints of a few BFS double sweeps.
fn sample_pairs(graph: &Graph, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count + 8);
    let mut start = 0;
    for _ in 0..4 {
        let d = graph.bfs(start);
        let a = argmax(&d);
        let d = graph.bfs(a);
        let b = argmax(&d);
        if a != b {
            pairs.push((a, b));
        }
        start = rng.gen_range(0..n);
    }
    while pairs.len() < count + 4 {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j {
            pairs.push((i, j));
        }
    }
    pairs
}

fn argmax(d: &[usize]) -> usize {
    d.iter()
        .enumerate()
        .filter(|(_, &x)| x != usize::MAX)
        .max_by_key(|(i, &x)| (x, std::cmp::Reverse(*i)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SevDiagnostics {
    /// `Tr exp(L⁺)`.
    pub value: f64,
    /// `∂/∂g_l Tr exp(L⁺) = -Tr[e^{L⁺} L⁺ b_l b_lᵀ L⁺]`.
    pub gradient: Vec<f64>,
    /// `Tr[e^{L⁺} L⁺ (I - b_l b_lᵀ L⁺)]`.
    pub optimality_residuals: Vec<f64>,
    /// `Tr[e^{L⁺} L⁺ (I - L_uni L⁺)]` with `L_uni` the uniform-weight
    /// Laplacian; nonnegative when the current weights beat uniform weights.
    pub lw_vs_uniform: f64,
    /// `Tr[e^{L⁺} L⁺]`, so that `gradient · g = -trace_exp_pinv`.
    pub trace_exp_pinv: f64,
}

/// Diagnostics for `f(g) = Tr exp(L_g⁺)` by a dense eigendecomposition.
pub fn sev_diagnostics(sys: &LaplacianSystem) -> Result<SevDiagnostics> {
    let n = sys.n();
    if n > SEV_LIMIT {
        return Err(Error::TooLarge { n, limit: SEV_LIMIT });
    }
    let p = sys.pinv_dense()?;
    let eig = p.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NoConvergence {
        what: "dense eigensolver",
        iterations: 0,
        residual: f64::NAN,
    })?;
    let lam: Vec<f64> = (0..n).map(|i| eig.S().column_vector()[i]).collect();
    let u = eig.U();
    let value: f64 = lam.iter().map(|l| l.exp()).sum();
    let trace_exp_pinv: f64 = lam.iter().map(|l| l * l.exp()).sum();
    // F = U diag(λ² e^λ) Uᵀ = L⁺ e^{L⁺} L⁺.
    let scale: Vec<f64> = lam.iter().map(|l| l * l * l.exp()).collect();
    let us = Mat::<f64>::from_fn(n, n, |i, k| u[(i, k)] * scale[k]);
    let f = &us * u.transpose();
    let gradient: Vec<f64> = sys
        .graph()
        .edges()
        .iter()
        .map(|&(a, b)| -(f[(a, a)] + f[(b, b)] - 2.0 * f[(a, b)]))
        .collect();
    let optimality_residuals: Vec<f64> = gradient.iter().map(|d| trace_exp_pinv + d).collect();
    let m = gradient.len() as f64;
    let lw_vs_uniform = trace_exp_pinv + gradient.iter().sum::<f64>() / m;
    Ok(SevDiagnostics {
        value,
        gradient,
        optimality_residuals,
        lw_vs_uniform,
        trace_exp_pinv,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundsReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_min: f64,
    pub diameter: usize,
    pub kappa: f64,
    pub mohar: MoharBounds,
    pub lambda2: f64,
    pub lambda_n: f64,
    /// `K(g_lw)`.
    pub kirchhoff: f64,
    pub n: usize,
    pub m: usize,
    pub eps: f64,
    pub lewis_iterations: usize,
    pub lewis_residual: f64,
    pub lewis_upper_residual: f64,
    pub converged: bool,
    /// `α₁ ≤ D (1 + 5 eps)`.
    pub alpha1_within_diameter: bool,
    /// `α₂ ≤ κ (1 + 1e-6)`.
    pub alpha2_within_kappa: bool,
}

/// Computes Lewis weights and every certificate at them. Fails if the
/// Lewis iteration does not converge.
pub fn bounds_report(graph: &Graph, eps: f64) -> Result<BoundsReport> {
    let lw = lewis_weights(graph, eps)?;
    if !lw.converged {
        return Err(Error::NoConvergence {
            what: "Lewis weight iteration",
            iterations: lw.iterations,
            residual: lw.upper_residual,
        });
    }
    bounds_at(graph, &lw, eps)
}

/// Certificates at a given Lewis result, converged or not.
pub fn bounds_at(graph: &Graph, lw: &LewisResult, eps: f64) -> Result<BoundsReport> {
    let sys = LaplacianSystem::assemble(graph, &lw.weights())?;
    let a1 = alpha1(&sys)?;
    let a2 = alpha2(&sys)?;
    let (lambda2, lambda_n) = sys.eig_extremes()?;
    let kappa = lambda_n / lambda2;
    let mohar = mohar_bounds(&sys)?;
    let diameter = mohar.diameter;
    let alpha1_within_diameter = a1 <= diameter as f64 * (1.0 + 5.0 * eps) + 1e-6;
    let alpha2_within_kappa = a2 <= kappa * (1.0 + 1e-6);
    if !alpha1_within_diameter {
        log::warn!("alpha1 = {a1} exceeds diameter {diameter}");
    }
    if !alpha2_within_kappa {
        log::warn!("alpha2 = {a2} exceeds kappa = {kappa}");
    }
    Ok(BoundsReport {
        alpha1: a1,
        alpha2: a2,
        alpha_min: a1.min(a2),
        diameter,
        kappa,
        mohar,
        lambda2,
        lambda_n,
        kirchhoff: sys.n() as f64 * sys.trace_pinv()?,
        n: graph.n(),
        m: graph.m(),
        eps,
        lewis_iterations: lw.iterations,
        lewis_residual: lw.residual,
        lewis_upper_residual: lw.upper_residual,
        converged: lw.converged,
        alpha1_within_diameter,
        alpha2_within_kappa,
    })
}
