//! Spectral thinness of weighted spanning trees.
//!
//! A spanning tree `T` with weights `w` is `γ`-thin when
//! `L_{T,w} ⪯ γ L_G`. Here `γ` is the top generalized eigenvalue of the
//! pair, i.e. the largest eigenvalue of `L_G⁺ L_{T,w}` on `𝟙⊥`.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, UnionFind, WeightVector};
use crate::laplacian::{center, dot, LaplacianSystem};
use crate::lewis::{lewis_weights, LewisResult};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ThinTreeReport {
    /// Edge ids of `G` forming the tree.
    pub tree_edges: Vec<usize>,
    pub tree_weights: Vec<f64>,
    pub gamma: f64,
    /// `(n - 1) / m`.
    pub bound: f64,
    /// `γ / ((n - 1) / m)`.
    pub ratio: f64,
    pub lewis_iterations: usize,
    pub lewis_residual: f64,
}

fn check_spanning(graph: &Graph, tree: &[usize], weights: &[f64]) -> Result<()> {
    let n = graph.n();
    if tree.len() != n - 1 || weights.len() != tree.len() {
        return Err(Error::Precondition(format!(
            "a spanning tree needs {} edges and as many weights, got {} and {}",
            n - 1,
            tree.len(),
            weights.len()
        )));
    }
    let mut uf = UnionFind::new(n);
    for &l in tree {
        if l >= graph.m() {
            return Err(Error::Precondition(format!("edge id {l} out of range")));
        }
        let (u, v) = graph.edge(l);
        if !uf.union(u, v) {
            return Err(Error::Precondition("tree edges contain a cycle".into()));
        }
    }
    if let Some((edge, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::BadWeight { edge, value });
    }
    Ok(())
}

/// `γ = max_{x ⟂ 𝟙} xᵀ L_{T,w} x / xᵀ L_G x` with `L_G` unweighted.
///
/// Power iteration on `L_G⁺ L_{T,w}`; for graphs on the dense back end the
/// exact generalized eigenvalue is used if the iteration stalls.
pub fn thinness(graph: &Graph, tree: &[usize], weights: &[f64]) -> Result<f64> {
    check_spanning(graph, tree, weights)?;
    let n = graph.n();
    let sys = LaplacianSystem::assemble(graph, &WeightVector::ones(graph.m()))?;
    let tree_apply = |x: &[f64]| {
        let mut y = vec![0.0; n];
        for (&l, &w) in tree.iter().zip(weights) {
            let (u, v) = graph.edge(l);
            let d = w * (x[u] - x[v]);
            y[u] += d;
            y[v] -= d;
        }
        y
    };
    let cap = (10 * n).max(2000);
    let mut rng = ChaCha8Rng::seed_from_u64(0x7415_7ee5);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    center(&mut x);
    let mut prev = f64::NAN;
    for _ in 0..cap {
        let y = sys.pinv_apply(&tree_apply(&x))?;
        let s = dot(&y, &y).sqrt();
        x = y.into_iter().map(|v| v / s).collect();
        let (lt, lg) = (tree_apply(&x), sys.laplacian_apply(&x));
        let theta = dot(&x, &lt) / dot(&x, &lg);
        let r: f64 = lt.iter().zip(&lg).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        if r <= 1e-8 * theta * dot(&lg, &lg).sqrt() || (theta - prev).abs() <= 1e-14 * theta {
            return Ok(theta);
        }
        prev = theta;
    }
    if sys.is_dense() {
        log::debug!("thinness: falling back to dense generalized eigenvalues");
        return dense_thinness(graph, tree, weights, &sys);
    }
    Err(Error::NoConvergence {
        what: "thinness power iteration",
        iterations: cap,
        residual: f64::NAN,
    })
}

/// `λ_max(M^{-1/2} L_T M^{-1/2})` with `M = L_G + 𝟙𝟙ᵀ/n`.
fn dense_thinness(graph: &Graph, tree: &[usize], weights: &[f64], sys: &LaplacianSystem) -> Result<f64> {
    let n = graph.n();
    let inv = sys.shifted_inverse()?;
    let err = |_| Error::NoConvergence {
        what: "dense eigensolver",
        iterations: 0,
        residual: f64::NAN,
    };
    let e = inv.self_adjoint_eigen(Side::Lower).map_err(err)?;
    let s: Vec<f64> = (0..n).map(|i| e.S().column_vector()[i].max(0.0).sqrt()).collect();
    let u = e.U();
    let us = Mat::<f64>::from_fn(n, n, |i, k| u[(i, k)] * s[k]);
    let half = &us * u.transpose();
    let mut lt = Mat::<f64>::zeros(n, n);
    for (&l, &w) in tree.iter().zip(weights) {
        let (a, b) = graph.edge(l);
        lt[(a, a)] += w;
        lt[(b, b)] += w;
        lt[(a, b)] -= w;
        lt[(b, a)] -= w;
    }
    let c = &half * &lt * &half;
    let ev = c.self_adjoint_eigenvalues(Side::Lower).map_err(err)?;
    Ok(ev[n - 1])
}

/// Maximum spanning tree under `score`, ties broken by edge id.
pub fn max_spanning_tree(graph: &Graph, score: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..graph.m()).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut uf = UnionFind::new(graph.n());
    let mut tree: Vec<usize> = order
        .into_iter()
        .filter(|&l| {
            let (u, v) = graph.edge(l);
            uf.union(u, v)
        })
        .collect();
    tree.sort_unstable();
    tree
}

/// Lewis weights, then the maximum-weight spanning tree under them with
/// every tree edge weighted `(n - 1) / m`.
pub fn lw_thin_tree(graph: &Graph, eps: f64) -> Result<ThinTreeReport> {
    let lw = lewis_weights(graph, eps)?;
    thin_tree_from(graph, &lw)
}

pub fn thin_tree_from(graph: &Graph, lw: &LewisResult) -> Result<ThinTreeReport> {
    let tree_edges = max_spanning_tree(graph, &lw.w_inf);
    let bound = (graph.n() - 1) as f64 / graph.m() as f64;
    let tree_weights = vec![bound; tree_edges.len()];
    let gamma = thinness(graph, &tree_edges, &tree_weights)?;
    Ok(ThinTreeReport {
        tree_edges,
        tree_weights,
        gamma,
        bound,
        ratio: gamma / bound,
        lewis_iterations: lw.iterations,
        lewis_residual: lw.residual,
    })
}
