//! Weighted Laplacians and their pseudo-inverse.
//!
//! `L_g = Σ_l g_l b_l b_lᵀ` is singular along `𝟙`. Every solve here goes
//! through the shifted matrix `M = L_g + (1/n)𝟙𝟙ᵀ`, which is positive
//! definite when the weight support is connected and satisfies
//! `M⁻¹ = L_g⁺ + (1/n)𝟙𝟙ᵀ`. On vectors orthogonal to `𝟙` the two inverses
//! agree, and `Tr L_g⁺ = Tr M⁻¹ - 1`.
//!
//! Two back ends: a dense Cholesky factorization for `n ≤ dense_threshold`,
//! and Jacobi-preconditioned conjugate gradients above it.

use std::sync::OnceLock;

use faer::linalg::solvers::{DenseSolveCore, Llt, Solve};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{components_of, Graph, WeightVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Dense up to `dense_threshold` vertices, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub backend: Backend,
    pub dense_threshold: usize,
    /// Relative residual target for conjugate gradients on `M`.
    pub cg_tol: f64,
    /// Iteration cap for conjugate gradients; `0` means `10·n + 1000`.
    pub cg_max_iter: usize,
    /// Relative accuracy for the extreme eigenvalues.
    pub eig_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            backend: Backend::Auto,
            dense_threshold: 2000,
            cg_tol: 1e-11,
            cg_max_iter: 0,
            eig_tol: 1e-8,
        }
    }
}

enum Factor {
    Dense {
        llt: Llt<f64>,
        inverse: OnceLock<Mat<f64>>,
    },
    Iterative {
        /// Diagonal of `M`, used as the preconditioner.
        diag: Vec<f64>,
    },
}

/// A weighted Laplacian together with a factorization of its shifted form.
pub struct LaplacianSystem<'g> {
    graph: &'g Graph,
    weights: Vec<f64>,
    factor: Factor,
    opts: SolverOptions,
    trace: OnceLock<f64>,
}

impl std::fmt::Debug for LaplacianSystem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaplacianSystem")
            .field("n", &self.graph.n())
            .field("m", &self.graph.m())
            .field("dense", &self.is_dense())
            .finish()
    }
}

impl<'g> LaplacianSystem<'g> {
    pub fn assemble(graph: &'g Graph, g: &WeightVector) -> Result<Self> {
        Self::assemble_with(graph, g, SolverOptions::default())
    }

    pub fn assemble_with(graph: &'g Graph, g: &WeightVector, opts: SolverOptions) -> Result<Self> {
        g.validate(graph.m())?;
        let support = graph
            .edges()
            .iter()
            .zip(g.as_slice())
            .filter(|(_, &w)| w > 0.0)
            .map(|(&e, _)| e);
        let comps = components_of(graph.n(), support);
        if comps.len() > 1 {
            return Err(Error::DisconnectedSupport { components: comps });
        }

        let n = graph.n();
        let dense = match opts.backend {
            Backend::Dense => true,
            Backend::Iterative => false,
            Backend::Auto => n <= opts.dense_threshold,
        };
        let weights = g.as_slice().to_vec();
        let factor = if dense {
            let shift = 1.0 / n as f64;
            let mut m = Mat::<f64>::from_fn(n, n, |_, _| shift);
            for (&(u, v), &w) in graph.edges().iter().zip(&weights) {
                m[(u, u)] += w;
                m[(v, v)] += w;
                m[(u, v)] -= w;
                m[(v, u)] -= w;
            }
            let llt = m.llt(Side::Lower).map_err(|_| Error::Singular)?;
            Factor::Dense {
                llt,
                inverse: OnceLock::new(),
            }
        } else {
            let mut diag = vec![1.0 / n as f64; n];
            for (&(u, v), &w) in graph.edges().iter().zip(&weights) {
                diag[u] += w;
                diag[v] += w;
            }
            Factor::Iterative { diag }
        };
        Ok(LaplacianSystem {
            graph,
            weights,
            factor,
            opts,
            trace: OnceLock::new(),
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.factor, Factor::Dense { .. })
    }

    pub fn options(&self) -> SolverOptions {
        self.opts
    }

    /// `L_g x`.
    pub fn laplacian_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (&(u, v), &w) in self.graph.edges().iter().zip(&self.weights) {
            let d = w * (x[u] - x[v]);
            y[u] += d;
            y[v] -= d;
        }
        y
    }

    fn shifted_apply(&self, x: &[f64]) -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let mut y = self.laplacian_apply(x);
        y.iter_mut().for_each(|v| *v += mean);
        y
    }

    /// `M⁻¹ z` without any projection.
    fn solve_shifted(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.factor {
            Factor::Dense { llt, .. } => {
                let rhs = Mat::<f64>::from_fn(z.len(), 1, |i, _| z[i]);
                let x = llt.solve(&rhs);
                Ok((0..z.len()).map(|i| x[(i, 0)]).collect())
            }
            Factor::Iterative { diag } => self.pcg(z, diag),
        }
    }

    fn pcg(&self, b: &[f64], diag: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let max_iter = if self.opts.cg_max_iter == 0 {
            10 * n + 1000
        } else {
            self.opts.cg_max_iter
        };
        let bnorm = norm(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..max_iter {
            let ap = self.shifted_apply(&p);
            let alpha = rz / dot(&p, &ap);
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= self.opts.cg_tol * bnorm {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::NoConvergence {
            what: "conjugate gradients",
            iterations: max_iter,
            residual: norm(&r) / bnorm,
        })
    }

    /// `L_g⁺ z`. The mean of `z` is projected out first (with a warning when
    /// it is not negligible), so the result is orthogonal to `𝟙`.
    pub fn pinv_apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(z.len(), self.n(), "vector length must equal n");
        let mut z = z.to_vec();
        let mean = center(&mut z);
        let scale = norm(&z).max(f64::MIN_POSITIVE);
        if mean.abs() * (z.len() as f64).sqrt() > 1e-9 * scale {
            log::warn!("pinv_apply: right-hand side has mean {mean:.3e}; projected onto 𝟙⊥");
        }
        let mut x = self.solve_shifted(&z)?;
        center(&mut x);
        Ok(x)
    }

    /// `L_g⁺` applied to many right-hand sides, in parallel.
    pub fn pinv_apply_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rhs.par_iter().map(|z| self.pinv_apply(z)).collect()
    }

    /// `‖L_g x - z‖ / ‖z‖` after projecting `z` onto `𝟙⊥`.
    pub fn relative_residual(&self, x: &[f64], z: &[f64]) -> f64 {
        let mut z = z.to_vec();
        center(&mut z);
        let lx = self.laplacian_apply(x);
        let r: Vec<f64> = lx.iter().zip(&z).map(|(a, b)| a - b).collect();
        norm(&r) / norm(&z)
    }

    /// The dense inverse `M⁻¹ = L⁺ + (1/n)𝟙𝟙ᵀ` (dense back end only).
    pub fn shifted_inverse(&self) -> Result<&Mat<f64>> {
        match &self.factor {
            Factor::Dense { llt, inverse } => Ok(inverse.get_or_init(|| llt.inverse())),
            Factor::Iterative { .. } => Err(Error::Unsupported("dense inverse")),
        }
    }

    /// Dense `L_g⁺` (dense back end only).
    pub fn pinv_dense(&self) -> Result<Mat<f64>> {
        let inv = self.shifted_inverse()?;
        let shift = 1.0 / self.n() as f64;
        Ok(Mat::from_fn(self.n(), self.n(), |i, j| inv[(i, j)] - shift))
    }

    /// Effective resistance `b_lᵀ L_g⁺ b_l` of every edge.
    pub fn edge_resistances(&self) -> Result<Vec<f64>> {
        let edges = self.graph.edges();
        match &self.factor {
            Factor::Dense { .. } => {
                let inv = self.shifted_inverse()?;
                Ok(edges
                    .iter()
                    .map(|&(u, v)| inv[(u, u)] + inv[(v, v)] - 2.0 * inv[(u, v)])
                    .collect())
            }
            Factor::Iterative { .. } => edges
                .par_iter()
                .enumerate()
                .map(|(l, _)| {
                    let x = self.pinv_apply(&self.graph.incidence_vector(l))?;
                    Ok(self.graph.incidence_dot(l, &x))
                })
                .collect(),
        }
    }

    /// Leverage scores `τ_l = g_l · b_lᵀ L_g⁺ b_l` of the rows of `W^{1/2} Bᵀ`.
    pub fn leverage_scores(&self) -> Result<Vec<f64>> {
        Ok(self
            .edge_resistances()?
            .into_iter()
            .zip(&self.weights)
            .map(|(r, w)| w * r)
            .collect())
    }

    /// `Tr L_g⁺`.
    pub fn trace_pinv(&self) -> Result<f64> {
        if let Some(&t) = self.trace.get() {
            return Ok(t);
        }
        let n = self.n();
        let tr_m_inv = match &self.factor {
            Factor::Dense { .. } => {
                let inv = self.shifted_inverse()?;
                (0..n).map(|i| inv[(i, i)]).sum::<f64>()
            }
            Factor::Iterative { .. } => {
                let diag: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        self.solve_shifted(&e).map(|x| x[i])
                    })
                    .collect::<Result<_>>()?;
                diag.iter().sum()
            }
        };
        let t = tr_m_inv - 1.0;
        let _ = self.trace.set(t);
        Ok(t)
    }

    /// `log det(L_g⁺ + (1/n)𝟙𝟙ᵀ) = -log det M` (dense back end only).
    pub fn logdet_pinv(&self) -> Result<f64> {
        match &self.factor {
            Factor::Dense { llt, .. } => {
                let l = llt.L();
                Ok(-2.0 * (0..self.n()).map(|i| l[(i, i)].ln()).sum::<f64>())
            }
            Factor::Iterative { .. } => Err(Error::Unsupported("log-determinant")),
        }
    }

    /// `(λ₂, λ_n)`: smallest nonzero and largest eigenvalue of `L_g`.
    ///
    /// Power iteration on `L_g` for `λ_n`, inverse iteration on `M` restricted
    /// to `𝟙⊥` for `λ₂`. With the dense back end a full eigendecomposition is
    /// used if either iteration stalls.
    pub fn eig_extremes(&self) -> Result<(f64, f64)> {
        let n = self.n();
        if n == 2 {
            let l = 2.0 * self.weights[0];
            return Ok((l, l));
        }
        let cap = (10 * n).max(2000);
        let top = rayleigh_iteration(n, cap, self.opts.eig_tol, |x| Ok(self.laplacian_apply(x)), |x| {
            self.laplacian_apply(x)
        });
        let bottom = rayleigh_iteration(n, cap, self.opts.eig_tol, |x| self.pinv_apply(x), |x| {
            self.laplacian_apply(x)
        });
        match (top, bottom) {
            (Ok(hi), Ok(lo)) => Ok((lo, hi)),
            (a, b) if self.is_dense() => {
                log::debug!("eig_extremes: falling back to dense eigendecomposition");
                let (lo, hi) = self.dense_extremes()?;
                Ok((b.unwrap_or(lo), a.unwrap_or(hi)))
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    }

    /// All eigenvalues of `L_g`, ascending (dense back end only).
    pub fn laplacian_spectrum(&self) -> Result<Vec<f64>> {
        if !self.is_dense() {
            return Err(Error::Unsupported("dense spectrum"));
        }
        let n = self.n();
        let mut l = Mat::<f64>::zeros(n, n);
        for (&(u, v), &w) in self.graph.edges().iter().zip(&self.weights) {
            l[(u, u)] += w;
            l[(v, v)] += w;
            l[(u, v)] -= w;
            l[(v, u)] -= w;
        }
        l.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| Error::NoConvergence {
                what: "dense eigensolver",
                iterations: 0,
                residual: f64::NAN,
            })
    }

    fn dense_extremes(&self) -> Result<(f64, f64)> {
        let s = self.laplacian_spectrum()?;
        Ok((s[1], s[s.len() - 1]))
    }
}

/// Iterates `x ← op(x)/‖op(x)‖` on `𝟙⊥` and returns the Rayleigh quotient
/// `xᵀ L x / xᵀ x`, where `lap` applies `L`. Stops when the eigen-residual
/// `‖Lx − θx‖ ≤ tol·θ` or the quotient has stopped moving.
fn rayleigh_iteration(
    n: usize,
    cap: usize,
    tol: f64,
    op: impl Fn(&[f64]) -> Result<Vec<f64>>,
    lap: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a9c);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    center(&mut x);
    normalize(&mut x);
    let mut theta_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..cap {
        let mut y = op(&x)?;
        center(&mut y);
        normalize(&mut y);
        x = y;
        let lx = lap(&x);
        let theta = dot(&x, &lx);
        residual = lx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * theta.abs() || (theta - theta_prev).abs() <= 1e-14 * theta.abs() {
            return Ok(theta);
        }
        theta_prev = theta;
    }
    Err(Error::NoConvergence {
        what: "eigenvalue iteration",
        iterations: cap,
        residual,
    })
}

/// Leverage scores of `W^{1/2} Bᵀ` for weights `g`.
pub fn leverage_scores(graph: &Graph, g: &WeightVector) -> Result<Vec<f64>> {
    LaplacianSystem::assemble(graph, g)?.leverage_scores()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) {
    let s = norm(a);
    if s > 0.0 {
        a.iter_mut().for_each(|v| *v /= s);
    }
}

/// Subtracts the mean in place and returns it.
pub(crate) fn center(a: &mut [f64]) -> f64 {
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    a.iter_mut().for_each(|v| *v -= mean);
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, Family};

    fn tri() -> Graph {
        generate(&Family::Complete { n: 3 }, 0).unwrap()
    }
    fn p3() -> Graph {
        generate(&Family::Path { n: 3 }, 0).unwrap()
    }
    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn triangle_spectrum_and_trace() {
        let g = tri();
        let s = LaplacianSystem::assemble(&g, &WeightVector::uniform(3)).unwrap();
        let (l2, ln) = s.eig_extremes().unwrap();
        assert!(close(l2, 1.0, 1e-8) && close(ln, 1.0, 1e-8));
        assert!(close(s.trace_pinv().unwrap(), 2.0, 1e-12));
        let z = g.incidence_vector(0);
        let x = s.pinv_apply(&z).unwrap();
        assert!(close(dot(&z, &x), 2.0, 1e-12));
    }

    #[test]
    fn path_three() {
        let g = p3();
        let s = LaplacianSystem::assemble(&g, &WeightVector(vec![0.5, 0.5])).unwrap();
        // spectrum {0, 1/2, 3/2}
        assert!(close(s.trace_pinv().unwrap(), 8.0 / 3.0, 1e-12));
        let (l2, ln) = s.eig_extremes().unwrap();
        assert!(close(l2, 0.5, 1e-8) && close(ln, 1.5, 1e-8));
        let z = g.pair_vector(0, 2);
        let x = s.pinv_apply(&z).unwrap();
        assert!(close(dot(&z, &x), 4.0, 1e-12));
        let tr_l: f64 = 2.0 * s.weights().iter().sum::<f64>();
        assert!(close(tr_l, 2.0, 1e-15));
    }

    #[test]
    fn ones_map_to_zero() {
        let g = tri();
        let s = LaplacianSystem::assemble(&g, &WeightVector::uniform(3)).unwrap();
        let x = s.pinv_apply(&[1.0, 1.0, 1.0]).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn complete_graph_trace() {
        for n in [4usize, 7, 12] {
            let g = generate(&Family::Complete { n }, 0).unwrap();
            let s = LaplacianSystem::assemble(&g, &WeightVector::uniform(g.m())).unwrap();
            let expect = ((n - 1) * (n - 1)) as f64 / 2.0;
            assert!(close(s.trace_pinv().unwrap(), expect, 1e-12));
        }
    }

    #[test]
    fn k4_leverage_scores() {
        let g = generate(&Family::Complete { n: 4 }, 0).unwrap();
        let tau = leverage_scores(&g, &WeightVector::uniform(6)).unwrap();
        assert!(tau.iter().all(|t| close(*t, 0.5, 1e-12)));
        let g = tri();
        let tau = leverage_scores(&g, &WeightVector::uniform(3)).unwrap();
        assert!(tau.iter().all(|t| close(*t, 2.0 / 3.0, 1e-12)));
    }

    #[test]
    fn tree_leverage_is_one() {
        let g = generate(&Family::Bowtie { t: 3, p: 4, s: 2 }, 0).unwrap();
        let w: Vec<f64> = (0..g.m()).map(|l| 0.1 + l as f64).collect();
        let tau = leverage_scores(&g, &WeightVector(w)).unwrap();
        assert!(tau.iter().all(|t| close(*t, 1.0, 1e-10)));
    }

    #[test]
    fn disconnected_support_is_reported() {
        let g = p3();
        let err = LaplacianSystem::assemble(&g, &WeightVector(vec![1.0, 0.0])).unwrap_err();
        match err {
            Error::DisconnectedSupport { components } => {
                assert_eq!(components, vec![vec![0, 1], vec![2]]);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let g = generate(&Family::Grid { w: 6, h: 5 }, 0).unwrap();
        let w: Vec<f64> = (0..g.m()).map(|l| 0.5 + (l % 7) as f64 / 7.0).collect();
        let w = WeightVector(w);
        let dense = LaplacianSystem::assemble(&g, &w).unwrap();
        let opts = SolverOptions {
            backend: Backend::Iterative,
            ..Default::default()
        };
        let it = LaplacianSystem::assemble_with(&g, &w, opts).unwrap();
        assert!(!it.is_dense());
        let (rd, ri) = (dense.edge_resistances().unwrap(), it.edge_resistances().unwrap());
        for (a, b) in rd.iter().zip(&ri) {
            assert!(close(*a, *b, 1e-8));
        }
        assert!(close(dense.trace_pinv().unwrap(), it.trace_pinv().unwrap(), 1e-8));
        let (a2, an) = dense.eig_extremes().unwrap();
        let (b2, bn) = it.eig_extremes().unwrap();
        assert!(close(a2, b2, 1e-8) && close(an, bn, 1e-8));
        assert!(matches!(it.logdet_pinv(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn eig_extremes_match_dense_spectrum() {
        for seed in 0..4 {
            let g = generate(&Family::RandomRegular { d: 3, n: 60 }, seed).unwrap();
            let w: Vec<f64> = (0..g.m()).map(|l| 1.0 + ((l * 7 + seed as usize) % 5) as f64).collect();
            let s = LaplacianSystem::assemble(&g, &WeightVector(w)).unwrap();
            let spec = s.laplacian_spectrum().unwrap();
            let (l2, ln) = s.eig_extremes().unwrap();
            assert!(close(l2, spec[1], 1e-8), "{l2} vs {}", spec[1]);
            assert!(close(ln, spec[spec.len() - 1], 1e-8));
        }
    }
}
