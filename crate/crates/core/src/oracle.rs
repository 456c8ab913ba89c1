//! Reference solutions of the Kirchhoff-index minimization on small graphs,
//! and two small constructions about optimal designs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, WeightVector};
use crate::laplacian::LaplacianSystem;
use crate::resistance::pinv_incidence_sq_norms;

/// Largest `n` accepted by [`ermp_solve`].
pub const ORACLE_LIMIT: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ErmpSolution {
    pub g_star: Vec<f64>,
    pub k_star: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ErmpOptions {
    /// Stop once `duality_gap / K ≤ tol`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ErmpOptions {
    fn default() -> Self {
        ErmpOptions {
            tol: 1e-6,
            max_iters: 50_000,
        }
    }
}

struct Point {
    g: Vec<f64>,
    k: f64,
    /// `‖L⁺ b_l‖²`
    s: Vec<f64>,
}

fn evaluate(graph: &Graph, g: Vec<f64>) -> Result<Point> {
    let sys = LaplacianSystem::assemble(graph, &WeightVector(g.clone()))?;
    let k = graph.n() as f64 * sys.trace_pinv()?;
    let s = pinv_incidence_sq_norms(&sys)?;
    Ok(Point { g, k, s })
}

/// `η = K / (n s_max) · (n s_max - K)` where `s_max = max_l ‖L⁺ b_l‖²`.
fn gap_of(n: usize, k: f64, s: &[f64]) -> f64 {
    let top = n as f64 * s.iter().copied().fold(0.0, f64::max);
    k / top * (top - k)
}

/// The duality gap of weights `g` (normalized to sum one first).
pub fn duality_gap(graph: &Graph, g: &WeightVector) -> Result<f64> {
    let p = evaluate(graph, g.normalized().0)?;
    Ok(gap_of(graph.n(), p.k, &p.s))
}

/// Minimizes `K(g) = n Tr L_g⁺` over the simplex by entropic mirror descent
/// with a backtracking step size, starting from uniform weights.
///
/// `∂K/∂g_l = -n ‖L⁺ b_l‖²`. The step size doubles after an accepted step and
/// halves after a rejected one.
pub fn ermp_solve(graph: &Graph, opts: ErmpOptions) -> Result<ErmpSolution> {
    let n = graph.n();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { n, limit: ORACLE_LIMIT });
    }
    const SIGMA: f64 = 1e-4;
    let nf = n as f64;
    let mut cur = evaluate(graph, WeightVector::uniform(graph.m()).0)?;
    let mut step = 1.0;
    let mut iterations = 0;
    loop {
        let gap = gap_of(n, cur.k, &cur.s);
        if gap / cur.k <= opts.tol || iterations >= opts.max_iters {
            let converged = gap / cur.k <= opts.tol;
            if !converged {
                log::warn!("ermp: relative gap {:.3e} after {iterations} iterations", gap / cur.k);
            }
            return Ok(ErmpSolution {
                g_star: cur.g,
                k_star: cur.k,
                duality_gap: gap,
                iterations,
                converged,
            });
        }
        iterations += 1;
        // relative gradient, shifted so the exponent is at most zero
        let d: Vec<f64> = cur.s.iter().map(|s| -nf * s / cur.k).collect();
        let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        loop {
            let mut g: Vec<f64> = cur
                .g
                .iter()
                .zip(&d)
                .map(|(g, d)| g * (-step * (d - dmin)).exp())
                .collect();
            let total: f64 = g.iter().sum();
            g.iter_mut().for_each(|x| *x /= total);
            let decrease: f64 = d.iter().zip(g.iter().zip(&cur.g)).map(|(d, (a, b))| d * (a - b)).sum::<f64>() * cur.k;
            let accepted = match evaluate(graph, g) {
                Ok(next) if next.k <= cur.k + SIGMA * decrease => Some(next),
                Ok(_) | Err(Error::DisconnectedSupport { .. }) | Err(Error::Singular) => None,
                Err(e) => return Err(e),
            };
            match accepted {
                Some(next) => {
                    cur = next;
                    step *= 2.0;
                    break;
                }
                None => {
                    step /= 2.0;
                    if step < 1e-300 {
                        return Err(Error::NoConvergence {
                            what: "mirror descent line search",
                            iterations,
                            residual: gap / cur.k,
                        });
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DesignGap {
    pub n: usize,
    /// `Tr (Vᵀ G V)⁻¹` at the normalized Lewis weights `𝟙/n`: `n Σ 1/i²`.
    pub trace_at_lw: f64,
    /// The same trace at weights proportional to `1/i`: `H_n²`.
    pub trace_at_inverse_law: f64,
    pub ratio: f64,
    /// `max_i |τ_i / w_i - 1|` at `w = 𝟙`.
    pub lw_residual: f64,
}

/// The diagonal design `V = diag(1, …, n)`: Lewis weights are all one, yet
/// weights `∝ 1/i` give a trace smaller by a factor of order `n / log² n`.
pub fn design_gap_demo(n: usize) -> Result<DesignGap> {
    if n < 2 {
        return Err(Error::InvalidParams("design gap needs n >= 2".into()));
    }
    // at w = 𝟙, row i of W^{1/2} V is i e_i, so τ_i = i² · (1 / i²)
    let lw_residual = (1..=n)
        .map(|i| {
            let row = (i * i) as f64;
            let gram_inv = 1.0 / row;
            (row * gram_inv - 1.0).abs()
        })
        .fold(0.0, f64::max);
    let g_lw = 1.0 / n as f64;
    let trace_at_lw: f64 = (1..=n).map(|i| 1.0 / (g_lw * (i * i) as f64)).sum();
    let h: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    let trace_at_inverse_law: f64 = (1..=n)
        .map(|i| {
            let g = 1.0 / (i as f64 * h);
            1.0 / (g * (i * i) as f64)
        })
        .sum();
    Ok(DesignGap {
        n,
        trace_at_lw,
        trace_at_inverse_law,
        ratio: trace_at_lw / trace_at_inverse_law,
        lw_residual,
    })
}

/// Rescales `x₁ ↦ p x₁`, `x₂ ↦ x₂ / p` so the geometric mean is kept and the
/// harmonic mean is multiplied by `t`.
pub fn hm_gm_construct(x: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParams(format!("t must lie in (0, 1), got {t}")));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParams("need at least two entries".into()));
    }
    if x.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParams("entries must be positive".into()));
    }
    let s: f64 = x.iter().map(|v| 1.0 / v).sum();
    let tp = (1.0 / t - 1.0) * s;
    let (y1, y2) = (1.0 / x[0], 1.0 / x[1]);
    let disc = tp * tp + 2.0 * tp * (y1 + y2) + (y1 - y2).powi(2);
    let p = ((tp + y1 + y2) + disc.sqrt()) / (2.0 * y2);
    let mut out = x.to_vec();
    out[0] *= p;
    out[1] /= p;
    Ok(out)
}

pub fn arithmetic_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn geometric_mean(x: &[f64]) -> f64 {
    (x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64).exp()
}

pub fn harmonic_mean(x: &[f64]) -> f64 {
    x.len() as f64 / x.iter().map(|v| 1.0 / v).sum::<f64>()
}
