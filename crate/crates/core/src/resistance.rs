//! Effective resistances and the Kirchhoff index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplacian::LaplacianSystem;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ResistanceProfile {
    pub edge_resistances: Vec<f64>,
    pub kirchhoff: f64,
}

pub fn profile(sys: &LaplacianSystem) -> Result<ResistanceProfile> {
    Ok(ResistanceProfile {
        edge_resistances: sys.edge_resistances()?,
        kirchhoff: kirchhoff(sys)?,
    })
}

/// `R_ij = (e_i - e_j)ᵀ L⁺ (e_i - e_j)`.
pub fn effective_resistance(sys: &LaplacianSystem, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::Precondition(format!("resistance query needs distinct vertices, got {i} twice")));
    }
    let z = sys.graph().pair_vector(i, j);
    let x = sys.pinv_apply(&z)?;
    Ok(x[i] - x[j])
}

/// Resistances of many vertex pairs. The dense back end reads them off the
/// cached inverse; the iterative one groups the queries by source vertex so
/// each source needs one solve per distinct partner.
pub fn effective_resistances(sys: &LaplacianSystem, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    if let Some(&(i, _)) = pairs.iter().find(|(i, j)| i == j) {
        return Err(Error::Precondition(format!("resistance query needs distinct vertices, got {i} twice")));
    }
    if sys.is_dense() {
        let inv = sys.shifted_inverse()?;
        return Ok(pairs
            .iter()
            .map(|&(i, j)| inv[(i, i)] + inv[(j, j)] - 2.0 * inv[(i, j)])
            .collect());
    }
    // L⁺(e_i - e_j) = L⁺(e_i - 𝟙/n) - L⁺(e_j - 𝟙/n): one solve per vertex.
    let mut verts: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    verts.sort_unstable();
    verts.dedup();
    let n = sys.n();
    let cols: Vec<Vec<f64>> = verts
        .par_iter()
        .map(|&v| {
            let mut e = vec![0.0; n];
            e[v] = 1.0;
            sys.pinv_apply(&e)
        })
        .collect::<Result<_>>()?;
    let col = |v: usize| &cols[verts.binary_search(&v).unwrap()];
    Ok(pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (col(i), col(j));
            a[i] - a[j] - b[i] + b[j]
        })
        .collect())
}

/// `K = n · Tr L⁺`, the sum of resistances over unordered vertex pairs.
pub fn kirchhoff(sys: &LaplacianSystem) -> Result<f64> {
    Ok(sys.n() as f64 * sys.trace_pinv()?)
}

/// The same quantity by explicit summation over all `n(n-1)/2` pairs.
pub fn kirchhoff_pairwise(sys: &LaplacianSystem) -> Result<f64> {
    let n = sys.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Ok(effective_resistances(sys, &pairs)?.iter().sum())
}

/// `-∂ log det(L⁺ + 𝟙𝟙ᵀ/n) / ∂g_l`, which is the edge resistance `R_l`.
pub fn logdet_gradient(sys: &LaplacianSystem) -> Result<Vec<f64>> {
    sys.edge_resistances()
}

/// `‖L⁺ b_l‖²` for every edge.
pub fn pinv_incidence_sq_norms(sys: &LaplacianSystem) -> Result<Vec<f64>> {
    let g = sys.graph();
    if sys.is_dense() {
        let inv = sys.shifted_inverse()?;
        // M⁻¹ b_l = L⁺ b_l since b_l ⟂ 𝟙.
        return Ok(g
            .edges()
            .par_iter()
            .map(|&(u, v)| {
                let (cu, cv) = (inv.col_as_slice(u), inv.col_as_slice(v));
                cu.iter().zip(cv).map(|(a, b)| (a - b).powi(2)).sum()
            })
            .collect());
    }
    (0..g.m())
        .into_par_iter()
        .map(|l| {
            let x = sys.pinv_apply(&g.incidence_vector(l))?;
            Ok(x.iter().map(|v| v * v).sum())
        })
        .collect()
}

/// `∂K/∂g_l = -n ‖L⁺ b_l‖²`.
pub fn kirchhoff_gradient(sys: &LaplacianSystem) -> Result<Vec<f64>> {
    let n = sys.n() as f64;
    Ok(pinv_incidence_sq_norms(sys)?.into_iter().map(|s| -n * s).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub samples: usize,
    /// Largest `R_ij - R_ik - R_kj` seen (negative when every triple is strict).
    pub max_violation: f64,
    /// Triples whose violation exceeds `1e-9`.
    pub violations: usize,
}

/// Samples random vertex triples and checks `R_ij ≤ R_ik + R_kj`.
pub fn metric_check(sys: &LaplacianSystem, samples: usize, seed: u64) -> Result<MetricReport> {
    let n = sys.n();
    if n < 3 {
        return Err(Error::Precondition("metric check needs at least 3 vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[usize; 3]> = (0..samples)
        .map(|_| loop {
            let t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                break t;
            }
        })
        .collect();
    let pairs: Vec<(usize, usize)> = triples
        .iter()
        .flat_map(|&[i, j, k]| [(i, j), (i, k), (k, j)])
        .collect();
    let r = effective_resistances(sys, &pairs)?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for c in r.chunks(3) {
        let v = c[0] - c[1] - c[2];
        max_violation = max_violation.max(v);
        if v > 1e-9 {
            violations += 1;
        }
    }
    Ok(MetricReport {
        samples,
        max_violation,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, Family};
    use crate::graph::WeightVector;
    use crate::laplacian::{Backend, SolverOptions};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn small_examples() {
        let p3 = generate(&Family::Path { n: 3 }, 0).unwrap();
        let s = LaplacianSystem::assemble(&p3, &WeightVector(vec![0.5, 0.5])).unwrap();
        assert!(rel(effective_resistance(&s, 0, 2).unwrap(), 4.0) < 1e-12);

        let tri = generate(&Family::Complete { n: 3 }, 0).unwrap();
        let s = LaplacianSystem::assemble(&tri, &WeightVector::uniform(3)).unwrap();
        assert!(rel(effective_resistance(&s, 0, 1).unwrap(), 2.0) < 1e-12);
        assert!(rel(kirchhoff(&s).unwrap(), 6.0) < 1e-12);
        for r in logdet_gradient(&s).unwrap() {
            assert!(rel(r, 2.0) < 1e-12);
        }
        assert!(effective_resistance(&s, 1, 1).is_err());
    }

    #[test]
    fn complete_graph() {
        let n = 9;
        let g = generate(&Family::Complete { n }, 0).unwrap();
        let s = LaplacianSystem::assemble(&g, &WeightVector::uniform(g.m())).unwrap();
        let nf = n as f64;
        assert!(rel(effective_resistance(&s, 2, 7).unwrap(), nf - 1.0) < 1e-12);
        assert!(rel(kirchhoff(&s).unwrap(), nf * (nf - 1.0).powi(2) / 2.0) < 1e-12);
    }

    #[test]
    fn tree_kirchhoff_is_congestion_sum() {
        let g = generate(&Family::Bowtie { t: 2, p: 1, s: 2 }, 0).unwrap();
        let w = vec![0.1, 0.2, 0.3, 0.15, 0.25];
        let s = LaplacianSystem::assemble(&g, &WeightVector(w.clone())).unwrap();
        // congestions of bowtie(2,1,2): leaves 5, middle 9
        let c: Vec<f64> = g
            .edges()
            .iter()
            .map(|&(u, v)| if g.degree(u) > 1 && g.degree(v) > 1 { 9.0 } else { 5.0 })
            .collect();
        let expect: f64 = c.iter().zip(&w).map(|(c, g)| c / g).sum();
        assert!(rel(kirchhoff(&s).unwrap(), expect) < 1e-12);
        let uni = LaplacianSystem::assemble(&g, &WeightVector::uniform(5)).unwrap();
        for r in logdet_gradient(&uni).unwrap() {
            assert!(rel(r, 5.0) < 1e-12);
        }
    }

    #[test]
    fn pairwise_matches_trace_on_both_backends() {
        let g = generate(&Family::WattsStrogatz { n: 30, k: 4, p: 0.3 }, 5).unwrap();
        let w: Vec<f64> = (0..g.m()).map(|l| 1.0 + (l % 3) as f64).collect();
        let w = WeightVector(w).normalized();
        for backend in [Backend::Dense, Backend::Iterative] {
            let opts = SolverOptions {
                backend,
                ..Default::default()
            };
            let s = LaplacianSystem::assemble_with(&g, &w, opts).unwrap();
            assert!(rel(kirchhoff_pairwise(&s).unwrap(), kirchhoff(&s).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn metric_examples() {
        let tree = generate(&Family::Bowtie { t: 3, p: 5, s: 2 }, 0).unwrap();
        let s = LaplacianSystem::assemble(&tree, &WeightVector::uniform(tree.m())).unwrap();
        let rep = metric_check(&s, 200, 1).unwrap();
        assert!(rep.max_violation <= 1e-12 && rep.violations == 0);

        let k5 = generate(&Family::Complete { n: 5 }, 0).unwrap();
        let s = LaplacianSystem::assemble(&k5, &WeightVector::uniform(10)).unwrap();
        let rep = metric_check(&s, 100, 2).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_violation < 0.0);
    }
}
