//! Batch runs over graph families: the certificate `α_min` at Lewis weights,
//! maximized over random seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{alpha1, alpha2};
use crate::error::{Error, Result};
use crate::generators::{generate, Family};
use crate::graph::Graph;
use crate::laplacian::LaplacianSystem;
use crate::lewis::lewis_weights;
use crate::trees::TreeInstance;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    /// Number of seeds for random families; deterministic ones run once.
    pub runs: usize,
    pub seed: u64,
    pub eps: f64,
}

impl ExperimentConfig {
    pub fn new(family: Family) -> Self {
        ExperimentConfig {
            family,
            runs: 100,
            seed: 0,
            eps: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParams("runs must be at least 1".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParams(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        Ok(())
    }

    /// Seeds actually used: `seed, seed + 1, …`.
    pub fn seeds(&self) -> Vec<u64> {
        let runs = if self.family.is_random() { self.runs } else { 1 };
        (0..runs as u64).map(|i| self.seed + i).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_min: f64,
    /// `K(g_uni) / K*`, known in closed form on trees.
    pub exact_ratio: Option<f64>,
    pub lewis_iterations: usize,
    pub lewis_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RowSummary {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub runs: usize,
    pub alpha_min_max: f64,
    pub alpha_min_mean: f64,
    pub alpha_min_std: f64,
    pub alpha1_max: f64,
    pub alpha2_max: f64,
    pub exact_ratio: Option<f64>,
    pub all_converged: bool,
}

/// Certificates at the Lewis weights of one graph. Trees use the closed
/// forms at uniform weights, which are their Lewis weights.
pub fn run_graph(graph: &Graph, seed: u64, eps: f64) -> Result<RunRecord> {
    let (n, m) = (graph.n(), graph.m());
    if graph.is_tree() {
        let t = TreeInstance::from_graph(graph)?;
        let c = t.congestions();
        let sum: f64 = c.iter().map(|&x| x as f64).sum();
        let cmax = c.iter().copied().max().unwrap_or(0) as f64;
        let mf = m as f64;
        let a1 = 2.0 * mf * sum / (n as f64 * mf * mf);
        let a2 = mf * cmax / sum;
        return Ok(RunRecord {
            seed,
            n,
            m,
            alpha1: a1,
            alpha2: a2,
            alpha_min: a1.min(a2),
            exact_ratio: Some(t.alpha()),
            lewis_iterations: 0,
            lewis_residual: 0.0,
            converged: true,
        });
    }
    let lw = lewis_weights(graph, eps)?;
    let sys = LaplacianSystem::assemble(graph, &lw.weights())?;
    let (a1, a2) = (alpha1(&sys)?, alpha2(&sys)?);
    Ok(RunRecord {
        seed,
        n,
        m,
        alpha1: a1,
        alpha2: a2,
        alpha_min: a1.min(a2),
        exact_ratio: None,
        lewis_iterations: lw.iterations,
        lewis_residual: lw.residual,
        converged: lw.converged,
    })
}

pub fn run_one(family: &Family, seed: u64, eps: f64) -> Result<RunRecord> {
    let g = generate(family, seed)?;
    let r = run_graph(&g, seed, eps)?;
    log::info!("{family} seed {seed}: alpha_min = {:.4}", r.alpha_min);
    Ok(r)
}

/// Every run of a configuration, in seed order.
pub fn run_config(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    cfg.seeds()
        .par_iter()
        .map(|&s| run_one(&cfg.family, s, cfg.eps))
        .collect()
}

pub fn summarize(family: &Family, runs: &[RunRecord]) -> RowSummary {
    let k = runs.len() as f64;
    let vals: Vec<f64> = runs.iter().map(|r| r.alpha_min).collect();
    let mean = vals.iter().sum::<f64>() / k;
    let var = if runs.len() > 1 {
        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let max = |f: fn(&RunRecord) -> f64| runs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    RowSummary {
        family: family.clone(),
        n: runs[0].n,
        m: runs[0].m,
        runs: runs.len(),
        alpha_min_max: max(|r| r.alpha_min),
        alpha_min_mean: mean,
        alpha_min_std: var.sqrt(),
        alpha1_max: max(|r| r.alpha1),
        alpha2_max: max(|r| r.alpha2),
        exact_ratio: runs[0].exact_ratio,
        all_converged: runs.iter().all(|r| r.converged),
    }
}

pub fn run_row(cfg: &ExperimentConfig) -> Result<RowSummary> {
    Ok(summarize(&cfg.family, &run_config(cfg)?))
}

/// The elementary families of the summary table, in table order.
pub fn table1_families() -> Vec<Family> {
    vec![
        Family::RandomRegular { d: 3, n: 400 },
        Family::RandomRegular { d: 4, n: 400 },
        Family::RandomRegular { d: 5, n: 400 },
        Family::RandomRegular { d: 6, n: 400 },
        Family::WattsStrogatz { n: 400, k: 4, p: 2.0 / 3.0 },
        Family::Grid { w: 20, h: 20 },
        Family::Grid { w: 10, h: 40 },
        Family::MargulisGabberGalil { n: 20 },
        Family::ChordalCycle { n: 400 },
        Family::Lollipop { k: 400, p: 400 },
        Family::Bowtie { t: 1000, p: 999, s: 1000 },
    ]
}

/// Families for the asymptotic curves.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// `d`-regular graphs on `n` vertices.
    Regular,
    /// Lollipop with `n/2` clique vertices and a path of `n/2` edges.
    Lollipop,
}

pub fn sweep_families(kind: SweepKind, ds: &[usize], ns: &[usize]) -> Vec<Family> {
    match kind {
        SweepKind::Regular => ds
            .iter()
            .flat_map(|&d| ns.iter().map(move |&n| Family::RandomRegular { d, n }))
            .collect(),
        SweepKind::Lollipop => ns
            .iter()
            .map(|&n| Family::Lollipop { k: n / 2, p: n - n / 2 })
            .collect(),
    }
}

pub fn sweep(families: &[Family], runs: usize, seed: u64, eps: f64) -> Result<Vec<RowSummary>> {
    families
        .iter()
        .map(|f| {
            run_row(&ExperimentConfig {
                family: f.clone(),
                runs,
                seed,
                eps,
            })
        })
        .collect()
}
