//! Exact solutions on trees and the polarization process.
//!
//! On a tree every vertex pair has a unique path, so
//! `K_T(g) = Σ_l c_l / g_l` with congestion `c_l = n_l (n - n_l)`, where `n_l`
//! is the number of vertices on one side of edge `l`. The minimizer over the
//! simplex is `g*_l ∝ √c_l` with value `(Σ_l √c_l)²`.
//!
//! Edges split into `E_<` (`g*_l ≤ ‖g*‖²`) and `E_>`. Lowering the
//! congestion of an `E_<` edge, or raising that of an `E_>` edge, never
//! lowers the ratio `m Σc / (Σ√c)²`. [`polarize`] applies such local
//! transformations until the tree is a bowtie.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Relative tolerance for the `E_<` / `E_>` threshold comparison.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeInstance {
    n: usize,
    /// Stable edge ids; transformations re-hang edges but keep their ids.
    edges: Vec<(usize, usize)>,
    root: usize,
    /// Endpoint of each edge farther from the root.
    child: Vec<usize>,
    /// Vertices on the child side of each edge.
    side: Vec<usize>,
    congestions: Vec<u64>,
    g_star: Vec<f64>,
    k_star: f64,
    /// Membership in `E_>`.
    upper: Vec<bool>,
}

impl TreeInstance {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 || edges.len() != n - 1 || edges.iter().any(|&(u, v)| u >= n || v >= n || u == v) {
            return Err(Error::NotATree);
        }
        let adj = adjacency(n, &edges);
        let (order, parent) = bfs_tree(&adj, 0);
        if order.len() != n {
            return Err(Error::NotATree);
        }
        let sub = subtree_sizes(&order, &parent);
        let root = (0..n)
            .min_by_key(|&v| {
                let below = adj[v]
                    .iter()
                    .filter(|&&(x, _)| parent[x].map(|(p, _)| p) == Some(v))
                    .map(|&(x, _)| sub[x])
                    .max()
                    .unwrap_or(0);
                (below.max(n - sub[v]), v)
            })
            .unwrap();

        let (order, parent) = bfs_tree(&adj, root);
        let sub = subtree_sizes(&order, &parent);
        let mut child = vec![0; n - 1];
        let mut side = vec![0; n - 1];
        for v in 0..n {
            if let Some((_, l)) = parent[v] {
                child[l] = v;
                side[l] = sub[v];
            }
        }
        let congestions: Vec<u64> = side.iter().map(|&s| (s * (n - s)) as u64).collect();
        let s: f64 = congestions.iter().map(|&c| (c as f64).sqrt()).sum();
        let total: f64 = congestions.iter().map(|&c| c as f64).sum();
        let g_star = congestions.iter().map(|&c| (c as f64).sqrt() / s).collect();
        let upper = congestions
            .iter()
            .map(|&c| (c as f64).sqrt() * s > total * (1.0 + TIE_TOL))
            .collect();
        Ok(TreeInstance {
            n,
            edges,
            root,
            child,
            side,
            congestions,
            g_star,
            k_star: s * s,
            upper,
        })
    }

    pub fn from_graph(g: &Graph) -> Result<Self> {
        Self::new(g.n(), g.edges().to_vec())
    }

    /// The tree as a canonical [`Graph`]. Edge ids are renumbered.
    pub fn to_graph(&self) -> Result<Graph> {
        let mut e: Vec<(usize, usize)> = self.edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        e.sort_unstable();
        Graph::from_canonical(self.n, e)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.n - 1
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// The centroid, with ties broken toward the smaller id.
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn congestions(&self) -> &[u64] {
        &self.congestions
    }

    pub fn g_star(&self) -> &[f64] {
        &self.g_star
    }

    pub fn k_star(&self) -> f64 {
        self.k_star
    }

    /// `m Σc / (Σ√c)²`, the ratio `K(g_uni) / K*`.
    pub fn alpha(&self) -> f64 {
        ratio(&self.congestions)
    }

    pub fn in_upper(&self, l: usize) -> bool {
        self.upper[l]
    }

    /// Indicator of `E_>` over edge ids.
    pub fn upper_mask(&self) -> &[bool] {
        &self.upper
    }

    pub fn partition(&self) -> Partition {
        let (upper, lower) = (0..self.m()).partition(|&l| self.upper[l]);
        Partition { lower, upper }
    }

    pub fn is_leaf_edge(&self, l: usize) -> bool {
        self.side[l] == 1 || self.side[l] == self.n - 1
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        adjacency(self.n, &self.edges)
    }

    /// Vertices on the side of edge `l` that contains endpoint `x`.
    fn side_of(&self, x: usize, l: usize) -> usize {
        if self.child[l] == x {
            self.side[l]
        } else {
            self.n - self.side[l]
        }
    }

    fn upper_degree(&self, adj: &[Vec<(usize, usize)>], x: usize) -> usize {
        adj[x].iter().filter(|&&(_, l)| self.upper[l]).count()
    }

    fn rehang(&self, edge: usize, from: usize, to: usize) -> Result<TreeInstance> {
        let mut edges = self.edges.clone();
        let (a, b) = edges[edge];
        edges[edge] = if a == from { (to, b) } else { (a, to) };
        TreeInstance::new(self.n, edges)
    }
}

/// `m Σc / (Σ√c)²` for a congestion vector.
pub fn ratio(c: &[u64]) -> f64 {
    let s: f64 = c.iter().map(|&x| (x as f64).sqrt()).sum();
    let total: f64 = c.iter().map(|&x| x as f64).sum();
    c.len() as f64 * total / (s * s)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct Partition {
    /// `E_<`: edges with `g*_l ≤ ‖g*‖²`, ties included.
    pub lower: Vec<usize>,
    /// `E_>`.
    pub upper: Vec<usize>,
}

pub fn congestions(tree: &Graph) -> Result<Vec<u64>> {
    Ok(TreeInstance::from_graph(tree)?.congestions)
}

/// `(g*, K*)`.
pub fn tree_optimal(tree: &Graph) -> Result<(Vec<f64>, f64)> {
    let t = TreeInstance::from_graph(tree)?;
    Ok((t.g_star, t.k_star))
}

pub fn tree_alpha(tree: &Graph) -> Result<f64> {
    Ok(TreeInstance::from_graph(tree)?.alpha())
}

pub fn partition_edges(tree: &Graph) -> Result<Partition> {
    Ok(TreeInstance::from_graph(tree)?.partition())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LtKind {
    Lower,
    UpperCase1,
    UpperCase21,
    UpperCase22,
    /// A leaf moved one step along the spine toward an end.
    Push,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transformed {
    pub tree: TreeInstance,
    pub kind: LtKind,
    /// The only edge whose congestion changes.
    pub changed_edge: usize,
}

/// Moves the subtree below a non-leaf `E_<` edge `k` up by one level so `k`
/// becomes a leaf edge with congestion `m`.
pub fn lower_lt(t: &TreeInstance, k: usize) -> Result<Transformed> {
    if k >= t.m() {
        return Err(Error::Precondition(format!("edge {k} out of range")));
    }
    if t.upper[k] {
        return Err(Error::Precondition(format!("edge {k} is in E_>")));
    }
    if t.is_leaf_edge(k) {
        return Err(Error::Precondition(format!("edge {k} is a leaf edge")));
    }
    let v = t.child[k];
    let (a, b) = t.edges[k];
    let u = if a == v { b } else { a };
    let mut edges = t.edges.clone();
    for (l, e) in edges.iter_mut().enumerate() {
        if l == k {
            continue;
        }
        if e.0 == v {
            e.0 = u;
        } else if e.1 == v {
            e.1 = u;
        }
    }
    Ok(Transformed {
        tree: TreeInstance::new(t.n, edges)?,
        kind: LtKind::Lower,
        changed_edge: k,
    })
}

/// Reduces the branching of the `E_>` subtree at an endpoint of `k ∈ E_>`.
///
/// With `v` the endpoint of larger `E_>` degree (the smaller side when both
/// exceed two) and `x_1, x_2` its two smallest other `E_>` branches: case 1
/// and case 2.1 hang `x_2` below `x_1`; case 2.2 (when the side of the other
/// endpoint `u` is smaller than `x_1`'s branch) moves `x_1` onto `u`.
pub fn upper_lt(t: &TreeInstance, k: usize) -> Result<Transformed> {
    if k >= t.m() {
        return Err(Error::Precondition(format!("edge {k} out of range")));
    }
    if !t.upper[k] {
        return Err(Error::Precondition(format!("edge {k} is in E_<")));
    }
    let adj = t.adjacency();
    let (a, b) = t.edges[k];
    let (da, db) = (t.upper_degree(&adj, a), t.upper_degree(&adj, b));
    if da <= 2 && db <= 2 {
        return Err(Error::Precondition(format!(
            "both endpoints of edge {k} have E_> degree at most 2"
        )));
    }
    let both = da > 2 && db > 2;
    let v = if both {
        let (sa, sb) = (t.side_of(a, k), t.side_of(b, k));
        if sa < sb || (sa == sb && t.child[k] == a) {
            a
        } else {
            b
        }
    } else if da > 2 {
        a
    } else {
        b
    };
    let u = if v == a { b } else { a };
    let mut xs: Vec<(usize, usize, usize)> = adj[v]
        .iter()
        .filter(|&&(x, l)| x != u && t.upper[l])
        .map(|&(x, l)| (t.side_of(x, l), l, x))
        .collect();
    xs.sort_unstable();
    let (n1, l1, x1) = xs[0];
    let (_, l2, _) = xs[1];
    if both || n1 <= t.side_of(u, k) {
        let kind = if both { LtKind::UpperCase1 } else { LtKind::UpperCase21 };
        Ok(Transformed {
            tree: t.rehang(l2, v, x1)?,
            kind,
            changed_edge: l1,
        })
    } else {
        Ok(Transformed {
            tree: t.rehang(l1, v, u)?,
            kind: LtKind::UpperCase22,
            changed_edge: k,
        })
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Bowtie {
    pub t: usize,
    pub p: usize,
    pub s: usize,
}

/// Decomposes a tree as a bowtie, a path with leaves only at its two ends.
///
/// The path is the tree with its leaves removed, so `p` is as long as
/// possible. `t` counts the leaves at the end with the smaller vertex id.
/// A star on `k + 1` vertices gives `(k, 0, 0)`.
pub fn is_bowtie(t: &TreeInstance) -> Option<Bowtie> {
    let n = t.n;
    let adj = t.adjacency();
    if n == 2 {
        return Some(Bowtie { t: 1, p: 0, s: 0 });
    }
    let internal: Vec<bool> = (0..n).map(|v| adj[v].len() > 1).collect();
    let spine: Vec<usize> = (0..n).filter(|&v| internal[v]).collect();
    let spine_deg = |v: usize| adj[v].iter().filter(|&&(x, _)| internal[x]).count();
    let leaves = |v: usize| adj[v].len() - spine_deg(v);
    if spine.len() == 1 {
        return Some(Bowtie {
            t: leaves(spine[0]),
            p: 0,
            s: 0,
        });
    }
    if spine.iter().any(|&v| spine_deg(v) > 2) {
        return None;
    }
    let ends: Vec<usize> = spine.iter().copied().filter(|&v| spine_deg(v) == 1).collect();
    let (e0, e1) = (ends[0].min(ends[1]), ends[0].max(ends[1]));
    if spine.iter().any(|&v| v != e0 && v != e1 && leaves(v) > 0) {
        return None;
    }
    Some(Bowtie {
        t: leaves(e0),
        p: spine.len() - 1,
        s: leaves(e1),
    })
}

pub fn is_bowtie_graph(g: &Graph) -> Result<Option<Bowtie>> {
    Ok(is_bowtie(&TreeInstance::from_graph(g)?))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolarizeStep {
    pub step: usize,
    pub lt: LtKind,
    /// The edge the transformation is indexed by.
    pub edge: usize,
    pub changed_edge: usize,
    pub alpha_before: f64,
    pub alpha_after: f64,
    /// Whether `E_>` is the same set before and after the step.
    pub partition_invariant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Polarization {
    pub steps: Vec<PolarizeStep>,
    pub initial_alpha: f64,
    pub final_alpha: f64,
    pub final_tree: TreeInstance,
    pub bowtie: Option<Bowtie>,
}

/// Applies lower transformations, then upper ones, then leaf pushes, one at a
/// time with the partition recomputed after each step, until none applies.
pub fn polarize(tree: &TreeInstance) -> Result<Polarization> {
    let cap = 10 * tree.n * tree.n;
    let mut cur = tree.clone();
    let mut steps = Vec::new();
    while let Some((edge, next)) = next_step(&cur)? {
        if steps.len() >= cap {
            return Err(Error::NoConvergence {
                what: "polarization",
                iterations: cap,
                residual: f64::NAN,
            });
        }
        let (before, after) = (cur.alpha(), next.tree.alpha());
        steps.push(PolarizeStep {
            step: steps.len(),
            lt: next.kind,
            edge,
            changed_edge: next.changed_edge,
            alpha_before: before,
            alpha_after: after,
            partition_invariant: cur.upper == next.tree.upper,
        });
        cur = next.tree;
    }
    Ok(Polarization {
        steps,
        initial_alpha: tree.alpha(),
        final_alpha: cur.alpha(),
        bowtie: is_bowtie(&cur),
        final_tree: cur,
    })
}

fn next_step(t: &TreeInstance) -> Result<Option<(usize, Transformed)>> {
    if let Some(k) = (0..t.m()).find(|&k| !t.upper[k] && !t.is_leaf_edge(k)) {
        return Ok(Some((k, lower_lt(t, k)?)));
    }
    let adj = t.adjacency();
    if let Some(k) = (0..t.m()).find(|&k| {
        let (a, b) = t.edges[k];
        t.upper[k] && (t.upper_degree(&adj, a) > 2 || t.upper_degree(&adj, b) > 2)
    }) {
        return Ok(Some((k, upper_lt(t, k)?)));
    }
    Ok(push_step(t, &adj))
}

/// Every non-leaf edge is now in `E_>` and they form a path. Moves the
/// lowest-id leaf hanging off an inner path vertex one step toward an end,
/// in a direction that raises the congestion of the crossed path edge.
fn push_step(t: &TreeInstance, adj: &[Vec<(usize, usize)>]) -> Option<(usize, Transformed)> {
    let spine = spine_path(t, adj)?;
    let q = spine.len() - 1;
    if q < 2 {
        return None;
    }
    let mut pos = vec![usize::MAX; t.n];
    for (i, &v) in spine.iter().enumerate() {
        pos[v] = i;
    }
    let spine_edge = |i: usize| -> usize {
        adj[spine[i]]
            .iter()
            .find(|&&(x, _)| x == spine[i + 1])
            .map(|&(_, l)| l)
            .unwrap()
    };
    let leaves_at = |i: usize| adj[spine[i]].iter().filter(|&&(x, _)| pos[x] == usize::MAX).count();
    let (leaf_edge, i) = (0..t.m())
        .filter_map(|l| {
            let (a, b) = t.edges[l];
            let (i, j) = (pos[a], pos[b]);
            if i != usize::MAX && j == usize::MAX && i > 0 && i < q {
                Some((l, i))
            } else if j != usize::MAX && i == usize::MAX && j > 0 && j < q {
                Some((l, j))
            } else {
                None
            }
        })
        .next()?;
    let n = t.n;
    // vertices strictly left of spine[i] and strictly right of it
    let left_edge = spine_edge(i - 1);
    let right_edge = spine_edge(i);
    let left = t.side_of(spine[i - 1], left_edge);
    let right = t.side_of(spine[i + 1], right_edge);
    let gains_left = 2 * left + 1 < n;
    let gains_right = 2 * right + 1 < n;
    let go_left = match (gains_left, gains_right) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => return None,
        (true, true) => {
            let (dl, dr) = (i, q - i);
            if dl != dr {
                dl < dr
            } else {
                leaves_at(0) >= leaves_at(q)
            }
        }
    };
    let (target, crossed) = if go_left {
        (spine[i - 1], left_edge)
    } else {
        (spine[i + 1], right_edge)
    };
    let tree = t.rehang(leaf_edge, spine[i], target).ok()?;
    Some((
        crossed,
        Transformed {
            tree,
            kind: LtKind::Push,
            changed_edge: crossed,
        },
    ))
}

/// The non-leaf vertices in path order, if they form a path.
fn spine_path(t: &TreeInstance, adj: &[Vec<(usize, usize)>]) -> Option<Vec<usize>> {
    let internal: Vec<bool> = (0..t.n).map(|v| adj[v].len() > 1).collect();
    let deg = |v: usize| adj[v].iter().filter(|&&(x, _)| internal[x]).count();
    let nodes: Vec<usize> = (0..t.n).filter(|&v| internal[v]).collect();
    if nodes.is_empty() {
        return None;
    }
    if nodes.len() == 1 {
        return Some(nodes);
    }
    if nodes.iter().any(|&v| deg(v) > 2) {
        return None;
    }
    let start = *nodes.iter().find(|&&v| deg(v) == 1)?;
    let mut path = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    loop {
        let next = adj[cur].iter().map(|&(x, _)| x).find(|&x| internal[x] && x != prev);
        match next {
            Some(x) => {
                path.push(x);
                prev = cur;
                cur = x;
            }
            None => break,
        }
    }
    Some(path)
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (l, &(u, v)) in edges.iter().enumerate() {
        adj[u].push((v, l));
        adj[v].push((u, l));
    }
    adj
}

/// BFS order and `(parent, edge)` links from `root`.
fn bfs_tree(adj: &[Vec<(usize, usize)>], root: usize) -> (Vec<usize>, Vec<Option<(usize, usize)>>) {
    let n = adj.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &(y, l) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = Some((x, l));
                queue.push_back(y);
            }
        }
    }
    (order, parent)
}

fn subtree_sizes(order: &[usize], parent: &[Option<(usize, usize)>]) -> Vec<usize> {
    let mut sub = vec![1; parent.len()];
    for &x in order.iter().rev() {
        if let Some((p, _)) = parent[x] {
            sub[p] += sub[x];
        }
    }
    sub
}
