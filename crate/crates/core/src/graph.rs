//! Simple undirected graphs with a canonical edge order.
//!
//! Every downstream quantity (weights, leverage scores, resistances) is a
//! vector indexed by edge position, so the order fixed here is load-bearing:
//! edges are stored as `(u, v)` with `u < v`, sorted lexicographically, and
//! edge `l` has incidence row `b_l = e_u - e_v`.

use std::collections::{HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable simple connected graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// Original vertex ids, `labels[i]` is the input id of vertex `i`.
    labels: Vec<u64>,
    #[serde(skip)]
    adj: Vec<Vec<(usize, usize)>>,
}

impl Graph {
    /// Builds a graph from edges that are already canonical: `u < v`, sorted,
    /// deduplicated, all endpoints `< n`, and connected.
    pub fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for w in edges.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Precondition("edges not sorted and unique".into()));
            }
        }
        for &(u, v) in &edges {
            if u >= v || v >= n {
                return Err(Error::Precondition(format!("bad edge ({u}, {v})")));
            }
        }
        let g = Self::assemble(n, edges, (0..n as u64).collect());
        let comps = g.components().len();
        if comps != 1 {
            return Err(Error::Disconnected { components: comps });
        }
        Ok(g)
    }

    fn assemble(n: usize, edges: Vec<(usize, usize)>, labels: Vec<u64>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (l, &(u, v)) in edges.iter().enumerate() {
            adj[u].push((v, l));
            adj[v].push((u, l));
        }
        Graph {
            n,
            edges,
            labels,
            adj,
        }
    }

    /// Rebuilds the adjacency index, needed after deserialization.
    pub fn reindex(self) -> Self {
        Self::assemble(self.n, self.edges, self.labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, l: usize) -> (usize, usize) {
        self.edges[l]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Neighbors of `v` as `(neighbor, edge index)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Index of the edge joining `u` and `v`, if any.
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok()
    }

    pub fn is_tree(&self) -> bool {
        self.m() + 1 == self.n && self.components().len() == 1
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_of(self.n, self.edges.iter().copied())
    }

    /// Unweighted BFS distances from `src`; `usize::MAX` marks unreachable.
    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// BFS tree from `src`: the parent edge of each vertex (`None` at the root).
    pub fn bfs_path_edges(&self, src: usize) -> Vec<Option<(usize, usize)>> {
        let mut parent = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::new();
        seen[src] = true;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &(v, l) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, l));
                    queue.push_back(v);
                }
            }
        }
        parent
    }

    fn eccentricity(&self, v: usize) -> usize {
        self.bfs(v).into_iter().max().unwrap_or(0)
    }

    /// Exact unweighted diameter.
    ///
    /// All-sources BFS up to 10⁴ vertices, iFUB (fringe upper bound) above,
    /// which is still exact.
    pub fn diameter(&self) -> usize {
        if self.n <= 10_000 {
            self.diameter_all_pairs()
        } else {
            self.diameter_ifub()
        }
    }

    pub(crate) fn diameter_all_pairs(&self) -> usize {
        use rayon::prelude::*;
        (0..self.n)
            .into_par_iter()
            .map(|v| self.eccentricity(v))
            .max()
            .unwrap_or(0)
    }

    pub(crate) fn diameter_ifub(&self) -> usize {
        // four-sweep to pick a central start vertex
        let far = |d: &[usize]| {
            d.iter()
                .enumerate()
                .max_by_key(|&(i, &x)| (x, std::cmp::Reverse(i)))
                .map(|(i, _)| i)
                .unwrap()
        };
        let mid = |a: usize, b: usize| {
            let parent = self.bfs_path_edges(a);
            let mut path = vec![b];
            let mut cur = b;
            while let Some((p, _)) = parent[cur] {
                path.push(p);
                cur = p;
            }
            path[path.len() / 2]
        };
        let a1 = far(&self.bfs(0));
        let b1 = far(&self.bfs(a1));
        let r2 = mid(a1, b1);
        let a2 = far(&self.bfs(r2));
        let b2 = far(&self.bfs(a2));
        let u = mid(a2, b2);

        let dist = self.bfs(u);
        let ecc_u = *dist.iter().max().unwrap();
        let mut levels = vec![Vec::new(); ecc_u + 1];
        for (v, &d) in dist.iter().enumerate() {
            levels[d].push(v);
        }
        let mut lb = ecc_u;
        let mut i = ecc_u;
        while i > 0 {
            let bi = levels[i].iter().map(|&v| self.eccentricity(v)).max().unwrap_or(0);
            lb = lb.max(bi);
            if lb > 2 * (i - 1) {
                return lb;
            }
            i -= 1;
        }
        lb
    }

    /// Applies the incidence row of edge `l`: returns `b_lᵀ x = x_u - x_v`.
    pub fn incidence_dot(&self, l: usize, x: &[f64]) -> f64 {
        let (u, v) = self.edges[l];
        x[u] - x[v]
    }

    /// Dense incidence vector `b_l`.
    pub fn incidence_vector(&self, l: usize) -> Vec<f64> {
        let (u, v) = self.edges[l];
        let mut b = vec![0.0; self.n];
        b[u] = 1.0;
        b[v] = -1.0;
        b
    }

    /// Vector `e_i - e_j`.
    pub fn pair_vector(&self, i: usize, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.n];
        b[i] += 1.0;
        b[j] -= 1.0;
        b
    }

    /// Writes the edge list in the text format accepted by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# n={} m={}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

pub(crate) fn components_of(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    for (u, v) in edges {
        uf.union(u, v);
    }
    let mut by_root: HashMap<usize, usize> = HashMap::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let r = uf.find(v);
        let idx = *by_root.entry(r).or_insert_with(|| {
            comps.push(Vec::new());
            comps.len() - 1
        });
        comps[idx].push(v);
    }
    comps
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Nonnegative per-edge weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn uniform(m: usize) -> Self {
        WeightVector(vec![1.0 / m as f64; m])
    }

    pub fn ones(m: usize) -> Self {
        WeightVector(vec![1.0; m])
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= 1e-12
    }

    /// Rescales to unit sum.
    pub fn normalized(&self) -> Self {
        let s = self.sum();
        WeightVector(self.0.iter().map(|x| x / s).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        WeightVector(self.0.iter().map(|x| x * alpha).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.0.len() != m {
            return Err(Error::WeightLength {
                expected: m,
                got: self.0.len(),
            });
        }
        for (edge, &value) in self.0.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::BadWeight { edge, value });
            }
        }
        Ok(())
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        WeightVector(v)
    }
}

/// Cleanup applied by [`build_graph`].
#[derive(Clone, Copy, Debug, Default)]
pub struct BuildOptions {
    pub drop_self_loops: bool,
    pub take_lcc: bool,
}

impl BuildOptions {
    /// Drop self-loops and keep the largest connected component.
    pub fn cleanup() -> Self {
        BuildOptions {
            drop_self_loops: true,
            take_lcc: true,
        }
    }
}

/// Builds the canonical graph from raw vertex pairs.
///
/// Vertices are relabeled `0..n` in order of first appearance, duplicates and
/// reversed duplicates collapse, and edges are sorted lexicographically.
pub fn build_graph(edge_list: &[(u64, u64)], opts: BuildOptions) -> Result<Graph> {
    let mut pairs = Vec::with_capacity(edge_list.len());
    for &(a, b) in edge_list {
        if a == b {
            if opts.drop_self_loops {
                continue;
            }
            return Err(Error::SelfLoop(a));
        }
        pairs.push((a, b));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyGraph);
    }

    let (ids, labels) = relabel(&pairs);
    let n = labels.len();
    let mut edges: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(a, b)| {
            let (u, v) = (ids[a], ids[b]);
            (u.min(v), u.max(v))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();

    let comps = components_of(n, edges.iter().copied());
    if comps.len() == 1 {
        return Ok(Graph::assemble(n, edges, labels));
    }
    if !opts.take_lcc {
        return Err(Error::Disconnected {
            components: comps.len(),
        });
    }
    // largest component; ties go to the one seen first
    let keep = comps
        .iter()
        .enumerate()
        .max_by_key(|(i, c)| (c.len(), std::cmp::Reverse(*i)))
        .map(|(_, c)| c)
        .unwrap();
    let mut in_keep = vec![false; n];
    for &v in keep {
        in_keep[v] = true;
    }
    let kept: Vec<(u64, u64)> = pairs
        .into_iter()
        .filter(|(a, _)| in_keep[ids[a]])
        .collect();
    build_graph(&kept, BuildOptions::default())
}

fn relabel(pairs: &[(u64, u64)]) -> (HashMap<u64, usize>, Vec<u64>) {
    let mut ids = HashMap::new();
    let mut labels = Vec::new();
    for &(a, b) in pairs {
        for x in [a, b] {
            ids.entry(x).or_insert_with(|| {
                labels.push(x);
                labels.len() - 1
            });
        }
    }
    (ids, labels)
}

/// Parses whitespace-separated `u v` lines. `#` starts a comment; extra
/// columns are ignored. If the smallest id is 1 the list is taken as
/// 1-indexed and shifted down.
pub fn parse_edge_list(text: &str) -> Result<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<u64> {
            let tok = it.next().ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected two vertex ids".into(),
            })?;
            tok.parse::<u64>().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("{tok:?}: {e}"),
            })
        };
        let u = next()?;
        let v = next()?;
        out.push((u, v));
    }
    let min = out.iter().map(|&(u, v)| u.min(v)).min();
    if min == Some(1) {
        for e in &mut out {
            e.0 -= 1;
            e.1 -= 1;
        }
    }
    Ok(out)
}

/// Reads and builds a graph from an edge-list file.
pub fn read_edge_list(path: impl AsRef<Path>, opts: BuildOptions) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    build_graph(&parse_edge_list(&text)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(pairs: &[(u64, u64)]) -> Graph {
        build_graph(pairs, BuildOptions::cleanup()).unwrap()
    }

    #[test]
    fn path_of_three() {
        let p = g(&[(0, 1), (1, 2)]);
        assert_eq!((p.n(), p.m()), (3, 2));
        assert_eq!(p.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn cleanup_drops_loops_and_small_components() {
        let p = g(&[(0, 0), (0, 1), (1, 2), (3, 4)]);
        assert_eq!((p.n(), p.m()), (3, 2));
        assert_eq!(p.labels(), &[0, 1, 2]);
    }

    #[test]
    fn duplicates_collapse() {
        let p = g(&[(0, 1), (1, 0)]);
        assert_eq!((p.n(), p.m()), (2, 1));
    }

    #[test]
    fn relabels_by_first_appearance() {
        let p = g(&[(7, 3), (3, 9)]);
        assert_eq!(p.labels(), &[7, 3, 9]);
        assert_eq!(p.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_graph(&[(0, 0)], BuildOptions::cleanup()),
            Err(Error::EmptyGraph)
        ));
        assert!(matches!(
            build_graph(&[(0, 1), (2, 3)], BuildOptions::default()),
            Err(Error::Disconnected { components: 2 })
        ));
        assert!(matches!(
            build_graph(&[(0, 1), (1, 1)], BuildOptions::default()),
            Err(Error::SelfLoop(1))
        ));
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# header\n1 2\n2 3   # trailing\n\n3 1 0.5\n";
        let pairs = parse_edge_list(text).unwrap();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 0)]);
        let bad = parse_edge_list("0 x\n");
        assert!(matches!(bad, Err(Error::Parse { line: 1, .. })));
        assert!(parse_edge_list("0\n").is_err());
    }

    #[test]
    fn ordering_is_stable() {
        let pairs = [(5, 2), (2, 8), (8, 5), (1, 5)];
        let a = g(&pairs);
        let b = g(&pairs);
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn incidence_rows_sum_to_zero() {
        let p = g(&[(0, 1), (1, 2), (2, 0)]);
        for l in 0..p.m() {
            let s: f64 = p.incidence_vector(l).iter().sum();
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn ifub_matches_all_pairs() {
        use crate::generators::{generate, Family};
        for seed in 0..5 {
            let gr = generate(&Family::WattsStrogatz { n: 120, k: 4, p: 0.1 }, seed).unwrap();
            assert_eq!(gr.diameter_all_pairs(), gr.diameter_ifub());
        }
        let gr = generate(&Family::Grid { w: 7, h: 13 }, 0).unwrap();
        assert_eq!(gr.diameter_ifub(), 18);
        let gr = generate(&Family::Lollipop { k: 6, p: 9 }, 0).unwrap();
        assert_eq!(gr.diameter_ifub(), gr.diameter_all_pairs());
    }
}
