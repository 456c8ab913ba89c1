//! Deterministic generators for the graph families used in the experiments.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, BuildOptions, Graph};

/// A graph family with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Path { n: usize },
    /// One center and `n - 1` leaves.
    Star { n: usize },
    Cycle { n: usize },
    Complete { n: usize },
    Grid { w: usize, h: usize },
    /// `K_k` with a pendant path of `p` edges.
    Lollipop { k: usize, p: usize },
    /// Path of `p` edges, `t` leaves on its first node and `s` on its last.
    Bowtie { t: usize, p: usize, s: usize },
    RandomRegular { d: usize, n: usize },
    WattsStrogatz { n: usize, k: usize, p: f64 },
    /// Gabber–Galil expander on the `n × n` torus (`n²` vertices).
    MargulisGabberGalil { n: usize },
    /// Cycle plus chords `i → 2i mod n`.
    ChordalCycle { n: usize },
    /// Uniform labelled tree, decoded from a random Prüfer sequence.
    RandomTree { n: usize },
}

impl Family {
    pub fn is_random(&self) -> bool {
        matches!(
            self,
            Family::RandomRegular { .. } | Family::WattsStrogatz { .. } | Family::RandomTree { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Path { .. } => "path",
            Family::Star { .. } => "star",
            Family::Cycle { .. } => "cycle",
            Family::Complete { .. } => "complete",
            Family::Grid { .. } => "grid",
            Family::Lollipop { .. } => "lollipop",
            Family::Bowtie { .. } => "bowtie",
            Family::RandomRegular { .. } => "regular",
            Family::WattsStrogatz { .. } => "watts_strogatz",
            Family::MargulisGabberGalil { .. } => "margulis",
            Family::ChordalCycle { .. } => "chordal_cycle",
            Family::RandomTree { .. } => "random_tree",
        }
    }

    /// Parses a family name and a `k=v,k=v` parameter string.
    pub fn parse(name: &str, params: &str) -> Result<Self> {
        let kv = parse_params(params)?;
        let get = |key: &str| -> Result<f64> {
            kv.get(key)
                .copied()
                .ok_or_else(|| Error::InvalidParams(format!("{name}: missing parameter `{key}`")))
        };
        let int = |key: &str| -> Result<usize> {
            let x = get(key)?;
            if x < 0.0 || x.fract() != 0.0 {
                return Err(Error::InvalidParams(format!("{key} must be a nonnegative integer")));
            }
            Ok(x as usize)
        };
        let fam = match name {
            "path" => Family::Path { n: int("n")? },
            "star" => Family::Star { n: int("n")? },
            "cycle" => Family::Cycle { n: int("n")? },
            "complete" => Family::Complete { n: int("n")? },
            "grid" => Family::Grid {
                w: int("w")?,
                h: int("h")?,
            },
            "lollipop" => Family::Lollipop {
                k: int("k")?,
                p: int("p")?,
            },
            "bowtie" => Family::Bowtie {
                t: int("t")?,
                p: int("p")?,
                s: int("s")?,
            },
            "regular" | "random_regular" => Family::RandomRegular {
                d: int("d")?,
                n: int("n")?,
            },
            "watts_strogatz" | "ws" => Family::WattsStrogatz {
                n: int("n")?,
                k: int("k")?,
                p: get("p")?,
            },
            "margulis" | "margulis_gabber_galil" | "mgg" => Family::MargulisGabberGalil { n: int("n")? },
            "chordal_cycle" | "chordal" => Family::ChordalCycle { n: int("n")? },
            "random_tree" | "tree" => Family::RandomTree { n: int("n")? },
            other => return Err(Error::InvalidParams(format!("unknown family `{other}`"))),
        };
        Ok(fam)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Path { n } | Family::Star { n } | Family::Cycle { n } | Family::Complete { n } => {
                write!(f, "{}(n={n})", self.name())
            }
            Family::Grid { w, h } => write!(f, "grid(w={w},h={h})"),
            Family::Lollipop { k, p } => write!(f, "lollipop(k={k},p={p})"),
            Family::Bowtie { t, p, s } => write!(f, "bowtie(t={t},p={p},s={s})"),
            Family::RandomRegular { d, n } => write!(f, "regular(d={d},n={n})"),
            Family::WattsStrogatz { n, k, p } => write!(f, "watts_strogatz(n={n},k={k},p={p})"),
            Family::MargulisGabberGalil { n } => write!(f, "margulis(n={n})"),
            Family::ChordalCycle { n } => write!(f, "chordal_cycle(n={n})"),
            Family::RandomTree { n } => write!(f, "random_tree(n={n})"),
        }
    }
}

fn parse_params(s: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("expected key=value, got `{part}`")))?;
        let v = parse_number(v.trim())
            .ok_or_else(|| Error::InvalidParams(format!("bad number `{v}` for `{k}`")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Accepts plain numbers and simple fractions like `2/3`.
fn parse_number(s: &str) -> Option<f64> {
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (f64, f64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (b != 0.0).then(|| a / b);
    }
    s.parse().ok()
}

/// Generates a member of `family`. Deterministic in `(family, seed)`; the
/// seed is ignored by the deterministic families.
pub fn generate(family: &Family, seed: u64) -> Result<Graph> {
    let invalid = |msg: String| Err(Error::InvalidParams(msg));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(u64, u64)> = match *family {
        Family::Path { n } => {
            if n < 2 {
                return invalid("path needs n >= 2".into());
            }
            (0..n as u64 - 1).map(|i| (i, i + 1)).collect()
        }
        Family::Star { n } => {
            if n < 2 {
                return invalid("star needs n >= 2".into());
            }
            (1..n as u64).map(|i| (0, i)).collect()
        }
        Family::Cycle { n } => {
            if n < 3 {
                return invalid("cycle needs n >= 3".into());
            }
            let n = n as u64;
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        Family::Complete { n } => {
            if n < 2 {
                return invalid("complete graph needs n >= 2".into());
            }
            complete_pairs(0, n as u64)
        }
        Family::Grid { w, h } => {
            if w * h < 2 || w == 0 || h == 0 {
                return invalid("grid needs at least two vertices".into());
            }
            let id = |x: usize, y: usize| (y * w + x) as u64;
            let mut e = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if x + 1 < w {
                        e.push((id(x, y), id(x + 1, y)));
                    }
                    if y + 1 < h {
                        e.push((id(x, y), id(x, y + 1)));
                    }
                }
            }
            e
        }
        Family::Lollipop { k, p } => {
            if k < 2 {
                return invalid("lollipop needs k >= 2".into());
            }
            let k = k as u64;
            let mut e = complete_pairs(0, k);
            let mut prev = k - 1;
            for i in 0..p as u64 {
                e.push((prev, k + i));
                prev = k + i;
            }
            e
        }
        Family::Bowtie { t, p, s } => {
            if t + p + s == 0 {
                return invalid("bowtie needs at least one edge".into());
            }
            let p = p as u64;
            let mut e: Vec<(u64, u64)> = (0..p).map(|i| (i, i + 1)).collect();
            let mut next = p + 1;
            for _ in 0..t {
                e.push((0, next));
                next += 1;
            }
            for _ in 0..s {
                e.push((p, next));
                next += 1;
            }
            e
        }
        Family::RandomRegular { d, n } => random_regular(d, n, &mut rng)?,
        Family::WattsStrogatz { n, k, p } => watts_strogatz(n, k, p, &mut rng)?,
        Family::MargulisGabberGalil { n } => {
            if n < 2 {
                return invalid("margulis needs n >= 2".into());
            }
            let id = |x: usize, y: usize| (x * n + y) as u64;
            let mut e = Vec::with_capacity(4 * n * n);
            for x in 0..n {
                for y in 0..n {
                    for (u, v) in [
                        ((x + 2 * y) % n, y),
                        ((x + 2 * y + 1) % n, y),
                        (x, (y + 2 * x) % n),
                        (x, (y + 2 * x + 1) % n),
                    ] {
                        e.push((id(x, y), id(u, v)));
                    }
                }
            }
            e
        }
        Family::ChordalCycle { n } => {
            if n < 3 {
                return invalid("chordal cycle needs n >= 3".into());
            }
            let n = n as u64;
            let mut e: Vec<(u64, u64)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            e.extend((0..n).map(|i| (i, (2 * i) % n)));
            e
        }
        Family::RandomTree { n } => {
            if n < 2 {
                return invalid("random tree needs n >= 2".into());
            }
            let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            prufer_decode(n, &code)
        }
    };
    build_graph(&pairs, BuildOptions::cleanup())
}

/// Linear-time Prüfer decoding.
fn prufer_decode(n: usize, code: &[usize]) -> Vec<(u64, u64)> {
    let mut degree = vec![1usize; n];
    for &v in code {
        degree[v] += 1;
    }
    let mut ptr = (0..n).find(|&v| degree[v] == 1).unwrap_or(0);
    let mut leaf = ptr;
    let mut e = Vec::with_capacity(n - 1);
    for &v in code {
        e.push((leaf as u64, v as u64));
        degree[v] -= 1;
        if v < ptr && degree[v] == 1 {
            leaf = v;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    e.push((leaf as u64, n as u64 - 1));
    e
}

fn complete_pairs(start: u64, end: u64) -> Vec<(u64, u64)> {
    let mut e = Vec::new();
    for i in start..end {
        for j in i + 1..end {
            e.push((i, j));
        }
    }
    e
}

const REGULAR_RETRIES: usize = 1000;

/// Pairing model: stubs are matched at random, loops and repeated pairs are
/// rejected and their stubs re-matched; a dead end restarts the attempt.
fn random_regular(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(u64, u64)>> {
    if d == 0 || d >= n || !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "random regular graph needs 0 < d < n and d*n even (d={d}, n={n})"
        )));
    }
    for _ in 0..REGULAR_RETRIES {
        if let Some(edges) = try_regular(d, n, rng) {
            let mut e: Vec<(u64, u64)> = edges.into_iter().map(|(a, b)| (a as u64, b as u64)).collect();
            e.sort_unstable();
            return Ok(e);
        }
    }
    Err(Error::InvalidParams(format!(
        "random regular generator failed after {REGULAR_RETRIES} attempts"
    )))
}

fn try_regular(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Option<HashSet<(usize, usize)>> {
    let mut edges = HashSet::with_capacity(n * d / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        let mut leftover: HashMap<usize, usize> = HashMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            *leftover.entry(pair[0]).or_default() += 1;
            *leftover.entry(pair[1]).or_default() += 1;
        }
        if !suitable(&edges, &leftover) {
            return None;
        }
        let mut keys: Vec<_> = leftover.into_iter().collect();
        keys.sort_unstable();
        stubs = keys
            .into_iter()
            .flat_map(|(v, c)| std::iter::repeat_n(v, c))
            .collect();
    }
    Some(edges)
}

/// True if some pair among the leftover stubs could still form a new edge.
fn suitable(edges: &HashSet<(usize, usize)>, leftover: &HashMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let verts: Vec<usize> = leftover.keys().copied().collect();
    for (i, &a) in verts.iter().enumerate() {
        for &b in &verts[i + 1..] {
            if !edges.contains(&(a.min(b), a.max(b))) {
                return true;
            }
        }
    }
    false
}

fn watts_strogatz(n: usize, k: usize, p: f64, rng: &mut ChaCha8Rng) -> Result<Vec<(u64, u64)>> {
    if !k.is_multiple_of(2) || k == 0 || k >= n || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!(
            "watts_strogatz needs even 0 < k < n and p in [0,1] (n={n}, k={k}, p={p})"
        )));
    }
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    let mut order: Vec<(usize, usize)> = Vec::new();
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
            order.push((u, v));
        }
    }
    // rewire each lattice edge (u, u+j) with probability p, one offset ring at a time
    for &(u, v) in &order {
        if !adj[u].contains(&v) {
            continue;
        }
        if rng.gen::<f64>() < p {
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.gen_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut e = Vec::new();
    for (u, nb) in adj.iter().enumerate() {
        for &v in nb {
            if u < v {
                e.push((u as u64, v as u64));
            }
        }
    }
    e.sort_unstable();
    Ok(e)
}
