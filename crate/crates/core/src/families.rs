//! Deterministic graph families with named vertex groups.
//!
//! Vertex numbering (1-based, as written to disk):
//!
//! * `complete(n)`, `cycle(n)`, `path(n)`: `1..=n`, cycle edges `i ~ i+1` and `n ~ 1`.
//! * `star(k)`: centre `1`, leaves `2..=k+1`.
//! * `double_star(k)`: `x1 = 1`, `x2 = 2`, `L1 = 3..=k+2`, `L2 = k+3..=2k+2`.
//! * `dir_suppressor(k, a)`: `w_j = j` for `j in 1..=ka`, then `v_i = ka + i`.
//!   Groups `I_i`, `W_i`, `V_i`, `X_i` for `i in 1..=k`.
//! * `undir_suppressor(a, k)`: `V0`, `V1`, `V2`, `V3` in consecutive blocks of
//!   sizes `ak`, `a²k²`, `a²k`, `a²k`. Star `j` has centre `V2[j]` and leaves
//!   `V1[jk..(j+1)k]`; `V2[j]` is matched with `V3[j]`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Graph, MutantSet};

pub const RANDOM_CONNECTED_RETRIES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("random_connected requires a seed")]
    MissingSeed,
    #[error("no connected sample of G({n}, {p}) after {RANDOM_CONNECTED_RETRIES} attempts")]
    RetriesExhausted { n: usize, p: f64 },
    #[error("vertex {0} is outside the graph")]
    VertexOutOfRange(usize),
    #[error("graph was not produced by undir_suppressor")]
    NotUndirSuppressor,
    #[error("malformed group line {line}: {msg}")]
    GroupParse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Complete { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    Star { k: usize },
    DoubleStar { k: usize },
    DirSuppressor { k: usize, a: usize },
    UndirSuppressor { a: usize, k: usize },
    RandomConnected { n: usize, p: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Complete { .. } => "complete",
            Family::Cycle { .. } => "cycle",
            Family::Path { .. } => "path",
            Family::Star { .. } => "star",
            Family::DoubleStar { .. } => "double_star",
            Family::DirSuppressor { .. } => "dir_suppressor",
            Family::UndirSuppressor { .. } => "undir_suppressor",
            Family::RandomConnected { .. } => "random_connected",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub graph: Graph,
    pub family: Family,
    groups: Vec<(String, Vec<usize>)>,
}

impl LabeledGraph {
    pub fn groups(&self) -> &[(String, Vec<usize>)] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&[usize]> {
        self.groups.iter().find(|(g, _)| g == name).map(|(_, v)| v.as_slice())
    }

    pub fn group_set(&self, name: &str) -> Option<MutantSet> {
        self.group(name).map(|vs| MutantSet::from_vertices(self.graph.n(), vs.iter().copied()))
    }

    /// Sidecar text: one `<group-name>: <id> <id> ...` line per group, 1-based.
    pub fn groups_text(&self) -> String {
        write_groups(&self.groups)
    }
}

pub fn write_groups(groups: &[(String, Vec<usize>)]) -> String {
    let mut out = String::new();
    for (name, ids) in groups {
        out.push_str(name);
        out.push(':');
        for v in ids {
            write!(out, " {}", v + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses a sidecar group file back into 0-based vertex lists.
pub fn parse_groups(text: &str) -> Result<Vec<(String, Vec<usize>)>, FamilyError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let perr = |msg: &str| FamilyError::GroupParse { line: i + 1, msg: msg.to_string() };
        let (name, rest) = line.split_once(':').ok_or_else(|| perr("expected `<name>: ids`"))?;
        let ids = rest
            .split_whitespace()
            .map(|t| match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(perr("bad vertex id")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((name.trim().to_string(), ids));
    }
    Ok(out)
}

pub fn generate(family: Family, seed: Option<u64>) -> Result<LabeledGraph, FamilyError> {
    let param = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(FamilyError::Param(msg.to_string())) };
    let (graph, groups) = match family {
        Family::Complete { n } => {
            param(n >= 1, "complete needs n >= 1")?;
            let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            (undirected(n, &edges), vec![])
        }
        Family::Cycle { n } => {
            param(n >= 3, "cycle needs n >= 3")?;
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            (undirected(n, &edges), vec![])
        }
        Family::Path { n } => {
            param(n >= 2, "path needs n >= 2")?;
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            (undirected(n, &edges), vec![])
        }
        Family::Star { k } => {
            param(k >= 1, "star needs k >= 1")?;
            let edges: Vec<_> = (1..=k).map(|l| (0, l)).collect();
            (undirected(k + 1, &edges), vec![("center".into(), vec![0]), ("leaves".into(), (1..=k).collect())])
        }
        Family::DoubleStar { k } => {
            param(k >= 1, "double_star needs k >= 1")?;
            double_star(k)
        }
        Family::DirSuppressor { k, a } => {
            param(k >= 2 && a >= 1, "dir_suppressor needs k >= 2 and a >= 1")?;
            dir_suppressor(k, a)
        }
        Family::UndirSuppressor { a, k } => {
            param(a >= 1 && k >= 1, "undir_suppressor needs a >= 1 and k >= 1")?;
            undir_suppressor(a, k)?
        }
        Family::RandomConnected { n, p } => {
            param(n >= 1, "random_connected needs n >= 1")?;
            param(p > 0.0 && p <= 1.0, "random_connected needs 0 < p <= 1")?;
            let seed = seed.ok_or(FamilyError::MissingSeed)?;
            (random_connected(n, p, seed)?, vec![])
        }
    };
    Ok(LabeledGraph { graph, family, groups })
}

fn undirected(n: usize, edges: &[(usize, usize)]) -> Graph {
    let mut lists = vec![Vec::new(); n];
    for &(u, v) in edges {
        lists[u].push(v);
        lists[v].push(u);
    }
    Graph::from_lists_unchecked(false, &lists)
}

type Groups = Vec<(String, Vec<usize>)>;

fn double_star(k: usize) -> (Graph, Groups) {
    let l1: Vec<usize> = (2..k + 2).collect();
    let l2: Vec<usize> = (k + 2..2 * k + 2).collect();
    let mut edges = vec![(0, 1)];
    edges.extend(l1.iter().map(|&l| (0, l)));
    edges.extend(l2.iter().map(|&l| (1, l)));
    let groups = vec![("x1".into(), vec![0]), ("x2".into(), vec![1]), ("L1".into(), l1), ("L2".into(), l2)];
    (undirected(2 * k + 2, &edges), groups)
}

fn dir_suppressor(k: usize, a: usize) -> (Graph, Groups) {
    let n = k * (a + 1);
    let w = |j: usize| j - 1; // j in 1..=ka
    let v = |i: usize| k * a + i - 1; // i in 1..=k
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
    // cycle w_1 ... w_ka v_k ... v_1 w_1
    for j in 1..k * a {
        lists[w(j)].push(w(j + 1));
    }
    lists[w(k * a)].push(v(k));
    for i in (2..=k).rev() {
        lists[v(i)].push(v(i - 1));
    }
    lists[v(1)].push(w(1));
    // I_i × {v_i}; the arc w_ka -> v_k is already a cycle arc
    for i in 1..=k {
        for j in (i - 1) * a + 1..=i * a {
            if !lists[w(j)].contains(&v(i)) {
                lists[w(j)].push(v(i));
            }
        }
    }
    let interval = |i: usize| ((i - 1) * a + 1..=i * a).map(w).collect::<Vec<_>>();
    let mut groups = Vec::new();
    for i in 1..=k {
        groups.push((format!("I_{i}"), interval(i)));
    }
    for i in 1..=k {
        let wi: Vec<usize> = (i..=k).flat_map(interval).collect();
        let vi: Vec<usize> = (i..=k).map(v).collect();
        let xi: Vec<usize> = wi.iter().chain(&vi).copied().collect();
        groups.push((format!("W_{i}"), wi));
        groups.push((format!("V_{i}"), vi));
        groups.push((format!("X_{i}"), xi));
    }
    (Graph::from_lists_unchecked(true, &lists), groups)
}

/// Block sizes `(|V0|, |V1|, |V2|, |V3|)` of `H_{a,k}`.
pub fn undir_suppressor_sizes(a: usize, k: usize) -> [usize; 4] {
    [a * k, a * a * k * k, a * a * k, a * a * k]
}

fn undir_suppressor(a: usize, k: usize) -> Result<(Graph, Groups), FamilyError> {
    let sizes = undir_suppressor_sizes(a, k);
    let starts = [0, sizes[0], sizes[0] + sizes[1], sizes[0] + sizes[1] + sizes[2]];
    let n: usize = sizes.iter().sum();
    let degrees = [sizes[1], sizes[0] + 1, k + 1, 1];
    let total: usize = (0..4).map(|i| sizes[i] * degrees[i]).sum();
    if total > u32::MAX as usize || n > u32::MAX as usize {
        return Err(FamilyError::Param("undir_suppressor instance too large".into()));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for i in 0..4 {
        for _ in 0..sizes[i] {
            offsets.push(offsets.last().unwrap() + degrees[i]);
        }
    }
    let mut adj: Vec<u32> = Vec::with_capacity(total);
    let block = |i: usize| (starts[i]..starts[i] + sizes[i]).map(|x| x as u32);
    for _ in 0..sizes[0] {
        adj.extend(block(1));
    }
    for t in 0..sizes[1] {
        adj.extend(block(0));
        adj.push((starts[2] + t / k) as u32);
    }
    for j in 0..sizes[2] {
        adj.extend((starts[1] + j * k..starts[1] + (j + 1) * k).map(|x| x as u32));
        adj.push((starts[3] + j) as u32);
    }
    for j in 0..sizes[3] {
        adj.push((starts[2] + j) as u32);
    }
    debug_assert_eq!(adj.len(), total);
    let groups = (0..4).map(|i| (format!("V{i}"), (starts[i]..starts[i] + sizes[i]).collect())).collect();
    Ok((Graph::from_csr_unchecked(false, offsets, adj), groups))
}

fn random_connected(n: usize, p: f64, seed: u64) -> Result<Graph, FamilyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_CONNECTED_RETRIES {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        let g = undirected(n, &edges);
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(FamilyError::RetriesExhausted { n, p })
}

/// Per-vertex weights of `H_{a,k}` for a fitness `r > 1`, stored per block.
#[derive(Debug, Clone)]
pub struct SigmaWeights {
    pub a: usize,
    pub k: usize,
    pub r: BigRational,
    pub sigma: [BigRational; 4],
    bounds: [usize; 4],
}

impl SigmaWeights {
    pub fn new(a: usize, k: usize, r: &BigRational) -> Result<Self, FamilyError> {
        if r <= &BigRational::one() {
            return Err(FamilyError::Param("sigma weights need r > 1".into()));
        }
        if a * a * k < 2 {
            return Err(FamilyError::Param("sigma weights need a²k > 1".into()));
        }
        let big = |x: usize| BigRational::from_integer(BigInt::from(x));
        let (ab, kb) = (big(a), big(k));
        let a2k1 = &ab * &ab * &kb - big(1);
        let sigma0 = r * (&ab * &kb + big(1)) / (&kb * &a2k1);
        let sigma2 = big(2) * r + &kb * &ab * r * r / &a2k1;
        let sizes = undir_suppressor_sizes(a, k);
        let mut bounds = [0; 4];
        let mut acc = 0;
        for i in 0..4 {
            acc += sizes[i];
            bounds[i] = acc;
        }
        Ok(SigmaWeights { a, k, r: r.clone(), sigma: [sigma0, big(1), sigma2, kb], bounds })
    }

    pub fn for_graph(h: &LabeledGraph, r: &BigRational) -> Result<Self, FamilyError> {
        match h.family {
            Family::UndirSuppressor { a, k } => Self::new(a, k, r),
            _ => Err(FamilyError::NotUndirSuppressor),
        }
    }

    pub fn n(&self) -> usize {
        self.bounds[3]
    }

    /// Block index (0..=3) of vertex `v`.
    #[inline]
    pub fn class(&self, v: usize) -> usize {
        self.bounds.iter().position(|&b| v < b).expect("vertex outside H_{a,k}")
    }

    pub fn weight(&self, v: usize) -> &BigRational {
        &self.sigma[self.class(v)]
    }

    pub fn potential(&self, s: &MutantSet) -> Result<BigRational, FamilyError> {
        if s.universe() != self.n() {
            return Err(FamilyError::VertexOutOfRange(s.universe()));
        }
        let mut counts = [0usize; 4];
        for v in s.iter() {
            counts[self.class(v)] += 1;
        }
        Ok(counts.iter().zip(&self.sigma).map(|(&c, w)| w * BigRational::from_integer(BigInt::from(c))).sum())
    }
}

/// `σ(S) = Σ_{v∈S} σ(v)` on an `undir_suppressor` instance.
pub fn sigma_potential(h: &LabeledGraph, r: &BigRational, s: &MutantSet) -> Result<BigRational, FamilyError> {
    if let Some(v) = s.iter().find(|&v| v >= h.graph.n()) {
        return Err(FamilyError::VertexOutOfRange(v));
    }
    if s.universe() != h.graph.n() {
        return Err(FamilyError::VertexOutOfRange(s.universe()));
    }
    SigmaWeights::for_graph(h, r)?.potential(s)
}
