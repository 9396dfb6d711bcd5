//! Graphs in augmented adjacency-list form, and the mutant sets that live on them.
//!
//! Vertices are 0-based `usize` indices inside the library. The text format,
//! group files and every CLI surface use 1-based ids; conversion happens only
//! at those boundaries.

use std::collections::VecDeque;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

pub const FORMAT_HEADER: &str = "moran-graph v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("consistency error: {0}")]
    Consistency(String),
}

/// A single failed structural invariant, as reported by [`check_adjacency`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NeighborOutOfRange { vertex: usize, neighbor: usize },
    SelfLoop { vertex: usize },
    DuplicateNeighbor { vertex: usize, neighbor: usize },
    Asymmetric { from: usize, to: usize },
    DegreeMismatch { vertex: usize, declared: usize, actual: usize },
    EdgeCountMismatch { declared: usize, actual: usize },
    MaxDegreeMismatch { declared: usize, actual: usize },
    OddDegreeSum { sum: usize },
}

impl std::fmt::Display for Violation {
    // 1-based ids, matching the text format.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Violation::NeighborOutOfRange { vertex, neighbor } => {
                write!(f, "vertex {}: neighbor {} out of range", vertex + 1, neighbor + 1)
            }
            Violation::SelfLoop { vertex } => write!(f, "vertex {}: self-loop", vertex + 1),
            Violation::DuplicateNeighbor { vertex, neighbor } => {
                write!(f, "vertex {}: duplicate neighbor {}", vertex + 1, neighbor + 1)
            }
            Violation::Asymmetric { from, to } => {
                write!(f, "edge {}-{} missing its reverse entry", from + 1, to + 1)
            }
            Violation::DegreeMismatch { vertex, declared, actual } => {
                write!(f, "vertex {}: declared degree {declared}, list has {actual}", vertex + 1)
            }
            Violation::EdgeCountMismatch { declared, actual } => {
                write!(f, "declared m={declared}, lists give {actual}")
            }
            Violation::MaxDegreeMismatch { declared, actual } => {
                write!(f, "declared delta={declared}, lists give {actual}")
            }
            Violation::OddDegreeSum { sum } => write!(f, "undirected degree sum {sum} is odd"),
        }
    }
}

/// Undirected or directed simple graph stored as compressed adjacency lists.
///
/// Adjacency order is whatever the constructor was given. For directed graphs
/// `neighbors` are out-neighbors and `in_neighbors` is kept alongside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    offsets: Vec<usize>,
    adj: Vec<u32>,
    in_offsets: Vec<usize>,
    in_adj: Vec<u32>,
    m: usize,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph from explicit adjacency lists, rejecting anything that
    /// breaks the structural invariants.
    pub fn from_adjacency(directed: bool, lists: Vec<Vec<usize>>) -> Result<Graph, GraphError> {
        let violations = check_adjacency(directed, &lists);
        if let Some(v) = violations.first() {
            return Err(GraphError::Consistency(v.to_string()));
        }
        Ok(Self::from_lists_unchecked(directed, &lists))
    }

    /// Undirected graph from an edge list; each edge `(u, v)` appends `v` to
    /// `u`'s list and `u` to `v`'s list, in edge order.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Graph, GraphError> {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::Consistency(format!("edge {}-{} out of range for n={n}", u + 1, v + 1)));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        Self::from_adjacency(false, lists)
    }

    /// Directed graph from an arc list, out-lists in arc order.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Graph, GraphError> {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in arcs {
            if u >= n || v >= n {
                return Err(GraphError::Consistency(format!("arc {}->{} out of range for n={n}", u + 1, v + 1)));
            }
            lists[u].push(v);
        }
        Self::from_adjacency(true, lists)
    }

    pub(crate) fn from_lists_unchecked(directed: bool, lists: &[Vec<usize>]) -> Graph {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut adj = Vec::with_capacity(total);
        for l in lists {
            adj.extend(l.iter().map(|&w| w as u32));
            offsets.push(adj.len());
        }
        Self::from_csr_unchecked(directed, offsets, adj)
    }

    /// Trusted constructor used by the family generators, which build very
    /// large graphs directly in compressed form.
    pub(crate) fn from_csr_unchecked(directed: bool, offsets: Vec<usize>, adj: Vec<u32>) -> Graph {
        let n = offsets.len() - 1;
        let max_degree = (0..n).map(|v| offsets[v + 1] - offsets[v]).max().unwrap_or(0);
        let m = if directed { adj.len() } else { adj.len() / 2 };
        let (in_offsets, in_adj) = if directed {
            let mut indeg = vec![0usize; n + 1];
            for &w in &adj {
                indeg[w as usize + 1] += 1;
            }
            for v in 0..n {
                indeg[v + 1] += indeg[v];
            }
            let mut fill = indeg.clone();
            let mut in_adj = vec![0u32; adj.len()];
            for u in 0..n {
                for &w in &adj[offsets[u]..offsets[u + 1]] {
                    in_adj[fill[w as usize]] = u as u32;
                    fill[w as usize] += 1;
                }
            }
            (indeg, in_adj)
        } else {
            (Vec::new(), Vec::new())
        };
        Graph { directed, offsets, adj, in_offsets, in_adj, m, max_degree }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    /// Degree of `v` (out-degree for directed graphs).
    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    /// Neighbors of `v` (out-neighbors for directed graphs), in input order.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Vertices with an arc into `v`; equal to `neighbors` when undirected.
    #[inline]
    pub fn in_neighbors(&self, v: usize) -> &[u32] {
        if self.directed {
            &self.in_adj[self.in_offsets[v]..self.in_offsets[v + 1]]
        } else {
            self.neighbors(v)
        }
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n()).map(|v| self.neighbors(v).iter().map(|&w| w as usize).collect()).collect()
    }

    /// Exact average degree `(Σ d(v)) / n`.
    pub fn average_degree(&self) -> BigRational {
        BigRational::new(BigInt::from(self.adj.len()), BigInt::from(self.n()))
    }

    /// True when every vertex is reachable from vertex 0, ignoring arc direction.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let seen = self.search(0, |g, v, out| {
            out.extend_from_slice(g.neighbors(v));
            if g.directed {
                out.extend_from_slice(g.in_neighbors(v));
            }
        });
        seen.iter().all(|&s| s)
    }

    /// Forward and reverse search from vertex 0. Undirected graphs reduce to
    /// plain connectivity.
    pub fn is_strongly_connected(&self) -> bool {
        if !self.directed {
            return self.is_connected();
        }
        if self.n() == 0 {
            return false;
        }
        let fwd = self.search(0, |g, v, out| out.extend_from_slice(g.neighbors(v)));
        let rev = self.search(0, |g, v, out| out.extend_from_slice(g.in_neighbors(v)));
        fwd.iter().chain(rev.iter()).all(|&s| s)
    }

    fn search(&self, root: usize, expand: impl Fn(&Graph, usize, &mut Vec<u32>)) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        let mut buf = Vec::new();
        while let Some(v) = queue.pop_front() {
            buf.clear();
            expand(self, v, &mut buf);
            for &w in &buf {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Connected for undirected graphs, strongly connected for directed ones:
    /// the hypothesis every process-level operation needs.
    pub fn is_process_connected(&self) -> bool {
        if self.directed {
            self.is_strongly_connected()
        } else {
            self.is_connected()
        }
    }

    /// Serializes to the `moran-graph v1` text format (1-based ids).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}").unwrap();
        writeln!(out, "directed {}", u8::from(self.directed)).unwrap();
        writeln!(out, "{} {} {}", self.n(), self.m, self.max_degree).unwrap();
        for v in 0..self.n() {
            write!(out, "{}: {}", v + 1, self.degree(v)).unwrap();
            for &w in self.neighbors(v) {
                write!(out, " {}", w + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the `moran-graph v1` text format and cross-checks every declared
    /// count against the lists.
    pub fn from_text(text: &str) -> Result<Graph, GraphError> {
        let doc = GraphDocument::parse(text)?;
        let mut violations = check_adjacency(doc.directed, &doc.lists);
        for (v, (&declared, list)) in doc.degrees.iter().zip(&doc.lists).enumerate() {
            if declared != list.len() {
                violations.push(Violation::DegreeMismatch { vertex: v, declared, actual: list.len() });
            }
        }
        let sum: usize = doc.lists.iter().map(Vec::len).sum();
        let actual_m = if doc.directed { sum } else { sum / 2 };
        if actual_m != doc.m {
            violations.push(Violation::EdgeCountMismatch { declared: doc.m, actual: actual_m });
        }
        let actual_delta = doc.lists.iter().map(Vec::len).max().unwrap_or(0);
        if actual_delta != doc.delta {
            violations.push(Violation::MaxDegreeMismatch { declared: doc.delta, actual: actual_delta });
        }
        match violations.first() {
            Some(v) => Err(GraphError::Consistency(v.to_string())),
            None => Ok(Self::from_lists_unchecked(doc.directed, &doc.lists)),
        }
    }
}

/// Syntactic content of a graph document before any consistency checks.
#[derive(Debug, Clone)]
struct GraphDocument {
    directed: bool,
    m: usize,
    delta: usize,
    degrees: Vec<usize>,
    lists: Vec<Vec<usize>>,
}

impl GraphDocument {
    fn parse(text: &str) -> Result<Self, GraphError> {
        let perr = |line: usize, msg: &str| GraphError::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty document"))?;
        if header.trim() != FORMAT_HEADER {
            return Err(perr(ln, "expected `moran-graph v1`"));
        }
        let (ln, dir_line) = lines.next().ok_or_else(|| perr(2, "missing `directed` line"))?;
        let directed = match dir_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["directed", "0"] => false,
            ["directed", "1"] => true,
            _ => return Err(perr(ln, "expected `directed <0|1>`")),
        };
        let (ln, counts) = lines.next().ok_or_else(|| perr(3, "missing `<n> <m> <delta>` line"))?;
        let nums = parse_ints(counts).ok_or_else(|| perr(ln, "expected three integers"))?;
        let [n, m, delta] = nums[..] else {
            return Err(perr(ln, "expected three integers"));
        };
        if n == 0 {
            return Err(perr(ln, "n must be at least 1"));
        }
        let mut degrees = Vec::with_capacity(n);
        let mut lists = Vec::with_capacity(n);
        for expect in 1..=n {
            let (ln, line) = lines.next().ok_or_else(|| perr(expect + 3, "missing adjacency line"))?;
            let (head, rest) = line.split_once(':').ok_or_else(|| perr(ln, "expected `<v>: ...`"))?;
            let v: usize = head.trim().parse().map_err(|_| perr(ln, "bad vertex id"))?;
            if v != expect {
                return Err(perr(ln, &format!("expected vertex {expect}, found {v}")));
            }
            let nums = parse_ints(rest).ok_or_else(|| perr(ln, "non-integer token"))?;
            let (&d, nbrs) = nums.split_first().ok_or_else(|| perr(ln, "missing degree"))?;
            if nbrs.iter().any(|&w| w == 0 || w > n) {
                return Err(perr(ln, "neighbor id out of range"));
            }
            degrees.push(d);
            lists.push(nbrs.iter().map(|&w| w - 1).collect());
        }
        for (ln, rest) in lines {
            if !rest.trim().is_empty() {
                return Err(perr(ln, "unexpected content after adjacency lines"));
            }
        }
        Ok(GraphDocument { directed, m, delta, degrees, lists })
    }
}

fn parse_ints(s: &str) -> Option<Vec<usize>> {
    s.split_whitespace().map(|t| t.parse().ok()).collect()
}

/// Lists every structural invariant broken by the given adjacency lists.
pub fn check_adjacency(directed: bool, lists: &[Vec<usize>]) -> Vec<Violation> {
    let n = lists.len();
    let mut out = Vec::new();
    let mut mark = vec![usize::MAX; n];
    for (v, list) in lists.iter().enumerate() {
        for &w in list {
            if w >= n {
                out.push(Violation::NeighborOutOfRange { vertex: v, neighbor: w });
                continue;
            }
            if w == v {
                out.push(Violation::SelfLoop { vertex: v });
            }
            if mark[w] == v {
                out.push(Violation::DuplicateNeighbor { vertex: v, neighbor: w });
            }
            mark[w] = v;
        }
    }
    if !directed {
        let sum: usize = lists.iter().map(Vec::len).sum();
        if sum % 2 == 1 {
            out.push(Violation::OddDegreeSum { sum });
        }
        let sets: Vec<std::collections::HashSet<usize>> = lists.iter().map(|l| l.iter().copied().collect()).collect();
        for (v, list) in lists.iter().enumerate() {
            for &w in list {
                if w < n && !sets[w].contains(&v) {
                    out.push(Violation::Asymmetric { from: v, to: w });
                }
            }
        }
    }
    out
}

/// Result of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub connected: bool,
    pub strongly_connected: Option<bool>,
    pub violations: Vec<Violation>,
}

pub fn validate(g: &Graph) -> ValidationReport {
    let mut violations = check_adjacency(g.directed, &g.adjacency_lists());
    let actual_delta = (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0);
    if actual_delta != g.max_degree {
        violations.push(Violation::MaxDegreeMismatch { declared: g.max_degree, actual: actual_delta });
    }
    ValidationReport {
        connected: g.is_connected(),
        strongly_connected: g.directed.then(|| g.is_strongly_connected()),
        violations,
    }
}

/// A set of vertices over a fixed universe `0..n`, with its cardinality cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MutantSet {
    n: usize,
    words: Vec<u64>,
    count: usize,
}

impl std::fmt::Debug for MutantSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl MutantSet {
    pub fn empty(n: usize) -> Self {
        MutantSet { n, words: vec![0; n.div_ceil(64)], count: 0 }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for v in 0..n {
            s.insert(v);
        }
        s
    }

    pub fn singleton(n: usize, v: usize) -> Self {
        let mut s = Self::empty(n);
        s.insert(v);
        s
    }

    pub fn from_vertices(n: usize, vs: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for v in vs {
            s.insert(v);
        }
        s
    }

    /// Bit `i` of `mask` selects vertex `i`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64 || mask == 0);
        let mut s = Self::empty(n);
        for v in 0..n.min(64) {
            if mask >> v & 1 == 1 {
                s.insert(v);
            }
        }
        s
    }

    /// Bitmask form; `None` when the universe exceeds 64 vertices.
    pub fn to_mask(&self) -> Option<u64> {
        (self.n <= 64).then(|| self.words.first().copied().unwrap_or(0))
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.n
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.n && self.words[v / 64] >> (v % 64) & 1 == 1
    }

    /// Returns false when `v` was already present.
    pub fn insert(&mut self, v: usize) -> bool {
        assert!(v < self.n, "vertex {v} outside universe of size {}", self.n);
        let (w, b) = (v / 64, 1u64 << (v % 64));
        if self.words[w] & b != 0 {
            return false;
        }
        self.words[w] |= b;
        self.count += 1;
        true
    }

    pub fn remove(&mut self, v: usize) -> bool {
        if !self.contains(v) {
            return false;
        }
        self.words[v / 64] &= !(1u64 << (v % 64));
        self.count -= 1;
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i * 64 + t)
            })
        })
    }

    pub fn complement(&self) -> Self {
        let mut s = Self::empty(self.n);
        for v in (0..self.n).filter(|&v| !self.contains(v)) {
            s.insert(v);
        }
        s
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut s = self.clone();
        for v in other.iter() {
            s.insert(v);
        }
        s
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self::from_vertices(self.n, self.iter().filter(|&v| !other.contains(v)))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}
