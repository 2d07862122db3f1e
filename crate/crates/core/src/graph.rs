//! Simple undirected graphs, random regular sampling, girth and edge-list I/O.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default number of whole-sample restarts for [`random_regular`].
pub const DEFAULT_RESTART_BUDGET: usize = 10_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid degree {deg} for {n} vertices (need n*deg even and deg < n)")]
    InvalidDegree { n: usize, deg: usize },
    #[error("random regular sampling gave up after {0} restarts")]
    RetryExhausted(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) references a vertex outside 0..{n}")]
    VertexOutOfRange { u: usize, v: usize, n: usize },
    #[error("graph must have at least one vertex")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Simple undirected graph on vertices `0..n`.
///
/// Edges are stored as `(u, v)` with `u < v`; adjacency lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::VertexOutOfRange { u: a, v: b, n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
            stored.push((u, v));
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { n, edges: stored, adjacency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edge set sorted lexicographically, independent of insertion order.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }

    /// Returns `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.n).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::new(n, edges).expect("complete graph is simple")
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle is simple")
    }

    pub fn path(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
    }

    /// Star `K_{1,leaves}` with center 0.
    pub fn star(leaves: usize) -> Self {
        Self::new(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("star is simple")
    }

    /// The Heawood graph: 14 vertices, 3-regular, girth 6, edge-transitive.
    pub fn heawood() -> Self {
        let mut edges: Vec<(usize, usize)> = (0..14).map(|i| (i, (i + 1) % 14)).collect();
        edges.extend((0..14).step_by(2).map(|i| (i, (i + 5) % 14)));
        Self::new(14, edges).expect("Heawood graph is simple")
    }

    /// Depth-`depth` neighborhood of an edge in a `degree`-regular tree.
    ///
    /// Vertices 0 and 1 are the roots joined by the central edge; every
    /// non-leaf vertex has exactly `degree` neighbors.
    pub fn regular_edge_tree(degree: usize, depth: usize) -> Self {
        assert!(degree >= 1, "degree must be positive");
        let branching = degree - 1;
        let mut edges = vec![(0, 1)];
        let mut frontier = vec![0, 1];
        let mut next_id = 2;
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * branching);
            for &parent in &frontier {
                for _ in 0..branching {
                    edges.push((parent, next_id));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            frontier = next;
        }
        Self::new(next_id, edges).expect("tree is simple")
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for (u, v) in &self.edges {
            writeln!(f, "{u} {v}")?;
        }
        Ok(())
    }
}

/// Samples a uniform-ish simple `deg`-regular graph on `n` vertices.
///
/// Half-edges are paired uniformly at random. Pairs that would create a
/// self-loop or a repeated edge are returned to the pool and re-paired; if the
/// leftover pool admits no valid pair the whole sample is discarded.
pub fn random_regular(n: usize, deg: usize, seed: u64) -> Result<Graph, GraphError> {
    random_regular_with_budget(n, deg, seed, DEFAULT_RESTART_BUDGET)
}

pub fn random_regular_with_budget(
    n: usize,
    deg: usize,
    seed: u64,
    max_restarts: usize,
) -> Result<Graph, GraphError> {
    if n == 0 || deg >= n || (n * deg) % 2 == 1 {
        return Err(GraphError::InvalidDegree { n, deg });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..max_restarts.max(1) {
        if let Some(edges) = try_pairing(n, deg, &mut rng) {
            return Graph::new(n, edges);
        }
    }
    Err(GraphError::RetryExhausted(max_restarts))
}

fn try_pairing(n: usize, deg: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(usize, usize)>> {
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * deg / 2);
    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(n * deg / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(deg)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = if pair[0] < pair[1] { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
            if u != v && present.insert((u, v)) {
                edges.push((u, v));
            } else {
                *leftover.entry(u).or_default() += 1;
                *leftover.entry(v).or_default() += 1;
            }
        }
        if leftover.is_empty() {
            break;
        }
        if !has_valid_pair(&leftover, &present) {
            return None;
        }
        stubs = leftover
            .iter()
            .flat_map(|(&v, &count)| std::iter::repeat(v).take(count))
            .collect();
    }
    Some(edges)
}

fn has_valid_pair(leftover: &BTreeMap<usize, usize>, present: &HashSet<(usize, usize)>) -> bool {
    let verts: Vec<usize> = leftover.keys().copied().collect();
    verts
        .iter()
        .enumerate()
        .any(|(i, &u)| verts[i + 1..].iter().any(|&v| !present.contains(&(u, v))))
}

/// Length of the shortest cycle, counted in vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Girth {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Girth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Girth::Finite(g) => write!(f, "{g}"),
            Girth::Infinite => write!(f, "inf"),
        }
    }
}

/// Girth via breadth-first search from every vertex.
pub fn girth(g: &Graph) -> Girth {
    let n = g.n();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        dist.fill(usize::MAX);
        dist[root] = 0;
        parent[root] = usize::MAX;
        queue.clear();
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            // no shorter cycle can be closed from this depth on
            if 2 * dist[u] + 1 >= best {
                break;
            }
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                }
            }
        }
    }
    if best == usize::MAX {
        Girth::Infinite
    } else {
        Girth::Finite(best)
    }
}

/// Parses the edge-list text format: first line `n`, then `u v` per line.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = |tok: &str| {
            tok.parse::<usize>().map_err(|e| GraphError::Parse {
                line: line_no,
                msg: format!("bad integer {tok:?}: {e}"),
            })
        };
        let mut toks = line.split_whitespace();
        match n {
            None => {
                let count = parse(toks.next().unwrap_or_default())?;
                if toks.next().is_some() {
                    return Err(GraphError::Parse { line: line_no, msg: "expected vertex count".into() });
                }
                if count == 0 {
                    return Err(GraphError::Parse { line: line_no, msg: "vertex count must be positive".into() });
                }
                n = Some(count);
            }
            Some(count) => {
                let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
                    return Err(GraphError::Parse { line: line_no, msg: "expected \"u v\"".into() });
                };
                let (a, b) = (parse(a)?, parse(b)?);
                if a == b {
                    return Err(GraphError::SelfLoop(a));
                }
                if a >= count || b >= count {
                    return Err(GraphError::Parse {
                        line: line_no,
                        msg: format!("vertex out of range 0..{count}"),
                    });
                }
                let key = (a.min(b), a.max(b));
                if !seen.insert(key) {
                    return Err(GraphError::DuplicateEdge(key.0, key.1));
                }
                edges.push(key);
            }
        }
    }
    let n = n.ok_or(GraphError::Parse { line: 0, msg: "missing vertex count".into() })?;
    Graph::new(n, edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    parse_edge_list(&fs::read_to_string(path)?)
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    fs::write(path, g.to_string())?;
    Ok(())
}
