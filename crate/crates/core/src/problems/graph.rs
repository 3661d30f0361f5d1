use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Simple undirected unweighted graph on vertices `0..num_vertices`.
///
/// Edges are stored normalized as `(i, j)` with `i < j`, in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutGraph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl CutGraph {
    pub fn new(num_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::Domain("a graph needs at least one vertex".into()));
        }
        let mut seen = HashSet::new();
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a >= num_vertices || b >= num_vertices {
                return Err(Error::Domain(format!(
                    "edge ({a}, {b}) out of range for {num_vertices} vertices"
                )));
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::Domain(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            normalized.push(e);
        }
        Ok(CutGraph {
            num_vertices,
            edges: normalized,
        })
    }

    pub fn complete(num_vertices: usize) -> Result<Self> {
        let edges = (0..num_vertices).flat_map(|i| ((i + 1)..num_vertices).map(move |j| (i, j)));
        CutGraph::new(num_vertices, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        reached == self.num_vertices
    }

    pub fn is_cubic(&self) -> bool {
        self.degrees().iter().all(|&d| d == 3)
    }

    /// Number of edges whose endpoints differ in basis index `z`.
    pub fn cut_size(&self, z: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| ((z >> a) ^ (z >> b)) & 1 == 1)
            .count()
    }

    /// Parses the edge-list format: first data line is the vertex count, then
    /// one whitespace-separated `i j` pair per line. `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut num_vertices: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match num_vertices {
                None => {
                    if fields.len() != 1 {
                        return Err(Error::parse(line_no, "expected vertex count"));
                    }
                    let n = fields[0]
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("invalid vertex count `{}`", fields[0])))?;
                    num_vertices = Some(n);
                }
                Some(n) => {
                    if fields.len() != 2 {
                        return Err(Error::parse(line_no, "expected `i j` edge"));
                    }
                    let mut ends = [0usize; 2];
                    for (slot, f) in ends.iter_mut().zip(&fields) {
                        *slot = f
                            .parse()
                            .map_err(|_| Error::parse(line_no, format!("invalid vertex `{f}`")))?;
                    }
                    if ends[0] >= n || ends[1] >= n {
                        return Err(Error::parse(line_no, format!("vertex out of range 0..{n}")));
                    }
                    edges.push((ends[0], ends[1], line_no));
                }
            }
        }
        let n = num_vertices.ok_or_else(|| Error::parse(0, "missing vertex count"))?;
        let mut seen = HashSet::new();
        for &(a, b, line) in &edges {
            if a == b {
                return Err(Error::parse(line, "self-loop"));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::parse(line, "duplicate edge"));
            }
        }
        CutGraph::new(n, edges.into_iter().map(|(a, b, _)| (a, b)))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.num_vertices);
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CubicGraphOptions {
    pub max_attempts: u64,
}

impl Default for CubicGraphOptions {
    fn default() -> Self {
        CubicGraphOptions { max_attempts: 100_000 }
    }
}

/// Samples a connected simple 3-regular graph with the pairing (configuration)
/// model, rejecting loops, multi-edges and disconnected outcomes.
pub fn sample_cubic_graph(num_vertices: usize, seed: u64, opts: CubicGraphOptions) -> Result<CutGraph> {
    if num_vertices < 4 || num_vertices % 2 != 0 {
        return Err(Error::Domain(format!(
            "cubic graphs need an even vertex count >= 4, got {num_vertices}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..num_vertices).flat_map(|v| [v, v, v]).collect();
    'attempt: for _ in 0..opts.max_attempts {
        points.shuffle(&mut rng);
        let mut seen = HashSet::with_capacity(points.len() / 2);
        let mut edges = Vec::with_capacity(points.len() / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'attempt;
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        let graph = CutGraph {
            num_vertices,
            edges,
        };
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::GenerationFailed {
        attempts: opts.max_attempts,
        reason: format!("no connected simple cubic graph on {num_vertices} vertices"),
    })
}
