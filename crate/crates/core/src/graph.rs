//! Finite bipartite graphs with edge reversal and their Perron-Frobenius data.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub name: String,
    pub parity: Parity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub name: String,
    pub src: VertexId,
    pub dst: VertexId,
    pub opposite: EdgeId,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VertexDoc {
    pub id: String,
    pub parity: Parity,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EdgeDoc {
    pub id: String,
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opposite: Option<String>,
}

/// On-disk graph description. Edges without an `opposite` are undirected;
/// the reversed edge is synthesized as `<id>~`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphDocument {
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    vertex_index: BTreeMap<String, VertexId>,
    edge_index: BTreeMap<String, EdgeId>,
    out_edges: Vec<Vec<EdgeId>>,
}

impl BipartiteGraph {
    pub fn from_document(doc: &GraphDocument) -> Result<Self> {
        if doc.vertices.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut vertices = Vec::with_capacity(doc.vertices.len());
        let mut vertex_index = BTreeMap::new();
        for v in &doc.vertices {
            if vertex_index.insert(v.id.clone(), vertices.len()).is_some() {
                return Err(Error::DuplicateId(v.id.clone()));
            }
            vertices.push(Vertex { name: v.id.clone(), parity: v.parity });
        }
        let lookup = |name: &str| {
            vertex_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::UnknownVertex(name.to_string()))
        };

        let mut declared: BTreeMap<&str, &EdgeDoc> = BTreeMap::new();
        for e in &doc.edges {
            if declared.insert(e.id.as_str(), e).is_some() {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        let referenced: BTreeMap<&str, &str> = doc
            .edges
            .iter()
            .filter_map(|e| e.opposite.as_deref().map(|o| (o, e.id.as_str())))
            .collect();

        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_index: BTreeMap<String, EdgeId> = BTreeMap::new();
        let mut push = |edges: &mut Vec<Edge>, name: String, src, dst| -> Result<EdgeId> {
            if edge_index.contains_key(&name) {
                return Err(Error::DuplicateId(name));
            }
            let id = edges.len();
            edge_index.insert(name.clone(), id);
            edges.push(Edge { name, src, dst, opposite: usize::MAX });
            Ok(id)
        };

        for e in &doc.edges {
            let src = lookup(&e.src)?;
            let dst = lookup(&e.dst)?;
            if vertices[src].parity == vertices[dst].parity {
                return Err(Error::NonBipartite { edge: e.id.clone() });
            }
            match (&e.opposite, referenced.get(e.id.as_str())) {
                (None, None) => {
                    let (s, t) = if vertices[src].parity == Parity::Plus { (src, dst) } else { (dst, src) };
                    let a = push(&mut edges, e.id.clone(), s, t)?;
                    let b = push(&mut edges, format!("{}~", e.id), t, s)?;
                    edges[a].opposite = b;
                    edges[b].opposite = a;
                }
                (Some(o), _) => {
                    let other = declared
                        .get(o.as_str())
                        .ok_or_else(|| Error::UnknownEdge(o.clone()))?;
                    let back_ok = match &other.opposite {
                        Some(b) => b == &e.id,
                        None => true,
                    };
                    if !back_ok || other.src != e.dst || other.dst != e.src || o == &e.id {
                        return Err(Error::BrokenOpposite { edge: e.id.clone() });
                    }
                    push(&mut edges, e.id.clone(), src, dst)?;
                }
                (None, Some(_)) => {
                    push(&mut edges, e.id.clone(), src, dst)?;
                }
            }
        }
        for e in &doc.edges {
            let partner = e
                .opposite
                .as_deref()
                .or_else(|| referenced.get(e.id.as_str()).copied());
            if let Some(o) = partner {
                let a = edge_index[&e.id];
                let b = edge_index[o];
                edges[a].opposite = b;
            }
        }
        for (i, e) in edges.iter().enumerate() {
            let o = e.opposite;
            if o >= edges.len() || edges[o].opposite != i {
                return Err(Error::BrokenOpposite { edge: e.name.clone() });
            }
        }

        let mut out_edges = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            out_edges[e.src].push(i);
        }
        let g = BipartiteGraph { vertices, edges, vertex_index, edge_index, out_edges };
        g.check_connected()?;
        Ok(g)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }

    /// Document listing every directed edge with its opposite.
    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexDoc { id: v.name.clone(), parity: v.parity })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    id: e.name.clone(),
                    src: self.vertices[e.src].name.clone(),
                    dst: self.vertices[e.dst].name.clone(),
                    opposite: Some(self.edges[e.opposite].name.clone()),
                })
                .collect(),
        }
    }

    /// Path graph A_n: vertices v1..vn alternating +,-, edges e_i joining v_i and v_{i+1}.
    pub fn a_n(n: usize) -> Self {
        assert!(n >= 2, "A_n needs at least two vertices");
        let vertices = (1..=n)
            .map(|i| VertexDoc {
                id: format!("v{i}"),
                parity: if i % 2 == 1 { Parity::Plus } else { Parity::Minus },
            })
            .collect();
        let edges = (1..n)
            .map(|i| EdgeDoc {
                id: format!("e{i}"),
                src: format!("v{i}"),
                dst: format!("v{}", i + 1),
                opposite: None,
            })
            .collect();
        Self::from_document(&GraphDocument { vertices, edges }).expect("A_n is a valid graph")
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &e in &self.out_edges[v] {
                let w = self.edges[e].dst;
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(Error::Disconnected { vertex: self.vertices[v].name.clone() }),
            None => Ok(()),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.vertices[v]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn source(&self, e: EdgeId) -> VertexId {
        self.edges[e].src
    }

    #[inline]
    pub fn target(&self, e: EdgeId) -> VertexId {
        self.edges[e].dst
    }

    #[inline]
    pub fn opposite(&self, e: EdgeId) -> EdgeId {
        self.edges[e].opposite
    }

    pub fn parity(&self, v: VertexId) -> Parity {
        self.vertices[v].parity
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn edge_id(&self, name: &str) -> Result<EdgeId> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    /// E_+: edges leaving a positive vertex.
    pub fn positive_edges(&self) -> Vec<EdgeId> {
        (0..self.edges.len())
            .filter(|&e| self.parity(self.source(e)) == Parity::Plus)
            .collect()
    }

    pub fn count_parity(&self, p: Parity) -> usize {
        self.vertices.iter().filter(|v| v.parity == p).count()
    }

    /// Whether consecutive edges compose.
    pub fn is_path(&self, edges: &[EdgeId]) -> bool {
        edges.windows(2).all(|w| self.target(w[0]) == self.source(w[1]))
    }

    pub fn is_loop(&self, edges: &[EdgeId]) -> bool {
        match (edges.first(), edges.last()) {
            (Some(&a), Some(&b)) => self.is_path(edges) && self.target(b) == self.source(a),
            _ => true,
        }
    }

    /// Symmetric adjacency matrix; entry counts edges between the two vertices.
    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let n = self.vertices.len();
        let mut a = vec![vec![0.0; n]; n];
        for e in &self.edges {
            a[e.src][e.dst] += 1.0;
        }
        a
    }

    /// All paths with `len` edges, in lexicographic edge order.
    pub fn paths(&self, len: usize) -> Vec<Vec<EdgeId>> {
        let mut out: Vec<Vec<EdgeId>> = if len == 0 {
            return vec![Vec::new()];
        } else {
            (0..self.edges.len()).map(|e| vec![e]).collect()
        };
        for _ in 1..len {
            let mut next = Vec::new();
            for p in &out {
                let end = self.target(*p.last().unwrap());
                for &e in &self.out_edges[end] {
                    let mut q = p.clone();
                    q.push(e);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Loops with `len` edges based at `v` (or anywhere when `v` is `None`).
    pub fn loops(&self, len: usize, v: Option<VertexId>) -> Vec<Vec<EdgeId>> {
        self.paths(len)
            .into_iter()
            .filter(|p| {
                !p.is_empty()
                    && self.target(*p.last().unwrap()) == self.source(p[0])
                    && v.map_or(true, |v| self.source(p[0]) == v)
            })
            .collect()
    }
}

/// Spectral data of a graph. Carries the graph so that downstream code only
/// needs this one handle.
#[derive(Debug, Clone)]
pub struct PerronData {
    graph: Arc<BipartiteGraph>,
    pub delta: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

/// Power iteration on A² from the all-ones vector.
///
/// A² splits into a block per parity class, so the two halves of the iterate
/// converge independently; the negative half is rebuilt from the positive one
/// as A·x₊/δ to get an honest eigenvector of A.
pub fn perron(graph: &BipartiteGraph, tol: f64, max_iter: usize) -> Result<PerronData> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let n = graph.num_vertices();
    let a = graph.adjacency();
    let plus: Vec<bool> = (0..n).map(|v| graph.parity(v) == Parity::Plus).collect();

    let mut x = vec![1.0; n];
    let mut prev_rq = f64::NAN;
    for it in 1..=max_iter {
        let ax = mat_vec(&a, &x);
        let a2x = mat_vec(&a, &ax);
        let rq = dot(&x, &a2x) / dot(&x, &x);
        let norm = a2x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = a2x.iter().map(|v| v / norm).collect();

        if (rq - prev_rq).abs() < tol {
            let delta = rq.sqrt();
            let mut mu: Vec<f64> = x.clone();
            let ax = mat_vec(&a, &x);
            for v in 0..n {
                if !plus[v] {
                    mu[v] = ax[v] / delta;
                }
            }
            let top = mu.iter().fold(0.0f64, |m, v| m.max(*v));
            for m in &mut mu {
                *m /= top;
            }
            let amu = mat_vec(&a, &mu);
            let residual = amu
                .iter()
                .zip(&mu)
                .fold(0.0f64, |m, (p, q)| m.max((p - delta * q).abs()));
            if residual <= tol * delta {
                return Ok(PerronData::from_parts(graph, delta, mu, it, residual));
            }
        }
        prev_rq = rq;
    }
    Err(Error::NoConvergence { iterations: max_iter })
}

impl PerronData {
    pub fn new(graph: &BipartiteGraph) -> Result<Self> {
        perron(graph, DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    /// Builds the data from an externally supplied eigenpair.
    pub fn from_parts(graph: &BipartiteGraph, delta: f64, mu: Vec<f64>, iterations: usize, residual: f64) -> Self {
        let sigma: Vec<f64> = graph
            .edges()
            .iter()
            .map(|e| (mu[e.dst] / mu[e.src]).sqrt())
            .collect();
        let lambda = sigma.iter().map(|s| s * s).collect();
        PerronData {
            graph: Arc::new(graph.clone()),
            delta,
            mu,
            sigma,
            lambda,
            iterations,
            residual,
        }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    #[inline]
    pub fn sigma(&self, e: EdgeId) -> f64 {
        self.sigma[e]
    }

    #[inline]
    pub fn lambda(&self, e: EdgeId) -> f64 {
        self.lambda[e]
    }

    pub fn sigma_of(&self, name: &str) -> Result<f64> {
        Ok(self.sigma[self.graph.edge_id(name)?])
    }

    /// ‖e‖² in the Fock space.
    #[inline]
    pub fn edge_norm_sq(&self, e: EdgeId) -> f64 {
        1.0 / self.sigma[e]
    }

    /// max_v |(Aμ)_v − δμ_v|
    pub fn eigen_residual(&self) -> f64 {
        let amu = mat_vec(&self.graph.adjacency(), &self.mu);
        amu.iter()
            .zip(&self.mu)
            .fold(0.0f64, |m, (p, q)| m.max((p - self.delta * q).abs()))
    }
}
