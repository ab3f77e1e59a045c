use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::graph::{BipartiteGraph, EdgeId, VertexId};

pub type Letters = SmallVec<[EdgeId; 12]>;

/// A finite edge sequence with a base vertex. For non-empty words the base is
/// the source of the first edge; the empty word at `v` is the unit at `v`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Word {
    edges: Letters,
    base: VertexId,
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.edges
            .len()
            .cmp(&other.edges.len())
            .then_with(|| self.edges.cmp(&other.edges))
            .then_with(|| self.base.cmp(&other.base))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn empty(base: VertexId) -> Self {
        Word { edges: SmallVec::new(), base }
    }

    /// Non-empty edge list; base taken from the first edge.
    pub fn from_edges(graph: &BipartiteGraph, edges: &[EdgeId]) -> Self {
        assert!(!edges.is_empty(), "use Word::empty for the empty word");
        Word { edges: SmallVec::from_slice(edges), base: graph.source(edges[0]) }
    }

    /// Edge list with an explicit base used when `edges` is empty.
    pub fn with_base(graph: &BipartiteGraph, edges: &[EdgeId], base: VertexId) -> Self {
        if edges.is_empty() {
            Word::empty(base)
        } else {
            Word::from_edges(graph, edges)
        }
    }

    pub fn letter(graph: &BipartiteGraph, e: EdgeId) -> Self {
        Word::from_edges(graph, &[e])
    }

    #[inline]
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    #[inline]
    pub fn base(&self) -> VertexId {
        self.base
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Endpoint: target of the last edge, or the base for the empty word.
    pub fn end(&self, graph: &BipartiteGraph) -> VertexId {
        self.edges.last().map_or(self.base, |&e| graph.target(e))
    }

    pub fn is_path(&self, graph: &BipartiteGraph) -> bool {
        graph.is_path(&self.edges)
    }

    pub fn is_loop(&self, graph: &BipartiteGraph) -> bool {
        self.is_path(graph) && self.end(graph) == self.base
    }

    /// Path concatenation; `None` when the endpoints do not meet.
    pub fn concat(&self, other: &Word, graph: &BipartiteGraph) -> Option<Word> {
        if self.end(graph) != other.base {
            return None;
        }
        Some(self.concat_unchecked(other))
    }

    /// Operator-level product: the empty word is the identity whatever its
    /// base, non-empty words must meet end to start.
    pub fn compose(&self, other: &Word, graph: &BipartiteGraph) -> Option<Word> {
        if self.edges.is_empty() {
            return Some(other.clone());
        }
        if other.edges.is_empty() {
            return Some(self.clone());
        }
        self.concat(other, graph)
    }

    pub fn concat_unchecked(&self, other: &Word) -> Word {
        if self.edges.is_empty() {
            return other.clone();
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Word { edges, base: self.base }
    }

    /// e₁⋯e_n ↦ e_n°⋯e₁°
    pub fn reversed_opposite(&self, graph: &BipartiteGraph) -> Word {
        if self.edges.is_empty() {
            return self.clone();
        }
        let edges: Letters = self.edges.iter().rev().map(|&e| graph.opposite(e)).collect();
        let base = graph.source(edges[0]);
        Word { edges, base }
    }

    /// Moves the last `k` letters to the front.
    pub fn rotate_right(&self, graph: &BipartiteGraph, k: usize) -> Word {
        let n = self.edges.len();
        if n == 0 || k % n == 0 {
            return self.clone();
        }
        let k = k % n;
        let mut edges: Letters = SmallVec::with_capacity(n);
        edges.extend_from_slice(&self.edges[n - k..]);
        edges.extend_from_slice(&self.edges[..n - k]);
        let base = graph.source(edges[0]);
        Word { edges, base }
    }

    pub fn display(&self, graph: &BipartiteGraph) -> String {
        if self.edges.is_empty() {
            return format!("1@{}", graph.vertex(self.base).name);
        }
        self.edges
            .iter()
            .map(|&e| graph.edge(e).name.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.edges.is_empty() {
            return write!(f, "1@{}", self.base);
        }
        let parts: Vec<String> = self.edges.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}
