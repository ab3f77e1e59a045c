//! Loop algebras of finite bipartite graphs, their Fock-space realization by
//! generalized circular operators, the associated differential calculus, and a
//! finite-degree solver for free transport away from the quadratic potential.

pub mod calculus;
pub mod document;
pub mod error;
pub mod fock;
pub mod graph;
pub mod loop_series;
pub mod temperley_lieb;
pub mod transport;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, EdgeId, PerronData, VertexId};
pub use loop_series::{SeriesMatrix, TensorSeries, Word, WordSeries, C64};
