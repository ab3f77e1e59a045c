//! JSON documents for series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::loop_series::{Word, WordSeries, C64};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TermDoc {
    pub word: Vec<String>,
    /// Vertex of an empty word.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GradedDoc {
    #[serde(default)]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_degree: Option<usize>,
    pub terms: Vec<TermDoc>,
}

/// Either a bare term list (grading 0) or a graded object.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SeriesDocument {
    Bare(Vec<TermDoc>),
    Graded(GradedDoc),
}

pub fn parse_word(graph: &BipartiteGraph, names: &[String], base: Option<&str>) -> Result<Word> {
    let edges = names
        .iter()
        .map(|n| graph.edge_id(n.trim()))
        .collect::<Result<Vec<_>>>()?;
    if edges.is_empty() {
        let b = base.ok_or_else(|| Error::Document("empty word needs a base vertex".into()))?;
        return Ok(Word::empty(graph.vertex_id(b)?));
    }
    if !graph.is_path(&edges) {
        return Err(Error::NotAPath(names.join(",")));
    }
    Ok(Word::from_edges(graph, &edges))
}

/// Comma-separated edge names.
pub fn parse_word_list(graph: &BipartiteGraph, text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|n| graph.edge_id(n.trim()))
        .collect()
}

pub fn series_from_document(doc: &SeriesDocument, graph: &BipartiteGraph) -> Result<WordSeries> {
    let (k, trunc, terms) = match doc {
        SeriesDocument::Bare(t) => (0, None, t),
        SeriesDocument::Graded(g) => (g.k, g.trunc_degree, &g.terms),
    };
    let mut s = WordSeries::graded(k);
    for t in terms {
        let w = parse_word(graph, &t.word, t.base.as_deref())?;
        s.add_term(w, C64::new(t.re, t.im));
    }
    Ok(s.with_trunc(trunc))
}

pub fn series_to_document(x: &WordSeries, graph: &BipartiteGraph) -> SeriesDocument {
    let terms = x
        .iter()
        .map(|(w, a)| TermDoc {
            word: w.edges().iter().map(|&e| graph.edge(e).name.clone()).collect(),
            base: w.is_empty().then(|| graph.vertex(w.base()).name.clone()),
            re: a.re,
            im: a.im,
        })
        .collect();
    SeriesDocument::Graded(GradedDoc { k: x.k, trunc_degree: x.trunc, terms })
}

pub fn parse_series(text: &str, graph: &BipartiteGraph) -> Result<WordSeries> {
    let doc: SeriesDocument = serde_json::from_str(text)?;
    series_from_document(&doc, graph)
}
