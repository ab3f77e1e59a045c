#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use planar_transport::document::parse_series;
use planar_transport::{BipartiteGraph, EdgeId, PerronData, Word, WordSeries};

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn a_n(n: usize) -> PerronData {
    PerronData::new(&BipartiteGraph::a_n(n)).unwrap()
}

pub fn data_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn graph_file(name: &str) -> PerronData {
    let text = std::fs::read_to_string(data_path(&format!("graphs/{name}.json"))).unwrap();
    PerronData::new(&BipartiteGraph::from_json(&text).unwrap()).unwrap()
}

pub fn fixture(name: &str, pd: &PerronData) -> WordSeries {
    let text = std::fs::read_to_string(data_path(&format!("series/{name}.json"))).unwrap();
    parse_series(&text, pd.graph()).unwrap()
}

/// Star with three leaves (the D4 diagram).
pub fn star() -> PerronData {
    let doc = r#"{"vertices":[{"id":"c","parity":"+"},{"id":"a","parity":"-"},{"id":"b","parity":"-"},{"id":"d","parity":"-"}],
        "edges":[{"id":"x","src":"c","dst":"a"},{"id":"y","src":"c","dst":"b"},{"id":"z","src":"c","dst":"d"}]}"#;
    PerronData::new(&BipartiteGraph::from_json(doc).unwrap()).unwrap()
}

/// Two vertices joined by a double edge, with a pendant vertex.
pub fn double_edge() -> PerronData {
    let doc = r#"{"vertices":[{"id":"p","parity":"+"},{"id":"q","parity":"-"},{"id":"r","parity":"+"}],
        "edges":[{"id":"s","src":"p","dst":"q"},{"id":"t","src":"p","dst":"q"},{"id":"u","src":"r","dst":"q"}]}"#;
    PerronData::new(&BipartiteGraph::from_json(doc).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_loop(pd: &PerronData, len: usize, base: Option<usize>, rng: &mut ChaCha8Rng) -> Option<Vec<EdgeId>> {
    let loops = pd.graph().loops(len, base);
    if loops.is_empty() {
        return None;
    }
    Some(loops[rng.gen_range(0..loops.len())].clone())
}

pub fn random_coeff(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// A few loops of even length in 2..=max_len, all based at `base` when given.
pub fn random_series(pd: &PerronData, terms: usize, max_len: usize, base: Option<usize>, rng: &mut ChaCha8Rng) -> WordSeries {
    let g = pd.graph();
    let mut x = WordSeries::new();
    for _ in 0..terms {
        let len = 2 * rng.gen_range(1..=max_len / 2);
        if let Some(l) = random_loop(pd, len, base, rng) {
            let a = random_coeff(rng);
            x.add_term(Word::from_edges(g, &l), a);
        }
    }
    x
}

/// Random grading-k element: loops of length 2k + {0, 2, 4}.
pub fn random_graded(pd: &PerronData, k: usize, rng: &mut ChaCha8Rng) -> WordSeries {
    let g = pd.graph();
    let mut x = WordSeries::graded(k);
    for _ in 0..3 {
        let len = 2 * k + 2 * rng.gen_range(0..3);
        if len == 0 {
            let v = rng.gen_range(0..g.num_vertices());
            x.add_term(Word::empty(v), random_coeff(rng));
            continue;
        }
        if let Some(l) = random_loop(pd, len, None, rng) {
            let a = random_coeff(rng);
            x.add_term(Word::from_edges(g, &l), a);
        }
    }
    x
}
