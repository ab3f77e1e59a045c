use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::graph::{BipartiteGraph, EdgeId};

use super::series::{C64, PRUNE};
use super::word::Word;
use super::WordSeries;

/// Element of 𝒫⊗𝒫^op as a sparse series over (left, right) word pairs.
/// Empty legs act as the identity operator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorSeries {
    terms: BTreeMap<(Word, Word), C64>,
}

impl TensorSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, left: Word, right: Word, coeff: C64) {
        match self.terms.entry((left, right)) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().norm() < PRUNE {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if coeff.norm() >= PRUNE {
                    v.insert(coeff);
                }
            }
        }
    }

    pub fn get(&self, left: &Word, right: &Word) -> C64 {
        self.terms.get(&(left.clone(), right.clone())).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Word, Word), &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::new();
        for ((l, r), a) in &self.terms {
            out.add_term(l.clone(), r.clone(), a * s);
        }
        out
    }

    pub fn axpy(&mut self, s: C64, other: &TensorSeries) {
        for ((l, r), a) in &other.terms {
            self.add_term(l.clone(), r.clone(), a * s);
        }
    }

    /// (a⊗b)·(c⊗d) = ac⊗db, the product of 𝒫⊗𝒫^op.
    pub fn mul(&self, other: &TensorSeries, graph: &BipartiteGraph) -> Self {
        let mut out = Self::new();
        for ((a, b), x) in &self.terms {
            for ((c, d), y) in &other.terms {
                if let (Some(ac), Some(db)) = (a.compose(c, graph), d.compose(b, graph)) {
                    out.add_term(ac, db, x * y);
                }
            }
        }
        out
    }

    /// Bimodule action x·(a⊗b)·y = xa⊗by.
    pub fn act(&self, x: &WordSeries, y: &WordSeries, graph: &BipartiteGraph) -> Self {
        let mut out = Self::new();
        for ((a, b), s) in &self.terms {
            for (u, p) in x.iter() {
                let Some(ua) = u.compose(a, graph) else { continue };
                for (v, q) in y.iter() {
                    if let Some(bv) = b.compose(v, graph) {
                        out.add_term(ua.clone(), bv, s * p * q);
                    }
                }
            }
        }
        out
    }

    /// Σ a·f(b) over terms a⊗b.
    pub fn contract_right_leg(&self, mut f: impl FnMut(&Word) -> C64) -> WordSeries {
        let mut out = WordSeries::new();
        let mut cache: BTreeMap<&Word, C64> = BTreeMap::new();
        for ((a, b), s) in &self.terms {
            let v = *cache.entry(b).or_insert_with(|| f(b));
            out.add_term(a.clone(), s * v);
        }
        out
    }

    /// Σ f(a)·b over terms a⊗b.
    pub fn contract_left_leg(&self, mut f: impl FnMut(&Word) -> C64) -> WordSeries {
        let mut out = WordSeries::new();
        let mut cache: BTreeMap<&Word, C64> = BTreeMap::new();
        for ((a, b), s) in &self.terms {
            let v = *cache.entry(a).or_insert_with(|| f(a));
            out.add_term(b.clone(), s * v);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &TensorSeries) -> f64 {
        let mut m = 0.0f64;
        for (k, a) in &self.terms {
            m = m.max((a - other.terms.get(k).copied().unwrap_or_default()).norm());
        }
        for (k, b) in &other.terms {
            if !self.terms.contains_key(k) {
                m = m.max(b.norm());
            }
        }
        m
    }

    /// Σ |coeff|·ω(a)·ω(b) for a per-letter weight ω.
    pub fn weighted_norm(&self, weights: &[f64]) -> f64 {
        let w = |x: &Word| x.edges().iter().map(|&e| weights[e]).product::<f64>();
        self.terms.iter().map(|((a, b), s)| s.norm() * w(a) * w(b)).sum()
    }

    pub fn max_total_degree(&self) -> Option<usize> {
        self.terms.keys().map(|(a, b)| a.degree() + b.degree()).max()
    }
}

/// Sparse E×E matrix of tensor series.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeriesMatrix {
    pub n: usize,
    entries: BTreeMap<(EdgeId, EdgeId), TensorSeries>,
}

impl SeriesMatrix {
    pub fn new(n: usize) -> Self {
        SeriesMatrix { n, entries: BTreeMap::new() }
    }

    pub fn set(&mut self, e: EdgeId, f: EdgeId, t: TensorSeries) {
        if t.is_empty() {
            self.entries.remove(&(e, f));
        } else {
            self.entries.insert((e, f), t);
        }
    }

    pub fn get(&self, e: EdgeId, f: EdgeId) -> Option<&TensorSeries> {
        self.entries.get(&(e, f))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(EdgeId, EdgeId), &TensorSeries)> {
        self.entries.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Scalar matrix with entries s·(1⊗1).
    pub fn scalar(n: usize, values: &BTreeMap<(EdgeId, EdgeId), C64>, graph: &BipartiteGraph) -> Self {
        let mut m = Self::new(n);
        for (&(e, f), &s) in values {
            let mut t = TensorSeries::new();
            t.add_term(Word::empty(graph.source(e)), Word::empty(graph.target(e)), s);
            m.set(e, f, t);
        }
        m
    }

    /// (A#B)_{ef} = Σ_h A_{eh}·B_{hf} with the 𝒫⊗𝒫^op product.
    pub fn hash_compose(&self, other: &SeriesMatrix, graph: &BipartiteGraph) -> SeriesMatrix {
        let mut out = SeriesMatrix::new(self.n);
        let mut acc: BTreeMap<(EdgeId, EdgeId), TensorSeries> = BTreeMap::new();
        for (&(e, h), a) in &self.entries {
            for (&(h2, f), b) in other.entries.range((h, 0)..=(h, usize::MAX)) {
                debug_assert_eq!(h, h2);
                let p = a.mul(b, graph);
                acc.entry((e, f)).or_default().axpy(C64::new(1.0, 0.0), &p);
            }
        }
        for ((e, f), t) in acc {
            out.set(e, f, t);
        }
        out
    }

    pub fn trace(&self) -> TensorSeries {
        let mut out = TensorSeries::new();
        for (&(e, f), t) in &self.entries {
            if e == f {
                out.axpy(C64::new(1.0, 0.0), t);
            }
        }
        out
    }

    /// Applies a contraction entrywise.
    pub fn map_entries(&self, mut f: impl FnMut(&TensorSeries) -> WordSeries) -> BTreeMap<(EdgeId, EdgeId), WordSeries> {
        self.entries
            .iter()
            .map(|(&k, t)| (k, f(t)))
            .filter(|(_, s)| !s.is_empty())
            .collect()
    }

    /// max_e Σ_f ‖M_{ef}‖ with ‖a⊗b‖ = ω(a)ω(b).
    pub fn row_sum_norm(&self, weights: &[f64]) -> f64 {
        let mut rows: BTreeMap<EdgeId, f64> = BTreeMap::new();
        for (&(e, _), t) in &self.entries {
            *rows.entry(e).or_default() += t.weighted_norm(weights);
        }
        rows.values().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_abs_diff(&self, other: &SeriesMatrix) -> f64 {
        let empty = TensorSeries::new();
        let mut m = 0.0f64;
        for (k, t) in &self.entries {
            m = m.max(t.max_abs_diff(other.entries.get(k).unwrap_or(&empty)));
        }
        for (k, t) in &other.entries {
            if !self.entries.contains_key(k) {
                m = m.max(t.max_abs_diff(&empty));
            }
        }
        m
    }
}
