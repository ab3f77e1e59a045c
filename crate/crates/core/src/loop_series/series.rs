use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, EdgeId, PerronData, VertexId};

use super::word::Word;

pub type C64 = Complex64;

/// Coefficients below this magnitude are dropped.
pub const PRUNE: f64 = 1e-300;

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Sparse complex series over words, graded by `k`, optionally truncated.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordSeries {
    terms: BTreeMap<Word, C64>,
    pub k: usize,
    pub trunc: Option<usize>,
}

fn min_trunc(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl WordSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn graded(k: usize) -> Self {
        WordSeries { k, ..Self::default() }
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, C64)>>(terms: I) -> Self {
        let mut s = Self::new();
        for (w, c) in terms {
            s.add_term(w, c);
        }
        s
    }

    pub fn with_trunc(mut self, d: Option<usize>) -> Self {
        self.trunc = d;
        if let Some(d) = d {
            self.terms.retain(|w, _| w.degree() <= d);
        }
        self
    }

    pub fn with_grading(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// Σ_v 1@v
    pub fn unit(graph: &BipartiteGraph) -> Self {
        Self::from_terms((0..graph.num_vertices()).map(|v| (Word::empty(v), c(1.0))))
    }

    pub fn constant_at(v: VertexId, coeff: C64) -> Self {
        Self::from_terms([(Word::empty(v), coeff)])
    }

    pub fn letter(graph: &BipartiteGraph, e: EdgeId) -> Self {
        Self::from_terms([(Word::letter(graph, e), c(1.0))])
    }

    pub fn monomial(graph: &BipartiteGraph, edges: &[EdgeId], coeff: C64) -> Self {
        Self::from_terms([(Word::from_edges(graph, edges), coeff)])
    }

    pub fn add_term(&mut self, w: Word, coeff: C64) {
        if self.trunc.map_or(false, |d| w.degree() > d) {
            return;
        }
        match self.terms.entry(w) {
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

    fn add_term_ref(&mut self, w: &Word, coeff: C64) {
        if self.trunc.map_or(false, |d| w.degree() > d) {
            return;
        }
        match self.terms.get_mut(w) {
            Some(slot) => {
                *slot += coeff;
                if slot.norm() < PRUNE {
                    self.terms.remove(w);
                }
            }
            None => {
                if coeff.norm() >= PRUNE {
                    self.terms.insert(w.clone(), coeff);
                }
            }
        }
    }

    pub fn get(&self, w: &Word) -> C64 {
        self.terms.get(w).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Word::degree).max()
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().next().map(Word::degree)
    }

    fn map_terms(&self, mut f: impl FnMut(&Word, C64) -> Option<(Word, C64)>) -> Self {
        let mut out = WordSeries { terms: BTreeMap::new(), k: self.k, trunc: self.trunc };
        for (w, &a) in &self.terms {
            if let Some((w2, b)) = f(w, a) {
                out.add_term(w2, b);
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_terms(|w, a| Some((w.clone(), a * s)))
    }

    /// self += s·other
    pub fn axpy(&mut self, s: C64, other: &WordSeries) {
        for (w, &a) in &other.terms {
            self.add_term_ref(w, a * s);
        }
    }

    pub fn add(&self, other: &WordSeries) -> Self {
        let mut out = self.clone().with_trunc(min_trunc(self.trunc, other.trunc));
        out.axpy(c(1.0), other);
        out
    }

    pub fn sub(&self, other: &WordSeries) -> Self {
        let mut out = self.clone().with_trunc(min_trunc(self.trunc, other.trunc));
        out.axpy(c(-1.0), other);
        out
    }

    /// π_n
    pub fn project(&self, n: usize) -> Self {
        self.map_terms(|w, a| (w.degree() == n).then(|| (w.clone(), a)))
    }

    /// Removes the degree-0 component.
    pub fn remove_constant(&self) -> Self {
        self.map_terms(|w, a| (w.degree() > 0).then(|| (w.clone(), a)))
    }

    pub fn truncate(&self, d: usize) -> Self {
        self.clone().with_trunc(Some(d))
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &WordSeries) -> f64 {
        let mut m = 0.0f64;
        for (w, a) in &self.terms {
            m = m.max((a - other.get(w)).norm());
        }
        for (w, b) in &other.terms {
            if !self.terms.contains_key(w) {
                m = m.max(b.norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, a| m.max(a.norm()))
    }

    /// The ∧₀ product: concatenation of composable words.
    pub fn multiply(&self, other: &WordSeries, graph: &BipartiteGraph) -> Result<Self> {
        if self.k != other.k || self.k != 0 {
            return Err(Error::GradingMismatch { left: self.k, right: other.k });
        }
        Ok(self.multiply_paths(other, graph))
    }

    /// Concatenation product without grading checks.
    pub fn multiply_paths(&self, other: &WordSeries, graph: &BipartiteGraph) -> Self {
        let mut out = WordSeries::new();
        out.trunc = min_trunc(self.trunc, other.trunc);
        for (u, &a) in &self.terms {
            let room = out.trunc.map(|d| d.saturating_sub(u.degree()));
            if out.trunc.is_some() && u.degree() > out.trunc.unwrap() {
                continue;
            }
            for (w, &b) in &other.terms {
                if room.map_or(false, |r| w.degree() > r) {
                    break;
                }
                if let Some(uw) = u.concat(w, graph) {
                    out.add_term(uw, a * b);
                }
            }
        }
        out
    }

    /// Operator product: non-empty words concatenate when composable, empty
    /// words act as the identity.
    pub fn operator_product(&self, other: &WordSeries, graph: &BipartiteGraph) -> Self {
        let mut out = WordSeries::new();
        out.trunc = min_trunc(self.trunc, other.trunc);
        for (u, &a) in &self.terms {
            for (w, &b) in &other.terms {
                if out.trunc.map_or(false, |d| u.degree() + w.degree() > d) {
                    break;
                }
                if let Some(uw) = u.compose(w, graph) {
                    out.add_term(uw, a * b);
                }
            }
        }
        out
    }

    /// Conjugate-linear involution. In grading k the word u·f°·e maps to u*·e°·f.
    pub fn involution(&self, graph: &BipartiteGraph) -> Self {
        let k = self.k;
        self.map_terms(|w, a| {
            if k == 0 {
                return Some((w.reversed_opposite(graph), a.conj()));
            }
            let (u, fo, e) = split_graded(w, k)?;
            let mut edges: Vec<EdgeId> = u.iter().rev().map(|&x| graph.opposite(x)).collect();
            edges.extend(e.iter().rev().map(|&x| graph.opposite(x)));
            edges.extend(fo.iter().rev().map(|&x| graph.opposite(x)));
            Some((Word::from_edges(graph, &edges), a.conj()))
        })
    }

    /// ρ(e₁⋯e_n) = λ(e_n)·e_n e₁⋯e_{n−1}; constants are fixed.
    pub fn rho(&self, pd: &PerronData) -> Self {
        self.rho_power(pd, 1)
    }

    pub fn rho_power(&self, pd: &PerronData, k: usize) -> Self {
        let g = pd.graph();
        self.map_terms(|w, a| Some(rho_word(w, k, pd, g, a)))
    }

    /// Multiplies each word by ∏ λ(e_l); loops are fixed.
    pub fn sigma_minus_i(&self, pd: &PerronData) -> Self {
        self.map_terms(|w, a| {
            let f: f64 = w.edges().iter().map(|&e| pd.lambda(e)).product();
            Some((w.clone(), a * f))
        })
    }

    /// 𝒩: scales degree-n terms by n.
    pub fn number_map(&self) -> Self {
        self.map_terms(|w, a| Some((w.clone(), a * w.degree() as f64)))
    }

    /// Σ: scales degree-n terms by 1/n.
    pub fn sigma_inv_map(&self) -> Result<Self> {
        if self.terms.keys().any(|w| w.degree() == 0) {
            return Err(Error::ConstantTerm);
        }
        Ok(self.map_terms(|w, a| Some((w.clone(), a / w.degree() as f64))))
    }

    /// 𝒮: average over the n rotations ρ¹..ρⁿ of each degree-n word.
    pub fn symmetrize(&self, pd: &PerronData) -> Self {
        let g = pd.graph();
        let mut out = WordSeries { terms: BTreeMap::new(), k: self.k, trunc: self.trunc };
        for (w, &a) in &self.terms {
            let n = w.degree();
            if n == 0 {
                out.add_term_ref(w, a);
                continue;
            }
            let scale = a / n as f64;
            let mut cur = w.clone();
            let mut f = scale;
            for _ in 0..n {
                let last = *cur.edges().last().unwrap();
                f *= pd.lambda(last);
                cur = cur.rotate_right(g, 1);
                out.add_term_ref(&cur, f);
            }
        }
        out
    }

    /// ‖x‖_R with letter weight √(σ(e)+σ(e°))·R.
    pub fn norm_r(&self, r: f64, pd: &PerronData) -> f64 {
        let weights = letter_weights(r, pd);
        self.terms
            .iter()
            .map(|(w, a)| a.norm() * w.edges().iter().map(|&e| weights[e]).product::<f64>())
            .sum()
    }

    /// ‖x‖_{R,σ} = Σ_n sup_{0≤k<max(1,n)} ‖ρ^k π_n x‖_R
    pub fn norm_r_sigma(&self, r: f64, pd: &PerronData) -> f64 {
        let weights = letter_weights(r, pd);
        let g = pd.graph();
        let mut by_degree: BTreeMap<usize, Vec<(&Word, C64)>> = BTreeMap::new();
        for (w, &a) in &self.terms {
            by_degree.entry(w.degree()).or_default().push((w, a));
        }
        let mut total = 0.0;
        for (n, terms) in by_degree {
            let mut best = 0.0f64;
            for k in 0..n.max(1) {
                // ρ^k permutes words within the degree, so coefficients of
                // distinct words never merge; norms can be summed per word.
                let mut acc: BTreeMap<Word, C64> = BTreeMap::new();
                for &(w, a) in &terms {
                    let (w2, b) = rho_word(w, k, pd, g, a);
                    *acc.entry(w2).or_default() += b;
                }
                let s: f64 = acc
                    .iter()
                    .map(|(w, a)| a.norm() * w.edges().iter().map(|&e| weights[e]).product::<f64>())
                    .sum();
                best = best.max(s);
            }
            total += best;
        }
        total
    }

    /// Replaces each letter e by `images[e]` and expands, dropping degrees above `d`.
    pub fn substitute(&self, images: &[WordSeries], d: usize, graph: &BipartiteGraph) -> Result<Self> {
        check_images(images, graph)?;
        let prepared: Vec<Vec<(Word, C64)>> = images
            .iter()
            .map(|s| s.iter().map(|(w, a)| (w.clone(), *a)).collect())
            .collect();
        let mut words: Vec<(&Word, C64)> = self.terms.iter().map(|(w, a)| (w, *a)).collect();
        words.sort_by(|a, b| a.0.edges().cmp(b.0.edges()));

        let mut out = WordSeries { terms: BTreeMap::new(), k: self.k, trunc: Some(d) };
        let mut i = 0;
        while i < words.len() {
            let (w, a) = words[i];
            if w.is_empty() {
                out.add_term_ref(w, a);
                i += 1;
                continue;
            }
            let first = w.edges()[0];
            let mut j = i;
            while j < words.len() && !words[j].0.is_empty() && words[j].0.edges()[0] == first {
                j += 1;
            }
            let partial: Vec<(Word, C64)> = prepared[first].clone();
            expand(&words[i..j], 1, partial, &prepared, d, &mut out);
            i = j;
        }
        Ok(out)
    }

    pub fn is_loop_supported(&self, graph: &BipartiteGraph) -> bool {
        self.terms.keys().all(|w| w.is_loop(graph))
    }

    /// Largest |coefficient| of x* − x.
    pub fn self_adjoint_defect(&self, graph: &BipartiteGraph) -> f64 {
        self.involution(graph).max_abs_diff(self)
    }

    /// Largest |coefficient| of ρ(x) − x.
    pub fn rotation_defect(&self, pd: &PerronData) -> f64 {
        self.rho(pd).max_abs_diff(self)
    }
}

pub(crate) fn letter_weights(r: f64, pd: &PerronData) -> Vec<f64> {
    let g = pd.graph();
    (0..g.num_edges())
        .map(|e| (pd.sigma(e) + pd.sigma(g.opposite(e))).sqrt() * r)
        .collect()
}

fn rho_word(w: &Word, k: usize, pd: &PerronData, g: &BipartiteGraph, a: C64) -> (Word, C64) {
    let n = w.degree();
    if n == 0 || k == 0 {
        return (w.clone(), a);
    }
    let mut f = 1.0;
    let edges = w.edges();
    // ρ^k: the last k letters (cyclically, with repetition when k > n) move to
    // the front, each contributing λ.
    for step in 0..k {
        f *= pd.lambda(edges[(n - 1 + n * k - step) % n]);
    }
    (w.rotate_right(g, k), a * f)
}

fn check_images(images: &[WordSeries], graph: &BipartiteGraph) -> Result<()> {
    if images.len() != graph.num_edges() {
        return Err(Error::InvalidConfig(format!(
            "expected {} images, got {}",
            graph.num_edges(),
            images.len()
        )));
    }
    for (e, s) in images.iter().enumerate() {
        for (w, _) in s.iter() {
            if w.base() != graph.source(e) || w.end(graph) != graph.target(e) || !w.is_path(graph) {
                return Err(Error::IncompatibleImage { edge: graph.edge(e).name.clone() });
            }
        }
    }
    Ok(())
}

fn expand(
    words: &[(&Word, C64)],
    depth: usize,
    partial: Vec<(Word, C64)>,
    images: &[Vec<(Word, C64)>],
    d: usize,
    out: &mut WordSeries,
) {
    if partial.is_empty() {
        return;
    }
    let mut i = 0;
    while i < words.len() && words[i].0.degree() == depth {
        let a = words[i].1;
        for (w, b) in &partial {
            out.add_term_ref(w, a * b);
        }
        i += 1;
    }
    while i < words.len() {
        let letter = words[i].0.edges()[depth];
        let mut j = i;
        let mut min_len = usize::MAX;
        while j < words.len() && words[j].0.edges()[depth] == letter {
            min_len = min_len.min(words[j].0.degree());
            j += 1;
        }
        // every remaining letter adds at least one degree
        let budget = d.saturating_sub(min_len - depth - 1);
        let mut acc: BTreeMap<Word, C64> = BTreeMap::new();
        for (p, a) in &partial {
            if p.degree() + 1 > budget {
                continue;
            }
            for (q, b) in &images[letter] {
                if p.degree() + q.degree() > budget {
                    continue;
                }
                *acc.entry(p.concat_unchecked(q)).or_default() += a * b;
            }
        }
        let next: Vec<(Word, C64)> = acc.into_iter().filter(|(_, a)| a.norm() >= PRUNE).collect();
        expand(&words[i..j], depth + 1, next, images, d, out);
        i = j;
    }
}

/// Splits a grading-k word into (u, f_k°⋯f₁°, e₁⋯e_k).
pub fn split_graded(w: &Word, k: usize) -> Option<(&[EdgeId], &[EdgeId], &[EdgeId])> {
    let n = w.degree();
    if n < 2 * k {
        return None;
    }
    let e = w.edges();
    Some((&e[..n - 2 * k], &e[n - 2 * k..n - k], &e[n - k..]))
}

/// Checks that every support word is a loop that splits as u·f°·e in grading k.
pub fn validate_graded(x: &WordSeries, graph: &BipartiteGraph) -> Result<()> {
    for (w, _) in x.iter() {
        if !w.is_loop(graph) {
            return Err(Error::MalformedWord { k: x.k, reason: format!("{} is not a loop", w.display(graph)) });
        }
        if split_graded(w, x.k).is_none() {
            return Err(Error::MalformedWord { k: x.k, reason: format!("{} is shorter than 2k", w.display(graph)) });
        }
    }
    Ok(())
}

/// The ∧_k product on grading-k series.
pub fn wedge_k(x: &WordSeries, y: &WordSeries, pd: &PerronData) -> Result<WordSeries> {
    if x.k != y.k {
        return Err(Error::GradingMismatch { left: x.k, right: y.k });
    }
    let k = x.k;
    if k == 0 {
        return x.multiply(y, pd.graph());
    }
    let g = pd.graph();
    validate_graded(x, g)?;
    validate_graded(y, g)?;
    let mut out = WordSeries::graded(k);
    out.trunc = min_trunc(x.trunc, y.trunc);
    for (w1, &a) in x.iter() {
        let (u1, fo1, e1) = split_graded(w1, k).unwrap();
        for (w2, &b) in y.iter() {
            let (u2, fo2, h2) = split_graded(w2, k).unwrap();
            let mut factor = 1.0;
            let mut ok = true;
            for i in 0..k {
                let f_i = g.opposite(fo1[k - 1 - i]);
                if f_i != h2[i] {
                    ok = false;
                    break;
                }
                factor /= pd.sigma(h2[i]);
            }
            if !ok {
                continue;
            }
            let mut edges: Vec<EdgeId> = Vec::with_capacity(u1.len() + u2.len() + 2 * k);
            edges.extend_from_slice(u1);
            edges.extend_from_slice(u2);
            edges.extend_from_slice(fo2);
            edges.extend_from_slice(e1);
            if !g.is_loop(&edges) {
                continue;
            }
            out.add_term(Word::from_edges(g, &edges), a * b * factor);
        }
    }
    Ok(out)
}

/// Unit of grading k: Σ over length-k paths p of ∏σ(p_i)·(p°p).
pub fn unit_k(k: usize, pd: &PerronData) -> WordSeries {
    let g = pd.graph();
    if k == 0 {
        return WordSeries::unit(g);
    }
    let mut out = WordSeries::graded(k);
    for p in g.paths(k) {
        let weight: f64 = p.iter().map(|&e| pd.sigma(e)).product();
        let mut edges: Vec<EdgeId> = p.iter().rev().map(|&e| g.opposite(e)).collect();
        edges.extend_from_slice(&p);
        out.add_term(Word::from_edges(g, &edges), c(weight));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;

    fn a3() -> PerronData {
        PerronData::new(&BipartiteGraph::a_n(3)).unwrap()
    }

    fn word(pd: &PerronData, names: &[&str]) -> Word {
        let g = pd.graph();
        let edges: Vec<EdgeId> = names.iter().map(|n| g.edge_id(n).unwrap()).collect();
        Word::from_edges(g, &edges)
    }

    #[test]
    fn product_of_loops() {
        let pd = a3();
        let g = pd.graph();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e1~"]), c(1.0))]);
        let xx = x.multiply(&x, g).unwrap();
        assert_eq!(xx.get(&word(&pd, &["e1", "e1~", "e1", "e1~"])), c(1.0));
        let y = WordSeries::from_terms([(word(&pd, &["e1~", "e1"]), c(1.0))]);
        assert!(x.multiply(&y, g).unwrap().is_empty());
        let one = WordSeries::constant_at(g.vertex_id("v1").unwrap(), c(1.0));
        assert_eq!(one.multiply(&x, g).unwrap(), x);
        let graded = WordSeries::graded(1);
        assert!(x.multiply(&graded, g).is_err());
    }

    #[test]
    fn involution_example() {
        let pd = a3();
        let g = pd.graph();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e2~"]), C64::new(0.0, 1.0))]);
        let xs = x.involution(g);
        assert_eq!(xs.get(&word(&pd, &["e2", "e1~"])), C64::new(0.0, -1.0));
        assert_eq!(xs.involution(g), x);
    }

    #[test]
    fn rho_examples() {
        let pd = a3();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e1~"]), c(1.0))]);
        let r = x.rho(&pd);
        assert!((r.get(&word(&pd, &["e1~", "e1"])).re - 2f64.powf(-0.5)).abs() < 1e-14);
        let full = x.rho_power(&pd, 2);
        assert!(full.max_abs_diff(&x) < 1e-15);
        let one = WordSeries::constant_at(0, c(3.0));
        assert_eq!(one.rho(&pd), one);
    }

    #[test]
    fn rho_power_matches_repeated_rho() {
        let pd = a3();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e2~", "e2", "e1~"]), c(1.0))]);
        let mut y = x.clone();
        for k in 1..9 {
            y = y.rho(&pd);
            assert!(y.max_abs_diff(&x.rho_power(&pd, k)) < 1e-14, "k={k}");
        }
    }

    #[test]
    fn sigma_minus_i_single_edge() {
        let pd = a3();
        let x = WordSeries::from_terms([(word(&pd, &["e1"]), c(1.0))]);
        let y = x.sigma_minus_i(&pd);
        assert!((y.get(&word(&pd, &["e1"])).re - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn number_and_inverse() {
        let pd = a3();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e1~"]), c(1.0))]);
        assert_eq!(x.number_map().get(&word(&pd, &["e1", "e1~"])), c(2.0));
        assert!(WordSeries::unit(pd.graph()).sigma_inv_map().is_err());
    }

    #[test]
    fn norm_example() {
        let pd = a3();
        let r = 4.0 * 2f64.sqrt();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e1~"]), c(1.0))]);
        let expected = (2f64.powf(0.25) + 2f64.powf(-0.25)) * r * r;
        assert!((x.norm_r(r, &pd) - expected).abs() < 1e-12);
        assert!((expected - 64.963).abs() < 1e-3);
        assert_eq!(WordSeries::new().norm_r(r, &pd), 0.0);
    }

    #[test]
    fn substitute_examples() {
        let pd = a3();
        let g = pd.graph();
        let x = WordSeries::from_terms([(word(&pd, &["e1", "e1~"]), c(1.0))]);
        let ident: Vec<WordSeries> = (0..g.num_edges()).map(|e| WordSeries::letter(g, e)).collect();
        assert_eq!(x.substitute(&ident, 8, g).unwrap().max_abs_diff(&x), 0.0);

        let e1 = g.edge_id("e1").unwrap();
        let mut images = ident.clone();
        let p = word(&pd, &["e1", "e1~", "e1"]);
        images[e1].add_term(p.clone(), c(1.0));
        let y = x.substitute(&images, 8, g).unwrap();
        let mut expected = x.clone();
        expected.add_term(word(&pd, &["e1", "e1~", "e1", "e1~"]), c(1.0));
        assert!(y.max_abs_diff(&expected) < 1e-15);

        let mut bad = ident;
        bad[e1] = WordSeries::letter(g, g.edge_id("e2").unwrap());
        assert!(x.substitute(&bad, 8, g).is_err());
    }

    #[test]
    fn unit_k_is_identity() {
        let pd = a3();
        let g = pd.graph();
        let one = unit_k(1, &pd);
        let x = WordSeries::from_terms([(word(&pd, &["e1~", "e1", "e1~", "e1"]), c(2.0))]).with_grading(1);
        let _ = g;
        assert!(wedge_k(&x, &one, &pd).unwrap().max_abs_diff(&x) < 1e-14);
        assert!(wedge_k(&one, &x, &pd).unwrap().max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn wedge_example() {
        let pd = a3();
        let x = WordSeries::from_terms([(word(&pd, &["e1~", "e1"]), c(1.0))]).with_grading(1);
        let xx = wedge_k(&x, &x, &pd).unwrap();
        let s = pd.sigma_of("e1").unwrap();
        assert!((xx.get(&word(&pd, &["e1~", "e1"])).re - 1.0 / s).abs() < 1e-14);
        let y = WordSeries::from_terms([(word(&pd, &["e2~", "e2"]), c(1.0))]).with_grading(1);
        assert!(wedge_k(&x, &y, &pd).unwrap().is_empty());
    }
}
