//! Exact sparse Fock-space simulation of ℓ(e), ℓ(e)*, ĉ(e), the vacuum state,
//! the vertex states, and the tower ĉ_k / φ_k.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, PerronData, VertexId};
use crate::loop_series::{c, split_graded, validate_graded, Letters, Word, WordSeries, C64, PRUNE};

/// Hard limit on operator word length for direct moment evaluation.
pub const DEFAULT_WORD_LIMIT: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Vacuum,
    /// Vertex vector of the ℓ^∞(V)-bimodule variant.
    Vertex(VertexId),
    /// e₁⊗⋯⊗e_n, first letter at index 0.
    Path(Letters),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Path(p) => p.len(),
            _ => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockVector {
    terms: BTreeMap<Basis, C64>,
}

impl FockVector {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn vacuum() -> Self {
        Self::basis(Basis::Vacuum)
    }

    pub fn vertex(v: VertexId) -> Self {
        Self::basis(Basis::Vertex(v))
    }

    pub fn path(edges: &[EdgeId]) -> Self {
        if edges.is_empty() {
            return Self::vacuum();
        }
        Self::basis(Basis::Path(Letters::from_slice(edges)))
    }

    pub fn basis(b: Basis) -> Self {
        let mut v = Self::zero();
        v.add(b, c(1.0));
        v
    }

    pub fn add(&mut self, b: Basis, coeff: C64) {
        match self.terms.entry(b) {
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

    pub fn axpy(&mut self, s: C64, other: &FockVector) {
        for (b, a) in &other.terms {
            self.add(b.clone(), a * s);
        }
    }

    pub fn get(&self, b: &Basis) -> C64 {
        self.terms.get(b).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Basis, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.terms.keys().map(Basis::len).max().unwrap_or(0)
    }

    /// Drops components with more than `cap` letters.
    pub fn prune_longer_than(&mut self, cap: usize) {
        self.terms.retain(|b, _| b.len() <= cap);
    }

    /// ⟨self, other⟩ with ⟨e₁⊗⋯, e₁⊗⋯⟩ = ∏‖e_i‖²; conjugate-linear in `self`.
    pub fn inner(&self, other: &FockVector, pd: &PerronData) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (b, a) in &self.terms {
            if let Some(x) = other.terms.get(b) {
                let w = match b {
                    Basis::Path(p) => p.iter().map(|&e| pd.edge_norm_sq(e)).product(),
                    _ => 1.0,
                };
                s += a.conj() * x * w;
            }
        }
        s
    }

    pub fn max_abs_diff(&self, other: &FockVector) -> f64 {
        let mut m = 0.0f64;
        for (b, a) in &self.terms {
            m = m.max((a - other.get(b)).norm());
        }
        for (b, x) in &other.terms {
            if !self.terms.contains_key(b) {
                m = m.max(x.norm());
            }
        }
        m
    }
}

/// ℓ(e): prepends e where composable. On a vertex vector v gives δ_{t(e)=v}·e.
pub fn apply_l(e: EdgeId, x: &FockVector, pd: &PerronData) -> FockVector {
    let g = pd.graph();
    let mut out = FockVector::zero();
    for (b, &a) in x.iter() {
        match b {
            Basis::Vacuum => out.add(Basis::Path(Letters::from_slice(&[e])), a),
            Basis::Vertex(v) => {
                if g.target(e) == *v {
                    out.add(Basis::Path(Letters::from_slice(&[e])), a);
                }
            }
            Basis::Path(p) => {
                if g.target(e) == g.source(p[0]) {
                    let mut q = Letters::with_capacity(p.len() + 1);
                    q.push(e);
                    q.extend_from_slice(p);
                    out.add(Basis::Path(q), a);
                }
            }
        }
    }
    out
}

/// ℓ(e)*: strips a leading e with weight ‖e‖² = σ(e)⁻¹. A single letter goes
/// to the vacuum, or to the vertex t(e) when `bimodule` is set.
pub fn apply_l_star_in(e: EdgeId, x: &FockVector, pd: &PerronData, bimodule: bool) -> FockVector {
    let g = pd.graph();
    let mut out = FockVector::zero();
    for (b, &a) in x.iter() {
        if let Basis::Path(p) = b {
            if p[0] == e {
                let w = a * pd.edge_norm_sq(e);
                if p.len() == 1 {
                    let rest = if bimodule { Basis::Vertex(g.target(e)) } else { Basis::Vacuum };
                    out.add(rest, w);
                } else {
                    out.add(Basis::Path(Letters::from_slice(&p[1..])), w);
                }
            }
        }
    }
    out
}

pub fn apply_l_star(e: EdgeId, x: &FockVector, pd: &PerronData) -> FockVector {
    apply_l_star_in(e, x, pd, false)
}

/// ĉ(e) = ℓ(e) + ℓ(e°)*, done in one pass.
fn apply_c_in(e: EdgeId, x: &FockVector, pd: &PerronData, bimodule: bool, out: &mut FockVector, scale: C64) {
    let g = pd.graph();
    let eo = g.opposite(e);
    let te = g.target(e);
    let norm_eo = pd.edge_norm_sq(eo);
    for (b, &a) in x.iter() {
        let a = a * scale;
        match b {
            Basis::Vacuum => out.add(Basis::Path(Letters::from_slice(&[e])), a),
            Basis::Vertex(v) => {
                if te == *v {
                    out.add(Basis::Path(Letters::from_slice(&[e])), a);
                }
            }
            Basis::Path(p) => {
                if te == g.source(p[0]) {
                    let mut q = Letters::with_capacity(p.len() + 1);
                    q.push(e);
                    q.extend_from_slice(p);
                    out.add(Basis::Path(q), a);
                }
                if p[0] == eo {
                    let w = a * norm_eo;
                    if p.len() == 1 {
                        let rest = if bimodule { Basis::Vertex(g.target(eo)) } else { Basis::Vacuum };
                        out.add(rest, w);
                    } else {
                        out.add(Basis::Path(Letters::from_slice(&p[1..])), w);
                    }
                }
            }
        }
    }
}

pub fn apply_c(e: EdgeId, x: &FockVector, pd: &PerronData) -> FockVector {
    let mut out = FockVector::zero();
    apply_c_in(e, x, pd, false, &mut out, c(1.0));
    out
}

/// ĉ(e₁)⋯ĉ(e_m)x, rightmost letter first. Components longer than `cap` are
/// dropped after each step when a cap is given.
pub fn apply_word(edges: &[EdgeId], x: &FockVector, pd: &PerronData, cap: Option<usize>) -> FockVector {
    apply_word_in(edges, x, pd, cap, false)
}

fn apply_word_in(edges: &[EdgeId], x: &FockVector, pd: &PerronData, cap: Option<usize>, bimodule: bool) -> FockVector {
    let mut cur = x.clone();
    for (i, &e) in edges.iter().enumerate().rev() {
        let mut next = FockVector::zero();
        apply_c_in(e, &cur, pd, bimodule, &mut next, c(1.0));
        // letters still to apply can lower the depth by at most i
        if let Some(cap) = cap {
            next.prune_longer_than(cap + i);
        }
        cur = next;
    }
    cur
}

/// ⟨Ω, ĉ(e₁)⋯ĉ(e_m)Ω⟩
pub fn vacuum_moment(edges: &[EdgeId], pd: &PerronData) -> Result<C64> {
    vacuum_moment_limited(edges, pd, DEFAULT_WORD_LIMIT)
}

pub fn vacuum_moment_limited(edges: &[EdgeId], pd: &PerronData, limit: usize) -> Result<C64> {
    if edges.len() > limit {
        return Err(Error::WordTooLong { len: edges.len(), limit });
    }
    let mut cur = FockVector::vacuum();
    let mut depth = 0;
    for &e in edges.iter().rev() {
        cur = apply_c(e, &cur, pd);
        depth = depth.max(cur.max_depth());
    }
    debug_assert!(depth <= edges.len());
    Ok(cur.get(&Basis::Vacuum))
}

/// Vacuum moment with vacuum-return pruning; no length limit.
pub(crate) fn moment_unchecked(edges: &[EdgeId], pd: &PerronData) -> C64 {
    apply_word(edges, &FockVector::vacuum(), pd, Some(0)).get(&Basis::Vacuum)
}

/// Linear extension of the vacuum moment; the empty word has moment 1.
pub fn state(x: &WordSeries, pd: &PerronData) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    for (w, &a) in x.iter() {
        s += a * vacuum_moment(w.edges(), pd)?;
    }
    Ok(s)
}

/// Vertex state: apply the word to the vertex vector v and read off v.
pub fn phi_v(edges: &[EdgeId], v: VertexId, pd: &PerronData) -> Result<C64> {
    if edges.len() > DEFAULT_WORD_LIMIT {
        return Err(Error::WordTooLong { len: edges.len(), limit: DEFAULT_WORD_LIMIT });
    }
    let out = apply_word_in(edges, &FockVector::vertex(v), pd, None, true);
    Ok(out.get(&Basis::Vertex(v)))
}

/// Σ β_w ĉ(w)x over the series; `cap` as in [`apply_word`].
pub fn apply_series(x: &WordSeries, v: &FockVector, pd: &PerronData, cap: Option<usize>) -> FockVector {
    let mut out = FockVector::zero();
    for (w, &a) in x.iter() {
        let y = apply_word(w.edges(), v, pd, cap);
        out.axpy(a, &y);
    }
    out
}

/// φ(x₁x₂⋯x_n) for operator products of series, exact: components that cannot
/// be brought back to the vacuum by the remaining factors are discarded.
pub fn product_moment(factors: &[&WordSeries], pd: &PerronData) -> C64 {
    let mut remaining: Vec<usize> = factors
        .iter()
        .map(|f| f.max_degree().unwrap_or(0))
        .collect();
    // remaining[i] = max total degree of factors 0..i
    let mut acc = 0;
    for r in remaining.iter_mut() {
        acc += *r;
        *r = acc;
    }
    let mut cur = FockVector::vacuum();
    for i in (0..factors.len()).rev() {
        let cap = if i == 0 { 0 } else { remaining[i - 1] };
        cur = apply_series(factors[i], &cur, pd, Some(cap));
        if cur.is_empty() {
            return C64::new(0.0, 0.0);
        }
    }
    cur.get(&Basis::Vacuum)
}

/// ĉ_k(u·f_k°⋯f₁°·e₁⋯e_k) = ℓ(e₁)⋯ℓ(e_k)ĉ(u)ℓ(f_k)*⋯ℓ(f₁)*
pub fn c_k_apply(x: &WordSeries, vec: &FockVector, pd: &PerronData) -> Result<FockVector> {
    let g = pd.graph();
    let k = x.k;
    if k > 0 {
        validate_graded(x, g)?;
    }
    let mut out = FockVector::zero();
    for (w, &a) in x.iter() {
        let (u, fo, e) = split_graded(w, k).unwrap();
        let mut cur = vec.clone();
        for i in 0..k {
            let f_i = g.opposite(fo[k - 1 - i]);
            cur = apply_l_star(f_i, &cur, pd);
        }
        cur = apply_word(u, &cur, pd, None);
        for &ei in e.iter().rev() {
            cur = apply_l(ei, &cur, pd);
        }
        out.axpy(a, &cur);
    }
    Ok(out)
}

/// φ_k(x) = δ^{−k} Σ_f (μ(s(f₁))/μ(t(f_k)))^{1/2} ⟨f, ĉ_k(x) f⟩ over length-k paths f.
pub fn phi_k(x: &WordSeries, pd: &PerronData) -> Result<C64> {
    let g = pd.graph();
    let k = x.k;
    if k == 0 {
        return state(x, pd);
    }
    validate_graded(x, g)?;
    let mut s = C64::new(0.0, 0.0);
    for f in g.paths(k) {
        let v = FockVector::path(&f);
        let y = c_k_apply(x, &v, pd)?;
        let w = (pd.mu[g.source(f[0])] / pd.mu[g.target(f[k - 1])]).sqrt();
        s += v.inner(&y, pd) * w;
    }
    Ok(s * pd.delta.powi(-(k as i32)))
}

/// Inclusion of grading k−1 into grading k:
/// u·f°·e ↦ Σ_{h: t(h)=s(e₁)} σ(h)·u·f°·h°·h·e, where s(e₁) means the base of
/// u when k−1 = 0. On operators this is X ↦ Σ_h σ(h)ℓ(h)Xℓ(h)*.
pub fn include(x: &WordSeries, pd: &PerronData) -> Result<WordSeries> {
    let g = pd.graph();
    let k = x.k + 1;
    if x.k > 0 {
        validate_graded(x, g)?;
    }
    let mut out = WordSeries::graded(k);
    out.trunc = x.trunc.map(|d| d + 2);
    for (w, &a) in x.iter() {
        let (u, fo, e) = split_graded(w, x.k).unwrap();
        let anchor = match e.first() {
            Some(&e1) => g.source(e1),
            None => w.base(),
        };
        for h in 0..g.num_edges() {
            if g.target(h) != anchor {
                continue;
            }
            let mut edges: Vec<EdgeId> = Vec::with_capacity(w.degree() + 2);
            edges.extend_from_slice(u);
            edges.extend_from_slice(fo);
            edges.push(g.opposite(h));
            edges.push(h);
            edges.extend_from_slice(e);
            out.add_term(Word::from_edges(g, &edges), a * pd.sigma(h));
        }
    }
    Ok(out)
}

/// Path-space vector with packed keys, for long operator chains. A key holds
/// the length in its low byte and letter i (plus one) in byte i + 1, so
/// paths have at most 15 letters and edge ids stay below 255.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PackedFock {
    terms: Vec<(u128, C64)>,
}

pub const PACKED_MAX_DEPTH: usize = 15;

impl PackedFock {
    pub fn vacuum() -> Self {
        PackedFock { terms: vec![(0, c(1.0))] }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn vacuum_coeff(&self) -> C64 {
        match self.terms.first() {
            Some(&(0, a)) => a,
            _ => c(0.0),
        }
    }

    pub fn axpy(&mut self, s: C64, other: &PackedFock) {
        self.axpy_deferred(s, other);
        self.normalize();
    }

    /// Appends without merging; call [`PackedFock::normalize`] before reading.
    pub fn axpy_deferred(&mut self, s: C64, other: &PackedFock) {
        self.terms.extend(other.terms.iter().map(|&(k, a)| (k, a * s)));
    }

    pub fn normalize(&mut self) {
        self.terms.sort_unstable_by_key(|t| t.0);
        let mut out: Vec<(u128, C64)> = Vec::with_capacity(self.terms.len());
        for &(k, a) in &self.terms {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += a,
                _ => out.push((k, a)),
            }
        }
        out.retain(|t| t.1.norm() >= PRUNE);
        self.terms = out;
    }

    /// ĉ(e₁)⋯ĉ(e_m)x, rightmost letter first, with the pruning of [`apply_word`].
    pub fn apply_word(&self, edges: &[EdgeId], pd: &PerronData, cap: usize) -> PackedFock {
        let g = pd.graph();
        let cap = cap.min(PACKED_MAX_DEPTH);
        let mut cur = self.terms.clone();
        for (i, &e) in edges.iter().enumerate().rev() {
            let limit = (cap + i).min(PACKED_MAX_DEPTH) as u128;
            let eo = g.opposite(e);
            let te = g.target(e);
            let norm_eo = pd.edge_norm_sq(eo);
            let tag = e as u128 + 1;
            let tag_o = eo as u128 + 1;
            let mut next = Vec::with_capacity(2 * cur.len());
            for &(k, a) in &cur {
                let len = k & 0xff;
                let payload = k >> 8;
                let first = payload & 0xff;
                if len == 0 || te == g.source(first as usize - 1) {
                    if len < limit {
                        next.push(((((payload << 8) | tag) << 8) | (len + 1), a));
                    }
                }
                if len > 0 && first == tag_o && len - 1 <= limit {
                    next.push((((payload >> 8) << 8) | (len - 1), a * norm_eo));
                }
            }
            let mut v = PackedFock { terms: next };
            v.normalize();
            cur = v.terms;
            if cur.is_empty() {
                break;
            }
        }
        PackedFock { terms: cur }
    }
}

/// Memo of ĉ(w)|b⟩ for packed basis vectors b, at a fixed depth cap.
#[derive(Debug, Default)]
pub struct ActionCache {
    cap: usize,
    map: FxHashMap<(u128, u128), Vec<(u128, C64)>>,
}

fn pack_word(edges: &[EdgeId]) -> u128 {
    edges.iter().rev().fold(0u128, |k, &e| (k << 8) | (e as u128 + 1)) << 8 | edges.len() as u128
}

impl ActionCache {
    pub fn new(cap: usize) -> Self {
        ActionCache { cap, map: FxHashMap::default() }
    }

    /// Clears the memo when the cap changes.
    pub fn set_cap(&mut self, cap: usize) {
        if cap != self.cap {
            self.cap = cap;
            self.map.clear();
        }
    }

    /// Same as `v.apply_word(edges, pd, cap)`.
    pub fn apply(&mut self, edges: &[EdgeId], v: &PackedFock, pd: &PerronData) -> PackedFock {
        let w = pack_word(edges);
        let mut out = PackedFock { terms: Vec::with_capacity(4 * v.terms.len()) };
        for &(b, a) in &v.terms {
            let image = self.map.entry((w, b)).or_insert_with(|| {
                PackedFock { terms: vec![(b, c(1.0))] }.apply_word(edges, pd, self.cap).terms
            });
            out.terms.extend(image.iter().map(|&(k, x)| (k, x * a)));
        }
        out.normalize();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_matches_sparse() {
        let pd = PerronData::new(&crate::graph::BipartiteGraph::a_n(4)).unwrap();
        let g = pd.graph();
        let e: Vec<EdgeId> = (0..g.num_edges()).collect();
        let words: Vec<Vec<EdgeId>> = vec![
            vec![e[0], e[1], e[0], e[1]],
            vec![e[0], e[1], e[2], e[3], e[3], e[2], e[1], e[0]],
            vec![e[2], e[2], e[3], e[3]],
        ];
        for w in &words {
            let a = PackedFock::vacuum().apply_word(w, &pd, 0).vacuum_coeff();
            let b = moment_unchecked(w, &pd);
            assert!((a - b).norm() < 1e-14);
            let half = PackedFock::vacuum().apply_word(&w[w.len() / 2..], &pd, 8);
            let full = half.apply_word(&w[..w.len() / 2], &pd, 0).vacuum_coeff();
            assert!((full - b).norm() < 1e-14);
        }
    }
    use crate::graph::BipartiteGraph;
    use crate::loop_series::wedge_k;

    fn a3() -> PerronData {
        PerronData::new(&BipartiteGraph::a_n(3)).unwrap()
    }

    #[test]
    fn creation_annihilation() {
        let pd = a3();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let e1o = g.opposite(e1);
        let e2 = g.edge_id("e2").unwrap();
        assert_eq!(apply_l(e1, &FockVector::vacuum(), &pd), FockVector::path(&[e1]));
        let y = apply_l_star(e1, &FockVector::path(&[e1, e1o]), &pd);
        assert!((y.get(&Basis::Path(Letters::from_slice(&[e1o]))).re - 2f64.powf(-0.25)).abs() < 1e-15);
        assert!(apply_l_star(e1, &FockVector::path(&[e2]), &pd).is_empty());
        assert!(apply_l_star(e1, &FockVector::vacuum(), &pd).is_empty());
    }

    #[test]
    fn moments() {
        let pd = a3();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let e1o = g.opposite(e1);
        assert!((vacuum_moment(&[e1, e1o], &pd).unwrap().re - 2f64.powf(0.25)).abs() < 1e-14);
        let m = vacuum_moment(&[e1, e1o, e1, e1o], &pd).unwrap();
        assert!((m.re - 1.0 - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(vacuum_moment(&[e1, e1o, e1], &pd).unwrap(), c(0.0));
        assert!(vacuum_moment(&[e1; 17], &pd).is_err());
    }

    #[test]
    fn vertex_state() {
        let pd = a3();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let e1o = g.opposite(e1);
        let v1 = g.vertex_id("v1").unwrap();
        let v2 = g.vertex_id("v2").unwrap();
        assert!((phi_v(&[e1, e1o], v1, &pd).unwrap().re - 2f64.powf(0.25)).abs() < 1e-14);
        assert_eq!(phi_v(&[e1, e1o], v2, &pd).unwrap(), c(0.0));
        assert_eq!(phi_v(&[], v2, &pd).unwrap(), c(1.0));
    }

    #[test]
    fn state_of_unit_word() {
        let pd = a3();
        assert_eq!(state(&WordSeries::constant_at(0, c(1.0)), &pd).unwrap(), c(1.0));
    }

    #[test]
    fn wedge_one_matches_operators() {
        let pd = a3();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let x = WordSeries::monomial(g, &[g.opposite(e1), e1], c(1.0)).with_grading(1);
        let xx = wedge_k(&x, &x, &pd).unwrap();
        for f in g.paths(2) {
            let v = FockVector::path(&f);
            let lhs = c_k_apply(&xx, &v, &pd).unwrap();
            let rhs = c_k_apply(&x, &c_k_apply(&x, &v, &pd).unwrap(), &pd).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-14);
        }
    }

    #[test]
    fn include_unit_a2() {
        let pd = PerronData::new(&BipartiteGraph::a_n(2)).unwrap();
        let one = WordSeries::unit(pd.graph());
        let inc = include(&one, &pd).unwrap();
        assert_eq!(inc.len(), 2);
        assert!(inc.max_abs_diff(&crate::loop_series::unit_k(1, &pd)) < 1e-15);
    }
}
