//! Non-crossing pairings, the pairing-sum trace and the canonical quadratic potential.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Result;
use crate::graph::{EdgeId, PerronData, VertexId};
use crate::loop_series::{c, split_graded, validate_graded, Word, WordSeries, C64};

/// A perfect non-crossing pairing of the points 0..2n, stored as (i, j) with i < j,
/// sorted by i.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NonCrossingPairing {
    pub pairs: Vec<(usize, usize)>,
}

impl NonCrossingPairing {
    pub fn size(&self) -> usize {
        self.pairs.len()
    }

    /// Perfect, disjoint and non-crossing on 0..2n.
    pub fn is_valid(&self) -> bool {
        let m = 2 * self.pairs.len();
        let mut seen = vec![false; m];
        for &(i, j) in &self.pairs {
            if i >= j || j >= m || seen[i] || seen[j] {
                return false;
            }
            seen[i] = true;
            seen[j] = true;
        }
        for &(i, j) in &self.pairs {
            for &(k, l) in &self.pairs {
                if i < k && k < j && j < l {
                    return false;
                }
            }
        }
        true
    }
}

type Cache = Mutex<BTreeMap<usize, Arc<Vec<NonCrossingPairing>>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
}

/// All non-crossing pairings of 2n points. Point 0 pairs with 2j+1; the inside
/// and outside are enumerated recursively, inner loop over the inside.
pub fn enumerate_pairings(n: usize) -> Arc<Vec<NonCrossingPairing>> {
    if let Some(v) = cache().lock().unwrap().get(&n) {
        return v.clone();
    }
    let result = Arc::new(build(n, 0));
    cache().lock().unwrap().entry(n).or_insert(result).clone()
}

fn build(n: usize, offset: usize) -> Vec<NonCrossingPairing> {
    if n == 0 {
        return vec![NonCrossingPairing { pairs: Vec::new() }];
    }
    let mut out = Vec::new();
    for j in 0..n {
        let partner = offset + 2 * j + 1;
        let inside = build(j, offset + 1);
        let outside = build(n - 1 - j, partner + 1);
        for o in &outside {
            for i in &inside {
                let mut pairs = Vec::with_capacity(n);
                pairs.push((offset, partner));
                pairs.extend_from_slice(&i.pairs);
                pairs.extend_from_slice(&o.pairs);
                out.push(NonCrossingPairing { pairs });
            }
        }
    }
    out
}

/// Σ over non-crossing pairings of ∏_{(i<j)} δ_{e_j=e_i°}·σ(e_i). Zero for odd
/// lengths and for words that are not loops.
pub fn pairing_moment(edges: &[EdgeId], pd: &PerronData) -> f64 {
    let g = pd.graph();
    if edges.len() % 2 == 1 || !g.is_loop(edges) {
        return 0.0;
    }
    let mut total = 0.0;
    for p in enumerate_pairings(edges.len() / 2).iter() {
        let mut w = 1.0;
        for &(i, j) in &p.pairs {
            if edges[j] != g.opposite(edges[i]) {
                w = 0.0;
                break;
            }
            w *= pd.sigma(edges[i]);
        }
        total += w;
    }
    total
}

/// ½ Σ_e σ(e)·e e°
pub fn v0(pd: &PerronData) -> WordSeries {
    let g = pd.graph();
    WordSeries::from_terms(
        (0..g.num_edges()).map(|e| (Word::from_edges(g, &[e, g.opposite(e)]), c(0.5 * pd.sigma(e)))),
    )
}

/// Vertex-valued trace. In grading k the side strings f, e must agree; the
/// closed-up word contributes δ^{−k}∏σ(e_i)⁻³ times the pairing moment of its
/// middle loop, at the base vertex of the word.
pub fn trace_k(x: &WordSeries, pd: &PerronData) -> Result<BTreeMap<VertexId, C64>> {
    let g = pd.graph();
    let k = x.k;
    let mut out: BTreeMap<VertexId, C64> = BTreeMap::new();
    if k > 0 {
        validate_graded(x, g)?;
    }
    let scale = pd.delta.powi(-(k as i32));
    for (w, &beta) in x.iter() {
        if k == 0 {
            let m = if w.is_empty() { 1.0 } else { pairing_moment(w.edges(), pd) };
            *out.entry(w.base()).or_default() += beta * m;
            continue;
        }
        let (u, fo, e) = split_graded(w, k).unwrap();
        if (0..k).any(|i| g.opposite(fo[k - 1 - i]) != e[i]) {
            continue;
        }
        let side: f64 = e.iter().map(|&x| pd.sigma(x).powi(-3)).product();
        let m = if u.is_empty() { 1.0 } else { pairing_moment(u, pd) };
        *out.entry(w.base()).or_default() += beta * (scale * side * m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_pairings(0).len(), 1);
        assert_eq!(enumerate_pairings(3).len(), 5);
        assert_eq!(enumerate_pairings(6).len(), 132);
        assert!(enumerate_pairings(5).iter().all(|p| p.is_valid()));
    }

    #[test]
    fn a3_moments() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let e1o = g.opposite(e1);
        assert!((pairing_moment(&[e1, e1o], &pd) - 2f64.powf(0.25)).abs() < 1e-14);
        assert!((pairing_moment(&[e1, e1o, e1, e1o], &pd) - (1.0 + 2f64.sqrt())).abs() < 1e-14);
        assert_eq!(pairing_moment(&[e1], &pd), 0.0);
    }

    #[test]
    fn v0_a3_coefficients() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let g = pd.graph();
        let v = v0(&pd);
        let e1 = g.edge_id("e1").unwrap();
        let w = Word::from_edges(g, &[e1, g.opposite(e1)]);
        assert!((v.get(&w).re - 0.5 * 2f64.powf(0.25)).abs() < 1e-14);
        let w = Word::from_edges(g, &[g.opposite(e1), e1]);
        assert!((v.get(&w).re - 0.5 * 2f64.powf(-0.25)).abs() < 1e-14);
        assert!(v.self_adjoint_defect(g) < 1e-15);
        assert!(v.symmetrize(&pd).max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn trace_k_zero() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let g = pd.graph();
        let e1 = g.edge_id("e1").unwrap();
        let x = WordSeries::monomial(g, &[e1, g.opposite(e1)], c(1.0));
        let t = trace_k(&x, &pd).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[&0].re - 2f64.powf(0.25)).abs() < 1e-14);
        let t = trace_k(&WordSeries::constant_at(2, c(1.0)), &pd).unwrap();
        assert_eq!(t[&2], c(1.0));
    }
}
