//! Difference quotients, cyclic derivatives, Jacobian matrices, contractions
//! against the vacuum state, and the 2×2 scalar blocks attached to each edge pair.

use std::collections::BTreeMap;
use std::ops::Mul;

use crate::error::{Error, Result};
use crate::fock;
use crate::graph::{EdgeId, Parity, PerronData};
use crate::loop_series::{c, SeriesMatrix, TensorSeries, Word, WordSeries, C64};

/// ∂_e on a series: each letter e° splits the word with weight σ(e).
pub fn partial_e(e: EdgeId, x: &WordSeries, pd: &PerronData) -> TensorSeries {
    let g = pd.graph();
    let eo = g.opposite(e);
    let s = pd.sigma(e);
    let mut out = TensorSeries::new();
    for (w, &a) in x.iter() {
        let edges = w.edges();
        for (k, &f) in edges.iter().enumerate() {
            if f != eo {
                continue;
            }
            let left = Word::with_base(g, &edges[..k], g.source(f));
            let right = Word::with_base(g, &edges[k + 1..], g.target(f));
            out.add_term(left, right, a * s);
        }
    }
    out
}

/// 𝒟_e(e₁⋯e_n) = σ(e°) Σ_{k: e_k=e°} (∏_{l>k} λ(e_l)) e_{k+1}⋯e_n e₁⋯e_{k−1}
pub fn cyclic_d_e(e: EdgeId, x: &WordSeries, pd: &PerronData) -> WordSeries {
    let g = pd.graph();
    let eo = g.opposite(e);
    let lead = pd.sigma(eo);
    let mut out = WordSeries::new();
    out.trunc = x.trunc;
    let mut buf: Vec<EdgeId> = Vec::new();
    for (w, &a) in x.iter() {
        let edges = w.edges();
        let n = edges.len();
        // suffix products of λ
        let mut tail = 1.0;
        for k in (0..n).rev() {
            if edges[k] == eo {
                buf.clear();
                buf.extend_from_slice(&edges[k + 1..]);
                buf.extend_from_slice(&edges[..k]);
                let word = Word::with_base(g, &buf, g.source(e));
                out.add_term(word, a * (lead * tail));
            }
            tail *= pd.lambda(edges[k]);
        }
    }
    out
}

/// (𝒟_e x)_e indexed by edge.
pub fn cyclic_gradient(x: &WordSeries, pd: &PerronData) -> Vec<WordSeries> {
    (0..pd.graph().num_edges()).map(|e| cyclic_d_e(e, x, pd)).collect()
}

/// [𝒥_c Q]_{ef} = ∂_f Q_e
pub fn jacobian(tuple: &[WordSeries], pd: &PerronData) -> SeriesMatrix {
    let n = pd.graph().num_edges();
    let mut m = SeriesMatrix::new(n);
    for (e, q) in tuple.iter().enumerate() {
        for f in 0..n {
            m.set(e, f, partial_e(f, q, pd));
        }
    }
    m
}

/// The tuple C: component e is the single letter e.
pub fn identity_tuple(pd: &PerronData) -> Vec<WordSeries> {
    let g = pd.graph();
    (0..g.num_edges()).map(|e| WordSeries::letter(g, e)).collect()
}

pub fn hash_compose(a: &SeriesMatrix, b: &SeriesMatrix, pd: &PerronData) -> SeriesMatrix {
    a.hash_compose(b, pd.graph())
}

pub fn trace_matrix(m: &SeriesMatrix) -> TensorSeries {
    m.trace()
}

/// Vacuum moment of a leg; the empty leg has moment 1.
pub fn leg_moment(w: &Word, pd: &PerronData) -> C64 {
    if w.is_empty() {
        c(1.0)
    } else {
        fock::moment_unchecked(w.edges(), pd)
    }
}

/// (1⊗φ): a⊗b ↦ a·φ(b)
pub fn contract_left(t: &TensorSeries, pd: &PerronData) -> WordSeries {
    t.contract_right_leg(|b| leg_moment(b, pd))
}

/// (φ⊗1): a⊗b ↦ φ(a)·b
pub fn contract_right(t: &TensorSeries, pd: &PerronData) -> WordSeries {
    t.contract_left_leg(|a| leg_moment(a, pd))
}

pub fn contract_left_matrix(m: &SeriesMatrix, pd: &PerronData) -> BTreeMap<(EdgeId, EdgeId), WordSeries> {
    m.map_entries(|t| contract_left(t, pd))
}

pub fn contract_right_matrix(m: &SeriesMatrix, pd: &PerronData) -> BTreeMap<(EdgeId, EdgeId), WordSeries> {
    m.map_entries(|t| contract_right(t, pd))
}

/// Σ_i e₁⋯e_{i−1}(𝒟_{e_i} g)e_{i+1}⋯e_n over the support of x.
pub fn insert_gradient(x: &WordSeries, g: &WordSeries, pd: &PerronData, d: Option<usize>) -> WordSeries {
    let graph = pd.graph();
    let grad = cyclic_gradient(g, pd);
    let mut out = WordSeries::new().with_trunc(d);
    let mut buf: Vec<EdgeId> = Vec::new();
    for (w, &a) in x.iter() {
        let edges = w.edges();
        for i in 0..edges.len() {
            for (q, &b) in grad[edges[i]].iter() {
                if d.map_or(false, |d| edges.len() - 1 + q.degree() > d) {
                    continue;
                }
                buf.clear();
                buf.extend_from_slice(&edges[..i]);
                buf.extend_from_slice(q.edges());
                buf.extend_from_slice(&edges[i + 1..]);
                out.add_term(Word::with_base(graph, &buf, w.base()), a * b);
            }
        }
    }
    out
}

/// φ⊗φ(∂_e w) for a single edge word.
pub fn split_moment(e: EdgeId, edges: &[EdgeId], pd: &PerronData) -> C64 {
    let g = pd.graph();
    let eo = g.opposite(e);
    let mut s = C64::new(0.0, 0.0);
    for (k, &f) in edges.iter().enumerate() {
        if f == eo {
            s += fock::moment_unchecked(&edges[..k], pd) * fock::moment_unchecked(&edges[k + 1..], pd);
        }
    }
    s * pd.sigma(e)
}

/// Worst violation of φ(𝒟_eV·Q) = φ⊗φ(∂_eQ) for the vacuum state, over all
/// edges e and all path words Q of degree ≤ q_max starting at t(e).
#[derive(Debug, Clone)]
pub struct SdReport {
    pub residual: f64,
    pub worst_edge: Option<EdgeId>,
    pub worst_word: Vec<EdgeId>,
    pub checked: usize,
}

pub fn sd_residual_potential(v: &WordSeries, q_max: usize, pd: &PerronData) -> SdReport {
    let g = pd.graph();
    let grad = cyclic_gradient(v, pd);
    let mut report = SdReport { residual: 0.0, worst_edge: None, worst_word: Vec::new(), checked: 0 };
    for e in 0..g.num_edges() {
        for q in words_from(pd, g.target(e), q_max) {
            let qs = if q.is_empty() {
                WordSeries::constant_at(g.target(e), c(1.0))
            } else {
                WordSeries::monomial(g, &q, c(1.0))
            };
            let lhs = fock::product_moment(&[&grad[e], &qs], pd);
            let rhs = split_moment(e, &q, pd);
            let r = (lhs - rhs).norm();
            report.checked += 1;
            if r > report.residual || report.worst_edge.is_none() {
                report.residual = report.residual.max(r);
                report.worst_edge = Some(e);
                report.worst_word = q.clone();
            }
        }
    }
    report
}

/// Path words of degree 0..=max starting at v.
pub fn words_from(pd: &PerronData, v: usize, max: usize) -> Vec<Vec<EdgeId>> {
    let g = pd.graph();
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Vec<EdgeId>> = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for p in &frontier {
            let end = p.last().map_or(v, |&e| g.target(e));
            for &e in g.out_edges(end) {
                let mut q = p.clone();
                q.push(e);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// 2×2 complex matrix indexed by (e, e°).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Mat2([[c(1.0), c(0.0)], [c(0.0), c(1.0)]])
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Mat2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn adjoint(&self) -> Self {
        let m = self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> C64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() < 1e-300 {
            return None;
        }
        let m = self.0;
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut d = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }

    /// f(H) for Hermitian H through its eigendecomposition.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> f64) -> Self {
        let m = self.0;
        let a = m[0][0].re;
        let d = m[1][1].re;
        let b = m[0][1];
        let mean = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        if rad < 1e-300 {
            return Mat2::identity().scale(c(f(mean)));
        }
        let mut out = Mat2([[c(0.0); 2]; 2]);
        for lam in [mean + rad, mean - rad] {
            // (H − λ)v = 0 has solutions (b, λ − a) and (λ − d, b̄); take the better conditioned
            let v1 = [b, c(lam - a)];
            let v2 = [c(lam - d), b.conj()];
            let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
            let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
            let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
            let fl = f(lam) / n;
            for i in 0..2 {
                for j in 0..2 {
                    out.0[i][j] += v[i] * v[j].conj() * fl;
                }
            }
        }
        out
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = [[c(0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Mat2(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    A,
    U,
    JcC,
    M3,
    M4,
}

fn u_times(f: Mat2, u: Mat2) -> Mat2 {
    u * f * u.transpose()
}

/// The block for the pair (e, e°), e ∈ E_+.
pub fn block(which: Block, e: EdgeId, pd: &PerronData) -> Result<Mat2> {
    let g = pd.graph();
    if g.parity(g.source(e)) != Parity::Plus {
        return Err(Error::InvalidConfig(format!("edge {} is not in E_+", g.edge(e).name)));
    }
    let lam = pd.lambda(e);
    let i = C64::new(0.0, 1.0);
    let diag = c(0.5 * (lam + 1.0 / lam));
    let off = 0.5 * (lam - 1.0 / lam);
    let a = Mat2([[diag, -i * off], [i * off, diag]]);
    let s = (pd.sigma(e) + pd.sigma(g.opposite(e))).sqrt() / 2.0;
    let u = Mat2([[c(s), -i * s], [c(s), i * s]]);
    let invert = |m: Mat2| m.inverse().ok_or_else(|| Error::InvalidConfig("singular block".into()));
    Ok(match which {
        Block::A => a,
        Block::U => u,
        Block::JcC => u_times(a.hermitian_fn(|t| 2.0 / (1.0 + t)), u),
        Block::M3 => invert(u_times(a.hermitian_fn(|t| 2.0 / (t * (1.0 + t))), u))?,
        Block::M4 => invert(u_times(a.hermitian_fn(|t| 2.0 * t / (1.0 + t)), u))?,
    })
}

/// Block-diagonal E×E scalar matrix assembled from the 2×2 blocks.
pub fn block_entries(which: Block, pd: &PerronData) -> Result<BTreeMap<(EdgeId, EdgeId), C64>> {
    let g = pd.graph();
    let mut out = BTreeMap::new();
    for e in g.positive_edges() {
        let eo = g.opposite(e);
        let m = block(which, e, pd)?;
        let idx = [e, eo];
        for (r, &x) in idx.iter().enumerate() {
            for (col, &y) in idx.iter().enumerate() {
                if m.0[r][col].norm() > 1e-300 {
                    out.insert((x, y), m.0[r][col]);
                }
            }
        }
    }
    Ok(out)
}
