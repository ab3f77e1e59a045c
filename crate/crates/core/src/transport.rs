//! Free transport from the quadratic potential v₀ to v₀ + w at finite degree.

use std::collections::BTreeMap;

use log::{debug, warn};
use serde::Serialize;

use crate::calculus::{self, block_entries, Block};
use crate::error::{Error, Result};
use crate::fock::{self, ActionCache, PackedFock};
use crate::graph::{EdgeId, PerronData, VertexId};
use crate::loop_series::{c, letter_weights, split_graded, SeriesMatrix, Word, WordSeries, C64};
use crate::temperley_lieb;

#[derive(Debug, Clone, Serialize)]
pub struct TransportConfig {
    pub r: f64,
    pub r_prime: f64,
    /// Truncation degree D.
    pub degree: usize,
    pub m_max: usize,
    pub tol_fix: f64,
    pub k_max: usize,
    pub q_max: usize,
}

impl TransportConfig {
    pub fn defaults(pd: &PerronData) -> Self {
        let r = 4.0 * pd.delta.sqrt();
        TransportConfig { r, r_prime: r + 1.0, degree: 8, m_max: 40, tol_fix: 1e-12, k_max: 100, q_max: 4 }
    }

    pub fn with_degree(mut self, d: usize) -> Self {
        self.degree = d;
        self
    }

    pub fn validate(&self, pd: &PerronData) -> Result<()> {
        let floor = 4.0 * pd.delta.sqrt();
        if self.r < floor * (1.0 - 1e-12) {
            return Err(Error::InvalidConfig(format!("R = {} is below 4√δ = {floor}", self.r)));
        }
        if self.r_prime <= self.r {
            return Err(Error::InvalidConfig("R' must exceed R".into()));
        }
        if self.degree < 4 || self.degree % 2 == 1 || self.degree > fock::PACKED_MAX_DEPTH {
            return Err(Error::InvalidConfig(format!(
                "degree {} must be even, at least 4 and at most {}",
                self.degree,
                fock::PACKED_MAX_DEPTH
            )));
        }
        if self.m_max == 0 {
            return Err(Error::InvalidConfig("m_max must be at least 1".into()));
        }
        if !(self.tol_fix > 0.0) {
            return Err(Error::InvalidConfig("tol_fix must be positive".into()));
        }
        Ok(())
    }

    pub fn m_sum(&self) -> usize {
        self.m_max.min(self.degree)
    }
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    pub g: WordSeries,
    pub g_hat: WordSeries,
    pub iterations: usize,
    pub delta_history: Vec<f64>,
    /// Largest ‖·‖_R row-sum proxy of B seen over the iteration.
    pub xi: f64,
    /// Largest degree-0 part of that proxy; must stay below 1.
    pub xi_scalar: f64,
    pub m_tail_bound: f64,
    pub sd_residual: f64,
    pub norm_g: f64,
    pub norm_w: f64,
    /// Iterates with ‖Ĝ‖_{R′,σ} > 1.
    pub excursions: usize,
    /// Largest coefficient of Ĝ* − Ĝ seen over the iteration.
    pub adjoint_defect: f64,
}

impl TransportResult {
    /// 𝒮(g) = g up to rounding.
    pub fn rotation_ok(&self, pd: &PerronData) -> bool {
        self.g.rotation_defect(pd) <= 1e-12 * (1.0 + self.g.max_abs())
    }
}

/// Output of one application of F.
#[derive(Debug, Clone)]
pub struct FOutput {
    pub value: WordSeries,
    /// Max row sum of ‖B_{ef}‖_R.
    pub xi: f64,
    /// Same, restricted to the degree-0 part of B.
    pub xi_scalar: f64,
    pub tail_bound: f64,
}

/// Y_e = e + 𝒟_e g
pub fn transported_generators(g: &WordSeries, pd: &PerronData) -> Vec<WordSeries> {
    let graph = pd.graph();
    calculus::cyclic_gradient(g, pd)
        .into_iter()
        .enumerate()
        .map(|(e, mut f)| {
            f.trunc = None;
            f.add_term(Word::letter(graph, e), c(1.0));
            f
        })
        .collect()
}

/// B = 𝒥_cC # J; 𝒥_cC is scalar, so B_{ef} = Σ_h (𝒥_cC)_{eh} J_{hf}.
pub fn chain_matrix(j: &SeriesMatrix, pd: &PerronData) -> Result<SeriesMatrix> {
    let mut b = SeriesMatrix::new(j.n);
    for (&(e, h), &s) in &block_entries(Block::JcC, pd)? {
        for f in 0..j.n {
            if let Some(t) = j.get(h, f) {
                let mut acc = b.get(e, f).cloned().unwrap_or_default();
                acc.axpy(s, t);
                b.set(e, f, acc);
            }
        }
    }
    Ok(b)
}

/// Max row sums of the degree-0 and positive-degree parts of B, in ‖·‖_R.
fn split_row_sums(b: &SeriesMatrix, weights: &[f64]) -> (f64, f64) {
    let mut rows: BTreeMap<EdgeId, (f64, f64)> = BTreeMap::new();
    for (&(e, _), t) in b.entries() {
        let slot = rows.entry(e).or_default();
        for ((a, d), s) in t.iter() {
            let w: f64 = a.edges().iter().chain(d.edges()).map(|&x| weights[x]).product();
            if a.is_empty() && d.is_empty() {
                slot.0 += s.norm();
            } else {
                slot.1 += s.norm() * w;
            }
        }
    }
    rows.values().fold((0.0, 0.0), |(m0, m1), &(a, b)| (m0.max(a), m1.max(b)))
}

/// Σ_{m>m_sum} (1/m) Σ_{j≤min(m,max_pos)} C(m,j) ξ₊^j ξ₀^{m−j}: the norm of the
/// dropped m-terms when at most `max_pos` factors of positive degree survive
/// truncation. Infinite if ξ₀ ≥ 1.
pub fn m_tail_bound(xi0: f64, xi_pos: f64, m_sum: usize, max_pos: usize) -> f64 {
    if xi0 >= 1.0 {
        return f64::INFINITY;
    }
    let mut total = 0.0;
    let mut m = m_sum + 1;
    loop {
        let mut inner = 0.0;
        // C(m, j) built incrementally in log space
        let mut log_binom = 0.0f64;
        for jj in 0..=m.min(max_pos) {
            if jj > 0 {
                log_binom += ((m - jj + 1) as f64).ln() - (jj as f64).ln();
            }
            let term = if xi0 == 0.0 && jj < m {
                0.0
            } else if xi_pos == 0.0 && jj > 0 {
                0.0
            } else {
                let l0 = if m == jj { 0.0 } else { (m - jj) as f64 * xi0.ln() };
                let l1 = if jj == 0 { 0.0 } else { jj as f64 * xi_pos.ln() };
                (log_binom + l0 + l1).exp()
            };
            inner += term;
        }
        let contrib = inner / m as f64;
        total += contrib;
        if (m > max_pos + m_sum && contrib <= 1e-17 * total.max(1e-300)) || m > 1_000_000 {
            break;
        }
        if xi0 == 0.0 && m >= max_pos {
            break;
        }
        m += 1;
    }
    total
}

type Entry = Vec<(Word, Word, C64)>;

fn entry_lists(m: &SeriesMatrix) -> BTreeMap<(EdgeId, EdgeId), Entry> {
    m.entries()
        .map(|(&k, t)| (k, t.iter().map(|((a, b), s)| (a.clone(), b.clone(), *s)).collect()))
        .collect()
}

fn max_leg(entries: &BTreeMap<(EdgeId, EdgeId), Entry>, right: bool) -> usize {
    entries
        .values()
        .flat_map(|v| v.iter())
        .map(|(a, b, _)| if right { b.degree() } else { a.degree() })
        .max()
        .unwrap_or(0)
}

/// Σ_{m=1}^{m_sum} (−1)^{m+1}/m [(1⊗φ)Tr(M₃#J#B^{m−1}) + (φ⊗1)Tr(M₄#J#B^{m−1})]
/// with B = 𝒥_cC#J. Each chain keeps the free leg as a word (truncated at D)
/// and the contracted leg as a Fock vector; components deeper than D are
/// dropped, as are those the remaining factors cannot bring back to the vacuum.
pub fn log_series(j: &SeriesMatrix, cfg: &TransportConfig, pd: &PerronData) -> Result<WordSeries> {
    let g = pd.graph();
    let d = cfg.degree;
    let m_sum = cfg.m_sum();
    if g.num_edges() > 254 {
        return Err(Error::InvalidConfig("the m-series supports at most 254 edges".into()));
    }
    let m3 = block_entries(Block::M3, pd)?;
    let m4 = block_entries(Block::M4, pd)?;

    let b = chain_matrix(j, pd)?;
    let jl = entry_lists(j);
    let bl = entry_lists(&b);
    let mut out = WordSeries::new().with_trunc(Some(d));

    // (1⊗φ) chain, left to right. Key: (row, col, left word).
    {
        let r_b = max_leg(&bl, true);
        let mut states: BTreeMap<(EdgeId, EdgeId, Word), PackedFock> = BTreeMap::new();
        let cap = d.min(r_b * (m_sum - 1));
        for (&(h, i), terms) in &jl {
            for (a, dd, s) in terms {
                let v = PackedFock::vacuum().apply_word(dd.edges(), pd, cap);
                let slot = states.entry((h, i, a.clone())).or_default();
                slot.axpy(*s, &v);
            }
        }
        let mut cache = ActionCache::new(0);
        let mut b_rows: BTreeMap<EdgeId, Vec<(EdgeId, &Entry)>> = BTreeMap::new();
        for (&(i, k), terms) in &bl {
            b_rows.entry(i).or_default().push((k, terms));
        }
        for m in 1..=m_sum {
            let coef = if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64;
            for ((h, i, lw), v) in &states {
                if let Some(&s3) = m3.get(&(*i, *h)) {
                    let z = v.vacuum_coeff();
                    if z.norm() > 0.0 {
                        out.add_term(lw.clone(), s3 * z * coef);
                    }
                }
            }
            if m == m_sum || states.is_empty() {
                break;
            }
            cache.set_cap(d.min(r_b * (m_sum - m - 1)));
            let mut next: BTreeMap<(EdgeId, EdgeId, Word), PackedFock> = BTreeMap::new();
            for ((h, i, lw), v) in &states {
                let Some(row) = b_rows.get(i) else { continue };
                let mut applied: BTreeMap<&Word, PackedFock> = BTreeMap::new();
                for (k, terms) in row {
                    for (a, dd, s) in terms.iter() {
                        if lw.degree() + a.degree() > d {
                            continue;
                        }
                        let Some(nw) = lw.compose(a, g) else { continue };
                        let w = applied
                            .entry(dd)
                            .or_insert_with(|| cache.apply(dd.edges(), v, pd));
                        if w.is_empty() {
                            continue;
                        }
                        next.entry((*h, *k, nw)).or_default().axpy_deferred(*s, w);
                    }
                }
            }
            next.values_mut().for_each(PackedFock::normalize);
            next.retain(|_, v| !v.is_empty());
            states = next;
        }
    }

    // (φ⊗1) chain, right to left. Key: (row, col, right word) for B^{m−1};
    // the leading J factor is applied when reading off each term.
    {
        let r_b = max_leg(&bl, false);
        let r_j = max_leg(&jl, false);
        let mut j_cols: BTreeMap<EdgeId, Vec<(EdgeId, &Entry)>> = BTreeMap::new();
        for (&(h, i), terms) in &jl {
            j_cols.entry(i).or_default().push((h, terms));
        }
        let mut b_cols: BTreeMap<EdgeId, Vec<(EdgeId, &Entry)>> = BTreeMap::new();
        for (&(k, i), terms) in &bl {
            b_cols.entry(i).or_default().push((k, terms));
        }
        let mut cache = ActionCache::new(0);
        let mut closing = ActionCache::new(0);
        let unit = Word::empty(0);
        let mut states: BTreeMap<(EdgeId, EdgeId, Word), PackedFock> = BTreeMap::new();
        for i in 0..j.n {
            states.insert((i, i, unit.clone()), PackedFock::vacuum());
        }
        for m in 1..=m_sum {
            let coef = if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64;
            for ((i, e, rw), v) in &states {
                let Some(col) = j_cols.get(i) else { continue };
                for (h, terms) in col {
                    let Some(&s4) = m4.get(&(*e, *h)) else { continue };
                    for (a, dd, s) in terms.iter() {
                        if rw.degree() + dd.degree() > d {
                            continue;
                        }
                        let z = closing.apply(a.edges(), v, pd).vacuum_coeff();
                        if z.norm() == 0.0 {
                            continue;
                        }
                        if let Some(nw) = rw.compose(dd, g) {
                            out.add_term(nw, s4 * s * z * coef);
                        }
                    }
                }
            }
            if m == m_sum || states.is_empty() {
                break;
            }
            cache.set_cap(d.min(r_b * (m_sum - m - 1) + r_j));
            let mut next: BTreeMap<(EdgeId, EdgeId, Word), PackedFock> = BTreeMap::new();
            for ((i, e, rw), v) in &states {
                let Some(col) = b_cols.get(i) else { continue };
                let mut applied: BTreeMap<&Word, PackedFock> = BTreeMap::new();
                for (k, terms) in col {
                    for (a, dd, s) in terms.iter() {
                        if rw.degree() + dd.degree() > d {
                            continue;
                        }
                        let Some(nw) = rw.compose(dd, g) else { continue };
                        let w = applied
                            .entry(a)
                            .or_insert_with(|| cache.apply(a.edges(), v, pd));
                        if w.is_empty() {
                            continue;
                        }
                        next.entry((*k, *e, nw)).or_default().axpy_deferred(*s, w);
                    }
                }
            }
            next.values_mut().for_each(PackedFock::normalize);
            next.retain(|_, v| !v.is_empty());
            states = next;
        }
    }
    Ok(out)
}

/// Matrix form of the same sum, built from explicit # products and
/// contractions. Slow; kept as a cross-check for [`log_series`].
pub fn log_series_reference(j: &SeriesMatrix, cfg: &TransportConfig, pd: &PerronData) -> Result<WordSeries> {
    let g = pd.graph();
    let d = cfg.degree;
    let jc = SeriesMatrix::scalar(j.n, &block_entries(Block::JcC, pd)?, g);
    let m3 = SeriesMatrix::scalar(j.n, &block_entries(Block::M3, pd)?, g);
    let m4 = SeriesMatrix::scalar(j.n, &block_entries(Block::M4, pd)?, g);
    let b = jc.hash_compose(j, g);
    let mut p = j.clone();
    let mut out = WordSeries::new().with_trunc(Some(d));
    for m in 1..=cfg.m_sum() {
        let coef = c(if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64);
        let t3 = m3.hash_compose(&p, g).trace();
        let t4 = m4.hash_compose(&p, g).trace();
        out.axpy(coef, &calculus::contract_left(&t3, pd).truncate(d));
        out.axpy(coef, &calculus::contract_right(&t4, pd).truncate(d));
        p = p.hash_compose(&b, g);
    }
    Ok(out)
}

/// F(G) = −W(C+𝒟_cΣG) − ½Σ_e σ(e)(𝒟_eΣG)(𝒟_{e°}ΣG) + log terms.
pub fn map_f(big_g: &WordSeries, w: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<FOutput> {
    let graph = pd.graph();
    let d = cfg.degree;
    let norm = big_g.norm_r_sigma(cfg.r_prime, pd);
    if norm > 1.0 {
        debug!("‖G‖_(R',σ) = {norm:.4} exceeds 1");
    }
    let sg = big_g.sigma_inv_map()?;
    let f = calculus::cyclic_gradient(&sg, pd);

    let images = transported_generators(&sg, pd);
    let mut value = w.substitute(&images, d, graph)?.scale(c(-1.0));

    for e in 0..graph.num_edges() {
        let eo = graph.opposite(e);
        let prod = f[e].operator_product(&f[eo], graph).truncate(d);
        value.axpy(c(-0.5 * pd.sigma(e)), &prod);
    }

    let j = calculus::jacobian(&f, pd);
    let weights = letter_weights(cfg.r, pd);
    let b = chain_matrix(&j, pd)?;
    let xi = b.row_sum_norm(&weights);
    let (xi_scalar, xi_positive) = split_row_sums(&b, &weights);
    let m_sum = cfg.m_sum();
    if !j.is_zero() && xi_scalar >= 1.0 {
        return Err(Error::PerturbationTooLarge { xi: xi_scalar });
    }
    let tail_bound = if j.is_zero() { 0.0 } else { m_tail_bound(xi_scalar, xi_positive, m_sum, 2 * d) };
    if !j.is_zero() {
        value.axpy(c(1.0), &log_series(&j, cfg, pd)?);
    }
    Ok(FOutput { value: value.truncate(d), xi, xi_scalar, tail_bound })
}

/// Symmetrizes and checks the perturbation.
pub fn prepare_perturbation(w: &WordSeries, pd: &PerronData) -> Result<WordSeries> {
    let g = pd.graph();
    if w.k != 0 {
        return Err(Error::GradingMismatch { left: w.k, right: 0 });
    }
    if !w.is_loop_supported(g) {
        return Err(Error::InvalidConfig("perturbation must be supported on loops".into()));
    }
    if w.iter().any(|(u, _)| u.degree() <= 2) {
        return Err(Error::InvalidConfig("perturbation must have no terms of degree ≤ 2".into()));
    }
    let s = w.symmetrize(pd);
    let defect = s.self_adjoint_defect(g);
    if defect > 1e-12 * (1.0 + s.max_abs()) {
        return Err(Error::InvalidConfig(format!("perturbation is not self-adjoint (defect {defect:e})")));
    }
    Ok(s)
}

/// Fixed-point iteration Ĝ_{k+1} = 𝒮ΠF(Ĝ_k) from Ĝ₀ = w; g = ΣĜ.
pub fn solve_transport(w: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<TransportResult> {
    cfg.validate(pd)?;
    let graph = pd.graph();
    let d = cfg.degree;
    let w = prepare_perturbation(w, pd)?.truncate(d);
    let mut cur = w.clone();
    let mut history = Vec::new();
    let mut xi = 0.0f64;
    let mut xi_scalar = 0.0f64;
    let mut tail = 0.0f64;
    let mut excursions = 0;
    let mut adjoint_defect = cur.self_adjoint_defect(graph);
    let mut converged = w.is_empty();
    let mut iterations = 0;
    while !converged && iterations < cfg.k_max {
        if cur.norm_r_sigma(cfg.r_prime, pd) > 1.0 {
            excursions += 1;
        }
        let fo = map_f(&cur, &w, cfg, pd)?;
        xi = xi.max(fo.xi);
        xi_scalar = xi_scalar.max(fo.xi_scalar);
        tail = tail.max(fo.tail_bound);
        let next = fo.value.remove_constant().symmetrize(pd).truncate(d);
        let delta = next.sub(&cur).norm_r_sigma(cfg.r_prime, pd);
        adjoint_defect = adjoint_defect.max(next.self_adjoint_defect(graph));
        debug!("iteration {}: delta {delta:e}", iterations + 1);
        history.push(delta);
        cur = next;
        iterations += 1;
        converged = delta < cfg.tol_fix;
    }
    if excursions > 0 {
        warn!("{excursions} of {iterations} iterates left the unit ball of ‖·‖_(R',σ)");
    }
    if !converged {
        return Err(Error::FixedPointNoConvergence { iterations, last: history.last().copied().unwrap_or(f64::NAN) });
    }
    let g = cur.sigma_inv_map()?;
    let sd = sd_residual(&g, &w, cfg, pd)?;
    Ok(TransportResult {
        norm_g: g.norm_r_sigma(cfg.r_prime, pd),
        norm_w: w.norm_r_sigma(cfg.r_prime + 1.0, pd),
        g,
        g_hat: cur,
        iterations,
        delta_history: history,
        xi,
        xi_scalar,
        m_tail_bound: tail,
        sd_residual: sd,
        excursions,
        adjoint_defect,
    })
}

/// η(x) = x(C + 𝒟_c g), truncated at D.
pub fn eta(x: &WordSeries, g: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<WordSeries> {
    if x.k != 0 {
        return eta_k(x, g, cfg, pd);
    }
    x.substitute(&transported_generators(g, pd), cfg.degree, pd.graph())
}

/// Grading-k version: substitutes into the middle loop u of u·f°·e only.
pub fn eta_k(x: &WordSeries, g: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<WordSeries> {
    let graph = pd.graph();
    let k = x.k;
    let images = transported_generators(g, pd);
    let mut out = WordSeries::graded(k);
    for (w, &a) in x.iter() {
        let (u, fo, e) = split_graded(w, k)
            .ok_or_else(|| Error::MalformedWord { k, reason: w.display(graph) })?;
        let middle = if u.is_empty() {
            WordSeries::constant_at(w.base(), c(1.0))
        } else {
            WordSeries::monomial(graph, u, c(1.0))
        };
        let budget = cfg.degree.saturating_sub(2 * k).max(u.len());
        for (uu, &b) in middle.substitute(&images, budget, graph)?.iter() {
            let mut edges: Vec<EdgeId> = uu.edges().to_vec();
            edges.extend_from_slice(fo);
            edges.extend_from_slice(e);
            out.add_term(Word::from_edges(graph, &edges), a * b);
        }
    }
    Ok(out)
}

/// Tr₀∘η as a single number.
pub fn perturbed_trace(x: &WordSeries, g: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<C64> {
    fock::state(&eta(x, g, cfg, pd)?, pd)
}

/// Tr₀∘η resolved by base vertex.
pub fn perturbed_trace_by_vertex(
    x: &WordSeries,
    g: &WordSeries,
    cfg: &TransportConfig,
    pd: &PerronData,
) -> Result<BTreeMap<VertexId, C64>> {
    temperley_lieb::trace_k(&eta(x, g, cfg, pd)?, pd)
}

/// State of a series whose words may exceed the Fock word limit.
fn state_unchecked(x: &WordSeries, pd: &PerronData) -> C64 {
    x.iter()
        .map(|(w, &a)| if w.is_empty() { a } else { a * fock::moment_unchecked(w.edges(), pd) })
        .sum()
}

/// φ(p(Y)) for a word p, expanded to excess degree D over the word's degree.
fn moment_at(word: &[EdgeId], images: &[WordSeries], cfg: &TransportConfig, pd: &PerronData) -> Result<C64> {
    if word.is_empty() {
        return Ok(c(1.0));
    }
    let graph = pd.graph();
    let x = WordSeries::monomial(graph, word, c(1.0));
    Ok(state_unchecked(&x.substitute(images, word.len() + cfg.degree, graph)?, pd))
}

/// Worst Schwinger-Dyson defect of Y = C + 𝒟_c g for the potential v₀ + w:
/// |φ(Y_e·Q(Y)) − φ⊗φ([∂_eQ](Y)) + φ([𝒟_eW](Y)·Q(Y))| over edges e and path
/// words Q from t(e) to s(e) of degree ≤ q_max. Each product is expanded up to
/// D degrees beyond its own degree before taking the exact vacuum moment.
pub fn sd_residual(g: &WordSeries, w: &WordSeries, cfg: &TransportConfig, pd: &PerronData) -> Result<f64> {
    Ok(sd_residual_detail(g, w, cfg, pd)?.0)
}

pub fn sd_residual_detail(
    g: &WordSeries,
    w: &WordSeries,
    cfg: &TransportConfig,
    pd: &PerronData,
) -> Result<(f64, Option<(EdgeId, Vec<EdgeId>)>)> {
    let graph = pd.graph();
    let images = transported_generators(g, pd);
    let dw = calculus::cyclic_gradient(w, pd);
    let mut worst = 0.0f64;
    let mut arg = None;
    for e in 0..graph.num_edges() {
        let eo = graph.opposite(e);
        for q in calculus::words_from(pd, graph.target(e), cfg.q_max) {
            let end = q.last().map_or(graph.target(e), |&x| graph.target(x));
            if end != graph.source(e) {
                continue;
            }
            let mut eq = vec![e];
            eq.extend_from_slice(&q);
            let lhs = moment_at(&eq, &images, cfg, pd)?;
            let mut split = C64::new(0.0, 0.0);
            for (k, &f) in q.iter().enumerate() {
                if f == eo {
                    split += moment_at(&q[..k], &images, cfg, pd)? * moment_at(&q[k + 1..], &images, cfg, pd)?;
                }
            }
            split *= pd.sigma(e);
            let mut wterm = C64::new(0.0, 0.0);
            for (u, &b) in dw[e].iter() {
                let mut uq = u.edges().to_vec();
                uq.extend_from_slice(&q);
                wterm += b * moment_at(&uq, &images, cfg, pd)?;
            }
            let r = (lhs - split + wterm).norm();
            if r > worst || arg.is_none() {
                worst = worst.max(r);
                arg = Some((e, q.clone()));
            }
        }
    }
    Ok((worst, arg))
}

/// L(H) = Σ_e σ(e) H_e·e°
pub fn l_map(h: &[WordSeries], pd: &PerronData) -> WordSeries {
    let g = pd.graph();
    let mut out = WordSeries::new();
    for (e, he) in h.iter().enumerate() {
        let eo = g.opposite(e);
        let tail = WordSeries::letter(g, eo);
        out.axpy(c(pd.sigma(e)), &he.operator_product(&tail, g));
    }
    out
}

/// H_e = Σ σ(e°)β(u·e°) u, so that L(H) = h when h has no constant term.
pub fn coefficient_split(h: &WordSeries, pd: &PerronData) -> Vec<WordSeries> {
    let g = pd.graph();
    let mut out = vec![WordSeries::new(); g.num_edges()];
    for (w, &a) in h.iter() {
        let Some((&last, rest)) = w.edges().split_last() else { continue };
        let e = g.opposite(last);
        let u = Word::with_base(g, rest, g.source(last));
        out[e].add_term(u, a * pd.sigma(last));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseReport {
    /// Coefficient distance of η(x_k) to x, k = 0, 1, ...
    pub distances: Vec<f64>,
    pub converged: bool,
    /// max_e ‖𝒟_e g‖_{R′}
    pub gradient_norm: f64,
}

/// H₀ = C, H_{k+1} = C − f(H_k) with f = 𝒟_c g; x_k = x(H_k). Stops once the
/// distance of η(x_k) to x falls below `tol` or after `max_steps`.
pub fn inverse_iteration(
    g: &WordSeries,
    x: &WordSeries,
    cfg: &TransportConfig,
    pd: &PerronData,
    tol: f64,
    max_steps: usize,
) -> Result<(Vec<WordSeries>, InverseReport)> {
    let graph = pd.graph();
    let d = cfg.degree;
    let f = calculus::cyclic_gradient(g, pd);
    let gradient_norm = f.iter().map(|s| s.norm_r(cfg.r_prime, pd)).fold(0.0, f64::max);
    let y = transported_generators(g, pd);
    let mut h: Vec<WordSeries> = calculus::identity_tuple(pd);
    let mut xs = Vec::new();
    let mut distances: Vec<f64> = Vec::new();
    let mut rises = 0;
    let mut converged = false;
    for step in 0..=max_steps {
        let xk = x.substitute(&h, d, graph)?;
        debug_assert!(xk.iter().all(|(w, _)| w.is_loop(graph)));
        let back = xk.substitute(&y, d, graph)?;
        let dist = back.max_abs_diff(&x.truncate(d));
        if let Some(&prev) = distances.last() {
            if dist > prev {
                rises += 1;
            } else {
                rises = 0;
            }
        }
        distances.push(dist);
        xs.push(xk);
        if rises >= 3 {
            return Err(Error::Divergence { step, history: distances });
        }
        if dist < tol {
            converged = true;
            break;
        }
        let mut next = Vec::with_capacity(h.len());
        for (e, fe) in f.iter().enumerate() {
            let mut he = WordSeries::letter(graph, e);
            he.axpy(c(-1.0), &fe.substitute(&h, d, graph)?);
            next.push(he);
        }
        h = next;
    }
    Ok((xs, InverseReport { distances, converged, gradient_norm }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;
    use crate::temperley_lieb::v0;

    fn quartic(pd: &PerronData, t: f64) -> WordSeries {
        let g = pd.graph();
        let e = g.edge_id("e1").unwrap();
        let o = g.opposite(e);
        WordSeries::monomial(g, &[e, o, e, o], c(t)).symmetrize(pd)
    }

    #[test]
    fn f_of_zero() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let cfg = TransportConfig::defaults(&pd);
        let z = WordSeries::new();
        assert!(map_f(&z, &z, &cfg, &pd).unwrap().value.is_empty());
        let w = quartic(&pd, 0.3);
        let f = map_f(&z, &w, &cfg, &pd).unwrap().value;
        assert!(f.add(&w).max_abs() < 1e-15);
    }

    #[test]
    fn chain_matches_matrix_form() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let cfg = TransportConfig::defaults(&pd).with_degree(6);
        let mut big = quartic(&pd, 0.05);
        let g = pd.graph();
        let e2 = g.edge_id("e2").unwrap();
        big.add_term(Word::from_edges(g, &[e2, g.opposite(e2)]), c(0.02));
        let big = big.symmetrize(&pd);
        let f = calculus::cyclic_gradient(&big.sigma_inv_map().unwrap(), &pd);
        let j = calculus::jacobian(&f, &pd);
        let fast = log_series(&j, &cfg, &pd).unwrap();
        let slow = log_series_reference(&j, &cfg, &pd).unwrap();
        assert!(fast.remove_constant().max_abs() > 1e-6);
        // empty legs carry no definite vertex, so only the constant totals agree
        let diff = fast.remove_constant().max_abs_diff(&slow.remove_constant());
        assert!(diff < 1e-13, "{diff}");
        let total = |x: &WordSeries| x.iter().filter(|(w, _)| w.is_empty()).map(|(_, a)| *a).sum::<C64>();
        assert!((total(&fast) - total(&slow)).norm() < 1e-13);
    }

    #[test]
    fn zero_perturbation() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let cfg = TransportConfig::defaults(&pd);
        let r = solve_transport(&WordSeries::new(), &cfg, &pd).unwrap();
        assert!(r.g.is_empty());
        assert_eq!(r.iterations, 0);
        assert!(r.sd_residual < 1e-9);
        let x = v0(&pd);
        assert_eq!(eta(&x, &r.g, &cfg, &pd).unwrap().max_abs_diff(&x), 0.0);
    }

    #[test]
    fn rejects_quadratic_and_bad_config() {
        let pd = PerronData::new(&BipartiteGraph::a_n(2)).unwrap();
        let cfg = TransportConfig::defaults(&pd);
        assert!(solve_transport(&v0(&pd), &cfg, &pd).is_err());
        let mut bad = cfg.clone();
        bad.r_prime = bad.r;
        assert!(bad.validate(&pd).is_err());
        assert!(cfg.clone().with_degree(5).validate(&pd).is_err());
    }

    #[test]
    fn solves_small_a2() {
        let pd = PerronData::new(&BipartiteGraph::a_n(2)).unwrap();
        let cfg = TransportConfig::defaults(&pd).with_degree(6);
        let w = quartic(&pd, 0.01);
        let r = solve_transport(&w, &cfg, &pd).unwrap();
        assert!(r.rotation_ok(&pd));
        assert!(r.adjoint_defect < 1e-14);
        let sd0 = sd_residual(&WordSeries::new(), &w, &cfg, &pd).unwrap();
        assert!(r.sd_residual < sd0 / 10.0);
        assert!(r.g.get(&Word::empty(0)).norm() == 0.0);
    }

    #[test]
    fn l_map_inverts_gradient() {
        let pd = PerronData::new(&BipartiteGraph::a_n(3)).unwrap();
        let v = v0(&pd);
        let d = calculus::cyclic_gradient(&v.sigma_inv_map().unwrap(), &pd);
        assert!(l_map(&d, &pd).max_abs_diff(&v) < 1e-14);
        let x = quartic(&pd, 1.0);
        let d = calculus::cyclic_gradient(&x.sigma_inv_map().unwrap(), &pd);
        assert!(l_map(&d, &pd).max_abs_diff(&x) < 1e-13);
        let h = coefficient_split(&x, &pd);
        assert!(l_map(&h, &pd).max_abs_diff(&x) < 1e-14);
    }

    #[test]
    fn tail_bound_cases() {
        assert_eq!(m_tail_bound(0.0, 0.0, 4, 8), 0.0);
        assert!(m_tail_bound(1.0, 0.1, 4, 8).is_infinite());
        let exact: f64 = (5..=8).map(|m| 0.5f64.powi(m) / m as f64).sum();
        assert!((m_tail_bound(0.0, 0.5, 4, 8) - exact).abs() < 1e-15);
        let geo: f64 = (5..2000).map(|m| 0.5f64.powi(m) / m as f64).sum();
        assert!((m_tail_bound(0.5, 0.0, 4, 8) - geo).abs() < 1e-15);
    }
}
