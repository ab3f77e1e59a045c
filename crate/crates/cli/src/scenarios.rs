//! Named verification scenarios run by `ptrans verify`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use planar_transport::calculus::sd_residual_potential;
use planar_transport::fock::{self, FockVector};
use planar_transport::loop_series::wedge_k;
use planar_transport::temperley_lieb::{pairing_moment, v0};
use planar_transport::transport::{
    eta, inverse_iteration, perturbed_trace, prepare_perturbation, sd_residual, solve_transport, TransportConfig,
};
use planar_transport::{EdgeId, PerronData, Word, WordSeries};

use crate::report::{Criterion, Failure, Report};

pub struct ScenarioOptions {
    pub t: f64,
    pub degree: usize,
    pub samples: usize,
    pub max_degree: usize,
    pub seed: u64,
    pub w: WordSeries,
}

fn random_loop(pd: &PerronData, len: usize, rng: &mut ChaCha8Rng) -> Option<Vec<EdgeId>> {
    let loops = pd.graph().loops(len, None);
    if loops.is_empty() {
        return None;
    }
    Some(loops[rng.gen_range(0..loops.len())].clone())
}

/// Random combination of a few loops of length 2k + {0, 2, 4}, in grading k.
fn random_graded(pd: &PerronData, k: usize, rng: &mut ChaCha8Rng) -> WordSeries {
    let g = pd.graph();
    let mut x = WordSeries::graded(k);
    for _ in 0..3 {
        let len = 2 * k + 2 * rng.gen_range(0..3);
        if len == 0 {
            let v = rng.gen_range(0..g.num_vertices());
            x.add_term(Word::empty(v), Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            continue;
        }
        if let Some(l) = random_loop(pd, len, rng) {
            let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            x.add_term(Word::from_edges(g, &l), a);
        }
    }
    x
}

pub fn oracle_match(pd: &PerronData, opts: &ScenarioOptions, report: &mut Report) -> Result<(), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let max_half = (opts.max_degree / 2).max(1);
    for _ in 0..opts.samples {
        let len = 2 * rng.gen_range(1..=max_half);
        let Some(l) = random_loop(pd, len, &mut rng) else { continue };
        let a = pairing_moment(&l, pd);
        let b = fock::vacuum_moment(&l, pd)?;
        worst = worst.max((b - a).norm());
        checked += 1;
    }
    report.results = json!({ "checked": checked, "max_deviation": worst });
    report.criteria.push(Criterion::at_most("pairing sum equals vacuum moment", worst, 1e-10));
    report.criteria.push(Criterion::flag("sampled at least one loop", checked > 0));
    Ok(())
}

pub fn sd_v0(pd: &PerronData, opts: &ScenarioOptions, report: &mut Report) -> Result<(), Failure> {
    let r = sd_residual_potential(&v0(pd), opts.max_degree, pd);
    let g = pd.graph();
    report.results = json!({
        "residual": r.residual,
        "checked": r.checked,
        "worst_edge": r.worst_edge.map(|e| g.edge(e).name.clone()),
        "worst_word": r.worst_word.iter().map(|&e| g.edge(e).name.clone()).collect::<Vec<_>>(),
    });
    report.criteria.push(Criterion::at_most("Schwinger-Dyson residual for v0", r.residual, 1e-9));
    Ok(())
}

pub fn transport_small_t(pd: &PerronData, opts: &ScenarioOptions, report: &mut Report) -> Result<(), Failure> {
    let cfg = TransportConfig::defaults(pd).with_degree(opts.degree);
    let w = opts.w.scale(Complex64::new(opts.t, 0.0));
    if opts.t == 0.0 {
        let r = solve_transport(&WordSeries::new(), &cfg, pd)?;
        let x = v0(pd);
        let same = eta(&x, &r.g, &cfg, pd)?.max_abs_diff(&x);
        let tr = (perturbed_trace(&x, &r.g, &cfg, pd)? - fock::state(&x, pd)?).norm();
        report.results = json!({ "g_terms": r.g.len(), "eta_defect": same, "trace_defect": tr });
        report.criteria.push(Criterion::flag("g = 0", r.g.is_empty()));
        report.criteria.push(Criterion::at_most("eta is the identity", same, 0.0));
        report.criteria.push(Criterion::at_most("perturbed trace equals trace", tr, 0.0));
        return Ok(());
    }
    let r = solve_transport(&w, &cfg, pd)?;
    let wsym = prepare_perturbation(&w, pd)?;
    let sd0 = sd_residual(&WordSeries::new(), &wsym, &cfg, pd)?;
    let decreasing = r.delta_history.windows(2).skip(1).all(|p| p[1] < p[0]);
    let mut sweep = Vec::new();
    let mut d = 4;
    while d <= opts.degree {
        let c = TransportConfig::defaults(pd).with_degree(d);
        let s = solve_transport(&w, &c, pd)?;
        sweep.push((d, s.sd_residual));
        d += 2;
    }
    let monotone = sweep.windows(2).all(|p| p[1].1 <= p[0].1);
    report.results = json!({
        "iterations": r.iterations,
        "delta_history": r.delta_history,
        "sd_residual": r.sd_residual,
        "sd_residual_unsolved": sd0,
        "sd_by_degree": sweep,
        "norm_g": r.norm_g,
        "xi": r.xi,
        "xi_scalar": r.xi_scalar,
        "m_tail_bound": r.m_tail_bound,
        "excursions": r.excursions,
    });
    report.criteria.push(Criterion::at_most("iterations", r.iterations as f64, 30.0));
    report.criteria.push(Criterion::flag("delta strictly decreasing after step 2", decreasing));
    report.criteria.push(Criterion::at_most("solved residual", r.sd_residual, 1e-6));
    report.criteria.push(Criterion::at_most("solved residual / unsolved residual", r.sd_residual / sd0, 0.1));
    report.criteria.push(Criterion::flag("residual non-increasing in degree", monotone));
    Ok(())
}

pub fn inverse(pd: &PerronData, opts: &ScenarioOptions, report: &mut Report) -> Result<(), Failure> {
    let g = pd.graph();
    let cfg = TransportConfig::defaults(pd).with_degree(opts.degree);
    let w = opts.w.scale(Complex64::new(opts.t, 0.0));
    let r = solve_transport(&w, &cfg, pd)?;
    let mut rows = Vec::new();
    let mut worst_final = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut worst_steps = 0usize;
    for e in 0..g.num_edges() {
        let x = WordSeries::monomial(g, &[e, g.opposite(e)], Complex64::new(1.0, 0.0));
        let (_, rep) = inverse_iteration(&r.g, &x, &cfg, pd, 1e-6, 20)?;
        let last = *rep.distances.last().unwrap();
        let ratio = rep
            .distances
            .windows(2)
            .filter(|p| p[0] > 0.0)
            .map(|p| p[1] / p[0])
            .fold(0.0, f64::max);
        worst_final = worst_final.max(last);
        worst_ratio = worst_ratio.max(ratio);
        worst_steps = worst_steps.max(rep.distances.len() - 1);
        rows.push(json!({ "x": [g.edge(e).name.clone(), g.edge(g.opposite(e)).name.clone()], "distances": rep.distances }));
    }
    report.results = json!({ "runs": rows, "worst_ratio": worst_ratio, "steps": worst_steps });
    report.criteria.push(Criterion::below("final distance", worst_final, 1e-6));
    report.criteria.push(Criterion::at_most("steps", worst_steps as f64, 20.0));
    report.criteria.push(Criterion::below("decay ratio", worst_ratio, 0.5));
    Ok(())
}

pub fn tower(pd: &PerronData, opts: &ScenarioOptions, report: &mut Report) -> Result<(), Failure> {
    let g = pd.graph();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut inc = 0.0f64;
    let mut mult = 0.0f64;
    for k in 1..=2 {
        for _ in 0..opts.samples {
            let x = random_graded(pd, k - 1, &mut rng);
            let lhs = fock::phi_k(&fock::include(&x, pd)?, pd)?;
            let rhs = fock::phi_k(&x, pd)?;
            inc = inc.max((lhs - rhs).norm());

            let a = random_graded(pd, k, &mut rng);
            let b = random_graded(pd, k, &mut rng);
            let ab = wedge_k(&a, &b, pd)?;
            for len in k..=k + 2 {
                for p in g.paths(len) {
                    let v = FockVector::path(&p);
                    let one = fock::c_k_apply(&ab, &v, pd)?;
                    let two = fock::c_k_apply(&a, &fock::c_k_apply(&b, &v, pd)?, pd)?;
                    mult = mult.max(one.max_abs_diff(&two));
                }
            }
        }
    }
    report.results = json!({ "inclusion_defect": inc, "multiplicativity_defect": mult });
    report.criteria.push(Criterion::at_most("phi_k after inclusion equals phi_(k-1)", inc, 1e-10));
    report.criteria.push(Criterion::at_most("c_k multiplicative", mult, 1e-10));
    Ok(())
}
