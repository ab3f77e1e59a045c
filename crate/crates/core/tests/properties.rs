mod common;

use common::*;
use proptest::prelude::*;

use planar_transport::calculus::{
    cyclic_d_e, cyclic_gradient, insert_gradient, partial_e,
};
use planar_transport::fock::{self, Basis, FockVector};
use planar_transport::loop_series::wedge_k;
use planar_transport::temperley_lieb::{pairing_moment, v0};
use planar_transport::transport::l_map;
use planar_transport::{PerronData, WordSeries};

fn pick(which: usize) -> PerronData {
    match which % 5 {
        0 => a_n(3),
        1 => a_n(4),
        2 => a_n(5),
        3 => star(),
        _ => double_edge(),
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn perron_vector_is_an_eigenvector(n in 2usize..14, which in 0usize..3) {
        let pd = match which {
            0 => a_n(n),
            1 => star(),
            _ => double_edge(),
        };
        let adj = pd.graph().adjacency();
        for (v, row) in adj.iter().enumerate() {
            let av: f64 = row.iter().zip(&pd.mu).map(|(a, m)| a * m).sum();
            prop_assert!((av - pd.delta * pd.mu[v]).abs() <= 1e-12 * pd.delta);
            prop_assert!(pd.mu[v] > 0.0);
        }
        let top = pd.mu.iter().cloned().fold(0.0, f64::max);
        prop_assert!((top - 1.0).abs() < 1e-15);
        for e in 0..pd.graph().num_edges() {
            let o = pd.graph().opposite(e);
            prop_assert!((pd.sigma(e) * pd.sigma(o) - 1.0).abs() <= 1e-12);
            let g = pd.graph();
            prop_assert!(pd.lambda(e) <= pd.delta * (1.0 + 1e-12));
            if g.out_edges(g.source(e)).len() > 1 {
                prop_assert!(pd.lambda(e) < pd.delta * (1.0 - 1e-9));
            } else {
                prop_assert!((pd.lambda(e) - pd.delta).abs() <= 1e-12 * pd.delta);
            }
        }
    }

    #[test]
    fn sigma_ignores_eigenvector_scale(which in 0usize..5, scale in 0.01f64..100.0) {
        let pd = pick(which);
        let mu: Vec<f64> = pd.mu.iter().map(|m| m * scale).collect();
        let other = PerronData::from_parts(pd.graph(), pd.delta, mu, 0, 0.0);
        for e in 0..pd.graph().num_edges() {
            prop_assert!((pd.sigma(e) - other.sigma(e)).abs() < 1e-13);
        }
    }

    #[test]
    fn loop_product_is_associative(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let v = seed as usize % g.num_vertices();
        let x = random_series(&pd, 3, 4, Some(v), &mut r);
        let y = random_series(&pd, 3, 4, Some(v), &mut r);
        let z = random_series(&pd, 3, 4, Some(v), &mut r);
        let left = x.multiply(&y, g).unwrap().multiply(&z, g).unwrap();
        let right = x.multiply(&y.multiply(&z, g).unwrap(), g).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn graded_product_is_associative(which in 0usize..5, k in 1usize..3, seed in any::<u64>()) {
        let pd = pick(which);
        let mut r = rng(seed);
        let x = random_graded(&pd, k, &mut r);
        let y = random_graded(&pd, k, &mut r);
        let z = random_graded(&pd, k, &mut r);
        let left = wedge_k(&wedge_k(&x, &y, &pd).unwrap(), &z, &pd).unwrap();
        let right = wedge_k(&x, &wedge_k(&y, &z, &pd).unwrap(), &pd).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
    }

    #[test]
    fn involution_reverses_products(which in 0usize..5, k in 0usize..3, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let (x, y) = if k == 0 {
            let v = seed as usize % g.num_vertices();
            (random_series(&pd, 3, 6, Some(v), &mut r), random_series(&pd, 3, 6, Some(v), &mut r))
        } else {
            (random_graded(&pd, k, &mut r), random_graded(&pd, k, &mut r))
        };
        let lhs = wedge_k(&x, &y, &pd).unwrap().involution(g);
        let rhs = wedge_k(&y.involution(g), &x.involution(g), &pd).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        prop_assert!(x.involution(g).involution(g).max_abs_diff(&x) == 0.0);
    }

    #[test]
    fn full_rotation_is_identity(which in 0usize..5, half in 1usize..4, seed in any::<u64>()) {
        let pd = pick(which);
        let mut r = rng(seed);
        let mut x = WordSeries::new();
        for _ in 0..4 {
            if let Some(l) = random_loop(&pd, 2 * half, None, &mut r) {
                x.add_term(planar_transport::Word::from_edges(pd.graph(), &l), random_coeff(&mut r));
            }
        }
        prop_assert!(x.rho_power(&pd, 2 * half).max_abs_diff(&x) <= 1e-12);
        let mut y = x.clone();
        for _ in 0..2 * half {
            y = y.rho(&pd);
        }
        prop_assert!(y.max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn modular_flow_fixes_loops(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 5, 8, None, &mut rng(seed));
        prop_assert!(x.sigma_minus_i(&pd).max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn norm_is_submultiplicative(which in 0usize..5, r_scale in 1.0f64..3.0, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let v = seed as usize % g.num_vertices();
        let x = random_series(&pd, 4, 6, Some(v), &mut r);
        let y = random_series(&pd, 4, 6, Some(v), &mut r);
        let rr = r_scale * pd.delta.sqrt();
        let xy = x.multiply(&y, g).unwrap().norm_r(rr, &pd);
        prop_assert!(xy <= x.norm_r(rr, &pd) * y.norm_r(rr, &pd) * (1.0 + 1e-12));
    }

    #[test]
    fn rotation_norm_dominates_and_matches_on_symmetric(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 5, 8, None, &mut rng(seed));
        let rr = 4.0 * pd.delta.sqrt();
        prop_assert!(x.norm_r(rr, &pd) <= x.norm_r_sigma(rr, &pd) * (1.0 + 1e-12));
        let s = x.symmetrize(&pd);
        prop_assert!(rel_close(s.norm_r(rr, &pd), s.norm_r_sigma(rr, &pd), 1e-12));
    }

    #[test]
    fn number_map_inverts_sigma_map(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 6, 8, None, &mut rng(seed));
        let a = x.sigma_inv_map().unwrap().number_map();
        let b = x.number_map().sigma_inv_map().unwrap();
        prop_assert!(a.max_abs_diff(&x) <= 1e-12);
        prop_assert!(b.max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn symmetrize_is_idempotent_and_fixes_v0(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 5, 8, None, &mut rng(seed));
        let s = x.symmetrize(&pd);
        prop_assert!(s.symmetrize(&pd).max_abs_diff(&s) <= 1e-12);
        prop_assert!(s.rotation_defect(&pd) <= 1e-12);
        let v = v0(&pd);
        prop_assert!(v.symmetrize(&pd).max_abs_diff(&v) <= 1e-15);
        prop_assert!(v.self_adjoint_defect(pd.graph()) == 0.0);
    }

    #[test]
    fn substitution_respects_degree_cap(which in 0usize..5, d in 2usize..10, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let x = random_series(&pd, 5, 8, None, &mut r);
        let id: Vec<WordSeries> = (0..g.num_edges()).map(|e| WordSeries::letter(g, e)).collect();
        let same = x.substitute(&id, d, g).unwrap();
        let mut kept = WordSeries::new();
        for (w, a) in x.iter() {
            if w.degree() <= d {
                kept.add_term(w.clone(), *a);
            }
        }
        prop_assert!(same.max_abs_diff(&kept) == 0.0);

        // images of mixed degree 1 and 3: every surviving word has degree ≤ d
        let h = random_series(&pd, 3, 4, None, &mut r);
        let bumped: Vec<WordSeries> = cyclic_gradient(&h, &pd)
            .iter()
            .enumerate()
            .map(|(e, s)| WordSeries::letter(g, e).add(s))
            .collect();
        let y = x.substitute(&bumped, d, g).unwrap();
        prop_assert!(y.max_degree().map_or(true, |m| m <= d));
        prop_assert!(y.iter().all(|(w, _)| w.is_loop(g)));
    }

    #[test]
    fn substitution_first_order_is_insertion(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let x = random_series(&pd, 3, 6, None, &mut r);
        let h = random_series(&pd, 3, 4, None, &mut r);
        let grad = cyclic_gradient(&h, &pd);
        let d = 64;
        // x(C + εF) − x(C) − ε·insert is a polynomial in ε with no linear term;
        // the combination below cancels the quadratic term too
        let moved = |eps: f64| -> WordSeries {
            let images: Vec<WordSeries> = grad
                .iter()
                .enumerate()
                .map(|(e, s)| WordSeries::letter(g, e).add(&s.scale(c(eps))))
                .collect();
            x.substitute(&images, d, g).unwrap().sub(&x)
        };
        let eps = 1e-4;
        let lin = moved(eps).scale(c(2.0 / eps)).sub(&moved(2.0 * eps).scale(c(0.5 / eps)));
        let ins = insert_gradient(&x, &h, &pd, None);
        let scale = ins.max_abs().max(1.0);
        prop_assert!(lin.max_abs_diff(&ins) <= 1e-6 * scale, "{}", lin.max_abs_diff(&ins));
    }

    #[test]
    fn pairing_sum_matches_vacuum_moment(which in 0usize..5, half in 1usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        if let Some(l) = random_loop(&pd, 2 * half, None, &mut rng(seed)) {
            let a = pairing_moment(&l, &pd);
            let b = fock::vacuum_moment(&l, &pd).unwrap();
            prop_assert!((b - c(a)).norm() <= 1e-10);
        }
    }

    #[test]
    fn word_action_stays_within_its_length(which in 0usize..5, half in 1usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        if let Some(l) = random_loop(&pd, 2 * half, None, &mut rng(seed)) {
            let mut cur = FockVector::vacuum();
            let mut depth = 0;
            for &e in l.iter().rev() {
                cur = fock::apply_c(e, &cur, &pd);
                depth = depth.max(cur.max_depth());
            }
            prop_assert!(depth <= l.len());
            let m = fock::vacuum_moment(&l, &pd).unwrap();
            prop_assert!((cur.get(&Basis::Vacuum) - m).norm() <= 1e-12);
        }
    }

    #[test]
    fn trace_is_tracial(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let v = seed as usize % g.num_vertices();
        let (Some(u), Some(w)) = (random_loop(&pd, 2 * (1 + seed as usize % 3), Some(v), &mut r),
                                  random_loop(&pd, 2 * (1 + (seed >> 8) as usize % 3), Some(v), &mut r)) else {
            return Ok(());
        };
        let uw: Vec<usize> = u.iter().chain(&w).copied().collect();
        let wu: Vec<usize> = w.iter().chain(&u).copied().collect();
        prop_assert!((pairing_moment(&uw, &pd) - pairing_moment(&wu, &pd)).abs() <= 1e-10);
    }

    #[test]
    fn leibniz_rule(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let v = seed as usize % g.num_vertices();
        let x = random_series(&pd, 3, 6, Some(v), &mut r);
        let y = random_series(&pd, 3, 6, Some(v), &mut r);
        let one = WordSeries::constant_at(v, c(1.0));
        let xy = x.multiply(&y, g).unwrap();
        for e in 0..g.num_edges() {
            let lhs = partial_e(e, &xy, &pd);
            let mut rhs = partial_e(e, &x, &pd).act(&one, &y, g);
            rhs.axpy(c(1.0), &partial_e(e, &y, &pd).act(&x, &one, g));
            prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        }
    }

    #[test]
    fn cyclic_derivative_ignores_symmetrization(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 5, 8, None, &mut rng(seed));
        let s = x.symmetrize(&pd);
        for e in 0..pd.graph().num_edges() {
            prop_assert!(cyclic_d_e(e, &s, &pd).max_abs_diff(&cyclic_d_e(e, &x, &pd)) <= 1e-12);
        }
    }

    #[test]
    fn l_map_inverts_gradient(which in 0usize..5, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_series(&pd, 5, 8, None, &mut rng(seed)).symmetrize(&pd);
        let back = l_map(&cyclic_gradient(&x.sigma_inv_map().unwrap(), &pd), &pd);
        prop_assert!(back.max_abs_diff(&x) <= 1e-12);
    }

    #[test]
    fn inclusion_preserves_state(which in 0usize..5, k in 1usize..3, seed in any::<u64>()) {
        let pd = pick(which);
        let x = random_graded(&pd, k - 1, &mut rng(seed));
        let lhs = fock::phi_k(&fock::include(&x, &pd).unwrap(), &pd).unwrap();
        let rhs = fock::phi_k(&x, &pd).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn graded_action_is_multiplicative(which in 0usize..5, k in 1usize..3, seed in any::<u64>()) {
        let pd = pick(which);
        let g = pd.graph();
        let mut r = rng(seed);
        let a = random_graded(&pd, k, &mut r);
        let b = random_graded(&pd, k, &mut r);
        let ab = wedge_k(&a, &b, &pd).unwrap();
        for len in k..=k + 2 {
            for p in g.paths(len) {
                let v = FockVector::path(&p);
                let one = fock::c_k_apply(&ab, &v, &pd).unwrap();
                let two = fock::c_k_apply(&a, &fock::c_k_apply(&b, &v, &pd).unwrap(), &pd).unwrap();
                prop_assert!(one.max_abs_diff(&two) <= 1e-10);
            }
        }
    }
}
