use lewisgraph::bounds::alpha2;
use lewisgraph::laplacian::leverage_scores;
use lewisgraph::lewis::lewis_weights;
use lewisgraph::oracle::{design_gap_demo, geometric_mean, harmonic_mean, hm_gm_construct};
use lewisgraph::resistance::{effective_resistance, kirchhoff, kirchhoff_gradient, kirchhoff_pairwise, metric_check};
use lewisgraph::stt::{max_spanning_tree, thinness};
use lewisgraph::trees::{lower_lt, polarize, TreeInstance};
use lewisgraph::{build_graph, generate, BuildOptions, Family, Graph, LaplacianSystem, WeightVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// A random tree on `n` vertices plus `extra` random chords.
fn connected_graph(n: usize, extra: usize, seed: u64) -> Graph {
    let tree = generate(&Family::RandomTree { n }, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut pairs: Vec<(u64, u64)> = tree.edges().iter().map(|&(u, v)| (u as u64, v as u64)).collect();
    for _ in 0..extra {
        pairs.push((rng.gen_range(0..n as u64), rng.gen_range(0..n as u64)));
    }
    build_graph(&pairs, BuildOptions::cleanup()).unwrap()
}

fn random_weights(m: usize, seed: u64) -> WeightVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    WeightVector((0..m).map(|_| rng.gen_range(0.1..3.0)).collect()).normalized()
}

fn graph_and_weights() -> impl Strategy<Value = (Graph, WeightVector)> {
    (3usize..24, 0usize..30, any::<u64>()).prop_map(|(n, extra, seed)| {
        let g = connected_graph(n, extra, seed);
        let w = random_weights(g.m(), seed.wrapping_add(1));
        (g, w)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn leverage_scores_sum_to_rank((g, w) in graph_and_weights()) {
        let tau = leverage_scores(&g, &w).unwrap();
        let sum: f64 = tau.iter().sum();
        prop_assert!((sum - (g.n() - 1) as f64).abs() < 1e-9);
        prop_assert!(tau.iter().all(|&t| t > 0.0 && t <= 1.0 + 1e-12));
    }

    #[test]
    fn resistance_pairs_with_weights((g, w) in graph_and_weights()) {
        let sys = LaplacianSystem::assemble(&g, &w).unwrap();
        let r = sys.edge_resistances().unwrap();
        let s: f64 = r.iter().zip(w.as_slice()).map(|(r, g)| r * g).sum();
        prop_assert!((s - (g.n() - 1) as f64).abs() < 1e-7);
    }

    #[test]
    fn resistance_is_homogeneous((g, w) in graph_and_weights(), c in 0.05f64..20.0) {
        let a = LaplacianSystem::assemble(&g, &w).unwrap();
        let b = LaplacianSystem::assemble(&g, &w.scaled(c)).unwrap();
        let (i, j) = (0, g.n() - 1);
        let (ra, rb) = (effective_resistance(&a, i, j).unwrap(), effective_resistance(&b, i, j).unwrap());
        prop_assert!(rel(rb, ra / c) < 1e-9);
        prop_assert!(rel(b.trace_pinv().unwrap(), a.trace_pinv().unwrap() / c) < 1e-9);
        let shift = (g.n() - 1) as f64 * c.ln();
        prop_assert!((b.logdet_pinv().unwrap() - (a.logdet_pinv().unwrap() - shift)).abs() < 1e-8);
    }

    #[test]
    fn kirchhoff_by_trace_and_by_pairs((g, w) in graph_and_weights()) {
        let sys = LaplacianSystem::assemble(&g, &w).unwrap();
        prop_assert!(rel(kirchhoff(&sys).unwrap(), kirchhoff_pairwise(&sys).unwrap()) < 1e-8);
    }

    #[test]
    fn kirchhoff_gradient_by_differences((g, w) in graph_and_weights(), pick in any::<prop::sample::Index>()) {
        let sys = LaplacianSystem::assemble(&g, &w).unwrap();
        let grad = kirchhoff_gradient(&sys).unwrap();
        let l = pick.index(g.m());
        let h = 1e-6 * w.0[l];
        let at = |d: f64| {
            let mut x = w.0.clone();
            x[l] += d;
            kirchhoff(&LaplacianSystem::assemble(&g, &WeightVector(x)).unwrap()).unwrap()
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        prop_assert!(rel(fd, grad[l]) < 1e-4, "{} vs {}", fd, grad[l]);
    }

    #[test]
    fn resistance_is_a_metric((g, w) in graph_and_weights(), seed in any::<u64>()) {
        prop_assume!(g.n() >= 3);
        let sys = LaplacianSystem::assemble(&g, &w).unwrap();
        let rep = metric_check(&sys, 40, seed).unwrap();
        prop_assert_eq!(rep.violations, 0);
    }

    #[test]
    fn alpha2_at_least_one((g, w) in graph_and_weights()) {
        let sys = LaplacianSystem::assemble(&g, &w).unwrap();
        prop_assert!(alpha2(&sys).unwrap() >= 1.0 - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lewis_weights_minimize_max_resistance(n in 8usize..30, extra in 10usize..40, seed in any::<u64>()) {
        let g = connected_graph(n, extra, seed);
        let eps = 0.01;
        let lw = lewis_weights(&g, eps).unwrap();
        prop_assert!(lw.converged);
        let n1 = (g.n() - 1) as f64;
        for k in 0..20 {
            let other = random_weights(g.m(), seed.wrapping_add(k));
            let sys = LaplacianSystem::assemble(&g, &other).unwrap();
            let rmax = sys.edge_resistances().unwrap().into_iter().fold(0.0, f64::max);
            prop_assert!(rmax >= (1.0 - 3.0 * eps) * n1);
        }
    }

    #[test]
    fn lewis_weights_are_uniform_on_trees(n in 2usize..60, seed in any::<u64>()) {
        let g = generate(&Family::RandomTree { n }, seed).unwrap();
        let lw = lewis_weights(&g, 0.01).unwrap();
        prop_assert!(lw.w_inf.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        prop_assert_eq!(lw.iterations, 1);
    }

    #[test]
    fn tree_closed_forms(n in 2usize..80, seed in any::<u64>()) {
        let t = TreeInstance::from_graph(&generate(&Family::RandomTree { n }, seed).unwrap()).unwrap();
        let m = (n - 1) as u64;
        let c = t.congestions();
        prop_assert!(c.iter().all(|&x| x >= m && x <= (n as u64 * n as u64) / 4));
        let sum: f64 = c.iter().map(|&x| x as f64).sum();
        let g2: f64 = t.g_star().iter().map(|g| g * g).sum();
        prop_assert!(rel(t.k_star() * g2, sum) < 1e-9);
        prop_assert!(t.g_star().iter().all(|&g| g <= 1.0 / (m as f64).sqrt() + 1e-12));
        prop_assert!((t.g_star().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_transformations_raise_alpha(n in 4usize..60, seed in any::<u64>()) {
        let t = TreeInstance::from_graph(&generate(&Family::RandomTree { n }, seed).unwrap()).unwrap();
        for k in (0..t.m()).filter(|&k| !t.in_upper(k) && !t.is_leaf_edge(k)) {
            let out = lower_lt(&t, k).unwrap();
            prop_assert_eq!(out.tree.congestions()[k], t.m() as u64);
            for l in (0..t.m()).filter(|&l| l != k) {
                prop_assert_eq!(out.tree.congestions()[l], t.congestions()[l]);
            }
            prop_assert!(out.tree.alpha() >= t.alpha() - 1e-12);
        }
    }

    #[test]
    fn polarization_is_monotone(n in 3usize..60, seed in any::<u64>()) {
        let t = TreeInstance::from_graph(&generate(&Family::RandomTree { n }, seed).unwrap()).unwrap();
        let p = polarize(&t).unwrap();
        prop_assert!(p.bowtie.is_some());
        prop_assert!(p.final_alpha >= p.initial_alpha - 1e-12);
        for s in &p.steps {
            prop_assert!(s.alpha_after >= s.alpha_before - 1e-12);
        }
    }

    /// Adding a leaf raises both `K(g_uni) = m Σc` and `K*`, though not
    /// necessarily their ratio.
    #[test]
    fn adding_a_leaf_raises_both_kirchhoff_values(n in 2usize..50, seed in any::<u64>(), at in any::<prop::sample::Index>()) {
        let t = TreeInstance::from_graph(&generate(&Family::RandomTree { n }, seed).unwrap()).unwrap();
        let mut e = t.edges().to_vec();
        e.push((at.index(n), n));
        let t2 = TreeInstance::new(n + 1, e).unwrap();
        let k_uni = |t: &TreeInstance| t.m() as f64 * t.congestions().iter().map(|&c| c as f64).sum::<f64>();
        prop_assert!(k_uni(&t2) > k_uni(&t));
        prop_assert!(t2.k_star() > t.k_star());
    }

    #[test]
    fn thinness_scales_linearly(n in 6usize..30, extra in 5usize..30, seed in any::<u64>(), c in 0.1f64..10.0) {
        let g = connected_graph(n, extra, seed);
        let tree = max_spanning_tree(&g, &random_weights(g.m(), seed).0);
        let w = random_weights(tree.len(), seed.wrapping_add(3)).0;
        let a = thinness(&g, &tree, &w).unwrap();
        let wc: Vec<f64> = w.iter().map(|x| x * c).collect();
        let b = thinness(&g, &tree, &wc).unwrap();
        prop_assert!(rel(b, c * a) < 1e-8);
        // the edge resistance barrier for unit weights
        let ones = vec![1.0; tree.len()];
        let gamma = thinness(&g, &tree, &ones).unwrap();
        let sys = LaplacianSystem::assemble(&g, &WeightVector::ones(g.m())).unwrap();
        let r = sys.edge_resistances().unwrap();
        let rmax = tree.iter().map(|&l| r[l]).fold(0.0, f64::max);
        prop_assert!(gamma >= rmax - 1e-9);
    }
}

proptest! {
    #[test]
    fn hm_gm_rescaling(x in prop::collection::vec(0.01f64..100.0, 2..20), t in 0.01f64..0.99) {
        let y = hm_gm_construct(&x, t).unwrap();
        prop_assert!(rel(geometric_mean(&y), geometric_mean(&x)) < 1e-10);
        prop_assert!(rel(harmonic_mean(&y), t * harmonic_mean(&x)) < 1e-10);
    }

    #[test]
    fn design_gap_grows(n in 2usize..5000) {
        let a = design_gap_demo(n).unwrap();
        let b = design_gap_demo(n + 1).unwrap();
        prop_assert!(b.ratio > a.ratio);
        prop_assert!(a.trace_at_inverse_law <= a.trace_at_lw);
    }
}

#[test]
fn adding_a_leaf_can_lower_alpha() {
    let t = TreeInstance::new(8, vec![(0, 1), (0, 2), (2, 3), (0, 4), (3, 5), (1, 6), (6, 7)]).unwrap();
    let mut e = t.edges().to_vec();
    e.push((4, 8));
    let t2 = TreeInstance::new(9, e).unwrap();
    assert!((t.alpha() - 1.026841662995342).abs() < 1e-12);
    assert!((t2.alpha() - 1.0264303438754132).abs() < 1e-12);
    assert!(t2.alpha() < t.alpha());
}
