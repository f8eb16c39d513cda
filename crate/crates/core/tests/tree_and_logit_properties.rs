use nestlogit::arborescence::{Arborescence, NodeKind, NodeSpec};
use nestlogit::generate::{random_model, random_single_layer, RandomModelConfig};
use nestlogit::nested_logit::{
    backward_utils, cdf, choice_probs, choice_probs_single_layer, emax, emax_gradient, emax_gradient_fd, emax_single_layer,
    forward_probs, log_sum_exp,
};
use nestlogit::{ModelSpec, SeededStream};
use proptest::prelude::*;

fn model_from_seed(seed: u64) -> ModelSpec {
    random_model(&mut SeededStream::new(seed).rng(), &RandomModelConfig::default())
}

fn ancestors(t: &Arborescence, mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while let Some(p) = t.parent(v) {
        out.push(p);
        v = p;
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lca_matches_ancestor_intersection(seed in any::<u64>(), a in any::<prop::sample::Index>(), b in any::<prop::sample::Index>()) {
        let m = random_model(&mut SeededStream::new(seed).rng(), &RandomModelConfig { max_nodes: 100, ..Default::default() });
        let t = m.tree();
        let (x, y) = (a.index(t.len()), b.index(t.len()));
        let ay = ancestors(t, y);
        let oracle = ancestors(t, x).into_iter().filter(|v| ay.contains(v)).max_by_key(|&v| t.depth(v)).unwrap();
        prop_assert_eq!(t.lca_index(x, y), oracle);
        if x != y && t.is_leaf(x) && t.is_leaf(y) {
            prop_assert!(!t.is_leaf(oracle));
        }
    }

    #[test]
    fn tree_metric_invariants(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let t = m.tree();
        let met = m.metrics();
        prop_assert_eq!(met.depth[0], 0);
        prop_assert_eq!(met.big_lambda[0], 1.0);
        for v in 1..t.len() {
            let p = t.parent(v).unwrap();
            prop_assert_eq!(met.depth[v], met.depth[p] + 1);
            let lam = t.lambda(v).unwrap_or(1.0);
            prop_assert_eq!(met.big_lambda[v], met.big_lambda[p] * lam);
            prop_assert!(met.big_lambda[v] > 0.0 && met.big_lambda[v] <= met.big_lambda[p]);
            let expected: f64 = t.path_from_root(v).iter().map(|&n| t.lambda(n).unwrap()).product();
            prop_assert!((met.big_lambda[v] - expected).abs() <= 1e-15 * expected);
        }
        for v in 0..t.len() {
            let want = if t.is_leaf(v) { 0 } else { 1 + t.children(v).iter().map(|&c| met.height[c]).max().unwrap() };
            prop_assert_eq!(met.height[v], want);
        }
        // Every leaf appears exactly once below the root.
        let below_root: Vec<usize> = t.descendant_leaf_indices(t.root()).collect();
        prop_assert_eq!(below_root.as_slice(), t.leaves());
    }

    #[test]
    fn probabilities_form_a_consistent_simplex(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let u = backward_utils(&m);
        let pi = forward_probs(&m, &u);
        let leaf = pi.on_leaves(m.tree());
        prop_assert!(leaf.iter().all(|&p| p.is_finite() && p >= 0.0));
        prop_assert!((leaf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for n in m.tree().nests() {
            let s: f64 = m.tree().children(n).iter().map(|&c| pi[c]).sum();
            prop_assert!((s - pi[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_invariance(seed in any::<u64>(), c in -20.0f64..20.0) {
        let m = model_from_seed(seed);
        let shifted = m.with_utilities(m.utilities().iter().map(|x| x + c).collect()).unwrap();
        let root = m.tree().id(0).as_str().to_owned();
        prop_assert!((emax(&shifted, &root).unwrap() - emax(&m, &root).unwrap() - c).abs() < 1e-12 * (1.0 + c.abs()) * 10.0);
        for (a, b) in choice_probs(&m).iter().zip(choice_probs(&shifted)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn all_lambdas_one_is_multinomial_logit(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let t = m.tree();
        let specs: Vec<NodeSpec> = (0..t.len()).map(|v| NodeSpec {
            id: t.id(v).as_str().into(),
            parent: t.parent(v).map(|p| t.id(p).as_str().into()),
            kind: if t.is_leaf(v) { NodeKind::Leaf } else { NodeKind::Nest { lambda: 1.0 } },
        }).collect();
        let flat = ModelSpec::new(Arborescence::from_parent_links(&specs).unwrap(), m.utilities().to_vec()).unwrap();
        let lse = log_sum_exp(m.utilities().iter().copied());
        for (p, u) in choice_probs(&flat).iter().zip(m.utilities()) {
            prop_assert!((p - (u - lse).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn single_child_nests_can_be_removed(seed in any::<u64>()) {
        let m = model_from_seed(seed);
        let t = m.tree();
        // Splice out every non-root nest with exactly one child.
        let spliced = |v: usize| v != 0 && !t.is_leaf(v) && t.children(v).len() == 1;
        let mut specs = Vec::new();
        for v in 0..t.len() {
            if spliced(v) { continue; }
            let mut p = t.parent(v);
            while let Some(q) = p { if spliced(q) { p = t.parent(q); } else { break; } }
            specs.push(NodeSpec { id: t.id(v).as_str().into(), parent: p.map(|q| t.id(q).as_str().into()), kind: t.kind(v) });
        }
        let reduced = ModelSpec::new(Arborescence::from_parent_links(&specs).unwrap(), m.utilities().to_vec()).unwrap();
        // Splicing changes Λ below the removed nest unless its λ is 1, so compare
        // on a copy where the removed nests carry λ = 1.
        let specs_full: Vec<NodeSpec> = (0..t.len()).map(|v| NodeSpec {
            id: t.id(v).as_str().into(),
            parent: t.parent(v).map(|p| t.id(p).as_str().into()),
            kind: if spliced(v) { NodeKind::Nest { lambda: 1.0 } } else { t.kind(v) },
        }).collect();
        let full = ModelSpec::new(Arborescence::from_parent_links(&specs_full).unwrap(), m.utilities().to_vec()).unwrap();
        for (a, b) in choice_probs(&full).iter().zip(choice_probs(&reduced)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_layer_formula_equals_passes(seed in any::<u64>()) {
        let m = random_single_layer(&mut SeededStream::new(seed).rng(), 6, 5, &RandomModelConfig::default());
        let direct = choice_probs_single_layer(&m).unwrap();
        for (a, b) in direct.iter().zip(choice_probs(&m)) {
            prop_assert!((a - b).abs() <= 1e-12 * b);
        }
        let root = m.tree().id(0).as_str().to_owned();
        prop_assert!((emax_single_layer(&m).unwrap() - emax(&m, &root).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cdf_is_monotone_and_tends_to_one(seed in any::<u64>(), j in any::<prop::sample::Index>(), base in -2.0f64..2.0) {
        let m = model_from_seed(seed);
        let n = m.tree().leaves().len();
        let mut a = vec![base; n];
        let mut last = cdf(&m, &a).unwrap();
        let k = j.index(n);
        for step in 1..10 {
            a[k] = base + step as f64 * 0.5;
            let next = cdf(&m, &a).unwrap();
            prop_assert!(next >= last - 1e-15);
            last = next;
        }
        prop_assert!(cdf(&m, &vec![60.0; n]).unwrap() > 1.0 - 1e-12);
    }
}

#[test]
fn dzw_gradient_matches_finite_differences_on_random_models() {
    let mut rng = SeededStream::new(2024).rng();
    let cfg = RandomModelConfig::default();
    for _ in 0..200 {
        let m = random_model(&mut rng, &cfg);
        let analytic = emax_gradient(&m);
        let fd = emax_gradient_fd(&m, 1e-5);
        let worst = analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst {worst} on a {}-node model", m.tree().len());
        assert!((analytic.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
