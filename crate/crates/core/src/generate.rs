//! Reference models and random model generators.

use crate::arborescence::{Arborescence, NodeKind, NodeSpec, RawNode};
use crate::nested_logit::ModelSpec;
use rand::Rng;

fn leaf(id: &str) -> RawNode {
    RawNode::Leaf { id: id.into() }
}

fn nest(id: &str, lambda: f64, children: Vec<RawNode>) -> RawNode {
    RawNode::Nest { id: id.into(), lambda, children }
}

fn from_raw(root: RawNode, utilities: Vec<f64>) -> ModelSpec {
    ModelSpec::new(Arborescence::build(&root).expect("valid reference tree"), utilities).expect("finite utilities")
}

/// root → {a(0.5) → {b(0.5) → {leaf0, leaf1}, leaf2}, leaf3}, all utilities zero.
pub fn reference_depth3() -> ModelSpec {
    from_raw(
        nest(
            "root",
            1.0,
            vec![nest("a", 0.5, vec![nest("b", 0.5, vec![leaf("leaf0"), leaf("leaf1")]), leaf("leaf2")]), leaf("leaf3")],
        ),
        vec![0.0; 4],
    )
}

/// root → {A(0.5) → {1, 2}, B(1) → {3}}, all utilities zero.
pub fn single_layer_example() -> ModelSpec {
    from_raw(
        nest("root", 1.0, vec![nest("A", 0.5, vec![leaf("1"), leaf("2")]), nest("B", 1.0, vec![leaf("3")])]),
        vec![0.0; 3],
    )
}

/// root → {a(0.5) → {1, 2}, 3}.
pub fn five_node() -> ModelSpec {
    from_raw(nest("root", 1.0, vec![nest("a", 0.5, vec![leaf("1"), leaf("2")]), leaf("3")]), vec![0.0; 3])
}

/// One nest {1, 2} with the given λ under the root.
pub fn single_nest(lambda: f64) -> ModelSpec {
    from_raw(nest("root", 1.0, vec![nest("n", lambda, vec![leaf("1"), leaf("2")])]), vec![0.0; 2])
}

/// Multinomial logit: every alternative directly under the root.
pub fn plain_logit(utilities: &[f64]) -> ModelSpec {
    let leaves = (0..utilities.len()).map(|j| leaf(&format!("j{j}"))).collect();
    from_raw(nest("root", 1.0, leaves), utilities.to_vec())
}

pub const EXAMPLE_NAMES: &[&str] = &["reference", "single-layer", "five-node", "single-nest", "logit"];

pub fn named_example(name: &str) -> Option<ModelSpec> {
    Some(match name {
        "reference" => reference_depth3(),
        "single-layer" => single_layer_example(),
        "five-node" => five_node(),
        "single-nest" => single_nest(0.5),
        "logit" => plain_logit(&[0.0, 0.0]),
        _ => return None,
    })
}

/// Ranges used when drawing random models.
#[derive(Debug, Clone, Copy)]
pub struct RandomModelConfig {
    pub max_nodes: usize,
    pub lambda: (f64, f64),
    pub utility: (f64, f64),
    /// Chance that a new node is a nest rather than an alternative.
    pub nest_probability: f64,
}

impl Default for RandomModelConfig {
    fn default() -> Self {
        Self { max_nodes: 50, lambda: (0.05, 1.0), utility: (-5.0, 5.0), nest_probability: 0.4 }
    }
}

/// Random tree of 2..=max_nodes nodes: each new node hangs under a uniformly
/// chosen earlier nest; nests left childless become alternatives.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, cfg: &RandomModelConfig) -> ModelSpec {
    let n = rng.random_range(2..=cfg.max_nodes.max(2));
    let mut parent = vec![None];
    let mut is_nest = vec![true];
    let mut nests = vec![0usize];
    for i in 1..n {
        parent.push(Some(nests[rng.random_range(0..nests.len())]));
        let nest = rng.random_bool(cfg.nest_probability);
        is_nest.push(nest);
        if nest {
            nests.push(i);
        }
    }
    let mut has_child = vec![false; n];
    for p in parent.iter().flatten() {
        has_child[*p] = true;
    }
    let specs: Vec<NodeSpec> = (0..n)
        .map(|i| {
            let kind = if i == 0 {
                NodeKind::Nest { lambda: 1.0 }
            } else if is_nest[i] && has_child[i] {
                NodeKind::Nest { lambda: rng.random_range(cfg.lambda.0..=cfg.lambda.1) }
            } else {
                NodeKind::Leaf
            };
            NodeSpec { id: format!("z{i}"), parent: parent[i].map(|p| format!("z{p}")), kind }
        })
        .collect();
    let tree = Arborescence::from_parent_links(&specs).expect("generated tree is valid");
    let utilities = (0..tree.leaves().len()).map(|_| rng.random_range(cfg.utility.0..=cfg.utility.1)).collect();
    ModelSpec::new(tree, utilities).expect("finite utilities")
}

/// Random root → nests → alternatives model.
pub fn random_single_layer<R: Rng + ?Sized>(rng: &mut R, max_nests: usize, max_per_nest: usize, cfg: &RandomModelConfig) -> ModelSpec {
    let n_nests = rng.random_range(1..=max_nests.max(1));
    let mut specs = vec![NodeSpec { id: "root".into(), parent: None, kind: NodeKind::Nest { lambda: 1.0 } }];
    for k in 0..n_nests {
        let nest_id = format!("n{k}");
        specs.push(NodeSpec {
            id: nest_id.clone(),
            parent: Some("root".into()),
            kind: NodeKind::Nest { lambda: rng.random_range(cfg.lambda.0..=cfg.lambda.1) },
        });
        for j in 0..rng.random_range(1..=max_per_nest.max(1)) {
            specs.push(NodeSpec { id: format!("n{k}j{j}"), parent: Some(nest_id.clone()), kind: NodeKind::Leaf });
        }
    }
    let tree = Arborescence::from_parent_links(&specs).expect("generated tree is valid");
    let utilities = (0..tree.leaves().len()).map(|_| rng.random_range(cfg.utility.0..=cfg.utility.1)).collect();
    ModelSpec::new(tree, utilities).expect("finite utilities")
}
