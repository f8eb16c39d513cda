//! Analytic nested logit: backward utilities, forward probabilities, Emax and CDF.
//!
//! Every log-sum-exp is evaluated with the largest exponent shifted out, and
//! probabilities are carried in log space until the end, so cumulative λ
//! products far below one do not overflow `exp`.

use crate::arborescence::{Arborescence, TreeMetrics};
use crate::error::{Error, Result};
use std::ops::Index;

/// A tree together with the systematic utility of each alternative.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    tree: Arborescence,
    metrics: TreeMetrics,
    utilities: Vec<f64>,
    leaf_slot: Vec<usize>,
}

impl ModelSpec {
    /// `utilities` are given in leaf pre-order ([`Arborescence::leaves`]).
    pub fn new(tree: Arborescence, utilities: Vec<f64>) -> Result<Self> {
        if utilities.len() != tree.leaves().len() {
            return Err(Error::InvalidModel(format!(
                "{} utilities for {} alternatives",
                utilities.len(),
                tree.leaves().len()
            )));
        }
        if let Some(pos) = utilities.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "utility of `{}` is not finite",
                tree.id(tree.leaves()[pos])
            )));
        }
        let mut leaf_slot = vec![usize::MAX; tree.len()];
        for (slot, &leaf) in tree.leaves().iter().enumerate() {
            leaf_slot[leaf] = slot;
        }
        let metrics = tree.metrics();
        Ok(Self { tree, metrics, utilities, leaf_slot })
    }

    pub fn tree(&self) -> &Arborescence {
        &self.tree
    }

    pub fn metrics(&self) -> &TreeMetrics {
        &self.metrics
    }

    /// Utilities in leaf pre-order.
    pub fn utilities(&self) -> &[f64] {
        &self.utilities
    }

    /// Position of a leaf node in the leaf ordering.
    pub fn leaf_slot(&self, node: usize) -> Option<usize> {
        self.leaf_slot.get(node).copied().filter(|&s| s != usize::MAX)
    }

    /// Same tree with different utilities.
    pub fn with_utilities(&self, utilities: Vec<f64>) -> Result<Self> {
        Self::new(self.tree.clone(), utilities)
    }

    pub fn big_lambda(&self, node: usize) -> f64 {
        self.metrics.big_lambda[node]
    }

    /// Root → nests → leaves, with no leaf directly under the root.
    pub fn is_single_layer(&self) -> bool {
        let t = &self.tree;
        t.children(t.root())
            .iter()
            .all(|&n| !t.is_leaf(n) && t.children(n).iter().all(|&c| t.is_leaf(c)))
    }
}

/// One real value per node, indexed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeValues {
    pub values: Vec<f64>,
}

impl NodeValues {
    pub fn get(&self, tree: &Arborescence, id: &str) -> Result<f64> {
        Ok(self.values[tree.index_of(id)?])
    }

    /// The values on leaves, in leaf pre-order.
    pub fn on_leaves(&self, tree: &Arborescence) -> Vec<f64> {
        tree.leaves().iter().map(|&l| self.values[l]).collect()
    }
}

impl Index<usize> for NodeValues {
    type Output = f64;

    fn index(&self, v: usize) -> &f64 {
        &self.values[v]
    }
}

/// log Σ exp(x), shifted by the maximum.
pub fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// u_n = Λ_n log Σ_children exp(u_z / Λ_n), children before parents; u_j = U_j on leaves.
/// The recursion runs on every nest, including those whose children are all leaves.
pub fn backward_utils(model: &ModelSpec) -> NodeValues {
    let t = model.tree();
    let mut u = vec![0.0; t.len()];
    for v in (0..t.len()).rev() {
        u[v] = match model.leaf_slot(v) {
            Some(slot) => model.utilities[slot],
            None => {
                let scale = model.big_lambda(v);
                scale * log_sum_exp(t.children(v).iter().map(|&c| u[c] / scale))
            }
        };
    }
    NodeValues { values: u }
}

/// π_0 = 1 and π_z = π_{n_z} exp((u_z − u_{n_z}) / Λ_{n_z}), parents before children.
pub fn forward_probs(model: &ModelSpec, u: &NodeValues) -> NodeValues {
    let t = model.tree();
    let mut log_pi = vec![0.0; t.len()];
    for v in 0..t.len() {
        if t.is_leaf(v) {
            continue;
        }
        let scale = model.big_lambda(v);
        let lse = log_sum_exp(t.children(v).iter().map(|&c| u[c] / scale));
        for &c in t.children(v) {
            log_pi[c] = log_pi[v] + u[c] / scale - lse;
        }
    }
    NodeValues { values: log_pi.into_iter().map(f64::exp).collect() }
}

/// Leaf choice probabilities in leaf pre-order.
pub fn choice_probs(model: &ModelSpec) -> Vec<f64> {
    forward_probs(model, &backward_utils(model)).on_leaves(model.tree())
}

/// Direct evaluation of the single-layer share formula: nest share
/// `S_n^λ_n / Σ S_m^λ_m` times within-nest share `e^(U_j/λ_n) / S_n`,
/// with `S_n = Σ_{j∈n} e^(U_j/λ_n)`.
pub fn choice_probs_single_layer(model: &ModelSpec) -> Result<Vec<f64>> {
    if !model.is_single_layer() {
        return Err(Error::Shape("single-layer formula needs root → nests → alternatives".into()));
    }
    let t = model.tree();
    let nests = t.children(t.root());
    let utility = |leaf: usize| model.utilities[model.leaf_slot(leaf).expect("leaf")];
    let log_s: Vec<f64> = nests
        .iter()
        .map(|&n| {
            let lambda = t.lambda(n).expect("nest");
            log_sum_exp(t.children(n).iter().map(|&j| utility(j) / lambda))
        })
        .collect();
    let nest_weights: Vec<f64> = nests.iter().zip(&log_s).map(|(&n, ls)| t.lambda(n).expect("nest") * ls).collect();
    let log_total = log_sum_exp(nest_weights.iter().copied());
    let mut probs = vec![0.0; t.leaves().len()];
    for (k, &n) in nests.iter().enumerate() {
        let lambda = t.lambda(n).expect("nest");
        for &j in t.children(n) {
            let log_p = nest_weights[k] - log_total + utility(j) / lambda - log_s[k];
            probs[model.leaf_slot(j).expect("leaf")] = log_p.exp();
        }
    }
    Ok(probs)
}

/// Single-layer Emax closed form, log Σ_n (Σ_{j∈n} e^(U_j/λ_n))^λ_n.
pub fn emax_single_layer(model: &ModelSpec) -> Result<f64> {
    if !model.is_single_layer() {
        return Err(Error::Shape("single-layer formula needs root → nests → alternatives".into()));
    }
    let t = model.tree();
    let terms: Vec<f64> = t
        .children(t.root())
        .iter()
        .map(|&n| {
            let lambda = t.lambda(n).expect("nest");
            lambda * log_sum_exp(t.children(n).iter().map(|&j| model.utilities[model.leaf_slot(j).expect("leaf")] / lambda))
        })
        .collect();
    Ok(log_sum_exp(terms.into_iter()))
}

/// Restricted Emax at nest `at`, i.e. the backward utility of that nest.
///
/// This is the inclusive value without the additive Euler constant: the
/// expected maximum of `U_j + ε_j` over the subtree equals this plus γ.
pub fn emax(model: &ModelSpec, at: &str) -> Result<f64> {
    let v = model.tree().index_of(at)?;
    if model.tree().is_leaf(v) {
        return Err(Error::NotANest(at.to_owned()));
    }
    Ok(backward_utils(model)[v])
}

/// ∂u_0/∂U_j = π_j: the analytic Emax gradient, in leaf pre-order.
pub fn emax_gradient(model: &ModelSpec) -> Vec<f64> {
    choice_probs(model)
}

/// Central finite differences of the root utility with step `h`.
pub fn emax_gradient_fd(model: &ModelSpec, h: f64) -> Vec<f64> {
    let base = model.utilities().to_vec();
    (0..base.len())
        .map(|j| {
            let mut up = base.clone();
            let mut down = base.clone();
            up[j] += h;
            down[j] -= h;
            let root = model.tree().root();
            let f_up = backward_utils(&model.with_utilities(up).expect("finite"))[root];
            let f_down = backward_utils(&model.with_utilities(down).expect("finite"))[root];
            (f_up - f_down) / (2.0 * h)
        })
        .collect()
}

/// The two sides of π_z / π_n = exp((u_z − u_n) / Λ_n), on the log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogOdds {
    pub observed: f64,
    pub predicted: f64,
}

impl LogOdds {
    pub fn discrepancy(&self) -> f64 {
        (self.observed - self.predicted).abs()
    }
}

pub fn log_odds(model: &ModelSpec, u: &NodeValues, pi: &NodeValues, z: &str) -> Result<LogOdds> {
    let v = model.tree().index_of(z)?;
    let n = model.tree().parent(v).ok_or_else(|| Error::RootHasNoParent(z.to_owned()))?;
    Ok(LogOdds {
        observed: (pi[v] / pi[n]).ln(),
        predicted: (u[v] - u[n]) / model.big_lambda(n),
    })
}

/// Joint CDF Pr(ε_j ≤ A_j ∀j) = exp(−exp(−a_0)) with
/// a_n = −Λ_n log Σ_children exp(−a_z / Λ_n). `a` is in leaf pre-order.
pub fn cdf(model: &ModelSpec, a: &[f64]) -> Result<f64> {
    let t = model.tree();
    if a.len() != t.leaves().len() {
        return Err(Error::InvalidModel(format!("{} thresholds for {} alternatives", a.len(), t.leaves().len())));
    }
    let mut vals = vec![0.0; t.len()];
    for v in (0..t.len()).rev() {
        vals[v] = match model.leaf_slot(v) {
            Some(slot) => a[slot],
            None => {
                let scale = model.big_lambda(v);
                -scale * log_sum_exp(t.children(v).iter().map(|&c| -vals[c] / scale))
            }
        };
    }
    Ok((-(-vals[t.root()]).exp()).exp())
}
