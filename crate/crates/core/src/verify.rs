//! Cross-checks between the analytic engine and simulation on one model.

use crate::error::{Error, Result};
use crate::nested_logit::{backward_utils, cdf, emax_gradient_fd, forward_probs, log_odds, ModelSpec};
use crate::representation::{mc_choice_probs, mc_correlations, mc_joint_cdf};
use crate::rng::SeededStream;
use serde_json::Value;

pub const SIMPLEX_TOL: f64 = 1e-12;
pub const HIERARCHY_TOL: f64 = 1e-12;
pub const LOG_ODDS_TOL: f64 = 1e-12;
pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;
pub const SIGMAS: f64 = 3.0;
pub const CORRELATION_TOL: f64 = 0.01;
pub const EXPECTED_TOL: f64 = 1e-6;
/// Pairs beyond this many are thinned to a fixed subset.
pub const MAX_CORRELATION_PAIRS: usize = 28;

/// Outcome of one named check: the worst observed discrepancy against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub worst: f64,
    pub limit: f64,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64, detail: String) -> CheckResult {
    CheckResult { name, passed: worst <= limit, worst, limit, detail }
}

/// Reference values to compare the analytic engine against.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedValues {
    pub probabilities: Vec<(String, f64)>,
    pub emax: Option<f64>,
}

impl ExpectedValues {
    /// `{"probabilities": {"leaf": p, ...}, "emax": x}`; both fields optional.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
        let obj = doc.as_object().ok_or_else(|| Error::Parse("expected-values file must be an object".into()))?;
        let mut out = ExpectedValues::default();
        if let Some(p) = obj.get("probabilities") {
            let p = p.as_object().ok_or_else(|| Error::Parse("probabilities: expected an object".into()))?;
            for (k, v) in p {
                let x = v.as_f64().ok_or_else(|| Error::Parse(format!("probabilities.{k}: expected a number")))?;
                out.probabilities.push((k.clone(), x));
            }
        }
        if let Some(e) = obj.get("emax") {
            out.emax = Some(e.as_f64().ok_or_else(|| Error::Parse("emax: expected a number".into()))?);
        }
        Ok(out)
    }
}

/// The five threshold vectors used for the joint CDF spot check.
pub fn cdf_grid(n_leaves: usize) -> Vec<Vec<f64>> {
    let constant = |c: f64| vec![c; n_leaves];
    vec![
        constant(-0.5),
        constant(0.5),
        constant(1.5),
        (0..n_leaves).map(|j| if j % 2 == 0 { 0.0 } else { 1.0 }).collect(),
        (0..n_leaves).map(|j| -0.5 + 2.0 * j as f64 / n_leaves as f64).collect(),
    ]
}

/// Leaf-slot pairs whose correlation is checked: all pairs for small models,
/// otherwise a fixed thinned subset.
pub fn correlation_pairs(n_leaves: usize) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..n_leaves).flat_map(|a| (a + 1..n_leaves).map(move |b| (a, b))).collect();
    if all.len() <= MAX_CORRELATION_PAIRS {
        return all;
    }
    let stride = all.len().div_ceil(MAX_CORRELATION_PAIRS);
    all.into_iter().step_by(stride).collect()
}

pub fn run_checks(model: &ModelSpec, stream: SeededStream, draws: u64, expected: Option<&ExpectedValues>) -> Vec<CheckResult> {
    let t = model.tree();
    let u = backward_utils(model);
    let pi = forward_probs(model, &u);
    let leaf_pi = pi.on_leaves(t);
    let mut out = Vec::new();

    let sum: f64 = leaf_pi.iter().sum();
    let min = leaf_pi.iter().copied().fold(f64::INFINITY, f64::min);
    let simplex_worst = if min >= 0.0 && sum.is_finite() { (sum - 1.0).abs() } else { f64::INFINITY };
    out.push(check("probability-simplex", simplex_worst, SIMPLEX_TOL, format!("sum={sum}, min={min}")));

    let hierarchy = t
        .nests()
        .map(|n| (t.children(n).iter().map(|&c| pi[c]).sum::<f64>() - pi[n]).abs())
        .fold(0.0, f64::max);
    out.push(check("hierarchy-consistency", hierarchy, HIERARCHY_TOL, String::new()));

    let gibbs = (1..t.len())
        .map(|v| log_odds(model, &u, &pi, t.id(v).as_str()).expect("non-root").discrepancy())
        .fold(0.0, f64::max);
    out.push(check("log-odds", gibbs, LOG_ODDS_TOL, String::new()));

    let fd = emax_gradient_fd(model, FD_STEP);
    let dzw = leaf_pi.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(check("dzw-finite-difference", dzw, FD_TOL, format!("step={FD_STEP}")));

    let mc = mc_choice_probs(model, stream.child(0), draws);
    let (worst_z, worst_leaf) = mc
        .iter()
        .zip(&leaf_pi)
        .enumerate()
        .map(|(j, (e, p))| (e.z_score(*p), j))
        .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc });
    let leaf_name = t.id(t.leaves()[worst_leaf]).as_str().to_owned();
    out.push(check(
        "mc-vs-analytic-probabilities",
        worst_z,
        SIGMAS,
        format!("worst leaf `{leaf_name}`: mc={} analytic={} (sigmas)", mc[worst_leaf].value, leaf_pi[worst_leaf]),
    ));

    let pairs = correlation_pairs(t.leaves().len());
    if !pairs.is_empty() {
        let est = mc_correlations(model, stream.child(1), &pairs, draws);
        let mut worst = (0.0f64, String::new());
        let mut limit_ratio = 0.0f64;
        for (&(a, b), e) in pairs.iter().zip(&est) {
            let (la, lb) = (t.leaves()[a], t.leaves()[b]);
            let lambda = model.big_lambda(t.lca_index(la, lb));
            let target = 1.0 - lambda * lambda;
            let diff = (e.value - target).abs();
            let limit = CORRELATION_TOL.max(SIGMAS * e.std_error);
            if diff / limit > limit_ratio {
                limit_ratio = diff / limit;
                worst = (diff, format!("({}, {}): mc={} expected={} limit={limit}", t.id(la), t.id(lb), e.value, target));
            }
        }
        // Reported on the normalised scale so one limit covers every pair.
        out.push(check("lca-correlations", limit_ratio, 1.0, format!("worst pair {}; |diff|={}", worst.1, worst.0)));
    }

    let mut cdf_worst = (0.0f64, String::new());
    for (k, a) in cdf_grid(t.leaves().len()).iter().enumerate() {
        let exact = cdf(model, a).expect("threshold length");
        let e = mc_joint_cdf(model, stream.child(2 + k as u64), a, draws).expect("threshold length");
        let z = e.z_score(exact);
        if z > cdf_worst.0 {
            cdf_worst = (z, format!("grid {k}: mc={} analytic={exact}", e.value));
        }
    }
    out.push(check("joint-cdf", cdf_worst.0, SIGMAS, cdf_worst.1));

    if let Some(exp) = expected {
        let mut worst = (0.0f64, String::new());
        for (id, want) in &exp.probabilities {
            let got = match t.index_of(id).ok().and_then(|v| model.leaf_slot(v)) {
                Some(slot) => leaf_pi[slot],
                None => f64::NAN,
            };
            let diff = if got.is_nan() { f64::INFINITY } else { (got - want).abs() };
            if diff > worst.0 || worst.1.is_empty() {
                worst = (diff, format!("probability `{id}`: analytic={got} expected={want}"));
            }
        }
        if let Some(want) = exp.emax {
            let got = u[t.root()];
            let diff = (got - want).abs();
            if diff > worst.0 || worst.1.is_empty() {
                worst = (diff, format!("emax: analytic={got} expected={want}"));
            }
        }
        out.push(check("expected-values", worst.0, EXPECTED_TOL, worst.1));
    }
    out
}
