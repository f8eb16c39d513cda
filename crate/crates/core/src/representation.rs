//! Exact simulation of nested logit errors through stacked stable factors.
//!
//! Each draw takes one `Z_n ~ P(λ_n)` per nest and one standard Gumbel `ϵ_j`
//! per alternative, all independent, and sets
//!
//! ```text
//! ε_j = Σ_{nests n on the root path of j} Λ_n log Z_n + Λ_{n_j} ϵ_j
//! ```
//!
//! A nest's factor is shared by every alternative below it, which is what
//! produces the correlation `1 − Λ²` at the lowest common ancestor.
//! Nests with λ = 1 contribute nothing.

use crate::arborescence::NodeId;
use crate::distributions::{stable_log_sample, std_gumbel, StableParam};
use crate::error::{Error, Result};
use crate::format::fmt17;
use crate::nested_logit::{log_sum_exp, ModelSpec};
use crate::parallel::{map_chunks, CHUNK};
use crate::rng::SeededStream;
use crate::stats::{correlation_estimate, proportion, Moments, PairMoments};
use rand::Rng;
use std::io::{self, Write};

pub use crate::stats::EstimateWithError;

/// Per-draw error generator for one model.
struct EpsilonSampler<'a> {
    model: &'a ModelSpec,
    stable: Vec<Option<StableParam>>,
}

impl<'a> EpsilonSampler<'a> {
    fn new(model: &'a ModelSpec) -> Self {
        let t = model.tree();
        let stable = (0..t.len())
            .map(|v| match t.lambda(v) {
                Some(l) if l < 1.0 => Some(StableParam::new(l).expect("validated lambda")),
                _ => None,
            })
            .collect();
        Self { model, stable }
    }

    /// Fills `out` (leaf order) with one draw. `shift` is per-node scratch.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R, shift: &mut [f64], out: &mut [f64]) {
        let t = self.model.tree();
        shift[t.root()] = 0.0;
        for v in 1..t.len() {
            let parent = t.parent(v).expect("non-root parent");
            match self.model.leaf_slot(v) {
                Some(slot) => out[slot] = shift[parent] + self.model.big_lambda(v) * std_gumbel(rng),
                None => {
                    shift[v] = shift[parent]
                        + match self.stable[v] {
                            Some(p) => self.model.big_lambda(v) * stable_log_sample(rng, p),
                            None => 0.0,
                        };
                }
            }
        }
    }

    /// Runs `visit` on every draw of chunk `range`, reusing buffers.
    fn for_each_draw(&self, stream: SeededStream, range: std::ops::Range<u64>, mut visit: impl FnMut(u64, &[f64])) {
        let mut shift = vec![0.0; self.model.tree().len()];
        let mut eps = vec![0.0; self.model.tree().leaves().len()];
        for i in range {
            self.draw(&mut stream.draw_rng(i), &mut shift, &mut eps);
            visit(i, &eps);
        }
    }
}

/// Simulated error vectors: `n_draws` rows, one column per alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub draws: Vec<f64>,
    pub leaf_order: Vec<NodeId>,
    pub seed: u64,
    pub n_draws: u64,
}

impl SampleBatch {
    pub fn n_cols(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let j = self.n_cols();
        &self.draws[i * j..(i + 1) * j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.draws.iter().skip(j).step_by(self.n_cols().max(1)).copied()
    }

    /// Pearson correlation of two columns, with block-jackknife standard error.
    pub fn correlation(&self, j1: usize, j2: usize) -> EstimateWithError {
        let cols = self.n_cols();
        let blocks: Vec<PairMoments> = self
            .draws
            .chunks(cols * CHUNK as usize)
            .map(|block| {
                let mut m = PairMoments::default();
                for row in block.chunks_exact(cols) {
                    m.push(row[j1], row[j2]);
                }
                m
            })
            .collect();
        correlation_estimate(&blocks)
    }

    /// CSV with a header of leaf ids and 17-significant-digit decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = self.leaf_order.iter().map(|id| csv_field(id.as_str())).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n_draws as usize {
            let row: Vec<String> = self.row(i).iter().map(|&x| fmt17(x)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn sample_epsilon(model: &ModelSpec, stream: SeededStream, n_draws: u64) -> SampleBatch {
    let sampler = EpsilonSampler::new(model);
    let cols = model.tree().leaves().len();
    let parts = map_chunks(n_draws, |range| {
        let mut rows = Vec::with_capacity((range.end - range.start) as usize * cols);
        sampler.for_each_draw(stream, range, |_, eps| rows.extend_from_slice(eps));
        rows
    });
    SampleBatch {
        draws: parts.concat(),
        leaf_order: model.tree().leaves().iter().map(|&l| model.tree().id(l).clone()).collect(),
        seed: stream.seed,
        n_draws,
    }
}

fn argmax_first(model: &ModelSpec, eps: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (j, (u, e)) in model.utilities().iter().zip(eps).enumerate() {
        let v = u + e;
        if v > best_val {
            best_val = v;
            best = j;
        }
    }
    best
}

/// Frequencies with which each alternative maximises `U_j + ε_j`, in leaf
/// order, with binomial standard errors.
pub fn mc_choice_probs(model: &ModelSpec, stream: SeededStream, n_draws: u64) -> Vec<EstimateWithError> {
    let sampler = EpsilonSampler::new(model);
    let cols = model.tree().leaves().len();
    let parts = map_chunks(n_draws, |range| {
        let mut counts = vec![0u64; cols];
        sampler.for_each_draw(stream, range, |_, eps| counts[argmax_first(model, eps)] += 1);
        counts
    });
    let mut counts = vec![0u64; cols];
    for part in parts {
        counts.iter_mut().zip(part).for_each(|(c, p)| *c += p);
    }
    counts.into_iter().map(|c| proportion(c, n_draws)).collect()
}

/// Empirical E[max_j (U_j + ε_j)]. This includes the Euler constant that the
/// analytic backward utility leaves out.
pub fn mc_emax(model: &ModelSpec, stream: SeededStream, n_draws: u64) -> EstimateWithError {
    let sampler = EpsilonSampler::new(model);
    let parts = map_chunks(n_draws, |range| {
        let mut m = Moments::default();
        sampler.for_each_draw(stream, range, |_, eps| {
            let best = model.utilities().iter().zip(eps).map(|(u, e)| u + e).fold(f64::NEG_INFINITY, f64::max);
            m.push(best);
        });
        m
    });
    parts.iter().fold(Moments::default(), |a, b| a.merge(b)).estimate()
}

fn leaf_slot_of(model: &ModelSpec, id: &str) -> Result<usize> {
    let v = model.tree().index_of(id)?;
    model.leaf_slot(v).ok_or_else(|| Error::NotALeaf(id.to_owned()))
}

/// Pearson correlation of ε_{j1} and ε_{j2}.
pub fn mc_correlation(model: &ModelSpec, stream: SeededStream, j1: &str, j2: &str, n_draws: u64) -> Result<EstimateWithError> {
    let (a, b) = (leaf_slot_of(model, j1)?, leaf_slot_of(model, j2)?);
    if a == b {
        return Err(Error::Domain(format!("correlation needs two distinct alternatives, got `{j1}` twice")));
    }
    Ok(mc_correlations(model, stream, &[(a, b)], n_draws).remove(0))
}

/// Correlations of several column pairs (leaf slots) from one set of draws.
pub fn mc_correlations(model: &ModelSpec, stream: SeededStream, pairs: &[(usize, usize)], n_draws: u64) -> Vec<EstimateWithError> {
    let sampler = EpsilonSampler::new(model);
    let blocks = map_chunks(n_draws, |range| {
        let mut m = vec![PairMoments::default(); pairs.len()];
        sampler.for_each_draw(stream, range, |_, eps| {
            for (acc, &(a, b)) in m.iter_mut().zip(pairs) {
                acc.push(eps[a], eps[b]);
            }
        });
        m
    });
    (0..pairs.len())
        .map(|k| correlation_estimate(&blocks.iter().map(|b| b[k]).collect::<Vec<_>>()))
        .collect()
}

/// Empirical Pr(ε_j ≤ A_j for all j), `thresholds` in leaf order.
pub fn mc_joint_cdf(model: &ModelSpec, stream: SeededStream, thresholds: &[f64], n_draws: u64) -> Result<EstimateWithError> {
    if thresholds.len() != model.tree().leaves().len() {
        return Err(Error::InvalidModel(format!(
            "{} thresholds for {} alternatives",
            thresholds.len(),
            model.tree().leaves().len()
        )));
    }
    let sampler = EpsilonSampler::new(model);
    let parts = map_chunks(n_draws, |range| {
        let mut hits = 0u64;
        sampler.for_each_draw(stream, range, |_, eps| {
            if eps.iter().zip(thresholds).all(|(e, a)| e <= a) {
                hits += 1;
            }
        });
        hits
    });
    Ok(proportion(parts.into_iter().sum(), n_draws))
}

/// Simulated choice probabilities of a single-layer model as a mixed logit.
///
/// Conditional on its stable factors, every alternative gets a common Gumbel
/// scale μ = min λ_n: alternative `j` in nest `n` is written as
/// `U_j + λ_n log Z_n + μ log Z'_j + μ ϵ'_j` with `Z'_j ~ P(μ/λ_n)`, which has
/// the same law as `U_j + λ_n (log Z_n + ϵ_j)`. Each of the `k_draws`
/// factor vectors then yields an ordinary logit share
/// `Z_n^(λ_n/μ) Z'_j e^(U_j/μ) / Σ(...)`, and the estimate is their average.
/// When all λ_n coincide, `Z'_j ≡ 1` and the share is `Z_n e^(U_j/λ) / Σ(...)`.
pub fn mixed_logit_probs(model: &ModelSpec, stream: SeededStream, k_draws: u64) -> Result<Vec<EstimateWithError>> {
    if !model.is_single_layer() {
        return Err(Error::Shape("mixed logit simulator needs root → nests → alternatives".into()));
    }
    let t = model.tree();
    let nests: Vec<usize> = t.children(t.root()).to_vec();
    let lambdas: Vec<f64> = nests.iter().map(|&n| t.lambda(n).expect("nest")).collect();
    let mu = lambdas.iter().copied().fold(1.0, f64::min);
    let nest_param: Vec<StableParam> = lambdas.iter().map(|&l| StableParam::new(l).expect("lambda")).collect();
    let leaf_param: Vec<StableParam> = lambdas.iter().map(|&l| StableParam::new(mu / l).expect("ratio in (0,1]")).collect();
    let cols = t.leaves().len();

    let parts = map_chunks(k_draws, |range| {
        let mut acc = vec![Moments::default(); cols];
        let mut log_w = vec![0.0; cols];
        for i in range {
            let mut rng = stream.draw_rng(i);
            for (k, &n) in nests.iter().enumerate() {
                let nest_shift = lambdas[k] * stable_log_sample(&mut rng, nest_param[k]);
                for &j in t.children(n) {
                    let slot = model.leaf_slot(j).expect("leaf");
                    log_w[slot] = (model.utilities()[slot] + nest_shift) / mu + stable_log_sample(&mut rng, leaf_param[k]);
                }
            }
            let lse = log_sum_exp(log_w.iter().copied());
            for (m, lw) in acc.iter_mut().zip(&log_w) {
                m.push((lw - lse).exp());
            }
        }
        acc
    });
    let mut total = vec![Moments::default(); cols];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t = t.merge(p);
        }
    }
    Ok(total.iter().map(Moments::estimate).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arborescence::{Arborescence, RawNode};
    use crate::nested_logit::choice_probs;
    use crate::special::EULER_GAMMA;

    fn leaf(id: &str) -> RawNode {
        RawNode::Leaf { id: id.into() }
    }

    fn nest(id: &str, lambda: f64, children: Vec<RawNode>) -> RawNode {
        RawNode::Nest { id: id.into(), lambda, children }
    }

    fn model(root: RawNode, u: Vec<f64>) -> ModelSpec {
        ModelSpec::new(Arborescence::build(&root).unwrap(), u).unwrap()
    }

    #[test]
    fn batch_shape_and_determinism() {
        let m = model(nest("r", 1.0, vec![nest("n", 0.5, vec![leaf("a"), leaf("b")]), leaf("c")]), vec![0.0; 3]);
        let s = SeededStream::new(4);
        let b1 = sample_epsilon(&m, s, 10_000);
        let b2 = sample_epsilon(&m, s, 10_000);
        assert_eq!(b1, b2);
        assert_eq!(b1.draws.len(), 30_000);
        assert_eq!(b1.row(3), &b1.draws[9..12]);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b3 = single.install(|| sample_epsilon(&m, s, 10_000));
        assert_eq!(b1.draws.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b3.draws.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn empty_batch_writes_header_only() {
        let m = model(nest("r", 1.0, vec![leaf("a"), leaf("b,c")]), vec![0.0; 2]);
        let b = sample_epsilon(&m, SeededStream::new(1), 0);
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "a,\"b,c\"\n");
    }

    #[test]
    fn plain_logit_probabilities_and_emax() {
        let m = model(nest("r", 1.0, vec![leaf("a"), leaf("b")]), vec![0.0; 2]);
        let p = mc_choice_probs(&m, SeededStream::new(2), 200_000);
        assert!(p.iter().all(|e| e.within_sigmas(0.5, 3.0)));
        let e = mc_emax(&m, SeededStream::new(3), 200_000);
        assert!(e.within_sigmas(2f64.ln() + EULER_GAMMA, 3.0));
        let one = model(nest("r", 1.0, vec![leaf("a")]), vec![1.5]);
        assert!(mc_emax(&one, SeededStream::new(3), 200_000).within_sigmas(1.5 + EULER_GAMMA, 3.0));
    }

    #[test]
    fn single_nest_correlation() {
        let m = model(nest("r", 1.0, vec![nest("n", 0.5, vec![leaf("a"), leaf("b")])]), vec![0.0; 2]);
        let c = mc_correlation(&m, SeededStream::new(8), "a", "b", 200_000).unwrap();
        assert!((c.value - 0.75).abs() < 0.01);
        assert!(c.std_error > 0.0 && c.std_error < 0.01);
        assert!(matches!(mc_correlation(&m, SeededStream::new(8), "a", "n", 10), Err(Error::NotALeaf(_))));
        assert!(matches!(mc_correlation(&m, SeededStream::new(8), "a", "q", 10), Err(Error::UnknownNode(_))));
        let indep = model(nest("r", 1.0, vec![nest("x", 0.5, vec![leaf("a")]), nest("y", 0.5, vec![leaf("b")])]), vec![0.0; 2]);
        assert!(mc_correlation(&indep, SeededStream::new(9), "a", "b", 200_000).unwrap().within_sigmas(0.0, 3.0));
    }

    #[test]
    fn mixed_logit_degenerate_and_small_k() {
        let u = vec![0.4, -0.2, 1.0];
        let m = model(nest("r", 1.0, vec![nest("A", 1.0, vec![leaf("1"), leaf("2")]), nest("B", 1.0, vec![leaf("3")])]), u.clone());
        let exact = choice_probs(&m);
        let est = mixed_logit_probs(&m, SeededStream::new(1), 1000).unwrap();
        for (e, x) in est.iter().zip(&exact) {
            assert!((e.value - x).abs() < 1e-15);
        }
        let m = model(nest("r", 1.0, vec![nest("A", 0.5, vec![leaf("1"), leaf("2")]), nest("B", 1.0, vec![leaf("3")])]), u);
        let one = mixed_logit_probs(&m, SeededStream::new(2), 1).unwrap();
        assert!((one.iter().map(|e| e.value).sum::<f64>() - 1.0).abs() < 1e-12);
        let deep = model(nest("r", 1.0, vec![nest("A", 0.5, vec![nest("B", 0.5, vec![leaf("1")])])]), vec![0.0]);
        assert!(matches!(mixed_logit_probs(&deep, SeededStream::new(1), 10), Err(Error::Shape(_))));
    }
}
