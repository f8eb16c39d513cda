use crate::report::{num, Report};
use crate::{Command, Method, ModelArgs, StableOp};
use anyhow::{bail, Context, Result};
use nestlogit::copula::{frechet_corr, mc_frechet_corr, FrechetGumbelParams};
use nestlogit::distributions::{
    eta_moments, stable_density_half, stable_density_series, stable_laplace_estimate, stable_log_sample, stable_moment,
    StableParam,
};
use nestlogit::format::fmt17;
use nestlogit::generate::{named_example, random_model, RandomModelConfig, EXAMPLE_NAMES};
use nestlogit::model_file::{apply_overrides, parse_model, parse_utility_overrides, to_json};
use nestlogit::nested_logit::{backward_utils, cdf, choice_probs, emax_gradient, emax_gradient_fd};
use nestlogit::representation::{mc_choice_probs, mc_emax, mc_joint_cdf, mixed_logit_probs, sample_epsilon};
use nestlogit::special::EULER_GAMMA;
use nestlogit::stats::Moments;
use nestlogit::verify::{run_checks, ExpectedValues};
use nestlogit::{EstimateWithError, ModelSpec, SeededStream};
use serde_json::{Map, Value};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct Outcome {
    pub report: Option<Report>,
    /// Names and details of failed checks; non-empty means exit code 2.
    pub failures: Vec<String>,
}

impl From<Report> for Outcome {
    fn from(r: Report) -> Self {
        Outcome { report: Some(r), failures: Vec::new() }
    }
}

fn load(path: &Path) -> Result<ModelSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_model(&text).with_context(|| format!("invalid model file {}", path.display()))
}

fn load_args(args: &ModelArgs, report: &mut Report) -> Result<ModelSpec> {
    report.input("model", args.model.display().to_string());
    let m = load(&args.model)?;
    match &args.utilities {
        Some(text) => {
            report.input("utilities", text.as_str());
            Ok(apply_overrides(&m, &parse_utility_overrides(text)?)?)
        }
        None => Ok(m),
    }
}

fn leaf_ids(m: &ModelSpec) -> Vec<String> {
    let t = m.tree();
    t.leaves().iter().map(|&v| t.id(v).as_str().to_owned()).collect()
}

fn by_leaf(m: &ModelSpec, values: impl IntoIterator<Item = f64>) -> Value {
    Value::Object(leaf_ids(m).into_iter().zip(values).map(|(k, v)| (k, num(v))).collect())
}

fn estimate(e: &EstimateWithError) -> Value {
    let mut o = Map::new();
    o.insert("value".into(), num(e.value));
    o.insert("std_error".into(), num(e.std_error));
    Value::Object(o)
}

fn require_positive_draws(draws: u64) -> Result<u64> {
    if draws == 0 {
        bail!("--draws must be positive");
    }
    Ok(draws)
}

pub fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Validate { model } => validate(&model).map(Into::into),
        Command::Probs { model, method, draws, seed } => probs(&model, method, draws, seed).map(Into::into),
        Command::Emax { model, node, all, draws, seed } => emax(&model, node.as_deref(), all, draws, seed).map(Into::into),
        Command::GradCheck { model, step, tol } => grad_check(&model, step, tol),
        Command::Cdf { model, at, draws, seed } => cdf_cmd(&model, &at, draws, seed).map(Into::into),
        Command::Sample { model, draws, seed, out } => sample(&model, draws, seed, &out).map(Into::into),
        Command::Stable { op } => stable(op).map(Into::into),
        Command::Verify { model, draws, seed, expected } => verify(&model, draws, seed, expected.as_deref()),
        Command::FrechetCorr { alpha, lambda, mc, seed } => frechet(alpha, lambda, mc, seed).map(Into::into),
        Command::Generate { example, random, max_nodes, out } => {
            generate(example.as_deref(), random, max_nodes, out.as_deref())?;
            Ok(Outcome { report: None, failures: Vec::new() })
        }
    }
}

fn validate(path: &Path) -> Result<Report> {
    let mut r = Report::new("validate");
    r.input("model", path.display().to_string());
    let m = load(path)?;
    let t = m.tree();
    let met = m.metrics();
    let lambdas: Map<String, Value> = t.nests().map(|n| (t.id(n).as_str().to_owned(), num(met.big_lambda[n]))).collect();
    r.result("valid", true)
        .result("nodes", t.len())
        .result("leaves", t.leaves().len())
        .result("nests", t.nests().count())
        .result("depth", met.depth.iter().copied().max().unwrap_or(0))
        .result("height", met.height[t.root()])
        .result("big_lambda", Value::Object(lambdas));
    Ok(r)
}

fn probs(args: &ModelArgs, method: Method, draws: Option<u64>, seed: Option<u64>) -> Result<Report> {
    let mut r = Report::new("probs");
    let m = load_args(args, &mut r)?;
    let name = match method {
        Method::Analytic => "analytic",
        Method::Mc => "mc",
        Method::Mixed => "mixed",
    };
    r.input("method", name);
    if method == Method::Analytic {
        r.result("probabilities", by_leaf(&m, choice_probs(&m)));
        return Ok(r);
    }
    let (Some(draws), Some(seed)) = (draws, seed) else {
        bail!("--method {name} requires --draws and --seed");
    };
    let draws = require_positive_draws(draws)?;
    r.input("draws", draws).seed(seed);
    let stream = SeededStream::new(seed);
    let est = match method {
        Method::Mc => mc_choice_probs(&m, stream, draws),
        Method::Mixed => mixed_logit_probs(&m, stream, draws)?,
        Method::Analytic => unreachable!(),
    };
    r.result("probabilities", by_leaf(&m, est.iter().map(|e| e.value)))
        .result("std_errors", by_leaf(&m, est.iter().map(|e| e.std_error)));
    Ok(r)
}

fn emax(args: &ModelArgs, node: Option<&str>, all: bool, draws: Option<u64>, seed: u64) -> Result<Report> {
    let mut r = Report::new("emax");
    let m = load_args(args, &mut r)?;
    let t = m.tree();
    let node = node.unwrap_or_else(|| t.id(t.root()).as_str()).to_owned();
    r.input("node", node.as_str());
    let u = backward_utils(&m);
    r.result("value", num(u.get(t, &node)?));
    if all {
        let every: Map<String, Value> = (0..t.len()).map(|v| (t.id(v).as_str().to_owned(), num(u[v]))).collect();
        r.result("utilities", Value::Object(every));
    }
    if let Some(draws) = draws {
        if t.index_of(&node)? != t.root() {
            bail!("the Monte Carlo estimate is only available at the root");
        }
        let draws = require_positive_draws(draws)?;
        r.input("draws", draws).seed(seed);
        let raw = mc_emax(&m, SeededStream::new(seed), draws);
        let centered = EstimateWithError { value: raw.value - EULER_GAMMA, ..raw };
        r.result("mc_minus_euler_gamma", estimate(&centered));
    }
    Ok(r)
}

fn grad_check(args: &ModelArgs, step: f64, tol: f64) -> Result<Outcome> {
    let mut r = Report::new("grad-check");
    let m = load_args(args, &mut r)?;
    if !(step > 0.0 && step.is_finite()) {
        bail!("--step must be positive");
    }
    r.input("step", num(step)).input("tol", num(tol));
    let analytic = emax_gradient(&m);
    let fd = emax_gradient_fd(&m, step);
    let worst = analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let passed = worst <= tol;
    r.result("analytic", by_leaf(&m, analytic))
        .result("finite_difference", by_leaf(&m, fd))
        .result("max_abs_diff", num(worst))
        .result("passed", passed);
    let failures = if passed { vec![] } else { vec![format!("grad-check: max |diff| {} > {}", fmt17(worst), fmt17(tol))] };
    Ok(Outcome { report: Some(r), failures })
}

fn parse_thresholds(m: &ModelSpec, text: &str) -> Result<Vec<f64>> {
    let ids = leaf_ids(m);
    if text.contains('=') {
        let pairs = parse_utility_overrides(text)?;
        let mut a = vec![None; ids.len()];
        for (id, v) in pairs {
            let slot = ids.iter().position(|x| *x == id).with_context(|| format!("`{id}` is not an alternative"))?;
            a[slot] = Some(v);
        }
        a.iter()
            .zip(&ids)
            .map(|(v, id)| v.with_context(|| format!("no threshold given for `{id}`")))
            .collect()
    } else {
        let a = text
            .split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("`{s}` is not a number")))
            .collect::<Result<Vec<_>>>()?;
        if a.len() != ids.len() {
            bail!("expected {} thresholds, got {}", ids.len(), a.len());
        }
        Ok(a)
    }
}

fn cdf_cmd(args: &ModelArgs, at: &str, draws: Option<u64>, seed: u64) -> Result<Report> {
    let mut r = Report::new("cdf");
    let m = load_args(args, &mut r)?;
    r.input("at", at);
    let a = parse_thresholds(&m, at)?;
    r.result("value", num(cdf(&m, &a)?));
    if let Some(draws) = draws {
        let draws = require_positive_draws(draws)?;
        r.input("draws", draws).seed(seed);
        r.result("mc", estimate(&mc_joint_cdf(&m, SeededStream::new(seed), &a, draws)?));
    }
    Ok(r)
}

fn sample(args: &ModelArgs, draws: u64, seed: u64, out: &Path) -> Result<Report> {
    let mut r = Report::new("sample");
    let m = load_args(args, &mut r)?;
    r.input("draws", draws).input("out", out.display().to_string()).seed(seed);
    let batch = sample_epsilon(&m, SeededStream::new(seed), draws);
    let file = fs::File::create(out).with_context(|| format!("cannot write {}", out.display()))?;
    let mut w = BufWriter::new(file);
    batch.write_csv(&mut w).and_then(|_| w.flush()).with_context(|| format!("cannot write {}", out.display()))?;
    r.result("rows", draws).result("columns", Value::Array(leaf_ids(&m).into_iter().map(Value::String).collect()));
    Ok(r)
}

fn stable(op: StableOp) -> Result<Report> {
    match op {
        StableOp::Sample { lambda, draws, seed, out } => {
            let mut r = Report::new("stable sample");
            r.input("lambda", num(lambda)).input("draws", draws).seed(seed);
            let p = StableParam::new(lambda)?;
            let stream = SeededStream::new(seed);
            let log_z: Vec<f64> = (0..draws).map(|i| stable_log_sample(&mut stream.draw_rng(i), p)).collect();
            if let Some(path) = &out {
                r.input("out", path.display().to_string());
                let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
                let mut w = BufWriter::new(file);
                writeln!(w, "z")?;
                for l in &log_z {
                    writeln!(w, "{}", fmt17(l.exp()))?;
                }
                w.flush()?;
            }
            let mut eta = Moments::default();
            for l in &log_z {
                eta.push(lambda * l);
            }
            let (mean, var) = eta_moments(lambda);
            let mut o = Map::new();
            o.insert("mean".into(), num(eta.estimate().value));
            o.insert("mean_expected".into(), num(mean));
            o.insert("variance".into(), num(eta.variance()));
            o.insert("variance_expected".into(), num(var));
            r.result("rows", draws).result("eta", Value::Object(o));
            Ok(r)
        }
        StableOp::Density { lambda, x, tol } => {
            let mut r = Report::new("stable density");
            r.input("lambda", num(lambda)).input("x", num(x)).input("tol", num(tol));
            let s = stable_density_series(StableParam::new(lambda)?, x, tol)?;
            r.result("series", num(s.value))
                .result("terms", s.terms)
                .result("max_term", num(s.max_term))
                .result("loss_of_precision", s.loss_of_precision);
            if lambda == 0.5 {
                r.result("closed_form", num(stable_density_half(x)));
            }
            Ok(r)
        }
        StableOp::Moment { lambda, kappa, draws, seed } => {
            let mut r = Report::new("stable moment");
            r.input("lambda", num(lambda)).input("kappa", num(kappa));
            let p = StableParam::new(lambda)?;
            r.result("exact", num(stable_moment(p, kappa)?));
            if let Some(draws) = draws {
                let draws = require_positive_draws(draws)?;
                r.input("draws", draws).seed(seed);
                let stream = SeededStream::new(seed);
                let mut m = Moments::default();
                for i in 0..draws {
                    m.push((kappa * stable_log_sample(&mut stream.draw_rng(i), p)).exp());
                }
                r.result("mc", estimate(&m.estimate()));
            }
            Ok(r)
        }
        StableOp::Laplace { lambda, t, draws, seed } => {
            let mut r = Report::new("stable laplace");
            r.input("lambda", num(lambda)).input("t", num(t)).input("draws", draws).seed(seed);
            let p = StableParam::new(lambda)?;
            if !(t >= 0.0 && t.is_finite()) {
                bail!("t must be a finite nonnegative number, got {t}");
            }
            let draws = require_positive_draws(draws)?;
            r.result("exact", num(p.laplace(t)))
                .result("mc", estimate(&stable_laplace_estimate(SeededStream::new(seed), p, t, draws)));
            Ok(r)
        }
    }
}

fn verify(args: &ModelArgs, draws: u64, seed: u64, expected: Option<&Path>) -> Result<Outcome> {
    let mut r = Report::new("verify");
    let m = load_args(args, &mut r)?;
    let draws = require_positive_draws(draws)?;
    r.input("draws", draws).seed(seed);
    let expected = match expected {
        Some(path) => {
            r.input("expected", path.display().to_string());
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(ExpectedValues::parse(&text).with_context(|| format!("invalid expected-values file {}", path.display()))?)
        }
        None => None,
    };
    let checks = run_checks(&m, SeededStream::new(seed), draws, expected.as_ref());
    let mut failures = Vec::new();
    let rows: Vec<Value> = checks
        .iter()
        .map(|c| {
            if !c.passed {
                failures.push(format!("{}: observed {} exceeds {} ({})", c.name, fmt17(c.worst), fmt17(c.limit), c.detail));
            }
            let mut o = Map::new();
            o.insert("name".into(), Value::String(c.name.to_owned()));
            o.insert("passed".into(), Value::Bool(c.passed));
            o.insert("worst".into(), num(c.worst));
            o.insert("limit".into(), num(c.limit));
            o.insert("detail".into(), Value::String(c.detail.clone()));
            Value::Object(o)
        })
        .collect();
    r.result("passed", failures.is_empty()).result("checks", Value::Array(rows));
    Ok(Outcome { report: Some(r), failures })
}

fn frechet(alpha: f64, lambda: f64, mc: Option<u64>, seed: u64) -> Result<Report> {
    let mut r = Report::new("frechet-corr");
    r.input("alpha", num(alpha)).input("lambda", num(lambda));
    let p = FrechetGumbelParams::new(alpha, lambda)?;
    r.result("closed_form", num(frechet_corr(p)?));
    if let Some(draws) = mc {
        let draws = require_positive_draws(draws)?;
        r.input("mc", draws).seed(seed);
        r.result("mc", estimate(&mc_frechet_corr(SeededStream::new(seed), p, draws)?));
    }
    Ok(r)
}

fn generate(example: Option<&str>, random: Option<u64>, max_nodes: usize, out: Option<&Path>) -> Result<()> {
    let model = match (example, random) {
        (Some(name), None) => named_example(name)
            .with_context(|| format!("unknown example `{name}`; available: {}", EXAMPLE_NAMES.join(", ")))?,
        (None, Some(seed)) => {
            if max_nodes < 2 {
                bail!("--max-nodes must be at least 2");
            }
            let cfg = RandomModelConfig { max_nodes, ..Default::default() };
            random_model(&mut SeededStream::new(seed).rng(), &cfg)
        }
        _ => bail!("give exactly one of --example NAME or --random SEED"),
    };
    let text = to_json(&model);
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
