//! JSON model files.
//!
//! ```json
//! {"root": {"id": "root", "lambda": 1.0, "children": [
//!     {"id": "a", "lambda": 0.5, "children": [{"id": "1", "utility": 0.0}, {"id": "2", "utility": 0.0}]},
//!     {"id": "3", "utility": 0.0}]}}
//! ```
//!
//! Nests carry `id`, `lambda`, `children`; alternatives carry `id`, `utility`.
//! Schema errors name the offending field by path, e.g. `root.children[1].lambda`;
//! syntax errors carry serde_json's line and column.

use crate::arborescence::{Arborescence, NodeKind, NodeSpec};
use crate::error::{Error, Result};
use crate::format::json_number;
use crate::nested_logit::ModelSpec;
use serde_json::{Map, Value};
use std::collections::HashMap;

fn schema(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

fn number(obj: &Map<String, Value>, key: &str, path: &str) -> Result<f64> {
    let v = obj.get(key).ok_or_else(|| schema(path, format!("missing field `{key}`")))?;
    let x = v.as_f64().ok_or_else(|| schema(&format!("{path}.{key}"), "expected a number"))?;
    if !x.is_finite() {
        return Err(schema(&format!("{path}.{key}"), "number is not finite"));
    }
    Ok(x)
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let top = doc.as_object().ok_or_else(|| schema("$", "expected an object with a `root` field"))?;
    if let Some(extra) = top.keys().find(|k| *k != "root") {
        return Err(schema("$", format!("unknown field `{extra}`")));
    }
    let root = top.get("root").ok_or_else(|| schema("$", "missing field `root`"))?;

    let mut specs = Vec::new();
    let mut utilities = HashMap::new();
    let mut stack: Vec<(&Value, String, Option<String>)> = vec![(root, "root".to_owned(), None)];
    while let Some((node, path, parent)) = stack.pop() {
        let obj = node.as_object().ok_or_else(|| schema(&path, "expected a node object"))?;
        let id = match obj.get("id") {
            Some(Value::String(s)) if !s.is_empty() => s.clone(),
            Some(Value::String(_)) => return Err(schema(&format!("{path}.id"), "id must be non-empty")),
            Some(_) => return Err(schema(&format!("{path}.id"), "expected a string")),
            None => return Err(schema(&path, "missing field `id`")),
        };
        if let Some(children) = obj.get("children") {
            if obj.contains_key("utility") {
                return Err(schema(&format!("{path}.utility"), format!("nest `{id}` cannot carry a utility; utilities belong to alternatives")));
            }
            if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "id" | "lambda" | "children")) {
                return Err(schema(&path, format!("unknown field `{extra}`")));
            }
            let lambda = number(obj, "lambda", &path)?;
            let children = children.as_array().ok_or_else(|| schema(&format!("{path}.children"), "expected an array"))?;
            for (k, child) in children.iter().enumerate().rev() {
                stack.push((child, format!("{path}.children[{k}]"), Some(id.clone())));
            }
            specs.push(NodeSpec { id, parent, kind: NodeKind::Nest { lambda } });
        } else {
            if obj.contains_key("lambda") {
                return Err(schema(&path, format!("alternative `{id}` has `lambda` but no `children`")));
            }
            if let Some(extra) = obj.keys().find(|k| !matches!(k.as_str(), "id" | "utility")) {
                return Err(schema(&path, format!("unknown field `{extra}`")));
            }
            let u = number(obj, "utility", &path)?;
            if utilities.insert(id.clone(), u).is_some() {
                return Err(Error::DuplicateId(id));
            }
            specs.push(NodeSpec { id, parent, kind: NodeKind::Leaf });
        }
    }
    let tree = Arborescence::from_parent_links(&specs)?;
    let u = tree.leaves().iter().map(|&l| utilities[tree.id(l).as_str()]).collect();
    ModelSpec::new(tree, u)
}

/// Serializes a model; numbers use 17 significant digits so parsing the
/// output reproduces the model exactly.
pub fn to_json(model: &ModelSpec) -> String {
    let t = model.tree();
    let mut built: Vec<Option<Value>> = vec![None; t.len()];
    for v in (0..t.len()).rev() {
        let mut obj = Map::new();
        obj.insert("id".into(), Value::String(t.id(v).as_str().to_owned()));
        match (t.lambda(v), model.leaf_slot(v)) {
            (Some(lambda), _) => {
                obj.insert("lambda".into(), json_number(lambda));
                let children = t.children(v).iter().map(|&c| built[c].take().expect("child built")).collect();
                obj.insert("children".into(), Value::Array(children));
            }
            (None, Some(slot)) => {
                obj.insert("utility".into(), json_number(model.utilities()[slot]));
            }
            (None, None) => unreachable!("every node is a nest or a leaf"),
        }
        built[v] = Some(Value::Object(obj));
    }
    let mut top = Map::new();
    top.insert("root".into(), built[t.root()].take().expect("root built"));
    let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
    s.push('\n');
    s
}

/// Parses `leafid=value` pairs separated by commas.
pub fn parse_utility_overrides(text: &str) -> Result<Vec<(String, f64)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (id, value) = pair
                .rsplit_once('=')
                .ok_or_else(|| Error::Parse(format!("override `{pair}` is not of the form leafid=value")))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(Error::Parse(format!("override `{pair}` has an empty id")));
            }
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("override `{pair}` has a non-numeric value")))?;
            if !value.is_finite() {
                return Err(Error::Parse(format!("override `{pair}` is not finite")));
            }
            Ok((id.to_owned(), value))
        })
        .collect()
}

/// Replaces the utilities of the named alternatives.
pub fn apply_overrides(model: &ModelSpec, overrides: &[(String, f64)]) -> Result<ModelSpec> {
    let mut u = model.utilities().to_vec();
    for (id, value) in overrides {
        let v = model.tree().index_of(id)?;
        let slot = model.leaf_slot(v).ok_or_else(|| Error::NotALeaf(id.clone()))?;
        u[slot] = *value;
    }
    model.with_utilities(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_model, RandomModelConfig};
    use crate::rng::SeededStream;
    use proptest::prelude::*;

    const FIVE: &str = r#"{"root": {"id": "root", "lambda": 1.0, "children": [
        {"id": "a", "lambda": 0.5, "children": [{"id": "1", "utility": 0.0}, {"id": "2", "utility": 1.5}]},
        {"id": "3", "utility": -2}]}}"#;

    #[test]
    fn parses_five_node_model() {
        let m = parse_model(FIVE).unwrap();
        assert_eq!(m.tree().len(), 5);
        assert_eq!(m.utilities(), &[0.0, 1.5, -2.0]);
        assert_eq!(m.metrics().height[0], 2);
    }

    #[test]
    fn rejects_schema_violations() {
        let bad_lambda = FIVE.replace("0.5", "1.5");
        assert!(matches!(parse_model(&bad_lambda), Err(Error::LambdaOutOfRange { .. })));
        let dup = FIVE.replace(r#""id": "2""#, r#""id": "1""#);
        assert_eq!(parse_model(&dup).unwrap_err(), Error::DuplicateId("1".into()));
        let nest_utility = FIVE.replace(r#""lambda": 0.5,"#, r#""lambda": 0.5, "utility": 1,"#);
        let err = parse_model(&nest_utility).unwrap_err().to_string();
        assert!(err.contains("root.children[0].utility"), "{err}");
        let missing = FIVE.replace(r#", "utility": -2"#, "");
        assert!(parse_model(&missing).unwrap_err().to_string().contains("root.children[1]"));
        let syntax = parse_model("{\"root\": \n {").unwrap_err().to_string();
        assert!(syntax.contains("line 2"), "{syntax}");
        assert!(parse_model(r#"{"root": {"id": "r", "lambda": 0.7, "children": [{"id": "x", "utility": 0}]}}"#).is_err());
        assert!(matches!(parse_model(r#"{"root": {"id": "r", "lambda": 1, "children": []}}"#), Err(Error::EmptyNest(_))));
        assert!(parse_model(r#"{"root": {"id": "r", "lambda": 1, "children": [{"id": "x", "utility": 0, "extra": 1}]}}"#).is_err());
    }

    #[test]
    fn overrides() {
        let m = parse_model(FIVE).unwrap();
        let o = parse_utility_overrides("1=2.5, 3=-1").unwrap();
        let m2 = apply_overrides(&m, &o).unwrap();
        assert_eq!(m2.utilities(), &[2.5, 1.5, -1.0]);
        assert!(matches!(apply_overrides(&m, &[("a".into(), 1.0)]), Err(Error::NotALeaf(_))));
        assert!(matches!(apply_overrides(&m, &[("q".into(), 1.0)]), Err(Error::UnknownNode(_))));
        assert!(parse_utility_overrides("x").is_err());
        assert!(parse_utility_overrides("x=abc").is_err());
        assert!(parse_utility_overrides("=1").is_err());
    }

    proptest! {
        #[test]
        fn written_models_parse_back_identically(seed in any::<u64>()) {
            let m = random_model(&mut SeededStream::new(seed).rng(), &RandomModelConfig::default());
            let back = parse_model(&to_json(&m)).unwrap();
            prop_assert_eq!(back.utilities(), m.utilities());
            prop_assert_eq!(back.tree().ids(), m.tree().ids());
            for v in 0..m.tree().len() {
                prop_assert_eq!(back.tree().lambda(v), m.tree().lambda(v));
                prop_assert_eq!(back.tree().parent(v), m.tree().parent(v));
            }
        }
    }
}
