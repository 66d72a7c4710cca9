use std::path::PathBuf;

use serde_json::Value;

use stlmc::experiment::{ExperimentConfig, FixtureRef};
use stlmc::oracle::{BaseFunction, FixtureSpec};
use stlmc::MixtureTarget;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn schema(name: &str) -> Value {
    let text = std::fs::read_to_string(root().join("schemas").join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

// Every key of `doc` must be declared somewhere in `schema`, following
// `properties`, `items` and `oneOf` branches.
fn covered(doc: &Value, schema: &Value, path: &str) -> Result<(), String> {
    if let Some(branches) = schema.get("oneOf").and_then(Value::as_array) {
        let errs: Vec<String> = branches
            .iter()
            .filter_map(|b| covered(doc, b, path).err())
            .collect();
        return if errs.len() < branches.len() {
            Ok(())
        } else {
            Err(errs.join("; "))
        };
    }
    match doc {
        Value::Object(map) => {
            let props = schema
                .get("properties")
                .and_then(Value::as_object)
                .ok_or_else(|| format!("{path}: schema has no properties"))?;
            for (k, v) in map {
                let sub = props.get(k).ok_or_else(|| format!("{path}.{k}: not in schema"))?;
                if let Some(c) = sub.get("const") {
                    if c != v {
                        return Err(format!("{path}.{k}: {v} != {c}"));
                    }
                }
                covered(v, sub, &format!("{path}.{k}"))?;
            }
            if let Some(req) = schema.get("required").and_then(Value::as_array) {
                for r in req {
                    if !map.contains_key(r.as_str().unwrap()) {
                        return Err(format!("{path}: missing required {r}"));
                    }
                }
            }
            Ok(())
        }
        Value::Array(items) => match schema.get("items") {
            Some(s) => items.iter().try_for_each(|v| covered(v, s, path)),
            None => Ok(()),
        },
        _ => Ok(()),
    }
}

#[test]
fn shipped_configs_are_covered_by_the_experiment_schema() {
    let s = schema("experiment.schema.json");
    assert_eq!(s["additionalProperties"], Value::Bool(false));
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        // Round-trip through serde so every defaulted field is present.
        let doc = serde_json::to_value(&cfg).unwrap();
        covered(&doc, &s, "$").unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn path_fixture_refs_are_covered() {
    let s = schema("experiment.schema.json");
    let text = r#"{"schema_version": 1, "seed": 1, "mode": "sample", "fixture": {"path": "f.json"}}"#;
    let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
    assert!(matches!(cfg.fixture, Some(FixtureRef::Path(_))));
    covered(&serde_json::to_value(&cfg).unwrap(), &s, "$").unwrap();
}

#[test]
fn fixtures_are_covered_by_the_fixture_schema() {
    let s = schema("fixture.schema.json");
    let gauss = MixtureTarget::gaussian(vec![0.5, 0.5], vec![vec![-2.0, 0.0], vec![2.0, 1.0]], 1.5).unwrap();
    let quad = MixtureTarget::new(
        vec![1.0],
        vec![vec![0.0, 0.0]],
        BaseFunction::QuadraticForm {
            kappa: 1.0,
            smoothness: 3.0,
            h: vec![vec![2.0, 1.0], vec![1.0, 2.0]],
        },
    )
    .unwrap();
    for t in [gauss, quad] {
        let mut spec = FixtureSpec::from(t);
        spec.seed = Some(9);
        let doc = serde_json::to_value(&spec).unwrap();
        covered(&doc, &s, "$").unwrap();
        assert!(MixtureTarget::from_json(&doc.to_string()).is_ok());
    }
    assert!(covered(&serde_json::json!({"dim": 1, "extra": 0}), &s, "$").is_err());
}
