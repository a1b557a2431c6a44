//! Dot-path config overrides: `flow.cfl=0.1` sets `/flow/cfl` in the JSON
//! document, parsing the value as JSON when possible and as a string
//! otherwise.

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub fn apply(config: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (path, raw) = item
            .split_once('=')
            .with_context(|| format!("override {item:?} is not KEY=VALUE"))?;
        let value = serde_json::from_str::<Value>(raw).unwrap_or(Value::String(raw.to_string()));
        set_path(config, path, value)?;
    }
    Ok(())
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cursor = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if !cursor.is_object() {
            bail!("override path {path:?}: {part:?} is not an object field");
        }
        let map = cursor.as_object_mut().unwrap();
        if last {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sets_nested_and_fresh_paths() {
        let mut doc = json!({"flow": {"cfl": 0.2}});
        apply(
            &mut doc,
            &["flow.cfl=5.0".into(), "stop.extra=1".into(), "name=abc".into()],
        )
        .unwrap();
        assert_eq!(doc["flow"]["cfl"], json!(5.0));
        assert_eq!(doc["stop"]["extra"], json!(1));
        assert_eq!(doc["name"], json!("abc"));
    }

    #[test]
    fn rejects_malformed_items() {
        let mut doc = json!({});
        assert!(apply(&mut doc, &["novalue".into()]).is_err());
    }
}
