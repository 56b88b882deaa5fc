//! Output envelopes. Runtimes are kept out of the main report so that
//! seeded runs produce byte-identical files; they go to a sidecar.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const BUILD_ID: &str = env!("OPENASEP_BUILD_ID");

/// Moves every `seconds` field out of `v`, keyed by its JSON pointer.
fn strip_timings(v: &mut Value, path: &str, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) => {
            if let Some(t) = m.remove("seconds") {
                out.insert(if path.is_empty() { "/".into() } else { path.into() }, t);
            }
            for (k, child) in m.iter_mut() {
                strip_timings(child, &format!("{path}/{k}"), out);
            }
        }
        Value::Array(xs) => {
            for (i, child) in xs.iter_mut().enumerate() {
                strip_timings(child, &format!("{path}/{i}"), out);
            }
        }
        _ => {}
    }
}

pub struct Output {
    pub out: Option<PathBuf>,
}

impl Output {
    pub fn text(&self, body: &str) -> Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
            None => {
                std::io::stdout().write_all(body.as_bytes())?;
                Ok(())
            }
        }
    }

    /// Writes the report envelope and, when writing to a file, a
    /// `<out>.timings.json` sidecar with the runtimes.
    pub fn report<T: Serialize>(
        &self,
        command: &str,
        input: Value,
        result: &T,
        pass: bool,
        total_seconds: f64,
    ) -> Result<()> {
        let mut result = serde_json::to_value(result)?;
        let mut timings = Map::new();
        strip_timings(&mut result, "", &mut timings);
        timings.insert("total".into(), json!(total_seconds));
        let doc = json!({
            "tool": "openasep",
            "build": BUILD_ID,
            "command": command,
            "input": input,
            "pass": pass,
            "result": result,
        });
        self.text(&(serde_json::to_string_pretty(&doc)? + "\n"))?;
        match &self.out {
            Some(p) => {
                let side = sidecar(p);
                std::fs::write(&side, serde_json::to_string_pretty(&Value::Object(timings))? + "\n")
                    .with_context(|| format!("writing {}", side.display()))
            }
            None => {
                log::info!("timings: {}", Value::Object(timings));
                Ok(())
            }
        }
    }
}

fn sidecar(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".timings.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timings_are_collected_by_pointer() {
        let mut v = json!({"seconds": 1.0, "rows": [{"n": 4, "seconds": 2.0}]});
        let mut m = Map::new();
        strip_timings(&mut v, "", &mut m);
        assert_eq!(v, json!({"rows": [{"n": 4}]}));
        assert_eq!(m["/"], json!(1.0));
        assert_eq!(m["/rows/0"], json!(2.0));
    }
}
