use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cake_core::ir::json;
use cake_core::{dsl, Protocol, Valuation};

/// Reads `path`, or stdin for `-`.
pub fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn looks_like_json(path: &str, text: &str) -> bool {
    match Path::new(path).extension().and_then(|e| e.to_str()) {
        Some("json") => true,
        Some("cake") => false,
        _ => text.trim_start().starts_with('{'),
    }
}

/// Parses a protocol in either surface form. DSL diagnostics are rendered
/// against the source.
pub fn parse_protocol(path: &str, text: &str) -> Result<Protocol> {
    if looks_like_json(path, text) {
        let p = json::from_str(text).map_err(|e| anyhow!("{path}: {e}"))?;
        let report = p.validate();
        if !report.is_valid() {
            bail!("{path}: {}", report.summary());
        }
        Ok(p)
    } else {
        dsl::parse(text).map_err(|diags| {
            let shown: Vec<String> = diags
                .iter()
                .map(|d| format!("{path}:{}", d.render(text)))
                .collect();
            anyhow!(shown.join("\n"))
        })
    }
}

pub fn load_protocol(path: &str) -> Result<Protocol> {
    parse_protocol(path, &read_input(path)?)
}

/// A JSON array of valuations, or uniform ones when no file is given.
pub fn load_valuations(path: Option<&str>, agents: usize) -> Result<Vec<Valuation>> {
    let Some(path) = path else {
        return Ok(vec![Valuation::uniform(); agents]);
    };
    let vals: Vec<Valuation> = serde_json::from_str(&read_input(path)?)
        .with_context(|| format!("{path}: expected a JSON array of valuations"))?;
    if vals.len() != agents {
        bail!("{path}: {} valuations for {agents} agents", vals.len());
    }
    Ok(vals)
}

/// A protocol as DSL text, or as IR JSON when `as_json` is set or the target
/// path ends in `.json`.
pub fn render_protocol(p: &Protocol, as_json: bool, target: Option<&str>) -> String {
    let json_target = target.is_some_and(|t| t.ends_with(".json"));
    if as_json || json_target {
        json::to_string(p)
    } else {
        dsl::print(p)
    }
}

/// Writes to `path` or prints to stdout.
pub fn emit(text: &str, path: Option<&str>) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {path}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
