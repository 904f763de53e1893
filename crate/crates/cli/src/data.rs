//! Dataset loaders: COPA XML, E-CARE JSON lines and the canonical JSONL dump.

use std::fs;
use std::path::Path;

use ibe_core::{validate_example, CqaExample, Direction, Source};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::config::{DatasetFormat, DatasetSpec};
use crate::error::{CliError, Result};

/// Items of a COPA corpus file. Gold alternatives are converted to 0-based
/// indices; ids become `<label>-<id>`.
pub fn load_copa(path: &Path, label: &str) -> Result<Vec<CqaExample>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_copa(&text, label).map_err(|m| CliError::data(path, m))
}

pub fn parse_copa(text: &str, label: &str) -> Result<Vec<CqaExample>, String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| format!("malformed XML: {e}"))?;
    let mut out = Vec::new();
    for (n, item) in doc
        .descendants()
        .filter(|n| n.has_tag_name("item"))
        .enumerate()
    {
        let ordinal = n + 1;
        let id = item
            .attribute("id")
            .map_or_else(|| ordinal.to_string(), str::to_string);
        let at = |what: String| format!("item {id}: {what}");
        let asks = item
            .attribute("asks-for")
            .ok_or_else(|| at("missing attribute asks-for".into()))?;
        let direction: Direction = asks
            .parse()
            .map_err(|_| at(format!("unknown asks-for value `{asks}`")))?;
        let alt = item
            .attribute("most-plausible-alternative")
            .ok_or_else(|| at("missing attribute most-plausible-alternative".into()))?;
        let gold_index = match alt.trim() {
            "1" => 0,
            "2" => 1,
            other => {
                return Err(at(format!(
                    "most-plausible-alternative must be 1 or 2, got `{other}`"
                )))
            }
        };
        let child = |tag: &str| -> Result<String, String> {
            item.children()
                .find(|c| c.has_tag_name(tag))
                .map(|c| c.text().unwrap_or("").trim().to_string())
                .ok_or_else(|| at(format!("missing child <{tag}>")))
        };
        let example = CqaExample {
            id: format!("{label}-{id}"),
            context: child("p")?,
            direction,
            candidates: vec![child("a1")?, child("a2")?],
            gold_index,
            source: Source::Copa,
        };
        out.push(validate_example(example).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

/// E-CARE lines with `premise`, `ask-for`, `hypothesis1`, `hypothesis2` and
/// a 0-based `label`. Ids use the `index` key when present, else the line
/// number.
pub fn load_ecare(path: &Path, label: &str) -> Result<Vec<CqaExample>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_ecare(&text, label).map_err(|m| CliError::data(path, m))
}

pub fn parse_ecare(text: &str, label: &str) -> Result<Vec<CqaExample>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |what: String| format!("line {}: {what}", i + 1);
        let v: Value = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
        let text_field = |key: &str| -> Result<String, String> {
            v.get(key)
                .and_then(Value::as_str)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| at(format!("missing string key `{key}`")))
        };
        let direction: Direction = {
            let raw = text_field("ask-for")?;
            raw.parse()
                .map_err(|_| at(format!("unknown ask-for value `{raw}`")))?
        };
        let gold_index = match v.get("label").and_then(Value::as_u64) {
            Some(l @ (0 | 1)) => l as usize,
            Some(l) => return Err(at(format!("label must be 0 or 1, got {l}"))),
            None => return Err(at("missing integer key `label`".into())),
        };
        let id = match v.get("index") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => (i + 1).to_string(),
        };
        let example = CqaExample {
            id: format!("{label}-{id}"),
            context: text_field("premise")?,
            direction,
            candidates: vec![text_field("hypothesis1")?, text_field("hypothesis2")?],
            gold_index,
            source: Source::Ecare,
        };
        out.push(validate_example(example).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

/// Examples serialized one per line, as in a run's `examples.jsonl` dump
/// or a hand-written corpus.
pub fn load_jsonl(path: &Path) -> Result<Vec<CqaExample>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Value = serde_json::from_str(l)
                .map_err(|e| CliError::data(path, format!("line {}: {e}", i + 1)))?;
            // Accept both bare examples and run-directory records.
            let v = v.get("example").cloned().unwrap_or(v);
            serde_json::from_value(v)
                .map_err(|e| CliError::data(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

/// `n` examples drawn without replacement under `seed`, kept in file order.
pub fn sample<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

pub fn load_dataset(spec: &DatasetSpec, seed: u64) -> Result<Vec<CqaExample>> {
    let label = spec.label();
    let all = match spec.format {
        DatasetFormat::Copa => load_copa(&spec.path, &label)?,
        DatasetFormat::Ecare => load_ecare(&spec.path, &label)?,
        DatasetFormat::Jsonl => load_jsonl(&spec.path)?,
    };
    Ok(match spec.sample {
        Some(n) => sample(&all, n, seed),
        None => all,
    })
}
