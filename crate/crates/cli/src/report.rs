//! Collects experiment summaries from an output directory into one
//! acceptance report.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use ilrd_core::experiments::{consistency_check, fourier_check};
use serde_json::{json, Value};

use crate::error::CliError;

const NAMES: [&str; 11] = [
    "density shape",
    "doubling-map limit",
    "covariance decay",
    "beta rate",
    "stable-regime limit laws",
    "gaussian-regime limit laws",
    "fourier tail bound",
    "maximal inequality",
    "time reversal",
    "almost-sure trend",
    "internal consistency",
];

const EXPECTED: [&str; 9] = [
    "density (gamma 0.5, 0.6, 0.75, 0.9)",
    "density --gamma 0.01",
    "covdecay",
    "beta",
    "limit (gamma > 0.5)",
    "limit --gamma 0.5",
    "maxineq",
    "reversal",
    "trend",
];

/// Which criterion a summary feeds, if any.
fn criterion(v: &Value) -> Option<usize> {
    let gamma = v["params"]["gamma"].as_f64();
    match v["experiment"].as_str()? {
        "density" => match gamma? {
            g if g <= 0.01 => Some(2),
            g if [0.5, 0.6, 0.75, 0.9].contains(&g) => Some(1),
            _ => None,
        },
        "covdecay" => Some(3),
        "beta" => Some(4),
        "limit" if gamma? > 0.5 => Some(5),
        "limit" => Some(6),
        "maxineq" => Some(8),
        "reversal" => Some(9),
        "trend" => Some(10),
        _ => None,
    }
}

fn failing(v: &Value) -> Vec<String> {
    v["flags"]
        .as_object()
        .map(|m| m.iter().filter(|(_, ok)| ok != &&Value::Bool(true)).map(|(k, _)| k.clone()).collect())
        .unwrap_or_default()
}

/// Reads every summary in `dir`, adds the two deterministic checks, and
/// writes `report.json` and `report.md`. Fails with `MissingInput` when the
/// directory holds no summaries and `GatesFailed` when any gate failed.
pub fn run(dir: &Path, seed: u64) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::MissingInput(format!("cannot read {}: {e}; run {}", dir.display(), EXPECTED.join(", "))))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != "report.json"))
        .collect();
    paths.sort();
    let mut by_criterion: BTreeMap<usize, Vec<(String, Value)>> = BTreeMap::new();
    for p in paths {
        let Ok(text) = std::fs::read_to_string(&p) else { continue };
        let Ok(v) = serde_json::from_str::<Value>(&text) else { continue };
        if v.get("experiment").is_none() {
            continue;
        }
        if let Some(c) = criterion(&v) {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            by_criterion.entry(c).or_default().push((name, v));
        }
    }
    if by_criterion.is_empty() {
        return Err(CliError::MissingInput(format!(
            "no experiment summaries in {}; expected outputs of: {}",
            dir.display(),
            EXPECTED.join(", ")
        )));
    }
    let fourier = fourier_check(10_000, 10_000)?;
    let consistency = consistency_check(seed)?;
    for (c, s) in [(7, &fourier), (11, &consistency)] {
        by_criterion.insert(c, vec![("(computed)".into(), serde_json::from_str(&s.to_json()?)?)]);
    }

    let mut rows = Vec::new();
    let mut md = String::from("# Acceptance report\n\n| # | criterion | status | sources | failing gates |\n|---|---|---|---|---|\n");
    let mut failed = Vec::new();
    for (i, name) in NAMES.iter().enumerate() {
        let id = i + 1;
        let (status, sources, fails) = match by_criterion.get(&id) {
            None => ("missing", Vec::new(), Vec::new()),
            Some(list) => {
                let fails: Vec<String> = list
                    .iter()
                    .flat_map(|(f, v)| failing(v).into_iter().map(move |g| format!("{f}:{g}")))
                    .collect();
                let sources = list.iter().map(|(f, _)| f.clone()).collect();
                (if fails.is_empty() { "pass" } else { "fail" }, sources, fails)
            }
        };
        if status == "fail" {
            failed.push(format!("{id} ({name})"));
        }
        let _ = writeln!(md, "| {id} | {name} | {status} | {} | {} |", sources.join(", "), fails.join(", "));
        rows.push(json!({
            "criterion": id,
            "name": name,
            "status": status,
            "sources": sources,
            "failing": fails,
            "summaries": by_criterion.get(&id).map(|l| l.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>()),
        }));
    }
    let report = json!({ "criteria": rows, "pass": failed.is_empty() });
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    std::fs::write(dir.join("report.md"), md)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::GatesFailed(failed.join(", ")))
    }
}
