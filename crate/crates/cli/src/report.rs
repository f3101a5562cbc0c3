//! Deterministic report writers. Floats are rendered with 17 significant
//! digits; files are written to a temporary name in the target directory
//! and renamed on completion so no partial artifact survives a crash.

use crate::config::RunConfig;
use crate::error::CliError;
use std::path::{Path, PathBuf};
use willmore_core::energy::EnergyReport;
use willmore_core::grid::Family;
use willmore_core::metric::Params;

pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "null".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// One value of the flat JSON document.
pub enum JsonValue {
    Number(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Null,
}

impl JsonValue {
    fn render(&self) -> String {
        match self {
            JsonValue::Number(x) => fmt17(*x),
            JsonValue::Int(i) => i.to_string(),
            JsonValue::Text(s) => format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            JsonValue::Bool(b) => b.to_string(),
            JsonValue::Null => "null".to_string(),
        }
    }
}

/// Renders a flat key/value document with the keys in given order.
pub fn flat_json(entries: &[(String, JsonValue)]) -> String {
    let mut out = String::from("{\n");
    for (i, (key, value)) in entries.iter().enumerate() {
        out.push_str(&format!("  \"{key}\": {}", value.render()));
        if i + 1 != entries.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

/// Flat entries of an energy report, in the documented key order.
pub fn energy_report_entries(
    report: &EnergyReport,
    family: Option<Family>,
    params: &Params,
    closed_form: Option<f64>,
) -> Vec<(String, JsonValue)> {
    let mut entries = vec![
        (
            "family".to_string(),
            match family {
                Some(f) => JsonValue::Text(f.name().to_string()),
                None => JsonValue::Text("file".to_string()),
            },
        ),
        ("params".to_string(), JsonValue::Text(params.to_string())),
        ("willmore".to_string(), JsonValue::Number(report.willmore)),
        ("area".to_string(), JsonValue::Number(report.area)),
        (
            "breakdown.H2".to_string(),
            JsonValue::Number(report.breakdown.h2),
        ),
        (
            "breakdown.K".to_string(),
            JsonValue::Number(report.breakdown.neg_k),
        ),
        (
            "breakdown.Ktilde".to_string(),
            JsonValue::Number(report.breakdown.ktilde),
        ),
        (
            "resolution".to_string(),
            JsonValue::Text(format!("{}x{}", report.resolution.0, report.resolution.1)),
        ),
        (
            "richardson_delta".to_string(),
            match report.richardson_delta {
                Some(d) => JsonValue::Number(d),
                None => JsonValue::Null,
            },
        ),
    ];
    entries.push((
        "closed_form".to_string(),
        match closed_form {
            Some(cf) => JsonValue::Number(cf),
            None => JsonValue::Null,
        },
    ));
    entries.push((
        "abs_error".to_string(),
        match closed_form {
            Some(cf) => JsonValue::Number((report.willmore - cf).abs()),
            None => JsonValue::Null,
        },
    ));
    entries
}

/// Writes `content` to `dir/name` through a temporary file and a rename.
pub fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, content)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, &target)
        .map_err(|e| CliError::Numerical(format!("cannot finalize {}: {e}", target.display())))?;
    Ok(target)
}

/// Which artifacts a run Writes, given the configured formats.
pub fn wants(config: &RunConfig, format: crate::config::Format) -> bool {
    config.formats.contains(&format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_have_seventeen_significant_digits() {
        let entries = vec![
            ("willmore".to_string(), JsonValue::Number(std::f64::consts::PI)),
            ("label".to_string(), JsonValue::Text("a\"b".to_string())),
            ("missing".to_string(), JsonValue::Null),
        ];
        let doc = flat_json(&entries);
        assert!(doc.contains("3.1415926535897931e0"), "{doc}");
        assert!(doc.contains("\"a\\\"b\""));
        assert!(doc.contains("null"));
    }
}
