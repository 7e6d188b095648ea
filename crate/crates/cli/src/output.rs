//! Report files: one JSON file per inequality and a CSV summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use fracmax::verify::{BoundsTable, SuiteOutput, VerificationReport};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Bumped whenever a field of the written reports changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct InequalityFile<'a> {
    schema_version: u32,
    inequality: &'a str,
    reports: Vec<&'a VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<&'a BoundsTable>,
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub schema_version: u32,
    pub suite: &'a str,
    pub corpus_seed: u64,
    pub corpus_fingerprint: String,
    pub config: &'a fracmax::verify::SuiteConfig,
    pub files: Vec<String>,
    pub skipped: &'a [String],
    pub failed: Vec<String>,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(fracmax::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

/// Writes the reports grouped by inequality and `summary.csv`; returns the
/// file names in write order.
pub fn write_reports(dir: &Path, out: &SuiteOutput) -> CliResult<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let mut groups: BTreeMap<&str, Vec<&VerificationReport>> = BTreeMap::new();
    for rep in &out.reports {
        groups.entry(rep.inequality.as_str()).or_default().push(rep);
    }
    let tables: BTreeMap<String, &BoundsTable> = out
        .tables
        .iter()
        .map(|t| (format!("bounds_{}", t.case.id()), t))
        .collect();
    let mut files = Vec::new();
    for (inequality, reports) in &groups {
        let name = format!("{inequality}.json");
        let file = InequalityFile {
            schema_version: SCHEMA_VERSION,
            inequality,
            reports: reports.clone(),
            table: tables.get(*inequality).copied(),
        };
        write_json(&dir.join(&name), &file)?;
        files.push(name);
    }
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(fracmax::Error::from)?;
    w.write_record(["inequality", "space", "function", "best_constant", "pass", "witness"])
        .map_err(fracmax::Error::from)?;
    for reports in groups.values() {
        for rep in reports {
            let witness = match &rep.witness {
                Some(wit) => serde_json::to_string(wit).map_err(fracmax::Error::from)?,
                None => String::new(),
            };
            w.write_record([
                rep.inequality.as_str(),
                &rep.space,
                &rep.function,
                &rep.best_constant.to_string(),
                &rep.pass.to_string(),
                &witness,
            ])
            .map_err(fracmax::Error::from)?;
        }
    }
    w.flush()
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    files.push("summary.csv".into());
    Ok(files)
}
