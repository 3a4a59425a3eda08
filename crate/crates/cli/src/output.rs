//! Writes a [`RunOutput`] to disk: `report.json`, the echoed `config.toml`
//! and one CSV file per table.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::config::to_toml;
use crate::run::{RunOutput, Table};

pub fn report_json(output: &RunOutput) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(&output.report).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

pub fn table_csv(table: &Table) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
}

/// Writes every artifact into `dir`, returning the paths written.
pub fn write_all(output: &RunOutput, dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut put = |name: String, text: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    put("report.json".into(), report_json(output)?)?;
    put("config.toml".into(), to_toml(&output.report.config)?)?;
    for t in &output.tables {
        put(format!("{}.csv", t.name), table_csv(t)?)?;
    }
    Ok(written)
}
