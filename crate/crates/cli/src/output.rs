//! Artifacts: CSV and JSON documents stamped with the library version and config hash.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    fn header(&self) -> String {
        format!("# cantor-scenery {VERSION} command={} config_hash={}\n", self.command, self.config_hash)
    }
}

/// A header row plus string-formatted rows.
#[derive(Clone, Debug, Default)]
pub struct Csv {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Csv { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// The named columns, in the given order.
    pub fn select(&self, columns: &[&str]) -> anyhow::Result<Csv> {
        let idx = columns
            .iter()
            .map(|c| self.columns.iter().position(|h| h == c).with_context(|| format!("no column {c}")))
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(Csv {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect(),
        })
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = prov.header();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// JSON object with the provenance fields first.
pub fn json_doc(prov: &Provenance, body: Value) -> String {
    let mut m = Map::new();
    m.insert("cantor_scenery".into(), json!(VERSION));
    m.insert("command".into(), json!(prov.command));
    m.insert("config_hash".into(), json!(prov.config_hash));
    if let Value::Object(b) = body {
        m.extend(b);
    } else {
        m.insert("result".into(), body);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("json serializes");
    s.push('\n');
    s
}

/// Write to `path`, or to standard output when none is given.
pub fn write(path: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Plot-ready subset of a report: the named columns of `data` under the usual header.
pub fn emit_plotdata(data: &Csv, columns: &[&str], prov: &Provenance, path: &Path) -> anyhow::Result<()> {
    write(Some(path), &data.select(columns)?.render(prov))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_selection() {
        let prov = Provenance { command: "converge".into(), config_hash: "ab".into() };
        let mut c = Csv::new(&["n", "d_C", "log_dC"]);
        c.push(vec!["1".into(), num(0.5), num(0.5f64.ln())]);
        let text = c.select(&["n", "log_dC"]).unwrap().render(&prov);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# cantor-scenery ") && lines[0].ends_with("config_hash=ab"));
        assert_eq!(lines[1], "n,log_dC");
        assert_eq!(lines[2], format!("1,{:?}", 0.5f64.ln()));
        assert!(c.select(&["missing"]).is_err());
    }

    #[test]
    fn num_round_trips() {
        for v in [1.0 / 3.0, 1e-300, 0.1 + 0.2] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
