//! Report serialization: JSON with 17 significant digits and CSV tables,
//! both prefixed by the tool version and the SHA-256 of the canonical
//! configuration.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::admissibility::{ScanGrid, Verdict};
use crate::error::Result;
use crate::nse::PicardTrace;

pub const TOOL: &str = "angular-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Keys sorted recursively, compact separators.
pub fn canonical_json(v: &Value) -> String {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .iter()
                .map(|k| format!("{}:{}", Value::String((*k).clone()), canonical_json(&m[*k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

pub fn config_hash(config: &impl Serialize) -> Result<String> {
    let v = serde_json::to_value(config)?;
    Ok(hex::encode(Sha256::digest(canonical_json(&v).as_bytes())))
}

/// `x` with 17 significant digits.
pub fn float17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |k: usize| "  ".repeat(k);
    match v {
        Value::Number(n) if n.is_f64() => out.push_str(&float17(n.as_f64().expect("f64 number"))),
        Value::Object(m) if !m.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        Value::Array(a) if !a.is_empty() => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// A result as JSON: `{tool, version, config_sha256, result}`, fields in
/// declaration order.
pub fn to_json(result: &impl Serialize, hash: &str) -> Result<String> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), TOOL.into());
    m.insert("version".into(), VERSION.into());
    m.insert("config_sha256".into(), hash.into());
    m.insert("result".into(), serde_json::to_value(result)?);
    let mut out = String::new();
    write_value(&Value::Object(m), 0, &mut out);
    out.push('\n');
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => float17(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Bulk numeric output: comment lines, a column header, rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            comments: vec![],
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn to_csv(&self, hash: &str) -> String {
        let mut out = format!("# {TOOL} {VERSION} config_sha256={hash}\n");
        for c in &self.comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(Cell::render).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// Constraints in definition order.
pub fn verdict_table(v: &Verdict) -> Table {
    let mut t = Table::new(&["id", "description", "lhs", "relation", "rhs", "status", "slack"]);
    t.comments.push(format!("theorem {} overall {:?}", v.theorem_id, v.overall));
    t.comments.extend(v.notes.iter().cloned());
    for c in &v.constraints {
        t.rows.push(vec![
            Cell::Text(c.id.clone()),
            Cell::Text(c.description.clone()),
            Cell::Num(c.lhs),
            Cell::Text(c.relation.symbol().into()),
            Cell::Num(c.rhs),
            Cell::Text(format!("{:?}", c.status)),
            Cell::Num(c.slack()),
        ]);
    }
    t
}

/// Row-major raster with one axis-description comment per axis.
pub fn scan_table(g: &ScanGrid) -> Table {
    let names: Vec<&str> = g.axes.iter().map(|a| a.field.as_str()).collect();
    let mut cols = names.clone();
    cols.push("verdict");
    let mut t = Table::new(&cols);
    t.comments.push(format!("checker {}", g.checker));
    for a in &g.axes {
        t.comments.push(format!(
            "axis {} ({} samples{})",
            a.field,
            a.values.len(),
            if a.reciprocal { ", reciprocal" } else { "" }
        ));
    }
    let (rows, cols_n) = g.shape();
    for i in 0..rows {
        for j in 0..cols_n {
            let mut r = vec![];
            if g.axes.len() == 2 {
                r.push(Cell::Num(g.axes[0].values[i]));
            }
            r.push(Cell::Num(g.axes[g.axes.len() - 1].values[j]));
            r.push(Cell::Text(g.at(i, j).as_char().to_string()));
            t.rows.push(r);
        }
    }
    t
}

/// `(iter, t, norm, ratio)`: the monitored difference `u_k − u_{k−1}` at
/// each time sample and the contraction ratio of iterate `k`.
pub fn picard_table(tr: &PicardTrace) -> Table {
    let mut t = Table::new(&["iter", "t", "norm", "ratio"]);
    t.comments.push(format!("stop {:?}", tr.stop));
    for (k, series) in tr.diff_series.iter().enumerate() {
        let ratio = if k == 0 { None } else { tr.contraction_ratios.get(k - 1).copied() };
        for (time, v) in tr.times.iter().zip(series) {
            t.rows.push(vec![
                Cell::Int(k as i64 + 1),
                Cell::Num(*time),
                Cell::Num(*v),
                ratio.map_or(Cell::Empty, Cell::Num),
            ]);
        }
    }
    t
}

pub fn write_report(body: &str, mut w: impl Write) -> Result<()> {
    w.write_all(body.as_bytes())?;
    Ok(())
}
