//! Tabular and JSON export of protocol tables, sweeps and verification results.
//!
//! Every number leaves the library rounded to 15 significant digits so that
//! reruns reproduce files byte for byte.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::protocol::ProtocolTable;
use crate::tuner::SweepCurve;

pub const SIGNIFICANT_DIGITS: usize = 15;

/// `x` rounded to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Text form of [`sig15`]; non-finite values become `nan`, `inf`, `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        let r = sig15(x);
        if r == 0.0 {
            "0".into()
        } else if (1e-5..1e15).contains(&r.abs()) {
            r.to_string()
        } else {
            format!("{r:e}")
        }
    }
}

/// Rounds every number inside `v`. Non-finite numbers (which JSON cannot
/// carry) are already `null` after serialisation.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if let Some(r) = serde_json::Number::from_f64(sig15(f)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serialises `value` with all floats rounded.
pub fn to_rounded_json<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::InvalidInput(format!("serialisation failed: {e}")))?;
    round_json(&mut v);
    Ok(v)
}

/// Named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    /// CSV text. Each line of `preamble` is written first as a `#` comment.
    pub fn to_csv(&self, preamble: Option<&str>) -> Result<String> {
        let mut out = String::new();
        if let Some(p) = preamble {
            for line in p.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| fmt_num(x))).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }

    /// Parses CSV written by [`Table::to_csv`], skipping `#` lines.
    pub fn from_csv(text: &str) -> Result<Self> {
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers().map_err(io)?.iter().map(str::to_owned).collect();
        let mut table = Table::new(columns);
        for rec in r.records() {
            let rec = rec.map_err(io)?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::InvalidInput(format!("not a number: {f}"))))
                .collect::<Result<Vec<f64>>>()?;
            table.push(row);
        }
        Ok(table)
    }

    /// One JSON object per row.
    pub fn to_json_records(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let map = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, &x)| (c.clone(), json!(sig15(x))))
                        .collect();
                    Value::Object(map)
                })
                .collect(),
        )
    }
}

pub const PROTOCOL_COLUMNS: [&str; 7] = ["t", "M11", "M12", "M22", "theta", "omega1_sq", "omega2_sq"];

pub fn protocol_table(table: &ProtocolTable) -> Table {
    let mut out = Table::new(PROTOCOL_COLUMNS);
    for s in &table.samples {
        out.push(vec![
            s.t,
            s.m.a11,
            s.m.a12,
            s.m.a22,
            s.frame.theta,
            s.frame.omega1_sq,
            s.frame.omega2_sq,
        ]);
    }
    out
}

/// `{"w1", "w2", "tf", "lambda", "gamma", "samples": [...]}`
pub fn protocol_json(table: &ProtocolTable) -> Value {
    let s = &table.spec;
    json!({
        "w1": sig15(s.w1),
        "w2": sig15(s.w2),
        "tf": sig15(s.tf),
        "lambda": sig15(s.lambda),
        "gamma": sig15(s.gamma),
        "samples": protocol_table(table).to_json_records(),
    })
}

/// `x_name, y_name` columns of a sweep.
pub fn curve_table(curve: &SweepCurve) -> Table {
    let mut out = Table::new([curve.x_name.clone(), curve.y_name.clone()]);
    for p in &curve.points {
        out.push(vec![p.x, p.y]);
    }
    out
}
