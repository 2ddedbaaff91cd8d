//! Result tables and their CSV / JSON encodings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub tool: String,
    pub core: String,
}

impl Provenance {
    pub fn new(config_text: &str) -> Self {
        let digest = Sha256::digest(config_text.as_bytes());
        Provenance {
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            tool: format!("robustfolio-cli {}", env!("CARGO_PKG_VERSION")),
            core: format!("robustfolio {}", robustfolio::VERSION),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: Option<Provenance>,
}

impl ResultTable {
    pub fn new(columns: Vec<String>) -> Self {
        ResultTable { columns, rows: vec![], provenance: None }
    }

    pub fn from_columns(columns: &[&str]) -> Self {
        Self::new(columns.iter().map(|c| c.to_string()).collect())
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_real(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty csv")?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut t = ResultTable::new(columns);
        for (i, line) in lines.enumerate() {
            let row: Vec<f64> = line
                .split(',')
                .map(|c| c.parse::<f64>().map_err(|e| format!("row {i}: {e}")))
                .collect::<Result<_, _>>()?;
            if row.len() != t.columns.len() {
                return Err(format!("row {i} has {} cells", row.len()));
            }
            t.rows.push(row);
        }
        Ok(t)
    }

    /// Column-oriented object; non-finite values become null.
    pub fn to_json(&self) -> String {
        let mut cols = Map::new();
        for (j, c) in self.columns.iter().enumerate() {
            let v: Vec<Value> = self
                .rows
                .iter()
                .map(|r| serde_json::Number::from_f64(r[j]).map(Value::Number).unwrap_or(Value::Null))
                .collect();
            cols.insert(c.clone(), Value::Array(v));
        }
        let mut obj = Map::new();
        obj.insert("column_order".into(), Value::Array(self.columns.iter().cloned().map(Value::String).collect()));
        obj.insert("columns".into(), Value::Object(cols));
        if let Some(p) = &self.provenance {
            obj.insert("provenance".into(), serde_json::to_value(p).expect("provenance"));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let order = v["column_order"].as_array().ok_or("missing column_order")?;
        let columns: Vec<String> = order.iter().filter_map(|c| c.as_str().map(str::to_string)).collect();
        let data: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| {
                v["columns"][c]
                    .as_array()
                    .map(|a| a.iter().map(|x| x.as_f64().unwrap_or(f64::NAN)).collect())
                    .ok_or(format!("missing column {c}"))
            })
            .collect::<Result<_, _>>()?;
        let n = data.first().map(|d| d.len()).unwrap_or(0);
        let rows = (0..n).map(|i| data.iter().map(|d| d[i]).collect()).collect();
        let provenance = serde_json::from_value(v["provenance"].clone()).ok();
        Ok(ResultTable { columns, rows, provenance })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Write the table; CSV output gets its provenance in a `.provenance.json` sidecar.
    pub fn emit(&self, path: &Path, format: Format) -> std::io::Result<()> {
        fs::write(path, self.render(format))?;
        if let (Format::Csv, Some(p)) = (format, &self.provenance) {
            let mut side = path.as_os_str().to_owned();
            side.push(".provenance.json");
            fs::write(side, serde_json::to_string_pretty(p).expect("provenance") + "\n")?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::from_columns(&["x", "y"]);
        t.push(vec![0.1, -1.0 / 3.0]);
        t.push(vec![1e-300, 2.5]);
        t
    }

    #[test]
    fn csv_shape_and_round_trip() {
        let t = sample();
        let s = t.to_csv();
        assert_eq!(s.lines().count(), 3);
        assert!(s.ends_with('\n') && !s.contains('\r'));
        let back = ResultTable::from_csv(&s).unwrap();
        for (a, b) in t.rows.iter().flatten().zip(back.rows.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn json_round_trip() {
        let mut t = sample();
        t.provenance = Some(Provenance::new("{}"));
        let s = t.to_json();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["columns"].as_object().unwrap().len(), 2);
        let back = ResultTable::from_json(&s).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn nan_survives_csv() {
        let mut t = ResultTable::from_columns(&["v"]);
        t.push(vec![f64::NAN]);
        assert!(ResultTable::from_csv(&t.to_csv()).unwrap().rows[0][0].is_nan());
    }
}
