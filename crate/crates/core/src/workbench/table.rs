//! Numeric CSV tables. Floats are written in shortest round-trip form so a
//! table read back from disk reproduces the computed values bit for bit.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// Name of a leading text column, if any.
    pub label_header: Option<String>,
    pub labels: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == 0.0 {
        // Drops the sign of negative zero.
        "0".into()
    } else {
        format!("{v:e}")
    }
}

fn parse_err(path: &Path, message: String) -> Error {
    Error::Parse {
        what: path.display().to_string(),
        message,
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            label_header: None,
            labels: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// A table whose first column holds text labels.
    pub fn labeled(label: &str, header: &[&str]) -> Self {
        Table {
            label_header: Some(label.to_string()),
            ..Self::new(header)
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert!(self.label_header.is_none(), "labeled table needs push_labeled");
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_labeled(&mut self, label: &str, row: Vec<f64>) {
        assert!(self.label_header.is_some(), "unlabeled table");
        assert_eq!(row.len(), self.header.len(), "row width");
        self.labels.push(label.to_string());
        self.rows.push(row);
    }

    /// Row with the given label.
    pub fn row(&self, label: &str) -> Option<&[f64]> {
        let k = self.labels.iter().position(|l| l == label)?;
        Some(&self.rows[k])
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of a named column.
    pub fn get(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name).ok_or_else(|| Error::Data(format!("table has no column `{name}`")))?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
        let head: Vec<&str> = self
            .label_header
            .iter()
            .chain(&self.header)
            .map(String::as_str)
            .collect();
        w.write_record(&head).map_err(|e| parse_err(path, e.to_string()))?;
        for (k, r) in self.rows.iter().enumerate() {
            let label = self.label_header.as_ref().map(|_| self.labels[k].clone());
            w.write_record(label.into_iter().chain(r.iter().map(|&v| fmt_f64(v))))
                .map_err(|e| parse_err(path, e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::read_impl(path, false)
    }

    /// Reads a table written with a leading label column.
    pub fn read_labeled(path: &Path) -> Result<Self> {
        Self::read_impl(path, true)
    }

    fn read_impl(path: &Path, labeled: bool) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
        let mut header: Vec<String> = r
            .headers()
            .map_err(|e| parse_err(path, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let label_header = if labeled && !header.is_empty() {
            Some(header.remove(0))
        } else {
            None
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
            let mut fields = rec.iter();
            if labeled {
                labels.push(fields.next().unwrap_or_default().to_string());
            }
            let row = fields
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| parse_err(path, format!("row {}: `{s}`: {e}", k + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Table {
            label_header,
            labels,
            header,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(vals in proptest::collection::vec(-1e300f64..1e300, 1..20)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.csv");
            let mut t = Table::new(&["v"]);
            for v in &vals {
                t.push(vec![*v]);
            }
            t.write(&path).unwrap();
            let back = Table::read(&path).unwrap();
            prop_assert_eq!(back.get("v").unwrap(), vals);
        }
    }

    #[test]
    fn special_values() {
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!("nan".parse::<f64>().unwrap().is_nan(), true);
        assert_eq!(fmt_f64(1e-300).parse::<f64>().unwrap(), 1e-300);
    }

    #[test]
    fn labeled_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::labeled("name", &["a", "b"]);
        t.push_labeled("first", vec![1.0, -2.5]);
        t.push_labeled("second", vec![f64::NAN, 3e-17]);
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "name,a,b\nfirst,1e0,-2.5e0\nsecond,nan,3e-17\n");
        let back = Table::read_labeled(&path).unwrap();
        assert_eq!(back.row("first").unwrap(), &[1.0, -2.5]);
        assert_eq!(back.labels, t.labels);
    }

    #[test]
    fn missing_column_is_data_error() {
        let t = Table::new(&["a"]);
        assert!(matches!(t.get("b"), Err(Error::Data(_))));
    }
}
