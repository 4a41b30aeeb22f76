//! Deterministic machine-readable output: CSV (17 significant digits, '.'
//! decimal, no locale) or JSON, to a file or stdout.

use std::io::Write;

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    writeln!(out, "{}", row.join(","))?;
                }
            }
            Format::Json => {
                writeln!(out, "[")?;
                for (i, row) in self.rows.iter().enumerate() {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("\"{c}\":{}", json_value(v)))
                        .collect();
                    let comma = if i + 1 < self.rows.len() { "," } else { "" };
                    writeln!(out, "  {{{}}}{comma}", fields.join(","))?;
                }
                writeln!(out, "]")?;
            }
        }
        Ok(())
    }
}

fn json_value(v: &str) -> String {
    // Numbers pass through; anything else is quoted.
    if v.parse::<f64>().is_ok() && !v.is_empty() {
        v.to_string()
    } else {
        format!("\"{v}\"")
    }
}

/// 17-significant-digit float formatting.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.16e}")
}

pub fn fmt_usize(x: usize) -> String {
    x.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_roundtrips() {
        for &x in &[std::f64::consts::PI, 1e-300, -2.5e17, 0.1] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_shape() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,x\n");
    }
}
