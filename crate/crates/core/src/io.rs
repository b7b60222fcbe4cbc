//! Small text-format helpers shared by the CSV and JSON emitters.

use std::fmt::Write as _;

/// Decimal rendering with 17 significant digits, which round-trips any `f64`.
pub fn fmt17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    if !(-30..=30).contains(&exponent) {
        return format!("{v:.16e}");
    }
    let decimals = (16 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Builds a CSV document with a fixed header; rows are pre-rendered fields.
pub struct CsvWriter {
    out: String,
    width: usize,
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        CsvWriter {
            out,
            width: header.len(),
        }
    }

    pub fn row_f64(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width);
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.out.push_str(&fmt17(*v));
        }
        self.out.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        let _ = writeln!(self.out, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.out
    }
}
