//! Convergence records of truncated inversion integrals.

use crate::error::Result;
use std::fmt::Write as _;
use std::path::Path;

/// What the two error columns measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    /// Relative error against a known reference.
    Error,
    /// Relative change from the previous (larger) truncation parameter.
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub kind: RecordKind,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceRecord {
    pub fn new(kind: RecordKind) -> Self {
        Self { kind, rows: Vec::new() }
    }

    pub fn push(&mut self, epsilon: f64, rel_l2: f64, rel_linf: f64) {
        self.rows.push(ConvergenceRow {
            epsilon,
            rel_l2,
            rel_linf,
        });
    }

    /// Row for a given truncation parameter.
    pub fn at(&self, epsilon: f64) -> Option<&ConvergenceRow> {
        self.rows
            .iter()
            .find(|r| (r.epsilon - epsilon).abs() <= 1e-12 * epsilon.abs())
    }

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    /// Whether the L² column never increases along the rows.
    pub fn is_non_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rel_l2 <= w[0].rel_l2)
    }

    /// CSV with a header and 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,rel_l2,rel_linf\n");
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r.epsilon, r.rel_l2, r.rel_linf).expect("writing to a string");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let mut r = ConvergenceRecord::new(RecordKind::Error);
        r.push(0.1, 0.5, 0.25);
        r.push(0.01, 0.05, 0.025);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,rel_l2,rel_linf");
        assert_eq!(
            lines[1],
            "1.0000000000000001e-1,5.0000000000000000e-1,2.5000000000000000e-1"
        );
        assert!(r.is_non_increasing());
        r.push(0.001, 0.06, 0.0);
        assert!(!r.is_non_increasing());
        assert_eq!(r.at(0.01).unwrap().rel_l2, 0.05);
    }
}
