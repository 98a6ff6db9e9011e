//! Comma-separated output tables.
//!
//! Numbers are printed with 12 significant digits in the shortest of fixed
//! or scientific notation (like C's `%.12g`), missing values as empty
//! fields, and failed evaluations as `#ERR:<code>`.

use std::fmt::Write as _;
use std::io::{self, Write};

const SIGNIFICANT: i32 = 12;

/// `%.12g`-style rendering with trailing zeros removed. Negative zero
/// prints as `0`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT).contains(&exp) {
        let decimals = (SIGNIFICANT - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let mut s = trim_fraction(mantissa).to_string();
        let _ = write!(s, "e{exp}");
        s
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A table cell before rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
    Text(String),
    Missing,
    Error(&'static str),
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Missing, Cell::Num)
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Flag(b) => if *b { "1" } else { "0" }.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
            Cell::Error(code) => format!("#ERR:{code}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl OutputTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().flatten().any(|c| matches!(c, Cell::Error(_)))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("table output is UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(-1.0), "-1");
        assert_eq!(format_number(0.445), "0.445");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(123456789012.0), "123456789012");
        assert_eq!(format_number(1234567890123.0), "1.23456789012e12");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(0.99999999999999), "1");
        assert_eq!(format_number(2.5e-5), "2.5e-5");
        assert_eq!(format_number(1e-4), "0.0001");
    }

    #[test]
    fn renders_cells() {
        let mut t = OutputTable::new(["a", "b", "c", "d"]);
        t.push(vec![
            Cell::Num(1.0),
            Cell::Missing,
            Cell::Error("nonunique"),
            Cell::Flag(true),
        ]);
        assert_eq!(t.to_csv_string(), "a,b,c,d\n1,,#ERR:nonunique,1\n");
        assert!(t.has_errors());
    }

    proptest! {
        #[test]
        fn printed_values_reparse(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL) {
            let back: f64 = format_number(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-12 * x.abs());
        }
    }
}
