//! Plain-text CSV format for map fields.
//!
//! ```text
//! # n tau_re tau_im
//! 16 0 1
//! 0.0,0.0
//! 0.0625,0.0
//! ...
//! ```
//!
//! Nodes follow in row-major order p = j * n + i, one line of comma-separated components each.
//! Blank lines and further `#` lines are ignored.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Result, SigmaError};
use crate::harmonic::MapField;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldFile {
    pub n: usize,
    pub tau: Complex64,
    pub field: MapField,
}

pub fn write_field_csv(n: usize, tau: Complex64, field: &MapField) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# n tau_re tau_im");
    let _ = writeln!(out, "{} {:?} {:?}", n, tau.re, tau.im);
    for p in 0..field.len() {
        let row: Vec<String> = field.node(p).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn read_field_csv(text: &str) -> Result<FieldFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines
        .next()
        .ok_or_else(|| SigmaError::Parse("empty field file".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(SigmaError::Parse(format!(
            "line {ln}: expected `n tau_re tau_im`"
        )));
    }
    let n: usize = parts[0]
        .parse()
        .map_err(|_| SigmaError::Parse(format!("line {ln}: bad n `{}`", parts[0])))?;
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| SigmaError::Parse(format!("line {ln}: bad number `{s}`")))
    };
    let tau = Complex64::new(num(parts[1])?, num(parts[2])?);
    let mut values = Vec::with_capacity(n * n * 2);
    let mut dim = None;
    let mut count = 0;
    for (ln, line) in lines {
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| SigmaError::Parse(format!("line {ln}: bad number `{}`", s.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(SigmaError::Parse(format!(
                    "line {ln}: expected {d} components, got {}",
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
        count += 1;
    }
    if count != n * n {
        return Err(SigmaError::DimensionMismatch {
            expected: n * n,
            got: count,
        });
    }
    let dim = dim.unwrap_or(0);
    Ok(FieldFile {
        n,
        tau,
        field: MapField { dim, values },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ConformalDomain;

    #[test]
    fn round_trip_is_exact() {
        let tau = Complex64::new(0.1, 1.3);
        let dom = ConformalDomain::flat(8, tau).unwrap();
        let f = MapField::from_fn(&dom, 2, |a, b| vec![a / 3.0, (a * b).sin()]);
        let text = write_field_csv(8, tau, &f);
        let back = read_field_csv(&text).unwrap();
        assert_eq!(back.n, 8);
        assert_eq!(back.tau, tau);
        assert_eq!(back.field, f);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(read_field_csv("").is_err());
        assert!(read_field_csv("8 0 1\n1,2\n").is_err());
        assert!(read_field_csv("2 0 1\n1,2\n1,2\n1\n1,2\n").is_err());
        assert!(read_field_csv("2 0 x\n").is_err());
    }
}
