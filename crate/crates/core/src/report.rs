//! Structured text reports: one named scalar per line, `name = value`.
//!
//! The format is the exchange surface between the exact checks, the
//! harness, and the test suite. Values print in Rust's shortest
//! round-tripping float form, so `parse(render(r)) == r`.

use std::fmt;

use crate::error::{Error, Result};
use crate::oracle::{AdjointOne, DecompositionReport, EntropyBoundReport, YauReport};
use crate::simulate::Estimate;
use crate::stats::{MGFReport, ProductBoundReport};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<(String, f64)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, value: f64) -> Result<()> {
        if name.is_empty() || name.contains(char::is_whitespace) || name.contains('=') {
            return Err(Error::Usage(format!("bad report entry name {name:?}")));
        }
        if value.is_nan() {
            return Err(Error::Domain(format!("report entry {name} is NaN")));
        }
        self.entries.push((name.to_string(), value));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut report = Report::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (name, raw) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: missing '='", idx + 1)))?;
            let value: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad value {raw:?}", idx + 1)))?;
            report.push(name.trim(), value)?;
        }
        Ok(report)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in &self.entries {
            writeln!(f, "{name} = {value}")?;
        }
        Ok(())
    }
}

impl From<&YauReport> for Report {
    fn from(r: &YauReport) -> Self {
        let mut out = Report::new();
        for (name, value) in [
            ("t", r.t),
            ("dt", r.dt),
            ("speedup", r.speedup),
            ("entropy", r.entropy),
            ("entropy-rate", r.entropy_rate),
            ("dissipation", r.dissipation),
            ("drift", r.drift),
            ("rhs", r.rhs),
            ("gap", r.gap),
        ] {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

impl From<&DecompositionReport> for Report {
    fn from(r: &DecompositionReport) -> Self {
        let mut out = Report::new();
        for (name, value) in [
            ("t", r.t),
            ("left-boundary", r.left_boundary),
            ("right-boundary", r.right_boundary),
            ("bond-product", r.bond_product),
            ("remainder", r.remainder),
            ("direct", r.direct),
            ("residual", r.residual),
        ] {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

impl From<&EntropyBoundReport> for Report {
    fn from(r: &EntropyBoundReport) -> Self {
        let mut out = Report::new();
        for (name, value) in
            [("entropy", r.entropy), ("bound", r.bound), ("margin", r.margin)]
        {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

impl From<&AdjointOne> for Report {
    fn from(r: &AdjointOne) -> Self {
        let mut out = Report::new();
        out.push("route-gap", r.route_gap).expect("static names are valid");
        out.push("states", r.values.len() as f64).expect("static names are valid");
        out
    }
}

impl From<&MGFReport> for Report {
    fn from(r: &MGFReport) -> Self {
        let mut out = Report::new();
        let lo = r.theta_grid.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.theta_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (name, value) in [
            ("order", r.order),
            ("margin", r.margin),
            ("theta-min", lo),
            ("theta-max", hi),
            ("grid-points", r.theta_grid.len() as f64),
        ] {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

impl From<&ProductBoundReport> for Report {
    fn from(r: &ProductBoundReport) -> Self {
        let mut out = Report::new();
        for (name, value) in [
            ("sigma1", r.sigma1),
            ("sigma2", r.sigma2),
            ("gamma", r.gamma),
            ("value", r.value),
            ("halfwidth", r.halfwidth),
            ("bound", r.bound),
            ("margin", r.margin),
        ] {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

impl From<&Estimate> for Report {
    fn from(e: &Estimate) -> Self {
        let mut out = Report::new();
        for (name, value) in
            [("mean", e.mean), ("stderr", e.stderr), ("replicas", e.replicas as f64)]
        {
            out.push(name, value).expect("static names are valid");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_get_and_render() {
        let mut r = Report::new();
        r.push("gap", -1.25e-6).unwrap();
        r.push("margin", 0.5).unwrap();
        assert_eq!(r.get("gap"), Some(-1.25e-6));
        assert_eq!(r.get("missing"), None);
        let text = r.to_string();
        assert_eq!(text, "gap = -0.00000125\nmargin = 0.5\n");
    }

    #[test]
    fn round_trips_awkward_values() {
        let mut r = Report::new();
        r.push("a", 0.1 + 0.2).unwrap();
        r.push("b", -3.123456789123456e-200).unwrap();
        r.push("c", 1e300).unwrap();
        r.push("d", 0.0).unwrap();
        let parsed = Report::parse(&r.to_string()).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn rejects_bad_names_and_values() {
        let mut r = Report::new();
        assert!(r.push("two words", 1.0).is_err());
        assert!(r.push("eq=sign", 1.0).is_err());
        assert!(r.push("", 1.0).is_err());
        assert!(r.push("nan", f64::NAN).is_err());
    }

    #[test]
    fn parse_flags_malformed_lines() {
        assert!(Report::parse("novalue\n").is_err());
        assert!(Report::parse("x = notafloat\n").is_err());
        let ok = Report::parse("\n  x = 3.5\n\n y=2\n").unwrap();
        assert_eq!(ok.get("x"), Some(3.5));
        assert_eq!(ok.get("y"), Some(2.0));
    }
}
