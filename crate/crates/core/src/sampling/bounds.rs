use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box of the input space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Bounds("at least one dimension is required".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Bounds(format!(
                "{} lower values but {} upper values",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Bounds(format!(
                    "dimension {}: lower {lo} must be finite and below upper {hi}",
                    i + 1
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval in every one of `m` dimensions.
    pub fn uniform(m: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; m], vec![upper; m])
    }

    /// Parses `"lo:hi,lo:hi,..."`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for part in text.split(',') {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Error::Bounds(format!("expected 'lo:hi', got '{part}'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Bounds(format!("not a number: '{s}'")))
            };
            lower.push(parse(lo)?);
            upper.push(parse(hi)?);
        }
        Self::new(lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Maps `x` to the unit cube.
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| (v - self.lower[j]) / self.width(j))
            .collect()
    }

    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(j, v)| self.lower[j] + v * self.width(j))
            .collect()
    }

    /// Restriction to the given (0-based) dimensions.
    pub fn select(&self, dims: &[usize]) -> Result<Self> {
        let lower = dims.iter().map(|&j| self.lower.get(j).copied()).collect::<Option<Vec<_>>>();
        let upper = dims.iter().map(|&j| self.upper.get(j).copied()).collect::<Option<Vec<_>>>();
        match (lower, upper) {
            (Some(l), Some(u)) => Self::new(l, u),
            _ => Err(Error::Dimension(format!(
                "dimension index out of range for {}-dimensional bounds",
                self.dim()
            ))),
        }
    }

    pub fn to_spec_string(&self) -> String {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| format!("{l}:{u}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_and_empty() {
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![0.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
        assert!(Bounds::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn parses_spec_string() {
        let b = Bounds::parse("-3.5:3.5, 0:1").unwrap();
        assert_eq!(b.lower(), &[-3.5, 0.0]);
        assert_eq!(b.upper(), &[3.5, 1.0]);
        assert_eq!(Bounds::parse(&b.to_spec_string()).unwrap(), b);
        assert!(Bounds::parse("0-1").is_err());
    }

    #[test]
    fn normalize_roundtrip() {
        let b = Bounds::new(vec![-2.0, 10.0], vec![2.0, 20.0]).unwrap();
        let u = b.normalize(&[0.0, 12.5]);
        assert_eq!(u, vec![0.5, 0.25]);
        assert_eq!(b.denormalize(&u), vec![0.0, 12.5]);
    }
}
