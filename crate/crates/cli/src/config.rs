//! TOML problem descriptions.
//!
//! ```toml
//! n = 2
//! phi = "sum"
//! weights = [0.5, 0.5]
//!
//! [outer]
//! family = "power"
//! p = 2.0
//!
//! [[inner]]
//! family = "gini"
//! r = 2.0
//! s = 1.0
//! box = [0.1, 10.0]
//! ```

use std::path::Path;

use meanineq::diagcalc::{InequalityProblem, PhiSpec};
use meanineq::means::{GiniParams, MeanSpec, Weights};
use meanineq::Interval;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_GRID: usize = 9;
pub const DEFAULT_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiKind {
    Sum,
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Power,
    Gini,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Overrides the problem-wide weights for this mean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub phi: PhiKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub outer: MeanConfig,
    pub inner: Vec<MeanConfig>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_grid() -> usize {
    DEFAULT_GRID
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

impl MeanConfig {
    pub fn params(&self) -> Result<GiniParams, CliError> {
        let pair = match (self.family, self.p, self.r, self.s) {
            (Family::Power, Some(p), None, None) => (p, 0.0),
            (Family::Gini, None, Some(r), Some(s)) => (r, s),
            (Family::Power, ..) => return Err(CliError::config("a power mean takes exactly the key `p`")),
            (Family::Gini, ..) => return Err(CliError::config("a gini mean takes exactly the keys `r` and `s`")),
        };
        Ok(GiniParams::new(pair.0, pair.1)?)
    }

    fn describe(&self) -> String {
        match self.family {
            Family::Power => format!("power(p = {})", self.p.unwrap_or(f64::NAN)),
            Family::Gini => format!("gini(r = {}, s = {})", self.r.unwrap_or(f64::NAN), self.s.unwrap_or(f64::NAN)),
        }
    }
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn with_overrides(mut self, seed: Option<u64>, grid: Option<usize>, budget: Option<usize>) -> Self {
        self.seed = seed.unwrap_or(self.seed);
        self.grid = grid.unwrap_or(self.grid);
        self.budget = budget.unwrap_or(self.budget);
        self
    }

    pub fn phi_spec(&self) -> PhiSpec {
        match self.phi {
            PhiKind::Sum => PhiSpec::Sum,
            PhiKind::Product => PhiSpec::Product,
        }
    }

    pub fn boxes(&self) -> Vec<Interval> {
        self.inner.iter().map(|m| m.interval.unwrap_or_else(Interval::positive)).collect()
    }

    fn weights_for(&self, mean: &MeanConfig) -> Result<Weights, CliError> {
        match mean.weights.as_ref().or(self.weights.as_ref()) {
            None => Ok(Weights::uniform(self.n)?),
            Some(w) if w.len() != self.n => {
                Err(CliError::config(format!("weight vector has {} entries, expected n = {}", w.len(), self.n)))
            }
            Some(w) => Ok(Weights::new(w.clone())?),
        }
    }

    /// Outer pair followed by the inner pairs.
    pub fn params(&self) -> Result<Vec<GiniParams>, CliError> {
        std::iter::once(&self.outer).chain(&self.inner).map(MeanConfig::params).collect()
    }

    /// All means carry the same weights and they are equal.
    pub fn equal_weights(&self) -> Result<bool, CliError> {
        let uniform = Weights::uniform(self.n)?;
        for m in std::iter::once(&self.outer).chain(&self.inner) {
            if self.weights_for(m)?.distance(&uniform) > 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn build(&self) -> Result<InequalityProblem, CliError> {
        if self.outer.interval.is_some() {
            return Err(CliError::config("the outer mean takes no `box`; its domain follows from Φ"));
        }
        if self.grid < 3 {
            return Err(CliError::config(format!("grid must be at least 3, got {}", self.grid)));
        }
        let mean = |m: &MeanConfig| -> Result<MeanSpec, CliError> { Ok(MeanSpec::gini(m.params()?, self.weights_for(m)?)) };
        let left = mean(&self.outer)?;
        let right = self.inner.iter().map(mean).collect::<Result<_, _>>()?;
        Ok(InequalityProblem::new(self.n, left, right, self.phi_spec(), self.boxes())?)
    }

    pub fn describe(&self) -> String {
        let inner: Vec<String> = self
            .inner
            .iter()
            .zip(self.boxes())
            .map(|(m, b)| format!("{} on {b}", m.describe()))
            .collect();
        format!(
            "n = {}, Φ = {}, outer {}, inner {}",
            self.n,
            match self.phi {
                PhiKind::Sum => "sum",
                PhiKind::Product => "product",
            },
            self.outer.describe(),
            inner.join(", ")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExitStatus;

    const MINKOWSKI: &str = r#"
n = 2
phi = "sum"

[outer]
family = "power"
p = 2.0

[[inner]]
family = "power"
p = 2.0

[[inner]]
family = "gini"
r = 2.0
s = 1.0
box = [0.5, inf]
"#;

    #[test]
    fn parses_and_builds() {
        let c = ProblemConfig::parse(MINKOWSKI).unwrap();
        assert_eq!(c.grid, DEFAULT_GRID);
        assert_eq!(c.boxes()[1], Interval::new(0.5, f64::INFINITY).unwrap());
        let p = c.build().unwrap();
        assert_eq!(p.k(), 2);
        assert!(c.equal_weights().unwrap());
    }

    #[test]
    fn rejects_unknown_and_inconsistent_fields() {
        let e = ProblemConfig::parse(&format!("{MINKOWSKI}\ncolour = 1\n")).unwrap_err();
        assert_eq!(e.status, ExitStatus::Config);
        let bad = MINKOWSKI.replace("p = 2.0\n\n[[inner]]\nfamily = \"gini\"", "p = 2.0\nr = 1.0\n\n[[inner]]\nfamily = \"gini\"");
        let c = ProblemConfig::parse(&bad).unwrap();
        assert_eq!(c.build().unwrap_err().status, ExitStatus::Config);
        let c = ProblemConfig::parse(&MINKOWSKI.replace("phi = \"sum\"", "phi = \"sum\"\nweights = [1.0]")).unwrap();
        assert_eq!(c.build().unwrap_err().status, ExitStatus::Config);
    }

    #[test]
    fn json_echo_round_trips_infinity() {
        let c = ProblemConfig::parse(MINKOWSKI).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains(r#""box":[0.5,"inf"]"#), "{json}");
        let back: ProblemConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
