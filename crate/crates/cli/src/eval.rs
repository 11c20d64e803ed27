use std::collections::BTreeMap;

use clap::ValueEnum;
use meanineq::local::{gamma_at, GammaSpec};
use meanineq::means::{chi, gini_mean, power_mean, GiniParams, Weights};
use meanineq::Matrix;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::{sig6, CliError, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// `G_{r,s;w}(x)`; keys r, s, x and optional w.
    Gini,
    /// `H_{p;w}(x)`; keys p, x and optional w.
    Power,
    /// `χ_{r,s}(t)`; keys r, s, t.
    Chi,
    /// `Γ(y)` for the config problem; key y.
    Gamma,
    /// Left side at the matrix x for the config problem.
    Lhs,
    /// Right side at the matrix x.
    Rhs,
    /// Right side minus left side at the matrix x.
    Deficiency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Scalar(f64),
    Matrix(Matrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub quantity: Quantity,
    pub value: Value,
}

struct Args(BTreeMap<String, String>);

impl Args {
    fn parse(raw: &[String], allowed: &[&str]) -> Result<Args, CliError> {
        let mut map = BTreeMap::new();
        for item in raw {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("expected key=value, got {item:?}")))?;
            if !allowed.contains(&k) {
                return Err(CliError::config(format!("unknown key {k:?}; expected one of {}", allowed.join(", "))));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::config(format!("key {k:?} given twice")));
            }
        }
        Ok(Args(map))
    }

    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.0.get(key).map(String::as_str).ok_or_else(|| CliError::config(format!("missing key {key:?}")))
    }

    fn scalar(&self, key: &str) -> Result<f64, CliError> {
        parse_number(self.raw(key)?)
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>, CliError> {
        parse_vector(self.raw(key)?)
    }

    fn optional_vector(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.0.get(key).map(|v| parse_vector(v)).transpose()
    }

    fn matrix(&self, key: &str) -> Result<Matrix, CliError> {
        let rows = self.raw(key)?.split(';').map(parse_vector).collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_rows(rows)?)
    }
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    s.trim().parse().map_err(|_| CliError::config(format!("not a number: {s:?}")))
}

fn parse_vector(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(parse_number).collect()
}

fn weights(w: Option<Vec<f64>>, n: usize) -> Result<Weights, CliError> {
    match w {
        Some(w) if w.len() != n => Err(CliError::config(format!("{} weights for {n} values", w.len()))),
        Some(w) => Ok(Weights::new(w)?),
        None => Ok(Weights::uniform(n)?),
    }
}

fn needs(config: Option<&ProblemConfig>) -> Result<&ProblemConfig, CliError> {
    config.ok_or_else(|| CliError::config("this quantity needs --config <path>"))
}

pub fn evaluate(quantity: Quantity, raw: &[String], config: Option<&ProblemConfig>) -> Result<EvalOutput, CliError> {
    let value = match quantity {
        Quantity::Gini => {
            let a = Args::parse(raw, &["r", "s", "w", "x"])?;
            let x = a.vector("x")?;
            let w = weights(a.optional_vector("w")?, x.len())?;
            Value::Scalar(gini_mean(GiniParams::new(a.scalar("r")?, a.scalar("s")?)?, &w, &x)?)
        }
        Quantity::Power => {
            let a = Args::parse(raw, &["p", "w", "x"])?;
            let x = a.vector("x")?;
            let w = weights(a.optional_vector("w")?, x.len())?;
            Value::Scalar(power_mean(a.scalar("p")?, &w, &x)?)
        }
        Quantity::Chi => {
            let a = Args::parse(raw, &["r", "s", "t"])?;
            Value::Scalar(chi(GiniParams::new(a.scalar("r")?, a.scalar("s")?)?, a.scalar("t")?)?)
        }
        Quantity::Gamma => {
            let a = Args::parse(raw, &["y"])?;
            let spec = GammaSpec::new(needs(config)?.build()?)?;
            Value::Matrix(gamma_at(&spec, &a.vector("y")?)?)
        }
        Quantity::Lhs | Quantity::Rhs | Quantity::Deficiency => {
            let a = Args::parse(raw, &["x"])?;
            let e = needs(config)?.build()?.evaluate(&a.matrix("x")?)?;
            Value::Scalar(match quantity {
                Quantity::Lhs => e.lhs,
                Quantity::Rhs => e.rhs,
                _ => e.gap,
            })
        }
    };
    let finite = match &value {
        Value::Scalar(v) => v.is_finite(),
        Value::Matrix(m) => m.as_slice().iter().all(|v| v.is_finite()),
    };
    if !finite {
        return Err(CliError::domain("the result is not a finite number"));
    }
    Ok(EvalOutput { quantity, value })
}

pub fn render(out: &EvalOutput, format: Format) -> String {
    match format {
        Format::Machine => serde_json::to_string(out).expect("finite values serialize") + "\n",
        Format::Human => match &out.value {
            Value::Scalar(v) => format!("{}\n", sig6(*v)),
            Value::Matrix(m) => {
                let rows: Vec<String> = m
                    .to_rows()
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(|v| sig6(*v)).collect::<Vec<_>>().join(", ")))
                    .collect();
                format!("[{}]\n", rows.join(", "))
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExitStatus;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn scalar_quantities() {
        let out = evaluate(Quantity::Gini, &args("r=2 s=1 w=0.5,0.5 x=1,3"), None).unwrap();
        assert_eq!(render(&out, Format::Human), "2.5\n");
        let out = evaluate(Quantity::Chi, &args("r=2 s=1 t=1"), None).unwrap();
        assert_eq!(render(&out, Format::Human), "0\n");
        assert_eq!(render(&out, Format::Machine), "{\"quantity\":\"chi\",\"value\":0.0}\n");
    }

    #[test]
    fn bad_input() {
        assert_eq!(evaluate(Quantity::Gini, &args("r=2 s=1 x=1,-3"), None).unwrap_err().status, ExitStatus::Domain);
        assert_eq!(evaluate(Quantity::Gini, &args("r=2 x=1,3"), None).unwrap_err().status, ExitStatus::Config);
        assert_eq!(evaluate(Quantity::Chi, &args("r=2 s=1 t=1 q=3"), None).unwrap_err().status, ExitStatus::Config);
        assert_eq!(evaluate(Quantity::Gamma, &args("y=1,1"), None).unwrap_err().status, ExitStatus::Config);
    }
}
