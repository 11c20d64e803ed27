use meanineq::diagcalc::GradientCheckReport;
use meanineq::global::{Evidence, GlobalClass, GlobalVerdict};
use meanineq::local::{LocalClass, LocalVerdict};
use meanineq::search::Counterexample;
use meanineq::Matrix;
use serde::{Deserialize, Serialize};

use crate::config::ProblemConfig;
use crate::{sig6, ExitStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn exit_status(self) -> ExitStatus {
        match self {
            Verdict::Holds => ExitStatus::Holds,
            Verdict::Fails => ExitStatus::FailsWithWitness,
            Verdict::Inconclusive => ExitStatus::Inconclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstOrder {
    pub proportional: bool,
    pub common_weights: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSection {
    pub tolerance: f64,
    pub passed: bool,
    pub report: GradientCheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSection {
    /// `closed_form` or `grid_scan`.
    pub method: String,
    pub class: LocalClass,
    pub scan_resolution: usize,
    /// Whether the closed form and the scan avoid contradicting each other.
    pub agrees: Option<bool>,
    pub closed_form: Option<LocalVerdict>,
    pub scan: LocalVerdict,
}

impl LocalSection {
    pub fn witness_point(&self) -> Option<&[f64]> {
        if self.class != LocalClass::NecessaryFails {
            return None;
        }
        let decided = match &self.closed_form {
            Some(c) if c.class == LocalClass::NecessaryFails => c,
            _ => &self.scan,
        };
        decided.witness.as_ref().map(|w| w.point.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalEntry {
    pub name: String,
    pub scope: String,
    /// Exact characterizations are unconditional; checkers are grid-certified.
    pub exact: bool,
    pub verdict: GlobalVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSection {
    pub source: String,
    /// The witness as found by the search.
    pub found: Counterexample,
    /// `found` moved toward the diagonal while it keeps violating.
    pub witness: Counterexample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub local_ms: f64,
    pub global_ms: f64,
    pub search_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ProblemConfig,
    pub verdict: Verdict,
    pub basis: String,
    pub first_order: FirstOrder,
    pub derivative_check: Option<DerivativeSection>,
    pub local: Option<LocalSection>,
    pub global: Vec<GlobalEntry>,
    pub counterexample: Option<WitnessSection>,
    pub notes: Vec<String>,
    pub timings: Timings,
}

pub fn to_json(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report values are finite") + "\n"
}

fn vector(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(", "))
}

fn matrix(m: &Matrix) -> String {
    format!("[{}]", m.to_rows().iter().map(|r| vector(r)).collect::<Vec<_>>().join(", "))
}

fn class_name(c: GlobalClass) -> &'static str {
    match c {
        GlobalClass::HoldsGlobal => "holds",
        GlobalClass::FailsGlobal => "fails",
        GlobalClass::Inconclusive => "inconclusive",
    }
}

fn evidence(e: &Evidence) -> String {
    match e {
        Evidence::Characterization { detail, .. } => detail.clone(),
        Evidence::GridCertified { condition, resolution, probes } => {
            format!("{condition}: grid-certified at resolution {resolution} ({probes} probes)")
        }
        Evidence::ClauseFails { clauses, detail, .. } => format!("clause {} fails: {detail}", clauses.join(", ")),
        Evidence::FailingProbe { condition, point, lhs, rhs, .. } => {
            format!("{condition}: fails at {} with {} > {}", vector(point), sig6(*lhs), sig6(*rhs))
        }
    }
}

pub fn render_human(r: &Report) -> String {
    let mut out = Vec::new();
    out.push(format!("problem: {}", r.config.describe()));
    out.push(format!(
        "verdict: {} ({})",
        match r.verdict {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        },
        r.basis
    ));
    out.push(match &r.first_order.common_weights {
        Some(w) => format!("first order: weights proportional, common weights {}", vector(w)),
        None => format!("first order: {}", r.first_order.detail),
    });
    if let Some(d) = &r.derivative_check {
        out.push(format!(
            "derivatives: max relative deviation {} at y = {} (tolerance {}): {}",
            sig6(d.report.max_rel()),
            vector(&d.report.point),
            sig6(d.tolerance),
            if d.passed { "pass" } else { "FAIL" }
        ));
    }
    if let Some(l) = &r.local {
        let agreement = match l.agrees {
            Some(true) => format!("; grid scan at resolution {} agrees", l.scan_resolution),
            Some(false) => format!("; grid scan at resolution {} DISAGREES", l.scan_resolution),
            None => String::new(),
        };
        out.push(format!("local: {:?} ({}{agreement})", l.class, l.method.replace('_', " ")));
        let summary = l.closed_form.as_ref().map_or(&l.scan.summary, |c| &c.summary);
        out.push(format!("  {summary}"));
    }
    if !r.global.is_empty() {
        out.push("global:".into());
        for g in &r.global {
            out.push(format!("  {}: {} ({})", g.name, class_name(g.verdict.class), g.scope));
            out.push(format!("    {}", evidence(&g.verdict.evidence)));
        }
    }
    match &r.counterexample {
        None => out.push("counterexample: none".into()),
        Some(c) => {
            let w = &c.witness;
            out.push(format!(
                "counterexample ({}): lhs {}, rhs {}, gap {}, distance to diagonal {}",
                c.source,
                sig6(w.lhs),
                sig6(w.rhs),
                sig6(w.gap),
                sig6(w.distance_to_diagonal)
            ));
            out.push(format!("  x = {}", matrix(&w.x)));
            let f = &c.found;
            out.push(format!(
                "  before shrinking: gap {}, distance to diagonal {}, x = {}",
                sig6(f.gap),
                sig6(f.distance_to_diagonal),
                matrix(&f.x)
            ));
        }
    }
    for n in &r.notes {
        out.push(format!("note: {n}"));
    }
    out.push(format!("time: {} ms", sig6(r.timings.total_ms)));
    out.join("\n") + "\n"
}
