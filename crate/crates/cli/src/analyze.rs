use std::time::Instant;

use meanineq::diagcalc::{deficiency_gradient_check, mean_common_weights, InequalityProblem};
use meanineq::global::{
    check_gsc0, check_gsc0_hoelder, check_gsc0_minkowski, decide_hoelder_global, decide_minkowski_2var,
    decide_minkowski_global, GlobalClass, MinkowskiGrid,
};
use meanineq::grid::axis_points;
use meanineq::local::{closed_form_decision, local_scan, GammaSpec, LocalClass};
use meanineq::means::{GiniParams, Weights};
use meanineq::search::{search_global, search_local, shrink, Counterexample};
use meanineq::Interval;

use crate::config::{PhiKind, ProblemConfig};
use crate::report::{DerivativeSection, FirstOrder, GlobalEntry, LocalSection, Report, Timings, Verdict, WitnessSection};
use crate::CliError;

pub const DERIVATIVE_TOLERANCE: f64 = 1e-5;
/// Evaluations spent near a local witness point before searching globally.
pub const LOCAL_SEARCH_BUDGET: usize = 10_000;
const WEIGHT_SAMPLES: usize = 64;
const PAIR_LIMIT: f64 = 1e6;

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Geometric midpoint of each box, unbounded ends capped at `1e3`.
pub fn center_point(boxes: &[Interval]) -> Vec<f64> {
    boxes.iter().map(|b| axis_points(b, 1, 0.0, 1e3)[0]).collect()
}

fn first_order(problem: &InequalityProblem) -> Result<FirstOrder, CliError> {
    let mut common: Option<Weights> = None;
    for (j, m) in std::iter::once(problem.left()).chain(problem.right()).enumerate() {
        let Some(w) = mean_common_weights(m, WEIGHT_SAMPLES)? else {
            return Ok(FirstOrder {
                proportional: false,
                common_weights: None,
                detail: format!("mean {j} has non-proportional weight functions; the first-order condition fails"),
            });
        };
        match &common {
            None => common = Some(w),
            Some(c) if c.distance(&w) <= 1e-9 => {}
            Some(c) => {
                return Ok(FirstOrder {
                    proportional: false,
                    common_weights: None,
                    detail: format!(
                        "mean {j} has weights {:?} but mean 0 has {:?}; the first-order condition fails",
                        w.as_slice(),
                        c.as_slice()
                    ),
                })
            }
        }
    }
    let w = common.expect("at least three means");
    Ok(FirstOrder {
        proportional: true,
        common_weights: Some(w.as_slice().to_vec()),
        detail: "all means share the same weights".into(),
    })
}

fn local_section(problem: &InequalityProblem, grid: usize) -> Result<LocalSection, CliError> {
    let closed = closed_form_decision(problem)?;
    let mut scan = local_scan(&GammaSpec::new(problem.clone())?, grid)?;
    scan.closed_form = None;
    let (method, class, agrees) = match &closed {
        Some(c) => ("closed_form", c.class, Some(!c.class.contradicts(scan.class))),
        None => ("grid_scan", scan.class, None),
    };
    Ok(LocalSection { method: method.into(), class, scan_resolution: grid, agrees, closed_form: closed, scan })
}

fn global_entries(config: &ProblemConfig, problem: &InequalityProblem, params: &[GiniParams]) -> Result<Vec<GlobalEntry>, CliError> {
    let mut out = Vec::new();
    let mut push = |name: &str, scope: &str, exact: bool, verdict| {
        out.push(GlobalEntry { name: name.into(), scope: scope.into(), exact, verdict });
    };
    match config.phi {
        PhiKind::Sum => {
            push(
                "Minkowski characterization for all n",
                "holds for every n and weight vector on the positive orthant, or fails for some n; the fixed-n condition is open",
                true,
                decide_minkowski_global(params)?,
            );
            if config.n == 2 && config.equal_weights()? {
                push(
                    "two-variable Minkowski characterization",
                    "n = 2 with equal weights on the positive orthant",
                    true,
                    decide_minkowski_2var(params)?,
                );
            }
            push(
                "pointwise Minkowski condition",
                "sufficient for every n and weight vector on the positive orthant",
                false,
                check_gsc0_minkowski(params, &MinkowskiGrid::default())?,
            );
        }
        PhiKind::Product => {
            let mut paper = params.to_vec();
            paper[0] = paper[0].negated();
            push(
                "Hölder characterization for all n",
                "holds for every n and weight vector on the positive orthant, or fails for some n",
                true,
                decide_hoelder_global(&paper)?,
            );
            let ratios = problem.boxes().iter().map(Interval::ratio_set).collect::<Result<Vec<_>, _>>()?;
            push(
                "pointwise Hölder condition",
                "sufficient for every n and weight vector on the configured boxes",
                false,
                check_gsc0_hoelder(&paper, &ratios, 33)?,
            );
        }
    }
    let k = problem.k() as f64;
    let resolution = config.grid.min(PAIR_LIMIT.powf(0.5 / k).floor() as usize).max(2);
    push(
        "pointwise sufficient condition",
        "sufficient on the configured boxes for this weight vector",
        false,
        check_gsc0(problem, resolution)?,
    );
    Ok(out)
}

fn edge_distance(boxes: &[Interval], y: &[f64]) -> f64 {
    boxes.iter().zip(y).map(|(b, &v)| (v - b.lo()).min(b.hi() - v)).fold(f64::INFINITY, f64::min)
}

fn find_witness(
    problem: &InequalityProblem,
    config: &ProblemConfig,
    near: Option<&[f64]>,
) -> Result<Option<WitnessSection>, CliError> {
    let mut found: Option<(String, Counterexample)> = None;
    if let Some(y) = near {
        let radius = (0.5 * edge_distance(problem.boxes(), y)).min(1e-2);
        let budget = config.budget.min(LOCAL_SEARCH_BUDGET);
        if let Some(w) = search_local(problem, y, radius, budget)? {
            found = Some((format!("local search near the diagonal point {y:?}"), w));
        }
    }
    if found.is_none() {
        if let Some(w) = search_global(problem, config.budget, config.seed)? {
            found = Some((format!("global search with seed {}", config.seed), w));
        }
    }
    let Some((source, w)) = found else { return Ok(None) };
    let shrunk = shrink(problem, &w)?;
    Ok(Some(WitnessSection { source, found: w, witness: shrunk }))
}

pub fn analyze(config: &ProblemConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let problem = config.build()?;
    let params = config.params()?;
    let center = center_point(problem.boxes());
    let mut notes = Vec::new();

    let first_order = first_order(&problem)?;
    let derivative_check = match deficiency_gradient_check(&problem, &center) {
        Ok(report) => Some(DerivativeSection {
            tolerance: DERIVATIVE_TOLERANCE,
            passed: report.max_rel() <= DERIVATIVE_TOLERANCE,
            report,
        }),
        Err(e) => {
            notes.push(format!("derivative check skipped: {e}"));
            None
        }
    };

    let t = Instant::now();
    let local = if first_order.proportional { Some(local_section(&problem, config.grid)?) } else { None };
    let local_ms = elapsed_ms(t);

    let t = Instant::now();
    let global = if first_order.proportional { global_entries(config, &problem, &params)? } else { Vec::new() };
    let global_ms = elapsed_ms(t);

    let exact_holds = global.iter().find(|g| g.exact && g.verdict.holds());
    let certified = exact_holds.or_else(|| global.iter().find(|g| g.verdict.holds()));
    let local_fails = local.as_ref().is_some_and(|l| l.class == LocalClass::NecessaryFails);
    let any_fails = global.iter().any(|g| g.verdict.class == GlobalClass::FailsGlobal);
    let wants_search =
        exact_holds.is_none() && (!first_order.proportional || local_fails || any_fails || certified.is_none());

    let t = Instant::now();
    let counterexample = if wants_search {
        let near = match &local {
            Some(l) => l.witness_point().map(<[f64]>::to_vec),
            None => Some(center.clone()),
        };
        find_witness(&problem, config, near.as_deref())?
    } else {
        None
    };
    let search_ms = elapsed_ms(t);

    if config.phi == PhiKind::Sum && config.n > 2 && global.first().is_some_and(|g| !g.verdict.holds()) {
        notes.push("the all-n Minkowski characterization fails, but no characterization for a fixed n is known".into());
    }
    if local.as_ref().is_some_and(|l| l.agrees == Some(false)) {
        notes.push("closed-form local decision and grid scan contradict each other".into());
    }

    let (verdict, basis) = match (&counterexample, certified) {
        (Some(c), _) => (Verdict::Fails, format!("counterexample from {}", c.source)),
        (None, Some(g)) if g.exact => (Verdict::Holds, g.name.clone()),
        (None, Some(g)) => (Verdict::Holds, format!("{}, grid-certified", g.name)),
        (None, None) => (Verdict::Inconclusive, inconclusive_basis(&first_order, local_fails, any_fails)),
    };

    Ok(Report {
        config: config.clone(),
        verdict,
        basis,
        first_order,
        derivative_check,
        local,
        global,
        counterexample,
        notes,
        timings: Timings { local_ms, global_ms, search_ms, total_ms: elapsed_ms(start) },
    })
}

fn inconclusive_basis(first_order: &FirstOrder, local_fails: bool, any_fails: bool) -> String {
    let mut why = Vec::new();
    if !first_order.proportional {
        why.push("the first-order condition fails");
    }
    if local_fails {
        why.push("the local necessary condition fails");
    }
    if any_fails {
        why.push("a global characterization fails for some n");
    }
    if why.is_empty() {
        "no sufficient condition could be certified and search found no counterexample".into()
    } else {
        format!("{}, but search found no counterexample within budget", why.join("; "))
    }
}
