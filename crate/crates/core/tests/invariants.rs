use meanineq::diagcalc::{InequalityProblem, PhiSpec};
use meanineq::global::{
    check_gsc0_hoelder, check_gsc0_minkowski, decide_hoelder_global, decide_minkowski_global, GlobalClass, MinkowskiGrid,
};
use meanineq::local::{decide_hoelder_local, decide_minkowski_local, gamma_at, GammaSpec, LocalClass};
use meanineq::means::{GiniParams, MeanSpec, Weights};
use meanineq::psd::symmetric_eigen;
use meanineq::search::{search_global, search_local};
use meanineq::Interval;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Debug)]
enum Family {
    Minkowski,
    Hoelder,
}

fn params(rng: &mut ChaCha8Rng, k: usize) -> Vec<GiniParams> {
    (0..=k).map(|_| GiniParams::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)).unwrap()).collect()
}

fn decide(family: Family, p: &[GiniParams]) -> GlobalClass {
    match family {
        Family::Minkowski => decide_minkowski_global(p).unwrap().class,
        Family::Hoelder => decide_hoelder_global(p).unwrap().class,
    }
}

/// Random tuples the decider accepts; Hölder tuples use the negated outer
/// convention of the decider.
fn holding_tuples(family: Family, count: usize, seed: u64) -> Vec<Vec<GiniParams>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..1_000_000 {
        if out.len() == count {
            break;
        }
        let k = rng.gen_range(2..=3);
        let p = params(&mut rng, k);
        if decide(family, &p) == GlobalClass::HoldsGlobal {
            out.push(p);
        }
    }
    assert_eq!(out.len(), count, "{family:?}: not enough holding tuples");
    out
}

fn problem(family: Family, p: &[GiniParams], n: usize, boxes: Vec<Interval>) -> InequalityProblem {
    let w = Weights::uniform(n).unwrap();
    let (outer, phi) = match family {
        Family::Minkowski => (p[0], PhiSpec::Sum),
        Family::Hoelder => (p[0].negated(), PhiSpec::Product),
    };
    let right = p[1..].iter().map(|q| MeanSpec::gini(*q, w.clone())).collect();
    InequalityProblem::new(n, MeanSpec::gini(outer, w.clone()), right, phi, boxes).unwrap()
}

#[test]
fn pointwise_checkers_pass_where_deciders_hold() {
    let grid = MinkowskiGrid::default();
    for p in holding_tuples(Family::Minkowski, 100, 1) {
        let v = check_gsc0_minkowski(&p, &grid).unwrap();
        assert_eq!(v.class, GlobalClass::HoldsGlobal, "{p:?}: {:?}", v.evidence);
    }
    for p in holding_tuples(Family::Hoelder, 100, 2) {
        let ratios = vec![Interval::positive().ratio_set().unwrap(); p.len() - 1];
        let v = check_gsc0_hoelder(&p, &ratios, 33).unwrap();
        assert_eq!(v.class, GlobalClass::HoldsGlobal, "{p:?}: {:?}", v.evidence);
    }
}

#[test]
fn global_holds_never_meets_local_failure() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut holds = 0;
    for i in 0..10_000 {
        let family = if i % 2 == 0 { Family::Minkowski } else { Family::Hoelder };
        let k = rng.gen_range(2..=3);
        let p = params(&mut rng, k);
        let boxes: Vec<Interval> = (0..k)
            .map(|_| {
                let lo = rng.gen_range(0.1..2.0);
                Interval::new(lo, lo * rng.gen_range(2.0..10.0)).unwrap()
            })
            .collect();
        let local = match family {
            Family::Minkowski => {
                let gammas: Vec<f64> = p.iter().map(|q| q.r + q.s - 1.0).collect();
                decide_minkowski_local(&gammas, &boxes).unwrap()
            }
            Family::Hoelder => decide_hoelder_local(&p.iter().map(|q| q.r + q.s).collect::<Vec<_>>()).unwrap(),
        };
        if decide(family, &p) == GlobalClass::HoldsGlobal {
            holds += 1;
            assert_ne!(local.class, LocalClass::NecessaryFails, "{family:?} {p:?} on {boxes:?}");
        }
    }
    assert!(holds > 100, "only {holds} holding tuples sampled");
}

#[test]
fn search_finds_nothing_where_inequality_holds() {
    let mut tuples: Vec<(Family, Vec<GiniParams>)> = Vec::new();
    tuples.extend(holding_tuples(Family::Minkowski, 50, 4).into_iter().map(|p| (Family::Minkowski, p)));
    tuples.extend(holding_tuples(Family::Hoelder, 50, 5).into_iter().map(|p| (Family::Hoelder, p)));
    for (i, (family, p)) in tuples.iter().enumerate() {
        let n = 2 + i % 3;
        let pr = problem(*family, p, n, vec![Interval::positive(); p.len() - 1]);
        let w = search_global(&pr, 100_000, i as u64).unwrap();
        assert!(w.is_none(), "{family:?} {p:?}: {w:?}");
    }
}

#[test]
fn local_search_confirms_clearly_indefinite_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tried = 0;
    let mut found = 0;
    while tried < 100 {
        let n = rng.gen_range(2..=4);
        let k = rng.gen_range(2..=3);
        let family = if rng.gen_bool(0.5) { Family::Minkowski } else { Family::Hoelder };
        let p = params(&mut rng, k);
        let boxes: Vec<Interval> = (0..k)
            .map(|_| {
                let lo = rng.gen_range(0.1..2.0);
                Interval::new(lo, lo * rng.gen_range(2.0..10.0)).unwrap()
            })
            .collect();
        let y: Vec<f64> = boxes.iter().map(|b| (b.lo() * b.hi()).sqrt()).collect();
        let pr = problem(family, &p, n, boxes.clone());
        let gamma = gamma_at(&GammaSpec::new(pr.clone()).unwrap(), &y).unwrap();
        if symmetric_eigen(&gamma).unwrap().relative_min() >= -0.1 {
            continue;
        }
        tried += 1;
        let edge = boxes.iter().zip(&y).map(|(b, v)| (v - b.lo()).min(b.hi() - v)).fold(f64::INFINITY, f64::min);
        if search_local(&pr, &y, (0.5 * edge).min(1e-2), 10_000).unwrap().is_some() {
            found += 1;
        }
    }
    assert!(found >= 95, "{found}/100");
}

#[test]
fn search_is_deterministic_for_a_seed() {
    let p = [GiniParams::power(0.5).unwrap(); 3];
    let pr = problem(Family::Minkowski, &p, 3, vec![Interval::positive(); 2]);
    let a = search_global(&pr, 20_000, 11).unwrap().expect("p = 1/2 fails");
    let b = search_global(&pr, 20_000, 11).unwrap().expect("p = 1/2 fails");
    assert_eq!(a, b);
    assert!(a.gap < -1e-9);
}
