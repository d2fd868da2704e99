use std::sync::Arc;

use composite_bo::acquisition::{AcquisitionSpec, SearchBudget};
use composite_bo::bench::get_benchmark;
use composite_bo::bo::{incumbent_curve, initial_design, run, BoConfig, InitialDesign, Observation, Oracle, TimingColumn, Variant};
use composite_bo::gp::{fit, FitOptions, KernelFamily, NoiseMode};
use composite_bo::{BoxDomain, Dataset, Error};

fn quick(variant: Variant, iterations: usize, seed: u64) -> BoConfig {
    BoConfig {
        search: SearchBudget {
            restarts: 8,
            ..SearchBudget::default()
        },
        fit_restarts: 3,
        ..BoConfig::new(variant, iterations).with_seed(seed)
    }
}

#[test]
fn zero_budget_records_only_the_start() {
    let b = get_benchmark("penalty-quadratic").unwrap();
    let x0 = vec![0.25, -0.5];
    for variant in Variant::ALL {
        let oracle = b.oracle();
        let cfg = quick(variant, 0, 3).with_initial_design(InitialDesign::SinglePoint { x: Some(x0.clone()) });
        let obj = variant.is_composite().then(|| b.objective.clone());
        let oracle = if variant.is_composite() {
            oracle
        } else {
            let b = b.clone();
            Oracle::black_box(move |x| Ok(b.evaluate(x)?.1))
        };
        let trace = run(&oracle, obj, &b.domain, &cfg).unwrap();
        assert_eq!(trace.records.len(), 1);
        let inc = trace.incumbent().unwrap();
        assert_eq!(inc.x, x0);
        assert_eq!(inc.f, b.evaluate(&x0).unwrap().1);
        assert_eq!(oracle.eval_count(), 1);
    }
}

#[test]
fn bois_finds_the_sphere_optimum() {
    let b = get_benchmark("sphere-composite").unwrap();
    let oracle = b.oracle();
    let cfg = quick(Variant::Bois, 30, 11);
    let trace = run(&oracle, Some(b.objective.clone()), &b.domain, &cfg).unwrap();
    let best = trace.incumbent().unwrap().f;
    assert!(best <= 1e-2, "best {best}");
    assert_eq!(oracle.eval_count(), 31);
    assert_eq!(trace.records.len(), 31);
}

#[test]
fn runs_are_reproducible() {
    let b = get_benchmark("exp-composite").unwrap();
    for variant in [Variant::Mcbo, Variant::Bois] {
        let cfg = quick(variant, 6, 21);
        let one = run(&b.oracle(), Some(b.objective.clone()), &b.domain, &cfg).unwrap();
        let two = run(&b.oracle(), Some(b.objective.clone()), &b.domain, &cfg).unwrap();
        assert_eq!(one.to_csv(TimingColumn::Zeroed), two.to_csv(TimingColumn::Zeroed));
    }
}

#[test]
fn trace_bookkeeping_holds() {
    let b = get_benchmark("penalty-quadratic").unwrap();
    let oracle = b.oracle();
    let cfg = quick(Variant::Mcbo, 5, 2).with_initial_design(InitialDesign::Random { n: 3 });
    let trace = run(&oracle, Some(b.objective.clone()), &b.domain, &cfg).unwrap();
    assert_eq!(trace.records.len(), 8);
    assert_eq!(oracle.eval_count(), 8);
    let curve = incumbent_curve(&trace);
    assert_eq!(curve.len(), trace.records.len());
    for (i, r) in trace.records.iter().enumerate() {
        assert!(r.wallclock_ms > 0.0);
        assert_eq!(curve[i].1, r.best_f);
        assert!(b.domain.contains(&r.x));
        let (y, f) = b.evaluate(&r.x).unwrap();
        assert_eq!(r.y, y);
        assert!((r.f_obs - (b.objective.g(&r.x) + b.objective.h(&r.x, &r.y))).abs() <= 1e-9);
        assert_eq!(r.f_obs, f);
        assert_eq!(r.m_f.is_some(), i >= 3);
        if i > 0 {
            assert!(r.best_f <= trace.records[i - 1].best_f);
        }
    }
}

#[test]
fn objective_presence_is_checked_per_variant() {
    let b = get_benchmark("sphere-composite").unwrap();
    let o = b.oracle();
    let err = |r: composite_bo::Result<_>| matches!(r, Err(Error::Configuration(_)));
    assert!(err(run(&o, Some(b.objective.clone()), &b.domain, &quick(Variant::Sbo, 1, 0))));
    assert!(err(run(&o, None, &b.domain, &quick(Variant::Mcbo, 1, 0))));
    assert!(err(run(&o, None, &b.domain, &quick(Variant::Bois, 1, 0))));
    assert_eq!(o.eval_count(), 0);
}

#[test]
fn oracle_failure_truncates_the_trace() {
    let b = get_benchmark("penalty-quadratic").unwrap();
    let inner = b.clone();
    let calls = std::sync::atomic::AtomicUsize::new(0);
    let oracle = Oracle::from_fn(2, move |x| {
        if calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) == 3 {
            return Err(Error::Evaluation { message: "solver diverged".into(), at: x.to_vec() });
        }
        let (y, f) = inner.evaluate(x)?;
        Ok(Observation { y, f })
    });
    let trace = run(&oracle, Some(b.objective.clone()), &b.domain, &quick(Variant::Bois, 10, 1)).unwrap();
    assert_eq!(trace.records.len(), 3);
    assert!(trace.error.as_deref().unwrap().contains("solver diverged"));
    assert_eq!(oracle.eval_count(), 4);
}

#[test]
fn sbo_ignores_the_output_channel() {
    let b = get_benchmark("penalty-quadratic").unwrap();
    let honest = b.clone();
    let poisoned = b.clone();
    let a = Oracle::from_fn(2, move |x| {
        let (y, f) = honest.evaluate(x)?;
        Ok(Observation { y, f })
    });
    let p = Oracle::from_fn(2, move |x| {
        let (_, f) = poisoned.evaluate(x)?;
        Ok(Observation { y: vec![f64::NAN, 1e300], f })
    });
    let cfg = quick(Variant::Sbo, 6, 8);
    let ta = run(&a, None, &b.domain, &cfg).unwrap();
    let tp = run(&p, None, &b.domain, &cfg).unwrap();
    let xs = |t: &composite_bo::bo::RunTrace| t.records.iter().map(|r| r.x.clone()).collect::<Vec<_>>();
    assert_eq!(xs(&ta), xs(&tp));
    assert!(tp.error.is_none());
}

#[test]
fn greedy_run_started_at_the_optimum_keeps_it() {
    let d = BoxDomain::cube(2, -1.0, 1.0).unwrap();
    let oracle = Oracle::black_box(|x: &[f64]| Ok((x[0] - 0.2).powi(2) + (x[1] + 0.4).powi(2)));
    let cfg = BoConfig {
        acquisition: AcquisitionSpec {
            kappa: 0.0,
            ..AcquisitionSpec::default()
        },
        noise: NoiseMode::Fixed(1e-8),
        ..quick(Variant::Sbo, 8, 5).with_initial_design(InitialDesign::SinglePoint { x: Some(vec![0.2, -0.4]) })
    };
    let trace = run(&oracle, None, &d, &cfg).unwrap();
    assert!(trace.records.iter().all(|r| r.best_f == 0.0));
    let data = Dataset::scalar(
        trace.records.iter().map(|r| r.x.clone()).collect(),
        trace.records.iter().map(|r| r.f_obs).collect(),
    )
    .unwrap();
    let opts = FitOptions {
        noise: NoiseMode::Fixed(1e-8),
        domain: Some(d.clone()),
        ..FitOptions::default()
    };
    let model = fit(&data, KernelFamily::default(), &opts).unwrap();
    let (m, _) = model.predict(&[0.2, -0.4]).unwrap();
    let spread = trace.records.iter().map(|r| r.f_obs).fold(0.0, f64::max);
    assert!(m.abs() <= 1e-3 * spread.max(1.0), "mean at incumbent {m}");
}

#[test]
fn incumbent_curve_is_a_running_minimum() {
    let obs = Arc::new(std::sync::Mutex::new(vec![3.0, 1.0, 2.0].into_iter()));
    let d = BoxDomain::cube(1, 0.0, 1.0).unwrap();
    let oracle = Oracle::black_box(move |_x: &[f64]| Ok(obs.lock().unwrap().next().unwrap_or(5.0)));
    let cfg = quick(Variant::Sbo, 2, 0);
    let trace = run(&oracle, None, &d, &cfg).unwrap();
    let bests: Vec<f64> = incumbent_curve(&trace).into_iter().map(|(_, b)| b).collect();
    assert_eq!(bests, vec![3.0, 1.0, 1.0]);
}

#[test]
fn grid_design_spans_the_box() {
    let b = get_benchmark("flowsheet").unwrap();
    let pts = initial_design(&b.domain, &InitialDesign::Grid { levels: 3 }, 0).unwrap();
    assert_eq!(pts.len(), 243);
    assert_eq!(pts[0], b.domain.lower());
    assert_eq!(pts[242], b.domain.upper());
    let mut uniq = pts.clone();
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    uniq.dedup();
    assert_eq!(uniq.len(), 243);

    let unit = BoxDomain::cube(1, 0.0, 1.0).unwrap();
    let two = initial_design(&unit, &InitialDesign::Grid { levels: 2 }, 0).unwrap();
    assert_eq!(two, vec![vec![0.0], vec![1.0]]);

    let huge = BoxDomain::cube(17, 0.0, 1.0).unwrap();
    assert!(matches!(
        initial_design(&huge, &InitialDesign::Grid { levels: 2 }, 0),
        Err(Error::Configuration(_))
    ));
}

#[test]
fn random_design_is_reproducible_and_inside() {
    let d = BoxDomain::new(vec![-2.0, 10.0], vec![-1.0, 30.0]).unwrap();
    let a = initial_design(&d, &InitialDesign::Random { n: 10 }, 123).unwrap();
    assert_eq!(a, initial_design(&d, &InitialDesign::Random { n: 10 }, 123).unwrap());
    assert_ne!(a, initial_design(&d, &InitialDesign::Random { n: 10 }, 124).unwrap());
    assert!(a.iter().all(|p| d.contains(p)));
}
