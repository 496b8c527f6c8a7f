use lgfront::analysis::{comparison_check, RunView, Verdict};
use lgfront::io::cli::format_grid;
use lgfront::io::{parse_config, serialize_config};
use lgfront::model::{validate_params, ModelParams, PredatorProfile, PreyProfile, ValidatedModel};
use lgfront::solver::{simulate, Discretization};
use lgfront::sweep::{bisect_beta, run_grid, Axis, BisectOptions, GridOptions, Param};
use proptest::prelude::*;

fn model(h0: f64, beta: f64) -> ValidatedModel {
    validate_params(
        &ModelParams::leslie_gower(1.0, 0.5, 1.0, 1.0, beta, h0),
        &PreyProfile::Constant(1.0),
        &PredatorProfile::Cosine { amplitude: 1.0 },
    )
    .unwrap()
}

fn coarse(t_end: f64) -> Discretization {
    let mut d = Discretization::with_resolution(1.0, 12.0, 40);
    d.t_end = t_end;
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        a in 0.1f64..5.0,
        b in 0.01f64..2.0,
        d in 0.1f64..3.0,
        mu in 0.1f64..3.0,
        beta in 1e-4f64..20.0,
        h0 in 0.1f64..3.0,
        ht in proptest::option::of(0.1f64..3.0),
        amp in 0.1f64..2.0,
        ny in 8usize..800,
        t_end in 0.0f64..500.0,
        tol_span in 0.0f64..0.5,
        axes in proptest::option::of(proptest::collection::vec(1e-3f64..10.0, 1..5)),
    ) {
        let mut text = format!(
            "a = {a}\nb = {b}\nd = {d}\nmu = {mu}\nbeta = {beta}\nh0 = {h0}\n\
             [init]\nv0_amplitude = {amp}\n[disc]\nny = {ny}\nt_end = {t_end}\n\
             [criteria]\ntol_span = {tol_span}\n"
        );
        if let Some(m) = ht {
            text.push_str(&format!("[kernel]\ntype = \"holling_tanner\"\nm = {m}\n"));
        }
        if let Some(values) = &axes {
            text.push_str(&format!("[sweep]\nbeta = {values:?}\n"));
        }
        let cfg = parse_config(&text).unwrap();
        let written = serialize_config(&cfg);
        let again = parse_config(&written).unwrap();
        prop_assert_eq!(&again, &cfg);
        prop_assert_eq!(serialize_config(&again), written);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn larger_predator_keeps_habitat_nested(
        factor in 1.1f64..2.0,
        h0 in 0.5f64..1.5,
        beta in 0.2f64..3.0,
    ) {
        let params = ModelParams::leslie_gower(1.0, 0.5, 1.0, 1.0, beta, h0);
        let make = |amp: f64| {
            validate_params(&params, &PreyProfile::Constant(1.0), &PredatorProfile::Cosine { amplitude: amp })
                .unwrap()
        };
        let (small, big) = (make(1.0), make(factor));
        let d = coarse(4.0);
        let os = simulate(&small, &d, 0.25).unwrap();
        let ob = simulate(&big, &d, 0.25).unwrap();
        let r = comparison_check(
            RunView { model: &small, disc: &d, series: &os.series },
            RunView { model: &big, disc: &d, series: &ob.series },
        )
        .unwrap();
        prop_assert!(r.nested, "{r:?}");
    }
}

#[test]
fn grid_output_is_identical_sequential_and_parallel() {
    let base = model(0.5, 1.0);
    let axes = [
        Axis::new(Param::H0, vec![0.5, 2.0]),
        Axis::new(Param::Beta, vec![0.05, 0.5, 5.0]),
    ];
    let d = coarse(30.0);
    let seq = GridOptions { parallel: false, ..GridOptions::default() };
    let par = GridOptions { parallel: true, ..GridOptions::default() };
    let a = run_grid(&axes, &base, &d, &seq).unwrap();
    let b = run_grid(&axes, &base, &d, &par).unwrap();
    assert_eq!(format_grid(&a), format_grid(&b));
    assert_eq!(a, b);
    // supercritical half-length spreads at every beta
    for row in &a.rows[3..] {
        assert_eq!(row.outcome.as_ref().unwrap().classification.verdict, Verdict::Spreading);
    }
    assert!(a.anomalies.is_empty());
}

#[test]
fn bracket_invariant_holds_after_every_probe() {
    let m = model(0.5, 1.0);
    let d = coarse(80.0);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut checked = 0;
    let r = bisect_beta(&m, &d, &BisectOptions::new(0.5, 4.0, 0.2), |p| {
        match p.verdict {
            Verdict::Vanishing => lo = lo.max(p.beta),
            Verdict::Spreading => hi = hi.min(p.beta),
            Verdict::Undecided => {}
        }
        assert!(lo < hi, "Vanishing at {lo} above Spreading at {hi}");
        checked += 1;
    })
    .unwrap();
    assert_eq!(checked, r.runs);
    assert!(r.width <= 0.2 && r.lo == lo && r.hi == hi);
}

#[test]
fn lower_endpoint_expands_downward() {
    // lo0 already spreads: the search moves lo down and keeps lo0 as hi
    let m = model(0.5, 1.0);
    let d = coarse(80.0);
    let r = bisect_beta(&m, &d, &BisectOptions::new(3.0, 6.0, 10.0), |_| {}).unwrap();
    assert!(r.lo < 3.0);
    assert_eq!(r.hi, 3.0);
    assert_eq!(r.history[0].verdict, Verdict::Spreading);
}

#[test]
fn wide_tolerance_returns_initial_bracket() {
    let m = model(0.5, 1.0);
    let d = coarse(80.0);
    let r = bisect_beta(&m, &d, &BisectOptions::new(0.2, 6.0, 10.0), |_| {}).unwrap();
    assert_eq!((r.lo, r.hi, r.runs), (0.2, 6.0, 2));
}

#[test]
fn missing_bracket_is_reported() {
    // a horizon too short for anything to decide
    let m = model(0.5, 1.0);
    let d = coarse(0.0);
    let mut opts = BisectOptions::new(0.5, 1.0, 0.1);
    opts.max_expansions = 2;
    assert!(matches!(
        bisect_beta(&m, &d, &opts, |_| {}),
        Err(lgfront::sweep::SweepError::NoBracket { .. })
    ));
}

fn supersolution_run(beta: f64) -> lgfront::analysis::SupersolutionReport {
    use lgfront::analysis::{minimal_amplitude, supersolution_check, SupersolutionWitness};
    let m = model(1.0, beta);
    let mut d = Discretization::with_resolution(1.0, 15.0, 100);
    d.t_end = 100.0;
    let k = minimal_amplitude(&m, &d, 0.05);
    let w = SupersolutionWitness::new(0.05, 0.05, k, 1.0).unwrap();
    supersolution_check(&m, &d, &w, 100.0, 0.5).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    // the witness's own smallness bound on beta
    #[test]
    fn witness_dominates_for_admissible_beta(frac in 0.01f64..=1.0) {
        let beta0 = lgfront::analysis::SupersolutionWitness::new(0.05, 0.05, 1.0, 1.0)
            .unwrap()
            .beta_bound();
        let r = supersolution_run(frac * beta0);
        prop_assert!(r.theory_conditions_hold);
        prop_assert!(r.dominated && r.fronts_confined, "{:?}", (r.min_margin, r.min_front_margin));
    }
}

#[test]
fn domination_is_not_implied_by_vanishing() {
    // beta = 0.2 still vanishes for h0 = 1 (the threshold is near 0.38), but
    // the habitat outgrows the witness's limit (1 + 2 eps) h0
    let r = supersolution_run(0.2);
    assert!(!r.theory_conditions_hold);
    assert!(!r.fronts_confined);
    assert!(r.series.last().unwrap().span < std::f64::consts::PI);
}
