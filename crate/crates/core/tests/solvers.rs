use std::sync::Arc;

use fracadi_core::adi2d::{solve2d_with, AdiStepper};
use fracadi_core::analysis::{convergence_study, observed_orders, DtRule, StudyParams};
use fracadi_core::problems::{self, DEFAULT_ORACLE_TOL};
use fracadi_core::solver1d::solve1d_with;
use fracadi_core::{
    solve1d, AdiOptions, Execution, FracError, FractionalOrder, Problem1D, Problem2D, Source1D, SweepOrder,
};

fn ord(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn variable_2d() -> Problem2D {
    let mut p = Problem2D::zero(ord(1.7), ord(1.3));
    p.d_plus = Arc::new(|x, y| 1.0 + x + y);
    p.d_minus = Arc::new(|x, _| 2.0 - x);
    p.e_plus = Arc::new(|_, y| 1.0 + y * y);
    p.e_minus = Arc::new(|x, y| 0.5 + x * y);
    p.g = Arc::new(|x, _| x);
    p.h = Arc::new(|_, y| -y);
    p.initial = Arc::new(|x, y| (x * (1.0 - x) * y * (1.0 - y)).powi(2) * 16.0);
    p.t_final = 0.2;
    p
}

#[test]
fn observed_orders_recover_known_rates() {
    let hs = [0.1, 0.05, 0.025];
    let errs = [Some(1e-2), Some(2.5e-3), Some(6.25e-4)];
    let o = observed_orders(&hs, &errs);
    assert_eq!(o[0], None);
    assert!((o[1].unwrap() - 2.0).abs() < 1e-12);
    assert!((o[2].unwrap() - 2.0).abs() < 1e-12);
    let uneven = observed_orders(&[0.3, 0.1], &[Some(9.0), Some(1.0)]);
    assert!((uneven[1].unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(observed_orders(&[0.1, 0.05], &[None, Some(1.0)])[1], None);
}

#[test]
fn one_dimensional_study_is_second_order() {
    let report = convergence_study(
        "powerlaw-1d",
        StudyParams::new(1.5, None),
        &[20, 40, 80],
        Execution::Parallel,
        Execution::Sequential,
    )
    .unwrap();
    for o in report.orders().into_iter().skip(1) {
        let o = o.unwrap();
        assert!((o - 2.0).abs() < 0.15, "order {o}");
    }
}

#[test]
fn fixed_time_step_study_exposes_temporal_floor() {
    let mut params = StudyParams::new(1.5, None);
    params.dt_rule = DtRule::Fixed(0.1);
    let report = convergence_study("cd1d", params, &[50, 100, 200], Execution::Parallel, Execution::Sequential).unwrap();
    let last = report.orders().last().copied().flatten().unwrap();
    assert!(last < 1.5, "order {last} should degrade with a fixed coarse Δt");
}

#[test]
fn reflected_problem_gives_reflected_solution() {
    let mut p = Problem1D::zero(ord(1.4));
    p.d_plus = Arc::new(|x| 1.0 + x);
    p.d_minus = Arc::new(|x| 0.5 + x * x);
    p.convection = Arc::new(|x| 0.3 * x);
    p.initial = Arc::new(|x| (std::f64::consts::PI * x).sin() * (1.0 + x));
    p.t_final = 0.5;

    let mut r = Problem1D::zero(ord(1.4));
    let (dp, dm, c, u0) = (p.d_plus.clone(), p.d_minus.clone(), p.convection.clone(), p.initial.clone());
    r.d_plus = Arc::new(move |x| dm(1.0 - x));
    r.d_minus = Arc::new(move |x| dp(1.0 - x));
    r.convection = Arc::new(move |x| -c(1.0 - x));
    r.initial = Arc::new(move |x| u0(1.0 - x));
    r.t_final = 0.5;

    let a = solve1d(&p, 40, 0.025).unwrap();
    let b = solve1d(&r, 40, 0.025).unwrap();
    for (x, y) in a.field.values().iter().zip(b.field.values().iter().rev()) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn solves_are_deterministic_across_execution_modes() {
    let p = problems::problem1d("cd1d", ord(1.3), DEFAULT_ORACLE_TOL).unwrap();
    let a = solve1d_with(&p, 64, 1.0 / 64.0, Execution::Sequential).unwrap();
    let b = solve1d_with(&p, 64, 1.0 / 64.0, Execution::Parallel).unwrap();
    assert_eq!(a.field.values(), b.field.values());

    let q = variable_2d();
    for order in [SweepOrder::XThenY, SweepOrder::YThenX] {
        let seq = solve2d_with(&q, 20, 16, 0.02, &AdiOptions { execution: Execution::Sequential, sweep_order: order }).unwrap();
        let par = solve2d_with(&q, 20, 16, 0.02, &AdiOptions { execution: Execution::Parallel, sweep_order: order }).unwrap();
        let again = solve2d_with(&q, 20, 16, 0.02, &AdiOptions { execution: Execution::Parallel, sweep_order: order }).unwrap();
        assert_eq!(seq.field.values(), par.field.values());
        assert_eq!(par.field.values(), again.field.values());
    }
}

#[test]
fn sweep_orders_agree_to_splitting_accuracy() {
    let q = variable_2d();
    let diff = |dt: f64| {
        let a = solve2d_with(&q, 16, 16, dt, &AdiOptions { sweep_order: SweepOrder::XThenY, ..Default::default() }).unwrap();
        let b = solve2d_with(&q, 16, 16, dt, &AdiOptions { sweep_order: SweepOrder::YThenX, ..Default::default() }).unwrap();
        a.field.values().iter().zip(b.field.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let (d1, d2) = (diff(0.01), diff(0.005));
    assert!(d1 < 1e-3 && d2 < d1, "{d1} {d2}");
}

#[test]
fn factors_are_shared_between_equal_lines() {
    let mut p = Problem2D::zero(ord(1.5), ord(1.5));
    p.d_plus = Arc::new(|_, _| 1.0);
    p.e_minus = Arc::new(|_, _| 2.0);
    let (gx, gy) = p.grids(12, 10).unwrap();
    let st = AdiStepper::new(&p, gx, gy, 0.01, Execution::Parallel).unwrap();
    assert_eq!(st.x_operators().unique_factors(), 1);
    assert_eq!(st.y_operators().unique_factors(), 1);

    // Coefficients depending on y alone make x-lines distinct but leave
    // y-lines identical.
    p.d_plus = Arc::new(|_, y| 1.0 + y);
    let st = AdiStepper::new(&p, gx, gy, 0.01, Execution::Parallel).unwrap();
    assert_eq!(st.x_operators().unique_factors(), 9);
    assert_eq!(st.y_operators().unique_factors(), 1);
}

#[test]
fn two_dimensional_solve_tracks_exact_solution() {
    let p = problems::problem2d("cd2d-onesided", ord(1.5), ord(1.5), DEFAULT_ORACLE_TOL).unwrap();
    let sol = fracadi_core::solve2d(&p, 32, 32, 1.0 / 32.0).unwrap();
    let exact = p.exact.clone().unwrap();
    let err = fracadi_core::analysis::linf_error_2d(&sol.field, |x, y, t| exact(x, y, t), sol.t_final);
    assert!(err < 1e-3, "error {err}");
}

#[test]
fn invalid_inputs_are_reported() {
    let p = Problem1D::zero(ord(1.5));
    assert!(matches!(solve1d(&p, 1, 0.1), Err(FracError::InvalidArgument(_))));
    assert!(matches!(solve1d(&p, 10, -0.1), Err(FracError::InvalidArgument(_))));
    assert!(problems::lookup("no-such-problem").is_err());
    assert!(FractionalOrder::new(2.0).is_err());
    assert!(FractionalOrder::new(1.0).is_err());
    let mut q = Problem1D::zero(ord(1.5));
    q.source = Source1D::Pointwise(Arc::new(|_, _| f64::NAN));
    assert!(matches!(solve1d(&q, 10, 0.1), Err(FracError::Divergence { .. })));
}
