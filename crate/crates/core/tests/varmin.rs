use curvebif::eigen::principal_neumann;
use curvebif::model::{Nonlinearity, Problem, Weight};
use curvebif::shoot::find_regular;
use curvebif::singular::solve_singular;
use curvebif::varmin::*;
use proptest::prelude::*;

fn smoothed() -> (Problem<f64>, f64) {
    let w = Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap();
    let l0 = principal_neumann(&w).unwrap().eigenvalue;
    (Problem::new(l0, w, Nonlinearity::smoothed(1.0, 0.5, 0.1).unwrap()), l0)
}

#[test]
fn below_lambda0_every_start_collapses() {
    let (pb, l0) = smoothed();
    let pb = pb.with_lambda(0.5 * l0);
    let ms = multi_start(&pb, &starts(&pb, 128, 6, 1e-2, 10.0).unwrap(), 50_000, 1e-7).unwrap();
    for r in &ms.runs {
        assert!(r.value >= -1e-8, "value {}", r.value);
        assert!(r.u.sup_norm() < 1e-4, "height {}", r.u.sup_norm());
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn above_lambda0_minimizer_matches_shooting() {
    let (pb, l0) = smoothed();
    let pb = pb.with_lambda(2.0 * l0);
    let ms = multi_start(&pb, &starts(&pb, 128, 6, 1e-2, 10.0).unwrap(), 50_000, 1e-7).unwrap();
    let best = ms.best();
    assert!(best.value < 0.0);
    let sols = find_regular(&pb, 1e-6, 1e3, 64).unwrap();
    let s0 = sols.iter().map(|s| s.s0).fold(0.0, f64::max);
    let height = best.u.sup_norm();
    assert!((height - s0).abs() < 0.2 * s0, "minimizer {height} vs shooting {s0}");
    assert!(ms.value_spread() < 1e-6);
}

#[test]
fn refinement_changes_value_by_less_than_two_percent() {
    let (pb, l0) = smoothed();
    let pb = pb.with_lambda(2.0 * l0);
    let value = |n| {
        let init = DiscreteBVFunction::sample(n, |x: f64| 0.1 * (1.0 + (std::f64::consts::PI * x).cos())).unwrap();
        minimize(&pb, &init, 50_000, 1e-4).unwrap().value
    };
    let (coarse, fine) = (value(128), value(256));
    assert!(((fine - coarse) / fine).abs() < 0.02, "{coarse} vs {fine}");
}

#[test]
fn large_lambda_minimizer_jumps_at_the_node() {
    let w = Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap();
    let pb: Problem<f64> = Problem::new(50.0, w, Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap());
    let jump = solve_singular(&pb).unwrap().solution().unwrap().jump;
    let ms = multi_start(&pb, &starts(&pb, 100, 4, 1.0, 1000.0).unwrap(), 20_000, 1e-6).unwrap();
    let (i, step) = ms.best().u.max_step();
    let cell = (ms.best().u.x(i), ms.best().u.x(i + 1));
    assert!(cell.0 <= 0.4 + 1e-12 && 0.4 <= cell.1 + 1e-12, "steepest cell {cell:?}");
    assert!((step - jump).abs() < 0.05 * jump, "step {step} vs jump {jump}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functional_is_coercive_on_random_rays(
        r in 0.1f64..2.0,
        amps in prop::collection::vec(-1.0f64..1.0, 4),
        lambda in 1.0f64..60.0,
    ) {
        let (pb, _) = smoothed();
        let pb = pb.with_lambda(lambda);
        let ray = DiscreteBVFunction::sample(64, |x: f64| {
            r + amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x).cos()).sum::<f64>()
        }).unwrap();
        let scales: Vec<f64> = (0..12).map(|k| 10f64.powf(k as f64 / 2.0)).collect();
        let fit = coercivity_fit(&pb, &[ray], &scales).unwrap();
        prop_assert!(fit.a > 0.0 && fit.b.is_finite());
    }
}
