use curvebif::asymp::*;
use curvebif::model::{Nonlinearity, Problem, Weight};

fn jump(p: f64) -> Problem<f64> {
    Problem::new(1.0, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::prototype(p, 0.5, 1.0).unwrap())
}

#[test]
fn plateau_grows_like_lambda_to_one_over_q() {
    let pb = jump(1.0);
    let (rates, flat) = profile_laws(&pb, &default_ladder(), default_eta(&pb)).unwrap();
    assert!(rates.kinds.iter().all(|k| *k == MemberKind::Singular));
    assert_eq!(rates.left.check(2.0, 0.15), Check::Pass, "left slope {}", rates.left.slope);
    assert!(rates.left_bound_holds());
    assert!(rates.right_bound_holds());
    // the decay off the node is at least as fast as the bound
    assert!(rates.right.slope < -1.0);
    assert!(flat.flat(), "max|u'| exponent {}", flat.slope_fit.slope);
    assert!(flat.node_converges());
    assert!(flat.plateau_flat());
}

#[test]
fn small_solutions_follow_the_semilinear_limit() {
    for (p, slope) in [(2.0, -1.0), (3.0, -0.5)] {
        let s = small_branch_scaling(&jump(p), &default_ladder()).unwrap();
        assert!((s.expected - slope).abs() < 1e-15);
        assert_eq!(s.fit.check(slope, 0.15), Check::Pass, "p = {p}: slope {}", s.fit.slope);
        assert!(s.limit_error() < 0.2, "p = {p}: {}", s.limit_error());
    }
}

#[test]
fn limit_constant_is_stable_under_ladder_extension() {
    let pb = jump(2.0);
    let short = small_branch_scaling(&pb, &default_ladder()).unwrap();
    let long = small_branch_scaling(&pb, &[1e2, 1e3, 1e4, 1e5, 1e6]).unwrap();
    let (a, b) = (*short.scaled.last().unwrap(), *long.scaled.last().unwrap());
    assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
    assert!(long.limit_sup.is_finite() && long.limit_error() < 0.2);
}

#[test]
fn p_at_most_one_has_no_small_branch_law() {
    assert!(small_branch_scaling(&jump(1.0), &default_ladder()).is_err());
}
