//! The ten acceptance criteria. Each returns an [`Outcome`] holding every
//! individual check, so `verify` and the test target print the same lines.

use std::sync::Arc;
use std::time::{Duration, Instant};

use curvebif::asymp::{default_eta, default_ladder, profile_laws, small_branch_scaling, Check};
use curvebif::contin::{seed_from_lambda0, trace, Orientation, Origin, TraceOptions};
use curvebif::eigen::{bif_direction, principal_neumann};
use curvebif::model::{
    curvature_residual, neumann_balance, piecewise_constant_balance, Segment, SegmentForm, Side, WeightFn,
};
use curvebif::quad::{criterion_integral, ExtendedReal};
use curvebif::roots::bisect;
use curvebif::shoot::{find_regular, regular_solution, RegularSolution};
use curvebif::singular::{classify, solve_singular, AbsentReason, SingularOutcome, SingularSolution, VerdictTag};
use curvebif::varmin::{multi_start, starts};
use curvebif::{Nonlinearity, Problem, SolutionMesh, Weight};

/// One named check inside a criterion.
#[derive(Clone, Debug)]
pub struct Item {
    pub what: String,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub items: Vec<Item>,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|i| i.ok)
    }

    /// `criterion 3   PASS <title> [1.20 s]`.
    pub fn header(&self) -> String {
        format!(
            "criterion {:<3} {} {} [{:.2} s]",
            self.id,
            if self.passed() { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64()
        )
    }

    /// The header followed by the failing items.
    pub fn line(&self) -> String {
        let mut s = self.header();
        for i in self.items.iter().filter(|i| !i.ok) {
            s.push_str(&format!("\n    failed: {}", i.what));
        }
        s
    }

    pub fn details(&self) -> String {
        self.items.iter().map(|i| format!("    [{}] {}\n", if i.ok { "ok" } else { "--" }, i.what)).collect()
    }
}

struct Run {
    items: Vec<Item>,
}

impl Run {
    fn new() -> Self {
        Self { items: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.items.push(Item { what, ok });
    }

    /// A step that must succeed for the remaining checks to make sense.
    fn need<T>(&mut self, r: curvebif::Result<T>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }
}

fn timed(id: &'static str, title: &'static str, body: impl FnOnce(&mut Run)) -> Outcome {
    let t = Instant::now();
    let mut run = Run::new();
    body(&mut run);
    Outcome { id, title, items: run.items, elapsed: t.elapsed() }
}

fn jump_weight() -> Weight {
    Weight::piecewise_constant(0.4, 1.0, 2.0).expect("valid weight")
}

fn prototype(p: f64) -> Nonlinearity {
    Nonlinearity::prototype(p, 0.5, 1.0).expect("valid nonlinearity")
}

fn smoothed(m: f64) -> Nonlinearity {
    Nonlinearity::smoothed(1.0, 0.5, m).expect("valid nonlinearity")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Root of `sqrt(A) tan(sqrt(lambda A) z) = sqrt(B) tanh(sqrt(lambda B) (1 - z))`
/// below the first pole of the tangent.
pub fn matching_oracle(a: f64, b: f64, z: f64) -> f64 {
    let g = |l: f64| Ok(a.sqrt() * ((l * a).sqrt() * z).tan() - b.sqrt() * ((l * b).sqrt() * (1.0 - z)).tanh());
    let pole = (std::f64::consts::FRAC_PI_2 / z).powi(2) / a;
    bisect(g, 1e-9, pole * (1.0 - 1e-12), 0.0, 1e-15, 300).expect("oracle bracket")
}

pub fn c01_eigenvalue() -> Outcome {
    timed("1", "eigenvalue oracle", |r| {
        let t = Instant::now();
        let json = crate::run_capture(["curvebif", "eig", "--weight", "jump", "--a", "1", "--b", "2", "--z", "0.4"]);
        let elapsed = t.elapsed();
        let Some(json) = r.need(json.map_err(curvebif::Error::Precondition), "eig command") else { return };
        let l0 = serde_json::from_str::<serde_json::Value>(&json).ok().and_then(|v| v["lambda0"].as_f64());
        let Some(l0) = l0 else {
            r.check(false, format!("eig output has no lambda0: {json}"));
            return;
        };
        let oracle = matching_oracle(1.0, 2.0, 0.4);
        r.check(rel(l0, oracle) <= 1e-6, format!("lambda0 {l0} vs oracle {oracle} (rel {:.2e} <= 1e-6)", rel(l0, oracle)));
        r.check(elapsed < Duration::from_secs(1), format!("runtime {:.3} s < 1 s", elapsed.as_secs_f64()));
    })
}

pub fn c02_criterion_integrals() -> Outcome {
    timed("2", "criterion integrals", |r| {
        let (z, a) = (0.4, 1.0);
        let mut go = |w: Weight, what: String, expect: Option<f64>| {
            let t = Instant::now();
            let Some(v) = r.need(criterion_integral(&w, Side::Left, 1e-10), &what) else { return };
            let elapsed = t.elapsed();
            match (v, expect) {
                (ExtendedReal::Finite { value: x }, Some(e)) => {
                    r.check(rel(x, e) <= 1e-4, format!("{what}: {x} vs closed form {e} (rel {:.2e} <= 1e-4)", rel(x, e)))
                }
                (ExtendedReal::Infinite { .. }, None) => r.check(true, format!("{what}: certified infinite")),
                (v, e) => r.check(false, format!("{what}: got {v:?}, expected {e:?}")),
            }
            r.check(elapsed < Duration::from_secs(1), format!("{what}: runtime {:.3} s < 1 s", elapsed.as_secs_f64()));
        };
        go(Weight::piecewise_constant(z, a, 2.0).unwrap(), "piecewise constant".into(), Some(2.0 * (z / a).sqrt()));
        for alpha in [0.5, 0.9, 1.0, 1.5] {
            let w = Weight::power_law(z, a, alpha, 1.0, 1.0).unwrap();
            // int_0^z (A d^(alpha+1) / (alpha+1))^(-1/2) dd
            let closed = (alpha < 1.0).then(|| ((alpha + 1.0) / a).sqrt() * 2.0 * z.powf((1.0 - alpha) / 2.0) / (1.0 - alpha));
            go(w, format!("power law alpha = {alpha}"), closed);
        }
    })
}

pub fn c03_nonexistence() -> Outcome {
    timed("3", "non-existence below and existence above lambda0 (p = 1)", |r| {
        let Some(pair) = r.need(principal_neumann(&jump_weight()), "eigenvalue") else { return };
        let pb = Problem::new(0.0, jump_weight(), smoothed(0.1));
        for (fac, want) in [(0.5, false), (2.0, true)] {
            let pb = pb.with_lambda(fac * pair.eigenvalue);
            let Some(sols) = r.need(find_regular(&pb, 1e-6, 1e3, 64), "find_regular") else { return };
            if want {
                r.check(!sols.is_empty(), format!("{fac} lambda0: {} solution(s)", sols.len()));
                for s in &sols {
                    r.check(s.residual <= 1e-5, format!("{fac} lambda0: s0 = {:.6}, residual {:.2e} <= 1e-5", s.s0, s.residual));
                }
            } else {
                r.check(sols.is_empty(), format!("{fac} lambda0: {} solution(s), expected none", sols.len()));
            }
        }
        r.check(r.items.len() > 1, "all searches ran".into());
    })
}

/// Branch from `lambda0` for the smoothed prototype `p = 1, M = 1`, up to `u(0) = s_max`.
fn lambda0_branch(s_max: f64) -> curvebif::Result<(Problem, Vec<(f64, f64)>)> {
    let pb = Problem::new(0.0, jump_weight(), smoothed(1.0));
    let start = seed_from_lambda0(&pb, 1e-3)?;
    let opts = TraceOptions { h_max: 0.02, s_max, orientation: Orientation::GrowS0, ..TraceOptions::default() };
    let b = trace(&pb, start, Origin::FromLambda0, &opts)?;
    Ok((pb, b.points.iter().map(|p| (p.lambda, p.s0)).collect()))
}

/// Least-squares `lambda - lambda0 = c2 s^2 + c4 s^4`; returns `2 c2`.
pub fn fit_second_derivative(l0: f64, pts: &[(f64, f64)]) -> f64 {
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(l, s) in pts {
        let (x1, x2, y) = (s * s, s.powi(4), l - l0);
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    2.0 * (b1 * a22 - b2 * a12) / det
}

pub fn c04_bifurcation_direction() -> Outcome {
    timed("4", "bifurcation direction", |r| {
        let Some(pair) = r.need(principal_neumann(&jump_weight()), "eigenvalue") else { return };
        let m = pair.moments;
        let identity = rel(pair.eigenvalue * m.a_phi2, m.dphi2);
        r.check(identity <= 1e-5, format!("lambda0 int a phi^2 = int phi'^2 (rel {identity:.2e} <= 1e-5)"));
        let Some((pb, pts)) = r.need(lambda0_branch(0.1), "branch from lambda0") else { return };
        let Some(dir) = r.need(bif_direction(&pb.f, &pair), "quadrature direction") else { return };
        let Some(quad) = dir.lambda2 else {
            r.check(false, "quadrature lambda''(0) unavailable".into());
            return;
        };
        let near: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.1 <= 0.08).collect();
        r.check(near.len() >= 8, format!("{} branch points with u(0) <= 0.08", near.len()));
        let fit = fit_second_derivative(pair.eigenvalue, &near);
        r.check(fit.signum() == quad.signum(), format!("sign of lambda''(0): branch {fit:.6} vs quadrature {quad:.6}"));
        r.check(rel(fit, quad) <= 0.1, format!("magnitude: rel {:.2e} <= 0.1", rel(fit, quad)));
    })
}

pub fn c05_growth_and_flatness() -> Outcome {
    timed("5a", "grow-up rate and flatness (p = 1, q = 0.5)", |r| {
        let pb = Problem::new(0.0, jump_weight(), prototype(1.0));
        let t = Instant::now();
        let Some((rates, flat)) = r.need(profile_laws(&pb, &default_ladder(), default_eta(&pb)), "family") else { return };
        let left = &rates.left;
        r.check(left.r2 >= 0.98, format!("left fit r^2 = {:.6} >= 0.98", left.r2));
        r.check((left.slope - 2.0).abs() <= 0.3, format!("left slope {:.6} = 2 +- 0.3", left.slope));
        r.check(rates.left_bound_holds(), "u(x_left) lambda^-2 bounded below along the ladder".into());
        r.check(flat.flat(), format!("max|u'| on I_eta {:?}: fitted exponent {:.2e} <= 0.1", flat.max_slope, flat.slope_fit.slope));
        r.check(t.elapsed() < Duration::from_secs(120), format!("runtime {:.1} s < 120 s", t.elapsed().as_secs_f64()));
    })
}

pub fn c05_decay() -> Outcome {
    timed("5b", "decay rate (p = 1, q = 0.5)", |r| {
        let pb = Problem::new(0.0, jump_weight(), prototype(1.0));
        let Some((rates, _)) = r.need(profile_laws(&pb, &default_ladder(), default_eta(&pb)), "family") else { return };
        let right = &rates.right;
        r.check(rates.right_bound_holds(), "u(x_right) lambda bounded above along the ladder".into());
        r.check(right.r2 >= 0.98, format!("right fit r^2 = {:.6} >= 0.98", right.r2));
        r.check((right.slope + 1.0).abs() <= 0.15, format!("right slope {:.4} = -1 +- 0.15 (values {:?})", right.slope, right.values));
    })
}

pub fn c06_small_branch() -> Outcome {
    timed("6", "small-branch scaling (p > 1)", |r| {
        for p in [2.0, 3.0] {
            let pb = Problem::new(0.0, jump_weight(), prototype(p));
            let Some(s) = r.need(small_branch_scaling(&pb, &default_ladder()), "small branch") else { return };
            let e = -1.0 / (p - 1.0);
            r.check(
                s.fit.check(e, 0.15) == Check::Pass,
                format!("p = {p}: slope {:.6} vs {e} within 15% (r^2 {:.6})", s.fit.slope, s.fit.r2),
            );
            r.check(s.limit_error() <= 0.2, format!("p = {p}: scaled norms vs limit {:.6}: max rel {:.2e} <= 0.2", s.limit_sup, s.limit_error()));
        }
    })
}

fn check_singular(r: &mut Run, s: &SingularSolution<f64>, tag: &str) {
    r.check(s.jump > 0.0, format!("{tag}: jump {:.6} > 0", s.jump));
    r.check(
        s.flux_left.abs() <= 1e-6 && s.flux_right.abs() <= 1e-6,
        format!("{tag}: flux balances {:.2e}, {:.2e} <= 1e-6", s.flux_left, s.flux_right),
    );
    r.check(
        s.residual_left <= 1e-5 && s.residual_right <= 1e-5,
        format!("{tag}: piecewise residuals {:.2e}, {:.2e} <= 1e-5", s.residual_left, s.residual_right),
    );
}

pub fn c07_singular() -> Outcome {
    timed("7", "singular construction and criterion refusal", |r| {
        let pb = Problem::new(50.0, jump_weight(), prototype(1.0));
        let Some(out) = r.need(solve_singular(&pb), "solve_singular") else { return };
        let Some(s) = out.solution() else {
            r.check(false, format!("jump weight at lambda = 50: {out:?}"));
            return;
        };
        check_singular(r, s, "jump weight");
        if let Some(v) = r.need(classify(&pb, Some(&s.mesh())), "classify") {
            r.check(v.tag == VerdictTag::JumpCertified, format!("verdict {:?}", v.tag));
            match v.witness {
                Some(w) => r.check(w.integral < w.drop, format!("witness x1 = {}, x2 = {}: {:.4} < {:.4}", w.x1, w.x2, w.integral, w.drop)),
                None => r.check(false, "no witness".into()),
            }
        }
        let pw = Problem::new(50.0, Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap(), prototype(1.0));
        if let Some(out) = r.need(solve_singular(&pw), "solve_singular (power law)") {
            r.check(
                matches!(out, SingularOutcome::Absent { reason: AbsentReason::ForbiddenByCriterion }),
                format!("power law alpha = 1: {:?}", out.solution().map(|_| "found").unwrap_or("absent")),
            );
        }
        if let Some(v) = r.need(classify(&pw, None), "classify (power law)") {
            r.check(v.tag == VerdictTag::RegularByCriterion, format!("power law verdict {:?}", v.tag));
        }
    })
}

/// Regular solutions of the jump-weight prototype at moderate `lambda`.
fn moderate_regular() -> curvebif::Result<(Problem, Vec<RegularSolution<f64>>)> {
    let pb = Problem::new(0.0, jump_weight(), prototype(1.0));
    let mut all = Vec::new();
    for l in [3.0, 4.0, 5.0] {
        all.extend(find_regular(&pb.with_lambda(l), 1e-6, 1e3, 64)?);
    }
    Ok((pb, all))
}

pub fn c08_dichotomy() -> Outcome {
    timed("8", "large-lambda dichotomy and balance identity", |r| {
        let pb = Problem::new(1e3, jump_weight(), prototype(1.0));
        let m = pb.f.m();
        if let Some(sols) = r.need(find_regular(&pb, 2.0 * m, 1e12, 64), "find_regular above 2M") {
            let far: Vec<f64> = sols.iter().filter(|s| s.s0 > 2.0 * m).map(|s| s.s0).collect();
            r.check(far.is_empty(), format!("lambda = 1e3: regular solutions above 2M: {far:?}"));
        }
        if let Some(out) = r.need(solve_singular(&pb), "solve_singular") {
            r.check(out.solution().is_some(), format!("lambda = 1e3 singular construction: {}", if out.solution().is_some() { "found" } else { "absent" }));
        }
        let Some((pb, sols)) = r.need(moderate_regular(), "moderate regular solutions") else { return };
        r.check(!sols.is_empty(), format!("{} regular solutions at lambda in {{3, 4, 5}}", sols.len()));
        for s in &sols {
            let pbl = pb.with_lambda(s.lambda);
            let uz = s.u_at(pbl.weight.z());
            let u1 = *s.mesh.u.last().unwrap();
            let d = piecewise_constant_balance(&pbl, s.s0, uz, u1).unwrap_or(f64::INFINITY);
            r.check(d <= 1e-4, format!("lambda = {}, s0 = {:.6}: balance defect {d:.2e} <= 1e-4", s.lambda, s.s0));
        }
    })
}

pub fn c09_variational() -> Outcome {
    timed("9", "variational cross-check (p = 1)", |r| {
        let Some(pair) = r.need(principal_neumann(&jump_weight()), "eigenvalue") else { return };
        let pb = Problem::new(0.0, jump_weight(), smoothed(0.1));
        let (n, count, max_iter, tol) = (128, 6, 50_000, 1e-7);

        let above = pb.with_lambda(2.0 * pair.eigenvalue);
        let Some(inits) = r.need(starts(&above, n, count, 1e-2, 10.0), "starts") else { return };
        let Some(ms) = r.need(multi_start(&above, &inits, max_iter, tol), "minimize at 2 lambda0") else { return };
        let best = ms.best();
        r.check(best.value < 0.0, format!("2 lambda0: J = {:.6e} < 0", best.value));
        if let Some(sols) = r.need(find_regular(&above, 1e-6, 1e3, 64), "shooting at 2 lambda0") {
            let h = best.u.sup_norm();
            match sols.iter().map(|s| s.s0).reduce(f64::max) {
                Some(s0) => r.check(rel(h, s0) <= 0.2, format!("minimizer height {h:.6} vs shooting {s0:.6} (rel {:.2e} <= 0.2)", rel(h, s0))),
                None => r.check(false, "no shooting solution at 2 lambda0".into()),
            }
        }

        let below = pb.with_lambda(0.5 * pair.eigenvalue);
        let Some(inits) = r.need(starts(&below, n, count, 1e-2, 10.0), "starts") else { return };
        let Some(ms) = r.need(multi_start(&below, &inits, max_iter, tol), "minimize at 0.5 lambda0") else { return };
        let worst = ms.runs.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        let height = ms.runs.iter().map(|m| m.u.sup_norm()).fold(0.0, f64::max);
        r.check(worst >= -1e-8, format!("0.5 lambda0: all {} starts have J >= -1e-8 (min {worst:.2e})", ms.runs.len()));
        r.check(height <= 1e-4, format!("0.5 lambda0: all starts collapse to 0 (max height {height:.2e})"));
    })
}

/// The dead-core profile: a piecewise quartic on `[0, 2/3]`, zero beyond,
/// with `lambda = -1`, `f(u) = sqrt(u)` and the weight read off from `u`.
pub fn dead_core_example() -> Problem {
    let c = 1.0 / 144.0;
    let g = |du: f64| (1.0 + du * du).powf(-1.5);
    // a = (u'/sqrt(1+u'^2))' / sqrt(u) = u'' (1+u'^2)^(-3/2) / sqrt(u)
    let left = move |x: f64| {
        let du = -4.0 * c * x.powi(3);
        let ddu = -12.0 * c * x * x;
        ddu * g(du) / (c * (2.0 / 81.0 - x.powi(4))).sqrt()
    };
    // u'' / sqrt(u) = 1 on the middle piece
    let mid = move |x: f64| g(4.0 * c * (x - 2.0 / 3.0).powi(3));
    let seg = |start: f64, end: f64, form| Segment { start, end, form };
    let w = Weight::new(
        1.0 / 3.0,
        vec![
            seg(0.0, 1.0 / 3.0, SegmentForm::Sampled(WeightFn(Arc::new(left)))),
            seg(1.0 / 3.0, 2.0 / 3.0, SegmentForm::Sampled(WeightFn(Arc::new(mid)))),
            seg(2.0 / 3.0, 1.0, SegmentForm::Constant { value: -1.0 }),
        ],
    )
    .expect("valid weight");
    Problem::new(-1.0, w, Nonlinearity::prototype(0.5, 0.5, 1.0).expect("valid nonlinearity"))
}

/// The dead-core profile sampled with `3k` cells, breakpoints doubled.
pub fn dead_core_mesh(k: usize) -> SolutionMesh {
    let c = 1.0 / 144.0;
    let u = |x: f64| {
        if x <= 1.0 / 3.0 {
            c * (2.0 / 81.0 - x.powi(4))
        } else if x <= 2.0 / 3.0 {
            c * (x - 2.0 / 3.0).powi(4)
        } else {
            0.0
        }
    };
    let du = |x: f64, piece: usize| match piece {
        0 => -4.0 * c * x.powi(3),
        1 => 4.0 * c * (x - 2.0 / 3.0).powi(3),
        _ => 0.0,
    };
    let mut mesh = SolutionMesh::new();
    for piece in 0..3 {
        for i in 0..=k {
            let x = (piece * k + i) as f64 / (3 * k) as f64;
            mesh.push(x, u(x), du(x, piece).atan());
        }
    }
    mesh
}

pub fn c10_residuals() -> Outcome {
    timed("10", "residual invariants", |r| {
        let mut regular: Vec<(Problem, RegularSolution<f64>)> = Vec::new();
        if let Ok(pair) = principal_neumann(&jump_weight()) {
            let pb = Problem::new(2.0 * pair.eigenvalue, jump_weight(), smoothed(0.1));
            if let Some(s) = r.need(find_regular(&pb, 1e-6, 1e3, 64), "solutions at 2 lambda0") {
                regular.extend(s.into_iter().map(|s| (pb.clone(), s)));
            }
        }
        if let Some((pb, sols)) = r.need(moderate_regular(), "moderate regular solutions") {
            regular.extend(sols.into_iter().map(|s| (pb.with_lambda(s.lambda), s)));
        }
        if let Some((pb, pts)) = r.need(lambda0_branch(0.1), "branch from lambda0") {
            for &(l, s0) in pts.iter().step_by(10) {
                let pbl = pb.with_lambda(l);
                if let Some(s) = r.need(regular_solution(&pbl, s0), "branch point reconstruction") {
                    regular.push((pbl, s));
                }
            }
        }
        r.check(!regular.is_empty(), format!("{} regular solutions collected", regular.len()));
        let mut worst = (0.0f64, 0.0f64);
        for (pb, s) in &regular {
            let res = curvature_residual(pb, &s.mesh).unwrap_or(f64::INFINITY);
            let bal = neumann_balance(pb, &s.mesh).abs();
            worst = (worst.0.max(res), worst.1.max(bal));
            if res > 1e-5 || bal > 1e-5 {
                r.check(false, format!("lambda = {}, s0 = {}: residual {res:.2e}, balance {bal:.2e}", s.lambda, s.s0));
            }
        }
        r.check(worst.0 <= 1e-5 && worst.1 <= 1e-5, format!("regular: worst residual {:.2e}, worst balance {:.2e} <= 1e-5", worst.0, worst.1));

        for l in [50.0, 1e3] {
            let pb = Problem::new(l, jump_weight(), prototype(1.0));
            let Some(out) = r.need(solve_singular(&pb), "singular construction") else { continue };
            if let Some(s) = out.solution() {
                r.check(
                    s.residual_left.max(s.residual_right) <= 1e-5,
                    format!("singular lambda = {l}: residuals {:.2e}, {:.2e} <= 1e-5", s.residual_left, s.residual_right),
                );
                let bal = neumann_balance(&pb, &s.mesh()).abs();
                r.check(bal <= 1e-5, format!("singular lambda = {l}: balance {bal:.2e} <= 1e-5"));
            }
        }

        let pb = dead_core_example();
        let res: Vec<f64> = [16, 32, 64, 128].iter().map(|&k| curvature_residual(&pb, &dead_core_mesh(k)).unwrap_or(f64::NAN)).collect();
        let halves = res.windows(2).all(|w| w[1] <= 0.5 * w[0]);
        r.check(halves, format!("dead-core residual under refinement {res:?}: halving h at least halves it"));
    })
}

/// Every criterion in order; criterion 5 is split into its growth/flatness
/// and decay parts.
pub fn all() -> Vec<fn() -> Outcome> {
    vec![
        c01_eigenvalue,
        c02_criterion_integrals,
        c03_nonexistence,
        c04_bifurcation_direction,
        c05_growth_and_flatness,
        c05_decay,
        c06_small_branch,
        c07_singular,
        c08_dichotomy,
        c09_variational,
        c10_residuals,
    ]
}
