//! Shooting in the initial height `u(0)` with the equation written in
//! arclength variables:
//!
//! ```text
//! x' = cos(theta),  u' = sin(theta),  theta' = -lambda a(x) f(u).
//! ```
//!
//! The flux `w = sin(theta)` is bounded by construction, so paths pass near
//! vertical tangents without stiffness. Weight breakpoints are never stepped
//! across.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{curvature_residual, neumann_balance, Problem, Segment, SolutionMesh};
use crate::ode::{land_on, Dopri5, OdeSystem, Point, Stepper};
use crate::scalar::{logspace, Real};

/// Mesh resolution of recorded paths: `dx` and `dtheta` per step.
pub const MESH_CAP: f64 = 1.0 / 2048.0;
/// `|theta(1)|` accepted for a regular solution.
pub const THETA_TOL: f64 = 1e-10;
/// Tangent angle below which a path reaching `u = 0` is continued as a dead
/// core when `p < 1`.
const DEAD_CORE_ANGLE: f64 = 1e-8;
/// `min cos(theta)` below which a solution is reported as near-singular.
pub const NEAR_SINGULAR_COS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcPoint<T> {
    pub s: T,
    pub x: T,
    pub u: T,
    pub theta: T,
}

/// Why an integration stopped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Termination<T> {
    /// The target abscissa was reached.
    Reached,
    /// `|theta| = pi/2` before the target.
    Vertical { x: T, u: T, theta: T },
    /// `u = 0` before the target with a nonzero angle.
    HitZero { x: T, theta: T },
    /// The arclength budget ran out.
    ArcCap { x: T },
}

impl<T: Real> Termination<T> {
    /// Sign attached to a blocked shot for bracketing: paths that dive
    /// (vertical downward, or through zero) count as negative residuals,
    /// since `theta(1) <= 0` on the reachable side of either transition.
    pub fn bracket_sign(&self) -> Option<i8> {
        match self {
            Termination::Reached | Termination::ArcCap { .. } => None,
            Termination::Vertical { theta, .. } => Some(if *theta < T::zero() { -1 } else { 1 }),
            Termination::HitZero { .. } => Some(-1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcPath<T> {
    /// Recorded states (empty unless recording was requested). A breakpoint
    /// of the weight appears twice, closing one segment and opening the next.
    pub points: Vec<ArcPoint<T>>,
    pub end: ArcPoint<T>,
    pub termination: Termination<T>,
    /// The path reached `u = 0` flat and was continued by `u = 0`.
    pub dead_core: bool,
    pub min_cos: T,
    pub steps: usize,
}

impl<T: Real> ArcPath<T> {
    /// Recorded samples ordered by increasing `x`.
    pub fn mesh(&self) -> SolutionMesh<T> {
        let mut m = SolutionMesh::new();
        let backward = self.points.len() > 1 && self.points[self.points.len() - 1].x < self.points[0].x;
        let mut push = |p: &ArcPoint<T>| m.push(p.x, p.u, p.theta);
        if backward {
            self.points.iter().rev().for_each(&mut push);
        } else {
            self.points.iter().for_each(&mut push);
        }
        m
    }
}

/// Where to start, where to go, and what to keep.
#[derive(Clone, Copy, Debug)]
pub struct PathSpec<T> {
    pub x0: T,
    pub u0: T,
    pub theta0: T,
    /// Integration runs towards `x_target`, backward when `x_target < x0`.
    pub x_target: T,
    pub record: bool,
    pub max_arclength: T,
    /// Continue by `u = 0` when the path lands flat on zero.
    pub dead_core: bool,
    /// Ignore the vertical and zero events, following the arclength system
    /// through them (`f` is odd, so negative `u` is well defined). Used for a
    /// residual that is smooth across the edges of the solution set.
    pub extended: bool,
}

impl<T: Real> PathSpec<T> {
    /// Forward shot from `(0, s0, 0)` to `x = 1`.
    pub fn from_height(s0: T) -> Self {
        Self {
            x0: T::zero(),
            u0: s0,
            theta0: T::zero(),
            x_target: T::one(),
            record: false,
            max_arclength: default_arclength(s0),
            dead_core: true,
            extended: false,
        }
    }

    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn extended(mut self) -> Self {
        self.extended = true;
        self.dead_core = false;
        self
    }
}

pub(crate) fn default_arclength<T: Real>(u0: T) -> T {
    T::lit(10.0) * (T::one() + u0.abs()) + T::lit(10.0)
}

struct Arc<'a, T> {
    seg: &'a Segment<T>,
    lambda: T,
    f: &'a crate::model::Nonlinearity<T>,
    sigma: T,
}

impl<T: Real> OdeSystem<T, 3> for Arc<'_, T> {
    fn rhs(&self, _s: T, y: &[T; 3]) -> [T; 3] {
        let (sn, cs) = y[2].sin_cos();
        let a = self.seg.eval(y[0]);
        [self.sigma * cs, self.sigma * sn, -self.sigma * self.lambda * a * self.f.eval(y[1])]
    }
}

fn to_arc<T: Real>(p: &Point<T, 3>) -> ArcPoint<T> {
    ArcPoint { s: p.t, x: p.y[0], u: p.y[1], theta: p.y[2] }
}

/// Integrates one path. `lambda < 0` is accepted here (probing only).
pub fn integrate_arc<T: Real>(pb: &Problem<T>, spec: &PathSpec<T>) -> Result<ArcPath<T>> {
    let w = &pb.weight;
    let forward = spec.x_target >= spec.x0;
    let sigma = if forward { T::one() } else { -T::one() };
    let half_pi = T::FRAC_PI_2();
    let scale = spec.u0.abs().max(T::min_positive_value()).min(T::one());
    let cfg = Dopri5::new(T::lit(1e-11), T::lit(1e-13) * scale);
    let cap = T::lit(MESH_CAP);

    let mut k = if forward {
        w.segment_index(spec.x0)
    } else {
        w.segments().iter().position(|s| spec.x0 <= s.end && spec.x0 > s.start).unwrap_or(0)
    };
    let mut cur = Point { t: T::zero(), y: [spec.x0, spec.u0, spec.theta0], dy: [T::zero(); 3] };
    let mut path = ArcPath {
        points: Vec::new(),
        end: to_arc(&cur),
        termination: Termination::Reached,
        dead_core: false,
        min_cos: spec.theta0.cos(),
        steps: 0,
    };
    if spec.record {
        path.points.push(to_arc(&cur));
    }
    if spec.x_target == spec.x0 {
        return Ok(path);
    }
    let mut h0 = T::lit(1e-3);
    loop {
        let seg = &w.segments()[k];
        let boundary = if forward { seg.end.min(spec.x_target) } else { seg.start.max(spec.x_target) };
        let sys = Arc { seg, lambda: pb.lambda, f: &pb.f, sigma };
        let mut st = Stepper::new(&sys, cfg, cur.t, cur.y, h0);
        let gx = |p: &Point<T, 3>| sigma * (boundary - p.y[0]);
        let gv = |p: &Point<T, 3>| half_pi - p.y[2].abs();
        let gz = |p: &Point<T, 3>| p.y[1];
        let start_u_pos = cur.y[1] > T::zero();
        loop {
            let c = *st.current();
            let mut hcap = spec.max_arclength - c.t;
            if hcap <= T::zero() {
                path.termination = Termination::ArcCap { x: c.y[0] };
                path.end = to_arc(&c);
                path.steps += st.steps();
                return Ok(path);
            }
            if spec.record {
                let cs = c.y[2].cos().abs();
                let rate = (pb.lambda * seg.eval(c.y[0]) * pb.f.eval(c.y[1])).abs();
                hcap = hcap.min(cap / cs.max(T::lit(1e-12))).min(cap / rate.max(T::lit(1e-12)));
            }
            let (p0, p1) = st.step(hcap)?;
            // Earliest event inside the step.
            let mut hit: Option<(u8, Point<T, 3>)> = None;
            let mut consider = |tag: u8, g: &dyn Fn(&Point<T, 3>) -> T| {
                if g(&p1) <= T::zero() && g(&p0) > T::zero() {
                    let q = land_on(&sys, &p0, &p1, g);
                    if hit.as_ref().map_or(true, |(_, h)| q.t < h.t) {
                        hit = Some((tag, q));
                    }
                }
            };
            consider(0, &gx);
            if !spec.extended {
                consider(1, &gv);
                if start_u_pos {
                    consider(2, &gz);
                }
            }
            // Past a vertical tangent x turns back, so a step can cross the
            // boundary and return with both ends inside the segment.
            let turn = |p: &Point<T, 3>| p.y[2].cos();
            if turn(&p0) > T::zero() && turn(&p1) <= T::zero() && gx(&p0) > T::zero() {
                let q = land_on(&sys, &p0, &p1, turn);
                if gx(&q) <= T::zero() {
                    let b = land_on(&sys, &p0, &q, gx);
                    if hit.as_ref().map_or(true, |(_, h)| b.t < h.t) {
                        hit = Some((0, b));
                    }
                }
            }
            match hit {
                None => {
                    path.min_cos = path.min_cos.min(p1.y[2].cos());
                    if spec.record {
                        path.points.push(to_arc(&p1));
                    }
                }
                Some((tag, mut q)) => {
                    path.min_cos = path.min_cos.min(q.y[2].cos());
                    path.steps += st.steps();
                    match tag {
                        0 => {
                            q.y[0] = boundary;
                            cur = q;
                            if spec.record {
                                path.points.push(to_arc(&q));
                            }
                            break;
                        }
                        1 => {
                            q.y[2] = if q.y[2] < T::zero() { -half_pi } else { half_pi };
                            path.min_cos = T::zero();
                            if spec.record {
                                path.points.push(to_arc(&q));
                            }
                            path.end = to_arc(&q);
                            path.termination = Termination::Vertical { x: q.y[0], u: q.y[1], theta: q.y[2] };
                            return Ok(path);
                        }
                        _ => {
                            q.y[1] = T::zero();
                            if spec.record {
                                path.points.push(to_arc(&q));
                            }
                            // Only a non-Lipschitz f (p < 1) lets a path rest on u = 0.
                            let flat = q.y[2].abs() <= T::lit(DEAD_CORE_ANGLE) && pb.f.p() < T::one();
                            if spec.dead_core && flat && forward {
                                path.dead_core = true;
                                let x_from = q.y[0];
                                let n = ((spec.x_target - x_from) / cap).ceil().to_usize().unwrap_or(1).max(1);
                                let mut s = q.t;
                                for i in 1..=n {
                                    let x = x_from + (spec.x_target - x_from) * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                                    let bp = w.breakpoints().into_iter().find(|b| *b > x_from && *b <= x);
                                    s = s + (spec.x_target - x_from) / T::from_usize_lossy(n);
                                    if spec.record {
                                        if let Some(b) = bp {
                                            if path.points.last().map_or(true, |p| p.x != b) {
                                                path.points.push(ArcPoint { s, x: b, u: T::zero(), theta: T::zero() });
                                                path.points.push(ArcPoint { s, x: b, u: T::zero(), theta: T::zero() });
                                            }
                                        }
                                        path.points.push(ArcPoint { s, x, u: T::zero(), theta: T::zero() });
                                    }
                                }
                                path.end = ArcPoint { s, x: spec.x_target, u: T::zero(), theta: T::zero() };
                                path.termination = Termination::Reached;
                                return Ok(path);
                            }
                            path.end = to_arc(&q);
                            path.termination = Termination::HitZero { x: q.y[0], theta: q.y[2] };
                            return Ok(path);
                        }
                    }
                }
            }
        }
        h0 = T::lit(1e-3);
        if cur.y[0] == spec.x_target {
            path.end = to_arc(&cur);
            path.termination = Termination::Reached;
            return Ok(path);
        }
        if spec.record {
            path.points.push(to_arc(&cur));
        }
        if forward {
            k += 1;
        } else {
            k -= 1;
        }
    }
}

/// Forward recorded path from `(0, s0, 0)`.
pub fn integrate_path<T: Real>(pb: &Problem<T>, s0: T) -> Result<ArcPath<T>> {
    integrate_arc(pb, &PathSpec::from_height(s0).recording())
}

/// Outcome of one shot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shot<T> {
    /// `theta(1)`.
    Reached { theta1: T },
    Blocked { termination: Termination<T> },
}

impl<T: Real> Shot<T> {
    pub fn theta1(&self) -> Option<T> {
        match self {
            Shot::Reached { theta1 } => Some(*theta1),
            Shot::Blocked { .. } => None,
        }
    }

    /// Sign used for bracketing; `None` for uninformative outcomes.
    pub fn sign(&self) -> Option<i8> {
        match self {
            Shot::Reached { theta1 } => Some(if *theta1 > T::zero() {
                1
            } else if *theta1 < T::zero() {
                -1
            } else {
                0
            }),
            Shot::Blocked { termination } => termination.bracket_sign(),
        }
    }
}

/// Neumann residual `theta(1)` of the shot from height `s0`.
pub fn shoot_residual<T: Real>(pb: &Problem<T>, s0: T) -> Result<Shot<T>> {
    let path = integrate_arc(pb, &PathSpec::from_height(s0))?;
    Ok(match path.termination {
        Termination::Reached => Shot::Reached { theta1: path.end.theta },
        t => Shot::Blocked { termination: t },
    })
}

/// A regular solution with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularSolution<T> {
    pub lambda: T,
    pub s0: T,
    pub mesh: SolutionMesh<T>,
    pub sup_norm: T,
    pub deriv_norm: T,
    pub theta1: T,
    /// L1 curvature residual on the mesh.
    pub residual: T,
    /// `int_0^1 a f(u)`.
    pub balance: T,
    pub min_cos: T,
    pub dead_core: bool,
}

impl<T: Real> RegularSolution<T> {
    pub fn near_singular(&self) -> bool {
        self.min_cos < T::lit(NEAR_SINGULAR_COS)
    }

    pub fn u_at(&self, x: T) -> T {
        self.mesh.interp_u(x)
    }
}

/// Reconstructs the recorded solution from height `s0`; the shot must reach `x = 1`.
pub fn regular_solution<T: Real>(pb: &Problem<T>, s0: T) -> Result<RegularSolution<T>> {
    let path = integrate_path(pb, s0)?;
    if path.termination != Termination::Reached {
        return Err(Error::Precondition(format!("shot from {} blocked: {:?}", s0, path.termination)));
    }
    let mesh = path.mesh();
    let residual = curvature_residual(pb, &mesh)?;
    let balance = neumann_balance(pb, &mesh);
    Ok(RegularSolution {
        lambda: pb.lambda,
        s0,
        sup_norm: mesh.sup_norm(),
        deriv_norm: mesh.deriv_norm(),
        theta1: path.end.theta,
        residual,
        balance,
        min_cos: path.min_cos,
        dead_core: path.dead_core,
        mesh,
    })
}

/// Bisection of the shooting residual between heights of opposite sign.
/// Returns `None` when the bracket collapses onto an event boundary instead
/// of a zero of `theta(1)`.
pub fn refine_root<T: Real>(pb: &Problem<T>, mut lo: T, mut hi: T) -> Result<Option<T>> {
    let sign_lo = shoot_residual(pb, lo)?.sign();
    let sign_hi = shoot_residual(pb, hi)?.sign();
    let (Some(sl), Some(sh)) = (sign_lo, sign_hi) else { return Ok(None) };
    if sl == 0 {
        return Ok(Some(lo));
    }
    if sh == 0 {
        return Ok(Some(hi));
    }
    if sl == sh {
        return Ok(None);
    }
    let tol = T::lit(THETA_TOL);
    let mut best: Option<(T, T)> = None;
    for _ in 0..200 {
        // Geometric midpoint: heights span decades.
        let mid = (lo.ln() + (hi.ln() - lo.ln()) / T::lit(2.0)).exp();
        if !(mid > lo && mid < hi) {
            break;
        }
        let shot = shoot_residual(pb, mid)?;
        if let Some(t) = shot.theta1() {
            if best.map_or(true, |(_, b)| t.abs() < b) {
                best = Some((mid, t.abs()));
            }
            if t.abs() <= tol {
                return Ok(Some(mid));
            }
        }
        match shot.sign() {
            Some(s) if s == sl => lo = mid,
            Some(_) => hi = mid,
            None => return Ok(None),
        }
    }
    // Bracket exhausted at machine resolution: accept only a genuine zero.
    Ok(best.filter(|(_, r)| *r <= T::lit(1e-8)).map(|(s, _)| s))
}

/// Scans `n_scan` log-spaced heights in `[s_min, s_max]`, refines every sign
/// change of `theta(1)` and returns the distinct regular solutions by
/// increasing height. An empty list is a meaningful answer.
pub fn find_regular<T: Real>(pb: &Problem<T>, s_min: T, s_max: T, n_scan: usize) -> Result<Vec<RegularSolution<T>>> {
    pb.check_solvable()?;
    if !(s_min > T::zero() && s_max > s_min) || n_scan < 16 {
        return Err(Error::Precondition("need 0 < s_min < s_max and n_scan >= 16".into()));
    }
    let heights = logspace(s_min, s_max, n_scan);
    let shots: Vec<Shot<T>> = heights.par_iter().map(|&s| shoot_residual(pb, s)).collect::<Result<_>>()?;
    let brackets: Vec<(T, T)> = (0..n_scan - 1)
        .filter(|&i| match (shots[i].sign(), shots[i + 1].sign()) {
            (Some(a), Some(b)) => a != b || a == 0,
            _ => false,
        })
        .map(|i| (heights[i], heights[i + 1]))
        .collect();
    let roots: Vec<Option<T>> =
        brackets.par_iter().map(|&(a, b)| refine_root(pb, a, b)).collect::<Result<_>>()?;
    let mut sols: Vec<RegularSolution<T>> = Vec::new();
    for s0 in roots.into_iter().flatten() {
        let sol = regular_solution(pb, s0)?;
        let dup = sols.iter().any(|o| {
            (o.sup_norm - sol.sup_norm).abs() <= T::lit(1e-6) * T::one().max(sol.sup_norm.abs())
        });
        if !dup {
            sols.push(sol);
        }
    }
    sols.sort_by(|a, b| a.s0.partial_cmp(&b.s0).expect("finite heights"));
    Ok(sols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Nonlinearity, Weight};
    use approx::assert_relative_eq;

    fn problem(lambda: f64, p: f64) -> Problem<f64> {
        Problem::new(lambda, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::smoothed(p, 0.5, 0.1).unwrap())
    }

    #[test]
    fn tiny_heights_are_not_dead_cores_for_lipschitz_f() {
        let w = Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap();
        let pb = Problem::new(100.0, w, Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap());
        let path = integrate_path(&pb, 1e-10).unwrap();
        assert!(!path.dead_core);
        assert!(matches!(path.termination, Termination::HitZero { .. }));
        assert!(find_regular(&pb, 1e-10, 1.0, 96).unwrap().is_empty());
    }

    #[test]
    fn straight_path_at_lambda_zero() {
        let pb = problem(0.0, 1.0);
        let path = integrate_path(&pb, 0.7).unwrap();
        assert_eq!(path.termination, Termination::Reached);
        assert!(path.points.iter().all(|p| p.u == 0.7 && p.theta == 0.0));
        assert_relative_eq!(path.end.x, 1.0);
        assert_eq!(shoot_residual(&pb, 3.0).unwrap(), Shot::Reached { theta1: 0.0 });
    }

    #[test]
    fn zero_weight_gives_horizontal_line() {
        let w = Weight::new(
            0.5,
            vec![
                crate::model::Segment { start: 0.0, end: 0.5, form: crate::model::SegmentForm::Constant { value: 0.0 } },
                crate::model::Segment { start: 0.5, end: 1.0, form: crate::model::SegmentForm::Constant { value: 0.0 } },
            ],
        )
        .unwrap();
        let pb = Problem::new(5.0, w, Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap());
        let path = integrate_path(&pb, 2.0).unwrap();
        assert!(path.points.iter().all(|p| p.theta == 0.0));
    }

    #[test]
    fn breakpoints_recorded_twice() {
        let pb = problem(3.0, 1.0);
        let m = integrate_path(&pb, 0.1).unwrap().mesh();
        let dups = m.x.windows(2).filter(|w| w[0] == w[1]).count();
        assert_eq!(dups, 1);
        // The dx cap is set from the angle at the start of each step.
        assert!(m.x.windows(2).all(|w| w[1] - w[0] <= MESH_CAP * 1.01));
    }

    #[test]
    fn backward_path_ends_at_target() {
        let pb = problem(1.0, 1.0);
        let spec = PathSpec { x0: 1.0, u0: 0.2, theta0: 0.0, x_target: 0.4, record: true, max_arclength: 10.0, dead_core: false, extended: false };
        let path = integrate_arc(&pb, &spec).unwrap();
        assert_eq!(path.termination, Termination::Reached);
        assert_eq!(path.end.x, 0.4);
        // Going left over the negative part of the weight, u increases.
        assert!(path.end.u > 0.2);
        let m = path.mesh();
        assert!(m.x.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn vertical_event_near_node_for_large_lambda() {
        // With f ~ h u^-1/2 the flux lambda int_0^z a f reaches 1 near the
        // node once s0 is close to (lambda z h)^2; the event moves towards z
        // as lambda grows.
        let mut last = f64::INFINITY;
        for &lambda in &[50.0, 200.0, 800.0] {
            let pb = Problem::new(lambda, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap());
            let s0 = 0.9 * (lambda * 0.4f64).powi(2);
            match integrate_arc(&pb, &PathSpec::from_height(s0)).unwrap().termination {
                Termination::Vertical { x, theta, .. } => {
                    assert!(theta < 0.0 && x < 0.4);
                    assert!(0.4 - x < last);
                    last = 0.4 - x;
                }
                t => panic!("expected vertical, got {:?}", t),
            }
        }
        assert!(last < 0.05);
    }

    #[test]
    fn regular_solution_diagnostics() {
        let l0 = crate::eigen::principal_neumann(&problem(0.0, 1.0).weight).unwrap().eigenvalue;
        let pb = problem(2.0 * l0, 1.0);
        let sols = find_regular(&pb, 1e-6, 1e3, 64).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            assert!(s.theta1.abs() <= 1e-8);
            assert!(s.residual <= 1e-5, "residual {}", s.residual);
            assert!(s.balance.abs() <= 1e-5, "balance {}", s.balance);
            assert!(s.mesh.u.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert_relative_eq!(s.sup_norm, s.s0, max_relative = 1e-12);
        }
    }

    #[test]
    fn empty_below_bifurcation_point() {
        let l0 = crate::eigen::principal_neumann(&problem(0.0, 1.0).weight).unwrap().eigenvalue;
        let pb = problem(0.5 * l0, 1.0);
        assert!(find_regular(&pb, 1e-6, 1e3, 64).unwrap().is_empty());
    }

    #[test]
    fn rejects_negative_lambda() {
        assert!(find_regular(&problem(-1.0, 1.0), 1e-3, 1.0, 16).is_err());
    }
}
