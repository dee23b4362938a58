//! Regularity at the node and singular solutions.
//!
//! A singular solution is built from two pieces that both arrive at `z` with
//! a vertical tangent: a left piece shot forward from `(0, s, 0)` and a right
//! piece shot backward from `(1, t, 0)`. Arriving vertically means the flux
//! carried to the node equals one on each side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{curvature_residual, Problem, Side, SolutionMesh};
use crate::quad::{criterion_integral, ExtendedReal, DEFAULT_CRITERION_TOL};
use crate::scalar::{logspace, Real};
use crate::shoot::{default_arclength, integrate_arc, ArcPath, PathSpec, Termination};

/// Distance from the node excluded from the piecewise residuals.
pub const NODE_GAP: f64 = 1e-3;
/// Relative slack accepted in the jump inequality of the witness search.
pub const WITNESS_SLACK: f64 = 0.01;

pub const LEFT_SCAN: (f64, f64, usize) = (1e-8, 1e12, 161);
pub const RIGHT_SCAN: (f64, f64, usize) = (1e-120, 1e12, 529);
const WITNESS_RATIO: f64 = 0.8;
const WITNESS_LEVELS: usize = 60;

/// `lambda ||f||_inf ||a||_1 < 1`: every solution is regular.
pub fn smallness_guard<T: Real>(pb: &Problem<T>) -> bool {
    pb.lambda * pb.f.sup_norm() * pb.weight.abs_integral() < T::one()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictTag {
    RegularBySmallness,
    RegularByCriterion,
    JumpCertified,
    Inconclusive,
}

/// Points `x1 < z < x2` with `int_{x1}^{x2} H^(-1/2) <= u(x1) - u(x2)`,
/// `H(x) = int_x^z lambda a f(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness<T> {
    pub x1: T,
    pub x2: T,
    pub integral: T,
    pub drop: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityVerdict<T> {
    pub tag: VerdictTag,
    /// Criterion integrals of the weight on each side of the node.
    pub i_left: ExtendedReal<T>,
    pub i_right: ExtendedReal<T>,
    /// The same integrals with `a` replaced by `lambda a f(u)` along a supplied
    /// trace, over the part of each side adjacent to `z` where the inner
    /// integral stays positive.
    pub h_left: Option<T>,
    pub h_right: Option<T>,
    pub witness: Option<Witness<T>>,
}

/// One side of a trace, ordered by increasing `x`, with the node as an end.
struct Branch<T> {
    x: Vec<T>,
    u: Vec<T>,
    /// `int` between `x_i` and `z` of `H^(-1/2)`; `None` past the first point
    /// (counting from the node) where `H <= 0`.
    cum: Vec<Option<T>>,
}

impl<T: Real> Branch<T> {
    fn new(pb: &Problem<T>, x: Vec<T>, u: Vec<T>, side: Side) -> Self {
        let w = &pb.weight;
        let n = x.len();
        let h = |i: usize, j: usize| {
            let seg = &w.segments()[w.segment_index((x[i] + x[j]) / T::lit(2.0))];
            (pb.lambda * seg.eval(x[i]) * pb.f.eval(u[i]), pb.lambda * seg.eval(x[j]) * pb.f.eval(u[j]))
        };
        let mut big_h = vec![T::zero(); n];
        let order: Vec<usize> = match side {
            Side::Left => (0..n).rev().collect(),
            Side::Right => (0..n).collect(),
        };
        for k in 1..n {
            let (i, j) = (order[k], order[k - 1]);
            let (lo, hi) = (i.min(j), i.max(j));
            let (hl, hh) = h(lo, hi);
            let piece = (hl + hh) * (x[hi] - x[lo]) / T::lit(2.0);
            big_h[i] = match side {
                Side::Left => big_h[j] + piece,
                Side::Right => big_h[j] - piece,
            };
        }
        let mut cum = vec![None; n];
        cum[order[0]] = Some(T::zero());
        for k in 1..n {
            let (i, j) = (order[k], order[k - 1]);
            let (Some(prev), true) = (cum[j], big_h[i] > T::zero()) else { break };
            // Exact for H linear between samples, including H = 0 at the node.
            let dx = (x[i] - x[j]).abs();
            cum[i] = Some(prev + T::lit(2.0) * dx / (big_h[i].sqrt() + big_h[j].sqrt()));
        }
        Self { x, u, cum }
    }

    fn interp(&self, v: &[T], x: T) -> T {
        let k = self.x.partition_point(|s| *s < x).clamp(1, self.x.len() - 1);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        if x1 == x0 {
            return v[k];
        }
        v[k - 1] + (x - x0) / (x1 - x0) * (v[k] - v[k - 1])
    }

    fn cum_at(&self, x: T) -> Option<T> {
        let k = self.x.partition_point(|s| *s < x).clamp(1, self.x.len() - 1);
        let (c0, c1) = (self.cum[k - 1]?, self.cum[k]?);
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        if x1 == x0 {
            return Some(c1);
        }
        Some(c0 + (x - x0) / (x1 - x0) * (c1 - c0))
    }

    fn total(&self) -> Option<T> {
        self.cum.iter().flatten().copied().reduce(T::max)
    }
}

/// Splits a trace at the node. At a duplicated node abscissa the first copy
/// closes the left side and the second opens the right side.
fn split_trace<T: Real>(pb: &Problem<T>, m: &SolutionMesh<T>) -> Option<(Branch<T>, Branch<T>)> {
    let z = pb.weight.z();
    let n = m.len();
    if n < 4 || m.x[0] >= z || m.x[n - 1] <= z {
        return None;
    }
    let first_ge = m.x.partition_point(|x| *x < z);
    let first_gt = m.x.partition_point(|x| *x <= z);
    let interp = |k: usize| {
        let (x0, x1) = (m.x[k - 1], m.x[k]);
        m.u[k - 1] + (z - x0) / (x1 - x0) * (m.u[k] - m.u[k - 1])
    };
    let (ul, ur) = if first_ge < first_gt {
        (m.u[first_ge], m.u[first_gt - 1])
    } else {
        let v = interp(first_gt);
        (v, v)
    };
    let mut lx: Vec<T> = m.x[..first_ge].to_vec();
    let mut lu: Vec<T> = m.u[..first_ge].to_vec();
    lx.push(z);
    lu.push(ul);
    let mut rx = vec![z];
    let mut ru = vec![ur];
    rx.extend_from_slice(&m.x[first_gt..]);
    ru.extend_from_slice(&m.u[first_gt..]);
    Some((Branch::new(pb, lx, lu, Side::Left), Branch::new(pb, rx, ru, Side::Right)))
}

fn witness_search<T: Real>(pb: &Problem<T>, left: &Branch<T>, right: &Branch<T>) -> Option<Witness<T>> {
    let z = pb.weight.z();
    let lo = left.x.iter().zip(&left.cum).find(|(_, c)| c.is_some()).map(|(x, _)| *x)?;
    let hi = right.x.iter().zip(&right.cum).filter(|(_, c)| c.is_some()).map(|(x, _)| *x).last()?;
    if !(lo < z && hi > z) {
        return None;
    }
    let r = T::lit(WITNESS_RATIO);
    let slack = T::one() + T::lit(WITNESS_SLACK);
    let levels: Vec<T> = (1..=WITNESS_LEVELS).map(|k| r.powi(k as i32)).collect();
    for &dl in &levels {
        let x1 = z - (z - lo) * dl;
        let Some(jl) = left.cum_at(x1) else { continue };
        let u1 = left.interp(&left.u, x1);
        for &dr in &levels {
            let x2 = z + (hi - z) * dr;
            let Some(jr) = right.cum_at(x2) else { continue };
            let drop = u1 - right.interp(&right.u, x2);
            let integral = jl + jr;
            if drop > T::zero() && integral.is_finite() && integral <= slack * drop {
                return Some(Witness { x1, x2, integral, drop });
            }
        }
    }
    None
}

/// Regularity verdict at the node. Without a trace the verdict depends on
/// the weight alone (and on `lambda` through the smallness guard), so
/// `JumpCertified` is only issued when a trace is supplied.
pub fn classify<T: Real>(pb: &Problem<T>, trace: Option<&SolutionMesh<T>>) -> Result<RegularityVerdict<T>> {
    let w = &pb.weight;
    w.check_a2()?;
    let tol = T::lit(DEFAULT_CRITERION_TOL);
    let i_left = criterion_integral(w, Side::Left, tol)?;
    let i_right = criterion_integral(w, Side::Right, tol)?;
    let mut v = RegularityVerdict { tag: VerdictTag::Inconclusive, i_left, i_right, h_left: None, h_right: None, witness: None };
    let sides = trace.and_then(|m| split_trace(pb, m));
    if let Some((l, r)) = &sides {
        v.h_left = l.total();
        v.h_right = r.total();
    }
    if i_left.is_infinite() || i_right.is_infinite() {
        v.tag = VerdictTag::RegularByCriterion;
    } else if smallness_guard(pb) {
        v.tag = VerdictTag::RegularBySmallness;
    } else if let Some((l, r)) = &sides {
        v.witness = witness_search(pb, l, r);
        if v.witness.is_some() {
            v.tag = VerdictTag::JumpCertified;
        }
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentReason {
    /// `lambda ||f||_inf ||a||_1 < 1`.
    Smallness,
    /// A criterion integral diverges: every solution is regular.
    ForbiddenByCriterion,
    NoLeftPiece,
    NoRightPiece,
    /// Both pieces exist but every right piece ends above the left one.
    InadmissibleJump,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSolution<T> {
    pub lambda: T,
    /// `u(0)` and `u(1)`.
    pub s0: T,
    pub u1: T,
    pub u_left_z: T,
    pub u_right_z: T,
    pub jump: T,
    pub left: SolutionMesh<T>,
    pub right: SolutionMesh<T>,
    /// `lambda int_0^z a f(u) - 1` and `lambda int_z^1 (-a) f(u) - 1`, by
    /// quadrature along the arc.
    pub flux_left: T,
    pub flux_right: T,
    /// Curvature residuals on `[0, z - gap]` and `[z + gap, 1]`.
    pub residual_left: T,
    pub residual_right: T,
}

impl<T: Real> SingularSolution<T> {
    /// Both pieces on one mesh; the node appears twice.
    pub fn mesh(&self) -> SolutionMesh<T> {
        let mut m = self.left.clone();
        for i in 0..self.right.len() {
            m.push(self.right.x[i], self.right.u[i], self.right.theta[i]);
        }
        m
    }

    pub fn is_monotone(&self) -> bool {
        let m = self.mesh();
        m.u.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SingularOutcome<T> {
    Found(SingularSolution<T>),
    Absent { reason: AbsentReason },
}

impl<T: Real> SingularOutcome<T> {
    pub fn solution(&self) -> Option<&SingularSolution<T>> {
        match self {
            SingularOutcome::Found(s) => Some(s),
            SingularOutcome::Absent { .. } => None,
        }
    }
}

fn piece_spec<T: Real>(pb: &Problem<T>, side: Side, height: T) -> PathSpec<T> {
    let (x0, x_target) = match side {
        Side::Left => (T::zero(), pb.weight.z()),
        Side::Right => (T::one(), pb.weight.z()),
    };
    PathSpec { x0, u0: height, theta0: T::zero(), x_target, record: false, max_arclength: default_arclength(height), dead_core: false, extended: false }
}

/// Flux defect at the node: `-sin(theta(z)) - 1` when the node is reached,
/// and the relative distance still to go when the path turns vertical early.
fn flux_gap<T: Real>(pb: &Problem<T>, side: Side, height: T) -> Result<Option<T>> {
    let path = integrate_arc(pb, &piece_spec(pb, side, height))?;
    let z = pb.weight.z();
    Ok(match path.termination {
        Termination::Reached => Some(-path.end.theta.sin() - T::one()),
        Termination::Vertical { x, theta, .. } if theta < T::zero() => Some(match side {
            Side::Left => (z - x) / z,
            Side::Right => (x - z) / (T::one() - z),
        }),
        _ => None,
    })
}

/// Heights at which the piece arrives at the node with a vertical tangent.
/// Each is the reaching side of a bracket refined to machine resolution.
pub fn piece_roots<T: Real>(pb: &Problem<T>, side: Side, scan: (f64, f64, usize)) -> Result<Vec<T>> {
    let hs = logspace(T::lit(scan.0), T::lit(scan.1), scan.2);
    let gs: Vec<Option<T>> = hs.par_iter().map(|&h| flux_gap(pb, side, h)).collect::<Result<_>>()?;
    let brackets: Vec<(T, T)> = (0..hs.len() - 1)
        .filter_map(|i| match (gs[i], gs[i + 1]) {
            (Some(a), Some(b)) if (a <= T::zero()) != (b <= T::zero()) => Some((hs[i], hs[i + 1])),
            _ => None,
        })
        .collect();
    let roots: Vec<Option<T>> = brackets
        .par_iter()
        .map(|&(a, b)| -> Result<Option<T>> {
            let (mut lo, mut hi) = (a, b);
            let lo_reaches = flux_gap(pb, side, lo)?.is_some_and(|g| g <= T::zero());
            for _ in 0..200 {
                let mid = (lo.ln() + (hi.ln() - lo.ln()) / T::lit(2.0)).exp();
                if !(mid > lo && mid < hi) {
                    break;
                }
                match flux_gap(pb, side, mid)? {
                    Some(g) if g == T::zero() => return Ok(Some(mid)),
                    Some(g) if (g <= T::zero()) == lo_reaches => lo = mid,
                    Some(_) => hi = mid,
                    None => return Ok(None),
                }
            }
            Ok(Some(if lo_reaches { lo } else { hi }))
        })
        .collect::<Result<_>>()?;
    Ok(roots.into_iter().flatten().collect())
}

/// Integral over `[a, b]` of the quadratic through `(s[k], g[k])`, by
/// two-point Gauss (exact for the interpolant).
fn quadratic_piece<T: Real>(s: [T; 3], g: [T; 3], a: T, b: T) -> T {
    let lag = |t: T| {
        (0..3).fold(T::zero(), |acc, i| {
            let mut l = g[i];
            for j in (0..3).filter(|&j| j != i) {
                l = l * (t - s[j]) / (s[i] - s[j]);
            }
            acc + l
        })
    };
    let (mid, half) = ((a + b) / T::lit(2.0), (b - a) / T::lit(2.0));
    let node = half / T::lit(3.0).sqrt();
    half * (lag(mid - node) + lag(mid + node))
}

/// `lambda int |a| f(u) dx` along a recorded arc, by composite quadratic
/// interpolation in arclength, where `|a| f(u) cos(theta)` is smooth.
/// Duplicated breakpoint samples split the arc into runs.
fn arc_flux<T: Real>(pb: &Problem<T>, path: &ArcPath<T>) -> T {
    let w = &pb.weight;
    let pts = &path.points;
    let mut total = T::zero();
    let mut start = 0;
    for end in 1..=pts.len() {
        if end < pts.len() && pts[end].s != pts[end - 1].s {
            continue;
        }
        let run = &pts[start..end];
        start = end;
        if run.len() < 2 {
            continue;
        }
        let seg = &w.segments()[w.segment_index((run[0].x + run[run.len() - 1].x) / T::lit(2.0))];
        let s: Vec<T> = run.iter().map(|p| (p.s - run[0].s).abs()).collect();
        let g: Vec<T> = run.iter().map(|p| seg.eval(p.x).abs() * pb.f.eval(p.u) * p.theta.cos()).collect();
        let n = run.len();
        if n == 2 {
            total = total + (g[0] + g[1]) * (s[1] - s[0]) / T::lit(2.0);
            continue;
        }
        let mut i = 0;
        while i + 2 < n {
            total = total + quadratic_piece([s[i], s[i + 1], s[i + 2]], [g[i], g[i + 1], g[i + 2]], s[i], s[i + 2]);
            i += 2;
        }
        if i + 1 < n {
            total = total + quadratic_piece([s[n - 3], s[n - 2], s[n - 1]], [g[n - 3], g[n - 2], g[n - 1]], s[n - 2], s[n - 1]);
        }
    }
    pb.lambda * total
}

/// Constructs a solution with vertical tangents and a downward jump at the
/// node. The left piece is the largest height reaching the node vertically;
/// the right piece is the smallest end value whose node value does not exceed
/// the left one.
pub fn solve_singular<T: Real>(pb: &Problem<T>) -> Result<SingularOutcome<T>> {
    pb.check_solvable()?;
    pb.weight.check_a2()?;
    let absent = |reason| Ok(SingularOutcome::Absent { reason });
    if smallness_guard(pb) {
        return absent(AbsentReason::Smallness);
    }
    let tol = T::lit(DEFAULT_CRITERION_TOL);
    if criterion_integral(&pb.weight, Side::Left, tol)?.is_infinite()
        || criterion_integral(&pb.weight, Side::Right, tol)?.is_infinite()
    {
        return absent(AbsentReason::ForbiddenByCriterion);
    }
    let (left_roots, right_roots) =
        rayon::join(|| piece_roots(pb, Side::Left, LEFT_SCAN), || piece_roots(pb, Side::Right, RIGHT_SCAN));
    let Some(s0) = left_roots?.into_iter().reduce(T::max) else {
        return absent(AbsentReason::NoLeftPiece);
    };
    let mut right_roots = right_roots?;
    if right_roots.is_empty() {
        return absent(AbsentReason::NoRightPiece);
    }
    right_roots.sort_by(|a, b| a.partial_cmp(b).expect("finite heights"));
    let left_path = integrate_arc(pb, &piece_spec(pb, Side::Left, s0).recording())?;
    let u_left_z = left_path.end.u;
    for t in right_roots {
        let right_path = integrate_arc(pb, &piece_spec(pb, Side::Right, t).recording())?;
        let u_right_z = right_path.end.u;
        if u_right_z > u_left_z {
            continue;
        }
        let z = pb.weight.z();
        let gap = T::lit(NODE_GAP);
        let left = left_path.mesh();
        let right = right_path.mesh();
        return Ok(SingularOutcome::Found(SingularSolution {
            lambda: pb.lambda,
            s0,
            u1: t,
            u_left_z,
            u_right_z,
            jump: u_left_z - u_right_z,
            flux_left: arc_flux(pb, &left_path) - T::one(),
            flux_right: arc_flux(pb, &right_path) - T::one(),
            residual_left: curvature_residual(pb, &left.window(T::zero(), z - gap))?,
            residual_right: curvature_residual(pb, &right.window(z + gap, T::one()))?,
            left,
            right,
        }));
    }
    absent(AbsentReason::InadmissibleJump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Nonlinearity, Weight};

    fn jump_problem(lambda: f64) -> Problem<f64> {
        Problem::new(lambda, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap())
    }

    #[test]
    fn smallness_arithmetic() {
        let w = Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap();
        assert!((w.abs_integral() - 1.6f64).abs() < 1e-15);
        let f = Nonlinearity::prototype(2.0, 0.5, 1.0).unwrap();
        assert!(smallness_guard(&Problem::new(0.0, w.clone(), f.clone())));
        assert!(smallness_guard(&Problem::new(0.5, w.clone(), f.clone())));
        assert!(!smallness_guard(&Problem::new(10.0, w, f)));
    }

    #[test]
    fn singular_solution_at_fifty() {
        let pb = jump_problem(50.0);
        let out = solve_singular(&pb).unwrap();
        let s = out.solution().expect("singular solution");
        assert!(s.jump > 0.0);
        assert!(s.flux_left.abs() <= 1e-6, "left flux {}", s.flux_left);
        assert!(s.flux_right.abs() <= 1e-6, "right flux {}", s.flux_right);
        assert!(s.residual_left <= 1e-5, "left residual {}", s.residual_left);
        assert!(s.residual_right <= 1e-5, "right residual {}", s.residual_right);
        assert!(s.is_monotone());
        let v = classify(&pb, Some(&s.mesh())).unwrap();
        assert_eq!(v.tag, VerdictTag::JumpCertified);
        let wit = v.witness.unwrap();
        assert!(wit.x1 < 0.4 && wit.x2 > 0.4 && wit.integral <= 1.01 * wit.drop);
    }

    #[test]
    fn absent_for_small_lambda() {
        let out = solve_singular(&jump_problem(0.5)).unwrap();
        assert_eq!(out, SingularOutcome::Absent { reason: AbsentReason::Smallness });
        assert_eq!(classify(&jump_problem(0.5), None).unwrap().tag, VerdictTag::RegularBySmallness);
    }

    #[test]
    fn refused_for_differentiable_weight() {
        let w = Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap();
        let pb = Problem::new(50.0, w, Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap());
        assert_eq!(solve_singular(&pb).unwrap(), SingularOutcome::Absent { reason: AbsentReason::ForbiddenByCriterion });
        for lambda in [50.0, 500.0] {
            assert_eq!(classify(&pb.with_lambda(lambda), None).unwrap().tag, VerdictTag::RegularByCriterion);
        }
    }

    #[test]
    fn no_certificate_without_trace() {
        let v = classify(&jump_problem(50.0), None).unwrap();
        assert_eq!(v.tag, VerdictTag::Inconclusive);
        assert!(v.witness.is_none() && v.h_left.is_none());
    }

    #[test]
    fn criterion_scaling_under_weight_multiple() {
        let pb = jump_problem(50.0);
        let scaled = Weight::piecewise_constant(0.4, 4.0, 8.0).unwrap();
        let a = classify(&pb, None).unwrap();
        let b = classify(&Problem::new(50.0, scaled, pb.f.clone()), None).unwrap();
        let ratio = b.i_left.value().unwrap() / a.i_left.value().unwrap();
        assert!((ratio - 0.5).abs() < 1e-10);
        assert_eq!(a.tag, b.tag);
    }
}
