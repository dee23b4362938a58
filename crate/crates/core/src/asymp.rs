//! Large-lambda profile laws and small-solution scaling, measured on
//! computed solution families by log-log fits.
//!
//! For solutions separated away from zero the profile grows like
//! `lambda^(1/q)` where `a > 0`, is bounded above by `C lambda^(-1/p)` where
//! `a < 0`, and is flat away from the node. Small solutions for `p > 1`
//! scale like `lambda^(-1/(p-1))` towards the semilinear limit `-v'' = a v^p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Problem, SolutionMesh};
use crate::ode::{land_on, Dopri5, OdeSystem, Point, Stepper};
use crate::scalar::{logspace, Real};
use crate::shoot::find_regular;
use crate::singular::solve_singular;

/// Fits below this coefficient of determination are inconclusive.
pub const MIN_R2: f64 = 0.98;

/// Upper end of the height scan for members separated away from zero.
const FAR_SCAN: (f64, usize) = (1e12, 64);

/// Scan for the smallest solution: `[SMALL_FLOOR, M]` with this many points.
const SMALL_FLOOR: f64 = 1e-12;
const SMALL_POINTS: usize = 96;

pub fn default_ladder<T: Real>() -> Vec<T> {
    logspace(T::lit(1e2), T::lit(1e4), 5)
}

/// `0.1 min(z, 1 - z)`.
pub fn default_eta<T: Real>(pb: &Problem<T>) -> T {
    let z = pb.weight.z();
    T::lit(0.1) * z.min(T::one() - z)
}

fn check_ladder<T: Real>(ladder: &[T]) -> Result<()> {
    if ladder.len() < 4 {
        return Err(Error::Precondition(format!("ladder needs at least 4 values, got {}", ladder.len())));
    }
    if !(ladder[0] > T::zero()) || ladder.windows(2).any(|w| !(w[1] > w[0])) || ladder.iter().any(|l| !l.is_finite()) {
        return Err(Error::Precondition("ladder must be positive, finite and strictly increasing".into()));
    }
    Ok(())
}

fn check_eta<T: Real>(pb: &Problem<T>, eta: T) -> Result<()> {
    let z = pb.weight.z();
    let cap = z.min(T::one() - z) * T::lit(0.5);
    if !(eta > T::zero() && eta < cap) {
        return Err(Error::Precondition(format!("eta = {eta} must lie in (0, {cap})")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Regular,
    Singular,
}

/// A solution at one ladder value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Member<T> {
    pub lambda: T,
    pub kind: MemberKind,
    pub mesh: SolutionMesh<T>,
    pub u0: T,
}

/// A solution with `u(0) > 2M`: the largest regular one if any, otherwise the
/// singular construction (jump weights only).
pub fn family_member<T: Real>(pb: &Problem<T>, lambda: T) -> Result<Member<T>> {
    let pb = pb.with_lambda(lambda);
    let floor = T::lit(2.0) * pb.f.m();
    let regular = find_regular(&pb, floor, T::lit(FAR_SCAN.0), FAR_SCAN.1)?;
    if let Some(s) = regular.into_iter().filter(|s| s.s0 > floor).max_by(|a, b| a.s0.partial_cmp(&b.s0).unwrap()) {
        return Ok(Member { lambda, kind: MemberKind::Regular, u0: s.s0, mesh: s.mesh });
    }
    if pb.weight.has_node_jump() {
        if let Some(s) = solve_singular(&pb)?.solution() {
            if s.s0 > floor {
                return Ok(Member { lambda, kind: MemberKind::Singular, u0: s.s0, mesh: s.mesh() });
            }
        }
    }
    Err(Error::Precondition(format!("no solution separated away from zero at lambda = {lambda}")))
}

/// Members for every ladder value, computed concurrently.
pub fn family<T: Real>(pb: &Problem<T>, ladder: &[T]) -> Result<Vec<Member<T>>> {
    check_ladder(ladder)?;
    ladder.par_iter().map(|&l| family_member(pb, l)).collect()
}

/// Least-squares line through `(log lambda, log value)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit<T> {
    pub lambda_ladder: Vec<T>,
    pub probe_x: Option<T>,
    pub values: Vec<T>,
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

impl<T: Real> RateFit<T> {
    pub fn new(ladder: &[T], probe_x: Option<T>, values: Vec<T>) -> Result<Self> {
        check_ladder(ladder)?;
        if values.len() != ladder.len() || values.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::NonFinite(format!("log-log fit needs positive finite values, got {values:?}")));
        }
        let xs: Vec<T> = ladder.iter().map(|l| l.ln()).collect();
        let ys: Vec<T> = values.iter().map(|v| v.ln()).collect();
        let k = T::from_usize_lossy(xs.len());
        let mx = xs.iter().copied().sum::<T>() / k;
        let my = ys.iter().copied().sum::<T>() / k;
        let sxx: T = xs.iter().map(|x| (*x - mx) * (*x - mx)).sum();
        let sxy: T = xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)).sum();
        let syy: T = ys.iter().map(|y| (*y - my) * (*y - my)).sum();
        let slope = sxy / sxx;
        let r2 = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
        Ok(Self { lambda_ladder: ladder.to_vec(), probe_x, values, slope, intercept: my - slope * mx, r2 })
    }

    /// Compares the slope with `expected` at relative tolerance `rel`.
    pub fn check(&self, expected: T, rel: T) -> Check {
        if self.r2 < T::lit(MIN_R2) {
            Check::Inconclusive
        } else if (self.slope - expected).abs() <= rel * expected.abs() {
            Check::Pass
        } else {
            Check::Fail
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    Inconclusive,
}

/// Probe abscissae `(z - eta) / 2` and `z + eta + (1 - z - eta) / 2`.
pub fn probes<T: Real>(pb: &Problem<T>, eta: T) -> (T, T) {
    let z = pb.weight.z();
    let half = T::lit(0.5);
    ((z - eta) * half, z + eta + (T::one() - z - eta) * half)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport<T> {
    pub eta: T,
    pub kinds: Vec<MemberKind>,
    pub left: RateFit<T>,
    pub right: RateFit<T>,
    /// `u(x_left) lambda^(-1/q)` along the ladder.
    pub left_scaled: Vec<T>,
    /// `u(x_right) lambda^(1/p)` along the ladder.
    pub right_scaled: Vec<T>,
}

impl<T: Real> RateReport<T> {
    /// The lower bound `u >= C lambda^(1/q)` is not losing ground: the scaled
    /// value at the top keeps at least half its size at the bottom.
    pub fn left_bound_holds(&self) -> bool {
        self.left_scaled.iter().all(|v| *v >= self.left_scaled[0] * T::lit(0.5))
    }

    /// The upper bound `u <= C lambda^(-1/p)`: the scaled value never exceeds
    /// twice its size at the bottom.
    pub fn right_bound_holds(&self) -> bool {
        self.right_scaled.iter().all(|v| *v <= self.right_scaled[0] * T::lit(2.0))
    }
}

fn rate_report<T: Real>(pb: &Problem<T>, members: &[Member<T>], eta: T) -> Result<RateReport<T>> {
    let ladder: Vec<T> = members.iter().map(|m| m.lambda).collect();
    let (xl, xr) = probes(pb, eta);
    let ul: Vec<T> = members.iter().map(|m| m.mesh.interp_u(xl)).collect();
    let ur: Vec<T> = members.iter().map(|m| m.mesh.interp_u(xr)).collect();
    let (p, q) = (pb.f.p(), pb.f.q());
    Ok(RateReport {
        eta,
        kinds: members.iter().map(|m| m.kind).collect(),
        left_scaled: ul.iter().zip(&ladder).map(|(u, l)| *u * l.powf(-T::one() / q)).collect(),
        right_scaled: ur.iter().zip(&ladder).map(|(u, l)| *u * l.powf(T::one() / p)).collect(),
        left: RateFit::new(&ladder, Some(xl), ul)?,
        right: RateFit::new(&ladder, Some(xr), ur)?,
    })
}

/// Grow-up and decay fits at the two probes.
pub fn grow_decay_rates<T: Real>(pb: &Problem<T>, ladder: &[T], eta: T) -> Result<RateReport<T>> {
    check_eta(pb, eta)?;
    rate_report(pb, &family(pb, ladder)?, eta)
}

/// Largest `|u'|` on `[0, z - eta]` and `[z + eta, 1]`.
pub fn max_slope_off_node<T: Real>(mesh: &SolutionMesh<T>, z: T, eta: T) -> T {
    let du = mesh.du();
    mesh.x
        .iter()
        .zip(&du)
        .filter(|(x, _)| **x <= z - eta || **x >= z + eta)
        .fold(T::zero(), |m, (_, d)| m.max(d.abs()))
}

/// First abscissa with `u = level` on a decreasing profile; a crossing inside
/// a jump is placed at the jump.
pub fn crossing<T: Real>(mesh: &SolutionMesh<T>, level: T) -> Option<T> {
    let i = mesh.u.iter().position(|u| *u <= level)?;
    if i == 0 {
        return Some(mesh.x[0]);
    }
    let (x0, x1, u0, u1) = (mesh.x[i - 1], mesh.x[i], mesh.u[i - 1], mesh.u[i]);
    if x1 == x0 {
        return Some(x0);
    }
    Some(x0 + (x1 - x0) * (u0 - level) / (u0 - u1))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatnessReport<T> {
    pub eta: T,
    pub lambda_ladder: Vec<T>,
    /// `max |u'|` on `[0, z - eta] U [z + eta, 1]` per member.
    pub max_slope: Vec<T>,
    pub slope_fit: RateFit<T>,
    /// `x_n` with `u(x_n) = M` per member.
    pub node: Vec<T>,
    /// `u((z - eta) / 2) / u(0)` per member.
    pub plateau_ratio: Vec<T>,
    pub z: T,
}

impl<T: Real> FlatnessReport<T> {
    /// No growth trend: fitted exponent of `max |u'|` at most `0.1`.
    pub fn flat(&self) -> bool {
        self.slope_fit.slope <= T::lit(0.1)
    }

    /// `|x_n - z|` smaller at the top of the ladder than at the bottom, or
    /// already zero (transition inside the jump).
    pub fn node_converges(&self) -> bool {
        let d = |x: T| (x - self.z).abs();
        let (first, last) = (d(self.node[0]), d(*self.node.last().unwrap()));
        last < first || last == T::zero()
    }

    /// `u((z - eta) / 2) / u(0)` within 5% of one at the top.
    pub fn plateau_flat(&self) -> bool {
        (*self.plateau_ratio.last().unwrap() - T::one()).abs() <= T::lit(0.05)
    }
}

fn flatness_report<T: Real>(pb: &Problem<T>, members: &[Member<T>], eta: T) -> Result<FlatnessReport<T>> {
    let z = pb.weight.z();
    let m = pb.f.m();
    let ladder: Vec<T> = members.iter().map(|m| m.lambda).collect();
    let max_slope: Vec<T> = members.iter().map(|mb| max_slope_off_node(&mb.mesh, z, eta)).collect();
    let node = members
        .iter()
        .map(|mb| crossing(&mb.mesh, m).ok_or_else(|| Error::Precondition(format!("profile stays above M at lambda = {}", mb.lambda))))
        .collect::<Result<Vec<_>>>()?;
    let (xl, _) = probes(pb, eta);
    Ok(FlatnessReport {
        eta,
        slope_fit: RateFit::new(&ladder, None, max_slope.clone())?,
        plateau_ratio: members.iter().map(|mb| mb.mesh.interp_u(xl) / mb.u0).collect(),
        lambda_ladder: ladder,
        max_slope,
        node,
        z,
    })
}

pub fn flatness_and_node<T: Real>(pb: &Problem<T>, ladder: &[T], eta: T) -> Result<FlatnessReport<T>> {
    check_eta(pb, eta)?;
    flatness_report(pb, &family(pb, ladder)?, eta)
}

/// Both reports from one family computation.
pub fn profile_laws<T: Real>(pb: &Problem<T>, ladder: &[T], eta: T) -> Result<(RateReport<T>, FlatnessReport<T>)> {
    check_eta(pb, eta)?;
    let members = family(pb, ladder)?;
    Ok((rate_report(pb, &members, eta)?, flatness_report(pb, &members, eta)?))
}

struct Semilinear<'a, T> {
    pb: &'a Problem<T>,
    seg: usize,
    p: T,
}

impl<T: Real> OdeSystem<T, 2> for Semilinear<'_, T> {
    fn rhs(&self, x: T, y: &[T; 2]) -> [T; 2] {
        let a = self.pb.weight.segments()[self.seg].eval(x);
        [y[1], -a * y[0].max(T::zero()).powf(self.p)]
    }
}

/// Outcome of one shot of the limit problem: `v'(1)`, or `None` if `v`
/// reached zero first.
fn limit_shot<T: Real>(pb: &Problem<T>, p: T, c: T) -> Result<(Option<T>, T)> {
    let cfg = Dopri5::new(T::lit(1e-11), c * T::lit(1e-13));
    let mut y = [c, T::zero()];
    let mut sup = c;
    for (seg, s) in pb.weight.segments().iter().enumerate() {
        let sys = Semilinear { pb, seg, p };
        let mut st = Stepper::new(&sys, cfg, s.start, y, (s.end - s.start) * T::lit(1e-3));
        while st.current().t < s.end {
            let (p0, p1): (Point<T, 2>, Point<T, 2>) = st.step(s.end - st.current().t)?;
            if p1.y[0] <= T::zero() {
                let hit = land_on(&sys, &p0, &p1, |q: &Point<T, 2>| q.y[0]);
                return Ok((None, sup.max(hit.y[0])));
            }
            sup = sup.max(p1.y[0]);
        }
        y = st.current().y;
    }
    Ok((Some(y[1]), sup))
}

/// Positive Neumann solution of `-v'' = a v^p`; returns `(v(0), ||v||_inf)`.
pub fn limit_solution<T: Real>(pb: &Problem<T>, p: T) -> Result<(T, T)> {
    if !(p > T::one()) {
        return Err(Error::Precondition(format!("limit problem needs p > 1, got {p}")));
    }
    // v'(1) > 0 for small heights (negative mean); reaching zero counts as negative.
    let sign = |c: T| -> Result<bool> {
        Ok(match limit_shot(pb, p, c)?.0 {
            Some(d) => d > T::zero(),
            None => false,
        })
    };
    let grid = logspace(T::lit(1e-6), T::lit(1e6), 49);
    let mut lo = None;
    for w in grid.windows(2) {
        if sign(w[0])? && !sign(w[1])? {
            lo = Some((w[0], w[1]));
            break;
        }
    }
    let (mut a, mut b) = lo.ok_or_else(|| Error::BracketNotFound("limit problem height".into()))?;
    for _ in 0..200 {
        let m = (a * b).sqrt();
        if m <= a || m >= b {
            break;
        }
        if sign(m)? { a = m } else { b = m }
        if (b - a) <= T::lit(1e-13) * b {
            break;
        }
    }
    let c = (a * b).sqrt();
    let (_, sup) = limit_shot(pb, p, c)?;
    Ok((c, sup))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmallScaling<T> {
    pub fit: RateFit<T>,
    pub expected: T,
    /// `||u_lambda||_inf lambda^(1/(p-1))` per ladder value.
    pub scaled: Vec<T>,
    /// `||v||_inf` of the limit solution.
    pub limit_sup: T,
}

impl<T: Real> SmallScaling<T> {
    /// Largest relative deviation of the scaled norms from the limit.
    pub fn limit_error(&self) -> T {
        self.scaled.iter().fold(T::zero(), |m, s| m.max((*s / self.limit_sup - T::one()).abs()))
    }
}

/// Sup-norm of the smallest regular solution along the ladder against
/// `lambda^(-1/(p-1))`, and the rescaled norms against the limit problem.
pub fn small_branch_scaling<T: Real>(pb: &Problem<T>, ladder: &[T]) -> Result<SmallScaling<T>> {
    check_ladder(ladder)?;
    let p = pb.f.p();
    if !(p > T::one()) {
        return Err(Error::Precondition(format!("small-branch scaling needs p > 1, got {p}")));
    }
    let m = pb.f.m();
    let norms = ladder
        .par_iter()
        .map(|&l| {
            let sols = find_regular(&pb.with_lambda(l), T::lit(SMALL_FLOOR), m, SMALL_POINTS)?;
            sols.iter()
                .map(|s| s.sup_norm)
                .fold(None, |b: Option<T>, v| Some(b.map_or(v, |b| b.min(v))))
                .ok_or_else(|| Error::Precondition(format!("no small solution at lambda = {l}")))
        })
        .collect::<Result<Vec<T>>>()?;
    let e = T::one() / (p - T::one());
    let (_, limit_sup) = limit_solution(pb, p)?;
    Ok(SmallScaling {
        scaled: norms.iter().zip(ladder).map(|(n, l)| *n * l.powf(e)).collect(),
        fit: RateFit::new(ladder, None, norms)?,
        expected: -e,
        limit_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Nonlinearity, Weight};

    fn jump(p: f64) -> Problem<f64> {
        Problem::new(1.0, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::prototype(p, 0.5, 1.0).unwrap())
    }

    #[test]
    fn fit_recovers_power_law() {
        let ladder = default_ladder::<f64>();
        let fit = RateFit::new(&ladder, None, ladder.iter().map(|l| 3.0 * l.powf(-0.7)).collect()).unwrap();
        assert!((fit.slope + 0.7).abs() < 1e-12 && (fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert_eq!(fit.check(-0.7, 0.01), Check::Pass);
        let noisy: Vec<f64> = ladder.iter().enumerate().map(|(i, l)| l * if i % 2 == 0 { 1.0 } else { 30.0 }).collect();
        assert_eq!(RateFit::new(&ladder, None, noisy).unwrap().check(1.0, 0.15), Check::Inconclusive);
    }

    #[test]
    fn ladder_and_eta_preconditions() {
        let pb = jump(1.0);
        assert!(grow_decay_rates(&pb, &[0.0, 0.0, 0.0, 0.0], 0.01).is_err());
        assert!(grow_decay_rates(&pb, &[1e2, 1e3, 1e4], 0.01).is_err());
        assert!(grow_decay_rates(&pb, &default_ladder(), 0.5).is_err());
    }

    #[test]
    fn crossing_inside_jump_sits_at_jump() {
        let mesh = SolutionMesh::from_slope(vec![0.0, 0.4, 0.4, 1.0], vec![5.0, 4.0, 0.5, 0.1], &[0.0; 4]);
        assert_eq!(crossing(&mesh, 1.0), Some(0.4));
        let smooth = SolutionMesh::from_slope(vec![0.0f64, 0.5, 1.0], vec![2.0, 1.5, 0.5], &[0.0; 3]);
        assert!((crossing(&smooth, 1.0).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn limit_problem_solution_is_neumann() {
        let pb = jump(2.0);
        let (c, sup) = limit_solution(&pb, 2.0).unwrap();
        let (d, _) = limit_shot(&pb, 2.0, c).unwrap();
        assert!(d.unwrap().abs() < 1e-8 * c);
        assert!(sup >= c);
        // v -> k v solves -v'' = (a / k^(p-1)) v^p, so scaling a by 4 halves v for p = 3.
        let (c3, _) = limit_solution(&jump(3.0), 3.0).unwrap();
        let w4 = Weight::piecewise_constant(0.4, 4.0, 8.0).unwrap();
        let (c3w, _) = limit_solution(&Problem::new(1.0, w4, jump(3.0).f), 3.0).unwrap();
        assert!((c3w / c3 - 0.5).abs() < 1e-8);
    }
}
