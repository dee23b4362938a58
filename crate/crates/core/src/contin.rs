//! Pseudo-arclength continuation of the shooting residual `theta(1)` in
//! `(lambda, u(0))`, and bifurcation diagrams.
//!
//! The curve is followed in the scaled coordinates `(lambda / lambda_ref,
//! ln u(0))`, where `lambda_ref = max(|lambda_start|, 1)`; step sizes refer to
//! this plane. Since solutions are decreasing, `u(0)` is also the sup norm.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::principal_neumann;
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::model::Problem;
use crate::scalar::Real;
use crate::shoot::{find_regular, integrate_arc, PathSpec, Termination, NEAR_SINGULAR_COS, THETA_TOL};

/// `|theta(1)|` accepted for a continuation start.
pub const START_TOL: f64 = 1e-6;
/// `|theta(1)|` accepted when Newton stagnates at machine resolution, which
/// happens where the shot is exponentially sensitive to its height.
pub const POINT_TOL: f64 = 1e-8;
/// Relative finite-difference step of the Jacobian.
const FD_STEP: f64 = 1e-6;
const MAX_NEWTON: usize = 12;
const MAX_DAMPING: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointKind {
    Regular,
    NearSingular,
}

impl PointKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointKind::Regular => "regular",
            PointKind::NearSingular => "near-singular",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint<T> {
    pub lambda: T,
    pub s0: T,
    pub sup_norm: T,
    /// `max |u'|`, from the smallest `cos(theta)` along the path.
    pub deriv_norm: T,
    pub theta1: T,
    pub min_cos: T,
    pub kind: PointKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    FromLambda0,
    FromZeroLine,
    FromLargeLambdaSmall,
    Manual,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StopReason<T> {
    MaxPoints,
    LambdaMax { lambda: T },
    /// `u(0)` fell below `s_min`: the branch met the line of trivial solutions.
    TrivialLine { lambda: T },
    HeightMax { s0: T },
    NegativeLambda,
    /// The corrector failed with the step at its minimum.
    CorrectorFailed { lambda: T, s0: T },
    /// The corrected point solves the extended shooting problem but is not
    /// a positive graph (the path turns vertical or crosses zero).
    LeftSolutionSet { lambda: T, s0: T },
}

/// Which way to leave the start point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    GrowS0,
    ShrinkS0,
    GrowLambda,
    ShrinkLambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions<T> {
    pub h0: T,
    pub h_min: T,
    pub h_max: T,
    pub max_points: usize,
    pub lambda_max: T,
    pub s_min: T,
    pub s_max: T,
    pub orientation: Orientation,
}

impl<T: Real> Default for TraceOptions<T> {
    fn default() -> Self {
        Self {
            h0: T::lit(0.05),
            h_min: T::lit(1e-6),
            h_max: T::lit(0.5),
            max_points: 2000,
            lambda_max: T::lit(1e3),
            s_min: T::lit(1e-7),
            s_max: T::lit(1e9),
            orientation: Orientation::GrowS0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch<T> {
    pub origin: Origin,
    pub points: Vec<BranchPoint<T>>,
    /// Indices where `lambda` turns back.
    pub folds: Vec<usize>,
    pub terminated_by: StopReason<T>,
}

impl<T: Real> Branch<T> {
    pub fn near_singular_count(&self) -> usize {
        self.points.iter().filter(|p| p.kind == PointKind::NearSingular).count()
    }
}

struct Curve<'a, T> {
    pb: &'a Problem<T>,
    lref: T,
}

#[derive(Clone, Copy)]
struct Eval<T> {
    theta1: T,
    min_cos: T,
}

impl<T: Real> Curve<'_, T> {
    fn lambda(&self, y: [T; 2]) -> T {
        y[0] * self.lref
    }

    /// `theta(1)` of the extended shot, smooth across the vertical and zero
    /// events.
    fn eval(&self, y: [T; 2]) -> Option<T> {
        let s = y[1].exp();
        if !(s > T::zero() && s.is_finite()) {
            return None;
        }
        let path = integrate_arc(&self.pb.with_lambda(self.lambda(y)), &PathSpec::from_height(s).extended()).ok()?;
        (path.termination == Termination::Reached).then_some(path.end.theta)
    }

    /// The ordinary shot: `Some` only for a positive graph reaching `x = 1`.
    fn physical(&self, y: [T; 2]) -> Option<Eval<T>> {
        let path = integrate_arc(&self.pb.with_lambda(self.lambda(y)), &PathSpec::from_height(y[1].exp())).ok()?;
        (path.termination == Termination::Reached).then_some(Eval { theta1: path.end.theta, min_cos: path.min_cos })
    }

    /// One-sided differences; near the edge of the solution set the side
    /// and then the size of the step are adapted until the shot is defined.
    fn gradient(&self, y: [T; 2], f0: T) -> Option<[T; 2]> {
        let partial = |k: usize, d: T| -> Option<T> {
            let mut d = d;
            for _ in 0..5 {
                for h in [d, -d] {
                    let mut z = y;
                    z[k] = z[k] + h;
                    if let Some(f) = self.eval(z) {
                        return Some((f - f0) / h);
                    }
                }
                d = d / T::lit(10.0);
            }
            None
        };
        let f_mu = partial(0, T::lit(FD_STEP) * y[0].abs().max(T::lit(1e-3)))?;
        let f_sigma = partial(1, T::lit(FD_STEP))?;
        Some([f_mu, f_sigma])
    }

    /// Newton on `{theta(1) = 0, t . (y - pred) = 0}` from `pred`.
    fn correct(&self, pred: [T; 2], t: [T; 2]) -> Option<([T; 2], usize)> {
        let tol = T::lit(THETA_TOL);
        let mut y = pred;
        let mut f = self.eval(y)?;
        for it in 0..MAX_NEWTON {
            let c = t[0] * (y[0] - pred[0]) + t[1] * (y[1] - pred[1]);
            if f.abs() <= tol && c.abs() <= T::lit(1e-10) {
                return Some((y, it));
            }
            let g = self.gradient(y, f)?;
            let det = g[0] * t[1] - g[1] * t[0];
            if det == T::zero() || !det.is_finite() {
                return None;
            }
            let dy = [(-f * t[1] + c * g[1]) / det, (-g[0] * c + t[0] * f) / det];
            let resolution = T::lit(1e-14) * (T::one() + y[0].abs() + y[1].abs());
            let stagnated = dy[0].abs() + dy[1].abs() <= resolution;
            if stagnated && f.abs() <= T::lit(POINT_TOL) {
                return Some((y, it));
            }
            let mut alpha = T::one();
            let mut next = None;
            for _ in 0..=MAX_DAMPING {
                let cand = [y[0] + alpha * dy[0], y[1] + alpha * dy[1]];
                if let Some(fc) = self.eval(cand) {
                    if fc.abs() < f.abs() || fc.abs() <= tol {
                        next = Some((cand, fc));
                        break;
                    }
                }
                alpha = alpha / T::lit(2.0);
            }
            match next {
                Some(n) => (y, f) = n,
                None if f.abs() <= T::lit(POINT_TOL) && c.abs() <= T::lit(1e-8) => return Some((y, it)),
                None => return None,
            }
        }
        (f.abs() <= T::lit(POINT_TOL)).then_some((y, MAX_NEWTON))
    }

    fn point(&self, y: [T; 2], e: Eval<T>) -> BranchPoint<T> {
        let s0 = y[1].exp();
        let c = e.min_cos;
        BranchPoint {
            lambda: self.lambda(y),
            s0,
            sup_norm: s0,
            deriv_norm: (T::one() - c * c).max(T::zero()).sqrt() / c,
            theta1: e.theta1,
            min_cos: c,
            kind: if c < T::lit(NEAR_SINGULAR_COS) { PointKind::NearSingular } else { PointKind::Regular },
        }
    }
}

fn normalize<T: Real>(v: [T; 2]) -> Option<[T; 2]> {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    (n > T::zero() && n.is_finite()).then(|| [v[0] / n, v[1] / n])
}

fn orient<T: Real>(t: [T; 2], o: Orientation) -> [T; 2] {
    let flip = match o {
        Orientation::GrowS0 => t[1] < T::zero(),
        Orientation::ShrinkS0 => t[1] > T::zero(),
        Orientation::GrowLambda => t[0] < T::zero(),
        Orientation::ShrinkLambda => t[0] > T::zero(),
    };
    if flip {
        [-t[0], -t[1]]
    } else {
        t
    }
}

/// Indices `i` with `(lambda_i - lambda_{i-1}) (lambda_{i+1} - lambda_i) < 0`.
pub fn detect_folds<T: Real>(points: &[BranchPoint<T>]) -> Vec<usize> {
    (1..points.len().saturating_sub(1))
        .filter(|&i| {
            let a = points[i].lambda - points[i - 1].lambda;
            let b = points[i + 1].lambda - points[i].lambda;
            a * b < T::zero()
        })
        .collect()
}

/// Follows the solution curve through `start = (lambda, u(0))`. The
/// problem's own `lambda` is ignored.
pub fn trace<T: Real>(pb: &Problem<T>, start: (T, T), origin: Origin, opts: &TraceOptions<T>) -> Result<Branch<T>> {
    if !(start.1 > T::zero()) {
        return Err(Error::Precondition("continuation needs u(0) > 0".into()));
    }
    let cv = Curve { pb, lref: start.0.abs().max(T::one()) };
    let y0 = [start.0 / cv.lref, start.1.ln()];
    let e0 = cv.physical(y0).ok_or(Error::StartNotConverged { residual: f64::INFINITY })?;
    let residual = e0.theta1.to_f64_lossy();
    if e0.theta1.abs() > T::lit(START_TOL) {
        return Err(Error::StartNotConverged { residual });
    }
    let f0 = cv.eval(y0).ok_or(Error::StartNotConverged { residual })?;
    let g0 = cv.gradient(y0, f0).ok_or(Error::StartNotConverged { residual })?;
    let mut t = orient(
        normalize([-g0[1], g0[0]]).ok_or(Error::NonFinite("tangent at start".into()))?,
        opts.orientation,
    );
    // Pull the start onto the curve along the normal of the tangent.
    let (mut y, _) = cv.correct(y0, t).ok_or(Error::StartNotConverged { residual })?;
    let e = cv.physical(y).ok_or(Error::StartNotConverged { residual })?;
    let mut points = vec![cv.point(y, e)];
    let mut h = opts.h0.min(opts.h_max);
    let stop = loop {
        if points.len() >= opts.max_points {
            break StopReason::MaxPoints;
        }
        let pred = [y[0] + h * t[0], y[1] + h * t[1]];
        let accepted = cv.correct(pred, t).filter(|(yn, _)| {
            let d = [yn[0] - y[0], yn[1] - y[1]];
            let dist = (d[0] * d[0] + d[1] * d[1]).sqrt();
            dist <= T::lit(2.0) * h && d[0] * t[0] + d[1] * t[1] > T::zero()
        });
        let Some((yn, iters)) = accepted else {
            h = h / T::lit(2.0);
            if h < opts.h_min {
                break StopReason::CorrectorFailed { lambda: cv.lambda(y), s0: y[1].exp() };
            }
            continue;
        };
        let lambda = cv.lambda(yn);
        if lambda < -T::lit(1e-9) * cv.lref {
            break StopReason::NegativeLambda;
        }
        let Some(en) = cv.physical(yn).filter(|e| e.theta1.abs() <= T::lit(POINT_TOL)) else {
            break StopReason::LeftSolutionSet { lambda, s0: yn[1].exp() };
        };
        t = normalize([yn[0] - y[0], yn[1] - y[1]]).unwrap_or(t);
        y = yn;
        let p = cv.point(y, en);
        points.push(p);
        if iters <= 3 {
            h = (h * T::lit(1.5)).min(opts.h_max);
        }
        if lambda > opts.lambda_max {
            break StopReason::LambdaMax { lambda };
        }
        if p.s0 < opts.s_min {
            break StopReason::TrivialLine { lambda };
        }
        if p.s0 > opts.s_max {
            break StopReason::HeightMax { s0: p.s0 };
        }
    };
    Ok(Branch { origin, folds: detect_folds(&points), points, terminated_by: stop })
}

/// Traces several seeds concurrently.
pub fn trace_many<T: Real>(pb: &Problem<T>, seeds: &[((T, T), Origin, TraceOptions<T>)]) -> Vec<Result<Branch<T>>> {
    seeds.par_iter().map(|(start, origin, opts)| trace(pb, *start, *origin, opts)).collect()
}

/// First point of the branch bifurcating from `(lambda0, 0)`: `u(0) = eps`
/// (the eigenfunction is normalized to sup norm one) and `lambda` solved by
/// Newton from `lambda0`.
pub fn seed_from_lambda0<T: Real>(pb: &Problem<T>, eps: T) -> Result<(T, T)> {
    let l0 = principal_neumann(&pb.weight)?.eigenvalue;
    let shot = |l: T| -> Result<T> {
        let path = integrate_arc(&pb.with_lambda(l), &PathSpec::from_height(eps))?;
        match path.termination {
            Termination::Reached => Ok(path.end.theta),
            t => Err(Error::RootNotConverged(format!("seed shot blocked: {:?}", t))),
        }
    };
    let mut l = l0;
    let mut g = shot(l)?;
    for _ in 0..40 {
        if g.abs() <= T::lit(THETA_TOL) * eps {
            break;
        }
        let d = T::lit(FD_STEP) * l;
        let slope = (shot(l + d)? - g) / d;
        if slope == T::zero() {
            break;
        }
        let step = -g / slope;
        let mut alpha = T::one();
        loop {
            let cand = l + alpha * step;
            if let Ok(gc) = shot(cand) {
                if gc.abs() < g.abs() || alpha < T::lit(1e-3) {
                    (l, g) = (cand, gc);
                    break;
                }
            }
            alpha = alpha / T::lit(2.0);
            if alpha < T::lit(1e-3) {
                return Err(Error::RootNotConverged("seed Newton stalled".into()));
            }
        }
    }
    if g.abs() > T::lit(1e-8) {
        return Err(Error::RootNotConverged(format!("seed residual {:e}", g.to_f64_lossy())));
    }
    Ok((l, eps))
}

/// A point on the line of constants at `lambda = 0`.
pub fn seed_zero_line<T: Real>(s0: T) -> (T, T) {
    (T::zero(), s0)
}

/// The smallest positive solution at a given (large) `lambda`, searched
/// below the peak of `f`.
pub fn seed_small_at<T: Real>(pb: &Problem<T>, lambda: T) -> Result<(T, T)> {
    let sols = find_regular(&pb.with_lambda(lambda), T::lit(1e-10), pb.f.peak(), 96)?;
    let first = sols.first().ok_or_else(|| Error::BracketNotFound(format!("no small solution at lambda = {}", lambda)))?;
    Ok((lambda, first.s0))
}

fn segment_distance<T: Real>(p: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let r = if len2 > T::zero() {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    let q = [a[0] + r * d[0] - p[0], a[1] + r * d[1] - p[1]];
    (q[0] * q[0] + q[1] * q[1]).sqrt()
}

fn directed<T: Real>(a: &[[T; 2]], b: &[[T; 2]]) -> T {
    a.iter()
        .map(|p| {
            if b.len() == 1 {
                return segment_distance(*p, b[0], b[0]);
            }
            b.windows(2).map(|w| segment_distance(*p, w[0], w[1])).fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max)
}

/// Symmetric Hausdorff distance between two branches as polylines in
/// `(lambda, u(0))`, each axis scaled by the largest magnitude on either
/// branch.
pub fn hausdorff<T: Real>(a: &Branch<T>, b: &Branch<T>) -> T {
    let all = a.points.iter().chain(&b.points);
    let (sl, ss) = all.fold((T::min_positive_value(), T::min_positive_value()), |(l, s), p| {
        (l.max(p.lambda.abs()), s.max(p.s0.abs()))
    });
    let scaled = |br: &Branch<T>| br.points.iter().map(|p| [p.lambda / sl, p.s0 / ss]).collect::<Vec<_>>();
    let (pa, pb) = (scaled(a), scaled(b));
    if pa.is_empty() || pb.is_empty() {
        return T::infinity();
    }
    directed(&pa, &pb).max(directed(&pb, &pa))
}

/// Drops branches within `tol` (scaled Hausdorff distance) of an earlier one.
pub fn dedup_branches<T: Real>(branches: Vec<Branch<T>>, tol: T) -> Vec<Branch<T>> {
    let mut kept: Vec<Branch<T>> = Vec::new();
    for b in branches {
        if !kept.iter().any(|k| hausdorff(k, &b) <= tol) {
            kept.push(b);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow<T> {
    pub branch: usize,
    pub lambda: T,
    pub sup_norm: T,
    pub kind: PointKind,
}

/// Merged `(lambda, ||u||_inf)` record of several branches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagram<T> {
    pub rows: Vec<DiagramRow<T>>,
}

pub fn diagram<T: Real>(branches: &[Branch<T>]) -> Diagram<T> {
    let rows = branches
        .iter()
        .enumerate()
        .flat_map(|(k, b)| {
            b.points.iter().map(move |p| DiagramRow { branch: k, lambda: p.lambda, sup_norm: p.sup_norm, kind: p.kind })
        })
        .collect();
    Diagram { rows }
}

impl<T: Real> Diagram<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,sup_norm,kind\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_real(r.lambda.to_f64_lossy()),
                fmt_real(r.sup_norm.to_f64_lossy()),
                r.kind.as_str()
            ));
        }
        out
    }

    /// Self-contained SVG: one polyline per run of equal kind, dashed for
    /// near-singular runs. The vertical axis is logarithmic when the norms
    /// span more than three decades.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        const M: f64 = 60.0;
        let pts: Vec<(usize, f64, f64, PointKind)> = self
            .rows
            .iter()
            .map(|r| (r.branch, r.lambda.to_f64_lossy(), r.sup_norm.to_f64_lossy(), r.kind))
            .filter(|p| p.1.is_finite() && p.2.is_finite())
            .collect();
        let ymin_raw = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
        let ymax_raw = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
        let log_y = ymin_raw > 0.0 && ymax_raw / ymin_raw > 1e3;
        let ty = |v: f64| if log_y { v.log10() } else { v };
        let span = |lo: f64, hi: f64| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let (x0, x1) = span(
            pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
        );
        let (y0, y1) = span(ty(ymin_raw), ty(ymax_raw));
        let px = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
        let py = |v: f64| H - M - (ty(v) - y0) / (y1 - y0) * (H - 2.0 * M);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <g stroke=\"black\" stroke-width=\"1\">\n\
             <line x1=\"{M}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\"/>\n<line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{b}\"/>\n</g>\n",
            b = H - M,
            r = W - M
        );
        s.push_str("<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n");
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let ylabel = if log_y { format!("1e{:.1}", yv) } else { format!("{:.4}", yv) };
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{:.4}</text>\n",
                px(xv),
                H - M + 16.0,
                xv
            ));
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
                M - 6.0,
                H - M - f * (H - 2.0 * M) + 4.0,
                ylabel
            ));
        }
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">lambda</text>\n",
            W / 2.0,
            H - 16.0
        ));
        s.push_str(&format!(
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">sup norm</text>\n</g>\n",
            H / 2.0,
            H / 2.0
        ));
        let mut i = 0;
        while i < pts.len() {
            let mut j = i + 1;
            while j < pts.len() && pts[j].0 == pts[i].0 && pts[j].3 == pts[i].3 {
                j += 1;
            }
            // Runs share their boundary point so the curve stays connected.
            let end = if j < pts.len() && pts[j].0 == pts[i].0 { j + 1 } else { j };
            let coords: Vec<String> = pts[i..end].iter().map(|p| format!("{:.2},{:.2}", px(p.1), py(p.2))).collect();
            let dash = if pts[i].3 == PointKind::NearSingular { " stroke-dasharray=\"6,4\"" } else { "" };
            s.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"{} points=\"{}\"/>\n",
                dash,
                coords.join(" ")
            ));
            i = j;
        }
        s.push_str("</svg>\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::bif_direction;
    use crate::model::{Nonlinearity, Weight};

    fn family() -> Problem<f64> {
        Problem::new(0.0, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::smoothed(1.0, 0.5, 0.1).unwrap())
    }

    #[test]
    fn seed_matches_bifurcation_direction() {
        let pb = family();
        let pair = principal_neumann(&pb.weight).unwrap();
        let dir = bif_direction(&pb.f, &pair).unwrap();
        let (l, s) = seed_from_lambda0(&pb, 1e-3).unwrap();
        assert_eq!(s, 1e-3);
        let d2 = dir.lambda2.unwrap();
        assert!((l - pair.eigenvalue) * d2 > 0.0);
        let theta1 = crate::shoot::shoot_residual(&pb.with_lambda(l), s).unwrap().theta1().unwrap();
        assert!(theta1.abs() <= 1e-8);
    }

    #[test]
    fn branch_returns_to_bifurcation_point() {
        let pb = family();
        let l0 = principal_neumann(&pb.weight).unwrap().eigenvalue;
        let seed = seed_from_lambda0(&pb, 1e-2).unwrap();
        let opts = TraceOptions { orientation: Orientation::ShrinkS0, s_min: 1e-6, ..Default::default() };
        let b = trace(&pb, seed, Origin::FromLambda0, &opts).unwrap();
        match b.terminated_by {
            StopReason::TrivialLine { lambda } => assert!((lambda - l0).abs() <= 1e-3 * l0, "{} vs {}", lambda, l0),
            other => panic!("unexpected stop {:?}", other),
        }
        assert!(b.points.iter().all(|p| p.theta1.abs() <= 1e-8));
    }

    #[test]
    fn zero_line_is_the_constants() {
        let pb = family();
        let opts = TraceOptions { s_max: 100.0, h_max: 1.0, ..Default::default() };
        let b = trace(&pb, seed_zero_line(0.01), Origin::FromZeroLine, &opts).unwrap();
        assert!(matches!(b.terminated_by, StopReason::HeightMax { .. }));
        assert!(b.points.iter().all(|p| p.lambda.abs() <= 1e-12));
        assert!(b.points.len() > 5);
    }

    #[test]
    fn rejects_unconverged_start() {
        let pb = family();
        let err = trace(&pb, (10.0, 0.3), Origin::Manual, &TraceOptions::default()).unwrap_err();
        assert!(matches!(err, Error::StartNotConverged { .. }));
    }

    #[test]
    fn folds_and_dedup() {
        let mk = |ls: &[f64]| Branch {
            origin: Origin::Manual,
            points: ls
                .iter()
                .enumerate()
                .map(|(i, &l)| BranchPoint {
                    lambda: l,
                    s0: 1.0 + i as f64,
                    sup_norm: 1.0 + i as f64,
                    deriv_norm: 0.0,
                    theta1: 0.0,
                    min_cos: 1.0,
                    kind: PointKind::Regular,
                })
                .collect(),
            folds: vec![],
            terminated_by: StopReason::MaxPoints,
        };
        let a = mk(&[1.0, 0.9, 0.8, 0.85, 1.0]);
        assert_eq!(detect_folds(&a.points), vec![2]);
        let b = mk(&[1.0, 0.9, 0.8, 0.85, 1.0]);
        let c = mk(&[2.0, 2.5, 3.0]);
        assert_eq!(hausdorff(&a, &b), 0.0);
        let kept = dedup_branches(vec![a, b, c], 1e-4);
        assert_eq!(kept.len(), 2);
        let d = diagram(&kept);
        let csv = d.to_csv();
        assert_eq!(csv.lines().count(), 1 + 8);
        assert!(csv.starts_with("lambda,sup_norm,kind\n"));
        let svg = d.to_svg();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
