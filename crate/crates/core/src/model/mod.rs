//! Problem data and pointwise residuals of the curvature equation
//! `-(u'/sqrt(1+u'^2))' = lambda a(x) f(u)` with Neumann conditions.

mod nonlinearity;
mod weight;

pub use nonlinearity::{Nonlinearity, NonlinearityKind};
pub use weight::{NodeBehavior, Segment, SegmentForm, Side, Weight, WeightFn};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A weight, a nonlinearity and the parameter value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Problem<T> {
    #[serde(default = "T::zero")]
    pub lambda: T,
    pub weight: Weight<T>,
    pub f: Nonlinearity<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(lambda: T, weight: Weight<T>, f: Nonlinearity<T>) -> Self {
        Self { lambda, weight, f }
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        Self { lambda, weight: self.weight.clone(), f: self.f.clone() }
    }

    /// Solvers accept only `lambda >= 0`.
    pub fn check_solvable(&self) -> Result<()> {
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::Precondition(format!("lambda = {} must be finite and >= 0", self.lambda)));
        }
        Ok(())
    }

    /// `lambda a(x) f(u)` with `a` taken from segment `seg`.
    pub fn source(&self, seg: usize, x: T, u: T) -> T {
        self.lambda * self.weight.segments()[seg].eval(x) * self.f.eval(u)
    }
}

/// Samples `(x, u, theta)` of a graph, `u' = tan(theta)`. Consecutive equal
/// abscissae split the mesh into runs; derivatives are never differenced
/// across a run boundary (weight discontinuities, jumps).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionMesh<T> {
    pub x: Vec<T>,
    pub u: Vec<T>,
    pub theta: Vec<T>,
}

impl<T: Real> SolutionMesh<T> {
    pub fn new() -> Self {
        Self { x: Vec::new(), u: Vec::new(), theta: Vec::new() }
    }

    pub fn from_slope(x: Vec<T>, u: Vec<T>, du: &[T]) -> Self {
        let theta = du.iter().map(|d| d.atan()).collect();
        Self { x, u, theta }
    }

    pub fn push(&mut self, x: T, u: T, theta: T) {
        self.x.push(x);
        self.u.push(u);
        self.theta.push(theta);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn du(&self) -> Vec<T> {
        self.theta.iter().map(|t| t.tan()).collect()
    }

    pub fn sup_norm(&self) -> T {
        self.u.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn deriv_norm(&self) -> T {
        self.theta.iter().fold(T::zero(), |m, t| m.max(t.tan().abs()))
    }

    /// Index ranges of the runs.
    pub fn runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..self.x.len() {
            if self.x[i] == self.x[i - 1] {
                out.push(start..i);
                start = i;
            }
        }
        if start < self.x.len() {
            out.push(start..self.x.len());
        }
        out
    }

    /// Linear interpolation of `u` (taking the left value at a duplicate abscissa).
    pub fn interp_u(&self, x: T) -> T {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.u[0];
        }
        if x >= self.x[n - 1] {
            return self.u[n - 1];
        }
        let k = self.x.partition_point(|v| *v < x);
        if self.x[k] == x {
            return self.u[k];
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        self.u[k - 1] + (x - x0) / (x1 - x0) * (self.u[k] - self.u[k - 1])
    }

    /// Sub-mesh of points with `x0 <= x <= x1`.
    pub fn window(&self, x0: T, x1: T) -> Self {
        let mut m = Self::new();
        for i in 0..self.x.len() {
            if self.x[i] >= x0 && self.x[i] <= x1 {
                m.push(self.x[i], self.u[i], self.theta[i]);
            }
        }
        m
    }
}

/// Derivative at the nodes of a run from the increments `dy[i] = y[i+1] - y[i]`,
/// second order on a nonuniform mesh (three-point, one-sided at the ends).
pub(crate) fn derivative_from_increments<T: Real>(x: &[T], dy: &[T]) -> Vec<T> {
    let n = x.len();
    if n == 1 {
        return vec![T::zero()];
    }
    if n == 2 {
        let s = dy[0] / (x[1] - x[0]);
        return vec![s, s];
    }
    let slope: Vec<T> = (0..n - 1).map(|i| dy[i] / (x[i + 1] - x[i])).collect();
    let second = |i: usize| (slope[i + 1] - slope[i]) / (x[i + 2] - x[i]);
    (0..n)
        .map(|i| {
            if i == 0 {
                slope[0] - (x[1] - x[0]) * second(0)
            } else if i == n - 1 {
                slope[n - 2] + (x[n - 1] - x[n - 2]) * second(n - 3)
            } else {
                slope[i - 1] + (x[i] - x[i - 1]) * second(i - 1)
            }
        })
        .collect()
}

/// Flux derivative `w'` on one run, `w = sin(theta)`; increments of `w` use
/// the cancellation-free form `2 cos(mean theta) sin(dtheta / 2)`.
fn flux_derivative<T: Real>(x: &[T], th: &[T]) -> Vec<T> {
    let two = T::lit(2.0);
    let dw: Vec<T> = th
        .windows(2)
        .map(|p| two * ((p[0] + p[1]) / two).cos() * ((p[1] - p[0]) / two).sin())
        .collect();
    derivative_from_increments(x, &dw)
}

/// Segment index used for `a` on the interval `[x_i, x_{i+1}]` of a run.
fn interval_segment<T: Real>(w: &Weight<T>, x0: T, x1: T) -> usize {
    w.segment_index(x0 + (x1 - x0) / T::lit(2.0))
}

/// L1 norm over the mesh of `u'' + lambda a f(u) (1 + u'^2)^(3/2)`,
/// evaluated as `(w' + lambda a f(u)) / cos^3(theta)`. `lambda < 0` is allowed.
pub fn curvature_residual<T: Real>(pb: &Problem<T>, mesh: &SolutionMesh<T>) -> Result<T> {
    const MIN_POINTS: usize = 8;
    if mesh.len() < MIN_POINTS {
        return Err(Error::MeshTooCoarse { points: mesh.len(), required: MIN_POINTS });
    }
    let mut total = T::zero();
    for r in mesh.runs() {
        let (x, u, th) = (&mesh.x[r.clone()], &mesh.u[r.clone()], &mesh.theta[r.clone()]);
        if x.len() < 2 {
            continue;
        }
        let dw = flux_derivative(x, th);
        for i in 0..x.len() - 1 {
            let seg = interval_segment(&pb.weight, x[i], x[i + 1]);
            let res = |k: usize| -> T {
                let c = th[k].cos();
                ((dw[k] + pb.source(seg, x[k], u[k])) / (c * c * c)).abs()
            };
            total = total + (res(i) + res(i + 1)) * (x[i + 1] - x[i]) / T::lit(2.0);
        }
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("curvature residual".into()));
    }
    Ok(total)
}

/// `int_0^1 a f(u)` by the trapezoid rule on each run.
pub fn neumann_balance<T: Real>(pb: &Problem<T>, mesh: &SolutionMesh<T>) -> T {
    let w = &pb.weight;
    let mut total = T::zero();
    for r in mesh.runs() {
        let (x, u) = (&mesh.x[r.clone()], &mesh.u[r]);
        for i in 0..x.len().saturating_sub(1) {
            let s = &w.segments()[interval_segment(w, x[i], x[i + 1])];
            let g = |k: usize| s.eval(x[k]) * pb.f.eval(u[k]);
            total = total + (g(i) + g(i + 1)) * (x[i + 1] - x[i]) / T::lit(2.0);
        }
    }
    total
}

/// Relative defect of `A (F(u(0)) - F(u(z))) = B (F(u(z)) - F(u(1)))` for a
/// two-level weight (`A` on `[0, z)`, `-B` on `(z, 1]`). Returns `None` for
/// other weights.
pub fn piecewise_constant_balance<T: Real>(pb: &Problem<T>, u0: T, uz: T, u1: T) -> Option<T> {
    let segs = pb.weight.segments();
    if segs.len() != 2 {
        return None;
    }
    let (a, b) = match (&segs[0].form, &segs[1].form) {
        (SegmentForm::Constant { value: a }, SegmentForm::Constant { value: b }) => (*a, -*b),
        _ => return None,
    };
    let f = &pb.f;
    let lhs = a * (f.primitive(u0) - f.primitive(uz));
    let rhs = b * (f.primitive(uz) - f.primitive(u1));
    Some((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(T::min_positive_value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn problem(lambda: f64) -> Problem<f64> {
        Problem::new(
            lambda,
            Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(),
            Nonlinearity::prototype(2.0, 0.5, 1.0).unwrap(),
        )
    }

    fn flat(c: f64, n: usize) -> SolutionMesh<f64> {
        let x: Vec<f64> = crate::scalar::linspace(0.0, 1.0, n);
        SolutionMesh::from_slope(x, vec![c; n], &vec![0.0; n])
    }

    #[test]
    fn constants_solve_at_lambda_zero() {
        assert_eq!(curvature_residual(&problem(0.0), &flat(3.0, 64)).unwrap(), 0.0);
    }

    #[test]
    fn coarse_mesh_rejected() {
        assert!(matches!(
            curvature_residual(&problem(0.0), &flat(1.0, 5)),
            Err(Error::MeshTooCoarse { points: 5, .. })
        ));
    }

    #[test]
    fn balance_of_constant_is_negative() {
        let pb = problem(1.0);
        let c = 0.5;
        assert_relative_eq!(neumann_balance(&pb, &flat(c, 101)), pb.f.eval(c) * -0.8, max_relative = 1e-12);
    }

    #[test]
    fn json_problem_document() {
        let doc = r#"{"weight":{"z":0.4,"segments":[
            {"start":0,"end":0.4,"form":"constant","value":1},
            {"start":0.4,"end":1,"form":"constant","value":-2}]},
            "f":{"kind":"prototype","p":2,"q":0.5,"M":1}}"#;
        let pb: Problem<f64> = serde_json::from_str(doc).unwrap();
        assert_eq!(pb.lambda, 0.0);
        assert_eq!(pb, problem(0.0));
    }

    #[test]
    fn runs_split_at_duplicates() {
        let m = SolutionMesh::from_slope(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4], &[0.0; 4]);
        assert_eq!(m.runs(), vec![0..2, 2..4]);
    }

    #[test]
    fn flux_derivative_second_order() {
        // theta = atan(x^2) so w' = 2x / (1 + x^4)^(3/2) on a graded mesh.
        let x: Vec<f64> = (0..40).map(|i| (i as f64 / 39.0).powf(1.3)).collect();
        let th: Vec<f64> = x.iter().map(|v| (v * v).atan()).collect();
        let dw = flux_derivative(&x, &th);
        for (xi, d) in x.iter().zip(&dw) {
            let exact = 2.0 * xi / (1.0 + xi.powi(4)).powf(1.5);
            assert!((d - exact).abs() < 5e-3);
        }
    }
}
