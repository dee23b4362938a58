//! Principal eigenvalues of `-phi'' = lambda a(x) phi` and the bifurcation
//! directions of the positive branch emanating from `(lambda_0, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{derivative_from_increments, Nonlinearity, Segment, Weight};
use crate::ode::{Dopri5, OdeSystem, Stepper};
use crate::roots::bisect_predicate;
use crate::scalar::Real;

/// Uniform sampling density of stored eigenfunctions.
pub const EIGEN_GRID: usize = 4096;

const LAMBDA_MAX: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

/// Integrals of the normalized eigenfunction, accumulated along the ODE.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    /// `int a phi^2`
    pub a_phi2: T,
    /// `int phi'^2`
    pub dphi2: T,
    /// `int phi phi'^2`
    pub phi_dphi2: T,
    /// `int phi^2 phi'^2`
    pub phi2_dphi2: T,
    /// `int phi'^4`
    pub dphi4: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPair<T> {
    pub eigenvalue: T,
    pub boundary: Boundary,
    pub interval: (T, T),
    pub x: Vec<T>,
    pub phi: Vec<T>,
    pub dphi: Vec<T>,
    pub moments: Moments<T>,
    /// `||phi'' + lambda a phi||_1` by finite differences of `phi'`.
    pub residual: T,
}

impl<T: Real> EigenPair<T> {
    pub fn mesh_size(&self) -> usize {
        self.x.len()
    }
}

struct Linear<'a, T> {
    seg: &'a Segment<T>,
    lambda: T,
}

impl<T: Real> OdeSystem<T, 7> for Linear<'_, T> {
    fn rhs(&self, x: T, y: &[T; 7]) -> [T; 7] {
        let (p, dp) = (y[0], y[1]);
        let a = self.seg.eval(x);
        let dp2 = dp * dp;
        [dp, -self.lambda * a * p, a * p * p, dp2, p * dp2, p * p * dp2, dp2 * dp2]
    }
}

struct Trace<T> {
    x: Vec<T>,
    phi: Vec<T>,
    dphi: Vec<T>,
    end: [T; 7],
    /// Set when `phi <= 0` was met strictly inside the interval.
    lost_positivity: bool,
}

/// Integrates the linear problem on `[r, s]` segment by segment. With
/// `record`, steps are capped to land on a uniform grid and every breakpoint
/// is stored twice (one value per side).
fn shoot<T: Real>(w: &Weight<T>, lambda: T, r: T, s: T, y0: [T; 2], record: bool) -> Result<Trace<T>> {
    let cfg = Dopri5::default();
    let n = EIGEN_GRID;
    let dx = (s - r) / T::from_usize_lossy(n);
    let mut out = Trace { x: Vec::new(), phi: Vec::new(), dphi: Vec::new(), end: [T::zero(); 7], lost_positivity: false };
    let mut y = [y0[0], y0[1], T::zero(), T::zero(), T::zero(), T::zero(), T::zero()];
    let mut x = r;
    if record {
        out.x.push(x);
        out.phi.push(y[0]);
        out.dphi.push(y[1]);
    }
    let mut next_grid = 1usize;
    for seg in w.segments().iter().filter(|g| g.end > r && g.start < s) {
        let x_end = seg.end.min(s);
        if x_end <= x {
            continue;
        }
        if record && x > r {
            // Duplicate the breakpoint so derivatives are taken per side.
            out.x.push(x);
            out.phi.push(y[0]);
            out.dphi.push(y[1]);
        }
        let sys = Linear { seg, lambda };
        let mut st = Stepper::new(&sys, cfg, x, y, (x_end - x) / T::lit(64.0));
        loop {
            let cur = st.current().t;
            let remaining = x_end - cur;
            if remaining <= T::epsilon() * T::lit(4.0) * (T::one() + x_end.abs()) {
                break;
            }
            let mut cap = remaining;
            let mut grid_target = None;
            if record {
                while next_grid < n && r + dx * T::from_usize_lossy(next_grid) <= cur {
                    next_grid += 1;
                }
                if next_grid < n {
                    let g = r + dx * T::from_usize_lossy(next_grid);
                    if g < x_end && g - cur < cap {
                        cap = g - cur;
                        grid_target = Some(g);
                    }
                }
            }
            let (_, p) = st.step(cap)?;
            if p.y[0] <= T::zero() && p.t < s {
                out.lost_positivity = true;
                if !record {
                    out.end = p.y;
                    return Ok(out);
                }
            }
            if record {
                if let Some(g) = grid_target {
                    if p.t >= g - T::epsilon() * T::lit(8.0) {
                        let mut q = p;
                        q.t = g;
                        st.reset(q);
                    }
                }
                let q = *st.current();
                if q.t < x_end {
                    out.x.push(q.t);
                    out.phi.push(q.y[0]);
                    out.dphi.push(q.y[1]);
                }
            }
        }
        x = x_end;
        y = st.current().y;
        if record {
            out.x.push(x);
            out.phi.push(y[0]);
            out.dphi.push(y[1]);
        }
    }
    out.end = y;
    Ok(out)
}

fn check_positive_on<T: Real>(w: &Weight<T>, r: T, s: T) -> Result<()> {
    let n = 1024;
    let h = (s - r) / T::from_usize_lossy(n);
    for i in 1..n {
        if !(w.eval(r + h * T::from_usize_lossy(i)) > T::zero()) {
            return Err(Error::Precondition(format!("weight is not positive on ({}, {})", r, s)));
        }
    }
    Ok(())
}

/// Smallest `lambda` where `admissible` turns false, scanning geometrically
/// from `guess` and then bisecting.
fn locate<T: Real, P: FnMut(T) -> Result<bool>>(mut admissible: P, guess: T) -> Result<T> {
    let mut lo = guess;
    let mut tries = 0;
    while !admissible(lo)? {
        lo = lo / T::lit(4.0);
        tries += 1;
        if tries > 60 {
            return Err(Error::BracketNotFound("no admissible lower bound for the eigenvalue".into()));
        }
    }
    let mut hi = lo * T::lit(2.0);
    while admissible(hi)? {
        lo = hi;
        hi = hi * T::lit(2.0);
        if hi > T::lit(LAMBDA_MAX) {
            return Err(Error::BracketNotFound(format!("eigenvalue above {:e}", LAMBDA_MAX)));
        }
    }
    bisect_predicate(admissible, lo, hi, T::lit(1e-14), 200)
}

fn assemble<T: Real>(w: &Weight<T>, lambda: T, boundary: Boundary, r: T, s: T, y0: [T; 2]) -> Result<EigenPair<T>> {
    let tr = shoot(w, lambda, r, s, y0, true)?;
    let scale = tr.phi.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) {
        return Err(Error::NonFinite("eigenfunction vanishes".into()));
    }
    let inv = T::one() / scale;
    let phi: Vec<T> = tr.phi.iter().map(|v| *v * inv).collect();
    let dphi: Vec<T> = tr.dphi.iter().map(|v| *v * inv).collect();
    let (c2, c3, c4) = (inv * inv, inv * inv * inv, inv * inv * inv * inv);
    let moments = Moments {
        a_phi2: tr.end[2] * c2,
        dphi2: tr.end[3] * c2,
        phi_dphi2: tr.end[4] * c3,
        phi2_dphi2: tr.end[5] * c4,
        dphi4: tr.end[6] * c4,
    };
    let mut residual = T::zero();
    let mut start = 0;
    let xs = &tr.x;
    for i in 1..=xs.len() {
        if i == xs.len() || xs[i] == xs[i - 1] {
            let (x, dp) = (&xs[start..i], &dphi[start..i]);
            if x.len() >= 2 {
                let inc: Vec<T> = dp.windows(2).map(|p| p[1] - p[0]).collect();
                let d2 = derivative_from_increments(x, &inc);
                let seg = &w.segments()[w.segment_index((x[0] + x[1]) / T::lit(2.0))];
                let res = |k: usize| (d2[k] + lambda * seg.eval(x[k]) * phi[start + k]).abs();
                for k in 0..x.len() - 1 {
                    residual = residual + (res(k) + res(k + 1)) * (x[k + 1] - x[k]) / T::lit(2.0);
                }
            }
            start = i;
        }
    }
    Ok(EigenPair { eigenvalue: lambda, boundary, interval: (r, s), x: tr.x, phi, dphi, moments, residual })
}

/// Principal Neumann eigenvalue on `(0, 1)`: the `lambda > 0` where the
/// solution from `phi(0) = 1, phi'(0) = 0` stops being positive with
/// `phi'(1) > 0`.
pub fn principal_neumann<T: Real>(w: &Weight<T>) -> Result<EigenPair<T>> {
    if !w.satisfies_a1() {
        return Err(Error::Precondition("weight must have negative mean and a positive part".into()));
    }
    let sup = w.sup_positive();
    let guess = if sup.is_finite() && sup > T::zero() { T::PI() * T::PI() / sup } else { T::one() };
    let y0 = [T::one(), T::zero()];
    let lambda = locate(
        |l| {
            let tr = shoot(w, l, T::zero(), T::one(), y0, false)?;
            Ok(!tr.lost_positivity && tr.end[0] > T::zero() && tr.end[1] > T::zero())
        },
        guess,
    )?;
    assemble(w, lambda, Boundary::Neumann, T::zero(), T::one(), y0)
}

/// Principal Dirichlet eigenvalue on `(r, s)`, where `a > 0`.
pub fn principal_dirichlet<T: Real>(w: &Weight<T>, r: T, s: T) -> Result<EigenPair<T>> {
    if !(r >= T::zero() && s <= T::one() && s > r) {
        return Err(Error::Precondition(format!("interval ({}, {}) not inside [0, 1]", r, s)));
    }
    check_positive_on(w, r, s)?;
    let sup = (0..=256)
        .map(|i| w.eval(r + (s - r) * T::from_usize_lossy(i) / T::lit(256.0)))
        .fold(T::zero(), |m: T, v| m.max(v));
    let len = s - r;
    let guess = T::PI() * T::PI() / (sup.max(T::min_positive_value()) * len * len);
    let y0 = [T::zero(), T::one()];
    let lambda = locate(
        |l| {
            let tr = shoot(w, l, r, s, y0, false)?;
            Ok(!tr.lost_positivity && tr.end[0] > T::zero())
        },
        guess,
    )?;
    assemble(w, lambda, Boundary::Dirichlet, r, s, y0)
}

/// Derivatives of `lambda(s)` at the bifurcation point, where `s` is the
/// amplitude of `phi` normalized by `||phi||_inf = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifDirection<T> {
    pub lambda1: T,
    pub lambda2: Option<T>,
}

/// `lambda'(0) = -lambda_0 f''(0) int phi phi'^2 / int phi'^2` and, when
/// `f''(0) = 0`, `lambda''(0) = -lambda_0 (f'''(0) int phi^2 phi'^2 + int phi'^4) / int phi'^2`.
pub fn bif_direction<T: Real>(f: &Nonlinearity<T>, pair: &EigenPair<T>) -> Result<BifDirection<T>> {
    if pair.boundary != Boundary::Neumann || pair.interval != (T::zero(), T::one()) {
        return Err(Error::Precondition("bifurcation directions need the Neumann pair on (0, 1)".into()));
    }
    let (d1, d2, d3) = f
        .derivatives_at_zero()
        .ok_or_else(|| Error::Precondition("f is not three times differentiable at 0".into()))?;
    if d1 != T::one() {
        return Err(Error::Precondition("f'(0) must equal 1".into()));
    }
    let m = &pair.moments;
    let l0 = pair.eigenvalue;
    let lambda1 = -l0 * d2 * m.phi_dphi2 / m.dphi2;
    let lambda2 = if d2 == T::zero() { Some(-l0 * (d3 * m.phi2_dphi2 + m.dphi4) / m.dphi2) } else { None };
    Ok(BifDirection { lambda1, lambda2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::bisect;
    use approx::assert_relative_eq;

    fn jump() -> Weight<f64> {
        Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap()
    }

    /// Root of sqrt(A) tan(sqrt(lambda A) z) = sqrt(B) tanh(sqrt(lambda B)(1 - z))
    /// below the first pole of the tangent.
    fn matching_oracle(a: f64, b: f64, z: f64) -> f64 {
        let g = |l: f64| Ok(a.sqrt() * ((l * a).sqrt() * z).tan() - b.sqrt() * ((l * b).sqrt() * (1.0 - z)).tanh());
        let pole = (std::f64::consts::FRAC_PI_2 / z).powi(2) / a;
        bisect(g, 1e-9, pole * (1.0 - 1e-12), 0.0, 1e-16, 300).unwrap()
    }

    #[test]
    fn neumann_matches_transcendental_oracle() {
        let pair = principal_neumann(&jump()).unwrap();
        let oracle = matching_oracle(1.0, 2.0, 0.4);
        assert_relative_eq!(pair.eigenvalue, oracle, max_relative = 1e-9);
        assert!(pair.residual <= 1e-6);
        assert!(pair.phi.iter().all(|v| *v > 0.0));
        assert_relative_eq!(pair.dphi[pair.dphi.len() - 1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn neumann_scales_inversely_with_weight() {
        let l1 = principal_neumann(&jump()).unwrap().eigenvalue;
        let l4 = principal_neumann(&Weight::piecewise_constant(0.4, 4.0, 8.0).unwrap()).unwrap().eigenvalue;
        assert_relative_eq!(l4, l1 / 4.0, max_relative = 1e-9);
    }

    #[test]
    fn moment_identity() {
        for w in [jump(), Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap()] {
            let pair = principal_neumann(&w).unwrap();
            let m = pair.moments;
            assert!(m.dphi2 > 0.0);
            assert_relative_eq!(pair.eigenvalue * m.a_phi2, m.dphi2, max_relative = 1e-7);
        }
    }

    #[test]
    fn moments_match_trapezoid_on_samples() {
        let pair = principal_neumann(&jump()).unwrap();
        let (x, p, d) = (&pair.x, &pair.phi, &pair.dphi);
        let mut dphi4 = 0.0;
        for i in 0..x.len() - 1 {
            dphi4 += 0.5 * (d[i].powi(4) + d[i + 1].powi(4)) * (x[i + 1] - x[i]);
        }
        assert_relative_eq!(dphi4, pair.moments.dphi4, max_relative = 1e-5);
        assert!(p.iter().cloned().fold(0.0, f64::max) == 1.0);
    }

    #[test]
    fn dirichlet_sine_oracle() {
        let ones = Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap();
        let mu = principal_dirichlet(&ones, 0.0, 0.4).unwrap().eigenvalue;
        assert_relative_eq!(mu, (std::f64::consts::PI / 0.4).powi(2), max_relative = 1e-9);
        let mu2 = principal_dirichlet(&ones, 0.0, 0.2).unwrap().eigenvalue;
        assert_relative_eq!(mu2, 4.0 * mu, max_relative = 1e-9);
        assert!(principal_dirichlet(&ones, 0.0, 0.6).is_err());
    }

    /// Smallest eigenvalue of the symmetric tridiagonal matrix by Sturm bisection.
    fn tridiag_min(d: &[f64], e: &[f64]) -> f64 {
        let count_below = |x: f64| {
            let mut c = 0;
            let mut q = d[0] - x;
            if q < 0.0 {
                c += 1;
            }
            for i in 1..d.len() {
                let qq = if q == 0.0 { 1e-300 } else { q };
                q = d[i] - x - e[i - 1] * e[i - 1] / qq;
                if q < 0.0 {
                    c += 1;
                }
            }
            c
        };
        let (mut lo, mut hi) = (0.0, 1e9);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if count_below(m) >= 1 {
                hi = m;
            } else {
                lo = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn dirichlet_matches_finite_differences() {
        // a = 1 + 3 x^2 on (0, 0.4) as a polynomial segment.
        let w = Weight::new(
            0.4,
            vec![
                Segment { start: 0.0, end: 0.4, form: crate::model::SegmentForm::Polynomial { coeffs: vec![1.0, 0.0, 3.0] } },
                Segment { start: 0.4, end: 1.0, form: crate::model::SegmentForm::Constant { value: -2.0 } },
            ],
        )
        .unwrap();
        let n = 200;
        let h = 0.4 / n as f64;
        let xs: Vec<f64> = (1..n).map(|i| i as f64 * h).collect();
        let a: Vec<f64> = xs.iter().map(|x| 1.0 + 3.0 * x * x).collect();
        let d: Vec<f64> = a.iter().map(|ai| 2.0 / (h * h) / ai).collect();
        let e: Vec<f64> = (0..xs.len() - 1).map(|i| -1.0 / (h * h) / (a[i] * a[i + 1]).sqrt()).collect();
        let fd = tridiag_min(&d, &e);
        let mu = principal_dirichlet(&w, 0.0, 0.4).unwrap().eigenvalue;
        assert_relative_eq!(mu, fd, max_relative = 1e-4);
    }

    #[test]
    fn bif_direction_signs() {
        let pair = principal_neumann(&jump()).unwrap();
        let f1 = Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap();
        let d = bif_direction(&f1, &pair).unwrap();
        assert_eq!(d.lambda1, 0.0);
        let l2 = d.lambda2.unwrap();
        assert!(l2 < 0.0);
        let m = pair.moments;
        assert_relative_eq!(l2, -pair.eigenvalue * m.dphi4 / m.dphi2, max_relative = 1e-14);
        assert!(bif_direction(&Nonlinearity::prototype(2.0, 0.5, 1.0).unwrap(), &pair).is_err());
    }

    #[test]
    fn lambda2_scales_like_lambda0() {
        // a -> 4a divides lambda_0 and lambda''(0) by 4 (phi is unchanged).
        let f1 = Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap();
        let p1 = principal_neumann(&jump()).unwrap();
        let p4 = principal_neumann(&Weight::piecewise_constant(0.4, 4.0, 8.0).unwrap()).unwrap();
        let l1 = bif_direction(&f1, &p1).unwrap().lambda2.unwrap();
        let l4 = bif_direction(&f1, &p4).unwrap().lambda2.unwrap();
        assert_relative_eq!(l4, l1 / 4.0, max_relative = 1e-6);
    }
}
