//! Explicit Dormand–Prince 5(4) integrator with step-level control.
//!
//! The drivers in `shoot`, `singular` and `eigen` own the event logic: they
//! advance one accepted step at a time, inspect sign changes of their event
//! functions across the step, and land on the crossing with [`land_on`].

use crate::error::{Error, Result};
use crate::scalar::Real;

pub trait OdeSystem<T: Real, const N: usize> {
    fn rhs(&self, t: T, y: &[T; N]) -> [T; N];
}

/// A state together with its derivative, the unit stored along trajectories.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub dy: [T; N],
}

#[derive(Clone, Copy, Debug)]
pub struct Dopri5<T> {
    pub rtol: T,
    pub atol: T,
    pub h_min: T,
    pub h_max: T,
    pub max_steps: usize,
}

impl<T: Real> Dopri5<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self {
            rtol,
            atol,
            h_min: T::lit(1e-14),
            h_max: T::infinity(),
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_max(mut self, h_max: T) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }
}

impl<T: Real> Default for Dopri5<T> {
    fn default() -> Self {
        Self::new(T::lit(1e-11), T::lit(1e-13))
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

struct Trial<T, const N: usize> {
    y: [T; N],
    dy: [T; N],
    err: [T; N],
}

fn trial<T: Real, const N: usize, S: OdeSystem<T, N>>(sys: &S, p: &Point<T, N>, h: T) -> Trial<T, N> {
    let (t, y, k1) = (p.t, &p.y, &p.dy);
    let k2 = sys.rhs(t + T::lit(C2) * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = sys.rhs(t + T::lit(C3) * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = sys.rhs(t + T::lit(C4) * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = sys.rhs(
        t + T::lit(C5) * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = sys.rhs(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = sys.rhs(t + h, &y1);
    let zero = [T::zero(); N];
    let err = axpy(
        &zero,
        h,
        &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
    );
    Trial { y: y1, dy: k7, err }
}

/// One fifth-order step of size `h` without error control.
pub fn single_step<T: Real, const N: usize, S: OdeSystem<T, N>>(sys: &S, p: &Point<T, N>, h: T) -> Point<T, N> {
    let tr = trial(sys, p, h);
    Point { t: p.t + h, y: tr.y, dy: tr.dy }
}

/// Cubic Hermite interpolant between two step endpoints.
pub fn hermite<T: Real, const N: usize>(p0: &Point<T, N>, p1: &Point<T, N>, t: T) -> [T; N] {
    let h = p1.t - p0.t;
    let s = (t - p0.t) / h;
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    let mut out = [T::zero(); N];
    for i in 0..N {
        out[i] = h00 * p0.y[i] + h10 * h * p0.dy[i] + h01 * p1.y[i] + h11 * h * p1.dy[i];
    }
    out
}

/// Locates the zero of `g` inside an accepted step `p0 -> p1` (where `g`
/// changes sign) and returns the state there, recomputed by a genuine RK step
/// from `p0` rather than read off the interpolant.
pub fn land_on<T, const N: usize, S, G>(sys: &S, p0: &Point<T, N>, p1: &Point<T, N>, g: G) -> Point<T, N>
where
    T: Real,
    S: OdeSystem<T, N>,
    G: Fn(&Point<T, N>) -> T,
{
    let g0 = g(p0);
    let mut lo = p0.t;
    let mut hi = p1.t;
    let pos0 = g0 > T::zero();
    let interp = |t: T| -> Point<T, N> {
        let y = hermite(p0, p1, t);
        Point { t, y, dy: sys.rhs(t, &y) }
    };
    for _ in 0..80 {
        let mid = lo + (hi - lo) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(&interp(mid)) > T::zero()) == pos0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = lo + (hi - lo) / T::lit(2.0);
    let mut p = single_step(sys, p0, t - p0.t);
    // Secant polish on the true trajectory; the interpolant is only O(h^4).
    for _ in 0..3 {
        let gv = g(&p);
        if gv == T::zero() {
            break;
        }
        let dt = (t - p0.t) * T::lit(1e-7) + T::epsilon();
        let q = single_step(sys, p0, t + dt - p0.t);
        let slope = (g(&q) - gv) / dt;
        if slope == T::zero() || !slope.is_finite() {
            break;
        }
        let next = t - gv / slope;
        if !(next > p0.t) || !(next <= p1.t + (p1.t - p0.t)) {
            break;
        }
        t = next;
        p = single_step(sys, p0, t - p0.t);
    }
    p
}

/// Adaptive stepper advancing strictly forward in `t`.
pub struct Stepper<'a, T: Real, S, const N: usize> {
    sys: &'a S,
    cfg: Dopri5<T>,
    cur: Point<T, N>,
    h: T,
    steps: usize,
}

impl<'a, T: Real, S: OdeSystem<T, N>, const N: usize> Stepper<'a, T, S, N> {
    pub fn new(sys: &'a S, cfg: Dopri5<T>, t0: T, y0: [T; N], h0: T) -> Self {
        let dy = sys.rhs(t0, &y0);
        Self {
            sys,
            cfg,
            cur: Point { t: t0, y: y0, dy },
            h: h0.min(cfg.h_max),
            steps: 0,
        }
    }

    /// Restarts from a new point (used after landing on an event).
    pub fn reset(&mut self, p: Point<T, N>) {
        self.cur = p;
    }

    pub fn current(&self) -> &Point<T, N> {
        &self.cur
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn error_norm(&self, y0: &[T; N], tr: &Trial<T, N>) -> T {
        let mut acc = T::zero();
        for i in 0..N {
            let sc = self.cfg.atol + self.cfg.rtol * y0[i].abs().max(tr.y[i].abs());
            let r = tr.err[i] / sc;
            acc = acc + r * r;
        }
        (acc / T::from_usize_lossy(N)).sqrt()
    }

    /// Takes one accepted step no longer than `h_cap` and returns the
    /// previous and new points.
    pub fn step(&mut self, h_cap: T) -> Result<(Point<T, N>, Point<T, N>)> {
        let prev = self.cur;
        loop {
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Err(Error::TooManySteps(self.cfg.max_steps));
            }
            let capped = h_cap < self.h;
            let h = self.h.min(h_cap).min(self.cfg.h_max);
            let floor = self.cfg.h_min * (T::one() + prev.t.abs());
            if h < floor && h < h_cap {
                return Err(Error::StepUnderflow { at: prev.t.to_f64_lossy() });
            }
            let tr = trial(self.sys, &prev, h);
            let finite = tr.y.iter().chain(tr.err.iter()).all(|v| v.is_finite());
            let err = if finite { self.error_norm(&prev.y, &tr) } else { T::infinity() };
            if err <= T::one() {
                let fac = if err == T::zero() {
                    T::lit(5.0)
                } else {
                    (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
                };
                let proposal = h * fac;
                self.h = if capped { self.h.max(proposal) } else { proposal };
                self.cur = Point { t: prev.t + h, y: tr.y, dy: tr.dy };
                return Ok((prev, self.cur));
            }
            let fac = if finite {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1))
            } else {
                T::lit(0.25)
            };
            self.h = h * fac.min(T::lit(0.9));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay;
    impl OdeSystem<f64, 1> for Decay {
        fn rhs(&self, _t: f64, y: &[f64; 1]) -> [f64; 1] {
            [-y[0]]
        }
    }

    struct Oscillator;
    impl OdeSystem<f64, 2> for Oscillator {
        fn rhs(&self, _t: f64, y: &[f64; 2]) -> [f64; 2] {
            [y[1], -y[0]]
        }
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let sys = Decay;
        let mut st = Stepper::new(&sys, Dopri5::new(1e-12, 1e-14), 0.0, [1.0], 1e-3);
        while st.current().t < 2.0 {
            let cap = 2.0 - st.current().t;
            st.step(cap).unwrap();
        }
        assert!((st.current().t - 2.0).abs() < 1e-15);
        assert!((st.current().y[0] - (-2.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn event_landing_on_oscillator_zero() {
        // y = cos t first crosses zero at pi/2.
        let sys = Oscillator;
        let mut st = Stepper::new(&sys, Dopri5::new(1e-10, 1e-12), 0.0, [1.0, 0.0], 0.5);
        loop {
            let (p0, p1) = st.step(f64::INFINITY).unwrap();
            if p1.y[0] < 0.0 {
                let hit = land_on(&sys, &p0, &p1, |p| p.y[0]);
                assert!((hit.t - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
                assert!(hit.y[0].abs() < 1e-12);
                break;
            }
        }
    }

    #[test]
    fn single_precision_integration() {
        struct DecayF;
        impl OdeSystem<f32, 1> for DecayF {
            fn rhs(&self, _t: f32, y: &[f32; 1]) -> [f32; 1] {
                [-y[0]]
            }
        }
        let sys = DecayF;
        let mut st = Stepper::new(&sys, Dopri5::new(1e-5f32, 1e-6), 0.0, [1.0], 1e-2);
        while st.current().t < 1.0 {
            let cap = 1.0 - st.current().t;
            st.step(cap).unwrap();
        }
        assert!((st.current().y[0] - (-1.0f32).exp()).abs() < 1e-4);
    }
}
