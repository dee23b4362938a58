//! Nonlinearities `f` with power behavior `u^p` at zero and `h u^-q` at infinity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Defining data of a nonlinearity. `f` is extended to `u < 0` as an odd
/// function, so the primitive `F` is even.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub enum NonlinearityKind<T> {
    /// `u^p` on `[0, M]`, `M^(p+q) u^-q` beyond.
    Prototype {
        p: T,
        q: T,
        #[serde(rename = "M")]
        m: T,
    },
    /// The prototype with the corner at `M` replaced by the cubic Hermite
    /// blend on `[M - delta, M + delta]`; `delta` defaults to `M / 10`.
    Smoothed {
        p: T,
        q: T,
        #[serde(rename = "M")]
        m: T,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<T>,
    },
    /// Linear interpolation of samples with power tails matched at both ends.
    Table { u: Vec<T>, f: Vec<T>, p: T, q: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "NonlinearityKind<T>",
    into = "NonlinearityKind<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct Nonlinearity<T> {
    kind: NonlinearityKind<T>,
    h: T,
    sup: T,
    peak: T,
    blend: Option<Blend<T>>,
}

/// Cubic Hermite data on `[u0, u0 + w]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Blend<T> {
    u0: T,
    w: T,
    y0: T,
    y1: T,
    m0: T,
    m1: T,
    /// `F(u0)`.
    base: T,
}

impl<T: Real> Blend<T> {
    fn eval(&self, u: T) -> T {
        let t = (u - self.u0) / self.w;
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        (two * t3 - three * t2 + T::one()) * self.y0
            + (t3 - two * t2 + t) * self.w * self.m0
            + (three * t2 - two * t3) * self.y1
            + (t3 - t2) * self.w * self.m1
    }

    fn deriv(&self, u: T) -> T {
        let t = (u - self.u0) / self.w;
        let t2 = t * t;
        let six = T::lit(6.0);
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        ((six * t2 - six * t) * self.y0
            + (three * t2 - four * t + T::one()) * self.w * self.m0
            + (six * t - six * t2) * self.y1
            + (three * t2 - T::lit(2.0) * t) * self.w * self.m1)
            / self.w
    }

    /// `int_{u0}^{u} blend`.
    fn integral(&self, u: T) -> T {
        let t = (u - self.u0) / self.w;
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let half = T::lit(0.5);
        let quarter = T::lit(0.25);
        let third = T::one() / T::lit(3.0);
        (self.y0 * (half * t4 - t3 + t)
            + self.w * self.m0 * (quarter * t4 - T::lit(2.0) * third * t3 + half * t2)
            + self.y1 * (t3 - half * t4)
            + self.w * self.m1 * (quarter * t4 - third * t3))
            * self.w
    }
}

impl<T: Real> TryFrom<NonlinearityKind<T>> for Nonlinearity<T> {
    type Error = Error;
    fn try_from(kind: NonlinearityKind<T>) -> Result<Self> {
        Nonlinearity::new(kind)
    }
}

impl<T: Real> From<Nonlinearity<T>> for NonlinearityKind<T> {
    fn from(n: Nonlinearity<T>) -> Self {
        n.kind
    }
}

fn check_exponents<T: Real>(p: T, q: T) -> Result<()> {
    if !(p > T::zero()) {
        return Err(Error::InvalidNonlinearity(format!("p = {} must be positive", p)));
    }
    if !(q > T::zero() && q < T::one()) {
        return Err(Error::InvalidNonlinearity(format!("q = {} must lie in (0, 1)", q)));
    }
    Ok(())
}

impl<T: Real> Nonlinearity<T> {
    pub fn new(kind: NonlinearityKind<T>) -> Result<Self> {
        let mut n = Nonlinearity { kind, h: T::zero(), sup: T::zero(), peak: T::zero(), blend: None };
        match n.kind.clone() {
            NonlinearityKind::Prototype { p, q, m } => {
                check_exponents(p, q)?;
                if !(m > T::zero()) {
                    return Err(Error::InvalidNonlinearity("M must be positive".into()));
                }
                n.h = m.powf(p + q);
                n.sup = m.powf(p);
                n.peak = m;
            }
            NonlinearityKind::Smoothed { p, q, m, delta } => {
                check_exponents(p, q)?;
                if !(m > T::zero()) {
                    return Err(Error::InvalidNonlinearity("M must be positive".into()));
                }
                let d = delta.unwrap_or(m / T::lit(10.0));
                if !(d > T::zero() && d < m) {
                    return Err(Error::InvalidNonlinearity(format!("delta = {} must lie in (0, M)", d)));
                }
                let h = m.powf(p + q);
                let (a, b) = (m - d, m + d);
                let blend = Blend {
                    u0: a,
                    w: b - a,
                    y0: a.powf(p),
                    y1: h * b.powf(-q),
                    m0: p * a.powf(p - T::one()),
                    m1: -q * h * b.powf(-q - T::one()),
                    base: a.powf(p + T::one()) / (p + T::one()),
                };
                n.h = h;
                n.blend = Some(blend);
                // The blend is unimodal: its derivative is a quadratic that is
                // positive at the left end and negative at the right end.
                let peak = crate::roots::bisect(|u| Ok(blend.deriv(u)), a, b, T::zero(), T::epsilon(), 200)?;
                n.peak = peak;
                n.sup = blend.eval(peak);
            }
            NonlinearityKind::Table { u, f, p, q } => {
                check_exponents(p, q)?;
                if u.len() < 2 || u.len() != f.len() {
                    return Err(Error::InvalidNonlinearity("table needs >= 2 matching samples".into()));
                }
                if !(u[0] > T::zero()) || u.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidNonlinearity("table abscissae must be positive and increasing".into()));
                }
                if f.iter().any(|v| !(*v > T::zero())) {
                    return Err(Error::InvalidNonlinearity("table values must be positive".into()));
                }
                let last = u.len() - 1;
                n.h = f[last] * u[last].powf(q);
                let (k, fmax) = f
                    .iter()
                    .enumerate()
                    .fold((0, T::zero()), |(k, m), (i, v)| if *v > m { (i, *v) } else { (k, m) });
                n.sup = fmax;
                n.peak = u[k];
            }
        }
        Ok(n)
    }

    pub fn prototype(p: T, q: T, m: T) -> Result<Self> {
        Self::new(NonlinearityKind::Prototype { p, q, m })
    }

    pub fn smoothed(p: T, q: T, m: T) -> Result<Self> {
        Self::new(NonlinearityKind::Smoothed { p, q, m, delta: None })
    }

    pub fn kind(&self) -> &NonlinearityKind<T> {
        &self.kind
    }

    pub fn p(&self) -> T {
        match &self.kind {
            NonlinearityKind::Prototype { p, .. } | NonlinearityKind::Smoothed { p, .. } | NonlinearityKind::Table { p, .. } => *p,
        }
    }

    pub fn q(&self) -> T {
        match &self.kind {
            NonlinearityKind::Prototype { q, .. } | NonlinearityKind::Smoothed { q, .. } | NonlinearityKind::Table { q, .. } => *q,
        }
    }

    /// Asymptotic scale: `f(u) u^q -> h` as `u -> infinity`.
    pub fn h(&self) -> T {
        self.h
    }

    /// Nominal peak parameter `M` (the table's argmax for tables).
    pub fn m(&self) -> T {
        match &self.kind {
            NonlinearityKind::Prototype { m, .. } | NonlinearityKind::Smoothed { m, .. } => *m,
            NonlinearityKind::Table { .. } => self.peak,
        }
    }

    /// Location of the maximum of `f` on `(0, inf)`.
    pub fn peak(&self) -> T {
        self.peak
    }

    /// `||f||_inf`.
    pub fn sup_norm(&self) -> T {
        self.sup
    }

    fn eval_pos(&self, u: T) -> T {
        if u == T::zero() {
            return T::zero();
        }
        match &self.kind {
            NonlinearityKind::Prototype { p, q, m } => {
                if u <= *m {
                    u.powf(*p)
                } else {
                    self.h * u.powf(-*q)
                }
            }
            NonlinearityKind::Smoothed { p, q, .. } => {
                let b = self.blend.as_ref().expect("smoothed blend");
                if u <= b.u0 {
                    u.powf(*p)
                } else if u >= b.u0 + b.w {
                    self.h * u.powf(-*q)
                } else {
                    b.eval(u)
                }
            }
            NonlinearityKind::Table { u: us, f, p, q } => {
                let last = us.len() - 1;
                if u <= us[0] {
                    f[0] * (u / us[0]).powf(*p)
                } else if u >= us[last] {
                    f[last] * (u / us[last]).powf(-*q)
                } else {
                    let k = us.partition_point(|v| *v <= u) - 1;
                    let t = (u - us[k]) / (us[k + 1] - us[k]);
                    f[k] + t * (f[k + 1] - f[k])
                }
            }
        }
    }

    fn deriv_pos(&self, u: T) -> T {
        match &self.kind {
            NonlinearityKind::Prototype { p, q, m } => {
                if u <= *m {
                    *p * u.powf(*p - T::one())
                } else {
                    -*q * self.h * u.powf(-*q - T::one())
                }
            }
            NonlinearityKind::Smoothed { p, q, .. } => {
                let b = self.blend.as_ref().expect("smoothed blend");
                if u <= b.u0 {
                    *p * u.powf(*p - T::one())
                } else if u >= b.u0 + b.w {
                    -*q * self.h * u.powf(-*q - T::one())
                } else {
                    b.deriv(u)
                }
            }
            NonlinearityKind::Table { u: us, f, p, q } => {
                let last = us.len() - 1;
                if u <= us[0] {
                    *p * f[0] / us[0] * (u / us[0]).powf(*p - T::one())
                } else if u >= us[last] {
                    -*q * f[last] / us[last] * (u / us[last]).powf(-*q - T::one())
                } else {
                    let k = us.partition_point(|v| *v <= u) - 1;
                    (f[k + 1] - f[k]) / (us[k + 1] - us[k])
                }
            }
        }
    }

    fn primitive_pos(&self, u: T) -> T {
        match &self.kind {
            NonlinearityKind::Prototype { p, q, m } => {
                let p1 = *p + T::one();
                if u <= *m {
                    u.powf(p1) / p1
                } else {
                    let q1 = T::one() - *q;
                    m.powf(p1) / p1 + self.h * (u.powf(q1) - m.powf(q1)) / q1
                }
            }
            NonlinearityKind::Smoothed { p, q, .. } => {
                let b = self.blend.as_ref().expect("smoothed blend");
                let p1 = *p + T::one();
                let e = b.u0 + b.w;
                if u <= b.u0 {
                    u.powf(p1) / p1
                } else if u <= e {
                    b.base + b.integral(u)
                } else {
                    let q1 = T::one() - *q;
                    b.base + b.integral(e) + self.h * (u.powf(q1) - e.powf(q1)) / q1
                }
            }
            NonlinearityKind::Table { u: us, f, p, q } => {
                let p1 = *p + T::one();
                let q1 = T::one() - *q;
                let last = us.len() - 1;
                let head = |v: T| f[0] * us[0] / p1 * (v / us[0]).powf(p1);
                if u <= us[0] {
                    return head(u);
                }
                let mut acc = head(us[0]);
                for k in 0..last {
                    let (a, b) = (us[k], us[k + 1]);
                    if u <= b {
                        let fu = f[k] + (u - a) / (b - a) * (f[k + 1] - f[k]);
                        return acc + (f[k] + fu) * (u - a) / T::lit(2.0);
                    }
                    acc = acc + (f[k] + f[k + 1]) * (b - a) / T::lit(2.0);
                }
                acc + f[last] * us[last] / q1 * ((u / us[last]).powf(q1) - T::one())
            }
        }
    }

    /// `f(u)`, odd in `u`.
    pub fn eval(&self, u: T) -> T {
        if u < T::zero() {
            -self.eval_pos(-u)
        } else {
            self.eval_pos(u)
        }
    }

    /// `f'(u)`, even in `u`.
    pub fn deriv(&self, u: T) -> T {
        self.deriv_pos(u.abs())
    }

    /// `F(u) = int_0^u f`, even in `u`.
    pub fn primitive(&self, u: T) -> T {
        self.primitive_pos(u.abs())
    }

    /// `(f'(0), f''(0), f'''(0))` when `f` is three times differentiable at 0.
    pub fn derivatives_at_zero(&self) -> Option<(T, T, T)> {
        if let NonlinearityKind::Table { .. } = self.kind {
            return None;
        }
        let p = self.p();
        let zero = T::zero();
        if p == T::one() {
            Some((T::one(), zero, zero))
        } else if p == T::lit(3.0) {
            Some((zero, zero, T::lit(6.0)))
        } else if p > T::lit(3.0) && p.fract() == zero && (p.to_f64_lossy() as i64) % 2 == 1 {
            Some((zero, zero, zero))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn numeric_primitive(n: &Nonlinearity<f64>, u: f64) -> f64 {
        crate::quad::integrate(|s| n.eval(s), 0.0, u, 1e-12).unwrap()
    }

    #[test]
    fn prototype_continuous_at_peak() {
        let f = Nonlinearity::prototype(2.0, 0.5, 1.5).unwrap();
        let m = 1.5f64;
        assert_relative_eq!(f.eval(m), m.powi(2), max_relative = 1e-15);
        assert_relative_eq!(f.eval(m * (1.0 + 1e-12)), m.powi(2), max_relative = 1e-10);
        assert_eq!(f.sup_norm(), m.powi(2));
    }

    #[test]
    fn odd_extension() {
        let f = Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap();
        for &u in &[0.3, 0.95, 1.05, 7.0] {
            assert_eq!(f.eval(-u), -f.eval(u));
            assert_eq!(f.primitive(-u), f.primitive(u));
        }
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    fn power_limits_of_primitive() {
        for f in [Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap(), Nonlinearity::smoothed(2.0, 0.5, 1.0).unwrap()] {
            let (p, q, h) = (f.p(), f.q(), f.h());
            for &u in &[1e-3f64, 1e-4] {
                assert_relative_eq!(f.primitive(u) / u.powf(p + 1.0), 1.0 / (p + 1.0), max_relative = 0.01);
            }
            // The defect decays like u^(q-1), which is still 2.4% at u = 1e3
            // for q = 1/2; 1% is reached by u = 1e4.
            let defect = |u: f64| (f.primitive(u) / u.powf(1.0 - q) * (1.0 - q) / h - 1.0).abs();
            assert!(defect(1e4) < 0.01);
            assert_relative_eq!(defect(1e3) / defect(1e4), 10f64.powf(1.0 - q), max_relative = 0.05);
            for &u in &[1e3f64, 1e4] {
                assert_relative_eq!(f.eval(u) * u.powf(q), h, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn primitive_matches_quadrature() {
        let cases = [
            Nonlinearity::prototype(1.0, 0.5, 1.0).unwrap(),
            Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap(),
            Nonlinearity::smoothed(0.5, 0.3, 2.0).unwrap(),
            Nonlinearity::new(NonlinearityKind::Table { u: vec![0.5, 1.0, 2.0], f: vec![0.5, 1.0, 0.7], p: 1.0, q: 0.5 })
                .unwrap(),
        ];
        for f in &cases {
            for &u in &[0.2, 0.85, 0.93, 1.0, 1.07, 1.2, 3.0, 40.0] {
                assert_relative_eq!(f.primitive(u), numeric_primitive(f, u), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn smoothed_is_unimodal_and_c1() {
        let f = Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap();
        let mut prev = 0.0;
        let mut rising = true;
        for i in 1..4000 {
            let u = i as f64 * 1e-3;
            let v = f.eval(u);
            if rising && v < prev {
                rising = false;
                assert!((u - f.peak()).abs() < 2e-3);
            }
            if !rising {
                assert!(v <= prev + 1e-15);
            }
            prev = v;
        }
        for &u in &[0.9, 1.1] {
            let e = 1e-7;
            assert_relative_eq!(f.deriv(u - e), f.deriv(u + e), max_relative = 1e-5);
            assert_relative_eq!(f.eval(u - e), f.eval(u + e), max_relative = 1e-6);
        }
        assert!(f.sup_norm() >= f.eval(1.0));
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let f = Nonlinearity::smoothed(2.0, 0.5, 1.0).unwrap();
        for &u in &[0.3, 0.95, 1.02, 5.0] {
            let e = 1e-6;
            assert_relative_eq!(f.deriv(u), (f.eval(u + e) - f.eval(u - e)) / (2.0 * e), max_relative = 1e-6);
        }
    }

    #[test]
    fn validation_and_json() {
        assert!(Nonlinearity::prototype(1.0, 1.5, 1.0).is_err());
        assert!(Nonlinearity::prototype(0.0, 0.5, 1.0).is_err());
        let f: Nonlinearity<f64> = serde_json::from_str(r#"{"kind":"prototype","p":2,"q":0.5,"M":1}"#).unwrap();
        assert_eq!(f.p(), 2.0);
        assert_eq!(f.h(), 1.0);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"M\""));
        assert!(serde_json::from_str::<Nonlinearity<f64>>(r#"{"kind":"prototype","p":2,"q":2,"M":1}"#).is_err());
    }

    #[test]
    fn derivatives_at_zero() {
        assert_eq!(Nonlinearity::smoothed(1.0, 0.5, 1.0).unwrap().derivatives_at_zero(), Some((1.0, 0.0, 0.0)));
        assert_eq!(Nonlinearity::prototype(3.0, 0.5, 1.0).unwrap().derivatives_at_zero(), Some((0.0, 0.0, 6.0)));
        assert_eq!(Nonlinearity::prototype(2.0, 0.5, 1.0).unwrap().derivatives_at_zero(), None);
    }
}
