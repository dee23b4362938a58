//! Piecewise-analytic sign-changing weights `a(x)` on `[0, 1]`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// Opaque weight values, usable for evaluation and plain quadrature only.
#[derive(Clone)]
pub struct WeightFn<T>(pub Arc<dyn Fn(T) -> T + Send + Sync>);

impl<T> fmt::Debug for WeightFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("WeightFn(..)")
    }
}

impl<T> PartialEq for WeightFn<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Functional form of one weight segment.
///
/// Power forms are anchored at a segment end point: `PowerLeft` on `[s, e]`
/// is `amp * (e - x)^exponent`, `PowerRight` is `-amp * (x - s)^exponent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum SegmentForm<T> {
    Constant { value: T },
    /// Coefficients of `sum c_k x^k`.
    Polynomial { coeffs: Vec<T> },
    PowerLeft { amp: T, exponent: T },
    PowerRight { amp: T, exponent: T },
    #[serde(skip)]
    Sampled(WeightFn<T>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    #[serde(flatten)]
    pub form: SegmentForm<T>,
}

fn poly_eval<T: Real>(c: &[T], x: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &ck| acc * x + ck)
}

fn poly_primitive<T: Real>(c: &[T], x: T) -> T {
    c.iter()
        .enumerate()
        .rev()
        .fold(T::zero(), |acc, (k, &ck)| acc * x + ck / T::from_usize_lossy(k + 1))
        * x
}

/// Coefficients of the same polynomial expanded about `x0`.
fn taylor_shift<T: Real>(c: &[T], x0: T) -> Vec<T> {
    let mut b = c.to_vec();
    let n = b.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            b[j] = b[j] + x0 * b[j + 1];
        }
    }
    b
}

impl<T: Real> Segment<T> {
    pub fn eval(&self, x: T) -> T {
        match &self.form {
            SegmentForm::Constant { value } => *value,
            SegmentForm::Polynomial { coeffs } => poly_eval(coeffs, x),
            SegmentForm::PowerLeft { amp, exponent } => *amp * (self.end - x).max(T::zero()).powf(*exponent),
            SegmentForm::PowerRight { amp, exponent } => -*amp * (x - self.start).max(T::zero()).powf(*exponent),
            SegmentForm::Sampled(g) => (g.0)(x),
        }
    }

    /// Exact `int_{x0}^{x1} a` for `start <= x0 <= x1 <= end`.
    pub fn integral(&self, x0: T, x1: T) -> T {
        if x1 <= x0 {
            return T::zero();
        }
        match &self.form {
            SegmentForm::Constant { value } => *value * (x1 - x0),
            SegmentForm::Polynomial { coeffs } => poly_primitive(coeffs, x1) - poly_primitive(coeffs, x0),
            SegmentForm::PowerLeft { amp, exponent } => {
                let e1 = *exponent + T::one();
                *amp * ((self.end - x0).powf(e1) - (self.end - x1).powf(e1)) / e1
            }
            SegmentForm::PowerRight { amp, exponent } => {
                let e1 = *exponent + T::one();
                -*amp * ((x1 - self.start).powf(e1) - (x0 - self.start).powf(e1)) / e1
            }
            SegmentForm::Sampled(g) => {
                let f = g.0.clone();
                quad::integrate(move |x| f(x), x0, x1, T::lit(1e-12)).unwrap_or_else(|_| T::nan())
            }
        }
    }

    /// `int |a|` over the whole segment.
    pub fn abs_integral(&self) -> T {
        match &self.form {
            SegmentForm::Polynomial { coeffs } => {
                // Split at sign changes located on a fine grid.
                let n = 512;
                let mut cuts = vec![self.start];
                let h = (self.end - self.start) / T::from_usize_lossy(n);
                let mut prev = poly_eval(coeffs, self.start);
                for i in 1..=n {
                    let x = if i == n { self.end } else { self.start + h * T::from_usize_lossy(i) };
                    let v = poly_eval(coeffs, x);
                    if (v > T::zero()) != (prev > T::zero()) && v != T::zero() && prev != T::zero() {
                        let lo = x - h;
                        let r = crate::roots::bisect(|t| Ok(poly_eval(coeffs, t)), lo, x, T::zero(), T::epsilon(), 200)
                            .unwrap_or(lo);
                        cuts.push(r);
                    }
                    prev = v;
                }
                cuts.push(self.end);
                cuts.windows(2).map(|w| self.integral(w[0], w[1]).abs()).sum()
            }
            SegmentForm::Sampled(g) => {
                let f = g.0.clone();
                quad::integrate(move |x| f(x).abs(), self.start, self.end, T::lit(1e-12)).unwrap_or_else(|_| T::nan())
            }
            _ => self.integral(self.start, self.end).abs(),
        }
    }

    /// Sign of `a` almost everywhere on the segment: `Some(1)`, `Some(-1)`,
    /// or `None` when it changes sign or vanishes on a set of positive length.
    pub fn sign(&self) -> Option<i8> {
        let sign_of = |v: T| if v > T::zero() { 1 } else if v < T::zero() { -1 } else { 0 };
        match &self.form {
            SegmentForm::Constant { value } => match sign_of(*value) {
                0 => None,
                s => Some(s),
            },
            SegmentForm::PowerLeft { amp, .. } => match sign_of(*amp) {
                0 => None,
                s => Some(s),
            },
            SegmentForm::PowerRight { amp, .. } => match sign_of(*amp) {
                0 => None,
                s => Some(-s),
            },
            SegmentForm::Polynomial { .. } | SegmentForm::Sampled(_) => {
                // Interior samples only: isolated zeros at the ends are allowed.
                let n = 1024;
                let h = (self.end - self.start) / T::from_usize_lossy(n);
                let mut seen = 0i8;
                for i in 1..n {
                    let s = sign_of(self.eval(self.start + h * T::from_usize_lossy(i)));
                    if s == 0 {
                        continue;
                    }
                    if seen == 0 {
                        seen = s;
                    } else if s != seen {
                        return None;
                    }
                }
                if seen == 0 {
                    None
                } else {
                    Some(seen)
                }
            }
        }
    }

    fn sup_positive(&self) -> T {
        match &self.form {
            SegmentForm::Constant { value } => value.max(T::zero()),
            SegmentForm::PowerLeft { amp, exponent } => {
                if *amp <= T::zero() {
                    T::zero()
                } else if *exponent < T::zero() {
                    T::infinity()
                } else {
                    *amp * (self.end - self.start).powf(*exponent).max(T::zero())
                }
            }
            SegmentForm::PowerRight { amp, exponent } => {
                if *amp >= T::zero() {
                    T::zero()
                } else if *exponent < T::zero() {
                    T::infinity()
                } else {
                    -*amp * (self.end - self.start).powf(*exponent)
                }
            }
            _ => {
                let n = 1024;
                let h = (self.end - self.start) / T::from_usize_lossy(n);
                (0..=n)
                    .map(|i| self.eval(self.start + h * T::from_usize_lossy(i)))
                    .fold(T::zero(), |m, v| m.max(v))
            }
        }
    }
}

/// Which side of the node `z` a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// Local behavior of the rise `R(d)` of the weight at the node, where
/// `R(d) = int_{z-d}^{z} a` on the left and `int_{z}^{z+d} (-a)` on the right.
/// Near `d = 0`, `R(d) ~ coeff * d^(2 * exponent)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeBehavior<T> {
    pub exponent: T,
    pub coeff: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
struct WeightDef<T> {
    z: T,
    segments: Vec<Segment<T>>,
}

/// Sign-changing weight on `[0, 1]` with node `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "WeightDef<T>",
    into = "WeightDef<T>",
    bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>")
)]
pub struct Weight<T> {
    z: T,
    segments: Vec<Segment<T>>,
    mean: T,
}

impl<T: Real> TryFrom<WeightDef<T>> for Weight<T> {
    type Error = Error;
    fn try_from(d: WeightDef<T>) -> Result<Self> {
        Weight::new(d.z, d.segments)
    }
}

impl<T: Real> From<Weight<T>> for WeightDef<T> {
    fn from(w: Weight<T>) -> Self {
        WeightDef { z: w.z, segments: w.segments }
    }
}

impl<T: Real> Weight<T> {
    pub fn new(z: T, segments: Vec<Segment<T>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidWeight("no segments".into()));
        }
        if !(z > T::zero() && z < T::one()) {
            return Err(Error::InvalidWeight(format!("node z = {} outside (0, 1)", z)));
        }
        if segments[0].start != T::zero() || segments[segments.len() - 1].end != T::one() {
            return Err(Error::InvalidWeight("segments must cover [0, 1]".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.end > s.start) {
                return Err(Error::InvalidWeight(format!("segment {} is empty or reversed", i)));
            }
            if i > 0 && segments[i - 1].end != s.start {
                return Err(Error::InvalidWeight(format!("gap or overlap before segment {}", i)));
            }
            match &s.form {
                SegmentForm::PowerLeft { exponent, .. } | SegmentForm::PowerRight { exponent, .. } => {
                    if !(*exponent > -T::one()) {
                        return Err(Error::InvalidWeight(format!(
                            "power exponent {} must exceed -1",
                            exponent
                        )));
                    }
                }
                SegmentForm::Polynomial { coeffs } if coeffs.is_empty() => {
                    return Err(Error::InvalidWeight("empty polynomial".into()));
                }
                _ => {}
            }
        }
        if !segments.iter().any(|s| s.end == z) {
            return Err(Error::InvalidWeight(format!("node z = {} is not a segment boundary", z)));
        }
        let mut w = Weight { z, segments, mean: T::zero() };
        w.mean = w.segments.iter().map(|s| s.integral(s.start, s.end)).sum();
        if !w.mean.is_finite() {
            return Err(Error::InvalidWeight("weight is not integrable".into()));
        }
        Ok(w)
    }

    /// `A` on `[0, z)` and `-B` on `(z, 1]`.
    pub fn piecewise_constant(z: T, a: T, b: T) -> Result<Self> {
        Self::new(
            z,
            vec![
                Segment { start: T::zero(), end: z, form: SegmentForm::Constant { value: a } },
                Segment { start: z, end: T::one(), form: SegmentForm::Constant { value: -b } },
            ],
        )
    }

    /// `A (z - x)^alpha` on `[0, z)` and `-B (x - z)^beta` on `(z, 1]`.
    pub fn power_law(z: T, a: T, alpha: T, b: T, beta: T) -> Result<Self> {
        Self::new(
            z,
            vec![
                Segment { start: T::zero(), end: z, form: SegmentForm::PowerLeft { amp: a, exponent: alpha } },
                Segment { start: z, end: T::one(), form: SegmentForm::PowerRight { amp: b, exponent: beta } },
            ],
        )
    }

    pub fn z(&self) -> T {
        self.z
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// `int_0^1 a`.
    pub fn mean(&self) -> T {
        self.mean
    }

    /// Segment containing `x`; segments are half-open `[start, end)` except the last.
    pub fn segment_index(&self, x: T) -> usize {
        self.segments
            .iter()
            .position(|s| x < s.end)
            .unwrap_or(self.segments.len() - 1)
    }

    pub fn eval(&self, x: T) -> T {
        self.segments[self.segment_index(x)].eval(x)
    }

    /// Exact `int_{x0}^{x1} a` (with sign convention for reversed limits).
    pub fn integral(&self, x0: T, x1: T) -> T {
        if x1 < x0 {
            return -self.integral(x1, x0);
        }
        self.segments
            .iter()
            .filter(|s| s.end > x0 && s.start < x1)
            .map(|s| s.integral(x0.max(s.start), x1.min(s.end)))
            .sum()
    }

    /// `||a||_{L^1}`.
    pub fn abs_integral(&self) -> T {
        self.segments.iter().map(|s| s.abs_integral()).sum()
    }

    /// `ess sup a^+`, used for eigenvalue bracketing.
    pub fn sup_positive(&self) -> T {
        self.segments.iter().fold(T::zero(), |m, s| m.max(s.sup_positive()))
    }

    /// Interior segment boundaries, increasing.
    pub fn breakpoints(&self) -> Vec<T> {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.end).collect()
    }

    pub fn has_sampled_segments(&self) -> bool {
        self.segments.iter().any(|s| matches!(s.form, SegmentForm::Sampled(_)))
    }

    /// (a1): negative mean and a positive part of positive measure.
    pub fn satisfies_a1(&self) -> bool {
        self.mean < T::zero() && self.segments.iter().any(|s| s.sup_positive() > T::zero())
    }

    /// (a2): positive a.e. on `(0, z)`, negative a.e. on `(z, 1)`, negative mean.
    pub fn check_a2(&self) -> Result<()> {
        if !(self.mean < T::zero()) {
            return Err(Error::NotA2(format!("mean {} is not negative", self.mean)));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let want = if s.end <= self.z { 1 } else { -1 };
            if s.sign() != Some(want) {
                return Err(Error::NotA2(format!(
                    "segment {} on [{}, {}] does not have sign {}",
                    i, s.start, s.end, want
                )));
            }
        }
        Ok(())
    }

    pub fn satisfies_a2(&self) -> bool {
        self.check_a2().is_ok()
    }

    /// One-sided limits `(a(z-), a(z+))`.
    pub fn node_limits(&self) -> (T, T) {
        let k = self.segment_index(self.z);
        (self.segments[k - 1].eval(self.z), self.segments[k].eval(self.z))
    }

    /// (a6) with the jump realized at the node itself: `a(z-) > 0 > a(z+)`.
    pub fn has_node_jump(&self) -> bool {
        let (l, r) = self.node_limits();
        l > T::zero() && r < T::zero() && l.is_finite() && r.is_finite()
    }

    /// The unique zero of `x -> int_0^x a` in `(z, 1)`, under (a2).
    pub fn x_omega(&self) -> Result<T> {
        self.check_a2()?;
        crate::roots::bisect(|x| Ok(self.integral(T::zero(), x)), self.z, T::one(), T::zero(), T::lit(1e-15), 200)
    }

    fn adjacent(&self, side: Side) -> &Segment<T> {
        let k = self.segment_index(self.z);
        match side {
            Side::Left => &self.segments[k - 1],
            Side::Right => &self.segments[k],
        }
    }

    /// Rise of the weight measured from the node, `int_x^z a` for `x < z`
    /// and `int_z^x (-a)` for `x > z`; computed without cancellation on the
    /// segment adjacent to the node.
    pub fn rise_from_node(&self, x: T) -> T {
        if x == self.z {
            return T::zero();
        }
        let side = if x < self.z { Side::Left } else { Side::Right };
        self.rise_at_distance(side, (self.z - x).abs())
    }

    /// [`Weight::rise_from_node`] at `x = z -+ d`, with `d` given exactly.
    pub fn rise_at_distance(&self, side: Side, d: T) -> T {
        let z = self.z;
        let adj = self.adjacent(side);
        let local = |d: T| -> T {
            match (&adj.form, side) {
                (SegmentForm::Constant { value }, Side::Left) => *value * d,
                (SegmentForm::Constant { value }, Side::Right) => -*value * d,
                (SegmentForm::PowerLeft { amp, exponent }, Side::Left) => {
                    let e1 = *exponent + T::one();
                    *amp * d.powf(e1) / e1
                }
                (SegmentForm::PowerRight { amp, exponent }, Side::Right) => {
                    let e1 = *exponent + T::one();
                    *amp * d.powf(e1) / e1
                }
                (SegmentForm::Polynomial { coeffs }, _) => {
                    let b = taylor_shift(coeffs, z);
                    let sgn = if side == Side::Left { -T::one() } else { T::one() };
                    // int over [z - d, z] of a, or over [z, z + d] of -a.
                    let mut acc = T::zero();
                    let mut pow = d;
                    let mut alt = T::one();
                    for (k, bk) in b.iter().enumerate() {
                        let term = *bk * pow / T::from_usize_lossy(k + 1);
                        acc = acc + if side == Side::Left { alt * term } else { sgn * term };
                        pow = pow * d;
                        alt = -alt;
                    }
                    acc
                }
                (_, Side::Left) => adj.integral(z - d, z),
                (_, Side::Right) => -adj.integral(z, z + d),
            }
        };
        match side {
            Side::Left => {
                let inner = z - adj.start;
                if d <= inner {
                    local(d)
                } else {
                    local(inner) + self.integral(z - d, adj.start)
                }
            }
            Side::Right => {
                let inner = adj.end - z;
                if d <= inner {
                    local(d)
                } else {
                    local(inner) - self.integral(adj.end, z + d)
                }
            }
        }
    }

    /// Leading-order behavior of the rise at the node from one side, or
    /// `None` for sampled segments (no certificate possible).
    pub fn node_behavior(&self, side: Side) -> Option<NodeBehavior<T>> {
        let adj = self.adjacent(side);
        let z = self.z;
        let half = T::lit(0.5);
        match (&adj.form, side) {
            (SegmentForm::PowerLeft { amp, exponent }, Side::Left) if adj.end == z => Some(NodeBehavior {
                exponent: (*exponent + T::one()) * half,
                coeff: *amp / (*exponent + T::one()),
            }),
            (SegmentForm::PowerRight { amp, exponent }, Side::Right) if adj.start == z => Some(NodeBehavior {
                exponent: (*exponent + T::one()) * half,
                coeff: *amp / (*exponent + T::one()),
            }),
            (SegmentForm::Polynomial { coeffs }, _) => {
                let b = taylor_shift(coeffs, z);
                let scale = coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs())).max(T::min_positive_value());
                let thresh = scale * T::lit(1e-12);
                let k = b.iter().position(|bk| bk.abs() > thresh)?;
                let kk = T::from_usize_lossy(k);
                // R(d) = |b_k| d^(k+1) / (k+1) to leading order.
                Some(NodeBehavior { exponent: (kk + T::one()) * half, coeff: b[k].abs() / (kk + T::one()) })
            }
            (SegmentForm::Sampled(_), _) => None,
            _ => {
                let v = adj.eval(z).abs();
                if v == T::zero() {
                    None
                } else {
                    Some(NodeBehavior { exponent: half, coeff: v })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn jump() -> Weight<f64> {
        Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let w = jump();
        assert_eq!(w.eval(0.2), 1.0);
        assert_eq!(w.eval(0.7), -2.0);
        let p = Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p.eval(0.3), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn integral_examples() {
        let w = jump();
        assert_relative_eq!(w.integral(0.0, 1.0), -0.8, epsilon = 1e-15);
        assert_relative_eq!(w.mean(), -0.8, epsilon = 1e-15);
        assert_eq!(w.integral(0.3, 0.3), 0.0);
        let p = Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p.integral(0.3, 0.4), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Weight::piecewise_constant(1.2, 1.0, 2.0).is_err());
        assert!(Weight::power_law(0.4, 1.0, -1.0, 1.0, 1.0).is_err());
        let gap = vec![
            Segment { start: 0.0, end: 0.3, form: SegmentForm::Constant { value: 1.0 } },
            Segment { start: 0.4, end: 1.0, form: SegmentForm::Constant { value: -1.0 } },
        ];
        assert!(Weight::new(0.3, gap).is_err());
        let ok = vec![
            Segment { start: 0.0, end: 0.4, form: SegmentForm::Constant { value: 1.0 } },
            Segment { start: 0.4, end: 1.0, form: SegmentForm::Constant { value: -1.0 } },
        ];
        assert!(Weight::new(0.5, ok).is_err());
    }

    #[test]
    fn sign_conditions() {
        let w = jump();
        assert!(w.satisfies_a1());
        assert!(w.satisfies_a2());
        assert!(w.has_node_jump());
        let flipped = Weight::piecewise_constant(0.4, 1.0, 0.5).unwrap();
        assert!(!flipped.satisfies_a2()); // mean 0.4 - 0.3 > 0
        let p = Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(p.satisfies_a2());
        assert!(!p.has_node_jump());
    }

    #[test]
    fn x_omega_of_jump_weight() {
        // int_0^x a = 0.4 - 2 (x - 0.4) = 0 at x = 0.6.
        assert_relative_eq!(jump().x_omega().unwrap(), 0.6, epsilon = 1e-13);
    }

    #[test]
    fn polynomial_rise_matches_power_law() {
        // a(x) = z - x on the left expressed as a polynomial.
        let segs = vec![
            Segment { start: 0.0, end: 0.4, form: SegmentForm::Polynomial { coeffs: vec![0.4, -1.0] } },
            Segment { start: 0.4, end: 1.0, form: SegmentForm::PowerRight { amp: 1.0, exponent: 1.0 } },
        ];
        let w = Weight::new(0.4, segs).unwrap();
        let p = Weight::power_law(0.4, 1.0, 1.0, 1.0, 1.0).unwrap();
        for &x in &[0.0, 0.1, 0.39, 0.399999, 0.5, 0.9] {
            assert_relative_eq!(w.rise_from_node(x), p.rise_from_node(x), max_relative = 1e-9);
        }
        let nb = w.node_behavior(Side::Left).unwrap();
        assert_relative_eq!(nb.exponent, 1.0);
        assert_relative_eq!(nb.coeff, 0.5);
    }

    #[test]
    fn abs_integral_splits_polynomial_sign_changes() {
        // a = x - 0.5 on [0,1]: ||a||_1 = 1/4.
        let segs = vec![
            Segment { start: 0.0, end: 0.25, form: SegmentForm::Polynomial { coeffs: vec![-0.5, 1.0] } },
            Segment { start: 0.25, end: 1.0, form: SegmentForm::Polynomial { coeffs: vec![-0.5, 1.0] } },
        ];
        let w = Weight::new(0.25, segs).unwrap();
        assert_relative_eq!(w.abs_integral(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(jump().abs_integral(), 1.6, epsilon = 1e-15);
    }

    #[test]
    fn json_round_trip_and_field_names() {
        let w = jump();
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.contains("\"z\""));
        assert!(s.contains("\"segments\""));
        assert!(s.contains("\"form\":\"constant\""));
        let back: Weight<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
        let bad = r#"{"z":0.4,"segments":[{"start":0,"end":0.5,"form":"constant","value":1}]}"#;
        assert!(serde_json::from_str::<Weight<f64>>(bad).is_err());
    }

    proptest! {
        #[test]
        fn integral_is_additive(a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0,
                                alpha in -0.9f64..3.0, beta in -0.9f64..3.0) {
            let mut v = [a, b, c];
            v.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let w = Weight::power_law(0.4, 1.3, alpha, 0.7, beta).unwrap();
            let whole = w.integral(v[0], v[2]);
            let parts = w.integral(v[0], v[1]) + w.integral(v[1], v[2]);
            prop_assert!((whole - parts).abs() <= 1e-14 * (1.0 + whole.abs()));
        }
    }
}
