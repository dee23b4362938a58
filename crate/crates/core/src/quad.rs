//! Adaptive Gauss–Kronrod quadrature and the node criterion integrals
//! `int_0^z (int_x^z a)^(-1/2) dx` and `int_z^1 (int_z^x (-a))^(-1/2) dx`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SegmentForm, Side, Weight};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 4000;

/// Default absolute tolerance of [`integrate`].
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default relative tolerance of [`criterion_integral`].
pub const DEFAULT_CRITERION_TOL: f64 = 1e-6;

fn gk15<T: Real, G: Fn(T) -> T>(g: &G, a: T, b: T) -> (T, T) {
    let c = (a + b) / T::lit(2.0);
    let r = (b - a) / T::lit(2.0);
    let fc = g(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut gs = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = r * T::lit(XGK[j]);
        let s = g(c - dx) + g(c + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gs = gs + s * T::lit(WG[j / 2]);
        }
    }
    (k * r, ((k - gs) * r).abs())
}

/// Adaptive integral of `g` over `[x0, x1]` with absolute error `<= tol`.
/// `g` is never evaluated at the end points.
pub fn integrate<T: Real, G: Fn(T) -> T>(g: G, x0: T, x1: T, tol: T) -> Result<T> {
    integrate_pieces(&g, &[x0, x1], tol)
}

/// As [`integrate`] over consecutive intervals `[p_i, p_{i+1}]` of `points`,
/// which must be non-decreasing. Breaks keep kinks off the Kronrod nodes.
pub fn integrate_pieces<T: Real, G: Fn(T) -> T>(g: &G, points: &[T], tol: T) -> Result<T> {
    let mut parts: Vec<(T, T, T, T)> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (v, e) = gk15(g, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    if parts.is_empty() {
        return Ok(T::zero());
    }
    let span = points[points.len() - 1] - points[0];
    loop {
        let total: T = parts.iter().map(|p| p.2).sum();
        let err: T = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::NonFinite("integrand".into()));
        }
        if err <= tol {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::BudgetExhausted {
                lo: points[0].to_f64_lossy(),
                hi: points[points.len() - 1].to_f64_lossy(),
                estimate: err.to_f64_lossy(),
            });
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(k, m), (i, p)| if p.3 > m { (i, p.3) } else { (k, m) });
        let (a, b, _, _) = parts[k];
        let m = (a + b) / T::lit(2.0);
        if !(m > a && m < b) || b - a < span * T::lit(1e-15) {
            return Err(Error::BudgetExhausted {
                lo: a.to_f64_lossy(),
                hi: b.to_f64_lossy(),
                estimate: err.to_f64_lossy(),
            });
        }
        let (v1, e1) = gk15(g, a, m);
        let (v2, e2) = gk15(g, m, b);
        parts[k] = (a, m, v1, e1);
        parts.push((m, b, v2, e2));
    }
}

/// A nonnegative value or a certified divergence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtendedReal<T> {
    Finite { value: T },
    /// The integrand behaves like `d^(-exponent)` at the node, `exponent >= 1`.
    Infinite { exponent: T },
}

impl<T: Real> ExtendedReal<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedReal::Infinite { .. })
    }

    pub fn value(&self) -> Option<T> {
        match self {
            ExtendedReal::Finite { value } => Some(*value),
            ExtendedReal::Infinite { .. } => None,
        }
    }
}

/// Criterion integral on one side of the node. Divergence is decided from the
/// leading exponent of the weight at `z`; finite values come from the closed
/// form for a single constant or anchored power segment, and otherwise from
/// adaptive quadrature in `t = d^(1 - e)`, `d = |z - x|`, which removes the
/// endpoint singularity.
pub fn criterion_integral<T: Real>(w: &Weight<T>, side: Side, rel_tol: T) -> Result<ExtendedReal<T>> {
    w.check_a2()?;
    let z = w.z();
    let segs: Vec<_> = w
        .segments()
        .iter()
        .filter(|s| match side {
            Side::Left => s.end <= z,
            Side::Right => s.start >= z,
        })
        .collect();
    if segs.iter().any(|s| matches!(s.form, SegmentForm::Sampled(_))) {
        return Err(Error::Unsupported("criterion integrals need analytic weight segments".into()));
    }
    let nb = w
        .node_behavior(side)
        .ok_or_else(|| Error::Unsupported("weight vanishes identically at the node".into()))?;
    let e = nb.exponent;
    if e >= T::one() {
        return Ok(ExtendedReal::Infinite { exponent: e });
    }
    let len = match side {
        Side::Left => z,
        Side::Right => T::one() - z,
    };
    let one_minus = T::one() - e;
    let closed = nb.coeff.powf(-T::lit(0.5)) * len.powf(one_minus) / one_minus;
    let single_exact = segs.len() == 1
        && matches!(
            (&segs[0].form, side),
            (SegmentForm::Constant { .. }, _)
                | (SegmentForm::PowerLeft { .. }, Side::Left)
                | (SegmentForm::PowerRight { .. }, Side::Right)
        );
    if single_exact {
        return Ok(ExtendedReal::Finite { value: closed });
    }
    let limit = nb.coeff.powf(-T::lit(0.5)) / one_minus;
    let inv = T::one() / one_minus;
    let g = |t: T| -> T {
        if t <= T::zero() {
            return limit;
        }
        let r = w.rise_at_distance(side, t.powf(inv));
        r.powf(-T::lit(0.5)) * inv * t.powf(e * inv)
    };
    let mut breaks: Vec<T> = segs
        .iter()
        .flat_map(|s| [s.start, s.end])
        .map(|x| (x - z).abs().powf(one_minus).min(len.powf(one_minus)))
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    breaks.dedup();
    let value = integrate_pieces(&g, &breaks, rel_tol * closed.abs().max(T::min_positive_value()))?;
    Ok(ExtendedReal::Finite { value })
}
