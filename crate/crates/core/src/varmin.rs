//! Direct minimization of the discretized bounded-variation functional
//!
//! ```text
//! J(u) = sum (sqrt(h^2 + du_i^2) - h) - lambda sum a_i h (F(u_i) + F(u_{i+1})) / 2
//! ```
//!
//! on a uniform mesh. Jumps are represented by steep segments, whose length
//! cost tends to `|du|`, so the functional stays smooth and a quasi-Newton
//! descent is enough.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Problem, SolutionMesh};
use crate::scalar::{logspace, Real};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 16;

const MEMORY: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;

/// Nodal values `u_0..u_n` on the uniform mesh `x_i = i / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteBVFunction<T> {
    pub values: Vec<T>,
}

impl<T: Real> DiscreteBVFunction<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < MIN_CELLS + 1 {
            return Err(Error::MeshTooCoarse { points: values.len(), required: MIN_CELLS + 1 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial values".into()));
        }
        Ok(Self { values })
    }

    /// Samples `g` at the `n + 1` nodes.
    pub fn sample<G: Fn(T) -> T>(n: usize, g: G) -> Result<Self> {
        let h = T::one() / T::from_usize_lossy(n);
        Self::new((0..=n).map(|i| g(T::from_usize_lossy(i) * h)).collect())
    }

    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn h(&self) -> T {
        T::one() / T::from_usize_lossy(self.cells())
    }

    pub fn x(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.h()
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest single-cell increment `|u_{i+1} - u_i|`.
    pub fn max_step(&self) -> (usize, T) {
        self.values.windows(2).enumerate().fold((0, T::zero()), |best, (i, w)| {
            let d = (w[1] - w[0]).abs();
            if d > best.1 { (i, d) } else { best }
        })
    }

    /// The graph as a solution mesh, with node slopes from centered differences.
    pub fn to_mesh(&self) -> SolutionMesh<T> {
        let n = self.cells();
        let h = self.h();
        let u = &self.values;
        let du: Vec<T> = (0..=n)
            .map(|i| if i == 0 || i == n { T::zero() } else { (u[i + 1] - u[i - 1]) / (h + h) })
            .collect();
        SolutionMesh::from_slope((0..=n).map(|i| self.x(i)).collect(), u.clone(), &du)
    }
}

/// Cell weights `integral of a over cell i`, the only place the weight enters.
struct Functional<'a, T> {
    pb: &'a Problem<T>,
    h: T,
    mass: Vec<T>,
}

impl<'a, T: Real> Functional<'a, T> {
    fn new(pb: &'a Problem<T>, n: usize) -> Self {
        let h = T::one() / T::from_usize_lossy(n);
        let x = |i: usize| if i == n { T::one() } else { T::from_usize_lossy(i) * h };
        let mass = (0..n).map(|i| pb.weight.integral(x(i), x(i + 1))).collect();
        Self { pb, h, mass }
    }

    fn potential(&self, u: T) -> T {
        self.pb.f.primitive(u.abs())
    }

    fn force(&self, u: T) -> T {
        let f = self.pb.f.eval(u.abs());
        if u < T::zero() { -f } else { f }
    }

    fn value(&self, u: &[T]) -> T {
        let h = self.h;
        let half = T::lit(0.5);
        let mut length = T::zero();
        let mut pot = T::zero();
        for (i, w) in u.windows(2).enumerate() {
            let d = w[1] - w[0];
            // sqrt(h^2 + d^2) - h without cancellation
            length = length + d * d / ((h * h + d * d).sqrt() + h);
            pot = pot + self.mass[i] * half * (self.potential(w[0]) + self.potential(w[1]));
        }
        length - self.pb.lambda * pot
    }

    fn gradient(&self, u: &[T], g: &mut [T]) {
        let h = self.h;
        let half = T::lit(0.5);
        let n = u.len() - 1;
        g.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..n {
            let d = u[i + 1] - u[i];
            let s = d / (h * h + d * d).sqrt();
            g[i] = g[i] - s;
            g[i + 1] = g[i + 1] + s;
        }
        for j in 0..=n {
            let m = if j > 0 { self.mass[j - 1] } else { T::zero() } + if j < n { self.mass[j] } else { T::zero() };
            g[j] = g[j] - self.pb.lambda * half * m * self.force(u[j]);
        }
    }

    /// Gradient measured per unit length, the discrete analogue of the
    /// equation residual; independent of the mesh size.
    fn grad_norm(&self, g: &[T]) -> T {
        g.iter().fold(T::zero(), |m, v| m.max(v.abs())) / self.h
    }
}

/// Discrete functional value.
pub fn functional_value<T: Real>(pb: &Problem<T>, u: &DiscreteBVFunction<T>) -> T {
    Functional::new(pb, u.cells()).value(&u.values)
}

/// Outcome of one descent run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Minimizer<T> {
    pub u: DiscreteBVFunction<T>,
    pub value: T,
    pub iterations: usize,
    pub grad_norm: T,
    pub converged: bool,
    /// Functional value after each accepted step, starting with the initial value.
    pub history: Vec<T>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// L-BFGS with Armijo backtracking. Every accepted step decreases the
/// functional; the returned minimizer is `|u|`, which never has a larger value.
pub fn minimize<T: Real>(pb: &Problem<T>, init: &DiscreteBVFunction<T>, max_iter: usize, tol: T) -> Result<Minimizer<T>> {
    pb.check_solvable()?;
    let n = init.cells();
    let fun = Functional::new(pb, n);
    let mut u = init.values.clone();
    let mut val = fun.value(&u);
    if !val.is_finite() {
        return Err(Error::NonFinite("functional at the initial point".into()));
    }
    let mut g = vec![T::zero(); n + 1];
    fun.gradient(&u, &mut g);
    let mut history = vec![val];
    let mut mem: Vec<(Vec<T>, Vec<T>, T)> = Vec::with_capacity(MEMORY);
    let mut trial = vec![T::zero(); n + 1];
    let mut g_new = vec![T::zero(); n + 1];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        if fun.grad_norm(&g) <= tol {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut d: Vec<T> = g.iter().map(|v| -*v).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = *rho * dot(s, &d);
            d.iter_mut().zip(y).for_each(|(di, yi)| *di = *di - a * *yi);
            alphas.push(a);
        }
        let gamma = match mem.last() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            // first step: move at most 10% of the current height scale
            None => {
                let scale = u.iter().fold(T::one(), |m, v| m.max(v.abs()));
                T::lit(0.1) * scale / g.iter().fold(T::min_positive_value(), |m, v| m.max(v.abs()))
            }
        };
        d.iter_mut().for_each(|v| *v = *v * gamma);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = *rho * dot(y, &d);
            d.iter_mut().zip(s).for_each(|(di, si)| *di = *di + (*a - b) * *si);
        }
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            mem.clear();
            d = g.iter().map(|v| -*v).collect();
            slope = dot(&g, &d);
        }

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            trial.iter_mut().zip(&u).zip(&d).for_each(|((t, ui), di)| *t = *ui + step * *di);
            let v = fun.value(&trial);
            if v.is_finite() && v <= val + T::lit(ARMIJO) * step * slope {
                accepted = Some(v);
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some(v) = accepted else { break };
        iterations += 1;
        fun.gradient(&trial, &mut g_new);
        let s: Vec<T> = trial.iter().zip(&u).map(|(a, b)| *a - *b).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(a, b)| *a - *b).collect();
        let sy = dot(&s, &y);
        if sy > T::epsilon() * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if mem.len() == MEMORY {
                mem.remove(0);
            }
            mem.push((s, y, T::one() / sy));
        }
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut g, &mut g_new);
        let stalled = v == val;
        val = v;
        history.push(val);
        if stalled {
            break;
        }
    }

    let abs: Vec<T> = u.iter().map(|v| v.abs()).collect();
    let abs_val = fun.value(&abs);
    if abs_val < val {
        val = abs_val;
        fun.gradient(&abs, &mut g);
        history.push(val);
    }
    Ok(Minimizer {
        grad_norm: fun.grad_norm(&g),
        u: DiscreteBVFunction { values: abs },
        value: val,
        iterations,
        converged,
        history,
    })
}

/// Deterministic starting profiles: cosine bumps and node-centred steps
/// with heights log-spaced in `[lo, hi]`, alternating shapes.
pub fn starts<T: Real>(pb: &Problem<T>, n: usize, count: usize, lo: T, hi: T) -> Result<Vec<DiscreteBVFunction<T>>> {
    let z = pb.weight.z();
    let heights = if count > 1 { logspace(lo, hi, count) } else { vec![hi] };
    heights
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            if k % 2 == 0 {
                DiscreteBVFunction::sample(n, |x| c * T::lit(0.5) * (T::one() + (T::PI() * x).cos()))
            } else {
                DiscreteBVFunction::sample(n, |x| if x < z { c } else { c * T::lit(1e-2) })
            }
        })
        .collect()
}

/// Result of independent descents from several starts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiStart<T> {
    pub runs: Vec<Minimizer<T>>,
    /// Index of the run with the lowest value.
    pub best: usize,
}

impl<T: Real> MultiStart<T> {
    pub fn best(&self) -> &Minimizer<T> {
        &self.runs[self.best]
    }

    /// Largest disagreement between final values; reported, not resolved.
    pub fn value_spread(&self) -> T {
        let lo = self.runs.iter().fold(T::infinity(), |m, r| m.min(r.value));
        let hi = self.runs.iter().fold(T::neg_infinity(), |m, r| m.max(r.value));
        hi - lo
    }
}

/// Runs [`minimize`] from every start concurrently.
pub fn multi_start<T: Real>(
    pb: &Problem<T>,
    inits: &[DiscreteBVFunction<T>],
    max_iter: usize,
    tol: T,
) -> Result<MultiStart<T>> {
    if inits.is_empty() {
        return Err(Error::Precondition("at least one start is required".into()));
    }
    let runs = inits.par_iter().map(|u| minimize(pb, u, max_iter, tol)).collect::<Result<Vec<_>>>()?;
    let best = (0..runs.len()).fold(0, |b, i| if runs[i].value < runs[b].value { i } else { b });
    Ok(MultiStart { runs, best })
}

/// Lower bound `J >= A (|Du| + |r|^e) - B` fitted to samples, where `r` is
/// the mean of `u` and `e = 1 - q` the growth exponent of `F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityFit<T> {
    pub a: T,
    pub b: T,
}

/// Size of `u` in the coercivity bound: total variation plus `|mean|^e`.
pub fn coercivity_norm<T: Real>(u: &DiscreteBVFunction<T>, e: T) -> T {
    let tv: T = u.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let h = u.h();
    let mean: T = u.values.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5) * h).sum();
    tv + mean.abs().powf(e)
}

/// Fits `A` by least squares of `J` against the coercivity norm along the
/// rays `t (r + w)` for each `t` in `scales`, then takes the smallest `B`
/// for which the bound holds at every sample.
pub fn coercivity_fit<T: Real>(pb: &Problem<T>, rays: &[DiscreteBVFunction<T>], scales: &[T]) -> Result<CoercivityFit<T>> {
    let e = T::one() - pb.f.q();
    let mut pts = Vec::new();
    for ray in rays {
        for &t in scales {
            let u = DiscreteBVFunction { values: ray.values.iter().map(|v| *v * t).collect() };
            let j = functional_value(pb, &u);
            if !j.is_finite() {
                return Err(Error::NonFinite("functional on a coercivity ray".into()));
            }
            pts.push((coercivity_norm(&u, e), j));
        }
    }
    if pts.len() < 2 {
        return Err(Error::Precondition("coercivity fit needs at least two samples".into()));
    }
    let k = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / k;
    let my = pts.iter().map(|p| p.1).sum::<T>() / k;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let a = sxy / sxx;
    let b = pts.iter().fold(T::neg_infinity(), |m, p| m.max(a * p.0 - p.1));
    Ok(CoercivityFit { a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::principal_neumann;
    use crate::model::{Nonlinearity, Weight};

    fn jump(lambda: f64) -> Problem<f64> {
        Problem::new(lambda, Weight::piecewise_constant(0.4, 1.0, 2.0).unwrap(), Nonlinearity::smoothed(1.0, 0.5, 0.1).unwrap())
    }

    #[test]
    fn trivial_values() {
        let pb = jump(3.0);
        let zero = DiscreteBVFunction::sample(64, |_| 0.0).unwrap();
        assert_eq!(functional_value(&pb, &zero), 0.0);
        let c = 0.7;
        let flat = DiscreteBVFunction::sample(64, |_| c).unwrap();
        let expect = -3.0 * pb.f.primitive(c) * pb.weight.integral(0.0, 1.0);
        assert!(expect > 0.0);
        assert!((functional_value(&pb, &flat) - expect).abs() < 1e-13);
        assert!(DiscreteBVFunction::<f64>::sample(8, |_| 0.0).is_err());
    }

    #[test]
    fn gradient_matches_differences() {
        let pb = jump(7.0);
        let u = DiscreteBVFunction::sample(32, |x: f64| 0.3 + 0.2 * (5.0 * x).sin()).unwrap();
        let fun = Functional::new(&pb, 32);
        let mut g = vec![0.0; 33];
        fun.gradient(&u.values, &mut g);
        for j in [0, 7, 13, 32] {
            let mut up = u.values.clone();
            let mut dn = u.values.clone();
            up[j] += 1e-6;
            dn[j] -= 1e-6;
            let fd = (fun.value(&up) - fun.value(&dn)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-7 * (1.0 + g[j].abs()), "node {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn eigenfunction_direction_is_negative_above_lambda0() {
        let pb = jump(1.0);
        let pair = principal_neumann(&pb.weight).unwrap();
        let pb = pb.with_lambda(2.0 * pair.eigenvalue);
        let phi = SolutionMesh::from_slope(pair.x.clone(), pair.phi.clone(), &pair.dphi);
        let s = 1e-2 / phi.sup_norm();
        let u = DiscreteBVFunction::sample(256, |x| s * phi.interp_u(x)).unwrap();
        assert!(functional_value(&pb, &u) < 0.0);
    }

    #[test]
    fn descent_is_monotone_and_returns_abs() {
        let pb = jump(11.0);
        let init = DiscreteBVFunction::sample(64, |x: f64| 0.2 * (3.0 * x).cos()).unwrap();
        let m = minimize(&pb, &init, 4000, 1e-8).unwrap();
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.u.values.iter().all(|v| *v >= 0.0));
        assert!(m.value < 0.0);
    }
}
