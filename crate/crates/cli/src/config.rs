//! Run configuration: every knob can come from a flag or a JSON config file.
//! Flags win over the config file, which wins over built-in defaults.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer};

use curvebif::{Nonlinearity, Problem, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    /// `A` on `[0, z)`, `-B` on `(z, 1]`.
    Jump,
    /// `A (z - x)^alpha` on `[0, z)`, `-B (x - z)^beta` on `(z, 1]`.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FKind {
    Prototype,
    Smoothed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seed {
    Lambda0,
    Origin,
    LargeLambda,
}

/// Accepts a string or an inline object for `problem` in config files.
fn problem_field<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let v = Option::<serde_json::Value>::deserialize(d)?;
    Ok(v.map(|v| match v {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }))
}

macro_rules! knobs {
    ($($(#[$m:meta])* $name:ident: $ty:ty,)*) => {
        /// Global options. Every field is optional so that flags and config
        /// files can be merged field by field.
        #[derive(Args, Clone, Debug, Default, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Knobs {
            $($(#[$m])* pub $name: Option<$ty>,)*
        }

        impl Knobs {
            /// Fields set in `self` win; the rest come from `lower`.
            pub fn over(self, lower: Knobs) -> Knobs {
                Knobs { $($name: self.$name.or(lower.$name),)* }
            }
        }
    };
}

knobs! {
    /// Problem as inline JSON (starting with `{`) or a path to a JSON file.
    #[arg(long, global = true)]
    #[serde(default, deserialize_with = "problem_field")]
    problem: String,
    /// Parameter value.
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda: f64,
    /// Worker threads; `CURVEBIF_THREADS` applies when unset.
    #[arg(long, global = true)]
    threads: usize,
    /// Run on a single worker thread.
    #[arg(long, global = true, num_args = 0, default_missing_value = "true")]
    deterministic: bool,
    /// Output file (JSON, or CSV for `branch` and `diagram`).
    #[arg(long, global = true)]
    out: PathBuf,
    /// SVG plot file.
    #[arg(long, global = true)]
    svg: PathBuf,

    #[arg(long, global = true, value_enum)]
    weight: WeightKind,
    /// Node position.
    #[arg(long, global = true)]
    z: f64,
    #[arg(long, global = true)]
    a: f64,
    #[arg(long, global = true)]
    b: f64,
    #[arg(long, global = true)]
    alpha: f64,
    #[arg(long, global = true)]
    beta: f64,

    #[arg(long, global = true, value_enum)]
    f: FKind,
    #[arg(long, global = true)]
    p: f64,
    #[arg(long, global = true)]
    q: f64,
    #[arg(long, global = true)]
    m: f64,

    /// Lower end of the `u(0)` scan.
    #[arg(long, global = true)]
    s_min: f64,
    /// Upper end of the `u(0)` scan.
    #[arg(long, global = true)]
    s_max: f64,
    /// Number of scan points.
    #[arg(long, global = true)]
    scan: usize,

    #[arg(long, global = true, value_enum)]
    seed: Seed,
    /// Start height on the line of constants (`--seed origin`).
    #[arg(long, global = true)]
    s0: f64,
    /// Start amplitude next to `lambda0` (`--seed lambda0`).
    #[arg(long, global = true)]
    eps: f64,
    #[arg(long, global = true)]
    h0: f64,
    #[arg(long, global = true)]
    h_max: f64,
    #[arg(long, global = true)]
    max_points: usize,
    #[arg(long, global = true)]
    lambda_max: f64,

    /// Grid cells for the discrete functional.
    #[arg(long, global = true)]
    n: usize,
    /// Number of minimization starts.
    #[arg(long, global = true)]
    starts: usize,
    #[arg(long, global = true)]
    max_iter: usize,
    /// Gradient tolerance.
    #[arg(long, global = true)]
    tol: f64,

    /// Comma-separated increasing list of lambda values.
    #[arg(long, global = true, value_delimiter = ',')]
    ladder: Vec<f64>,
    /// Distance from the node excluded by the profile probes.
    #[arg(long, global = true)]
    eta: f64,
    /// Small-solution scaling instead of the large-solution profile laws.
    #[arg(long, global = true, num_args = 0, default_missing_value = "true")]
    small: bool,
}

impl Knobs {
    pub fn from_file(path: &std::path::Path) -> Result<Knobs> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Rejects non-positive tolerances and sizes.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("s-min", self.s_min),
            ("s-max", self.s_max),
            ("eps", self.eps),
            ("h0", self.h0),
            ("h-max", self.h_max),
            ("lambda-max", self.lambda_max),
            ("tol", self.tol),
            ("eta", self.eta),
            ("s0", self.s0),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    bail!("--{name} must be positive and finite, got {v}");
                }
            }
        }
        let counts = [("threads", self.threads), ("scan", self.scan), ("max-points", self.max_points), ("n", self.n), ("starts", self.starts), ("max-iter", self.max_iter)];
        for (name, v) in counts {
            if v == Some(0) {
                bail!("--{name} must be positive");
            }
        }
        if let (Some(lo), Some(hi)) = (self.s_min, self.s_max) {
            if lo >= hi {
                bail!("--s-min {lo} must be below --s-max {hi}");
            }
        }
        Ok(())
    }

    /// The problem spec, then weight and nonlinearity knobs on top, then `lambda`.
    pub fn problem(&self) -> Result<Problem> {
        let mut pb = match &self.problem {
            Some(spec) => read_problem(spec)?,
            None => Problem::new(1.0, Weight::piecewise_constant(0.4, 1.0, 2.0)?, Nonlinearity::prototype(1.0, 0.5, 1.0)?),
        };
        let weight_set = self.weight.is_some() || [self.z, self.a, self.b, self.alpha, self.beta].iter().any(Option::is_some);
        if weight_set {
            let kind = self.weight.unwrap_or(if self.alpha.is_some() || self.beta.is_some() { WeightKind::Power } else { WeightKind::Jump });
            let (z, a, b) = (self.z.unwrap_or(0.4), self.a.unwrap_or(1.0), self.b.unwrap_or(2.0));
            pb.weight = match kind {
                WeightKind::Jump => Weight::piecewise_constant(z, a, b)?,
                WeightKind::Power => Weight::power_law(z, a, self.alpha.unwrap_or(1.0), b, self.beta.unwrap_or(1.0))?,
            };
        }
        if self.f.is_some() || [self.p, self.q, self.m].iter().any(Option::is_some) {
            let (p, q, m) = (self.p.unwrap_or(1.0), self.q.unwrap_or(0.5), self.m.unwrap_or(1.0));
            pb.f = match self.f.unwrap_or(FKind::Prototype) {
                FKind::Prototype => Nonlinearity::prototype(p, q, m)?,
                FKind::Smoothed => Nonlinearity::smoothed(p, q, m)?,
            };
        }
        if let Some(l) = self.lambda {
            pb.lambda = l;
        }
        Ok(pb)
    }

    pub fn worker_threads(&self) -> Option<usize> {
        if self.deterministic == Some(true) {
            return Some(1);
        }
        self.threads.or_else(|| std::env::var("CURVEBIF_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0))
    }
}

fn read_problem(spec: &str) -> Result<Problem> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).with_context(|| format!("cannot read problem spec {spec}"))?
    };
    serde_json::from_str(&text).context("invalid problem spec")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_override_defaults() {
        let flags = Knobs { z: Some(0.3), ..Knobs::default() };
        let file: Knobs = serde_json::from_str(r#"{"z": 0.5, "b": 3.0}"#).unwrap();
        let k = flags.over(file);
        assert_eq!((k.z, k.b, k.a), (Some(0.3), Some(3.0), None));
        let pb = k.problem().unwrap();
        assert_eq!(pb.weight, Weight::piecewise_constant(0.3, 1.0, 3.0).unwrap());
    }

    #[test]
    fn config_accepts_inline_problem_objects() {
        let k: Knobs = serde_json::from_str(
            r#"{"problem": {"lambda": 7.0, "weight": {"z": 0.5, "segments": [
                {"start": 0.0, "end": 0.5, "form": "constant", "value": 1.0},
                {"start": 0.5, "end": 1.0, "form": "constant", "value": -2.0}]},
                "f": {"kind": "prototype", "p": 2.0, "q": 0.5, "M": 1.0}}}"#,
        )
        .unwrap();
        let pb = k.problem().unwrap();
        assert_eq!(pb.lambda, 7.0);
        assert_eq!(pb.f.p(), 2.0);
        assert!(serde_json::from_str::<Knobs>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Knobs { tol: Some(0.0), ..Knobs::default() }.validate().is_err());
        assert!(Knobs { s_min: Some(2.0), s_max: Some(1.0), ..Knobs::default() }.validate().is_err());
        assert!(Knobs { scan: Some(0), ..Knobs::default() }.validate().is_err());
        assert!(Knobs::default().validate().is_ok());
    }
}
