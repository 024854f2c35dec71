//! JSON input documents.
//!
//! Certificate requests:
//!
//! ```json
//! {"mode": "linear", "classes": {"f": {"m": 0, "L": "inf"}, "g": {"m": 1, "L": 10}, "h": {"m": 0, "L": 20}}, "alpha": 0.05}
//! ```
//!
//! `"benchmark": "d"` may replace `classes`; `lambda` is optional and is
//! optimized when absent.
//!
//! Problems for `run`:
//!
//! ```json
//! {"f": {"type": "box", "radius": 1},
//!  "g": {"type": "affine", "c": [[1, 1, 0]], "d": [1]},
//!  "h": {"p": [[2, 0, 0], [0, 1, 0], [0, 0, 1]], "q": [0, -1, 0]},
//!  "z0": [0, 0, 0], "alpha": 0.5, "lambda": 1, "max_iter": 200}
//! ```
//!
//! Function types: `zero`, `box` (`radius`, optional `coords: [start, end)`),
//! `l1` (`weight`), `affine` (`c`, `d`) and `quadratic` (`p`, optional `q`).

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::certify::log_grid;
use crate::certify::{Mode, ProblemClasses};
use crate::tos::{AffineSubspace, ProxSpec, QuadraticFn, SplitProblem};

use super::CliError;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyInput {
    pub mode: Option<Mode>,
    pub classes: Option<ProblemClasses>,
    pub benchmark: Option<String>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub p: Vec<Vec<f64>>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Zero,
    Box {
        radius: f64,
        #[serde(default)]
        coords: Option<[usize; 2]>,
    },
    L1 {
        weight: f64,
    },
    Affine {
        c: Vec<Vec<f64>>,
        d: Vec<f64>,
    },
    Quadratic {
        p: Vec<Vec<f64>>,
        #[serde(default)]
        q: Option<Vec<f64>>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInput {
    pub f: FunctionSpec,
    pub g: FunctionSpec,
    pub h: QuadraticSpec,
    #[serde(default)]
    pub z0: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub residual_tol: Option<f64>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(CliError::malformed(format!(
            "{what}: rows have different lengths"
        )));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn quadratic(p: &[Vec<f64>], q: Option<&Vec<f64>>, what: &str) -> Result<QuadraticFn, CliError> {
    let p = matrix(p, what)?;
    let q = match q {
        Some(q) => DVector::from_column_slice(q),
        None => DVector::zeros(p.nrows()),
    };
    Ok(QuadraticFn::new(p, q)?)
}

impl FunctionSpec {
    pub fn build(&self, what: &str) -> Result<ProxSpec, CliError> {
        Ok(match self {
            FunctionSpec::Zero => ProxSpec::Zero,
            FunctionSpec::Box {
                radius,
                coords: None,
            } => ProxSpec::boxed(*radius),
            FunctionSpec::Box {
                radius,
                coords: Some([a, b]),
            } => ProxSpec::boxed_on(*radius, *a..*b),
            FunctionSpec::L1 { weight } => ProxSpec::L1 { weight: *weight },
            FunctionSpec::Affine { c, d } => ProxSpec::Affine(AffineSubspace::from_constraints(
                matrix(c, what)?,
                DVector::from_column_slice(d),
            )?),
            FunctionSpec::Quadratic { p, q } => {
                ProxSpec::Quadratic(quadratic(p, q.as_ref(), what)?)
            }
        })
    }
}

impl ProblemInput {
    pub fn build(&self) -> Result<SplitProblem, CliError> {
        let h = quadratic(&self.h.p, self.h.q.as_ref(), "h")?;
        Ok(SplitProblem::new(
            self.f.build("f")?,
            self.g.build("g")?,
            h,
        )?)
    }
}

/// `start:stop:points[:log|:lin]`, log spacing by default.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if !(3..=4).contains(&parts.len()) {
        return Err(format!("grid {spec:?} is not start:stop:points[:log|:lin]"));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| format!("grid {spec:?}: {s:?}: {e}"))
    };
    let (start, stop) = (num(parts[0])?, num(parts[1])?);
    let points: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| format!("grid {spec:?}: {e}"))?;
    if points == 0 {
        return Err(format!("grid {spec:?} has no points"));
    }
    if !(start.is_finite() && stop.is_finite() && start > 0.0 && stop >= start) {
        return Err(format!("grid {spec:?} needs 0 < start <= stop"));
    }
    match parts.get(3).map(|s| s.trim()) {
        None | Some("log") => Ok(log_grid(start, stop, points)),
        Some("lin") => Ok(if points == 1 {
            vec![start]
        } else {
            (0..points)
                .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
                .collect()
        }),
        Some(other) => Err(format!("grid spacing {other:?} is not log or lin")),
    }
}
