//! Three-operator splitting with full iterate tracing.
//!
//! One step from `z`:
//!
//! ```text
//! x_B = prox_{αg}(z)
//! y   = 2x_B − z − α∇h(x_B)
//! x_A = prox_{αf}(y)
//! z⁺  = z + λ(x_A − x_B)
//! ```

mod oracle;
mod prox;
pub mod synthetic;

pub use oracle::{OperatorOracle, SplitProblem};
pub use prox::{grad_eval, prox_eval, AffineSubspace, ProxSpec, QuadraticFn, MEMBERSHIP_TOL};

use std::io::Write;

use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TosError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid function specification: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("affine constraints are inconsistent (residual {0:e})")]
    InconsistentAffine(f64),
    #[error("{0} returned a non-finite value")]
    NonFinite(&'static str),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TosConfig {
    pub alpha: f64,
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once `‖x_B − x_A‖/α` falls to this value.
    pub residual_tol: f64,
}

impl TosConfig {
    /// 1000 iterations and no residual stopping.
    pub fn new(alpha: f64, lambda: f64) -> Result<Self, TosError> {
        let c = Self {
            alpha,
            lambda,
            max_iter: 1000,
            residual_tol: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Result<Self, TosError> {
        self.max_iter = max_iter;
        self.validate()?;
        Ok(self)
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Result<Self, TosError> {
        self.residual_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), TosError> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(TosError::InvalidConfig(format!(
                "alpha must be finite and > 0, got {}",
                self.alpha
            )));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(TosError::InvalidConfig(format!(
                "lambda must be finite and > 0, got {}",
                self.lambda
            )));
        }
        if self.max_iter == 0 {
            return Err(TosError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(TosError::InvalidConfig(format!(
                "residual_tol must be >= 0, got {}",
                self.residual_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub z: DVector<f64>,
    pub x_b: DVector<f64>,
    pub y: DVector<f64>,
    pub x_a: DVector<f64>,
    /// `x_A − x_B`
    pub u: DVector<f64>,
    /// `(x_B − x_A)/α`
    pub residual: DVector<f64>,
    /// `F(x_B)` when available.
    pub objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateTrace {
    pub alpha: f64,
    pub lambda: f64,
    pub records: Vec<IterateRecord>,
    /// Whether the residual tolerance stopped the run.
    pub converged: bool,
}

impl IterateTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    pub fn residual_norm2(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.residual.norm_squared())
            .collect()
    }

    /// Entry `k` is `min_{i ≤ k} ‖r^i‖²`.
    pub fn min_residual_norm2(&self) -> Vec<f64> {
        running_min(&self.residual_norm2())
    }

    pub fn dist_to(&self, zstar: &DVector<f64>) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| (&r.z - zstar).norm_squared())
            .collect()
    }

    /// Scalar summaries of the trace, with distances to `zstar` if given.
    pub fn metrics(&self, zstar: Option<&DVector<f64>>) -> TraceMetrics {
        TraceMetrics {
            alpha: self.alpha,
            lambda: self.lambda,
            residual_norm2: self.residual_norm2(),
            dist_to_zstar2: zstar.map(|z| self.dist_to(z)),
            objective: self.records.iter().map(|r| r.objective).collect(),
            converged: self.converged,
        }
    }

    /// See [`TraceMetrics::write_csv`].
    pub fn write_csv<W: Write>(
        &self,
        zstar: Option<&DVector<f64>>,
        out: W,
    ) -> Result<(), TosError> {
        self.metrics(zstar).write_csv(out)
    }
}

/// Per-iteration scalars of a run, without the iterates themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceMetrics {
    pub alpha: f64,
    pub lambda: f64,
    pub residual_norm2: Vec<f64>,
    pub dist_to_zstar2: Option<Vec<f64>>,
    pub objective: Vec<Option<f64>>,
    pub converged: bool,
}

impl TraceMetrics {
    pub fn len(&self) -> usize {
        self.residual_norm2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual_norm2.is_empty()
    }

    /// Entry `k` is `min_{i ≤ k} ‖r^i‖²`.
    pub fn min_residual_norm2(&self) -> Vec<f64> {
        running_min(&self.residual_norm2)
    }

    /// Columns `k, residual_norm2, min_residual_norm2_so_far,
    /// dist_to_zstar2, objective`; unavailable values are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TosError> {
        let io = |e: csv::Error| TosError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k",
            "residual_norm2",
            "min_residual_norm2_so_far",
            "dist_to_zstar2",
            "objective",
        ])
        .map_err(io)?;
        let mins = self.min_residual_norm2();
        for (k, res) in self.residual_norm2.iter().enumerate() {
            let dist = self
                .dist_to_zstar2
                .as_ref()
                .map(|d| d[k].to_string())
                .unwrap_or_default();
            let obj = self.objective[k].map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                k.to_string(),
                res.to_string(),
                mins[k].to_string(),
                dist,
                obj,
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TosError::Io(e.to_string()))
    }
}

fn running_min(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect()
}

/// `(x_B − x_A)/α`
pub fn residual(
    x_b: &DVector<f64>,
    x_a: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>, TosError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(TosError::InvalidConfig(format!(
            "alpha must be finite and > 0, got {alpha}"
        )));
    }
    if x_b.len() != x_a.len() {
        return Err(TosError::Dimension {
            expected: x_b.len(),
            got: x_a.len(),
        });
    }
    Ok((x_b - x_a) / alpha)
}

fn finite(v: DVector<f64>, who: &'static str) -> Result<DVector<f64>, TosError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(TosError::NonFinite(who))
    }
}

/// One iteration from `z`. The record is tagged `k = 0`.
pub fn tos_step<O: OperatorOracle + ?Sized>(
    z: &DVector<f64>,
    oracle: &O,
    config: &TosConfig,
) -> Result<(DVector<f64>, IterateRecord), TosError> {
    config.validate()?;
    if z.len() != oracle.dim() {
        return Err(TosError::Dimension {
            expected: oracle.dim(),
            got: z.len(),
        });
    }
    step(z, oracle, config, true)
}

fn step<O: OperatorOracle + ?Sized>(
    z: &DVector<f64>,
    oracle: &O,
    config: &TosConfig,
    with_objective: bool,
) -> Result<(DVector<f64>, IterateRecord), TosError> {
    let alpha = config.alpha;
    let x_b = finite(oracle.prox_g(alpha, z), "prox_g")?;
    let grad = finite(oracle.grad_h(&x_b), "grad_h")?;
    let y = &x_b * 2.0 - z - grad * alpha;
    let x_a = finite(oracle.prox_f(alpha, &y), "prox_f")?;
    let u = &x_a - &x_b;
    let z_next = z + &u * config.lambda;
    let residual = &u / -alpha;
    let objective = if with_objective {
        oracle.objective(&x_b)
    } else {
        None
    };
    let rec = IterateRecord {
        k: 0,
        z: z.clone(),
        x_b,
        y,
        x_a,
        u,
        residual,
        objective,
    };
    Ok((z_next, rec))
}

fn drive<O: OperatorOracle + ?Sized>(
    oracle: &O,
    z0: &DVector<f64>,
    config: &TosConfig,
    mut visit: impl FnMut(IterateRecord),
) -> Result<bool, TosError> {
    config.validate()?;
    if z0.len() != oracle.dim() {
        return Err(TosError::Dimension {
            expected: oracle.dim(),
            got: z0.len(),
        });
    }
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(TosError::NonFinite("initial point"));
    }
    let mut z = z0.clone();
    for k in 0..=config.max_iter {
        let (next, mut rec) = step(&z, oracle, config, true)?;
        rec.k = k;
        let stop = rec.residual.norm() <= config.residual_tol;
        visit(rec);
        if stop {
            return Ok(true);
        }
        z = next;
    }
    Ok(false)
}

/// Runs until the residual tolerance is met or `max_iter` steps have been
/// taken. The trace holds `z⁰, …, z^K` together with the intermediates
/// computed at each of them.
pub fn run<O: OperatorOracle + ?Sized>(
    oracle: &O,
    z0: &DVector<f64>,
    config: &TosConfig,
) -> Result<IterateTrace, TosError> {
    let mut records = Vec::with_capacity(config.max_iter.saturating_add(1).min(1 << 16));
    let converged = drive(oracle, z0, config, |r| records.push(r))?;
    Ok(IterateTrace {
        alpha: config.alpha,
        lambda: config.lambda,
        records,
        converged,
    })
}

/// Same iteration as [`run`], keeping only the per-step scalars. The
/// final state is returned alongside.
pub fn run_metrics<O: OperatorOracle + ?Sized>(
    oracle: &O,
    z0: &DVector<f64>,
    config: &TosConfig,
    zstar: Option<&DVector<f64>>,
) -> Result<(TraceMetrics, IterateRecord), TosError> {
    if let Some(zs) = zstar {
        if zs.len() != z0.len() {
            return Err(TosError::Dimension {
                expected: z0.len(),
                got: zs.len(),
            });
        }
    }
    let mut residual_norm2 = Vec::new();
    let mut dist = Vec::new();
    let mut objective = Vec::new();
    let mut last = None;
    let converged = drive(oracle, z0, config, |r| {
        residual_norm2.push(r.residual.norm_squared());
        if let Some(zs) = zstar {
            dist.push((&r.z - zs).norm_squared());
        }
        objective.push(r.objective);
        last = Some(r);
    })?;
    let metrics = TraceMetrics {
        alpha: config.alpha,
        lambda: config.lambda,
        residual_norm2,
        dist_to_zstar2: zstar.map(|_| dist),
        objective,
        converged,
    };
    Ok((metrics, last.expect("at least one step")))
}

/// Limit of a long run, used as the reference `z⋆`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub z: DVector<f64>,
    pub x_b: DVector<f64>,
    pub x_a: DVector<f64>,
    /// `F(x_B)` at the final iterate, when available.
    pub objective: Option<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Iterates without recording until the residual tolerance or `max_iter`,
/// or until `z` stops changing.
pub fn reference_fixed_point<O: OperatorOracle + ?Sized>(
    oracle: &O,
    z0: &DVector<f64>,
    config: &TosConfig,
) -> Result<FixedPoint, TosError> {
    config.validate()?;
    if z0.len() != oracle.dim() {
        return Err(TosError::Dimension {
            expected: oracle.dim(),
            got: z0.len(),
        });
    }
    let mut z = z0.clone();
    let mut k = 0;
    loop {
        let (next, rec) = step(&z, oracle, config, false)?;
        let rn = rec.residual.norm();
        if rn <= config.residual_tol || k == config.max_iter || next == z {
            return Ok(FixedPoint {
                objective: oracle.objective(&rec.x_b),
                z,
                x_b: rec.x_b,
                x_a: rec.x_a,
                iterations: k,
                residual_norm: rn,
            });
        }
        z = next;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn scalar(f: ProxSpec, g: ProxSpec, h: f64) -> SplitProblem {
        SplitProblem::new(
            f,
            g,
            QuadraticFn::homogeneous(DMatrix::from_element(1, 1, h)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identity_proxes_contract_by_one_minus_lambda_alpha() {
        let p = scalar(ProxSpec::Zero, ProxSpec::Zero, 1.0);
        let cfg = TosConfig::new(1.0, 0.5).unwrap();
        let (z, _) = tos_step(&v(&[1.0]), &p, &cfg).unwrap();
        assert_eq!(z, v(&[0.5]));
    }

    #[test]
    fn box_step_by_hand() {
        let p = scalar(ProxSpec::boxed(1.0), ProxSpec::Zero, 0.0);
        let cfg = TosConfig::new(1.0, 1.0).unwrap();
        let (z, rec) = tos_step(&v(&[3.0]), &p, &cfg).unwrap();
        assert_eq!(
            (rec.x_b[0], rec.y[0], rec.x_a[0], z[0]),
            (3.0, 3.0, 1.0, 1.0)
        );
        assert_eq!(rec.residual, v(&[2.0]));
    }

    #[test]
    fn fixed_point_is_stationary() {
        let p = scalar(ProxSpec::boxed(1.0), ProxSpec::Zero, 0.0);
        let cfg = TosConfig::new(1.0, 1.0).unwrap();
        let (z, _) = tos_step(&v(&[0.5]), &p, &cfg).unwrap();
        assert_eq!(z, v(&[0.5]));
    }

    #[test]
    fn max_iter_one_gives_two_states() {
        let p = scalar(ProxSpec::Zero, ProxSpec::Zero, 1.0);
        let cfg = TosConfig::new(0.5, 1.0).unwrap().with_max_iter(1).unwrap();
        let t = run(&p, &v(&[1.0]), &cfg).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.records[1].z, &t.records[0].z + &t.records[0].u * 1.0);
    }

    #[test]
    fn residual_examples() {
        assert_eq!(
            residual(&v(&[2.0, 0.0]), &v(&[1.0, 1.0]), 0.5).unwrap(),
            v(&[2.0, -2.0])
        );
        assert_eq!(residual(&v(&[1.0]), &v(&[1.0]), 3.0).unwrap(), v(&[0.0]));
        assert!(residual(&v(&[1.0]), &v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TosConfig::new(0.0, 1.0).is_err());
        assert!(TosConfig::new(1.0, -1.0).is_err());
        assert!(TosConfig::new(1.0, 1.0).unwrap().with_max_iter(0).is_err());
        assert!(TosConfig::new(1.0, 1.0)
            .unwrap()
            .with_residual_tol(f64::NAN)
            .is_err());
    }

    #[test]
    fn tolerance_stops_early() {
        let p = scalar(ProxSpec::Zero, ProxSpec::Zero, 1.0);
        let cfg = TosConfig::new(1.0, 1.0)
            .unwrap()
            .with_residual_tol(1e-12)
            .unwrap();
        let t = run(&p, &v(&[1.0]), &cfg).unwrap();
        assert!(t.converged);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn csv_columns_and_empty_fields() {
        let p = scalar(ProxSpec::boxed(1.0), ProxSpec::Zero, 0.0);
        let cfg = TosConfig::new(1.0, 1.0).unwrap().with_max_iter(2).unwrap();
        let t = run(&p, &v(&[3.0]), &cfg).unwrap();
        let mut buf = Vec::new();
        t.write_csv(None, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(
            lines[0],
            "k,residual_norm2,min_residual_norm2_so_far,dist_to_zstar2,objective"
        );
        assert_eq!(lines[1], "0,4,4,,");
        assert_eq!(lines[2], "1,0,0,,0");
    }

    #[test]
    fn metrics_match_full_trace() {
        let p = scalar(ProxSpec::boxed(1.0), ProxSpec::L1 { weight: 0.1 }, 2.0);
        let cfg = TosConfig::new(0.3, 1.2).unwrap().with_max_iter(50).unwrap();
        let z0 = v(&[4.0]);
        let zs = v(&[0.1]);
        let t = run(&p, &z0, &cfg).unwrap();
        let (m, last) = run_metrics(&p, &z0, &cfg, Some(&zs)).unwrap();
        assert_eq!(m, t.metrics(Some(&zs)));
        assert_eq!(&last, t.last().unwrap());
    }

    #[test]
    fn reference_run_reaches_fixed_point() {
        let p = scalar(ProxSpec::Zero, ProxSpec::Zero, 2.0);
        let cfg = TosConfig::new(0.25, 1.0)
            .unwrap()
            .with_max_iter(10_000)
            .unwrap()
            .with_residual_tol(1e-14)
            .unwrap();
        let fp = reference_fixed_point(&p, &v(&[4.0]), &cfg).unwrap();
        assert!(fp.z[0].abs() < 1e-13);
        assert_eq!(fp.objective, Some(0.5 * 2.0 * fp.x_b[0] * fp.x_b[0]));
    }
}
