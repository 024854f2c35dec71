//! Replays a measured trajectory against the Lyapunov function a
//! certificate vouches for.

use crate::tos::{FixedPoint, IterateTrace};

use super::{CertifyError, Mode, RateCertificate};

/// Relative slack allowed in each Lyapunov decrease, as a fraction of `V₀`.
pub const VIOLATION_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub k: usize,
    /// `V_{k+1}`
    pub next: f64,
    /// `V_k`, or `ρ²V_k` in the linear mode.
    pub allowed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovReport {
    pub mode: Mode,
    /// `V_0, …, V_K`
    pub values: Vec<f64>,
    pub violations: Vec<Violation>,
    /// The quantity the certificate bounds, indexed by `k`: for the
    /// sublinear modes `min_{i<k}` of the squared residual or objective gap
    /// (entry 0 is unused and set to ∞), and `‖z^k − z⋆‖²` for the linear
    /// mode.
    pub measured: Vec<f64>,
    pub bound: Vec<f64>,
}

impl LyapunovReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest `measured / bound` over the indices where the bound applies.
    pub fn worst_bound_ratio(&self) -> f64 {
        let start = if self.mode.is_linear() { 0 } else { 1 };
        self.measured
            .iter()
            .zip(&self.bound)
            .skip(start)
            .map(|(m, b)| {
                if *b > 0.0 {
                    m / b
                } else if *m > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }

    /// `measured ≤ bound·(1 + rel_tol)` wherever the bound applies.
    pub fn bound_holds(&self, rel_tol: f64) -> bool {
        self.worst_bound_ratio() <= 1.0 + rel_tol
    }
}

/// Checks `V_{k+1} ≤ V_k` (sublinear modes) or `V_{k+1} ≤ ρ²V_k` (linear
/// mode) along `trace`, and compares the cumulative rate bound with the
/// measured quantity.
pub fn empirical_lyapunov_check(
    trace: &IterateTrace,
    fixed_point: &FixedPoint,
    cert: &RateCertificate,
) -> Result<LyapunovReport, CertifyError> {
    let zstar = &fixed_point.z;
    if let Some(bad) = trace.records.iter().find(|r| r.z.len() != zstar.len()) {
        return Err(CertifyError::Dimension(format!(
            "trace dimension {} but fixed point dimension {}",
            bad.z.len(),
            zstar.len()
        )));
    }
    if trace.is_empty() {
        return Err(CertifyError::InvalidParameter("empty trace".into()));
    }
    let dist: Vec<f64> = trace
        .records
        .iter()
        .map(|r| (&r.z - zstar).norm_squared())
        .collect();
    let d0 = dist[0];

    // Per-step increments of the sum in V, and the bounded quantity.
    let increments: Vec<f64> = match cert.mode {
        Mode::SublinearResidual => trace
            .records
            .iter()
            .map(|r| r.residual.norm_squared())
            .collect(),
        Mode::SublinearObjective => {
            let fstar = fixed_point.objective.ok_or_else(|| {
                CertifyError::InvalidParameter("objective mode needs the optimal value".into())
            })?;
            trace
                .records
                .iter()
                .map(|r| {
                    r.objective.map(|f| f - fstar).ok_or_else(|| {
                        CertifyError::InvalidParameter(format!(
                            "objective unavailable at k = {}",
                            r.k
                        ))
                    })
                })
                .collect::<Result<_, _>>()?
        }
        Mode::Linear => vec![0.0; trace.len()],
    };

    let (values, measured, bound) = match cert.mode {
        Mode::Linear => {
            let rho2 = cert
                .rho2
                .ok_or_else(|| CertifyError::InvalidParameter("certificate has no rho2".into()))?;
            let bound = (0..dist.len()).map(|k| rho2.powi(k as i32) * d0).collect();
            (dist.clone(), dist.clone(), bound)
        }
        _ => {
            let theta = cert
                .theta
                .ok_or_else(|| CertifyError::InvalidParameter("certificate has no theta".into()))?;
            let mut values = Vec::with_capacity(dist.len());
            let mut measured = Vec::with_capacity(dist.len());
            let mut bound = Vec::with_capacity(dist.len());
            let mut sum = 0.0;
            let mut best = f64::INFINITY;
            for (k, d) in dist.iter().enumerate() {
                values.push(d + theta * sum);
                measured.push(best);
                bound.push(if k == 0 {
                    f64::INFINITY
                } else {
                    d0 / (theta * k as f64)
                });
                sum += increments[k];
                best = best.min(increments[k]);
            }
            (values, measured, bound)
        }
    };

    let factor = cert.rho2.filter(|_| cert.mode.is_linear()).unwrap_or(1.0);
    let slack = VIOLATION_TOL * values[0];
    let violations = values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > factor * w[0] + slack)
        .map(|(k, w)| Violation {
            k,
            next: w[1],
            allowed: factor * w[0],
        })
        .collect();
    Ok(LyapunovReport {
        mode: cert.mode,
        values,
        violations,
        measured,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::symbolic_sublinear;
    use crate::tos::{run, ProxSpec, QuadraticFn, SplitProblem, TosConfig};
    use nalgebra::{DMatrix, DVector};

    fn problem() -> SplitProblem {
        let h = QuadraticFn::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 0.5])),
            DVector::from_column_slice(&[-3.0, 1.0]),
        )
        .unwrap();
        SplitProblem::new(ProxSpec::boxed(1.0), ProxSpec::Zero, h).unwrap()
    }

    #[test]
    fn trace_from_fixed_point_has_zero_lyapunov() {
        let p = problem();
        let cert = symbolic_sublinear(0.5, 1.0).unwrap();
        let cfg = TosConfig::new(cert.alpha, cert.lambda)
            .unwrap()
            .with_max_iter(20)
            .unwrap();
        let zstar = DVector::from_column_slice(&[1.0, -1.0]);
        let fp = FixedPoint {
            z: zstar.clone(),
            x_b: zstar.clone(),
            x_a: zstar.clone(),
            objective: None,
            iterations: 0,
            residual_norm: 0.0,
        };
        // clamp(z − α∇h(z)) = z at (1, −1)
        let t = run(&p, &zstar, &cfg).unwrap();
        let rep = empirical_lyapunov_check(&t, &fp, &cert).unwrap();
        assert!(rep.passed());
        assert!(rep.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = problem();
        let cert = symbolic_sublinear(0.5, 1.0).unwrap();
        let cfg = TosConfig::new(cert.alpha, cert.lambda)
            .unwrap()
            .with_max_iter(2)
            .unwrap();
        let t = run(&p, &DVector::zeros(2), &cfg).unwrap();
        let fp = FixedPoint {
            z: DVector::zeros(3),
            x_b: DVector::zeros(3),
            x_a: DVector::zeros(3),
            objective: None,
            iterations: 0,
            residual_norm: 0.0,
        };
        assert!(matches!(
            empirical_lyapunov_check(&t, &fp, &cert),
            Err(CertifyError::Dimension(_))
        ));
    }
}
