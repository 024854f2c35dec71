use rayon::prelude::*;
use serde::Serialize;

use crate::sdpcore::SdpSettings;

use super::{
    certify_objective_rate, certify_residual_rate, linear_rate_sdp, CertifyError, Mode,
    ProblemClasses, RateCertificate,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum PointStatus {
    /// A certificate with a usable rate (θ > 0, or ρ² < 1).
    Certified,
    /// The SDP was solved but ρ² >= 1, so no contraction is certified.
    NoContraction,
    /// No certificate; the rate carries the sentinel value.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub rate: f64,
    pub status: PointStatus,
    #[serde(skip)]
    pub certificate: Option<RateCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub mode: Mode,
    pub curve: Vec<SweepPoint>,
    pub best: SweepPoint,
}

fn sentinel(mode: Mode) -> f64 {
    if mode.is_linear() {
        1.0
    } else {
        0.0
    }
}

fn evaluate(
    alpha: f64,
    classes: &ProblemClasses,
    mode: Mode,
    lambda: Option<f64>,
    settings: &SdpSettings,
) -> SweepPoint {
    let result = match mode {
        Mode::SublinearResidual => certify_residual_rate(alpha, lambda, classes, settings),
        Mode::SublinearObjective => match (
            classes.f.lipschitz().finite(),
            classes.h.lipschitz().finite(),
        ) {
            (Some(lf), Some(lh)) => certify_objective_rate(alpha, lambda, lf, lh, settings),
            _ => Err(CertifyError::ClassPattern(
                "objective rate needs finite L_f and L_h".into(),
            )),
        },
        Mode::Linear => linear_rate_sdp(alpha, lambda, classes, settings),
    };
    match result {
        Ok(cert) => {
            let rate = cert.rate();
            let status = if mode.is_linear() && rate >= 1.0 {
                PointStatus::NoContraction
            } else {
                PointStatus::Certified
            };
            SweepPoint {
                alpha,
                rate,
                status,
                certificate: Some(cert),
            }
        }
        Err(_) => SweepPoint {
            alpha,
            rate: sentinel(mode),
            status: PointStatus::Infeasible,
            certificate: None,
        },
    }
}

/// Evaluates the rate certificate at every grid point (in parallel,
/// results kept in grid order) and picks the best point: smallest ρ² in
/// linear mode, largest θ otherwise, ties going to the smaller α.
pub fn sweep_alpha(
    grid: &[f64],
    classes: &ProblemClasses,
    mode: Mode,
    lambda: Option<f64>,
    settings: &SdpSettings,
) -> Result<Sweep, CertifyError> {
    if grid.is_empty() {
        return Err(CertifyError::InvalidParameter("alpha grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(CertifyError::InvalidParameter(format!(
            "alpha must be finite and > 0, got {bad}"
        )));
    }
    let curve: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&a| evaluate(a, classes, mode, lambda, settings))
        .collect();

    let better = |a: &SweepPoint, b: &SweepPoint| {
        if a.rate == b.rate {
            a.alpha < b.alpha
        } else if mode.is_linear() {
            a.rate < b.rate
        } else {
            a.rate > b.rate
        }
    };
    let best = curve
        .iter()
        .filter(|p| p.status != PointStatus::Infeasible)
        .fold(None::<&SweepPoint>, |acc, p| match acc {
            Some(b) if !better(p, b) => Some(b),
            _ => Some(p),
        })
        .ok_or(CertifyError::AllInfeasible)?
        .clone();
    Ok(Sweep { mode, curve, best })
}
