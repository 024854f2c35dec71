//! Convergence-rate certificates for three-operator splitting.
//!
//! Each producer returns a [`RateCertificate`] whose matrix inequality can
//! be re-checked independently with [`audit`].

mod benchmarks;
mod dual;
mod empirical;
mod exact;
mod sdp;
mod sweep;

pub use benchmarks::{benchmark, benchmark_sets, log_grid};
pub use dual::{dual_linear_rate, DualRate};
pub use empirical::{empirical_lyapunov_check, LyapunovReport, Violation, VIOLATION_TOL};
pub use sdp::{
    certify_linear_rate, certify_objective_rate, certify_residual_rate, linear_rate_sdp,
};
pub use sweep::{sweep_alpha, PointStatus, Sweep, SweepPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lmikit::{
    build_qc_triplet, build_w0, build_w1, build_w2, eta, schur_extend, LmiError, RegularityClass,
    SymMatrix,
};
use crate::sdpcore::{SdpError, SdpStatus};

/// Tolerance used when auditing closed-form certificates.
pub const AUDIT_TOL: f64 = 1e-8;

/// Range searched for the relaxation parameter when it is optimized.
pub const LAMBDA_RANGE: (f64, f64) = (1e-6, 4.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assumption1 violated: {0}")]
    AssumptionViolated(String),
    #[error("class pattern not supported by this mode: {0}")]
    ClassPattern(String),
    #[error("no certificate exists at alpha = {alpha}")]
    Infeasible { alpha: f64 },
    #[error("no linear certificate at this alpha (rho2 = {rho2})")]
    NoLinearCertificate { rho2: f64 },
    #[error("SDP solver stopped with status {0:?}")]
    Solver(SdpStatus),
    #[error("certificate fails its own audit (max eigenvalue {0:e})")]
    AuditFailed(f64),
    #[error("every grid point is infeasible")]
    AllInfeasible,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Lmi(#[from] LmiError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemClasses {
    pub f: RegularityClass,
    pub g: RegularityClass,
    pub h: RegularityClass,
}

impl ProblemClasses {
    pub fn new(f: RegularityClass, g: RegularityClass, h: RegularityClass) -> Self {
        Self { f, g, h }
    }

    pub fn all_weakly_convex(&self) -> bool {
        self.f.m() == 0.0 && self.g.m() == 0.0 && self.h.m() == 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Mode {
    SublinearResidual,
    SublinearObjective,
    Linear,
}

impl Mode {
    pub fn is_linear(self) -> bool {
        self == Mode::Linear
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Provenance {
    Symbolic,
    Sdp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub mode: Mode,
    pub alpha: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho2: Option<f64>,
    pub sigma: [f64; 3],
    pub margin: f64,
    pub provenance: Provenance,
    pub classes: ProblemClasses,
}

impl RateCertificate {
    /// θ for sublinear modes, ρ² for the linear mode.
    pub fn rate(&self) -> f64 {
        match self.mode {
            Mode::Linear => self.rho2.unwrap_or(f64::NAN),
            _ => self.theta.unwrap_or(f64::NAN),
        }
    }
}

/// `(m_f + m_g + m_h) · (1/L_f + 1/L_g) · (1/L_h) > 0`, read as a product
/// of three factors with `1/∞ = 0`.
pub fn check_assumption1(classes: &ProblemClasses) -> bool {
    let m = classes.f.m() + classes.g.m() + classes.h.m();
    let smooth_fg = classes.f.inv_l() + classes.g.inv_l();
    m > 0.0 && smooth_fg > 0.0 && classes.h.inv_l() > 0.0
}

/// Closed-form residual certificate for `f, g ∈ F(0, ∞)`, `h ∈ F(0, L_h)`.
pub fn symbolic_sublinear(lambda: f64, lh: f64) -> Result<RateCertificate, CertifyError> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(CertifyError::InvalidParameter(format!(
            "lambda must lie in (0, 2), got {lambda}"
        )));
    }
    if !(lh.is_finite() && lh > 0.0) {
        return Err(CertifyError::InvalidParameter(format!(
            "L_h must be finite and > 0, got {lh}"
        )));
    }
    let alpha = (2.0 - lambda) / lh;
    let theta = (2.0 - lambda).powi(3) * lambda / (2.0 * lh * lh);
    let s = 2.0 * lambda / alpha;
    let classes = ProblemClasses::new(
        RegularityClass::convex(),
        RegularityClass::convex(),
        RegularityClass::smooth(0.0, lh)?,
    );
    let mut cert = RateCertificate {
        mode: Mode::SublinearResidual,
        alpha,
        lambda,
        theta: Some(theta),
        rho2: None,
        sigma: [s, s, s],
        margin: 0.0,
        provenance: Provenance::Symbolic,
        classes,
    };
    cert.margin = audit(&cert)?;
    Ok(cert)
}

/// The matrix whose negative semidefiniteness the certificate asserts:
/// `W₀ + ΣσᵢQᵢ` in residual mode and the Schur-extended `W̃₁`, `W̃₂`
/// otherwise.
pub fn certificate_matrix(cert: &RateCertificate) -> Result<SymMatrix, CertifyError> {
    let c = &cert.classes;
    let qc = build_qc_triplet(cert.alpha, &c.f, &c.g, &c.h)?;
    let combined = qc.combine(cert.sigma);
    let missing = |what: &str| CertifyError::InvalidParameter(format!("certificate has no {what}"));
    let w = match cert.mode {
        Mode::SublinearResidual => {
            let theta = cert.theta.ok_or_else(|| missing("theta"))?;
            return Ok(&build_w0(cert.lambda, theta, cert.alpha)?.into_base() + &combined);
        }
        Mode::SublinearObjective => {
            let theta = cert.theta.ok_or_else(|| missing("theta"))?;
            let lf =
                c.f.lipschitz()
                    .finite()
                    .ok_or_else(|| missing("finite L_f"))?;
            let lh =
                c.h.lipschitz()
                    .finite()
                    .ok_or_else(|| missing("finite L_h"))?;
            build_w1(cert.lambda, theta, cert.alpha, lf, lh)?.into_base()
        }
        Mode::Linear => {
            let rho2 = cert.rho2.ok_or_else(|| missing("rho2"))?;
            build_w2(cert.lambda, rho2)?.into_base()
        }
    };
    let e = eta(cert.lambda);
    let eet = SymMatrix::outer(&e)?;
    let m = &(&w - &eet) + &combined;
    Ok(schur_extend(&m, cert.lambda)?)
}

/// Largest eigenvalue of [`certificate_matrix`]; a valid certificate has
/// this at most the solver's feasibility tolerance.
pub fn audit(cert: &RateCertificate) -> Result<f64, CertifyError> {
    if cert.sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(CertifyError::InvalidParameter(
            "sigma must be finite and >= 0".into(),
        ));
    }
    Ok(certificate_matrix(cert)?.max_eig())
}
