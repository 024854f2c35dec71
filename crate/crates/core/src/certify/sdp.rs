use nalgebra::DVector;

use crate::lmikit::{
    build_qc_triplet, build_w0, build_w1, build_w2, eta, schur_extend, QcTriplet, RegularityClass,
    SymMatrix,
};
use crate::sdpcore::{solve_sdp, LinearSdp, SdpError, SdpSettings, SdpStatus};

use super::exact::{complement_basis, exact_directions, padded, saturate_sigma};
use super::{
    audit, check_assumption1, CertifyError, Mode, ProblemClasses, Provenance, RateCertificate,
    LAMBDA_RANGE,
};

/// The Lyapunov difference matrix of one mode with `η ηᵀ` removed. What
/// remains is affine in `(λ, rate)`: the `λ` part is the same for every
/// mode and the rate part comes from the builders at `λ = 0`.
struct Family {
    mode: Mode,
    alpha: f64,
    lf: f64,
    lh: f64,
}

impl Family {
    fn at_zero_lambda(&self, rate: f64) -> Result<SymMatrix, CertifyError> {
        let m = match self.mode {
            Mode::SublinearResidual => build_w0(0.0, rate, self.alpha)?,
            Mode::SublinearObjective => build_w1(0.0, rate, self.alpha, self.lf, self.lh)?,
            Mode::Linear => build_w2(0.0, rate)?,
        };
        Ok(m.into_base())
    }

    /// Returns `(constant, rate coefficient, λ coefficient)`.
    fn pieces(&self) -> Result<[SymMatrix; 3], CertifyError> {
        let c = self.at_zero_lambda(0.0)?;
        let r = &self.at_zero_lambda(1.0)? - &c;
        let j = SymMatrix::from_rows(&[
            &[0.0, 0.0, 0.0, -1.0],
            &[0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[-1.0, 0.0, 1.0, 0.0],
        ])?;
        Ok([c, r, j])
    }
}

fn validate_alpha(alpha: f64) -> Result<(), CertifyError> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(CertifyError::InvalidParameter(format!(
            "alpha must be finite and > 0, got {alpha}"
        )))
    }
}

fn validate_lambda(lambda: Option<f64>) -> Result<(), CertifyError> {
    match lambda {
        Some(l) if !(l.is_finite() && l > 0.0) => Err(CertifyError::InvalidParameter(format!(
            "lambda must be finite and > 0, got {l}"
        ))),
        _ => Ok(()),
    }
}

/// Solves the rate SDP of `family` at fixed or free `λ` and packages the
/// optimum as an audited certificate.
fn solve_rate(
    family: Family,
    classes: ProblemClasses,
    lambda: Option<f64>,
    settings: &SdpSettings,
) -> Result<RateCertificate, CertifyError> {
    validate_alpha(family.alpha)?;
    validate_lambda(lambda)?;
    let qc = build_qc_triplet(family.alpha, &classes.f, &classes.g, &classes.h)?;
    let [c, r, j] = family.pieces()?;
    let exact = exact_directions(family.alpha, &classes);
    let sign = if family.mode.is_linear() { 1.0 } else { -1.0 };

    let (y, lam) = match lambda {
        Some(lam) => {
            let shift = c.add_scaled(lam, &j);
            let eet = SymMatrix::outer(&eta(lam))?;
            let fixed = &shift + &eet;
            let map = |v: &[f64]| {
                fixed
                    .add_scaled(v[0], &r)
                    .add_scaled(1.0, &combine(&qc, &v[1..4]))
            };
            let sdp = LinearSdp::from_affine_map(vec![sign, 0.0, 0.0, 0.0], vec![true; 4], map)?;
            (solve_reduced(&sdp, family.alpha, &exact, 1, settings)?, lam)
        }
        None => {
            let map = |v: &[f64]| {
                let m = c
                    .add_scaled(v[0], &r)
                    .add_scaled(v[1], &j)
                    .add_scaled(1.0, &combine(&qc, &v[2..5]));
                schur_extend(&m, v[1]).expect("4x4 by construction")
            };
            let sdp =
                LinearSdp::from_affine_map(vec![sign, 0.0, 0.0, 0.0, 0.0], vec![true; 5], map)?
                    .with_bounds(1, LAMBDA_RANGE.0, LAMBDA_RANGE.1)?;
            let y = solve_reduced(&sdp, family.alpha, &exact, 2, settings)?;
            let lam = y[1];
            (vec![y[0], y[2], y[3], y[4]], lam)
        }
    };

    let rate = y[0].max(0.0);
    if !family.mode.is_linear() && rate <= 0.0 {
        return Err(CertifyError::Infeasible {
            alpha: family.alpha,
        });
    }
    let sigma = [y[1].max(0.0), y[2].max(0.0), y[3].max(0.0)];
    let (theta, rho2) = if family.mode.is_linear() {
        (None, Some(rate))
    } else {
        (Some(rate), None)
    };
    let mut cert = RateCertificate {
        mode: family.mode,
        alpha: family.alpha,
        lambda: lam.clamp(LAMBDA_RANGE.0, f64::INFINITY),
        theta,
        rho2,
        sigma,
        margin: 0.0,
        provenance: Provenance::Sdp,
        classes,
    };
    let pinned: Vec<usize> = exact.iter().map(|(k, _)| *k).collect();
    saturate_sigma(&mut cert, &pinned, settings.feas_tol)?;
    cert.margin = audit(&cert)?;
    if cert.margin > settings.feas_tol {
        return Err(CertifyError::AuditFailed(cert.margin));
    }
    Ok(cert)
}

fn combine(qc: &QcTriplet, s: &[f64]) -> SymMatrix {
    qc.combine([s[0], s[1], s[2]])
}

/// Solves `sdp` after removing the directions along which it cannot be
/// strictly feasible. With classes having `m = L` the inequality is
/// restricted to the complement of their constraint directions and their
/// multipliers (at `sigma_at + k`) are dropped. Otherwise the direction
/// `(1, 1, 1, 1, 0, …)` is factored out when every constraint matrix is
/// isotropic along it: without strong convexity anywhere it is shared by
/// all quadratic constraints and the Lyapunov term.
fn solve_reduced(
    sdp: &LinearSdp,
    alpha: f64,
    exact: &[(usize, DVector<f64>)],
    sigma_at: usize,
    settings: &SdpSettings,
) -> Result<Vec<f64>, CertifyError> {
    if !exact.is_empty() {
        let rows: Vec<Vec<f64>> = exact
            .iter()
            .map(|(k, _)| {
                (0..sdp.nvars())
                    .map(|i| if i == sigma_at + k { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let (fixed, map) = sdp.with_equalities(&rows, &vec![0.0; rows.len()])?;
        let dirs: Vec<DVector<f64>> = exact.iter().map(|(_, a)| a.clone()).collect();
        let restricted = fixed.congruence(&padded(&complement_basis(&dirs, 4), sdp.dim()))?;
        let sol = solve_sdp(&restricted, settings)?;
        check_status(sol.status, alpha)?;
        return Ok(map.lift(&sol.y));
    }
    let mut v = vec![0.0; sdp.dim()];
    v[..4].fill(1.0);
    match sdp.restrict_null_direction(&v) {
        Ok((reduced, map)) => {
            let sol = solve_sdp(&reduced, settings)?;
            check_status(sol.status, alpha)?;
            Ok(map.lift(&sol.y))
        }
        Err(SdpError::NotIsotropic { .. }) => {
            let sol = solve_sdp(sdp, settings)?;
            check_status(sol.status, alpha)?;
            Ok(sol.y)
        }
        Err(SdpError::InconsistentEqualities(_)) => Err(CertifyError::Infeasible { alpha }),
        Err(e) => Err(e.into()),
    }
}

fn check_status(status: SdpStatus, alpha: f64) -> Result<(), CertifyError> {
    match status {
        SdpStatus::Optimal => Ok(()),
        SdpStatus::Infeasible => Err(CertifyError::Infeasible { alpha }),
        other => Err(CertifyError::Solver(other)),
    }
}

/// Largest θ with `W₀ + ΣσᵢQᵢ ⪯ 0`, which bounds the smallest squared
/// fixed-point residual by `‖z⁰ − z⋆‖²/(θk)`. `lambda = None` optimizes λ
/// jointly through the Schur-extended inequality.
pub fn certify_residual_rate(
    alpha: f64,
    lambda: Option<f64>,
    classes: &ProblemClasses,
    settings: &SdpSettings,
) -> Result<RateCertificate, CertifyError> {
    if !classes.all_weakly_convex()
        || classes.f.is_smooth()
        || classes.g.is_smooth()
        || !classes.h.is_smooth()
    {
        return Err(CertifyError::ClassPattern(
            "residual rate needs m = 0 everywhere, nonsmooth f and g, and smooth h".into(),
        ));
    }
    let family = Family {
        mode: Mode::SublinearResidual,
        alpha,
        lf: f64::INFINITY,
        lh: f64::INFINITY,
    };
    solve_rate(family, *classes, lambda, settings)
}

/// Largest θ with `W̃₁ ⪯ 0` for `f ∈ F(0, L_f)`, `g ∈ F(0, ∞)`,
/// `h ∈ F(0, L_h)`; bounds the best objective gap by `‖z⁰ − z⋆‖²/(θk)`.
pub fn certify_objective_rate(
    alpha: f64,
    lambda: Option<f64>,
    lf: f64,
    lh: f64,
    settings: &SdpSettings,
) -> Result<RateCertificate, CertifyError> {
    for (name, l) in [("L_f", lf), ("L_h", lh)] {
        if !(l.is_finite() && l > 0.0) {
            return Err(CertifyError::ClassPattern(format!(
                "{name} must be finite and > 0, got {l}"
            )));
        }
    }
    let classes = ProblemClasses::new(
        RegularityClass::smooth(0.0, lf)?,
        RegularityClass::convex(),
        RegularityClass::smooth(0.0, lh)?,
    );
    let family = Family {
        mode: Mode::SublinearObjective,
        alpha,
        lf,
        lh,
    };
    solve_rate(family, classes, lambda, settings)
}

/// Smallest ρ² with `W̃₂ ⪯ 0`, whatever its value. See
/// [`certify_linear_rate`] for the variant that insists on `ρ² < 1`.
pub fn linear_rate_sdp(
    alpha: f64,
    lambda: Option<f64>,
    classes: &ProblemClasses,
    settings: &SdpSettings,
) -> Result<RateCertificate, CertifyError> {
    if !check_assumption1(classes) {
        return Err(CertifyError::AssumptionViolated(
            "needs some strong convexity, a smooth f or g, and a smooth h".into(),
        ));
    }
    let family = Family {
        mode: Mode::Linear,
        alpha,
        lf: f64::INFINITY,
        lh: f64::INFINITY,
    };
    solve_rate(family, *classes, lambda, settings)
}

/// Linear-rate certificate `‖zᵏ − z⋆‖² ≤ ρ²ᵏ‖z⁰ − z⋆‖²`, only issued
/// when `ρ² < 1`.
pub fn certify_linear_rate(
    alpha: f64,
    lambda: Option<f64>,
    classes: &ProblemClasses,
    settings: &SdpSettings,
) -> Result<RateCertificate, CertifyError> {
    let cert = linear_rate_sdp(alpha, lambda, classes, settings)?;
    let rho2 = cert.rate();
    if rho2 >= 1.0 {
        return Err(CertifyError::NoLinearCertificate { rho2 });
    }
    Ok(cert)
}
