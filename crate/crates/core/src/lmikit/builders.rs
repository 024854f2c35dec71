//! Constructors for the quadratic-constraint and Lyapunov-difference
//! matrices. Rows and columns of every 4×4 matrix are ordered as the
//! deviation blocks `(x_B, y, x_A, z)`.

use nalgebra::DMatrix;

use super::regularity::{Lipschitz, RegularityClass};
use super::sym::{LmiBase, SymMatrix};
use super::LmiError;

fn check_positive(name: &str, v: f64) -> Result<(), LmiError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(LmiError::InvalidParameter(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<(), LmiError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(LmiError::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {v}"
        )))
    }
}

/// The 2×2 incremental quadratic constraint `Q(m, L)` of the gradient of a
/// function in `F(m, L)`. For unbounded `L` the limit `[[-m, 1/2], [1/2, 0]]`
/// is used.
pub fn qc_base(cls: &RegularityClass) -> SymMatrix {
    let m = cls.m();
    let (a, d) = match cls.lipschitz() {
        Lipschitz::Finite(l) => (-(m * l) / (m + l), -1.0 / (m + l)),
        Lipschitz::Unbounded => (-m, 0.0),
    };
    SymMatrix::from_rows(&[&[a, 0.5], &[0.5, d]]).expect("finite by class invariants")
}

/// Selector mapping the deviation vector to `α·(Δx_B, Δ∂g(x_B))`.
pub fn g_selector(alpha: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[alpha, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0])
}

/// Selector mapping the deviation vector to `α·(Δx_B, Δ∇h(x_B))`.
pub fn h_selector(alpha: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[alpha, 0.0, 0.0, 0.0, 2.0, -1.0, 0.0, -1.0])
}

/// Selector mapping the deviation vector to `α·(Δx_A, Δ∂f(x_A))`.
pub fn f_selector(alpha: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[0.0, 0.0, alpha, 0.0, 0.0, 1.0, -1.0, 0.0])
}

/// The three lifted quadratic constraints, for `g`, `h` and `f` in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct QcTriplet {
    pub q1: LmiBase,
    pub q2: LmiBase,
    pub q3: LmiBase,
}

impl QcTriplet {
    pub fn bases(&self) -> [&SymMatrix; 3] {
        [self.q1.base(), self.q2.base(), self.q3.base()]
    }

    /// `Σ σᵢ Qᵢ`
    pub fn combine(&self, sigma: [f64; 3]) -> SymMatrix {
        let mut acc = SymMatrix::zeros(4);
        for (s, q) in sigma.iter().zip(self.bases()) {
            acc = acc.add_scaled(*s, q);
        }
        acc
    }
}

pub fn build_qc_triplet(
    alpha: f64,
    f: &RegularityClass,
    g: &RegularityClass,
    h: &RegularityClass,
) -> Result<QcTriplet, LmiError> {
    check_positive("alpha", alpha)?;
    let q1 = qc_base(g).congruence(&g_selector(alpha))?;
    let q2 = qc_base(h).congruence(&h_selector(alpha))?;
    let q3 = qc_base(f).congruence(&f_selector(alpha))?;
    Ok(QcTriplet {
        q1: LmiBase::new(q1),
        q2: LmiBase::new(q2),
        q3: LmiBase::new(q3),
    })
}

/// Lyapunov difference matrix for the residual-rate certificate.
pub fn build_w0(lambda: f64, theta: f64, alpha: f64) -> Result<LmiBase, LmiError> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("theta", theta)?;
    check_positive("alpha", alpha)?;
    let a = lambda * lambda + theta / (alpha * alpha);
    let l = lambda;
    let m = SymMatrix::from_rows(&[
        &[a, 0.0, -a, -l],
        &[0.0, 0.0, 0.0, 0.0],
        &[-a, 0.0, a, l],
        &[-l, 0.0, l, 0.0],
    ])?;
    Ok(LmiBase::new(m))
}

/// Lyapunov difference bound for the objective-rate certificate, assembled
/// from its 2×2 blocks with the lower-left block taken as the transpose of
/// the upper-right one.
pub fn build_w1(
    lambda: f64,
    theta: f64,
    alpha: f64,
    lf: f64,
    lh: f64,
) -> Result<LmiBase, LmiError> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("theta", theta)?;
    check_positive("alpha", alpha)?;
    check_positive("L_f", lf)?;
    check_positive("L_h", lh)?;
    let l2 = lambda * lambda;
    let c = theta / (alpha * alpha * lh);
    let a11 = l2 + (1.0 / alpha + lf / 2.0 - 2.0 / (alpha * alpha * lh)) * theta;
    let a12 = c;
    let a22 = -c / 2.0;
    let b11 = -l2 - theta * (1.0 / (2.0 * alpha) + lf / 2.0);
    let b12 = -lambda + c;
    let b21 = 0.0;
    let b22 = -c / 2.0;
    let d11 = l2 + theta * lf / 2.0;
    let d12 = lambda;
    let d22 = -c / 2.0;
    let m = SymMatrix::from_rows(&[
        &[a11, a12, b11, b12],
        &[a12, a22, b21, b22],
        &[b11, b21, d11, d12],
        &[b12, b22, d12, d22],
    ])?;
    Ok(LmiBase::new(m))
}

/// Lyapunov difference matrix for the linear-rate certificate. Only the
/// `(z, z)` entry depends on `rho2`.
pub fn build_w2(lambda: f64, rho2: f64) -> Result<LmiBase, LmiError> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("rho2", rho2)?;
    let l2 = lambda * lambda;
    let m = SymMatrix::from_rows(&[
        &[l2, 0.0, -l2, -lambda],
        &[0.0, 0.0, 0.0, 0.0],
        &[-l2, 0.0, l2, lambda],
        &[-lambda, 0.0, lambda, 1.0 - rho2],
    ])?;
    Ok(LmiBase::new(m))
}

/// `η = (λ, 0, -λ, 0)`; `η ηᵀ` carries all of the `λ²` terms of W₀, W₁, W₂.
pub fn eta(lambda: f64) -> [f64; 4] {
    [lambda, 0.0, -lambda, 0.0]
}

/// `[[m, η], [ηᵀ, -1]]`. When `m` already excludes `η ηᵀ`, this matrix is
/// negative semidefinite iff `m + η ηᵀ` is.
pub fn schur_extend(m: &SymMatrix, lambda: f64) -> Result<SymMatrix, LmiError> {
    if m.dim() != 4 {
        return Err(LmiError::Dimension(format!(
            "schur_extend needs 4x4, got {}",
            m.dim()
        )));
    }
    let e = eta(lambda);
    SymMatrix::from_upper(5, |i, j| match (i, j) {
        (4, 4) => -1.0,
        (i, 4) => e[i],
        (i, j) => m.get(i, j),
    })
}

/// Data of the Lagrangian-dual linear-rate program: `W₂ = W_O − ρ² W_I`,
/// and the invertible change of variables `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualData {
    pub w_o: LmiBase,
    pub w_i: LmiBase,
    pub g: DMatrix<f64>,
}

pub fn dual_change_of_variables() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            -1.0, 0.0, 2.0, -1.0, //
            0.0, 1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0,
        ],
    )
}

pub fn build_dual_data(lambda: f64) -> Result<DualData, LmiError> {
    check_positive("lambda", lambda)?;
    let w_o = build_w2(lambda, 0.0)?;
    let w_i = SymMatrix::from_upper(4, |i, j| if i == 3 && j == 3 { 1.0 } else { 0.0 })?;
    Ok(DualData {
        w_o,
        w_i: LmiBase::new(w_i),
        g: dual_change_of_variables(),
    })
}
