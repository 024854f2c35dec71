//! Building-block functions and their proximal maps.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::lmikit::RegularityClass;

use super::TosError;

fn check_dim(expected: usize, got: usize) -> Result<(), TosError> {
    if expected == got {
        Ok(())
    } else {
        Err(TosError::Dimension { expected, got })
    }
}

/// `½ xᵀPx + qᵀx` with `P` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticFn {
    p: DMatrix<f64>,
    q: DVector<f64>,
    m: f64,
    l: f64,
}

impl QuadraticFn {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>) -> Result<Self, TosError> {
        let n = p.nrows();
        if p.ncols() != n {
            return Err(TosError::InvalidSpec(format!(
                "quadratic matrix is {}x{}",
                n,
                p.ncols()
            )));
        }
        check_dim(n, q.len())?;
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(TosError::InvalidSpec(
                "quadratic data must be finite".into(),
            ));
        }
        let scale = p.amax().max(1.0);
        if (&p - p.transpose()).amax() > 1e-12 * scale {
            return Err(TosError::InvalidSpec(
                "quadratic matrix must be symmetric".into(),
            ));
        }
        let eig = p.clone().symmetric_eigenvalues();
        let m = eig.min();
        let l = eig.max();
        if m < -1e-10 * scale {
            return Err(TosError::InvalidSpec(format!(
                "quadratic matrix is not PSD (min eigenvalue {m:e})"
            )));
        }
        Ok(Self {
            p,
            q,
            m: m.max(0.0),
            l: l.max(0.0),
        })
    }

    /// `½ xᵀPx`.
    pub fn homogeneous(p: DMatrix<f64>) -> Result<Self, TosError> {
        let n = p.nrows();
        Self::new(p, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x + &self.q
    }

    /// Largest eigenvalue of `P`.
    pub fn lipschitz(&self) -> f64 {
        self.l
    }

    /// Smallest eigenvalue of `P`.
    pub fn strong_convexity(&self) -> f64 {
        self.m
    }

    /// `(I + αP)⁻¹(x − αq)`
    pub fn prox(&self, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let a = DMatrix::identity(n, n) + &self.p * alpha;
        let rhs = x - &self.q * alpha;
        Cholesky::new(a)
            .expect("I + αP is positive definite")
            .solve(&rhs)
    }

    /// The tightest class `F(m, L)` containing the function; a zero
    /// matrix is reported as `F(0, ∞)`.
    pub fn class(&self) -> RegularityClass {
        if self.l > 0.0 {
            RegularityClass::smooth(self.m.min(self.l), self.l).expect("0 <= m <= L")
        } else {
            RegularityClass::convex()
        }
    }
}

/// `∇(½ xᵀEx) = Ex`.
pub fn grad_eval(e: &QuadraticFn, x: &DVector<f64>) -> Result<DVector<f64>, TosError> {
    check_dim(e.dim(), x.len())?;
    Ok(e.gradient(x))
}

#[derive(Clone, Debug)]
enum Repr {
    /// `{x : Cx = d}` with the pseudo-inverse of `C` cached.
    Constraints {
        c: DMatrix<f64>,
        d: DVector<f64>,
        pinv: DMatrix<f64>,
    },
    /// `{x₀ + Tξ}` with the Cholesky factor of `TᵀT` cached.
    Parametric {
        offset: DVector<f64>,
        basis: DMatrix<f64>,
        gram: Cholesky<f64, Dyn>,
    },
}

/// An affine subspace with its projection prepared once.
#[derive(Clone, Debug)]
pub struct AffineSubspace {
    dim: usize,
    repr: Repr,
}

impl AffineSubspace {
    /// `{x : Cx = d}`. Rank-deficient `C` is accepted as long as the
    /// system is consistent.
    pub fn from_constraints(c: DMatrix<f64>, d: DVector<f64>) -> Result<Self, TosError> {
        check_dim(c.nrows(), d.len())?;
        if c.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(TosError::InvalidSpec("affine data must be finite".into()));
        }
        let eps = 1e-12 * c.amax().max(1.0) * (c.nrows().max(c.ncols()) as f64);
        let pinv = c
            .clone()
            .pseudo_inverse(eps)
            .map_err(|e| TosError::InvalidSpec(e.to_string()))?;
        let resid = (&c * (&pinv * &d) - &d).norm();
        if resid > 1e-9 * (1.0 + d.norm()) {
            return Err(TosError::InconsistentAffine(resid));
        }
        Ok(Self {
            dim: c.ncols(),
            repr: Repr::Constraints { c, d, pinv },
        })
    }

    /// `{x₀ + Tξ}` for a basis `T` of full column rank.
    pub fn from_parametrization(
        offset: DVector<f64>,
        basis: DMatrix<f64>,
    ) -> Result<Self, TosError> {
        check_dim(offset.len(), basis.nrows())?;
        if offset.iter().chain(basis.iter()).any(|v| !v.is_finite()) {
            return Err(TosError::InvalidSpec("affine data must be finite".into()));
        }
        let gram = Cholesky::new(basis.transpose() * &basis).ok_or_else(|| {
            TosError::InvalidSpec("parametrization basis is rank deficient".into())
        })?;
        Ok(Self {
            dim: offset.len(),
            repr: Repr::Parametric {
                offset,
                basis,
                gram,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.repr {
            Repr::Constraints { c, d, pinv } => x - pinv * (c * x - d),
            Repr::Parametric {
                offset,
                basis,
                gram,
            } => {
                let xi = gram.solve(&(basis.transpose() * (x - offset)));
                offset + basis * xi
            }
        }
    }

    /// `‖P(x) − x‖ ≤ tol·(1 + ‖x‖)`
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        (self.project(x) - x).norm() <= tol * (1.0 + x.norm())
    }
}

/// The proper closed convex functions with closed-form proximal maps.
#[derive(Clone, Debug)]
pub enum ProxSpec {
    Zero,
    /// Indicator of `‖x_S‖_∞ ≤ radius` on the coordinates `S` (all of them
    /// when `coords` is `None`).
    Box {
        radius: f64,
        coords: Option<Range<usize>>,
    },
    /// `weight·‖x‖₁`
    L1 {
        weight: f64,
    },
    /// Indicator of an affine subspace.
    Affine(AffineSubspace),
    Quadratic(QuadraticFn),
}

/// Points this far outside a set still count as members when an
/// indicator is evaluated.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

impl ProxSpec {
    pub fn boxed(radius: f64) -> Self {
        ProxSpec::Box {
            radius,
            coords: None,
        }
    }

    pub fn boxed_on(radius: f64, coords: Range<usize>) -> Self {
        ProxSpec::Box {
            radius,
            coords: Some(coords),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), TosError> {
        match self {
            ProxSpec::Zero => Ok(()),
            ProxSpec::Box { radius, coords } => {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(TosError::InvalidSpec(format!(
                        "box radius must be finite and >= 0, got {radius}"
                    )));
                }
                match coords {
                    Some(r) if r.end > dim || r.start > r.end => Err(TosError::InvalidSpec(
                        format!("box coordinates {r:?} out of range for dimension {dim}"),
                    )),
                    _ => Ok(()),
                }
            }
            ProxSpec::L1 { weight } => {
                if weight.is_finite() && *weight >= 0.0 {
                    Ok(())
                } else {
                    Err(TosError::InvalidSpec(format!(
                        "l1 weight must be finite and >= 0, got {weight}"
                    )))
                }
            }
            ProxSpec::Affine(a) => check_dim(dim, a.dim()),
            ProxSpec::Quadratic(q) => check_dim(dim, q.dim()),
        }
    }

    /// Value of the function, `None` for an indicator evaluated off its set.
    pub fn value(&self, x: &DVector<f64>) -> Option<f64> {
        match self {
            ProxSpec::Zero => Some(0.0),
            ProxSpec::Box { radius, coords } => {
                let r = coords.clone().unwrap_or(0..x.len());
                x.rows(r.start, r.len())
                    .iter()
                    .all(|v| v.abs() <= radius + MEMBERSHIP_TOL)
                    .then_some(0.0)
            }
            ProxSpec::L1 { weight } => Some(weight * x.lp_norm(1)),
            ProxSpec::Affine(a) => a.contains(x, MEMBERSHIP_TOL).then_some(0.0),
            ProxSpec::Quadratic(q) => Some(q.value(x)),
        }
    }

    /// The class `F(m, L)` the function is declared in by default.
    pub fn class(&self) -> RegularityClass {
        match self {
            ProxSpec::Quadratic(q) => q.class(),
            _ => RegularityClass::convex(),
        }
    }
}

/// `argmin_y f(y) + ‖x − y‖²/(2α)` for the function described by `spec`.
/// Indicators ignore `α`.
pub fn prox_eval(spec: &ProxSpec, alpha: f64, x: &DVector<f64>) -> Result<DVector<f64>, TosError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(TosError::InvalidConfig(format!(
            "alpha must be finite and > 0, got {alpha}"
        )));
    }
    spec.validate(x.len())?;
    Ok(prox_unchecked(spec, alpha, x))
}

pub(crate) fn prox_unchecked(spec: &ProxSpec, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
    match spec {
        ProxSpec::Zero => x.clone(),
        ProxSpec::Box { radius, coords } => {
            let mut p = x.clone();
            let r = coords.clone().unwrap_or(0..x.len());
            for v in p.rows_mut(r.start, r.len()).iter_mut() {
                *v = v.clamp(-radius, *radius);
            }
            p
        }
        ProxSpec::L1 { weight } => {
            let t = alpha * weight;
            x.map(|v| v.signum() * (v.abs() - t).max(0.0))
        }
        ProxSpec::Affine(a) => a.project(x),
        ProxSpec::Quadratic(q) => q.prox(alpha, x),
    }
}
