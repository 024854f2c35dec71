//! Classes with `m = L` pin the gradient to `m·x`. Their quadratic
//! constraint is then rank one and negative semidefinite,
//! `Q = −aaᵀ/(2m)` with `a = Sᵀ(m, −1)`, so it can only be satisfied with
//! equality. The rate programs are solved on `a⊥` and the multiplier of
//! such a class is recovered afterwards as the smallest value that passes
//! the audit.

use nalgebra::{DMatrix, DVector};

use crate::lmikit::{f_selector, g_selector, h_selector, jacobi_eigen, SymMatrix};

use super::{audit, CertifyError, ProblemClasses, RateCertificate};

/// Directions `a` of the classes with `m = L`, tagged with their position
/// in the `(g, h, f)` order of the quadratic constraints.
pub(crate) fn exact_directions(alpha: f64, classes: &ProblemClasses) -> Vec<(usize, DVector<f64>)> {
    let parts = [
        (&classes.g, g_selector(alpha)),
        (&classes.h, h_selector(alpha)),
        (&classes.f, f_selector(alpha)),
    ];
    parts
        .into_iter()
        .enumerate()
        .filter_map(|(k, (cls, sel))| match cls.lipschitz().finite() {
            Some(l) if cls.m() == l => {
                let a = sel.transpose() * DVector::from_column_slice(&[cls.m(), -1.0]);
                Some((k, a))
            }
            _ => None,
        })
        .collect()
}

/// Orthonormal basis (as columns) of the complement of `dirs` in `R^n`.
pub(crate) fn complement_basis(dirs: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut gram = DMatrix::zeros(n, n);
    for d in dirs {
        gram += d * d.transpose();
    }
    let eig = jacobi_eigen(&SymMatrix::symmetrize(&gram).expect("finite directions"));
    let top = eig
        .values
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    let cols: Vec<DVector<f64>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v <= 1e-12 * top)
        .map(|(k, _)| eig.vectors.column(k).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// `blockdiag(basis, I)` padded to act on `dim` coordinates.
pub(crate) fn padded(basis: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    let (r, c) = basis.shape();
    let extra = dim - r;
    let mut p = DMatrix::zeros(dim, c + extra);
    p.view_mut((0, 0), (r, c)).copy_from(basis);
    for i in 0..extra {
        p[(r + i, c + i)] = 1.0;
    }
    p
}

/// Raises the multipliers listed in `which` together until the audit
/// passes at `tol`, then bisects (on a log scale) back towards the
/// smallest passing value. The largest eigenvalue is nonincreasing in
/// these multipliers because their constraints are negative semidefinite.
pub(crate) fn saturate_sigma(
    cert: &mut RateCertificate,
    which: &[usize],
    tol: f64,
) -> Result<(), CertifyError> {
    if which.is_empty() {
        return Ok(());
    }
    let base = cert.sigma.iter().copied().fold(1.0, f64::max);
    let mut eval = |s: f64| -> Result<f64, CertifyError> {
        for &k in which {
            cert.sigma[k] = s;
        }
        audit(cert)
    };
    let mut hi = base;
    let mut lo = 0.0;
    let mut found = false;
    for _ in 0..60 {
        if eval(hi)? <= tol {
            found = true;
            break;
        }
        lo = hi;
        hi *= 4.0;
    }
    if !found {
        return Err(CertifyError::AuditFailed(eval(hi)?));
    }
    for _ in 0..40 {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 4.0 };
        if eval(mid)? <= tol {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo.max(f64::MIN_POSITIVE) < 1.01 {
            break;
        }
    }
    eval(hi)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lmikit::{build_qc_triplet, RegularityClass};

    #[test]
    fn exact_constraint_is_rank_one_along_direction() {
        let c = ProblemClasses::new(
            RegularityClass::smooth(20.0, 20.0).unwrap(),
            RegularityClass::convex(),
            RegularityClass::smooth(0.0, 70.0).unwrap(),
        );
        let alpha = 0.3;
        let dirs = exact_directions(alpha, &c);
        assert_eq!(dirs.len(), 1);
        let (k, a) = &dirs[0];
        assert_eq!(*k, 2);
        let qc = build_qc_triplet(alpha, &c.f, &c.g, &c.h).unwrap();
        let q = qc.bases()[2].as_matrix().clone();
        let expected = (a * a.transpose()) * (-1.0 / 40.0);
        assert!((q - expected).norm() < 1e-12);

        let basis = complement_basis(&[a.clone()], 4);
        assert_eq!(basis.ncols(), 3);
        assert!((basis.transpose() * a).norm() < 1e-12);
        assert!((basis.transpose() * &basis - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn padding_keeps_extra_coordinates() {
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let p = padded(&b, 3);
        assert_eq!(
            p,
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0])
        );
    }
}
