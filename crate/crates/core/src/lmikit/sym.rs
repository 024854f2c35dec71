use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use super::eigen::{jacobi_eigen, SymEigen};
use super::LmiError;

/// Largest matrix dimension `kron_identity` will materialize.
pub const KRON_DIM_CAP: usize = 4096;

/// Dense real symmetric matrix with finite entries.
///
/// Symmetry is exact: `get(i, j) == get(j, i)` bit for bit. Arithmetic
/// between symmetric matrices preserves this, since every operation is
/// applied entrywise.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking that it is square, exactly symmetric and finite.
    pub fn new(m: DMatrix<f64>) -> Result<Self, LmiError> {
        if !m.is_square() {
            return Err(LmiError::Dimension(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LmiError::NonFinite);
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(LmiError::Asymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self(m))
    }

    /// Symmetric part `(m + mᵀ)/2` of a square matrix.
    pub fn symmetrize(m: &DMatrix<f64>) -> Result<Self, LmiError> {
        if !m.is_square() {
            return Err(LmiError::Dimension(
                "symmetrize needs a square matrix".into(),
            ));
        }
        let n = m.nrows();
        let s = DMatrix::from_fn(n, n, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            0.5 * (m[(a, b)] + m[(b, a)])
        });
        Self::new(s)
    }

    /// Builds a matrix from the upper triangle produced by `f(i, j)` for `i <= j`.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, LmiError> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self::new(m)
    }

    /// Row-major construction; panics are replaced by errors on ragged or
    /// asymmetric input.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LmiError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LmiError::Dimension("rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// `v vᵀ`
    pub fn outer(v: &[f64]) -> Result<Self, LmiError> {
        let n = v.len();
        Self::from_upper(n, |i, j| v[i] * v[j])
    }

    /// `Sᵀ · self · S` for an arbitrary (possibly rectangular) `S`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Result<Self, LmiError> {
        if s.nrows() != self.dim() {
            return Err(LmiError::Dimension(format!(
                "congruence: {} rows in selector, matrix is {}",
                s.nrows(),
                self.dim()
            )));
        }
        let p = s.transpose() * &self.0 * s;
        Self::symmetrize(&p)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Frobenius inner product `tr(self · other)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.0 * v))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    /// `self + s·other`
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> Self {
        Self(&self.0 + &other.0 * s)
    }

    /// Principal submatrix on the leading `k` rows and columns.
    pub fn leading(&self, k: usize) -> Self {
        Self(self.0.view((0, 0), (k, k)).into_owned())
    }

    /// Eigenvalues (ascending) and orthonormal eigenvectors by cyclic Jacobi.
    pub fn eigen(&self) -> SymEigen {
        jacobi_eigen(self)
    }

    pub fn max_eig(&self) -> f64 {
        max_eig(self).expect("SymMatrix entries are finite by construction")
    }

    pub fn min_eig(&self) -> f64 {
        -self.scale(-1.0).max_eig()
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

/// Largest eigenvalue of a symmetric matrix.
///
/// This is the negative-semidefiniteness oracle used to audit every
/// certificate: `m ⪯ 0` holds iff `max_eig(m) <= 0`.
pub fn max_eig(m: &SymMatrix) -> Result<f64, LmiError> {
    if m.0.iter().any(|v| !v.is_finite()) {
        return Err(LmiError::NonFinite);
    }
    if m.dim() == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(*jacobi_eigen(m).values.last().expect("nonempty"))
}

/// `base ⊗ I_d`, materialized.
pub fn kron_identity(base: &SymMatrix, d: usize) -> Result<SymMatrix, LmiError> {
    if d == 0 {
        return Err(LmiError::InvalidParameter(
            "Kronecker factor must be >= 1".into(),
        ));
    }
    let n = base.dim();
    let total = n
        .checked_mul(d)
        .filter(|&t| t <= KRON_DIM_CAP)
        .ok_or(LmiError::DimensionCap {
            requested: n.saturating_mul(d),
            cap: KRON_DIM_CAP,
        })?;
    let mut m = DMatrix::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            let v = base.get(i, j);
            for k in 0..d {
                m[(i * d + k, j * d + k)] = v;
            }
        }
    }
    SymMatrix::new(m)
}

/// A matrix of the form `base ⊗ I_d`.
///
/// Negative semidefiniteness of the full matrix is equivalent to that of
/// `base`, so every certificate works with `base` directly and `d` is only
/// carried along for reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiBase {
    base: SymMatrix,
    kron: usize,
}

impl LmiBase {
    pub fn new(base: SymMatrix) -> Self {
        Self { base, kron: 1 }
    }

    pub fn with_kron(base: SymMatrix, d: usize) -> Result<Self, LmiError> {
        if d == 0 {
            return Err(LmiError::InvalidParameter(
                "Kronecker factor must be >= 1".into(),
            ));
        }
        Ok(Self { base, kron: d })
    }

    pub fn base(&self) -> &SymMatrix {
        &self.base
    }

    pub fn into_base(self) -> SymMatrix {
        self.base
    }

    pub fn kron_factor(&self) -> usize {
        self.kron
    }

    pub fn expand(&self) -> Result<SymMatrix, LmiError> {
        kron_identity(&self.base, self.kron)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0000001, 1.0]);
        assert!(matches!(
            SymMatrix::new(a),
            Err(LmiError::Asymmetric { row: 0, col: 1 })
        ));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(SymMatrix::new(b), Err(LmiError::NonFinite)));
        assert!(SymMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn max_eig_examples() {
        assert!((SymMatrix::identity(3).max_eig() - 1.0).abs() < 1e-14);
        let m = SymMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert!((m.max_eig() - 3.0).abs() < 1e-14);
        assert_eq!(SymMatrix::zeros(5).max_eig(), 0.0);
    }

    #[test]
    fn kron_d1_is_identity_map() {
        let m = SymMatrix::from_rows(&[&[1.0, -0.5], &[-0.5, 3.0]]).unwrap();
        assert_eq!(kron_identity(&m, 1).unwrap(), m);
        let k2 = kron_identity(&m, 2).unwrap();
        assert_eq!(k2.dim(), 4);
        assert_eq!(k2.get(0, 2), -0.5);
        assert_eq!(k2.get(1, 3), -0.5);
        assert_eq!(k2.get(0, 3), 0.0);
    }

    #[test]
    fn kron_cap() {
        let m = SymMatrix::identity(5);
        assert!(matches!(
            kron_identity(&m, 2000),
            Err(LmiError::DimensionCap { .. })
        ));
        assert!(kron_identity(&m, 0).is_err());
    }

    #[test]
    fn congruence_matches_manual_product() {
        let q = SymMatrix::from_rows(&[&[0.0, 0.5], &[0.5, 0.0]]).unwrap();
        let s = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0]);
        let r = q.congruence(&s).unwrap();
        assert_eq!(r.get(0, 0), -1.0);
        assert_eq!(r.get(0, 3), 0.5);
        assert_eq!(r.get(3, 3), 0.0);
    }
}
