use nalgebra::{DMatrix, DVector};

use crate::lmikit::{jacobi_eigen, SymMatrix};

use super::SdpError;

/// Scalar constraint `offset + coeffs·y <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineConstraint {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineConstraint {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        self.offset + self.coeffs.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// `minimize cᵀy  subject to  F₀ + Σ yᵢFᵢ ⪯ 0`, optional `yᵢ >= 0` and
/// optional scalar affine constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSdp {
    dim: usize,
    objective: Vec<f64>,
    f0: SymMatrix,
    fi: Vec<SymMatrix>,
    nonneg: Vec<bool>,
    linear: Vec<AffineConstraint>,
}

impl LinearSdp {
    pub fn new(
        objective: Vec<f64>,
        f0: SymMatrix,
        fi: Vec<SymMatrix>,
        nonneg: Vec<bool>,
    ) -> Result<Self, SdpError> {
        let dim = f0.dim();
        let nvars = objective.len();
        if fi.len() != nvars || nonneg.len() != nvars {
            return Err(SdpError::Malformed(format!(
                "{} objective coefficients, {} matrices, {} sign flags",
                nvars,
                fi.len(),
                nonneg.len()
            )));
        }
        if let Some(bad) = fi.iter().position(|f| f.dim() != dim) {
            return Err(SdpError::Malformed(format!(
                "F_{} is not {dim}x{dim}",
                bad + 1
            )));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(SdpError::Malformed(
                "objective has non-finite entries".into(),
            ));
        }
        Ok(Self {
            dim,
            objective,
            f0,
            fi,
            nonneg,
            linear: Vec::new(),
        })
    }

    /// Builds the problem from an affine matrix-valued map, recovering
    /// `F₀ = F(0)` and `Fᵢ = F(eᵢ) − F(0)`. The map is checked for
    /// affinity at a fixed probe point.
    pub fn from_affine_map(
        objective: Vec<f64>,
        nonneg: Vec<bool>,
        map: impl Fn(&[f64]) -> SymMatrix,
    ) -> Result<Self, SdpError> {
        let nvars = objective.len();
        let zero = vec![0.0; nvars];
        let f0 = map(&zero);
        let fi: Vec<SymMatrix> = (0..nvars)
            .map(|i| {
                let mut e = zero.clone();
                e[i] = 1.0;
                &map(&e) - &f0
            })
            .collect();
        let probe: Vec<f64> = (0..nvars).map(|i| 0.37 + 0.23 * i as f64).collect();
        let sdp = Self::new(objective, f0, fi, nonneg)?;
        let direct = map(&probe);
        let err = (&direct - &sdp.evaluate(&probe)).frobenius_norm();
        if err > 1e-10 * (1.0 + direct.frobenius_norm()) {
            return Err(SdpError::Malformed(format!(
                "matrix map is not affine (mismatch {err:e})"
            )));
        }
        Ok(sdp)
    }

    pub fn with_linear(mut self, c: AffineConstraint) -> Result<Self, SdpError> {
        if c.coeffs.len() != self.nvars()
            || !c.offset.is_finite()
            || c.coeffs.iter().any(|v| !v.is_finite())
        {
            return Err(SdpError::Malformed(
                "affine constraint does not match the variables".into(),
            ));
        }
        self.linear.push(c);
        Ok(self)
    }

    /// `lo <= y_var <= hi` as two affine constraints.
    pub fn with_bounds(self, var: usize, lo: f64, hi: f64) -> Result<Self, SdpError> {
        let n = self.nvars();
        if var >= n {
            return Err(SdpError::Malformed(format!("no variable {var}")));
        }
        let mut down = vec![0.0; n];
        down[var] = -1.0;
        let mut up = vec![0.0; n];
        up[var] = 1.0;
        self.with_linear(AffineConstraint::new(down, lo))?
            .with_linear(AffineConstraint::new(up, -hi))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nvars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn f0(&self) -> &SymMatrix {
        &self.f0
    }

    pub fn fi(&self) -> &[SymMatrix] {
        &self.fi
    }

    pub fn nonneg(&self) -> &[bool] {
        &self.nonneg
    }

    pub fn linear(&self) -> &[AffineConstraint] {
        &self.linear
    }

    /// `F₀ + Σ yᵢFᵢ`
    pub fn evaluate(&self, y: &[f64]) -> SymMatrix {
        self.fi
            .iter()
            .zip(y)
            .fold(self.f0.clone(), |acc, (f, v)| acc.add_scaled(*v, f))
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Largest violation among sign constraints and affine constraints
    /// (non-positive when all hold).
    pub fn scalar_violation(&self, y: &[f64]) -> f64 {
        let signs = self
            .nonneg
            .iter()
            .zip(y)
            .filter(|(flag, _)| **flag)
            .map(|(_, v)| -v);
        let rows = self.linear.iter().map(|c| c.value(y));
        signs.chain(rows).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Replaces every matrix `F` by `Pᵀ F P`.
    pub fn congruence(&self, p: &DMatrix<f64>) -> Result<Self, SdpError> {
        let map = |f: &SymMatrix| f.congruence(p).map_err(SdpError::from);
        Ok(Self {
            dim: p.ncols(),
            objective: self.objective.clone(),
            f0: map(&self.f0)?,
            fi: self.fi.iter().map(map).collect::<Result<_, _>>()?,
            nonneg: self.nonneg.clone(),
            linear: self.linear.clone(),
        })
    }

    /// Eliminates the equality constraints `rows·y = rhs` by writing
    /// `y = y_p + N ξ` with `N` an orthonormal basis of the null space.
    /// Sign constraints on `y` become affine constraints on `ξ`.
    pub fn with_equalities(
        &self,
        rows: &[Vec<f64>],
        rhs: &[f64],
    ) -> Result<(Self, Reduction), SdpError> {
        let n = self.nvars();
        if rows.len() != rhs.len() || rows.iter().any(|r| r.len() != n) {
            return Err(SdpError::Malformed(
                "equality system has inconsistent shape".into(),
            ));
        }
        let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let b = DVector::from_column_slice(rhs);
        let gram = SymMatrix::symmetrize(&(a.transpose() * &a))?;
        let eig = jacobi_eigen(&gram);
        let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
        let cutoff = 1e-13 * top.max(f64::MIN_POSITIVE);

        let atb = a.transpose() * &b;
        let mut particular = DVector::zeros(n);
        let mut null_cols = Vec::new();
        for (k, &ev) in eig.values.iter().enumerate() {
            let v = eig.vectors.column(k);
            if ev > cutoff && top > 0.0 {
                particular += v * (v.dot(&atb) / ev);
            } else {
                null_cols.push(v.into_owned());
            }
        }
        let resid = (&a * &particular - &b).norm();
        if resid > 1e-9 * (1.0 + b.norm()) {
            return Err(SdpError::InconsistentEqualities(resid));
        }
        let basis = if null_cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&null_cols)
        };
        let clean = |v: f64| if v.abs() < 1e-14 { 0.0 } else { v };
        let basis = basis.map(clean);
        let offset: Vec<f64> = particular.iter().copied().collect();
        let k = basis.ncols();

        let f0 = self.evaluate(&offset);
        let fi: Vec<SymMatrix> = (0..k)
            .map(|c| {
                self.fi
                    .iter()
                    .enumerate()
                    .fold(SymMatrix::zeros(self.dim), |acc, (i, f)| {
                        acc.add_scaled(basis[(i, c)], f)
                    })
            })
            .collect();
        let objective: Vec<f64> = (0..k)
            .map(|c| self.objective_value(basis.column(c).as_slice()))
            .collect();

        let mut linear = Vec::new();
        let mut push = |coeffs: Vec<f64>, off: f64| -> Result<(), SdpError> {
            if coeffs.iter().all(|c| *c == 0.0) {
                if off > 1e-12 {
                    return Err(SdpError::InconsistentEqualities(off));
                }
                return Ok(());
            }
            linear.push(AffineConstraint::new(coeffs, off));
            Ok(())
        };
        for (i, _) in self.nonneg.iter().enumerate().filter(|(_, f)| **f) {
            let coeffs = (0..k).map(|c| -basis[(i, c)]).collect();
            push(coeffs, -offset[i])?;
        }
        for row in &self.linear {
            let coeffs = (0..k)
                .map(|c| {
                    clean(
                        row.coeffs
                            .iter()
                            .enumerate()
                            .map(|(i, a)| a * basis[(i, c)])
                            .sum(),
                    )
                })
                .collect();
            push(coeffs, row.value(&offset))?;
        }

        let reduced = Self {
            dim: self.dim,
            objective,
            f0,
            fi,
            nonneg: vec![false; k],
            linear,
        };
        let constant = self.objective_value(&offset);
        Ok((
            reduced,
            Reduction {
                offset,
                basis,
                objective_constant: constant,
            },
        ))
    }

    /// The same problem in `δ = y − y0`. Sign constraints become affine
    /// rows placed before the existing ones, so the order of the scalar
    /// multipliers is unchanged.
    pub(crate) fn translated(&self, y0: &[f64]) -> Self {
        let n = self.nvars();
        let mut linear = Vec::new();
        for (i, _) in self.nonneg.iter().enumerate().filter(|(_, f)| **f) {
            let mut coeffs = vec![0.0; n];
            coeffs[i] = -1.0;
            linear.push(AffineConstraint::new(coeffs, -y0[i]));
        }
        for row in &self.linear {
            linear.push(AffineConstraint::new(row.coeffs.clone(), row.value(y0)));
        }
        Self {
            dim: self.dim,
            objective: self.objective.clone(),
            f0: self.evaluate(y0),
            fi: self.fi.clone(),
            nonneg: vec![false; n],
            linear,
        }
    }

    /// Facial reduction along a direction `v` with `vᵀF(y)v ≡ 0`: any
    /// feasible `F(y) ⪯ 0` must then satisfy `F(y)v = 0`, so those
    /// equalities are eliminated and the matrix inequality is restricted
    /// to the orthogonal complement of `v`.
    pub fn restrict_null_direction(&self, v: &[f64]) -> Result<(Self, Reduction), SdpError> {
        if v.len() != self.dim {
            return Err(SdpError::Malformed(
                "null direction has the wrong length".into(),
            ));
        }
        let v = DVector::from_column_slice(v);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(SdpError::Malformed("null direction is zero".into()));
        }
        let v = v / norm;
        for (k, f) in std::iter::once(&self.f0).chain(&self.fi).enumerate() {
            let q = f.quad_form(&v);
            if q.abs() > 1e-12 * (1.0 + f.frobenius_norm()) {
                return Err(SdpError::NotIsotropic { index: k, value: q });
            }
        }
        let f0v = self.f0.as_matrix() * &v;
        let fiv: Vec<DVector<f64>> = self.fi.iter().map(|f| f.as_matrix() * &v).collect();
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|r| fiv.iter().map(|c| c[r]).collect())
            .collect();
        let rhs: Vec<f64> = (0..self.dim).map(|r| -f0v[r]).collect();
        let (reduced, reduction) = self.with_equalities(&rows, &rhs)?;
        let complement = orthogonal_complement(&v);
        Ok((reduced.congruence(&complement)?, reduction))
    }
}

/// Columns 2..n of the Householder reflector mapping `e₁` to `±v`.
fn orthogonal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let mut u = v.clone();
    let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += sign;
    let uu = u.dot(&u);
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / uu);
    h.columns(1, n - 1).into_owned()
}

/// Affine reparametrization `y = offset + basis·ξ` produced by an
/// equality elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub offset: Vec<f64>,
    pub basis: DMatrix<f64>,
    /// `cᵀ offset`, the part of the original objective that the reduced
    /// problem no longer carries.
    pub objective_constant: f64,
}

impl Reduction {
    pub fn lift(&self, xi: &[f64]) -> Vec<f64> {
        let mut y = DVector::from_column_slice(&self.offset);
        if !xi.is_empty() {
            y += &self.basis * DVector::from_column_slice(xi);
        }
        y.iter().copied().collect()
    }

    pub fn reduced_dim(&self) -> usize {
        self.basis.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn affine_map_recovers_coefficients() {
        let sdp = LinearSdp::from_affine_map(vec![1.0, 0.0], vec![false, true], |y| {
            m(&[&[y[0] - 1.0, 2.0 * y[1]], &[2.0 * y[1], 3.0]])
        })
        .unwrap();
        assert_eq!(sdp.f0(), &m(&[&[-1.0, 0.0], &[0.0, 3.0]]));
        assert_eq!(sdp.fi()[1], m(&[&[0.0, 2.0], &[2.0, 0.0]]));
        let bad = LinearSdp::from_affine_map(vec![1.0], vec![false], |y| m(&[&[y[0] * y[0]]]));
        assert!(matches!(bad, Err(SdpError::Malformed(_))));
    }

    #[test]
    fn equality_elimination_preserves_the_feasible_map() {
        let sdp = LinearSdp::from_affine_map(vec![1.0, 1.0, 1.0], vec![true, true, false], |y| {
            m(&[&[y[0] - y[2], y[1]], &[y[1], -1.0 - y[0]]])
        })
        .unwrap();
        // y0 + y1 = 1
        let (red, map) = sdp.with_equalities(&[vec![1.0, 1.0, 0.0]], &[1.0]).unwrap();
        assert_eq!(map.reduced_dim(), 2);
        for xi in [[0.0, 0.0], [0.3, -1.2], [2.0, 5.0]] {
            let y = map.lift(&xi);
            assert!((y[0] + y[1] - 1.0).abs() < 1e-12);
            let a = red.evaluate(&xi);
            let b = sdp.evaluate(&y);
            assert!((&a - &b).frobenius_norm() < 1e-12);
            let obj = map.objective_constant + red.objective_value(&xi);
            assert!((obj - sdp.objective_value(&y)).abs() < 1e-12);
            // sign constraints on y0, y1 moved into affine rows
            let viol_red = red.scalar_violation(&xi);
            let viol = sdp.scalar_violation(&y);
            assert!((viol_red - viol).abs() < 1e-12);
        }
        assert!(matches!(
            sdp.with_equalities(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]], &[1.0, 3.0]),
            Err(SdpError::InconsistentEqualities(_))
        ));
    }

    #[test]
    fn null_direction_restriction() {
        // F(y) = [[y0, -y0], [-y0, y0]] + y1·diag(-1, -1) has (1,1)ᵀF(1,1) = -2y1 -> not isotropic.
        let sdp = LinearSdp::from_affine_map(vec![1.0, 0.0], vec![false, false], |y| {
            m(&[&[y[0] - y[1], -y[0] + y[1]], &[-y[0] + y[1], y[0] - y[1]]])
        })
        .unwrap();
        let (red, map) = sdp.restrict_null_direction(&[1.0, 1.0]).unwrap();
        assert_eq!(red.dim(), 1);
        assert_eq!(map.reduced_dim(), 2);
        let other = LinearSdp::from_affine_map(vec![1.0], vec![false], |y| {
            m(&[&[-y[0], 0.0], &[0.0, -1.0]])
        })
        .unwrap();
        assert!(matches!(
            other.restrict_null_direction(&[1.0, 1.0]),
            Err(SdpError::NotIsotropic { .. })
        ));
    }

    #[test]
    fn complement_is_orthonormal() {
        for v in [
            vec![1.0, 1.0, 1.0, 1.0],
            vec![-2.0, 0.5, 3.0],
            vec![0.0, 1.0],
        ] {
            let v = DVector::from_vec(v);
            let p = orthogonal_complement(&(v.clone() / v.norm()));
            assert!((p.transpose() * &p - DMatrix::identity(p.ncols(), p.ncols())).norm() < 1e-14);
            assert!((p.transpose() * &v).norm() < 1e-14);
        }
    }
}
