//! Matrix objects of the convergence analysis: quadratic constraints,
//! Lyapunov difference matrices, the Schur extension and the dual program
//! data, plus the symmetric eigenvalue oracle used to audit them.

mod builders;
mod eigen;
mod regularity;
mod sym;

pub use builders::{
    build_dual_data, build_qc_triplet, build_w0, build_w1, build_w2, dual_change_of_variables, eta,
    f_selector, g_selector, h_selector, qc_base, schur_extend, DualData, QcTriplet,
};
pub use eigen::{jacobi_eigen, SymEigen, MAX_SWEEPS, REL_OFFDIAG_TOL};
pub use regularity::{Lipschitz, RegularityClass};
pub use sym::{kron_identity, max_eig, LmiBase, SymMatrix, KRON_DIM_CAP};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("requested dimension {requested} exceeds cap {cap}")]
    DimensionCap { requested: usize, cap: usize },
    #[error("invalid regularity class: {0}")]
    InvalidClass(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
