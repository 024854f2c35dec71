//! Small dense linear SDP engine.
//!
//! Solves `minimize cᵀy subject to F₀ + Σ yᵢFᵢ ⪯ 0` with per-variable
//! sign constraints and optional scalar affine constraints. Every
//! reported optimum is re-audited with the Jacobi eigenvalue oracle.

mod ipm;
mod problem;

pub use problem::{AffineConstraint, LinearSdp, Reduction};

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::lmikit::{LmiError, SymMatrix};

/// Upper bound placed on `t` in the margin problem so that it stays
/// bounded when the inequality can be made arbitrarily strict.
pub const MARGIN_CAP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("equality constraints are inconsistent (residual {0:e})")]
    InconsistentEqualities(f64),
    #[error("direction is not isotropic for matrix {index} (vᵀFv = {value:e})")]
    NotIsotropic { index: usize, value: f64 },
    #[error(transparent)]
    Matrix(#[from] LmiError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdpSettings {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl SdpSettings {
    fn validate(&self) -> Result<(), SdpError> {
        let ok = |v: f64| v > 0.0 && v <= 1e-2;
        if !ok(self.feas_tol) || !ok(self.gap_tol) {
            return Err(SdpError::Settings(format!(
                "tolerances must lie in (0, 1e-2], got feas {} gap {}",
                self.feas_tol, self.gap_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(SdpError::Settings("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    fn ipm(&self) -> ipm::IpmTolerances {
        ipm::IpmTolerances {
            feas: self.feas_tol,
            gap: self.gap_tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

/// Multipliers of the matrix inequality and of the scalar rows (sign rows
/// first, then affine rows).
#[derive(Clone, Debug, PartialEq)]
pub struct DualMultipliers {
    pub matrix: DMatrix<f64>,
    pub scalar: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub y: Vec<f64>,
    pub objective: f64,
    /// `max_eig(F₀ + Σ yᵢFᵢ)`, from the Jacobi oracle.
    pub slack: f64,
    /// Largest violation of the sign and affine rows.
    pub scalar_slack: f64,
    pub iterations: usize,
    /// Margin `t*` when the margin problem was consulted.
    pub margin: Option<f64>,
    pub dual: DualMultipliers,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

/// Result of `maximize t s.t. F₀ + Σ yᵢFᵢ + tI ⪯ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Margin {
    pub t: f64,
    pub y: Vec<f64>,
    pub converged: bool,
}

pub fn solve_sdp(problem: &LinearSdp, settings: &SdpSettings) -> Result<SdpSolution, SdpError> {
    settings.validate()?;
    let n = problem.dim();
    if problem.nvars() == 0 {
        let slack = problem.f0().max_eig();
        let scalar_slack = problem.scalar_violation(&[]);
        let status = if slack <= settings.feas_tol && scalar_slack <= settings.feas_tol {
            SdpStatus::Optimal
        } else {
            SdpStatus::Infeasible
        };
        return Ok(SdpSolution {
            status,
            y: Vec::new(),
            objective: 0.0,
            slack,
            scalar_slack,
            iterations: 0,
            margin: Some(-slack),
            dual: DualMultipliers {
                matrix: DMatrix::zeros(n, n),
                scalar: Vec::new(),
            },
        });
    }

    let run = ipm::solve(problem, settings.ipm());
    let slack = problem.evaluate(&run.y).max_eig();
    let scalar_slack = problem.scalar_violation(&run.y);
    let audited = slack <= settings.feas_tol && scalar_slack <= settings.feas_tol;

    let (status, margin) = if run.stop == ipm::Stop::Converged && audited {
        (SdpStatus::Optimal, None)
    } else {
        let m = margin_of(problem, settings)?;
        let status = if m.converged && m.t < -settings.feas_tol {
            SdpStatus::Infeasible
        } else {
            match run.stop {
                ipm::Stop::MaxIterations => SdpStatus::MaxIterations,
                _ => SdpStatus::NumericalFailure,
            }
        };
        (status, Some(m.t))
    };

    Ok(SdpSolution {
        status,
        objective: problem.objective_value(&run.y),
        y: run.y,
        slack,
        scalar_slack,
        iterations: run.iterations,
        margin,
        dual: DualMultipliers {
            matrix: run.x,
            scalar: run.x_lin,
        },
    })
}

/// Largest `t` for which `F₀ + Σ yᵢFᵢ + tI ⪯ 0` is satisfiable with the
/// sign constraints; `t* > 0` certifies strict feasibility.
pub fn feasibility_margin(
    f0: &SymMatrix,
    fi: &[SymMatrix],
    nonneg: &[bool],
    settings: &SdpSettings,
) -> Result<Margin, SdpError> {
    settings.validate()?;
    let problem = LinearSdp::new(
        vec![0.0; fi.len()],
        f0.clone(),
        fi.to_vec(),
        nonneg.to_vec(),
    )?;
    margin_of(&problem, settings)
}

fn margin_of(problem: &LinearSdp, settings: &SdpSettings) -> Result<Margin, SdpError> {
    let nv = problem.nvars();
    let mut objective = vec![0.0; nv];
    objective.push(-1.0);
    let mut fi = problem.fi().to_vec();
    fi.push(SymMatrix::identity(problem.dim()));
    let mut nonneg = problem.nonneg().to_vec();
    nonneg.push(false);
    let mut lifted = LinearSdp::new(objective, problem.f0().clone(), fi, nonneg)?;
    for c in problem.linear() {
        let mut coeffs = c.coeffs.clone();
        coeffs.push(0.0);
        lifted = lifted.with_linear(AffineConstraint::new(coeffs, c.offset))?;
    }
    let mut cap = vec![0.0; nv];
    cap.push(1.0);
    lifted = lifted.with_linear(AffineConstraint::new(cap, -MARGIN_CAP))?;

    let run = ipm::solve(&lifted, settings.ipm());
    let t = *run.y.last().expect("margin variable");
    let mut y = run.y;
    y.pop();
    Ok(Margin {
        t,
        y,
        converged: run.stop == ipm::Stop::Converged,
    })
}

/// Three problems with known optima: `min y s.t. 1 − y ≤ 0` (optimum 1),
/// `min −y s.t. y − 2 ≤ 0` (optimum −2, at `y = 2`), and
/// `min y₁ + y₂ s.t. [[−y₁, 1], [1, −y₂]] ⪯ 0, y ≥ 0` (optimum 2).
/// Each entry is `(name, problem, optimal objective, optimal y)`.
pub fn analytic_instances() -> Vec<(&'static str, LinearSdp, f64, Vec<f64>)> {
    let m = |rows: &[&[f64]]| SymMatrix::from_rows(rows).expect("symmetric literal");
    vec![
        (
            "scalar lower bound",
            LinearSdp::new(vec![1.0], m(&[&[1.0]]), vec![m(&[&[-1.0]])], vec![false])
                .expect("well formed"),
            1.0,
            vec![1.0],
        ),
        (
            "scalar upper bound",
            LinearSdp::new(vec![-1.0], m(&[&[-2.0]]), vec![m(&[&[1.0]])], vec![false])
                .expect("well formed"),
            -2.0,
            vec![2.0],
        ),
        (
            "2x2 product bound",
            LinearSdp::new(
                vec![1.0, 1.0],
                m(&[&[0.0, 1.0], &[1.0, 0.0]]),
                vec![
                    m(&[&[-1.0, 0.0], &[0.0, 0.0]]),
                    m(&[&[0.0, 0.0], &[0.0, -1.0]]),
                ],
                vec![true, true],
            )
            .expect("well formed"),
            2.0,
            vec![1.0, 1.0],
        ),
    ]
}
