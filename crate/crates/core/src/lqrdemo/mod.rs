//! Box-constrained finite-horizon LQR as a three-operator split:
//! `f` is the indicator of `‖u_t‖_∞ ≤ 1`, `g` the indicator of the
//! dynamics, and `h(w) = ½wᵀEw` with `E = diag(Q, …, Q, R, …, R)`.

use std::fs;
use std::ops::Range;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::ProblemClasses;
use crate::lmikit::RegularityClass;
use crate::tos::{
    run_metrics, IterateRecord, OperatorOracle, TosConfig, TosError, TraceMetrics, MEMBERSHIP_TOL,
};

#[derive(Debug, Error)]
pub enum LqrError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("lambda must lie in (0, 2), got {0}")]
    InvalidLambda(f64),
    #[error(transparent)]
    Tos(#[from] TosError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LqrInstance {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub horizon: usize,
    pub x_init: DVector<f64>,
}

impl LqrInstance {
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn layout(&self) -> TrajectoryLayout {
        TrajectoryLayout {
            n: self.states(),
            m: self.inputs(),
            horizon: self.horizon,
        }
    }

    pub fn validate(&self) -> Result<(), LqrError> {
        let (n, m) = (self.states(), self.inputs());
        let bad = |s: &str| Err(LqrError::InvalidInstance(s.into()));
        if self.horizon == 0 || n == 0 || m == 0 {
            return bad("sizes must be >= 1");
        }
        if self.a.ncols() != n
            || self.b.nrows() != n
            || self.q.shape() != (n, n)
            || self.r.shape() != (m, m)
        {
            return bad("matrix shapes do not agree");
        }
        if self.x_init.len() != n {
            return bad("initial state has the wrong length");
        }
        let sym = |x: &DMatrix<f64>| (x - x.transpose()).amax() <= 1e-12 * x.amax().max(1.0);
        if !sym(&self.q) || !sym(&self.r) {
            return bad("Q and R must be symmetric");
        }
        if self.q.clone().symmetric_eigenvalues().min() < -1e-10 * self.q.amax().max(1.0) {
            return bad("Q must be positive semidefinite");
        }
        if self.r.clone().symmetric_eigenvalues().min() <= 0.0 {
            return bad("R must be positive definite");
        }
        Ok(())
    }
}

/// `w = [x₀, …, x_N, u₀, …, u_{N−1}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrajectoryLayout {
    pub n: usize,
    pub m: usize,
    pub horizon: usize,
}

impl TrajectoryLayout {
    pub fn dim(&self) -> usize {
        (self.horizon + 1) * self.n + self.horizon * self.m
    }

    pub fn state(&self, t: usize) -> Range<usize> {
        assert!(t <= self.horizon);
        t * self.n..(t + 1) * self.n
    }

    pub fn input(&self, t: usize) -> Range<usize> {
        assert!(t < self.horizon);
        let base = (self.horizon + 1) * self.n;
        base + t * self.m..base + (t + 1) * self.m
    }

    pub fn states(&self) -> Range<usize> {
        0..(self.horizon + 1) * self.n
    }

    pub fn inputs(&self) -> Range<usize> {
        (self.horizon + 1) * self.n..self.dim()
    }

    pub fn stack(&self, xs: &[DVector<f64>], us: &[DVector<f64>]) -> DVector<f64> {
        assert_eq!(xs.len(), self.horizon + 1);
        assert_eq!(us.len(), self.horizon);
        let mut w = DVector::zeros(self.dim());
        for (t, x) in xs.iter().enumerate() {
            w.rows_mut(t * self.n, self.n).copy_from(x);
        }
        for (t, u) in us.iter().enumerate() {
            w.rows_mut(self.input(t).start, self.m).copy_from(u);
        }
        w
    }

    pub fn split(&self, w: &DVector<f64>) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let xs = (0..=self.horizon)
            .map(|t| w.rows(t * self.n, self.n).into_owned())
            .collect();
        let us = (0..self.horizon)
            .map(|t| w.rows(self.input(t).start, self.m).into_owned())
            .collect();
        (xs, us)
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Seeded random instance with `A` scaled to spectral radius one.
pub fn build_instance(
    seed: u64,
    n: usize,
    m: usize,
    horizon: usize,
) -> Result<LqrInstance, LqrError> {
    if n == 0 || m == 0 || horizon == 0 {
        return Err(LqrError::InvalidSize(format!(
            "n, m, N must be >= 1, got {n}, {m}, {horizon}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = normal_matrix(&mut rng, n, n);
    let rho = spectral_radius(&a0);
    let a = if rho > 0.0 {
        a0 / rho
    } else {
        DMatrix::identity(n, n)
    };
    let b = normal_matrix(&mut rng, n, m);
    let mq = normal_matrix(&mut rng, n, n);
    let q = mq.transpose() * &mq;
    let mr = normal_matrix(&mut rng, m, m);
    let r = mr.transpose() * &mr + DMatrix::identity(m, m) * 0.1;
    let x_init = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let inst = LqrInstance {
        a,
        b,
        q,
        r,
        horizon,
        x_init,
    };
    inst.validate()?;
    Ok(inst)
}

/// The split of an [`LqrInstance`], with the dynamics parametrized by the
/// inputs: `w = w₀ + Tu`, `T = [Φ; I]`.
#[derive(Clone, Debug)]
pub struct LqrOracle {
    inst: LqrInstance,
    layout: TrajectoryLayout,
    offset: DVector<f64>,
    basis: DMatrix<f64>,
    gram: Cholesky<f64, Dyn>,
    lh: f64,
}

pub fn assemble_oracles(inst: &LqrInstance) -> Result<LqrOracle, LqrError> {
    inst.validate()?;
    let layout = inst.layout();
    let (n, m, big_n) = (layout.n, layout.m, layout.horizon);
    let mut offset = DVector::zeros(layout.dim());
    let mut basis = DMatrix::zeros(layout.dim(), big_n * m);
    let mut x = inst.x_init.clone();
    offset.rows_mut(0, n).copy_from(&x);
    // Column block s of Φ holds A^{t−1−s}B in row block t > s.
    let mut powers = vec![inst.b.clone()];
    for _ in 1..big_n {
        let next = &inst.a * powers.last().unwrap();
        powers.push(next);
    }
    for t in 1..=big_n {
        x = &inst.a * x;
        offset.rows_mut(t * n, n).copy_from(&x);
        for s in 0..t {
            basis
                .view_mut((t * n, s * m), (n, m))
                .copy_from(&powers[t - 1 - s]);
        }
    }
    let u0 = layout.inputs().start;
    for i in 0..big_n * m {
        basis[(u0 + i, i)] = 1.0;
    }
    let gram = Cholesky::new(basis.transpose() * &basis).expect("TᵀT ⪰ I");
    let norm2 = |x: &DMatrix<f64>| {
        x.clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    };
    let lh = norm2(&inst.q).max(norm2(&inst.r));
    Ok(LqrOracle {
        inst: inst.clone(),
        layout,
        offset,
        basis,
        gram,
        lh,
    })
}

impl LqrOracle {
    pub fn instance(&self) -> &LqrInstance {
        &self.inst
    }

    pub fn layout(&self) -> TrajectoryLayout {
        self.layout
    }

    /// `‖E‖₂`, the largest block norm.
    pub fn lipschitz(&self) -> f64 {
        self.lh
    }

    /// `½wᵀEw`
    pub fn cost(&self, w: &DVector<f64>) -> f64 {
        0.5 * w.dot(&self.grad_h(w))
    }

    /// Largest violation of `x₀ = x_init`, `x_{t+1} = Ax_t + Bu_t`.
    pub fn dynamics_violation(&self, w: &DVector<f64>) -> f64 {
        let (xs, us) = self.layout.split(w);
        let mut worst = (&xs[0] - &self.inst.x_init).amax();
        for t in 0..self.layout.horizon {
            let pred = &self.inst.a * &xs[t] + &self.inst.b * &us[t];
            worst = worst.max((&xs[t + 1] - pred).amax());
        }
        worst
    }

    /// Largest input magnitude.
    pub fn input_peak(&self, w: &DVector<f64>) -> f64 {
        let r = self.layout.inputs();
        w.rows(r.start, r.len()).amax()
    }

    /// The trajectory generated by the given inputs.
    pub fn rollout(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.offset + &self.basis * u
    }
}

impl OperatorOracle for LqrOracle {
    fn dim(&self) -> usize {
        self.layout.dim()
    }

    fn prox_f(&self, _alpha: f64, w: &DVector<f64>) -> DVector<f64> {
        let mut p = w.clone();
        let r = self.layout.inputs();
        for v in p.rows_mut(r.start, r.len()).iter_mut() {
            *v = v.clamp(-1.0, 1.0);
        }
        p
    }

    fn prox_g(&self, _alpha: f64, w: &DVector<f64>) -> DVector<f64> {
        let u = self
            .gram
            .solve(&(self.basis.transpose() * (w - &self.offset)));
        self.rollout(&u)
    }

    fn grad_h(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(w.len());
        let (n, m) = (self.layout.n, self.layout.m);
        for t in 0..=self.layout.horizon {
            g.rows_mut(t * n, n)
                .copy_from(&(&self.inst.q * w.rows(t * n, n)));
        }
        for t in 0..self.layout.horizon {
            let s = self.layout.input(t).start;
            g.rows_mut(s, m).copy_from(&(&self.inst.r * w.rows(s, m)));
        }
        g
    }

    fn declared_classes(&self) -> ProblemClasses {
        ProblemClasses::new(
            RegularityClass::convex(),
            RegularityClass::convex(),
            RegularityClass::smooth(0.0, self.lh).expect("L_h > 0"),
        )
    }

    fn objective(&self, w: &DVector<f64>) -> Option<f64> {
        let scale = 1.0 + w.amax();
        let feasible = self.input_peak(w) <= 1.0 + MEMBERSHIP_TOL
            && self.dynamics_violation(w) <= MEMBERSHIP_TOL * scale;
        feasible.then(|| self.cost(w))
    }
}

/// One λ of the sweep, run with `α = (2 − λ)/‖E‖₂` from `z = 0`.
#[derive(Clone, Debug)]
pub struct LambdaRun {
    pub lambda: f64,
    pub alpha: f64,
    pub metrics: TraceMetrics,
    pub last: IterateRecord,
}

impl LambdaRun {
    /// `min_{i ≤ K} ‖r^i‖²`
    pub fn final_min_residual2(&self) -> f64 {
        *self
            .metrics
            .min_residual_norm2()
            .last()
            .expect("nonempty run")
    }

    pub fn iterations(&self) -> usize {
        self.metrics.len() - 1
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            lambda: self.lambda,
            alpha: self.alpha,
            final_min_residual2: self.final_min_residual2(),
            iterations: self.iterations(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub lambda: f64,
    pub alpha: f64,
    pub final_min_residual2: f64,
    pub iterations: usize,
}

/// Runs every λ for `iter_budget` iterations (in parallel, results in
/// input order).
pub fn run_sweep(
    oracle: &LqrOracle,
    lambdas: &[f64],
    iter_budget: usize,
) -> Result<Vec<LambdaRun>, LqrError> {
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && **l < 2.0)) {
        return Err(LqrError::InvalidLambda(*bad));
    }
    let z0 = DVector::zeros(oracle.dim());
    lambdas
        .par_iter()
        .map(|&lambda| {
            let alpha = (2.0 - lambda) / oracle.lipschitz();
            let cfg = TosConfig::new(alpha, lambda)?.with_max_iter(iter_budget)?;
            let (metrics, last) = run_metrics(oracle, &z0, &cfg, None)?;
            Ok(LambdaRun {
                lambda,
                alpha,
                metrics,
                last,
            })
        })
        .collect()
}

/// Writes `lambda_<λ>.csv` per run and `summary.json` into `dir`.
pub fn write_sweep(runs: &[LambdaRun], dir: &Path) -> Result<(), LqrError> {
    fs::create_dir_all(dir)?;
    for r in runs {
        let f = fs::File::create(dir.join(format!("lambda_{}.csv", r.lambda)))?;
        r.metrics.write_csv(f)?;
    }
    let summary: Vec<RunSummary> = runs.iter().map(LambdaRun::summary).collect();
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}
