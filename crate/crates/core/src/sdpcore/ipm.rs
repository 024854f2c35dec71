//! Infeasible-start primal-dual path-following method with Nesterov–Todd
//! scaling and Mehrotra predictor-corrector steps.
//!
//! The user problem `min cᵀy s.t. F₀ + Σ yᵢFᵢ ⪯ 0` (plus scalar rows) is
//! treated as the dual of the standard-form pair
//!
//! ```text
//! (P)  min ⟨C, X⟩ + c_lᵀx   s.t.  ⟨Aᵢ, X⟩ + (A_lᵀx)ᵢ = bᵢ,  X ⪰ 0, x ≥ 0
//! (D)  max bᵀy              s.t.  C − Σ yᵢAᵢ = S ⪰ 0,  c_l − A_l y = s ≥ 0
//! ```
//!
//! with `C = −F₀`, `Aᵢ = Fᵢ`, `b = −c`. The scalar rows form the diagonal
//! block `(x, s)`.

use nalgebra::{DMatrix, DVector};

use crate::lmikit::{jacobi_eigen, SymMatrix};

use super::problem::LinearSdp;

const STEP_FRACTION: f64 = 0.98;
const DIVERGENCE: f64 = 1e12;
const BASE_REGULARIZATION: f64 = 1e-12;
const RESCALE_READY: f64 = 1e-5;
const MAX_RESTARTS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    Converged,
    MaxIterations,
    Numerical,
    Diverged,
}

#[derive(Clone, Debug)]
pub(crate) struct IpmResult {
    pub stop: Stop,
    pub y: Vec<f64>,
    pub iterations: usize,
    /// Multiplier of the matrix inequality.
    pub x: DMatrix<f64>,
    /// Multipliers of the scalar rows, sign rows first.
    pub x_lin: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct IpmTolerances {
    pub feas: f64,
    pub gap: f64,
    pub max_iter: usize,
}

struct StandardForm {
    n: usize,
    nv: usize,
    p: usize,
    c: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
    c_lin: DVector<f64>,
    /// `p × nv`, so that `s = c_lin − a_lin·y`.
    a_lin: DMatrix<f64>,
    b: DVector<f64>,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
}

impl StandardForm {
    /// Builds the standard form with every variable rescaled to a unit
    /// column norm and every scalar row to a unit coefficient norm.
    fn from_problem(sdp: &LinearSdp) -> Self {
        let n = sdp.dim();
        let nv = sdp.nvars();
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for (i, flag) in sdp.nonneg().iter().enumerate() {
            if *flag {
                let mut r = vec![0.0; nv];
                r[i] = -1.0;
                rows.push((r, 0.0));
            }
        }
        for c in sdp.linear() {
            rows.push((c.coeffs.clone(), -c.offset));
        }
        let p = rows.len();
        let col_scale: Vec<f64> = (0..nv)
            .map(|i| {
                let sq = sdp.fi()[i].frobenius_norm().powi(2)
                    + rows.iter().map(|r| r.0[i] * r.0[i]).sum::<f64>();
                if sq > 0.0 {
                    1.0 / sq.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        for r in rows.iter_mut() {
            for (v, d) in r.0.iter_mut().zip(&col_scale) {
                *v *= d;
            }
        }
        let row_scale: Vec<f64> = rows
            .iter()
            .map(|r| {
                let nrm = r.0.iter().map(|v| v * v).sum::<f64>().sqrt();
                if nrm > 0.0 {
                    nrm
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            n,
            nv,
            p,
            c: -sdp.f0().as_matrix(),
            a: sdp
                .fi()
                .iter()
                .zip(&col_scale)
                .map(|(f, d)| f.as_matrix() * *d)
                .collect(),
            c_lin: DVector::from_iterator(p, rows.iter().zip(&row_scale).map(|(r, nu)| r.1 / nu)),
            a_lin: DMatrix::from_fn(p, nv, |k, i| rows[k].0[i] / row_scale[k]),
            b: DVector::from_iterator(
                nv,
                sdp.objective().iter().zip(&col_scale).map(|(c, d)| -c * d),
            ),
            col_scale,
            row_scale,
        }
    }

    fn a_op(&self, x: &DMatrix<f64>, xl: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::from_iterator(self.nv, self.a.iter().map(|a| a.dot(x)));
        if self.p > 0 {
            out += self.a_lin.transpose() * xl;
        }
        out
    }

    fn a_adj(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (a, v) in self.a.iter().zip(y.iter()) {
            out += a * *v;
        }
        out
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn sym(m: &DMatrix<f64>) -> SymMatrix {
    let mut s = m.clone();
    symmetrize(&mut s);
    SymMatrix::new(s).unwrap_or_else(|_| SymMatrix::zeros(m.nrows()))
}

/// Largest `a <= 1/fraction` keeping `diag(d) + a·delta ⪰ 0`.
fn max_step_matrix(d: &DVector<f64>, delta: &DMatrix<f64>) -> f64 {
    let n = d.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| delta[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let min_eig = jacobi_eigen(&sym(&scaled)).values[0];
    if min_eig >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min_eig
    }
}

fn max_step_vector(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Scaling {
    g: DMatrix<f64>,
    d: DVector<f64>,
    /// `Gᵀ Aᵢ G`
    at: Vec<DMatrix<f64>>,
    w_lin: DVector<f64>,
    m: DMatrix<f64>,
    schur: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl Scaling {
    /// Cholesky solve of the (regularized) Schur system followed by two
    /// rounds of iterative refinement against the unregularized matrix.
    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.schur.solve(rhs);
        for _ in 0..2 {
            let r = rhs - &self.m * &x;
            x += self.schur.solve(&r);
        }
        x
    }
}

struct Direction {
    dy: DVector<f64>,
    dxt: DMatrix<f64>,
    dst: DMatrix<f64>,
    ds: DMatrix<f64>,
    dxl: DVector<f64>,
    dsl: DVector<f64>,
}

struct Residuals {
    rp: DVector<f64>,
    rd: DMatrix<f64>,
    rdt: DMatrix<f64>,
    rdl: DVector<f64>,
}

fn nt_scaling(
    sf: &StandardForm,
    x: &DMatrix<f64>,
    s: &DMatrix<f64>,
    xl: &DVector<f64>,
    sl: &DVector<f64>,
) -> Option<Scaling> {
    let lx = x.clone().cholesky()?.l();
    let ls = s.clone().cholesky()?.l();
    let k = ls.transpose() * &lx;
    let svd = k.svd(false, true);
    let vt = svd.v_t?;
    let sing = svd.singular_values;
    if sing.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&sing.map(|v| 1.0 / v.sqrt()));
    let g = &lx * vt.transpose() * inv_sqrt;
    let at: Vec<DMatrix<f64>> =
        sf.a.iter()
            .map(|a| {
                let mut m = g.transpose() * a * &g;
                symmetrize(&mut m);
                m
            })
            .collect();
    let w_lin = DVector::from_iterator(sf.p, xl.iter().zip(sl.iter()).map(|(a, b)| a / b));

    let mut m = DMatrix::from_fn(sf.nv, sf.nv, |i, j| at[i].dot(&at[j]));
    if sf.p > 0 {
        let wa = DMatrix::from_fn(sf.p, sf.nv, |k, i| sf.a_lin[(k, i)] * w_lin[k]);
        m += sf.a_lin.transpose() * wa;
    }
    symmetrize(&mut m);
    let scale = m.diagonal().iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let mut reg = 0.0;
    let schur = loop {
        let mut mr = m.clone();
        for i in 0..sf.nv {
            mr[(i, i)] += reg * scale;
        }
        if let Some(c) = mr.cholesky() {
            break c;
        }
        reg = if reg == 0.0 {
            BASE_REGULARIZATION
        } else {
            reg * 100.0
        };
        if reg > 1e-4 {
            return None;
        }
    };
    Some(Scaling {
        g,
        d: sing,
        at,
        w_lin,
        m,
        schur,
    })
}

fn direction(
    sf: &StandardForm,
    sc: &Scaling,
    res: &Residuals,
    xl: &DVector<f64>,
    sl: &DVector<f64>,
    rc: &DMatrix<f64>,
    rcl: &DVector<f64>,
) -> Direction {
    let n = sf.n;
    let rt = DMatrix::from_fn(n, n, |i, j| rc[(i, j)] * 2.0 / (sc.d[i] + sc.d[j]));
    let mut rhs = DVector::from_iterator(
        sf.nv,
        sc.at
            .iter()
            .enumerate()
            .map(|(i, a)| res.rp[i] - a.dot(&rt) + a.dot(&res.rdt)),
    );
    if sf.p > 0 {
        let t = DVector::from_iterator(
            sf.p,
            (0..sf.p).map(|k| -rcl[k] / sl[k] + sc.w_lin[k] * res.rdl[k]),
        );
        rhs += sf.a_lin.transpose() * t;
    }
    let dy = sc.solve(&rhs);
    let ds = &res.rd - sf.a_adj(&dy);
    let mut dst = res.rdt.clone();
    for (a, v) in sc.at.iter().zip(dy.iter()) {
        dst -= a * *v;
    }
    let mut dxt = &rt - &dst;
    let dsl = if sf.p > 0 {
        &res.rdl - &sf.a_lin * &dy
    } else {
        DVector::zeros(0)
    };
    let mut dxl =
        DVector::from_iterator(sf.p, (0..sf.p).map(|k| (rcl[k] - xl[k] * dsl[k]) / sl[k]));

    // Restore the primal equations lost to cancellation by a least-squares
    // correction in the range of the scaled constraint operator.
    for _ in 0..2 {
        let mut err = DVector::from_iterator(sf.nv, sc.at.iter().map(|a| a.dot(&dxt)));
        if sf.p > 0 {
            err += sf.a_lin.transpose() * &dxl;
        }
        let err = &res.rp - err;
        let c = sc.solve(&err);
        for (a, v) in sc.at.iter().zip(c.iter()) {
            dxt += a * *v;
        }
        if sf.p > 0 {
            dxl += (&sf.a_lin * &c).component_mul(&sc.w_lin);
        }
    }
    Direction {
        dy,
        dxt,
        dst,
        ds,
        dxl,
        dsl,
    }
}

/// Maps the primal step back through the scaling. With an ill-conditioned
/// scaling the transformation itself can lose the primal equations, so the
/// least-squares correction is also tried in the original coordinates and
/// whichever candidate satisfies them better is kept.
fn primal_in_original(
    sf: &StandardForm,
    sc: &Scaling,
    rp: &DVector<f64>,
    dir: &Direction,
) -> (DMatrix<f64>, DVector<f64>) {
    let mapped = &sc.g * &dir.dxt * sc.g.transpose();
    let mapped_err = (rp - sf.a_op(&mapped, &dir.dxl)).norm();
    let w = &sc.g * sc.g.transpose();
    let mut dx = mapped.clone();
    let mut dxl = dir.dxl.clone();
    let wa: Vec<DMatrix<f64>> = sf.a.iter().map(|a| &w * a * &w).collect();
    for _ in 0..2 {
        let err = rp - sf.a_op(&dx, &dxl);
        let c = sc.solve(&err);
        for (a, v) in wa.iter().zip(c.iter()) {
            dx += a * *v;
        }
        if sf.p > 0 {
            dxl += (&sf.a_lin * &c).component_mul(&sc.w_lin);
        }
    }
    symmetrize(&mut dx);
    if (rp - sf.a_op(&dx, &dxl)).norm() < mapped_err {
        (dx, dxl)
    } else {
        (mapped, dir.dxl.clone())
    }
}

fn step_lengths(sc: &Scaling, dir: &Direction, xl: &DVector<f64>, sl: &DVector<f64>) -> (f64, f64) {
    let ap = max_step_matrix(&sc.d, &dir.dxt).min(max_step_vector(xl, &dir.dxl));
    let ad = max_step_matrix(&sc.d, &dir.dst).min(max_step_vector(sl, &dir.dsl));
    (ap, ad)
}

fn attempt(sdp: &LinearSdp, tol: IpmTolerances) -> Attempt {
    let sf = StandardForm::from_problem(sdp);
    let (n, nv, p) = (sf.n, sf.nv, sf.p);
    let total = (n + p) as f64;

    let a_norm_max = sf.a.iter().map(|a| a.norm()).fold(0.0_f64, f64::max);
    let lin_norm_max = (0..nv)
        .map(|i| sf.a_lin.column(i).norm())
        .fold(0.0_f64, f64::max);
    let sqrt_n = (n.max(1) as f64).sqrt();
    let xi0 = (0..nv)
        .map(|i| {
            let an = sf.a[i].norm() + sf.a_lin.column(i).norm();
            sqrt_n * (1.0 + sf.b[i].abs()) / (1.0 + an)
        })
        .fold(10.0_f64.max(sqrt_n), f64::max);
    let eta0 = 10.0_f64
        .max(sqrt_n)
        .max(sf.c.norm())
        .max(a_norm_max)
        .max(lin_norm_max)
        .max(sf.c_lin.amax());

    let mut x = DMatrix::identity(n, n) * xi0;
    let mut s = DMatrix::identity(n, n) * eta0;
    let mut xl = DVector::from_element(p, xi0);
    let mut sl = DVector::from_element(p, eta0);
    let mut y = DVector::zeros(nv);

    let b_norm = sf.b.norm();
    let c_norm = sf.c.norm() + sf.c_lin.norm();
    let mut stop = Stop::MaxIterations;
    let mut iterations = 0;
    let mut rescale = None;

    for it in 0..=tol.max_iter {
        iterations = it;
        let rp = &sf.b - sf.a_op(&x, &xl);
        let rd = &sf.c - &s - sf.a_adj(&y);
        let rdl = if p > 0 {
            &sf.c_lin - &sl - &sf.a_lin * &y
        } else {
            DVector::zeros(0)
        };
        let xs = x.dot(&s) + xl.dot(&sl);
        let mu = xs / total;
        let pobj = sf.c.dot(&x) + sf.c_lin.dot(&xl);
        let dobj = sf.b.dot(&y);

        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf_abs = (rd.norm_squared() + rdl.norm_squared()).sqrt();
        let gap = (pobj - dobj).abs().max(xs) / 1f64.max(pobj.abs()).max(dobj.abs());
        if pinf <= tol.feas && dinf_abs <= 0.1 * tol.feas && gap <= tol.gap {
            stop = Stop::Converged;
            break;
        }
        if it == tol.max_iter {
            break;
        }
        if x.amax() > DIVERGENCE || s.amax() > DIVERGENCE * (1.0 + c_norm) || y.amax() > DIVERGENCE
        {
            stop = Stop::Diverged;
            break;
        }

        let Some(sc) = nt_scaling(&sf, &x, &s, &xl, &sl) else {
            stop = Stop::Numerical;
            break;
        };
        if pinf <= RESCALE_READY && dinf_abs <= RESCALE_READY && gap <= RESCALE_READY {
            let dmax = sc.d.amax();
            let y_orig: Vec<f64> = y.iter().zip(&sf.col_scale).map(|(v, d)| v * d).collect();
            rescale = Some((&sc.g / dmax.sqrt(), y_orig));
        }
        let rdt = {
            let mut m = sc.g.transpose() * &rd * &sc.g;
            symmetrize(&mut m);
            m
        };
        let res = Residuals { rp, rd, rdt, rdl };

        // predictor
        let d2 = DMatrix::from_diagonal(&sc.d.map(|v| v * v));
        let rc_aff = -&d2;
        let rcl_aff = -xl.component_mul(&sl);
        let aff = direction(&sf, &sc, &res, &xl, &sl, &rc_aff, &rcl_aff);
        let (ap, ad) = step_lengths(&sc, &aff, &xl, &sl);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let dmat = DMatrix::from_diagonal(&sc.d);
        let x_aff = &dmat + &aff.dxt * ap;
        let s_aff = &dmat + &aff.dst * ad;
        let xl_aff = &xl + &aff.dxl * ap;
        let sl_aff = &sl + &aff.dsl * ad;
        let mu_aff = (x_aff.dot(&s_aff) + xl_aff.dot(&sl_aff)) / total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let mut second = &aff.dxt * &aff.dst;
        second = (&second + second.transpose()) * 0.5;
        let rc = DMatrix::identity(n, n) * (sigma * mu) - &d2 - second;
        let rcl = DVector::from_iterator(
            p,
            (0..p).map(|k| sigma * mu - xl[k] * sl[k] - aff.dxl[k] * aff.dsl[k]),
        );
        let dir = direction(&sf, &sc, &res, &xl, &sl, &rc, &rcl);
        let (ap, ad) = step_lengths(&sc, &dir, &xl, &sl);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);

        let (dx, dxl) = primal_in_original(&sf, &sc, &res.rp, &dir);
        x += dx * ap;
        symmetrize(&mut x);
        xl += &dxl * ap;
        y += &dir.dy * ad;
        s += &dir.ds * ad;
        symmetrize(&mut s);
        sl += &dir.dsl * ad;

        if !(x
            .iter()
            .chain(s.iter())
            .chain(y.iter())
            .all(|v| v.is_finite()))
        {
            stop = Stop::Numerical;
            break;
        }
    }

    let result = IpmResult {
        stop,
        y: y.iter().zip(&sf.col_scale).map(|(v, d)| v * d).collect(),
        iterations,
        x,
        x_lin: xl.iter().zip(&sf.row_scale).map(|(v, nu)| v / nu).collect(),
    };
    Attempt { result, rescale }
}

struct Attempt {
    result: IpmResult,
    /// Scaling matrix `G` and point `y` of the last well-centred, nearly
    /// optimal iterate, with `G` normalized so that `GᵀSG` has largest
    /// entry one.
    rescale: Option<(DMatrix<f64>, Vec<f64>)>,
}

/// Runs the method and, when it stalls after getting close, restarts it
/// from the last good iterate `(G, y₀)` on the problem in `δ = y − y₀`
/// with every matrix replaced by `GᵀFG`, `G` being the scaling matrix
/// there. In those coordinates slack and multiplier are balanced, which
/// keeps the Newton systems accurate much longer. The multiplier maps
/// back as `X = G X' Gᵀ`.
pub(crate) fn solve(sdp: &LinearSdp, tol: IpmTolerances) -> IpmResult {
    let mut problem = sdp.clone();
    let mut shift = vec![0.0; sdp.nvars()];
    let mut total = DMatrix::identity(sdp.dim(), sdp.dim());
    let mut iterations = 0;
    let mut restarts = 0;
    loop {
        let Attempt { result, rescale } = attempt(&problem, tol);
        iterations += result.iterations;
        let mapped = IpmResult {
            stop: result.stop,
            y: result.y.iter().zip(&shift).map(|(d, s)| d + s).collect(),
            iterations,
            x: &total * &result.x * total.transpose(),
            x_lin: result.x_lin,
        };
        let next = match rescale {
            Some(r) if mapped.stop != Stop::Converged && restarts < MAX_RESTARTS => r,
            _ => return mapped,
        };
        let (g, y0) = next;
        let Ok(moved) = problem.translated(&y0).congruence(&g) else {
            return mapped;
        };
        problem = moved;
        for (s, d) in shift.iter_mut().zip(&y0) {
            *s += d;
        }
        total = &total * &g;
        restarts += 1;
    }
}
