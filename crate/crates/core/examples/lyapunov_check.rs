//! Replays a real trajectory against the Lyapunov functions of a residual
//! certificate and a linear-rate certificate.
//!
//! `cargo run --example lyapunov_check`

use nalgebra::DVector;
use toscert::certify::{
    benchmark, certify_linear_rate, empirical_lyapunov_check, symbolic_sublinear,
};
use toscert::sdpcore::SdpSettings;
use toscert::tos::synthetic::{case1_problem, quadratic_triple, random_point};
use toscert::tos::{reference_fixed_point, run, FixedPoint, TosConfig};

fn main() {
    let problem = case1_problem(6, 30, 1.5);
    let cert = symbolic_sublinear(0.5, 1.5).unwrap();
    let z0 = random_point(60, 30, 3.0);
    let cfg = TosConfig::new(cert.alpha, cert.lambda).unwrap();
    let star = reference_fixed_point(&problem, &z0, &cfg.with_max_iter(100_000).unwrap()).unwrap();
    let trace = run(&problem, &z0, &cfg.with_max_iter(2_000).unwrap()).unwrap();
    let report = empirical_lyapunov_check(&trace, &star, &cert).unwrap();
    println!(
        "residual certificate (theta = {:.4}): {} violations, worst measured/bound {:.3e}",
        cert.theta.unwrap(),
        report.violations.len(),
        report.worst_bound_ratio()
    );
    for k in [1, 10, 100, 1000, 2000] {
        println!(
            "  k = {k:>4}: min |r|^2 {:.3e} <= {:.3e}",
            report.measured[k], report.bound[k]
        );
    }

    let classes = benchmark("d").unwrap();
    let linear = certify_linear_rate(0.05, None, &classes, &SdpSettings::default()).unwrap();
    let quad = quadratic_triple(8, 10, &classes);
    let z0 = random_point(80, 10, 1.0);
    let cfg = TosConfig::new(linear.alpha, linear.lambda)
        .unwrap()
        .with_max_iter(300)
        .unwrap();
    let trace = run(&quad, &z0, &cfg).unwrap();
    let zero = DVector::zeros(10);
    let star = FixedPoint {
        z: zero.clone(),
        x_b: zero.clone(),
        x_a: zero,
        objective: Some(0.0),
        iterations: 0,
        residual_norm: 0.0,
    };
    let report = empirical_lyapunov_check(&trace, &star, &linear).unwrap();
    println!(
        "linear certificate (rho^2 = {:.4}, lambda = {:.3}): {} violations, worst measured/bound {:.3}",
        linear.rho2.unwrap(),
        linear.lambda,
        report.violations.len(),
        report.worst_bound_ratio()
    );
}
