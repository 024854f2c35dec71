//! Nonnegative, box-bounded sparse least squares with three-operator
//! splitting; the trace goes to CSV.
//!
//! `cargo run --example tos_solver -- [out.csv]`

use std::fs::File;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use toscert::tos::{reference_fixed_point, run, ProxSpec, QuadraticFn, SplitProblem, TosConfig};

fn row(v: &DVector<f64>) -> String {
    v.iter()
        .map(|x| format!("{x:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "tos_trace.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (rows, n) = (30, 12);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let a = DMatrix::from_fn(rows, n, |_, _| normal.sample(&mut rng));
    let truth = DVector::from_fn(n, |i, _| if i % 3 == 0 { 0.8 } else { 0.0 });
    let b = &a * &truth + DVector::from_fn(rows, |_, _| 0.01 * normal.sample(&mut rng));

    // ½‖Ax − b‖² = ½xᵀAᵀAx − (Aᵀb)ᵀx + const
    let h = QuadraticFn::new(a.transpose() * &a, -(a.transpose() * &b)).unwrap();
    let lh = h.lipschitz();
    let problem = SplitProblem::new(ProxSpec::L1 { weight: 0.5 }, ProxSpec::boxed(1.0), h).unwrap();

    let lambda = 1.0;
    let cfg = TosConfig::new((2.0 - lambda) / lh, lambda)
        .unwrap()
        .with_max_iter(400)
        .unwrap();
    let z0 = DVector::zeros(n);
    let star = reference_fixed_point(&problem, &z0, &cfg.with_max_iter(100_000).unwrap()).unwrap();
    let trace = run(&problem, &z0, &cfg).unwrap();
    trace
        .write_csv(Some(&star.z), File::create(&out).expect("writable path"))
        .unwrap();

    let last = trace.last().unwrap();
    println!(
        "L_h = {lh:.4}, alpha = {:.4e}, {} iterations",
        cfg.alpha,
        trace.len() - 1
    );
    println!("final |r|^2 = {:.3e}", last.residual.norm_squared());
    println!("x      = {}", row(&last.x_b));
    println!("truth  = {}", row(&truth));
    println!("objective {:.6}", last.objective.unwrap());
    println!("wrote {out}");
}
