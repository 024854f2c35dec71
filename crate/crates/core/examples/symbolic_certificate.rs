//! Closed-form residual certificate over a grid of relaxation parameters.
//!
//! `cargo run --example symbolic_certificate -- [L_h]`

use toscert::certify::{audit, symbolic_sublinear};

fn main() {
    let lh: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("L_h must be a number"))
        .unwrap_or(1.0);
    println!("L_h = {lh}");
    println!("lambda     alpha        theta        sigma        max_eig");
    for i in 0..10 {
        let lambda = 0.1 + 0.2 * i as f64;
        let cert = symbolic_sublinear(lambda, lh).expect("lambda in (0, 2)");
        println!(
            "{lambda:>6.2}  {:.4e}  {:.4e}  {:.4e}  {:+.2e}",
            cert.alpha,
            cert.theta.unwrap(),
            cert.sigma[0],
            audit(&cert).unwrap()
        );
    }
    let half = symbolic_sublinear(0.5, lh).unwrap();
    let theta = half.theta.unwrap();
    println!(
        "lambda = 1/2: 1/theta = {:.6} (32 L_h^2/27 = {:.6}), alpha^2/theta = {:.6}",
        1.0 / theta,
        32.0 * lh * lh / 27.0,
        half.alpha * half.alpha / theta
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&half).expect("certificate serializes")
    );
}
