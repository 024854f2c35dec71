//! The 4×4 matrices behind every certificate, and the Kronecker lift to
//! vector-valued iterates.
//!
//! `cargo run --example lmi_building_blocks`

use toscert::lmikit::{build_qc_triplet, build_w0, jacobi_eigen, kron_identity, RegularityClass};

fn show(name: &str, m: &toscert::lmikit::SymMatrix) {
    println!("{name}:");
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .map(|j| format!("{:+9.4}", m.get(i, j)))
            .collect();
        println!("  [{}]", row.join(" "));
    }
}

fn main() {
    let (lambda, lh): (f64, f64) = (1.0, 2.0);
    let alpha = (2.0 - lambda) / lh;
    let theta = (2.0 - lambda).powi(3) * lambda / (2.0 * lh * lh);
    let convex = RegularityClass::convex();
    let smooth = RegularityClass::smooth(0.0, lh).unwrap();
    println!("f, g in {convex}, h in {smooth}, alpha = {alpha}, lambda = {lambda}");

    let qc = build_qc_triplet(alpha, &convex, &convex, &smooth).unwrap();
    for (name, q) in ["Q_g", "Q_h", "Q_f"].iter().zip(qc.bases()) {
        show(name, q);
    }
    let w0 = build_w0(lambda, theta, alpha).unwrap().into_base();
    show("W0", &w0);

    let s = 2.0 * lambda / alpha;
    let total = &w0 + &qc.combine([s, s, s]);
    show("W0 + sum sigma_i Q_i", &total);
    let eig = jacobi_eigen(&total);
    println!("eigenvalues {:?} in {} sweeps", eig.values, eig.sweeps);

    for d in 1..=3 {
        let lifted = kron_identity(&total, d).unwrap();
        println!(
            "d = {d}: dimension {}, max eigenvalue {:+.3e}",
            lifted.dim(),
            lifted.max_eig()
        );
    }
}
