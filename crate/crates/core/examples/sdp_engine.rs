//! The dense interior-point solver on known problems, plus a feasibility
//! margin.
//!
//! `cargo run --example sdp_engine`

use toscert::lmikit::SymMatrix;
use toscert::sdpcore::{analytic_instances, feasibility_margin, solve_sdp, LinearSdp, SdpSettings};

fn main() {
    let settings = SdpSettings::default();
    for (name, problem, optimum, _) in analytic_instances() {
        let s = solve_sdp(&problem, &settings).expect("well-posed");
        println!(
            "{name:<20} {:?}  objective {:+.10}  known {optimum:+}  y {:?}  {} iterations",
            s.status, s.objective, s.y, s.iterations
        );
    }

    // Smallest t with [[1, 0.5, 0], [0.5, 2, 0.3], [0, 0.3, 1.5]] ⪯ tI.
    let a = SymMatrix::from_rows(&[&[1.0, 0.5, 0.0], &[0.5, 2.0, 0.3], &[0.0, 0.3, 1.5]]).unwrap();
    let problem = LinearSdp::new(
        vec![1.0],
        a.clone(),
        vec![SymMatrix::identity(3).scale(-1.0)],
        vec![false],
    )
    .unwrap();
    let s = solve_sdp(&problem, &settings).unwrap();
    println!(
        "largest eigenvalue by SDP {:.10}, by Jacobi {:.10}",
        s.objective,
        a.max_eig()
    );

    let shifted = a.add_scaled(-3.0, &SymMatrix::identity(3));
    let m = feasibility_margin(&shifted, &[], &[], &settings).unwrap();
    println!(
        "margin of A - 3I: t* = {:.6} (expected {:.6})",
        m.t,
        3.0 - a.max_eig()
    );
}
