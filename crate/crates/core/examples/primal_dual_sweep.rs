use std::time::Instant;

use toscert::certify::{benchmark_sets, dual_linear_rate, linear_rate_sdp, log_grid};
use toscert::sdpcore::SdpSettings;

fn main() {
    let settings = SdpSettings::default();
    let grid = log_grid(1e-3, 10.0, 25);
    let start = Instant::now();
    for (label, classes) in benchmark_sets() {
        let mut worst: f64 = 0.0;
        let mut best = (f64::NAN, f64::INFINITY);
        for &alpha in &grid {
            let joint = match linear_rate_sdp(alpha, None, &classes, &settings) {
                Ok(c) => c,
                Err(e) => {
                    println!("{label} alpha={alpha:.4e} joint failed: {e}");
                    continue;
                }
            };
            let pinned = linear_rate_sdp(alpha, Some(joint.lambda), &classes, &settings);
            let dual = dual_linear_rate(alpha, joint.lambda, &classes, &settings);
            match (pinned, dual) {
                (Ok(p), Ok(d)) => {
                    let gap = (p.rate() - d.rho2).abs();
                    worst = worst.max(gap);
                    println!(
                        "{label} alpha={alpha:.4e} lambda={:.4} rho2={:.8} pinned={:.8} dual={:.8} gap={gap:.1e}",
                        joint.lambda,
                        joint.rate(),
                        p.rate(),
                        d.rho2
                    );
                }
                (p, d) => println!(
                    "{label} alpha={alpha:.4e} pinned {:?} dual {:?}",
                    p.err(),
                    d.err()
                ),
            }
            if joint.rate() < best.1 {
                best = (alpha, joint.rate());
            }
        }
        println!(
            "set {label}: best alpha {:.4e} rho2 {:.6}, worst primal-dual gap {worst:.1e}",
            best.0, best.1
        );
    }
    println!("elapsed {:.2?}", start.elapsed());
}
