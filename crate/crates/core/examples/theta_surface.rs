//! Best objective-gap rate θ* over a grid of smoothness constants, with α
//! swept and λ optimized at each point; CSV on stdout.
//!
//! `cargo run --release --example theta_surface`

use toscert::certify::{log_grid, sweep_alpha, Mode, ProblemClasses};
use toscert::lmikit::RegularityClass;
use toscert::sdpcore::SdpSettings;

fn main() {
    let grid = log_grid(1e-3, 10.0, 25);
    let ls = [1.0, 3.0, 10.0, 30.0];
    println!("L_f,L_h,theta,alpha,lambda");
    for lf in ls {
        for lh in ls {
            let classes = ProblemClasses::new(
                RegularityClass::smooth(0.0, lf).unwrap(),
                RegularityClass::convex(),
                RegularityClass::smooth(0.0, lh).unwrap(),
            );
            let sweep = sweep_alpha(
                &grid,
                &classes,
                Mode::SublinearObjective,
                None,
                &SdpSettings::default(),
            )
            .expect("some alpha certifies");
            let lambda = sweep
                .best
                .certificate
                .as_ref()
                .map_or(f64::NAN, |c| c.lambda);
            println!(
                "{lf},{lh},{:.6e},{:.4e},{lambda:.4}",
                sweep.best.rate, sweep.best.alpha
            );
        }
    }
}
