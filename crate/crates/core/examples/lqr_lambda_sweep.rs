//! Box-constrained LQR solved with three-operator splitting for several
//! relaxation parameters, each with `α = (2 − λ)/‖E‖₂`.
//!
//! ```text
//! cargo run --release --example lqr_lambda_sweep -- [seed] [iterations] [out_dir]
//! ```

use std::path::PathBuf;

use toscert::lqrdemo::{assemble_oracles, build_instance, run_sweep, write_sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let iters: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(200);
    let out = args.next().map(PathBuf::from);

    let inst = build_instance(seed, 20, 5, 20)?;
    let oracle = assemble_oracles(&inst)?;
    println!(
        "dimension {}  L_h = {:.4}",
        oracle.layout().dim(),
        oracle.lipschitz()
    );

    let lambdas = [0.25, 0.5, 1.0, 1.5];
    let runs = run_sweep(&oracle, &lambdas, iters)?;
    println!(
        "{:>6} {:>10} {:>14} {:>14}",
        "lambda", "alpha", "min |r|^2", "k*min |r|^2"
    );
    for r in &runs {
        let best = r.final_min_residual2();
        println!(
            "{:>6} {:>10.4e} {:>14.6e} {:>14.6e}",
            r.lambda,
            r.alpha,
            best,
            best * r.iterations() as f64
        );
    }
    let w = &runs[1].last.x_b;
    println!(
        "lambda = 0.5: cost {:.6}, dynamics violation {:.2e}, input peak {:.6}",
        oracle.cost(w),
        oracle.dynamics_violation(w),
        oracle.input_peak(w)
    );
    if let Some(dir) = out {
        write_sweep(&runs, &dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
