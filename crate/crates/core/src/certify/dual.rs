use nalgebra::{DMatrix, DVector};

use crate::lmikit::{build_dual_data, build_qc_triplet, SymMatrix};
use crate::sdpcore::{solve_sdp, AffineConstraint, LinearSdp, SdpSettings, SdpStatus};

use super::exact::{complement_basis, exact_directions};
use super::{check_assumption1, CertifyError, ProblemClasses};

/// Optimum of the Lagrangian dual of the fixed-`(α, λ)` linear-rate
/// program, with the maximizing Gram matrix `Z` (in the coordinates after
/// the change of variables `G`).
#[derive(Clone, Debug, PartialEq)]
pub struct DualRate {
    pub rho2: f64,
    pub z: DMatrix<f64>,
    /// `Tr(Gᵀ W_I G Z)`, which the program fixes to one.
    pub normalization: f64,
    pub min_eig: f64,
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn gram_from(n: usize, y: &[f64], pairs: &[(usize, usize)]) -> DMatrix<f64> {
    let mut z = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(y) {
        z[(i, j)] = v;
        z[(j, i)] = v;
    }
    z
}

/// `⟨M, Z(y)⟩` as a linear form in the upper-triangular parameters `y`.
fn trace_row(m: &SymMatrix, pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(i, j)| {
            if i == j {
                m.get(i, i)
            } else {
                2.0 * m.get(i, j)
            }
        })
        .collect()
}

/// maximize `Tr(GᵀW_O G Z)` subject to `Tr(GᵀQᵢG Z) >= 0`,
/// `Tr(GᵀW_I G Z) = 1`, `Z ⪰ 0`.
pub fn dual_linear_rate(
    alpha: f64,
    lambda: f64,
    classes: &ProblemClasses,
    settings: &SdpSettings,
) -> Result<DualRate, CertifyError> {
    if !check_assumption1(classes) {
        return Err(CertifyError::AssumptionViolated(
            "needs some strong convexity, a smooth f or g, and a smooth h".into(),
        ));
    }
    if !(alpha.is_finite() && alpha > 0.0) || !(lambda.is_finite() && lambda > 0.0) {
        return Err(CertifyError::InvalidParameter(format!(
            "alpha and lambda must be finite and > 0, got {alpha}, {lambda}"
        )));
    }
    let data = build_dual_data(lambda)?;
    let qc = build_qc_triplet(alpha, &classes.f, &classes.g, &classes.h)?;
    // The last coordinate after the change of variables is a step-scaled
    // gradient of `h`, of size up to `α·L_h` relative to the others;
    // solving for `Ẑ = D⁻¹ Z D⁻¹` with `D = diag(1, 1, 1, α·L_h)` keeps the
    // program well scaled.
    let lh = classes
        .h
        .lipschitz()
        .finite()
        .expect("check_assumption1 requires a smooth h");
    let scale = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, alpha * lh]));
    let g = &data.g * &scale;
    // A class with `m = L` forces `bᵀZb = 0` for `b = Gᵀa`, so `Z` lives on
    // the complement of those `b`.
    let exact = exact_directions(alpha, classes);
    let dirs: Vec<DVector<f64>> = exact.iter().map(|(_, a)| g.transpose() * a).collect();
    let u = if dirs.is_empty() {
        DMatrix::identity(4, 4)
    } else {
        complement_basis(&dirs, 4)
    };
    let gu = &g * &u;
    let n = u.ncols();

    let w_o = data.w_o.base().congruence(&gu)?;
    let w_i = data.w_i.base().congruence(&gu)?;
    let pairs = upper_pairs(n);

    let objective: Vec<f64> = trace_row(&w_o, &pairs).iter().map(|v| -v).collect();
    let nv = pairs.len();
    let mut sdp = LinearSdp::from_affine_map(objective, vec![false; nv], |y| {
        SymMatrix::new(-gram_from(n, y, &pairs)).expect("symmetric by construction")
    })?;
    for (k, q) in qc.bases().into_iter().enumerate() {
        if exact.iter().any(|(e, _)| *e == k) {
            continue;
        }
        let row: Vec<f64> = trace_row(&q.congruence(&gu)?, &pairs)
            .iter()
            .map(|v| -v)
            .collect();
        sdp = sdp.with_linear(AffineConstraint::new(row, 0.0))?;
    }
    let (reduced, map) = sdp.with_equalities(&[trace_row(&w_i, &pairs)], &[1.0])?;
    let sol = solve_sdp(&reduced, settings)?;
    match sol.status {
        SdpStatus::Optimal => {}
        SdpStatus::Infeasible => return Err(CertifyError::Infeasible { alpha }),
        other => return Err(CertifyError::Solver(other)),
    }
    let y = map.lift(&sol.y);
    let z_hat = SymMatrix::new(gram_from(n, &y, &pairs))?;
    let lift = &scale * &u;
    let z = &lift * z_hat.as_matrix() * lift.transpose();
    Ok(DualRate {
        rho2: w_o.inner(&z_hat),
        normalization: w_i.inner(&z_hat),
        min_eig: SymMatrix::symmetrize(&z)?.min_eig(),
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::linear_rate_sdp;
    use crate::lmikit::RegularityClass;

    #[test]
    fn dual_matches_primal_on_a_strongly_convex_setting() {
        let classes = ProblemClasses::new(
            RegularityClass::convex(),
            RegularityClass::smooth(1.0, 10.0).unwrap(),
            RegularityClass::smooth(0.0, 20.0).unwrap(),
        );
        let set = SdpSettings::default();
        let joint = linear_rate_sdp(0.05, None, &classes, &set).unwrap();
        let pinned = linear_rate_sdp(0.05, Some(joint.lambda), &classes, &set).unwrap();
        let dual = dual_linear_rate(0.05, joint.lambda, &classes, &set).unwrap();
        assert!(
            (pinned.rate() - dual.rho2).abs() <= 1e-6,
            "{} vs {}",
            pinned.rate(),
            dual.rho2
        );
        assert!((dual.normalization - 1.0).abs() <= 1e-8);
        assert!(dual.min_eig >= -1e-8);
    }
}
