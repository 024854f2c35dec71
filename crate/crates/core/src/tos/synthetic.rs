//! Seeded random problems with known regularity, for exercising the
//! certificates on real trajectories.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::certify::ProblemClasses;
use crate::lmikit::{Lipschitz, RegularityClass};

use super::{AffineSubspace, ProxSpec, QuadraticFn, SplitProblem};

fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn normal_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// `UΛUᵀ` for a random orthogonal `U`.
pub fn with_spectrum(rng: &mut ChaCha8Rng, eigs: &[f64]) -> DMatrix<f64> {
    let n = eigs.len();
    let u = normal_matrix(rng, n, n).qr().q();
    let m = &u * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * u.transpose();
    (&m + m.transpose()) * 0.5
}

/// `n` eigenvalues covering `[lo, hi]`: both ends are present, the rest
/// are uniform in between.
fn spread(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n)
        .map(|i| match i {
            0 => lo,
            1 => hi,
            _ => rng.random_range(lo..=hi),
        })
        .collect()
}

/// Box indicator `f` (radius 1), affine indicator `g` with `n/3` random
/// constraints through a point inside the box, and a convex quadratic `h`
/// whose Hessian has rank `n − 2` and largest eigenvalue `lh`.
pub fn case1_problem(seed: u64, n: usize, lh: f64) -> SplitProblem {
    assert!(n >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (n / 3).max(1);
    let c = normal_matrix(&mut rng, rows, n);
    let inside = DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
    let d = &c * inside;
    let mut eigs = spread(&mut rng, n, 0.0, lh);
    eigs[2] = 0.0;
    let p = with_spectrum(&mut rng, &eigs);
    let q = normal_vector(&mut rng, n) * (2.0 * lh);
    let affine = AffineSubspace::from_constraints(c, d).expect("consistent by construction");
    let h = QuadraticFn::new(p, q).expect("PSD by construction");
    SplitProblem::new(ProxSpec::boxed(1.0), ProxSpec::Affine(affine), h)
        .expect("dimensions agree")
        .with_declared(ProblemClasses::new(
            RegularityClass::convex(),
            RegularityClass::convex(),
            RegularityClass::smooth(0.0, lh).expect("lh > 0"),
        ))
        .expect("declared classes contain the functions")
}

/// Convex quadratic `f` with `L_f = lf`, box indicator `g` (radius 1)
/// and convex quadratic `h` with `L_h = lh`; both Hessians are singular.
pub fn smooth_triple(seed: u64, n: usize, lf: f64, lh: f64) -> SplitProblem {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ef = spread(&mut rng, n, 0.0, lf);
    let pf = with_spectrum(&mut rng, &ef);
    let qf = normal_vector(&mut rng, n) * lf;
    let eh = spread(&mut rng, n, 0.0, lh);
    let ph = with_spectrum(&mut rng, &eh);
    let qh = normal_vector(&mut rng, n) * lh;
    let f = QuadraticFn::new(pf, qf).expect("PSD by construction");
    let h = QuadraticFn::new(ph, qh).expect("PSD by construction");
    SplitProblem::new(ProxSpec::Quadratic(f), ProxSpec::boxed(1.0), h)
        .expect("dimensions agree")
        .with_declared(ProblemClasses::new(
            RegularityClass::smooth(0.0, lf).expect("lf > 0"),
            RegularityClass::convex(),
            RegularityClass::smooth(0.0, lh).expect("lh > 0"),
        ))
        .expect("declared classes contain the functions")
}

/// `½xᵀPx` with the spectrum of `P` spanning the class: `[m, L]` for a
/// finite `L` and `[m, m + 10]` otherwise.
fn class_quadratic(rng: &mut ChaCha8Rng, n: usize, cls: &RegularityClass) -> QuadraticFn {
    let hi = match cls.lipschitz() {
        Lipschitz::Finite(l) => l,
        Lipschitz::Unbounded => cls.m() + 10.0,
    };
    let eigs = spread(rng, n, cls.m(), hi);
    QuadraticFn::homogeneous(with_spectrum(rng, &eigs)).expect("PSD by construction")
}

/// Homogeneous quadratics `f, g, h` inside `classes`, so that `0` is the
/// unique fixed point whenever one of them is strongly convex.
pub fn quadratic_triple(seed: u64, n: usize, classes: &ProblemClasses) -> SplitProblem {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = class_quadratic(&mut rng, n, &classes.f);
    let g = class_quadratic(&mut rng, n, &classes.g);
    let h = class_quadratic(&mut rng, n, &classes.h);
    SplitProblem::new(ProxSpec::Quadratic(f), ProxSpec::Quadratic(g), h)
        .expect("dimensions agree")
        .with_declared(*classes)
        .expect("spectra inside the classes")
}

/// A seeded standard normal vector.
pub fn random_point(seed: u64, n: usize, scale: f64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    normal_vector(&mut rng, n) * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tos::OperatorOracle;

    #[test]
    fn prescribed_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = with_spectrum(&mut rng, &[0.0, 2.0, 5.0]);
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0]).abs() < 1e-12 && (e[1] - 2.0).abs() < 1e-12 && (e[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn generators_declare_expected_classes() {
        let p = case1_problem(3, 9, 1.5);
        assert!((p.h.lipschitz() - 1.5).abs() < 1e-12);
        assert_eq!(p.declared_classes().f, RegularityClass::convex());
        let s = smooth_triple(4, 6, 2.0, 3.0);
        assert_eq!(
            s.declared_classes().h,
            RegularityClass::smooth(0.0, 3.0).unwrap()
        );
        let classes = ProblemClasses::new(
            RegularityClass::convex(),
            RegularityClass::smooth(1.0, 10.0).unwrap(),
            RegularityClass::smooth(0.0, 20.0).unwrap(),
        );
        let q = quadratic_triple(5, 6, &classes);
        assert_eq!(q.declared_classes(), classes);
    }
}
