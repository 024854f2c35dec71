use nalgebra::DVector;

use crate::certify::ProblemClasses;
use crate::lmikit::Lipschitz;

use super::prox::{prox_unchecked, ProxSpec, QuadraticFn};
use super::TosError;

/// First-order access to `f + g + h`: proximal maps of `f` and `g`, the
/// gradient of `h`.
pub trait OperatorOracle {
    fn dim(&self) -> usize;
    fn prox_f(&self, alpha: f64, x: &DVector<f64>) -> DVector<f64>;
    fn prox_g(&self, alpha: f64, x: &DVector<f64>) -> DVector<f64>;
    fn grad_h(&self, x: &DVector<f64>) -> DVector<f64>;
    fn declared_classes(&self) -> ProblemClasses;
    /// `f(x) + g(x) + h(x)` when finite.
    fn objective(&self, _x: &DVector<f64>) -> Option<f64> {
        None
    }
}

/// `f + g + h` with `f`, `g` given by [`ProxSpec`]s and `h` quadratic.
#[derive(Clone, Debug)]
pub struct SplitProblem {
    pub f: ProxSpec,
    pub g: ProxSpec,
    pub h: QuadraticFn,
    classes: ProblemClasses,
}

impl SplitProblem {
    /// Declares each term in its tightest class.
    pub fn new(f: ProxSpec, g: ProxSpec, h: QuadraticFn) -> Result<Self, TosError> {
        let n = h.dim();
        f.validate(n)?;
        g.validate(n)?;
        let classes = ProblemClasses::new(f.class(), g.class(), h.class());
        Ok(Self { f, g, h, classes })
    }

    /// Replaces the declared classes by weaker ones, e.g. `F(0, L)` for a
    /// strongly convex term when a certificate needs `m = 0`.
    pub fn with_declared(mut self, declared: ProblemClasses) -> Result<Self, TosError> {
        let tight = [self.classes.f, self.classes.g, self.classes.h];
        let wanted = [declared.f, declared.g, declared.h];
        for (name, (t, w)) in ["f", "g", "h"].iter().zip(tight.iter().zip(wanted.iter())) {
            let scale = match t.lipschitz() {
                Lipschitz::Finite(l) => l.max(t.m()).max(1.0),
                Lipschitz::Unbounded => t.m().max(1.0),
            };
            let m_ok = w.m() <= t.m() + 1e-9 * scale;
            let l_ok = match (t.lipschitz(), w.lipschitz()) {
                (_, Lipschitz::Unbounded) => true,
                (Lipschitz::Finite(lt), Lipschitz::Finite(lw)) => lw >= lt - 1e-9 * scale,
                (Lipschitz::Unbounded, Lipschitz::Finite(_)) => false,
            };
            if !(m_ok && l_ok) {
                return Err(TosError::InvalidSpec(format!(
                    "declared class for {name} does not contain the function ({w:?} vs {t:?})"
                )));
            }
        }
        self.classes = declared;
        Ok(self)
    }
}

impl OperatorOracle for SplitProblem {
    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn prox_f(&self, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
        prox_unchecked(&self.f, alpha, x)
    }

    fn prox_g(&self, alpha: f64, x: &DVector<f64>) -> DVector<f64> {
        prox_unchecked(&self.g, alpha, x)
    }

    fn grad_h(&self, x: &DVector<f64>) -> DVector<f64> {
        self.h.gradient(x)
    }

    fn declared_classes(&self) -> ProblemClasses {
        self.classes
    }

    fn objective(&self, x: &DVector<f64>) -> Option<f64> {
        Some(self.f.value(x)? + self.g.value(x)? + self.h.value(x))
    }
}
