//! Convex solvers: ellipsoid minimization over a ball, projected subgradient
//! descent, and LP feasibility.

mod ellipsoid;
mod lp;
mod subgradient;

pub use ellipsoid::{ellipsoid_minimize, ellipsoid_minimize_with, Ellipsoid, EllipsoidOptions, EllipsoidOutcome};
pub use lp::{lp_feasible, LinearConstraintSystem, LpOutcome};
pub use subgradient::{project_ball, projected_subgradient, SubgradientOutcome};

/// A convex function with subgradient oracle.
pub trait ConvexObjective: Sync {
    fn dim(&self) -> usize;
    /// Returns f(w) and writes a subgradient into `grad`.
    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64;
    /// Bound on the norm of every subgradient over the search ball.
    fn lipschitz(&self) -> f64;
}

/// Adapter turning a closure into a [`ConvexObjective`].
pub struct FnObjective<F> {
    dim: usize,
    lipschitz: f64,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, lipschitz: f64, f: F) -> Self {
        FnObjective { dim, lipschitz, f }
    }
}

impl<F> ConvexObjective for FnObjective<F>
where
    F: Fn(&[f64], &mut [f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        (self.f)(w, grad)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}
