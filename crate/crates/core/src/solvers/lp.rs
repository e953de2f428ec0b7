use super::{ellipsoid_minimize_with, ConvexObjective, EllipsoidOptions};
use crate::error::{Error, Result};
use crate::halfspace::{dot, norm2};

/// Rows a·w ≥ b.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearConstraintSystem {
    dim: usize,
    rows: Vec<(Vec<f64>, f64)>,
}

impl LinearConstraintSystem {
    pub fn new(dim: usize) -> Self {
        LinearConstraintSystem { dim, rows: Vec::new() }
    }

    pub fn push(&mut self, a: Vec<f64>, b: f64) -> Result<()> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: a.len() });
        }
        if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("constraint entries must be finite".into()));
        }
        self.rows.push((a, b));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    /// Largest scaled violation max_r ((b_r − a_r·w)/max(1,|b_r|))₊.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| ((b - dot(a, w)) / b.abs().max(1.0)).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<f64>),
    Infeasible,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Feasible(w) => Some(w),
            LpOutcome::Infeasible => None,
        }
    }
}

const SLACK: f64 = 1e-9;

struct PhaseOne<'a>(&'a LinearConstraintSystem);

impl ConvexObjective for PhaseOne<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let mut worst = 0.0;
        let mut arg = None;
        for (r, (a, b)) in self.0.rows.iter().enumerate() {
            let v = (b - dot(a, w)) / b.abs().max(1.0);
            if v > worst {
                worst = v;
                arg = Some(r);
            }
        }
        match arg {
            Some(r) => {
                let (a, b) = &self.0.rows[r];
                let s = b.abs().max(1.0);
                for (g, x) in grad.iter_mut().zip(a) {
                    *g = -x / s;
                }
            }
            None => grad.iter_mut().for_each(|g| *g = 0.0),
        }
        worst
    }

    fn lipschitz(&self) -> f64 {
        self.0
            .rows
            .iter()
            .map(|(a, b)| norm2(a) / b.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Finds w in the ball with every row satisfied up to 10⁻⁹·max(1,|b_r|),
/// or reports Infeasible when the phase-1 minimum stays above that slack.
pub fn lp_feasible(sys: &LinearConstraintSystem, radius: f64) -> Result<LpOutcome> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    if sys.rows.is_empty() || sys.dim == 0 {
        return Ok(LpOutcome::Feasible(vec![0.0; sys.dim]));
    }
    let obj = PhaseOne(sys);
    let out = ellipsoid_minimize_with(
        &obj,
        radius,
        SLACK / 2.0,
        EllipsoidOptions { max_iters: None, stop_below: Some(SLACK) },
    )?;
    if out.value <= SLACK {
        Ok(LpOutcome::Feasible(out.point))
    } else {
        Ok(LpOutcome::Infeasible)
    }
}
