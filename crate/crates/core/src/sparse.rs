//! Sparse-case recovery: an LP search for a halfspace on the influential
//! coordinates that classifies every sample correctly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cube::LabeledSet;
use crate::error::{Error, Result};
use crate::halfspace::{embed, Halfspace};
use crate::solvers::{lp_feasible, LinearConstraintSystem, LpOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SparseOutcome {
    Fit(Halfspace),
    Infeasible,
}

impl SparseOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SparseOutcome::Fit(_))
    }

    /// The fitted halfspace, or the constant +1 when infeasible.
    pub fn into_hypothesis(self, dim: usize) -> Halfspace {
        match self {
            SparseOutcome::Fit(h) => h,
            SparseOutcome::Infeasible => Halfspace::constant(dim, crate::cube::Sign::Pos),
        }
    }
}

/// Search radius 2^{|H|}·(|H|+1), large enough for the integer sparse
/// halfspaces the generator plants.
pub fn sparse_radius(h: usize) -> f64 {
    2f64.powi(h as i32) * (h as f64 + 1.0)
}

/// Margin constraints y·(v_H·x_H + τ) ≥ 1 over (v_H, τ); duplicate rows
/// are dropped.
pub fn sparse_constraints(head: &[usize], s: &LabeledSet) -> Result<LinearConstraintSystem> {
    if let Some(&i) = head.iter().find(|&&i| i >= s.dim()) {
        return Err(Error::IndexOutOfRange { index: i, dim: s.dim() });
    }
    let mut seen = BTreeSet::new();
    let mut sys = LinearConstraintSystem::new(head.len() + 1);
    for smp in s.iter() {
        let y = smp.y.to_f64();
        let mut a: Vec<f64> = head.iter().map(|&i| y * smp.x.value(i)).collect();
        a.push(y);
        let key: Vec<i8> = a.iter().map(|&v| v as i8).collect();
        if seen.insert(key) {
            sys.push(a, 1.0)?;
        }
    }
    Ok(sys)
}

pub fn fit_sparse(head: &[usize], s2: &LabeledSet) -> Result<SparseOutcome> {
    if head.is_empty() {
        return Err(Error::Empty("head index set"));
    }
    if s2.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let sys = sparse_constraints(head, s2)?;
    match lp_feasible(&sys, sparse_radius(head.len()))? {
        LpOutcome::Infeasible => Ok(SparseOutcome::Infeasible),
        LpOutcome::Feasible(mut w) => {
            let tau = w.pop().expect("bias variable");
            let h = Halfspace::or_constant(embed(&w, head, s2.dim())?, tau)?;
            let wrong = s2.iter().filter(|s| h.eval(&s.x) != s.y).count();
            if wrong > 0 {
                return Err(Error::Verification(wrong));
            }
            Ok(SparseOutcome::Fit(h))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{CubePoint, LabeledSample, Provenance, Sign};
    use crate::rng::SeededRng;
    use crate::synth::{label_with, planted_sparse_halfspace, sample_uniform};

    #[test]
    fn planted_five_sparse() {
        let mut rng = SeededRng::new(1);
        let target = planted_sparse_halfspace(50, 5, &mut rng).unwrap();
        let head: Vec<usize> = (0..50).filter(|&i| target.weights()[i] != 0.0).collect();
        let s2 = label_with(&target, sample_uniform(50, 500, &mut rng).unwrap()).unwrap();
        let out = fit_sparse(&head, &s2).unwrap();
        let SparseOutcome::Fit(h) = out else { panic!("infeasible") };
        assert!(s2.iter().all(|s| h.eval(&s.x) == s.y));
        assert!((0..50).all(|i| head.contains(&i) || h.weights()[i] == 0.0));
    }

    #[test]
    fn contradictory_duplicates() {
        let x = CubePoint::from_ints(&[1, -1, 1]).unwrap();
        let s = LabeledSet::new(
            3,
            vec![
                LabeledSample { x: x.clone(), y: Sign::Pos },
                LabeledSample { x, y: Sign::Neg },
            ],
            Provenance::Clean,
        )
        .unwrap();
        assert_eq!(fit_sparse(&[0, 1], &s).unwrap(), SparseOutcome::Infeasible);
    }

    #[test]
    fn all_positive_labels() {
        let mut rng = SeededRng::new(2);
        let s = label_with(&Halfspace::constant(8, Sign::Pos), sample_uniform(8, 100, &mut rng).unwrap()).unwrap();
        let h = fit_sparse(&[2, 5], &s).unwrap().into_hypothesis(8);
        assert!(s.iter().all(|x| h.eval(&x.x) == Sign::Pos));
    }

    #[test]
    fn rejects_empty_inputs() {
        let mut rng = SeededRng::new(3);
        let s = label_with(&Halfspace::majority(3), sample_uniform(3, 10, &mut rng).unwrap()).unwrap();
        assert!(fit_sparse(&[], &s).is_err());
        let empty = LabeledSet::new(3, vec![], Provenance::Clean).unwrap();
        assert!(fit_sparse(&[0], &empty).is_err());
    }

    #[test]
    fn non_separable_on_head_is_infeasible() {
        // Parity of two coordinates is not a halfspace.
        let pts: Vec<CubePoint> = crate::cube::enumerate_cube(2).collect();
        let samples = pts
            .into_iter()
            .map(|x| {
                let y = if x.get(0) == x.get(1) { Sign::Pos } else { Sign::Neg };
                LabeledSample { x, y }
            })
            .collect();
        let s = LabeledSet::new(2, samples, Provenance::Clean).unwrap();
        assert_eq!(fit_sparse(&[0, 1], &s).unwrap(), SparseOutcome::Infeasible);
    }
}
