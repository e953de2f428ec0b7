use super::ConvexObjective;
use crate::error::{Error, Result};
use crate::halfspace::norm2;

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Radial projection onto the ball of the given radius.
pub fn project_ball(w: &mut [f64], radius: f64) {
    let n = norm2(w);
    if n > radius {
        let s = radius / n;
        w.iter_mut().for_each(|x| *x *= s);
    }
}

/// w_{t+1} = Π(w_t − (R/(L√t))·g_t) from w_1 = 0; returns the best iterate.
pub fn projected_subgradient<F, P>(f: &F, project: P, radius: f64, iters: usize) -> Result<SubgradientOutcome>
where
    F: ConvexObjective + ?Sized,
    P: Fn(&mut [f64]),
{
    if iters == 0 {
        return Err(Error::InvalidParameter("iters must be positive".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let n = f.dim();
    let lip = f.lipschitz();
    let mut w = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut best = w.clone();
    let mut best_value = f64::INFINITY;
    let mut iterations = 0;
    for t in 1..=iters {
        iterations = t;
        let value = f.eval(&w, &mut grad);
        if value < best_value {
            best_value = value;
            best.copy_from_slice(&w);
        }
        if grad.iter().all(|&g| g == 0.0) || !(lip > 0.0) {
            break;
        }
        let step = radius / (lip * (t as f64).sqrt());
        for (x, g) in w.iter_mut().zip(&grad) {
            *x -= step * g;
        }
        project(&mut w);
    }
    if !best_value.is_finite() {
        return Err(Error::NumericalCollapse { iteration: iterations });
    }
    Ok(SubgradientOutcome { point: best, value: best_value, iterations })
}
