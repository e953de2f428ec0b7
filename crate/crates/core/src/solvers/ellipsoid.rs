use nalgebra::DMatrix;

use super::ConvexObjective;
use crate::error::{Error, Result};
use crate::halfspace::norm2;

/// {x : (x−c)ᵀ(s²·Â)⁻¹(x−c) ≤ 1}. The shape is kept as a scale factor s
/// times a matrix normalized to unit max diagonal, so radii near f64::MAX
/// stay representable.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    n: usize,
    center: Vec<f64>,
    shape: Vec<f64>,
    scale: f64,
    rerounds: usize,
}

/// Below this value of ĝᵀÂĝ the ellipsoid is re-rounded to a ball.
const ROUNDING_FLOOR: f64 = 1e-22;

impl Ellipsoid {
    /// The ball of the given radius around the origin.
    pub fn ball(n: usize, radius: f64) -> Ellipsoid {
        let mut shape = vec![0.0; n * n];
        for i in 0..n {
            shape[i * n + i] = 1.0;
        }
        Ellipsoid { n, center: vec![0.0; n], shape, scale: radius, rerounds: 0 }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// √(gᵀ P g), the support width of the ellipsoid in direction g.
    pub fn width(&self, g: &[f64]) -> f64 {
        self.scale * self.quad(g).max(0.0).sqrt()
    }

    fn quad(&self, g: &[f64]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for i in 0..n {
            let row = &self.shape[i * n..(i + 1) * n];
            total += g[i] * row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    /// Keeps the half {x : g·(x − c) ≤ 0} and replaces the ellipsoid by the
    /// minimum-volume ellipsoid containing it.
    pub fn cut(&mut self, g: &[f64], iteration: usize) -> Result<()> {
        let n = self.n;
        let gnorm = norm2(g);
        if !gnorm.is_finite() || gnorm == 0.0 {
            return Err(Error::NumericalCollapse { iteration });
        }
        if n == 1 {
            let dir = if g[0] > 0.0 { 1.0 } else { -1.0 };
            self.center[0] -= dir * self.scale / 2.0;
            self.scale /= 2.0;
            return Ok(());
        }
        let gs: Vec<f64> = g.iter().map(|x| x / gnorm).collect();
        let mut ag = vec![0.0; n];
        for i in 0..n {
            ag[i] = self.shape[i * n..(i + 1) * n].iter().zip(&gs).map(|(a, b)| a * b).sum();
        }
        let mut gag: f64 = ag.iter().zip(&gs).map(|(a, b)| a * b).sum();
        if gag < ROUNDING_FLOOR && gag.is_finite() {
            self.reround();
            ag.copy_from_slice(&gs);
            gag = 1.0;
        }
        if !(gag > 1e-30) || !gag.is_finite() {
            return Err(Error::NumericalCollapse { iteration });
        }
        let root = gag.sqrt();
        let b: Vec<f64> = ag.iter().map(|x| x / root).collect();
        let nf = n as f64;
        for i in 0..n {
            self.center[i] -= self.scale * b[i] / (nf + 1.0);
        }
        let factor = nf * nf / (nf * nf - 1.0);
        let coef = 2.0 / (nf + 1.0);
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let v = factor * (0.5 * (self.shape[i * n + j] + self.shape[j * n + i]) - coef * b[i] * b[j]);
                self.shape[i * n + j] = v;
                self.shape[j * n + i] = v;
            }
            max_diag = max_diag.max(self.shape[i * n + i]);
        }
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            return Err(Error::NumericalCollapse { iteration });
        }
        for a in &mut self.shape {
            *a /= max_diag;
        }
        self.scale *= max_diag.sqrt();
        if self.center.iter().any(|c| !c.is_finite()) || !self.scale.is_finite() {
            return Err(Error::NumericalCollapse { iteration });
        }
        Ok(())
    }

    /// Replaces a badly conditioned ellipsoid by the enclosing ball
    /// around the same center (radius s·√tr Â bounds every semi-axis).
    fn reround(&mut self) {
        let n = self.n;
        let trace: f64 = (0..n).map(|i| self.shape[i * n + i]).sum();
        self.scale *= trace.sqrt();
        self.shape.iter_mut().for_each(|a| *a = 0.0);
        for i in 0..n {
            self.shape[i * n + i] = 1.0;
        }
        self.rerounds += 1;
    }

    pub fn rerounds(&self) -> usize {
        self.rerounds
    }

    /// log det(P)/2, i.e. log volume up to the unit-ball constant.
    pub fn log_volume(&self) -> f64 {
        let n = self.n;
        let m = DMatrix::from_row_slice(n, n, &self.shape);
        let half_logdet = match m.cholesky() {
            Some(ch) => ch.l().diagonal().iter().map(|x| x.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        };
        n as f64 * self.scale.ln() + half_logdet
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EllipsoidOptions {
    /// Replaces the default iteration budget when set.
    pub max_iters: Option<usize>,
    /// Stop as soon as a ball point with f ≤ this value is found.
    pub stop_below: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Certified lower bound on min over the ball.
    pub lower_bound: f64,
    pub iterations: usize,
    pub budget: usize,
    /// Steps where the subgradient inequality failed between successive
    /// queries; nonzero means the objective is not convex.
    pub convexity_violations: usize,
}

/// ⌈2(n+1)² ln(R·L/tol)⌉ + n².
pub fn iteration_budget(n: usize, radius: f64, lipschitz: f64, tol: f64) -> usize {
    let nf = n as f64;
    let ratio = (radius.ln() + lipschitz.max(f64::MIN_POSITIVE).ln() - tol.ln()).max(0.0);
    (2.0 * (nf + 1.0).powi(2) * ratio).ceil() as usize + n * n
}

pub fn ellipsoid_minimize<F: ConvexObjective + ?Sized>(f: &F, radius: f64, tol: f64) -> Result<EllipsoidOutcome> {
    ellipsoid_minimize_with(f, radius, tol, EllipsoidOptions::default())
}

/// Minimizes f over ‖w‖₂ ≤ radius. Returns once the certified gap is at
/// most `tol` or the budget is spent.
pub fn ellipsoid_minimize_with<F: ConvexObjective + ?Sized>(
    f: &F,
    radius: f64,
    tol: f64,
    opts: EllipsoidOptions,
) -> Result<EllipsoidOutcome> {
    let n = f.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("objective has dimension 0".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter("radius must be positive and finite".into()));
    }
    let budget = opts
        .max_iters
        .unwrap_or_else(|| iteration_budget(n, radius, f.lipschitz(), tol))
        .max(1);
    let mut e = Ellipsoid::ball(n, radius);
    let mut grad = vec![0.0; n];
    let mut best_point = vec![0.0; n];
    let mut best_value = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut prev: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    let mut iterations = 0;

    while iterations < budget {
        iterations += 1;
        let c = e.center().to_vec();
        let cn = norm2(&c);
        if cn > radius {
            let g: Vec<f64> = c.iter().map(|x| x / cn).collect();
            e.cut(&g, iterations)?;
            continue;
        }
        let value = f.eval(&c, &mut grad);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericalCollapse { iteration: iterations });
        }
        if let Some((pw, pv, pg)) = &prev {
            let lin: f64 = pv + pg.iter().zip(c.iter().zip(pw)).map(|(g, (a, b))| g * (a - b)).sum::<f64>();
            if value < lin - 1e-9 * (1.0 + value.abs().max(pv.abs())) {
                violations += 1;
            }
        }
        prev = Some((c.clone(), value, grad.clone()));
        if value < best_value {
            best_value = value;
            best_point.copy_from_slice(&c);
        }
        if opts.stop_below.is_some_and(|s| best_value <= s) {
            break;
        }
        if grad.iter().all(|&g| g == 0.0) {
            // Zero subgradient at a ball point: global minimizer.
            lb = value;
            break;
        }
        lb = lb.max(value - e.width(&grad));
        if best_value - lb.min(best_value) <= tol {
            break;
        }
        e.cut(&grad, iterations)?;
    }
    if !best_value.is_finite() {
        return Err(Error::NumericalCollapse { iteration: iterations });
    }
    Ok(EllipsoidOutcome {
        point: best_point,
        value: best_value,
        lower_bound: lb.min(best_value),
        iterations,
        budget,
        convexity_violations: violations,
    })
}
