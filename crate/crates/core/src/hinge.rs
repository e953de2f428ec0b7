//! Regular-tail recovery: filtered hinge minimization with the head
//! coefficients and bias held fixed.

use serde::{Deserialize, Serialize};

use crate::cube::{CubePoint, LabeledSample, LabeledSet, Sign};
use crate::error::{Error, Result};
use crate::halfspace::Halfspace;
use crate::packed::{ByteAccum, ByteDot};
use crate::rng::SeededRng;
use crate::solvers::{project_ball, projected_subgradient, ConvexObjective};
use crate::synth::SampleSource;

/// Head indices H, head weights supported on H, bias and margin ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailProblem {
    pub d: usize,
    pub head: Vec<usize>,
    pub v_head: Vec<f64>,
    pub tau: f64,
    pub eps: f64,
}

impl TailProblem {
    pub fn new(d: usize, head: Vec<usize>, v_head: Vec<f64>, tau: f64, eps: f64) -> Result<TailProblem> {
        if v_head.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: v_head.len() });
        }
        if let Some(&i) = head.iter().find(|&&i| i >= d) {
            return Err(Error::IndexOutOfRange { index: i, dim: d });
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter("epsilon must lie in (0,1)".into()));
        }
        if !tau.is_finite() || v_head.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("head weights and bias must be finite".into()));
        }
        let mut in_head = vec![false; d];
        for &i in &head {
            in_head[i] = true;
        }
        if (0..d).any(|i| !in_head[i] && v_head[i] != 0.0) {
            return Err(Error::InvalidParameter("v_head must be supported on H".into()));
        }
        Ok(TailProblem { d, head, v_head, tau, eps })
    }

    /// H = ∅, v_head = 0.
    pub fn empty_head(d: usize, tau: f64, eps: f64) -> Result<TailProblem> {
        TailProblem::new(d, Vec::new(), vec![0.0; d], tau, eps)
    }

    /// φ(x) = v_head·x + τ.
    pub fn phi(&self, x: &CubePoint) -> f64 {
        self.head.iter().map(|&i| self.v_head[i] * x.value(i)).sum::<f64>() + self.tau
    }

    /// ln(1/ε).
    pub fn band(&self) -> f64 {
        (1.0 / self.eps).ln()
    }

    fn head_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.d];
        for &i in &self.head {
            m[i] = true;
        }
        m
    }

    /// Zeroes the H coordinates, then clips to the unit ball.
    pub fn project(&self, v: &mut [f64]) {
        for &i in &self.head {
            v[i] = 0.0;
        }
        project_ball(v, 1.0);
    }
}

/// Samples with |φ(x)| ≤ ln(1/ε).
pub fn filter_band(p: &TailProblem, s: &LabeledSet) -> Result<LabeledSet> {
    filter_within(p, s, p.band())
}

pub(crate) fn filter_within(p: &TailProblem, s: &LabeledSet, limit: f64) -> Result<LabeledSet> {
    if s.dim() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: s.dim() });
    }
    Ok(s.filtered(|smp| p.phi(&smp.x).abs() <= limit))
}

/// Σ ReLU(ε − y(φ(x) + v·x)) over the given samples, multiplied by `scale`
/// (1 for the label-noise loss, 1/ε for the contamination loss).
pub(crate) struct HingeObjective<'a> {
    samples: &'a [LabeledSample],
    phi: Vec<f64>,
    eps: f64,
    scale: f64,
    head: Vec<bool>,
    mean: bool,
}

impl<'a> HingeObjective<'a> {
    pub fn new(p: &TailProblem, samples: &'a [LabeledSample], scale: f64, mean: bool) -> Self {
        HingeObjective {
            samples,
            phi: samples.iter().map(|s| p.phi(&s.x)).collect(),
            eps: p.eps,
            scale,
            head: p.head_mask(),
            mean,
        }
    }
}

impl ConvexObjective for HingeObjective<'_> {
    fn dim(&self) -> usize {
        self.head.len()
    }

    fn eval(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let table = ByteDot::new(v);
        let mut acc = ByteAccum::new(v.len());
        let mut total = 0.0;
        for (s, &phi) in self.samples.iter().zip(&self.phi) {
            let y = s.y.to_f64();
            let gap = self.eps - y * (phi + table.dot(&s.x));
            if gap > 0.0 {
                total += gap;
                acc.add(&s.x, -y);
            }
        }
        let g = acc.finish();
        let norm = if self.mean { self.samples.len().max(1) as f64 } else { 1.0 };
        for (i, (out, gi)) in grad.iter_mut().zip(g).enumerate() {
            *out = if self.head[i] { 0.0 } else { self.scale * gi / norm };
        }
        self.scale * total / norm
    }

    fn lipschitz(&self) -> f64 {
        let per = self.scale * (self.head.len() as f64).sqrt();
        if self.mean {
            per
        } else {
            per * self.samples.len() as f64
        }
    }
}

/// Σ ReLU(ε − y(φ(x) + v·x)) over `filtered` and its subgradient with the
/// H coordinates zeroed.
pub fn hinge_objective(p: &TailProblem, v: &[f64], filtered: &LabeledSet) -> Result<(f64, Vec<f64>)> {
    if v.len() != p.d || filtered.dim() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: v.len().min(filtered.dim()) });
    }
    let obj = HingeObjective::new(p, filtered.samples(), 1.0, false);
    let mut g = vec![0.0; p.d];
    let value = obj.eval(v, &mut g);
    Ok((value, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub hypothesis: Halfspace,
    pub tail: Vec<f64>,
    pub filtered: usize,
    pub drawn: usize,
    /// Mean surrogate value on the filtered set.
    pub objective: f64,
    pub iterations: usize,
    /// The filtered set was empty and only the head was returned.
    pub empty_band: bool,
}

pub(crate) fn solve_tail(p: &TailProblem, filtered: &[LabeledSample], drawn: usize, scale: f64, iters: usize) -> Result<TailFit> {
    if filtered.is_empty() {
        return Ok(TailFit {
            hypothesis: Halfspace::or_constant(p.v_head.clone(), p.tau)?,
            tail: vec![0.0; p.d],
            filtered: 0,
            drawn,
            objective: 0.0,
            iterations: 0,
            empty_band: true,
        });
    }
    let obj = HingeObjective::new(p, filtered, scale, true);
    let out = projected_subgradient(&obj, |v| p.project(v), 1.0, iters)?;
    let mut tail = out.point;
    p.project(&mut tail);
    let weights: Vec<f64> = tail.iter().zip(&p.v_head).map(|(a, b)| a + b).collect();
    Ok(TailFit {
        hypothesis: Halfspace::or_constant(weights, p.tau)?,
        tail,
        filtered: filtered.len(),
        drawn,
        objective: out.value,
        iterations: out.iterations,
        empty_band: false,
    })
}

/// Filters `data` to the band and minimizes the hinge objective over
/// {‖v‖ ≤ 1, v_H = 0}; returns v_head + v̂_tail with bias τ.
pub fn find_regular_coefficients(p: &TailProblem, data: &LabeledSet, iters: usize) -> Result<TailFit> {
    let filtered = filter_band(p, data)?;
    solve_tail(p, filtered.samples(), data.len(), 1.0, iters)
}

/// Draws `n` samples from `source` and runs [`find_regular_coefficients`].
pub fn find_regular_coefficients_from(
    p: &TailProblem,
    source: &dyn SampleSource,
    n: usize,
    iters: usize,
    rng: &mut SeededRng,
) -> Result<TailFit> {
    let data = source.draw(n, rng)?;
    find_regular_coefficients(p, &data, iters)
}

/// Hinge iteration count ⌈16 d²/ε²⌉ before clamping.
pub fn hinge_iterations(d: usize, eps: f64, cap: usize) -> usize {
    let raw = 16.0 * (d * d) as f64 / (eps * eps);
    if raw >= cap as f64 {
        cap
    } else {
        raw.ceil().max(1.0) as usize
    }
}

/// λ(z) = ReLU(ε − z)/ε, the per-sample surrogate that dominates the 0-1 loss.
pub fn lambda(eps: f64, z: f64) -> f64 {
    (eps - z).max(0.0) / eps
}

pub fn mistake(sign: Sign, y: Sign) -> f64 {
    if sign == y { 0.0 } else { 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::enumerate_cube;
    use crate::halfspace::norm2;
    use crate::synth::{label_with, random_regular_halfspace, sample_uniform, NoiseSpec, PlantedSource};

    #[test]
    fn band_examples() {
        let mut rng = SeededRng::new(1);
        let set = label_with(&Halfspace::majority(10), sample_uniform(10, 500, &mut rng).unwrap()).unwrap();
        let p = TailProblem::empty_head(10, 0.0, 0.1).unwrap();
        assert_eq!(filter_band(&p, &set).unwrap().len(), 500);
        let p = TailProblem::empty_head(10, 2.0 * 10f64.ln(), 0.1).unwrap();
        assert_eq!(filter_band(&p, &set).unwrap().len(), 0);
    }

    #[test]
    fn band_fraction_matches_head_cube_mass() {
        let mut rng = SeededRng::new(2);
        let head = vec![1, 4, 7];
        let mut v = vec![0.0; 10];
        v[1] = 1.5;
        v[4] = -0.7;
        v[7] = 0.4;
        let p = TailProblem::new(10, head.clone(), v.clone(), 0.3, 0.2).unwrap();
        let limit = p.band();
        let exact = enumerate_cube(3)
            .filter(|x| (1.5 * x.value(0) - 0.7 * x.value(1) + 0.4 * x.value(2) + 0.3).abs() <= limit)
            .count() as f64
            / 8.0;
        let n = 200_000;
        let set = label_with(&Halfspace::majority(10), sample_uniform(10, n, &mut rng).unwrap()).unwrap();
        let frac = filter_band(&p, &set).unwrap().len() as f64 / n as f64;
        assert!((frac - exact).abs() < 0.005, "{frac} vs {exact}");
        // And on the full cube the fraction is exact.
        let cube = label_with(&Halfspace::majority(10), enumerate_cube(10).collect()).unwrap();
        assert_eq!(filter_band(&p, &cube).unwrap().len() as f64 / 1024.0, exact);
    }

    #[test]
    fn objective_examples() {
        let mut rng = SeededRng::new(3);
        let set = label_with(&Halfspace::dictator(6, 0), sample_uniform(6, 40, &mut rng).unwrap()).unwrap();
        let eps = 0.1;
        let p = TailProblem::empty_head(6, 0.0, eps).unwrap();
        let (v, _) = hinge_objective(&p, &[0.0; 6], &set).unwrap();
        assert!((v - 40.0 * eps).abs() < 1e-12);
        // Margin exactly ε everywhere: y·(ε x₀) = ε.
        let (v, g) = hinge_objective(&p, &[eps, 0.0, 0.0, 0.0, 0.0, 0.0], &set).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g, vec![0.0; 6]);
    }

    #[test]
    fn objective_is_convex_and_head_gradient_zero() {
        let mut rng = SeededRng::new(4);
        let mut vh = vec![0.0; 12];
        vh[2] = 0.8;
        let p = TailProblem::new(12, vec![2], vh, 0.1, 0.2).unwrap();
        let set = label_with(&Halfspace::majority(12), sample_uniform(12, 300, &mut rng).unwrap()).unwrap();
        for _ in 0..100 {
            let a: Vec<f64> = (0..12).map(|_| rng.gaussian() * 0.3).collect();
            let b: Vec<f64> = (0..12).map(|_| rng.gaussian() * 0.3).collect();
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
            let f = |v: &[f64]| hinge_objective(&p, v, &set).unwrap();
            assert!(f(&m).0 <= (f(&a).0 + f(&b).0) / 2.0 + 1e-9);
            assert_eq!(f(&a).1[2], 0.0);
        }
    }

    #[test]
    fn surrogate_dominates_zero_one_loss() {
        let mut rng = SeededRng::new(5);
        let eps = 0.2;
        for _ in 0..2000 {
            let z = rng.gaussian();
            let y = if rng.bernoulli(0.5) { Sign::Pos } else { Sign::Neg };
            assert!(mistake(Sign::of(z), y) <= lambda(eps, y.to_f64() * z));
        }
    }

    fn fresh_error(h: &Halfspace, target: &Halfspace, rng: &mut SeededRng) -> f64 {
        let pts = sample_uniform(target.dim(), 100_000, rng).unwrap();
        pts.iter().filter(|x| h.eval(x) != target.eval(x)).count() as f64 / pts.len() as f64
    }

    #[test]
    fn recovers_regular_target() {
        let mut rng = SeededRng::new(6);
        let d = 100;
        let mut target = random_regular_halfspace(d, &mut rng).unwrap();
        target = Halfspace::new(target.weights().to_vec(), 0.0).unwrap();
        let eps = 0.1;
        let p = TailProblem::empty_head(d, 0.0, eps).unwrap();
        let src = PlantedSource::clean(target.clone());
        let fit = find_regular_coefficients_from(&p, &src, 4000, 1000, &mut rng).unwrap();
        assert!(norm2(&fit.tail) <= 1.0 + 1e-9);
        let err = fresh_error(&fit.hypothesis, &target, &mut rng);
        assert!(err <= 3.0 * eps, "{err}");

        let noisy = PlantedSource::new(target.clone(), NoiseSpec::RandomFlip(0.01)).unwrap();
        let fit = find_regular_coefficients_from(&p, &noisy, 4000, 1000, &mut rng).unwrap();
        let err = fresh_error(&fit.hypothesis, &target, &mut rng);
        assert!(err <= 0.2, "{err}");
    }

    #[test]
    fn head_only_target() {
        let mut rng = SeededRng::new(7);
        let d = 30;
        let mut vh = vec![0.0; d];
        vh[3] = 2.0;
        vh[8] = -1.0;
        let target = Halfspace::new(vh.clone(), 0.5).unwrap();
        let p = TailProblem::new(d, vec![3, 8], vh, 0.5, 0.1).unwrap();
        let fit = find_regular_coefficients_from(&p, &PlantedSource::clean(target.clone()), 2000, 500, &mut rng).unwrap();
        assert!(fit.tail.iter().enumerate().all(|(i, &v)| i != 3 && i != 8 || v == 0.0));
        assert!(fresh_error(&fit.hypothesis, &target, &mut rng) <= 0.1);
    }

    #[test]
    fn empty_band_falls_back_to_head() {
        let mut rng = SeededRng::new(8);
        let p = TailProblem::empty_head(5, 10.0, 0.1).unwrap();
        let set = label_with(&Halfspace::majority(5), sample_uniform(5, 50, &mut rng).unwrap()).unwrap();
        let fit = find_regular_coefficients(&p, &set, 100).unwrap();
        assert!(fit.empty_band);
        assert!(fit.hypothesis.is_constant());
    }

    #[test]
    fn problem_validation() {
        assert!(TailProblem::new(3, vec![0], vec![0.0, 1.0, 0.0], 0.0, 0.1).is_err());
        assert!(TailProblem::new(3, vec![5], vec![0.0; 3], 0.0, 0.1).is_err());
        assert!(TailProblem::empty_head(3, 0.0, 1.5).is_err());
        assert_eq!(hinge_iterations(10, 0.1, 200_000), 160_000);
        assert_eq!(hinge_iterations(100, 0.1, 200_000), 200_000);
    }
}
