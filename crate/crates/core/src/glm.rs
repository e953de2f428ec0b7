//! Activations, matching losses and the ellipsoid-based GLM learners.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::heavy_rho;
use crate::cube::{LabeledSet, Sign};
use crate::error::{Error, Result};
use crate::halfspace::{dot, norm2};
use crate::solvers::{ellipsoid_minimize, ConvexObjective};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_2: f64 = std::f64::consts::LN_2;
/// √(2/π)
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    /// ψ(z) = E[sign(z + g)], g ~ N(0,1).
    GaussianCdfPsi,
    /// ψ, linearly saturated to sign(z) over ρ−1 < |z| ≤ ρ.
    PsiClipped(f64),
    /// (1 − e^{−t})/(1 + e^{−t}) = tanh(t/2).
    Sigmoid,
    SigmoidClipped(f64),
}

pub fn psi(z: f64) -> f64 {
    libm::erf(z / SQRT_2)
}

fn psi_integral(z: f64) -> f64 {
    z * psi(z) + SQRT_2_OVER_PI * libm::expm1(-z * z / 2.0)
}

fn sigmoid(t: f64) -> f64 {
    (t / 2.0).tanh()
}

/// 2·ln cosh(t/2), written to avoid overflow.
fn sigmoid_integral(t: f64) -> f64 {
    let a = t.abs();
    a + 2.0 * (-a).exp().ln_1p() - 2.0 * LN_2
}

fn clipped(base: fn(f64) -> f64, rho: f64, z: f64) -> f64 {
    let a = z.abs();
    let s = if z >= 0.0 { 1.0 } else { -1.0 };
    if a <= rho - 1.0 {
        base(z)
    } else if a <= rho {
        let p = base(rho - 1.0);
        s * (p + (1.0 - p) * (a - (rho - 1.0)))
    } else {
        s
    }
}

fn clipped_integral(base: fn(f64) -> f64, integral: fn(f64) -> f64, rho: f64, z: f64) -> f64 {
    let a = z.abs();
    if a <= rho - 1.0 {
        return integral(a);
    }
    let p = base(rho - 1.0);
    let head = integral(rho - 1.0);
    if a <= rho {
        let s = a - (rho - 1.0);
        head + p * s + (1.0 - p) * s * s / 2.0
    } else {
        head + p + (1.0 - p) / 2.0 + (a - rho)
    }
}

impl Activation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::PsiClipped(r) | Activation::SigmoidClipped(r) if !(r >= 1.0) || !r.is_finite() => {
                Err(Error::InvalidParameter(format!("clipping radius {r} must be ≥ 1")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Activation::GaussianCdfPsi => psi(z),
            Activation::PsiClipped(rho) => clipped(psi, rho, z),
            Activation::Sigmoid => sigmoid(z),
            Activation::SigmoidClipped(rho) => clipped(sigmoid, rho, z),
        }
    }

    /// A(z) = ∫₀^z a(t) dt in closed form.
    pub fn antiderivative(&self, z: f64) -> f64 {
        match *self {
            Activation::GaussianCdfPsi => psi_integral(z),
            Activation::PsiClipped(rho) => clipped_integral(psi, psi_integral, rho, z),
            Activation::Sigmoid => sigmoid_integral(z),
            Activation::SigmoidClipped(rho) => clipped_integral(sigmoid, sigmoid_integral, rho, z),
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match *self {
            Activation::PsiClipped(r) | Activation::SigmoidClipped(r) => Some(r),
            _ => None,
        }
    }
}

pub fn eval_activation(a: Activation, z: f64) -> f64 {
    a.eval(z)
}

pub fn antiderivative(a: Activation, z: f64) -> f64 {
    a.antiderivative(z)
}

/// ℓ(w; x, y) = A(w·x) − y·(w·x), with subgradient (a(w·x) − y)·x.
pub fn matching_loss(a: Activation, w: &[f64], x: &[f64], y: f64) -> Result<(f64, Vec<f64>)> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: x.len() });
    }
    let z = dot(w, x);
    let r = a.eval(z) - y;
    Ok((a.antiderivative(z) - y * z, x.iter().map(|xi| r * xi).collect()))
}

/// Real-valued features with ±1 labels; identical feature rows are merged
/// into (count, label sum), which leaves the matching loss unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmData {
    dim: usize,
    n: usize,
    rows: Vec<GlmRow>,
}

#[derive(Debug, Clone, PartialEq)]
struct GlmRow {
    x: Vec<f64>,
    count: f64,
    label_sum: f64,
}

impl GlmData {
    pub fn new(dim: usize, xs: &[Vec<f64>], ys: &[f64]) -> Result<GlmData> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidParameter("features and labels differ in length".into()));
        }
        let mut data = GlmData { dim, n: 0, rows: Vec::new() };
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        for (x, &y) in xs.iter().zip(ys) {
            if x.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
            }
            if y != 1.0 && y != -1.0 {
                return Err(Error::InvalidParameter(format!("label {y} is not ±1")));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("features must be finite".into()));
            }
            data.push(&mut index, x.clone(), y);
        }
        Ok(data)
    }

    /// The samples of `set` restricted to the coordinates `idx` (may be empty).
    pub fn from_restricted(set: &LabeledSet, idx: &[usize]) -> Result<GlmData> {
        if let Some(&i) = idx.iter().find(|&&i| i >= set.dim()) {
            return Err(Error::IndexOutOfRange { index: i, dim: set.dim() });
        }
        let mut data = GlmData { dim: idx.len(), n: 0, rows: Vec::new() };
        let mut index = HashMap::new();
        for s in set.iter() {
            data.push(&mut index, s.x.restrict(idx), s.y.to_f64());
        }
        Ok(data)
    }

    pub fn from_set(set: &LabeledSet) -> GlmData {
        let idx: Vec<usize> = (0..set.dim()).collect();
        GlmData::from_restricted(set, &idx).expect("full index set is in range")
    }

    fn push(&mut self, index: &mut HashMap<Vec<u64>, usize>, x: Vec<f64>, y: f64) {
        self.n += 1;
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&r) => {
                self.rows[r].count += 1.0;
                self.rows[r].label_sum += y;
            }
            None => {
                index.insert(key, self.rows.len());
                self.rows.push(GlmRow { x, count: 1.0, label_sum: y });
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn distinct_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn max_norm(&self) -> f64 {
        self.rows.iter().map(|r| norm2(&r.x)).fold(0.0, f64::max)
    }
}

/// Mean matching loss over lifted samples (x, 1).
pub struct MatchingObjective<'a> {
    act: Activation,
    data: &'a GlmData,
    lipschitz: f64,
}

impl<'a> MatchingObjective<'a> {
    pub fn new(act: Activation, data: &'a GlmData) -> Self {
        let r = data.max_norm();
        MatchingObjective { act, data, lipschitz: 2.0 * (r * r + 1.0).sqrt() }
    }

    /// Objective at (v, τ) without the gradient.
    pub fn value(&self, v: &[f64], tau: f64) -> f64 {
        let mut w = v.to_vec();
        w.push(tau);
        let mut g = vec![0.0; w.len()];
        self.eval(&w, &mut g)
    }
}

impl ConvexObjective for MatchingObjective<'_> {
    fn dim(&self) -> usize {
        self.data.dim + 1
    }

    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.data.dim;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for row in &self.data.rows {
            let z = dot(&w[..d], &row.x) + w[d];
            total += row.count * self.act.antiderivative(z) - row.label_sum * z;
            let r = row.count * self.act.eval(z) - row.label_sum;
            for (g, x) in grad[..d].iter_mut().zip(&row.x) {
                *g += r * x;
            }
            grad[d] += r;
        }
        let n = self.data.n as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        total / n
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub surrogate_value: f64,
    pub iterations: usize,
    pub budget: usize,
    /// Number of samples the fit used.
    pub samples: usize,
    pub activation: Activation,
    pub convexity_violations: usize,
}

impl GlmFit {
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.activation.eval(dot(&self.weights, x) + self.bias)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmOptions {
    /// The constant C in ρ.
    pub c_const: f64,
    /// Ellipsoid tolerance; defaults to ε/8.
    pub tol: Option<f64>,
}

impl Default for GlmOptions {
    fn default() -> Self {
        GlmOptions { c_const: 16.0, tol: None }
    }
}

fn fit(act: Activation, eps: f64, w_max: f64, data: &GlmData, opts: &GlmOptions) -> Result<GlmFit> {
    act.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter("epsilon must lie in (0,1)".into()));
    }
    if !(w_max >= 1.0) {
        return Err(Error::InvalidParameter("w_max must be ≥ 1".into()));
    }
    if data.is_empty() {
        return Err(Error::Empty("GLM data"));
    }
    let bound = (data.dim as f64).sqrt();
    let worst = data.max_norm();
    if worst > bound * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::NormViolation { norm: worst, bound });
    }
    let obj = MatchingObjective::new(act, data);
    let tol = opts.tol.unwrap_or(eps / 8.0);
    let out = ellipsoid_minimize(&obj, w_max, tol)?;
    let mut weights = out.point;
    let bias = weights.pop().expect("lifted dimension ≥ 1");
    Ok(GlmFit {
        weights,
        bias,
        surrogate_value: out.value,
        iterations: out.iterations,
        budget: out.budget,
        samples: data.len(),
        activation: act,
        convexity_violations: out.convexity_violations,
    })
}

/// Matching-loss fit with the clipped Gaussian activation, ρ = C + C·log(Δ/ε).
pub fn find_heavy_coefficients(eps: f64, delta: usize, w_max: f64, data: &GlmData, opts: &GlmOptions) -> Result<GlmFit> {
    if data.dim() != delta {
        return Err(Error::DimensionMismatch { expected: delta, got: data.dim() });
    }
    let rho = heavy_rho(eps, delta, opts.c_const);
    fit(Activation::PsiClipped(rho), eps, w_max, data, opts)
}

/// The sigmoid GLM learner with clipped sigmoid, ρ = C·log(d/ε).
pub fn learn_sigmoid_glm(eps: f64, w_max: f64, data: &GlmData, opts: &GlmOptions) -> Result<GlmFit> {
    let d = data.dim().max(1) as f64;
    let rho = (opts.c_const * (d / eps).ln()).max(1.0);
    let mut fit = fit(Activation::SigmoidClipped(rho), eps, w_max, data, opts)?;
    fit.activation = Activation::Sigmoid;
    Ok(fit)
}

/// Õ(d/ε²) sample count used by the sigmoid learner.
pub fn sigmoid_sample_size(d: usize, eps: f64, c: f64) -> f64 {
    let d = d.max(1) as f64;
    c * d / (eps * eps) * (d / eps).ln()
}

/// Labels y = ±1 with E[y] = a(z).
pub fn draw_glm_label(a: Activation, z: f64, u: f64) -> Sign {
    if u < (1.0 + a.eval(z)) / 2.0 {
        Sign::Pos
    } else {
        Sign::Neg
    }
}
