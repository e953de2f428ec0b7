//! Learner parameters: the formula values of the main algorithm and the
//! desk-scale clamps applied to them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper clamps. The formula constants are astronomically conservative, so
/// every size or count is clamped by one of these before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Caps {
    pub cap_k: usize,
    pub cap_samples: usize,
    pub cap_w_max: f64,
    pub max_eps_hv: f64,
    pub cap_hinge_iters: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            cap_k: 64,
            cap_samples: 1_000_000,
            cap_w_max: 1e300,
            max_eps_hv: 0.1,
            cap_hinge_iters: 200_000,
        }
    }
}

/// Explicit values that replace a formula before clamping.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub k: Option<usize>,
    pub eps_hv: Option<f64>,
    pub eps_reg: Option<f64>,
    pub w_max: Option<f64>,
    pub s1: Option<usize>,
    pub s2: Option<usize>,
    pub s3: Option<usize>,
    pub glm_samples: Option<usize>,
    pub hinge_samples: Option<usize>,
    pub hinge_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: f64,
    /// The universal constant C (≥ 1).
    pub c_const: f64,
    pub seed: u64,
    pub caps: Caps,
    pub overrides: Overrides,
    /// Ellipsoid tolerance as a fraction of ε_hv.
    pub glm_tol_fraction: f64,
}

impl LearnerConfig {
    pub fn new(epsilon: f64) -> LearnerConfig {
        LearnerConfig {
            epsilon,
            c_const: 16.0,
            seed: 0,
            caps: Caps::default(),
            overrides: Overrides::default(),
            glm_tol_fraction: 0.125,
        }
    }

    /// Small sizes that run a full pipeline in a few seconds at d ≈ 100.
    pub fn desk(epsilon: f64) -> LearnerConfig {
        let mut cfg = LearnerConfig::new(epsilon);
        cfg.caps = Caps {
            cap_k: 8,
            cap_samples: 1_000_000,
            cap_w_max: 1e6,
            max_eps_hv: 0.1,
            cap_hinge_iters: 1_000,
        };
        cfg.overrides = Overrides {
            s1: Some(20_000),
            s2: Some(2_000),
            s3: Some(4_000),
            glm_samples: Some(20_000),
            hinge_samples: Some(4_000),
            ..Overrides::default()
        };
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0,1)");
        }
        if !(self.c_const >= 1.0) || !self.c_const.is_finite() {
            return bad("C must be ≥ 1");
        }
        if self.caps.cap_k == 0 || self.caps.cap_samples == 0 || self.caps.cap_hinge_iters == 0 {
            return bad("caps must be positive");
        }
        if !(self.caps.cap_w_max >= 1.0) || !self.caps.cap_w_max.is_finite() {
            return bad("cap_w_max must be a finite value ≥ 1");
        }
        if !(self.caps.max_eps_hv > 0.0 && self.caps.max_eps_hv < 1.0) {
            return bad("max_eps_hv must lie in (0,1)");
        }
        if !(self.glm_tol_fraction > 0.0) {
            return bad("glm_tol_fraction must be positive");
        }
        if let Some(e) = self.overrides.eps_hv {
            if !(e > 0.0 && e < 1.0) {
                return bad("eps_hv override must lie in (0,1)");
            }
        }
        if let Some(e) = self.overrides.eps_reg {
            if !(e > 0.0 && e < 1.0) {
                return bad("eps_reg override must lie in (0,1)");
            }
        }
        if let Some(w) = self.overrides.w_max {
            if !(w >= 1.0) || !w.is_finite() {
                return bad("w_max override must be a finite value ≥ 1");
            }
        }
        if self.overrides.k == Some(0) {
            return bad("k must be positive");
        }
        Ok(())
    }

    /// Computes every parameter for dimension `d`, recording formula and
    /// applied values.
    pub fn resolve(&self, d: usize) -> Result<AppliedParams> {
        self.validate()?;
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        let eps = self.epsilon;
        let c = self.c_const;
        let ln_inv_eps = (1.0 / eps).ln();
        let ov = &self.overrides;
        let caps = &self.caps;
        let mut table = BTreeMap::new();

        let k_formula = c.powf(0.1) * ln_inv_eps.powi(16) / eps.powi(8);
        let k = ov
            .k
            .unwrap_or_else(|| ceil_count(k_formula))
            .min(caps.cap_k)
            .min(d)
            .max(1);
        table.insert("k".into(), Param::new(k_formula, k as f64));

        let eta = eps.powi(25) / c;
        table.insert("eta".into(), Param::new(eta, eta));

        let kf = k as f64;
        let eps_hv_formula = c.powf(0.01) * kf.ln().powi(2) / kf.sqrt();
        let eps_hv = ov
            .eps_hv
            .unwrap_or_else(|| eps_hv_formula.clamp(1e-3, caps.max_eps_hv));
        table.insert("eps_hv".into(), Param::new(eps_hv_formula, eps_hv));

        let eps_reg_formula = eps / c.powf(0.01);
        let eps_reg = ov.eps_reg.unwrap_or(eps_reg_formula);
        table.insert("eps_reg".into(), Param::new(eps_reg_formula, eps_reg));

        let df = d as f64;
        // u_max = d·2^{20 d ln d}, evaluated in log space.
        let ln_u_max = df.ln() + 20.0 * df * df.ln() * std::f64::consts::LN_2;
        let u_max = ln_u_max.exp().min(f64::MAX);
        let w_max = ov.w_max.unwrap_or(u_max).min(caps.cap_w_max).max(1.0);
        table.insert("w_max".into(), Param::new(u_max, w_max));

        let size = |formula: f64, over: Option<usize>| -> usize {
            over.unwrap_or_else(|| ceil_count(formula))
                .min(caps.cap_samples)
                .max(1)
        };
        let s1_formula = c * df.ln().sqrt() / (eta * eta);
        let s1 = size(s1_formula, ov.s1);
        table.insert("s1".into(), Param::new(s1_formula, s1 as f64));

        let s2_formula = c.sqrt() * (kf / (eps * eps)) * (kf / eps).ln().powi(2);
        let s2 = size(s2_formula, ov.s2);
        table.insert("s2".into(), Param::new(s2_formula, s2 as f64));

        let s3_formula = c * kf.ln().sqrt() / (eps * eps);
        let s3 = size(s3_formula, ov.s3);
        table.insert("s3".into(), Param::new(s3_formula, s3 as f64));

        let glm_formula = heavy_sample_formula(eps_hv, k, c);
        let glm_samples = size(glm_formula, ov.glm_samples);
        table.insert("glm_samples".into(), Param::new(glm_formula, glm_samples as f64));

        let hinge_formula = (c.ln() + c * (df / eps_reg).ln()).exp().min(f64::MAX);
        let hinge_samples = size(hinge_formula, ov.hinge_samples);
        table.insert("hinge_samples".into(), Param::new(hinge_formula, hinge_samples as f64));

        let iters_formula = 16.0 * df * df / (eps_reg * eps_reg);
        let hinge_iters = ov
            .hinge_iters
            .unwrap_or_else(|| ceil_count(iters_formula))
            .min(caps.cap_hinge_iters)
            .max(1);
        table.insert("hinge_iters".into(), Param::new(iters_formula, hinge_iters as f64));

        let glm_tol = eps_hv * self.glm_tol_fraction;
        table.insert("glm_tol".into(), Param::new(glm_tol, glm_tol));

        let phi_max = c.powf(0.1) / eps_reg.sqrt();
        table.insert("phi_max".into(), Param::new(c / eps_reg.sqrt(), phi_max));

        let band = (1.0 / eps_reg).ln();
        table.insert("band".into(), Param::new(band, band));

        Ok(AppliedParams {
            d,
            k,
            eta,
            eps_hv,
            eps_reg,
            w_max,
            s1,
            s2,
            s3,
            glm_samples,
            hinge_samples,
            hinge_iters,
            glm_tol,
            phi_max,
            c_const: c,
            table,
        })
    }
}

fn ceil_count(x: f64) -> usize {
    if !x.is_finite() || x >= usize::MAX as f64 {
        usize::MAX
    } else {
        x.ceil().max(1.0) as usize
    }
}

/// FindHeavyCoefficients' sample count C·(Δρ²/ε²)·log(Δρ/ε) + C.
pub fn heavy_sample_formula(eps: f64, delta: usize, c: f64) -> f64 {
    let rho = heavy_rho(eps, delta, c);
    let df = delta.max(1) as f64;
    c * (df * rho * rho / (eps * eps)) * (df * rho / eps).ln() + c
}

/// ρ = C + C·log(Δ/ε); Δ = 0 is treated as Δ = 1.
pub fn heavy_rho(eps: f64, delta: usize, c: f64) -> f64 {
    c + c * (delta.max(1) as f64 / eps).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub formula: f64,
    pub applied: f64,
}

impl Param {
    fn new(formula: f64, applied: f64) -> Param {
        Param { formula, applied }
    }
}

/// Post-clamp values used by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct AppliedParams {
    pub d: usize,
    pub k: usize,
    pub eta: f64,
    pub eps_hv: f64,
    pub eps_reg: f64,
    pub w_max: f64,
    pub s1: usize,
    pub s2: usize,
    pub s3: usize,
    pub glm_samples: usize,
    pub hinge_samples: usize,
    pub hinge_iters: usize,
    pub glm_tol: f64,
    pub phi_max: f64,
    pub c_const: f64,
    pub table: BTreeMap<String, Param>,
}
