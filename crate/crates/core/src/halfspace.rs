//! Halfspaces sign(v·x + τ) and the vector helpers shared by every stage.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cube::{CubePoint, LabeledSet, Sign};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawHalfspace {
    weights: Vec<f64>,
    bias: f64,
}

/// `sign(v·x + τ)`. Weights are finite and not all zero together with the bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawHalfspace", into = "RawHalfspace")]
pub struct Halfspace {
    weights: Vec<f64>,
    bias: f64,
    /// Packed +1 positions when every weight is ±1 (popcount fast path).
    unit_mask: Option<Vec<u64>>,
}

impl PartialEq for Halfspace {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights && self.bias == other.bias
    }
}

impl TryFrom<RawHalfspace> for Halfspace {
    type Error = Error;
    fn try_from(raw: RawHalfspace) -> Result<Self> {
        Halfspace::new(raw.weights, raw.bias)
    }
}

impl From<Halfspace> for RawHalfspace {
    fn from(h: Halfspace) -> Self {
        RawHalfspace {
            weights: h.weights,
            bias: h.bias,
        }
    }
}

impl Halfspace {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Halfspace> {
        if weights.is_empty() {
            return Err(Error::Empty("halfspace weights"));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite halfspace parameter".into()));
        }
        if bias == 0.0 && weights.iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateHalfspace);
        }
        let unit_mask = if weights.iter().all(|&w| w == 1.0 || w == -1.0) {
            let signs: Vec<Sign> = weights.iter().map(|&w| Sign::of(w)).collect();
            Some(CubePoint::from_signs(&signs).words().to_vec())
        } else {
            None
        };
        Ok(Halfspace {
            weights,
            bias,
            unit_mask,
        })
    }

    /// Like [`Halfspace::new`], but maps the all-zero case to the constant +1
    /// hypothesis, which has identical predictions under sign(0) = +1.
    pub fn or_constant(weights: Vec<f64>, bias: f64) -> Result<Halfspace> {
        let d = weights.len();
        match Halfspace::new(weights, bias) {
            Err(Error::DegenerateHalfspace) => Ok(Halfspace::constant(d, Sign::Pos)),
            other => other,
        }
    }

    /// Constant hypothesis ±1 in dimension `dim`.
    pub fn constant(dim: usize, value: Sign) -> Halfspace {
        Halfspace::new(vec![0.0; dim], value.to_f64()).expect("bias is nonzero")
    }

    /// The dictator sign(x_i).
    pub fn dictator(dim: usize, i: usize) -> Halfspace {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        Halfspace::new(w, 0.0).expect("nonzero weight")
    }

    /// Majority over all `dim` coordinates.
    pub fn majority(dim: usize) -> Halfspace {
        Halfspace::new(vec![1.0; dim], 0.0).expect("nonzero weights")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn is_constant(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn negate(&self) -> Halfspace {
        Halfspace::new(self.weights.iter().map(|w| -w).collect(), -self.bias)
            .expect("negation preserves validity")
    }

    pub fn scaled(&self, lambda: f64) -> Result<Halfspace> {
        Halfspace::new(
            self.weights.iter().map(|w| lambda * w).collect(),
            lambda * self.bias,
        )
    }

    /// v·x + τ without a dimension check.
    #[inline]
    pub fn margin(&self, x: &CubePoint) -> f64 {
        match &self.unit_mask {
            Some(mask) => {
                let disagree: u32 = x
                    .words()
                    .iter()
                    .zip(mask)
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum();
                (self.dim() as f64 - 2.0 * disagree as f64) + self.bias
            }
            None => x.dot(&self.weights) + self.bias,
        }
    }

    #[inline]
    pub fn eval(&self, x: &CubePoint) -> Sign {
        Sign::of(self.margin(x))
    }

    /// sign(v·x + τ) with sign(0) = +1.
    pub fn predict(&self, x: &CubePoint) -> Result<Sign> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.eval(x))
    }

    /// Text form: one weight per line, then `tau=<bias>`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for w in &self.weights {
            writeln!(s, "{w:?}").unwrap();
        }
        writeln!(s, "tau={:?}", self.bias).unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Halfspace> {
        let mut weights = Vec::new();
        let mut bias = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if bias.is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "content after tau line".into(),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: format!("bad number `{s}`"),
                })
            };
            match line.strip_prefix("tau=") {
                Some(rest) => bias = Some(parse(rest)?),
                None => weights.push(parse(line)?),
            }
        }
        let bias = bias.ok_or(Error::Parse {
            line: 0,
            msg: "missing tau line".into(),
        })?;
        Halfspace::new(weights, bias)
    }
}

/// Fraction of samples with `h(x) ≠ y`.
pub fn empirical_error(h: &Halfspace, set: &LabeledSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    if set.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: set.dim(),
        });
    }
    let wrong = set.iter().filter(|s| h.eval(&s.x) != s.y).count();
    Ok(wrong as f64 / set.len() as f64)
}

/// Euclidean norm; rescales when squaring would overflow or underflow.
pub fn norm2(v: &[f64]) -> f64 {
    let plain = v.iter().map(|x| x * x).sum::<f64>();
    if plain.is_finite() && plain > 1e-280 {
        return plain.sqrt();
    }
    let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ‖v‖₄² / ‖v‖₂², scale-free; small values mean no coordinate dominates.
pub fn regularity_ratio(v: &[f64]) -> Result<f64> {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    // Normalize first so fourth powers cannot overflow or underflow.
    let (mut s2, mut s4) = (0.0, 0.0);
    for x in v {
        let t = (x / scale).powi(2);
        s2 += t;
        s4 += t * t;
    }
    Ok(s4.sqrt() / s2)
}

/// (v_i)_{i∈H}, in the order of `idx`.
pub fn restrict(v: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
    idx.iter()
        .map(|&i| {
            v.get(i).copied().ok_or(Error::IndexOutOfRange {
                index: i,
                dim: v.len(),
            })
        })
        .collect()
}

/// Places `u` on `idx` inside a zero vector of length `dim`.
pub fn embed(u: &[f64], idx: &[usize], dim: usize) -> Result<Vec<f64>> {
    if u.len() != idx.len() {
        return Err(Error::DimensionMismatch {
            expected: idx.len(),
            got: u.len(),
        });
    }
    let mut out = vec![0.0; dim];
    for (&i, &val) in idx.iter().zip(u) {
        if i >= dim {
            return Err(Error::IndexOutOfRange { index: i, dim });
        }
        out[i] = val;
    }
    Ok(out)
}
