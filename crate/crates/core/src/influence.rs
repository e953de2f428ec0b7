//! Chow parameters, influences, and the weight-swap machinery used to relate
//! estimated influences to the true top weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{CubePoint, LabeledSet, Sign};
use crate::error::{Error, Result};
use crate::halfspace::Halfspace;

/// Largest dimension the brute-force routines will enumerate.
pub const MAX_ENUM_DIM: usize = 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChowEstimate {
    /// Î_i = E[y·x_i].
    pub values: Vec<f64>,
    /// E[y], the degree-0 coefficient.
    pub mean: f64,
    pub sample_count: usize,
}

/// Empirical Chow parameters. Sums are accumulated as integers, so the
/// result does not depend on sample order.
pub fn estimate_chow(set: &LabeledSet) -> Result<ChowEstimate> {
    if set.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    let d = set.dim();
    // agree[i] counts samples with y = x_i.
    let mut agree = vec![0i64; d];
    let mut pos = 0i64;
    for s in set.iter() {
        let flip = if s.y == Sign::Pos { 0 } else { u64::MAX };
        if s.y == Sign::Pos {
            pos += 1;
        }
        for (w, &word) in s.x.words().iter().enumerate() {
            let mut bits = word ^ flip;
            let base = w * 64;
            let width = (d - base).min(64);
            if width < 64 {
                bits &= (1u64 << width) - 1;
            }
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                agree[base + b] += 1;
                bits &= bits - 1;
            }
        }
    }
    let n = set.len() as i64;
    let values = agree.iter().map(|&a| (2 * a - n) as f64 / n as f64).collect();
    Ok(ChowEstimate {
        values,
        mean: (2 * pos - n) as f64 / n as f64,
        sample_count: set.len(),
    })
}

/// Indices of the k largest |Î_i|, descending, ties to the smaller index.
pub fn top_k_indices(c: &ChowEstimate, k: usize) -> Result<Vec<usize>> {
    let d = c.values.len();
    if k > d {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds d = {d}")));
    }
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| c.values[b].abs().total_cmp(&c.values[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

fn check_enumerable(dim: usize) -> Result<()> {
    if dim > MAX_ENUM_DIM {
        Err(Error::TooLargeToEnumerate { dim, limit: MAX_ENUM_DIM })
    } else {
        Ok(())
    }
}

/// Counts masks in [0, 2^dim) satisfying `pred`, in parallel.
pub(crate) fn count_masks<F>(dim: usize, pred: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    const CHUNK: u64 = 1 << 12;
    let total = 1u64 << dim;
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            (lo..hi).filter(|&m| pred(m)).count() as u64
        })
        .sum()
}

/// Pr_x[h(x) ≠ h(x with coordinate i flipped)], by enumeration.
pub fn exact_influence(h: &Halfspace, i: usize) -> Result<f64> {
    let d = h.dim();
    check_enumerable(d)?;
    if i >= d {
        return Err(Error::IndexOutOfRange { index: i, dim: d });
    }
    let bit = 1u64 << i;
    let n = count_masks(d, |m| {
        m & bit == 0 && h.eval(&CubePoint::from_mask(m, d)) != h.eval(&CubePoint::from_mask(m | bit, d))
    });
    Ok((2 * n) as f64 / (1u64 << d) as f64)
}

pub fn exact_influences(h: &Halfspace) -> Result<Vec<f64>> {
    (0..h.dim()).map(|i| exact_influence(h, i)).collect()
}

/// Exact Chow parameters E[h(x)·x_i] of a halfspace.
pub fn exact_chow(h: &Halfspace) -> Result<ChowEstimate> {
    let d = h.dim();
    check_enumerable(d)?;
    let total = 1u64 << d;
    let values = (0..d)
        .map(|i| {
            let agree = count_masks(d, |m| {
                let x = CubePoint::from_mask(m, d);
                h.eval(&x) == x.get(i)
            });
            (2 * agree as i64 - total as i64) as f64 / total as f64
        })
        .collect();
    let pos = count_masks(d, |m| h.eval(&CubePoint::from_mask(m, d)) == Sign::Pos);
    Ok(ChowEstimate {
        values,
        mean: (2 * pos as i64 - total as i64) as f64 / total as f64,
        sample_count: total as usize,
    })
}

/// v with the magnitudes at i and j exchanged; signs stay in place.
pub fn swap_vector(v: &[f64], i: usize, j: usize) -> Result<Vec<f64>> {
    let d = v.len();
    for idx in [i, j] {
        if idx >= d {
            return Err(Error::IndexOutOfRange { index: idx, dim: d });
        }
    }
    let mut out = v.to_vec();
    out[i] = v[j].abs().copysign(v[i]);
    out[j] = v[i].abs().copysign(v[j]);
    Ok(out)
}

fn check_permutation(pi: &[usize]) -> Result<()> {
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || seen[p] {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// (v^π)_i = sign(v_i)·|v_{π(i)}|. The sign bit of v_i is kept, so the
/// composition law holds exactly even with zero entries.
pub fn permute_abs(v: &[f64], pi: &[usize]) -> Result<Vec<f64>> {
    if pi.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: pi.len() });
    }
    check_permutation(pi)?;
    Ok((0..v.len()).map(|i| v[pi[i]].abs().copysign(v[i])).collect())
}

/// Indices of the k largest |v_i|, descending, ties to the smaller index.
pub fn top_weight_indices(v: &[f64], k: usize) -> Result<Vec<usize>> {
    top_k_indices(
        &ChowEstimate { values: v.to_vec(), mean: 0.0, sample_count: 0 },
        k,
    )
}

/// The permutation procedure: swaps magnitudes one head index at a time so
/// that π(î_j) = i_j, where i_j are the true top-|v| indices.
pub fn build_swap_permutation(v: &[f64], hat: &[usize]) -> Result<Vec<usize>> {
    let d = v.len();
    let k = hat.len();
    let mut seen = vec![false; d];
    for &h in hat {
        if h >= d {
            return Err(Error::IndexOutOfRange { index: h, dim: d });
        }
        if seen[h] {
            return Err(Error::InvalidParameter("hat indices must be distinct".into()));
        }
        seen[h] = true;
    }
    let top = top_weight_indices(v, k)?;
    let mut pi: Vec<usize> = (0..d).collect();
    // pos[x] is the position whose magnitude currently comes from x.
    let mut pos: Vec<usize> = (0..d).collect();
    for j in 0..k {
        let a = pos[top[j]];
        let b = hat[j];
        if a != b {
            pi.swap(a, b);
            pos[pi[a]] = a;
            pos[pi[b]] = b;
        }
    }
    Ok(pi)
}
