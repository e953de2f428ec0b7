//! Contamination defenses: spectral outlier removal and the contaminated
//! variant of tail recovery.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{CubePoint, LabeledSet};
use crate::error::{Error, Result};
use crate::hinge::{filter_within, solve_tail, TailFit, TailProblem};
use crate::packed::{ByteAccum, ByteDot};

/// Second-moment threshold: uniform points have E[(v·x)²] = ‖v‖², so 8
/// leaves a wide margin over clean samples.
pub const MOMENT_BOUND: f64 = 8.0;
/// Largest dimension whose final check uses a dense eigendecomposition.
pub const EXACT_CHECK_DIM: usize = 1024;

const POWER_TOL: f64 = 1e-6;
// Rounding slack when comparing a computed eigenvalue against the bound.
const CHECK_SLACK: f64 = 1e-9;
const POWER_MAX_ITERS: usize = 500;
const REMOVE_FRACTION: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub removed_count: usize,
    /// Top eigenvalue of (1/m)Σ_kept xxᵀ with m the original size.
    pub final_top_moment: f64,
    /// Removal passes.
    pub iterations: usize,
    /// Whether the final eigenvalue came from a dense decomposition.
    pub exact_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierFilter {
    /// Indices of surviving points, ascending.
    pub kept: Vec<usize>,
    /// Indices of removed points, in removal order.
    pub removed: Vec<usize>,
    pub report: FilterReport,
}

/// y = (1/m) Σ_{i∈kept} x_i (x_i·v).
fn apply_moment(pts: &[CubePoint], kept: &[usize], v: &[f64], m: f64) -> Vec<f64> {
    let dim = v.len();
    let table = ByteDot::new(v);
    let chunk = 2048;
    let parts: Vec<Vec<f64>> = kept
        .par_chunks(chunk)
        .map(|ids| {
            let mut acc = ByteAccum::new(dim);
            for &i in ids {
                acc.add(&pts[i], table.dot(&pts[i]));
            }
            acc.finish()
        })
        .collect();
    let mut out = vec![0.0; dim];
    for p in parts {
        for (o, x) in out.iter_mut().zip(p) {
            *o += x;
        }
    }
    out.iter_mut().for_each(|o| *o /= m);
    out
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Power iteration from `start`; stops when the Rayleigh quotient moves by
/// less than the relative tolerance.
fn power_iteration(pts: &[CubePoint], kept: &[usize], m: f64, start: &[f64]) -> (f64, Vec<f64>) {
    let mut v = start.to_vec();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut w = apply_moment(pts, kept, &v, m);
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        if normalize(&mut w) == 0.0 {
            return (0.0, v);
        }
        v = w;
        let done = (rq - lambda).abs() <= POWER_TOL * rq.abs();
        lambda = rq;
        if done {
            break;
        }
    }
    (lambda, v)
}

/// Dense (1/m)Σ_kept xxᵀ from column bitsets: entry (i,j) is
/// (agreements − disagreements)/m.
fn dense_moment(pts: &[CubePoint], kept: &[usize], dim: usize, m: f64) -> DMatrix<f64> {
    let words = kept.len().div_ceil(64);
    let mut cols = vec![vec![0u64; words]; dim];
    for (r, &i) in kept.iter().enumerate() {
        for (j, col) in cols.iter_mut().enumerate() {
            if pts[i].is_pos(j) {
                col[r / 64] |= 1 << (r % 64);
            }
        }
    }
    let n = kept.len() as i64;
    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let diff: i64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| (a ^ b).count_ones() as i64).sum();
                    (n - 2 * diff) as f64 / m
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
}

fn top_eigen(mat: DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(mat);
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Iterative spectral filter. While the top eigenvalue of
/// (1/m)Σ_kept xxᵀ exceeds 8, drops the ⌈0.1%⌉ of surviving points with
/// the largest (u·x)² along the top eigenvector u. Only `r = 1` is
/// implemented.
pub fn outlier_remove(pts: &[CubePoint], r: usize) -> Result<OutlierFilter> {
    if r != 1 {
        return Err(Error::Unsupported(format!("outlier removal with r = {r}")));
    }
    let first = pts.first().ok_or(Error::Empty("point set"))?;
    let dim = first.dim();
    if let Some(p) = pts.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
    }
    let m = pts.len() as f64;
    let mut kept: Vec<usize> = (0..pts.len()).collect();
    let mut removed = Vec::new();
    let mut u: Vec<f64> = (0..dim).map(|i| 1.0 + (i % 7) as f64 / 10.0).collect();
    let mut passes = 0;
    let mut exact;
    let limit = MOMENT_BOUND * (1.0 + CHECK_SLACK);
    let final_lambda = loop {
        let (mut lambda, v) = power_iteration(pts, &kept, m, &u);
        u = v;
        if lambda <= limit {
            if dim <= EXACT_CHECK_DIM && !kept.is_empty() {
                let (l, v) = top_eigen(dense_moment(pts, &kept, dim, m));
                exact = true;
                lambda = l;
                if lambda <= limit {
                    break lambda;
                }
                u = v;
            } else {
                exact = false;
                break lambda;
            }
        }
        passes += 1;
        let table = ByteDot::new(&u);
        let mut scored: Vec<(f64, usize)> = kept
            .par_iter()
            .map(|&i| {
                let t = table.dot(&pts[i]);
                (t * t, i)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let min_score = scored.last().map_or(0.0, |s| s.0);
        let quota = (REMOVE_FRACTION * kept.len() as f64).ceil() as usize;
        let mut drop: Vec<usize> = scored
            .iter()
            .take(quota)
            .take_while(|s| s.0 > min_score)
            .map(|s| s.1)
            .collect();
        if drop.is_empty() {
            // Every score ties; nothing distinguishes an outlier, but the set
            // must still shrink.
            drop = scored.iter().take(quota).map(|s| s.1).collect();
        }
        removed.extend_from_slice(&drop);
        drop.sort_unstable();
        kept.retain(|i| drop.binary_search(i).is_err());
    };
    Ok(OutlierFilter {
        kept,
        report: FilterReport {
            removed_count: removed.len(),
            final_top_moment: final_lambda,
            iterations: passes,
            exact_check: exact,
        },
        removed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminatedFit {
    pub fit: TailFit,
    pub filter: FilterReport,
}

/// Outlier removal, then the filter |φ(x)| ≤ φ_max, then minimization of
/// Σ ReLU(1 − y(φ(x) + v·x)/ε) over {‖v‖ ≤ 1, v_H = 0}.
pub fn find_regular_contaminated(p: &TailProblem, data: &LabeledSet, phi_max: f64, iters: usize) -> Result<ContaminatedFit> {
    if data.dim() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: data.dim() });
    }
    if !(phi_max >= 0.0) {
        return Err(Error::InvalidParameter("phi_max must be nonnegative".into()));
    }
    if data.is_empty() {
        let fit = solve_tail(p, &[], 0, 1.0 / p.eps, iters)?;
        let filter = FilterReport { removed_count: 0, final_top_moment: 0.0, iterations: 0, exact_check: false };
        return Ok(ContaminatedFit { fit, filter });
    }
    let pts: Vec<CubePoint> = data.iter().map(|s| s.x.clone()).collect();
    let out = outlier_remove(&pts, 1)?;
    let mut kept = 0;
    let clean = data.filtered(|_| {
        let keep = out.kept.binary_search(&kept).is_ok();
        kept += 1;
        keep
    });
    let band = filter_within(p, &clean, phi_max)?;
    let fit = solve_tail(p, band.samples(), data.len(), 1.0 / p.eps, iters)?;
    Ok(ContaminatedFit { fit, filter: out.report })
}
