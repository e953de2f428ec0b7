//! Brute-force ground truth for small instances.

use std::collections::BTreeMap;

use crate::cube::{CubePoint, LabeledSet, Sign};
use crate::error::{Error, Result};
use crate::halfspace::{norm2, Halfspace};
use crate::influence::{count_masks, MAX_ENUM_DIM};
use crate::rng::SeededRng;
use crate::solvers::{lp_feasible, LinearConstraintSystem};
use crate::sparse::sparse_radius;
use crate::synth::random_point;

pub use crate::influence::{exact_chow, exact_influence, exact_influences, MAX_ENUM_DIM as ENUM_LIMIT};

fn check_enumerable(dim: usize) -> Result<()> {
    if dim > MAX_ENUM_DIM {
        Err(Error::TooLargeToEnumerate { dim, limit: MAX_ENUM_DIM })
    } else {
        Ok(())
    }
}

/// Pr_x[h(x) ≠ f(x)] over the whole cube.
pub fn exact_error(h: &Halfspace, f: &Halfspace) -> Result<f64> {
    let d = h.dim();
    if f.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: f.dim() });
    }
    check_enumerable(d)?;
    let n = count_masks(d, |m| {
        let x = CubePoint::from_mask(m, d);
        h.eval(&x) != f.eval(&x)
    });
    Ok(n as f64 / (1u64 << d) as f64)
}

/// Disagreement with `target` on the uniform cube: exact when d ≤ 22,
/// otherwise estimated from `n` fresh points.
pub fn clean_error(h: &Halfspace, target: &Halfspace, n: usize, rng: &mut SeededRng) -> Result<f64> {
    if h.dim() <= MAX_ENUM_DIM {
        return exact_error(h, target);
    }
    if target.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: target.dim() });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let wrong = (0..n)
        .filter(|_| {
            let x = random_point(h.dim(), rng);
            h.eval(&x) != target.eval(&x)
        })
        .count();
    Ok(wrong as f64 / n as f64)
}

/// The law of u·x for x uniform on the cube, as sorted atoms.
#[derive(Debug, Clone)]
pub struct SigmaReg {
    values: Vec<f64>,
}

impl SigmaReg {
    pub fn new(u: &[f64]) -> Result<SigmaReg> {
        let d = u.len();
        if d == 0 {
            return Err(Error::Empty("direction"));
        }
        check_enumerable(d)?;
        let mut values: Vec<f64> = (0..1u64 << d).map(|m| CubePoint::from_mask(m, d).dot(u)).collect();
        values.sort_by(f64::total_cmp);
        Ok(SigmaReg { values })
    }

    /// Pr[u·x ≥ t].
    pub fn tail(&self, t: f64) -> f64 {
        let below = self.values.partition_point(|&v| v < t);
        (self.values.len() - below) as f64 / self.values.len() as f64
    }

    /// Pr[u·x > t].
    pub fn strict_tail(&self, t: f64) -> f64 {
        let upto = self.values.partition_point(|&v| v <= t);
        (self.values.len() - upto) as f64 / self.values.len() as f64
    }

    /// σ(z) = E[sign(z + u·x)], with sign(0) = +1.
    pub fn eval(&self, z: f64) -> f64 {
        2.0 * self.tail(-z) - 1.0
    }

    /// Distinct atoms of u·x.
    pub fn atoms(&self) -> Vec<f64> {
        let mut a = self.values.clone();
        a.dedup();
        a
    }
}

/// E_x[sign(z + u·x)] for a unit vector u.
pub fn exact_sigma_reg(u: &[f64], z: f64) -> Result<f64> {
    let n = norm2(u);
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::NormViolation { norm: n, bound: 1.0 });
    }
    Ok(SigmaReg::new(u)?.eval(z))
}

/// Pr[g ≥ t] for standard Gaussian g.
pub fn gaussian_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// sup_t |Pr[u·x ≥ t] − Pr[g ≥ t]| for unit u; the supremum is attained at
/// an atom from one side or the other.
pub fn kolmogorov_gap(u: &[f64]) -> Result<f64> {
    let law = SigmaReg::new(u)?;
    Ok(law
        .atoms()
        .into_iter()
        .map(|a| {
            let g = gaussian_tail(a);
            (law.tail(a) - g).abs().max((law.strict_tail(a) - g).abs())
        })
        .fold(0.0, f64::max))
}

/// Smallest empirical error of any halfspace supported on H (|H| ≤ 4):
/// labelings of the head patterns are tried in order of error until one is
/// realizable.
pub fn exact_opt_sparse(s: &LabeledSet, head: &[usize]) -> Result<f64> {
    if head.len() > 4 {
        return Err(Error::InvalidParameter(format!("|H| = {} exceeds 4", head.len())));
    }
    if s.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    if let Some(&i) = head.iter().find(|&&i| i >= s.dim()) {
        return Err(Error::IndexOutOfRange { index: i, dim: s.dim() });
    }
    // pattern → (count of +1, count of −1)
    let mut groups: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for smp in s.iter() {
        let key = head
            .iter()
            .enumerate()
            .fold(0u32, |k, (j, &i)| if smp.x.is_pos(i) { k | 1 << j } else { k });
        let e = groups.entry(key).or_default();
        if smp.y == Sign::Pos {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let patterns: Vec<(u32, (usize, usize))> = groups.into_iter().collect();
    let p = patterns.len();
    let mut labelings: Vec<(usize, u32)> = (0..1u32 << p)
        .map(|lab| {
            let err = patterns
                .iter()
                .enumerate()
                .map(|(j, (_, (pos, neg)))| if lab >> j & 1 == 1 { *neg } else { *pos })
                .sum();
            (err, lab)
        })
        .collect();
    labelings.sort_unstable();
    let radius = sparse_radius(head.len());
    for (err, lab) in labelings {
        let mut sys = LinearConstraintSystem::new(head.len() + 1);
        for (j, (key, _)) in patterns.iter().enumerate() {
            let y = if lab >> j & 1 == 1 { 1.0 } else { -1.0 };
            let mut a: Vec<f64> = (0..head.len())
                .map(|t| if key >> t & 1 == 1 { y } else { -y })
                .collect();
            a.push(y);
            sys.push(a, 1.0)?;
        }
        if lp_feasible(&sys, radius)?.point().is_some() {
            return Ok(err as f64 / s.len() as f64);
        }
    }
    unreachable!("the constant labelings are always realizable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{enumerate_cube, LabeledSample, Provenance};
    use crate::glm::psi;
    use crate::halfspace::{empirical_error, regularity_ratio};
    use crate::synth::{label_with, random_regular_halfspace, sample_uniform, NoiseSpec, apply_noise};

    #[test]
    fn exact_error_examples() {
        let maj = Halfspace::majority(3);
        assert_eq!(exact_error(&maj, &maj).unwrap(), 0.0);
        assert_eq!(exact_error(&maj, &maj.negate()).unwrap(), 1.0);
        assert_eq!(exact_error(&maj, &Halfspace::dictator(3, 0)).unwrap(), 0.25);
        assert!(exact_error(&Halfspace::majority(23), &Halfspace::majority(23)).is_err());
    }

    #[test]
    fn exact_error_agrees_with_full_cube_empirical_error() {
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let d = 2 + rng.below(9);
            let h = random_regular_halfspace(d.max(2), &mut rng).unwrap();
            let f = random_regular_halfspace(d.max(2), &mut rng).unwrap();
            let cube = label_with(&f, enumerate_cube(d).collect()).unwrap();
            assert_eq!(exact_error(&h, &f).unwrap(), empirical_error(&h, &cube).unwrap());
        }
    }

    #[test]
    fn sigma_reg_examples() {
        let u = [0.6, 0.8];
        assert_eq!(exact_sigma_reg(&u, 10.0).unwrap(), 1.0);
        let s = 0.5f64.sqrt();
        assert_eq!(exact_sigma_reg(&[s, -s], 0.0).unwrap(), 0.5);
        let sym = [0.5, -0.5, 0.5, -0.5];
        // Ties at u·x = 0 count as +1; odd symmetry holds away from atoms.
        assert!((exact_sigma_reg(&sym, 0.3).unwrap() + exact_sigma_reg(&sym, -0.3).unwrap()).abs() < 1e-15);
        let uni = vec![1.0 / 12f64.sqrt(); 12];
        let got = exact_sigma_reg(&uni, 0.5).unwrap();
        assert!((got - psi(0.5)).abs() <= 2.0 * regularity_ratio(&uni).unwrap());
        assert!(exact_sigma_reg(&[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn sigma_reg_is_monotone() {
        let mut rng = SeededRng::new(2);
        let h = random_regular_halfspace(10, &mut rng).unwrap();
        let law = SigmaReg::new(h.weights()).unwrap();
        let mut prev = -1.0;
        for i in 0..=400 {
            let v = law.eval(-4.0 + 8.0 * i as f64 / 400.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn opt_sparse_examples() {
        let mut rng = SeededRng::new(3);
        let mut w = vec![0.0; 6];
        w[1] = 2.0;
        w[4] = -1.0;
        let f = Halfspace::new(w, 0.5).unwrap();
        let s = label_with(&f, sample_uniform(6, 80, &mut rng).unwrap()).unwrap();
        assert_eq!(exact_opt_sparse(&s, &[1, 4]).unwrap(), 0.0);

        let x = CubePoint::from_ints(&[1, -1, 1]).unwrap();
        let dup = LabeledSet::new(
            3,
            vec![
                LabeledSample { x: x.clone(), y: Sign::Pos },
                LabeledSample { x: x.clone(), y: Sign::Neg },
                LabeledSample { x: x.clone(), y: Sign::Neg },
                LabeledSample { x: CubePoint::from_ints(&[-1, -1, -1]).unwrap(), y: Sign::Pos },
            ],
            Provenance::Clean,
        )
        .unwrap();
        assert!(exact_opt_sparse(&dup, &[0, 2]).unwrap() >= 0.25 / 2.0);
        assert!(exact_opt_sparse(&dup, &[0, 1, 2, 3, 4]).is_err());
    }

    /// Every threshold function on ≤ 4 variables has integer weights in
    /// [−3, 3]; scanning them gives an independent optimum.
    fn brute_force_opt(s: &LabeledSet, head: &[usize]) -> f64 {
        let k = head.len();
        let mut best = 1.0f64;
        let total = 7usize.pow(k as u32);
        for code in 0..total {
            let mut w = vec![0.0; s.dim()];
            let mut c = code;
            for &i in head {
                w[i] = (c % 7) as f64 - 3.0;
                c /= 7;
            }
            for tau in -10..=10 {
                let t = tau as f64 + 0.5;
                let h = Halfspace::or_constant(w.clone(), t).unwrap();
                best = best.min(empirical_error(&h, s).unwrap());
            }
        }
        best
    }

    #[test]
    fn opt_sparse_matches_weight_scan() {
        let mut rng = SeededRng::new(4);
        for _ in 0..15 {
            let d = 6;
            let k = 1 + rng.below(4);
            let head = rng.sample_indices(d, k);
            let f = random_regular_halfspace(d, &mut rng).unwrap();
            let s = label_with(&f, sample_uniform(d, 40, &mut rng).unwrap()).unwrap();
            let s = apply_noise(s, NoiseSpec::RandomFlip(0.2), None, &mut rng).unwrap();
            let lp = exact_opt_sparse(&s, &head).unwrap();
            assert!((lp - brute_force_opt(&s, &head)).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn clean_error_uses_sampling_above_the_limit() {
        let mut rng = SeededRng::new(5);
        let f = Halfspace::dictator(30, 0);
        let g = Halfspace::dictator(30, 1);
        let e = clean_error(&f, &g, 100_000, &mut rng).unwrap();
        assert!((e - 0.5).abs() < 0.01);
        let f = Halfspace::majority(5);
        assert_eq!(clean_error(&f, &f, 1, &mut rng).unwrap(), 0.0);
    }
}
