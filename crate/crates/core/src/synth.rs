//! Synthetic data: uniform cube samples, planted labels, label noise and
//! oblivious contamination.

use std::fmt;
use std::str::FromStr;

use crate::cube::{CubePoint, LabeledSample, LabeledSet, Provenance, Sign};
use crate::error::{Error, Result};
use crate::halfspace::{norm2, regularity_ratio, Halfspace};
use crate::rng::SeededRng;

/// Oblivious adversary distributions `Q` for the mixture (1−η)·D + η·Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Adversary {
    /// The all-ones point with the wrong label.
    CornerCluster,
    /// Uniform x labeled −x₁.
    AntiDictator,
    /// First ⌈√d⌉ coordinates forced to +1, label −1.
    DenseDirection,
}

impl Adversary {
    pub const ALL: [Adversary; 3] = [
        Adversary::CornerCluster,
        Adversary::AntiDictator,
        Adversary::DenseDirection,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Adversary::CornerCluster => "corner_cluster",
            Adversary::AntiDictator => "anti_dictator",
            Adversary::DenseDirection => "dense_direction",
        }
    }

    fn draw(self, dim: usize, target: Option<&Halfspace>, rng: &mut SeededRng) -> Result<LabeledSample> {
        match self {
            Adversary::CornerCluster => {
                let f = target.ok_or(Error::MissingPlanted)?;
                let x = CubePoint::all_ones(dim);
                let y = -f.eval(&x);
                Ok(LabeledSample { x, y })
            }
            Adversary::AntiDictator => {
                let x = random_point(dim, rng);
                let y = -x.get(0);
                Ok(LabeledSample { x, y })
            }
            Adversary::DenseDirection => {
                let mut x = random_point(dim, rng);
                let m = (dim as f64).sqrt().ceil() as usize;
                for i in 0..m.min(dim) {
                    if !x.is_pos(i) {
                        x.flip(i);
                    }
                }
                Ok(LabeledSample { x, y: Sign::Neg })
            }
        }
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Adversary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Adversary::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::UnknownAdversary(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    RandomFlip(f64),
    BoundaryFlip(f64),
    ObliviousContaminate(f64, Adversary),
}

impl NoiseSpec {
    pub fn rate(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::RandomFlip(r) | NoiseSpec::BoundaryFlip(r) => r,
            NoiseSpec::ObliviousContaminate(r, _) => r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.rate();
        if (0.0..1.0).contains(&r) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("noise rate {r} outside [0,1)")))
        }
    }

    fn provenance(&self, prior: Provenance) -> Provenance {
        match *self {
            NoiseSpec::None => prior,
            NoiseSpec::RandomFlip(r) | NoiseSpec::BoundaryFlip(r) => Provenance::LabelNoise(r),
            NoiseSpec::ObliviousContaminate(r, _) => Provenance::Contaminated(r),
        }
    }
}

/// CLI syntax: `none`, `flip:r`, `boundary:r`, `contam:r:adversary`.
impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad noise spec `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let rate = |t: &str| -> Result<f64> { t.parse::<f64>().map_err(|_| bad()) };
        let spec = match parts.as_slice() {
            ["none"] => NoiseSpec::None,
            ["flip", r] => NoiseSpec::RandomFlip(rate(r)?),
            ["boundary", r] => NoiseSpec::BoundaryFlip(rate(r)?),
            ["contam", r, a] => NoiseSpec::ObliviousContaminate(rate(r)?, a.parse()?),
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::None => f.write_str("none"),
            NoiseSpec::RandomFlip(r) => write!(f, "flip:{r}"),
            NoiseSpec::BoundaryFlip(r) => write!(f, "boundary:{r}"),
            NoiseSpec::ObliviousContaminate(r, a) => write!(f, "contam:{r}:{a}"),
        }
    }
}

/// A uniformly random point of {±1}^d.
pub fn random_point(dim: usize, rng: &mut SeededRng) -> CubePoint {
    let words = (0..dim.div_ceil(64)).map(|_| rng.next_u64()).collect();
    CubePoint::from_words(words, dim)
}

pub fn sample_uniform(dim: usize, n: usize, rng: &mut SeededRng) -> Result<Vec<CubePoint>> {
    if dim == 0 || n == 0 {
        return Err(Error::InvalidParameter("d and n must be ≥ 1".into()));
    }
    if dim > CubePoint::MAX_DIM {
        return Err(Error::InvalidParameter(format!("d = {dim} exceeds the maximum")));
    }
    Ok((0..n).map(|_| random_point(dim, rng)).collect())
}

pub fn label_with(h: &Halfspace, pts: Vec<CubePoint>) -> Result<LabeledSet> {
    let samples = pts
        .into_iter()
        .map(|x| {
            let y = h.predict(&x)?;
            Ok(LabeledSample { x, y })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledSet::new(h.dim(), samples, Provenance::Clean)
}

pub fn apply_noise(
    set: LabeledSet,
    spec: NoiseSpec,
    target: Option<&Halfspace>,
    rng: &mut SeededRng,
) -> Result<LabeledSet> {
    apply_noise_tagged(set, spec, target, rng).map(|(s, _)| s)
}

/// Like [`apply_noise`] but also returns the indices of corrupted samples.
pub fn apply_noise_tagged(
    set: LabeledSet,
    spec: NoiseSpec,
    target: Option<&Halfspace>,
    rng: &mut SeededRng,
) -> Result<(LabeledSet, Vec<usize>)> {
    spec.validate()?;
    let dim = set.dim();
    let provenance = spec.provenance(set.provenance);
    let mut samples = set.into_samples();
    let mut touched = Vec::new();
    match spec {
        NoiseSpec::None => {}
        NoiseSpec::RandomFlip(r) => {
            for (i, s) in samples.iter_mut().enumerate() {
                if rng.bernoulli(r) {
                    s.y = -s.y;
                    touched.push(i);
                }
            }
        }
        NoiseSpec::BoundaryFlip(r) => {
            let f = target.ok_or(Error::MissingPlanted)?;
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
            }
            let count = (r * samples.len() as f64).floor() as usize;
            let mut order: Vec<(f64, usize)> = samples
                .iter()
                .enumerate()
                .map(|(i, s)| (f.margin(&s.x).abs(), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            touched = order[..count].iter().map(|&(_, i)| i).collect();
            touched.sort_unstable();
            for &i in &touched {
                samples[i].y = -samples[i].y;
            }
        }
        NoiseSpec::ObliviousContaminate(r, adv) => {
            if let (Adversary::CornerCluster, Some(f)) = (adv, target) {
                if f.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
                }
            }
            for (i, s) in samples.iter_mut().enumerate() {
                if rng.bernoulli(r) {
                    *s = adv.draw(dim, target, rng)?;
                    touched.push(i);
                }
            }
        }
    }
    Ok((LabeledSet::new(dim, samples, provenance)?, touched))
}

/// Unit-norm Gaussian direction with ‖v‖₄²/‖v‖₂² ≤ 2/√d, bias uniform in [−1,1].
pub fn random_regular_halfspace(dim: usize, rng: &mut SeededRng) -> Result<Halfspace> {
    if dim < 2 {
        return Err(Error::InvalidParameter("regular halfspaces need d ≥ 2".into()));
    }
    let bound = 2.0 / (dim as f64).sqrt();
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        let n = norm2(&v);
        if n == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|w| *w /= n);
        if regularity_ratio(&v)? <= bound {
            let bias = rng.uniform_range(-1.0, 1.0);
            return Halfspace::new(v, bias);
        }
    }
}

/// k nonzero integer weights in [−2^k, 2^k] on random coordinates, integer bias.
pub fn planted_sparse_halfspace(dim: usize, k: usize, rng: &mut SeededRng) -> Result<Halfspace> {
    if k == 0 || k > dim {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ d, got k={k}, d={dim}")));
    }
    if k > 30 {
        return Err(Error::InvalidParameter("k > 30 overflows the weight range".into()));
    }
    let bound = 1i64 << k;
    let mut w = vec![0.0; dim];
    let mut total = 0i64;
    for i in rng.sample_indices(dim, k) {
        let mut a = 0;
        while a == 0 {
            a = rng.int_range(-bound, bound);
        }
        total += a.abs();
        w[i] = a as f64;
    }
    let tau = rng.int_range(-total, total);
    Halfspace::new(w, tau as f64)
}

/// Anything the learners can draw labeled samples from.
pub trait SampleSource: Sync {
    fn dim(&self) -> usize;
    fn provenance(&self) -> Provenance;
    fn draw(&self, n: usize, rng: &mut SeededRng) -> Result<LabeledSet>;
}

/// Uniform points labeled by a planted halfspace, then corrupted per `noise`.
#[derive(Debug, Clone)]
pub struct PlantedSource {
    pub target: Halfspace,
    pub noise: NoiseSpec,
}

impl PlantedSource {
    pub fn new(target: Halfspace, noise: NoiseSpec) -> Result<PlantedSource> {
        noise.validate()?;
        Ok(PlantedSource { target, noise })
    }

    pub fn clean(target: Halfspace) -> PlantedSource {
        PlantedSource { target, noise: NoiseSpec::None }
    }
}

impl SampleSource for PlantedSource {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn provenance(&self) -> Provenance {
        self.noise.provenance(Provenance::Clean)
    }

    fn draw(&self, n: usize, rng: &mut SeededRng) -> Result<LabeledSet> {
        let pts = sample_uniform(self.dim(), n, rng)?;
        let set = label_with(&self.target, pts)?;
        apply_noise(set, self.noise, Some(&self.target), rng)
    }
}

/// Draws with replacement from a fixed data set.
#[derive(Debug, Clone)]
pub struct EmpiricalSource {
    set: LabeledSet,
}

impl EmpiricalSource {
    pub fn new(set: LabeledSet) -> Result<EmpiricalSource> {
        if set.is_empty() {
            return Err(Error::Empty("data set"));
        }
        Ok(EmpiricalSource { set })
    }
}

impl SampleSource for EmpiricalSource {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn provenance(&self) -> Provenance {
        self.set.provenance
    }

    fn draw(&self, n: usize, rng: &mut SeededRng) -> Result<LabeledSet> {
        let all = self.set.samples();
        let picked = (0..n).map(|_| all[rng.below(all.len())].clone()).collect();
        LabeledSet::new(self.set.dim(), picked, self.set.provenance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::enumerate_cube;
    use crate::halfspace::empirical_error;

    #[test]
    fn coordinate_means_are_unbiased() {
        let mut rng = SeededRng::new(1);
        let pts = sample_uniform(1, 1_000_000, &mut rng).unwrap();
        let mean = pts.iter().map(|p| p.value(0)).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 0.005, "{mean}");
    }

    #[test]
    fn pattern_frequencies_d3() {
        let mut rng = SeededRng::new(2);
        let n = 800_000;
        let pts = sample_uniform(3, n, &mut rng).unwrap();
        let mut counts = [0usize; 8];
        for p in &pts {
            counts[p.words()[0] as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.125).abs() < 0.003);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_uniform(70, 50, &mut SeededRng::new(9)).unwrap();
        let b = sample_uniform(70, 50, &mut SeededRng::new(9)).unwrap();
        assert_eq!(a, b);
        assert!(sample_uniform(0, 5, &mut SeededRng::new(9)).is_err());
    }

    #[test]
    fn labeling_examples() {
        let mut rng = SeededRng::new(3);
        let pts = sample_uniform(5, 200, &mut rng).unwrap();
        let set = label_with(&Halfspace::dictator(5, 0), pts.clone()).unwrap();
        assert!(set.iter().all(|s| s.y == s.x.get(0)));
        assert_eq!(set.provenance, Provenance::Clean);
        let constant = Halfspace::new(vec![1.0; 5], 6.0).unwrap();
        let set = label_with(&constant, pts).unwrap();
        assert!(set.iter().all(|s| s.y == Sign::Pos));

        let maj = label_with(&Halfspace::majority(3), enumerate_cube(3).collect()).unwrap();
        let expected = [-1, -1, -1, 1, -1, 1, 1, 1];
        for (s, e) in maj.iter().zip(expected) {
            assert_eq!(s.y.to_i64(), e);
        }
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = SeededRng::new(4);
        let f = Halfspace::majority(7);
        let set = label_with(&f, sample_uniform(7, 300, &mut rng).unwrap()).unwrap();
        for spec in [
            NoiseSpec::None,
            NoiseSpec::RandomFlip(0.0),
            NoiseSpec::BoundaryFlip(0.0),
            NoiseSpec::ObliviousContaminate(0.0, Adversary::CornerCluster),
        ] {
            let out = apply_noise(set.clone(), spec, Some(&f), &mut rng).unwrap();
            assert_eq!(out.samples(), set.samples());
        }
        let again = apply_noise(set.clone(), NoiseSpec::None, None, &mut rng).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn random_flip_half() {
        let mut rng = SeededRng::new(5);
        let f = Halfspace::dictator(10, 3);
        let set = label_with(&f, sample_uniform(10, 100_000, &mut rng).unwrap()).unwrap();
        let noisy = apply_noise(set, NoiseSpec::RandomFlip(0.5), None, &mut rng).unwrap();
        let err = empirical_error(&f, &noisy).unwrap();
        assert!((err - 0.5).abs() < 0.01);
        assert_eq!(noisy.provenance, Provenance::LabelNoise(0.5));
    }

    #[test]
    fn random_flip_rate_within_binomial_band() {
        let rate = 0.05;
        let n = 20_000;
        let sd = (rate * (1.0 - rate) / n as f64).sqrt();
        let f = Halfspace::majority(9);
        for seed in 0..10 {
            let mut rng = SeededRng::new(seed);
            let set = label_with(&f, sample_uniform(9, n, &mut rng).unwrap()).unwrap();
            let noisy = apply_noise(set, NoiseSpec::RandomFlip(rate), None, &mut rng).unwrap();
            let err = empirical_error(&f, &noisy).unwrap();
            assert!((err - rate).abs() <= 3.0 * sd + 1e-12, "seed {seed}: {err}");
        }
    }

    #[test]
    fn boundary_flip_hits_smallest_margins() {
        let mut rng = SeededRng::new(6);
        let f = Halfspace::new(vec![3.0, 1.0, 1.0, 0.5], 0.0).unwrap();
        let set = label_with(&f, sample_uniform(4, 1000, &mut rng).unwrap()).unwrap();
        let (noisy, idx) =
            apply_noise_tagged(set.clone(), NoiseSpec::BoundaryFlip(0.1), Some(&f), &mut rng).unwrap();
        assert_eq!(idx.len(), 100);
        let flipped_max = idx.iter().map(|&i| f.margin(&set.samples()[i].x).abs()).fold(0.0, f64::max);
        let kept_min = (0..1000)
            .filter(|i| !idx.contains(i))
            .map(|i| f.margin(&set.samples()[i].x).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(flipped_max <= kept_min);
        assert!((empirical_error(&f, &noisy).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(
            apply_noise(set, NoiseSpec::BoundaryFlip(0.1), None, &mut rng),
            Err(Error::MissingPlanted)
        );
    }

    #[test]
    fn corner_cluster_fraction() {
        let mut rng = SeededRng::new(7);
        let eta = 0.03;
        let d = 40;
        let f = Halfspace::majority(d);
        let set = label_with(&f, sample_uniform(d, 100_000, &mut rng).unwrap()).unwrap();
        let out = apply_noise(
            set,
            NoiseSpec::ObliviousContaminate(eta, Adversary::CornerCluster),
            Some(&f),
            &mut rng,
        )
        .unwrap();
        let ones = CubePoint::all_ones(d);
        let corner: Vec<_> = out.iter().filter(|s| s.x == ones).collect();
        assert!((corner.len() as f64 / 1e5 - eta).abs() < 0.005);
        assert!(corner.iter().all(|s| s.y == Sign::Neg));
        assert_eq!(out.provenance, Provenance::Contaminated(eta));
    }

    #[test]
    fn contamination_tv_bound_on_an_event() {
        // Event: x₁ = +1 and y = +1. Under the clean law its probability is
        // exact; the mixture can move it by at most η.
        let d = 12;
        let f = Halfspace::dictator(d, 0);
        let eta = 0.05;
        let n = 50_000;
        for adv in Adversary::ALL {
            let mut rng = SeededRng::new(11);
            let set = label_with(&f, sample_uniform(d, n, &mut rng).unwrap()).unwrap();
            let out = apply_noise(set, NoiseSpec::ObliviousContaminate(eta, adv), Some(&f), &mut rng)
                .unwrap();
            let freq = out.iter().filter(|s| s.x.is_pos(0) && s.y == Sign::Pos).count() as f64 / n as f64;
            let slack = 4.0 * (0.25 / n as f64).sqrt();
            assert!((freq - 0.5).abs() <= eta + slack, "{adv}: {freq}");
        }
    }

    #[test]
    fn adversary_shapes() {
        let mut rng = SeededRng::new(12);
        for _ in 0..50 {
            let s = Adversary::AntiDictator.draw(9, None, &mut rng).unwrap();
            assert_eq!(s.y, -s.x.get(0));
            let s = Adversary::DenseDirection.draw(9, None, &mut rng).unwrap();
            assert!((0..3).all(|i| s.x.is_pos(i)));
            assert_eq!(s.y, Sign::Neg);
        }
        assert_eq!(Adversary::CornerCluster.draw(4, None, &mut rng), Err(Error::MissingPlanted));
        assert_eq!("dense_direction".parse::<Adversary>(), Ok(Adversary::DenseDirection));
        assert!("nope".parse::<Adversary>().is_err());
    }

    #[test]
    fn noise_spec_parsing() {
        assert_eq!("none".parse::<NoiseSpec>(), Ok(NoiseSpec::None));
        assert_eq!("flip:0.1".parse::<NoiseSpec>(), Ok(NoiseSpec::RandomFlip(0.1)));
        assert_eq!(
            "contam:0.01:anti_dictator".parse::<NoiseSpec>(),
            Ok(NoiseSpec::ObliviousContaminate(0.01, Adversary::AntiDictator))
        );
        assert!("flip:1.0".parse::<NoiseSpec>().is_err());
        assert!("flip".parse::<NoiseSpec>().is_err());
        for s in ["none", "flip:0.25", "boundary:0.1", "contam:0.5:corner_cluster"] {
            assert_eq!(s.parse::<NoiseSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn regular_halfspace_properties() {
        for seed in 0..20 {
            let mut rng = SeededRng::new(seed);
            let d = 2 + seed as usize * 5;
            let h = random_regular_halfspace(d, &mut rng).unwrap();
            assert!((norm2(h.weights()) - 1.0).abs() < 1e-12);
            assert!(regularity_ratio(h.weights()).unwrap() <= 2.0 / (d as f64).sqrt());
            assert!(h.bias().abs() <= 1.0);
            let again = random_regular_halfspace(d, &mut SeededRng::new(seed)).unwrap();
            assert_eq!(h, again);
        }
        assert!(random_regular_halfspace(1, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn sparse_halfspace_properties() {
        let mut rng = SeededRng::new(13);
        for k in 1..=6 {
            let h = planted_sparse_halfspace(20, k, &mut rng).unwrap();
            let support: Vec<_> = h.weights().iter().filter(|w| **w != 0.0).collect();
            assert_eq!(support.len(), k);
            let bound = (1i64 << k) as f64;
            assert!(support.iter().all(|w| w.fract() == 0.0 && w.abs() <= bound));
            assert_eq!(h.bias().fract(), 0.0);
            assert!(h.bias().abs() <= k as f64 * bound);
        }
        assert!(planted_sparse_halfspace(3, 4, &mut rng).is_err());
    }

    #[test]
    fn sparse_supports_differ_across_seeds() {
        // d = 1000, k = 3: a repeated support has probability far below k²/d.
        let supports: Vec<Vec<usize>> = (0..100)
            .map(|s| {
                let h = planted_sparse_halfspace(1000, 3, &mut SeededRng::new(s)).unwrap();
                (0..1000).filter(|&i| h.weights()[i] != 0.0).collect()
            })
            .collect();
        let mut repeats = 0;
        for i in 0..supports.len() {
            for j in 0..i {
                if supports[i] == supports[j] {
                    repeats += 1;
                }
            }
        }
        assert_eq!(repeats, 0);
    }

    #[test]
    fn sources_draw_consistently() {
        let f = Halfspace::dictator(6, 2);
        let src = PlantedSource::new(f.clone(), NoiseSpec::RandomFlip(0.1)).unwrap();
        assert_eq!(src.provenance(), Provenance::LabelNoise(0.1));
        let a = src.draw(100, &mut SeededRng::new(1)).unwrap();
        let b = src.draw(100, &mut SeededRng::new(1)).unwrap();
        assert_eq!(a, b);
        let emp = EmpiricalSource::new(a.clone()).unwrap();
        let c = emp.draw(500, &mut SeededRng::new(2)).unwrap();
        assert!(c.iter().all(|s| a.samples().contains(s)));
    }
}
