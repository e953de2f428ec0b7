//! Points of the hypercube {±1}^d, labels and labeled sample sets.
//!
//! Points are stored as packed bits (bit set ⇔ coordinate +1). All dot
//! products go through [`CubePoint::dot`], which sums `±v_i` in index order,
//! so every consumer (learner, generator, oracles) agrees on ties.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ±1 value. `Sign::of(0.0)` is `Pos`: the crate-wide convention sign(0) = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    #[inline]
    pub fn of(z: f64) -> Sign {
        if z >= 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    #[inline]
    pub fn to_i64(self) -> i64 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn from_i64(v: i64) -> Option<Sign> {
        match v {
            1 => Some(Sign::Pos),
            -1 => Some(Sign::Neg),
            _ => None,
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Pos => "+1",
            Sign::Neg => "-1",
        })
    }
}

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CubePoint {
    words: Vec<u64>,
    dim: usize,
}

impl CubePoint {
    /// Largest supported dimension.
    pub const MAX_DIM: usize = 1 << 20;

    fn words_for(dim: usize) -> usize {
        dim.div_ceil(WORD)
    }

    /// The all-(+1) point.
    pub fn all_ones(dim: usize) -> CubePoint {
        assert!((1..=Self::MAX_DIM).contains(&dim), "dimension out of range");
        let mut words = vec![u64::MAX; Self::words_for(dim)];
        let rem = dim % WORD;
        if rem != 0 {
            *words.last_mut().unwrap() = (1u64 << rem) - 1;
        }
        CubePoint { words, dim }
    }

    pub fn from_signs(signs: &[Sign]) -> CubePoint {
        let mut p = CubePoint::all_ones(signs.len());
        for (i, s) in signs.iter().enumerate() {
            if *s == Sign::Neg {
                p.flip(i);
            }
        }
        p
    }

    /// Builds from integer entries; each must be exactly ±1.
    pub fn from_ints(values: &[i64]) -> Result<CubePoint> {
        let signs = values
            .iter()
            .map(|&v| {
                Sign::from_i64(v).ok_or_else(|| Error::InvalidParameter(format!("{v} is not ±1")))
            })
            .collect::<Result<Vec<_>>>()?;
        if signs.is_empty() {
            return Err(Error::Empty("cube point"));
        }
        Ok(CubePoint::from_signs(&signs))
    }

    /// Point whose coordinate `i` is +1 iff bit `i` of `mask` is set (dim ≤ 64).
    pub fn from_mask(mask: u64, dim: usize) -> CubePoint {
        assert!((1..=64).contains(&dim));
        let keep = if dim == 64 { u64::MAX } else { (1u64 << dim) - 1 };
        CubePoint {
            words: vec![mask & keep],
            dim,
        }
    }

    /// Packs caller-provided random words (bits beyond `dim` are cleared).
    pub(crate) fn from_words(mut words: Vec<u64>, dim: usize) -> CubePoint {
        debug_assert_eq!(words.len(), Self::words_for(dim));
        let rem = dim % WORD;
        if rem != 0 {
            let last = words.last_mut().unwrap();
            *last &= (1u64 << rem) - 1;
        }
        CubePoint { words, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn is_pos(&self, i: usize) -> bool {
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn get(&self, i: usize) -> Sign {
        if self.is_pos(i) {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        if self.is_pos(i) {
            1.0
        } else {
            -1.0
        }
    }

    /// Negates coordinate `i` in place (the x^{⊗i} operation).
    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn flipped(&self, i: usize) -> CubePoint {
        let mut p = self.clone();
        p.flip(i);
        p
    }

    /// Σ x_i v_i, summed in index order.
    #[inline]
    pub fn dot(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim);
        let mut acc = 0.0;
        for (w, chunk) in self.words.iter().zip(v.chunks(WORD)) {
            let mut bits = *w;
            for &vi in chunk {
                if bits & 1 == 1 {
                    acc += vi;
                } else {
                    acc -= vi;
                }
                bits >>= 1;
            }
        }
        acc
    }

    /// Number of coordinates where `self` and `other` differ.
    pub fn hamming(&self, other: &CubePoint) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.value(i)).collect()
    }

    pub fn write_f64(&self, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.value(i);
        }
    }

    /// Coordinates on `idx`, in the given order.
    pub fn restrict(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.value(i)).collect()
    }
}

impl fmt::Display for CubePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledSample {
    pub x: CubePoint,
    pub y: Sign,
}

/// Where a labeled set came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Clean,
    LabelNoise(f64),
    Contaminated(f64),
}

impl Provenance {
    /// Whether features (not only labels) may have been corrupted.
    pub fn has_feature_contamination(&self) -> bool {
        matches!(self, Provenance::Contaminated(r) if *r > 0.0)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Clean => f.write_str("Clean"),
            Provenance::LabelNoise(r) => write!(f, "LabelNoise({r})"),
            Provenance::Contaminated(r) => write!(f, "Contaminated({r})"),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad provenance tag `{s}`"));
        if s == "Clean" {
            return Ok(Provenance::Clean);
        }
        let (name, rest) = s.split_once('(').ok_or_else(bad)?;
        let rate: f64 = rest
            .strip_suffix(')')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        if !(0.0..1.0).contains(&rate) {
            return Err(bad());
        }
        match name {
            "LabelNoise" => Ok(Provenance::LabelNoise(rate)),
            "Contaminated" => Ok(Provenance::Contaminated(rate)),
            _ => Err(bad()),
        }
    }
}

/// A finite multiset of labeled points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    samples: Vec<LabeledSample>,
    pub provenance: Provenance,
}

impl LabeledSet {
    pub fn new(dim: usize, samples: Vec<LabeledSample>, provenance: Provenance) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.x.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.x.dim(),
            });
        }
        Ok(LabeledSet {
            dim,
            samples,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledSample> {
        self.samples.iter()
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    /// Same provenance, subset of samples.
    pub fn filtered<F: FnMut(&LabeledSample) -> bool>(&self, mut keep: F) -> LabeledSet {
        LabeledSet {
            dim: self.dim,
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            provenance: self.provenance,
        }
    }

    /// Serializes to the text format: a `d=.. n=.. provenance=..` header and
    /// one line of `d` signs followed by the label per sample.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "d={} n={} provenance={}",
            self.dim,
            self.samples.len(),
            self.provenance
        )?;
        let mut line = String::with_capacity(3 * (self.dim + 1));
        for s in &self.samples {
            line.clear();
            for i in 0..self.dim {
                line.push_str(if s.x.is_pos(i) { "+1 " } else { "-1 " });
            }
            line.push_str(if s.y == Sign::Pos { "+1" } else { "-1" });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<LabeledSet> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header.map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        let (dim, n, provenance) = parse_header(&header)?;
        let mut samples = Vec::with_capacity(n);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
            if line.is_empty() {
                continue;
            }
            samples.push(parse_sample(&line, dim, lineno + 1)?);
        }
        if samples.len() != n {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares n={n} but found {} samples", samples.len()),
            });
        }
        LabeledSet::new(dim, samples, provenance)
    }

    pub fn from_text(text: &str) -> Result<LabeledSet> {
        LabeledSet::read_text(text.as_bytes())
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_text(&mut w)?;
        w.flush()
    }

    pub fn load(path: &Path) -> Result<LabeledSet> {
        let f = std::fs::File::open(path).map_err(|e| Error::Parse {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        LabeledSet::read_text(std::io::BufReader::new(f))
    }
}

fn parse_header(header: &str) -> Result<(usize, usize, Provenance)> {
    let err = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let mut parts = header.split(' ');
    let mut field = |key: &str| -> Result<&str> {
        parts
            .next()
            .and_then(|p| p.strip_prefix(key))
            .ok_or_else(|| err(&format!("expected `{key}` field")))
    };
    let dim: usize = field("d=")?.parse().map_err(|_| err("bad d"))?;
    let n: usize = field("n=")?.parse().map_err(|_| err("bad n"))?;
    let provenance: Provenance = field("provenance=")?.parse()?;
    if dim == 0 {
        return Err(err("d must be ≥ 1"));
    }
    Ok((dim, n, provenance))
}

fn parse_sign(tok: &str, line: usize) -> Result<Sign> {
    match tok {
        "+1" => Ok(Sign::Pos),
        "-1" => Ok(Sign::Neg),
        _ => Err(Error::Parse {
            line,
            msg: format!("expected +1 or -1, got `{tok}`"),
        }),
    }
}

fn parse_sample(line: &str, dim: usize, lineno: usize) -> Result<LabeledSample> {
    let toks: Vec<&str> = line.split(' ').collect();
    if toks.len() != dim + 1 {
        return Err(Error::Parse {
            line: lineno,
            msg: format!("expected {} tokens, got {}", dim + 1, toks.len()),
        });
    }
    let mut x = CubePoint::all_ones(dim);
    for (i, tok) in toks[..dim].iter().enumerate() {
        if parse_sign(tok, lineno)? == Sign::Neg {
            x.flip(i);
        }
    }
    let y = parse_sign(toks[dim], lineno)?;
    Ok(LabeledSample { x, y })
}

/// Every point of {±1}^d in mask order (d ≤ 63).
pub fn enumerate_cube(dim: usize) -> impl Iterator<Item = CubePoint> {
    assert!((1..64).contains(&dim));
    (0..(1u64 << dim)).map(move |m| CubePoint::from_mask(m, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_of_zero_is_positive() {
        assert_eq!(Sign::of(0.0), Sign::Pos);
        assert_eq!(Sign::of(-0.0), Sign::Pos);
        assert_eq!(Sign::of(-1e-300), Sign::Neg);
    }

    #[test]
    fn dot_and_flip() {
        let mut p = CubePoint::from_ints(&[1, -1, 1]).unwrap();
        assert_eq!(p.dot(&[1.0, 2.0, 3.0]), 2.0);
        p.flip(1);
        assert_eq!(p.dot(&[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(p.hamming(&CubePoint::all_ones(3)), 0);
    }

    #[test]
    fn from_ints_rejects_non_signs() {
        assert!(CubePoint::from_ints(&[1, 0]).is_err());
        assert!(CubePoint::from_ints(&[]).is_err());
    }

    #[test]
    fn wide_points_cross_word_boundaries() {
        let d = 130;
        let mut p = CubePoint::all_ones(d);
        p.flip(64);
        p.flip(129);
        let v = vec![1.0; d];
        assert_eq!(p.dot(&v), (d as f64) - 4.0);
        assert_eq!(p.get(64), Sign::Neg);
        assert_eq!(p.get(63), Sign::Pos);
    }

    #[test]
    fn header_and_lines() {
        let set = LabeledSet::new(
            2,
            vec![LabeledSample {
                x: CubePoint::from_ints(&[1, -1]).unwrap(),
                y: Sign::Neg,
            }],
            Provenance::LabelNoise(0.01),
        )
        .unwrap();
        assert_eq!(set.to_text(), "d=2 n=1 provenance=LabelNoise(0.01)\n+1 -1 -1\n");
    }

    #[test]
    fn parse_errors() {
        assert!(LabeledSet::from_text("d=2 n=1 provenance=Clean\n+1 -1\n").is_err());
        assert!(LabeledSet::from_text("d=2 n=2 provenance=Clean\n+1 -1 +1\n").is_err());
        assert!(LabeledSet::from_text("d=2 n=1 provenance=Dirty\n+1 -1 +1\n").is_err());
        assert!(LabeledSet::from_text("d=2 n=1 provenance=Clean\n+1 0 +1\n").is_err());
    }

    fn arb_set() -> impl Strategy<Value = LabeledSet> {
        (1usize..80, 0usize..20, 0u8..3, 0.0f64..0.99).prop_flat_map(|(d, n, tag, rate)| {
            proptest::collection::vec(
                (proptest::collection::vec(any::<bool>(), d), any::<bool>()),
                n,
            )
            .prop_map(move |rows| {
                let samples = rows
                    .into_iter()
                    .map(|(bits, y)| LabeledSample {
                        x: CubePoint::from_signs(
                            &bits
                                .iter()
                                .map(|&b| if b { Sign::Pos } else { Sign::Neg })
                                .collect::<Vec<_>>(),
                        ),
                        y: if y { Sign::Pos } else { Sign::Neg },
                    })
                    .collect();
                let prov = match tag {
                    0 => Provenance::Clean,
                    1 => Provenance::LabelNoise(rate),
                    _ => Provenance::Contaminated(rate),
                };
                LabeledSet::new(d, samples, prov).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip_is_bit_exact(set in arb_set()) {
            let text = set.to_text();
            let back = LabeledSet::from_text(&text).unwrap();
            prop_assert_eq!(&back, &set);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
