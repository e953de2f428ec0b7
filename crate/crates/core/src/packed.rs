//! Dot products and weighted sums over packed ±1 points, eight coordinates
//! per table lookup.

use crate::cube::CubePoint;

/// Precomputed partial sums Σ_{j<8} v_{8c+j}·x_{8c+j} for every byte value.
pub(crate) struct ByteDot {
    tables: Vec<[f64; 256]>,
}

impl ByteDot {
    pub fn new(v: &[f64]) -> ByteDot {
        let chunks = v.len().div_ceil(8);
        let mut tables = vec![[0.0; 256]; chunks];
        for (c, t) in tables.iter_mut().enumerate() {
            let w = |j: usize| v.get(8 * c + j).copied().unwrap_or(0.0);
            t[0] = -(0..8).map(w).sum::<f64>();
            for b in 1..256usize {
                let low = b.trailing_zeros() as usize;
                t[b] = t[b & (b - 1)] + 2.0 * w(low);
            }
        }
        ByteDot { tables }
    }

    pub fn dot(&self, x: &CubePoint) -> f64 {
        let mut total = 0.0;
        let mut c = 0;
        for &word in x.words() {
            let mut word = word;
            for _ in 0..8 {
                if c == self.tables.len() {
                    return total;
                }
                total += self.tables[c][(word & 0xff) as usize];
                word >>= 8;
                c += 1;
            }
        }
        total
    }
}

/// Accumulates Σ coef·x over packed points, then unpacks to a dense vector.
pub(crate) struct ByteAccum {
    dim: usize,
    hist: Vec<[f64; 256]>,
}

impl ByteAccum {
    pub fn new(dim: usize) -> ByteAccum {
        ByteAccum { dim, hist: vec![[0.0; 256]; dim.div_ceil(8)] }
    }

    pub fn add(&mut self, x: &CubePoint, coef: f64) {
        let mut c = 0;
        for &word in x.words() {
            let mut word = word;
            for _ in 0..8 {
                if c == self.hist.len() {
                    return;
                }
                self.hist[c][(word & 0xff) as usize] += coef;
                word >>= 8;
                c += 1;
            }
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (c, h) in self.hist.iter().enumerate() {
            for j in 0..8 {
                let i = 8 * c + j;
                if i >= self.dim {
                    break;
                }
                let mut s = 0.0;
                for (b, &v) in h.iter().enumerate() {
                    if v != 0.0 {
                        s += if b >> j & 1 == 1 { v } else { -v };
                    }
                }
                out[i] = s;
            }
        }
        out
    }
}
