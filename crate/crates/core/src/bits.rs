//! Bit-packed feature vectors.
//!
//! Coordinates are packed 64 per `u64` word, little-endian: coordinate `c`
//! lives in word `c / 64` at bit `c % 64`.

use crate::{Error, Result};

pub const WORD_BITS: usize = 64;

#[inline]
pub fn words_for(d: usize) -> usize {
    d.div_ceil(WORD_BITS).max(1)
}

#[inline]
pub fn get_bit(words: &[u64], coord: usize) -> bool {
    (words[coord / WORD_BITS] >> (coord % WORD_BITS)) & 1 == 1
}

#[inline]
pub fn set_bit(words: &mut [u64], coord: usize, value: bool) {
    let mask = 1u64 << (coord % WORD_BITS);
    if value {
        words[coord / WORD_BITS] |= mask;
    } else {
        words[coord / WORD_BITS] &= !mask;
    }
}

/// A single point of `{0,1}^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitVector {
    d: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            words: vec![0; words_for(d)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (c, &b) in bits.iter().enumerate() {
            v.set(c, b);
        }
        v
    }

    /// Builds a vector from `0`/`1` bytes.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut v = Self::zeros(bits.len());
        for (c, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => v.set(c, true),
                other => {
                    return Err(Error::InvalidDataset(format!(
                        "bit value {other} at coordinate {c}"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// The `index`-th point of `{0,1}^d` in little-endian order (bit `c` of
    /// `index` is coordinate `c`). Requires `d <= 64`.
    pub fn from_index(d: usize, index: u64) -> Self {
        assert!(d <= 64, "from_index supports d <= 64");
        let mut v = Self::zeros(d);
        if d > 0 {
            let mask = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
            v.words[0] = index & mask;
        }
        v
    }

    pub fn from_words(d: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(d) {
            return Err(Error::DimensionMismatch {
                expected: words_for(d),
                actual: words.len(),
            });
        }
        let mut v = Self { d, words };
        v.clear_padding();
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn get(&self, coord: usize) -> bool {
        debug_assert!(coord < self.d);
        get_bit(&self.words, coord)
    }

    #[inline]
    pub fn set(&mut self, coord: usize, value: bool) {
        debug_assert!(coord < self.d);
        set_bit(&mut self.words, coord, value);
    }

    pub fn flip(&mut self, coord: usize) {
        let b = self.get(coord);
        self.set(coord, !b);
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.d).map(|c| u8::from(self.get(c))).collect()
    }

    fn clear_padding(&mut self) {
        let tail = self.d % WORD_BITS;
        if tail != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << tail) - 1;
        }
        if self.d == 0 {
            self.words[0] = 0;
        }
    }
}

/// Row-major matrix of `n` packed vectors of dimension `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    d: usize,
    stride: usize,
    rows: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            stride: words_for(d),
            rows: 0,
            words: Vec::new(),
        }
    }

    pub fn with_capacity(d: usize, rows: usize) -> Self {
        let stride = words_for(d);
        Self {
            d,
            stride,
            rows: 0,
            words: Vec::with_capacity(rows * stride),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn push(&mut self, v: &BitVector) -> Result<()> {
        if v.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: v.dim(),
            });
        }
        self.words.extend_from_slice(v.words());
        self.rows += 1;
        Ok(())
    }

    pub(crate) fn push_words(&mut self, words: &[u64]) {
        debug_assert_eq!(words.len(), self.stride);
        self.words.extend_from_slice(words);
        self.rows += 1;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, i: usize, coord: usize) -> bool {
        (self.words[i * self.stride + coord / WORD_BITS] >> (coord % WORD_BITS)) & 1 == 1
    }

    pub fn row_vector(&self, i: usize) -> BitVector {
        BitVector {
            d: self.d,
            words: self.row(i).to_vec(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> BitMatrix {
        let mut out = BitMatrix::with_capacity(self.d, indices.len());
        for &i in indices {
            out.push_words(self.row(i));
        }
        out
    }
}
