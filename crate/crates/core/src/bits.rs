//! Packed GF(2) vectors and row-major binary matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

const WORD: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// A fixed-length vector over GF(2), stored as packed 64-bit words.
///
/// Bits past `len` in the last word are always zero, so word-level
/// equality, popcount and parity never see garbage.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { words: vec![0; words_for(len)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVec { words: vec![u64::MAX; words_for(len)], len };
        v.clear_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Builds a vector with ones at the listed positions.
    pub fn from_support(len: usize, support: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in support {
            v.set(i, true);
        }
        v
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place XOR. Panics on length mismatch; callers validate lengths first.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVec) -> BitVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// GF(2) inner product: parity of the AND.
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let acc = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones());
        acc & 1 == 1
    }

    /// Positions of set bits in increasing order.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let tz = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD + tz)
                }
            })
        })
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

impl Serialize for BitVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitVec::parse(&s).ok_or_else(|| serde::de::Error::custom("expected a string of 0/1 characters"))
    }
}

/// Row-major binary matrix; each row is a packed [`BitVec`].
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<BitVec>) -> Self {
        if let Some(first) = rows.first() {
            assert!(rows.iter().all(|r| r.len() == first.len()), "ragged binary matrix");
        }
        BitMatrix { rows }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.first().map_or(0, BitVec::len)
    }

    pub fn row(&self, i: usize) -> &BitVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        out
    }

    /// Column `c` as a vector of length `n_rows`.
    pub fn column(&self, c: usize) -> BitVec {
        let mut out = BitVec::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.get(c) {
                out.set(i, true);
            }
        }
        out
    }

    /// `self · otherᵀ` over GF(2); entry (i, j) is the overlap parity of row i and row j.
    pub fn mul_transpose(&self, other: &BitMatrix) -> BitMatrix {
        let rows = self
            .rows
            .iter()
            .map(|a| {
                let mut out = BitVec::zeros(other.n_rows());
                for (j, b) in other.rows.iter().enumerate() {
                    if a.dot(b) {
                        out.set(j, true);
                    }
                }
                out
            })
            .collect();
        BitMatrix { rows }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(BitVec::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_clears_tail_bits() {
        let v = BitVec::ones(70);
        assert_eq!(v.weight(), 70);
        assert_eq!(v.words()[1], (1u64 << 6) - 1);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(BitVec::parse("0102").is_none());
        assert_eq!(BitVec::parse("101").unwrap(), BitVec::from_support(3, &[0, 2]));
    }

    #[test]
    fn xor_small_case() {
        let a = BitVec::parse("101").unwrap();
        let b = BitVec::parse("110").unwrap();
        assert_eq!(a.xor(&b).to_bit_string(), "011");
    }

    proptest! {
        #[test]
        fn dot_matches_naive(bits in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..200)) {
            let a: Vec<bool> = bits.iter().map(|p| p.0).collect();
            let b: Vec<bool> = bits.iter().map(|p| p.1).collect();
            let naive = a.iter().zip(&b).filter(|(x, y)| **x && **y).count() % 2 == 1;
            prop_assert_eq!(BitVec::from_bools(&a).dot(&BitVec::from_bools(&b)), naive);
        }

        #[test]
        fn string_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..150)) {
            let v = BitVec::from_bools(&bits);
            prop_assert_eq!(BitVec::parse(&v.to_bit_string()).unwrap(), v.clone());
            let support: Vec<usize> = v.ones_iter().collect();
            prop_assert_eq!(BitVec::from_support(bits.len(), &support), v);
        }
    }
}
