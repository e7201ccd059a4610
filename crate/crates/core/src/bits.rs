//! Word-packed bit vectors and the bit/byte/hex conventions used across the
//! crate: bit files are raw bytes consumed most-significant-bit first, keys
//! are hex strings whose first hex bit is the first key bit.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitsError {
    #[error("invalid hex character {0:?}")]
    BadHexDigit(char),
    #[error("expected {expected} hex digits, got {got}")]
    BadHexLength { expected: usize, got: usize },
    #[error("padding bits past the declared width must be zero")]
    NonZeroPadding,
}

/// Bit vector packed into `u64` words. Bit `i` lives in word `i / 64` at
/// position `i % 64`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// All-zero vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range (len {})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        if value {
            self.set(self.len - 1, true);
        }
    }

    /// XOR `other` into `self`. Lengths must match.
    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch in xor_assign");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w ^= o;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Index of the lowest set bit, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                let i = wi * 64 + w.trailing_zeros() as usize;
                return (i < self.len).then_some(i);
            }
        }
        None
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Parity of the AND with `other`, i.e. the GF(2) dot product.
    #[inline]
    pub fn dot(&self, other: &BitVec) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot");
        let mut acc = 0u64;
        for (w, o) in self.words.iter().zip(&other.words) {
            acc ^= w & o;
        }
        acc.count_ones() & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec[")?;
        for b in self.iter() {
            write!(f, "{}", if b { 1 } else { 0 })?;
        }
        write!(f, "]")
    }
}

impl FromIterator<bool> for BitVec {
    fn from_iter<T: IntoIterator<Item = bool>>(iter: T) -> Self {
        let mut v = BitVec::new();
        for b in iter {
            v.push(b);
        }
        v
    }
}

/// First `n` bits of a byte stream, most-significant bit of each byte first.
pub fn bits_from_bytes_msb(bytes: &[u8], n: usize) -> BitVec {
    assert!(n <= bytes.len() * 8, "requested more bits than supplied");
    (0..n)
        .map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1 == 1)
        .collect()
}

/// Pack bits into bytes, most-significant bit first; the final partial byte
/// is zero-padded at the low end.
pub fn bits_to_bytes_msb(bits: &BitVec) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (7 - i % 8);
        }
    }
    out
}

/// Parse a hex string into `width` bits, first hex bit first. The string must
/// have exactly `ceil(width / 4)` digits and any trailing pad bits must be
/// zero.
pub fn bits_from_hex(s: &str, width: usize) -> Result<BitVec, BitsError> {
    let expected = width.div_ceil(4);
    let digits: Vec<char> = s.trim().chars().collect();
    if digits.len() != expected {
        return Err(BitsError::BadHexLength {
            expected,
            got: digits.len(),
        });
    }
    let mut all = Vec::with_capacity(digits.len() * 4);
    for c in digits {
        let d = c.to_digit(16).ok_or(BitsError::BadHexDigit(c))? as u8;
        for shift in (0..4).rev() {
            all.push((d >> shift) & 1 == 1);
        }
    }
    if all[width..].iter().any(|&b| b) {
        return Err(BitsError::NonZeroPadding);
    }
    Ok(BitVec::from_bools(&all[..width]))
}

/// Render bits as hex, first bit first; pads the final digit with zero bits.
pub fn bits_to_hex(bits: &BitVec) -> String {
    let mut s = String::with_capacity(bits.len().div_ceil(4));
    for chunk_start in (0..bits.len()).step_by(4) {
        let mut d = 0u8;
        for offset in 0..4 {
            d <<= 1;
            if chunk_start + offset < bits.len() && bits.get(chunk_start + offset) {
                d |= 1;
            }
        }
        s.push(char::from_digit(d as u32, 16).unwrap().to_ascii_uppercase());
    }
    s
}
