//! Finite binary strings and the dyadic intervals they name.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::numeric::{Rational, RationalInterval};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a bit string: {0:?}")]
pub struct BadBits(pub String);

/// A finite binary string `σ`.
///
/// Ordered by length first, then lexicographically, which is the canonical
/// enumeration order used for reports.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    /// The `len` low-order bits of `value`, most significant first.
    pub fn from_index(value: u64, len: u32) -> Self {
        BitString((0..len).rev().map(|i| (value >> i) & 1 == 1).collect())
    }

    /// Inverse of [`BitString::from_index`]; only meaningful for `len ≤ 64`.
    pub fn index(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn child(&self, b: bool) -> Self {
        let mut v = self.0.clone();
        v.push(b);
        BitString(v)
    }

    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }

    pub fn prefix(&self, len: usize) -> Self {
        BitString(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(self.prefix(self.0.len() - 1))
        }
    }

    /// `self ⪯ other`: self is a (not necessarily proper) prefix of other.
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    pub fn compatible(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitString(v)
    }

    /// All strings of length `len`, in lexicographic order.
    pub fn all_of_length(len: u32) -> impl Iterator<Item = BitString> {
        (0..1u64 << len).map(move |i| BitString::from_index(i, len))
    }

    /// `0.σ` as a dyadic rational.
    pub fn left_end(&self) -> Rational {
        if self.0.len() <= 63 {
            Rational::dyadic(self.index(), self.0.len() as u32)
        } else {
            self.0
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| Rational::pow2(-(i as i64) - 1))
                .sum()
        }
    }

    /// `0.σ + 2^-|σ|`.
    pub fn right_end(&self) -> Rational {
        self.left_end() + Rational::pow2(-(self.0.len() as i64))
    }
}

/// The half-open interval `[0.σ, 0.σ + 2^-|σ|)` represented by `σ`.
pub fn dyadic_cylinder(sigma: &BitString) -> RationalInterval {
    RationalInterval::half_open(sigma.left_end(), sigma.right_end())
}

/// The longest string `c` with `[0.c, 0.c + 2^-|c|) ⊇ [lo, hi)`, capped at
/// `max_len` bits. Requires `0 ≤ lo < hi ≤ 1`.
pub fn longest_cylinder_containing(lo: &Rational, hi: &Rational, max_len: usize) -> BitString {
    let mut c = BitString::empty();
    let mut left = Rational::zero();
    let mut width = Rational::one();
    while c.len() < max_len {
        width = width.half();
        let mid = &left + &width;
        if *hi <= mid {
            c.push(false);
        } else if *lo >= mid {
            c.push(true);
            left = mid;
        } else {
            break;
        }
    }
    c
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{}\"", self)
    }
}

impl FromStr for BitString {
    type Err = BadBits;

    /// `""` and `"ε"` both denote the empty string.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "ε" {
            return Ok(BitString::empty());
        }
        t.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(BadBits(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString)
    }
}
