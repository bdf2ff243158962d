//! Total truth-table functionals on binary sequences and the measures they
//! induce.
//!
//! An input block of `u` bits is a `u64` whose bit `i` is input bit `i`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::markov::MarkovFunction;
use crate::measure::CylinderMeasure;
use crate::numeric::Rational;

/// Largest use for which preimages are enumerated.
pub const MAX_USE: u32 = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TTError {
    #[error("use {used} exceeds the enumeration budget {MAX_USE}")]
    BudgetExceeded { used: u32 },
    #[error("output bit {0} is beyond the materialized table")]
    BeyondTable(usize),
    #[error("use bound must be non-decreasing: u({n}) = {at} < u({prev_n}) = {prev}", prev_n = .n - 1)]
    UseNotMonotone { n: usize, at: u32, prev: u32 },
    #[error("table for bit {n} has {len} entries, expected 2^{used}")]
    TableShape { n: usize, len: usize, used: u32 },
    #[error("function has no declared modulus")]
    NoModulus,
    #[error("function leaves [0,1]: range [{lo}, {hi}]")]
    OutOfUnit { lo: Rational, hi: Rational },
    #[error("unknown functional rule {0:?}")]
    UnknownRule(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TTRule {
    Identity,
    /// Output bit `n` is input bit `2n` OR input bit `2n+1`.
    PairwiseOr,
    BitFlip,
    /// `tables[n][block]` for blocks of `uses[n]` bits.
    Table {
        uses: Vec<u32>,
        tables: Vec<Vec<bool>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TTFunctional {
    rule: TTRule,
    label: String,
}

impl TTFunctional {
    pub fn identity() -> Self {
        TTFunctional {
            rule: TTRule::Identity,
            label: "identity".into(),
        }
    }

    pub fn pairwise_or() -> Self {
        TTFunctional {
            rule: TTRule::PairwiseOr,
            label: "pairwise_or".into(),
        }
    }

    pub fn bit_flip() -> Self {
        TTFunctional {
            rule: TTRule::BitFlip,
            label: "bit_flip".into(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self, TTError> {
        match name.trim() {
            "identity" => Ok(Self::identity()),
            "pairwise_or" => Ok(Self::pairwise_or()),
            "bit_flip" => Ok(Self::bit_flip()),
            other => Err(TTError::UnknownRule(other.into())),
        }
    }

    /// An explicit table, checked for shape and monotone use.
    pub fn table(uses: Vec<u32>, tables: Vec<Vec<bool>>) -> Result<Self, TTError> {
        for (n, w) in uses.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(TTError::UseNotMonotone {
                    n: n + 1,
                    at: w[1],
                    prev: w[0],
                });
            }
        }
        if let Some(&used) = uses.iter().find(|&&u| u > MAX_USE) {
            return Err(TTError::BudgetExceeded { used });
        }
        if tables.len() != uses.len() {
            return Err(TTError::TableShape {
                n: tables.len().min(uses.len()),
                len: 0,
                used: 0,
            });
        }
        for (n, (t, &u)) in tables.iter().zip(&uses).enumerate() {
            if t.len() != 1usize << u {
                return Err(TTError::TableShape {
                    n,
                    len: t.len(),
                    used: u,
                });
            }
        }
        Ok(TTFunctional {
            rule: TTRule::Table { uses, tables },
            label: "table".into(),
        })
    }

    pub fn rule(&self) -> &TTRule {
        &self.rule
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Number of output bits available, if finite.
    pub fn output_depth(&self) -> Option<usize> {
        match &self.rule {
            TTRule::Table { uses, .. } => Some(uses.len()),
            _ => None,
        }
    }

    /// `u(n)`: input bits read to produce output bit `n`.
    pub fn use_bound(&self, n: usize) -> Result<u32, TTError> {
        let n32 = n as u32;
        match &self.rule {
            TTRule::Identity | TTRule::BitFlip => Ok(n32 + 1),
            TTRule::PairwiseOr => Ok(2 * n32 + 2),
            TTRule::Table { uses, .. } => uses.get(n).copied().ok_or(TTError::BeyondTable(n)),
        }
    }

    /// Output bit `n` on an input block holding at least `u(n)` bits.
    pub fn output_bit(&self, n: usize, block: u64) -> Result<bool, TTError> {
        let bit = |i: usize| (block >> i) & 1 == 1;
        match &self.rule {
            TTRule::Identity => Ok(bit(n)),
            TTRule::BitFlip => Ok(!bit(n)),
            TTRule::PairwiseOr => Ok(bit(2 * n) || bit(2 * n + 1)),
            TTRule::Table { uses, tables } => {
                let u = *uses.get(n).ok_or(TTError::BeyondTable(n))?;
                let mask = if u == 64 { u64::MAX } else { (1u64 << u) - 1 };
                Ok(tables[n][(block & mask) as usize])
            }
        }
    }

    /// The first `n` output bits on a block.
    fn outputs(&self, n: usize, block: u64) -> Result<u64, TTError> {
        let mut out = 0u64;
        for i in 0..n {
            if self.output_bit(i, block)? {
                out |= 1 << i;
            }
        }
        Ok(out)
    }

    /// All output bits determined by a finite input prefix.
    pub fn apply(&self, input: &BitString) -> Result<BitString, TTError> {
        let block = input
            .bits()
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        let mut out = BitString::empty();
        let mut n = 0;
        while self.output_depth().is_none_or(|d| n < d)
            && self.use_bound(n)? as usize <= input.len().min(64)
        {
            out.push(self.output_bit(n, block)?);
            n += 1;
        }
        Ok(out)
    }
}

fn pack(sigma: &BitString) -> u64 {
    sigma
        .bits()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
}

/// `λ_Φ([σ]) = #{blocks of u(|σ|-1) bits whose outputs begin with σ} / 2^u`.
pub fn induced_measure(phi: &TTFunctional, sigma: &BitString) -> Result<Rational, TTError> {
    let n = sigma.len();
    if n == 0 {
        return Ok(Rational::one());
    }
    let used = phi.use_bound(n - 1)?;
    if used > MAX_USE {
        return Err(TTError::BudgetExceeded { used });
    }
    let target = pack(sigma);
    let mut count = 0u64;
    for block in 0..1u64 << used {
        if phi.outputs(n, block)? == target {
            count += 1;
        }
    }
    Ok(Rational::from_integer(count as i64) / Rational::pow2(used as i64))
}

/// `λ_Φ` on every cylinder up to `depth`, from one pass over the blocks of
/// `u(depth-1)` bits.
pub fn induced_cylinder_measure(
    phi: &TTFunctional,
    depth: u32,
) -> Result<CylinderMeasure, TTError> {
    if depth == 0 {
        return Ok(CylinderMeasure::table(vec![vec![Rational::one()]])
            .with_label(format!("λ_Φ {}", phi.label)));
    }
    let used = phi.use_bound(depth as usize - 1)?;
    if used > MAX_USE {
        return Err(TTError::BudgetExceeded { used });
    }
    let mut counts = vec![0u64; 1 << depth];
    for block in 0..1u64 << used {
        let out = phi.outputs(depth as usize, block)?;
        // Output bit 0 is the most significant bit of the cylinder index.
        let index = (0..depth).fold(0u64, |acc, i| (acc << 1) | ((out >> i) & 1));
        counts[index as usize] += 1;
    }
    let total = Rational::pow2(used as i64);
    let mut levels = vec![counts
        .iter()
        .map(|&c| Rational::from_integer(c as i64) / &total)
        .collect::<Vec<_>>()];
    for _ in 0..depth {
        let next: Vec<Rational> = levels
            .last()
            .unwrap()
            .chunks(2)
            .map(|c| &c[0] + &c[1])
            .collect();
        levels.push(next);
    }
    levels.reverse();
    Ok(CylinderMeasure::table(levels).with_label(format!("λ_Φ {}", phi.label)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcfFunctional {
    pub functional: TTFunctional,
    /// Output bits whose image interval straddled a dyadic cut.
    pub undetermined: usize,
}

/// A tt-functional computing the binary expansion of `g`, from its modulus.
///
/// Output bit `n` reads `u(n)` bits, the least `k` with
/// `θ(2^-(n+2)) ≥ 2^-k`, and takes bit `n` of the lower end of the image of
/// the closed input cylinder. When the image straddles a cut of width
/// `2^-(n+1)` that lower-end bit is still used (rounding down).
pub fn tt_from_ucf(g: &MarkovFunction, depth: usize) -> Result<UcfFunctional, TTError> {
    let theta = g.modulus().ok_or(TTError::NoModulus)?;
    let (lo, hi) = g.range_over(&Rational::zero(), &Rational::one());
    if lo.is_negative() || hi > Rational::one() {
        return Err(TTError::OutOfUnit { lo, hi });
    }
    let mut uses = Vec::with_capacity(depth);
    let mut tables = Vec::with_capacity(depth);
    let mut undetermined = 0;
    let mut prev = 0u32;
    for n in 0..depth {
        let u = theta.precision_for(n as u32 + 2).max(prev);
        if u > MAX_USE {
            return Err(TTError::BudgetExceeded { used: u });
        }
        prev = u;
        let cells = Rational::pow2(n as i64 + 1);
        let width = Rational::pow2(-(u as i64));
        let mut table = Vec::with_capacity(1 << u);
        for block in 0..1u64 << u {
            // Block bit i is input bit i, so reverse into a cylinder index.
            let index = (0..u).fold(0u64, |acc, i| (acc << 1) | ((block >> i) & 1));
            let left = Rational::dyadic(index, u);
            let right = &left + &width;
            let (lo, hi) = g.range_over(&left, &right);
            let cell = (&lo * &cells).floor();
            let next_cut = Rational::from_bigint(&cell + 1) / &cells;
            if hi > next_cut {
                undetermined += 1;
            }
            table.push(cell.bit(0));
        }
        uses.push(u);
        tables.push(table);
    }
    let functional = TTFunctional::table(uses, tables)?.with_label(format!("tt({})", g.label()));
    Ok(UcfFunctional {
        functional,
        undetermined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn named_measures() {
        assert_eq!(
            induced_measure(&TTFunctional::identity(), &b("1")).unwrap(),
            q("1/2")
        );
        let or = TTFunctional::pairwise_or();
        assert_eq!(induced_measure(&or, &b("1")).unwrap(), q("3/4"));
        assert_eq!(induced_measure(&or, &b("11")).unwrap(), q("9/16"));
        assert_eq!(
            induced_measure(&TTFunctional::bit_flip(), &b("10")).unwrap(),
            q("1/4")
        );
    }

    #[test]
    fn apply_rules() {
        assert_eq!(
            TTFunctional::pairwise_or().apply(&b("0001")).unwrap(),
            b("01")
        );
        assert_eq!(
            TTFunctional::bit_flip().apply(&b("0110")).unwrap(),
            b("1001")
        );
    }

    #[test]
    fn materialized_matches_direct() {
        let or = TTFunctional::pairwise_or();
        let mu = induced_cylinder_measure(&or, 4).unwrap();
        for n in 0..=4 {
            for sigma in BitString::all_of_length(n) {
                assert_eq!(
                    mu.mass(&sigma).unwrap(),
                    induced_measure(&or, &sigma).unwrap()
                );
            }
        }
    }

    #[test]
    fn ucf_identity_and_half() {
        let id = tt_from_ucf(&MarkovFunction::identity(), 10).unwrap();
        let half = tt_from_ucf(&MarkovFunction::half(), 10).unwrap();
        let flip = tt_from_ucf(&MarkovFunction::complement(), 10).unwrap();
        for x in ["0110100111", "1111111111", "0000000001", "1010110011"] {
            let x = b(x);
            let input = x.concat(&b("01"));
            assert_eq!(id.functional.apply(&input).unwrap().prefix(10), x);
            assert_eq!(
                half.functional.apply(&input).unwrap().prefix(10),
                b("0").concat(&x).prefix(10)
            );
            let flipped = BitString::from_bits(x.bits().iter().map(|b| !b).collect());
            assert_eq!(flip.functional.apply(&input).unwrap().prefix(10), flipped);
        }
        assert!(tt_from_ucf(&MarkovFunction::canonical_nonuc(3).unwrap(), 4).is_err());
    }

    #[test]
    fn table_shape_checked() {
        assert!(
            TTFunctional::table(vec![1, 1], vec![vec![false, true], vec![true, false]]).is_ok()
        );
        assert!(matches!(
            TTFunctional::table(vec![2, 1], vec![vec![false; 4], vec![true, false]]),
            Err(TTError::UseNotMonotone { .. })
        ));
        assert!(matches!(
            TTFunctional::table(vec![2], vec![vec![false; 3]]),
            Err(TTError::TableShape { .. })
        ));
    }
}
