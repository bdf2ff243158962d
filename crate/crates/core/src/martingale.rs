//! Martingales as exact finite-depth tables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitString;
use crate::numeric::Rational;

pub const MAX_DEPTH: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MartingaleError {
    #[error("depth {0} exceeds {MAX_DEPTH}")]
    DepthTooLarge(u32),
    #[error("table has depth {have}, {want} requested")]
    TooShallow { have: u32, want: u32 },
    #[error("table is missing {0}")]
    Missing(BitString),
    #[error("negative capital {value} at {sigma}")]
    Negative { sigma: BitString, value: Rational },
    #[error("split_bet needs 0 ≤ p ≤ 1, got {0}")]
    BadFraction(Rational),
    #[error("unknown martingale rule {0:?}")]
    UnknownRule(String),
}

/// `levels[n][i]` is the capital at the string of length `n` with index `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Martingale {
    levels: Vec<Vec<Rational>>,
    label: String,
}

fn check_depth(depth: u32) -> Result<(), MartingaleError> {
    if depth > MAX_DEPTH {
        Err(MartingaleError::DepthTooLarge(depth))
    } else {
        Ok(())
    }
}

impl Martingale {
    fn generate(
        depth: u32,
        label: String,
        root: Rational,
        split: impl Fn(&Rational) -> (Rational, Rational),
    ) -> Self {
        let mut levels = vec![vec![root]];
        for _ in 0..depth {
            let next = levels.last().unwrap().iter().flat_map(|v| {
                let (a, b) = split(v);
                [a, b]
            });
            levels.push(next.collect());
        }
        Martingale { levels, label }
    }

    /// Never bets: `M(σ) = c` everywhere.
    pub fn constant(c: Rational, depth: u32) -> Result<Self, MartingaleError> {
        check_depth(depth)?;
        if c.is_negative() {
            return Err(MartingaleError::Negative {
                sigma: BitString::empty(),
                value: c,
            });
        }
        Ok(Self::generate(depth, format!("constant {}", c), c, |v| {
            (v.clone(), v.clone())
        }))
    }

    /// Stakes everything on 0 at every step, starting from 1.
    pub fn all_in_on_0(depth: u32) -> Result<Self, MartingaleError> {
        check_depth(depth)?;
        let two = Rational::from_integer(2);
        Ok(Self::generate(
            depth,
            "all_in_on_0".into(),
            Rational::one(),
            |v| (v * &two, Rational::zero()),
        ))
    }

    /// Splits capital so that `M(σ0) = 2p·M(σ)` and `M(σ1) = 2(1-p)·M(σ)`.
    pub fn split_bet(p: Rational, depth: u32) -> Result<Self, MartingaleError> {
        check_depth(depth)?;
        if p.is_negative() || p > Rational::one() {
            return Err(MartingaleError::BadFraction(p));
        }
        let zero_share = &p + &p;
        let one_share = Rational::from_integer(2) - &zero_share;
        Ok(Self::generate(
            depth,
            format!("split_bet({})", p),
            Rational::one(),
            |v| (v * &zero_share, v * &one_share),
        ))
    }

    /// A rule name: `constant`, `constant c`, `all_in_on_0`, `split_bet(p)`.
    pub fn from_rule(rule: &str, depth: u32) -> Result<Self, MartingaleError> {
        let r = rule.trim();
        let unknown = || MartingaleError::UnknownRule(rule.into());
        if r == "constant" {
            return Self::constant(Rational::one(), depth);
        }
        if let Some(c) = r.strip_prefix("constant ") {
            return Self::constant(c.trim().parse().map_err(|_| unknown())?, depth);
        }
        if r == "all_in_on_0" {
            return Self::all_in_on_0(depth);
        }
        if let Some(p) = r
            .strip_prefix("split_bet(")
            .and_then(|s| s.strip_suffix(')'))
        {
            return Self::split_bet(p.trim().parse().map_err(|_| unknown())?, depth);
        }
        Err(unknown())
    }

    /// An explicit table; it must hold every string up to its longest key.
    /// Fairness is not checked here.
    pub fn from_table(table: &BTreeMap<BitString, Rational>) -> Result<Self, MartingaleError> {
        let depth = table
            .keys()
            .map(BitString::len)
            .max()
            .ok_or(MartingaleError::Missing(BitString::empty()))?;
        check_depth(depth as u32)?;
        let mut levels = Vec::with_capacity(depth + 1);
        for n in 0..=depth as u32 {
            let mut level = Vec::with_capacity(1 << n);
            for sigma in BitString::all_of_length(n) {
                let v = table
                    .get(&sigma)
                    .ok_or_else(|| MartingaleError::Missing(sigma.clone()))?;
                if v.is_negative() {
                    return Err(MartingaleError::Negative {
                        sigma,
                        value: v.clone(),
                    });
                }
                level.push(v.clone());
            }
            levels.push(level);
        }
        Ok(Martingale {
            levels,
            label: "table".into(),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn initial_capital(&self) -> &Rational {
        &self.levels[0][0]
    }

    pub fn value(&self, sigma: &BitString) -> Option<&Rational> {
        self.levels.get(sigma.len())?.get(sigma.index() as usize)
    }

    pub fn level(&self, n: u32) -> Option<&[Rational]> {
        self.levels.get(n as usize).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FairnessViolation {
    /// `2·M(σ) ≠ M(σ0) + M(σ1)`.
    Unfair {
        sigma: BitString,
        doubled: Rational,
        children: Rational,
    },
    Negative {
        sigma: BitString,
        value: Rational,
    },
}

/// Exact fairness and non-negativity for every `σ` with `|σ| < depth`.
pub fn check_fairness(
    m: &Martingale,
    depth: u32,
) -> Result<Result<(), FairnessViolation>, MartingaleError> {
    check_depth(depth)?;
    if depth > m.depth() {
        return Err(MartingaleError::TooShallow {
            have: m.depth(),
            want: depth,
        });
    }
    for n in 0..=depth {
        for (i, v) in m.levels[n as usize].iter().enumerate() {
            let sigma = || BitString::from_index(i as u64, n);
            if v.is_negative() {
                return Ok(Err(FairnessViolation::Negative {
                    sigma: sigma(),
                    value: v.clone(),
                }));
            }
            if n < depth {
                let next = &m.levels[n as usize + 1];
                let children = &next[2 * i] + &next[2 * i + 1];
                let doubled = v + v;
                if doubled != children {
                    return Ok(Err(FairnessViolation::Unfair {
                        sigma: sigma(),
                        doubled,
                        children,
                    }));
                }
            }
        }
    }
    Ok(Ok(()))
}

/// `Σ_{|σ|=n} M(σ)`; equals `2^n·M(ε)` for a fair martingale.
pub fn level_sum(m: &Martingale, n: u32) -> Option<Rational> {
    m.level(n).map(|l| l.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapitalTrace {
    /// Capital after each prefix of length `0..=|prefix|`.
    pub values: Vec<Rational>,
    pub running_max: Vec<Rational>,
}

pub fn capital_trace(m: &Martingale, prefix: &BitString) -> Result<CapitalTrace, MartingaleError> {
    if prefix.len() as u32 > m.depth() {
        return Err(MartingaleError::TooShallow {
            have: m.depth(),
            want: prefix.len() as u32,
        });
    }
    let values: Vec<Rational> = (0..=prefix.len())
        .map(|n| m.value(&prefix.prefix(n)).unwrap().clone())
        .collect();
    let mut best = values[0].clone();
    let running_max = values
        .iter()
        .map(|v| {
            if *v > best {
                best = v.clone();
            }
            best.clone()
        })
        .collect();
    Ok(CapitalTrace {
        values,
        running_max,
    })
}

/// A pair `σ ⪯ τ` with `M(τ) < M(σ) - 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SavingsViolation {
    pub sigma: BitString,
    pub tau: BitString,
    pub at_sigma: Rational,
    pub at_tau: Rational,
}

/// First savings violation with `|τ| ≤ depth`, scanning `σ` in length-lex
/// order and comparing against the least capital below it.
pub fn find_savings_violation(
    m: &Martingale,
    depth: u32,
) -> Result<Option<SavingsViolation>, MartingaleError> {
    check_depth(depth)?;
    if depth > m.depth() {
        return Err(MartingaleError::TooShallow {
            have: m.depth(),
            want: depth,
        });
    }
    let two = Rational::from_integer(2);
    for n in 0..=depth {
        for i in 0..1u64 << n {
            let sigma = BitString::from_index(i, n);
            let at_sigma = &m.levels[n as usize][i as usize];
            let floor = at_sigma - &two;
            for len in n + 1..=depth {
                let width = len - n;
                for j in 0..1u64 << width {
                    let idx = (i << width) | j;
                    let at_tau = &m.levels[len as usize][idx as usize];
                    if *at_tau < floor {
                        return Ok(Some(SavingsViolation {
                            sigma,
                            tau: BitString::from_index(idx, len),
                            at_sigma: at_sigma.clone(),
                            at_tau: at_tau.clone(),
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SavingsTransform {
    pub martingale: Martingale,
    /// Coefficient `c` of the achieved relation
    /// `max M′ ≥ c·⌊log2 max M⌋ - offset` along every path.
    pub coefficient: Rational,
    /// Smallest offset making the relation hold to the transform's depth.
    pub offset: Rational,
}

/// Bank-and-work savings scheme.
///
/// Working capital starts at `min(M(ε), 1)` with the rest banked, follows
/// the bets of `M` in proportion, and whenever it reaches 2 half of it is
/// moved to the bank. Working capital therefore stays below 2 and banked
/// capital is never bet, so no extension loses more than 2.
pub fn savings_transform(m: &Martingale, depth: u32) -> Result<SavingsTransform, MartingaleError> {
    check_depth(depth)?;
    if depth > m.depth() {
        return Err(MartingaleError::TooShallow {
            have: m.depth(),
            want: depth,
        });
    }
    let two = Rational::from_integer(2);
    let root = m.initial_capital().clone();
    let work0 = root.clone().min(Rational::one());
    // Per node: (bank, work, running max of M, running max of M′).
    let mut state = vec![(&root - &work0, work0, root.clone(), root.clone())];
    let mut levels = vec![vec![root.clone()]];
    let coefficient = Rational::one();
    let mut offset = Rational::zero();
    let mut note = |m_max: &Rational, t_max: &Rational| {
        if let Some(k) = m_max.floor_log2() {
            let gap = Rational::from_integer(k) - t_max;
            if gap > offset {
                offset = gap;
            }
        }
    };
    note(&root, &root);
    for n in 0..depth as usize {
        let mut next_state = Vec::with_capacity(state.len() * 2);
        let mut next_level = Vec::with_capacity(state.len() * 2);
        for (i, (bank, work, m_max, t_max)) in state.iter().enumerate() {
            let parent = &m.levels[n][i];
            for b in 0..2 {
                let child = &m.levels[n + 1][2 * i + b];
                let mut w = if parent.is_zero() {
                    Rational::zero()
                } else {
                    work * child / parent
                };
                let mut k = bank.clone();
                if w >= two {
                    let half = w.half();
                    k = k + &half;
                    w = half;
                }
                let value = &k + &w;
                let m_max = m_max.clone().max(child.clone());
                let t_max = t_max.clone().max(value.clone());
                note(&m_max, &t_max);
                next_level.push(value);
                next_state.push((k, w, m_max, t_max));
            }
        }
        state = next_state;
        levels.push(next_level);
    }
    let label = format!("savings({})", m.label);
    Ok(SavingsTransform {
        martingale: Martingale { levels, label },
        coefficient,
        offset,
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
    fn fairness_examples() {
        assert_eq!(
            check_fairness(&Martingale::constant(q("1"), 8).unwrap(), 8).unwrap(),
            Ok(())
        );
        assert_eq!(
            check_fairness(&Martingale::all_in_on_0(8).unwrap(), 8).unwrap(),
            Ok(())
        );
        let table: BTreeMap<BitString, Rational> =
            [(b(""), q("1")), (b("0"), q("2")), (b("1"), q("1"))]
                .into_iter()
                .collect();
        let m = Martingale::from_table(&table).unwrap();
        assert_eq!(
            check_fairness(&m, 1).unwrap(),
            Err(FairnessViolation::Unfair {
                sigma: b(""),
                doubled: q("2"),
                children: q("3")
            })
        );
    }

    #[test]
    fn traces() {
        let m = Martingale::all_in_on_0(4).unwrap();
        assert_eq!(
            capital_trace(&m, &b("00")).unwrap().values,
            [q("1"), q("2"), q("4")]
        );
        let t = capital_trace(&m, &b("01")).unwrap();
        assert_eq!(t.values, [q("1"), q("2"), q("0")]);
        assert_eq!(t.running_max, [q("1"), q("2"), q("2")]);
        let c = Martingale::constant(q("1"), 4).unwrap();
        assert!(capital_trace(&c, &b("0110"))
            .unwrap()
            .values
            .iter()
            .all(|v| *v == q("1")));
    }

    #[test]
    fn savings_violation_of_doubling() {
        let m = Martingale::all_in_on_0(4).unwrap();
        let v = find_savings_violation(&m, 4).unwrap().unwrap();
        assert_eq!((v.sigma, v.tau), (b("00"), b("001")));
        assert_eq!((v.at_sigma, v.at_tau), (q("4"), q("0")));
    }

    #[test]
    fn transform_of_doubling() {
        let m = Martingale::all_in_on_0(12).unwrap();
        let s = savings_transform(&m, 12).unwrap();
        let t = &s.martingale;
        assert_eq!(check_fairness(t, 12).unwrap(), Ok(()));
        assert_eq!(find_savings_violation(t, 12).unwrap(), None);
        let trace = capital_trace(t, &b("0000")).unwrap();
        assert!(trace.values[4] > trace.values[0]);
        // Oracle: brute-force every σ ⪯ τ with |τ| ≤ 4.
        for n in 0..=4u32 {
            for sigma in BitString::all_of_length(n) {
                for len in n..=4 {
                    for tail in BitString::all_of_length(len - n) {
                        let tau = sigma.concat(&tail);
                        assert!(*t.value(&tau).unwrap() >= t.value(&sigma).unwrap() - q("2"));
                    }
                }
            }
        }
    }

    #[test]
    fn transform_of_constant_is_constant() {
        let m = Martingale::constant(q("1"), 6).unwrap();
        let s = savings_transform(&m, 6).unwrap();
        assert_eq!(s.martingale.level(6).unwrap(), m.level(6).unwrap());
    }

    #[test]
    fn rules() {
        assert!(Martingale::from_rule("split_bet(3/4)", 4).is_ok());
        assert!(Martingale::from_rule("split_bet(5/4)", 4).is_err());
        assert!(Martingale::from_rule("constant 2", 4).is_ok());
        assert!(Martingale::from_rule("doubling", 4).is_err());
        assert!(Martingale::all_in_on_0(17).is_err());
        let m = Martingale::split_bet(q("3/4"), 10).unwrap();
        for n in 0..=10 {
            assert_eq!(level_sum(&m, n).unwrap(), Rational::pow2(n as i64));
        }
    }
}
