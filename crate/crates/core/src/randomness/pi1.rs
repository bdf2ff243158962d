//! From a Π1-number presentation `(q_n), (C_m)` to a Martin-Löf test, and
//! the `Hop_m` index sets going the other way.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{KindData, TestFamily, TestKind};
use crate::bits::{dyadic_cylinder, BitString};
use crate::numeric::{normalize_union, unit_interval, Rational, RationalInterval};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Pi1Error {
    #[error("need C_0 and C_1 at least, got {0} sets")]
    TooFewSets(usize),
    #[error("m = {m}: residual measure {measure} is not < {bound}")]
    InvariantViolation {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
    #[error("m = {m}: B_m has measure {measure} > {bound}")]
    MeasureBound {
        m: u32,
        measure: Rational,
        bound: Rational,
    },
}

/// `λ(∪_{n∉C, n+1<len} [q_n, q_{n+1}])`.
pub fn pi1_residual(q: &[Rational], c: &BTreeSet<usize>, len: usize) -> Rational {
    let len = len.min(q.len());
    let parts = (0..len.saturating_sub(1))
        .filter(|n| !c.contains(n))
        .map(|n| {
            let (a, b) = (q[n].clone(), q[n + 1].clone());
            if a <= b {
                RationalInterval::closed(a, b)
            } else {
                RationalInterval::closed(b, a)
            }
        })
        .collect();
    normalize_union(parts).measure()
}

/// `B_m = ∪_n (q_n - 2^(-m-1-k(n)), q_n + 2^(-m-1-k(n)))` over `n < depth`,
/// with `k(n) = #{j ≤ n : j ∈ C_{m+1}}`, clipped to `[0,1]`.
///
/// Components run over `m = 0 ..= c.len() - 2`. The Π1 bound is checked for
/// every supplied `C_m`, and each `B_m` against `2^-m`.
pub fn build_pi1_ml_test(
    q: &[Rational],
    c: &[BTreeSet<usize>],
    depth: usize,
) -> Result<TestFamily, Pi1Error> {
    if c.len() < 2 {
        return Err(Pi1Error::TooFewSets(c.len()));
    }
    let depth = depth.min(q.len());
    for (m, cm) in c.iter().enumerate() {
        let measure = pi1_residual(q, cm, depth);
        let bound = Rational::pow2(-(m as i64));
        if measure >= bound {
            return Err(Pi1Error::InvariantViolation {
                m: m as u32,
                measure,
                bound,
            });
        }
    }
    let unit = unit_interval();
    let mut components = Vec::with_capacity(c.len() - 1);
    for m in 0..c.len() - 1 {
        let next = &c[m + 1];
        let mut k = 0i64;
        let mut balls = Vec::with_capacity(depth);
        for (n, qn) in q.iter().take(depth).enumerate() {
            if next.contains(&n) {
                k += 1;
            }
            let radius = Rational::pow2(-(m as i64) - 1 - k);
            let ball = RationalInterval::open(qn - &radius, qn + &radius);
            if let Some(clipped) = ball.intersection(&unit) {
                balls.push(clipped);
            }
        }
        let bm = normalize_union(balls);
        let measure = bm.measure();
        let bound = Rational::pow2(-(m as i64));
        if measure > bound {
            return Err(Pi1Error::MeasureBound {
                m: m as u32,
                measure,
                bound,
            });
        }
        components.push(bm);
    }
    let mut t = TestFamily::plain(TestKind::Ml, 0, components);
    t.label = "B_m from a Π1 presentation".into();
    Ok(t)
}

impl TestFamily {
    /// A Π1 family: the `(q, C)` data with the `B_m` components built from it.
    pub fn pi1(q: Vec<Rational>, c: Vec<BTreeSet<usize>>, depth: usize) -> Result<Self, Pi1Error> {
        let ml = build_pi1_ml_test(&q, &c, depth)?;
        Ok(TestFamily {
            kind: TestKind::Pi1,
            data: KindData::Pi1 {
                q: q.into_iter().take(depth).collect(),
                c,
            },
            ..ml
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HopError {
    #[error("V_{m} is not prefix-free: {sigma} is a prefix of {tau}")]
    NotPrefixFree {
        m: usize,
        sigma: BitString,
        tau: BitString,
    },
}

/// `C_m = {n ≤ depth : Hop_m(q_n, q_{n+1})}`.
///
/// A hop needs `q_n ∈ [σ)` and `q_{n+1} ∈ [τ)` for distinct `σ, τ ∈ V_m`
/// whose intervals do not touch.
pub fn build_hop_sets(
    q: &[Rational],
    v: &[Vec<BitString>],
    depth: usize,
) -> Result<Vec<BTreeSet<usize>>, HopError> {
    for (m, vm) in v.iter().enumerate() {
        for sigma in vm {
            if let Some(tau) = vm.iter().find(|t| *t != sigma && sigma.is_prefix_of(t)) {
                return Err(HopError::NotPrefixFree {
                    m,
                    sigma: sigma.clone(),
                    tau: tau.clone(),
                });
            }
        }
    }
    let home = |vm: &[BitString], x: &Rational| {
        vm.iter().find(|s| dyadic_cylinder(s).contains(x)).cloned()
    };
    Ok(v.iter()
        .map(|vm| {
            (0..q.len().saturating_sub(1))
                .filter(|&n| n <= depth)
                .filter(|&n| match (home(vm, &q[n]), home(vm, &q[n + 1])) {
                    (Some(s), Some(t)) => {
                        s != t && s.right_end() != t.left_end() && t.right_end() != s.left_end()
                    }
                    _ => false,
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{evaluate, validate, Membership};
    use crate::real::CauchyName;
    use alloc::vec;

    fn worked_fixture(len: usize, sets: usize) -> (Vec<Rational>, Vec<BTreeSet<usize>>) {
        let q = (0..len)
            .map(|n| Rational::new(1, 2) - Rational::pow2(-(n as i64)))
            .collect();
        let c = (0..sets).map(|m| (0..=m).collect()).collect();
        (q, c)
    }

    #[test]
    fn residual_telescopes() {
        let (q, c) = worked_fixture(64, 8);
        for (m, cm) in c.iter().enumerate() {
            // Oracle: Σ_{m<n<63} 2^-(n+1) = 2^-(m+1) - 2^-63.
            let expected = Rational::pow2(-(m as i64) - 1) - Rational::pow2(-63);
            assert_eq!(pi1_residual(&q, cm, 64), expected);
        }
    }

    #[test]
    fn worked_b_m() {
        let (q, c) = worked_fixture(64, 8);
        let t = build_pi1_ml_test(&q, &c, 64).unwrap();
        assert_eq!(t.len(), 7);
        assert_eq!(validate(&t), Ok(()));
        let half = CauchyName::scripted(vec![Rational::new(1, 2)], 0).unwrap();
        let e = evaluate(&t, &half, 7);
        assert!(e
            .components
            .iter()
            .all(|v| v.result == Membership::Captured));
        let p = TestFamily::pi1(q, c, 64).unwrap();
        assert_eq!(validate(&p), Ok(()));
    }

    #[test]
    fn residual_violation() {
        let (q, _) = worked_fixture(16, 0);
        let c = vec![BTreeSet::new(), BTreeSet::new()];
        // Without excision the residual is the whole path, 1 - 2^-15.
        assert!(matches!(
            build_pi1_ml_test(&q, &c, 16),
            Err(Pi1Error::InvariantViolation { m: 1, .. })
        ));
    }

    fn bits(v: &[&str]) -> Vec<BitString> {
        v.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn hop_examples() {
        let q = vec![
            Rational::new(1, 4),
            Rational::new(3, 4),
            Rational::new(1, 4),
        ];
        let c = build_hop_sets(&q, &[bits(&["0", "1"])], 8).unwrap();
        assert!(c[0].is_empty());
        let q = vec![Rational::new(1, 8), Rational::new(7, 8)];
        let c = build_hop_sets(&q, &[bits(&["00", "11"])], 8).unwrap();
        assert_eq!(c[0], [0].into_iter().collect());
        assert!(matches!(
            build_hop_sets(&q, &[bits(&["0", "01"])], 8),
            Err(HopError::NotPrefixFree { m: 0, .. })
        ));
        // Staying inside one cylinder is not a hop.
        let q = vec![Rational::new(1, 16), Rational::new(1, 8)];
        assert!(build_hop_sets(&q, &[bits(&["00", "11"])], 8).unwrap()[0].is_empty());
    }
}
