use std::collections::BTreeMap;

use demuth_core::martingale::Martingale;
use demuth_core::measure::transport_all;
use demuth_core::tt::induced_cylinder_measure;
use demuth_core::{
    cdf, check_fairness, compare_at, dyadic_cylinder, find_savings_violation, induced_measure,
    level_sum, normalize_union, oscillation_tree, pseudo_derivative, savings_transform, truncate,
    validate_measure, BitString, CauchyName, Comparison, CylinderMeasure, LimitOracle,
    MarkovFunction, Rational, RationalInterval, StagedCover, TTFunctional,
};
use proptest::prelude::*;

fn unit_rational() -> impl Strategy<Value = Rational> {
    (1i64..=64).prop_flat_map(|d| (0..=d).prop_map(move |n| Rational::new(n, d)))
}

fn interval() -> impl Strategy<Value = RationalInterval> {
    (unit_rational(), unit_rational(), any::<bool>()).prop_map(|(a, b, open)| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if open && lo < hi {
            RationalInterval::open(lo, hi)
        } else {
            RationalInterval::closed(lo, hi)
        }
    })
}

fn bitstring(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

/// Inner probability `p ∈ (0, 1)`.
fn probability() -> impl Strategy<Value = Rational> {
    (2i64..=16).prop_flat_map(|d| (1..d).prop_map(move |n| Rational::new(n, d)))
}

/// A polygonal function on `[0,1]` with nodes on a grid of 1/16.
fn polygonal() -> impl Strategy<Value = MarkovFunction> {
    (
        prop::collection::btree_set(1i64..16, 0..5),
        prop::collection::vec(-8i64..=8, 7),
    )
        .prop_map(|(inner, heights)| {
            let mut xs = vec![0i64];
            xs.extend(inner);
            xs.push(16);
            let nodes = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (Rational::new(x, 16), Rational::new(heights[i % 7], 8)))
                .collect();
            MarkovFunction::polygonal(nodes).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalize_is_idempotent_and_order_free(mut parts in prop::collection::vec(interval(), 0..8)) {
        let u = normalize_union(parts.clone());
        prop_assert_eq!(&normalize_union(u.parts().to_vec()), &u);
        parts.reverse();
        prop_assert_eq!(&normalize_union(parts.clone()), &u);
        let total: Rational = parts.iter().map(|i| i.length()).sum();
        prop_assert!(u.measure() <= total);
        for p in &parts {
            prop_assert!(u.measure() >= p.length());
            prop_assert!(u.contains(&p.midpoint()));
        }
    }

    #[test]
    fn cylinders_split_in_half(sigma in bitstring(20)) {
        let whole = dyadic_cylinder(&sigma);
        let (left, right) = (dyadic_cylinder(&sigma.child(false)), dyadic_cylinder(&sigma.child(true)));
        prop_assert_eq!(left.lo(), whole.lo());
        prop_assert_eq!(left.hi(), right.lo());
        prop_assert_eq!(right.hi(), whole.hi());
        prop_assert_eq!(whole.length(), Rational::pow2(-(sigma.len() as i64)));
        prop_assert_eq!(sigma.left_end(), whole.lo().clone());
    }

    #[test]
    fn sums_and_products_keep_the_contract(a in unit_rational(), b in unit_rational(), flip in any::<bool>()) {
        let sign = if flip { -1 } else { 1 };
        let wobble = |c: Rational| {
            CauchyName::from_fn("wobble", move |n| {
                let s = if n % 2 == 0 { sign } else { -sign };
                &c + &(Rational::from_integer(s) * Rational::pow2(-(n as i64) - 1))
            })
        };
        let (x, y) = (wobble(a), wobble(b));
        prop_assert!(x.check_contract(16).is_ok());
        prop_assert!(x.add(&y).check_contract(16).is_ok());
        prop_assert!(x.sub(&y).check_contract(16).is_ok());
        prop_assert!(x.mul(&y).check_contract(16).is_ok());
    }

    #[test]
    fn comparison_is_stable_and_sound(a in unit_rational(), b in unit_rational()) {
        let (x, y) = (CauchyName::constant(a.clone()), CauchyName::constant(b.clone()));
        let mut decided = None;
        for n in 0..24 {
            let c = compare_at(&x, &y, n);
            match c {
                Comparison::Less => prop_assert!(a < b),
                Comparison::Greater => prop_assert!(a > b),
                Comparison::Indistinguishable => prop_assert!(decided.is_none(), "undecided after {:?}", decided),
            }
            if c != Comparison::Indistinguishable {
                decided = Some(c);
            }
        }
        prop_assert_eq!(decided.is_none(), a == b);
    }

    #[test]
    fn oscillation_trees_are_downward_closed(f in polygonal(), n in 0u32..6, depth in 0u32..8) {
        let t = oscillation_tree(&f, n, depth).unwrap();
        prop_assert!(t.is_downward_closed());
        prop_assert!(t.nodes.iter().all(|s| s.len() <= depth as usize));
    }

    #[test]
    fn truncation_agrees_off_the_cover(f in polygonal(), a in unit_rational(), b in unit_rational(), x in unit_rational()) {
        prop_assume!(a != b);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let cover = StagedCover::new(vec![vec![RationalInterval::closed(lo.clone(), hi.clone())]], vec![0, 0]);
        let g = truncate(&f, &cover).unwrap();
        prop_assert_eq!(g.eval(&lo), f.eval(&lo));
        prop_assert_eq!(g.eval(&hi), f.eval(&hi));
        if x < lo || x > hi {
            prop_assert_eq!(g.eval(&x), f.eval(&x));
        } else {
            let chord = f.eval(&lo) + (&x - &lo) * (f.eval(&hi) - f.eval(&lo)) / (&hi - &lo);
            prop_assert_eq!(g.eval(&x), chord);
        }
    }

    #[test]
    fn declared_modulus_holds(f in polygonal(), n in 0u32..8, x in unit_rational(), y in unit_rational()) {
        let theta = f.modulus().unwrap();
        if (&x - &y).abs() <= theta.apply(&Rational::pow2(-(n as i64))) {
            prop_assert!((f.eval(&x) - f.eval(&y)).abs() <= Rational::pow2(-(n as i64)));
        }
    }

    #[test]
    fn pseudo_derivative_bounds_are_ordered(f in polygonal(), z in unit_rational(), k in 2u32..6) {
        let e = pseudo_derivative(&f, &CauchyName::constant(z), &Rational::pow2(-(k as i64)), 8).unwrap();
        prop_assert!(e.lower <= e.upper);
    }

    #[test]
    fn martingale_invariants(p in probability(), c in 1i64..5, depth in 1u32..9) {
        let m = Martingale::split_bet(p, depth).unwrap();
        prop_assert!(check_fairness(&m, depth).unwrap().is_ok());
        let k = Martingale::constant(Rational::from_integer(c), depth).unwrap();
        for n in 0..=depth {
            prop_assert_eq!(level_sum(&m, n).unwrap(), Rational::pow2(n as i64));
            prop_assert_eq!(level_sum(&k, n).unwrap(), Rational::from_integer(c) * Rational::pow2(n as i64));
        }
        let s = savings_transform(&m, depth).unwrap();
        prop_assert!(check_fairness(&s.martingale, depth).unwrap().is_ok());
        prop_assert!(find_savings_violation(&s.martingale, depth).unwrap().is_none());
    }

    #[test]
    fn random_tables_induce_additive_measures(
        uses in prop::collection::vec(0u32..4, 1..5),
        seed in prop::collection::vec(any::<bool>(), 256),
    ) {
        let mut uses = uses;
        uses.sort();
        let tables: Vec<Vec<bool>> = uses
            .iter()
            .enumerate()
            .map(|(n, &u)| (0..1usize << u).map(|i| seed[(i * 7 + n * 31) % 256]).collect())
            .collect();
        let phi = TTFunctional::table(uses.clone(), tables).unwrap();
        let depth = uses.len();
        let mu = induced_cylinder_measure(&phi, depth as u32).unwrap();
        prop_assert!(validate_measure(&mu, depth).is_ok());
        for len in 0..depth as u32 {
            for sigma in BitString::all_of_length(len) {
                let whole = induced_measure(&phi, &sigma).unwrap();
                let halves = induced_measure(&phi, &sigma.child(false)).unwrap()
                    + induced_measure(&phi, &sigma.child(true)).unwrap();
                prop_assert_eq!(whole, halves);
            }
        }
    }

    #[test]
    fn cdf_is_monotone(p in probability(), i in 0u64..256, j in 0u64..256) {
        let mu = CylinderMeasure::bernoulli(p).unwrap();
        let (a, b) = (i.min(j), i.max(j));
        let (fa, fb) = (cdf(&mu, &Rational::dyadic(a, 8)).unwrap(), cdf(&mu, &Rational::dyadic(b, 8)).unwrap());
        prop_assert!(fa <= fb);
        prop_assert!(fb <= Rational::one());
    }

    #[test]
    fn transport_is_monotone_and_coherent(p in probability(), depth in 1usize..7) {
        let mu = CylinderMeasure::bernoulli(p).unwrap();
        let mut parent = transport_all(&mu, 0).unwrap();
        for len in 1..=depth {
            let level = transport_all(&mu, len).unwrap();
            for w in level.windows(2) {
                prop_assert_eq!(&w[0].hi, &w[1].lo);
            }
            for (i, t) in level.iter().enumerate() {
                let up = &parent[i / 2];
                prop_assert!(up.lo <= t.lo && t.hi <= up.hi);
                prop_assert!(up.output.is_prefix_of(&t.output));
                prop_assert!(dyadic_cylinder(&t.output).lo() <= &t.lo);
                prop_assert!(&t.hi <= dyadic_cylinder(&t.output).hi());
            }
            parent = level;
        }
    }

    #[test]
    fn limit_oracle_budget_matches_recount(
        scripts in prop::collection::vec(prop::collection::vec(0u8..3, 1..8), 1..6),
        budget in prop::collection::vec(0usize..5, 1..6),
    ) {
        let o = LimitOracle::new(scripts.clone(), Some(budget.clone())).unwrap();
        let within = scripts.iter().enumerate().all(|(x, s)| {
            let changes = s.windows(2).filter(|w| w[0] != w[1]).count();
            changes <= *budget.get(x).unwrap_or(budget.last().unwrap())
        });
        prop_assert_eq!(o.check_budget().is_ok(), within);
        for (x, s) in scripts.iter().enumerate() {
            prop_assert_eq!(o.limit(x), s.last());
        }
    }
}

#[test]
fn martingale_table_round_trip() {
    let mut table = BTreeMap::new();
    for n in 0..=3u32 {
        for s in BitString::all_of_length(n) {
            table.insert(s, Rational::one());
        }
    }
    let m = Martingale::from_table(&table).unwrap();
    assert!(check_fairness(&m, 3).unwrap().is_ok());
}
