//! Exact computable analysis over the unit interval: rational arithmetic,
//! Cauchy names, Markov-computable functions, pseudo-derivatives,
//! algorithmic randomness tests, martingales and tt-measure transport.
//!
//! Everything here is exact rational arithmetic; no floating point is used
//! in any decision.

#![no_std]

extern crate alloc;

pub mod bits;
pub mod derivative;
pub mod limit;
pub mod markov;
pub mod martingale;
pub mod measure;
pub mod numeric;
pub mod randomness;
pub mod real;
pub mod tt;

pub use bits::{dyadic_cylinder, longest_cylinder_containing, BitString};
pub use derivative::{
    classify_denjoy, pseudo_derivative, slope, DenjoyVerdict, Extended, PseudoDerivativeEstimate,
};
pub use limit::{LimitError, LimitOracle};
pub use markov::{
    check_h, eval_extension, oscillation_tree, slope_bounds_check, truncate, MarkovFunction,
    StagedCover,
};
pub use martingale::{
    capital_trace, check_fairness, find_savings_violation, level_sum, savings_transform, Martingale,
};
pub use measure::{
    cdf, transport, transport_pushforward_check, validate_measure, CylinderMeasure, TransportStatus,
};
pub use numeric::{
    coverage_at_least, measure, normalize_union, IntervalUnion, NumericError, Rational,
    RationalInterval,
};
pub use randomness::{
    demuth_update, evaluate, validate, validate_as, TestFamily, TestKind, Violation,
};
pub use real::{compare_at, CauchyName, Comparison, ModulusFunction};
pub use tt::{induced_measure, tt_from_ucf, TTFunctional};
