//! Exact continued fractions over the rationals and real quadratic fields.

mod convergents;
mod expansion;
mod rational;
mod special;
mod surd;
mod text;

pub use convergents::{convergent_pair, convergents, eval_cf_exact, eval_cf_f64, Convergent, ConvergentTable};
pub use expansion::{
    cf_of_exact, cf_of_quadratic_irrational, cf_of_rational, cf_prefix_of, CFExpansion, CfTail, RationalForm,
};
pub use rational::Rational;
pub use special::{default_tail, side_and_gap, special_sequence_main, theta_sequence, SideGap, SpecialTerm};
pub use surd::{Exact, QuadraticIrrational};
pub use text::parse_exact;


use num_bigint::BigInt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("not a quadratic irrational: {0}")]
    NotIrrational(String),
    #[error("values live in different quadratic fields: sqrt({0}) and sqrt({1})")]
    FieldMismatch(BigInt, BigInt),
    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),
    #[error("expansion too short: wanted index {wanted}, only {have} partial quotients")]
    TooShort { wanted: usize, have: usize },
    #[error("tail must exceed 1, got {0}")]
    InvalidTail(String),
    #[error("parse error: {0}")]
    Parse(String),
}
