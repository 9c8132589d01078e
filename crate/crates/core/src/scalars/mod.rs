//! The coefficient field K = ℚ((t)).

mod factor_set;
mod rational;
mod series;

pub use factor_set::{factor_set_check, FactorSet};
pub use rational::{format_rational, parse_rational, rat, ratio, rational_sqrt, Rational};
pub use series::{LaurentSeries, Valuation, DEFAULT_PRECISION};
pub(crate) use series::min_opt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("precision exhausted")]
    PrecisionExhausted,
    #[error("not invertible")]
    NotInvertible,
    #[error("negative valuation")]
    NegativeValuation,
    #[error("odd valuation")]
    OddValuation,
    #[error("residue is not a square")]
    ResidueNotASquare,
    #[error("not a perfect square")]
    NotAPerfectSquare,
    #[error("parse error: {0}")]
    Parse(String),
}
