pub mod baseline;
pub mod candidates;
pub mod delta;
pub mod dp;
pub mod geometry;
pub mod harness;
pub mod mask;
pub mod preprocess;

/// Exact rational used for physical coordinates, epsilon and grid units.
pub type Rational = num_rational::Ratio<i128>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/dp.md")]
    mod dp {}
    #[doc = include_str!("../../../book/src/normalize.md")]
    mod normalize {}
    #[doc = include_str!("../../../book/src/delta_large.md")]
    mod delta_large {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
