//! Expected coverage of drone trajectories by broadcast Remote ID receivers.

pub mod analytic;
pub mod geometry;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod geo;
pub mod polygon;
pub mod planning;
pub mod urban;
pub mod hybrid;

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/expectations.md")]
    mod expectations {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/city-data.md")]
    mod city_data {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/urban.md")]
    mod urban {}
    #[doc = include_str!("../../../book/src/hybrid.md")]
    mod hybrid {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
