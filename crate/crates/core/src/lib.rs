//! Numerics for mass aggregation with a prescribed maximal size.
//!
//! The density `g(t, x)` of clusters of size `x ∈ [0, t]` evolves by
//!
//! ```text
//! ∂g/∂t (t, x) = -(k0 / N(t)) g(t, x) g(t, t - x),    N(t) = ∫₀ᵗ g(t, x) dx,
//! ```
//!
//! with new clusters entering at the maximal size `x = t` so that the mass
//! `∫ x g` stays equal to one. The crate provides
//!
//! * [`boxmodel`]: the explicit discrete scheme on cells of width `1/M_b`;
//! * [`selfsimilar`]: profiles `G` with `g = t⁻² G(x/t)`, computed by shooting,
//!   and the two solution branches for `k0 > 2`;
//! * [`mildsolver`]: Picard iteration for the mild formulation, used as an
//!   independent short-time reference;
//! * [`diagnostics`]: distances, stationarity and bounds on `N(t)`.
//!
//! ```
//! use maxagg::{boxmodel, make_gaussian_initial, Params};
//!
//! let g0 = make_gaussian_initial(0.5, 0.3, 200).unwrap();
//! let opts = boxmodel::RunOptions { steps: 100, ..Default::default() };
//! let report = boxmodel::run(&g0, &Params::new(3.0).unwrap(), &opts).unwrap();
//! assert_eq!(report.final_state().cells().len(), 300);
//! assert!(report.series[100].n < report.series[0].n);
//! ```

pub mod boxmodel;
pub mod diagnostics;
mod error;
pub mod mildsolver;
mod model;
pub mod ode;
pub mod quad;
pub mod selfsimilar;

pub use error::{Error, Result};
pub use model::{
    discrete_mass, discrete_number, make_gaussian_initial, DiscreteDensity, Grid1D, Params, SampledProfile,
};

// The guide's code blocks run as doctests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/box-model.md")]
    mod box_model {}
    #[doc = include_str!("../../../book/src/self-similar.md")]
    mod self_similar {}
    #[doc = include_str!("../../../book/src/mild-solutions.md")]
    mod mild_solutions {}
    #[doc = include_str!("../../../book/src/long-time.md")]
    mod long_time {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
