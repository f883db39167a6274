//! Forward and inverse scattering for the one-dimensional Schrödinger
//! operator `H = -d²/dx² + V(x)`.
//!
//! The crate covers the full loop: a potential goes through
//! [`forward`] to produce scattering data, the data goes through [`glm`]
//! (the Gelfand-Levitan-Marchenko equation) to recover the potential and
//! its wavefunctions, and [`variational`] gives closed-form functional
//! derivatives of those outputs with respect to the reflection amplitude.
//! [`consistency`] turns the identities connecting all of these into
//! numerical checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consistency;
pub mod error;
pub mod forward;
pub mod glm;
pub mod io;
pub mod numerics;
pub mod scattering_data;
pub mod variational;

pub use error::{Error, Result};
pub use numerics::{Grid, GridKind, QuadratureRule};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/forward.md")]
    mod forward {}
    #[doc = include_str!("../../../book/src/scattering-data.md")]
    mod scattering_data {}
    #[doc = include_str!("../../../book/src/inversion.md")]
    mod inversion {}
    #[doc = include_str!("../../../book/src/derivatives.md")]
    mod derivatives {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
