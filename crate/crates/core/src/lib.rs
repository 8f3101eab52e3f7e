//! Thermodynamic formalism on symbolic linear horseshoes.
//!
//! The crate computes topological pressure of locally constant and
//! singular-value potentials on subshifts of finite type, builds the
//! equilibrium (Gibbs) measures as explicit Markov chains, solves Bowen's
//! equation for the unstable, conorm and stable potential families, and
//! brackets the Hausdorff dimension of linear horseshoe models.
//!
//! The guide in `book/` walks through the concepts; every Rust snippet in it
//! is compiled as a doctest of this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bowen;
pub mod dimension;
pub mod error;
pub mod gibbs;
pub mod models;
pub mod potentials;
pub mod pressure;
pub mod spectral;
pub mod symbolic;

pub use error::{Error, Result};
pub use models::{BandStructure, HorseshoeModel};
pub use symbolic::{SubshiftOfFiniteType, Word};

/// Enumeration and level limits shared by all operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Hard cap on any word enumeration.
    pub word_cap: usize,
    /// Cap on the alphabet of an explicitly built power subshift.
    pub alphabet_cap: usize,
    /// Highest level `K` (power `2^K`) for super-additive sequences.
    pub max_level: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            word_cap: 2_000_000,
            alphabet_cap: 4096,
            max_level: 4,
        }
    }
}

/// The guide's chapters, compiled so that their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/pressure.md")]
    mod pressure {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/roots.md")]
    mod roots {}
    #[doc = include_str!("../../../book/src/dimension.md")]
    mod dimension {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/model-schema.md")]
    mod model_schema {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
