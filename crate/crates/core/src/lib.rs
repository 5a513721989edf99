#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calderon;
pub mod cone;
pub mod error;
pub mod grid;
pub mod measure;
pub mod parabolic;
pub mod potential;
pub mod quadrature;
pub mod radon;
pub mod record;
pub mod semigroup;
pub mod special;
pub mod spectral;
pub mod testfn;
pub mod validation;

pub use error::{Error, Result};
pub use grid::{Domain, GridFunction, GridSpec};
pub use spectral::{apply_multiplier, convolve, SpectralMultiplier};
