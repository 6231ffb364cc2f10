//! Uniformity norms over coset progressions in finite abelian groups.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the command-line
//! harness uses.

pub mod arith;
pub mod bessel;
pub mod error;
pub mod funcspace;
pub mod gowers;
pub mod group;
pub mod patterns;
pub mod polyrank;
pub mod progression;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use funcspace::{FunctionTable, Spectrum};
pub use gowers::{DualSearch, DualStrategy, DualWitness, Method, NormResult, DEFAULT_NORM_BUDGET};
pub use group::{GroupElement, GroupSpec, Subgroup};
pub use polyrank::{CheckMode, Codomain, Modular, PolyCertificate, PolyFunction, Torus};
pub use progression::{CosetProgression, Multiset, ShiftSet};
pub use scalar::Real;

pub use num_complex::Complex;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Double-precision function table.
pub type Table = FunctionTable<f64>;
/// Single-precision function table.
pub type Table32 = FunctionTable<f32>;
/// Double-precision spectrum.
pub type Spec64 = Spectrum<f64>;
/// Double-precision dual witness.
pub type Witness = DualWitness<f64>;
/// Complex scalar used by [`Table`].
pub type C64 = Complex<f64>;
/// Map into `Z/MZ`.
pub type ModPoly = PolyFunction<Modular>;
