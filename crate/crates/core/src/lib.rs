//! Asymptotic spectral analysis of h-parameterized matrix families.
//!
//! Families `{T_h}` are sampled on a geometric grid of `h -> 0` and compared
//! through their tails: asymptotic equivalence, quasinilpotent equivalence via
//! generalized commutators, family spectra from resolvent-norm fields, and
//! holomorphic functional calculus applied per `h`.

pub mod bracket;
pub mod equivalence;
pub mod error;
pub mod expr;
pub mod family;
pub mod fixtures;
pub mod funcalc;
pub mod harness;
pub mod linalg;
pub mod parallel;
pub mod report;
pub mod schema;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use family::{FamilySpec, HGrid};
pub use linalg::{ComplexMatrix, C64};
