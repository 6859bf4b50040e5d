//! Seeded family generators used by the verification suites, tests and examples.

use crate::error::Result;
use crate::family::FamilySpec;
use crate::linalg::{ComplexMatrix, C64};

/// Derives the `k`-th child seed of `seed`.
pub fn child_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(k.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        ^ k
}

/// `(A, A + h B)` with seeded `A`, `B`.
pub fn equivalent_pair(dim: usize, seed: u64) -> Result<(FamilySpec, FamilySpec)> {
    let a = FamilySpec::random(dim, child_seed(seed, 0), 1.0)?;
    let b = FamilySpec::random(dim, child_seed(seed, 1), 1.0)?;
    let s = a.plus(&FamilySpec::h_scaled(b))?;
    Ok((a, s))
}

/// `A, A + h B, A + h B + h C`.
pub fn equivalent_triple(dim: usize, seed: u64) -> Result<[FamilySpec; 3]> {
    let (a, ab) = equivalent_pair(dim, seed)?;
    let c = FamilySpec::random(dim, child_seed(seed, 2), 1.0)?;
    let abc = ab.plus(&FamilySpec::h_scaled(c))?;
    Ok([a, ab, abc])
}

/// `0.25 J_3(0)`, the nilpotent part of the commuting pair.
fn quarter_jordan() -> ComplexMatrix {
    ComplexMatrix::jordan(3, C64::new(0.0, 0.0)).scale_real(0.25)
}

/// `A_h = (0.5 + h) I + 0.25 J_3(0)` and `A_h + N` with `N = J_3(0)`.
///
/// `N` commutes with `A_h` and `N^3 = 0`, so every bracket of order 3 or more
/// vanishes exactly. Entries are dyadic, keeping the cancellation exact.
pub fn commuting_nilpotent_pair() -> Result<(FamilySpec, FamilySpec)> {
    let a = FamilySpec::diag_expr(&["0.5+h", "0.5+h", "0.5+h"])?.plus(&FamilySpec::constant(quarter_jordan()))?;
    let t = a.plus(&FamilySpec::jordan(3, C64::new(0.0, 0.0))?)?;
    Ok((a, t))
}

/// A bounded family commuting exactly with both members of [`commuting_nilpotent_pair`].
pub fn commuting_nilpotent_partner() -> Result<FamilySpec> {
    let j = ComplexMatrix::jordan(3, C64::new(0.0, 0.0));
    let j2 = j.mul(&j)?;
    let m = ComplexMatrix::identity(3)
        .scale_real(0.75)
        .add(&j.scale_real(-0.5))?
        .add(&j2.scale_real(0.125))?;
    Ok(FamilySpec::constant(m))
}

/// `J_dim(0) + h R` with seeded `R`.
pub fn perturbed_nilpotent(dim: usize, seed: u64) -> Result<FamilySpec> {
    FamilySpec::jordan(dim, C64::new(0.0, 0.0))?.plus(&FamilySpec::h_scaled(FamilySpec::random(dim, seed, 1.0)?))
}

/// Upper triangular with diagonal `-1, 0.5 + 0.5i, 1.5` and small off-diagonal entries.
pub fn triangular_fixture() -> FamilySpec {
    let z = C64::new(0.0, 0.0);
    let m = ComplexMatrix::new(
        3,
        vec![
            C64::new(-1.0, 0.0),
            C64::new(0.125, 0.0),
            C64::new(0.0, 0.0625),
            z,
            C64::new(0.5, 0.5),
            C64::new(-0.125, 0.0),
            z,
            z,
            C64::new(1.5, 0.0),
        ],
    )
    .expect("valid literal");
    FamilySpec::constant(m)
}

/// `diag(1, 2 + h)`.
pub fn two_point_family() -> FamilySpec {
    FamilySpec::diag_expr(&["1", "2+h"]).expect("valid literal")
}
