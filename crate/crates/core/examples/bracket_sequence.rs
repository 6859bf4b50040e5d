//! Bracket norms `a_n` and their n-th roots for a perturbed nilpotent block
//! against zero, and for `diag(0.5)` against zero.

use asymspec::bracket::{bracket_sequence, root_limit, DEFAULT_ROOT_TOL};
use asymspec::family::{FamilySpec, HGrid};
use asymspec::fixtures::perturbed_nilpotent;
use asymspec::linalg::ComplexMatrix;

fn show(name: &str, family: &FamilySpec, grid: &HGrid) -> asymspec::Result<()> {
    let zero = FamilySpec::zero(family.dim());
    let seq = bracket_sequence(family, &zero, grid, 12)?;
    println!("{name}");
    for (n, (a, r)) in seq.norms.iter().zip(&seq.roots).enumerate() {
        println!(
            "  n = {:>2}  a_n = {a:.3e}  root = {r:.4}  ({})",
            n + 1,
            seq.tails[n].trend.as_str()
        );
    }
    println!("  limit of roots: {:?}", root_limit(&seq, DEFAULT_ROOT_TOL));
    Ok(())
}

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();
    show("J_4(0) + h R", &perturbed_nilpotent(4, 7)?, &grid)?;
    show(
        "diag(0.5)",
        &FamilySpec::constant(ComplexMatrix::from_real_diag(&[0.5])),
        &grid,
    )?;
    Ok(())
}
