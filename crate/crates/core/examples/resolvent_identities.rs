//! Resolvent equation and commutation residuals, exact and with a vanishing perturbation.

use asymspec::family::{default_vanish_tol, seeded_matrix, HGrid};
use asymspec::fixtures::equivalent_pair;
use asymspec::spectrum::{commutation_residual_trace, equation_residual_trace, resolvent_at};
use asymspec::C64;

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();
    let (_, family) = equivalent_pair(3, 7)?;
    let (l, m) = (C64::new(4.0, 0.5), C64::new(-0.5, 3.5));
    let rl = resolvent_at(&family, l, &grid)?.representative()?;
    let rm = resolvent_at(&family, m, &grid)?.representative()?;

    let eq = equation_residual_trace(&rl, &rm, l, m, &grid)?;
    let comm = commutation_residual_trace(&rl, &rm, &grid)?;
    println!(
        "exact inverses: equation {:.3e}, commutator {:.3e}",
        eq.tail.value, comm.tail.value
    );

    // any representative differing by O(h) is just as good in the limit
    let b = seeded_matrix(3, 99, 1.0);
    let pl: Vec<_> = rl
        .iter()
        .zip(grid.samples())
        .map(|(r, &h)| r.add(&b.scale_real(h)))
        .collect::<Result<_, _>>()?;
    let eq = equation_residual_trace(&pl, &rm, l, m, &grid)?;
    let tol = default_vanish_tol(&eq.values);
    println!(
        "perturbed: equation tail {:.3e} ({}), vanishes with tol {tol:.1e}: {}",
        eq.tail.value,
        eq.tail.trend.as_str(),
        eq.vanishes(&grid, tol)?
    );
    Ok(())
}
