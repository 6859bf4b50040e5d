//! Resolvent of `A + N` rebuilt from the resolvent of `A` by the bracket series.

use asymspec::family::HGrid;
use asymspec::fixtures::commuting_nilpotent_pair;
use asymspec::spectrum::series_resolvent;
use asymspec::C64;

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();
    let (a, t) = commuting_nilpotent_pair()?;
    for lambda in [C64::new(1.5, 0.0), C64::new(-0.5, 0.0), C64::new(0.5, 1.0)] {
        println!("lambda = {lambda}");
        for n_terms in [1, 2, 3, 6] {
            let sr = series_resolvent(&a, &t, lambda, &grid, n_terms)?;
            println!(
                "  {n_terms} terms: left defect {:.3e}, right defect {:.3e}{}",
                sr.defect.left.tail.value,
                sr.defect.right.tail.value,
                if sr.truncation_warning { " (truncated)" } else { "" }
            );
        }
    }
    Ok(())
}
