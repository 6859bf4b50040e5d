//! Asymptotic and quasinilpotent equivalence verdicts for a few pairs.

use asymspec::bracket::{DEFAULT_N_MAX, DEFAULT_ROOT_TOL};
use asymspec::equivalence::{asymptotic_commuting, asymptotic_equiv, quasinilpotent_equiv};
use asymspec::family::HGrid;
use asymspec::fixtures::{commuting_nilpotent_pair, equivalent_pair};
use asymspec::report::to_json_string;

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();

    let (a, b) = equivalent_pair(3, 42)?;
    println!("A vs A + hB");
    println!(
        "  asymptotic:     {}",
        asymptotic_equiv(&a, &b, &grid, None)?.result.as_str()
    );
    println!(
        "  commuting:      {}",
        asymptotic_commuting(&a, &b, &grid, None)?.result.as_str()
    );
    println!(
        "  quasinilpotent: {}",
        quasinilpotent_equiv(&a, &b, &grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL)?
            .result
            .as_str()
    );

    // differ by a nilpotent that commutes with both: not close, yet quasinilpotent-equivalent
    let (s, t) = commuting_nilpotent_pair()?;
    println!("A vs A + N with N^3 = 0");
    println!(
        "  asymptotic:     {}",
        asymptotic_equiv(&s, &t, &grid, None)?.result.as_str()
    );
    let q = quasinilpotent_equiv(&s, &t, &grid, DEFAULT_N_MAX, DEFAULT_ROOT_TOL)?;
    println!("  quasinilpotent: {}", q.result.as_str());
    println!("{}", to_json_string(&q.to_json()));
    Ok(())
}
