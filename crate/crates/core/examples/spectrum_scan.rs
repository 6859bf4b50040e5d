//! Resolvent-norm scan of `diag(1, 2 + h)` and the clusters it flags.

use asymspec::family::HGrid;
use asymspec::fixtures::two_point_family;
use asymspec::spectrum::{quotient_norm_bounds, resolvent_norm_field, spectrum_estimate, ComplexRegion};
use asymspec::C64;

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();
    let family = two_point_family();
    let bounds = quotient_norm_bounds(&family, &grid)?;
    println!("norm of the class lies in [{:.4}, {:.4}]", bounds.lower, bounds.upper);

    let region = ComplexRegion::new(C64::new(0.0, 0.0), 2.5, 101)?;
    let field = resolvent_norm_field(&family, &region, &grid)?;
    let estimate = spectrum_estimate(&field, 1e-3)?;
    println!(
        "{} flagged points, threshold {:.3e} on spacing {:.3}",
        estimate.flagged.len(),
        estimate.effective_epsilon,
        estimate.spacing
    );
    for cluster in &estimate.clusters {
        println!(
            "cluster at {:.4}{:+.4}i, {} cells, radius {:.3}",
            cluster.centroid.re, cluster.centroid.im, cluster.cell_count, cluster.radius
        );
    }
    Ok(())
}
