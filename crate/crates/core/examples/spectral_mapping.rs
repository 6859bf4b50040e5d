//! Holomorphic images of `diag(1, 2 + h)`: their spectra are the images of the spectrum.
//! Every `f` must be holomorphic on and inside the contour, so the pole of
//! `1/(4 - z)` sits outside the circle of radius 2 about 1.5.

use asymspec::expr::FuncExpr;
use asymspec::family::HGrid;
use asymspec::fixtures::two_point_family;
use asymspec::funcalc::{family_funcalc, ContourSpec};
use asymspec::spectrum::{centroids_match, resolvent_norm_field, spectrum_estimate, ComplexRegion};
use asymspec::C64;

fn main() -> asymspec::Result<()> {
    let grid = HGrid::default();
    let family = two_point_family();
    let contour = ContourSpec::circle(C64::new(1.5, 0.0), 2.0)?;

    for (src, half_width) in [("z^2", 5.0), ("exp(z)", 10.0), ("1/(4 - z)", 1.0)] {
        let f = FuncExpr::parse(src)?;
        let image = family_funcalc(&family, &f, &contour);
        let region = ComplexRegion::new(C64::new(0.0, 0.0), half_width, 101)?;
        let estimate = spectrum_estimate(&resolvent_norm_field(&image, &region, &grid)?, 1e-3)?;
        let expected = [f.eval_at(C64::new(1.0, 0.0))?, f.eval_at(C64::new(2.0, 0.0))?];
        let agrees = centroids_match(&estimate.centroids(), &expected, estimate.spacing, 1.0);
        println!("f = {src}");
        for z in estimate.centroids() {
            println!("  cluster at {:.4}{:+.4}i", z.re, z.im);
        }
        println!(
            "  f(1) = {:.4}, f(2) = {:.4}, agree within a cell: {agrees}",
            expected[0].re, expected[1].re
        );
    }
    Ok(())
}
