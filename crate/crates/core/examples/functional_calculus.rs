//! Contour-integral `exp` of a non-normal matrix against its Taylor series.

use asymspec::expr::FuncExpr;
use asymspec::funcalc::{contour_funcalc, ContourSpec};
use asymspec::linalg::{ComplexMatrix, C64};
use asymspec::verify::exp_taylor;

fn main() -> asymspec::Result<()> {
    let t = ComplexMatrix::jordan(4, C64::new(0.5, 0.25));
    let f = FuncExpr::parse("exp(z)")?;
    let reference = exp_taylor(&t)?;
    for nodes in [64, 128, 256, 512] {
        let contour = ContourSpec::new(C64::new(0.5, 0.25), 1.5, nodes)?;
        let err = contour_funcalc(&t, &f, &contour)?.sub(&reference)?.max_abs();
        println!("{nodes:>4} nodes: max entry error {err:.3e}");
    }
    Ok(())
}
