//! Closedness under L → e^σ L: homotheties keep it, σ = x¹ breaks it.

use finsler::metric::{self, PositionFunction};
use finsler::pi::conformal_closedness_transfer;
use finsler::{ChartPoint, PiVectorField};

fn main() -> finsler::Result<()> {
    let base = metric::minkowski_quartic(2);
    let x = PiVectorField::exact_dual(&base, PositionFunction::new(|x| &x[0] * &x[1]));
    let p = ChartPoint::new(vec![0.5, -0.3], vec![1.0, 0.7])?;
    for (label, sigma) in [
        ("σ = 0.8", PositionFunction::constant(0.8)),
        ("σ = x¹", PositionFunction::new(|x| x[0].clone())),
    ] {
        let r = conformal_closedness_transfer(&base, &x, &sigma, &p)?;
        println!(
            "{label}: base {:.1e}, transformed {:.6}, predicted {:.6}, gap {:.1e}",
            r.base_defect(),
            r.transformed_defect(),
            r.predicted_defect(),
            r.residual()
        );
    }
    Ok(())
}
