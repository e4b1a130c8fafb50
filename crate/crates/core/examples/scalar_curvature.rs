//! Fitting the scalar curvature κ and testing the radial characterisation.

use finsler::curvature::fit_scalar_curvature;
use finsler::metric;
use finsler::pi::eq214_residual;
use finsler::{ChartPoint, ScalarField};

fn main() -> finsler::Result<()> {
    let s = metric::round_sphere();
    for p in s.sample(4, 3)? {
        let fit = fit_scalar_curvature(&s, &p, true)?;
        println!("{p}: κ = {:.12}, residual {:.1e}", fit.kappa, fit.residual);
    }
    let r = metric::randers_sphere();
    let p = ChartPoint::new(vec![0.1, 0.5], vec![1.0, 0.2])?;
    let general = fit_scalar_curvature(&r, &p, false)?;
    println!("randers: κ = {:.6}, ∂κ/∂y = {:?}, residual {:.1e}", general.kappa, general.kappa_dy, general.residual);

    let l = s.lagrangian().clone();
    let radial = ScalarField::new(move |x, y| {
        let v = l.on(x, y);
        (&x[0] * 2.0).exp() * &v * &v
    });
    let control = ScalarField::new(|_, y| &y[0] * &y[0]);
    println!("e^(2x¹) L²: {:.2e}", eq214_residual(&s, &radial, &p)?);
    println!("(y¹)²:      {:.2e}", eq214_residual(&s, &control, &p)?);
    Ok(())
}
