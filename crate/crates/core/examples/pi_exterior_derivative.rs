//! The exterior derivative on π-forms and its failure to square to zero.

use finsler::metric;
use finsler::pi::{dbar_0, dbar_1, dbar_p, dbar_sq_defect};
use finsler::{ChartPoint, PiForm, ScalarField};

fn main() -> finsler::Result<()> {
    let p = ChartPoint::new(vec![0.2, 0.6], vec![0.8, -0.4])?;
    let flat = metric::euclidean(2);
    let sphere = metric::round_sphere();

    let w = PiForm::one_form(vec![ScalarField::of_position(|x| x[1].clone()), ScalarField::constant(0.0)]);
    println!("d̄(x² dx¹) on the plane = {:.3}", dbar_1(&flat, &w, &p)?);

    let f = ScalarField::new(|x, y| &(&y[0] * &y[0]) * 0.5 + &x[0] * &x[1]);
    println!("d̄f on the sphere = {:.6}", dbar_0(&sphere, &f, &p)?.transpose());
    let d = dbar_sq_defect(&sphere, &f, &p)?;
    println!("d̄²f directly = {:.6}", d.direct);
    println!("R̂^m ∂f/∂y^m = {:.6}", d.via_torsion);

    let q3 = metric::euclidean(3);
    let p3 = ChartPoint::new(vec![0.1, 0.2, 0.3], vec![1.0, 0.0, 0.0])?;
    let two = PiForm::from_increasing(2, 3, vec![(vec![0, 1], ScalarField::of_position(|x| x[2].clone()))])?;
    let three = dbar_p(&q3, &two, &p3)?;
    println!("d̄(x³ dx¹∧dx²)_012 = {}", three.get(&[0, 1, 2]));
    Ok(())
}
