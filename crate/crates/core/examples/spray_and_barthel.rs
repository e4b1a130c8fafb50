//! Spray, Barthel connection and Cartan coefficients with their certificates.

use finsler::connection::{barthel, cartan_coeffs, spray, spray_defect, structural_residuals};
use finsler::metric;
use finsler::{ChartPoint, LocalGeometry};

fn main() -> finsler::Result<()> {
    let s = metric::randers_sphere();
    let p = ChartPoint::new(vec![0.4, 0.1], vec![-0.3, 1.2])?;

    let g = spray(&s, &p)?.0;
    let n = barthel(&s, &p)?.0;
    let cc = cartan_coeffs(&s, &p)?;
    println!("G = {:.6}", g.transpose());
    println!("N = {n:.6}");
    for i in 0..2 {
        for j in 0..2 {
            println!(
                "F^{i}_{j}k = [{:+.6}, {:+.6}]   C^{i}_{j}k = [{:+.6}, {:+.6}]",
                cc.horizontal.get(i, j, 0),
                cc.horizontal.get(i, j, 1),
                cc.vertical.get(i, j, 0),
                cc.vertical.get(i, j, 1)
            );
        }
    }
    println!("spray defect {:.2e}", spray_defect(&s, &p)?);
    println!("{:#?}", structural_residuals(&LocalGeometry::new(&s, &p)?));
    Ok(())
}
