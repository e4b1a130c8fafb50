//! (v)h-torsion, h-curvature, Ricci and scalar curvature of the round sphere
//! and of a Randers deformation of it.

use finsler::curvature::{h_curvature, ricci_h, scalar_h, vh_torsion};
use finsler::metric;
use finsler::ChartPoint;

fn main() -> finsler::Result<()> {
    let p = ChartPoint::new(vec![0.5, -0.25], vec![1.0, 1.0])?;
    for s in [metric::euclidean(2), metric::round_sphere(), metric::randers_sphere()] {
        let rhat = vh_torsion(&s, &p)?.0;
        let r = h_curvature(&s, &p)?.0;
        println!("{}", s.name());
        println!("  R̂^0_01 = {:+.6}, R̂^1_01 = {:+.6}", rhat.get(0, 0, 1), rhat.get(1, 0, 1));
        println!("  R^0_101 = {:+.6}", r.get(0, 1, 0, 1));
        println!("  Ric = {:.6}", ricci_h(&s, &p)?);
        println!("  Sc = {:.12}", scalar_h(&s, &p)?);
    }
    Ok(())
}
