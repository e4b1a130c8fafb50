//! Fundamental tensor, Cartan tensor and homogeneity on a few structures.

use finsler::metric::{self, cartan_tensor, ell_form, metric_tensor};
use finsler::ChartPoint;

fn main() -> finsler::Result<()> {
    let p = ChartPoint::new(vec![0.3, -0.2], vec![1.0, 0.5])?;
    for s in metric::catalog() {
        let g = metric_tensor(&s, &p)?;
        let c = cartan_tensor(&s, &p)?;
        let l = s.lagrangian_value(&p);
        let twice = s.lagrangian_value(&p.scaled(2.0));
        println!("{}: L = {l:.6}, L(x, 2y) / L = {:.12}", s.name(), twice / l);
        println!("  g = {g:.6}");
        println!("  |C|max = {:.3e}, ℓ = {:.6}", c.max_abs(), ell_form(&s, &p)?.transpose());
    }
    Ok(())
}
