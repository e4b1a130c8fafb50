//! Closed π-vector fields: self-adjointness of A, gradients on flat and
//! curved structures, and involutivity of the orthogonal distribution.

use finsler::metric;
use finsler::pi::{closedness_defect, eq212_residual, involutivity_defect, selfadjoint_defect};
use finsler::probes;
use finsler::{ChartPoint, PiVectorField};

fn main() -> finsler::Result<()> {
    let p = ChartPoint::new(vec![0.3, 0.4], vec![-0.7, 1.1])?;
    for s in [metric::minkowski_quartic(2), metric::round_sphere()] {
        println!("{}", s.name());
        for (family, x) in probes::probe_fields(2) {
            println!(
                "  {family:<10} {:<10} closedness {:.3e}  self-adjointness {:.3e}",
                x.name(),
                closedness_defect(&s, &x, &p)?,
                selfadjoint_defect(&s, &x, &p)?
            );
        }
        let o = eq212_residual(&s, &probes::curvature_probe(), &p)?;
        println!("  grad ½(y¹)²: obstruction {:.6} vs torsion term {:.6}", o.lhs_max(), o.rhs_max());
        for (name, h) in probes::position_functions(2) {
            let x = PiVectorField::exact_dual(&s, h);
            let r = involutivity_defect(&s, &x, &p)?;
            println!("  grad {name}: bracket defect {:.2e}", r.bracket_defect);
        }
    }
    Ok(())
}
