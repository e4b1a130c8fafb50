//! Transfer of closedness under L* = L + b_i(x) y^i with closed b.

use finsler::metric::{self, covector_norm, preset_randers_covector};
use finsler::pi::randers_closedness_transfer;

fn main() -> finsler::Result<()> {
    let base = metric::round_sphere();
    let b = preset_randers_covector();
    let star = metric::randers_change(&base, b.clone());
    for p in star.sample(5, 2)? {
        let r = randers_closedness_transfer(&base, &b, &p)?;
        println!("{p}");
        println!("  |b| = {:.3}, ℓ(m̄) = {:.1e}", covector_norm(&base, &b, &p)?, r.ell_m);
        println!(
            "  i_m̄ g* − i_τm̄ g: {:.3e} as stated, {:.1e} after removing ℓ*(m̄)ℓ* (ℓ*(m̄) = {:.4})",
            r.dual_residual, r.corrected_dual_residual, r.ell_star_m
        );
        println!("  defects: {:.4} in L*, {:.4} in L", r.defect_star, r.defect_base);
    }
    Ok(())
}
