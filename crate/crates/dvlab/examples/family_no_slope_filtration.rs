//! The one-parameter family with constant Newton polygon and no slope
//! filtration: every fiber of (G_{1,1} × G_{1,2})/α_p has polygon
//! [(1/3,3),(1/2,2)], yet the kernel of the map from the first factor
//! jumps from trivial to order p exactly at t = 0.
//!
//! ```bash
//! cargo run --example family_no_slope_filtration
//! ```

use dvlab::families::ParamFamily;

fn main() -> Result<(), dvlab::Error> {
    for p in [2u64, 3, 5] {
        let family = ParamFamily::new(p, 1, 4)?;
        let report = family.sweep()?;
        println!("p = {p}: constant polygon {} = {}", report.constant, report.polygon);
        for (t, k) in report.parameters.iter().zip(&report.kernel_orders) {
            println!("  t = {:?}: ker(ξ_t) has order p^{k}", t);
        }
    }
    // the same sweep over F_4 (the quadratic field needs one more digit
    // for the polygon: the determinant valuation doubles)
    let family = ParamFamily::new(2, 2, 5)?;
    let report = family.sweep()?;
    println!(
        "p = 2 over F_4: constant polygon {}, kernel orders {:?}",
        report.constant, report.kernel_orders
    );
    Ok(())
}
