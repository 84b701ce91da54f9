//! Complete slope divisibility: G_{m,n} is completely slope divisible
//! with respect to (m+n, [m]), and the property survives scaling both
//! integers.
//!
//! ```bash
//! cargo run --example csd_divisibility
//! ```

use dvlab::dieudonne::DModule;
use dvlab::padic::{Ring, RingParams};
use dvlab::slope::{is_completely_slope_divisible, SlopeData};

fn main() -> Result<(), dvlab::Error> {
    let p = 2;
    for (m, n) in [(1u32, 1u32), (1, 2), (2, 1), (2, 3), (1, 4)] {
        let ring = Ring::new(RingParams { p, a: 1, n: 3 * m + 3 })?;
        let g = DModule::make_gmn(m, n, &ring)?;
        let sd = SlopeData::new(m + n, vec![m])?;
        let check = is_completely_slope_divisible(&g, &sd)?;
        println!("G_{{{m},{n}}} csd w.r.t. (s, r) = ({}, {}): {}", m + n, m, check.holds);
        for t in [2u32, 3] {
            let scaled = sd.scale(t)?;
            let c = is_completely_slope_divisible(&g, &scaled)?;
            println!("  scaled by {t}: ({}, {}): {}", scaled.s(), scaled.r()[0], c.holds);
        }
    }
    // a failing pair for contrast: p^{-1}V is not integral on G_{1,1}
    let ring = Ring::new(RingParams { p, a: 1, n: 5 })?;
    let g11 = DModule::make_gmn(1, 1, &ring)?;
    let bad = SlopeData::new(1, vec![1])?;
    let check = is_completely_slope_divisible(&g11, &bad)?;
    println!("G_{{1,1}} csd w.r.t. (1, [1]): {} ({})", check.holds, check.failure.unwrap_or_default());
    Ok(())
}
