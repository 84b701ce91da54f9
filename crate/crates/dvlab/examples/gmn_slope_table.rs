//! The slope table of the iso-simple modules G_{m,n}: each is isoclinic
//! of slope m/(m+n) with height m+n.
//!
//! ```bash
//! cargo run --example gmn_slope_table
//! ```

use dvlab::dieudonne::DModule;
use dvlab::newton::newton_polygon;
use dvlab::padic::{Ring, RingParams};

fn main() -> Result<(), dvlab::Error> {
    for p in [2u64, 3] {
        println!("p = {p}");
        for h in 1..=6u32 {
            for m in 0..=h {
                let n = h - m;
                if num_integer::gcd(m, n) != 1 {
                    continue;
                }
                let ring = Ring::new(RingParams { p, a: 1, n: m + 2 })?;
                let g = DModule::make_gmn(m, n, &ring)?;
                let poly = newton_polygon(&g)?;
                println!("  G_{{{m},{n}}}  height {h}  polygon {poly}");
            }
        }
    }
    Ok(())
}
