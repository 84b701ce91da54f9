//! Saturation: the fiber at t = 1 of the one-parameter family is not
//! completely slope divisible; the bounded isogeny produced here repairs
//! that, as in the field case of the saturation lemma.
//!
//! ```bash
//! cargo run --example saturation
//! ```

use dvlab::families::ParamFamily;
use dvlab::slope::{canonical_slope_data, csd_saturate, is_completely_slope_divisible};

fn main() -> Result<(), dvlab::Error> {
    for p in [2u64, 3] {
        let family = ParamFamily::new(p, 1, 14)?;
        let fiber = family.fiber(&[1])?;
        let sd = canonical_slope_data(&fiber)?;
        let before = is_completely_slope_divisible(&fiber, &sd)?;
        println!(
            "p = {p}: fiber at t = 1 csd: {} ({})",
            before.holds,
            before.failure.clone().unwrap_or_default()
        );
        let isog = csd_saturate(&fiber)?;
        println!("  saturating isogeny has log-degree {}", isog.log_degree);
        let after =
            is_completely_slope_divisible(&isog.target, &canonical_slope_data(&isog.target)?)?;
        println!("  saturated target csd: {}", after.holds);
    }
    Ok(())
}
