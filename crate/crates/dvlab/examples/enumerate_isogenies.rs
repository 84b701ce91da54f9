//! The finite isogeny list: for G_{1,1} over F_{p^2} with Φ = p^{-1}V^2
//! there are exactly p^2 + 1 Φ-stable overlattices of colength one — the
//! lines of the residue plane. Only one of them (the α_p quotient) also
//! carries a transported Dieudonné structure.
//!
//! ```bash
//! cargo run --example enumerate_isogenies
//! ```

use dvlab::dieudonne::DModule;
use dvlab::padic::{Ring, RingParams};
use dvlab::slope::{enumerate_csd_isogenies, SlopeData};

fn main() -> Result<(), dvlab::Error> {
    for p in [2u64, 3] {
        let base = Ring::new(RingParams { p, a: 1, n: 6 })?;
        let g = DModule::make_gmn(1, 1, &base)?.base_change(2)?;
        let sd = SlopeData::new(2, vec![1])?;
        let found = enumerate_csd_isogenies(&g, 1, &sd, 100_000)?;
        let transportable = found.iter().filter(|c| c.isogeny.is_some()).count();
        println!(
            "p = {p}: {} Φ-stable overlattices of log-degree 1 (expected p^2+1 = {}), {} with honest F,V transport",
            found.len(),
            p * p + 1,
            transportable,
        );
    }
    Ok(())
}
