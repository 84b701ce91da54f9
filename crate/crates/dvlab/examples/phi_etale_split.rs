//! The Φ-étale part: for Φ = V on G_{0,1} ⊕ G_{1,1}, the module splits
//! into the étale line (where V is a unit) and the nilpotent plane.
//!
//! ```bash
//! cargo run --example phi_etale_split
//! ```

use dvlab::dieudonne::{is_isomorphic, DModule};
use dvlab::padic::{Ring, RingParams};
use dvlab::slope::phi_etale_split;

fn main() -> Result<(), dvlab::Error> {
    let ring = Ring::new(RingParams { p: 2, a: 1, n: 5 })?;
    let etale_line = DModule::make_gmn(0, 1, &ring)?;
    let plane = DModule::make_gmn(1, 1, &ring)?;
    let module = DModule::direct_sum(&etale_line, &plane)?;
    let split = phi_etale_split(&module, 0, 1)?;
    println!("module of rank {}", module.rank());
    println!("  Φ-étale part: rank {}", split.etale.rank());
    println!("  Φ-nilpotent part: rank {}", split.nil.rank());
    println!(
        "  étale ≅ G_{{0,1}}: {}",
        is_isomorphic(&split.etale, &etale_line)?.is_yes()
    );
    println!("  nil ≅ G_{{1,1}}: {}", is_isomorphic(&split.nil, &plane)?.is_yes());

    // on G_{1,1} itself, Φ = p^{-1}V^2 is the identity: everything étale
    let split = phi_etale_split(&plane, 1, 2)?;
    println!("G_{{1,1}} with Φ = p^-1 V^2: étale rank {}", split.etale.rank());
    Ok(())
}
