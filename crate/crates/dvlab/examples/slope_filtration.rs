//! The unique slope filtration: on G_{1,1} ⊕ G_{1,2} it has two steps
//! with graded slopes 1/2 > 1/3, and it is invariant under changing the
//! basis of the module.
//!
//! ```bash
//! cargo run --example slope_filtration
//! ```

use dvlab::dieudonne::DModule;
use dvlab::padic::{Ring, RingParams};
use dvlab::semilinear::Mat;
use dvlab::slope::slope_filtration;

fn main() -> Result<(), dvlab::Error> {
    let ring = Ring::new(RingParams { p: 2, a: 1, n: 6 })?;
    let module = DModule::direct_sum(
        &DModule::make_gmn(1, 1, &ring)?,
        &DModule::make_gmn(1, 2, &ring)?,
    )?;
    let filt = slope_filtration(&module)?;
    println!("slopes: {:?}", filt.slopes.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    for (i, step) in filt.steps.iter().enumerate() {
        println!("  Y_{}: rank {}", i + 1, step.rank());
    }

    // uniqueness: a unit change of basis moves the filtration along
    let t = Mat::from_fn(&ring, 5, 5, |i, j| {
        ring.from_u64(match (i, j) {
            _ if i == j => 1,
            (0, 3) => 3,
            (1, 2) => 1,
            (2, 4) => 5,
            _ => 0,
        })
    });
    let conj = module.conjugate(&t)?;
    let filt_conj = slope_filtration(&conj)?;
    // compare at the precision the filtrations are stated at
    let cmp_ring = &filt_conj.ring;
    let t_small = t.truncate_to(cmp_ring)?;
    let moved: Vec<_> = filt
        .steps[0]
        .truncate_to(cmp_ring)?
        .generators()
        .iter()
        .map(|g| t_small.mul_vec(g).unwrap())
        .collect();
    let moved_sub = dvlab::semilinear::Submodule::from_generators(cmp_ring, 5, &moved);
    println!(
        "filtration of the conjugate equals the moved filtration: {}",
        filt_conj.steps[0] == moved_sub
    );
    Ok(())
}
