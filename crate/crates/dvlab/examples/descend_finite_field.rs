//! Descent to the minimal finite field: an isoclinic completely slope
//! divisible module over F_{p^4} of slope 1/2 has a basis of Φ-invariant
//! vectors for Φ = p^{-1}V^2, hence a model over F_{p^2}.
//!
//! ```bash
//! cargo run --example descend_finite_field
//! ```

use dvlab::dieudonne::{verify_witness, DModule};
use dvlab::padic::{Ring, RingParams};
use dvlab::semilinear::Mat;
use dvlab::slope::{descend_finite_field, SlopeData};

fn main() -> Result<(), dvlab::Error> {
    let p = 3;
    let base = Ring::new(RingParams { p, a: 1, n: 6 })?;
    let big_ring = Ring::new(RingParams { p, a: 4, n: 6 })?;
    let g = DModule::make_gmn(1, 1, &base)?.base_change(4)?;

    // hide the rational structure behind a change of basis
    let t = Mat::from_fn(&big_ring, 2, 2, |i, j| match (i, j) {
        (0, 0) => big_ring.one(),
        (1, 1) => big_ring.one(),
        (0, 1) => big_ring.generator(),
        _ => big_ring.zero(),
    });
    let hidden = g.conjugate(&t)?;

    let sd = SlopeData::new(2, vec![1])?;
    let descent = descend_finite_field(&hidden, &sd)?;
    println!(
        "input over F_{{{p}^{}}}, model over F_{{{p}^{}}}, rank {}",
        big_ring.degree(),
        descent.model.ring().degree(),
        descent.model.rank()
    );
    let back = descent.model.base_change(4)?;
    println!(
        "witness verifies T∘F_model = F_input∘T: {}",
        verify_witness(&back, &descent.base_changed_input, &descent.witness)
    );
    Ok(())
}
