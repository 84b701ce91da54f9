//! Splitting a completely slope divisible module into isoclinic
//! summands, with an explicit basis witness.
//!
//! ```bash
//! cargo run --example split_isoclinic_summands
//! ```

use dvlab::dieudonne::DModule;
use dvlab::newton::newton_polygon;
use dvlab::padic::{Ring, RingParams};
use dvlab::slope::split_isoclinic;

fn main() -> Result<(), dvlab::Error> {
    let ring = Ring::new(RingParams { p: 2, a: 1, n: 6 })?;
    let module = DModule::direct_sum(
        &DModule::direct_sum(&DModule::make_gmn(0, 1, &ring)?, &DModule::make_gmn(1, 1, &ring)?)?,
        &DModule::make_gmn(1, 0, &ring)?,
    )?;
    println!("input polygon: {}", newton_polygon(&module)?);
    let split = split_isoclinic(&module)?;
    for part in &split.parts {
        println!("  summand of rank {}: polygon {}", part.rank(), newton_polygon(part)?);
    }
    let sum = split
        .parts
        .iter()
        .skip(1)
        .fold(Ok(split.parts[0].clone()), |acc: Result<_, dvlab::Error>, p| {
            DModule::direct_sum(&acc?, p)
        })?;
    let module_t = module.truncate_to_precision(split.parts[0].ring().precision())?;
    let conj = module_t.conjugate(&split.witness.inverse()?)?;
    println!("witness conjugates the input to the direct sum: {}", conj == sum);
    Ok(())
}
