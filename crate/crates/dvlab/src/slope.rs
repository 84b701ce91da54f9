//! Slope structures: Φ-étale splittings, slope filtrations, complete
//! slope divisibility, saturation to a completely slope divisible module,
//! descent to the minimal finite field, and the finite enumeration of
//! bounded-degree isogenies to completely slope divisible targets.
//!
//! The operator everywhere is `Φ = p^{-r}V^s` for integers `s ≥ r ≥ 0`;
//! a module is isoclinic of slope r/s exactly when some lattice in its
//! isocrystal is Φ-stable with Φ bijective.

use num_integer::Integer;
use num_rational::Ratio;
use serde_json::{json, Value};

use crate::dieudonne::{DModule, IsogenyData};
use crate::error::{Error, Result};
use crate::newton::{newton_polygon, NewtonPolygon};
use crate::padic::{Embedding, Ring, RingElem, RingParams};
use crate::semilinear::{
    fitting_decomposition, subring_basis, vec_add, vec_mul_pow_p, vec_scale, vec_zero,
    Lattice, Mat, SemiLinOp, Submodule,
};

/// The integers of a complete-slope-divisibility statement:
/// `s ≥ r_1 > r_2 > … > r_m ≥ 0`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SlopeData {
    s: u32,
    r: Vec<u32>,
}

impl SlopeData {
    pub fn new(s: u32, r: Vec<u32>) -> Result<SlopeData> {
        if s == 0 || r.is_empty() {
            return Err(Error::InvalidParams("slope data needs s > 0 and at least one r".into()));
        }
        if r[0] > s {
            return Err(Error::InvalidParams(format!("r_1 = {} exceeds s = {s}", r[0])));
        }
        if !r.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidParams("the r_i must be strictly decreasing".into()));
        }
        Ok(SlopeData { s, r })
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn r(&self) -> &[u32] {
        &self.r
    }

    pub fn scale(&self, t: u32) -> Result<SlopeData> {
        SlopeData::new(self.s * t, self.r.iter().map(|&x| x * t).collect())
    }

    pub fn slopes(&self) -> Vec<Ratio<u64>> {
        self.r.iter().map(|&x| Ratio::new(x as u64, self.s as u64)).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({ "s": self.s, "r": self.r })
    }

    pub fn from_json(v: &Value) -> Result<SlopeData> {
        let s = v
            .get("s")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("slope data: missing s".into()))? as u32;
        let r = v
            .get("r")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("slope data: missing r".into()))?
            .iter()
            .map(|x| x.as_u64().map(|y| y as u32).ok_or_else(|| Error::Parse("slope data: bad r".into())))
            .collect::<Result<Vec<_>>>()?;
        SlopeData::new(s, r)
    }
}

/// A slope filtration `0 ⊂ Y_1 ⊂ … ⊂ Y_m = M` with strictly decreasing
/// graded slopes; the steps are saturated stable submodules, stated over
/// the ring at which they are trustworthy (Φ-divisions erode precision).
#[derive(Clone, Debug)]
pub struct Filtration {
    /// Precision at which the steps are exact.
    pub ring: Ring,
    /// λ_1 > … > λ_m
    pub slopes: Vec<Ratio<u64>>,
    /// Y_1 ⊂ … ⊂ Y_m (Y_m is the full module)
    pub steps: Vec<Submodule>,
}

impl Filtration {
    pub fn to_json(&self) -> Value {
        json!({
            "slopes": self.slopes.iter().map(|s| format!("{}/{}", s.numer(), s.denom())).collect::<Vec<_>>(),
            "steps": self
                .steps
                .iter()
                .map(|step| {
                    Value::Array(
                        step.generators()
                            .iter()
                            .map(|g| Value::Array(g.iter().map(|e| self.ring.elem_to_json(e)).collect()))
                            .collect(),
                    )
                })
                .collect::<Vec<_>>(),
        })
    }
}

/// `Φ = p^{-r}·V^s` together with the module restated at precision N−r:
/// the quotient by p^r is only trustworthy there, so both are returned
/// over the truncated ring. `NotIntegral` when p^r does not divide the
/// matrix of V^s (tested at full precision).
pub fn phi_operator(module: &DModule, r: u32, s: u32) -> Result<(DModule, SemiLinOp)> {
    let n = module.ring().precision();
    if r >= n {
        return Err(Error::InsufficientPrecision(format!(
            "p^-{r} V^{s} is meaningless at precision {n}"
        )));
    }
    let vs = module.v().pow(s);
    let full = vs.div_pow_p_exact(r).ok_or(Error::NotIntegral)?;
    if r == 0 {
        return Ok((module.clone(), full));
    }
    let parent = module.truncate_to_precision(n - r)?;
    let phi = SemiLinOp::new(parent.ring(), full.matrix().truncate_to(parent.ring())?, full.twist())?;
    Ok((parent, phi))
}

/// Result of a Φ-étale splitting: the module decomposes internally as
/// nil ⊕ étale with both parts F,V-stable. For r > 0 the split happens at
/// precision N−r; `parent` is the input restated there.
pub struct PhiSplit {
    pub parent: DModule,
    pub nil: DModule,
    pub etale: DModule,
    /// columns: basis of the nil part in the parent's coordinates
    pub nil_basis: Mat,
    pub etale_basis: Mat,
}

/// Split off the Φ-étale part for Φ = p^{-r}V^s.
pub fn phi_etale_split(module: &DModule, r: u32, s: u32) -> Result<PhiSplit> {
    let (parent, phi) = phi_operator(module, r, s)?;
    let (bij, nil) = fitting_decomposition(&phi)?;
    let (nil_dm, nil_basis) = parent.restrict_to(&nil)?;
    let (etale_dm, etale_basis) = parent.restrict_to(&bij)?;
    Ok(PhiSplit { parent, nil: nil_dm, etale: etale_dm, nil_basis, etale_basis })
}

/// The canonical slope data of a module: s = lcm of the polygon's slope
/// denominators, r_i = λ_i·s in decreasing order.
pub fn canonical_slope_data(module: &DModule) -> Result<SlopeData> {
    let poly = newton_polygon(module)?;
    if poly.points().is_empty() {
        // rank 0: any data will do
        return SlopeData::new(1, vec![0]);
    }
    let s = poly.points().iter().fold(1u64, |acc, (sl, _)| acc.lcm(sl.denom()));
    let mut r: Vec<u32> = poly
        .slopes_descending()
        .iter()
        .map(|(sl, _)| ((sl * Ratio::from_integer(s)).to_integer()) as u32)
        .collect();
    r.dedup();
    SlopeData::new(s as u32, r)
}

/// Outcome of a complete-slope-divisibility test.
pub struct CsdCheck {
    pub holds: bool,
    /// The unique filtration when the test succeeds.
    pub filtration: Option<Filtration>,
    /// First failing condition otherwise.
    pub failure: Option<String>,
}

/// Test Definition-style complete slope divisibility with respect to
/// `sd`, building the filtration greedily from the top: at each level the
/// quasi-isogeny `p^{-r_i}V^s` must be integral, and the next step down is
/// forced to be its Φ-nilpotent part.
pub fn is_completely_slope_divisible(module: &DModule, sd: &SlopeData) -> Result<CsdCheck> {
    let ring = module.ring();
    let h = module.rank();
    let mut cur = module.clone();
    let mut basis = Mat::identity(ring, h); // h×k embedding of the current step
    let mut steps_desc: Vec<Submodule> = vec![Submodule::full(ring, h)];
    for (level, &ri) in sd.r.iter().enumerate().rev() {
        if cur.rank() == 0 {
            break;
        }
        let (parent, phi) = match phi_operator(&cur, ri, sd.s) {
            Ok(pair) => pair,
            Err(Error::NotIntegral) => {
                return Ok(CsdCheck {
                    holds: false,
                    filtration: None,
                    failure: Some(format!(
                        "p^-{ri} V^{} is not an isogeny on filtration level {}",
                        sd.s,
                        level + 1
                    )),
                });
            }
            Err(e) => return Err(e),
        };
        // the division by p^{r_i} eroded the precision; restate the
        // level's coordinates there
        basis = basis.truncate_to(parent.ring())?;
        let (_, nil) = fitting_decomposition(&phi)?;
        // map the nil part into original coordinates
        let gens: Vec<Vec<RingElem>> =
            nil.generators().iter().map(|g| basis.mul_vec(g).expect("shape")).collect();
        let step = Submodule::from_generators(parent.ring(), h, &gens);
        steps_desc.push(step);
        let (next, rel) = parent.restrict_to(&nil)?;
        basis = basis.mul(&rel)?;
        cur = next;
    }
    if cur.rank() != 0 {
        return Ok(CsdCheck {
            holds: false,
            filtration: None,
            failure: Some(format!(
                "a Φ-nilpotent part of rank {} is left below the smallest slope r_m/s",
                cur.rank()
            )),
        });
    }
    // steps_desc = [Y_m, Y_{m-1}, ..., Y_0]; drop Y_0 = 0, re-order
    // ascending, and state everything at the final precision
    steps_desc.pop();
    steps_desc.reverse();
    let final_ring = cur.ring().clone();
    let steps: Vec<Submodule> =
        steps_desc.iter().map(|s| s.truncate_to(&final_ring)).collect::<Result<_>>()?;
    let filtration = Filtration { ring: final_ring, slopes: sd.slopes(), steps };
    Ok(CsdCheck { holds: true, filtration: Some(filtration), failure: None })
}

/// `L = Σ_{t≥0} Φ^t(M)` for Φ = p^{-r}V^s: the smallest Φ-stable
/// overlattice of the standard lattice. Stabilizes because denominators
/// are bounded on each slope part.
pub fn phi_saturation_lattice(module: &DModule, r: u32, s: u32) -> Result<Lattice> {
    let ring = module.ring();
    let h = module.rank();
    let n = ring.precision();
    let vs = module.v().pow(s);
    let std = Lattice::standard(ring, h);
    // fast path: Φ already integral on M, no denominators appear at all
    let image = std.apply(&vs, r)?;
    if std.contains_lattice(&image) {
        return Ok(std);
    }
    let mut l = std;
    let t_max = h as u32 * n + 1;
    for _ in 0..t_max {
        let image = l.apply(&vs, r)?;
        let next = l.sum(&image);
        if next.denominator_exp() >= n {
            return Err(Error::PrecisionExhausted(format!(
                "saturation denominator p^{} at precision {n}",
                next.denominator_exp()
            )));
        }
        if next == l {
            return Ok(l);
        }
        l = next;
    }
    Err(Error::NoStabilization)
}

/// The unique slope filtration of a module over a finite field, built by
/// peeling the smallest slope off the top: the last graded piece is
/// necessarily the Φ-étale part for Φ = p^{-r_m}V^s.
pub fn slope_filtration(module: &DModule) -> Result<Filtration> {
    let ring = module.ring();
    let h = module.rank();
    let mut slopes: Vec<Ratio<u64>> = vec![];
    let mut steps_desc: Vec<Submodule> = vec![Submodule::full(ring, h)];
    let mut cur = module.clone();
    let mut basis = Mat::identity(ring, h);
    loop {
        if cur.rank() == 0 {
            break;
        }
        let poly = newton_polygon(&cur)?;
        let desc = poly.slopes_descending();
        let lambda_min = desc.last().expect("nonzero rank has slopes").0;
        slopes.push(lambda_min);
        if desc.len() == 1 {
            break;
        }
        let sd = canonical_slope_data(&cur)?;
        let r_min = *sd.r().last().unwrap();
        // make Φ integral by passing to the Φ-saturation, split there, and
        // intersect the nil part back into the module
        let sat = phi_saturation_lattice(&cur, r_min, sd.s())?;
        let (parent, nil_in_parent) = if sat.denominator_exp() == 0 && sat.known_mod() >= cur.ring().precision() {
            let (parent, phi) = phi_operator(&cur, r_min, sd.s())?;
            let (_, nil) = fitting_decomposition(&phi)?;
            (parent, nil)
        } else {
            let isog = cur.isogeny_from_lattice(&sat)?;
            let (sat_parent, phi_l) = phi_operator(&isog.target, r_min, sd.s())?;
            let (_, nil_l) = fitting_decomposition(&phi_l)?;
            // nil_l lives in L-coordinates at the eroded precision; pull it
            // into the module through the (truncated) overlattice basis
            let work_ring = sat_parent.ring().clone();
            let map = isog.lattice_map.truncate_to(&work_ring)?;
            let gens: Vec<Vec<RingElem>> =
                nil_l.generators().iter().map(|g| map.mul_vec(g).expect("shape")).collect();
            let nil =
                Submodule::from_generators(&work_ring, cur.rank(), &gens).saturate();
            (cur.truncate_to_precision(work_ring.precision())?, nil)
        };
        basis = basis.truncate_to(parent.ring())?;
        let (next, rel) = parent.restrict_to(&nil_in_parent)?;
        // record the step in original coordinates
        let gens: Vec<Vec<RingElem>> =
            nil_in_parent.generators().iter().map(|g| basis.mul_vec(g).expect("shape")).collect();
        steps_desc.push(Submodule::from_generators(parent.ring(), h, &gens));
        basis = basis.mul(&rel)?;
        cur = next;
    }
    // the loop peels smallest slopes first; steps and slopes both come out
    // top-down and the filtration is recorded bottom-up
    steps_desc.reverse();
    slopes.reverse();
    let final_ring = cur.ring().clone();
    let steps: Vec<Submodule> =
        steps_desc.iter().map(|s| s.truncate_to(&final_ring)).collect::<Result<_>>()?;
    let filtration = Filtration { ring: final_ring, slopes, steps };
    verify_filtration(module, &filtration)?;
    Ok(filtration)
}

/// Check that the graded pieces of a filtration are isoclinic of the
/// stated slopes, in decreasing order, reproducing the module's polygon.
/// The check runs at the filtration's own precision.
pub fn verify_filtration(module: &DModule, filt: &Filtration) -> Result<()> {
    let module = &module.truncate_to_precision(filt.ring.precision())?;
    let expected = newton_polygon(module)?;
    if filt.steps.len() != filt.slopes.len() {
        return Err(Error::InvalidParams("filtration arity mismatch".into()));
    }
    let mut graded: Vec<(Ratio<u64>, u64)> = vec![];
    for (i, step) in filt.steps.iter().enumerate() {
        let (sub_dm, step_basis) = module.restrict_to(step)?;
        let piece = if i == 0 {
            sub_dm
        } else {
            // quotient of Y_i by Y_{i-1}, computed inside Y_i in the
            // coordinates of the restriction basis
            let prev = &filt.steps[i - 1];
            let solver =
                crate::semilinear::SpanSolver::new(module.ring(), module.rank(), &step_basis.columns());
            let prev_in_step: Vec<Vec<RingElem>> = prev
                .generators()
                .iter()
                .map(|g| solver.solve(g).ok_or_else(|| Error::InvalidParams("filtration steps not nested".into())))
                .collect::<Result<_>>()?;
            let prev_sub = Submodule::from_generators(module.ring(), sub_dm.rank(), &prev_in_step);
            let (q, _) = sub_dm.quotient_by(&prev_sub)?;
            q
        };
        if piece.rank() == 0 {
            continue;
        }
        let slope = crate::newton::is_isoclinic(&piece)?
            .ok_or_else(|| Error::InsufficientPrecision("graded piece is not isoclinic".into()))?;
        if slope != filt.slopes[i] {
            return Err(Error::InsufficientPrecision(format!(
                "graded slope {slope} differs from recorded {}",
                filt.slopes[i]
            )));
        }
        graded.push((slope, piece.rank() as u64));
    }
    let assembled = NewtonPolygon::from_points(graded);
    if assembled != expected {
        return Err(Error::InsufficientPrecision(format!(
            "graded polygon {assembled} does not reproduce {expected}"
        )));
    }
    // strictly decreasing slopes
    if !filt.slopes.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::InvalidParams("filtration slopes not strictly decreasing".into()));
    }
    Ok(())
}

/// A decomposition into isoclinic summands with its basis witness.
pub struct SplitResult {
    /// Parts in decreasing slope order.
    pub parts: Vec<DModule>,
    /// Columns: the concatenated part bases in the input coordinates, so
    /// `direct_sum(parts) = input.conjugate(witness^{-1})`.
    pub witness: Mat,
}

/// Split a completely slope divisible module into isoclinic summands by
/// iterating Φ-étale splittings with Φ = p^{-r_m}V^s. All parts and the
/// witness are stated at the final (most eroded) precision.
pub fn split_isoclinic(module: &DModule) -> Result<SplitResult> {
    let sd = canonical_slope_data(module)?;
    let check = is_completely_slope_divisible(module, &sd)?;
    if !check.holds {
        return Err(Error::NotCsd(check.failure.unwrap_or_default()));
    }
    let ring = module.ring();
    let h = module.rank();
    fn recurse(cur: &DModule, basis: &Mat, out: &mut Vec<(DModule, Mat)>) -> Result<()> {
        if cur.rank() == 0 {
            return Ok(());
        }
        let sd = canonical_slope_data(cur)?;
        if sd.r().len() == 1 {
            out.push((cur.clone(), basis.clone()));
            return Ok(());
        }
        let r_min = *sd.r().last().unwrap();
        let split = phi_etale_split(cur, r_min, sd.s())?;
        let basis = basis.truncate_to(split.parent.ring())?;
        recurse(&split.nil, &basis.mul(&split.nil_basis)?, out)?;
        out.push((split.etale, basis.mul(&split.etale_basis)?));
        Ok(())
    }
    let mut collected: Vec<(DModule, Mat)> = vec![];
    recurse(module, &Mat::identity(ring, h), &mut collected)?;
    // restate all parts at the common final precision
    let min_n = collected.iter().map(|(p, _)| p.ring().precision()).min().unwrap_or(ring.precision());
    let final_ring = ring.with_precision(min_n)?;
    let mut parts = Vec::with_capacity(collected.len());
    let mut witness = Mat::zero(&final_ring, h, h);
    let mut col = 0;
    for (part, emb) in &collected {
        parts.push(part.truncate_to_precision(min_n)?);
        let emb = emb.truncate_to(&final_ring)?;
        for c in 0..part.rank() {
            for r in 0..h {
                witness.set(r, col, emb.at(r, c).clone());
            }
            col += 1;
        }
    }
    Ok(SplitResult { parts, witness })
}

/// Saturate to a completely slope divisible module: the minimal isogeny
/// obtained by adjoining `Σ Φ^t(M)` for the smallest slope, splitting off
/// the Φ-étale part, and recursing on the nilpotent part.
pub fn csd_saturate(module: &DModule) -> Result<IsogenyData> {
    let _ring = module.ring();
    let h = module.rank();
    if h == 0 {
        return Ok(IsogenyData::identity(module));
    }
    let sd = canonical_slope_data(module)?;
    if is_completely_slope_divisible(module, &sd)?.holds {
        return Ok(IsogenyData::identity(module));
    }
    let r_min = *sd.r().last().unwrap();
    let sat = phi_saturation_lattice(module, r_min, sd.s())?;
    let first = module.isogeny_from_lattice(&sat)?;
    let mid = &first.target;
    // Φ is integral on the saturation; split off its étale part
    let split = phi_etale_split(mid, r_min, sd.s())?;
    if split.nil.rank() == 0 {
        // isoclinic: the saturation is already completely slope divisible
        return Ok(first);
    }
    let rest = csd_saturate(&split.nil)?;
    // assemble the overlattice of the (split-precision) middle module:
    // étale basis plus the saturated nil part mapped through its own
    // overlattice; everything is stated at the precision of the nil
    // recursion's source
    let asm_ring = rest.source.ring().clone();
    let e = rest.lattice_denom;
    let etale_basis = split.etale_basis.truncate_to(&asm_ring)?;
    let nil_basis = split.nil_basis.truncate_to(&asm_ring)?;
    let mut gens: Vec<Vec<RingElem>> = etale_basis
        .columns()
        .iter()
        .map(|c| vec_mul_pow_p(&asm_ring, c, e))
        .collect();
    for c in rest.lattice_map.columns() {
        gens.push(nil_basis.mul_vec(&c).expect("shape"));
    }
    let asm_mid = split.parent.truncate_to_precision(asm_ring.precision())?;
    let l2 = Lattice::new(&asm_ring, asm_mid.rank(), e, &gens);
    let second = asm_mid.isogeny_from_lattice(&l2)?;
    IsogenyData::compose(&first, &second)
}

/// An exact basis of Φ-invariant vectors for Φ = p^{-r}V^s bijective:
/// residue-level fixed vectors, lifted by successive approximation so
/// that each satisfies `V^s·b = p^r·b` on the nose at full precision.
/// (The raw kernel of `V^s − p^r` also contains p^{N-1}-torsion noise
/// that would poison exact coefficient solves downstream.)
pub fn phi_invariant_basis(
    module: &DModule,
    r: u32,
    s: u32,
    emb: &Embedding,
    expected: usize,
) -> Result<Vec<Vec<RingElem>>> {
    use crate::padic::Valuation;
    use crate::semilinear::{kernel_of_mat, vec_is_zero, vec_sub, SpanSolver};
    let ring = module.ring();
    let n = ring.precision();
    let h = module.rank();
    let a = ring.degree();
    let vs = module.v().pow(s);
    let phi_full = vs.div_pow_p_exact(r).ok_or(Error::NotIntegral)?;
    // Φ mod p is exact (r < N); its fixed space is the residue datum
    let ring1 = ring.with_precision(1)?;
    let phi1 = SemiLinOp::new(&ring1, phi_full.matrix().truncate_to(&ring1)?, phi_full.twist())?;
    let lin1 = phi1.linearize();
    let scalar1 = ring1.scalar_ring();
    let diff1 = lin1.sub(&Mat::identity(&scalar1, h * a))?;
    let ker1 = kernel_of_mat(&diff1);
    let candidates: Vec<Vec<RingElem>> = ker1
        .generators()
        .iter()
        .map(|v| {
            SemiLinOp::unflatten_vec(&ring1, v)
                .iter()
                .map(|e| ring.lift_residues(&ring1.reduce_mod_p(e)))
                .collect()
        })
        .collect();
    let basis0 = subring_basis(ring, emb, &candidates, expected).ok_or(Error::DescentFailed)?;
    // refinement solver over the residue scalars
    let solver1 = SpanSolver::new(&scalar1, h * a, &diff1.columns());
    let mut out = Vec::with_capacity(expected);
    for mut x in basis0 {
        loop {
            let defect = vec_sub(ring, &vs.apply(&x)?, &vec_mul_pow_p(ring, &x, r));
            if vec_is_zero(ring, &defect) {
                break;
            }
            let val = defect.iter().map(|e| ring.valuation(e)).min().unwrap();
            let k_cur = match val {
                Valuation::Infinite => break,
                Valuation::Finite(v) => {
                    debug_assert!(v > r, "defect valuation must exceed r");
                    v - r
                }
            };
            if k_cur >= n {
                break;
            }
            // defect = p^{r+k}·ε; solve (Φ̄ − 1)·δ = −ε mod p and correct
            let eps: Vec<RingElem> = defect
                .iter()
                .map(|e| ring.div_pow_p_exact(e, r + k_cur).expect("defect valuation"))
                .collect();
            let eps1: Vec<RingElem> = SemiLinOp::flatten_vec(ring, &eps)
                .iter()
                .map(|e| {
                    let res = ring.scalar_ring().reduce_mod_p(e);
                    scalar1.lift_residues(&res)
                })
                .collect();
            let neg_eps1: Vec<RingElem> = eps1.iter().map(|e| scalar1.neg(e)).collect();
            let delta1 = solver1.solve(&neg_eps1).ok_or(Error::DescentFailed)?;
            let delta: Vec<RingElem> = SemiLinOp::unflatten_vec(&ring1, &delta1)
                .iter()
                .map(|e| ring.lift_residues(&ring1.reduce_mod_p(e)))
                .collect();
            x = vec_add(ring, &x, &vec_mul_pow_p(ring, &delta, k_cur));
        }
        debug_assert_eq!(vs.apply(&x)?, vec_mul_pow_p(ring, &x, r));
        out.push(x);
    }
    Ok(out)
}

/// The Φ-fixed lattice for Φ = p^{-r}V^s, computed division-free as the
/// kernel of `lin(V^s) - p^r·id` over Z/p^N — exact at full working
/// precision, unlike anything that divides by p^r first.
pub fn phi_fixed_points(module: &DModule, r: u32, s: u32) -> Result<crate::semilinear::FixedLattice> {
    let ring = module.ring();
    let n = ring.precision();
    if r >= n {
        return Err(Error::InsufficientPrecision(format!(
            "p^-{r} V^{s} is meaningless at precision {n}"
        )));
    }
    let a = ring.degree();
    let vs = module.v().pow(s);
    let lin = vs.linearize();
    let scalar = ring.scalar_ring();
    let shifted_id = Mat::identity(&scalar, lin.rows()).mul_pow_p(r);
    let diff = lin.sub(&shifted_id)?;
    let ker = crate::semilinear::kernel_of_mat(&diff);
    let t = (s as usize) % a;
    let g = if t == 0 { a } else { a.gcd(&t) };
    let generators: Vec<Vec<RingElem>> =
        ker.generators().iter().map(|v| SemiLinOp::unflatten_vec(ring, v)).collect();
    Ok(crate::semilinear::FixedLattice { subring_degree: g, generators })
}

/// A finite-field model of an isoclinic completely slope divisible
/// module: Prop-1.4-style descent through the Φ-fixed lattice.
pub struct Descent {
    /// The model over `W_N(F_{p^s})`.
    pub model: DModule,
    /// The input after the base change to `F_{p^{lcm(a,s)}}` (equal to the
    /// input when s | a).
    pub base_changed_input: DModule,
    /// Witness T with `T ∘ F_model⊗1 = F_input ∘ T`: columns are the
    /// Φ-invariant basis in the input coordinates.
    pub witness: Mat,
}

/// Descend an isoclinic module, completely slope divisible with respect
/// to `(s, [r])`, to its model over `F_{p^s}`.
pub fn descend_finite_field(module: &DModule, sd: &SlopeData) -> Result<Descent> {
    if sd.r().len() != 1 {
        return Err(Error::InvalidParams("descent expects isoclinic slope data (single r)".into()));
    }
    let r = sd.r()[0];
    let s = sd.s();
    let check = is_completely_slope_divisible(module, sd)?;
    if !check.holds {
        return Err(Error::NotCsd(check.failure.unwrap_or_default()));
    }
    let a = module.ring().degree();
    let a_big = (a as u64).lcm(&(s as u64)) as usize;
    let big_full = if a_big == a { module.clone() } else { module.base_change(a_big)? };
    let h = big_full.rank();
    let emb_full = Embedding::new(
        &Ring::new(RingParams { p: big_full.ring().p(), a: s as usize, n: big_full.ring().precision() })?,
        big_full.ring(),
    )?;
    let basis_full = phi_invariant_basis(&big_full, r, s, &emb_full, h)?;
    // exactly-fixed vectors at precision N are honest invariant vectors
    // mod p^{N-r} — finer digits of the fixed lattice are not determined
    // by a mod-p^N module — so the model and witness are stated at N-r
    let n_model = big_full.ring().precision() - r;
    if n_model < 1 {
        return Err(Error::PrecisionExhausted("descent erodes r digits".into()));
    }
    let big = big_full.truncate_to_precision(n_model)?;
    let ring = big.ring().clone();
    let small = Ring::new(RingParams { p: ring.p(), a: s as usize, n: n_model })?;
    let emb = Embedding::new(&small, &ring)?;
    let basis: Vec<Vec<RingElem>> = basis_full
        .iter()
        .map(|b| b.iter().map(|e| big_full.ring().truncate_elem(&ring, e)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    // express F and V on the fixed basis with coefficients in the subring
    let flat = |v: &[RingElem]| SemiLinOp::flatten_vec(&ring, v);
    let mut span_gens: Vec<Vec<RingElem>> = vec![];
    for b in &basis {
        let mut tb = b.clone();
        for _ in 0..s {
            span_gens.push(flat(&tb));
            tb = vec_scale(&ring, emb.theta(), &tb);
        }
    }
    let scalar = ring.scalar_ring();
    let solver = crate::semilinear::SpanSolver::new(&scalar, h * ring.degree(), &span_gens);
    let coeffs_in_small = |target: &[RingElem]| -> Result<Vec<RingElem>> {
        let c = solver.solve(&flat(target)).ok_or(Error::DescentFailed)?;
        // c has s coefficients per basis vector: the subring element with
        // those power-basis coordinates
        let mut out = Vec::with_capacity(h);
        for i in 0..h {
            let residues: Vec<_> = (0..s as usize).map(|j| c[i * s as usize + j].coeffs()[0].clone()).collect();
            out.push(small.from_residues(residues)?);
        }
        Ok(out)
    };
    let mut fm = Mat::zero(&small, h, h);
    let mut vm = Mat::zero(&small, h, h);
    for (j, b) in basis.iter().enumerate() {
        let fb = big.f().apply(b)?;
        let vb = big.v().apply(b)?;
        for (i, c) in coeffs_in_small(&fb)?.into_iter().enumerate() {
            fm.set(i, j, c);
        }
        for (i, c) in coeffs_in_small(&vb)?.into_iter().enumerate() {
            vm.set(i, j, c);
        }
    }
    let model = DModule::new(&small, SemiLinOp::new(&small, fm, 1)?, SemiLinOp::new(&small, vm, -1)?)?;
    let witness = Mat::from_columns(&ring, h, &basis);
    Ok(Descent { model, base_changed_input: big, witness })
}

/// One member of the Lemma-2.5 enumeration: a Φ-stable overlattice of the
/// stated colength. The honest Dieudonné structure transports to the
/// overlattice only when it is also F,V-stable; `isogeny` records that
/// transport when it exists.
pub struct CsdIsogenyCandidate {
    pub lattice: Lattice,
    pub log_degree: u32,
    pub isogeny: Option<IsogenyData>,
}

/// Enumerate the complete finite list of Φ-stable overlattices
/// `L ⊇ M` with `length(L/M) = log_d`, for Φ = p^{-r}V^s on an isoclinic
/// module that is completely slope divisible with respect to `sd`.
/// Enumeration runs over Hermite-form representatives of
/// `W_N(F_{p^s})`-overmodules of the Φ-fixed lattice.
pub fn enumerate_csd_isogenies(
    module: &DModule,
    log_d: u32,
    sd: &SlopeData,
    cap: u64,
) -> Result<Vec<CsdIsogenyCandidate>> {
    if sd.r().len() != 1 {
        return Err(Error::InvalidParams("enumeration expects isoclinic slope data (single r)".into()));
    }
    let r = sd.r()[0];
    let s = sd.s();
    if newton_polygon(module)?.points().len() != 1 {
        return Err(Error::NotIsoclinic);
    }
    let check = is_completely_slope_divisible(module, sd)?;
    if !check.holds {
        return Err(Error::NotCsd(check.failure.unwrap_or_default()));
    }
    let ring = module.ring().clone();
    let a = ring.degree();
    // Φ is σ^{-s}-semilinear, so its fixed scalars form W_N(F_{p^g});
    // the enumeration runs over that discrete valuation subring. When
    // s | a this is the W_N(F_{p^s}) of the isoclinic statement.
    let g = {
        let t = (s as usize) % a;
        if t == 0 {
            a
        } else {
            a.gcd(&t)
        }
    };
    let h = module.rank();
    if log_d == 0 {
        return Ok(vec![CsdIsogenyCandidate {
            lattice: Lattice::standard(&ring, h),
            log_degree: 0,
            isogeny: Some(IsogenyData::identity(module)),
        }]);
    }
    let n_full = ring.precision();
    let emb_full =
        Embedding::new(&Ring::new(RingParams { p: ring.p(), a: g, n: n_full })?, &ring)?;
    let c_basis_full = phi_invariant_basis(module, r, s, &emb_full, h)?;
    // as in descent: the fixed lattice is determined mod p^{N-r} only, so
    // the candidate construction happens there
    let n = n_full - r;
    if log_d >= n {
        return Err(Error::PrecisionExhausted(format!("log degree {log_d} at usable precision {n}")));
    }
    let full_ring = ring;
    let module = &module.truncate_to_precision(n)?;
    let ring = module.ring().clone();
    let small = Ring::new(RingParams { p: ring.p(), a: g, n })?;
    let emb = Embedding::new(&small, &ring)?;
    let c_basis: Vec<Vec<RingElem>> = c_basis_full
        .iter()
        .map(|b| b.iter().map(|e| full_ring.truncate_elem(&ring, e)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    // enumerate sublattices X ⊆ W'^h with p^e·W'^h ⊆ X and
    // length(W'^h / X) = e·(h-1), in column Hermite form; the candidates
    // are L = p^{-e}·(W ⊗ X) ⊇ M.
    let e = log_d;
    let target_colength = (e as u64) * (h as u64 - 1);
    let mut diag = vec![0u32; h];
    let mut candidates_small: Vec<Vec<Vec<RingElem>>> = vec![];
    // iterate over compositions of target_colength into h parts ≤ e
    fn compositions(rem: u64, idx: usize, maxv: u64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if idx == cur.len() {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let hi = rem.min(maxv);
        for d in 0..=hi {
            cur[idx] = d as u32;
            compositions(rem - d, idx + 1, maxv, cur, out);
        }
    }
    let mut diags = vec![];
    compositions(target_colength, 0, e as u64, &mut diag, &mut diags);
    let mut count: u64 = 0;
    for d in &diags {
        // column j: p^{d_j} e_j + Σ_{i<j} t_{ij} e_i, t_{ij} mod p^{d_i}
        // enumerate all off-diagonal residue choices
        let offdiag_positions: Vec<(usize, usize)> = (0..h)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, _)| d[i] > 0)
            .collect();
        let residue_count: Vec<u64> = offdiag_positions
            .iter()
            .map(|&(i, _)| (small.p() as u64).pow(d[i] * g as u32))
            .collect();
        // count = Π residue_count; enumerate mixed-radix
        let total: u128 = residue_count.iter().map(|&c| c as u128).product();
        count = count.saturating_add(total as u64);
        if count > cap {
            return Err(Error::BudgetExceeded);
        }
        let mut idx = vec![0u64; offdiag_positions.len()];
        loop {
            // build the candidate columns over the small ring
            let mut cols: Vec<Vec<RingElem>> = (0..h)
                .map(|j| {
                    let mut col = vec_zero(&small, h);
                    col[j] = small.mul_pow_p(&small.one(), d[j]);
                    col
                })
                .collect();
            for (k, &(i, j)) in offdiag_positions.iter().enumerate() {
                // decode idx[k] into an element of W'/p^{d_i}: digits base p^{d_i} per coordinate
                let modulus = (small.p() as u64).pow(d[i]);
                let mut rem = idx[k];
                let mut residues = Vec::with_capacity(g);
                for _ in 0..g {
                    residues.push(num_bigint::BigUint::from(rem % modulus));
                    rem /= modulus;
                }
                cols[j][i] = small.from_residues(residues).expect("coords");
            }
            // the candidate must contain p^e·W'^h
            let sub = Submodule::from_generators(&small, h, &cols);
            let contains_pe = (0..h).all(|i| {
                let mut v = vec_zero(&small, h);
                v[i] = small.mul_pow_p(&small.one(), e);
                sub.contains(&v)
            });
            if contains_pe && sub.colength_in_full() == Some(target_colength) {
                candidates_small.push(sub.generators());
            }
            // increment mixed-radix index
            let mut k = 0;
            loop {
                if k == idx.len() {
                    break;
                }
                idx[k] += 1;
                if idx[k] < residue_count[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }

    // map candidates into the ambient module and transport the structure
    let mut out: Vec<CsdIsogenyCandidate> = vec![];
    for cols in candidates_small {
        let mut gens: Vec<Vec<RingElem>> = vec![];
        for col in &cols {
            let mut v = vec_zero(&ring, h);
            for (i, x) in col.iter().enumerate() {
                let coeff = emb.map(x);
                v = vec_add(&ring, &v, &vec_scale(&ring, &coeff, &c_basis[i]));
            }
            gens.push(v);
        }
        // W-span of the mapped columns, with denominator e; adjoin p^e·M so
        // the overlattice visibly contains the standard lattice
        for i in 0..h {
            let mut v = vec_zero(&ring, h);
            v[i] = ring.mul_pow_p(&ring.one(), e);
            gens.push(v);
        }
        let lattice = Lattice::new(&ring, h, e, &gens);
        let std = Lattice::standard(&ring, h);
        debug_assert!(lattice.contains_lattice(&std));
        let log_degree = lattice.length_over(&std)? as u32;
        if log_degree != log_d {
            // a different W'-lattice can collapse after tensoring only if
            // something went wrong; skip defensively
            continue;
        }
        let isogeny = match module.isogeny_from_lattice(&lattice) {
            Ok(isog) => Some(isog),
            Err(Error::NotStable) => None,
            Err(e) => return Err(e),
        };
        out.push(CsdIsogenyCandidate { lattice, log_degree, isogeny });
    }
    // canonical order independent of enumeration schedule
    out.sort_by_key(|c| serde_json::to_string(&c.lattice.to_json()).unwrap_or_default());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dieudonne::{is_isomorphic, DModule};
    use crate::padic::{Ring, RingParams};

    fn ring(p: u64, a: usize, n: u32) -> Ring {
        Ring::new(RingParams { p, a, n }).unwrap()
    }

    #[test]
    fn phi_split_of_mixed_module() {
        let r = ring(2, 1, 5);
        let a = DModule::direct_sum(
            &DModule::make_gmn(0, 1, &r).unwrap(),
            &DModule::make_gmn(1, 1, &r).unwrap(),
        )
        .unwrap();
        // Φ = V: étale part is the slope-0 line, nil part the G_{1,1} plane
        let split = phi_etale_split(&a, 0, 1).unwrap();
        assert_eq!(split.etale.rank(), 1);
        assert_eq!(split.nil.rank(), 2);
        let g01 = DModule::make_gmn(0, 1, &r).unwrap();
        let g11 = DModule::make_gmn(1, 1, &r).unwrap();
        assert!(is_isomorphic(&split.etale, &g01).unwrap().is_yes());
        assert!(is_isomorphic(&split.nil, &g11).unwrap().is_yes());
    }

    #[test]
    fn phi_on_g11() {
        let r = ring(2, 1, 5);
        let g11 = DModule::make_gmn(1, 1, &r).unwrap();
        // (r, s) = (1, 2): V^2 = p so Φ = id and everything is étale
        let split = phi_etale_split(&g11, 1, 2).unwrap();
        assert_eq!(split.etale.rank(), 2);
        assert_eq!(split.nil.rank(), 0);
        // (r, s) = (1, 1) is not integral: V e_1 = e_2 has valuation 0
        assert!(matches!(phi_etale_split(&g11, 1, 1), Err(Error::NotIntegral)));
    }

    #[test]
    fn gmn_is_csd_with_canonical_data() {
        for &(m, n) in &[(1u32, 1u32), (1, 2), (2, 1), (2, 3), (1, 4), (0, 1), (1, 0)] {
            // precision must exceed the scaled r = t·m for the test at t = 3
            let r = ring(2, 1, 3 * m + 3);
            let g = DModule::make_gmn(m, n, &r).unwrap();
            let sd = SlopeData::new(m + n, vec![m]).unwrap();
            let check = is_completely_slope_divisible(&g, &sd).unwrap();
            assert!(check.holds, "G_{{{m},{n}}}");
            // scaling remark
            for t in [2u32, 3] {
                let sdt = sd.scale(t).unwrap();
                assert!(is_completely_slope_divisible(&g, &sdt).unwrap().holds, "G_{{{m},{n}}} scaled by {t}");
            }
        }
    }

    #[test]
    fn g11_fails_wrong_slope_data() {
        let r = ring(2, 1, 5);
        let g = DModule::make_gmn(1, 1, &r).unwrap();
        let sd = SlopeData::new(1, vec![1]).unwrap();
        let check = is_completely_slope_divisible(&g, &sd).unwrap();
        assert!(!check.holds);
        assert!(check.failure.unwrap().contains("not an isogeny"));
    }

    #[test]
    fn filtration_of_sum() {
        let r = ring(2, 1, 6);
        let a = DModule::direct_sum(
            &DModule::make_gmn(1, 1, &r).unwrap(),
            &DModule::make_gmn(1, 2, &r).unwrap(),
        )
        .unwrap();
        let filt = slope_filtration(&a).unwrap();
        assert_eq!(filt.slopes, vec![Ratio::new(1, 2), Ratio::new(1, 3)]);
        assert_eq!(filt.steps.len(), 2);
        // Y_1 is the G_{1,1} summand
        assert_eq!(filt.steps[0].rank(), 2);
        let e0: Vec<_> = vec![r.one(), r.zero(), r.zero(), r.zero(), r.zero()];
        assert!(filt.steps[0].contains(&e0));
        // isoclinic module: trivial filtration
        let g = DModule::make_gmn(2, 1, &r).unwrap();
        let filt = slope_filtration(&g).unwrap();
        assert_eq!(filt.steps.len(), 1);
        assert_eq!(filt.slopes, vec![Ratio::new(2, 3)]);
    }

    #[test]
    fn split_isoclinic_recovers_blocks() {
        let r = ring(2, 1, 6);
        let a = DModule::direct_sum(
            &DModule::make_gmn(1, 1, &r).unwrap(),
            &DModule::make_gmn(1, 2, &r).unwrap(),
        )
        .unwrap();
        let split = split_isoclinic(&a).unwrap();
        assert_eq!(split.parts.len(), 2);
        assert_eq!(
            split.parts.iter().map(|p| p.rank()).collect::<Vec<_>>(),
            vec![2, 3],
            "descending slope order: 1/2 then 1/3"
        );
        // witness conjugates the input (at the split's precision) to the
        // direct sum of the parts
        let sum = DModule::direct_sum(&split.parts[0], &split.parts[1]).unwrap();
        let a_t = a.truncate_to_precision(split.parts[0].ring().precision()).unwrap();
        let conj = a_t.conjugate(&split.witness.inverse().unwrap()).unwrap();
        assert_eq!(conj, sum);
    }

    #[test]
    fn saturate_already_csd_is_identity() {
        let r = ring(2, 1, 6);
        let g = DModule::make_gmn(1, 2, &r).unwrap();
        let isog = csd_saturate(&g).unwrap();
        assert_eq!(isog.log_degree, 0);
    }

    #[test]
    fn saturate_a_genuinely_non_csd_module() {
        // the t = 1 fiber of the one-parameter family is not completely
        // slope divisible; saturation repairs it with a degree-p isogeny
        let fam = crate::families::ParamFamily::new(2, 1, 14).unwrap();
        let fiber = fam.fiber(&[1]).unwrap();
        let sd = canonical_slope_data(&fiber).unwrap();
        assert!(!is_completely_slope_divisible(&fiber, &sd).unwrap().holds);
        let isog = csd_saturate(&fiber).unwrap();
        assert_eq!(isog.log_degree, 1);
        let sd2 = canonical_slope_data(&isog.target).unwrap();
        assert!(is_completely_slope_divisible(&isog.target, &sd2).unwrap().holds);
    }

    #[test]
    fn filtration_of_a_family_fiber() {
        // the t = 1 fiber is not csd, but its slope filtration exists:
        // two steps with graded slopes 1/2 > 1/3
        let fam = crate::families::ParamFamily::new(2, 1, 12).unwrap();
        let fiber = fam.fiber(&[1]).unwrap();
        let filt = slope_filtration(&fiber).unwrap();
        assert_eq!(filt.slopes, vec![Ratio::new(1, 2), Ratio::new(1, 3)]);
        assert_eq!(filt.steps.len(), 2);
        assert_eq!(filt.steps[0].free_rank(), Some(2));
    }

    #[test]
    fn split_three_blocks_sorted() {
        let r = ring(2, 1, 8);
        let a = DModule::direct_sum(
            &DModule::direct_sum(
                &DModule::make_gmn(0, 1, &r).unwrap(),
                &DModule::make_gmn(1, 1, &r).unwrap(),
            )
            .unwrap(),
            &DModule::make_gmn(1, 0, &r).unwrap(),
        )
        .unwrap();
        let split = split_isoclinic(&a).unwrap();
        let slopes: Vec<Ratio<u64>> = split
            .parts
            .iter()
            .map(|p| crate::newton::is_isoclinic(p).unwrap().unwrap())
            .collect();
        assert_eq!(slopes, vec![Ratio::new(1, 1), Ratio::new(1, 2), Ratio::new(0, 1)]);
        // brute-force block comparison
        let small = split.parts[0].ring().clone();
        assert!(is_isomorphic(&split.parts[0], &DModule::make_gmn(1, 0, &small).unwrap()).unwrap().is_yes());
        assert!(is_isomorphic(&split.parts[1], &DModule::make_gmn(1, 1, &small).unwrap()).unwrap().is_yes());
        assert!(is_isomorphic(&split.parts[2], &DModule::make_gmn(0, 1, &small).unwrap()).unwrap().is_yes());
    }

    #[test]
    fn descend_module_already_over_prime_field() {
        // for G_{1,2} over F_p the descent recovers the same module,
        // restated over F_{p^3}
        let r = ring(2, 1, 6);
        let g = DModule::make_gmn(1, 2, &r).unwrap();
        let sd = SlopeData::new(3, vec![1]).unwrap();
        let descent = descend_finite_field(&g, &sd).unwrap();
        assert_eq!(descent.model.ring().degree(), 3);
        assert_eq!(descent.model.rank(), 3);
        let expected = DModule::make_gmn(1, 2, descent.model.ring()).unwrap();
        assert!(is_isomorphic(&expected, &descent.model).unwrap().is_yes());
    }

    #[test]
    fn saturation_degree_invariant_under_base_change() {
        let fam = crate::families::ParamFamily::new(2, 1, 12).unwrap();
        let fiber = fam.fiber(&[1]).unwrap();
        let deg_base = csd_saturate(&fiber).unwrap().log_degree;
        let fiber2 = fiber.base_change(2).unwrap();
        let deg_ext = csd_saturate(&fiber2).unwrap().log_degree;
        assert_eq!(deg_base, deg_ext);
    }

    #[test]
    fn descent_of_base_changed_g11() {
        let r = ring(2, 4, 6);
        let g = DModule::make_gmn(1, 1, &ring(2, 1, 6)).unwrap().base_change(4).unwrap();
        assert_eq!(g.ring(), &r);
        let sd = SlopeData::new(2, vec![1]).unwrap();
        let descent = descend_finite_field(&g, &sd).unwrap();
        assert_eq!(descent.model.rank(), 2);
        assert_eq!(descent.model.ring().degree(), 2);
        // witness intertwines the base-changed model with the input
        let bc = descent.model.base_change(4).unwrap();
        assert!(crate::dieudonne::verify_witness(&bc, &descent.base_changed_input, &descent.witness));
    }

    #[test]
    fn error_taxonomy() {
        let r = ring(2, 1, 6);
        // NotAlphaP: e_1 of G_{1,1} is not killed by F mod p
        let g11 = DModule::make_gmn(1, 1, &r).unwrap();
        let e1 = vec![r.one(), r.zero()];
        assert!(matches!(g11.quotient_by_alpha_p(&e1), Err(Error::NotAlphaP)));
        // NotIsoclinic: enumeration refuses a two-slope module
        let sum = DModule::direct_sum(&g11, &DModule::make_gmn(1, 2, &r).unwrap()).unwrap();
        let sd = SlopeData::new(2, vec![1]).unwrap();
        assert!(matches!(
            enumerate_csd_isogenies(&sum, 1, &sd, 100_000),
            Err(Error::NotIsoclinic)
        ));
        // NotCSD: splitting a non-csd module
        let fam = crate::families::ParamFamily::new(2, 1, 12).unwrap();
        let fiber = fam.fiber(&[1]).unwrap();
        assert!(matches!(split_isoclinic(&fiber), Err(Error::NotCsd(_))));
        // BudgetExceeded: a unit candidate cap
        let g = DModule::make_gmn(1, 1, &ring(2, 1, 6)).unwrap().base_change(2).unwrap();
        let sd2 = SlopeData::new(2, vec![1]).unwrap();
        assert!(matches!(
            enumerate_csd_isogenies(&g, 1, &sd2, 1),
            Err(Error::BudgetExceeded)
        ));
    }

    #[test]
    fn enumerate_count_invariant_under_basis_change() {
        let p = 2u64;
        let g = DModule::make_gmn(1, 1, &ring(p, 1, 6)).unwrap().base_change(2).unwrap();
        let big = g.ring().clone();
        let sd = SlopeData::new(2, vec![1]).unwrap();
        let baseline = enumerate_csd_isogenies(&g, 1, &sd, 100_000).unwrap().len();
        // a fixed unit basis change
        let t = Mat::from_fn(&big, 2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => big.one(),
            (0, 1) => big.generator(),
            _ => big.zero(),
        });
        let conj = g.conjugate(&t).unwrap();
        let moved = enumerate_csd_isogenies(&conj, 1, &sd, 100_000).unwrap().len();
        assert_eq!(baseline, moved);
    }

    #[test]
    fn enumerate_counts_lines() {
        for p in [2u64, 3] {
            let g = DModule::make_gmn(1, 1, &ring(p, 1, 6)).unwrap().base_change(2).unwrap();
            let sd = SlopeData::new(2, vec![1]).unwrap();
            let found = enumerate_csd_isogenies(&g, 1, &sd, 100_000).unwrap();
            assert_eq!(found.len() as u64, p * p + 1, "p = {p}");
            // each candidate has the right colength; exactly one carries a
            // transported Dieudonné structure (the unique alpha_p quotient)
            assert!(found.iter().all(|c| c.log_degree == 1));
            assert_eq!(found.iter().filter(|c| c.isogeny.is_some()).count(), 1);
            // log_d = 0: only the identity
            let trivial = enumerate_csd_isogenies(&g, 0, &sd, 100_000).unwrap();
            assert_eq!(trivial.len(), 1);
        }
    }

    #[test]
    fn enumerate_log_d_two_matches_line_bfs_oracle() {
        // independent route: breadth-first extension by residue lines with
        // Φ-stability filtering, versus the Hermite-form enumeration
        for p in [2u64, 3] {
            let g = DModule::make_gmn(1, 1, &ring(p, 1, 8)).unwrap().base_change(2).unwrap();
            let base = g.ring().clone();
            let sd = SlopeData::new(2, vec![1]).unwrap();
            let vs = g.v().pow(2);
            let phi_stable = |l: &Lattice| -> bool {
                let image = l.apply(&vs, 1).unwrap();
                l.contains_lattice(&image) && image.contains_lattice(l)
            };
            // all overlattices of length exactly 2, BFS over residue lines
            let std = Lattice::standard(&base, 2);
            let mut level1: Vec<Lattice> = vec![];
            let expand = |l: &Lattice, out: &mut Vec<Lattice>| {
                let basis = l.submodule().generators();
                let q_total = (p as u128).pow(2 * basis.len() as u32);
                for idx in 1..q_total {
                    let mut digits = idx;
                    let mut vecv = crate::semilinear::vec_zero(&base, 2);
                    for b in &basis {
                        let c = (digits % (p * p) as u128) as u64;
                        digits /= (p * p) as u128;
                        if c != 0 {
                            let ce = base
                                .from_residues(vec![
                                    num_bigint::BigUint::from(c % p),
                                    num_bigint::BigUint::from(c / p),
                                ])
                                .unwrap();
                            for (i, x) in b.iter().enumerate() {
                                vecv[i] = base.add(&vecv[i], &base.mul(&ce, x));
                            }
                        }
                    }
                    let mut gens: Vec<Vec<RingElem>> =
                        l.submodule().generators().iter().map(|w| vec_mul_pow_p(&base, w, 1)).collect();
                    gens.push(vecv);
                    let cand = Lattice::new(&base, 2, l.denominator_exp() + 1, &gens);
                    if &cand != l && out.iter().all(|x| x != &cand) {
                        out.push(cand);
                    }
                }
            };
            expand(&std, &mut level1);
            let mut level2: Vec<Lattice> = vec![];
            for l in &level1 {
                expand(l, &mut level2);
            }
            let count_bfs = level2
                .iter()
                .filter(|l| l.length_over(&std).unwrap() == 2 && phi_stable(l))
                .count() as u64;
            let found = enumerate_csd_isogenies(&g, 2, &sd, 100_000).unwrap();
            let q = p * p;
            assert_eq!(found.len() as u64, q * q + q + 1, "p = {p}: expected overmodule count");
            assert_eq!(found.len() as u64, count_bfs, "p = {p}: BFS oracle disagrees");
        }
    }

    #[test]
    fn enumerate_matches_brute_force_oracle() {
        // oracle: enumerate all length-1 overlattices M + W p^{-1} x over
        // lines x in M/pM, filter Φ-stability
        for p in [2u64, 3] {
            let base = ring(p, 2, 6);
            let g = DModule::make_gmn(1, 1, &ring(p, 1, 6)).unwrap().base_change(2).unwrap();
            let sd = SlopeData::new(2, vec![1]).unwrap();
            let (_, phi) = phi_operator(&g, 1, 2).unwrap();
            // all lines of the residue plane: scan nonzero vectors, dedupe spans
            let r1 = base.with_precision(1).unwrap();
            let mut lines: Vec<Submodule> = vec![];
            let q = (p * p) as u64;
            for x0 in 0..q {
                for x1 in 0..q {
                    if x0 == 0 && x1 == 0 {
                        continue;
                    }
                    let dec = |v: u64| {
                        r1.from_residues(vec![
                            num_bigint::BigUint::from(v % p),
                            num_bigint::BigUint::from(v / p),
                        ])
                        .unwrap()
                    };
                    let v = vec![dec(x0), dec(x1)];
                    let line = Submodule::from_generators(&r1, 2, &[v]);
                    if !lines.contains(&line) {
                        lines.push(line);
                    }
                }
            }
            assert_eq!(lines.len() as u64, q + 1);
            let mut stable = 0u64;
            for line in &lines {
                let x = line.generators().remove(0);
                let lift: Vec<RingElem> =
                    x.iter().map(|e| base.lift_residues(&r1.reduce_mod_p(e))).collect();
                let mut gens: Vec<Vec<RingElem>> = Mat::identity(&base, 2)
                    .columns()
                    .iter()
                    .map(|c| vec_mul_pow_p(&base, c, 1))
                    .collect();
                gens.push(lift);
                let l = Lattice::new(&base, 2, 1, &gens);
                // Φ-stability: Φ(L) ⊆ L
                let img = l.apply(&phi, 0).unwrap();
                if l.contains_lattice(&img) {
                    stable += 1;
                }
            }
            let found = enumerate_csd_isogenies(&g, 1, &sd, 100_000).unwrap();
            assert_eq!(found.len() as u64, stable, "p = {p}");
        }
    }
}
