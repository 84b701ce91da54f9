//! Covariant Dieudonné modules over finite fields.
//!
//! A module is a free `W_N(F_{p^a})`-module with a σ-linear `F` (twist +1)
//! and a σ^{-1}-linear `V` (twist −1) satisfying `FV = VF = p` exactly at
//! working precision. Group-scheme Frobenius corresponds to `V`,
//! Verschiebung to `F`.
//!
//! Isogenies are overlattices of p-power index in the isocrystal; passing
//! to an overlattice with denominator p^{-e} erodes the working precision
//! to `N - e`.

use num_integer::Integer;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::padic::{Embedding, Ring, RingElem, RingParams, Valuation};
use crate::semilinear::{
    kernel_of_mat, smith_normal_form, vec_mul_pow_p, Lattice, Mat, SemiLinOp, SpanSolver,
    Submodule,
};

/// A covariant Dieudonné module: rank h, F with twist +1, V with twist −1,
/// `FV = VF = p`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DModule {
    ring: Ring,
    rank: usize,
    f: SemiLinOp,
    v: SemiLinOp,
}

impl DModule {
    pub fn new(ring: &Ring, f: SemiLinOp, v: SemiLinOp) -> Result<DModule> {
        if f.ring() != ring || v.ring() != ring {
            return Err(Error::RingMismatch);
        }
        if f.rank() != v.rank() {
            return Err(Error::DimensionMismatch("F and V must have equal rank".into()));
        }
        if f.twist() != 1 || v.twist() != -1 {
            return Err(Error::InvalidParams("F must have twist +1 and V twist -1".into()));
        }
        let rank = f.rank();
        let p_id = Mat::identity(ring, rank).mul_pow_p(1);
        let fv = SemiLinOp::compose(&f, &v)?;
        let vf = SemiLinOp::compose(&v, &f)?;
        if fv.matrix() != &p_id || vf.matrix() != &p_id {
            return Err(Error::InvalidParams("FV = VF = p fails".into()));
        }
        Ok(DModule { ring: ring.clone(), rank, f, v })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn f(&self) -> &SemiLinOp {
        &self.f
    }

    pub fn v(&self) -> &SemiLinOp {
        &self.v
    }

    /// The iso-simple module of `G_{m,n}`: rank m+n, cyclic basis with
    /// `F e_i = e_{i+1}` on the first m edges and `F e_i = p·e_{i+1}` on
    /// the rest; V is forced by `FV = p`. The generator satisfies
    /// `F^m e_1 = V^n e_1`.
    pub fn make_gmn(m: u32, n: u32, ring: &Ring) -> Result<DModule> {
        if m == 0 && n == 0 {
            return Err(Error::InvalidParams("(m, n) = (0, 0)".into()));
        }
        if m.gcd(&n) != 1 {
            return Err(Error::InvalidParams(format!("gcd({m}, {n}) != 1")));
        }
        let h = (m + n) as usize;
        let u = |i: usize| -> u32 {
            if (i as u32) < m {
                0
            } else {
                1
            }
        };
        let mut fm = Mat::zero(ring, h, h);
        let mut vm = Mat::zero(ring, h, h);
        for i in 0..h {
            let j = (i + 1) % h;
            // F e_i = p^{u(i)} e_j, V e_j = p^{1-u(i)} e_i
            fm.set(j, i, ring.mul_pow_p(&ring.one(), u(i)));
            vm.set(i, j, ring.mul_pow_p(&ring.one(), 1 - u(i)));
        }
        DModule::new(ring, SemiLinOp::new(ring, fm, 1)?, SemiLinOp::new(ring, vm, -1)?)
    }

    pub fn direct_sum(a: &DModule, b: &DModule) -> Result<DModule> {
        if a.ring != b.ring {
            return Err(Error::RingMismatch);
        }
        let ring = &a.ring;
        let h = a.rank + b.rank;
        let block = |ma: &Mat, mb: &Mat| -> Mat {
            Mat::from_fn(ring, h, h, |r, c| {
                if r < a.rank && c < a.rank {
                    ma.at(r, c).clone()
                } else if r >= a.rank && c >= a.rank {
                    mb.at(r - a.rank, c - a.rank).clone()
                } else {
                    ring.zero()
                }
            })
        };
        DModule::new(
            ring,
            SemiLinOp::new(ring, block(a.f.matrix(), b.f.matrix()), 1)?,
            SemiLinOp::new(ring, block(a.v.matrix(), b.v.matrix()), -1)?,
        )
    }

    /// Serre dual: `F* = σ(V^T)` (twist +1), `V* = σ^{-1}(F^T)` (twist −1),
    /// from the pairing convention `⟨Fx, y⟩ = σ⟨x, Vy⟩`. Newton slopes
    /// reflect as λ ↦ 1−λ.
    pub fn dual(&self) -> DModule {
        let ring = &self.ring;
        let fd = self.v.matrix().transpose().frobenius(1);
        let vd = self.f.matrix().transpose().frobenius(-1);
        DModule::new(
            ring,
            SemiLinOp::new(ring, fd, 1).expect("dual F"),
            SemiLinOp::new(ring, vd, -1).expect("dual V"),
        )
        .expect("dual satisfies FV = p")
    }

    /// Same matrices over `W_N(F_{p^{a_new}})` through the canonical
    /// embedding.
    pub fn base_change(&self, a_new: usize) -> Result<DModule> {
        let a = self.ring.degree();
        if a_new % a != 0 {
            return Err(Error::NotAnExtension(format!("{a} does not divide {a_new}")));
        }
        if a_new == a {
            return Ok(self.clone());
        }
        let big = Ring::new(RingParams { p: self.ring.p(), a: a_new, n: self.ring.precision() })?;
        let emb = Embedding::new(&self.ring, &big)?;
        let map_mat = |m: &Mat| Mat::from_fn(&big, self.rank, self.rank, |r, c| emb.map(m.at(r, c)));
        DModule::new(
            &big,
            SemiLinOp::new(&big, map_mat(self.f.matrix()), 1)?,
            SemiLinOp::new(&big, map_mat(self.v.matrix()), -1)?,
        )
    }

    /// The same module stated at a smaller precision.
    pub fn truncate_to_precision(&self, n: u32) -> Result<DModule> {
        if n == self.ring.precision() {
            return Ok(self.clone());
        }
        if n < 1 || n > self.ring.precision() {
            return Err(Error::PrecisionExhausted(format!(
                "cannot truncate precision {} to {n}",
                self.ring.precision()
            )));
        }
        let target = self.ring.with_precision(n)?;
        DModule::new(
            &target,
            SemiLinOp::new(&target, self.f.matrix().truncate_to(&target)?, 1)?,
            SemiLinOp::new(&target, self.v.matrix().truncate_to(&target)?, -1)?,
        )
    }

    /// Conjugate the module structure by an invertible matrix T:
    /// `F' = T∘F∘T^{-1}`, `V' = T∘V∘T^{-1}`.
    pub fn conjugate(&self, t: &Mat) -> Result<DModule> {
        let tinv = t.inverse()?;
        let fm = t.mul(self.f.matrix())?.mul(&tinv.frobenius(1))?;
        let vm = t.mul(self.v.matrix())?.mul(&tinv.frobenius(-1))?;
        DModule::new(&self.ring, SemiLinOp::new(&self.ring, fm, 1)?, SemiLinOp::new(&self.ring, vm, -1)?)
    }

    /// Basis of `{x ∈ M/pM : Fx ≡ 0, Vx ≡ 0 mod p}` as an F_q-vector
    /// space. Representatives are returned lifted, coordinates in [0, p).
    pub fn alpha_p_embeddings(&self) -> Result<Vec<Vec<RingElem>>> {
        let r1 = self.ring.with_precision(1)?;
        let trunc = |m: &Mat| m.truncate_to(&r1).expect("truncation");
        // kernel of the operator x ↦ M σ(x) mod p is σ^{-1} of the matrix kernel
        let ker_f = kernel_of_mat(&trunc(self.f.matrix())).frobenius(-1);
        let ker_v = kernel_of_mat(&trunc(self.v.matrix())).frobenius(1);
        let inter = ker_f.intersect(&ker_v);
        debug_assert!(inter.pivot_exponents().iter().all(|&(_, e)| e == 0));
        let lifted: Vec<Vec<RingElem>> = inter
            .generators()
            .iter()
            .map(|g| g.iter().map(|e| self.ring.lift_residues(&r1.reduce_mod_p(e))).collect())
            .collect();
        Ok(lifted)
    }

    /// The degree-p isogeny `M → M + W·p^{-1}·x̃` for an α_p vector x.
    pub fn quotient_by_alpha_p(&self, x: &[RingElem]) -> Result<IsogenyData> {
        if x.len() != self.rank {
            return Err(Error::DimensionMismatch("alpha_p vector length".into()));
        }
        let ring = &self.ring;
        let nonzero_mod_p = x.iter().any(|e| ring.valuation(e) == Valuation::Finite(0));
        if !nonzero_mod_p {
            return Err(Error::NotAlphaP);
        }
        let fx = self.f.apply(x)?;
        let vx = self.v.apply(x)?;
        let killed = |w: &[RingElem]| w.iter().all(|e| ring.valuation(e) != Valuation::Finite(0));
        if !killed(&fx) || !killed(&vx) {
            return Err(Error::NotAlphaP);
        }
        let mut gens: Vec<Vec<RingElem>> = Mat::identity(ring, self.rank)
            .columns()
            .iter()
            .map(|c| vec_mul_pow_p(ring, c, 1))
            .collect();
        gens.push(x.to_vec());
        let lattice = Lattice::new(ring, self.rank, 1, &gens);
        let isog = self.isogeny_from_lattice(&lattice)?;
        debug_assert_eq!(isog.log_degree, 1);
        Ok(isog)
    }

    /// Pass to an F,V-stable overlattice `M ⊆ L ⊆ p^{-e}M`. The target
    /// carries precision `N - e` where e is the minimal denominator of L.
    pub fn isogeny_from_lattice(&self, lattice: &Lattice) -> Result<IsogenyData> {
        let ring = &self.ring;
        let h = self.rank;
        if lattice.ring() != ring || lattice.ambient_rank() != h {
            return Err(Error::RingMismatch);
        }
        let lattice = lattice.clone().normalized();
        // digits above the watermark are fabricated: restate the whole
        // problem at the trustworthy precision first
        if lattice.known_mod() < ring.precision() {
            if lattice.known_mod() < 1 {
                return Err(Error::PrecisionExhausted("lattice watermark exhausted".into()));
            }
            let small = ring.with_precision(lattice.known_mod())?;
            let m2 = self.truncate_to_precision(small.precision())?;
            return m2.isogeny_from_lattice(&lattice.truncate(&small)?);
        }
        let lattice = &lattice;
        let std = Lattice::standard(ring, h);
        if !lattice.contains_lattice(&std) {
            return Err(Error::InvalidParams("not an overlattice of the module".into()));
        }
        let e = lattice.denominator_exp();
        let n = ring.precision();
        if e >= n {
            return Err(Error::PrecisionExhausted(format!("denominator p^{e} at precision {n}")));
        }
        let sub = lattice.submodule();
        let basis = sub.generators();
        if basis.len() != h {
            return Err(Error::InvalidParams("overlattice is not full rank".into()));
        }
        // stability of L under F and V, checked on the scaled generators
        let solver = SpanSolver::new(ring, h, &basis);
        let mut f_cols = Vec::with_capacity(h);
        let mut v_cols = Vec::with_capacity(h);
        for b in &basis {
            let fb = self.f.apply(b)?;
            let vb = self.v.apply(b)?;
            let fc = solver.solve(&fb).ok_or(Error::NotStable)?;
            let vc = solver.solve(&vb).ok_or(Error::NotStable)?;
            f_cols.push(fc);
            v_cols.push(vc);
        }
        let target_ring = ring.with_precision(n - e)?;
        let fm = Mat::from_columns(ring, h, &f_cols).truncate_to(&target_ring)?;
        let vm = Mat::from_columns(ring, h, &v_cols).truncate_to(&target_ring)?;
        let target = DModule::new(
            &target_ring,
            SemiLinOp::new(&target_ring, fm, 1)?,
            SemiLinOp::new(&target_ring, vm, -1)?,
        )?;
        let log_degree = lattice.length_over(&std)? as u32;
        Ok(IsogenyData {
            source: self.clone(),
            target,
            log_degree,
            lattice_map: Mat::from_columns(ring, h, &basis),
            lattice_denom: e,
        })
    }

    /// Restrict F and V to a saturated stable submodule.
    /// Returns the sub-DModule and its basis (h×k inclusion matrix).
    pub fn restrict_to(&self, sub: &Submodule) -> Result<(DModule, Mat)> {
        let ring = &self.ring;
        let basis_mat = sub
            .free_basis()
            .ok_or_else(|| Error::InvalidParams("restriction needs a saturated submodule".into()))?;
        let basis = basis_mat.columns();
        let k = basis.len();
        let solver = SpanSolver::new(ring, self.rank, &basis);
        let mut f_cols = Vec::with_capacity(k);
        let mut v_cols = Vec::with_capacity(k);
        for b in &basis {
            let fb = self.f.apply(b)?;
            let vb = self.v.apply(b)?;
            f_cols.push(solver.solve(&fb).ok_or(Error::NotStable)?);
            v_cols.push(solver.solve(&vb).ok_or(Error::NotStable)?);
        }
        let fm = Mat::from_columns(ring, k, &f_cols);
        let vm = Mat::from_columns(ring, k, &v_cols);
        let sub_mod =
            DModule::new(ring, SemiLinOp::new(ring, fm, 1)?, SemiLinOp::new(ring, vm, -1)?)?;
        Ok((sub_mod, basis_mat))
    }

    /// Quotient by a saturated stable submodule; the quotient basis is a
    /// free complement of the submodule. Returns the quotient module and
    /// that complement (h×(h−k) matrix).
    pub fn quotient_by(&self, sub: &Submodule) -> Result<(DModule, Mat)> {
        let ring = &self.ring;
        let basis = sub
            .free_basis()
            .ok_or_else(|| Error::InvalidParams("quotient needs a saturated submodule".into()))?;
        let complement = sub.free_complement().expect("saturated submodule has a complement");
        let k = basis.cols();
        let q_rank = complement.cols();
        // full basis [basis | complement]; coordinates of w in it are
        // full_inv · w, and the quotient keeps the complement block
        let mut full = Mat::zero(ring, self.rank, self.rank);
        for j in 0..k {
            for i in 0..self.rank {
                full.set(i, j, basis.at(i, j).clone());
            }
        }
        for j in 0..q_rank {
            for i in 0..self.rank {
                full.set(i, k + j, complement.at(i, j).clone());
            }
        }
        let full_inv = full.inverse()?;
        let mut f_cols = Vec::with_capacity(q_rank);
        let mut v_cols = Vec::with_capacity(q_rank);
        for j in 0..q_rank {
            let c = complement.column(j);
            let f_coords = full_inv.mul_vec(&self.f.apply(&c)?)?;
            let v_coords = full_inv.mul_vec(&self.v.apply(&c)?)?;
            f_cols.push(f_coords[k..].to_vec());
            v_cols.push(v_coords[k..].to_vec());
        }
        let fm = Mat::from_columns(ring, q_rank, &f_cols);
        let vm = Mat::from_columns(ring, q_rank, &v_cols);
        let q = DModule::new(ring, SemiLinOp::new(ring, fm, 1)?, SemiLinOp::new(ring, vm, -1)?)?;
        Ok((q, complement))
    }

    pub fn to_json(&self) -> Value {
        let mat_rows = |m: &Mat| -> Value {
            Value::Array(
                (0..self.rank)
                    .map(|r| {
                        Value::Array((0..self.rank).map(|c| self.ring.elem_to_json(m.at(r, c))).collect())
                    })
                    .collect(),
            )
        };
        json!({
            "ring": self.ring.to_json(),
            "rank": self.rank,
            "F": mat_rows(self.f.matrix()),
            "V": mat_rows(self.v.matrix()),
        })
    }

    pub fn from_json(v: &Value) -> Result<DModule> {
        let ring = Ring::from_json(v.get("ring").ok_or_else(|| Error::Parse("module: missing ring".into()))?)?;
        let rank = v
            .get("rank")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("module: missing rank".into()))? as usize;
        let read_mat = |key: &str| -> Result<Mat> {
            let rows = v
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("module: missing {key}")))?;
            if rows.len() != rank {
                return Err(Error::Parse(format!("module: {key} must be {rank}x{rank}")));
            }
            let mut m = Mat::zero(&ring, rank, rank);
            for (r, row) in rows.iter().enumerate() {
                let row = row.as_array().ok_or_else(|| Error::Parse("module: matrix rows are arrays".into()))?;
                if row.len() != rank {
                    return Err(Error::Parse(format!("module: {key} must be {rank}x{rank}")));
                }
                for (c, e) in row.iter().enumerate() {
                    m.set(r, c, ring.elem_from_json(e)?);
                }
            }
            Ok(m)
        };
        let fm = read_mat("F")?;
        let vm = read_mat("V")?;
        DModule::new(&ring, SemiLinOp::new(&ring, fm, 1)?, SemiLinOp::new(&ring, vm, -1)?)
    }
}

/// An isogeny recorded as an overlattice: the target's basis sits inside
/// the source's isocrystal as `p^{-lattice_denom}·lattice_map` columns.
#[derive(Clone, Debug)]
pub struct IsogenyData {
    pub source: DModule,
    pub target: DModule,
    /// degree is p^{log_degree}
    pub log_degree: u32,
    pub lattice_map: Mat,
    pub lattice_denom: u32,
}

impl IsogenyData {
    pub fn identity(m: &DModule) -> IsogenyData {
        IsogenyData {
            source: m.clone(),
            target: m.clone(),
            log_degree: 0,
            lattice_map: Mat::identity(m.ring(), m.rank()),
            lattice_denom: 0,
        }
    }

    /// `second ∘ first`; degrees add, lattice maps compose. The second
    /// isogeny may be stated at a lower precision than the first's target
    /// (precision erodes along compositions).
    pub fn compose(first: &IsogenyData, second: &IsogenyData) -> Result<IsogenyData> {
        let (tr, sr) = (first.target.ring(), second.source.ring());
        if sr.p() != tr.p()
            || sr.degree() != tr.degree()
            || sr.precision() > tr.precision()
            || second.source.rank() != first.target.rank()
        {
            return Err(Error::RingMismatch);
        }
        let src_ring = first.source.ring();
        // lift the second map's entries into the first ring (residues embed)
        let h = first.lattice_map.rows();
        let lifted = Mat::from_fn(src_ring, h, h, |r, c| {
            let e = second.lattice_map.at(r, c);
            src_ring
                .from_residues(e.coeffs().to_vec())
                .expect("residues fit in the larger-precision ring")
        });
        let map = first.lattice_map.mul(&lifted)?;
        Ok(IsogenyData {
            source: first.source.clone(),
            target: second.target.clone(),
            log_degree: first.log_degree + second.log_degree,
            lattice_map: map,
            lattice_denom: first.lattice_denom + second.lattice_denom,
        })
    }

    /// The target lattice as a sublattice datum in the source coordinates.
    pub fn target_lattice(&self) -> Lattice {
        Lattice::new(
            self.source.ring(),
            self.source.rank(),
            self.lattice_denom,
            &self.lattice_map.columns(),
        )
    }

    pub fn to_json(&self) -> Value {
        let ring = self.source.ring();
        let h = self.lattice_map.rows();
        let rows: Vec<Value> = (0..h)
            .map(|r| {
                Value::Array((0..self.lattice_map.cols()).map(|c| ring.elem_to_json(self.lattice_map.at(r, c))).collect())
            })
            .collect();
        json!({
            "source": self.source.to_json(),
            "target": self.target.to_json(),
            "log_degree": self.log_degree,
            "lattice_map": rows,
            "lattice_denom_log": self.lattice_denom,
        })
    }
}

/// Result of the bounded isomorphism test.
#[derive(Clone, Debug)]
pub enum IsoResult {
    /// An explicit intertwining invertible matrix.
    Yes(Mat),
    /// An invariant that differs.
    No(String),
    /// Bounded search exhausted without a witness.
    Inconclusive,
}

impl IsoResult {
    pub fn is_yes(&self) -> bool {
        matches!(self, IsoResult::Yes(_))
    }
}

fn snf_profile(m: &Mat) -> Vec<Valuation> {
    smith_normal_form(m).diag
}

/// Decide isomorphism: `No` when rank, Newton polygon, or elementary
/// divisor profiles of F, V, F−V differ; `Yes` with a witness when the
/// bounded intertwiner search finds one; `Inconclusive` otherwise.
pub fn is_isomorphic(a: &DModule, b: &DModule) -> Result<IsoResult> {
    if a.ring() != b.ring() {
        return Err(Error::RingMismatch);
    }
    if a.rank() != b.rank() {
        return Ok(IsoResult::No(format!("ranks {} vs {}", a.rank(), b.rank())));
    }
    let ring = a.ring();
    let h = a.rank();
    if h == 0 {
        return Ok(IsoResult::Yes(Mat::identity(ring, 0)));
    }
    // Newton polygons when computable at this precision
    if ring.precision() >= 2 {
        if let (Ok(pa), Ok(pb)) =
            (crate::newton::newton_polygon(a), crate::newton::newton_polygon(b))
        {
            if pa != pb {
                return Ok(IsoResult::No(format!("newton polygons {pa} vs {pb}")));
            }
        }
    }
    // elementary divisor profiles of the matrices of F and V over R, and
    // of the linearized operators F, V, F−V over Z/p^N
    if snf_profile(a.f().matrix()) != snf_profile(b.f().matrix()) {
        return Ok(IsoResult::No("SNF profile of F differs".into()));
    }
    if snf_profile(a.v().matrix()) != snf_profile(b.v().matrix()) {
        return Ok(IsoResult::No("SNF profile of V differs".into()));
    }
    let lin_fv_a = a.f().linearize().sub(&a.v().linearize())?;
    let lin_fv_b = b.f().linearize().sub(&b.v().linearize())?;
    if snf_profile(&lin_fv_a) != snf_profile(&lin_fv_b) {
        return Ok(IsoResult::No("SNF profile of F - V differs".into()));
    }

    // bounded witness search
    if ring.degree() > 4 || h > 5 {
        return Ok(IsoResult::Inconclusive);
    }
    search_intertwiner(a, b, 1_000_000)
}

/// Solve the Z/p^N-linear intertwining system T·F_A = F_B·σ(T),
/// T·V_A = V_B·σ^{-1}(T) and scan mod-p kernel combinations for an
/// invertible representative.
fn search_intertwiner(a: &DModule, b: &DModule, cap: u64) -> Result<IsoResult> {
    let ring = a.ring();
    let h = a.rank();
    let deg = ring.degree();
    let scalar = ring.scalar_ring();
    let unknowns = h * h * deg;

    // basis element (i, j, c): the matrix x^c·E_{ij}
    let basis_mat = |i: usize, j: usize, c: usize| -> Mat {
        let mut m = Mat::zero(ring, h, h);
        m.set(i, j, ring.pow_u64(&ring.generator(), c as u64));
        m
    };
    let flatten = |m: &Mat| -> Vec<RingElem> {
        let mut out = Vec::with_capacity(unknowns);
        for i in 0..h {
            for j in 0..h {
                for coeff in m.at(i, j).coeffs() {
                    out.push(scalar.from_residues(vec![coeff.clone()]).unwrap());
                }
            }
        }
        out
    };
    let mut system = Mat::zero(&scalar, 2 * unknowns, unknowns);
    let mut col = 0;
    for i in 0..h {
        for j in 0..h {
            for c in 0..deg {
                let t = basis_mat(i, j, c);
                let eq_f = t.mul(a.f().matrix())?.sub(&b.f().matrix().mul(&t.frobenius(1))?)?;
                let eq_v = t.mul(a.v().matrix())?.sub(&b.v().matrix().mul(&t.frobenius(-1))?)?;
                let ff = flatten(&eq_f);
                let vv = flatten(&eq_v);
                for (r, e) in ff.into_iter().chain(vv).enumerate() {
                    system.set(r, col, e);
                }
                col += 1;
            }
        }
    }
    let kernel = kernel_of_mat(&system);
    let gens = kernel.generators();
    // select generators with F_p-independent reductions
    let p = ring.p();
    let mut echelon: Vec<Vec<u64>> = vec![];
    let mut chosen: Vec<Vec<RingElem>> = vec![];
    for g in &gens {
        let mut row: Vec<u64> = g
            .iter()
            .map(|e| {
                let r = e.coeffs()[0].clone() % ring.p_big();
                r.to_u64_digits().first().copied().unwrap_or(0)
            })
            .collect();
        for er in &echelon {
            let lead = er.iter().position(|&c| c != 0).unwrap();
            if row[lead] != 0 {
                let c = row[lead];
                let inv_lead = {
                    let mut x = 1;
                    for t in 1..p {
                        if (er[lead] * t) % p == 1 {
                            x = t;
                            break;
                        }
                    }
                    x
                };
                let factor = (c * inv_lead) % p;
                for (ri, ei) in row.iter_mut().zip(er) {
                    *ri = (*ri + (p - (ei * factor) % p)) % p;
                }
            }
        }
        if row.iter().any(|&c| c != 0) {
            echelon.push(row);
            chosen.push(g.clone());
        }
    }
    let dim = chosen.len() as u32;
    if dim == 0 {
        return Ok(IsoResult::Inconclusive);
    }
    let total = (p as u128).checked_pow(dim).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Ok(IsoResult::Inconclusive);
    }
    // enumerate F_p-combinations of the chosen kernel generators
    let mut counter = vec![0u64; chosen.len()];
    loop {
        // increment (skip the zero combination)
        let mut i = 0;
        loop {
            if i == counter.len() {
                return Ok(IsoResult::Inconclusive);
            }
            counter[i] += 1;
            if counter[i] < p {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        let mut flat = vec![scalar.zero(); unknowns];
        for (ci, g) in counter.iter().zip(&chosen) {
            if *ci == 0 {
                continue;
            }
            let c = scalar.from_u64(*ci);
            for (idx, e) in g.iter().enumerate() {
                flat[idx] = scalar.add(&flat[idx], &scalar.mul(&c, e));
            }
        }
        // unflatten to an R-matrix
        let mut t = Mat::zero(ring, h, h);
        let mut idx = 0;
        for i in 0..h {
            for j in 0..h {
                let coeffs: Vec<_> = (0..deg).map(|k| flat[idx + k].coeffs()[0].clone()).collect();
                idx += deg;
                t.set(i, j, ring.from_residues(coeffs).unwrap());
            }
        }
        if t.is_invertible() {
            debug_assert_eq!(
                t.mul(a.f().matrix()).unwrap(),
                b.f().matrix().mul(&t.frobenius(1)).unwrap()
            );
            debug_assert_eq!(
                t.mul(a.v().matrix()).unwrap(),
                b.v().matrix().mul(&t.frobenius(-1)).unwrap()
            );
            return Ok(IsoResult::Yes(t));
        }
    }
}

/// Verify that `t` intertwines the structures of `a` and `b`
/// (`t∘F_A = F_B∘t` and likewise for V) and is invertible.
pub fn verify_witness(a: &DModule, b: &DModule, t: &Mat) -> bool {
    if !t.is_invertible() {
        return false;
    }
    let f_ok = match (t.mul(a.f().matrix()), b.f().matrix().mul(&t.frobenius(1))) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    };
    let v_ok = match (t.mul(a.v().matrix()), b.v().matrix().mul(&t.frobenius(-1))) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    };
    f_ok && v_ok
}
