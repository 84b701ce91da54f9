//! σ^t-twisted linear algebra over `W_N(F_{p^a})`.
//!
//! Everything downstream reduces to a few primitives implemented here:
//! dense matrices over the ring, Smith normal form by valuation pivoting
//! (the coefficient ring is local, so minimal-valuation pivots yield the
//! divisor chain directly), Howell-canonical column spans (the unique
//! normal form for submodules of a free module over the truncated local
//! ring), twisted operators with their Z/p^N linearization, Fitting
//! (bijective ⊕ nilpotent) decompositions, and fixed points of twisted
//! operators.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::padic::{Embedding, Ring, RingElem, Valuation};

// ---------------------------------------------------------------------------
// vectors

pub fn vec_zero(ring: &Ring, n: usize) -> Vec<RingElem> {
    vec![ring.zero(); n]
}

pub fn vec_add(ring: &Ring, x: &[RingElem], y: &[RingElem]) -> Vec<RingElem> {
    x.iter().zip(y).map(|(a, b)| ring.add(a, b)).collect()
}

pub fn vec_sub(ring: &Ring, x: &[RingElem], y: &[RingElem]) -> Vec<RingElem> {
    x.iter().zip(y).map(|(a, b)| ring.sub(a, b)).collect()
}

pub fn vec_scale(ring: &Ring, c: &RingElem, x: &[RingElem]) -> Vec<RingElem> {
    x.iter().map(|a| ring.mul(c, a)).collect()
}

pub fn vec_mul_pow_p(ring: &Ring, x: &[RingElem], k: u32) -> Vec<RingElem> {
    x.iter().map(|a| ring.mul_pow_p(a, k)).collect()
}

pub fn vec_div_pow_p_exact(ring: &Ring, x: &[RingElem], k: u32) -> Option<Vec<RingElem>> {
    x.iter().map(|a| ring.div_pow_p_exact(a, k)).collect()
}

pub fn vec_is_zero(ring: &Ring, x: &[RingElem]) -> bool {
    x.iter().all(|a| ring.is_zero(a))
}

pub fn vec_frobenius(ring: &Ring, x: &[RingElem], t: i64) -> Vec<RingElem> {
    x.iter().map(|a| ring.frobenius(a, t)).collect()
}

// ---------------------------------------------------------------------------
// matrices

/// Dense matrix over a [`Ring`], row-major storage.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    ring: Ring,
    rows: usize,
    cols: usize,
    entries: Vec<RingElem>,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} over {:?}", self.rows, self.cols, self.ring)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| {
                    let e = self.at(r, c);
                    format!("{:?}", e.coeffs().iter().map(|b| b.to_string()).collect::<Vec<_>>())
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zero(ring: &Ring, rows: usize, cols: usize) -> Mat {
        Mat { ring: ring.clone(), rows, cols, entries: vec![ring.zero(); rows * cols] }
    }

    pub fn identity(ring: &Ring, n: usize) -> Mat {
        let mut m = Mat::zero(ring, n, n);
        for i in 0..n {
            m.set(i, i, ring.one());
        }
        m
    }

    pub fn scalar(ring: &Ring, n: usize, c: &RingElem) -> Mat {
        let mut m = Mat::zero(ring, n, n);
        for i in 0..n {
            m.set(i, i, c.clone());
        }
        m
    }

    pub fn from_fn(ring: &Ring, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> RingElem) -> Mat {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Mat { ring: ring.clone(), rows, cols, entries }
    }

    pub fn from_columns(ring: &Ring, rows: usize, columns: &[Vec<RingElem>]) -> Mat {
        Mat::from_fn(ring, rows, columns.len(), |r, c| columns[c][r].clone())
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &RingElem {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: RingElem) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<RingElem> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<RingElem>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(&self.ring, self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn map(&self, mut f: impl FnMut(&RingElem) -> RingElem) -> Mat {
        Mat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| f(e)).collect(),
        }
    }

    /// Entrywise σ^t.
    pub fn frobenius(&self, t: i64) -> Mat {
        let ring = self.ring.clone();
        self.map(|e| ring.frobenius(e, t))
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        let ring = self.ring.clone();
        Ok(Mat {
            ring: ring.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| ring.add(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.check_same_shape(other)?;
        let ring = self.ring.clone();
        Ok(Mat {
            ring: ring.clone(),
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| ring.sub(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let ring = &self.ring;
        let mut out = Mat::zero(ring, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if ring.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.at(k, j);
                    if ring.is_zero(b) {
                        continue;
                    }
                    let t = ring.mul(a, b);
                    let cur = out.at(i, j).clone();
                    out.set(i, j, ring.add(&cur, &t));
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[RingElem]) -> Result<Vec<RingElem>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!("matrix has {} columns, vector length {}", self.cols, v.len())));
        }
        let ring = &self.ring;
        let mut out = vec_zero(ring, self.rows);
        for j in 0..self.cols {
            if ring.is_zero(&v[j]) {
                continue;
            }
            for i in 0..self.rows {
                let a = self.at(i, j);
                if ring.is_zero(a) {
                    continue;
                }
                out[i] = ring.add(&out[i], &ring.mul(a, &v[j]));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &RingElem) -> Mat {
        let ring = self.ring.clone();
        self.map(|e| ring.mul(c, e))
    }

    pub fn mul_pow_p(&self, k: u32) -> Mat {
        let ring = self.ring.clone();
        self.map(|e| ring.mul_pow_p(e, k))
    }

    /// Divide every entry exactly by p^k; None if any entry is not divisible.
    pub fn div_pow_p_exact(&self, k: u32) -> Option<Mat> {
        let ring = self.ring.clone();
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(ring.div_pow_p_exact(e, k)?);
        }
        Some(Mat { ring, rows: self.rows, cols: self.cols, entries })
    }

    /// Minimal valuation over all entries.
    pub fn min_valuation(&self) -> Valuation {
        let mut best = Valuation::Infinite;
        for e in &self.entries {
            let v = self.ring.valuation(e);
            if v < best {
                best = v;
            }
        }
        best
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| self.ring.is_zero(e))
    }

    /// Truncate entries into a lower-precision ring with the same p and a.
    pub fn truncate_to(&self, target: &Ring) -> Result<Mat> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(self.ring.truncate_elem(target, e)?);
        }
        Ok(Mat { ring: target.clone(), rows: self.rows, cols: self.cols, entries })
    }

    /// Inverse by Gauss–Jordan with unit pivoting; `NonUnit` when the
    /// matrix is not invertible over the local ring.
    pub fn inverse(&self) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let ring = self.ring.clone();
        let mut work = self.clone();
        let mut inv = Mat::identity(&ring, n);
        for k in 0..n {
            let mut pivot = None;
            for i in k..n {
                if ring.valuation(work.at(i, k)) == Valuation::Finite(0) {
                    pivot = Some(i);
                    break;
                }
            }
            let i = pivot.ok_or(Error::NonUnit)?;
            if i != k {
                for c in 0..n {
                    let (a, b) = (work.at(i, c).clone(), work.at(k, c).clone());
                    work.set(i, c, b);
                    work.set(k, c, a);
                    let (a, b) = (inv.at(i, c).clone(), inv.at(k, c).clone());
                    inv.set(i, c, b);
                    inv.set(k, c, a);
                }
            }
            let u = ring.inv(work.at(k, k))?;
            for c in 0..n {
                work.set(k, c, ring.mul(&u, work.at(k, c)));
                inv.set(k, c, ring.mul(&u, inv.at(k, c)));
            }
            for r in 0..n {
                if r == k || ring.is_zero(work.at(r, k)) {
                    continue;
                }
                let q = work.at(r, k).clone();
                for c in 0..n {
                    let t = ring.mul(&q, work.at(k, c));
                    let cur = work.at(r, c).clone();
                    work.set(r, c, ring.sub(&cur, &t));
                    let t = ring.mul(&q, inv.at(k, c));
                    let cur = inv.at(r, c).clone();
                    inv.set(r, c, ring.sub(&cur, &t));
                }
            }
        }
        Ok(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    fn check_same_shape(&self, other: &Mat) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Smith normal form

#[derive(Clone, Debug)]
pub struct SmithForm {
    /// Valuations of the diagonal p-power entries, nondecreasing;
    /// `Infinite` marks a zero entry.
    pub diag: Vec<Valuation>,
    pub left: Mat,
    pub right: Mat,
}

/// Diagonalize `m` as `left · m · right = diag(p^{v_1}, p^{v_2}, ...)`
/// with `v_i` nondecreasing and `left`, `right` invertible. Pivoting is by
/// minimal valuation, ties broken in row-major order.
pub fn smith_normal_form(m: &Mat) -> SmithForm {
    let ring = m.ring().clone();
    let (r, c) = (m.rows(), m.cols());
    let mut work = m.clone();
    let mut left = Mat::identity(&ring, r);
    let mut right = Mat::identity(&ring, c);
    let steps = r.min(c);
    let mut diag = Vec::with_capacity(steps);
    for k in 0..steps {
        // minimal-valuation pivot in the trailing block
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..r {
            for j in k..c {
                if let Valuation::Finite(v) = ring.valuation(work.at(i, j)) {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else {
            break;
        };
        // move pivot to (k, k)
        if pi != k {
            for col in 0..c {
                let (a, b) = (work.at(pi, col).clone(), work.at(k, col).clone());
                work.set(pi, col, b);
                work.set(k, col, a);
            }
            for col in 0..r {
                let (a, b) = (left.at(pi, col).clone(), left.at(k, col).clone());
                left.set(pi, col, b);
                left.set(k, col, a);
            }
        }
        if pj != k {
            for row in 0..r {
                let (a, b) = (work.at(row, pj).clone(), work.at(row, k).clone());
                work.set(row, pj, b);
                work.set(row, k, a);
            }
            for row in 0..c {
                let (a, b) = (right.at(row, pj).clone(), right.at(row, k).clone());
                right.set(row, pj, b);
                right.set(row, k, a);
            }
        }
        // normalize pivot to exactly p^v
        let u = ring.div_pow_p_exact(work.at(k, k), v).expect("pivot valuation");
        let uinv = ring.inv(&u).expect("unit part of pivot");
        for col in 0..c {
            work.set(k, col, ring.mul(&uinv, work.at(k, col)));
        }
        for col in 0..r {
            left.set(k, col, ring.mul(&uinv, left.at(k, col)));
        }
        // clear the pivot column and row; all remaining entries have
        // valuation >= v, so the divisions are exact
        for i in k + 1..r {
            if ring.is_zero(work.at(i, k)) {
                continue;
            }
            let q = ring.div_pow_p_exact(work.at(i, k), v).expect("minimality of pivot");
            for col in 0..c {
                let t = ring.mul(&q, work.at(k, col));
                let cur = work.at(i, col).clone();
                work.set(i, col, ring.sub(&cur, &t));
            }
            for col in 0..r {
                let t = ring.mul(&q, left.at(k, col));
                let cur = left.at(i, col).clone();
                left.set(i, col, ring.sub(&cur, &t));
            }
        }
        for j in k + 1..c {
            if ring.is_zero(work.at(k, j)) {
                continue;
            }
            let q = ring.div_pow_p_exact(work.at(k, j), v).expect("minimality of pivot");
            for row in 0..r {
                let t = ring.mul(&q, work.at(row, k));
                let cur = work.at(row, j).clone();
                work.set(row, j, ring.sub(&cur, &t));
            }
            for row in 0..c {
                let t = ring.mul(&q, right.at(row, k));
                let cur = right.at(row, j).clone();
                right.set(row, j, ring.sub(&cur, &t));
            }
        }
        diag.push(Valuation::Finite(v));
    }
    while diag.len() < steps {
        diag.push(Valuation::Infinite);
    }
    SmithForm { diag, left, right }
}

// ---------------------------------------------------------------------------
// Howell-canonical submodules

#[derive(Clone, PartialEq, Eq, Debug)]
struct HowellCol {
    row: usize,
    exp: u32,
    v: Vec<RingElem>,
}

/// A submodule of the free module `R^h` at working precision, stored in
/// Howell canonical form: one column per pivot row, pivot entry exactly
/// `p^exp`, entries at other pivot rows canonically reduced. Two
/// submodules are equal as sets iff their canonical data agree.
#[derive(Clone, PartialEq, Eq)]
pub struct Submodule {
    ring: Ring,
    ambient: usize,
    cols: Vec<HowellCol>,
}

impl std::fmt::Debug for Submodule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Submodule(rank {} of R^{}, pivots ", self.cols.len(), self.ambient)?;
        for c in &self.cols {
            write!(f, "(r{} e{}) ", c.row, c.exp)?;
        }
        write!(f, ")")
    }
}

impl Submodule {
    pub fn zero(ring: &Ring, ambient: usize) -> Submodule {
        Submodule { ring: ring.clone(), ambient, cols: vec![] }
    }

    pub fn full(ring: &Ring, ambient: usize) -> Submodule {
        Submodule::from_generators(ring, ambient, &Mat::identity(ring, ambient).columns())
    }

    pub fn from_generators(ring: &Ring, ambient: usize, gens: &[Vec<RingElem>]) -> Submodule {
        let mut cols: Vec<Option<HowellCol>> = vec![None; ambient];
        let mut work: Vec<Vec<RingElem>> = gens.to_vec();
        let n = ring.precision();
        let mut guard = 0usize;
        let guard_max = 16 * (ambient + 1) * (ambient + 1) * (n as usize + 2) + 8 * gens.len() * (ambient + 1);
        while let Some(mut v) = work.pop() {
            guard += 1;
            assert!(guard <= guard_max, "howell reduction did not terminate");
            assert_eq!(v.len(), ambient, "generator length mismatch");
            let mut row = 0;
            while row < ambient {
                if ring.is_zero(&v[row]) {
                    row += 1;
                    continue;
                }
                let val = match ring.valuation(&v[row]) {
                    Valuation::Finite(e) => e,
                    Valuation::Infinite => unreachable!("nonzero element with infinite valuation"),
                };
                match &cols[row] {
                    None => {
                        let unit = ring.div_pow_p_exact(&v[row], val).expect("valuation");
                        let uinv = ring.inv(&unit).expect("unit part");
                        let vn = vec_scale(&ring, &uinv, &v);
                        if val > 0 {
                            work.push(vec_mul_pow_p(&ring, &vn, n - val));
                        }
                        cols[row] = Some(HowellCol { row, exp: val, v: vn });
                        break;
                    }
                    Some(g) if val >= g.exp => {
                        let q = ring.div_pow_p_exact(&v[row], g.exp).expect("valuation");
                        let gv = g.v.clone();
                        v = vec_sub(&ring, &v, &vec_scale(&ring, &q, &gv));
                        debug_assert!(ring.is_zero(&v[row]));
                        row += 1;
                    }
                    Some(_) => {
                        // strictly smaller valuation: the new vector becomes
                        // the pivot, the old one is reprocessed
                        let unit = ring.div_pow_p_exact(&v[row], val).expect("valuation");
                        let uinv = ring.inv(&unit).expect("unit part");
                        let vn = vec_scale(&ring, &uinv, &v);
                        if val > 0 {
                            work.push(vec_mul_pow_p(&ring, &vn, n - val));
                        }
                        let old = cols[row].take().unwrap();
                        cols[row] = Some(HowellCol { row, exp: val, v: vn });
                        work.push(old.v);
                        break;
                    }
                }
            }
        }
        // canonical reduction of entries at other pivot rows
        let pivot_rows: Vec<usize> = (0..ambient).filter(|&i| cols[i].is_some()).collect();
        for &i in &pivot_rows {
            let mut v = cols[i].as_ref().unwrap().v.clone();
            for &j in pivot_rows.iter().filter(|&&j| j > i) {
                let gj = cols[j].as_ref().unwrap();
                let (rem, quo) = ring.split_mod_pow_p(&v[j], gj.exp);
                if !ring.is_zero(&quo) {
                    let gv = gj.v.clone();
                    v = vec_sub(&ring, &v, &vec_scale(&ring, &quo, &gv));
                }
                v[j] = rem;
            }
            cols[i].as_mut().unwrap().v = v;
        }
        Submodule { ring: ring.clone(), ambient, cols: cols.into_iter().flatten().collect() }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    /// Number of canonical generators (= h for full-rank lattices).
    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn pivot_exponents(&self) -> Vec<(usize, u32)> {
        self.cols.iter().map(|c| (c.row, c.exp)).collect()
    }

    pub fn generators(&self) -> Vec<Vec<RingElem>> {
        self.cols.iter().map(|c| c.v.clone()).collect()
    }

    /// Canonical generator matrix, h×rank, columns in pivot-row order.
    pub fn matrix(&self) -> Mat {
        Mat::from_columns(&self.ring, self.ambient, &self.generators())
    }

    /// Reduce `v` against the canonical generators; the result is zero
    /// iff `v` is a member.
    pub fn reduce(&self, v: &[RingElem]) -> Vec<RingElem> {
        let ring = &self.ring;
        let mut v = v.to_vec();
        for c in &self.cols {
            if ring.is_zero(&v[c.row]) {
                continue;
            }
            if let Valuation::Finite(val) = ring.valuation(&v[c.row]) {
                if val >= c.exp {
                    let q = ring.div_pow_p_exact(&v[c.row], c.exp).expect("valuation");
                    v = vec_sub(ring, &v, &vec_scale(ring, &q, &c.v));
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[RingElem]) -> bool {
        vec_is_zero(&self.ring, &self.reduce(v))
    }

    pub fn contains_all(&self, other: &Submodule) -> bool {
        other.generators().iter().all(|g| self.contains(g))
    }

    pub fn sum(&self, other: &Submodule) -> Submodule {
        let mut gens = self.generators();
        gens.extend(other.generators());
        Submodule::from_generators(&self.ring, self.ambient, &gens)
    }

    /// Intersection, computed through the kernel of `[A | -B]`.
    pub fn intersect(&self, other: &Submodule) -> Submodule {
        let ring = &self.ring;
        let ga = self.generators();
        let gb = other.generators();
        if ga.is_empty() || gb.is_empty() {
            return Submodule::zero(ring, self.ambient);
        }
        let mut columns = ga.clone();
        for g in &gb {
            columns.push(g.iter().map(|e| ring.neg(e)).collect());
        }
        let stacked = Mat::from_columns(ring, self.ambient, &columns);
        let ker = kernel_of_mat(&stacked);
        let a_mat = Mat::from_columns(ring, self.ambient, &ga);
        let gens: Vec<Vec<RingElem>> = ker
            .generators()
            .iter()
            .map(|k| a_mat.mul_vec(&k[..ga.len()]).expect("shape"))
            .collect();
        Submodule::from_generators(ring, self.ambient, &gens)
    }

    /// Smallest p-saturated submodule containing self:
    /// `{v : p^k v ∈ self for some k}`.
    pub fn saturate(&self) -> Submodule {
        if self.cols.is_empty() {
            return self.clone();
        }
        let ring = &self.ring;
        let snf = smith_normal_form(&self.matrix());
        let left_inv = snf.left.inverse().expect("left transform is invertible");
        let gens: Vec<Vec<RingElem>> = snf
            .diag
            .iter()
            .enumerate()
            .filter(|(_, d)| d.is_finite())
            .map(|(j, _)| left_inv.column(j))
            .collect();
        Submodule::from_generators(ring, self.ambient, &gens)
    }

    pub fn scale_pow_p(&self, k: u32) -> Submodule {
        let gens: Vec<Vec<RingElem>> =
            self.generators().iter().map(|g| vec_mul_pow_p(&self.ring, g, k)).collect();
        Submodule::from_generators(&self.ring, self.ambient, &gens)
    }

    /// Entrywise σ^t image (a submodule again, since σ is an automorphism).
    pub fn frobenius(&self, t: i64) -> Submodule {
        let gens: Vec<Vec<RingElem>> =
            self.generators().iter().map(|g| vec_frobenius(&self.ring, g, t)).collect();
        Submodule::from_generators(&self.ring, self.ambient, &gens)
    }

    /// Free basis of a saturated submodule, extracted through the Smith
    /// normal form of the generator matrix: the span is
    /// `Σ p^{d_i}·(left^{-1} e_i)`, and saturation forces every finite
    /// `d_i` to vanish. None when the submodule is not saturated. Note
    /// that saturated spans can have non-unit Howell pivots (the summand
    /// `span{(p,1)} ⊆ R^2` does), so this cannot be read off pivot
    /// exponents.
    pub fn free_basis(&self) -> Option<Mat> {
        if self.cols.is_empty() {
            return Some(Mat::zero(&self.ring, self.ambient, 0));
        }
        let snf = smith_normal_form(&self.matrix());
        if snf.diag.iter().any(|d| matches!(d, Valuation::Finite(v) if *v > 0)) {
            return None;
        }
        let left_inv = snf.left.inverse().ok()?;
        let k = snf.diag.iter().filter(|d| **d == Valuation::Finite(0)).count();
        let cols: Vec<Vec<RingElem>> = (0..k).map(|j| left_inv.column(j)).collect();
        Some(Mat::from_columns(&self.ring, self.ambient, &cols))
    }

    /// Rank of the free basis of a saturated submodule.
    pub fn free_rank(&self) -> Option<usize> {
        self.free_basis().map(|b| b.cols())
    }

    /// A basis of a free complement: columns extending [`Submodule::free_basis`]
    /// to a basis of the ambient module. None when not saturated.
    pub fn free_complement(&self) -> Option<Mat> {
        if self.cols.is_empty() {
            return Some(Mat::identity(&self.ring, self.ambient));
        }
        let snf = smith_normal_form(&self.matrix());
        if snf.diag.iter().any(|d| matches!(d, Valuation::Finite(v) if *v > 0)) {
            return None;
        }
        let left_inv = snf.left.inverse().ok()?;
        let k = snf.diag.iter().filter(|d| **d == Valuation::Finite(0)).count();
        let cols: Vec<Vec<RingElem>> = (k..self.ambient).map(|j| left_inv.column(j)).collect();
        Some(Mat::from_columns(&self.ring, self.ambient, &cols))
    }

    /// Length of `R^h / self` when self has full rank; None otherwise.
    pub fn colength_in_full(&self) -> Option<u64> {
        if self.cols.len() != self.ambient {
            return None;
        }
        Some(self.cols.iter().map(|c| c.exp as u64).sum())
    }

    /// Minimal valuation over all canonical entries (content exponent).
    pub fn content(&self) -> Valuation {
        let mut best = Valuation::Infinite;
        for c in &self.cols {
            for e in &c.v {
                let v = self.ring.valuation(e);
                if v < best {
                    best = v;
                }
            }
        }
        best
    }

    /// Exact division of the whole submodule by p^k (valid when content >= k).
    /// The quotient's top k digits are canonical zero-fill: the result is
    /// trustworthy mod p^{N-k} only.
    pub fn div_pow_p_exact(&self, k: u32) -> Option<Submodule> {
        let mut gens = Vec::with_capacity(self.cols.len());
        for c in &self.cols {
            gens.push(vec_div_pow_p_exact(&self.ring, &c.v, k)?);
        }
        Some(Submodule::from_generators(&self.ring, self.ambient, &gens))
    }

    /// The same submodule viewed at a smaller precision: generators are
    /// truncated and re-canonicalized over the target ring.
    pub fn truncate_to(&self, target: &Ring) -> Result<Submodule> {
        let gens: Vec<Vec<RingElem>> = self
            .generators()
            .iter()
            .map(|g| g.iter().map(|e| self.ring.truncate_elem(target, e)).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        Ok(Submodule::from_generators(target, self.ambient, &gens))
    }
}

/// Kernel of a matrix (as a map `R^c -> R^r`), including torsion members.
pub fn kernel_of_mat(m: &Mat) -> Submodule {
    let ring = m.ring().clone();
    let n = ring.precision();
    let snf = smith_normal_form(m);
    let mut gens: Vec<Vec<RingElem>> = vec![];
    for j in 0..m.cols() {
        if j < snf.diag.len() {
            match snf.diag[j] {
                Valuation::Finite(0) => {}
                Valuation::Finite(d) => {
                    gens.push(vec_mul_pow_p(&ring, &snf.right.column(j), n - d));
                }
                Valuation::Infinite => gens.push(snf.right.column(j)),
            }
        } else {
            gens.push(snf.right.column(j));
        }
    }
    Submodule::from_generators(&ring, m.cols(), &gens)
}

/// Column span of a matrix.
pub fn image_of_mat(m: &Mat) -> Submodule {
    Submodule::from_generators(m.ring(), m.rows(), &m.columns())
}

// ---------------------------------------------------------------------------
// solving in a span with coefficient tracking

/// Howell reduction that remembers how each canonical column is expressed
/// in the original generators, so membership comes with coefficients.
pub struct SpanSolver {
    ring: Ring,
    ambient: usize,
    n_gens: usize,
    cols: Vec<Option<(u32, Vec<RingElem>, Vec<RingElem>)>>,
}

impl SpanSolver {
    pub fn new(ring: &Ring, ambient: usize, gens: &[Vec<RingElem>]) -> SpanSolver {
        let n = ring.precision();
        let n_gens = gens.len();
        let mut cols: Vec<Option<(u32, Vec<RingElem>, Vec<RingElem>)>> = vec![None; ambient];
        let mut work: Vec<(Vec<RingElem>, Vec<RingElem>)> = gens
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut expr = vec_zero(ring, n_gens);
                expr[i] = ring.one();
                (g.clone(), expr)
            })
            .collect();
        let mut guard = 0usize;
        let guard_max = 16 * (ambient + 1) * (ambient + 1) * (n as usize + 2) + 8 * n_gens * (ambient + 1);
        while let Some((mut v, mut expr)) = work.pop() {
            guard += 1;
            assert!(guard <= guard_max, "span solver did not terminate");
            let mut row = 0;
            while row < ambient {
                if ring.is_zero(&v[row]) {
                    row += 1;
                    continue;
                }
                let val = ring.valuation(&v[row]).finite().expect("nonzero");
                match &cols[row] {
                    None => {
                        let unit = ring.div_pow_p_exact(&v[row], val).expect("valuation");
                        let uinv = ring.inv(&unit).expect("unit");
                        let vn = vec_scale(ring, &uinv, &v);
                        let en = vec_scale(ring, &uinv, &expr);
                        if val > 0 {
                            work.push((vec_mul_pow_p(ring, &vn, n - val), vec_mul_pow_p(ring, &en, n - val)));
                        }
                        cols[row] = Some((val, vn, en));
                        break;
                    }
                    Some((e, g, gexpr)) if val >= *e => {
                        let q = ring.div_pow_p_exact(&v[row], *e).expect("valuation");
                        let (g, gexpr) = (g.clone(), gexpr.clone());
                        v = vec_sub(ring, &v, &vec_scale(ring, &q, &g));
                        expr = vec_sub(ring, &expr, &vec_scale(ring, &q, &gexpr));
                        row += 1;
                    }
                    Some(_) => {
                        let unit = ring.div_pow_p_exact(&v[row], val).expect("valuation");
                        let uinv = ring.inv(&unit).expect("unit");
                        let vn = vec_scale(ring, &uinv, &v);
                        let en = vec_scale(ring, &uinv, &expr);
                        if val > 0 {
                            work.push((vec_mul_pow_p(ring, &vn, n - val), vec_mul_pow_p(ring, &en, n - val)));
                        }
                        let old = cols[row].take().unwrap();
                        cols[row] = Some((val, vn, en));
                        work.push((old.1, old.2));
                        break;
                    }
                }
            }
        }
        SpanSolver { ring: ring.clone(), ambient, n_gens, cols }
    }

    /// Coefficients c with `sum c_i g_i = target` in the original
    /// generators, if the target lies in the span.
    pub fn solve(&self, target: &[RingElem]) -> Option<Vec<RingElem>> {
        let ring = &self.ring;
        assert_eq!(target.len(), self.ambient);
        let mut v = target.to_vec();
        let mut coeff = vec_zero(ring, self.n_gens);
        for row in 0..self.ambient {
            if ring.is_zero(&v[row]) {
                continue;
            }
            let val = ring.valuation(&v[row]).finite()?;
            let (e, g, gexpr) = self.cols[row].as_ref()?;
            if val < *e {
                return None;
            }
            let q = ring.div_pow_p_exact(&v[row], *e).expect("valuation");
            v = vec_sub(ring, &v, &vec_scale(ring, &q, g));
            coeff = vec_add(ring, &coeff, &vec_scale(ring, &q, gexpr));
        }
        if vec_is_zero(ring, &v) {
            Some(coeff)
        } else {
            None
        }
    }

    pub fn contains(&self, target: &[RingElem]) -> bool {
        self.solve(target).is_some()
    }
}

/// Express an element of the big ring in the embedded subring, as an
/// element of the small ring; None when it does not lie in the image.
pub fn retract_through(emb: &Embedding, x: &RingElem) -> Option<RingElem> {
    let big = emb.big();
    let small = emb.small();
    let scalar = big.scalar_ring();
    let to_scalar_vec = |e: &RingElem| -> Vec<RingElem> {
        e.coeffs().iter().map(|c| scalar.from_residues(vec![c.clone()]).unwrap()).collect()
    };
    let gens: Vec<Vec<RingElem>> = emb.theta_pows().iter().map(to_scalar_vec).collect();
    let solver = SpanSolver::new(&scalar, big.degree(), &gens);
    let coeffs = solver.solve(&to_scalar_vec(x))?;
    let res: Vec<BigUint> = coeffs.iter().map(|c| c.coeffs()[0].clone()).collect();
    small.from_residues(res).ok()
}

// ---------------------------------------------------------------------------
// semilinear operators

/// A σ^t-twisted endomorphism of `R^h`: `op(v) = matrix · σ^t(v)`, so
/// `op(c·v) = σ^t(c)·op(v)`. Column convention: `op(e_j) = Σ_i m[i][j] e_i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SemiLinOp {
    ring: Ring,
    rank: usize,
    matrix: Mat,
    twist: i64,
}

impl SemiLinOp {
    pub fn new(ring: &Ring, matrix: Mat, twist: i64) -> Result<SemiLinOp> {
        if matrix.ring() != ring {
            return Err(Error::RingMismatch);
        }
        if matrix.rows() != matrix.cols() {
            return Err(Error::DimensionMismatch("operator matrix must be square".into()));
        }
        let rank = matrix.rows();
        Ok(SemiLinOp { ring: ring.clone(), rank, matrix, twist })
    }

    pub fn identity(ring: &Ring, rank: usize) -> SemiLinOp {
        SemiLinOp { ring: ring.clone(), rank, matrix: Mat::identity(ring, rank), twist: 0 }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    /// Twist reduced mod a (σ has order a), for equality testing.
    pub fn twist_reduced(&self) -> i64 {
        self.twist.rem_euclid(self.ring.degree() as i64)
    }

    pub fn apply(&self, v: &[RingElem]) -> Result<Vec<RingElem>> {
        if v.len() != self.rank {
            return Err(Error::DimensionMismatch(format!("operator rank {}, vector length {}", self.rank, v.len())));
        }
        let tv = vec_frobenius(&self.ring, v, self.twist);
        self.matrix.mul_vec(&tv)
    }

    /// `v ↦ f(g(v))`: matrix is `M_f · σ^{t_f}(M_g)`, twist adds.
    pub fn compose(f: &SemiLinOp, g: &SemiLinOp) -> Result<SemiLinOp> {
        if f.ring != g.ring {
            return Err(Error::RingMismatch);
        }
        if f.rank != g.rank {
            return Err(Error::DimensionMismatch(format!("ranks {} vs {}", f.rank, g.rank)));
        }
        let m = f.matrix.mul(&g.matrix.frobenius(f.twist))?;
        Ok(SemiLinOp { ring: f.ring.clone(), rank: f.rank, matrix: m, twist: f.twist + g.twist })
    }

    pub fn pow(&self, t: u32) -> SemiLinOp {
        let mut result = SemiLinOp::identity(&self.ring, self.rank);
        let mut base = self.clone();
        let mut t = t;
        while t > 0 {
            if t & 1 == 1 {
                result = SemiLinOp::compose(&base, &result).expect("same ring and rank");
            }
            base = SemiLinOp::compose(&base, &base).expect("same ring and rank");
            t >>= 1;
        }
        result
    }

    pub fn add(&self, other: &SemiLinOp) -> Result<SemiLinOp> {
        if self.twist_reduced() != other.twist_reduced() {
            return Err(Error::InvalidParams("cannot add operators of different twist".into()));
        }
        Ok(SemiLinOp {
            ring: self.ring.clone(),
            rank: self.rank,
            matrix: self.matrix.add(&other.matrix)?,
            twist: self.twist,
        })
    }

    pub fn scale(&self, c: &RingElem) -> SemiLinOp {
        SemiLinOp { ring: self.ring.clone(), rank: self.rank, matrix: self.matrix.scale(c), twist: self.twist }
    }

    pub fn mul_pow_p(&self, k: u32) -> SemiLinOp {
        SemiLinOp { ring: self.ring.clone(), rank: self.rank, matrix: self.matrix.mul_pow_p(k), twist: self.twist }
    }

    /// Exact division of the matrix by p^k; the integrality test for
    /// operators like p^{-r}V^s.
    pub fn div_pow_p_exact(&self, k: u32) -> Option<SemiLinOp> {
        Some(SemiLinOp {
            ring: self.ring.clone(),
            rank: self.rank,
            matrix: self.matrix.div_pow_p_exact(k)?,
            twist: self.twist,
        })
    }

    /// The (h·a)×(h·a) matrix of the operator over Z/p^N in the basis
    /// {x^i e_j}, flattening index j·a + i. Multiplicative under compose.
    pub fn linearize(&self) -> Mat {
        let ring = &self.ring;
        let a = ring.degree();
        let h = self.rank;
        let scalar = ring.scalar_ring();
        let mut out = Mat::zero(&scalar, h * a, h * a);
        // powers of σ^t(x)
        let gx = ring.frobenius(&ring.generator(), self.twist);
        let mut pows = Vec::with_capacity(a);
        let mut cur = ring.one();
        for _ in 0..a {
            pows.push(cur.clone());
            cur = ring.mul(&cur, &gx);
        }
        for j in 0..h {
            for i in 0..a {
                // op(x^i e_j) = Σ_k m[k][j]·σ^t(x)^i e_k
                for k in 0..h {
                    let mkj = self.matrix.at(k, j);
                    if ring.is_zero(mkj) {
                        continue;
                    }
                    let prod = ring.mul(mkj, &pows[i]);
                    for (ii, coeff) in prod.coeffs().iter().enumerate() {
                        if coeff.is_zero() {
                            continue;
                        }
                        let e = scalar.from_residues(vec![coeff.clone()]).unwrap();
                        out.set(k * a + ii, j * a + i, e);
                    }
                }
            }
        }
        out
    }

    /// Flatten a vector of R^h into the Z/p^N coordinates used by
    /// [`SemiLinOp::linearize`].
    pub fn flatten_vec(ring: &Ring, v: &[RingElem]) -> Vec<RingElem> {
        let scalar = ring.scalar_ring();
        let mut out = Vec::with_capacity(v.len() * ring.degree());
        for e in v {
            for c in e.coeffs() {
                out.push(scalar.from_residues(vec![c.clone()]).unwrap());
            }
        }
        out
    }

    /// Inverse of flatten.
    pub fn unflatten_vec(ring: &Ring, v: &[RingElem]) -> Vec<RingElem> {
        let a = ring.degree();
        assert_eq!(v.len() % a, 0);
        v.chunks(a)
            .map(|chunk| ring.from_residues(chunk.iter().map(|c| c.coeffs()[0].clone()).collect()).unwrap())
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = (0..self.rank)
            .map(|r| {
                serde_json::Value::Array(
                    (0..self.rank).map(|c| self.ring.elem_to_json(self.matrix.at(r, c))).collect(),
                )
            })
            .collect();
        serde_json::json!({ "twist": self.twist_reduced(), "matrix": rows })
    }

    pub fn from_json(ring: &Ring, v: &serde_json::Value) -> Result<SemiLinOp> {
        let twist = v
            .get("twist")
            .and_then(serde_json::Value::as_i64)
            .ok_or_else(|| Error::Parse("operator: missing twist".into()))?;
        let rows = v
            .get("matrix")
            .and_then(serde_json::Value::as_array)
            .ok_or_else(|| Error::Parse("operator: missing matrix".into()))?;
        let rank = rows.len();
        let mut m = Mat::zero(ring, rank, rank);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_array().ok_or_else(|| Error::Parse("operator: matrix rows are arrays".into()))?;
            if row.len() != rank {
                return Err(Error::Parse("operator: matrix must be square".into()));
            }
            for (c, e) in row.iter().enumerate() {
                m.set(r, c, ring.elem_from_json(e)?);
            }
        }
        SemiLinOp::new(ring, m, twist)
    }
}

// ---------------------------------------------------------------------------
// Fitting decomposition and fixed points

/// Stabilized image and kernel of an operator: the module splits as
/// `bij ⊕ nil` with the operator bijective on `bij` and nilpotent mod p^N
/// on `nil`.
pub fn fitting_decomposition(op: &SemiLinOp) -> Result<(Submodule, Submodule)> {
    let ring = op.ring();
    let h = op.rank();
    let t_max = (h * ring.degree() * ring.precision() as usize + 1) as u32;
    let big = op.pow(t_max);
    let bij = image_of_mat(big.matrix());
    let nil = kernel_of_mat(big.matrix()).frobenius(-(big.twist()));
    // chains must have stabilized: one more application changes nothing
    let bigger = SemiLinOp::compose(op, &big).expect("same ring");
    let bij2 = image_of_mat(bigger.matrix());
    let nil2 = kernel_of_mat(bigger.matrix()).frobenius(-(bigger.twist()));
    if bij != bij2 || nil != nil2 {
        return Err(Error::NoStabilization);
    }
    Ok((bij, nil))
}

/// The fixed set `{x : op(x) = x}` at working precision, with the degree
/// of the subring `W_N(F_{p^g})`, g = gcd(a, twist), over which it is a
/// module.
pub struct FixedLattice {
    pub subring_degree: usize,
    /// Canonical Z/p^N generators, as vectors in R^h.
    pub generators: Vec<Vec<RingElem>>,
}

pub fn fixed_points(op: &SemiLinOp) -> FixedLattice {
    let ring = op.ring();
    let a = ring.degree();
    let t = op.twist().rem_euclid(a as i64) as usize;
    let g = if t == 0 { a } else { num_integer::Integer::gcd(&a, &t) };
    let lin = op.linearize();
    let scalar = ring.scalar_ring();
    let diff = lin.sub(&Mat::identity(&scalar, lin.rows())).expect("same shape");
    let ker = kernel_of_mat(&diff);
    let generators: Vec<Vec<RingElem>> =
        ker.generators().iter().map(|v| SemiLinOp::unflatten_vec(ring, v)).collect();
    FixedLattice { subring_degree: g, generators }
}

/// Extract from Z_p-generators of a W_N(F_{p^g})-module a free basis over
/// that subring, by lifting a residue basis (Nakayama). Returns vectors
/// in ambient coordinates; None if the expected rank is not reached.
pub fn subring_basis(
    ring: &Ring,
    emb: &Embedding,
    gens: &[Vec<RingElem>],
    expected_rank: usize,
) -> Option<Vec<Vec<RingElem>>> {
    let g = emb.small().degree();
    let a = ring.degree();
    let p = ring.p();
    let ambient = gens.first().map_or(0, Vec::len);
    // F_p Gaussian elimination state over the flattened residue space
    let dim = ambient * a;
    let mut echelon: Vec<Vec<u64>> = vec![]; // reduced rows with leading 1
    let mut leads: Vec<usize> = vec![];
    fn reduce(echelon: &[Vec<u64>], leads: &[usize], mut row: Vec<u64>, p: u64) -> Vec<u64> {
        let dim = row.len();
        for (r, &lead) in echelon.iter().zip(leads) {
            if row[lead] != 0 {
                let c = row[lead];
                for i in 0..dim {
                    row[i] = (row[i] + (p - r[i] % p) % p * c) % p;
                }
            }
        }
        row
    }
    let flatten_mod_p = |v: &[RingElem]| -> Vec<u64> {
        let mut out = Vec::with_capacity(dim);
        for e in v {
            out.extend(ring.reduce_mod_p(e));
        }
        out
    };
    let mut basis = vec![];
    for v in gens {
        let red = reduce(&echelon, &leads, flatten_mod_p(v), p);
        if red.iter().all(|&c| c == 0) {
            continue;
        }
        basis.push(v.clone());
        // insert theta'^j v for j = 0..g-1 into the echelon
        let mut tv = v.clone();
        for _ in 0..g {
            let mut row = reduce(&echelon, &leads, flatten_mod_p(&tv), p);
            if let Some(lead) = row.iter().position(|&c| c != 0) {
                let inv = {
                    // inverse mod p
                    let mut x = 1u64;
                    for cand in 1..p {
                        if (row[lead] * cand) % p == 1 {
                            x = cand;
                            break;
                        }
                    }
                    x
                };
                for c in row.iter_mut() {
                    *c = (*c * inv) % p;
                }
                echelon.push(row);
                leads.push(lead);
            }
            tv = vec_scale(ring, emb.theta(), &tv);
        }
        if basis.len() == expected_rank {
            break;
        }
    }
    if basis.len() == expected_rank {
        Some(basis)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// lattices with denominators

/// A lattice `p^{-denom}·U` with `U ⊆ R^h`.
///
/// Comparisons and membership always scale *up* (multiplication, which is
/// exact); the one place digits are fabricated is the content reduction
/// in [`Lattice::normalized`], and the `known_mod` watermark records how
/// many low digits of the stored generators are trustworthy. Consumers
/// that transport module structure first truncate to the watermark.
#[derive(Clone, Debug)]
pub struct Lattice {
    ring: Ring,
    ambient: usize,
    denom: u32,
    sub: Submodule,
    known_mod: u32,
}

impl Lattice {
    /// The standard lattice R^h.
    pub fn standard(ring: &Ring, ambient: usize) -> Lattice {
        Lattice {
            ring: ring.clone(),
            ambient,
            denom: 0,
            sub: Submodule::full(ring, ambient),
            known_mod: ring.precision(),
        }
    }

    /// `p^{-denom}·span(gens)` with exact generators.
    pub fn new(ring: &Ring, ambient: usize, denom: u32, gens: &[Vec<RingElem>]) -> Lattice {
        let sub = Submodule::from_generators(ring, ambient, gens);
        Lattice { ring: ring.clone(), ambient, denom, sub, known_mod: ring.precision() }
    }

    pub fn from_submodule(sub: Submodule, denom: u32) -> Lattice {
        let ring = sub.ring().clone();
        let known_mod = ring.precision();
        Lattice { ring, ambient: sub.ambient_rank(), denom, sub, known_mod }
    }

    /// Declare that only digits below `w` are trustworthy (for lattices
    /// assembled from lower-precision data).
    pub fn with_known_mod(mut self, w: u32) -> Lattice {
        self.known_mod = self.known_mod.min(w);
        self
    }

    pub fn known_mod(&self) -> u32 {
        self.known_mod
    }

    /// Reduce to the minimal denominator. Dividing the generators by the
    /// content fabricates their top digits, so the watermark drops by the
    /// reduction amount.
    pub fn normalized(mut self) -> Lattice {
        if self.denom == 0 {
            return self;
        }
        let c = match self.sub.content() {
            Valuation::Finite(c) => c,
            Valuation::Infinite => self.denom, // zero module
        };
        let red = c.min(self.denom);
        if red > 0 {
            self.sub = self.sub.div_pow_p_exact(red).expect("content bound");
            self.denom -= red;
            self.known_mod = self.known_mod.saturating_sub(red);
        }
        self
    }

    /// The same lattice stated over a smaller-precision ring.
    pub fn truncate(&self, target: &Ring) -> Result<Lattice> {
        Ok(Lattice {
            ring: target.clone(),
            ambient: self.ambient,
            denom: self.denom,
            sub: self.sub.truncate_to(target)?,
            known_mod: self.known_mod.min(target.precision()),
        })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn denominator_exp(&self) -> u32 {
        self.denom
    }

    pub fn submodule(&self) -> &Submodule {
        &self.sub
    }

    pub fn rank(&self) -> usize {
        self.sub.rank()
    }

    /// Membership of `p^{-vd}·v`, decided by scaling up (division-free).
    pub fn contains_scaled(&self, v: &[RingElem], vd: u32) -> bool {
        if vd > self.denom {
            // p^{-vd} v ∈ p^{-D} U ⟺ v ∈ p^{vd-D} U at comparable precision
            self.sub.scale_pow_p(vd - self.denom).contains(v)
        } else {
            self.sub.contains(&vec_mul_pow_p(&self.ring, v, self.denom - vd))
        }
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.sub.generators().iter().all(|g| self.contains_scaled(g, other.denom))
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        let d = self.denom.max(other.denom);
        let mut gens: Vec<Vec<RingElem>> = self
            .sub
            .generators()
            .iter()
            .map(|g| vec_mul_pow_p(&self.ring, g, d - self.denom))
            .collect();
        gens.extend(other.sub.generators().iter().map(|g| vec_mul_pow_p(&self.ring, g, d - other.denom)));
        Lattice::new(&self.ring, self.ambient, d, &gens).with_known_mod(self.known_mod.min(other.known_mod))
    }

    /// Image under a twisted operator scaled by p^{-shift}.
    pub fn apply(&self, op: &SemiLinOp, shift: u32) -> Result<Lattice> {
        let gens: Vec<Vec<RingElem>> = self
            .sub
            .generators()
            .iter()
            .map(|g| op.apply(g))
            .collect::<Result<_>>()?;
        Ok(Lattice::new(&self.ring, self.ambient, self.denom + shift, &gens).with_known_mod(self.known_mod))
    }

    /// Length of self/other for a full-rank sublattice `other ⊆ self`.
    pub fn length_over(&self, other: &Lattice) -> Result<u64> {
        if !self.contains_lattice(other) {
            return Err(Error::InvalidParams("length_over: not a sublattice".into()));
        }
        let d = self.denom.max(other.denom);
        let scale_self = self.sub.scale_pow_p(d - self.denom);
        let scale_other = other.sub.scale_pow_p(d - other.denom);
        let guard = |s: &Submodule| -> Result<u64> {
            let max_exp = s.pivot_exponents().iter().map(|&(_, e)| e).max().unwrap_or(0);
            if max_exp >= self.known_mod.min(other.known_mod) {
                return Err(Error::PrecisionExhausted(
                    "lattice index reaches untrusted digits".into(),
                ));
            }
            s.colength_in_full()
                .ok_or_else(|| Error::InvalidParams("length_over: lattice not full rank".into()))
        };
        let ls = guard(&scale_self)?;
        let lo = guard(&scale_other)?;
        Ok(lo - ls)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let reduced = self.clone().normalized();
        serde_json::json!({
            "denom_log": reduced.denom,
            "basis": reduced
                .sub
                .generators()
                .iter()
                .map(|g| serde_json::Value::Array(g.iter().map(|e| reduced.ring.elem_to_json(e)).collect()))
                .collect::<Vec<_>>(),
        })
    }
}

impl PartialEq for Lattice {
    /// Equality as subsets, compared by scaling up to a common denominator
    /// and, when either side carries fabricated digits, truncating both to
    /// the common watermark.
    fn eq(&self, other: &Self) -> bool {
        if self.ring != other.ring || self.ambient != other.ambient {
            return false;
        }
        let d = self.denom.max(other.denom);
        let a = self.sub.scale_pow_p(d - self.denom);
        let b = other.sub.scale_pow_p(d - other.denom);
        let w = self.known_mod.min(other.known_mod);
        if w >= self.ring.precision() {
            a == b
        } else if w == 0 {
            true
        } else {
            let small = self.ring.with_precision(w).expect("w >= 1");
            match (a.truncate_to(&small), b.truncate_to(&small)) {
                (Ok(x), Ok(y)) => x == y,
                _ => false,
            }
        }
    }
}

impl Eq for Lattice {}
