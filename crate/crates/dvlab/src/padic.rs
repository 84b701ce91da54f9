//! Exact arithmetic in the truncated Witt ring `W_N(F_{p^a})`.
//!
//! The ring is modeled as `(Z/p^N)[x]/(f)` where `f` is the
//! lexicographically smallest monic irreducible polynomial of degree `a`
//! over `F_p`, lifted with coefficients in `[0, p)`. The Frobenius `σ` is
//! the substitution sending the generator to the Hensel lift of its p-th
//! power; it is an order-`a` ring automorphism fixing `Z/p^N`.
//!
//! Elements are coordinate vectors in the power basis of `f`, each
//! coordinate an arbitrary-precision residue in `[0, p^N)`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// A p-adic valuation truncated at the working precision: `Finite(v)` with
/// `v < N`, or `Infinite` meaning "zero mod p^N, true valuation unknowable".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

impl Valuation {
    pub fn is_finite(self) -> bool {
        matches!(self, Valuation::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Valuation::Finite(x), Valuation::Finite(y)) => x.cmp(y),
            (Valuation::Finite(_), Valuation::Infinite) => std::cmp::Ordering::Less,
            (Valuation::Infinite, Valuation::Finite(_)) => std::cmp::Ordering::Greater,
            (Valuation::Infinite, Valuation::Infinite) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinite => write!(f, "INF"),
        }
    }
}

/// Construction parameters: characteristic `p`, residue degree `a`,
/// truncation level `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RingParams {
    pub p: u64,
    pub a: usize,
    pub n: u32,
}

/// An element of `W_N(F_{p^a})`: `a` residues mod `p^N` in the power basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElem {
    coeffs: Vec<BigUint>,
}

impl RingElem {
    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }
}

struct RingInner {
    params: RingParams,
    p_big: BigUint,
    /// p^N
    modulus: BigUint,
    /// Low coefficients of the monic modulus polynomial, length `a`,
    /// each in `[0, p)`.
    modulus_poly: Vec<BigUint>,
    /// σ(x) for the generator x, correct mod p^N.
    frobenius_image: RingElem,
    /// Coordinate matrices of σ^t for t = 0..a, column-major a×a blocks.
    frob_pows: Vec<Vec<BigUint>>,
}

/// Shared handle to an immutable ring; cheap to clone and send.
#[derive(Clone)]
pub struct Ring(Arc<RingInner>);

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        self.0.params == other.0.params
    }
}

impl Eq for Ring {}

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0.params;
        write!(f, "W_{}(F_{}^{})", p.n, p.p, p.a)
    }
}

// ---------------------------------------------------------------------------
// F_p[x] helpers used for modulus selection and mod-p inversion.
// Coefficients are u64 residues; p <= 2^31 so products fit in u128.

fn fp_trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn fp_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let t = (x as u128) * (y as u128) % (p as u128);
            out[i + j] = ((out[i + j] as u128 + t) % (p as u128)) as u64;
        }
    }
    fp_trim(&mut out);
    out
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn fp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r: Vec<u64> = a.to_vec();
    fp_trim(&mut r);
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for j in 0..dm {
                let t = (lead as u128) * (m[j] as u128) % (p as u128);
                let idx = shift + j;
                r[idx] = ((r[idx] as u128 + (p as u128) - t) % (p as u128)) as u64;
            }
        }
        r.pop();
        fp_trim(&mut r);
    }
    r
}

fn fp_powmod(base: &[u64], mut e: BigUint, m: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut b = fp_rem(base, m, p);
    let two = BigUint::from(2u32);
    while !e.is_zero() {
        if (&e % &two).is_one() {
            result = fp_rem(&fp_mul(&result, &b, p), m, p);
        }
        b = fp_rem(&fp_mul(&b, &b, p), m, p);
        e >>= 1;
    }
    result
}

fn fp_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    fp_trim(&mut a);
    fp_trim(&mut b);
    while !b.is_empty() {
        // make b monic for the remainder step
        let lead = *b.last().unwrap();
        let linv = fp_unit_inv(lead, p);
        let monic: Vec<u64> = b
            .iter()
            .map(|&c| ((c as u128) * (linv as u128) % (p as u128)) as u64)
            .collect();
        let r = fp_rem(&a, &monic, p);
        a = b;
        b = r;
    }
    a
}

fn fp_unit_inv(x: u64, p: u64) -> u64 {
    // extended Euclid on integers
    let (mut r0, mut r1) = (p as i128, (x % p) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    assert_eq!(r0, 1, "non-unit residue");
    (s0.rem_euclid(p as i128)) as u64
}

/// Extended Euclid in F_p[x]: returns s with `s·a ≡ gcd(a, m) mod m`,
/// requiring the gcd to be a nonzero constant.
fn fp_invmod(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut r0 = m.to_vec();
    let mut r1 = fp_rem(a, m, p);
    let mut s0: Vec<u64> = vec![];
    let mut s1: Vec<u64> = vec![1];
    while !r1.is_empty() {
        // divide r0 by r1
        let lead = *r1.last().unwrap();
        let linv = fp_unit_inv(lead, p);
        let mut q = vec![0u64; r0.len().saturating_sub(r1.len()) + 1];
        let mut rem = r0.clone();
        while rem.len() >= r1.len() && !rem.is_empty() {
            let shift = rem.len() - r1.len();
            let c = ((*rem.last().unwrap() as u128) * (linv as u128) % (p as u128)) as u64;
            q[shift] = c;
            for j in 0..r1.len() {
                let t = (c as u128) * (r1[j] as u128) % (p as u128);
                rem[shift + j] = ((rem[shift + j] as u128 + (p as u128) - t) % (p as u128)) as u64;
            }
            fp_trim(&mut rem);
        }
        fp_trim(&mut q);
        // (r0, r1) = (r1, rem); (s0, s1) = (s1, s0 - q s1)
        let qs1 = fp_mul(&q, &s1, p);
        let mut s_new = s0.clone();
        s_new.resize(s_new.len().max(qs1.len()), 0);
        for (i, &c) in qs1.iter().enumerate() {
            s_new[i] = ((s_new[i] as u128 + (p as u128) - (c as u128) % (p as u128)) % (p as u128)) as u64;
        }
        fp_trim(&mut s_new);
        r0 = r1;
        r1 = rem;
        s0 = s1;
        s1 = s_new;
    }
    if r0.len() != 1 {
        return None;
    }
    let c_inv = fp_unit_inv(r0[0], p);
    Some(
        s0.iter()
            .map(|&c| ((c as u128) * (c_inv as u128) % (p as u128)) as u64)
            .collect(),
    )
}

/// Rabin irreducibility test for a monic polynomial of degree `a` over F_p.
fn fp_is_irreducible(f: &[u64], p: u64) -> bool {
    let a = f.len() - 1;
    if a == 0 {
        return false;
    }
    let x = vec![0u64, 1];
    // x^{p^a} == x mod f
    let q_a = BigUint::from(p).pow(a as u32);
    let xq = fp_powmod(&x, q_a, f, p);
    let mut xv = fp_rem(&x, f, p);
    fp_trim(&mut xv);
    if xq != xv {
        return false;
    }
    // for each prime divisor d of a: gcd(x^{p^{a/d}} - x, f) = 1
    let mut rem_a = a;
    let mut d = 2;
    let mut prime_divs = vec![];
    while d * d <= rem_a {
        if rem_a % d == 0 {
            prime_divs.push(d);
            while rem_a % d == 0 {
                rem_a /= d;
            }
        }
        d += 1;
    }
    if rem_a > 1 {
        prime_divs.push(rem_a);
    }
    for d in prime_divs {
        let e = BigUint::from(p).pow((a / d) as u32);
        let mut g = fp_powmod(&x, e, f, p);
        // g - x
        g.resize(g.len().max(2), 0);
        g[1] = (g[1] + p - 1) % p;
        fp_trim(&mut g);
        let gc = fp_gcd(f, &g, p);
        if gc.len() != 1 {
            return false;
        }
    }
    true
}

fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d.checked_mul(d).map(|s| s <= p).unwrap_or(false) {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

// ---------------------------------------------------------------------------

impl Ring {
    /// Construct `W_N(F_{p^a})` with the deterministic modulus polynomial.
    pub fn new(params: RingParams) -> Result<Ring> {
        let RingParams { p, a, n } = params;
        if a < 1 || n < 1 {
            return Err(Error::InvalidParams(format!("need a >= 1 and N >= 1, got a={a}, N={n}")));
        }
        if p > (1u64 << 31) {
            return Err(Error::InvalidParams(format!("p = {p} exceeds 2^31")));
        }
        if !is_prime_u64(p) {
            return Err(Error::NotPrime);
        }
        let p_big = BigUint::from(p);
        let modulus = p_big.pow(n);

        // lexicographically smallest monic irreducible lift, coefficients
        // enumerated low-degree-first
        let mut poly_fp: Option<Vec<u64>> = None;
        let total = (p as u128).checked_pow(a as u32);
        let mut counter = vec![0u64; a]; // counter[i] = c_i, c_{a-1} varies fastest
        let limit = total.unwrap_or(u128::MAX);
        let mut iter = 0u128;
        while iter < limit {
            let mut f: Vec<u64> = counter.clone();
            f.push(1);
            if fp_is_irreducible(&f, p) {
                poly_fp = Some(counter.clone());
                break;
            }
            // increment with c_{a-1} fastest so (c_0, ..., c_{a-1}) ascends
            // in lexicographic order
            let mut i = a;
            loop {
                if i == 0 {
                    iter = limit;
                    break;
                }
                i -= 1;
                counter[i] += 1;
                if counter[i] < p {
                    break;
                }
                counter[i] = 0;
            }
            iter += 1;
        }
        let poly_fp = poly_fp.ok_or_else(|| {
            Error::InvalidParams(format!("no irreducible polynomial of degree {a} found"))
        })?;
        let modulus_poly: Vec<BigUint> = poly_fp.iter().map(|&c| BigUint::from(c)).collect();

        let mut inner = RingInner {
            params,
            p_big,
            modulus,
            modulus_poly,
            frobenius_image: RingElem { coeffs: vec![BigUint::zero(); a] },
            frob_pows: vec![],
        };

        // Hensel-lift the Frobenius: the root of the modulus congruent to
        // x^p mod p, found by Newton iteration at full precision.
        let frob = if a == 1 {
            RingElem { coeffs: vec![BigUint::zero()] }
        } else {
            let x = RingElem {
                coeffs: (0..a).map(|i| if i == 1 { BigUint::one() } else { BigUint::zero() }).collect(),
            };
            let mut r = inner.pow_u64(&x, p);
            let iterations = 64 - u64::from(n).leading_zeros() + 2;
            for _ in 0..iterations {
                let fr = inner.eval_modulus(&r);
                if fr.coeffs.iter().all(|c| c.is_zero()) {
                    break;
                }
                let dfr = inner.eval_modulus_derivative(&r);
                let dinv = inner.inv(&dfr)?;
                let delta = inner.mul(&fr, &dinv);
                r = inner.sub(&r, &delta);
            }
            let check = inner.eval_modulus(&r);
            if !check.coeffs.iter().all(|c| c.is_zero()) {
                return Err(Error::InvalidParams("Hensel lift of Frobenius failed".into()));
            }
            r
        };
        inner.frobenius_image = frob;

        // substitution matrices for sigma^t, t = 0..a
        let mut pows = Vec::with_capacity(a);
        let mut sigma = vec![BigUint::zero(); a * a]; // column-major
        {
            let mut xj = inner.one();
            for j in 0..a {
                for i in 0..a {
                    sigma[j * a + i] = xj.coeffs[i].clone();
                }
                xj = inner.mul(&xj, &inner.frobenius_image.clone());
            }
        }
        let mut cur = {
            // identity
            let mut id = vec![BigUint::zero(); a * a];
            for i in 0..a {
                id[i * a + i] = BigUint::one();
            }
            id
        };
        for _ in 0..a {
            pows.push(cur.clone());
            cur = inner.scalar_matmul(&sigma, &cur);
        }
        // sigma^a must be the identity
        if cur != pows[0] {
            return Err(Error::InvalidParams("sigma^a is not the identity".into()));
        }
        inner.frob_pows = pows;

        Ok(Ring(Arc::new(inner)))
    }

    pub fn params(&self) -> RingParams {
        self.0.params
    }

    pub fn p(&self) -> u64 {
        self.0.params.p
    }

    pub fn p_big(&self) -> &BigUint {
        &self.0.p_big
    }

    pub fn degree(&self) -> usize {
        self.0.params.a
    }

    pub fn precision(&self) -> u32 {
        self.0.params.n
    }

    /// p^N
    pub fn modulus(&self) -> &BigUint {
        &self.0.modulus
    }

    pub fn modulus_poly(&self) -> &[BigUint] {
        &self.0.modulus_poly
    }

    pub fn frobenius_image(&self) -> &RingElem {
        &self.0.frobenius_image
    }

    /// The coefficient ring `Z/p^N` as a ring of its own (`a = 1`).
    pub fn scalar_ring(&self) -> Ring {
        if self.degree() == 1 {
            self.clone()
        } else {
            Ring::new(RingParams { p: self.p(), a: 1, n: self.precision() })
                .expect("scalar ring construction cannot fail")
        }
    }

    /// Same `p` and `a` at a smaller precision.
    pub fn with_precision(&self, n: u32) -> Result<Ring> {
        Ring::new(RingParams { p: self.p(), a: self.degree(), n })
    }

    pub fn zero(&self) -> RingElem {
        self.0.zero()
    }

    pub fn one(&self) -> RingElem {
        self.0.one()
    }

    /// The polynomial generator x (zero when a = 1, where the ring is Z/p^N).
    pub fn generator(&self) -> RingElem {
        let a = self.degree();
        RingElem {
            coeffs: (0..a).map(|i| if i == 1 { BigUint::one() } else { BigUint::zero() }).collect(),
        }
    }

    pub fn from_u64(&self, v: u64) -> RingElem {
        let mut coeffs = vec![BigUint::zero(); self.degree()];
        coeffs[0] = BigUint::from(v) % self.modulus();
        RingElem { coeffs }
    }

    pub fn from_residues(&self, coeffs: Vec<BigUint>) -> Result<RingElem> {
        if coeffs.len() != self.degree() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                self.degree(),
                coeffs.len()
            )));
        }
        Ok(RingElem { coeffs: coeffs.into_iter().map(|c| c % self.modulus()).collect() })
    }

    pub fn is_zero(&self, x: &RingElem) -> bool {
        x.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, x: &RingElem, y: &RingElem) -> RingElem {
        self.0.add(x, y)
    }

    pub fn sub(&self, x: &RingElem, y: &RingElem) -> RingElem {
        self.0.sub(x, y)
    }

    pub fn neg(&self, x: &RingElem) -> RingElem {
        self.0.sub(&self.0.zero(), x)
    }

    pub fn mul(&self, x: &RingElem, y: &RingElem) -> RingElem {
        self.0.mul(x, y)
    }

    pub fn pow_u64(&self, x: &RingElem, e: u64) -> RingElem {
        self.0.pow_u64(x, e)
    }

    /// Two-sided inverse of a unit; `NonUnit` when the valuation is positive.
    pub fn inv(&self, x: &RingElem) -> Result<RingElem> {
        self.0.inv(x)
    }

    /// σ^t(x); t may be negative, σ has order a.
    pub fn frobenius(&self, x: &RingElem, t: i64) -> RingElem {
        let a = self.degree() as i64;
        let t = t.rem_euclid(a) as usize;
        if t == 0 {
            return x.clone();
        }
        let m = &self.0.frob_pows[t];
        self.0.scalar_matvec(m, &x.coeffs)
    }

    /// Largest v < N with x in p^v·R; `Infinite` when x ≡ 0 mod p^N.
    pub fn valuation(&self, x: &RingElem) -> Valuation {
        let mut best: Option<u32> = None;
        for c in &x.coeffs {
            match self.scalar_valuation(c) {
                Valuation::Infinite => {}
                Valuation::Finite(v) => {
                    best = Some(best.map_or(v, |b| b.min(v)));
                    if v == 0 {
                        return Valuation::Finite(0);
                    }
                }
            }
        }
        best.map_or(Valuation::Infinite, Valuation::Finite)
    }

    /// Valuation of a single residue in `[0, p^N)`.
    pub fn scalar_valuation(&self, c: &BigUint) -> Valuation {
        if c.is_zero() {
            return Valuation::Infinite;
        }
        let mut v = 0u32;
        let mut cur = c.clone();
        while v < self.precision() {
            let (q, r) = num_integer::Integer::div_rem(&cur, self.p_big());
            if !r.is_zero() {
                break;
            }
            cur = q;
            v += 1;
        }
        if v >= self.precision() {
            Valuation::Infinite
        } else {
            Valuation::Finite(v)
        }
    }

    pub fn mul_pow_p(&self, x: &RingElem, k: u32) -> RingElem {
        let pk = self.p_big().pow(k);
        RingElem { coeffs: x.coeffs.iter().map(|c| (c * &pk) % self.modulus()).collect() }
    }

    /// Exact division by p^k, taking the canonical quotient with
    /// coordinates in `[0, p^{N-k})`. Returns None if some coordinate is
    /// not divisible.
    pub fn div_pow_p_exact(&self, x: &RingElem, k: u32) -> Option<RingElem> {
        if k == 0 {
            return Some(x.clone());
        }
        let pk = self.p_big().pow(k);
        let mut coeffs = Vec::with_capacity(x.coeffs.len());
        for c in &x.coeffs {
            let (q, r) = num_integer::Integer::div_rem(c, &pk);
            if !r.is_zero() {
                return None;
            }
            coeffs.push(q);
        }
        Some(RingElem { coeffs })
    }

    /// Canonical residue of x mod p^k (coordinates reduced into `[0, p^k)`)
    /// together with the exact quotient `(x - r)/p^k`.
    pub fn split_mod_pow_p(&self, x: &RingElem, k: u32) -> (RingElem, RingElem) {
        let pk = self.p_big().pow(k.min(self.precision()));
        let mut rem = Vec::with_capacity(x.coeffs.len());
        let mut quo = Vec::with_capacity(x.coeffs.len());
        for c in &x.coeffs {
            let (q, r) = num_integer::Integer::div_rem(c, &pk);
            rem.push(r);
            quo.push(q);
        }
        (RingElem { coeffs: rem }, RingElem { coeffs: quo })
    }

    /// Residue-field coordinates (mod p) of x, as u64s.
    pub fn reduce_mod_p(&self, x: &RingElem) -> Vec<u64> {
        x.coeffs
            .iter()
            .map(|c| {
                let r = c % self.p_big();
                r.to_u64_digits().first().copied().unwrap_or(0)
            })
            .collect()
    }

    /// Lift residue-field coordinates with entries in `[0, p)`.
    pub fn lift_residues(&self, res: &[u64]) -> RingElem {
        RingElem { coeffs: res.iter().map(|&c| BigUint::from(c % self.p())).collect() }
    }

    /// Teichmüller (multiplicative) lift: the unique root of `x^q = x`
    /// reducing to the given residue, q = p^a.
    pub fn teichmuller(&self, res: &[u64]) -> RingElem {
        let q = BigUint::from(self.p()).pow(self.degree() as u32);
        let mut u = self.lift_residues(res);
        for _ in 0..self.precision() {
            u = self.pow_big(&u, &q);
        }
        u
    }

    pub fn pow_big(&self, x: &RingElem, e: &BigUint) -> RingElem {
        let mut result = self.one();
        let mut base = x.clone();
        let mut e = e.clone();
        let two = BigUint::from(2u32);
        while !e.is_zero() {
            if (&e % &two).is_one() {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    /// Map an element into a ring with the same p, a and smaller or equal
    /// precision, truncating coordinates.
    pub fn truncate_elem(&self, target: &Ring, x: &RingElem) -> Result<RingElem> {
        if target.p() != self.p() || target.degree() != self.degree() || target.precision() > self.precision() {
            return Err(Error::RingMismatch);
        }
        Ok(RingElem { coeffs: x.coeffs.iter().map(|c| c % target.modulus()).collect() })
    }

    // ---- residue field F_q = F_{p^a} helpers (coordinates mod p) ----

    pub fn fq_is_zero(&self, x: &[u64]) -> bool {
        x.iter().all(|&c| c == 0)
    }

    pub fn fq_add(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).map(|(&a, &b)| (a + b) % self.p()).collect()
    }

    pub fn fq_sub(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        x.iter().zip(y).map(|(&a, &b)| (a + self.p() - b % self.p()) % self.p()).collect()
    }

    pub fn fq_mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let p = self.p();
        let modp: Vec<u64> = self
            .0
            .modulus_poly
            .iter()
            .map(|c| (c % self.p_big()).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        let mut f = modp;
        f.push(1);
        let prod = fp_mul(x, y, p);
        let mut r = fp_rem(&prod, &f, p);
        r.resize(self.degree(), 0);
        r
    }

    pub fn fq_inv(&self, x: &[u64]) -> Option<Vec<u64>> {
        let p = self.p();
        let modp: Vec<u64> = self
            .0
            .modulus_poly
            .iter()
            .map(|c| (c % self.p_big()).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        let mut f = modp;
        f.push(1);
        let mut xv = x.to_vec();
        fp_trim(&mut xv);
        if xv.is_empty() {
            return None;
        }
        let mut r = fp_invmod(&xv, &f, p)?;
        r.resize(self.degree(), 0);
        Some(r)
    }

    // ---- serialization ----

    pub fn to_json(&self) -> Value {
        let mut modulus: Vec<String> = self.0.modulus_poly.iter().map(|c| c.to_string()).collect();
        modulus.push("1".to_string());
        json!({
            "p": self.p(),
            "a": self.degree(),
            "N": self.precision(),
            "modulus": modulus,
        })
    }

    pub fn from_json(v: &Value) -> Result<Ring> {
        let p = v
            .get("p")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("ring: missing p".into()))?;
        let a = v
            .get("a")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("ring: missing a".into()))? as usize;
        let n = v
            .get("N")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("ring: missing N".into()))? as u32;
        let ring = Ring::new(RingParams { p, a, n })?;
        if let Some(m) = v.get("modulus").and_then(Value::as_array) {
            let expect: Vec<String> =
                ring.0.modulus_poly.iter().map(|c| c.to_string()).chain(["1".to_string()]).collect();
            let given: Vec<String> =
                m.iter().map(|x| x.as_str().unwrap_or_default().to_string()).collect();
            if expect != given {
                return Err(Error::Parse("ring: modulus does not match the canonical choice".into()));
            }
        }
        Ok(ring)
    }

    pub fn elem_to_json(&self, x: &RingElem) -> Value {
        Value::Array(x.coeffs.iter().map(|c| Value::String(c.to_string())).collect())
    }

    pub fn elem_from_json(&self, v: &Value) -> Result<RingElem> {
        let arr = v.as_array().ok_or_else(|| Error::Parse("element: expected array".into()))?;
        if arr.len() != self.degree() {
            return Err(Error::Parse(format!(
                "element: expected {} coordinates, got {}",
                self.degree(),
                arr.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(arr.len());
        for c in arr {
            let s = c.as_str().ok_or_else(|| Error::Parse("element: coordinates are decimal strings".into()))?;
            let b = s.parse::<BigUint>().map_err(|e| Error::Parse(format!("element: {e}")))?;
            coeffs.push(b % self.modulus());
        }
        Ok(RingElem { coeffs })
    }
}

impl RingInner {
    fn a(&self) -> usize {
        self.params.a
    }

    fn zero(&self) -> RingElem {
        RingElem { coeffs: vec![BigUint::zero(); self.a()] }
    }

    fn one(&self) -> RingElem {
        let mut coeffs = vec![BigUint::zero(); self.a()];
        coeffs[0] = BigUint::one() % &self.modulus;
        RingElem { coeffs }
    }

    fn add(&self, x: &RingElem, y: &RingElem) -> RingElem {
        RingElem {
            coeffs: x
                .coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(a, b)| (a + b) % &self.modulus)
                .collect(),
        }
    }

    fn sub(&self, x: &RingElem, y: &RingElem) -> RingElem {
        RingElem {
            coeffs: x
                .coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(a, b)| (a + &self.modulus - (b % &self.modulus)) % &self.modulus)
                .collect(),
        }
    }

    fn mul(&self, x: &RingElem, y: &RingElem) -> RingElem {
        let a = self.a();
        if a == 1 {
            return RingElem { coeffs: vec![(&x.coeffs[0] * &y.coeffs[0]) % &self.modulus] };
        }
        let mut prod = vec![BigUint::zero(); 2 * a - 1];
        for i in 0..a {
            if x.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..a {
                if y.coeffs[j].is_zero() {
                    continue;
                }
                prod[i + j] = (&prod[i + j] + &x.coeffs[i] * &y.coeffs[j]) % &self.modulus;
            }
        }
        // reduce by the monic modulus polynomial
        for k in (a..2 * a - 1).rev() {
            if prod[k].is_zero() {
                continue;
            }
            let lead = prod[k].clone();
            prod[k] = BigUint::zero();
            for j in 0..a {
                if self.modulus_poly[j].is_zero() {
                    continue;
                }
                let t = (&lead * &self.modulus_poly[j]) % &self.modulus;
                let idx = k - a + j;
                prod[idx] = (&prod[idx] + &self.modulus - t) % &self.modulus;
            }
        }
        prod.truncate(a);
        RingElem { coeffs: prod }
    }

    fn pow_u64(&self, x: &RingElem, mut e: u64) -> RingElem {
        let mut result = self.one();
        let mut base = x.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        result
    }

    fn inv(&self, x: &RingElem) -> Result<RingElem> {
        let p = self.params.p;
        // unit test: reduction mod p must be nonzero
        let xp: Vec<u64> = x
            .coeffs
            .iter()
            .map(|c| (c % &self.p_big).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        if xp.iter().all(|&c| c == 0) {
            return Err(Error::NonUnit);
        }
        // mod-p inverse via extended Euclid in F_p[x]
        let modp: Vec<u64> = self
            .modulus_poly
            .iter()
            .map(|c| (c % &self.p_big).to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        let mut f = modp;
        f.push(1);
        let inv_p = fp_invmod(&xp, &f, p).ok_or(Error::NonUnit)?;
        let mut v = self.zero();
        for (i, &c) in inv_p.iter().enumerate() {
            if i < v.coeffs.len() {
                v.coeffs[i] = BigUint::from(c);
            }
        }
        // Newton lift: v <- v (2 - x v), doubling precision per step
        let two = self.add(&self.one(), &self.one());
        let iterations = 64 - u64::from(self.params.n).leading_zeros() + 1;
        for _ in 0..iterations {
            let xv = self.mul(x, &v);
            let corr = self.sub(&two, &xv);
            v = self.mul(&v, &corr);
        }
        debug_assert!(self.mul(x, &v) == self.one());
        Ok(v)
    }

    fn eval_modulus(&self, r: &RingElem) -> RingElem {
        // f(r) = r^a + sum c_j r^j
        let a = self.a();
        let mut acc = self.zero();
        let mut pow = self.one();
        for j in 0..a {
            if !self.modulus_poly[j].is_zero() {
                let cj = RingElem {
                    coeffs: {
                        let mut v = vec![BigUint::zero(); a];
                        v[0] = self.modulus_poly[j].clone();
                        v
                    },
                };
                acc = self.add(&acc, &self.mul(&cj, &pow));
            }
            pow = self.mul(&pow, r);
        }
        self.add(&acc, &pow)
    }

    fn eval_modulus_derivative(&self, r: &RingElem) -> RingElem {
        // f'(r) = a r^{a-1} + sum j c_j r^{j-1}
        let a = self.a();
        let mut acc = self.zero();
        let mut pow = self.one();
        for j in 1..a {
            if !self.modulus_poly[j].is_zero() {
                let cj = RingElem {
                    coeffs: {
                        let mut v = vec![BigUint::zero(); a];
                        v[0] = (BigUint::from(j as u64) * &self.modulus_poly[j]) % &self.modulus;
                        v
                    },
                };
                acc = self.add(&acc, &self.mul(&cj, &pow));
            }
            pow = self.mul(&pow, r);
        }
        let lead = RingElem {
            coeffs: {
                let mut v = vec![BigUint::zero(); a];
                v[0] = BigUint::from(a as u64) % &self.modulus;
                v
            },
        };
        self.add(&acc, &self.mul(&lead, &pow))
    }

    /// column-major a×a times a-vector, mod p^N
    fn scalar_matvec(&self, m: &[BigUint], v: &[BigUint]) -> RingElem {
        let a = self.a();
        let mut out = vec![BigUint::zero(); a];
        for j in 0..a {
            if v[j].is_zero() {
                continue;
            }
            for i in 0..a {
                if m[j * a + i].is_zero() {
                    continue;
                }
                out[i] = (&out[i] + &m[j * a + i] * &v[j]) % &self.modulus;
            }
        }
        RingElem { coeffs: out }
    }

    /// column-major a×a matrix product, mod p^N
    fn scalar_matmul(&self, m1: &[BigUint], m2: &[BigUint]) -> Vec<BigUint> {
        let a = self.a();
        let mut out = vec![BigUint::zero(); a * a];
        for j in 0..a {
            let col = self.scalar_matvec(m1, &m2[j * a..(j + 1) * a]);
            out[j * a..(j + 1) * a].clone_from_slice(&col.coeffs);
        }
        out
    }
}

/// The canonical embedding `W_N(F_{p^g}) ↪ W_N(F_{p^a})` for g | a: the
/// small generator is sent to the Hensel lift of the lexicographically
/// smallest residue-field root of the small modulus polynomial.
pub struct Embedding {
    small: Ring,
    big: Ring,
    /// image of the small ring's generator
    theta: RingElem,
    theta_pows: Vec<RingElem>,
}

impl Embedding {
    pub fn new(small: &Ring, big: &Ring) -> Result<Embedding> {
        if small.p() != big.p() || small.precision() != big.precision() {
            return Err(Error::NotAnExtension("p or N differ".into()));
        }
        let g = small.degree();
        let a = big.degree();
        if a % g != 0 {
            return Err(Error::NotAnExtension(format!("{g} does not divide {a}")));
        }
        // residue-field root search, lexicographically smallest coordinates
        let p = big.p();
        let q = (p as u128).checked_pow(a as u32).unwrap_or(u128::MAX);
        if q > 1_000_000 {
            return Err(Error::InvalidParams("residue field too large for embedding search".into()));
        }
        let small_poly_fp: Vec<u64> = {
            let mut v: Vec<u64> = small
                .modulus_poly()
                .iter()
                .map(|c| (c % small.p_big()).to_u64_digits().first().copied().unwrap_or(0))
                .collect();
            v.push(1);
            v
        };
        let mut root: Option<Vec<u64>> = None;
        let mut cand = vec![0u64; a];
        'outer: loop {
            // evaluate small modulus at cand over F_q
            let mut acc = vec![0u64; a];
            let mut pow = {
                let mut o = vec![0u64; a];
                o[0] = 1;
                o
            };
            for &c in &small_poly_fp {
                if c != 0 {
                    let mut term = pow.clone();
                    for t in term.iter_mut() {
                        *t = ((*t as u128) * (c as u128) % (p as u128)) as u64;
                    }
                    acc = big.fq_add(&acc, &term);
                }
                pow = big.fq_mul(&pow, &cand);
            }
            if big.fq_is_zero(&acc) {
                root = Some(cand.clone());
                break 'outer;
            }
            // increment, last coordinate fastest
            let mut i = a;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                cand[i] += 1;
                if cand[i] < p {
                    break;
                }
                cand[i] = 0;
            }
        }
        let root = root.ok_or_else(|| Error::NotAnExtension("no residue-field root found".into()))?;

        // Hensel lift to precision N inside the big ring
        let mut theta = big.lift_residues(&root);
        let n = big.precision();
        let iterations = 64 - u64::from(n).leading_zeros() + 2;
        let eval = |t: &RingElem| -> RingElem {
            let mut acc = big.zero();
            let mut pow = big.one();
            for c in small.modulus_poly() {
                if !c.is_zero() {
                    let mut coeffs = vec![BigUint::zero(); a];
                    coeffs[0] = c.clone();
                    let cj = big.from_residues(coeffs).unwrap();
                    acc = big.add(&acc, &big.mul(&cj, &pow));
                }
                pow = big.mul(&pow, t);
            }
            big.add(&acc, &pow)
        };
        let eval_d = |t: &RingElem| -> RingElem {
            let mut acc = big.zero();
            let mut pow = big.one();
            for (j, c) in small.modulus_poly().iter().enumerate() {
                if j >= 1 && !c.is_zero() {
                    let mut coeffs = vec![BigUint::zero(); a];
                    coeffs[0] = (BigUint::from(j as u64) * c) % big.modulus();
                    let cj = big.from_residues(coeffs).unwrap();
                    acc = big.add(&acc, &big.mul(&cj, &pow));
                }
                if j >= 1 {
                    pow = big.mul(&pow, t);
                }
            }
            let mut coeffs = vec![BigUint::zero(); a];
            coeffs[0] = BigUint::from(g as u64) % big.modulus();
            let lead = big.from_residues(coeffs).unwrap();
            // pow currently holds t^{g-1}
            big.add(&acc, &big.mul(&lead, &pow))
        };
        for _ in 0..iterations {
            let ft = eval(&theta);
            if big.is_zero(&ft) {
                break;
            }
            let dft = eval_d(&theta);
            let dinv = big.inv(&dft)?;
            theta = big.sub(&theta, &big.mul(&ft, &dinv));
        }
        if !big.is_zero(&eval(&theta)) {
            return Err(Error::NotAnExtension("Hensel lift of the subring generator failed".into()));
        }

        let mut theta_pows = Vec::with_capacity(g);
        let mut cur = big.one();
        for _ in 0..g {
            theta_pows.push(cur.clone());
            cur = big.mul(&cur, &theta);
        }
        Ok(Embedding { small: small.clone(), big: big.clone(), theta, theta_pows })
    }

    pub fn small(&self) -> &Ring {
        &self.small
    }

    pub fn big(&self) -> &Ring {
        &self.big
    }

    pub fn theta(&self) -> &RingElem {
        &self.theta
    }

    pub fn theta_pows(&self) -> &[RingElem] {
        &self.theta_pows
    }

    /// Image of a small-ring element under the embedding.
    pub fn map(&self, x: &RingElem) -> RingElem {
        let mut acc = self.big.zero();
        for (j, c) in x.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mut coeffs = vec![BigUint::zero(); self.big.degree()];
            coeffs[0] = c.clone();
            let cj = self.big.from_residues(coeffs).unwrap();
            acc = self.big.add(&acc, &self.big.mul(&cj, &self.theta_pows[j]));
        }
        acc
    }
}
