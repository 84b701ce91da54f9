//! Newton polygons of Dieudonné modules in the covariant slope
//! convention: the slope data is read from V, so G_{m,n} is isoclinic of
//! slope m/(m+n).
//!
//! The polygon is computed from the division-free (Berkowitz)
//! characteristic polynomial of the Z/p^N-linearization of V: Z/p^N has
//! zero divisors, so elimination with division is unsound. Coefficient
//! valuations at or above the working precision are unknowable; they are
//! treated as +∞ for hull purposes, and any position where that could
//! still lower the hull raises `InsufficientPrecision`.

use num_rational::Ratio;
use serde_json::{json, Value};

use crate::dieudonne::DModule;
use crate::error::{Error, Result};
use crate::padic::Valuation;
use crate::semilinear::Mat;

/// Sorted (slope, multiplicity) pairs, slopes ascending in [0, 1],
/// multiplicities summing to the height.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NewtonPolygon {
    points: Vec<(Ratio<u64>, u64)>,
}

impl NewtonPolygon {
    pub fn from_points(mut points: Vec<(Ratio<u64>, u64)>) -> NewtonPolygon {
        points.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Ratio<u64>, u64)> = vec![];
        for (s, m) in points {
            if m == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == s => last.1 += m,
                _ => merged.push((s, m)),
            }
        }
        NewtonPolygon { points: merged }
    }

    pub fn points(&self) -> &[(Ratio<u64>, u64)] {
        &self.points
    }

    pub fn height(&self) -> u64 {
        self.points.iter().map(|&(_, m)| m).sum()
    }

    /// Sorted merge with multiplicities of equal slopes added.
    pub fn merge(&self, other: &NewtonPolygon) -> NewtonPolygon {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        NewtonPolygon::from_points(pts)
    }

    /// Slopes reflected λ ↦ 1−λ (the Serre-dual polygon).
    pub fn reflect(&self) -> NewtonPolygon {
        let pts = self
            .points
            .iter()
            .map(|&(s, m)| (Ratio::from_integer(1u64) - s, m))
            .collect();
        NewtonPolygon::from_points(pts)
    }

    /// Slopes in descending order (the slope-filtration order).
    pub fn slopes_descending(&self) -> Vec<(Ratio<u64>, u64)> {
        let mut pts = self.points.clone();
        pts.reverse();
        pts
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.points
                .iter()
                .map(|(s, m)| json!({ "slope": format!("{}/{}", s.numer(), s.denom()), "mult": m }))
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<NewtonPolygon> {
        let arr = v.as_array().ok_or_else(|| Error::Parse("polygon: expected array".into()))?;
        let mut pts = vec![];
        for e in arr {
            let s = e
                .get("slope")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("polygon: missing slope".into()))?;
            let m = e
                .get("mult")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Parse("polygon: missing mult".into()))?;
            let (num, den) = match s.split_once('/') {
                Some((a, b)) => (
                    a.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?,
                    b.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?,
                ),
                None => (s.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?, 1),
            };
            pts.push((Ratio::new(num, den), m));
        }
        Ok(NewtonPolygon::from_points(pts))
    }
}

impl std::fmt::Display for NewtonPolygon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> =
            self.points.iter().map(|(s, m)| format!("({}/{}, {})", s.numer(), s.denom(), m)).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Characteristic polynomial `det(xI - A)` by the Samuelson–Berkowitz
/// recurrence, coefficients ascending (constant term first, leading 1
/// last). Division-free, valid over any commutative ring.
pub fn char_poly(m: &Mat) -> Vec<crate::padic::RingElem> {
    let ring = m.ring().clone();
    let n = m.rows();
    assert_eq!(n, m.cols(), "characteristic polynomial of a square matrix");
    // descending coefficient vectors, p_0 = [1]
    let mut poly = vec![ring.one()];
    for r in 1..=n {
        let a = m.at(r - 1, r - 1).clone();
        // s_0 = a, s_k = R · A_{r-1}^{k-1} · C
        let mut s = Vec::with_capacity(r);
        s.push(a);
        if r > 1 {
            let mut w: Vec<_> = (0..r - 1).map(|i| m.at(i, r - 1).clone()).collect();
            for _ in 1..r {
                // s_k = R · w
                let mut acc = ring.zero();
                for j in 0..r - 1 {
                    acc = ring.add(&acc, &ring.mul(m.at(r - 1, j), &w[j]));
                }
                s.push(acc);
                // w <- A_{r-1} w
                let mut nw = vec![ring.zero(); r - 1];
                for i in 0..r - 1 {
                    for j in 0..r - 1 {
                        nw[i] = ring.add(&nw[i], &ring.mul(m.at(i, j), &w[j]));
                    }
                }
                w = nw;
            }
        }
        // c = [1, -s_0, ..., -s_{r-1}]; p_r = first r+1 terms of conv(c, p_{r-1})
        let mut c = Vec::with_capacity(r + 1);
        c.push(ring.one());
        for sk in &s {
            c.push(ring.neg(sk));
        }
        let mut next = vec![ring.zero(); r + 1];
        for (i, ci) in c.iter().enumerate() {
            for (j, pj) in poly.iter().enumerate() {
                if i + j <= r {
                    next[i + j] = ring.add(&next[i + j], &ring.mul(ci, pj));
                }
            }
        }
        poly = next;
    }
    poly.reverse();
    poly
}

/// Lower convex hull value at abscissa `x` of the hull through `verts`
/// (ascending abscissae), as an exact rational.
fn hull_value(verts: &[(u64, u64)], x: u64) -> Option<Ratio<u64>> {
    for w in verts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x0 <= x && x <= x1 {
            // interpolate: y0 + (x - x0) (y1 - y0)/(x1 - x0), with y1 <= y0
            let t = Ratio::new(x - x0, x1 - x0);
            let y0r = Ratio::from_integer(y0);
            let y1r = Ratio::from_integer(y1);
            return Some(if y1 >= y0 { y0r + t * (y1r - y0r) } else { y0r - t * (y0r - y1r) });
        }
    }
    None
}

/// Newton polygon of the V-operator of a module: lower convex hull of
/// `(i, val c_i)` for the linearized characteristic polynomial, slopes
/// divided out by the field degree.
pub fn newton_polygon(module: &DModule) -> Result<NewtonPolygon> {
    let ring = module.ring();
    let n_eff = ring.precision();
    if n_eff < 2 {
        return Err(Error::InsufficientPrecision(format!(
            "polygon needs effective precision >= 2, have {n_eff}"
        )));
    }
    let a = ring.degree() as u64;
    let lin = module.v().linearize();
    let coeffs = char_poly(&lin);
    let scalar = ring.scalar_ring();
    let deg = coeffs.len() - 1; // = rank · a
    let vals: Vec<Valuation> = coeffs.iter().map(|c| scalar.valuation(c)).collect();
    if deg == 0 {
        return Ok(NewtonPolygon::from_points(vec![]));
    }
    if vals[0] == Valuation::Infinite {
        return Err(Error::InsufficientPrecision(
            "constant coefficient of the characteristic polynomial vanishes mod p^N".into(),
        ));
    }
    // lower convex hull over finite points (monotone chain, left to right)
    let finite: Vec<(u64, u64)> = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.finite().map(|f| (i as u64, f as u64)))
        .collect();
    let mut hull: Vec<(u64, u64)> = vec![];
    for &(x, y) in &finite {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 1];
            let (x0, y0) = hull[hull.len() - 2];
            // remove the middle point if it lies on or above the segment
            // (x0,y0)-(x,y): cross product test with exact integers
            let lhs = (y1 as i128 - y0 as i128) * (x as i128 - x0 as i128);
            let rhs = (y as i128 - y0 as i128) * (x1 as i128 - x0 as i128);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    // unknowable coefficients may only hide strictly below the hull
    for (i, v) in vals.iter().enumerate() {
        if *v == Valuation::Infinite {
            if let Some(hv) = hull_value(&hull, i as u64) {
                if hv > Ratio::from_integer(n_eff as u64) {
                    return Err(Error::InsufficientPrecision(format!(
                        "coefficient {i} vanishes mod p^{n_eff} but the hull sits above that"
                    )));
                }
            }
        }
    }
    // hull vertices -> slopes; leftmost segments are steepest, so the
    // collected slopes come out descending
    let mut pts: Vec<(Ratio<u64>, u64)> = vec![];
    for w in hull.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if y1 > y0 {
            return Err(Error::InvalidParams("newton polygon with negative slope".into()));
        }
        let slope = Ratio::new(y0 - y1, x1 - x0);
        if slope > Ratio::from_integer(1) {
            return Err(Error::InvalidParams("newton slope above 1".into()));
        }
        let mult = x1 - x0;
        if mult % a != 0 {
            return Err(Error::InvalidParams(
                "slope multiplicity not divisible by the field degree".into(),
            ));
        }
        pts.push((slope, mult / a));
    }
    Ok(NewtonPolygon::from_points(pts))
}

/// The unique slope when the polygon has a single point.
pub fn is_isoclinic(module: &DModule) -> Result<Option<Ratio<u64>>> {
    let poly = newton_polygon(module)?;
    Ok(if poly.points().len() == 1 { Some(poly.points()[0].0) } else { None })
}

/// True iff all modules share the same polygon; on failure returns the
/// first offending index.
pub fn is_constant_polygon(modules: &[DModule]) -> Result<(bool, Option<usize>)> {
    assert!(!modules.is_empty(), "is_constant_polygon needs a nonempty list");
    let first = newton_polygon(&modules[0])?;
    for (i, m) in modules.iter().enumerate().skip(1) {
        if newton_polygon(m)? != first {
            return Ok((false, Some(i)));
        }
    }
    Ok((true, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dieudonne::DModule;
    use crate::padic::{Ring, RingParams};
    use crate::semilinear::smith_normal_form;
    use num_bigint::BigInt;
    use num_traits::{One, Signed, Zero};

    fn ring(p: u64, a: usize, n: u32) -> Ring {
        Ring::new(RingParams { p, a, n }).unwrap()
    }

    /// Cofactor-expansion characteristic polynomial over Z, reduced mod
    /// p^N afterwards: the independent oracle for the Berkowitz routine.
    fn char_poly_oracle(entries: &[i64], n: usize, ring: &Ring) -> Vec<crate::padic::RingElem> {
        // polynomial entries of xI - A over Z, each a vec of BigInt coeffs
        type Poly = Vec<BigInt>;
        fn pmul(a: &Poly, b: &Poly) -> Poly {
            let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        fn padd(a: &Poly, b: &Poly) -> Poly {
            let mut out = vec![BigInt::zero(); a.len().max(b.len())];
            for (i, x) in a.iter().enumerate() {
                out[i] += x;
            }
            for (i, y) in b.iter().enumerate() {
                out[i] += y;
            }
            out
        }
        fn det(m: &Vec<Vec<Poly>>) -> Poly {
            let n = m.len();
            if n == 1 {
                return m[0][0].clone();
            }
            let mut acc: Poly = vec![BigInt::zero()];
            for k in 0..n {
                let minor: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, p)| p.clone()).collect()
                    })
                    .collect();
                let mut term = pmul(&m[0][k], &det(&minor));
                if k % 2 == 1 {
                    for c in term.iter_mut() {
                        *c = -c.clone();
                    }
                }
                acc = padd(&acc, &term);
            }
            acc
        }
        let m: Vec<Vec<Poly>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let a_ij = BigInt::from(entries[i * n + j]);
                        if i == j {
                            vec![-a_ij, BigInt::one()]
                        } else {
                            vec![-a_ij]
                        }
                    })
                    .collect()
            })
            .collect();
        let d = det(&m);
        let modulus = BigInt::from(ring.modulus().clone());
        (0..=n)
            .map(|i| {
                let c = d.get(i).cloned().unwrap_or_else(BigInt::zero);
                let mut r = c % &modulus;
                if r.is_negative() {
                    r += &modulus;
                }
                ring.from_residues(vec![r.to_biguint().unwrap()]).unwrap()
            })
            .collect()
    }

    #[test]
    fn berkowitz_matches_cofactor_oracle() {
        let r = ring(3, 1, 4);
        let cases: Vec<(usize, Vec<i64>)> = vec![
            (1, vec![5]),
            (2, vec![0, 3, 1, 0]),
            (2, vec![2, 7, 1, 4]),
            (3, vec![1, 2, 0, 3, 0, 9, 4, 5, 6]),
            (4, vec![0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 3, 0, 0, 0]),
        ];
        for (n, entries) in cases {
            let m = Mat::from_fn(&r, n, n, |i, j| r.from_u64(entries[i * n + j] as u64));
            let ours = char_poly(&m);
            let oracle = char_poly_oracle(&entries, n, &r);
            assert_eq!(ours, oracle, "size {n}");
        }
    }

    #[test]
    fn g11_polygon_is_half_half() {
        let r = ring(2, 1, 3);
        let g = DModule::make_gmn(1, 1, &r).unwrap();
        let poly = newton_polygon(&g).unwrap();
        assert_eq!(poly.points(), &[(Ratio::new(1, 2), 2)]);
        assert_eq!(is_isoclinic(&g).unwrap(), Some(Ratio::new(1, 2)));
    }

    #[test]
    fn gmn_slope_table_over_extensions() {
        // the polygon is a geometric invariant: same over F_p and F_{p^2}
        for &(m, n) in &[(1u32, 1u32), (1, 2), (2, 1), (0, 1), (1, 0), (2, 3)] {
            let r = ring(2, 1, 6);
            let g = DModule::make_gmn(m, n, &r).unwrap();
            let expect = vec![(Ratio::new(m as u64, (m + n) as u64), (m + n) as u64)];
            assert_eq!(newton_polygon(&g).unwrap().points(), &expect[..], "G_{{{m},{n}}}/F_p");
            let g2 = g.base_change(2).unwrap();
            assert_eq!(newton_polygon(&g2).unwrap().points(), &expect[..], "G_{{{m},{n}}}/F_p^2");
        }
    }

    #[test]
    fn sum_polygon_merges() {
        let r = ring(2, 1, 6);
        let a = DModule::make_gmn(2, 1, &r).unwrap();
        let b = DModule::make_gmn(1, 2, &r).unwrap();
        let s = DModule::direct_sum(&a, &b).unwrap();
        let poly = newton_polygon(&s).unwrap();
        assert_eq!(poly.points(), &[(Ratio::new(1, 3), 3), (Ratio::new(2, 3), 3)]);
        assert_eq!(is_isoclinic(&s).unwrap(), None);
    }

    #[test]
    fn insufficient_precision_at_n1() {
        let r = ring(2, 1, 1);
        let g = DModule::make_gmn(1, 1, &r).unwrap();
        assert!(matches!(newton_polygon(&g), Err(Error::InsufficientPrecision(_))));
    }

    #[test]
    fn dual_polygon_reflects() {
        let r = ring(2, 1, 6);
        let g = DModule::make_gmn(2, 1, &r).unwrap();
        let d = g.dual();
        assert_eq!(newton_polygon(&d).unwrap(), newton_polygon(&g).unwrap().reflect());
        assert_eq!(newton_polygon(&d).unwrap().points(), &[(Ratio::new(1, 3), 3)]);
    }

    #[test]
    fn constant_polygon_list() {
        let r = ring(2, 1, 5);
        let a = DModule::make_gmn(1, 1, &r).unwrap();
        let b = DModule::make_gmn(2, 1, &r).unwrap();
        assert_eq!(is_constant_polygon(&[a.clone()]).unwrap(), (true, None));
        assert_eq!(is_constant_polygon(&[a.clone(), a.clone()]).unwrap(), (true, None));
        assert_eq!(is_constant_polygon(&[a, b]).unwrap(), (false, Some(1)));
    }

    /// Independent slope oracle for a = 1: valuations of elementary
    /// divisors of V^t grow linearly in t with rates the Newton slopes.
    fn slope_oracle(module: &DModule) -> Vec<(Ratio<u64>, u64)> {
        let h = module.rank();
        let t0 = 6u32;
        let t1 = 12u32;
        let divisors = |t: u32| -> Vec<u64> {
            let m = module.v().pow(t);
            let snf = smith_normal_form(m.matrix());
            snf.diag
                .iter()
                .map(|v| match v {
                    Valuation::Finite(x) => *x as u64,
                    Valuation::Infinite => panic!("oracle needs more precision"),
                })
                .collect()
        };
        let d0 = divisors(t0);
        let d1 = divisors(t1);
        let mut slopes: Vec<Ratio<u64>> =
            (0..h).map(|i| Ratio::new(d1[i] - d0[i], (t1 - t0) as u64)).collect();
        slopes.sort();
        let mut pts: Vec<(Ratio<u64>, u64)> = vec![];
        for s in slopes {
            match pts.last_mut() {
                Some(last) if last.0 == s => last.1 += 1,
                _ => pts.push((s, 1)),
            }
        }
        pts
    }

    #[test]
    fn polygon_agrees_with_growth_oracle() {
        for &(m, n) in &[(0u32, 1u32), (1, 0), (1, 1), (1, 2), (2, 1)] {
            let r = ring(2, 1, 16);
            let g = DModule::make_gmn(m, n, &r).unwrap();
            assert_eq!(newton_polygon(&g).unwrap().points(), &slope_oracle(&g)[..], "G_{{{m},{n}}}");
        }
        // a rank-3 sum
        let r = ring(3, 1, 16);
        let s = DModule::direct_sum(
            &DModule::make_gmn(0, 1, &r).unwrap(),
            &DModule::make_gmn(1, 1, &r).unwrap(),
        )
        .unwrap();
        assert_eq!(newton_polygon(&s).unwrap().points(), &slope_oracle(&s)[..]);
    }
}
