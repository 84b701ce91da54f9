//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values. Everything is exact (integer and rational
//! comparisons); there are no tolerances to tune.

use num_integer::Integer;
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use dvlab::dieudonne::{is_isomorphic, verify_witness, DModule, IsogenyData};
use dvlab::families::{build_example42, verify_no_csd_isogeny, ParamFamily};
use dvlab::newton::{is_constant_polygon, newton_polygon};
use dvlab::padic::{Ring, RingElem, RingParams};
use dvlab::semilinear::{vec_mul_pow_p, vec_zero, Lattice, Mat, Submodule};
use dvlab::slope::{
    canonical_slope_data, csd_saturate, descend_finite_field, enumerate_csd_isogenies,
    is_completely_slope_divisible, phi_etale_split, slope_filtration, SlopeData,
};

fn ring(p: u64, a: usize, n: u32) -> Ring {
    Ring::new(RingParams { p, a, n }).unwrap()
}

fn coprime_pairs(max_height: u32) -> Vec<(u32, u32)> {
    let mut out = vec![];
    for h in 1..=max_height {
        for m in 0..=h {
            let n = h - m;
            if m.gcd(&n) == 1 {
                out.push((m, n));
            }
        }
    }
    out
}

fn random_elem(rng: &mut StdRng, r: &Ring) -> RingElem {
    let modulus = r.modulus().to_u64_digits();
    let bound = if modulus.len() == 1 { modulus[0] } else { u64::MAX };
    let coeffs = (0..r.degree()).map(|_| num_bigint::BigUint::from(rng.gen_range(0..bound))).collect();
    r.from_residues(coeffs).unwrap()
}

fn random_invertible(rng: &mut StdRng, r: &Ring, h: usize) -> Mat {
    loop {
        let m = Mat::from_fn(r, h, h, |_, _| random_elem(rng, r));
        if m.is_invertible() {
            return m;
        }
    }
}

#[test]
fn criterion_01_gmn_slope_table() {
    let mut checked = 0;
    for p in [2u64, 3] {
        for &(m, n) in &coprime_pairs(6) {
            let r = ring(p, 1, m + 2);
            let g = DModule::make_gmn(m, n, &r).unwrap();
            let poly = newton_polygon(&g).unwrap();
            assert_eq!(
                poly.points(),
                &[(Ratio::new(m as u64, (m + n) as u64), (m + n) as u64)],
                "G_{{{m},{n}}} over F_{p}"
            );
            checked += 1;
        }
    }
    println!("[PASS] criterion 1: newton_polygon(G_mn) = [(m/(m+n), m+n)] for {checked} cases (p in {{2,3}}, heights <= 6)");
}

#[test]
fn criterion_02_gmn_complete_slope_divisibility() {
    let mut checked = 0;
    for p in [2u64, 3] {
        for &(m, n) in &coprime_pairs(6) {
            // precision must clear the scaled divisions p^{-t m}V^{t(m+n)}
            let r = ring(p, 1, 3 * m + 3);
            let g = DModule::make_gmn(m, n, &r).unwrap();
            let sd = SlopeData::new(m + n, vec![m]).unwrap();
            assert!(
                is_completely_slope_divisible(&g, &sd).unwrap().holds,
                "G_{{{m},{n}}} w.r.t. (h, [m]) over F_{p}"
            );
            for t in [2u32, 3] {
                let scaled = sd.scale(t).unwrap();
                assert!(
                    is_completely_slope_divisible(&g, &scaled).unwrap().holds,
                    "G_{{{m},{n}}} scaled by {t} over F_{p}"
                );
            }
            checked += 1;
        }
    }
    println!("[PASS] criterion 2: G_mn completely slope divisible w.r.t. (m+n, [m]) and t-scalings, {checked} cases");
}

#[test]
fn criterion_03_phi_etale_split() {
    let r = ring(2, 1, 5);
    let g01 = DModule::make_gmn(0, 1, &r).unwrap();
    let g11 = DModule::make_gmn(1, 1, &r).unwrap();
    let module = DModule::direct_sum(&g01, &g11).unwrap();
    let split = phi_etale_split(&module, 0, 1).unwrap();
    assert_eq!((split.nil.rank(), split.etale.rank()), (2, 1));
    assert!(is_isomorphic(&split.etale, &g01).unwrap().is_yes());
    assert!(is_isomorphic(&split.nil, &g11).unwrap().is_yes());
    println!("[PASS] criterion 3: phi_etale_split(G_01 + G_11, phi = V) has ranks (2,1), etale part isomorphic to G_01");
}

#[test]
fn criterion_04_filtration_uniqueness() {
    let p = 2;
    let r = ring(p, 1, 8);
    let base = DModule::direct_sum(
        &DModule::make_gmn(1, 1, &r).unwrap(),
        &DModule::make_gmn(1, 2, &r).unwrap(),
    )
    .unwrap();
    let filt = slope_filtration(&base).unwrap();
    assert_eq!(filt.slopes, vec![Ratio::new(1, 2), Ratio::new(1, 3)]);
    let mut rng = StdRng::seed_from_u64(0x44_1144);
    for trial in 0..20 {
        let t = random_invertible(&mut rng, &r, 5);
        let conj = base.conjugate(&t).unwrap();
        let filt_conj = slope_filtration(&conj).unwrap();
        assert_eq!(filt_conj.slopes, vec![Ratio::new(1, 2), Ratio::new(1, 3)], "trial {trial}");
        // the filtration of the conjugate is the moved filtration,
        // compared as lattices at the filtration's precision
        let cmp_ring = &filt_conj.ring;
        let t_small = t.truncate_to(cmp_ring).unwrap();
        for (step, conj_step) in filt.steps.iter().zip(&filt_conj.steps) {
            let moved: Vec<Vec<RingElem>> = step
                .truncate_to(cmp_ring)
                .unwrap()
                .generators()
                .iter()
                .map(|g| t_small.mul_vec(g).unwrap())
                .collect();
            let moved_sub = Submodule::from_generators(cmp_ring, 5, &moved);
            assert_eq!(conj_step, &moved_sub, "trial {trial}");
        }
    }
    println!("[PASS] criterion 4: slope filtration of G_11 + G_12 has slopes 1/2 > 1/3 and is lattice-identical across 20 random unit conjugates");
}

#[test]
fn criterion_05_descent_to_fp2() {
    let mut checked = 0;
    for p in [2u64, 3] {
        let base = ring(p, 1, 6);
        let big = ring(p, 4, 6);
        let g = DModule::make_gmn(1, 1, &base).unwrap().base_change(4).unwrap();
        let sd = SlopeData::new(2, vec![1]).unwrap();
        let mut rng = StdRng::seed_from_u64(0x0515 + p);
        for trial in 0..20 {
            let t = random_invertible(&mut rng, &big, 2);
            let hidden = g.conjugate(&t).unwrap();
            let descent = descend_finite_field(&hidden, &sd).unwrap();
            assert_eq!(descent.model.rank(), 2, "p={p} trial {trial}");
            assert_eq!(descent.model.ring().degree(), 2, "p={p} trial {trial}");
            let back = descent.model.base_change(4).unwrap();
            assert!(
                verify_witness(&back, &descent.base_changed_input, &descent.witness),
                "p={p} trial {trial}: witness fails the matrix identity"
            );
            checked += 1;
        }
    }
    println!("[PASS] criterion 5: descent of {checked} random conjugates of G_11 over F_p^4 to full-rank models over F_p^2, witnesses verified exactly");
}

#[test]
fn criterion_06_enumeration_count() {
    for p in [2u64, 3] {
        let g = DModule::make_gmn(1, 1, &ring(p, 1, 6)).unwrap().base_change(2).unwrap();
        let sd = SlopeData::new(2, vec![1]).unwrap();
        let found = enumerate_csd_isogenies(&g, 1, &sd, 100_000).unwrap();
        assert_eq!(found.len() as u64, p * p + 1, "p = {p}");

        // independent brute-force oracle: every colength-1 overlattice
        // M + W p^{-1} x over lines x of M/pM, filtered by Φ-stability
        let base = g.ring().clone();
        let r1 = base.with_precision(1).unwrap();
        let q = p * p;
        let mut lines: Vec<Submodule> = vec![];
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
                let line = Submodule::from_generators(&r1, 2, &[vec![dec(x0), dec(x1)]]);
                if !lines.contains(&line) {
                    lines.push(line);
                }
            }
        }
        assert_eq!(lines.len() as u64, q + 1);
        let vs = g.v().pow(2);
        let mut stable = 0u64;
        for line in &lines {
            let x = line.generators().remove(0);
            let lift: Vec<RingElem> = x.iter().map(|e| base.lift_residues(&r1.reduce_mod_p(e))).collect();
            let mut gens: Vec<Vec<RingElem>> =
                Mat::identity(&base, 2).columns().iter().map(|c| vec_mul_pow_p(&base, c, 1)).collect();
            gens.push(lift);
            let l = Lattice::new(&base, 2, 1, &gens);
            let image = l.apply(&vs, 1).unwrap();
            if l.contains_lattice(&image) {
                stable += 1;
            }
        }
        assert_eq!(found.len() as u64, stable, "p = {p}: enumeration does not match the oracle");
        println!("[PASS] criterion 6 (p = {p}): enumerate found {} = p^2+1 Φ-stable overlattices, matching the brute-force oracle", found.len());
    }
}

/// All F,V-stable overlattices of `module` of length exactly one more
/// than each lattice in `level`, canonical and deduplicated.
fn stable_overlattices_next_level(module: &DModule, level: &[Lattice]) -> Vec<Lattice> {
    let ring = module.ring();
    let h = module.rank();
    let p = ring.p();
    let mut out: Vec<Lattice> = vec![];
    for l in level {
        // lines of L/pL in the canonical basis of the scaled submodule
        let basis = l.submodule().generators();
        let k = basis.len();
        let total = (p as u128).pow(k as u32);
        for idx in 1..total {
            let mut digits = idx;
            let mut vec = vec_zero(ring, h);
            for b in basis.iter() {
                let c = (digits % p as u128) as u64;
                digits /= p as u128;
                if c != 0 {
                    let ce = ring.from_u64(c);
                    for (i, x) in b.iter().enumerate() {
                        vec[i] = ring.add(&vec[i], &ring.mul(&ce, x));
                    }
                }
            }
            // candidate: L + p^{-(d+1)}·(scaled rep of the line)
            let mut gens: Vec<Vec<RingElem>> =
                l.submodule().generators().iter().map(|g| vec_mul_pow_p(ring, g, 1)).collect();
            gens.push(vec);
            let cand = Lattice::new(ring, h, l.denominator_exp() + 1, &gens);
            if cand == *l {
                continue;
            }
            let f_img = cand.apply(module.f(), 0).unwrap();
            let v_img = cand.apply(module.v(), 0).unwrap();
            if !cand.contains_lattice(&f_img) || !cand.contains_lattice(&v_img) {
                continue;
            }
            if out.iter().all(|x| x != &cand) {
                out.push(cand);
            }
        }
    }
    out
}

#[test]
fn criterion_07_saturation_minimality() {
    let p = 2u64;
    let n = 14;
    let r = ring(p, 1, n);
    let base = DModule::direct_sum(
        &DModule::make_gmn(1, 1, &r).unwrap(),
        &DModule::make_gmn(1, 2, &r).unwrap(),
    )
    .unwrap();
    let h = 5;
    let mut rng = StdRng::seed_from_u64(0x5a7_0717);
    let mut degrees = vec![0usize; 5];
    let mut done = 0;
    while done < 50 {
        // random F,V-stable sublattice: the stability closure of p^k M
        // together with a random vector (k alternating for variety),
        // filtered to log-index <= 2
        let k = 1 + (done as u32 % 2);
        let x = (0..h).map(|_| random_elem(&mut rng, &r)).collect::<Vec<_>>();
        let mut gens: Vec<Vec<RingElem>> =
            Mat::identity(&r, h).columns().iter().map(|c| vec_mul_pow_p(&r, c, k)).collect();
        gens.push(x);
        // closure under F and V
        let mut sub = Submodule::from_generators(&r, h, &gens);
        for _ in 0..(2 * h) {
            let mut next = sub.generators();
            for g in sub.generators() {
                next.push(base.f().apply(&g).unwrap());
                next.push(base.v().apply(&g).unwrap());
            }
            let closed = Submodule::from_generators(&r, h, &next);
            if closed == sub {
                break;
            }
            sub = closed;
        }
        let colength = match sub.colength_in_full() {
            Some(c) if c <= 2 => c,
            _ => continue,
        };
        // module on the sublattice, via the overlattice p^{-d}·S of M
        let d = sub.pivot_exponents().iter().map(|&(_, e)| e).max().unwrap_or(0);
        let pert = if d == 0 {
            base.clone()
        } else {
            base.isogeny_from_lattice(&Lattice::from_submodule(sub, d)).unwrap().target
        };
        let _ = colength;

        let isog = csd_saturate(&pert).unwrap();
        let deg = isog.log_degree;
        assert!(deg <= 4, "saturation degree {deg} exceeds 4");
        let sd = canonical_slope_data(&isog.target).unwrap();
        assert!(
            is_completely_slope_divisible(&isog.target, &sd).unwrap().holds,
            "saturation target is not completely slope divisible"
        );

        // oracle: no F,V-stable overlattice of smaller length carries a
        // completely slope divisible structure (exhaustive, level by level)
        let mut level = vec![Lattice::standard(pert.ring(), h)];
        for lower in 0..deg {
            if lower > 0 {
                level = stable_overlattices_next_level(&pert, &level);
            }
            for cand in &level {
                let target = pert.isogeny_from_lattice(cand).unwrap().target;
                let sd = canonical_slope_data(&target).unwrap();
                let check = is_completely_slope_divisible(&target, &sd).unwrap();
                assert!(
                    !check.holds || lower == 0 && deg == 0,
                    "oracle found a csd overlattice of length {lower} < {deg}"
                );
            }
        }
        degrees[deg as usize] += 1;
        done += 1;
    }
    println!("[PASS] criterion 7: 50 random stable sublattice perturbations saturated to csd targets, degree histogram {degrees:?}, minimality confirmed by exhaustive overlattice search");
}

#[test]
fn criterion_08_example41_fibers() {
    for p in [2u64, 3] {
        for a in [1usize, 2] {
            let fam = ParamFamily::new(p, a, 5).unwrap();
            let mut fibers = vec![];
            for t in fam.parameters() {
                let fiber = fam.fiber(&t).unwrap();
                assert_eq!(fiber.rank(), 5);
                let poly = newton_polygon(&fiber).unwrap();
                assert_eq!(
                    poly.points(),
                    &[(Ratio::new(1, 3), 3), (Ratio::new(1, 2), 2)],
                    "p={p} a={a} t={t:?}"
                );
                let expected = if t.iter().all(|&c| c == 0) { 1 } else { 0 };
                assert_eq!(fam.xi_kernel_order(&t).unwrap(), expected, "p={p} a={a} t={t:?}");
                fibers.push(fiber);
            }
            assert_eq!(is_constant_polygon(&fibers).unwrap(), (true, None));
        }
    }
    println!("[PASS] criterion 8: all fibers (p in {{2,3}}, a in {{1,2}}, N=5) have polygon [(1/3,3),(1/2,2)]; xi kernel has order p at t=0 and is trivial elsewhere");
}

#[test]
fn criterion_09_example42_no_glued_csd_isogeny() {
    let start = std::time::Instant::now();
    let glued = build_example42(2, 6).unwrap();
    let report = verify_no_csd_isogeny(&glued, 2, 100_000).unwrap();
    assert!(report.uniform_mismatch());
    for (d, cands) in &report.per_degree {
        assert!(!cands.is_empty(), "no candidates at degree {d}");
        for c in cands {
            assert_eq!(c.first.1, c.first.0 + 1, "first-component mismatch is not +1");
            assert_eq!(c.second.0, c.second.1 + 1, "second-component mismatch is not -1");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "verification took {elapsed:?}");
    println!(
        "[PASS] criterion 9: {} candidates across log-degrees 0..=2 all show the +1 mismatch on the slope-2/3 component ({}ms) — no glued csd isogeny",
        report.candidate_count(),
        elapsed.as_millis()
    );
}

#[test]
fn criterion_10_invariant_suite() {
    let mut rng = StdRng::seed_from_u64(0x10_1010);
    let pairs = [(1u32, 1u32), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (0, 1), (1, 0)];

    // FV = VF = p preserved by every constructor (the DModule constructor
    // re-checks it; these calls would error otherwise)
    for case in 0..200 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let a = if rng.gen_bool(0.5) { 1 } else { 2 };
        let r = ring(p, a, 5);
        let (m, n) = pairs[rng.gen_range(0..pairs.len())];
        let g = DModule::make_gmn(m, n, &ring(p, 1, 5)).unwrap().base_change(a).unwrap();
        let (m2, n2) = pairs[rng.gen_range(0..pairs.len())];
        let g2 = DModule::make_gmn(m2, n2, &ring(p, 1, 5)).unwrap().base_change(a).unwrap();
        let sum = DModule::direct_sum(&g, &g2).unwrap();
        let dual = sum.dual();
        let t = random_invertible(&mut rng, &r, sum.rank());
        let conj = sum.conjugate(&t).unwrap();
        let bc = conj.base_change(2 * a).unwrap();
        assert!(bc.rank() == sum.rank(), "case {case}");
        assert_eq!(dual.dual().rank(), sum.rank());
    }

    // Newton polygon invariances: duality reflection, base change,
    // alpha_p quotients; breakpoint integrality
    for case in 0..200 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let (m, n) = pairs[rng.gen_range(0..pairs.len())];
        let (m2, n2) = pairs[rng.gen_range(0..pairs.len())];
        // the base-changed polygon sees determinant valuations up to
        // 2·(m + m2) ≤ 12, so the precision must clear that
        let r = ring(p, 1, 14);
        let g = DModule::direct_sum(
            &DModule::make_gmn(m, n, &r).unwrap(),
            &DModule::make_gmn(m2, n2, &r).unwrap(),
        )
        .unwrap();
        let t = random_invertible(&mut rng, &r, g.rank());
        let g = g.conjugate(&t).unwrap();
        let poly = newton_polygon(&g).unwrap();
        // dual reflects
        assert_eq!(newton_polygon(&g.dual()).unwrap(), poly.reflect(), "case {case}");
        // base change preserves
        assert_eq!(newton_polygon(&g.base_change(2).unwrap()).unwrap(), poly, "case {case}");
        // alpha_p quotient preserves
        let embeddings = g.alpha_p_embeddings().unwrap();
        if !embeddings.is_empty() {
            let x = &embeddings[rng.gen_range(0..embeddings.len())];
            let isog = g.quotient_by_alpha_p(x).unwrap();
            assert_eq!(newton_polygon(&isog.target).unwrap(), poly, "case {case}");
        }
        // breakpoint integrality: prefix sums of slope·multiplicity are integers
        let mut acc = Ratio::from_integer(0u64);
        for &(s, mult) in poly.points() {
            acc += s * Ratio::from_integer(mult);
            assert!(acc.is_integer(), "case {case}: breakpoint {acc} not integral");
        }
    }

    // degree additivity of isogeny composition
    for case in 0..200 {
        let p = if rng.gen_bool(0.5) { 2 } else { 3 };
        let (m, n) = [(1u32, 1u32), (1, 2), (2, 1)][rng.gen_range(0..3)];
        let r = ring(p, 1, 7);
        let g = DModule::make_gmn(m, n, &r).unwrap();
        let x = g.alpha_p_embeddings().unwrap().remove(0);
        let first = g.quotient_by_alpha_p(&x).unwrap();
        let y = first.target.alpha_p_embeddings().unwrap().remove(0);
        let second = first.target.quotient_by_alpha_p(&y).unwrap();
        let comp = IsogenyData::compose(&first, &second).unwrap();
        assert_eq!(comp.log_degree, first.log_degree + second.log_degree, "case {case}");
        // the composite lattice measures the same degree
        let total = comp.target_lattice().length_over(&Lattice::standard(&r, g.rank())).unwrap();
        assert_eq!(total as u32, comp.log_degree, "case {case}");
    }

    println!("[PASS] criterion 10: 200-case property suites — FV=VF=p under all constructors, polygon invariance (dual/base change/alpha_p), degree additivity, breakpoint integrality");
}
