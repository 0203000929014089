//! Randomized invariants: p-adic ring and log/exp laws, rational
//! reconstruction, form reduction, class groups and measures.

use gross_stark::gsunit::{st_integral, st_integral_scaled};
use gross_stark::lfun::{desmooth, lp_derivative0, smooth};
use gross_stark::measure::{build_measure, exact_measure, refine_consistency, values_in_z_c, EisensteinMeasure, MeasureSpec};
use gross_stark::padic::{default_bound, rational_reconstruct, PAdic, Unram};
use gross_stark::quadfield::{gauss_compose, is_fundamental, prime_discriminant_count, Form, NarrowClassGroup, QuadElem};
use gross_stark::zeta::ShintaniDomain;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;

const PREC: i64 = 14;

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11])
}

fn padic(p: u64) -> impl Strategy<Value = PAdic> {
    (-1_000_000_000i64..1_000_000_000, 1i64..1000).prop_map(move |(n, d)| {
        let d = if d % p as i64 == 0 { d + 1 } else { d };
        PAdic::from_rational(p, &BigRational::new(BigInt::from(n), BigInt::from(d)), PREC)
    })
}

fn unit(p: u64) -> impl Strategy<Value = PAdic> {
    padic(p).prop_map(move |x| if x.valuation() > 0 { x.add(&PAdic::one(p, PREC)) } else { x })
        .prop_map(|x| x.unit_part().unwrap())
}

fn small(p: u64) -> impl Strategy<Value = PAdic> {
    padic(p).prop_map(move |x| if x.valuation() >= 1 { x } else { x.mul_int(p as i64) })
}

/// An inert pair `(disc, p)` and a random element of the unramified extension.
fn unram() -> impl Strategy<Value = Unram> {
    (prop::sample::select(vec![(689i64, 3u64), (12, 5), (8, 3), (40, 7)]), -100_000i64..100_000, -100_000i64..100_000)
        .prop_map(|((d, p), x, y)| Unram::from_ints(p, &BigInt::from(x), &BigInt::from(y), d, PREC).unwrap())
}

fn unram_unit() -> impl Strategy<Value = Unram> {
    unram().prop_filter_map("nonzero", |u| if u.with_precision(1).is_zero() { None } else { Some(u) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ring_laws((x, y, z) in prime().prop_flat_map(|p| (padic(p), padic(p), padic(p)))) {
        prop_assert!(x.add(&y).eq_at_precision(&y.add(&x)));
        prop_assert!(x.mul(&y).eq_at_precision(&y.mul(&x)));
        prop_assert!(x.add(&y).add(&z).eq_at_precision(&x.add(&y.add(&z))));
        prop_assert!(x.mul(&y.add(&z)).eq_at_precision(&x.mul(&y).add(&x.mul(&z))));
        prop_assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn integer_arithmetic_is_exact(p in prime(), a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000) {
        let (x, y) = (PAdic::from_i64(p, a, PREC), PAdic::from_i64(p, b, PREC));
        prop_assert!(x.add(&y).eq_at_precision(&PAdic::from_i64(p, a + b, PREC)));
        prop_assert!(x.mul(&y).eq_at_precision(&PAdic::from_i64(p, a * b, PREC)));
    }

    #[test]
    fn inverse_of_units((u, v) in prime().prop_flat_map(|p| (unit(p), padic(p)))) {
        let one = PAdic::one(u.prime(), PREC);
        prop_assert!(u.mul(&u.inv().unwrap()).eq_at_precision(&one));
        prop_assert!(v.mul(&u).div(&u).unwrap().eq_at_precision(&v));
    }

    #[test]
    fn log_is_a_homomorphism((u, v) in prime().prop_flat_map(|p| (unit(p), unit(p)))) {
        let lhs = u.mul(&v).log().unwrap();
        let rhs = u.log().unwrap().add(&v.log().unwrap());
        prop_assert!(lhs.eq_at_precision(&rhs));
        prop_assert!(u.teichmuller().unwrap().log().unwrap().is_zero());
    }

    #[test]
    fn exp_and_log_invert((z, p) in prime().prop_flat_map(|p| (small(p), Just(p)))) {
        let e = z.exp().unwrap();
        prop_assert!(e.log().unwrap().eq_at_precision(&z));
        let w = PAdic::one(p, PREC).add(&z);
        prop_assert!(w.log().unwrap().exp().unwrap().eq_at_precision(&w));
    }

    #[test]
    fn unramified_laws(x in unram_unit(), k in 1i64..50) {
        let y = x.mul(&x.conjugate()).add(&x.mul_int(k));
        let (p, d) = (x.prime(), x.disc());
        let y = if y.with_precision(1).is_zero() { Unram::one(p, d, PREC) } else { y };
        prop_assert!(x.mul(&y).eq_at_precision(&y.mul(&x)));
        prop_assert!(x.conjugate().conjugate().eq_at_precision(&x));
        prop_assert!(x.mul(&y).conjugate().eq_at_precision(&x.conjugate().mul(&y.conjugate())));
        prop_assert!(x.mul(&y).norm().eq_at_precision(&x.norm().mul(&y.norm())));
        let lx = x.log().unwrap();
        prop_assert!(x.mul(&y).log().unwrap().eq_at_precision(&lx.add(&y.log().unwrap())));
        prop_assert!(lx.trace().eq_at_precision(&x.norm().log().unwrap()));
        prop_assert!(x.teichmuller().unwrap().log().unwrap().is_zero());
        let z = lx.mul_int(p as i64);
        prop_assert!(z.exp().unwrap().log().unwrap().eq_at_precision(&z));
    }

    #[test]
    fn rational_reconstruction_round_trip(p in prime(), n in -100_000i64..100_000, d in 1i64..100_000, extra in 0i64..6) {
        prop_assume!(d % p as i64 != 0);
        let q = BigRational::new(BigInt::from(n), BigInt::from(d));
        let digits = 40 + extra;
        let modulus = BigInt::from(p).pow(digits as u32);
        let residue = PAdic::from_rational(p, &q, digits).residue().unwrap();
        prop_assert_eq!(rational_reconstruct(&residue, &modulus, &default_bound(&modulus)), Some(q));
    }
}

fn disc_689_form() -> impl Strategy<Value = Form> {
    let g = NarrowClassGroup::new(689).unwrap();
    prop::sample::select(g.forms)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduction_preserves_the_class(f in disc_689_form(), m in prop::sample::select(vec![
        [[1i64, 1], [0, 1]], [[1, 0], [3, 1]], [[2, 1], [1, 1]], [[5, 2], [7, 3]], [[1, -4], [0, 1]],
    ])) {
        let g = NarrowClassGroup::new(689).unwrap();
        let t = f.transform(m);
        prop_assert_eq!(t.disc(), 689);
        prop_assert!(t.reduce().is_reduced());
        prop_assert_eq!(g.index_of(&t), g.index_of(&f));
        let good = f.good_form(&[3, 5, 7]);
        prop_assert!(good.a > 0 && good.a % 3 != 0 && good.a % 5 != 0 && good.a % 7 != 0);
        prop_assert_eq!(g.index_of(&good), g.index_of(&f));
    }

    #[test]
    fn composition_is_a_group_law(f in disc_689_form(), h in disc_689_form(), k in disc_689_form()) {
        let g = NarrowClassGroup::new(689).unwrap();
        let fh = gauss_compose(&f, &h).unwrap();
        prop_assert_eq!(g.index_of(&fh), g.index_of(&gauss_compose(&h, &f).unwrap()));
        let l = gauss_compose(&fh, &k).unwrap();
        let r = gauss_compose(&f, &gauss_compose(&h, &k).unwrap()).unwrap();
        prop_assert_eq!(g.index_of(&l), g.index_of(&r));
        let e = gauss_compose(&f, &f.inverse()).unwrap();
        prop_assert_eq!(g.index_of(&e), g.identity);
    }
}

/// Measure parameters over a few inert pairs, with every class of each.
fn measure_spec(max_level: u32) -> impl Strategy<Value = MeasureSpec> {
    let cases: Vec<(i64, u64, i64)> = vec![(689, 3, 5), (689, 3, 7), (12, 5, 7), (8, 3, 5), (40, 7, 5), (13, 5, 7)];
    prop::sample::select(cases).prop_flat_map(move |(d, p, c)| {
        let forms = NarrowClassGroup::new(d).unwrap().forms;
        (prop::sample::select(forms), 1..=max_level).prop_map(move |(f, r)| MeasureSpec::new(d, p, c, f, r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measures_have_mass_zero_and_refine(spec in measure_spec(2)) {
        let a = build_measure(&spec).unwrap();
        let b = build_measure(&spec.at_level(spec.level + 1)).unwrap();
        prop_assert!(a.total_mass().is_zero());
        prop_assert!(b.total_mass().is_zero());
        prop_assert!(values_in_z_c(&a));
        prop_assert!(refine_consistency(&a, &b).unwrap());
    }

    #[test]
    fn sweep_agrees_with_exact_values(spec in measure_spec(2)) {
        prop_assert_eq!(build_measure(&spec).unwrap(), exact_measure(&spec).unwrap());
    }

    #[test]
    fn cache_round_trip_is_byte_identical(spec in measure_spec(3)) {
        let m = build_measure(&spec).unwrap();
        let text = m.to_json();
        let back = EisensteinMeasure::from_json(&spec, &text).unwrap();
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn integral_ignores_scaling_by_the_unit(spec in measure_spec(3)) {
        let m = build_measure(&spec).unwrap();
        let st = st_integral(&m).unwrap();
        let dom = ShintaniDomain::for_form(&m.form).unwrap();
        let st2 = st_integral_scaled(&m, &dom.eps).unwrap();
        prop_assert!(st.value.eq_at_precision(&st2.value));
        let lp = lp_derivative0(&m).unwrap();
        prop_assert!(st.value.trace().add(&lp.value).with_precision(st.kappa.min(lp.kappa)).is_zero());
    }

    #[test]
    fn desmoothing_inverts_smoothing(spec in measure_spec(4)) {
        let m = build_measure(&spec).unwrap();
        let lp = lp_derivative0(&m).unwrap();
        if let Ok(d) = desmooth(&lp, spec.c) {
            prop_assert!(smooth(&d, spec.c).agrees_with(&lp));
        }
    }
}

#[test]
fn genus_counts_below_2000() {
    let mut n = 0;
    for d in 5..2000 {
        if !is_fundamental(d) {
            continue;
        }
        n += 1;
        let g = NarrowClassGroup::new(d).unwrap();
        let t = prime_discriminant_count(d);
        assert_eq!(g.two_torsion_count(), 1 << (t - 1), "disc {d}");
        assert_eq!(g.order() % (1 << (t - 1)), 0, "disc {d}");
    }
    assert!(n > 550, "{n} fundamental discriminants");
}

#[test]
fn scaling_tau_by_a_non_unit_changes_the_integral_only_through_mass() {
    let m = build_measure(&MeasureSpec::new(689, 3, 5, Form::new(-20, 17, 5), 3)).unwrap();
    let alpha = QuadElem::from_ints(2, 0, 689);
    let a = st_integral(&m).unwrap();
    let b = st_integral_scaled(&m, &alpha).unwrap();
    assert!(a.value.eq_at_precision(&b.value));
    assert!(st_integral(&m.zeroed()).unwrap().value.is_zero());
}
