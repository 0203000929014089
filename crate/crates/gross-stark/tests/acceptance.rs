//! Acceptance battery: one PASS/FAIL line per criterion, written straight to
//! stderr so the lines show up without `--nocapture`.

mod common;

use std::io::Write;
use std::time::Instant;

use gross_stark::cli::{selftest, SelftestConfig};
use gross_stark::gsunit::{
    compare_table_logs, fit_normalization, recognize_against, root_check, run_pipeline, units_agree, GsReport,
    PipelineConfig, TABLE_NORMALIZATION,
};
use gross_stark::lfun::{first_admissible_k, interpolation_admissible, interpolation_check};
use gross_stark::measure::{build_measure, refine_consistency, MeasureSpec};
use gross_stark::padic::{default_bound, rational_reconstruct, PAdic};
use gross_stark::quadfield::{is_fundamental, prime_discriminant_count, Form, NarrowClassGroup};
use gross_stark::zeta::{dirichlet_oracle, zeta_of_class};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{reference_polynomial, table_units, TABLE_689};

/// Criteria whose literal statement is known not to hold, with the reason.
const KNOWN_DEVIATIONS: &[(u32, &str)] = &[(
    5,
    "disc 12, p 5 at s = -2: k = 3 is not 1 mod [F(mu_10):F] = 4, so the Teichmuller twist omega^2 is nontrivial; \
     the admissible weight s = -4 is checked instead",
)];

struct Line {
    n: u32,
    pass: bool,
    detail: String,
}

fn say(line: &Line) {
    let mut e = std::io::stderr();
    let _ = writeln!(e, "criterion {}: {} | {}", line.n, if line.pass { "PASS" } else { "FAIL" }, line.detail);
}

fn pipeline(disc: i64, p: u64, level: u32) -> GsReport {
    run_pipeline(&PipelineConfig::new(disc, p, level), &mut |_| {}).expect("pipeline runs")
}

fn criterion1(rep: &GsReport) -> Line {
    let units = table_units();
    let logs = compare_table_logs(rep, &units, 5).unwrap();
    let canon: Vec<bool> = rep.records.iter().zip(&units).map(|(r, u)| units_agree(r.unit.as_ref().unwrap(), u, rep.kappa)).collect();
    let pass = rep.kappa >= 5 && logs.iter().all(|&b| b);
    Line {
        n: 1,
        pass,
        detail: format!(
            "disc 689 level 8, kappa {}: table logs agree mod 3^5 for {}/8 classes; canonical units agree with the table entries for {}/8",
            rep.kappa,
            logs.iter().filter(|&&b| b).count(),
            canon.iter().filter(|&&b| b).count()
        ),
    }
}

fn criterion2(rep: &GsReport) -> Line {
    let g = &rep.group;
    let zetas: Vec<BigRational> = TABLE_689.iter().map(|t| zeta_of_class(&t.form, 1).unwrap()).collect();
    let expected: Vec<i64> = TABLE_689.iter().map(|t| t.valuation).collect();
    let fitted = fit_normalization(&zetas, &expected);
    let got: Vec<i64> = TABLE_689.iter().map(|t| rep.records[g.index_of(&t.form)].valuation.unwrap()).collect();
    let fitted_ok = fitted == Some(BigRational::from_integer(BigInt::from(TABLE_NORMALIZATION)));
    Line {
        n: 2,
        pass: got == expected && fitted_ok && rep.records[0].power == 1,
        detail: format!("valuations {got:?}, fitted normalization {}", fitted.map(|f| f.to_string()).unwrap_or("none".into())),
    }
}

fn criterion3(rep: &GsReport) -> Line {
    let poly = reference_polynomial();
    let mut r2 = rep.clone();
    recognize_against(&mut r2, &poly).unwrap();
    let roots: Vec<bool> = r2.records.iter().map(|r| root_check(&poly, r.unit.as_ref().unwrap(), r2.kappa).unwrap()).collect();
    let canon: usize = rep.records.iter().filter(|r| root_check(&poly, r.unit.as_ref().unwrap(), rep.kappa).unwrap()).count();
    Line {
        n: 3,
        pass: roots.iter().all(|&b| b),
        detail: format!(
            "roots mod 3^{} at {}/8 recognized units ({}; {}); canonical units are roots at {}/8; coefficient reconstruction: {}",
            r2.kappa,
            roots.iter().filter(|&&b| b).count(),
            format!("{:?}", r2.recognition.status).to_lowercase(),
            r2.recognition.note,
            canon,
            match &rep.polynomial {
                Ok(_) => "reconstructed".to_string(),
                Err(e) => e.clone(),
            }
        ),
    }
}

fn criterion4(rep689: &GsReport, rep12: &GsReport) -> Line {
    let a = rep689.records.iter().all(|r| r.trace_law_holds() && r.kappa >= 5);
    let b = rep12.records.iter().all(|r| r.trace_law_holds() && r.kappa >= 2);
    Line {
        n: 4,
        pass: a && b && rep12.records.len() == 2,
        detail: format!("disc 689 mod 3^{}: {a}; disc 12 p 5 level 4 mod 5^{}: {b}", rep689.kappa, rep12.kappa),
    }
}

/// The literal statement, plus whether every admissible weight matched.
fn criterion5() -> (Line, bool) {
    let mut notes = Vec::new();
    let mut literal = true;
    let mut admissible = true;
    for (disc, p, c, level) in [(689i64, 3u64, 5i64, 5u32), (12, 5, 7, 4)] {
        let g = NarrowClassGroup::new(disc).unwrap();
        let kk = first_admissible_k(disc, p);
        let mut lit_ok = 0;
        let mut adm_ok = 0;
        for f in &g.forms {
            let m = build_measure(&MeasureSpec::new(disc, p, c, *f, level)).unwrap();
            if interpolation_check(&m, 3).unwrap().0 {
                lit_ok += 1;
            }
            if interpolation_check(&m, kk).unwrap().0 {
                adm_ok += 1;
            }
        }
        let h = g.order();
        literal &= lit_ok == h;
        admissible &= adm_ok == h;
        notes.push(format!(
            "({disc},{p}): s = -2 {} matches {lit_ok}/{h}, admissible s = {} matches {adm_ok}/{h}",
            if interpolation_admissible(disc, p, 3) { "(admissible)" } else { "(inadmissible)" },
            1 - kk as i64
        ));
    }
    (Line { n: 5, pass: literal, detail: notes.join("; ") }, admissible)
}

fn criterion6() -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    let g = NarrowClassGroup::new(689).unwrap();
    for f in &g.forms {
        let spec = MeasureSpec::new(689, 3, 5, *f, 1);
        let ms: Vec<_> = (1..=3).map(|r| build_measure(&spec.at_level(r)).unwrap()).collect();
        ok &= ms.iter().all(|m| m.total_mass().is_zero());
        ok &= refine_consistency(&ms[0], &ms[1]).unwrap() && refine_consistency(&ms[1], &ms[2]).unwrap();
    }
    notes.push(format!("mass and refinement on 8 classes of 689 levels 1-3: {ok}"));
    let mut oracle = true;
    for d in [5, 8, 12, 13] {
        let g = NarrowClassGroup::new(d).unwrap();
        for k in 1..=3 {
            let s: BigRational = g.forms.iter().map(|f| zeta_of_class(f, k).unwrap()).sum();
            oracle &= s == dirichlet_oracle(d, k);
        }
    }
    let z5 = zeta_of_class(&Form::principal(5), 2).unwrap();
    let z5_ok = z5 == BigRational::new(1.into(), 30.into());
    notes.push(format!("dirichlet oracle for 5, 8, 12, 13 at s = 0, -1, -2: {oracle}; zeta_Q(sqrt5)(-1) = {z5}"));
    Line { n: 6, pass: ok && oracle && z5_ok, detail: notes.join("; ") }
}

fn criterion7(rep: &GsReport) -> Line {
    let agree = rep.records.iter().filter(|r| r.lp_c.agrees_with(&r.lp_d)).count();
    let k = rep.records.iter().map(|r| r.lp_c.kappa.min(r.lp_d.kappa)).min().unwrap();
    Line { n: 7, pass: agree == 8, detail: format!("c = 5 and c = 7 agree on {agree}/8 classes mod 3^{k}") }
}

fn criterion8(reports: &[&GsReport]) -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    for rep in reports {
        let good = rep.records.iter().all(|r| r.frobenius_fixed == (r.order <= 2));
        ok &= good;
        let fixed: Vec<String> = rep.records.iter().filter(|r| r.frobenius_fixed).map(|r| r.class.to_string()).collect();
        notes.push(format!("disc {}: fixed {{{}}} {}", rep.config.disc, fixed.join(" "), if good { "exactly the 2-torsion" } else { "MISMATCH" }));
    }
    Line { n: 8, pass: ok, detail: notes.join("; ") }
}

fn criterion9() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut padic_ok = 0;
    for _ in 0..1000 {
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let prec = 12;
        let a = rng.gen_range(1i64..1_000_000) * p as i64 + rng.gen_range(1..p as i64);
        let b = rng.gen_range(1i64..1_000_000) * p as i64 + rng.gen_range(1..p as i64);
        let (x, y) = (PAdic::from_i64(p, a, prec), PAdic::from_i64(p, b, prec));
        let ring = x.mul(&y).eq_at_precision(&PAdic::from_i64(p, a * b, prec))
            && x.add(&y).eq_at_precision(&PAdic::from_i64(p, a + b, prec));
        let logs = x.mul(&y).log().unwrap().eq_at_precision(&x.log().unwrap().add(&y.log().unwrap()));
        let z = PAdic::from_i64(p, p as i64 * rng.gen_range(-1000i64..1000), prec);
        let ee = z.exp().unwrap().log().unwrap().eq_at_precision(&z);
        if ring && logs && ee {
            padic_ok += 1;
        }
    }
    let modulus = BigInt::from(3).pow(40);
    let bound = default_bound(&modulus);
    let mut rr_ok = 0;
    for _ in 0..200 {
        let n = BigInt::from(rng.gen_range(-1_000_000i64..1_000_000));
        let d = loop {
            let d = rng.gen_range(1i64..1_000_000);
            if d % 3 != 0 {
                break BigInt::from(d);
            }
        };
        let q = BigRational::new(n, d);
        let residue = PAdic::from_rational(3, &q, 40).residue().unwrap();
        if rational_reconstruct(&residue, &modulus, &bound) == Some(q) {
            rr_ok += 1;
        }
    }
    let mut genus_ok = true;
    let mut count = 0;
    for d in 5..2000 {
        if !is_fundamental(d) {
            continue;
        }
        count += 1;
        let g = NarrowClassGroup::new(d).unwrap();
        let t = prime_discriminant_count(d);
        genus_ok &= g.two_torsion_count() == 1 << (t - 1) && g.order() % (1 << (t - 1)) == 0;
    }
    let start = Instant::now();
    let st = selftest(&SelftestConfig { quick: true, cache_dir: None }, &mut |_| {});
    let secs = start.elapsed().as_secs_f64();
    Line {
        n: 9,
        pass: padic_ok == 1000 && rr_ok == 200 && genus_ok && st.passed() && secs <= 300.0,
        detail: format!(
            "padic laws {padic_ok}/1000; reconstruction {rr_ok}/200; genus counts on {count} discriminants: {genus_ok}; quick selftest {} in {secs:.1}s",
            if st.passed() { "passed" } else { "FAILED" }
        ),
    }
}

#[test]
fn acceptance() {
    let t = Instant::now();
    let rep689 = pipeline(689, 3, 8);
    let rep12 = pipeline(12, 5, 4);
    let rep40 = pipeline(40, 7, 4);
    let _ = writeln!(std::io::stderr(), "acceptance: pipelines done in {:.1}s", t.elapsed().as_secs_f64());
    let (c5, c5_admissible) = criterion5();
    let lines = vec![
        criterion1(&rep689),
        criterion2(&rep689),
        criterion3(&rep689),
        criterion4(&rep689, &rep12),
        c5,
        criterion6(),
        criterion7(&rep689),
        criterion8(&[&rep689, &rep12, &rep40]),
        criterion9(),
    ];
    for l in &lines {
        say(l);
    }
    for (n, why) in KNOWN_DEVIATIONS {
        let _ = writeln!(std::io::stderr(), "known deviation, criterion {n}: {why}");
    }
    let unexpected: Vec<u32> =
        lines.iter().filter(|l| !l.pass && !KNOWN_DEVIATIONS.iter().any(|(n, _)| *n == l.n)).map(|l| l.n).collect();
    assert!(unexpected.is_empty(), "failing criteria: {unexpected:?}");
    assert!(c5_admissible, "interpolation fails at an admissible weight");
    // a deviation that starts passing should be removed from the list
    for (n, _) in KNOWN_DEVIATIONS {
        assert!(!lines[*n as usize - 1].pass, "criterion {n} now passes; drop it from KNOWN_DEVIATIONS");
    }
}
