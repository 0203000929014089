//! Partial p-adic L-function of each class: values at s = 1 - k against the
//! exact Euler-factor-corrected zeta values, and the derivative at s = 0
//! computed with two smoothings.
//!
//! cargo run --example lp_interpolation -- 12 5 4

use gross_stark::lfun::{
    desmooth, first_admissible_k, interpolation_admissible, interpolation_check, lp_at, lp_derivative0,
};
use gross_stark::measure::{build_measure, MeasureSpec};
use gross_stark::quadfield::NarrowClassGroup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let disc: i64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(12);
    let p: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let r: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let (c, d) = gross_stark::gsunit::default_smoothings(p);
    let g = NarrowClassGroup::new(disc)?;
    let k_adm = first_admissible_k(disc, p);
    println!("disc {disc} p {p} level {r}, smoothings {c} and {d}; first admissible weight k = {k_adm}");

    for f in &g.forms {
        let mc = build_measure(&MeasureSpec::new(disc, p, c, *f, r))?;
        let md = build_measure(&MeasureSpec::new(disc, p, d, *f, r))?;
        println!("class {f}: L_p(0) = {}", lp_at(&mc, 0)?.value);
        for k in [1, 2, 3, k_adm] {
            let (ok, v, lp) = interpolation_check(&mc, k)?;
            let adm = interpolation_admissible(disc, p, k);
            println!("  s = {:>2}: {}  matches {ok} (agreement p^{v}, admissible {adm})", 1 - k as i64, lp.value);
        }
        let lc = desmooth(&lp_derivative0(&mc)?, c)?;
        let ld = desmooth(&lp_derivative0(&md)?, d)?;
        println!("  L_p'(0) via c = {c}: {}\n  L_p'(0) via d = {d}: {}\n  agree: {}", lc.value, ld.value, lc.agrees_with(&ld));
    }
    Ok(())
}
