//! The Shintani-type integral J[tau] of a measure with mass zero, and the
//! identity Tr J = -L_p'(0) relating it to the p-adic L-function.
//!
//! cargo run --example trace_law -- 12 5 4

use gross_stark::gsunit::st_integral;
use gross_stark::lfun::lp_derivative0;
use gross_stark::measure::{build_measure, MeasureSpec};
use gross_stark::quadfield::NarrowClassGroup;
use gross_stark::zeta::ShintaniDomain;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let disc: i64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(12);
    let p: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let r: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let c = gross_stark::gsunit::default_smoothings(p).0;

    for f in &NarrowClassGroup::new(disc)?.forms {
        let m = build_measure(&MeasureSpec::new(disc, p, c, *f, r))?;
        let st = st_integral(&m)?;
        let lp = lp_derivative0(&m)?;
        let k = st.kappa.min(lp.kappa);
        let residual = st.value.trace().add(&lp.value).with_precision(k);
        println!("class {f} (working form {})", m.form);
        println!("  J[tau]   = {}", st.value);
        println!("  Tr J     = {}", st.value.trace().with_precision(k));
        println!("  -L_p'(0) = {}", lp.value.neg().with_precision(k));
        println!("  trace law mod {p}^{k}: {}", residual.is_zero());

        // replacing tau by eps_+ tau permutes the balls and leaves J unchanged
        let eps = ShintaniDomain::for_form(&m.form)?.eps;
        let moved = gross_stark::gsunit::st_integral_scaled(&m, &eps)?;
        println!("  invariant under eps_+ = {eps}: {}", moved.value.eq_at_precision(&st.value));
    }
    Ok(())
}
