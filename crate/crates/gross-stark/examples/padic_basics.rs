//! p-adic numbers and the unramified quadratic extension: logarithm,
//! exponential, Teichmuller lifts and rational reconstruction.
//!
//! cargo run --example padic_basics

use gross_stark::padic::{default_bound, rational_reconstruct, PAdic, Unram};
use num_bigint::BigInt;
use num_rational::BigRational;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (p, prec) = (3, 12);
    let q = BigRational::new(BigInt::from(-22), BigInt::from(7));
    let x = PAdic::from_rational(p, &q, prec);
    println!("-22/7 in Q_3 = {x}");
    println!("omega(x) = {}, log x = {}", x.teichmuller()?, x.log()?);
    let z = PAdic::from_i64(p, 6, prec);
    println!("exp(6) = {}, log exp 6 = {}", z.exp()?, z.exp()?.log()?);

    let modulus = BigInt::from(p).pow(prec as u32);
    let back = rational_reconstruct(&x.residue().expect("integral"), &modulus, &default_bound(&modulus));
    println!("reconstructed: {}", back.map(|b| b.to_string()).unwrap_or("none".into()));

    // 3 is inert in Q(sqrt 689), so Q_3(sqrt 689) is the unramified quadratic extension
    let u = Unram::from_ints(3, &BigInt::from(2), &BigInt::from(1), 689, prec)?;
    let w = u.teichmuller()?;
    println!("u = 2 + sqrt 689 = {u}");
    println!("  conjugate {}  norm {}  trace {}", u.conjugate(), u.norm(), u.trace());
    println!("  Teichmuller lift {w}, w^8 = 1: {}", w.pow(8).eq_at_precision(&Unram::one(3, 689, prec)));
    println!("  log u = {}, Tr log u = log N u: {}", u.log()?, u.log()?.trace().eq_at_precision(&u.norm().log()?));
    Ok(())
}
