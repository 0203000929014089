//! Algebraic recognition of the computed units: first by bounding the height
//! of their minimal polynomial, then against the published degree-8 polynomial
//! for Q(sqrt 689), p = 3, checking that every unit is a root of it.
//!
//! cargo run --release --example recognize_units -- 6

use gross_stark::gsunit::{recognize_against, root_check, run_pipeline, PipelineConfig};
use num_bigint::BigInt;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let level: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let rep = run_pipeline(&PipelineConfig::new(689, 3, level), &mut |s| eprintln!("{s}"))?;
    println!("bounded height: {:?}, {}", rep.recognition.status, rep.recognition.note);
    match &rep.polynomial {
        Ok(c) => println!("  minimal polynomial {c:?}"),
        Err(e) => println!("  no polynomial: {e}"),
    }

    // constant term first
    let reference: Vec<BigInt> =
        [6561i64, -11340, -882, 4333, 2665, 4333, -882, -11340, 6561].iter().map(|&c| BigInt::from(c)).collect();
    let mut rec = rep.clone();
    recognize_against(&mut rec, &reference)?;
    println!("against the reference: {:?}, {} candidate tuples", rec.recognition.status, rec.recognition.matches);
    for r in &rec.records {
        let u = r.unit.as_ref().expect("unit reconstructed");
        println!("  {:<12} k {:>2}  root mod 3^{}: {}  u = {u}", r.class.to_string(), r.k, rec.kappa, root_check(&reference, u, rec.kappa)?);
    }
    Ok(())
}
