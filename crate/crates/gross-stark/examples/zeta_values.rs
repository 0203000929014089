//! Exact partial zeta values at non-positive integers from a Shintani cone
//! decomposition, checked against the Dirichlet L-function product.
//!
//! cargo run --example zeta_values -- 12

use gross_stark::quadfield::{totally_positive_generator, NarrowClassGroup};
use gross_stark::zeta::{dirichlet_oracle, zeta_of_class};
use num_rational::BigRational;
use num_traits::Zero;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let disc: i64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let g = NarrowClassGroup::new(disc)?;
    println!("Q(sqrt {disc}), h+ = {}, eps_+ = {}", g.order(), totally_positive_generator(disc)?);

    for f in &g.forms {
        let vals: Vec<String> = (1..=3).map(|k| zeta_of_class(f, k).map(|z| z.to_string())).collect::<Result<_, _>>()?;
        println!("  {:<12} zeta(0), zeta(-1), zeta(-2) = {}", f.to_string(), vals.join(", "));
    }

    // summing over classes must give zeta_Q(1-k) L(1-k, chi_D)
    for k in 1..=3 {
        let mut sum = BigRational::zero();
        for f in &g.forms {
            sum += zeta_of_class(f, k)?;
        }
        let oracle = dirichlet_oracle(disc, k);
        println!("s = {:>2}: class sum {sum}, Dirichlet product {oracle}, agree {}", 1 - k as i64, sum == oracle);
        assert_eq!(sum, oracle);
    }
    Ok(())
}
