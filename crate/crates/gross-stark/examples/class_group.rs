//! Narrow class group of a real quadratic field: reduced forms, orders,
//! Gauss composition and the forms-to-ideals correspondence.
//!
//! cargo run --example class_group -- 689

use gross_stark::quadfield::{form_to_ideal, fundamental_unit, gauss_compose, ideal_to_form, NarrowClassGroup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let disc: i64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(689);
    let g = NarrowClassGroup::new(disc)?;
    let (eps, norm) = fundamental_unit(disc)?;
    println!("Q(sqrt {disc}): fundamental unit {eps} of norm {norm}");
    println!("h+ = {}, cyclic {}, {} classes of order <= 2", g.order(), g.is_cyclic(), g.two_torsion_count());

    for (i, f) in g.forms.iter().enumerate() {
        let back = ideal_to_form(&form_to_ideal(f));
        assert_eq!(g.index_of(&back), i, "ideal round trip");
        let inv = g.forms[g.inverse(i)];
        println!("  {f:<14} order {}  inverse {inv}", g.orders[i]);
    }

    // composing any class with a generator walks through the group
    if let Some(gen) = g.forms.iter().zip(&g.orders).find(|(_, &o)| o == g.order()).map(|(f, _)| *f) {
        let mut x = gen;
        let mut walk = vec![x];
        while g.index_of(&x) != g.identity {
            x = gauss_compose(&x, &gen)?;
            walk.push(x);
        }
        let names: Vec<String> = walk.iter().map(|f| g.forms[g.index_of(f)].to_string()).collect();
        println!("powers of {gen}: {}", names.join(" -> "));
    }
    Ok(())
}
