//! Computes the Gross-Stark units of Q(sqrt 689) at p = 3 and compares them
//! with the published table of eight units 3^v (x + y sqrt 689).
//! Level 8 certifies five digits and takes a few minutes; lower levels are quicker.
//!
//! cargo run --release --example table_689 -- 6

use gross_stark::gsunit::{compare_table_logs, run_pipeline, units_agree, PipelineConfig};
use gross_stark::padic::{PAdic, Unram};
use gross_stark::quadfield::Form;
use num_bigint::BigInt;

/// `(class, valuation, x, y)` in the published row order.
const TABLE: [(Form, i64, &str, &str); 8] = [
    (Form::new(-20, 17, 5), -2, "7283498230698546457", "20427811426324513506"),
    (Form::new(-10, 7, 16), 4, "28799930840163216397", "0"),
    (Form::new(-10, 17, 10), 0, "25613292858296352193", "34405602800800679412"),
    (Form::new(-5, 17, 20), 2, "28389335835840796072", "1041259434467889369"),
    (Form::new(5, 17, -20), -2, "7283498230698546457", "16045184950846272897"),
    (Form::new(10, 7, -16), -4, "23094469614450736543", "0"),
    (Form::new(10, 17, -10), 0, "25613292858296352193", "2067393576370106991"),
    (Form::new(20, 17, -5), 2, "28389335835840796072", "35431736942702897034"),
];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let level: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(6);
    let cfg = PipelineConfig::new(689, 3, level);
    let rep = run_pipeline(&cfg, &mut |s| eprintln!("{s}"))?;
    println!("level {level}: certified mod 3^{}", rep.kappa);

    // table rows reordered to match the class group, as 3-adic numbers
    let mut units = vec![None; rep.records.len()];
    for (f, v, x, y) in TABLE {
        let u = Unram::from_ints(3, &x.parse::<BigInt>()?, &y.parse::<BigInt>()?, 689, 36)?;
        units[rep.group.index_of(&f)] = Some((v, u.scale(&PAdic::from_parts(3, v, BigInt::from(1), 36 + v))));
    }
    let units: Vec<Unram> = units.into_iter().map(|u| u.expect("every class tabulated").1).collect();
    let logs = compare_table_logs(&rep, &units, rep.kappa)?;

    for (rec, (u, log_ok)) in rep.records.iter().zip(units.iter().zip(&logs)) {
        let computed = rec.unit.as_ref().expect("unit reconstructed");
        println!(
            "{:<12} order {}  valuation {:>2} (table {:>2})  log agrees {}  unit agrees {}",
            rec.class.to_string(),
            rec.order,
            rec.valuation.unwrap_or(i64::MIN),
            u.valuation(),
            log_ok,
            units_agree(computed, u, rep.kappa),
        );
    }
    Ok(())
}
