//! Published data for the discriminant 689 at p = 3.

#![allow(dead_code)]

use gross_stark::padic::Unram;
use gross_stark::quadfield::Form;
use num_bigint::BigInt;

pub struct TableRow {
    pub form: Form,
    pub order: usize,
    pub valuation: i64,
    pub x: &'static str,
    pub y: &'static str,
}

/// Units `3^v (x + y sqrt 689)`, in the published row order.
pub const TABLE_689: [TableRow; 8] = [
    TableRow { form: Form::new(-20, 17, 5), order: 8, valuation: -2, x: "7283498230698546457", y: "20427811426324513506" },
    TableRow { form: Form::new(-10, 7, 16), order: 2, valuation: 4, x: "28799930840163216397", y: "0" },
    TableRow { form: Form::new(-10, 17, 10), order: 4, valuation: 0, x: "25613292858296352193", y: "34405602800800679412" },
    TableRow { form: Form::new(-5, 17, 20), order: 8, valuation: 2, x: "28389335835840796072", y: "1041259434467889369" },
    TableRow { form: Form::new(5, 17, -20), order: 8, valuation: -2, x: "7283498230698546457", y: "16045184950846272897" },
    TableRow { form: Form::new(10, 7, -16), order: 1, valuation: -4, x: "23094469614450736543", y: "0" },
    TableRow { form: Form::new(10, 17, -10), order: 4, valuation: 0, x: "25613292858296352193", y: "2067393576370106991" },
    TableRow { form: Form::new(20, 17, -5), order: 8, valuation: 2, x: "28389335835840796072", y: "35431736942702897034" },
];

/// The tabulated units to 36 digits, valuation included.
pub fn table_units() -> Vec<Unram> {
    TABLE_689
        .iter()
        .map(|t| {
            let x: BigInt = t.x.parse().unwrap();
            let y: BigInt = t.y.parse().unwrap();
            let u = Unram::from_ints(3, &x, &y, 689, 36).unwrap();
            let pv = gross_stark::padic::PAdic::from_parts(3, t.valuation, BigInt::from(1), 36 + t.valuation);
            u.scale(&pv)
        })
        .collect()
}

/// `6561 x^8 - 11340 x^7 - 882 x^6 + 4333 x^5 + 2665 x^4 + ...`, constant term first.
pub fn reference_polynomial() -> Vec<BigInt> {
    [6561i64, -11340, -882, 4333, 2665, 4333, -882, -11340, 6561].iter().map(|&c| BigInt::from(c)).collect()
}
