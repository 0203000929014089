//! p-adic L-values and the derivative at `s = 0` as Riemann sums against a
//! smoothed Eisenstein measure, with certified precision.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::measure::EisensteinMeasure;
use crate::padic::{PAdic, PadicError};
use crate::quadfield::Form;
use crate::zeta::{class_zeta, ZetaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LfunError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error("s = {0} is not of the form 1 - k with k >= 1")]
    BadS(i64),
    #[error("dividing by 1 - {c}^2 leaves no certified digits")]
    PrecisionCollapse { c: i64 },
}

/// What an `LpResult` is a value of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpKind {
    At(i64),
    Derivative0,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpResult {
    /// Correct modulo `p^kappa`.
    pub value: PAdic,
    pub kappa: i64,
    pub kind: LpKind,
    pub disc: i64,
    pub p: u64,
    pub class: Form,
    pub level: u32,
    /// Smoothing still applied to the value; `None` once desmoothed.
    pub c: Option<i64>,
}

impl LpResult {
    pub fn to_json(&self) -> Value {
        let kind = match self.kind {
            LpKind::At(s) => json!({"s": s}),
            LpKind::Derivative0 => json!("derivative at 0"),
        };
        json!({
            "value": self.value.to_string(),
            "certified_mod": format!("{}^{}", self.p, self.kappa),
            "kind": kind,
            "disc": self.disc,
            "p": self.p,
            "class": self.class.to_string(),
            "level": self.level,
            "smoothing": self.c,
        })
    }

    /// Agreement modulo `p^k` for `k` the smaller certified precision.
    pub fn agrees_with(&self, other: &LpResult) -> bool {
        let k = self.kappa.min(other.kappa);
        self.value.with_precision(k).eq_at_precision(&other.value.with_precision(k))
    }
}

/// Certified digits of a Riemann sum at level `r`.
pub fn kappa_for_level(level: u32) -> i64 {
    level as i64 - 2
}

fn working_prec(m: &EisensteinMeasure) -> i64 {
    m.spec.level as i64 + 8
}

fn result(m: &EisensteinMeasure, value: PAdic, kind: LpKind) -> LpResult {
    let kappa = kappa_for_level(m.spec.level);
    LpResult {
        value: value.with_precision(kappa),
        kappa,
        kind,
        disc: m.spec.disc,
        p: m.spec.p,
        class: m.spec.class,
        level: m.spec.level,
        c: Some(m.spec.c),
    }
}

/// `N(a) N(c tau^t x) = c^2 Q(x)` for a ball representative.
fn weight(m: &EisensteinMeasure, x: (i64, i64), prec: i64) -> PAdic {
    let c2 = BigInt::from(m.spec.c * m.spec.c);
    PAdic::from_bigint(m.spec.p, &(c2 * m.ideal_norm(x)), prec)
}

/// `<y> = y / omega(y)` for a `p`-adic unit.
fn angle(y: &PAdic) -> Result<PAdic, PadicError> {
    y.div(&y.teichmuller()?)
}

/// `L_p(s) = sum lambda(ball) <c^2 Q(x_ball)>^(-s)` for `s = 1 - k`, `k >= 1`.
pub fn lp_at(m: &EisensteinMeasure, s: i64) -> Result<LpResult, LfunError> {
    if s > 0 {
        return Err(LfunError::BadS(s));
    }
    let (p, prec) = (m.spec.p, working_prec(m));
    let mut acc = PAdic::zero(p, prec);
    for b in &m.balls {
        if b.value.is_zero() {
            continue;
        }
        let w = angle(&weight(m, b.x, prec))?.pow((-s) as u64);
        acc = acc.add(&PAdic::from_rational(p, &b.value, prec).mul(&w));
    }
    Ok(result(m, acc, LpKind::At(s)))
}

/// `L_p'(0) = -sum lambda(ball) log_p(c^2 Q(x_ball))`.
pub fn lp_derivative0(m: &EisensteinMeasure) -> Result<LpResult, LfunError> {
    let (p, prec) = (m.spec.p, working_prec(m));
    let mut acc = PAdic::zero(p, prec);
    for b in &m.balls {
        if b.value.is_zero() {
            continue;
        }
        let lg = weight(m, b.x, prec).log()?;
        acc = acc.sub(&PAdic::from_rational(p, &b.value, prec).mul(&lg));
    }
    Ok(result(m, acc, LpKind::Derivative0))
}

/// Divides a `c`-smoothed value by `1 - c^2`, losing `v_p(1 - c^2)` digits.
pub fn desmooth(r: &LpResult, c: i64) -> Result<LpResult, LfunError> {
    let f = BigInt::from(1 - c * c);
    if f.is_zero() {
        return Err(LfunError::PrecisionCollapse { c });
    }
    let fp = PAdic::from_bigint(r.p, &f, r.kappa + 64);
    let loss = fp.valuation();
    let kappa = r.kappa - loss;
    if kappa <= 0 {
        return Err(LfunError::PrecisionCollapse { c });
    }
    let value = r.value.div(&fp)?.with_precision(kappa);
    Ok(LpResult { value, kappa, c: None, ..r.clone() })
}

/// Multiplies by `1 - c^2`; the inverse of `desmooth` on values.
pub fn smooth(r: &LpResult, c: i64) -> LpResult {
    let fp = PAdic::from_i64(r.p, 1 - c * c, r.kappa + 64);
    LpResult { value: r.value.mul(&fp).with_precision(r.kappa), c: Some(c), ..r.clone() }
}

/// Exact interpolation target `(1 - c^(2k)) (1 - p^(2(k-1))) zeta([a], 1 - k)`.
pub fn interpolation_target(m: &EisensteinMeasure, k: usize) -> Result<BigRational, LfunError> {
    let z = class_zeta(&m.form, k)?;
    let big = |n: i64| BigRational::from_integer(BigInt::from(n));
    let ck = num_traits::pow(big(m.spec.c), 2 * k);
    let pk = num_traits::pow(big(m.spec.p as i64), 2 * (k - 1));
    Ok((big(1) - ck) * (big(1) - pk) * z)
}

/// Whether `lp_at(m, 1 - k)` matches the exact target modulo `p^kappa`,
/// together with the valuation of the difference.
pub fn interpolation_check(m: &EisensteinMeasure, k: usize) -> Result<(bool, i64, LpResult), LfunError> {
    let lp = lp_at(m, 1 - k as i64)?;
    let target = interpolation_target(m, k)?;
    let t = PAdic::from_rational(m.spec.p, &target, lp.kappa);
    let diff = lp.value.sub(&t);
    let v = if diff.is_zero() { lp.kappa } else { diff.valuation() };
    Ok((v >= lp.kappa, v, lp))
}

/// `[F(mu_2p) : F]` for `F = Q(sqrt disc)` and odd `p`: `p - 1`, halved when
/// `F` is the quadratic subfield of `Q(mu_p)`.
pub fn cyclotomic_degree(disc: i64, p: u64) -> u64 {
    let pstar = if p % 4 == 1 { p as i64 } else { -(p as i64) };
    if disc == pstar {
        (p - 1) / 2
    } else {
        p - 1
    }
}

/// Whether `lp_at` at `s = 1 - k` is predicted to interpolate the zeta value:
/// `k >= 1` and `k = 1 mod [F(mu_2p) : F]`.
pub fn interpolation_admissible(disc: i64, p: u64, k: usize) -> bool {
    k >= 1 && (k as u64 - 1) % cyclotomic_degree(disc, p) == 0
}

/// Smallest admissible `k > 1`.
pub fn first_admissible_k(disc: i64, p: u64) -> usize {
    1 + cyclotomic_degree(disc, p) as usize
}

/// `p`-adic valuation of a nonzero rational.
pub fn rational_valuation(p: u64, q: &BigRational) -> i64 {
    let pb = BigInt::from(p);
    let count = |n: &BigInt| {
        let mut n = n.abs();
        let mut v = 0;
        while !n.is_zero() && n.is_multiple_of(&pb) {
            n /= &pb;
            v += 1;
        }
        v
    };
    count(q.numer()) - count(q.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_measure, MeasureSpec};

    fn m689(r: u32) -> EisensteinMeasure {
        build_measure(&MeasureSpec::new(689, 3, 5, Form::new(10, 7, -16), r)).unwrap()
    }

    #[test]
    fn value_at_zero_vanishes() {
        let m = m689(3);
        let r = lp_at(&m, 0).unwrap();
        assert!(r.value.is_zero());
        assert_eq!(r.kappa, 1);
    }

    #[test]
    fn zero_measure_gives_zero() {
        let m = m689(2).zeroed();
        assert!(lp_derivative0(&m).unwrap().value.is_zero());
    }

    #[test]
    fn desmooth_round_trip() {
        let m = m689(4);
        let d = lp_derivative0(&m).unwrap();
        assert!(smooth(&desmooth(&d, 5).unwrap(), 5).agrees_with(&d));
        assert_eq!(desmooth(&d, 5).unwrap().kappa, d.kappa - 1);
        let z = LpResult { value: PAdic::zero(3, 5), ..d.clone() };
        assert!(desmooth(&z, 5).unwrap().value.is_zero());
    }

    #[test]
    fn interpolation_at_minus_two() {
        let (ok, _, _) = interpolation_check(&m689(4), 3).unwrap();
        assert!(ok);
    }

    #[test]
    fn admissible_weights() {
        assert!(interpolation_admissible(689, 3, 3));
        assert!(!interpolation_admissible(689, 3, 2));
        assert!(!interpolation_admissible(12, 5, 3));
        assert!(interpolation_admissible(12, 5, 5));
        assert_eq!(first_admissible_k(5, 5), 3);
        assert_eq!(first_admissible_k(12, 5), 5);
    }

    #[test]
    fn inadmissible_weight_misses_for_p5() {
        let m = build_measure(&MeasureSpec::new(12, 5, 7, Form::principal(12), 4)).unwrap();
        assert!(!interpolation_check(&m, 3).unwrap().0);
        assert!(interpolation_check(&m, 5).unwrap().0);
    }

    #[test]
    fn levels_agree() {
        let a = lp_derivative0(&m689(3)).unwrap();
        let b = lp_derivative0(&m689(4)).unwrap();
        assert_eq!(b.kappa, a.kappa + 1);
        assert!(a.agrees_with(&b));
    }
}
