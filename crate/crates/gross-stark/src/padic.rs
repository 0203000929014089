//! Finite-precision arithmetic in `Q_p` and in the unramified quadratic
//! extension `Q_p(sqrt D)` for an inert odd prime `p`.
//!
//! A [`PAdic`] is `p^v * u + O(p^N)` with `u` a unit known modulo `p^(N - v)`.
//! Every operation returns the precision it can actually certify; nothing is
//! ever padded with invented digits.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("zero input")]
    ZeroInput,
    #[error("argument has valuation {0}, expected at least 1")]
    Domain(i64),
    #[error("{p} divides the discriminant {disc} (ramified)")]
    Ramified { disc: i64, p: u64 },
    #[error("{p} is split in Q(sqrt {disc})")]
    Split { disc: i64, p: u64 },
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("operands live over different primes or fields")]
    Mismatch,
}

/// Deterministic primality test for the small primes used as `p`, `c`, `ell`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Legendre symbol `(a | p)` for an odd prime `p`.
pub fn legendre(a: i64, p: u64) -> i32 {
    let pp = p as i64;
    let a = a.rem_euclid(pp) as u64;
    if a == 0 {
        return 0;
    }
    let r = BigInt::from(a).modpow(&BigInt::from((p - 1) / 2), &BigInt::from(p));
    if r.is_one() {
        1
    } else {
        -1
    }
}

/// True iff `p` is inert in `Q(sqrt disc)`. Ramified and non-prime inputs are errors.
pub fn inert_check(disc: i64, p: u64) -> Result<bool, PadicError> {
    if p == 2 || !is_prime(p) {
        return Err(PadicError::NotOddPrime(p));
    }
    match legendre(disc, p) {
        0 => Err(PadicError::Ramified { disc, p }),
        s => Ok(s == -1),
    }
}

pub(crate) fn p_pow(p: u64, e: i64) -> BigInt {
    debug_assert!(e >= 0);
    num_traits::pow(BigInt::from(p), e as usize)
}

/// `v_p(n)` for nonzero `n`.
pub fn val_bigint(p: u64, n: &BigInt) -> i64 {
    assert!(!n.is_zero());
    let pb = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Element of `Q_p` at finite absolute precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdic {
    p: u64,
    val: i64,
    unit: BigInt,
    prec: i64,
}

impl PAdic {
    fn normalize(p: u64, val: i64, n: BigInt, prec: i64) -> PAdic {
        if val >= prec {
            return PAdic::zero(p, prec);
        }
        let m = p_pow(p, prec - val);
        let mut n = n.mod_floor(&m);
        if n.is_zero() {
            return PAdic::zero(p, prec);
        }
        let mut val = val;
        let pb = BigInt::from(p);
        loop {
            let (q, r) = n.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            n = q;
            val += 1;
        }
        let m = p_pow(p, prec - val);
        PAdic { p, val, unit: n.mod_floor(&m), prec }
    }

    pub fn zero(p: u64, prec: i64) -> PAdic {
        PAdic { p, val: prec, unit: BigInt::zero(), prec }
    }

    pub fn one(p: u64, prec: i64) -> PAdic {
        PAdic::from_bigint(p, &BigInt::one(), prec)
    }

    pub fn from_i64(p: u64, n: i64, prec: i64) -> PAdic {
        PAdic::from_bigint(p, &BigInt::from(n), prec)
    }

    pub fn from_bigint(p: u64, n: &BigInt, prec: i64) -> PAdic {
        PAdic::normalize(p, 0, n.clone(), prec)
    }

    /// `p^val * unit + O(p^prec)`; `unit` need not be reduced or coprime to `p`.
    pub fn from_parts(p: u64, val: i64, unit: BigInt, prec: i64) -> PAdic {
        PAdic::normalize(p, val, unit, prec)
    }

    pub fn from_rational(p: u64, q: &BigRational, prec: i64) -> PAdic {
        if q.is_zero() {
            return PAdic::zero(p, prec);
        }
        let den = q.denom();
        let vd = val_bigint(p, den);
        let den_unit = den / p_pow(p, vd);
        let vn = val_bigint(p, q.numer());
        let num_unit = q.numer() / p_pow(p, vn);
        let val = vn - vd;
        if val >= prec {
            return PAdic::zero(p, prec);
        }
        let m = p_pow(p, prec - val);
        let inv = mod_inverse(&den_unit, &m).expect("unit denominator");
        PAdic::normalize(p, val, num_unit * inv, prec)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    /// Absolute precision `N`: the value is known modulo `p^N`.
    pub fn precision(&self) -> i64 {
        self.prec
    }

    /// Valuation; for a zero element this is its precision.
    pub fn valuation(&self) -> i64 {
        self.val
    }

    pub fn relative_precision(&self) -> i64 {
        self.prec - self.val
    }

    pub fn unit(&self) -> &BigInt {
        &self.unit
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Exact multiplication by `p^k`.
    pub fn shift(&self, k: i64) -> PAdic {
        PAdic { p: self.p, val: self.val + k, unit: self.unit.clone(), prec: self.prec + k }
    }

    pub fn with_precision(&self, prec: i64) -> PAdic {
        let prec = prec.min(self.prec);
        PAdic::normalize(self.p, self.val, self.unit.clone(), prec)
    }

    fn check(&self, o: &PAdic) {
        assert_eq!(self.p, o.p, "p-adic operands over different primes");
    }

    pub fn add(&self, o: &PAdic) -> PAdic {
        self.check(o);
        let prec = self.prec.min(o.prec);
        let m = self.val.min(o.val).min(prec);
        let a = &self.unit * p_pow(self.p, (self.val - m).min(prec - m));
        let b = &o.unit * p_pow(self.p, (o.val - m).min(prec - m));
        PAdic::normalize(self.p, m, a + b, prec)
    }

    pub fn neg(&self) -> PAdic {
        PAdic::normalize(self.p, self.val, -&self.unit, self.prec)
    }

    pub fn sub(&self, o: &PAdic) -> PAdic {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &PAdic) -> PAdic {
        self.check(o);
        match (self.is_zero(), o.is_zero()) {
            (true, true) => PAdic::zero(self.p, self.prec + o.prec),
            (true, false) => PAdic::zero(self.p, self.prec + o.val),
            (false, true) => PAdic::zero(self.p, o.prec + self.val),
            (false, false) => {
                let val = self.val + o.val;
                let rel = self.relative_precision().min(o.relative_precision());
                PAdic::normalize(self.p, val, &self.unit * &o.unit, val + rel)
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> PAdic {
        if n == 0 {
            return PAdic::zero(self.p, self.prec);
        }
        let f = PAdic::from_i64(self.p, n, self.prec + 64);
        self.mul(&f)
    }

    pub fn inv(&self) -> Result<PAdic, PadicError> {
        if self.is_zero() {
            return Err(PadicError::ZeroInput);
        }
        let rel = self.relative_precision();
        let m = p_pow(self.p, rel);
        let u = mod_inverse(&self.unit, &m).expect("unit");
        Ok(PAdic::normalize(self.p, -self.val, u, rel - self.val))
    }

    pub fn div(&self, o: &PAdic) -> Result<PAdic, PadicError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: u64) -> PAdic {
        if e == 0 {
            return PAdic::one(self.p, self.relative_precision().max(0));
        }
        if self.is_zero() {
            return PAdic::zero(self.p, self.prec.saturating_mul(e as i64).max(self.prec));
        }
        let rel = self.relative_precision();
        let m = p_pow(self.p, rel);
        let u = self.unit.modpow(&BigInt::from(e), &m);
        let val = self.val * e as i64;
        PAdic::normalize(self.p, val, u, val + rel)
    }

    /// The unit `p^(-v) x`.
    pub fn unit_part(&self) -> Result<PAdic, PadicError> {
        if self.is_zero() {
            return Err(PadicError::ZeroInput);
        }
        Ok(PAdic::normalize(self.p, 0, self.unit.clone(), self.relative_precision()))
    }

    /// Equal modulo the smaller of the two precisions.
    pub fn eq_at_precision(&self, o: &PAdic) -> bool {
        self.sub(o).is_zero()
    }

    /// Integer representative in `[0, p^N)` of an element with `v >= 0`.
    pub fn residue(&self) -> Option<BigInt> {
        if self.val < 0 {
            return None;
        }
        if self.is_zero() {
            return Some(BigInt::zero());
        }
        Some(&self.unit * p_pow(self.p, self.val))
    }

    /// Base-`p` digits of the unit, least significant first.
    pub fn digits(&self) -> Vec<u64> {
        let pb = BigInt::from(self.p);
        let mut n = self.unit.clone();
        let mut out = Vec::new();
        for _ in 0..self.relative_precision().max(0) {
            let (q, r) = n.div_rem(&pb);
            out.push(r.to_u64().unwrap());
            n = q;
        }
        out
    }

    fn body(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let ds: Vec<String> = self.digits().iter().map(|d| d.to_string()).collect();
        format!("{}^{} * ({})", self.p, self.val, ds.join(" "))
    }

    /// Iwasawa logarithm: kills `p` and roots of unity.
    pub fn log(&self) -> Result<PAdic, PadicError> {
        let u = self.unit_part()?;
        let y = u.pow(self.p - 1);
        let t = y.sub(&PAdic::one(self.p, y.prec));
        let s = log_series(&t, |x, y| x.mul(y), |x, y| x.add(y), |x, k| x.div_int(k));
        s.div_int(self.p as i64 - 1)
            .map_err(|_| PadicError::ZeroInput)
    }

    pub fn exp(&self) -> Result<PAdic, PadicError> {
        if !self.is_zero() && self.val < 1 {
            return Err(PadicError::Domain(self.val));
        }
        let one = PAdic::one(self.p, self.prec);
        Ok(exp_series(self, one, |x, y| x.mul(y), |x, y| x.add(y), |x, k| x.div_int(k)))
    }

    /// Root of unity of order dividing `p - 1` congruent to the unit part mod `p`.
    pub fn teichmuller(&self) -> Result<PAdic, PadicError> {
        let mut y = self.unit_part()?;
        for _ in 0..y.prec {
            y = y.pow(self.p);
        }
        Ok(y)
    }

    fn div_int(&self, k: i64) -> Result<PAdic, PadicError> {
        let f = PAdic::from_i64(self.p, k, self.prec + 64);
        self.div(&f)
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({}^{})", self.body(), self.p, self.prec)
    }
}

/// `sum_{k>=1} (-1)^(k+1) t^k / k`, stopping once every further term vanishes
/// at the precision of `t`.
fn log_series<T: Clone>(
    t: &T,
    mul: impl Fn(&T, &T) -> T,
    add: impl Fn(&T, &T) -> T,
    div: impl Fn(&T, i64) -> Result<T, PadicError>,
) -> T
where
    T: HasPrec,
{
    let target = t.prec();
    let p = t.prime() as i64;
    let mut sum = t.clone();
    let mut pow = t.clone();
    let mut k = 1i64;
    loop {
        k += 1;
        if k - ilog(p, k) > target + 1 {
            break;
        }
        pow = mul(&pow, t);
        let mut term = div(&pow, k).expect("nonzero k");
        if k % 2 == 0 {
            term = term.negate();
        }
        sum = add(&sum, &term);
    }
    sum
}

fn exp_series<T: Clone>(
    x: &T,
    one: T,
    mul: impl Fn(&T, &T) -> T,
    add: impl Fn(&T, &T) -> T,
    div: impl Fn(&T, i64) -> Result<T, PadicError>,
) -> T
where
    T: HasPrec,
{
    let target = x.prec();
    let p = x.prime() as i64;
    let mut sum = one;
    let mut term = sum.clone();
    let mut k = 0i64;
    // v(x^k / k!) >= k - (k - 1)/(p - 1)
    while k - (k - 1).max(0) / (p - 1) <= target + 1 || k < 2 {
        k += 1;
        term = div(&mul(&term, x), k).expect("nonzero k");
        sum = add(&sum, &term);
    }
    sum
}

fn ilog(p: i64, k: i64) -> i64 {
    let mut v = 0;
    let mut q = p;
    while q <= k {
        q *= p;
        v += 1;
    }
    v
}

trait HasPrec {
    fn prec(&self) -> i64;
    fn prime(&self) -> u64;
    fn negate(&self) -> Self;
}

impl HasPrec for PAdic {
    fn prec(&self) -> i64 {
        self.prec
    }
    fn prime(&self) -> u64 {
        self.p
    }
    fn negate(&self) -> Self {
        self.neg()
    }
}

impl HasPrec for Unram {
    fn prec(&self) -> i64 {
        self.precision()
    }
    fn prime(&self) -> u64 {
        self.a.p
    }
    fn negate(&self) -> Self {
        self.neg()
    }
}

/// `x + y sqrt(D)` in the unramified quadratic extension of `Q_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unram {
    pub a: PAdic,
    pub b: PAdic,
    disc: i64,
}

impl Unram {
    /// Rejects `(D, p)` unless `p` is inert in `Q(sqrt D)`.
    pub fn new(a: PAdic, b: PAdic, disc: i64) -> Result<Unram, PadicError> {
        if a.p != b.p {
            return Err(PadicError::Mismatch);
        }
        if !inert_check(disc, a.p)? {
            return Err(PadicError::Split { disc, p: a.p });
        }
        Ok(Unram { a, b, disc })
    }

    pub(crate) fn raw(a: PAdic, b: PAdic, disc: i64) -> Unram {
        Unram { a, b, disc }
    }

    pub fn from_padic(a: PAdic, disc: i64) -> Result<Unram, PadicError> {
        let b = PAdic::zero(a.p, a.prec);
        Unram::new(a, b, disc)
    }

    pub fn from_ints(p: u64, x: &BigInt, y: &BigInt, disc: i64, prec: i64) -> Result<Unram, PadicError> {
        Unram::new(PAdic::from_bigint(p, x, prec), PAdic::from_bigint(p, y, prec), disc)
    }

    pub fn from_rationals(
        p: u64,
        x: &BigRational,
        y: &BigRational,
        disc: i64,
        prec: i64,
    ) -> Result<Unram, PadicError> {
        Unram::new(PAdic::from_rational(p, x, prec), PAdic::from_rational(p, y, prec), disc)
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn prime(&self) -> u64 {
        self.a.p
    }

    pub fn precision(&self) -> i64 {
        self.a.prec.min(self.b.prec)
    }

    pub fn valuation(&self) -> i64 {
        self.a.val.min(self.b.val)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn with_precision(&self, prec: i64) -> Unram {
        Unram::raw(self.a.with_precision(prec), self.b.with_precision(prec), self.disc)
    }

    pub fn one(p: u64, disc: i64, prec: i64) -> Unram {
        Unram::raw(PAdic::one(p, prec), PAdic::zero(p, prec), disc)
    }

    fn check(&self, o: &Unram) {
        assert_eq!(self.disc, o.disc, "elements of different fields");
    }

    pub fn add(&self, o: &Unram) -> Unram {
        self.check(o);
        Unram::raw(self.a.add(&o.a), self.b.add(&o.b), self.disc)
    }

    pub fn sub(&self, o: &Unram) -> Unram {
        self.check(o);
        Unram::raw(self.a.sub(&o.a), self.b.sub(&o.b), self.disc)
    }

    pub fn neg(&self) -> Unram {
        Unram::raw(self.a.neg(), self.b.neg(), self.disc)
    }

    pub fn mul(&self, o: &Unram) -> Unram {
        self.check(o);
        let x = self.a.mul(&o.a).add(&self.b.mul(&o.b).mul_int(self.disc));
        let y = self.a.mul(&o.b).add(&self.b.mul(&o.a));
        Unram::raw(x, y, self.disc)
    }

    pub fn scale(&self, c: &PAdic) -> Unram {
        Unram::raw(self.a.mul(c), self.b.mul(c), self.disc)
    }

    pub fn mul_int(&self, n: i64) -> Unram {
        Unram::raw(self.a.mul_int(n), self.b.mul_int(n), self.disc)
    }

    /// Frobenius `sqrt D -> -sqrt D`.
    pub fn conjugate(&self) -> Unram {
        Unram::raw(self.a.clone(), self.b.neg(), self.disc)
    }

    pub fn trace(&self) -> PAdic {
        self.a.mul_int(2)
    }

    pub fn norm(&self) -> PAdic {
        self.a.mul(&self.a).sub(&self.b.mul(&self.b).mul_int(self.disc))
    }

    /// Fixed by Frobenius at the retained precision.
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn inv(&self) -> Result<Unram, PadicError> {
        if self.is_zero() {
            return Err(PadicError::ZeroInput);
        }
        let n = self.norm().inv()?;
        Ok(self.conjugate().scale(&n))
    }

    pub fn div(&self, o: &Unram) -> Result<Unram, PadicError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Unram {
        if e == 0 {
            let rel = self.precision() - self.valuation();
            return Unram::one(self.prime(), self.disc, rel.max(0));
        }
        let mut base = self.clone();
        let mut acc: Option<Unram> = None;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc.unwrap()
    }

    pub fn div_int(&self, k: i64) -> Result<Unram, PadicError> {
        let f = PAdic::from_i64(self.prime(), k, self.precision() + 64).inv()?;
        Ok(self.scale(&f))
    }

    /// `p^(-v) z`, a unit of the ring of integers.
    pub fn unit_part(&self) -> Result<Unram, PadicError> {
        if self.is_zero() {
            return Err(PadicError::ZeroInput);
        }
        let v = self.valuation();
        Ok(Unram::raw(self.a.shift(-v), self.b.shift(-v), self.disc))
    }

    pub fn log(&self) -> Result<Unram, PadicError> {
        let p = self.prime();
        let u = self.unit_part()?;
        let y = u.pow(p * p - 1);
        let t = y.sub(&Unram::one(p, self.disc, y.precision()));
        let s = log_series(&t, |x, y| x.mul(y), |x, y| x.add(y), |x, k| x.div_int(k));
        s.div_int(p as i64 * p as i64 - 1)
    }

    pub fn exp(&self) -> Result<Unram, PadicError> {
        if !self.is_zero() && self.valuation() < 1 {
            return Err(PadicError::Domain(self.valuation()));
        }
        let one = Unram::one(self.prime(), self.disc, self.precision());
        Ok(exp_series(self, one, |x, y| x.mul(y), |x, y| x.add(y), |x, k| x.div_int(k)))
    }

    /// Root of unity of order dividing `p^2 - 1` congruent to the unit part mod `p`.
    pub fn teichmuller(&self) -> Result<Unram, PadicError> {
        let p = self.prime();
        let mut y = self.unit_part()?;
        for _ in 0..y.precision() {
            y = y.pow(p * p);
        }
        Ok(y)
    }

    pub fn eq_at_precision(&self, o: &Unram) -> bool {
        self.sub(o).is_zero()
    }
}

impl fmt::Display for Unram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}*sqrt{} + O({}^{})",
            self.a.body(),
            self.b.body(),
            self.disc,
            self.prime(),
            self.precision()
        )
    }
}

pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// The rational `num/den` with `|num|, den <= bound` and `num = den * residue`
/// mod `modulus`, when it exists.
pub fn rational_reconstruct(residue: &BigInt, modulus: &BigInt, bound: &BigInt) -> Option<BigRational> {
    let r = residue.mod_floor(modulus);
    if r.is_zero() {
        return Some(BigRational::zero());
    }
    let (mut r0, mut r1) = (modulus.clone(), r);
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while &r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > *bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}

/// Largest `B` with `2 B^2 <= modulus`.
pub fn default_bound(modulus: &BigInt) -> BigInt {
    let half: BigInt = modulus / 2;
    half.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn inert_examples() {
        assert_eq!(inert_check(689, 3), Ok(true));
        assert_eq!(inert_check(8, 5), Ok(true));
        assert_eq!(inert_check(5, 5), Err(PadicError::Ramified { disc: 5, p: 5 }));
        assert_eq!(inert_check(12, 11), Ok(false));
        assert!(matches!(inert_check(12, 9), Err(PadicError::NotOddPrime(9))));
    }

    #[test]
    fn log_of_one_and_p() {
        assert!(PAdic::one(3, 10).log().unwrap().is_zero());
        assert!(PAdic::from_i64(3, 3, 10).log().unwrap().is_zero());
        assert!(PAdic::from_i64(3, -1, 10).log().unwrap().is_zero());
        assert!(!PAdic::from_i64(3, 2, 10).log().unwrap().is_zero());
    }

    #[test]
    fn log_truncated_series() {
        // 3 - 9/2 + 27/3 mod 3^4; the next term 81/4 vanishes there
        let want = PAdic::from_rational(3, &(q(3, 1) - q(9, 2) + q(27, 3)), 4);
        let got = PAdic::from_i64(3, 4, 4).log().unwrap();
        assert!(got.eq_at_precision(&want), "{got} vs {want}");
    }

    #[test]
    fn exp_truncated_series() {
        let want = PAdic::from_rational(3, &(q(1, 1) + q(3, 1) + q(9, 2) + q(27, 6) + q(81, 24)), 4);
        let got = PAdic::from_i64(3, 3, 4).exp().unwrap();
        assert!(got.eq_at_precision(&want), "{got} vs {want}");
        assert!(PAdic::zero(3, 8).exp().unwrap().eq_at_precision(&PAdic::one(3, 8)));
        assert_eq!(PAdic::from_i64(3, 2, 8).exp(), Err(PadicError::Domain(0)));
    }

    #[test]
    fn teichmuller_of_two_is_minus_one() {
        let t = PAdic::from_i64(3, 2, 12).teichmuller().unwrap();
        assert!(t.eq_at_precision(&PAdic::from_i64(3, -1, 12)));
        assert!(PAdic::one(3, 12).teichmuller().unwrap().eq_at_precision(&PAdic::one(3, 12)));
    }

    #[test]
    fn reconstruct_examples() {
        let m = num_traits::pow(BigInt::from(5), 6);
        let b = default_bound(&m);
        assert_eq!(rational_reconstruct(&BigInt::from(10417), &m, &b), Some(q(1, 3)));
        assert_eq!(rational_reconstruct(&BigInt::zero(), &m, &b), Some(q(0, 1)));
        assert_eq!(rational_reconstruct(&BigInt::from(7000), &m, &BigInt::from(10)), None);
    }

    #[test]
    fn negative_valuation_and_strings() {
        let x = PAdic::from_rational(3, &q(1, 81), 3);
        assert_eq!(x.valuation(), -4);
        assert_eq!(x.to_string(), "3^-4 * (1 0 0 0 0 0 0) + O(3^3)");
        let z = Unram::from_ints(3, &BigInt::from(5), &BigInt::from(3), 689, 3).unwrap();
        assert_eq!(z.to_string(), "3^0 * (2 1 0) + 3^1 * (1 0)*sqrt689 + O(3^3)");
        assert_eq!(PAdic::zero(3, 5).to_string(), "0 + O(3^5)");
    }

    #[test]
    fn unram_rejects_split() {
        let one = PAdic::one(3, 5);
        assert!(matches!(
            Unram::new(one.clone(), one, 13),
            Err(PadicError::Split { .. })
        ));
    }

    #[test]
    fn conjugate_basics() {
        let z = Unram::from_ints(3, &BigInt::from(0), &BigInt::from(1), 689, 10).unwrap();
        assert_eq!(z.conjugate(), z.neg());
        let w = Unram::from_ints(3, &BigInt::from(7), &BigInt::from(4), 689, 10).unwrap();
        assert!(w.trace().eq_at_precision(&PAdic::from_i64(3, 14, 10)));
        assert!(w.mul(&w.conjugate()).is_rational());
    }
}
