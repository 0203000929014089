//! Real quadratic fields: elements, units, binary quadratic forms, oriented
//! ideals and the narrow class group.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a fundamental discriminant > 1")]
    NotFundamental(i64),
    #[error("forms of discriminants {0} and {1} cannot be composed")]
    DiscriminantMismatch(i64, i64),
    #[error("form {0} is not primitive")]
    NotPrimitive(Form),
}

pub fn isqrt(n: i64) -> i64 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn squarefree(n: i64) -> bool {
    let mut d = 2;
    while d * d <= n {
        if n % (d * d) == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn is_fundamental(d: i64) -> bool {
    if d <= 1 || isqrt(d).pow(2) == d {
        return false;
    }
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

pub fn check_fundamental(d: i64) -> Result<(), FieldError> {
    if is_fundamental(d) {
        Ok(())
    } else {
        Err(FieldError::NotFundamental(d))
    }
}

/// Prime discriminants dividing a fundamental discriminant.
pub fn prime_discriminant_count(d: i64) -> usize {
    let mut n = d;
    let mut t = 0;
    if n % 4 == 0 {
        t += 1;
        n /= 4;
        if n % 2 == 0 {
            n /= 2;
        }
    }
    let mut q = 3;
    while q * q <= n {
        if n % q == 0 {
            t += 1;
            n /= q;
        }
        q += 2;
    }
    if n > 1 {
        t += 1;
    }
    t
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `x + y sqrt(D)` with rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadElem {
    pub x: BigRational,
    pub y: BigRational,
    pub d: i64,
}

/// Sign of `x + y sqrt(d)` as a real number.
fn sign_surd(x: &BigRational, y: &BigRational, d: i64) -> i32 {
    let sx = sgn(x);
    let sy = sgn(y);
    if sy == 0 {
        return sx;
    }
    if sx == 0 || sx == sy {
        return sy;
    }
    let lhs = x * x;
    let rhs = y * y * rat(d);
    if lhs > rhs {
        sx
    } else {
        sy
    }
}

fn sgn(q: &BigRational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

impl QuadElem {
    pub fn new(x: BigRational, y: BigRational, d: i64) -> QuadElem {
        QuadElem { x, y, d }
    }

    pub fn from_ints(x: i64, y: i64, d: i64) -> QuadElem {
        QuadElem::new(rat(x), rat(y), d)
    }

    /// `(x + y sqrt d) / 2`.
    pub fn half(x: i64, y: i64, d: i64) -> QuadElem {
        let h = BigRational::new(BigInt::one(), BigInt::from(2));
        QuadElem::new(rat(x) * &h, rat(y) * &h, d)
    }

    pub fn rational(q: BigRational, d: i64) -> QuadElem {
        QuadElem::new(q, BigRational::zero(), d)
    }

    pub fn add(&self, o: &QuadElem) -> QuadElem {
        QuadElem::new(&self.x + &o.x, &self.y + &o.y, self.d)
    }

    pub fn sub(&self, o: &QuadElem) -> QuadElem {
        QuadElem::new(&self.x - &o.x, &self.y - &o.y, self.d)
    }

    pub fn neg(&self) -> QuadElem {
        QuadElem::new(-&self.x, -&self.y, self.d)
    }

    pub fn mul(&self, o: &QuadElem) -> QuadElem {
        let d = rat(self.d);
        QuadElem::new(
            &self.x * &o.x + &self.y * &o.y * d,
            &self.x * &o.y + &self.y * &o.x,
            self.d,
        )
    }

    pub fn scale(&self, q: &BigRational) -> QuadElem {
        QuadElem::new(&self.x * q, &self.y * q, self.d)
    }

    pub fn mul_int(&self, n: i64) -> QuadElem {
        self.scale(&rat(n))
    }

    pub fn conj(&self) -> QuadElem {
        QuadElem::new(self.x.clone(), -&self.y, self.d)
    }

    pub fn norm(&self) -> BigRational {
        &self.x * &self.x - &self.y * &self.y * rat(self.d)
    }

    pub fn trace(&self) -> BigRational {
        &self.x * rat(2)
    }

    pub fn inv(&self) -> QuadElem {
        let n = self.norm();
        assert!(!n.is_zero(), "inverse of zero");
        self.conj().scale(&n.recip())
    }

    pub fn div(&self, o: &QuadElem) -> QuadElem {
        self.mul(&o.inv())
    }

    pub fn pow(&self, e: u32) -> QuadElem {
        let mut r = QuadElem::from_ints(1, 0, self.d);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    /// Sign under the embedding `sqrt d -> +sqrt d`.
    pub fn sign1(&self) -> i32 {
        sign_surd(&self.x, &self.y, self.d)
    }

    /// Sign under the embedding `sqrt d -> -sqrt d`.
    pub fn sign2(&self) -> i32 {
        sign_surd(&self.x, &-&self.y, self.d)
    }

    pub fn is_totally_positive(&self) -> bool {
        self.sign1() > 0 && self.sign2() > 0
    }

    /// Membership in the maximal order `Z + Z (d + sqrt d) / 2`.
    pub fn is_integral(&self) -> bool {
        let u = &self.x * rat(2);
        let v = &self.y * rat(2);
        if !u.is_integer() || !v.is_integer() {
            return false;
        }
        let (u, v) = (u.to_integer(), v.to_integer());
        (u - v * BigInt::from(self.d)).is_even()
    }

    /// Coordinates `(m, n)` with `self = m a + n b`, if rational.
    pub fn coords_in(&self, a: &QuadElem, b: &QuadElem) -> (BigRational, BigRational) {
        let det = &a.x * &b.y - &a.y * &b.x;
        let m = (&self.x * &b.y - &self.y * &b.x) / &det;
        let n = (&a.x * &self.y - &a.y * &self.x) / &det;
        (m, n)
    }
}

impl fmt::Display for QuadElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*sqrt{}", self.x, self.y, self.d)
    }
}

/// Determinant of the real embedding matrix `(sigma_i(t_j))`, divided by `sqrt d`.
/// Its sign is the orientation of the basis `(t1, t2)`.
pub fn orientation(t1: &QuadElem, t2: &QuadElem) -> BigRational {
    // sigma_1(t1) sigma_2(t2) - sigma_2(t1) sigma_1(t2) = 2 sqrt d (x1 y2 ... )
    (&t1.y * &t2.x - &t1.x * &t2.y) * rat(2)
}

/// Fundamental unit `eps > 1` and its norm.
pub fn fundamental_unit(d: i64) -> Result<(QuadElem, i32), FieldError> {
    check_fundamental(d)?;
    let s = isqrt(d);
    let b0 = if (s - d).rem_euclid(2) == 0 { s } else { s - 1 };
    // continued fraction of w = (b0 + sqrt d)/2, a reduced quadratic irrational
    let (mut pp, mut qq) = (BigInt::from(b0), BigInt::from(2));
    let bd = BigInt::from(d);
    let bs = BigInt::from(s);
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let n_w: BigInt = (BigInt::from(b0 * b0) - &bd) / 4;
    loop {
        let a = (&pp + &bs).div_floor(&qq);
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        pp = &a * &qq - &pp;
        qq = (&bd - &pp * &pp) / &qq;
        // eta = h - k * conj(w) has norm h^2 - h k b0 + k^2 n_w
        let nrm = &h1 * &h1 - &h1 * &k1 * BigInt::from(b0) + &k1 * &k1 * &n_w;
        if nrm.abs().is_one() {
            let x = BigInt::from(2) * &h1 - &k1 * BigInt::from(b0);
            let eps = QuadElem::new(
                BigRational::new(x, BigInt::from(2)),
                BigRational::new(k1.clone(), BigInt::from(2)),
                d,
            );
            let n = if nrm.is_positive() { 1 } else { -1 };
            return Ok((eps, n));
        }
    }
}

/// Generator `eps_+ > 1` of the totally positive units.
pub fn totally_positive_generator(d: i64) -> Result<QuadElem, FieldError> {
    let (e, n) = fundamental_unit(d)?;
    Ok(if n == 1 { e } else { e.mul(&e) })
}

/// Primitive binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Form {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

impl std::str::FromStr for Form {
    type Err = String;
    fn from_str(s: &str) -> Result<Form, String> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let v: Vec<i64> = t
            .split(',')
            .map(|x| x.trim().parse::<i64>().map_err(|e| format!("bad form {s}: {e}")))
            .collect::<Result<_, _>>()?;
        if v.len() != 3 {
            return Err(format!("bad form {s}: expected [a,b,c]"));
        }
        Ok(Form::new(v[0], v[1], v[2]))
    }
}

impl Form {
    pub const fn new(a: i64, b: i64, c: i64) -> Form {
        Form { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn principal(d: i64) -> Form {
        let s = isqrt(d);
        let b = if (s - d).rem_euclid(2) == 0 { s } else { s - 1 };
        Form::new(1, b, (b * b - d) / 4)
    }

    /// `f(x m11 + y m12, x m21 + y m22)` for `m = [[m11, m12], [m21, m22]]`.
    pub fn transform(&self, m: [[i64; 2]; 2]) -> Form {
        let [[p, q], [r, s]] = m;
        let a = self.eval(p, r);
        let c = self.eval(q, s);
        let b = 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s;
        Form::new(a, b, c)
    }

    pub fn is_reduced(&self) -> bool {
        let d = self.disc();
        let (a2, b) = (2 * self.a.abs(), self.b);
        if b <= 0 || b * b >= d {
            return false;
        }
        let lo = a2 - b;
        let lower_ok = lo < 0 || lo * lo < d;
        let upper_ok = d < (a2 + b) * (a2 + b);
        lower_ok && upper_ok
    }

    /// One step of the reduction operator; properly equivalent to `self`.
    pub fn rho(&self) -> Form {
        let d = self.disc();
        let s = isqrt(d);
        let c = self.c;
        let m = 2 * c.abs();
        let b = if c.abs() < s + 1 && c.abs() * c.abs() < d {
            s - (s + self.b).rem_euclid(m)
        } else {
            let mut t = (-self.b).rem_euclid(m);
            if t > c.abs() {
                t -= m;
            }
            t
        };
        Form::new(c, b, (b * b - d) / (4 * c))
    }

    pub fn reduce(&self) -> Form {
        let mut f = *self;
        let mut guard = 0;
        while !f.is_reduced() {
            f = f.rho();
            guard += 1;
            assert!(guard < 10_000, "reduction did not terminate for {self}");
        }
        f
    }

    /// The full cycle of reduced forms containing `reduce(self)`.
    pub fn cycle(&self) -> Vec<Form> {
        let start = self.reduce();
        let mut out = vec![start];
        let mut f = start.rho();
        while f != start {
            out.push(f);
            f = f.rho();
        }
        out
    }

    pub fn equivalent(&self, o: &Form) -> bool {
        self.disc() == o.disc() && self.cycle().contains(&o.reduce())
    }

    /// Form of the inverse class.
    pub fn inverse(&self) -> Form {
        Form::new(self.a, -self.b, self.c)
    }

    /// A properly equivalent form whose leading coefficient is positive and
    /// coprime to every entry of `avoid`.
    pub fn good_form(&self, avoid: &[i64]) -> Form {
        for r in 1i64..200 {
            for x in -r..=r {
                for y in -r..=r {
                    if x.abs().max(y.abs()) != r || x.gcd(&y) != 1 {
                        continue;
                    }
                    let m = self.eval(x, y);
                    if m > 0 && avoid.iter().all(|q| m.gcd(q) == 1) {
                        let (g, u, v) = floor_egcd(x, y);
                        let h = self.transform([[x, -v * g], [y, u * g]]);
                        debug_assert_eq!(h.a, m);
                        return h;
                    }
                }
            }
        }
        panic!("no good form found for {self}");
    }
}

/// Extended gcd with floor division, `a u + b v = g`, where `g` may be negative.
pub fn floor_egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = floor_egcd(b, a.mod_floor(&b));
        (g, y, x - Integer::div_floor(&a, &b) * y)
    }
}

/// Fractional ideal with a positively oriented Z-basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedIdeal {
    pub tau: [QuadElem; 2],
    pub norm: BigRational,
}

impl OrientedIdeal {
    pub fn disc(&self) -> i64 {
        self.tau[0].d
    }

    pub fn orientation_sign(&self) -> i32 {
        sgn(&orientation(&self.tau[0], &self.tau[1]))
    }

    /// The norm form `N(x t1 + y t2) / N(I)`, reduced.
    pub fn to_form(&self) -> Form {
        let [t1, t2] = &self.tau;
        let a = t1.norm() / &self.norm;
        let c = t2.norm() / &self.norm;
        let b = (t1.mul(&t2.conj()).trace()) / &self.norm;
        let conv = |q: BigRational| -> i64 {
            assert!(q.is_integer(), "norm form not integral");
            i64::try_from(q.to_integer()).expect("form coefficient fits i64")
        };
        Form::new(conv(a), conv(b), conv(c)).reduce()
    }

    /// Integer coordinates of the basis in `(1, w)` with `w = (s + sqrt d)/2`.
    fn omega_coords(&self) -> Vec<(BigInt, BigInt)> {
        let d = self.disc();
        let s = d.rem_euclid(2);
        self.tau
            .iter()
            .map(|t| {
                let v = &t.y * rat(2);
                let u = &t.x - &v * BigRational::new(BigInt::from(s), BigInt::from(2));
                assert!(u.is_integer() && v.is_integer(), "ideal is not integral");
                (u.to_integer(), v.to_integer())
            })
            .collect()
    }

    /// Product of two integral ideals.
    pub fn mul(&self, o: &OrientedIdeal) -> OrientedIdeal {
        let d = self.disc();
        let s = BigInt::from(d.rem_euclid(2));
        let q = (BigInt::from(d) - &s) / 4;
        let mut gens = Vec::new();
        for (u1, v1) in self.omega_coords() {
            for (u2, v2) in o.omega_coords() {
                let u = &u1 * &u2 + &v1 * &v2 * &q;
                let v = &u1 * &v2 + &u2 * &v1 + &s * &v1 * &v2;
                gens.push((u, v));
            }
        }
        let (a, b, c) = hnf(gens);
        ideal_from_hnf(&a, &b, &c, d)
    }
}

/// Integral ideal generated over `O_F` by `gens`.
pub fn ideal_from_generators(gens: &[QuadElem]) -> OrientedIdeal {
    let d = gens[0].d;
    let s = d.rem_euclid(2);
    let w = QuadElem::half(s, 1, d);
    let mut coords = Vec::new();
    for g in gens {
        for h in [g.clone(), g.mul(&w)] {
            let v = &h.y * rat(2);
            let u = &h.x - &v * BigRational::new(BigInt::from(s), BigInt::from(2));
            assert!(u.is_integer() && v.is_integer(), "generator is not integral");
            coords.push((u.to_integer(), v.to_integer()));
        }
    }
    let (a, b, c) = hnf(coords);
    ideal_from_hnf(&a, &b, &c, d)
}

/// Hermite normal form `{(A, 0), (B, C)}` of a rank-2 lattice in `Z^2`.
fn hnf(mut gens: Vec<(BigInt, BigInt)>) -> (BigInt, BigInt, BigInt) {
    // combine second coordinates into one vector
    let mut piv = (BigInt::zero(), BigInt::zero());
    let mut rest = Vec::new();
    for g in gens.drain(..) {
        if piv.1.is_zero() {
            if g.1.is_zero() {
                rest.push(g);
            } else {
                piv = g;
            }
            continue;
        }
        if g.1.is_zero() {
            rest.push(g);
            continue;
        }
        let e = piv.1.extended_gcd(&g.1);
        let np = (&e.x * &piv.0 + &e.y * &g.0, e.gcd.clone());
        let k1 = &g.1 / &e.gcd;
        let k2 = &piv.1 / &e.gcd;
        rest.push((&k1 * &piv.0 - &k2 * &g.0, BigInt::zero()));
        piv = np;
    }
    if piv.1.is_negative() {
        piv = (-piv.0, -piv.1);
    }
    let mut a = BigInt::zero();
    for r in rest {
        a = a.gcd(&r.0);
    }
    let b = piv.0.mod_floor(&a);
    (a, b, piv.1)
}

fn ideal_from_hnf(a: &BigInt, b: &BigInt, c: &BigInt, d: i64) -> OrientedIdeal {
    let s = d.rem_euclid(2);
    let w = QuadElem::half(s, 1, d);
    let t2 = QuadElem::rational(BigRational::from_integer(a.clone()), d);
    let t1 = w.scale(&BigRational::from_integer(c.clone())).add(&QuadElem::rational(
        BigRational::from_integer(b.clone()),
        d,
    ));
    let ideal = OrientedIdeal { tau: [t1, t2], norm: BigRational::from_integer(a * c) };
    debug_assert!(ideal.orientation_sign() > 0);
    ideal
}

/// The ideal `(a, (-b + sqrt D)/2)`, multiplied by `sqrt D` when `a < 0`, with
/// a positively oriented basis. Its norm form is properly equivalent to `f`.
pub fn form_to_ideal(f: &Form) -> OrientedIdeal {
    let d = f.disc();
    let w = QuadElem::half(-f.b, 1, d);
    if f.a > 0 {
        let a = QuadElem::from_ints(f.a, 0, d);
        OrientedIdeal { tau: [w, a], norm: rat(f.a) }
    } else {
        let r = QuadElem::from_ints(0, 1, d);
        let a = QuadElem::from_ints(-f.a, 0, d);
        OrientedIdeal { tau: [r.mul(&a), r.mul(&w)], norm: rat(-f.a * d) }
    }
}

pub fn ideal_to_form(i: &OrientedIdeal) -> Form {
    i.to_form()
}

/// Class of the composition `f * g`, as a reduced form.
pub fn gauss_compose(f: &Form, g: &Form) -> Result<Form, FieldError> {
    if f.disc() != g.disc() {
        return Err(FieldError::DiscriminantMismatch(f.disc(), g.disc()));
    }
    for h in [f, g] {
        if !h.is_primitive() {
            return Err(FieldError::NotPrimitive(*h));
        }
    }
    Ok(form_to_ideal(f).mul(&form_to_ideal(g)).to_form())
}

/// Narrow class group of a fundamental discriminant.
#[derive(Clone, Debug)]
pub struct NarrowClassGroup {
    pub disc: i64,
    /// One reduced representative per class.
    pub forms: Vec<Form>,
    /// `table[i][j]` is the index of `forms[i] * forms[j]`.
    pub table: Vec<Vec<usize>>,
    pub identity: usize,
    pub orders: Vec<usize>,
    lookup: HashMap<Form, usize>,
}

impl NarrowClassGroup {
    pub fn new(d: i64) -> Result<NarrowClassGroup, FieldError> {
        check_fundamental(d)?;
        let s = isqrt(d);
        let mut reduced = Vec::new();
        let mut b = if (s - d).rem_euclid(2) == 0 { s } else { s - 1 };
        while b > 0 {
            let n = (d - b * b) / 4;
            for a in 1..=n {
                if n % a != 0 {
                    continue;
                }
                for sa in [a, -a] {
                    let f = Form::new(sa, b, -(n / a) * sa.signum());
                    if f.is_primitive() && f.is_reduced() {
                        reduced.push(f);
                    }
                }
            }
            b -= 2;
        }
        reduced.sort();
        let mut lookup = HashMap::new();
        let mut cycles: Vec<Vec<Form>> = Vec::new();
        for f in &reduced {
            if lookup.contains_key(f) {
                continue;
            }
            let cyc = f.cycle();
            for g in &cyc {
                lookup.insert(*g, cycles.len());
            }
            cycles.push(cyc);
        }
        let forms: Vec<Form> = cycles.iter().map(|c| representative(c)).collect();
        let mut order: Vec<usize> = (0..forms.len()).collect();
        order.sort_by_key(|&i| forms[i]);
        let forms: Vec<Form> = order.iter().map(|&i| forms[i]).collect();
        for v in lookup.values_mut() {
            *v = order.iter().position(|&i| i == *v).unwrap();
        }
        let h = forms.len();
        let mut grp = NarrowClassGroup {
            disc: d,
            forms,
            table: vec![vec![0; h]; h],
            identity: 0,
            orders: vec![0; h],
            lookup,
        };
        grp.identity = grp.index_of(&Form::principal(d));
        for i in 0..h {
            for j in 0..h {
                let f = gauss_compose(&grp.forms[i], &grp.forms[j])?;
                grp.table[i][j] = grp.index_of(&f);
            }
        }
        for i in 0..h {
            let mut k = 1;
            let mut x = i;
            while x != grp.identity {
                x = grp.table[x][i];
                k += 1;
            }
            grp.orders[i] = k;
        }
        Ok(grp)
    }

    pub fn order(&self) -> usize {
        self.forms.len()
    }

    /// Index of the class containing `f`.
    pub fn index_of(&self, f: &Form) -> usize {
        self.lookup[&f.reduce()]
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.order()).find(|&j| self.table[i][j] == self.identity).unwrap()
    }

    pub fn power(&self, i: usize, k: usize) -> usize {
        let mut x = self.identity;
        for _ in 0..k {
            x = self.table[x][i];
        }
        x
    }

    pub fn is_two_torsion(&self, i: usize) -> bool {
        self.orders[i] <= 2
    }

    pub fn two_torsion_count(&self) -> usize {
        (0..self.order()).filter(|&i| self.is_two_torsion(i)).count()
    }

    pub fn is_cyclic(&self) -> bool {
        self.orders.iter().any(|&o| o == self.order())
    }
}

/// Cycle representative: smallest `b`, then smallest `|a|`, then smallest `a`.
fn representative(cycle: &[Form]) -> Form {
    *cycle.iter().min_by_key(|f| (f.b, f.a.abs(), f.a)).unwrap()
}
