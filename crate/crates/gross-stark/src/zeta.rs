//! Exact partial zeta values of real quadratic fields at s = 0, -1, -2 from
//! Shintani cone decompositions, with congruence conditions and smoothing.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::padic::{inert_check, PadicError};
use crate::quadfield::{floor_egcd, totally_positive_generator, FieldError, Form, QuadElem};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZetaError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("s = {0} is outside the supported range 0, -1, -2")]
    UnsupportedS(i64),
    #[error("ideal norm {norm} is not coprime to {with}")]
    NotCoprime { norm: i64, with: i64 },
    #[error("smoothing {c} is not coprime to {with}")]
    BadSmoothing { c: i64, with: i64 },
    #[error("residue ({0}, {1}) lies in p times the lattice")]
    ResidueNotUnit(i64, i64),
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn binom(n: u32, k: u32) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

/// Bernoulli numbers `B_0..B_n` with `B_1 = -1/2`.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    static CACHE: OnceLock<Vec<BigRational>> = OnceLock::new();
    let cached = CACHE.get_or_init(|| bernoulli_raw(12));
    if n < cached.len() {
        return cached[..=n].to_vec();
    }
    bernoulli_raw(n)
}

fn bernoulli_raw(n: usize) -> Vec<BigRational> {
    let mut b = vec![BigRational::one()];
    for m in 1..=n {
        let mut s = BigRational::zero();
        for (k, bk) in b.iter().enumerate() {
            s += BigRational::from_integer(binom(m as u32 + 1, k as u32)) * bk;
        }
        b.push(-s / rat(m as i64 + 1));
    }
    b
}

/// Bernoulli polynomial `B_n(x)`.
pub fn bernoulli_poly(n: usize, x: &BigRational) -> BigRational {
    let b = bernoulli_numbers(n);
    let mut acc = BigRational::zero();
    // Horner in x over coefficients binom(n,k) B_k x^(n-k)
    for (k, bk) in b.iter().enumerate() {
        acc = acc * x + BigRational::from_integer(binom(n as u32, k as u32)) * bk;
    }
    acc
}

/// Kronecker symbol `(d | n)` for `n > 0`.
pub fn kronecker(d: i64, n: i64) -> i32 {
    assert!(n > 0);
    let mut n = n;
    let mut r = 1;
    while n % 2 == 0 {
        n /= 2;
        match d.rem_euclid(8) {
            1 | 7 => {}
            3 | 5 => r = -r,
            _ => return 0,
        }
    }
    r * jacobi(d.rem_euclid(n), n)
}

fn jacobi(a: i64, n: i64) -> i32 {
    let (mut a, mut n) = (a.rem_euclid(n), n);
    let mut r = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                r = -r;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            r = -r;
        }
        a %= n;
    }
    if n == 1 {
        r
    } else {
        0
    }
}

/// `zeta(1-k) L(1-k, chi_D)`, the Dedekind zeta of `Q(sqrt D)` at `1-k`.
pub fn dirichlet_oracle(d: i64, k: usize) -> BigRational {
    assert!(k >= 1);
    let b = bernoulli_numbers(k);
    let zeta = if k == 1 { rat(-1) / rat(2) } else { -&b[k] / rat(k as i64) };
    let f = d.abs();
    let mut s = BigRational::zero();
    for a in 1..=f {
        let chi = kronecker(d, a);
        if chi != 0 {
            s += bernoulli_poly(k, &BigRational::new(BigInt::from(a), BigInt::from(f))) * rat(chi as i64);
        }
    }
    let bk_chi = s * BigRational::from_integer(num_traits::pow(BigInt::from(f), k - 1));
    zeta * (-bk_chi / rat(k as i64))
}

/// Coefficients of `(v + w conj(v))^e` in `w`, up to `w^deg`; `e >= -1`.
fn ser_pow(v: &QuadElem, e: i64, deg: usize) -> Vec<QuadElem> {
    let d = v.d;
    let zero = QuadElem::from_ints(0, 0, d);
    let vc = v.conj();
    if e >= 0 {
        (0..=deg)
            .map(|j| {
                if j as i64 <= e {
                    v.pow((e - j as i64) as u32)
                        .mul(&vc.pow(j as u32))
                        .scale(&BigRational::from_integer(binom(e as u32, j as u32)))
                } else {
                    zero.clone()
                }
            })
            .collect()
    } else {
        assert_eq!(e, -1);
        let inv = v.inv();
        let r = vc.mul(&inv).neg();
        let mut out = Vec::with_capacity(deg + 1);
        let mut cur = inv;
        for _ in 0..=deg {
            out.push(cur.clone());
            cur = cur.mul(&r);
        }
        out
    }
}

fn ser_mul(a: &[QuadElem], b: &[QuadElem], deg: usize) -> Vec<QuadElem> {
    let d = a[0].d;
    let mut out = vec![QuadElem::from_ints(0, 0, d); deg + 1];
    for i in 0..=deg {
        for j in 0..=(deg - i) {
            out[i + j] = out[i + j].add(&a[i].mul(&b[j]));
        }
    }
    out
}

/// Bernoulli-product coefficients of the open cone spanned by `v1, v2` at `s = 1-k`:
/// the cone sum over `y + Z_{>=0}^2`, `y in (0,1]^2`, is `sum c B_l1(y1) B_l2(y2)`.
pub fn cone_coefs(v1: &QuadElem, v2: &QuadElem, k: usize) -> Vec<(usize, usize, BigRational)> {
    let deg = k - 1;
    let pref = BigRational::new(factorial(deg as u32).pow(2), BigInt::from(2));
    (0..=2 * k)
        .map(|l1| {
            let l2 = 2 * k - l1;
            let s = &ser_mul(&ser_pow(v1, l1 as i64 - 1, deg), &ser_pow(v2, l2 as i64 - 1, deg), deg)[deg];
            let den = factorial(l1 as u32) * factorial(l2 as u32);
            (l1, l2, &pref * s.trace() / BigRational::from_integer(den))
        })
        .collect()
}

pub fn cone_value(coefs: &[(usize, usize, BigRational)], y1: &BigRational, y2: &BigRational) -> BigRational {
    coefs
        .iter()
        .map(|(l1, l2, c)| c * bernoulli_poly(*l1, y1) * bernoulli_poly(*l2, y2))
        .sum()
}

/// Contribution of the half-open ray through `w` at `s = 1-k`.
pub fn ray_value(w: &QuadElem, y: &BigRational, k: usize) -> BigRational {
    let n = w.norm();
    num_traits::pow(n, k - 1) * (-bernoulli_poly(2 * k - 1, y) / rat(2 * k as i64 - 1))
}

fn det2(a: &QuadElem, b: &QuadElem) -> BigRational {
    &a.x * &b.y - &a.y * &b.x
}

fn to_i64(q: &BigRational) -> i64 {
    assert!(q.is_integer(), "expected an integer, got {q}");
    q.to_integer().to_i64().expect("coordinate fits i64")
}

/// Unimodular cone of a Shintani domain, in lattice coordinates.
#[derive(Clone, Debug)]
pub struct Cone {
    pub g1: (i64, i64),
    pub g2: (i64, i64),
    pub det: i64,
    pub w1: QuadElem,
    pub w2: QuadElem,
}

impl Cone {
    /// Cone coordinates of `x mod m`, each in `[1, m]`.
    pub fn coords(&self, x: (i64, i64), m: i64) -> (i64, i64) {
        let (a, b) = self.g1;
        let (c, d) = self.g2;
        let s1 = ((x.0 * d - x.1 * c) * self.det).rem_euclid(m);
        let s2 = ((a * x.1 - b * x.0) * self.det).rem_euclid(m);
        (if s1 == 0 { m } else { s1 }, if s2 == 0 { m } else { s2 })
    }
}

/// Fundamental domain for the totally positive units acting on the totally
/// positive part of a lattice `Z tau1 + Z tau2`: a chain of unimodular cones
/// from `w0` to `eps_+ w0`, each open cone together with its first ray.
#[derive(Clone, Debug)]
pub struct ShintaniDomain {
    pub disc: i64,
    pub tau: [QuadElem; 2],
    pub vecs: Vec<QuadElem>,
    pub coords: Vec<(i64, i64)>,
    pub cones: Vec<Cone>,
    pub eps: QuadElem,
    /// `eps * tau_j = m[j].0 tau1 + m[j].1 tau2`.
    pub eps_matrix: [(i64, i64); 2],
}

impl ShintaniDomain {
    /// Domain for the lattice with positively oriented basis `tau`.
    pub fn new(tau: [QuadElem; 2]) -> Result<ShintaniDomain, ZetaError> {
        let d = tau[0].d;
        let eps = totally_positive_generator(d)?;
        let [t1, t2] = &tau;
        let comb = |m: i64, n: i64| t1.mul_int(m).add(&t2.mul_int(n));
        let mut start = None;
        'search: for r in 1i64..200 {
            for m in -r..=r {
                let ns: Vec<i64> = if m.abs() != r { vec![-r, r] } else { (-r..=r).collect() };
                for n in ns {
                    if m.gcd(&n) == 1 && comb(m, n).is_totally_positive() {
                        start = Some((m, n));
                        break 'search;
                    }
                }
            }
        }
        let (m, n) = start.expect("totally positive vector exists");
        let w0 = comb(m, n);
        let (g, xx, yy) = floor_egcd(m, n);
        let mut z = comb(-yy * g, xx * g);
        let target = eps.mul(&w0);
        if (det2(&w0, &target) / det2(&w0, &z)).is_negative() {
            z = z.neg();
        }
        let vecs = chain(&w0, &z, &target);
        let dd = det2(t1, t2);
        let coords: Vec<(i64, i64)> = vecs
            .iter()
            .map(|w| (to_i64(&(det2(w, t2) / &dd)), to_i64(&(det2(t1, w) / &dd))))
            .collect();
        let cones = (0..vecs.len() - 1)
            .map(|j| {
                let (a, b) = coords[j];
                let (c, e) = coords[j + 1];
                let det = a * e - b * c;
                assert_eq!(det.abs(), 1, "cone is not unimodular");
                Cone { g1: (a, b), g2: (c, e), det, w1: vecs[j].clone(), w2: vecs[j + 1].clone() }
            })
            .collect();
        let em = |t: &QuadElem| {
            let w = eps.mul(t);
            (to_i64(&(det2(&w, t2) / &dd)), to_i64(&(det2(t1, &w) / &dd)))
        };
        let eps_matrix = [em(t1), em(t2)];
        Ok(ShintaniDomain { disc: d, tau, vecs, coords, cones, eps, eps_matrix })
    }

    /// Domain for `a^{-1}` with basis `(1, (-b - sqrt D)/(2a))`, for a form with `a > 0`.
    pub fn for_form(f: &Form) -> Result<ShintaniDomain, ZetaError> {
        assert!(f.a > 0, "form must have positive leading coefficient");
        let d = f.disc();
        let t1 = QuadElem::from_ints(1, 0, d);
        let t2 = QuadElem::new(
            BigRational::new(BigInt::from(-f.b), BigInt::from(2 * f.a)),
            BigRational::new(BigInt::from(-1), BigInt::from(2 * f.a)),
            d,
        );
        ShintaniDomain::new([t1, t2])
    }

    pub fn act_eps(&self, x: (i64, i64), m: i64) -> (i64, i64) {
        let [(a00, a01), (a10, a11)] = self.eps_matrix;
        ((a00 * x.0 + a10 * x.1).rem_euclid(m), (a01 * x.0 + a11 * x.1).rem_euclid(m))
    }

    /// Shintani sum over lattice points congruent to `x` mod `m` in the domain,
    /// of `N(alpha)^(k-1)`, analytically continued.
    pub fn residue_value(&self, x: (i64, i64), m: i64, k: usize, coefs: &[Vec<(usize, usize, BigRational)>]) -> BigRational {
        let scale = num_traits::pow(rat(m), 2 * (k - 1));
        let mut tot = BigRational::zero();
        for (cone, co) in self.cones.iter().zip(coefs) {
            let (s1, s2) = cone.coords(x, m);
            let y1 = BigRational::new(BigInt::from(s1), BigInt::from(m));
            let y2 = BigRational::new(BigInt::from(s2), BigInt::from(m));
            tot += cone_value(co, &y1, &y2) * &scale;
            if s2 == m {
                tot += ray_value(&cone.w1.mul_int(m), &y1, k);
            }
        }
        tot
    }

    pub fn coefs(&self, k: usize) -> Vec<Vec<(usize, usize, BigRational)>> {
        self.cones.iter().map(|c| cone_coefs(&c.w1, &c.w2, k)).collect()
    }

    /// The `eps`-orbit of `x` mod `m`.
    pub fn orbit(&self, x: (i64, i64), m: i64) -> Vec<(i64, i64)> {
        let start = (x.0.rem_euclid(m), x.1.rem_euclid(m));
        let mut out = vec![start];
        let mut y = self.act_eps(start, m);
        while y != start {
            out.push(y);
            y = self.act_eps(y, m);
        }
        out
    }
}

/// Chain of vectors from `w0` to `target` whose consecutive pairs are unimodular.
fn chain(w0: &QuadElem, z: &QuadElem, target: &QuadElem) -> Vec<QuadElem> {
    let dd = det2(w0, z);
    let mut pp = to_i64(&(det2(target, z) / &dd));
    let mut qq = to_i64(&(det2(w0, target) / &dd));
    assert!(qq > 0);
    let mut vecs = vec![w0.clone()];
    let (mut u, mut e) = (w0.clone(), z.clone());
    while qq != 0 {
        let k = -Integer::div_floor(&-pp, &qq);
        let v1 = u.mul_int(k).add(&e);
        vecs.push(v1.clone());
        let e2 = u.neg();
        let np = qq;
        qq = k * qq - pp;
        pp = np;
        u = v1;
        e = e2;
    }
    assert_eq!(vecs.last().unwrap(), target, "cone chain missed the target");
    vecs
}

/// `zeta([a], 1-k)` for the narrow class of the ideal attached to a form with `a > 0`.
pub fn class_zeta(f: &Form, k: usize) -> Result<BigRational, ZetaError> {
    let dom = ShintaniDomain::for_form(f)?;
    let v = dom.residue_value((0, 0), 1, k, &dom.coefs(k));
    Ok(v * num_traits::pow(rat(f.a), k - 1))
}

/// `zeta([f], 1-k)` for any primitive form, through an equivalent form with `a > 0`.
pub fn zeta_of_class(f: &Form, k: usize) -> Result<BigRational, ZetaError> {
    let g = if f.a > 0 { *f } else { f.good_form(&[]) };
    class_zeta(&g, k)
}

fn s_to_k(s: i64) -> Result<usize, ZetaError> {
    match s {
        0 | -1 | -2 => Ok((1 - s) as usize),
        _ => Err(ZetaError::UnsupportedS(s)),
    }
}

/// Congruence data: the class of a form with `a > 0`, a level `r`, and for
/// `r >= 1` a residue `v` of `a^{-1}` mod `p^r`, outside `p a^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RayCondition {
    pub form: Form,
    pub p: i64,
    pub level: u32,
    pub residue: Option<(i64, i64)>,
}

impl RayCondition {
    pub fn class(form: Form, p: i64) -> RayCondition {
        RayCondition { form, p, level: 0, residue: None }
    }

    pub fn residue(form: Form, p: i64, level: u32, v: (i64, i64)) -> Result<RayCondition, ZetaError> {
        let m = p.pow(level);
        let v = (v.0.rem_euclid(m), v.1.rem_euclid(m));
        if level >= 1 && v.0 % p == 0 && v.1 % p == 0 {
            return Err(ZetaError::ResidueNotUnit(v.0, v.1));
        }
        Ok(RayCondition { form, p, level, residue: Some(v) })
    }

    pub fn modulus(&self) -> i64 {
        self.p.pow(self.level)
    }

    /// Residue as an exact field element `v1 tau1 + v2 tau2`.
    pub fn element(&self) -> Option<QuadElem> {
        let dom_tau = ShintaniDomain::for_form(&self.form).ok()?.tau;
        self.residue.map(|(a, b)| dom_tau[0].mul_int(a).add(&dom_tau[1].mul_int(b)))
    }

    fn validate(&self) -> Result<(), ZetaError> {
        let d = self.form.disc();
        if !inert_check(d, self.p as u64)? {
            return Err(PadicError::Split { disc: d, p: self.p as u64 }.into());
        }
        if self.form.a.gcd(&self.p) != 1 {
            return Err(ZetaError::NotCoprime { norm: self.form.a, with: self.p });
        }
        Ok(())
    }
}

/// Value at `s` of the partial zeta function of the condition. At level 0 this
/// is `zeta([a], s)`; at level `r >= 1` it is the sum over the `eps_+`-orbit of
/// the residue, so that it only depends on the ray class.
pub fn siegel_partial_zeta(cond: &RayCondition, s: i64) -> Result<BigRational, ZetaError> {
    let k = s_to_k(s)?;
    cond.validate()?;
    let dom = ShintaniDomain::for_form(&cond.form)?;
    let coefs = dom.coefs(k);
    let na = num_traits::pow(rat(cond.form.a), k - 1);
    Ok(match cond.residue {
        None => dom.residue_value((0, 0), 1, k, &coefs) * na,
        Some(v) => {
            let m = cond.modulus();
            let tot: BigRational =
                dom.orbit(v, m).into_iter().map(|x| dom.residue_value(x, m, k, &coefs)).sum();
            tot * na
        }
    })
}

/// Smoothed value `Delta_c(cond, 1-k) = L(cond, 1-k) - c^(2k) L(cond_c, 1-k)`,
/// where `cond_c(y) = cond(c y)`: for a residue `v` it is the residue `v / c`.
pub fn delta_c(cond: &RayCondition, k: usize, c: i64) -> Result<BigRational, ZetaError> {
    let s = 1 - k as i64;
    if c.gcd(&(cond.p * cond.form.a)) != 1 {
        return Err(ZetaError::BadSmoothing { c, with: cond.p * cond.form.a });
    }
    let base = siegel_partial_zeta(cond, s)?;
    let shifted = match cond.residue {
        None => base.clone(),
        Some(v) => {
            let m = cond.modulus();
            let ci = (1..m).find(|t| (t * c).rem_euclid(m) == 1 % m).unwrap_or(1);
            let sc = RayCondition::residue(cond.form, cond.p, cond.level, (ci * v.0, ci * v.1))?;
            siegel_partial_zeta(&sc, s)?
        }
    };
    Ok(base - num_traits::pow(rat(c), 2 * k) * shifted)
}

/// Per-residue Shintani values at level `r` and `s = 1-k`, exact. Keys run over
/// all residues outside `p L`, in lexicographic order.
pub fn residue_table(dom: &ShintaniDomain, p: i64, level: u32, k: usize) -> BTreeMap<(i64, i64), BigRational> {
    let m = p.pow(level);
    let coefs = dom.coefs(k);
    let mut out = BTreeMap::new();
    for x1 in 0..m {
        for x2 in 0..m {
            if x1 % p == 0 && x2 % p == 0 {
                continue;
            }
            out.insert((x1, x2), dom.residue_value((x1, x2), m, k, &coefs));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(6);
        assert_eq!(b[1], q(-1, 2));
        assert_eq!(b[2], q(1, 6));
        assert_eq!(b[4], q(-1, 30));
        assert_eq!(b[6], q(1, 42));
        assert_eq!(bernoulli_poly(1, &q(1, 3)), q(-1, 6));
    }

    #[test]
    fn kronecker_values() {
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(12, 5), -1);
        assert_eq!(kronecker(689, 3), -1);
        assert_eq!(kronecker(12, 2), 0);
        assert_eq!(kronecker(13, 3), 1);
    }

    #[test]
    fn oracle_small() {
        assert_eq!(dirichlet_oracle(5, 2), q(1, 30));
        for d in [5, 8, 12, 13, 689] {
            assert!(dirichlet_oracle(d, 1).is_zero());
        }
    }

    #[test]
    fn q_sqrt5_at_minus_one() {
        let f = Form::new(1, 1, -1);
        assert_eq!(class_zeta(&f, 2).unwrap(), q(1, 30));
    }

    #[test]
    fn oracle_matches_class_sums() {
        use crate::quadfield::NarrowClassGroup;
        for d in [5, 8, 12, 13] {
            let g = NarrowClassGroup::new(d).unwrap();
            for k in 1..=3 {
                let tot: BigRational = g.forms.iter().map(|f| zeta_of_class(f, k).unwrap()).sum();
                assert_eq!(tot, dirichlet_oracle(d, k), "D = {d}, k = {k}");
            }
        }
    }

    #[test]
    fn zeta_at_zero_for_689() {
        use crate::quadfield::NarrowClassGroup;
        let g = NarrowClassGroup::new(689).unwrap();
        let z: Vec<BigRational> = g.forms.iter().map(|f| zeta_of_class(f, 1).unwrap()).collect();
        let want = [1, -2, 0, -1, 1, 2, 0, -1];
        for (a, b) in z.iter().zip(want) {
            assert_eq!(*a, q(b, 1));
        }
    }

    #[test]
    fn residues_aggregate_to_euler_removed_value() {
        let f = Form::new(1, -27, 10);
        let dom = ShintaniDomain::for_form(&f).unwrap();
        for k in [1, 2] {
            let whole = class_zeta(&f, k).unwrap();
            let tab = residue_table(&dom, 3, 1, k);
            let tot: BigRational = tab.values().cloned().sum::<BigRational>() * num_traits::pow(rat(f.a), k - 1);
            let euler = rat(1) - num_traits::pow(rat(9), k - 1);
            assert_eq!(tot, whole * euler, "k = {k}");
        }
    }

    #[test]
    fn smoothed_principal_vanishes() {
        let f = Form::new(1, -27, 10);
        let cond = RayCondition::class(f, 3);
        assert_eq!(delta_c(&cond, 1, 5).unwrap(), class_zeta(&f, 1).unwrap() * q(-24, 1));
        let v = RayCondition::residue(f, 3, 1, (1, 0)).unwrap();
        let a = delta_c(&v, 1, 5).unwrap();
        assert!(a.denom() % BigInt::from(3) != BigInt::zero());
    }
}
