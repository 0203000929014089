//! Integer lattice sweep at s = 0: one pass over all residues of a lattice
//! mod p^r, accumulating exact Shintani values per unit orbit and the
//! prime-smoothed log integral.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::padic::{PAdic, Unram};
use crate::quadfield::Form;
use crate::zeta::{cone_coefs, ShintaniDomain, ZetaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SweepError {
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error("accumulator bound 2^{0} exceeds i128")]
    Overflow(u32),
    #[error("prime smoothing value at residue ({0}, {1}) is not p-integral")]
    NotIntegral(i64, i64),
    #[error("the first cone generator lies in the kernel of the prime smoothing map")]
    DegenerateSmoothing,
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = ((r as u128 * b as u128) % m as u128) as u64;
        }
        b = ((b as u128 * b as u128) % m as u128) as u64;
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: i64, m: i64) -> Option<i64> {
    let e = a.rem_euclid(m).extended_gcd(&m);
    if e.gcd == 1 {
        Some(e.x.rem_euclid(m))
    } else {
        None
    }
}

/// `Z[sqrt D] / m`, with `m` odd and prime to `D`, where it equals `O_F / m`.
#[derive(Clone, Copy, Debug)]
pub struct ModRing {
    pub m: u64,
    pub d: u64,
}

pub type Pair = (u64, u64);

impl ModRing {
    pub fn new(m: u64, disc: i64) -> ModRing {
        ModRing { m, d: disc.rem_euclid(m as i64) as u64 }
    }

    #[inline]
    fn mm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.m as u128) as u64
    }

    #[inline]
    pub fn mul(&self, a: Pair, b: Pair) -> Pair {
        let m = self.m as u128;
        let x = (a.0 as u128 * b.0 as u128 + (self.d as u128 * a.1 as u128 % m) * b.1 as u128) % m;
        let y = (a.0 as u128 * b.1 as u128 + a.1 as u128 * b.0 as u128) % m;
        (x as u64, y as u64)
    }

    #[inline]
    pub fn norm(&self, a: Pair) -> u64 {
        let x = self.mm(a.0, a.0);
        let y = self.mm(self.d, self.mm(a.1, a.1));
        (x + self.m - y) % self.m
    }

    pub fn conj(&self, a: Pair) -> Pair {
        (a.0, (self.m - a.1) % self.m)
    }

    pub fn pow(&self, a: Pair, mut e: u64) -> Pair {
        let mut r = (1 % self.m, 0);
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        r
    }

    pub fn inv(&self, a: Pair) -> Option<Pair> {
        let n = inv_mod(self.norm(a) as i64, self.m as i64)? as u64;
        let c = self.conj(a);
        Some((self.mm(c.0, n), self.mm(c.1, n)))
    }

    /// Reduction of a rational `x + y sqrt D` with denominators prime to `m`.
    pub fn from_rationals(&self, x: &BigRational, y: &BigRational) -> Pair {
        (rat_mod(x, self.m), rat_mod(y, self.m))
    }
}

pub fn rat_mod(q: &BigRational, m: u64) -> u64 {
    let mb = BigInt::from(m);
    let den = q.denom().mod_floor(&mb);
    let inv = inv_mod(den.to_i64().unwrap(), m as i64).expect("denominator prime to modulus");
    let num = q.numer().mod_floor(&mb).to_u64().unwrap();
    ((num as u128 * inv as u128) % m as u128) as u64
}

/// Iwasawa logarithm on `(O/p^r)^x`, read off a table of logs of residues
/// mod `p^h`, `h = ceil(r/2)`: `log y = log A + (y/A - 1) mod p^r`.
#[derive(Clone, Debug)]
pub struct LogTable {
    pub p: u64,
    pub r: u32,
    ring: ModRing,
    ph: u64,
    entries: Vec<(Pair, Pair)>,
}

impl LogTable {
    pub fn new(p: u64, r: u32, disc: i64) -> LogTable {
        let m = p.pow(r);
        let h = r.div_ceil(2);
        let ph = p.pow(h);
        let ring = ModRing::new(m, disc);
        let mut entries = vec![((0, 0), (0, 0)); (ph * ph) as usize];
        for a0 in 0..ph {
            for a1 in 0..ph {
                if a0 % p == 0 && a1 % p == 0 {
                    continue;
                }
                let inv = ring.inv((a0, a1)).expect("unit");
                let u = Unram::from_ints(p, &BigInt::from(a0), &BigInt::from(a1), disc, r as i64 + 2)
                    .expect("inert");
                let lg = u.log().expect("unit");
                let pm = |x: &PAdic| -> u64 {
                    x.with_precision(r as i64).residue().expect("integral log").mod_floor(&BigInt::from(m)).to_u64().unwrap()
                };
                entries[(a0 * ph + a1) as usize] = (inv, (pm(&lg.a), pm(&lg.b)));
            }
        }
        LogTable { p, r, ring, ph, entries }
    }

    pub fn modulus(&self) -> u64 {
        self.ring.m
    }

    #[inline]
    pub fn log(&self, y: Pair) -> Pair {
        let (inv, la) = self.entries[((y.0 % self.ph) * self.ph + y.1 % self.ph) as usize];
        let z = self.ring.mul(y, inv);
        let m = self.ring.m;
        ((la.0 + z.0 + m - 1) % m, (la.1 + z.1) % m)
    }
}

/// Labels the orbits of `<eps_+>` on `(O/p^r)^x`: the norm, refined by the
/// class of `y / s(N y)` in `ker N / <eps_+>` when that quotient is nontrivial.
#[derive(Clone, Debug)]
pub struct OrbitLabeler {
    pub ring: ModRing,
    pub split: u64,
    n1: u64,
    section_inv: Vec<Pair>,
}

impl OrbitLabeler {
    pub fn new(p: u64, r: u32, disc: i64, eps: Pair) -> OrbitLabeler {
        let m = p.pow(r);
        let ring = ModRing::new(m, disc);
        let n1 = (p + 1) * p.pow(r - 1);
        let mut ord = 1u64;
        let mut e = eps;
        while e != (1 % m, 0) {
            e = ring.mul(e, eps);
            ord += 1;
            assert!(ord <= n1, "eps_+ does not have norm one mod p^r");
        }
        let split = n1 / ord;
        let mut section_inv = Vec::new();
        if split > 1 {
            let phi = (p - 1) * p.pow(r - 1);
            let g = (0..m)
                .flat_map(|a| (0..m).map(move |b| (a, b)))
                .find(|&g| {
                    let n = ring.norm(g);
                    n % p != 0 && multiplicative_order(n, m, phi) == phi
                })
                .expect("norm generator exists");
            section_inv = vec![(0, 0); m as usize];
            let mut cur = (1 % m, 0);
            for _ in 0..phi {
                section_inv[ring.norm(cur) as usize] = ring.inv(cur).unwrap();
                cur = ring.mul(cur, g);
            }
        }
        OrbitLabeler { ring, split, n1, section_inv }
    }

    /// Label of a unit `y`; equal labels iff same orbit.
    #[inline]
    pub fn label(&self, y: Pair) -> u64 {
        let n = self.ring.norm(y);
        if self.split == 1 {
            return n;
        }
        let t = self.ring.pow(self.ring.mul(y, self.section_inv[n as usize]), self.n1 / self.split);
        let m = self.ring.m;
        (n * m + t.0) * m + t.1
    }
}

fn multiplicative_order(a: u64, m: u64, group: u64) -> u64 {
    let mut best = group;
    for q in prime_factors(group) {
        while best % q == 0 && pow_mod(a, best / q, m) == 1 {
            best /= q;
        }
    }
    best
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Prime smoothing data: `phi(x + y sqrt D) = x + y s mod l` with `s^2 = D mod l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeSmoothing {
    pub ell: i64,
    pub s: i64,
}

/// Result of one sweep of a class at level `r`.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub p: u64,
    pub level: u32,
    /// `12 M^2 D_c`: orbit sums below are Shintani values times this.
    pub scale: i128,
    /// `(lexicographically least residue, scaled orbit sum)`, in first-visit order.
    pub orbits: Vec<((i64, i64), i128)>,
    labels: HashMap<u64, usize>,
    pub labeler: OrbitLabeler,
    /// `sum_x lambda_l(x) log(tau . x) mod p^r` when prime smoothing was requested.
    pub j_ell: Option<Pair>,
    /// Scaled total mass of the Shintani values, which must vanish.
    pub mass: i128,
    pub ell_mass: i128,
}

impl SweepOutput {
    pub fn orbit_of(&self, y: Pair) -> usize {
        self.labels[&self.labeler.label(y)]
    }
}

struct ConeInt {
    g1: (i64, i64),
    g2: (i64, i64),
    det: i64,
    c20: i128,
    c11: i128,
    c02: i128,
}

/// Quadratic `a s1^2 + b s1 s2 + c s2^2 + d s1 + e s2 + f`, plus ray part `rs s1 + r0`.
#[derive(Clone, Copy, Default)]
struct Quad {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
    e: i128,
    f: i128,
    rs: i128,
    r0: i128,
}

impl Quad {
    #[inline]
    fn eval(&self, s1: i64, s2: i64, sq1: i64, sq2: i64, ray: bool) -> i128 {
        let mut v = self.a * sq1 as i128
            + self.b * (s1 * s2) as i128
            + self.c * sq2 as i128
            + self.d * s1 as i128
            + self.e * s2 as i128
            + self.f;
        if ray {
            v += self.rs * s1 as i128 + self.r0;
        }
        v
    }
}

/// Residue of `tau2 = (-b - sqrt D)/(2a)` mod `m`.
pub fn tau2_mod(f: &Form, m: u64) -> Pair {
    let inv = inv_mod(2 * f.a, m as i64).expect("a prime to p") as i128;
    let mi = m as i128;
    let x = ((-f.b as i128).rem_euclid(mi) * inv % mi) as u64;
    let y = ((mi - 1) * inv % mi) as u64;
    (x, y)
}

/// Whether the smoothing map vanishes on the first cone generator, which the
/// sweep does not support.
pub fn smoothing_degenerate(f: &Form, dom: &ShintaniDomain, ps: PrimeSmoothing) -> bool {
    let l = ps.ell;
    let t2 = tau2_mod(f, l as u64);
    let phi_t2 = (t2.0 as i64 + t2.1 as i64 * ps.s).rem_euclid(l);
    let g = dom.cones[0].g1;
    (g.0 + g.1 * phi_t2).rem_euclid(l) == 0
}

/// Runs the sweep for the class of the good form `f` (with `a > 0` prime to `p`).
pub fn sweep_class(
    f: &Form,
    dom: &ShintaniDomain,
    p: u64,
    r: u32,
    smoothing: Option<(PrimeSmoothing, &LogTable)>,
) -> Result<SweepOutput, SweepError> {
    let m = p.pow(r) as i64;
    let disc = f.disc();
    // cone coefficients with a common denominator
    let mut dc = BigInt::one();
    let rat_cones: Vec<_> = dom
        .cones
        .iter()
        .map(|c| {
            let co = cone_coefs(&c.w1, &c.w2, 1);
            for (_, _, v) in &co {
                dc = dc.lcm(v.denom());
            }
            co
        })
        .collect();
    let to_i = |q: &BigRational| -> i128 {
        let v = q * BigRational::from_integer(dc.clone());
        v.to_integer().to_i128().expect("coefficient fits i128")
    };
    let dci = dc.to_i128().expect("common denominator fits i128");
    let cones: Vec<ConeInt> = dom
        .cones
        .iter()
        .zip(&rat_cones)
        .map(|(c, co)| {
            let get = |l1: usize| to_i(&co.iter().find(|t| t.0 == l1).unwrap().2);
            ConeInt { g1: c.g1, g2: c.g2, det: c.det, c20: get(2), c11: get(1), c02: get(0) }
        })
        .collect();

    let maxc = cones
        .iter()
        .flat_map(|c| [c.c20.abs(), c.c11.abs(), c.c02.abs()])
        .chain([dci])
        .max()
        .unwrap() as f64;
    let ell = smoothing.map(|(s, _)| s.ell).unwrap_or(1) as f64;
    let n = ell * m as f64;
    // per-point bound; accumulators are checked
    let per = maxc * 40.0 * n * n * ell * ell * ell * cones.len() as f64;
    let bits = per.log2().ceil() as u32;
    if bits >= 126 {
        return Err(SweepError::Overflow(bits));
    }

    let mi = m as i128;
    let base: Vec<Quad> = cones
        .iter()
        .map(|c| Quad {
            a: 12 * c.c20,
            b: 12 * c.c11,
            c: 12 * c.c02,
            d: -12 * mi * c.c20 - 6 * mi * c.c11,
            e: -12 * mi * c.c02 - 6 * mi * c.c11,
            f: 2 * mi * mi * c.c20 + 3 * mi * mi * c.c11 + 2 * mi * mi * c.c02,
            rs: -12 * mi * dci,
            r0: 6 * mi * mi * dci,
        })
        .collect();

    // prime smoothing quadratics per cone and per e
    struct Lift {
        ell: i64,
        kappa: (i64, i64),
        quads: Vec<Quad>,
    }
    let mut lifts: Vec<Lift> = Vec::new();
    if let Some((ps, _)) = smoothing {
        let l = ps.ell;
        let t2 = tau2_mod(f, l as u64);
        let t2 = (t2.0 as i64, t2.1 as i64);
        let phi_t = [1i64, (t2.0 + t2.1 * ps.s).rem_euclid(l)];
        let phi = |g: (i64, i64)| (g.0 * phi_t[0] + g.1 * phi_t[1]).rem_euclid(l);
        if phi(dom.cones[0].g1) == 0 {
            return Err(SweepError::DegenerateSmoothing);
        }
        let minv = inv_mod(m, l).unwrap();
        let li = l as i128;
        let ni = li * mi;
        for (c, b) in cones.iter().zip(&base) {
            let (p1, p2) = (phi(c.g1), phi(c.g2));
            let kappa = ((-p1 * minv).rem_euclid(l), (-p2 * minv).rem_euclid(l));
            let mut quads = Vec::with_capacity(l as usize);
            for e in 0..l {
                let (mut cnt, mut q1, mut q2, mut q11, mut q22, mut q12, mut r0, mut r1) =
                    (0i128, 0i128, 0i128, 0i128, 0i128, 0i128, 0i128, 0i128);
                for a in 0..l {
                    for bb in 0..l {
                        if (a * p1 + bb * p2).rem_euclid(l) != e {
                            continue;
                        }
                        let (a, bb) = (a as i128, bb as i128);
                        cnt += 1;
                        q1 += a;
                        q2 += bb;
                        q11 += a * a;
                        q22 += bb * bb;
                        q12 += a * bb;
                        if bb == li - 1 {
                            r0 += 1;
                            r1 += a;
                        }
                    }
                }
                // sums of P_N(t1), L_N(t1) L_N(t2), P_N(t2) over the lifts
                let w = Quad {
                    a: c.c20 * 12 * cnt,
                    c: c.c02 * 12 * cnt,
                    b: c.c11 * 3 * 4 * cnt,
                    d: c.c20 * (24 * mi * q1 - 12 * ni * cnt) + c.c11 * 3 * (4 * mi * q2 - 2 * ni * cnt),
                    e: c.c02 * (24 * mi * q2 - 12 * ni * cnt) + c.c11 * 3 * (4 * mi * q1 - 2 * ni * cnt),
                    f: c.c20 * (12 * mi * mi * q11 - 12 * ni * mi * q1 + 2 * ni * ni * cnt)
                        + c.c02 * (12 * mi * mi * q22 - 12 * ni * mi * q2 + 2 * ni * ni * cnt)
                        + c.c11 * 3 * (4 * mi * mi * q12 - 2 * ni * mi * q1 - 2 * ni * mi * q2 + ni * ni * cnt),
                    rs: -6 * ni * dci * 2 * r0,
                    r0: -6 * ni * dci * (2 * mi * r1 - ni * r0),
                };
                let l2 = li * li;
                quads.push(Quad {
                    a: l2 * b.a - li * w.a,
                    b: l2 * b.b - li * w.b,
                    c: l2 * b.c - li * w.c,
                    d: l2 * b.d - li * w.d,
                    e: l2 * b.e - li * w.e,
                    f: l2 * b.f - li * w.f,
                    rs: l2 * b.rs - li * w.rs,
                    r0: l2 * b.r0 - li * w.r0,
                });
            }
            lifts.push(Lift { ell: l, kappa, quads });
        }
    }

    let ring = ModRing::new(m as u64, disc);
    let eps = ring.from_rationals(&dom.eps.x, &dom.eps.y);
    let labeler = OrbitLabeler::new(p, r, disc, eps);
    let t2 = tau2_mod(f, m as u64);
    let mu = m as u64;

    // p-adic scaling for lambda_l: K = 12 l^2 M^2 D_c
    let (kp, kinv, pr) = if let Some((ps, _)) = smoothing {
        let k = 12 * (ps.ell as i128).pow(2) * mi * mi * dci;
        let mut kp = 1i128;
        let mut rest = k;
        while rest % p as i128 == 0 {
            rest /= p as i128;
            kp *= p as i128;
        }
        let inv = inv_mod((rest.rem_euclid(mi)) as i64, m).unwrap() as i128;
        (kp, inv, mi)
    } else {
        (1, 1, mi)
    };

    let mut labels: HashMap<u64, usize> = HashMap::new();
    let mut dense: Vec<u32> = if labeler.split == 1 { vec![u32::MAX; m as usize] } else { Vec::new() };
    let mut orbits: Vec<((i64, i64), i128)> = Vec::new();
    let mut mass = 0i128;
    let mut ell_mass = 0i128;
    let mut jacc: (u128, u128) = (0, 0);
    let sm: Vec<i64> = match &lifts.first() {
        Some(l) => (0..=m).map(|s| s % l.ell).collect(),
        None => Vec::new(),
    };
    let mut s = vec![(0i64, 0i64); cones.len()];
    for x1 in 0..m {
        // cone coordinates at x2 = 0, stepped along x2
        for (j, c) in cones.iter().enumerate() {
            let (a, b) = c.g1;
            let (cc, d) = c.g2;
            s[j] = ((x1 * d * c.det).rem_euclid(m), ((-b * x1) * c.det).rem_euclid(m));
            let _ = (a, cc);
        }
        let step: Vec<(i64, i64)> = cones
            .iter()
            .map(|c| ((-c.g2.0 * c.det).rem_euclid(m), (c.g1.0 * c.det).rem_euclid(m)))
            .collect();
        let mut y = (x1 as u64 % mu, 0u64);
        for x2 in 0..m {
            if x2 > 0 {
                for (sj, st) in s.iter_mut().zip(&step) {
                    sj.0 += st.0;
                    if sj.0 >= m {
                        sj.0 -= m;
                    }
                    sj.1 += st.1;
                    if sj.1 >= m {
                        sj.1 -= m;
                    }
                }
                y.0 = (y.0 + t2.0) % mu;
                y.1 = (y.1 + t2.1) % mu;
            }
            if x1 % p as i64 == 0 && x2 % p as i64 == 0 {
                continue;
            }
            let mut v = 0i128;
            let mut lam = 0i128;
            for (j, q) in base.iter().enumerate() {
                let s1 = if s[j].0 == 0 { m } else { s[j].0 };
                let ray = s[j].1 == 0;
                let s2 = if ray { m } else { s[j].1 };
                let (sq1, sq2) = (s1 * s1, s2 * s2);
                v += q.eval(s1, s2, sq1, sq2, ray);
                if let Some(lf) = lifts.get(j) {
                    let e = (lf.kappa.0 * sm[s1 as usize] + lf.kappa.1 * sm[s2 as usize]) % lf.ell;
                    lam += lf.quads[e as usize].eval(s1, s2, sq1, sq2, ray);
                }
            }
            mass = mass.checked_add(v).ok_or(SweepError::Overflow(127))?;
            let key = labeler.label(y);
            let idx = if labeler.split == 1 {
                let slot = &mut dense[key as usize];
                if *slot == u32::MAX {
                    *slot = orbits.len() as u32;
                    orbits.push(((x1, x2), 0));
                }
                *slot as usize
            } else {
                let len = orbits.len();
                let i = *labels.entry(key).or_insert(len);
                if i == len {
                    orbits.push(((x1, x2), 0));
                }
                i
            };
            orbits[idx].1 = orbits[idx].1.checked_add(v).ok_or(SweepError::Overflow(127))?;
            if let Some((_, table)) = smoothing {
                ell_mass = ell_mass.checked_add(lam).ok_or(SweepError::Overflow(127))?;
                let red = lam.rem_euclid(kp * pr);
                if red % kp != 0 {
                    return Err(SweepError::NotIntegral(x1, x2));
                }
                let l = ((red / kp) * kinv % pr) as u128;
                let lg = table.log(y);
                jacc.0 += l * lg.0 as u128;
                jacc.1 += l * lg.1 as u128;
            }
        }
        jacc = (jacc.0 % mu as u128, jacc.1 % mu as u128);
    }
    if labeler.split == 1 {
        for (k, slot) in dense.iter().enumerate() {
            if *slot != u32::MAX {
                labels.insert(k as u64, *slot as usize);
            }
        }
    }
    let j_ell = smoothing.map(|_| (jacc.0 as u64 % mu, jacc.1 as u64 % mu));
    Ok(SweepOutput {
        p,
        level: r,
        scale: 12 * mi * mi * dci,
        orbits,
        labels,
        labeler,
        j_ell,
        mass,
        ell_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zeta::residue_table;
    use num_traits::Zero;

    #[test]
    fn orbit_sums_match_exact_values() {
        let f = Form::new(1, -27, 10);
        let dom = ShintaniDomain::for_form(&f).unwrap();
        for r in 1..=2 {
            let out = sweep_class(&f, &dom, 3, r, None).unwrap();
            assert_eq!(out.mass, 0);
            let tab = residue_table(&dom, 3, r, 1);
            let m = 3i64.pow(r);
            let t2 = tau2_mod(&f, m as u64);
            let ring = ModRing::new(m as u64, 689);
            let mut sums = vec![BigRational::zero(); out.orbits.len()];
            for (&(x1, x2), v) in &tab {
                let y = ring.mul((x2 as u64, 0), t2);
                let y = ((y.0 + x1 as u64) % m as u64, y.1);
                sums[out.orbit_of(y)] += v;
            }
            for (i, (_, s)) in out.orbits.iter().enumerate() {
                let got = BigRational::new(BigInt::from(*s), BigInt::from(out.scale));
                assert_eq!(got, sums[i], "r = {r}, orbit {i}");
            }
        }
    }

    #[test]
    fn prime_smoothed_log_sum_matches_exact() {
        let f = Form::new(1, -27, 10);
        let dom = ShintaniDomain::for_form(&f).unwrap();
        let (p, r, ell, sroot) = (3u64, 2u32, 5i64, 3i64);
        let m = p.pow(r) as i64;
        let table = LogTable::new(p, r, 689);
        let ps = PrimeSmoothing { ell, s: sroot };
        let out = sweep_class(&f, &dom, p, r, Some((ps, &table))).unwrap();
        assert_eq!(out.ell_mass, 0);
        let coefs = dom.coefs(1);
        let t2l = tau2_mod(&f, ell as u64);
        let phi = |x: (i64, i64)| (x.0 + x.1 * (t2l.0 as i64 + t2l.1 as i64 * sroot)).rem_euclid(ell);
        let ring = ModRing::new(m as u64, 689);
        let t2 = tau2_mod(&f, m as u64);
        let (mut ja, mut jb) = (BigRational::zero(), BigRational::zero());
        for x1 in 0..m {
            for x2 in 0..m {
                if x1 % 3 == 0 && x2 % 3 == 0 {
                    continue;
                }
                let mut lam = dom.residue_value((x1, x2), m, 1, &coefs);
                for q1 in 0..ell {
                    for q2 in 0..ell {
                        let y = (x1 + m * q1, x2 + m * q2);
                        if phi(y) == 0 {
                            lam -= dom.residue_value(y, ell * m, 1, &coefs) * BigRational::from_integer(BigInt::from(ell));
                        }
                    }
                }
                let y = ring.mul((x2 as u64, 0), t2);
                let lg = table.log(((y.0 + x1 as u64) % m as u64, y.1));
                ja += &lam * BigRational::from_integer(BigInt::from(lg.0));
                jb += &lam * BigRational::from_integer(BigInt::from(lg.1));
            }
        }
        let j = out.j_ell.unwrap();
        assert_eq!(rat_mod(&ja, m as u64), j.0);
        assert_eq!(rat_mod(&jb, m as u64), j.1);
    }

    #[test]
    fn log_table_matches_direct_log() {
        let t = LogTable::new(3, 5, 689);
        let u = Unram::from_ints(3, &BigInt::from(7), &BigInt::from(11), 689, 7).unwrap();
        let lg = u.log().unwrap();
        let got = t.log((7, 11));
        let m = BigInt::from(243);
        assert_eq!(BigInt::from(got.0), lg.a.with_precision(5).residue().unwrap().mod_floor(&m));
        assert_eq!(BigInt::from(got.1), lg.b.with_precision(5).residue().unwrap().mod_floor(&m));
    }

    #[test]
    fn labeler_splits_norm_fibres_when_needed() {
        // D = 12, p = 5: eps_+ = 2 + sqrt(12)/2 generates half of the norm-one group mod 5
        let lab = OrbitLabeler::new(5, 1, 12, (2, 3));
        assert_eq!(lab.split, 2);
        let lab = OrbitLabeler::new(3, 2, 689, ModRing::new(9, 689).from_rationals(
            &BigRational::from_integer(BigInt::from(105)),
            &BigRational::from_integer(BigInt::from(4)),
        ));
        assert_eq!(lab.split, 1);
    }
}
