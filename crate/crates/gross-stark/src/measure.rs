//! Smoothed Eisenstein measures on `X_r`, pushed to the unit-orbit quotient:
//! one ball per `eps_+`-orbit of residues, valued in exact rationals.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::padic::{inert_check, is_prime, PadicError};
use crate::quadfield::{check_fundamental, FieldError, Form, NarrowClassGroup, QuadElem};
use crate::sweep::{sweep_class, tau2_mod, ModRing, OrbitLabeler, Pair, SweepError, SweepOutput};
use crate::zeta::{residue_table, ShintaniDomain, ZetaError};

pub const CACHE_VERSION: u32 = 1;

/// Largest supported `p^r`.
pub const MAX_MODULUS: u64 = 1 << 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{p} is not inert in Q(sqrt {disc})")]
    NotInert { disc: i64, p: u64 },
    #[error("smoothing {c} must be at least 2 and coprime to {with}")]
    BadSmoothing { c: i64, with: i64 },
    #[error("form {form} does not have discriminant {disc} or is not primitive")]
    BadClass { form: Form, disc: i64 },
    #[error("level {0} is out of range")]
    Level(u32),
    #[error("total mass {0} is not zero")]
    Mass(String),
    #[error("parameter mismatch: {0}")]
    Mismatch(String),
    #[error("cache: {0}")]
    Cache(String),
}

/// Parameters of a measure. `avoid` lists extra primes the working form's
/// leading coefficient must be prime to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureSpec {
    pub disc: i64,
    pub p: u64,
    pub c: i64,
    pub class: Form,
    pub level: u32,
    pub avoid: Vec<i64>,
}

impl MeasureSpec {
    pub fn new(disc: i64, p: u64, c: i64, class: Form, level: u32) -> MeasureSpec {
        MeasureSpec { disc, p, c, class, level, avoid: Vec::new() }
    }

    pub fn with_avoid(mut self, avoid: &[i64]) -> MeasureSpec {
        self.avoid = avoid.to_vec();
        self
    }

    pub fn at_level(&self, level: u32) -> MeasureSpec {
        MeasureSpec { level, ..self.clone() }
    }

    pub fn modulus(&self) -> u64 {
        self.p.pow(self.level)
    }

    /// Checks the field, prime, smoothing and level.
    pub fn validate_base(&self) -> Result<(), MeasureError> {
        check_fundamental(self.disc)?;
        if !is_prime(self.p) {
            return Err(MeasureError::NotPrime(self.p));
        }
        if !inert_check(self.disc, self.p)? {
            return Err(MeasureError::NotInert { disc: self.disc, p: self.p });
        }
        let six_p = 6 * self.p as i64;
        if self.c < 2 || self.c.gcd(&six_p) != 1 {
            return Err(MeasureError::BadSmoothing { c: self.c, with: six_p });
        }
        if self.level == 0 || self.p.checked_pow(self.level).is_none_or(|m| m > MAX_MODULUS) {
            return Err(MeasureError::Level(self.level));
        }
        Ok(())
    }

    /// Validates and returns `(class representative, working form)`.
    pub fn resolve(&self) -> Result<(Form, Form), MeasureError> {
        self.validate_base()?;
        if self.class.disc() != self.disc || !self.class.is_primitive() {
            return Err(MeasureError::BadClass { form: self.class, disc: self.disc });
        }
        let g = NarrowClassGroup::new(self.disc)?;
        let rep = g.forms[g.index_of(&self.class)];
        Ok((rep, working_form(&rep, self.p, self.c, &self.avoid)))
    }

    pub fn cache_name(&self) -> String {
        let f = self.class;
        format!("measure-d{}-p{}-c{}-f{}_{}_{}-r{}.json", self.disc, self.p, self.c, f.a, f.b, f.c, self.level)
    }
}

/// Equivalent form with positive leading coefficient prime to `p`, `c` and `avoid`.
pub fn working_form(class: &Form, p: u64, c: i64, avoid: &[i64]) -> Form {
    let mut av = vec![p as i64, c];
    av.extend_from_slice(avoid);
    class.good_form(&av)
}

/// One ball: an orbit of residues with its lexicographically least member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    pub x: (i64, i64),
    pub value: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EisensteinMeasure {
    /// Parameters, with `class` the reduced class representative.
    pub spec: MeasureSpec,
    /// Working form `[a, b, c]`; the lattice is `Z tau1 + Z tau2`, `tau = (1, (-b - sqrt D)/(2a))`.
    pub form: Form,
    pub tau: [QuadElem; 2],
    /// Sorted by representative.
    pub balls: Vec<Ball>,
    pub provenance: String,
}

/// Whether a measure was read from disk or computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Built,
}

fn provenance(spec: &MeasureSpec, class: &Form, form: &Form, dom: &ShintaniDomain) -> String {
    let mut h = Sha256::new();
    let text = format!(
        "v{};disc={};p={};c={};class={};form={};level={};tau={},{};cones={:?}",
        CACHE_VERSION, spec.disc, spec.p, spec.c, class, form, spec.level, dom.tau[0], dom.tau[1], dom.coords
    );
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Provenance hash a measure for `spec` will carry.
pub fn expected_provenance(spec: &MeasureSpec) -> Result<String, MeasureError> {
    let (class, form) = spec.resolve()?;
    let dom = ShintaniDomain::for_form(&form)?;
    Ok(provenance(spec, &class, &form, &dom))
}

impl EisensteinMeasure {
    pub fn modulus(&self) -> u64 {
        self.spec.modulus()
    }

    pub fn total_mass(&self) -> BigRational {
        self.balls.iter().map(|b| &b.value).sum()
    }

    pub fn value_at(&self, x: (i64, i64)) -> Option<&BigRational> {
        self.balls.binary_search_by(|b| b.x.cmp(&x)).ok().map(|i| &self.balls[i].value)
    }

    /// `x1 + x2 tau2 mod p^r` in the `sqrt D` basis.
    pub fn residue_pair(&self, x: (i64, i64)) -> Pair {
        residue_pair(&self.form, self.modulus(), x)
    }

    /// `N(a) N(tau^t x) = a x1^2 - b x1 x2 + c x2^2`.
    pub fn ideal_norm(&self, x: (i64, i64)) -> BigInt {
        BigInt::from(self.form.eval(x.0, -x.1))
    }

    /// `tau^t x` as a field element.
    pub fn point(&self, x: (i64, i64)) -> QuadElem {
        self.tau[0].mul_int(x.0).add(&self.tau[1].mul_int(x.1))
    }

    pub fn labeler(&self) -> OrbitLabeler {
        let m = self.modulus();
        let ring = ModRing::new(m, self.spec.disc);
        let dom = ShintaniDomain::for_form(&self.form).expect("domain");
        OrbitLabeler::new(self.spec.p, self.spec.level, self.spec.disc, ring.from_rationals(&dom.eps.x, &dom.eps.y))
    }

    /// Same ball representatives with zero values.
    pub fn zeroed(&self) -> EisensteinMeasure {
        let mut m = self.clone();
        for b in &mut m.balls {
            b.value = BigRational::zero();
        }
        m
    }

    /// Measure with the given ball values, on the same parameters.
    pub fn with_values(&self, values: &[BigRational]) -> EisensteinMeasure {
        assert_eq!(values.len(), self.balls.len());
        let mut m = self.clone();
        for (b, v) in m.balls.iter_mut().zip(values) {
            b.value = v.clone();
        }
        m
    }

    /// Builds the `c`-smoothed measure from unsmoothed orbit sums:
    /// `lambda(O) = S(c O) - c^2 S(O)`.
    pub fn from_sweep(spec: &MeasureSpec, out: &SweepOutput) -> Result<EisensteinMeasure, MeasureError> {
        let (class, form) = spec.resolve()?;
        if out.p != spec.p || out.level != spec.level {
            return Err(MeasureError::Mismatch("sweep level or prime".into()));
        }
        let dom = ShintaniDomain::for_form(&form)?;
        let m = spec.modulus();
        let c = spec.c as u64 % m;
        let c2 = (spec.c as i128) * (spec.c as i128);
        let scale = BigInt::from(out.scale);
        let mut balls: Vec<Ball> = out
            .orbits
            .iter()
            .map(|&(x, s)| {
                let y = residue_pair(&form, m, x);
                let cy = ((y.0 * c) % m, (y.1 * c) % m);
                let sc = out.orbits[out.orbit_of(cy)].1;
                Ball { x, value: BigRational::new(BigInt::from(sc - c2 * s), scale.clone()) }
            })
            .collect();
        balls.sort_by(|a, b| a.x.cmp(&b.x));
        let provenance = provenance(spec, &class, &form, &dom);
        Ok(EisensteinMeasure { spec: MeasureSpec { class, ..spec.clone() }, form, tau: dom.tau, balls, provenance })
    }

    pub fn to_json(&self) -> String {
        let f = CacheFile {
            version: CACHE_VERSION,
            provenance: self.provenance.clone(),
            disc: self.spec.disc,
            p: self.spec.p,
            c: self.spec.c,
            class: self.spec.class.to_string(),
            form: self.form.to_string(),
            level: self.spec.level,
            tau: self.tau.clone().map(|t| [t.x.to_string(), t.y.to_string()]),
            balls: self.balls.iter().map(|b| (b.x.0, b.x.1, b.value.to_string())).collect(),
        };
        let mut s = serde_json::to_string(&f).expect("serializable");
        s.push('\n');
        s
    }

    /// Parses a cache file for `spec`. Fails on version or provenance mismatch.
    pub fn from_json(spec: &MeasureSpec, text: &str) -> Result<EisensteinMeasure, MeasureError> {
        let f: CacheFile = serde_json::from_str(text).map_err(|e| MeasureError::Cache(e.to_string()))?;
        if f.version != CACHE_VERSION {
            return Err(MeasureError::Cache(format!("version {} != {}", f.version, CACHE_VERSION)));
        }
        let (class, form) = spec.resolve()?;
        let dom = ShintaniDomain::for_form(&form)?;
        let want = provenance(spec, &class, &form, &dom);
        if f.provenance != want || f.form != form.to_string() || f.class != class.to_string() {
            return Err(MeasureError::Cache("provenance mismatch".into()));
        }
        let balls = f
            .balls
            .into_iter()
            .map(|(x1, x2, v)| {
                v.parse::<BigRational>()
                    .map(|value| Ball { x: (x1, x2), value })
                    .map_err(|e| MeasureError::Cache(format!("bad rational {v}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if !balls.windows(2).all(|w| w[0].x < w[1].x) {
            return Err(MeasureError::Cache("balls not sorted".into()));
        }
        Ok(EisensteinMeasure { spec: MeasureSpec { class, ..spec.clone() }, form, tau: dom.tau, balls, provenance: want })
    }

    pub fn cache_path(dir: &Path, spec: &MeasureSpec) -> Result<PathBuf, MeasureError> {
        let (class, _) = spec.resolve()?;
        Ok(dir.join(MeasureSpec { class, ..spec.clone() }.cache_name()))
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, MeasureError> {
        let path = dir.join(self.spec.cache_name());
        write_atomic(&path, &self.to_json())?;
        Ok(path)
    }

    /// Reads a valid cache entry, if present.
    pub fn load(dir: &Path, spec: &MeasureSpec) -> Result<Option<EisensteinMeasure>, MeasureError> {
        let path = Self::cache_path(dir, spec)?;
        match fs::read_to_string(&path) {
            Ok(text) => match Self::from_json(spec, &text) {
                Ok(m) => Ok(Some(m)),
                Err(MeasureError::Cache(_)) => Ok(None),
                Err(e) => Err(e),
            },
            Err(_) => Ok(None),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    provenance: String,
    disc: i64,
    p: u64,
    c: i64,
    class: String,
    form: String,
    level: u32,
    tau: [[String; 2]; 2],
    balls: Vec<(i64, i64, String)>,
}

pub fn write_atomic(path: &Path, text: &str) -> Result<(), MeasureError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| MeasureError::Cache(e.to_string()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| MeasureError::Cache(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| MeasureError::Cache(e.to_string()))
}

pub fn residue_pair(form: &Form, m: u64, x: (i64, i64)) -> Pair {
    let t2 = tau2_mod(form, m);
    let x1 = x.0.rem_euclid(m as i64) as u64;
    let x2 = x.1.rem_euclid(m as i64) as u128;
    (((x1 as u128 + x2 * t2.0 as u128) % m as u128) as u64, ((x2 * t2.1 as u128) % m as u128) as u64)
}

/// Builds the measure with one lattice sweep.
pub fn build_measure(spec: &MeasureSpec) -> Result<EisensteinMeasure, MeasureError> {
    let (_, form) = spec.resolve()?;
    let dom = ShintaniDomain::for_form(&form)?;
    let out = sweep_class(&form, &dom, spec.p, spec.level, None)?;
    if out.mass != 0 {
        return Err(MeasureError::Mass(format!("{}/{}", out.mass, out.scale)));
    }
    EisensteinMeasure::from_sweep(spec, &out)
}

/// Builds the measure from exact per-residue zeta values; slow, for cross-checks.
pub fn exact_measure(spec: &MeasureSpec) -> Result<EisensteinMeasure, MeasureError> {
    let (class, form) = spec.resolve()?;
    let dom = ShintaniDomain::for_form(&form)?;
    let m = spec.modulus();
    let ring = ModRing::new(m, spec.disc);
    let lab = OrbitLabeler::new(spec.p, spec.level, spec.disc, ring.from_rationals(&dom.eps.x, &dom.eps.y));
    let table = residue_table(&dom, spec.p as i64, spec.level, 1);
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut orbits: Vec<((i64, i64), BigRational)> = Vec::new();
    for (&x, v) in &table {
        let key = lab.label(residue_pair(&form, m, x));
        let i = *index.entry(key).or_insert_with(|| {
            orbits.push((x, BigRational::zero()));
            orbits.len() - 1
        });
        orbits[i].1 += v;
    }
    let c = spec.c as u64 % m;
    let c2 = BigRational::from_integer(BigInt::from(spec.c * spec.c));
    let balls = orbits
        .iter()
        .map(|(x, s)| {
            let y = residue_pair(&form, m, *x);
            let j = index[&lab.label(((y.0 * c) % m, (y.1 * c) % m))];
            Ball { x: *x, value: &orbits[j].1 - &c2 * s }
        })
        .collect();
    let provenance = provenance(spec, &class, &form, &dom);
    Ok(EisensteinMeasure { spec: MeasureSpec { class, ..spec.clone() }, form, tau: dom.tau, balls, provenance })
}

/// Loads from `dir` when a valid entry exists, otherwise builds and stores.
pub fn load_or_build(spec: &MeasureSpec, dir: Option<&Path>) -> Result<(EisensteinMeasure, CacheStatus), MeasureError> {
    if let Some(d) = dir {
        if let Some(m) = EisensteinMeasure::load(d, spec)? {
            return Ok((m, CacheStatus::Hit));
        }
    }
    let m = build_measure(spec)?;
    if let Some(d) = dir {
        m.save(d)?;
    }
    Ok((m, CacheStatus::Built))
}

/// Per-ball discrepancy of the distribution relation between two levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineReport {
    pub mismatches: Vec<((i64, i64), BigRational, BigRational)>,
}

impl RefineReport {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Checks `lambda_r(O) = sum of lambda_{r+1}(O')` over the orbits `O'` above `O`.
pub fn refine_report(coarse: &EisensteinMeasure, fine: &EisensteinMeasure) -> Result<RefineReport, MeasureError> {
    let (a, b) = (&coarse.spec, &fine.spec);
    if a.disc != b.disc || a.p != b.p || a.c != b.c || a.class != b.class || coarse.form != fine.form {
        return Err(MeasureError::Mismatch("measures have different parameters".into()));
    }
    if b.level != a.level + 1 {
        return Err(MeasureError::Mismatch(format!("levels {} and {} are not adjacent", a.level, b.level)));
    }
    let m = coarse.modulus() as i64;
    let lab = coarse.labeler();
    let index: HashMap<u64, usize> =
        coarse.balls.iter().enumerate().map(|(i, bl)| (lab.label(coarse.residue_pair(bl.x)), i)).collect();
    let mut sums = vec![BigRational::zero(); coarse.balls.len()];
    for bl in &fine.balls {
        let x = (bl.x.0.rem_euclid(m), bl.x.1.rem_euclid(m));
        let i = *index
            .get(&lab.label(coarse.residue_pair(x)))
            .ok_or_else(|| MeasureError::Mismatch(format!("child {:?} has no parent", bl.x)))?;
        sums[i] += &bl.value;
    }
    let mismatches = coarse
        .balls
        .iter()
        .zip(sums)
        .filter(|(bl, s)| bl.value != *s)
        .map(|(bl, s)| (bl.x, bl.value.clone(), s))
        .collect();
    Ok(RefineReport { mismatches })
}

pub fn refine_consistency(coarse: &EisensteinMeasure, fine: &EisensteinMeasure) -> Result<bool, MeasureError> {
    Ok(refine_report(coarse, fine)?.holds())
}

/// Whether every ball value has denominator a power of `c`.
pub fn values_in_z_c(m: &EisensteinMeasure) -> bool {
    let c = BigInt::from(m.spec.c);
    m.balls.iter().all(|b| {
        let mut d = b.value.denom().clone();
        loop {
            let g = d.gcd(&c);
            if g.is_one() {
                break;
            }
            d /= g;
        }
        d.is_one()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: i64, p: u64, c: i64, f: Form, r: u32) -> MeasureSpec {
        MeasureSpec::new(d, p, c, f, r)
    }

    #[test]
    fn sweep_matches_exact_path() {
        for r in 1..=2 {
            let s = spec(689, 3, 5, Form::new(10, 7, -16), r);
            let a = build_measure(&s).unwrap();
            let b = exact_measure(&s).unwrap();
            assert_eq!(a, b, "r = {r}");
            assert!(a.total_mass().is_zero());
            assert!(values_in_z_c(&a));
        }
    }

    #[test]
    fn refinement_and_corruption() {
        let s = spec(689, 3, 5, Form::new(10, 7, -16), 1);
        let m1 = build_measure(&s).unwrap();
        let m2 = build_measure(&s.at_level(2)).unwrap();
        assert!(refine_consistency(&m1, &m2).unwrap());
        let mut bad = m2.clone();
        bad.balls[3].value += BigRational::one();
        assert!(!refine_consistency(&m1, &bad).unwrap());
        assert!(refine_consistency(&m1, &m1).is_err());
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let s = spec(12, 5, 7, Form::principal(12), 1);
        let m = build_measure(&s).unwrap();
        let text = m.to_json();
        let back = EisensteinMeasure::from_json(&s, &text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
        let stale = text.replace("\"version\":1", "\"version\":0");
        assert!(EisensteinMeasure::from_json(&s, &stale).is_err());
    }

    #[test]
    fn validation_errors() {
        let f = Form::principal(689);
        assert!(matches!(build_measure(&spec(689, 3, 3, f, 1)), Err(MeasureError::BadSmoothing { .. })));
        assert!(matches!(build_measure(&spec(689, 3, 4, f, 1)), Err(MeasureError::BadSmoothing { .. })));
        assert!(matches!(build_measure(&spec(689, 5, 7, f, 1)), Err(MeasureError::NotInert { .. })));
        assert!(matches!(build_measure(&spec(689, 3, 5, f, 0)), Err(MeasureError::Level(0))));
        assert!(build_measure(&spec(689, 3, 5, Form::principal(12), 1)).is_err());
    }
}
