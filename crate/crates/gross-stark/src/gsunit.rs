//! Gross-Stark units: the log-rigid integral of the Eisenstein measure at the
//! fixed point of the norm-one torus, its unsmoothing, and unit recognition.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lfun::{desmooth, lp_derivative0, LfunError, LpResult};
use crate::measure::{
    expected_provenance, write_atomic, CacheStatus, EisensteinMeasure, MeasureError, MeasureSpec,
};
use crate::padic::{default_bound, is_prime, rational_reconstruct, PAdic, PadicError, Unram};
use crate::quadfield::{ideal_from_generators, FieldError, Form, NarrowClassGroup, QuadElem};
use crate::sweep::{
    smoothing_degenerate, sweep_class, LogTable, ModRing, Pair, PrimeSmoothing, SweepError,
};
use crate::zeta::{kronecker, zeta_of_class, ShintaniDomain, ZetaError};

/// Units in the tabulated normalization are `Frob(u)^(-2)` of the units whose
/// logarithm is the computed integral.
pub const TABLE_NORMALIZATION: i64 = -2;

/// Bound on the multiple of `log_p(eps_+)` searched during recognition.
pub const K_BOUND: i64 = 20;

pub const PRIME_CACHE_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GsError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Lfun(#[from] LfunError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Zeta(#[from] ZetaError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("total mass {0} is not zero")]
    Mass(String),
    #[error("smoothings {0} and {1} must be distinct and coprime")]
    Smoothings(i64, i64),
    #[error("no split prime below {0} gives a usable prime smoothing")]
    NoSmoothingPrime(i64),
    #[error("no certified digits left: {0}")]
    Precision(String),
    #[error("cache: {0}")]
    Cache(String),
}

/// Value of the log-rigid integral with its certified precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StResult {
    pub value: Unram,
    pub kappa: i64,
}

/// `sum lambda(ball) log_p(tau^t x_ball)`; refuses measures of nonzero mass.
pub fn st_integral(m: &EisensteinMeasure) -> Result<StResult, GsError> {
    st_integral_scaled(m, &QuadElem::from_ints(1, 0, m.spec.disc))
}

/// The integral with `tau` replaced by `alpha tau`.
pub fn st_integral_scaled(m: &EisensteinMeasure, alpha: &QuadElem) -> Result<StResult, GsError> {
    let mass = m.total_mass();
    if !mass.is_zero() {
        return Err(GsError::Mass(mass.to_string()));
    }
    let (p, disc) = (m.spec.p, m.spec.disc);
    let prec = m.spec.level as i64 + 8;
    let mut acc = Unram::new(PAdic::zero(p, prec), PAdic::zero(p, prec), disc)?;
    for b in &m.balls {
        if b.value.is_zero() {
            continue;
        }
        let z = alpha.mul(&m.point(b.x));
        let lg = Unram::from_rationals(p, &z.x, &z.y, disc, prec)?.log()?;
        acc = acc.add(&lg.scale(&PAdic::from_rational(p, &b.value, prec)));
    }
    let kappa = m.spec.level as i64 - 2;
    Ok(StResult { value: acc.with_precision(kappa), kappa })
}

/// Two smoothing integrals prime to `6p` and to each other: the first two primes `>= 5` other than `p`.
pub fn default_smoothings(p: u64) -> (i64, i64) {
    let mut it = (5u64..).filter(|&q| is_prime(q) && q != p);
    (it.next().unwrap() as i64, it.next().unwrap() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub disc: i64,
    pub p: u64,
    pub c: i64,
    pub d: i64,
    pub level: u32,
    pub cache_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn new(disc: i64, p: u64, level: u32) -> PipelineConfig {
        let (c, d) = default_smoothings(p);
        PipelineConfig { disc, p, c, d, level, cache_dir: None }
    }

    pub fn validate(&self) -> Result<(), GsError> {
        let f = Form::principal(self.disc);
        MeasureSpec::new(self.disc, self.p, self.c, f, self.level).validate_base()?;
        MeasureSpec::new(self.disc, self.p, self.d, f, self.level).validate_base()?;
        if self.c == self.d || self.c.gcd(&self.d) != 1 {
            return Err(GsError::Smoothings(self.c, self.d));
        }
        Ok(())
    }

    fn spec(&self, class: Form, c: i64, other: i64, ell: i64) -> MeasureSpec {
        MeasureSpec::new(self.disc, self.p, c, class, self.level).with_avoid(&[other, ell])
    }
}

/// Choice of the auxiliary split prime `l` and, per class, the prime above it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothingPlan {
    pub ell: i64,
    /// Per class: the root `s` of `D mod l` picking the prime `(l, sqrt D - s)`.
    pub roots: Vec<i64>,
    /// Per class `b`: the index of `b l^{-1}`.
    pub partners: Vec<usize>,
    /// Working forms, with leading coefficients prime to `p, c, d, l`.
    pub forms: Vec<Form>,
    /// Digits lost inverting the smoothing operator.
    pub loss: i64,
}

impl SmoothingPlan {
    /// Matrix of `J_l(b) = J(b) - l J(b l^{-1})`.
    pub fn matrix(&self) -> Vec<Vec<BigRational>> {
        let h = self.roots.len();
        let mut a = vec![vec![BigRational::zero(); h]; h];
        for i in 0..h {
            a[i][i] += BigRational::one();
            a[i][self.partners[i]] -= BigRational::from_integer(BigInt::from(self.ell));
        }
        a
    }
}

/// Class of the prime `(l, sqrt D - s)`.
pub fn prime_class(g: &NarrowClassGroup, ell: i64, s: i64) -> usize {
    let d = g.disc;
    let id = ideal_from_generators(&[QuadElem::from_ints(ell, 0, d), QuadElem::from_ints(-s, 1, d)]);
    g.index_of(&id.to_form())
}

/// Smallest split prime whose smoothing operator is invertible without loss,
/// falling back to the least lossy among the first few candidates.
pub fn choose_smoothing(g: &NarrowClassGroup, cfg: &PipelineConfig) -> Result<SmoothingPlan, GsError> {
    let d = g.disc;
    let mut best: Option<SmoothingPlan> = None;
    let mut tried = 0;
    let limit = 400;
    for ell in (3..limit).filter(|&l| is_prime(l as u64)) {
        if ell == cfg.p as i64 || d % ell == 0 || kronecker(d, ell) != 1 {
            continue;
        }
        let roots: Vec<i64> = (1..ell).filter(|s| (s * s - d).rem_euclid(ell) == 0).collect();
        let mut plan = SmoothingPlan { ell, roots: Vec::new(), partners: Vec::new(), forms: Vec::new(), loss: 0 };
        let mut ok = true;
        for (i, rep) in g.forms.iter().enumerate() {
            let form = cfg.spec(*rep, cfg.c, cfg.d, ell).resolve()?.1;
            let dom = ShintaniDomain::for_form(&form)?;
            match roots.iter().find(|&&s| !smoothing_degenerate(&form, &dom, PrimeSmoothing { ell, s })) {
                Some(&s) => {
                    plan.roots.push(s);
                    plan.partners.push(g.table[i][g.inverse(prime_class(g, ell, s))]);
                    plan.forms.push(form);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let det = determinant(&plan.matrix());
        if det.is_zero() {
            continue;
        }
        plan.loss = rational_valuation(cfg.p, &det);
        if plan.loss == 0 {
            return Ok(plan);
        }
        if best.as_ref().is_none_or(|b| plan.loss < b.loss) {
            best = Some(plan);
        }
        tried += 1;
        if tried >= 6 {
            break;
        }
    }
    best.ok_or(GsError::NoSmoothingPrime(limit))
}

fn rational_valuation(p: u64, q: &BigRational) -> i64 {
    crate::lfun::rational_valuation(p, q)
}

fn determinant(a: &[Vec<BigRational>]) -> BigRational {
    let n = a.len();
    let mut a = a.to_vec();
    let mut det = BigRational::one();
    for i in 0..n {
        let Some(piv) = (i..n).find(|&k| !a[k][i].is_zero()) else {
            return BigRational::zero();
        };
        if piv != i {
            a.swap(i, piv);
            det = -det;
        }
        det *= &a[i][i];
        for k in i + 1..n {
            let f = &a[k][i] / &a[i][i];
            if f.is_zero() {
                continue;
            }
            for j in i..n {
                let t = &f * &a[i][j];
                a[k][j] -= t;
            }
        }
    }
    det
}

/// Solves `a x = b` over the rationals; `None` when singular.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = b.len();
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    for i in 0..n {
        let piv = (i..n).find(|&k| !a[k][i].is_zero())?;
        a.swap(i, piv);
        b.swap(i, piv);
        for k in 0..n {
            if k == i {
                continue;
            }
            let f = &a[k][i] / &a[i][i];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                let t = &f * &a[i][j];
                a[k][j] -= t;
            }
            let t = &f * &b[i];
            b[k] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Sweep products for one class.
#[derive(Clone, Debug)]
pub struct ClassData {
    pub index: usize,
    pub class: Form,
    pub form: Form,
    pub s: i64,
    /// Prime-smoothed integral `sum lambda_l(x) log_p(tau^t x) mod p^r`.
    pub j_ell: Pair,
    pub measure_c: EisensteinMeasure,
    pub measure_d: EisensteinMeasure,
    pub cache: CacheStatus,
}

#[derive(Serialize, Deserialize)]
struct PrimeCache {
    version: u32,
    provenance: String,
    ell: i64,
    s: i64,
    j: [u64; 2],
}

fn prime_provenance(spec: &MeasureSpec, ell: i64, s: i64) -> Result<String, GsError> {
    let base = expected_provenance(spec)?;
    let mut h = Sha256::new();
    h.update(format!("prime-v{PRIME_CACHE_VERSION};{base};ell={ell};s={s}").as_bytes());
    Ok(hex::encode(h.finalize()))
}

fn prime_cache_path(dir: &Path, spec: &MeasureSpec, ell: i64, s: i64) -> PathBuf {
    let f = spec.class;
    dir.join(format!(
        "prime-d{}-p{}-f{}_{}_{}-r{}-l{}-s{}.json",
        spec.disc, spec.p, f.a, f.b, f.c, spec.level, ell, s
    ))
}

fn load_prime(dir: &Path, spec: &MeasureSpec, ell: i64, s: i64) -> Result<Option<Pair>, GsError> {
    let Ok(text) = fs::read_to_string(prime_cache_path(dir, spec, ell, s)) else {
        return Ok(None);
    };
    let Ok(pc) = serde_json::from_str::<PrimeCache>(&text) else {
        return Ok(None);
    };
    let want = prime_provenance(spec, ell, s)?;
    if pc.version != PRIME_CACHE_VERSION || pc.provenance != want || pc.ell != ell || pc.s != s {
        return Ok(None);
    }
    Ok(Some((pc.j[0], pc.j[1])))
}

fn save_prime(dir: &Path, spec: &MeasureSpec, ell: i64, s: i64, j: Pair) -> Result<(), GsError> {
    let pc = PrimeCache { version: PRIME_CACHE_VERSION, provenance: prime_provenance(spec, ell, s)?, ell, s, j: [j.0, j.1] };
    let mut text = serde_json::to_string(&pc).map_err(|e| GsError::Cache(e.to_string()))?;
    text.push('\n');
    write_atomic(&prime_cache_path(dir, spec, ell, s), &text)?;
    Ok(())
}

/// Loads or sweeps one class: both smoothed measures and the prime-smoothed integral.
pub fn class_data(
    cfg: &PipelineConfig,
    g: &NarrowClassGroup,
    plan: &SmoothingPlan,
    index: usize,
    table: &mut Option<LogTable>,
) -> Result<ClassData, GsError> {
    let class = g.forms[index];
    let s = plan.roots[index];
    let spec_c = cfg.spec(class, cfg.c, cfg.d, plan.ell);
    let spec_d = cfg.spec(class, cfg.d, cfg.c, plan.ell);
    let form = spec_c.resolve()?.1;
    if let Some(dir) = cfg.cache_dir.as_deref() {
        let mc = EisensteinMeasure::load(dir, &spec_c)?;
        let md = EisensteinMeasure::load(dir, &spec_d)?;
        let j = load_prime(dir, &spec_c, plan.ell, s)?;
        if let (Some(measure_c), Some(measure_d), Some(j_ell)) = (mc, md, j) {
            return Ok(ClassData { index, class, form, s, j_ell, measure_c, measure_d, cache: CacheStatus::Hit });
        }
    }
    let dom = ShintaniDomain::for_form(&form)?;
    let lt = table.get_or_insert_with(|| LogTable::new(cfg.p, cfg.level, cfg.disc));
    let out = sweep_class(&form, &dom, cfg.p, cfg.level, Some((PrimeSmoothing { ell: plan.ell, s }, lt)))?;
    if out.mass != 0 || out.ell_mass != 0 {
        return Err(GsError::Mass(format!("{} and {} over {}", out.mass, out.ell_mass, out.scale)));
    }
    let measure_c = EisensteinMeasure::from_sweep(&spec_c, &out)?;
    let measure_d = EisensteinMeasure::from_sweep(&spec_d, &out)?;
    let j_ell = out.j_ell.expect("prime smoothing requested");
    if let Some(dir) = cfg.cache_dir.as_deref() {
        measure_c.save(dir)?;
        measure_d.save(dir)?;
        save_prime(dir, &spec_c, plan.ell, s, j_ell)?;
    }
    Ok(ClassData { index, class, form, s, j_ell, measure_c, measure_d, cache: CacheStatus::Built })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Recognition {
    Matched,
    Ambiguous,
    Failed,
}

#[derive(Clone, Debug)]
pub struct GrossStarkRecord {
    pub class: Form,
    pub index: usize,
    pub order: usize,
    pub two_torsion: bool,
    /// `J[tau]` after undoing the prime smoothing.
    pub j_value: Unram,
    /// The log value: `-L_p'(0)/2` on 2-torsion classes, `J[tau] + k log_p(eps_+)` otherwise.
    pub log_value: Unram,
    pub kappa: i64,
    pub zeta0: BigRational,
    /// Predicted valuation of `u^power` in the tabulated normalization.
    pub valuation: Option<i64>,
    /// Smallest power of the unit with integral valuations at every class.
    pub power: i64,
    /// `TABLE_NORMALIZATION * Frob(log value)`.
    pub table_log: Unram,
    pub unit: Option<Unram>,
    pub status: Recognition,
    pub k: i64,
    pub s: i64,
    /// Desmoothed `L_p'(0)` from the `c`- and `d`-smoothed measures.
    pub lp_c: LpResult,
    pub lp_d: LpResult,
    /// Raw integral of the `c`-smoothed measure.
    pub st_c: StResult,
    pub frobenius_fixed: bool,
    /// Valuation of `Tr J + L_p'`, capped at `kappa`.
    pub trace_residual: i64,
    pub cache: CacheStatus,
}

impl GrossStarkRecord {
    pub fn trace_law_holds(&self) -> bool {
        self.trace_residual >= self.kappa
    }

    pub fn to_json(&self) -> Value {
        json!({
            "class": self.class.to_string(),
            "order": self.order,
            "two_torsion": self.two_torsion,
            "zeta_at_0": self.zeta0.to_string(),
            "valuation": self.valuation,
            "power": self.power,
            "log_value": self.log_value.to_string(),
            "j_value": self.j_value.to_string(),
            "table_log": self.table_log.to_string(),
            "unit": self.unit.as_ref().map(|u| u.to_string()),
            "status": self.status,
            "k": self.k,
            "prime_root": self.s,
            "lp_derivative": self.lp_c.to_json(),
            "lp_derivative_alt": self.lp_d.to_json(),
            "st_integral_smoothed": self.st_c.value.to_string(),
            "frobenius_fixed": self.frobenius_fixed,
            "trace_law": self.trace_law_holds(),
            "certified_mod": format!("{}^{}", self.lp_c.p, self.kappa),
        })
    }
}

/// Outcome of the joint recognition over classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecognitionInfo {
    pub status: Recognition,
    /// Assignments of `k` compatible with the partner relations.
    pub k_candidates: u128,
    /// Assignments of roots of unity compatible with the partner relations.
    pub zeta_candidates: u128,
    /// Candidate tuples whose polynomial reconstructed.
    pub matches: usize,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct GsReport {
    pub config: PipelineConfig,
    pub group: NarrowClassGroup,
    pub plan: SmoothingPlan,
    pub kappa: i64,
    pub normalization: i64,
    pub records: Vec<GrossStarkRecord>,
    pub recognition: RecognitionInfo,
    pub polynomial: Result<Vec<BigInt>, String>,
}

impl GsReport {
    pub fn to_json(&self) -> Value {
        let poly = match &self.polynomial {
            Ok(c) => json!({"coefficients": c.iter().map(|x| x.to_string()).collect::<Vec<_>>()}),
            Err(e) => json!({"failure": e}),
        };
        json!({
            "disc": self.config.disc,
            "p": self.config.p,
            "c": self.config.c,
            "d": self.config.d,
            "level": self.config.level,
            "certified_mod": format!("{}^{}", self.config.p, self.kappa),
            "normalization": self.normalization,
            "frobenius": "sqrt D -> -sqrt D",
            "smoothing_prime": self.plan.ell,
            "smoothing_loss": self.plan.loss,
            "class_number": self.group.order(),
            "classes": self.records.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            "recognition": {
                "status": self.recognition.status,
                "k_candidates": self.recognition.k_candidates.to_string(),
                "root_of_unity_candidates": self.recognition.zeta_candidates.to_string(),
                "matches": self.recognition.matches,
                "note": self.recognition.note,
            },
            "polynomial": poly,
        })
    }
}

/// `TABLE_NORMALIZATION * Frob(x)`.
pub fn to_table_normalization(x: &Unram) -> Unram {
    x.conjugate().mul_int(TABLE_NORMALIZATION)
}

/// Constant `t` with `table_vals = t * zetas`, if one exists.
pub fn fit_normalization(zetas: &[BigRational], table_vals: &[i64]) -> Option<BigRational> {
    let mut t: Option<BigRational> = None;
    for (z, v) in zetas.iter().zip(table_vals) {
        let v = BigRational::from_integer(BigInt::from(*v));
        if z.is_zero() {
            if !v.is_zero() {
                return None;
            }
            continue;
        }
        let q = v / z;
        match &t {
            Some(t0) if *t0 != q => return None,
            _ => t = Some(q),
        }
    }
    t
}

fn unram_zero(p: u64, disc: i64, prec: i64) -> Unram {
    Unram::new(PAdic::zero(p, prec), PAdic::zero(p, prec), disc).expect("inert")
}

fn eq_mod(a: &Unram, b: &Unram, k: i64) -> bool {
    a.with_precision(k).eq_at_precision(&b.with_precision(k))
}

/// Valuation of `x` capped at `cap`.
fn capped_valuation(x: &Unram, cap: i64) -> i64 {
    let y = x.with_precision(cap);
    if y.is_zero() {
        cap
    } else {
        y.valuation().min(cap)
    }
}

fn log_eps(disc: i64, p: u64, prec: i64) -> Result<Unram, GsError> {
    let dom = ShintaniDomain::for_form(&Form::principal(disc).good_form(&[p as i64]))?;
    Ok(Unram::from_rationals(p, &dom.eps.x, &dom.eps.y, disc, prec)?.log()?)
}

/// Runs every stage for all classes.
pub fn run_pipeline(cfg: &PipelineConfig, progress: &mut dyn FnMut(&str)) -> Result<GsReport, GsError> {
    cfg.validate()?;
    let g = NarrowClassGroup::new(cfg.disc)?;
    let plan = choose_smoothing(&g, cfg)?;
    progress(&format!(
        "h+ = {}, smoothing prime {} (loss {}), c = {}, d = {}, level {}",
        g.order(),
        plan.ell,
        plan.loss,
        cfg.c,
        cfg.d,
        cfg.level
    ));
    let mut table = None;
    let mut data = Vec::new();
    for i in 0..g.order() {
        let cd = class_data(cfg, &g, &plan, i, &mut table)?;
        progress(&format!("class {} ({}): {:?}", g.forms[i], cd.form, cd.cache));
        data.push(cd);
    }
    let (p, disc) = (cfg.p, cfg.disc);
    let r = cfg.level as i64;

    // undo the prime smoothing exactly
    let a = plan.matrix();
    let mut j_un = vec![unram_zero(p, disc, r); g.order()];
    for comp in 0..2 {
        let rhs: Vec<BigRational> = data
            .iter()
            .map(|cd| BigRational::from_integer(BigInt::from(if comp == 0 { cd.j_ell.0 } else { cd.j_ell.1 })))
            .collect();
        let x = solve_rational(&a, &rhs).ok_or_else(|| GsError::Precision("singular smoothing operator".into()))?;
        for (i, xi) in x.iter().enumerate() {
            let v = PAdic::from_rational(p, xi, r - plan.loss);
            j_un[i] = if comp == 0 {
                Unram::new(v, j_un[i].b.clone(), disc)?
            } else {
                Unram::new(j_un[i].a.clone(), v, disc)?
            };
        }
    }

    let mut records = Vec::new();
    for (i, cd) in data.iter().enumerate() {
        let lp_c = desmooth(&lp_derivative0(&cd.measure_c)?, cfg.c)?;
        let lp_d = desmooth(&lp_derivative0(&cd.measure_d)?, cfg.d)?;
        let kappa = (r - 2 - plan.loss).min(lp_c.kappa);
        if kappa <= 0 {
            return Err(GsError::Precision(format!("level {r} leaves no certified digits")));
        }
        let j = j_un[i].with_precision(kappa);
        let st_c = st_integral(&cd.measure_c)?;
        let two_torsion = g.is_two_torsion(i);
        let log_value = if two_torsion {
            let half = lp_c.value.div(&PAdic::from_i64(p, -2, kappa + 8))?;
            Unram::new(half.with_precision(kappa), PAdic::zero(p, kappa), disc)?
        } else {
            j.clone()
        };
        let lpu = Unram::new(lp_c.value.clone(), PAdic::zero(p, kappa), disc)?;
        let residual = Unram::new(j.trace(), PAdic::zero(p, kappa), disc)?.add(&lpu);
        let zeta0 = zeta_of_class(&cd.class, 1)?;
        records.push(GrossStarkRecord {
            class: cd.class,
            index: i,
            order: g.orders[i],
            two_torsion,
            frobenius_fixed: capped_valuation(&unram_b(&j), kappa) >= kappa,
            trace_residual: capped_valuation(&residual, kappa),
            table_log: to_table_normalization(&log_value),
            j_value: j,
            log_value,
            kappa,
            zeta0,
            valuation: None,
            power: 1,
            unit: None,
            status: Recognition::Failed,
            k: 0,
            s: cd.s,
            lp_c,
            lp_d,
            st_c,
            cache: cd.cache,
        });
    }
    assign_valuations(&mut records);
    let kappa = records.iter().map(|r| r.kappa).min().unwrap_or(0);
    let lambda_eps = report_lambda_eps(disc, p, kappa)?;
    let recognition = reconstruct_units(&g, &mut records, &lambda_eps, kappa, Target::BoundedHeight)?;
    let polynomial = unit_min_poly(&records, kappa).map_err(|e| e.to_string());
    Ok(GsReport { config: cfg.clone(), group: g, plan, kappa, normalization: TABLE_NORMALIZATION, records, recognition, polynomial })
}

/// Sets the common power `e` making every `e * TABLE_NORMALIZATION * zeta([a], 0)`
/// an integer, and those integers as the valuations of `u^e`.
pub fn assign_valuations(records: &mut [GrossStarkRecord]) {
    let t = BigRational::from_integer(BigInt::from(TABLE_NORMALIZATION));
    let e = records.iter().fold(BigInt::one(), |acc, r| acc.lcm((&r.zeta0 * &t).denom()));
    let power = e.to_i64();
    for r in records.iter_mut() {
        r.power = power.unwrap_or(0);
        r.valuation = power.and_then(|_| (&r.zeta0 * &t * BigRational::from_integer(e.clone())).to_integer().to_i64());
    }
}

fn unram_b(x: &Unram) -> Unram {
    Unram::new(x.b.clone(), PAdic::zero(x.prime(), x.precision()), x.disc()).expect("inert")
}

/// Partner structure of the classes: inversion (Frobenius on units) and
/// multiplication by the class of `sqrt D` (inversion on units).
#[derive(Clone, Debug)]
pub struct Partners {
    pub inverse: Vec<usize>,
    pub negation: Vec<usize>,
}

impl Partners {
    pub fn new(g: &NarrowClassGroup) -> Partners {
        let inverse = (0..g.order()).map(|i| g.inverse(i)).collect();
        let negation = g.forms.iter().map(|f| g.index_of(&Form::new(-f.a, f.b, -f.c))).collect();
        Partners { inverse, negation }
    }

    /// Orbits under the two involutions; each member carries the sign of `k`
    /// and the exponent on roots of unity relative to the orbit's first member.
    pub fn orbits(&self, p: u64) -> Vec<Vec<(usize, i64, u64)>> {
        let n = self.inverse.len();
        let q = p * p - 1;
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut orbit = vec![(start, 1i64, 1u64)];
            let mut k = 0;
            while k < orbit.len() {
                let (i, sg, e) = orbit[k];
                for (j, s2, e2) in [(self.inverse[i], -sg, (e * p) % q), (self.negation[i], -sg, (e * (q - 1)) % q)] {
                    if !seen[j] {
                        seen[j] = true;
                        orbit.push((j, s2, e2));
                    }
                }
                k += 1;
            }
            out.push(orbit);
        }
        out
    }

    /// Loops of the orbit: pairs `(sign, exponent)` that the orbit parameter
    /// must be invariant under.
    fn loops(&self, orbit: &[(usize, i64, u64)], p: u64) -> Vec<(i64, u64)> {
        let q = p * p - 1;
        let pos: BTreeMap<usize, (i64, u64)> = orbit.iter().map(|&(i, s, e)| (i, (s, e))).collect();
        let mut out = Vec::new();
        for &(i, sg, e) in orbit {
            for (j, s2, e2) in [(self.inverse[i], -sg, (e * p) % q), (self.negation[i], -sg, (e * (q - 1)) % q)] {
                let (sj, ej) = pos[&j];
                out.push((s2 * sj, e2 * inv_exp(ej, q) % q));
            }
        }
        out
    }
}

/// Inverse of a unit mod `q`.
fn inv_exp(e: u64, q: u64) -> u64 {
    crate::sweep::inv_mod(e as i64, q as i64).expect("unit exponent") as u64
}

fn to_pair(x: &Unram, m: &BigInt) -> Pair {
    let red = |y: &PAdic| y.residue().expect("integral").mod_floor(m).to_u64().unwrap();
    (red(&x.a), red(&x.b))
}

/// Generator of the roots of unity of order `p^2 - 1` mod `p^kappa`.
fn teichmuller_generator(ring: &ModRing, p: u64, kappa: i64) -> Pair {
    let q = p * p - 1;
    let small = ModRing::new(p, ring.d as i64);
    let mut gen = (0, 0);
    'find: for a in 0..p {
        for b in 0..p {
            if (a, b) == (0, 0) {
                continue;
            }
            let ord_ok = prime_divisors(q).into_iter().all(|f| small.pow((a, b), q / f) != (1, 0));
            if ord_ok {
                gen = (a, b);
                break 'find;
            }
        }
    }
    let mut x = gen;
    for _ in 0..kappa {
        x = ring.pow(x, p * p);
    }
    x
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `p^S P(X)` for `P = prod (X - p^v w)`, `S = sum max(v, 0)`, expanded mod `p^kappa`;
/// coefficients from the constant term up.
fn scaled_poly(ring: &ModRing, p: u64, factors: &[(i64, Pair)]) -> Vec<Pair> {
    let m = ring.m;
    let mut poly: Vec<Pair> = vec![(1 % m, 0)];
    for &(v, w) in factors {
        let neg = |x: Pair| ((m - x.0) % m, (m - x.1) % m);
        let pv = |e: i64| crate::sweep::pow_mod(p, e as u64, m);
        // (lead X - cst)
        let (lead, cst) = if v < 0 { ((pv(-v), 0), w) } else { ((1 % m, 0), ring.mul((pv(v), 0), w)) };
        let mut next = vec![(0, 0); poly.len() + 1];
        for (j, c) in poly.iter().enumerate() {
            let a = ring.mul(*c, lead);
            next[j + 1] = ((next[j + 1].0 + a.0) % m, (next[j + 1].1 + a.1) % m);
            let b = ring.mul(*c, neg(cst));
            next[j] = ((next[j].0 + b.0) % m, (next[j].1 + b.1) % m);
        }
        poly = next;
    }
    poly
}

/// Integers with absolute value at most `bound` reconstructing a coefficient list.
fn reconstruct_integers(poly: &[Pair], m: u64, bound: &BigInt) -> Option<Vec<BigInt>> {
    let mb = BigInt::from(m);
    poly.iter()
        .map(|&(a, b)| {
            if b != 0 {
                return None;
            }
            let q = rational_reconstruct(&BigInt::from(a), &mb, bound)?;
            q.is_integer().then(|| q.to_integer())
        })
        .collect()
}

/// What the candidate units are recognized against.
#[derive(Clone, Copy, Debug)]
pub enum Target<'a> {
    /// The expanded polynomial must have bounded-height integer coefficients.
    BoundedHeight,
    /// Every unit must be a root of the given integer polynomial (constant term first).
    Reference(&'a [BigInt]),
}

/// Candidate data shared by both recognition modes.
struct Candidates {
    p: u64,
    disc: i64,
    kappa: i64,
    orbits: Vec<Vec<(usize, i64, u64)>>,
    k_ranges: Vec<Vec<i64>>,
    t_allowed: Vec<Vec<u64>>,
    ring: ModRing,
    zgen: Pair,
    lambda_eps: Unram,
}

impl Candidates {
    fn new(g: &NarrowClassGroup, lambda_eps: &Unram, kappa: i64) -> Candidates {
        let p = lambda_eps.prime();
        let partners = Partners::new(g);
        let orbits = partners.orbits(p);
        let q = p * p - 1;
        let mut k_ranges = Vec::new();
        let mut t_allowed = Vec::new();
        for orbit in &orbits {
            let loops = partners.loops(orbit, p);
            let free = loops.iter().all(|&(s, _)| s == 1);
            k_ranges.push(if free { (-K_BOUND..=K_BOUND).collect() } else { vec![0] });
            t_allowed.push((0..q).filter(|&t| loops.iter().all(|&(_, e)| (t * e) % q == t)).collect::<Vec<u64>>());
        }
        let ring = ModRing::new(p.pow(kappa as u32), g.disc);
        let zgen = teichmuller_generator(&ring, p, kappa);
        Candidates { p, disc: g.disc, kappa, orbits, k_ranges, t_allowed, ring, zgen, lambda_eps: lambda_eps.clone() }
    }

    fn k_count(&self) -> u128 {
        self.k_ranges.iter().map(|r| r.len() as u128).product()
    }

    fn zeta_count(&self) -> u128 {
        self.t_allowed.iter().map(|t| t.len() as u128).product()
    }

    fn zeta(&self, t: u64, e: u64) -> Pair {
        let q = self.p * self.p - 1;
        self.ring.pow(self.zgen, (t * e) % q)
    }

    /// `p^v zeta exp(e * table log of (log value + k log eps))`, a candidate for `u^e`.
    fn unit(&self, rec: &GrossStarkRecord, k: i64, zeta: Pair) -> Result<Unram, GsError> {
        let lv = rec.log_value.add(&self.lambda_eps.mul_int(k)).mul_int(rec.power);
        let zu = Unram::from_ints(self.p, &BigInt::from(zeta.0), &BigInt::from(zeta.1), self.disc, self.kappa)?;
        let v = rec.valuation.expect("integral valuation");
        let pv = PAdic::from_parts(self.p, v, BigInt::one(), self.kappa + v.max(0));
        Ok(to_table_normalization(&lv).exp()?.mul(&zu).scale(&pv))
    }

    /// Applies per-orbit choices `(k, t)` to the records.
    fn apply(&self, records: &mut [GrossStarkRecord], choice: &[(i64, u64)]) -> Result<(), GsError> {
        for (orbit, &(k0, t0)) in self.orbits.iter().zip(choice) {
            for &(i, sg, e) in orbit {
                let k = sg * k0;
                let unit = self.unit(&records[i], k, self.zeta(t0, e))?;
                let rec = &mut records[i];
                rec.k = k;
                rec.log_value = rec.log_value.add(&self.lambda_eps.mul_int(k));
                rec.table_log = to_table_normalization(&rec.log_value);
                rec.unit = Some(unit);
            }
        }
        Ok(())
    }

    fn canonical(&self) -> Vec<(i64, u64)> {
        vec![(0, 0); self.orbits.len()]
    }
}

/// Resolves `k` and the roots of unity jointly over classes and fills in the
/// units. Without a successful recognition the units use `k = 0` and the
/// principal-unit root of unity.
pub fn reconstruct_units(
    g: &NarrowClassGroup,
    records: &mut [GrossStarkRecord],
    lambda_eps: &Unram,
    kappa: i64,
    target: Target,
) -> Result<RecognitionInfo, GsError> {
    let cand = Candidates::new(g, lambda_eps, kappa);
    let (k_count, zeta_count) = (cand.k_count(), cand.zeta_count());
    let info = |status, matches, note: String| RecognitionInfo { status, k_candidates: k_count, zeta_candidates: zeta_count, matches, note };
    let finish = |records: &mut [GrossStarkRecord], status| {
        for rec in records.iter_mut() {
            rec.status = status;
        }
    };
    if let Some(cls) = records.iter().find(|r| r.valuation.is_none()).map(|r| r.class) {
        finish(records, Recognition::Failed);
        return Ok(info(Recognition::Failed, 0, format!("predicted valuation of {cls} is not an integer")));
    }
    let p = cand.p;
    match target {
        Target::Reference(coeffs) => {
            // roots are checked class by class, so orbits are independent
            let mut choice = Vec::new();
            let mut total: u128 = 1;
            for (o, orbit) in cand.orbits.iter().enumerate() {
                let mut valid = Vec::new();
                for &k0 in &cand.k_ranges[o] {
                    for &t0 in &cand.t_allowed[o] {
                        let mut ok = true;
                        for &(i, sg, e) in orbit {
                            let u = cand.unit(&records[i], sg * k0, cand.zeta(t0, e))?;
                            if !root_check(coeffs, &u, kappa)? {
                                ok = false;
                                break;
                            }
                        }
                        if ok {
                            valid.push((k0, t0));
                        }
                    }
                }
                total *= valid.len() as u128;
                choice.push(valid.iter().copied().find(|&(k, t)| k == 0 && t == 0).or(valid.first().copied()).unwrap_or((0, 0)));
            }
            let status = match total {
                0 => Recognition::Failed,
                1 => Recognition::Matched,
                _ => Recognition::Ambiguous,
            };
            let picked = if total == 0 { cand.canonical() } else { choice };
            cand.apply(records, &picked)?;
            finish(records, status);
            let note = match status {
                Recognition::Matched => "unique candidate tuple consists of roots of the reference polynomial".to_string(),
                Recognition::Ambiguous => format!("{total} candidate tuples consist of roots of the reference polynomial"),
                Recognition::Failed => "no candidate tuple consists of roots of the reference polynomial".to_string(),
            };
            Ok(info(status, total.min(usize::MAX as u128) as usize, note))
        }
        Target::BoundedHeight => {
            let s_exp: i64 = records.iter().map(|r| r.valuation.unwrap().max(0)).sum();
            let modulus = BigInt::from(p).pow(kappa as u32);
            let bound = default_bound(&modulus);
            let lead = BigInt::from(p).pow(s_exp as u32);
            if lead > bound {
                cand.apply(records, &cand.canonical())?;
                finish(records, Recognition::Ambiguous);
                let need = (1..).find(|&k| default_bound(&BigInt::from(p).pow(k)) >= lead).unwrap_or(0);
                return Ok(info(
                    Recognition::Ambiguous,
                    0,
                    format!(
                        "raise r: leading coefficient {p}^{s_exp} needs certified precision {p}^{need}, have {p}^{kappa}; units use k = 0 and the principal-unit root of unity"
                    ),
                ));
            }
            let m = cand.ring.m;
            // per-record unit parts for each (k, zeta) are products of precomputed pieces
            let eta = to_pair(&lambda_eps.mul_int(-TABLE_NORMALIZATION).exp()?, &modulus);
            let eta_inv = cand.ring.inv(eta).expect("unit");
            let base: Vec<Pair> =
                records.iter().map(|r| Ok(to_pair(&r.table_log.exp()?, &modulus))).collect::<Result<_, GsError>>()?;
            let n = cand.orbits.len();
            let sizes: Vec<usize> = (0..n).map(|o| cand.k_ranges[o].len() * cand.t_allowed[o].len()).collect();
            let mut idx = vec![0usize; n];
            let mut matches: Vec<Vec<(i64, u64)>> = Vec::new();
            loop {
                let choice: Vec<(i64, u64)> = (0..n)
                    .map(|o| {
                        let nt = cand.t_allowed[o].len();
                        (cand.k_ranges[o][idx[o] / nt], cand.t_allowed[o][idx[o] % nt])
                    })
                    .collect();
                let mut factors = vec![(0i64, (0u64, 0u64)); records.len()];
                for (orbit, &(k0, t0)) in cand.orbits.iter().zip(&choice) {
                    for &(i, sg, e) in orbit {
                        let k = sg * k0;
                        let ek = if k >= 0 { cand.ring.pow(eta, k as u64) } else { cand.ring.pow(eta_inv, (-k) as u64) };
                        let w = cand.ring.mul(cand.ring.mul(base[i], ek), cand.zeta(t0, e));
                        factors[i] = (records[i].valuation.unwrap(), w);
                    }
                }
                let poly = scaled_poly(&cand.ring, p, &factors);
                if let Some(c) = reconstruct_integers(&poly, m, &bound) {
                    if c.last() == Some(&lead) {
                        matches.push(choice);
                    }
                }
                let mut o = 0;
                while o < n {
                    idx[o] += 1;
                    if idx[o] < sizes[o] {
                        break;
                    }
                    idx[o] = 0;
                    o += 1;
                }
                if o == n {
                    break;
                }
            }
            let status = match matches.len() {
                0 => Recognition::Failed,
                1 => Recognition::Matched,
                _ => Recognition::Ambiguous,
            };
            let canon = cand.canonical();
            let pick = matches.iter().find(|c| **c == canon).or(matches.first()).cloned().unwrap_or(canon);
            cand.apply(records, &pick)?;
            finish(records, status);
            let note = match status {
                Recognition::Matched => "unique candidate tuple reconstructs".to_string(),
                Recognition::Ambiguous => format!("{} candidate tuples reconstruct", matches.len()),
                Recognition::Failed => "no candidate tuple reconstructs to a bounded integer polynomial".to_string(),
            };
            Ok(info(status, matches.len(), note))
        }
    }
}

/// Re-runs recognition on a finished report against a reference polynomial.
pub fn recognize_against(report: &mut GsReport, reference: &[BigInt]) -> Result<(), GsError> {
    for rec in report.records.iter_mut() {
        rec.log_value = rec.log_value.sub(&report_lambda_eps(report.config.disc, report.config.p, report.kappa)?.mul_int(rec.k));
        rec.k = 0;
    }
    let le = report_lambda_eps(report.config.disc, report.config.p, report.kappa)?;
    report.recognition = reconstruct_units(&report.group, &mut report.records, &le, report.kappa, Target::Reference(reference))?;
    report.polynomial = unit_min_poly(&report.records, report.kappa).map_err(|e| e.to_string());
    Ok(())
}

fn report_lambda_eps(disc: i64, p: u64, kappa: i64) -> Result<Unram, GsError> {
    Ok(log_eps(disc, p, kappa + 8)?.with_precision(kappa))
}

/// Failure of polynomial reconstruction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("raise r: coefficients do not reconstruct at {0}^{1}")]
    RaiseR(u64, i64),
    #[error("unit missing for class {0}")]
    MissingUnit(Form),
}

/// `p^S prod (X - u)` with integer coefficients, constant term first.
pub fn unit_min_poly(records: &[GrossStarkRecord], kappa: i64) -> Result<Vec<BigInt>, PolyError> {
    let Some(first) = records.first() else {
        return Ok(vec![BigInt::one()]);
    };
    let p = first.lp_c.p;
    let disc = first.log_value.disc();
    let m = p.pow(kappa as u32);
    let modulus = BigInt::from(m);
    let ring = ModRing::new(m, disc);
    let mut factors = Vec::new();
    for r in records {
        let (Some(u), Some(v)) = (&r.unit, r.valuation) else {
            return Err(PolyError::MissingUnit(r.class));
        };
        let w = u.unit_part().map_err(|_| PolyError::MissingUnit(r.class))?;
        factors.push((v, to_pair(&w.with_precision(kappa), &modulus)));
    }
    let poly = scaled_poly(&ring, p, &factors);
    let s_exp: i64 = factors.iter().map(|f| f.0.max(0)).sum();
    let lead = BigInt::from(p).pow(s_exp as u32);
    match reconstruct_integers(&poly, m, &default_bound(&modulus)) {
        Some(c) if c.last() == Some(&lead) => Ok(c),
        _ => Err(PolyError::RaiseR(p, kappa)),
    }
}

/// Whether the integer polynomial (constant term first) vanishes at `u`
/// relative to its largest term, modulo `p^kappa`.
pub fn root_check(coeffs: &[BigInt], u: &Unram, kappa: i64) -> Result<bool, GsError> {
    let p = u.prime();
    let v = u.valuation();
    let w = u.unit_part()?.with_precision(kappa);
    let val = |c: &BigInt| -> Option<i64> {
        if c.is_zero() {
            None
        } else {
            Some(crate::lfun::rational_valuation(p, &BigRational::from_integer(c.clone())))
        }
    };
    let terms: Vec<(usize, i64)> = coeffs.iter().enumerate().filter_map(|(j, c)| val(c).map(|vc| (j, vc + v * j as i64))).collect();
    let Some(low) = terms.iter().map(|t| t.1).min() else {
        return Ok(true);
    };
    let mut acc = unram_zero(p, u.disc(), kappa);
    for (j, tv) in terms {
        let c = &coeffs[j];
        let vc = crate::lfun::rational_valuation(p, &BigRational::from_integer(c.clone()));
        let unit_c = c / BigInt::from(p).pow(vc as u32);
        let scale = PAdic::from_parts(p, tv - low, unit_c, kappa);
        acc = acc.add(&w.pow(j as u64).scale(&scale));
    }
    Ok(acc.with_precision(kappa).is_zero())
}

/// Frobenius-fixedness and trace law summaries used by the self-tests.
pub fn galois_dichotomy(report: &GsReport) -> Vec<(Form, bool, bool)> {
    report.records.iter().map(|r| (r.class, r.two_torsion, r.frobenius_fixed)).collect()
}

/// Agreement of each record's table log with `log_p` of the given units.
pub fn compare_table_logs(report: &GsReport, units: &[Unram], kappa: i64) -> Result<Vec<bool>, GsError> {
    report.records.iter().zip(units).map(|(r, u)| Ok(eq_mod(&r.table_log, &u.log()?, kappa))).collect()
}

/// Whether `u` and `w` agree to `kappa` digits beyond the valuation of `w`.
pub fn units_agree(u: &Unram, w: &Unram, kappa: i64) -> bool {
    u.sub(w).with_precision(w.valuation() + kappa).is_zero()
}
