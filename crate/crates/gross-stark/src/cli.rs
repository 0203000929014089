//! Command-line front end: argument parsing, reports and the self-test battery.
//! Every number printed here comes from a library operation.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_traits::Zero;
use serde_json::{json, Value};

use crate::gsunit::{default_smoothings, run_pipeline, GsError, GsReport, PipelineConfig};
use crate::lfun::{
    desmooth, first_admissible_k, interpolation_admissible, interpolation_check, lp_at, lp_derivative0, LfunError,
};
use crate::measure::{load_or_build, refine_report, values_in_z_c, CacheStatus, MeasureError, MeasureSpec};
use crate::padic::PadicError;
use crate::quadfield::{form_to_ideal, FieldError, Form, NarrowClassGroup};
use crate::sweep::SweepError;
use crate::zeta::{dirichlet_oracle, zeta_of_class, ZetaError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gross-stark", version, about = "Gross-Stark units of real quadratic fields from Eisenstein measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Narrow class group: reduced forms, orders, ideal bases.
    Classgroup,
    /// Partial zeta values at s = 0, -1, -2 and the Dirichlet check.
    Zeta,
    /// Build or load one smoothed measure and check its structure.
    Measure,
    /// p-adic L-values of one class: derivative at 0 and interpolation.
    Lp,
    /// Gross-Stark records for one class (or all).
    Unit,
    /// Full pipeline over all classes.
    Table,
    /// Runs every invariant suite.
    Selftest,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Opts {
    /// Fundamental discriminant.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub disc: Option<i64>,
    /// Inert prime p.
    #[arg(long, global = true)]
    pub prime: Option<u64>,
    /// Smoothing c (default 5 for p = 3; otherwise the first prime >= 5 other than p).
    #[arg(long, global = true)]
    pub smooth: Option<i64>,
    /// Second smoothing d (default 7 for p = 3; otherwise the next such prime).
    #[arg(long, global = true)]
    pub smooth2: Option<i64>,
    /// Level r of the finite quotient X_r.
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Working precision N >= r (default r + 6).
    #[arg(long, global = true)]
    pub precision: Option<i64>,
    /// Class as a form "[a,b,c]" (default: principal).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub class: Option<String>,
    /// Directory for measure caches.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Self-test: skip the large discriminant.
    #[arg(long, global = true)]
    pub quick: bool,
}

/// Failure of a command, with its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Invalid(String),
    Invariant(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Invariant(m) => m,
        }
    }
}

fn invalid_padic(_: &PadicError) -> bool {
    true
}

fn classify_zeta(e: &ZetaError) -> bool {
    !matches!(e, ZetaError::ResidueNotUnit(..))
}

fn classify_measure(e: &MeasureError) -> bool {
    match e {
        MeasureError::Field(_) | MeasureError::NotPrime(_) | MeasureError::NotInert { .. } => true,
        MeasureError::BadSmoothing { .. } | MeasureError::BadClass { .. } | MeasureError::Level(_) => true,
        MeasureError::Padic(p) => invalid_padic(p),
        MeasureError::Zeta(z) => classify_zeta(z),
        MeasureError::Sweep(SweepError::Overflow(_)) => true,
        _ => false,
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> CliError {
        CliError::Invalid(e.to_string())
    }
}

impl From<ZetaError> for CliError {
    fn from(e: ZetaError) -> CliError {
        if classify_zeta(&e) {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Invariant(e.to_string())
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> CliError {
        if classify_measure(&e) {
            CliError::Invalid(e.to_string())
        } else {
            CliError::Invariant(e.to_string())
        }
    }
}

impl From<LfunError> for CliError {
    fn from(e: LfunError) -> CliError {
        match e {
            LfunError::BadS(_) | LfunError::PrecisionCollapse { .. } | LfunError::Padic(_) => CliError::Invalid(e.to_string()),
            LfunError::Zeta(z) => z.into(),
        }
    }
}

impl From<GsError> for CliError {
    fn from(e: GsError) -> CliError {
        match e {
            GsError::Measure(m) => m.into(),
            GsError::Lfun(l) => l.into(),
            GsError::Field(f) => f.into(),
            GsError::Zeta(z) => z.into(),
            GsError::Padic(_) | GsError::Smoothings(..) | GsError::NoSmoothingPrime(_) | GsError::Precision(_) => {
                CliError::Invalid(e.to_string())
            }
            GsError::Sweep(SweepError::Overflow(_)) => CliError::Invalid(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

/// Validated run parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub disc: i64,
    pub p: u64,
    pub c: i64,
    pub d: i64,
    pub level: u32,
    pub precision: i64,
    pub class: Option<Form>,
    pub cache_dir: Option<PathBuf>,
    pub json: bool,
}

impl RunConfig {
    /// Fills defaults; `need_prime` demands `--prime` and checks coprimality.
    pub fn from_opts(o: &Opts, need_prime: bool, default_level: u32) -> Result<RunConfig, CliError> {
        let disc = o.disc.ok_or_else(|| CliError::Invalid("--disc is required".into()))?;
        crate::quadfield::check_fundamental(disc)?;
        let p = match (o.prime, need_prime) {
            (Some(p), _) => p,
            (None, true) => return Err(CliError::Invalid("--prime is required".into())),
            (None, false) => 3,
        };
        let (dc, dd) = default_smoothings(p);
        let level = o.level.unwrap_or(default_level);
        if level == 0 {
            return Err(CliError::Invalid("--level must be at least 1".into()));
        }
        let precision = o.precision.unwrap_or(level as i64 + 6);
        if precision < level as i64 {
            return Err(CliError::Invalid(format!("--precision {precision} is below --level {level}")));
        }
        let class = o.class.as_deref().map(|s| s.parse::<Form>().map_err(CliError::Invalid)).transpose()?;
        if let Some(f) = class {
            if f.disc() != disc || !f.is_primitive() {
                return Err(CliError::Invalid(format!("form {f} is not a primitive form of discriminant {disc}")));
            }
        }
        let cfg = RunConfig {
            disc,
            p,
            c: o.smooth.unwrap_or(dc),
            d: o.smooth2.unwrap_or(dd),
            level,
            precision,
            class,
            cache_dir: o.cache_dir.clone(),
            json: o.json,
        };
        if need_prime {
            cfg.pipeline().validate()?;
        }
        Ok(cfg)
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig { disc: self.disc, p: self.p, c: self.c, d: self.d, level: self.level, cache_dir: self.cache_dir.clone() }
    }

    fn class_or_principal(&self) -> Form {
        self.class.unwrap_or_else(|| Form::principal(self.disc))
    }

    fn spec(&self, c: i64) -> MeasureSpec {
        MeasureSpec::new(self.disc, self.p, c, self.class_or_principal(), self.level)
    }
}

/// Output of a command: text, JSON, and whether an invariant failed.
pub struct Report {
    pub text: String,
    pub json: Value,
    pub failure: Option<String>,
}

/// Parses arguments and runs; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let mut progress = |s: &str| {
        let _ = writeln!(err, "{s}");
    };
    match execute(cli.command, &cli.opts, &mut progress) {
        Ok(rep) => {
            if cli.opts.json {
                let _ = writeln!(out, "{}", serde_json::to_string_pretty(&rep.json).expect("json"));
            } else {
                let _ = write!(out, "{}", rep.text);
            }
            match rep.failure {
                Some(f) => {
                    let _ = writeln!(err, "invariant failure: {f}");
                    EXIT_INVARIANT
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            if cli.opts.json {
                let _ = writeln!(out, "{}", json!({"error": e.message(), "exit": e.code()}));
            }
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

pub fn execute(cmd: Command, o: &Opts, progress: &mut dyn FnMut(&str)) -> Result<Report, CliError> {
    match cmd {
        Command::Classgroup => cmd_classgroup(&RunConfig::from_opts(o, false, 1)?),
        Command::Zeta => cmd_zeta(&RunConfig::from_opts(o, false, 1)?),
        Command::Measure => cmd_measure(&RunConfig::from_opts(o, true, 3)?),
        Command::Lp => cmd_lp(&RunConfig::from_opts(o, true, 5)?),
        Command::Unit => cmd_unit(&RunConfig::from_opts(o, true, 5)?, progress),
        Command::Table => cmd_table(&RunConfig::from_opts(o, true, 8)?, progress),
        Command::Selftest => {
            let r = selftest(&SelftestConfig { quick: o.quick, cache_dir: o.cache_dir.clone() }, progress);
            Ok(r.into_report())
        }
    }
}

pub fn cmd_classgroup(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = NarrowClassGroup::new(cfg.disc)?;
    let mut text = format!(
        "narrow class group of Q(sqrt {}): order {}, {}, {} classes of order <= 2\n",
        cfg.disc,
        g.order(),
        if g.is_cyclic() { "cyclic" } else { "not cyclic" },
        g.two_torsion_count()
    );
    let mut rows = Vec::new();
    for (i, f) in g.forms.iter().enumerate() {
        let id = form_to_ideal(f);
        let basis = [id.tau[0].to_string(), id.tau[1].to_string()];
        text.push_str(&format!(
            "  {:<16} order {:<3} two-torsion {:<5} ideal <{}, {}>\n",
            f.to_string(),
            g.orders[i],
            g.is_two_torsion(i),
            basis[0],
            basis[1]
        ));
        rows.push(json!({
            "class": f.to_string(),
            "order": g.orders[i],
            "two_torsion": g.is_two_torsion(i),
            "ideal_basis": basis,
            "ideal_norm": id.norm.to_string(),
        }));
    }
    let json = json!({
        "disc": cfg.disc,
        "order": g.order(),
        "cyclic": g.is_cyclic(),
        "orders": g.orders,
        "classes": rows,
    });
    Ok(Report { text, json, failure: None })
}

pub fn cmd_zeta(cfg: &RunConfig) -> Result<Report, CliError> {
    let g = NarrowClassGroup::new(cfg.disc)?;
    let forms: Vec<Form> = match cfg.class {
        Some(f) => vec![g.forms[g.index_of(&f)]],
        None => g.forms.clone(),
    };
    let mut text = String::new();
    let mut rows = Vec::new();
    for f in &forms {
        let vals: Vec<String> = (1..=3).map(|k| zeta_of_class(f, k).map(|v| v.to_string())).collect::<Result<_, _>>()?;
        text.push_str(&format!("zeta({f}, s) at s = 0, -1, -2: {}\n", vals.join(", ")));
        rows.push(json!({"class": f.to_string(), "s0": vals[0], "s-1": vals[1], "s-2": vals[2]}));
    }
    let mut checks = Vec::new();
    let mut failure = None;
    for k in 1..=3usize {
        let total = g.forms.iter().map(|f| zeta_of_class(f, k)).sum::<Result<num_rational::BigRational, _>>()?;
        let oracle = dirichlet_oracle(cfg.disc, k);
        let ok = total == oracle;
        text.push_str(&format!(
            "sum over classes at s = {}: {}; zeta(s) L(s, chi_D) = {}; {}\n",
            1 - k as i64,
            total,
            oracle,
            if ok { "agree" } else { "DISAGREE" }
        ));
        if !ok {
            failure = Some(format!("dirichlet oracle at s = {}", 1 - k as i64));
        }
        checks.push(json!({"s": 1 - k as i64, "sum": total.to_string(), "oracle": oracle.to_string(), "agree": ok}));
    }
    let json = json!({"disc": cfg.disc, "classes": rows, "dirichlet": checks});
    Ok(Report { text, json, failure })
}

pub fn cmd_measure(cfg: &RunConfig) -> Result<Report, CliError> {
    let spec = cfg.spec(cfg.c);
    let dir = cfg.cache_dir.as_deref();
    let (m, status) = load_or_build(&spec, dir)?;
    let mass = m.total_mass();
    let integral = values_in_z_c(&m);
    let mut failure = None;
    if !mass.is_zero() {
        failure = Some(format!("total mass {mass}"));
    } else if !integral {
        failure = Some("ball values outside Z[1/c]".into());
    }
    let refine = if cfg.level >= 2 {
        let (coarse, _) = load_or_build(&spec.at_level(cfg.level - 1), dir)?;
        let rep = refine_report(&coarse, &m)?;
        if !rep.holds() && failure.is_none() {
            failure = Some(format!("refinement: {} mismatched balls", rep.mismatches.len()));
        }
        Some(rep.holds())
    } else {
        None
    };
    let path = dir.map(|d| d.join(m.spec.cache_name()));
    let text = format!(
        "measure disc {} p {} c {} class {} (working form {}) level {}\n  balls {}\n  total mass {}\n  values in Z[1/c]: {}\n  refinement from level {}: {}\n  cache: {}\n  provenance {}\n",
        m.spec.disc,
        m.spec.p,
        m.spec.c,
        m.spec.class,
        m.form,
        m.spec.level,
        m.balls.len(),
        mass,
        integral,
        cfg.level.saturating_sub(1),
        refine.map(|b| b.to_string()).unwrap_or_else(|| "n/a".into()),
        match (&path, status) {
            (Some(p), CacheStatus::Hit) => format!("hit {}", p.display()),
            (Some(p), CacheStatus::Built) => format!("written {}", p.display()),
            (None, _) => "none".into(),
        },
        m.provenance
    );
    let json = json!({
        "disc": m.spec.disc,
        "p": m.spec.p,
        "c": m.spec.c,
        "class": m.spec.class.to_string(),
        "form": m.form.to_string(),
        "level": m.spec.level,
        "balls": m.balls.len(),
        "total_mass": mass.to_string(),
        "values_in_z_c": integral,
        "refinement": refine,
        "cache": path.map(|p| p.display().to_string()),
        "cache_hit": status == CacheStatus::Hit,
        "provenance": m.provenance,
    });
    Ok(Report { text, json, failure })
}

pub fn cmd_lp(cfg: &RunConfig) -> Result<Report, CliError> {
    let dir = cfg.cache_dir.as_deref();
    let (mc, _) = load_or_build(&cfg.spec(cfg.c), dir)?;
    let (md, _) = load_or_build(&cfg.spec(cfg.d), dir)?;
    let raw = lp_derivative0(&mc)?;
    let dc = desmooth(&raw, cfg.c)?;
    let dd = desmooth(&lp_derivative0(&md)?, cfg.d)?;
    let agree = dc.agrees_with(&dd);
    let at0 = lp_at(&mc, 0)?;
    let mut failure = None;
    if !agree {
        failure = Some("smoothing independence of the derivative".into());
    }
    if !at0.value.is_zero() {
        failure = Some("value at s = 0 is not zero".into());
    }
    let mut text = format!(
        "class {} p {} level {}\n  L_p(0) = {} (mod {}^{})\n  c-smoothed L_p'(0) = {}\n  L_p'(0) via c = {}: {}\n  L_p'(0) via d = {}: {}\n  agree mod {}^{}: {}\n",
        mc.spec.class,
        cfg.p,
        cfg.level,
        at0.value,
        cfg.p,
        at0.kappa,
        raw.value,
        cfg.c,
        dc.value,
        cfg.d,
        dd.value,
        cfg.p,
        dc.kappa.min(dd.kappa),
        agree
    );
    let mut interp = Vec::new();
    let ks = [2usize, 3, first_admissible_k(cfg.disc, cfg.p)];
    let mut seen = Vec::new();
    for k in ks {
        if seen.contains(&k) {
            continue;
        }
        seen.push(k);
        let (ok, v, lp) = interpolation_check(&mc, k)?;
        let adm = interpolation_admissible(cfg.disc, cfg.p, k);
        if adm && !ok {
            failure = Some(format!("interpolation at s = {}", 1 - k as i64));
        }
        text.push_str(&format!(
            "  L_p({}) = {}; matches smoothed zeta value: {} (agreement to {}^{}){}\n",
            1 - k as i64,
            lp.value,
            ok,
            cfg.p,
            v,
            if adm { "" } else { " [weight outside the interpolation range]" }
        ));
        interp.push(json!({"s": 1 - k as i64, "value": lp.to_json(), "matches": ok, "agreement": v, "admissible": adm}));
    }
    let json = json!({
        "value_at_0": at0.to_json(),
        "derivative_smoothed": raw.to_json(),
        "derivative_c": dc.to_json(),
        "derivative_d": dd.to_json(),
        "smoothing_independent": agree,
        "interpolation": interp,
    });
    Ok(Report { text, json, failure })
}

fn pipeline_failure(rep: &GsReport) -> Option<String> {
    for r in &rep.records {
        if !r.trace_law_holds() {
            return Some(format!("trace law for {}", r.class));
        }
        if !r.lp_c.agrees_with(&r.lp_d) {
            return Some(format!("smoothing independence for {}", r.class));
        }
        if r.two_torsion && !r.frobenius_fixed {
            return Some(format!("Frobenius-fixedness of the 2-torsion class {}", r.class));
        }
    }
    None
}

fn record_lines(rep: &GsReport, filter: Option<Form>) -> String {
    let mut s = String::new();
    for r in &rep.records {
        if filter.is_some_and(|f| rep.group.index_of(&f) != r.index) {
            continue;
        }
        s.push_str(&format!(
            "{:<14} ord {:<2} v {:>3}  status {:<9} k {:>3}  trace {}  frob-fixed {}\n    table log = {}\n    unit      = {}\n",
            r.class.to_string(),
            r.order,
            r.valuation.map(|v| v.to_string()).unwrap_or_else(|| "?".into()),
            format!("{:?}", r.status).to_lowercase(),
            r.k,
            if r.trace_law_holds() { "ok" } else { "FAIL" },
            r.frobenius_fixed,
            r.table_log,
            r.unit.as_ref().map(|u| u.to_string()).unwrap_or_else(|| "-".into()),
        ));
    }
    s
}

fn report_header(rep: &GsReport) -> String {
    format!(
        "disc {} p {} c {} d {} level {}: certified mod {}^{}, normalization {}, unit power {}, smoothing prime {} (loss {})\n",
        rep.config.disc,
        rep.config.p,
        rep.config.c,
        rep.config.d,
        rep.config.level,
        rep.config.p,
        rep.kappa,
        rep.normalization,
        rep.records.first().map_or(1, |r| r.power),
        rep.plan.ell,
        rep.plan.loss
    )
}

pub fn cmd_unit(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<Report, CliError> {
    let rep = run_pipeline(&cfg.pipeline(), progress)?;
    let filter = cfg.class;
    let mut text = report_header(&rep);
    text.push_str(&record_lines(&rep, filter));
    let recs: Vec<Value> = rep
        .records
        .iter()
        .filter(|r| filter.is_none_or(|f| rep.group.index_of(&f) == r.index))
        .map(|r| r.to_json())
        .collect();
    let json = json!({"disc": cfg.disc, "p": cfg.p, "certified_mod": format!("{}^{}", cfg.p, rep.kappa), "records": recs});
    Ok(Report { text, json, failure: pipeline_failure(&rep) })
}

pub fn cmd_table(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<Report, CliError> {
    let rep = run_pipeline(&cfg.pipeline(), progress)?;
    let mut text = report_header(&rep);
    text.push_str(&record_lines(&rep, None));
    text.push_str(&format!("recognition: {:?}, {}\n", rep.recognition.status, rep.recognition.note).to_lowercase());
    match &rep.polynomial {
        Ok(c) => text.push_str(&format!(
            "polynomial (constant term first): {}\n",
            c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        )),
        Err(e) => text.push_str(&format!("polynomial: {e}\n")),
    }
    let mut json = rep.to_json();
    json["precision"] = json!(cfg.precision);
    Ok(Report { text, json, failure: pipeline_failure(&rep) })
}

/// Self-test configuration.
#[derive(Clone, Debug, Default)]
pub struct SelftestConfig {
    pub quick: bool,
    pub cache_dir: Option<PathBuf>,
}

/// One self-test case: discriminant, inert prime and the level of the pipeline run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Case {
    pub disc: i64,
    pub p: u64,
    pub level: u32,
}

pub const SELFTEST_CASES: [Case; 4] = [
    Case { disc: 5, p: 3, level: 4 },
    Case { disc: 8, p: 3, level: 4 },
    Case { disc: 12, p: 5, level: 4 },
    Case { disc: 689, p: 3, level: 5 },
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub case: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    fn push(&mut self, name: &'static str, case: String, pass: bool, detail: String) {
        self.checks.push(Check { name, case, pass, detail });
    }

    pub fn into_report(self) -> Report {
        let mut text = String::new();
        for c in &self.checks {
            text.push_str(&format!("{} {:<24} {:<28} {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.case, c.detail));
        }
        let failing: Vec<&str> = self.failing().iter().map(|c| c.name).collect();
        let mut names = failing.clone();
        names.dedup();
        let failure = (!failing.is_empty()).then(|| names.join(", "));
        text.push_str(&match &failure {
            None => format!("all {} checks passed\n", self.checks.len()),
            Some(n) => format!("{} of {} checks failed: {}\n", failing.len(), self.checks.len(), n),
        });
        let json = json!({
            "passed": failure.is_none(),
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "case": c.case, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        });
        Report { text, json, failure }
    }
}

fn case_label(c: &Case) -> String {
    format!("disc {} p {}", c.disc, c.p)
}

/// Runs every invariant suite over the test discriminants.
pub fn selftest(cfg: &SelftestConfig, progress: &mut dyn FnMut(&str)) -> SelftestReport {
    let mut rep = SelftestReport::default();
    for case in SELFTEST_CASES.iter().filter(|c| !(cfg.quick && c.disc == 689)) {
        progress(&format!("selftest {}", case_label(case)));
        if let Err(e) = selftest_case(case, cfg.cache_dir.as_deref(), &mut rep, progress) {
            rep.push("execution", case_label(case), false, e.message().to_string());
        }
    }
    rep
}

fn selftest_case(
    case: &Case,
    dir: Option<&Path>,
    rep: &mut SelftestReport,
    progress: &mut dyn FnMut(&str),
) -> Result<(), CliError> {
    let g = NarrowClassGroup::new(case.disc)?;
    let (c, d) = default_smoothings(case.p);
    let label = case_label(case);

    for k in 1..=3usize {
        let total = g.forms.iter().map(|f| zeta_of_class(f, k)).sum::<Result<num_rational::BigRational, _>>()?;
        let oracle = dirichlet_oracle(case.disc, k);
        rep.push("dirichlet-oracle", format!("{label} s {}", 1 - k as i64), total == oracle, format!("{total} vs {oracle}"));
    }

    let kk = first_admissible_k(case.disc, case.p);
    for f in &g.forms {
        let cl = format!("{label} {f}");
        let spec = MeasureSpec::new(case.disc, case.p, c, *f, 1);
        let mut prev = None;
        for r in 1..=3 {
            let (m, _) = load_or_build(&spec.at_level(r), dir)?;
            let mass = m.total_mass();
            rep.push("total-mass", format!("{cl} r{r}"), mass.is_zero(), mass.to_string());
            if let Some(coarse) = prev.take() {
                let rr = refine_report(&coarse, &m)?;
                let detail = match rr.mismatches.first() {
                    None => "ok".to_string(),
                    Some((x, a, b)) => format!("{} mismatches, first at {:?}: {} vs {}", rr.mismatches.len(), x, a, b),
                };
                rep.push("refinement", format!("{cl} r{}->{r}", r - 1), rr.holds(), detail);
            }
            prev = Some(m);
        }
        let (m, _) = load_or_build(&spec.at_level(case.level), dir)?;
        for k in [1, kk] {
            let (ok, v, lp) = interpolation_check(&m, k)?;
            rep.push("interpolation", format!("{cl} s {}", 1 - k as i64), ok, format!("agreement {}^{v}, need {}^{}", case.p, case.p, lp.kappa));
        }
    }

    let pcfg = PipelineConfig { disc: case.disc, p: case.p, c, d, level: case.level, cache_dir: dir.map(Path::to_path_buf) };
    let report = run_pipeline(&pcfg, progress)?;
    for r in &report.records {
        let cl = format!("{label} {}", r.class);
        rep.push("smoothing-independence", cl.clone(), r.lp_c.agrees_with(&r.lp_d), format!("mod {}^{}", case.p, r.kappa));
        rep.push("trace-law", cl.clone(), r.trace_law_holds(), format!("residual valuation {}", r.trace_residual));
        rep.push(
            "galois-dichotomy",
            cl,
            r.frobenius_fixed == r.two_torsion,
            format!("order {} fixed {}", r.order, r.frobenius_fixed),
        );
    }
    Ok(())
}
