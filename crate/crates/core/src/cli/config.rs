//! Run configuration: declarations, shared settings and the task list.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Deserialize;

use crate::expr::{parse, parse_with_params, Expr, Family};
use crate::monomial::{DiffPolynomial, MonomialSpec, PolyTerm};
use crate::sphere::Region;

/// A complex number written as `x` or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CValue {
    Real(f64),
    Pair([f64; 2]),
}

impl CValue {
    pub fn get(self) -> Complex64 {
        match self {
            CValue::Real(x) => Complex64::new(x, 0.0),
            CValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn cvalues(v: &[CValue]) -> Vec<Complex64> {
    v.iter().map(|c| c.get()).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Default radius grid for nevanlinna, order and margins tasks.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_tol() -> f64 {
    crate::locate::DEFAULT_TOL
}
fn default_resolution() -> usize {
    Region::DEFAULT_RESOLUTION
}
fn default_depth() -> usize {
    Region::DEFAULT_DEPTH
}
fn default_seed() -> u64 {
    crate::locate::LocateOptions::default().seed
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: default_tol(),
            resolution: default_resolution(),
            depth: default_depth(),
            radii: None,
            out_dir: None,
            seed: default_seed(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub base: String,
    pub parameter: String,
    #[serde(default)]
    pub values: Option<Vec<CValue>>,
    /// Integer values `lo..=hi`.
    #[serde(default)]
    pub range: Option<[i64; 2]>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialConfig {
    pub exponents: Vec<u32>,
    #[serde(default)]
    pub order: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    #[serde(default = "one")]
    pub coefficient: String,
    pub exponents: Vec<u32>,
}

fn one() -> String {
    "1".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialConfig {
    pub terms: Vec<TermConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskConfig {
    pub center: CValue,
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub lo: CValue,
    pub hi: CValue,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    #[serde(default)]
    pub disk: Option<DiskConfig>,
    #[serde(default)]
    pub rect: Option<RectConfig>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub depth: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalTask {
    pub name: String,
    pub expr: String,
    pub points: Vec<CValue>,
    #[serde(default)]
    pub order: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalTask {
    pub name: String,
    pub expr: String,
    pub points: Vec<CValue>,
    #[serde(default)]
    pub j: usize,
    #[serde(default)]
    pub hyperbolic: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartyTask {
    pub name: String,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
    pub region: RegionConfig,
    #[serde(default)]
    pub j: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApointsTask {
    pub name: String,
    pub expr: String,
    pub targets: Vec<CValue>,
    pub region: RegionConfig,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NevanlinnaTask {
    pub name: String,
    pub expr: String,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LappanTask {
    pub name: String,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
    pub region: RegionConfig,
    pub targets: Vec<CValue>,
    pub k: usize,
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialAuditTask {
    pub name: String,
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub family: Option<String>,
    pub monomial: String,
    pub region: RegionConfig,
    pub target: CValue,
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeTask {
    pub name: String,
    pub bound: f64,
    pub targets: Vec<CValue>,
    pub k: usize,
    /// With `expr` and `region`, also checks the cascade at the preimages.
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    pub half_width: f64,
    pub points_per_side: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    pub xi: Vec<CValue>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RescaleTask {
    pub name: String,
    pub family: String,
    pub region: RegionConfig,
    /// Fixed exponent; `monomial` selects `D_M / d_M` instead.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub monomial: Option<String>,
    pub xi: XiConfig,
    /// Checks the monomial rescaling identity at these points (needs `monomial`).
    #[serde(default)]
    pub identity: Option<IdentityConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderTask {
    pub name: String,
    pub expr: String,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HinchliffeConfig {
    pub polynomial: String,
    pub target: CValue,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginsTask {
    pub name: String,
    pub expr: String,
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub fmt_target: Option<CValue>,
    #[serde(default)]
    pub smt_values: Option<Vec<CValue>>,
    #[serde(default)]
    pub hinchliffe: Option<HinchliffeConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskConfig {
    Eval(EvalTask),
    Spherical(SphericalTask),
    Marty(MartyTask),
    Apoints(ApointsTask),
    Nevanlinna(NevanlinnaTask),
    LappanAudit(LappanTask),
    MonomialAudit(MonomialAuditTask),
    Cascade(CascadeTask),
    Rescale(RescaleTask),
    Order(OrderTask),
    Margins(MarginsTask),
}

impl TaskConfig {
    pub fn name(&self) -> &str {
        match self {
            TaskConfig::Eval(t) => &t.name,
            TaskConfig::Spherical(t) => &t.name,
            TaskConfig::Marty(t) => &t.name,
            TaskConfig::Apoints(t) => &t.name,
            TaskConfig::Nevanlinna(t) => &t.name,
            TaskConfig::LappanAudit(t) => &t.name,
            TaskConfig::MonomialAudit(t) => &t.name,
            TaskConfig::Cascade(t) => &t.name,
            TaskConfig::Rescale(t) => &t.name,
            TaskConfig::Order(t) => &t.name,
            TaskConfig::Margins(t) => &t.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TaskConfig::Eval(_) => "eval",
            TaskConfig::Spherical(_) => "spherical",
            TaskConfig::Marty(_) => "marty",
            TaskConfig::Apoints(_) => "apoints",
            TaskConfig::Nevanlinna(_) => "nevanlinna",
            TaskConfig::LappanAudit(_) => "lappan-audit",
            TaskConfig::MonomialAudit(_) => "monomial-audit",
            TaskConfig::Cascade(_) => "cascade",
            TaskConfig::Rescale(_) => "rescale",
            TaskConfig::Order(_) => "order",
            TaskConfig::Margins(_) => "margins",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub expressions: BTreeMap<String, String>,
    #[serde(default)]
    pub families: BTreeMap<String, FamilyConfig>,
    #[serde(default)]
    pub monomials: BTreeMap<String, MonomialConfig>,
    #[serde(default)]
    pub polynomials: BTreeMap<String, PolynomialConfig>,
    pub tasks: Vec<TaskConfig>,
}

/// Declarations resolved into library objects.
#[derive(Clone, Debug, Default)]
pub struct Declarations {
    pub expressions: BTreeMap<String, Expr>,
    pub families: BTreeMap<String, Family>,
    pub monomials: BTreeMap<String, MonomialSpec>,
    pub polynomials: BTreeMap<String, DiffPolynomial>,
}

/// A configuration that failed to parse or validate. The message names the
/// offending key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    /// Parses and checks every declaration and task reference.
    pub fn resolve(&self) -> Result<Declarations, ConfigError> {
        let s = &self.settings;
        if !(s.tol > 0.0) {
            return err(format!("settings.tol: must be positive, got {}", s.tol));
        }
        if s.resolution < 2 {
            return err("settings.resolution: must be at least 2");
        }
        if let Some(r) = &s.radii {
            check_radii("settings.radii", r)?;
        }

        let mut d = Declarations::default();
        for (name, src) in &self.expressions {
            let e = parse(src).map_err(|e| ConfigError(format!("expressions.{name}: {e}")))?;
            d.expressions.insert(name.clone(), e);
        }
        for (name, fc) in &self.families {
            let key = format!("families.{name}");
            let base = parse_with_params(&fc.base, &[fc.parameter.as_str()])
                .map_err(|e| ConfigError(format!("{key}.base: {e}")))?;
            let values = match (&fc.values, fc.range) {
                (Some(v), None) => cvalues(v),
                (None, Some([lo, hi])) if lo <= hi => (lo..=hi).map(|n| Complex64::new(n as f64, 0.0)).collect(),
                (None, Some(_)) => return err(format!("{key}.range: lower end exceeds upper end")),
                _ => return err(format!("{key}: give exactly one of `values` and `range`")),
            };
            let fam = Family::new(base, fc.parameter.clone(), values).map_err(|e| ConfigError(format!("{key}: {e}")))?;
            d.families.insert(name.clone(), fam);
        }
        for (name, mc) in &self.monomials {
            let key = format!("monomials.{name}");
            let spec = match mc.order {
                Some(k) => MonomialSpec::with_order(mc.exponents.clone(), k),
                None => MonomialSpec::new(mc.exponents.clone()),
            }
            .map_err(|e| ConfigError(format!("{key}: {e}")))?;
            d.monomials.insert(name.clone(), spec);
        }
        for (name, pc) in &self.polynomials {
            let key = format!("polynomials.{name}");
            let mut terms = Vec::new();
            for (i, t) in pc.terms.iter().enumerate() {
                let coefficient =
                    parse(&t.coefficient).map_err(|e| ConfigError(format!("{key}.terms[{i}].coefficient: {e}")))?;
                terms.push(PolyTerm { coefficient, exponents: t.exponents.clone() });
            }
            let p = DiffPolynomial::new(terms).map_err(|e| ConfigError(format!("{key}: {e}")))?;
            d.polynomials.insert(name.clone(), p);
        }

        let mut seen = std::collections::BTreeSet::new();
        for (i, task) in self.tasks.iter().enumerate() {
            let name = task.name();
            let key = format!("tasks[{i}]");
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return err(format!("{key}.name: `{name}` must be non-empty and use only [A-Za-z0-9_-]"));
            }
            if !seen.insert(name.to_string()) {
                return err(format!("{key}.name: duplicate task name `{name}`"));
            }
            self.check_task(&d, task, &key)?;
        }
        Ok(d)
    }

    fn check_task(&self, d: &Declarations, task: &TaskConfig, key: &str) -> Result<(), ConfigError> {
        let expr = |field: &str, n: &str| -> Result<(), ConfigError> {
            if d.expressions.contains_key(n) {
                Ok(())
            } else {
                err(format!("{key}.{field}: undeclared expression `{n}`"))
            }
        };
        let family = |n: &str| -> Result<(), ConfigError> {
            if d.families.contains_key(n) {
                Ok(())
            } else {
                err(format!("{key}.family: undeclared family `{n}`"))
            }
        };
        let subject = |e: &Option<String>, f: &Option<String>| -> Result<(), ConfigError> {
            match (e, f) {
                (Some(e), None) => expr("expr", e),
                (None, Some(f)) => family(f),
                _ => err(format!("{key}: give exactly one of `expr` and `family`")),
            }
        };
        let monomial = |n: &str| -> Result<(), ConfigError> {
            if d.monomials.contains_key(n) {
                Ok(())
            } else {
                err(format!("{key}.monomial: undeclared monomial `{n}`"))
            }
        };
        let region = |field: &str, r: &RegionConfig| self.region(r, &format!("{key}.{field}")).map(|_| ());
        let tol = |t: Option<f64>| match t {
            Some(t) if !(t > 0.0) => err(format!("{key}.tol: must be positive")),
            _ => Ok(()),
        };
        let radii = |r: &Option<Vec<f64>>| -> Result<(), ConfigError> {
            match (r, &self.settings.radii) {
                (Some(r), _) => check_radii(&format!("{key}.radii"), r),
                (None, Some(_)) => Ok(()),
                (None, None) => err(format!("{key}.radii: missing and no settings.radii default")),
            }
        };
        match task {
            TaskConfig::Eval(t) => expr("expr", &t.expr),
            TaskConfig::Spherical(t) => expr("expr", &t.expr),
            TaskConfig::Marty(t) => {
                subject(&t.expr, &t.family)?;
                region("region", &t.region)
            }
            TaskConfig::Apoints(t) => {
                expr("expr", &t.expr)?;
                tol(t.tol)?;
                region("region", &t.region)
            }
            TaskConfig::Nevanlinna(t) => {
                expr("expr", &t.expr)?;
                radii(&t.radii)
            }
            TaskConfig::Order(t) => {
                expr("expr", &t.expr)?;
                radii(&t.radii)
            }
            TaskConfig::LappanAudit(t) => {
                subject(&t.expr, &t.family)?;
                tol(t.tol)?;
                region("region", &t.region)
            }
            TaskConfig::MonomialAudit(t) => {
                subject(&t.expr, &t.family)?;
                monomial(&t.monomial)?;
                tol(t.tol)?;
                region("region", &t.region)
            }
            TaskConfig::Cascade(t) => {
                if !(t.bound > 0.0) {
                    return err(format!("{key}.bound: must be positive"));
                }
                tol(t.tol)?;
                match (&t.expr, &t.region) {
                    (Some(e), Some(r)) => {
                        expr("expr", e)?;
                        region("region", r)
                    }
                    (None, None) => Ok(()),
                    _ => err(format!("{key}: `expr` and `region` go together")),
                }
            }
            TaskConfig::Rescale(t) => {
                family(&t.family)?;
                region("region", &t.region)?;
                match (&t.alpha, &t.monomial) {
                    (Some(_), None) | (None, Some(_)) | (None, None) => {}
                    (Some(_), Some(_)) => return err(format!("{key}: give at most one of `alpha` and `monomial`")),
                }
                if let Some(m) = &t.monomial {
                    monomial(m)?;
                }
                if t.identity.is_some() && t.monomial.is_none() {
                    return err(format!("{key}.identity: needs `monomial`"));
                }
                if !(t.xi.half_width > 0.0) || t.xi.points_per_side == 0 {
                    return err(format!("{key}.xi: half_width must be positive and points_per_side at least 1"));
                }
                Ok(())
            }
            TaskConfig::Margins(t) => {
                expr("expr", &t.expr)?;
                radii(&t.radii)?;
                if let Some(h) = &t.hinchliffe {
                    if !d.polynomials.contains_key(&h.polynomial) {
                        return err(format!("{key}.hinchliffe.polynomial: undeclared polynomial `{}`", h.polynomial));
                    }
                }
                Ok(())
            }
        }
    }

    /// Region from its config, with grid defaults from the settings.
    pub fn region(&self, r: &RegionConfig, key: &str) -> Result<Region, ConfigError> {
        let base = match (&r.disk, &r.rect) {
            (Some(d), None) => Region::disk(d.center.get(), d.radius),
            (None, Some(q)) => Region::rect(q.lo.get(), q.hi.get()),
            _ => return err(format!("{key}: give exactly one of `disk` and `rect`")),
        };
        let region = base.with_grid(
            r.resolution.unwrap_or(self.settings.resolution),
            r.depth.unwrap_or(self.settings.depth),
        );
        region.validate().map_err(|e| ConfigError(format!("{key}: {e}")))?;
        Ok(region)
    }

    pub fn radii<'a>(&'a self, own: &'a Option<Vec<f64>>) -> &'a [f64] {
        own.as_deref().or(self.settings.radii.as_deref()).unwrap_or(&[])
    }
}

fn check_radii(key: &str, r: &[f64]) -> Result<(), ConfigError> {
    if r.is_empty() || r.iter().any(|x| !(*x > 0.0 && x.is_finite())) || r.windows(2).any(|w| w[1] <= w[0]) {
        return err(format!("{key}: radii must be positive and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn complex_list(v: &[CValue]) -> Vec<Complex64> {
    cvalues(v)
}
