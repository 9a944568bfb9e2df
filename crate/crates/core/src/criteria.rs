//! Audits of spherical-derivative bounds on preimage sets, the derivative
//! bound cascade, and a numerical rescaling explorer for families.
//!
//! Audits only ever speak about the stated bound. A finite computation cannot
//! decide whether a family is normal, so no report claims that it is.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{affine_precompose, Expr, Family};
use crate::jet::{derivative_at, eval_point, ExtendedComplex};
use crate::locate::{locate_apoints, RootList, DEFAULT_TOL};
use crate::monomial::{monomial_eval, threshold_check, MonomialSpec};
use crate::nevanlinna::least_squares;
use crate::sphere::{auto_chart, chordal_distance, marty_sup, spherical_derivative, spherical_from_jet, Region};

/// Relative slack when comparing a supremum against its bound.
const BOUND_SLACK: f64 = 1e-12;

/// Inputs shared by the audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// The compact set `K`.
    pub region: Region,
    /// Target values: the set `E`, or the single value `a` of a monomial audit.
    pub targets: Vec<Complex64>,
    /// Derivative ceiling: orders `0..k` are evaluated.
    pub k: usize,
    /// Bound `M`; without it the audit only measures.
    pub bound: Option<f64>,
    /// Root tolerance.
    pub tol: f64,
}

impl AuditConfig {
    pub fn new(region: Region, targets: Vec<Complex64>, k: usize) -> AuditConfig {
        AuditConfig { region, targets, k, bound: None, tol: DEFAULT_TOL }
    }

    pub fn with_bound(mut self, bound: f64) -> AuditConfig {
        self.bound = Some(bound);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> AuditConfig {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.targets.is_empty() {
            return Err(Error::Precondition("audit needs at least one target value".into()));
        }
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::Precondition("target values must be finite".into()));
        }
        for (i, a) in self.targets.iter().enumerate() {
            if self.targets[..i].contains(a) {
                return Err(Error::DistinctnessViolation);
            }
        }
        if let Some(m) = self.bound {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Precondition(format!("bound {m} must be positive")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::Precondition("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WithinBound,
    ExceedsBound,
    /// Every preimage list is empty: the hypothesis holds for no reason.
    Vacuous,
    /// No bound was given; only the supremum is reported.
    Measured,
}

/// Preimages of one target value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preimages {
    pub target: Complex64,
    pub roots: RootList,
}

/// Spherical-derivative values at one preimage point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditPoint {
    pub target: Complex64,
    pub location: Complex64,
    pub multiplicity: u32,
    /// Indexed by derivative order `j` (one entry for monomial audits).
    pub values: Vec<f64>,
}

/// Degree data of the monomial and its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBlock {
    pub order: usize,
    pub degree: u64,
    pub derivative_weight: u64,
    /// Exact right-hand side, e.g. `"15/2"`.
    pub rhs: String,
    pub satisfied: bool,
}

/// Multiplicities of the zeros of `f` in the region, against the order `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroMultiplicity {
    pub required: usize,
    pub zeros: RootList,
    pub all_at_least_required: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub preimages: Vec<Preimages>,
    pub points: Vec<AuditPoint>,
    /// Maximum over all point values; `None` when there are no points.
    pub supremum: Option<f64>,
    pub bound: Option<f64>,
    pub verdict: Verdict,
    pub threshold: Option<ThresholdBlock>,
    pub zero_multiplicity: Option<ZeroMultiplicity>,
}

impl AuditReport {
    fn assemble(preimages: Vec<Preimages>, points: Vec<AuditPoint>, bound: Option<f64>) -> AuditReport {
        let supremum = points.iter().flat_map(|p| p.values.iter().copied()).reduce(f64::max);
        let verdict = match (supremum, bound) {
            _ if preimages.iter().all(|p| p.roots.is_empty()) => Verdict::Vacuous,
            (_, None) => Verdict::Measured,
            (Some(s), Some(m)) if s > m * (1.0 + BOUND_SLACK) => Verdict::ExceedsBound,
            _ => Verdict::WithinBound,
        };
        AuditReport { preimages, points, supremum, bound, verdict, threshold: None, zero_multiplicity: None }
    }

    /// One row per preimage point: `target_re,target_im,re,im,multiplicity,j0,j1,...`.
    pub fn to_csv(&self) -> String {
        let width = self.points.iter().map(|p| p.values.len()).max().unwrap_or(0);
        let mut out = String::from("target_re,target_im,re,im,multiplicity");
        for j in 0..width {
            let _ = write!(out, ",j{j}");
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(
                out,
                "{},{},{},{},{}",
                p.target.re, p.target.im, p.location.re, p.location.im, p.multiplicity
            );
            for v in &p.values {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn require_parameter_free(f: &Expr) -> Result<()> {
    match f.free_params().into_iter().next() {
        Some(p) => Err(Error::FreeParameter(p)),
        None => Ok(()),
    }
}

/// Locates `f = e` in `K` for every `e` in `E` and evaluates `(f^(j))^#`
/// for `j < k` at each preimage point.
pub fn lappan_audit(f: &Expr, cfg: &AuditConfig) -> Result<AuditReport> {
    require_parameter_free(f)?;
    cfg.validate()?;
    if cfg.k == 0 {
        return Err(Error::Precondition("derivative ceiling k must be at least 1".into()));
    }
    let mut preimages = Vec::new();
    let mut points = Vec::new();
    for &e in &cfg.targets {
        let roots = locate_apoints(f, e, &cfg.region, cfg.tol)?;
        for r in &roots.entries {
            let values = (0..cfg.k).map(|j| spherical_derivative(f, r.location, j)).collect::<Result<Vec<_>>>()?;
            points.push(AuditPoint { target: e, location: r.location, multiplicity: r.multiplicity, values });
        }
        preimages.push(Preimages { target: e, roots });
    }
    Ok(AuditReport::assemble(preimages, points, cfg.bound))
}

/// Audits `(M[f])^#` on `{z in K : M[f](z) = a}`.
///
/// The report carries the degree threshold of the monomial and, as
/// information only, whether the zeros of `f` in `K` have multiplicity at
/// least `k`.
pub fn monomial_audit(f: &Expr, spec: &MonomialSpec, cfg: &AuditConfig) -> Result<AuditReport> {
    require_parameter_free(f)?;
    cfg.validate()?;
    if cfg.targets.len() != 1 {
        return Err(Error::Precondition("monomial audit takes a single target value".into()));
    }
    let a = cfg.targets[0];
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroTarget);
    }
    let m = spec.apply(f);
    let roots = locate_apoints(&m, a, &cfg.region, cfg.tol)?;
    let mut points = Vec::new();
    for r in &roots.entries {
        let jet = monomial_eval(spec, f, r.location, 1)?;
        let value = spherical_from_jet(&jet, auto_chart(&jet))?;
        points.push(AuditPoint { target: a, location: r.location, multiplicity: r.multiplicity, values: vec![value] });
    }
    let mut report = AuditReport::assemble(vec![Preimages { target: a, roots }], points, cfg.bound);

    match threshold_check(spec) {
        Ok(t) => {
            let s = spec.stats();
            report.threshold = Some(ThresholdBlock {
                order: t.order,
                degree: s.degree,
                derivative_weight: s.derivative_weight,
                rhs: t.rhs.to_string(),
                satisfied: t.satisfied,
            });
            let zeros = locate_apoints(f, Complex64::new(0.0, 0.0), &cfg.region, cfg.tol)?;
            let ok = zeros.entries.iter().all(|z| z.multiplicity as usize >= t.order);
            report.zero_multiplicity = Some(ZeroMultiplicity { required: t.order, zeros, all_at_least_required: ok });
        }
        Err(Error::UndefinedOrder) => {}
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// `B_1 = M (1 + max |b|^2)`, `B_j = M (1 + B_{j-1}^2)` for `j < k`.
///
/// Empty when `k < 2`.
pub fn bound_cascade(m: f64, targets: &[Complex64], k: usize) -> Vec<f64> {
    if k < 2 || targets.is_empty() {
        return Vec::new();
    }
    let b_max = targets.iter().map(|b| b.norm_sqr()).fold(0.0, f64::max);
    let mut out = vec![m * (1.0 + b_max)];
    for _ in 2..k {
        let prev = *out.last().expect("non-empty");
        out.push(m * (1.0 + prev * prev));
    }
    out
}

/// Checks `|f^(j)(z)| <= B_j` at every preimage point for `1 <= j < k`.
///
/// Needs a bounded audit that passes; a vacuous audit is trivially consistent.
pub fn cascade_consistency(f: &Expr, cfg: &AuditConfig) -> Result<bool> {
    let m = cfg.bound.ok_or_else(|| Error::Precondition("cascade needs a bound M".into()))?;
    let report = lappan_audit(f, cfg)?;
    match report.verdict {
        Verdict::Vacuous => return Ok(true),
        Verdict::WithinBound => {}
        v => return Err(Error::Precondition(format!("audit verdict is {v:?}, not within-bound"))),
    }
    let cascade = bound_cascade(m, &cfg.targets, cfg.k);
    for p in &report.points {
        for (idx, b) in cascade.iter().enumerate() {
            let j = idx + 1;
            match derivative_at(f, p.location, j)? {
                ExtendedComplex::Finite(v) if v.norm() <= b * (1.0 + 1e-9) => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

/// Per-member suprema of an audit over a family, with a log-log growth fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyEvidence {
    pub parameters: Vec<Complex64>,
    pub suprema: Vec<Option<f64>>,
    /// Slope of `log sup` against `log |parameter|`, when every member has a
    /// positive supremum and at least two distinct parameter moduli occur.
    pub growth_exponent: Option<f64>,
}

impl FamilyEvidence {
    pub fn from_suprema(parameters: Vec<Complex64>, suprema: Vec<Option<f64>>) -> FamilyEvidence {
        let pts: Option<Vec<(f64, f64)>> = parameters
            .iter()
            .zip(&suprema)
            .map(|(p, s)| match s {
                Some(s) if *s > 0.0 && p.norm() > 0.0 => Some((p.norm().ln(), s.ln())),
                _ => None,
            })
            .collect();
        let growth_exponent = pts.filter(|p| p.iter().any(|q| q.0 != p[0].0)).map(|p| least_squares(&p).0);
        FamilyEvidence { parameters, suprema, growth_exponent }
    }
}

/// Runs `audit` on every member of the family, merged by index.
pub fn family_evidence(
    family: &Family,
    audit: impl Fn(&Expr) -> Result<AuditReport> + Sync,
) -> Result<FamilyEvidence> {
    let suprema = (0..family.len())
        .into_par_iter()
        .map(|i| audit(&family.instantiate(i)?).map(|r| r.supremum))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyEvidence::from_suprema(family.values().to_vec(), suprema))
}

/// Points `ξ` at which rescaled functions are sampled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub points: Vec<Complex64>,
}

impl XiGrid {
    /// `n × n` grid on the square `[-h, h]^2`, row by row from the bottom.
    pub fn square(half_width: f64, n: usize) -> XiGrid {
        let step = |i: usize| if n == 1 { 0.0 } else { -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64 };
        let points = (0..n).flat_map(|iy| (0..n).map(move |ix| Complex64::new(step(ix), step(iy)))).collect();
        XiGrid { points }
    }
}

/// One member of a rescaled family: `g_n(ξ) = ρ^(-α) f_n(z_n + ρ ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaleStep {
    pub index: usize,
    pub parameter: Complex64,
    pub witness: Complex64,
    pub rho: f64,
    pub alpha: f64,
    /// `g_n` on the ξ-grid, in grid order.
    pub samples: Vec<ExtendedComplex>,
    pub g_sharp_0: f64,
}

/// Largest chordal distance between the samples of two steps.
pub fn spherical_gap(a: &RescaleStep, b: &RescaleStep) -> f64 {
    a.samples.iter().zip(&b.samples).map(|(x, y)| sample_chordal(*x, *y)).fold(0.0, f64::max)
}

fn sample_chordal(a: ExtendedComplex, b: ExtendedComplex) -> f64 {
    match (a, b) {
        (ExtendedComplex::Finite(x), ExtendedComplex::Finite(y)) => chordal_distance(x, y),
        (ExtendedComplex::Pole(_), ExtendedComplex::Pole(_)) => 0.0,
        (ExtendedComplex::Finite(x), _) | (_, ExtendedComplex::Finite(x)) => 1.0 / (1.0 + x.norm_sqr()).sqrt(),
    }
}

/// CSV `n,re_z,im_z,rho,g_sharp_0`; `n` is the real part of the parameter.
pub fn rescale_csv(steps: &[RescaleStep]) -> String {
    let mut out = String::from("n,re_z,im_z,rho,g_sharp_0\n");
    for s in steps {
        let _ = writeln!(out, "{},{},{},{},{}", s.parameter.re, s.witness.re, s.witness.im, s.rho, s.g_sharp_0);
    }
    out
}

/// CSV `n,xi_re,xi_im,g_re,g_im`; poles are written as `inf,inf`.
pub fn rescale_samples_csv(steps: &[RescaleStep], grid: &XiGrid) -> String {
    let mut out = String::from("n,xi_re,xi_im,g_re,g_im\n");
    for s in steps {
        for (xi, g) in grid.points.iter().zip(&s.samples) {
            let (re, im) = match g {
                ExtendedComplex::Finite(w) => (w.re, w.im),
                ExtendedComplex::Pole(_) => (f64::INFINITY, f64::INFINITY),
            };
            let _ = writeln!(out, "{},{},{},{},{}", s.parameter.re, xi.re, xi.im, re, im);
        }
    }
    out
}

fn rescaled(f: &Expr, z: Complex64, rho: f64, alpha: f64) -> Result<Expr> {
    let g = affine_precompose(f, z, Complex64::new(rho, 0.0))?;
    Ok(if alpha == 0.0 { g } else { Expr::constant(rho.powf(-alpha)) * g })
}

fn rescale_member(family: &Family, index: usize, region: &Region, alpha: f64, grid: &XiGrid) -> Result<RescaleStep> {
    let f = family.instantiate(index)?;
    let est = marty_sup(&f, region, 0)?;
    if !(est.estimate > 0.0) {
        return Err(Error::FlatFamily(index));
    }
    let z = est.argmax;
    let rho = 1.0 / est.estimate;
    let g = rescaled(&f, z, rho, alpha)?;
    let samples = grid.points.iter().map(|&xi| eval_point(&g, xi)).collect::<Result<Vec<_>>>()?;
    let g_sharp_0 = if alpha == 0.0 {
        // g^#(0) = rho f^#(z) and rho = 1 / f^#(z)
        spherical_derivative(&f, z, 0)? / est.estimate
    } else {
        spherical_derivative(&g, Complex64::new(0.0, 0.0), 0)?
    };
    Ok(RescaleStep { index, parameter: family.values()[index], witness: z, rho, alpha, samples, g_sharp_0 })
}

/// Rescales every member about its Marty witness with `ρ_n = 1 / sup f_n^#`.
pub fn zalcman_rescale(family: &Family, region: &Region, alpha: f64, grid: &XiGrid) -> Result<Vec<RescaleStep>> {
    if !(alpha > -1.0) || !alpha.is_finite() {
        return Err(Error::Precondition(format!("alpha = {alpha} must exceed -1")));
    }
    region.validate()?;
    if grid.points.is_empty() {
        return Err(Error::Precondition("empty xi grid".into()));
    }
    (0..family.len()).into_par_iter().map(|i| rescale_member(family, i, region, alpha, grid)).collect()
}

/// Both sides of `M[g](ξ) = M[f](z + ρ ξ)` for `g = ρ^(-α) f(z + ρ ·)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub gap: f64,
}

pub fn rescale_monomial_identity(
    family: &Family,
    spec: &MonomialSpec,
    step: &RescaleStep,
    xi: Complex64,
) -> Result<IdentityCheck> {
    let expected = spec.alpha();
    if (step.alpha - expected).abs() > 1e-12 * (1.0 + expected.abs()) {
        return Err(Error::Precondition(format!(
            "step exponent {} differs from D_M/d_M = {expected}",
            step.alpha
        )));
    }
    let f = family.instantiate(step.index)?;
    let g = rescaled(&f, step.witness, step.rho, step.alpha)?;
    let value = |jet: crate::jet::LaurentJet| -> Result<Complex64> {
        jet.value().finite().ok_or_else(|| Error::Precondition("monomial has a pole at the sample point".into()))
    };
    let lhs = value(monomial_eval(spec, &g, xi, 0)?)?;
    let rhs = value(monomial_eval(spec, &f, step.witness + xi * step.rho, 0)?)?;
    Ok(IdentityCheck { lhs, rhs, gap: (lhs - rhs).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_with_params};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_disk() -> Region {
        Region::disk(c(0.0, 0.0), 1.0)
    }

    #[test]
    fn lappan_on_exponential() {
        let cfg = AuditConfig::new(unit_disk(), vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 3);
        let rep = lappan_audit(&parse("exp(z)").unwrap(), &cfg).unwrap();
        assert_eq!(rep.points.len(), 2);
        assert!(rep.preimages[2].roots.is_empty());
        assert!((rep.supremum.unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(rep.verdict, Verdict::Measured);
        let at_log2 = &rep.points[1];
        assert!((at_log2.location.re - 2f64.ln()).abs() < 1e-12);
        for v in &at_log2.values {
            assert!((v - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn lappan_identity_and_vacuous() {
        let f = parse("z").unwrap();
        let cfg = AuditConfig::new(unit_disk(), vec![c(0.0, 0.0), c(0.5, 0.0), c(5.0, 0.0)], 1);
        let rep = lappan_audit(&f, &cfg.with_bound(1.0)).unwrap();
        assert_eq!(rep.points.len(), 2);
        assert!((rep.supremum.unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(rep.verdict, Verdict::WithinBound);
        let cfg = AuditConfig::new(unit_disk(), vec![c(5.0, 0.0), c(6.0, 0.0), c(7.0, 0.0)], 1).with_bound(1.0);
        let rep = lappan_audit(&f, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Vacuous);
        assert_eq!(rep.supremum, None);
    }

    #[test]
    fn lappan_rejects_repeats_and_parameters() {
        let cfg = AuditConfig::new(unit_disk(), vec![c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], 1);
        assert_eq!(lappan_audit(&parse("z").unwrap(), &cfg), Err(Error::DistinctnessViolation));
        let cfg = AuditConfig::new(unit_disk(), vec![c(1.0, 0.0)], 1);
        let f = parse_with_params("n*z", &["n"]).unwrap();
        assert!(matches!(lappan_audit(&f, &cfg), Err(Error::FreeParameter(_))));
    }

    #[test]
    fn monomial_audit_examples() {
        let spec = MonomialSpec::new(vec![7, 1]).unwrap();
        let cfg = AuditConfig::new(unit_disk(), vec![c(1.0, 0.0)], 1);
        let rep = monomial_audit(&parse("2*z").unwrap(), &spec, &cfg).unwrap();
        assert_eq!(rep.points.len(), 7);
        let expect = 7.0 * 2f64.powf(8.0 / 7.0) / 2.0;
        for p in &rep.points {
            assert!((p.location.norm() - 2f64.powf(-8.0 / 7.0)).abs() < 1e-12);
            assert!((p.values[0] - expect).abs() < 1e-10 * expect);
        }
        let t = rep.threshold.unwrap();
        assert_eq!((t.degree, t.derivative_weight, t.rhs.as_str(), t.satisfied), (8, 1, "7", true));

        let spec = MonomialSpec::new(vec![0, 1]).unwrap();
        let rep = monomial_audit(&parse("3*z - 1").unwrap(), &spec, &cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Vacuous);
        assert!(!rep.threshold.unwrap().satisfied);

        let spec = MonomialSpec::with_order(vec![1], 1).unwrap();
        let cfg2 = AuditConfig::new(Region::disk(c(0.0, 0.0), 2.0), vec![c(1.0, 0.0)], 1);
        let rep = monomial_audit(&parse("z").unwrap(), &spec, &cfg2).unwrap();
        assert_eq!(rep.points.len(), 1);
        assert!((rep.supremum.unwrap() - 0.5).abs() < 1e-14);

        let zero = AuditConfig::new(unit_disk(), vec![c(0.0, 0.0)], 1);
        assert_eq!(monomial_audit(&parse("z").unwrap(), &spec, &zero), Err(Error::ZeroTarget));
    }

    #[test]
    fn cascade_values() {
        assert_eq!(bound_cascade(1.0, &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], 3), vec![5.0, 26.0]);
        assert_eq!(bound_cascade(1.0, &[c(0.0, 0.0)], 2), vec![1.0]);
        assert_eq!(bound_cascade(2.0, &[c(0.0, 1.0)], 4), vec![4.0, 34.0, 2314.0]);
        assert!(bound_cascade(2.0, &[c(0.0, 1.0)], 1).is_empty());
    }

    #[test]
    fn cascade_on_exponential() {
        let cfg = AuditConfig::new(unit_disk(), vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 3).with_bound(0.5);
        assert!(cascade_consistency(&parse("exp(z)").unwrap(), &cfg).unwrap());
        let vac = AuditConfig::new(unit_disk(), vec![c(5.0, 0.0), c(6.0, 0.0), c(7.0, 0.0)], 3).with_bound(0.5);
        assert!(cascade_consistency(&parse("z").unwrap(), &vac).unwrap());
    }

    #[test]
    fn rescale_linear_family() {
        let fam = Family::integer_range(parse_with_params("n*z", &["n"]).unwrap(), "n", 1, 6).unwrap();
        let grid = XiGrid::square(1.0, 5);
        let steps = zalcman_rescale(&fam, &Region::disk(c(0.0, 0.0), 0.5), 0.0, &grid).unwrap();
        for (i, s) in steps.iter().enumerate() {
            let n = (i + 1) as f64;
            assert!((s.rho - 1.0 / n).abs() < 1e-12);
            assert_eq!(s.witness, c(0.0, 0.0));
            assert_eq!(s.g_sharp_0, 1.0);
            for (xi, g) in grid.points.iter().zip(&s.samples) {
                assert!((g.finite().unwrap() - xi).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rescale_flat_family() {
        let fam = Family::integer_range(parse_with_params("7 + 0*n", &["n"]).unwrap(), "n", 1, 3).unwrap();
        let r = zalcman_rescale(&fam, &Region::disk(c(0.0, 0.0), 0.5), 0.0, &XiGrid::square(1.0, 3));
        assert_eq!(r, Err(Error::FlatFamily(0)));
    }

    #[test]
    fn identity_at_base_point_and_mismatch() {
        let fam = Family::integer_range(parse_with_params("m*z", &["m"]).unwrap(), "m", 1, 3).unwrap();
        let spec = MonomialSpec::new(vec![7, 1]).unwrap();
        let steps = zalcman_rescale(&fam, &Region::disk(c(0.0, 0.0), 0.5), spec.alpha(), &XiGrid::square(0.5, 3)).unwrap();
        for s in &steps {
            let chk = rescale_monomial_identity(&fam, &spec, s, c(0.0, 0.0)).unwrap();
            assert!(chk.gap <= 1e-12 * (1.0 + chk.rhs.norm()));
            let chk = rescale_monomial_identity(&fam, &spec, s, c(0.3, 0.0)).unwrap();
            assert!(chk.gap <= 1e-9 * chk.rhs.norm());
        }
        let other = MonomialSpec::new(vec![1, 1]).unwrap();
        assert!(matches!(rescale_monomial_identity(&fam, &other, &steps[0], c(0.3, 0.0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn audit_csv_columns() {
        let cfg = AuditConfig::new(unit_disk(), vec![c(0.5, 0.0)], 2);
        let rep = lappan_audit(&parse("z").unwrap(), &cfg).unwrap();
        let csv = rep.to_csv();
        assert!(csv.starts_with("target_re,target_im,re,im,multiplicity,j0,j1\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
