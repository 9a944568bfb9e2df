//! Task execution. Each task yields a JSON value and optional CSV side files.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use super::config::{complex_list, Declarations, RunConfig, TaskConfig};
use crate::criteria::{
    bound_cascade, cascade_consistency, lappan_audit, monomial_audit, rescale_csv, rescale_monomial_identity,
    rescale_samples_csv, spherical_gap, zalcman_rescale, AuditConfig, AuditReport, FamilyEvidence, IdentityCheck,
    Preimages, RescaleStep, XiGrid,
};
use crate::error::Result;
use crate::expr::{Expr, Family};
use crate::jet::{derivative_at, ExtendedComplex};
use crate::locate::{locate_apoints_with, LocateOptions};
use crate::nevanlinna::{characteristic, estimate_order, fmt_margin, hinchliffe_margin, smt_margin, Envelope};
use crate::sphere::{hyperbolic_spherical, marty_sup, spherical_derivative, MartyEstimate};

/// Output of one task.
pub struct TaskOutput {
    pub result: Value,
    /// `(suffix, contents)`: written as `<task><suffix>.csv`.
    pub csv: Vec<(String, String)>,
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn single(result: Value, csv: Option<String>) -> TaskOutput {
    TaskOutput { result, csv: csv.map(|c| (String::new(), c)).into_iter().collect() }
}

#[derive(Serialize)]
struct EvalPoint {
    z: Complex64,
    /// `f, f', ..., f^(order)`.
    derivatives: Vec<ExtendedComplex>,
}

#[derive(Serialize)]
struct SphericalPoint {
    z: Complex64,
    value: f64,
}

#[derive(Serialize)]
struct Member<T> {
    parameter: Option<Complex64>,
    #[serde(flatten)]
    value: T,
}

#[derive(Serialize)]
struct AuditResult {
    members: Vec<Member<AuditReport>>,
    evidence: Option<FamilyEvidence>,
}

#[derive(Serialize)]
struct MarginRow {
    r: f64,
    margin: f64,
}

#[derive(Serialize)]
struct MarginSeries {
    rows: Vec<MarginRow>,
    envelope: Envelope,
}

fn margin_series(radii: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<MarginSeries> {
    let rows = radii.iter().map(|&r| f(r).map(|margin| MarginRow { r, margin })).collect::<Result<Vec<_>>>()?;
    let margins: Vec<f64> = rows.iter().map(|row| row.margin).collect();
    Ok(MarginSeries { envelope: Envelope::fit(radii, &margins), rows })
}

/// Subjects of a task: one expression, or every member of a family.
fn subjects(d: &Declarations, expr: &Option<String>, family: &Option<String>) -> Result<Vec<(Option<Complex64>, Expr)>> {
    match (expr, family) {
        (Some(e), _) => Ok(vec![(None, d.expressions[e].clone())]),
        (None, Some(f)) => {
            let fam: &Family = &d.families[f];
            (0..fam.len()).map(|i| Ok((Some(fam.values()[i]), fam.instantiate(i)?))).collect()
        }
        (None, None) => unreachable!("validated"),
    }
}

fn audit_result(members: Vec<Member<AuditReport>>) -> TaskOutput {
    let evidence = if members.iter().all(|m| m.parameter.is_some()) && members.len() > 1 {
        let params: Vec<Complex64> = members.iter().map(|m| m.parameter.expect("family")).collect();
        let sups: Vec<Option<f64>> = members.iter().map(|m| m.value.supremum).collect();
        Some(FamilyEvidence::from_suprema(params, sups))
    } else {
        None
    };
    let mut csv = String::new();
    for (i, m) in members.iter().enumerate() {
        let body = m.value.to_csv();
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        if i == 0 {
            let _ = writeln!(csv, "parameter_re,parameter_im,{header}");
        }
        let p = m.parameter.unwrap_or_default();
        for line in lines {
            let _ = writeln!(csv, "{},{},{line}", p.re, p.im);
        }
    }
    single(json(&AuditResult { members, evidence }), Some(csv))
}

pub fn execute(cfg: &RunConfig, d: &Declarations, task: &TaskConfig, seed: u64) -> Result<TaskOutput> {
    let s = &cfg.settings;
    let region = |r| cfg.region(r, "region").expect("validated");
    Ok(match task {
        TaskConfig::Eval(t) => {
            let f = &d.expressions[&t.expr];
            let mut points = Vec::new();
            for z in complex_list(&t.points) {
                let derivatives = (0..=t.order).map(|k| derivative_at(f, z, k)).collect::<Result<Vec<_>>>()?;
                points.push(EvalPoint { z, derivatives });
            }
            single(json(&points), None)
        }
        TaskConfig::Spherical(t) => {
            let f = &d.expressions[&t.expr];
            let mut points = Vec::new();
            for z in complex_list(&t.points) {
                let value = if t.hyperbolic { hyperbolic_spherical(f, z)? } else { spherical_derivative(f, z, t.j)? };
                points.push(SphericalPoint { z, value });
            }
            single(json(&points), None)
        }
        TaskConfig::Marty(t) => {
            let reg = region(&t.region);
            let mut members = Vec::new();
            let mut csv = String::from("parameter_re,parameter_im,estimate,re_z,im_z\n");
            for (parameter, f) in subjects(d, &t.expr, &t.family)? {
                let est: MartyEstimate = marty_sup(&f, &reg, t.j)?;
                let p = parameter.unwrap_or_default();
                let _ = writeln!(csv, "{},{},{},{},{}", p.re, p.im, est.estimate, est.argmax.re, est.argmax.im);
                members.push(Member { parameter, value: est });
            }
            single(json(&members), Some(csv))
        }
        TaskConfig::Apoints(t) => {
            let f = &d.expressions[&t.expr];
            let reg = region(&t.region);
            let opts = LocateOptions { seed, ..LocateOptions::default() };
            let tol = t.tol.unwrap_or(s.tol);
            let mut out = Vec::new();
            let mut csv = String::from("target_re,target_im,re,im,multiplicity,residual\n");
            for a in complex_list(&t.targets) {
                let roots = locate_apoints_with(f, a, &reg, tol, &opts)?;
                for r in &roots.entries {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{}",
                        a.re, a.im, r.location.re, r.location.im, r.multiplicity, r.residual
                    );
                }
                out.push(Preimages { target: a, roots });
            }
            single(json(&out), Some(csv))
        }
        TaskConfig::Nevanlinna(t) => {
            let rep = characteristic(&d.expressions[&t.expr], cfg.radii(&t.radii))?;
            let csv = rep.to_csv();
            single(json(&rep), Some(csv))
        }
        TaskConfig::Order(t) => {
            let radii = cfg.radii(&t.radii);
            let order = estimate_order(&d.expressions[&t.expr], radii)?;
            single(serde_json::json!({ "radii": radii, "order": order }), None)
        }
        TaskConfig::LappanAudit(t) => {
            let base = AuditConfig {
                region: region(&t.region),
                targets: complex_list(&t.targets),
                k: t.k,
                bound: t.bound,
                tol: t.tol.unwrap_or(s.tol),
            };
            let members = subjects(d, &t.expr, &t.family)?
                .into_iter()
                .map(|(parameter, f)| lappan_audit(&f, &base).map(|value| Member { parameter, value }))
                .collect::<Result<Vec<_>>>()?;
            audit_result(members)
        }
        TaskConfig::MonomialAudit(t) => {
            let spec = &d.monomials[&t.monomial];
            let base = AuditConfig {
                region: region(&t.region),
                targets: vec![t.target.get()],
                k: spec.order().unwrap_or(1),
                bound: t.bound,
                tol: t.tol.unwrap_or(s.tol),
            };
            let members = subjects(d, &t.expr, &t.family)?
                .into_iter()
                .map(|(parameter, f)| monomial_audit(&f, spec, &base).map(|value| Member { parameter, value }))
                .collect::<Result<Vec<_>>>()?;
            audit_result(members)
        }
        TaskConfig::Cascade(t) => {
            let targets = complex_list(&t.targets);
            let bounds = bound_cascade(t.bound, &targets, t.k);
            let consistent = match (&t.expr, &t.region) {
                (Some(e), Some(r)) => {
                    let acfg = AuditConfig {
                        region: region(r),
                        targets: targets.clone(),
                        k: t.k,
                        bound: Some(t.bound),
                        tol: t.tol.unwrap_or(s.tol),
                    };
                    Some(cascade_consistency(&d.expressions[e], &acfg)?)
                }
                _ => None,
            };
            single(serde_json::json!({ "bounds": bounds, "consistent": consistent }), None)
        }
        TaskConfig::Rescale(t) => {
            let fam = &d.families[&t.family];
            let spec = t.monomial.as_ref().map(|m| &d.monomials[m]);
            let alpha = match (t.alpha, spec) {
                (Some(a), _) => a,
                (None, Some(sp)) => sp.alpha(),
                (None, None) => 0.0,
            };
            let grid = XiGrid::square(t.xi.half_width, t.xi.points_per_side);
            let steps: Vec<RescaleStep> = zalcman_rescale(fam, &region(&t.region), alpha, &grid)?;
            let gaps: Vec<f64> = steps.windows(2).map(|w| spherical_gap(&w[0], &w[1])).collect();
            let identity: Option<Vec<Vec<IdentityCheck>>> = match (&t.identity, spec) {
                (Some(idc), Some(sp)) => Some(
                    steps
                        .iter()
                        .map(|st| {
                            complex_list(&idc.xi)
                                .into_iter()
                                .map(|xi| rescale_monomial_identity(fam, sp, st, xi))
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                _ => None,
            };
            let csv = vec![
                (".steps".to_string(), rescale_csv(&steps)),
                (".samples".to_string(), rescale_samples_csv(&steps, &grid)),
            ];
            TaskOutput {
                result: serde_json::json!({
                    "alpha": alpha,
                    "xi": grid,
                    "steps": json(&steps),
                    "consecutive_gaps": gaps,
                    "identity": identity,
                }),
                csv,
            }
        }
        TaskConfig::Margins(t) => {
            let f = &d.expressions[&t.expr];
            let radii = cfg.radii(&t.radii);
            let fmt = t.fmt_target.map(|a| fmt_margin(f, a.get(), radii)).transpose()?;
            let smt = match &t.smt_values {
                Some(v) => {
                    let values = complex_list(v);
                    Some(margin_series(radii, |r| smt_margin(f, &values, r))?)
                }
                None => None,
            };
            let hinchliffe = match &t.hinchliffe {
                Some(h) => {
                    let p = &d.polynomials[&h.polynomial];
                    let a = h.target.get();
                    Some(margin_series(radii, |r| hinchliffe_margin(f, p, a, r))?)
                }
                None => None,
            };
            single(serde_json::json!({ "fmt": fmt, "smt": json(&smt), "hinchliffe": json(&hinchliffe) }), None)
        }
    })
}
