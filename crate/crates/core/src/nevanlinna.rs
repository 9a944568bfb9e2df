//! Nevanlinna functionals on circles `|z| = r` and the inequality margins
//! built from them.
//!
//! `m(r, f)` is a circle average computed by adaptive quadrature; `N(r, f)`
//! and its reduced form come from a pole inventory located as zeros of
//! `1/f`. Every margin is reported raw; asymptotic error terms are handled
//! by the caller through an [`Envelope`].

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{eval_point, ExtendedComplex};
use crate::locate::{locate_apoints_with, LocateOptions, RootList, DEFAULT_TOL};
use crate::monomial::DiffPolynomial;
use crate::quad::integrate;
use crate::sphere::Region;

const NUDGE: f64 = 1e-6;
const NUDGE_RETRIES: usize = 8;
const NUDGE_SEED: u64 = 0x6e65_7661;

/// One row of a [`NevanlinnaReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NevanlinnaRow {
    pub r: f64,
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "Nbar")]
    pub nbar: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Quadrature error estimate of `m`.
    pub err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NevanlinnaReport {
    pub rows: Vec<NevanlinnaRow>,
    /// Poles in the closed disk of the largest radius.
    pub poles: RootList,
}

impl NevanlinnaReport {
    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|row| row.r).collect()
    }

    pub fn characteristic(&self) -> Vec<f64> {
        self.rows.iter().map(|row| row.t).collect()
    }

    /// CSV with header `r,m,N,Nbar,T,err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,m,N,Nbar,T,err\n");
        for row in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{},{}", row.r, row.m, row.n, row.nbar, row.t, row.err);
        }
        out
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!("radius {r} must be positive and finite")))
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty radius grid".into()));
    }
    for &r in grid {
        check_radius(r)?;
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("radii must be strictly increasing".into()));
    }
    Ok(())
}

struct HitPole;

fn proximity_once(expr: &Expr, r: f64) -> Result<std::result::Result<(f64, f64), HitPole>> {
    let mut pole = false;
    let est = integrate(
        |theta| {
            if pole {
                return Ok(0.0);
            }
            let z = Complex64::from_polar(r, theta);
            match eval_point(expr, z)? {
                ExtendedComplex::Finite(v) if v.is_finite() => Ok(v.norm().ln().max(0.0) / TAU),
                _ => {
                    pole = true;
                    Ok(0.0)
                }
            }
        },
        0.0,
        TAU,
        16,
        1e-9,
        1e-8,
        20_000,
    )?;
    Ok(if pole { Err(HitPole) } else { Ok((est.value.max(0.0), est.error)) })
}

/// `m(r, f)` and its quadrature error estimate.
///
/// If the quadrature lands on a pole the radius is moved by a relative
/// `1e-6` in a deterministic pseudo-random direction, up to 8 times.
pub fn proximity(expr: &Expr, r: f64) -> Result<(f64, f64)> {
    check_radius(r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(NUDGE_SEED);
    let mut radius = r;
    for _ in 0..=NUDGE_RETRIES {
        if let Ok(v) = proximity_once(expr, radius)? {
            return Ok(v);
        }
        radius = r * (1.0 + NUDGE * (2.0 * rng.gen::<f64>() - 1.0));
    }
    Err(Error::OnCircleSingularity { r })
}

fn locate_disk(expr: &Expr, a: Complex64, r: f64) -> Result<RootList> {
    locate_apoints_with(expr, a, &Region::disk(Complex64::new(0.0, 0.0), r), DEFAULT_TOL, &LocateOptions::default())
}

fn reciprocal(expr: &Expr) -> Expr {
    Expr::constant(1.0) / expr.clone()
}

/// Poles of `expr` in `|z| <= r`, found as zeros of `1/expr`.
pub fn pole_inventory(expr: &Expr, r: f64) -> Result<RootList> {
    check_radius(r)?;
    locate_disk(&reciprocal(expr), Complex64::new(0.0, 0.0), r)
}

/// Logarithmically weighted count of `points` in `|z| <= r`.
pub fn counting_from(points: &RootList, r: f64, reduced: bool) -> f64 {
    let mut total = 0.0;
    for p in &points.entries {
        let mu = if reduced { 1.0 } else { p.multiplicity as f64 };
        let d = p.location.norm();
        if d <= DEFAULT_TOL {
            total += mu * r.ln();
        } else if d <= r {
            total += mu * (r / d).ln();
        }
    }
    total
}

/// `N(r, f)`, or `N̄(r, f)` when `reduced`.
pub fn counting(expr: &Expr, r: f64, reduced: bool) -> Result<f64> {
    Ok(counting_from(&pole_inventory(expr, r)?, r, reduced))
}

/// `N(r, 1/(f - a))`, or its reduced form.
pub fn counting_apoints(expr: &Expr, a: Complex64, r: f64, reduced: bool) -> Result<f64> {
    check_radius(r)?;
    Ok(counting_from(&locate_disk(expr, a, r)?, r, reduced))
}

/// `m`, `N`, `N̄` and `T = m + N` over an increasing radius grid.
pub fn characteristic(expr: &Expr, grid: &[f64]) -> Result<NevanlinnaReport> {
    check_grid(grid)?;
    let r_max = *grid.last().expect("non-empty");
    let poles = pole_inventory(expr, r_max)?;
    let rows = grid
        .par_iter()
        .map(|&r| {
            let (m, err) = proximity(expr, r)?;
            let n = counting_from(&poles, r, false);
            let nbar = counting_from(&poles, r, true);
            Ok(NevanlinnaRow { r, m, n, nbar, t: m + n, err })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NevanlinnaReport { rows, poles })
}

/// Whether `expr` takes one value at a handful of fixed probe points.
fn is_constant(expr: &Expr) -> Result<bool> {
    let probes = [
        Complex64::new(0.31, 0.17),
        Complex64::new(-0.53, 0.41),
        Complex64::new(0.12, -0.77),
        Complex64::new(1.37, 0.29),
        Complex64::new(-0.9, -1.3),
    ];
    let mut first = None;
    for z in probes {
        let v = match eval_point(expr, z)? {
            ExtendedComplex::Finite(v) => v,
            ExtendedComplex::Pole(_) => return Ok(false),
        };
        match first {
            None => first = Some(v),
            Some(w) => {
                if (v - w).norm() > 1e-12 * (1.0 + w.norm()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `max_r |T(r, 1/(f - a)) - T(r, f)|` over the grid.
pub fn fmt_margin(expr: &Expr, a: Complex64, grid: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    if is_constant(&(expr.clone() - Expr::Const(a)))? && is_constant(expr)? {
        let v = eval_point(expr, Complex64::new(0.31, 0.17))?.finite();
        if v.is_some_and(|v| (v - a).norm() <= 1e-12 * (1.0 + a.norm())) {
            return Err(Error::Precondition("f is identically equal to a".into()));
        }
    }
    let shifted = reciprocal(&(expr.clone() - Expr::Const(a)));
    let lhs = characteristic(&shifted, grid)?;
    let rhs = characteristic(expr, grid)?;
    Ok(lhs.rows.iter().zip(&rhs.rows).map(|(x, y)| (x.t - y.t).abs()).fold(0.0, f64::max))
}

fn check_distinct(values: &[Complex64]) -> Result<()> {
    for (i, a) in values.iter().enumerate() {
        if values[..i].contains(a) {
            return Err(Error::DistinctnessViolation);
        }
    }
    Ok(())
}

/// `T(r, f) - Σ_j N̄(r, 1/(f - a_j)) - N̄(r, f)`.
pub fn smt_margin(expr: &Expr, values: &[Complex64], r: f64) -> Result<f64> {
    check_radius(r)?;
    if values.len() < 3 {
        return Err(Error::Precondition("at least three target values are required".into()));
    }
    check_distinct(values)?;
    if is_constant(expr)? {
        return Err(Error::ConstantFunction);
    }
    let report = characteristic(expr, &[r])?;
    let row = report.rows[0];
    let mut margin = row.t - row.nbar;
    for &a in values {
        margin -= counting_apoints(expr, a, r, true)?;
    }
    Ok(margin)
}

/// `T(r, f) - (θ+1)/(d-1) N̄(r, 1/f) - 1/(d-1) N̄(r, 1/(P[f] - a))`.
pub fn hinchliffe_margin(f: &Expr, p: &DiffPolynomial, a: Complex64, r: f64) -> Result<f64> {
    check_radius(r)?;
    let stats = p.stats();
    if stats.degree < 2 {
        return Err(Error::DegreeTooSmall(stats.degree));
    }
    if a == Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition("target a must be nonzero".into()));
    }
    if is_constant(f)? {
        return Err(Error::ConstantFunction);
    }
    let d1 = (stats.degree - 1) as f64;
    let t = characteristic(f, &[r])?.rows[0].t;
    let zeros = counting_apoints(f, Complex64::new(0.0, 0.0), r, true)?;
    let apoints = counting_apoints(&p.apply(f), a, r, true)?;
    Ok(t - (stats.theta as f64 + 1.0) / d1 * zeros - apoints / d1)
}

/// Least-squares slope of `log T` against `log r` over the upper half of the
/// grid, clamped at zero.
pub fn estimate_order(expr: &Expr, grid: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    let span = (grid[grid.len() - 1] / grid[0]).log10();
    if span < 1.5 - 1e-12 {
        return Err(Error::InvalidGrid(format!("grid spans {span:.3} decades; at least 1.5 needed")));
    }
    let report = characteristic(expr, grid)?;
    let upper = &report.rows[grid.len() / 2..];
    if upper.len() < 2 {
        return Err(Error::InvalidGrid("need at least two radii in the upper half".into()));
    }
    if upper.iter().any(|row| row.t < 10.0 * f64::EPSILON) {
        return Err(Error::InsufficientGrowth);
    }
    let pts: Vec<(f64, f64)> = upper.iter().map(|row| (row.r.ln(), row.t.ln())).collect();
    Ok(least_squares(&pts).0.max(0.0))
}

/// `(slope, intercept)` of the least-squares line through `pts`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Slack model `c1 log r + c2` for margins that hold up to an error term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c1: f64,
    pub c2: f64,
}

impl Envelope {
    /// Least-squares line through `(log r, margin)`, lifted so that every
    /// sample lies on or below it.
    pub fn fit(radii: &[f64], margins: &[f64]) -> Envelope {
        let pts: Vec<(f64, f64)> = radii.iter().map(|r| r.ln()).zip(margins.iter().copied()).collect();
        let (c1, c2) = least_squares(&pts);
        let lift = pts.iter().map(|(x, y)| y - (c1 * x + c2)).fold(0.0, f64::max);
        Envelope { c1, c2: c2 + lift }
    }

    pub fn at(&self, r: f64) -> f64 {
        self.c1 * r.ln() + self.c2
    }

    pub fn admits(&self, r: f64, margin: f64, slack: f64) -> bool {
        margin <= self.at(r) + slack
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::{E, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn proximity_examples() {
        assert!(proximity(&parse("z").unwrap(), 1.0).unwrap().0.abs() < 1e-14);
        let (m, _) = proximity(&parse("z^4").unwrap(), E).unwrap();
        assert!((m - 4.0).abs() < 1e-12);
        let (m, _) = proximity(&parse("exp(z)").unwrap(), 5.0).unwrap();
        assert!((m - 5.0 / PI).abs() < 1e-8);
    }

    #[test]
    fn proximity_with_pole_on_circle() {
        // pole at i on |z| = 1; m(1, 1/(z - i)) = integral of -log|e^it - i| over the positive part
        let (m, _) = proximity(&parse("1/(z - i)").unwrap(), 1.0).unwrap();
        assert!(m > 0.0 && m.is_finite());
    }

    #[test]
    fn counting_examples() {
        assert_eq!(counting(&parse("exp(z)").unwrap(), 3.0, false).unwrap(), 0.0);
        let n = counting(&parse("1/(z*(z - 1))").unwrap(), 2.0, false).unwrap();
        assert!((n - 2.0 * 2f64.ln()).abs() < 1e-9);
        let f = parse("1/z^2").unwrap();
        assert!((counting(&f, E, true).unwrap() - 1.0).abs() < 1e-12);
        assert!((counting(&f, E, false).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn characteristic_examples() {
        let rep = characteristic(&parse("z^3").unwrap(), &[E, E * E]).unwrap();
        assert!((rep.rows[0].t - 3.0).abs() < 1e-9 && (rep.rows[1].t - 6.0).abs() < 1e-9);
        let rep = characteristic(&parse("exp(z)").unwrap(), &[PI]).unwrap();
        assert!((rep.rows[0].t - 1.0).abs() < 1e-8);
        let rep = characteristic(&parse("0.5").unwrap(), &[1.0, 2.0, 3.0]).unwrap();
        assert!(rep.rows.iter().all(|row| row.t == 0.0));
        for row in &characteristic(&parse("(z^2 + 1)/(z - 0.5)^2").unwrap(), &[0.25, 1.5, 4.0]).unwrap().rows {
            assert_eq!(row.t, row.m + row.n);
            assert!(row.nbar <= row.n);
        }
    }

    #[test]
    fn grid_validation() {
        let f = parse("z").unwrap();
        assert!(matches!(characteristic(&f, &[2.0, 1.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(characteristic(&f, &[]), Err(Error::InvalidGrid(_))));
        assert!(matches!(estimate_order(&f, &[1.0, 2.0, 4.0]), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn csv_matches_rows() {
        let rep = characteristic(&parse("1/z").unwrap(), &[2.0]).unwrap();
        let csv = rep.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let vals: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let row = rep.rows[0];
        assert_eq!(vals, vec![row.r, row.m, row.n, row.nbar, row.t, row.err]);
    }

    #[test]
    fn fmt_for_identity() {
        let m = fmt_margin(&parse("z").unwrap(), c(0.0, 0.0), &[2.0, 4.0, 8.0]).unwrap();
        assert!(m < 1e-12);
    }

    #[test]
    fn smt_examples() {
        let m = smt_margin(&parse("z").unwrap(), &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], 10.0).unwrap();
        let expect = 10f64.ln() - (2.0 * 10f64.ln() + 5f64.ln());
        assert!((m - expect).abs() < 1e-9);
        let m = smt_margin(&parse("z^2").unwrap(), &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)], 4.0).unwrap();
        assert!(m < 0.0);
        let err = smt_margin(&parse("7").unwrap(), &[c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], 2.0);
        assert_eq!(err, Err(Error::ConstantFunction));
        let err = smt_margin(&parse("z").unwrap(), &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 2.0);
        assert_eq!(err, Err(Error::DistinctnessViolation));
    }

    #[test]
    fn hinchliffe_closed_forms() {
        use crate::monomial::MonomialSpec;
        let square = DiffPolynomial::from_monomial(&MonomialSpec::new(vec![2]).unwrap());
        let m = hinchliffe_margin(&parse("z").unwrap(), &square, c(1.0, 0.0), E).unwrap();
        // T = 1, zeros of z: 1, zeros of z^2 - 1: 2 log e = 2
        assert!((m - (1.0 - 1.0 - 2.0)).abs() < 1e-9);
        let linear = DiffPolynomial::from_monomial(&MonomialSpec::new(vec![1]).unwrap());
        assert_eq!(hinchliffe_margin(&parse("z").unwrap(), &linear, c(1.0, 0.0), E), Err(Error::DegreeTooSmall(1)));
    }

    #[test]
    fn order_of_exponential() {
        let grid: Vec<f64> = (0..=6).map(|i| 2f64.powi(i)).collect();
        let rho = estimate_order(&parse("exp(z)").unwrap(), &grid).unwrap();
        assert!((rho - 1.0).abs() < 0.05);
    }

    #[test]
    fn envelope_covers_samples() {
        let rs = [2.0, 4.0, 8.0, 16.0];
        let ms = [0.1, -0.3, 0.4, 0.2];
        let env = Envelope::fit(&rs, &ms);
        for (r, m) in rs.iter().zip(ms) {
            assert!(env.admits(*r, m, 1e-12));
        }
    }
}
