//! Argument-principle root counting and a-point location.
//!
//! [`winding_count`] returns `Z - P` for `f - target` inside a contour.
//! [`locate_apoints`] works with the holomorphic numerator of `f - a`, so that
//! poles cannot cancel zeros inside a cell: a quadtree is refined until each
//! cell holds one zero (polished by Newton's method) or a cluster has shrunk
//! below the tolerance.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{eval_point, fraction_dual, numerator_jet, Dual, ExtendedComplex};
use crate::sphere::{Region, Shape};

/// Default absolute tolerance in root coordinates.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Closed integration path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourShape {
    Circle { center: Complex64, radius: f64 },
    Rect { lo: Complex64, hi: Complex64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub shape: ContourShape,
    /// Initial samples along the whole contour (at least 16).
    pub samples: usize,
    /// Maximum number of bisections of any one sampling step.
    pub max_refinements: u32,
}

impl Contour {
    pub fn circle(center: Complex64, radius: f64) -> Contour {
        Contour { shape: ContourShape::Circle { center, radius }, samples: 64, max_refinements: 40 }
    }

    pub fn rect(lo: Complex64, hi: Complex64) -> Contour {
        Contour { shape: ContourShape::Rect { lo, hi }, samples: 64, max_refinements: 40 }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < 16 {
            return Err(Error::InvalidRegion("contour needs at least 16 samples".into()));
        }
        match self.shape {
            ContourShape::Circle { radius, .. } if !(radius > 0.0) => {
                Err(Error::InvalidRegion(format!("contour radius {radius}")))
            }
            ContourShape::Rect { lo, hi } if !(lo.re < hi.re && lo.im < hi.im) => {
                Err(Error::InvalidRegion("degenerate contour rectangle".into()))
            }
            _ => Ok(()),
        }
    }

    /// Point at parameter `t` in `[0, 1)` and the parameters where the path
    /// has corners.
    fn point(&self, t: f64) -> Complex64 {
        match self.shape {
            ContourShape::Circle { center, radius } => center + Complex64::from_polar(radius, TAU * t),
            ContourShape::Rect { lo, hi } => rect_point(lo, hi, t),
        }
    }

    fn corners(&self) -> &'static [f64] {
        match self.shape {
            ContourShape::Circle { .. } => &[0.0, 0.25, 0.5, 0.75, 1.0],
            ContourShape::Rect { .. } => &[0.0, 0.25, 0.5, 0.75, 1.0],
        }
    }
}

fn rect_point(lo: Complex64, hi: Complex64, t: f64) -> Complex64 {
    let s = 4.0 * t;
    let (a, b, u) = if s < 1.0 {
        (lo, Complex64::new(hi.re, lo.im), s)
    } else if s < 2.0 {
        (Complex64::new(hi.re, lo.im), hi, s - 1.0)
    } else if s < 3.0 {
        (hi, Complex64::new(lo.re, hi.im), s - 2.0)
    } else {
        (Complex64::new(lo.re, hi.im), lo, (s - 3.0).min(1.0))
    };
    a + (b - a) * u
}

/// Phase sample: unit direction of the value and its logarithmic derivative.
#[derive(Clone, Copy)]
struct Sample {
    unit: Complex64,
    log_derivative: Complex64,
}

impl Sample {
    fn from_fraction(p: Dual, q: Dual) -> Option<Sample> {
        let w = p.v * q.v.conj();
        let n = w.norm();
        let l = p.log_derivative() - q.log_derivative();
        (n > 0.0 && n.is_finite() && l.is_finite()).then(|| Sample { unit: w / n, log_derivative: l })
    }
}

/// Total phase change along the contour, in turns.
///
/// A step is accepted once its wrapped phase change is below a quarter turn
/// and `|g'/g| |dz| <= 1` at both ends, which keeps nearby zeros from
/// aliasing the phase.
fn winding_turns(contour: &Contour, value: &mut impl FnMut(Complex64) -> Result<Option<Sample>>) -> Result<i64> {
    let corners = contour.corners();
    let per_piece = (contour.samples / (corners.len() - 1)).max(4);
    let mut sample = |t: f64| -> Result<(Complex64, Sample)> {
        let z = contour.point(t);
        value(z)?.map(|s| (z, s)).ok_or(Error::OnContourSingularity { attempts: 1 })
    };
    let mut total = 0.0;
    for piece in corners.windows(2) {
        let (t0, t1) = (piece[0], piece[1]);
        let mut prev = (t0, sample(t0)?);
        for i in 1..=per_piece {
            let t = t0 + (t1 - t0) * i as f64 / per_piece as f64;
            let next = (t, sample(t)?);
            total += refine(contour.max_refinements, &mut sample, prev, next, 0)?;
            prev = next;
        }
    }
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.25 {
        return Err(Error::NonConvergent(format!("winding sum {turns} is not an integer")));
    }
    Ok(rounded as i64)
}

type Node = (f64, (Complex64, Sample));

fn refine(
    max_depth: u32,
    sample: &mut impl FnMut(f64) -> Result<(Complex64, Sample)>,
    a: Node,
    b: Node,
    depth: u32,
) -> Result<f64> {
    let (ta, (za, sa)) = a;
    let (tb, (zb, sb)) = b;
    let d = (sb.unit * sa.unit.conj()).arg();
    let dz = (zb - za).norm();
    let stiff = sa.log_derivative.norm().max(sb.log_derivative.norm()) * dz;
    if d.abs() < FRAC_PI_2 && stiff <= 1.0 {
        return Ok(d);
    }
    if depth >= max_depth {
        return Err(Error::NonConvergent(format!("phase step {d:.3} persists after {depth} refinements")));
    }
    let tm = 0.5 * (ta + tb);
    let m = (tm, sample(tm)?);
    Ok(refine(max_depth, sample, a, m, depth + 1)? + refine(max_depth, sample, m, b, depth + 1)?)
}

/// `Z - P` of `expr - target` inside the contour, with multiplicity.
pub fn winding_count(expr: &Expr, target: Complex64, contour: &Contour) -> Result<i64> {
    contour.validate()?;
    let near = 1e-13 * (1.0 + target.norm());
    let g = shifted(expr, target);
    winding_turns(contour, &mut |z| {
        let (p, q) = fraction_dual(&g, z)?;
        if !(p.v.norm() > near * q.v.norm()) {
            return Ok(None);
        }
        Ok(Sample::from_fraction(p, q))
    })
}

fn shifted(expr: &Expr, a: Complex64) -> Expr {
    if a == Complex64::new(0.0, 0.0) {
        expr.clone()
    } else {
        expr.clone() - Expr::Const(a)
    }
}

/// A located root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub location: Complex64,
    pub multiplicity: u32,
    /// `|g(location) - target|`.
    pub residual: f64,
}

/// Roots sorted by `(re, im)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RootList {
    pub entries: Vec<Root>,
}

impl RootList {
    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|r| r.multiplicity as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn locations(&self) -> Vec<Complex64> {
        self.entries.iter().map(|r| r.location).collect()
    }

    /// CSV with header `re,im,multiplicity,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,multiplicity,residual\n");
        for r in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", r.location.re, r.location.im, r.multiplicity, r.residual);
        }
        out
    }
}

/// Tuning knobs for [`locate_apoints_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocateOptions {
    /// Seed of the nudge directions.
    pub seed: u64,
    /// Number of boundary nudges before giving up on a contour.
    pub retries: usize,
    /// Cap on quadtree cells visited.
    pub max_cells: usize,
    /// Initial samples on each cell boundary.
    pub samples: usize,
    pub max_refinements: u32,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions { seed: 0x5eed, retries: 8, max_cells: 200_000, samples: 32, max_refinements: 36 }
    }
}

const NUDGE: f64 = 1e-4;

#[derive(Clone, Copy, Debug)]
struct Cell {
    lo: Complex64,
    hi: Complex64,
    count: i64,
}

impl Cell {
    fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    fn center(&self) -> Complex64 {
        (self.lo + self.hi) * 0.5
    }

    fn contains_loose(&self, z: Complex64) -> bool {
        let pad = 1e-9 * self.diameter();
        z.re >= self.lo.re - pad && z.re <= self.hi.re + pad && z.im >= self.lo.im - pad && z.im <= self.hi.im + pad
    }
}

struct Locator<'a> {
    g: &'a Expr,
    opts: &'a LocateOptions,
    rng: ChaCha8Rng,
    tol: f64,
}

impl Locator<'_> {
    fn count(&self, lo: Complex64, hi: Complex64) -> Result<i64> {
        let contour = Contour {
            shape: ContourShape::Rect { lo, hi },
            samples: self.opts.samples.max(16),
            max_refinements: self.opts.max_refinements,
        };
        let g = self.g;
        let one = Dual { v: Complex64::new(1.0, 0.0), d: Complex64::new(0.0, 0.0) };
        winding_turns(&contour, &mut |z| {
            let (p, _) = fraction_dual(g, z)?;
            Ok(Sample::from_fraction(p, one))
        })
    }

    fn root_cell(&mut self, lo: Complex64, hi: Complex64) -> Result<Cell> {
        let size = hi - lo;
        let (mut a, mut b) = (lo, hi);
        for attempt in 0..=self.opts.retries {
            match self.count(a, b) {
                Ok(count) if count >= 0 => return Ok(Cell { lo: a, hi: b, count }),
                Ok(_) | Err(Error::OnContourSingularity { .. }) | Err(Error::NonConvergent(_)) => {}
                Err(e) => return Err(e),
            }
            let s = NUDGE * (attempt + 1) as f64;
            let d1 = Complex64::new(self.rng.gen::<f64>() * size.re, self.rng.gen::<f64>() * size.im) * s;
            let d2 = Complex64::new(self.rng.gen::<f64>() * size.re, self.rng.gen::<f64>() * size.im) * s;
            a = lo - d1;
            b = hi + d2;
        }
        Err(Error::OnContourSingularity { attempts: self.opts.retries + 1 })
    }

    fn split(&mut self, cell: &Cell) -> Result<Option<[Cell; 4]>> {
        let size = cell.hi - cell.lo;
        for attempt in 0..=self.opts.retries {
            let s = NUDGE * (attempt + 1) as f64;
            let fx = 0.5 + s * (2.0 * self.rng.gen::<f64>() - 1.0);
            let fy = 0.5 + s * (2.0 * self.rng.gen::<f64>() - 1.0);
            let mx = cell.lo.re + size.re * fx;
            let my = cell.lo.im + size.im * fy;
            let boxes = [
                (cell.lo, Complex64::new(mx, my)),
                (Complex64::new(mx, cell.lo.im), Complex64::new(cell.hi.re, my)),
                (Complex64::new(cell.lo.re, my), Complex64::new(mx, cell.hi.im)),
                (Complex64::new(mx, my), cell.hi),
            ];
            let mut out = [*cell; 4];
            let mut ok = true;
            let mut sum = 0;
            for (slot, (lo, hi)) in out.iter_mut().zip(boxes) {
                match self.count(lo, hi) {
                    Ok(count) if count >= 0 => {
                        sum += count;
                        *slot = Cell { lo, hi, count };
                    }
                    Ok(_) | Err(Error::OnContourSingularity { .. }) | Err(Error::NonConvergent(_)) => {
                        ok = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if ok && sum == cell.count {
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    /// Newton iteration on the numerator, `m` the expected multiplicity.
    fn newton(&self, cell: &Cell, m: f64) -> Result<Option<Complex64>> {
        let start = cell.center();
        let reach = 4.0 * cell.diameter();
        let mut z = start;
        for _ in 0..80 {
            let j = match numerator_jet(self.g, z, 1) {
                Ok(j) => j,
                Err(Error::Overflow | Error::ZeroDivisor | Error::PrecisionLoss { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            if j.zero || j.valuation >= 1 {
                return Ok(Some(z));
            }
            let h = j.coeff_of_power(0);
            let dh = j.coeff_of_power(1);
            if dh.norm() == 0.0 {
                return Ok(None);
            }
            let step = h / dh * m;
            z -= step;
            if !z.is_finite() || (z - start).norm() > reach {
                return Ok(None);
            }
            if step.norm() <= (1e-3 * self.tol).max(4.0 * f64::EPSILON * z.norm()) {
                return Ok(Some(z));
            }
        }
        Ok(None)
    }

    fn run(&mut self, root: Cell) -> Result<Vec<(Complex64, u32)>> {
        let mut found = Vec::new();
        let mut stack = vec![root];
        let mut visited = 0usize;
        while let Some(cell) = stack.pop() {
            visited += 1;
            if visited > self.opts.max_cells {
                return Err(Error::BudgetExceeded(self.opts.max_cells));
            }
            match cell.count {
                0 => continue,
                1 => {
                    if let Some(z) = self.newton(&cell, 1.0)? {
                        if cell.contains_loose(z) {
                            found.push((z, 1));
                            continue;
                        }
                    }
                    if cell.diameter() < self.tol {
                        found.push((cell.center(), 1));
                        continue;
                    }
                }
                m => {
                    if cell.diameter() < self.tol {
                        found.push((cell.center(), m as u32));
                        continue;
                    }
                }
            }
            match self.split(&cell)? {
                Some(children) => stack.extend(children.into_iter().rev()),
                None => {
                    // Counting broke down inside the cell (values at rounding
                    // level); report the cell as one cluster.
                    let m = cell.count as u32;
                    let z = match self.newton(&cell, m as f64)? {
                        Some(z) if cell.contains_loose(z) => z,
                        _ => cell.center(),
                    };
                    found.push((z, m));
                }
            }
        }
        Ok(found)
    }
}

/// [`locate_apoints_with`] under default options.
pub fn locate_apoints(expr: &Expr, a: Complex64, region: &Region, tol: f64) -> Result<RootList> {
    locate_apoints_with(expr, a, region, tol, &LocateOptions::default())
}

/// Solutions of `expr(z) = a` in the region, with multiplicities.
///
/// Roots whose residual `|expr(z) - a|` exceeds `max(tol, 1e-9 (1 + |a|))`
/// are discarded: these are common zeros of the numerator and denominator,
/// not a-points.
pub fn locate_apoints_with(
    expr: &Expr,
    a: Complex64,
    region: &Region,
    tol: f64,
    opts: &LocateOptions,
) -> Result<RootList> {
    region.validate()?;
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    if !a.is_finite() {
        return Err(Error::Precondition("target must be finite".into()));
    }
    if let Some(p) = expr.free_params().into_iter().next() {
        return Err(Error::FreeParameter(p));
    }
    let g = shifted(expr, a);
    let mut loc = Locator { g: &g, opts, rng: ChaCha8Rng::seed_from_u64(opts.seed), tol };
    let (lo, hi) = region.bounding_box();
    let root = loc.root_cell(lo, hi)?;
    let raw = loc.run(root)?;

    let cutoff = tol.max(1e-9 * (1.0 + a.norm()));
    let mut entries = Vec::new();
    for (z, m) in raw {
        if !region.contains(z) {
            continue;
        }
        let residual = match eval_point(expr, z) {
            Ok(ExtendedComplex::Finite(v)) => (v - a).norm(),
            Ok(ExtendedComplex::Pole(_)) => continue,
            Err(e @ (Error::FreeParameter(_) | Error::Overflow)) => return Err(e),
            Err(_) => continue,
        };
        if residual <= cutoff {
            entries.push(Root { location: z, multiplicity: m, residual });
        }
    }
    entries.sort_by(|x, y| (x.location.re, x.location.im).partial_cmp(&(y.location.re, y.location.im)).unwrap());
    Ok(RootList { entries })
}

/// Preimages of each target value, in the order given.
pub fn preimage_set(
    expr: &Expr,
    targets: &[Complex64],
    region: &Region,
    tol: f64,
) -> Result<Vec<(Complex64, RootList)>> {
    preimage_set_with(expr, targets, region, tol, &LocateOptions::default())
}

pub fn preimage_set_with(
    expr: &Expr,
    targets: &[Complex64],
    region: &Region,
    tol: f64,
    opts: &LocateOptions,
) -> Result<Vec<(Complex64, RootList)>> {
    targets
        .iter()
        .map(|&t| locate_apoints_with(expr, t, region, tol, opts).map(|r| (t, r)))
        .collect()
}

/// Contour around the boundary of a region.
pub fn region_contour(region: &Region) -> Contour {
    match region.shape {
        Shape::Disk { center, radius } => Contour::circle(center, radius),
        Shape::Rect { lo, hi } => Contour::rect(lo, hi),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn winding_examples() {
        let o = c(0.0, 0.0);
        assert_eq!(winding_count(&parse("z^3 - 1").unwrap(), o, &Contour::circle(o, 2.0)).unwrap(), 3);
        assert_eq!(winding_count(&parse("1/z^2").unwrap(), o, &Contour::circle(o, 1.0)).unwrap(), -2);
        assert_eq!(winding_count(&parse("(z - 0.5)/(z^2 + 4)").unwrap(), o, &Contour::circle(o, 1.0)).unwrap(), 1);
        assert_eq!(winding_count(&parse("exp(z)").unwrap(), o, &Contour::rect(c(-3.0, -3.0), c(3.0, 3.0))).unwrap(), 0);
    }

    #[test]
    fn winding_singular_contour() {
        let o = c(0.0, 0.0);
        let r = winding_count(&parse("z - 1").unwrap(), o, &Contour::circle(o, 1.0));
        assert!(matches!(r, Err(Error::OnContourSingularity { .. }) | Err(Error::NonConvergent(_))));
    }

    #[test]
    fn roots_of_unity() {
        let roots = locate_apoints(&parse("z^7").unwrap(), c(1.0, 0.0), &Region::disk(c(0.0, 0.0), 2.0), DEFAULT_TOL)
            .unwrap();
        assert_eq!(roots.len(), 7);
        for r in &roots.entries {
            assert_eq!(r.multiplicity, 1);
            assert!((r.location.norm() - 1.0).abs() < 1e-12);
            assert!(r.residual <= DEFAULT_TOL);
        }
    }

    #[test]
    fn double_zero_at_origin() {
        let roots = locate_apoints(&parse("z^2").unwrap(), c(0.0, 0.0), &Region::disk(c(0.0, 0.0), 1.0), DEFAULT_TOL)
            .unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots.entries[0].multiplicity, 2);
        assert!(roots.entries[0].location.norm() < 1e-9);
    }

    #[test]
    fn exponential_preimages() {
        let f = parse("exp(z)").unwrap();
        let disk = Region::disk(c(0.0, 0.0), 1.0);
        let sets = preimage_set(&f, &[c(1.0, 0.0), c(2.0, 0.0)], &disk, DEFAULT_TOL).unwrap();
        assert_eq!(sets[0].1.len(), 1);
        assert!(sets[0].1.entries[0].location.norm() < 1e-12);
        assert_eq!(sets[1].1.len(), 1);
        assert!((sets[1].1.entries[0].location - c(2f64.ln(), 0.0)).norm() < 1e-12);
        let none = preimage_set(&parse("z").unwrap(), &[c(5.0, 0.0)], &disk, DEFAULT_TOL).unwrap();
        assert!(none[0].1.is_empty());
    }

    #[test]
    fn poles_do_not_hide_zeros() {
        // zero at 0.1 and pole at -0.1 sit in the same top-level cell
        let f = parse("(z - 0.1)/(z + 0.1)").unwrap();
        let roots = locate_apoints(&f, c(0.0, 0.0), &Region::disk(c(0.0, 0.0), 1.0), DEFAULT_TOL).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots.entries[0].location - c(0.1, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn spurious_numerator_zero_is_dropped() {
        let f = parse("1/z + 1/z").unwrap();
        let roots = locate_apoints(&f, c(0.0, 0.0), &Region::disk(c(0.0, 0.0), 1.0), DEFAULT_TOL).unwrap();
        assert!(roots.is_empty());
    }

    #[test]
    fn csv_header() {
        let l = RootList { entries: vec![Root { location: c(0.5, -1.0), multiplicity: 2, residual: 0.0 }] };
        assert_eq!(l.to_csv(), "re,im,multiplicity,residual\n0.5,-1,2,0\n");
    }
}
