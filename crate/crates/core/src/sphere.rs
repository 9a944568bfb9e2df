//! Spherical derivatives and Marty-type suprema.
//!
//! `g^#(z) = |g'(z)| / (1 + |g(z)|^2)` is the derivative of `g` with respect to
//! the chordal metric. It is invariant under `g -> 1/g`, which is how it is
//! evaluated at and near poles.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{jet_eval, LaurentJet};

/// Shape of a compact region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Disk { center: Complex64, radius: f64 },
    Rect { lo: Complex64, hi: Complex64 },
}

/// A closed disk or rectangle plus the sampling parameters of grid sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub shape: Shape,
    /// Grid points per axis.
    pub resolution: usize,
    /// Rounds of zoom-in refinement around the running maximum.
    pub depth: usize,
}

impl Region {
    pub const DEFAULT_RESOLUTION: usize = 41;
    pub const DEFAULT_DEPTH: usize = 12;

    pub fn disk(center: Complex64, radius: f64) -> Region {
        Region {
            shape: Shape::Disk { center, radius },
            resolution: Self::DEFAULT_RESOLUTION,
            depth: Self::DEFAULT_DEPTH,
        }
    }

    pub fn rect(lo: Complex64, hi: Complex64) -> Region {
        Region { shape: Shape::Rect { lo, hi }, resolution: Self::DEFAULT_RESOLUTION, depth: Self::DEFAULT_DEPTH }
    }

    pub fn with_grid(mut self, resolution: usize, depth: usize) -> Region {
        self.resolution = resolution;
        self.depth = depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::Disk { center, radius } => {
                if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return Err(Error::InvalidRegion(format!("disk radius {radius}")));
                }
            }
            Shape::Rect { lo, hi } => {
                if !(lo.re < hi.re && lo.im < hi.im) || !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidRegion("degenerate rectangle".into()));
                }
            }
        }
        if self.resolution < 2 {
            return Err(Error::InvalidRegion("resolution must be at least 2".into()));
        }
        Ok(())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match self.shape {
            Shape::Disk { center, radius } => (z - center).norm() <= radius,
            Shape::Rect { lo, hi } => z.re >= lo.re && z.re <= hi.re && z.im >= lo.im && z.im <= hi.im,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Complex64, Complex64) {
        match self.shape {
            Shape::Disk { center, radius } => {
                let d = Complex64::new(radius, radius);
                (center - d, center + d)
            }
            Shape::Rect { lo, hi } => (lo, hi),
        }
    }

    pub fn center(&self) -> Complex64 {
        let (lo, hi) = self.bounding_box();
        (lo + hi) * 0.5
    }
}

/// Coordinate chart used to evaluate `g^#`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// `|g'| / (1 + |g|^2)`.
    Direct,
    /// The same formula applied to `1/g`.
    Reciprocal,
}

/// `g^#` at the expansion point of the jet of `g`, in the given chart.
pub fn spherical_from_jet(g: &LaurentJet, chart: Chart) -> Result<f64> {
    if g.zero {
        return Ok(0.0);
    }
    let jet = match chart {
        Chart::Direct => g.clone(),
        Chart::Reciprocal => g.recip()?,
    };
    Ok(match jet.valuation {
        v if v >= 2 => 0.0,
        1 => jet.coeffs[0].norm(),
        0 => {
            let w = jet.coeffs[0];
            let d = jet.coeffs.get(1).copied().unwrap_or_default();
            d.norm() / (1.0 + w.norm_sqr())
        }
        _ => {
            // pole of the charted function: switch to the other chart
            let inv = jet.recip()?;
            if inv.valuation == 1 {
                inv.coeffs[0].norm()
            } else {
                0.0
            }
        }
    })
}

/// Chart chosen automatically: reciprocal once `|g(z0)| > 1` or at poles.
pub fn auto_chart(g: &LaurentJet) -> Chart {
    if g.zero || g.valuation > 0 {
        Chart::Direct
    } else if g.valuation < 0 || g.coeffs[0].norm() > 1.0 {
        Chart::Reciprocal
    } else {
        Chart::Direct
    }
}

/// Jet of `f^(j)` at `z0` with enough coefficients for its spherical derivative.
fn derived_jet(expr: &Expr, z0: Complex64, j: usize) -> Result<LaurentJet> {
    jet_eval(&expr.clone().deriv(j as u32), z0, 3)
}

/// `(f^(j))^#(z0)`, continuous across poles of `f^(j)`.
pub fn spherical_derivative(expr: &Expr, z0: Complex64, j: usize) -> Result<f64> {
    let g = derived_jet(expr, z0, j)?;
    spherical_from_jet(&g, auto_chart(&g))
}

/// `(f^(j))^#(z0)` evaluated in a fixed chart.
pub fn spherical_derivative_in_chart(expr: &Expr, z0: Complex64, j: usize, chart: Chart) -> Result<f64> {
    let g = derived_jet(expr, z0, j)?;
    spherical_from_jet(&g, chart)
}

/// `(1 - |z0|^2) f^#(z0)` on the unit disk.
pub fn hyperbolic_spherical(expr: &Expr, z0: Complex64) -> Result<f64> {
    let r2 = z0.norm_sqr();
    if r2 >= 1.0 {
        return Err(Error::OutsideUnitDisk(format!("{z0}")));
    }
    Ok((1.0 - r2) * spherical_derivative(expr, z0, 0)?)
}

/// Chordal distance on the Riemann sphere (normalized so that `chi(0, inf) = 1`).
pub fn chordal_distance(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
}

/// Result of a Marty sweep. `estimate` is a lower bound for the supremum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartyEstimate {
    pub estimate: f64,
    pub argmax: Complex64,
}

/// Values within this relative gap of the maximum count as ties.
const TIE_RELATIVE: f64 = 1e-12;

#[derive(Clone, Copy)]
struct Candidate {
    value: f64,
    z: Complex64,
}

/// Running maximum with deterministic tie-breaking: among tied values prefer
/// the point closest to `anchor`, then the lexicographically smallest.
struct Best {
    anchor: Complex64,
    max_seen: f64,
    witness: Option<Candidate>,
}

impl Best {
    fn offer(&mut self, c: Candidate) {
        self.max_seen = self.max_seen.max(c.value);
        let Some(w) = self.witness else {
            self.witness = Some(c);
            return;
        };
        let tol = TIE_RELATIVE * w.value.abs().max(c.value.abs());
        let replace = if c.value > w.value + tol {
            true
        } else if c.value >= w.value - tol {
            let dc = (c.z - self.anchor).norm();
            let dw = (w.z - self.anchor).norm();
            dc < dw || (dc == dw && (c.z.re, c.z.im) < (w.z.re, w.z.im))
        } else {
            false
        };
        if replace {
            self.witness = Some(c);
        }
    }
}

fn grid(lo: Complex64, hi: Complex64, n: usize) -> impl Iterator<Item = Complex64> {
    let step = move |a: f64, b: f64, i: usize| if n == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    (0..n).flat_map(move |iy| {
        (0..n).map(move |ix| Complex64::new(step(lo.re, hi.re, ix), step(lo.im, hi.im, iy)))
    })
}

fn sweep(expr: &Expr, region: &Region, j: usize, lo: Complex64, hi: Complex64) -> Result<Vec<Candidate>> {
    let pts: Vec<Complex64> = grid(lo, hi, region.resolution).filter(|z| region.contains(*z)).collect();
    pts.par_iter()
        .map(|&z| spherical_derivative(expr, z, j).map(|value| Candidate { value, z }))
        .collect()
}

/// Grid estimate of `sup_K (f^(j))^#` with zoom-in refinement.
///
/// Each refinement round re-grids the two cells around the current witness at
/// the same resolution; the estimate never decreases with depth.
pub fn marty_sup(expr: &Expr, region: &Region, j: usize) -> Result<MartyEstimate> {
    region.validate()?;
    let (mut lo, mut hi) = region.bounding_box();
    let mut best = Best { anchor: region.center(), max_seen: f64::NEG_INFINITY, witness: None };
    for round in 0..=region.depth {
        for c in sweep(expr, region, j, lo, hi)? {
            best.offer(c);
        }
        let Some(w) = best.witness else {
            return Err(Error::InvalidRegion("grid has no points inside the region".into()));
        };
        if round == region.depth {
            break;
        }
        let n = (region.resolution - 1) as f64;
        let half = Complex64::new((hi.re - lo.re) / n, (hi.im - lo.im) / n);
        lo = w.z - half;
        hi = w.z + half;
    }
    let w = best.witness.expect("at least one sweep");
    Ok(MartyEstimate { estimate: best.max_seen, argmax: w.z })
}
