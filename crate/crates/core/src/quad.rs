//! Globally adaptive Gauss-Kronrod (7/15) quadrature on an interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub(crate) struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est.error.total_cmp(&other.est.error)
    }
}

fn gk15(f: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<Estimate> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let s = f(center - dx)? + f(center + dx)?;
        kronrod += w * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok(Estimate { value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// Integrates `f` over `[a, b]` until the summed error estimate is at most
/// `max(abs_tol, rel_tol * |value|)`.
pub(crate) fn integrate(
    mut f: impl FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Estimate> {
    let n = initial_panels.max(1);
    let mut heap = BinaryHeap::new();
    for i in 0..n {
        let pa = a + (b - a) * i as f64 / n as f64;
        let pb = a + (b - a) * (i + 1) as f64 / n as f64;
        heap.push(Panel { a: pa, b: pb, est: gk15(&mut f, pa, pb)? });
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.est.value).sum();
        let error: f64 = heap.iter().map(|p| p.est.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Estimate { value, error });
        }
        if heap.len() >= max_panels {
            return Err(Error::NonConvergent(format!(
                "quadrature error {error:.3e} after {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further; accept its contribution
            heap.push(Panel { est: Estimate { value: worst.est.value, error: 0.0 }, ..worst });
            continue;
        }
        heap.push(Panel { a: worst.a, b: mid, est: gk15(&mut f, worst.a, mid)? });
        heap.push(Panel { a: mid, b: worst.b, est: gk15(&mut f, mid, worst.b)? });
    }
}
