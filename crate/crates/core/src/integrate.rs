//! Adaptive Gauss-Kronrod integration on a finite interval.
//!
//! A 15-point Kronrod rule with its embedded 7-point Gauss rule gives the
//! local estimate; the interval with the largest error estimate is bisected
//! until the summed estimate drops below the requested absolute tolerance or
//! reaches the floating-point floor of the integrand.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_value = WGK[7] * fc.abs();
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += w * (f1 + f2);
        abs_value += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        abs_value: abs_value * half.abs(),
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The tolerance is relaxed to the rounding floor `50·ε·∫|f|` when that is
/// larger, since no quadrature can resolve cancellation below it.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        let (error, abs_value) = heap
            .iter()
            .fold((0.0, 0.0), |acc, s| (acc.0 + s.error, acc.1 + s.abs_value));
        let floor = 50.0 * f64::EPSILON * abs_value;
        if error <= tol.max(floor) {
            return Ok(Integral {
                value: sorted_sum(&heap),
                error,
                evaluations,
            });
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Convergence {
                tol,
                estimate: error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
        evaluations += 30;
    }
}

// Summation in interval order so the result does not depend on heap layout.
fn sorted_sum(heap: &BinaryHeap<Segment>) -> f64 {
    let mut segments: Vec<&Segment> = heap.iter().collect();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    segments.iter().map(|s| s.value).sum()
}
