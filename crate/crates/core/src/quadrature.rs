//! Quadrature rules shared by the profile integrals and the velocity average.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, Result};

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

const GL10_NODES: [f64; 10] = [
    -0.973_906_528_517_171_7,
    -0.865_063_366_688_984_5,
    -0.679_409_568_299_024_4,
    -0.433_395_394_129_247_2,
    -0.148_874_338_981_631_2,
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 10] = [
    0.066_671_344_308_688_1,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982,
    0.269_266_719_309_996_3,
    0.295_524_224_714_752_9,
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// Order of a fixed Gauss-Legendre rule applied on every segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussOrder {
    /// Exact for polynomials up to degree 9.
    Five,
    /// Exact for polynomials up to degree 19.
    Ten,
}

impl GaussOrder {
    fn rule(self) -> (&'static [f64], &'static [f64]) {
        match self {
            GaussOrder::Five => (&GL5_NODES, &GL5_WEIGHTS),
            GaussOrder::Ten => (&GL10_NODES, &GL10_WEIGHTS),
        }
    }
}

/// Integrates `f` over consecutive segments `[breaks[i], breaks[i+1]]`.
///
/// When `f` is a polynomial on every segment of degree at most the rule's
/// exactness, the result is exact up to rounding.
pub fn gauss_legendre_segments<F>(breaks: &[f64], order: GaussOrder, mut f: F) -> f64
where
    F: FnMut(f64) -> f64,
{
    let (nodes, weights) = order.rule();
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut seg = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            seg += w * f(mid + half * x);
        }
        total += half * seg;
    }
    total
}

/// Sorted union of the sample coordinates of several grids, clipped to `[lo, hi]`.
///
/// The end points `lo` and `hi` are always included.
pub fn merged_breakpoints(grids: &[&[f64]], lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = grids
        .iter()
        .flat_map(|g| g.iter().copied())
        .filter(|&z| z > lo && z < hi)
        .collect();
    out.push(lo);
    out.push(hi);
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup();
    out
}

/// Values that adaptive Simpson can accumulate.
pub trait Accumulate:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Accumulate for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Accumulate for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature on `[a, b]`.
///
/// The interval is first cut into `initial_panels` equal panels so that an
/// oscillatory integrand is resolved before refinement starts; `abs_tol` is
/// shared between panels in proportion to their length.
pub fn adaptive_simpson<T, F>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    initial_panels: usize,
) -> Result<T>
where
    T: Accumulate,
    F: Fn(f64) -> T,
{
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "invalid quadrature interval [{a}, {b}]"
        )));
    }
    let panels = initial_panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = T::zero();
    for k in 0..panels {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = (flo + fmid * 4.0 + fhi) * ((hi - lo) / 6.0);
        let tol = abs_tol * (hi - lo) / (b - a);
        total = total + simpson_step(&f, lo, hi, flo, fmid, fhi, whole, tol, MAX_DEPTH);
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T, F>(
    f: &F,
    a: f64,
    b: f64,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: f64,
    depth: u32,
) -> T
where
    T: Accumulate,
    F: Fn(f64) -> T,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.magnitude() <= 15.0 * tol {
        return left + right + delta * (1.0 / 15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
