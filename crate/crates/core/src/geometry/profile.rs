use serde::{Deserialize, Serialize};

use crate::quadrature::{gauss_legendre_segments, merged_breakpoints, GaussOrder};
use crate::{Error, Result};

/// Piecewise-linear function sampled on a strictly increasing grid.
///
/// Evaluation outside `[z_first, z_last]` is an error; there is no extrapolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    z: Vec<f64>,
    values: Vec<f64>,
}

impl Profile1D {
    pub fn new(z: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if z.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "{} coordinates but {} values",
                z.len(),
                values.len()
            )));
        }
        if z.len() < 2 {
            return Err(Error::InvalidProfile("need at least two samples".into()));
        }
        if z.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "coordinates must be strictly increasing".into(),
            ));
        }
        Ok(Profile1D { z, values })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Profile1D::new(grid.to_vec(), grid.iter().map(|&z| f(z)).collect())
    }

    /// Constant `value` on `[z0, z1]`.
    pub fn constant(z0: f64, z1: f64, value: f64) -> Result<Self> {
        Profile1D::new(vec![z0, z1], vec![value, value])
    }

    pub fn coordinates(&self) -> &[f64] {
        &self.z
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.z[0], self.z[self.z.len() - 1])
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.support();
        a <= lo && hi <= b
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(z >= lo && z <= hi) {
            return Err(Error::OutOfGrid {
                what: "profile",
                value: z,
                min: lo,
                max: hi,
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: f64) -> f64 {
        let i = match self.z.binary_search_by(|p| p.total_cmp(&z)) {
            Ok(i) => return self.values[i],
            Err(i) => i.clamp(1, self.z.len() - 1),
        };
        let (z0, z1) = (self.z[i - 1], self.z[i]);
        let t = (z - z0) / (z1 - z0);
        self.values[i - 1] + t * (self.values[i] - self.values[i - 1])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Profile1D::new(self.z.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Profile1D {
            z: self.z.clone(),
            values: self.values.iter().map(|v| k * v).collect(),
        }
    }

    /// Σ cᵢ pᵢ on the union of the sample grids, restricted to the common support.
    ///
    /// Exact, since a sum of piecewise-linear functions is piecewise linear on the
    /// merged grid.
    pub fn linear_combination(terms: &[(f64, &Profile1D)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidProfile("empty linear combination".into()))?;
        let (mut lo, mut hi) = first.1.support();
        for (_, p) in &terms[1..] {
            let (a, b) = p.support();
            lo = lo.max(a);
            hi = hi.min(b);
        }
        if !(hi > lo) {
            return Err(Error::MismatchedSupport(
                "profiles in a linear combination do not overlap".into(),
            ));
        }
        let grids: Vec<&[f64]> = terms.iter().map(|(_, p)| p.coordinates()).collect();
        let z = merged_breakpoints(&grids, lo, hi);
        let values = z
            .iter()
            .map(|&zz| terms.iter().map(|(c, p)| c * p.eval_unchecked(zz)).sum())
            .collect();
        Profile1D::new(z, values)
    }

    /// ∫ p(z) dz over the full support (exact trapezoid).
    pub fn integral(&self) -> f64 {
        self.z
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(z, v)| 0.5 * (z[1] - z[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// ∫ Πᵢ pᵢ(z) · g(z) dz over `[lo, hi]`, with `g` a function of the profile values.
///
/// Integration runs segment by segment on the merged grid with 5-point
/// Gauss-Legendre, which is exact whenever the integrand is a polynomial of
/// degree ≤ 9 on each segment (for instance a product of up to nine linear
/// factors), so the result does not change under refinement of the inputs.
pub fn integrate_on_merged_grid(
    profiles: &[&Profile1D],
    lo: f64,
    hi: f64,
    integrand: impl Fn(&[f64]) -> f64,
) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::MismatchedSupport(format!(
            "empty range [{lo}, {hi}]"
        )));
    }
    for p in profiles {
        if !p.covers(lo, hi) {
            let (a, b) = p.support();
            return Err(Error::MismatchedSupport(format!(
                "profile on [{a}, {b}] does not cover [{lo}, {hi}]"
            )));
        }
    }
    let grids: Vec<&[f64]> = profiles.iter().map(|p| p.coordinates()).collect();
    let breaks = merged_breakpoints(&grids, lo, hi);
    let mut buf = vec![0.0; profiles.len()];
    Ok(gauss_legendre_segments(&breaks, GaussOrder::Five, |z| {
        for (slot, p) in buf.iter_mut().zip(profiles) {
            *slot = p.eval_unchecked(z);
        }
        integrand(&buf)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Profile1D::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Profile1D::new(vec![0.0], vec![1.0]).is_err());
        assert!(Profile1D::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Profile1D::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn sample_points_reproduced_exactly() {
        let p = Profile1D::new(vec![0.0, 0.1, 0.35, 1.0], vec![1.0, -2.5, 3.25, 0.125]).unwrap();
        for (z, v) in p.coordinates().iter().zip(p.values()) {
            assert_eq!(p.eval(*z).unwrap(), *v);
        }
        assert!(p.eval(1.0 + 1e-12).is_err());
        assert!(p.eval(-1e-12).is_err());
    }

    #[test]
    fn product_integral_of_two_ramps() {
        let a = Profile1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let b = Profile1D::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let v = integrate_on_merged_grid(&[&a, &b], 0.0, 1.0, |x| x[0] * x[1]).unwrap();
        // ∫₀^½ 2z² dz + ∫_½^1 z·2(1−z) dz = 1/12 + 1/6
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coverage_is_enforced() {
        let a = Profile1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(integrate_on_merged_grid(&[&a], -0.1, 1.0, |x| x[0]).is_err());
    }

    #[test]
    fn linear_combination_is_exact_on_union_grid() {
        let a = Profile1D::new(vec![0.0, 0.3, 1.0], vec![1.0, 2.0, 0.0]).unwrap();
        let b = Profile1D::new(vec![0.0, 0.7, 1.0], vec![0.0, 1.0, 5.0]).unwrap();
        let c = Profile1D::linear_combination(&[(2.0, &a), (-1.0, &b)]).unwrap();
        for z in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
            let expected = 2.0 * a.eval(z).unwrap() - b.eval(z).unwrap();
            assert!((c.eval(z).unwrap() - expected).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn refinement_invariance(vals in proptest::collection::vec(-5.0f64..5.0, 6), w in 0.05f64..0.95) {
            let z: Vec<f64> = (0..6).map(|i| i as f64 * 0.2).collect();
            let p = Profile1D::new(z.clone(), vals).unwrap();
            let q = Profile1D::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
            let coarse = integrate_on_merged_grid(&[&p, &q], 0.0, 1.0, |x| x[0] * x[1]).unwrap();
            let mut fine_z = z.clone();
            fine_z.push(w);
            fine_z.sort_by(f64::total_cmp);
            fine_z.dedup();
            let refined = Profile1D::from_fn(&fine_z, |zz| p.eval(zz).unwrap()).unwrap();
            let fine = integrate_on_merged_grid(&[&refined, &q], 0.0, 1.0, |x| x[0] * x[1]).unwrap();
            prop_assert!((coarse - fine).abs() < 1e-12);
        }
    }
}
