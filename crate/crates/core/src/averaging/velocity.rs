use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ComplexVisibility;
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

/// Supersonic beam: mean velocity, parallel speed ratio and detected-population unbalance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamModel {
    pub v_m: f64,
    pub s_parallel: f64,
    pub chi: f64,
}

impl BeamModel {
    pub fn new(v_m: f64, s_parallel: f64, chi: f64) -> Result<Self> {
        if !(v_m > 0.0) || !v_m.is_finite() {
            return Err(Error::Domain(format!("v_m must be > 0, got {v_m}")));
        }
        if !(s_parallel > 0.0) || !s_parallel.is_finite() {
            return Err(Error::Domain(format!("S∥ must be > 0, got {s_parallel}")));
        }
        if !(-0.2..=1.0 / 3.0).contains(&chi) {
            return Err(Error::Range(format!("χ = {chi} outside [−1/5, 1/3]")));
        }
        Ok(BeamModel {
            v_m,
            s_parallel,
            chi,
        })
    }
}

/// `P(v) = (S/(v_m√π)) exp[−((v − v_m)S/v_m)²]`.
pub fn velocity_pdf(beam: &BeamModel, v: f64) -> f64 {
    let s = beam.s_parallel;
    let u = (v - beam.v_m) * s / beam.v_m;
    s / (beam.v_m * std::f64::consts::PI.sqrt()) * (-u * u).exp()
}

/// Integration range `[v_m(1 − 8/S), v_m(1 + 8/S)]`, floored at v_m/20 to keep v > 0.
pub fn velocity_support(beam: &BeamModel) -> (f64, f64) {
    let w = 8.0 / beam.s_parallel;
    let lo = (beam.v_m * (1.0 - w)).max(beam.v_m / 20.0);
    (lo, beam.v_m * (1.0 + w))
}

const VELOCITY_TOLERANCE: f64 = 1e-11;

/// `⟨exp(i Σₖ φₖ (v_m/v)^nₖ)⟩` under P(v), for phases φₖ given at v = v_m.
///
/// The average is normalized by ∫P over the integration range.
pub fn velocity_average_terms(beam: &BeamModel, terms: &[(u32, f64)]) -> Result<ComplexVisibility> {
    let (lo, hi) = velocity_support(beam);
    let v_m = beam.v_m;
    let phase_at = |v: f64| -> f64 {
        terms
            .iter()
            .map(|&(n, phi)| {
                if n == 0 {
                    phi
                } else {
                    phi * (v_m / v).powi(n as i32)
                }
            })
            .sum()
    };
    let span: f64 = terms
        .iter()
        .filter(|(n, _)| *n > 0)
        .map(|&(n, phi)| phi.abs() * ((v_m / lo).powi(n as i32) - (v_m / hi).powi(n as i32)))
        .sum();
    if !span.is_finite() {
        return Err(Error::Numerical(
            "non-finite phase span in velocity average".into(),
        ));
    }
    let panels = (16.0 + 2.0 * span).min(200_000.0) as usize;
    let num: Complex64 = adaptive_simpson(
        |v| Complex64::from_polar(velocity_pdf(beam, v), phase_at(v)),
        lo,
        hi,
        VELOCITY_TOLERANCE,
        panels,
    )?;
    let norm: f64 = adaptive_simpson(|v| velocity_pdf(beam, v), lo, hi, VELOCITY_TOLERANCE, 16)?;
    let c = num / norm;
    if !(c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::Numerical("non-finite velocity average".into()));
    }
    Ok(c.into())
}

/// `e^{iφ_offset} ⟨exp(i φ (v_m/v)ⁿ)⟩`.
pub fn velocity_average(
    beam: &BeamModel,
    n: u32,
    phi_at_vm: f64,
    phi_offset: f64,
) -> Result<ComplexVisibility> {
    if n > 2 {
        return Err(Error::Domain(format!("velocity power {n} not in 0..=2")));
    }
    velocity_average_terms(beam, &[(0, phi_offset), (n, phi_at_vm)])
}

/// Closed form obtained by expanding `(v_m/v)ⁿ` to second order in
/// u = (v − v_m)/v_m and averaging over a Gaussian u of variance 1/(2S²).
pub fn velocity_average_analytic(beam: &BeamModel, n: u32, phi_at_vm: f64) -> ComplexVisibility {
    let nf = f64::from(n);
    let sigma2 = 0.5 / (beam.s_parallel * beam.s_parallel);
    let b = -nf * phi_at_vm;
    let c = 0.5 * nf * (nf + 1.0) * phi_at_vm;
    let d = Complex64::new(1.0, -2.0 * c * sigma2);
    let i = Complex64::i();
    let value = (i * phi_at_vm).exp() / d.sqrt() * (-(b * b * sigma2) / (2.0 * d)).exp();
    value.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::oracles;

    fn beam() -> BeamModel {
        BeamModel::new(1065.0, 8.0, 0.0).unwrap()
    }

    #[test]
    fn pdf_peak_and_normalization() {
        let b = beam();
        let peak = velocity_pdf(&b, b.v_m);
        assert_eq!(peak, 8.0 / (1065.0 * std::f64::consts::PI.sqrt()));
        let lo = b.v_m * (1.0 - 6.0 / 8.0);
        let hi = b.v_m * (1.0 + 6.0 / 8.0);
        let total: f64 = adaptive_simpson(|v| velocity_pdf(&b, v), lo, hi, 1e-13, 64).unwrap();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fwhm_ratio() {
        let b = beam();
        // Half maximum where ((v − v_m)S/v_m)² = ln 2.
        let half = b.v_m * (1.0 + 2f64.ln().sqrt() / b.s_parallel);
        let r = velocity_pdf(&b, half) / velocity_pdf(&b, b.v_m);
        assert!((r - 0.5).abs() < 1e-14);
        let fwhm = 2.0 * 2f64.ln().sqrt() / b.s_parallel;
        assert!((fwhm - 0.208).abs() < 1e-3);
    }

    #[test]
    fn trivial_limits() {
        let b = beam();
        let v = velocity_average(&b, 1, 0.0, 0.0).unwrap();
        assert!((v.re - 1.0).abs() < 1e-10 && v.im.abs() < 1e-12);
        let v = velocity_average(&b, 0, 1.3, 0.0).unwrap();
        assert!((v.modulus() - 1.0).abs() < 1e-10);
        assert!((v.phase() - 1.3).abs() < 1e-10);
        assert!(velocity_average(&b, 3, 1.0, 0.0).is_err());
    }

    #[test]
    fn strong_dispersion_against_oracle() {
        let b = beam();
        let v = velocity_average(&b, 1, 8.0, 0.0).unwrap();
        let o = oracles::velocity_average_fixed_grid(&b, 1, 8.0, 20_000);
        assert!((v.as_complex() - o).norm() < 1e-9);
        assert!(v.modulus() < 0.8);
        // Phase is pushed above φ by a term of order φ/S².
        let shift = crate::averaging::wrap_phase(v.phase() - 8.0);
        assert!(shift > 0.0 && shift < 3.0 * 8.0 / 64.0, "{shift}");
    }

    #[test]
    fn modulus_decreases_with_phase() {
        let b = beam();
        let mut last = 1.0 + 1e-12;
        for k in 1..=16 {
            let m = velocity_average(&b, 1, 0.5 * k as f64, 0.0)
                .unwrap()
                .modulus();
            assert!(m < last, "{k}");
            last = m;
        }
    }

    #[test]
    fn analytic_expansion_small_phase() {
        let b = beam();
        for phi in [0.25, 0.5, 1.0] {
            let q = velocity_average(&b, 1, phi, 0.0).unwrap();
            let a = velocity_average_analytic(&b, 1, phi);
            assert!((q.modulus() - a.modulus()).abs() < 1e-3);
            assert!(crate::averaging::wrap_phase(q.phase() - a.phase()).abs() < 1e-3);
        }
    }
}
