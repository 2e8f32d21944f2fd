use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{velocity_average_terms, BeamModel, ComplexVisibility};
use crate::hyperfine::{AtomModel, LandeFactors, Sublevel, SublevelPopulations};
use crate::phases::{zeeman_phase_with, BranchConvention, ZeemanIntegrals};
use crate::Result;

/// `Σ P_j V_j e^{i⟨φ_j⟩}` over the eight sublevels, with (V_j, ⟨φ_j⟩) per sublevel.
pub fn fresnel_sum(
    pops: &SublevelPopulations,
    per_sublevel: &[(f64, f64); 8],
) -> ComplexVisibility {
    fresnel_sum_weighted(Sublevel::ALL.iter().map(|&s| {
        (
            pops.get(s),
            per_sublevel[s.index()].0,
            per_sublevel[s.index()].1,
        )
    }))
}

/// Phasor sum over arbitrary (weight, visibility, phase) triples.
pub fn fresnel_sum_weighted(terms: impl IntoIterator<Item = (f64, f64, f64)>) -> ComplexVisibility {
    let mut acc = Complex64::new(0.0, 0.0);
    for (p, v, phi) in terms {
        acc += Complex64::from_polar(p * v, phi);
    }
    acc.into()
}

/// `Σ P_j c_j` for already averaged per-sublevel complex visibilities.
pub fn fresnel_sum_complex(
    pops: &SublevelPopulations,
    per_sublevel: &[ComplexVisibility; 8],
) -> ComplexVisibility {
    let mut acc = Complex64::new(0.0, 0.0);
    for s in Sublevel::ALL {
        acc += pops.get(s) * per_sublevel[s.index()].as_complex();
    }
    acc.into()
}

/// Sublevel sum for Zeeman phases built from `j`, optionally velocity averaged
/// with every J ∝ 1/v around the beam's mean velocity.
pub fn sublevel_zeeman_visibility(
    atom: &AtomModel,
    j: &ZeemanIntegrals,
    pops: &SublevelPopulations,
    lande: LandeFactors,
    branch: BranchConvention,
    beam: Option<&BeamModel>,
) -> Result<ComplexVisibility> {
    let j = match beam {
        Some(b) => j.at_velocity(b.v_m)?,
        None => *j,
    };
    let mut per = [ComplexVisibility::ONE; 8];
    for s in Sublevel::ALL {
        let phi = zeeman_phase_with(atom, s, &j, lande, branch);
        per[s.index()] = match beam {
            Some(b) => velocity_average_terms(b, &[(1, phi)])?,
            None => ComplexVisibility::from_polar(1.0, phi),
        };
    }
    Ok(fresnel_sum_complex(pops, &per))
}

/// Visibility in the linear Zeeman regime, φ_j = −g_F m J₁, with J₁ given at v_m.
pub fn linear_zeeman_visibility(
    atom: &AtomModel,
    j1: f64,
    chi: f64,
    beam: &BeamModel,
    with_velocity_average: bool,
    lande: LandeFactors,
) -> Result<ComplexVisibility> {
    let pops = SublevelPopulations::from_chi(chi)?;
    let j = ZeemanIntegrals {
        j1,
        j2: 0.0,
        j3: 0.0,
        reference_velocity: beam.v_m,
    };
    sublevel_zeeman_visibility(
        atom,
        &j,
        &pops,
        lande,
        BranchConvention::Printed,
        with_velocity_average.then_some(beam),
    )
}

/// Direct sublevel sum and the closed form, side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticZeeman {
    /// Authoritative value: the eight-term phasor sum.
    pub direct: ComplexVisibility,
    /// Closed-form cross-check.
    pub closed_form: ComplexVisibility,
}

/// Quadratic-Zeeman visibility at a single velocity, g_F = ±1/2 and J₃ = 0.
pub fn quadratic_zeeman_visibility(
    atom: &AtomModel,
    j1: f64,
    j2: f64,
    chi: f64,
    branch: BranchConvention,
) -> Result<QuadraticZeeman> {
    let pops = SublevelPopulations::from_chi(chi)?;
    let j = ZeemanIntegrals {
        j1,
        j2,
        j3: 0.0,
        reference_velocity: 1.0,
    };
    let direct =
        sublevel_zeeman_visibility(atom, &j, &pops, LandeFactors::Approximate, branch, None)?;
    Ok(QuadraticZeeman {
        direct,
        closed_form: quadratic_zeeman_closed_form(j1, j2, chi),
    })
}

/// `(1/4)[(1+χ)(cos J₂ + 2cos(3J₂/4)cos(J₁/2)) + (1−3χ)cos J₁] + iχ[sin J₂ + 2cos(J₁/2)sin(3J₂/4)]`.
pub fn quadratic_zeeman_closed_form(j1: f64, j2: f64, chi: f64) -> ComplexVisibility {
    let c = (0.5 * j1).cos();
    let re = 0.25
        * ((1.0 + chi) * (j2.cos() + 2.0 * (0.75 * j2).cos() * c) + (1.0 - 3.0 * chi) * j1.cos());
    let im = chi * (j2.sin() + 2.0 * c * (0.75 * j2).sin());
    ComplexVisibility::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn atom() -> AtomModel {
        AtomModel::li7()
    }

    fn beam(chi: f64) -> BeamModel {
        BeamModel::new(1065.0, 8.0, chi).unwrap()
    }

    #[test]
    fn fresnel_equal_phases() {
        let pops = SublevelPopulations::from_chi(0.1).unwrap();
        let v = fresnel_sum(&pops, &[(0.8, 0.4); 8]);
        assert!((v.modulus() - 0.8).abs() < 1e-15);
        assert!((v.phase() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn fresnel_symmetric_pair() {
        let phi = 0.7;
        let v = fresnel_sum_weighted([(0.5, 1.0, phi), (0.5, 1.0, -phi)]);
        assert!((v.modulus() - phi.cos()).abs() < 1e-15);
        assert_eq!(v.phase(), 0.0);
    }

    #[test]
    fn weights_are_products_of_population_and_visibility() {
        let v = fresnel_sum_weighted([(0.5, 1.0, 0.0), (0.5, 0.0, 1.0)]);
        assert!((v.modulus() - 0.5).abs() < 1e-15);
        assert_eq!(v.phase(), 0.0);
    }

    #[test]
    fn revivals() {
        let a = atom();
        let b = beam(0.0);
        for k in [1.0, 2.0] {
            let v = linear_zeeman_visibility(
                &a,
                4.0 * PI * k,
                0.0,
                &b,
                false,
                LandeFactors::Approximate,
            )
            .unwrap();
            assert!((v.modulus() - 1.0).abs() < 1e-12);
            let v = linear_zeeman_visibility(&a, 4.0 * PI * k, 0.0, &b, false, LandeFactors::Exact)
                .unwrap();
            assert!(v.modulus() >= 0.999, "{}", v.modulus());
        }
        let averaged =
            linear_zeeman_visibility(&a, 4.0 * PI, 0.0, &b, true, LandeFactors::Exact).unwrap();
        assert!(averaged.modulus() < 1.0 - 1e-3);
        let zero = linear_zeeman_visibility(&a, 0.0, 0.0, &b, true, LandeFactors::Exact).unwrap();
        assert!((zero.re - 1.0).abs() < 1e-10 && zero.im.abs() < 1e-12);
    }

    #[test]
    fn linear_regime_is_nearly_real() {
        let a = atom();
        let b = beam(0.0);
        for k in 0..=40 {
            let j1 = 8.0 * PI * k as f64 / 40.0;
            let v = linear_zeeman_visibility(&a, j1, 0.0, &b, true, LandeFactors::Exact).unwrap();
            assert!(v.im.abs() <= 5e-3, "{j1}: {}", v.im);
        }
    }

    #[test]
    fn chi_sensitivity_is_largest_near_visibility_minima() {
        let a = atom();
        let spread = |j1: f64| {
            let p = linear_zeeman_visibility(&a, j1, 0.1, &beam(0.1), true, LandeFactors::Exact)
                .unwrap();
            let m = linear_zeeman_visibility(&a, j1, -0.1, &beam(-0.1), true, LandeFactors::Exact)
                .unwrap();
            (p.as_complex() - m.as_complex()).norm()
        };
        let v0 = |j1: f64| {
            linear_zeeman_visibility(&a, j1, 0.0, &beam(0.0), true, LandeFactors::Exact)
                .unwrap()
                .modulus()
        };
        // Visibility dips between revivals (J₁ ≈ 2π) and recovers near 4π.
        assert!(v0(2.0 * PI) < 0.3);
        assert!(v0(4.0 * PI) > 0.6);
        let rel_low = spread(2.0 * PI) / v0(2.0 * PI);
        let rel_high = spread(0.5) / v0(0.5);
        assert!(rel_low > 5.0 * rel_high);
    }

    #[test]
    fn closed_form_reduces_to_linear_form() {
        for &(j1, chi) in &[(0.3, 0.0), (2.0, 0.1), (7.0, -0.15)] {
            let q = quadratic_zeeman_closed_form(j1, 0.0, chi);
            let lin = 0.25
                * ((1.0 + chi) * (1.0 + 2.0 * (0.5 * j1).cos()) + (1.0 - 3.0 * chi) * j1.cos());
            assert!((q.re - lin).abs() < 1e-15);
            assert_eq!(q.im, 0.0);
        }
        let q = quadratic_zeeman_closed_form(1.2, 0.7, 0.0);
        assert_eq!(q.im, 0.0);
    }

    #[test]
    fn direct_sum_matches_closed_form() {
        let a = atom();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let j1 = rng.gen_range(-10.0..10.0);
            let j2 = rng.gen_range(-2.0..2.0);
            let chi = rng.gen_range(-0.2..1.0 / 3.0);
            let q =
                quadratic_zeeman_visibility(&a, j1, j2, chi, BranchConvention::Printed).unwrap();
            assert!((q.direct.re - q.closed_form.re).abs() < 1e-12);
            assert!((q.direct.im - q.closed_form.im).abs() < 1e-12);
            let p =
                quadratic_zeeman_visibility(&a, j1, j2, chi, BranchConvention::Physical).unwrap();
            assert!((p.direct.re - q.closed_form.re).abs() < 1e-12);
            assert!((p.direct.im + q.closed_form.im).abs() < 1e-12);
        }
    }

    #[test]
    fn modulus_bounded_by_one() {
        let a = atom();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let j = ZeemanIntegrals {
                j1: rng.gen_range(-30.0..30.0),
                j2: rng.gen_range(-3.0..3.0),
                j3: rng.gen_range(-1.0..1.0),
                reference_velocity: 1065.0,
            };
            let pops = SublevelPopulations::from_chi(rng.gen_range(-0.2..0.33)).unwrap();
            let v = sublevel_zeeman_visibility(
                &a,
                &j,
                &pops,
                LandeFactors::Exact,
                BranchConvention::Physical,
                None,
            )
            .unwrap();
            assert!(v.modulus() <= 1.0 + 1e-9);
        }
    }
}
