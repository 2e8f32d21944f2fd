//! Velocity-independent line-integral phases.
//!
//! With E along x on each arm, B along ±ŷ and the path along ẑ:
//! - Aharonov-Casher: `−(1/ħc²)∮(E×μ)·dr = −(p/ħc²)[∫_l E μ dz − ∫_u E μ dz]`
//! - He-McKellar-Wilkens: `(1/ħ)∮(B×d)·dr = −(4πε₀α p/ħ)[∫_l E B dz − ∫_u E B dz]`
//!
//! where p = ±1 is the polarity of B and μ is the sublevel moment along B.

use crate::geometry::{integrate_on_merged_grid, FieldAssembly, Profile1D};
use crate::hyperfine::{magnetic_moment, AtomModel, Sublevel};
use crate::{Error, Result};

fn arm_integral(
    electric: &Profile1D,
    modulus: &Profile1D,
    f: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let (lo, hi) = electric.support();
    integrate_on_merged_grid(&[electric, modulus], lo, hi, |v| f(v[0], v[1]))
}

fn check_field_range(atom: &AtomModel, modulus: &Profile1D) -> Result<()> {
    let bmax = modulus.max_abs();
    if atom.reduced_field(bmax) >= 1.0 {
        return Err(Error::Domain(format!(
            "field {bmax} T gives X ≥ 1 along the path"
        )));
    }
    if !(modulus.min_value() > 0.0) {
        return Err(Error::Domain(
            "field direction undefined where B = 0".into(),
        ));
    }
    Ok(())
}

pub fn aharonov_casher_phase(atom: &AtomModel, s: Sublevel, fields: &FieldAssembly) -> Result<f64> {
    let modulus = fields.magnetic.modulus();
    check_field_range(atom, modulus)?;
    let moment = |e: f64, b: f64| e * magnetic_moment(atom, s, b).unwrap_or(f64::NAN);
    let lower = arm_integral(&fields.electric_lower, modulus, moment)?;
    let upper = arm_integral(&fields.electric_upper, modulus, moment)?;
    let phi = -fields.b_polarity / (atom.hbar * atom.c * atom.c) * (lower - upper);
    if !phi.is_finite() {
        return Err(Error::Numerical("non-finite Aharonov-Casher phase".into()));
    }
    Ok(phi)
}

/// Same for every sublevel.
pub fn hmw_phase(atom: &AtomModel, fields: &FieldAssembly) -> Result<f64> {
    let modulus = fields.magnetic.modulus();
    let product = |e: f64, b: f64| e * b;
    let lower = arm_integral(&fields.electric_lower, modulus, product)?;
    let upper = arm_integral(&fields.electric_upper, modulus, product)?;
    let kappa = 4.0 * std::f64::consts::PI * atom.epsilon0 * atom.polarizability_alpha;
    Ok(-kappa * fields.b_polarity / atom.hbar * (lower - upper))
}

/// `qΦ/ħ`.
pub fn aharonov_bohm_phase(atom: &AtomModel, charge: f64, flux: f64) -> f64 {
    charge * flux / atom.hbar
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ELEMENTARY_CHARGE, PLANCK};
    use crate::geometry::{defaults, MagneticFieldProfile};

    fn atom() -> AtomModel {
        AtomModel::li7()
    }

    fn sub(f: u8, m: i8) -> Sublevel {
        Sublevel::new(f, m).unwrap()
    }

    fn zero_e(fields: &FieldAssembly) -> FieldAssembly {
        FieldAssembly {
            electric_lower: fields.electric_lower.scaled(0.0),
            electric_upper: fields.electric_upper.scaled(0.0),
            ..fields.clone()
        }
    }

    #[test]
    fn no_electric_field_no_phase() {
        let f = zero_e(&defaults::field_assembly());
        for s in Sublevel::ALL {
            assert_eq!(aharonov_casher_phase(&atom(), s, &f).unwrap(), 0.0);
        }
        assert_eq!(hmw_phase(&atom(), &f).unwrap(), 0.0);
    }

    #[test]
    fn default_magnitudes() {
        let a = atom();
        let f = defaults::field_assembly();
        let ac = aharonov_casher_phase(&a, sub(2, 2), &f).unwrap();
        assert!((ac.abs() - 0.070).abs() <= 0.2 * 0.070, "{ac}");
        let hmw = hmw_phase(&a, &f).unwrap();
        assert!((hmw.abs() - 0.027).abs() <= 0.15 * 0.027, "{hmw}");
    }

    #[test]
    fn hmw_is_odd_in_b_and_e() {
        let a = atom();
        let f = defaults::field_assembly();
        let p = hmw_phase(&a, &f).unwrap();
        assert_eq!(hmw_phase(&a, &f.with_reversed_b()).unwrap(), -p);
        let flipped = FieldAssembly {
            electric_lower: f.electric_lower.scaled(-1.0),
            electric_upper: f.electric_upper.scaled(-1.0),
            ..f.clone()
        };
        assert_eq!(hmw_phase(&a, &flipped).unwrap(), -p);
    }

    #[test]
    fn ac_antisymmetric_in_m_at_vanishing_field() {
        let a = atom();
        let mut f = defaults::field_assembly();
        f.magnetic = MagneticFieldProfile::uniform(0.535, 0.615, 1e-12, 0.0).unwrap();
        let scale = aharonov_casher_phase(&a, Sublevel::new(2, 2).unwrap(), &f)
            .unwrap()
            .abs();
        for s in Sublevel::ALL {
            let mirror = Sublevel::new(s.f(), -s.m()).unwrap();
            let p = aharonov_casher_phase(&a, s, &f).unwrap();
            let q = aharonov_casher_phase(&a, mirror, &f).unwrap();
            assert!((p + q).abs() <= 1e-9 * scale, "{s}: {p} {q}");
        }
    }

    #[test]
    fn zero_field_direction_is_an_error() {
        let a = atom();
        let mut f = defaults::field_assembly();
        let b = Profile1D::new(vec![0.535, 0.575, 0.615], vec![1e-3, 1e-3, 1e-3]).unwrap();
        f.magnetic =
            MagneticFieldProfile::new(b, Profile1D::constant(0.535, 0.615, 0.0).unwrap()).unwrap();
        assert!(aharonov_casher_phase(&a, sub(2, 1), &f).is_ok());
        assert!(
            check_field_range(&a, &Profile1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap())
                .is_err()
        );
    }

    #[test]
    fn aharonov_bohm_values() {
        let a = atom();
        assert_eq!(aharonov_bohm_phase(&a, ELEMENTARY_CHARGE, 0.0), 0.0);
        let q = aharonov_bohm_phase(&a, ELEMENTARY_CHARGE, PLANCK / ELEMENTARY_CHARGE);
        assert!((q - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let r = aharonov_bohm_phase(&a, ELEMENTARY_CHARGE, 1e-15);
        assert!((r - ELEMENTARY_CHARGE * 1e-15 / a.hbar).abs() < 1e-15 * r);
    }
}
