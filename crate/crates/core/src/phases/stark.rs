use serde::{Deserialize, Serialize};

use super::check_velocity;
use crate::geometry::{eta_profile, CapacitorGeometry, TrajectoryDistribution};
use crate::hyperfine::AtomModel;
use crate::{Error, Result};

/// 2πε₀α/ħ, so that the phase of one arm is this constant times ∫E²dz / v.
pub fn stark_constant(atom: &AtomModel) -> f64 {
    2.0 * std::f64::consts::PI * atom.epsilon0 * atom.polarizability_alpha / atom.hbar
}

/// Phase of a single ideal capacitor arm, `(2πε₀α/ħv) V² L / h²`.
pub fn stark_phase_arm(atom: &AtomModel, voltage: f64, h: f64, length: f64, v: f64) -> Result<f64> {
    check_velocity(v)?;
    if !(h > 0.0) || !(length > 0.0) {
        return Err(Error::Domain(format!(
            "capacitor spacing ({h}) and length ({length}) must be > 0"
        )));
    }
    Ok(stark_constant(atom) * voltage * voltage * length / (h * h * v))
}

/// Lower-arm minus upper-arm Stark phase of two ideal capacitors.
#[allow(clippy::too_many_arguments)]
pub fn stark_phase_ideal(
    atom: &AtomModel,
    v_l: f64,
    h_l: f64,
    l_l: f64,
    v_u: f64,
    h_u: f64,
    l_u: f64,
    v: f64,
) -> Result<f64> {
    Ok(stark_phase_arm(atom, v_l, h_l, l_l, v)? - stark_phase_arm(atom, v_u, h_u, l_u, v)?)
}

/// Upper voltage that cancels the ideal Stark phase at every velocity.
pub fn tuned_upper_voltage(v_l: f64, h_l: f64, l_l: f64, h_u: f64, l_u: f64) -> Result<f64> {
    if !(h_l > 0.0 && h_u > 0.0 && l_l > 0.0 && l_u > 0.0) {
        return Err(Error::Domain("capacitor dimensions must be > 0".into()));
    }
    Ok(v_l * (l_l * h_u * h_u / (l_u * h_l * h_l)).sqrt())
}

/// Stark phase of a trajectory at height y through two defective capacitors.
pub fn stark_phase_profile(
    atom: &AtomModel,
    cap_l: &CapacitorGeometry,
    cap_u: &CapacitorGeometry,
    v: f64,
    y: f64,
) -> Result<f64> {
    check_velocity(v)?;
    let k = stark_constant(atom) / v;
    Ok(k * (cap_l.field_squared_integral(y)? - cap_u.field_squared_integral(y)?))
}

/// First-order split of the trajectory-dependent Stark phase into a mean part
/// and zero-mean dispersions from spacing defects and contact potentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarkDecomposition {
    /// Trajectory heights at which the dispersions are sampled.
    pub y: Vec<f64>,
    pub phi0_lower: f64,
    pub phi0_upper: f64,
    /// Mean of the two arm phases, used for the first-order defect terms.
    pub phi0: f64,
    /// φ₀ₗ − φ₀ᵤ.
    pub mean_geometric: f64,
    /// ⟨φ_Sc⟩, the mean contact-potential phase.
    pub mean_contact: f64,
    pub delta_geometric: Vec<f64>,
    pub delta_contact: Vec<f64>,
    /// |φ₀ₗ/φ₀ᵤ − 1|.
    pub tuning_mismatch: f64,
    /// Set when the mismatch reaches 1e−3, where sharing φ₀ between the arms
    /// is no longer a good first-order approximation.
    pub tuning_warning: bool,
}

impl StarkDecomposition {
    pub fn mean(&self) -> f64 {
        self.mean_geometric + self.mean_contact
    }

    /// Reassembled φ_S(y) at every sample.
    pub fn total(&self) -> Vec<f64> {
        self.delta_geometric
            .iter()
            .zip(&self.delta_contact)
            .map(|(g, c)| self.mean() + g + c)
            .collect()
    }
}

/// Tuning mismatch above which [`StarkDecomposition::tuning_warning`] is set.
pub const TUNING_TOLERANCE: f64 = 1e-3;

pub fn stark_defect_decomposition(
    atom: &AtomModel,
    cap_l: &CapacitorGeometry,
    cap_u: &CapacitorGeometry,
    p: &TrajectoryDistribution,
    v: f64,
) -> Result<StarkDecomposition> {
    check_velocity(v)?;
    let k = stark_constant(atom) / v;
    let ratio_mean = |cap: &CapacitorGeometry| -> Result<f64> {
        let r: Vec<f64> = p
            .y()
            .iter()
            .map(|&y| cap.length_over_spacing_squared(y))
            .collect::<Result<_>>()?;
        p.average(&r)
    };
    let phi0_lower = k * cap_l.voltage * cap_l.voltage * ratio_mean(cap_l)?;
    let phi0_upper = k * cap_u.voltage * cap_u.voltage * ratio_mean(cap_u)?;
    let phi0 = 0.5 * (phi0_lower + phi0_upper);
    let voltage = 0.5 * (cap_l.voltage + cap_u.voltage);
    if voltage == 0.0 {
        return Err(Error::Domain(
            "first-order defect expansion needs a nonzero mean voltage".into(),
        ));
    }

    let eta_l = eta_profile(cap_l, p)?;
    let eta_u = eta_profile(cap_u, p)?;
    let vc_diff: Vec<f64> = p
        .y()
        .iter()
        .map(|&y| Ok(cap_l.mean_contact_at(y)? - cap_u.mean_contact_at(y)?))
        .collect::<Result<_>>()?;
    let mean_contact = 2.0 * phi0 * p.average(&vc_diff)? / voltage;
    let delta_geometric = eta_l
        .iter()
        .zip(&eta_u)
        .map(|(l, u)| phi0 * (l - u))
        .collect();
    let delta_contact = vc_diff
        .iter()
        .map(|d| 2.0 * phi0 * d / voltage - mean_contact)
        .collect();
    let tuning_mismatch = if phi0_upper != 0.0 {
        (phi0_lower / phi0_upper - 1.0).abs()
    } else {
        f64::INFINITY
    };
    Ok(StarkDecomposition {
        y: p.y().to_vec(),
        phi0_lower,
        phi0_upper,
        phi0,
        mean_geometric: phi0_lower - phi0_upper,
        mean_contact,
        delta_geometric,
        delta_contact,
        tuning_mismatch,
        tuning_warning: tuning_mismatch >= TUNING_TOLERANCE,
    })
}
