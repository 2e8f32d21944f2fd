use serde::{Deserialize, Serialize};

use super::check_velocity;
use crate::geometry::{ArmSeparationProfile, MagneticFieldProfile};
use crate::hyperfine::{lande_g, AtomModel, LandeFactors, Sublevel};
use crate::{Error, Result};

/// Gradient integrals J₁, J₂, J₃ at a reference velocity. Each scales as 1/v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeemanIntegrals {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub reference_velocity: f64,
}

impl ZeemanIntegrals {
    /// The same integrals for atoms moving at `v`.
    pub fn at_velocity(&self, v: f64) -> Result<Self> {
        check_velocity(v)?;
        let k = self.reference_velocity / v;
        Ok(ZeemanIntegrals {
            j1: self.j1 * k,
            j2: self.j2 * k,
            j3: self.j3 * k,
            reference_velocity: v,
        })
    }
}

/// Which hyperfine level carries the `+` sign on the J₂ and J₃ terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchConvention {
    /// `+` on F = 2, as in the Breit-Rabi energy branches.
    Physical,
    /// `+` on F = 1. With this choice the sublevel sum reproduces the
    /// `+iχ[…]` imaginary part of the quadratic-Zeeman closed form.
    #[default]
    Printed,
}

impl BranchConvention {
    pub fn sign(self, s: Sublevel) -> f64 {
        match self {
            BranchConvention::Physical => s.branch(),
            BranchConvention::Printed => -s.branch(),
        }
    }
}

/// J₁ = (μ_B/ħv)∫∂B/∂x δx dz, J₂ = (A k²/2ħv)∫∂(B²)/∂x δx dz and
/// J₃ = (A k³/3ħv)∫∂(B³)/∂x δx dz, with k = dX/dB.
///
/// J₂ and J₃ are the second and third Taylor coefficients of the Breit-Rabi
/// radical, so that the phase polynomial of [`zeeman_phase`] reproduces
/// (E(B_u) − E(B_l))/ħv through third order in X.
pub fn zeeman_integrals(
    field: &MagneticFieldProfile,
    sep: &ArmSeparationProfile,
    atom: &AtomModel,
    v: f64,
) -> Result<ZeemanIntegrals> {
    check_velocity(v)?;
    let bmax = field.modulus().max_abs();
    if !(atom.reduced_field(bmax).abs() < 1.0) {
        return Err(Error::Domain(format!(
            "field {bmax} T gives |X| ≥ 1, outside the expansion's range"
        )));
    }
    let hv = atom.hbar * v;
    let a = atom.hyperfine_constant_a;
    let k = atom.x_per_tesla();
    Ok(ZeemanIntegrals {
        j1: atom.bohr_magneton / hv * field.gradient_moment(1, sep)?,
        j2: a * k * k / (2.0 * hv) * field.gradient_moment(2, sep)?,
        j3: a * k * k * k / (3.0 * hv) * field.gradient_moment(3, sep)?,
        reference_velocity: v,
    })
}

/// The alternative J₃ prefactor `3(g_S − g_I)³μ_B³/(128A²)` (per ħv), kept for comparison.
///
/// It differs from the self-consistent `A k³/3` used in [`zeeman_integrals`]
/// by a factor −9/16.
pub fn printed_j3_prefactor(atom: &AtomModel) -> f64 {
    let s = atom.g_s - atom.g_i;
    let a = atom.hyperfine_constant_a;
    3.0 * s.powi(3) * atom.bohr_magneton.powi(3) / (128.0 * a * a)
}

/// `−g_F m J₁ ± (1 − m²/4) J₂ ± (3m/4)(m²/4 − 1) J₃` with exact Landé factors and
/// the physical branch signs.
pub fn zeeman_phase(atom: &AtomModel, s: Sublevel, j: &ZeemanIntegrals) -> f64 {
    zeeman_phase_with(atom, s, j, LandeFactors::Exact, BranchConvention::Physical)
}

pub fn zeeman_phase_with(
    atom: &AtomModel,
    s: Sublevel,
    j: &ZeemanIntegrals,
    lande: LandeFactors,
    branch: BranchConvention,
) -> f64 {
    let m = s.mf();
    let g = lande_g(atom, s.f(), lande);
    let sign = branch.sign(s);
    -g * m * j.j1
        + sign * (1.0 - m * m / 4.0) * j.j2
        + sign * (0.75 * m) * (m * m / 4.0 - 1.0) * j.j3
}

/// Linear two-coil model `J₁ = A_J1|I − I₀| + A_J1C|I_C − I₀C| + J₀`.
///
/// `j0` is the value at the two kinks, treated as an independent parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoCoilModel {
    pub a_j1: f64,
    pub i0: f64,
    pub a_j1c: f64,
    pub i0c: f64,
    pub j0: f64,
}

impl TwoCoilModel {
    pub fn j1(&self, i: f64, ic: f64) -> f64 {
        self.a_j1 * (i - self.i0).abs() + self.a_j1c * (ic - self.i0c).abs() + self.j0
    }

    /// J₀ that makes J₁ vanish with both currents off.
    pub fn zero_current_offset(&self) -> f64 {
        -self.a_j1 * self.i0.abs() - self.a_j1c * self.i0c.abs()
    }
}

pub fn two_coil_j1(model: &TwoCoilModel, i: f64, ic: f64) -> f64 {
    model.j1(i, ic)
}
