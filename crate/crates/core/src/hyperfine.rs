//! Hyperfine-Zeeman structure of the ⁷Li ground state (I = 3/2, J = 1/2).
//!
//! Energies follow the Breit-Rabi form
//! `E = −A/4 − g_I μ_B m B ± A√(1 + mX + X²)` with `X = −(g_S − g_I) μ_B B / (2A)`,
//! the `+` branch belonging to F = 2 as long as `X < 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{
    ATOMIC_MASS_UNIT, BOHR_MAGNETON, BOHR_RADIUS, ELECTRON_MASS, ELEMENTARY_CHARGE, EPSILON_0,
    HBAR, PLANCK, SPEED_OF_LIGHT,
};
use crate::{Error, Result};

/// Physical constants and species parameters used by every phase formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomModel {
    /// Hyperfine constant A, in joules.
    pub hyperfine_constant_a: f64,
    pub g_s: f64,
    pub g_i: f64,
    /// Static polarizability volume α (m³); the induced dipole is 4πε₀αE.
    pub polarizability_alpha: f64,
    pub mass: f64,
    pub bohr_magneton: f64,
    pub hbar: f64,
    pub epsilon0: f64,
    pub c: f64,
    /// Sagnac phase times velocity, rad·m/s.
    pub sagnac_constant: f64,
}

impl AtomModel {
    /// ⁷Li with A/h = 401.75 MHz, so that the zero-field splitting is 803.5 MHz.
    pub fn li7() -> Self {
        AtomModel {
            hyperfine_constant_a: PLANCK * 401.752_043e6,
            g_s: -2.002_319_304,
            g_i: 1.182_2e-3,
            polarizability_alpha: 24.34e-30,
            mass: 7.016_003_437 * ATOMIC_MASS_UNIT,
            bohr_magneton: BOHR_MAGNETON,
            hbar: HBAR,
            epsilon0: EPSILON_0,
            c: SPEED_OF_LIGHT,
            sagnac_constant: 688.0,
        }
    }

    /// Zero-field hyperfine angular frequency 2A/ħ.
    pub fn hfs_angular_frequency(&self) -> f64 {
        2.0 * self.hyperfine_constant_a / self.hbar
    }

    /// dX/dB in T⁻¹; positive for the default sign convention.
    pub fn x_per_tesla(&self) -> f64 {
        -(self.g_s - self.g_i) * self.bohr_magneton / (2.0 * self.hyperfine_constant_a)
    }

    pub fn reduced_field(&self, b: f64) -> f64 {
        self.x_per_tesla() * b
    }

    /// Checks the positivity invariants of the parameter set.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hyperfine_constant_a", self.hyperfine_constant_a),
            ("polarizability_alpha", self.polarizability_alpha),
            ("mass", self.mass),
            ("bohr_magneton", self.bohr_magneton),
            ("hbar", self.hbar),
            ("epsilon0", self.epsilon0),
            ("c", self.c),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.x_per_tesla() > 0.0) {
            return Err(Error::Domain(
                "g_S − g_I must be negative so that X grows with B".into(),
            ));
        }
        Ok(())
    }

    fn x_checked(&self, b: f64) -> Result<f64> {
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("field modulus must be ≥ 0, got {b}")));
        }
        let x = self.reduced_field(b);
        if x >= 1.0 {
            return Err(Error::Domain(format!(
                "X = {x} ≥ 1: branch assignment to F is not defined"
            )));
        }
        Ok(x)
    }
}

impl Default for AtomModel {
    fn default() -> Self {
        AtomModel::li7()
    }
}

/// One of the eight (F, m_F) ground-state sublevels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Sublevel {
    f: u8,
    m: i8,
}

impl Sublevel {
    /// Canonical order: F = 1 (m = −1, 0, 1), then F = 2 (m = −2 … 2).
    pub const ALL: [Sublevel; 8] = [
        Sublevel { f: 1, m: -1 },
        Sublevel { f: 1, m: 0 },
        Sublevel { f: 1, m: 1 },
        Sublevel { f: 2, m: -2 },
        Sublevel { f: 2, m: -1 },
        Sublevel { f: 2, m: 0 },
        Sublevel { f: 2, m: 1 },
        Sublevel { f: 2, m: 2 },
    ];

    pub fn new(f: u8, m: i8) -> Result<Self> {
        if !(f == 1 || f == 2) || m.unsigned_abs() > f {
            return Err(Error::Domain(format!("no sublevel F={f}, m_F={m}")));
        }
        Ok(Sublevel { f, m })
    }

    pub fn f(self) -> u8 {
        self.f
    }

    pub fn m(self) -> i8 {
        self.m
    }

    pub fn mf(self) -> f64 {
        f64::from(self.m)
    }

    /// Position in [`Sublevel::ALL`].
    pub fn index(self) -> usize {
        match self.f {
            1 => (self.m + 1) as usize,
            _ => (self.m + 5) as usize,
        }
    }

    /// +1 for the upper (F = 2) branch, −1 for F = 1.
    pub fn branch(self) -> f64 {
        if self.f == 2 {
            1.0
        } else {
            -1.0
        }
    }

    /// Column label, e.g. `F2m-2`.
    pub fn label(self) -> String {
        format!("F{}m{}", self.f, self.m)
    }

    pub fn parse_label(label: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("malformed sublevel label `{label}`"));
        let rest = label.strip_prefix('F').ok_or_else(bad)?;
        let (f, m) = rest.split_once('m').ok_or_else(bad)?;
        Sublevel::new(f.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F={}, m_F={}", self.f, self.m)
    }
}

/// Which set of Landé factors multiplies m_F in the linear Zeeman term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandeFactors {
    /// g₁ = (−g_S + 5g_I)/4, g₂ = (g_S + 3g_I)/4.
    #[default]
    Exact,
    /// g₁ = +1/2, g₂ = −1/2.
    Approximate,
}

/// g_F such that the low-field energy is `−g_F μ_B m_F B` (plus a constant).
pub fn lande_g(atom: &AtomModel, f: u8, factors: LandeFactors) -> f64 {
    match (factors, f) {
        (LandeFactors::Exact, 1) => (-atom.g_s + 5.0 * atom.g_i) / 4.0,
        (LandeFactors::Exact, _) => (atom.g_s + 3.0 * atom.g_i) / 4.0,
        (LandeFactors::Approximate, 1) => 0.5,
        (LandeFactors::Approximate, _) => -0.5,
    }
}

/// Exact Breit-Rabi energy in joules.
pub fn breit_rabi_energy(atom: &AtomModel, s: Sublevel, b: f64) -> Result<f64> {
    let x = atom.x_checked(b)?;
    let m = s.mf();
    let a = atom.hyperfine_constant_a;
    Ok(-a / 4.0 - atom.g_i * atom.bohr_magneton * m * b
        + s.branch() * a * (1.0 + m * x + x * x).sqrt())
}

/// Exact ∂E/(A ∂X), obtained by differentiating the Breit-Rabi energy.
pub fn zeeman_slope_exact(atom: &AtomModel, s: Sublevel, x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::Domain(format!("|X| must be < 1, got {x}")));
    }
    let m = s.mf();
    let nuclear = -2.0 * atom.g_i / (atom.g_s - atom.g_i).abs() * m;
    Ok(nuclear + s.branch() * (0.5 * m + x) / (1.0 + m * x + x * x).sqrt())
}

/// Second-order expansion `−g̃_F m_F ± (1 − m_F²/4) X ± (3m_F/4)(m_F²/4 − 1) X²` of ∂E/(A ∂X).
///
/// `g̃_F = 2g_F/|g_S − g_I|` is the Landé factor expressed per unit of X,
/// which is what makes the expansion exact for the stretched F = 2 states.
pub fn zeeman_slope_expansion(atom: &AtomModel, s: Sublevel, x: f64) -> Result<f64> {
    if !(x.abs() < 1.0) {
        return Err(Error::Domain(format!("|X| must be < 1, got {x}")));
    }
    let m = s.mf();
    let g_tilde = 2.0 * lande_g(atom, s.f(), LandeFactors::Exact) / (atom.g_s - atom.g_i).abs();
    Ok(-g_tilde * m
        + s.branch() * ((1.0 - m * m / 4.0) * x + 0.75 * m * (m * m / 4.0 - 1.0) * x * x))
}

/// Field-dependent magnetic moment `∓μ_B (m + 2X) / (2√(1 + mX + X²))` (− for F = 2).
///
/// This is the electron-spin part of −∂E/∂B with `|g_S − g_I|/2` rounded to 1;
/// [`magnetic_moment_exact`] keeps that factor.
pub fn magnetic_moment(atom: &AtomModel, s: Sublevel, b: f64) -> Result<f64> {
    let x = atom.x_checked(b)?;
    let m = s.mf();
    Ok(-s.branch() * atom.bohr_magneton * (m + 2.0 * x) / (2.0 * (1.0 + m * x + x * x).sqrt()))
}

/// −∂E/∂B with the nuclear `g_I μ_B m` term removed.
pub fn magnetic_moment_exact(atom: &AtomModel, s: Sublevel, b: f64) -> Result<f64> {
    Ok(0.5 * (atom.g_s - atom.g_i).abs() * magnetic_moment(atom, s, b)?)
}

/// Detected population unbalance χ for optical pumping of strength β at laser detuning δ_L.
///
/// All arguments are angular frequencies. β = 0 gives 0 by continuity.
pub fn population_unbalance(beta: f64, delta_l: f64, omega_hfs: f64) -> Result<f64> {
    if !(delta_l > 0.0) || !(delta_l + omega_hfs > 0.0) {
        return Err(Error::Domain(format!(
            "detunings must be positive (δ_L = {delta_l}, δ_L + ω_HFS = {})",
            delta_l + omega_hfs
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Domain(format!("β must be ≥ 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    let s1 = (beta / delta_l).sin().powi(4);
    let s2 = (beta / (delta_l + omega_hfs)).sin().powi(4);
    let den = 3.0 * s1 + 5.0 * s2;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((s1 - s2) / den)
}

/// Detected populations of the eight sublevels.
///
/// All F = 1 entries share one value and all F = 2 entries another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SublevelPopulations {
    probabilities: [f64; 8],
    chi: f64,
}

impl SublevelPopulations {
    pub fn from_chi(chi: f64) -> Result<Self> {
        if !(-0.2..=1.0 / 3.0).contains(&chi) {
            return Err(Error::Range(format!("χ = {chi} outside [−1/5, 1/3]")));
        }
        let p1 = (1.0 + 5.0 * chi) / 8.0;
        let p2 = (1.0 - 3.0 * chi) / 8.0;
        let mut probabilities = [0.0; 8];
        for s in Sublevel::ALL {
            probabilities[s.index()] = if s.f() == 1 { p1 } else { p2 };
        }
        Ok(SublevelPopulations { probabilities, chi })
    }

    pub fn balanced() -> Self {
        SublevelPopulations::from_chi(0.0).expect("χ = 0 is in range")
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn get(&self, s: Sublevel) -> f64 {
        self.probabilities[s.index()]
    }

    pub fn as_array(&self) -> &[f64; 8] {
        &self.probabilities
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sublevel, f64)> + '_ {
        Sublevel::ALL.into_iter().map(|s| (s, self.get(s)))
    }
}

/// Shorthand for [`SublevelPopulations::from_chi`].
pub fn populations_from_chi(chi: f64) -> Result<SublevelPopulations> {
    SublevelPopulations::from_chi(chi)
}

/// Order-of-magnitude diamagnetic energy `e² B² Σ⟨x²+y²⟩ / (8 m_e)` for the ground state.
///
/// Σ⟨r²⟩ over the three electrons is taken as 18.35 a₀² and ⟨x²+y²⟩ = (2/3)⟨r²⟩.
/// Kept only to document how small the term is.
pub fn diamagnetic_shift_estimate(b: f64) -> f64 {
    let sum_r2 = 18.35 * BOHR_RADIUS * BOHR_RADIUS;
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * (2.0 / 3.0) * sum_r2 * b * b / (8.0 * ELECTRON_MASS)
}
