//! Longitudinal field maps, arm separation, capacitor defects and trajectory weights.
//!
//! The beam travels along z; x is the transverse direction in the plane of the
//! interferometer (the arms are separated along x) and y is the vertical
//! coordinate that labels atomic trajectories through the capacitors.

mod capacitor;
mod profile;

pub use capacitor::{eta_profile, Arm, CapacitorGeometry};
pub use profile::{integrate_on_merged_grid, Profile1D};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fringe-field corrected capacitor length `2a − 2h/π`.
pub fn effective_length(half_length_a: f64, spacing_h: f64) -> Result<f64> {
    if !(spacing_h >= 0.0) || !half_length_a.is_finite() || !spacing_h.is_finite() {
        return Err(Error::Domain(format!(
            "invalid capacitor dimensions a = {half_length_a}, h = {spacing_h}"
        )));
    }
    let l = 2.0 * half_length_a - 2.0 * spacing_h / std::f64::consts::PI;
    if !(l > 0.0) {
        return Err(Error::Domain(format!(
            "effective length {l} ≤ 0 (need a > h/π)"
        )));
    }
    Ok(l)
}

/// Distance δx(z) between the two arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSeparationProfile {
    profile: Profile1D,
}

impl ArmSeparationProfile {
    pub fn new(profile: Profile1D) -> Result<Self> {
        if profile.min_value() < 0.0 {
            return Err(Error::InvalidProfile("arm separation must be ≥ 0".into()));
        }
        let v = profile.values();
        if v[0] != 0.0 || v[v.len() - 1] != 0.0 {
            return Err(Error::InvalidProfile(
                "arm separation must vanish at both ends".into(),
            ));
        }
        Ok(ArmSeparationProfile { profile })
    }

    /// Rises linearly from 0 at z = 0 to `peak` at `apex_z`, back to 0 at `total_length`.
    pub fn triangle(total_length: f64, apex_z: f64, peak: f64) -> Result<Self> {
        if !(apex_z > 0.0 && apex_z < total_length) || !(peak > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "triangle needs 0 < apex ({apex_z}) < length ({total_length}) and peak > 0"
            )));
        }
        ArmSeparationProfile::new(Profile1D::new(
            vec![0.0, apex_z, total_length],
            vec![0.0, peak, 0.0],
        )?)
    }

    pub fn profile(&self) -> &Profile1D {
        &self.profile
    }

    pub fn peak(&self) -> f64 {
        self.profile.max_abs()
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        self.profile.eval(z)
    }

    /// Same shape with every separation multiplied by `k ≥ 0`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k >= 0.0) {
            return Err(Error::Domain(format!("separation scale {k} < 0")));
        }
        Ok(ArmSeparationProfile {
            profile: self.profile.scaled(k),
        })
    }
}

/// Field modulus B(z) and its transverse gradient ∂B/∂x(z) on the mean trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagneticFieldProfile {
    modulus: Profile1D,
    gradient: Profile1D,
    gradient_b2: Option<Profile1D>,
    gradient_b3: Option<Profile1D>,
    pub coil: Option<String>,
}

impl MagneticFieldProfile {
    pub fn new(modulus: Profile1D, gradient: Profile1D) -> Result<Self> {
        if modulus.support() != gradient.support() {
            return Err(Error::MismatchedSupport(
                "field modulus and gradient profiles must share their support".into(),
            ));
        }
        if !(modulus.min_value() > 0.0) {
            return Err(Error::InvalidProfile(
                "field modulus must stay > 0 on its support".into(),
            ));
        }
        Ok(MagneticFieldProfile {
            modulus,
            gradient,
            gradient_b2: None,
            gradient_b3: None,
            coil: None,
        })
    }

    /// Supplies measured ∂(B²)/∂x and ∂(B³)/∂x instead of the chain-rule values.
    pub fn with_power_gradients(
        mut self,
        gradient_b2: Option<Profile1D>,
        gradient_b3: Option<Profile1D>,
    ) -> Result<Self> {
        for p in gradient_b2.iter().chain(&gradient_b3) {
            if p.support() != self.modulus.support() {
                return Err(Error::MismatchedSupport(
                    "power-gradient profiles must share the modulus support".into(),
                ));
            }
        }
        self.gradient_b2 = gradient_b2;
        self.gradient_b3 = gradient_b3;
        Ok(self)
    }

    pub fn with_coil(mut self, coil: impl Into<String>) -> Self {
        self.coil = Some(coil.into());
        self
    }

    /// Constant B and constant gradient on `[z0, z1]`.
    pub fn uniform(z0: f64, z1: f64, b: f64, gradient: f64) -> Result<Self> {
        MagneticFieldProfile::new(
            Profile1D::constant(z0, z1, b)?,
            Profile1D::constant(z0, z1, gradient)?,
        )
    }

    pub fn modulus(&self) -> &Profile1D {
        &self.modulus
    }

    pub fn gradient(&self) -> &Profile1D {
        &self.gradient
    }

    pub fn support(&self) -> (f64, f64) {
        self.modulus.support()
    }

    /// Multiplies B by `k > 0` (power gradients by kⁿ).
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Domain(format!("field scale {k} must be > 0")));
        }
        Ok(MagneticFieldProfile {
            modulus: self.modulus.scaled(k),
            gradient: self.gradient.scaled(k),
            gradient_b2: self.gradient_b2.as_ref().map(|p| p.scaled(k * k)),
            gradient_b3: self.gradient_b3.as_ref().map(|p| p.scaled(k * k * k)),
            coil: self.coil.clone(),
        })
    }

    /// ∫ ∂(Bⁿ)/∂x · δx dz over the field support, n ∈ {1, 2, 3}.
    ///
    /// Without a measured power-gradient profile the chain rule nB^(n−1)∂B/∂x is used.
    pub fn gradient_moment(&self, n: u32, sep: &ArmSeparationProfile) -> Result<f64> {
        let (lo, hi) = self.support();
        let measured = match n {
            1 => Some(&self.gradient),
            2 => self.gradient_b2.as_ref(),
            3 => self.gradient_b3.as_ref(),
            _ => return Err(Error::Domain(format!("gradient power {n} not in 1..=3"))),
        };
        match measured {
            Some(g) => integrate_on_merged_grid(&[g, sep.profile()], lo, hi, |v| v[0] * v[1]),
            None => {
                let nf = f64::from(n);
                integrate_on_merged_grid(
                    &[&self.modulus, &self.gradient, sep.profile()],
                    lo,
                    hi,
                    |v| nf * v[0].powi(n as i32 - 1) * v[1] * v[2],
                )
            }
        }
    }
}

/// Normalized weight P(y) of atomic trajectories, sampled and linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDistribution {
    y: Vec<f64>,
    density: Vec<f64>,
}

impl TrajectoryDistribution {
    /// Accepts an already normalized density (trapezoid integral 1 within 1e−10).
    pub fn new(y: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let p = Profile1D::new(y, density)?;
        if p.min_value() < 0.0 {
            return Err(Error::InvalidProfile("P(y) must be ≥ 0".into()));
        }
        let norm = p.integral();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidProfile(format!(
                "∫P(y)dy = {norm}, expected 1"
            )));
        }
        let (y, density) = (p.coordinates().to_vec(), p.values().to_vec());
        Ok(TrajectoryDistribution { y, density })
    }

    /// Rescales arbitrary non-negative weights to unit integral.
    pub fn normalized(y: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let p = Profile1D::new(y, weights)?;
        let norm = p.integral();
        if !(norm > 0.0) {
            return Err(Error::InvalidProfile("weights integrate to zero".into()));
        }
        TrajectoryDistribution::new(
            p.coordinates().to_vec(),
            p.scaled(1.0 / norm).values().to_vec(),
        )
    }

    /// Flat density on `[y0, y1]` sampled at `n ≥ 2` points.
    pub fn uniform(y0: f64, y1: f64, n: usize) -> Result<Self> {
        if n < 2 || !(y1 > y0) {
            return Err(Error::InvalidProfile(
                "uniform P(y) needs n ≥ 2 and y1 > y0".into(),
            ));
        }
        let y = (0..n)
            .map(|i| y0 + (y1 - y0) * i as f64 / (n - 1) as f64)
            .collect();
        TrajectoryDistribution::normalized(y, vec![1.0; n])
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn support(&self) -> (f64, f64) {
        (self.y[0], self.y[self.y.len() - 1])
    }

    /// Quadrature weights wᵢ with Σwᵢ = 1, so that ⟨f⟩ = Σ wᵢ f(yᵢ).
    pub fn weights(&self) -> Vec<f64> {
        let n = self.y.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (self.y[i + 1] - self.y[i]);
            w[i] += h * self.density[i];
            w[i + 1] += h * self.density[i + 1];
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        w
    }

    /// Weighted average of samples taken at [`TrajectoryDistribution::y`].
    pub fn average(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.y.len() {
            return Err(Error::MismatchedSupport(format!(
                "{} samples for {} trajectory points",
                samples.len(),
                self.y.len()
            )));
        }
        Ok(self.weights().iter().zip(samples).map(|(w, s)| w * s).sum())
    }
}

/// Everything the phase formulas need along the beam: arm electric fields,
/// magnetic profile, arm separation and the sign of B along ŷ.
///
/// The electric profiles hold the x component of the field on each arm and are
/// zero outside their support; the magnetic profile must cover both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldAssembly {
    pub electric_lower: Profile1D,
    pub electric_upper: Profile1D,
    pub magnetic: MagneticFieldProfile,
    pub separation: ArmSeparationProfile,
    /// +1 if B points along +ŷ, −1 otherwise.
    pub b_polarity: f64,
}

impl FieldAssembly {
    pub fn new(
        electric_lower: Profile1D,
        electric_upper: Profile1D,
        magnetic: MagneticFieldProfile,
        separation: ArmSeparationProfile,
        b_polarity: f64,
    ) -> Result<Self> {
        if b_polarity != 1.0 && b_polarity != -1.0 {
            return Err(Error::Domain(format!(
                "b_polarity must be ±1, got {b_polarity}"
            )));
        }
        let (blo, bhi) = magnetic.support();
        for e in [&electric_lower, &electric_upper] {
            let (lo, hi) = e.support();
            if lo < blo || hi > bhi {
                return Err(Error::MismatchedSupport(format!(
                    "electric profile on [{lo}, {hi}] extends beyond the magnetic profile [{blo}, {bhi}]"
                )));
            }
        }
        let (slo, shi) = separation.profile().support();
        if blo < slo || bhi > shi {
            return Err(Error::MismatchedSupport(
                "magnetic profile extends beyond the arm-separation profile".into(),
            ));
        }
        Ok(FieldAssembly {
            electric_lower,
            electric_upper,
            magnetic,
            separation,
            b_polarity,
        })
    }

    /// Same assembly with B reversed.
    pub fn with_reversed_b(&self) -> Self {
        FieldAssembly {
            b_polarity: -self.b_polarity,
            ..self.clone()
        }
    }
}

/// Illustrative default geometry used by presets and acceptance checks.
pub mod defaults {
    use super::*;

    pub const TOTAL_LENGTH: f64 = 1.21;
    pub const GRATING_Z: f64 = 0.605;
    pub const PEAK_SEPARATION: f64 = 100e-6;
    pub const CAPACITOR_HALF_LENGTH: f64 = 24e-3;
    pub const CAPACITOR_SPACING: f64 = 0.5e-3;
    pub const CAPACITOR_VOLTAGE: f64 = 400.0;
    /// Capacitor centre; the electrodes end just upstream of the second grating.
    pub const CAPACITOR_CENTER: f64 = 0.575;
    pub const FIELD_START: f64 = 0.535;
    pub const FIELD_END: f64 = 0.615;
    pub const FIELD_MODULUS: f64 = 1.4e-2;
    /// ΔB/B ≈ 1e−4 across a 100 μm arm separation.
    pub const FIELD_GRADIENT: f64 = 1.4e-2;

    pub fn separation() -> ArmSeparationProfile {
        ArmSeparationProfile::triangle(TOTAL_LENGTH, GRATING_Z, PEAK_SEPARATION)
            .expect("default triangle is valid")
    }

    pub fn capacitor_length() -> f64 {
        effective_length(CAPACITOR_HALF_LENGTH, CAPACITOR_SPACING).expect("valid")
    }

    /// Rectangle of height `field` on the default capacitor support.
    pub fn electric_rectangle(field: f64) -> Profile1D {
        let half = 0.5 * capacitor_length();
        Profile1D::constant(CAPACITOR_CENTER - half, CAPACITOR_CENTER + half, field).expect("valid")
    }

    pub fn magnetic() -> MagneticFieldProfile {
        MagneticFieldProfile::uniform(FIELD_START, FIELD_END, FIELD_MODULUS, FIELD_GRADIENT)
            .expect("valid")
    }

    /// Maximal configuration: 0.8 MV/m of opposite sign on the two arms and 14 mT.
    pub fn field_assembly() -> FieldAssembly {
        let e = CAPACITOR_VOLTAGE / CAPACITOR_SPACING;
        FieldAssembly::new(
            electric_rectangle(e),
            electric_rectangle(-e),
            magnetic(),
            separation(),
            1.0,
        )
        .expect("default assembly is consistent")
    }
}
