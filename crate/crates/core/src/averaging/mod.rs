//! Dispersion averaging: velocity distribution, trajectory moments and the
//! sublevel phasor sum.

mod moments;
mod sublevels;
mod velocity;

pub use moments::{
    cross_phase_term, moment_expansion, moment_expansion_weighted, visibility_correlation,
    MomentExpansion, VisibilityCorrelation,
};
pub use sublevels::{
    fresnel_sum, fresnel_sum_complex, fresnel_sum_weighted, linear_zeeman_visibility,
    quadratic_zeeman_closed_form, quadratic_zeeman_visibility, sublevel_zeeman_visibility,
    QuadraticZeeman,
};
pub use velocity::{
    velocity_average, velocity_average_analytic, velocity_average_terms, velocity_pdf,
    velocity_support, BeamModel,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Maps an angle to [−π, π).
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Fringe contrast and phase as a single complex number `V e^{iφ}` (V₀ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexVisibility {
    pub re: f64,
    pub im: f64,
}

impl ComplexVisibility {
    pub const ONE: ComplexVisibility = ComplexVisibility { re: 1.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        ComplexVisibility { re, im }
    }

    pub fn from_polar(modulus: f64, phase: f64) -> Self {
        Complex64::from_polar(modulus, phase).into()
    }

    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// atan2(im, re), in (−π, π].
    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for ComplexVisibility {
    fn from(c: Complex64) -> Self {
        ComplexVisibility { re: c.re, im: c.im }
    }
}

impl From<ComplexVisibility> for Complex64 {
    fn from(c: ComplexVisibility) -> Self {
        Complex64::new(c.re, c.im)
    }
}

impl std::ops::Mul for ComplexVisibility {
    type Output = ComplexVisibility;
    fn mul(self, rhs: Self) -> Self {
        (self.as_complex() * rhs.as_complex()).into()
    }
}
