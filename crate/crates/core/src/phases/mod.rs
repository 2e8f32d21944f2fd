//! Phase-shift contributions, per sublevel and per velocity.
//!
//! Orientation convention: every differential phase is "lower arm minus upper
//! arm", and for Zeeman terms the upper arm is the one at larger x, so that
//! `δx > 0` in the arm-separation profile.

mod stark;
mod topological;
mod zeeman;

pub use stark::{
    stark_constant, stark_defect_decomposition, stark_phase_arm, stark_phase_ideal,
    stark_phase_profile, tuned_upper_voltage, StarkDecomposition,
};
pub use topological::{aharonov_bohm_phase, aharonov_casher_phase, hmw_phase};
pub use zeeman::{
    printed_j3_prefactor, two_coil_j1, zeeman_integrals, zeeman_phase, zeeman_phase_with,
    BranchConvention, TwoCoilModel, ZeemanIntegrals,
};

use serde::{Deserialize, Serialize};

use crate::hyperfine::{AtomModel, Sublevel};
use crate::{Error, Result};

/// Rotation-induced phase `C/v` with C the species' Sagnac constant.
pub fn sagnac_phase(atom: &AtomModel, v: f64) -> Result<f64> {
    check_velocity(v)?;
    Ok(atom.sagnac_constant / v)
}

pub(crate) fn check_velocity(v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Domain(format!("velocity must be > 0, got {v}")));
    }
    Ok(())
}

/// Every contribution to the phase of each sublevel at one velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseBreakdown {
    pub sagnac: f64,
    pub stark: f64,
    pub hmw: f64,
    /// Indexed like [`Sublevel::ALL`].
    pub zeeman: [f64; 8],
    pub aharonov_casher: [f64; 8],
    pub total: [f64; 8],
}

impl PhaseBreakdown {
    pub fn new(
        sagnac: f64,
        stark: f64,
        hmw: f64,
        zeeman: [f64; 8],
        aharonov_casher: [f64; 8],
    ) -> Self {
        let mut total = [0.0; 8];
        for i in 0..8 {
            total[i] = sagnac + stark + zeeman[i] + aharonov_casher[i] + hmw;
        }
        PhaseBreakdown {
            sagnac,
            stark,
            hmw,
            zeeman,
            aharonov_casher,
            total,
        }
    }

    pub fn total_for(&self, s: Sublevel) -> f64 {
        self.total[s.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sagnac_values() {
        let atom = AtomModel::li7();
        let p = sagnac_phase(&atom, 1065.0).unwrap();
        assert!((p - 0.646).abs() < 0.5e-2 * 0.646);
        assert_eq!(sagnac_phase(&atom, 688.0).unwrap(), 1.0);
        assert!(sagnac_phase(&atom, 1e300).unwrap() < 1e-297);
        assert!(sagnac_phase(&atom, 0.0).is_err());
        assert!(sagnac_phase(&atom, -5.0).is_err());
    }

    #[test]
    fn breakdown_is_additive() {
        let z = [0.1, -0.2, 0.3, 1.0, 2.0, -3.0, 0.5, 7.25];
        let ac = [1e-3, 0.0, -1e-3, 2e-3, 1e-3, 0.0, -1e-3, -2e-3];
        let b = PhaseBreakdown::new(0.646, 12.5, 0.027, z, ac);
        for s in Sublevel::ALL {
            let i = s.index();
            let sum = b.sagnac + b.stark + b.zeeman[i] + b.aharonov_casher[i] + b.hmw;
            assert!((b.total_for(s) - sum).abs() < 1e-12);
        }
    }
}
