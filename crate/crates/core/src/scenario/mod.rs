//! Config-driven scans: TOML scenario files, the scan runner, the two-coil
//! fitter and CSV/JSON output.

mod config;
mod emit;
mod fit;
mod run;

pub use config::*;
pub use emit::*;
pub use fit::*;
pub use run::*;

use nalgebra::Vector3;

use crate::dynamics::{cancellation_check, grid_around_path, straight_path, CancellationReport};
use crate::hyperfine::AtomModel;
use crate::Result;

impl DynamicsConfig {
    pub fn check(&self, atom: &AtomModel) -> Result<CancellationReport> {
        let path = straight_path(self.x, self.y, self.z0, self.z1, self.points);
        let grid = grid_around_path(
            &self.generator,
            Vector3::from(self.b),
            &path,
            self.spacing,
            atom.epsilon0,
        )?;
        cancellation_check(
            &grid,
            &path,
            &Vector3::from(self.velocity),
            atom.polarizability_alpha,
            atom.epsilon0,
        )
    }
}

/// Runs the scan and gathers every report that goes into the JSON summary.
pub fn build_summary(s: &ResolvedScenario) -> Result<Summary> {
    let records = run_scenario(s)?;
    let magnitudes = magnitude_report(s)?;
    let four_configuration = if s.electric.is_some() && s.magnetic.is_some() {
        Some(four_configuration_report(s, magnitudes.scan_value)?)
    } else {
        None
    };
    let force_cancellation = s
        .config
        .dynamics
        .as_ref()
        .map(|d| d.check(&s.atom))
        .transpose()?;
    let diagnostics = Diagnostics::from_records(&records);
    Ok(Summary {
        scenario: s.config.clone(),
        records,
        magnitudes,
        four_configuration,
        force_cancellation,
        diagnostics,
    })
}
