use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ResolvedScenario, ScanVariable};
use crate::averaging::{
    fresnel_sum_weighted, moment_expansion_weighted, velocity_average_terms, BeamModel,
    ComplexVisibility,
};
use crate::geometry::{FieldAssembly, MagneticFieldProfile, Profile1D};
use crate::hyperfine::Sublevel;
use crate::phases::{
    aharonov_casher_phase, hmw_phase, sagnac_phase, stark_phase_arm, stark_phase_profile,
    zeeman_integrals, zeeman_phase_with, PhaseBreakdown, ZeemanIntegrals,
};
use crate::{Error, Result};

/// Dispersion of the trajectory-dependent phase at v_m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentDiagnostics {
    pub m2: f64,
    pub m3: f64,
    pub max_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub scan_value: f64,
    pub visibility: ComplexVisibility,
    /// |V|/V₀.
    pub modulus: f64,
    /// arg V, in (−π, π].
    pub phase: f64,
    /// Per-sublevel phases at v_m before any averaging.
    pub breakdown: PhaseBreakdown,
    pub moments: Option<MomentDiagnostics>,
}

/// Operating point of one scan value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub current: f64,
    pub compensator_current: f64,
    pub voltage: f64,
    pub v_m: f64,
    pub electric_on: bool,
    pub magnetic_on: bool,
}

impl ResolvedScenario {
    pub fn operating_point(&self, value: f64) -> OperatingPoint {
        let m = &self.config.magnetic;
        let mut p = OperatingPoint {
            current: m.current,
            compensator_current: m.compensator_current,
            voltage: self.config.electric.voltage,
            v_m: self.beam.v_m,
            electric_on: self.electric.is_some(),
            magnetic_on: self.magnetic.is_some(),
        };
        match self.config.scan.variable {
            ScanVariable::CoilCurrent => p.current = value,
            ScanVariable::CompensatorCurrent => p.compensator_current = value,
            ScanVariable::Voltage => p.voltage = value,
            ScanVariable::Velocity => p.v_m = value,
        }
        p
    }

    pub fn scan_values(&self) -> Vec<f64> {
        self.config.scan.values()
    }
}

/// Phase contributions of one operating point, each given at v_m together with
/// its velocity exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPhases {
    pub v_m: f64,
    pub sagnac: f64,
    /// Stark phase at each trajectory sample (one entry without P(y)).
    pub stark: Vec<f64>,
    pub stark_weights: Vec<f64>,
    pub hmw: f64,
    pub zeeman: [f64; 8],
    pub aharonov_casher: [f64; 8],
}

impl PointPhases {
    pub fn stark_mean(&self) -> f64 {
        self.stark
            .iter()
            .zip(&self.stark_weights)
            .map(|(s, w)| s * w)
            .sum()
    }

    pub fn breakdown(&self) -> PhaseBreakdown {
        PhaseBreakdown::new(
            self.sagnac,
            self.stark_mean(),
            self.hmw,
            self.zeeman,
            self.aharonov_casher,
        )
    }
}

/// Field at the operating point; the profile is `None` when the current is zero.
fn magnetic_at(
    s: &ResolvedScenario,
    p: &OperatingPoint,
) -> Result<Option<(Option<MagneticFieldProfile>, f64)>> {
    let m = match (&s.magnetic, p.magnetic_on) {
        (Some(m), true) => m,
        _ => return Ok(None),
    };
    let k = p.current / m.reference_current;
    // B ∝ I as a vector, so |B| and ∂|B|/∂x scale with |I| and the direction with sign(I).
    let profile = if k == 0.0 {
        None
    } else {
        Some(m.reference.scaled(k.abs())?)
    };
    let polarity = if k < 0.0 { -m.polarity } else { m.polarity };
    Ok(Some((profile, polarity)))
}

/// Zeeman integrals at the beam's configured velocity.
fn zeeman_at(
    s: &ResolvedScenario,
    p: &OperatingPoint,
    field: Option<&MagneticFieldProfile>,
) -> Result<ZeemanIntegrals> {
    let v_ref = s.beam.v_m;
    let m = s.magnetic.as_ref().expect("magnetic field present");
    match &m.two_coil {
        Some((model, c2, c3)) => {
            let d = p.current - model.i0;
            Ok(ZeemanIntegrals {
                j1: model.j1(p.current, p.compensator_current),
                j2: c2 * d * d,
                j3: c3 * d * d * d,
                reference_velocity: v_ref,
            })
        }
        None => match field {
            Some(f) => zeeman_integrals(f, &s.separation, &s.atom, v_ref),
            None => Ok(ZeemanIntegrals {
                j1: 0.0,
                j2: 0.0,
                j3: 0.0,
                reference_velocity: v_ref,
            }),
        },
    }
}

fn scale_power(j: &ZeemanIntegrals, k: f64) -> ZeemanIntegrals {
    ZeemanIntegrals {
        j1: j.j1 * k,
        j2: j.j2 * k,
        j3: j.j3 * k,
        reference_velocity: j.reference_velocity,
    }
}

/// Every phase of the operating point, evaluated at its v_m.
pub fn point_phases(s: &ResolvedScenario, p: &OperatingPoint) -> Result<PointPhases> {
    let atom = &s.atom;
    let powers = s.config.averaging.velocity_powers;
    let v_ref = s.beam.v_m;
    let ratio = v_ref / p.v_m;

    let sagnac = sagnac_phase(atom, p.v_m)?;

    let (ys, weights) = match (&s.trajectory, s.config.averaging.trajectory) {
        (Some(t), true) => (t.y().to_vec(), t.weights()),
        _ => (vec![s.reference_y], vec![1.0]),
    };

    let mut stark = vec![0.0; ys.len()];
    let electric = match (&s.electric, p.electric_on) {
        (Some(e), true) => Some(e),
        _ => None,
    };
    if let Some(e) = electric {
        let lower = e.lower.with_voltage(p.voltage);
        let upper = e.upper.with_voltage(e.voltage_ratio * p.voltage);
        let k = ratio.powi(powers.stark as i32);
        for (out, &y) in stark.iter_mut().zip(&ys) {
            *out = k * stark_phase_profile(atom, &lower, &upper, v_ref, y)?;
        }
    }

    let mut zeeman = [0.0; 8];
    let mut ac = [0.0; 8];
    let mut hmw = 0.0;
    if let Some((field, polarity)) = magnetic_at(s, p)? {
        let j = scale_power(
            &zeeman_at(s, p, field.as_ref())?,
            ratio.powi(powers.zeeman as i32),
        );
        for sub in Sublevel::ALL {
            zeeman[sub.index()] = zeeman_phase_with(
                atom,
                sub,
                &j,
                s.config.averaging.lande,
                s.config.averaging.branch_convention,
            );
        }
        let nonzero = field.filter(|f| f.modulus().min_value() > 0.0);
        if let (Some(e), Some(field)) = (electric, nonzero) {
            let half_l = 0.5 * e.length_lower;
            let half_u = 0.5 * e.length_upper;
            let fields = FieldAssembly::new(
                Profile1D::constant(
                    e.center - half_l,
                    e.center + half_l,
                    p.voltage / e.spacing_lower,
                )?,
                Profile1D::constant(
                    e.center - half_u,
                    e.center + half_u,
                    -e.voltage_ratio * p.voltage / e.spacing_upper,
                )?,
                field,
                s.separation.clone(),
                polarity,
            )?;
            hmw = hmw_phase(atom, &fields)?;
            for sub in Sublevel::ALL {
                ac[sub.index()] = aharonov_casher_phase(atom, sub, &fields)?;
            }
        }
    }

    Ok(PointPhases {
        v_m: p.v_m,
        sagnac,
        stark,
        stark_weights: weights,
        hmw,
        zeeman,
        aharonov_casher: ac,
    })
}

/// Complex visibility of an operating point after the enabled averaging layers.
pub fn average_point(s: &ResolvedScenario, phases: &PointPhases) -> Result<ComplexVisibility> {
    let avg = &s.config.averaging;
    let powers = avg.velocity_powers;
    let beam = BeamModel {
        v_m: phases.v_m,
        ..s.beam
    };
    let sublevels: Vec<(Sublevel, f64)> = if avg.sublevels {
        s.populations.iter().collect()
    } else {
        vec![(s.reference_sublevel, 1.0)]
    };
    let mut terms = Vec::with_capacity(sublevels.len() * phases.stark.len());
    for (sub, p_sub) in sublevels {
        let i = sub.index();
        for (stark, w) in phases.stark.iter().zip(&phases.stark_weights) {
            let mut groups: Vec<(u32, f64)> = Vec::with_capacity(4);
            let mut add = |n: u32, phi: f64| match groups.iter_mut().find(|(m, _)| *m == n) {
                Some(g) => g.1 += phi,
                None => groups.push((n, phi)),
            };
            add(0, phases.hmw + phases.aharonov_casher[i]);
            add(powers.sagnac, phases.sagnac);
            add(powers.stark, *stark);
            add(powers.zeeman, phases.zeeman[i]);
            let c = if avg.velocity {
                velocity_average_terms(&beam, &groups)?
            } else {
                ComplexVisibility::from_polar(1.0, groups.iter().map(|g| g.1).sum())
            };
            terms.push((p_sub * w, c.modulus(), c.phase()));
        }
    }
    let v = fresnel_sum_weighted(terms);
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Numerical("non-finite visibility".into()));
    }
    Ok(v)
}

pub fn evaluate_point(
    s: &ResolvedScenario,
    p: &OperatingPoint,
    scan_value: f64,
) -> Result<ScanRecord> {
    let phases = point_phases(s, p)?;
    let visibility = average_point(s, &phases)?;
    let moments = if phases.stark.len() > 1 {
        let m = moment_expansion_weighted(&phases.stark_weights, &phases.stark)?;
        Some(MomentDiagnostics {
            m2: m.m2,
            m3: m.m3,
            max_abs_deviation: m.max_abs_deviation,
        })
    } else {
        None
    };
    let modulus = visibility.modulus();
    if modulus > 1.0 + 1e-9 {
        return Err(Error::Numerical(format!(
            "visibility modulus {modulus} exceeds 1"
        )));
    }
    Ok(ScanRecord {
        scan_value,
        visibility,
        modulus,
        phase: visibility.phase(),
        breakdown: phases.breakdown(),
        moments,
    })
}

/// One record per scan value, in scan order. Points run in parallel.
pub fn run_scenario(s: &ResolvedScenario) -> Result<Vec<ScanRecord>> {
    s.scan_values()
        .par_iter()
        .map(|&v| evaluate_point(s, &s.operating_point(v), v))
        .collect()
}

/// φ(E,B) − φ(E,0) − φ(0,B) + φ(0,0) at one scan value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourConfigurationReport {
    pub scan_value: f64,
    pub phase_eb: f64,
    pub phase_e0: f64,
    pub phase_0b: f64,
    pub phase_00: f64,
    pub difference: f64,
    /// HMW phase of the (E, B) configuration, for comparison.
    pub hmw: f64,
}

pub fn four_configuration_report(
    s: &ResolvedScenario,
    scan_value: f64,
) -> Result<FourConfigurationReport> {
    let base = s.operating_point(scan_value);
    let run = |e: bool, b: bool| -> Result<(f64, f64)> {
        let p = OperatingPoint {
            electric_on: e && base.electric_on,
            magnetic_on: b && base.magnetic_on,
            ..base
        };
        let phases = point_phases(s, &p)?;
        Ok((average_point(s, &phases)?.phase(), phases.hmw))
    };
    let (eb, hmw) = run(true, true)?;
    let (e0, _) = run(true, false)?;
    let (b0, _) = run(false, true)?;
    let (z, _) = run(false, false)?;
    Ok(FourConfigurationReport {
        scan_value,
        phase_eb: eb,
        phase_e0: e0,
        phase_0b: b0,
        phase_00: z,
        difference: crate::averaging::wrap_phase(eb - e0 - b0 + z),
        hmw,
    })
}

/// Order-of-magnitude table of every contribution at the scan value of largest |value|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeReport {
    pub scan_value: f64,
    pub sagnac: f64,
    /// Lower capacitor alone, ideal geometry.
    pub stark_single_arm: f64,
    pub stark_differential: f64,
    pub zeeman_f2m2: f64,
    pub aharonov_casher_f2m2: f64,
    pub hmw: f64,
}

pub fn magnitude_report(s: &ResolvedScenario) -> Result<MagnitudeReport> {
    let value = s
        .scan_values()
        .into_iter()
        .fold(None::<f64>, |best, v| match best {
            Some(b) if b.abs() >= v.abs() => Some(b),
            _ => Some(v),
        })
        .expect("scan is nonempty");
    let p = s.operating_point(value);
    let phases = point_phases(s, &p)?;
    let stark_single_arm = match &s.electric {
        Some(e) => stark_phase_arm(&s.atom, p.voltage, e.spacing_lower, e.length_lower, p.v_m)?,
        None => 0.0,
    };
    let top = Sublevel::new(2, 2)?.index();
    Ok(MagnitudeReport {
        scan_value: value,
        sagnac: phases.sagnac,
        stark_single_arm,
        stark_differential: phases.stark_mean(),
        zeeman_f2m2: phases.zeeman[top],
        aharonov_casher_f2m2: phases.aharonov_casher[top],
        hmw: phases.hmw,
    })
}

#[cfg(test)]
mod tests {
    use super::super::config::Scenario;
    use super::*;
    use crate::averaging::quadratic_zeeman_visibility;
    use crate::phases::BranchConvention;
    use std::path::Path;

    fn resolve(text: &str) -> ResolvedScenario {
        Scenario::from_toml_str(text)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap()
    }

    const BEAM: &str = "schema_version = 1\n[beam]\nv_m = 1065.0\ns_parallel = 8.0\n";

    #[test]
    fn fields_off_gives_sagnac_only() {
        let s = resolve(&format!(
            "{BEAM}[scan]\nvariable = \"velocity\"\nstart = 700.0\nstop = 1400.0\nsteps = 8\n[averaging]\nvelocity = false\n"
        ));
        for r in run_scenario(&s).unwrap() {
            assert!((r.modulus - 1.0).abs() < 1e-15);
            let expected = 688.0 / r.scan_value;
            assert!((r.phase - expected).abs() < 1e-15, "{} {expected}", r.phase);
            assert!(r.breakdown.total.iter().all(|t| *t == expected));
        }
    }

    #[test]
    fn switches_off_reduce_to_raw_reference_phase() {
        let s = resolve(&format!(
            "{BEAM}[magnetic]\nenabled = true\ngradient = 2e-3\n[electric]\nenabled = true\ntune_voltage_ratio = false\nvoltage_ratio = 0.999\n\
             [scan]\nvariable = \"coil_current\"\nstart = 0.2\nstop = 1.0\nsteps = 3\n\
             [averaging]\nvelocity = false\nsublevels = false\nreference_sublevel = \"F2m1\"\n"
        ));
        let sub = Sublevel::new(2, 1).unwrap();
        for r in run_scenario(&s).unwrap() {
            let raw = r.breakdown.total_for(sub);
            assert!((r.modulus - 1.0).abs() < 1e-12);
            assert!(
                crate::averaging::wrap_phase(r.phase - raw).abs() < 1e-9,
                "{} {raw}",
                r.phase
            );
        }
    }

    #[test]
    fn two_coil_scan_matches_quadratic_closed_form() {
        let s = resolve(&format!(
            "{BEAM}[populations]\nchi = 0.1\n[magnetic]\nenabled = true\nmode = \"two_coil\"\n\
             [magnetic.two_coil]\na_j1 = 0.5\nj2_per_a2 = 0.01\n\
             [scan]\nvariable = \"coil_current\"\nstart = -20.0\nstop = 20.0\nsteps = 41\n\
             [averaging]\nvelocity = false\nlande = \"approximate\"\n"
        ));
        for r in run_scenario(&s).unwrap() {
            let i = r.scan_value;
            let q = quadratic_zeeman_visibility(
                &s.atom,
                0.5 * i.abs(),
                0.01 * i * i,
                0.1,
                BranchConvention::Printed,
            )
            .unwrap();
            // Sagnac adds a common phase.
            let expected =
                q.direct.as_complex() * num_complex::Complex64::from_polar(1.0, 688.0 / 1065.0);
            assert!((r.visibility.as_complex() - expected).norm() < 1e-12, "{i}");
        }
    }

    #[test]
    fn four_configuration_difference_is_hmw() {
        let s = resolve(&format!(
            "{BEAM}[electric]\nenabled = true\n[magnetic]\nenabled = true\ngradient = 0.0\n\
             [scan]\nvariable = \"voltage\"\nstart = 400.0\nstop = 400.0\nsteps = 1\n"
        ));
        let r = four_configuration_report(&s, 400.0).unwrap();
        assert!((r.hmw.abs() - 0.027).abs() < 0.15 * 0.027, "{}", r.hmw);
        assert!(
            (r.difference - r.hmw).abs() < 1e-3,
            "{} vs {}",
            r.difference,
            r.hmw
        );
    }

    #[test]
    fn topological_terms_do_not_depend_on_velocity() {
        let s = resolve(&format!(
            "{BEAM}[electric]\nenabled = true\n[magnetic]\nenabled = true\n\
             [scan]\nvariable = \"velocity\"\nstart = 1065.0\nstop = 10650.0\nsteps = 2\n"
        ));
        let a = point_phases(&s, &s.operating_point(1065.0)).unwrap();
        let b = point_phases(&s, &s.operating_point(10650.0)).unwrap();
        assert_eq!(a.hmw, b.hmw);
        assert_eq!(a.aharonov_casher, b.aharonov_casher);
        assert!((a.zeeman[7] / b.zeeman[7] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn trajectory_average_reports_moments() {
        let s = resolve(&format!(
            "{BEAM}[electric]\nenabled = true\ntune_voltage_ratio = false\nvoltage_ratio = 0.9995\n\
             [trajectory]\nenabled = true\ny0 = -1e-3\ny1 = 1e-3\nn = 5\n\
             [scan]\nvariable = \"voltage\"\nstart = 100.0\nstop = 400.0\nsteps = 2\n\
             [averaging]\ntrajectory = true\n"
        ));
        let recs = run_scenario(&s).unwrap();
        let m = recs[0].moments.unwrap();
        // Ideal capacitors: no trajectory dependence.
        assert!(m.m2 < 1e-20);
        assert!(recs[1].modulus < recs[0].modulus);
    }
}
