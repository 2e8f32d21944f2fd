//! TOML scenario schema and its resolution into validated model objects.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::averaging::BeamModel;
use crate::constants::PLANCK;
use crate::dynamics::ElectricGenerator;
use crate::geometry::{
    defaults, effective_length, Arm, ArmSeparationProfile, CapacitorGeometry, MagneticFieldProfile,
    Profile1D, TrajectoryDistribution,
};
use crate::hyperfine::{
    population_unbalance, AtomModel, LandeFactors, Sublevel, SublevelPopulations,
};
use crate::phases::{tuned_upper_voltage, BranchConvention, TwoCoilModel};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub atom: AtomConfig,
    pub beam: BeamConfig,
    #[serde(default)]
    pub populations: PopulationConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub electric: ElectricConfig,
    #[serde(default)]
    pub magnetic: MagneticConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    pub scan: ScanConfig,
    #[serde(default)]
    pub averaging: AveragingConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub dynamics: Option<DynamicsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub preset: String,
    pub hyperfine_a_hz: Option<f64>,
    pub g_s: Option<f64>,
    pub g_i: Option<f64>,
    pub polarizability_alpha: Option<f64>,
    pub mass: Option<f64>,
    pub sagnac_constant: Option<f64>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        AtomConfig {
            preset: "li7".into(),
            hyperfine_a_hz: None,
            g_s: None,
            g_i: None,
            polarizability_alpha: None,
            mass: None,
            sagnac_constant: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub v_m: f64,
    pub s_parallel: f64,
}

/// Either an explicit χ or the optical-pumping parameters it is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub chi: Option<f64>,
    pub beta_hz: Option<f64>,
    pub delta_l_hz: Option<f64>,
    /// Defaults to 2A/h of the atom.
    pub omega_hfs_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub total_length: f64,
    pub grating_z: f64,
    pub peak_separation: f64,
    /// Two-column CSV (z, δx) replacing the triangle.
    pub separation_csv: Option<PathBuf>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            total_length: defaults::TOTAL_LENGTH,
            grating_z: defaults::GRATING_Z,
            peak_separation: defaults::PEAK_SEPARATION,
            separation_csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElectricConfig {
    pub enabled: bool,
    /// Lower-arm voltage.
    pub voltage: f64,
    pub spacing_lower: f64,
    pub spacing_upper: f64,
    pub half_length_lower: f64,
    pub half_length_upper: f64,
    pub center: f64,
    /// Choose V_u so that the ideal Stark phase vanishes at every velocity.
    pub tune_voltage_ratio: bool,
    /// V_u / V_l when not tuned.
    pub voltage_ratio: Option<f64>,
    pub defects: Option<DefectConfig>,
}

impl Default for ElectricConfig {
    fn default() -> Self {
        ElectricConfig {
            enabled: false,
            voltage: defaults::CAPACITOR_VOLTAGE,
            spacing_lower: defaults::CAPACITOR_SPACING,
            spacing_upper: defaults::CAPACITOR_SPACING,
            half_length_lower: defaults::CAPACITOR_HALF_LENGTH,
            half_length_upper: defaults::CAPACITOR_HALF_LENGTH,
            center: defaults::CAPACITOR_CENTER,
            tune_voltage_ratio: true,
            voltage_ratio: None,
            defects: None,
        }
    }
}

/// Defect grids on (y, s = z/L). Rows follow `y`, columns follow `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectConfig {
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub lower: ArmDefects,
    pub upper: ArmDefects,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDefects {
    pub spacing_defect: Vec<Vec<f64>>,
    pub contact_potential: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticMode {
    /// Field map scaled linearly by the coil current.
    #[default]
    Profile,
    /// Linear two-coil model for J₁ with optional J₂, J₃ coefficients.
    TwoCoil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagneticConfig {
    pub enabled: bool,
    pub mode: MagneticMode,
    pub start: f64,
    pub end: f64,
    /// |B| at the reference current (T).
    pub modulus: f64,
    /// ∂|B|/∂x at the reference current (T/m).
    pub gradient: f64,
    /// Three-column CSV (z, B, ∂B/∂x) at the reference current.
    pub profile_csv: Option<PathBuf>,
    pub reference_current: f64,
    pub current: f64,
    pub compensator_current: f64,
    /// +1 for B along +y.
    pub polarity: f64,
    pub two_coil: Option<TwoCoilConfig>,
}

impl Default for MagneticConfig {
    fn default() -> Self {
        MagneticConfig {
            enabled: false,
            mode: MagneticMode::Profile,
            start: defaults::FIELD_START,
            end: defaults::FIELD_END,
            modulus: defaults::FIELD_MODULUS,
            gradient: defaults::FIELD_GRADIENT,
            profile_csv: None,
            reference_current: 1.0,
            current: 1.0,
            compensator_current: 0.0,
            polarity: 1.0,
            two_coil: None,
        }
    }
}

/// J₁ = A|I − I₀| + A_C|I_C − I₀C| + J₀, J₂ = c₂(I − I₀)², J₃ = c₃(I − I₀)³,
/// all at the beam's configured mean velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoCoilConfig {
    pub a_j1: f64,
    #[serde(default)]
    pub i0: f64,
    #[serde(default)]
    pub a_j1c: f64,
    #[serde(default)]
    pub i0c: f64,
    #[serde(default)]
    pub j0: f64,
    #[serde(default)]
    pub j2_per_a2: f64,
    #[serde(default)]
    pub j3_per_a3: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub enabled: bool,
    pub y: Option<Vec<f64>>,
    pub density: Option<Vec<f64>>,
    /// Uniform P(y) on [y0, y1] with n samples, used when `y` is absent.
    pub y0: Option<f64>,
    pub y1: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    CoilCurrent,
    CompensatorCurrent,
    Voltage,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub variable: ScanVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let n = self.steps - 1;
        (0..self.steps)
            .map(|i| {
                if i == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Velocity exponents n in φ ∝ v⁻ⁿ for each contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocityPowers {
    pub sagnac: u32,
    pub stark: u32,
    /// 2 by default: the phase is 1/v and the arm separation another 1/v.
    pub zeeman: u32,
}

impl Default for VelocityPowers {
    fn default() -> Self {
        VelocityPowers {
            sagnac: 1,
            stark: 1,
            zeeman: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AveragingConfig {
    pub velocity: bool,
    pub trajectory: bool,
    pub sublevels: bool,
    pub lande: LandeFactors,
    pub branch_convention: BranchConvention,
    /// Sublevel used alone when `sublevels = false`.
    pub reference_sublevel: String,
    pub velocity_powers: VelocityPowers,
}

impl Default for AveragingConfig {
    fn default() -> Self {
        AveragingConfig {
            velocity: true,
            trajectory: false,
            sublevels: true,
            lande: LandeFactors::Exact,
            branch_convention: BranchConvention::Printed,
            reference_sublevel: "F2m2".into(),
            velocity_powers: VelocityPowers::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
}

/// Force-cancellation check along a straight path, reported in the JSON summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub generator: ElectricGenerator,
    pub b: [f64; 3],
    pub velocity: [f64; 3],
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub z0: f64,
    pub z1: f64,
    pub points: usize,
    pub spacing: f64,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|r| format!("bytes {}..{}", r.start, r.end))
                .unwrap_or_else(|| "document".into());
            Error::config(path, e.message().to_string())
        })?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    s.schema_version
                ),
            ));
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Scenario::from_toml_str(&text)?, base))
    }

    /// Validates everything and builds the model objects. Relative CSV paths
    /// are resolved against `base`.
    pub fn resolve(&self, base: &Path) -> Result<ResolvedScenario> {
        resolve(self, base)
    }
}

/// Fully validated scenario, ready to evaluate.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    pub config: Scenario,
    pub atom: AtomModel,
    pub beam: BeamModel,
    pub populations: SublevelPopulations,
    pub separation: ArmSeparationProfile,
    pub electric: Option<ResolvedElectric>,
    pub magnetic: Option<ResolvedMagnetic>,
    pub trajectory: Option<TrajectoryDistribution>,
    /// Trajectory height used when trajectory averaging is off.
    pub reference_y: f64,
    pub reference_sublevel: Sublevel,
}

#[derive(Debug, Clone)]
pub struct ResolvedElectric {
    pub lower: CapacitorGeometry,
    pub upper: CapacitorGeometry,
    /// V_u / V_l.
    pub voltage_ratio: f64,
    pub spacing_lower: f64,
    pub spacing_upper: f64,
    pub length_lower: f64,
    pub length_upper: f64,
    pub center: f64,
}

#[derive(Debug, Clone)]
pub struct ResolvedMagnetic {
    /// Field map at the reference current.
    pub reference: MagneticFieldProfile,
    pub reference_current: f64,
    pub polarity: f64,
    pub two_coil: Option<(TwoCoilModel, f64, f64)>,
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(
            path,
            format!("must be a positive number, got {v}"),
        ))
    }
}

fn finite(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be finite, got {v}")))
    }
}

/// Re-labels lower-level errors with the config path they came from.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

fn read_columns(base: &Path, file: &Path, ncols: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    let full = if file.is_absolute() {
        file.to_path_buf()
    } else {
        base.join(file)
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&full)
        .map_err(|e| Error::config(what, format!("{}: {e}", full.display())))?;
    let mut cols = vec![Vec::new(); ncols];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::config(what, e.to_string()))?;
        if rec.len() != ncols {
            return Err(Error::config(
                what,
                format!(
                    "row {}: expected {ncols} columns, found {}",
                    line + 1,
                    rec.len()
                ),
            ));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::config(what, format!("row {}: `{field}` is not a number", line + 1))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

fn resolve_atom(c: &AtomConfig) -> Result<AtomModel> {
    let mut atom = match c.preset.as_str() {
        "li7" | "7Li" | "lithium7" => AtomModel::li7(),
        other => {
            return Err(Error::config(
                "atom.preset",
                format!("unknown preset `{other}` (available: li7)"),
            ))
        }
    };
    if let Some(a) = c.hyperfine_a_hz {
        atom.hyperfine_constant_a = PLANCK * positive("atom.hyperfine_a_hz", a)?;
    }
    if let Some(g) = c.g_s {
        atom.g_s = finite("atom.g_s", g)?;
    }
    if let Some(g) = c.g_i {
        atom.g_i = finite("atom.g_i", g)?;
    }
    if let Some(a) = c.polarizability_alpha {
        atom.polarizability_alpha = positive("atom.polarizability_alpha", a)?;
    }
    if let Some(m) = c.mass {
        atom.mass = positive("atom.mass", m)?;
    }
    if let Some(s) = c.sagnac_constant {
        atom.sagnac_constant = finite("atom.sagnac_constant", s)?;
    }
    at("atom", atom.validate())?;
    Ok(atom)
}

fn resolve_chi(c: &PopulationConfig, atom: &AtomModel) -> Result<f64> {
    match (c.chi, c.beta_hz, c.delta_l_hz) {
        (Some(chi), None, None) => Ok(chi),
        (None, Some(beta), Some(delta)) => {
            let omega = match c.omega_hfs_hz {
                Some(w) => positive("populations.omega_hfs_hz", w)?,
                None => atom.hfs_angular_frequency() / (2.0 * std::f64::consts::PI),
            };
            // Only ratios enter, so Hz can be used directly.
            at("populations", population_unbalance(beta, delta, omega))
        }
        (None, None, None) => Ok(0.0),
        _ => Err(Error::config(
            "populations",
            "give either `chi` or both `beta_hz` and `delta_l_hz`",
        )),
    }
}

fn resolve(s: &Scenario, base: &Path) -> Result<ResolvedScenario> {
    let atom = resolve_atom(&s.atom)?;
    let chi = resolve_chi(&s.populations, &atom)?;
    positive("beam.v_m", s.beam.v_m)?;
    positive("beam.s_parallel", s.beam.s_parallel)?;
    let beam = at(
        "populations.chi",
        BeamModel::new(s.beam.v_m, s.beam.s_parallel, chi),
    )?;
    let populations = at("populations.chi", SublevelPopulations::from_chi(chi))?;

    let g = &s.geometry;
    let separation = match &g.separation_csv {
        Some(file) => {
            let cols = read_columns(base, file, 2, "geometry.separation_csv")?;
            let p = at(
                "geometry.separation_csv",
                Profile1D::new(cols[0].clone(), cols[1].clone()),
            )?;
            at("geometry.separation_csv", ArmSeparationProfile::new(p))?
        }
        None => at(
            "geometry",
            ArmSeparationProfile::triangle(g.total_length, g.grating_z, g.peak_separation),
        )?,
    };

    let trajectory = if s.trajectory.enabled || s.averaging.trajectory {
        Some(resolve_trajectory(&s.trajectory)?)
    } else {
        None
    };
    if s.averaging.trajectory && trajectory.is_none() {
        return Err(Error::config(
            "trajectory",
            "trajectory averaging needs a P(y)",
        ));
    }

    let y_range = match (&s.electric.defects, &trajectory) {
        (Some(d), _) if d.y.len() >= 2 => (d.y[0], d.y[d.y.len() - 1]),
        (_, Some(p)) => p.support(),
        _ => (-1e-3, 1e-3),
    };
    let reference_y = if y_range.0 <= 0.0 && y_range.1 >= 0.0 {
        0.0
    } else {
        0.5 * (y_range.0 + y_range.1)
    };

    let electric = if s.electric.enabled {
        Some(resolve_electric(&s.electric, y_range, trajectory.as_ref())?)
    } else {
        None
    };
    let magnetic = if s.magnetic.enabled {
        Some(resolve_magnetic(&s.magnetic, base)?)
    } else {
        None
    };

    // Support consistency of the assembled fields.
    let (slo, shi) = separation.profile().support();
    if let Some(m) = &magnetic {
        let (lo, hi) = m.reference.support();
        if lo < slo || hi > shi {
            return Err(Error::config(
                "magnetic",
                format!("field map [{lo}, {hi}] extends beyond the arm separation [{slo}, {shi}]"),
            ));
        }
        if let Some(e) = &electric {
            for (name, len) in [("lower", e.length_lower), ("upper", e.length_upper)] {
                let (a, b) = (e.center - 0.5 * len, e.center + 0.5 * len);
                if a < lo || b > hi {
                    return Err(Error::config(
                        "electric.center",
                        format!("{name} capacitor [{a}, {b}] is not covered by the field map [{lo}, {hi}]"),
                    ));
                }
            }
        }
    }
    if let Some(e) = &electric {
        let (a, b) = (
            e.center - 0.5 * e.length_lower.max(e.length_upper),
            e.center + 0.5 * e.length_lower.max(e.length_upper),
        );
        if a < slo || b > shi {
            return Err(Error::config(
                "electric.center",
                "capacitor lies outside the interferometer",
            ));
        }
    }

    let sc = &s.scan;
    if sc.steps == 0 {
        return Err(Error::config("scan.steps", "scan range is empty"));
    }
    finite("scan.start", sc.start)?;
    finite("scan.stop", sc.stop)?;
    match sc.variable {
        ScanVariable::Velocity => {
            if sc.start.min(sc.stop) <= 0.0 {
                return Err(Error::config("scan.start", "velocities must be > 0"));
            }
        }
        ScanVariable::Voltage if electric.is_none() => {
            return Err(Error::config(
                "scan.variable",
                "voltage scan needs `electric.enabled = true`",
            ));
        }
        ScanVariable::CoilCurrent if magnetic.is_none() => {
            return Err(Error::config(
                "scan.variable",
                "current scan needs `magnetic.enabled = true`",
            ));
        }
        ScanVariable::CompensatorCurrent
            if magnetic.as_ref().is_none_or(|m| m.two_coil.is_none()) =>
        {
            return Err(Error::config(
                "scan.variable",
                "compensator scan needs `magnetic.mode = \"two_coil\"`",
            ));
        }
        _ => {}
    }

    let reference_sublevel = at(
        "averaging.reference_sublevel",
        Sublevel::parse_label(&s.averaging.reference_sublevel),
    )?;

    if let Some(d) = &s.dynamics {
        positive("dynamics.spacing", d.spacing)?;
        if d.points == 0 {
            return Err(Error::config("dynamics.points", "need at least one point"));
        }
    }

    Ok(ResolvedScenario {
        config: s.clone(),
        atom,
        beam,
        populations,
        separation,
        electric,
        magnetic,
        trajectory,
        reference_y,
        reference_sublevel,
    })
}

fn resolve_trajectory(t: &TrajectoryConfig) -> Result<TrajectoryDistribution> {
    match (&t.y, &t.density) {
        (Some(y), Some(d)) => at(
            "trajectory",
            TrajectoryDistribution::new(y.clone(), d.clone()),
        ),
        (Some(_), None) | (None, Some(_)) => Err(Error::config(
            "trajectory",
            "`y` and `density` must be given together",
        )),
        (None, None) => {
            let (y0, y1, n) = match (t.y0, t.y1, t.n) {
                (Some(a), Some(b), Some(n)) => (a, b, n),
                _ => {
                    return Err(Error::config(
                        "trajectory",
                        "give `y` and `density`, or `y0`, `y1` and `n`",
                    ))
                }
            };
            at("trajectory", TrajectoryDistribution::uniform(y0, y1, n))
        }
    }
}

fn resolve_electric(
    e: &ElectricConfig,
    y_range: (f64, f64),
    p: Option<&TrajectoryDistribution>,
) -> Result<ResolvedElectric> {
    let h_l = positive("electric.spacing_lower", e.spacing_lower)?;
    let h_u = positive("electric.spacing_upper", e.spacing_upper)?;
    let l_l = at(
        "electric.half_length_lower",
        effective_length(e.half_length_lower, h_l),
    )?;
    let l_u = at(
        "electric.half_length_upper",
        effective_length(e.half_length_upper, h_u),
    )?;
    finite("electric.voltage", e.voltage)?;
    finite("electric.center", e.center)?;
    let ratio = if e.tune_voltage_ratio {
        if e.voltage_ratio.is_some() {
            return Err(Error::config(
                "electric.voltage_ratio",
                "cannot be set together with `tune_voltage_ratio = true`",
            ));
        }
        at("electric", tuned_upper_voltage(1.0, h_l, l_l, h_u, l_u))?
    } else {
        finite(
            "electric.voltage_ratio",
            e.voltage_ratio.ok_or_else(|| {
                Error::config(
                    "electric.voltage_ratio",
                    "required when the ratio is not tuned",
                )
            })?,
        )?
    };
    let (lower, upper) = match &e.defects {
        None => (
            at(
                "electric",
                CapacitorGeometry::ideal(Arm::Lower, e.voltage, h_l, l_l, y_range.0, y_range.1),
            )?,
            at(
                "electric",
                CapacitorGeometry::ideal(
                    Arm::Upper,
                    ratio * e.voltage,
                    h_u,
                    l_u,
                    y_range.0,
                    y_range.1,
                ),
            )?,
        ),
        Some(d) => {
            let build = |arm: Arm, a: &ArmDefects, h: f64, l: f64, v: f64, path: &str| {
                at(
                    path,
                    CapacitorGeometry::new(
                        arm,
                        d.y.clone(),
                        d.s.clone(),
                        vec![h; d.y.len()],
                        vec![l; d.y.len()],
                        a.spacing_defect.clone(),
                        a.contact_potential.clone(),
                        v,
                    ),
                )
            };
            (
                build(
                    Arm::Lower,
                    &d.lower,
                    h_l,
                    l_l,
                    e.voltage,
                    "electric.defects.lower",
                )?,
                build(
                    Arm::Upper,
                    &d.upper,
                    h_u,
                    l_u,
                    ratio * e.voltage,
                    "electric.defects.upper",
                )?,
            )
        }
    };
    if let Some(p) = p {
        let (a, b) = p.support();
        let (lo, hi) = lower.y_range();
        if a < lo || b > hi {
            return Err(Error::config(
                "trajectory",
                format!("P(y) on [{a}, {b}] extends beyond the capacitor grid [{lo}, {hi}]"),
            ));
        }
    }
    Ok(ResolvedElectric {
        lower,
        upper,
        voltage_ratio: ratio,
        spacing_lower: h_l,
        spacing_upper: h_u,
        length_lower: l_l,
        length_upper: l_u,
        center: e.center,
    })
}

fn resolve_magnetic(m: &MagneticConfig, base: &Path) -> Result<ResolvedMagnetic> {
    if m.polarity != 1.0 && m.polarity != -1.0 {
        return Err(Error::config("magnetic.polarity", "must be +1 or -1"));
    }
    positive("magnetic.reference_current", m.reference_current)?;
    finite("magnetic.current", m.current)?;
    finite("magnetic.compensator_current", m.compensator_current)?;
    let reference = match &m.profile_csv {
        Some(file) => {
            let cols = read_columns(base, file, 3, "magnetic.profile_csv")?;
            let b = at(
                "magnetic.profile_csv",
                Profile1D::new(cols[0].clone(), cols[1].clone()),
            )?;
            let g = at(
                "magnetic.profile_csv",
                Profile1D::new(cols[0].clone(), cols[2].clone()),
            )?;
            at("magnetic.profile_csv", MagneticFieldProfile::new(b, g))?
        }
        None => {
            if !(m.end > m.start) {
                return Err(Error::config(
                    "magnetic.end",
                    "must exceed `magnetic.start`",
                ));
            }
            if !(m.modulus >= 0.0) {
                return Err(Error::config("magnetic.modulus", "must be ≥ 0"));
            }
            finite("magnetic.gradient", m.gradient)?;
            at(
                "magnetic",
                MagneticFieldProfile::uniform(m.start, m.end, m.modulus, m.gradient),
            )?
        }
    };
    let two_coil = match (m.mode, &m.two_coil) {
        (MagneticMode::TwoCoil, Some(t)) => {
            for (name, v) in [
                ("a_j1", t.a_j1),
                ("i0", t.i0),
                ("a_j1c", t.a_j1c),
                ("i0c", t.i0c),
                ("j0", t.j0),
                ("j2_per_a2", t.j2_per_a2),
                ("j3_per_a3", t.j3_per_a3),
            ] {
                finite(&format!("magnetic.two_coil.{name}"), v)?;
            }
            Some((
                TwoCoilModel {
                    a_j1: t.a_j1,
                    i0: t.i0,
                    a_j1c: t.a_j1c,
                    i0c: t.i0c,
                    j0: t.j0,
                },
                t.j2_per_a2,
                t.j3_per_a3,
            ))
        }
        (MagneticMode::TwoCoil, None) => {
            return Err(Error::config(
                "magnetic.two_coil",
                "required when `mode = \"two_coil\"`",
            ))
        }
        (MagneticMode::Profile, Some(_)) => {
            return Err(Error::config(
                "magnetic.two_coil",
                "only valid with `mode = \"two_coil\"`",
            ))
        }
        (MagneticMode::Profile, None) => None,
    };
    Ok(ResolvedMagnetic {
        reference,
        reference_current: m.reference_current,
        polarity: m.polarity,
        two_coil,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        schema_version = 1
        [beam]
        v_m = 1065.0
        s_parallel = 8.0
        [scan]
        variable = "velocity"
        start = 800.0
        stop = 1400.0
        steps = 4
    "#;

    fn path_of(e: Error) -> String {
        match e {
            Error::Config { path, .. } => path,
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_resolves() {
        let s = Scenario::from_toml_str(MINIMAL).unwrap();
        let r = s.resolve(Path::new(".")).unwrap();
        assert!(r.electric.is_none() && r.magnetic.is_none());
        assert_eq!(s.scan.values(), vec![800.0, 1000.0, 1200.0, 1400.0]);
        assert_eq!(r.reference_sublevel.label(), "F2m2");
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        let bad = MINIMAL.replace("s_parallel = 8.0", "s_parallel = 8.0\nspeed = 3");
        assert!(matches!(
            Scenario::from_toml_str(&bad),
            Err(Error::Config { .. })
        ));
        let v2 = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert_eq!(
            path_of(Scenario::from_toml_str(&v2).unwrap_err()),
            "schema_version"
        );
    }

    #[test]
    fn diagnostics_carry_field_paths() {
        let cases = [
            (MINIMAL.replace("steps = 4", "steps = 0"), "scan.steps"),
            (MINIMAL.replace("v_m = 1065.0", "v_m = -1.0"), "beam.v_m"),
            (
                format!("{MINIMAL}\n[populations]\nchi = 0.5\n"),
                "populations.chi",
            ),
            (
                format!("{MINIMAL}\n[atom]\npreset = \"cs133\"\n"),
                "atom.preset",
            ),
            (
                MINIMAL.replace("variable = \"velocity\"", "variable = \"voltage\""),
                "scan.variable",
            ),
        ];
        for (text, expected) in cases {
            let err = Scenario::from_toml_str(&text)
                .and_then(|s| s.resolve(Path::new(".")))
                .unwrap_err();
            assert_eq!(path_of(err), expected);
        }
    }

    #[test]
    fn chi_from_pumping_parameters() {
        let text = format!("{MINIMAL}\n[populations]\nbeta_hz = 3.65e9\ndelta_l_hz = 2.0e9\nomega_hfs_hz = 0.803e9\n");
        let r = Scenario::from_toml_str(&text)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        assert!(r.beam.chi > 1e-3 && r.beam.chi < 3e-3);
    }

    #[test]
    fn tuned_ratio_for_unequal_capacitors() {
        let text = format!("{MINIMAL}\n[electric]\nenabled = true\nspacing_upper = 0.51e-3\n");
        let r = Scenario::from_toml_str(&text)
            .unwrap()
            .resolve(Path::new("."))
            .unwrap();
        let e = r.electric.unwrap();
        let expected =
            (e.length_lower * 0.51e-3f64.powi(2) / (e.length_upper * 0.5e-3f64.powi(2))).sqrt();
        assert!((e.voltage_ratio - expected).abs() < 1e-15);
    }

    #[test]
    fn csv_side_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("sep.csv"),
            "z,dx\n0.0,0.0\n0.6,1e-4\n1.2,0.0\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("b.csv"),
            "z,b,dbdx\n0.5,0.01,0.02\n0.55,0.012,0.02\n0.6,0.01,0.02\n",
        )
        .unwrap();
        let text = format!(
            "{MINIMAL}\n[geometry]\nseparation_csv = \"sep.csv\"\n[magnetic]\nenabled = true\nprofile_csv = \"b.csv\"\n"
        );
        let r = Scenario::from_toml_str(&text)
            .unwrap()
            .resolve(dir.path())
            .unwrap();
        assert_eq!(r.separation.peak(), 1e-4);
        assert_eq!(r.magnetic.unwrap().reference.support(), (0.5, 0.6));

        let missing = text.replace("b.csv", "nope.csv");
        let err = Scenario::from_toml_str(&missing)
            .unwrap()
            .resolve(dir.path())
            .unwrap_err();
        assert_eq!(path_of(err), "magnetic.profile_csv");
    }
}
