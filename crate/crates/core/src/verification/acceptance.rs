//! The acceptance suite behind `hmw check`: one pass/fail line per criterion,
//! tolerances fixed here and nowhere else.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles;
use crate::averaging::{
    linear_zeeman_visibility, moment_expansion, quadratic_zeeman_visibility, velocity_average,
    velocity_average_analytic, visibility_correlation, wrap_phase, BeamModel,
};
use crate::constants::PLANCK;
use crate::dynamics::{
    cancellation_check, grid_around_path, straight_path, ElectricGenerator, Vec3,
};
use crate::geometry::{defaults, TrajectoryDistribution};
use crate::hyperfine::{
    breit_rabi_energy, population_unbalance, zeeman_slope_exact, zeeman_slope_expansion, AtomModel,
    LandeFactors, Sublevel,
};
use crate::phases::{
    aharonov_casher_phase, hmw_phase, sagnac_phase, stark_phase_arm, stark_phase_ideal,
    tuned_upper_voltage, BranchConvention, TwoCoilModel,
};
use crate::scenario::{fit_two_coil_j1, point_phases, run_scenario, write_csv, J1Point, Scenario};
use crate::Result;

/// Criteria that cannot pass with a faithful implementation. They are still
/// evaluated and reported as failures.
///
/// 9: the second-order velocity expansion drifts from the quadrature by
/// 2.8e-3 in modulus at φ = 4 rad (S∥ = 8), beyond the 1e-3 tolerance once
/// φ exceeds about 2.3 rad.
pub const KNOWN_UNATTAINABLE: &[u32] = &[9];

/// The two-coil visibility scenario swept over the main coil current.
pub const CURRENT_SWEEP_SCENARIO: &str = include_str!("../../../../scenarios/current_sweep.toml");

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u32, name: &'static str, r: Result<(bool, String)>) -> CriterionResult {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name,
        pass,
        detail,
    }
}

fn sub(f: u8, m: i8) -> Sublevel {
    Sublevel::new(f, m).expect("valid sublevel")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn hyperfine_splitting() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let split = 2.0 * atom.hyperfine_constant_a / PLANCK / 1e6;
    let k = atom.x_per_tesla();
    let pass = rel(split, 803.0) <= 5e-3 && rel(k, 34.9) <= 5e-3;
    Ok((pass, format!("2A/h = {split:.3} MHz, X/B = {k:.4} T^-1")))
}

/// Error of the slope expansion over |X| ≤ 0.5, relative to the largest exact
/// slope of the same sublevel on that range. A pointwise ratio is meaningless
/// for m_F = −1 in F = 1 (and +1 in F = 2), whose slope passes through zero near X = 0.5.
pub fn expansion_tolerances() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let (mut e1, mut e0, mut e2) = (0.0f64, 0.0f64, 0.0f64);
    for s in Sublevel::ALL {
        let (mut err, mut scale) = (0.0f64, 0.0f64);
        for k in -50..=50 {
            let x = 0.01 * k as f64;
            let exact = zeeman_slope_exact(&atom, s, x)?;
            err = err.max((zeeman_slope_expansion(&atom, s, x)? - exact).abs());
            scale = scale.max(exact.abs());
        }
        let r = err / scale;
        match s.m().abs() {
            2 => e2 = e2.max(r),
            1 => e1 = e1.max(r),
            _ => e0 = e0.max(r),
        }
    }
    let pass = e1 <= 0.03 && e0 <= 0.12 && e2 <= 1e-12;
    Ok((
        pass,
        format!("max error / full-scale slope |m|=1: {e1:.4}, m=0: {e0:.4}, stretched: {e2:.1e}"),
    ))
}

pub fn breit_rabi_vs_diagonalization() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let b = rng.gen_range(0.0..14e-3);
        let mut closed = Sublevel::ALL
            .iter()
            .map(|&s| breit_rabi_energy(&atom, s, b))
            .collect::<Result<Vec<_>>>()?;
        closed.sort_by(f64::total_cmp);
        let numeric = oracles::hyperfine_eigenvalues(&atom, b);
        for (c, n) in closed.iter().zip(&numeric) {
            worst = worst.max(((c - n) / n).abs());
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max relative deviation {worst:.2e} over 100 fields"),
    ))
}

pub fn sagnac() -> Result<(bool, String)> {
    let phi = sagnac_phase(&AtomModel::li7(), 1065.0)?;
    Ok((
        rel(phi, 0.646) <= 5e-3,
        format!("phi = {phi:.5} rad at 1065 m/s"),
    ))
}

pub fn stark() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let l = defaults::capacitor_length();
    let h = defaults::CAPACITOR_SPACING;
    let single = stark_phase_arm(&atom, defaults::CAPACITOR_VOLTAGE, h, l, 1065.0)?;
    let (h_u, l_u) = (1.02 * h, 0.99 * l);
    let v_u = tuned_upper_voltage(defaults::CAPACITOR_VOLTAGE, h, l, h_u, l_u)?;
    let mut worst = 0.0f64;
    for v in [700.0, 1065.0, 1800.0] {
        let d = stark_phase_ideal(&atom, defaults::CAPACITOR_VOLTAGE, h, l, v_u, h_u, l_u, v)?;
        worst = worst.max(d.abs());
    }
    let pass = (250.0..=400.0).contains(&single) && worst <= 1e-10;
    Ok((
        pass,
        format!("single arm {single:.1} rad, tuned residual {worst:.1e} rad"),
    ))
}

pub fn revivals() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let beam = BeamModel::new(1065.0, 8.0, 0.0)?;
    let mut approx_dev = 0.0f64;
    let mut exact_min = f64::INFINITY;
    for k in [1.0, 2.0] {
        let j1 = 4.0 * PI * k;
        let a = linear_zeeman_visibility(&atom, j1, 0.0, &beam, false, LandeFactors::Approximate)?;
        approx_dev = approx_dev.max((a.modulus() - 1.0).abs());
        let e = linear_zeeman_visibility(&atom, j1, 0.0, &beam, false, LandeFactors::Exact)?;
        exact_min = exact_min.min(e.modulus());
    }
    let zero =
        linear_zeeman_visibility(&atom, 0.0, 0.0, &beam, true, LandeFactors::Exact)?.modulus();
    let revived =
        linear_zeeman_visibility(&atom, 4.0 * PI, 0.0, &beam, true, LandeFactors::Exact)?.modulus();
    let pass = approx_dev <= 1e-12 && exact_min >= 0.999 && revived < zero;
    Ok((
        pass,
        format!(
            "|1 - V| approx {approx_dev:.1e}, exact min {exact_min:.6}, averaged revival {revived:.4} < {zero:.4}"
        ),
    ))
}

pub fn closed_form() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let j1 = rng.gen_range(-10.0..10.0);
        let j2 = rng.gen_range(-2.0..2.0);
        let chi = rng.gen_range(-0.2..1.0 / 3.0);
        let q = quadratic_zeeman_visibility(&atom, j1, j2, chi, BranchConvention::Printed)?;
        re = re.max((q.direct.re - q.closed_form.re).abs());
        im = im.max((q.direct.im - q.closed_form.im).abs());
    }
    Ok((
        re <= 1e-12 && im <= 1e-12,
        format!("max |dRe| {re:.1e}, |dIm| {im:.1e} over 1000 draws"),
    ))
}

pub fn moment_expansion_check() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..41).map(|i| -1e-3 + 5e-5 * i as f64).collect();
    let density: Vec<f64> = y.iter().map(|v| (-(v / 6e-4) * (v / 6e-4)).exp()).collect();
    let p = TrajectoryDistribution::normalized(y, density)?;
    let n = p.y().len();
    let (mut dv, mut dp, mut ratio) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst_residual = 0.0f64;
    for _ in 0..200 {
        let base = rng.gen_range(-3.0..3.0);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean: f64 = p.weights().iter().zip(&raw).map(|(w, r)| w * r).sum();
            let peak = raw.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
            raw.iter().map(|r| 0.3 * (r - mean) / peak).collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let phi: Vec<f64> = a.iter().map(|x| base + x).collect();
        let m = moment_expansion(&p, &phi)?;
        let direct = oracles::direct_phase_average(&p.weights(), &phi);
        dv = dv.max((m.visibility_ratio - direct.norm()).abs());
        dp = dp.max(wrap_phase(m.phase - direct.arg()).abs());
        let c = visibility_correlation(&p, &a, &b)?;
        let ma = 2.0 * (1.0 - c.v_ra);
        let mb = 2.0 * (1.0 - c.v_rb);
        let scale = (ma + mb + c.corr.abs()).powi(2);
        ratio = ratio.max(c.residual.abs() / scale);
        worst_residual = worst_residual.max(c.residual.abs());
    }
    let pass = dv <= 1e-3 && dp <= 1e-3 && ratio <= 1.0;
    Ok((
        pass,
        format!(
            "max |dV| {dv:.1e}, |dphi| {dp:.1e} rad; product identity residual {worst_residual:.1e} ({ratio:.2} of (m2a+m2b+|c|)^2)"
        ),
    ))
}

pub fn velocity_expansion() -> Result<(bool, String)> {
    let beam = BeamModel::new(1065.0, 8.0, 0.0)?;
    let (mut dv, mut dp, mut at) = (0.0f64, 0.0f64, 0.0);
    for k in 1..=16 {
        let phi = 0.25 * k as f64;
        let q = velocity_average(&beam, 1, phi, 0.0)?;
        let a = velocity_average_analytic(&beam, 1, phi);
        let v = (q.modulus() - a.modulus()).abs();
        if v > dv {
            at = phi;
        }
        dv = dv.max(v);
        dp = dp.max(wrap_phase(q.phase() - a.phase()).abs());
    }
    Ok((
        dv <= 1e-3 && dp <= 1e-3,
        format!("max |dV| {dv:.2e} (at phi = {at} rad), |dphi| {dp:.2e} rad for phi <= 4"),
    ))
}

fn velocity_scan(v0: f64, v1: f64) -> Result<crate::scenario::ResolvedScenario> {
    let text = format!(
        "schema_version = 1\n[beam]\nv_m = 1065.0\ns_parallel = 8.0\n\
         [electric]\nenabled = true\n[magnetic]\nenabled = true\n\
         [scan]\nvariable = \"velocity\"\nstart = {v0:?}\nstop = {v1:?}\nsteps = 2\n"
    );
    Scenario::from_toml_str(&text)?.resolve(Path::new("."))
}

pub fn topological() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let s = velocity_scan(1065.0, 10650.0)?;
    let slow = point_phases(&s, &s.operating_point(1065.0))?;
    let fast = point_phases(&s, &s.operating_point(10650.0))?;
    let invariant = slow.hmw.to_bits() == fast.hmw.to_bits()
        && slow
            .aharonov_casher
            .iter()
            .zip(&fast.aharonov_casher)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    let f = defaults::field_assembly();
    let hmw = hmw_phase(&atom, &f)?;
    let odd = hmw_phase(&atom, &f.with_reversed_b())? == -hmw;
    let ac = aharonov_casher_phase(&atom, sub(2, 2), &f)?;
    let pass = invariant && odd && rel(ac.abs(), 0.070) <= 0.2 && rel(hmw.abs(), 0.027) <= 0.15;
    Ok((
        pass,
        format!(
            "bit-exact at v and 10v: {invariant}, odd in B: {odd}, |AC| {:.1} mrad, |HMW| {:.1} mrad",
            1e3 * ac.abs(),
            1e3 * hmw.abs()
        ),
    ))
}

pub fn force_cancellation() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let g = ElectricGenerator::LineCharge {
        lambda: 1e-9,
        x0: 0.0,
        z0: 0.0,
    };
    let b = Vec3::new(0.0, 1.4e-2, 0.0);
    let v = Vec3::new(0.0, 0.0, 1065.0);
    let path = straight_path(2e-3, 0.0, 1e-3, 3e-3, 41);
    let run = |h: f64| -> Result<f64> {
        let grid = grid_around_path(&g, b, &path, h, atom.epsilon0)?;
        Ok(
            cancellation_check(&grid, &path, &v, atom.polarizability_alpha, atom.epsilon0)?
                .max_residual,
        )
    };
    let coarse = run(4e-6)?;
    let fine = run(2e-6)?;
    let ratio = coarse / fine;
    let pass = fine <= 1e-6 && (3.0..5.0).contains(&ratio);
    Ok((
        pass,
        format!("residual {coarse:.2e} -> {fine:.2e}, refinement ratio {ratio:.2}"),
    ))
}

pub fn fit_round_trip() -> Result<(bool, String)> {
    let truth = TwoCoilModel {
        a_j1: 0.5,
        i0: 0.2,
        a_j1c: 0.1,
        i0c: -0.3,
        j0: 0.05,
    };
    let data: Vec<J1Point> = (0..20)
        .map(|k| {
            let i = -1.0 + 2.0 * k as f64 / 19.0;
            let i_c = -1.0 + 2.0 * ((7 * k) % 20) as f64 / 19.0;
            J1Point {
                i,
                i_c,
                j1: truth.j1(i, i_c),
            }
        })
        .collect();
    let start = Instant::now();
    let r = fit_two_coil_j1(&data)?;
    let elapsed = start.elapsed().as_secs_f64();
    let m = r.model;
    let worst = [
        rel(m.a_j1, truth.a_j1),
        rel(m.i0, truth.i0),
        rel(m.a_j1c, truth.a_j1c),
        rel(m.i0c, truth.i0c),
        rel(m.j0, truth.j0),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok((
        worst <= 0.01 && elapsed <= 10.0,
        format!("worst relative parameter error {worst:.1e}, {elapsed:.3} s"),
    ))
}

pub fn population_unbalance_check() -> Result<(bool, String)> {
    let atom = AtomModel::li7();
    let omega_hz = atom.hfs_angular_frequency() / (2.0 * PI);
    let chi = population_unbalance(
        2.0 * PI * 3.65e9,
        2.0 * PI * 2e9,
        atom.hfs_angular_frequency(),
    )?;
    let brute = oracles::chi_brute_force(3.65e9, 2e9, omega_hz);
    let diff = (chi - brute).abs();
    let max_step = |n: usize| -> Result<f64> {
        let mut prev: Option<f64> = None;
        let mut worst = 0.0f64;
        for k in 0..=n {
            let d = 1e9 + 3e9 * k as f64 / n as f64;
            let c = population_unbalance(
                2.0 * PI * 3.65e9,
                2.0 * PI * d,
                atom.hfs_angular_frequency(),
            )?;
            if let Some(p) = prev {
                worst = worst.max((c - p).abs());
            }
            prev = Some(c);
        }
        Ok(worst)
    };
    let (coarse, fine) = (max_step(300)?, max_step(600)?);
    let halving = coarse / fine;
    let pass = diff <= 1e-12 && (-0.2..=1.0 / 3.0).contains(&chi) && (1.8..=2.2).contains(&halving);
    Ok((
        pass,
        format!("chi = {chi:.6e}, |chi - brute| {diff:.1e}, max step ratio under refinement {halving:.3}"),
    ))
}

/// Two runs of `scenario` rendered to CSV bytes.
pub fn determinism_of(scenario: &str) -> Result<(bool, String)> {
    let render = || -> Result<Vec<u8>> {
        let s = Scenario::from_toml_str(scenario)?.resolve(Path::new("."))?;
        let mut buf = Vec::new();
        write_csv(&run_scenario(&s)?, &mut buf)?;
        Ok(buf)
    };
    let (a, b) = (render()?, render()?);
    Ok((a == b, format!("{} bytes, identical: {}", a.len(), a == b)))
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        outcome(1, "hyperfine splitting", hyperfine_splitting()),
        outcome(2, "expansion tolerances", expansion_tolerances()),
        outcome(
            3,
            "Breit-Rabi vs diagonalization",
            breit_rabi_vs_diagonalization(),
        ),
        outcome(4, "Sagnac phase", sagnac()),
        outcome(5, "Stark magnitude and tuning", stark()),
        outcome(6, "visibility revivals", revivals()),
        outcome(7, "quadratic closed form", closed_form()),
        outcome(8, "moment expansion", moment_expansion_check()),
        outcome(9, "velocity-average expansion", velocity_expansion()),
        outcome(10, "topological invariances", topological()),
        outcome(11, "force cancellation", force_cancellation()),
        outcome(12, "two-coil fit round trip", fit_round_trip()),
        outcome(13, "population unbalance", population_unbalance_check()),
        outcome(14, "determinism", determinism_of(CURRENT_SWEEP_SCENARIO)),
    ]
}
