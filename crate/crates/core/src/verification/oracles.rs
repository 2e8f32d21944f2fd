//! Slow, independent reference computations used by tests and by the
//! acceptance checks. None of them shares a numerical path with the code it
//! checks: different quadrature rules, explicit matrices, or a different
//! algebraic route to the same quantity.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::averaging::BeamModel;
use crate::geometry::{Arm, ArmSeparationProfile, CapacitorGeometry, MagneticFieldProfile};
use crate::hyperfine::{breit_rabi_energy, AtomModel, Sublevel};
use crate::quadrature::adaptive_simpson;

/// Sorted eigenvalues of `A I·S − g_S μ_B S_z B − g_I μ_B I_z B` for I = 3/2, S = 1/2,
/// from an explicit 8×8 matrix in the |m_I, m_S⟩ basis.
pub fn hyperfine_eigenvalues(atom: &AtomModel, b: f64) -> Vec<f64> {
    let mi = [1.5, 0.5, -0.5, -1.5];
    let ms = [0.5, -0.5];
    let idx = |i: usize, s: usize| 2 * i + s;
    let a = atom.hyperfine_constant_a;
    let mu = atom.bohr_magneton;
    let mut h = DMatrix::<f64>::zeros(8, 8);
    for i in 0..4 {
        for s in 0..2 {
            h[(idx(i, s), idx(i, s))] =
                a * mi[i] * ms[s] - atom.g_s * mu * ms[s] * b - atom.g_i * mu * mi[i] * b;
        }
    }
    // (A/2)(I₊S₋ + I₋S₊): |m_I, +½⟩ ↔ |m_I + 1, −½⟩.
    let j = 1.5f64;
    for i in 1..4 {
        let m = mi[i];
        let raise = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
        let v = 0.5 * a * raise;
        h[(idx(i, 0), idx(i - 1, 1))] = v;
        h[(idx(i - 1, 1), idx(i, 0))] = v;
    }
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// χ from normalized detected populations: each sublevel is transmitted with
/// weight sin⁴(β/δ_F) and P(F = 1, m) = (1 + 5χ)/8 is then solved for χ.
/// Arguments in Hz; only ratios enter.
pub fn chi_brute_force(beta_hz: f64, delta_hz: f64, omega_hz: f64) -> f64 {
    let weight = |f: u8| {
        let detuning = if f == 1 {
            delta_hz
        } else {
            delta_hz + omega_hz
        };
        (beta_hz / detuning).sin().powi(4)
    };
    let raw: Vec<(u8, f64)> = Sublevel::ALL
        .iter()
        .map(|s| (s.f(), weight(s.f())))
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let p1 = raw
        .iter()
        .find(|(f, _)| *f == 1)
        .map(|(_, w)| w / total)
        .unwrap();
    (8.0 * p1 - 1.0) / 5.0
}

/// Two capacitors on y ∈ [−1, 1] mm with y-dependent spacing and length, a
/// zero-mean sinusoidal spacing defect of amplitude `defect_amp` and a smooth
/// contact potential of scale `contact_amp` (V).
pub fn synthetic_capacitor_pair(
    v_l: f64,
    v_u: f64,
    defect_amp: f64,
    contact_amp: f64,
) -> (CapacitorGeometry, CapacitorGeometry) {
    let y: Vec<f64> = (0..=8).map(|i| -1e-3 + 0.25e-3 * i as f64).collect();
    let s: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
    let build = |arm: Arm, voltage: f64, phase: f64, tilt: f64| {
        let mean_spacing = y
            .iter()
            .map(|yy| 0.5e-3 * (1.0 + tilt * yy / 1e-3))
            .collect();
        let length = y
            .iter()
            .map(|yy| 47.68e-3 * (1.0 - 0.5 * tilt * yy / 1e-3))
            .collect();
        let defect = y
            .iter()
            .map(|yy| {
                let row: Vec<f64> = s
                    .iter()
                    .map(|ss| {
                        defect_amp
                            * (1.0 + 0.3 * yy / 1e-3)
                            * ((2.0 * std::f64::consts::PI * ss + phase).sin()
                                + 0.4 * (4.0 * std::f64::consts::PI * ss).cos())
                    })
                    .collect();
                let mean: f64 = s
                    .windows(2)
                    .zip(row.windows(2))
                    .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
                    .sum();
                row.iter().map(|v| v - mean).collect()
            })
            .collect();
        let contact = y
            .iter()
            .map(|yy| {
                s.iter()
                    .map(|ss| contact_amp * (0.3 + 0.7 * ss * ss + 0.2 * yy / 1e-3 + phase))
                    .collect()
            })
            .collect();
        CapacitorGeometry::new(
            arm,
            y.clone(),
            s.clone(),
            mean_spacing,
            length,
            defect,
            contact,
            voltage,
        )
        .expect("synthetic capacitor is valid")
    };
    (
        build(Arm::Lower, v_l, 0.0, 0.02),
        build(Arm::Upper, v_u, 0.7, -0.01),
    )
}

/// ∫E² dz at height y by adaptive Simpson on the capacitor's own field
/// evaluation, one call per normalized-grid cell so the kinks of the bilinear
/// interpolation sit on panel edges.
pub fn brute_force_field_squared(cap: &CapacitorGeometry, y: f64) -> f64 {
    let l = cap.length_at(y).unwrap();
    let e0 = cap.defective_field(y, 0.5 * l).unwrap();
    let tol = 1e-15 * e0 * e0 * l;
    cap.s()
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0] * l, w[1] * l);
            adaptive_simpson(
                |z| {
                    let e = cap.defective_field(y, z.clamp(0.0, l)).unwrap();
                    e * e
                },
                a,
                b,
                tol * (w[1] - w[0]),
                4,
            )
            .unwrap()
        })
        .sum()
}

fn separation_pieces(sep: &ArmSeparationProfile, lo: f64, hi: f64) -> Vec<(f64, f64, f64, f64)> {
    // (z_a, z_b, δx_a, δx_b) for every linear piece intersecting [lo, hi].
    let z = sep.profile().coordinates();
    let v = sep.profile().values();
    let mut out = Vec::new();
    for i in 0..z.len() - 1 {
        let (a, b) = (z[i].max(lo), z[i + 1].min(hi));
        if b <= a {
            continue;
        }
        let at = |x: f64| v[i] + (v[i + 1] - v[i]) * (x - z[i]) / (z[i + 1] - z[i]);
        out.push((a, b, at(a), at(b)));
    }
    out
}

/// J₁ for a Gaussian gradient `g0 exp(−((z − z0)/w)²)` on [z0 − 8w, z0 + 8w],
/// integrated with adaptive Simpson against the analytic Gaussian.
pub fn gaussian_bump_j1(
    atom: &AtomModel,
    g0: f64,
    z0: f64,
    w: f64,
    sep: &ArmSeparationProfile,
    v: f64,
) -> f64 {
    let mut total = 0.0;
    for (a, b, da, db) in separation_pieces(sep, z0 - 8.0 * w, z0 + 8.0 * w) {
        let integrand = |z: f64| {
            let dx = da + (db - da) * (z - a) / (b - a);
            g0 * (-((z - z0) / w).powi(2)).exp() * dx
        };
        total += adaptive_simpson(integrand, a, b, 1e-22, 64).unwrap();
    }
    atom.bohr_magneton / (atom.hbar * v) * total
}

/// Phase from exact Breit-Rabi energies on the two arms,
/// `(1/ħv)∫[E(B + Gδx/2) − E(B − Gδx/2)] dz`.
pub fn zeeman_path_difference(
    atom: &AtomModel,
    s: Sublevel,
    field: &MagneticFieldProfile,
    sep: &ArmSeparationProfile,
    v: f64,
) -> f64 {
    let (lo, hi) = field.support();
    let mut breaks: Vec<f64> = field
        .modulus()
        .coordinates()
        .iter()
        .chain(field.gradient().coordinates())
        .chain(sep.profile().coordinates())
        .copied()
        .filter(|z| *z > lo && *z < hi)
        .collect();
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let scale = atom.bohr_magneton * field.gradient().max_abs() * sep.peak();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let f = |z: f64| {
            let b = field.modulus().eval(z).unwrap();
            let g = field.gradient().eval(z).unwrap();
            let dx = sep.eval(z).unwrap();
            breit_rabi_energy(atom, s, b + 0.5 * g * dx).unwrap()
                - breit_rabi_energy(atom, s, b - 0.5 * g * dx).unwrap()
        };
        total += adaptive_simpson(f, w[0], w[1], 1e-13 * scale * (w[1] - w[0]), 8).unwrap();
    }
    total / (atom.hbar * v)
}

/// ⟨exp(iφ(v_m/v)ⁿ)⟩ by composite Simpson on `npts` (even) uniform panels over
/// v_m(1 ± 10/S), normalized on the same grid.
pub fn velocity_average_fixed_grid(beam: &BeamModel, n: u32, phi: f64, npts: usize) -> Complex64 {
    let npts = npts + npts % 2;
    let s = beam.s_parallel;
    let lo = (beam.v_m * (1.0 - 10.0 / s)).max(1e-3 * beam.v_m);
    let hi = beam.v_m * (1.0 + 10.0 / s);
    let h = (hi - lo) / npts as f64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for k in 0..=npts {
        let v = lo + h * k as f64;
        let w = if k == 0 || k == npts {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let u = (v - beam.v_m) * s / beam.v_m;
        let p = (-u * u).exp();
        num += w * p * Complex64::from_polar(1.0, phi * (beam.v_m / v).powi(n as i32));
        den += w * p;
    }
    num / den
}

/// Σ wᵢ e^{iφᵢ}.
pub fn direct_phase_average(weights: &[f64], phi: &[f64]) -> Complex64 {
    weights
        .iter()
        .zip(phi)
        .map(|(w, p)| Complex64::from_polar(*w, *p))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_at_zero_field() {
        let atom = AtomModel::li7();
        let e = hyperfine_eigenvalues(&atom, 0.0);
        let a = atom.hyperfine_constant_a;
        // F = 1: −5A/4 (three states), F = 2: +3A/4 (five states).
        for x in &e[..3] {
            assert!((x + 1.25 * a).abs() < 1e-12 * a);
        }
        for x in &e[3..] {
            assert!((x - 0.75 * a).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn chi_oracle_limits() {
        assert!(chi_brute_force(1e9, 2e9, 0.0).abs() < 1e-15);
        let c = chi_brute_force(3.65e9, 2e9, 0.803e9);
        assert!((-0.2..=1.0 / 3.0).contains(&c));
    }

    #[test]
    fn direct_average_two_points() {
        let c = direct_phase_average(&[0.5, 0.5], &[0.3, -0.3]);
        assert!((c.re - 0.3f64.cos()).abs() < 1e-15 && c.im.abs() < 1e-16);
    }
}
