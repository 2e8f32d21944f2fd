use serde::{Deserialize, Serialize};

use super::TrajectoryDistribution;
use crate::quadrature::{gauss_legendre_segments, GaussOrder};
use crate::{Error, Result};

/// Which arm a capacitor acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Lower,
    Upper,
}

/// Plane capacitor with spacing and contact-potential defects.
///
/// The local spacing is `h(y, z) = h̄(y)[1 + δ(y, z)]`. Defect grids are stored
/// on a normalized longitudinal coordinate `s = z / L(y)` in `[0, 1]`, so that
/// every trajectory spans the same grid columns whatever its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitorGeometry {
    pub arm: Arm,
    y: Vec<f64>,
    s: Vec<f64>,
    mean_spacing: Vec<f64>,
    length: Vec<f64>,
    /// δ[iy][is]
    defect: Vec<Vec<f64>>,
    /// V_c[iy][is]
    contact: Vec<Vec<f64>>,
    pub voltage: f64,
}

/// Largest |δ| accepted by [`CapacitorGeometry::new`].
pub const DEFAULT_MAX_DEFECT: f64 = 0.05;

impl CapacitorGeometry {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        arm: Arm,
        y: Vec<f64>,
        s: Vec<f64>,
        mean_spacing: Vec<f64>,
        length: Vec<f64>,
        defect: Vec<Vec<f64>>,
        contact: Vec<Vec<f64>>,
        voltage: f64,
    ) -> Result<Self> {
        Self::with_defect_bound(
            arm,
            y,
            s,
            mean_spacing,
            length,
            defect,
            contact,
            voltage,
            DEFAULT_MAX_DEFECT,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_defect_bound(
        arm: Arm,
        y: Vec<f64>,
        s: Vec<f64>,
        mean_spacing: Vec<f64>,
        length: Vec<f64>,
        defect: Vec<Vec<f64>>,
        contact: Vec<Vec<f64>>,
        voltage: f64,
        max_defect: f64,
    ) -> Result<Self> {
        let strictly_increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !strictly_increasing(&y) {
            return Err(Error::InvalidProfile(
                "capacitor y grid needs ≥ 2 strictly increasing samples".into(),
            ));
        }
        if !strictly_increasing(&s) || s[0] != 0.0 || s[s.len() - 1] != 1.0 {
            return Err(Error::InvalidProfile(
                "normalized z grid must increase strictly from 0 to 1".into(),
            ));
        }
        if mean_spacing.len() != y.len() || length.len() != y.len() {
            return Err(Error::InvalidProfile(
                "h̄(y) and L(y) need one value per y sample".into(),
            ));
        }
        if mean_spacing
            .iter()
            .chain(&length)
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidProfile("h̄(y) and L(y) must be > 0".into()));
        }
        for (name, grid) in [("δ", &defect), ("V_c", &contact)] {
            if grid.len() != y.len() || grid.iter().any(|row| row.len() != s.len()) {
                return Err(Error::InvalidProfile(format!(
                    "{name} grid must be {} × {}",
                    y.len(),
                    s.len()
                )));
            }
            if grid.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProfile(format!("non-finite {name} sample")));
            }
        }
        let worst = defect.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > max_defect {
            return Err(Error::InvalidProfile(format!(
                "max |δ| = {worst} exceeds {max_defect}"
            )));
        }
        for (i, row) in defect.iter().enumerate() {
            let mean = row_mean(&s, row);
            if mean.abs() > 1e-10 {
                return Err(Error::InvalidProfile(format!(
                    "δ row {i} has longitudinal mean {mean}, must be 0"
                )));
            }
        }
        if !voltage.is_finite() {
            return Err(Error::InvalidProfile("non-finite voltage".into()));
        }
        Ok(CapacitorGeometry {
            arm,
            y,
            s,
            mean_spacing,
            length,
            defect,
            contact,
            voltage,
        })
    }

    /// Defect-free capacitor of spacing `h` and effective length `length` on `[y0, y1]`.
    pub fn ideal(arm: Arm, voltage: f64, h: f64, length: f64, y0: f64, y1: f64) -> Result<Self> {
        CapacitorGeometry::new(
            arm,
            vec![y0, y1],
            vec![0.0, 1.0],
            vec![h, h],
            vec![length, length],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.0; 2]; 2],
            voltage,
        )
    }

    pub fn with_voltage(&self, voltage: f64) -> Self {
        CapacitorGeometry {
            voltage,
            ..self.clone()
        }
    }

    /// Same geometry with the contact potentials multiplied by `k`.
    pub fn with_contact_scaled(&self, k: f64) -> Self {
        CapacitorGeometry {
            contact: self
                .contact
                .iter()
                .map(|row| row.iter().map(|v| k * v).collect())
                .collect(),
            ..self.clone()
        }
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y[0], self.y[self.y.len() - 1])
    }

    fn locate_y(&self, y: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.y_range();
        if !(y >= lo && y <= hi) {
            return Err(Error::OutOfGrid {
                what: "capacitor y grid",
                value: y,
                min: lo,
                max: hi,
            });
        }
        Ok(locate(&self.y, y))
    }

    pub fn mean_spacing_at(&self, y: f64) -> Result<f64> {
        let (i, t) = self.locate_y(y)?;
        Ok(lerp(&self.mean_spacing, i, t))
    }

    pub fn length_at(&self, y: f64) -> Result<f64> {
        let (i, t) = self.locate_y(y)?;
        Ok(lerp(&self.length, i, t))
    }

    /// Rows of δ and V_c interpolated linearly to height y.
    fn rows_at(&self, y: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (i, t) = self.locate_y(y)?;
        let blend = |grid: &[Vec<f64>]| -> Vec<f64> {
            if t == 0.0 {
                return grid[i].clone();
            }
            let (a, b) = (&grid[i], &grid[i + 1]);
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };
        Ok((blend(&self.defect), blend(&self.contact)))
    }

    /// Field magnitude (V + V_c)/h at height y and distance z from the entrance.
    pub fn defective_field(&self, y: f64, z: f64) -> Result<f64> {
        let l = self.length_at(y)?;
        if !(z >= 0.0 && z <= l) {
            return Err(Error::OutOfGrid {
                what: "capacitor length",
                value: z,
                min: 0.0,
                max: l,
            });
        }
        let (iy, ty) = self.locate_y(y)?;
        let (is, ts) = locate(&self.s, (z / l).min(1.0));
        let delta = bilinear(&self.defect, iy, ty, is, ts);
        let vc = bilinear(&self.contact, iy, ty, is, ts);
        let h = lerp(&self.mean_spacing, iy, ty) * (1.0 + delta);
        Ok((self.voltage + vc) / h)
    }

    /// ∫₀^{L(y)} E²(y, z) dz, with 10-point Gauss-Legendre on every grid cell.
    pub fn field_squared_integral(&self, y: f64) -> Result<f64> {
        let l = self.length_at(y)?;
        let h = self.mean_spacing_at(y)?;
        let (delta, vc) = self.rows_at(y)?;
        let s = &self.s;
        let v = self.voltage;
        let per_s = gauss_legendre_segments(s, GaussOrder::Ten, |x| {
            let (j, t) = locate(s, x);
            let d = lerp(&delta, j, t);
            let c = lerp(&vc, j, t);
            let e = (v + c) / (h * (1.0 + d));
            e * e
        });
        Ok(l * per_s)
    }

    /// Longitudinal mean of the contact potential, V̄_c(y).
    pub fn mean_contact_at(&self, y: f64) -> Result<f64> {
        let (_, vc) = self.rows_at(y)?;
        Ok(row_mean(&self.s, &vc))
    }

    /// L(y)/h̄(y)².
    pub fn length_over_spacing_squared(&self, y: f64) -> Result<f64> {
        let h = self.mean_spacing_at(y)?;
        Ok(self.length_at(y)? / (h * h))
    }

    /// Largest |δ| on the grid.
    pub fn max_defect(&self) -> f64 {
        self.defect
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_contact(&self) -> f64 {
        self.contact
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// η(y) defined by `L/h̄² = ⟨L/h̄²⟩(1 + η)`, sampled at the trajectory points of `p`.
///
/// ⟨·⟩ is the average under P(y), so ⟨η⟩ = 0 by construction.
pub fn eta_profile(cap: &CapacitorGeometry, p: &TrajectoryDistribution) -> Result<Vec<f64>> {
    let ratio: Vec<f64> = p
        .y()
        .iter()
        .map(|&y| cap.length_over_spacing_squared(y))
        .collect::<Result<_>>()?;
    let mean = p.average(&ratio)?;
    Ok(ratio.iter().map(|r| r / mean - 1.0).collect())
}

fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    match grid.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) if i + 1 == grid.len() => (i - 1, 1.0),
        Ok(i) => (i, 0.0),
        Err(i) => {
            let i = i.clamp(1, grid.len() - 1) - 1;
            (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
        }
    }
}

fn lerp(v: &[f64], i: usize, t: f64) -> f64 {
    if t == 0.0 {
        v[i]
    } else if t == 1.0 {
        v[i + 1]
    } else {
        v[i] + t * (v[i + 1] - v[i])
    }
}

fn bilinear(grid: &[Vec<f64>], iy: usize, ty: f64, is: usize, ts: f64) -> f64 {
    if ty == 0.0 {
        return lerp(&grid[iy], is, ts);
    }
    if ty == 1.0 {
        return lerp(&grid[iy + 1], is, ts);
    }
    let a = lerp(&grid[iy], is, ts);
    let b = lerp(&grid[iy + 1], is, ts);
    a + ty * (b - a)
}

/// Trapezoid mean over s ∈ [0, 1] (exact for piecewise-linear rows).
fn row_mean(s: &[f64], row: &[f64]) -> f64 {
    s.windows(2)
        .zip(row.windows(2))
        .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect_row(n: usize, amp: f64, phase: f64) -> Vec<f64> {
        // Zero-mean triangle-friendly row: sin sampled on a uniform grid, with
        // the trapezoid mean removed.
        let s: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let raw: Vec<f64> = s
            .iter()
            .map(|x| amp * (2.0 * std::f64::consts::PI * x + phase).sin())
            .collect();
        let m = row_mean(&s, &raw);
        raw.iter().map(|v| v - m).collect()
    }

    fn synthetic(arm: Arm, voltage: f64) -> CapacitorGeometry {
        let ny = 5;
        let ns = 9;
        let y: Vec<f64> = (0..ny)
            .map(|i| -1e-3 + 2e-3 * i as f64 / (ny - 1) as f64)
            .collect();
        let s: Vec<f64> = (0..ns).map(|i| i as f64 / (ns - 1) as f64).collect();
        let defect = (0..ny).map(|i| defect_row(ns, 0.01, i as f64)).collect();
        let contact = (0..ny)
            .map(|i| {
                (0..ns)
                    .map(|j| 0.05 + 0.01 * ((i + j) % 3) as f64)
                    .collect()
            })
            .collect();
        CapacitorGeometry::new(
            arm,
            y,
            s,
            vec![0.50e-3, 0.501e-3, 0.502e-3, 0.5e-3, 0.499e-3],
            vec![47.6e-3, 47.7e-3, 47.68e-3, 47.7e-3, 47.65e-3],
            defect,
            contact,
            voltage,
        )
        .unwrap()
    }

    #[test]
    fn ideal_field_is_v_over_h() {
        let c = CapacitorGeometry::ideal(Arm::Lower, 400.0, 0.5e-3, 47.68e-3, -1e-3, 1e-3).unwrap();
        let e = c.defective_field(0.0, 0.02).unwrap();
        assert!((e - 0.8e6).abs() < 1e-9);
    }

    #[test]
    fn contact_only_field() {
        let c = CapacitorGeometry::new(
            Arm::Upper,
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![1e-3, 1e-3],
            vec![0.05, 0.05],
            vec![vec![0.0; 2]; 2],
            vec![vec![0.1; 2]; 2],
            0.0,
        )
        .unwrap();
        assert!((c.defective_field(0.5, 0.01).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn spacing_defect_scales_field() {
        let mut c = CapacitorGeometry::ideal(Arm::Lower, 400.0, 0.5e-3, 0.05, 0.0, 1.0).unwrap();
        c.defect = vec![vec![0.01, 0.01]; 2];
        let e = c.defective_field(0.5, 0.025).unwrap();
        assert!((e - 0.8e6 / 1.01).abs() < 1e-6);
    }

    #[test]
    fn grid_samples_reproduced_and_bounds_enforced() {
        let c = synthetic(Arm::Lower, 100.0);
        for (iy, &y) in c.y().iter().enumerate() {
            let l = c.length_at(y).unwrap();
            assert_eq!(l, c.length[iy]);
            for (is, &s) in c.s().iter().enumerate() {
                let h = c.mean_spacing[iy] * (1.0 + c.defect[iy][is]);
                let expected = (100.0 + c.contact[iy][is]) / h;
                let got = c.defective_field(y, s * l).unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected);
            }
        }
        assert!(c.defective_field(2e-3, 0.0).is_err());
        assert!(c.defective_field(0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_nonzero_mean_defect_and_large_defect() {
        let bad_mean = CapacitorGeometry::new(
            Arm::Lower,
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![1e-3, 1e-3],
            vec![0.05, 0.05],
            vec![vec![0.01, 0.01]; 2],
            vec![vec![0.0; 2]; 2],
            1.0,
        );
        assert!(bad_mean.is_err());
        let big = CapacitorGeometry::new(
            Arm::Lower,
            vec![0.0, 1.0],
            vec![0.0, 0.5, 1.0],
            vec![1e-3, 1e-3],
            vec![0.05, 0.05],
            vec![vec![-0.1, 0.1, -0.1]; 2],
            vec![vec![0.0; 3]; 2],
            1.0,
        );
        assert!(big.is_err());
    }

    #[test]
    fn eta_is_zero_mean_and_matches_definition() {
        let c = synthetic(Arm::Lower, 100.0);
        let p = TrajectoryDistribution::normalized(
            (0..21).map(|i| -1e-3 + 1e-4 * i as f64).collect(),
            (0..21).map(|i| 1.0 + 0.3 * (i as f64 / 20.0)).collect(),
        )
        .unwrap();
        let eta = eta_profile(&c, &p).unwrap();
        assert!(p.average(&eta).unwrap().abs() < 1e-12);
        // Brute-force: ratio and its weighted mean computed from scratch.
        let w = p.weights();
        let ratio: Vec<f64> = p
            .y()
            .iter()
            .map(|&y| {
                let h = c.mean_spacing_at(y).unwrap();
                c.length_at(y).unwrap() / (h * h)
            })
            .collect();
        let mean: f64 = w.iter().zip(&ratio).map(|(a, b)| a * b).sum();
        for (e, r) in eta.iter().zip(&ratio) {
            assert!((e - (r / mean - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_uniform_capacitor_is_zero() {
        let c = CapacitorGeometry::ideal(Arm::Upper, 10.0, 1e-3, 0.05, -1.0, 1.0).unwrap();
        let p = TrajectoryDistribution::uniform(-0.5, 0.5, 11).unwrap();
        assert!(eta_profile(&c, &p).unwrap().iter().all(|e| e.abs() < 1e-15));
    }

    #[test]
    fn eta_tilted_spacing_first_order() {
        let eps = 1e-4;
        let h0 = 1e-3;
        let ys: Vec<f64> = (0..41).map(|i| -1.0 + 0.05 * i as f64).collect();
        let c = CapacitorGeometry::new(
            Arm::Lower,
            ys.clone(),
            vec![0.0, 1.0],
            ys.iter().map(|y| h0 * (1.0 + eps * y)).collect(),
            vec![0.05; ys.len()],
            vec![vec![0.0; 2]; ys.len()],
            vec![vec![0.0; 2]; ys.len()],
            1.0,
        )
        .unwrap();
        let p = TrajectoryDistribution::uniform(-1.0, 1.0, 41).unwrap();
        let eta = eta_profile(&c, &p).unwrap();
        for (y, e) in ys.iter().zip(&eta) {
            // ⟨y⟩ = 0 for the symmetric uniform weight, so the constant is O(ε²).
            assert!((e - (-2.0 * eps * y)).abs() < 5.0 * eps * eps, "{y}: {e}");
        }
    }
}
