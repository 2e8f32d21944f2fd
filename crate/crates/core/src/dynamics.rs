//! Forces on an induced electric dipole moving through static E and B fields.
//!
//! With κ = 4πε₀α and W = v×B, the three mixed terms of the force are
//! `F₁ = κ((v·∇)E)×B`, `F₂ = κ(W·∇)E` and `F₃ = κ(E·∇)W`. For v ∥ z and B ∥ y,
//! `F₁z + F₂z = κvB(∂E_x/∂z − ∂E_z/∂x)`, which vanishes wherever E is curl-free.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Rest-frame fields to first order in v/c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionalFields {
    /// −(v×E)/c².
    pub b_mot: Vec3,
    /// v×B.
    pub e_mot: Vec3,
}

pub fn motional_fields(e: &Vec3, b: &Vec3, v: &Vec3, c: f64) -> MotionalFields {
    MotionalFields {
        b_mot: -v.cross(e) / (c * c),
        e_mot: v.cross(b),
    }
}

/// Closed-form electric fields with closed-form Jacobians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElectricGenerator {
    Uniform {
        e: [f64; 3],
    },
    /// Infinite wire along y through (x0, z0) with charge per length `lambda` (C/m).
    LineCharge {
        lambda: f64,
        x0: f64,
        z0: f64,
    },
    /// Plane capacitor with field along x and a tanh entrance edge at z_edge.
    /// The x-linear E_z term keeps the field curl-free.
    FringedCapacitor {
        e0: f64,
        z_edge: f64,
        width: f64,
    },
    /// E = (a z, 0, b x), curl-free only when a = b.
    Sheared {
        a: f64,
        b: f64,
    },
}

impl ElectricGenerator {
    pub fn field(&self, r: &Vec3, epsilon0: f64) -> Vec3 {
        match *self {
            ElectricGenerator::Uniform { e } => Vec3::from(e),
            ElectricGenerator::LineCharge { lambda, x0, z0 } => {
                let (dx, dz) = (r.x - x0, r.z - z0);
                let rho2 = dx * dx + dz * dz;
                let c = lambda / (2.0 * std::f64::consts::PI * epsilon0);
                Vec3::new(c * dx / rho2, 0.0, c * dz / rho2)
            }
            ElectricGenerator::FringedCapacitor { e0, z_edge, width } => {
                let t = ((r.z - z_edge) / width).tanh();
                let s = 0.5 * (1.0 + t);
                let ds = 0.5 * (1.0 - t * t) / width;
                Vec3::new(e0 * s, 0.0, e0 * r.x * ds)
            }
            ElectricGenerator::Sheared { a, b } => Vec3::new(a * r.z, 0.0, b * r.x),
        }
    }

    /// `J[i][j] = ∂E_i/∂x_j`.
    pub fn jacobian(&self, r: &Vec3, epsilon0: f64) -> Matrix3<f64> {
        match *self {
            ElectricGenerator::Uniform { .. } => Matrix3::zeros(),
            ElectricGenerator::LineCharge { lambda, x0, z0 } => {
                let d = [r.x - x0, 0.0, r.z - z0];
                let rho2 = d[0] * d[0] + d[2] * d[2];
                let c = lambda / (2.0 * std::f64::consts::PI * epsilon0);
                let mut j = Matrix3::zeros();
                for i in [0, 2] {
                    for k in [0, 2] {
                        let delta = if i == k { 1.0 } else { 0.0 };
                        j[(i, k)] = c * (delta / rho2 - 2.0 * d[i] * d[k] / (rho2 * rho2));
                    }
                }
                j
            }
            ElectricGenerator::FringedCapacitor { e0, z_edge, width } => {
                let t = ((r.z - z_edge) / width).tanh();
                let ds = 0.5 * (1.0 - t * t) / width;
                // s'' = −2 t s' / w
                let d2s = -2.0 * t * ds / width;
                let mut j = Matrix3::zeros();
                j[(0, 2)] = e0 * ds;
                j[(2, 0)] = e0 * ds;
                j[(2, 2)] = e0 * r.x * d2s;
                j
            }
            ElectricGenerator::Sheared { a, b } => {
                let mut j = Matrix3::zeros();
                j[(0, 2)] = a;
                j[(2, 0)] = b;
                j
            }
        }
    }
}

/// Static E and B sampled on a uniform Cartesian grid.
///
/// Node Jacobians use central differences, so only interior nodes carry one;
/// queries are trilinear in those interior Jacobians and fields.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    origin: Vec3,
    spacing: f64,
    dims: [usize; 3],
    e: Vec<Vec3>,
    b: Vec<Vec3>,
}

impl FieldGrid {
    pub fn new(
        origin: Vec3,
        spacing: f64,
        dims: [usize; 3],
        e: Vec<Vec3>,
        b: Vec<Vec3>,
    ) -> Result<Self> {
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Domain(format!(
                "grid spacing must be > 0, got {spacing}"
            )));
        }
        if dims.iter().any(|&n| n < 4) {
            return Err(Error::Domain(format!(
                "grid needs ≥ 4 nodes per axis, got {dims:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if e.len() != n || b.len() != n {
            return Err(Error::MismatchedSupport(format!(
                "{} E and {} B samples for {n} nodes",
                e.len(),
                b.len()
            )));
        }
        Ok(FieldGrid {
            origin,
            spacing,
            dims,
            e,
            b,
        })
    }

    /// Samples an electric generator and a uniform B on a grid that spans
    /// `lo..=hi` with the given spacing (rounded up to whole cells).
    pub fn sample(
        generator: &ElectricGenerator,
        b: Vec3,
        lo: Vec3,
        hi: Vec3,
        spacing: f64,
        epsilon0: f64,
    ) -> Result<Self> {
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let span = hi[a] - lo[a];
            if !(span >= 0.0) {
                return Err(Error::Domain("grid upper corner below lower corner".into()));
            }
            dims[a] = (span / spacing).ceil() as usize + 1;
        }
        let mut e = Vec::with_capacity(dims.iter().product());
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let r = lo + spacing * Vec3::new(i as f64, j as f64, k as f64);
                    e.push(generator.field(&r, epsilon0));
                }
            }
        }
        let n = e.len();
        FieldGrid::new(lo, spacing, dims, e, vec![b; n])
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn node_jacobian(
        values: &[Vec3],
        grid: &FieldGrid,
        i: usize,
        j: usize,
        k: usize,
    ) -> Matrix3<f64> {
        let h2 = 2.0 * grid.spacing;
        let dx = (values[grid.idx(i + 1, j, k)] - values[grid.idx(i - 1, j, k)]) / h2;
        let dy = (values[grid.idx(i, j + 1, k)] - values[grid.idx(i, j - 1, k)]) / h2;
        let dz = (values[grid.idx(i, j, k + 1)] - values[grid.idx(i, j, k - 1)]) / h2;
        Matrix3::from_columns(&[dx, dy, dz])
    }

    /// Lower cell corner and fractional offsets, for cells whose corners are all interior.
    fn locate(&self, r: &Vec3) -> Result<([usize; 3], [f64; 3])> {
        const AXES: [&str; 3] = ["field grid x", "field grid y", "field grid z"];
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let min = self.origin[a] + self.spacing;
            let max = self.origin[a] + self.spacing * (self.dims[a] - 2) as f64;
            let u = (r[a] - self.origin[a]) / self.spacing;
            if !(r[a] >= min - 1e-9 * self.spacing && r[a] <= max + 1e-9 * self.spacing) {
                return Err(Error::OutOfGrid {
                    what: AXES[a],
                    value: r[a],
                    min,
                    max,
                });
            }
            let cell = (u.floor() as usize).clamp(1, self.dims[a] - 3);
            base[a] = cell;
            frac[a] = (u - cell as f64).clamp(0.0, 1.0);
        }
        Ok((base, frac))
    }

    fn trilinear<T>(&self, r: &Vec3, node: impl Fn(usize, usize, usize) -> T) -> Result<T>
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let (b, f) = self.locate(r)?;
        let mut acc: Option<T> = None;
        for dk in 0..2 {
            for dj in 0..2 {
                for di in 0..2 {
                    let w = (if di == 1 { f[0] } else { 1.0 - f[0] })
                        * (if dj == 1 { f[1] } else { 1.0 - f[1] })
                        * (if dk == 1 { f[2] } else { 1.0 - f[2] });
                    let term = node(b[0] + di, b[1] + dj, b[2] + dk) * w;
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a + term,
                    });
                }
            }
        }
        Ok(acc.expect("eight corners"))
    }

    pub fn e_at(&self, r: &Vec3) -> Result<Vec3> {
        self.trilinear(r, |i, j, k| self.e[self.idx(i, j, k)])
    }

    pub fn b_at(&self, r: &Vec3) -> Result<Vec3> {
        self.trilinear(r, |i, j, k| self.b[self.idx(i, j, k)])
    }

    /// ∂E_i/∂x_j by central differences.
    pub fn e_jacobian(&self, r: &Vec3) -> Result<Matrix3<f64>> {
        self.trilinear(r, |i, j, k| Self::node_jacobian(&self.e, self, i, j, k))
    }

    pub fn b_jacobian(&self, r: &Vec3) -> Result<Matrix3<f64>> {
        self.trilinear(r, |i, j, k| Self::node_jacobian(&self.b, self, i, j, k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeiForces {
    pub f1: Vec3,
    pub f2: Vec3,
    pub f3: Vec3,
}

/// κ = 4πε₀α.
pub fn dipole_coupling(alpha: f64, epsilon0: f64) -> f64 {
    4.0 * std::f64::consts::PI * epsilon0 * alpha
}

fn forces_from(
    kappa: f64,
    e: Vec3,
    b: Vec3,
    je: Matrix3<f64>,
    jb: Matrix3<f64>,
    v: &Vec3,
) -> WeiForces {
    let w = v.cross(&b);
    // ∂W_i/∂x_j = (v × ∂B/∂x_j)_i
    let jw = Matrix3::from_columns(&[
        v.cross(&jb.column(0).into_owned()),
        v.cross(&jb.column(1).into_owned()),
        v.cross(&jb.column(2).into_owned()),
    ]);
    WeiForces {
        f1: kappa * (je * v).cross(&b),
        f2: kappa * (je * w),
        f3: kappa * (jw * e),
    }
}

/// Forces from finite-difference gradients of the sampled fields.
pub fn wei_force_components(
    grid: &FieldGrid,
    r: &Vec3,
    v: &Vec3,
    alpha: f64,
    epsilon0: f64,
) -> Result<WeiForces> {
    Ok(forces_from(
        dipole_coupling(alpha, epsilon0),
        grid.e_at(r)?,
        grid.b_at(r)?,
        grid.e_jacobian(r)?,
        grid.b_jacobian(r)?,
        v,
    ))
}

/// Same forces from the generator's closed-form Jacobian and a uniform B.
pub fn wei_force_components_analytic(
    generator: &ElectricGenerator,
    b: &Vec3,
    r: &Vec3,
    v: &Vec3,
    alpha: f64,
    epsilon0: f64,
) -> WeiForces {
    forces_from(
        dipole_coupling(alpha, epsilon0),
        generator.field(r, epsilon0),
        *b,
        generator.jacobian(r, epsilon0),
        Matrix3::zeros(),
        v,
    )
}

/// Guard for the 0/0 case of the cancellation ratio (N).
pub const FORCE_EPSILON: f64 = 1e-60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellationPoint {
    /// |F₁z + F₂z| / (|F₁z| + |F₂z| + ε).
    pub residual: f64,
    /// |(∇×E)·(v̂×B̂)| / (|∂E_x/∂z| + |∂E_z/∂x|) with the same regularisation.
    pub curl_residual: f64,
    pub f1z: f64,
    pub f2z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub points: Vec<CancellationPoint>,
    pub max_residual: f64,
    pub max_curl_residual: f64,
}

/// Longitudinal force balance along a path. The curl residual is reported next
/// to the force residual so that a non-curl-free field shows up as such.
pub fn cancellation_check(
    grid: &FieldGrid,
    path: &[Vec3],
    v: &Vec3,
    alpha: f64,
    epsilon0: f64,
) -> Result<CancellationReport> {
    let axis = v.normalize();
    let mut points = Vec::with_capacity(path.len());
    for r in path {
        let f = wei_force_components(grid, r, v, alpha, epsilon0)?;
        let (f1z, f2z) = (f.f1.dot(&axis), f.f2.dot(&axis));
        let je = grid.e_jacobian(r)?;
        let curl = Vec3::new(
            je[(2, 1)] - je[(1, 2)],
            je[(0, 2)] - je[(2, 0)],
            je[(1, 0)] - je[(0, 1)],
        );
        let scale = je.abs().sum() + f64::MIN_POSITIVE;
        points.push(CancellationPoint {
            residual: (f1z + f2z).abs() / (f1z.abs() + f2z.abs() + FORCE_EPSILON),
            curl_residual: curl.norm() / scale,
            f1z,
            f2z,
        });
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    let max_curl_residual = points.iter().map(|p| p.curl_residual).fold(0.0, f64::max);
    Ok(CancellationReport {
        points,
        max_residual,
        max_curl_residual,
    })
}

/// Straight path along z at fixed (x, y), `n` points from z0 to z1 inclusive.
pub fn straight_path(x: f64, y: f64, z0: f64, z1: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            Vec3::new(x, y, z0 + t * (z1 - z0))
        })
        .collect()
}

/// Grid just large enough to evaluate `path` with central differences.
pub fn grid_around_path(
    generator: &ElectricGenerator,
    b: Vec3,
    path: &[Vec3],
    spacing: f64,
    epsilon0: f64,
) -> Result<FieldGrid> {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for r in path {
        lo = lo.inf(r);
        hi = hi.sup(r);
    }
    let pad = Vec3::repeat(2.0 * spacing);
    FieldGrid::sample(generator, b, lo - pad, hi + pad, spacing, epsilon0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{EPSILON_0, SPEED_OF_LIGHT};

    const ALPHA: f64 = 24.34e-30;

    fn setup() -> (ElectricGenerator, Vec3, Vec3) {
        (
            ElectricGenerator::LineCharge {
                lambda: 1e-9,
                x0: 0.0,
                z0: 0.0,
            },
            Vec3::new(0.0, 1.4e-2, 0.0),
            Vec3::new(0.0, 0.0, 1065.0),
        )
    }

    #[test]
    fn motional_field_magnitudes() {
        let v = Vec3::new(0.0, 0.0, 1065.0);
        let m = motional_fields(
            &Vec3::new(0.8e6, 0.0, 0.0),
            &Vec3::new(0.0, 1.4e-2, 0.0),
            &v,
            SPEED_OF_LIGHT,
        );
        assert!(
            (m.b_mot.norm() - 9.48e-9).abs() < 0.01e-9,
            "{}",
            m.b_mot.norm()
        );
        assert!((m.e_mot.norm() - 14.91).abs() < 1e-9);
        let parallel = motional_fields(
            &Vec3::new(0.0, 0.0, 5.0),
            &Vec3::zeros(),
            &v,
            SPEED_OF_LIGHT,
        );
        assert_eq!(parallel.b_mot.norm(), 0.0);
    }

    #[test]
    fn generator_jacobians_match_differences() {
        let gens = [
            ElectricGenerator::LineCharge {
                lambda: 2e-9,
                x0: 1e-3,
                z0: -2e-3,
            },
            ElectricGenerator::FringedCapacitor {
                e0: 1e5,
                z_edge: 0.0,
                width: 2e-3,
            },
            ElectricGenerator::Sheared { a: 3.0, b: -1.0 },
        ];
        let r = Vec3::new(2e-3, 0.5e-3, 1e-3);
        let h = 1e-7;
        for g in gens {
            let j = g.jacobian(&r, EPSILON_0);
            for c in 0..3 {
                let mut d = Vec3::zeros();
                d[c] = h;
                let fd = (g.field(&(r + d), EPSILON_0) - g.field(&(r - d), EPSILON_0)) / (2.0 * h);
                for i in 0..3 {
                    let scale = j.abs().max() + 1e-30;
                    assert!((fd[i] - j[(i, c)]).abs() < 1e-6 * scale, "{g:?} {i}{c}");
                }
            }
        }
    }

    #[test]
    fn uniform_fields_give_no_force() {
        let g = ElectricGenerator::Uniform { e: [1e5, 0.0, 2e4] };
        let path = straight_path(0.0, 0.0, 0.0, 1e-3, 5);
        let b = Vec3::new(0.0, 1e-2, 0.0);
        let grid = grid_around_path(&g, b, &path, 1e-4, EPSILON_0).unwrap();
        let v = Vec3::new(0.0, 0.0, 1000.0);
        for r in &path {
            let f = wei_force_components(&grid, r, &v, ALPHA, EPSILON_0).unwrap();
            assert_eq!(f.f1.norm() + f.f2.norm() + f.f3.norm(), 0.0);
        }
        let rep = cancellation_check(&grid, &path, &v, ALPHA, EPSILON_0).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn line_charge_matches_analytic_forces_at_second_order() {
        let (g, b, v) = setup();
        let r = Vec3::new(2e-3, 0.0, 1.37e-3);
        let exact = wei_force_components_analytic(&g, &b, &r, &v, ALPHA, EPSILON_0);
        let err = |h: f64| {
            let grid = grid_around_path(&g, b, &[r], h, EPSILON_0).unwrap();
            let f = wei_force_components(&grid, &r, &v, ALPHA, EPSILON_0).unwrap();
            assert_eq!(f.f3.norm(), 0.0);
            ((f.f1 - exact.f1).norm() + (f.f2 - exact.f2).norm())
                / (exact.f1.norm() + exact.f2.norm())
        };
        let (e1, e2) = (err(20e-6), err(10e-6));
        assert!(e1 < 1e-3, "{e1}");
        assert!(e2 / e1 < 0.3, "{e1} {e2}");
        assert!(exact.f1.z.abs() > 0.0);
        assert!((exact.f1.z + exact.f2.z).abs() <= 1e-12 * exact.f1.z.abs());
    }

    #[test]
    fn curl_free_cancellation_converges() {
        let (g, b, v) = setup();
        let path = straight_path(2e-3, 0.0, 1e-3, 3e-3, 41);
        let run = |h: f64| {
            let grid = grid_around_path(&g, b, &path, h, EPSILON_0).unwrap();
            cancellation_check(&grid, &path, &v, ALPHA, EPSILON_0)
                .unwrap()
                .max_residual
        };
        let (coarse, fine) = (run(4e-6), run(2e-6));
        assert!(fine <= 1e-6, "{fine}");
        let ratio = coarse / fine;
        assert!((3.0..5.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn injected_curl_is_detected() {
        let g = ElectricGenerator::Sheared { a: 1e6, b: 1.1e6 };
        let path = straight_path(1e-3, 0.0, 1e-3, 2e-3, 5);
        let grid = grid_around_path(&g, Vec3::new(0.0, 1e-2, 0.0), &path, 1e-4, EPSILON_0).unwrap();
        let rep = cancellation_check(&grid, &path, &Vec3::new(0.0, 0.0, 1065.0), ALPHA, EPSILON_0)
            .unwrap();
        let injected = 0.1 / 2.1;
        assert!(
            (rep.max_residual - injected).abs() < 1e-9,
            "{}",
            rep.max_residual
        );
        assert!((rep.max_curl_residual - injected).abs() < 1e-9);
    }

    #[test]
    fn fringe_field_has_no_longitudinal_imbalance() {
        let g = ElectricGenerator::FringedCapacitor {
            e0: 8e5,
            z_edge: 0.0,
            width: 1e-3,
        };
        let path = straight_path(0.2e-3, 0.0, -2e-3, 2e-3, 21);
        let grid =
            grid_around_path(&g, Vec3::new(0.0, 1.4e-2, 0.0), &path, 2e-6, EPSILON_0).unwrap();
        let rep = cancellation_check(&grid, &path, &Vec3::new(0.0, 0.0, 1065.0), ALPHA, EPSILON_0)
            .unwrap();
        assert!(rep.max_residual < 1e-5, "{}", rep.max_residual);
    }

    #[test]
    fn boundary_queries_are_rejected() {
        let (g, b, v) = setup();
        let path = straight_path(2e-3, 0.0, 1e-3, 1.1e-3, 3);
        let grid = grid_around_path(&g, b, &path, 1e-5, EPSILON_0).unwrap();
        let outside = Vec3::new(2e-3, 0.0, 1.2e-3);
        assert!(matches!(
            wei_force_components(&grid, &outside, &v, ALPHA, EPSILON_0),
            Err(Error::OutOfGrid { .. })
        ));
    }
}
