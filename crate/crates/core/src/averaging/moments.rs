use serde::{Deserialize, Serialize};

use crate::geometry::TrajectoryDistribution;
use crate::{Error, Result};

/// Small-dispersion summary of a sampled phase distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentExpansion {
    /// 1 − ⟨δφ²⟩/2.
    pub visibility_ratio: f64,
    /// ⟨φ⟩ − ⟨δφ³⟩/6.
    pub phase: f64,
    pub mean: f64,
    /// ⟨δφ²⟩.
    pub m2: f64,
    /// ⟨δφ³⟩.
    pub m3: f64,
    /// max |δφ|; the expansion is meant for values up to about 1 rad.
    pub max_abs_deviation: f64,
}

pub fn moment_expansion(p: &TrajectoryDistribution, phi: &[f64]) -> Result<MomentExpansion> {
    if phi.len() != p.y().len() {
        return Err(Error::MismatchedSupport(format!(
            "{} phase samples for {} trajectory points",
            phi.len(),
            p.y().len()
        )));
    }
    moment_expansion_weighted(&p.weights(), phi)
}

/// Same as [`moment_expansion`] with explicit weights summing to 1.
pub fn moment_expansion_weighted(weights: &[f64], phi: &[f64]) -> Result<MomentExpansion> {
    if weights.len() != phi.len() || phi.is_empty() {
        return Err(Error::MismatchedSupport(format!(
            "{} weights for {} samples",
            weights.len(),
            phi.len()
        )));
    }
    let mean: f64 = weights.iter().zip(phi).map(|(w, x)| w * x).sum();
    let (mut m2, mut m3, mut max_abs) = (0.0, 0.0, 0.0f64);
    for (w, x) in weights.iter().zip(phi) {
        let d = x - mean;
        m2 += w * d * d;
        m3 += w * d * d * d;
        max_abs = max_abs.max(d.abs());
    }
    Ok(MomentExpansion {
        visibility_ratio: 1.0 - 0.5 * m2,
        phase: mean - m3 / 6.0,
        mean,
        m2,
        m3,
        max_abs_deviation: max_abs,
    })
}

/// Second-order visibility ratios of two phase dispersions and of their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCorrelation {
    pub v_ra: f64,
    pub v_rb: f64,
    /// 1 − ⟨(δφ_a + δφ_b)²⟩/2.
    pub v_rab: f64,
    /// V_ra V_rb (1 − ⟨δφ_a δφ_b⟩).
    pub v_rab_product: f64,
    /// ⟨δφ_a δφ_b⟩.
    pub corr: f64,
    /// v_rab − v_rab_product, of fourth order in the dispersions.
    pub residual: f64,
}

pub fn visibility_correlation(
    p: &TrajectoryDistribution,
    a: &[f64],
    b: &[f64],
) -> Result<VisibilityCorrelation> {
    let w = p.weights();
    if a.len() != w.len() || b.len() != w.len() {
        return Err(Error::MismatchedSupport(
            "both phase samples must use the trajectory grid".into(),
        ));
    }
    let ma = moment_expansion_weighted(&w, a)?;
    let mb = moment_expansion_weighted(&w, b)?;
    let corr: f64 = w
        .iter()
        .zip(a.iter().zip(b))
        .map(|(wi, (x, y))| wi * (x - ma.mean) * (y - mb.mean))
        .sum();
    let v_rab = 1.0 - 0.5 * (ma.m2 + mb.m2 + 2.0 * corr);
    let v_rab_product = ma.visibility_ratio * mb.visibility_ratio * (1.0 - corr);
    Ok(VisibilityCorrelation {
        v_ra: ma.visibility_ratio,
        v_rb: mb.visibility_ratio,
        v_rab,
        v_rab_product,
        corr,
        residual: v_rab - v_rab_product,
    })
}

/// φ_m(a + b) − φ_m(a) − φ_m(b) predicted by the third-moment term:
/// −(⟨δφ_a² δφ_b⟩ + ⟨δφ_a δφ_b²⟩)/2.
pub fn cross_phase_term(p: &TrajectoryDistribution, a: &[f64], b: &[f64]) -> Result<f64> {
    let w = p.weights();
    let ma = moment_expansion_weighted(&w, a)?;
    let mb = moment_expansion_weighted(&w, b)?;
    if b.len() != w.len() {
        return Err(Error::MismatchedSupport("mismatched phase samples".into()));
    }
    let mut s = 0.0;
    for (wi, (x, y)) in w.iter().zip(a.iter().zip(b)) {
        let (da, db) = (x - ma.mean, y - mb.mean);
        s += wi * (da * da * db + da * db * db);
    }
    Ok(-0.5 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verification::oracles;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> TrajectoryDistribution {
        TrajectoryDistribution::uniform(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_phase() {
        let p = grid(11);
        let m = moment_expansion(&p, &[0.7; 11]).unwrap();
        assert_eq!(m.visibility_ratio, 1.0);
        assert!((m.phase - 0.7).abs() < 1e-15);
    }

    #[test]
    fn symmetric_two_point() {
        let w = [0.5, 0.5];
        let m = moment_expansion_weighted(&w, &[1.0 + 0.2, 1.0 - 0.2]).unwrap();
        assert!((m.visibility_ratio - (1.0 - 0.02)).abs() < 1e-15);
        assert!((m.phase - 1.0).abs() < 1e-15);
        assert!(m.m3.abs() < 1e-17);
    }

    #[test]
    fn skewed_three_point_against_direct_average() {
        let w = [0.2, 0.5, 0.3];
        let phi = [0.9, 1.05, 1.2];
        let m = moment_expansion_weighted(&w, &phi).unwrap();
        let direct = oracles::direct_phase_average(&w, &phi);
        let d4 = m.max_abs_deviation.powi(4);
        assert!((m.visibility_ratio - direct.norm()).abs() < d4);
        assert!(crate::averaging::wrap_phase(m.phase - direct.arg()).abs() < d4);
    }

    #[test]
    fn random_dispersions_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = grid(33);
        for _ in 0..200 {
            let base: f64 = rng.gen_range(-3.0..3.0);
            let phi: Vec<f64> = (0..33).map(|_| base + rng.gen_range(-0.3..0.3)).collect();
            let m = moment_expansion(&p, &phi).unwrap();
            assert!(m.max_abs_deviation <= 0.6);
            let direct = oracles::direct_phase_average(&p.weights(), &phi);
            assert!((m.visibility_ratio - direct.norm()).abs() < 1e-3);
            let dphase = crate::averaging::wrap_phase(m.phase - direct.arg());
            assert!(dphase.abs() < 1e-3);
        }
    }

    #[test]
    fn correlation_cases() {
        let p = grid(21);
        let a: Vec<f64> = p.y().iter().map(|y| 0.2 * y).collect();
        // Even function of y: uncorrelated with the odd `a` under the symmetric weight.
        let b: Vec<f64> = p.y().iter().map(|y| 0.15 * (y * y - 0.35)).collect();
        let c = visibility_correlation(&p, &a, &b).unwrap();
        assert!(c.corr.abs() < 1e-15);
        let second_order = 1.0 - 0.5 * (1.0 - c.v_ra) * 2.0 - 0.5 * (1.0 - c.v_rb) * 2.0;
        assert!((c.v_rab - second_order).abs() < 1e-15);
        assert!(c.residual.abs() < 1e-4);

        let same = visibility_correlation(&p, &a, &a).unwrap();
        assert!((same.corr - 2.0 * (1.0 - same.v_ra)).abs() < 1e-15);

        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let opp = visibility_correlation(&p, &a, &neg).unwrap();
        assert!((opp.v_rab - 1.0).abs() < 1e-15);
        let m2 = 2.0 * (1.0 - opp.v_ra);
        assert!((opp.v_rab_product - opp.v_ra * opp.v_ra * (1.0 + m2)).abs() < 1e-15);
    }

    #[test]
    fn phases_do_not_add_with_cross_skewness() {
        let p = grid(41);
        let a: Vec<f64> = p.y().iter().map(|y| 0.3 * y).collect();
        let b: Vec<f64> = p.y().iter().map(|y| 0.3 * y * y).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let ma = moment_expansion(&p, &a).unwrap();
        let mb = moment_expansion(&p, &b).unwrap();
        let mab = moment_expansion(&p, &sum).unwrap();
        let gap = mab.phase - ma.phase - mb.phase;
        let predicted = cross_phase_term(&p, &a, &b).unwrap();
        assert!(gap.abs() > 1e-4);
        assert!((gap - predicted).abs() < 1e-14);
    }
}
