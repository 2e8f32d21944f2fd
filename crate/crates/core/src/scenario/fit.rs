//! Least-squares fit of the two-coil model `J₁ = A|I − I₀| + A_C|I_C − I₀C| + J₀`.
//!
//! For fixed kink positions the model is linear in (A, A_C, J₀), so in J₁ mode
//! only the two kinks are searched: a coarse grid followed by a simplex
//! refinement, neither of which needs derivatives across the kinks.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::averaging::{linear_zeeman_visibility, BeamModel, ComplexVisibility};
use crate::hyperfine::{AtomModel, LandeFactors};
use crate::phases::TwoCoilModel;
use crate::{Error, Result};

const MIN_POINTS: usize = 5;
const SEED_GRID: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct J1Point {
    pub i: f64,
    pub i_c: f64,
    pub j1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub i: f64,
    pub i_c: f64,
    pub visibility: ComplexVisibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: TwoCoilModel,
    pub rms_residual: f64,
    pub residuals: Vec<f64>,
    /// I_C was constant: the compensator term is folded into J₀ and
    /// (A_C, I₀C) are reported as (0, I_C).
    pub compensator_absorbed: bool,
    /// Parameters the data do not pin down (a kink with data on one side only).
    pub unidentified: Vec<String>,
    pub evaluations: usize,
}

/// Minimizes `f` with the Nelder-Mead simplex from `x0` with initial steps `step`.
/// Returns the best point, its value and the number of evaluations.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    step: &[f64],
    xtol: f64,
    max_evals: usize,
) -> (Vec<f64>, f64, usize) {
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += step[k];
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size <= xtol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    let v = eval(&x, &mut evals);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    (x, v, evals)
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Linear sub-problem: best (A, A_C, J₀) for fixed kinks, with its residual sum of squares.
fn linear_part(data: &[J1Point], i0: f64, i0c: f64, absorbed: bool) -> (TwoCoilModel, f64) {
    let cols = if absorbed { 2 } else { 3 };
    let a = DMatrix::from_fn(data.len(), cols, |r, c| match (c, absorbed) {
        (0, _) => (data[r].i - i0).abs(),
        (1, false) => (data[r].i_c - i0c).abs(),
        _ => 1.0,
    });
    let b = DVector::from_iterator(data.len(), data.iter().map(|p| p.j1));
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-12 * svd.singular_values.max())
        .unwrap_or_else(|_| DVector::zeros(cols));
    let ssr = (&a * &x - &b).norm_squared();
    let model = if absorbed {
        TwoCoilModel {
            a_j1: x[0],
            i0,
            a_j1c: 0.0,
            i0c,
            j0: x[1],
        }
    } else {
        TwoCoilModel {
            a_j1: x[0],
            i0,
            a_j1c: x[1],
            i0c,
            j0: x[2],
        }
    };
    (model, ssr)
}

fn spans(values: impl Iterator<Item = f64> + Clone, kink: f64, scale: f64) -> bool {
    let eps = 1e-9 * scale.max(1e-300);
    values.clone().any(|v| v < kink - eps) && values.into_iter().any(|v| v > kink + eps)
}

pub fn fit_two_coil_j1(data: &[J1Point]) -> Result<FitReport> {
    if data.len() < MIN_POINTS {
        return Err(Error::Identifiability(vec![
            "a_j1", "i0", "a_j1c", "i0c", "j0",
        ]));
    }
    if data
        .iter()
        .any(|p| !(p.i.is_finite() && p.i_c.is_finite() && p.j1.is_finite()))
    {
        return Err(Error::Domain("non-finite fit data".into()));
    }
    let (ilo, ihi) = range(data.iter().map(|p| p.i));
    let (clo, chi) = range(data.iter().map(|p| p.i_c));
    let absorbed = chi == clo;
    let mut evaluations = 0;

    let grid = |lo: f64, hi: f64, k: usize| {
        if hi > lo {
            lo + (hi - lo) * k as f64 / (SEED_GRID - 1) as f64
        } else {
            lo
        }
    };
    let mut best = (f64::INFINITY, ilo, clo);
    let c_steps = if absorbed { 1 } else { SEED_GRID };
    for a in 0..SEED_GRID {
        for c in 0..c_steps {
            let (i0, i0c) = (grid(ilo, ihi, a), grid(clo, chi, c));
            let (_, ssr) = linear_part(data, i0, i0c, absorbed);
            evaluations += 1;
            if ssr < best.0 {
                best = (ssr, i0, i0c);
            }
        }
    }
    let di = (ihi - ilo).max(1e-12) / (SEED_GRID - 1) as f64;
    let dc = (chi - clo).max(1e-12) / (SEED_GRID - 1) as f64;
    let (i0, i0c) = if absorbed {
        let (x, _, n) = nelder_mead(
            |x| linear_part(data, x[0], clo, true).1,
            &[best.1],
            &[di],
            1e-13 * (ihi - ilo).abs().max(1.0),
            4000,
        );
        evaluations += n;
        (x[0], clo)
    } else {
        let (x, _, n) = nelder_mead(
            |x| linear_part(data, x[0], x[1], false).1,
            &[best.1, best.2],
            &[di, dc],
            1e-13 * (ihi - ilo).abs().max(chi - clo).max(1.0),
            8000,
        );
        evaluations += n;
        (x[0], x[1])
    };
    let (model, _) = linear_part(data, i0, i0c, absorbed);

    let i_spanned = spans(data.iter().map(|p| p.i), model.i0, ihi - ilo);
    let c_spanned = !absorbed && spans(data.iter().map(|p| p.i_c), model.i0c, chi - clo);
    if !i_spanned && !c_spanned {
        let mut missing = vec!["i0"];
        if !absorbed {
            missing.push("i0c");
        }
        return Err(Error::Identifiability(missing));
    }
    let mut unidentified = Vec::new();
    if !i_spanned {
        unidentified.extend(["i0".to_string(), "j0".to_string()]);
    }
    if !absorbed && !c_spanned {
        unidentified.push("i0c".into());
        if !unidentified.iter().any(|s| s == "j0") {
            unidentified.push("j0".into());
        }
    }
    let residuals: Vec<f64> = data.iter().map(|p| p.j1 - model.j1(p.i, p.i_c)).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(FitReport {
        model,
        rms_residual: rms,
        residuals,
        compensator_absorbed: absorbed,
        unidentified,
        evaluations,
    })
}

/// Visibility-mode settings: the linear-Zeeman visibility of J₁ under the beam model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisibilityModel {
    pub chi: f64,
    pub s_parallel: f64,
    pub v_m: f64,
    #[serde(default = "yes")]
    pub velocity_average: bool,
}

fn yes() -> bool {
    true
}

/// Fits all five parameters to observed complex visibilities, minimizing
/// Σ|V_model − V_obs|² by simplex search with restarts.
pub fn fit_two_coil_visibility(
    data: &[VisibilityPoint],
    atom: &AtomModel,
    settings: &VisibilityModel,
    initial: TwoCoilModel,
) -> Result<FitReport> {
    if data.len() < MIN_POINTS {
        return Err(Error::Identifiability(vec![
            "a_j1", "i0", "a_j1c", "i0c", "j0",
        ]));
    }
    let beam = BeamModel::new(settings.v_m, settings.s_parallel, settings.chi)?;
    let model_at = |x: &[f64]| TwoCoilModel {
        a_j1: x[0],
        i0: x[1],
        a_j1c: x[2],
        i0c: x[3],
        j0: x[4],
    };
    let predict = |m: &TwoCoilModel, p: &VisibilityPoint| -> Result<ComplexVisibility> {
        linear_zeeman_visibility(
            atom,
            m.j1(p.i, p.i_c),
            settings.chi,
            &beam,
            settings.velocity_average,
            LandeFactors::Exact,
        )
    };
    let ssr = |x: &[f64]| -> f64 {
        let m = model_at(x);
        data.iter()
            .map(|p| match predict(&m, p) {
                Ok(c) => (c.as_complex() - p.visibility.as_complex()).norm_sqr(),
                Err(_) => f64::INFINITY,
            })
            .sum()
    };
    let (ilo, ihi) = range(data.iter().map(|p| p.i));
    let (clo, chi) = range(data.iter().map(|p| p.i_c));
    let mut x = vec![
        initial.a_j1,
        initial.i0,
        initial.a_j1c,
        initial.i0c,
        initial.j0,
    ];
    let step = [
        0.1 * initial.a_j1.abs().max(0.1),
        0.1 * (ihi - ilo).max(1e-3),
        0.1 * initial.a_j1c.abs().max(0.1),
        0.1 * (chi - clo).max(1e-3),
        0.1,
    ];
    let mut evaluations = 0;
    let mut best = f64::INFINITY;
    for _ in 0..4 {
        let (xn, v, n) = nelder_mead(ssr, &x, &step, 1e-12, 20_000);
        evaluations += n;
        let improved = v < best * (1.0 - 1e-12);
        x = xn;
        best = v;
        if !improved {
            break;
        }
    }
    let model = model_at(&x);
    let residuals: Vec<f64> = data
        .iter()
        .map(|p| Ok((predict(&model, p)?.as_complex() - p.visibility.as_complex()).norm()))
        .collect::<Result<_>>()?;
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let mut unidentified = Vec::new();
    if !spans(data.iter().map(|p| p.i), model.i0, ihi - ilo) {
        unidentified.push("i0".to_string());
    }
    if !spans(data.iter().map(|p| p.i_c), model.i0c, chi - clo) {
        unidentified.push("i0c".to_string());
    }
    Ok(FitReport {
        model,
        rms_residual: rms,
        residuals,
        compensator_absorbed: chi == clo,
        unidentified,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    J1,
    Visibility,
}

/// `hmw fit` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub schema_version: u32,
    pub mode: FitMode,
    /// CSV with columns `i, i_c, j1` (J₁ mode) or `i, i_c, visibility, phase_rad`.
    pub data: PathBuf,
    pub visibility: Option<VisibilityModel>,
    pub initial: Option<TwoCoilModel>,
}

impl FitConfig {
    pub fn from_file(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let cfg: FitConfig = toml::from_str(&text)
            .map_err(|e| Error::config("fit config", e.message().to_string()))?;
        if cfg.schema_version != super::config::SCHEMA_VERSION {
            return Err(Error::config("schema_version", "unsupported version"));
        }
        if cfg.mode == FitMode::Visibility && cfg.visibility.is_none() {
            return Err(Error::config(
                "visibility",
                "required in visibility mode (chi, s_parallel, v_m)",
            ));
        }
        Ok((
            cfg,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ))
    }

    pub fn run(&self, base: &Path, atom: &AtomModel) -> Result<FitReport> {
        let file = if self.data.is_absolute() {
            self.data.clone()
        } else {
            base.join(&self.data)
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(&file)
            .map_err(|e| Error::config("data", format!("{}: {e}", file.display())))?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::config("data", e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::config("data", format!("row {}: `{f}` is not a number", n + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let width = if self.mode == FitMode::J1 { 3 } else { 4 };
        if let Some((n, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::config(
                "data",
                format!("row {}: expected {width} columns", n + 1),
            ));
        }
        match self.mode {
            FitMode::J1 => fit_two_coil_j1(
                &rows
                    .iter()
                    .map(|r| J1Point {
                        i: r[0],
                        i_c: r[1],
                        j1: r[2],
                    })
                    .collect::<Vec<_>>(),
            ),
            FitMode::Visibility => {
                let settings = self.visibility.expect("checked on load");
                let pts: Vec<VisibilityPoint> = rows
                    .iter()
                    .map(|r| VisibilityPoint {
                        i: r[0],
                        i_c: r[1],
                        visibility: ComplexVisibility::from_polar(r[2], r[3]),
                    })
                    .collect();
                let (ilo, ihi) = range(pts.iter().map(|p| p.i));
                let (clo, chi) = range(pts.iter().map(|p| p.i_c));
                let initial = self.initial.unwrap_or(TwoCoilModel {
                    a_j1: 0.5,
                    i0: 0.5 * (ilo + ihi),
                    a_j1c: 0.5,
                    i0c: 0.5 * (clo + chi),
                    j0: 0.0,
                });
                fit_two_coil_visibility(&pts, atom, &settings, initial)
            }
        }
    }
}
