//! Fits the step-index geometry of one fiber axis to measured phasematched
//! signal/idler wavelengths.

use std::path::Path;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::constants::{nm_from_omega, omega_from_nm};
use crate::error::{Error, Result};
use crate::material::{Axis, FiberAxisGeometry, FiberSpec};
use crate::phasematch::{solve_phasematch, FiberDispersion, PhasematchPoint};

/// Residual (in units of the measurement uncertainty) charged when the model
/// has no phasematched pair for a measurement.
pub const FAILURE_PENALTY: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchMeasurement {
    pub pump_wavelength_nm: f64,
    pub signal_wavelength_nm: Option<f64>,
    pub idler_wavelength_nm: Option<f64>,
    pub uncertainty_nm: f64,
}

impl PhasematchMeasurement {
    pub fn validate(&self) -> Result<()> {
        if self.signal_wavelength_nm.is_none() && self.idler_wavelength_nm.is_none() {
            return Err(Error::invalid("measurement", "needs a signal or an idler wavelength"));
        }
        if !(self.uncertainty_nm > 0.0 && self.uncertainty_nm.is_finite()) {
            return Err(Error::invalid("measurement.sigma_nm", "must be positive"));
        }
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.pump_wavelength_nm)
            || !self.signal_wavelength_nm.is_none_or(ok)
            || !self.idler_wavelength_nm.is_none_or(ok)
        {
            return Err(Error::invalid("measurement", "wavelengths must be positive"));
        }
        Ok(())
    }

    fn residual_count(&self) -> usize {
        self.signal_wavelength_nm.is_some() as usize + self.idler_wavelength_nm.is_some() as usize
    }

    /// Signal frequency implied by whichever wavelength was measured.
    fn signal_guess_nm(&self) -> f64 {
        match (self.signal_wavelength_nm, self.idler_wavelength_nm) {
            (Some(s), _) => s,
            (None, Some(i)) => nm_from_omega(2.0 * omega_from_nm(self.pump_wavelength_nm) - omega_from_nm(i)),
            (None, None) => self.pump_wavelength_nm,
        }
    }
}

#[derive(Debug, Deserialize)]
struct MeasurementRow {
    lambda_p_nm: f64,
    lambda_s_nm: Option<f64>,
    lambda_i_nm: Option<f64>,
    sigma_nm: f64,
}

/// Reads `lambda_p_nm,lambda_s_nm,lambda_i_nm,sigma_nm`; either wavelength cell may be empty.
pub fn load_measurements(path: &Path) -> Result<Vec<PhasematchMeasurement>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_error(path, &e))?;
    let headers = reader.headers().map_err(|e| parse_error(path, &e))?.clone();
    let expected = ["lambda_p_nm", "lambda_s_nm", "lambda_i_nm", "sigma_nm"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in reader.deserialize::<MeasurementRow>() {
        let row = rec.map_err(|e| parse_error(path, &e))?;
        let m = PhasematchMeasurement {
            pump_wavelength_nm: row.lambda_p_nm,
            signal_wavelength_nm: row.lambda_s_nm,
            idler_wavelength_nm: row.lambda_i_nm,
            uncertainty_nm: row.sigma_nm,
        };
        m.validate().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: out.len() + 2,
            message: e.to_string(),
        })?;
        out.push(m);
    }
    Ok(out)
}

fn parse_error(path: &Path, e: &csv::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line() as usize).unwrap_or(0),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBounds {
    pub core_diameter_um: (f64, f64),
    pub air_filling_fraction: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            core_diameter_um: (1.0, 3.0),
            air_filling_fraction: (0.3, 0.7),
        }
    }
}

impl FitBounds {
    fn validate(&self) -> Result<()> {
        let (d0, d1) = self.core_diameter_um;
        let (f0, f1) = self.air_filling_fraction;
        if !(d0 > 0.0 && d1 > d0) {
            return Err(Error::invalid("bounds.core_diameter_um", "expected 0 < low < high"));
        }
        if !(f0 > 0.0 && f1 > f0 && f1 < 1.0) {
            return Err(Error::invalid("bounds.air_filling_fraction", "expected 0 < low < high < 1"));
        }
        Ok(())
    }

    fn to_unit(&self, g: &FiberAxisGeometry) -> [f64; 2] {
        let (d0, d1) = self.core_diameter_um;
        let (f0, f1) = self.air_filling_fraction;
        [(g.core_diameter_um - d0) / (d1 - d0), (g.air_filling_fraction - f0) / (f1 - f0)]
    }

    fn from_unit(&self, u: [f64; 2]) -> FiberAxisGeometry {
        let (d0, d1) = self.core_diameter_um;
        let (f0, f1) = self.air_filling_fraction;
        FiberAxisGeometry {
            core_diameter_um: d0 + u[0].clamp(0.0, 1.0) * (d1 - d0),
            air_filling_fraction: f0 + u[1].clamp(0.0, 1.0) * (f1 - f0),
        }
    }

    fn contains(&self, g: &FiberAxisGeometry) -> bool {
        let u = self.to_unit(g);
        u.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    #[serde(default)]
    pub bounds: FitBounds,
    /// Wavelength band of the dispersion profile used inside the objective.
    #[serde(default = "default_band")]
    pub band_nm: (f64, f64),
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
    #[serde(default = "default_starts")]
    pub starts: usize,
    /// Simplex size (relative to the bound box) at which a start stops.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
}

fn default_band() -> (f64, f64) {
    (600.0, 1100.0)
}
fn default_profile_points() -> usize {
    48
}
fn default_starts() -> usize {
    5
}
fn default_tolerance() -> f64 {
    1e-9
}
fn default_max_evaluations() -> usize {
    600
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bounds: FitBounds::default(),
            band_nm: default_band(),
            profile_points: default_profile_points(),
            starts: default_starts(),
            tolerance: default_tolerance(),
            max_evaluations: default_max_evaluations(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StartDiagnostics {
    pub start: FiberAxisGeometry,
    pub end: FiberAxisGeometry,
    pub objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub axis: Axis,
    pub geometry: FiberAxisGeometry,
    pub fiber: FiberSpec,
    pub sigma_core_diameter_um: f64,
    pub sigma_air_filling_fraction: f64,
    pub correlation: f64,
    /// `sum ((model - measured)/sigma)^2`
    pub objective: f64,
    pub residual_rms_nm: f64,
    pub residual_count: usize,
    /// Objective evaluations in which some measurement had no phasematched pair.
    pub penalized_evaluations: usize,
    pub at_bound: bool,
    pub starts: Vec<StartDiagnostics>,
}

struct Problem<'a> {
    measurements: &'a [PhasematchMeasurement],
    base: FiberSpec,
    axis: Axis,
    options: FitOptions,
    penalized: std::cell::Cell<usize>,
}

impl Problem<'_> {
    fn fiber_for(&self, g: &FiberAxisGeometry) -> FiberSpec {
        let mut f = self.base.clone();
        *f.geometry_mut(self.axis) = *g;
        f.pump_axis = self.axis;
        f
    }

    /// Signed residuals in nm; `None` entries failed to phasematch.
    fn model_points(&self, g: &FiberAxisGeometry) -> Vec<Option<PhasematchPoint>> {
        let fiber = self.fiber_for(g);
        let Ok(fd) = FiberDispersion::with_profile(&fiber, self.options.band_nm, self.options.profile_points) else {
            return vec![None; self.measurements.len()];
        };
        self.measurements
            .iter()
            .map(|m| model_point(m, &fd))
            .collect()
    }

    /// Residuals scaled by the uncertainties.
    fn weighted_residuals(&self, g: &FiberAxisGeometry) -> Vec<f64> {
        let pts = self.model_points(g);
        let mut out = Vec::new();
        let mut failed = false;
        for (m, p) in self.measurements.iter().zip(&pts) {
            for (meas, model) in [
                (m.signal_wavelength_nm, p.map(|p| p.signal_wavelength_nm)),
                (m.idler_wavelength_nm, p.map(|p| p.idler_wavelength_nm)),
            ] {
                if let Some(v) = meas {
                    out.push(match model {
                        Some(x) => (x - v) / m.uncertainty_nm,
                        None => {
                            failed = true;
                            FAILURE_PENALTY
                        }
                    });
                }
            }
        }
        if failed {
            self.penalized.set(self.penalized.get() + 1);
        }
        out
    }

    fn objective(&self, u: [f64; 2]) -> f64 {
        let g = self.options.bounds.from_unit(u);
        self.weighted_residuals(&g).iter().map(|r| r * r).sum()
    }
}

/// Phasematched pair for one measurement; searches near the measured pair first.
fn model_point(m: &PhasematchMeasurement, fd: &FiberDispersion) -> Option<PhasematchPoint> {
    let omega_p = omega_from_nm(m.pump_wavelength_nm);
    let mismatch = fd.mismatch_at(omega_p, 0.0).ok()?;
    let guess = omega_from_nm(m.signal_guess_nm());
    let step = 2.0 * std::f64::consts::PI * 0.5e12;
    if guess > omega_p {
        if let Some(ws) = mismatch.signal_root_near(omega_p, guess, step) {
            return Some(PhasematchPoint {
                pump_wavelength_nm: m.pump_wavelength_nm,
                signal_wavelength_nm: nm_from_omega(ws),
                idler_wavelength_nm: nm_from_omega(2.0 * omega_p - ws),
                branch: crate::phasematch::Branch::SignalBelowPump,
            });
        }
    }
    solve_phasematch(m.pump_wavelength_nm, fd, 0.0).ok()
}

/// Bounded Nelder-Mead on the unit square (points are clamped into the box).
fn nelder_mead(f: &dyn Fn([f64; 2]) -> f64, start: [f64; 2], scale: f64, tol: f64, max_eval: usize) -> ([f64; 2], f64, usize, bool) {
    let clamp = |p: [f64; 2]| [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)];
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    let s0 = clamp(start);
    let s1 = clamp([s0[0] + if s0[0] + scale <= 1.0 { scale } else { -scale }, s0[1]]);
    let s2 = clamp([s0[0], s0[1] + if s0[1] + scale <= 1.0 { scale } else { -scale }]);
    let mut evals = 0;
    for p in [s0, s1, s2] {
        simplex.push((p, f(p)));
        evals += 1;
    }
    let order = |s: &mut Vec<([f64; 2], f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0[0].total_cmp(&b.0[0])))
    };
    while evals < max_eval {
        order(&mut simplex);
        let size = simplex[1..]
            .iter()
            .map(|(p, _)| (p[0] - simplex[0].0[0]).abs().max((p[1] - simplex[0].0[1]).abs()))
            .fold(0.0, f64::max);
        if size < tol {
            return (simplex[0].0, simplex[0].1, evals, true);
        }
        let c = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let worst = simplex[2];
        let along = |t: f64| clamp([c[0] + t * (worst.0[0] - c[0]), c[1] + t * (worst.0[1] - c[1])]);
        let r = along(-1.0);
        let fr = f(r);
        evals += 1;
        if fr < simplex[0].1 {
            let e = along(-2.0);
            let fe = f(e);
            evals += 1;
            simplex[2] = if fe < fr { (e, fe) } else { (r, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (r, fr);
        } else {
            let (k, fk) = if fr < worst.1 {
                let k = along(-0.5);
                (k, f(k))
            } else {
                let k = along(0.5);
                (k, f(k))
            };
            evals += 1;
            if fk < worst.1.min(fr) {
                simplex[2] = (k, fk);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    let p = [0.5 * (best[0] + v.0[0]), 0.5 * (best[1] + v.0[1])];
                    *v = (p, f(p));
                    evals += 1;
                }
            }
        }
    }
    order(&mut simplex);
    (simplex[0].0, simplex[0].1, evals, false)
}

/// Deterministic start points: the guess and four points jittered around it.
fn start_points(guess: [f64; 2], n: usize) -> Vec<[f64; 2]> {
    const JITTER: [[f64; 2]; 4] = [[0.15, 0.15], [-0.15, -0.15], [0.15, -0.15], [-0.15, 0.15]];
    let mut out = vec![guess];
    for j in JITTER.iter().cycle().take(n.saturating_sub(1)) {
        out.push([(guess[0] + j[0]).clamp(0.0, 1.0), (guess[1] + j[1]).clamp(0.0, 1.0)]);
    }
    out
}

/// Least-squares fit of the `axis` geometry, with that axis pumped.
///
/// The other axis of `base` enters only through the birefringence term (unless
/// `base` carries a birefringence override).
pub fn fit_geometry(
    measurements: &[PhasematchMeasurement],
    base: &FiberSpec,
    axis: Axis,
    guess: FiberAxisGeometry,
    options: &FitOptions,
) -> Result<FitResult> {
    if measurements.len() < 3 {
        return Err(Error::invalid("measurements", format!("at least 3 are required, got {}", measurements.len())));
    }
    for (j, m) in measurements.iter().enumerate() {
        m.validate().map_err(|e| Error::invalid(format!("measurements[{j}]"), e.to_string()))?;
    }
    base.validate()?;
    options.bounds.validate()?;
    if options.starts == 0 {
        return Err(Error::invalid("fit.starts", "must be at least 1"));
    }
    if !options.bounds.contains(&guess) {
        return Err(Error::invalid("guess", "initial geometry lies outside the bounds"));
    }
    let problem = Problem {
        measurements,
        base: base.clone(),
        axis,
        options: *options,
        penalized: std::cell::Cell::new(0),
    };
    let f = |u: [f64; 2]| problem.objective(u);
    let mut starts = Vec::new();
    let mut best: Option<([f64; 2], f64)> = None;
    for s in start_points(options.bounds.to_unit(&guess), options.starts) {
        let (u, v, evals, converged) = nelder_mead(&f, s, 0.05, options.tolerance, options.max_evaluations);
        starts.push(StartDiagnostics {
            start: options.bounds.from_unit(s),
            end: options.bounds.from_unit(u),
            objective: v,
            evaluations: evals,
            converged,
        });
        let better = match best {
            None => true,
            Some((bu, bv)) => v < bv || (v == bv && (u[0], u[1]) < (bu[0], bu[1])),
        };
        if better {
            best = Some((u, v));
        }
    }
    let (u, objective) = best.expect("at least one start");
    if !starts.iter().any(|s| s.converged) {
        return Err(Error::Convergence(format!(
            "no start converged within {} evaluations; best objective {objective}",
            options.max_evaluations
        )));
    }
    let geometry = options.bounds.from_unit(u);
    let residuals = problem.weighted_residuals(&geometry);
    let nm_residuals: Vec<f64> = {
        let pts = problem.model_points(&geometry);
        let mut v = Vec::new();
        for (m, p) in measurements.iter().zip(&pts) {
            if let Some(p) = p {
                if let Some(s) = m.signal_wavelength_nm {
                    v.push(p.signal_wavelength_nm - s);
                }
                if let Some(i) = m.idler_wavelength_nm {
                    v.push(p.idler_wavelength_nm - i);
                }
            }
        }
        v
    };
    let residual_count: usize = measurements.iter().map(|m| m.residual_count()).sum();
    let rms = if nm_residuals.is_empty() {
        f64::NAN
    } else {
        (nm_residuals.iter().map(|r| r * r).sum::<f64>() / nm_residuals.len() as f64).sqrt()
    };
    let (sd, sf, corr) = covariance(&problem, &geometry, &residuals);
    let at_bound = u.iter().any(|&v| v <= 1e-9 || v >= 1.0 - 1e-9);
    Ok(FitResult {
        axis,
        geometry,
        fiber: problem.fiber_for(&geometry),
        sigma_core_diameter_um: sd,
        sigma_air_filling_fraction: sf,
        correlation: corr,
        objective,
        residual_rms_nm: rms,
        residual_count,
        penalized_evaluations: problem.penalized.get(),
        at_bound,
        starts,
    })
}

/// Gauss-Newton covariance `(J^T J)^-1` from central differences of the weighted residuals.
fn covariance(problem: &Problem<'_>, g: &FiberAxisGeometry, r0: &[f64]) -> (f64, f64, f64) {
    let hd = 1e-5 * g.core_diameter_um;
    let hf = 1e-5 * g.air_filling_fraction;
    let shifted = |dd: f64, df: f64| {
        problem.weighted_residuals(&FiberAxisGeometry {
            core_diameter_um: g.core_diameter_um + dd,
            air_filling_fraction: g.air_filling_fraction + df,
        })
    };
    let (dp, dm) = (shifted(hd, 0.0), shifted(-hd, 0.0));
    let (fp, fm) = (shifted(0.0, hf), shifted(0.0, -hf));
    let n = r0.len();
    if [dp.len(), dm.len(), fp.len(), fm.len()].iter().any(|&l| l != n) {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let j = DMatrix::from_fn(n, 2, |i, c| {
        if c == 0 {
            (dp[i] - dm[i]) / (2.0 * hd)
        } else {
            (fp[i] - fm[i]) / (2.0 * hf)
        }
    });
    let jtj = j.transpose() * &j;
    let m = Matrix2::new(jtj[(0, 0)], jtj[(0, 1)], jtj[(1, 0)], jtj[(1, 1)]);
    match m.try_inverse() {
        Some(c) if c[(0, 0)] > 0.0 && c[(1, 1)] > 0.0 => {
            let (sd, sf) = (c[(0, 0)].sqrt(), c[(1, 1)].sqrt());
            (sd, sf, c[(0, 1)] / (sd * sf))
        }
        _ => (f64::INFINITY, f64::INFINITY, f64::NAN),
    }
}

/// Noise-free measurements from the fit's own forward model: the given
/// geometry on `axis`, pumped on that axis, at each pump wavelength.
pub fn synthesize_measurements(
    base: &FiberSpec,
    axis: Axis,
    geometry: FiberAxisGeometry,
    pumps_nm: &[f64],
    uncertainty_nm: f64,
    options: &FitOptions,
) -> Result<Vec<PhasematchMeasurement>> {
    let mut fiber = base.clone();
    *fiber.geometry_mut(axis) = geometry;
    fiber.pump_axis = axis;
    let fd = FiberDispersion::with_profile(&fiber, options.band_nm, options.profile_points)?;
    pumps_nm
        .iter()
        .map(|&lp| {
            let p = solve_phasematch(lp, &fd, 0.0)?;
            Ok(PhasematchMeasurement {
                pump_wavelength_nm: lp,
                signal_wavelength_nm: Some(p.signal_wavelength_nm),
                idler_wavelength_nm: Some(p.idler_wavelength_nm),
                uncertainty_nm,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_well_formed_and_partial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "lambda_p_nm,lambda_s_nm,lambda_i_nm,sigma_nm\n785,720.1,860.2,0.5\n790,,858.9,0.5\n").unwrap();
        let m = load_measurements(&path).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].signal_wavelength_nm, None);
        assert_eq!(m[1].idler_wavelength_nm, Some(858.9));
    }

    #[test]
    fn load_rejects_garbage_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "lambda_p_nm,lambda_s_nm,lambda_i_nm,sigma_nm\n785,720,860,0.5\n790,abc,858,0.5\n").unwrap();
        let err = load_measurements(&path).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
        std::fs::write(&path, "lambda_p_nm,lambda_s_nm,lambda_i_nm,sigma_nm\n785,,,0.5\n").unwrap();
        let err = load_measurements(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn nelder_mead_quadratic() {
        let f = |u: [f64; 2]| (u[0] - 0.3).powi(2) + 4.0 * (u[1] - 0.7).powi(2) + 0.5 * u[0] * u[1];
        let (u, _, _, ok) = nelder_mead(&f, [0.5, 0.5], 0.05, 1e-10, 2000);
        assert!(ok);
        // grad = 0: [[2, 0.5], [0.5, 8]] (x, y) = (0.6, 5.6)
        let det = 16.0 - 0.25;
        let x = (0.6 * 8.0 - 0.5 * 5.6) / det;
        let y = (2.0 * 5.6 - 0.5 * 0.6) / det;
        assert!((u[0] - x).abs() < 1e-8 && (u[1] - y).abs() < 1e-8, "{u:?}");
    }

    #[test]
    fn nelder_mead_respects_box() {
        let f = |u: [f64; 2]| (u[0] + 1.0).powi(2) + (u[1] - 0.5).powi(2);
        let (u, _, _, _) = nelder_mead(&f, [0.5, 0.5], 0.05, 1e-10, 2000);
        assert_eq!(u[0], 0.0);
        assert!((u[1] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn start_points_are_deterministic() {
        let a = start_points([0.5, 0.5], 5);
        assert_eq!(a.len(), 5);
        assert_eq!(a, start_points([0.5, 0.5], 5));
        assert_eq!(a[0], [0.5, 0.5]);
    }
}
