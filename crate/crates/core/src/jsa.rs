//! Joint spectral amplitude of the photon pair and its Schmidt decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{nm_from_omega, omega_width_from_nm};
use crate::error::{Error, Result};
use crate::phasematch::{solve_phasematch, FiberDispersion, PhaseMismatch, PumpSpec};

pub const MIN_AXIS_POINTS: usize = 64;
pub const DEFAULT_GRID_POINTS: usize = 256;
/// Minimum Simpson intervals for the pump self-convolution.
pub const CONVOLUTION_INTERVALS: usize = 512;
/// The unfiltered Gaussian amplitude is truncated this many r.m.s. widths out.
const GAUSSIAN_CUTOFF_SIGMAS: f64 = 10.0;
const RIDGE_SAMPLES: usize = 201;

/// Uniformly spaced angular-frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl SpectralAxis {
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < MIN_AXIS_POINTS {
            return Err(Error::invalid("grid", format!("each axis needs at least {MIN_AXIS_POINTS} points, got {len}")));
        }
        if !(stop > start && start > 0.0 && stop.is_finite()) {
            return Err(Error::invalid("grid", format!("empty axis ({start}, {stop})")));
        }
        Ok(SpectralAxis {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn at(&self, j: usize) -> f64 {
        self.start + self.step * j as f64
    }

    pub fn stop(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.at(j)).collect()
    }

    fn resized(&self, len: usize) -> Result<Self> {
        SpectralAxis::new(self.start, self.stop(), len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub signal: SpectralAxis,
    pub idler: SpectralAxis,
}

impl SpectralGrid {
    pub fn new(signal: SpectralAxis, idler: SpectralAxis) -> Self {
        SpectralGrid { signal, idler }
    }

    /// Same spans with a different number of points per axis.
    pub fn resized(&self, signal_len: usize, idler_len: usize) -> Result<Self> {
        Ok(SpectralGrid {
            signal: self.signal.resized(signal_len)?,
            idler: self.idler.resized(idler_len)?,
        })
    }

    pub fn cell_area(&self) -> f64 {
        self.signal.step * self.idler.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaOptions {
    #[serde(default = "default_points")]
    pub grid_points: usize,
    /// Half-width of the sinc envelope kept around the ridge, in units of `pi`
    /// of `dk L / 2`.
    #[serde(default = "default_lobes")]
    pub sinc_lobes: f64,
    /// Keep the `exp(i dk L / 2)` factor of the phasematching function.
    #[serde(default = "default_true")]
    pub include_phase: bool,
}

fn default_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_lobes() -> f64 {
    6.0
}

fn default_true() -> bool {
    true
}

impl Default for JsaOptions {
    fn default() -> Self {
        JsaOptions {
            grid_points: DEFAULT_GRID_POINTS,
            sinc_lobes: default_lobes(),
            include_phase: true,
        }
    }
}

impl JsaOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < MIN_AXIS_POINTS {
            return Err(Error::invalid("jsa.grid_points", format!("must be at least {MIN_AXIS_POINTS}")));
        }
        if !(self.sinc_lobes > 0.0 && self.sinc_lobes.is_finite()) {
            return Err(Error::invalid("jsa.sinc_lobes", "must be positive"));
        }
        Ok(())
    }
}

/// Pump spectral envelope: Gaussian amplitude (intensity FWHM `gaussian_fwhm_nm`)
/// multiplied by the rectangular wavelength window, flat phase.
#[derive(Debug, Clone, Copy)]
struct PumpEnvelope {
    center: f64,
    /// r.m.s. width of the amplitude
    sigma: f64,
    /// `[lo, hi]` where the amplitude is nonzero
    support: (f64, f64),
}

impl PumpEnvelope {
    fn new(pump: &PumpSpec) -> Result<Self> {
        pump.validate()?;
        let center = pump.center_omega();
        let fwhm = omega_width_from_nm(pump.center_wavelength_nm, pump.gaussian_fwhm_nm);
        // |A|^2 = exp(-4 ln2 x^2 / fwhm^2) = exp(-x^2 / sigma^2) with A = exp(-x^2 / (2 sigma^2))
        let sigma = fwhm / (2.0 * std::f64::consts::LN_2.sqrt());
        let cut = GAUSSIAN_CUTOFF_SIGMAS * sigma;
        let mut support = (center - cut, center + cut);
        if let Some((lo, hi)) = pump.filter_band_omega() {
            support = (support.0.max(lo), support.1.min(hi));
        }
        Ok(PumpEnvelope { center, sigma, support })
    }

    fn amplitude(&self, omega: f64) -> f64 {
        if omega < self.support.0 || omega > self.support.1 {
            return 0.0;
        }
        let x = (omega - self.center) / self.sigma;
        (-0.5 * x * x).exp()
    }

    /// `int A(w) A(w_sum - w) dw` by composite Simpson over the overlap of the supports.
    fn self_convolution(&self, omega_sum: f64) -> f64 {
        let (lo, hi) = self.support;
        let a = lo.max(omega_sum - hi);
        let b = hi.min(omega_sum - lo);
        if b <= a {
            return 0.0;
        }
        let n = CONVOLUTION_INTERVALS;
        let h = (b - a) / n as f64;
        let g = |w: f64| {
            let x = (w - self.center) / self.sigma;
            let y = (omega_sum - w - self.center) / self.sigma;
            (-0.5 * (x * x + y * y)).exp()
        };
        let mut s = g(a) + g(b);
        for j in 1..n {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * g(a + h * j as f64);
        }
        s * h / 3.0
    }
}

pub fn pump_amplitude(omega: f64, pump: &PumpSpec) -> Result<Complex64> {
    Ok(Complex64::new(PumpEnvelope::new(pump)?.amplitude(omega), 0.0))
}

/// Two-photon pump function `alpha_2(w_s + w_i)`: the self-convolution of the
/// pump amplitude.
pub fn pump_function(omega_sum: f64, pump: &PumpSpec) -> Result<Complex64> {
    Ok(Complex64::new(PumpEnvelope::new(pump)?.self_convolution(omega_sum), 0.0))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn phasematch_value(dk: f64, length_m: f64, include_phase: bool) -> Complex64 {
    let x = 0.5 * dk * length_m;
    let s = sinc(x);
    if include_phase {
        Complex64::from_polar(s, x)
    } else {
        Complex64::new(s, 0.0)
    }
}

/// `sinc(dk L / 2) exp(i dk L / 2)` with the pump frequency taken as `(w_s + w_i)/2`.
pub fn phasematch_function(
    omega_s: f64,
    omega_i: f64,
    mismatch: &PhaseMismatch<'_>,
    length_m: f64,
    include_phase: bool,
) -> Result<Complex64> {
    let dk = mismatch.delta_k(0.5 * (omega_s + omega_i), omega_s, omega_i)?;
    Ok(phasematch_value(dk, length_m, include_phase))
}

#[derive(Debug, Clone)]
pub struct JointSpectralAmplitude {
    pub grid: SpectralGrid,
    /// Rows index the signal axis, columns the idler axis.
    pub amplitude: DMatrix<Complex64>,
}

impl JointSpectralAmplitude {
    /// Wraps an amplitude matrix and normalizes it so `sum |f|^2 dw_s dw_i = 1`.
    pub fn from_matrix(grid: SpectralGrid, amplitude: DMatrix<Complex64>) -> Result<Self> {
        if amplitude.nrows() != grid.signal.len || amplitude.ncols() != grid.idler.len {
            return Err(Error::Shape(format!(
                "amplitude is {}x{} but the grid is {}x{}",
                amplitude.nrows(),
                amplitude.ncols(),
                grid.signal.len,
                grid.idler.len
            )));
        }
        let mut jsa = JointSpectralAmplitude { grid, amplitude };
        let norm = jsa.norm_squared();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::GridMisplaced);
        }
        jsa.amplitude /= Complex64::new(norm.sqrt(), 0.0);
        Ok(jsa)
    }

    /// `sum |f|^2 dw_s dw_i`
    pub fn norm_squared(&self) -> f64 {
        self.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Marginal `sum_i |f|^2 dw_i` on the signal axis.
    pub fn signal_marginal(&self) -> Vec<f64> {
        self.amplitude
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.idler.step)
            .collect()
    }

    pub fn idler_marginal(&self) -> Vec<f64> {
        self.amplitude
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.signal.step)
            .collect()
    }

    /// Intensity-weighted mean signal and idler frequencies.
    pub fn centroids(&self) -> (f64, f64) {
        let mean = |axis: &SpectralAxis, m: &[f64]| {
            let total: f64 = m.iter().sum();
            m.iter().enumerate().map(|(j, v)| axis.at(j) * v).sum::<f64>() / total
        };
        (
            mean(&self.grid.signal, &self.signal_marginal()),
            mean(&self.grid.idler, &self.idler_marginal()),
        )
    }
}

/// Grid that follows the phasematching ridge across the pump support.
///
/// The ridge `dk = 0` is traced for every two-photon frequency in the support
/// of the pump function. Each axis spans the ridge's extent, padded by
/// `sinc_lobes` main-lobe widths of the phasematching function projected on
/// that axis (never more than the pump support width).
pub fn adaptive_grid(pump: &PumpSpec, fiber: &FiberDispersion, options: &JsaOptions) -> Result<SpectralGrid> {
    options.validate()?;
    let env = PumpEnvelope::new(pump)?;
    let center = solve_phasematch(pump.center_wavelength_nm, fiber, 0.0)?;
    let omega_p = pump.center_omega();
    let mismatch = fiber.mismatch_at(omega_p, 0.0)?;
    let (ws0, wi0) = (center.signal_omega(), center.idler_omega());

    let (lo, hi) = env.support;
    let width = hi - lo;
    let mut s_range = (ws0, ws0);
    let mut i_range = (wi0, wi0);
    // trace outward from the center in both directions so each root continues the previous one
    for dir in [-1.0, 1.0] {
        let mut guess = ws0;
        for j in 1..=RIDGE_SAMPLES / 2 {
            let sum = 2.0 * omega_p + dir * width * j as f64 / (RIDGE_SAMPLES / 2) as f64;
            let half = 0.5 * sum;
            let step = 2.0 * std::f64::consts::PI * 0.2e12;
            let Some(ws) = mismatch.signal_root_near(half, guess, step) else {
                break;
            };
            guess = ws;
            let wi = sum - ws;
            s_range = (s_range.0.min(ws), s_range.1.max(ws));
            i_range = (i_range.0.min(wi), i_range.1.max(wi));
        }
    }

    // slope of dk across each axis at the center (the other frequency held fixed)
    let h = 1e-6 * ws0;
    let dk = |s: f64, i: f64| mismatch.delta_k(0.5 * (s + i), s, i);
    let ds = (dk(ws0 + h, wi0)? - dk(ws0 - h, wi0)?) / (2.0 * h);
    let di = (dk(ws0, wi0 + h)? - dk(ws0, wi0 - h)?) / (2.0 * h);
    let lobe = options.sinc_lobes * 2.0 * std::f64::consts::PI / fiber.length_m();
    let pad = |slope: f64| if slope.abs() > 0.0 { (lobe / slope.abs()).min(width) } else { width };
    let (ps, pi) = (pad(ds), pad(di));
    let n = options.grid_points;
    Ok(SpectralGrid {
        signal: SpectralAxis::new(s_range.0 - ps, s_range.1 + ps, n)?,
        idler: SpectralAxis::new(i_range.0 - pi, i_range.1 + pi, n)?,
    })
}

/// Samples `alpha_2(w_s + w_i) * phi(w_s, w_i)` on `grid` and normalizes it.
///
/// The birefringence term is frozen at the pump center frequency.
pub fn build_jsa(
    pump: &PumpSpec,
    fiber: &FiberDispersion,
    grid: &SpectralGrid,
    peak_power_w: f64,
    include_phase: bool,
) -> Result<JointSpectralAmplitude> {
    let env = PumpEnvelope::new(pump)?;
    let mismatch = fiber.mismatch_at(pump.center_omega(), peak_power_w)?;
    let profile = fiber.profile();
    let length = fiber.length_m();
    let (ns, ni) = (grid.signal.len, grid.idler.len);
    let ks: Vec<Option<f64>> = (0..ns).map(|j| profile.wavevector(grid.signal.at(j)).ok()).collect();
    let ki: Vec<Option<f64>> = (0..ni).map(|j| profile.wavevector(grid.idler.at(j)).ok()).collect();
    let mut m = DMatrix::<Complex64>::zeros(ns, ni);
    for (r, ks) in ks.iter().enumerate() {
        let ws = grid.signal.at(r);
        for (c, ki) in ki.iter().enumerate() {
            let wi = grid.idler.at(c);
            let alpha = env.self_convolution(ws + wi);
            if alpha == 0.0 {
                continue;
            }
            let (Some(ks), Some(ki)) = (ks, ki) else {
                return Err(Error::Domain {
                    quantity: "grid wavelength",
                    value: nm_from_omega(if ks.is_none() { ws } else { wi }),
                    min: profile.wavelength_span_nm().0,
                    max: profile.wavelength_span_nm().1,
                    unit: "nm",
                });
            };
            let wp = 0.5 * (ws + wi);
            let dk = 2.0 * profile.wavevector(wp)? + mismatch.constant_terms(wp) - ks - ki;
            m[(r, c)] = phasematch_value(dk, length, include_phase) * alpha;
        }
    }
    JointSpectralAmplitude::from_matrix(*grid, m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchmidtResult {
    /// Descending, summing to one.
    pub coefficients: Vec<f64>,
    pub purity: f64,
    pub schmidt_number: f64,
    pub entropy_bits: f64,
}

impl SchmidtResult {
    fn from_singular_values(mut sv: Vec<f64>, cell_area: f64) -> Result<Self> {
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let weights: Vec<f64> = sv.iter().map(|s| s * s * cell_area).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Numerical(format!(
                "singular values sum to {total}; largest {:?}",
                sv.first()
            )));
        }
        let coefficients: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let purity: f64 = coefficients.iter().map(|l| l * l).sum();
        let entropy_bits = coefficients
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.log2())
            .sum::<f64>()
            .max(0.0);
        Ok(SchmidtResult {
            coefficients,
            purity,
            schmidt_number: 1.0 / purity,
            entropy_bits,
        })
    }
}

pub fn schmidt_decompose(jsa: &JointSpectralAmplitude) -> Result<SchmidtResult> {
    let sv = jsa.amplitude.clone().svd(false, false).singular_values;
    check_finite(sv.as_slice(), jsa)?;
    SchmidtResult::from_singular_values(sv.as_slice().to_vec(), jsa.grid.cell_area())
}

fn check_finite(sv: &[f64], jsa: &JointSpectralAmplitude) -> Result<()> {
    if sv.iter().all(|s| s.is_finite()) {
        return Ok(());
    }
    Err(Error::Numerical(format!(
        "SVD of the {}x{} amplitude produced non-finite singular values",
        jsa.amplitude.nrows(),
        jsa.amplitude.ncols()
    )))
}

/// Schmidt decomposition with the mode functions, for reconstruction and inspection.
#[derive(Debug, Clone)]
pub struct SchmidtModes {
    pub result: SchmidtResult,
    pub singular_values: Vec<f64>,
    /// Columns are signal modes.
    pub signal_modes: DMatrix<Complex64>,
    /// Rows are idler modes.
    pub idler_modes: DMatrix<Complex64>,
}

impl SchmidtModes {
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.singular_values.len(),
            self.singular_values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        &self.signal_modes * s * &self.idler_modes
    }
}

pub fn schmidt_modes(jsa: &JointSpectralAmplitude) -> Result<SchmidtModes> {
    let svd = jsa.amplitude.clone().svd(true, true);
    let sv = svd.singular_values.as_slice().to_vec();
    check_finite(&sv, jsa)?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD did not return singular vectors".into()));
    };
    Ok(SchmidtModes {
        result: SchmidtResult::from_singular_values(sv.clone(), jsa.grid.cell_area())?,
        singular_values: sv,
        signal_modes: u,
        idler_modes: v_t,
    })
}

/// Purity on the adaptive grid together with the refinement check.
#[derive(Debug, Clone, Serialize)]
pub struct PurityEstimate {
    pub length_m: f64,
    pub grid_points: usize,
    pub schmidt: SchmidtResult,
    /// Purity with twice as many points per axis.
    pub refined_purity: f64,
    pub refinement_drift: f64,
}

impl PurityEstimate {
    pub fn purity(&self) -> f64 {
        self.schmidt.purity
    }

    pub fn converged(&self, tolerance: f64) -> bool {
        self.refinement_drift < tolerance
    }
}

/// Builds and decomposes the JSA on the adaptive grid at `N` and `2N` points.
pub fn estimate_purity(
    pump: &PumpSpec,
    fiber: &FiberDispersion,
    peak_power_w: f64,
    options: &JsaOptions,
) -> Result<PurityEstimate> {
    let grid = adaptive_grid(pump, fiber, options)?;
    let jsa = build_jsa(pump, fiber, &grid, peak_power_w, options.include_phase)?;
    let schmidt = schmidt_decompose(&jsa)?;
    let n2 = 2 * options.grid_points;
    let fine = grid.resized(n2, n2)?;
    let refined = schmidt_decompose(&build_jsa(pump, fiber, &fine, peak_power_w, options.include_phase)?)?;
    Ok(PurityEstimate {
        length_m: fiber.length_m(),
        grid_points: options.grid_points,
        refinement_drift: (refined.purity - schmidt.purity).abs(),
        refined_purity: refined.purity,
        schmidt,
    })
}

/// Purity for each fiber length, each on its own length-adapted grid.
pub fn purity_vs_length(
    pump: &PumpSpec,
    fiber: &FiberDispersion,
    lengths_m: &[f64],
    peak_power_w: f64,
    options: &JsaOptions,
) -> Result<Vec<PurityEstimate>> {
    lengths_m
        .iter()
        .map(|&l| estimate_purity(pump, &fiber.with_length(l)?, peak_power_w, options))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(c: f64, half: f64, n: usize) -> SpectralAxis {
        SpectralAxis::new(c - half, c + half, n).unwrap()
    }

    fn gaussian_jsa(a: f64, c: f64, n: usize) -> JointSpectralAmplitude {
        // unit-scaled frequencies offset from a positive origin
        let (x0, half) = (100.0, 12.0);
        let grid = SpectralGrid::new(axis(x0, half, n), axis(x0, half, n));
        let m = DMatrix::from_fn(n, n, |r, k| {
            let x = grid.signal.at(r) - x0;
            let y = grid.idler.at(k) - x0;
            Complex64::new((-(a * x * x + a * y * y + 2.0 * c * x * y)).exp(), 0.0)
        });
        JointSpectralAmplitude::from_matrix(grid, m).unwrap()
    }

    #[test]
    fn axis_rejects_small_or_empty() {
        assert!(SpectralAxis::new(1.0, 2.0, 63).is_err());
        assert!(SpectralAxis::new(2.0, 1.0, 64).is_err());
        let a = SpectralAxis::new(1.0, 2.0, 65).unwrap();
        assert!((a.stop() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn normalization() {
        let j = gaussian_jsa(1.0, 0.3, 128);
        assert!((j.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_state_is_pure() {
        let grid = SpectralGrid::new(axis(10.0, 3.0, 96), axis(20.0, 4.0, 80));
        let m = DMatrix::from_fn(96, 80, |r, k| {
            let x = grid.signal.at(r) - 10.0;
            let y = grid.idler.at(k) - 20.0;
            Complex64::from_polar((-x * x).exp() * (1.0 + 0.2 * y).abs(), 0.3 * x) * (-0.5 * y * y).exp()
        });
        let s = schmidt_decompose(&JointSpectralAmplitude::from_matrix(grid, m).unwrap()).unwrap();
        assert!((s.purity - 1.0).abs() < 1e-9);
        assert!((s.schmidt_number - 1.0).abs() < 1e-9);
        assert!(s.entropy_bits.abs() < 1e-9);
    }

    #[test]
    fn double_gaussian_matches_mehler_expansion() {
        // exp(-(a x^2 + a y^2 + 2 c x y)) has lambda_n = (1 - mu^2) mu^(2n) and
        // purity sqrt(1 - c^2/a^2) = (1 - mu^2)/(1 + mu^2).
        for (a, c) in [(1.0, 0.3), (1.0, 0.6), (0.7, -0.5)] {
            let s = schmidt_decompose(&gaussian_jsa(a, c, 300)).unwrap();
            let p = (1.0 - (c / a) * (c / a)).sqrt();
            assert!((s.purity - p).abs() < 1e-4, "{} vs {p}", s.purity);
            let mu2 = (1.0 - p) / (1.0 + p);
            for n in 0..4 {
                let l = (1.0 - mu2) * mu2.powi(n);
                assert!((s.coefficients[n as usize] - l).abs() < 1e-6);
            }
            let total: f64 = s.coefficients.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            assert!(s.entropy_bits > 0.0);
        }
    }

    #[test]
    fn reconstruction_from_modes() {
        let j = gaussian_jsa(1.0, 0.5, 96);
        let modes = schmidt_modes(&j).unwrap();
        let diff = (modes.reconstruct() - &j.amplitude).norm() / j.amplitude.norm();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn hard_window_edges() {
        let pump = PumpSpec::new(783.0, 20.0, Some(8.0));
        let (lo, hi) = pump.filter_band_omega().unwrap();
        assert_eq!(pump_amplitude(hi * (1.0 + 1e-12), &pump).unwrap().re, 0.0);
        assert_eq!(pump_amplitude(lo * (1.0 - 1e-12), &pump).unwrap().re, 0.0);
        assert!(pump_amplitude(hi * (1.0 - 1e-12), &pump).unwrap().re > 0.0);
    }

    #[test]
    fn unfiltered_peak_at_center() {
        let pump = PumpSpec::new(783.0, 20.0, None);
        let w = pump.center_omega();
        assert_eq!(pump_amplitude(w, &pump).unwrap().re, 1.0);
        assert!(pump_amplitude(w * 1.001, &pump).unwrap().re < 1.0);
    }

    #[test]
    fn window_edge_amplitude_by_hand() {
        // 20 nm FWHM at 780 nm: A(w) = exp(-2 ln2 (w - w0)^2 / dw^2), dw = 2 pi c 20e-9 / (780e-9)^2
        let pump = PumpSpec::new(780.0, 20.0, Some(8.0));
        let c = crate::constants::SPEED_OF_LIGHT;
        let w0 = 2.0 * std::f64::consts::PI * c / 780e-9;
        let dw = 2.0 * std::f64::consts::PI * c * 20e-9 / (780e-9f64).powi(2);
        for edge_nm in [776.0, 784.0] {
            let w = 2.0 * std::f64::consts::PI * c / (edge_nm * 1e-9);
            let hand = (-2.0 * std::f64::consts::LN_2 * (w - w0).powi(2) / (dw * dw)).exp();
            let a = pump_amplitude(w * (1.0 + if edge_nm < 780.0 { -1e-14 } else { 1e-14 }), &pump).unwrap().re;
            assert!((a - hand).abs() < 1e-9, "{a} {hand}");
        }
    }

    #[test]
    fn gaussian_self_convolution() {
        // two Gaussians of r.m.s. width s convolve to sqrt(pi) s exp(-(W - 2 w0)^2 / (4 s^2)),
        // i.e. an amplitude of r.m.s. width s sqrt(2)
        let pump = PumpSpec::new(783.0, 20.0, None);
        let env = PumpEnvelope::new(&pump).unwrap();
        let s = env.sigma;
        for k in [-2.0, -1.0, 0.0, 0.5, 2.5] {
            let sum = 2.0 * env.center + k * s;
            let exact = std::f64::consts::PI.sqrt() * s * (-(k * s).powi(2) / (4.0 * s * s)).exp();
            let got = pump_function(sum, &pump).unwrap().re;
            assert!((got / exact - 1.0).abs() < 1e-10, "{k}: {got} {exact}");
        }
    }

    #[test]
    fn filtered_convolution_support_and_erf_oracle() {
        let pump = PumpSpec::new(783.0, 20.0, Some(8.0));
        let env = PumpEnvelope::new(&pump).unwrap();
        let (lo, hi) = pump.filter_band_omega().unwrap();
        assert_eq!(env.self_convolution(2.0 * lo - 1e6), 0.0);
        assert_eq!(env.self_convolution(2.0 * hi + 1e6), 0.0);
        // closed form: exp(-(W - 2 w0)^2 / (4 s^2)) * s sqrt(pi)/2 * [erf(u_b) - erf(u_a)],
        // u = (w - W/2) / s over the overlap [a, b]
        let s = env.sigma;
        for t in [0.1, 0.3, 0.5, 0.8, 0.95] {
            let sum = 2.0 * lo + t * 2.0 * (hi - lo);
            let a = lo.max(sum - hi);
            let b = hi.min(sum - lo);
            let erf = |w: f64| libm::erf((w - 0.5 * sum) / s);
            let exact = (-(sum - 2.0 * env.center).powi(2) / (4.0 * s * s)).exp()
                * s
                * std::f64::consts::PI.sqrt()
                / 2.0
                * (erf(b) - erf(a));
            let got = env.self_convolution(sum);
            assert!((got / exact - 1.0).abs() < 1e-10, "{t}: {got} {exact}");
        }
    }

    #[test]
    fn sinc_zero_and_peak() {
        assert_eq!(phasematch_value(0.0, 1.0, true).norm(), 1.0);
        let z = phasematch_value(2.0 * std::f64::consts::PI, 1.0, true).norm();
        assert!(z < 1e-15);
        // doubling L halves the dk of the first zero
        assert!(phasematch_value(std::f64::consts::PI, 2.0, false).norm() < 1e-15);
    }
}
