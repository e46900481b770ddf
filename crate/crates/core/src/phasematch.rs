//! Four-wave-mixing wave-vector mismatch, phasematched signal/idler pairs and
//! the group-velocity-matched pump wavelength.

use serde::{Deserialize, Serialize};

use crate::constants::{nm_from_omega, omega_from_nm, SPEED_OF_LIGHT};
use crate::dispersion::{birefringence, DispersionProfile, DEFAULT_BAND_NM, DEFAULT_POINTS};
use crate::error::{Error, Result};
use crate::material::{bracketed_root, Axis, FiberSpec};

/// `int exp(-4 ln2 t^2) dt`: duration-bandwidth factor of a unit-FWHM Gaussian pulse.
pub const GAUSSIAN_SHAPE_FACTOR: f64 = 1.064_467_019_431_226_4;

/// Signal search starts this far (Hz) above the pump to skip the degenerate root.
pub const DEGENERACY_GUARD_HZ: f64 = 2.0e12;
const SCAN_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSpec {
    pub center_wavelength_nm: f64,
    /// Intensity FWHM of the laser spectrum before filtering.
    pub gaussian_fwhm_nm: f64,
    /// Width of the rectangular wavelength window, if the pump is filtered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_width_nm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average_power_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition_rate_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_fwhm_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_power_w: Option<f64>,
}

impl PumpSpec {
    pub fn new(center_wavelength_nm: f64, gaussian_fwhm_nm: f64, filter_width_nm: Option<f64>) -> Self {
        PumpSpec {
            center_wavelength_nm,
            gaussian_fwhm_nm,
            filter_width_nm,
            average_power_w: None,
            repetition_rate_hz: None,
            pulse_fwhm_s: None,
            peak_power_w: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_wavelength_nm > 0.0 && self.center_wavelength_nm.is_finite()) {
            return Err(Error::invalid("pump.center_wavelength_nm", "must be positive"));
        }
        if !(self.gaussian_fwhm_nm > 0.0 && self.gaussian_fwhm_nm.is_finite()) {
            return Err(Error::invalid("pump.gaussian_fwhm_nm", "must be positive"));
        }
        if let Some(w) = self.filter_width_nm {
            if !(w > 0.0 && w < self.center_wavelength_nm) {
                return Err(Error::invalid("pump.filter_width_nm", "must be positive and narrower than the center wavelength"));
            }
        }
        for (name, v) in [
            ("pump.average_power_w", self.average_power_w),
            ("pump.repetition_rate_hz", self.repetition_rate_hz),
            ("pump.pulse_fwhm_s", self.pulse_fwhm_s),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::invalid(name, "must be positive"));
                }
            }
        }
        if let Some(p) = self.peak_power_w {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::invalid("pump.peak_power_w", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn center_omega(&self) -> f64 {
        omega_from_nm(self.center_wavelength_nm)
    }

    /// Filter pass band in angular frequency, `(low, high)`.
    pub fn filter_band_omega(&self) -> Option<(f64, f64)> {
        self.filter_width_nm.map(|w| {
            (
                omega_from_nm(self.center_wavelength_nm + 0.5 * w),
                omega_from_nm(self.center_wavelength_nm - 0.5 * w),
            )
        })
    }
}

/// Peak power in W: the explicit value, else average power over
/// (repetition rate x pulse FWHM x Gaussian shape factor), else zero.
pub fn resolve_peak_power(pump: &PumpSpec) -> Result<f64> {
    pump.validate()?;
    if let Some(p) = pump.peak_power_w {
        return Ok(p);
    }
    match (pump.average_power_w, pump.repetition_rate_hz, pump.pulse_fwhm_s) {
        (Some(avg), Some(rate), Some(tau)) => Ok(avg / (rate * tau * GAUSSIAN_SHAPE_FACTOR)),
        (None, None, None) => Ok(0.0),
        _ => Err(Error::Config(
            "pump: average_power_w, repetition_rate_hz and pulse_fwhm_s must be given together".into(),
        )),
    }
}

/// Source of the birefringence term.
#[derive(Debug, Clone)]
enum BirefringenceSource {
    /// Evaluated from the fiber at each pump wavelength.
    Fiber(FiberSpec),
    /// A fixed `n_pump_axis - n_other_axis`.
    Fixed(f64),
}

/// Dispersion of the pumped axis together with everything else entering the
/// wave-vector mismatch.
#[derive(Debug, Clone)]
pub struct FiberDispersion {
    profile: DispersionProfile,
    birefringence: BirefringenceSource,
    pump_axis: Axis,
    gamma_per_w_m: f64,
    length_m: f64,
}

impl FiberDispersion {
    pub fn new(fiber: &FiberSpec) -> Result<Self> {
        Self::with_profile(fiber, DEFAULT_BAND_NM, DEFAULT_POINTS)
    }

    pub fn with_profile(fiber: &FiberSpec, band_nm: (f64, f64), points: usize) -> Result<Self> {
        fiber.validate()?;
        let profile = DispersionProfile::build(fiber, fiber.pump_axis, band_nm, points)?;
        Ok(FiberDispersion {
            profile,
            birefringence: BirefringenceSource::Fiber(fiber.clone()),
            pump_axis: fiber.pump_axis,
            gamma_per_w_m: fiber.gamma_per_w_m(),
            length_m: fiber.length_m,
        })
    }

    /// Mismatch model from an arbitrary pumped-axis profile and a fixed
    /// `n_pump_axis - n_other_axis`.
    pub fn from_parts(profile: DispersionProfile, delta_n_term: f64, gamma_per_w_km: f64, length_m: f64) -> Result<Self> {
        if !(length_m > 0.0) {
            return Err(Error::invalid("length_m", "must be positive"));
        }
        if !(gamma_per_w_km >= 0.0) {
            return Err(Error::invalid("gamma_per_w_km", "must be non-negative"));
        }
        Ok(FiberDispersion {
            pump_axis: profile.axis().unwrap_or(Axis::Fast),
            profile,
            birefringence: BirefringenceSource::Fixed(delta_n_term),
            gamma_per_w_m: gamma_per_w_km * 1e-3,
            length_m,
        })
    }

    pub fn profile(&self) -> &DispersionProfile {
        &self.profile
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_per_w_m
    }

    pub fn with_length(&self, length_m: f64) -> Result<Self> {
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(Error::invalid("length_m", format!("must be positive, got {length_m}")));
        }
        let mut out = self.clone();
        out.length_m = length_m;
        Ok(out)
    }

    /// `n(pump axis) - n(orthogonal axis)` at the pump frequency.
    ///
    /// With `birefringence = n_slow - n_fast`, pumping the fast axis gives the
    /// negative of the birefringence.
    pub fn delta_n_term(&self, omega_p: f64) -> Result<f64> {
        match &self.birefringence {
            BirefringenceSource::Fixed(v) => Ok(*v),
            BirefringenceSource::Fiber(fiber) => {
                let dn = birefringence(nm_from_omega(omega_p), fiber)?;
                Ok(match self.pump_axis {
                    Axis::Slow => dn,
                    Axis::Fast => -dn,
                })
            }
        }
    }

    /// Mismatch with the birefringence term frozen at `omega_ref`.
    pub fn mismatch_at(&self, omega_ref: f64, peak_power_w: f64) -> Result<PhaseMismatch<'_>> {
        Ok(PhaseMismatch {
            profile: &self.profile,
            delta_n_term: self.delta_n_term(omega_ref)?,
            nonlinear: 2.0 / 3.0 * self.gamma_per_w_m * peak_power_w,
        })
    }
}

/// `dk = 2 k_p + (2/3) gamma P + 2 dn w_p / c - k_s - k_i` with a fixed `dn`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseMismatch<'a> {
    profile: &'a DispersionProfile,
    delta_n_term: f64,
    nonlinear: f64,
}

impl PhaseMismatch<'_> {
    pub fn delta_n_term(&self) -> f64 {
        self.delta_n_term
    }

    /// `(2/3) gamma P + 2 dn w_p / c`
    pub fn constant_terms(&self, omega_p: f64) -> f64 {
        self.nonlinear + 2.0 * self.delta_n_term * omega_p / SPEED_OF_LIGHT
    }

    pub fn delta_k(&self, omega_p: f64, omega_s: f64, omega_i: f64) -> Result<f64> {
        let p = &self.profile;
        Ok(2.0 * p.wavevector(omega_p)? + self.constant_terms(omega_p) - p.wavevector(omega_s)? - p.wavevector(omega_i)?)
    }

    /// Mismatch along the energy-conservation line `w_i = 2 w_p - w_s`.
    fn along(&self, omega_p: f64, omega_s: f64) -> f64 {
        self.delta_k(omega_p, omega_s, 2.0 * omega_p - omega_s).unwrap_or(f64::NAN)
    }

    /// Range of signal frequencies whose idler stays inside the profile.
    fn signal_window(&self, omega_p: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.profile.omega_span();
        if !(omega_p > lo && omega_p < hi) {
            return Err(Error::Domain {
                quantity: "pump wavelength",
                value: nm_from_omega(omega_p),
                min: nm_from_omega(hi),
                max: nm_from_omega(lo),
                unit: "nm",
            });
        }
        let start = omega_p + 2.0 * std::f64::consts::PI * DEGENERACY_GUARD_HZ;
        let end = hi.min(2.0 * omega_p - lo);
        Ok((start, end))
    }

    /// All signal frequencies above the guard band where the mismatch vanishes.
    pub fn signal_roots(&self, omega_p: f64) -> Result<Vec<f64>> {
        let (start, end) = self.signal_window(omega_p)?;
        let mut roots = Vec::new();
        if end <= start {
            return Ok(roots);
        }
        let f = |w: f64| self.along(omega_p, w);
        let mut prev_w = start;
        let mut prev = f(start);
        for j in 1..=SCAN_POINTS {
            let w = start + (end - start) * j as f64 / SCAN_POINTS as f64;
            let v = f(w);
            if prev.is_finite() && v.is_finite() && (prev > 0.0) != (v > 0.0) {
                if let Some(r) = bracketed_root(f, prev_w, w) {
                    roots.push(r);
                }
            }
            prev_w = w;
            prev = v;
        }
        Ok(roots)
    }

    /// Root closest to `guess` found by expanding a bracket around it.
    pub fn signal_root_near(&self, omega_p: f64, guess: f64, step: f64) -> Option<f64> {
        let (start, end) = self.signal_window(omega_p).ok()?;
        let f = |w: f64| self.along(omega_p, w);
        let clamp = |w: f64| w.clamp(start, end);
        let mut a = clamp(guess - step);
        let mut b = clamp(guess + step);
        for _ in 0..12 {
            let (fa, fb) = (f(a), f(b));
            if fa.is_finite() && fb.is_finite() && (fa > 0.0) != (fb > 0.0) {
                return bracketed_root(f, a, b);
            }
            let width = b - a;
            a = clamp(a - width);
            b = clamp(b + width);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    SignalBelowPump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasematchPoint {
    pub pump_wavelength_nm: f64,
    pub signal_wavelength_nm: f64,
    pub idler_wavelength_nm: f64,
    pub branch: Branch,
}

impl PhasematchPoint {
    fn from_omegas(omega_p: f64, omega_s: f64) -> Self {
        PhasematchPoint {
            pump_wavelength_nm: nm_from_omega(omega_p),
            signal_wavelength_nm: nm_from_omega(omega_s),
            idler_wavelength_nm: nm_from_omega(2.0 * omega_p - omega_s),
            branch: Branch::SignalBelowPump,
        }
    }

    pub fn signal_omega(&self) -> f64 {
        omega_from_nm(self.signal_wavelength_nm)
    }

    pub fn idler_omega(&self) -> f64 {
        omega_from_nm(self.idler_wavelength_nm)
    }
}

/// Wave-vector mismatch in rad/m with the birefringence evaluated at `omega_p`.
pub fn delta_k(omega_p: f64, omega_s: f64, omega_i: f64, fiber: &FiberDispersion, peak_power_w: f64) -> Result<f64> {
    fiber.mismatch_at(omega_p, peak_power_w)?.delta_k(omega_p, omega_s, omega_i)
}

/// Nondegenerate phasematched pair for pump wavelength `lambda_p_nm`.
///
/// The signal is the high-frequency photon; the root nearest the degeneracy
/// guard band is returned.
pub fn solve_phasematch(lambda_p_nm: f64, fiber: &FiberDispersion, peak_power_w: f64) -> Result<PhasematchPoint> {
    let omega_p = omega_from_nm(lambda_p_nm);
    let m = fiber.mismatch_at(omega_p, peak_power_w)?;
    let roots = m.signal_roots(omega_p)?;
    roots
        .first()
        .map(|&ws| PhasematchPoint::from_omegas(omega_p, ws))
        .ok_or(Error::NoPhasematch { pump_nm: lambda_p_nm })
}

/// Like [`solve_phasematch`] but searches outward from a previous signal
/// wavelength first; falls back to the full scan.
pub fn solve_phasematch_near(
    lambda_p_nm: f64,
    signal_guess_nm: f64,
    fiber: &FiberDispersion,
    peak_power_w: f64,
) -> Result<PhasematchPoint> {
    let omega_p = omega_from_nm(lambda_p_nm);
    let m = fiber.mismatch_at(omega_p, peak_power_w)?;
    let guess = omega_from_nm(signal_guess_nm);
    let step = 2.0 * std::f64::consts::PI * 0.5e12;
    if let Some(ws) = m.signal_root_near(omega_p, guess, step) {
        return Ok(PhasematchPoint::from_omegas(omega_p, ws));
    }
    solve_phasematch(lambda_p_nm, fiber, peak_power_w)
}

/// Every nondegenerate phasematched pair at `lambda_p_nm`, signal frequency ascending.
pub fn phasematch_roots(lambda_p_nm: f64, fiber: &FiberDispersion, peak_power_w: f64) -> Result<Vec<PhasematchPoint>> {
    let omega_p = omega_from_nm(lambda_p_nm);
    let m = fiber.mismatch_at(omega_p, peak_power_w)?;
    Ok(m.signal_roots(omega_p)?
        .into_iter()
        .map(|ws| PhasematchPoint::from_omegas(omega_p, ws))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveFailure {
    pub pump_wavelength_nm: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PhasematchCurve {
    pub points: Vec<PhasematchPoint>,
    pub failures: Vec<CurveFailure>,
}

/// Pump wavelengths spaced evenly over `range`, endpoints included.
pub fn pump_samples(range_nm: (f64, f64), n_points: usize) -> Vec<f64> {
    match n_points {
        0 => vec![],
        1 => vec![range_nm.0],
        n => (0..n)
            .map(|j| range_nm.0 + (range_nm.1 - range_nm.0) * j as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Solves each pump wavelength independently; failed points are reported, not fatal.
pub fn phasematch_curve(
    range_nm: (f64, f64),
    n_points: usize,
    fiber: &FiberDispersion,
    peak_power_w: f64,
) -> PhasematchCurve {
    let mut curve = PhasematchCurve::default();
    for lp in pump_samples(range_nm, n_points) {
        match solve_phasematch(lp, fiber, peak_power_w) {
            Ok(p) => curve.points.push(p),
            Err(e) => curve.failures.push(CurveFailure {
                pump_wavelength_nm: lp,
                reason: e.to_string(),
            }),
        }
    }
    curve
}

/// `dk/dw(signal) - dk/dw(pump)` on the phasematched branch.
fn gvm_mismatch(lambda_p_nm: f64, fiber: &FiberDispersion) -> Result<f64> {
    let pt = solve_phasematch(lambda_p_nm, fiber, 0.0)?;
    let p = fiber.profile();
    Ok(p.inverse_group_velocity(pt.signal_omega())? - p.inverse_group_velocity(omega_from_nm(lambda_p_nm))?)
}

/// Pump wavelength (nm) in `range_nm` where signal and pump group velocities match.
pub fn gvm_pump_wavelength(fiber: &FiberDispersion, range_nm: (f64, f64)) -> Result<f64> {
    let (a, b) = range_nm;
    if !(a > 0.0 && b > a) {
        return Err(Error::invalid("range_nm", format!("expected 0 < start < end, got ({a}, {b})")));
    }
    let none = || Error::NoGroupVelocityMatch { from_nm: a, to_nm: b };
    const STEP_NM: f64 = 0.5;
    let n = ((b - a) / STEP_NM).ceil() as usize;
    let g = |l: f64| gvm_mismatch(l, fiber).unwrap_or(f64::NAN);
    let mut prev_l = a;
    let mut prev = g(a);
    for j in 1..=n {
        let l = (a + j as f64 * STEP_NM).min(b);
        let v = g(l);
        if prev.is_finite() && v.is_finite() && (prev > 0.0) != (v > 0.0) {
            let (mut lo, mut hi, mut flo) = (prev_l, l, prev);
            while hi - lo > 1e-4 {
                let mid = 0.5 * (lo + hi);
                let fm = g(mid);
                if !fm.is_finite() {
                    return Err(none());
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_l = l;
        prev = v;
    }
    Err(none())
}
