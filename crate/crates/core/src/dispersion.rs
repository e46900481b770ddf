//! Wavevector, group delay and group-velocity dispersion of one fiber axis.
//!
//! The effective index is sampled at Chebyshev-Lobatto nodes in angular
//! frequency and represented by its Chebyshev series, so `k`, `dk/dw` and
//! `d2k/dw2` come from the exact derivatives of a single smooth interpolant.

use crate::constants::{nm_from_omega, omega_from_nm, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::material::{bracketed_root, Axis, FiberSpec};

pub const DEFAULT_BAND_NM: (f64, f64) = (550.0, 1250.0);
pub const DEFAULT_POINTS: usize = 2048;
pub const MIN_POINTS: usize = 32;
/// Derivatives are refused closer than this many mean node spacings to an edge.
pub const EDGE_GUARD_SPACINGS: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct DispersionProfile {
    axis: Option<Axis>,
    omega: Vec<f64>,
    n_eff: Vec<f64>,
    mid: f64,
    half: f64,
    coeffs: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl DispersionProfile {
    /// Samples the effective index of `axis` over the wavelength `band_nm`.
    pub fn build(fiber: &FiberSpec, axis: Axis, band_nm: (f64, f64), points: usize) -> Result<Self> {
        fiber.validate()?;
        let geometry = *fiber.geometry(axis);
        let model = fiber.model;
        let omega_band = band_to_omega(band_nm)?;
        let mut p = Self::from_fn(omega_band, points, |w| {
            model.effective_index(nm_from_omega(w) * 1e-3, &geometry)
        })?;
        p.axis = Some(axis);
        Ok(p)
    }

    pub fn build_default(fiber: &FiberSpec, axis: Axis) -> Result<Self> {
        Self::build(fiber, axis, DEFAULT_BAND_NM, DEFAULT_POINTS)
    }

    /// Profile from an arbitrary effective-index function of angular frequency.
    pub fn from_fn(
        omega_band: (f64, f64),
        points: usize,
        n_of_omega: impl Fn(f64) -> Result<f64>,
    ) -> Result<Self> {
        if points < MIN_POINTS {
            return Err(Error::invalid("points", format!("at least {MIN_POINTS} samples are required, got {points}")));
        }
        let (lo, hi) = omega_band;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::invalid("band", format!("empty frequency band ({lo}, {hi})")));
        }
        let m = points - 1;
        let mid = 0.5 * (hi + lo);
        let half = 0.5 * (hi - lo);
        // ascending frequency: x_j = -cos(pi j / m)
        let mut omega = Vec::with_capacity(points);
        let mut n_eff = Vec::with_capacity(points);
        for j in 0..points {
            let x = if 2 * j == m {
                0.0
            } else {
                -(std::f64::consts::PI * j as f64 / m as f64).cos()
            };
            let w = if j == 0 {
                lo
            } else if j == m {
                hi
            } else {
                mid + half * x
            };
            omega.push(w);
            n_eff.push(n_of_omega(w)?);
        }
        let coeffs = chebyshev_coefficients(&n_eff);
        let d1 = derivative_coefficients(&coeffs);
        let d2 = derivative_coefficients(&d1);
        Ok(DispersionProfile {
            axis: None,
            omega,
            n_eff,
            mid,
            half,
            coeffs,
            d1,
            d2,
        })
    }

    pub fn axis(&self) -> Option<Axis> {
        self.axis
    }

    /// Sample frequencies in ascending order.
    pub fn grid(&self) -> &[f64] {
        &self.omega
    }

    pub fn samples(&self) -> &[f64] {
        &self.n_eff
    }

    pub fn omega_span(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    /// Wavelength span in nm, shortest first.
    pub fn wavelength_span_nm(&self) -> (f64, f64) {
        let (lo, hi) = self.omega_span();
        (nm_from_omega(hi), nm_from_omega(lo))
    }

    /// Number of Chebyshev terms retained after chopping the noise tail.
    pub fn series_len(&self) -> usize {
        self.coeffs.len()
    }

    fn mean_spacing(&self) -> f64 {
        2.0 * self.half / (self.omega.len() - 1) as f64
    }

    pub fn contains(&self, omega: f64) -> bool {
        let (lo, hi) = self.omega_span();
        omega >= lo && omega <= hi
    }

    /// True when `omega` is far enough from the edges for derivative queries.
    pub fn contains_interior(&self, omega: f64) -> bool {
        let (lo, hi) = self.omega_span();
        let g = EDGE_GUARD_SPACINGS * self.mean_spacing();
        omega >= lo + g && omega <= hi - g
    }

    pub fn interior_span(&self) -> (f64, f64) {
        let (lo, hi) = self.omega_span();
        let g = EDGE_GUARD_SPACINGS * self.mean_spacing();
        (lo + g, hi - g)
    }

    fn check(&self, omega: f64) -> Result<()> {
        if self.contains(omega) {
            Ok(())
        } else {
            let (lo, hi) = self.omega_span();
            Err(Error::Domain {
                quantity: "omega",
                value: omega,
                min: lo,
                max: hi,
                unit: "rad/s",
            })
        }
    }

    fn check_interior(&self, omega: f64) -> Result<()> {
        if self.contains_interior(omega) {
            Ok(())
        } else {
            let (lo, hi) = self.interior_span();
            Err(Error::Domain {
                quantity: "omega (derivative edge guard)",
                value: omega,
                min: lo,
                max: hi,
                unit: "rad/s",
            })
        }
    }

    fn x(&self, omega: f64) -> f64 {
        (omega - self.mid) / self.half
    }

    pub fn n_eff(&self, omega: f64) -> Result<f64> {
        self.check(omega)?;
        Ok(clenshaw(&self.coeffs, self.x(omega)))
    }

    /// `(n, dn/dw, d2n/dw2)`; no edge guard.
    fn n_derivatives(&self, omega: f64) -> (f64, f64, f64) {
        let x = self.x(omega);
        (
            clenshaw(&self.coeffs, x),
            clenshaw(&self.d1, x) / self.half,
            clenshaw(&self.d2, x) / (self.half * self.half),
        )
    }

    /// `k = n w / c` in rad/m.
    pub fn wavevector(&self, omega: f64) -> Result<f64> {
        Ok(self.n_eff(omega)? * omega / SPEED_OF_LIGHT)
    }

    /// `dk/dw` in s/m.
    pub fn inverse_group_velocity(&self, omega: f64) -> Result<f64> {
        self.check_interior(omega)?;
        let (n, dn, _) = self.n_derivatives(omega);
        Ok((n + omega * dn) / SPEED_OF_LIGHT)
    }

    /// `d2k/dw2` in s^2/m.
    pub fn gvd(&self, omega: f64) -> Result<f64> {
        self.check_interior(omega)?;
        let (_, dn, d2n) = self.n_derivatives(omega);
        Ok((2.0 * dn + omega * d2n) / SPEED_OF_LIGHT)
    }
}

fn band_to_omega(band_nm: (f64, f64)) -> Result<(f64, f64)> {
    let (a, b) = band_nm;
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::invalid("band_nm", format!("expected 0 < start < end, got ({a}, {b})")));
    }
    Ok((omega_from_nm(b), omega_from_nm(a)))
}

/// Chebyshev coefficients of the interpolant through values at ascending
/// Lobatto nodes `-cos(pi j / m)`, with the round-off tail removed.
fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    // table of cos(pi q / m) for q in 0..2m
    let table: Vec<f64> = (0..2 * m)
        .map(|q| (std::f64::consts::PI * q as f64 / m as f64).cos())
        .collect();
    let mut c = vec![0.0; m + 1];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, &v) in values.iter().enumerate() {
            // node j sits at cos(pi (m - j) / m)
            let w = if j == 0 || j == m { 0.5 } else { 1.0 };
            s += w * v * table[(k * (m - j)) % (2 * m)];
        }
        *ck = 2.0 * s / m as f64;
    }
    c[0] *= 0.5;
    c[m] *= 0.5;
    chop(c)
}

fn chop(mut c: Vec<f64>) -> Vec<f64> {
    let scale = c.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let tol = 64.0 * f64::EPSILON * scale;
    let last = c.iter().rposition(|v| v.abs() > tol).unwrap_or(0);
    c.truncate(last + 1);
    c
}

fn derivative_coefficients(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n < 2 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n];
    for k in (0..n - 1).rev() {
        d[k] = d.get(k + 2).copied().unwrap_or(0.0) + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

fn clenshaw(c: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// All zero-GVD wavelengths (nm) inside `band_nm`, ascending.
pub fn zero_gvd_wavelengths(profile: &DispersionProfile, band_nm: (f64, f64)) -> Result<Vec<f64>> {
    let (w_lo, w_hi) = band_to_omega(band_nm)?;
    let (g_lo, g_hi) = profile.interior_span();
    if w_lo < g_lo || w_hi > g_hi {
        return Err(Error::Domain {
            quantity: "search band",
            value: if w_lo < g_lo { band_nm.1 } else { band_nm.0 },
            min: nm_from_omega(g_hi),
            max: nm_from_omega(g_lo),
            unit: "nm",
        });
    }
    const SCAN: usize = 4000;
    let gvd = |w: f64| profile.gvd(w).unwrap_or(f64::NAN);
    let mut roots = Vec::new();
    let mut prev_w = w_lo;
    let mut prev = gvd(prev_w);
    for i in 1..=SCAN {
        let w = w_lo + (w_hi - w_lo) * i as f64 / SCAN as f64;
        let g = gvd(w);
        if prev != 0.0 && g != 0.0 && (prev > 0.0) != (g > 0.0) {
            if let Some(r) = bracketed_root(gvd, prev_w, w) {
                roots.push(r);
            }
        }
        prev_w = w;
        prev = g;
    }
    let mut nm: Vec<f64> = roots.into_iter().map(nm_from_omega).collect();
    nm.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(nm)
}

/// `n_slow - n_fast` at `wavelength_nm`, or the configured override.
pub fn birefringence(wavelength_nm: f64, fiber: &FiberSpec) -> Result<f64> {
    if let Some(dn) = fiber.birefringence_override {
        return Ok(dn);
    }
    let l = wavelength_nm * 1e-3;
    Ok(fiber.effective_index(Axis::Slow, l)? - fiber.effective_index(Axis::Fast, l)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{FiberAxisGeometry, StepIndexModel};

    pub(crate) fn reference_fiber() -> FiberSpec {
        FiberSpec {
            fast_axis: FiberAxisGeometry::new(1.7507, 0.511).unwrap(),
            slow_axis: FiberAxisGeometry::new(1.7488, 0.505).unwrap(),
            gamma_per_w_km: 99.0,
            length_m: 0.4,
            birefringence_override: None,
            pump_axis: Axis::Fast,
            model: StepIndexModel::default(),
        }
    }

    fn band() -> (f64, f64) {
        (omega_from_nm(1250.0), omega_from_nm(550.0))
    }

    #[test]
    fn chebyshev_reproduces_polynomial() {
        let p = DispersionProfile::from_fn(band(), 40, |w| {
            let x = (w - 2.5e15) / 1e15;
            Ok(1.4 + 0.01 * x - 0.003 * x * x + 0.0007 * x * x * x)
        })
        .unwrap();
        assert!(p.series_len() <= 6);
        let w = 2.2e15;
        let x = (w - 2.5e15) / 1e15;
        let n = 1.4 + 0.01 * x - 0.003 * x * x + 0.0007 * x * x * x;
        let dn = (0.01 - 0.006 * x + 0.0021 * x * x) / 1e15;
        let d2n = (-0.006 + 0.0042 * x) / 1e30;
        assert!((p.n_eff(w).unwrap() - n).abs() < 1e-15);
        let k1 = (n + w * dn) / SPEED_OF_LIGHT;
        let k2 = (2.0 * dn + w * d2n) / SPEED_OF_LIGHT;
        assert!((p.inverse_group_velocity(w).unwrap() / k1 - 1.0).abs() < 1e-13);
        assert!((p.gvd(w).unwrap() / k2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_index_profile() {
        let p = DispersionProfile::from_fn(band(), 64, |_| Ok(1.45)).unwrap();
        for w in [1.8e15, 2.4e15, 3.0e15] {
            assert!((p.inverse_group_velocity(w).unwrap() * SPEED_OF_LIGHT - 1.45).abs() < 1e-14);
            assert!(p.gvd(w).unwrap().abs() < 1e-45);
        }
        assert!(zero_gvd_wavelengths(&p, (600.0, 1100.0)).unwrap().is_empty());
    }

    #[test]
    fn rejects_small_grid_and_extrapolation() {
        assert!(DispersionProfile::from_fn(band(), 31, |_| Ok(1.45)).is_err());
        let p = DispersionProfile::from_fn(band(), 64, |_| Ok(1.45)).unwrap();
        assert!(p.wavevector(band().0 * 0.999).is_err());
        assert!(p.wavevector(band().0).is_ok());
        assert!(p.inverse_group_velocity(band().0).is_err());
        assert!(p.gvd(band().1).is_err());
    }

    #[test]
    fn grid_ascending() {
        let p = DispersionProfile::from_fn(band(), 100, |_| Ok(1.45)).unwrap();
        assert!(p.grid().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.grid()[0], band().0);
        assert_eq!(*p.grid().last().unwrap(), band().1);
    }

    #[test]
    fn interpolant_matches_mode_solver_between_nodes() {
        let fiber = reference_fiber();
        let p = DispersionProfile::build_default(&fiber, Axis::Fast).unwrap();
        let g = p.grid();
        for j in (1..g.len() - 1).step_by(97) {
            let w = 0.5 * (g[j] + g[j + 1]);
            let direct = fiber.effective_index(Axis::Fast, nm_from_omega(w) * 1e-3).unwrap();
            assert!((p.n_eff(w).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_gvd_of_constructed_cubic() {
        // k(w) = k0 + k1 W + k2 W^2 / 2 + k3 W^3 / 6 with W = w - w0; GVD vanishes at w0 - k2/k3
        let w0 = omega_from_nm(800.0);
        let (k1, k2, k3) = (1.47 / SPEED_OF_LIGHT, -2.0e-27, 6.0e-41);
        let k0 = 1.45 * w0 / SPEED_OF_LIGHT;
        let k = move |w: f64| {
            let d = w - w0;
            k0 + k1 * d + k2 * d * d / 2.0 + k3 * d * d * d / 6.0
        };
        let p = DispersionProfile::from_fn(band(), 256, |w| Ok(k(w) * SPEED_OF_LIGHT / w)).unwrap();
        let expected = nm_from_omega(w0 - k2 / k3);
        let roots = zero_gvd_wavelengths(&p, (600.0, 1100.0)).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - expected).abs() < 0.01, "{} vs {expected}", roots[0]);
    }

    #[test]
    fn birefringence_semantics() {
        let mut fiber = reference_fiber();
        let dn = birefringence(785.0, &fiber).unwrap();
        assert!(dn > 1.5e-6 && dn < 1.5e-4, "{dn}");
        fiber.slow_axis = fiber.fast_axis;
        assert_eq!(birefringence(785.0, &fiber).unwrap(), 0.0);
        fiber.birefringence_override = Some(1.5e-5);
        assert_eq!(birefringence(785.0, &fiber).unwrap(), 1.5e-5);
    }
}
