//! Refractive-index models: fused silica, the air/silica photonic-crystal
//! cladding, and the fundamental-mode effective index of the equivalent
//! step-index fiber.

use serde::{Deserialize, Serialize};

use crate::bessel::{j0, j1, k0_over_k1, J0_FIRST_ZERO, J1_FIRST_ZERO};
use crate::constants::{FUSED_SILICA_SELLMEIER, FUSED_SILICA_WINDOW_UM};
use crate::error::{Error, Result};

/// One Sellmeier resonance: `strength * lambda^2 / (lambda^2 - resonance_um2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierTerm {
    pub strength: f64,
    pub resonance_um2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellmeierModel {
    terms: Vec<SellmeierTerm>,
    window_um: (f64, f64),
}

impl SellmeierModel {
    pub fn new(terms: Vec<SellmeierTerm>, window_um: (f64, f64)) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("sellmeier.terms", "at least one term is required"));
        }
        for (i, t) in terms.iter().enumerate() {
            if !(t.strength > 0.0) || !(t.resonance_um2 > 0.0) {
                return Err(Error::invalid(
                    format!("sellmeier.terms[{i}]"),
                    "strength and resonance wavelength squared must be positive",
                ));
            }
        }
        if !(window_um.0 > 0.0 && window_um.1 > window_um.0) {
            return Err(Error::invalid("sellmeier.window", "empty validity window"));
        }
        Ok(SellmeierModel { terms, window_um })
    }

    pub fn fused_silica() -> Self {
        let terms = FUSED_SILICA_SELLMEIER
            .iter()
            .map(|&(b, l)| SellmeierTerm {
                strength: b,
                resonance_um2: l * l,
            })
            .collect();
        SellmeierModel {
            terms,
            window_um: FUSED_SILICA_WINDOW_UM,
        }
    }

    pub fn window_um(&self) -> (f64, f64) {
        self.window_um
    }

    pub fn index(&self, wavelength_um: f64) -> Result<f64> {
        let (lo, hi) = self.window_um;
        if !(wavelength_um >= lo && wavelength_um <= hi) {
            return Err(Error::Domain {
                quantity: "wavelength",
                value: wavelength_um,
                min: lo,
                max: hi,
                unit: "um",
            });
        }
        Ok(self.index_unchecked(wavelength_um))
    }

    fn index_unchecked(&self, wavelength_um: f64) -> f64 {
        let l2 = wavelength_um * wavelength_um;
        let sum: f64 = self
            .terms
            .iter()
            .map(|t| t.strength * l2 / (l2 - t.resonance_um2))
            .sum();
        (1.0 + sum).sqrt()
    }
}

/// Refractive index of fused silica at `wavelength_um`.
pub fn silica_index(wavelength_um: f64) -> Result<f64> {
    let (lo, hi) = FUSED_SILICA_WINDOW_UM;
    if !(wavelength_um >= lo && wavelength_um <= hi) {
        return Err(Error::Domain {
            quantity: "wavelength",
            value: wavelength_um,
            min: lo,
            max: hi,
            unit: "um",
        });
    }
    let l2 = wavelength_um * wavelength_um;
    let sum: f64 = FUSED_SILICA_SELLMEIER
        .iter()
        .map(|&(b, l)| b * l2 / (l2 - l * l))
        .sum();
    Ok((1.0 + sum).sqrt())
}

/// How the air holes and silica of the photonic-crystal region are averaged
/// into a homogeneous cladding index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CladdingModel {
    /// `n = f + (1 - f) n_silica`
    #[default]
    LinearIndex,
    /// `n^2 = f + (1 - f) n_silica^2`
    VolumePermittivity,
}

pub fn cladding_index(wavelength_um: f64, air_filling_fraction: f64, model: CladdingModel) -> Result<f64> {
    if !(0.0..1.0).contains(&air_filling_fraction) {
        return Err(Error::Domain {
            quantity: "air_filling_fraction",
            value: air_filling_fraction,
            min: 0.0,
            max: 1.0,
            unit: "",
        });
    }
    let n = silica_index(wavelength_um)?;
    let f = air_filling_fraction;
    Ok(match model {
        CladdingModel::LinearIndex => f + (1.0 - f) * n,
        CladdingModel::VolumePermittivity => (f + (1.0 - f) * n * n).sqrt(),
    })
}

/// Eigenvalue equation used for the fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeEquation {
    /// Exact hybrid HE11 mode of the step-index fiber.
    #[default]
    VectorHe11,
    /// Weakly guiding LP01 approximation.
    ScalarLp01,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Fast,
    Slow,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Fast => Axis::Slow,
            Axis::Slow => Axis::Fast,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Fast => "fast",
            Axis::Slow => "slow",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Axis::Fast),
            "slow" => Ok(Axis::Slow),
            other => Err(Error::invalid("axis", format!("expected `fast` or `slow`, got `{other}`"))),
        }
    }
}

/// Step-index geometry of one polarization axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberAxisGeometry {
    pub core_diameter_um: f64,
    pub air_filling_fraction: f64,
}

impl FiberAxisGeometry {
    pub fn new(core_diameter_um: f64, air_filling_fraction: f64) -> Result<Self> {
        let g = FiberAxisGeometry {
            core_diameter_um,
            air_filling_fraction,
        };
        g.validate("geometry")?;
        Ok(g)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.core_diameter_um > 0.0) || !self.core_diameter_um.is_finite() {
            return Err(Error::invalid(
                format!("{field}.core_diameter_um"),
                format!("must be positive, got {}", self.core_diameter_um),
            ));
        }
        if !(self.air_filling_fraction > 0.0 && self.air_filling_fraction < 1.0) {
            return Err(Error::invalid(
                format!("{field}.air_filling_fraction"),
                format!("must lie in (0, 1), got {}", self.air_filling_fraction),
            ));
        }
        Ok(())
    }
}

/// Effective-index model of the equivalent step-index fiber.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepIndexModel {
    #[serde(default)]
    pub cladding: CladdingModel,
    #[serde(default)]
    pub mode: ModeEquation,
}

impl StepIndexModel {
    pub fn effective_index(&self, wavelength_um: f64, geometry: &FiberAxisGeometry) -> Result<f64> {
        match self.mode {
            ModeEquation::VectorHe11 => he11_effective_index(wavelength_um, geometry, self.cladding),
            ModeEquation::ScalarLp01 => lp01_effective_index(wavelength_um, geometry, self.cladding),
        }
    }
}

fn default_pump_axis() -> Axis {
    Axis::Fast
}

/// Birefringent fiber: per-axis geometry, nonlinearity, length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub fast_axis: FiberAxisGeometry,
    pub slow_axis: FiberAxisGeometry,
    /// Nonlinear coefficient in 1/(W km).
    pub gamma_per_w_km: f64,
    pub length_m: f64,
    /// Fixed `n_slow - n_fast`; computed from the geometries when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birefringence_override: Option<f64>,
    /// Axis the pump is polarized along; signal and idler are on the other.
    #[serde(default = "default_pump_axis")]
    pub pump_axis: Axis,
    #[serde(default)]
    pub model: StepIndexModel,
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        self.fast_axis.validate("fiber.fast_axis")?;
        self.slow_axis.validate("fiber.slow_axis")?;
        if !(self.gamma_per_w_km >= 0.0) {
            return Err(Error::invalid("fiber.gamma_per_w_km", "must be non-negative"));
        }
        if !(self.length_m > 0.0) || !self.length_m.is_finite() {
            return Err(Error::invalid("fiber.length_m", "must be positive"));
        }
        if let Some(dn) = self.birefringence_override {
            if !dn.is_finite() {
                return Err(Error::invalid("fiber.birefringence_override", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn geometry(&self, axis: Axis) -> &FiberAxisGeometry {
        match axis {
            Axis::Fast => &self.fast_axis,
            Axis::Slow => &self.slow_axis,
        }
    }

    pub fn geometry_mut(&mut self, axis: Axis) -> &mut FiberAxisGeometry {
        match axis {
            Axis::Fast => &mut self.fast_axis,
            Axis::Slow => &mut self.slow_axis,
        }
    }

    /// Nonlinear coefficient in rad/(W m).
    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_per_w_km * 1e-3
    }

    pub fn effective_index(&self, axis: Axis, wavelength_um: f64) -> Result<f64> {
        self.model.effective_index(wavelength_um, self.geometry(axis))
    }
}

struct Waveguide {
    n_core: f64,
    n_clad: f64,
    v_number: f64,
}

impl Waveguide {
    fn new(wavelength_um: f64, geometry: &FiberAxisGeometry, cladding: CladdingModel) -> Result<Self> {
        geometry.validate("geometry")?;
        let n_core = silica_index(wavelength_um)?;
        let n_clad = cladding_index(wavelength_um, geometry.air_filling_fraction, cladding)?;
        let k_radius = std::f64::consts::PI * geometry.core_diameter_um / wavelength_um;
        let v_number = k_radius * (n_core * n_core - n_clad * n_clad).sqrt();
        if !(v_number > 0.0) {
            return Err(Error::ModeCutoff {
                wavelength_um,
                v_number,
            });
        }
        Ok(Waveguide {
            n_core,
            n_clad,
            v_number,
        })
    }

    fn effective_index(&self, u: f64) -> f64 {
        let b = 1.0 - (u / self.v_number).powi(2);
        (self.n_clad * self.n_clad + b * (self.n_core * self.n_core - self.n_clad * self.n_clad)).sqrt()
    }

    /// `w K1(w) / K0(w)` with the `w -> 0` limit.
    fn cladding_term(w: f64) -> f64 {
        if w < 1e-300 {
            0.0
        } else {
            w / k0_over_k1(w)
        }
    }
}

/// Effective index of the weakly guiding LP01 mode.
///
/// Solves `u J1(u)/J0(u) = w K1(w)/K0(w)` with `u^2 + w^2 = V^2`. The LP01 root
/// is the unique sign change for `u` in `(0, min(V, j_{0,1}))`.
pub fn lp01_effective_index(
    wavelength_um: f64,
    geometry: &FiberAxisGeometry,
    cladding: CladdingModel,
) -> Result<f64> {
    let wg = Waveguide::new(wavelength_um, geometry, cladding)?;
    let v = wg.v_number;
    let f = |u: f64| {
        let w = (v * v - u * u).max(0.0).sqrt();
        u * j1(u) / j0(u) - Waveguide::cladding_term(w)
    };
    let hi = v.min(J0_FIRST_ZERO) * (1.0 - 1e-15);
    let lo = hi * 1e-9;
    let u = bracketed_root(f, lo, hi).ok_or(Error::ModeCutoff {
        wavelength_um,
        v_number: v,
    })?;
    Ok(wg.effective_index(u))
}

/// Effective index of the exact HE11 hybrid mode.
///
/// Uses the HE branch of the step-index eigenvalue equation,
/// `J0(u)/(u J1(u)) = 1/u^2 - (1+e)/2 Y - R`, with `e = n_clad^2/n_core^2`,
/// `Y = K1'(w)/(w K1(w))` and
/// `R = sqrt(((1-e)/2)^2 Y^2 + (1/u^2 + 1/w^2)(1/u^2 + e/w^2))`.
/// The HE11 root is the first sign change in `u`; the next HE/EH roots lie
/// beyond `j_{1,1}`.
pub fn he11_effective_index(
    wavelength_um: f64,
    geometry: &FiberAxisGeometry,
    cladding: CladdingModel,
) -> Result<f64> {
    let wg = Waveguide::new(wavelength_um, geometry, cladding)?;
    let v = wg.v_number;
    let e = (wg.n_clad / wg.n_core).powi(2);
    let f = |u: f64| {
        let w = (v * v - u * u).max(1e-300).sqrt();
        let inv_u2 = 1.0 / (u * u);
        let inv_w2 = 1.0 / (w * w);
        // K1'(w) = -K0(w) - K1(w)/w
        let y = -k0_over_k1(w) / w - inv_w2;
        let r = ((0.5 * (1.0 - e) * y).powi(2) + (inv_u2 + inv_w2) * (inv_u2 + e * inv_w2)).sqrt();
        j0(u) / (u * j1(u)) - (inv_u2 - 0.5 * (1.0 + e) * y - r)
    };
    let hi = v.min(J1_FIRST_ZERO) * (1.0 - 1e-12);
    const SCAN: usize = 24;
    let mut prev_u = hi / (2 * SCAN) as f64;
    let mut prev_f = f(prev_u);
    for i in 1..SCAN {
        let u = hi * (i as f64 + 0.5) / SCAN as f64;
        let fu = f(u);
        if prev_f.is_finite() && fu.is_finite() && (prev_f > 0.0) != (fu > 0.0) {
            if let Some(root) = bracketed_root(f, prev_u, u) {
                return Ok(wg.effective_index(root));
            }
        }
        prev_u = u;
        prev_f = fu;
    }
    // the last sub-interval up to `hi`
    let fu = f(hi);
    if prev_f.is_finite() && fu.is_finite() && (prev_f > 0.0) != (fu > 0.0) {
        if let Some(root) = bracketed_root(f, prev_u, hi) {
            return Ok(wg.effective_index(root));
        }
    }
    Err(Error::ModeCutoff {
        wavelength_um,
        v_number: v,
    })
}

/// Brent's method on a sign-changing bracket, iterated to machine precision.
pub(crate) fn bracketed_root(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) || (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    if fa == 0.0 {
        return Some(a);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(b)
}
