//! Run configuration: a single strict JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber_fit::FitOptions;
use crate::hom::{HomModelParams, SimulationRates};
use crate::jsa::JsaOptions;
use crate::material::{Axis, FiberAxisGeometry, FiberSpec};
use crate::phasematch::{resolve_peak_power, PumpSpec};

pub const PRESET_40CM: &str = include_str!("../presets/paper40cm.json");
pub const PRESET_1M: &str = include_str!("../presets/paper1m.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSection {
    /// Band of the sampled profile.
    #[serde(default = "d_band")]
    pub band_nm: (f64, f64),
    #[serde(default = "d_points")]
    pub points: usize,
    /// Wavelengths written by the `dispersion` subcommand.
    #[serde(default = "d_sample_range")]
    pub sample_range_nm: (f64, f64),
    #[serde(default = "d_sample_step")]
    pub sample_step_nm: f64,
    #[serde(default = "d_zero_band")]
    pub zero_gvd_band_nm: (f64, f64),
}

fn d_band() -> (f64, f64) {
    crate::dispersion::DEFAULT_BAND_NM
}
fn d_points() -> usize {
    crate::dispersion::DEFAULT_POINTS
}
fn d_sample_range() -> (f64, f64) {
    (560.0, 1240.0)
}
fn d_sample_step() -> f64 {
    1.0
}
fn d_zero_band() -> (f64, f64) {
    (600.0, 900.0)
}

impl Default for DispersionSection {
    fn default() -> Self {
        DispersionSection {
            band_nm: d_band(),
            points: d_points(),
            sample_range_nm: d_sample_range(),
            sample_step_nm: d_sample_step(),
            zero_gvd_band_nm: d_zero_band(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasematchSection {
    #[serde(default = "p_range")]
    pub range_nm: (f64, f64),
    #[serde(default = "p_points")]
    pub points: usize,
    #[serde(default = "p_gvm_range")]
    pub gvm_range_nm: (f64, f64),
    /// Pump sweep for the full phasematching map.
    #[serde(default = "p_map_range")]
    pub map_range_nm: (f64, f64),
    #[serde(default = "p_map_points")]
    pub map_points: usize,
}

fn p_range() -> (f64, f64) {
    (765.0, 795.0)
}
fn p_points() -> usize {
    31
}
fn p_gvm_range() -> (f64, f64) {
    (770.0, 800.0)
}
fn p_map_range() -> (f64, f64) {
    (720.0, 880.0)
}
fn p_map_points() -> usize {
    161
}

impl Default for PhasematchSection {
    fn default() -> Self {
        PhasematchSection {
            range_nm: p_range(),
            points: p_points(),
            gvm_range_nm: p_gvm_range(),
            map_range_nm: p_map_range(),
            map_points: p_map_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurityScanSection {
    #[serde(default = "s_lengths")]
    pub lengths_m: Vec<f64>,
}

fn s_lengths() -> Vec<f64> {
    vec![0.4, 1.0, 10.0, 100.0]
}

impl Default for PurityScanSection {
    fn default() -> Self {
        PurityScanSection { lengths_m: s_lengths() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomSection {
    #[serde(default = "h_p")]
    pub p: f64,
    #[serde(default = "h_chi")]
    pub chi: f64,
    #[serde(default = "h_angles")]
    pub angles_deg: Vec<f64>,
    #[serde(default = "h_rates")]
    pub rates: SimulationRates,
    #[serde(default = "h_duration")]
    pub duration_s: f64,
    #[serde(default = "h_rep_rate")]
    pub repetition_rate_hz: f64,
    #[serde(default = "h_seed")]
    pub seed: u64,
}

fn h_p() -> f64 {
    0.821
}
fn h_chi() -> f64 {
    0.1
}
fn h_angles() -> Vec<f64> {
    (0..13).map(|j| 7.5 * j as f64).collect()
}
fn h_rates() -> SimulationRates {
    SimulationRates {
        two_fold_means: [1.2e7, 1.1e7, 1.0e7, 1.3e7],
        four_fold_scale: 1.0,
    }
}
fn h_duration() -> f64 {
    100.0
}
fn h_rep_rate() -> f64 {
    76e6
}
fn h_seed() -> u64 {
    1
}

impl Default for HomSection {
    fn default() -> Self {
        HomSection {
            p: h_p(),
            chi: h_chi(),
            angles_deg: h_angles(),
            rates: h_rates(),
            duration_s: h_duration(),
            repetition_rate_hz: h_rep_rate(),
            seed: h_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "f_axis")]
    pub axis: Axis,
    /// Starting geometry; defaults to the configured geometry of `axis`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<FiberAxisGeometry>,
    #[serde(default)]
    pub options: FitOptions,
}

fn f_axis() -> Axis {
    Axis::Fast
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            axis: f_axis(),
            guess: None,
            options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub fiber: FiberSpec,
    pub pump: PumpSpec,
    #[serde(default)]
    pub jsa: JsaOptions,
    #[serde(default)]
    pub dispersion: DispersionSection,
    #[serde(default)]
    pub phasematch: PhasematchSection,
    #[serde(default)]
    pub purity_scan: PurityScanSection,
    #[serde(default)]
    pub hom: HomSection,
    #[serde(default)]
    pub fit: FitSection,
    /// Overrides each subcommand's native output format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
}

fn check_band(field: &str, band: (f64, f64)) -> Result<()> {
    if !(band.0 > 0.0 && band.1 > band.0 && band.1.is_finite()) {
        return Err(Error::invalid(field, format!("expected 0 < start < end, got ({}, {})", band.0, band.1)));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn preset_40cm() -> Self {
        Self::from_json(PRESET_40CM).expect("bundled preset is valid")
    }

    pub fn preset_1m() -> Self {
        Self::from_json(PRESET_1M).expect("bundled preset is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.pump.validate()?;
        resolve_peak_power(&self.pump)?;
        self.jsa.validate()?;

        let d = &self.dispersion;
        check_band("dispersion.band_nm", d.band_nm)?;
        check_band("dispersion.sample_range_nm", d.sample_range_nm)?;
        check_band("dispersion.zero_gvd_band_nm", d.zero_gvd_band_nm)?;
        if d.points < crate::dispersion::MIN_POINTS {
            return Err(Error::invalid("dispersion.points", format!("must be at least {}", crate::dispersion::MIN_POINTS)));
        }
        if !(d.sample_step_nm > 0.0) {
            return Err(Error::invalid("dispersion.sample_step_nm", "must be positive"));
        }

        let p = &self.phasematch;
        if !(p.range_nm.0 > 0.0 && p.range_nm.1 >= p.range_nm.0) {
            return Err(Error::invalid("phasematch.range_nm", "expected 0 < start <= end"));
        }
        check_band("phasematch.gvm_range_nm", p.gvm_range_nm)?;
        check_band("phasematch.map_range_nm", p.map_range_nm)?;
        if p.points == 0 || p.map_points == 0 {
            return Err(Error::invalid("phasematch.points", "must be positive"));
        }

        if self.purity_scan.lengths_m.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::invalid("purity_scan.lengths_m", "every length must be positive"));
        }

        let h = &self.hom;
        HomModelParams::new(h.p, h.chi).map_err(|e| Error::invalid("hom", e.to_string()))?;
        if h.angles_deg.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("hom.angles_deg", "must be finite"));
        }
        if !(h.duration_s > 0.0) || !(h.repetition_rate_hz > 0.0) {
            return Err(Error::invalid("hom", "duration_s and repetition_rate_hz must be positive"));
        }
        if h.rates.two_fold_means.iter().any(|m| !(*m > 0.0)) || !(h.rates.four_fold_scale >= 0.0) {
            return Err(Error::invalid("hom.rates", "two-fold means must be positive and the four-fold scale non-negative"));
        }
        if let Some(g) = &self.fit.guess {
            g.validate("fit.guess")?;
        }
        Ok(())
    }

    pub fn peak_power_w(&self) -> f64 {
        resolve_peak_power(&self.pump).expect("validated")
    }
}
