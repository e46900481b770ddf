//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::constants::omega_from_nm;
use crate::dispersion::{birefringence, zero_gvd_wavelengths, DispersionProfile};
use crate::error::{Error, Result};
use crate::fiber_fit::{fit_geometry, load_measurements};
use crate::hom::{bootstrap_sigmas, expected_counts, fit_purity, simulate_counts, HomDataset, HomModelParams};
use crate::jsa::{adaptive_grid, build_jsa, estimate_purity, purity_vs_length, PurityEstimate};
use crate::material::Axis;
use crate::phasematch::{
    gvm_pump_wavelength, phasematch_curve, phasematch_roots, solve_phasematch_near, FiberDispersion,
};

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Parser)]
#[command(name = "sfwm", version, about = "Photon-pair source design for birefringent fiber four-wave mixing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    #[value(name = "paper40cm")]
    Fiber40cm,
    #[value(name = "paper1m")]
    Fiber1m,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled configuration, used when --config is absent (default paper40cm).
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Pump center wavelength override (nm).
    #[arg(long)]
    pub pump_nm: Option<f64>,
    /// Pump filter width override (nm).
    #[arg(long)]
    pub filter_nm: Option<f64>,
    /// Fiber length override (m).
    #[arg(long)]
    pub length_m: Option<f64>,
    /// JSA grid points per axis.
    #[arg(long)]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FigureId {
    #[value(name = "fig1a")]
    Fig1a,
    #[value(name = "fig1b")]
    Fig1b,
    #[value(name = "purity_vs_L")]
    PurityVsL,
}

fn parse_axis(s: &str) -> std::result::Result<Axis, String> {
    s.parse::<Axis>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Effective index and its derivatives on both axes.
    Dispersion {
        #[command(flatten)]
        common: Common,
    },
    /// Signal and idler wavelengths over a pump sweep.
    Phasematch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        from_nm: Option<f64>,
        #[arg(long)]
        to_nm: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Pump wavelength of signal/pump group-velocity matching.
    Gvm {
        #[command(flatten)]
        common: Common,
    },
    /// Joint spectral amplitude on the adaptive grid.
    Jsa {
        #[command(flatten)]
        common: Common,
    },
    /// Heralded purity and Schmidt statistics.
    Purity {
        #[command(flatten)]
        common: Common,
    },
    /// Purity for a list of fiber lengths.
    PurityScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lengths in meters.
        #[arg(long, value_delimiter = ',')]
        lengths_m: Option<Vec<f64>>,
    },
    /// Fit purity and polarization angle to polarization-HOM counts.
    HomFit {
        #[command(flatten)]
        common: Common,
        /// Counts CSV.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rep_rate: Option<f64>,
        /// Number of parametric bootstrap replicas.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulated polarization-HOM counts.
    HomSim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        chi: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the mean counts instead of a Poisson draw.
        #[arg(long)]
        expected: bool,
    },
    /// Fit core diameter and air-filling fraction to measured phasematching.
    FitFiber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        axis: Option<Axis>,
    },
    /// Data behind the phasematching and length-scan figures.
    Figure {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        which: FigureId,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Dispersion { common }
            | Command::Phasematch { common, .. }
            | Command::Gvm { common }
            | Command::Jsa { common }
            | Command::Purity { common }
            | Command::PurityScan { common, .. }
            | Command::HomFit { common, .. }
            | Command::HomSim { common, .. }
            | Command::FitFiber { common, .. }
            | Command::Figure { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug)]
enum Output {
    Table { columns: Vec<&'static str>, rows: Vec<Vec<Cell>> },
    Object(Value),
}

impl Output {
    fn native_format(&self) -> OutputFormat {
        match self {
            Output::Table { .. } => OutputFormat::Csv,
            Output::Object(_) => OutputFormat::Json,
        }
    }
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().unwrap_or(v)
}

/// Shortest text for `v` rounded to 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(v);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => serde_json::Number::from_f64(round_sig(f)).map_or(Value::Null, Value::Number),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            out.push((prefix.to_string(), a.iter().map(scalar_text).collect::<Vec<_>>().join(";")));
        }
        Value::Array(_) => {}
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.as_f64().map(format_number).unwrap_or_else(|| n.to_string()),
        Value::String(s) => s.clone(),
        _ => String::new(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Numerical(format!("csv output: {e}"))
}

fn render(output: Output, format: OutputFormat) -> Result<String> {
    match (output, format) {
        (Output::Table { columns, rows }, OutputFormat::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&columns).map_err(csv_error)?;
            for row in rows {
                w.write_record(row.iter().map(|c| match c {
                    Cell::Num(v) => format_number(*v),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                }))
                .map_err(csv_error)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        (Output::Table { columns, rows }, OutputFormat::Json) => {
            let mut cols = Map::new();
            for (j, name) in columns.iter().enumerate() {
                let values = rows
                    .iter()
                    .map(|r| match &r[j] {
                        Cell::Num(v) => json!(round_sig(*v)),
                        Cell::Text(s) => json!(s),
                        Cell::Empty => Value::Null,
                    })
                    .collect();
                cols.insert((*name).to_string(), Value::Array(values));
            }
            let doc = json!({ "columns": columns, "data": Value::Object(cols) });
            Ok(serde_json::to_string_pretty(&doc).expect("serializable") + "\n")
        }
        (Output::Object(v), OutputFormat::Json) => {
            Ok(serde_json::to_string_pretty(&round_json(v)).expect("serializable") + "\n")
        }
        (Output::Object(v), OutputFormat::Csv) => {
            let mut fields = Vec::new();
            flatten("", &v, &mut fields);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(fields.iter().map(|f| &f.0)).map_err(csv_error)?;
            w.write_record(fields.iter().map(|f| &f.1)).map_err(csv_error)?;
            let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

/// Loads the configuration and applies flag overrides, then validates.
pub fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match (&common.config, common.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(Preset::Fiber1m)) => RunConfig::preset_1m(),
        (None, _) => RunConfig::preset_40cm(),
    };
    if let Some(v) = common.pump_nm {
        cfg.pump.center_wavelength_nm = v;
    }
    if let Some(v) = common.filter_nm {
        cfg.pump.filter_width_nm = Some(v);
    }
    if let Some(v) = common.length_m {
        cfg.fiber.length_m = v;
    }
    if let Some(v) = common.grid_points {
        cfg.jsa.grid_points = v;
    }
    if let Some(f) = common.format {
        cfg.output_format = Some(f);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fiber_dispersion(cfg: &RunConfig) -> Result<FiberDispersion> {
    FiberDispersion::with_profile(&cfg.fiber, cfg.dispersion.band_nm, cfg.dispersion.points)
}

fn dispersion_table(cfg: &RunConfig) -> Result<Output> {
    let d = &cfg.dispersion;
    let fast = DispersionProfile::build(&cfg.fiber, Axis::Fast, d.band_nm, d.points)?;
    let slow = DispersionProfile::build(&cfg.fiber, Axis::Slow, d.band_nm, d.points)?;
    let (a, b) = d.sample_range_nm;
    let n = ((b - a) / d.sample_step_nm).floor() as usize + 1;
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let l = a + j as f64 * d.sample_step_nm;
        let w = omega_from_nm(l);
        let mut row: Vec<Cell> = vec![l.into()];
        for p in [&fast, &slow] {
            row.push(p.n_eff(w)?.into());
            row.push(p.wavevector(w)?.into());
            row.push(p.inverse_group_velocity(w)?.into());
            row.push(p.gvd(w)?.into());
        }
        rows.push(row);
    }
    Ok(Output::Table {
        columns: vec![
            "wavelength_nm",
            "n_eff_fast",
            "k_fast_per_m",
            "k1_fast_s_per_m",
            "k2_fast_s2_per_m",
            "n_eff_slow",
            "k_slow_per_m",
            "k1_slow_s_per_m",
            "k2_slow_s2_per_m",
        ],
        rows,
    })
}

fn phasematch_table(cfg: &RunConfig, range: (f64, f64), points: usize) -> Result<Output> {
    let fd = fiber_dispersion(cfg)?;
    let curve = phasematch_curve(range, points, &fd, cfg.peak_power_w());
    for f in &curve.failures {
        eprintln!("warning: no phasematched pair at {} nm: {}", format_number(f.pump_wavelength_nm), f.reason);
    }
    let rows = curve
        .points
        .iter()
        .map(|p| vec![p.pump_wavelength_nm.into(), p.signal_wavelength_nm.into(), p.idler_wavelength_nm.into()])
        .collect();
    Ok(Output::Table {
        columns: vec!["lambda_p_nm", "lambda_s_nm", "lambda_i_nm"],
        rows,
    })
}

/// Pump-wavelength step used for local curve slopes.
const SLOPE_STEP_NM: f64 = 0.05;

/// Correlation class from the slopes of both daughter wavelengths versus the
/// pump: same sign gives a positively sloped phasematching ridge in the
/// `(w_s, w_i)` plane, hence frequency-correlated states are accessible.
pub fn correlation_class(dls_dlp: f64, dli_dlp: f64) -> &'static str {
    let s = dls_dlp * dli_dlp;
    if s > 0.0 {
        "correlated"
    } else if s < 0.0 {
        "anticorrelated"
    } else {
        "degenerate"
    }
}

fn figure_1a(cfg: &RunConfig) -> Result<Output> {
    let fd = fiber_dispersion(cfg)?;
    let pp = cfg.peak_power_w();
    let ph = &cfg.phasematch;
    let mut rows = Vec::new();
    for lp in crate::phasematch::pump_samples(ph.map_range_nm, ph.map_points) {
        let roots = match phasematch_roots(lp, &fd, pp) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("warning: {} nm: {e}", format_number(lp));
                continue;
            }
        };
        for (j, pt) in roots.iter().enumerate() {
            let near = |l: f64| solve_phasematch_near(l, pt.signal_wavelength_nm, &fd, pp).ok();
            let (class, dls, dli) = match (near(lp - SLOPE_STEP_NM), near(lp + SLOPE_STEP_NM)) {
                (Some(lo), Some(hi)) => {
                    let h = 2.0 * SLOPE_STEP_NM;
                    let dls = (hi.signal_wavelength_nm - lo.signal_wavelength_nm) / h;
                    let dli = (hi.idler_wavelength_nm - lo.idler_wavelength_nm) / h;
                    (Cell::from(correlation_class(dls, dli)), Cell::from(dls), Cell::from(dli))
                }
                _ => (Cell::Empty, Cell::Empty, Cell::Empty),
            };
            rows.push(vec![
                lp.into(),
                j.into(),
                pt.signal_wavelength_nm.into(),
                pt.idler_wavelength_nm.into(),
                dls,
                dli,
                class,
            ]);
        }
    }
    Ok(Output::Table {
        columns: vec![
            "lambda_p_nm",
            "root",
            "lambda_s_nm",
            "lambda_i_nm",
            "dlambda_s_dlambda_p",
            "dlambda_i_dlambda_p",
            "state",
        ],
        rows,
    })
}

fn purity_object(est: &PurityEstimate) -> Value {
    let s = &est.schmidt;
    json!({
        "purity": s.purity,
        "schmidt_number": s.schmidt_number,
        "entropy_bits": s.entropy_bits,
        "length_m": est.length_m,
        "grid_points": est.grid_points,
        "refined_purity": est.refined_purity,
        "refinement_drift": est.refinement_drift,
        "schmidt_coefficients": s.coefficients.iter().take(16).copied().collect::<Vec<f64>>(),
    })
}

fn purity_table(estimates: &[PurityEstimate]) -> Output {
    let rows = estimates
        .iter()
        .map(|e| {
            vec![
                e.length_m.into(),
                e.schmidt.purity.into(),
                e.schmidt.schmidt_number.into(),
                e.schmidt.entropy_bits.into(),
                e.refined_purity.into(),
                e.refinement_drift.into(),
            ]
        })
        .collect();
    Output::Table {
        columns: vec!["length_m", "purity", "schmidt_number", "entropy_bits", "refined_purity", "refinement_drift"],
        rows,
    }
}

fn hom_table(data: &HomDataset) -> Output {
    let rows = data
        .rows
        .iter()
        .map(|r| {
            vec![
                r.theta_rad.to_degrees().into(),
                r.four_fold.into(),
                r.ab.into(),
                r.cd.into(),
                r.ad.into(),
                r.bc.into(),
                r.duration_s.into(),
            ]
        })
        .collect();
    Output::Table {
        columns: vec!["theta_deg", "R_ABCD", "R_AB", "R_CD", "R_AD", "R_BC", "duration_s"],
        rows,
    }
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<Output> {
    let pp = cfg.peak_power_w();
    match command {
        Command::Dispersion { .. } => dispersion_table(cfg),
        Command::Phasematch { from_nm, to_nm, points, .. } => {
            let (a, b) = cfg.phasematch.range_nm;
            let range = (from_nm.unwrap_or(a), to_nm.unwrap_or(b));
            if !(range.0 > 0.0 && range.1 >= range.0) {
                return Err(Error::invalid("--from-nm/--to-nm", "expected 0 < from <= to"));
            }
            let n = points.unwrap_or(cfg.phasematch.points);
            if n == 0 {
                return Err(Error::invalid("--points", "must be positive"));
            }
            phasematch_table(cfg, range, n)
        }
        Command::Gvm { .. } => {
            let fd = fiber_dispersion(cfg)?;
            let l0 = gvm_pump_wavelength(&fd, cfg.phasematch.gvm_range_nm)?;
            let fast = DispersionProfile::build(&cfg.fiber, Axis::Fast, cfg.dispersion.band_nm, cfg.dispersion.points)?;
            let zeros = zero_gvd_wavelengths(&fast, cfg.dispersion.zero_gvd_band_nm)?;
            Ok(Output::Object(json!({
                "lambda_p0_nm": l0,
                "pump_axis": cfg.fiber.pump_axis.name(),
                "zero_gvd_fast_nm": zeros,
                "birefringence_at_lambda_p0": birefringence(l0, &cfg.fiber)?,
            })))
        }
        Command::Jsa { .. } => {
            let fd = fiber_dispersion(cfg)?;
            let grid = adaptive_grid(&cfg.pump, &fd, &cfg.jsa)?;
            let jsa = build_jsa(&cfg.pump, &fd, &grid, pp, cfg.jsa.include_phase)?;
            let mut rows = Vec::with_capacity(grid.signal.len * grid.idler.len);
            for i in 0..grid.signal.len {
                for j in 0..grid.idler.len {
                    let a = jsa.amplitude[(i, j)];
                    rows.push(vec![grid.signal.at(i).into(), grid.idler.at(j).into(), a.re.into(), a.im.into()]);
                }
            }
            Ok(Output::Table {
                columns: vec!["omega_s_rad_per_s", "omega_i_rad_per_s", "re", "im"],
                rows,
            })
        }
        Command::Purity { .. } => {
            let fd = fiber_dispersion(cfg)?;
            Ok(Output::Object(purity_object(&estimate_purity(&cfg.pump, &fd, pp, &cfg.jsa)?)))
        }
        Command::PurityScan { lengths_m, .. } => {
            let lengths = lengths_m.clone().unwrap_or_else(|| cfg.purity_scan.lengths_m.clone());
            if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(Error::invalid("--lengths-m", "every length must be positive"));
            }
            let fd = fiber_dispersion(cfg)?;
            Ok(purity_table(&purity_vs_length(&cfg.pump, &fd, &lengths, pp, &cfg.jsa)?))
        }
        Command::HomFit { input, rep_rate, bootstrap, seed, .. } => {
            let data = HomDataset::read_csv(input, rep_rate.unwrap_or(cfg.hom.repetition_rate_hz))?;
            let fit = fit_purity(&data)?;
            let mut v = to_value(&fit);
            if let Some(n) = bootstrap {
                let (sp, sc) = bootstrap_sigmas(&data, *n, seed.unwrap_or(cfg.hom.seed))?;
                v["bootstrap"] = json!({ "replicas": n, "sigma_p": sp, "sigma_chi": sc });
            }
            Ok(Output::Object(v))
        }
        Command::HomSim { p, chi, seed, expected, .. } => {
            let h = &cfg.hom;
            let params = HomModelParams::new(p.unwrap_or(h.p), chi.unwrap_or(h.chi))?;
            let thetas: Vec<f64> = h.angles_deg.iter().map(|d| d.to_radians()).collect();
            let data = if *expected {
                expected_counts(&params, &thetas, &h.rates, h.duration_s, h.repetition_rate_hz)?
            } else {
                simulate_counts(&params, &thetas, &h.rates, h.duration_s, h.repetition_rate_hz, seed.unwrap_or(h.seed))?
            };
            Ok(hom_table(&data))
        }
        Command::FitFiber { input, axis, .. } => {
            let meas = load_measurements(input)?;
            let axis = axis.unwrap_or(cfg.fit.axis);
            let guess = cfg.fit.guess.unwrap_or(*cfg.fiber.geometry(axis));
            Ok(Output::Object(to_value(&fit_geometry(&meas, &cfg.fiber, axis, guess, &cfg.fit.options)?)))
        }
        Command::Figure { which, .. } => match which {
            FigureId::Fig1a => figure_1a(cfg),
            FigureId::Fig1b => phasematch_table(cfg, cfg.phasematch.range_nm, cfg.phasematch.points),
            FigureId::PurityVsL => {
                let fd = fiber_dispersion(cfg)?;
                Ok(purity_table(&purity_vs_length(&cfg.pump, &fd, &cfg.purity_scan.lengths_m, pp, &cfg.jsa)?))
            }
        },
    }
}

/// Runs one parsed command; the rendered output is written once at the end.
pub fn run(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    let cfg = resolve_config(common)?;
    let output = execute(&cli.command, &cfg)?;
    let format = cfg.output_format.unwrap_or(output.native_format());
    let text = render(output, format)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Full entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_number(783.123_456_789_012_4), "783.123456789");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(2.5e-27), "2.5e-27");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-1234.5), "-1234.5");
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
    }

    #[test]
    fn slope_classes() {
        assert_eq!(correlation_class(0.5, 1.5), "correlated");
        assert_eq!(correlation_class(2.5, -0.5), "anticorrelated");
        assert_eq!(correlation_class(2.0, 0.0), "degenerate");
    }

    #[test]
    fn object_to_csv_flattens() {
        let v = json!({ "a": 1.5, "b": { "c": "x" }, "d": [1.0, 2.0], "e": null });
        let s = render(Output::Object(v), OutputFormat::Csv).unwrap();
        assert_eq!(s, "a,b.c,d,e\n1.5,x,1;2,\n");
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main_with_args(["sfwm", "gvm", "--bogus"]), 2);
        assert_eq!(main_with_args(["sfwm", "nope"]), 2);
    }
}
