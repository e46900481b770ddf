//! Polarization Hong-Ou-Mandel four-fold coincidence model: heralded-state
//! overlap, the four-fold probability, rate normalization, fitting and
//! synthetic count generation.

use std::path::Path;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsa::JointSpectralAmplitude;

pub const MAX_OUTER_ITERATIONS: usize = 100;
pub const CHI_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomModelParams {
    pub p: f64,
    pub chi: f64,
}

impl HomModelParams {
    pub fn new(p: f64, chi: f64) -> Result<Self> {
        let m = HomModelParams { p, chi };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {}", self.p)));
        }
        if !(self.chi.abs() <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::invalid("chi", format!("|chi| must not exceed pi/4, got {}", self.chi)));
        }
        Ok(())
    }
}

/// Heralded idler state `rho(w, w') = sum_s f(s, w) conj f(s, w') dw_s`, with
/// unit trace under the `dw_i` measure.
pub fn heralded_density_matrix(jsa: &JointSpectralAmplitude) -> DMatrix<Complex64> {
    let f = &jsa.amplitude;
    let mut rho = f.transpose() * f.conjugate();
    let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum::<f64>() * jsa.grid.idler.step;
    rho /= Complex64::new(trace, 0.0);
    rho
}

/// `Tr[rho_a rho_b]` under the idler frequency measure.
fn trace_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, step: f64) -> f64 {
    // both Hermitian: Tr[a b] = sum a_ij conj(b_ij)
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * step * step
}

pub fn state_purity(jsa: &JointSpectralAmplitude) -> f64 {
    let rho = heralded_density_matrix(jsa);
    trace_product(&rho, &rho, jsa.grid.idler.step)
}

/// Overlap `p = Tr[rho_H rho_V]` of the heralded idler states of two sources.
pub fn overlap_p(jsa_h: &JointSpectralAmplitude, jsa_v: &JointSpectralAmplitude) -> Result<f64> {
    let (a, b) = (&jsa_h.grid.idler, &jsa_v.grid.idler);
    let same = a.len == b.len
        && (a.start - b.start).abs() <= 1e-12 * a.start.abs()
        && (a.step - b.step).abs() <= 1e-9 * a.step.abs();
    if !same {
        return Err(Error::Shape(format!(
            "idler grids differ: {} points from {} step {} vs {} points from {} step {}",
            a.len, a.start, a.step, b.len, b.start, b.step
        )));
    }
    let rh = heralded_density_matrix(jsa_h);
    let rv = heralded_density_matrix(jsa_v);
    Ok(trace_product(&rh, &rv, a.step))
}

/// `P4 = [(1 - p) + (1 + p) cos^2(2 chi) cos^2(2 theta)] / 2`
pub fn four_fold_probability(theta: f64, params: &HomModelParams) -> f64 {
    let c = (2.0 * params.chi).cos().powi(2);
    let t = (2.0 * theta).cos().powi(2);
    0.5 * ((1.0 - params.p) + (1.0 + params.p) * c * t)
}

/// One counting interval; counts are totals over `duration_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomRow {
    pub theta_rad: f64,
    pub four_fold: f64,
    pub ab: f64,
    pub cd: f64,
    pub ad: f64,
    pub bc: f64,
    pub duration_s: f64,
}

impl HomRow {
    fn two_fold_product_sum(&self) -> f64 {
        self.ab * self.cd + self.ad * self.bc
    }

    fn two_fold_product_variance(&self) -> f64 {
        self.cd * self.cd * self.ab + self.ab * self.ab * self.cd + self.bc * self.bc * self.ad + self.ad * self.ad * self.bc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomDataset {
    pub rows: Vec<HomRow>,
    pub repetition_rate_hz: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvRow {
    theta_deg: f64,
    #[serde(rename = "R_ABCD")]
    abcd: f64,
    #[serde(rename = "R_AB")]
    ab: f64,
    #[serde(rename = "R_CD")]
    cd: f64,
    #[serde(rename = "R_AD")]
    ad: f64,
    #[serde(rename = "R_BC")]
    bc: f64,
    duration_s: f64,
}

impl HomDataset {
    pub fn validate(&self) -> Result<()> {
        if !(self.repetition_rate_hz > 0.0 && self.repetition_rate_hz.is_finite()) {
            return Err(Error::invalid("repetition_rate_hz", "must be positive"));
        }
        for (j, r) in self.rows.iter().enumerate() {
            let counts = [r.four_fold, r.ab, r.cd, r.ad, r.bc];
            if counts.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(Error::invalid(format!("rows[{j}]"), "counts must be finite and non-negative"));
            }
            if !(r.duration_s > 0.0 && r.duration_s.is_finite()) {
                return Err(Error::invalid(format!("rows[{j}].duration_s"), "must be positive"));
            }
            if !r.theta_rad.is_finite() {
                return Err(Error::invalid(format!("rows[{j}].theta"), "must be finite"));
            }
        }
        let mut thetas: Vec<f64> = self.rows.iter().map(|r| r.theta_rad).collect();
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if thetas.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("rows", "waveplate angles must be distinct"));
        }
        Ok(())
    }

    pub fn distinct_angles(&self) -> usize {
        let mut t: Vec<f64> = self.rows.iter().map(|r| r.theta_rad).collect();
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        t.dedup();
        t.len()
    }

    /// Reads `theta_deg,R_ABCD,R_AB,R_CD,R_AD,R_BC,duration_s`.
    pub fn read_csv(path: &Path, repetition_rate_hz: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let expected = ["theta_deg", "R_ABCD", "R_AB", "R_CD", "R_AD", "R_BC", "duration_s"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`", expected.join(",")),
            });
        }
        let mut rows = Vec::new();
        for rec in reader.deserialize::<CsvRow>() {
            let r = rec.map_err(|e| csv_error(path, e))?;
            rows.push(HomRow {
                theta_rad: r.theta_deg.to_radians(),
                four_fold: r.abcd,
                ab: r.ab,
                cd: r.cd,
                ad: r.ad,
                bc: r.bc,
                duration_s: r.duration_s,
            });
        }
        let data = HomDataset { rows, repetition_rate_hz };
        data.validate()?;
        Ok(data)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                theta_deg: r.theta_rad.to_degrees(),
                abcd: r.four_fold,
                ab: r.ab,
                cd: r.cd,
                ad: r.ad,
                bc: r.bc,
                duration_s: r.duration_s,
            })
            .map_err(|e| Error::Numerical(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedPoint {
    pub theta_rad: f64,
    pub p4: f64,
    pub sigma: f64,
    /// Index into the dataset rows.
    pub row: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NormalizedHom {
    pub points: Vec<NormalizedPoint>,
    /// `(row, reason)` for rows that could not be normalized.
    pub excluded: Vec<(usize, String)>,
}

/// `P4 / R_ABCD`: the factor turning four-fold counts into the normalized
/// probability, `(1 + cos^2 2chi cos^2 2theta) r d^2 / (2 [N_AB N_CD + N_AD N_BC])`.
///
/// With rates `R = N/d` this is the usual `R_ABCD (..) r d / (2 [R_AB R_CD + R_AD R_BC])`.
fn normalization(row: &HomRow, chi: f64, rep_rate: f64) -> f64 {
    let g = 1.0 + (2.0 * chi).cos().powi(2) * (2.0 * row.theta_rad).cos().powi(2);
    g * rep_rate * row.duration_s * row.duration_s / (2.0 * row.two_fold_product_sum())
}

fn normalize_with(data: &HomDataset, chi: f64, four_fold_variance: &dyn Fn(usize, &HomRow) -> f64) -> NormalizedHom {
    let mut out = NormalizedHom::default();
    for (j, row) in data.rows.iter().enumerate() {
        let den = row.two_fold_product_sum();
        if !(den > 0.0) {
            out.excluded.push((j, "two-fold coincidence product is zero".into()));
            continue;
        }
        let k = normalization(row, chi, data.repetition_rate_hz);
        let p4 = row.four_fold * k;
        let var = k * k * four_fold_variance(j, row) + p4 * p4 * row.two_fold_product_variance() / (den * den);
        out.points.push(NormalizedPoint {
            theta_rad: row.theta_rad,
            p4,
            sigma: var.sqrt(),
            row: j,
        });
    }
    out
}

/// Normalized four-fold probability per row with first-order Poisson errors.
pub fn normalize_dataset(data: &HomDataset, chi: f64) -> NormalizedHom {
    normalize_with(data, chi, &|_, r| r.four_fold)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomFit {
    pub p: f64,
    pub sigma_p: f64,
    pub chi: f64,
    /// Absent when `chi` is not locally identifiable (e.g. at `chi = 0`).
    pub sigma_chi: Option<f64>,
    pub chi2_reduced: f64,
    /// True when the unconstrained estimate of `p` fell outside `[0, 1]`.
    pub at_boundary: bool,
    pub iterations: usize,
    pub excluded_rows: Vec<usize>,
}

/// Weighted fit of the four-fold model with `chi` free.
///
/// At fixed `chi` the model is linear in `A = (1-p)/2` and
/// `B = (1+p) cos^2(2chi)/2`; normalization and fit alternate until `chi`
/// stops moving.
pub fn fit_purity(data: &HomDataset) -> Result<HomFit> {
    data.validate()?;
    if data.distinct_angles() < 4 {
        return Err(Error::invalid("rows", "at least 4 distinct waveplate angles are required"));
    }
    let mut chi = 0.0_f64;
    let mut model_mean: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    for it in 1..=MAX_OUTER_ITERATIONS {
        let variances: Vec<f64> = data
            .rows
            .iter()
            .enumerate()
            .map(|(j, r)| {
                if r.four_fold > 0.0 {
                    r.four_fold
                } else {
                    // model mean, floored at one count so a vanishing prediction cannot dominate
                    model_mean.as_ref().map(|m| m[j]).unwrap_or(1.0).max(1.0)
                }
            })
            .collect();
        let var = |j: usize, _: &HomRow| variances[j];
        let norm = normalize_with(data, chi, &var);
        if norm.points.len() < 3 {
            return Err(Error::invalid("rows", "fewer than 3 rows survive normalization"));
        }
        let (a, b) = linear_fit(&norm.points)?;
        let p_raw = 1.0 - 2.0 * a;
        let p = p_raw.clamp(0.0, 1.0);
        let c2 = (2.0 * b / (1.0 + p)).clamp(0.0, 1.0);
        let chi_new = 0.5 * c2.sqrt().acos();
        let params = HomModelParams { p, chi: chi_new };
        model_mean = Some(
            data.rows
                .iter()
                .map(|r| {
                    let k = normalization(r, chi_new, data.repetition_rate_hz);
                    if k.is_finite() && k > 0.0 {
                        four_fold_probability(r.theta_rad, &params) / k
                    } else {
                        1.0
                    }
                })
                .collect(),
        );
        trace.push(chi_new);
        let converged = (chi_new - chi).abs() < CHI_TOLERANCE;
        chi = chi_new;
        if converged {
            let norm = normalize_with(data, chi, &var);
            return Ok(finish(data, &norm, p, p_raw, chi, it));
        }
    }
    Err(Error::Convergence(format!(
        "chi did not settle within {MAX_OUTER_ITERATIONS} iterations; last values {:?}",
        &trace[trace.len().saturating_sub(5)..]
    )))
}

/// Weighted least squares of `y = A + B cos^2(2 theta)`.
fn linear_fit(points: &[NormalizedPoint]) -> Result<(f64, f64)> {
    let mut m = Matrix2::zeros();
    let mut v = Vector2::zeros();
    for pt in points {
        let w = 1.0 / (pt.sigma * pt.sigma);
        if !w.is_finite() {
            return Err(Error::Numerical(format!("row {} has zero propagated variance", pt.row)));
        }
        let t = (2.0 * pt.theta_rad).cos().powi(2);
        m += Matrix2::new(w, w * t, w * t, w * t * t);
        v += Vector2::new(w * pt.p4, w * t * pt.p4);
    }
    let sol = m
        .lu()
        .solve(&v)
        .ok_or_else(|| Error::Numerical("angles do not constrain the cos^2(2 theta) term".into()))?;
    Ok((sol[0], sol[1]))
}

fn finish(data: &HomDataset, norm: &NormalizedHom, p: f64, p_raw: f64, chi: f64, iterations: usize) -> HomFit {
    let params = HomModelParams { p, chi };
    let c = (2.0 * chi).cos().powi(2);
    let dc = -2.0 * (4.0 * chi).sin();
    let mut chi2 = 0.0;
    let mut jtj = Matrix2::<f64>::zeros();
    for pt in &norm.points {
        let row = &data.rows[pt.row];
        let t = (2.0 * pt.theta_rad).cos().powi(2);
        let r = (pt.p4 - four_fold_probability(pt.theta_rad, &params)) / pt.sigma;
        chi2 += r * r;
        // residual derivatives; the normalized data depend on chi through (1 + c t)
        let k0 = normalization(row, chi, data.repetition_rate_hz) / (1.0 + c * t);
        let dp = -0.5 * (c * t - 1.0) / pt.sigma;
        let dchi = (row.four_fold * k0 * t * dc - 0.5 * (1.0 + p) * t * dc) / pt.sigma;
        let g = Vector2::new(dp, dchi);
        jtj += g * g.transpose();
    }
    let dof = norm.points.len().saturating_sub(2).max(1);
    let (sigma_p, sigma_chi) = match jtj.try_inverse() {
        Some(cov) if jtj[(1, 1)] > 1e-12 * jtj[(0, 0)] && cov[(0, 0)] > 0.0 && cov[(1, 1)] > 0.0 => {
            (cov[(0, 0)].sqrt(), Some(cov[(1, 1)].sqrt()))
        }
        _ => (1.0 / jtj[(0, 0)].sqrt(), None),
    };
    HomFit {
        p,
        sigma_p,
        chi,
        sigma_chi,
        chi2_reduced: chi2 / dof as f64,
        at_boundary: p != p_raw,
        iterations,
        excluded_rows: norm.excluded.iter().map(|e| e.0).collect(),
    }
}

/// Parametric bootstrap: refits Poisson resamplings of the observed counts and
/// returns the standard deviation of `p` and of `chi`.
pub fn bootstrap_sigmas(data: &HomDataset, replicas: usize, seed: u64) -> Result<(f64, f64)> {
    if replicas < 2 {
        return Err(Error::invalid("bootstrap", "at least 2 replicas are required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = Vec::with_capacity(replicas);
    let mut chis = Vec::with_capacity(replicas);
    for _ in 0..replicas {
        let mut d = data.clone();
        for r in &mut d.rows {
            r.four_fold = poisson(&mut rng, r.four_fold);
            r.ab = poisson(&mut rng, r.ab);
            r.cd = poisson(&mut rng, r.cd);
            r.ad = poisson(&mut rng, r.ad);
            r.bc = poisson(&mut rng, r.bc);
        }
        if let Ok(f) = fit_purity(&d) {
            ps.push(f.p);
            chis.push(f.chi);
        }
    }
    if ps.len() < 2 {
        return Err(Error::Convergence("bootstrap refits failed".into()));
    }
    Ok((std_dev(&ps), std_dev(&chis)))
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(0.0)
}

/// Expected counts for the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationRates {
    /// Mean two-fold counts per interval: `[AB, CD, AD, BC]`.
    pub two_fold_means: [f64; 4],
    /// Multiplies the four-fold mean implied by the normalization; 1 keeps the
    /// data consistent with the model.
    pub four_fold_scale: f64,
}

impl SimulationRates {
    fn validate(&self) -> Result<()> {
        if self.two_fold_means.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::invalid("two_fold_means", "must be positive"));
        }
        if !(self.four_fold_scale >= 0.0 && self.four_fold_scale.is_finite()) {
            return Err(Error::invalid("four_fold_scale", "must be non-negative"));
        }
        Ok(())
    }
}

/// Noise-free dataset: every count equals its mean.
pub fn expected_counts(
    params: &HomModelParams,
    thetas: &[f64],
    rates: &SimulationRates,
    duration_s: f64,
    repetition_rate_hz: f64,
) -> Result<HomDataset> {
    params.validate()?;
    rates.validate()?;
    if !(duration_s > 0.0) || !(repetition_rate_hz > 0.0) {
        return Err(Error::invalid("duration_s/repetition_rate_hz", "must be positive"));
    }
    let [ab, cd, ad, bc] = rates.two_fold_means;
    let rows = thetas
        .iter()
        .map(|&theta| {
            let mut row = HomRow {
                theta_rad: theta,
                four_fold: 0.0,
                ab,
                cd,
                ad,
                bc,
                duration_s,
            };
            row.four_fold = rates.four_fold_scale * four_fold_probability(theta, params)
                / normalization(&row, params.chi, repetition_rate_hz);
            row
        })
        .collect();
    Ok(HomDataset {
        rows,
        repetition_rate_hz,
    })
}

/// Poisson counts around [`expected_counts`]; deterministic for a fixed seed.
pub fn simulate_counts(
    params: &HomModelParams,
    thetas: &[f64],
    rates: &SimulationRates,
    duration_s: f64,
    repetition_rate_hz: f64,
    seed: u64,
) -> Result<HomDataset> {
    let mut data = expected_counts(params, thetas, rates, duration_s, repetition_rate_hz)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for r in &mut data.rows {
        r.four_fold = poisson(&mut rng, r.four_fold);
        r.ab = poisson(&mut rng, r.ab);
        r.cd = poisson(&mut rng, r.cd);
        r.ad = poisson(&mut rng, r.ad);
        r.bc = poisson(&mut rng, r.bc);
    }
    Ok(data)
}

/// Waveplate angles evenly covering `[0, pi/2]`.
pub fn default_thetas(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| std::f64::consts::FRAC_PI_2 * j as f64 / (n.max(2) - 1) as f64)
        .collect()
}
