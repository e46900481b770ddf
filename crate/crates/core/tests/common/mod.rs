#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use sfwm::config::RunConfig;
use sfwm::jsa::{JointSpectralAmplitude, SpectralAxis, SpectralGrid};
use sfwm::material::FiberSpec;
use sfwm::phasematch::FiberDispersion;

pub fn reference_fiber() -> FiberSpec {
    RunConfig::preset_40cm().fiber
}

pub fn reference_dispersion() -> FiberDispersion {
    FiberDispersion::new(&reference_fiber()).unwrap()
}

/// `exp(-(a x^2 + a y^2 + 2 c x y))` on `[-h, h]^2` with `n` points per axis.
pub fn double_gaussian(a: f64, c: f64, n: usize) -> JointSpectralAmplitude {
    // offset to keep frequencies positive; the shape only sees differences
    let (x0, h) = (100.0, 12.0);
    let ax = SpectralAxis::new(x0 - h, x0 + h, n).unwrap();
    let grid = SpectralGrid::new(ax, ax);
    let m = DMatrix::from_fn(n, n, |i, j| {
        let (x, y) = (ax.at(i) - x0, ax.at(j) - x0);
        Complex64::new((-(a * x * x + a * y * y + 2.0 * c * x * y)).exp(), 0.0)
    });
    JointSpectralAmplitude::from_matrix(grid, m).unwrap()
}

/// Closed-form purity of [`double_gaussian`].
pub fn mehler_purity(a: f64, c: f64) -> f64 {
    (1.0 - (c / a).powi(2)).sqrt()
}
