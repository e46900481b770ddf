//! Physical constants and the fused-silica dispersion fit.

use std::f64::consts::PI;

/// Vacuum speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Three-term Sellmeier fit for fused silica (Malitson, 1965), valid at room
/// temperature from 0.21 um to 3.71 um.
///
/// Each entry is `(B_j, lambda_j)` with `lambda_j` in micrometres; the index is
/// `n^2 = 1 + sum_j B_j lambda^2 / (lambda^2 - lambda_j^2)`.
pub const FUSED_SILICA_SELLMEIER: [(f64, f64); 3] = [
    (0.696_166_3, 0.068_404_3),
    (0.407_942_6, 0.116_241_4),
    (0.897_479_4, 9.896_161),
];

/// Validity window of [`FUSED_SILICA_SELLMEIER`] in micrometres.
pub const FUSED_SILICA_WINDOW_UM: (f64, f64) = (0.21, 3.71);

/// Angular frequency (rad/s) of light with vacuum wavelength `lambda_nm`.
pub fn omega_from_nm(lambda_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9)
}

/// Vacuum wavelength (nm) of light with angular frequency `omega`.
pub fn nm_from_omega(omega: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
}

/// Converts a wavelength interval `width_nm` centred on `center_nm` to an
/// angular-frequency width using the local derivative `d omega / d lambda`.
pub fn omega_width_from_nm(center_nm: f64, width_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT * (width_nm * 1e-9) / (center_nm * 1e-9).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_frequency_round_trip() {
        for lambda in [550.0, 785.0, 1250.0] {
            let back = nm_from_omega(omega_from_nm(lambda));
            assert!((back - lambda).abs() < 1e-9);
        }
    }
}
