//! Bessel functions needed by the step-index mode equations.
//!
//! `J0`/`J1` come from `libm`. The modified functions `K0`/`K1` are evaluated
//! from `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` with the trapezoidal
//! rule, which converges geometrically for this integrand and gives full double
//! precision with a few dozen nodes.

/// First positive zero of `J0`.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
/// First positive zero of `J1`.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;

const STEP: f64 = 0.125;
const MAX_NODES: usize = 160;

pub fn j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Exponentially scaled `(e^x K0(x), e^x K1(x))` for `x > 0`.
pub fn k01_scaled(x: f64) -> (f64, f64) {
    debug_assert!(x > 0.0);
    // integrand: exp(-x (cosh t - 1)) * {1, cosh t}
    let mut k0 = 0.5;
    let mut k1 = 0.5;
    for j in 1..MAX_NODES {
        let t = j as f64 * STEP;
        let c = t.cosh();
        let e = (-x * (c - 1.0)).exp();
        k0 += e;
        k1 += e * c;
        if e * c < 1e-18 * k1 {
            break;
        }
    }
    (k0 * STEP, k1 * STEP)
}

pub fn k0(x: f64) -> f64 {
    k01_scaled(x).0 * (-x).exp()
}

pub fn k1(x: f64) -> f64 {
    k01_scaled(x).1 * (-x).exp()
}

/// `K0(x) / K1(x)`, stable for large arguments.
pub fn k0_over_k1(x: f64) -> f64 {
    let (a, b) = k01_scaled(x);
    a / b
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values (mpmath besselk).
    const REFERENCE: [(f64, f64, f64); 5] = [
        (0.1, 2.427_069_024_702_017, 9.853_844_780_870_606),
        (1.0, 0.421_024_438_240_708_33, 0.601_907_230_197_234_6),
        (2.5, 0.062_347_553_200_366_19, 0.073_890_816_347_747_07),
        (6.0, 0.001_243_994_328_013_123_1, 0.001_343_919_717_735_509),
        (15.0, 9.819_536_482_396_435e-8, 1.014_172_936_976_209_2e-7),
    ];

    #[test]
    fn modified_bessel_matches_reference() {
        for (x, k0_ref, k1_ref) in REFERENCE {
            assert!((k0(x) / k0_ref - 1.0).abs() < 1e-14, "K0({x})");
            assert!((k1(x) / k1_ref - 1.0).abs() < 1e-14, "K1({x})");
        }
    }

    #[test]
    fn first_zeros() {
        assert!(j0(J0_FIRST_ZERO).abs() < 1e-15);
        assert!(j1(J1_FIRST_ZERO).abs() < 1e-15);
    }
}
