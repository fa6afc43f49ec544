//! Scalar special functions shared by the estimators and models.

use libm::erfc;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Standard normal CDF, accurate to double precision in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Unit Fréchet CDF `exp(-1/y)`, zero for `y <= 0`.
#[inline]
pub fn frechet_cdf(y: f64) -> f64 {
    if y <= 0.0 {
        0.0
    } else {
        (-1.0 / y).exp()
    }
}

/// Kolmogorov survival function `P(K > x)` of the limiting sup of a Brownian bridge.
///
/// Uses the alternating series for large `x` and the Jacobi-theta form for
/// small `x`; both are summed until terms fall below `1e-12`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let w = pi2 / (8.0 * x * x);
        let mut sum = 0.0;
        for k in 1..200 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * w).exp();
            sum += term;
            if term < 1e-12 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / x * sum;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * x * x).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-12 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}
