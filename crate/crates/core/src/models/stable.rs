//! Positive alpha-stable variates with Laplace transform `exp(-t^alpha)`.
//!
//! Uses Kanter's representation: for `U ~ Uniform(0, pi)` and `E ~ Exp(1)`,
//! `(sin(aU) / sin(U)^(1/a)) * (sin((1-a)U) / E)^((1-a)/a)` has exactly this law.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

/// One draw; `alpha` must already be validated.
pub(crate) fn draw<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    draw_ln(alpha, rng).exp()
}

/// Logarithm of one draw. Small alphas give variates far outside the range
/// of `f64`, so callers that combine draws should stay in this domain.
pub(crate) fn draw_ln<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = (std::f64::consts::PI * rng.random::<f64>()).max(f64::MIN_POSITIVE);
    let e: f64 = Exp1.sample(rng);
    let e = e.max(f64::MIN_POSITIVE);
    (alpha * u).sin().ln() - u.sin().ln() / alpha
        + (1.0 - alpha) / alpha * (((1.0 - alpha) * u).sin().ln() - e.ln())
}

/// `n` i.i.d. positive stable draws.
pub fn sample_positive_stable(alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut rng = substream(seed, Domain::Stable, 0);
    Ok((0..n).map(|_| draw(alpha, &mut rng)).collect())
}
