//! Dawson's integral and the Gaussian pointer amplitudes.
//!
//! `dawson` is evaluated piecewise: Maclaurin series for `|x| < 1`, Rybicki's
//! exponentially convergent sampling sum for `1 <= |x| <= 6`, and the
//! asymptotic expansion beyond. Each branch is accurate to a few ulps of the
//! result in its range.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_LIMIT: f64 = 6.0;

// Sampling step for Rybicki's sum. The discretisation error behaves like
// exp(-(pi / 2h)^2), about 1e-27 for h = 0.2.
const RYBICKI_STEP: f64 = 0.2;
// Odd sample offsets up to RYBICKI_TERMS * h ~ 6.6 cover every term above 1e-19.
const RYBICKI_TERMS: usize = 17;

/// Dawson's integral `F(x) = exp(-x^2) * int_0^x exp(y^2) dy`.
///
/// Odd by construction: the magnitude is computed for `|x|` and the sign is
/// reapplied, so `dawson(-x) == -dawson(x)` bit for bit.
pub fn dawson(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_LIMIT {
        dawson_series(ax)
    } else if ax <= ASYMPTOTIC_LIMIT {
        dawson_rybicki(ax)
    } else {
        dawson_asymptotic(ax)
    };
    v.copysign(x)
}

/// `1 - 2 x F(x)`, the derivative of Dawson's integral.
///
/// For large `|x|` the difference cancels to `-1/(2x^2) - 3/(4x^4) - ...`, so
/// that range is summed directly from the asymptotic series instead of being
/// formed as a difference of two numbers close to one.
pub fn dawson_slope(x: f64) -> f64 {
    let ax = x.abs();
    if ax > ASYMPTOTIC_LIMIT {
        // 2xF(x) = sum_k (2k-1)!! / (2x^2)^k, k >= 0; drop the k = 0 term.
        let inv = 1.0 / (2.0 * ax * ax);
        let mut term = inv;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            sum += term;
            let next = term * (2.0 * k + 1.0) * inv;
            if next.abs() < 1e-17 * sum.abs() || next > term {
                break;
            }
            term = next;
            k += 1.0;
        }
        -sum
    } else {
        1.0 - 2.0 * ax * dawson(ax)
    }
}

fn dawson_series(x: f64) -> f64 {
    // F(x) = sum_k (-1)^k 2^k x^(2k+1) / (2k+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn rybicki_weights() -> &'static [f64; RYBICKI_TERMS] {
    static WEIGHTS: OnceLock<[f64; RYBICKI_TERMS]> = OnceLock::new();
    WEIGHTS.get_or_init(|| {
        let mut w = [0.0; RYBICKI_TERMS];
        for (i, wi) in w.iter_mut().enumerate() {
            let k = (2 * i + 1) as f64;
            *wi = (-(k * RYBICKI_STEP).powi(2)).exp();
        }
        w
    })
}

// F(x) ~ pi^{-1/2} sum_{n odd} exp(-(x - n h)^2) / n, recentred on the even
// sample n0 nearest to x so that the exponentials stay bounded.
fn dawson_rybicki(x: f64) -> f64 {
    let h = RYBICKI_STEP;
    let n0 = 2.0 * (0.5 * x / h).round();
    let xp = x - n0 * h;
    let e1 = (2.0 * h * xp).exp();
    let e2 = e1 * e1;
    let weights = rybicki_weights();

    let mut up = e1;
    let mut down = 1.0 / e1;
    let inv_e2 = 1.0 / e2;
    let mut sum = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let k = (2 * i + 1) as f64;
        sum += w * (up / (n0 + k) + down / (n0 - k));
        up *= e2;
        down *= inv_e2;
    }
    (-xp * xp).exp() * sum / PI.sqrt()
}

fn dawson_asymptotic(x: f64) -> f64 {
    // F(x) ~ 1/(2x) * sum_k (2k-1)!! / (2x^2)^k
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        let next = term * (2.0 * k + 1.0) * inv;
        if next < 1e-17 * sum || next > term {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum / (2.0 * x)
}

/// L2-normalised Gaussian pointer amplitude `(2 pi s^2)^{-1/4} exp(-u^2 / 4 s^2)`.
pub fn gaussian_amp(u: f64, spread: f64) -> Result<f64> {
    if spread.is_nan() || spread <= 0.0 || !spread.is_finite() {
        return Err(Error::invalid(format!("spread must be positive, got {spread}")));
    }
    Ok(gaussian_amp_unchecked(u, spread))
}

#[inline]
pub(crate) fn gaussian_amp_unchecked(u: f64, spread: f64) -> f64 {
    (2.0 * PI * spread * spread).powf(-0.25) * (-u * u / (4.0 * spread * spread)).exp()
}

/// Momentum-space amplitude `(2 s^2 / pi)^{1/4} exp(-s^2 p^2)`, the unitary
/// Fourier transform of [`gaussian_amp`].
pub fn gaussian_amp_momentum(p: f64, spread: f64) -> Result<f64> {
    if spread.is_nan() || spread <= 0.0 || !spread.is_finite() {
        return Err(Error::invalid(format!("spread must be positive, got {spread}")));
    }
    Ok(gaussian_amp_momentum_unchecked(p, spread))
}

#[inline]
pub(crate) fn gaussian_amp_momentum_unchecked(p: f64, spread: f64) -> f64 {
    (2.0 * spread * spread / PI).powf(0.25) * (-spread * spread * p * p).exp()
}
