//! Log-space combinatorics: log-gamma and the dimension counts N(d, n) of
//! the degree-n harmonic spaces on the (d-1)-sphere.
//!
//! N(d, n) = (2n + d - 2) (n + d - 3)! / (n! (d - 2)!) grows factorially in
//! both arguments, so every quantity built from it is carried as a
//! [`LogNumber`] and only converted to a plain float at report time.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A real number stored as `(sign, ln|value|)`.
///
/// `sign == 0` means the represented value is exactly zero and `log_abs` is
/// ignored. Multiplication adds logs and multiplies signs, so products of
/// factorial-scale quantities never overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogNumber<F> {
    pub log_abs: F,
    pub sign: i8,
}

impl<F: Real> LogNumber<F> {
    pub fn zero() -> Self {
        Self {
            log_abs: F::neg_infinity(),
            sign: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            log_abs: F::zero(),
            sign: 1,
        }
    }

    /// Wraps `ln(v)` for a known-positive `v` given in log form.
    pub fn from_log(log_abs: F) -> Self {
        Self { log_abs, sign: 1 }
    }

    pub fn from_value(v: F) -> Self {
        if v == F::zero() {
            Self::zero()
        } else {
            Self {
                log_abs: v.abs().ln(),
                sign: if v > F::zero() { 1 } else { -1 },
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Converts back to a plain float. Values beyond the float range come
    /// out as `±inf`; that overflow is the caller's to report, not hide.
    pub fn value(&self) -> F {
        match self.sign {
            0 => F::zero(),
            s => {
                let v = self.log_abs.exp();
                if s > 0 {
                    v
                } else {
                    -v
                }
            }
        }
    }

    /// Base-2 logarithm of the absolute value.
    pub fn log2_abs(&self) -> F {
        self.log_abs / F::LN_2()
    }
}

impl<F: Real> std::ops::Mul for LogNumber<F> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::zero();
        }
        Self {
            log_abs: self.log_abs + rhs.log_abs,
            sign: self.sign * rhs.sign,
        }
    }
}

// Lanczos approximation, g = 7, n = 9 (Godfrey's coefficient set, the one
// used by CPython and Boost). Accurate to ~1e-15 relative in gamma itself,
// which is ~1e-15 absolute in log-gamma.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

// Stirling series coefficients B_{2k} / (2k (2k-1)): the asymptotic
// expansion ln G(x) ~ (x-1/2) ln x - x + ln(2 pi)/2 + sum c_k x^{1-2k}.
// Truncated after x^{-13}; for x >= 13 the remainder is below 6e-16
// relative.
const STIRLING_COEFFS: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

const STIRLING_CUTOFF: f64 = 13.0;

/// Natural logarithm of the gamma function for positive arguments.
///
/// Lanczos below the Stirling cutoff, Stirling series above it; the two
/// regimes agree to ~1e-15 at the seam. Relative error stays below 1e-13
/// on [0.5, 1e6] (measured against the magnitude of ln gamma, floored at 1
/// near its zeros at x = 1 and x = 2).
pub fn log_gamma<F: Real>(x: F) -> Result<F> {
    if !(x > F::zero()) {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    let half = F::of(0.5);
    if x < half {
        // one recurrence step moves the argument into [1, 1.5)
        return Ok(log_gamma(x + F::one())? - x.ln());
    }
    if x < F::of(STIRLING_CUTOFF) {
        Ok(lanczos_log_gamma(x))
    } else {
        Ok(stirling_log_gamma(x))
    }
}

fn lanczos_log_gamma<F: Real>(x: F) -> F {
    let z = x - F::one();
    let t = z + F::of(LANCZOS_G) + F::of(0.5);
    let mut series = F::of(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS[1..].iter().enumerate() {
        series = series + F::of(c) / (z + F::of_usize(i + 1));
    }
    let ln_sqrt_two_pi = F::of(0.918_938_533_204_672_8);
    ln_sqrt_two_pi + (z + F::of(0.5)) * t.ln() - t + series.ln()
}

fn stirling_log_gamma<F: Real>(x: F) -> F {
    let ln_sqrt_two_pi = F::of(0.918_938_533_204_672_8);
    let mut tail = F::zero();
    let x_sq = x * x;
    let mut power = x;
    for &c in &STIRLING_COEFFS {
        tail = tail + F::of(c) / power;
        power = power * x_sq;
    }
    (x - F::of(0.5)) * x.ln() - x + ln_sqrt_two_pi + tail
}

/// ln N(d, n), the log of the dimension of the space of degree-n spherical
/// harmonics on the (d-1)-sphere, via log-gamma on the closed form
/// (2n + d - 2) (n + d - 3)! / (n! (d - 2)!).
///
/// N(d, 0) = 1 for every d. Requires d >= 2.
pub fn log_harmonic_dim<F: Real>(d: usize, n: usize) -> Result<LogNumber<F>> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "harmonic dimension requires d >= 2, got {d}"
        )));
    }
    if n == 0 {
        return Ok(LogNumber::one());
    }
    // all gamma arguments are >= 1 here
    let log = F::of_usize(2 * n + d - 2).ln() + log_gamma(F::of_usize(n + d - 2))?
        - log_gamma(F::of_usize(n + 1))?
        - log_gamma(F::of_usize(d - 1))?;
    Ok(LogNumber::from_log(log))
}
