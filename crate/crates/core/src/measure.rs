//! The probability measure on [-1, 1] with density
//! c_d (1 - x^2)^((d-3)/2), where c_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)).
//!
//! This is the distribution of a single coordinate of a uniform point on the
//! (d-1)-sphere, and equally of the inner product of two independent uniform
//! points. Quadrature against it is built in [`crate::quadrature`]; this
//! module owns the density and the distribution function.

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Real};
use crate::special::log_gamma;

/// The coordinate-projection measure for dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuD<F> {
    d: usize,
    log_norm_const: F,
}

impl<F: Real> MuD<F> {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("measure requires d >= 2, got {d}")));
        }
        let half_d = F::of_usize(d) / F::of(2.0);
        let log_norm_const =
            log_gamma(half_d)? - F::PI().sqrt().ln() - log_gamma(half_d - F::of(0.5))?;
        Ok(Self { d, log_norm_const })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// ln c_d, the log of the normalization constant.
    pub fn log_norm_const(&self) -> F {
        self.log_norm_const
    }

    /// Density at `x`, computed in log space so that large `d` does not
    /// underflow prematurely.
    ///
    /// For d = 2 the density diverges at the endpoints; `+inf` is returned
    /// there. Outside [-1, 1] this is a domain error.
    pub fn density(&self, x: F) -> Result<F> {
        if !(x.abs() <= F::one()) {
            return Err(Error::Domain(format!(
                "density argument {x} outside [-1, 1]"
            )));
        }
        let exponent = (F::of_usize(self.d) - F::of(3.0)) / F::of(2.0);
        if exponent == F::zero() {
            // d = 3: the measure is uniform/2
            return Ok(self.log_norm_const.exp());
        }
        if x.abs() == F::one() {
            return Ok(if exponent > F::zero() {
                F::zero()
            } else {
                F::infinity()
            });
        }
        // ln(1 - x^2) split as ln(1-x) + ln(1+x) for accuracy near the ends
        let log_one_minus_sq = (F::one() - x).ln() + (F::one() + x).ln();
        Ok((self.log_norm_const + exponent * log_one_minus_sq).exp())
    }

    /// Distribution function: the measure of [-1, x].
    ///
    /// Integrated adaptively in the angle variable x = sin(t), where the
    /// integrand c_d cos^(d-2)(t) is smooth for every d >= 2 (including the
    /// endpoint-singular d = 2). Absolute error is at most 1e-9.
    pub fn cdf(&self, x: F) -> Result<F> {
        if !(x.abs() <= F::one()) {
            return Err(Error::Domain(format!("cdf argument {x} outside [-1, 1]")));
        }
        if x == -F::one() {
            return Ok(F::zero());
        }
        if x == F::one() {
            return Ok(F::one());
        }
        if x == F::zero() {
            return Ok(F::of(0.5));
        }
        // integrate from 0 using symmetry; keeps cdf(x) + cdf(-x) = 1 exact
        let theta = x.asin();
        let integrand = |t: F| self.angular_density(t);
        let tol = F::of(0.5e-9);
        let (half_integral, _) = adaptive_simpson(&integrand, F::zero(), theta.abs(), tol, 40);
        let value = if x > F::zero() {
            F::of(0.5) + half_integral
        } else {
            F::of(0.5) - half_integral
        };
        Ok(value.max(F::zero()).min(F::one()))
    }

    /// Distribution function evaluated at many nondecreasing points in one
    /// sweep, integrating panel by panel between consecutive arguments.
    ///
    /// Matches [`MuD::cdf`] to the same 1e-9 tolerance; used where a sorted
    /// sample (e.g. an empirical distribution) needs the cdf at every point.
    pub fn cdf_many(&self, sorted_xs: &[F]) -> Result<Vec<F>> {
        let mut out = Vec::with_capacity(sorted_xs.len());
        let mut acc = KahanSum::new();
        let mut prev_theta = -F::FRAC_PI_2();
        let integrand = |t: F| self.angular_density(t);
        for (i, &x) in sorted_xs.iter().enumerate() {
            if !(x.abs() <= F::one()) {
                return Err(Error::Domain(format!("cdf argument {x} outside [-1, 1]")));
            }
            if i > 0 && x < sorted_xs[i - 1] {
                return Err(Error::Domain(
                    "cdf_many arguments must be nondecreasing".into(),
                ));
            }
            let theta = x.asin();
            let (panel, _) =
                adaptive_simpson(&integrand, prev_theta, theta, F::of(1e-12), 30);
            acc.add(panel);
            prev_theta = theta;
            out.push(acc.value().max(F::zero()).min(F::one()));
        }
        Ok(out)
    }

    /// c_d cos^(d-2)(t): the density after the substitution x = sin(t).
    fn angular_density(&self, t: F) -> F {
        let c = t.cos().max(F::zero());
        if self.d == 2 {
            return self.log_norm_const.exp();
        }
        if c == F::zero() {
            return F::zero();
        }
        (self.log_norm_const + F::of_usize(self.d - 2) * c.ln()).exp()
    }
}

/// Recursive adaptive Simpson on [a, b] with Richardson acceptance; returns
/// (value, error estimate). Not budget-limited: only used on the smooth
/// angular densities above, where it terminates quickly.
fn adaptive_simpson<F: Real>(
    f: &impl Fn(F) -> F,
    a: F,
    b: F,
    tol: F,
    max_depth: usize,
) -> (F, F) {
    if a == b {
        return (F::zero(), F::zero());
    }
    let m = (a + b) / F::of(2.0);
    let fa = f(a);
    let fb = f(b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, m, b, fa, fm, fb, whole, tol, max_depth)
}

fn simpson<F: Real>(a: F, b: F, fa: F, fm: F, fb: F) -> F {
    (b - a) / F::of(6.0) * (fa + F::of(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Real>(
    f: &impl Fn(F) -> F,
    a: F,
    m: F,
    b: F,
    fa: F,
    fm: F,
    fb: F,
    whole: F,
    tol: F,
    depth: usize,
) -> (F, F) {
    let lm = (a + m) / F::of(2.0);
    let rm = (m + b) / F::of(2.0);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= F::of(15.0) * tol {
        return (left + right + delta / F::of(15.0), delta.abs() / F::of(15.0));
    }
    let half_tol = tol / F::of(2.0);
    let (lv, le) = simpson_step(f, a, lm, m, fa, flm, fm, left, half_tol, depth - 1);
    let (rv, re) = simpson_step(f, m, rm, b, fm, frm, fb, right, half_tol, depth - 1);
    (lv + rv, le + re)
}
