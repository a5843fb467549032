//! Quantitative bound evaluators: the depth-2 approximation floor, the
//! hidden-neuron count threshold it implies for the high-frequency sine
//! profile, and the closed-form sine residual bound.
//!
//! Everything with factorial growth stays in log space ([`LogNumber`])
//! until display. A floor that comes out nonpositive says nothing and is
//! flagged vacuous, never clamped.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{log_harmonic_dim, LogNumber};

/// Inputs and outputs of one depth-2 lower-bound evaluation:
///
/// ```text
/// lower_bound = A (A - (2 r B sigma_max + 2 B) / sqrt(N(d, n)))
/// ```
///
/// where `A` is the degree-n polynomial residual of the target profile and
/// `sigma_max` bounds the activation on the reachable pre-activation range.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReport<F> {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub weight_bound: F,
    pub sigma_max: F,
    pub residual: F,
    /// (2 r B sigma_max + 2 B) / sqrt(N(d, n)), the separable-mass penalty.
    pub penalty: F,
    pub lower_bound: F,
    pub vacuous: bool,
}

/// Evaluates the depth-2 floor. The sqrt(N(d, n)) division happens in log
/// space; when N(d, n) is astronomically large the penalty underflows to 0
/// and the floor tends to `residual^2`.
pub fn theorem1_bound<F: Real>(
    d: usize,
    n: usize,
    r: usize,
    weight_bound: F,
    sigma_max: F,
    residual: F,
) -> Result<BoundReport<F>> {
    if d < 3 {
        return Err(Error::Domain(format!("bound requires d >= 3, got {d}")));
    }
    if !(weight_bound > F::zero()) {
        return Err(Error::Domain("weight bound must be positive".into()));
    }
    if !(sigma_max >= F::zero()) || !(residual >= F::zero()) {
        return Err(Error::Domain(
            "sigma_max and residual must be nonnegative".into(),
        ));
    }
    let penalty = penalty_term(d, n, r, weight_bound, sigma_max)?;
    let lower_bound = if residual == F::zero() {
        F::zero()
    } else {
        residual * (residual - penalty)
    };
    Ok(BoundReport {
        d,
        n,
        r,
        weight_bound,
        sigma_max,
        residual,
        penalty,
        lower_bound,
        vacuous: lower_bound <= F::zero(),
    })
}

fn penalty_term<F: Real>(
    d: usize,
    n: usize,
    r: usize,
    weight_bound: F,
    sigma_max: F,
) -> Result<F> {
    let two = F::of(2.0);
    let numerator = two * F::of_usize(r) * weight_bound * sigma_max + two * weight_bound;
    let half_log_dim = F::of(0.5) * log_harmonic_dim::<F>(d, n)?.log_abs;
    Ok((numerator.ln() - half_log_dim).exp())
}

/// Max of the ReLU over the reachable pre-activation range
/// [-(sqrt(4d) B + B), sqrt(4d) B + B]: the right endpoint itself.
pub fn relu_sigma_max<F: Real>(d: usize, weight_bound: F) -> Result<F> {
    if d < 1 {
        return Err(Error::Domain("sigma_max requires d >= 1".into()));
    }
    if !(weight_bound > F::zero()) {
        return Err(Error::Domain("weight bound must be positive".into()));
    }
    Ok((F::of(4.0) * F::of_usize(d)).sqrt() * weight_bound + weight_bound)
}

/// Neuron-count threshold for approximating sin(pi d^3 x) with a depth-2
/// ReLU net of weights bounded by 2^d, in log form:
///
/// ```text
/// sqrt(N(d, d^2)) / (20 e pi 2^(2d) (1 + sqrt(4d)) + 2^(d+1))
/// ```
///
/// The denominator is combined by log-sum-exp; N(d, d^2) overflows doubles
/// near d = 12, so the result only exists as a [`LogNumber`].
pub fn example1_threshold<F: Real>(d: usize) -> Result<LogNumber<F>> {
    if d < 3 {
        return Err(Error::Domain(format!("threshold requires d >= 3, got {d}")));
    }
    let log_num = F::of(0.5) * log_harmonic_dim::<F>(d, d * d)?.log_abs;
    let d_f = F::of_usize(d);
    let ln2 = F::LN_2();
    // 20 e pi 2^(2d) (1 + sqrt(4d))
    let term_a = (F::of(20.0) * F::E() * F::PI()).ln()
        + F::of(2.0) * d_f * ln2
        + (F::one() + (F::of(4.0) * d_f).sqrt()).ln();
    // 2^(d+1)
    let term_b = (d_f + F::one()) * ln2;
    let log_den = log_sum_exp(term_a, term_b);
    Ok(LogNumber::from_log(log_num - log_den))
}

fn log_sum_exp<F: Real>(a: F, b: F) -> F {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// max(0, m - k) / (4 e pi m): the closed-form floor on the squared
/// residual of sin(pi sqrt(d) m x) against degree-k polynomials (valid for
/// large enough d).
pub fn sine_lemma_bound<F: Real>(m: usize, k: usize) -> Result<F> {
    if m < 1 {
        return Err(Error::Domain("sine bound requires m >= 1".into()));
    }
    if k >= m {
        return Ok(F::zero());
    }
    let num = F::of_usize(m - k);
    let den = F::of(4.0) * F::E() * F::PI() * F::of_usize(m);
    Ok(num / den)
}

/// 1 / (5 e pi), the residual floor for sin(pi d^3 x) at cut n = d^2.
pub fn example1_residual_floor<F: Real>() -> F {
    (F::of(5.0) * F::E() * F::PI()).recip()
}

/// 1 / (50 e^2 pi^2), the approximation error the threshold refers to
/// (half the squared residual floor).
pub fn example1_error_target<F: Real>() -> F {
    (F::of(50.0) * F::E() * F::E() * F::PI() * F::PI()).recip()
}

/// Solves `residual (residual - (2 r B sigma_max + 2 B)/sqrt(N)) = target`
/// for the width r, in log space. `None` when no positive width satisfies
/// it (the bound already fails to reach `target` at r = 0).
///
/// This is the solve-for-width companion of [`theorem1_bound`]; comparing
/// it with [`example1_threshold`] shows how much the displayed threshold's
/// constant bookkeeping gives away.
pub fn solve_width_for_error<F: Real>(
    d: usize,
    n: usize,
    weight_bound: F,
    sigma_max: F,
    residual: F,
    target: F,
) -> Result<Option<LogNumber<F>>> {
    if d < 3 {
        return Err(Error::Domain(format!("solve requires d >= 3, got {d}")));
    }
    if !(residual > F::zero()) || !(sigma_max > F::zero()) || !(weight_bound > F::zero()) {
        return Err(Error::Domain(
            "residual, sigma_max and weight bound must be positive".into(),
        ));
    }
    let margin = residual - target / residual;
    if margin <= F::zero() {
        return Ok(None);
    }
    let half_log_dim = F::of(0.5) * log_harmonic_dim::<F>(d, n)?.log_abs;
    // r = (sqrt(N) margin - 2B) / (2 B sigma_max)
    let log_first = half_log_dim + margin.ln();
    let log_two_b = (F::of(2.0) * weight_bound).ln();
    if log_first <= log_two_b {
        return Ok(None);
    }
    let log_diff = log_first + (-(log_two_b - log_first).exp()).ln_1p();
    let log_r = log_diff - (F::of(2.0) * weight_bound * sigma_max).ln();
    Ok(Some(LogNumber::from_log(log_r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn zero_residual_is_vacuous() {
        let report = theorem1_bound(10, 4, 128, 1.0_f64, 7.0, 0.0).unwrap();
        assert_eq!(report.lower_bound, 0.0);
        assert!(report.vacuous);
    }

    #[test]
    fn no_hidden_units_case() {
        // r = 0, B = 1, sigma_max = 0, A = 1: floor is 1 - 2/sqrt(N(10, 5))
        let report = theorem1_bound(10, 5, 0, 1.0_f64, 0.0, 1.0).unwrap();
        let n105 = 1782.0_f64; // binom(14,9) - binom(12,9)
        assert_abs_diff_eq!(
            report.lower_bound,
            1.0 - 2.0 / n105.sqrt(),
            epsilon = 1e-12
        );
        assert!(!report.vacuous);
    }

    #[test]
    fn small_dimension_goes_vacuous() {
        // d=3, n=1, r=1, B=1, sigma_max=1, A=1: 1 - 4/sqrt(3) < 0
        let report = theorem1_bound(3, 1, 1, 1.0_f64, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            report.lower_bound,
            1.0 - 4.0 / 3.0_f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(report.vacuous);
    }

    #[test]
    fn huge_dimension_penalty_underflows_to_residual_squared() {
        let report = theorem1_bound(40, 1600, 1_000_000, 2.0_f64.powi(40), 1e6, 0.5).unwrap();
        assert_eq!(report.penalty, 0.0);
        assert_abs_diff_eq!(report.lower_bound, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn affine_in_width_with_exact_slope() {
        let (d, n) = (8, 5);
        let (b, sig, a) = (1.5_f64, 4.0, 0.7);
        let n_dn = log_harmonic_dim::<f64>(d, n).unwrap().value();
        let slope = -2.0 * a * b * sig / n_dn.sqrt();
        for r in [0_usize, 1, 7, 1000] {
            let lo = theorem1_bound(d, n, r, b, sig, a).unwrap().lower_bound;
            let hi = theorem1_bound(d, n, r + 1, b, sig, a).unwrap().lower_bound;
            assert_abs_diff_eq!(hi - lo, slope, epsilon = 1e-12 * slope.abs().max(1.0));
        }
    }

    #[test]
    fn relu_sigma_max_values() {
        assert_abs_diff_eq!(relu_sigma_max(1, 1.0_f64).unwrap(), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(relu_sigma_max(4, 1.0_f64).unwrap(), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(relu_sigma_max(9, 2.0_f64).unwrap(), 14.0, epsilon = 1e-15);
        assert!(relu_sigma_max(0, 1.0_f64).is_err());
        assert!(relu_sigma_max(4, 0.0_f64).is_err());
    }

    #[test]
    fn threshold_reference_value_at_d3() {
        // 0.5 ln 19 - ln(20 e pi 2^6 (1 + sqrt(12)) + 2^4)
        let t = example1_threshold::<f64>(3).unwrap();
        assert_abs_diff_eq!(t.log_abs, -9.32352158008069425, epsilon = 1e-10);
        assert!(example1_threshold::<f64>(2).is_err());
    }

    #[test]
    fn threshold_monotone_and_superexponential() {
        let mut prev = example1_threshold::<f64>(5).unwrap().log_abs;
        for d in 6..=64 {
            let t = example1_threshold::<f64>(d).unwrap().log_abs;
            assert!(t > prev, "threshold not monotone at d = {d}");
            prev = t;
        }
        // log2(threshold)/d increases: the count grows faster than 2^(cd)
        let rate = |d: usize| example1_threshold::<f64>(d).unwrap().log2_abs() / d as f64;
        assert!(rate(32) > rate(16));
        assert!(rate(64) > rate(32));
    }

    #[test]
    fn sine_bound_values() {
        assert_eq!(sine_lemma_bound::<f64>(10, 10).unwrap(), 0.0);
        assert_eq!(sine_lemma_bound::<f64>(5, 9).unwrap(), 0.0);
        assert_abs_diff_eq!(
            sine_lemma_bound::<f64>(10, 5).unwrap(),
            5.0 / (40.0 * E * PI),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            sine_lemma_bound::<f64>(10, 0).unwrap(),
            1.0 / (4.0 * E * PI),
            epsilon = 1e-15
        );
        assert!(sine_lemma_bound::<f64>(0, 0).is_err());
    }

    #[test]
    fn residual_floor_consistency() {
        let floor = example1_residual_floor::<f64>();
        assert_abs_diff_eq!(floor, 1.0 / (5.0 * E * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(
            example1_error_target::<f64>(),
            1.0 / (50.0 * E * E * PI * PI),
            epsilon = 1e-18
        );
        // the sine bound implies the floor exactly when m - k >= 4m/(25 e pi)
        for (m, k) in [(1024_usize, 255_usize), (100, 50), (20, 10), (50, 49)] {
            let implied = (m - k) as f64 >= 4.0 * m as f64 / (25.0 * E * PI);
            let sqrt_bound = sine_lemma_bound::<f64>(m, k).unwrap().sqrt();
            if implied {
                assert!(sqrt_bound >= floor, "m={m}, k={k}");
            }
        }
        // the Example-1 parameter point itself: m = d^(5/2), k = d^2 - 1, d = 16
        let (m, k) = (1024_usize, 255_usize);
        assert!((m - k) as f64 / m as f64 >= 0.75);
        assert!(sine_lemma_bound::<f64>(m, k).unwrap().sqrt() >= floor);
    }

    #[test]
    fn width_solve_matches_direct_evaluation() {
        let (d, n) = (6_usize, 8_usize);
        let (b, sig) = (2.0_f64, 11.0);
        let a = 0.8;
        let target = 0.1;
        let r_log = solve_width_for_error(d, n, b, sig, a, target)
            .unwrap()
            .expect("solvable");
        let r = r_log.value();
        // plugging the continuous solution back in reproduces the target
        let n_dn = log_harmonic_dim::<f64>(d, n).unwrap().value();
        let floor = a * (a - (2.0 * r * b * sig + 2.0 * b) / n_dn.sqrt());
        assert_abs_diff_eq!(floor, target, epsilon = 1e-9);
        // unreachable target: residual^2 itself is below it
        assert!(solve_width_for_error(d, n, b, sig, 0.1_f64, 0.5)
            .unwrap()
            .is_none());
    }
}
