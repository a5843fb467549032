//! The d-dimensional Legendre polynomial family.
//!
//! P_0 = 1, P_1(x) = x, and for n >= 2
//!
//! ```text
//! P_n(x) = (2n + d - 4)/(n + d - 3) x P_{n-1}(x) - (n - 1)/(n + d - 3) P_{n-2}(x)
//! ```
//!
//! These are the orthogonal polynomials for the weight (1 - x^2)^((d-3)/2),
//! normalized so that P_n(1) = 1 and sup |P_n| = 1 on [-1, 1]. Scaling by
//! sqrt(N(d, n)) makes the family orthonormal; the rearranged recurrence
//! gives the symmetric Jacobi matrix that drives quadrature construction.
//!
//! d = 3 recovers the classical Legendre polynomials, d = 2 the Chebyshev
//! family. The d = 2 case is only supported through degree 1 here: the
//! recurrence bookkeeping degenerates there and nothing downstream needs it
//! (quadrature for d = 2 goes through the Jacobi coefficients, which remain
//! well defined).

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::log_harmonic_dim;

/// Evaluator for P_0 .. P_max of a fixed dimension.
///
/// Immutable after construction; shareable across threads.
#[derive(Debug, Clone)]
pub struct LegendreFamily<F> {
    d: usize,
    max_degree: usize,
    // 0.5 * ln N(d, n) for n = 0..=max_degree
    half_log_dims: Vec<F>,
}

impl<F: Real> LegendreFamily<F> {
    pub fn new(d: usize, max_degree: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!(
                "Legendre family requires d >= 2, got {d}"
            )));
        }
        if d == 2 && max_degree >= 2 {
            return Err(Error::Domain(
                "the d = 2 recurrence degenerates at degree 2; \
                 only degrees 0 and 1 are supported there"
                    .into(),
            ));
        }
        let half = F::of(0.5);
        let half_log_dims = (0..=max_degree)
            .map(|n| Ok(half * log_harmonic_dim::<F>(d, n)?.log_abs))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            max_degree,
            half_log_dims,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// (P_0(x), ..., P_max(x)) by forward recursion.
    ///
    /// The recursion coefficients are bounded by 1 and the values themselves
    /// by 1 on [-1, 1], so plain forward recursion is stable here.
    pub fn eval_all(&self, x: F) -> Result<Vec<F>> {
        if !(x.abs() <= F::one()) {
            return Err(Error::Domain(format!("argument {x} outside [-1, 1]")));
        }
        let mut values = Vec::with_capacity(self.max_degree + 1);
        values.push(F::one());
        if self.max_degree >= 1 {
            values.push(x);
        }
        for n in 2..=self.max_degree {
            let denom = F::of_usize(n + self.d - 3);
            let a = F::of_usize(2 * n + self.d - 4) / denom;
            let b = F::of_usize(n - 1) / denom;
            let next = a * x * values[n - 1] - b * values[n - 2];
            values.push(next);
        }
        Ok(values)
    }

    /// (q_0(x), ..., q_max(x)) with q_n = sqrt(N(d, n)) P_n, the orthonormal
    /// family. The scale factor is applied in log space so that a tiny
    /// P_n(x) against a huge sqrt(N) composes without over- or underflow.
    pub fn eval_orthonormal(&self, x: F) -> Result<Vec<F>> {
        let plain = self.eval_all(x)?;
        Ok(plain
            .into_iter()
            .zip(&self.half_log_dims)
            .map(|(p, &half_log)| scale_by_log(p, half_log))
            .collect())
    }

    /// sqrt(N(d, n)) P_n(x) for a single degree n <= max_degree.
    pub fn eval_orthonormal_single(&self, n: usize, x: F) -> Result<F> {
        if n > self.max_degree {
            return Err(Error::Domain(format!(
                "degree {n} exceeds family maximum {}",
                self.max_degree
            )));
        }
        let plain = self.eval_all(x)?;
        Ok(scale_by_log(plain[n], self.half_log_dims[n]))
    }
}

fn scale_by_log<F: Real>(p: F, half_log_dim: F) -> F {
    if p == F::zero() {
        F::zero()
    } else {
        let v = (half_log_dim + p.abs().ln()).exp();
        if p > F::zero() {
            v
        } else {
            -v
        }
    }
}

/// Off-diagonal entries of the symmetric Jacobi matrix of the orthonormal
/// family. The diagonal is identically zero because the measure is even.
#[derive(Debug, Clone)]
pub struct RecurrenceCoefficients<F> {
    pub d: usize,
    pub off_diagonal: Vec<F>,
}

/// First `count` off-diagonals b_1 .. b_count, where
///
/// ```text
/// b_{k+1} = (k + d - 2)/(2k + d - 2) sqrt(N(d, k) / N(d, k+1))
/// ```
///
/// comes from rearranging the three-term recurrence and rescaling by the
/// orthonormal factors. The k = 0 entry is taken as sqrt(N(d,0)/N(d,1))
/// directly: its leading ratio is (d-2)/(d-2), which the x P_0 = P_1 base
/// case fixes to 1 even for d = 2 where the fraction is formally 0/0.
pub fn recurrence_coefficients<F: Real>(
    d: usize,
    count: usize,
) -> Result<RecurrenceCoefficients<F>> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "recurrence coefficients require d >= 2, got {d}"
        )));
    }
    if count == 0 {
        return Err(Error::Domain("need at least one off-diagonal".into()));
    }
    let mut off_diagonal = Vec::with_capacity(count);
    let mut log_dim_k = log_harmonic_dim::<F>(d, 0)?.log_abs;
    for k in 0..count {
        let log_dim_next = log_harmonic_dim::<F>(d, k + 1)?.log_abs;
        let ratio = if k == 0 {
            F::one()
        } else {
            F::of_usize(k + d - 2) / F::of_usize(2 * k + d - 2)
        };
        let b = ratio * ((log_dim_k - log_dim_next) * F::of(0.5)).exp();
        off_diagonal.push(b);
        log_dim_k = log_dim_next;
    }
    Ok(RecurrenceCoefficients { d, off_diagonal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn base_cases_and_value_at_one() {
        for d in [3_usize, 5, 10, 25] {
            let family = LegendreFamily::<f64>::new(d, 40).unwrap();
            let at_one = family.eval_all(1.0).unwrap();
            for (n, p) in at_one.iter().enumerate() {
                assert!((p - 1.0).abs() <= 1e-12, "d={d}: P_{n}(1) = {p}");
            }
            let at_x = family.eval_all(0.3).unwrap();
            assert_eq!(at_x[0], 1.0);
            assert_abs_diff_eq!(at_x[1], 0.3, epsilon = 1e-15);
        }
    }

    #[test]
    fn degree_two_closed_form() {
        // unrolling the recursion once: P_2(x) = (d x^2 - 1)/(d - 1)
        let family = LegendreFamily::<f64>::new(4, 2).unwrap();
        let v = family.eval_all(0.5).unwrap();
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-15);
        let family3 = LegendreFamily::<f64>::new(3, 2).unwrap();
        let v3 = family3.eval_all(0.0).unwrap();
        assert_abs_diff_eq!(v3[2], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn sup_norm_bounded_by_one() {
        for d in [3_usize, 5, 10, 25] {
            let family = LegendreFamily::<f64>::new(d, 50).unwrap();
            for i in 0..=2000 {
                let x = -1.0 + 2.0 * i as f64 / 2000.0;
                for (n, p) in family.eval_all(x).unwrap().iter().enumerate() {
                    assert!(p.abs() <= 1.0 + 1e-9, "d={d}, n={n}, x={x}: {p}");
                }
            }
        }
    }

    #[test]
    fn orthonormal_values() {
        // d = 3: N(3, n) = 2n + 1, so q_n(1) = sqrt(2n + 1)
        let family = LegendreFamily::<f64>::new(3, 12).unwrap();
        let q = family.eval_orthonormal(1.0).unwrap();
        for (n, v) in q.iter().enumerate() {
            let want = (2.0 * n as f64 + 1.0).sqrt();
            assert!((v - want).abs() <= 1e-12 * want, "q_{n}(1) = {v}");
        }
        // entry 0 is always 1, entry 1 vanishes at 0
        let q0 = family.eval_orthonormal(0.37).unwrap();
        assert_abs_diff_eq!(q0[0], 1.0, epsilon = 1e-15);
        let qz = family.eval_orthonormal(0.0).unwrap();
        assert_eq!(qz[1], 0.0);
        assert_abs_diff_eq!(
            family.eval_orthonormal_single(1, 0.5).unwrap(),
            0.5 * 3.0_f64.sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(LegendreFamily::<f64>::new(1, 4).is_err());
        assert!(LegendreFamily::<f64>::new(2, 2).is_err());
        // degree <= 1 stays fine for d = 2
        let cheb = LegendreFamily::<f64>::new(2, 1).unwrap();
        assert_eq!(cheb.eval_all(0.25).unwrap(), vec![1.0, 0.25]);
        let family = LegendreFamily::<f64>::new(5, 3).unwrap();
        assert!(family.eval_all(1.5).is_err());
        assert!(family.eval_orthonormal_single(4, 0.0).is_err());
    }

    #[test]
    fn jacobi_entries_match_classical_values() {
        // d = 3 is the classical Legendre Jacobi matrix: b_k = k/sqrt(4k^2-1)
        let coeffs = recurrence_coefficients::<f64>(3, 6).unwrap();
        assert_abs_diff_eq!(
            coeffs.off_diagonal[0],
            1.0 / 3.0_f64.sqrt(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            coeffs.off_diagonal[1],
            2.0 / 15.0_f64.sqrt(),
            epsilon = 1e-14
        );
        for (idx, b) in coeffs.off_diagonal.iter().enumerate() {
            let k = (idx + 1) as f64;
            assert_abs_diff_eq!(*b, k / (4.0 * k * k - 1.0).sqrt(), epsilon = 1e-14);
        }
        // d = 2 is Chebyshev: b_1 = 1/sqrt(2), then 1/2
        let cheb = recurrence_coefficients::<f64>(2, 4).unwrap();
        assert_abs_diff_eq!(cheb.off_diagonal[0], 0.5_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(cheb.off_diagonal[1], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(cheb.off_diagonal[3], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn jacobi_entries_in_unit_interval_and_limit() {
        for d in [2_usize, 3, 8, 40] {
            let coeffs = recurrence_coefficients::<f64>(d, 200).unwrap();
            for b in &coeffs.off_diagonal {
                assert!(*b > 0.0 && *b < 1.0, "d={d}: off-diagonal {b}");
            }
            let tail = coeffs.off_diagonal[199];
            assert!((0.4..=0.6).contains(&tail), "d={d}: b_200 = {tail}");
        }
    }

    #[test]
    fn recurrence_reconstruction() {
        // x q_k(x) = b_{k+1} q_{k+1}(x) + b_k q_{k-1}(x): ties the Jacobi
        // entries to the orthonormal evaluations through an independent route
        for d in [3_usize, 5, 10] {
            let max_k = 25;
            let family = LegendreFamily::<f64>::new(d, max_k + 1).unwrap();
            let coeffs = recurrence_coefficients::<f64>(d, max_k + 1).unwrap();
            let b = &coeffs.off_diagonal;
            for i in 0..=100 {
                let x = -1.0 + 2.0 * i as f64 / 100.0;
                let q = family.eval_orthonormal(x).unwrap();
                for k in 1..=max_k {
                    let lhs = x * q[k];
                    let rhs = b[k] * q[k + 1] + b[k - 1] * q[k - 1];
                    assert!(
                        (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()),
                        "d={d}, k={k}, x={x}: {lhs} vs {rhs}"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn sup_norm_property(d in 3_usize..30, n in 0_usize..40, x in -1.0_f64..1.0) {
            let family = LegendreFamily::<f64>::new(d, n).unwrap();
            let values = family.eval_all(x).unwrap();
            prop_assert!(values[n].abs() <= 1.0 + 1e-9);
        }
    }
}
