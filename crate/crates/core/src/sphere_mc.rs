//! Uniform sampling on the unit sphere and seeded Monte Carlo estimation:
//! L2 errors of functions on pairs of sphere points, the distribution check
//! tying sampled inner products to the projection measure, and the kernel
//! orthogonality identity.
//!
//! All randomness flows through ChaCha8 with explicit (seed, stream) pairs;
//! identical seeds reproduce identical estimates bit for bit. Accumulation
//! is compensated and sequential, so results do not depend on anything but
//! the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::legendre::LegendreFamily;
use crate::measure::MuD;
use crate::scalar::KahanSum;
use crate::special::log_harmonic_dim;

/// One draw from the uniform distribution on the (d-1)-sphere:
/// d standard normals, normalized (re-drawn in the measure-zero event of a
/// vanishing norm).
pub fn sample_unit_vector(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for a in v.iter_mut() {
                *a /= norm;
            }
            return v;
        }
    }
}

/// Seeded, stream-indexed sampler of uniform sphere points.
#[derive(Debug, Clone)]
pub struct SphereSampler {
    d: usize,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        Self::with_stream(d, seed, 0)
    }

    /// Independent stream of the same seed; streams never overlap.
    pub fn with_stream(d: usize, seed: u64, stream: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Domain(format!("sampler requires d >= 2, got {d}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            d,
            seed,
            stream,
            rng,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn sample(&mut self) -> Vec<f64> {
        sample_unit_vector(self.d, &mut self.rng)
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo estimate of |A - B|^2 over independent uniform pairs, with
/// the delta-method standard error for the derived norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2ErrorEstimate {
    pub mean_sq: f64,
    pub sq_std_error: f64,
    pub norm: f64,
    pub norm_std_error: f64,
    pub n_samples: usize,
}

/// Accumulates mean and variance with sums centered at the first value;
/// compensated, sequential, deterministic.
struct MomentAccumulator {
    center: Option<f64>,
    sum: KahanSum<f64>,
    sum_sq: KahanSum<f64>,
    count: usize,
}

impl MomentAccumulator {
    fn new() -> Self {
        Self {
            center: None,
            sum: KahanSum::new(),
            sum_sq: KahanSum::new(),
            count: 0,
        }
    }

    fn add(&mut self, v: f64) {
        let c = *self.center.get_or_insert(v);
        let shifted = v - c;
        self.sum.add(shifted);
        self.sum_sq.add(shifted * shifted);
        self.count += 1;
    }

    fn finish(&self) -> MCEstimate {
        let n = self.count as f64;
        let center = self.center.unwrap_or(0.0);
        let mean_shifted = self.sum.value() / n;
        let mean = center + mean_shifted;
        let variance = if self.count > 1 {
            ((self.sum_sq.value() - n * mean_shifted * mean_shifted) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MCEstimate {
            mean,
            std_error: (variance / n).sqrt(),
            n_samples: self.count,
        }
    }
}

/// MC estimate of the L2 distance between two functions of a sphere pair.
/// Evaluation failures of either function abort the estimation.
pub fn l2_error(
    a: impl Fn(&[f64], &[f64]) -> Result<f64>,
    b: impl Fn(&[f64], &[f64]) -> Result<f64>,
    d: usize,
    n_samples: usize,
    seed: u64,
) -> Result<L2ErrorEstimate> {
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let mut sampler = SphereSampler::new(d, seed)?;
    let mut acc = MomentAccumulator::new();
    for _ in 0..n_samples {
        let x = sampler.sample();
        let y = sampler.sample();
        let diff = a(&x, &y)? - b(&x, &y)?;
        acc.add(diff * diff);
    }
    let sq = acc.finish();
    let norm = sq.mean.max(0.0).sqrt();
    let norm_std_error = if norm > 0.0 {
        sq.std_error / (2.0 * norm)
    } else {
        0.0
    };
    Ok(L2ErrorEstimate {
        mean_sq: sq.mean,
        sq_std_error: sq.std_error,
        norm,
        norm_std_error,
        n_samples,
    })
}

/// Kolmogorov-Smirnov statistic of sampled inner products of
/// `d_samples`-dimensional uniform pairs against the `d_reference`
/// projection-measure cdf. With matching dimensions this validates the
/// sampler/measure correspondence; mismatched dimensions give a negative
/// control that must fail the test.
pub fn pushforward_ks(
    d_samples: usize,
    d_reference: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if d_samples < 3 || d_reference < 3 {
        return Err(Error::Domain("pushforward check requires d >= 3".into()));
    }
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let mut sampler = SphereSampler::new(d_samples, seed)?;
    let mut dots = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = sampler.sample();
        let y = sampler.sample();
        dots.push(dot(&x, &y).clamp(-1.0, 1.0));
    }
    dots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mu = MuD::<f64>::new(d_reference)?;
    let cdf = mu.cdf_many(&dots)?;
    let n = n_samples as f64;
    let mut ks = 0.0_f64;
    for (i, &c) in cdf.iter().enumerate() {
        let below = c - i as f64 / n;
        let above = (i + 1) as f64 / n - c;
        ks = ks.max(below).max(above);
    }
    Ok(ks)
}

/// Sampler-measure agreement for matching dimensions; passes at
/// significance ~0.01 when the statistic stays below 1.63 / sqrt(n).
pub fn pushforward_check(d: usize, n_samples: usize, seed: u64) -> Result<f64> {
    pushforward_ks(d, d, n_samples, seed)
}

/// Acceptance threshold for the KS statistic at significance ~0.01.
pub fn ks_threshold(n_samples: usize) -> f64 {
    1.63 / (n_samples as f64).sqrt()
}

/// Outcome of one kernel-identity estimation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelIdentityCheck {
    pub estimate: MCEstimate,
    pub predicted: f64,
}

impl KernelIdentityCheck {
    /// Whether the estimate lies within `band` standard errors of the
    /// prediction.
    pub fn within(&self, band: f64) -> bool {
        (self.estimate.mean - self.predicted).abs() <= band * self.estimate.std_error
    }
}

/// Estimates E[ h_n(x, x') L_i^v(x) L_j^{v'}(x') ] over independent uniform
/// pairs, where h_n(x, x') = sqrt(N(d,n)) P_n(<x, x'>) and
/// L_k^u(x) = sqrt(N(d,k)) P_k(<u, x>), against the closed-form prediction
///
/// ```text
/// delta_{ni} delta_{nj} P_n(<v, v'>) / sqrt(N(d, n))
/// ```
///
/// The integrand's variance grows with N(d, n), so the check is restricted
/// to n, i, j <= 20 and 3 <= d <= 25 where a desk-scale sample resolves it.
#[allow(clippy::too_many_arguments)]
pub fn verify_kernel_identity(
    d: usize,
    n: usize,
    i: usize,
    j: usize,
    v: &[f64],
    v_prime: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<KernelIdentityCheck> {
    if !(3..=25).contains(&d) {
        return Err(Error::Domain(format!(
            "kernel identity check supports 3 <= d <= 25, got {d}"
        )));
    }
    for degree in [n, i, j] {
        if degree > 20 {
            return Err(Error::Domain(format!(
                "kernel identity check supports degrees <= 20, got {degree}"
            )));
        }
    }
    for u in [v, v_prime] {
        if u.len() != d {
            return Err(Error::ShapeMismatch(format!(
                "direction of length {} in dimension {d}",
                u.len()
            )));
        }
        let norm = dot(u, u).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitVector { norm });
        }
    }
    let max_degree = n.max(i).max(j);
    let family = LegendreFamily::<f64>::new(d, max_degree)?;
    let half_log = |k: usize| -> Result<f64> {
        Ok(0.5 * log_harmonic_dim::<f64>(d, k)?.log_abs)
    };
    // combined sqrt(N) scale of the three factors, applied once per sample
    let scale = (half_log(n)? + half_log(i)? + half_log(j)?).exp();

    let mut sampler = SphereSampler::new(d, seed)?;
    let mut acc = MomentAccumulator::new();
    for _ in 0..n_samples {
        let x = sampler.sample();
        let y = sampler.sample();
        let p_xy = family.eval_all(dot(&x, &y).clamp(-1.0, 1.0))?[n];
        let p_vx = family.eval_all(dot(v, &x).clamp(-1.0, 1.0))?[i];
        let p_vy = family.eval_all(dot(v_prime, &y).clamp(-1.0, 1.0))?[j];
        acc.add(scale * p_xy * p_vx * p_vy);
    }

    let predicted = if i == n && j == n {
        let p_vv = family.eval_all(dot(v, v_prime).clamp(-1.0, 1.0))?[n];
        p_vv * (-half_log(n)?).exp()
    } else {
        0.0
    };
    Ok(KernelIdentityCheck {
        estimate: acc.finish(),
        predicted,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unit_and_reproducible() {
        let mut s = SphereSampler::new(6, 991).unwrap();
        for _ in 0..200 {
            let v = s.sample();
            let norm = dot(&v, &v).sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
        }
        let mut a = SphereSampler::with_stream(6, 991, 3).unwrap();
        let mut b = SphereSampler::with_stream(6, 991, 3).unwrap();
        for _ in 0..50 {
            assert_eq!(a.sample(), b.sample());
        }
        // different streams decouple
        let mut c = SphereSampler::with_stream(6, 991, 4).unwrap();
        assert_ne!(a.sample(), c.sample());
        assert!(SphereSampler::new(1, 0).is_err());
    }

    #[test]
    fn coordinate_moments() {
        let d = 5;
        let n = 200_000;
        let mut s = SphereSampler::new(d, 2024).unwrap();
        let mut mean = MomentAccumulator::new();
        let mut second = MomentAccumulator::new();
        for _ in 0..n {
            let v = s.sample();
            mean.add(v[0]);
            second.add(v[0] * v[0]);
        }
        let m = mean.finish();
        assert!(m.mean.abs() <= 4.0 * m.std_error, "coordinate mean biased");
        let sq = second.finish();
        let want = 1.0 / d as f64;
        assert!(
            (sq.mean - want).abs() <= 4.0 * sq.std_error,
            "second moment {} vs 1/d {}",
            sq.mean,
            want
        );
    }

    #[test]
    fn l2_error_identical_functions_is_zero() {
        let f = |x: &[f64], y: &[f64]| Ok(x[0] + y[1]);
        let est = l2_error(f, f, 4, 500, 7).unwrap();
        assert_eq!(est.mean_sq, 0.0);
        assert_eq!(est.norm, 0.0);
        assert_eq!(est.norm_std_error, 0.0);
    }

    #[test]
    fn l2_error_matches_profile_norm() {
        // F(x, y) = q_1(<x, y>) has unit norm by the profile isometry
        let d = 3;
        let family = LegendreFamily::<f64>::new(d, 1).unwrap();
        let f = move |x: &[f64], y: &[f64]| {
            family.eval_orthonormal_single(1, dot(x, y).clamp(-1.0, 1.0))
        };
        let zero = |_: &[f64], _: &[f64]| Ok(0.0);
        let est = l2_error(f, zero, d, 400_000, 31).unwrap();
        assert!(
            (est.mean_sq - 1.0).abs() <= 4.0 * est.sq_std_error,
            "norm^2 {} +- {}",
            est.mean_sq,
            est.sq_std_error
        );
    }

    #[test]
    fn l2_error_is_deterministic() {
        let f = |x: &[f64], y: &[f64]| Ok((3.0 * dot(x, y)).sin());
        let zero = |_: &[f64], _: &[f64]| Ok(0.0);
        let a = l2_error(f, zero, 5, 20_000, 123).unwrap();
        let b = l2_error(f, zero, 5, 20_000, 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pushforward_passes_and_control_fails() {
        let n = 100_000;
        let threshold = ks_threshold(n);
        for d in [3_usize, 10] {
            let ks = pushforward_check(d, n, 5150).unwrap();
            assert!(ks <= threshold, "d={d}: KS {ks} over {threshold}");
        }
        // wrong reference dimension must be detected
        let ks = pushforward_ks(3, 10, n, 5150).unwrap();
        assert!(ks > threshold, "negative control passed: {ks}");
    }

    #[test]
    fn kernel_identity_zero_and_diagonal_cases() {
        let d = 3;
        let v = vec![1.0, 0.0, 0.0];
        let w = vec![0.0, 1.0, 0.0];
        // i != n: prediction is exactly zero
        let check = verify_kernel_identity(d, 2, 1, 2, &v, &w, 200_000, 99).unwrap();
        assert_eq!(check.predicted, 0.0);
        assert!(check.within(4.0), "estimate {:?}", check.estimate);

        // i = j = n = 2, orthogonal directions: P_2(0)/sqrt(5) = -1/(2 sqrt 5)
        let check = verify_kernel_identity(d, 2, 2, 2, &v, &w, 400_000, 17).unwrap();
        let want = -0.5 / 5.0_f64.sqrt();
        assert!((check.predicted - want).abs() <= 1e-12);
        assert!(check.within(4.0), "estimate {:?}", check.estimate);

        // aligned directions: P_n(1)/sqrt(N) = 1/sqrt(N)
        let check = verify_kernel_identity(d, 1, 1, 1, &v, &v, 200_000, 41).unwrap();
        assert!((check.predicted - 1.0 / 3.0_f64.sqrt()).abs() <= 1e-12);
        assert!(check.within(4.0));
    }

    #[test]
    fn kernel_identity_domain_checks() {
        let v = vec![1.0, 0.0, 0.0];
        assert!(verify_kernel_identity(30, 1, 1, 1, &v, &v, 10, 0).is_err());
        assert!(verify_kernel_identity(3, 21, 1, 1, &v, &v, 10, 0).is_err());
        let short = vec![1.0];
        assert!(verify_kernel_identity(3, 1, 1, 1, &short, &v, 10, 0).is_err());
        let not_unit = vec![0.5, 0.0, 0.0];
        assert!(verify_kernel_identity(3, 1, 1, 1, &not_unit, &v, 10, 0).is_err());
    }

    #[test]
    fn reproducing_property() {
        // E_x[ L_i^v(x) L_j^w(x) ] = delta_ij P_i(<v, w>)
        let d = 4;
        let family = LegendreFamily::<f64>::new(d, 3).unwrap();
        let v = vec![1.0, 0.0, 0.0, 0.0];
        let w = vec![0.6, 0.8, 0.0, 0.0];
        let mut sampler = SphereSampler::new(d, 77).unwrap();
        for (i, j) in [(2_usize, 2_usize), (1, 3), (3, 3)] {
            let mut acc = MomentAccumulator::new();
            for _ in 0..300_000 {
                let x = sampler.sample();
                let li = family.eval_orthonormal_single(i, dot(&v, &x).clamp(-1.0, 1.0)).unwrap();
                let lj = family.eval_orthonormal_single(j, dot(&w, &x).clamp(-1.0, 1.0)).unwrap();
                acc.add(li * lj);
            }
            let est = acc.finish();
            let want = if i == j {
                family.eval_all(0.6).unwrap()[i]
            } else {
                0.0
            };
            assert!(
                (est.mean - want).abs() <= 4.0 * est.std_error,
                "(i,j)=({i},{j}): {} vs {want}",
                est.mean
            );
        }
    }
}
