//! Explicit approximation constructions: a 1-D Lipschitz function as a flat
//! ReLU sum, the squaring net derived from it, the inner-product net that
//! sums d squaring nets over coordinate pairs, and the depth-3 composition
//! approximating any Lipschitz profile of the inner product.
//!
//! Every builder verifies its own output on a seeded grid or sample and
//! fails loudly instead of returning an object that misses its budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relu_net::{AffineLayer, ReluNetwork};
use crate::scalar::Real;
use crate::sphere_mc::{dot, sample_unit_vector};

/// One ridge term alpha * relu(gamma x - beta) with gamma in {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeUnit<F> {
    pub alpha: F,
    pub gamma: i8,
    pub beta: F,
}

/// A 1-D function g(x) = constant + sum of ridge units: the flat ReLU form
/// of a piecewise-linear interpolant. Within the construction radius it
/// tracks the target to `eps`; outside it continues with the boundary
/// slopes, staying Lipschitz with the target's constant on all of R.
#[derive(Debug, Clone)]
pub struct Ridge1D<F> {
    constant: F,
    units: Vec<RidgeUnit<F>>,
    radius: F,
    lipschitz: F,
    eps: F,
}

impl<F: Real> Ridge1D<F> {
    pub fn evaluate(&self, x: F) -> F {
        let mut acc = self.constant;
        for u in &self.units {
            let arg = if u.gamma > 0 { x } else { -x } - u.beta;
            if arg > F::zero() {
                acc = acc + u.alpha * arg;
            }
        }
        acc
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn units(&self) -> &[RidgeUnit<F>] {
        &self.units
    }

    pub fn constant(&self) -> F {
        self.constant
    }

    pub fn radius(&self) -> F {
        self.radius
    }

    pub fn lipschitz(&self) -> F {
        self.lipschitz
    }

    pub fn eps(&self) -> F {
        self.eps
    }

    pub fn max_abs_alpha(&self) -> F {
        self.units
            .iter()
            .fold(F::zero(), |m, u| m.max(u.alpha.abs()))
    }

    pub fn max_abs_beta(&self) -> F {
        self.units
            .iter()
            .fold(F::zero(), |m, u| m.max(u.beta.abs()))
    }
}

/// Builds a ridge sum within `eps` of `f` on [-radius, radius].
///
/// Breakpoints sit on a uniform grid of spacing eps/lipschitz anchored at 0
/// (the outermost interval may be shorter); the piecewise-linear
/// interpolant of `f` on that grid is rewritten as ridge units whose alphas
/// are consecutive slope differences. Interpolating a Lipschitz function
/// overshoots by at most half a grid step times the constant, so the grid
/// verification below has an eps/2 margin in theory and asserts the full
/// eps in practice.
///
/// Unit count is at most 2 * radius * lipschitz / eps (up to the final
/// partial interval); units with exactly zero alpha are dropped, which
/// collapses |x| to two units and the identity to two.
pub fn approx_1d<F: Real>(
    f: impl Fn(F) -> F,
    radius: F,
    lipschitz: F,
    eps: F,
) -> Result<Ridge1D<F>> {
    if !(radius > F::zero()) || !(lipschitz > F::zero()) || !(eps > F::zero()) {
        return Err(Error::Domain(
            "radius, Lipschitz constant and eps must be positive".into(),
        ));
    }
    spot_check_lipschitz(&f, radius, lipschitz)?;

    let constant = f(F::zero());
    if radius * lipschitz <= eps {
        // f moves at most radius * lipschitz from f(0); the constant alone fits
        let ridge = Ridge1D {
            constant,
            units: Vec::new(),
            radius,
            lipschitz,
            eps,
        };
        verify_ridge(&ridge, &f)?;
        return Ok(ridge);
    }

    let spacing = eps / lipschitz;
    let breakpoints = grid_breakpoints(radius, spacing);

    let mut units = Vec::new();
    for side in [1_i8, -1] {
        // walk outward from 0; slope s_k lives on [t_k, t_{k+1}] of the
        // side's own axis (the negative side is mirrored through gamma)
        let mut prev_slope = F::zero();
        for k in 0..breakpoints.len() - 1 {
            let a = breakpoints[k];
            let b = breakpoints[k + 1];
            let (fa, fb) = if side > 0 {
                (f(a), f(b))
            } else {
                (f(-a), f(-b))
            };
            let slope = (fb - fa) / (b - a);
            let alpha = if k == 0 { slope } else { slope - prev_slope };
            prev_slope = slope;
            if alpha != F::zero() {
                units.push(RidgeUnit {
                    alpha,
                    gamma: side,
                    beta: a,
                });
            }
        }
    }

    let ridge = Ridge1D {
        constant,
        units,
        radius,
        lipschitz,
        eps,
    };
    if ridge.max_abs_alpha() > F::of(2.0) * lipschitz * (F::one() + F::of(1e-12)) {
        return Err(Error::VerificationFailed(
            "slope difference exceeded twice the Lipschitz constant".into(),
        ));
    }
    verify_ridge(&ridge, &f)?;
    Ok(ridge)
}

fn grid_breakpoints<F: Real>(radius: F, spacing: F) -> Vec<F> {
    let mut points = vec![F::zero()];
    let mut k = 1usize;
    loop {
        let t = F::of_usize(k) * spacing;
        if t >= radius - F::of(1e-12) * radius {
            break;
        }
        points.push(t);
        k += 1;
    }
    points.push(radius);
    points
}

fn spot_check_lipschitz<F: Real>(
    f: &impl Fn(F) -> F,
    radius: F,
    lipschitz: F,
) -> Result<()> {
    let checks = 256;
    let step = F::of(2.0) * radius / F::of_usize(checks);
    let mut prev_x = -radius;
    let mut prev_f = f(prev_x);
    for i in 1..=checks {
        let x = -radius + F::of_usize(i) * step;
        let fx = f(x);
        let slope = ((fx - prev_f) / (x - prev_x)).abs();
        // 5% grace over the declared constant
        if slope > lipschitz * F::of(1.05) {
            return Err(Error::LipschitzViolation {
                measured: slope.as_f64(),
                declared: lipschitz.as_f64(),
            });
        }
        prev_x = x;
        prev_f = fx;
    }
    Ok(())
}

/// Grid verification at ten points per unit (at least a hundred): the grid
/// sup error must be within eps, and the grid is fine enough for Lipschitz
/// continuity to extend that to 1.1 eps everywhere.
fn verify_ridge<F: Real>(ridge: &Ridge1D<F>, f: &impl Fn(F) -> F) -> Result<()> {
    let points = (10 * ridge.unit_count()).max(100);
    let mut worst = F::zero();
    for i in 0..=points {
        let x = -ridge.radius + F::of(2.0) * ridge.radius * F::of_usize(i) / F::of_usize(points);
        worst = worst.max((ridge.evaluate(x) - f(x)).abs());
    }
    if worst > ridge.eps {
        return Err(Error::VerificationFailed(format!(
            "ridge sup error {} exceeds target {}",
            worst.as_f64(),
            ridge.eps.as_f64()
        )));
    }
    Ok(())
}

/// The squaring stage: t^2/2 on [-2, 2] (Lipschitz constant 2) to accuracy
/// eps / (2 d lipschitz), the error share that makes the d-fold sum in the
/// inner-product net land at eps / (2 lipschitz). Biases stay within 2 and
/// alphas within 4; unit count is at most 16 d lipschitz / eps.
pub fn build_square_net<F: Real>(d_scale: usize, lipschitz: F, eps: F) -> Result<Ridge1D<F>> {
    if d_scale == 0 {
        return Err(Error::Domain("scale dimension must be positive".into()));
    }
    if !(lipschitz > F::zero()) || !(eps > F::zero()) {
        return Err(Error::Domain("lipschitz and eps must be positive".into()));
    }
    let share = eps / (F::of(2.0) * F::of_usize(d_scale) * lipschitz);
    let ridge = approx_1d(
        |t: F| t * t / F::of(2.0),
        F::of(2.0),
        F::of(2.0),
        share,
    )?;
    let budget = F::of(16.0) * F::of_usize(d_scale) * lipschitz / eps + F::of(2.0);
    if F::of_usize(ridge.unit_count()) > budget {
        return Err(Error::VerificationFailed(format!(
            "squaring net used {} units against budget {}",
            ridge.unit_count(),
            budget.as_f64()
        )));
    }
    Ok(ridge)
}

/// Sampling parameters for the built-in verification of the network
/// builders. The defaults match the construction contract: ten thousand
/// seeded pairs.
#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0x5eed,
        }
    }
}

/// A built network together with its measured verification error.
#[derive(Debug, Clone)]
pub struct VerifiedNetwork<F> {
    pub network: ReluNetwork<F>,
    pub measured_sup_error: F,
}

/// Depth-2 network computing the inner product of two unit vectors to
/// within eps / (2 lipschitz): d squaring nets composed with the coordinate
/// sums x_i + x'_i, summed, minus one. Hidden weights stay within 2 and
/// output weights within 4; width is at most 16 d^2 lipschitz / eps.
pub fn build_inner_product_net<F: Real>(
    d: usize,
    lipschitz: F,
    eps: F,
) -> Result<VerifiedNetwork<F>> {
    build_inner_product_net_with(d, lipschitz, eps, VerifyOptions::default())
}

pub fn build_inner_product_net_with<F: Real>(
    d: usize,
    lipschitz: F,
    eps: F,
    verify: VerifyOptions,
) -> Result<VerifiedNetwork<F>> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    let square = build_square_net(d, lipschitz, eps)?;
    let (hidden, output) = inner_product_layers(d, &square)?;
    let network = ReluNetwork::new(vec![hidden, output], (d, d), F::of(4.0))?;

    let tolerance = eps / (F::of(2.0) * lipschitz);
    let measured = measure_sup_error(
        &network,
        |t| t,
        verify,
    )?;
    if measured > tolerance {
        return Err(Error::VerificationFailed(format!(
            "inner-product net error {} exceeds tolerance {}",
            measured.as_f64(),
            tolerance.as_f64()
        )));
    }
    Ok(VerifiedNetwork {
        network,
        measured_sup_error: measured,
    })
}

/// Hidden and output layers of the inner-product stage. The hidden layer
/// holds d copies of the squaring units wired to coordinate pairs; the
/// output layer sums them and folds the constant -1 into its bias.
fn inner_product_layers<F: Real>(
    d: usize,
    square: &Ridge1D<F>,
) -> Result<(AffineLayer<F>, AffineLayer<F>)> {
    let m = square.unit_count();
    let rows = d * m;
    let mut weights = vec![F::zero(); rows * 2 * d];
    let mut bias = vec![F::zero(); rows];
    let mut out_weights = vec![F::zero(); rows];
    for i in 0..d {
        for (u_idx, unit) in square.units().iter().enumerate() {
            let row = i * m + u_idx;
            let g = if unit.gamma > 0 { F::one() } else { -F::one() };
            weights[row * 2 * d + i] = g;
            weights[row * 2 * d + d + i] = g;
            bias[row] = -unit.beta;
            out_weights[row] = unit.alpha;
        }
    }
    let hidden = AffineLayer::new(rows, 2 * d, weights, bias, F::of(2.0))?;
    // each copy contributes its constant term; the inner product subtracts 1
    let out_bias = F::of_usize(d) * square.constant() - F::one();
    let output = AffineLayer::new(1, rows, out_weights, vec![out_bias], F::of(4.0))?;
    Ok((hidden, output))
}

/// Depth-3 network approximating f(<x, x'>) to within eps for an
/// L-Lipschitz f: [-1, 1] -> [-1, 1].
///
/// Layer 1 is the inner-product stage's hidden layer; layer 2 evaluates the
/// ridge units of a 1-D approximant of f on the inner-product estimate
/// (the summation and the -1 fold into its weights and biases); layer 3 is
/// the approximant's output combination. The outer approximant is built on
/// the inflated radius 1 + eps/(2L) with f extended constantly beyond
/// [-1, 1], because the inner stage can overshoot by its own error; the
/// extension keeps both the Lipschitz constant and the range. Errors
/// telescope: L * (eps / 2L) + eps / 2 = eps.
///
/// Width is at most 16 d^2 L / eps and every entry within max(4, 2L).
pub fn build_depth3<F: Real>(
    f: impl Fn(F) -> F,
    lipschitz: F,
    d: usize,
    eps: F,
) -> Result<VerifiedNetwork<F>> {
    build_depth3_with(f, lipschitz, d, eps, VerifyOptions::default())
}

pub fn build_depth3_with<F: Real>(
    f: impl Fn(F) -> F,
    lipschitz: F,
    d: usize,
    eps: F,
    verify: VerifyOptions,
) -> Result<VerifiedNetwork<F>> {
    if d == 0 {
        return Err(Error::Domain("dimension must be positive".into()));
    }
    if !(eps > F::zero()) || !(lipschitz > F::zero()) {
        return Err(Error::Domain("eps and lipschitz must be positive".into()));
    }
    // range spot check: the profile must map [-1, 1] into [-1, 1]
    for i in 0..=1000 {
        let x = -F::one() + F::of(2.0) * F::of_usize(i) / F::of(1000.0);
        let v = f(x);
        if v.abs() > F::one() + F::of(1e-12) {
            return Err(Error::RangeViolation { value: v.as_f64() });
        }
    }

    let bound = F::of(4.0).max(F::of(2.0) * lipschitz);
    let square = build_square_net(d, lipschitz, eps)?;
    let (layer1, inner_output) = inner_product_layers(d, &square)?;

    let inflated_radius = F::one() + eps / (F::of(2.0) * lipschitz);
    if F::one() + inflated_radius > bound {
        return Err(Error::Domain(
            "eps too large relative to the Lipschitz constant for the weight budget".into(),
        ));
    }
    let clamped = |u: F| f(u.max(-F::one()).min(F::one()));
    let outer = approx_1d(clamped, inflated_radius, lipschitz, eps / F::of(2.0))?;

    // layer 2: for outer unit (alpha', gamma', beta'), the pre-activation is
    // gamma' * (sum_j alpha_j s_j + b_inner) - beta', with s_j the layer-1
    // activations and b_inner the folded -1
    let inner_width = layer1.out_dim();
    let outer_width = outer.unit_count();
    let inner_weights = inner_output.weights();
    let inner_bias = inner_output.bias()[0];
    let mut w2 = vec![F::zero(); outer_width * inner_width];
    let mut b2 = vec![F::zero(); outer_width];
    let mut w3 = vec![F::zero(); outer_width];
    for (k, unit) in outer.units().iter().enumerate() {
        let g = if unit.gamma > 0 { F::one() } else { -F::one() };
        for j in 0..inner_width {
            w2[k * inner_width + j] = g * inner_weights[j];
        }
        b2[k] = g * inner_bias - unit.beta;
        w3[k] = unit.alpha;
    }
    let layer2 = AffineLayer::new(outer_width, inner_width, w2, b2, bound)?;
    let layer3 = AffineLayer::new(1, outer_width, w3, vec![outer.constant()], bound)?;
    let network = ReluNetwork::new(vec![layer1, layer2, layer3], (d, d), bound)?;

    let width_budget =
        F::of(16.0) * F::of_usize(d * d) * lipschitz / eps + F::of(2.0) * F::of_usize(d);
    if F::of_usize(network.width()) > width_budget {
        return Err(Error::VerificationFailed(format!(
            "depth-3 width {} exceeds budget {}",
            network.width(),
            width_budget.as_f64()
        )));
    }

    let measured = measure_sup_error(&network, f, verify)?;
    if measured > eps {
        return Err(Error::VerificationFailed(format!(
            "depth-3 net error {} exceeds eps {}",
            measured.as_f64(),
            eps.as_f64()
        )));
    }
    Ok(VerifiedNetwork {
        network,
        measured_sup_error: measured,
    })
}

/// Sup over seeded sphere pairs of |net(x, x') - profile(<x, x'>)|.
pub fn measure_sup_error<F: Real>(
    network: &ReluNetwork<F>,
    profile: impl Fn(F) -> F,
    verify: VerifyOptions,
) -> Result<F> {
    let (d, _) = network.input_split();
    let mut rng = ChaCha8Rng::seed_from_u64(verify.seed);
    let mut worst = F::zero();
    for _ in 0..verify.samples {
        let x = sample_unit_vector(d, &mut rng);
        let y = sample_unit_vector(d, &mut rng);
        let t = F::of(dot(&x, &y).clamp(-1.0, 1.0));
        let xf: Vec<F> = x.iter().map(|&v| F::of(v)).collect();
        let yf: Vec<F> = y.iter().map(|&v| F::of(v)).collect();
        let got = network.evaluate_with_tol(&xf, &yf, F::of(1e-6))?;
        worst = worst.max((got - profile(t)).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn absolute_value_collapses_to_two_units() {
        let ridge = approx_1d(|x: f64| x.abs(), 1.0, 1.0, 0.05).unwrap();
        assert_eq!(ridge.unit_count(), 2);
        for x in [-1.0, -0.31, 0.0, 0.5, 0.99] {
            assert_abs_diff_eq!(ridge.evaluate(x), x.abs(), epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_collapses_to_two_units() {
        let ridge = approx_1d(|x: f64| x, 1.0, 1.0, 0.1).unwrap();
        assert_eq!(ridge.unit_count(), 2);
        for x in [-0.7, 0.0, 0.2, 1.0] {
            assert_abs_diff_eq!(ridge.evaluate(x), x, epsilon = 1e-15);
        }
    }

    #[test]
    fn half_square_meets_unit_budget() {
        // t^2/2 on [-2, 2] with L = 2, eps = 0.01: at most 800 units
        let ridge = approx_1d(|t: f64| t * t / 2.0, 2.0, 2.0, 0.01).unwrap();
        assert!(ridge.unit_count() <= 800, "{} units", ridge.unit_count());
        let mut worst = 0.0_f64;
        for i in 0..=4000 {
            let x = -2.0 + 4.0 * i as f64 / 4000.0;
            worst = worst.max((ridge.evaluate(x) - x * x / 2.0).abs());
        }
        assert!(worst <= 0.01, "sup error {worst}");
        assert!(ridge.max_abs_beta() <= 2.0);
        assert!(ridge.max_abs_alpha() <= 4.0);
    }

    #[test]
    fn ridge_parameter_bounds_and_lipschitz() {
        let l = 3.0;
        let ridge = approx_1d(|x: f64| (3.0 * x).sin(), 1.0, l, 0.05).unwrap();
        assert!(ridge.max_abs_beta() <= 1.0);
        assert!(ridge.max_abs_alpha() <= 2.0 * l + 1e-12);
        assert!(ridge.unit_count() as f64 <= 2.0 * 1.0 * l / 0.05 + 1e-9);
        // measured slope between adjacent probe points stays within L
        let probes = 2000;
        for i in 0..probes {
            // also probe outside the radius: Lipschitz must hold on all of R
            let a = -3.0 + 6.0 * i as f64 / probes as f64;
            let b = a + 6.0 / probes as f64;
            let slope = (ridge.evaluate(b) - ridge.evaluate(a)) / (b - a);
            assert!(slope.abs() <= l * (1.0 + 1e-9), "slope {slope} at {a}");
        }
    }

    #[test]
    fn tiny_target_collapses_to_constant() {
        // radius * lipschitz <= eps: constant at f(0) suffices
        let ridge = approx_1d(|x: f64| 0.25 + 0.01 * x, 1.0, 0.011, 0.05).unwrap();
        assert_eq!(ridge.unit_count(), 0);
        assert_abs_diff_eq!(ridge.evaluate(0.9), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn lipschitz_violation_detected() {
        let err = approx_1d(|x: f64| (40.0 * x).sin(), 1.0, 2.0, 0.1);
        assert!(matches!(err, Err(Error::LipschitzViolation { .. })));
        assert!(approx_1d(|x: f64| x, -1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn square_net_anchors_and_width() {
        let (d, l, eps) = (3_usize, 3.0_f64, 0.1);
        let sq = build_square_net(d, l, eps).unwrap();
        assert!(sq.unit_count() as f64 <= 16.0 * d as f64 * l / eps);
        let share = eps / (2.0 * d as f64 * l);
        assert!(sq.evaluate(0.0).abs() <= share);
        assert!((sq.evaluate(2.0) - 2.0).abs() <= share);
        assert!((sq.evaluate(-2.0) - 2.0).abs() <= share);
    }

    #[test]
    fn inner_product_net_tracks_dot() {
        let (d, l, eps) = (3_usize, 1.0_f64, 0.2);
        let built = build_inner_product_net(d, l, eps).unwrap();
        let net = &built.network;
        assert!(net.width() <= 720, "width {}", net.width());
        let tol = eps / (2.0 * l);
        assert!(built.measured_sup_error <= tol);

        // aligned and orthogonal pairs hit the trivial values
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert!((net.evaluate(&x, &x).unwrap() - 1.0).abs() <= tol);
        assert!(net.evaluate(&x, &y).unwrap().abs() <= tol);

        let check = net.validate_bounds();
        assert!(check.ok);
        assert!(check.max_abs_entry <= 4.0);
    }

    #[test]
    fn depth3_identity_profile() {
        let (d, eps) = (3_usize, 0.1_f64);
        let built = build_depth3(|t: f64| t, 1.0, d, eps).unwrap();
        let net = &built.network;
        assert_eq!(net.depth(), 3);
        assert!(built.measured_sup_error <= eps);
        assert!(net.width() as f64 <= 16.0 * (d * d) as f64 * 1.0 / eps);
        let check = net.validate_bounds();
        assert!(check.ok, "max entry {}", check.max_abs_entry);

        let x = [0.6, 0.8, 0.0];
        let y = [0.0, 0.6, 0.8];
        let got = net.evaluate(&x, &y).unwrap();
        assert!((got - 0.48).abs() <= eps);
    }

    #[test]
    fn depth3_sine_profile_budgets() {
        // f = sin(3x), L = 3, d = 3, eps = 0.1: width caps at 4320,
        // weights at max(4, 6) = 6
        let (d, l, eps) = (3_usize, 3.0_f64, 0.1);
        let built = build_depth3(|t: f64| (3.0 * t).sin(), l, d, eps).unwrap();
        let net = &built.network;
        assert!(net.width() <= 4320, "width {}", net.width());
        assert!(built.measured_sup_error <= eps);
        assert_eq!(net.declared_bound(), 6.0);
        assert!(net.validate_bounds().ok);
    }

    #[test]
    fn depth3_error_decomposition() {
        // the two-stage error telescopes: |outer(inner) - outer(t)| <= L |inner - t|
        let (d, l, eps) = (4_usize, 2.0_f64, 0.2);
        let inner = build_inner_product_net(d, l, eps).unwrap();
        let outer = approx_1d(
            |u: f64| (2.0 * u.clamp(-1.0, 1.0)).sin() / 2.0_f64.max(1.0),
            1.0 + eps / (2.0 * l),
            l,
            eps / 2.0,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..500 {
            let x = sample_unit_vector(d, &mut rng);
            let y = sample_unit_vector(d, &mut rng);
            let t = dot(&x, &y);
            let inner_val = inner.network.evaluate(&x, &y).unwrap();
            let lhs = (outer.evaluate(inner_val) - outer.evaluate(t)).abs();
            assert!(lhs <= l * (inner_val - t).abs() + 1e-12);
        }
    }

    #[test]
    fn depth3_range_violation_rejected() {
        let err = build_depth3(|t: f64| 2.0 * t, 2.0, 3, 0.1);
        assert!(matches!(err, Err(Error::RangeViolation { .. })));
    }
}
