//! Empirical companion to the depth-2 floor: fit a bounded-weight depth-2
//! ReLU net to an inner-product target by projected SGD and compare the
//! measured L2 error against the proven floor for the same (d, n, r, B).
//!
//! Weights are hard-clamped into [-B, B] after every step, so the floor
//! applies exactly to every iterate, not just approximately. The gradient
//! is hand-derived (ReLU subgradient 0 at the kink) and checked against
//! finite differences in the tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{relu_sigma_max, theorem1_bound, BoundReport};
use crate::error::{Error, Result};
use crate::projection::expand;
use crate::quadrature::{gauss_rule, required_nodes};
use crate::relu_net::{AffineLayer, ReluNetwork};
use crate::sphere_mc::{dot, l2_error, sample_unit_vector, L2ErrorEstimate};

/// Training configuration. Scale is deliberately capped: this is a
/// demonstration, not a training harness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FitConfig {
    pub d: usize,
    pub width: usize,
    pub weight_bound: f64,
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

/// Loss trajectory of a fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// (step, batch loss) every few steps.
    pub trace: Vec<(usize, f64)>,
}

/// Flat parameter block of a depth-2 net; exposed so the gradient can be
/// checked coordinate by coordinate.
#[derive(Debug, Clone)]
pub struct Depth2Params {
    pub d: usize,
    pub width: usize,
    /// width x 2d, row-major.
    pub hidden_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl Depth2Params {
    fn init(cfg: &FitConfig, rng: &mut ChaCha8Rng) -> Self {
        let scale = (cfg.weight_bound / (cfg.d as f64).sqrt()).min(0.5);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.random_range(-scale..scale)).collect()
        };
        Self {
            d: cfg.d,
            width: cfg.width,
            hidden_weights: draw(cfg.width * 2 * cfg.d),
            hidden_bias: draw(cfg.width),
            output_weights: draw(cfg.width),
            output_bias: 0.0,
        }
    }

    pub fn predict(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut out = self.output_bias;
        for row in 0..self.width {
            let base = row * 2 * self.d;
            let mut z = self.hidden_bias[row];
            for (c, &v) in x.iter().enumerate() {
                z += self.hidden_weights[base + c] * v;
            }
            for (c, &v) in y.iter().enumerate() {
                z += self.hidden_weights[base + self.d + c] * v;
            }
            if z > 0.0 {
                out += self.output_weights[row] * z;
            }
        }
        out
    }

    /// Mean squared error over the batch and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(Vec<f64>, Vec<f64>, f64)]) -> (f64, Depth2Params) {
        let mut grad = Depth2Params {
            d: self.d,
            width: self.width,
            hidden_weights: vec![0.0; self.hidden_weights.len()],
            hidden_bias: vec![0.0; self.width],
            output_weights: vec![0.0; self.width],
            output_bias: 0.0,
        };
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let mut pre = vec![0.0; self.width];
        for (x, y, target) in batch {
            let mut out = self.output_bias;
            for row in 0..self.width {
                let base = row * 2 * self.d;
                let mut z = self.hidden_bias[row];
                for (c, &v) in x.iter().enumerate() {
                    z += self.hidden_weights[base + c] * v;
                }
                for (c, &v) in y.iter().enumerate() {
                    z += self.hidden_weights[base + self.d + c] * v;
                }
                pre[row] = z;
                if z > 0.0 {
                    out += self.output_weights[row] * z;
                }
            }
            let err = out - target;
            loss += scale * err * err;
            let dl_dout = 2.0 * scale * err;
            grad.output_bias += dl_dout;
            for row in 0..self.width {
                if pre[row] <= 0.0 {
                    continue;
                }
                grad.output_weights[row] += dl_dout * pre[row];
                let delta = dl_dout * self.output_weights[row];
                grad.hidden_bias[row] += delta;
                let base = row * 2 * self.d;
                for (c, &v) in x.iter().enumerate() {
                    grad.hidden_weights[base + c] += delta * v;
                }
                for (c, &v) in y.iter().enumerate() {
                    grad.hidden_weights[base + self.d + c] += delta * v;
                }
            }
        }
        (loss, grad)
    }

    fn step_and_clamp(&mut self, grad: &Depth2Params, lr: f64, bound: f64) {
        let clamp = |v: f64| v.clamp(-bound, bound);
        for (w, g) in self.hidden_weights.iter_mut().zip(&grad.hidden_weights) {
            *w = clamp(*w - lr * g);
        }
        for (w, g) in self.hidden_bias.iter_mut().zip(&grad.hidden_bias) {
            *w = clamp(*w - lr * g);
        }
        for (w, g) in self.output_weights.iter_mut().zip(&grad.output_weights) {
            *w = clamp(*w - lr * g);
        }
        self.output_bias = clamp(self.output_bias - lr * grad.output_bias);
    }

    pub fn into_network(self, bound: f64) -> Result<ReluNetwork<f64>> {
        let hidden = AffineLayer::new(
            self.width,
            2 * self.d,
            self.hidden_weights,
            self.hidden_bias,
            bound,
        )?;
        let output = AffineLayer::new(1, self.width, self.output_weights, vec![self.output_bias], bound)?;
        ReluNetwork::new(vec![hidden, output], (self.d, self.d), bound)
    }
}

pub fn sample_batch(
    d: usize,
    batch_size: usize,
    profile: &impl Fn(f64) -> f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    (0..batch_size)
        .map(|_| {
            let x = sample_unit_vector(d, rng);
            let y = sample_unit_vector(d, rng);
            let target = profile(dot(&x, &y).clamp(-1.0, 1.0));
            (x, y, target)
        })
        .collect()
}

/// Projected SGD on fresh Monte Carlo batches. Fails with diagnostics if
/// the loss sits above ten times its initial value for a hundred
/// consecutive steps.
pub fn fit_depth2(
    cfg: &FitConfig,
    profile: impl Fn(f64) -> f64,
) -> Result<(ReluNetwork<f64>, FitReport)> {
    if cfg.d > 8 || cfg.width > 4096 {
        return Err(Error::Domain(
            "demo scale is capped at d <= 8, width <= 4096".into(),
        ));
    }
    if cfg.d < 2 || cfg.width == 0 || cfg.batch_size == 0 || cfg.steps == 0 {
        return Err(Error::Domain("degenerate fit configuration".into()));
    }
    if !(cfg.weight_bound > 0.0) || !(cfg.learning_rate > 0.0) {
        return Err(Error::Domain(
            "weight bound and learning rate must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Depth2Params::init(cfg, &mut rng);
    let mut report = FitReport {
        initial_loss: f64::NAN,
        final_loss: f64::NAN,
        trace: Vec::new(),
    };
    let trace_every = (cfg.steps / 50).max(1);
    let mut divergent_streak = 0usize;
    let mut last_loss = f64::NAN;
    for step in 0..cfg.steps {
        let batch = sample_batch(cfg.d, cfg.batch_size, &profile, &mut rng);
        let (loss, grad) = params.loss_and_gradient(&batch);
        if step == 0 {
            report.initial_loss = loss;
        }
        if loss > 10.0 * report.initial_loss {
            divergent_streak += 1;
            if divergent_streak >= 100 {
                return Err(Error::VerificationFailed(format!(
                    "fit diverged: step {step}, loss {loss} against initial {}",
                    report.initial_loss
                )));
            }
        } else {
            divergent_streak = 0;
        }
        if step % trace_every == 0 {
            report.trace.push((step, loss));
        }
        params.step_and_clamp(&grad, cfg.learning_rate, cfg.weight_bound);
        last_loss = loss;
    }
    report.final_loss = last_loss;
    let net = params.into_network(cfg.weight_bound)?;
    debug_assert!(net.validate_bounds().ok);
    Ok((net, report))
}

/// Measured error of a fit next to the proven floor for the same budget.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub fit: FitReport,
    pub measured: L2ErrorEstimate,
    pub floor: BoundReport<f64>,
    /// Measured norm stays above the floor (4 standard errors of slack)
    /// whenever the floor is non-vacuous; a violation means a bug.
    pub sound: bool,
}

/// Fits, measures the L2 error against the target over fresh samples, and
/// evaluates the floor at cut degree `n`. The profile's expansion residual
/// is computed with a rule sized for `omega_hint` radians of oscillation.
pub fn gap_report(
    cfg: &FitConfig,
    profile: impl Fn(f64) -> f64 + Copy,
    omega_hint: f64,
    n: usize,
    eval_samples: usize,
) -> Result<GapReport> {
    let (net, fit) = fit_depth2(cfg, profile)?;
    let expansion_degree = n + 8;
    let nodes = required_nodes(expansion_degree, omega_hint).max(64);
    let rule = gauss_rule::<f64>(cfg.d, nodes)?;
    let residual = expand(profile, cfg.d, expansion_degree, &rule)?.residual(n)?;
    let sigma_max = relu_sigma_max(cfg.d, cfg.weight_bound)?;
    let floor = theorem1_bound(
        cfg.d,
        n,
        cfg.width,
        cfg.weight_bound,
        sigma_max,
        residual,
    )?;
    let target = move |x: &[f64], y: &[f64]| Ok(profile(dot(x, y).clamp(-1.0, 1.0)));
    let net_fn = |x: &[f64], y: &[f64]| net.evaluate(x, y);
    let measured = l2_error(net_fn, target, cfg.d, eval_samples, cfg.seed ^ 0x9e3779b97f4a7c15)?;
    let sound = if floor.vacuous {
        true
    } else {
        measured.norm >= floor.lower_bound - 4.0 * measured.norm_std_error
    };
    Ok(GapReport {
        fit,
        measured,
        floor,
        sound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> FitConfig {
        FitConfig {
            d: 4,
            width: 32,
            weight_bound: 2.0,
            learning_rate: 0.05,
            steps: 400,
            batch_size: 128,
            seed: 20240917,
        }
    }

    #[test]
    fn constant_profile_fits_to_near_zero() {
        let cfg = FitConfig {
            steps: 600,
            ..small_cfg()
        };
        let (net, report) = fit_depth2(&cfg, |_| 0.5).unwrap();
        assert!(net.validate_bounds().ok);
        assert!(
            report.final_loss < 1e-3,
            "final loss {} too large",
            report.final_loss
        );
    }

    #[test]
    fn linear_profile_fits_well() {
        // q_1 profiles are depth-2 friendly; expect a visible loss drop
        let cfg = FitConfig {
            steps: 800,
            ..small_cfg()
        };
        let d = cfg.d as f64;
        let (_, report) = fit_depth2(&cfg, move |t| d.sqrt() * t).unwrap();
        assert!(
            report.final_loss < 0.25 * report.initial_loss,
            "loss went {} -> {}",
            report.initial_loss,
            report.final_loss
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = Depth2Params::init(&cfg, &mut rng);
        let profile = |t: f64| (2.0 * t).sin();
        // one fixed batch; skip kink-adjacent configurations
        let batch = sample_batch(cfg.d, 64, &profile, &mut rng);
        let near_kink = {
            let mut min_abs = f64::INFINITY;
            for (x, y, _) in &batch {
                for row in 0..params.width {
                    let base = row * 2 * params.d;
                    let mut z = params.hidden_bias[row];
                    for (c, &v) in x.iter().enumerate() {
                        z += params.hidden_weights[base + c] * v;
                    }
                    for (c, &v) in y.iter().enumerate() {
                        z += params.hidden_weights[base + params.d + c] * v;
                    }
                    min_abs = min_abs.min(z.abs());
                }
            }
            min_abs < 1e-4
        };
        assert!(!near_kink, "reseed the test: batch touches a kink");

        let (_, grad) = params.loss_and_gradient(&batch);
        let h = 1e-6;
        let mut checked = 0;
        let n_hw = params.hidden_weights.len();
        for trial in 0..100 {
            // deterministic sweep over parameter coordinates
            let idx = (trial * 37) % (n_hw + 2 * params.width + 1);
            let mut plus = params.clone();
            let mut minus = params.clone();
            let analytic = if idx < n_hw {
                plus.hidden_weights[idx] += h;
                minus.hidden_weights[idx] -= h;
                grad.hidden_weights[idx]
            } else if idx < n_hw + params.width {
                let r = idx - n_hw;
                plus.hidden_bias[r] += h;
                minus.hidden_bias[r] -= h;
                grad.hidden_bias[r]
            } else if idx < n_hw + 2 * params.width {
                let r = idx - n_hw - params.width;
                plus.output_weights[r] += h;
                minus.output_weights[r] -= h;
                grad.output_weights[r]
            } else {
                plus.output_bias += h;
                minus.output_bias -= h;
                grad.output_bias
            };
            let (lp, _) = plus.loss_and_gradient(&batch);
            let (lm, _) = minus.loss_and_gradient(&batch);
            let fd = (lp - lm) / (2.0 * h);
            let scale = analytic.abs().max(fd.abs()).max(1e-3);
            assert!(
                (fd - analytic).abs() <= 1e-5 * scale,
                "coordinate {idx}: fd {fd} vs analytic {analytic}"
            );
            checked += 1;
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn scale_caps_enforced() {
        let mut cfg = small_cfg();
        cfg.d = 9;
        assert!(fit_depth2(&cfg, |t| t).is_err());
        let mut cfg = small_cfg();
        cfg.width = 5000;
        assert!(fit_depth2(&cfg, |t| t).is_err());
    }

    #[test]
    fn gap_report_respects_floor() {
        // a high-degree profile with a tight width budget: the floor is
        // non-vacuous and the fitted net must stay above it
        let cfg = FitConfig {
            d: 6,
            width: 4,
            weight_bound: 0.5,
            learning_rate: 0.05,
            steps: 300,
            batch_size: 64,
            seed: 99,
        };
        let d = cfg.d;
        let profile = move |t: f64| {
            crate::legendre::LegendreFamily::<f64>::new(d, 4)
                .unwrap()
                .eval_orthonormal_single(4, t)
                .unwrap()
        };
        let report = gap_report(&cfg, profile, 8.0, 4, 40_000).unwrap();
        assert!(!report.floor.vacuous, "floor should bind at this budget");
        assert!(report.sound, "measured error fell below a proven floor");
        // widening the net weakens the floor monotonically
        let wider = FitConfig {
            width: 8,
            ..cfg
        };
        let report_wide = gap_report(&wider, profile, 8.0, 4, 10_000).unwrap();
        assert!(report_wide.floor.lower_bound < report.floor.lower_bound);
    }
}
