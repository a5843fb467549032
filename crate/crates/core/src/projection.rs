//! Expansion of a profile g: [-1, 1] -> R in the orthonormal Legendre basis
//! and the polynomial residual: the distance from g to the degree-(n-1)
//! polynomials in L2 of the projection measure.
//!
//! The residual is computed as sqrt(|g|^2 - sum of the first n squared
//! coefficients) rather than by summing the coefficient tail, so truncating
//! the expansion at degree N never understates it: mass above degree N is
//! still charged to the residual.
//!
//! [`best_poly_error_oracle`] is a deliberately separate second route to
//! the same quantity (explicit least squares in an unrelated basis followed
//! by direct quadrature of the squared error); the two must agree and the
//! tests hold them to that.

use crate::error::{Error, Result};
use crate::legendre::LegendreFamily;
use crate::quadrature::{gauss_rule, required_nodes, QuadratureRule};
use crate::scalar::{KahanSum, Real};

/// Coefficients of a profile against the orthonormal family, together with
/// an independently quadratured norm.
#[derive(Debug, Clone)]
pub struct Expansion<F> {
    d: usize,
    coefficients: Vec<F>,
    norm_sq_estimate: F,
    nodes_used: usize,
    oscillation_suspect: bool,
}

impl<F: Real> Expansion<F> {
    pub fn dimension(&self) -> usize {
        self.d
    }

    /// alpha_0 .. alpha_N.
    pub fn coefficients(&self) -> &[F] {
        &self.coefficients
    }

    pub fn max_degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// |g|^2 in L2 of the measure, estimated by the same quadrature rule.
    pub fn norm_sq_estimate(&self) -> F {
        self.norm_sq_estimate
    }

    pub fn nodes_used(&self) -> usize {
        self.nodes_used
    }

    /// True when the refinement heuristic suggests the quadrature rule did
    /// not resolve the profile's oscillation.
    pub fn oscillation_suspect(&self) -> bool {
        self.oscillation_suspect
    }

    /// The distance from g to the degree-(n-1) polynomials:
    /// sqrt(max(0, |g|^2 - sum_{i<n} alpha_i^2)). Valid for n up to
    /// max_degree + 1; nonincreasing in n.
    pub fn residual(&self, n: usize) -> Result<F> {
        if n > self.coefficients.len() {
            return Err(Error::Domain(format!(
                "residual cut {n} exceeds expansion length {}",
                self.coefficients.len()
            )));
        }
        let mut partial = KahanSum::new();
        for &alpha in &self.coefficients[..n] {
            partial.add(alpha * alpha);
        }
        // tiny negative values are rounding, not signal
        Ok((self.norm_sq_estimate - partial.value()).max(F::zero()).sqrt())
    }
}

/// Expands `g` to degree `n_max` with the given rule. The rule must belong
/// to the same dimension and integrate degree 2 n_max exactly; resolving
/// the profile's oscillation is the caller's job (see
/// [`required_nodes`]), but an undersampled rule is flagged heuristically
/// on the result.
pub fn expand<F: Real>(
    g: impl Fn(F) -> F,
    d: usize,
    n_max: usize,
    rule: &QuadratureRule<F>,
) -> Result<Expansion<F>> {
    if rule.dimension() != d {
        return Err(Error::Domain(format!(
            "rule dimension {} does not match d = {d}",
            rule.dimension()
        )));
    }
    if rule.exact_degree() < 2 * n_max {
        return Err(Error::Domain(format!(
            "rule exact degree {} below required {}",
            rule.exact_degree(),
            2 * n_max
        )));
    }
    let family = LegendreFamily::<F>::new(d, n_max)?;
    let mut coeff_sums: Vec<KahanSum<F>> = vec![KahanSum::new(); n_max + 1];
    let mut norm_sum = KahanSum::new();
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        let gx = g(x);
        let q = family.eval_orthonormal(x)?;
        for (acc, qi) in coeff_sums.iter_mut().zip(&q) {
            acc.add(w * gx * *qi);
        }
        norm_sum.add(w * gx * gx);
    }
    let norm_sq_estimate = norm_sum.value();

    // refinement check: a rule that resolves g gives the same norm on a
    // modestly finer rule; skipped for very large rules where rebuilding
    // costs more than the expansion itself
    let oscillation_suspect = if rule.len() <= 4096 {
        let refined = gauss_rule::<F>(d, rule.len() + rule.len() / 4 + 8)?;
        let refined_norm = refined.integrate(|x| {
            let gx = g(x);
            gx * gx
        });
        (refined_norm - norm_sq_estimate).abs()
            > F::of(1e-8) * (F::one() + norm_sq_estimate.abs())
    } else {
        false
    };

    Ok(Expansion {
        d,
        coefficients: coeff_sums.iter().map(|a| a.value()).collect(),
        norm_sq_estimate,
        nodes_used: rule.len(),
        oscillation_suspect,
    })
}

/// Squared distance from g to the degree-k polynomials by explicit least
/// squares, independent of the expansion path.
///
/// The fit basis is scaled Hermite: He_a(sqrt(d) x) / sqrt(a!). Under the
/// measure, sqrt(d) x is approximately standard normal for large d, so the
/// Gram matrix stays well conditioned where plain monomials would be
/// hopeless. The returned value is the direct quadrature of (g - p)^2 for
/// the fitted p, which can only overstate the true minimum.
pub fn best_poly_error_oracle<F: Real>(
    g: impl Fn(F) -> F,
    d: usize,
    k: usize,
    rule: &QuadratureRule<F>,
) -> Result<F> {
    if rule.dimension() != d {
        return Err(Error::Domain(format!(
            "rule dimension {} does not match d = {d}",
            rule.dimension()
        )));
    }
    if rule.exact_degree() < 2 * k {
        return Err(Error::Domain(format!(
            "rule exact degree {} below required {}",
            rule.exact_degree(),
            2 * k
        )));
    }
    let dim = k + 1;
    let sqrt_d = F::of_usize(d).sqrt();

    // basis values at every node
    let basis: Vec<Vec<F>> = rule
        .nodes()
        .iter()
        .map(|&x| hermite_normalized(sqrt_d * x, k))
        .collect();

    let mut gram = vec![F::zero(); dim * dim];
    let mut rhs = vec![F::zero(); dim];
    let mut g_values = Vec::with_capacity(rule.len());
    for (row, (&x, &w)) in basis.iter().zip(rule.nodes().iter().zip(rule.weights())) {
        let gx = g(x);
        g_values.push(gx);
        for a in 0..dim {
            rhs[a] = rhs[a] + w * gx * row[a];
            for b in a..dim {
                gram[a * dim + b] = gram[a * dim + b] + w * row[a] * row[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            gram[a * dim + b] = gram[b * dim + a];
        }
    }

    let coeffs = cholesky_solve(&mut gram, &rhs, dim)?;

    let mut err = KahanSum::new();
    for (row, (gx, &w)) in basis.iter().zip(g_values.iter().zip(rule.weights())) {
        let mut p = F::zero();
        for a in 0..dim {
            p = p + coeffs[a] * row[a];
        }
        let diff = *gx - p;
        err.add(w * diff * diff);
    }
    Ok(err.value().max(F::zero()))
}

/// He_0 .. He_k at `t`, each divided by sqrt(a!):
/// psi_{a+1} = (t psi_a - sqrt(a) psi_{a-1}) / sqrt(a + 1).
fn hermite_normalized<F: Real>(t: F, k: usize) -> Vec<F> {
    let mut values = Vec::with_capacity(k + 1);
    values.push(F::one());
    if k >= 1 {
        values.push(t);
    }
    for a in 1..k {
        let next = (t * values[a] - F::of_usize(a).sqrt() * values[a - 1])
            / F::of_usize(a + 1).sqrt();
        values.push(next);
    }
    values
}

/// In-place Cholesky factorization and solve of a symmetric positive
/// definite system stored row-major.
fn cholesky_solve<F: Real>(matrix: &mut [F], rhs: &[F], dim: usize) -> Result<Vec<F>> {
    let mut max_diag = F::zero();
    for a in 0..dim {
        max_diag = max_diag.max(matrix[a * dim + a].abs());
    }
    let floor = F::epsilon() * F::of_usize(dim) * max_diag;
    for a in 0..dim {
        for b in a..dim {
            let mut sum = matrix[a * dim + b];
            for c in 0..a {
                sum = sum - matrix[a * dim + c] * matrix[b * dim + c];
            }
            if a == b {
                if sum <= floor {
                    return Err(Error::SingularSystem { dim });
                }
                matrix[a * dim + a] = sum.sqrt();
            } else {
                matrix[b * dim + a] = sum / matrix[a * dim + a];
            }
        }
    }
    // forward then backward substitution
    let mut y = vec![F::zero(); dim];
    for a in 0..dim {
        let mut sum = rhs[a];
        for c in 0..a {
            sum = sum - matrix[a * dim + c] * y[c];
        }
        y[a] = sum / matrix[a * dim + a];
    }
    let mut x = vec![F::zero(); dim];
    for a in (0..dim).rev() {
        let mut sum = y[a];
        for c in a + 1..dim {
            sum = sum - matrix[c * dim + a] * x[c];
        }
        x[a] = sum / matrix[a * dim + a];
    }
    Ok(x)
}

/// Smallest dimension in `candidates` (scanned in the order given) at which
/// the measured squared residual of sin(pi sqrt(d) m x) against degree-k
/// polynomials clears (m - k)/(4 e pi m). The closed-form bound only claims
/// validity for large d; this measures where it starts holding, without
/// asserting anything.
pub fn measured_sine_lemma_min_d<F: Real>(
    m: usize,
    k: usize,
    candidates: &[usize],
) -> Result<Option<usize>> {
    let bound = crate::bounds::sine_lemma_bound::<F>(m, k)?;
    for &d in candidates {
        let omega = std::f64::consts::PI * (d as f64).sqrt() * m as f64;
        let rule = gauss_rule::<F>(d, required_nodes(k + 1, omega))?;
        let freq = F::PI() * F::of_usize(d).sqrt() * F::of_usize(m);
        let err = best_poly_error_oracle(|x| (freq * x).sin(), d, k, &rule)?;
        if err >= bound {
            return Ok(Some(d));
        }
    }
    Ok(None)
}
