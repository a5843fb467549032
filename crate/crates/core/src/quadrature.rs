//! Gaussian quadrature against the coordinate-projection measure, plus an
//! adaptive fallback for integrands the node budget cannot resolve.
//!
//! Nodes and weights come from the Golub-Welsch construction: the nodes are
//! the eigenvalues of the symmetric tridiagonal Jacobi matrix of the
//! orthonormal polynomial family, and each weight is the squared first
//! component of the corresponding normalized eigenvector. The measure is
//! even, so the Jacobi diagonal is identically zero and only the
//! off-diagonals from [`crate::legendre::recurrence_coefficients`] enter.

use crate::error::{Error, Result};
use crate::legendre::recurrence_coefficients;
use crate::measure::MuD;
use crate::scalar::{KahanSum, Real};

/// A K-node rule integrating polynomials of degree <= 2K - 1 exactly
/// against the dimension-`d` measure. Weights are positive and sum to 1;
/// nodes are strictly increasing and symmetric about 0.
#[derive(Debug, Clone)]
pub struct QuadratureRule<F> {
    d: usize,
    nodes: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> QuadratureRule<F> {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    /// Compensated weighted sum of `f` over the nodes.
    pub fn integrate(&self, mut f: impl FnMut(F) -> F) -> F {
        let mut acc = KahanSum::new();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.value()
    }
}

/// Builds the K-node Gauss rule for dimension `d`.
pub fn gauss_rule<F: Real>(d: usize, k: usize) -> Result<QuadratureRule<F>> {
    if d < 2 {
        return Err(Error::Domain(format!("quadrature requires d >= 2, got {d}")));
    }
    if k == 0 {
        return Err(Error::Domain("quadrature needs at least one node".into()));
    }
    let off_diagonal = if k == 1 {
        Vec::new()
    } else {
        recurrence_coefficients::<F>(d, k - 1)?.off_diagonal
    };
    let (mut nodes, mut weights) = tridiagonal_nodes_weights(&off_diagonal)?;
    symmetrize(&mut nodes, &mut weights);
    for pair in nodes.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::EigenNoConverge { size: k });
        }
    }
    Ok(QuadratureRule { d, nodes, weights })
}

/// Node count needed to expand up to `target_degree` a function with
/// significant content near frequency `omega` (radians across [-1, 1]):
/// K >= max(2 * target_degree, ceil(1.5 * omega)). Gauss rules need about
/// pi nodes per wavelength; the 1.5 factor leaves headroom.
pub fn required_nodes(target_degree: usize, omega: f64) -> usize {
    let for_oscillation = (1.5 * omega).ceil() as usize;
    (2 * target_degree).max(for_oscillation).max(1)
}

/// Eigenvalues and squared first eigenvector components of the symmetric
/// tridiagonal matrix with zero diagonal and the given off-diagonals.
///
/// Implicit-shift QL; since only the first row of the eigenvector matrix is
/// needed, each Givens rotation touches two entries of a single vector and
/// the whole solve is O(K^2).
fn tridiagonal_nodes_weights<F: Real>(off_diagonal: &[F]) -> Result<(Vec<F>, Vec<F>)> {
    let n = off_diagonal.len() + 1;
    let zero = F::zero();
    let one = F::one();
    let two = F::of(2.0);

    let mut d = vec![zero; n];
    let mut e = off_diagonal.to_vec();
    e.push(zero);
    let mut z = vec![zero; n];
    z[0] = one;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= F::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == 50 {
                return Err(Error::EigenNoConverge { size: n });
            }
            iter += 1;

            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(one);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = one;
            let mut c = one;
            let mut p = zero;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == zero {
                    // rotation annihilated early; drop the shift and restart
                    d[i + 1] = d[i + 1] - p;
                    e[m] = zero;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = zero;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("eigenvalues are finite"));
    let nodes: Vec<F> = order.iter().map(|&i| d[i]).collect();
    let weights: Vec<F> = order.iter().map(|&i| z[i] * z[i]).collect();
    Ok((nodes, weights))
}

/// The spectrum is exactly symmetric about 0 (zero diagonal), so pair up
/// mirrored eigenvalues and average away the eigensolver's rounding wobble.
/// The middle node of an odd rule becomes exactly 0.
fn symmetrize<F: Real>(nodes: &mut [F], weights: &mut [F]) {
    let n = nodes.len();
    let half = F::of(0.5);
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = half * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = half * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = F::zero();
    }
}

pub const DEFAULT_ADAPTIVE_BUDGET: usize = 1_000_000;

/// Outcome of a budget-limited adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOutcome<F> {
    pub value: F,
    pub error_estimate: F,
    pub evaluations: usize,
}

/// Integral of f(x) d mu_d(x) over [-1, 1] by adaptive Simpson subdivision
/// with the default evaluation budget. Requires d >= 3 (for d = 2 the
/// density is endpoint-singular; Gauss rules handle that case natively).
pub fn adaptive_integrate<F: Real>(
    d: usize,
    f: impl Fn(F) -> F,
    abs_tol: F,
) -> Result<F> {
    adaptive_integrate_with_budget(d, f, abs_tol, DEFAULT_ADAPTIVE_BUDGET).map(|o| o.value)
}

/// As [`adaptive_integrate`], with an explicit evaluation budget and full
/// diagnostics. Fails with [`Error::BudgetExhausted`] if the budget runs out
/// before the tolerance is met.
pub fn adaptive_integrate_with_budget<F: Real>(
    d: usize,
    f: impl Fn(F) -> F,
    abs_tol: F,
    budget: usize,
) -> Result<AdaptiveOutcome<F>> {
    if d < 3 {
        return Err(Error::Domain(
            "adaptive integration requires d >= 3".into(),
        ));
    }
    if !(abs_tol > F::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let mu = MuD::<F>::new(d)?;
    let g = |x: F| f(x) * mu.density(x).expect("density defined on [-1, 1]");

    // deliberately uneven initial panels so that symmetric oscillations do
    // not alias into a spuriously converged first Simpson estimate
    let breaks: [f64; 9] = [
        -1.0, -0.9514, -0.5411, -0.1234, 0.0789, 0.3333, 0.6218, 0.8765, 1.0,
    ];
    let mut state = AdaptiveState {
        f: &g,
        evals: 0,
        budget,
    };
    let mut value = KahanSum::new();
    let mut err = KahanSum::new();
    for pair in breaks.windows(2) {
        let a = F::of(pair[0]);
        let b = F::of(pair[1]);
        let width_share = F::of((pair[1] - pair[0]) / 2.0);
        let fa = state.eval(a)?;
        let fb = state.eval(b)?;
        let m = (a + b) / F::of(2.0);
        let fm = state.eval(m)?;
        let whole = simpson(a, b, fa, fm, fb);
        let (v, e) = state.refine(a, m, b, fa, fm, fb, whole, abs_tol * width_share, 48)?;
        value.add(v);
        err.add(e);
    }
    Ok(AdaptiveOutcome {
        value: value.value(),
        error_estimate: err.value(),
        evaluations: state.evals,
    })
}

struct AdaptiveState<'a, F> {
    f: &'a dyn Fn(F) -> F,
    evals: usize,
    budget: usize,
}

impl<F: Real> AdaptiveState<'_, F> {
    fn eval(&mut self, x: F) -> Result<F> {
        if self.evals >= self.budget {
            return Err(Error::BudgetExhausted {
                evaluations: self.budget,
                error_estimate: f64::NAN,
            });
        }
        self.evals += 1;
        Ok((self.f)(x))
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: F,
        m: F,
        b: F,
        fa: F,
        fm: F,
        fb: F,
        whole: F,
        tol: F,
        depth: usize,
    ) -> Result<(F, F)> {
        let lm = (a + m) / F::of(2.0);
        let rm = (m + b) / F::of(2.0);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let delta = left + right - whole;
        let fifteen = F::of(15.0);
        if depth == 0 || delta.abs() <= fifteen * tol {
            return Ok((left + right + delta / fifteen, delta.abs() / fifteen));
        }
        let half_tol = tol / F::of(2.0);
        let (lv, le) = self.refine(a, lm, m, fa, flm, fm, left, half_tol, depth - 1)?;
        let (rv, re) = self.refine(m, rm, b, fm, frm, fb, right, half_tol, depth - 1)?;
        Ok((lv + rv, le + re))
    }
}

fn simpson<F: Real>(a: F, b: F, fa: F, fm: F, fb: F) -> F {
    (b - a) / F::of(6.0) * (fa + F::of(4.0) * fm + fb)
}
