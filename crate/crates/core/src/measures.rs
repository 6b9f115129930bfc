//! Non-stoquasticity measures.
//!
//! The basic quantity is `nu_p(H) = D^{-1} || H_+ ||_p`, where `H_+` keeps
//! the positive off-diagonal entries of `H` and the norm is the entrywise
//! vector p-norm. `nu_p(H) = 0` exactly when `H` is stoquastic. Besides the
//! dense definition this module carries:
//!
//! - the closed form for (2+1)-local coefficient Hamiltonians, where edge
//!   and vertex terms decouple;
//! - a Rademacher sampling estimator for the vertex term, for sites whose
//!   XZ degree makes exact enumeration infeasible;
//! - the effective local measure for translation-invariant chains, a
//!   three-site window sum that reproduces the raw dense measure up to the
//!   exact factor `n d^{n-3}`;
//! - a smooth surrogate of the window measure for gradient-based
//!   optimization.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{CoefficientGraph, DenseOperator, TwoSiteTerm};

/// Exact enumeration of a vertex term scans 2^deg sign patterns; past this
/// cap (about 1M terms) the sampling estimator is mandatory.
pub const XZ_EXACT_DEGREE_CAP: usize = 20;

/// Normalization convention for `nu_p`.
///
/// The headline measure divides by the Hilbert-space dimension; the raw sum
/// is what the translation-invariant window identity is stated in. At fixed
/// system size the two differ by the constant factor `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    PerDimension,
    RawSum,
}

/// Which norm order and normalization to apply to the non-stoquastic part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    pub p: f64,
    pub normalization: Normalization,
}

impl MeasureSpec {
    pub fn new(p: f64, normalization: Normalization) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "norm order must satisfy p >= 1, got {p}"
            )));
        }
        Ok(Self { p, normalization })
    }

    /// The headline measure: p = 1, divided by the dimension.
    pub fn l1() -> Self {
        Self {
            p: 1.0,
            normalization: Normalization::PerDimension,
        }
    }

    pub fn l1_raw() -> Self {
        Self {
            p: 1.0,
            normalization: Normalization::RawSum,
        }
    }

    pub fn l2() -> Self {
        Self {
            p: 2.0,
            normalization: Normalization::PerDimension,
        }
    }
}

/// Accuracy contract for the sampling estimator: additive error `epsilon`
/// with failure probability at most `delta`, all randomness from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorBudget {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

impl EstimatorBudget {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0,1), got {delta}"
            )));
        }
        Ok(Self {
            epsilon,
            delta,
            seed,
        })
    }
}

/// The non-stoquastic part `H_+`: positive off-diagonal entries kept, the
/// diagonal and all non-positive entries zeroed.
pub fn nonstoq_part(h: &DenseOperator) -> DenseOperator {
    let m = h.matrix();
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > 0.0 {
                out[(i, j)] = m[(i, j)];
            }
        }
    }
    DenseOperator::new(h.local_dims().to_vec(), out).expect("masking preserves symmetry")
}

/// Dense evaluation of `nu_p`.
pub fn nu_p_dense(h: &DenseOperator, spec: &MeasureSpec) -> f64 {
    let m = h.matrix();
    let n = m.nrows();
    let mut sum = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > 0.0 {
                sum += m[(i, j)].powf(spec.p);
            }
        }
    }
    let norm = sum.powf(1.0 / spec.p);
    match spec.normalization {
        Normalization::PerDimension => norm / n as f64,
        Normalization::RawSum => norm,
    }
}

/// Exact vertex contribution `2^{-k} sum_pattern max{alpha + sum ± x, 0}`.
///
/// The empty neighbourhood has exactly one (empty) sign pattern, so a bare
/// field contributes `max{alpha, 0}`.
pub fn xz_vertex_exact(alpha: f64, xs: &[f64]) -> f64 {
    let k = xs.len();
    assert!(k <= XZ_EXACT_DEGREE_CAP, "vertex degree {k} above exact cap");
    let patterns = 1u64 << k;
    let mut total = 0.0;
    for pat in 0..patterns {
        let mut v = alpha;
        for (j, &x) in xs.iter().enumerate() {
            if pat >> j & 1 == 0 {
                v += x;
            } else {
                v -= x;
            }
        }
        total += v.max(0.0);
    }
    total / patterns as f64
}

/// Closed-form `nu_1` of a (2+1)-local coefficient Hamiltonian:
///
///   sum_{i<j} (max{a+b, 0} + max{a-b, 0}) / 2
///   + sum_i 2^{-deg_XZ(i)} sum_patterns max{alpha_i + sum (-1)^lambda x, 0}.
///
/// Exactly equal to `nu_p_dense(build_coefficient_hamiltonian(g), p=1)`.
/// Fails when a vertex exceeds [`XZ_EXACT_DEGREE_CAP`]; callers that accept
/// a sampling error should use [`nu1_closed_form_with_fallback`].
pub fn nu1_closed_form(g: &CoefficientGraph) -> Result<f64> {
    for i in 0..g.n_qubits() {
        let deg = g.deg_xz(i);
        if deg > XZ_EXACT_DEGREE_CAP {
            return Err(Error::DegreeCapExceeded {
                deg,
                cap: XZ_EXACT_DEGREE_CAP,
            });
        }
    }
    Ok(nu1_closed_form_inner(g, None).0)
}

/// Closed-form `nu_1`, sampling vertices whose degree exceeds the exact cap.
/// Returns the estimate and the total number of Monte Carlo samples spent.
pub fn nu1_closed_form_with_fallback(g: &CoefficientGraph, budget: &EstimatorBudget) -> (f64, u64) {
    nu1_closed_form_inner(g, Some(budget))
}

fn nu1_closed_form_inner(g: &CoefficientGraph, budget: Option<&EstimatorBudget>) -> (f64, u64) {
    let mut total = 0.0;
    let mut samples = 0u64;
    let mut pairs: std::collections::BTreeSet<(usize, usize)> = g.xx().keys().copied().collect();
    pairs.extend(g.yy().keys().copied());
    for (i, j) in pairs {
        let a = g.xx().get(&(i, j)).copied().unwrap_or(0.0);
        let b = g.yy().get(&(i, j)).copied().unwrap_or(0.0);
        total += 0.5 * ((a + b).max(0.0) + (a - b).max(0.0));
    }
    for i in 0..g.n_qubits() {
        let alpha = g.alpha(i);
        let xs: Vec<f64> = g.xz_neighbours(i).into_iter().map(|(_, w)| w).collect();
        if xs.is_empty() && alpha <= 0.0 {
            continue;
        }
        if xs.len() <= XZ_EXACT_DEGREE_CAP {
            total += xz_vertex_exact(alpha, &xs);
        } else {
            let budget = budget.expect("degree above cap requires a sampling budget");
            let per_site = EstimatorBudget {
                seed: budget.seed.wrapping_add(i as u64),
                ..*budget
            };
            let (est, n) = nu1_xz_vertex_sampled(alpha, &xs, &per_site);
            total += est;
            samples += n;
        }
    }
    (total, samples)
}

/// Number of Rademacher samples needed for additive error `epsilon` with
/// failure probability `delta` on a vertex of degree `k` and largest weight
/// `max_x`: `ceil(16 k max_x^2 log(2/delta) / epsilon^2)`.
pub fn rademacher_sample_count(k: usize, max_x: f64, budget: &EstimatorBudget) -> u64 {
    let m = 16.0 * k as f64 * max_x * max_x * (2.0 / budget.delta).ln()
        / (budget.epsilon * budget.epsilon);
    m.ceil() as u64
}

/// Monte Carlo estimate of a vertex contribution: the empirical mean of
/// `f(sigma) = max{alpha + sum_j sigma_j x_j, 0}` over i.i.d. uniform ±1
/// vectors. Returns (estimate, sample count); the estimate is within
/// `epsilon` of the exact value with probability at least `1 - delta`.
pub fn nu1_xz_vertex_sampled(alpha: f64, xs: &[f64], budget: &EstimatorBudget) -> (f64, u64) {
    assert!(!xs.is_empty(), "sampled estimator needs a nonempty x list");
    let k = xs.len();
    let max_x = xs.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let count = rademacher_sample_count(k, max_x, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut sum = 0.0f64;
    for _ in 0..count {
        let mut v = alpha;
        for &x in xs {
            if rng.random::<bool>() {
                v += x;
            } else {
                v -= x;
            }
        }
        sum += v.max(0.0);
    }
    (sum / count as f64, count)
}

/// Visit every entry of the three-site window of `h ⊗ 1 + 1 ⊗ h` that the
/// effective measure sums over: bra (i1, i2, i3), ket (j1, j2, i3) with
/// i2 != j2 and the third index shared.
///
/// The first term contributes whenever the third index agrees (always here);
/// the second only on i1 == j1.
pub(crate) fn for_each_window_entry(
    h: &DMatrix<f64>,
    d: usize,
    mut f: impl FnMut(usize, usize, usize, usize, usize, f64),
) {
    for i1 in 0..d {
        for i2 in 0..d {
            for j1 in 0..d {
                for j2 in 0..d {
                    if i2 == j2 {
                        continue;
                    }
                    let left = h[(i1 * d + i2, j1 * d + j2)];
                    for i3 in 0..d {
                        let mut entry = left;
                        if i1 == j1 {
                            entry += h[(i2 * d + i3, j2 * d + i3)];
                        }
                        f(i1, i2, i3, j1, j2, entry);
                    }
                }
            }
        }
    }
}

/// Effective local non-stoquasticity of a translation-invariant chain term:
/// the positive part of `h ⊗ 1 + 1 ⊗ h` summed over the three-site window.
///
/// For the closed chain on n sites of dimension d the raw dense measure
/// satisfies `||H_+||_1 = n d^{n-3} * effective_local_nu1(h)`.
pub fn effective_local_nu1(term: &TwoSiteTerm) -> f64 {
    let mut total = 0.0;
    for_each_window_entry(term.matrix(), term.local_dim(), |_, _, _, _, _, e| {
        if e > 0.0 {
            total += e;
        }
    });
    total
}

/// Effective squared-l2 window measure, the numerically tame pre-optimization
/// objective: sum of `max{entry, 0}^2` over the window.
pub fn effective_local_nu2_sq(term: &TwoSiteTerm) -> f64 {
    let mut total = 0.0;
    for_each_window_entry(term.matrix(), term.local_dim(), |_, _, _, _, _, e| {
        if e > 0.0 {
            total += e * e;
        }
    });
    total
}

/// Smooth ramp `f_alpha(x) = x + log(1 + exp(-alpha x)) / alpha`, the
/// softplus approximation of `max{x, 0}` from above.
///
/// Branches at |alpha x| = 30: beyond it the correction term is below f64
/// resolution and the exact asymptote avoids overflow.
pub fn f_alpha(x: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    let z = alpha * x;
    if z > 30.0 {
        x
    } else if z < -30.0 {
        0.0
    } else {
        x + (-z).exp().ln_1p() / alpha
    }
}

/// Derivative of [`f_alpha`]: the logistic `1 / (1 + exp(-alpha x))`.
pub fn f_alpha_prime(x: f64, alpha: f64) -> f64 {
    let z = alpha * x;
    if z > 30.0 {
        1.0
    } else if z < -30.0 {
        0.0
    } else {
        1.0 / (1.0 + (-z).exp())
    }
}

/// Smooth surrogate of the effective window measure: `f_alpha` summed over
/// the same index set as [`effective_local_nu1`].
pub fn smooth_effective_nu1(term: &TwoSiteTerm, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothing parameter must be positive, got {alpha}"
        )));
    }
    let mut total = 0.0;
    for_each_window_entry(term.matrix(), term.local_dim(), |_, _, _, _, _, e| {
        total += f_alpha(e, alpha);
    });
    Ok(total)
}

/// Number of entries the window measure sums over: d^3 (d-1) d.
pub fn window_entry_count(d: usize) -> usize {
    d * d * d * (d - 1) * d
}

/// Check the vertex lower bound
/// `sum_pattern max{sum (-1)^lambda x, 0} >= max|x| 2^{k-1}` by enumeration.
/// Always true; exposed as a property-test helper.
pub fn xz_lower_bound_check(xs: &[f64]) -> bool {
    let k = xs.len();
    assert!(k >= 1 && k <= XZ_EXACT_DEGREE_CAP);
    let lhs = xz_vertex_exact(0.0, xs) * (1u64 << k) as f64;
    let max_x = xs.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let rhs = max_x * (1u64 << (k - 1)) as f64;
    lhs >= rhs - 1e-12 * rhs.abs()
}

/// Check the p-norm generalization of the vertex bound,
/// `sum_pattern max{sum (-1)^lambda x, 0}^p >= 2^{p(k-deg)} sum |x_j|^p`,
/// for any `deg >= k`.
pub fn lp_vertex_bound_holds(xs: &[f64], p: f64, deg: usize) -> bool {
    let k = xs.len();
    assert!(k >= 1 && k <= XZ_EXACT_DEGREE_CAP && deg >= k && p >= 1.0);
    let patterns = 1u64 << k;
    let mut lhs = 0.0;
    for pat in 0..patterns {
        let mut v = 0.0;
        for (j, &x) in xs.iter().enumerate() {
            if pat >> j & 1 == 0 {
                v += x;
            } else {
                v -= x;
            }
        }
        if v > 0.0 {
            lhs += v.powf(p);
        }
    }
    let rhs =
        2f64.powf(p * (k as f64 - deg as f64)) * xs.iter().map(|x| x.abs().powf(p)).sum::<f64>();
    lhs >= rhs - 1e-12 * rhs.abs()
}
