//! Exact world-line QMC quantities, evaluated by eigendecomposition instead
//! of sampling.
//!
//! The partition function at inverse temperature `beta` with `m` Monte Carlo
//! steps is `tr[T^m]` for the transfer matrix `T = 1 - beta H / m`; the
//! average sign is `tr[T^m] / tr[|T|^m]` with `|.|` taken entrywise (never
//! the operator absolute value). Everything here works on the dense
//! representation, which is exactly how the reference results this crate
//! checks against were produced.

use crate::error::{Error, Result};
use crate::hamiltonian::{conjugate_dense, DenseOperator, OrthogonalPoint};
use crate::linalg::{entrywise_abs, matrix_power_sym, trace_power_sym};
use crate::measures::{nu_p_dense, MeasureSpec};
use crate::models::alpha_family;

/// Monte Carlo discretization parameters.
///
/// For positivity statements about stoquastic paths to hold, `m` must be
/// large enough that `diag(beta H / m) <= 1`; that condition is checked and
/// surfaced as a flag on results, never silently assumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcParams {
    pub beta: f64,
    pub m: u32,
}

impl QmcParams {
    pub fn new(beta: f64, m: u32) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inverse temperature must be non-negative, got {beta}"
            )));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        Ok(Self { beta, m })
    }

    /// Default experiment parameters used throughout the phase-diagram runs.
    pub fn default_experiment() -> Self {
        Self { beta: 1.0, m: 100 }
    }

    /// True when all diagonal entries of `beta H / m` are at most 1.
    pub fn diag_condition_ok(&self, h: &DenseOperator) -> bool {
        let scale = self.beta / f64::from(self.m);
        h.matrix().diagonal().iter().all(|&v| v * scale <= 1.0)
    }
}

/// The transfer matrix `T = 1 - (beta/m) H`.
pub fn transfer_matrix(h: &DenseOperator, params: &QmcParams) -> DenseOperator {
    let scale = params.beta / f64::from(params.m);
    let n = h.dim();
    let mut t = h.matrix() * (-scale);
    for i in 0..n {
        t[(i, i)] += 1.0;
    }
    DenseOperator::new(h.local_dims().to_vec(), t).expect("affine image of symmetric is symmetric")
}

/// Average sign together with its ingredients and the diagonal-condition
/// flag.
#[derive(Debug, Clone, Copy)]
pub struct SignResult {
    pub average_sign: f64,
    pub tr_t_m: f64,
    pub tr_abs_t_m: f64,
    /// Whether `diag(beta H / m) <= 1` held; when false, stoquasticity of H
    /// no longer guarantees positive paths and a unit sign.
    pub diag_condition_ok: bool,
}

impl SignResult {
    /// Relative-variance proxy `<sign>^{-2} - 1`; infinite at zero sign.
    pub fn sample_complexity_proxy(&self) -> f64 {
        let s2 = self.average_sign * self.average_sign;
        if s2 == 0.0 {
            f64::INFINITY
        } else {
            (1.0 / s2 - 1.0).max(0.0)
        }
    }
}

/// Average sign `tr[T^m] / tr[|T|^m]`, both traces via symmetric
/// eigendecompositions. Fails on a degenerate denominator rather than
/// dividing by roundoff.
pub fn average_sign(h: &DenseOperator, params: &QmcParams) -> Result<SignResult> {
    let t = transfer_matrix(h, params);
    let tr_t_m = trace_power_sym(t.matrix(), params.m);
    let abs_t = entrywise_abs(t.matrix());
    let tr_abs_t_m = trace_power_sym(&abs_t, params.m);
    // |T| has non-negative entries, so tr |T|^m dominates |tr T^m|; a
    // denominator at roundoff scale means the ratio carries no information.
    let floor = f64::EPSILON * h.dim() as f64;
    if tr_abs_t_m.abs() <= floor {
        return Err(Error::DegenerateDenominator(tr_abs_t_m));
    }
    Ok(SignResult {
        average_sign: tr_t_m / tr_abs_t_m,
        tr_t_m,
        tr_abs_t_m,
        diag_condition_ok: params.diag_condition_ok(h),
    })
}

/// Relative-error proxy `<sign>^{-2} - 1` for the QMC estimator variance.
pub fn sample_complexity_proxy(h: &DenseOperator, params: &QmcParams) -> Result<f64> {
    Ok(average_sign(h, params)?.sample_complexity_proxy())
}

/// The negative-path decomposition of the sign problem in a given basis.
#[derive(Debug, Clone, Copy)]
pub struct NegativePathGap {
    /// `S = tr[|T|^m] - tr[T^m] >= 0`; zero exactly when the basis is
    /// sign-problem free for these parameters.
    pub s_value: f64,
    /// Contribution of paths with exactly one negative step:
    /// `2 m sum Delta_-(l1|l2) Delta_+^{m-1}(l2|l1)`.
    pub first_order: f64,
}

/// Evaluate `S` and its one-negative-step term, optionally after an on-site
/// basis change by `o`.
pub fn negative_path_gap(
    h: &DenseOperator,
    params: &QmcParams,
    o: Option<&OrthogonalPoint>,
) -> Result<NegativePathGap> {
    let h_rot = match o {
        Some(o) => conjugate_dense(h, o)?,
        None => h.clone(),
    };
    let t = transfer_matrix(&h_rot, params);
    let abs_t = entrywise_abs(t.matrix());
    let s_value = trace_power_sym(&abs_t, params.m) - trace_power_sym(t.matrix(), params.m);
    // Delta_+- = (|T| +- T)/2; the one-step weight needs one matrix power.
    let delta_plus = (&abs_t + t.matrix()) * 0.5;
    let delta_minus = (&abs_t - t.matrix()) * 0.5;
    let first_order = if params.m >= 2 {
        let pow = matrix_power_sym(&delta_plus, params.m - 1);
        let weighted: f64 = delta_minus
            .iter()
            .zip(pow.transpose().iter())
            .map(|(a, b)| a * b)
            .sum();
        2.0 * f64::from(params.m) * weighted
    } else {
        // m = 1: a single step is its own path.
        2.0 * delta_minus.sum()
    };
    Ok(NegativePathGap {
        s_value,
        first_order,
    })
}

/// One row of the sign-versus-non-stoquasticity study.
#[derive(Debug, Clone, Copy)]
pub struct StudyRow {
    pub alpha: f64,
    pub nu1: f64,
    pub inverse_sign: f64,
}

/// Sweep the interpolation family `H_alpha` of a base Hamiltonian and record
/// `(alpha, nu_1(H_alpha), <sign>^{-1})` per grid point.
///
/// Deterministic: same base and grid give the identical table.
pub fn sign_vs_nonstoq_study(
    h_base: &DenseOperator,
    alpha_grid: &[f64],
    params: &QmcParams,
) -> Result<Vec<StudyRow>> {
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let h_alpha = alpha_family(h_base, alpha)?;
        let sign = average_sign(&h_alpha, params)?;
        rows.push(StudyRow {
            alpha,
            nu1: nu_p_dense(&h_alpha, &MeasureSpec::l1()),
            inverse_sign: 1.0 / sign.average_sign,
        });
    }
    Ok(rows)
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{add_xx, add_zz, build_chain, ChainSpec, TwoSiteTerm};
    use nalgebra::DMatrix;
    use crate::linalg::max_abs;
    use crate::models::{example_fine_tuned, example_sign_free, random_gaussian_term};

    #[test]
    fn transfer_matrix_of_zero_is_identity() {
        let h = DenseOperator::from_matrix(DMatrix::zeros(4, 4)).unwrap();
        let params = QmcParams::new(1.3, 7).unwrap();
        let t = transfer_matrix(&h, &params);
        assert_eq!(t.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn transfer_matrix_at_beta_zero_is_identity() {
        let h = example_sign_free(2).unwrap();
        let t = transfer_matrix(&h, &QmcParams::new(0.0, 5).unwrap());
        assert_eq!(t.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn fine_tuned_transfer_matrix_is_the_reference_4x4() {
        // beta = 1, m = 4: every scale factor is a power of two, so the
        // round trip through H and back is bit exact.
        let (a, b, beta, m) = (0.3, 0.7, 1.0, 4);
        let h = example_fine_tuned(a, b, beta, m).unwrap();
        let t = transfer_matrix(&h, &QmcParams::new(beta, m).unwrap());
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, -b, 0.0, //
                1.0, 0.0, 1.0, a, //
                -b, 1.0, 0.0, 1.0, //
                0.0, a, 1.0, 0.0,
            ],
        );
        assert_eq!(t.matrix(), &expected);
    }

    #[test]
    fn stoquastic_chain_has_unit_sign() {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        add_xx(&mut m, 2, 0, 1, -1.0);
        add_zz(&mut m, 2, 0, 1, 0.5);
        let h = build_chain(&ChainSpec::new(4, TwoSiteTerm::new(2, m).unwrap()).unwrap()).unwrap();
        let params = QmcParams::new(1.0, 20).unwrap();
        let s = average_sign(&h, &params).unwrap();
        assert!(s.diag_condition_ok);
        assert!((s.average_sign - 1.0).abs() < 1e-12);
        assert!(sample_complexity_proxy(&h, &params).unwrap().abs() < 1e-10);
    }

    #[test]
    fn sign_free_example_has_unit_sign() {
        for m in [4u32, 7, 12] {
            let h = example_sign_free(3).unwrap();
            let s = average_sign(&h, &QmcParams::new(1.0, m).unwrap()).unwrap();
            assert!(
                (s.average_sign - 1.0).abs() < 1e-10,
                "m={m}: sign={}",
                s.average_sign
            );
        }
    }

    #[test]
    fn fine_tuned_sign_vanishes_at_equal_couplings() {
        let (beta, m) = (1.0, 5);
        let h = example_fine_tuned(0.3, 0.3, beta, m).unwrap();
        let s = average_sign(&h, &QmcParams::new(beta, m).unwrap()).unwrap();
        assert!(s.average_sign.abs() < 1e-12, "sign={}", s.average_sign);
    }

    #[test]
    fn proxy_is_infinite_at_exactly_zero_sign() {
        let r = SignResult {
            average_sign: 0.0,
            tr_t_m: 0.0,
            tr_abs_t_m: 2.0,
            diag_condition_ok: true,
        };
        assert!(r.sample_complexity_proxy().is_infinite());
    }

    #[test]
    fn fine_tuned_sign_bound_holds() {
        let (beta, m) = (1.0, 5u32);
        for &(a, b) in &[(0.2, 0.25), (0.2, 0.4), (0.5, 0.8)] {
            let h = example_fine_tuned(a, b, beta, m).unwrap();
            let s = average_sign(&h, &QmcParams::new(beta, m).unwrap()).unwrap();
            let bound = (2f64.powi(m as i32 - 1) - 0.5) * (b - a) / a;
            assert!(
                s.average_sign.abs() <= bound + 1e-12,
                "a={a}, b={b}: |sign|={} > {bound}",
                s.average_sign.abs()
            );
        }
    }

    #[test]
    fn proxy_arithmetic() {
        let r = SignResult {
            average_sign: 0.5,
            tr_t_m: 1.0,
            tr_abs_t_m: 2.0,
            diag_condition_ok: true,
        };
        assert!((r.sample_complexity_proxy() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn trace_invariant_under_onsite_conjugation() {
        use crate::linalg::haar_orthogonal_from_rng;
        use rand::SeedableRng;
        let term = random_gaussian_term(2, 21);
        let h = build_chain(&ChainSpec::new(4, term).unwrap()).unwrap();
        let params = QmcParams::new(1.0, 6).unwrap();
        let t0 = trace_power_sym(transfer_matrix(&h, &params).matrix(), params.m);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let o = OrthogonalPoint::new(haar_orthogonal_from_rng(2, &mut rng)).unwrap();
        let h_rot = conjugate_dense(&h, &o).unwrap();
        let t1 = trace_power_sym(transfer_matrix(&h_rot, &params).matrix(), params.m);
        assert!((t0 - t1).abs() <= 1e-9 * t0.abs().max(1.0));
    }

    #[test]
    fn negative_path_gap_zero_for_stoquastic() {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        add_xx(&mut m, 2, 0, 1, -0.8);
        let h = build_chain(&ChainSpec::new(3, TwoSiteTerm::new(2, m).unwrap()).unwrap()).unwrap();
        let gap = negative_path_gap(&h, &QmcParams::new(1.0, 9).unwrap(), None).unwrap();
        assert!(gap.s_value.abs() < 1e-10);
        assert!(gap.first_order.abs() < 1e-12);
    }

    #[test]
    fn gap_consistent_with_average_sign() {
        let term = random_gaussian_term(2, 33);
        let h = build_chain(&ChainSpec::new(4, term).unwrap()).unwrap();
        let params = QmcParams::new(0.7, 8).unwrap();
        let gap = negative_path_gap(&h, &params, None).unwrap();
        let s = average_sign(&h, &params).unwrap();
        // S = tr|T|^m (1 - <sign>).
        let predicted = s.tr_abs_t_m * (1.0 - s.average_sign);
        assert!((gap.s_value - predicted).abs() <= 1e-9 * predicted.abs().max(1.0));
        assert!(gap.s_value >= -1e-10);
    }

    /// Brute force over the 2^m sign patterns of the path decomposition.
    #[test]
    fn gap_matches_sign_pattern_enumeration_m3() {
        let term = random_gaussian_term(2, 55);
        let h = build_chain(&ChainSpec::new(3, term).unwrap()).unwrap();
        let params = QmcParams::new(0.9, 3).unwrap();
        let t = transfer_matrix(&h, &params);
        let abs_t = entrywise_abs(t.matrix());
        let dp = (&abs_t + t.matrix()) * 0.5;
        let dm = (&abs_t - t.matrix()) * 0.5;
        let mut s_enum = 0.0;
        for pattern in 0..8u32 {
            if pattern.count_ones() % 2 == 0 {
                continue;
            }
            let pick = |bit: u32| if pattern >> bit & 1 == 1 { &dm } else { &dp };
            s_enum += 2.0 * (pick(0) * pick(1) * pick(2)).trace();
        }
        let gap = negative_path_gap(&h, &params, None).unwrap();
        assert!(
            (gap.s_value - s_enum).abs() <= 1e-9 * s_enum.abs().max(1.0),
            "S={}, enumeration={s_enum}",
            gap.s_value
        );
    }

    #[test]
    fn study_row_at_alpha_zero_has_unit_inverse_sign() {
        let term = random_gaussian_term(2, 8);
        let h = build_chain(&ChainSpec::new(5, term).unwrap()).unwrap();
        let rows = sign_vs_nonstoq_study(
            &h,
            &[0.0, 1.0, 2.0],
            &QmcParams::default_experiment(),
        )
        .unwrap();
        assert!((rows[0].inverse_sign - 1.0).abs() < 1e-10);
        assert!(rows[0].nu1.abs() < 1e-15);
        // Determinism: rerun gives the identical table.
        let rows2 = sign_vs_nonstoq_study(
            &h,
            &[0.0, 1.0, 2.0],
            &QmcParams::default_experiment(),
        )
        .unwrap();
        for (a, b) in rows.iter().zip(&rows2) {
            assert_eq!(a.nu1, b.nu1);
            assert_eq!(a.inverse_sign, b.inverse_sign);
        }
    }

    #[test]
    fn spearman_handles_monotone_and_ties() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman_rho(&xs, &[2.0, 4.0, 9.0, 100.0]) - 1.0).abs() < 1e-12);
        assert!((spearman_rho(&xs, &[5.0, 4.0, 3.0, 1.0]) + 1.0).abs() < 1e-12);
        let with_ties = [1.0, 1.0, 2.0, 3.0];
        let rho = spearman_rho(&xs, &with_ties);
        assert!(rho > 0.9 && rho <= 1.0);
    }

    #[test]
    fn dense_operator_survives_roundtrip_through_transfer() {
        let h = example_sign_free(2).unwrap();
        let params = QmcParams::new(2.0, 8).unwrap();
        let t = transfer_matrix(&h, &params);
        // H = (m / beta)(1 - T).
        let back = (DMatrix::identity(4, 4) - t.matrix()) * (f64::from(params.m) / params.beta);
        assert!(max_abs(&(back - h.matrix())) < 1e-12);
    }
}
