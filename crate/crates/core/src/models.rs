//! The model zoo: Heisenberg ladders in a dimer basis, the two case-study
//! Hamiltonians, random instances with a known stoquastic on-site basis and
//! the interpolation family used by the sign-vs-measure study.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    add_identity, add_pauli_x, add_xx, add_yy, add_zz, conjugate_term, ChainSpec, DenseOperator,
    OrthogonalPoint, TwoSiteTerm,
};
use crate::linalg::haar_orthogonal_from_rng;
use crate::measures::nonstoq_part;
use crate::DENSE_QUBIT_LIMIT;

/// Ladder geometry selector.
///
/// Both models are quasi one-dimensional Heisenberg antiferromagnets with
/// all couplings required non-negative. `S_i . S_j` below is the full Pauli
/// dot product `X_i X_j + Y_i Y_j + Z_i Z_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderModel {
    /// Triangular ladder: leg couplings `j0` (lower) and `j1` (upper), rung
    /// coupling `j2`, and the single diagonal `j3` between the lower spin of
    /// rung i+1 and the upper spin of rung i.
    J0J1J2J3 { j0: f64, j1: f64, j2: f64, j3: f64 },
    /// Square ladder with cross coupling: legs `j_par`, rungs `j_perp`, both
    /// diagonals `j_cross`.
    FrustratedLadder {
        j_par: f64,
        j_perp: f64,
        j_cross: f64,
    },
}

impl LadderModel {
    fn couplings(&self) -> Vec<f64> {
        match *self {
            LadderModel::J0J1J2J3 { j0, j1, j2, j3 } => vec![j0, j1, j2, j3],
            LadderModel::FrustratedLadder {
                j_par,
                j_perp,
                j_cross,
            } => vec![j_par, j_perp, j_cross],
        }
    }
}

/// A ladder model together with its length in rungs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderParams {
    pub model: LadderModel,
    pub n_rungs: usize,
}

/// Heisenberg bond X_a X_b + Y_a Y_b + Z_a Z_b between two qubits of a
/// 4-qubit window, added with weight `w`.
fn add_heisenberg_bond(m: &mut DMatrix<f64>, a: usize, b: usize, w: f64) {
    add_xx(m, 4, a, b, w);
    add_yy(m, 4, a, b, w);
    add_zz(m, 4, a, b, w);
}

/// Encode a ladder as a translation-invariant chain of dimers.
///
/// Each rung becomes one site of local dimension 4, ordered lower ⊗ upper.
/// Within the two-dimer window the qubits are (0: left-lower, 1: left-upper,
/// 2: right-lower, 3: right-upper). Rung-internal couplings are attributed
/// half to each of the two translated copies that cover the rung, so the
/// closed chain reproduces the spin Hamiltonian without double counting.
pub fn build_ladder(params: &LadderParams) -> Result<ChainSpec> {
    for c in params.model.couplings() {
        if c < 0.0 {
            return Err(Error::NegativeCoupling(c));
        }
    }
    let mut h = DMatrix::<f64>::zeros(16, 16);
    match params.model {
        LadderModel::J0J1J2J3 { j0, j1, j2, j3 } => {
            add_heisenberg_bond(&mut h, 0, 2, j0); // lower leg
            add_heisenberg_bond(&mut h, 1, 3, j1); // upper leg
            add_heisenberg_bond(&mut h, 0, 1, 0.5 * j2); // rung, split
            add_heisenberg_bond(&mut h, 2, 3, 0.5 * j2);
            add_heisenberg_bond(&mut h, 1, 2, j3); // diagonal S^1_{i+1} S^2_i
        }
        LadderModel::FrustratedLadder {
            j_par,
            j_perp,
            j_cross,
        } => {
            add_heisenberg_bond(&mut h, 0, 2, j_par);
            add_heisenberg_bond(&mut h, 1, 3, j_par);
            add_heisenberg_bond(&mut h, 0, 1, 0.5 * j_perp);
            add_heisenberg_bond(&mut h, 2, 3, 0.5 * j_perp);
            add_heisenberg_bond(&mut h, 0, 3, j_cross);
            add_heisenberg_bond(&mut h, 1, 2, j_cross);
        }
    }
    ChainSpec::new(params.n_rungs, TwoSiteTerm::new(4, h)?)
}

/// Highly non-stoquastic yet sign-problem-free family:
///
///   H = 1 + sum_{i<j} [-(X_i X_j - Y_i Y_j)/2] + sum_i X_i .
///
/// The X fields put `+1` at every odd-parity transition, so `nu_1(H) = n`,
/// while every closed Monte Carlo path crosses an even number of them and
/// the average sign stays at exactly 1 for all (beta, m).
pub fn example_sign_free(n: usize) -> Result<DenseOperator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "sign-free example needs n >= 2, got {n}"
        )));
    }
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::DenseLimitExceeded(n, DENSE_QUBIT_LIMIT));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    add_identity(&mut m, 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            add_xx(&mut m, n, i, j, -0.5);
            add_yy(&mut m, n, i, j, 0.5);
        }
        add_pauli_x(&mut m, n, i, 1.0);
    }
    DenseOperator::new(vec![2; n], m)
}

/// Barely non-stoquastic two-qubit family with a fine-tuned sign problem:
///
///   H_{a,b} = (m/beta) [ 1⊗1 - 1⊗X - (X⊗X + Y⊗Y)/2
///                        + ((a+b) X⊗Z + (b-a) X⊗1)/2 ] ,
///
/// with `b >= a > 0`. Its transfer matrix at the same `(beta, m)` is the
/// 4x4 matrix with rows (0,1,-b,0), (1,0,1,a), (-b,1,0,1), (0,a,1,0); for
/// odd m the average sign obeys |<sign>| <= (2^{m-1} - 1/2) |b-a| / a and
/// vanishes identically at a = b.
pub fn example_fine_tuned(a: f64, b: f64, beta: f64, m: u32) -> Result<DenseOperator> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fine-tuned example needs a > 0, got {a}"
        )));
    }
    if b < a {
        return Err(Error::InvalidParameter(format!(
            "fine-tuned example needs b >= a, got a={a}, b={b}"
        )));
    }
    if !(beta > 0.0) || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "fine-tuned example needs beta > 0 and m >= 1, got beta={beta}, m={m}"
        )));
    }
    let scale = f64::from(m) / beta;
    let mut h = DMatrix::<f64>::zeros(4, 4);
    add_identity(&mut h, 1.0);
    add_pauli_x(&mut h, 2, 1, -1.0);
    add_xx(&mut h, 2, 0, 1, -0.5);
    add_yy(&mut h, 2, 0, 1, -0.5);
    // The two field terms ((a+b) X⊗Z + (b-a) X⊗1)/2 overlap entrywise and
    // combine to exactly b or -a depending on the second qubit; evaluating
    // the combination directly keeps the matrix entries exact in a and b.
    for c in 0..4usize {
        let v = if c & 1 == 0 { b } else { -a };
        h[(c ^ 2, c)] += v;
    }
    DenseOperator::new(vec![2, 2], h * scale)
}

/// Draw a random symmetric two-site term: i.i.d. standard Gaussian entries
/// projected onto symmetric matrices.
pub fn random_gaussian_term(d: usize, seed: u64) -> TwoSiteTerm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d2 = d * d;
    let g = DMatrix::<f64>::from_fn(d2, d2, |_, _| rng.sample(StandardNormal));
    let h = (&g + g.transpose()) * 0.5;
    TwoSiteTerm::new(d, h).expect("symmetrized Gaussian is symmetric")
}

/// A random closed chain with a genuine sign problem: Gaussian symmetric
/// terms are drawn (deterministically in `seed`) until the assembled chain
/// has a nonzero non-stoquastic part. About 1.5% of raw draws at d = 2 come
/// out all-negative off-diagonal and would make the interpolation family
/// undefined; those are skipped.
pub fn random_nonstoquastic_chain(
    n_sites: usize,
    d: usize,
    seed: u64,
) -> Result<(TwoSiteTerm, DenseOperator)> {
    for attempt in 0..64u64 {
        let sub_seed = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let term = random_gaussian_term(d, sub_seed);
        let chain = crate::hamiltonian::build_chain(&ChainSpec::new(n_sites, term.clone())?)?;
        let has_positive = {
            let m = chain.matrix();
            let n = m.nrows();
            (0..n).any(|i| (0..n).any(|j| i != j && m[(i, j)] > 0.0))
        };
        if has_positive {
            return Ok((term, chain));
        }
    }
    Err(Error::InvalidParameter(
        "could not draw a non-stoquastic chain in 64 attempts".into(),
    ))
}

/// A random two-site term that is guaranteed to admit an on-site stoquastic
/// basis, together with the scrambling transformation that hides it.
///
/// The base term has i.i.d. uniform[-1,1] eigenvalues in a Haar-random
/// O(d^2) basis, with its non-stoquastic part removed; the returned term is
/// the base conjugated by `O_true ⊗ O_true` for Haar-random `O_true` in
/// O(d). Conjugating back by the transpose of `O_true` recovers a term with
/// vanishing effective non-stoquasticity.
pub fn random_stoquastic_instance(d: usize, seed: u64) -> (TwoSiteTerm, OrthogonalPoint) {
    assert!(d >= 2, "local dimension must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d2 = d * d;
    let spectrum =
        DMatrix::<f64>::from_fn(d2, 1, |_, _| rng.random_range(-1.0..=1.0)).column(0).into_owned();
    let basis = haar_orthogonal_from_rng(d2, &mut rng);
    let h0 = &basis * DMatrix::from_diagonal(&spectrum) * basis.transpose();
    let h0 = (&h0 + h0.transpose()) * 0.5;
    let base = &h0 - nonstoq_part_matrix(&h0);
    let base_term = TwoSiteTerm::new(d, base).expect("stoquastic projection keeps symmetry");
    let o_true = OrthogonalPoint::new(haar_orthogonal_from_rng(d, &mut rng))
        .expect("QR sampling returns an orthogonal matrix");
    let scrambled = conjugate_term(&base_term, &o_true).expect("dimensions match by construction");
    (scrambled, o_true)
}

fn nonstoq_part_matrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    let op = DenseOperator::from_matrix(m.clone()).expect("symmetric input");
    nonstoq_part(&op).into_matrix()
}

/// The one-parameter interpolation `H_alpha = (H - H_+ + alpha H_+) / (D nu_1(H_+))`
/// between the stoquastic part (alpha = 0) and a rescaled original.
///
/// By construction `nu_1(H_alpha) = alpha / D`. Fails on stoquastic input,
/// where the normalization vanishes.
pub fn alpha_family(h: &DenseOperator, alpha: f64) -> Result<DenseOperator> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let plus = nonstoq_part(h);
    let raw_l1: f64 = plus.matrix().iter().map(|v| v.abs()).sum();
    if raw_l1 == 0.0 {
        return Err(Error::StoquasticInput);
    }
    let m = (h.matrix() - plus.matrix() + plus.matrix() * alpha) / raw_l1;
    DenseOperator::new(h.local_dims().to_vec(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_chain;
    use crate::linalg::max_abs;
    use crate::measures::{effective_local_nu1, nu_p_dense, MeasureSpec};

    #[test]
    fn frustrated_ladder_all_zero_is_zero_term() {
        let spec = build_ladder(&LadderParams {
            model: LadderModel::FrustratedLadder {
                j_par: 0.0,
                j_perp: 0.0,
                j_cross: 0.0,
            },
            n_rungs: 4,
        })
        .unwrap();
        assert_eq!(max_abs(spec.term().matrix()), 0.0);
    }

    #[test]
    fn negative_coupling_rejected() {
        let r = build_ladder(&LadderParams {
            model: LadderModel::FrustratedLadder {
                j_par: 1.0,
                j_perp: -0.1,
                j_cross: 0.0,
            },
            n_rungs: 4,
        });
        assert!(matches!(r, Err(Error::NegativeCoupling(_))));
    }

    /// Oracle: legs only (J_par = 1, rest 0) must equal two decoupled
    /// 4-site Heisenberg rings assembled spin by spin.
    #[test]
    fn leg_only_ladder_is_two_decoupled_rings() {
        let n_rungs = 4;
        let spec = build_ladder(&LadderParams {
            model: LadderModel::FrustratedLadder {
                j_par: 1.0,
                j_perp: 0.0,
                j_cross: 0.0,
            },
            n_rungs,
        })
        .unwrap();
        let dense = build_chain(&spec).unwrap();

        // Spin (rung i, leg l) sits at qubit 2 i + l of the 8-qubit register.
        let n_spins = 2 * n_rungs;
        let dim = 1usize << n_spins;
        let mut oracle = DMatrix::<f64>::zeros(dim, dim);
        for leg in 0..2usize {
            for i in 0..n_rungs {
                let a = 2 * i + leg;
                let b = 2 * ((i + 1) % n_rungs) + leg;
                add_xx(&mut oracle, n_spins, a, b, 1.0);
                add_yy(&mut oracle, n_spins, a, b, 1.0);
                add_zz(&mut oracle, n_spins, a, b, 1.0);
            }
        }
        assert!(max_abs(&(dense.matrix() - &oracle)) < 1e-12);
    }

    /// Full spin-by-spin oracle for both models with generic couplings.
    #[test]
    fn ladder_chain_reproduces_spin_hamiltonian() {
        let n_rungs = 3;
        let n_spins = 2 * n_rungs;
        let dim = 1usize << n_spins;
        let bond = |m: &mut DMatrix<f64>, a: usize, b: usize, w: f64| {
            add_xx(m, n_spins, a, b, w);
            add_yy(m, n_spins, a, b, w);
            add_zz(m, n_spins, a, b, w);
        };
        let lower = |i: usize| 2 * (i % n_rungs);
        let upper = |i: usize| 2 * (i % n_rungs) + 1;

        // J-model with distinct couplings.
        let (j0, j1, j2, j3) = (1.0, 0.7, 0.4, 1.3);
        let spec = build_ladder(&LadderParams {
            model: LadderModel::J0J1J2J3 { j0, j1, j2, j3 },
            n_rungs,
        })
        .unwrap();
        let dense = build_chain(&spec).unwrap();
        let mut oracle = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n_rungs {
            bond(&mut oracle, lower(i), lower(i + 1), j0);
            bond(&mut oracle, upper(i), upper(i + 1), j1);
            bond(&mut oracle, lower(i), upper(i), j2);
            bond(&mut oracle, lower(i + 1), upper(i), j3);
        }
        assert!(max_abs(&(dense.matrix() - &oracle)) < 1e-12);

        // Frustrated ladder.
        let (jp, jr, jx) = (1.0, 0.8, 0.6);
        let spec = build_ladder(&LadderParams {
            model: LadderModel::FrustratedLadder {
                j_par: jp,
                j_perp: jr,
                j_cross: jx,
            },
            n_rungs,
        })
        .unwrap();
        let dense = build_chain(&spec).unwrap();
        let mut oracle = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n_rungs {
            bond(&mut oracle, lower(i), lower(i + 1), jp);
            bond(&mut oracle, upper(i), upper(i + 1), jp);
            bond(&mut oracle, lower(i), upper(i), jr);
            bond(&mut oracle, lower(i), upper(i + 1), jx);
            bond(&mut oracle, lower(i + 1), upper(i), jx);
        }
        assert!(max_abs(&(dense.matrix() - &oracle)) < 1e-12);
    }

    /// At J0 = J1 the J-model is invariant under exchanging the legs
    /// combined with reflecting the chain, a spin permutation.
    #[test]
    fn jmodel_leg_exchange_symmetry() {
        let n_rungs = 3;
        let n_spins = 2 * n_rungs;
        let dim = 1usize << n_spins;
        let spec = build_ladder(&LadderParams {
            model: LadderModel::J0J1J2J3 {
                j0: 1.0,
                j1: 1.0,
                j2: 1.0,
                j3: 1.0,
            },
            n_rungs,
        })
        .unwrap();
        let h = build_chain(&spec).unwrap();

        // Permutation on spins: (rung i, leg l) -> (rung -i mod n, leg 1-l).
        let spin_of = |i: usize, l: usize| 2 * i + l;
        let mut perm = vec![0usize; n_spins];
        for i in 0..n_rungs {
            for l in 0..2 {
                perm[spin_of(i, l)] = spin_of((n_rungs - i) % n_rungs, 1 - l);
            }
        }
        // Basis-index permutation (site 0 most significant).
        let reindex = |idx: usize| -> usize {
            let mut out = 0usize;
            for s in 0..n_spins {
                let bit = (idx >> (n_spins - 1 - s)) & 1;
                out |= bit << (n_spins - 1 - perm[s]);
            }
            out
        };
        let m = h.matrix();
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                let w = m[(reindex(r), reindex(c))];
                assert!((v - w).abs() < 1e-12, "asymmetry at ({r},{c})");
            }
        }
    }

    #[test]
    fn sign_free_example_n2_entries() {
        // Hand-assembled 4x4: +1 exactly at the eight odd-parity off-diagonal
        // positions from the two X fields, -1 at the even-parity (00,11)
        // pair, identity on the diagonal.
        let h = example_sign_free(2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 1.0, 1.0, -1.0, //
                1.0, 1.0, 0.0, 1.0, //
                1.0, 0.0, 1.0, 1.0, //
                -1.0, 1.0, 1.0, 1.0,
            ],
        );
        assert_eq!(h.matrix(), &expected);
    }

    #[test]
    fn sign_free_example_nu1_is_n() {
        for n in 2..=4 {
            let h = example_sign_free(n).unwrap();
            let nu1 = nu_p_dense(&h, &MeasureSpec::l1());
            assert!((nu1 - n as f64).abs() < 1e-12, "n={n}: nu1={nu1}");
        }
    }

    #[test]
    fn fine_tuned_example_rejects_bad_parameters() {
        assert!(example_fine_tuned(0.0, 1.0, 1.0, 5).is_err());
        assert!(example_fine_tuned(0.5, 0.2, 1.0, 5).is_err());
    }

    #[test]
    fn fine_tuned_nu1_matches_closed_form() {
        // nu_1(H_{a,b}) = b m / (2 beta).
        for &(a, b, beta, m) in &[(0.2, 0.3, 1.0, 5u32), (0.5, 1.0, 2.0, 7)] {
            let h = example_fine_tuned(a, b, beta, m).unwrap();
            let nu1 = nu_p_dense(&h, &MeasureSpec::l1());
            let expected = b * f64::from(m) / (2.0 * beta);
            assert!((nu1 - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn random_stoquastic_instance_is_deterministic_and_recoverable() {
        let (h1, o1) = random_stoquastic_instance(2, 42);
        let (h2, o2) = random_stoquastic_instance(2, 42);
        assert_eq!(h1.matrix(), h2.matrix());
        assert_eq!(o1.matrix(), o2.matrix());

        let recovered = conjugate_term(&h1, &o1.transposed()).unwrap();
        assert!(effective_local_nu1(&recovered) <= 1e-10);
    }

    #[test]
    fn random_stoquastic_instances_are_generically_scrambled() {
        // Measured on this ensemble: 88 of the first 100 seeds scramble into
        // a visibly non-stoquastic window. The remainder draw O_true close
        // to a symmetry of the stoquastic cone (±1 or the X permutation),
        // where the base term's margin absorbs the rotation.
        let mut positive = 0;
        for seed in 0..100 {
            let (h, _) = random_stoquastic_instance(2, seed);
            if effective_local_nu1(&h) > 0.0 {
                positive += 1;
            }
        }
        assert!(positive >= 85, "only {positive}/100 scrambles non-stoquastic");
    }

    #[test]
    fn alpha_family_normalizes_nu1() {
        let term = random_gaussian_term(2, 7);
        let h = build_chain(&ChainSpec::new(5, term).unwrap()).unwrap();
        let d = h.dim() as f64;
        for &alpha in &[0.0, 0.5, 1.0, 2.0] {
            let ha = alpha_family(&h, alpha).unwrap();
            let nu1 = nu_p_dense(&ha, &MeasureSpec::l1());
            assert!(
                (nu1 - alpha / d).abs() < 1e-10,
                "alpha={alpha}: nu1={nu1}, want {}",
                alpha / d
            );
        }
    }

    #[test]
    fn alpha_family_at_one_recovers_rescaled_input() {
        // alpha = 1 leaves H untouched up to the overall 1/(D nu_1(H_+))
        // normalization.
        let term = random_gaussian_term(2, 11);
        let h = build_chain(&ChainSpec::new(4, term).unwrap()).unwrap();
        let plus = nonstoq_part(&h);
        let raw: f64 = plus.matrix().iter().sum();
        let ha = alpha_family(&h, 1.0).unwrap();
        let expected = h.matrix() / raw;
        assert!(max_abs(&(ha.matrix() - &expected)) < 1e-12);
    }

    #[test]
    fn alpha_family_rejects_stoquastic() {
        let mut m = DMatrix::<f64>::zeros(4, 4);
        add_xx(&mut m, 2, 0, 1, -1.0);
        let h = DenseOperator::new(vec![2, 2], m).unwrap();
        assert!(matches!(alpha_family(&h, 1.0), Err(Error::StoquasticInput)));
    }
}
