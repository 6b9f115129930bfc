//! Small dense linear-algebra helpers shared by the rest of the crate.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Largest absolute entry of a matrix (0 for an empty matrix).
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, &v| acc.max(v.abs()))
}

/// Largest absolute difference between a matrix and its transpose.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Entrywise absolute value. This is never the operator absolute value.
pub fn entrywise_abs(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(f64::abs)
}

/// Eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev = symmetric_eigenvalues(m);
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// tr(A^m) for symmetric A, via one eigendecomposition.
///
/// Repeated multiplication amplifies entrywise rounding for large m; summing
/// eigenvalue powers keeps tr(A^100) accurate.
pub fn trace_power_sym(m: &DMatrix<f64>, power: u32) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .map(|&l| l.powi(power as i32))
        .sum()
}

/// A^m for symmetric A, via eigendecomposition.
pub fn matrix_power_sym(m: &DMatrix<f64>, power: u32) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let lp = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powi(power as i32)));
    q * lp * q.transpose()
}

/// Kronecker power A^{⊗ n}.
pub fn kron_pow(m: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    assert!(n >= 1, "kron_pow needs n >= 1");
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

/// exp(A) by scaling-and-squaring with a Taylor series.
///
/// Scaled so the series argument has max-norm <= 0.5; 24 terms then converge
/// past f64 precision. Used for retraction by exponentials of small skew
/// matrices, where this is exact to machine precision.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = max_abs(a) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = DMatrix::<f64>::identity(n, n);
    for k in 1..=24u32 {
        term = (&term * &scaled) / f64::from(k);
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// Nearest-in-spirit orthogonalization: QR with the R-diagonal signs folded
/// into Q so the result is a proper orthogonal matrix close to the input.
pub fn qr_orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Draw a Haar-distributed orthogonal matrix: QR of a standard Gaussian
/// matrix with the R-diagonal signs folded into Q. The sign correction makes
/// the factorization unique and the resulting distribution Haar on O(d).
pub fn haar_orthogonal_from_rng<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    qr_orthonormalize(&g)
}

/// Apply the same matrix `o` to every tensor leg of `m`, on both sides:
/// m -> (o ⊗ ... ⊗ o) m (o^T ⊗ ... ⊗ o^T), for `m` acting on
/// `local_dims.len()` sites each of dimension `o.nrows()`.
///
/// Works leg by leg in O(n D^2 d) instead of forming the D x D Kronecker
/// power.
pub fn conjugate_all_legs(m: &DMatrix<f64>, o: &DMatrix<f64>, n_sites: usize) -> DMatrix<f64> {
    let d = o.nrows();
    let dim = m.nrows();
    debug_assert_eq!(d.pow(n_sites as u32), dim);
    let mut cur = m.clone();
    // Row legs: cur <- (I ⊗ .. ⊗ O ⊗ .. ⊗ I) cur for each site.
    for site in 0..n_sites {
        cur = apply_leg_rows(&cur, o, d, n_sites, site);
    }
    // Column legs: right-multiplying by (O^T)^{⊗n} transforms column
    // multi-indices by O as well, so reuse the row kernel on the transpose.
    let mut cur_t = cur.transpose();
    for site in 0..n_sites {
        cur_t = apply_leg_rows(&cur_t, o, d, n_sites, site);
    }
    cur_t.transpose()
}

fn apply_leg_rows(
    m: &DMatrix<f64>,
    o: &DMatrix<f64>,
    d: usize,
    n_sites: usize,
    site: usize,
) -> DMatrix<f64> {
    let dim = m.nrows();
    let cols = m.ncols();
    let stride = d.pow((n_sites - 1 - site) as u32);
    let block = stride * d;
    let mut out = DMatrix::<f64>::zeros(dim, cols);
    for base in (0..dim).step_by(block) {
        for off in 0..stride {
            for new_i in 0..d {
                let row_out = base + new_i * stride + off;
                for old_i in 0..d {
                    let w = o[(new_i, old_i)];
                    if w == 0.0 {
                        continue;
                    }
                    let row_in = base + old_i * stride + off;
                    for c in 0..cols {
                        out[(row_out, c)] += w * m[(row_in, c)];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(3, 3);
        let e = expm(&z);
        assert!(max_abs(&(e - DMatrix::<f64>::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn expm_matches_rotation_formula() {
        // exp of a 2x2 skew matrix is a rotation by the off-diagonal angle.
        for &theta in &[0.3, -1.2, 2.9] {
            let k = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
            let e = expm(&k);
            let rot = DMatrix::from_row_slice(
                2,
                2,
                &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
            );
            assert!(max_abs(&(e - rot)) < 1e-14);
        }
    }

    #[test]
    fn trace_power_matches_explicit_product() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, -1.0, 0.5, 0.0, 0.5, 3.0]);
        let explicit = (&m * &m * &m).trace();
        assert!((trace_power_sym(&m, 3) - explicit).abs() < 1e-10);
    }

    #[test]
    fn conjugate_all_legs_matches_kron() {
        let o = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let m = DMatrix::from_fn(8, 8, |i, j| ((i * 8 + j) as f64).sin());
        let m = (&m + &m.transpose()) * 0.5;
        let u = kron_pow(&o, 3);
        let expected = &u * &m * u.transpose();
        let got = conjugate_all_legs(&m, &o, 3);
        assert!(max_abs(&(got - expected)) < 1e-12);
    }

    #[test]
    fn qr_orthonormalize_returns_orthogonal() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.1, 0.0, 1.0, -0.3, 0.05, 0.0, 1.0]);
        let q = qr_orthonormalize(&m);
        let defect = max_abs(&(q.transpose() * &q - DMatrix::<f64>::identity(3, 3)));
        assert!(defect < 1e-14);
    }
}
