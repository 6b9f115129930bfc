//! Hamiltonian containers and builders.
//!
//! Everything downstream (measures, QMC oracles, the optimizer) consumes the
//! types defined here. Conventions, fixed globally:
//!
//! - All stored matrices are real and symmetric.
//! - Kronecker ordering puts site 0 in the most significant position, so for
//!   qubits the basis index of `|b_0 b_1 ... b_{n-1}>` is the integer with
//!   `b_0` as its highest bit. The measures are permutation-invariant, but
//!   file outputs must be reproducible, hence one documented order.
//! - Chains have closed boundary conditions: site `n` is identified with
//!   site 0.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{conjugate_all_legs, max_abs, max_asymmetry};
use crate::DENSE_QUBIT_LIMIT;

/// Relative tolerance for the symmetry invariant of stored matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Max-norm tolerance for the orthogonality invariant `||O^T O - I|| <= TOL`.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// A real symmetric operator on a tensor product of finite local spaces.
///
/// This is the universal dense representation: every oracle in the crate
/// (trace evaluation, exact measures) runs on it.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    local_dims: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    /// Wrap a matrix, checking squareness, the local-dimension product and
    /// the symmetry invariant.
    pub fn new(local_dims: Vec<usize>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let product: usize = local_dims.iter().product();
        if product != matrix.nrows() {
            return Err(Error::LocalDimsMismatch {
                dim: matrix.nrows(),
                product,
            });
        }
        let scale = max_abs(&matrix);
        let asym = max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                max_asym: asym,
                tol: SYMMETRY_TOL * scale,
            });
        }
        Ok(Self { local_dims, matrix })
    }

    /// Wrap a bare matrix as a single-site operator.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(vec![dim], matrix)
    }

    /// Total Hilbert-space dimension D.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_sites(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// A nearest-neighbour interaction term `h` on two sites of dimension `d`,
/// stored as a real symmetric d^2 x d^2 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteTerm {
    local_dim: usize,
    matrix: DMatrix<f64>,
}

impl TwoSiteTerm {
    pub fn new(local_dim: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let d2 = local_dim * local_dim;
        if matrix.nrows() != d2 || matrix.ncols() != d2 {
            return Err(Error::DimensionMismatch {
                expected: d2,
                got: matrix.nrows(),
            });
        }
        let scale = max_abs(&matrix);
        let asym = max_asymmetry(&matrix);
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                max_asym: asym,
                tol: SYMMETRY_TOL * scale,
            });
        }
        Ok(Self { local_dim, matrix })
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// A translation-invariant chain `H = sum_i T_i(h)` with closed boundary
/// conditions (the last copy of `h` acts on sites `(n-1, 0)`).
///
/// At least 3 sites are required: the three-site window of the effective
/// local measure degenerates at n = 2.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    n_sites: usize,
    term: TwoSiteTerm,
}

impl ChainSpec {
    pub fn new(n_sites: usize, term: TwoSiteTerm) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::ChainTooShort(n_sites));
        }
        Ok(Self { n_sites, term })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn term(&self) -> &TwoSiteTerm {
        &self.term
    }
}

/// An on-site orthogonal transformation, the optimization variable for
/// basis changes `H -> O^{⊗n} H (O^T)^{⊗n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalPoint {
    matrix: DMatrix<f64>,
}

impl OrthogonalPoint {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let d = matrix.nrows();
        let defect = max_abs(&(matrix.transpose() * &matrix - DMatrix::<f64>::identity(d, d)));
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::NotOrthogonal { defect });
        }
        Ok(Self { matrix })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The inverse transformation (transpose).
    pub fn transposed(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }
}

/// Single-qubit Pauli label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// Embed a single Pauli operator at `site` of an `n`-qubit register.
///
/// `Y` alone is imaginary and has no real dense representation; builders
/// must combine it into real products such as `Y_i Y_j` before storing.
pub fn pauli_embed(label: Pauli, site: usize, n: usize) -> Result<DenseOperator> {
    if site >= n {
        return Err(Error::SiteOutOfRange { site, n_sites: n });
    }
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::DenseLimitExceeded(n, DENSE_QUBIT_LIMIT));
    }
    if label == Pauli::Y {
        return Err(Error::ImaginaryOperator);
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    match label {
        Pauli::I => {
            for c in 0..dim {
                m[(c, c)] = 1.0;
            }
        }
        Pauli::X => add_pauli_x(&mut m, n, site, 1.0),
        Pauli::Z => add_pauli_z(&mut m, n, site, 1.0),
        Pauli::Y => unreachable!(),
    }
    DenseOperator::new(vec![2; n], m)
}

/// Bit mask of `site` under the site-0-most-significant convention.
fn site_bit(n: usize, site: usize) -> usize {
    1usize << (n - 1 - site)
}

pub(crate) fn add_pauli_x(m: &mut DMatrix<f64>, n: usize, site: usize, w: f64) {
    let bit = site_bit(n, site);
    for c in 0..m.ncols() {
        m[(c ^ bit, c)] += w;
    }
}

pub(crate) fn add_pauli_z(m: &mut DMatrix<f64>, n: usize, site: usize, w: f64) {
    let bit = site_bit(n, site);
    for c in 0..m.ncols() {
        let sign = if c & bit == 0 { 1.0 } else { -1.0 };
        m[(c, c)] += sign * w;
    }
}

pub(crate) fn add_xx(m: &mut DMatrix<f64>, n: usize, i: usize, j: usize, w: f64) {
    let flips = site_bit(n, i) | site_bit(n, j);
    for c in 0..m.ncols() {
        m[(c ^ flips, c)] += w;
    }
}

/// `Y_i Y_j` is real: the two factors of `i` multiply to `-1` and the ket
/// bits supply the remaining signs.
pub(crate) fn add_yy(m: &mut DMatrix<f64>, n: usize, i: usize, j: usize, w: f64) {
    let bi = site_bit(n, i);
    let bj = site_bit(n, j);
    for c in 0..m.ncols() {
        let parity = (c & bi != 0) ^ (c & bj != 0);
        let sign = if parity { 1.0 } else { -1.0 };
        m[(c ^ (bi | bj), c)] += sign * w;
    }
}

pub(crate) fn add_zz(m: &mut DMatrix<f64>, n: usize, i: usize, j: usize, w: f64) {
    let bi = site_bit(n, i);
    let bj = site_bit(n, j);
    for c in 0..m.ncols() {
        let parity = (c & bi != 0) ^ (c & bj != 0);
        let sign = if parity { -1.0 } else { 1.0 };
        m[(c, c)] += sign * w;
    }
}

/// `X_i Z_j`: flips the bit of `i`, sign from the ket bit of `j`.
pub(crate) fn add_xz(m: &mut DMatrix<f64>, n: usize, x_site: usize, z_site: usize, w: f64) {
    let bx = site_bit(n, x_site);
    let bz = site_bit(n, z_site);
    for c in 0..m.ncols() {
        let sign = if c & bz == 0 { 1.0 } else { -1.0 };
        m[(c ^ bx, c)] += sign * w;
    }
}

pub(crate) fn add_identity(m: &mut DMatrix<f64>, w: f64) {
    for c in 0..m.ncols() {
        m[(c, c)] += w;
    }
}

/// Sparse coefficient lists of a (2+1)-local Hamiltonian
///
///   H = sum_{i<j} (a XX + b YY + c ZZ) + sum_{i != j} x_{i,j} X_i Z_j
///     + sum_i (alpha X + gamma Z)
///
/// on an arbitrary interaction graph. Coefficients accumulate; entries that
/// cancel to exactly zero are dropped, so `deg_xz` counts genuinely present
/// edges.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientGraph {
    n_qubits: usize,
    xx: BTreeMap<(usize, usize), f64>,
    yy: BTreeMap<(usize, usize), f64>,
    zz: BTreeMap<(usize, usize), f64>,
    /// Keyed by (X-site, Z-site); both orientations are distinct terms.
    xz: BTreeMap<(usize, usize), f64>,
    x_field: BTreeMap<usize, f64>,
    z_field: BTreeMap<usize, f64>,
}

fn accumulate<K: Ord + Copy>(map: &mut BTreeMap<K, f64>, key: K, w: f64) {
    let v = map.entry(key).or_insert(0.0);
    *v += w;
    if *v == 0.0 {
        map.remove(&key);
    }
}

impl CoefficientGraph {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ..Default::default()
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        let hi = i.max(j);
        if hi >= self.n_qubits {
            return Err(Error::SiteOutOfRange {
                site: hi,
                n_sites: self.n_qubits,
            });
        }
        Ok(())
    }

    fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.n_qubits {
            return Err(Error::SiteOutOfRange {
                site: i,
                n_sites: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn add_xx(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        self.check_pair(i, j)?;
        accumulate(&mut self.xx, (i.min(j), i.max(j)), w);
        Ok(())
    }

    pub fn add_yy(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        self.check_pair(i, j)?;
        accumulate(&mut self.yy, (i.min(j), i.max(j)), w);
        Ok(())
    }

    pub fn add_zz(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        self.check_pair(i, j)?;
        accumulate(&mut self.zz, (i.min(j), i.max(j)), w);
        Ok(())
    }

    /// Add `w * X_i Z_j` (ordered pair: X acts on `x_site`).
    pub fn add_xz(&mut self, x_site: usize, z_site: usize, w: f64) -> Result<()> {
        self.check_pair(x_site, z_site)?;
        accumulate(&mut self.xz, (x_site, z_site), w);
        Ok(())
    }

    pub fn add_x(&mut self, i: usize, w: f64) -> Result<()> {
        self.check_site(i)?;
        accumulate(&mut self.x_field, i, w);
        Ok(())
    }

    pub fn add_z(&mut self, i: usize, w: f64) -> Result<()> {
        self.check_site(i)?;
        accumulate(&mut self.z_field, i, w);
        Ok(())
    }

    pub fn xx(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.xx
    }

    pub fn yy(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.yy
    }

    pub fn zz(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.zz
    }

    pub fn xz(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.xz
    }

    pub fn x_field(&self) -> &BTreeMap<usize, f64> {
        &self.x_field
    }

    pub fn z_field(&self) -> &BTreeMap<usize, f64> {
        &self.z_field
    }

    /// X field coefficient at site `i` (0 when absent).
    pub fn alpha(&self, i: usize) -> f64 {
        self.x_field.get(&i).copied().unwrap_or(0.0)
    }

    /// XZ neighbourhood of site `i`: the sites `j` with `x_{i,j} != 0`,
    /// together with the weights.
    pub fn xz_neighbours(&self, i: usize) -> Vec<(usize, f64)> {
        self.xz
            .range((i, 0)..(i, usize::MAX))
            .map(|(&(_, j), &w)| (j, w))
            .collect()
    }

    pub fn deg_xz(&self, i: usize) -> usize {
        self.xz.range((i, 0)..(i, usize::MAX)).count()
    }

    /// Edge set: unordered pairs carrying at least one nonzero coefficient.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for &(i, j) in self.xx.keys().chain(self.yy.keys()).chain(self.zz.keys()) {
            e.insert((i, j));
        }
        for &(i, j) in self.xz.keys() {
            e.insert((i.min(j), i.max(j)));
        }
        e
    }
}

/// Assemble the dense 2^n x 2^n matrix of a coefficient Hamiltonian.
pub fn build_coefficient_hamiltonian(g: &CoefficientGraph) -> Result<DenseOperator> {
    let n = g.n_qubits();
    if n > DENSE_QUBIT_LIMIT {
        return Err(Error::DenseLimitExceeded(n, DENSE_QUBIT_LIMIT));
    }
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for (&(i, j), &w) in g.xx() {
        add_xx(&mut m, n, i, j, w);
    }
    for (&(i, j), &w) in g.yy() {
        add_yy(&mut m, n, i, j, w);
    }
    for (&(i, j), &w) in g.zz() {
        add_zz(&mut m, n, i, j, w);
    }
    for (&(xs, zs), &w) in g.xz() {
        add_xz(&mut m, n, xs, zs, w);
    }
    for (&i, &w) in g.x_field() {
        add_pauli_x(&mut m, n, i, w);
    }
    for (&i, &w) in g.z_field() {
        add_pauli_z(&mut m, n, i, w);
    }
    DenseOperator::new(vec![2; n], m)
}

/// Embed a two-site term into an n-site register on (site_a, site_b), with
/// general (possibly non-adjacent) positions. Used for the chain wrap-around
/// copy and for oracle assembly in tests.
pub fn embed_two_site(
    h: &DMatrix<f64>,
    d: usize,
    n: usize,
    site_a: usize,
    site_b: usize,
    out: &mut DMatrix<f64>,
) {
    assert_ne!(site_a, site_b);
    let stride_a = d.pow((n - 1 - site_a) as u32);
    let stride_b = d.pow((n - 1 - site_b) as u32);
    // Enumerate assignments of the remaining n-2 digits.
    let rest_sites: Vec<usize> = (0..n).filter(|&s| s != site_a && s != site_b).collect();
    let rest_count = d.pow(rest_sites.len() as u32);
    for rest in 0..rest_count {
        let mut base = 0usize;
        let mut r = rest;
        for &s in &rest_sites {
            let digit = r % d;
            r /= d;
            base += digit * d.pow((n - 1 - s) as u32);
        }
        for ia in 0..d {
            for ib in 0..d {
                let row = base + ia * stride_a + ib * stride_b;
                for ja in 0..d {
                    for jb in 0..d {
                        let w = h[(ia * d + ib, ja * d + jb)];
                        if w == 0.0 {
                            continue;
                        }
                        let col = base + ja * stride_a + jb * stride_b;
                        out[(row, col)] += w;
                    }
                }
            }
        }
    }
}

/// Build the dense Hamiltonian of a closed translation-invariant chain:
/// `H = sum_{i=0}^{n-1} T_i(h)`, the last copy acting on sites (n-1, 0).
pub fn build_chain(spec: &ChainSpec) -> Result<DenseOperator> {
    let d = spec.term().local_dim();
    let n = spec.n_sites();
    let dim = d.checked_pow(n as u32).ok_or(Error::DenseLimitExceeded(n, DENSE_QUBIT_LIMIT))?;
    // The qubit-equivalent size guard: d^n <= 2^DENSE_QUBIT_LIMIT.
    if dim > (1usize << DENSE_QUBIT_LIMIT) {
        return Err(Error::DenseLimitExceeded(n, DENSE_QUBIT_LIMIT));
    }
    let h = spec.term().matrix();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        embed_two_site(h, d, n, i, (i + 1) % n, &mut m);
    }
    DenseOperator::new(vec![d; n], m)
}

/// Conjugate a dense operator by the same orthogonal matrix on every site:
/// `H -> O^{⊗n} H (O^T)^{⊗n}`. Requires all local dimensions to equal the
/// dimension of `O`.
pub fn conjugate_dense(op: &DenseOperator, o: &OrthogonalPoint) -> Result<DenseOperator> {
    let d = o.dim();
    for &ld in op.local_dims() {
        if ld != d {
            return Err(Error::DimensionMismatch {
                expected: ld,
                got: d,
            });
        }
    }
    let n = op.n_sites();
    let m = conjugate_all_legs(op.matrix(), o.matrix(), n);
    DenseOperator::new(op.local_dims().to_vec(), symmetrize(m))
}

/// Conjugate a two-site term locally: `h -> (O ⊗ O) h (O^T ⊗ O^T)`.
pub fn conjugate_term(term: &TwoSiteTerm, o: &OrthogonalPoint) -> Result<TwoSiteTerm> {
    if term.local_dim() != o.dim() {
        return Err(Error::DimensionMismatch {
            expected: term.local_dim(),
            got: o.dim(),
        });
    }
    let m = conjugate_all_legs(term.matrix(), o.matrix(), 2);
    TwoSiteTerm::new(term.local_dim(), symmetrize(m))
}

/// Clean out the roundoff asymmetry a conjugation leaves behind so the
/// symmetry invariant stays exact.
fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let mt = m.transpose();
    (m + mt) * 0.5
}
