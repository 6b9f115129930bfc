//! The MaxCut embedding: a 2-local Hamiltonian whose optimal sign easing
//! under on-site transformations encodes the Ising ground-state energy.
//!
//! Every graph edge becomes an `X_i X_j` term plus a frustrated triangle of
//! `ZZ` penalties through a per-edge ancilla qubit, weighted by
//! `C = 4 deg(G)`. Z-flips on the original vertices reproduce cut
//! configurations: a flipped edge becomes stoquastic `-X_i X_j`, an
//! unflipped one keeps cost 1, so the minimal measure over Z-flips equals
//! the number of monochromatic edges of the best cut. The penalty triangles
//! make every Hadamard-type move strictly worse, which this module verifies
//! exhaustively on small instances by scanning the full real Clifford orbit.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::CoefficientGraph;
use crate::measures::{nu1_closed_form, xz_vertex_exact};

/// Cap on exact Ising ground-state enumeration (2^v configurations).
pub const ISING_ENUMERATION_CAP: usize = 24;

/// Default cap on full Clifford-orbit scans (8^{v+e} assignments).
pub const CLIFFORD_ORBIT_CAP: usize = 8;

/// A simple undirected graph, the MaxCut input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxCutInstance {
    n_vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl MaxCutInstance {
    pub fn new(n_vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            let hi = i.max(j);
            if hi >= n_vertices {
                return Err(Error::SiteOutOfRange {
                    site: hi,
                    n_sites: n_vertices,
                });
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self {
            n_vertices,
            edges: set,
        })
    }

    /// Parse an edge-list text: one `i j` pair per line, `#` comments and
    /// blank lines ignored. The vertex count is one past the largest index.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_vertex = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "edge list line {}: expected two vertex indices, got {line:?}",
                        lineno + 1
                    ))
                })
            };
            let i = parse(it.next())?;
            let j = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::InvalidParameter(format!(
                    "edge list line {}: trailing tokens in {line:?}",
                    lineno + 1
                )));
            }
            max_vertex = max_vertex.max(i).max(j);
            edges.push((i, j));
        }
        if edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Self::new(max_vertex + 1, edges)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| i == v || j == v)
            .count()
    }

    /// Maximum vertex degree.
    pub fn max_degree(&self) -> usize {
        (0..self.n_vertices).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices == 0 {
            return false;
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(i, j) in &self.edges {
                let other = if i == v {
                    j
                } else if j == v {
                    i
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// The embedded Hamiltonian with its qubit bookkeeping: original vertices
/// keep their indices, ancilla `xi_{i,j}` of the k-th edge (in sorted order)
/// is qubit `v + k`.
#[derive(Debug, Clone)]
pub struct EmbeddedInstance {
    base: MaxCutInstance,
    penalty: f64,
    ancilla: BTreeMap<(usize, usize), usize>,
    graph: CoefficientGraph,
}

impl EmbeddedInstance {
    pub fn base(&self) -> &MaxCutInstance {
        &self.base
    }

    /// The penalty weight C.
    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn n_qubits(&self) -> usize {
        self.base.n_vertices() + self.base.n_edges()
    }

    pub fn ancilla_of(&self, edge: (usize, usize)) -> Option<usize> {
        self.ancilla
            .get(&(edge.0.min(edge.1), edge.0.max(edge.1)))
            .copied()
    }

    pub fn graph(&self) -> &CoefficientGraph {
        &self.graph
    }
}

/// Build the embedding `H' = sum_edges [X_i X_j + C (Z_i Z_j - Z_i Z_xi -
/// Z_xi Z_j)]` with `C = 4 deg(G)`.
pub fn embed_maxcut(g: &MaxCutInstance) -> Result<EmbeddedInstance> {
    embed_maxcut_with_penalty(g, 4.0 * g.max_degree() as f64)
}

/// Same embedding with an explicit penalty weight, for p-norm variants.
pub fn embed_maxcut_with_penalty(g: &MaxCutInstance, penalty: f64) -> Result<EmbeddedInstance> {
    if g.n_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    let v = g.n_vertices();
    let mut graph = CoefficientGraph::new(v + g.n_edges());
    let mut ancilla = BTreeMap::new();
    for (k, (i, j)) in g.edges().enumerate() {
        let xi = v + k;
        ancilla.insert((i, j), xi);
        graph.add_xx(i, j, 1.0)?;
        graph.add_zz(i, j, penalty)?;
        graph.add_zz(i, xi, -penalty)?;
        graph.add_zz(j, xi, -penalty)?;
    }
    Ok(EmbeddedInstance {
        base: g.clone(),
        penalty,
        ancilla,
        graph,
    })
}

/// Exact ground-state energy of the antiferromagnetic Ising model
/// `H = sum_edges Z_i Z_j`, with the minimizing spin configuration.
///
/// Energies are integers (+1 per monochromatic edge, -1 per cut edge); ties
/// resolve to the lexicographically smallest configuration.
pub fn ising_ground_energy(g: &MaxCutInstance) -> Result<(i64, Vec<u8>)> {
    let v = g.n_vertices();
    if v > ISING_ENUMERATION_CAP {
        return Err(Error::OrbitCapExceeded {
            qubits: v,
            cap: ISING_ENUMERATION_CAP,
        });
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut best_energy = i64::MAX;
    let mut best_mask = 0u64;
    for mask in 0..(1u64 << v) {
        // Vertex 0 is the most significant bit, so mask order is
        // lexicographic order on the spin vector.
        let spin = |vtx: usize| mask >> (v - 1 - vtx) & 1;
        let mut energy = 0i64;
        for &(i, j) in &edges {
            energy += if spin(i) == spin(j) { 1 } else { -1 };
        }
        if energy < best_energy {
            best_energy = energy;
            best_mask = mask;
        }
    }
    let spins = (0..v).map(|i| (best_mask >> (v - 1 - i) & 1) as u8).collect();
    Ok((best_energy, spins))
}

/// A per-qubit real Clifford `±W^w X^x Z^z` with the global sign dropped:
/// 8 classes per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordAssignment {
    /// Packed bits per qubit: bit 0 = w, bit 1 = x, bit 2 = z.
    codes: Vec<u8>,
}

impl CliffordAssignment {
    pub fn identity(n_qubits: usize) -> Self {
        Self {
            codes: vec![0; n_qubits],
        }
    }

    /// Decode an orbit index into per-qubit codes, qubit 0 in the most
    /// significant base-8 digit so index order is lexicographic order.
    pub fn from_index(mut index: u64, n_qubits: usize) -> Self {
        let mut codes = vec![0u8; n_qubits];
        for q in (0..n_qubits).rev() {
            codes[q] = (index % 8) as u8;
            index /= 8;
        }
        Self { codes }
    }

    /// Pure Z-flips `z_i = s_i` on the first `s.len()` qubits.
    pub fn from_zflips(s: &[u8], n_qubits: usize) -> Self {
        let mut codes = vec![0u8; n_qubits];
        for (q, &bit) in s.iter().enumerate() {
            codes[q] = (bit & 1) << 2;
        }
        Self { codes }
    }

    pub fn n_qubits(&self) -> usize {
        self.codes.len()
    }

    pub fn w(&self, q: usize) -> bool {
        self.codes[q] & 1 != 0
    }

    pub fn x(&self, q: usize) -> bool {
        self.codes[q] & 2 != 0
    }

    pub fn z(&self, q: usize) -> bool {
        self.codes[q] & 4 != 0
    }

    /// Image of `X_q` under conjugation: (maps-to-Z?, sign).
    fn x_image(&self, q: usize) -> (bool, f64) {
        let sign = if self.z(q) { -1.0 } else { 1.0 };
        (self.w(q), sign)
    }

    /// Image of `Z_q` under conjugation: (maps-to-X?, sign).
    fn z_image(&self, q: usize) -> (bool, f64) {
        let sign = if self.x(q) { -1.0 } else { 1.0 };
        (self.w(q), sign)
    }

    /// Sign of `Y_q` under conjugation (the axis is always Y).
    fn y_sign(&self, q: usize) -> f64 {
        let flips = u32::from(self.w(q)) + u32::from(self.x(q)) + u32::from(self.z(q));
        if flips % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Conjugate a coefficient Hamiltonian by an on-site real Clifford,
/// symbolically on the coefficients (never through a dense matrix).
pub fn transform_graph(g: &CoefficientGraph, assign: &CliffordAssignment) -> CoefficientGraph {
    assert_eq!(g.n_qubits(), assign.n_qubits());
    let mut out = CoefficientGraph::new(g.n_qubits());
    let mut add_pair = |i: usize, pi_z: bool, j: usize, pj_z: bool, w: f64| {
        // Axis flags: false = X, true = Z.
        let r = match (pi_z, pj_z) {
            (false, false) => out.add_xx(i, j, w),
            (true, true) => out.add_zz(i, j, w),
            (false, true) => out.add_xz(i, j, w),
            (true, false) => out.add_xz(j, i, w),
        };
        r.expect("transform preserves well-formed edges");
    };
    for (&(i, j), &w) in g.xx() {
        let (zi, si) = assign.x_image(i);
        let (zj, sj) = assign.x_image(j);
        add_pair(i, zi, j, zj, w * si * sj);
    }
    for (&(i, j), &w) in g.zz() {
        let (xi_flag, si) = assign.z_image(i);
        let (xj_flag, sj) = assign.z_image(j);
        // z_image reports maps-to-X, so the Z-axis flag is its negation.
        add_pair(i, !xi_flag, j, !xj_flag, w * si * sj);
    }
    for (&(i, j), &w) in g.xz() {
        let (zi, si) = assign.x_image(i);
        let (xj_flag, sj) = assign.z_image(j);
        add_pair(i, zi, j, !xj_flag, w * si * sj);
    }
    for (&(i, j), &w) in g.yy() {
        out.add_yy(i, j, w * assign.y_sign(i) * assign.y_sign(j))
            .expect("transform preserves well-formed edges");
    }
    for (&i, &w) in g.x_field() {
        let (zi, si) = assign.x_image(i);
        if zi {
            out.add_z(i, w * si).unwrap();
        } else {
            out.add_x(i, w * si).unwrap();
        }
    }
    for (&i, &w) in g.z_field() {
        let (xi_flag, si) = assign.z_image(i);
        if xi_flag {
            out.add_x(i, w * si).unwrap();
        } else {
            out.add_z(i, w * si).unwrap();
        }
    }
    out
}

/// `nu_1` of the embedded Hamiltonian after Z-flips `s` on the original
/// vertices (identity on ancillas), by the closed form. Equals the number
/// of monochromatic edges of the cut `s`.
pub fn zflip_nu1(inst: &EmbeddedInstance, s: &[u8]) -> Result<f64> {
    if s.len() != inst.base().n_vertices() {
        return Err(Error::DimensionMismatch {
            expected: inst.base().n_vertices(),
            got: s.len(),
        });
    }
    let assign = CliffordAssignment::from_zflips(s, inst.n_qubits());
    nu1_closed_form(&transform_graph(inst.graph(), &assign))
}

/// Minimum of [`zflip_nu1`] over all 2^v flip patterns, with the argmin.
pub fn zflip_min_nu1(inst: &EmbeddedInstance) -> Result<(f64, Vec<u8>)> {
    let v = inst.base().n_vertices();
    if v > ISING_ENUMERATION_CAP {
        return Err(Error::OrbitCapExceeded {
            qubits: v,
            cap: ISING_ENUMERATION_CAP,
        });
    }
    let mut best = f64::INFINITY;
    let mut best_s = vec![0u8; v];
    for mask in 0..(1u64 << v) {
        let s: Vec<u8> = (0..v).map(|i| (mask >> (v - 1 - i) & 1) as u8).collect();
        let val = zflip_nu1(inst, &s)?;
        if val < best {
            best = val;
            best_s = s;
        }
    }
    Ok((best, best_s))
}

/// Lean `nu_1` evaluator for orbit scans: transforms the embedded terms
/// into flat coefficient tables and applies the closed form without
/// allocating a graph per assignment.
fn nu1_transformed_lean(inst: &EmbeddedInstance, assign: &CliffordAssignment) -> f64 {
    let q = inst.n_qubits();
    let mut xx = vec![0.0f64; q * q]; // upper triangle, i < j
    let mut xz = vec![0.0f64; q * q]; // ordered (x-site, z-site)
    let mut add_pair = |i: usize, zi: bool, j: usize, zj: bool, w: f64| match (zi, zj) {
        (false, false) => {
            let (lo, hi) = (i.min(j), i.max(j));
            xx[lo * q + hi] += w;
        }
        (true, true) => {} // diagonal, contributes nothing to nu_1
        (false, true) => xz[i * q + j] += w,
        (true, false) => xz[j * q + i] += w,
    };
    for (&(i, j), &w) in inst.graph().xx() {
        let (zi, si) = assign.x_image(i);
        let (zj, sj) = assign.x_image(j);
        add_pair(i, zi, j, zj, w * si * sj);
    }
    for (&(i, j), &w) in inst.graph().zz() {
        let (xi_flag, si) = assign.z_image(i);
        let (xj_flag, sj) = assign.z_image(j);
        add_pair(i, !xi_flag, j, !xj_flag, w * si * sj);
    }
    let mut total = 0.0;
    for i in 0..q {
        for j in (i + 1)..q {
            let a = xx[i * q + j];
            if a > 0.0 {
                total += a;
            }
        }
    }
    let mut xs = Vec::with_capacity(q);
    for i in 0..q {
        xs.clear();
        for j in 0..q {
            let w = xz[i * q + j];
            if w != 0.0 {
                xs.push(w);
            }
        }
        if !xs.is_empty() {
            total += xz_vertex_exact(0.0, &xs);
        }
    }
    total
}

/// Exact minimum of `nu_1` over the full orbit of on-site real Clifford
/// assignments (8 per qubit), with the lexicographically smallest argmin.
///
/// The assignment space is scanned in parallel over contiguous index
/// ranges; the reduction keeps (value, index) pairs, so the result does not
/// depend on scheduling.
pub fn clifford_orbit_min_nu1(
    inst: &EmbeddedInstance,
    qubit_cap: usize,
) -> Result<(f64, CliffordAssignment)> {
    let q = inst.n_qubits();
    if q > qubit_cap {
        return Err(Error::OrbitCapExceeded {
            qubits: q,
            cap: qubit_cap,
        });
    }
    let total = 8u64.pow(q as u32);
    let chunk = 1u64 << 12;
    let n_chunks = total.div_ceil(chunk);
    let best = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(total);
            let mut local_best = (f64::INFINITY, u64::MAX);
            for idx in lo..hi {
                let assign = CliffordAssignment::from_index(idx, q);
                let val = nu1_transformed_lean(inst, &assign);
                if val < local_best.0 {
                    local_best = (val, idx);
                }
            }
            local_best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((best.0, CliffordAssignment::from_index(best.1, q)))
}

/// The full reduction check for one graph.
#[derive(Debug, Clone)]
pub struct ReductionReport {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub penalty: f64,
    pub ising_energy: i64,
    pub zflip_min: f64,
    pub zflip_argmin: Vec<u8>,
    /// `zflip_min == (lambda_min + e) / 2` exactly.
    pub energy_identity_holds: bool,
    /// For every flip pattern, the eased measure equals the count of
    /// monochromatic edges of the corresponding cut.
    pub correspondence_holds: bool,
    /// Orbit minimum, when the instance fits under the enumeration cap.
    pub clifford_min: Option<f64>,
    pub clifford_matches_zflip: Option<bool>,
}

impl ReductionReport {
    pub fn all_hold(&self) -> bool {
        self.energy_identity_holds
            && self.correspondence_holds
            && self.clifford_matches_zflip.unwrap_or(true)
    }
}

/// Verify the reduction mechanics on a small graph: the Z-flip optimum
/// reproduces the Ising ground-state energy through `nu_1 = (E + e)/2`,
/// every flip pattern counts monochromatic edges, and (when the orbit fits
/// under `clifford_cap`) no Clifford assignment beats the best Z-flip.
pub fn verify_reduction(g: &MaxCutInstance, clifford_cap: usize) -> Result<ReductionReport> {
    let inst = embed_maxcut(g)?;
    let (energy, _) = ising_ground_energy(g)?;
    let (zmin, argmin) = zflip_min_nu1(&inst)?;
    let e = g.n_edges() as f64;
    let predicted = (energy as f64 + e) / 2.0;
    let energy_identity_holds = (zmin - predicted).abs() < 1e-9;

    let v = g.n_vertices();
    let mut correspondence_holds = true;
    for mask in 0..(1u64 << v) {
        let s: Vec<u8> = (0..v).map(|i| (mask >> (v - 1 - i) & 1) as u8).collect();
        let val = zflip_nu1(&inst, &s)?;
        let mono = g
            .edges()
            .filter(|&(i, j)| s[i] == s[j])
            .count() as f64;
        if (val - mono).abs() > 1e-9 {
            correspondence_holds = false;
            break;
        }
    }

    let (clifford_min, clifford_matches_zflip) = if inst.n_qubits() <= clifford_cap {
        let (cmin, _) = clifford_orbit_min_nu1(&inst, clifford_cap)?;
        (Some(cmin), Some((cmin - zmin).abs() < 1e-9))
    } else {
        (None, None)
    };

    Ok(ReductionReport {
        n_vertices: v,
        n_edges: g.n_edges(),
        penalty: inst.penalty(),
        ising_energy: energy,
        zflip_min: zmin,
        zflip_argmin: argmin,
        energy_identity_holds,
        correspondence_holds,
        clifford_min,
        clifford_matches_zflip,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_coefficient_hamiltonian;
    use crate::measures::{nu_p_dense, MeasureSpec};

    fn single_edge() -> MaxCutInstance {
        MaxCutInstance::new(2, [(0, 1)]).unwrap()
    }

    fn triangle() -> MaxCutInstance {
        MaxCutInstance::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    fn path3() -> MaxCutInstance {
        MaxCutInstance::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn embedding_of_single_edge() {
        let inst = embed_maxcut(&single_edge()).unwrap();
        assert_eq!(inst.n_qubits(), 3);
        assert_eq!(inst.penalty(), 4.0);
        assert_eq!(inst.graph().xx().len(), 1);
        assert_eq!(inst.graph().zz().len(), 3);
        assert_eq!(inst.ancilla_of((0, 1)), Some(2));
    }

    #[test]
    fn embedding_of_triangle_has_penalty_eight_and_nu1_three() {
        let inst = embed_maxcut(&triangle()).unwrap();
        assert_eq!(inst.n_qubits(), 6);
        assert_eq!(inst.penalty(), 8.0);
        let nu1 = nu1_closed_form(inst.graph()).unwrap();
        assert_eq!(nu1, 3.0);
        // Cross-check on the dense oracle.
        let dense = build_coefficient_hamiltonian(inst.graph()).unwrap();
        assert!((nu_p_dense(&dense, &MeasureSpec::l1()) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_edge_set_rejected() {
        let g = MaxCutInstance::new(3, []).unwrap();
        assert!(matches!(embed_maxcut(&g), Err(Error::EmptyGraph)));
    }

    #[test]
    fn edge_list_parsing() {
        let g = MaxCutInstance::from_edge_list("0 1\n# comment\n1 2\n\n2 0\n").unwrap();
        assert_eq!(g.n_vertices(), 3);
        assert_eq!(g.n_edges(), 3);
        assert!(MaxCutInstance::from_edge_list("0 1 2\n").is_err());
        assert!(MaxCutInstance::from_edge_list("").is_err());
    }

    #[test]
    fn ising_ground_energies() {
        let (e, s) = ising_ground_energy(&single_edge()).unwrap();
        assert_eq!(e, -1);
        assert_eq!(s, vec![0, 1]);

        // Frustrated triangle: best is 2 cut, 1 uncut.
        let (e, _) = ising_ground_energy(&triangle()).unwrap();
        assert_eq!(e, -1);

        // Bipartite C4 is fully cuttable.
        let c4 = MaxCutInstance::new(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let (e, _) = ising_ground_energy(&c4).unwrap();
        assert_eq!(e, -4);
    }

    #[test]
    fn zflip_nu1_counts_monochromatic_edges() {
        let inst = embed_maxcut(&single_edge()).unwrap();
        assert_eq!(zflip_nu1(&inst, &[0, 1]).unwrap(), 0.0);
        assert_eq!(zflip_nu1(&inst, &[0, 0]).unwrap(), 1.0);

        let inst = embed_maxcut(&triangle()).unwrap();
        assert_eq!(zflip_nu1(&inst, &[0, 0, 1]).unwrap(), 1.0);
        assert_eq!(zflip_nu1(&inst, &[0, 0, 0]).unwrap(), 3.0);
    }

    #[test]
    fn zflip_identity_with_ising_energy() {
        // nu_1 after flips s equals (E(s) + e)/2 for every s on small graphs.
        for g in [single_edge(), path3(), triangle()] {
            let inst = embed_maxcut(&g).unwrap();
            let v = g.n_vertices();
            let edges: Vec<_> = g.edges().collect();
            for mask in 0..(1u64 << v) {
                let s: Vec<u8> = (0..v).map(|i| (mask >> (v - 1 - i) & 1) as u8).collect();
                let energy: i64 = edges
                    .iter()
                    .map(|&(i, j)| if s[i] == s[j] { 1 } else { -1 })
                    .sum();
                let predicted = (energy as f64 + g.n_edges() as f64) / 2.0;
                assert_eq!(zflip_nu1(&inst, &s).unwrap(), predicted);
            }
        }
    }

    #[test]
    fn lean_evaluator_matches_symbolic_transform() {
        let inst = embed_maxcut(&triangle()).unwrap();
        let q = inst.n_qubits();
        for idx in [0u64, 1, 7, 8, 63, 511, 4095, 8u64.pow(6) - 1] {
            let assign = CliffordAssignment::from_index(idx, q);
            let lean = nu1_transformed_lean(&inst, &assign);
            let full = nu1_closed_form(&transform_graph(inst.graph(), &assign)).unwrap();
            assert!(
                (lean - full).abs() < 1e-12,
                "idx {idx}: lean={lean}, full={full}"
            );
        }
    }

    #[test]
    fn transform_matches_dense_conjugation_signs() {
        // Hadamard on qubit 0 swaps XX <-> ZX roles; verify through the
        // dense oracle for a couple of assignments.
        let inst = embed_maxcut(&single_edge()).unwrap();
        let q = inst.n_qubits();
        for idx in [0u64, 1, 2, 4, 5, 63, 200] {
            let assign = CliffordAssignment::from_index(idx, q);
            let transformed = transform_graph(inst.graph(), &assign);
            let nu_symbolic = nu1_closed_form(&transformed).unwrap();
            let dense = build_coefficient_hamiltonian(&transformed).unwrap();
            let nu_dense = nu_p_dense(&dense, &MeasureSpec::l1());
            assert!(
                (nu_symbolic - nu_dense).abs() < 1e-12,
                "idx {idx}: symbolic={nu_symbolic}, dense={nu_dense}"
            );
        }
    }

    #[test]
    fn clifford_orbit_minimum_single_edge() {
        let inst = embed_maxcut(&single_edge()).unwrap();
        let (min, assign) = clifford_orbit_min_nu1(&inst, 8).unwrap();
        assert_eq!(min, 0.0);
        // The minimum is attainable inside the Z-flip family.
        let (zmin, _) = zflip_min_nu1(&inst).unwrap();
        assert_eq!(zmin, 0.0);
        // The winning assignment uses no Hadamards.
        assert!((0..assign.n_qubits()).all(|q| !assign.w(q)));
    }

    #[test]
    fn clifford_orbit_minimum_path3_is_curable() {
        let inst = embed_maxcut(&path3()).unwrap();
        let (min, _) = clifford_orbit_min_nu1(&inst, 8).unwrap();
        assert_eq!(min, 0.0);
    }

    #[test]
    fn verify_reduction_on_triangle() {
        let report = verify_reduction(&triangle(), 8).unwrap();
        assert_eq!(report.ising_energy, -1);
        assert_eq!(report.zflip_min, 1.0);
        assert!(report.energy_identity_holds);
        assert!(report.correspondence_holds);
        assert_eq!(report.clifford_min, Some(1.0));
        assert_eq!(report.clifford_matches_zflip, Some(true));
        assert!(report.all_hold());
    }

    #[test]
    fn verify_reduction_disconnected_matching() {
        // Two disjoint edges: everything is componentwise additive and the
        // orbit is skipped (8 qubits > the tiny cap we pass), giving a
        // partial report.
        let g = MaxCutInstance::new(4, [(0, 1), (2, 3)]).unwrap();
        let report = verify_reduction(&g, 4).unwrap();
        assert_eq!(report.ising_energy, -2);
        assert_eq!(report.zflip_min, 0.0);
        assert!(report.energy_identity_holds);
        assert!(report.clifford_min.is_none());
        assert!(report.all_hold());
    }
}
