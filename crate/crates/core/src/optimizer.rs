//! Conjugate-gradient descent over the orthogonal group `O(d)` for on-site
//! non-stoquasticity objectives.
//!
//! The optimization variable is a single orthogonal matrix `O` acting on
//! every site of a translation-invariant chain; the objective is a measure
//! of the conjugated term `h(O) = (O ⊗ O) h (O^T ⊗ O^T)` over the three-site
//! window. Geometry:
//!
//! - tangent vectors at `O` are `K O` with `K` skew-symmetric;
//! - the Riemannian gradient is the skew part `G = Γ O^T - O Γ^T` of the
//!   Euclidean gradient `Γ`;
//! - retraction is the exponential of a skew matrix, which stays orthogonal
//!   exactly;
//! - search directions follow Polak-Ribiere+ with periodic restart and an
//!   Armijo backtracking line search seeded by a quadratic fit.
//!
//! The non-smooth `l1` window measure is handled by a hybrid schedule: a
//! squared-`l2` pre-optimization followed by the smooth softplus surrogate,
//! raced against a direct surrogate run, keeping whichever lands at the
//! smaller hard measure.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{conjugate_term, OrthogonalPoint, TwoSiteTerm};
use crate::linalg::{expm, haar_orthogonal_from_rng, max_abs, qr_orthonormalize};
use crate::measures::{
    effective_local_nu1, f_alpha, f_alpha_prime, for_each_window_entry,
};

/// Differentiable objectives over the effective window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// Sum of squared positive window entries. Continuously differentiable,
    /// numerically tame; used for pre-optimization.
    Nu2Squared,
    /// Softplus surrogate of the window l1 measure at sharpness `alpha`.
    SmoothNu1,
}

/// An objective: which measure, its sharpness, and the term it acts on.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Softplus sharpness; only read by [`ObjectiveKind::SmoothNu1`].
    pub alpha: f64,
    pub term: TwoSiteTerm,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, alpha: f64, term: TwoSiteTerm) -> Result<Self> {
        if kind == ObjectiveKind::SmoothNu1 && !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "smooth objective needs alpha > 0, got {alpha}"
            )));
        }
        Ok(Self { kind, alpha, term })
    }

    fn local_dim(&self) -> usize {
        self.term.local_dim()
    }
}

/// Armijo backtracking parameters.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchParams {
    pub backtracking_factor: f64,
    pub sufficient_decrease: f64,
    pub max_halvings: u32,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            backtracking_factor: 0.5,
            sufficient_decrease: 1e-4,
            max_halvings: 40,
        }
    }
}

/// Starting point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Identity,
    /// `exp(scale * K)` for a random skew matrix with unit-scaled entries.
    PerturbedIdentity { scale: f64 },
    HaarRandom,
}

/// Knobs of a single optimization run. All randomness (initial point) flows
/// from `seed`.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Stop when the Riemannian gradient norm drops below
    /// `gradient_tolerance * (1 + |objective|)`.
    pub gradient_tolerance: f64,
    pub line_search: LineSearchParams,
    /// Conjugate-direction restart period; `None` means the manifold
    /// dimension `d(d-1)/2`.
    pub restart_period: Option<usize>,
    pub init: Init,
    pub seed: u64,
    /// Sharpness of the smooth surrogate stage.
    pub smooth_alpha: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            gradient_tolerance: 1e-8,
            line_search: LineSearchParams::default(),
            restart_period: None,
            init: Init::PerturbedIdentity { scale: 0.01 },
            seed: 0,
            smooth_alpha: 50.0,
        }
    }
}

/// Per-iteration log entry.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub objective: f64,
    pub grad_norm: f64,
    pub step_size: f64,
}

/// Trace of a single CG run.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub final_objective: f64,
}

/// Which candidate the hybrid schedule returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridBranch {
    /// l2 pre-optimization followed by the smooth stage.
    PreOptimized,
    /// Direct smooth run from the initial point.
    Direct,
    /// The initial point itself was at least as good as both runs.
    InitialPoint,
    /// The computational basis was at least as good as everything else.
    Identity,
}

/// Full record of a hybrid optimization.
#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    pub pre_l2: RunTrace,
    pub smooth_after_l2: RunTrace,
    pub direct_smooth: RunTrace,
    pub chosen: HybridBranch,
    /// Hard window measure at the initial point and at the returned point.
    pub hard_nu1_start: f64,
    pub hard_nu1_end: f64,
}

/// Evaluate the objective at a point.
pub fn objective_eval(o: &OrthogonalPoint, spec: &ObjectiveSpec) -> Result<f64> {
    if o.dim() != spec.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.local_dim(),
            got: o.dim(),
        });
    }
    let hp = conjugate_raw(spec.term.matrix(), o.matrix());
    Ok(objective_of_conjugated(&hp, spec))
}

fn conjugate_raw(h: &DMatrix<f64>, o: &DMatrix<f64>) -> DMatrix<f64> {
    let c = o.kronecker(o);
    let m = &c * h * c.transpose();
    let mt = m.transpose();
    (m + mt) * 0.5
}

fn objective_of_conjugated(hp: &DMatrix<f64>, spec: &ObjectiveSpec) -> f64 {
    let d = spec.local_dim();
    let mut total = 0.0;
    match spec.kind {
        ObjectiveKind::Nu2Squared => {
            for_each_window_entry(hp, d, |_, _, _, _, _, e| {
                if e > 0.0 {
                    total += e * e;
                }
            });
        }
        ObjectiveKind::SmoothNu1 => {
            for_each_window_entry(hp, d, |_, _, _, _, _, e| {
                total += f_alpha(e, spec.alpha);
            });
        }
    }
    total
}

/// Euclidean gradient `Γ[k][l] = ∂ objective / ∂ O[k][l]`.
///
/// Chain rule through the window sum, the adjoint action `h -> C h C^T`
/// with `C = O ⊗ O`, and the two-term product rule of the Kronecker square.
/// The outer weight per window entry is `2 max{e, 0}` for the squared-l2
/// objective and the logistic derivative of the softplus for the smooth one.
pub fn euclidean_gradient(o: &OrthogonalPoint, spec: &ObjectiveSpec) -> Result<DMatrix<f64>> {
    if o.dim() != spec.local_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.local_dim(),
            got: o.dim(),
        });
    }
    let d = spec.local_dim();
    let om = o.matrix();
    let hp = conjugate_raw(spec.term.matrix(), om);

    // dObjective / dh' accumulated over the window.
    let mut k = DMatrix::<f64>::zeros(d * d, d * d);
    for_each_window_entry(&hp, d, |i1, i2, i3, j1, j2, e| {
        let w = match spec.kind {
            ObjectiveKind::Nu2Squared => {
                if e > 0.0 {
                    2.0 * e
                } else {
                    0.0
                }
            }
            ObjectiveKind::SmoothNu1 => f_alpha_prime(e, spec.alpha),
        };
        if w == 0.0 {
            return;
        }
        k[(i1 * d + i2, j1 * d + j2)] += w;
        if i1 == j1 {
            k[(i2 * d + i3, j2 * d + i3)] += w;
        }
    });

    // dObjective / dC for the adjunction h' = C h C^T.
    let c = om.kronecker(om);
    let h = spec.term.matrix();
    let d2 = &k * &c * h.transpose() + k.transpose() * &c * h;

    // Contract the Kronecker structure C = O ⊗ O back onto O.
    let mut gamma = DMatrix::<f64>::zeros(d, d);
    for kk in 0..d {
        for ll in 0..d {
            let mut g = 0.0;
            for m2 in 0..d {
                for n2 in 0..d {
                    g += d2[(kk * d + m2, ll * d + n2)] * om[(m2, n2)];
                }
            }
            for m1 in 0..d {
                for n1 in 0..d {
                    g += d2[(m1 * d + kk, n1 * d + ll)] * om[(m1, n1)];
                }
            }
            gamma[(kk, ll)] = g;
        }
    }
    Ok(gamma)
}

/// Hard window measure after conjugating the term by `o`.
pub fn hard_nu1_at(term: &TwoSiteTerm, o: &OrthogonalPoint) -> f64 {
    effective_local_nu1(&conjugate_term(term, o).expect("dimensions checked upstream"))
}

/// Outcome of one conjugate-gradient step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub objective: f64,
    pub grad_norm: f64,
    pub step_size: f64,
    pub accepted: bool,
}

/// Mutable state of a conjugate-gradient run.
pub struct CgState<'a> {
    spec: &'a ObjectiveSpec,
    config: &'a OptimizerConfig,
    point: OrthogonalPoint,
    objective: f64,
    prev_grad: Option<DMatrix<f64>>,
    direction: Option<DMatrix<f64>>,
    trial_step: f64,
    iter: usize,
    restart_period: usize,
    stall_count: u32,
    converged: bool,
}

/// Consecutive relative improvements below resolution before a run is
/// declared stalled.
const STALL_LIMIT: u32 = 10;

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl<'a> CgState<'a> {
    pub fn new(
        spec: &'a ObjectiveSpec,
        config: &'a OptimizerConfig,
        start: OrthogonalPoint,
    ) -> Result<Self> {
        let objective = objective_eval(&start, spec)?;
        let d = spec.local_dim();
        let restart_period = config
            .restart_period
            .unwrap_or_else(|| (d * (d - 1) / 2).max(1));
        Ok(Self {
            spec,
            config,
            point: start,
            objective,
            prev_grad: None,
            direction: None,
            trial_step: 1.0,
            iter: 0,
            restart_period,
            stall_count: 0,
            converged: false,
        })
    }

    pub fn point(&self) -> &OrthogonalPoint {
        &self.point
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// One full step: gradient, conjugate direction, line search, retraction.
    pub fn step(&mut self) -> Result<StepRecord> {
        let gamma = euclidean_gradient(&self.point, self.spec)?;
        self.step_with_gradient(&gamma)
    }

    /// One step from an externally supplied Euclidean gradient.
    pub fn step_with_gradient(&mut self, gamma: &DMatrix<f64>) -> Result<StepRecord> {
        let o = self.point.matrix();
        // Riemannian gradient: skew part of Γ O^T, doubled by convention.
        let grad = gamma * o.transpose() - o * gamma.transpose();
        let grad_norm = frob(&grad);
        let f0 = self.objective;
        if grad_norm <= self.config.gradient_tolerance * (1.0 + f0.abs()) {
            self.converged = true;
            return Ok(StepRecord {
                objective: f0,
                grad_norm,
                step_size: 0.0,
                accepted: false,
            });
        }

        // Polak-Ribiere+ with periodic restart.
        let restart_due = self.iter % self.restart_period == 0;
        let mut dir = match (&self.prev_grad, &self.direction, restart_due) {
            (Some(pg), Some(pd), false) => {
                let denom = inner(pg, pg);
                let beta = (inner(&(&grad - pg), &grad) / denom).max(0.0);
                let cand = &grad + pd * beta;
                if inner(&cand, &grad) <= 0.0 {
                    grad.clone()
                } else {
                    cand
                }
            }
            _ => grad.clone(),
        };

        let mut outcome = self.line_search(&dir, &grad, f0)?;
        if outcome.is_none() && inner(&dir, &grad) != inner(&grad, &grad) {
            // CG direction failed its whole backtracking budget; fall back to
            // steepest descent once before giving up.
            dir = grad.clone();
            outcome = self.line_search(&dir, &grad, f0)?;
        }

        match outcome {
            Some((t, f_new, new_point)) => {
                if f0 - f_new <= 1e-14 * (1.0 + f0.abs()) {
                    self.stall_count += 1;
                    if self.stall_count >= STALL_LIMIT {
                        self.converged = true;
                    }
                } else {
                    self.stall_count = 0;
                }
                self.point = new_point;
                self.objective = f_new;
                self.prev_grad = Some(grad.clone());
                self.direction = Some(dir);
                self.trial_step = t;
                self.iter += 1;
                Ok(StepRecord {
                    objective: f_new,
                    grad_norm,
                    step_size: t,
                    accepted: true,
                })
            }
            None => {
                // Repeated line-search failure: flag convergence with the
                // diagnostics in the record.
                self.converged = true;
                Ok(StepRecord {
                    objective: f0,
                    grad_norm,
                    step_size: 0.0,
                    accepted: false,
                })
            }
        }
    }

    /// Search along the geodesic `t -> exp(-t dir) O`.
    ///
    /// The cost along a rotation direction is an almost-periodic function of
    /// `t` whose fastest frequency is set by the largest rotation rate of
    /// `dir`; a backtracking-only search sees none of that structure and
    /// stalls in the first micro-valley. So: sample one full turn of the
    /// fastest mode, golden-section the best bracket, and only fall back to
    /// Armijo backtracking (trial from a three-point quadratic fit) when the
    /// coarse sweep finds nothing.
    fn line_search(
        &self,
        dir: &DMatrix<f64>,
        grad: &DMatrix<f64>,
        f0: f64,
    ) -> Result<Option<(f64, f64, OrthogonalPoint)>> {
        let slope0 = -0.5 * inner(grad, dir);
        if slope0 >= 0.0 {
            return Ok(None);
        }
        let omega = dir.clone().singular_values().max();
        if omega > 0.0 {
            let period = 2.0 * std::f64::consts::PI / omega;
            const SAMPLES: usize = 24;
            let dt = period / SAMPLES as f64;
            let mut best = (f0, 0.0f64);
            for j in 1..=SAMPLES {
                let t = dt * j as f64;
                let f = self.eval_along(dir, t)?;
                if f < best.0 {
                    best = (f, t);
                }
            }
            if best.1 > 0.0 {
                let (mut lo, mut hi) = (best.1 - dt, best.1 + dt);
                let phi = 0.5 * (3.0 - 5f64.sqrt());
                let mut t1 = lo + phi * (hi - lo);
                let mut t2 = hi - phi * (hi - lo);
                let mut f1 = self.eval_along(dir, t1)?;
                let mut f2 = self.eval_along(dir, t2)?;
                for _ in 0..24 {
                    if f1 <= f2 {
                        hi = t2;
                        t2 = t1;
                        f2 = f1;
                        t1 = lo + phi * (hi - lo);
                        f1 = self.eval_along(dir, t1)?;
                    } else {
                        lo = t1;
                        t1 = t2;
                        f1 = f2;
                        t2 = hi - phi * (hi - lo);
                        f2 = self.eval_along(dir, t2)?;
                    }
                }
                let t = if f1 <= f2 { t1 } else { t2 };
                let new_point = self.retract(dir, t.max(0.0));
                let f_exact = objective_eval(&new_point, self.spec)?;
                if f_exact < f0 {
                    return Ok(Some((t, f_exact, new_point)));
                }
            }
        }
        self.backtracking(dir, f0, slope0)
    }

    /// Armijo backtracking with the initial trial from a three-point
    /// quadratic fit (f(0), f'(0), f at the previous accepted step).
    fn backtracking(
        &self,
        dir: &DMatrix<f64>,
        f0: f64,
        slope0: f64,
    ) -> Result<Option<(f64, f64, OrthogonalPoint)>> {
        let ls = &self.config.line_search;
        let probe = self.trial_step.clamp(1e-8, 1e3);
        let f_probe = self.eval_along(dir, probe)?;
        let curvature = (f_probe - f0 - slope0 * probe) / (probe * probe);
        let mut t = if curvature > 0.0 {
            (-slope0 / (2.0 * curvature)).clamp(probe * 1e-2, probe * 1e2)
        } else {
            // Non-convex along the ray: march forward from the probe.
            probe * 2.0
        };
        for _ in 0..ls.max_halvings {
            let f_t = self.eval_along(dir, t)?;
            if f_t <= f0 + ls.sufficient_decrease * t * slope0 {
                let new_point = self.retract(dir, t);
                let f_exact = objective_eval(&new_point, self.spec)?;
                // Re-orthonormalization may move f by roundoff; keep the
                // accepted value consistent with the stored point.
                if f_exact < f0 {
                    return Ok(Some((t, f_exact, new_point)));
                }
            }
            t *= ls.backtracking_factor;
        }
        Ok(None)
    }

    fn eval_along(&self, dir: &DMatrix<f64>, t: f64) -> Result<f64> {
        let o_new = expm(&(dir * (-t))) * self.point.matrix();
        let hp = conjugate_raw(self.spec.term.matrix(), &o_new);
        Ok(objective_of_conjugated(&hp, self.spec))
    }

    fn retract(&self, dir: &DMatrix<f64>, t: f64) -> OrthogonalPoint {
        let d = self.spec.local_dim();
        let mut o_new = expm(&(dir * (-t))) * self.point.matrix();
        let defect = max_abs(&(o_new.transpose() * &o_new - DMatrix::<f64>::identity(d, d)));
        if defect > 1e-10 {
            o_new = qr_orthonormalize(&o_new);
        }
        OrthogonalPoint::new(o_new).expect("retraction keeps orthogonality")
    }
}

struct RunOutcome {
    /// Where the run converged; the next hybrid stage starts here.
    end_point: OrthogonalPoint,
    /// Incumbent: the visited point with the smallest hard window measure.
    /// Surrogate descent can leave a hard optimum (the softplus pays
    /// log(2)/alpha per exactly-zero entry, and curable instances sit on the
    /// cone boundary with many of those), so the best point seen is kept
    /// rather than only the last.
    best_point: OrthogonalPoint,
    best_hard: f64,
    trace: RunTrace,
}

/// Run conjugate gradient to convergence or the iteration cap.
fn run_cg(spec: &ObjectiveSpec, config: &OptimizerConfig, start: OrthogonalPoint) -> Result<RunOutcome> {
    let mut state = CgState::new(spec, config, start.clone())?;
    let mut trace = RunTrace::default();
    let mut best_hard = hard_nu1_at(&spec.term, &start);
    let mut best_point = start;
    for _ in 0..config.max_iters {
        let rec = state.step()?;
        trace.iterations.push(IterationRecord {
            objective: rec.objective,
            grad_norm: rec.grad_norm,
            step_size: rec.step_size,
        });
        if rec.accepted {
            let hard = hard_nu1_at(&spec.term, state.point());
            if hard < best_hard {
                best_hard = hard;
                best_point = state.point().clone();
            }
        }
        if state.converged() {
            break;
        }
    }
    trace.converged = state.converged();
    trace.final_objective = state.objective();
    Ok(RunOutcome {
        end_point: state.point().clone(),
        best_point,
        best_hard,
        trace,
    })
}

/// Build the configured initial point.
pub fn initial_point(d: usize, config: &OptimizerConfig) -> OrthogonalPoint {
    match config.init {
        Init::Identity => OrthogonalPoint::identity(d),
        Init::PerturbedIdentity { scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut k = DMatrix::<f64>::zeros(d, d);
            for i in 0..d {
                for j in (i + 1)..d {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    k[(i, j)] = v;
                    k[(j, i)] = -v;
                }
            }
            OrthogonalPoint::new(expm(&(k * scale))).expect("exp of skew is orthogonal")
        }
        Init::HaarRandom => haar_random_orthogonal(d, config.seed),
    }
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with
/// the R-diagonal signs folded into Q), deterministic in the seed.
pub fn haar_random_orthogonal(d: usize, seed: u64) -> OrthogonalPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    OrthogonalPoint::new(haar_orthogonal_from_rng(d, &mut rng))
        .expect("QR sampling returns an orthogonal matrix")
}

/// Hybrid minimization of the hard window measure of `term` over `O(d)`.
///
/// Runs (a) squared-l2 pre-optimization chained into the smooth surrogate
/// and (b) the smooth surrogate directly from the same initial point, then
/// returns whichever of {branch a, branch b, initial point, identity} has
/// the smallest hard measure, ties resolved in that order.
pub fn optimize(
    term: &TwoSiteTerm,
    config: &OptimizerConfig,
) -> Result<(OrthogonalPoint, OptimizerTrace)> {
    let d = term.local_dim();
    let init = initial_point(d, config);
    let hard_start = hard_nu1_at(term, &init);

    let l2_spec = ObjectiveSpec::new(ObjectiveKind::Nu2Squared, config.smooth_alpha, term.clone())?;
    let smooth_spec =
        ObjectiveSpec::new(ObjectiveKind::SmoothNu1, config.smooth_alpha, term.clone())?;

    let pre = run_cg(&l2_spec, config, init.clone())?;
    let smooth_a = run_cg(&smooth_spec, config, pre.end_point.clone())?;
    let smooth_b = run_cg(&smooth_spec, config, init.clone())?;

    // Branch (a) owns everything on its path, including the l2 incumbent.
    let (a_hard, a_point) = if pre.best_hard <= smooth_a.best_hard {
        (pre.best_hard, pre.best_point.clone())
    } else {
        (smooth_a.best_hard, smooth_a.best_point.clone())
    };
    let identity = OrthogonalPoint::identity(d);
    let candidates = [
        (HybridBranch::PreOptimized, a_hard, a_point),
        (HybridBranch::Direct, smooth_b.best_hard, smooth_b.best_point.clone()),
        (HybridBranch::InitialPoint, hard_start, init),
        (HybridBranch::Identity, hard_nu1_at(term, &identity), identity),
    ];
    let mut best_idx = 0;
    for (i, (_, hard, _)) in candidates.iter().enumerate() {
        if *hard < candidates[best_idx].1 {
            best_idx = i;
        }
    }
    let (branch, best_hard, point) = candidates[best_idx].clone();

    let trace = OptimizerTrace {
        pre_l2: pre.trace,
        smooth_after_l2: smooth_a.trace,
        direct_smooth: smooth_b.trace,
        chosen: branch,
        hard_nu1_start: hard_start,
        hard_nu1_end: best_hard,
    };
    Ok((point, trace))
}
