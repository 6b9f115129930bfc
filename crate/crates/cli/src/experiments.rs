//! Experiment drivers: each one turns a resolved config into CSV rows, plot
//! matrices and a manifest under the output directory.

use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;

use stoqease_core::hamiltonian::{
    build_chain, conjugate_dense, DenseOperator, OrthogonalPoint, TwoSiteTerm,
};
use stoqease_core::hardness::{embed_maxcut, verify_reduction, MaxCutInstance};
use stoqease_core::linalg::max_abs;
use stoqease_core::measures::{
    effective_local_nu1, nu1_closed_form, nu_p_dense, MeasureSpec, Normalization,
};
use stoqease_core::models::{
    build_ladder, random_nonstoquastic_chain, random_stoquastic_instance, LadderModel,
    LadderParams,
};
use stoqease_core::optimizer::{optimize, Init, OptimizerConfig, OptimizerTrace};
use stoqease_core::qmc::{average_sign, sign_vs_nonstoq_study, spearman_rho, QmcParams};

use crate::config::*;
use crate::output::*;
use crate::{invalid, numerical, RunError};

/// splitmix64: the per-point seed mixer. Grid points get
/// `mix(master, ix, iy)` so execution order never changes results.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn point_seed(master: u64, ix: u64, iy: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(ix)) ^ splitmix64(iy.wrapping_add(0x9E37)))
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let started = Instant::now();
    let writer = RunWriter::new(&cfg.out).map_err(invalid)?;
    let config_value = serde_json::to_value(cfg).map_err(|e| invalid(e.into()))?;
    let experiment = cfg.experiment.name();
    let seed = cfg.seed;
    let writer = match &cfg.experiment {
        Experiment::Measure(c) => run_measure(c, writer)?,
        Experiment::Avgsign(c) => run_avgsign(c, writer)?,
        Experiment::Optimize(c) => run_optimize(c, seed, writer)?,
        Experiment::JmodelSweep(c) => run_sweep(SweepKind::Jmodel, c.clone().into(), seed, writer)?,
        Experiment::LadderSweep(c) => {
            run_sweep(SweepKind::Ladder, c.clone().into(), seed, writer)?
        }
        Experiment::SignStudy(c) => run_sign_study(c, seed, writer)?,
        Experiment::EmbedMaxcut(c) => run_embed(c, writer)?,
        Experiment::VerifyReduction(c) => run_verify(c, writer)?,
        Experiment::BenchmarkRandom(c) => run_benchmark(c, seed, writer)?,
    };
    writer
        .finish(experiment, seed, config_value, started.elapsed().as_secs_f64())
        .map_err(numerical)?;
    Ok(())
}

fn load_operator(path: &Path) -> Result<DenseOperator, RunError> {
    let m = read_matrix(path).map_err(invalid)?;
    DenseOperator::from_matrix(m)
        .with_context(|| format!("matrix in {}", path.display()))
        .map_err(invalid)
}

fn run_measure(c: &MeasureCfg, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let op = load_operator(&c.input)?;
    let normalization = if c.raw_sum {
        Normalization::RawSum
    } else {
        Normalization::PerDimension
    };
    let spec = MeasureSpec::new(c.p, normalization)
        .map_err(|e| invalid(e.into()))?;
    let value = nu_p_dense(&op, &spec);
    let mut table = CsvTable::new(&["input", "dim", "p", "normalization", "nu_p"]);
    table.push(vec![
        c.input.display().to_string(),
        op.dim().to_string(),
        fmt_f64(c.p),
        if c.raw_sum { "raw_sum" } else { "per_dimension" }.to_string(),
        fmt_f64(value),
    ]);
    w.write("results.csv", &table.to_string()).map_err(numerical)?;
    println!("nu_{}({}) = {}", c.p, c.input.display(), fmt_f64(value));
    Ok(w)
}

fn run_avgsign(c: &AvgsignCfg, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let op = load_operator(&c.input)?;
    let params = QmcParams::new(c.beta, c.m).map_err(|e| invalid(e.into()))?;
    let sign = average_sign(&op, &params).map_err(|e| numerical(e.into()))?;
    let mut table = CsvTable::new(&[
        "input",
        "beta",
        "m",
        "average_sign",
        "inverse_sign",
        "variance_proxy",
        "diag_condition_ok",
    ]);
    table.push(vec![
        c.input.display().to_string(),
        fmt_f64(c.beta),
        c.m.to_string(),
        fmt_f64(sign.average_sign),
        fmt_f64(1.0 / sign.average_sign),
        fmt_f64(sign.sample_complexity_proxy()),
        sign.diag_condition_ok.to_string(),
    ]);
    w.write("results.csv", &table.to_string()).map_err(numerical)?;
    println!(
        "<sign> = {} (inverse {}, diag condition ok: {})",
        fmt_f64(sign.average_sign),
        fmt_f64(1.0 / sign.average_sign),
        sign.diag_condition_ok
    );
    Ok(w)
}

fn to_core_init(kind: InitKind) -> Init {
    match kind {
        InitKind::Identity => Init::Identity,
        InitKind::PerturbedIdentity => Init::PerturbedIdentity { scale: 0.01 },
        InitKind::HaarRandom => Init::HaarRandom,
    }
}

fn trace_iterations(trace: &OptimizerTrace) -> usize {
    trace.pre_l2.iterations.len()
        + trace.smooth_after_l2.iterations.len()
        + trace.direct_smooth.iterations.len()
}

/// Best-of-restarts hybrid optimization of one term.
fn optimize_restarts(
    term: &TwoSiteTerm,
    alpha: f64,
    init: Init,
    base_seed: u64,
    restarts: usize,
) -> Result<(OrthogonalPoint, OptimizerTrace, u64), RunError> {
    let mut best: Option<(OrthogonalPoint, OptimizerTrace, u64)> = None;
    for r in 0..restarts {
        let seed = splitmix64(base_seed ^ (r as u64).wrapping_mul(0x517C_C1B7_2722_0A95));
        let config = OptimizerConfig {
            init,
            seed,
            smooth_alpha: alpha,
            ..OptimizerConfig::default()
        };
        let (point, trace) = optimize(term, &config).map_err(|e| numerical(e.into()))?;
        if best
            .as_ref()
            .map_or(true, |(_, b, _)| trace.hard_nu1_end < b.hard_nu1_end)
        {
            best = Some((point, trace, seed));
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn run_optimize(c: &OptimizeCfg, master_seed: u64, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let m = read_matrix(&c.input).map_err(invalid)?;
    let term = TwoSiteTerm::new(c.local_dim, m)
        .with_context(|| format!("term in {}", c.input.display()))
        .map_err(invalid)?;
    let nu_identity = effective_local_nu1(&term);

    let mut table = CsvTable::new(&[
        "restart",
        "seed",
        "branch",
        "nu1_window_identity",
        "nu1_window_init",
        "nu1_window_final",
        "iterations",
    ]);
    let mut best: Option<(OrthogonalPoint, f64)> = None;
    for r in 0..c.restarts {
        let seed = splitmix64(master_seed ^ (r as u64).wrapping_mul(0x517C_C1B7_2722_0A95));
        let config = OptimizerConfig {
            init: to_core_init(c.init),
            seed,
            smooth_alpha: c.alpha,
            ..OptimizerConfig::default()
        };
        let (point, trace) = optimize(&term, &config).map_err(|e| numerical(e.into()))?;
        table.push(vec![
            r.to_string(),
            seed.to_string(),
            format!("{:?}", trace.chosen),
            fmt_f64(nu_identity),
            fmt_f64(trace.hard_nu1_start),
            fmt_f64(trace.hard_nu1_end),
            trace_iterations(&trace).to_string(),
        ]);
        if best.as_ref().map_or(true, |(_, b)| trace.hard_nu1_end < *b) {
            best = Some((point, trace.hard_nu1_end));
        }
    }
    let (point, final_nu) = best.expect("restarts >= 1");
    write_matrix(&w.path("o_optimal.txt"), point.matrix()).map_err(numerical)?;
    w.record("o_optimal.txt").map_err(numerical)?;
    w.write("results.csv", &table.to_string()).map_err(numerical)?;
    println!(
        "window measure: {} (computational basis) -> {} (optimized); basis in o_optimal.txt",
        fmt_f64(nu_identity),
        fmt_f64(final_nu)
    );
    Ok(w)
}

enum SweepKind {
    Jmodel,
    Ladder,
}

/// Common shape of the two sweep configs.
struct SweepParams {
    n_rungs: usize,
    beta: f64,
    m: u32,
    alpha: f64,
    restarts: usize,
    axis1: GridAxis,
    axis2: GridAxis,
}

impl From<JmodelSweepCfg> for SweepParams {
    fn from(c: JmodelSweepCfg) -> Self {
        Self {
            n_rungs: c.n_rungs,
            beta: c.beta,
            m: c.m,
            alpha: c.alpha,
            restarts: c.restarts,
            axis1: c.axis1,
            axis2: c.axis2,
        }
    }
}

impl From<LadderSweepCfg> for SweepParams {
    fn from(c: LadderSweepCfg) -> Self {
        Self {
            n_rungs: c.n_rungs,
            beta: c.beta,
            m: c.m,
            alpha: c.alpha,
            restarts: c.restarts,
            axis1: c.axis1,
            axis2: c.axis2,
        }
    }
}

struct SweepRow {
    x1: f64,
    x2: f64,
    seed: u64,
    nu1_before: f64,
    nu1_after: f64,
    sign_before: f64,
    sign_after: f64,
    iterations: usize,
}

fn run_sweep(
    kind: SweepKind,
    p: SweepParams,
    master_seed: u64,
    mut w: RunWriter,
) -> Result<RunWriter, RunError> {
    let v1 = p.axis1.values();
    let v2 = p.axis2.values();
    let params = QmcParams::new(p.beta, p.m).map_err(|e| invalid(e.into()))?;
    let init = match kind {
        // The triangular model explores from a Haar-random basis, the
        // square ladder from a perturbed identity.
        SweepKind::Jmodel => Init::HaarRandom,
        SweepKind::Ladder => Init::PerturbedIdentity { scale: 0.01 },
    };

    let indices: Vec<(usize, usize)> = (0..v1.len())
        .flat_map(|i| (0..v2.len()).map(move |j| (i, j)))
        .collect();
    let rows: Result<Vec<SweepRow>, RunError> = indices
        .par_iter()
        .map(|&(i, j)| -> Result<SweepRow, RunError> {
            let (x1, x2) = (v1[i], v2[j]);
            let model = match kind {
                SweepKind::Jmodel => LadderModel::J0J1J2J3 {
                    j0: 1.0,
                    j1: 1.0,
                    j2: x1,
                    j3: x2,
                },
                SweepKind::Ladder => LadderModel::FrustratedLadder {
                    j_par: 1.0,
                    j_perp: x1,
                    j_cross: x2,
                },
            };
            let spec = build_ladder(&LadderParams {
                model,
                n_rungs: p.n_rungs,
            })
            .map_err(|e| invalid(e.into()))?;
            let term = spec.term().clone();
            let chain = build_chain(&spec).map_err(|e| numerical(e.into()))?;
            let seed = point_seed(master_seed, i as u64, j as u64);
            let (point, trace, _) =
                optimize_restarts(&term, p.alpha, init, seed, p.restarts)?;
            let rotated = conjugate_dense(&chain, &point).map_err(|e| numerical(e.into()))?;
            let sign_before = average_sign(&chain, &params)
                .map_err(|e| numerical(e.into()))?
                .average_sign;
            let sign_after = average_sign(&rotated, &params)
                .map_err(|e| numerical(e.into()))?
                .average_sign;
            Ok(SweepRow {
                x1,
                x2,
                seed,
                nu1_before: nu_p_dense(&chain, &MeasureSpec::l1()),
                nu1_after: nu_p_dense(&rotated, &MeasureSpec::l1()),
                sign_before,
                sign_after,
                iterations: trace_iterations(&trace),
            })
        })
        .collect();
    let rows = rows?;

    let mut table = CsvTable::new(&[
        &p.axis1.name,
        &p.axis2.name,
        "nu1_before",
        "nu1_after",
        "sign_before",
        "sign_after",
        "log_inv_sign_before",
        "log_inv_sign_after",
        "iterations",
        "seed",
    ]);
    let log_inv = |s: f64| (1.0 / s).ln().max(0.0);
    for r in &rows {
        table.push(vec![
            fmt_f64(r.x1),
            fmt_f64(r.x2),
            fmt_f64(r.nu1_before),
            fmt_f64(r.nu1_after),
            fmt_f64(r.sign_before),
            fmt_f64(r.sign_after),
            fmt_f64(log_inv(r.sign_before)),
            fmt_f64(log_inv(r.sign_after)),
            r.iterations.to_string(),
            r.seed.to_string(),
        ]);
    }
    w.write("results.csv", &table.to_string()).map_err(numerical)?;

    // Ratio conventions keep the plot data NaN-free: a point with nothing
    // to improve (zero measure, or no sign problem) reports ratio 1.
    let nu_ratio: Vec<Option<f64>> = rows
        .iter()
        .map(|r| {
            Some(if r.nu1_before > 0.0 {
                r.nu1_after / r.nu1_before
            } else {
                1.0
            })
        })
        .collect();
    let log_ratio: Vec<Option<f64>> = rows
        .iter()
        .map(|r| {
            let before = log_inv(r.sign_before);
            let after = log_inv(r.sign_after);
            Some(if before > 1e-12 { after / before } else { 1.0 })
        })
        .collect();
    write_plot_matrix(
        &w.path("plot_nu1_ratio.txt"),
        "nu1_ratio",
        (&p.axis1.name, &v1),
        (&p.axis2.name, &v2),
        &nu_ratio,
    )
    .map_err(numerical)?;
    w.record("plot_nu1_ratio.txt").map_err(numerical)?;
    write_plot_matrix(
        &w.path("plot_log_inv_sign_ratio.txt"),
        "log_inv_sign_ratio",
        (&p.axis1.name, &v1),
        (&p.axis2.name, &v2),
        &log_ratio,
    )
    .map_err(numerical)?;
    w.record("plot_log_inv_sign_ratio.txt").map_err(numerical)?;

    let improved = rows
        .iter()
        .filter(|r| r.nu1_after < 0.999 * r.nu1_before)
        .count();
    println!(
        "{} grid points; measure improved at {improved} of them",
        rows.len()
    );
    Ok(w)
}

fn run_sign_study(c: &SignStudyCfg, master_seed: u64, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let grid = c.alpha_grid.values();
    let params = QmcParams::new(c.beta, c.m).map_err(|e| invalid(e.into()))?;
    let per_seed: Result<Vec<_>, RunError> = (0..c.n_seeds as u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&s| -> Result<_, RunError> {
            let seed = point_seed(master_seed, s, 0);
            let (_, chain) =
                random_nonstoquastic_chain(c.n_qubits, 2, seed).map_err(|e| numerical(e.into()))?;
            let rows = sign_vs_nonstoq_study(&chain, &grid, &params)
                .map_err(|e| numerical(e.into()))?;
            let nu: Vec<f64> = rows.iter().map(|r| r.nu1).collect();
            let logs: Vec<f64> = rows.iter().map(|r| r.inverse_sign.ln()).collect();
            let rho = spearman_rho(&nu, &logs);
            Ok((s, seed, rows, rho))
        })
        .collect();
    let per_seed = per_seed?;

    let mut table = CsvTable::new(&["instance", "seed", "alpha", "nu1", "inverse_sign"]);
    let mut spearman = CsvTable::new(&["instance", "seed", "spearman_rho"]);
    let mut good = 0usize;
    for (s, seed, rows, rho) in &per_seed {
        for r in rows {
            table.push(vec![
                s.to_string(),
                seed.to_string(),
                fmt_f64(r.alpha),
                fmt_f64(r.nu1),
                fmt_f64(r.inverse_sign),
            ]);
        }
        spearman.push(vec![s.to_string(), seed.to_string(), fmt_f64(*rho)]);
        if *rho >= 0.9 {
            good += 1;
        }
    }
    w.write("results.csv", &table.to_string()).map_err(numerical)?;
    w.write("spearman.csv", &spearman.to_string()).map_err(numerical)?;
    println!(
        "{}/{} instances with Spearman(nu1, log inverse sign) >= 0.9",
        good, c.n_seeds
    );
    Ok(w)
}

fn load_graph(path: &Path) -> Result<MaxCutInstance, RunError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading graph {}", path.display()))
        .map_err(invalid)?;
    MaxCutInstance::from_edge_list(&text)
        .with_context(|| format!("graph in {}", path.display()))
        .map_err(invalid)
}

fn run_embed(c: &EmbedMaxcutCfg, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let g = load_graph(&c.graph)?;
    let inst = embed_maxcut(&g).map_err(|e| invalid(e.into()))?;
    let nu1 = nu1_closed_form(inst.graph()).map_err(|e| numerical(e.into()))?;
    let graph = inst.graph();
    let terms = |map: &std::collections::BTreeMap<(usize, usize), f64>| -> Vec<serde_json::Value> {
        map.iter()
            .map(|(&(i, j), &v)| serde_json::json!([i, j, v]))
            .collect()
    };
    let ancillas: Vec<serde_json::Value> = g
        .edges()
        .map(|e| {
            serde_json::json!({
                "edge": [e.0, e.1],
                "ancilla": inst.ancilla_of(e),
            })
        })
        .collect();
    let embedded = serde_json::json!({
        "n_vertices": g.n_vertices(),
        "n_edges": g.n_edges(),
        "n_qubits": inst.n_qubits(),
        "penalty": inst.penalty(),
        "nu1_computational_basis": nu1,
        "ancillas": ancillas,
        "xx_terms": terms(graph.xx()),
        "zz_terms": terms(graph.zz()),
    });
    w.write("embedded.json", &serde_json::to_string_pretty(&embedded).unwrap())
        .map_err(numerical)?;
    println!(
        "{} vertices, {} edges -> {} qubits, penalty C = {}, computational-basis nu1 = {}",
        g.n_vertices(),
        g.n_edges(),
        inst.n_qubits(),
        fmt_f64(inst.penalty()),
        fmt_f64(nu1)
    );
    Ok(w)
}

fn run_verify(c: &VerifyReductionCfg, mut w: RunWriter) -> Result<RunWriter, RunError> {
    let g = load_graph(&c.graph)?;
    let report = verify_reduction(&g, c.clifford_cap).map_err(|e| numerical(e.into()))?;
    let json = serde_json::json!({
        "n_vertices": report.n_vertices,
        "n_edges": report.n_edges,
        "penalty": report.penalty,
        "ising_ground_energy": report.ising_energy,
        "zflip_min_nu1": report.zflip_min,
        "zflip_argmin": report.zflip_argmin,
        "energy_identity_holds": report.energy_identity_holds,
        "correspondence_holds": report.correspondence_holds,
        "clifford_min_nu1": report.clifford_min,
        "clifford_matches_zflip": report.clifford_matches_zflip,
    });
    w.write("report.json", &serde_json::to_string_pretty(&json).unwrap())
        .map_err(numerical)?;
    println!(
        "ising ground energy {} | z-flip minimum nu1 {} | identity (E+e)/2: {}",
        report.ising_energy,
        fmt_f64(report.zflip_min),
        if report.energy_identity_holds { "ok" } else { "FAILED" }
    );
    println!(
        "cut correspondence: {} | Clifford orbit: {}",
        if report.correspondence_holds { "ok" } else { "FAILED" },
        match (report.clifford_min, report.clifford_matches_zflip) {
            (Some(v), Some(true)) => format!("minimum {} matches z-flips", fmt_f64(v)),
            (Some(v), Some(false)) => format!("minimum {} DIFFERS from z-flips", fmt_f64(v)),
            _ => "skipped (above qubit cap)".to_string(),
        }
    );
    if report.all_hold() {
        Ok(w)
    } else {
        Err(numerical(anyhow::anyhow!(
            "reduction checks failed; see report.json"
        )))
    }
}

fn run_benchmark(
    c: &BenchmarkRandomCfg,
    master_seed: u64,
    mut w: RunWriter,
) -> Result<RunWriter, RunError> {
    let results: Result<Vec<_>, RunError> = (0..c.instances as u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| -> Result<_, RunError> {
            let seed = point_seed(master_seed, k, 1);
            let (h, _) = random_stoquastic_instance(c.local_dim, seed);
            let scale = max_abs(h.matrix());
            let config = OptimizerConfig {
                init: Init::HaarRandom,
                seed: splitmix64(seed),
                smooth_alpha: c.alpha,
                ..OptimizerConfig::default()
            };
            let (_, trace) = optimize(&h, &config).map_err(|e| numerical(e.into()))?;
            let recovered = trace.hard_nu1_end <= c.threshold * scale;
            Ok((k, seed, scale, trace, recovered))
        })
        .collect();
    let results = results?;

    let mut table = CsvTable::new(&[
        "instance",
        "seed",
        "local_dim",
        "scale",
        "nu1_window_start",
        "nu1_window_final",
        "recovered",
        "iterations",
    ]);
    let mut recovered_count = 0usize;
    for (k, seed, scale, trace, recovered) in &results {
        table.push(vec![
            k.to_string(),
            seed.to_string(),
            c.local_dim.to_string(),
            fmt_f64(*scale),
            fmt_f64(trace.hard_nu1_start),
            fmt_f64(trace.hard_nu1_end),
            (*recovered as u8).to_string(),
            trace_iterations(trace).to_string(),
        ]);
        if *recovered {
            recovered_count += 1;
        }
    }
    w.write("results.csv", &table.to_string()).map_err(numerical)?;
    println!(
        "recovered a stoquastic basis for {recovered_count}/{} instances (d = {}, threshold {} * max|h|)",
        c.instances, c.local_dim, c.threshold
    );
    Ok(w)
}
