//! Experiment configuration: JSON-loadable, flag-overridable, and stored in
//! full in the run manifest.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

fn d_one() -> f64 {
    1.0
}
fn d_hundred() -> u32 {
    100
}
fn d_m() -> u32 {
    100
}
fn d_beta() -> f64 {
    1.0
}
fn d_alpha_bench() -> f64 {
    50.0
}
fn d_alpha_jmodel() -> f64 {
    100.0
}
fn d_alpha_ladder() -> f64 {
    40.0
}
fn d_restarts() -> usize {
    1
}
fn d_rungs() -> usize {
    4
}
fn d_instances() -> usize {
    100
}
fn d_local_dim() -> usize {
    2
}
fn d_threshold() -> f64 {
    1e-5
}
fn d_n_qubits() -> usize {
    5
}
fn d_n_seeds() -> usize {
    50
}
fn d_clifford_cap() -> usize {
    8
}
fn d_jmodel_axis1() -> GridAxis {
    GridAxis {
        name: "j2_over_j".into(),
        min: 0.0,
        max: 2.0,
        steps: 21,
    }
}
fn d_jmodel_axis2() -> GridAxis {
    GridAxis {
        name: "j3_over_j".into(),
        min: 0.0,
        max: 2.0,
        steps: 21,
    }
}
fn d_ladder_axis1() -> GridAxis {
    GridAxis {
        name: "j_perp_over_j_par".into(),
        min: 0.0,
        max: 2.0,
        steps: 21,
    }
}
fn d_ladder_axis2() -> GridAxis {
    GridAxis {
        name: "j_cross_over_j_par".into(),
        min: 0.0,
        max: 2.0,
        steps: 21,
    }
}
fn d_alpha_axis() -> GridAxis {
    GridAxis {
        name: "alpha".into(),
        min: 0.5,
        max: 20.0,
        steps: 20,
    }
}

/// One sweep axis: `steps` evenly spaced values on [min, max].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.steps == 0 {
            anyhow::bail!("grid axis {} has zero steps", self.name);
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            anyhow::bail!("grid axis {} has non-finite bounds", self.name);
        }
        Ok(())
    }
}

/// Initial-point choice exposed on the command line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Identity,
    #[default]
    PerturbedIdentity,
    HaarRandom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureCfg {
    pub input: PathBuf,
    #[serde(default = "d_one")]
    pub p: f64,
    /// Report the raw entry sum instead of dividing by the dimension.
    #[serde(default)]
    pub raw_sum: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AvgsignCfg {
    pub input: PathBuf,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_m")]
    pub m: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeCfg {
    /// Whitespace-separated d^2 x d^2 matrix of the two-site term.
    pub input: PathBuf,
    pub local_dim: usize,
    #[serde(default = "d_alpha_bench")]
    pub alpha: f64,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub init: InitKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JmodelSweepCfg {
    #[serde(default = "d_rungs")]
    pub n_rungs: usize,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_m")]
    pub m: u32,
    #[serde(default = "d_alpha_jmodel")]
    pub alpha: f64,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_jmodel_axis1")]
    pub axis1: GridAxis,
    #[serde(default = "d_jmodel_axis2")]
    pub axis2: GridAxis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSweepCfg {
    #[serde(default = "d_rungs")]
    pub n_rungs: usize,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_m")]
    pub m: u32,
    #[serde(default = "d_alpha_ladder")]
    pub alpha: f64,
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_ladder_axis1")]
    pub axis1: GridAxis,
    #[serde(default = "d_ladder_axis2")]
    pub axis2: GridAxis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignStudyCfg {
    #[serde(default = "d_n_qubits")]
    pub n_qubits: usize,
    #[serde(default = "d_n_seeds")]
    pub n_seeds: usize,
    #[serde(default = "d_beta")]
    pub beta: f64,
    #[serde(default = "d_hundred")]
    pub m: u32,
    #[serde(default = "d_alpha_axis")]
    pub alpha_grid: GridAxis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedMaxcutCfg {
    /// Edge-list text file, one `i j` pair per line.
    pub graph: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReductionCfg {
    pub graph: PathBuf,
    #[serde(default = "d_clifford_cap")]
    pub clifford_cap: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkRandomCfg {
    #[serde(default = "d_local_dim")]
    pub local_dim: usize,
    #[serde(default = "d_instances")]
    pub instances: usize,
    #[serde(default = "d_alpha_bench")]
    pub alpha: f64,
    /// Success when the final window measure is below
    /// `threshold * max|h|` of the instance.
    #[serde(default = "d_threshold")]
    pub threshold: f64,
}

/// Which experiment to run, with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Measure(MeasureCfg),
    Avgsign(AvgsignCfg),
    Optimize(OptimizeCfg),
    JmodelSweep(JmodelSweepCfg),
    LadderSweep(LadderSweepCfg),
    SignStudy(SignStudyCfg),
    EmbedMaxcut(EmbedMaxcutCfg),
    VerifyReduction(VerifyReductionCfg),
    BenchmarkRandom(BenchmarkRandomCfg),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Measure(_) => "measure",
            Experiment::Avgsign(_) => "avgsign",
            Experiment::Optimize(_) => "optimize",
            Experiment::JmodelSweep(_) => "jmodel_sweep",
            Experiment::LadderSweep(_) => "ladder_sweep",
            Experiment::SignStudy(_) => "sign_study",
            Experiment::EmbedMaxcut(_) => "embed_maxcut",
            Experiment::VerifyReduction(_) => "verify_reduction",
            Experiment::BenchmarkRandom(_) => "benchmark_random",
        }
    }
}

fn d_out() -> PathBuf {
    PathBuf::from("out")
}

/// Fully resolved run description: experiment, master seed, output paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match &self.experiment {
            Experiment::Measure(c) => {
                if !(c.p >= 1.0) {
                    anyhow::bail!("norm order must satisfy p >= 1, got {}", c.p);
                }
            }
            Experiment::Avgsign(c) => {
                if !(c.beta >= 0.0) || c.m == 0 {
                    anyhow::bail!("avgsign needs beta >= 0 and m >= 1");
                }
            }
            Experiment::Optimize(c) => {
                if c.local_dim < 2 || c.restarts == 0 || !(c.alpha > 0.0) {
                    anyhow::bail!("optimize needs local_dim >= 2, restarts >= 1, alpha > 0");
                }
            }
            Experiment::JmodelSweep(c) => {
                c.axis1.validate()?;
                c.axis2.validate()?;
                if c.n_rungs < 3 || c.restarts == 0 {
                    anyhow::bail!("sweep needs n_rungs >= 3 and restarts >= 1");
                }
            }
            Experiment::LadderSweep(c) => {
                c.axis1.validate()?;
                c.axis2.validate()?;
                if c.n_rungs < 3 || c.restarts == 0 {
                    anyhow::bail!("sweep needs n_rungs >= 3 and restarts >= 1");
                }
            }
            Experiment::SignStudy(c) => {
                c.alpha_grid.validate()?;
                if c.n_qubits < 3 || c.n_seeds == 0 {
                    anyhow::bail!("sign study needs n_qubits >= 3 and n_seeds >= 1");
                }
            }
            Experiment::EmbedMaxcut(_) => {}
            Experiment::VerifyReduction(_) => {}
            Experiment::BenchmarkRandom(c) => {
                if c.local_dim < 2 || c.instances == 0 || !(c.threshold > 0.0) {
                    anyhow::bail!(
                        "benchmark needs local_dim >= 2, instances >= 1, threshold > 0"
                    );
                }
            }
        }
        Ok(())
    }

    /// Apply a `--grid name=min:max:steps` override to the named axis.
    pub fn apply_grid_override(&mut self, spec: &str) -> anyhow::Result<()> {
        let (name, axis) = parse_grid_spec(spec)?;
        let slots: Vec<&mut GridAxis> = match &mut self.experiment {
            Experiment::JmodelSweep(c) => vec![&mut c.axis1, &mut c.axis2],
            Experiment::LadderSweep(c) => vec![&mut c.axis1, &mut c.axis2],
            Experiment::SignStudy(c) => vec![&mut c.alpha_grid],
            _ => anyhow::bail!("--grid applies only to sweeps and the sign study"),
        };
        for slot in slots {
            if slot.name == name {
                *slot = GridAxis { name, ..axis };
                return Ok(());
            }
        }
        anyhow::bail!("no grid axis named {name:?} in this experiment");
    }
}

/// Parse `name=min:max:steps`.
pub fn parse_grid_spec(spec: &str) -> anyhow::Result<(String, GridAxis)> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| anyhow::anyhow!("grid spec must look like name=min:max:steps"))?;
    let parts: Vec<&str> = rest.split(':').collect();
    if parts.len() != 3 {
        anyhow::bail!("grid spec must look like name=min:max:steps, got {spec:?}");
    }
    let min: f64 = parts[0].parse()?;
    let max: f64 = parts[1].parse()?;
    let steps: usize = parts[2].parse()?;
    let axis = GridAxis {
        name: name.to_string(),
        min,
        max,
        steps,
    };
    axis.validate()?;
    Ok((name.to_string(), axis))
}
