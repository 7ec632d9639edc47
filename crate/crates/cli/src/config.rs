//! Run configuration: a TOML file mirroring the library's types, plus
//! command-line overrides.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use crackq::ansatz::CostKind;
use crackq::optimize::OptimizerConfig;
use crackq::problem::{Model, ProblemSpec};
use crackq::qsim::{ShotConfig, Shots};
use crackq::remesh::{CascadeSchedule, LayoutMode, StageConfig};

/// Whole-run configuration; every block has defaults so an empty file is a
/// valid config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; per-component seeds derive from it.
    pub seed: u64,
    /// Output directory.
    pub out: PathBuf,
    pub problem: ProblemBlock,
    pub vqa: VqaBlock,
    pub schedule: ScheduleBlock,
    pub optimizer: OptimizerBlock,
    pub shots: ShotsBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            problem: ProblemBlock::default(),
            vqa: VqaBlock::default(),
            schedule: ScheduleBlock::default(),
            optimizer: OptimizerBlock::default(),
            shots: ShotsBlock::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemBlock {
    pub n_x: usize,
    pub n_y: usize,
    pub nu: f64,
    pub width: f64,
    pub height: f64,
    pub load_density: f64,
    pub model: Model,
}

impl Default for ProblemBlock {
    fn default() -> Self {
        Self {
            n_x: 2,
            n_y: 2,
            nu: 0.3,
            width: 1.0,
            height: 1.0,
            load_density: 1.0,
            model: Model::HalfPlateCrack,
        }
    }
}

impl ProblemBlock {
    pub fn to_spec(&self) -> anyhow::Result<ProblemSpec> {
        let spec = ProblemSpec {
            n_x: self.n_x,
            n_y: self.n_y,
            nu: self.nu,
            width: self.width,
            height: self.height,
            load_density: self.load_density,
            model: self.model,
        };
        spec.validate().context("invalid [problem] block")?;
        Ok(spec)
    }
}

/// Single-mesh VQA settings (`vqa-run`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqaBlock {
    pub layers: usize,
    pub cost: CostKind,
    /// Independent seeded restarts; the best result is reported.
    pub restarts: usize,
}

impl Default for VqaBlock {
    fn default() -> Self {
        Self { layers: 6, cost: CostKind::Quotient, restarts: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleBlock {
    /// Explicit stage list; empty means "derive a 2-stage schedule from the
    /// problem size and the [vqa] block".
    pub stages: Vec<StageBlock>,
    pub layout: LayoutMode,
    pub ghz_new_wires: bool,
    /// Perturbation spread for warm-started stages.
    pub warm_spread: f64,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        Self {
            stages: Vec::new(),
            layout: LayoutMode::Swap,
            ghz_new_wires: false,
            warm_spread: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageBlock {
    pub qubits: usize,
    pub layers: usize,
    pub max_iterations: usize,
    pub cost: CostKind,
}

impl ScheduleBlock {
    pub fn to_schedule(&self, spec: &ProblemSpec, vqa: &VqaBlock) -> anyhow::Result<CascadeSchedule> {
        let stages = if self.stages.is_empty() {
            (0..2)
                .map(|k| StageConfig {
                    qubits: spec.n() + 2 * k,
                    layers: vqa.layers,
                    max_iterations: 120,
                    cost: vqa.cost,
                })
                .collect()
        } else {
            self.stages
                .iter()
                .map(|s| StageConfig {
                    qubits: s.qubits,
                    layers: s.layers,
                    max_iterations: s.max_iterations,
                    cost: s.cost,
                })
                .collect()
        };
        let schedule = CascadeSchedule {
            stages,
            layout: self.layout,
            ghz_new_wires: self.ghz_new_wires,
        };
        schedule.validate(2).context("invalid [schedule] block")?;
        if schedule.stages[0].qubits != spec.n() {
            bail!(
                "first stage declares {} qubits but the problem has {}",
                schedule.stages[0].qubits,
                spec.n()
            );
        }
        Ok(schedule)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerBlock {
    pub max_iterations: usize,
    pub absolute_tolerance: f64,
    pub relative_tolerance: f64,
    pub initial_spread: f64,
}

impl Default for OptimizerBlock {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            max_iterations: d.max_iterations,
            absolute_tolerance: d.absolute_tolerance,
            relative_tolerance: d.relative_tolerance,
            // cold starts need a wide perturbation around the identity
            // reference; warm-started cascade stages use `warm_spread`
            initial_spread: 0.8,
        }
    }
}

impl OptimizerBlock {
    pub fn to_config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.max_iterations,
            absolute_tolerance: self.absolute_tolerance,
            relative_tolerance: self.relative_tolerance,
            seed,
            initial_spread: self.initial_spread,
        }
    }
}

/// Either the literal string "exact" or a shot count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShotsSpec {
    Count(u64),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotsBlock {
    pub shots: ShotsSpec,
    pub mitigation_threshold: Option<f64>,
}

impl Default for ShotsBlock {
    fn default() -> Self {
        Self { shots: ShotsSpec::Name("exact".into()), mitigation_threshold: None }
    }
}

impl ShotsBlock {
    pub fn to_config(&self, seed: u64) -> anyhow::Result<ShotConfig> {
        let shots = match &self.shots {
            ShotsSpec::Count(c) => Shots::Count(*c),
            ShotsSpec::Name(name) if name == "exact" => Shots::Exact,
            ShotsSpec::Name(other) => bail!("unknown shots mode {other:?}; use \"exact\" or a count"),
        };
        Ok(ShotConfig {
            shots,
            // distinct stream from the optimizer's
            seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
            mitigation_threshold: self.mitigation_threshold,
        })
    }
}

/// Parses the shots CLI flag: `exact` or an integer count.
pub fn parse_shots_flag(raw: &str) -> anyhow::Result<ShotsSpec> {
    if raw == "exact" {
        Ok(ShotsSpec::Name("exact".into()))
    } else {
        let count: u64 = raw
            .parse()
            .with_context(|| format!("--shots expects \"exact\" or an integer, got {raw:?}"))?;
        Ok(ShotsSpec::Count(count))
    }
}

impl RunConfig {
    /// Loads a TOML config file, or the defaults when no path is given.
    pub fn load(path: Option<&std::path::Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}
