//! Experiment configuration files.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use hkbounds::geometry::ModelId;
use hkbounds::harnack::EnvelopeConsts;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    DensityEval,
    ValueFn,
    Chain,
    CcDistance,
    Verify,
    CalibrateHjb,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Simulate,
        Command::DensityEval,
        Command::ValueFn,
        Command::Chain,
        Command::CcDistance,
        Command::Verify,
        Command::CalibrateHjb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::DensityEval => "density-eval",
            Command::ValueFn => "value-fn",
            Command::Chain => "chain",
            Command::CcDistance => "cc-distance",
            Command::Verify => "verify",
            Command::CalibrateHjb => "calibrate-hjb",
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown command {s:?}")))
    }
}

/// Top level of every config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// JSON schema every config file must satisfy.
pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

fn validator() -> &'static jsonschema::Validator {
    static V: OnceLock<jsonschema::Validator> = OnceLock::new();
    V.get_or_init(|| {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("schema is valid JSON");
        jsonschema::validator_for(&schema).expect("schema compiles")
    })
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validates against [`SCHEMA`] first, then deserializes.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(err) = validator().iter_errors(&raw).next() {
            return Err(CliError::Config(format!("{} at {}", err, err.instance_path())));
        }
        let cfg: ExperimentConfig = serde_json::from_value(raw).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.command.parse::<Command>()?;
        if !cfg.params.is_object() {
            return Err(CliError::Config("params must be an object".into()));
        }
        Ok(cfg)
    }

    pub fn command(&self) -> Command {
        self.command.parse().expect("validated on load")
    }

    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(self.params.clone()).map_err(|e| CliError::Config(format!("params: {e}")))
    }

    pub fn model(&self) -> Result<ModelId, CliError> {
        let name = self.model.as_deref().ok_or_else(|| CliError::Config(format!("{} needs a model", self.command)))?;
        parse_model(name)
    }

    pub fn set_seed(&mut self, seed: u64) -> bool {
        let samples = matches!(self.command(), Command::Simulate | Command::Verify);
        match self.params.as_object_mut() {
            Some(map) if samples => {
                map.insert("seed".into(), seed.into());
                true
            }
            _ => false,
        }
    }
}

/// `heatN`, `heisenberg`, `kolmogorov`, `iteratedN`, `quadratic`, `asian`.
pub fn parse_model(name: &str) -> Result<ModelId, CliError> {
    let sized = |prefix: &str| name.strip_prefix(prefix).and_then(|n| n.parse::<usize>().ok());
    let model = match name {
        "heisenberg" => ModelId::Heisenberg,
        "kolmogorov" => ModelId::Kolmogorov,
        "quadratic" => ModelId::QuadraticLifted,
        "asian" => ModelId::Asian,
        _ => match (sized("heat"), sized("iterated")) {
            (Some(n), _) => ModelId::Heat(n),
            (_, Some(n)) => ModelId::IteratedKolmogorov(n),
            _ => return Err(CliError::Config(format!("unknown model {name:?}"))),
        },
    };
    model.validate()?;
    Ok(model)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Consts {
    pub amplitude: f64,
    pub rate: f64,
}

impl From<Consts> for EnvelopeConsts {
    fn from(c: Consts) -> Self {
        EnvelopeConsts::new(c.amplitude, c.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsianSchemeCfg {
    Euler,
    LogExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YorCfg {
    Operator,
    UnitDiffusion,
    DensityFormula,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub z0: Vec<f64>,
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    /// Euler–Maruyama step; exact sampling when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub asian_scheme: Option<AsianSchemeCfg>,
    #[serde(default)]
    pub yor: Option<YorCfg>,
    #[serde(default)]
    pub levy_area: Option<bool>,
    #[serde(default)]
    pub diffusion_scale: Option<f64>,
    /// Also write every endpoint to `endpoints.csv`.
    #[serde(default)]
    pub endpoints_csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// Points `[x, y, t, ξ, η, τ]`.
    Gamma0,
    /// Points `[x, y, t, ξ, η, τ]`.
    Psi0,
    /// Points `[x, y, t, x₀, y₀]`.
    Yor,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityEvalParams {
    pub kernel: Kernel,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueFnParams {
    /// `[x₁, y₁, t₁, x₀, y₀, t₀]`, start then end.
    pub points: Vec<[f64; 6]>,
    /// Adds an HJB residual column with this step.
    #[serde(default)]
    pub fd_step: Option<f64>,
    /// Adds the branch given by the literal printed thresholds.
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Parabolic,
    KolmogorovOptimal,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParamsCfg {
    pub kind: ChainKind,
    /// Space coordinates followed by time.
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Value at the last chain point; adds the certified lower bound.
    #[serde(default)]
    pub u_known: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverCfg {
    #[default]
    Auto,
    Shooting,
    BruteForce,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcDistanceParams {
    /// `[p₁, p₂, p₃, q₁, q₂, q₃]`.
    pub pairs: Vec<[f64; 6]>,
    #[serde(default)]
    pub solver: SolverCfg,
    #[serde(default = "default_intervals")]
    pub intervals: usize,
}

fn default_intervals() -> usize {
    20
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisCfg {
    pub column: usize,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCfg {
    pub seed: u64,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_min_count() -> u64 {
    30
}

fn default_margin() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeCfg {
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub z0: Vec<f64>,
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub dt: Option<f64>,
    pub grid: Vec<AxisCfg>,
    #[serde(default)]
    pub lower: Option<Consts>,
    #[serde(default)]
    pub upper: Option<Consts>,
    /// Fit the constants on a second batch instead of taking them as given.
    #[serde(default)]
    pub fit: Option<FitCfg>,
    /// Only cells whose shape feature is at most this are checked.
    #[serde(default)]
    pub feature_max: Option<f64>,
    #[serde(default)]
    pub unit_volume: Option<VolumeCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateParams {
    #[serde(default)]
    pub fd_step: Option<f64>,
}
