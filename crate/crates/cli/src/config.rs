//! JSON run configuration. Unknown fields are rejected everywhere.

use std::path::Path;
use std::sync::Arc;

use drbsde::problem::{AffineGenerator, DiscountingGenerator, Generator, LinearGenerator, ZeroGenerator};
use drbsde::solver::{PenaltySchedule, PenaltyScheme, PicardConfig};
use drbsde::stochastic::{BasisConfig, MarketSpec, StateTransform};
use drbsde::{ProblemData, StateFn};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    #[serde(default)]
    pub weights: WeightsSection,
    #[serde(default)]
    pub engine: EngineSection,
    /// Black–Scholes state process; a standard Brownian motion when absent.
    #[serde(default)]
    pub market: Option<MarketSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Second problem for `compare`; solved on the same backend as `problem`.
    #[serde(default)]
    pub compare: Option<CompareSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub terminal: Payoff,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub lower: Option<Payoff>,
    #[serde(default)]
    pub upper: Option<Payoff>,
    /// Require `L < U` rather than `L <= U`.
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub problem: ProblemSection,
}

/// Payoff and barrier catalog, as functions of the state `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Payoff {
    Constant {
        value: f64,
    },
    /// `(strike - x)⁺ + shift`.
    Put {
        strike: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `(x - strike)⁺ + shift`.
    Call {
        strike: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `((strike - x) + sqrt((strike - x)² + eta²)) / 2 + shift`: a put smoothed at the strike.
    SmoothPut {
        strike: f64,
        eta: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `intercept + slope · x`.
    Linear {
        intercept: f64,
        slope: f64,
    },
}

/// Generator catalog.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    #[default]
    Zero,
    /// `f = rate · y`.
    Linear { rate: f64 },
    /// `f = c0 + cy · y + cz · z`.
    Affine {
        c0: f64,
        cy: f64,
        #[serde(default)]
        cz: Vec<f64>,
    },
    /// `f = -rate · y`.
    Discounting { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    /// Constant `μ`; the generator's envelope when absent.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_eps() -> f64 {
    drbsde::weights::DEFAULT_EPS
}

fn default_beta() -> f64 {
    drbsde::weights::DEFAULT_BETA
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self {
            mu: None,
            gamma: None,
            eps: default_eps(),
            beta: default_beta(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Lattice,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Bsde,
    #[default]
    Clamped,
    Penalized,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub solver: SolverChoice,
    /// Penalty level for `solver = penalized`.
    #[serde(default = "default_penalty")]
    pub penalty: u64,
    #[serde(default)]
    pub scheme: PenaltyScheme,
    /// Levels for `converge`.
    #[serde(default = "default_schedule")]
    pub schedule: Vec<u64>,
    #[serde(default)]
    pub picard: PicardSection,
    #[serde(default)]
    pub basis: BasisSection,
}

fn default_penalty() -> u64 {
    64
}

fn default_schedule() -> Vec<u64> {
    vec![16, 32, 64, 128, 256]
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            backend: BackendKind::default(),
            solver: SolverChoice::default(),
            penalty: default_penalty(),
            scheme: PenaltyScheme::default(),
            schedule: default_schedule(),
            picard: PicardSection::default(),
            basis: BasisSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    25
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            beta: default_beta(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    /// Defaults to `log` on a market state, `identity` on a Brownian one.
    #[serde(default)]
    pub transform: Option<StateTransform>,
    #[serde(default = "default_degree")]
    pub degree: usize,
}

fn default_degree() -> usize {
    3
}

impl Default for BasisSection {
    fn default() -> Self {
        Self {
            transform: None,
            degree: default_degree(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSection {
    pub s0: f64,
    pub rate: f64,
    #[serde(default)]
    pub premium: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_paths() -> usize {
    10_000
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            n_paths: default_paths(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> String {
    "out".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: default_dir(),
            formats: default_formats(),
        }
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            CliError::Config(format!(
                "{} at line {} column {} (field `{}`)",
                strip_position(&inner.to_string()),
                inner.line(),
                inner.column(),
                e.path()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: &str| Err(CliError::Config(format!("field `{field}`: {msg}")));
        if !(self.grid.horizon > 0.0 && self.grid.horizon.is_finite()) {
            return bad("grid.horizon", "must be positive and finite");
        }
        if self.grid.steps == 0 {
            return bad("grid.steps", "must be at least 1");
        }
        if !(self.weights.eps > 0.0) {
            return bad("weights.eps", "must be positive");
        }
        if !(self.weights.beta >= 0.0) {
            return bad("weights.beta", "must be nonnegative");
        }
        for (name, v) in [("weights.mu", self.weights.mu), ("weights.gamma", self.weights.gamma)] {
            if v.is_some_and(|v| !(v >= 0.0)) {
                return bad(name, "must be nonnegative");
            }
        }
        if self.engine.penalty == 0 {
            return bad("engine.penalty", "must be positive");
        }
        if PenaltySchedule::new(self.engine.schedule.clone()).is_err() {
            return bad("engine.schedule", "must be strictly increasing positive integers");
        }
        let p = &self.engine.picard;
        if PicardConfig::new(p.tol, p.max_iter, p.beta).is_err() {
            return bad("engine.picard", "needs tol > 0, max_iter >= 1 and beta > 5");
        }
        if self.engine.basis.degree > drbsde::stochastic::MAX_DEGREE {
            return bad("engine.basis.degree", "at most 15");
        }
        if self.simulation.n_paths == 0 {
            return bad("simulation.n_paths", "must be positive");
        }
        if let Some(m) = &self.market {
            if !(m.s0 > 0.0) {
                return bad("market.s0", "must be positive");
            }
            if !(m.sigma >= 0.0) {
                return bad("market.sigma", "must be nonnegative");
            }
        }
        if self.output.formats.is_empty() {
            return bad("output.formats", "must not be empty");
        }
        for (name, section) in std::iter::once(("problem", &self.problem))
            .chain(self.compare.as_ref().map(|c| ("compare.problem", &c.problem)))
        {
            section.validate(name)?;
        }
        Ok(())
    }

    pub fn market_spec(&self) -> Option<MarketSpec<f64>> {
        self.market.as_ref().map(|m| MarketSpec::constant(m.s0, m.rate, m.premium, m.sigma))
    }

    pub fn basis(&self) -> BasisConfig {
        let fallback = if self.market.is_some() { StateTransform::Log } else { StateTransform::Identity };
        BasisConfig {
            transform: self.engine.basis.transform.unwrap_or(fallback),
            degree: self.engine.basis.degree,
        }
    }

    pub fn picard(&self) -> PicardConfig<f64> {
        let p = &self.engine.picard;
        PicardConfig {
            tol: p.tol,
            max_iter: p.max_iter,
            beta: p.beta,
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

/// serde_json appends " at line L column C"; the caller re-adds it with the field path.
fn strip_position(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |i| &msg[..i])
}

impl ProblemSection {
    fn validate(&self, name: &str) -> Result<(), CliError> {
        let payoffs = std::iter::once(("terminal", Some(&self.terminal)))
            .chain([("lower", self.lower.as_ref()), ("upper", self.upper.as_ref())]);
        for (field, p) in payoffs {
            if let Some(Payoff::SmoothPut { eta, .. }) = p {
                if !(*eta > 0.0) {
                    return Err(CliError::Config(format!("field `{name}.{field}.eta`: must be positive")));
                }
            }
        }
        if let GeneratorSpec::Affine { cz, .. } = &self.generator {
            if cz.len() > 1 {
                return Err(CliError::Config(format!(
                    "field `{name}.generator.cz`: the state process is one-dimensional"
                )));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> ProblemData<f64> {
        let mut p = ProblemData::new(self.terminal.state_fn(), self.generator.build());
        if let Some(l) = &self.lower {
            p = p.with_lower(l.state_fn());
        }
        if let Some(u) = &self.upper {
            p = p.with_upper(u.state_fn());
        }
        if self.strict {
            p = p.strict();
        }
        p
    }
}

impl Payoff {
    pub fn state_fn(&self) -> StateFn<f64> {
        match *self {
            Payoff::Constant { value } => StateFn::constant(value),
            Payoff::Put { strike, shift } => StateFn::new(move |_, x: f64| (strike - x).max(0.0) + shift),
            Payoff::Call { strike, shift } => StateFn::new(move |_, x: f64| (x - strike).max(0.0) + shift),
            Payoff::SmoothPut { strike, eta, shift } => StateFn::new(move |_, x: f64| {
                let m = strike - x;
                0.5 * (m + (m * m + eta * eta).sqrt()) + shift
            }),
            Payoff::Linear { intercept, slope } => StateFn::new(move |_, x: f64| intercept + slope * x),
        }
    }
}

impl GeneratorSpec {
    pub fn build(&self) -> Arc<dyn Generator<f64>> {
        match self {
            GeneratorSpec::Zero => Arc::new(ZeroGenerator),
            GeneratorSpec::Linear { rate } => Arc::new(LinearGenerator { rate: *rate }),
            GeneratorSpec::Affine { c0, cy, cz } => Arc::new(AffineGenerator {
                c0: *c0,
                cy: *cy,
                cz: if cz.is_empty() { vec![0.0] } else { cz.clone() },
            }),
            GeneratorSpec::Discounting { rate } => Arc::new(DiscountingGenerator {
                rate: drbsde::problem::Curve::constant(*rate),
            }),
        }
    }
}
