//! Scenario files: parsing, validation and construction of the process.
//!
//! Scenarios are TOML documents; JSON with the same structure is accepted
//! when the file name ends in `.json`. Rates of waiting-time distributions
//! are given in units of `wtd.scale`, grid times in units of `1 / scale`.

use std::path::Path;

use qrenewal::{
    laplace::Ordering, DensityMatrix, DysonOptions, LindbladGenerator, ModifiedWtdSequence, Representation,
    RenewalSpec, SuperOp, WaitingTime,
};
use qrenewal::linalg::{CMat, C64};
use serde::Deserialize;

use crate::error::{invalid, CliError, CliResult};

const BUNDLED: [(&str, &str); 6] = [
    ("fig3a", include_str!("../scenarios/fig3a.toml")),
    ("fig3b", include_str!("../scenarios/fig3b.toml")),
    ("fig4a", include_str!("../scenarios/fig4a.toml")),
    ("fig4b", include_str!("../scenarios/fig4b.toml")),
    ("smoke", include_str!("../scenarios/smoke.toml")),
    ("corrupted", include_str!("../scenarios/corrupted.toml")),
];

/// Names of the scenarios shipped with the binary.
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default = "default_dim")]
    dim: usize,
    generator: RawGenerator,
    #[serde(default)]
    jump: Vec<RawChannel>,
    wtd: RawWtds,
    #[serde(default)]
    ordering: RawOrdering,
    #[serde(default)]
    companion: Companion,
    #[serde(default)]
    initial_state: Option<RawState>,
    grid: RawGrid,
    #[serde(default = "default_methods")]
    methods: Vec<Method>,
    #[serde(default)]
    montecarlo: RawMonteCarlo,
    #[serde(default)]
    dyson: RawDyson,
    #[serde(default)]
    allow_non_cp: bool,
}

fn default_dim() -> usize {
    2
}

fn default_methods() -> Vec<Method> {
    vec![Method::Laplace]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    /// Decay rates of the three Pauli coordinates.
    rates: Option<[f64; 3]>,
    hamiltonian: Option<RawMatrix>,
    #[serde(default)]
    dissipators: Vec<RawDissipator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDissipator {
    operator: RawMatrix,
    rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawChannel {
    Identity,
    AmplitudeDamping { gamma: f64 },
    PauliX,
    Dephasing {
        #[serde(default = "one")]
        p: f64,
    },
    Depolarizing,
    /// `(1 - p) id + p T`; not completely positive for `p > 0`.
    TransposeMix { p: f64 },
    Kraus { operators: Vec<RawMatrix> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWtds {
    #[serde(default = "one")]
    scale: f64,
    #[serde(default)]
    base: Option<RawWtd>,
    /// Exponential modified intervals with these rates.
    ratios: Option<Vec<f64>>,
    modified: Option<Vec<RawWtd>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawWtd {
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    Hypoexponential { rates: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawOrdering {
    #[default]
    Forward,
    Inverse,
}

/// Second curve emitted next to the scenario's own.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Companion {
    #[default]
    None,
    /// Same process with no modified intervals.
    Unmodified,
    /// Same process in the other ordering.
    Reordered,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawState {
    Bloch([f64; 3]),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    t_min: f64,
    t_max: f64,
    n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Laplace,
    Dyson,
    #[serde(alias = "monte_carlo")]
    Montecarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Laplace => "laplace",
            Method::Dyson => "dyson",
            Method::Montecarlo => "montecarlo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "laplace" => Some(Method::Laplace),
            "dyson" => Some(Method::Dyson),
            "montecarlo" | "monte_carlo" | "mc" => Some(Method::Montecarlo),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    #[serde(default = "default_trajectories")]
    n: usize,
    #[serde(default = "default_seed")]
    seed: u64,
}

impl Default for RawMonteCarlo {
    fn default() -> Self {
        Self { n: default_trajectories(), seed: default_seed() }
    }
}

fn default_trajectories() -> usize {
    100_000
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDyson {
    tolerance: Option<f64>,
    n_max: Option<usize>,
    #[serde(default)]
    representation: RawRepresentation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawRepresentation {
    #[default]
    WaitingTime,
    Sprinkling,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn parse(s: &str) -> CliResult<Self> {
        let bad = |m: &str| CliError::Option { option: "--grid".into(), message: format!("{m} in '{s}', expected tmin:tmax:n") };
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("three fields needed"));
        }
        let t_min = parts[0].trim().parse().map_err(|_| bad("bad tmin"))?;
        let t_max = parts[1].trim().parse().map_err(|_| bad("bad tmax"))?;
        let n_points = parts[2].trim().parse().map_err(|_| bad("bad n"))?;
        let grid = Grid { t_min, t_max, n_points };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> CliResult<()> {
        if !(self.t_min >= 0.0) || !self.t_min.is_finite() {
            return Err(invalid("grid.t_min", "must be a finite time >= 0"));
        }
        if !(self.t_max >= self.t_min) || !self.t_max.is_finite() {
            return Err(invalid("grid.t_max", "must be finite and >= t_min"));
        }
        if self.n_points == 0 {
            return Err(invalid("grid.n_points", "must be at least 1"));
        }
        if self.n_points == 1 && self.t_max > self.t_min {
            return Err(invalid("grid.n_points", "a nonempty interval needs at least 2 points"));
        }
        Ok(())
    }

    /// Evenly spaced points, in the grid's own units.
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.t_min];
        }
        let step = (self.t_max - self.t_min) / (self.n_points - 1) as f64;
        (0..self.n_points).map(|i| if i + 1 == self.n_points { self.t_max } else { self.t_min + step * i as f64 }).collect()
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub generator: SuperOp,
    pub channel: SuperOp,
    pub wtds: ModifiedWtdSequence,
    /// Rate unit: grid values are multiples of `1 / scale`.
    pub scale: f64,
    pub ordering: Ordering,
    pub companion: Companion,
    pub initial_state: DensityMatrix,
    pub grid: Grid,
    pub methods: Vec<Method>,
    pub trajectories: usize,
    pub seed: u64,
    pub dyson: DysonOptions,
    pub allow_non_cp: bool,
}

/// Command-line replacements for scenario settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub methods: Option<Vec<Method>>,
    pub trajectories: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<Grid>,
    pub tolerance: Option<f64>,
}

impl Scenario {
    /// Reads a scenario file, or a bundled scenario when `source` names one
    /// and no such file exists.
    pub fn load(source: &str) -> CliResult<Self> {
        let path = Path::new(source);
        if !path.exists() {
            if let Some(text) = bundled(source) {
                return Self::from_toml_str(text, source);
            }
        }
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Read { path: path.into(), source: e })?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text, source)
        } else {
            Self::from_toml_str(&text, source)
        }
    }

    pub fn from_toml_str(text: &str, origin: &str) -> CliResult<Self> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| CliError::Parse { origin: origin.into(), message: e.to_string() })?;
        raw.validate()
    }

    pub fn from_json_str(text: &str, origin: &str) -> CliResult<Self> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| CliError::Parse { origin: origin.into(), message: e.to_string() })?;
        raw.validate()
    }

    pub fn apply(&mut self, o: &Overrides) -> CliResult<()> {
        if let Some(m) = &o.methods {
            if m.is_empty() {
                return Err(CliError::Option { option: "--method".into(), message: "empty method list".into() });
            }
            self.methods = dedup(m.clone());
        }
        if let Some(n) = o.trajectories {
            if n == 0 {
                return Err(CliError::Option { option: "--trajectories".into(), message: "must be at least 1".into() });
            }
            self.trajectories = n;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(g) = o.grid {
            g.validate()?;
            self.grid = g;
        }
        if let Some(t) = o.tolerance {
            if !(t > 0.0) {
                return Err(CliError::Option { option: "--tolerance".into(), message: "must be positive".into() });
            }
            self.dyson.tolerance = t;
        }
        Ok(())
    }

    /// Grid times in the process's own time unit.
    pub fn times(&self) -> Vec<f64> {
        self.grid.points().into_iter().map(|x| x / self.scale).collect()
    }

    fn build(&self, wtds: ModifiedWtdSequence, ordering: Ordering) -> qrenewal::Result<RenewalSpec> {
        if self.allow_non_cp {
            RenewalSpec::renewal_unchecked(self.generator.clone(), self.channel.clone(), wtds, ordering)
        } else {
            RenewalSpec::renewal(self.generator.clone(), self.channel.clone(), wtds, ordering)
        }
    }

    pub fn spec(&self) -> CliResult<RenewalSpec> {
        Ok(self.build(self.wtds.clone(), self.ordering)?)
    }

    /// The companion process and its label, if any.
    pub fn companion_spec(&self) -> CliResult<Option<(&'static str, RenewalSpec)>> {
        Ok(match self.companion {
            Companion::None => None,
            Companion::Unmodified => Some(("unmodified", self.build(self.wtds.truncated(0), self.ordering)?)),
            Companion::Reordered => {
                let (label, other) = match self.ordering {
                    Ordering::Forward => ("inverse", Ordering::Inverse),
                    Ordering::Inverse => ("forward", Ordering::Forward),
                };
                Some((label, self.build(self.wtds.clone(), other)?))
            }
        })
    }

    /// Level whose population is reported as `P_e`: the highest one.
    pub fn excited_level(&self) -> usize {
        self.dim - 1
    }
}

fn dedup(mut m: Vec<Method>) -> Vec<Method> {
    m.sort();
    m.dedup();
    m
}

fn matrix(raw: &RawMatrix, dim: usize, field: &str) -> CliResult<CMat> {
    if raw.len() != dim || raw.iter().any(|r| r.len() != dim) {
        return Err(invalid(field, format!("expected a {dim}x{dim} matrix of [re, im] pairs")));
    }
    if raw.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| C64::new(raw[i][j][0], raw[i][j][1])))
}

fn positive(x: f64, field: &str) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(invalid(field, format!("rate must be positive and finite, got {x}")))
    }
}

fn probability(x: f64, field: &str) -> CliResult<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {x}")))
    }
}

fn wtd(raw: &RawWtd, scale: f64, field: &str) -> CliResult<WaitingTime> {
    let w = match raw {
        RawWtd::Exponential { rate } => WaitingTime::exponential(positive(*rate, field)? * scale),
        RawWtd::Erlang { shape, rate } => {
            if *shape == 0 {
                return Err(invalid(field, "Erlang shape must be at least 1"));
            }
            WaitingTime::erlang(*shape, positive(*rate, field)? * scale)
        }
        RawWtd::Hypoexponential { rates } => {
            if rates.is_empty() {
                return Err(invalid(field, "hypoexponential needs at least one stage"));
            }
            let mut scaled = Vec::with_capacity(rates.len());
            for r in rates {
                scaled.push(positive(*r, field)? * scale);
            }
            WaitingTime::hypoexponential(scaled)
        }
    };
    w.map_err(|e| invalid(field, e.to_string()))
}

impl RawScenario {
    fn validate(self) -> CliResult<Scenario> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let dim = self.dim;
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }

        let generator = match (&self.generator.rates, &self.generator.hamiltonian) {
            (Some(rates), None) if self.generator.dissipators.is_empty() => {
                if dim != 2 {
                    return Err(invalid("generator.rates", "Pauli decay rates need dim = 2"));
                }
                if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                    return Err(invalid("generator.rates", "decay rates must be finite and >= 0"));
                }
                SuperOp::decay_generator(*rates)
            }
            (None, _) => {
                let h = match &self.generator.hamiltonian {
                    Some(h) => matrix(h, dim, "generator.hamiltonian")?,
                    None => CMat::zeros(dim, dim),
                };
                let mut jumps = Vec::new();
                for (i, d) in self.generator.dissipators.iter().enumerate() {
                    let field = format!("generator.dissipators[{i}]");
                    if !(d.rate >= 0.0) || !d.rate.is_finite() {
                        return Err(invalid(field, "rate must be finite and >= 0"));
                    }
                    jumps.push((matrix(&d.operator, dim, &field)?, d.rate));
                }
                let lindblad = LindbladGenerator::new(h, jumps).map_err(|e| invalid("generator", e.to_string()))?;
                SuperOp::from_lindblad(&lindblad).map_err(|e| invalid("generator", e.to_string()))?
            }
            _ => return Err(invalid("generator", "give either rates or Lindblad data, not both")),
        };

        let mut channel = SuperOp::identity(dim);
        let mut non_cp = false;
        for (i, c) in self.jump.iter().enumerate() {
            let field = format!("jump[{i}]");
            let qubit = |name: &str| {
                if dim == 2 {
                    Ok(())
                } else {
                    Err(invalid(&field, format!("{name} is a qubit channel; dim is {dim}")))
                }
            };
            let step = match c {
                RawChannel::Identity => SuperOp::identity(dim),
                RawChannel::AmplitudeDamping { gamma } => {
                    qubit("amplitude_damping")?;
                    SuperOp::amplitude_damping(probability(*gamma, &format!("{field}.gamma"))?)?
                }
                RawChannel::PauliX => {
                    qubit("pauli_x")?;
                    SuperOp::pauli_x()
                }
                RawChannel::Dephasing { p } => {
                    qubit("dephasing")?;
                    SuperOp::dephasing(probability(*p, &format!("{field}.p"))?)?
                }
                RawChannel::Depolarizing => SuperOp::completely_depolarizing(dim),
                RawChannel::TransposeMix { p } => {
                    let p = probability(*p, &format!("{field}.p"))?;
                    non_cp |= p > 0.0;
                    SuperOp::identity(dim).scale(1.0 - p).add(&SuperOp::transpose(dim).scale(p))?
                }
                RawChannel::Kraus { operators } => {
                    let mut ks = Vec::with_capacity(operators.len());
                    for (j, k) in operators.iter().enumerate() {
                        ks.push(matrix(k, dim, &format!("{field}.operators[{j}]"))?);
                    }
                    SuperOp::from_kraus(&ks).map_err(|e| invalid(&field, e.to_string()))?
                }
            };
            // listed channels act in order: the first one acts first
            channel = step.compose(&channel)?;
        }
        if non_cp && !self.allow_non_cp {
            return Err(invalid("jump", "transpose_mix is not completely positive; set allow_non_cp = true"));
        }
        if !self.allow_non_cp {
            let report = channel.certify_cpt(qrenewal::superop::DEFAULT_CPT_TOL);
            if !report.is_cpt {
                return Err(invalid(
                    "jump",
                    format!(
                        "composed channel is not CPT (trace defect {:.3e}, min Choi eigenvalue {:.3e})",
                        report.trace_defect, report.min_choi_eigenvalue
                    ),
                ));
            }
        }

        let scale = positive(self.wtd.scale, "wtd.scale")?;
        let base = match &self.wtd.base {
            Some(b) => wtd(b, scale, "wtd.base")?,
            None => WaitingTime::exponential(scale).map_err(|e| invalid("wtd.base", e.to_string()))?,
        };
        let modified = match (&self.wtd.ratios, &self.wtd.modified) {
            (Some(_), Some(_)) => return Err(invalid("wtd", "give either ratios or modified, not both")),
            (Some(r), None) => r
                .iter()
                .enumerate()
                .map(|(i, x)| wtd(&RawWtd::Exponential { rate: *x }, scale, &format!("wtd.ratios[{i}]")))
                .collect::<CliResult<Vec<_>>>()?,
            (None, Some(m)) => {
                m.iter().enumerate().map(|(i, w)| wtd(w, scale, &format!("wtd.modified[{i}]"))).collect::<CliResult<Vec<_>>>()?
            }
            (None, None) => vec![],
        };
        let wtds = ModifiedWtdSequence::new(base, modified);

        let ordering = match self.ordering {
            RawOrdering::Forward => Ordering::Forward,
            RawOrdering::Inverse => Ordering::Inverse,
        };
        if self.companion == Companion::Unmodified && wtds.k() == 0 {
            return Err(invalid("companion", "an unmodified companion needs modified intervals"));
        }

        let initial_state = match &self.initial_state {
            None => DensityMatrix::pure_level(dim, dim - 1),
            Some(RawState::Named(n)) => match n.as_str() {
                "excited" => DensityMatrix::pure_level(dim, dim - 1),
                "ground" => DensityMatrix::pure_level(dim, 0),
                "mixed" => Ok(DensityMatrix::maximally_mixed(dim)),
                other => return Err(invalid("initial_state", format!("unknown state '{other}'"))),
            },
            Some(RawState::Bloch(r)) => {
                if dim != 2 {
                    return Err(invalid("initial_state", "a Bloch vector needs dim = 2"));
                }
                DensityMatrix::from_bloch(*r)
            }
        }
        .map_err(|e| invalid("initial_state", e.to_string()))?;

        let grid = Grid { t_min: self.grid.t_min, t_max: self.grid.t_max, n_points: self.grid.n_points };
        grid.validate()?;
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is needed"));
        }
        if self.montecarlo.n == 0 {
            return Err(invalid("montecarlo.n", "must be at least 1"));
        }
        let mut dyson = DysonOptions { n_max: self.dyson.n_max, ..Default::default() };
        if let Some(t) = self.dyson.tolerance {
            if !(t > 0.0) {
                return Err(invalid("dyson.tolerance", "must be positive"));
            }
            dyson.tolerance = t;
        }
        dyson.representation = match self.dyson.representation {
            RawRepresentation::WaitingTime => Representation::WaitingTime,
            RawRepresentation::Sprinkling => Representation::Sprinkling,
        };

        let scenario = Scenario {
            name: self.name,
            dim,
            generator,
            channel,
            wtds,
            scale,
            ordering,
            companion: self.companion,
            initial_state,
            grid,
            methods: dedup(self.methods),
            trajectories: self.montecarlo.n,
            seed: self.montecarlo.seed,
            dyson,
            allow_non_cp: self.allow_non_cp,
        };
        scenario.spec().map_err(|e| invalid("process", e.to_string()))?;
        Ok(scenario)
    }
}
