use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mabandon::sim::{DEFAULT_EPISODE_CAP, DEFAULT_SEED};
use mabandon::{
    bound_constants, AbandonmentCurve, BanditInstance, BinaryAbandonment, Estimator, GapOrientation,
    GeneralAbandonment, GridOptions, InitialState, Orientation, PolicyKind, PolicySpec, SimConfig, ValueSolution,
};
use serde::{Deserialize, Serialize};

/// One experiment: an instance, the policies to run on it, and simulation
/// and output settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(rename = "policy", default)]
    pub policies: Vec<PolicySection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Binary,
    General,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    #[serde(default)]
    pub model: ModelKind,
    pub means: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q00: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q01: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q10: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q11: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    /// A single state, or `[[state, probability], ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSection {
    Point(f64),
    Atoms(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveSection {
    Log { c6: f64 },
    Table { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// `standard`, `opposite` or `auto` (from the solved instance).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonus_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub episodes: usize,
    pub runs: usize,
    pub seed: u64,
    pub episode_cap: u64,
    pub estimator: String,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            episodes: 20_000,
            runs: 10_000,
            seed: DEFAULT_SEED,
            episode_cap: DEFAULT_EPISODE_CAP,
            estimator: "decomposition".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Any of `csv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec!["csv".into()],
        }
    }
}

/// Bundled experiment presets as `(name, toml)`.
pub const PRESETS: &[(&str, &str)] = &[
    ("simple", include_str!("../presets/simple.toml")),
    ("mixed-q", include_str!("../presets/mixed-q.toml")),
    ("low-means", include_str!("../presets/low-means.toml")),
    ("three-arms", include_str!("../presets/three-arms.toml")),
    ("general-c6-1000", include_str!("../presets/general-c6-1000.toml")),
    ("general-c6-100", include_str!("../presets/general-c6-100.toml")),
    ("general-low-means", include_str!("../presets/general-low-means.toml")),
];

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("unknown preset {name:?}; available: {}", preset_names().join(", ")))?;
    ExperimentConfig::from_toml(text).with_context(|| format!("preset {name}"))
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn sanitize(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '-'
            }
        })
        .collect();
    s.trim_matches('-').to_string()
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let instance = self.instance()?;
        self.estimator()?;
        if self.sim.episodes == 0 || self.sim.runs == 0 || self.sim.episode_cap == 0 {
            bail!("sim: episodes, runs and episode_cap must all be at least 1");
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                bail!("output.formats: unknown format {f:?} (expected csv or json)");
            }
        }
        let solution = self.auto_solution(&instance)?;
        let mut seen = HashSet::new();
        for (i, (label, p)) in self.labels().iter().zip(&self.policies).enumerate() {
            if sanitize(label).is_empty() {
                bail!("policy[{i}]: label {label:?} has no usable characters");
            }
            if !seen.insert(sanitize(label)) {
                bail!("policy[{i}]: duplicate label {label:?}; give each policy a unique `label`");
            }
            let spec = self
                .policy_spec(p, &instance, solution.as_ref())
                .with_context(|| format!("policy[{i}] ({label})"))?;
            spec.resolve(&instance)
                .with_context(|| format!("policy[{i}] ({label})"))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> GridOptions {
        let mut grid = GridOptions::default();
        if let Some(n) = self.instance.grid_size {
            grid.grid_size = n;
        }
        grid
    }

    pub fn estimator(&self) -> Result<Estimator> {
        self.sim.estimator.parse().map_err(|e| anyhow!("sim.estimator: {e}"))
    }

    pub fn instance(&self) -> Result<BanditInstance<f64>> {
        let sec = &self.instance;
        let instance = match sec.model {
            ModelKind::Binary => {
                if sec.curve.is_some() || sec.theta.is_some() || sec.grid_size.is_some() {
                    bail!("instance: curve, theta and grid_size apply only to model = \"general\"");
                }
                let field = |name: &str, v: Option<f64>| {
                    v.ok_or_else(|| anyhow!("instance.{name} is required for the binary model"))
                };
                let q = BinaryAbandonment::new(
                    field("q00", sec.q00)?,
                    field("q01", sec.q01)?,
                    field("q10", sec.q10)?,
                    field("q11", sec.q11)?,
                )
                .context("instance")?;
                BanditInstance::binary(&sec.means, q).context("instance")?
            }
            ModelKind::General => {
                if [sec.q00, sec.q01, sec.q10, sec.q11].iter().any(Option::is_some) {
                    bail!("instance: q00..q11 apply only to model = \"binary\"");
                }
                let curve = match sec
                    .curve
                    .as_ref()
                    .ok_or_else(|| anyhow!("instance.curve is required for the general model"))?
                {
                    CurveSection::Log { c6 } => AbandonmentCurve::log(*c6),
                    CurveSection::Table { points } => {
                        AbandonmentCurve::table(points.iter().map(|p| (p[0], p[1])).collect())
                    }
                }
                .context("instance.curve")?;
                let theta = sec
                    .theta
                    .ok_or_else(|| anyhow!("instance.theta is required for the general model"))?;
                let g = GeneralAbandonment::new(curve, theta).context("instance")?;
                BanditInstance::general(&sec.means, g).context("instance")?
            }
        };
        match &sec.initial_state {
            None => Ok(instance),
            Some(InitialSection::Point(s)) => instance.with_initial_state(InitialState::point(*s)),
            Some(InitialSection::Atoms(atoms)) => {
                let dist = InitialState::discrete(atoms.iter().map(|a| (a[0], a[1])).collect())
                    .context("instance.initial_state")?;
                instance.with_initial_state(dist)
            }
        }
        .context("instance.initial_state")
    }

    /// Policy labels in config order; unlabelled policies use their kind name.
    pub fn labels(&self) -> Vec<String> {
        self.policies
            .iter()
            .map(|p| {
                p.label.clone().unwrap_or_else(|| {
                    p.kind
                        .parse::<PolicyKind>()
                        .map(|k| k.name().to_string())
                        .unwrap_or_else(|_| p.kind.clone())
                })
            })
            .collect()
    }

    /// File stem used for a label's output files.
    pub fn file_stem(label: &str) -> String {
        sanitize(label)
    }

    /// Builds the spec for `p`. `auto` orientation uses `solution` when given
    /// and otherwise solves the instance.
    pub fn policy_spec(
        &self,
        p: &PolicySection,
        instance: &BanditInstance<f64>,
        solution: Option<&ValueSolution<f64>>,
    ) -> Result<PolicySpec<f64>> {
        let kind: PolicyKind = p.kind.parse().map_err(|e| anyhow!("kind: {e}"))?;
        let orientation = match p.orientation.as_deref().unwrap_or("auto") {
            "auto" => match solution {
                Some(sol) => detect_orientation(instance, sol),
                None => detect_orientation(instance, &ValueSolution::solve(instance, self.grid())?),
            },
            other => other.parse::<Orientation>().map_err(|e| anyhow!("orientation: {e}"))?,
        };
        let mut spec = PolicySpec::new(kind).oriented(orientation);
        if p.c0.is_some() || p.c1.is_some() {
            let (c0, c1) = (p.c0.unwrap_or(spec.c0), p.c1.unwrap_or(spec.c1));
            spec = spec.with_coefficients(c0, c1);
        }
        if let Some(c) = p.c {
            spec = spec.with_log_log(c);
        }
        if let Some(n) = p.n_bins {
            spec.n_bins = n;
        }
        if let Some(e) = p.epsilon {
            spec.epsilon = e;
        }
        if p.horizon.is_some() {
            spec.horizon = p.horizon;
        }
        if let Some(b) = p.bonus_c {
            spec.bonus_c = b;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// One simulation config per policy, labelled.
    pub fn sim_configs(&self) -> Result<Vec<SimConfig<f64>>> {
        let instance = self.instance()?;
        let estimator = self.estimator()?;
        let solution = self.auto_solution(&instance)?;
        self.policies
            .iter()
            .zip(self.labels())
            .map(|(p, label)| {
                let spec = self
                    .policy_spec(p, &instance, solution.as_ref())
                    .with_context(|| format!("policy {label}"))?;
                let mut cfg = SimConfig::new(instance.clone(), spec)
                    .with_label(label)
                    .with_episodes(self.sim.episodes)
                    .with_runs(self.sim.runs)
                    .with_seed(self.sim.seed)
                    .with_estimator(estimator);
                cfg.episode_cap = self.sim.episode_cap;
                cfg.grid = self.grid();
                Ok(cfg)
            })
            .collect()
    }

    /// Solved instance when some policy needs `auto` orientation.
    fn auto_solution(&self, instance: &BanditInstance<f64>) -> Result<Option<ValueSolution<f64>>> {
        if self
            .policies
            .iter()
            .any(|p| p.orientation.as_deref().unwrap_or("auto") == "auto")
        {
            Ok(Some(ValueSolution::solve(instance, self.grid())?))
        } else {
            Ok(None)
        }
    }

    /// Applies command-line overrides.
    pub fn override_sim(&mut self, seed: Option<u64>, runs: Option<usize>, episodes: Option<usize>) {
        if let Some(s) = seed {
            self.sim.seed = s;
        }
        if let Some(r) = runs {
            self.sim.runs = r;
        }
        if let Some(k) = episodes {
            self.sim.episodes = k;
        }
    }

    /// Bin count for the discretized bound constants: the first DISC policy's
    /// `n_bins`, else 4 on the general model.
    pub fn disc_bins(&self) -> Option<usize> {
        if self.instance.model != ModelKind::General {
            return None;
        }
        let disc = self.policies.iter().find(|p| {
            matches!(
                p.kind.parse::<PolicyKind>(),
                Ok(PolicyKind::DiscUlcb | PolicyKind::DiscKlUlcb)
            )
        });
        Some(disc.and_then(|p| p.n_bins).unwrap_or(4))
    }
}

/// Orientation the solved instance calls for; ties fall back to standard.
pub fn detect_orientation(instance: &BanditInstance<f64>, solution: &ValueSolution<f64>) -> Orientation {
    match bound_constants(instance, solution, None).map(|b| b.orientation) {
        Ok(GapOrientation::Opposite) => Orientation::Opposite,
        _ => Orientation::Standard,
    }
}
