//! Experiment configuration (`nas-experiment/1`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{Space, SpaceKind};
use crate::system::{ExponentRule, MapPrimitive, MapSequence};

pub const SCHEMA: &str = "nas-experiment/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub space: SpaceKind,
    pub systems: BTreeMap<String, SystemSpec>,
    pub checks: Vec<CheckConfig>,
    /// Default seed for sampled checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Autonomous {
        map: MapPrimitive,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space: Option<SpaceKind>,
    },
    Periodic {
        maps: Vec<MapPrimitive>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space: Option<SpaceKind>,
        /// Verify and record that the generators commute.
        #[serde(default)]
        commutative: bool,
    },
    PowerWord {
        base: MapPrimitive,
        rule: ExponentRule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        space: Option<SpaceKind>,
    },
    Iterate {
        of: String,
        k: usize,
    },
    Product {
        left: String,
        right: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Expansivity,
    RecurrentExpansivity,
    MeanExpansivity,
    Equicontinuity,
    MeanEquicontinuity,
    Shadowing,
    ShadowPoint,
    IterateAlspConsistency,
    ChainRelation,
    ChainTransitivity,
    Transitivity,
    Surjectivity,
    Stability,
}

impl CheckKind {
    pub fn is_sampled(self) -> bool {
        matches!(
            self,
            CheckKind::MeanEquicontinuity
                | CheckKind::Shadowing
                | CheckKind::ShadowPoint
                | CheckKind::IterateAlspConsistency
                | CheckKind::Stability
        )
    }

    /// CLI subcommand surface the check belongs to.
    pub fn family(self) -> &'static str {
        match self {
            CheckKind::Shadowing | CheckKind::ShadowPoint | CheckKind::IterateAlspConsistency => "shadow",
            CheckKind::ChainRelation | CheckKind::ChainTransitivity | CheckKind::Transitivity | CheckKind::Surjectivity => {
                "chain"
            }
            CheckKind::Stability => "stability",
            _ => "check",
        }
    }
}

/// Expected outcome of a check.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_at_least: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_at_most: Option<f64>,
    /// Stability only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closeness_at_most: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_at_most: Option<f64>,
    /// Largest distance of `h(x)` from `x + offset`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Translation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injective: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Translation {
    pub offset: f64,
    pub within: f64,
}

/// One checker invocation. Unused parameters are ignored by checkers that
/// do not take them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub check: Option<CheckKind>,
    pub system: String,
    /// Perturbed system for stability checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Shadowing mode (`plain`, `almost`, `average`, `strong_average`) or
    /// stability mode (`plain`, `recurrent`, `mean`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_delta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<i64>,
    /// Horizon of the pseudo-orbits used to estimate δ in stability checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shadow_t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansivity_horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    /// Where the expected values come from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
}

impl CheckConfig {
    pub fn kind(&self) -> CheckKind {
        self.check.expect("validated config")
    }

    pub fn label(&self, index: usize) -> String {
        self.id.clone().unwrap_or_else(|| format!("{index:02}-{}", serde_plain(self.kind())))
    }
}

fn serde_plain(k: CheckKind) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Parses and validates a config, reporting JSON errors with line and
/// column.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        NasError::Config(format!("line {}, column {}: {msg}", e.line(), e.column()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn in_unit(name: &str, v: Option<f64>, field: &str) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x < 1.0) => Err(NasError::Config(format!("{field}: {name} must lie in (0, 1), got {x}"))),
        _ => Ok(()),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(NasError::Config(format!("schema: expected \"{SCHEMA}\", got \"{}\"", self.schema)));
        }
        Space::new(self.space.clone()).map_err(|e| NasError::Config(format!("space: {e}")))?;
        let mut seen = std::collections::HashSet::new();
        for name in self.systems.keys() {
            self.build_system(name).map_err(|e| match e {
                NasError::Config(m) => NasError::Config(m),
                other => NasError::Config(format!("systems.{name}: {other}")),
            })?;
        }
        if self.checks.is_empty() {
            return Err(NasError::Config("checks: at least one check is required".into()));
        }
        for (i, c) in self.checks.iter().enumerate() {
            let field = format!("checks[{i}]");
            let kind = c.check.ok_or_else(|| NasError::Config(format!("{field}.check: missing")))?;
            if !seen.insert(c.label(i)) {
                return Err(NasError::Config(format!("{field}.id: duplicate id {}", c.label(i))));
            }
            if !self.systems.contains_key(&c.system) {
                return Err(NasError::Config(format!("{field}.system: unknown system {}", c.system)));
            }
            in_unit("eps", c.eps, &field)?;
            for d in c.delta_grid.iter().flatten().chain(c.eps_grid.iter().flatten()) {
                in_unit("grid value", Some(*d), &field)?;
            }
            if let Some(g) = &c.delta_grid {
                if g.is_empty() || g.windows(2).any(|w| w[0] <= w[1]) {
                    return Err(NasError::Config(format!("{field}.delta_grid: must be non-empty and strictly descending")));
                }
            }
            for (name, v) in [("horizon", c.horizon), ("t", c.t), ("trials", c.trials), ("sample", c.sample), ("k", c.k), ("n_delta", c.n_delta)] {
                if v == Some(0) {
                    return Err(NasError::Config(format!("{field}.{name}: must be positive")));
                }
            }
            if kind.is_sampled() && c.seed.or(self.seed).is_none() {
                return Err(NasError::Config(format!("{field}.seed: sampled checks need a seed")));
            }
            let needs_eps = matches!(
                kind,
                CheckKind::Equicontinuity
                    | CheckKind::MeanEquicontinuity
                    | CheckKind::Shadowing
                    | CheckKind::ShadowPoint
                    | CheckKind::IterateAlspConsistency
                    | CheckKind::Stability
            );
            if needs_eps && c.eps.is_none() {
                return Err(NasError::Config(format!("{field}.eps: required")));
            }
            match kind {
                CheckKind::Stability => {
                    let g = c.perturbed.as_ref().ok_or_else(|| NasError::Config(format!("{field}.perturbed: required")))?;
                    if !self.systems.contains_key(g) {
                        return Err(NasError::Config(format!("{field}.perturbed: unknown system {g}")));
                    }
                    if let Some(m) = &c.mode {
                        parse_stability_mode(m).map_err(|e| NasError::Config(format!("{field}.mode: {e}")))?;
                    }
                }
                CheckKind::Shadowing | CheckKind::ShadowPoint => {
                    if let Some(m) = &c.mode {
                        parse_shadow_mode(m).map_err(|e| NasError::Config(format!("{field}.mode: {e}")))?;
                    }
                    if kind == CheckKind::ShadowPoint && c.delta.is_none() {
                        return Err(NasError::Config(format!("{field}.delta: required")));
                    }
                }
                CheckKind::ChainRelation => {
                    if c.x.is_none() || c.y.is_none() || c.delta.is_none() {
                        return Err(NasError::Config(format!("{field}: chain_relation needs x, y and delta")));
                    }
                }
                CheckKind::IterateAlspConsistency if c.k.is_none() => {
                    return Err(NasError::Config(format!("{field}.k: required")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn base_space(&self) -> Result<Space> {
        Space::new(self.space.clone())
    }

    /// Resolves a named system, following iterate and product references.
    pub fn build_system(&self, name: &str) -> Result<MapSequence> {
        self.build_inner(name, 0)
    }

    fn build_inner(&self, name: &str, depth: usize) -> Result<MapSequence> {
        if depth > 16 {
            return Err(NasError::Config(format!("systems.{name}: reference cycle")));
        }
        let spec = self
            .systems
            .get(name)
            .ok_or_else(|| NasError::Config(format!("unknown system {name}")))?;
        let space_for = |s: &Option<SpaceKind>| match s {
            Some(k) => Space::new(k.clone()),
            None => self.base_space(),
        };
        match spec {
            SystemSpec::Autonomous { map, space } => MapSequence::autonomous(&space_for(space)?, map.clone()),
            SystemSpec::Periodic { maps, space, commutative } => {
                let s = MapSequence::periodic(&space_for(space)?, maps.clone())?;
                if *commutative {
                    s.assert_commutative(maps.len())
                } else {
                    Ok(s)
                }
            }
            SystemSpec::PowerWord { base, rule, space } => {
                MapSequence::power_word(&space_for(space)?, base.clone(), rule.clone())
            }
            SystemSpec::Iterate { of, k } => self.build_inner(of, depth + 1)?.iterate(*k),
            SystemSpec::Product { left, right } => {
                let l = self.build_inner(left, depth + 1)?;
                let r = self.build_inner(right, depth + 1)?;
                l.product(&r)
            }
        }
    }
}

pub fn parse_shadow_mode(s: &str) -> Result<crate::shadowing::ShadowMode> {
    use crate::shadowing::ShadowMode;
    match s {
        "plain" => Ok(ShadowMode::Plain),
        "almost" => Ok(ShadowMode::Almost),
        "average" => Ok(ShadowMode::Average),
        "strong_average" => Ok(ShadowMode::StrongAverage),
        _ => Err(NasError::Argument(format!("unknown shadowing mode {s}"))),
    }
}

pub fn parse_stability_mode(s: &str) -> Result<crate::stability::StabilityMode> {
    use crate::stability::StabilityMode;
    match s {
        "plain" => Ok(StabilityMode::Plain),
        "recurrent" => Ok(StabilityMode::Recurrent),
        "mean" => Ok(StabilityMode::Mean),
        _ => Err(NasError::Argument(format!("unknown stability mode {s}"))),
    }
}
