//! Built-in experiment catalog. The config files live in the top-level
//! `fixtures/` directory and are compiled in.

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{NasError, Result};
use crate::runner::{run_experiment, Overrides, RunOutput};

macro_rules! catalog {
    ($($name:literal),* $(,)?) => {
        const FIXTURES: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../../../fixtures/", $name, ".cfg")))),*
        ];
    };
}

catalog!(
    "isometry-contraction",
    "tent-MC",
    "shift-restart-ME",
    "successor-expansive",
    "shift-G-expansive",
    "shift-restart-iterate-counterexample",
    "scaling-iterate-counterexample",
    "scaling-triplet",
    "doubling-b0.01",
    "scaling-triplet-stability",
);

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub text: &'static str,
    pub config: ExperimentConfig,
}

pub fn names() -> impl Iterator<Item = &'static str> {
    FIXTURES.iter().map(|(n, _)| *n)
}

pub fn load(name: &str) -> Result<Fixture> {
    let (name, text) = FIXTURES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| NasError::Config(format!("unknown fixture {name}; known: {}", names().collect::<Vec<_>>().join(", "))))?;
    let config = parse_config(text).map_err(|e| NasError::Config(format!("fixture {name}: {e}")))?;
    Ok(Fixture { name, text, config })
}

pub fn catalog() -> Vec<Fixture> {
    names().map(|n| load(n).expect("built-in fixtures parse")).collect()
}

pub fn run_fixture(name: &str) -> Result<RunOutput> {
    run_fixture_with(name, &Overrides::default(), None)
}

pub fn run_fixture_with(name: &str, overrides: &Overrides, filter: Option<&str>) -> Result<RunOutput> {
    let f = load(name)?;
    run_experiment(&f.config, f.text, overrides, filter)
}
