use serde::{Deserialize, Serialize};

use crate::metric_space::PointId;

/// Evidence attached to a failed (or noteworthy) check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Pair { x: PointId, y: PointId },
    Point { x: PointId },
    /// First violating step of a pseudo-orbit.
    Index { index: usize },
    /// Average window of length `n` starting at `k`.
    Window { n: usize, k: usize },
    Orbit { points: Vec<PointId> },
    Sequences { xs: Vec<PointId>, ys: Vec<PointId>, generator: usize, n: usize },
    Generators { i: usize, j: usize, x: PointId },
    Chain { x: PointId, y: PointId, delta: f64, class: Option<usize> },
    Balls { u: PointId, v: PointId, radius: f64 },
}

/// Outcome of a finite-model check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant_estimate: Option<f64>,
    pub horizon: usize,
    pub resolution: f64,
    pub exhaustive: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check: &str, holds: bool, horizon: usize, resolution: f64) -> Verdict {
        Verdict {
            check: check.to_string(),
            holds,
            witness: None,
            constant_estimate: None,
            horizon,
            resolution,
            exhaustive: true,
            seed: None,
            notes: Vec::new(),
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Verdict {
        self.witness = Some(w);
        self
    }

    pub fn with_constant(mut self, c: f64) -> Verdict {
        self.constant_estimate = Some(c);
        self
    }

    pub fn sampled(mut self, seed: u64) -> Verdict {
        self.exhaustive = false;
        self.seed = Some(seed);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Verdict {
        self.notes.push(s.into());
        self
    }

    pub fn pair_witness(&self) -> Option<(PointId, PointId)> {
        match self.witness {
            Some(Witness::Pair { x, y }) => Some((x, y)),
            _ => None,
        }
    }
}
