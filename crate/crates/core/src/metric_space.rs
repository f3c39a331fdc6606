//! Finite metric-space models.
//!
//! Every space enumerates a finite list of points indexed `0..len()`. The one
//! exception to "the space is its enumeration" is [`SpaceKind::LineWindow`]: it
//! models the real line as the lattice `a + k·h` (`k ∈ ℤ`) and enumerates only
//! the window `k ∈ 0..n`. Orbits may leave the window; scans over "all points"
//! cover the window.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};

/// Absolute tolerance for real comparisons.
pub const TOL: f64 = 1e-9;

/// Largest word length accepted for [`SpaceKind::CyclicWords`].
pub const MAX_WORD_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub i64);

impl PointId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for PointId {
    fn from(i: usize) -> Self {
        PointId(i as i64)
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    IntervalGrid { a: f64, b: f64, n: usize },
    CircleGrid { n: usize },
    CyclicWords { length: usize },
    SuccessorSet { m: usize },
    LineWindow { a: f64, b: f64, n: usize },
    Product { left: Box<SpaceKind>, right: Box<SpaceKind> },
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceKind::IntervalGrid { a, b, n } => write!(f, "IntervalGrid({a},{b},{n})"),
            SpaceKind::CircleGrid { n } => write!(f, "CircleGrid({n})"),
            SpaceKind::CyclicWords { length } => write!(f, "CyclicWordSpace({length})"),
            SpaceKind::SuccessorSet { m } => write!(f, "SuccessorSet({m})"),
            SpaceKind::LineWindow { a, b, n } => write!(f, "LineWindow({a},{b},{n})"),
            SpaceKind::Product { left, right } => write!(f, "Product({left}, {right})"),
        }
    }
}

/// Human-readable coordinates of a point, used in CSV exports.
#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    Real(f64),
    Word(String),
    Pair(Box<Coords>, Box<Coords>),
}

impl fmt::Display for Coords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coords::Real(x) => write!(f, "{x}"),
            Coords::Word(w) => f.write_str(w),
            Coords::Pair(l, r) => write!(f, "({l} {r})"),
        }
    }
}

#[derive(Debug)]
enum Data {
    Interval { a: f64, step: f64, n: usize },
    Circle { n: usize },
    Words { len: usize, weights: Vec<f64>, by_mask: Vec<f64> },
    Successor { values: Vec<f64> },
    Line { a: f64, step: f64, n: usize },
    Product { left: Space, right: Space },
}

/// A validated space model. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct Space {
    kind: SpaceKind,
    data: Arc<Data>,
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

/// Rounds to the nearest integer, ties toward the lower one.
#[inline]
pub(crate) fn round_half_down(v: f64) -> f64 {
    (v - 0.5).ceil()
}

fn word_index(pos: usize, len: usize) -> i64 {
    if pos <= len / 2 {
        pos as i64
    } else {
        pos as i64 - len as i64
    }
}

impl Space {
    pub fn new(kind: SpaceKind) -> Result<Space> {
        let data = match &kind {
            SpaceKind::IntervalGrid { a, b, n } | SpaceKind::LineWindow { a, b, n } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(NasError::InvalidSpace(format!("need a < b, got [{a}, {b}]")));
                }
                if *n < 2 {
                    return Err(NasError::InvalidSpace("grid needs at least 2 points".into()));
                }
                let step = (b - a) / (*n as f64 - 1.0);
                if matches!(kind, SpaceKind::IntervalGrid { .. }) {
                    Data::Interval { a: *a, step, n: *n }
                } else {
                    Data::Line { a: *a, step, n: *n }
                }
            }
            SpaceKind::CircleGrid { n } => {
                if *n < 2 {
                    return Err(NasError::InvalidSpace("circle grid needs at least 2 points".into()));
                }
                Data::Circle { n: *n }
            }
            SpaceKind::CyclicWords { length } => {
                if *length == 0 || *length > MAX_WORD_LEN {
                    return Err(NasError::InvalidSpace(format!(
                        "word length must be in 1..={MAX_WORD_LEN}"
                    )));
                }
                let weights: Vec<f64> = (0..*length)
                    .map(|p| 0.5f64.powi(word_index(p, *length).unsigned_abs() as i32))
                    .collect();
                let by_mask = (0..1usize << length)
                    .map(|mask| {
                        weights
                            .iter()
                            .enumerate()
                            .filter(|(p, _)| mask >> p & 1 == 1)
                            .map(|(_, w)| w)
                            .sum()
                    })
                    .collect();
                Data::Words { len: *length, weights, by_mask }
            }
            SpaceKind::SuccessorSet { m } => {
                if *m == 0 {
                    return Err(NasError::InvalidSpace("successor set needs M >= 1".into()));
                }
                let mut values: Vec<f64> = (1..=*m)
                    .flat_map(|k| {
                        let r = 1.0 / k as f64;
                        [r, 1.0 - r]
                    })
                    .collect();
                values.sort_by(f64::total_cmp);
                values.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
                Data::Successor { values }
            }
            SpaceKind::Product { left, right } => {
                let left = Space::new((**left).clone())?;
                let right = Space::new((**right).clone())?;
                if !left.is_finite() || !right.is_finite() {
                    return Err(NasError::InvalidSpace(
                        "product components must be finite spaces".into(),
                    ));
                }
                left.len()
                    .checked_mul(right.len())
                    .filter(|n| *n <= 1 << 24)
                    .ok_or_else(|| NasError::InvalidSpace("product too large".into()))?;
                Data::Product { left, right }
            }
        };
        Ok(Space { kind, data: Arc::new(data) })
    }

    pub fn interval(a: f64, b: f64, n: usize) -> Result<Space> {
        Space::new(SpaceKind::IntervalGrid { a, b, n })
    }

    pub fn circle(n: usize) -> Result<Space> {
        Space::new(SpaceKind::CircleGrid { n })
    }

    pub fn words(length: usize) -> Result<Space> {
        Space::new(SpaceKind::CyclicWords { length })
    }

    pub fn successor(m: usize) -> Result<Space> {
        Space::new(SpaceKind::SuccessorSet { m })
    }

    pub fn line(a: f64, b: f64, n: usize) -> Result<Space> {
        Space::new(SpaceKind::LineWindow { a, b, n })
    }

    pub fn product(left: &Space, right: &Space) -> Result<Space> {
        Space::new(SpaceKind::Product {
            left: Box::new(left.kind.clone()),
            right: Box::new(right.kind.clone()),
        })
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Number of enumerated points.
    pub fn len(&self) -> usize {
        match &*self.data {
            Data::Interval { n, .. } | Data::Circle { n } | Data::Line { n, .. } => *n,
            Data::Words { len, .. } => 1 << len,
            Data::Successor { values } => values.len(),
            Data::Product { left, right } => left.len() * right.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// False only for the line lattice, whose enumeration is a window.
    pub fn is_finite(&self) -> bool {
        !matches!(&*self.data, Data::Line { .. })
    }

    pub fn contains(&self, p: PointId) -> bool {
        !self.is_finite() || (p.0 >= 0 && (p.0 as usize) < self.len())
    }

    pub fn check(&self, p: PointId) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(NasError::PointNotInSpace(p))
        }
    }

    pub fn points(&self) -> impl Iterator<Item = PointId> + Clone + use<> {
        (0..self.len() as i64).map(PointId)
    }

    /// Each unordered distinct pair once, lexicographic by index.
    pub fn enumerate_pairs(&self) -> impl Iterator<Item = (PointId, PointId)> + use<> {
        let n = self.len() as i64;
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (PointId(i), PointId(j))))
    }

    /// Model metric without membership checks.
    #[inline]
    pub fn dist(&self, x: PointId, y: PointId) -> f64 {
        match &*self.data {
            Data::Interval { step, .. } | Data::Line { step, .. } => (x.0 - y.0).abs() as f64 * step,
            Data::Circle { n } => {
                let n = *n as i64;
                let d = (x.0 - y.0).rem_euclid(n);
                d.min(n - d) as f64 / n as f64
            }
            Data::Words { by_mask, .. } => by_mask[(x.0 ^ y.0) as usize],
            Data::Successor { values } => (values[x.index()] - values[y.index()]).abs(),
            Data::Product { left, right } => {
                let (xl, xr) = self.split(x);
                let (yl, yr) = self.split(y);
                left.dist(xl, yl).max(right.dist(xr, yr))
            }
        }
    }

    /// Checked metric.
    pub fn try_dist(&self, x: PointId, y: PointId) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist(x, y))
    }

    /// The bounded metric `min(d, 1)`.
    #[inline]
    pub fn bounded_dist(&self, x: PointId, y: PointId) -> f64 {
        self.dist(x, y).min(1.0)
    }

    pub fn try_bounded_dist(&self, x: PointId, y: PointId) -> Result<f64> {
        Ok(self.try_dist(x, y)?.min(1.0))
    }

    /// Grid step for sampled continua; the smallest nonzero distance for
    /// discrete models. Products take the larger component value.
    pub fn resolution(&self) -> f64 {
        match &*self.data {
            Data::Interval { step, .. } | Data::Line { step, .. } => *step,
            Data::Circle { n } => 1.0 / *n as f64,
            Data::Words { weights, .. } => weights.iter().copied().fold(f64::INFINITY, f64::min),
            Data::Successor { values } => values
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
            Data::Product { left, right } => left.resolution().max(right.resolution()),
        }
    }

    /// Half the grid step: the largest displacement introduced by rounding an
    /// analytic image onto the grid. Zero for exact discrete models.
    pub fn rounding_radius(&self) -> f64 {
        match &*self.data {
            Data::Interval { step, .. } | Data::Line { step, .. } => step / 2.0,
            Data::Circle { n } => 0.5 / *n as f64,
            Data::Words { .. } => 0.0,
            Data::Successor { values } => {
                values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max) / 2.0
            }
            Data::Product { left, right } => left.rounding_radius().max(right.rounding_radius()),
        }
    }

    /// Diameter of the enumerated points.
    pub fn diameter(&self) -> f64 {
        match &*self.data {
            Data::Interval { step, n, .. } | Data::Line { step, n, .. } => step * (*n as f64 - 1.0),
            Data::Circle { n } => (*n / 2) as f64 / *n as f64,
            Data::Words { by_mask, .. } => by_mask[by_mask.len() - 1],
            Data::Successor { values } => values[values.len() - 1] - values[0],
            Data::Product { left, right } => left.diameter().max(right.diameter()),
        }
    }

    /// Smallest distance between distinct enumerated points.
    pub fn min_separation(&self) -> f64 {
        match &*self.data {
            Data::Product { left, right } => left.min_separation().min(right.min_separation()),
            _ => self.resolution(),
        }
    }

    /// Real coordinate, for the one-dimensional real models.
    pub fn coord(&self, p: PointId) -> Option<f64> {
        match &*self.data {
            Data::Interval { a, step, .. } | Data::Line { a, step, .. } => Some(a + p.0 as f64 * step),
            Data::Circle { n } => Some(p.0 as f64 / *n as f64),
            Data::Successor { values } => values.get(p.index()).copied(),
            _ => None,
        }
    }

    pub fn coords(&self, p: PointId) -> Coords {
        match &*self.data {
            Data::Words { len, .. } => {
                Coords::Word((0..*len).map(|b| if p.0 >> b & 1 == 1 { '1' } else { '0' }).collect())
            }
            Data::Product { left, right } => {
                let (l, r) = self.split(p);
                Coords::Pair(Box::new(left.coords(l)), Box::new(right.coords(r)))
            }
            _ => Coords::Real(self.coord(p).unwrap_or(f64::NAN)),
        }
    }

    /// Nearest point to a real value (ties toward the lower index). Interval
    /// and successor models clamp; the circle wraps; the line lattice is
    /// unbounded.
    pub fn nearest(&self, v: f64) -> Option<PointId> {
        match &*self.data {
            Data::Interval { a, step, n } => {
                let k = round_half_down((v - a) / step);
                Some(PointId(k.clamp(0.0, *n as f64 - 1.0) as i64))
            }
            Data::Line { a, step, .. } => Some(PointId(round_half_down((v - a) / step) as i64)),
            Data::Circle { n } => {
                let k = round_half_down(v * *n as f64) as i64;
                Some(PointId(k.rem_euclid(*n as i64)))
            }
            Data::Successor { values } => {
                let i = values.partition_point(|x| *x < v);
                let best = match i {
                    0 => 0,
                    i if i == values.len() => i - 1,
                    i => {
                        if v - values[i - 1] <= values[i] - v {
                            i - 1
                        } else {
                            i
                        }
                    }
                };
                Some(PointId(best as i64))
            }
            _ => None,
        }
    }

    /// Lattice coordinates for grid models: `(origin, step)`.
    pub(crate) fn lattice(&self) -> Option<(f64, f64)> {
        match &*self.data {
            Data::Interval { a, step, .. } | Data::Line { a, step, .. } => Some((*a, *step)),
            Data::Circle { n } => Some((0.0, 1.0 / *n as f64)),
            _ => None,
        }
    }

    pub(crate) fn word_len(&self) -> Option<usize> {
        match &*self.data {
            Data::Words { len, .. } => Some(*len),
            _ => None,
        }
    }

    pub(crate) fn successor_len(&self) -> Option<usize> {
        match &*self.data {
            Data::Successor { values } => Some(values.len()),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<(&Space, &Space)> {
        match &*self.data {
            Data::Product { left, right } => Some((left, right)),
            _ => None,
        }
    }

    /// Splits a product point into its components.
    #[inline]
    pub fn split(&self, p: PointId) -> (PointId, PointId) {
        match &*self.data {
            Data::Product { right, .. } => {
                let m = right.len() as i64;
                (PointId(p.0 / m), PointId(p.0 % m))
            }
            _ => (p, p),
        }
    }

    #[inline]
    pub fn join(&self, l: PointId, r: PointId) -> PointId {
        match &*self.data {
            Data::Product { right, .. } => PointId(l.0 * right.len() as i64 + r.0),
            _ => l,
        }
    }

    /// Points `q` with `d(p, q) < r` (strict, up to [`TOL`]). On the line
    /// lattice the ball may extend past the window.
    pub fn ball(&self, p: PointId, r: f64) -> Vec<PointId> {
        let limit = r - TOL;
        if limit < 0.0 {
            return Vec::new();
        }
        match &*self.data {
            Data::Interval { step, n, .. } => {
                let k = (limit / step + TOL).floor() as i64;
                ((p.0 - k).max(0)..=(p.0 + k).min(*n as i64 - 1)).map(PointId).collect()
            }
            Data::Line { step, .. } => {
                let k = (limit / step + TOL).floor() as i64;
                (p.0 - k..=p.0 + k).map(PointId).collect()
            }
            Data::Circle { n } => {
                let n = *n as i64;
                let k = ((limit * n as f64) + TOL).floor() as i64;
                if 2 * k + 1 >= n {
                    return self.points().collect();
                }
                let mut out: Vec<PointId> =
                    (p.0 - k..=p.0 + k).map(|i| PointId(i.rem_euclid(n))).collect();
                out.sort();
                out
            }
            _ => self.points().filter(|q| self.dist(p, *q) <= limit).collect(),
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}
