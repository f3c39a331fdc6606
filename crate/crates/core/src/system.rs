//! Non-autonomous systems `F = {f_i}` and their composition algebra.
//!
//! Time indices start at 1; `f_0` is the identity. `F_n = f_n ∘ … ∘ f_1`,
//! `F_[j,k] = f_k ∘ … ∘ f_j` and the `k`-th iterate has generators
//! `F_[(i-1)k+1, ik]`.
//!
//! Power-word systems (generators `f^{e_i}` of one base map) over an exact
//! group action (shifts, the successor cycle) compose by exponent
//! arithmetic; everything else composes step by step.

use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{round_half_down, PointId, Space, TOL};

/// A single self-map of a space model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapPrimitive {
    Identity,
    /// `x ↦ a·x + b`, rounded to the nearest grid point.
    Affine(f64, f64),
    /// `x ↦ a·x + b (mod 1)`.
    AffineMod1(f64, f64),
    /// `x ↦ 2·min(x, 1 − x)`.
    Tent,
    /// `y_i = x_{i+e}` on cyclic words.
    Shift(i64),
    /// `e` steps of `x ↦ x⁺` on a successor set; the interior points are
    /// closed into a cycle so the map stays a bijection. `0` and `1` are fixed.
    Successor(i64),
    /// Literal truncation of `x ↦ x⁺`: saturates at the endpoints, so it is
    /// not injective near them. Negative powers are the partial inverse.
    SuccessorClamped(i64),
    /// Point-to-point table on a finite space.
    Table(Vec<usize>),
    Product(Box<MapPrimitive>, Box<MapPrimitive>),
    /// Applies the maps left to right.
    Compose(Vec<MapPrimitive>),
}

impl MapPrimitive {
    pub fn name(&self) -> String {
        match self {
            MapPrimitive::Identity => "Identity".into(),
            MapPrimitive::Affine(a, b) => format!("Affine({a},{b})"),
            MapPrimitive::AffineMod1(a, b) => format!("AffineMod1({a},{b})"),
            MapPrimitive::Tent => "Tent".into(),
            MapPrimitive::Shift(e) => format!("Shift({e})"),
            MapPrimitive::Successor(e) => format!("Successor({e})"),
            MapPrimitive::SuccessorClamped(e) => format!("SuccessorClamped({e})"),
            MapPrimitive::Table(t) => format!("Table[{}]", t.len()),
            MapPrimitive::Product(a, b) => format!("{}×{}", a.name(), b.name()),
            MapPrimitive::Compose(v) => {
                let names: Vec<_> = v.iter().map(|m| m.name()).collect();
                format!("Compose[{}]", names.join(","))
            }
        }
    }

    /// Checks that the map can act on `space`.
    pub fn check_space(&self, space: &Space) -> Result<()> {
        let bad = || {
            Err(NasError::Incompatible { map: self.name(), space: space.to_string() })
        };
        match self {
            MapPrimitive::Identity => Ok(()),
            MapPrimitive::Affine(a, b) | MapPrimitive::AffineMod1(a, b) => {
                if !(a.is_finite() && b.is_finite()) || space.coord(PointId(0)).is_none() {
                    return bad();
                }
                Ok(())
            }
            MapPrimitive::Tent => {
                if space.coord(PointId(0)).is_none() {
                    return bad();
                }
                Ok(())
            }
            MapPrimitive::Shift(_) => space.word_len().map(|_| ()).map_or_else(bad, Ok),
            MapPrimitive::Successor(_) | MapPrimitive::SuccessorClamped(_) => {
                space.successor_len().map(|_| ()).map_or_else(bad, Ok)
            }
            MapPrimitive::Table(t) => {
                if !space.is_finite() || t.len() != space.len() || t.iter().any(|v| *v >= t.len()) {
                    return bad();
                }
                Ok(())
            }
            MapPrimitive::Product(a, b) => match space.components() {
                Some((l, r)) => {
                    a.check_space(l)?;
                    b.check_space(r)
                }
                None => bad(),
            },
            MapPrimitive::Compose(v) => v.iter().try_for_each(|m| m.check_space(space)),
        }
    }

    /// Evaluates the map. The caller guarantees `check_space` passed.
    pub fn eval(&self, space: &Space, p: PointId) -> PointId {
        match self {
            MapPrimitive::Identity => p,
            MapPrimitive::Affine(a, b) => affine(space, p, *a, *b, false),
            MapPrimitive::AffineMod1(a, b) => affine(space, p, *a, *b, true),
            MapPrimitive::Tent => {
                let x = space.coord(p).expect("real space");
                space.nearest(2.0 * x.min(1.0 - x)).expect("real space")
            }
            MapPrimitive::Shift(e) => {
                let len = space.word_len().expect("word space") as i64;
                let r = e.rem_euclid(len) as u32;
                let w = p.0 as u64;
                let mask = (1u64 << len) - 1;
                // y_p = x_{p+r}: rotate toward lower positions.
                let y = if r == 0 { w } else { ((w >> r) | (w << (len as u32 - r))) & mask };
                PointId(y as i64)
            }
            MapPrimitive::Successor(e) => {
                let n = space.successor_len().expect("successor set") as i64;
                if p.0 == 0 || p.0 == n - 1 || n <= 2 {
                    return p;
                }
                let interior = n - 2;
                PointId(1 + (p.0 - 1 + e).rem_euclid(interior))
            }
            MapPrimitive::SuccessorClamped(e) => {
                let n = space.successor_len().expect("successor set") as i64;
                if p.0 == 0 || p.0 == n - 1 {
                    return p;
                }
                PointId((p.0 + e).clamp(0, n - 1))
            }
            MapPrimitive::Table(t) => PointId(t[p.index()] as i64),
            MapPrimitive::Product(a, b) => {
                let (l, r) = space.components().expect("product space");
                let (pl, pr) = space.split(p);
                space.join(a.eval(l, pl), b.eval(r, pr))
            }
            MapPrimitive::Compose(v) => v.iter().fold(p, |q, m| m.eval(space, q)),
        }
    }

    /// Closed form of `self^e` where one exists, otherwise a composition.
    pub fn pow(&self, e: i64) -> Result<MapPrimitive> {
        if e == 0 {
            return Ok(MapPrimitive::Identity);
        }
        match self {
            MapPrimitive::Identity => Ok(MapPrimitive::Identity),
            MapPrimitive::Affine(a, b) | MapPrimitive::AffineMod1(a, b) => {
                let modular = matches!(self, MapPrimitive::AffineMod1(..));
                let (a, b) = if e > 0 {
                    (*a, *b)
                } else {
                    let invertible = if modular { (a.abs() - 1.0).abs() < TOL } else { a.abs() > TOL };
                    if !invertible {
                        return Err(NasError::NotInvertible(self.name()));
                    }
                    (1.0 / a, -b / a)
                };
                let k = e.unsigned_abs() as i32;
                let ak = a.powi(k);
                let bk = if (a - 1.0).abs() < TOL { b * k as f64 } else { b * (ak - 1.0) / (a - 1.0) };
                Ok(if modular { MapPrimitive::AffineMod1(ak, bk) } else { MapPrimitive::Affine(ak, bk) })
            }
            MapPrimitive::Shift(s) => Ok(MapPrimitive::Shift(s * e)),
            MapPrimitive::Successor(s) => Ok(MapPrimitive::Successor(s * e)),
            MapPrimitive::SuccessorClamped(s) => Ok(MapPrimitive::SuccessorClamped(s * e)),
            MapPrimitive::Table(t) => {
                let base = if e > 0 { t.clone() } else { invert_table(t).ok_or_else(|| NasError::NotInvertible(self.name()))? };
                let mut out: Vec<usize> = (0..t.len()).collect();
                for _ in 0..e.unsigned_abs() {
                    out = out.iter().map(|&v| base[v]).collect();
                }
                Ok(MapPrimitive::Table(out))
            }
            MapPrimitive::Product(a, b) => Ok(MapPrimitive::Product(Box::new(a.pow(e)?), Box::new(b.pow(e)?))),
            MapPrimitive::Tent | MapPrimitive::Compose(_) => {
                if e < 0 {
                    let inv = match self {
                        MapPrimitive::Compose(v) => v
                            .iter()
                            .rev()
                            .map(|m| m.pow(-1))
                            .collect::<Result<Vec<_>>>()
                            .map(MapPrimitive::Compose)?,
                        _ => return Err(NasError::NotInvertible(self.name())),
                    };
                    return inv.pow(-e);
                }
                Ok(MapPrimitive::Compose(vec![self.clone(); e as usize]))
            }
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &MapPrimitive) -> MapPrimitive {
        match (self, next) {
            (MapPrimitive::Identity, m) | (m, MapPrimitive::Identity) => m.clone(),
            _ => MapPrimitive::Compose(vec![self.clone(), next.clone()]),
        }
    }

    /// Evaluates the map on every enumerated point of a finite space.
    pub fn tabulate(&self, space: &Space) -> Result<Vec<usize>> {
        if !space.is_finite() {
            return Err(NasError::InfiniteSpace(space.to_string()));
        }
        self.check_space(space)?;
        Ok(space.points().map(|p| self.eval(space, p).index()).collect())
    }
}

pub(crate) fn invert_table(t: &[usize]) -> Option<Vec<usize>> {
    let mut inv = vec![usize::MAX; t.len()];
    for (i, &v) in t.iter().enumerate() {
        if v >= t.len() || inv[v] != usize::MAX {
            return None;
        }
        inv[v] = i;
    }
    Some(inv)
}

fn affine(space: &Space, p: PointId, a: f64, b: f64, modular: bool) -> PointId {
    if let Some((origin, step)) = space.lattice() {
        let circle = matches!(space.kind(), crate::metric_space::SpaceKind::CircleGrid { .. });
        if circle {
            // k/n ↦ (a·k/n + b) mod 1, evaluated in lattice units.
            let n = (1.0 / step).round();
            let v = round_half_down(a * p.0 as f64 + b * n);
            return PointId((v as i64).rem_euclid(n as i64));
        }
        // origin + k·h ↦ origin + k'·h with k' = a·k + (a·origin + b − origin)/h.
        let v = a * p.0 as f64 + (a * origin + b - origin) / step;
        let x = if modular {
            let y = origin + v * step;
            let y = y.rem_euclid(1.0);
            return space.nearest(y).expect("real space");
        } else {
            v
        };
        let k = round_half_down(x);
        return match space.kind() {
            crate::metric_space::SpaceKind::IntervalGrid { n, .. } => {
                PointId(k.clamp(0.0, *n as f64 - 1.0) as i64)
            }
            _ => PointId(k as i64),
        };
    }
    let x = space.coord(p).expect("real space");
    let mut y = a * x + b;
    if modular {
        y = y.rem_euclid(1.0);
    }
    space.nearest(y).expect("real space")
}

/// Integer exponent rules for power-word systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentRule {
    /// Repeats the list forever.
    Cycle(Vec<i64>),
    /// `1, -1, -2, 2, 3, -3, -4, 4, …`: pair `k` is `(k, -k)` for odd `k`
    /// and `(-k, k)` for even `k`.
    SignedPairs,
    /// `1, -1, 2, -2, 3, -3, …`.
    Ascending,
    /// Stages `s = 1, 2, …`; stage `s` replays the first `first_len·2^(s-1)`
    /// entries of [`ExponentRule::SignedPairs`]. With `unit_steps` every
    /// entry `e` is written as `|e|` single steps of sign `e`.
    RestartingPrefixes { first_len: usize, unit_steps: bool },
}

fn signed_pair(i: usize) -> i64 {
    let k = i.div_ceil(2) as i64;
    let first = i % 2 == 1;
    match (k % 2 == 1, first) {
        (true, true) | (false, false) => k,
        _ => -k,
    }
}

impl ExponentRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            ExponentRule::Cycle(v) if v.is_empty() => {
                Err(NasError::Argument("empty exponent cycle".into()))
            }
            ExponentRule::RestartingPrefixes { first_len, .. } if *first_len == 0 || first_len % 2 == 1 => {
                Err(NasError::Argument("stage length must be a positive even number".into()))
            }
            _ => Ok(()),
        }
    }

    /// Exponent of generator `i ≥ 1`.
    pub fn exponent(&self, i: usize) -> i64 {
        assert!(i >= 1, "generator indices start at 1");
        match self {
            ExponentRule::Cycle(v) => v[(i - 1) % v.len()],
            ExponentRule::SignedPairs => signed_pair(i),
            ExponentRule::Ascending => {
                let k = i.div_ceil(2) as i64;
                if i % 2 == 1 {
                    k
                } else {
                    -k
                }
            }
            ExponentRule::RestartingPrefixes { first_len, unit_steps } => {
                let mut r = i - 1;
                let mut entries = *first_len;
                loop {
                    // half of the stage: pairs 1..=entries/2 each contribute 2k unit steps
                    let len = if *unit_steps {
                        let p = entries / 2;
                        p * (p + 1)
                    } else {
                        entries
                    };
                    if r < len {
                        break;
                    }
                    r -= len;
                    entries *= 2;
                }
                if !unit_steps {
                    return signed_pair(r + 1);
                }
                let mut t = 1;
                loop {
                    let e = signed_pair(t);
                    let m = e.unsigned_abs() as usize;
                    if r < m {
                        return e.signum();
                    }
                    r -= m;
                    t += 1;
                }
            }
        }
    }

    pub fn prefix(&self, n: usize) -> Vec<i64> {
        (1..=n).map(|i| self.exponent(i)).collect()
    }

    pub fn period(&self) -> Option<usize> {
        match self {
            ExponentRule::Cycle(v) => Some(v.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeqRep {
    Autonomous(MapPrimitive),
    Periodic(Vec<MapPrimitive>),
    PowerWord { base: MapPrimitive, rule: ExponentRule },
    Iterate { inner: Box<MapSequence>, k: usize },
    Product(Box<MapSequence>, Box<MapSequence>),
}

/// A non-autonomous system on a space model. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSequence {
    space: Space,
    rep: SeqRep,
    commutative: bool,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl MapSequence {
    pub fn autonomous(space: &Space, map: MapPrimitive) -> Result<MapSequence> {
        map.check_space(space)?;
        Ok(MapSequence { space: space.clone(), rep: SeqRep::Autonomous(map), commutative: true })
    }

    pub fn periodic(space: &Space, maps: Vec<MapPrimitive>) -> Result<MapSequence> {
        if maps.is_empty() {
            return Err(NasError::Argument("periodic system needs at least one map".into()));
        }
        for m in &maps {
            m.check_space(space)?;
        }
        Ok(MapSequence { space: space.clone(), rep: SeqRep::Periodic(maps), commutative: false })
    }

    /// Generators `base^{e_i}`. Powers of one map always commute.
    pub fn power_word(space: &Space, base: MapPrimitive, rule: ExponentRule) -> Result<MapSequence> {
        base.check_space(space)?;
        rule.validate()?;
        // surface missing inverses at construction time
        let probe = rule.period().unwrap_or(64);
        for i in 1..=probe {
            base.pow(rule.exponent(i))?;
        }
        Ok(MapSequence { space: space.clone(), rep: SeqRep::PowerWord { base, rule }, commutative: true })
    }

    /// Claims commutativity after verifying it over `horizon` generator
    /// indices (or one full cycle for periodic systems).
    pub fn assert_commutative(mut self, horizon: usize) -> Result<MapSequence> {
        if let Some((i, j, p)) = self.commutativity_violation(horizon) {
            return Err(NasError::Argument(format!(
                "generators {i} and {j} do not commute at point {p}"
            )));
        }
        self.commutative = true;
        Ok(self)
    }

    /// First `(i, j, x)` with `f_i(f_j(x)) ≠ f_j(f_i(x))`, scanning generator
    /// indices up to one cycle (or `horizon` for aperiodic systems).
    pub fn commutativity_violation(&self, horizon: usize) -> Option<(usize, usize, PointId)> {
        let c = self.cycle_len(horizon);
        for i in 1..=c {
            for j in i + 1..=c {
                for p in self.space.points() {
                    let a = self.apply(i, self.apply(j, p));
                    let b = self.apply(j, self.apply(i, p));
                    if a != b {
                        return Some((i, j, p));
                    }
                }
            }
        }
        None
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn rep(&self) -> &SeqRep {
        &self.rep
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn is_autonomous(&self) -> bool {
        match &self.rep {
            SeqRep::Autonomous(_) => true,
            SeqRep::Product(a, b) => a.is_autonomous() && b.is_autonomous(),
            _ => false,
        }
    }

    /// Exact period of the generator sequence when the representation
    /// guarantees one.
    pub fn period(&self) -> Option<usize> {
        match &self.rep {
            SeqRep::Autonomous(_) => Some(1),
            SeqRep::Periodic(v) => Some(v.len()),
            SeqRep::PowerWord { base, rule } => {
                if *base == MapPrimitive::Identity {
                    Some(1)
                } else {
                    rule.period()
                }
            }
            SeqRep::Iterate { inner, k } => inner.period().map(|p| p / gcd(p, *k)),
            SeqRep::Product(a, b) => {
                let (p, q) = (a.period()?, b.period()?);
                Some(p / gcd(p, q) * q)
            }
        }
    }

    /// Generator indices to scan for "all i": one period, else `horizon`.
    pub fn cycle_len(&self, horizon: usize) -> usize {
        self.period().unwrap_or(horizon.max(1))
    }

    /// `f_i(x)` for `i ≥ 1`.
    pub fn apply(&self, i: usize, p: PointId) -> PointId {
        debug_assert!(i >= 1);
        match &self.rep {
            SeqRep::Autonomous(m) => m.eval(&self.space, p),
            SeqRep::Periodic(v) => v[(i - 1) % v.len()].eval(&self.space, p),
            SeqRep::PowerWord { base, rule } => power_eval(&self.space, base, rule.exponent(i), p),
            SeqRep::Iterate { inner, k } => inner.block_unchecked((i - 1) * k + 1, i * k, p),
            SeqRep::Product(a, b) => {
                let (pl, pr) = self.space.split(p);
                self.space.join(a.apply(i, pl), b.apply(i, pr))
            }
        }
    }

    /// Checked `f_i(x)`.
    pub fn try_apply(&self, i: usize, p: PointId) -> Result<PointId> {
        if i == 0 {
            return Err(NasError::Argument(
                "generator index 0 is the identity; use compose_n(0, x)".into(),
            ));
        }
        self.space.check(p)?;
        Ok(self.apply(i, p))
    }

    /// `F_n(x)`; `F_0` is the identity.
    pub fn compose_n(&self, n: usize, p: PointId) -> PointId {
        if n == 0 {
            p
        } else {
            self.block_unchecked(1, n, p)
        }
    }

    /// `F_[j,k](x)` for `1 ≤ j ≤ k`.
    pub fn block(&self, j: usize, k: usize, p: PointId) -> Result<PointId> {
        if j == 0 || j > k {
            return Err(NasError::Argument(format!("block [{j}, {k}] needs 1 <= j <= k")));
        }
        self.space.check(p)?;
        Ok(self.block_unchecked(j, k, p))
    }

    fn block_unchecked(&self, j: usize, k: usize, p: PointId) -> PointId {
        match &self.rep {
            SeqRep::PowerWord { base, rule } if exact_action(base) => {
                let e: i64 = (j..=k).map(|i| rule.exponent(i)).sum();
                power_eval(&self.space, base, e, p)
            }
            SeqRep::Iterate { inner, k: m } => inner.block_unchecked((j - 1) * m + 1, k * m, p),
            SeqRep::Product(a, b) => {
                let (pl, pr) = self.space.split(p);
                self.space.join(a.block_unchecked(j, k, pl), b.block_unchecked(j, k, pr))
            }
            _ => (j..=k).fold(p, |q, i| self.apply(i, q)),
        }
    }

    /// `[F_0(x), …, F_T(x)]`.
    pub fn orbit(&self, p: PointId, t: usize) -> Vec<PointId> {
        match &self.rep {
            SeqRep::PowerWord { base, rule } if exact_action(base) => {
                let mut out = Vec::with_capacity(t + 1);
                out.push(p);
                let mut e = 0i64;
                for i in 1..=t {
                    e += rule.exponent(i);
                    out.push(power_eval(&self.space, base, e, p));
                }
                out
            }
            SeqRep::Iterate { inner, k } => inner.orbit(p, t * k).into_iter().step_by(*k).collect(),
            SeqRep::Product(a, b) => {
                let (pl, pr) = self.space.split(p);
                let oa = a.orbit(pl, t);
                let ob = b.orbit(pr, t);
                oa.into_iter().zip(ob).map(|(l, r)| self.space.join(l, r)).collect()
            }
            _ => {
                let mut out = Vec::with_capacity(t + 1);
                out.push(p);
                let mut q = p;
                for i in 1..=t {
                    q = self.apply(i, q);
                    out.push(q);
                }
                out
            }
        }
    }

    /// The `k`-th iterate `F^k`.
    pub fn iterate(&self, k: usize) -> Result<MapSequence> {
        if k == 0 {
            return Err(NasError::Argument("iterate needs k >= 1".into()));
        }
        if k == 1 {
            return Ok(self.clone());
        }
        let rep = match &self.rep {
            SeqRep::Autonomous(m) => SeqRep::Autonomous(m.pow(k as i64)?),
            _ => SeqRep::Iterate { inner: Box::new(self.clone()), k },
        };
        Ok(MapSequence { space: self.space.clone(), rep, commutative: self.commutative })
    }

    /// `F × G` on the product space.
    pub fn product(&self, other: &MapSequence) -> Result<MapSequence> {
        let space = Space::product(&self.space, &other.space)?;
        let rep = match (&self.rep, &other.rep) {
            (SeqRep::Autonomous(MapPrimitive::Identity), SeqRep::Autonomous(MapPrimitive::Identity)) => {
                SeqRep::Autonomous(MapPrimitive::Identity)
            }
            (SeqRep::Autonomous(a), SeqRep::Autonomous(b)) => {
                SeqRep::Autonomous(MapPrimitive::Product(Box::new(a.clone()), Box::new(b.clone())))
            }
            _ => SeqRep::Product(Box::new(self.clone()), Box::new(other.clone())),
        };
        Ok(MapSequence { space, rep, commutative: self.commutative && other.commutative })
    }

    /// A periodic system of tabulated generators over one cycle.
    pub fn tabulated_cycle(&self) -> Result<Vec<Vec<usize>>> {
        if !self.space.is_finite() {
            return Err(NasError::InfiniteSpace(self.space.to_string()));
        }
        let p = self.period().ok_or(NasError::Aperiodic)?;
        Ok((1..=p)
            .map(|i| self.space.points().map(|x| self.apply(i, x).index()).collect())
            .collect())
    }

    /// Whether every generator over one cycle (or `horizon`) is onto the
    /// enumerated points. Only meaningful on finite spaces.
    pub fn is_surjective(&self, horizon: usize) -> Result<bool> {
        if !self.space.is_finite() {
            return Err(NasError::InfiniteSpace(self.space.to_string()));
        }
        let n = self.space.len();
        for i in 1..=self.cycle_len(horizon) {
            let mut hit = vec![false; n];
            for p in self.space.points() {
                hit[self.apply(i, p).index()] = true;
            }
            if hit.iter().any(|h| !h) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn exact_action(base: &MapPrimitive) -> bool {
    matches!(base, MapPrimitive::Identity | MapPrimitive::Shift(_) | MapPrimitive::Successor(_))
}

fn power_eval(space: &Space, base: &MapPrimitive, e: i64, p: PointId) -> PointId {
    match base {
        MapPrimitive::Identity => p,
        MapPrimitive::Shift(s) => MapPrimitive::Shift(s * e).eval(space, p),
        MapPrimitive::Successor(s) => MapPrimitive::Successor(s * e).eval(space, p),
        MapPrimitive::SuccessorClamped(s) => MapPrimitive::SuccessorClamped(s * e).eval(space, p),
        _ => base
            .pow(e)
            .expect("power validated at construction")
            .eval(space, p),
    }
}

/// `η(f, g) = sup_x d₁(f(x), g(x))` over the enumerated points.
pub fn eta_distance(space: &Space, f: &MapPrimitive, g: &MapPrimitive) -> Result<f64> {
    f.check_space(space)?;
    g.check_space(space)?;
    Ok(eta_between(space, |p| f.eval(space, p), |p| g.eval(space, p)))
}

pub fn eta_between(
    space: &Space,
    f: impl Fn(PointId) -> PointId,
    g: impl Fn(PointId) -> PointId,
) -> f64 {
    space
        .points()
        .map(|p| space.bounded_dist(f(p), g(p)))
        .fold(0.0, f64::max)
}

/// `γ(F, G)` restricted to generator indices `1..=horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub value: f64,
    pub horizon: usize,
    /// True when both systems are periodic and the horizon spans a common
    /// period, so the value is the exact supremum.
    pub exact: bool,
}

pub fn gamma_distance(f: &MapSequence, g: &MapSequence, horizon: usize) -> Result<Gamma> {
    if f.space != g.space {
        return Err(NasError::SpaceMismatch(format!("{} vs {}", f.space, g.space)));
    }
    let space = &f.space;
    let value = (1..=horizon.max(1))
        .map(|i| eta_between(space, |p| f.apply(i, p), |p| g.apply(i, p)))
        .fold(0.0, f64::max);
    let exact = match (f.period(), g.period()) {
        (Some(p), Some(q)) => horizon >= p / gcd(p, q) * q,
        _ => false,
    };
    Ok(Gamma { value, horizon, exact })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval() -> Space {
        Space::interval(0.0, 1.0, 101).unwrap()
    }

    fn at(space: &Space, x: f64) -> PointId {
        space.nearest(x).unwrap()
    }

    #[test]
    fn tent_evaluation() {
        let s = unit_interval();
        let f = MapSequence::autonomous(&s, MapPrimitive::Tent).unwrap();
        assert_eq!(f.apply(1, at(&s, 0.25)), at(&s, 0.5));
        assert_eq!(f.compose_n(2, at(&s, 0.25)), at(&s, 1.0));
        assert_eq!(f.compose_n(0, at(&s, 0.37)), at(&s, 0.37));
    }

    #[test]
    fn periodic_generators_repeat() {
        let s = unit_interval();
        let f = MapSequence::periodic(
            &s,
            vec![MapPrimitive::Identity, MapPrimitive::Affine(2.0, 0.0), MapPrimitive::Identity],
        )
        .unwrap();
        for p in s.points() {
            assert_eq!(f.apply(4, p), f.apply(1, p));
            assert_eq!(f.apply(5, p), f.apply(2, p));
        }
        assert_eq!(f.period(), Some(3));
    }

    #[test]
    fn index_zero_is_rejected() {
        let s = unit_interval();
        let f = MapSequence::autonomous(&s, MapPrimitive::Tent).unwrap();
        assert!(f.try_apply(0, PointId(3)).is_err());
        assert!(f.try_apply(1, PointId(300)).is_err());
        assert!(f.block(3, 2, PointId(0)).is_err());
    }

    #[test]
    fn signed_pairs_and_stages() {
        assert_eq!(ExponentRule::SignedPairs.prefix(8), vec![1, -1, -2, 2, 3, -3, -4, 4]);
        assert_eq!(ExponentRule::Ascending.prefix(6), vec![1, -1, 2, -2, 3, -3]);
        let staged = ExponentRule::RestartingPrefixes { first_len: 4, unit_steps: false };
        assert_eq!(
            staged.prefix(28),
            vec![
                1, -1, -2, 2, //
                1, -1, -2, 2, 3, -3, -4, 4, //
                1, -1, -2, 2, 3, -3, -4, 4, 5, -5, -6, 6, 7, -7, -8, 8
            ]
        );
        let unit = ExponentRule::RestartingPrefixes { first_len: 2, unit_steps: true };
        assert_eq!(
            unit.prefix(2 + 6 + 12),
            vec![
                1, -1, //
                1, -1, -1, -1, 1, 1, //
                1, -1, -1, -1, 1, 1, 1, 1, 1, -1, -1, -1
            ]
        );
    }

    #[test]
    fn shift_pattern_third_generator() {
        let s = Space::words(8).unwrap();
        let g = MapSequence::power_word(&s, MapPrimitive::Shift(1), ExponentRule::SignedPairs).unwrap();
        for p in s.points() {
            assert_eq!(g.apply(3, p), MapPrimitive::Shift(-2).eval(&s, p));
        }
    }

    #[test]
    fn shift_is_a_bijection() {
        let s = Space::words(8).unwrap();
        for e in -9..9 {
            let t = MapPrimitive::Shift(e).tabulate(&s).unwrap();
            assert!(invert_table(&t).is_some());
        }
        // y_i = x_{i+1}: the bit at position 1 moves to position 0
        assert_eq!(MapPrimitive::Shift(1).eval(&s, PointId(0b10)), PointId(0b1));
        assert_eq!(MapPrimitive::Shift(1).eval(&s, PointId(0b1)), PointId(0b1000_0000));
    }

    #[test]
    fn scaling_triplet_composes_once_per_block() {
        let s = Space::line(-1.0, 1.0, 201).unwrap();
        let f = MapSequence::periodic(
            &s,
            vec![MapPrimitive::Affine(2.0, 0.0), MapPrimitive::Identity, MapPrimitive::Identity],
        )
        .unwrap();
        let half = at(&s, 0.5);
        assert_eq!(s.coord(f.compose_n(3, half)), Some(1.0));
        let cube = f.iterate(3).unwrap();
        for p in s.points() {
            for i in 1..5 {
                assert_eq!(cube.apply(i, p), MapPrimitive::Affine(2.0, 0.0).eval(&s, p));
            }
        }
    }

    #[test]
    fn alternating_powers_cancel_in_pairs() {
        let s = Space::line(-1.0, 1.0, 201).unwrap();
        let f = MapSequence::power_word(&s, MapPrimitive::Affine(2.0, 0.0), ExponentRule::Ascending).unwrap();
        let f2 = f.iterate(2).unwrap();
        for p in s.points() {
            assert_eq!(f.block(1, 2, p).unwrap(), p);
            for i in 1..20 {
                assert_eq!(f2.apply(i, p), p);
            }
        }
    }

    #[test]
    fn autonomous_iterate_is_power() {
        let s = unit_interval();
        let f = MapSequence::autonomous(&s, MapPrimitive::Tent).unwrap();
        let f3 = f.iterate(3).unwrap();
        assert!(f3.is_autonomous());
        for p in s.points() {
            assert_eq!(f3.apply(1, p), f.compose_n(3, p));
        }
        assert!(f.iterate(0).is_err());
    }

    #[test]
    fn product_of_identities() {
        let a = Space::circle(5).unwrap();
        let b = Space::words(3).unwrap();
        let id_a = MapSequence::autonomous(&a, MapPrimitive::Identity).unwrap();
        let id_b = MapSequence::autonomous(&b, MapPrimitive::Identity).unwrap();
        let p = id_a.product(&id_b).unwrap();
        assert_eq!(p.rep(), &SeqRep::Autonomous(MapPrimitive::Identity));
        assert_eq!(p.space().len(), 40);
    }

    #[test]
    fn eta_values() {
        let s = Space::line(-1.0, 1.0, 201).unwrap();
        let f = MapPrimitive::Affine(2.0, 0.0);
        assert_eq!(eta_distance(&s, &f, &f).unwrap(), 0.0);
        let g = MapPrimitive::Affine(2.0, 0.01);
        assert!((eta_distance(&s, &f, &g).unwrap() - 0.01).abs() < 1e-9);
        let wide = Space::interval(0.0, 3.0, 31).unwrap();
        let c = MapPrimitive::Affine(0.0, 0.0);
        assert_eq!(eta_distance(&wide, &MapPrimitive::Identity, &c).unwrap(), 1.0);
        let other = Space::circle(8).unwrap();
        let fa = MapSequence::autonomous(&s, f.clone()).unwrap();
        let fb = MapSequence::autonomous(&other, MapPrimitive::Identity).unwrap();
        assert!(gamma_distance(&fa, &fb, 3).is_err());
    }

    #[test]
    fn gamma_on_scaling_slots() {
        let s = Space::line(-1.0, 1.0, 201).unwrap();
        let id = MapPrimitive::Identity;
        let f = MapSequence::periodic(&s, vec![MapPrimitive::Affine(2.0, 0.0), id.clone(), id.clone()]).unwrap();
        let g = MapSequence::periodic(&s, vec![MapPrimitive::Affine(2.0, 0.01), id.clone(), id]).unwrap();
        let gm = gamma_distance(&f, &g, 3).unwrap();
        assert!((gm.value - 0.01).abs() < 1e-9);
        assert!(gm.exact);
        assert_eq!(gamma_distance(&f, &f, 3).unwrap().value, 0.0);
    }

    #[test]
    fn inverses_only_for_bijections() {
        assert!(MapPrimitive::Tent.pow(-1).is_err());
        assert!(MapPrimitive::AffineMod1(2.0, 0.0).pow(-1).is_err());
        assert!(MapPrimitive::Affine(0.0, 1.0).pow(-1).is_err());
        assert!(MapPrimitive::Table(vec![0, 0]).pow(-1).is_err());
        assert_eq!(MapPrimitive::Table(vec![1, 0]).pow(-1).unwrap(), MapPrimitive::Table(vec![1, 0]));
        assert_eq!(MapPrimitive::Affine(2.0, 0.0).pow(-1).unwrap(), MapPrimitive::Affine(0.5, 0.0));
    }

    #[test]
    fn successor_closure_is_bijective() {
        let s = Space::successor(12).unwrap();
        let t = MapPrimitive::Successor(1).tabulate(&s).unwrap();
        assert!(invert_table(&t).is_some());
        // 1/12 -> 1/11 and the fixed endpoints
        assert_eq!(t[1], 2);
        assert_eq!(t[0], 0);
        assert_eq!(t[22], 22);
        let clamped = MapPrimitive::SuccessorClamped(1).tabulate(&s).unwrap();
        assert!(invert_table(&clamped).is_none());
        assert_eq!(clamped[21], 22);
    }

    #[test]
    fn commutativity_detects_violations() {
        let s = unit_interval();
        let f = MapSequence::periodic(&s, vec![MapPrimitive::Tent, MapPrimitive::Affine(0.5, 0.1)]).unwrap();
        assert!(f.clone().assert_commutative(2).is_err());
        let g = MapSequence::periodic(&s, vec![MapPrimitive::Identity, MapPrimitive::Tent]).unwrap();
        assert!(g.assert_commutative(2).unwrap().is_commutative());
    }

    #[test]
    fn doubling_on_circle_rounds_offsets() {
        let s = Space::circle(4096).unwrap();
        let g = MapPrimitive::AffineMod1(2.0, 0.01);
        // 0.01·4096 = 40.96 rounds to 41 cells
        assert_eq!(g.eval(&s, PointId(0)), PointId(41));
        assert_eq!(g.eval(&s, PointId(2048)), PointId(41));
    }
}
