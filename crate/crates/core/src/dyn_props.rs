//! Equicontinuity and expansivity checkers.
//!
//! Pair scans are exhaustive over the enumerated points and reduce to the
//! lexicographically smallest `(value, x, y)`, so results do not depend on
//! the thread schedule. On the line lattice the scan covers the window only.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{PointId, Space, TOL};
use crate::system::MapSequence;
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansivityKind {
    /// `max_{0≤n≤T} d(F_n x, F_n y)`.
    Plain,
    /// Max of `d(F_n x, F_n y)` over the tail window.
    Recurrent,
    /// Max of the Cesàro averages `(1/n)Σ_{i<n} d(F_i x, F_i y)` over the tail window.
    Mean,
}

impl ExpansivityKind {
    pub fn name(self) -> &'static str {
        match self {
            ExpansivityKind::Plain => "expansivity",
            ExpansivityKind::Recurrent => "recurrent_expansivity",
            ExpansivityKind::Mean => "mean_expansivity",
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(NasError::Argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Smallest `(f(x, y), x, y)` over distinct pairs `x < y`.
pub(crate) fn min_over_pairs<F>(n: usize, f: F) -> Option<(f64, usize, usize)>
where
    F: Fn(usize, usize, f64) -> f64 + Sync,
{
    let better = |a: (f64, usize, usize), b: (f64, usize, usize)| {
        if a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).is_le() {
            a
        } else {
            b
        }
    };
    (0..n)
        .into_par_iter()
        .filter_map(|x| {
            let mut best: Option<(f64, usize, usize)> = None;
            for y in x + 1..n {
                let bound = best.map_or(f64::INFINITY, |b| b.0);
                let v = f(x, y, bound);
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, x, y));
                }
            }
            best
        })
        .reduce_with(better)
}

/// Orbit rows `[F_0(x), …, F_T(x)]` for every enumerated point.
pub(crate) fn orbit_table(seq: &MapSequence, t: usize) -> Vec<Vec<PointId>> {
    let pts: Vec<PointId> = seq.space().points().collect();
    pts.par_iter().map(|p| seq.orbit(*p, t)).collect()
}

/// Generator tables `f_i(x)` for `i = 1..=cycle`.
pub(crate) fn generator_table(seq: &MapSequence, cycle: usize) -> Vec<Vec<PointId>> {
    (1..=cycle)
        .into_par_iter()
        .map(|i| seq.space().points().map(|p| seq.apply(i, p)).collect())
        .collect()
}

/// The expansivity constant `c*` of the requested kind: the minimum over
/// distinct pairs of the separation functional. Holds iff `c*` exceeds the
/// space resolution.
pub fn expansivity_constant(
    seq: &MapSequence,
    kind: ExpansivityKind,
    horizon: usize,
    tail_start: Option<usize>,
) -> Result<Verdict> {
    let space = seq.space();
    if horizon == 0 {
        return Err(NasError::Argument("horizon must be positive".into()));
    }
    let lo = match kind {
        ExpansivityKind::Plain => 0,
        _ => tail_start.unwrap_or(horizon / 2),
    };
    if kind != ExpansivityKind::Plain && lo >= horizon {
        return Err(NasError::Argument(format!("tail_start {lo} must be below horizon {horizon}")));
    }
    let table = orbit_table(seq, horizon);
    let best = min_over_pairs(space.len(), |x, y, bound| {
        let (ox, oy) = (&table[x], &table[y]);
        match kind {
            ExpansivityKind::Plain | ExpansivityKind::Recurrent => {
                let mut m = 0.0f64;
                for n in lo..=horizon {
                    m = m.max(space.dist(ox[n], oy[n]));
                    if m >= bound {
                        break;
                    }
                }
                m
            }
            ExpansivityKind::Mean => {
                let mut sum = 0.0;
                let mut m = 0.0f64;
                for n in 1..=horizon {
                    sum += space.dist(ox[n - 1], oy[n - 1]);
                    if n >= lo.max(1) {
                        m = m.max(sum / n as f64);
                    }
                }
                m
            }
        }
    });
    let mut v = Verdict::new(kind.name(), false, horizon, space.resolution());
    if !space.is_finite() {
        v.exhaustive = false;
        v = v.note("pairs restricted to the enumerated window of the lattice");
    }
    if kind != ExpansivityKind::Plain {
        v = v.note(format!("tail window [{lo}, {horizon}]"));
    }
    match best {
        None => {
            v.holds = true;
            Ok(v.note("fewer than two points"))
        }
        Some((c, x, y)) => {
            v.holds = c > space.resolution() + TOL;
            Ok(v.with_constant(c).with_witness(Witness::Pair { x: PointId(x as i64), y: PointId(y as i64) }))
        }
    }
}

pub fn estimate_expansivity(seq: &MapSequence, horizon: usize) -> Result<Verdict> {
    expansivity_constant(seq, ExpansivityKind::Plain, horizon, None)
}

pub fn estimate_recurrent_expansivity(seq: &MapSequence, horizon: usize, tail_start: Option<usize>) -> Result<Verdict> {
    expansivity_constant(seq, ExpansivityKind::Recurrent, horizon, tail_start)
}

pub fn estimate_mean_expansivity(seq: &MapSequence, horizon: usize, tail_start: Option<usize>) -> Result<Verdict> {
    expansivity_constant(seq, ExpansivityKind::Mean, horizon, tail_start)
}

/// Largest δ with `d(x, y) < δ ⇒ d(f_i x, f_i y) < eps` for all generator
/// indices in one cycle (or up to `horizon` for aperiodic systems).
pub fn check_equicontinuity(seq: &MapSequence, eps: f64, horizon: usize) -> Result<Verdict> {
    check_eps(eps)?;
    let space = seq.space();
    let cycle = seq.cycle_len(horizon);
    let gens = generator_table(seq, cycle);
    let limit = eps - TOL;
    let best = min_over_pairs(space.len(), |x, y, bound| {
        let d = space.dist(PointId(x as i64), PointId(y as i64));
        if d >= bound {
            return f64::INFINITY;
        }
        if gens.iter().any(|g| space.dist(g[x], g[y]) > limit) {
            d
        } else {
            f64::INFINITY
        }
    });
    let mut v = Verdict::new("equicontinuity", false, cycle, space.resolution());
    if seq.period().is_none() {
        v = v.note(format!("aperiodic system: generator indices 1..={cycle} only"));
    }
    match best {
        Some((d, x, y)) if d.is_finite() => {
            v.holds = d > space.resolution() + TOL;
            v = v.with_constant(d);
            if !v.holds {
                v = v.with_witness(Witness::Pair { x: PointId(x as i64), y: PointId(y as i64) });
            }
            Ok(v)
        }
        _ => {
            v.holds = true;
            Ok(v.with_constant(eps.max(space.diameter())).note("no violating pair"))
        }
    }
}

/// Paired sequences whose every prefix average stays below `delta`.
fn sample_pair(space: &Space, t: usize, delta: f64, rng: &mut ChaCha8Rng) -> (Vec<PointId>, Vec<PointId>) {
    let pts: Vec<PointId> = space.points().collect();
    let radius = delta - 2.0 * TOL;
    let mut xs = Vec::with_capacity(t);
    let mut ys = Vec::with_capacity(t);
    let mut sum = 0.0;
    for i in 0..t {
        let x = *pts.choose(rng).expect("non-empty space");
        let mut y = *space.ball(x, radius).choose(rng).unwrap_or(&x);
        if rng.gen_bool(0.1) {
            let far = *pts.choose(rng).expect("non-empty space");
            if sum + space.dist(x, far) <= (i + 1) as f64 * radius {
                y = far;
            }
        }
        sum += space.dist(x, y);
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// First `(generator, n)` where the pushed prefix average reaches `eps`.
fn pushed_violation(seq: &MapSequence, xs: &[PointId], ys: &[PointId], cycle: usize, eps: f64) -> Option<(usize, usize)> {
    let space = seq.space();
    for j in 1..=cycle {
        let mut sum = 0.0;
        for n in 1..=xs.len() {
            sum += space.dist(seq.apply(j, xs[n - 1]), seq.apply(j, ys[n - 1]));
            if sum / n as f64 > eps - TOL {
                return Some((j, n));
            }
        }
    }
    None
}

/// Randomized search for a δ (from `eps·2^{-k}`) under which every sampled
/// pair of sequences with prefix averages below δ has pushed averages below
/// `eps` for every generator in one cycle.
pub fn check_mean_equicontinuity(seq: &MapSequence, eps: f64, trials: usize, t: usize, seed: u64) -> Result<Verdict> {
    check_eps(eps)?;
    if t == 0 || trials == 0 {
        return Err(NasError::Argument("trials and T must be positive".into()));
    }
    let space = seq.space();
    let cycle = seq.cycle_len(t);
    let mut last_witness = None;
    let mut delta = eps;
    let mut v = Verdict::new("mean_equicontinuity", false, t, space.resolution()).sampled(seed);
    if seq.period().is_none() {
        v = v.note(format!("aperiodic system: generator indices 1..={cycle} only"));
    }
    while delta > space.resolution() + TOL {
        let failure = (0..trials)
            .into_par_iter()
            .filter_map(|trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial as u64 + 1);
                let (xs, ys) = sample_pair(space, t, delta, &mut rng);
                pushed_violation(seq, &xs, &ys, cycle, eps).map(|(j, n)| (trial, xs, ys, j, n))
            })
            .min_by_key(|f| f.0);
        match failure {
            None => {
                v.holds = true;
                return Ok(v.with_constant(delta));
            }
            Some((_, xs, ys, generator, n)) => {
                last_witness = Some(Witness::Sequences { xs, ys, generator, n });
            }
        }
        delta /= 2.0;
    }
    v.witness = last_witness;
    Ok(v)
}
