//! δ-chains, the uniform-length chain relation and transitivity on finite
//! models.
//!
//! A chain started at time class `j` steps with `f_j, f_{j+1}, …`; class
//! indices run over one period of the system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{PointId, Space, TOL};
use crate::system::MapSequence;
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Bits {
        let mut b = Bits::empty(n);
        for i in 0..n {
            b.set(i);
        }
        b
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn or(&mut self, o: &Bits) {
        self.0.iter_mut().zip(&o.0).for_each(|(a, b)| *a |= b);
    }

    fn and(&mut self, o: &Bits) {
        self.0.iter_mut().zip(&o.0).for_each(|(a, b)| *a &= b);
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }

    fn first_missing(&self, n: usize) -> Option<usize> {
        (0..n).find(|i| !self.get(*i))
    }
}

/// Transition graph of one time class: `x → y` iff `d(f_j x, y) < δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainGraph {
    pub delta: f64,
    pub time_class: usize,
    rows: Vec<Bits>,
}

impl ChainGraph {
    pub fn has_edge(&self, x: PointId, y: PointId) -> bool {
        self.rows[x.index()].get(y.index())
    }

    pub fn successors(&self, x: PointId) -> Vec<PointId> {
        self.rows[x.index()].iter().map(|i| PointId(i as i64)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.0.iter().map(|w| w.count_ones() as usize).sum::<usize>()).sum()
    }

    fn step(&self, from: &Bits, n: usize) -> Bits {
        let mut out = Bits::empty(n);
        for s in from.iter() {
            out.or(&self.rows[s]);
        }
        out
    }
}

fn require_finite(space: &Space) -> Result<()> {
    if space.is_finite() {
        Ok(())
    } else {
        Err(NasError::InfiniteSpace(space.to_string()))
    }
}

fn class_count(seq: &MapSequence) -> Result<usize> {
    seq.period().ok_or_else(|| {
        NasError::Argument(
            "system has no finite period; truncate it to a horizon with build_chain_graphs_truncated".into(),
        )
    })
}

/// One graph per time class over a full period.
pub fn build_chain_graphs(seq: &MapSequence, delta: f64) -> Result<Vec<ChainGraph>> {
    build_chain_graphs_truncated(seq, delta, class_count(seq)?)
}

/// Graphs for time classes `1..=classes`, for aperiodic systems cut at a
/// horizon.
pub fn build_chain_graphs_truncated(seq: &MapSequence, delta: f64, classes: usize) -> Result<Vec<ChainGraph>> {
    let space = seq.space();
    require_finite(space)?;
    if delta.is_nan() || delta <= 0.0 || classes == 0 {
        return Err(NasError::Argument("need delta > 0 and at least one time class".into()));
    }
    let n = space.len();
    let limit = delta - TOL;
    Ok((1..=classes)
        .into_par_iter()
        .map(|j| {
            let rows = space
                .points()
                .map(|x| {
                    let fx = seq.apply(j, x);
                    let mut row = Bits::empty(n);
                    for y in space.ball(fx, delta) {
                        if space.dist(fx, y) <= limit {
                            row.set(y.index());
                        }
                    }
                    row
                })
                .collect();
            ChainGraph { delta, time_class: j, rows }
        })
        .collect())
}

/// Calls `visit(n, S_n)` for `n = 1..=l_max`, where `S_n` holds the points
/// reachable from `x` by a chain of length exactly `n` from every time
/// class. Stops early once `visit` returns true.
fn uniform_reach(graphs: &[ChainGraph], x: usize, n: usize, l_max: usize, mut visit: impl FnMut(usize, &Bits) -> bool) {
    let p = graphs.len();
    let mut cur: Vec<Bits> = (0..p)
        .map(|_| {
            let mut b = Bits::empty(n);
            b.set(x);
            b
        })
        .collect();
    for len in 1..=l_max {
        let mut common = Bits::full(n);
        for (j, set) in cur.iter_mut().enumerate() {
            // class j+1 at step len uses generator index j + len
            let g = &graphs[(j + len - 1) % p];
            *set = g.step(set, n);
            common.and(set);
        }
        if visit(len, &common) {
            return;
        }
    }
}

/// Smallest `n ≤ l_max` such that every time class has a δ-chain of length
/// `n` from `x` to `y`.
pub fn check_r_delta(seq: &MapSequence, x: PointId, y: PointId, delta: f64, l_max: Option<usize>) -> Result<Verdict> {
    let space = seq.space();
    space.check(x)?;
    space.check(y)?;
    let graphs = build_chain_graphs(seq, delta)?;
    let n = space.len();
    let l_max = l_max.unwrap_or(n * graphs.len());
    let mut found = None;
    uniform_reach(&graphs, x.index(), n, l_max, |len, common| {
        if common.get(y.index()) {
            found = Some(len);
            true
        } else {
            false
        }
    });
    let v = Verdict::new("chain_relation", found.is_some(), l_max, space.resolution());
    Ok(match found {
        Some(len) => v.with_constant(len as f64),
        None => {
            let class = obstructing_class(&graphs, x.index(), y.index(), n, l_max);
            v.with_witness(Witness::Chain { x, y, delta, class })
        }
    })
}

/// A time class from which `y` is unreachable from `x`, if one exists.
fn obstructing_class(graphs: &[ChainGraph], x: usize, y: usize, n: usize, l_max: usize) -> Option<usize> {
    let p = graphs.len();
    (0..p)
        .find(|&j| {
            let mut set = Bits::empty(n);
            set.set(x);
            let mut seen = false;
            for len in 1..=l_max {
                set = graphs[(j + len - 1) % p].step(&set, n);
                if set.get(y) {
                    seen = true;
                    break;
                }
            }
            !seen
        })
        .map(|j| j + 1)
}

/// Chain transitivity over a δ grid, restricted to δ of at least twice the
/// rounding radius.
pub fn check_chain_transitive(seq: &MapSequence, delta_grid: &[f64], l_max: Option<usize>) -> Result<Verdict> {
    let space = seq.space();
    require_finite(space)?;
    let n = space.len();
    let floor = 2.0 * space.rounding_radius() - TOL;
    let grid: Vec<f64> = delta_grid.iter().copied().filter(|d| *d >= floor).collect();
    let mut v = Verdict::new("chain_transitivity", true, 0, space.resolution());
    if grid.len() < delta_grid.len() {
        v = v.note("grid values below twice the rounding radius skipped");
    }
    if grid.is_empty() {
        return Err(NasError::Argument("no delta in the grid is at least twice the rounding radius".into()));
    }
    let mut smallest = f64::INFINITY;
    for delta in grid {
        let graphs = build_chain_graphs(seq, delta)?;
        let l = l_max.unwrap_or(n * graphs.len());
        v.horizon = v.horizon.max(l);
        let failure = (0..n)
            .into_par_iter()
            .filter_map(|x| {
                let mut acc = Bits::empty(n);
                let full = Bits::full(n);
                uniform_reach(&graphs, x, n, l, |_, common| {
                    acc.or(common);
                    acc == full
                });
                acc.first_missing(n).map(|y| (x, y))
            })
            .min();
        if let Some((x, y)) = failure {
            v.holds = false;
            let class = obstructing_class(&graphs, x, y, n, l);
            return Ok(v.with_witness(Witness::Chain { x: PointId(x as i64), y: PointId(y as i64), delta, class }));
        }
        smallest = smallest.min(delta);
    }
    Ok(v.with_constant(smallest))
}

/// Transitivity with open sets modeled as `eps`-balls at every point: for
/// each ball pair `(U, V)` some `n ≤ horizon` has `F_[i, i+n-1](U) ∩ V ≠ ∅`
/// for every time class `i`.
pub fn check_transitive(seq: &MapSequence, eps_grid: &[f64], horizon: usize) -> Result<Verdict> {
    let space = seq.space();
    require_finite(space)?;
    if eps_grid.is_empty() || horizon == 0 {
        return Err(NasError::Argument("need a non-empty eps grid and a positive horizon".into()));
    }
    let n = space.len();
    let p = seq.cycle_len(horizon);
    let gens: Vec<Vec<usize>> = (1..=p)
        .map(|i| space.points().map(|x| seq.apply(i, x).index()).collect())
        .collect();
    let mut v = Verdict::new("transitivity", true, horizon, space.resolution());
    if seq.period().is_none() {
        v = v.note(format!("aperiodic system: time classes 1..={p} only"));
    }
    for &eps in eps_grid {
        let balls: Vec<Bits> = space
            .points()
            .map(|c| {
                let mut b = Bits::empty(n);
                space.ball(c, eps).into_iter().for_each(|q| b.set(q.index()));
                b
            })
            .collect();
        let failure = (0..n)
            .into_par_iter()
            .filter_map(|u| {
                let mut cur: Vec<Bits> = vec![balls[u].clone(); p];
                let mut acc = Bits::empty(n);
                let full = Bits::full(n);
                for len in 1..=horizon {
                    let mut common = Bits::full(n);
                    for (i, set) in cur.iter_mut().enumerate() {
                        let g = &gens[(i + len - 1) % p];
                        let mut img = Bits::empty(n);
                        set.iter().for_each(|s| img.set(g[s]));
                        *set = img;
                        // centres v whose ball meets the image
                        let mut hit = Bits::empty(n);
                        set.iter().for_each(|s| hit.or(&balls[s]));
                        common.and(&hit);
                    }
                    acc.or(&common);
                    if acc == full {
                        return None;
                    }
                }
                acc.first_missing(n).map(|v| (u, v))
            })
            .min();
        if let Some((u, w)) = failure {
            v.holds = false;
            return Ok(v.with_witness(Witness::Balls { u: PointId(u as i64), v: PointId(w as i64), radius: eps }));
        }
    }
    Ok(v)
}

/// Serializable summary of one class graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub delta: f64,
    pub time_class: usize,
    pub edges: usize,
}

pub fn summarize(graphs: &[ChainGraph]) -> Vec<GraphSummary> {
    graphs
        .iter()
        .map(|g| GraphSummary { delta: g.delta, time_class: g.time_class, edges: g.edge_count() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{ExponentRule, MapPrimitive};

    fn rotation12() -> MapSequence {
        MapSequence::autonomous(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0)).unwrap()
    }

    #[test]
    fn graph_counts() {
        let f = rotation12();
        assert_eq!(build_chain_graphs(&f, 0.1).unwrap().len(), 1);
        let s = Space::line(-1.0, 1.0, 21).unwrap();
        let id = MapPrimitive::Identity;
        let p3 = MapSequence::periodic(&s, vec![MapPrimitive::Affine(2.0, 0.0), id.clone(), id]).unwrap();
        assert!(build_chain_graphs(&p3, 0.1).is_err());
        let c = Space::circle(20).unwrap();
        let p3 = MapSequence::periodic(
            &c,
            vec![MapPrimitive::AffineMod1(2.0, 0.0), MapPrimitive::Identity, MapPrimitive::Identity],
        )
        .unwrap();
        assert_eq!(build_chain_graphs(&p3, 0.1).unwrap().len(), 3);
        let g = build_chain_graphs(&f, 0.6).unwrap();
        assert_eq!(g[0].edge_count(), 144);
    }

    #[test]
    fn aperiodic_needs_truncation() {
        let s = Space::words(4).unwrap();
        let g = MapSequence::power_word(&s, MapPrimitive::Shift(1), ExponentRule::SignedPairs).unwrap();
        assert!(build_chain_graphs(&g, 0.2).is_err());
        assert_eq!(build_chain_graphs_truncated(&g, 0.2, 5).unwrap().len(), 5);
    }

    #[test]
    fn rotation_reaches_everything() {
        let f = rotation12();
        for y in 0..12 {
            let v = check_r_delta(&f, PointId(0), PointId(y), 0.01, None).unwrap();
            assert!(v.holds);
            let n = v.constant_estimate.unwrap() as usize;
            assert!(n <= 12);
            // exact rotation: the only chain of length n lands on n/12
            assert_eq!(n % 12, y as usize);
        }
        assert!(check_chain_transitive(&f, &[0.2, 0.1, 0.05], None).unwrap().holds);
    }

    #[test]
    fn separated_components_fail() {
        let s = Space::words(1).unwrap();
        let f = MapSequence::autonomous(&s, MapPrimitive::Identity).unwrap();
        let v = check_r_delta(&f, PointId(0), PointId(1), 0.5, Some(10)).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.witness, Some(Witness::Chain { class: Some(1), .. })));
        assert!(!check_chain_transitive(&f, &[0.5], None).unwrap().holds);
        assert!(!check_transitive(&f, &[0.5], 10).unwrap().holds);
    }

    #[test]
    fn loops_give_self_chains() {
        let s = Space::circle(10).unwrap();
        let f = MapSequence::autonomous(&s, MapPrimitive::Identity).unwrap();
        let v = check_r_delta(&f, PointId(3), PointId(3), 0.05, None).unwrap();
        assert_eq!(v.constant_estimate, Some(1.0));
    }

    #[test]
    fn doubling_is_chain_transitive_and_transitive() {
        let f = MapSequence::autonomous(&Space::circle(64).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0)).unwrap();
        let v = check_chain_transitive(&f, &[0.2, 0.1, 0.05, 0.02, 0.01], None).unwrap();
        assert!(v.holds);
        assert!(v.constant_estimate.unwrap() < 0.05 + 1e-12);
        assert!(check_transitive(&f, &[0.1], 20).unwrap().holds);
    }

    #[test]
    fn constant_map_is_not_transitive() {
        let s = Space::circle(32).unwrap();
        let f = MapSequence::autonomous(&s, MapPrimitive::AffineMod1(0.0, 0.0)).unwrap();
        let v = check_transitive(&f, &[0.1], 20).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn monotone_in_delta() {
        let f = MapSequence::autonomous(&Space::circle(40).unwrap(), MapPrimitive::AffineMod1(1.0, 0.25)).unwrap();
        let grid = [0.3, 0.2, 0.1, 0.05];
        let mut prev = false;
        for d in grid.iter().rev() {
            let now = check_chain_transitive(&f, &[*d], None).unwrap().holds;
            assert!(!prev || now);
            prev = now;
        }
    }
}
