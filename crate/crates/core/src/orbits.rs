//! True orbits, δ-pseudo-orbits and δ-average-pseudo-orbits.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{PointId, Space, TOL};
use crate::system::MapSequence;
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitKind {
    Plain,
    /// Window averages of the step errors stay below δ for every window of
    /// length at least `n_delta`.
    Average { n_delta: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum OrbitSource {
    TrueOrbit,
    Perturbed { seed: u64 },
    Handcrafted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub points: Vec<PointId>,
    pub delta: f64,
    pub kind: OrbitKind,
    pub source: OrbitSource,
}

impl PseudoOrbit {
    /// Builds and validates a pseudo-orbit of `seq`.
    pub fn new(seq: &MapSequence, points: Vec<PointId>, delta: f64, kind: OrbitKind) -> Result<PseudoOrbit> {
        let po = PseudoOrbit::unchecked(points, delta, kind, OrbitSource::Handcrafted);
        let v = validate_pseudo_orbit(seq, &po)?;
        if !v.holds {
            return Err(NasError::Argument(format!(
                "sequence is not a {delta}-pseudo-orbit: {:?}",
                v.witness
            )));
        }
        Ok(po)
    }

    /// Wraps a sequence without validation, e.g. for imported data.
    pub fn unchecked(points: Vec<PointId>, delta: f64, kind: OrbitKind, source: OrbitSource) -> PseudoOrbit {
        PseudoOrbit { points, delta, kind, source }
    }

    /// Horizon `T`: the index of the last point.
    pub fn horizon(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `[F_0(x), …, F_T(x)]`. The recorded δ is the smallest admissible step
/// bound for exact orbits: one grid cell, or the minimum separation.
pub fn true_orbit(seq: &MapSequence, x: PointId, t: usize) -> Result<PseudoOrbit> {
    seq.space().check(x)?;
    let delta = (2.0 * seq.space().rounding_radius()).max(seq.space().resolution());
    Ok(PseudoOrbit::unchecked(seq.orbit(x, t), delta, OrbitKind::Plain, OrbitSource::TrueOrbit))
}

/// Step errors `e_i = d(f_{i+1}(x_i), x_{i+1})` for `0 ≤ i < T`.
pub fn step_errors(seq: &MapSequence, points: &[PointId]) -> Vec<f64> {
    let space = seq.space();
    points
        .windows(2)
        .enumerate()
        .map(|(i, w)| space.dist(seq.apply(i + 1, w[0]), w[1]))
        .collect()
}

fn pick(space: &Space, centre: PointId, radius: f64, rng: &mut ChaCha8Rng) -> PointId {
    *space.ball(centre, radius).choose(rng).unwrap_or(&centre)
}

/// Each step applies the next generator, then moves to a uniformly chosen
/// point strictly within `delta` of the image.
pub fn perturbed_orbit(seq: &MapSequence, x: PointId, t: usize, delta: f64, seed: u64) -> Result<PseudoOrbit> {
    let space = seq.space();
    space.check(x)?;
    let required = space.resolution();
    if delta <= required + TOL {
        return Err(NasError::DeltaTooSmall { delta, required });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(t + 1);
    points.push(x);
    let mut cur = x;
    for i in 1..=t {
        cur = pick(space, seq.apply(i, cur), delta, &mut rng);
        points.push(cur);
    }
    Ok(PseudoOrbit::unchecked(points, delta, OrbitKind::Plain, OrbitSource::Perturbed { seed }))
}

/// A δ-average-pseudo-orbit: ordinary steps stay within δ/2 of the image,
/// and at most one step in every `n_delta` jumps up to `δ·n_delta/4`.
/// Every window of length `n ≥ n_delta` then averages below δ.
pub fn average_pseudo_orbit(
    seq: &MapSequence,
    x: PointId,
    t: usize,
    delta: f64,
    n_delta: usize,
    seed: u64,
) -> Result<PseudoOrbit> {
    let space = seq.space();
    space.check(x)?;
    if n_delta == 0 {
        return Err(NasError::Argument("n_delta must be at least 1".into()));
    }
    let required = 2.0 * space.resolution();
    if delta <= required + TOL {
        return Err(NasError::DeltaTooSmall { delta, required });
    }
    let small = delta / 2.0 - TOL;
    let jump = delta * n_delta as f64 / 4.0 - TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(t + 1);
    points.push(x);
    let mut cur = x;
    let mut since_jump = n_delta;
    for i in 1..=t {
        let image = seq.apply(i, cur);
        let jumping = jump > small && since_jump >= n_delta && rng.gen_bool(0.3);
        if jumping {
            since_jump = 1;
            cur = pick(space, image, jump, &mut rng);
        } else {
            since_jump += 1;
            cur = pick(space, image, small, &mut rng);
        }
        points.push(cur);
    }
    let po = PseudoOrbit::unchecked(points, delta, OrbitKind::Average { n_delta }, OrbitSource::Perturbed { seed });
    debug_assert!(validate_pseudo_orbit(seq, &po).map(|v| v.holds).unwrap_or(false));
    Ok(po)
}

/// Checks the defining inequality at every index (plain) or every window
/// `(n, k)` with `n ≥ n_delta` inside the horizon (average). The witness is
/// the first violation in index order.
pub fn validate_pseudo_orbit(seq: &MapSequence, po: &PseudoOrbit) -> Result<Verdict> {
    for p in &po.points {
        seq.space().check(*p)?;
    }
    let t = po.horizon();
    let errs = step_errors(seq, &po.points);
    let bound = po.delta - TOL;
    let res = seq.space().rounding_radius();
    let verdict = match po.kind {
        OrbitKind::Plain => match errs.iter().position(|e| *e > bound) {
            None => Verdict::new("pseudo_orbit", true, t, res),
            Some(i) => Verdict::new("pseudo_orbit", false, t, res).with_witness(Witness::Index { index: i }),
        },
        OrbitKind::Average { n_delta } => {
            let mut prefix = vec![0.0; errs.len() + 1];
            for (i, e) in errs.iter().enumerate() {
                prefix[i + 1] = prefix[i] + e;
            }
            let mut witness = None;
            'scan: for k in 0..errs.len() {
                for n in n_delta.max(1)..=errs.len() - k {
                    if (prefix[k + n] - prefix[k]) / n as f64 > bound {
                        witness = Some(Witness::Window { n, k });
                        break 'scan;
                    }
                }
            }
            let v = Verdict::new("average_pseudo_orbit", witness.is_none(), t, res);
            match witness {
                Some(w) => v.with_witness(w),
                None => v,
            }
        }
    };
    Ok(verdict)
}

/// Writes `index,point,coords` rows.
pub fn write_csv<W: Write>(space: &Space, points: &[PointId], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "point", "coords"]).map_err(csv_err)?;
    for (i, p) in points.iter().enumerate() {
        w.write_record([i.to_string(), p.0.to_string(), space.coords(*p).to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `point` column of a CSV written by [`write_csv`]. Rows must be
/// in index order.
pub fn read_csv<R: Read>(space: &Space, input: R) -> Result<Vec<PointId>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| NasError::Config(format!("missing column {name}")))
    };
    let (ci, cp) = (col("index")?, col("point")?);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |c: usize| -> Result<i64> {
            rec.get(c)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| NasError::Config(format!("row {}: bad integer in column {c}", row + 1)))
        };
        if parse(ci)? != row as i64 {
            return Err(NasError::Config(format!("row {}: index out of order", row + 1)));
        }
        let p = PointId(parse(cp)?);
        space.check(p)?;
        out.push(p);
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> NasError {
    NasError::Io(e.to_string())
}
