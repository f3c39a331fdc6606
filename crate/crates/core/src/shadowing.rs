//! Shadow-point search and sampled shadowing-property checks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NasError, Result};
use crate::metric_space::{PointId, TOL};
use crate::orbits::{average_pseudo_orbit, perturbed_orbit, PseudoOrbit};
use crate::system::MapSequence;
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowMode {
    /// `d(F_n z, x_n) < eps` for every `n`.
    Plain,
    /// Initial closeness plus a small tail maximum.
    Almost,
    /// Small tail Cesàro averages.
    Average,
    /// Initial closeness plus small tail Cesàro averages.
    StrongAverage,
}

impl ShadowMode {
    pub fn name(self) -> &'static str {
        match self {
            ShadowMode::Plain => "shadowing",
            ShadowMode::Almost => "almost_shadowing",
            ShadowMode::Average => "average_shadowing",
            ShadowMode::StrongAverage => "strong_average_shadowing",
        }
    }

    pub fn uses_average_orbits(self) -> bool {
        matches!(self, ShadowMode::Average | ShadowMode::StrongAverage)
    }

    fn needs_initial(self) -> bool {
        matches!(self, ShadowMode::Almost | ShadowMode::StrongAverage)
    }
}

/// Which part of the acceptance functional no candidate could meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowClause {
    InitialCloseness,
    Tail,
}

/// Error summaries of one candidate against a pseudo-orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub initial: f64,
    pub max: f64,
    pub tail_max: f64,
    pub cesaro_max: f64,
}

impl ErrorSummary {
    pub fn from_profile(profile: &[f64], tail_start: usize) -> ErrorSummary {
        let initial = profile.first().copied().unwrap_or(0.0);
        let max = profile.iter().copied().fold(0.0, f64::max);
        let lo = tail_start.min(profile.len().saturating_sub(1));
        let tail_max = profile[lo..].iter().copied().fold(0.0, f64::max);
        let mut sum = 0.0;
        let mut cesaro_max = 0.0f64;
        for (i, e) in profile.iter().enumerate() {
            sum += e;
            let n = i + 1;
            if n >= lo.max(1) {
                cesaro_max = cesaro_max.max(sum / n as f64);
            }
        }
        ErrorSummary { initial, max, tail_max, cesaro_max }
    }

    /// The functional minimized for `mode`.
    pub fn score(&self, mode: ShadowMode) -> f64 {
        match mode {
            ShadowMode::Plain => self.max,
            ShadowMode::Almost => self.initial.max(self.tail_max),
            ShadowMode::Average => self.cesaro_max,
            ShadowMode::StrongAverage => self.initial.max(self.cesaro_max),
        }
    }

    fn tail_score(&self, mode: ShadowMode) -> f64 {
        match mode {
            ShadowMode::Plain => self.max,
            ShadowMode::Almost => self.tail_max,
            ShadowMode::Average | ShadowMode::StrongAverage => self.cesaro_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowingResult {
    pub mode: ShadowMode,
    pub eps: f64,
    /// Best qualifying point, if any.
    pub shadow_point: Option<PointId>,
    /// Minimizer of the functional, qualifying or not.
    pub best_point: PointId,
    pub error_profile: Vec<f64>,
    pub summary: ErrorSummary,
    pub initial_closeness: f64,
    pub score: f64,
    pub qualifiers: usize,
    pub unique: bool,
    pub exhaustive: bool,
    pub tail_start: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_clause: Option<ShadowClause>,
}

impl ShadowingResult {
    pub fn succeeded(&self) -> bool {
        self.shadow_point.is_some()
    }
}

/// Distances `d(F_n z, x_n)` along the pseudo-orbit.
pub fn error_profile(seq: &MapSequence, po: &PseudoOrbit, z: PointId) -> Vec<f64> {
    let orbit = seq.orbit(z, po.horizon());
    orbit.iter().zip(&po.points).map(|(a, b)| seq.space().dist(*a, *b)).collect()
}

/// Candidate shadow points: every point of a finite space, or the window
/// plus the `eps`-ball around `x_0` on the lattice. The second form covers
/// every qualifier of the modes that require initial closeness.
fn candidates(seq: &MapSequence, po: &PseudoOrbit, eps: f64, mode: ShadowMode) -> (Vec<PointId>, bool) {
    let space = seq.space();
    if space.is_finite() {
        return (space.points().collect(), true);
    }
    let mut c: Vec<PointId> = space.points().collect();
    c.extend(space.ball(po.points[0], eps));
    c.sort();
    c.dedup();
    (c, mode != ShadowMode::Average)
}

/// Scans all candidates and returns the minimizer of the mode's functional
/// (ties go to the lowest point index).
pub fn find_shadow_point(
    seq: &MapSequence,
    po: &PseudoOrbit,
    eps: f64,
    mode: ShadowMode,
    tail_start: Option<usize>,
) -> Result<ShadowingResult> {
    if po.is_empty() {
        return Err(NasError::Argument("empty pseudo-orbit".into()));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(NasError::Argument(format!("eps must be positive, got {eps}")));
    }
    for p in &po.points {
        seq.space().check(*p)?;
    }
    let lo = tail_start.unwrap_or(po.horizon() / 2);
    let (cands, exhaustive) = candidates(seq, po, eps, mode);
    Ok(shadow_among(seq, po, eps, mode, lo, &cands, exhaustive))
}

/// Scored candidates `(score, tail score, z)`.
fn score_candidates(seq: &MapSequence, po: &PseudoOrbit, mode: ShadowMode, lo: usize, cands: &[PointId]) -> Vec<(f64, f64, PointId)> {
    cands
        .par_iter()
        .map(|z| {
            let s = ErrorSummary::from_profile(&error_profile(seq, po, *z), lo);
            (s.score(mode), s.tail_score(mode), *z)
        })
        .collect()
}

/// Candidates from `cands` that qualify as `eps`-shadows in the mode's sense.
pub fn qualifying_points(
    seq: &MapSequence,
    po: &PseudoOrbit,
    eps: f64,
    mode: ShadowMode,
    lo: usize,
    cands: &[PointId],
) -> Vec<PointId> {
    score_candidates(seq, po, mode, lo, cands)
        .into_iter()
        .filter(|s| s.0 <= eps - TOL)
        .map(|s| s.2)
        .collect()
}

/// Shadow search restricted to `cands` (non-empty, all in the space).
pub(crate) fn shadow_among(
    seq: &MapSequence,
    po: &PseudoOrbit,
    eps: f64,
    mode: ShadowMode,
    lo: usize,
    cands: &[PointId],
    exhaustive: bool,
) -> ShadowingResult {
    let limit = eps - TOL;
    let scored = score_candidates(seq, po, mode, lo, cands);
    let (score, _, best) = scored
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)))
        .expect("at least one candidate");
    let qualifiers = scored.iter().filter(|s| s.0 <= limit).count();
    let profile = error_profile(seq, po, best);
    let summary = ErrorSummary::from_profile(&profile, lo);
    let failed_clause = if qualifiers > 0 {
        None
    } else if mode.needs_initial() && scored.iter().any(|s| s.1 <= limit) {
        Some(ShadowClause::InitialCloseness)
    } else {
        Some(ShadowClause::Tail)
    };
    ShadowingResult {
        mode,
        eps,
        shadow_point: (qualifiers > 0).then_some(best),
        best_point: best,
        initial_closeness: summary.initial,
        error_profile: profile,
        summary,
        score,
        qualifiers,
        unique: exhaustive && qualifiers == 1,
        exhaustive,
        tail_start: lo,
        failed_clause,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowingParams {
    pub eps: f64,
    pub delta_grid: Vec<f64>,
    pub sample: usize,
    pub t: usize,
    pub seed: u64,
    pub mode: ShadowMode,
    pub tail_start: Option<usize>,
    /// Window length bound for average-kind pseudo-orbits.
    pub n_delta: usize,
}

impl ShadowingParams {
    pub fn new(eps: f64, mode: ShadowMode) -> ShadowingParams {
        ShadowingParams {
            eps,
            delta_grid: DEFAULT_DELTA_GRID.to_vec(),
            sample: 50,
            t: 200,
            seed: 0,
            mode,
            tail_start: None,
            n_delta: 4,
        }
    }
}

pub const DEFAULT_DELTA_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

/// One CSV row of a shadowing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowRow {
    pub delta: f64,
    pub sample_id: usize,
    pub success: bool,
    pub max_error: f64,
    pub tail_error: f64,
    pub cesaro_error: f64,
    pub shadow_point: Option<i64>,
}

/// Seeded pseudo-orbit `sample_id` at grid position `delta_index`.
pub fn sample_pseudo_orbit(
    seq: &MapSequence,
    params: &ShadowingParams,
    delta_index: usize,
    sample_id: usize,
) -> Result<PseudoOrbit> {
    let delta = params.delta_grid[delta_index];
    let sub_seed = params
        .seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(((delta_index as u64) << 32) | sample_id as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
    let pts: Vec<PointId> = seq.space().points().collect();
    let x0 = *pts.choose(&mut rng).expect("non-empty space");
    if params.mode.uses_average_orbits() {
        average_pseudo_orbit(seq, x0, params.t, delta, params.n_delta, sub_seed)
    } else {
        perturbed_orbit(seq, x0, params.t, delta, sub_seed)
    }
}

/// Tests seeded pseudo-orbits at each δ of the descending grid and reports
/// the largest δ at which every sample is shadowed.
pub fn shadowing_table(seq: &MapSequence, params: &ShadowingParams) -> Result<(Verdict, Vec<ShadowRow>)> {
    if params.delta_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(NasError::Argument("delta grid must be strictly descending".into()));
    }
    if !(params.eps > 0.0 && params.eps < 1.0) || params.sample == 0 || params.t == 0 {
        return Err(NasError::Argument("need eps in (0, 1) and positive sample and T".into()));
    }
    let space = seq.space();
    let min_delta = if params.mode.uses_average_orbits() { 2.0 * space.resolution() } else { space.resolution() };
    let mut rows = Vec::new();
    let mut witness = None;
    let mut v = Verdict::new(params.mode.name(), false, params.t, space.resolution()).sampled(params.seed);
    for (di, &delta) in params.delta_grid.iter().enumerate() {
        if delta <= min_delta + TOL {
            v = v.note(format!("skipped delta {delta}: not above the grid resolution"));
            continue;
        }
        let results: Vec<(PseudoOrbit, ShadowingResult)> = (0..params.sample)
            .map(|s| {
                let po = sample_pseudo_orbit(seq, params, di, s)?;
                let r = find_shadow_point(seq, &po, params.eps, params.mode, params.tail_start)?;
                Ok((po, r))
            })
            .collect::<Result<_>>()?;
        let mut all = true;
        for (s, (po, r)) in results.into_iter().enumerate() {
            rows.push(ShadowRow {
                delta,
                sample_id: s,
                success: r.succeeded(),
                max_error: r.summary.max,
                tail_error: r.summary.tail_max,
                cesaro_error: r.summary.cesaro_max,
                shadow_point: r.shadow_point.map(|p| p.0),
            });
            if !r.succeeded() && all {
                all = false;
                witness = Some(Witness::Orbit { points: po.points });
            }
        }
        if all {
            v.holds = true;
            v = v.with_constant(delta);
            return Ok((v, rows));
        }
    }
    v.witness = witness;
    Ok((v, rows))
}

pub fn check_shadowing_property(seq: &MapSequence, params: &ShadowingParams) -> Result<Verdict> {
    shadowing_table(seq, params).map(|(v, _)| v)
}

/// Runs the almost-shadowing check on `seq` and on its `k`-th iterate
/// (horizon `T/k`) and holds iff the two verdicts agree.
pub fn check_iterate_alsp_consistency(
    seq: &MapSequence,
    k: usize,
    equicontinuity: Option<&Verdict>,
    params: &ShadowingParams,
) -> Result<Verdict> {
    match equicontinuity {
        Some(v) if v.check == "equicontinuity" && v.holds => {}
        Some(_) => return Err(NasError::Argument("system is not equicontinuous".into())),
        None => return Err(NasError::Argument("an equicontinuity verdict is required".into())),
    }
    let mut p = params.clone();
    p.mode = ShadowMode::Almost;
    let base = check_shadowing_property(seq, &p)?;
    let iterate = seq.iterate(k)?;
    p.t = (params.t / k).max(1);
    let iter_v = check_shadowing_property(&iterate, &p)?;
    let mut v = Verdict::new("iterate_alsp_consistency", base.holds == iter_v.holds, params.t, seq.space().resolution())
        .sampled(params.seed)
        .note(format!("F: {}, F^{k}: {}", base.holds, iter_v.holds));
    if !v.holds {
        v.witness = base.witness.or(iter_v.witness);
    }
    Ok(v)
}
