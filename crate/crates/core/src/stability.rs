//! Conjugacy synthesis from shadow points of perturbed orbits.
//!
//! For each point `x`, the `G`-orbit of `x` is treated as a pseudo-orbit of
//! `F` and `h(x)` is its best shadow point in the mode's sense. All
//! diagnostics are recomputed from the table.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyn_props::{expansivity_constant, ExpansivityKind};
use crate::error::{NasError, Result};
use crate::metric_space::{PointId, Space, TOL};
use crate::orbits::{OrbitKind, OrbitSource, PseudoOrbit};
use crate::shadowing::{check_shadowing_property, qualifying_points, shadow_among, ShadowMode, ShadowingParams};
use crate::system::{gamma_distance, invert_table, MapPrimitive, MapSequence};
use crate::verdict::{Verdict, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMode {
    /// Almost shadowing with recurrent expansivity.
    Recurrent,
    /// Plain shadowing with expansivity.
    Plain,
    /// Strong average shadowing with mean expansivity.
    Mean,
}

impl StabilityMode {
    pub fn shadow_mode(self) -> ShadowMode {
        match self {
            StabilityMode::Recurrent => ShadowMode::Almost,
            StabilityMode::Plain => ShadowMode::Plain,
            StabilityMode::Mean => ShadowMode::StrongAverage,
        }
    }

    pub fn expansivity_kind(self) -> ExpansivityKind {
        match self {
            StabilityMode::Recurrent => ExpansivityKind::Recurrent,
            StabilityMode::Plain => ExpansivityKind::Plain,
            StabilityMode::Mean => ExpansivityKind::Mean,
        }
    }
}

/// Hypotheses of the construction, evaluated on the finite model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub f_commutative: bool,
    pub g_commutative: bool,
    pub gamma: f64,
    /// δ delivered by the shadowing check for `eps`, when it was run.
    pub delta: Option<f64>,
    pub gamma_below_delta: Option<bool>,
    /// Expansivity constant of `F` for the mode.
    pub expansivity: Option<f64>,
    pub eps_below_third: Option<bool>,
}

impl Hypotheses {
    pub fn satisfied(&self) -> bool {
        self.f_commutative
            && self.g_commutative
            && self.gamma_below_delta != Some(false)
            && self.eps_below_third != Some(false)
    }

    pub fn status(&self) -> &'static str {
        if self.satisfied() {
            "OK"
        } else {
            "HYPOTHESIS-VIOLATED"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusEntry {
    pub lambda: f64,
    /// Largest α with `d(x, y) < α ⇒ d(h x, h y) < λ` over the domain.
    pub alpha: f64,
}

/// A tabulated map `h` on the enumerated points with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyMap {
    pub mode: StabilityMode,
    pub eps: f64,
    pub horizon: usize,
    pub table: Vec<PointId>,
    pub closeness: f64,
    /// `max d(f_i(h x), h(g_i x))` over one cycle of generators.
    pub semiconj_residual: f64,
    /// `max d(F_n(h x), h(G_n x))` for `n ≤ T`.
    pub composition_residual: f64,
    pub continuity_modulus: Vec<ModulusEntry>,
    pub injective: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub collision: Option<(PointId, PointId)>,
    /// Points whose shadow had to be searched outside `B(x, eps)`.
    pub widened: Vec<PointId>,
    /// Largest shadowing score of the chosen points.
    pub max_shadow_error: f64,
    pub resolution: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Hypotheses>,
}

impl ConjugacyMap {
    pub fn h(&self, x: PointId) -> Option<PointId> {
        usize::try_from(x.0).ok().and_then(|i| self.table.get(i)).copied()
    }

    pub fn status(&self) -> &'static str {
        self.hypotheses.as_ref().map_or("OK", |h| h.status())
    }

    /// Rebuilds the diagnostics for a given table.
    pub fn from_table(
        f: &MapSequence,
        g: &MapSequence,
        table: Vec<PointId>,
        mode: StabilityMode,
        eps: f64,
        horizon: usize,
    ) -> Result<ConjugacyMap> {
        let space = f.space();
        if g.space() != space {
            return Err(NasError::SpaceMismatch(format!("{} vs {}", space, g.space())));
        }
        if table.len() != space.len() {
            return Err(NasError::Argument("table length differs from the point count".into()));
        }
        let collision = collision(&table);
        let mut map = ConjugacyMap {
            mode,
            eps,
            horizon,
            closeness: closeness(space, &table),
            semiconj_residual: semiconj_residual(f, g, &table, horizon),
            composition_residual: composition_residual(f, g, &table, horizon),
            continuity_modulus: continuity_modulus(space, &table, &default_lambdas(eps)),
            injective: collision.is_none(),
            collision,
            widened: Vec::new(),
            max_shadow_error: 0.0,
            resolution: space.resolution(),
            table,
            hypotheses: None,
        };
        map.max_shadow_error = shadow_errors(f, g, &map)?.into_iter().fold(0.0, f64::max);
        Ok(map)
    }

    /// Bound on the semiconjugacy residual from the triangle inequality:
    /// shadow error at `x`, plus `γ`, plus shadow error at `g_i x`, plus
    /// rounding.
    pub fn residual_bound(&self, gamma: f64, space: &Space) -> f64 {
        2.0 * self.max_shadow_error + gamma + 2.0 * space.rounding_radius()
    }
}

fn default_lambdas(eps: f64) -> Vec<f64> {
    vec![eps / 4.0, eps / 2.0, eps, 2.0 * eps]
}

fn in_domain(space: &Space, p: PointId) -> bool {
    p.0 >= 0 && (p.0 as usize) < space.len()
}

fn closeness(space: &Space, table: &[PointId]) -> f64 {
    space.points().zip(table).map(|(x, h)| space.dist(x, *h)).fold(0.0, f64::max)
}

fn collision(table: &[PointId]) -> Option<(PointId, PointId)> {
    let mut idx: Vec<usize> = (0..table.len()).collect();
    idx.sort_by_key(|&i| (table[i], i));
    idx.windows(2)
        .filter(|w| table[w[0]] == table[w[1]])
        .map(|w| (PointId(w[0].min(w[1]) as i64), PointId(w[0].max(w[1]) as i64)))
        .min()
}

/// `max d(f_i(h x), h(g_i x))` over `i` in one cycle and `x` with `g_i x`
/// inside the domain.
fn semiconj_residual(f: &MapSequence, g: &MapSequence, table: &[PointId], horizon: usize) -> f64 {
    let space = f.space();
    let cycle = f.cycle_len(horizon).max(g.cycle_len(horizon));
    (1..=cycle)
        .into_par_iter()
        .map(|i| {
            space
                .points()
                .filter_map(|x| {
                    let gx = g.apply(i, x);
                    in_domain(space, gx).then(|| space.dist(f.apply(i, table[x.index()]), table[gx.index()]))
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn composition_residual(f: &MapSequence, g: &MapSequence, table: &[PointId], horizon: usize) -> f64 {
    let space = f.space();
    let pts: Vec<PointId> = space.points().collect();
    pts.par_iter()
        .map(|x| {
            let fo = f.orbit(table[x.index()], horizon);
            let go = g.orbit(*x, horizon);
            fo.iter()
                .zip(&go)
                .filter(|(_, gx)| in_domain(space, **gx))
                .map(|(a, gx)| space.dist(*a, table[gx.index()]))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// For each λ, the largest α such that `d(x, y) < α` forces
/// `d(h x, h y) < λ` on the domain.
pub fn continuity_modulus(space: &Space, table: &[PointId], lambdas: &[f64]) -> Vec<ModulusEntry> {
    let n = table.len();
    let init = vec![f64::INFINITY; lambdas.len()];
    let mins = (0..n)
        .into_par_iter()
        .fold(
            || init.clone(),
            |mut acc, x| {
                for y in x + 1..n {
                    let d = space.dist(PointId(x as i64), PointId(y as i64));
                    let dh = space.dist(table[x], table[y]);
                    for (k, l) in lambdas.iter().enumerate() {
                        if dh > l - TOL && d < acc[k] {
                            acc[k] = d;
                        }
                    }
                }
                acc
            },
        )
        .reduce(|| init.clone(), |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect());
    lambdas
        .iter()
        .zip(mins)
        .map(|(l, a)| ModulusEntry { lambda: *l, alpha: if a.is_finite() { a } else { space.diameter() + space.resolution() } })
        .collect()
}

fn g_orbit(g: &MapSequence, x: PointId, t: usize) -> PseudoOrbit {
    PseudoOrbit::unchecked(g.orbit(x, t), 1.0, OrbitKind::Plain, OrbitSource::Handcrafted)
}

/// Mode-sense shadowing score of each `h(x)` against the `G`-orbit of `x`.
fn shadow_errors(f: &MapSequence, g: &MapSequence, h: &ConjugacyMap) -> Result<Vec<f64>> {
    let lo = h.horizon / 2;
    let mode = h.mode.shadow_mode();
    let pts: Vec<PointId> = f.space().points().collect();
    Ok(pts
        .par_iter()
        .map(|x| {
            let po = g_orbit(g, *x, h.horizon);
            let prof = crate::shadowing::error_profile(f, &po, h.table[x.index()]);
            crate::shadowing::ErrorSummary::from_profile(&prof, lo).score(mode)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityParams {
    pub eps: f64,
    pub t: usize,
    pub mode: StabilityMode,
    /// Horizon and tail start for the expansivity estimate of `F`.
    pub expansivity_horizon: Option<usize>,
    pub tail_start: Option<usize>,
    /// Shadowing check used to obtain δ; skipped when `delta` is given.
    pub shadowing: Option<ShadowingParams>,
    pub delta: Option<f64>,
    /// Skip the expansivity estimate.
    pub skip_expansivity: bool,
}

impl StabilityParams {
    pub fn new(eps: f64, t: usize, mode: StabilityMode) -> StabilityParams {
        StabilityParams {
            eps,
            t,
            mode,
            expansivity_horizon: None,
            tail_start: None,
            shadowing: None,
            delta: None,
            skip_expansivity: false,
        }
    }
}

/// Evaluates the construction's hypotheses for `(F, G)`.
pub fn evaluate_hypotheses(f: &MapSequence, g: &MapSequence, params: &StabilityParams) -> Result<Hypotheses> {
    let gamma = gamma_distance(f, g, f.cycle_len(params.t).max(g.cycle_len(params.t)))?.value;
    let delta = match (params.delta, &params.shadowing) {
        (Some(d), _) => Some(d),
        (None, Some(sp)) => {
            let mut sp = sp.clone();
            sp.eps = params.eps;
            sp.mode = params.mode.shadow_mode();
            let v = check_shadowing_property(f, &sp)?;
            Some(if v.holds { v.constant_estimate.unwrap_or(0.0) } else { 0.0 })
        }
        (None, None) => None,
    };
    let expansivity = if params.skip_expansivity {
        None
    } else {
        let horizon = params.expansivity_horizon.unwrap_or(params.t);
        let v = expansivity_constant(f, params.mode.expansivity_kind(), horizon, params.tail_start)?;
        v.constant_estimate
    };
    Ok(Hypotheses {
        f_commutative: f.is_commutative() || f.commutativity_violation(params.t).is_none(),
        g_commutative: g.is_commutative() || g.commutativity_violation(params.t).is_none(),
        gamma,
        delta,
        gamma_below_delta: delta.map(|d| gamma < d - TOL),
        expansivity,
        eps_below_third: expansivity.map(|c| params.eps < c / 3.0 - TOL),
    })
}

/// Builds `h` pointwise. Fails with the first point whose `G`-orbit has no
/// qualifying shadow anywhere in the space.
pub fn construct_conjugacy(f: &MapSequence, g: &MapSequence, params: &StabilityParams) -> Result<ConjugacyMap> {
    let space = f.space();
    if g.space() != space {
        return Err(NasError::SpaceMismatch(format!("{} vs {}", space, g.space())));
    }
    if !(params.eps > 0.0 && params.eps < 1.0) || params.t == 0 {
        return Err(NasError::Argument("need eps in (0, 1) and T > 0".into()));
    }
    let hyp = evaluate_hypotheses(f, g, params)?;
    let mode = params.mode.shadow_mode();
    let lo = params.t / 2;
    let eps = params.eps;
    let pts: Vec<PointId> = space.points().collect();
    let picks: Vec<std::result::Result<(PointId, bool), PointId>> = pts
        .par_iter()
        .map(|x| {
            let po = g_orbit(g, *x, params.t);
            let ball = space.ball(*x, eps);
            let r = shadow_among(f, &po, eps, mode, lo, &ball, false);
            if let Some(z) = r.shadow_point {
                return Ok((z, false));
            }
            let mut all: Vec<PointId> = space.points().collect();
            if !space.is_finite() {
                all.extend(space.ball(*x, 1.0));
                all.sort();
                all.dedup();
            }
            let r = shadow_among(f, &po, eps, mode, lo, &all, false);
            r.shadow_point.map(|z| (z, true)).ok_or(*x)
        })
        .collect();
    let mut table = Vec::with_capacity(pts.len());
    let mut widened = Vec::new();
    for (x, p) in pts.iter().zip(picks) {
        match p {
            Ok((z, w)) => {
                table.push(z);
                if w {
                    widened.push(*x);
                }
            }
            Err(x) => {
                return Err(NasError::NoShadow {
                    point: x,
                    detail: format!("no {}-shadow of its perturbed orbit ({})", eps, hyp.status()),
                })
            }
        }
    }
    let mut map = ConjugacyMap::from_table(f, g, table, params.mode, eps, params.t)?;
    map.widened = widened;
    map.hypotheses = Some(hyp);
    Ok(map)
}

/// Holds iff the recomputed generator residual is within two grid cells,
/// the composition residual likewise, and `h` is `eps`-close to the
/// identity.
pub fn verify_conjugacy(f: &MapSequence, g: &MapSequence, h: &ConjugacyMap, eps: f64) -> Result<Verdict> {
    let fresh = ConjugacyMap::from_table(f, g, h.table.clone(), h.mode, h.eps, h.horizon)?;
    let space = f.space();
    let tol = 2.0 * space.resolution() + TOL;
    let residual_ok = fresh.semiconj_residual <= tol;
    let composition_ok = fresh.composition_residual <= tol;
    let close_ok = fresh.closeness <= eps - TOL;
    let mut v = Verdict::new("conjugacy", residual_ok && composition_ok && close_ok, h.horizon, space.resolution())
        .with_constant(fresh.semiconj_residual)
        .note(format!("closeness {}", fresh.closeness))
        .note(format!("composition residual {}", fresh.composition_residual));
    if !v.holds {
        let witness = worst_residual_point(f, g, &fresh.table, h.horizon, close_ok, eps);
        v = v.with_witness(Witness::Point { x: witness });
    }
    Ok(v)
}

fn worst_residual_point(f: &MapSequence, g: &MapSequence, table: &[PointId], horizon: usize, close_ok: bool, eps: f64) -> PointId {
    let space = f.space();
    if !close_ok {
        if let Some(x) = space.points().find(|x| space.dist(*x, table[x.index()]) > eps - TOL) {
            return x;
        }
    }
    let cycle = f.cycle_len(horizon).max(g.cycle_len(horizon));
    let mut worst = (0.0, PointId(0));
    for x in space.points() {
        for i in 1..=cycle {
            let gx = g.apply(i, x);
            if in_domain(space, gx) {
                let d = space.dist(f.apply(i, table[x.index()]), table[gx.index()]);
                if d > worst.0 {
                    worst = (d, x);
                }
            }
        }
    }
    worst.1
}

/// Searches for single-point alternatives `h'` that also qualify as shadows
/// inside `B(x, eps)` and keep the generator residual within two cells.
pub fn check_uniqueness(f: &MapSequence, g: &MapSequence, h: &ConjugacyMap, eps: f64, c: Option<f64>) -> Result<Verdict> {
    let space = f.space();
    let mode = h.mode.shadow_mode();
    let lo = h.horizon / 2;
    let cycle = f.cycle_len(h.horizon).max(g.cycle_len(h.horizon));
    let tol = 2.0 * space.resolution() + TOL;
    let table = &h.table;
    // preimages under each generator, within the domain
    let pre: Vec<Vec<Vec<usize>>> = (1..=cycle)
        .map(|i| {
            let mut p = vec![Vec::new(); space.len()];
            for x in space.points() {
                let gx = g.apply(i, x);
                if in_domain(space, gx) {
                    p[gx.index()].push(x.index());
                }
            }
            p
        })
        .collect();
    let pts: Vec<PointId> = space.points().collect();
    let alternative = pts
        .par_iter()
        .filter_map(|x| {
            let po = g_orbit(g, *x, h.horizon);
            let hx = table[x.index()];
            let ball = space.ball(*x, eps);
            let quals = qualifying_points(f, &po, eps, mode, lo, &ball);
            quals.into_iter().filter(|z| *z != hx).find(|z| {
                let hp = |p: usize| if p == x.index() { *z } else { table[p] };
                (1..=cycle).all(|i| {
                    let gx = g.apply(i, *x);
                    let fwd = !in_domain(space, gx) || space.dist(f.apply(i, *z), hp(gx.index())) <= tol;
                    fwd && pre[i - 1][x.index()].iter().all(|&p| space.dist(f.apply(i, hp(p)), *z) <= tol)
                })
            }).map(|z| (*x, z))
        })
        .min();
    let mut v = Verdict::new("conjugacy_uniqueness", alternative.is_none(), h.horizon, space.resolution());
    if let Some(c) = c {
        if eps >= c / 3.0 - TOL {
            v = v.note("HYPOTHESIS-VIOLATED: eps is not below c/3");
        }
    }
    if let Some((x, z)) = alternative {
        v = v.with_witness(Witness::Pair { x, y: z }).note(format!("h({x}) could also be {z}"));
    }
    Ok(v)
}

/// Holds iff the table has no collisions. A collision is attributed to the
/// grid when its resolution exceeds `eps`, otherwise to the expansivity
/// hypothesis when `c_prime < 3·eps`.
pub fn check_injectivity(g: &MapSequence, h: &ConjugacyMap, eps: f64, c_prime: Option<f64>) -> Verdict {
    let space = g.space();
    let mut v = Verdict::new("conjugacy_injectivity", true, h.horizon, space.resolution());
    if let Some(c) = c_prime {
        if c < 3.0 * eps - TOL {
            v = v.note("HYPOTHESIS-VIOLATED: expansivity constant of G below 3·eps");
        }
    }
    if let Some((x, y)) = collision(&h.table) {
        v.holds = false;
        v = v.with_witness(Witness::Pair { x, y });
        if space.resolution() > eps {
            v = v.note("cause: resolution");
        } else if c_prime.is_some_and(|c| c < 3.0 * eps - TOL) {
            v = v.note("cause: hypothesis");
        } else {
            v = v.note("cause: undetermined");
        }
    }
    v
}

/// Given `j` with `f_i ∘ j = j ∘ h_i`, conjugates `G` into `F`'s frame,
/// builds `k` for `(F, G')` and returns `k' = j⁻¹ ∘ k ∘ j` as the map for
/// `(H, G)`.
pub fn transport_conjugacy(
    f: &MapSequence,
    hsys: &MapSequence,
    j: &[usize],
    g: &MapSequence,
    params: &StabilityParams,
) -> Result<ConjugacyMap> {
    let space = f.space();
    if !space.is_finite() {
        return Err(NasError::InfiniteSpace(space.to_string()));
    }
    if hsys.space() != space || g.space() != space {
        return Err(NasError::SpaceMismatch("F, H and G must share one space".into()));
    }
    let jinv = invert_table(j)
        .filter(|_| j.len() == space.len())
        .ok_or_else(|| NasError::Argument("j is not a bijection of the space".into()))?;
    let cycle = [f, hsys, g].iter().map(|s| s.cycle_len(params.t)).max().unwrap_or(1);
    for i in 1..=cycle {
        for x in space.points() {
            let lhs = f.apply(i, PointId(j[x.index()] as i64));
            let rhs = PointId(j[hsys.apply(i, x).index()] as i64);
            if lhs != rhs {
                return Err(NasError::Argument(format!(
                    "j does not intertwine F and H: f_{i}(j({x})) = {lhs} but j(h_{i}({x})) = {rhs}"
                )));
            }
        }
    }
    let period = g.period().ok_or(NasError::Aperiodic)?;
    let gprime_tables: Vec<MapPrimitive> = (1..=period)
        .map(|i| {
            MapPrimitive::Table((0..space.len()).map(|y| j[g.apply(i, PointId(jinv[y] as i64)).index()]).collect())
        })
        .collect();
    let gprime = MapSequence::periodic(space, gprime_tables)?;
    let gprime = if g.is_commutative() { gprime.assert_commutative(params.t)? } else { gprime };
    let k = construct_conjugacy(f, &gprime, params)?;
    let kprime: Vec<PointId> = (0..space.len())
        .map(|x| PointId(jinv[k.table[j[x]].index()] as i64))
        .collect();
    let mut out = ConjugacyMap::from_table(hsys, g, kprime, params.mode, params.eps, params.t)?;
    out.hypotheses = k.hypotheses;
    Ok(out)
}

/// `h(x) = x` on the enumerated points.
pub fn identity_table(space: &Space) -> Vec<PointId> {
    space.points().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling(b: f64) -> MapSequence {
        MapSequence::autonomous(&Space::circle(256).unwrap(), MapPrimitive::AffineMod1(2.0, b)).unwrap()
    }

    #[test]
    fn same_system_gives_identity() {
        let f = doubling(0.0);
        let mut p = StabilityParams::new(0.1, 10, StabilityMode::Plain);
        p.skip_expansivity = true;
        let h = construct_conjugacy(&f, &f, &p).unwrap();
        assert_eq!(h.table, identity_table(f.space()));
        assert_eq!(h.closeness, 0.0);
        assert_eq!(h.semiconj_residual, 0.0);
        assert!(verify_conjugacy(&f, &f, &h, 0.1).unwrap().holds);
    }

    #[test]
    fn identity_table_against_a_large_perturbation() {
        let f = doubling(0.0);
        let g = doubling(0.3);
        let h = ConjugacyMap::from_table(&f, &g, identity_table(f.space()), StabilityMode::Plain, 0.1, 10).unwrap();
        assert!((h.semiconj_residual - 0.3).abs() <= 1.0 / 256.0);
        assert!(!verify_conjugacy(&f, &g, &h, 0.1).unwrap().holds);
    }

    #[test]
    fn constant_table_collides() {
        let f = doubling(0.0);
        let h = ConjugacyMap::from_table(&f, &f, vec![PointId(0); 256], StabilityMode::Plain, 0.1, 4).unwrap();
        let v = check_injectivity(&f, &h, 0.1, None);
        assert!(!v.holds);
        assert_eq!(v.witness, Some(Witness::Pair { x: PointId(0), y: PointId(1) }));
    }

    #[test]
    fn coarse_grid_collision_blames_resolution() {
        let f = MapSequence::autonomous(&Space::circle(4).unwrap(), MapPrimitive::Identity).unwrap();
        let h = ConjugacyMap::from_table(&f, &f, vec![PointId(0); 4], StabilityMode::Plain, 0.1, 4).unwrap();
        let v = check_injectivity(&f, &h, 0.1, Some(1.0));
        assert!(v.notes.iter().any(|n| n == "cause: resolution"));
    }

    #[test]
    fn modulus_is_monotone() {
        let s = Space::circle(64).unwrap();
        let table: Vec<PointId> = s.points().map(|p| PointId((p.0 * 3) % 64)).collect();
        let m = continuity_modulus(&s, &table, &[0.05, 0.1, 0.2, 0.4]);
        for w in m.windows(2) {
            assert!(w[0].alpha <= w[1].alpha);
        }
    }

    #[test]
    fn identity_system_is_not_unique() {
        let f = MapSequence::autonomous(&Space::circle(64).unwrap(), MapPrimitive::Identity).unwrap();
        let mut p = StabilityParams::new(0.1, 8, StabilityMode::Plain);
        p.skip_expansivity = true;
        let h = construct_conjugacy(&f, &f, &p).unwrap();
        assert!(!check_uniqueness(&f, &f, &h, 0.1, None).unwrap().holds);
    }

    #[test]
    fn transport_rejects_non_bijections() {
        let f = doubling(0.0);
        let p = StabilityParams::new(0.1, 8, StabilityMode::Plain);
        assert!(transport_conjugacy(&f, &f, &vec![0; 256], &f, &p).is_err());
        let rot: Vec<usize> = (0..256).map(|x| (x + 3) % 256).collect();
        // rotation does not intertwine doubling with itself
        assert!(transport_conjugacy(&f, &f, &rot, &f, &p).is_err());
    }
}
