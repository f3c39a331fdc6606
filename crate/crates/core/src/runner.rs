//! Executes experiment configs and assembles reports.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{check_chain_transitive, check_r_delta, check_transitive};
use crate::config::{parse_shadow_mode, parse_stability_mode, CheckConfig, CheckKind, Expect, ExperimentConfig};
use crate::dyn_props::{check_equicontinuity, check_mean_equicontinuity, expansivity_constant, ExpansivityKind};
use crate::error::{NasError, Result};
use crate::metric_space::{PointId, Space, SpaceKind, TOL};
use crate::orbits::{average_pseudo_orbit, perturbed_orbit, write_csv};
use crate::shadowing::{
    check_iterate_alsp_consistency, find_shadow_point, shadowing_table, ShadowMode, ShadowRow, ShadowingParams,
    DEFAULT_DELTA_GRID,
};
use crate::stability::{
    check_injectivity, check_uniqueness, construct_conjugacy, verify_conjugacy, ConjugacyMap, Hypotheses,
    ModulusEntry, StabilityMode, StabilityParams,
};
use crate::system::MapSequence;
use crate::verdict::{Verdict, Witness};

pub const REPORT_SCHEMA: &str = "nas-report/1";
pub const DEFAULT_HORIZON: usize = 200;

/// Command-line overrides applied to every check that takes the parameter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        *self == Overrides::default()
    }

    fn apply(&self, c: &mut CheckConfig) {
        if let Some(s) = self.seed {
            c.seed = Some(s);
        }
        if let Some(h) = self.horizon {
            c.horizon = Some(h);
            c.t = Some(h);
        }
        if let Some(e) = self.eps {
            c.eps = Some(e);
        }
        if let Some(g) = &self.delta_grid {
            c.delta_grid = Some(g.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub gamma: f64,
    pub closeness: f64,
    pub residual: f64,
    pub composition_residual: f64,
    pub residual_bound: f64,
    pub residual_within_bound: bool,
    pub unique: bool,
    pub injective: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_translation_error: Option<f64>,
    pub widened: usize,
    pub continuity_modulus: Vec<ModulusEntry>,
    pub hypotheses: Hypotheses,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub check: CheckKind,
    pub system: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_coords: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySummary>,
    pub hypothesis_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub name: String,
    pub config_hash: String,
    pub space: SpaceKind,
    pub resolution: f64,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Overrides::is_empty", default)]
    pub overrides: Overrides,
    pub results: Vec<CheckResult>,
    pub all_passed: bool,
    pub hypothesis_violations: bool,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A report plus CSV tables keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<(String, String)>,
}

pub fn config_hash(raw: &str) -> String {
    hex::encode(Sha256::digest(raw.as_bytes()))
}

/// Runs the checks of `cfg` selected by `filter` (a check id or a
/// subcommand family such as `chain`), or all of them.
pub fn run_experiment(cfg: &ExperimentConfig, raw: &str, overrides: &Overrides, filter: Option<&str>) -> Result<RunOutput> {
    let space = cfg.base_space()?;
    let mut results = Vec::new();
    let mut tables = Vec::new();
    let mut seeds = Vec::new();
    for (i, c0) in cfg.checks.iter().enumerate() {
        let id = c0.label(i);
        if let Some(f) = filter {
            if f != id && f != c0.kind().family() {
                continue;
            }
        }
        let mut c = c0.clone();
        overrides.apply(&mut c);
        if c.seed.is_none() {
            c.seed = cfg.seed;
        }
        if c.kind().is_sampled() {
            seeds.extend(c.seed);
        }
        let (result, mut t) = run_check(cfg, &id, &c);
        results.push(result);
        tables.append(&mut t);
    }
    if results.is_empty() {
        return Err(NasError::Config(format!("no check matches {}", filter.unwrap_or("*"))));
    }
    seeds.sort();
    seeds.dedup();
    let all_passed = results.iter().all(|r| r.passed);
    let hypothesis_violations = results.iter().any(|r| r.hypothesis_violated);
    Ok(RunOutput {
        report: Report {
            schema: REPORT_SCHEMA.into(),
            name: cfg.name.clone(),
            config_hash: config_hash(raw),
            space: cfg.space.clone(),
            resolution: space.resolution(),
            seeds,
            overrides: overrides.clone(),
            results,
            all_passed,
            hypothesis_violations,
        },
        tables,
    })
}

fn coords_of(space: &Space, w: &Witness) -> Option<Vec<String>> {
    let pts: Vec<PointId> = match w {
        Witness::Pair { x, y } => vec![*x, *y],
        Witness::Point { x } => vec![*x],
        Witness::Chain { x, y, .. } => vec![*x, *y],
        Witness::Balls { u, v, .. } => vec![*u, *v],
        Witness::Generators { x, .. } => vec![*x],
        _ => return None,
    };
    Some(pts.iter().map(|p| space.coords(*p).to_string()).collect())
}

fn run_check(cfg: &ExperimentConfig, id: &str, c: &CheckConfig) -> (CheckResult, Vec<(String, String)>) {
    let mut tables = Vec::new();
    let mut stability = None;
    let outcome = cfg
        .build_system(&c.system)
        .and_then(|seq| execute(cfg, id, c, &seq, &mut tables, &mut stability).map(|v| (v, seq)));
    let kind = c.kind();
    let mut result = CheckResult {
        id: id.to_string(),
        check: kind,
        system: c.system.clone(),
        verdict: Verdict::new(&format!("{kind:?}"), false, 0, 0.0),
        witness_coords: None,
        expect: c.expect.clone(),
        basis: c.basis.clone(),
        passed: false,
        failures: Vec::new(),
        error: None,
        stability: None,
        hypothesis_violated: false,
    };
    match outcome {
        Ok((v, seq)) => {
            result.witness_coords = v.witness.as_ref().and_then(|w| coords_of(seq.space(), w));
            result.verdict = v;
            result.hypothesis_violated = stability.as_ref().is_some_and(|s: &StabilitySummary| s.status != "OK");
            result.failures = expectation_failures(c.expect.as_ref(), &result.verdict, stability.as_ref());
            result.passed = result.failures.is_empty();
            result.stability = stability;
        }
        Err(e) => {
            result.error = Some(e.to_string());
            result.hypothesis_violated = matches!(e, NasError::NoShadow { .. });
            result.failures = vec![format!("checker error: {e}")];
        }
    }
    (result, tables)
}

fn expectation_failures(expect: Option<&Expect>, v: &Verdict, st: Option<&StabilitySummary>) -> Vec<String> {
    let Some(e) = expect else { return Vec::new() };
    let mut out = Vec::new();
    if let Some(h) = e.holds {
        if v.holds != h {
            out.push(format!("expected holds = {h}, got {}", v.holds));
        }
    }
    let c = v.constant_estimate;
    if let Some(lo) = e.constant_at_least {
        if !c.is_some_and(|c| c >= lo) {
            out.push(format!("expected constant >= {lo}, got {c:?}"));
        }
    }
    if let Some(hi) = e.constant_at_most {
        if !c.is_some_and(|c| c <= hi) {
            out.push(format!("expected constant <= {hi}, got {c:?}"));
        }
    }
    let needs_stability = e.closeness_at_most.is_some()
        || e.residual_at_most.is_some()
        || e.translation.is_some()
        || e.injective.is_some()
        || e.unique.is_some();
    match st {
        None if needs_stability => out.push("stability expectations on a non-stability check".into()),
        None => {}
        Some(s) => {
            if let Some(x) = e.closeness_at_most {
                if s.closeness > x {
                    out.push(format!("closeness {} exceeds {x}", s.closeness));
                }
            }
            if let Some(x) = e.residual_at_most {
                if s.residual > x {
                    out.push(format!("residual {} exceeds {x}", s.residual));
                }
            }
            if let Some(t) = &e.translation {
                match s.max_translation_error {
                    Some(err) if err <= t.within => {}
                    other => out.push(format!("translation by {} off by {other:?} (allowed {})", t.offset, t.within)),
                }
            }
            if let Some(x) = e.injective {
                if s.injective != x {
                    out.push(format!("expected injective = {x}"));
                }
            }
            if let Some(x) = e.unique {
                if s.unique != x {
                    out.push(format!("expected unique = {x}"));
                }
            }
        }
    }
    out
}

fn shadow_params(c: &CheckConfig, mode: ShadowMode) -> ShadowingParams {
    let mut p = ShadowingParams::new(c.eps.unwrap_or(0.1), mode);
    p.delta_grid = c.delta_grid.clone().unwrap_or_else(|| DEFAULT_DELTA_GRID.to_vec());
    p.sample = c.sample.unwrap_or(50);
    p.t = c.t.unwrap_or(DEFAULT_HORIZON);
    p.seed = c.seed.unwrap_or(0);
    p.tail_start = c.tail_start;
    p.n_delta = c.n_delta.unwrap_or(4);
    p
}

fn shadow_rows_csv(rows: &[ShadowRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| NasError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| NasError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

fn h_table_csv(space: &Space, h: &ConjugacyMap) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "x_coords", "h", "h_coords"]).map_err(|e| NasError::Io(e.to_string()))?;
    for (x, hx) in space.points().zip(&h.table) {
        w.write_record([x.0.to_string(), space.coords(x).to_string(), hx.0.to_string(), space.coords(*hx).to_string()])
            .map_err(|e| NasError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| NasError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Largest distance between `h(x)` and the grid point nearest `x + offset`.
pub fn translation_error(space: &Space, table: &[PointId], offset: f64) -> Option<f64> {
    space
        .points()
        .zip(table)
        .map(|(x, h)| {
            let target = space.coord(x)? + offset;
            let d = match space.kind() {
                SpaceKind::CircleGrid { .. } => {
                    let v = (space.coord(*h)? - target).rem_euclid(1.0);
                    v.min(1.0 - v)
                }
                _ => (space.coord(*h)? - target).abs(),
            };
            Some(d)
        })
        .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
}

fn execute(
    cfg: &ExperimentConfig,
    id: &str,
    c: &CheckConfig,
    seq: &MapSequence,
    tables: &mut Vec<(String, String)>,
    stability: &mut Option<StabilitySummary>,
) -> Result<Verdict> {
    let horizon = c.horizon.unwrap_or(DEFAULT_HORIZON);
    let seed = c.seed.unwrap_or(0);
    let eps = c.eps.unwrap_or(0.1);
    let space = seq.space();
    Ok(match c.kind() {
        CheckKind::Expansivity => expansivity_constant(seq, ExpansivityKind::Plain, horizon, None)?,
        CheckKind::RecurrentExpansivity => expansivity_constant(seq, ExpansivityKind::Recurrent, horizon, c.tail_start)?,
        CheckKind::MeanExpansivity => expansivity_constant(seq, ExpansivityKind::Mean, horizon, c.tail_start)?,
        CheckKind::Equicontinuity => check_equicontinuity(seq, eps, horizon)?,
        CheckKind::MeanEquicontinuity => {
            check_mean_equicontinuity(seq, eps, c.trials.unwrap_or(200), c.t.unwrap_or(DEFAULT_HORIZON), seed)?
        }
        CheckKind::Shadowing => {
            let mode = c.mode.as_deref().map(parse_shadow_mode).transpose()?.unwrap_or(ShadowMode::Plain);
            let (v, rows) = shadowing_table(seq, &shadow_params(c, mode))?;
            tables.push((format!("{id}_shadowing.csv"), shadow_rows_csv(&rows)?));
            v
        }
        CheckKind::ShadowPoint => {
            let mode = c.mode.as_deref().map(parse_shadow_mode).transpose()?.unwrap_or(ShadowMode::Plain);
            let x0 = PointId(c.x.unwrap_or(0));
            let t = c.t.unwrap_or(DEFAULT_HORIZON);
            let delta = c.delta.expect("validated");
            let po = if mode.uses_average_orbits() {
                average_pseudo_orbit(seq, x0, t, delta, c.n_delta.unwrap_or(4), seed)?
            } else {
                perturbed_orbit(seq, x0, t, delta, seed)?
            };
            let mut buf = Vec::new();
            write_csv(space, &po.points, &mut buf)?;
            tables.push((format!("{id}_pseudo_orbit.csv"), String::from_utf8(buf).expect("csv is utf-8")));
            let r = find_shadow_point(seq, &po, eps, mode, c.tail_start)?;
            let mut v = Verdict::new(mode.name(), r.succeeded(), t, space.resolution())
                .sampled(seed)
                .with_constant(r.score)
                .note(format!("best point {} ({} qualifying, unique: {})", r.best_point, r.qualifiers, r.unique));
            if let Some(clause) = r.failed_clause {
                v = v.note(format!("failed clause: {clause:?}")).with_witness(Witness::Orbit { points: po.points });
            } else {
                v = v.with_witness(Witness::Point { x: r.best_point });
            }
            v
        }
        CheckKind::IterateAlspConsistency => {
            let eq = check_equicontinuity(seq, eps, horizon)?;
            check_iterate_alsp_consistency(seq, c.k.expect("validated"), Some(&eq), &shadow_params(c, ShadowMode::Almost))?
        }
        CheckKind::ChainRelation => check_r_delta(
            seq,
            PointId(c.x.expect("validated")),
            PointId(c.y.expect("validated")),
            c.delta.expect("validated"),
            c.l_max,
        )?,
        CheckKind::ChainTransitivity => {
            check_chain_transitive(seq, c.delta_grid.as_deref().unwrap_or(&DEFAULT_DELTA_GRID), c.l_max)?
        }
        CheckKind::Transitivity => check_transitive(seq, c.eps_grid.as_deref().unwrap_or(&[eps]), horizon)?,
        CheckKind::Surjectivity => {
            let holds = seq.is_surjective(horizon)?;
            Verdict::new("surjectivity", holds, seq.cycle_len(horizon), space.resolution())
        }
        CheckKind::Stability => {
            let g = cfg.build_system(c.perturbed.as_deref().expect("validated"))?;
            let mode = c.mode.as_deref().map(parse_stability_mode).transpose()?.unwrap_or(StabilityMode::Plain);
            let t = c.t.unwrap_or(12);
            let mut p = StabilityParams::new(eps, t, mode);
            p.expansivity_horizon = c.expansivity_horizon;
            p.tail_start = c.tail_start;
            p.delta = c.delta;
            let mut sp = shadow_params(c, mode.shadow_mode());
            sp.t = c.shadow_t.unwrap_or(8);
            p.shadowing = Some(sp);
            let h = construct_conjugacy(seq, &g, &p)?;
            let hyp = h.hypotheses.clone().expect("construction records hypotheses");
            let verdict = verify_conjugacy(seq, &g, &h, eps)?.sampled(seed);
            let unique = check_uniqueness(seq, &g, &h, eps, hyp.expansivity)?;
            let c_prime = expansivity_constant(&g, mode.expansivity_kind(), p.expansivity_horizon.unwrap_or(t), p.tail_start)?
                .constant_estimate;
            let inj = check_injectivity(&g, &h, eps, c_prime);
            let bound = h.residual_bound(hyp.gamma, space);
            let offset = c.expect.as_ref().and_then(|e| e.translation.as_ref()).map(|t| t.offset);
            tables.push((format!("{id}_h.csv"), h_table_csv(space, &h)?));
            *stability = Some(StabilitySummary {
                eps,
                delta: hyp.delta,
                gamma: hyp.gamma,
                closeness: h.closeness,
                residual: h.semiconj_residual,
                composition_residual: h.composition_residual,
                residual_bound: bound,
                residual_within_bound: h.semiconj_residual <= bound + TOL,
                unique: unique.holds,
                injective: inj.holds,
                max_translation_error: offset.and_then(|o| translation_error(space, &h.table, o)),
                widened: h.widened.len(),
                continuity_modulus: h.continuity_modulus.clone(),
                status: hyp.status().to_string(),
                hypotheses: hyp,
            });
            let mut v = verdict;
            for n in unique.notes.iter().chain(&inj.notes) {
                v = v.note(n.clone());
            }
            v
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    const CFG: &str = r#"{
        "schema": "nas-experiment/1",
        "name": "runner-smoke",
        "space": {"kind": "circle_grid", "n": 64},
        "seed": 3,
        "systems": {
            "D": {"type": "autonomous", "map": {"affine_mod1": [2.0, 0.0]}},
            "I": {"type": "autonomous", "map": "identity"}
        },
        "checks": [
            {"id": "exp", "check": "expansivity", "system": "D", "horizon": 10, "expect": {"holds": true, "constant_at_least": 0.49}},
            {"id": "chain", "check": "chain_transitivity", "system": "D", "delta_grid": [0.2, 0.1]},
            {"id": "id-exp", "check": "expansivity", "system": "I", "horizon": 5, "expect": {"holds": true}},
            {"id": "sh", "check": "shadowing", "system": "D", "eps": 0.1, "t": 6, "sample": 5, "delta_grid": [0.05]}
        ]
    }"#;

    #[test]
    fn runs_and_reports_expectations() {
        let cfg = parse_config(CFG).unwrap();
        let out = run_experiment(&cfg, CFG, &Overrides::default(), None).unwrap();
        let r = &out.report;
        assert_eq!(r.results.len(), 4);
        assert!(r.results[0].passed);
        assert!(!r.results[2].passed);
        assert!(!r.all_passed);
        assert_eq!(r.seeds, vec![3]);
        assert_eq!(out.tables.len(), 1);
        assert!(out.tables[0].1.starts_with("delta,sample_id,success,max_error,tail_error,cesaro_error,shadow_point\n"));
        assert_eq!(r.config_hash, config_hash(CFG));
    }

    #[test]
    fn filters_by_family_and_id() {
        let cfg = parse_config(CFG).unwrap();
        let out = run_experiment(&cfg, CFG, &Overrides::default(), Some("chain")).unwrap();
        assert_eq!(out.report.results.len(), 1);
        let out = run_experiment(&cfg, CFG, &Overrides::default(), Some("exp")).unwrap();
        assert_eq!(out.report.results[0].id, "exp");
        assert!(run_experiment(&cfg, CFG, &Overrides::default(), Some("nothing")).is_err());
    }

    #[test]
    fn overrides_are_recorded() {
        let cfg = parse_config(CFG).unwrap();
        let o = Overrides { seed: Some(11), ..Overrides::default() };
        let out = run_experiment(&cfg, CFG, &o, Some("shadow")).unwrap();
        assert_eq!(out.report.seeds, vec![11]);
        assert_eq!(out.report.overrides, o);
    }

    #[test]
    fn translation_error_wraps_on_the_circle() {
        let s = Space::circle(8).unwrap();
        let table: Vec<PointId> = s.points().map(|p| PointId((p.0 + 1) % 8)).collect();
        assert!(translation_error(&s, &table, 0.125).unwrap() < 1e-12);
    }
}
