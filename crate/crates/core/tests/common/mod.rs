//! Shared suites for the acceptance and property tests.
#![allow(dead_code)]

use nas_core::chain::{check_chain_transitive, check_transitive};
use nas_core::dyn_props::{check_equicontinuity, check_mean_equicontinuity, expansivity_constant, ExpansivityKind};
use nas_core::orbits::perturbed_orbit;
use nas_core::shadowing::{
    check_iterate_alsp_consistency, check_shadowing_property, find_shadow_point, ShadowMode, ShadowingParams,
};
use nas_core::{ExponentRule, MapPrimitive, MapSequence, PointId, Space, Verdict};

pub type Outcome = Result<String, String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn auto(space: &Space, m: MapPrimitive) -> MapSequence {
    MapSequence::autonomous(space, m).unwrap()
}

pub fn word(space: &Space, base: MapPrimitive, rule: ExponentRule) -> MapSequence {
    MapSequence::power_word(space, base, rule).unwrap()
}

pub fn restart(first_len: usize, unit_steps: bool) -> ExponentRule {
    ExponentRule::RestartingPrefixes { first_len, unit_steps }
}

/// Small finite systems: products of any two stay cheap to scan.
pub fn small_battery() -> Vec<(&'static str, MapSequence)> {
    let w4 = Space::words(4).unwrap();
    let c15 = Space::circle(15).unwrap();
    vec![
        ("successor-signed", word(&Space::successor(4).unwrap(), MapPrimitive::Successor(1), ExponentRule::SignedPairs)),
        ("shift-signed", word(&w4, MapPrimitive::Shift(1), ExponentRule::SignedPairs)),
        ("shift-restart-unit", word(&w4, MapPrimitive::Shift(1), restart(2, true))),
        ("shift-restart-blocks", word(&w4, MapPrimitive::Shift(1), restart(4, false))),
        ("shift", auto(&w4, MapPrimitive::Shift(1))),
        ("doubling", auto(&c15, MapPrimitive::AffineMod1(2.0, 0.0))),
        ("rotation", auto(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0))),
        ("identity", auto(&Space::words(3).unwrap(), MapPrimitive::Identity)),
        ("tent", auto(&Space::interval(0.0, 1.0, 9).unwrap(), MapPrimitive::Tent)),
        (
            "triplet",
            MapSequence::periodic(&c15, vec![MapPrimitive::AffineMod1(2.0, 0.0), MapPrimitive::Identity, MapPrimitive::Identity])
                .unwrap(),
        ),
    ]
}

/// The catalog systems at their fixture sizes.
pub fn full_battery() -> Vec<(&'static str, MapSequence)> {
    let w8 = Space::words(8).unwrap();
    let l201 = Space::line(-1.0, 1.0, 201).unwrap();
    let unit = Space::interval(0.0, 1.0, 33).unwrap();
    vec![
        ("successor-signed", word(&Space::successor(12).unwrap(), MapPrimitive::Successor(1), ExponentRule::SignedPairs)),
        ("shift-G", word(&w8, MapPrimitive::Shift(1), ExponentRule::SignedPairs)),
        ("shift-F", word(&w8, MapPrimitive::Shift(1), restart(2, true))),
        ("shift-restart-blocks", word(&w8, MapPrimitive::Shift(1), restart(4, false))),
        ("scaling-ascending", word(&l201, MapPrimitive::Affine(2.0, 0.0), ExponentRule::Ascending)),
        ("scaling-triplet", word(&l201, MapPrimitive::Affine(2.0, 0.0), ExponentRule::Cycle(vec![1, 0, 0]))),
        ("doubling", auto(&Space::circle(63).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0))),
        ("rotation", auto(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0))),
        ("tent", auto(&unit, MapPrimitive::Tent)),
        ("contraction", auto(&unit, MapPrimitive::Affine(0.5, 0.0))),
        ("reflection", auto(&unit, MapPrimitive::Affine(-1.0, 1.0))),
        ("shift", auto(&w8, MapPrimitive::Shift(1))),
    ]
}

fn exp(seq: &MapSequence, kind: ExpansivityKind, horizon: usize) -> Verdict {
    expansivity_constant(seq, kind, horizon, None).unwrap()
}

fn c(v: &Verdict) -> f64 {
    v.constant_estimate.expect("expansivity verdicts carry a constant")
}

const KINDS: [ExpansivityKind; 3] = [ExpansivityKind::Plain, ExpansivityKind::Recurrent, ExpansivityKind::Mean];

/// Product laws for the three expansivity notions and for mean
/// equicontinuity.
pub fn product_laws() -> Outcome {
    let battery = small_battery();
    let mut checked = 0;
    for (i, (na, a)) in battery.iter().enumerate() {
        for (nb, b) in &battery[i..] {
            let p = a.product(b).unwrap();
            for kind in KINDS {
                let (va, vb, vp) = (exp(a, kind, 32), exp(b, kind, 32), exp(&p, kind, 32));
                let law = c(&va).min(c(&vb));
                ensure((c(&vp) - law).abs() <= 1e-9, || {
                    format!("{} {na}x{nb}: product constant {} vs min {law}", kind.name(), c(&vp))
                })?;
                ensure(!vp.holds || (va.holds && vb.holds), || format!("{} {na}x{nb}: product holds alone", kind.name()))?;
                if a.space().resolution() == b.space().resolution() {
                    ensure(vp.holds == (va.holds && vb.holds), || format!("{} {na}x{nb}: verdicts disagree", kind.name()))?;
                }
                checked += 1;
            }
            let me = |s: &MapSequence| check_mean_equicontinuity(s, 0.5, 40, 24, 11).unwrap().holds;
            let (ma, mb, mp) = (me(a), me(b), me(&p));
            ensure(mp == (ma && mb), || format!("ME {na}x{nb}: {ma} & {mb} vs product {mp}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} product comparisons"))
}

/// Mean equicontinuity passes to iterates.
pub fn me_iterates() -> Outcome {
    let mut n = 0;
    for (name, f) in full_battery() {
        if !check_mean_equicontinuity(&f, 0.9, 60, 24, 5).unwrap().holds {
            continue;
        }
        for k in [2, 3] {
            let v = check_mean_equicontinuity(&f.iterate(k).unwrap(), 0.9, 60, 24, 5).unwrap();
            ensure(v.holds, || format!("{name}: F ME but F^{k} not ({:?})", v.witness))?;
            n += 1;
        }
    }
    ensure(n > 0, || "no ME premise held".into())?;
    Ok(format!("{n} iterate implications"))
}

/// Recurrent expansivity of F versus F^k on equicontinuous systems, plus the
/// non-equicontinuous block counterexample.
pub fn recurrent_iterates() -> Outcome {
    let h = 96;
    let mut n = 0;
    for (name, f) in full_battery() {
        if !check_equicontinuity(&f, 0.25, 96).unwrap().holds {
            continue;
        }
        let rf = exp(&f, ExpansivityKind::Recurrent, h);
        for k in [2, 3] {
            let rk = exp(&f.iterate(k).unwrap(), ExpansivityKind::Recurrent, h / k);
            ensure(rf.holds == rk.holds, || format!("{name}: recurrent F {} vs F^{k} {}", rf.holds, rk.holds))?;
            n += 1;
        }
    }
    ensure(n > 0, || "no equicontinuous system".into())?;
    let w8 = Space::words(8).unwrap();
    let f = word(&w8, MapPrimitive::Shift(1), restart(4, false));
    let rf = exp(&f, ExpansivityKind::Recurrent, 128);
    let r2 = exp(&f.iterate(2).unwrap(), ExpansivityKind::Recurrent, 64);
    let eq = check_equicontinuity(&f, 0.25, 128).unwrap();
    ensure(rf.holds && c(&rf) >= 0.5 - 0.02, || format!("block system not recurrently expansive: {:?}", rf.constant_estimate))?;
    ensure(!r2.holds && r2.witness.is_some(), || "second iterate should fail with a witness".into())?;
    ensure(!eq.holds, || "block system should not be equicontinuous".into())?;
    Ok(format!("{n} equicontinuous comparisons; block counterexample fails only the iterate clause"))
}

/// Mean expansivity of F^k bounds that of F from below by c/k, and for
/// periodic mean-equicontinuous systems passes to F^k.
pub fn mean_iterates() -> Outcome {
    let h = 48;
    let mut n = 0;
    for (name, f) in full_battery() {
        let mf = exp(&f, ExpansivityKind::Mean, h);
        for k in [2, 3] {
            let fk = f.iterate(k).unwrap();
            let mk = exp(&fk, ExpansivityKind::Mean, h / k);
            ensure(c(&mf) >= c(&mk) / k as f64 - 1e-9, || {
                format!("{name}: F constant {} below F^{k} constant {} / {k}", c(&mf), c(&mk))
            })?;
            if mk.holds && c(&mk) / k as f64 > f.space().resolution() {
                ensure(mf.holds, || format!("{name}: F^{k} mean expansive but F not"))?;
            }
            let periodic_me = f.period().is_some() && check_mean_equicontinuity(&f, 0.5, 40, 24, 5).unwrap().holds;
            if periodic_me && mf.holds {
                ensure(mk.holds, || format!("{name}: periodic ME and mean expansive but F^{k} not"))?;
            }
            n += 1;
        }
    }
    let l = Space::line(-1.0, 1.0, 201).unwrap();
    let f = word(&l, MapPrimitive::Affine(2.0, 0.0), ExponentRule::Ascending);
    let mf = exp(&f, ExpansivityKind::Mean, 64);
    let m2 = exp(&f.iterate(2).unwrap(), ExpansivityKind::Mean, 32);
    ensure(mf.holds, || "ascending scaling system should be mean expansive".into())?;
    ensure(!m2.holds && m2.witness.is_some(), || "its second iterate should fail with a witness".into())?;
    ensure(f.period().is_none(), || "ascending scaling system is aperiodic".into())?;
    Ok(format!("{n} iterate comparisons; ascending counterexample fails only the iterate clause"))
}

pub fn shadow_params(eps: f64, mode: ShadowMode, t: usize, seed: u64) -> ShadowingParams {
    let mut p = ShadowingParams::new(eps, mode);
    p.t = t;
    p.sample = 20;
    p.seed = seed;
    p
}

/// Almost shadowing of F and F^k agree on equicontinuous systems.
pub fn alsp_iterates() -> Outcome {
    let l = Space::line(-1.0, 1.0, 201).unwrap();
    let cases = vec![
        ("scaling-triplet", word(&l, MapPrimitive::Affine(2.0, 0.0), ExponentRule::Cycle(vec![1, 0, 0])), 3, 12, 0.1),
        ("doubling", auto(&Space::circle(1023).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0)), 2, 6, 0.1),
        ("rotation", auto(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0)), 2, 24, 0.1),
        ("identity", auto(&Space::interval(0.0, 1.0, 1001).unwrap(), MapPrimitive::Identity), 2, 400, 0.05),
        ("shift", auto(&Space::words(6).unwrap(), MapPrimitive::Shift(1)), 2, 24, 0.3),
    ];
    let mut lines = Vec::new();
    for (name, f, k, t, eps) in cases {
        let eq = check_equicontinuity(&f, eps, 32).unwrap();
        ensure(eq.holds, || format!("{name} should be equicontinuous"))?;
        let v = check_iterate_alsp_consistency(&f, k, Some(&eq), &shadow_params(eps, ShadowMode::Almost, t, 3)).unwrap();
        ensure(v.holds, || format!("{name}: {:?}", v.notes))?;
        lines.push(format!("{name} {}", v.notes.join(" ")));
    }
    Ok(lines.join("; "))
}

/// ALSP and SASP of a product versus its factors.
pub fn shadowing_product_laws() -> Outcome {
    let doubling = auto(&Space::circle(255).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0));
    let rotation = auto(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0));
    let shift = auto(&Space::words(6).unwrap(), MapPrimitive::Shift(1));
    let identity = auto(&Space::interval(0.0, 1.0, 101).unwrap(), MapPrimitive::Identity);
    let systems = [("doubling", &doubling), ("rotation", &rotation), ("shift", &shift), ("identity", &identity)];
    let mut n = 0;
    for mode in [ShadowMode::Almost, ShadowMode::StrongAverage] {
        let verdict = |s: &MapSequence| check_shadowing_property(s, &shadow_params(0.1, mode, 6, 21)).unwrap().holds;
        for (i, (na, a)) in systems.iter().enumerate() {
            for (nb, b) in &systems[i..] {
                let (va, vb) = (verdict(a), verdict(b));
                let vp = verdict(&a.product(b).unwrap());
                ensure(vp == (va && vb), || format!("{} {na}x{nb}: {va} & {vb} vs product {vp}", mode.name()))?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} product comparisons"))
}

pub fn chain_battery() -> Vec<(&'static str, MapSequence)> {
    let w5 = Space::words(5).unwrap();
    let unit = Space::interval(0.0, 1.0, 33).unwrap();
    vec![
        ("rotation-12", auto(&Space::circle(12).unwrap(), MapPrimitive::AffineMod1(1.0, 1.0 / 12.0))),
        ("rotation-16", auto(&Space::circle(16).unwrap(), MapPrimitive::AffineMod1(1.0, 3.0 / 16.0))),
        ("doubling", auto(&Space::circle(64).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0))),
        ("tent", auto(&unit, MapPrimitive::Tent)),
        ("contraction", auto(&unit, MapPrimitive::Affine(0.5, 0.0))),
        ("reflection", auto(&unit, MapPrimitive::Affine(-1.0, 1.0))),
        ("identity", auto(&Space::words(3).unwrap(), MapPrimitive::Identity)),
        ("shift", auto(&w5, MapPrimitive::Shift(1))),
        ("shift-pair", MapSequence::periodic(&w5, vec![MapPrimitive::Shift(1), MapPrimitive::Shift(2)]).unwrap()),
        ("doubling-odd", auto(&Space::circle(1023).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0))),
        ("successor", auto(&Space::successor(6).unwrap(), MapPrimitive::Successor(1))),
        (
            "triplet",
            MapSequence::periodic(
                &Space::circle(32).unwrap(),
                vec![MapPrimitive::AffineMod1(2.0, 0.0), MapPrimitive::Identity, MapPrimitive::Identity],
            )
            .unwrap(),
        ),
    ]
}

/// Largest Lipschitz ratio over one cycle of generators.
pub fn lipschitz(seq: &MapSequence) -> f64 {
    let s = seq.space();
    let mut l = 0.0f64;
    for i in 1..=seq.cycle_len(16) {
        for (x, y) in s.enumerate_pairs() {
            l = l.max(s.dist(seq.apply(i, x), seq.apply(i, y)) / s.dist(x, y));
        }
    }
    l
}

/// Longest horizon `t ≤ cap` over which rounding, amplified by the
/// Lipschitz ratio, stays below `eps/4`.
pub fn faithful_horizon(seq: &MapSequence, eps: f64, cap: usize) -> usize {
    let (l, rr) = (lipschitz(seq), seq.space().rounding_radius());
    (1..=cap).take_while(|t| l.max(1.0).powi(*t as i32) * rr <= eps / 4.0).last().unwrap_or(1)
}

/// Equicontinuous + transitive implies chain transitive; surjective + chain
/// transitive + shadowing implies transitive.
pub fn chain_implications() -> Outcome {
    let (mut first, mut second) = (0, 0);
    for (name, f) in chain_battery() {
        let eq = check_equicontinuity(&f, 0.2, 16).unwrap().holds;
        let tr = check_transitive(&f, &[0.2, 0.1], 64).unwrap().holds;
        let ct = check_chain_transitive(&f, &[0.2, 0.1, 0.05], None).unwrap().holds;
        let su = f.is_surjective(16).unwrap();
        // Shadowing is undetermined when the grid tracks fewer than 4 steps.
        let t = faithful_horizon(&f, 0.1, 48);
        let sh = t >= 4 && check_shadowing_property(&f, &shadow_params(0.1, ShadowMode::Plain, t, 9)).unwrap().holds;
        if eq && tr {
            ensure(ct, || format!("{name}: equicontinuous and transitive but not chain transitive"))?;
            first += 1;
        }
        if su && ct && sh {
            ensure(tr, || format!("{name}: surjective, chain transitive, shadowing but not transitive"))?;
            second += 1;
        }
    }
    ensure(first > 0 && second > 0, || format!("premises met {first} and {second} times"))?;
    Ok(format!("premises met: {first} (equicontinuous+transitive), {second} (surjective+chain+shadowing)"))
}

/// Independent shadow point for `x ↦ 2x (mod 1)`: the pseudo-orbit's step
/// errors summed as a geometric series, then rounded to the two adjacent
/// cells, scoring each by the exact error recursion.
pub fn doubling_oracle(n: usize, points: &[PointId], eps: f64) -> (PointId, bool) {
    let wrap = |v: f64| v - v.round();
    let x: Vec<f64> = points.iter().map(|p| p.0 as f64 / n as f64).collect();
    let e: Vec<f64> = x.windows(2).map(|w| wrap(w[1] - 2.0 * w[0])).collect();
    let mut z = x[0];
    for (m, em) in e.iter().enumerate() {
        z += em / 2f64.powi(m as i32 + 1);
    }
    let z = z.rem_euclid(1.0);
    let lo = (z * n as f64).floor() as i64;
    let score = |k: i64| {
        let mut y = k.rem_euclid(n as i64) as f64 / n as f64;
        let mut worst = 0.0f64;
        for xm in &x {
            worst = worst.max(wrap(y - xm).abs());
            y = (2.0 * y).rem_euclid(1.0);
        }
        worst
    };
    let (a, b) = (score(lo), score(lo + 1));
    let best = if b < a { lo + 1 } else { lo };
    (PointId(best.rem_euclid(n as i64)), a.min(b) < eps - 1e-9)
}

/// Exhaustive scan versus the series oracle on 50 seeded pseudo-orbits,
/// from a slack regime to one where only some orbits are shadowed.
pub fn oracle_equivalence() -> Outcome {
    let n = 4096;
    let f = auto(&Space::circle(n).unwrap(), MapPrimitive::AffineMod1(2.0, 0.0));
    let mut summary = Vec::new();
    for (delta, eps, t) in [(0.01, 0.03, 6), (0.02, 0.02, 7), (0.02, 0.012, 7)] {
        let mut successes = 0;
        for seed in 0..50 {
            let po = perturbed_orbit(&f, PointId(((seed * 977) % n as u64) as i64), t, delta, seed).unwrap();
            let scan = find_shadow_point(&f, &po, eps, ShadowMode::Plain, None).unwrap();
            let (oracle, ok) = doubling_oracle(n, &po.points, eps);
            let cells = (scan.best_point.0 - oracle.0).rem_euclid(n as i64);
            ensure(cells.min(n as i64 - cells) <= 1, || {
                format!("seed {seed}: scan {} vs oracle {} (delta {delta})", scan.best_point.0, oracle.0)
            })?;
            ensure(scan.succeeded() == ok, || format!("seed {seed}: scan {} vs oracle {ok}", scan.succeeded()))?;
            successes += ok as usize;
        }
        summary.push(format!("delta {delta} eps {eps}: {successes}/50 shadowed"));
    }
    Ok(summary.join(", "))
}
