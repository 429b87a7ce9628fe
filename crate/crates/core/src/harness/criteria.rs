//! Named acceptance presets. Each returns a [`CriterionResult`] whose
//! `metrics` are a deterministic function of the options; only
//! `elapsed_ms` depends on the machine.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{run_trials, standard_suite, wilson, AdviceDemoConfig, RunConfig, SELECTOR_THRESHOLD};
use crate::adversaries::{make_adversary_with_truth, AdversaryKind, ConstantDecider, LieAt, SparselyCorrupted};
use crate::boolean::{all_functions, is_satisfiable, Assignment, Formula};
use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField, Rng};
use crate::instance::{
    brute_force_v_phi, generate_instance, satisfying_tables, AssignmentTable, InstanceTemplate, Oracle, Session,
    SessionPoints, SuccinctInstance, TableOracle,
};
use crate::lowdegree::{default_ml_reps, multilinearity_test, self_correct, MleTable};
use crate::selectors::{
    amplify, binary_search_disagreement, lexmax_query_set, select_det_dsr, select_nonadaptive_lexmax,
    select_prob_expnp, tournament, DecisionOracle, Event, FnDecider, LexmaxOracle, LexmaxQuery, Recording,
    SatRestriction, SelectorOutcome, SelectorParams,
};
use crate::sumcheck::{
    arithmetize, ht_degree_bounds, sumcheck_verify, CheatStrategy, CheatingProver, ConstraintKind, ConstraintPoly,
    HonestProver,
};

/// `(id, name)` of every preset.
pub const PRESETS: [(u8, &str); 11] = [
    (1, "mle-correctness"),
    (2, "multilinearity"),
    (3, "self-correction"),
    (4, "binary-search"),
    (5, "sumcheck"),
    (6, "main-selector"),
    (7, "nonadaptive"),
    (8, "dsr"),
    (9, "tournament"),
    (10, "advice-removal"),
    (11, "replay"),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetOptions {
    pub seed: u64,
    /// Multiplies every trial count (at least one trial is always run).
    pub scale: f64,
    pub parallel: bool,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { seed: 0, scale: 1.0, parallel: true }
    }
}

impl PresetOptions {
    fn trials(&self, full: u64) -> u64 {
        ((full as f64 * self.scale).round() as u64).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip)]
    pub elapsed_ms: f64,
}

impl CriterionResult {
    /// One line, `PASS criterion N (name): summary`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} criterion {} ({}): {}", self.id, self.name, self.summary)
    }
}

/// Resolves a preset by number or name.
pub fn preset_id(key: &str) -> Result<u8> {
    PRESETS
        .iter()
        .find(|(id, name)| *name == key || id.to_string() == key)
        .map(|(id, _)| *id)
        .ok_or_else(|| Error::Config(format!("unknown preset '{key}'")))
}

pub fn run_preset(key: &str, opts: &PresetOptions) -> Result<CriterionResult> {
    let id = preset_id(key)?;
    let start = Instant::now();
    let (passed, summary, metrics) = match id {
        1 => mle_correctness(opts)?,
        2 => multilinearity(opts)?,
        3 => self_correction(opts)?,
        4 => binary_search(opts)?,
        5 => sumcheck(opts)?,
        6 => main_selector(opts)?,
        7 => nonadaptive()?,
        8 => dsr()?,
        9 => tournament_preset(opts)?,
        10 => advice_removal(opts)?,
        _ => replay(opts)?,
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut result = CriterionResult {
        id,
        name: PRESETS[id as usize - 1].1,
        passed,
        summary,
        metrics,
        elapsed_ms,
    };
    // Runtime limits only apply at full scale.
    let limit_ms = match id {
        1 => Some(5_000.0),
        6 => Some(600_000.0),
        _ => None,
    };
    if let Some(limit) = limit_ms.filter(|_| opts.scale >= 1.0) {
        if elapsed_ms > limit {
            result.passed = false;
            result.summary.push_str(&format!("; took {:.1} s, limit {:.0} s", elapsed_ms / 1e3, limit / 1e3));
        }
    }
    Ok(result)
}

type Verdict = (bool, String, BTreeMap<String, f64>);

fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Number of trials `i` in `0..trials` for which `f(i)` holds.
fn count(trials: u64, parallel: bool, f: impl Fn(u64) -> Result<bool> + Sync) -> Result<u64> {
    let hits: Vec<bool> = if parallel {
        (0..trials).into_par_iter().map(&f).collect::<Result<_>>()?
    } else {
        (0..trials).map(&f).collect::<Result<_>>()?
    };
    Ok(hits.into_iter().filter(|&h| h).count() as u64)
}

fn random_table(field: PrimeField, n: usize, rng: &mut Rng) -> MleTable {
    MleTable::new((0..1 << n).map(|_| rng.elem(field)).collect()).expect("power-of-two length")
}

fn cube_point(field: PrimeField, idx: usize, n: usize) -> Vec<Fe> {
    (0..n).map(|j| field.from_bool(idx >> (n - 1 - j) & 1 == 1)).collect()
}

fn mle_correctness(opts: &PresetOptions) -> Result<Verdict> {
    let field = PrimeField::default();
    let tables = opts.trials(1000);
    let mut rng = Rng::new(opts.seed);
    let mut mismatches = 0u64;
    for n in 1..=4 {
        for _ in 0..tables {
            let t = random_table(field, n, &mut rng);
            for idx in 0..1 << n {
                mismatches += u64::from(t.eval(&cube_point(field, idx, n))? != t.values()[idx]);
            }
        }
    }
    // v00(1-x1)(1-x2) + v01(1-x1)x2 + v10 x1(1-x2) + v11 x1 x2
    let mut closed_form_mismatches = 0u64;
    let one = field.one();
    for _ in 0..tables {
        let t = random_table(field, 2, &mut rng);
        let v = t.values();
        let (x1, x2) = (rng.elem(field), rng.elem(field));
        let expected = v[0] * (one - x1) * (one - x2) + v[1] * (one - x1) * x2 + v[2] * x1 * (one - x2) + v[3] * x1 * x2;
        closed_form_mismatches += u64::from(t.eval(&[x1, x2])? != expected);
    }
    let passed = mismatches == 0 && closed_form_mismatches == 0;
    Ok((
        passed,
        format!("{mismatches} cube mismatches, {closed_form_mismatches} closed-form mismatches over {tables} tables per n"),
        metrics([
            ("tables_per_n", tables as f64),
            ("cube_mismatches", mismatches as f64),
            ("closed_form_mismatches", closed_form_mismatches as f64),
        ]),
    ))
}

fn multilinearity(opts: &PresetOptions) -> Result<Verdict> {
    let field = PrimeField::default();
    let honest = opts.trials(1000);
    let rejected_true = honest
        - count(honest, opts.parallel, |i| {
            let mut rng = Rng::substream(opts.seed, i);
            let n = 1 + rng.below(4);
            let mut t = random_table(field, n, &mut rng);
            Ok(multilinearity_test(&mut t, n, default_ml_reps(n), &mut rng)?.accepted())
        })?;
    let suite = standard_suite();
    let trials = opts.trials(200);
    let caught = count(trials, opts.parallel, |i| {
        let mut rng = Rng::substream(opts.seed ^ (2 << 48), i);
        let inst = &suite[i as usize % suite.len()];
        let truth = brute_force_v_phi(inst)?;
        let mut adv = make_adversary_with_truth(AdversaryKind::NonMultilinear, inst, &truth, &mut rng)?;
        let session = RefCell::new(Session::new(&mut adv, inst));
        let n = inst.n();
        Ok(!multilinearity_test(&mut SessionPoints(&session), n, default_ml_reps(n), &mut rng)?.accepted())
    })?;
    let rate = caught as f64 / trials as f64;
    Ok((
        rejected_true == 0 && rate >= 0.9,
        format!("{rejected_true} of {honest} true extensions rejected; non-multilinear reject rate {rate:.3}"),
        metrics([
            ("true_extensions", honest as f64),
            ("true_rejections", rejected_true as f64),
            ("adversary_trials", trials as f64),
            ("adversary_reject_rate", rate),
        ]),
    ))
}

fn self_correction(opts: &PresetOptions) -> Result<Verdict> {
    let field = PrimeField::default();
    let trials = opts.trials(1000);
    let correct = count(trials, opts.parallel, |i| {
        let mut rng = Rng::substream(opts.seed, i);
        let base = random_table(field, 2, &mut rng);
        let x = rng.point(field, 2);
        let want = base.eval(&x)?;
        let mut f = SparselyCorrupted::new(base, 0.01, rng.next_u64());
        Ok(self_correct(&mut f, &x, &mut rng)? == want)
    })?;
    let rate = correct as f64 / trials as f64;
    Ok((
        rate >= 0.95,
        format!("correct-output rate {rate:.3} at corruption 0.01, n = 2 (required 0.95)"),
        metrics([("trials", trials as f64), ("rate", rate)]),
    ))
}

fn binary_search(opts: &PresetOptions) -> Result<Verdict> {
    let field = PrimeField::default();
    let mut rng = Rng::new(opts.seed);
    let mut pairs = Vec::new();
    for n in 1..=4 {
        while pairs.iter().filter(|(a, _): &&(AssignmentTable, AssignmentTable)| a.dim() == n).count() < 5 {
            let a = AssignmentTable::new((0..1 << n).map(|_| rng.bit()).collect())?;
            let b = AssignmentTable::new((0..1 << n).map(|_| rng.bit()).collect())?;
            if a != b {
                pairs.push((a, b));
            }
        }
    }
    let trials = opts.trials(200);
    let mut worst: f64 = 1.0;
    for (p, (a, b)) in pairs.iter().enumerate() {
        let first = (0..a.values().len()).find(|&i| a.at(i) != b.at(i)).expect("tables differ");
        let (ma, mb) = (a.to_mle(field), b.to_mle(field));
        let hits = count(trials, opts.parallel, |i| {
            let mut rng = Rng::substream(opts.seed ^ ((p as u64 + 1) << 32), i);
            let z = binary_search_disagreement(&mut ma.clone(), &mut mb.clone(), a.dim(), &mut rng)?;
            Ok(z.to_index() as usize == first)
        })?;
        worst = worst.min(hits as f64 / trials as f64);
    }
    Ok((
        worst >= 0.99,
        format!("worst success rate {worst:.3} over {} table pairs, {trials} trials each", pairs.len()),
        metrics([("pairs", pairs.len() as f64), ("trials_per_pair", trials as f64), ("worst_rate", worst)]),
    ))
}

/// Suite instances with a non-satisfying boolean table each.
fn violated(field: PrimeField) -> Result<Vec<(SuccinctInstance, AssignmentTable)>> {
    let mut out = Vec::new();
    for inst in standard_suite() {
        let inst = inst.with_field(field);
        let sat = satisfying_tables(&inst)?;
        let n = inst.n();
        if let Some(v) = (0..1u64 << (1 << n))
            .map(|v| AssignmentTable::from_integer(v, n))
            .find(|t| !sat.contains(t))
        {
            out.push((inst, v));
        }
    }
    Ok(out)
}

fn cheat_accepted(inst: &SuccinctInstance, table: &AssignmentTable, key: u64, rng: &mut Rng) -> Result<bool> {
    let field = inst.field();
    let arith = arithmetize(inst.phi());
    let mle = table.to_mle(field);
    let mut prover = CheatingProver::new(inst, mle.clone(), CheatStrategy::RootSeeking, key);
    let mut f = mle;
    let mut c = ConstraintPoly::new(ConstraintKind::G1, inst, &arith, &mut f);
    Ok(sumcheck_verify(&mut c, &mut prover, rng)?.accepted)
}

fn sumcheck(opts: &PresetOptions) -> Result<Verdict> {
    let field = PrimeField::default();
    let runs = opts.trials(1000);
    let suite = standard_suite();
    let mut satisfiable = Vec::new();
    for inst in &suite {
        let v = brute_force_v_phi(inst)?;
        if satisfying_tables(inst)?.contains(&v) {
            satisfiable.push((inst.clone(), v));
        }
    }
    let honest = count(runs, opts.parallel, |i| {
        let mut rng = Rng::substream(opts.seed, i);
        let (inst, v) = &satisfiable[i as usize % satisfiable.len()];
        let arith = arithmetize(inst.phi());
        for kind in [ConstraintKind::G1, ConstraintKind::G2] {
            let mut prover = HonestProver::new(inst, v.to_mle(field));
            let mut f = v.to_mle(field);
            let mut c = ConstraintPoly::new(kind, inst, &arith, &mut f);
            if !sumcheck_verify(&mut c, &mut prover, &mut rng)?.accepted {
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    let bad = violated(field)?;
    let fooled = count(runs, opts.parallel, |i| {
        let mut rng = Rng::substream(opts.seed ^ (5 << 48), i);
        let (inst, v) = &bad[i as usize % bad.len()];
        cheat_accepted(inst, v, i, &mut rng)
    })?;
    // Tiny field: a one-input instance whose constraint is violated.
    let tiny = PrimeField::new(101)?;
    let inst = generate_instance(InstanceTemplate::LastInput, 0, 1, tiny, &mut Rng::new(2))?;
    let table = AssignmentTable::new(vec![true, false])?;
    let dl: usize = ht_degree_bounds(ConstraintKind::G1, &inst, &arithmetize(inst.phi())).iter().sum();
    let tiny_runs = opts.trials(2000);
    let tiny_fooled = count(tiny_runs, opts.parallel, |i| {
        let mut rng = Rng::substream(opts.seed ^ (0x65 << 48), i);
        cheat_accepted(&inst, &table, i, &mut rng)
    })?;
    let tiny_rate = tiny_fooled as f64 / tiny_runs as f64;
    let tiny_bound = 3.0 * dl as f64 / 101.0;
    Ok((
        honest == runs && fooled == 0 && tiny_rate <= tiny_bound,
        format!(
            "honest accepted {honest}/{runs}; cheater accepted {fooled}/{runs}; at p = 101 false-accept {tiny_rate:.4} (bound {tiny_bound:.4})"
        ),
        metrics([
            ("runs", runs as f64),
            ("honest_accepted", honest as f64),
            ("cheater_accepted", fooled as f64),
            ("tiny_field_runs", tiny_runs as f64),
            ("tiny_field_false_accept_rate", tiny_rate),
            ("tiny_field_bound", tiny_bound),
        ]),
    ))
}

fn main_selector(opts: &PresetOptions) -> Result<Verdict> {
    let config = RunConfig {
        seed: opts.seed,
        trials: opts.trials(200),
        parallel: opts.parallel,
        ..RunConfig::default()
    };
    let report = run_trials(&config)?;
    let s = &report.summary;
    let worst = report
        .rows
        .iter()
        .min_by(|a, b| a.wilson_lower.total_cmp(&b.wilson_lower))
        .expect("the default config has rows");
    Ok((
        s.min_wilson_lower >= SELECTOR_THRESHOLD && s.mean_rate >= 0.9,
        format!(
            "{} cells, mean rate {:.4}, min Wilson lower bound {:.4} (instance {}, {}, honest slot {})",
            s.cells, s.mean_rate, s.min_wilson_lower, worst.instance, worst.opponent, worst.honest_slot
        ),
        metrics([
            ("instances", report.budget.len() as f64),
            ("cells", s.cells as f64),
            ("trials", s.trials as f64),
            ("mean_rate", s.mean_rate),
            ("min_wilson_lower", s.min_wilson_lower),
        ]),
    ))
}

fn lexmax_bit(phi: &Formula, k: usize) -> Result<bool> {
    LexmaxOracle::default().decide(&LexmaxQuery { phi: phi.clone(), j: k })
}

fn nonadaptive() -> Result<Verdict> {
    let (mut cases, mut wrong, mut outside) = (0u64, 0u64, 0u64);
    for n in 1..=3 {
        for phi in all_functions(n) {
            for k in 0..n {
                let truth = lexmax_bit(&phi, k)?;
                let allowed = lexmax_query_set(&phi, k);
                for lie in 0..1u64 << n {
                    for honest_slot in 0..2 {
                        let claim = Assignment::from_index(lie, n);
                        let mut adv = Recording::new(FnDecider(move |q: &LexmaxQuery| Ok(claim.get(q.j))));
                        let mut honest = Recording::new(LexmaxOracle::default());
                        let out = if honest_slot == 0 {
                            select_nonadaptive_lexmax(&phi, k, &mut honest, &mut adv)?
                        } else {
                            select_nonadaptive_lexmax(&phi, k, &mut adv, &mut honest)?
                        };
                        cases += 1;
                        wrong += u64::from(out.answer != truth);
                        outside += u64::from(!adv.queries.iter().chain(&honest.queries).all(|q| allowed.contains(q)));
                    }
                }
            }
        }
    }
    Ok((
        wrong == 0 && outside == 0,
        format!("{cases} cases, {wrong} wrong answers, {outside} with queries outside the precomputed set"),
        metrics([("cases", cases as f64), ("wrong", wrong as f64), ("outside_query_set", outside as f64)]),
    ))
}

fn dsr_steps(out: &SelectorOutcome) -> Vec<usize> {
    out.diagnostics
        .iter()
        .filter_map(|e| if let Event::DsrStep { size } = e { Some(*size) } else { None })
        .collect()
}

fn dsr() -> Result<Verdict> {
    let (mut cases, mut wrong, mut non_decreasing) = (0u64, 0u64, 0u64);
    let sat = |q: &Formula| is_satisfiable(q);
    for phi in all_functions(2) {
        let truth = is_satisfiable(&phi)?;
        // Every input the reduction can ask about: phi and its restrictions.
        let mut lie_points = vec![phi.clone()];
        for b in [false, true] {
            let once = phi.restrict(0, b)?;
            for c in [false, true] {
                lie_points.push(once.restrict(0, c)?);
            }
            lie_points.push(once);
        }
        let mut outcomes = Vec::new();
        for c in [false, true] {
            outcomes.push(select_det_dsr(&SatRestriction, &phi, &mut FnDecider(sat), &mut ConstantDecider(c))?);
            outcomes.push(select_det_dsr(&SatRestriction, &phi, &mut ConstantDecider(c), &mut FnDecider(sat))?);
        }
        for at in lie_points {
            let mut liar = LieAt { at: at.clone(), truth: sat };
            outcomes.push(select_det_dsr(&SatRestriction, &phi, &mut liar, &mut FnDecider(sat))?);
            let mut liar = LieAt { at, truth: sat };
            outcomes.push(select_det_dsr(&SatRestriction, &phi, &mut FnDecider(sat), &mut liar)?);
        }
        for out in outcomes {
            cases += 1;
            wrong += u64::from(out.answer != truth);
            non_decreasing += u64::from(!dsr_steps(&out).windows(2).all(|w| w[1] < w[0]));
        }
    }
    Ok((
        wrong == 0 && non_decreasing == 0,
        format!("{cases} cases, {wrong} wrong answers, {non_decreasing} runs without strictly shrinking inputs"),
        metrics([("cases", cases as f64), ("wrong", wrong as f64), ("non_decreasing", non_decreasing as f64)]),
    ))
}

fn tournament_preset(opts: &PresetOptions) -> Result<Verdict> {
    const ORACLES: usize = 8;
    const REPS: usize = 3;
    let suite = standard_suite();
    let params = SelectorParams { seed: opts.seed, ..SelectorParams::default() };
    let trials = opts.trials(200);
    let run = |i: u64| -> Result<(bool, bool)> {
        let mut rng = Rng::substream(opts.seed, i);
        let inst = &suite[i as usize % suite.len()];
        let truth = brute_force_v_phi(inst)?;
        let honest_at = i as usize % ORACLES;
        let kinds = AdversaryKind::all();
        let mut oracles: Vec<Box<dyn Oracle>> = Vec::with_capacity(ORACLES);
        for j in 0..ORACLES {
            if j == honest_at {
                oracles.push(Box::new(TableOracle::new(inst, truth.clone())?));
            } else {
                let kind = kinds[(j + i as usize) % kinds.len()];
                oracles.push(Box::new(make_adversary_with_truth(kind, inst, &truth, &mut rng)?));
            }
        }
        let answer_of = |o: &mut Box<dyn Oracle>| Session::new(o.as_mut(), inst).decision_bit(inst.b_in());
        let duel = |a: &mut Box<dyn Oracle>, b: &mut Box<dyn Oracle>, r: &mut Rng| {
            amplify(REPS, r, |rr| select_prob_expnp(inst, a.as_mut(), b.as_mut(), &params, rr))
        };
        let out = tournament(&mut oracles, answer_of, duel, &mut rng)?;
        let survived = !out.diagnostics.iter().any(|e| matches!(e, Event::Duel { loser, .. } if *loser == honest_at));
        Ok((out.answer == truth.get(inst.b_in()), survived))
    };
    let results: Vec<(bool, bool)> = if opts.parallel {
        (0..trials).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..trials).map(run).collect::<Result<_>>()?
    };
    let successes = results.iter().filter(|r| r.0).count() as u64;
    let survived = results.iter().filter(|r| r.1).count() as u64;
    let (lower, _) = wilson(successes, trials);
    let survival = survived as f64 / trials as f64;
    Ok((
        lower >= SELECTOR_THRESHOLD && survival >= 0.95,
        format!(
            "{ORACLES} oracles, duels amplified {REPS}x: success {successes}/{trials} (Wilson lower {lower:.4}), honest survived {survival:.3}"
        ),
        metrics([
            ("trials", trials as f64),
            ("success_rate", successes as f64 / trials as f64),
            ("wilson_lower", lower),
            ("honest_survival", survival),
        ]),
    ))
}

fn advice_removal(opts: &PresetOptions) -> Result<Verdict> {
    let draws = opts.trials(200);
    let run = |good_fraction: f64| {
        super::demo_advice_removal(&AdviceDemoConfig {
            advice_bits: 2,
            randomness_bits: 12,
            good_fraction,
            draws,
            seed: opts.seed,
        })
    };
    let five_sixths = run(5.0 / 6.0)?;
    let all_good = run(1.0)?;
    Ok((
        five_sixths.rate >= SELECTOR_THRESHOLD && all_good.rate >= 0.9,
        format!(
            "a = 2: success {:.3} with good fraction {:.4}, {:.3} with all strings good ({draws} draws)",
            five_sixths.rate, five_sixths.measured_good_fraction, all_good.rate
        ),
        metrics([
            ("draws", draws as f64),
            ("five_sixths_good_fraction", five_sixths.measured_good_fraction),
            ("five_sixths_rate", five_sixths.rate),
            ("all_good_rate", all_good.rate),
        ]),
    ))
}

/// Randomized presets rerun twice at a tenth of full scale; the serialized
/// results must match byte for byte, as must a full trial report.
fn replay(opts: &PresetOptions) -> Result<Verdict> {
    let reduced = PresetOptions { scale: opts.scale * 0.1, ..*opts };
    let mut mismatched = Vec::new();
    let randomized = ["multilinearity", "self-correction", "binary-search", "sumcheck", "main-selector", "tournament", "advice-removal"];
    for key in randomized {
        let a = serde_json::to_string(&run_preset(key, &reduced)?).expect("serializable");
        let serial = PresetOptions { parallel: false, ..reduced };
        let b = serde_json::to_string(&run_preset(key, &serial)?).expect("serializable");
        if a != b {
            mismatched.push(key);
        }
    }
    let config = RunConfig { seed: opts.seed, trials: reduced.trials(200), ..RunConfig::default() };
    let report_identical = run_trials(&config)?.to_json() == run_trials(&config)?.to_json();
    if !report_identical {
        mismatched.push("trial-report");
    }
    Ok((
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{} presets and a trial report replayed identically", randomized.len())
        } else {
            format!("replay differed for {}", mismatched.join(", "))
        },
        metrics([("checked", randomized.len() as f64 + 1.0), ("mismatched", mismatched.len() as f64)]),
    ))
}
