//! Selectors: given two oracles of which at least one is honest, decide
//! the target language.
//!
//! - [`select_prob_expnp`]: the randomized selector for succinct instances
//!   (multilinearity test, self-correction, binary search for the first
//!   disagreement, sum-check of the larger claimant).
//! - [`select_nonadaptive_lexmax`]: deterministic and nonadaptive, for
//!   the bits of the lexicographically largest satisfying assignment.
//! - [`select_det_dsr`]: deterministic, for any downward self-reducible
//!   language.
//! - [`select_from_checker`]: from an instance checker.
//!
//! [`tournament`] lifts a two-oracle selector to many oracles and
//! [`amplify`] boosts success by majority vote.

use std::cell::RefCell;
use std::fmt::Debug;

use serde::Serialize;

use crate::boolean::{lexmax_sat, Assignment, Formula};
use crate::error::{arity, Error, Result};
use crate::field::{Fe, Rng};
use crate::instance::{Oracle, QueryCounts, Session, SessionPoints, SessionProver, SuccinctInstance};
use crate::lowdegree::{default_ml_reps, multilinearity_test, self_correct, MultilinearityVerdict, PointFunction};
use crate::sumcheck::{
    arithmetize, ht_degree_bounds, sumcheck_verify, ConstraintKind, ConstraintPoly, SumcheckFailure,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trusted {
    Oracle0,
    Oracle1,
    Agreement,
    NoHonestDetected,
    /// The surviving oracle of a many-oracle tournament.
    Index(usize),
}

impl Trusted {
    fn slot(i: usize) -> Trusted {
        if i == 0 {
            Trusted::Oracle0
        } else {
            Trusted::Oracle1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    MultilinearityRejected { oracle: usize, axis: usize },
    SelfCorrected { at: String, values: [Fe; 2] },
    NonBooleanAnswer { oracle: usize, value: Fe },
    Disagreement { z: String },
    TieAtDisagreement { retries: usize },
    Claimant { oracle: usize },
    Sumcheck {
        oracle: usize,
        kind: ConstraintKind,
        accepted: bool,
        failure: Option<SumcheckFailure>,
        failed_round: Option<usize>,
    },
    Claims { claims: [String; 2] },
    FormulaCheck { oracle: usize, satisfied: bool },
    DsrStep { size: usize },
    CheckerVerdict { accepted: bool },
    Duel { winner: usize, loser: usize },
    Votes { ones: usize, reps: usize },
    Budget(FailureBudget),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectorOutcome {
    pub answer: bool,
    pub trusted: Trusted,
    pub diagnostics: Vec<Event>,
    /// Queries issued to each oracle, in slot order.
    pub queries: Vec<QueryCounts>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SelectorParams {
    /// Multilinearity test repetitions; `None` uses [`default_ml_reps`].
    pub ml_test_reps: Option<usize>,
    pub self_correct_retries: usize,
    /// Odd repetition count for majority amplification.
    pub amplification_reps: usize,
    pub seed: u64,
}

impl Default for SelectorParams {
    fn default() -> Self {
        Self {
            ml_test_reps: None,
            self_correct_retries: 3,
            amplification_reps: 1,
            seed: 0,
        }
    }
}

impl SelectorParams {
    pub fn validate(&self) -> Result<()> {
        if self.amplification_reps % 2 == 0 {
            return Err(arity(format!("amplification_reps = {} must be odd", self.amplification_reps)));
        }
        Ok(())
    }

    pub fn ml_reps(&self, n: usize) -> usize {
        self.ml_test_reps.unwrap_or_else(|| default_ml_reps(n))
    }
}

/// The slack terms in the selector's failure probability for one instance,
/// with `delta` the closeness the multilinearity test is taken to certify.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureBudget {
    pub n: usize,
    pub l: usize,
    pub d: usize,
    pub p: u64,
    pub delta: f64,
    pub binary_search: f64,
    pub self_correction: f64,
    pub sumcheck_degree: f64,
    pub sumcheck_sum: f64,
    pub final_test: f64,
    pub total: f64,
}

/// Closeness assumed for the budget table reported with every run.
pub const BUDGET_DELTA: f64 = 0.01;

pub fn failure_budget(inst: &SuccinctInstance, delta: f64) -> FailureBudget {
    let arith = arithmetize(inst.phi());
    let n = inst.n();
    let l = inst.constraint_arity(ConstraintKind::G1);
    let d = ht_degree_bounds(ConstraintKind::G1, inst, &arith).into_iter().max().unwrap_or(0).max(3);
    let p = inst.field().modulus() as f64;
    let binary_search = (n * n) as f64 / p;
    let self_correction = delta * (n * (n + 1)) as f64;
    let sumcheck_degree = (d * l) as f64 / p;
    let sumcheck_sum = l as f64 / p;
    let final_test = 3.0 * delta;
    FailureBudget {
        n,
        l,
        d,
        p: inst.field().modulus(),
        delta,
        binary_search,
        self_correction,
        sumcheck_degree,
        sumcheck_sum,
        final_test,
        total: binary_search + self_correction + sumcheck_degree + sumcheck_sum + final_test,
    }
}

/// Finds the first cube point where the multilinear functions behind `f0`
/// and `f1` differ, one coordinate at a time: `z_j = 0` iff the two
/// functions still differ somewhere below the prefix `(z_1..z_{j-1}, 0)`,
/// judged at a random completion with self-corrected values.
pub fn binary_search_disagreement(
    f0: &mut dyn PointFunction,
    f1: &mut dyn PointFunction,
    n: usize,
    rng: &mut Rng,
) -> Result<Assignment> {
    if f0.dim() != n || f1.dim() != n {
        return Err(arity(format!("dimensions {} and {} for n = {n}", f0.dim(), f1.dim())));
    }
    let field = f0.field();
    let mut z = Vec::with_capacity(n);
    for j in 0..n {
        let mut x: Vec<Fe> = z.iter().map(|&b| field.from_bool(b)).collect();
        x.push(field.zero());
        x.extend(rng.point(field, n - j - 1));
        let v0 = self_correct(f0, &x, rng)?;
        let v1 = self_correct(f1, &x, rng)?;
        z.push(v0 == v1);
    }
    Ok(Assignment::new(z))
}

fn to_bit(v: Fe, oracle: usize, events: &mut Vec<Event>) -> bool {
    match v.as_bool() {
        Some(b) => b,
        None => {
            events.push(Event::NonBooleanAnswer { oracle, value: v });
            true
        }
    }
}

/// The randomized selector for a succinct instance.
pub fn select_prob_expnp(
    inst: &SuccinctInstance,
    a0: &mut dyn Oracle,
    a1: &mut dyn Oracle,
    params: &SelectorParams,
    rng: &mut Rng,
) -> Result<SelectorOutcome> {
    inst.check_budget()?;
    let sessions = [RefCell::new(Session::new(a0, inst)), RefCell::new(Session::new(a1, inst))];
    let mut events = vec![Event::Budget(failure_budget(inst, BUDGET_DELTA))];
    let answer = run_prob_expnp(inst, &sessions, params, rng, &mut events);
    let queries = sessions.iter().map(|s| s.borrow().counts()).collect();
    let (answer, trusted) = answer?;
    Ok(SelectorOutcome {
        answer,
        trusted,
        diagnostics: events,
        queries,
    })
}

fn run_prob_expnp(
    inst: &SuccinctInstance,
    sessions: &[RefCell<Session<'_>>; 2],
    params: &SelectorParams,
    rng: &mut Rng,
    events: &mut Vec<Event>,
) -> Result<(bool, Trusted)> {
    let n = inst.n();
    let reps = params.ml_reps(n);
    let decision = |i: usize| sessions[i].borrow_mut().decision_bit(inst.b_in());

    let mut passed = [true; 2];
    for (i, s) in sessions.iter().enumerate() {
        if let MultilinearityVerdict::Reject(w) = multilinearity_test(&mut SessionPoints(s), n, reps, rng)? {
            events.push(Event::MultilinearityRejected { oracle: i, axis: w.axis });
            passed[i] = false;
        }
    }
    match passed {
        [true, false] => return Ok((decision(0)?, Trusted::Oracle0)),
        [false, true] => return Ok((decision(1)?, Trusted::Oracle1)),
        [false, false] => return Ok((decision(0)?, Trusted::NoHonestDetected)),
        [true, true] => {}
    }

    let target = inst.b_in_point();
    let mut at_target = [target[0]; 2];
    for (i, s) in sessions.iter().enumerate() {
        at_target[i] = self_correct(&mut SessionPoints(s), &target, rng)?;
    }
    events.push(Event::SelfCorrected { at: inst.b_in().to_string(), values: at_target });
    if at_target[0] == at_target[1] {
        return Ok((to_bit(at_target[0], 0, events), Trusted::Agreement));
    }

    let z = binary_search_disagreement(&mut SessionPoints(&sessions[0]), &mut SessionPoints(&sessions[1]), n, rng)?;
    events.push(Event::Disagreement { z: z.to_string() });
    let z_point: Vec<Fe> = z.bits().iter().map(|&b| inst.field().from_bool(b)).collect();
    let mut at_z = None;
    for attempt in 0..params.self_correct_retries.max(1) {
        let v0 = self_correct(&mut SessionPoints(&sessions[0]), &z_point, rng)?;
        let v1 = self_correct(&mut SessionPoints(&sessions[1]), &z_point, rng)?;
        if v0 != v1 {
            at_z = Some([v0, v1]);
            break;
        }
        events.push(Event::TieAtDisagreement { retries: attempt + 1 });
    }
    let Some(at_z) = at_z else {
        return Ok((decision(0)?, Trusted::NoHonestDetected));
    };
    events.push(Event::SelfCorrected { at: z.to_string(), values: at_z });

    let claimant = usize::from(at_z[1].value() > at_z[0].value());
    events.push(Event::Claimant { oracle: claimant });
    let arith = arithmetize(inst.phi());
    let mut accepted = true;
    for kind in [ConstraintKind::G1, ConstraintKind::G2] {
        let mut f = SessionPoints(&sessions[claimant]);
        let mut prover = SessionProver(&sessions[claimant]);
        let mut c = ConstraintPoly::new(kind, inst, &arith, &mut f);
        let verdict = sumcheck_verify(&mut c, &mut prover, rng)?;
        events.push(Event::Sumcheck {
            oracle: claimant,
            kind,
            accepted: verdict.accepted,
            failure: verdict.failure,
            failed_round: verdict.failed_round,
        });
        if !verdict.accepted {
            accepted = false;
            break;
        }
    }
    let trusted = if accepted { claimant } else { 1 - claimant };
    Ok((to_bit(at_target[trusted], trusted, events), Trusted::slot(trusted)))
}

/// A decision oracle over queries of type `Q`.
pub trait DecisionOracle<Q> {
    fn decide(&mut self, q: &Q) -> Result<bool>;
}

impl<Q, T: DecisionOracle<Q> + ?Sized> DecisionOracle<Q> for &mut T {
    fn decide(&mut self, q: &Q) -> Result<bool> {
        (**self).decide(q)
    }
}

impl<Q, T: DecisionOracle<Q> + ?Sized> DecisionOracle<Q> for Box<T> {
    fn decide(&mut self, q: &Q) -> Result<bool> {
        (**self).decide(q)
    }
}

/// Adapts a closure into a [`DecisionOracle`].
pub struct FnDecider<F>(pub F);

impl<Q, F: FnMut(&Q) -> Result<bool>> DecisionOracle<Q> for FnDecider<F> {
    fn decide(&mut self, q: &Q) -> Result<bool> {
        (self.0)(q)
    }
}

/// Records every query passed through to the wrapped oracle.
pub struct Recording<Q, O> {
    pub inner: O,
    pub queries: Vec<Q>,
}

impl<Q, O> Recording<Q, O> {
    pub fn new(inner: O) -> Self {
        Self { inner, queries: Vec::new() }
    }
}

impl<Q: Clone, O: DecisionOracle<Q>> DecisionOracle<Q> for Recording<Q, O> {
    fn decide(&mut self, q: &Q) -> Result<bool> {
        self.queries.push(q.clone());
        self.inner.decide(q)
    }
}

/// "Is bit `j` of the lexicographically largest satisfying assignment of
/// `phi` equal to 1?" (all zeros when `phi` is unsatisfiable).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LexmaxQuery {
    pub phi: Formula,
    pub j: usize,
}

/// The honest oracle for [`LexmaxQuery`].
#[derive(Default)]
pub struct LexmaxOracle {
    cache: std::collections::HashMap<Formula, Assignment>,
}

impl DecisionOracle<LexmaxQuery> for LexmaxOracle {
    fn decide(&mut self, q: &LexmaxQuery) -> Result<bool> {
        if q.j >= q.phi.num_vars() {
            return Err(arity(format!("bit {} of a {}-variable assignment", q.j, q.phi.num_vars())));
        }
        if !self.cache.contains_key(&q.phi) {
            self.cache.insert(q.phi.clone(), lexmax_sat(&q.phi)?);
        }
        Ok(self.cache[&q.phi].get(q.j))
    }
}

/// Every query the nonadaptive selector makes on `(phi, k)`, fixed before
/// any answer is seen.
pub fn lexmax_query_set(phi: &Formula, _k: usize) -> Vec<LexmaxQuery> {
    (0..phi.num_vars()).map(|j| LexmaxQuery { phi: phi.clone(), j }).collect()
}

/// Decides bit `k` of the largest satisfying assignment of `phi`. Both
/// oracles reveal their whole claimed assignment; if they disagree at `k`,
/// the larger claim is believed iff it satisfies `phi`.
pub fn select_nonadaptive_lexmax(
    phi: &Formula,
    k: usize,
    a0: &mut dyn DecisionOracle<LexmaxQuery>,
    a1: &mut dyn DecisionOracle<LexmaxQuery>,
) -> Result<SelectorOutcome> {
    if k >= phi.num_vars() {
        return Err(arity(format!("bit {k} of a {}-variable assignment", phi.num_vars())));
    }
    let queries = lexmax_query_set(phi, k);
    let mut claims = [Vec::new(), Vec::new()];
    for q in &queries {
        claims[0].push(a0.decide(q)?);
        claims[1].push(a1.decide(q)?);
    }
    let claims = claims.map(Assignment::new);
    let counts = QueryCounts {
        decision: queries.len() as u64,
        ..QueryCounts::default()
    };
    let mut events = vec![Event::Claims { claims: [claims[0].to_string(), claims[1].to_string()] }];
    let (answer, trusted) = if claims[0].get(k) == claims[1].get(k) {
        (claims[0].get(k), Trusted::Agreement)
    } else {
        let larger = usize::from(claims[1] > claims[0]);
        let satisfied = phi.eval(&claims[larger])?;
        events.push(Event::FormulaCheck { oracle: larger, satisfied });
        let trusted = if satisfied { larger } else { 1 - larger };
        (claims[trusted].get(k), Trusted::slot(trusted))
    };
    Ok(SelectorOutcome {
        answer,
        trusted,
        diagnostics: events,
        queries: vec![counts; 2],
    })
}

/// A downward self-reduction: decides membership of `x` given a membership
/// oracle for strictly smaller inputs.
pub trait DownwardSelfReduction {
    type Input: Clone + PartialEq + Debug;

    fn size(&self, x: &Self::Input) -> usize;

    fn evaluate(&self, x: &Self::Input, ask: &mut dyn FnMut(&Self::Input) -> Result<bool>) -> Result<bool>;
}

/// SAT by restriction of the first variable:
/// `phi` is satisfiable iff `phi|x0=0` or `phi|x0=1` is.
pub struct SatRestriction;

impl DownwardSelfReduction for SatRestriction {
    type Input = Formula;

    fn size(&self, x: &Formula) -> usize {
        x.size()
    }

    fn evaluate(&self, x: &Formula, ask: &mut dyn FnMut(&Formula) -> Result<bool>) -> Result<bool> {
        if x.num_vars() == 0 {
            return x.eval_bits(&[]);
        }
        Ok(ask(&x.restrict(0, false)?)? || ask(&x.restrict(0, true)?)?)
    }
}

/// Runs `dsr` on `x` against `oracle`, enforcing that every query shrinks.
/// Returns the result and the queries asked, with answers, in order.
fn run_dsr<D: DownwardSelfReduction>(
    dsr: &D,
    x: &D::Input,
    oracle: &mut dyn DecisionOracle<D::Input>,
) -> Result<(bool, Vec<(D::Input, bool)>)> {
    let input_size = dsr.size(x);
    let mut log = Vec::new();
    let mut ask = |q: &D::Input| -> Result<bool> {
        let size = dsr.size(q);
        if size >= input_size {
            return Err(Error::SelfReductionViolation { query: size, input: input_size });
        }
        let a = oracle.decide(q)?;
        log.push((q.clone(), a));
        Ok(a)
    };
    let v = dsr.evaluate(x, &mut ask)?;
    Ok((v, log))
}

/// The deterministic selector for a downward self-reducible language. Keeps
/// an input `y` on which the oracles disagree and walks it down until the
/// reduction exposes one of them.
pub fn select_det_dsr<D: DownwardSelfReduction>(
    dsr: &D,
    x: &D::Input,
    a0: &mut dyn DecisionOracle<D::Input>,
    a1: &mut dyn DecisionOracle<D::Input>,
) -> Result<SelectorOutcome> {
    let mut counts = [QueryCounts::default(); 2];
    let mut events = Vec::new();
    let x0 = a0.decide(x)?;
    let x1 = a1.decide(x)?;
    counts[0].decision += 1;
    counts[1].decision += 1;
    if x0 == x1 {
        return Ok(SelectorOutcome {
            answer: x0,
            trusted: Trusted::Agreement,
            diagnostics: events,
            queries: counts.to_vec(),
        });
    }
    let mut y = x.clone();
    let mut y_answers = [x0, x1];
    loop {
        events.push(Event::DsrStep { size: dsr.size(&y) });
        let (b0, log0) = run_dsr(dsr, &y, a0)?;
        counts[0].decision += log0.len() as u64;
        let (b1, log1) = run_dsr(dsr, &y, a1)?;
        counts[1].decision += log1.len() as u64;
        if b0 == b1 {
            let trusted = usize::from(y_answers[1] == b0);
            let answer = if trusted == 0 { x0 } else { x1 };
            return Ok(SelectorOutcome {
                answer,
                trusted: Trusted::slot(trusted),
                diagnostics: events,
                queries: counts.to_vec(),
            });
        }
        // The two runs coincide until the first query answered differently.
        let mut next = None;
        for (q, ans0) in log0 {
            let ans1 = a1.decide(&q)?;
            counts[1].decision += 1;
            if ans0 != ans1 {
                next = Some((q, [ans0, ans1]));
                break;
            }
        }
        let Some((q, answers)) = next else {
            return Err(Error::OracleFailure("reduction runs differ without a differing query".into()));
        };
        y = q;
        y_answers = answers;
    }
}

/// An instance checker for a language over `X`: with an honest oracle it
/// accepts w.h.p.; if the oracle is wrong at `x` it rejects w.h.p.
pub trait InstanceChecker<X> {
    fn check(&mut self, x: &X, oracle: &mut dyn DecisionOracle<X>, rng: &mut Rng) -> Result<bool>;
}

/// Trust `a0` iff the checker accepts it on `x`.
pub fn select_from_checker<X>(
    checker: &mut dyn InstanceChecker<X>,
    x: &X,
    a0: &mut dyn DecisionOracle<X>,
    a1: &mut dyn DecisionOracle<X>,
    rng: &mut Rng,
) -> Result<SelectorOutcome> {
    let mut asked = 0u64;
    let mut counted = FnDecider(|q: &X| {
        asked += 1;
        a0.decide(q)
    });
    let accepted = checker.check(x, &mut counted, rng)?;
    let mut counts = [QueryCounts::default(); 2];
    counts[0].decision = asked;
    let (answer, trusted) = if accepted {
        counts[0].decision += 1;
        (a0.decide(x)?, Trusted::Oracle0)
    } else {
        counts[1].decision += 1;
        (a1.decide(x)?, Trusted::Oracle1)
    };
    Ok(SelectorOutcome {
        answer,
        trusted,
        diagnostics: vec![Event::CheckerVerdict { accepted }],
        queries: counts.to_vec(),
    })
}

fn pair_mut<T>(items: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert!(i != j);
    if i < j {
        let (a, b) = items.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = items.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

/// Identifies the answer among many oracles with at least one honest.
/// Oracles are split by their answer on the input; while both camps are
/// nonempty, one member of each duels under `duel` (which sees the
/// 0-camp oracle first) and the side the duel's answer contradicts loses
/// its duelist.
pub fn tournament<O>(
    oracles: &mut [O],
    mut answer_of: impl FnMut(&mut O) -> Result<bool>,
    mut duel: impl FnMut(&mut O, &mut O, &mut Rng) -> Result<SelectorOutcome>,
    rng: &mut Rng,
) -> Result<SelectorOutcome> {
    if oracles.is_empty() {
        return Err(arity("tournament needs at least one oracle"));
    }
    let mut counts = vec![QueryCounts::default(); oracles.len()];
    let mut camps: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, o) in oracles.iter_mut().enumerate() {
        camps[usize::from(answer_of(o)?)].push(i);
        counts[i].decision += 1;
    }
    let mut events = Vec::new();
    while !camps[0].is_empty() && !camps[1].is_empty() {
        let (j, k) = (camps[0][0], camps[1][0]);
        let (oj, ok) = pair_mut(oracles, j, k);
        let outcome = duel(oj, ok, rng)?;
        if let [qj, qk] = outcome.queries[..] {
            counts[j].add(&qj);
            counts[k].add(&qk);
        }
        // Answer 1 doubts the 0-camp duelist, answer 0 the 1-camp one.
        let (winner, loser) = if outcome.answer { (k, j) } else { (j, k) };
        camps[usize::from(!outcome.answer)].remove(0);
        events.push(Event::Duel { winner, loser });
    }
    let answer = !camps[1].is_empty();
    let survivor = camps[usize::from(answer)][0];
    Ok(SelectorOutcome {
        answer,
        trusted: Trusted::Index(survivor),
        diagnostics: events,
        queries: counts,
    })
}

/// Majority vote over `reps` runs, each with a fresh forked generator.
pub fn amplify(
    reps: usize,
    rng: &mut Rng,
    mut run: impl FnMut(&mut Rng) -> Result<SelectorOutcome>,
) -> Result<SelectorOutcome> {
    if reps % 2 == 0 {
        return Err(arity(format!("repetition count {reps} must be odd")));
    }
    let mut outcomes = Vec::with_capacity(reps);
    for _ in 0..reps {
        let mut child = rng.fork();
        outcomes.push(run(&mut child)?);
    }
    let ones = outcomes.iter().filter(|o| o.answer).count();
    let answer = 2 * ones > reps;
    let mut queries: Vec<QueryCounts> = Vec::new();
    for o in &outcomes {
        if queries.len() < o.queries.len() {
            queries.resize(o.queries.len(), QueryCounts::default());
        }
        for (acc, q) in queries.iter_mut().zip(&o.queries) {
            acc.add(q);
        }
    }
    let first = outcomes.into_iter().find(|o| o.answer == answer).expect("the majority is nonempty");
    let mut diagnostics = first.diagnostics;
    diagnostics.push(Event::Votes { ones, reps });
    Ok(SelectorOutcome {
        answer,
        trusted: first.trusted,
        diagnostics,
        queries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::{make_adversary, AdversaryKind, ConstantDecider, LieAt};
    use crate::boolean::{all_functions, is_satisfiable, Node};
    use crate::field::PrimeField;
    use crate::instance::{brute_force_v_phi, generate_instance, honest_oracle, AssignmentTable, InstanceTemplate};

    fn first_difference(a: &AssignmentTable, b: &AssignmentTable) -> Option<usize> {
        (0..a.values().len()).find(|&i| a.at(i) != b.at(i))
    }

    fn table(s: &str) -> AssignmentTable {
        AssignmentTable::new(s.chars().map(|c| c == '1').collect()).unwrap()
    }

    #[test]
    fn binary_search_examples() {
        let f = PrimeField::default();
        let mut rng = Rng::new(1);
        for (a, b, z) in [("0110", "0111", "11"), ("0110", "1110", "00"), ("00001100", "00000010", "100")] {
            let (ta, tb) = (table(a), table(b));
            let n = ta.dim();
            assert_eq!(first_difference(&ta, &tb), Some(usize::from_str_radix(z, 2).unwrap()));
            let mut ok = 0;
            for _ in 0..200 {
                let z_found = binary_search_disagreement(&mut ta.to_mle(f), &mut tb.to_mle(f), n, &mut rng).unwrap();
                ok += usize::from(z_found.to_string() == z);
            }
            assert_eq!(ok, 200, "{a} vs {b}");
        }
    }

    #[test]
    fn binary_search_matches_first_difference() {
        let f = PrimeField::default();
        let mut rng = Rng::new(2);
        for _ in 0..100 {
            let n = 1 + rng.below(4);
            let a = AssignmentTable::new((0..1 << n).map(|_| rng.bit()).collect()).unwrap();
            let b = AssignmentTable::new((0..1 << n).map(|_| rng.bit()).collect()).unwrap();
            let Some(i) = first_difference(&a, &b) else { continue };
            let z = binary_search_disagreement(&mut a.to_mle(f), &mut b.to_mle(f), n, &mut rng).unwrap();
            assert_eq!(z.to_index() as usize, i);
        }
    }

    fn suite(seed: u64) -> Vec<SuccinctInstance> {
        let mut rng = Rng::new(seed);
        (0..10)
            .map(|i| {
                generate_instance(InstanceTemplate::RandomClauses, i % 3, 1 + i % 3, PrimeField::default(), &mut rng)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn honest_pair_agrees() {
        let mut rng = Rng::new(3);
        for inst in suite(4) {
            let truth = brute_force_v_phi(&inst).unwrap().get(inst.b_in());
            let mut a0 = honest_oracle(&inst).unwrap();
            let mut a1 = honest_oracle(&inst).unwrap();
            let out = select_prob_expnp(&inst, &mut a0, &mut a1, &SelectorParams::default(), &mut rng).unwrap();
            assert_eq!((out.answer, out.trusted), (truth, Trusted::Agreement));
        }
    }

    #[test]
    fn prob_selector_against_each_adversary() {
        let mut rng = Rng::new(5);
        let params = SelectorParams::default();
        for inst in suite(6).into_iter().take(6) {
            let truth = brute_force_v_phi(&inst).unwrap();
            let expected = truth.get(inst.b_in());
            for kind in AdversaryKind::all() {
                for honest_slot in 0..2 {
                    let mut correct = 0;
                    let trials = 20;
                    for _ in 0..trials {
                        let mut honest = honest_oracle(&inst).unwrap();
                        let mut adv = make_adversary(kind, &inst, &mut rng).unwrap();
                        let out = if honest_slot == 0 {
                            select_prob_expnp(&inst, &mut honest, &mut adv, &params, &mut rng).unwrap()
                        } else {
                            select_prob_expnp(&inst, &mut adv, &mut honest, &params, &mut rng).unwrap()
                        };
                        correct += usize::from(out.answer == expected);
                    }
                    assert!(correct >= 18, "{kind} slot {honest_slot}: {correct}/{trials}");
                }
            }
        }
    }

    #[test]
    fn larger_claimant_is_sumchecked() {
        let mut rng = Rng::new(7);
        for inst in suite(8) {
            let mut honest = honest_oracle(&inst).unwrap();
            let mut adv = make_adversary(AdversaryKind::LargerNonSatisfying, &inst, &mut rng).unwrap();
            if adv.note().is_some() {
                continue;
            }
            let out = select_prob_expnp(&inst, &mut honest, &mut adv, &SelectorParams::default(), &mut rng).unwrap();
            if out.trusted == Trusted::Agreement {
                continue;
            }
            assert!(out.diagnostics.iter().any(|e| matches!(e, Event::Claimant { oracle: 1 })));
            assert!(out.diagnostics.iter().any(|e| matches!(e, Event::Sumcheck { accepted: false, .. })));
            assert_eq!(out.trusted, Trusted::Oracle0);
        }
    }

    #[test]
    fn queries_are_counted() {
        let inst = &suite(9)[0];
        let mut a0 = honest_oracle(inst).unwrap();
        let mut a1 = honest_oracle(inst).unwrap();
        let out = select_prob_expnp(inst, &mut a0, &mut a1, &SelectorParams::default(), &mut Rng::new(1)).unwrap();
        let reps = default_ml_reps(inst.n()) as u64;
        assert_eq!(out.queries[0].mle, 3 * reps + inst.n() as u64 + 1);
        assert_eq!(out.queries[0].sumcheck, 0);
    }

    fn lexmax_bit(phi: &Formula, k: usize) -> bool {
        lexmax_sat(phi).unwrap().get(k)
    }

    #[test]
    fn nonadaptive_examples() {
        let or = Formula::new(Node::Or(vec![Node::var(0), Node::var(1)]), 2).unwrap();
        let claim = |bits: &'static str| {
            let a: Assignment = bits.parse().unwrap();
            FnDecider(move |q: &LexmaxQuery| Ok(a.get(q.j)))
        };
        let out = select_nonadaptive_lexmax(&or, 1, &mut LexmaxOracle::default(), &mut claim("10")).unwrap();
        assert_eq!((out.answer, out.trusted), (true, Trusted::Oracle0));
        let and_not = Formula::new(Node::And(vec![Node::var(0), Node::not(Node::var(1))]), 2).unwrap();
        let out = select_nonadaptive_lexmax(&and_not, 1, &mut claim("11"), &mut LexmaxOracle::default()).unwrap();
        assert_eq!((out.answer, out.trusted), (false, Trusted::Oracle1));
        let out = select_nonadaptive_lexmax(&and_not, 0, &mut claim("10"), &mut LexmaxOracle::default()).unwrap();
        assert_eq!((out.answer, out.trusted), (true, Trusted::Agreement));
    }

    #[test]
    fn nonadaptive_exhaustive_small() {
        for n in 1..=2 {
            for phi in all_functions(n) {
                for k in 0..n {
                    for lie in 0..1u64 << n {
                        let a = Assignment::from_index(lie, n);
                        let mut adv = Recording::new(FnDecider(move |q: &LexmaxQuery| Ok(a.get(q.j))));
                        let mut honest = Recording::new(LexmaxOracle::default());
                        let out = select_nonadaptive_lexmax(&phi, k, &mut adv, &mut honest).unwrap();
                        assert_eq!(out.answer, lexmax_bit(&phi, k));
                        let allowed = lexmax_query_set(&phi, k);
                        assert!(adv.queries.iter().chain(&honest.queries).all(|q| allowed.contains(q)));
                    }
                }
            }
        }
    }

    fn sat_oracle() -> FnDecider<impl FnMut(&Formula) -> Result<bool>> {
        FnDecider(|phi: &Formula| is_satisfiable(phi))
    }

    #[test]
    fn dsr_examples() {
        let phi = Formula::new(Node::Or(vec![Node::var(0), Node::var(1)]), 2).unwrap();
        let out = select_det_dsr(&SatRestriction, &phi, &mut sat_oracle(), &mut ConstantDecider(false)).unwrap();
        assert_eq!((out.answer, out.trusted), (true, Trusted::Oracle0));
        let out = select_det_dsr(&SatRestriction, &phi, &mut sat_oracle(), &mut sat_oracle()).unwrap();
        assert_eq!(out.trusted, Trusted::Agreement);
        let mut sizes = out.diagnostics.iter().filter_map(|e| match e {
            Event::DsrStep { size } => Some(*size),
            _ => None,
        });
        assert!(sizes.next().is_none());
    }

    #[test]
    fn dsr_exhaustive_two_variables() {
        for phi in all_functions(2) {
            let truth = is_satisfiable(&phi).unwrap();
            let mut lies: Vec<Formula> = vec![phi.clone()];
            for b in [false, true] {
                let once = phi.restrict(0, b).unwrap();
                for c in [false, true] {
                    lies.push(once.restrict(0, c).unwrap());
                }
                lies.push(once);
            }
            let check = |out: SelectorOutcome| {
                assert_eq!(out.answer, truth, "{phi}");
                let sizes: Vec<usize> = out
                    .diagnostics
                    .iter()
                    .filter_map(|e| if let Event::DsrStep { size } = e { Some(*size) } else { None })
                    .collect();
                assert!(sizes.windows(2).all(|w| w[1] < w[0]));
            };
            for c in [false, true] {
                check(select_det_dsr(&SatRestriction, &phi, &mut sat_oracle(), &mut ConstantDecider(c)).unwrap());
                check(select_det_dsr(&SatRestriction, &phi, &mut ConstantDecider(c), &mut sat_oracle()).unwrap());
            }
            for at in lies {
                let mut liar = LieAt { at, truth: |q: &Formula| is_satisfiable(q) };
                check(select_det_dsr(&SatRestriction, &phi, &mut liar, &mut sat_oracle()).unwrap());
            }
        }
    }

    struct Grows;

    impl DownwardSelfReduction for Grows {
        type Input = u32;

        fn size(&self, x: &u32) -> usize {
            *x as usize
        }

        fn evaluate(&self, x: &u32, ask: &mut dyn FnMut(&u32) -> Result<bool>) -> Result<bool> {
            ask(&(x + 1))
        }
    }

    #[test]
    fn dsr_violation_reported() {
        let err = select_det_dsr(&Grows, &3, &mut ConstantDecider(true), &mut ConstantDecider(false)).unwrap_err();
        assert_eq!(err, Error::SelfReductionViolation { query: 4, input: 3 });
    }

    /// Compares the oracle with the truth and reports the comparison,
    /// flipped with probability `noise`.
    struct NoisyChecker {
        noise: f64,
    }

    impl InstanceChecker<Formula> for NoisyChecker {
        fn check(&mut self, x: &Formula, oracle: &mut dyn DecisionOracle<Formula>, rng: &mut Rng) -> Result<bool> {
            let right = oracle.decide(x)? == is_satisfiable(x)?;
            Ok(right ^ rng.chance(self.noise))
        }
    }

    #[test]
    fn checker_selector() {
        let mut rng = Rng::new(10);
        let phi = Formula::new(Node::And(vec![Node::var(0), Node::var(1)]), 2).unwrap();
        let mut checker = NoisyChecker { noise: 0.2 };
        let trials = 2000;
        let mut trust0 = 0;
        for _ in 0..trials {
            let out = select_from_checker(&mut checker, &phi, &mut sat_oracle(), &mut ConstantDecider(false), &mut rng).unwrap();
            trust0 += usize::from(out.trusted == Trusted::Oracle0);
        }
        assert!(trust0 as f64 / trials as f64 >= 2.0 / 3.0);
        let mut correct = 0;
        for _ in 0..trials {
            let out = select_from_checker(&mut checker, &phi, &mut ConstantDecider(false), &mut sat_oracle(), &mut rng).unwrap();
            correct += usize::from(out.answer);
        }
        assert!(correct as f64 / trials as f64 >= 2.0 / 3.0);
        // A dishonest oracle that is right at x makes either choice correct.
        let out = select_from_checker(&mut checker, &phi, &mut ConstantDecider(true), &mut sat_oracle(), &mut rng).unwrap();
        assert!(out.answer);
    }

    #[test]
    fn tournament_degenerate_cases() {
        let mut rng = Rng::new(11);
        let mut none: Vec<bool> = vec![];
        assert!(tournament(&mut none, |o| Ok(*o), |_, _, _| unreachable!(), &mut rng).is_err());
        let mut one = vec![true];
        let out = tournament(&mut one, |o| Ok(*o), |_, _, _| unreachable!(), &mut rng).unwrap();
        assert_eq!((out.answer, out.trusted), (true, Trusted::Index(0)));
    }

    #[test]
    fn tournament_with_perfect_duels() {
        // Oracles are claimed bits; the truth is 1 and oracle 5 is honest.
        let mut rng = Rng::new(12);
        let mut oracles = vec![false, false, true, false, false, true, false, false];
        let duel = |a: &mut bool, b: &mut bool, _: &mut Rng| {
            assert!(!*a && *b);
            Ok(SelectorOutcome { answer: true, trusted: Trusted::Oracle1, diagnostics: vec![], queries: vec![] })
        };
        let out = tournament(&mut oracles, |o| Ok(*o), duel, &mut rng).unwrap();
        assert!(out.answer);
        assert_eq!(out.diagnostics.len(), 6);
    }

    fn binomial_tail_failure(p: f64, reps: usize) -> f64 {
        // P[at most reps/2 successes] for Binomial(reps, p).
        let mut total = 0.0;
        for k in 0..=reps / 2 {
            let mut c = 1.0;
            for i in 0..k {
                c *= (reps - i) as f64 / (i + 1) as f64;
            }
            total += c * p.powi(k as i32) * (1.0 - p).powi((reps - k) as i32);
        }
        total
    }

    #[test]
    fn amplification() {
        let mut rng = Rng::new(13);
        assert!(amplify(2, &mut rng, |_| unreachable!()).is_err());
        let coin = |r: &mut Rng| {
            Ok(SelectorOutcome {
                answer: r.chance(2.0 / 3.0),
                trusted: Trusted::Oracle0,
                diagnostics: vec![],
                queries: vec![QueryCounts { decision: 1, ..Default::default() }],
            })
        };
        // Exact tails: 15 votes fail about 8.8% of the time, 25 votes under 5%.
        let bound = binomial_tail_failure(2.0 / 3.0, 15);
        assert!((bound - 0.0882).abs() < 1e-3);
        assert!(binomial_tail_failure(2.0 / 3.0, 25) < 0.05);
        let trials = 4000;
        let failures = (0..trials).filter(|_| !amplify(15, &mut rng, coin).unwrap().answer).count();
        let rate = failures as f64 / trials as f64;
        assert!((rate - bound).abs() < 0.015, "rate {rate} vs {bound}");
        let out = amplify(15, &mut rng, coin).unwrap();
        assert_eq!(out.queries[0].decision, 15);
        let det = amplify(5, &mut rng, |_| {
            Ok(SelectorOutcome { answer: false, trusted: Trusted::Agreement, diagnostics: vec![], queries: vec![] })
        })
        .unwrap();
        assert!(!det.answer);
    }

    #[test]
    fn amplified_duels_keep_honest_alive() {
        let mut rng = Rng::new(14);
        let inst = &suite(15)[4];
        let truth = brute_force_v_phi(inst).unwrap().get(inst.b_in());
        let kinds = AdversaryKind::all();
        let params = SelectorParams::default();
        let mut oracles: Vec<Box<dyn Oracle>> = vec![Box::new(honest_oracle(inst).unwrap())];
        for k in kinds.iter().take(7) {
            oracles.push(Box::new(make_adversary(*k, inst, &mut rng).unwrap()));
        }
        let answer_of = |o: &mut Box<dyn Oracle>| Session::new(o.as_mut(), inst).decision_bit(inst.b_in());
        let duel = |a: &mut Box<dyn Oracle>, b: &mut Box<dyn Oracle>, r: &mut Rng| {
            amplify(3, r, |rr| select_prob_expnp(inst, a.as_mut(), b.as_mut(), &params, rr))
        };
        let out = tournament(&mut oracles, answer_of, duel, &mut rng).unwrap();
        assert_eq!(out.answer, truth);
    }
}
