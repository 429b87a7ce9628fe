//! Monte-Carlo experiment runner: success rates of the selectors against
//! the adversary suite, the advice-removal demonstration, and the named
//! acceptance presets.

pub mod advice;
pub mod criteria;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversaries::{make_adversary_with_truth, AdversaryKind};
use crate::error::{Error, Result};
use crate::field::{PrimeField, Rng};
use crate::instance::{
    brute_force_v_phi, eval_f_phi, generate_instance, satisfying_tables, AssignmentTable, InstanceFile, InstanceTemplate,
    QueryCounts, SuccinctInstance, TableOracle,
};
use crate::selectors::{failure_budget, select_prob_expnp, FailureBudget, SelectorParams, BUDGET_DELTA};

pub use advice::{demo_advice_removal, AdviceDemoConfig, AdviceReport};
pub use criteria::{run_preset, CriterionResult, PRESETS};

/// Success probability every selector must reach.
pub const SELECTOR_THRESHOLD: f64 = 2.0 / 3.0;

/// Wilson score interval at 95% confidence.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * ((phat * (1.0 - phat) + z * z / (4.0 * n)) / n).sqrt() / denom;
    // The bounds at 0 and n are exact; avoid rounding just short of them.
    let lower = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let upper = if successes >= trials { 1.0 } else { (centre + half).min(1.0) };
    (lower, upper)
}

/// The opponent placed against the honest oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Opponent {
    Honest,
    Adversary(AdversaryKind),
}

impl fmt::Display for Opponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Opponent::Honest => f.write_str("honest"),
            Opponent::Adversary(k) => k.fmt(f),
        }
    }
}

impl FromStr for Opponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "honest" {
            Ok(Opponent::Honest)
        } else {
            Ok(Opponent::Adversary(s.parse()?))
        }
    }
}

impl Serialize for Opponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Opponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Where the instances of a run come from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    /// `{"suite": "standard"}`
    Suite { suite: String },
    /// `{"template": "random-clauses", "m": 1, "n": 2, "seed": 7}`
    Generated {
        template: InstanceTemplate,
        m: usize,
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        p: Option<u64>,
    },
    /// An instance file inline.
    Inline(InstanceFile),
}

impl InstanceSource {
    pub fn resolve(&self) -> Result<Vec<SuccinctInstance>> {
        match self {
            InstanceSource::Suite { suite } if suite == "standard" => Ok(standard_suite()),
            InstanceSource::Suite { suite } => Err(Error::Config(format!("unknown suite '{suite}'"))),
            InstanceSource::Generated { template, m, n, seed, p } => {
                let field = match p {
                    Some(p) => PrimeField::new(*p)?,
                    None => PrimeField::default(),
                };
                Ok(vec![generate_instance(*template, *m, *n, field, &mut Rng::new(*seed))?])
            }
            InstanceSource::Inline(file) => {
                let json = serde_json::to_string(file).map_err(|e| Error::Config(e.to_string()))?;
                Ok(vec![SuccinctInstance::from_json(&json)?])
            }
        }
    }
}

fn default_trials() -> u64 {
    200
}

fn default_slots() -> Vec<usize> {
    vec![0, 1]
}

fn default_opponents() -> Vec<Opponent> {
    std::iter::once(Opponent::Honest)
        .chain(AdversaryKind::all().into_iter().map(Opponent::Adversary))
        .collect()
}

fn default_instances() -> Vec<InstanceSource> {
    vec![InstanceSource::Suite { suite: "standard".into() }]
}

fn default_threshold() -> f64 {
    SELECTOR_THRESHOLD
}

/// Configuration of [`run_trials`]; every field has a default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_instances")]
    pub instances: Vec<InstanceSource>,
    #[serde(default = "default_opponents")]
    pub opponents: Vec<Opponent>,
    #[serde(default = "default_slots")]
    pub honest_slots: Vec<usize>,
    #[serde(default)]
    pub ml_test_reps: Option<usize>,
    #[serde(default = "default_retries")]
    pub self_correct_retries: usize,
    /// Per-cell Wilson lower bound required to pass.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Records wall time per cell. Off by default so that reports are a
    /// deterministic function of the configuration.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Runs trials on the rayon pool; results are identical either way.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_retries() -> usize {
    3
}

fn default_parallel() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.honest_slots.is_empty() || self.honest_slots.iter().any(|&s| s > 1) {
            return Err(Error::Config("honest_slots must be a nonempty subset of {0, 1}".into()));
        }
        if self.opponents.is_empty() {
            return Err(Error::Config("no opponents configured".into()));
        }
        Ok(())
    }

    fn params(&self) -> SelectorParams {
        SelectorParams {
            ml_test_reps: self.ml_test_reps,
            self_correct_retries: self.self_correct_retries,
            amplification_reps: 1,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MeanQueries {
    pub decision: f64,
    pub mle: f64,
    pub sumcheck: f64,
}

/// One (instance, opponent, honest slot) cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub instance: usize,
    pub m: usize,
    pub n: usize,
    pub opponent: Opponent,
    pub honest_slot: usize,
    pub selector: &'static str,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
    /// Mean queries per trial, summed over both oracles.
    pub mean_queries: MeanQueries,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialSummary {
    pub cells: usize,
    pub trials: u64,
    pub mean_rate: f64,
    pub min_wilson_lower: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialReport {
    pub config: RunConfig,
    pub rows: Vec<TrialRow>,
    /// Failure-probability slack terms per instance.
    pub budget: Vec<FailureBudget>,
    pub summary: TrialSummary,
}

impl TrialReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }
}

struct TrialResult {
    success: bool,
    queries: QueryCounts,
    wall_ms: f64,
    note: Option<String>,
}

fn run_one(
    inst: &SuccinctInstance,
    honest: &TableOracle,
    truth: &AssignmentTable,
    opponent: Opponent,
    honest_slot: usize,
    params: &SelectorParams,
    rng: &mut Rng,
) -> Result<TrialResult> {
    let start = Instant::now();
    let mut h = honest.clone();
    let mut note = None;
    let outcome = match opponent {
        Opponent::Honest => {
            let mut other = honest.clone();
            select_prob_expnp(inst, &mut h, &mut other, params, rng)?
        }
        Opponent::Adversary(kind) => {
            let mut adv = make_adversary_with_truth(kind, inst, truth, rng)?;
            note = adv.note().map(str::to_string);
            if honest_slot == 0 {
                select_prob_expnp(inst, &mut h, &mut adv, params, rng)?
            } else {
                select_prob_expnp(inst, &mut adv, &mut h, params, rng)?
            }
        }
    };
    let mut queries = QueryCounts::default();
    for q in &outcome.queries {
        queries.add(q);
    }
    Ok(TrialResult {
        success: outcome.answer == truth.get(inst.b_in()),
        queries,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        note,
    })
}

/// Runs every configured cell for `config.trials` trials. Trial `i` of
/// every cell uses the generator seeded with `seed ^ i`.
pub fn run_trials(config: &RunConfig) -> Result<TrialReport> {
    config.validate()?;
    let params = config.params();
    let mut instances = Vec::new();
    for source in &config.instances {
        instances.extend(source.resolve()?);
    }
    let mut rows = Vec::new();
    let mut budget = Vec::new();
    for (index, inst) in instances.iter().enumerate() {
        inst.check_budget()?;
        let truth = brute_force_v_phi(inst)?;
        if !eval_f_phi(inst, &truth)? {
            return Err(Error::Config(format!("instance {index} has no satisfying table")));
        }
        let honest = TableOracle::new(inst, truth.clone())?;
        budget.push(failure_budget(inst, BUDGET_DELTA));
        for &opponent in &config.opponents {
            let slots: &[usize] = if opponent == Opponent::Honest { &[0] } else { &config.honest_slots };
            for &honest_slot in slots {
                let trial = |i: u64| {
                    let mut rng = Rng::substream(config.seed, i);
                    run_one(inst, &honest, &truth, opponent, honest_slot, &params, &mut rng)
                };
                let results: Vec<TrialResult> = if config.parallel {
                    (0..config.trials).into_par_iter().map(trial).collect::<Result<_>>()?
                } else {
                    (0..config.trials).map(trial).collect::<Result<_>>()?
                };
                rows.push(aggregate(index, inst, opponent, honest_slot, &results, config.record_wall_time));
            }
        }
    }
    let trials: u64 = rows.iter().map(|r| r.trials).sum();
    let mean_rate = if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.rate).sum::<f64>() / rows.len() as f64 };
    let min_wilson_lower = rows.iter().map(|r| r.wilson_lower).fold(1.0, f64::min);
    Ok(TrialReport {
        config: config.clone(),
        summary: TrialSummary {
            cells: rows.len(),
            trials,
            mean_rate,
            min_wilson_lower,
            passed: min_wilson_lower >= config.threshold,
        },
        rows,
        budget,
    })
}

fn aggregate(
    index: usize,
    inst: &SuccinctInstance,
    opponent: Opponent,
    honest_slot: usize,
    results: &[TrialResult],
    record_wall_time: bool,
) -> TrialRow {
    let trials = results.len() as u64;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let (wilson_lower, wilson_upper) = wilson(successes, trials);
    let mut q = QueryCounts::default();
    for r in results {
        q.add(&r.queries);
    }
    let per = |v: u64| v as f64 / trials as f64;
    let mut notes: Vec<String> = results.iter().filter_map(|r| r.note.clone()).collect();
    notes.sort();
    notes.dedup();
    TrialRow {
        instance: index,
        m: inst.m(),
        n: inst.n(),
        opponent,
        honest_slot,
        selector: "prob-expnp",
        trials,
        successes,
        rate: per(successes),
        wilson_lower,
        wilson_upper,
        mean_queries: MeanQueries {
            decision: per(q.decision),
            mle: per(q.mle),
            sumcheck: per(q.sumcheck),
        },
        mean_wall_ms: record_wall_time.then(|| results.iter().map(|r| r.wall_ms).sum::<f64>() / trials as f64),
        notes,
    }
}

/// Shapes of the standard suite: `(template, m, n)`.
const SUITE_SHAPES: [(InstanceTemplate, usize, usize); 12] = [
    (InstanceTemplate::LastInput, 1, 1),
    (InstanceTemplate::NotFirstX, 0, 2),
    (InstanceTemplate::ConstTrue, 1, 2),
    (InstanceTemplate::RandomClauses, 0, 1),
    (InstanceTemplate::RandomClauses, 2, 1),
    (InstanceTemplate::RandomClauses, 4, 1),
    (InstanceTemplate::RandomClauses, 0, 2),
    (InstanceTemplate::RandomClauses, 1, 2),
    (InstanceTemplate::RandomClauses, 2, 2),
    (InstanceTemplate::RandomClauses, 3, 2),
    (InstanceTemplate::RandomClauses, 0, 3),
    (InstanceTemplate::RandomClauses, 1, 3),
];

/// A fixed suite of twelve instances with `n <= 3` and `m <= 4`. Random
/// shapes are redrawn until the instance has at least two satisfying
/// tables and a maximum that is not all ones, so that every adversary
/// kind can be built as described; the answer bit alternates.
pub fn standard_suite() -> Vec<SuccinctInstance> {
    let field = PrimeField::default();
    let mut rng = Rng::new(0x5e1ec7);
    let mut out = Vec::with_capacity(SUITE_SHAPES.len());
    for (i, &(template, m, n)) in SUITE_SHAPES.iter().enumerate() {
        let want = i % 2 == 0;
        loop {
            let inst = generate_instance(template, m, n, field, &mut rng).expect("suite shapes are valid");
            if template != InstanceTemplate::RandomClauses {
                out.push(inst);
                break;
            }
            let sat = satisfying_tables(&inst).expect("suite is within budget");
            let ones = AssignmentTable::from_integer(u64::MAX, n);
            if sat.len() >= 2 && sat[0] != ones && sat[0].get(inst.b_in()) == want {
                out.push(inst);
                break;
            }
        }
    }
    out
}
