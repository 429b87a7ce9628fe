//! Dishonest oracles. Each one answers every query kind, and each is
//! deterministic given its construction seed, so sessions stay consistent.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boolean::Assignment;
use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField, Rng, UniPoly};
use crate::instance::{
    brute_force_v_phi, satisfying_tables, AssignmentTable, Oracle, OracleAnswer, OracleQuery, SuccinctInstance,
};
use crate::lowdegree::{hash_point, FnPoint, MleTable, PointFunction};
use crate::selectors::DecisionOracle;
use crate::sumcheck::{CheatStrategy, CheatingProver, HonestProver, RoundProver};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "delta")]
pub enum AdversaryKind {
    /// The true table with the bit at `b_in` negated.
    FlipAtTarget,
    /// A satisfying table other than the maximum one.
    SmallerSatisfying,
    /// A lexicographically larger table; it cannot satisfy.
    LargerNonSatisfying,
    /// Extension values from a fixed pseudo-random function.
    NonMultilinear,
    /// The extension of the true table with the `b_in` entry set outside {0,1}.
    NonBoolean,
    /// The true extension, wrong on a `delta` fraction of points.
    SparseCorruption(f64),
    /// Honest except for a sum-check transcript that lies from round 1.
    CheatingProver,
    AlwaysZero,
    AlwaysOne,
}

impl AdversaryKind {
    /// Every kind, with `SparseCorruption` at `delta = 0.01`.
    pub fn all() -> Vec<AdversaryKind> {
        vec![
            AdversaryKind::FlipAtTarget,
            AdversaryKind::SmallerSatisfying,
            AdversaryKind::LargerNonSatisfying,
            AdversaryKind::NonMultilinear,
            AdversaryKind::NonBoolean,
            AdversaryKind::SparseCorruption(0.01),
            AdversaryKind::CheatingProver,
            AdversaryKind::AlwaysZero,
            AdversaryKind::AlwaysOne,
        ]
    }

    fn validate(&self) -> Result<()> {
        if let AdversaryKind::SparseCorruption(delta) = *self {
            if !(delta > 0.0 && delta <= 0.1) {
                return Err(Error::AdversaryConstruction(format!("corruption rate {delta} outside (0, 0.1]")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AdversaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            AdversaryKind::FlipAtTarget => "flip-at-target",
            AdversaryKind::SmallerSatisfying => "smaller-satisfying",
            AdversaryKind::LargerNonSatisfying => "larger-non-satisfying",
            AdversaryKind::NonMultilinear => "non-multilinear",
            AdversaryKind::NonBoolean => "non-boolean",
            AdversaryKind::SparseCorruption(d) => return write!(f, "sparse-corruption:{d}"),
            AdversaryKind::CheatingProver => "cheating-prover",
            AdversaryKind::AlwaysZero => "always-zero",
            AdversaryKind::AlwaysOne => "always-one",
        };
        f.write_str(name)
    }
}

impl FromStr for AdversaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "flip-at-target" => AdversaryKind::FlipAtTarget,
            "smaller-satisfying" => AdversaryKind::SmallerSatisfying,
            "larger-non-satisfying" => AdversaryKind::LargerNonSatisfying,
            "non-multilinear" => AdversaryKind::NonMultilinear,
            "non-boolean" => AdversaryKind::NonBoolean,
            "sparse-corruption" => AdversaryKind::SparseCorruption(0.01),
            "cheating-prover" => AdversaryKind::CheatingProver,
            "always-zero" => AdversaryKind::AlwaysZero,
            "always-one" => AdversaryKind::AlwaysOne,
            other => match other.strip_prefix("sparse-corruption:") {
                Some(d) => AdversaryKind::SparseCorruption(
                    d.parse().map_err(|_| Error::Parse(format!("bad corruption rate '{d}'")))?,
                ),
                None => return Err(Error::Parse(format!("unknown adversary '{other}'"))),
            },
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// The honest extension, replaced by pseudo-random values on a `delta`
/// fraction of points.
pub struct SparselyCorrupted {
    base: MleTable,
    delta: f64,
    key: u64,
}

impl SparselyCorrupted {
    pub fn new(base: MleTable, delta: f64, key: u64) -> Self {
        Self { base, delta, key }
    }

    pub fn is_corrupted(&self, x: &[Fe]) -> bool {
        (hash_point(self.key, x) as f64) < self.delta * 2f64.powi(64)
    }
}

impl PointFunction for SparselyCorrupted {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn field(&self) -> PrimeField {
        self.base.field()
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        let v = self.base.eval(x)?;
        if !self.is_corrupted(x) {
            return Ok(v);
        }
        let field = self.base.field();
        let noise = field.elem(hash_point(!self.key, x));
        Ok(if noise == v { v + field.one() } else { noise })
    }
}

/// A fixed pseudo-random function `F^n -> F`.
pub fn random_function(field: PrimeField, n: usize, key: u64) -> impl PointFunction {
    FnPoint::new(field, n, move |x: &[Fe]| field.elem(hash_point(key, x)))
}

/// A dishonest oracle for one instance.
pub struct Adversary {
    kind: AdversaryKind,
    note: Option<String>,
    decisions: AssignmentTable,
    points: Box<dyn PointFunction>,
    prover: Box<dyn RoundProver>,
}

impl Adversary {
    pub fn kind(&self) -> AdversaryKind {
        self.kind
    }

    /// Set when the requested behavior was impossible for this instance and
    /// a substitute was built.
    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// The decision table this oracle claims.
    pub fn claimed_table(&self) -> &AssignmentTable {
        &self.decisions
    }
}

impl Oracle for Adversary {
    fn answer(&mut self, query: &OracleQuery) -> Result<OracleAnswer> {
        match query {
            OracleQuery::DecisionBit(b) => {
                if b.len() != self.decisions.dim() {
                    return Err(crate::error::arity("decision index has the wrong width"));
                }
                Ok(OracleAnswer::Bit(self.decisions.get(b)))
            }
            OracleQuery::MlePoint(x) => Ok(OracleAnswer::Value(self.points.eval(x)?)),
            OracleQuery::SumcheckCoeffs { target, t, r_prefix, round } => {
                Ok(OracleAnswer::Poly(self.prover.round_poly(*target, t, r_prefix, *round)?))
            }
        }
    }
}

/// Builds the adversary, computing the true table by brute force.
pub fn make_adversary(kind: AdversaryKind, inst: &SuccinctInstance, rng: &mut Rng) -> Result<Adversary> {
    let truth = brute_force_v_phi(inst)?;
    make_adversary_with_truth(kind, inst, &truth, rng)
}

/// Builds the adversary given the true table `truth`.
pub fn make_adversary_with_truth(
    kind: AdversaryKind,
    inst: &SuccinctInstance,
    truth: &AssignmentTable,
    rng: &mut Rng,
) -> Result<Adversary> {
    kind.validate()?;
    inst.check_budget()?;
    let field = inst.field();
    let n = inst.n();
    let target = inst.b_in().to_index() as usize;
    let key = rng.next_u64();
    let flipped = {
        let mut t = truth.clone();
        t.set(target, !truth.at(target));
        t
    };
    // A claimant of `table`: consistent extension, and a sum-check that
    // lies only as much as it must.
    let claimant = |kind: AdversaryKind, table: AssignmentTable, note: Option<String>| -> Adversary {
        let mle = table.to_mle(field);
        Adversary {
            kind,
            note,
            prover: Box::new(CheatingProver::new(inst, mle.clone(), CheatStrategy::RootSeeking, key)),
            points: Box::new(mle),
            decisions: table,
        }
    };
    let adv = match kind {
        AdversaryKind::FlipAtTarget => claimant(kind, flipped, None),
        AdversaryKind::SmallerSatisfying => {
            let smaller: Vec<AssignmentTable> = satisfying_tables(inst)?.into_iter().filter(|t| t != truth).collect();
            let pick = pick_preferring_disagreement(&smaller, truth, target, rng);
            match pick {
                Some(t) => claimant(kind, t, None),
                None => claimant(kind, flipped, Some("fewer than two satisfying tables; flipping at b_in instead".into())),
            }
        }
        AdversaryKind::LargerNonSatisfying => {
            let start = table_integer(truth) + 1;
            let larger: Vec<AssignmentTable> =
                (start..1u64 << (1 << n)).map(|v| AssignmentTable::from_integer(v, n)).collect();
            match pick_preferring_disagreement(&larger, truth, target, rng) {
                Some(t) => claimant(kind, t, None),
                None => claimant(kind, flipped, Some("no larger table exists; flipping at b_in instead".into())),
            }
        }
        AdversaryKind::NonMultilinear => Adversary {
            kind,
            note: None,
            decisions: flipped,
            points: Box::new(random_function(field, n, key)),
            prover: Box::new(CheatingProver::new(inst, random_function(field, n, key), CheatStrategy::RootSeeking, key)),
        },
        AdversaryKind::NonBoolean => {
            let mut values: Vec<Fe> = truth.values().iter().map(|&b| field.from_bool(b)).collect();
            values[target] = field.elem(2 + rng.below(1 << 20) as u64);
            let mle = MleTable::new(values)?;
            let mut decisions = truth.clone();
            decisions.set(target, true);
            Adversary {
                kind,
                note: None,
                decisions,
                prover: Box::new(CheatingProver::new(inst, mle.clone(), CheatStrategy::RootSeeking, key)),
                points: Box::new(mle),
            }
        }
        AdversaryKind::SparseCorruption(delta) => {
            let mle = truth.to_mle(field);
            Adversary {
                kind,
                note: None,
                decisions: truth.clone(),
                prover: Box::new(HonestProver::new(inst, mle.clone())),
                points: Box::new(SparselyCorrupted::new(mle, delta, key)),
            }
        }
        AdversaryKind::CheatingProver => {
            let mle = truth.to_mle(field);
            let lie = rng.nonzero_elem(field);
            Adversary {
                kind,
                note: None,
                decisions: truth.clone(),
                prover: Box::new(
                    CheatingProver::new(inst, mle.clone(), CheatStrategy::RootSeeking, key).with_opening_lie(lie),
                ),
                points: Box::new(mle),
            }
        }
        AdversaryKind::AlwaysZero => claimant(kind, AssignmentTable::zeros(n), None),
        AdversaryKind::AlwaysOne => claimant(kind, AssignmentTable::from_integer(u64::MAX, n), None),
    };
    Ok(adv)
}

fn table_integer(t: &AssignmentTable) -> u64 {
    t.values().iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

fn pick_preferring_disagreement(
    candidates: &[AssignmentTable],
    truth: &AssignmentTable,
    target: usize,
    rng: &mut Rng,
) -> Option<AssignmentTable> {
    let disagreeing: Vec<&AssignmentTable> = candidates.iter().filter(|t| t.at(target) != truth.at(target)).collect();
    if !disagreeing.is_empty() {
        return Some(disagreeing[rng.below(disagreeing.len())].clone());
    }
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.below(candidates.len())].clone())
    }
}

/// Answers every decision query with the same bit.
#[derive(Clone, Copy, Debug)]
pub struct ConstantDecider(pub bool);

impl<Q> DecisionOracle<Q> for ConstantDecider {
    fn decide(&mut self, _: &Q) -> Result<bool> {
        Ok(self.0)
    }
}

/// Agrees with `truth` except at one query, where it answers the opposite.
pub struct LieAt<Q, F> {
    pub at: Q,
    pub truth: F,
}

impl<Q: PartialEq, F: FnMut(&Q) -> Result<bool>> DecisionOracle<Q> for LieAt<Q, F> {
    fn decide(&mut self, q: &Q) -> Result<bool> {
        let v = (self.truth)(q)?;
        Ok(if *q == self.at { !v } else { v })
    }
}

/// A claimed answer, for use in tests over decision bits.
pub fn claimed_bit(adv: &mut Adversary, b: &Assignment) -> Result<bool> {
    match adv.answer(&OracleQuery::DecisionBit(b.clone()))? {
        OracleAnswer::Bit(v) => Ok(v),
        _ => unreachable!("decision queries are answered with bits"),
    }
}

/// A round polynomial from any oracle, for tests and tools.
pub fn claimed_round_poly(
    oracle: &mut dyn Oracle,
    query: &OracleQuery,
) -> Result<UniPoly> {
    match oracle.answer(query)? {
        OracleAnswer::Poly(p) => Ok(p),
        other => Err(Error::OracleFailure(format!("expected a polynomial, got {other:?}"))),
    }
}
