//! Arithmetization, the two constraint polynomials, and the sum-check
//! protocol that verifies a claimed assignment function vanishes them on
//! the Boolean cube.
//!
//! `G1(w) = 1 - phi~(w, f(b1), f(b2), f(b3))` over `l = m + 3n` variables
//! and `G2(b) = f(b) (1 - f(b))` over `l = n` variables. Vanishing on the
//! cube is reduced to the weighted sum
//! `sum_w g(w) prod_i (w_i t_i + 1 - w_i) = 0` for a random `t`, which the
//! verifier checks round by round.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::boolean::{Formula, Node};
use crate::error::{arity, Error, Result};
use crate::field::{interpolate, Fe, PrimeField, Rng, UniPoly};
use crate::instance::SuccinctInstance;
use crate::lowdegree::{hash_point, PointFunction};

/// Largest Boolean suffix the honest prover will sum over.
pub const MAX_SUFFIX_BITS: usize = 24;

/// Low-degree extension of a Boolean formula with per-slot degree bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithFormula {
    source: Formula,
    per_var_degree: Vec<usize>,
}

/// Not is `1 - e`, And is a product, Or is `1 - prod(1 - e_i)`.
pub fn arithmetize(phi: &Formula) -> ArithFormula {
    let mut per_var_degree = vec![0; phi.num_vars()];
    degrees(phi.root(), &mut per_var_degree);
    ArithFormula {
        source: phi.clone(),
        per_var_degree,
    }
}

fn degrees(node: &Node, out: &mut [usize]) {
    match node {
        Node::Var(i) => out[*i] += 1,
        Node::Const(_) => {}
        Node::Not(c) => degrees(c, out),
        Node::And(cs) | Node::Or(cs) => cs.iter().for_each(|c| degrees(c, out)),
    }
}

fn eval_node(node: &Node, x: &[Fe], one: Fe) -> Fe {
    match node {
        Node::Var(i) => x[*i],
        Node::Const(b) => {
            if *b {
                one
            } else {
                one - one
            }
        }
        Node::Not(c) => one - eval_node(c, x, one),
        Node::And(cs) => cs.iter().fold(one, |acc, c| acc * eval_node(c, x, one)),
        Node::Or(cs) => one - cs.iter().fold(one, |acc, c| acc * (one - eval_node(c, x, one))),
    }
}

impl ArithFormula {
    pub fn source(&self) -> &Formula {
        &self.source
    }

    pub fn per_var_degree(&self) -> &[usize] {
        &self.per_var_degree
    }

    pub fn num_vars(&self) -> usize {
        self.source.num_vars()
    }

    pub fn eval(&self, field: PrimeField, x: &[Fe]) -> Result<Fe> {
        if x.len() != self.num_vars() {
            return Err(arity(format!(
                "point of dimension {} for a formula in {} variables",
                x.len(),
                self.num_vars()
            )));
        }
        if x.iter().any(|v| v.field() != field) {
            let bad = x.iter().find(|v| v.field() != field).unwrap();
            return Err(Error::FieldMismatch(field.modulus(), bad.field().modulus()));
        }
        Ok(eval_node(self.source.root(), x, field.one()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    G1,
    G2,
}

/// Per-variable degree bounds of `g` for a constraint kind.
pub fn constraint_degree_bounds(kind: ConstraintKind, inst: &SuccinctInstance, arith: &ArithFormula) -> Vec<usize> {
    let (m, n) = (inst.m(), inst.n());
    let d = arith.per_var_degree();
    match kind {
        ConstraintKind::G1 => {
            let mut out = d[..m].to_vec();
            for k in 0..3 {
                for c in 0..n {
                    out.push(d[m + k * n + c] + d[inst.x_slot(k)]);
                }
            }
            out
        }
        ConstraintKind::G2 => vec![2; n],
    }
}

/// Per-variable degree bounds of `h_t = g * prod(w_i t_i + 1 - w_i)`.
pub fn ht_degree_bounds(kind: ConstraintKind, inst: &SuccinctInstance, arith: &ArithFormula) -> Vec<usize> {
    constraint_degree_bounds(kind, inst, arith).into_iter().map(|d| d + 1).collect()
}

/// A constraint polynomial with `f` standing in for the assignment's
/// multilinear extension. Values of `f` are cached per point.
pub struct ConstraintPoly<'a> {
    kind: ConstraintKind,
    inst: &'a SuccinctInstance,
    arith: &'a ArithFormula,
    f: &'a mut dyn PointFunction,
    degree_bounds: Vec<usize>,
    cache: HashMap<Vec<Fe>, Fe>,
}

impl<'a> ConstraintPoly<'a> {
    pub fn new(
        kind: ConstraintKind,
        inst: &'a SuccinctInstance,
        arith: &'a ArithFormula,
        f: &'a mut dyn PointFunction,
    ) -> Self {
        Self {
            kind,
            degree_bounds: constraint_degree_bounds(kind, inst, arith),
            inst,
            arith,
            f,
            cache: HashMap::new(),
        }
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn arity(&self) -> usize {
        self.inst.constraint_arity(self.kind)
    }

    pub fn field(&self) -> PrimeField {
        self.inst.field()
    }

    pub fn degree_bounds(&self) -> &[usize] {
        &self.degree_bounds
    }

    pub fn ht_degree_bounds(&self) -> Vec<usize> {
        self.degree_bounds.iter().map(|d| d + 1).collect()
    }

    fn f_at(&mut self, b: &[Fe]) -> Result<Fe> {
        if let Some(&v) = self.cache.get(b) {
            return Ok(v);
        }
        let v = self.f.eval(b)?;
        if v.field() != self.field() {
            return Err(Error::FieldMismatch(self.field().modulus(), v.field().modulus()));
        }
        self.cache.insert(b.to_vec(), v);
        Ok(v)
    }

    pub fn eval_constraint(&mut self, w: &[Fe]) -> Result<Fe> {
        let l = self.arity();
        if w.len() != l {
            return Err(arity(format!("point of dimension {} for a constraint in {l} variables", w.len())));
        }
        if self.f.dim() != self.inst.n() {
            return Err(arity(format!("assignment function of dimension {} for n = {}", self.f.dim(), self.inst.n())));
        }
        let one = self.field().one();
        match self.kind {
            ConstraintKind::G1 => {
                let (m, n) = (self.inst.m(), self.inst.n());
                let mut input = Vec::with_capacity(l + 3);
                input.extend_from_slice(w);
                for k in 0..3 {
                    let block = &w[m + k * n..m + (k + 1) * n];
                    input.push(self.f_at(block)?);
                }
                Ok(one - self.arith.eval(self.field(), &input)?)
            }
            ConstraintKind::G2 => {
                let v = self.f_at(w)?;
                Ok(v * (one - v))
            }
        }
    }

    pub fn ht_eval(&mut self, t: &[Fe], w: &[Fe]) -> Result<Fe> {
        if t.len() != w.len() {
            return Err(arity(format!("t has {} entries and w has {}", t.len(), w.len())));
        }
        let g = self.eval_constraint(w)?;
        Ok(g * eq_weight(t, w, self.field().one()))
    }
}

fn eq_weight(t: &[Fe], w: &[Fe], one: Fe) -> Fe {
    t.iter().zip(w).fold(one, |acc, (&ti, &wi)| acc * (wi * ti + one - wi))
}

/// The exact round-`round` polynomial
/// `g_i(x) = sum over Boolean suffixes of h_t(r_1..r_{i-1}, x, suffix)`,
/// interpolated from `bound + 1` sample points.
pub fn honest_round_poly(c: &mut ConstraintPoly<'_>, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
    c.inst.check_budget()?;
    let l = c.arity();
    if round == 0 || round > l {
        return Err(arity(format!("round {round} outside 1..={l}")));
    }
    if t.len() != l || r_prefix.len() != round - 1 {
        return Err(arity(format!(
            "round {round} of {l} needs |t| = {l} and {} challenges, got {} and {}",
            round - 1,
            t.len(),
            r_prefix.len()
        )));
    }
    let suffix = l - round;
    if suffix > MAX_SUFFIX_BITS {
        return Err(Error::InstanceTooLarge(format!("{suffix} summed variables")));
    }
    let field = c.field();
    let bound = c.degree_bounds[round - 1] + 1;
    let mut w = r_prefix.to_vec();
    w.resize(l, field.zero());
    let mut samples = Vec::with_capacity(bound + 1);
    for k in 0..=bound as u64 {
        let x = field.elem(k);
        w[round - 1] = x;
        let mut total = field.zero();
        for s in 0..1u64 << suffix {
            for j in 0..suffix {
                w[round + j] = field.from_bool((s >> (suffix - 1 - j)) & 1 == 1);
            }
            total += c.ht_eval(t, &w)?;
        }
        samples.push((x, total));
    }
    interpolate(&samples)
}

/// Source of round polynomials for the verifier.
pub trait RoundProver {
    fn round_poly(&mut self, kind: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly>;
}

impl<T: RoundProver + ?Sized> RoundProver for &mut T {
    fn round_poly(&mut self, kind: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
        (**self).round_poly(kind, t, r_prefix, round)
    }
}

/// Answers with the exact round polynomials of its own function.
pub struct HonestProver<F> {
    inst: SuccinctInstance,
    arith: ArithFormula,
    f: F,
}

impl<F: PointFunction> HonestProver<F> {
    pub fn new(inst: &SuccinctInstance, f: F) -> Self {
        Self {
            arith: arithmetize(inst.phi()),
            inst: inst.clone(),
            f,
        }
    }
}

impl<F: PointFunction> RoundProver for HonestProver<F> {
    fn round_poly(&mut self, kind: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
        let mut c = ConstraintPoly::new(kind, &self.inst, &self.arith, &mut self.f);
        honest_round_poly(&mut c, t, r_prefix, round)
    }
}

/// How a cheating prover spreads the discrepancy `delta` between the sum
/// it must match and the true sum of its round polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheatStrategy {
    /// Adds the constant `delta / 2`. The lie never closes, so the final
    /// test always rejects.
    ConstantSplit,
    /// Adds `delta * q(x) / (q(0) + q(1))` where `q` has `bound` pseudo-random
    /// roots. If the challenge hits a root the prover is back on the true
    /// polynomial and stays honest; this happens with probability about
    /// `bound / p` per round.
    RootSeeking,
}

/// Claims the total sum is 0 and then keeps every consistency test
/// satisfied, deviating from the true round polynomial as little as the
/// strategy allows.
pub struct CheatingProver<F> {
    honest: HonestProver<F>,
    strategy: CheatStrategy,
    key: u64,
    opening_lie: Option<Fe>,
    answers: HashMap<(ConstraintKind, Vec<Fe>, Vec<Fe>), UniPoly>,
}

impl<F: PointFunction> CheatingProver<F> {
    pub fn new(inst: &SuccinctInstance, f: F, strategy: CheatStrategy, key: u64) -> Self {
        Self {
            honest: HonestProver::new(inst, f),
            strategy,
            key,
            opening_lie: None,
            answers: HashMap::new(),
        }
    }

    /// Also perturbs round 1 by `c (2x - 1)`, which keeps the claimed total
    /// unchanged. Even a prover for a vanishing constraint then lies.
    pub fn with_opening_lie(mut self, c: Fe) -> Self {
        self.opening_lie = Some(c);
        self
    }

    fn error_poly(&self, delta: Fe, bound: usize, t: &[Fe], r_prefix: &[Fe]) -> Result<UniPoly> {
        let field = delta.field();
        match self.strategy {
            CheatStrategy::ConstantSplit => Ok(UniPoly::constant(delta * field.elem(2).inv()?)),
            CheatStrategy::RootSeeking => {
                let mut seed: Vec<Fe> = t.iter().chain(r_prefix).copied().collect();
                seed.push(field.elem(bound as u64));
                for salt in 0u64.. {
                    let mut q = UniPoly::constant(field.one());
                    for k in 0..bound as u64 {
                        let root = field.elem(hash_point(self.key ^ salt.wrapping_mul(0x9e37) ^ k, &seed));
                        q = q.mul_linear(root);
                    }
                    let norm = q.eval(field.zero()) + q.eval(field.one());
                    if !norm.is_zero() {
                        return Ok(q.scale(delta * norm.inv()?));
                    }
                }
                unreachable!()
            }
        }
    }
}

impl<F: PointFunction> RoundProver for CheatingProver<F> {
    fn round_poly(&mut self, kind: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
        let key = (kind, t.to_vec(), r_prefix.to_vec());
        if let Some(p) = self.answers.get(&key) {
            return Ok(p.clone());
        }
        if round == 0 || r_prefix.len() + 1 != round {
            return Err(arity(format!("round {round} with {} challenges", r_prefix.len())));
        }
        let truth = self.honest.round_poly(kind, t, r_prefix, round)?;
        let field = self.honest.inst.field();
        let target = if round == 1 {
            field.zero()
        } else {
            self.round_poly(kind, t, &r_prefix[..round - 2], round - 1)?.eval(r_prefix[round - 2])
        };
        let delta = target - (truth.eval(field.zero()) + truth.eval(field.one()));
        let mut answer = if delta.is_zero() {
            truth
        } else {
            let bound = ht_degree_bounds(kind, &self.honest.inst, &self.honest.arith)[round - 1];
            truth.add(&self.error_poly(delta, bound, t, r_prefix)?)
        };
        if let (1, Some(c)) = (round, self.opening_lie) {
            answer = answer.add(&UniPoly::new(vec![-c, c * field.elem(2)]));
        }
        self.answers.insert(key, answer.clone());
        Ok(answer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SumcheckFailure {
    ConsistencyTest,
    FinalTest,
    DegreeBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    pub coeffs: UniPoly,
    pub challenge: Fe,
}

/// Everything the verifier saw, in order. `d` is the largest per-round
/// degree bound enforced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transcript {
    pub kind: ConstraintKind,
    pub p: u64,
    pub l: usize,
    pub d: usize,
    pub degree_bounds: Vec<usize>,
    pub t: Vec<Fe>,
    pub rounds: Vec<RoundRecord>,
    pub final_claim: Option<Fe>,
    pub final_value: Option<Fe>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumcheckVerdict {
    pub accepted: bool,
    pub failed_round: Option<usize>,
    pub failure: Option<SumcheckFailure>,
    pub transcript: Transcript,
}

/// Runs the sum-check verifier for `c` against `prover`. `t` and all
/// challenges are drawn up front from `rng`. The final test evaluates
/// `h_t(r)` with the constraint's own (uncorrected) function.
pub fn sumcheck_verify(c: &mut ConstraintPoly<'_>, prover: &mut dyn RoundProver, rng: &mut Rng) -> Result<SumcheckVerdict> {
    let field = c.field();
    let l = c.arity();
    let bounds = c.ht_degree_bounds();
    let t = rng.point(field, l);
    let r = rng.point(field, l);
    let mut transcript = Transcript {
        kind: c.kind(),
        p: field.modulus(),
        l,
        d: bounds.iter().copied().max().unwrap_or(0),
        degree_bounds: bounds.clone(),
        t: t.clone(),
        rounds: Vec::with_capacity(l),
        final_claim: None,
        final_value: None,
    };
    let reject = |transcript: Transcript, round: usize, failure: SumcheckFailure| SumcheckVerdict {
        accepted: false,
        failed_round: Some(round),
        failure: Some(failure),
        transcript,
    };
    let mut claim = field.zero();
    for round in 1..=l {
        let g = prover.round_poly(c.kind(), &t, &r[..round - 1], round)?;
        if g.coeffs().iter().any(|v| v.field() != field) {
            return Err(Error::OracleFailure("round polynomial over the wrong field".into()));
        }
        transcript.rounds.push(RoundRecord {
            round,
            coeffs: g.clone(),
            challenge: r[round - 1],
        });
        if g.degree().unwrap_or(0) > bounds[round - 1] {
            return Ok(reject(transcript, round, SumcheckFailure::DegreeBound));
        }
        if g.eval(field.zero()) + g.eval(field.one()) != claim {
            return Ok(reject(transcript, round, SumcheckFailure::ConsistencyTest));
        }
        claim = g.eval(r[round - 1]);
    }
    let value = c.ht_eval(&t, &r)?;
    transcript.final_claim = Some(claim);
    transcript.final_value = Some(value);
    if claim != value {
        return Ok(reject(transcript, l, SumcheckFailure::FinalTest));
    }
    Ok(SumcheckVerdict {
        accepted: true,
        failed_round: None,
        failure: None,
        transcript,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::{all_functions, random_node};
    use crate::instance::{brute_force_v_phi, eval_f_phi, generate_instance, AssignmentTable, InstanceTemplate};
    use crate::lowdegree::{FnPoint, MleTable};

    fn gf(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn bits(v: u64, n: usize, f: PrimeField) -> Vec<Fe> {
        (0..n).map(|i| f.from_bool((v >> (n - 1 - i)) & 1 == 1)).collect()
    }

    #[test]
    fn small_arithmetizations() {
        let f = gf(101);
        let not = arithmetize(&Formula::new(Node::not(Node::var(0)), 1).unwrap());
        assert_eq!(not.eval(f, &[f.zero()]).unwrap(), f.one());
        assert_eq!(not.eval(f, &[f.one()]).unwrap(), f.zero());
        assert_eq!(not.eval(f, &[f.elem(5)]).unwrap(), f.elem_i64(-4));
        let and = arithmetize(&Formula::new(Node::And(vec![Node::var(0), Node::var(1)]), 2).unwrap());
        assert_eq!(and.per_var_degree(), &[1, 1]);
        assert_eq!(and.eval(f, &[f.elem(3), f.elem(7)]).unwrap(), f.elem(21));
        let or = arithmetize(&Formula::new(Node::Or(vec![Node::var(0), Node::var(1)]), 2).unwrap());
        // a + b - ab
        assert_eq!(or.eval(f, &[f.elem(3), f.elem(7)]).unwrap(), f.elem_i64(3 + 7 - 21));
        assert!(or.eval(f, &[f.one()]).is_err());
    }

    #[test]
    fn arithmetization_agrees_on_cube() {
        let f = PrimeField::default();
        let mut formulas: Vec<Formula> = (1..=3).flat_map(all_functions).collect();
        let mut rng = Rng::new(5);
        for _ in 0..300 {
            let slots = 1 + rng.below(4);
            formulas.push(Formula::new(random_node(&mut rng, slots, 4), slots).unwrap());
        }
        for phi in &formulas {
            let a = arithmetize(phi);
            let n = phi.num_vars();
            for v in 0..1u64 << n {
                let x = bits(v, n, f);
                let boolean: Vec<bool> = x.iter().map(|e| e.is_one()).collect();
                assert_eq!(a.eval(f, &x).unwrap(), f.from_bool(phi.eval_bits(&boolean).unwrap()), "{phi}");
            }
        }
    }

    #[test]
    fn degree_bounds_hold_along_axes() {
        // Interpolating d + 2 values along an axis must give degree <= d.
        let f = PrimeField::default();
        let mut rng = Rng::new(6);
        for _ in 0..200 {
            let slots = 1 + rng.below(5);
            let a = arithmetize(&Formula::new(random_node(&mut rng, slots, 4), slots).unwrap());
            let axis = rng.below(slots);
            let d = a.per_var_degree()[axis];
            let base = rng.point(f, slots);
            let pts: Vec<(Fe, Fe)> = (0..d as u64 + 2)
                .map(|k| {
                    let mut x = base.clone();
                    x[axis] = f.elem(k);
                    (f.elem(k), a.eval(f, &x).unwrap())
                })
                .collect();
            assert!(interpolate(&pts).unwrap().degree().unwrap_or(0) <= d);
        }
    }

    fn satisfiable_instances(count: usize, seed: u64, field: PrimeField) -> Vec<(SuccinctInstance, AssignmentTable)> {
        let mut rng = Rng::new(seed);
        let mut out = Vec::new();
        while out.len() < count {
            let n = 1 + rng.below(2);
            let m = rng.below(2);
            let inst = generate_instance(InstanceTemplate::RandomClauses, m, n, field, &mut rng).unwrap();
            let v = brute_force_v_phi(&inst).unwrap();
            if eval_f_phi(&inst, &v).unwrap() {
                out.push((inst, v));
            }
        }
        out
    }

    fn cube_points(l: usize, f: PrimeField) -> impl Iterator<Item = Vec<Fe>> {
        (0..1u64 << l).map(move |v| bits(v, l, f))
    }

    #[test]
    fn constraints_vanish_for_satisfying_tables() {
        let f = PrimeField::default();
        for (inst, v) in satisfiable_instances(20, 7, f) {
            let arith = arithmetize(inst.phi());
            let mut mle = v.to_mle(f);
            for kind in [ConstraintKind::G1, ConstraintKind::G2] {
                let mut c = ConstraintPoly::new(kind, &inst, &arith, &mut mle);
                for w in cube_points(inst.constraint_arity(kind), f) {
                    assert!(c.eval_constraint(&w).unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn g2_detects_non_boolean_values() {
        let f = PrimeField::default();
        let inst = generate_instance(InstanceTemplate::ConstTrue, 0, 2, f, &mut Rng::new(1)).unwrap();
        let arith = arithmetize(inst.phi());
        let mut two = FnPoint::new(f, 2, |_: &[Fe]| f.elem(2));
        let mut c = ConstraintPoly::new(ConstraintKind::G2, &inst, &arith, &mut two);
        assert_eq!(c.eval_constraint(&[f.zero(), f.one()]).unwrap(), f.elem_i64(-2));
        assert!(c.eval_constraint(&[f.zero()]).is_err());
    }

    #[test]
    fn g1_flags_violated_clause() {
        // phi = X(b3) with n = 1, m = 0: the table 10 violates it wherever b3 = 1.
        let f = PrimeField::default();
        let inst = generate_instance(InstanceTemplate::LastInput, 0, 1, f, &mut Rng::new(1)).unwrap();
        let arith = arithmetize(inst.phi());
        let table = AssignmentTable::new(vec![true, false]).unwrap();
        let mut mle = table.to_mle(f);
        let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
        for v in 0..8u64 {
            let w = bits(v, 3, f);
            let expected = if v & 1 == 1 { f.one() } else { f.zero() };
            assert_eq!(c.eval_constraint(&w).unwrap(), expected);
        }
    }

    #[test]
    fn weight_is_product_over_ones() {
        let f = PrimeField::default();
        let mut rng = Rng::new(8);
        for l in 0..=4 {
            let t = rng.point(f, l);
            for w in cube_points(l, f) {
                let direct = t.iter().zip(&w).filter(|(_, wi)| wi.is_one()).fold(f.one(), |acc, (&ti, _)| acc * ti);
                assert_eq!(eq_weight(&t, &w, f.one()), direct);
            }
        }
    }

    fn cube_sum(c: &mut ConstraintPoly<'_>, t: &[Fe]) -> Fe {
        let (l, field) = (c.arity(), c.field());
        cube_points(l, field).map(|w| c.ht_eval(t, &w).unwrap()).fold(field.zero(), |a, b| a + b)
    }

    #[test]
    fn weighted_sum_detects_nonvanishing() {
        let f = PrimeField::default();
        let mut rng = Rng::new(9);
        for (inst, v) in satisfiable_instances(5, 10, f) {
            let arith = arithmetize(inst.phi());
            let mut mle = v.to_mle(f);
            let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
            let t = rng.point(f, c.arity());
            assert!(cube_sum(&mut c, &t).is_zero());
        }
        // A non-satisfying table: the sum is nonzero for essentially every t.
        let inst = generate_instance(InstanceTemplate::LastInput, 1, 1, f, &mut rng).unwrap();
        let arith = arithmetize(inst.phi());
        let mut mle = AssignmentTable::new(vec![false, true]).unwrap().to_mle(f);
        let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
        let nonzero = (0..200).filter(|_| !cube_sum(&mut c, &rng.point(f, 4)).is_zero()).count();
        assert_eq!(nonzero, 200);
    }

    #[test]
    fn honest_rounds_match_direct_sums() {
        let f = PrimeField::default();
        let mut rng = Rng::new(11);
        for (inst, _) in satisfiable_instances(8, 12, f) {
            let arith = arithmetize(inst.phi());
            // A random table, so the constraint usually does not vanish.
            let bits: Vec<bool> = (0..1 << inst.n()).map(|_| rng.bit()).collect();
            let mut mle = MleTable::from_bits(f, &bits).unwrap();
            for kind in [ConstraintKind::G1, ConstraintKind::G2] {
                let mut c = ConstraintPoly::new(kind, &inst, &arith, &mut mle);
                let l = c.arity();
                let t = rng.point(f, l);
                let r = rng.point(f, l);
                let total = cube_sum(&mut c, &t);
                let mut prev = total;
                for round in 1..=l {
                    let g = honest_round_poly(&mut c, &t, &r[..round - 1], round).unwrap();
                    assert_eq!(g.eval(f.zero()) + g.eval(f.one()), prev);
                    assert!(g.degree().unwrap_or(0) <= c.ht_degree_bounds()[round - 1]);
                    prev = g.eval(r[round - 1]);
                    if round == l {
                        for _ in 0..5 {
                            let x = rng.elem(f);
                            let mut w = r[..l - 1].to_vec();
                            w.push(x);
                            assert_eq!(g.eval(x), c.ht_eval(&t, &w).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn honest_degrees_within_bounds_on_many_instances() {
        let f = PrimeField::default();
        let mut rng = Rng::new(13);
        for _ in 0..1000 {
            let inst = generate_instance(InstanceTemplate::RandomFormula, rng.below(2), 1, f, &mut rng).unwrap();
            let arith = arithmetize(inst.phi());
            let bits = [rng.bit(), rng.bit()];
            let mut mle = MleTable::from_bits(f, &bits).unwrap();
            let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
            let l = c.arity();
            let t = rng.point(f, l);
            let r = rng.point(f, l);
            let round = 1 + rng.below(l);
            let g = honest_round_poly(&mut c, &t, &r[..round - 1], round).unwrap();
            assert!(g.degree().unwrap_or(0) <= c.ht_degree_bounds()[round - 1]);
        }
    }

    #[test]
    fn round_argument_validation() {
        let f = PrimeField::default();
        let inst = generate_instance(InstanceTemplate::ConstTrue, 0, 1, f, &mut Rng::new(1)).unwrap();
        let arith = arithmetize(inst.phi());
        let mut mle = MleTable::from_bits(f, &[true, true]).unwrap();
        let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
        let t = vec![f.one(); 3];
        assert!(honest_round_poly(&mut c, &t, &[], 0).is_err());
        assert!(honest_round_poly(&mut c, &t, &[], 4).is_err());
        assert!(honest_round_poly(&mut c, &t, &[], 2).is_err());
        assert!(honest_round_poly(&mut c, &t[..2], &[], 1).is_err());
    }

    #[test]
    fn honest_prover_always_accepted() {
        let f = PrimeField::default();
        let mut rng = Rng::new(14);
        for (inst, v) in satisfiable_instances(10, 15, f) {
            let arith = arithmetize(inst.phi());
            for kind in [ConstraintKind::G1, ConstraintKind::G2] {
                let mut prover = HonestProver::new(&inst, v.to_mle(f));
                let mut mle = v.to_mle(f);
                let mut c = ConstraintPoly::new(kind, &inst, &arith, &mut mle);
                let verdict = sumcheck_verify(&mut c, &mut prover, &mut rng).unwrap();
                assert!(verdict.accepted, "{:?}", verdict.failure);
                assert_eq!(verdict.transcript.rounds.len(), inst.constraint_arity(kind));
            }
        }
    }

    fn violating_setup(field: PrimeField) -> (SuccinctInstance, MleTable) {
        let inst = generate_instance(InstanceTemplate::LastInput, 0, 1, field, &mut Rng::new(2)).unwrap();
        (inst, AssignmentTable::new(vec![true, false]).unwrap().to_mle(field))
    }

    #[test]
    fn cheating_provers_rejected() {
        let f = PrimeField::default();
        let (inst, table) = violating_setup(f);
        let arith = arithmetize(inst.phi());
        let mut rng = Rng::new(16);
        for strategy in [CheatStrategy::ConstantSplit, CheatStrategy::RootSeeking] {
            for trial in 0..200 {
                let mut prover = CheatingProver::new(&inst, table.clone(), strategy, trial);
                let mut mle = table.clone();
                let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
                let verdict = sumcheck_verify(&mut c, &mut prover, &mut rng).unwrap();
                assert!(!verdict.accepted);
                assert_eq!(verdict.failure, Some(SumcheckFailure::FinalTest));
            }
        }
    }

    #[test]
    fn root_seeking_sometimes_fools_tiny_fields() {
        let f = gf(101);
        let (inst, table) = violating_setup(f);
        let arith = arithmetize(inst.phi());
        let mut rng = Rng::new(17);
        let bounds = ht_degree_bounds(ConstraintKind::G1, &inst, &arith);
        let dl: usize = bounds.iter().sum();
        let trials = 2000;
        let mut accepted = 0;
        for trial in 0..trials {
            let mut prover = CheatingProver::new(&inst, table.clone(), CheatStrategy::RootSeeking, trial);
            let mut mle = table.clone();
            let mut c = ConstraintPoly::new(ConstraintKind::G1, &inst, &arith, &mut mle);
            accepted += usize::from(sumcheck_verify(&mut c, &mut prover, &mut rng).unwrap().accepted);
        }
        let rate = accepted as f64 / trials as f64;
        assert!(accepted > 0);
        assert!(rate <= 3.0 * dl as f64 / 101.0, "rate {rate}, dl {dl}");
    }

    struct TooHigh;

    impl RoundProver for TooHigh {
        fn round_poly(&mut self, _: ConstraintKind, _: &[Fe], _: &[Fe], _: usize) -> Result<UniPoly> {
            let f = PrimeField::default();
            Ok(UniPoly::new(vec![f.zero(); 40].into_iter().chain([f.one()]).collect()))
        }
    }

    #[test]
    fn over_degree_rejected_first_round() {
        let f = PrimeField::default();
        let (inst, mut table) = violating_setup(f);
        let arith = arithmetize(inst.phi());
        let mut c = ConstraintPoly::new(ConstraintKind::G2, &inst, &arith, &mut table);
        let v = sumcheck_verify(&mut c, &mut TooHigh, &mut Rng::new(1)).unwrap();
        assert_eq!((v.accepted, v.failed_round, v.failure), (false, Some(1), Some(SumcheckFailure::DegreeBound)));
        assert!(serde_json::to_string(&v.transcript).unwrap().contains("\"rounds\""));
    }
}
