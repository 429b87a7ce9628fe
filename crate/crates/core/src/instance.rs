//! The lexicographically-maximum oracle-3-satisfying-assignment problem.
//!
//! An instance is `(m, n, phi, b_in)` where `phi` has `m + 3n + 3` inputs
//! laid out as `(y, b1, b2, b3, X(b1), X(b2), X(b3))`. An assignment table
//! `X: {0,1}^n -> {0,1}` satisfies the instance when `phi` holds for every
//! `w = (y, b1, b2, b3)`. The answer is `V(b_in)` for the
//! lexicographically largest satisfying table `V` (all zeros if none).
//!
//! Oracles are queried through a typed interface: decision bits of the
//! table, values of its multilinear extension, and sum-check round
//! polynomials. Every query goes through a memoizing [`Session`] so that
//! repeated queries get identical answers.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boolean::{random_node, Assignment, Formula, Node};
use crate::error::{arity, Error, Result};
use crate::field::{Fe, PrimeField, Rng, UniPoly};
use crate::lowdegree::{MleTable, PointFunction};
use crate::sumcheck::{arithmetize, honest_round_poly, ArithFormula, ConstraintKind, ConstraintPoly, RoundProver};

/// Largest supported index width.
pub const MAX_N: usize = 4;
/// Largest supported `m + 3n`.
pub const MAX_CLAUSE_BITS: usize = 18;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccinctInstance {
    m: usize,
    n: usize,
    phi: Formula,
    b_in: Assignment,
    field: PrimeField,
}

impl SuccinctInstance {
    pub fn new(m: usize, n: usize, phi: Formula, b_in: Assignment, field: PrimeField) -> Result<Self> {
        if n == 0 {
            return Err(arity("index width n must be at least 1"));
        }
        if phi.num_vars() != m + 3 * n + 3 {
            return Err(arity(format!(
                "phi has {} variable slots, expected m + 3n + 3 = {}",
                phi.num_vars(),
                m + 3 * n + 3
            )));
        }
        if b_in.len() != n {
            return Err(arity(format!("b_in has {} bits, expected {n}", b_in.len())));
        }
        Ok(Self { m, n, phi, b_in, field })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> &Formula {
        &self.phi
    }

    pub fn b_in(&self) -> &Assignment {
        &self.b_in
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Same constraint, different queried index.
    pub fn with_b_in(&self, b_in: Assignment) -> Result<Self> {
        Self::new(self.m, self.n, self.phi.clone(), b_in, self.field)
    }

    /// Same constraint over a different field.
    pub fn with_field(&self, field: PrimeField) -> Self {
        Self { field, ..self.clone() }
    }

    /// Number of sum-check variables for a constraint kind.
    pub fn constraint_arity(&self, kind: ConstraintKind) -> usize {
        match kind {
            ConstraintKind::G1 => self.m + 3 * self.n,
            ConstraintKind::G2 => self.n,
        }
    }

    /// Slot of `X(b_k)` in `phi`, for `k` in `0..3`.
    pub fn x_slot(&self, k: usize) -> usize {
        self.m + 3 * self.n + k
    }

    pub fn check_budget(&self) -> Result<()> {
        if self.n > MAX_N || self.m + 3 * self.n > MAX_CLAUSE_BITS {
            return Err(Error::InstanceTooLarge(format!(
                "m = {}, n = {} exceeds n <= {MAX_N} and m + 3n <= {MAX_CLAUSE_BITS}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    pub fn b_in_point(&self) -> Vec<Fe> {
        self.b_in.bits().iter().map(|&b| self.field.from_bool(b)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }
}

/// On-disk form: `{"m", "n", "phi", "b_in": "bitstring", "p"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    pub phi: Node,
    pub b_in: String,
    pub p: u64,
}

impl From<&SuccinctInstance> for InstanceFile {
    fn from(inst: &SuccinctInstance) -> Self {
        Self {
            m: inst.m,
            n: inst.n,
            phi: inst.phi.root().clone(),
            b_in: inst.b_in.to_string(),
            p: inst.field.modulus(),
        }
    }
}

impl TryFrom<InstanceFile> for SuccinctInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        let phi = Formula::new(file.phi, file.m + 3 * file.n + 3)?;
        let b_in = file.b_in.parse()?;
        SuccinctInstance::new(file.m, file.n, phi, b_in, PrimeField::new(file.p)?)
    }
}

/// A table `X: {0,1}^n -> {0,1}`; the derived order is lexicographic with
/// index `0...0` most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AssignmentTable(Vec<bool>);

impl AssignmentTable {
    pub fn new(values: Vec<bool>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(arity(format!("table length {} is not a power of two", values.len())));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; 1 << n])
    }

    /// The table whose values, read as a `2^n`-bit big-endian integer,
    /// equal `v`.
    pub fn from_integer(v: u64, n: usize) -> Self {
        let len = 1usize << n;
        Self((0..len).map(|i| (v >> (len - 1 - i)) & 1 == 1).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn at(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn get(&self, b: &Assignment) -> bool {
        self.0[b.to_index() as usize]
    }

    pub fn set(&mut self, index: usize, v: bool) {
        self.0[index] = v;
    }

    pub fn to_mle(&self, field: PrimeField) -> MleTable {
        MleTable::from_bits(field, &self.0).expect("table length is a power of two")
    }
}

impl fmt::Display for AssignmentTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// Whether `x` satisfies every clause `phi(w, X(b1), X(b2), X(b3))`, by
/// direct enumeration of `w`.
pub fn eval_f_phi(inst: &SuccinctInstance, x: &AssignmentTable) -> Result<bool> {
    inst.check_budget()?;
    if x.dim() != inst.n {
        return Err(arity(format!("table of dimension {} for n = {}", x.dim(), inst.n)));
    }
    let (m, n) = (inst.m, inst.n);
    let w_bits = m + 3 * n;
    let mut input = vec![false; w_bits + 3];
    for w in 0..1u64 << w_bits {
        for (i, slot) in input.iter_mut().take(w_bits).enumerate() {
            *slot = (w >> (w_bits - 1 - i)) & 1 == 1;
        }
        for k in 0..3 {
            let block = (w >> (3 - 1 - k) * n) & ((1 << n) - 1);
            input[w_bits + k] = x.at(block as usize);
        }
        if !inst.phi.root().eval_bits(&input) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// For every index triple `(b1, b2, b3)`, the set of value triples
/// `(X(b1), X(b2), X(b3))` allowed for all `y`, as an 8-bit mask.
fn allowed_triples(inst: &SuccinctInstance) -> Vec<u8> {
    let (m, n) = (inst.m, inst.n);
    let w_bits = m + 3 * n;
    let mut masks = vec![0xffu8; 1 << (3 * n)];
    let mut input = vec![false; w_bits + 3];
    for w in 0..1u64 << w_bits {
        for (i, slot) in input.iter_mut().take(w_bits).enumerate() {
            *slot = (w >> (w_bits - 1 - i)) & 1 == 1;
        }
        let triple = (w & ((1 << (3 * n)) - 1)) as usize;
        for vals in 0..8u8 {
            if masks[triple] & (1 << vals) == 0 {
                continue;
            }
            for k in 0..3 {
                input[w_bits + k] = (vals >> (2 - k)) & 1 == 1;
            }
            if !inst.phi.root().eval_bits(&input) {
                masks[triple] &= !(1 << vals);
            }
        }
    }
    masks
}

fn satisfies_masks(masks: &[u8], n: usize, table: &AssignmentTable) -> bool {
    let size = 1usize << n;
    masks.iter().enumerate().all(|(triple, &mask)| {
        let b1 = triple >> (2 * n);
        let b2 = (triple >> n) & (size - 1);
        let b3 = triple & (size - 1);
        let vals = (u8::from(table.at(b1)) << 2) | (u8::from(table.at(b2)) << 1) | u8::from(table.at(b3));
        mask & (1 << vals) != 0
    })
}

/// All satisfying tables in decreasing lexicographic order.
pub fn satisfying_tables(inst: &SuccinctInstance) -> Result<Vec<AssignmentTable>> {
    inst.check_budget()?;
    let masks = allowed_triples(inst);
    let n = inst.n;
    Ok((0..1u64 << (1 << n))
        .rev()
        .map(|v| AssignmentTable::from_integer(v, n))
        .filter(|t| satisfies_masks(&masks, n, t))
        .collect())
}

/// The lexicographically largest satisfying table, or all zeros.
pub fn brute_force_v_phi(inst: &SuccinctInstance) -> Result<AssignmentTable> {
    inst.check_budget()?;
    let masks = allowed_triples(inst);
    let n = inst.n;
    for v in (0..1u64 << (1 << n)).rev() {
        let t = AssignmentTable::from_integer(v, n);
        if satisfies_masks(&masks, n, &t) {
            return Ok(t);
        }
    }
    Ok(AssignmentTable::zeros(n))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OracleQuery {
    DecisionBit(Assignment),
    MlePoint(Vec<Fe>),
    /// Round `round` (1-based) polynomial of the sum-check for `target`,
    /// with `r_prefix` holding the `round - 1` earlier challenges.
    SumcheckCoeffs {
        target: ConstraintKind,
        t: Vec<Fe>,
        r_prefix: Vec<Fe>,
        round: usize,
    },
}

impl OracleQuery {
    fn kind(&self) -> QueryKind {
        match self {
            OracleQuery::DecisionBit(_) => QueryKind::Decision,
            OracleQuery::MlePoint(_) => QueryKind::Mle,
            OracleQuery::SumcheckCoeffs { .. } => QueryKind::Sumcheck,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleAnswer {
    Bit(bool),
    Value(Fe),
    Poly(UniPoly),
}

/// An oracle for one instance. Dishonest implementations may answer
/// arbitrarily but must answer every well-formed query.
pub trait Oracle {
    fn answer(&mut self, query: &OracleQuery) -> Result<OracleAnswer>;
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn answer(&mut self, query: &OracleQuery) -> Result<OracleAnswer> {
        (**self).answer(query)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QueryKind {
    Decision,
    Mle,
    Sumcheck,
}

/// Queries issued to one oracle, per kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub decision: u64,
    pub mle: u64,
    pub sumcheck: u64,
}

impl QueryCounts {
    pub fn total(&self) -> u64 {
        self.decision + self.mle + self.sumcheck
    }

    pub fn add(&mut self, other: &QueryCounts) {
        self.decision += other.decision;
        self.mle += other.mle;
        self.sumcheck += other.sumcheck;
    }
}

/// A selector's view of one oracle for one run: memoizes answers (so the
/// oracle is consistent even if it is randomized) and counts queries.
pub struct Session<'a> {
    oracle: &'a mut dyn Oracle,
    n: usize,
    field: PrimeField,
    memo: HashMap<OracleQuery, OracleAnswer>,
    counts: QueryCounts,
}

impl<'a> Session<'a> {
    pub fn new(oracle: &'a mut dyn Oracle, inst: &SuccinctInstance) -> Self {
        Self {
            oracle,
            n: inst.n,
            field: inst.field,
            memo: HashMap::new(),
            counts: QueryCounts::default(),
        }
    }

    pub fn counts(&self) -> QueryCounts {
        self.counts
    }

    pub fn ask(&mut self, query: OracleQuery) -> Result<OracleAnswer> {
        match query.kind() {
            QueryKind::Decision => self.counts.decision += 1,
            QueryKind::Mle => self.counts.mle += 1,
            QueryKind::Sumcheck => self.counts.sumcheck += 1,
        }
        if let Some(a) = self.memo.get(&query) {
            return Ok(a.clone());
        }
        let a = self.oracle.answer(&query)?;
        self.memo.insert(query, a.clone());
        Ok(a)
    }

    pub fn decision_bit(&mut self, b: &Assignment) -> Result<bool> {
        match self.ask(OracleQuery::DecisionBit(b.clone()))? {
            OracleAnswer::Bit(v) => Ok(v),
            other => Err(Error::OracleFailure(format!("expected a bit, got {other:?}"))),
        }
    }

    pub fn mle_point(&mut self, x: &[Fe]) -> Result<Fe> {
        if x.len() != self.n {
            return Err(arity(format!("point of dimension {} for n = {}", x.len(), self.n)));
        }
        match self.ask(OracleQuery::MlePoint(x.to_vec()))? {
            OracleAnswer::Value(v) if v.field() == self.field => Ok(v),
            other => Err(Error::OracleFailure(format!("expected a field element, got {other:?}"))),
        }
    }

    pub fn sumcheck_coeffs(&mut self, target: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
        let q = OracleQuery::SumcheckCoeffs {
            target,
            t: t.to_vec(),
            r_prefix: r_prefix.to_vec(),
            round,
        };
        match self.ask(q)? {
            OracleAnswer::Poly(p) if p.coeffs().iter().all(|c| c.field() == self.field) => Ok(p),
            other => Err(Error::OracleFailure(format!("expected a polynomial, got {other:?}"))),
        }
    }
}

/// The claimed multilinear extension behind a shared session.
pub struct SessionPoints<'s, 'a>(pub &'s RefCell<Session<'a>>);

impl PointFunction for SessionPoints<'_, '_> {
    fn dim(&self) -> usize {
        self.0.borrow().n
    }

    fn field(&self) -> PrimeField {
        self.0.borrow().field
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        self.0.borrow_mut().mle_point(x)
    }
}

/// The sum-check prover behind a shared session.
pub struct SessionProver<'s, 'a>(pub &'s RefCell<Session<'a>>);

impl RoundProver for SessionProver<'_, '_> {
    fn round_poly(&mut self, kind: ConstraintKind, t: &[Fe], r_prefix: &[Fe], round: usize) -> Result<UniPoly> {
        self.0.borrow_mut().sumcheck_coeffs(kind, t, r_prefix, round)
    }
}

/// Answers every query from a fixed table: decision bits from the table,
/// extension values from its multilinear extension, and exact sum-check
/// round polynomials for that extension. With the true `V_Phi` this is the
/// honest oracle.
#[derive(Clone)]
pub struct TableOracle {
    inst: SuccinctInstance,
    arith: ArithFormula,
    table: AssignmentTable,
    mle: MleTable,
}

impl TableOracle {
    pub fn new(inst: &SuccinctInstance, table: AssignmentTable) -> Result<Self> {
        inst.check_budget()?;
        if table.dim() != inst.n {
            return Err(arity(format!("table of dimension {} for n = {}", table.dim(), inst.n)));
        }
        Ok(Self {
            arith: arithmetize(inst.phi()),
            mle: table.to_mle(inst.field),
            inst: inst.clone(),
            table,
        })
    }

    pub fn table(&self) -> &AssignmentTable {
        &self.table
    }

    pub fn mle(&self) -> &MleTable {
        &self.mle
    }
}

impl Oracle for TableOracle {
    fn answer(&mut self, query: &OracleQuery) -> Result<OracleAnswer> {
        match query {
            OracleQuery::DecisionBit(b) => {
                if b.len() != self.inst.n {
                    return Err(arity("decision index has the wrong width"));
                }
                Ok(OracleAnswer::Bit(self.table.get(b)))
            }
            OracleQuery::MlePoint(x) => Ok(OracleAnswer::Value(self.mle.eval(x)?)),
            OracleQuery::SumcheckCoeffs { target, t, r_prefix, round } => {
                let mut f = self.mle.clone();
                let mut c = ConstraintPoly::new(*target, &self.inst, &self.arith, &mut f);
                Ok(OracleAnswer::Poly(honest_round_poly(&mut c, t, r_prefix, *round)?))
            }
        }
    }
}

/// The honest oracle: [`TableOracle`] over the brute-force `V_Phi`.
pub fn honest_oracle(inst: &SuccinctInstance) -> Result<TableOracle> {
    TableOracle::new(inst, brute_force_v_phi(inst)?)
}

/// Named instance shapes for tests, examples, and the CLI generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceTemplate {
    /// `phi = 1`: every table satisfies.
    ConstTrue,
    /// `phi = 0`: nothing satisfies.
    ConstFalse,
    /// `phi = X(b3)`: only the all-ones table satisfies.
    LastInput,
    /// `phi = !X(b1)`: only the all-zeros table satisfies.
    NotFirstX,
    /// Random clauses `C(w) -> L(X(b1), X(b2), X(b3))` with `C` a short
    /// conjunction of index literals; yields varied satisfiable instances.
    RandomClauses,
    /// An unstructured random formula over all slots.
    RandomFormula,
}

impl std::str::FromStr for InstanceTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("unknown template '{s}'")))
    }
}

/// Builds an instance from a template; `b_in` is drawn uniformly.
pub fn generate_instance(
    template: InstanceTemplate,
    m: usize,
    n: usize,
    field: PrimeField,
    rng: &mut Rng,
) -> Result<SuccinctInstance> {
    let slots = m + 3 * n + 3;
    let x = |k: usize| m + 3 * n + k;
    let root = match template {
        InstanceTemplate::ConstTrue => Node::Const(true),
        InstanceTemplate::ConstFalse => Node::Const(false),
        InstanceTemplate::LastInput => Node::var(x(2)),
        InstanceTemplate::NotFirstX => Node::not(Node::var(x(0))),
        InstanceTemplate::RandomClauses => {
            let clauses = 2 + rng.below(3);
            random_clauses(rng, m, n, clauses)
        }
        InstanceTemplate::RandomFormula => random_node(rng, slots, 3),
    };
    let b_in = Assignment::from_index(rng.below(1 << n) as u64, n);
    SuccinctInstance::new(m, n, Formula::new(root, slots)?, b_in, field)
}

/// `clauses` random implications `(y_j, b_k = i_k, ...) -> L(X(b_k), ...)`.
/// Each guard pins one or two index blocks to fixed indices, so a clause
/// constrains a few table entries.
fn random_clauses(rng: &mut Rng, m: usize, n: usize, clauses: usize) -> Node {
    let x_base = m + 3 * n;
    let mut out = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let mut lits = Vec::new();
        if m > 0 && rng.bit() {
            lits.push(Node::literal(rng.below(m), rng.bit()));
        }
        let first = rng.below(3);
        let mut blocks = vec![first];
        if rng.bit() {
            blocks.push((first + 1 + rng.below(2)) % 3);
        }
        for &k in &blocks {
            let index = rng.below(1 << n);
            for c in 0..n {
                // Negated guard literal: the clause is vacuous unless b_k = index.
                let bit = (index >> (n - 1 - c)) & 1 == 1;
                lits.push(Node::literal(m + k * n + c, !bit));
            }
        }
        for &k in &blocks {
            lits.push(Node::literal(x_base + k, rng.bit()));
        }
        out.push(Node::or(lits));
    }
    Node::and(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sumcheck::ConstraintKind::{G1, G2};

    fn inst(m: usize, n: usize, root: Node, b_in: &str) -> SuccinctInstance {
        let phi = Formula::new(root, m + 3 * n + 3).unwrap();
        SuccinctInstance::new(m, n, phi, b_in.parse().unwrap(), PrimeField::default()).unwrap()
    }

    fn table(s: &str) -> AssignmentTable {
        AssignmentTable::new(s.chars().map(|c| c == '1').collect()).unwrap()
    }

    #[test]
    fn constructor_validation() {
        let phi = Formula::new(Node::Const(true), 6).unwrap();
        let f = PrimeField::default();
        assert!(SuccinctInstance::new(0, 1, phi.clone(), "0".parse().unwrap(), f).is_ok());
        assert!(SuccinctInstance::new(1, 1, phi.clone(), "0".parse().unwrap(), f).is_err());
        assert!(SuccinctInstance::new(0, 1, phi.clone(), "00".parse().unwrap(), f).is_err());
        let big = inst(7, 4, Node::Const(true), "0000");
        assert!(matches!(brute_force_v_phi(&big), Err(Error::InstanceTooLarge(_))));
        assert!(matches!(eval_f_phi(&big, &AssignmentTable::zeros(4)), Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn f_phi_examples() {
        let t = inst(0, 1, Node::Const(true), "0");
        assert!(eval_f_phi(&t, &table("01")).unwrap());
        let z = inst(0, 1, Node::Const(false), "0");
        assert!(!eval_f_phi(&z, &table("11")).unwrap());
        let last = inst(1, 2, Node::var(1 + 6 + 2), "00");
        assert!(eval_f_phi(&last, &table("1111")).unwrap());
        for v in 0..15 {
            assert!(!eval_f_phi(&last, &AssignmentTable::from_integer(v, 2)).unwrap());
        }
    }

    #[test]
    fn v_phi_examples() {
        assert_eq!(brute_force_v_phi(&inst(0, 1, Node::Const(true), "0")).unwrap(), table("11"));
        assert_eq!(brute_force_v_phi(&inst(0, 1, Node::Const(false), "0")).unwrap(), table("00"));
        let not_x1 = inst(0, 1, Node::not(Node::var(3)), "1");
        assert_eq!(brute_force_v_phi(&not_x1).unwrap(), table("00"));
        // Only the all-zeros table satisfies !X(b1), enumerated directly.
        let sat: Vec<_> = (0..4).map(|v| AssignmentTable::from_integer(v, 1))
            .filter(|t| eval_f_phi(&not_x1, t).unwrap()).collect();
        assert_eq!(sat, vec![table("00")]);
    }

    #[test]
    fn v_phi_matches_direct_enumeration() {
        let mut rng = Rng::new(17);
        let f = PrimeField::default();
        for i in 0..60 {
            let n = 1 + i % 3;
            let m = rng.below(3);
            let template = if i % 2 == 0 { InstanceTemplate::RandomClauses } else { InstanceTemplate::RandomFormula };
            let inst = generate_instance(template, m, n, f, &mut rng).unwrap();
            let direct: Vec<AssignmentTable> = (0..1u64 << (1 << n))
                .rev()
                .map(|v| AssignmentTable::from_integer(v, n))
                .filter(|t| eval_f_phi(&inst, t).unwrap())
                .collect();
            assert_eq!(satisfying_tables(&inst).unwrap(), direct);
            let v = brute_force_v_phi(&inst).unwrap();
            match direct.first() {
                Some(best) => assert_eq!(&v, best),
                None => assert_eq!(v, AssignmentTable::zeros(n)),
            }
        }
    }

    #[test]
    fn random_clauses_give_varied_answers() {
        let mut rng = Rng::new(23);
        let mut nontrivial = 0;
        for _ in 0..40 {
            let inst = generate_instance(InstanceTemplate::RandomClauses, 1, 2, PrimeField::default(), &mut rng).unwrap();
            let v = brute_force_v_phi(&inst).unwrap();
            if v != AssignmentTable::zeros(2) && v != table("1111") {
                nontrivial += 1;
            }
        }
        assert!(nontrivial >= 5, "only {nontrivial} nontrivial instances");
    }

    #[test]
    fn json_round_trip() {
        let i = inst(1, 2, Node::Or(vec![Node::var(0), Node::not(Node::var(9))]), "10");
        let s = i.to_json();
        assert!(s.contains("\"b_in\": \"10\""));
        assert!(s.contains("\"p\": 2147483647"));
        assert_eq!(SuccinctInstance::from_json(&s).unwrap(), i);
        let bad = s.replace("2147483647", "2147483646");
        assert!(matches!(SuccinctInstance::from_json(&bad), Err(Error::NotPrime(_))));
        assert!(SuccinctInstance::from_json("{\"m\": 1}").is_err());
    }

    #[test]
    fn honest_oracle_answers() {
        let mut rng = Rng::new(31);
        let f = PrimeField::default();
        let i = generate_instance(InstanceTemplate::RandomClauses, 1, 2, f, &mut rng).unwrap();
        let v = brute_force_v_phi(&i).unwrap();
        let mut o = honest_oracle(&i).unwrap();
        let OracleAnswer::Bit(bit) = o.answer(&OracleQuery::DecisionBit(i.b_in().clone())).unwrap() else {
            panic!()
        };
        assert_eq!(bit, v.get(i.b_in()));
        for idx in 0..4u64 {
            let b = Assignment::from_index(idx, 2);
            let pt: Vec<Fe> = b.bits().iter().map(|&x| f.from_bool(x)).collect();
            assert_eq!(
                o.answer(&OracleQuery::MlePoint(pt)).unwrap(),
                OracleAnswer::Value(f.from_bool(v.get(&b)))
            );
        }
        assert!(o.answer(&OracleQuery::MlePoint(vec![f.one()])).is_err());
    }

    #[test]
    fn honest_round_polys_are_consistent() {
        let mut rng = Rng::new(37);
        let f = PrimeField::default();
        let i = generate_instance(InstanceTemplate::RandomClauses, 1, 2, f, &mut rng).unwrap();
        let mut o = honest_oracle(&i).unwrap();
        for kind in [G1, G2] {
            let l = i.constraint_arity(kind);
            let t = rng.point(f, l);
            let r = rng.point(f, l);
            let mut prev = f.zero();
            for round in 1..=l {
                let q = OracleQuery::SumcheckCoeffs { target: kind, t: t.clone(), r_prefix: r[..round - 1].to_vec(), round };
                let OracleAnswer::Poly(g) = o.answer(&q).unwrap() else { panic!() };
                assert_eq!(g.eval(f.zero()) + g.eval(f.one()), prev, "{kind:?} round {round}");
                prev = g.eval(r[round - 1]);
            }
        }
    }

    struct Counter(u64);

    impl Oracle for Counter {
        fn answer(&mut self, _: &OracleQuery) -> Result<OracleAnswer> {
            self.0 += 1;
            Ok(OracleAnswer::Bit(self.0 % 2 == 1))
        }
    }

    #[test]
    fn sessions_memoize_and_count() {
        let i = inst(0, 1, Node::Const(true), "0");
        let mut o = Counter(0);
        let mut s = Session::new(&mut o, &i);
        let b: Assignment = "1".parse().unwrap();
        let first = s.decision_bit(&b).unwrap();
        for _ in 0..5 {
            assert_eq!(s.decision_bit(&b).unwrap(), first);
        }
        assert_eq!(s.counts().decision, 6);
        assert!(matches!(s.mle_point(&[i.field().one()]), Err(Error::OracleFailure(_))));
        drop(s);
        assert_eq!(o.0, 2);
    }

    #[test]
    fn template_parsing() {
        assert_eq!("random-clauses".parse::<InstanceTemplate>().unwrap(), InstanceTemplate::RandomClauses);
        assert!("bogus".parse::<InstanceTemplate>().is_err());
    }
}
