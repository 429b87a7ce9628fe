//! Boolean formulas, assignments, restriction, and brute-force
//! lexicographically-maximum satisfying assignments.
//!
//! Variable index 0 is the most significant position of an assignment.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{arity, Error, Result};
use crate::field::Rng;

/// Largest formula (in nodes) accepted at desk scale.
pub const MAX_NODES: usize = 10_000;

/// Largest variable count `lexmax_sat` will enumerate.
pub const MAX_BRUTE_FORCE_VARS: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Var(usize),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Const(bool),
}

impl Node {
    pub fn var(i: usize) -> Node {
        Node::Var(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Node) -> Node {
        Node::Not(Box::new(child))
    }

    /// Conjunction; an empty list is `true` and a single child is returned as is.
    pub fn and(mut children: Vec<Node>) -> Node {
        match children.len() {
            0 => Node::Const(true),
            1 => children.pop().unwrap(),
            _ => Node::And(children),
        }
    }

    /// Disjunction; an empty list is `false` and a single child is returned as is.
    pub fn or(mut children: Vec<Node>) -> Node {
        match children.len() {
            0 => Node::Const(false),
            1 => children.pop().unwrap(),
            _ => Node::Or(children),
        }
    }

    /// Literal `x_i` or `!x_i`.
    pub fn literal(i: usize, positive: bool) -> Node {
        if positive {
            Node::Var(i)
        } else {
            Node::not(Node::Var(i))
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Not(c) => 1 + c.node_count(),
            Node::And(cs) | Node::Or(cs) => 1 + cs.iter().map(Node::node_count).sum::<usize>(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Not(c) => c.max_var(),
            Node::And(cs) | Node::Or(cs) => cs.iter().filter_map(Node::max_var).max(),
        }
    }

    fn validate(&self, num_vars: usize) -> Result<()> {
        match self {
            Node::Var(i) if *i >= num_vars => {
                Err(arity(format!("variable x{i} out of range for {num_vars} variables")))
            }
            Node::Var(_) | Node::Const(_) => Ok(()),
            Node::Not(c) => c.validate(num_vars),
            Node::And(cs) | Node::Or(cs) => {
                if cs.len() < 2 {
                    return Err(Error::Parse("and/or nodes need at least two children".into()));
                }
                cs.iter().try_for_each(|c| c.validate(num_vars))
            }
        }
    }

    pub(crate) fn eval_bits(&self, a: &[bool]) -> bool {
        match self {
            Node::Var(i) => a[*i],
            Node::Const(b) => *b,
            Node::Not(c) => !c.eval_bits(a),
            Node::And(cs) => cs.iter().all(|c| c.eval_bits(a)),
            Node::Or(cs) => cs.iter().any(|c| c.eval_bits(a)),
        }
    }

    fn restrict(&self, var: usize, b: bool) -> Node {
        match self {
            Node::Var(i) if *i == var => Node::Const(b),
            Node::Var(i) if *i > var => Node::Var(i - 1),
            Node::Var(i) => Node::Var(*i),
            Node::Const(c) => Node::Const(*c),
            Node::Not(c) => match c.restrict(var, b) {
                Node::Const(v) => Node::Const(!v),
                other => Node::not(other),
            },
            Node::And(cs) => {
                let mut kept = Vec::with_capacity(cs.len());
                for c in cs {
                    match c.restrict(var, b) {
                        Node::Const(false) => return Node::Const(false),
                        Node::Const(true) => {}
                        other => kept.push(other),
                    }
                }
                Node::and(kept)
            }
            Node::Or(cs) => {
                let mut kept = Vec::with_capacity(cs.len());
                for c in cs {
                    match c.restrict(var, b) {
                        Node::Const(true) => return Node::Const(true),
                        Node::Const(false) => {}
                        other => kept.push(other),
                    }
                }
                Node::or(kept)
            }
        }
    }
}

/// A Boolean formula over `num_vars` variable slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    root: Node,
    num_vars: usize,
}

impl Formula {
    pub fn new(root: Node, num_vars: usize) -> Result<Self> {
        root.validate(num_vars)?;
        let nodes = root.node_count();
        if nodes > MAX_NODES {
            return Err(Error::InstanceTooLarge(format!("formula has {nodes} nodes")));
        }
        Ok(Self { root, num_vars })
    }

    /// Uses one slot per variable up to the largest index mentioned.
    pub fn from_root(root: Node) -> Result<Self> {
        let n = root.max_var().map_or(0, |m| m + 1);
        Self::new(root, n)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Encoded size: variable slots plus tree nodes. `restrict` strictly
    /// decreases it.
    pub fn size(&self) -> usize {
        self.num_vars + self.root.node_count()
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool> {
        self.eval_bits(a.bits())
    }

    pub fn eval_bits(&self, a: &[bool]) -> Result<bool> {
        if a.len() != self.num_vars {
            return Err(arity(format!(
                "assignment of length {} for a formula in {} variables",
                a.len(),
                self.num_vars
            )));
        }
        Ok(self.root.eval_bits(a))
    }

    /// Substitutes `b` for variable `var`, propagates constants, and
    /// renumbers the remaining variables.
    pub fn restrict(&self, var: usize, b: bool) -> Result<Formula> {
        if var >= self.num_vars {
            return Err(arity(format!("cannot restrict x{var} of {} variables", self.num_vars)));
        }
        Ok(Formula {
            root: self.root.restrict(var, b),
            num_vars: self.num_vars - 1,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.root).expect("formula serialization is infallible")
    }

    pub fn from_json(s: &str, num_vars: usize) -> Result<Formula> {
        let root: Node = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Formula::new(root, num_vars)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, cs: &[Node], sep: &str| -> fmt::Result {
            write!(f, "(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        };
        match self {
            Node::Var(i) => write!(f, "x{i}"),
            Node::Const(b) => write!(f, "{}", u8::from(*b)),
            Node::Not(c) => write!(f, "!{c}"),
            Node::And(cs) => join(f, cs, "&"),
            Node::Or(cs) => join(f, cs, "|"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<RawBit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<RawNode>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawBit {
    Int(u8),
    Bool(bool),
}

impl From<&Node> for RawNode {
    fn from(n: &Node) -> Self {
        let bare = |op: &str| RawNode {
            op: op.to_string(),
            index: None,
            value: None,
            children: None,
        };
        match n {
            Node::Var(i) => RawNode { index: Some(*i), ..bare("var") },
            Node::Const(b) => RawNode { value: Some(RawBit::Int(u8::from(*b))), ..bare("const") },
            Node::Not(c) => RawNode { children: Some(vec![c.as_ref().into()]), ..bare("not") },
            Node::And(cs) => RawNode { children: Some(cs.iter().map(Into::into).collect()), ..bare("and") },
            Node::Or(cs) => RawNode { children: Some(cs.iter().map(Into::into).collect()), ..bare("or") },
        }
    }
}

impl TryFrom<RawNode> for Node {
    type Error = String;

    fn try_from(raw: RawNode) -> std::result::Result<Self, String> {
        let children = |raw: RawNode| -> std::result::Result<Vec<Node>, String> {
            raw.children
                .ok_or_else(|| format!("'{}' node needs children", raw.op))?
                .into_iter()
                .map(Node::try_from)
                .collect()
        };
        match raw.op.as_str() {
            "var" => raw.index.map(Node::Var).ok_or_else(|| "'var' node needs an index".into()),
            "const" => match raw.value {
                Some(RawBit::Int(0)) | Some(RawBit::Bool(false)) => Ok(Node::Const(false)),
                Some(RawBit::Int(1)) | Some(RawBit::Bool(true)) => Ok(Node::Const(true)),
                _ => Err("'const' node needs value 0 or 1".into()),
            },
            "not" => {
                let mut cs = children(raw)?;
                if cs.len() != 1 {
                    return Err("'not' node takes exactly one child".into());
                }
                Ok(Node::not(cs.pop().unwrap()))
            }
            "and" => Ok(Node::And(children(raw)?)),
            "or" => Ok(Node::Or(children(raw)?)),
            other => Err(format!("unknown op '{other}'")),
        }
    }
}

impl Serialize for Node {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawNode::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawNode::deserialize(d)?;
        Node::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// A Boolean assignment; derived ordering is the lexicographic order with
/// index 0 most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// The `n`-bit big-endian encoding of `v`.
    pub fn from_index(v: u64, n: usize) -> Self {
        Self((0..n).map(|i| (v >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("invalid bit '{c}' in bitstring '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Assignment)
    }
}

/// Lexicographically greatest satisfying assignment, or all zeros when
/// `phi` is unsatisfiable.
pub fn lexmax_sat(phi: &Formula) -> Result<Assignment> {
    let n = phi.num_vars();
    if n > MAX_BRUTE_FORCE_VARS {
        return Err(Error::InstanceTooLarge(format!(
            "{n} variables exceed the brute-force budget of {MAX_BRUTE_FORCE_VARS}"
        )));
    }
    let mut bits = vec![false; n];
    for v in (0..1u64 << n).rev() {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = (v >> (n - 1 - i)) & 1 == 1;
        }
        if phi.root.eval_bits(&bits) {
            return Ok(Assignment(bits));
        }
    }
    Ok(Assignment::zeros(n))
}

/// Whether any assignment satisfies `phi` (brute force).
pub fn is_satisfiable(phi: &Formula) -> Result<bool> {
    let a = lexmax_sat(phi)?;
    phi.eval(&a)
}

/// Canonical DNF for the truth table `table`, where bit `v` of `table` is
/// the value at the assignment with index `v`.
pub fn from_truth_table(n: usize, table: u64) -> Formula {
    assert!(n <= 6, "truth tables are limited to six variables");
    let minterms: Vec<Node> = (0..1u64 << n)
        .filter(|v| (table >> v) & 1 == 1)
        .map(|v| {
            let a = Assignment::from_index(v, n);
            Node::and((0..n).map(|i| Node::literal(i, a.get(i))).collect())
        })
        .collect();
    let root = if minterms.is_empty() {
        Node::Const(false)
    } else {
        Node::or(minterms)
    };
    Formula { root, num_vars: n }
}

/// One formula per Boolean function in `n <= 3` variables, as canonical DNFs.
pub fn all_functions(n: usize) -> Vec<Formula> {
    assert!(n <= 3, "exhaustive function enumeration is limited to three variables");
    (0..1u64 << (1 << n)).map(|t| from_truth_table(n, t)).collect()
}

/// A random formula tree of bounded depth over `num_vars` variables.
pub fn random_node(rng: &mut Rng, num_vars: usize, depth: usize) -> Node {
    if depth == 0 || num_vars == 0 || rng.below(4) == 0 {
        if num_vars == 0 {
            return Node::Const(rng.bit());
        }
        return Node::literal(rng.below(num_vars), rng.bit());
    }
    let arity = 2 + rng.below(2);
    let children = (0..arity).map(|_| random_node(rng, num_vars, depth - 1)).collect();
    match rng.below(5) {
        0 => Node::not(Node::And(children)),
        1 | 2 => Node::And(children),
        _ => Node::Or(children),
    }
}
