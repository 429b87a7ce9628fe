//! Multilinear extensions and the low-degree machinery built on them:
//! polynomial identity testing, the multilinearity test, and
//! self-correction along random lines.

use crate::error::{arity, Error, Result};
use crate::field::{interpolate, Fe, PrimeField, Rng};

/// Values of a function on `{0,1}^n`, indexed by the hypercube point read
/// as a big-endian integer (coordinate 0 most significant).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MleTable {
    values: Vec<Fe>,
    n: usize,
}

impl MleTable {
    pub fn new(values: Vec<Fe>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return Err(arity(format!("table length {} is not a power of two", values.len())));
        }
        let field = values[0].field();
        if let Some(bad) = values.iter().find(|v| v.field() != field) {
            return Err(Error::FieldMismatch(field.modulus(), bad.field().modulus()));
        }
        let n = values.len().trailing_zeros() as usize;
        Ok(Self { values, n })
    }

    pub fn from_bits(field: PrimeField, bits: &[bool]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| field.from_bool(b)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> PrimeField {
        self.values[0].field()
    }

    pub fn values(&self) -> &[Fe] {
        &self.values
    }

    /// Evaluates the multilinear extension at `x` by folding one
    /// coordinate at a time, O(2^n).
    pub fn eval(&self, x: &[Fe]) -> Result<Fe> {
        if x.len() != self.n {
            return Err(arity(format!("point of dimension {} for a {}-variate table", x.len(), self.n)));
        }
        let mut layer = self.values.clone();
        for &xi in x {
            let half = layer.len() / 2;
            for j in 0..half {
                layer[j] = layer[j] + xi * (layer[half + j] - layer[j]);
            }
            layer.truncate(half);
        }
        Ok(layer[0])
    }

    /// The table of `x -> ext(b, x)`: the first or second half.
    pub fn fix_first(&self, b: bool) -> Result<MleTable> {
        if self.n == 0 {
            return Err(arity("cannot fix a variable of a 0-variate table"));
        }
        let half = self.values.len() / 2;
        let part = if b { &self.values[half..] } else { &self.values[..half] };
        Ok(MleTable { values: part.to_vec(), n: self.n - 1 })
    }
}

pub fn mle_eval(v: &MleTable, x: &[Fe]) -> Result<Fe> {
    v.eval(x)
}

pub fn mle_fix_first(v: &MleTable, b: bool) -> Result<MleTable> {
    v.fix_first(b)
}

/// A total map `F^n -> F`, possibly backed by an oracle.
pub trait PointFunction {
    fn dim(&self) -> usize;
    fn field(&self) -> PrimeField;
    fn eval(&mut self, x: &[Fe]) -> Result<Fe>;
}

impl PointFunction for MleTable {
    fn dim(&self) -> usize {
        self.n
    }

    fn field(&self) -> PrimeField {
        MleTable::field(self)
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        MleTable::eval(self, x)
    }
}

impl<T: PointFunction + ?Sized> PointFunction for &mut T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn field(&self) -> PrimeField {
        (**self).field()
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        (**self).eval(x)
    }
}

impl<T: PointFunction + ?Sized> PointFunction for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn field(&self) -> PrimeField {
        (**self).field()
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        (**self).eval(x)
    }
}

/// Adapts a closure into a [`PointFunction`].
pub struct FnPoint<F> {
    dim: usize,
    field: PrimeField,
    f: F,
}

impl<F: FnMut(&[Fe]) -> Fe> FnPoint<F> {
    pub fn new(field: PrimeField, dim: usize, f: F) -> Self {
        Self { dim, field, f }
    }
}

impl<F: FnMut(&[Fe]) -> Fe> PointFunction for FnPoint<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn field(&self) -> PrimeField {
        self.field
    }

    fn eval(&mut self, x: &[Fe]) -> Result<Fe> {
        if x.len() != self.dim {
            return Err(arity(format!("point of dimension {} for a {}-variate function", x.len(), self.dim)));
        }
        Ok((self.f)(x))
    }
}

/// Keyed 64-bit hash of a field point (splitmix64 finalizer per word).
/// Used to define fixed pseudo-random functions on `F^n`.
pub fn hash_point(key: u64, x: &[Fe]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(key ^ 0x9e37_79b9_7f4a_7c15);
    for v in x {
        h = mix(h.wrapping_add(v.value()).wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    h
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PitOutcome {
    Disagree(Vec<Fe>),
    LikelyEqual,
}

/// One round of randomized identity testing at a uniform point.
pub fn pit_disagree(
    f: &mut dyn PointFunction,
    g: &mut dyn PointFunction,
    rng: &mut Rng,
) -> Result<PitOutcome> {
    if f.dim() != g.dim() {
        return Err(arity(format!("dimensions {} and {} differ", f.dim(), g.dim())));
    }
    let u = rng.point(f.field(), f.dim());
    if f.eval(&u)? != g.eval(&u)? {
        Ok(PitOutcome::Disagree(u))
    } else {
        Ok(PitOutcome::LikelyEqual)
    }
}

/// Three values along one axis-parallel line that are not collinear.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineWitness {
    pub axis: usize,
    pub base: Vec<Fe>,
    pub at: [Fe; 3],
    pub values: [Fe; 3],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MultilinearityVerdict {
    Accept,
    Reject(LineWitness),
}

impl MultilinearityVerdict {
    pub fn accepted(&self) -> bool {
        matches!(self, MultilinearityVerdict::Accept)
    }
}

/// Default repetition count for the multilinearity test.
pub fn default_ml_reps(n: usize) -> usize {
    32 * n.max(1)
}

/// Axis-parallel line test: a multilinear function restricted to any
/// axis-parallel line is affine, so three points on such a line must be
/// collinear. Accepts every multilinear function with probability 1.
pub fn multilinearity_test(
    f: &mut dyn PointFunction,
    n: usize,
    reps: usize,
    rng: &mut Rng,
) -> Result<MultilinearityVerdict> {
    if f.dim() != n {
        return Err(arity(format!("function of dimension {} tested as {n}-variate", f.dim())));
    }
    let field = f.field();
    if n == 0 {
        return Ok(MultilinearityVerdict::Accept);
    }
    if field.modulus() < 3 {
        return Err(arity("the line test needs at least three field elements"));
    }
    for _ in 0..reps {
        let axis = rng.below(n);
        let base = rng.point(field, n);
        let a = rng.elem(field);
        let b = loop {
            let b = rng.elem(field);
            if b != a {
                break b;
            }
        };
        let c = loop {
            let c = rng.elem(field);
            if c != a && c != b {
                break c;
            }
        };
        let mut at = |t: Fe| -> Result<Fe> {
            let mut x = base.clone();
            x[axis] = t;
            f.eval(&x)
        };
        let (fa, fb, fc) = (at(a)?, at(b)?, at(c)?);
        let predicted = fa + (c - a) * (fb - fa) * (b - a).inv()?;
        if predicted != fc {
            return Ok(MultilinearityVerdict::Reject(LineWitness {
                axis,
                base,
                at: [a, b, c],
                values: [fa, fb, fc],
            }));
        }
    }
    Ok(MultilinearityVerdict::Accept)
}

/// Recovers the value at `x` of the multilinear function close to `f`:
/// interpolates `f` along the random line `x + a*y` at `a = 1..=n+1` and
/// reads off the value at `a = 0`. Never queries `f(x)` itself.
pub fn self_correct(f: &mut dyn PointFunction, x: &[Fe], rng: &mut Rng) -> Result<Fe> {
    let n = f.dim();
    if x.len() != n {
        return Err(arity(format!("point of dimension {} for a {n}-variate function", x.len())));
    }
    let field = f.field();
    if (n as u64 + 1) >= field.modulus() {
        return Err(arity("self-correction needs n + 1 < p"));
    }
    let y = rng.point(field, n);
    let mut samples = Vec::with_capacity(n + 1);
    for k in 1..=n as u64 + 1 {
        let a = field.elem(k);
        let point: Vec<Fe> = x.iter().zip(&y).map(|(&xi, &yi)| xi + a * yi).collect();
        samples.push((a, f.eval(&point)?));
    }
    Ok(interpolate(&samples)?.eval(field.zero()))
}
