use serde::Serialize;

use super::Fe;
use crate::error::{Error, Result};

pub const MAX_INTERPOLATION_POINTS: usize = 64;

/// Dense univariate polynomial, lowest-degree coefficient first.
///
/// Trailing zero coefficients are trimmed, so the zero polynomial is the
/// empty coefficient list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct UniPoly {
    coeffs: Vec<Fe>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Fe>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Fe) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: Fe) -> Fe {
        self.coeffs
            .iter()
            .rev()
            .fold(x.field().zero(), |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            out.push(match (self.coeffs.get(i), other.coeffs.get(i)) {
                (Some(&a), Some(&b)) => a + b,
                (Some(&a), None) | (None, Some(&a)) => a,
                (None, None) => unreachable!(),
            });
        }
        UniPoly::new(out)
    }

    pub fn scale(&self, s: Fe) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Multiplies by `(x - root)`.
    pub fn mul_linear(&self, root: Fe) -> UniPoly {
        if self.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![root.field().zero(); self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] += c;
            out[i] -= c * root;
        }
        UniPoly::new(out)
    }
}

/// Lagrange interpolation: the unique polynomial of degree `< points.len()`
/// through all points.
pub fn interpolate(points: &[(Fe, Fe)]) -> Result<UniPoly> {
    if points.is_empty() || points.len() > MAX_INTERPOLATION_POINTS {
        return Err(Error::DegenerateInterpolation);
    }
    let field = points[0].0.field();
    for (i, (xi, yi)) in points.iter().enumerate() {
        if xi.field() != field || yi.field() != field {
            return Err(Error::FieldMismatch(field.modulus(), xi.field().modulus()));
        }
        if points[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(Error::DegenerateInterpolation);
        }
    }

    let mut result = UniPoly::zero();
    for (i, &(xi, yi)) in points.iter().enumerate() {
        let mut basis = UniPoly::constant(field.one());
        let mut denom = field.one();
        for (j, &(xj, _)) in points.iter().enumerate() {
            if i != j {
                basis = basis.mul_linear(xj);
                denom *= xi - xj;
            }
        }
        result = result.add(&basis.scale(yi * denom.inv()?));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PrimeField, Rng};
    use proptest::prelude::*;

    fn gf(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn vals(q: &UniPoly) -> Vec<u64> {
        q.coeffs().iter().map(|c| c.value()).collect()
    }

    #[test]
    fn line_through_two_points() {
        let f = gf(7);
        let q = interpolate(&[(f.elem(0), f.elem(1)), (f.elem(1), f.elem(3))]).unwrap();
        assert_eq!(vals(&q), vec![1, 2]);
        assert_eq!(q.eval(f.elem(3)).value(), 0);
    }

    #[test]
    fn single_point_is_constant() {
        let f = gf(101);
        let q = interpolate(&[(f.elem(5), f.elem(42))]).unwrap();
        assert_eq!(vals(&q), vec![42]);
    }

    #[test]
    fn recovers_x_squared_plus_one() {
        let f = gf(101);
        // Sample points computed by hand: x^2 + 1 at 0, 1, 2.
        let pts = [(f.elem(0), f.elem(1)), (f.elem(1), f.elem(2)), (f.elem(2), f.elem(5))];
        let q = interpolate(&pts).unwrap();
        assert_eq!(vals(&q), vec![1, 0, 1]);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let f = gf(7);
        let dup = [(f.elem(1), f.elem(1)), (f.elem(8), f.elem(2))];
        assert_eq!(interpolate(&dup), Err(Error::DegenerateInterpolation));
        assert_eq!(interpolate(&[]), Err(Error::DegenerateInterpolation));
        let too_many: Vec<_> = (0..65).map(|i| (f.elem(i), f.zero())).collect();
        assert_eq!(interpolate(&too_many), Err(Error::DegenerateInterpolation));
    }

    #[test]
    fn zero_polynomial() {
        let f = gf(7);
        let z = UniPoly::new(vec![f.zero(), f.zero()]);
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
        assert_eq!(z.eval(f.elem(4)), f.zero());
    }

    #[test]
    fn interpolation_round_trip_and_identity() {
        let f = PrimeField::default();
        let mut rng = Rng::new(3);
        for k in 1..=12usize {
            let coeffs: Vec<Fe> = (0..k).map(|_| rng.elem(f)).collect();
            let q = UniPoly::new(coeffs);
            let pts: Vec<(Fe, Fe)> = (0..k as u64)
                .map(|i| {
                    let x = f.elem(1000 + 17 * i);
                    (x, q.eval(x))
                })
                .collect();
            let back = interpolate(&pts).unwrap();
            assert_eq!(back, q);
            for (x, y) in pts {
                assert_eq!(back.eval(x), y);
            }
        }
    }

    proptest! {
        #[test]
        fn mul_linear_has_root(cs in proptest::collection::vec(1u64..101, 1..6), r in 0u64..101) {
            let f = gf(101);
            let q = UniPoly::new(cs.into_iter().map(|c| f.elem(c)).collect());
            let root = f.elem(r);
            let m = q.mul_linear(root);
            prop_assert_eq!(m.eval(root), f.zero());
            prop_assert_eq!(m.degree(), q.degree().map(|d| d + 1));
        }
    }
}
