use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A power series in ε truncated after `ε^(order-1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsilonSeries {
    coeffs: Vec<Rational>,
}

impl EpsilonSeries {
    /// Builds from explicit coefficients; `coeffs.len()` is the order.
    pub fn new(coeffs: Vec<Rational>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("series order must be at least 1".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(order: usize, c: Rational) -> Self {
        assert!(order >= 1, "series order must be at least 1");
        let mut coeffs = vec![Rational::zero(); order];
        coeffs[0] = c;
        Self { coeffs }
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, Rational::one())
    }

    /// `a + b·ε`.
    pub fn linear(order: usize, a: Rational, b: Rational) -> Self {
        let mut s = Self::constant(order, a);
        if order > 1 {
            s.coeffs[1] = b;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `ε^j`.
    pub fn coeff(&self, j: usize) -> Result<&Rational> {
        self.coeffs.get(j).ok_or_else(|| {
            Error::InvalidArgument(format!("coefficient {j} requested from series of order {}", self.order()))
        })
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::ShapeMismatch(format!(
                "series orders {} and {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![Rational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate().filter(|(_, a)| !a.is_zero()) {
            for (j, b) in other.coeffs[..n - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn invert(&self) -> Result<Self> {
        let c0 = &self.coeffs[0];
        if c0.is_zero() {
            return Err(Error::NonUnit("series has zero constant term".into()));
        }
        let inv0 = c0.recip();
        let n = self.order();
        let mut out: Vec<Rational> = Vec::with_capacity(n);
        out.push(inv0.clone());
        for k in 1..n {
            let mut acc = Rational::zero();
            for i in 1..=k {
                acc += &self.coeffs[i] * &out[k - i];
            }
            out.push(-acc * &inv0);
        }
        Ok(Self { coeffs: out })
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(self.order());
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn invert_one_plus_eps() {
        let s = EpsilonSeries::linear(6, int(1), int(1));
        let inv = s.invert().unwrap();
        let expected: Vec<_> = (0..6).map(|k| int(if k % 2 == 0 { 1 } else { -1 })).collect();
        assert_eq!(inv.coeffs(), expected.as_slice());
        assert_eq!(s.mul(&inv).unwrap(), EpsilonSeries::one(6));
    }

    #[test]
    fn direct_expansion_coefficient() {
        // (1+2ε)(2+2ε)/(1+ε)^2 = 2 + 2ε + O(ε^2)
        let num = EpsilonSeries::linear(3, int(1), int(2))
            .mul(&EpsilonSeries::linear(3, int(2), int(2)))
            .unwrap();
        let den = EpsilonSeries::linear(3, int(1), int(1)).pow(2).unwrap();
        let q = num.mul(&den.invert().unwrap()).unwrap();
        assert_eq!(*q.coeff(1).unwrap(), int(2));
    }

    #[test]
    fn errors() {
        assert!(EpsilonSeries::new(vec![]).is_err());
        let s = EpsilonSeries::linear(3, int(0), int(1));
        assert!(matches!(s.invert(), Err(Error::NonUnit(_))));
        assert!(s.coeff(3).is_err());
        assert!(s.mul(&EpsilonSeries::one(4)).is_err());
    }
}
