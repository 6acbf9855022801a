use num_traits::Zero;

use crate::rational::Rational;

/// An affine form `c + Σ c_i h_i` in the ring variables.
///
/// Every factor of a localization integrand is a (possibly negative) power of
/// one of these, so the ring has fast paths for multiplying and dividing by them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Affine {
    pub constant: Rational,
    pub coeffs: Vec<Rational>,
}

impl Affine {
    pub fn new(constant: Rational, coeffs: Vec<Rational>) -> Self {
        Self { constant, coeffs }
    }

    pub fn constant(num_vars: usize, c: Rational) -> Self {
        Self::new(c, vec![Rational::zero(); num_vars])
    }

    /// `h_i + shift`: the equivariant hyperplane class of the `i`-th factor.
    pub fn shifted_var(num_vars: usize, i: usize, shift: Rational) -> Self {
        let mut coeffs = vec![Rational::zero(); num_vars];
        coeffs[i] = num_traits::One::one();
        Self::new(shift, coeffs)
    }

    pub fn num_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_unit(&self) -> bool {
        !self.constant.is_zero()
    }

    pub fn add(&self, other: &Affine) -> Affine {
        debug_assert_eq!(self.num_vars(), other.num_vars());
        Affine::new(
            &self.constant + &other.constant,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &Affine) -> Affine {
        debug_assert_eq!(self.num_vars(), other.num_vars());
        Affine::new(
            &self.constant - &other.constant,
            self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn scale(&self, s: &Rational) -> Affine {
        Affine::new(&self.constant * s, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn shift(&self, s: &Rational) -> Affine {
        Affine::new(&self.constant + s, self.coeffs.clone())
    }
}
