//! Coefficients of `∏_{r=1}^{Nd}(r + Nε) / ∏_{r=1}^{d}(r + ε)^N` in ε.

use crate::algebra::EpsilonSeries;
use crate::error::{Error, Result};
use crate::rational::{int, Rational};

/// Coefficient of `ε^j`, i.e. `(1/j!) ∂_ε^j` of the ratio at `ε = 0`.
pub fn i_function_coeff(n: u32, d: u32, j: u32) -> Result<Rational> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("N must be at least 2, got {n}")));
    }
    if d < 1 {
        return Err(Error::InvalidArgument("degree d must be at least 1".into()));
    }
    let order = j as usize + 1;
    let mut num = EpsilonSeries::one(order);
    for r in 1..=(n as i64 * d as i64) {
        num = num.mul(&EpsilonSeries::linear(order, int(r), int(n as i64)))?;
    }
    let mut den = EpsilonSeries::one(order);
    for r in 1..=d as i64 {
        den = den.mul(&EpsilonSeries::linear(order, int(r), int(1)))?;
    }
    let value = num.mul(&den.pow(n)?.invert()?)?;
    Ok(value.coeff(j as usize)?.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_terms() {
        assert_eq!(i_function_coeff(5, 1, 0).unwrap(), int(120));
        // 10!/(2!)^5
        assert_eq!(i_function_coeff(5, 2, 0).unwrap(), int(113400));
    }

    #[test]
    fn first_order_spot_values() {
        assert_eq!(i_function_coeff(5, 1, 1).unwrap(), int(770));
        assert_eq!(i_function_coeff(2, 1, 1).unwrap(), int(2));
        assert_eq!(i_function_coeff(5, 2, 1).unwrap(), int(810225));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(i_function_coeff(1, 1, 0).is_err());
        assert!(i_function_coeff(5, 0, 0).is_err());
    }
}
