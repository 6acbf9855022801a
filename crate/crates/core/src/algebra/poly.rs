use num_traits::{One, Zero};

use super::Affine;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// An element of `Q[h_0, …, h_{n-1}] / (h_0^cap, …, h_{n-1}^cap)`.
///
/// Coefficients are stored densely, indexed by the mixed-radix encoding
/// `Σ e_i · cap^i` of the exponent vector, so every stored exponent is below
/// `cap` by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedPoly {
    num_vars: usize,
    cap: usize,
    coeffs: Vec<Rational>,
}

impl TruncatedPoly {
    /// The zero element.
    ///
    /// # Panics
    ///
    /// If `num_vars` or `cap` is zero, or `cap^num_vars` overflows `usize`.
    pub fn zero(num_vars: usize, cap: usize) -> Self {
        assert!(num_vars >= 1 && cap >= 1, "ring needs at least one variable and cap >= 1");
        let len = (0..num_vars)
            .try_fold(1usize, |acc, _| acc.checked_mul(cap))
            .expect("ring dimension overflows usize");
        Self {
            num_vars,
            cap,
            coeffs: vec![Rational::zero(); len],
        }
    }

    pub fn constant(num_vars: usize, cap: usize, c: Rational) -> Self {
        let mut p = Self::zero(num_vars, cap);
        p.coeffs[0] = c;
        p
    }

    pub fn one(num_vars: usize, cap: usize) -> Self {
        Self::constant(num_vars, cap, Rational::one())
    }

    /// The monomial `c · ∏ h_i^{e_i}`; zero if any exponent reaches `cap`.
    pub fn monomial(num_vars: usize, cap: usize, exps: &[usize], c: Rational) -> Result<Self> {
        let mut p = Self::zero(num_vars, cap);
        if exps.len() != num_vars {
            return Err(Error::ShapeMismatch(format!(
                "exponent vector of length {} for {num_vars} variables",
                exps.len()
            )));
        }
        if exps.iter().all(|&e| e < cap) {
            let idx = p.index_of(exps);
            p.coeffs[idx] = c;
        }
        Ok(p)
    }

    /// The single variable `h_i`.
    pub fn var(num_vars: usize, cap: usize, i: usize) -> Self {
        let mut exps = vec![0; num_vars];
        exps[i] = 1;
        Self::monomial(num_vars, cap, &exps, Rational::one()).expect("shape is consistent")
    }

    pub fn from_affine(form: &Affine, cap: usize) -> Self {
        let mut p = Self::constant(form.num_vars(), cap, form.constant.clone());
        if cap > 1 {
            for (i, c) in form.coeffs.iter().enumerate() {
                let s = p.stride(i);
                p.coeffs[s] = c.clone();
            }
        }
        p
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Number of stored coefficients, `cap^num_vars`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, exps: &[usize]) -> Rational {
        if exps.len() != self.num_vars || exps.iter().any(|&e| e >= self.cap) {
            return Rational::zero();
        }
        self.coeffs[self.index_of(exps)].clone()
    }

    pub fn set_coeff(&mut self, exps: &[usize], c: Rational) -> Result<()> {
        if exps.len() != self.num_vars || exps.iter().any(|&e| e >= self.cap) {
            return Err(Error::ShapeMismatch(format!(
                "exponent {exps:?} outside ring with {} variables and cap {}",
                self.num_vars, self.cap
            )));
        }
        let idx = self.index_of(exps);
        self.coeffs[idx] = c;
        Ok(())
    }

    pub fn constant_term(&self) -> &Rational {
        &self.coeffs[0]
    }

    /// Exponent vector stored at a flat index.
    pub fn exponents(&self, mut idx: usize) -> Vec<usize> {
        let mut e = Vec::with_capacity(self.num_vars);
        for _ in 0..self.num_vars {
            e.push(idx % self.cap);
            idx /= self.cap;
        }
        e
    }

    /// Iterator over `(exponents, coefficient)` for the nonzero coefficients.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.exponents(i), c))
    }

    fn stride(&self, i: usize) -> usize {
        self.cap.pow(i as u32)
    }

    fn index_of(&self, exps: &[usize]) -> usize {
        exps.iter().rev().fold(0, |acc, &e| acc * self.cap + e)
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.num_vars != other.num_vars || self.cap != other.cap {
            return Err(Error::ShapeMismatch(format!(
                "({} vars, cap {}) vs ({} vars, cap {})",
                self.num_vars, self.cap, other.num_vars, other.cap
            )));
        }
        Ok(())
    }

    fn check_affine(&self, form: &Affine) -> Result<()> {
        if form.num_vars() != self.num_vars {
            return Err(Error::ShapeMismatch(format!(
                "affine form in {} variables applied to ring with {}",
                form.num_vars(),
                self.num_vars
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        Self {
            num_vars: self.num_vars,
            cap: self.cap,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c)
    }

    pub fn scale(&self, s: &Rational) -> Self {
        self.map(|c| c * s)
    }

    fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        Self {
            num_vars: self.num_vars,
            cap: self.cap,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Truncated product: monomials with any exponent `>= cap` are dropped.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let lhs: Vec<(usize, Vec<usize>)> = self.nonzero_indices();
        let rhs: Vec<(usize, Vec<usize>)> = other.nonzero_indices();
        let mut out = Self::zero(self.num_vars, self.cap);
        for (ia, ea) in &lhs {
            for (ib, eb) in &rhs {
                if ea.iter().zip(eb).all(|(x, y)| x + y < self.cap) {
                    // no carries, so flat indices add
                    let prod = &self.coeffs[*ia] * &other.coeffs[*ib];
                    out.coeffs[ia + ib] += prod;
                }
            }
        }
        Ok(out)
    }

    fn nonzero_indices(&self) -> Vec<(usize, Vec<usize>)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| (i, self.exponents(i)))
            .collect()
    }

    /// Inverse of a unit by the finite geometric series.
    ///
    /// Writes `p = c(1 - g)` with `g` nilpotent and sums `Σ_{m ≤ M} g^m` with
    /// `M = num_vars · (cap - 1)`.
    pub fn invert_unit(&self) -> Result<Self> {
        let c = self.constant_term().clone();
        if c.is_zero() {
            return Err(Error::NonUnit("constant term is zero".into()));
        }
        let c_inv = c.recip();
        // g = 1 - p / c
        let mut g = self.scale(&c_inv).neg();
        g.coeffs[0] = Rational::zero();

        let mut sum = Self::one(self.num_vars, self.cap);
        let mut power = sum.clone();
        let bound = self.num_vars * (self.cap - 1);
        for _ in 0..bound {
            power = power.mul(&g)?;
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power)?;
        }
        Ok(sum.scale(&c_inv))
    }

    /// `p^e` for `e >= 0`; negative exponents invert first and require a unit.
    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.invert_unit()? } else { self.clone() };
        let mut exp = e.unsigned_abs();
        let mut acc = Self::one(self.num_vars, self.cap);
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            exp >>= 1;
            if exp > 0 {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// Coefficient of `∏ h_i^{N-1}`: the pairing with the fundamental class
    /// of `(CP^{N-1})^{num_vars}`.
    pub fn projective_integral(&self, n: usize, num_vars: usize) -> Result<Rational> {
        if self.cap != n || self.num_vars != num_vars {
            return Err(Error::ShapeMismatch(format!(
                "integral over ({num_vars} copies of CP^{}) of element with {} vars, cap {}",
                n.saturating_sub(1),
                self.num_vars,
                self.cap
            )));
        }
        Ok(self.top_coefficient().clone())
    }

    /// Top coefficient of `self · other` without forming the product.
    pub fn pairing(&self, other: &Self) -> Result<Rational> {
        self.check_shape(other)?;
        let mut acc = Rational::zero();
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter().rev()) {
            if !a.is_zero() && !b.is_zero() {
                acc += a * b;
            }
        }
        Ok(acc)
    }

    pub fn top_coefficient(&self) -> &Rational {
        self.coeffs.last().expect("ring is never empty")
    }

    /// Multiplies by an affine form in `O(len · num_vars)`.
    pub fn mul_affine(&self, form: &Affine) -> Result<Self> {
        self.check_affine(form)?;
        let mut out = self.scale(&form.constant);
        if self.cap == 1 {
            return Ok(out);
        }
        let mut digits = vec![0usize; self.num_vars];
        for idx in 0..self.coeffs.len() {
            for (i, c) in form.coeffs.iter().enumerate() {
                if digits[i] > 0 && !c.is_zero() {
                    let src = &self.coeffs[idx - self.stride(i)];
                    if !src.is_zero() {
                        out.coeffs[idx] += c * src;
                    }
                }
            }
            self.increment(&mut digits);
        }
        Ok(out)
    }

    /// Divides by an affine form with nonzero constant term.
    ///
    /// Solves `Q · L = P` coefficient by coefficient in increasing index order:
    /// `c · Q_e = P_e - Σ_i c_i · Q_{e - u_i}`.
    pub fn div_affine(&self, form: &Affine) -> Result<Self> {
        self.check_affine(form)?;
        if !form.is_unit() {
            return Err(Error::NonUnit("affine divisor has zero constant term".into()));
        }
        let c_inv = form.constant.recip();
        let mut out = Self::zero(self.num_vars, self.cap);
        let mut digits = vec![0usize; self.num_vars];
        for idx in 0..self.coeffs.len() {
            let mut acc = self.coeffs[idx].clone();
            for (i, c) in form.coeffs.iter().enumerate() {
                if digits[i] > 0 && !c.is_zero() {
                    let prev = &out.coeffs[idx - self.stride(i)];
                    if !prev.is_zero() {
                        acc -= c * prev;
                    }
                }
            }
            if !acc.is_zero() {
                out.coeffs[idx] = acc * &c_inv;
            }
            self.increment(&mut digits);
        }
        Ok(out)
    }

    /// Multiplies by `form^e`; negative `e` divides and requires a unit.
    pub fn mul_affine_pow(&self, form: &Affine, e: i64) -> Result<Self> {
        let mut out = self.clone();
        for _ in 0..e.unsigned_abs() {
            out = if e >= 0 {
                out.mul_affine(form)?
            } else {
                out.div_affine(form)?
            };
        }
        Ok(out)
    }

    fn increment(&self, digits: &mut [usize]) {
        for d in digits.iter_mut() {
            *d += 1;
            if *d < self.cap {
                return;
            }
            *d = 0;
        }
    }
}
