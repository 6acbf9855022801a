//! Ordered compositions of the degree and generic equivariant weights.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{int, pq_vec, ratio, Rational};

/// An ordered composition `(d_1, …, d_l)` of `d`, with prefix sums
/// `Δ_0 = 0, Δ_i = d_1 + … + d_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition {
    parts: Vec<u32>,
    prefix: Vec<u32>,
}

impl Composition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "composition parts must be positive and nonempty, got {parts:?}"
            )));
        }
        let mut prefix = Vec::with_capacity(parts.len() + 1);
        prefix.push(0);
        for p in &parts {
            prefix.push(prefix.last().unwrap() + p);
        }
        Ok(Self { parts, prefix })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// `(Δ_0, …, Δ_l)`.
    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    /// Number of parts `l`.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn degree(&self) -> u32 {
        *self.prefix.last().unwrap()
    }

    /// `d_i` for `1 <= i <= l`, and `0` for `i = 0` or `i = l + 1`.
    pub fn part(&self, i: usize) -> u32 {
        if i == 0 || i > self.len() {
            0
        } else {
            self.parts[i - 1]
        }
    }

    /// `d_1 ⋯ d_l`, the order of the orbifold isotropy group.
    pub fn isotropy_order(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).product()
    }
}

impl std::fmt::Display for Composition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All `2^(d-1)` ordered compositions of `d`, lexicographic by parts.
pub fn compositions(d: u32) -> Result<Vec<Composition>> {
    if d < 1 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    fn rec(rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Composition>) {
        if rem == 0 {
            out.push(Composition::new(cur.clone()).expect("parts are positive"));
            return;
        }
        for first in 1..=rem {
            cur.push(first);
            rec(rem - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(1usize << (d - 1).min(30));
    rec(d, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Equivariant weights `λ_0, …, λ_d` together with the seed that drew them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub seed: u64,
    #[serde(with = "pq_vec")]
    pub lambdas: Vec<Rational>,
}

impl WeightSpec {
    pub fn new(seed: u64, lambdas: Vec<Rational>) -> Self {
        Self { seed, lambdas }
    }

    /// The degree these weights serve, `len - 1`.
    pub fn degree(&self) -> u32 {
        self.lambdas.len().saturating_sub(1) as u32
    }

    pub fn lambda(&self, r: u32) -> &Rational {
        &self.lambdas[r as usize]
    }
}

/// SplitMix64, the documented generator behind [`generate_weights`].
#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// A rational `p/q` with `1 <= p, q <= bound`.
    pub fn next_rational(&mut self, bound: u64) -> Rational {
        let p = 1 + self.next_u64() % bound;
        let q = 1 + self.next_u64() % bound;
        ratio(p as i64, q as i64)
    }
}

pub const WEIGHT_HEIGHT: u64 = 10_000;
pub const DEFAULT_MAX_ATTEMPTS: u32 = 64;

/// Draws weights for degree `d` from a SplitMix64 stream seeded with `seed`.
///
/// Each attempt consumes `2(d + 1)` words from the stream; draws failing
/// [`validate_weights`] are discarded and the stream continues.
pub fn generate_weights(seed: u64, d: u32, max_attempts: u32) -> Result<WeightSpec> {
    if d < 1 {
        return Err(Error::InvalidArgument("degree must be at least 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    for _ in 0..max_attempts {
        let lambdas = (0..=d).map(|_| rng.next_rational(WEIGHT_HEIGHT)).collect();
        let spec = WeightSpec::new(seed, lambdas);
        if validate_weights(&spec, d)?.is_valid() {
            return Ok(spec);
        }
    }
    Err(Error::DegenerateWeights(format!(
        "no generic draw for degree {d} in {max_attempts} attempts (seed {seed})"
    )))
}

/// One failed genericity condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `λ_i = λ_j`.
    Duplicate { i: u32, j: u32 },
    /// `λ_r = 0` for some `r >= 1`.
    Zero { r: u32 },
    /// A normal-bundle weight vanishes at the interior point `Δ_{i-1} + n`.
    Interior { composition: Vec<u32>, i: u32, n: u32 },
    /// The node-smoothing weight at the `i`-th break point vanishes.
    Smoothing { composition: Vec<u32>, i: u32 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WeightReport {
    pub violations: Vec<Violation>,
}

impl WeightReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every nondegeneracy condition the localization denominators need.
pub fn validate_weights(w: &WeightSpec, d: u32) -> Result<WeightReport> {
    if w.lambdas.len() != d as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} weights for degree {d}, got {}",
            d + 1,
            w.lambdas.len()
        )));
    }
    let lam = &w.lambdas;
    let mut violations = Vec::new();
    for i in 0..=d {
        for j in i + 1..=d {
            if lam[i as usize] == lam[j as usize] {
                violations.push(Violation::Duplicate { i, j });
            }
        }
    }
    for r in 1..=d {
        if lam[r as usize].is_zero() {
            violations.push(Violation::Zero { r });
        }
    }
    for c in compositions(d)? {
        let pre = c.prefix();
        let l = c.len();
        for i in 1..=l {
            let di = c.part(i);
            let (start, end) = (&lam[pre[i - 1] as usize], &lam[pre[i] as usize]);
            for n in 1..di {
                let interp = (start * int((di - n) as i64) + end * int(n as i64)) / int(di as i64);
                if interp == lam[(pre[i - 1] + n) as usize] {
                    violations.push(Violation::Interior {
                        composition: c.parts().to_vec(),
                        i: i as u32,
                        n,
                    });
                }
            }
        }
        for i in 1..l {
            let here = &lam[pre[i] as usize];
            let left = (here - &lam[pre[i - 1] as usize]) / int(c.part(i) as i64);
            let right = (here - &lam[pre[i + 1] as usize]) / int(c.part(i + 1) as i64);
            if (left + right).is_zero() {
                violations.push(Violation::Smoothing {
                    composition: c.parts().to_vec(),
                    i: i as u32,
                });
            }
        }
    }
    Ok(WeightReport { violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(cs: &[Composition]) -> Vec<Vec<u32>> {
        cs.iter().map(|c| c.parts().to_vec()).collect()
    }

    #[test]
    fn small_compositions() {
        assert_eq!(parts(&compositions(1).unwrap()), vec![vec![1]]);
        assert_eq!(
            parts(&compositions(3).unwrap()),
            vec![vec![1, 1, 1], vec![1, 2], vec![2, 1], vec![3]]
        );
        assert_eq!(compositions(6).unwrap().len(), 32);
        assert!(compositions(0).is_err());
    }

    #[test]
    fn prefix_sums() {
        let c = Composition::new(vec![2, 1, 3]).unwrap();
        assert_eq!(c.prefix(), &[0, 2, 3, 6]);
        assert_eq!(c.degree(), 6);
        assert_eq!(c.part(0), 0);
        assert_eq!(c.part(4), 0);
        assert_eq!(c.isotropy_order(), 6);
        assert!(Composition::new(vec![1, 0]).is_err());
        assert_eq!(c.to_string(), "(2,1,3)");
    }

    #[test]
    fn degree_one_weights() {
        for seed in [0, 1, 42, u64::MAX] {
            let w = generate_weights(seed, 1, DEFAULT_MAX_ATTEMPTS).unwrap();
            assert_eq!(w.lambdas.len(), 2);
            assert_ne!(w.lambdas[0], w.lambdas[1]);
            assert!(w.lambdas.iter().all(|l| !l.is_zero()));
        }
    }

    #[test]
    fn deterministic_draws() {
        let a = generate_weights(7, 4, DEFAULT_MAX_ATTEMPTS).unwrap();
        let b = generate_weights(7, 4, DEFAULT_MAX_ATTEMPTS).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_weights(8, 4, DEFAULT_MAX_ATTEMPTS).unwrap());
    }

    #[test]
    fn splitmix_reference_values() {
        // first outputs of SplitMix64 seeded with 0
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn arithmetic_progression_is_degenerate() {
        // λ_r = r makes the interpolated weight equal λ_{Δ+n} identically
        let w = WeightSpec::new(0, (0..=2).map(int).collect());
        let report = validate_weights(&w, 2).unwrap();
        assert!(!report.is_valid());
        assert!(report.violations.contains(&Violation::Interior {
            composition: vec![2],
            i: 1,
            n: 1
        }));
    }

    #[test]
    fn duplicate_weight_is_reported() {
        let w = WeightSpec::new(0, vec![int(3), ratio(1, 2), int(3)]);
        let report = validate_weights(&w, 2).unwrap();
        assert!(report.violations.contains(&Violation::Duplicate { i: 0, j: 2 }));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let w = WeightSpec::new(0, vec![int(1), int(2)]);
        assert!(validate_weights(&w, 3).is_err());
    }

    #[test]
    fn json_form_uses_pq_strings() {
        let w = WeightSpec::new(9, vec![ratio(1, 2), int(-3)]);
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"seed":9,"lambdas":["1/2","-3/1"]}"#);
        let back: WeightSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, w);
    }
}
