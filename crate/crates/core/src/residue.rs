//! Two-point invariants as iterated residues of a rational function of
//! `z_0, …, z_d`:
//!
//! ```text
//! z_0^a (z_1 - z_0)^j z_d^(b+δ) ∏_{l=1}^{d} ∏_{j'} (j' z_{l-1} + (N - j') z_l)
//! ------------------------------------------------------------------------------
//!        ∏_{l=0}^{d} z_l^N · ∏_{l=1}^{d-1} N z_l (2 z_l - z_{l-1} - z_{l+1})
//! ```
//!
//! Each variable is integrated over a circle `|z_v| = r_v`. The radius profile
//! decides which of the poles `2 z_l = z_{l-1} + z_{l+1}` (and the poles they
//! spawn) are enclosed; that choice is the [`Regime`]. Residues are taken
//! exactly on factored terms, so no series truncation is involved.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::generate_weights;
use crate::combinatorics::DEFAULT_MAX_ATTEMPTS;
use crate::error::{Error, Result};
use crate::localization::{w_two_point, IntersectionQuery};
use crate::rational::{int, pq, ratio, Rational};

/// Radius profile of the integration torus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Interior radii `l(d - l)`, endpoints `|z_0| = 10^-4`, `|z_d| = 10^-8`.
    /// Every interior variable dominates its neighbours, which is the regime
    /// where `1/(2z_l - z_{l-1} - z_{l+1})` expands in powers of
    /// `(z_{l-1} + z_{l+1})/(2 z_l)`.
    #[default]
    CenterDominant,
    /// `r_i = 1000^i`.
    Ascending,
    /// `r_i = 1000^(d - i)`.
    Descending,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::CenterDominant, Regime::Ascending, Regime::Descending];

    pub fn radii(self, d: u32) -> Vec<Rational> {
        let big = int(1000);
        let pow = |e: u32| num_traits::pow(big.clone(), e as usize);
        match self {
            Regime::CenterDominant => (0..=d)
                .map(|l| {
                    if l == 0 {
                        ratio(1, 10_000)
                    } else if l == d {
                        ratio(1, 100_000_000)
                    } else {
                        int((l * (d - l)) as i64)
                    }
                })
                .collect(),
            Regime::Ascending => (0..=d).map(pow).collect(),
            Regime::Descending => (0..=d).map(|i| pow(d - i)).collect(),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::CenterDominant => "center-dominant",
            Regime::Ascending => "ascending",
            Regime::Descending => "descending",
        })
    }
}

/// Range of `j'` in the segment numerators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumeratorRange {
    /// `j' = 0..=N`.
    #[default]
    Closed,
    /// `j' = 1..=N`, dropping the `N z_l` factor of each segment.
    Printed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueConfig {
    pub regime: Regime,
    pub numerator: NumeratorRange,
    /// `δ`, added to the exponent of `z_d`.
    pub exponent_offset: i32,
}

impl ResidueConfig {
    /// Every configuration [`calibrate`] tries, in preference order.
    pub fn candidates() -> Vec<ResidueConfig> {
        let mut out = Vec::new();
        for regime in Regime::ALL {
            for numerator in [NumeratorRange::Closed, NumeratorRange::Printed] {
                for exponent_offset in [0, -1, 1] {
                    out.push(ResidueConfig {
                        regime,
                        numerator,
                        exponent_offset,
                    });
                }
            }
        }
        out
    }
}

type Form = Vec<Rational>;
type Mono = Vec<u32>;
type Poly = BTreeMap<Mono, Rational>;
type Denominator = BTreeMap<Form, u32>;
type Terms = BTreeMap<Denominator, Poly>;

/// Scales a nonzero linear form so its first nonzero coefficient is 1;
/// returns the removed scalar.
fn normalize(form: &[Rational]) -> (Rational, Form) {
    let lead = form
        .iter()
        .find(|c| !c.is_zero())
        .expect("linear forms in the integrand are nonzero")
        .clone();
    let out = form.iter().map(|c| c / &lead).collect();
    (lead, out)
}

fn unit(nv: usize, i: usize) -> Form {
    let mut f = vec![Rational::zero(); nv];
    f[i] = Rational::one();
    f
}

fn linear_poly(form: &[Rational]) -> Poly {
    let nv = form.len();
    let mut p = Poly::new();
    for (i, c) in form.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
        let mut e = vec![0; nv];
        e[i] = 1;
        p.insert(e, c.clone());
    }
    p
}

fn add_into(p: &mut Poly, e: Mono, c: Rational) {
    use std::collections::btree_map::Entry;
    match p.entry(e) {
        Entry::Vacant(slot) => {
            if !c.is_zero() {
                slot.insert(c);
            }
        }
        Entry::Occupied(mut slot) => {
            *slot.get_mut() += c;
            if slot.get().is_zero() {
                slot.remove();
            }
        }
    }
}

fn poly_mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = Poly::new();
    for (e1, c1) in p {
        for (e2, c2) in q {
            let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
            add_into(&mut out, e, c1 * c2);
        }
    }
    out
}

/// Generalized binomial `C(e, n)` for any integer `e`.
fn binom(e: i64, n: u32) -> Rational {
    let mut r = Rational::one();
    for i in 0..n as i64 {
        r = r * int(e - i) / int(i + 1);
    }
    r
}

/// Substitutes `z_v = p + t` into `numer` and returns the coefficients of
/// `t^0, …, t^(kmax-1)`.
fn substitute(numer: &Poly, v: usize, p: &[Rational], kmax: u32) -> Vec<Poly> {
    let nv = p.len();
    let lin = linear_poly(p);
    let mut powers: Vec<Poly> = vec![BTreeMap::from([(vec![0; nv], Rational::one())])];
    let mut out = vec![Poly::new(); kmax as usize];
    for (e, c) in numer {
        let ev = e[v];
        let mut base = e.clone();
        base[v] = 0;
        while powers.len() <= ev as usize {
            let next = poly_mul(powers.last().unwrap(), &lin);
            powers.push(next);
        }
        for n in 0..=ev.min(kmax - 1) {
            let coef = c * binom(ev as i64, n);
            for (e2, c2) in &powers[(ev - n) as usize] {
                let ee = base.iter().zip(e2).map(|(a, b)| a + b).collect();
                add_into(&mut out[n as usize], ee, &coef * c2);
            }
        }
    }
    out
}

fn add_term(terms: &mut Terms, den: Denominator, numer: &Poly, scale: &Rational) {
    let slot = terms.entry(den).or_default();
    for (e, c) in numer {
        add_into(slot, e.clone(), c * scale);
    }
}

/// A pole moving with the remaining variables: `(m, e, s, normalized M(p))`.
struct Moving {
    slope: Rational,
    exp: u32,
    scalar: Rational,
    form: Form,
}

fn encloses(q: &[Rational], radii: &[Rational], v: usize) -> Result<bool> {
    let mags: Vec<Rational> = q.iter().zip(radii).map(|(c, r)| c.abs() * r).collect();
    let total: Rational = mags.iter().cloned().sum();
    let biggest = mags.iter().max().cloned().unwrap_or_else(Rational::zero);
    let low = (&biggest - (&total - &biggest)).max(Rational::zero());
    if total < radii[v] {
        Ok(true)
    } else if low > radii[v] {
        Ok(false)
    } else {
        Err(Error::AmbiguousContour(format!(
            "pole z_{v} = {} meets the circle of radius {}",
            q.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            radii[v]
        )))
    }
}

/// Sum of residues in `z_v` over the poles inside `|z_v| = r_v`.
fn residue_in(terms: &Terms, v: usize, radii: &[Rational]) -> Result<Terms> {
    let mut out = Terms::new();
    for (den, numer) in terms {
        if numer.is_empty() {
            continue;
        }
        for (pole, &k) in den.iter().filter(|(f, _)| !f[v].is_zero()) {
            let c = &pole[v];
            let q: Form = pole
                .iter()
                .enumerate()
                .map(|(i, x)| if i == v { Rational::zero() } else { -x / c })
                .collect();
            if !encloses(&q, radii, v)? {
                continue;
            }
            let mut fixed = Denominator::new();
            let mut moving = Vec::new();
            for (m, &e) in den.iter().filter(|(f, _)| *f != pole) {
                if m[v].is_zero() {
                    fixed.insert(m.clone(), e);
                    continue;
                }
                let slope = m[v].clone();
                let at: Form = m
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if i == v { Rational::zero() } else { x + &slope * &q[i] })
                    .collect();
                let (scalar, form) = normalize(&at);
                moving.push(Moving {
                    slope,
                    exp: e,
                    scalar,
                    form,
                });
            }
            let num_t = substitute(numer, v, &q, k);
            let base_scale = num_traits::pow(c.recip(), k as usize);
            let mut ns = vec![0u32; moving.len()];
            distribute(&mut ns, 0, k - 1, &mut |ns| {
                let n0 = (k - 1 - ns.iter().sum::<u32>()) as usize;
                if num_t[n0].is_empty() {
                    return;
                }
                let mut scale = base_scale.clone();
                let mut nd = fixed.clone();
                for (mv, &n) in moving.iter().zip(ns.iter()) {
                    let power = mv.exp + n;
                    scale *= binom(-(mv.exp as i64), n) * num_traits::pow(mv.slope.clone(), n as usize);
                    scale /= num_traits::pow(mv.scalar.clone(), power as usize);
                    *nd.entry(mv.form.clone()).or_insert(0) += power;
                }
                add_term(&mut out, nd, &num_t[n0], &scale);
            });
        }
    }
    out.retain(|_, p| !p.is_empty());
    Ok(out)
}

/// Calls `f` on every `ns` with `ns[i..]` summing to at most `left`.
fn distribute(ns: &mut Vec<u32>, i: usize, left: u32, f: &mut impl FnMut(&[u32])) {
    if i == ns.len() {
        f(ns);
        return;
    }
    for n in 0..=left {
        ns[i] = n;
        distribute(ns, i + 1, left - n, f);
    }
    ns[i] = 0;
}

fn integrand(q: &IntersectionQuery, cfg: &ResidueConfig) -> Terms {
    let (n, d) = (q.n as i64, q.d as usize);
    let nv = d + 1;
    let mut den = Denominator::new();
    let mut mono = vec![0u32; nv];
    mono[0] = q.a;
    let zd_exp = q.b as i64 + cfg.exponent_offset as i64;
    if zd_exp >= 0 {
        mono[d] += zd_exp as u32;
    } else {
        den.insert(unit(nv, d), (-zd_exp) as u32);
    }
    let mut numer = Poly::from([(mono, Rational::one())]);
    let mut psi = vec![Rational::zero(); nv];
    psi[0] = int(-1);
    psi[1] = int(1);
    let psi = linear_poly(&psi);
    for _ in 0..q.j {
        numer = poly_mul(&numer, &psi);
    }
    let first = match cfg.numerator {
        NumeratorRange::Closed => 0,
        NumeratorRange::Printed => 1,
    };
    for l in 1..=d {
        for jp in first..=n {
            let mut f = vec![Rational::zero(); nv];
            f[l - 1] = int(jp);
            f[l] += int(n - jp);
            numer = poly_mul(&numer, &linear_poly(&f));
        }
    }
    let mut scale = Rational::one();
    for i in 0..nv {
        *den.entry(unit(nv, i)).or_insert(0) += q.n;
    }
    for l in 1..d {
        *den.entry(unit(nv, l)).or_insert(0) += 1;
        scale /= int(n);
        let mut f = vec![Rational::zero(); nv];
        f[l - 1] = int(-1);
        f[l] = int(2);
        f[l + 1] = int(-1);
        let (s, form) = normalize(&f);
        scale /= s;
        *den.entry(form).or_insert(0) += 1;
    }
    let mut terms = Terms::new();
    add_term(&mut terms, den, &numer, &scale);
    terms
}

/// Interior variables first, then `z_0`, then `z_d`.
pub fn integration_order(d: u32) -> Vec<usize> {
    let d = d as usize;
    (1..d).chain([0, d]).collect()
}

/// `w(σ_j(O_{h^a}) O_{h^b})_{0,d}` by iterated residues.
pub fn w_two_point_residue(q: &IntersectionQuery, cfg: &ResidueConfig) -> Result<Rational> {
    if q.marked {
        return Err(Error::InvalidArgument("the residue route has no marked form".into()));
    }
    if q.k != q.n {
        return Err(Error::InvalidArgument(format!(
            "the residue route needs k = N, got k = {} and N = {}",
            q.k, q.n
        )));
    }
    q.validate()?;
    let radii = cfg.regime.radii(q.d);
    let mut terms = integrand(q, cfg);
    for v in integration_order(q.d) {
        terms = residue_in(&terms, v, &radii)?;
    }
    let origin = vec![0u32; q.d as usize + 1];
    Ok(terms
        .into_iter()
        .filter(|(den, _)| den.is_empty())
        .filter_map(|(_, p)| p.get(&origin).cloned())
        .sum())
}

/// All degree-matched `(j, a, b)` with `j, a >= 0`, `b >= -1`, for `k = N`.
pub fn degree_matched(n: u32) -> Vec<(u32, u32, i32)> {
    let total = n as i32 - 3;
    let mut out = Vec::new();
    for j in 0..=(total + 1).max(0) as u32 {
        for a in 0..=(total + 1 - j as i32).max(0) as u32 {
            let b = total - j as i32 - a as i32;
            if b >= -1 {
                out.push((j, a, b));
            }
        }
    }
    out
}

/// One probe outcome for one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    #[serde(flatten)]
    pub config: ResidueConfig,
    pub pass: bool,
    /// First mismatch or contour error, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeValue {
    pub j: u32,
    pub a: u32,
    pub b: i32,
    #[serde(with = "pq")]
    pub localization: Rational,
}

/// Calibration record, written as the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(rename = "N")]
    pub n: u32,
    pub d: u32,
    pub seed: u64,
    pub probes: Vec<ProbeValue>,
    pub candidates: Vec<CandidateOutcome>,
    pub selected: Option<ResidueConfig>,
    pub pass: bool,
}

pub const CALIBRATION_MAX_DEGREE: u32 = 3;

/// Tries every candidate configuration against localization on all
/// degree-matched probes and selects the first that agrees everywhere.
pub fn calibrate(n: u32, d: u32, seed: u64) -> Result<Calibration> {
    if !(1..=CALIBRATION_MAX_DEGREE).contains(&d) {
        return Err(Error::InvalidArgument(format!(
            "calibration degree must be in 1..={CALIBRATION_MAX_DEGREE}, got {d}"
        )));
    }
    let weights = generate_weights(seed, d, DEFAULT_MAX_ATTEMPTS)?;
    let probes = degree_matched(n)
        .into_iter()
        .map(|(j, a, b)| {
            let q = IntersectionQuery::two_point(n, d, j, a, b);
            Ok(ProbeValue {
                j,
                a,
                b,
                localization: w_two_point(&q, &weights)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    for config in ResidueConfig::candidates() {
        let mut detail = None;
        for p in &probes {
            let q = IntersectionQuery::two_point(n, d, p.j, p.a, p.b);
            match w_two_point_residue(&q, &config) {
                Ok(v) if v == p.localization => {}
                Ok(v) => {
                    detail = Some(format!("(j,a,b)=({},{},{}): residue {v}, localization {}", p.j, p.a, p.b, p.localization));
                    break;
                }
                Err(e) => {
                    detail = Some(e.to_string());
                    break;
                }
            }
        }
        candidates.push(CandidateOutcome {
            config,
            pass: detail.is_none(),
            detail,
        });
    }
    let selected = candidates.iter().find(|c| c.pass).map(|c| c.config);
    Ok(Calibration {
        n,
        d,
        seed,
        probes,
        candidates,
        selected,
        pass: selected.is_some(),
    })
}

/// The calibrated configuration, or a calibration error.
pub fn calibrated_config(n: u32, d: u32, seed: u64) -> Result<ResidueConfig> {
    calibrate(n, d, seed)?
        .selected
        .ok_or_else(|| Error::Calibration(format!("no residue configuration matches localization for N={n}, d={d}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u32, d: u32, j: u32, a: u32, b: i32) -> IntersectionQuery {
        IntersectionQuery::two_point(n, d, j, a, b)
    }

    #[test]
    fn degree_one_spot_value() {
        let cfg = ResidueConfig::default();
        assert_eq!(w_two_point_residue(&q(5, 1, 2, 0, 0), &cfg).unwrap(), int(-5750));
        assert_eq!(w_two_point_residue(&q(5, 1, 1, 2, -1), &cfg).unwrap(), int(3250));
        assert_eq!(w_two_point_residue(&q(5, 1, 0, 3, -1), &cfg).unwrap(), int(600));
    }

    #[test]
    fn degree_one_all_regimes_agree() {
        for regime in Regime::ALL {
            let cfg = ResidueConfig {
                regime,
                ..Default::default()
            };
            assert_eq!(w_two_point_residue(&q(4, 1, 0, 0, 1), &cfg).unwrap(), int(416));
        }
    }

    #[test]
    fn degree_mismatch_vanishes() {
        let cfg = ResidueConfig::default();
        assert_eq!(w_two_point_residue(&q(5, 2, 0, 5, 0).forced(), &cfg).unwrap(), int(0));
        assert_eq!(w_two_point_residue(&q(5, 2, 1, 0, 0).forced(), &cfg).unwrap(), int(0));
    }

    #[test]
    fn degree_three_matches_reference() {
        let cfg = ResidueConfig::default();
        assert_eq!(
            w_two_point_residue(&q(4, 3, 1, 1, -1), &cfg).unwrap(),
            ratio(21050240, 9)
        );
        assert_eq!(w_two_point_residue(&q(4, 3, 0, 2, -1), &cfg).unwrap(), int(492800));
    }

    #[test]
    fn printed_numerator_is_off() {
        let cfg = ResidueConfig {
            numerator: NumeratorRange::Printed,
            ..Default::default()
        };
        assert_ne!(w_two_point_residue(&q(5, 1, 2, 0, 0), &cfg).unwrap(), int(-5750));
    }

    #[test]
    fn rejects_marked_and_non_cy() {
        let cfg = ResidueConfig::default();
        assert!(w_two_point_residue(&IntersectionQuery::marked(5, 1, 1, 2, -1), &cfg).is_err());
        assert!(w_two_point_residue(&q(5, 1, 1, 2, 0).with_hypersurface_degree(4), &cfg).is_err());
    }

    #[test]
    fn probe_grid() {
        assert_eq!(degree_matched(4), vec![(0, 0, 1), (0, 1, 0), (0, 2, -1), (1, 0, 0), (1, 1, -1), (2, 0, -1)]);
    }

    #[test]
    fn calibration_selects_closed_center() {
        let cal = calibrate(4, 2, 1).unwrap();
        assert_eq!(cal.selected, Some(ResidueConfig::default()));
        let printed = cal
            .candidates
            .iter()
            .filter(|c| c.config.numerator == NumeratorRange::Printed);
        assert!(printed.into_iter().all(|c| !c.pass));
    }
}
