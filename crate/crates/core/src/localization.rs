//! Fixed-point evaluation of the two-point invariant `w(σ_j(O_{h^a}) O_{h^b})_{0,d}`
//! and the marked invariant `w(σ_j(O_{h^a}) O_{h^b} | O_h)_{0,d}`.
//!
//! Fixed loci are indexed by ordered compositions `(d_1, …, d_l)` of `d`; each
//! is a product `∏_{i=0}^{l} (CP^{N-1})_i` with hyperplane classes `h_i`, and
//! contributes the projective integral of its integrand divided by `d_1 ⋯ d_l`.
//! Throughout, `p_i` denotes the equivariant point class `h_i + λ_{Δ_i}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Affine, TruncatedPoly};
use crate::combinatorics::{compositions, Composition, WeightSpec};
use crate::error::{Error, Result};
use crate::rational::{int, pq, ratio, Rational};

/// Which intersection number to compute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntersectionQuery {
    /// Ambient `CP^{N-1}`.
    #[serde(rename = "N")]
    pub n: u32,
    /// Hypersurface degree; `k = N` is the Calabi-Yau case.
    pub k: u32,
    pub d: u32,
    /// Power of the ψ-class at the first marked point.
    pub j: u32,
    pub a: u32,
    /// `-1` selects the bundle twisted down at `∞`.
    pub b: i32,
    /// `true` for the (2+1)-pointed invariant.
    pub marked: bool,
    /// Skip the selection-rule check.
    #[serde(skip)]
    pub force: bool,
    /// Include the head limit locus so that `j = 0` marked invariants are defined.
    #[serde(skip)]
    pub j0_extension: bool,
}

impl IntersectionQuery {
    pub fn two_point(n: u32, d: u32, j: u32, a: u32, b: i32) -> Self {
        Self {
            n,
            k: n,
            d,
            j,
            a,
            b,
            marked: false,
            force: false,
            j0_extension: false,
        }
    }

    pub fn marked(n: u32, d: u32, j: u32, a: u32, b: i32) -> Self {
        Self {
            marked: true,
            ..Self::two_point(n, d, j, a, b)
        }
    }

    pub fn with_hypersurface_degree(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }

    pub fn with_j0_extension(mut self) -> Self {
        self.j0_extension = true;
        self
    }

    /// The same insertions as a two-point query.
    pub fn as_two_point(mut self) -> Self {
        self.marked = false;
        self
    }

    /// `N - 3 + (N - k)·d`, the total insertion degree the dimension count allows.
    pub fn expected_insertion_degree(&self) -> i64 {
        self.n as i64 - 3 + (self.n as i64 - self.k as i64) * self.d as i64
    }

    pub fn insertion_degree(&self) -> i64 {
        self.j as i64 + self.a as i64 + self.b as i64
    }

    pub fn satisfies_selection_rule(&self) -> bool {
        self.insertion_degree() == self.expected_insertion_degree()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("N must be at least 3, got {}", self.n)));
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("hypersurface degree k must be at least 1".into()));
        }
        if self.d < 1 {
            return Err(Error::InvalidArgument("degree d must be at least 1".into()));
        }
        if self.b < -1 {
            return Err(Error::InvalidArgument(format!("b must be at least -1, got {}", self.b)));
        }
        if self.marked && self.j == 0 && !self.j0_extension {
            return Err(Error::InvalidArgument(
                "marked invariants need j >= 1 unless the j = 0 extension is enabled".into(),
            ));
        }
        if !self.force && !self.satisfies_selection_rule() {
            return Err(Error::SelectionRule {
                actual: self.insertion_degree(),
                expected: self.expected_insertion_degree(),
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for IntersectionQuery {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}(N={},k={},d={},j={},a={},b={})",
            if self.marked { "marked" } else { "two_point" },
            self.n,
            self.k,
            self.d,
            self.j,
            self.a,
            self.b
        )
    }
}

/// The contribution of one fixed locus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocusTerm {
    pub composition: Composition,
    /// Position of the light marked point (`1..=l`); absent for two-point loci.
    pub k_index: Option<usize>,
    #[serde(with = "pq")]
    pub value: Rational,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    #[default]
    Parallel,
}

/// Result of a localization sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub value: Rational,
    /// Number of fixed-locus compositions summed over.
    pub compositions: usize,
}

/// Affine forms attached to one composition.
struct Locus<'a> {
    comp: &'a Composition,
    weights: &'a WeightSpec,
}

impl<'a> Locus<'a> {
    fn new(comp: &'a Composition, weights: &'a WeightSpec) -> Result<Self> {
        if weights.lambdas.len() != comp.degree() as usize + 1 {
            return Err(Error::InvalidArgument(format!(
                "composition {comp} needs {} weights, got {}",
                comp.degree() + 1,
                weights.lambdas.len()
            )));
        }
        Ok(Self { comp, weights })
    }

    fn num_vars(&self) -> usize {
        self.comp.len() + 1
    }

    fn l(&self) -> usize {
        self.comp.len()
    }

    fn part(&self, i: usize) -> Rational {
        int(self.comp.part(i) as i64)
    }

    /// `h_i + λ_{Δ_i}`.
    fn point(&self, i: usize) -> Affine {
        let delta = self.comp.prefix()[i];
        Affine::shifted_var(self.num_vars(), i, self.weights.lambda(delta).clone())
    }

    fn psi(&self) -> Affine {
        self.point(1).sub(&self.point(0)).scale(&self.part(1).recip())
    }

    /// `((k d_i - m) p_{i-1} + m p_i) / d_i` for `m = 0..=k d_i`, over all segments.
    fn obstruction_factors(&self, k: u32) -> Vec<Affine> {
        let mut out = Vec::new();
        for i in 1..=self.l() {
            let di = self.comp.part(i);
            let (left, right) = (self.point(i - 1), self.point(i));
            let top = k * di;
            for m in 0..=top {
                let f = left
                    .scale(&ratio((top - m) as i64, di as i64))
                    .add(&right.scale(&ratio(m as i64, di as i64)));
                out.push(f);
            }
        }
        out
    }

    /// `k · p_i` for the interior break points `i = 1..l-1`.
    fn gluing_factors(&self, k: u32) -> Vec<Affine> {
        (1..self.l()).map(|i| self.point(i).scale(&int(k as i64))).collect()
    }

    /// `((d_i - n) p_{i-1} + n p_i)/d_i - λ_{Δ_{i-1}+n}`, each to be raised to `-N`.
    fn interior_factors(&self) -> Vec<Affine> {
        let pre = self.comp.prefix();
        let mut out = Vec::new();
        for i in 1..=self.l() {
            let di = self.comp.part(i);
            let (left, right) = (self.point(i - 1), self.point(i));
            for n in 1..di {
                let f = left
                    .scale(&ratio((di - n) as i64, di as i64))
                    .add(&right.scale(&ratio(n as i64, di as i64)))
                    .shift(&-self.weights.lambda(pre[i - 1] + n));
                out.push(f);
            }
        }
        out
    }

    /// `(p_i - p_{i-1})/d_i + (p_i - p_{i+1})/d_{i+1}` for `i = 1..l-1`.
    fn smoothing_factors(&self) -> Vec<Affine> {
        (1..self.l())
            .map(|i| {
                let here = self.point(i);
                here.sub(&self.point(i - 1))
                    .scale(&self.part(i).recip())
                    .add(&here.sub(&self.point(i + 1)).scale(&self.part(i + 1).recip()))
            })
            .collect()
    }

    fn one(&self, n: usize) -> TruncatedPoly {
        TruncatedPoly::one(self.num_vars(), n)
    }

    /// `d_k p_k / (p_k - p_{k-1}) + d_{k+1} p_k / (p_k - p_{k+1})`, with `d_{l+1} = 0`.
    fn marked_factor(&self, k_index: usize, n: usize) -> Result<TruncatedPoly> {
        self.times_marked(&self.one(n), k_index)
    }

    /// `base` times the marked factor at `k_index`, by affine products and quotients.
    fn times_marked(&self, base: &TruncatedPoly, k_index: usize) -> Result<TruncatedPoly> {
        let l = self.l();
        if k_index < 1 || k_index > l {
            return Err(Error::InvalidArgument(format!(
                "marked point index {k_index} outside 1..={l}"
            )));
        }
        let here = self.point(k_index);
        let mut out = base
            .mul_affine(&here.scale(&self.part(k_index)))?
            .div_affine(&here.sub(&self.point(k_index - 1)))
            .map_err(degenerate)?;
        if k_index < l {
            let next = base
                .mul_affine(&here.scale(&self.part(k_index + 1)))?
                .div_affine(&here.sub(&self.point(k_index + 1)))
                .map_err(degenerate)?;
            out = out.add(&next)?;
        }
        Ok(out)
    }

    /// `base` times `d_1 p_0 / (p_0 - p_1)`, the light point on the head bubble.
    fn times_head(&self, base: &TruncatedPoly) -> Result<TruncatedPoly> {
        let p0 = self.point(0);
        base.mul_affine(&p0.scale(&self.part(1)))?
            .div_affine(&p0.sub(&self.point(1)))
            .map_err(degenerate)
    }

    /// `base` times `d + d_1 p_0 / (p_1 - p_0)`.
    fn times_collapsed(&self, base: &TruncatedPoly) -> Result<TruncatedPoly> {
        let p0 = self.point(0);
        base.mul_affine(&p0.scale(&self.part(1)))?
            .div_affine(&self.point(1).sub(&p0))
            .map_err(degenerate)?
            .add(&base.scale(&int(self.comp.degree() as i64)))
    }

    /// `ψ^j p_0^a p_l^b`, the query-dependent part of the integrand.
    fn insertion_part(&self, q: &IntersectionQuery) -> Result<TruncatedPoly> {
        self.one(q.n as usize)
            .mul_affine_pow(&self.psi(), q.j as i64)?
            .mul_affine_pow(&self.point(0), q.a as i64)?
            .mul_affine_pow(&self.point(self.l()), q.b as i64)
            .map_err(degenerate)
    }

    /// `base` times the obstruction class and the inverse normal-bundle class.
    fn times_bundles(&self, base: TruncatedPoly, n: u32, k: u32) -> Result<TruncatedPoly> {
        let mut p = base;
        for f in self.obstruction_factors(k) {
            p = p.mul_affine(&f)?;
        }
        for f in self.gluing_factors(k) {
            p = p.div_affine(&f).map_err(degenerate)?;
        }
        for f in self.interior_factors() {
            p = p.mul_affine_pow(&f, -(n as i64)).map_err(degenerate)?;
        }
        for f in self.smoothing_factors() {
            p = p.div_affine(&f).map_err(degenerate)?;
        }
        Ok(p)
    }

    /// The full two-point integrand.
    fn integrand(&self, q: &IntersectionQuery) -> Result<TruncatedPoly> {
        self.times_bundles(self.insertion_part(q)?, q.n, q.k)
    }

    /// `∫ bundle · light / (d_1 ⋯ d_l)`, reading only the top coefficient.
    fn pair(&self, bundle: &TruncatedPoly, light: &TruncatedPoly) -> Result<Rational> {
        Ok(bundle.pairing(light)? / int(self.comp.isotropy_order() as i64))
    }

    fn integrate(&self, p: &TruncatedPoly, n: usize) -> Result<Rational> {
        let raw = p.projective_integral(n, self.num_vars())?;
        Ok(raw / int(self.comp.isotropy_order() as i64))
    }
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::NonUnit(msg) => Error::DegenerateWeights(msg),
        other => other,
    }
}

/// `((h_1 + λ_{Δ_1} - h_0 - λ_{Δ_0}) / d_1)^j`, the ψ-class restricted to the locus.
pub fn psi_power(c: &Composition, w: &WeightSpec, j: u32, n: usize) -> Result<TruncatedPoly> {
    let locus = Locus::new(c, w)?;
    locus.one(n).mul_affine_pow(&locus.psi(), j as i64)
}

/// Equivariant Euler class of the obstruction bundle restricted to the locus:
/// `∏_i ∏_{m=0}^{k d_i} ((k d_i - m) p_{i-1} + m p_i)/d_i  /  ∏_{i=1}^{l-1} k p_i`.
pub fn euler_obstruction(c: &Composition, q: &IntersectionQuery, w: &WeightSpec) -> Result<TruncatedPoly> {
    let locus = Locus::new(c, w)?;
    let mut p = locus.one(q.n as usize);
    for f in locus.obstruction_factors(q.k) {
        p = p.mul_affine(&f)?;
    }
    let mut den = locus.one(q.n as usize);
    for f in locus.gluing_factors(q.k) {
        den = den.mul_affine(&f)?;
    }
    p.mul(&den.invert_unit().map_err(degenerate)?)
}

/// Inverse Euler class of the normal bundle: the `N`-th powers of the interior
/// weights of each segment and the node-smoothing weights, inverted.
pub fn normal_euler_inverse(c: &Composition, w: &WeightSpec, n: usize) -> Result<TruncatedPoly> {
    let locus = Locus::new(c, w)?;
    let mut den = locus.one(n);
    for f in locus.interior_factors() {
        den = den.mul(&TruncatedPoly::from_affine(&f, n).pow(n as i64)?)?;
    }
    for f in locus.smoothing_factors() {
        den = den.mul_affine(&f)?;
    }
    den.invert_unit().map_err(degenerate)
}

/// The un-inverted normal-bundle product, for multiply-back checks.
pub fn normal_euler(c: &Composition, w: &WeightSpec, n: usize) -> Result<TruncatedPoly> {
    let locus = Locus::new(c, w)?;
    let mut p = locus.one(n);
    for f in locus.interior_factors() {
        p = p.mul_affine_pow(&f, n as i64)?;
    }
    for f in locus.smoothing_factors() {
        p = p.mul_affine(&f)?;
    }
    Ok(p)
}

/// Contribution of the light marked point on the bubble at break point `k_index`
/// after integrating over the bubble.
pub fn marked_insertion_factor(
    c: &Composition,
    k_index: usize,
    w: &WeightSpec,
    n: usize,
) -> Result<TruncatedPoly> {
    Locus::new(c, w)?.marked_factor(k_index, n)
}

/// Both sides of the marked-factor sum identity:
/// `Σ_k marked_insertion_factor(c, k)` and `d + d_1 p_0 / (p_1 - p_0)`.
pub fn lemma2_sides(c: &Composition, w: &WeightSpec, n: usize) -> Result<(TruncatedPoly, TruncatedPoly)> {
    let locus = Locus::new(c, w)?;
    let mut lhs = TruncatedPoly::zero(locus.num_vars(), n);
    for k in 1..=locus.l() {
        lhs = lhs.add(&locus.marked_factor(k, n)?)?;
    }
    let rhs = locus.times_collapsed(&locus.one(n))?;
    Ok((lhs, rhs))
}

pub fn lemma2_check(c: &Composition, w: &WeightSpec, n: usize) -> Result<bool> {
    let (lhs, rhs) = lemma2_sides(c, w, n)?;
    Ok(lhs == rhs)
}

/// The two-point integrand of one locus, assembled by generic ring products of
/// the separately exposed factors.
pub fn locus_integrand(c: &Composition, q: &IntersectionQuery, w: &WeightSpec) -> Result<TruncatedPoly> {
    let n = q.n as usize;
    let locus = Locus::new(c, w)?;
    let ev = locus
        .one(n)
        .mul_affine_pow(&locus.point(0), q.a as i64)?
        .mul(&TruncatedPoly::from_affine(&locus.point(locus.l()), n).pow(q.b as i64).map_err(degenerate)?)?;
    psi_power(c, w, q.j, n)?
        .mul(&ev)?
        .mul(&euler_obstruction(c, q, w)?)?
        .mul(&normal_euler_inverse(c, w, n)?)
}

fn check_weights(q: &IntersectionQuery, w: &WeightSpec) -> Result<()> {
    if w.lambdas.len() != q.d as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "degree {} needs {} weights, got {}",
            q.d,
            q.d + 1,
            w.lambdas.len()
        )));
    }
    Ok(())
}

type BundleKey = (Composition, u32, u32, Vec<Rational>);

/// Memoized bundle parts of the integrand, keyed by composition, `N`, `k` and
/// weights. Queries differing only in `(j, a, b, marked)` share them.
#[derive(Debug, Default)]
pub struct LocusCache {
    entries: Mutex<HashMap<BundleKey, Arc<TruncatedPoly>>>,
}

impl LocusCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn bundle(&self, locus: &Locus<'_>, n: u32, k: u32) -> Result<Arc<TruncatedPoly>> {
        let key = (locus.comp.clone(), n, k, locus.weights.lambdas.clone());
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let value = Arc::new(locus.times_bundles(locus.one(n as usize), n, k)?);
        self.entries
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::clone(&value));
        Ok(value)
    }
}

/// Per-locus contributions, in composition order (then by marked position).
pub fn locus_terms(q: &IntersectionQuery, w: &WeightSpec, schedule: Schedule) -> Result<Vec<LocusTerm>> {
    locus_terms_cached(q, w, schedule, &LocusCache::new())
}

pub fn locus_terms_cached(
    q: &IntersectionQuery,
    w: &WeightSpec,
    schedule: Schedule,
    cache: &LocusCache,
) -> Result<Vec<LocusTerm>> {
    q.validate()?;
    check_weights(q, w)?;
    let comps = compositions(q.d)?;
    let eval = |c: &Composition| -> Result<Vec<LocusTerm>> {
        let locus = Locus::new(c, w)?;
        let bundle = cache.bundle(&locus, q.n, q.k)?;
        let light = locus.insertion_part(q)?;
        if !q.marked {
            return Ok(vec![LocusTerm {
                composition: c.clone(),
                k_index: None,
                value: locus.pair(&bundle, &light)?,
            }]);
        }
        let mut out = Vec::with_capacity(locus.l() + 1);
        if q.j == 0 && q.j0_extension {
            out.push(LocusTerm {
                composition: c.clone(),
                k_index: Some(0),
                value: locus.pair(&bundle, &locus.times_head(&light)?)?,
            });
        }
        for k in 1..=locus.l() {
            out.push(LocusTerm {
                composition: c.clone(),
                k_index: Some(k),
                value: locus.pair(&bundle, &locus.times_marked(&light, k)?)?,
            });
        }
        Ok(out)
    };
    let nested: Vec<Vec<LocusTerm>> = match schedule {
        Schedule::Serial => comps.iter().map(eval).collect::<Result<_>>()?,
        Schedule::Parallel => comps.par_iter().map(eval).collect::<Result<_>>()?,
    };
    Ok(nested.into_iter().flatten().collect())
}

/// Sums the fixed-locus contributions for either kind of query.
pub fn evaluate(q: &IntersectionQuery, w: &WeightSpec, schedule: Schedule) -> Result<Evaluation> {
    evaluate_cached(q, w, schedule, &LocusCache::new())
}

pub fn evaluate_cached(
    q: &IntersectionQuery,
    w: &WeightSpec,
    schedule: Schedule,
    cache: &LocusCache,
) -> Result<Evaluation> {
    let terms = locus_terms_cached(q, w, schedule, cache)?;
    let value = terms.iter().fold(Rational::zero(), |acc, t| acc + &t.value);
    Ok(Evaluation {
        value,
        compositions: 1usize << (q.d - 1),
    })
}

/// `w(σ_j(O_{h^a}) O_{h^b})_{0,d}`.
pub fn w_two_point(q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
    if q.marked {
        return Err(Error::InvalidArgument("w_two_point called with a marked query".into()));
    }
    Ok(evaluate(q, w, Schedule::Parallel)?.value)
}

/// `w(σ_j(O_{h^a}) O_{h^b} | O_h)_{0,d}`, summing over every marked position.
pub fn w_marked(q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
    if !q.marked {
        return Err(Error::InvalidArgument("w_marked called with a two-point query".into()));
    }
    Ok(evaluate(q, w, Schedule::Parallel)?.value)
}

/// The marked invariant after collapsing the sum over marked positions:
/// `d · (two-point integrand) + (two-point integrand) · d_1 p_0 / (p_1 - p_0)`.
pub fn w_marked_collapsed(q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
    if !q.marked || q.j == 0 {
        return Err(Error::InvalidArgument("collapsed form needs a marked query with j >= 1".into()));
    }
    q.validate()?;
    check_weights(q, w)?;
    let n = q.n as usize;
    let mut total = Rational::zero();
    for c in compositions(q.d)? {
        let locus = Locus::new(&c, w)?;
        let base = locus.integrand(q)?;
        total += locus.integrate(&locus.times_collapsed(&base)?, n)?;
    }
    Ok(total)
}
