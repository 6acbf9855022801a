//! Exact identity checks across the three engines.

use std::sync::Arc;
use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::closed_form::i_function_coeff;
use crate::combinatorics::{compositions, generate_weights, Composition, WeightSpec, DEFAULT_MAX_ATTEMPTS};
use crate::error::{Error, Result};
use crate::localization::{evaluate_cached, lemma2_sides, IntersectionQuery, LocusCache, Schedule};
use crate::rational::{int, pq, ratio, Rational};
use crate::residue::{degree_matched, w_two_point_residue, ResidueConfig};

/// The numbers the checks compare. [`Localization`] is the real engine; tests
/// wrap it to inject faults.
pub trait Engine: Sync {
    fn two_point(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational>;
    fn marked(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational>;

    fn residue(&self, q: &IntersectionQuery, cfg: &ResidueConfig) -> Result<Rational> {
        w_two_point_residue(q, cfg)
    }

    fn i_coeff(&self, n: u32, d: u32, j: u32) -> Result<Rational> {
        i_function_coeff(n, d, j)
    }
}

/// Localization with bundle parts shared across every query it evaluates.
#[derive(Clone, Debug, Default)]
pub struct Localization {
    pub schedule: Schedule,
    cache: Arc<LocusCache>,
}

impl Localization {
    pub fn new(schedule: Schedule) -> Self {
        Self {
            schedule,
            cache: Arc::default(),
        }
    }
}

impl Engine for Localization {
    fn two_point(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
        Ok(evaluate_cached(&q.as_two_point(), w, self.schedule, &self.cache)?.value)
    }

    fn marked(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
        let mut m = *q;
        m.marked = true;
        Ok(evaluate_cached(&m, w, self.schedule, &self.cache)?.value)
    }
}

/// Adds one to every marked value of the wrapped engine.
pub struct Perturbed<E>(pub E);

impl<E: Engine> Engine for Perturbed<E> {
    fn two_point(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
        self.0.two_point(q, w)
    }

    fn marked(&self, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
        Ok(self.0.marked(q, w)? + int(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub inputs: Value,
    #[serde(with = "pq")]
    pub lhs: Rational,
    #[serde(with = "pq")]
    pub rhs: Rational,
    pub pass: bool,
    pub seeds: Vec<u64>,
    pub millis: u64,
}

impl CheckReport {
    fn new(name: &str, inputs: Value, lhs: Rational, rhs: Rational, seeds: Vec<u64>, started: Option<Instant>) -> Self {
        Self {
            check_name: name.to_string(),
            inputs,
            pass: lhs == rhs,
            lhs,
            rhs,
            seeds,
            millis: started.map_or(0, |t| t.elapsed().as_millis() as u64),
        }
    }
}

fn weights(seed: u64, d: u32) -> Result<WeightSpec> {
    generate_weights(seed, d, DEFAULT_MAX_ATTEMPTS)
}

fn clock(timings: bool) -> Option<Instant> {
    timings.then(Instant::now)
}

fn query_json(q: &IntersectionQuery) -> Value {
    serde_json::to_value(q).expect("queries serialize")
}

/// `w_marked(j,a,b) = d·w(j,a,b) + w(j-1,a+1,b)`, once per seed.
pub fn check_hori(engine: &dyn Engine, q: &IntersectionQuery, seeds: &[u64], timings: bool) -> Result<Vec<CheckReport>> {
    if q.j < 1 {
        return Err(Error::InvalidArgument("the Hori identity needs j >= 1".into()));
    }
    let mut lowered = q.as_two_point();
    lowered.j -= 1;
    lowered.a += 1;
    seeds
        .iter()
        .map(|&seed| {
            let t = clock(timings);
            let w = weights(seed, q.d)?;
            let lhs = engine.marked(q, &w)?;
            let rhs = int(q.d as i64) * engine.two_point(q, &w)? + engine.two_point(&lowered, &w)?;
            Ok(CheckReport::new("hori", query_json(q), lhs, rhs, vec![seed], t))
        })
        .collect()
}

/// `(d/N)·w(σ_j(O_{h^{N-2-j}}) O_{h^{-1}}) + (1/N)·w(σ_{j-1}(O_{h^{N-1-j}}) O_{h^{-1}})`
/// against the ε-coefficient.
pub fn check_pmain(engine: &dyn Engine, n: u32, d: u32, j: u32, seeds: &[u64], timings: bool) -> Result<Vec<CheckReport>> {
    if j < 1 || j + 2 > n {
        return Err(Error::InvalidArgument(format!("two-point combination check needs 1 <= j <= N-2, got j={j}, N={n}")));
    }
    let first = IntersectionQuery::two_point(n, d, j, n - 2 - j, -1);
    let second = IntersectionQuery::two_point(n, d, j - 1, n - 1 - j, -1);
    let rhs = engine.i_coeff(n, d, j)?;
    seeds
        .iter()
        .map(|&seed| {
            let t = clock(timings);
            let w = weights(seed, d)?;
            let lhs = ratio(d as i64, n as i64) * engine.two_point(&first, &w)?
                + engine.two_point(&second, &w)? / int(n as i64);
            Ok(CheckReport::new("pmain", json!({"N": n, "d": d, "j": j}), lhs, rhs.clone(), vec![seed], t))
        })
        .collect()
}

/// `(1/N)·w_marked(σ_j(O_{h^{N-2-j}}) O_{h^{-1}} | O_h)` against the ε-coefficient.
pub fn check_corollary(engine: &dyn Engine, n: u32, d: u32, j: u32, seeds: &[u64], timings: bool) -> Result<Vec<CheckReport>> {
    if j < 1 || j + 2 > n {
        return Err(Error::InvalidArgument(format!("corollary check needs 1 <= j <= N-2, got j={j}, N={n}")));
    }
    let q = IntersectionQuery::marked(n, d, j, n - 2 - j, -1);
    let rhs = engine.i_coeff(n, d, j)?;
    seeds
        .iter()
        .map(|&seed| {
            let t = clock(timings);
            let w = weights(seed, d)?;
            let lhs = engine.marked(&q, &w)? / int(n as i64);
            Ok(CheckReport::new("corollary", json!({"N": n, "d": d, "j": j}), lhs, rhs.clone(), vec![seed], t))
        })
        .collect()
}

fn value_for(engine: &dyn Engine, q: &IntersectionQuery, w: &WeightSpec) -> Result<Rational> {
    if q.marked {
        engine.marked(q, w)
    } else {
        engine.two_point(q, w)
    }
}

/// Evaluates `q` under every seed. `lhs` is the first value; `rhs` is the first
/// value that differs from it, or the last value when all agree.
pub fn check_lambda_independence(
    engine: &dyn Engine,
    q: &IntersectionQuery,
    seeds: &[u64],
    timings: bool,
) -> Result<CheckReport> {
    if seeds.len() < 2 {
        return Err(Error::InvalidArgument("λ-independence needs at least two seeds".into()));
    }
    let t = clock(timings);
    let values = seeds
        .iter()
        .map(|&s| value_for(engine, q, &weights(s, q.d)?))
        .collect::<Result<Vec<_>>>()?;
    let lhs = values[0].clone();
    let rhs = values
        .iter()
        .find(|v| **v != lhs)
        .unwrap_or_else(|| values.last().unwrap())
        .clone();
    Ok(CheckReport::new("lambda_independence", query_json(q), lhs, rhs, seeds.to_vec(), t))
}

/// Both sides of the marked-factor sum identity; `lhs` counts the ring
/// coefficients where they differ.
pub fn check_lemma2(c: &Composition, n: u32, seed: u64, timings: bool) -> Result<CheckReport> {
    let t = clock(timings);
    let w = weights(seed, c.degree())?;
    let (lhs, rhs) = lemma2_sides(c, &w, n as usize)?;
    let mismatches = lhs.coeffs().iter().zip(rhs.coeffs()).filter(|(a, b)| a != b).count();
    Ok(CheckReport::new(
        "lemma2",
        json!({"N": n, "composition": c.parts()}),
        int(mismatches as i64),
        Rational::zero(),
        vec![seed],
        t,
    ))
}

/// Residue value against the localization value under `seed`.
pub fn check_residue_equivalence(
    engine: &dyn Engine,
    q: &IntersectionQuery,
    cfg: &ResidueConfig,
    seed: u64,
    timings: bool,
) -> Result<CheckReport> {
    let t = clock(timings);
    let lhs = engine.residue(q, cfg)?;
    let rhs = engine.two_point(q, &weights(seed, q.d)?)?;
    let mut inputs = query_json(q);
    inputs["config"] = serde_json::to_value(cfg).expect("configs serialize");
    Ok(CheckReport::new("residue", inputs, lhs, rhs, vec![seed], t))
}

fn factorial(n: u64) -> Rational {
    Rational::from_integer((1..=n).map(num_bigint::BigInt::from).product())
}

fn harmonic(n: u64) -> Rational {
    (1..=n).map(|r| ratio(1, r as i64)).sum()
}

/// `ε^0` coefficient against `(Nd)!/(d!)^N`.
pub fn check_closed_form_constant(engine: &dyn Engine, n: u32, d: u32, timings: bool) -> Result<CheckReport> {
    let t = clock(timings);
    let lhs = engine.i_coeff(n, d, 0)?;
    let rhs = factorial(n as u64 * d as u64) / num_traits::pow(factorial(d as u64), n as usize);
    Ok(CheckReport::new("closed_form_j0", json!({"N": n, "d": d}), lhs, rhs, vec![], t))
}

/// `ε^1` coefficient against `N(H_{Nd} - H_d)·(Nd)!/(d!)^N`.
pub fn check_closed_form_linear(engine: &dyn Engine, n: u32, d: u32, timings: bool) -> Result<CheckReport> {
    let t = clock(timings);
    let lhs = engine.i_coeff(n, d, 1)?;
    let nd = n as u64 * d as u64;
    let rhs = int(n as i64) * (harmonic(nd) - harmonic(d as u64)) * factorial(nd)
        / num_traits::pow(factorial(d as u64), n as usize);
    Ok(CheckReport::new("closed_form_j1", json!({"N": n, "d": d}), lhs, rhs, vec![], t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Hori,
    Pmain,
    Corollary,
    Lambda,
    Lemma2,
    Residue,
    ClosedForm,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hori" => Suite::Hori,
            "pmain" => Suite::Pmain,
            "corollary" => Suite::Corollary,
            "lambda" => Suite::Lambda,
            "lemma2" => Suite::Lemma2,
            "residue" => Suite::Residue,
            "closed-form" => Suite::ClosedForm,
            "all" => Suite::All,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub ns: Vec<u32>,
    pub dmax: u32,
    pub seeds: Vec<u64>,
    pub residue: ResidueConfig,
    /// Also check the Hori identity for `k = N - 1` at `d <= 2`.
    pub non_cy: bool,
    /// Append expected-fail controls that must be detected as mismatches.
    pub controls: bool,
    pub timings: bool,
    pub schedule: Schedule,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            ns: vec![4, 5, 6],
            dmax: 3,
            seeds: vec![0, 1, 2],
            residue: ResidueConfig::default(),
            non_cy: true,
            controls: true,
            timings: false,
            schedule: Schedule::Parallel,
        }
    }
}

/// Degree-matched `(j >= 1, a >= 0, b >= -1)` insertions for `k`.
pub fn hori_grid(n: u32, k: u32, d: u32) -> Vec<IntersectionQuery> {
    let total = n as i64 - 3 + (n as i64 - k as i64) * d as i64;
    let mut out = Vec::new();
    for j in 1..=total + 1 {
        for a in 0..=total + 1 - j {
            let b = total - j - a;
            if b >= -1 {
                out.push(
                    IntersectionQuery::marked(n, d, j as u32, a as u32, b as i32).with_hypersurface_degree(k),
                );
            }
        }
    }
    out
}

/// The CY Hori grid restricts `j` to `1..=N-3`.
fn cy_hori_grid(n: u32, d: u32) -> Vec<IntersectionQuery> {
    hori_grid(n, n, d).into_iter().filter(|q| q.j + 3 <= n).collect()
}

enum Task {
    Hori(IntersectionQuery),
    Pmain(u32, u32, u32),
    Corollary(u32, u32, u32),
    Lambda(IntersectionQuery),
    Lemma2(Composition, u32),
    Residue(IntersectionQuery),
    ClosedForm(u32, u32),
    HoriControl(IntersectionQuery),
    LambdaControl(IntersectionQuery),
    Lemma2Control(Composition, u32),
}

fn control(mut r: CheckReport, name: &str) -> CheckReport {
    r.check_name = name.to_string();
    r.pass = !r.pass;
    r
}

fn plan(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<Task>> {
    let mut tasks = Vec::new();
    let ds = 1..=cfg.dmax;
    for &n in &cfg.ns {
        if n < 2 || (n < 3 && suite != Suite::ClosedForm) {
            return Err(Error::InvalidArgument(format!("N={n} is too small for this suite")));
        }
        for d in ds.clone() {
            if suite.includes(Suite::ClosedForm) {
                tasks.push(Task::ClosedForm(n, d));
            }
            if n < 3 {
                continue;
            }
            let hori = cy_hori_grid(n, d);
            let mut non_cy = Vec::new();
            if cfg.non_cy && d <= 2 {
                non_cy = hori_grid(n, n - 1, d);
            }
            if suite.includes(Suite::Hori) {
                tasks.extend(hori.iter().chain(&non_cy).map(|q| Task::Hori(*q)));
            }
            for j in 1..=n - 3 {
                if suite.includes(Suite::Pmain) {
                    tasks.push(Task::Pmain(n, d, j));
                }
                if suite.includes(Suite::Corollary) {
                    tasks.push(Task::Corollary(n, d, j));
                }
            }
            if suite.includes(Suite::Lambda) {
                let mut qs: Vec<IntersectionQuery> = Vec::new();
                for q in hori.iter().chain(&non_cy) {
                    let mut lowered = q.as_two_point();
                    lowered.j -= 1;
                    lowered.a += 1;
                    qs.extend([*q, q.as_two_point(), lowered]);
                }
                for j in 1..=n - 3 {
                    qs.push(IntersectionQuery::marked(n, d, j, n - 2 - j, -1));
                    qs.push(IntersectionQuery::two_point(n, d, j, n - 2 - j, -1));
                    qs.push(IntersectionQuery::two_point(n, d, j - 1, n - 1 - j, -1));
                }
                qs.sort();
                qs.dedup();
                tasks.extend(qs.into_iter().map(Task::Lambda));
            }
            if suite.includes(Suite::Lemma2) {
                tasks.extend(compositions(d)?.into_iter().map(|c| Task::Lemma2(c, n)));
            }
            if suite.includes(Suite::Residue) {
                tasks.extend(
                    degree_matched(n)
                        .into_iter()
                        .map(|(j, a, b)| Task::Residue(IntersectionQuery::two_point(n, d, j, a, b))),
                );
            }
        }
    }
    if cfg.controls {
        let n = cfg.ns.iter().copied().find(|&n| n >= 3).unwrap_or(5);
        if suite.includes(Suite::Hori) {
            tasks.push(Task::HoriControl(IntersectionQuery::marked(n, 1, 1, n - 3, -1)));
        }
        if suite.includes(Suite::Lambda) {
            // one degree above the selection rule, so the value depends on λ
            tasks.push(Task::LambdaControl(IntersectionQuery::two_point(n, 1, 1, n - 3, 0).forced()));
        }
        if suite.includes(Suite::Lemma2) {
            tasks.push(Task::Lemma2Control(Composition::new(vec![cfg.dmax.max(1)])?, n));
        }
    }
    Ok(tasks)
}

fn run_task(task: &Task, engine: &dyn Engine, cfg: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let seeds = &cfg.seeds;
    let seed0 = *seeds
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one seed is required".into()))?;
    let tm = cfg.timings;
    match task {
        Task::Hori(q) => check_hori(engine, q, seeds, tm),
        Task::Pmain(n, d, j) => check_pmain(engine, *n, *d, *j, seeds, tm),
        Task::Corollary(n, d, j) => check_corollary(engine, *n, *d, *j, seeds, tm),
        Task::Lambda(q) => Ok(vec![check_lambda_independence(engine, q, seeds, tm)?]),
        Task::Lemma2(c, n) => Ok(vec![check_lemma2(c, *n, seed0, tm)?]),
        Task::Residue(q) => Ok(vec![check_residue_equivalence(engine, q, &cfg.residue, seed0, tm)?]),
        Task::ClosedForm(n, d) => Ok(vec![
            check_closed_form_constant(engine, *n, *d, tm)?,
            check_closed_form_linear(engine, *n, *d, tm)?,
        ]),
        Task::HoriControl(q) => {
            let bad = Perturbed(Localization::new(cfg.schedule));
            Ok(check_hori(&bad, q, &seeds[..1], tm)?
                .into_iter()
                .map(|r| control(r, "hori_mutation_control"))
                .collect())
        }
        Task::LambdaControl(q) => {
            let r = check_lambda_independence(engine, q, seeds, tm)?;
            Ok(vec![control(r, "lambda_forced_control")])
        }
        Task::Lemma2Control(c, n) => {
            let t = clock(tm);
            let w = weights(seed0, c.degree())?;
            let (lhs, mut rhs) = lemma2_sides(c, &w, *n as usize)?;
            let mut e = vec![0; c.len() + 1];
            e[0] = 1;
            let bumped = rhs.coeff(&e) + int(1);
            rhs.set_coeff(&e, bumped)?;
            let mismatches = lhs.coeffs().iter().zip(rhs.coeffs()).filter(|(a, b)| a != b).count();
            let r = CheckReport::new(
                "lemma2_mutation_control",
                json!({"N": n, "composition": c.parts()}),
                int(mismatches as i64),
                Rational::zero(),
                vec![seed0],
                t,
            );
            Ok(vec![control(r, "lemma2_mutation_control")])
        }
    }
}

/// Runs a suite. Reports come back sorted by check name; within a name they
/// keep grid order.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig, engine: &dyn Engine) -> Result<Vec<CheckReport>> {
    let tasks = plan(suite, cfg)?;
    let nested: Vec<Vec<CheckReport>> = match cfg.schedule {
        Schedule::Serial => tasks.iter().map(|t| run_task(t, engine, cfg)).collect::<Result<_>>()?,
        Schedule::Parallel => tasks.par_iter().map(|t| run_task(t, engine, cfg)).collect::<Result<_>>()?,
    };
    let mut reports: Vec<CheckReport> = nested.into_iter().flatten().collect();
    reports.sort_by(|a, b| a.check_name.cmp(&b.check_name));
    Ok(reports)
}

/// `(passed, failed)`.
pub fn tally(reports: &[CheckReport]) -> (usize, usize) {
    let passed = reports.iter().filter(|r| r.pass).count();
    (passed, reports.len() - passed)
}
