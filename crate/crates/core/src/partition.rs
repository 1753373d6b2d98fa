//! SW/HW mapping evaluation and search.
//!
//! A mapping is scored by
//! `w_time·T/ref_time + w_area·A/ref_area + w_energy·E/ref_energy − w_security·S/ref_security`
//! where `T` is the makespan of an engine run, `A` the summed hardware
//! area, `E` the per-firing energy and `S` the minimum security level.
//! Scores are exact rationals so ties and scale changes behave exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use rayon::prelude::*;
use thiserror::Error;

use crate::behavior::BehaviorRegistry;
use crate::decimal::Decimal;
use crate::engine::{self, EngineError, InitialInputs, Mapping, SimConfig, DEFAULT_STEP_LIMIT};
use crate::graph::SystemModel;
use crate::model::{Kind, MAX_SECURITY};
use crate::tree::Value;

/// Exhaustive search refuses more free components than this.
pub const MAX_EXHAUSTIVE_FREE: usize = 24;

/// Reports keep every evaluated row up to this many rows.
const MAX_REPORT_ROWS: u64 = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no mapping satisfies the constraints")]
    NoFeasibleMapping,
    #[error("{count} components allow both kinds; exhaustive search handles at most {max}")]
    TooManyFreeComponents { count: usize, max: usize },
}

impl PartitionError {
    pub fn category(&self) -> &'static str {
        match self {
            PartitionError::InvalidObjective(_) => "InvalidObjective",
            PartitionError::InvalidConstraints(_) => "InvalidConstraints",
            PartitionError::Engine(e) => e.category(),
            PartitionError::NoFeasibleMapping => "NoFeasibleMapping",
            PartitionError::TooManyFreeComponents { .. } => "TooManyFreeComponents",
        }
    }
}

/// Four numbers in the order time, area, energy, security.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quad {
    pub time: Decimal,
    pub area: Decimal,
    pub energy: Decimal,
    pub security: Decimal,
}

impl Quad {
    pub fn splat(v: Decimal) -> Quad {
        Quad { time: v, area: v, energy: v, security: v }
    }

    fn all(&self) -> [Decimal; 4] {
        [self.time, self.area, self.energy, self.security]
    }
}

/// Parses `t,a,e,s`.
impl FromStr for Quad {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [t, a, e, sec] = parts[..] else {
            return Err(format!("expected four comma-separated numbers, found {:?}", s));
        };
        let num = |x: &str| x.parse::<Decimal>().map_err(|e| format!("{x:?}: {e}"));
        Ok(Quad { time: num(t)?, area: num(a)?, energy: num(e)?, security: num(sec)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionObjective {
    pub weights: Quad,
    pub refs: Quad,
}

impl PartitionObjective {
    pub fn new(weights: Quad, refs: Quad) -> Result<Self, PartitionError> {
        if weights.all().iter().any(|w| w.is_negative()) {
            return Err(PartitionError::InvalidObjective("weights must be non-negative".into()));
        }
        if weights.all().iter().all(|w| *w == Decimal::ZERO) {
            return Err(PartitionError::InvalidObjective("at least one weight must be positive".into()));
        }
        if refs.all().iter().any(|r| *r <= Decimal::ZERO) {
            return Err(PartitionError::InvalidObjective("reference values must be positive".into()));
        }
        Ok(PartitionObjective { weights, refs })
    }

    /// Exact objective value for the given metrics.
    pub fn score(&self, time: Decimal, area: Decimal, energy: Decimal, security: i64) -> BigRational {
        let term = |w: Decimal, m: BigRational, r: Decimal| rational(w) * m / rational(r);
        term(self.weights.time, rational(time), self.refs.time)
            + term(self.weights.area, rational(area), self.refs.area)
            + term(self.weights.energy, rational(energy), self.refs.energy)
            - term(self.weights.security, BigRational::from_integer(security.into()), self.refs.security)
    }
}

fn rational(d: Decimal) -> BigRational {
    BigRational::new(BigInt::from(d.micros()), BigInt::from(crate::decimal::SCALE))
}

/// Renders with six fractional digits, rounding half away from zero.
pub fn format_rational(r: &BigRational) -> String {
    let scaled = (r * BigRational::from_integer(BigInt::from(crate::decimal::SCALE))).round().to_integer();
    let sign = if scaled.is_negative() { "-" } else { "" };
    let abs = scaled.abs();
    let scale = BigInt::from(crate::decimal::SCALE);
    format!("{sign}{}.{:0>6}", &abs / &scale, (&abs % &scale).to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraints {
    pub area_budget: Decimal,
    pub security_floor: i64,
}

impl Constraints {
    pub fn new(area_budget: Decimal, security_floor: i64) -> Result<Self, PartitionError> {
        if area_budget.is_negative() {
            return Err(PartitionError::InvalidConstraints("area budget must be non-negative".into()));
        }
        if !(0..=MAX_SECURITY).contains(&security_floor) {
            return Err(PartitionError::InvalidConstraints(format!("security floor must be in 0..={MAX_SECURITY}")));
        }
        Ok(Constraints { area_budget, security_floor })
    }

    /// No area limit, floor 0.
    pub fn unconstrained() -> Self {
        Constraints { area_budget: Decimal::from_micros(i64::MAX), security_floor: 0 }
    }
}

/// The engine run each mapping is timed on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub inputs: InitialInputs,
    pub seed: u64,
    pub step_limit: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario { inputs: InitialInputs::new(), seed: 0, step_limit: DEFAULT_STEP_LIMIT }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationResult {
    pub mapping: Mapping,
    pub total_time: Decimal,
    pub total_area: Decimal,
    pub total_energy: Decimal,
    pub min_security: i64,
    pub objective: BigRational,
    pub feasible: bool,
}

impl EvaluationResult {
    pub fn objective_text(&self) -> String {
        format_rational(&self.objective)
    }

    /// Search order: objective, then fewer hardware components, then the
    /// mapping itself (ids ascending, software before hardware).
    pub fn rank(&self, other: &Self) -> Ordering {
        self.objective
            .cmp(&other.objective)
            .then(self.mapping.hardware_count().cmp(&other.mapping.hardware_count()))
            .then_with(|| {
                let a = self.mapping.assignment.values();
                let b = other.mapping.assignment.values();
                a.cmp(b)
            })
    }

    pub fn to_value(&self) -> Value {
        Value::object([
            ("mapping", Value::str(self.mapping.to_string())),
            ("time", Value::num(self.total_time)),
            ("area", Value::num(self.total_area)),
            ("energy", Value::num(self.total_energy)),
            ("security", Value::num(self.min_security)),
            ("objective", Value::Num(self.objective_text())),
            ("feasible", Value::str(if self.feasible { "true" } else { "false" })),
        ])
    }
}

pub struct Evaluator<'a> {
    pub model: &'a SystemModel,
    pub registry: &'a BehaviorRegistry,
    pub scenario: &'a Scenario,
    pub objective: &'a PartitionObjective,
    pub constraints: &'a Constraints,
}

impl Evaluator<'_> {
    pub fn evaluate(&self, mapping: &Mapping) -> Result<EvaluationResult, PartitionError> {
        mapping.check(self.model)?;
        let config = SimConfig { seed: self.scenario.seed, step_limit: self.scenario.step_limit, mapping: mapping.clone() };
        let trace = engine::run(self.model, self.registry, config, &self.scenario.inputs)?;
        let firings = trace.firing_counts();
        let mut area = Decimal::ZERO;
        let mut energy = Decimal::ZERO;
        let mut security = MAX_SECURITY;
        for (id, spec) in &self.model.components {
            let kind = mapping.assignment[id];
            area = area + spec.costs.area(kind);
            let n = firings.get(id).copied().unwrap_or(0) as i64;
            energy = energy + spec.costs.energy(kind).checked_mul_int(n).expect("energy overflow");
            security = security.min(spec.costs.security(kind));
        }
        let objective = self.objective.score(trace.sim_time, area, energy, security);
        Ok(EvaluationResult {
            mapping: mapping.clone(),
            total_time: trace.sim_time,
            total_area: area,
            total_energy: energy,
            min_security: security,
            objective,
            feasible: area <= self.constraints.area_budget && security >= self.constraints.security_floor,
        })
    }
}

pub fn evaluate_mapping(
    model: &SystemModel,
    registry: &BehaviorRegistry,
    scenario: &Scenario,
    mapping: &Mapping,
    objective: &PartitionObjective,
    constraints: &Constraints,
) -> Result<EvaluationResult, PartitionError> {
    Evaluator { model, registry, scenario, objective, constraints }.evaluate(mapping)
}

/// `metrics(b) − metrics(a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementDelta {
    pub time: Decimal,
    pub area: Decimal,
    pub energy: Decimal,
    pub security: i64,
    pub objective: BigRational,
    pub feasible_a: bool,
    pub feasible_b: bool,
}

pub fn refinement_delta(
    model: &SystemModel,
    registry: &BehaviorRegistry,
    scenario: &Scenario,
    mapping_a: &Mapping,
    mapping_b: &Mapping,
    objective: &PartitionObjective,
    constraints: &Constraints,
) -> Result<RefinementDelta, PartitionError> {
    let ev = Evaluator { model, registry, scenario, objective, constraints };
    let a = ev.evaluate(mapping_a)?;
    let b = ev.evaluate(mapping_b)?;
    Ok(RefinementDelta {
        time: b.total_time - a.total_time,
        area: b.total_area - a.total_area,
        energy: b.total_energy - a.total_energy,
        security: b.min_security - a.min_security,
        objective: b.objective - a.objective,
        feasible_a: a.feasible,
        feasible_b: b.feasible,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Greedy,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "greedy" => Ok(Method::Greedy),
            _ => Err(format!("unknown method `{s}` (expected exhaustive or greedy)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::Greedy => "greedy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport {
    pub method: Method,
    pub evaluated: u64,
    /// Evaluated mappings in evaluation order; empty when there were more
    /// than 4096.
    pub rows: Vec<EvaluationResult>,
    /// Greedy only: each applied flip and the component's new kind.
    pub flips: Vec<(String, Kind)>,
}

impl SearchReport {
    pub fn to_value(&self, best: &EvaluationResult) -> Value {
        let flips = self
            .flips
            .iter()
            .map(|(id, k)| Value::object([("component", Value::str(id)), ("to", Value::str(k.short()))]))
            .collect();
        Value::object([
            ("method", Value::str(self.method.to_string())),
            ("evaluated", Value::num(self.evaluated)),
            ("best", best.to_value()),
            ("flips", Value::List(flips)),
            ("rows", Value::List(self.rows.iter().map(EvaluationResult::to_value).collect())),
        ])
    }
}

pub fn optimize(
    model: &SystemModel,
    registry: &BehaviorRegistry,
    scenario: &Scenario,
    objective: &PartitionObjective,
    constraints: &Constraints,
    method: Method,
) -> Result<(EvaluationResult, SearchReport), PartitionError> {
    let ev = Evaluator { model, registry, scenario, objective, constraints };
    match method {
        Method::Exhaustive => exhaustive(&ev),
        Method::Greedy => greedy(&ev),
    }
}

fn better(a: Option<EvaluationResult>, b: Option<EvaluationResult>) -> Option<EvaluationResult> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.rank(&a) == Ordering::Less { b } else { a }),
        (a, b) => a.or(b),
    }
}

fn exhaustive(ev: &Evaluator<'_>) -> Result<(EvaluationResult, SearchReport), PartitionError> {
    let free: Vec<&str> = ev.model.free_components();
    if free.len() > MAX_EXHAUSTIVE_FREE {
        return Err(PartitionError::TooManyFreeComponents { count: free.len(), max: MAX_EXHAUSTIVE_FREE });
    }
    let base = Mapping::all_software(ev.model);
    let at = |mask: u64| {
        let mut m = base.clone();
        for (bit, id) in free.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                m.assignment.insert(id.to_string(), Kind::Hardware);
            }
        }
        m
    };
    let total = 1u64 << free.len();
    let mut report = SearchReport { method: Method::Exhaustive, evaluated: total, rows: Vec::new(), flips: Vec::new() };
    let best = if total <= MAX_REPORT_ROWS {
        report.rows = (0..total).into_par_iter().map(|mask| ev.evaluate(&at(mask))).collect::<Result<_, _>>()?;
        report.rows.iter().filter(|r| r.feasible).cloned().fold(None, |acc, r| better(acc, Some(r)))
    } else {
        (0..total)
            .into_par_iter()
            .map(|mask| ev.evaluate(&at(mask)).map(|r| r.feasible.then_some(r)))
            .try_reduce(|| None, |a, b| Ok(better(a, b)))?
    };
    let best = best.ok_or(PartitionError::NoFeasibleMapping)?;
    Ok((best, report))
}

fn greedy(ev: &Evaluator<'_>) -> Result<(EvaluationResult, SearchReport), PartitionError> {
    let free: Vec<&str> = ev.model.free_components();
    let mut report = SearchReport { method: Method::Greedy, evaluated: 0, rows: Vec::new(), flips: Vec::new() };
    let record = |r: &EvaluationResult, report: &mut SearchReport| {
        report.evaluated += 1;
        if report.evaluated <= MAX_REPORT_ROWS {
            report.rows.push(r.clone());
        }
    };
    let mut current = ev.evaluate(&Mapping::all_software(ev.model))?;
    record(&current, &mut report);
    loop {
        let mut best: Option<(EvaluationResult, &str)> = None;
        for id in &free {
            let kind = current.mapping.assignment[*id].flipped();
            let candidate = ev.evaluate(&current.mapping.with(id, kind))?;
            record(&candidate, &mut report);
            // From an infeasible start any feasible flip is progress.
            let improves = !current.feasible || candidate.objective < current.objective;
            if candidate.feasible && improves && best.as_ref().is_none_or(|(b, _)| candidate.rank(b) == Ordering::Less) {
                best = Some((candidate, id));
            }
        }
        match best {
            Some((next, id)) => {
                report.flips.push((id.to_string(), next.mapping.assignment[id]));
                current = next;
            }
            None if current.feasible => return Ok((current, report)),
            None => return Err(PartitionError::NoFeasibleMapping),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn formats_rationals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(format_rational(&r(4, 1)), "4.000000");
        assert_eq!(format_rational(&r(-1, 3)), "-0.333333");
        assert_eq!(format_rational(&r(2, 3)), "0.666667");
        assert_eq!(format_rational(&r(1, 2_000_000)), "0.000001");
        assert_eq!(format_rational(&BigRational::zero()), "0.000000");
    }

    #[test]
    fn quad_parses() {
        let q: Quad = "1,0.5, 2,10".parse().unwrap();
        assert_eq!(q.security, Decimal::from_int(10));
        assert!("1,2,3".parse::<Quad>().is_err());
    }

    #[test]
    fn objective_rejects_bad_values() {
        let one = Quad::splat(Decimal::from_int(1));
        assert!(PartitionObjective::new(Quad::splat(Decimal::ZERO), one).is_err());
        assert!(PartitionObjective::new(one, Quad::splat(Decimal::ZERO)).is_err());
        assert!(Constraints::new(Decimal::ZERO, 6).is_err());
    }
}
