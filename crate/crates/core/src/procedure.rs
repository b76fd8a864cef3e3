//! Deterministic and randomized procedures, their outcomes and rates.
//!
//! Rates follow one convention throughout: `h = P(U=0 | J=0)` is the
//! conviction probability of the guilty and `k = P(U=0 | J=1)` the
//! conviction probability of the innocent.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::distributions::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::fairness::ConditionalRates;
use crate::population::{group_members, Criterion, GroupSpec, Individual, MeritCounts, MeritLabel, Population};
use crate::rational::Probability;

/// `U`: the allocated outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Outcome {
    /// `U = 0`
    Convicted,
    /// `U = 1`
    Acquitted,
}

impl Outcome {
    pub fn as_u8(self) -> u8 {
        match self {
            Outcome::Convicted => 0,
            Outcome::Acquitted => 1,
        }
    }
}

/// The rule `U = X`: acquit exactly when the determinant facts for
/// acquittal are in place.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeterministicProcedure;

impl DeterministicProcedure {
    pub fn outcome(&self, individual: &Individual) -> Result<Outcome> {
        Ok(match individual.require_criterion()? {
            Criterion::Acquit => Outcome::Acquitted,
            Criterion::Convict => Outcome::Convicted,
        })
    }
}

/// Conviction probabilities for the two merit classes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RatePair {
    /// `P(U=0 | J=0)`
    pub h: Probability,
    /// `P(U=0 | J=1)`
    pub k: Probability,
}

impl RatePair {
    pub fn new(h: Probability, k: Probability) -> Self {
        RatePair { h, k }
    }

    pub fn conviction(&self, merit: MeritLabel) -> &Probability {
        match merit {
            MeritLabel::Guilty => &self.h,
            MeritLabel::Innocent => &self.k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RandomizedProcedure {
    Global(RatePair),
    /// Rates keyed by the value of a single attribute.
    PerGroup {
        attribute: String,
        rates: BTreeMap<String, RatePair>,
    },
}

impl RandomizedProcedure {
    /// The rate pair that applies to `individual`.
    pub fn rates_for(&self, individual: &Individual) -> Result<&RatePair> {
        match self {
            RandomizedProcedure::Global(pair) => Ok(pair),
            RandomizedProcedure::PerGroup { attribute, rates } => {
                let value = individual.attribute(attribute).ok_or_else(|| Error::MissingAttribute {
                    id: individual.id().to_string(),
                    attribute: attribute.clone(),
                })?;
                rates.get(value).ok_or_else(|| Error::MissingRate {
                    attribute: attribute.clone(),
                    value: value.to_string(),
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Procedure {
    Deterministic(DeterministicProcedure),
    Randomized(RandomizedProcedure),
}

impl From<DeterministicProcedure> for Procedure {
    fn from(p: DeterministicProcedure) -> Self {
        Procedure::Deterministic(p)
    }
}

impl From<RandomizedProcedure> for Procedure {
    fn from(p: RandomizedProcedure) -> Self {
        Procedure::Randomized(p)
    }
}

impl Procedure {
    /// `P(U=0)` for one individual. Always 0 or 1 for deterministic procedures.
    pub fn conviction_probability(&self, individual: &Individual) -> Result<Probability> {
        match self {
            Procedure::Deterministic(d) => Ok(match d.outcome(individual)? {
                Outcome::Convicted => Probability::one(),
                Outcome::Acquitted => Probability::zero(),
            }),
            Procedure::Randomized(r) => Ok(r.rates_for(individual)?.conviction(individual.merit()).clone()),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Procedure::Deterministic(_))
    }

    /// Parses a procedure description:
    /// `{"type":"deterministic"}`,
    /// `{"type":"randomized","rates":{"global":[h,k]}}` or
    /// `{"type":"randomized","attribute":"sex","rates":{"M":[h,k],"F":[h,k]}}`.
    /// Probabilities may be JSON numbers, decimal strings or `"a/b"` strings.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let obj = v.as_object().ok_or_else(|| invalid("expected a JSON object"))?;
        match obj.get("type").and_then(Value::as_str) {
            Some("deterministic") => Ok(Procedure::Deterministic(DeterministicProcedure)),
            Some("randomized") => {
                let rates = obj
                    .get("rates")
                    .and_then(Value::as_object)
                    .ok_or_else(|| invalid("randomized procedure needs a `rates` object"))?;
                match obj.get("attribute") {
                    None | Some(Value::Null) => {
                        if rates.len() != 1 || !rates.contains_key("global") {
                            return Err(invalid("without `attribute`, `rates` must be {\"global\":[h,k]}"));
                        }
                        Ok(RandomizedProcedure::Global(parse_pair(&rates["global"])?).into())
                    }
                    Some(Value::String(attribute)) if !attribute.is_empty() => {
                        if rates.is_empty() {
                            return Err(Error::EmptyValueSet);
                        }
                        let rates = rates
                            .iter()
                            .map(|(k, v)| Ok((k.clone(), parse_pair(v)?)))
                            .collect::<Result<BTreeMap<_, _>>>()?;
                        Ok(RandomizedProcedure::PerGroup {
                            attribute: attribute.clone(),
                            rates,
                        }
                        .into())
                    }
                    Some(_) => Err(invalid("`attribute` must be a non-empty string")),
                }
            }
            Some(other) => Err(invalid(&format!("unknown procedure type `{other}`"))),
            None => Err(invalid("missing `type`")),
        }
    }

    /// The description format read by [`Procedure::from_json_str`], with
    /// probabilities written as exact strings.
    pub fn to_json(&self) -> Value {
        let pair = |p: &RatePair| json!([p.h.to_string(), p.k.to_string()]);
        match self {
            Procedure::Deterministic(_) => json!({"type": "deterministic"}),
            Procedure::Randomized(RandomizedProcedure::Global(p)) => {
                json!({"type": "randomized", "rates": {"global": pair(p)}})
            }
            Procedure::Randomized(RandomizedProcedure::PerGroup { attribute, rates }) => {
                let rates: serde_json::Map<String, Value> = rates.iter().map(|(k, p)| (k.clone(), pair(p))).collect();
                json!({"type": "randomized", "attribute": attribute, "rates": rates})
            }
        }
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidProcedure(msg.to_string())
}

fn parse_pair(v: &Value) -> Result<RatePair> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| invalid("rates must be [h, k] pairs"))?;
    Ok(RatePair::new(parse_probability(&arr[0])?, parse_probability(&arr[1])?))
}

fn parse_probability(v: &Value) -> Result<Probability> {
    match v {
        Value::String(s) => s.parse(),
        // The shortest round-trip rendering of the number, read as a decimal.
        Value::Number(n) => n.to_string().parse(),
        other => Err(Error::InvalidProbability(other.to_string())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Deterministic,
    Simulated { seed: u64, trial: u64 },
}

/// One outcome per population member, aligned with population order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeAssignment {
    ids: Arc<[String]>,
    outcomes: Vec<Outcome>,
    provenance: Provenance,
}

impl OutcomeAssignment {
    pub fn get(&self, id: &str) -> Option<Outcome> {
        self.ids.iter().position(|i| i == id).map(|p| self.outcomes[p])
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Outcome)> {
        self.ids.iter().map(String::as_str).zip(self.outcomes.iter().copied())
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

fn population_ids(pop: &Population) -> Arc<[String]> {
    pop.members().iter().map(|m| m.id().to_string()).collect()
}

pub fn apply_deterministic(proc: &DeterministicProcedure, pop: &Population) -> Result<OutcomeAssignment> {
    let outcomes = pop
        .members()
        .iter()
        .map(|m| proc.outcome(m))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeAssignment {
        ids: population_ids(pop),
        outcomes,
        provenance: Provenance::Deterministic,
    })
}

/// Exact conditional conviction rates of `proc` on group `g`.
///
/// Deterministic procedures count `X=0` members per merit class. Randomized
/// procedures report the configured pair that applies to every member of
/// `g`, and fail if members fall under different pairs.
pub fn exact_rates(proc: &Procedure, pop: &Population, g: &GroupSpec) -> Result<ConditionalRates> {
    let members = group_members(pop, g)?;
    let support = MeritCounts::of(members.iter().copied());
    match proc {
        Procedure::Deterministic(d) => {
            let mut convicted = [0usize; 2];
            for m in &members {
                if d.outcome(m)? == Outcome::Convicted {
                    convicted[m.merit().index()] += 1;
                }
            }
            Ok(ConditionalRates::from_counts(convicted, support, None))
        }
        Procedure::Randomized(r) => {
            let pairs = members
                .iter()
                .map(|m| r.rates_for(m))
                .collect::<Result<BTreeSet<_>>>()?;
            if pairs.len() > 1 {
                return Err(Error::AmbiguousRate(g.label()));
            }
            let pair = match pairs.into_iter().next() {
                Some(p) => p.clone(),
                None => return Ok(ConditionalRates::new(None, None, support)),
            };
            let h = (support.guilty > 0).then(|| pair.h.clone());
            let k = (support.innocent > 0).then(|| pair.k.clone());
            Ok(ConditionalRates::new(h, k, support))
        }
    }
}

/// Observed conviction rates of group `g` pooled over all `trials`.
pub fn empirical_rates(pop: &Population, trials: &[OutcomeAssignment], g: &GroupSpec) -> Result<ConditionalRates> {
    g.validate(pop)?;
    let mut convicted = [0usize; 2];
    let mut seen = [0usize; 2];
    for trial in trials {
        debug_assert_eq!(trial.len(), pop.len());
        for (m, outcome) in pop.members().iter().zip(trial.outcomes()) {
            if g.contains(m) {
                seen[m.merit().index()] += 1;
                if *outcome == Outcome::Convicted {
                    convicted[m.merit().index()] += 1;
                }
            }
        }
    }
    let support = MeritCounts {
        guilty: seen[0],
        innocent: seen[1],
    };
    Ok(ConditionalRates::from_counts(convicted, support, Some(trials.len())))
}

fn bernoulli(p: &Probability) -> Bernoulli {
    let (n, d) = (p.value().numer().to_u32(), p.value().denom().to_u32());
    match (n, d) {
        (Some(n), Some(d)) => Bernoulli::from_ratio(n, d),
        _ => Bernoulli::new(p.to_f64()),
    }
    .expect("probability lies in [0, 1]")
}

/// Draws `trials` independent outcome assignments.
///
/// Trial `t` uses ChaCha8 seeded from `seed` on stream `t`, drawing one
/// Bernoulli conviction per member in population order, so each trial is
/// reproducible on its own and the result does not depend on how trials
/// are scheduled across threads.
pub fn simulate(
    proc: &RandomizedProcedure,
    pop: &Population,
    seed: u64,
    trials: usize,
) -> Result<Vec<OutcomeAssignment>> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let mut cache: BTreeMap<Probability, Bernoulli> = BTreeMap::new();
    let draws = pop
        .members()
        .iter()
        .map(|m| {
            let p = proc.rates_for(m)?.conviction(m.merit());
            Ok(*cache.entry(p.clone()).or_insert_with(|| bernoulli(p)))
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = population_ids(pop);

    Ok((0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let outcomes = draws
                .iter()
                .map(|d| {
                    if d.sample(&mut rng) {
                        Outcome::Convicted
                    } else {
                        Outcome::Acquitted
                    }
                })
                .collect();
            OutcomeAssignment {
                ids: ids.clone(),
                outcomes,
                provenance: Provenance::Simulated { seed, trial },
            }
        })
        .collect())
}

/// A per-group procedure giving every listed attribute value the same `(h, k)`.
pub fn make_group_fair<I, S>(h: Probability, k: Probability, attribute: &str, values: I) -> Result<RandomizedProcedure>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let pair = RatePair::new(h, k);
    let rates: BTreeMap<String, RatePair> = values.into_iter().map(|v| (v.into(), pair.clone())).collect();
    if rates.is_empty() {
        return Err(Error::EmptyValueSet);
    }
    Ok(RandomizedProcedure::PerGroup {
        attribute: attribute.to_string(),
        rates,
    })
}
