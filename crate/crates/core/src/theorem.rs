//! Witnesses for the unfairness of imperfect deterministic procedures.
//!
//! Under `U = X` every member of `{X=0}` is convicted with probability 1 and
//! every member of `{X=1}` with probability 0, whatever their merit. So
//! whenever some merit class has members on both sides of `X`, the split
//! `{X=0}/{X=1}` is a pair of groups on which the procedure is unfair.
//! `exhaustive_search` checks the same claim independently by trying every
//! bipartition of a small population.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fairness::{
    bipartition_violations, check_pairwise_fairness, check_search_size, split_by_mask, DEFAULT_MAX_N,
};
use crate::population::{Criterion, GroupSpec, Individual, MeritLabel, Population};
use crate::procedure::{exact_rates, DeterministicProcedure, Procedure};
use crate::rational::{Probability, Tolerance};
use crate::roc::{classify, ProcedureClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessStatus {
    /// `X = J` for everyone.
    Perfect,
    /// Imperfect, and the criterion split violates fairness.
    Witnessed,
    /// Imperfect, but no merit class is present on both sides of `X`.
    Unwitnessable,
}

/// Conviction probabilities of one merit class on each side of the split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessComparison {
    pub merit: MeritLabel,
    pub support_x0: usize,
    pub support_x1: usize,
    pub conviction_x0: Option<Probability>,
    pub conviction_x1: Option<Probability>,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub status: WitnessStatus,
    pub group_x1: GroupSpec,
    pub group_x0: GroupSpec,
    /// Sorted ids.
    pub members_x1: Vec<String>,
    pub members_x0: Vec<String>,
    pub violated_merit_classes: Vec<MeritLabel>,
    pub comparisons: [WitnessComparison; 2],
    /// Class of the whole-population `(h, k)`; absent when a merit class is empty.
    pub procedure_class: Option<ProcedureClass>,
}

impl WitnessReport {
    pub fn is_violation(&self) -> bool {
        !self.violated_merit_classes.is_empty()
    }
}

/// Builds the `{X=1}/{X=0}` witness for the deterministic procedure
/// `U = X` on `pop`.
pub fn construct_witness(pop: &Population) -> Result<WitnessReport> {
    pop.require_non_empty()?;
    let proc = Procedure::Deterministic(DeterministicProcedure);
    let group_x0 = GroupSpec::criterion(Criterion::Convict);
    let group_x1 = GroupSpec::criterion(Criterion::Acquit);
    let rates_x0 = exact_rates(&proc, pop, &group_x0)?;
    let rates_x1 = exact_rates(&proc, pop, &group_x1)?;
    let everyone = exact_rates(
        &proc,
        pop,
        &GroupSpec::ids(pop.members().iter().map(|m| m.id().to_string())),
    )?;

    let comparisons = MeritLabel::ALL.map(|merit| {
        let (a, b) = (rates_x0.get(merit).cloned(), rates_x1.get(merit).cloned());
        let violated = matches!((&a, &b), (Some(a), Some(b)) if a != b);
        WitnessComparison {
            merit,
            support_x0: rates_x0.support.get(merit),
            support_x1: rates_x1.support.get(merit),
            conviction_x0: a,
            conviction_x1: b,
            violated,
        }
    });
    let violated_merit_classes: Vec<MeritLabel> = comparisons.iter().filter(|c| c.violated).map(|c| c.merit).collect();
    let perfect = pop.members().iter().all(is_perfectly_judged);
    let status = match (perfect, violated_merit_classes.is_empty()) {
        (true, _) => WitnessStatus::Perfect,
        (false, false) => WitnessStatus::Witnessed,
        (false, true) => WitnessStatus::Unwitnessable,
    };
    let sorted_ids = |g: &GroupSpec| {
        let mut ids: Vec<String> = pop
            .members()
            .iter()
            .filter(|m| g.contains(m))
            .map(|m| m.id().to_string())
            .collect();
        ids.sort();
        ids
    };
    Ok(WitnessReport {
        status,
        members_x1: sorted_ids(&group_x1),
        members_x0: sorted_ids(&group_x0),
        group_x1,
        group_x0,
        violated_merit_classes,
        comparisons,
        procedure_class: everyone.roc_point().map(|p| classify(&p, 0.0).expect("zero epsilon")),
    })
}

fn is_perfectly_judged(m: &Individual) -> bool {
    m.criterion().map(Criterion::as_u8) == Some(m.merit().as_u8())
}

/// A subset and its complement (sorted id lists) on which fairness fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BipartitionViolation {
    pub subset: Vec<String>,
    pub complement: Vec<String>,
    pub violated_classes: Vec<MeritLabel>,
}

impl BipartitionViolation {
    /// Whether this is the unordered split `{a, b}`.
    pub fn is_split(&self, a: &[String], b: &[String]) -> bool {
        (self.subset == a && self.complement == b) || (self.subset == b && self.complement == a)
    }
}

/// Every bipartition of `pop` on which `U = X` is unfair at tolerance 0.
///
/// Each unordered bipartition appears once, keyed by the side holding the
/// first population member, in ascending order of that side's bitmask.
pub fn exhaustive_search(pop: &Population, max_n: usize) -> Result<Vec<BipartitionViolation>> {
    check_search_size(pop.len(), max_n)?;
    let proc = Procedure::Deterministic(DeterministicProcedure);
    let probs = pop
        .members()
        .iter()
        .map(|m| proc.conviction_probability(m))
        .collect::<Result<Vec<_>>>()?;
    let merits: Vec<MeritLabel> = pop.members().iter().map(|m| m.merit()).collect();
    let ids: Vec<&str> = pop.members().iter().map(|m| m.id()).collect();
    Ok(bipartition_violations(&merits, &probs, &Tolerance::zero())
        .into_iter()
        .map(|(mask, violated_classes)| {
            let (subset, complement) = split_by_mask(&ids, mask);
            BipartitionViolation {
                subset,
                complement,
                violated_classes,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub trial: u64,
    pub reason: String,
    /// The offending population in CSV form.
    pub population: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyReport {
    pub n_individuals: usize,
    pub trials: usize,
    pub seed: u64,
    pub perfect: usize,
    pub witnessed: usize,
    pub unwitnessable: usize,
    pub counterexamples: Vec<Counterexample>,
    pub pass: bool,
}

/// Individuals `i00, i01, ...` with uniformly random `J` and `X`, drawn
/// from ChaCha8 seeded with `seed` on stream `trial`.
pub fn random_population(n: usize, seed: u64, trial: u64) -> Population {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let members = (0..n)
        .map(|i| {
            let merit = if rng.gen::<bool>() {
                MeritLabel::Innocent
            } else {
                MeritLabel::Guilty
            };
            let x = if rng.gen::<bool>() {
                Criterion::Acquit
            } else {
                Criterion::Convict
            };
            Individual::new(format!("i{i:02}"), merit)
                .expect("non-empty id")
                .with_criterion(x)
        })
        .collect();
    Population::new(members).expect("ids are unique")
}

/// Checks the witness construction against exhaustive search on
/// `n_trials` random populations of `n_individuals`.
pub fn verify_theorem(n_individuals: usize, n_trials: usize, seed: u64) -> Result<PropertyReport> {
    check_search_size(n_individuals, DEFAULT_MAX_N)?;
    let outcomes = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            if n_individuals == 0 {
                return Ok((None, Vec::new()));
            }
            let pop = random_population(n_individuals, seed, trial);
            let (status, problems) = check_instance(&pop)?;
            let counterexamples = problems
                .into_iter()
                .map(|reason| Counterexample {
                    trial,
                    reason,
                    population: pop.to_csv_string(),
                })
                .collect::<Vec<_>>();
            Ok((Some(status), counterexamples))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = PropertyReport {
        n_individuals,
        trials: n_trials,
        seed,
        perfect: 0,
        witnessed: 0,
        unwitnessable: 0,
        counterexamples: Vec::new(),
        pass: true,
    };
    for (status, counterexamples) in outcomes {
        match status {
            Some(WitnessStatus::Perfect) => report.perfect += 1,
            Some(WitnessStatus::Witnessed) => report.witnessed += 1,
            Some(WitnessStatus::Unwitnessable) => report.unwitnessable += 1,
            None => {}
        }
        report.counterexamples.extend(counterexamples);
    }
    report.pass = report.counterexamples.is_empty();
    Ok(report)
}

/// Number of search results re-verified through the pairwise fairness check.
const RECHECKED_VIOLATIONS: usize = 16;

fn check_instance(pop: &Population) -> Result<(WitnessStatus, Vec<String>)> {
    let witness = construct_witness(pop)?;
    let search = exhaustive_search(pop, pop.len())?;
    let proc = Procedure::Deterministic(DeterministicProcedure);
    let mut problems = Vec::new();

    for c in witness.comparisons.iter().filter(|c| c.violated) {
        if c.conviction_x0 != Some(Probability::one()) || c.conviction_x1 != Some(Probability::zero()) {
            problems.push(format!(
                "witness probabilities for J={} are not 1 vs 0",
                c.merit.as_u8()
            ));
        }
    }
    match witness.status {
        WitnessStatus::Perfect | WitnessStatus::Unwitnessable => {
            if witness.is_violation() {
                problems.push("witness reports a violation on a perfect or unwitnessable population".into());
            }
            if !search.is_empty() {
                problems.push(format!(
                    "exhaustive search found {} violations where none were expected",
                    search.len()
                ));
            }
        }
        WitnessStatus::Witnessed => {
            match search
                .iter()
                .find(|v| v.is_split(&witness.members_x0, &witness.members_x1))
            {
                None => problems.push("criterion split missing from exhaustive search".into()),
                Some(v) if v.violated_classes != witness.violated_merit_classes => {
                    problems.push("exhaustive search disagrees on the violated merit classes".into())
                }
                Some(_) => {}
            }
            let x0 = exact_rates(&proc, pop, &witness.group_x0)?;
            let x1 = exact_rates(&proc, pop, &witness.group_x1)?;
            if check_pairwise_fairness(&x0, &x1, &Tolerance::zero()).fair {
                problems.push("pairwise fairness check accepts the criterion split".into());
            }
        }
    }
    for v in search.iter().take(RECHECKED_VIOLATIONS) {
        let a = exact_rates(&proc, pop, &GroupSpec::ids(v.subset.iter().cloned()))?;
        let b = exact_rates(&proc, pop, &GroupSpec::ids(v.complement.iter().cloned()))?;
        let verdict = check_pairwise_fairness(&a, &b, &Tolerance::zero());
        if verdict.fair || verdict.violated_classes() != v.violated_classes {
            problems.push(format!("search result {:?} does not re-check as a violation", v.subset));
        }
    }
    Ok((witness.status, problems))
}
