//! Conditional rates, fairness verdicts and the justice bookkeeping of
//! expected convictions.
//!
//! A procedure is fair between two groups when, within each merit class,
//! members of either group face the same conviction probability:
//! `P(U=0 | J=j, A) = P(U=0 | J=j, B)` for `j` in `{0, 1}`. A class that is
//! empty on either side imposes no constraint.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Num, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::population::{GroupSpec, MeritCounts, MeritLabel, Population};
use crate::procedure::{empirical_rates, exact_rates, simulate, Procedure};
use crate::rational::{Probability, Rational, Tolerance};
use crate::roc::{classify, ProcedureClass, RocPoint};

/// Largest population accepted by exhaustive bipartition search.
pub const MAX_EXHAUSTIVE_N: usize = 20;
pub const DEFAULT_MAX_N: usize = 15;
pub const DEFAULT_VIOLATION_LIMIT: usize = 100;

/// `h = P(U=0|J=0)` and `k = P(U=0|J=1)` over some (sub)population, each
/// present only when its merit class is non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConditionalRates {
    pub h: Option<Probability>,
    pub k: Option<Probability>,
    pub support: MeritCounts,
    /// Number of simulated trials pooled into empirical rates; `None` for
    /// exact rates. Support counts are member-trials when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

impl ConditionalRates {
    pub fn new(h: Option<Probability>, k: Option<Probability>, support: MeritCounts) -> Self {
        debug_assert!(h.is_none() || support.guilty > 0);
        debug_assert!(k.is_none() || support.innocent > 0);
        ConditionalRates {
            h,
            k,
            support,
            trials: None,
        }
    }

    /// Rates from convicted counts indexed by merit class.
    pub fn from_counts(convicted: [usize; 2], support: MeritCounts, trials: Option<usize>) -> Self {
        ConditionalRates {
            h: Probability::of_counts(convicted[0], support.guilty),
            k: Probability::of_counts(convicted[1], support.innocent),
            support,
            trials,
        }
    }

    pub fn get(&self, merit: MeritLabel) -> Option<&Probability> {
        match merit {
            MeritLabel::Guilty => self.h.as_ref(),
            MeritLabel::Innocent => self.k.as_ref(),
        }
    }

    pub fn require(&self, merit: MeritLabel) -> Result<&Probability> {
        self.get(merit).ok_or(Error::UndefinedRate(merit))
    }

    /// `P(U=1 | J=j) = 1 - P(U=0 | J=j)`.
    pub fn acquittal(&self, merit: MeritLabel) -> Option<Probability> {
        self.get(merit).map(Probability::complement)
    }

    pub fn is_empirical(&self) -> bool {
        self.trials.is_some()
    }

    pub fn roc_point(&self) -> Option<RocPoint> {
        Some(RocPoint::new(self.h.clone()?, self.k.clone()?))
    }
}

/// Rates of one merit class in the two compared groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassComparison {
    pub merit: MeritLabel,
    pub rate_a: Option<Probability>,
    pub rate_b: Option<Probability>,
    pub difference: Option<Rational>,
    pub comparable: bool,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessVerdict {
    pub group_a: Option<GroupSpec>,
    pub group_b: Option<GroupSpec>,
    pub classes: [ClassComparison; 2],
    pub tolerance: f64,
    pub fair: bool,
}

impl FairnessVerdict {
    pub fn with_groups(mut self, a: GroupSpec, b: GroupSpec) -> Self {
        self.group_a = Some(a);
        self.group_b = Some(b);
        self
    }

    pub fn class(&self, merit: MeritLabel) -> &ClassComparison {
        &self.classes[merit.index()]
    }

    pub fn violated_classes(&self) -> Vec<MeritLabel> {
        self.classes.iter().filter(|c| c.violated).map(|c| c.merit).collect()
    }
}

fn compare_class(
    merit: MeritLabel,
    a: Option<&Probability>,
    b: Option<&Probability>,
    tolerance: &Tolerance,
) -> ClassComparison {
    let difference = match (a, b) {
        (Some(a), Some(b)) => Some(a.distance(b)),
        _ => None,
    };
    let violated = difference.as_ref().is_some_and(|d| tolerance.exceeded_by(d));
    ClassComparison {
        merit,
        rate_a: a.cloned(),
        rate_b: b.cloned(),
        comparable: difference.is_some(),
        difference,
        violated,
    }
}

/// Same-merit, cross-group comparison of conviction rates. Exact: the
/// tolerance is held as the rational value of the given float.
pub fn check_pairwise_fairness(
    rates_a: &ConditionalRates,
    rates_b: &ConditionalRates,
    tolerance: &Tolerance,
) -> FairnessVerdict {
    let classes = MeritLabel::ALL.map(|m| compare_class(m, rates_a.get(m), rates_b.get(m), tolerance));
    let fair = classes.iter().all(|c| !c.violated);
    FairnessVerdict {
        group_a: None,
        group_b: None,
        classes,
        tolerance: tolerance.value(),
        fair,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AbsoluteMode {
    Singletons,
    Bipartitions { max_n: usize },
}

/// Two groups of individuals (by id) on which fairness fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupViolation {
    pub side_a: Vec<String>,
    pub side_b: Vec<String>,
    pub classes: [ClassComparison; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbsoluteFairnessReport {
    pub mode: AbsoluteMode,
    pub tolerance: f64,
    pub fair: bool,
    pub total_violations: u64,
    pub truncated: bool,
    pub violations: Vec<GroupViolation>,
}

/// Fairness with respect to every group of a kind.
///
/// `Singletons` compares every pair of same-merit individuals, which is
/// equivalent to requiring one conviction probability per merit class.
/// `Bipartitions` tests every non-trivial subset against its complement.
/// At most `limit` violations are listed; `total_violations` counts all.
pub fn check_absolute_fairness(
    proc: &Procedure,
    pop: &Population,
    mode: AbsoluteMode,
    tolerance: &Tolerance,
    limit: usize,
) -> Result<AbsoluteFairnessReport> {
    pop.require_non_empty()?;
    let probs = pop
        .members()
        .iter()
        .map(|m| proc.conviction_probability(m))
        .collect::<Result<Vec<_>>>()?;
    let merits: Vec<MeritLabel> = pop.members().iter().map(|m| m.merit()).collect();
    let ids: Vec<&str> = pop.members().iter().map(|m| m.id()).collect();

    let (violations, total) = match mode {
        AbsoluteMode::Singletons => singleton_violations(&ids, &merits, &probs, tolerance, limit),
        AbsoluteMode::Bipartitions { max_n } => {
            check_search_size(pop.len(), max_n)?;
            let found = bipartition_violations(&merits, &probs, tolerance);
            let total = found.len() as u64;
            let listed = found
                .iter()
                .take(limit)
                .map(|(mask, _)| {
                    let (a, b) = split_by_mask(&ids, *mask);
                    let rates_a = mean_rates(&merits, &probs, *mask, false);
                    let rates_b = mean_rates(&merits, &probs, *mask, true);
                    let verdict = check_pairwise_fairness(&rates_a, &rates_b, tolerance);
                    GroupViolation {
                        side_a: a,
                        side_b: b,
                        classes: verdict.classes,
                    }
                })
                .collect();
            (listed, total)
        }
    };
    Ok(AbsoluteFairnessReport {
        mode,
        tolerance: tolerance.value(),
        fair: total == 0,
        truncated: (violations.len() as u64) < total,
        total_violations: total,
        violations,
    })
}

pub(crate) fn check_search_size(size: usize, max_n: usize) -> Result<()> {
    if max_n > MAX_EXHAUSTIVE_N {
        return Err(Error::SearchLimitTooLarge(max_n));
    }
    if size > max_n {
        return Err(Error::PopulationTooLarge { size, max_n });
    }
    Ok(())
}

fn singleton_violations(
    ids: &[&str],
    merits: &[MeritLabel],
    probs: &[Probability],
    tolerance: &Tolerance,
    limit: usize,
) -> (Vec<GroupViolation>, u64) {
    let mut listed = Vec::new();
    let mut total = 0u64;
    for merit in MeritLabel::ALL {
        let mut levels: BTreeMap<&Probability, Vec<usize>> = BTreeMap::new();
        for (i, p) in probs.iter().enumerate().filter(|(i, _)| merits[*i] == merit) {
            levels.entry(p).or_default().push(i);
        }
        let levels: Vec<_> = levels.into_iter().collect();
        for (x, (pa, members_a)) in levels.iter().enumerate() {
            for (pb, members_b) in &levels[x + 1..] {
                if !tolerance.exceeded_by(&pa.distance(pb)) {
                    continue;
                }
                total += (members_a.len() * members_b.len()) as u64;
                for &i in members_a {
                    for &j in members_b {
                        if listed.len() >= limit {
                            break;
                        }
                        let (a, b) = if i < j { (i, j) } else { (j, i) };
                        let rate = |idx: usize, m: MeritLabel| (merits[idx] == m).then(|| &probs[idx]);
                        listed.push(GroupViolation {
                            side_a: vec![ids[a].to_string()],
                            side_b: vec![ids[b].to_string()],
                            classes: MeritLabel::ALL.map(|m| compare_class(m, rate(a, m), rate(b, m), tolerance)),
                        });
                    }
                }
            }
        }
    }
    (listed, total)
}

/// Members on the subset side (`complement == false`) or the other side
/// of `mask`, averaged per merit class.
fn mean_rates(merits: &[MeritLabel], probs: &[Probability], mask: u64, complement: bool) -> ConditionalRates {
    let mut sums = [Rational::zero(), Rational::zero()];
    let mut counts = [0usize; 2];
    for (i, (m, p)) in merits.iter().zip(probs).enumerate() {
        if ((mask >> i) & 1 == 1) != complement {
            sums[m.index()] = &sums[m.index()] + p.value();
            counts[m.index()] += 1;
        }
    }
    let mean = |j: usize| {
        Rational::ratio(1, counts[j])
            .map(|inv| Probability::new(&sums[j] * &inv).expect("mean of probabilities is a probability"))
    };
    ConditionalRates::new(
        mean(0),
        mean(1),
        MeritCounts {
            guilty: counts[0],
            innocent: counts[1],
        },
    )
}

/// Ids on each side of `mask`, each side sorted.
pub(crate) fn split_by_mask(ids: &[&str], mask: u64) -> (Vec<String>, Vec<String>) {
    let (mut a, mut b): (Vec<String>, Vec<String>) = (Vec::new(), Vec::new());
    for (i, id) in ids.iter().enumerate() {
        if (mask >> i) & 1 == 1 {
            a.push(id.to_string());
        } else {
            b.push(id.to_string());
        }
    }
    a.sort();
    b.sort();
    (a, b)
}

/// Every unordered bipartition `{S, complement}` with both sides non-empty
/// on which some merit class has different mean conviction probability.
///
/// Each bipartition is encoded by the mask of the side containing member 0
/// and results are in ascending mask order. Returns `(mask, violated
/// classes)` pairs. Callers bound the population size.
pub fn bipartition_violations(
    merits: &[MeritLabel],
    probs: &[Probability],
    tolerance: &Tolerance,
) -> Vec<(u64, Vec<MeritLabel>)> {
    assert_eq!(merits.len(), probs.len());
    assert!(merits.len() <= MAX_EXHAUSTIVE_N);
    if merits.len() < 2 {
        return Vec::new();
    }
    // Scale to a common denominator so each side's mean compares by
    // integer cross-multiplication.
    let denom = probs.iter().fold(BigInt::from(1), |acc, p| acc.lcm(p.value().denom()));
    let scaled: Vec<BigInt> = probs
        .iter()
        .map(|p| p.value().numer() * (&denom / p.value().denom()))
        .collect();
    match scaled.iter().map(ToPrimitive::to_i64).collect::<Option<Vec<i64>>>() {
        Some(small) => {
            let small: Vec<i128> = small.into_iter().map(i128::from).collect();
            scan_bipartitions(merits, &small, probs, tolerance)
        }
        None => scan_bipartitions(merits, &scaled, probs, tolerance),
    }
}

fn scan_bipartitions<T>(
    merits: &[MeritLabel],
    weights: &[T],
    probs: &[Probability],
    tolerance: &Tolerance,
) -> Vec<(u64, Vec<MeritLabel>)>
where
    T: Num + Clone + From<i64> + Send + Sync,
{
    let n = merits.len();
    let mut totals = [T::zero(), T::zero()];
    let mut counts = [0i64; 2];
    for (m, w) in merits.iter().zip(weights) {
        totals[m.index()] = totals[m.index()].clone() + w.clone();
        counts[m.index()] += 1;
    }
    let half = 1u64 << (n - 1);
    (0..half - 1)
        .into_par_iter()
        .filter_map(|bits| {
            let mask = (bits << 1) | 1;
            let mut sums = [T::zero(), T::zero()];
            let mut sizes = [0i64; 2];
            for i in 0..n {
                if (mask >> i) & 1 == 1 {
                    let j = merits[i].index();
                    sums[j] = sums[j].clone() + weights[i].clone();
                    sizes[j] += 1;
                }
            }
            let violated: Vec<MeritLabel> = MeritLabel::ALL
                .into_iter()
                .filter(|m| {
                    let j = m.index();
                    let (inside, outside) = (sizes[j], counts[j] - sizes[j]);
                    if inside == 0 || outside == 0 {
                        return false;
                    }
                    let rest = totals[j].clone() - sums[j].clone();
                    if sums[j].clone() * T::from(outside) == rest * T::from(inside) {
                        return false;
                    }
                    tolerance.is_zero() || {
                        let rates_in = mean_rates(merits, probs, mask, false);
                        let rates_out = mean_rates(merits, probs, mask, true);
                        let (a, b) = (rates_in.get(*m).unwrap(), rates_out.get(*m).unwrap());
                        tolerance.exceeded_by(&a.distance(b))
                    }
                })
                .collect();
            (!violated.is_empty()).then_some((mask, violated))
        })
        .collect()
}

/// One cell of the expected-outcome table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContingencyCell {
    pub value: String,
    pub merit: MeritLabel,
    pub count: usize,
    pub expected_convictions: Rational,
    pub expected_acquittals: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub attribute: String,
    /// Per attribute value (first-appearance order), guilty then innocent.
    pub cells: Vec<ContingencyCell>,
    /// Whole population, guilty then innocent.
    pub totals: [ContingencyCell; 2],
}

impl ContingencyTable {
    pub fn cell(&self, value: &str, merit: MeritLabel) -> Option<&ContingencyCell> {
        self.cells.iter().find(|c| c.value == value && c.merit == merit)
    }

    pub fn total(&self, merit: MeritLabel) -> &ContingencyCell {
        &self.totals[merit.index()]
    }

    pub fn values(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.value.as_str()) {
                out.push(&c.value);
            }
        }
        out
    }
}

/// Expected convictions per (attribute value, merit class): the sum of
/// members' conviction probabilities, which is `count × rate` whenever a
/// single rate applies to the cell.
pub fn expected_contingency(pop: &Population, proc: &Procedure, attribute: &str) -> Result<ContingencyTable> {
    let empty_cell = |value: &str, merit| ContingencyCell {
        value: value.to_string(),
        merit,
        count: 0,
        expected_convictions: Rational::zero(),
        expected_acquittals: Rational::zero(),
    };
    let values = pop.attribute_values(attribute);
    let mut cells: Vec<ContingencyCell> = values
        .iter()
        .flat_map(|v| MeritLabel::ALL.map(|m| empty_cell(v, m)))
        .collect();
    let mut totals = MeritLabel::ALL.map(|m| empty_cell("all", m));

    for member in pop.members() {
        let value = member.attribute(attribute).ok_or_else(|| Error::MissingAttribute {
            id: member.id().to_string(),
            attribute: attribute.to_string(),
        })?;
        let p = proc.conviction_probability(member)?;
        let slot = values.iter().position(|v| v == value).expect("value was collected") * 2 + member.merit().index();
        for cell in [&mut cells[slot], &mut totals[member.merit().index()]] {
            cell.count += 1;
            cell.expected_convictions = &cell.expected_convictions + p.value();
        }
    }
    for cell in cells.iter_mut().chain(totals.iter_mut()) {
        cell.expected_acquittals = &Rational::from_count(cell.count) - &cell.expected_convictions;
    }
    Ok(ContingencyTable {
        attribute: attribute.to_string(),
        cells,
        totals,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupJustice {
    pub value: String,
    pub convictions: Rational,
    pub guilty_convicted: Rational,
    /// Innocent people convicted.
    pub mistaken_convictions: Rational,
    /// Guilty convicted over all convicted; absent when nobody is convicted.
    pub guilty_share: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JusticeMetrics {
    pub groups: Vec<GroupJustice>,
    pub total: GroupJustice,
}

impl JusticeMetrics {
    pub fn group(&self, value: &str) -> Option<&GroupJustice> {
        self.groups.iter().find(|g| g.value == value)
    }
}

fn group_justice(value: &str, guilty: &ContingencyCell, innocent: &ContingencyCell) -> GroupJustice {
    let convictions = &guilty.expected_convictions + &innocent.expected_convictions;
    let guilty_share = (!convictions.is_zero()).then(|| &guilty.expected_convictions / &convictions);
    GroupJustice {
        value: value.to_string(),
        guilty_convicted: guilty.expected_convictions.clone(),
        mistaken_convictions: innocent.expected_convictions.clone(),
        convictions,
        guilty_share,
    }
}

pub fn justice_metrics(table: &ContingencyTable) -> JusticeMetrics {
    let groups = table
        .values()
        .into_iter()
        .map(|v| {
            let g = table.cell(v, MeritLabel::Guilty).expect("guilty cell");
            let i = table.cell(v, MeritLabel::Innocent).expect("innocent cell");
            group_justice(v, g, i)
        })
        .collect();
    let total = group_justice(
        "all",
        table.total(MeritLabel::Guilty),
        table.total(MeritLabel::Innocent),
    );
    JusticeMetrics { groups, total }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRates {
    pub group: GroupSpec,
    pub rates: ConditionalRates,
    pub class: Option<ProcedureClass>,
}

/// Everything `audit` reports for one procedure, population and attribute.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub attribute: String,
    pub tolerance: f64,
    pub empirical: bool,
    pub overall: ConditionalRates,
    pub overall_class: Option<ProcedureClass>,
    pub groups: Vec<GroupRates>,
    pub verdicts: Vec<FairnessVerdict>,
    pub fair: bool,
    pub contingency: ContingencyTable,
    pub justice: JusticeMetrics,
}

/// Optional Monte-Carlo source for the audited rates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationSpec {
    pub seed: u64,
    pub trials: usize,
}

/// Rates per attribute value, pairwise verdicts for every value pair, the
/// expected contingency table and justice metrics.
pub fn audit(
    pop: &Population,
    proc: &Procedure,
    attribute: &str,
    tolerance: &Tolerance,
    simulation: Option<SimulationSpec>,
) -> Result<AuditReport> {
    pop.require_non_empty()?;
    let everyone = GroupSpec::ids(pop.members().iter().map(|m| m.id().to_string()));
    let trials = match (simulation, proc) {
        (Some(sim), Procedure::Randomized(r)) => Some(simulate(r, pop, sim.seed, sim.trials)?),
        (Some(_), Procedure::Deterministic(_)) => {
            return Err(Error::InvalidProcedure(
                "simulation requires a randomized procedure".into(),
            ))
        }
        (None, _) => None,
    };
    let rates_of = |g: &GroupSpec| match &trials {
        Some(t) => empirical_rates(pop, t, g),
        None => exact_rates(proc, pop, g),
    };
    let class_of = |r: &ConditionalRates| r.roc_point().map(|p| classify(&p, 0.0).expect("zero epsilon is valid"));

    let overall = match &trials {
        Some(t) => empirical_rates(pop, t, &everyone)?,
        None => overall_exact_rates(proc, pop)?,
    };
    let groups = pop
        .attribute_values(attribute)
        .into_iter()
        .map(|v| {
            let group = GroupSpec::attribute(attribute, v);
            let rates = rates_of(&group)?;
            Ok(GroupRates {
                class: class_of(&rates),
                group,
                rates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut verdicts = Vec::new();
    for (i, a) in groups.iter().enumerate() {
        for b in &groups[i + 1..] {
            verdicts.push(
                check_pairwise_fairness(&a.rates, &b.rates, tolerance).with_groups(a.group.clone(), b.group.clone()),
            );
        }
    }
    let contingency = expected_contingency(pop, proc, attribute)?;
    let justice = justice_metrics(&contingency);
    Ok(AuditReport {
        attribute: attribute.to_string(),
        tolerance: tolerance.value(),
        empirical: trials.is_some(),
        overall_class: class_of(&overall),
        overall,
        fair: verdicts.iter().all(|v| v.fair),
        groups,
        verdicts,
        contingency,
        justice,
    })
}

/// Whole-population rates; per-group randomized procedures are averaged
/// over members rather than rejected as ambiguous.
fn overall_exact_rates(proc: &Procedure, pop: &Population) -> Result<ConditionalRates> {
    let mut sums = [Rational::zero(), Rational::zero()];
    for m in pop.members() {
        let p = proc.conviction_probability(m)?;
        sums[m.merit().index()] = &sums[m.merit().index()] + p.value();
    }
    let support = MeritCounts::of(pop.members());
    let mean = |j: usize, n: usize| {
        Rational::ratio(1, n).map(|inv| Probability::new(&sums[j] * &inv).expect("mean of probabilities"))
    };
    Ok(ConditionalRates::new(
        mean(0, support.guilty),
        mean(1, support.innocent),
        support,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::load_population;
    use crate::procedure::{DeterministicProcedure, RandomizedProcedure, RatePair};

    fn p(s: &str) -> Probability {
        s.parse().unwrap()
    }

    fn rates(h: Option<&str>, k: Option<&str>) -> ConditionalRates {
        let support = MeritCounts {
            guilty: h.is_some() as usize,
            innocent: k.is_some() as usize,
        };
        ConditionalRates::new(h.map(p), k.map(p), support)
    }

    fn pop(csv: &str) -> Population {
        load_population(csv.as_bytes()).unwrap()
    }

    #[test]
    fn equal_rates_are_fair() {
        let v = check_pairwise_fairness(
            &rates(Some("3/4"), Some("1/10")),
            &rates(Some("3/4"), Some("1/10")),
            &Tolerance::zero(),
        );
        assert!(v.fair);
        assert!(v.classes.iter().all(|c| c.comparable && !c.violated));
    }

    #[test]
    fn differing_innocent_rates_are_unfair() {
        let v = check_pairwise_fairness(
            &rates(Some("1"), Some("1")),
            &rates(Some("1"), Some("0")),
            &Tolerance::zero(),
        );
        assert!(!v.fair);
        assert_eq!(v.violated_classes(), [MeritLabel::Innocent]);
        assert_eq!(v.class(MeritLabel::Innocent).difference, Some(Rational::one()));
    }

    #[test]
    fn missing_class_is_vacuous() {
        let v = check_pairwise_fairness(
            &rates(Some("1/2"), Some("0")),
            &rates(Some("1/2"), None),
            &Tolerance::zero(),
        );
        assert!(v.fair);
        assert!(!v.class(MeritLabel::Innocent).comparable);
        let v = check_pairwise_fairness(&rates(None, None), &rates(None, None), &Tolerance::zero());
        assert!(v.fair);
    }

    #[test]
    fn tolerance_absorbs_small_differences() {
        let a = rates(Some("0.75"), Some("0.1"));
        let b = rates(Some("0.7501"), Some("0.1"));
        assert!(!check_pairwise_fairness(&a, &b, &Tolerance::zero()).fair);
        assert!(check_pairwise_fairness(&a, &b, &Tolerance::new(1e-3).unwrap()).fair);
    }

    #[test]
    fn coin_toss_is_absolutely_fair() {
        let pop = pop("id,J,X,attrs\na,1,,\nb,0,,\nc,1,,\nd,0,,\ne,1,,\n");
        let proc: Procedure = RandomizedProcedure::Global(RatePair::new(p("1/2"), p("1/2"))).into();
        for mode in [AbsoluteMode::Singletons, AbsoluteMode::Bipartitions { max_n: 15 }] {
            let r = check_absolute_fairness(&proc, &pop, mode, &Tolerance::zero(), 10).unwrap();
            assert!(r.fair, "{mode:?}");
            assert_eq!(r.total_violations, 0);
        }
    }

    #[test]
    fn imperfect_deterministic_fails_on_the_criterion_split() {
        let pop = pop("id,J,X,attrs\na,1,1,\nb,1,0,\nc,0,0,\nd,0,0,\n");
        let proc: Procedure = DeterministicProcedure.into();
        let r = check_absolute_fairness(
            &proc,
            &pop,
            AbsoluteMode::Bipartitions { max_n: 15 },
            &Tolerance::zero(),
            100,
        )
        .unwrap();
        assert!(!r.fair);
        let x0 = vec!["b".to_string(), "c".to_string(), "d".to_string()];
        let x1 = vec!["a".to_string()];
        assert!(r
            .violations
            .iter()
            .any(|v| (v.side_a == x0 && v.side_b == x1) || (v.side_a == x1 && v.side_b == x0)));

        let s = check_absolute_fairness(&proc, &pop, AbsoluteMode::Singletons, &Tolerance::zero(), 100).unwrap();
        assert!(!s.fair);
        assert_eq!(s.total_violations, 1);
        assert_eq!(s.violations[0].side_a, ["a"]);
        assert_eq!(s.violations[0].side_b, ["b"]);
    }

    #[test]
    fn perfect_deterministic_is_absolutely_fair() {
        let pop = pop("id,J,X,attrs\na,1,1,\nb,1,1,\nc,0,0,\nd,0,0,\n");
        let proc: Procedure = DeterministicProcedure.into();
        for mode in [AbsoluteMode::Singletons, AbsoluteMode::Bipartitions { max_n: 15 }] {
            assert!(
                check_absolute_fairness(&proc, &pop, mode, &Tolerance::zero(), 10)
                    .unwrap()
                    .fair
            );
        }
    }

    #[test]
    fn bipartition_mode_is_size_limited() {
        let rows: String = (0..16).map(|i| format!("i{i},1,1,\n")).collect();
        let pop = pop(&format!("id,J,X,attrs\n{rows}"));
        let err = check_absolute_fairness(
            &DeterministicProcedure.into(),
            &pop,
            AbsoluteMode::Bipartitions { max_n: 15 },
            &Tolerance::zero(),
            10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::PopulationTooLarge { size: 16, max_n: 15 }));
        assert!(check_absolute_fairness(
            &DeterministicProcedure.into(),
            &pop,
            AbsoluteMode::Bipartitions { max_n: 64 },
            &Tolerance::zero(),
            10
        )
        .is_err());
    }

    #[test]
    fn truncation_is_reported() {
        let pop = pop("id,J,X,attrs\na,1,1,\nb,1,0,\nc,1,1,\nd,1,0,\ne,1,0,\n");
        let r = check_absolute_fairness(
            &DeterministicProcedure.into(),
            &pop,
            AbsoluteMode::Bipartitions { max_n: 15 },
            &Tolerance::zero(),
            2,
        )
        .unwrap();
        assert_eq!(r.violations.len(), 2);
        assert!(r.truncated);
        assert!(r.total_violations > 2);
    }

    #[test]
    fn bipartitions_large_denominators_take_the_wide_path() {
        let merits = [MeritLabel::Innocent; 3];
        let big = Probability::new(Rational::from(num_rational::BigRational::new(
            BigInt::from(1),
            BigInt::from(10).pow(30),
        )))
        .unwrap();
        let probs = [big.clone(), big.clone(), Probability::zero()];
        let found = bipartition_violations(&merits, &probs, &Tolerance::zero());
        // Masks 0b011, 0b101 and 0b001 (member 0 alone).
        assert_eq!(found.iter().map(|(m, _)| *m).collect::<Vec<_>>(), [0b001, 0b011, 0b101]);
        assert!(bipartition_violations(&merits, &[big.clone(), big.clone(), big], &Tolerance::zero()).is_empty());
    }

    #[test]
    fn contingency_and_justice() {
        let pop = pop("id,J,X,attrs\na,0,,sex=M\nb,0,,sex=M\nc,1,,sex=F\nd,1,,sex=M\n");
        let proc: Procedure = RandomizedProcedure::Global(RatePair::new(p("3/4"), p("1/10"))).into();
        let t = expected_contingency(&pop, &proc, "sex").unwrap();
        let m0 = t.cell("M", MeritLabel::Guilty).unwrap();
        assert_eq!(m0.count, 2);
        assert_eq!(m0.expected_convictions, Rational::new(3, 2));
        assert_eq!(m0.expected_acquittals, Rational::new(1, 2));
        assert_eq!(t.cell("F", MeritLabel::Guilty).unwrap().count, 0);
        assert_eq!(t.total(MeritLabel::Innocent).expected_convictions, Rational::new(1, 5));
        let j = justice_metrics(&t);
        let f = j.group("F").unwrap();
        assert_eq!(f.convictions, Rational::new(1, 10));
        assert_eq!(f.guilty_share, Some(Rational::zero()));
        assert_eq!(j.total.convictions, Rational::new(17, 10));
    }

    #[test]
    fn nobody_convicted_has_no_guilty_share() {
        let pop = pop("id,J,X,attrs\na,0,1,sex=M\nb,1,1,sex=M\n");
        let t = expected_contingency(&pop, &DeterministicProcedure.into(), "sex").unwrap();
        let j = justice_metrics(&t);
        assert_eq!(j.group("M").unwrap().guilty_share, None);
        assert!(j.group("M").unwrap().convictions.is_zero());
    }

    #[test]
    fn contingency_requires_attribute_and_rates() {
        let pop = pop("id,J,X,attrs\na,0,1,sex=M\nb,1,1,\n");
        assert!(matches!(
            expected_contingency(&pop, &DeterministicProcedure.into(), "sex"),
            Err(Error::MissingAttribute { .. })
        ));
        let pop2 = pop_with_other_value();
        let proc = crate::procedure::make_group_fair(p("1/2"), p("1/2"), "sex", ["M"]).unwrap();
        assert!(matches!(
            expected_contingency(&pop2, &proc.into(), "sex"),
            Err(Error::MissingRate { .. })
        ));
    }

    fn pop_with_other_value() -> Population {
        pop("id,J,X,attrs\na,0,,sex=M\nb,1,,sex=F\n")
    }
}
