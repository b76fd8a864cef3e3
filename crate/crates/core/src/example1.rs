//! The male/female conviction example: a population split by sex with a
//! table of guilt, judged first by one global procedure and then by a
//! procedure constrained to be group-fair across the two sexes.

use serde::Serialize;

use crate::error::Result;
use crate::fairness::{
    check_pairwise_fairness, expected_contingency, justice_metrics, ContingencyTable, FairnessVerdict, GroupRates,
    JusticeMetrics,
};
use crate::population::{merit_counts, GroupSpec, Individual, MeritCounts, MeritLabel, Population};
use crate::procedure::{exact_rates, make_group_fair, Procedure, RandomizedProcedure, RatePair};
use crate::rational::{Probability, Tolerance};
use crate::roc::{classify, ProcedureClass};

pub const ATTRIBUTE: &str = "sex";

/// `(value, guilty, innocent)` per sex.
pub const GUILT_TABLE: [(&str, usize, usize); 2] = [("M", 2000, 4000), ("F", 500, 3500)];

/// Population size stated in the prose of the example; the
/// tables it gives add up to 10000.
pub const STATED_POPULATION: usize = 12000;

pub fn conviction_rates() -> RatePair {
    RatePair::new(Probability::from_ratio(3, 4), Probability::from_ratio(1, 10))
}

/// 10000 individuals following the guilt table. Ids are `M00001`… and
/// `F00001`…, guilty members first within each sex. No one has `X`.
pub fn population() -> Population {
    let mut members = Vec::with_capacity(10_000);
    for (sex, guilty, innocent) in GUILT_TABLE {
        let merits =
            std::iter::repeat_n(MeritLabel::Guilty, guilty).chain(std::iter::repeat_n(MeritLabel::Innocent, innocent));
        for (i, merit) in merits.enumerate() {
            let m = Individual::new(format!("{sex}{:05}", i + 1), merit)
                .and_then(|m| m.with_attribute(ATTRIBUTE, sex))
                .expect("valid synthetic individual");
            members.push(m);
        }
    }
    Population::new(members).expect("synthetic ids are unique")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupCounts {
    pub value: String,
    pub counts: MeritCounts,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub procedure: serde_json::Value,
    pub rates_by_group: Vec<GroupRates>,
    pub class: ProcedureClass,
    pub verdict: FairnessVerdict,
    pub contingency: ContingencyTable,
    pub justice: JusticeMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example1Report {
    pub population_size: usize,
    pub stated_population_size: usize,
    pub groups: Vec<GroupCounts>,
    pub totals: MeritCounts,
    pub stages: Vec<Stage>,
    pub notes: Vec<String>,
}

fn run_stage(name: &str, pop: &Population, proc: Procedure) -> Result<Stage> {
    let groups: Vec<String> = GUILT_TABLE.iter().map(|(v, _, _)| v.to_string()).collect();
    let rates_by_group = groups
        .iter()
        .map(|v| {
            let group = GroupSpec::attribute(ATTRIBUTE, v);
            let rates = exact_rates(&proc, pop, &group)?;
            let class = rates.roc_point().map(|p| classify(&p, 0.0)).transpose()?;
            Ok(GroupRates { group, rates, class })
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = (&rates_by_group[0], &rates_by_group[1]);
    let verdict =
        check_pairwise_fairness(&a.rates, &b.rates, &Tolerance::zero()).with_groups(a.group.clone(), b.group.clone());
    let point = a.rates.roc_point().expect("both merit classes are populated");
    let contingency = expected_contingency(pop, &proc, ATTRIBUTE)?;
    Ok(Stage {
        name: name.to_string(),
        procedure: proc.to_json(),
        class: classify(&point, 0.0)?,
        verdict,
        justice: justice_metrics(&contingency),
        contingency,
        rates_by_group,
    })
}

pub fn report() -> Result<Example1Report> {
    let pop = population();
    let groups = GUILT_TABLE
        .iter()
        .map(|(v, _, _)| {
            Ok(GroupCounts {
                value: v.to_string(),
                counts: merit_counts(&pop, &GroupSpec::attribute(ATTRIBUTE, *v))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rates = conviction_rates();
    let global = Procedure::Randomized(RandomizedProcedure::Global(rates.clone()));
    let fair = Procedure::Randomized(make_group_fair(rates.h, rates.k, ATTRIBUTE, ["M", "F"])?);
    let stages = vec![run_stage("global", &pop, global)?, run_stage("group-fair", &pop, fair)?];
    Ok(Example1Report {
        population_size: pop.len(),
        stated_population_size: STATED_POPULATION,
        totals: MeritCounts::of(pop.members()),
        groups,
        stages,
        notes: vec![
            format!(
                "the example's prose states a population of {STATED_POPULATION}, but its attribute table (6000 M + 4000 F) and guilt tables sum to {}; the tables are reproduced",
                pop.len()
            ),
            "the group-fair display lists P(U=0|J=1)=3/4 and P(U=0|J=0)=1/10, but its result tables (1500 = 2000·3/4, 400 = 4000·1/10) require h=3/4 for the guilty and k=1/10 for the innocent; the tables are followed".to_string(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Rational;

    #[test]
    fn population_matches_tables() {
        let pop = population();
        assert_eq!(pop.len(), 10_000);
        let m = merit_counts(&pop, &GroupSpec::attribute("sex", "M")).unwrap();
        let f = merit_counts(&pop, &GroupSpec::attribute("sex", "F")).unwrap();
        assert_eq!((m.guilty, m.innocent), (2000, 4000));
        assert_eq!((f.guilty, f.innocent), (500, 3500));
        assert_eq!(m.total(), 6000);
        assert_eq!(f.total(), 4000);
    }

    #[test]
    fn both_stages_agree() {
        let r = report().unwrap();
        assert_eq!(r.stages.len(), 2);
        for stage in &r.stages {
            assert!(stage.verdict.fair);
            assert_eq!(stage.class, ProcedureClass::ImperfectlyJust);
            assert_eq!(
                stage.contingency.total(MeritLabel::Guilty).expected_convictions,
                Rational::from_integer(1875)
            );
            assert_eq!(
                stage.contingency.total(MeritLabel::Innocent).expected_convictions,
                Rational::from_integer(750)
            );
        }
        assert_eq!(r.stages[0].contingency, r.stages[1].contingency);
    }
}
