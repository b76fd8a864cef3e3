//! Group-fairness auditing of binary decision procedures judged against a
//! moral ground truth.
//!
//! Individuals carry a merit label `J` (1 = innocent, 0 = guilty) and, for
//! deterministic procedures, the determinant criterion `X` with `U = X`.
//! Procedures are described by their conviction rates
//! `h = P(U=0|J=0)` and `k = P(U=0|J=1)`, audited for same-merit,
//! cross-group equality of those rates, and placed in ROC space.
//! [`theorem`] constructs the groups on which any imperfect deterministic
//! procedure is unfair.

pub mod cli;
pub mod error;
pub mod example1;
pub mod fairness;
pub mod population;
pub mod procedure;
pub mod rational;
pub mod roc;
pub mod theorem;

pub use error::{Error, Result};
pub use fairness::{
    audit, check_absolute_fairness, check_pairwise_fairness, expected_contingency, justice_metrics, AbsoluteMode,
    ConditionalRates, ContingencyTable, FairnessVerdict, JusticeMetrics,
};
pub use population::{
    group_members, load_population, merit_counts, Criterion, GroupSpec, Individual, MeritCounts, MeritLabel, Population,
};
pub use procedure::{
    apply_deterministic, empirical_rates, exact_rates, make_group_fair, simulate, DeterministicProcedure, Outcome,
    OutcomeAssignment, Procedure, RandomizedProcedure, RatePair,
};
pub use rational::{Probability, Rational, Tolerance};
pub use roc::{classify, export_diagram, to_diamond, DiagramFormat, LabeledPoint, ProcedureClass, RocPoint};
pub use theorem::{construct_witness, exhaustive_search, verify_theorem, PropertyReport, WitnessReport};
