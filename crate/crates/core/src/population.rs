//! Individuals, populations and the groups carved out of them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Moral ground truth `J`: whether an individual deserves acquittal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum MeritLabel {
    /// `J = 0`, deserves conviction.
    Guilty,
    /// `J = 1`, deserves acquittal.
    Innocent,
}

impl MeritLabel {
    pub const ALL: [MeritLabel; 2] = [MeritLabel::Guilty, MeritLabel::Innocent];

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(MeritLabel::Guilty),
            1 => Some(MeritLabel::Innocent),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            MeritLabel::Guilty => 0,
            MeritLabel::Innocent => 1,
        }
    }

    pub fn index(self) -> usize {
        self.as_u8() as usize
    }
}

/// The determinant facts `X` of a deterministic procedure.
/// `Acquit` is `X = 1`, `Convict` is `X = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Criterion {
    Convict,
    Acquit,
}

impl Criterion {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Criterion::Convict),
            1 => Some(Criterion::Acquit),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Criterion::Convict => 0,
            Criterion::Acquit => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Individual {
    id: String,
    merit: MeritLabel,
    criterion: Option<Criterion>,
    attributes: BTreeMap<String, String>,
}

impl Individual {
    pub fn new(id: impl Into<String>, merit: MeritLabel) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidIndividual("empty id".into()));
        }
        Ok(Individual {
            id,
            merit,
            criterion: None,
            attributes: BTreeMap::new(),
        })
    }

    pub fn with_criterion(mut self, x: Criterion) -> Self {
        self.criterion = Some(x);
        self
    }

    /// Adds a categorical attribute. Names must be non-empty and free of
    /// `=`/`;`; values must be non-empty and free of `;`.
    pub fn with_attribute(mut self, name: impl Into<String>, value: impl Into<String>) -> Result<Self> {
        let (name, value) = (name.into(), value.into());
        if name.is_empty() || name.contains(['=', ';']) {
            return Err(Error::InvalidIndividual(format!("bad attribute name `{name}`")));
        }
        if value.is_empty() || value.contains(';') {
            return Err(Error::InvalidIndividual(format!(
                "bad value `{value}` for attribute `{name}`"
            )));
        }
        if self.attributes.contains_key(&name) {
            return Err(Error::InvalidIndividual(format!("attribute `{name}` given twice")));
        }
        self.attributes.insert(name, value);
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn merit(&self) -> MeritLabel {
        self.merit
    }

    pub fn criterion(&self) -> Option<Criterion> {
        self.criterion
    }

    pub fn require_criterion(&self) -> Result<Criterion> {
        self.criterion.ok_or_else(|| Error::MissingCriterion(self.id.clone()))
    }

    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes.get(name).map(String::as_str)
    }

    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }
}

/// An ordered collection of individuals with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Population {
    members: Vec<Individual>,
    index: HashMap<String, usize>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Result<Self> {
        let mut index = HashMap::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            if index.insert(m.id.clone(), i).is_some() {
                return Err(Error::DuplicateMember(m.id.clone()));
            }
        }
        Ok(Population { members, index })
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Individual> {
        self.index.get(id).map(|&i| &self.members[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyPopulation)
        } else {
            Ok(())
        }
    }

    /// Distinct values of `attribute` in order of first appearance.
    pub fn attribute_values(&self, attribute: &str) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.members
            .iter()
            .filter_map(|m| m.attribute(attribute))
            .filter(|v| seen.insert(v.to_string()))
            .map(str::to_string)
            .collect()
    }

    /// Writes the population CSV (`id,J,X,attrs`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["id", "J", "X", "attrs"]).map_err(csv_io)?;
        for m in &self.members {
            let j = m.merit.as_u8().to_string();
            let x = m.criterion.map(|c| c.as_u8().to_string()).unwrap_or_default();
            let attrs = m
                .attributes
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([m.id.as_str(), &j, &x, &attrs]).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Reads a population from CSV with header `id,J,X,attrs`.
///
/// Columns may appear in any order; `X` and `attrs` are optional columns.
pub fn load_population<R: Read>(source: R) -> Result<Population> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = column("id").ok_or_else(|| parse_error(1, "missing `id` column"))?;
    let j_col = column("J").ok_or_else(|| parse_error(1, "missing `J` column"))?;
    let x_col = column("X");
    let attrs_col = column("attrs");

    let mut members = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_error(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");

        let id = field(id_col);
        if id.is_empty() {
            return Err(parse_error(line, "empty id"));
        }
        if seen.insert(id.to_string(), line).is_some() {
            return Err(Error::DuplicateId {
                line,
                id: id.to_string(),
            });
        }
        let merit = parse_bit(field(j_col))
            .and_then(MeritLabel::from_u8)
            .ok_or_else(|| parse_error(line, format!("J must be 0 or 1, got `{}`", field(j_col))))?;
        let mut individual = Individual::new(id, merit).map_err(|e| parse_error(line, e.to_string()))?;

        if let Some(c) = x_col {
            let raw = field(c);
            if !raw.is_empty() {
                let x = parse_bit(raw)
                    .and_then(Criterion::from_u8)
                    .ok_or_else(|| parse_error(line, format!("X must be 0, 1 or empty, got `{raw}`")))?;
                individual = individual.with_criterion(x);
            }
        }
        if let Some(c) = attrs_col {
            for pair in field(c).split(';').filter(|p| !p.is_empty()) {
                let (name, value) = pair
                    .split_once('=')
                    .ok_or_else(|| parse_error(line, format!("attribute `{pair}` is not name=value")))?;
                individual = individual
                    .with_attribute(name, value)
                    .map_err(|e| parse_error(line, e.to_string()))?;
            }
        }
        members.push(individual);
    }
    Population::new(members)
}

fn parse_bit(s: &str) -> Option<u8> {
    match s {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

fn parse_error(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Selects a sub-population.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSpec {
    AttributeEquals { name: String, value: String },
    CriterionEquals(u8),
    ExplicitIdSet(BTreeSet<String>),
    Singleton(String),
}

impl GroupSpec {
    pub fn attribute(name: impl Into<String>, value: impl Into<String>) -> Self {
        GroupSpec::AttributeEquals {
            name: name.into(),
            value: value.into(),
        }
    }

    pub fn criterion(x: Criterion) -> Self {
        GroupSpec::CriterionEquals(x.as_u8())
    }

    pub fn ids<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GroupSpec::ExplicitIdSet(ids.into_iter().map(Into::into).collect())
    }

    /// Fails when the group references ids absent from `pop`.
    pub fn validate(&self, pop: &Population) -> Result<()> {
        match self {
            GroupSpec::ExplicitIdSet(ids) => {
                if let Some(missing) = ids.iter().find(|id| pop.get(id).is_none()) {
                    return Err(Error::UnknownId(missing.clone()));
                }
            }
            GroupSpec::Singleton(id) if pop.get(id).is_none() => {
                return Err(Error::UnknownId(id.clone()));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn contains(&self, individual: &Individual) -> bool {
        match self {
            GroupSpec::AttributeEquals { name, value } => individual.attribute(name) == Some(value.as_str()),
            GroupSpec::CriterionEquals(x) => individual.criterion().map(Criterion::as_u8) == Some(*x),
            GroupSpec::ExplicitIdSet(ids) => ids.contains(individual.id()),
            GroupSpec::Singleton(id) => individual.id() == id,
        }
    }

    pub fn label(&self) -> String {
        match self {
            GroupSpec::AttributeEquals { name, value } => format!("{name}={value}"),
            GroupSpec::CriterionEquals(x) => format!("X={x}"),
            GroupSpec::ExplicitIdSet(ids) => {
                format!("{{{}}}", ids.iter().cloned().collect::<Vec<_>>().join(","))
            }
            GroupSpec::Singleton(id) => format!("{{{id}}}"),
        }
    }
}

/// Members selected by `g`, in population order.
pub fn group_members<'a>(pop: &'a Population, g: &GroupSpec) -> Result<Vec<&'a Individual>> {
    g.validate(pop)?;
    Ok(pop.members().iter().filter(|m| g.contains(m)).collect())
}

/// Number of guilty and innocent members.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MeritCounts {
    pub guilty: usize,
    pub innocent: usize,
}

impl MeritCounts {
    pub fn of<'a, I: IntoIterator<Item = &'a Individual>>(members: I) -> Self {
        members.into_iter().fold(MeritCounts::default(), |mut c, m| {
            match m.merit() {
                MeritLabel::Guilty => c.guilty += 1,
                MeritLabel::Innocent => c.innocent += 1,
            }
            c
        })
    }

    pub fn get(&self, merit: MeritLabel) -> usize {
        match merit {
            MeritLabel::Guilty => self.guilty,
            MeritLabel::Innocent => self.innocent,
        }
    }

    pub fn total(&self) -> usize {
        self.guilty + self.innocent
    }
}

pub fn merit_counts(pop: &Population, g: &GroupSpec) -> Result<MeritCounts> {
    Ok(MeritCounts::of(group_members(pop, g)?))
}
