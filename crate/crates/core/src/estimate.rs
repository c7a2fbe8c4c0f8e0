//! Datasets, contingency tables and plug-in estimation.

use std::collections::BTreeMap;
use std::io::Read;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symexpr::{evaluate_with_diagnostics, Assignment, DistOracle, DistTerm, EvalDiagnostics, Expr};
use crate::var::{Var, REGIME_VALUE};

/// Integer-coded records for one data source.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// Column names with their cardinalities, in column order.
    pub schema: Vec<(String, usize)>,
    /// Row-major values, `schema.len()` per row.
    pub values: Vec<u32>,
    pub provenance: String,
    /// The distribution this dataset is a sample from.
    pub declared: DistTerm,
}

impl Dataset {
    pub fn new(
        schema: Vec<(String, usize)>,
        values: Vec<u32>,
        provenance: impl Into<String>,
        declared: DistTerm,
    ) -> Result<Self> {
        let w = schema.len();
        if w == 0 {
            return Err(Error::input("dataset has no columns"));
        }
        for (i, (name, _)) in schema.iter().enumerate() {
            if schema[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::input(format!("duplicate column `{name}`")));
            }
        }
        if values.is_empty() || !values.len().is_multiple_of(w) {
            return Err(Error::input("dataset needs at least one complete row"));
        }
        for row in values.chunks(w) {
            for (x, (name, k)) in row.iter().zip(&schema) {
                if *x as usize >= *k {
                    return Err(Error::input(format!(
                        "value {x} of `{name}` exceeds its cardinality {k}"
                    )));
                }
            }
        }
        let d = Dataset {
            schema,
            values,
            provenance: provenance.into(),
            declared,
        };
        for v in d.declared.outcomes() {
            if d.column(&v.name).is_none() {
                return Err(Error::input(format!(
                    "{}: outcome `{}` has no column",
                    d.provenance, v.name
                )));
            }
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.schema.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|(n, _)| n == name)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.values.chunks(self.schema.len())
    }
}

/// Reads a headered CSV of nonnegative integer codes. A column's
/// cardinality is one more than its largest value, and at least two.
pub fn read_csv(reader: impl Read, provenance: &str, declared: DistTerm) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    for h in &headers {
        crate::var::validate_name(h).map_err(|e| Error::parse(1, e.to_string()))?;
    }
    let mut values = Vec::new();
    let mut max = vec![0u32; headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(Error::parse(line, "wrong number of fields"));
        }
        for (j, field) in rec.iter().enumerate() {
            let x: u32 = field
                .parse()
                .map_err(|_| Error::parse(line, format!("`{field}` is not a nonnegative integer")))?;
            if x > 1 << 16 {
                return Err(Error::parse(
                    line,
                    format!("value {x} is implausibly large for a category code"),
                ));
            }
            max[j] = max[j].max(x);
            values.push(x);
        }
    }
    let schema = headers
        .into_iter()
        .zip(max)
        .map(|(h, m)| (h, (m as usize + 1).max(2)))
        .collect();
    Dataset::new(schema, values, provenance, declared)
}

/// Counts over the full product range of a dataset's columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContingencyTable {
    pub variables: Vec<String>,
    pub cardinalities: Vec<usize>,
    pub counts: Vec<u64>,
    /// Pseudo-count added to every cell; zero gives empirical proportions.
    pub smoothing: f64,
}

pub fn fit(d: &Dataset) -> ContingencyTable {
    fit_smoothed(d, 0.0)
}

pub fn fit_smoothed(d: &Dataset, smoothing: f64) -> ContingencyTable {
    let cards: Vec<usize> = d.schema.iter().map(|(_, k)| *k).collect();
    let mut counts = vec![0u64; cards.iter().product()];
    for row in d.rows() {
        let mut idx = 0;
        for (x, k) in row.iter().zip(&cards) {
            idx = idx * k + *x as usize;
        }
        counts[idx] += 1;
    }
    ContingencyTable {
        variables: d.schema.iter().map(|(n, _)| n.clone()).collect(),
        cardinalities: cards,
        counts,
        smoothing,
    }
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    /// Smoothed mass of the cells matching every `(column, value)` pair.
    pub fn mass(&self, fixed: &[(usize, usize)]) -> f64 {
        let mut strides = vec![1usize; self.cardinalities.len()];
        for i in (0..self.cardinalities.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cardinalities[i + 1];
        }
        if fixed.iter().any(|&(c, x)| x >= self.cardinalities[c]) {
            return 0.0;
        }
        self.counts
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                fixed
                    .iter()
                    .all(|&(c, x)| (i / strides[c]) % self.cardinalities[c] == x)
            })
            .map(|(_, &n)| n as f64 + self.smoothing)
            .sum()
    }

    /// Empirical P(event | given); an empty conditioning stratum is an error.
    pub fn conditional(&self, event: &[(usize, usize)], given: &[(usize, usize)], label: &str) -> Result<f64> {
        let den = self.mass(given);
        if den == 0.0 {
            let stratum: Vec<String> = given
                .iter()
                .map(|&(c, x)| format!("{}={x}", self.variables[c]))
                .collect();
            return Err(Error::EmptyStratum {
                table: label.to_string(),
                stratum: format!("{{{}}}", stratum.join(", ")),
            });
        }
        let both: Vec<(usize, usize)> = given.iter().chain(event).copied().collect();
        Ok(self.mass(&both) / den)
    }
}

/// The first declared term that covers `atom`.
pub fn match_atom<'a>(atom: &DistTerm, declared: &'a [DistTerm]) -> Result<&'a DistTerm> {
    let mut hits = declared.iter().filter(|d| d.covers(atom));
    let first = hits
        .next()
        .ok_or_else(|| Error::MissingInput(format!("no data source covers {atom}")))?;
    if hits.next().is_some() {
        warn!("{atom} is covered by several data sources; using {first}");
    }
    Ok(first)
}

/// Answers atoms from fitted tables, one per data source.
pub struct TableOracle {
    declared: Vec<DistTerm>,
    tables: Vec<ContingencyTable>,
    labels: Vec<String>,
    cards: BTreeMap<String, usize>,
}

impl TableOracle {
    pub fn new(datasets: &[Dataset]) -> Self {
        Self::with_smoothing(datasets, 0.0)
    }

    pub fn with_smoothing(datasets: &[Dataset], smoothing: f64) -> Self {
        let mut cards = BTreeMap::new();
        for d in datasets {
            for (n, k) in &d.schema {
                let e = cards.entry(n.clone()).or_insert(*k);
                *e = (*e).max(*k);
            }
        }
        TableOracle {
            declared: datasets.iter().map(|d| d.declared.clone()).collect(),
            tables: datasets.iter().map(|d| fit_smoothed(d, smoothing)).collect(),
            labels: datasets.iter().map(|d| d.provenance.clone()).collect(),
            cards,
        }
    }

    pub fn from_tables(parts: Vec<(DistTerm, ContingencyTable, String)>) -> Self {
        let mut cards = BTreeMap::new();
        for (_, t, _) in &parts {
            for (n, k) in t.variables.iter().zip(&t.cardinalities) {
                let e = cards.entry(n.clone()).or_insert(*k);
                *e = (*e).max(*k);
            }
        }
        let mut o = TableOracle {
            declared: Vec::new(),
            tables: Vec::new(),
            labels: Vec::new(),
            cards,
        };
        for (d, t, l) in parts {
            o.declared.push(d);
            o.tables.push(t);
            o.labels.push(l);
        }
        o
    }
}

impl DistOracle for TableOracle {
    fn cardinality(&self, var: &Var) -> Option<usize> {
        self.cards.get(&var.name).copied()
    }

    fn prob(&self, atom: &DistTerm, a: &Assignment) -> Result<f64> {
        let source = match_atom(atom, &self.declared)?;
        let i = self.declared.iter().position(|d| d == source).expect("matched");
        let (table, label) = (&self.tables[i], &self.labels[i]);
        let value = |v: &Var| {
            a.value_of(v)
                .ok_or_else(|| Error::input(format!("variable `{}` is unassigned", v.name)))
        };
        let mut event = Vec::new();
        for v in atom.outcomes() {
            let c = table
                .index_of(&v.name)
                .ok_or_else(|| Error::MissingInput(format!("{label} has no column `{}`", v.name)))?;
            event.push((c, value(v)?));
        }
        let mut given = Vec::new();
        for v in atom.conditions().iter().chain(atom.interventions()) {
            match table.index_of(&v.name) {
                Some(c) => given.push((c, value(v)?)),
                // Regime indicators are constants of the sampling design.
                None if v.is_regime() && value(v)? == REGIME_VALUE => {}
                None if v.is_regime() => return Ok(0.0),
                None => {
                    return Err(Error::MissingInput(format!(
                        "{label} has no column `{}` needed by {atom}",
                        v.name
                    )))
                }
            }
        }
        table.conditional(&event, &given, label)
    }
}

/// What a plug-in estimate does when a conditional is requested on a
/// stratum without observations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyStratumPolicy {
    /// Report the empty stratum as an error.
    #[default]
    Fail,
    /// Give up on this estimate; callers running many replications drop it.
    Skip,
    /// Read the conditional probability as zero.
    Zero,
}

impl std::str::FromStr for EmptyStratumPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" => Ok(EmptyStratumPolicy::Fail),
            "skip" => Ok(EmptyStratumPolicy::Skip),
            "zero" => Ok(EmptyStratumPolicy::Zero),
            _ => Err(Error::input(format!(
                "unknown empty-stratum policy `{s}`; expected fail, skip or zero"
            ))),
        }
    }
}

/// Wraps an oracle so that empty strata answer zero.
pub struct EmptyAsZero<O>(pub O);

impl<O: DistOracle> DistOracle for EmptyAsZero<O> {
    fn cardinality(&self, var: &Var) -> Option<usize> {
        self.0.cardinality(var)
    }

    fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64> {
        match self.0.prob(term, a) {
            Err(Error::EmptyStratum { .. }) => Ok(0.0),
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub diagnostics: EvalDiagnostics,
}

/// Plug-in estimate of `e` at `target` with the trapdoor variables fixed
/// by `trapdoors`. Every free variable must be assigned by one of the two.
pub fn plug_in(e: &Expr, oracle: &impl DistOracle, trapdoors: &Assignment, target: &Assignment) -> Result<Estimate> {
    let mut a = target.clone();
    for (k, v) in trapdoors.iter() {
        if a.get(k).is_some_and(|x| x != v) {
            return Err(Error::input(format!(
                "`{k}` is assigned both as a target and a trapdoor"
            )));
        }
        a.set(k, v);
    }
    let missing: Vec<String> = e
        .free_vars()
        .into_iter()
        .filter(|v| a.get(&v.name).is_none())
        .map(|v| v.name)
        .collect();
    if !missing.is_empty() {
        return Err(Error::input(format!(
            "free variables {} need a target or trapdoor value",
            missing.join(", ")
        )));
    }
    let (value, diagnostics) = evaluate_with_diagnostics(e, oracle, &a)?;
    Ok(Estimate { value, diagnostics })
}
