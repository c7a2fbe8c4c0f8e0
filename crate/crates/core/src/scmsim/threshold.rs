//! Binary structural causal models driven by standard normal noise.
//!
//! Every endogenous variable is an indicator `I(U < offset + sum of
//! coefficient * input)`, where the inputs are earlier endogenous
//! variables or exogenous terms.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{ContingencyTable, Dataset};
use crate::symexpr::{Assignment, DistOracle, DistTerm};
use crate::var::{Var, VarSet, VertexKind};

/// `I(noise < offset + sum coefficient * input)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub noise: String,
    pub offset: f64,
    #[serde(default)]
    pub coefficients: Vec<(String, f64)>,
}

impl Threshold {
    pub fn new(noise: &str, offset: f64, coefficients: &[(&str, f64)]) -> Self {
        Threshold {
            noise: noise.to_string(),
            offset,
            coefficients: coefficients.iter().map(|(n, c)| (n.to_string(), *c)).collect(),
        }
    }
}

/// Where a sample is drawn: the target population or a named domain whose
/// overrides replace some assignments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Context {
    Target,
    Domain(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scm {
    /// Exogenous standard normal terms.
    pub exogenous: Vec<String>,
    /// Endogenous variables in topological order.
    pub endogenous: Vec<(String, Threshold)>,
    /// Per-domain replacement assignments.
    #[serde(default)]
    pub domains: BTreeMap<String, Vec<(String, Threshold)>>,
}

/// An input resolved to a slot: exogenous index or endogenous index.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Exo(usize),
    Endo(usize),
}

#[derive(Clone, Debug)]
struct Compiled {
    noise: usize,
    offset: f64,
    terms: Vec<(Slot, f64)>,
}

/// Identifies the random streams of one sampling task; every tuple gives
/// an independent generator per exogenous term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub scenario: u64,
    pub replication: u64,
    pub purpose: u64,
}

impl StreamKey {
    pub fn new(seed: u64, scenario: u64, replication: u64, purpose: u64) -> Self {
        StreamKey {
            seed,
            scenario,
            replication,
            purpose,
        }
    }

    /// Generator for stream `index` of this key.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, word) in key
            .chunks_mut(8)
            .zip([self.seed, self.scenario, self.replication, self.purpose])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index);
        rng
    }
}

impl Scm {
    pub fn new(
        exogenous: Vec<String>,
        endogenous: Vec<(String, Threshold)>,
        domains: BTreeMap<String, Vec<(String, Threshold)>>,
    ) -> Result<Self> {
        let scm = Scm {
            exogenous,
            endogenous,
            domains,
        };
        scm.compile(&Context::Target)?;
        for d in scm.domains.keys() {
            scm.compile(&Context::Domain(d.clone()))?;
        }
        Ok(scm)
    }

    /// The therapy-trial model: background Z1, treatment X, blood cell
    /// count Z2, infections Z3, outcome Y and trial retention S, with
    /// latent terms shared by X and Z3 and by Y and Z3. In domain `T` the
    /// background variable is more often 1.
    pub fn therapy_trial() -> Self {
        let exo = ["U_Z1", "U_Z2", "U_Z3", "U_X", "U_Y", "U_XZ3", "U_YZ3", "U_S"];
        let endo = vec![
            ("Z1".to_string(), Threshold::new("U_Z1", 0.0, &[])),
            (
                "X".to_string(),
                Threshold::new("U_X", 0.0, &[("Z1", 1.0), ("U_XZ3", 1.0)]),
            ),
            ("Z2".to_string(), Threshold::new("U_Z2", 0.0, &[("X", 1.0)])),
            (
                "Z3".to_string(),
                Threshold::new("U_Z3", 0.0, &[("Z1", 1.0), ("Z2", 1.0), ("U_XZ3", 1.0), ("U_YZ3", 1.0)]),
            ),
            (
                "Y".to_string(),
                Threshold::new("U_Y", -1.0, &[("Z1", 2.0), ("X", 1.0), ("U_YZ3", 1.0)]),
            ),
            ("S".to_string(), Threshold::new("U_S", 0.0, &[("Z3", 1.0)])),
        ];
        let domains = [(
            "T".to_string(),
            vec![("Z1".to_string(), Threshold::new("U_Z1", 1.0, &[]))],
        )]
        .into();
        Scm::new(exo.iter().map(|s| s.to_string()).collect(), endo, domains).expect("valid model")
    }

    pub fn endogenous_names(&self) -> Vec<&str> {
        self.endogenous.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.endogenous.iter().position(|(n, _)| n == name)
    }

    fn compile(&self, ctx: &Context) -> Result<Vec<Compiled>> {
        let overrides: &[(String, Threshold)] = match ctx {
            Context::Target => &[],
            Context::Domain(d) => self
                .domains
                .get(d)
                .ok_or_else(|| Error::input(format!("unknown domain `{d}`")))?,
        };
        for (name, _) in overrides {
            if overrides.iter().filter(|(n, _)| n == name).count() > 1 || self.index_of(name).is_none() {
                return Err(Error::Validation(format!(
                    "override of `{name}` must replace one assignment"
                )));
            }
        }
        let mut out = Vec::new();
        for (i, (name, base)) in self.endogenous.iter().enumerate() {
            if self.endogenous[..i].iter().any(|(n, _)| n == name) || self.exogenous.contains(name) {
                return Err(Error::Validation(format!("`{name}` is defined twice")));
            }
            let t = overrides
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .unwrap_or(base);
            let noise = self
                .exogenous
                .iter()
                .position(|e| *e == t.noise)
                .ok_or_else(|| Error::Validation(format!("`{name}`: unknown noise `{}`", t.noise)))?;
            let mut terms = Vec::new();
            for (input, c) in &t.coefficients {
                let slot = if let Some(j) = self.exogenous.iter().position(|e| e == input) {
                    Slot::Exo(j)
                } else if let Some(j) = self.endogenous[..i].iter().position(|(n, _)| n == input) {
                    Slot::Endo(j)
                } else {
                    return Err(Error::Validation(format!(
                        "`{name}` depends on `{input}`, which is not defined before it"
                    )));
                };
                terms.push((slot, *c));
            }
            out.push(Compiled {
                noise,
                offset: t.offset,
                terms,
            });
        }
        Ok(out)
    }

    fn fixed(&self, intervention: &Assignment) -> Result<Vec<Option<u32>>> {
        let mut fixed = vec![None; self.endogenous.len()];
        for (name, v) in intervention.iter() {
            let i = self
                .index_of(name)
                .ok_or_else(|| Error::input(format!("cannot intervene on unknown `{name}`")))?;
            if v > 1 {
                return Err(Error::input(format!("binary variable `{name}` cannot be set to {v}")));
            }
            fixed[i] = Some(v as u32);
        }
        Ok(fixed)
    }

    /// A sampler drawing rows from the streams of `key`.
    pub fn sampler(&self, ctx: &Context, intervention: &Assignment, key: StreamKey) -> Result<Sampler> {
        Ok(Sampler {
            plan: self.compile(ctx)?,
            fixed: self.fixed(intervention)?,
            rngs: (0..self.exogenous.len() as u64).map(|i| key.rng(i)).collect(),
            noise: vec![0.0; self.exogenous.len()],
        })
    }

    /// `n` draws of all endogenous variables.
    pub fn sample(
        &self,
        n: usize,
        key: StreamKey,
        ctx: &Context,
        intervention: &Assignment,
        declared: DistTerm,
        provenance: &str,
    ) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::input("sample size must be positive"));
        }
        let mut s = self.sampler(ctx, intervention, key)?;
        let w = self.endogenous.len();
        let mut values = vec![0u32; n * w];
        for row in values.chunks_mut(w) {
            s.draw(row);
        }
        let schema = self.endogenous.iter().map(|(n, _)| (n.clone(), 2)).collect();
        Dataset::new(schema, values, provenance, declared)
    }

    /// Keeps only the named columns of a dataset drawn by [`Scm::sample`].
    pub fn project(d: &Dataset, keep: &[&str], declared: DistTerm) -> Result<Dataset> {
        let cols: Vec<usize> = keep
            .iter()
            .map(|k| d.column(k).ok_or_else(|| Error::input(format!("no column `{k}`"))))
            .collect::<Result<_>>()?;
        let mut values = Vec::with_capacity(d.len() * cols.len());
        for row in d.rows() {
            values.extend(cols.iter().map(|&c| row[c]));
        }
        let schema = cols.iter().map(|&c| d.schema[c].clone()).collect();
        Dataset::new(schema, values, d.provenance.clone(), declared)
    }
}

pub struct Sampler {
    plan: Vec<Compiled>,
    fixed: Vec<Option<u32>>,
    rngs: Vec<ChaCha8Rng>,
    noise: Vec<f64>,
}

impl Sampler {
    /// Draws one row of endogenous values into `row`.
    pub fn draw(&mut self, row: &mut [u32]) {
        for (u, rng) in self.noise.iter_mut().zip(self.rngs.iter_mut()) {
            *u = rng.sample(StandardNormal);
        }
        for (i, c) in self.plan.iter().enumerate() {
            row[i] = match self.fixed[i] {
                Some(v) => v,
                None => {
                    let mut level = c.offset;
                    for &(slot, k) in &c.terms {
                        level += k * match slot {
                            Slot::Exo(j) => self.noise[j],
                            Slot::Endo(j) => row[j] as f64,
                        };
                    }
                    (self.noise[c.noise] < level) as u32
                }
            };
        }
    }
}

/// Size semantics of a selected trial sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RctSize {
    /// Recruit until `n` retained participants are collected.
    #[default]
    PostSelection,
    /// Recruit `n` participants and keep those retained.
    PreSelection,
}

/// A randomized trial run in a domain and subject to retention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RctDesign {
    pub treatment: String,
    pub treat_probability: f64,
    pub domain: String,
    pub selection: String,
    #[serde(default)]
    pub size: RctSize,
}

impl Default for RctDesign {
    fn default() -> Self {
        RctDesign {
            treatment: "X".into(),
            treat_probability: 0.5,
            domain: "T".into(),
            selection: "S".into(),
            size: RctSize::PostSelection,
        }
    }
}

impl RctDesign {
    /// P(all other outcomes | do(treatment), domain, selection).
    pub fn declared(&self, scm: &Scm) -> Result<DistTerm> {
        let outcomes: VarSet = scm
            .endogenous_names()
            .into_iter()
            .filter(|n| *n != self.treatment && *n != self.selection)
            .map(Var::new)
            .collect();
        DistTerm::new(
            outcomes,
            [Var::new(self.treatment.clone())].into(),
            [
                Var::with_kind(self.domain.clone(), VertexKind::Transportability),
                Var::with_kind(self.selection.clone(), VertexKind::Selection),
            ]
            .into(),
        )
    }
}

/// Randomized trial sample: treatment drawn by the design, only retained
/// rows kept. Columns are every endogenous variable except the selection
/// indicator.
pub fn rct_sample(scm: &Scm, n: usize, key: StreamKey, design: &RctDesign) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("sample size must be positive"));
    }
    let t = scm
        .index_of(&design.treatment)
        .ok_or_else(|| Error::input(format!("unknown treatment `{}`", design.treatment)))?;
    let s = scm
        .index_of(&design.selection)
        .ok_or_else(|| Error::input(format!("unknown selection `{}`", design.selection)))?;
    let ctx = Context::Domain(design.domain.clone());
    let mut sampler = scm.sampler(&ctx, &Assignment::new(), key)?;
    let mut assign_rng = key.rng(scm.exogenous.len() as u64);
    let w = scm.endogenous.len();
    let mut row = vec![0u32; w];
    let mut values = Vec::with_capacity(n * (w - 1));
    let mut kept = 0;
    let mut tries = 0u64;
    let max_tries = match design.size {
        RctSize::PostSelection => 1000 * n as u64 + 1_000_000,
        RctSize::PreSelection => n as u64,
    };
    while tries < max_tries && (design.size == RctSize::PreSelection || kept < n) {
        tries += 1;
        let arm = assign_rng.random_bool(design.treat_probability) as u32;
        sampler.fixed[t] = Some(arm);
        sampler.draw(&mut row);
        if row[s] == 1 {
            kept += 1;
            values.extend(row.iter().enumerate().filter(|(i, _)| *i != s).map(|(_, v)| *v));
        }
    }
    if kept == 0 || (design.size == RctSize::PostSelection && kept < n) {
        return Err(Error::Generation(format!(
            "retained {kept} of {tries} recruited participants; selection probability is (nearly) zero"
        )));
    }
    let schema = scm
        .endogenous
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != s)
        .map(|(_, (n, _))| (n.clone(), 2))
        .collect();
    Dataset::new(schema, values, "RCT", design.declared(scm)?)
}

/// Monte Carlo approximation of one interventional joint over all
/// endogenous variables.
pub struct McOracle {
    table: ContingencyTable,
    intervention: Assignment,
    pub draws: u64,
}

const ORACLE_CHUNK: u64 = 1 << 16;

impl McOracle {
    pub fn new(scm: &Scm, ctx: &Context, intervention: &Assignment, draws: u64, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::input("oracle needs at least one draw"));
        }
        let w = scm.endogenous.len();
        if w > 20 {
            return Err(Error::input("oracle tables are limited to 20 binary variables"));
        }
        let chunks = draws.div_ceil(ORACLE_CHUNK);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|c| -> Result<Vec<u64>> {
                let mut s = scm.sampler(ctx, intervention, StreamKey::new(seed, u64::MAX, c, 0))?;
                let mut counts = vec![0u64; 1 << w];
                let mut row = vec![0u32; w];
                let len = ORACLE_CHUNK.min(draws - c * ORACLE_CHUNK);
                for _ in 0..len {
                    s.draw(&mut row);
                    let idx = row.iter().fold(0usize, |acc, &x| acc << 1 | x as usize);
                    counts[idx] += 1;
                }
                Ok(counts)
            })
            .try_reduce(
                || vec![0u64; 1 << w],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        Ok(McOracle {
            table: ContingencyTable {
                variables: scm.endogenous.iter().map(|(n, _)| n.clone()).collect(),
                cardinalities: vec![2; w],
                counts,
                smoothing: 0.0,
            },
            intervention: intervention.clone(),
            draws,
        })
    }

    pub fn table(&self) -> &ContingencyTable {
        &self.table
    }
}

impl DistOracle for McOracle {
    fn cardinality(&self, var: &Var) -> Option<usize> {
        self.table.index_of(&var.name).map(|_| 2)
    }

    fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64> {
        let names: Vec<&str> = term.interventions().iter().map(|v| v.name.as_str()).collect();
        let mine: Vec<&str> = self.intervention.iter().map(|(n, _)| n).collect();
        if names != mine {
            return Err(Error::MissingInput(format!("{term} under a different intervention")));
        }
        for v in term.interventions() {
            if a.value_of(v) != self.intervention.get(&v.name) {
                return Err(Error::MissingInput(format!("{term} at a different intervention value")));
            }
        }
        let pick = |set: &VarSet| -> Result<Vec<(usize, usize)>> {
            set.iter()
                .map(|v| {
                    let c = self
                        .table
                        .index_of(&v.name)
                        .ok_or_else(|| Error::MissingInput(format!("`{}` is not simulated", v.name)))?;
                    let x = a
                        .value_of(v)
                        .ok_or_else(|| Error::input(format!("variable `{}` is unassigned", v.name)))?;
                    Ok((c, x))
                })
                .collect()
        };
        self.table
            .conditional(&pick(term.outcomes())?, &pick(term.conditions())?, "oracle")
    }
}
