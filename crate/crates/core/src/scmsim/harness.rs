//! Repeated-sampling study of a plug-in estimator that combines a
//! selected trial with an observational survey.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threshold::{rct_sample, Context, McOracle, RctDesign, Scm, StreamKey};
use crate::dsl::ProblemSpec;
use crate::error::{Error, Result};
use crate::estimate::{plug_in, EmptyAsZero, EmptyStratumPolicy, TableOracle};
use crate::identify::{search, SearchOptions, SearchStatus};
use crate::symexpr::{Assignment, DistOracle, DistTerm, Expr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub rct: usize,
    pub survey: usize,
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_replications() -> usize {
    2000
}

fn default_oracle_draws() -> u64 {
    10_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub trapdoor: String,
    pub trapdoor_values: Vec<usize>,
    /// Values of the query's outcomes and interventions.
    pub target: BTreeMap<String, usize>,
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: u64,
    #[serde(default)]
    pub empty_strata: EmptyStratumPolicy,
    #[serde(default)]
    pub rct_design: RctDesign,
    #[serde(rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

/// Parses and validates a TOML study description.
pub fn parse_scenarios(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        Error::parse(line, e.message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Validation("replications must be positive".into()));
        }
        if self.oracle_draws == 0 {
            return Err(Error::Validation("oracle_draws must be positive".into()));
        }
        if self.trapdoor_values.is_empty() {
            return Err(Error::Validation("at least one trapdoor value is required".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Validation("at least one [[scenario]] is required".into()));
        }
        if let Some(s) = self.scenarios.iter().find(|s| s.rct == 0 || s.survey == 0) {
            return Err(Error::Validation(format!(
                "scenario ({}, {}) has an empty sample",
                s.rct, s.survey
            )));
        }
        if !(0.0..=1.0).contains(&self.rct_design.treat_probability) {
            return Err(Error::Validation("treat_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Bias and RMSE of one scenario, one entry per trapdoor value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub rct: usize,
    pub survey: usize,
    pub bias: Vec<f64>,
    pub rmse: Vec<f64>,
    /// Replications whose estimate was dropped under the skip policy.
    pub dropped: Vec<usize>,
    /// Quotients read as 0/0 summed over replications.
    pub zero_over_zero: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub truth: f64,
    pub formula: Expr,
    pub trapdoor: String,
    pub trapdoor_values: Vec<usize>,
    pub replications: usize,
    pub results: Vec<ScenarioResult>,
    pub elapsed_secs: f64,
}

/// The sources a study draws: the interventional trial term and the
/// observational survey term among the problem inputs.
fn split_inputs(p: &ProblemSpec) -> Result<(DistTerm, DistTerm)> {
    let trial: Vec<&DistTerm> = p.inputs.iter().filter(|t| !t.interventions().is_empty()).collect();
    let survey: Vec<&DistTerm> = p
        .inputs
        .iter()
        .filter(|t| t.interventions().is_empty() && t.conditions().is_empty())
        .collect();
    match (trial.as_slice(), survey.as_slice()) {
        ([t], [s]) => Ok(((*t).clone(), (*s).clone())),
        _ => Err(Error::input(
            "a study needs exactly one interventional input and one unconditional observational input",
        )),
    }
}

/// Monte Carlo value of the query at `target`.
pub fn ground_truth(scm: &Scm, query: &DistTerm, target: &Assignment, draws: u64, seed: u64) -> Result<f64> {
    let mut intervention = Assignment::new();
    for v in query.interventions() {
        let x = target
            .get(&v.name)
            .ok_or_else(|| Error::input(format!("target does not set intervention `{}`", v.name)))?;
        intervention.set(v.name.clone(), x);
    }
    McOracle::new(scm, &Context::Target, &intervention, draws, seed)?.prob(query, target)
}

/// Runs every scenario of `cfg` for the problem `p` on `scm`.
pub fn run_scenarios(scm: &Scm, p: &ProblemSpec, cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (trial_term, survey_term) = split_inputs(p)?;
    if trial_term != cfg.rct_design.declared(scm)? {
        return Err(Error::input(format!(
            "the trial design yields {}, the problem declares {trial_term}",
            cfg.rct_design.declared(scm)?
        )));
    }
    let outcome = search(&p.graph, &p.inputs, &p.query, &SearchOptions::default())?;
    let formula = match (outcome.status, outcome.derivation) {
        (SearchStatus::Found, Some(d)) => d.result.canonicalize(),
        _ => return Err(Error::input(format!("{} is not identified within budget", p.query))),
    };
    if !formula.free_vars().iter().any(|v| v.name == cfg.trapdoor) {
        warn!(
            "`{}` is not free in {}; all trapdoor values agree",
            cfg.trapdoor,
            crate::symexpr::render::text(&formula)
        );
    }
    let target = Assignment(cfg.target.clone());
    let truth = ground_truth(scm, &p.query, &target, cfg.oracle_draws, cfg.seed)?;
    info!("ground truth {} = {truth:.4}", p.query);
    let survey_cols: Vec<String> = survey_term.outcomes().iter().map(|v| v.name.clone()).collect();
    let survey_cols: Vec<&str> = survey_cols.iter().map(String::as_str).collect();

    let mut results = Vec::new();
    for (k, sc) in cfg.scenarios.iter().enumerate() {
        let per_rep: Vec<Vec<Option<(f64, usize)>>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| -> Result<Vec<Option<(f64, usize)>>> {
                let key = |purpose| StreamKey::new(cfg.seed, k as u64, r as u64, purpose);
                let trial = rct_sample(scm, sc.rct, key(0), &cfg.rct_design)?;
                let full = scm.sample(
                    sc.survey,
                    key(1),
                    &Context::Target,
                    &Assignment::new(),
                    survey_term.clone(),
                    "survey",
                )?;
                let survey = Scm::project(&full, &survey_cols, survey_term.clone())?;
                let oracle = TableOracle::new(&[trial, survey]);
                cfg.trapdoor_values
                    .iter()
                    .map(|&z| {
                        let td = Assignment::new().with(&cfg.trapdoor, z);
                        let est = match cfg.empty_strata {
                            EmptyStratumPolicy::Zero => plug_in(&formula, &EmptyAsZero(&oracle), &td, &target),
                            _ => plug_in(&formula, &oracle, &td, &target),
                        };
                        match est {
                            Ok(e) => Ok(Some((e.value, e.diagnostics.zero_over_zero))),
                            Err(Error::EmptyStratum { .. } | Error::ZeroDenominator { .. })
                                if cfg.empty_strata == EmptyStratumPolicy::Skip =>
                            {
                                Ok(None)
                            }
                            Err(e) => Err(e),
                        }
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let n = cfg.trapdoor_values.len();
        let mut res = ScenarioResult {
            rct: sc.rct,
            survey: sc.survey,
            bias: vec![0.0; n],
            rmse: vec![0.0; n],
            dropped: vec![0; n],
            zero_over_zero: vec![0; n],
        };
        for j in 0..n {
            let (mut sum, mut sq, mut m) = (0.0, 0.0, 0usize);
            for rep in &per_rep {
                match rep[j] {
                    Some((v, zz)) => {
                        let err = v - truth;
                        sum += err;
                        sq += err * err;
                        m += 1;
                        res.zero_over_zero[j] += zz;
                    }
                    None => res.dropped[j] += 1,
                }
            }
            if m == 0 {
                return Err(Error::EmptyStratum {
                    table: format!("scenario ({}, {})", sc.rct, sc.survey),
                    stratum: format!("every replication at {}={}", cfg.trapdoor, cfg.trapdoor_values[j]),
                });
            }
            res.bias[j] = sum / m as f64;
            res.rmse[j] = (sq / m as f64).sqrt();
        }
        info!(
            "scenario ({}, {}): bias {:?} rmse {:?}",
            sc.rct, sc.survey, res.bias, res.rmse
        );
        results.push(res);
    }
    Ok(SimReport {
        truth,
        formula,
        trapdoor: cfg.trapdoor.clone(),
        trapdoor_values: cfg.trapdoor_values.clone(),
        replications: cfg.replications,
        results,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

impl SimReport {
    /// One row per scenario: sizes, then bias and RMSE per trapdoor value.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["RCT".to_string(), "Survey".to_string()];
        for stat in ["bias", "rmse"] {
            for z in &self.trapdoor_values {
                header.push(format!("{stat}_{}={z}", self.trapdoor));
            }
        }
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.results {
            let mut rec = vec![r.rct.to_string(), r.survey.to_string()];
            rec.extend(r.bias.iter().chain(&r.rmse).map(|x| format!("{x:.3}")));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}
