use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::var::{join_names, VarSet};

/// A symbolic distribution P(outcomes | do(interventions), conditions).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawDistTerm")]
pub struct DistTerm {
    outcomes: VarSet,
    interventions: VarSet,
    conditions: VarSet,
}

#[derive(Deserialize)]
struct RawDistTerm {
    outcomes: VarSet,
    interventions: VarSet,
    conditions: VarSet,
}

impl TryFrom<RawDistTerm> for DistTerm {
    type Error = Error;

    fn try_from(raw: RawDistTerm) -> Result<Self> {
        DistTerm::new(raw.outcomes, raw.interventions, raw.conditions)
    }
}

impl DistTerm {
    pub fn new(outcomes: VarSet, interventions: VarSet, conditions: VarSet) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::input("a distribution needs at least one outcome"));
        }
        let overlap = outcomes
            .intersection(&interventions)
            .chain(outcomes.intersection(&conditions))
            .chain(interventions.intersection(&conditions))
            .next();
        if let Some(v) = overlap {
            return Err(Error::input(format!(
                "variable `{}` appears in more than one role",
                v.name
            )));
        }
        // Names must also be unique across kinds.
        let mut names: Vec<&str> = outcomes
            .iter()
            .chain(&interventions)
            .chain(&conditions)
            .map(|v| v.name.as_str())
            .collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("variable name used with two different kinds"));
        }
        Ok(DistTerm {
            outcomes,
            interventions,
            conditions,
        })
    }

    /// Observational joint P(outcomes).
    pub fn joint(outcomes: VarSet) -> Result<Self> {
        Self::new(outcomes, VarSet::new(), VarSet::new())
    }

    pub fn outcomes(&self) -> &VarSet {
        &self.outcomes
    }

    pub fn interventions(&self) -> &VarSet {
        &self.interventions
    }

    pub fn conditions(&self) -> &VarSet {
        &self.conditions
    }

    /// All variables mentioned by the term.
    pub fn variables(&self) -> VarSet {
        self.outcomes
            .iter()
            .chain(&self.interventions)
            .chain(&self.conditions)
            .cloned()
            .collect()
    }

    /// Whether `self` (a declared source distribution) determines `atom` by
    /// marginalization and conditioning alone: same interventions, the
    /// atom's outcomes among the source's outcomes, and the atom's extra
    /// conditions taken from the source's outcomes.
    pub fn covers(&self, atom: &DistTerm) -> bool {
        atom.interventions == self.interventions
            && atom.outcomes.is_subset(&self.outcomes)
            && self.conditions.is_subset(&atom.conditions)
            && atom
                .conditions
                .difference(&self.conditions)
                .all(|v| self.outcomes.contains(v))
    }

    pub fn latex(&self) -> String {
        self.render_with("p")
    }

    pub fn text(&self) -> String {
        self.render_with("P")
    }

    fn render_with(&self, p: &str) -> String {
        let mut s = format!("{p}({}", join_names(&self.outcomes));
        if !self.interventions.is_empty() || !self.conditions.is_empty() {
            s.push('|');
            let mut parts = Vec::new();
            if !self.interventions.is_empty() {
                parts.push(format!("do({})", join_names(&self.interventions)));
            }
            if !self.conditions.is_empty() {
                parts.push(join_names(&self.conditions));
            }
            s.push_str(&parts.join(","));
        }
        s.push(')');
        s
    }
}

impl fmt::Display for DistTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}
