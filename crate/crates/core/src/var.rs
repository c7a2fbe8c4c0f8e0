//! Variables (graph vertices) and their kinds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a vertex. Kinds never change graph semantics; they only steer
/// rendering and the treatment of sampling-regime indicators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    #[default]
    Ordinary,
    Transportability,
    Selection,
}

impl VertexKind {
    /// Transportability and selection vertices mark the sampling regime of
    /// a data source. Inside a functional they are constants fixed to
    /// [`REGIME_VALUE`], never free variables.
    pub fn is_regime(self) -> bool {
        !matches!(self, VertexKind::Ordinary)
    }
}

/// Value taken by regime indicators (T = experimental domain, S = selected).
pub const REGIME_VALUE: usize = 1;

/// A named variable. Ordering is by kind first so that regime indicators
/// always sort after ordinary variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawVar")]
pub struct Var {
    pub kind: VertexKind,
    pub name: String,
}

#[derive(Deserialize)]
struct RawVar {
    kind: VertexKind,
    name: String,
}

impl TryFrom<RawVar> for Var {
    type Error = Error;

    fn try_from(raw: RawVar) -> Result<Self> {
        validate_name(&raw.name)?;
        Ok(Var::with_kind(raw.name, raw.kind))
    }
}

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var {
            kind: VertexKind::Ordinary,
            name: name.into(),
        }
    }

    pub fn with_kind(name: impl Into<String>, kind: VertexKind) -> Self {
        Var {
            kind,
            name: name.into(),
        }
    }

    pub fn is_regime(&self) -> bool {
        self.kind.is_regime()
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub type VarSet = BTreeSet<Var>;

/// Declared kinds by vertex name; names absent from the map are ordinary.
pub type Kinds = BTreeMap<String, VertexKind>;

pub fn var_with(kinds: &Kinds, name: &str) -> Var {
    Var::with_kind(name, kinds.get(name).copied().unwrap_or_default())
}

/// Checks the identifier rule: nonempty, letters, digits and underscore.
pub fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::input("empty variable name"));
    }
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::input(format!("invalid variable name `{name}`")));
    }
    Ok(())
}

/// Comma separated names, in set order.
pub fn join_names(set: &VarSet) -> String {
    set.iter().map(|v| v.name.as_str()).collect::<Vec<_>>().join(",")
}

/// Convenience for building sets of ordinary variables.
pub fn vars<'a>(names: impl IntoIterator<Item = &'a str>) -> VarSet {
    names.into_iter().map(Var::new).collect()
}
