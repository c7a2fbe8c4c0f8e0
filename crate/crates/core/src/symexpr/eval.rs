//! Numeric evaluation of expressions against a source of distributions.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::render::text;
use super::term::DistTerm;
use crate::error::{Error, Result};
use crate::var::{Var, REGIME_VALUE};

/// Value bindings by variable name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(pub BTreeMap<String, usize>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: usize) -> Option<usize> {
        self.0.insert(name.into(), value)
    }

    pub fn remove(&mut self, name: &str) -> Option<usize> {
        self.0.remove(name)
    }

    pub fn with(mut self, name: &str, value: usize) -> Self {
        self.set(name, value);
        self
    }

    pub fn extend(&mut self, other: &Assignment) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), *v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Value for `v`, falling back to the regime constant for T/S vertices.
    pub fn value_of(&self, v: &Var) -> Option<usize> {
        self.get(&v.name).or_else(|| v.is_regime().then_some(REGIME_VALUE))
    }
}

impl<const N: usize> From<[(&str, usize); N]> for Assignment {
    fn from(pairs: [(&str, usize); N]) -> Self {
        Assignment(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Answers atom queries: P(term outcomes = a | do(interventions = a), conditions = a).
pub trait DistOracle {
    /// Number of values of `var`, if known.
    fn cardinality(&self, var: &Var) -> Option<usize>;

    fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64>;
}

impl<T: DistOracle + ?Sized> DistOracle for &T {
    fn cardinality(&self, var: &Var) -> Option<usize> {
        (**self).cardinality(var)
    }

    fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64> {
        (**self).prob(term, a)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EvalDiagnostics {
    /// Quotients evaluated as 0/0 and set to zero.
    pub zero_over_zero: usize,
}

pub fn evaluate(e: &Expr, source: &impl DistOracle, a: &Assignment) -> Result<f64> {
    evaluate_with_diagnostics(e, source, a).map(|(v, _)| v)
}

/// Evaluates `e` at `a`. Sums run over the full range of their bound
/// variables. A quotient 0/0 evaluates to 0 and is counted in the
/// diagnostics; a nonzero numerator over zero is an error. A product with an
/// exactly-zero factor is zero even when another factor is undefined on an
/// empty stratum.
pub fn evaluate_with_diagnostics(e: &Expr, source: &impl DistOracle, a: &Assignment) -> Result<(f64, EvalDiagnostics)> {
    for v in e.free_vars() {
        if a.get(&v.name).is_none() {
            return Err(Error::input(format!("free variable `{}` is unassigned", v.name)));
        }
    }
    let mut env = a.clone();
    let mut diag = EvalDiagnostics::default();
    let v = eval(e, source, &mut env, &mut diag)?;
    Ok((v, diag))
}

fn eval(e: &Expr, src: &impl DistOracle, env: &mut Assignment, diag: &mut EvalDiagnostics) -> Result<f64> {
    match e {
        Expr::Atom(t) => {
            let mut local = Assignment::new();
            for v in t.variables() {
                let value = env
                    .value_of(&v)
                    .ok_or_else(|| Error::input(format!("variable `{}` is unassigned", v.name)))?;
                local.set(v.name.clone(), value);
            }
            src.prob(t, &local)
        }
        Expr::Product(fs) => {
            let mut acc = 1.0;
            let mut deferred: Option<Error> = None;
            for f in fs {
                match eval(f, src, env, diag) {
                    Ok(0.0) => return Ok(0.0),
                    Ok(v) => acc *= v,
                    Err(err @ (Error::EmptyStratum { .. } | Error::ZeroDenominator { .. })) => {
                        deferred.get_or_insert(err);
                    }
                    Err(err) => return Err(err),
                }
            }
            match deferred {
                Some(err) => Err(err),
                None => Ok(acc),
            }
        }
        Expr::Quotient(n, d) => {
            let den = eval(d, src, env, diag)?;
            let num = eval(n, src, env, diag)?;
            if den == 0.0 {
                if num == 0.0 {
                    diag.zero_over_zero += 1;
                    Ok(0.0)
                } else {
                    Err(Error::ZeroDenominator {
                        expr: text(e),
                        assignment: env.to_string(),
                    })
                }
            } else {
                Ok(num / den)
            }
        }
        Expr::Sum(bound, body) => {
            let vars: Vec<&Var> = bound.iter().collect();
            let mut cards = Vec::with_capacity(vars.len());
            for v in &vars {
                let k = src
                    .cardinality(v)
                    .ok_or_else(|| Error::MissingInput(format!("cardinality of `{}`", v.name)))?;
                cards.push(k);
            }
            let saved: Vec<Option<usize>> = vars.iter().map(|v| env.get(&v.name)).collect();
            let mut idx = vec![0usize; vars.len()];
            let mut total = 0.0;
            let result = loop {
                for (v, &x) in vars.iter().zip(&idx) {
                    env.set(v.name.clone(), x);
                }
                match eval(body, src, env, diag) {
                    Ok(x) => total += x,
                    Err(err) => break Err(err),
                }
                if !advance(&mut idx, &cards) {
                    break Ok(total);
                }
            };
            for (v, old) in vars.iter().zip(saved) {
                match old {
                    Some(x) => env.set(v.name.clone(), x),
                    None => env.remove(&v.name),
                };
            }
            result
        }
    }
}

/// Odometer increment; false once every combination has been visited.
pub fn advance(idx: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < cards[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Every assignment of `vars` within their cardinalities.
pub fn all_assignments(vars: &[(String, usize)]) -> Vec<Assignment> {
    let cards: Vec<usize> = vars.iter().map(|(_, k)| *k).collect();
    if cards.contains(&0) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx = vec![0; vars.len()];
    loop {
        out.push(Assignment(
            vars.iter().zip(&idx).map(|((n, _), &x)| (n.clone(), x)).collect(),
        ));
        if !advance(&mut idx, &cards) {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::vars;

    /// Fair coin on Y, and P(Z) = [0, 1].
    struct Coin;

    impl DistOracle for Coin {
        fn cardinality(&self, _: &Var) -> Option<usize> {
            Some(2)
        }

        fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64> {
            let v = term.outcomes().iter().next().unwrap();
            match v.name.as_str() {
                "Y" => Ok(0.5),
                "Z" => Ok(if a.get("Z") == Some(1) { 1.0 } else { 0.0 }),
                _ => Err(Error::MissingInput(term.text())),
            }
        }
    }

    fn atom(n: &str) -> Expr {
        Expr::Atom(DistTerm::joint(vars([n])).unwrap())
    }

    #[test]
    fn atom_on_fair_coin() {
        let a = Assignment::from([("Y", 1)]);
        assert_eq!(evaluate(&atom("Y"), &Coin, &a).unwrap(), 0.5);
    }

    #[test]
    fn sums_cover_the_range() {
        let e = Expr::sum(vars(["Y"]), atom("Y"));
        assert_eq!(evaluate(&e, &Coin, &Assignment::new()).unwrap(), 1.0);
    }

    #[test]
    fn zero_over_zero_and_nonzero_over_zero() {
        let a = Assignment::from([("Z", 0), ("Y", 0)]);
        let (v, d) = evaluate_with_diagnostics(&Expr::quotient(atom("Z"), atom("Z")), &Coin, &a).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(d.zero_over_zero, 1);
        let err = evaluate(&Expr::quotient(atom("Y"), atom("Z")), &Coin, &a).unwrap_err();
        assert!(matches!(err, Error::ZeroDenominator { .. }));
    }

    #[test]
    fn missing_atom_and_unassigned() {
        let e = atom("Q");
        let a = Assignment::from([("Q", 0)]);
        assert!(matches!(evaluate(&e, &Coin, &a), Err(Error::MissingInput(_))));
        assert!(matches!(
            evaluate(&atom("Y"), &Coin, &Assignment::new()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn enumerates_assignments() {
        let all = all_assignments(&[("A".into(), 2), ("B".into(), 3)]);
        assert_eq!(all.len(), 6);
        assert_eq!(all[5], Assignment::from([("A", 1), ("B", 2)]));
    }
}
