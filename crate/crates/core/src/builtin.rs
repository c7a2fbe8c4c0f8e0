//! Bundled example problems and their published identifying formulas.

use crate::dsl::{parse_problem, ProblemSpec};
use crate::symexpr::{parse_latex, Expr};

pub struct Example {
    pub name: &'static str,
    pub problem: &'static str,
    /// Identifying formula in the LaTeX grammar of [`crate::symexpr::render`].
    pub formula: &'static str,
}

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "basic-trapdoor",
        problem: include_str!("../data/basic_trapdoor.problem"),
        formula: r"\frac{\sum_{W}\left(p(W)p(X,Y|Z,W)\right)}{\sum_{Y}\left(\sum_{W}\left(p(W)p(X,Y|Z,W)\right)\right)}",
    },
    Example {
        name: "therapy-trial",
        problem: include_str!("../data/therapy_trial.problem"),
        formula: r"\sum_{Z1,Z3}\left(p(Y|do(X),Z1,Z3,Z2,T,S)\sum_{X}\left(p(Z1,X)p(Z3|Z1,X,Z2)\right)\right)",
    },
    Example {
        name: "therapy-trial-confounded",
        problem: include_str!("../data/therapy_trial_confounded.problem"),
        formula: r"\sum_{Z1,Z3,Z2}\left(p(Y|do(X),Z1,Z3,Z2,T,S)p(Z2|X)\sum_{X}\left(p(Z1,X)p(Z3|Z1,X,Z2)\right)\right)",
    },
    Example {
        name: "two-arm-selection",
        problem: include_str!("../data/two_arm_selection.problem"),
        formula: r"\sum_{Z2,Z4}\left(p(Z4|Z3)\left(p(Z2|Z1)p(Y|do(X1,X2),Z1,Z2,Z3,Z4,S)\right)\right)",
    },
    Example {
        name: "two-arm-selection-observational",
        problem: include_str!("../data/two_arm_selection_observational.problem"),
        formula: r"\frac{\sum_{Z1,Z2,Z3,Z4}\left(p(Z2,Z4)p(Y,Z1,Z3,X1,X2|Z2,Z4,S)\right)}{\sum_{Y}\left(\sum_{Z1,Z2,Z3,Z4}\left(p(Z2,Z4)p(Y,Z1,Z3,X1,X2|Z2,Z4,S)\right)\right)}",
    },
    Example {
        name: "two-arm-selection-extended",
        problem: include_str!("../data/two_arm_selection_extended.problem"),
        formula: r"\sum_{Z2,Z4}\left(p(Z4|Z3)\left(p(Z2|Z1)p(Y|do(X1,X2),Z1,Z2,Z3,Z4,S)\right)\right)",
    },
];

pub fn example(name: &str) -> Option<&'static Example> {
    EXAMPLES.iter().find(|e| e.name == name)
}

impl Example {
    pub fn spec(&self) -> ProblemSpec {
        parse_problem(self.problem).expect("bundled problems parse")
    }

    pub fn expr(&self) -> Expr {
        parse_latex(self.formula, &self.spec().kinds).expect("bundled formulas parse")
    }
}
