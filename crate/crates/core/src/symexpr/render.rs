//! Text, LaTeX and JSON renderings of expressions.

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use crate::var::join_names;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    #[default]
    Text,
    Latex,
    Json,
}

impl std::str::FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(Style::Text),
            "latex" => Ok(Style::Latex),
            "json" => Ok(Style::Json),
            other => Err(format!("unknown style `{other}` (expected text, latex or json)")),
        }
    }
}

pub fn render(e: &Expr, style: Style) -> String {
    match style {
        Style::Text => text(e),
        Style::Latex => latex(e),
        Style::Json => json(e),
    }
}

/// LaTeX in the do-search output grammar: `\sum_{..}\left(..\right)`,
/// `p(..|do(..),..)`, and right-nested `\left( \right)` grouping of
/// products with more than two factors.
pub fn latex(e: &Expr) -> String {
    let mut s = String::new();
    latex_into(e, &mut s);
    s
}

fn latex_into(e: &Expr, s: &mut String) {
    match e {
        Expr::Atom(t) => s.push_str(&t.latex()),
        Expr::Product(fs) => latex_product(fs, s),
        Expr::Quotient(n, d) => {
            s.push_str("\\frac{");
            latex_into(n, s);
            s.push_str("}{");
            latex_into(d, s);
            s.push('}');
        }
        Expr::Sum(b, body) => {
            s.push_str("\\sum_{");
            s.push_str(&join_names(b));
            s.push_str("}\\left(");
            latex_into(body, s);
            s.push_str("\\right)");
        }
    }
}

fn latex_product(fs: &[Expr], s: &mut String) {
    match fs {
        [] => s.push('1'),
        [only] => latex_factor(only, s),
        [a, b] => {
            latex_factor(a, s);
            latex_factor(b, s);
        }
        [first, rest @ ..] => {
            latex_factor(first, s);
            s.push_str("\\left(");
            latex_product(rest, s);
            s.push_str("\\right)");
        }
    }
}

fn latex_factor(f: &Expr, s: &mut String) {
    if let Expr::Product(_) = f {
        s.push_str("\\left(");
        latex_into(f, s);
        s.push_str("\\right)");
    } else {
        latex_into(f, s);
    }
}

/// Plain text, for terminals.
pub fn text(e: &Expr) -> String {
    match e {
        Expr::Atom(t) => t.text(),
        Expr::Product(fs) => fs
            .iter()
            .map(|f| match f {
                Expr::Product(_) | Expr::Quotient(..) => format!("[{}]", text(f)),
                _ => text(f),
            })
            .collect::<Vec<_>>()
            .join(" "),
        Expr::Quotient(n, d) => format!("({}) / ({})", text(n), text(d)),
        Expr::Sum(b, body) => format!("sum_{{{}}} [{}]", join_names(b), text(body)),
    }
}

/// Lossless JSON tree encoding.
pub fn json(e: &Expr) -> String {
    serde_json::to_string(e).expect("expressions always serialize")
}
