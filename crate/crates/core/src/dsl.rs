//! Text formats for graphs and identification problems.
//!
//! A problem file has optional kind headers followed by three labeled
//! blocks:
//!
//! ```text
//! selection: S
//! graph:
//!   X -> Y
//!   X -> S
//!   X <-> Z
//! data:
//!   P(X,Y,Z|S)
//! query:
//!   P(Y|do(X))
//! ```
//!
//! `#` starts a comment. A graph line is `A -> B`, `A <-> B`, or a lone
//! vertex name.

use std::fmt::Write as _;

use serde::Serialize;

use crate::admg::Admg;
use crate::error::{Error, Result};
use crate::symexpr::{parse_dist_term, DistTerm};
use crate::var::{validate_name, var_with, Kinds, VertexKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemSpec {
    #[serde(skip)]
    pub graph: Admg,
    pub inputs: Vec<DistTerm>,
    pub query: DistTerm,
    pub kinds: Kinds,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses an edge list, one edge or vertex per line.
pub fn parse_graph(text: &str, kinds: &Kinds) -> Result<Admg> {
    parse_graph_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)), kinds)
}

fn parse_graph_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>, kinds: &Kinds) -> Result<Admg> {
    let mut names: Vec<String> = Vec::new();
    let mut directed: Vec<(String, String)> = Vec::new();
    let mut bidirected: Vec<(String, String)> = Vec::new();
    fn note(n: &str, names: &mut Vec<String>) {
        if !names.iter().any(|x| x == n) {
            names.push(n.to_string());
        }
    }
    for (no, raw) in lines {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let (edge, parts) = if let Some((a, b)) = line.split_once("<->") {
            (Some(false), (a.trim(), b.trim()))
        } else if let Some((a, b)) = line.split_once("->") {
            (Some(true), (a.trim(), b.trim()))
        } else {
            (None, (line, ""))
        };
        let bad = |msg: String| Error::parse(no, msg);
        match edge {
            None => {
                validate_name(parts.0).map_err(|e| bad(e.to_string()))?;
                note(parts.0, &mut names);
            }
            Some(is_directed) => {
                let (a, b) = parts;
                validate_name(a).map_err(|e| bad(format!("`{line}`: {e}")))?;
                validate_name(b).map_err(|e| bad(format!("`{line}`: {e}")))?;
                if a == b {
                    return Err(bad(format!("self loop `{line}`")));
                }
                note(a, &mut names);
                note(b, &mut names);
                let pair = (a.to_string(), b.to_string());
                if is_directed {
                    directed.push(pair);
                } else {
                    bidirected.push(pair);
                }
            }
        }
    }
    if names.is_empty() {
        return Err(Error::parse(0, "graph has no vertices"));
    }
    Admg::new(
        names.iter().map(|n| var_with(kinds, n)),
        directed.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        bidirected.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )
}

pub fn parse_dist(text: &str, kinds: &Kinds) -> Result<DistTerm> {
    parse_dist_term(text.trim(), kinds)
}

/// Renders a graph in the edge-list format: directed edges, bidirected
/// edges, then vertices without any edge.
pub fn render_graph(g: &Admg) -> String {
    let mut s = String::new();
    let mut touched = std::collections::BTreeSet::new();
    for (a, b) in g.directed_edges() {
        let _ = writeln!(s, "{a} -> {b}");
        touched.extend([a, b]);
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(s, "{a} <-> {b}");
        touched.extend([a, b]);
    }
    for v in g.vertices() {
        if !touched.contains(v.name.as_str()) {
            let _ = writeln!(s, "{}", v.name);
        }
    }
    s
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    None,
    Graph,
    Data,
    Query,
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut kinds = Kinds::new();
    let mut block = Block::None;
    let mut graph_lines = Vec::new();
    let mut data_lines = Vec::new();
    let mut query_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        if let Some((label, rest)) = line.split_once(':') {
            let label = label.trim();
            let rest = rest.trim();
            let header = match label {
                "graph" => Some(Block::Graph),
                "data" => Some(Block::Data),
                "query" => Some(Block::Query),
                "transportability" | "selection" => {
                    if block != Block::None {
                        return Err(Error::parse(no, "kind headers must precede the blocks"));
                    }
                    let kind = if label == "selection" {
                        VertexKind::Selection
                    } else {
                        VertexKind::Transportability
                    };
                    for name in rest.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                        validate_name(name).map_err(|e| Error::parse(no, e.to_string()))?;
                        if kinds.insert(name.to_string(), kind).is_some() {
                            return Err(Error::parse(no, format!("kind of `{name}` declared twice")));
                        }
                    }
                    continue;
                }
                _ => None,
            };
            if let Some(b) = header {
                block = b;
                if !rest.is_empty() {
                    push_line(block, no, rest, &mut graph_lines, &mut data_lines, &mut query_lines);
                }
                continue;
            }
        }
        if block == Block::None {
            return Err(Error::parse(no, format!("`{line}` outside a graph/data/query block")));
        }
        push_line(block, no, line, &mut graph_lines, &mut data_lines, &mut query_lines);
    }
    if graph_lines.is_empty() {
        return Err(Error::parse(0, "missing graph block"));
    }
    let graph = parse_graph_lines(graph_lines.iter().map(|(n, l)| (*n, l.as_str())), &kinds)?;
    for name in kinds.keys() {
        if graph.get(name).is_none() {
            return Err(Error::Validation(format!(
                "declared vertex `{name}` is not in the graph"
            )));
        }
    }
    let mut inputs = Vec::new();
    for (no, l) in &data_lines {
        let t = parse_dist(l, &kinds).map_err(|e| relocate(e, *no))?;
        inputs.push(t);
    }
    if inputs.is_empty() {
        return Err(Error::parse(0, "missing data block"));
    }
    let query = match query_lines.as_slice() {
        [(no, l)] => parse_dist(l, &kinds).map_err(|e| relocate(e, *no))?,
        [] => return Err(Error::parse(0, "missing query")),
        [_, (no, _), ..] => return Err(Error::parse(*no, "exactly one query is allowed")),
    };
    for t in inputs.iter().chain([&query]) {
        for v in t.variables() {
            if graph.get(&v.name).is_none() {
                return Err(Error::Validation(format!("{t}: `{}` is not a graph vertex", v.name)));
            }
        }
    }
    Ok(ProblemSpec {
        graph,
        inputs,
        query,
        kinds,
    })
}

fn push_line(
    block: Block,
    no: usize,
    line: &str,
    graph: &mut Vec<(usize, String)>,
    data: &mut Vec<(usize, String)>,
    query: &mut Vec<(usize, String)>,
) {
    let target = match block {
        Block::Graph => graph,
        Block::Data => data,
        Block::Query => query,
        Block::None => unreachable!("checked by caller"),
    };
    target.push((no, line.to_string()));
}

/// Parse errors inside a single line are reported at that line of the file.
fn relocate(e: Error, line: usize) -> Error {
    match e {
        Error::Parse { msg, .. } => Error::Parse { line, msg },
        other => other,
    }
}

pub fn render_problem(p: &ProblemSpec) -> String {
    let mut s = String::new();
    for (label, kind) in [
        ("transportability", VertexKind::Transportability),
        ("selection", VertexKind::Selection),
    ] {
        let names: Vec<&str> = p
            .kinds
            .iter()
            .filter(|(_, k)| **k == kind)
            .map(|(n, _)| n.as_str())
            .collect();
        if !names.is_empty() {
            let _ = writeln!(s, "{label}: {}", names.join(", "));
        }
    }
    s.push_str("graph:\n");
    for l in render_graph(&p.graph).lines() {
        let _ = writeln!(s, "  {l}");
    }
    s.push_str("data:\n");
    for t in &p.inputs {
        let _ = writeln!(s, "  {t}");
    }
    let _ = writeln!(s, "query:\n  {}", p.query);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::vars;

    const TWO_ARM: &str = "
        X1 -> Z1
        X1 -> Y
        Z1 -> Z2
        Z2 -> S
        X2 -> Z3
        X2 -> Y
        Z3 -> Z4
        Z4 -> S
        X1 <-> Z4
        X2 <-> Z2
        Z2 <-> Y
        Z4 <-> Y
    ";

    #[test]
    fn graph_block() {
        let g = parse_graph(TWO_ARM, &Kinds::new()).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.directed_edges().len(), 8);
        assert_eq!(g.bidirected_edges().len(), 4);
        let g = parse_graph("A -> B", &Kinds::new()).unwrap();
        assert_eq!((g.len(), g.directed_edges().len()), (2, 1));
        assert!(parse_graph("A -> A", &Kinds::new()).is_err());
        assert!(parse_graph("A -> B\nB -> A", &Kinds::new()).is_err());
        let err = parse_graph("A -> B\nA => C", &Kinds::new()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn graph_round_trip() {
        let g = parse_graph(&format!("{TWO_ARM}\nLONE"), &Kinds::new()).unwrap();
        assert_eq!(parse_graph(&render_graph(&g), &Kinds::new()).unwrap(), g);
    }

    #[test]
    fn problem_with_headers() {
        let text = format!(
            "# example\nselection: S\ngraph:\n{TWO_ARM}\ndata:\n P(Y,Z1,Z2,Z3,Z4 | do(X1,X2),S)\n P(Z1,Z2)\n P(Z3,Z4)\nquery: P(Y|do(X1,X2))\n"
        );
        let p = parse_problem(&text).unwrap();
        assert_eq!(p.inputs.len(), 3);
        assert_eq!(p.query.outcomes(), &vars(["Y"]));
        assert!(p.graph.get("S").unwrap().is_regime());
        assert_eq!(parse_problem(&render_problem(&p)).unwrap(), p);
    }

    #[test]
    fn problem_errors_carry_lines() {
        let err = parse_problem("graph:\n A -> B\ndata:\n P(A\nquery: P(B|do(A))").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        assert!(parse_problem("graph:\n A -> B\ndata:\n P(A,C)\nquery: P(B|do(A))").is_err());
        assert!(parse_problem("A -> B").is_err());
    }
}
