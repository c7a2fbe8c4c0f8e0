//! Level-synchronous breadth-first search over identified distributions.
//!
//! Nodes are keyed by the distribution they identify, stored as vertex
//! masks. Each node remembers how it was obtained; the symbolic expression
//! is rebuilt from that provenance only for the nodes on the final
//! derivation.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rules::{chain_condition_expr, condition_expr, marginalize_expr, product_expr, Rule, SideCondition};
use super::{Derivation, DerivationStep};
use crate::admg::{bit, bits, Admg, Mask, Mutilation};
use crate::error::{Error, Result};
use crate::symexpr::{DistTerm, Expr};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_expressions: usize,
    pub max_depth: usize,
    /// Seconds of wall-clock time.
    pub time_limit: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_expressions: 1_000_000,
            max_depth: 64,
            time_limit: 60.0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_expressions == 0
            || self.max_depth == 0
            || self.time_limit.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err(Error::input("search budget limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchOptions {
    pub budget: SearchBudget,
    /// Expand the frontier in order of overlap with the query variables.
    pub heuristic: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchStatus {
    Found,
    /// Stopped by a budget limit: the query is unknown, not proven
    /// unidentifiable.
    BudgetExhausted,
    /// Every reachable distribution was generated without reaching the query.
    SearchSpaceExhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    pub derivation: Option<Derivation>,
    pub expressions: usize,
    pub depth: usize,
    pub elapsed_secs: f64,
}

/// A distribution together with an expression identifying it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identified {
    pub term: DistTerm,
    pub expr: Expr,
}

/// Derives `query` from `inputs`; `None` means not found within the budget.
pub fn derive(g: &Admg, inputs: &[DistTerm], query: &DistTerm, budget: &SearchBudget) -> Result<Option<Derivation>> {
    let opts = SearchOptions {
        budget: budget.clone(),
        ..SearchOptions::default()
    };
    Ok(search(g, inputs, query, &opts)?.derivation)
}

pub fn search(g: &Admg, inputs: &[DistTerm], query: &DistTerm, opts: &SearchOptions) -> Result<SearchOutcome> {
    opts.budget.validate()?;
    if inputs.is_empty() {
        return Err(Error::input("at least one input distribution is required"));
    }
    let base: Vec<Identified> = inputs
        .iter()
        .map(|t| Identified {
            term: t.clone(),
            expr: Expr::Atom(t.clone()),
        })
        .collect();
    let engine = Engine::new(g, &base)?;
    let q = engine.mask_term(query)?;
    let run = || engine.run(q, opts);
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::input(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// One search step: every distribution obtainable from `known` by a single
/// rule application that is not already known.
pub fn expand(g: &Admg, known: &[Identified]) -> Result<Vec<Identified>> {
    if known.is_empty() {
        return Err(Error::input("expand needs at least one known distribution"));
    }
    let engine = Engine::new(g, known)?;
    let mut state = engine.initial_state();
    let frontier: Vec<u32> = (0..state.nodes.len() as u32).collect();
    let start = state.nodes.len();
    let cands: Vec<Vec<Cand>> = frontier.iter().map(|&id| engine.expand_node(id, &state)).collect();
    for c in cands.into_iter().flatten() {
        state.push(c);
    }
    let mut cache = HashMap::new();
    (start..state.nodes.len())
        .map(|id| {
            Ok(Identified {
                term: engine.dist_term(state.nodes[id].term),
                expr: engine.expr_of(id as u32, &state, &mut cache),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct MTerm {
    pub out: Mask,
    pub doo: Mask,
    pub cond: Mask,
}

impl MTerm {
    fn vars(self) -> Mask {
        self.out | self.doo | self.cond
    }

    /// Whether a source distribution `self` determines `atom` by
    /// marginalizing and conditioning.
    fn covers(self, atom: MTerm) -> bool {
        self.doo == atom.doo
            && atom.out & !self.out == 0
            && self.cond & !atom.cond == 0
            && (atom.cond & !self.cond) & !self.out == 0
    }
}

#[derive(Clone, Copy, Debug)]
enum Origin {
    Base(u32),
    Do {
        rule: Rule,
        premise: u32,
        var: u32,
        cut_in: Mask,
        cut_out: Mask,
        given: Mask,
    },
    Marginalize(u32),
    Condition(u32),
    Product {
        conditional: u32,
        marginal: u32,
    },
    Chain {
        joint: u32,
        marginal: u32,
    },
}

#[derive(Clone, Copy, Debug)]
struct Node {
    term: MTerm,
    origin: Origin,
    /// Variables bound by a sum somewhere in the node's expression.
    bound: Mask,
    /// The expression's single atom, when it is one.
    atom: Option<MTerm>,
    /// Node count of the expression.
    size: u32,
}

type Cand = Node;

struct State {
    nodes: Vec<Node>,
    by_term: HashMap<MTerm, u32>,
    by_ctx: HashMap<(Mask, Mask), Vec<u32>>,
}

impl State {
    /// Adds the node unless its distribution is already known.
    fn push(&mut self, n: Node) -> Option<u32> {
        self.push_or_improve(n, u32::MAX)
    }

    /// Like `push`, but a node with id at least `level_start` is replaced
    /// when `n` reaches the same distribution with a smaller expression.
    /// Such nodes are not yet premises of anything, so replacing them is
    /// safe. Returns the id only for newly added nodes.
    fn push_or_improve(&mut self, n: Node, level_start: u32) -> Option<u32> {
        if let Some(&id) = self.by_term.get(&n.term) {
            let old = &mut self.nodes[id as usize];
            if id >= level_start && n.size < old.size {
                *old = n;
            }
            return None;
        }
        let id = self.nodes.len() as u32;
        self.by_term.insert(n.term, id);
        self.by_ctx.entry((n.term.doo, n.term.cond)).or_default().push(id);
        self.nodes.push(n);
        Some(id)
    }
}

struct Engine<'a> {
    g: &'a Admg,
    base: &'a [Identified],
    base_terms: Vec<MTerm>,
    base_bound: Vec<Mask>,
    /// Atoms of the base expressions; products of atoms merge only when one
    /// of these covers the result.
    sources: Vec<MTerm>,
    regime: Mask,
}

impl<'a> Engine<'a> {
    fn new(g: &'a Admg, base: &'a [Identified]) -> Result<Self> {
        let regime = g
            .vertices()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_regime())
            .fold(0, |m, (i, _)| m | bit(i));
        let mut e = Engine {
            g,
            base,
            base_terms: Vec::new(),
            base_bound: Vec::new(),
            sources: Vec::new(),
            regime,
        };
        for b in base {
            let t = e.mask_term(&b.term)?;
            e.base_terms.push(t);
            e.base_bound.push(g.mask_of(&b.expr.bound_vars())?);
            for a in b.expr.atoms() {
                let m = e.mask_term(a)?;
                if !e.sources.contains(&m) {
                    e.sources.push(m);
                }
            }
        }
        Ok(e)
    }

    fn mask_term(&self, t: &DistTerm) -> Result<MTerm> {
        let m = MTerm {
            out: self.g.mask_of(t.outcomes())?,
            doo: self.g.mask_of(t.interventions())?,
            cond: self.g.mask_of(t.conditions())?,
        };
        if (m.out | m.doo) & self.regime != 0 {
            return Err(Error::input(format!(
                "{t}: transportability and selection vertices may only be conditioned on"
            )));
        }
        Ok(m)
    }

    fn dist_term(&self, m: MTerm) -> DistTerm {
        DistTerm::new(self.g.set_of(m.out), self.g.set_of(m.doo), self.g.set_of(m.cond))
            .expect("search terms are valid")
    }

    fn initial_state(&self) -> State {
        let mut st = State {
            nodes: Vec::new(),
            by_term: HashMap::new(),
            by_ctx: HashMap::new(),
        };
        for (i, (&t, b)) in self.base_terms.iter().zip(self.base.iter()).enumerate() {
            let atom = match &b.expr {
                Expr::Atom(a) => Some(self.mask_term(a).expect("validated")),
                _ => None,
            };
            st.push(Node {
                term: t,
                origin: Origin::Base(i as u32),
                bound: self.base_bound[i],
                atom,
                size: b.expr.size() as u32,
            });
        }
        st
    }

    fn run(&self, query: MTerm, opts: &SearchOptions) -> Result<SearchOutcome> {
        let start = Instant::now();
        let limit = Duration::from_secs_f64(opts.budget.time_limit);
        let mut st = self.initial_state();
        let outcome = |status, derivation, st: &State, depth| SearchOutcome {
            status,
            derivation,
            expressions: st.nodes.len(),
            depth,
            elapsed_secs: start.elapsed().as_secs_f64(),
        };
        if let Some(&id) = st.by_term.get(&query) {
            let d = self.derivation(id, &st);
            return Ok(outcome(SearchStatus::Found, Some(d), &st, 0));
        }
        let qvars = query.vars();
        let mut frontier: Vec<u32> = (0..st.nodes.len() as u32).collect();
        let mut depth = 0;
        while !frontier.is_empty() {
            if depth >= opts.budget.max_depth || start.elapsed() > limit {
                return Ok(outcome(SearchStatus::BudgetExhausted, None, &st, depth));
            }
            depth += 1;
            if opts.heuristic {
                frontier.sort_by_key(|&id| std::cmp::Reverse((st.nodes[id as usize].term.vars() & qvars).count_ones()));
            }
            let cands: Vec<Vec<Cand>> = frontier.par_iter().map(|&id| self.expand_node(id, &st)).collect();
            let level_start = st.nodes.len() as u32;
            let mut next = Vec::new();
            let mut full = false;
            for c in cands.into_iter().flatten() {
                if full && c.term != query {
                    continue;
                }
                if let Some(id) = st.push_or_improve(c, level_start) {
                    next.push(id);
                    full = st.nodes.len() >= opts.budget.max_expressions;
                }
            }
            if let Some(&id) = st.by_term.get(&query) {
                let d = self.derivation(id, &st);
                debug!("query reached at depth {depth} after {} expressions", st.nodes.len());
                return Ok(outcome(SearchStatus::Found, Some(d), &st, depth));
            }
            if full {
                return Ok(outcome(SearchStatus::BudgetExhausted, None, &st, depth));
            }
            debug!("depth {depth}: {} new, {} total", next.len(), st.nodes.len());
            frontier = next;
        }
        Ok(outcome(SearchStatus::SearchSpaceExhausted, None, &st, depth))
    }

    /// All one-step consequences of node `id` not already present in `st`.
    fn expand_node(&self, id: u32, st: &State) -> Vec<Cand> {
        let n = st.nodes[id as usize];
        let t = n.term;
        let mut out = Vec::new();
        let mut emit = |c: Cand| {
            if !st.by_term.contains_key(&c.term) {
                out.push(c);
            }
        };

        // Probability calculus on a single premise.
        if t.out.count_ones() >= 2 {
            for v in bits(t.out) {
                let vb = bit(v);
                let term = MTerm { out: t.out & !vb, ..t };
                match n.atom {
                    Some(a) => emit(Node {
                        term,
                        origin: Origin::Marginalize(id),
                        bound: n.bound,
                        atom: Some(MTerm { out: a.out & !vb, ..a }),
                        size: 1,
                    }),
                    None if n.bound & vb == 0 => emit(Node {
                        term,
                        origin: Origin::Marginalize(id),
                        bound: n.bound | vb,
                        atom: None,
                        size: n.size + 1,
                    }),
                    None => {}
                }
            }
            for v in bits(t.out) {
                let vb = bit(v);
                let rest = t.out & !vb;
                let term = MTerm {
                    out: rest,
                    doo: t.doo,
                    cond: t.cond | vb,
                };
                match n.atom {
                    Some(a) => emit(Node {
                        term,
                        origin: Origin::Condition(id),
                        bound: n.bound,
                        atom: Some(MTerm {
                            out: a.out & !vb,
                            doo: a.doo,
                            cond: a.cond | vb,
                        }),
                        size: 1,
                    }),
                    None if n.bound & rest == 0 => emit(Node {
                        term,
                        origin: Origin::Condition(id),
                        bound: n.bound | rest,
                        atom: None,
                        size: 2 * n.size + 2,
                    }),
                    None => {}
                }
            }
        }

        // Product composition, with this node as the conditional factor.
        let free_cond = t.cond & !self.regime;
        let mut s = free_cond;
        while s != 0 {
            let key = MTerm {
                out: s,
                doo: t.doo,
                cond: t.cond & !s,
            };
            if let Some(&m) = st.by_term.get(&key) {
                emit(self.product(id, &n, m, &st.nodes[m as usize]));
            }
            s = (s - 1) & free_cond;
        }
        // ... and as the marginal factor.
        if let Some(list) = st.by_ctx.get(&(t.doo, t.cond | t.out)) {
            for &m in list {
                emit(self.product(m, &st.nodes[m as usize], id, &n));
            }
        }

        // Conditioning by a known marginal, with this node as the joint ...
        if t.out.count_ones() >= 2 {
            let mut s = (t.out - 1) & t.out;
            while s != 0 {
                let key = MTerm {
                    out: s,
                    doo: t.doo,
                    cond: t.cond,
                };
                if let Some(&m) = st.by_term.get(&key) {
                    emit(self.chain(id, &n, m, &st.nodes[m as usize]));
                }
                s = (s - 1) & t.out;
            }
        }
        // ... and as the marginal.
        if let Some(list) = st.by_ctx.get(&(t.doo, t.cond)) {
            for &m in list {
                let mt = st.nodes[m as usize].term;
                if mt.out != t.out && mt.out & t.out == t.out {
                    emit(self.chain(m, &st.nodes[m as usize], id, &n));
                }
            }
        }

        // Do-calculus, one vertex at a time.
        let g = self.g;
        let sep = |c: Mask, v: usize, cut_in: Mask, cut_out: Mask| g.d_separated_cut(t.out, bit(v), c, cut_in, cut_out);
        let mut do_step = |rule: Rule, term: MTerm, v: usize, cut_in: Mask, cut_out: Mask, given: Mask| {
            emit(Node {
                term,
                origin: Origin::Do {
                    rule,
                    premise: id,
                    var: v as u32,
                    cut_in,
                    cut_out,
                    given,
                },
                bound: n.bound,
                atom: n.atom,
                size: n.size,
            });
        };
        for v in 0..g.len() {
            let vb = bit(v);
            let regime = self.regime & vb != 0;
            if t.out & vb != 0 {
                continue;
            }
            if t.cond & vb != 0 {
                let c = t.doo | (t.cond & !vb);
                if sep(c, v, t.doo, 0) {
                    let term = MTerm {
                        cond: t.cond & !vb,
                        ..t
                    };
                    do_step(Rule::Observation, term, v, t.doo, 0, c);
                }
                if !regime && sep(c, v, t.doo, vb) {
                    let term = MTerm {
                        out: t.out,
                        doo: t.doo | vb,
                        cond: t.cond & !vb,
                    };
                    do_step(Rule::Exchange, term, v, t.doo, vb, c);
                }
            } else if t.doo & vb != 0 {
                let d = t.doo & !vb;
                let c = d | t.cond;
                if sep(c, v, d, vb) {
                    let term = MTerm {
                        out: t.out,
                        doo: d,
                        cond: t.cond | vb,
                    };
                    do_step(Rule::Exchange, term, v, d, vb, c);
                }
                let cut_in = self.action_cut(d, t.cond, v);
                if sep(c, v, cut_in, 0) {
                    let term = MTerm { doo: d, ..t };
                    do_step(Rule::Action, term, v, cut_in, 0, c);
                }
            } else {
                let c = t.doo | t.cond;
                if sep(c, v, t.doo, 0) {
                    let term = MTerm { cond: t.cond | vb, ..t };
                    do_step(Rule::Observation, term, v, t.doo, 0, c);
                }
                if !regime {
                    let cut_in = self.action_cut(t.doo, t.cond, v);
                    if sep(c, v, cut_in, 0) {
                        let term = MTerm { doo: t.doo | vb, ..t };
                        do_step(Rule::Action, term, v, cut_in, 0, c);
                    }
                }
            }
        }
        out
    }

    /// Incoming cut for inserting or deleting `do(v)` alongside `do(d)` given
    /// `cond`: `d`, plus `v` unless it is an ancestor of `cond` once `d` is cut.
    fn action_cut(&self, d: Mask, cond: Mask, v: usize) -> Mask {
        if self.g.ancestors_cut_mask(cond, d) & bit(v) != 0 {
            d
        } else {
            d | bit(v)
        }
    }

    fn product(&self, cid: u32, c: &Node, mid: u32, m: &Node) -> Cand {
        let term = MTerm {
            out: c.term.out | m.term.out,
            doo: c.term.doo,
            cond: m.term.cond,
        };
        let atom = match (c.atom, m.atom) {
            (Some(a), Some(b)) if a.doo == b.doo && a.cond == b.cond | b.out => {
                let merged = MTerm {
                    out: a.out | b.out,
                    doo: a.doo,
                    cond: b.cond,
                };
                self.sources.iter().any(|s| s.covers(merged)).then_some(merged)
            }
            _ => None,
        };
        Node {
            term,
            origin: Origin::Product {
                conditional: cid,
                marginal: mid,
            },
            bound: c.bound | m.bound,
            size: if atom.is_some() { 1 } else { 1 + c.size + m.size },
            atom,
        }
    }

    fn chain(&self, jid: u32, j: &Node, mid: u32, m: &Node) -> Cand {
        let moved = m.term.out;
        Node {
            term: MTerm {
                out: j.term.out & !moved,
                doo: j.term.doo,
                cond: j.term.cond | moved,
            },
            origin: Origin::Chain {
                joint: jid,
                marginal: mid,
            },
            bound: match j.atom {
                Some(_) => j.bound,
                None => j.bound | m.bound,
            },
            size: match j.atom {
                Some(_) => 1,
                None => 1 + j.size + m.size,
            },
            atom: j.atom.map(|a| MTerm {
                out: a.out & !moved,
                doo: a.doo,
                cond: a.cond | moved,
            }),
        }
    }

    fn expr_of(&self, id: u32, st: &State, cache: &mut HashMap<u32, Expr>) -> Expr {
        if let Some(e) = cache.get(&id) {
            return e.clone();
        }
        let node = st.nodes[id as usize];
        let single = |m: Mask| self.g.var(bits(m).next().expect("one vertex")).clone();
        let e = match node.origin {
            Origin::Base(i) => self.base[i as usize].expr.clone(),
            Origin::Do { premise, .. } => self.expr_of(premise, st, cache),
            Origin::Marginalize(p) => {
                let pe = self.expr_of(p, st, cache);
                let v = single(st.nodes[p as usize].term.out & !node.term.out);
                marginalize_expr(&pe, &v)
            }
            Origin::Condition(p) => {
                let pe = self.expr_of(p, st, cache);
                let pt = st.nodes[p as usize].term;
                let v = single(pt.out & !node.term.out);
                condition_expr(&pe, &self.g.set_of(pt.out), &v)
            }
            Origin::Product { conditional, marginal } => {
                let ce = self.expr_of(conditional, st, cache);
                let me = self.expr_of(marginal, st, cache);
                let sources: Vec<DistTerm> = self.sources.iter().map(|&s| self.dist_term(s)).collect();
                product_expr(&ce, &me, &sources)
            }
            Origin::Chain { joint, marginal } => {
                let je = self.expr_of(joint, st, cache);
                let me = self.expr_of(marginal, st, cache);
                chain_condition_expr(&je, &me, &self.g.set_of(st.nodes[marginal as usize].term.out))
            }
        };
        cache.insert(id, e.clone());
        e
    }

    fn premises(origin: Origin) -> Vec<u32> {
        match origin {
            Origin::Base(_) => vec![],
            Origin::Do { premise, .. } | Origin::Marginalize(premise) | Origin::Condition(premise) => {
                vec![premise]
            }
            Origin::Product { conditional, marginal } => vec![conditional, marginal],
            Origin::Chain { joint, marginal } => vec![joint, marginal],
        }
    }

    fn derivation(&self, target: u32, st: &State) -> Derivation {
        let mut needed = vec![false; st.nodes.len()];
        let mut stack = vec![target];
        while let Some(id) = stack.pop() {
            if !std::mem::replace(&mut needed[id as usize], true) {
                stack.extend(Self::premises(st.nodes[id as usize].origin));
            }
        }
        let inputs: Vec<DistTerm> = self.base.iter().map(|b| b.term.clone()).collect();
        let k = inputs.len();
        let mut index: HashMap<u32, usize> = HashMap::new();
        let mut steps = Vec::new();
        let mut cache = HashMap::new();
        for id in (0..st.nodes.len() as u32).filter(|&i| needed[i as usize]) {
            let node = st.nodes[id as usize];
            if let Origin::Base(i) = node.origin {
                index.insert(id, i as usize);
                continue;
            }
            let premises = Self::premises(node.origin).iter().map(|p| index[p]).collect();
            let (rule, side_condition) = match node.origin {
                Origin::Do {
                    rule,
                    var,
                    cut_in,
                    cut_out,
                    given,
                    ..
                } => (
                    rule,
                    Some(SideCondition {
                        mutilation: Mutilation::new(self.g.set_of(cut_in), self.g.set_of(cut_out)),
                        separated: self.g.set_of(node.term.out),
                        from: self.g.set_of(bit(var as usize)),
                        given: self.g.set_of(given),
                    }),
                ),
                Origin::Marginalize(_) => (Rule::Marginalize, None),
                Origin::Condition(_) => (Rule::QuotientCondition, None),
                Origin::Product { .. } => (Rule::Product, None),
                Origin::Chain { .. } => (Rule::ConditionChain, None),
                Origin::Base(_) => unreachable!(),
            };
            index.insert(id, k + steps.len());
            steps.push(DerivationStep {
                rule,
                premises,
                term: self.dist_term(node.term),
                conclusion: self.expr_of(id, st, &mut cache),
                side_condition,
            });
        }
        let result = self.expr_of(target, st, &mut cache);
        Derivation {
            inputs,
            query: self.dist_term(st.nodes[target as usize].term),
            steps,
            result,
        }
    }
}
