use serde::{Deserialize, Serialize};

use super::term::DistTerm;
use crate::var::{Var, VarSet};

/// A symbolic functional of distributions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Atom(DistTerm),
    Product(Vec<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Sum(VarSet, Box<Expr>),
}

impl Expr {
    pub fn atom(t: DistTerm) -> Self {
        Expr::Atom(t)
    }

    pub fn product(factors: Vec<Expr>) -> Self {
        Expr::Product(factors)
    }

    pub fn quotient(num: Expr, den: Expr) -> Self {
        Expr::Quotient(Box::new(num), Box::new(den))
    }

    pub fn sum(bound: VarSet, body: Expr) -> Self {
        Expr::Sum(bound, Box::new(body))
    }

    /// Variables appearing in atoms and not bound by an enclosing sum.
    /// Regime indicators are constants, so they are never free.
    pub fn free_vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a VarSet>, out: &mut VarSet) {
        match self {
            Expr::Atom(t) => {
                for v in t.variables() {
                    if !v.is_regime() && !bound.iter().any(|b| b.contains(&v)) {
                        out.insert(v);
                    }
                }
            }
            Expr::Product(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Expr::Quotient(n, d) => {
                n.collect_free(bound, out);
                d.collect_free(bound, out);
            }
            Expr::Sum(b, body) => {
                bound.push(b);
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable bound by some sum in the tree.
    pub fn bound_vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.walk(&mut |e| {
            if let Expr::Sum(b, _) = e {
                out.extend(b.iter().cloned());
            }
        });
        out
    }

    /// All atoms, left to right.
    pub fn atoms(&self) -> Vec<&DistTerm> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a DistTerm>) {
        match self {
            Expr::Atom(t) => out.push(t),
            Expr::Product(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Expr::Quotient(n, d) => {
                n.collect_atoms(out);
                d.collect_atoms(out);
            }
            Expr::Sum(_, b) => b.collect_atoms(out),
        }
    }

    /// Every variable mentioned anywhere, bound or free, regime included.
    pub fn all_vars(&self) -> VarSet {
        self.atoms().into_iter().flat_map(|t| t.variables()).collect()
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Atom(_) => {}
            Expr::Product(fs) => fs.iter().for_each(|e| e.walk(f)),
            Expr::Quotient(n, d) => {
                n.walk(f);
                d.walk(f);
            }
            Expr::Sum(_, b) => b.walk(f),
        }
    }

    /// Node count.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    /// Checks the structural invariants: sums bind at least one variable,
    /// each bound variable occurs in its body, and no variable is bound
    /// twice along a root-to-leaf path.
    pub fn is_well_formed(&self) -> bool {
        fn go(e: &Expr, bound: &mut Vec<Var>) -> bool {
            match e {
                Expr::Atom(_) => true,
                Expr::Product(fs) => !fs.is_empty() && fs.iter().all(|f| go(f, bound)),
                Expr::Quotient(n, d) => go(n, bound) && go(d, bound),
                Expr::Sum(b, body) => {
                    if b.is_empty() || b.iter().any(|v| bound.contains(v)) {
                        return false;
                    }
                    let mentioned = body.all_vars();
                    if !b.is_subset(&mentioned) {
                        return false;
                    }
                    let mark = bound.len();
                    bound.extend(b.iter().cloned());
                    let ok = go(body, bound);
                    bound.truncate(mark);
                    ok
                }
            }
        }
        go(self, &mut Vec::new())
    }

    /// Canonical form: nested products flattened, directly nested sums
    /// merged, sums hoisted out of products when no variable is captured,
    /// and factors in a fixed order. Evaluation is unchanged.
    pub fn canonicalize(&self) -> Expr {
        let mut cur = canon_step(self);
        loop {
            let next = canon_step(&cur);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    /// Matches the adjustment shape sum_Z P(Y|X,Z) P(Z) for the query
    /// P(Y|do(X)) and returns Z. A bare P(Y|X) is the empty adjustment.
    pub fn adjustment_set(&self, query: &DistTerm) -> Option<VarSet> {
        if !query.conditions().is_empty() {
            return None;
        }
        let y = query.outcomes();
        let x = query.interventions();
        let is_outcome_term = |t: &DistTerm, z: &VarSet| {
            t.interventions().is_empty()
                && t.outcomes() == y
                && *t.conditions() == x.union(z).cloned().collect::<VarSet>()
        };
        match self {
            Expr::Atom(t) if is_outcome_term(t, &VarSet::new()) => Some(VarSet::new()),
            Expr::Sum(z, body) => {
                if z.iter().any(|v| x.contains(v) || y.contains(v)) {
                    return None;
                }
                let Expr::Product(fs) = body.as_ref() else {
                    return None;
                };
                if fs.len() != 2 {
                    return None;
                }
                let atoms: Vec<&DistTerm> = fs
                    .iter()
                    .filter_map(|f| match f {
                        Expr::Atom(t) => Some(t),
                        _ => None,
                    })
                    .collect();
                if atoms.len() != 2 {
                    return None;
                }
                let is_marginal =
                    |t: &DistTerm| t.outcomes() == z && t.interventions().is_empty() && t.conditions().is_empty();
                let ok = (is_outcome_term(atoms[0], z) && is_marginal(atoms[1]))
                    || (is_outcome_term(atoms[1], z) && is_marginal(atoms[0]));
                ok.then(|| z.clone())
            }
            _ => None,
        }
    }
}

/// Free-function form of [`Expr::adjustment_set`].
pub fn is_adjustment(e: &Expr, query: &DistTerm) -> Option<VarSet> {
    e.adjustment_set(query)
}

fn canon_step(e: &Expr) -> Expr {
    match e {
        Expr::Atom(_) => e.clone(),
        Expr::Quotient(n, d) => Expr::quotient(canon_step(n), canon_step(d)),
        Expr::Sum(b, body) => match canon_step(body) {
            Expr::Sum(inner, e2) if inner.is_disjoint(b) => Expr::Sum(b.union(&inner).cloned().collect(), e2),
            other => Expr::sum(b.clone(), other),
        },
        Expr::Product(fs) => {
            // Flatten before hoisting so that the result does not depend
            // on how the factors were grouped.
            fn flatten(fs: &[Expr], out: &mut Vec<Expr>) {
                for f in fs {
                    match f {
                        Expr::Product(inner) => flatten(inner, out),
                        other => out.push(canon_step(other)),
                    }
                }
            }
            let mut flat = Vec::with_capacity(fs.len());
            flatten(fs, &mut flat);
            if flat.len() == 1 {
                return flat.pop().unwrap();
            }
            // Hoist the first sum that can move out without capture.
            for i in 0..flat.len() {
                if let Expr::Sum(b, _) = &flat[i] {
                    let others_clash = flat.iter().enumerate().any(|(j, f)| {
                        j != i && {
                            let fv = f.free_vars();
                            let bv = f.bound_vars();
                            b.iter().any(|v| fv.contains(v) || bv.contains(v))
                        }
                    });
                    if !others_clash {
                        let Expr::Sum(b, body) = flat.remove(i) else {
                            unreachable!()
                        };
                        flat.push(*body);
                        return Expr::Sum(b, Box::new(Expr::Product(flat)));
                    }
                }
            }
            sort_factors(&mut flat);
            Expr::Product(flat)
        }
    }
}

fn sort_factors(fs: &mut [Expr]) {
    let mut keyed: Vec<(String, Expr)> = fs.iter().map(|f| (super::render::latex(f), f.clone())).collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0));
    for (slot, (_, f)) in fs.iter_mut().zip(keyed) {
        *slot = f;
    }
}
