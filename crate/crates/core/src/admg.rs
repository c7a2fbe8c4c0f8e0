//! Acyclic directed mixed graphs.
//!
//! Directed edges encode direct causation, bidirected edges encode an
//! unobserved common cause. Vertices are stored in [`Var`] order and
//! addressed internally by index; vertex sets are 64-bit masks on the hot
//! paths used by the identification search.

use std::collections::{BTreeSet, HashMap};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::var::{validate_name, Var, VarSet, VertexKind};

/// Vertex set as a bit mask over vertex indices.
pub type Mask = u64;

pub const MAX_VERTICES: usize = 64;

pub(crate) fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

#[inline]
pub(crate) fn bit(i: usize) -> Mask {
    1u64 << i
}

/// Graph surgery used by the do-calculus side conditions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mutilation {
    /// Remove directed edges into these and bidirected edges touching them.
    pub cut_incoming: VarSet,
    /// Remove directed edges out of these.
    pub cut_outgoing: VarSet,
}

impl Mutilation {
    pub fn new(cut_incoming: VarSet, cut_outgoing: VarSet) -> Self {
        Mutilation {
            cut_incoming,
            cut_outgoing,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cut_incoming.is_empty() && self.cut_outgoing.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Admg {
    vertices: Vec<Var>,
    index: HashMap<String, usize>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    parents: Vec<Mask>,
    children: Vec<Mask>,
    spouses: Vec<Mask>,
}

impl PartialEq for Admg {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.directed == other.directed && self.bidirected == other.bidirected
    }
}

impl Eq for Admg {}

impl Admg {
    /// Builds a graph from vertices and named edges. Every endpoint must be
    /// declared; duplicate edges and self loops are rejected, as are directed
    /// cycles.
    pub fn new<'a>(
        vertices: impl IntoIterator<Item = Var>,
        directed: impl IntoIterator<Item = (&'a str, &'a str)>,
        bidirected: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut vs: Vec<Var> = vertices.into_iter().collect();
        vs.sort();
        for w in vs.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::Validation(format!("duplicate vertex `{}`", w[0].name)));
            }
        }
        for v in &vs {
            validate_name(&v.name)?;
        }
        if vs.len() > MAX_VERTICES {
            return Err(Error::Validation(format!(
                "graphs are limited to {MAX_VERTICES} vertices"
            )));
        }
        let index: HashMap<String, usize> = vs.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::input(format!("edge endpoint `{name}` is not a vertex")))
        };
        let mut dir = BTreeSet::new();
        for (a, b) in directed {
            let (i, j) = (lookup(a)?, lookup(b)?);
            if i == j {
                return Err(Error::Validation(format!("self loop on `{a}`")));
            }
            if !dir.insert((i, j)) {
                return Err(Error::Validation(format!("duplicate edge {a} -> {b}")));
            }
        }
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            let (i, j) = (lookup(a)?, lookup(b)?);
            if i == j {
                return Err(Error::Validation(format!("self loop on `{a}`")));
            }
            if !bi.insert((i.min(j), i.max(j))) {
                return Err(Error::Validation(format!("duplicate edge {a} <-> {b}")));
            }
        }
        let g = Self::from_parts(vs, index, dir, bi);
        if let Some(v) = g.find_cycle_vertex() {
            return Err(Error::Validation(format!(
                "directed cycle through `{}`",
                g.vertices[v].name
            )));
        }
        for (i, v) in g.vertices.iter().enumerate() {
            if v.kind == VertexKind::Selection && g.children[i] != 0 {
                warn!("selection vertex `{}` has outgoing edges", v.name);
            }
        }
        Ok(g)
    }

    fn from_parts(
        vertices: Vec<Var>,
        index: HashMap<String, usize>,
        directed: BTreeSet<(usize, usize)>,
        bidirected: BTreeSet<(usize, usize)>,
    ) -> Self {
        let n = vertices.len();
        let mut parents = vec![0; n];
        let mut children = vec![0; n];
        let mut spouses = vec![0; n];
        for &(a, b) in &directed {
            children[a] |= bit(b);
            parents[b] |= bit(a);
        }
        for &(a, b) in &bidirected {
            spouses[a] |= bit(b);
            spouses[b] |= bit(a);
        }
        Admg {
            vertices,
            index,
            directed,
            bidirected,
            parents,
            children,
            spouses,
        }
    }

    fn find_cycle_vertex(&self) -> Option<usize> {
        // Kahn's algorithm; whatever is left over sits on or behind a cycle.
        let n = self.vertices.len();
        let mut indeg: Vec<u32> = self.parents.iter().map(|p| p.count_ones()).collect();
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for c in bits(self.children[v]) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        (seen < n).then(|| (0..n).find(|&i| indeg[i] > 0).unwrap())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Var] {
        &self.vertices
    }

    pub fn vertex_set(&self) -> VarSet {
        self.vertices.iter().cloned().collect()
    }

    pub fn var(&self, i: usize) -> &Var {
        &self.vertices[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.index_of(name).map(|i| &self.vertices[i])
    }

    pub fn all_mask(&self) -> Mask {
        if self.vertices.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.vertices.len()) - 1
        }
    }

    /// Directed edges as (tail, head) names.
    pub fn directed_edges(&self) -> Vec<(&str, &str)> {
        self.directed
            .iter()
            .map(|&(a, b)| (self.vertices[a].name.as_str(), self.vertices[b].name.as_str()))
            .collect()
    }

    /// Bidirected edges, each once, endpoints in vertex order.
    pub fn bidirected_edges(&self) -> Vec<(&str, &str)> {
        self.bidirected
            .iter()
            .map(|&(a, b)| (self.vertices[a].name.as_str(), self.vertices[b].name.as_str()))
            .collect()
    }

    pub fn parents_mask(&self, i: usize) -> Mask {
        self.parents[i]
    }

    pub fn children_mask(&self, i: usize) -> Mask {
        self.children[i]
    }

    pub fn spouses_mask(&self, i: usize) -> Mask {
        self.spouses[i]
    }

    /// Converts a named set into a mask, failing on unknown names or on a
    /// kind that disagrees with the graph's declaration.
    pub fn mask_of(&self, set: &VarSet) -> Result<Mask> {
        let mut m = 0;
        for v in set {
            let i = self
                .index_of(&v.name)
                .ok_or_else(|| Error::input(format!("unknown vertex `{}`", v.name)))?;
            if self.vertices[i].kind != v.kind {
                return Err(Error::input(format!(
                    "vertex `{}` used with kind {:?} but declared {:?}",
                    v.name, v.kind, self.vertices[i].kind
                )));
            }
            m |= bit(i);
        }
        Ok(m)
    }

    pub fn set_of(&self, m: Mask) -> VarSet {
        bits(m).map(|i| self.vertices[i].clone()).collect()
    }

    /// Vertices in a topological order of the directed part.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let mut indeg: Vec<u32> = self.parents.iter().map(|p| p.count_ones()).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in bits(self.children[v]) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    // ---- ancestors -------------------------------------------------------

    pub fn ancestors(&self, s: &VarSet) -> Result<VarSet> {
        let m = self.mask_of(s)?;
        Ok(self.set_of(self.ancestors_mask(m)))
    }

    pub fn ancestors_mask(&self, s: Mask) -> Mask {
        ancestors_with(s, |v| self.parents[v])
    }

    /// Ancestors of `s` once directed edges into `cut_in` are removed.
    pub fn ancestors_cut_mask(&self, s: Mask, cut_in: Mask) -> Mask {
        ancestors_with(s, |v| if cut_in & bit(v) != 0 { 0 } else { self.parents[v] })
    }

    // ---- mutilation ------------------------------------------------------

    pub fn mutilate(&self, m: &Mutilation) -> Result<Admg> {
        let cut_in = self.mask_of(&m.cut_incoming)?;
        let cut_out = self.mask_of(&m.cut_outgoing)?;
        Ok(self.mutilate_mask(cut_in, cut_out))
    }

    pub fn mutilate_mask(&self, cut_in: Mask, cut_out: Mask) -> Admg {
        let directed = self
            .directed
            .iter()
            .copied()
            .filter(|&(a, b)| cut_in & bit(b) == 0 && cut_out & bit(a) == 0)
            .collect();
        let bidirected = self
            .bidirected
            .iter()
            .copied()
            .filter(|&(a, b)| cut_in & (bit(a) | bit(b)) == 0)
            .collect();
        Self::from_parts(self.vertices.clone(), self.index.clone(), directed, bidirected)
    }

    // ---- d-separation ----------------------------------------------------

    /// True iff `a` and `b` are d-separated given `c`; bidirected edges act
    /// as latent common parents.
    pub fn d_separated(&self, a: &VarSet, b: &VarSet, c: &VarSet) -> Result<bool> {
        let (ma, mb, mc) = (self.mask_of(a)?, self.mask_of(b)?, self.mask_of(c)?);
        if ma & mb != 0 || ma & mc != 0 || mb & mc != 0 {
            return Err(Error::input("d-separation sets must be pairwise disjoint"));
        }
        Ok(self.d_separated_mask(ma, mb, mc))
    }

    pub fn d_separated_mask(&self, a: Mask, b: Mask, c: Mask) -> bool {
        self.d_separated_cut(a, b, c, 0, 0)
    }

    /// d-separation in the graph mutilated by `cut_in`/`cut_out`, without
    /// materializing the mutilated graph.
    pub fn d_separated_cut(&self, a: Mask, b: Mask, c: Mask, cut_in: Mask, cut_out: Mask) -> bool {
        let pa = |v: usize| {
            if cut_in & bit(v) != 0 {
                0
            } else {
                self.parents[v] & !cut_out
            }
        };
        let ch = |v: usize| {
            if cut_out & bit(v) != 0 {
                0
            } else {
                self.children[v] & !cut_in
            }
        };
        let sp = |v: usize| {
            if cut_in & bit(v) != 0 {
                0
            } else {
                self.spouses[v] & !cut_in
            }
        };
        let an_c = ancestors_with(c, pa);

        // Walk states: reached v with a tail at v (moving against an edge
        // v -> child) or with an arrowhead into v.
        let mut seen_tail: Mask = 0;
        let mut seen_head: Mask = 0;
        let mut todo_tail: Mask = a;
        let mut todo_head: Mask = 0;
        loop {
            let nt = todo_tail & !seen_tail;
            let nh = todo_head & !seen_head;
            if nt == 0 && nh == 0 {
                return true;
            }
            if (nt | nh) & b != 0 {
                return false;
            }
            seen_tail |= nt;
            seen_head |= nh;
            todo_tail = 0;
            todo_head = 0;
            // Tail at v: v is a non-collider whichever edge leaves next.
            for v in bits(nt & !c) {
                todo_tail |= pa(v);
                todo_head |= ch(v) | sp(v);
            }
            for v in bits(nh) {
                if c & bit(v) == 0 {
                    todo_head |= ch(v);
                }
                if an_c & bit(v) != 0 {
                    todo_tail |= pa(v);
                    todo_head |= sp(v);
                }
            }
        }
    }

    // ---- latent projection -----------------------------------------------

    /// Projects the graph onto `keep`, marginalizing every other vertex.
    pub fn latent_project(&self, keep: &VarSet) -> Result<Admg> {
        let keep_mask = self.mask_of(keep)?;
        Ok(self.latent_project_mask(keep_mask))
    }

    pub fn latent_project_mask(&self, keep: Mask) -> Admg {
        let dropped = self.all_mask() & !keep;
        // up[v]: dropped vertices with a directed path into v whose
        // intermediate vertices are all dropped.
        let n = self.vertices.len();
        let mut up = vec![0 as Mask; n];
        for (v, slot) in up.iter_mut().enumerate() {
            let mut reach = 0;
            let mut todo = self.parents[v] & dropped;
            while todo != 0 {
                let fresh = todo & !reach;
                reach |= fresh;
                todo = 0;
                for u in bits(fresh) {
                    todo |= self.parents[u] & dropped;
                }
            }
            *slot = reach;
        }

        let kept: Vec<usize> = bits(keep).collect();
        let mut directed = BTreeSet::new();
        let mut bidirected = BTreeSet::new();
        for &w in &kept {
            // Z -> W: Z is a parent of W or of a dropped ancestor-via-dropped of W.
            let mut via = self.parents[w];
            for l in bits(up[w]) {
                via |= self.parents[l];
            }
            for z in bits(via & keep) {
                directed.insert((z, w));
            }
        }
        for (ai, &z) in kept.iter().enumerate() {
            for &w in &kept[ai + 1..] {
                let common_top = up[z] & up[w] != 0;
                let ends_z = up[z] | bit(z);
                let ends_w = up[w] | bit(w);
                let via_bidirected = bits(ends_z).any(|l| self.spouses[l] & ends_w != 0);
                if common_top || via_bidirected {
                    bidirected.insert((z, w));
                }
            }
        }

        // Re-index onto the kept vertices.
        let remap: HashMap<usize, usize> = kept.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let vertices: Vec<Var> = kept.iter().map(|&i| self.vertices[i].clone()).collect();
        let index = vertices.iter().enumerate().map(|(i, v)| (v.name.clone(), i)).collect();
        let directed = directed.into_iter().map(|(a, b)| (remap[&a], remap[&b])).collect();
        let bidirected = bidirected.into_iter().map(|(a, b)| (remap[&a], remap[&b])).collect();
        Self::from_parts(vertices, index, directed, bidirected)
    }
}

fn ancestors_with(s: Mask, pa: impl Fn(usize) -> Mask) -> Mask {
    let mut reach = 0;
    let mut todo = s;
    while todo != 0 {
        let fresh = todo & !reach;
        reach |= fresh;
        todo = 0;
        for v in bits(fresh) {
            todo |= pa(v);
        }
    }
    reach
}
