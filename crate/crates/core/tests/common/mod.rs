//! Reference implementations used as test oracles. They work from the
//! edge lists alone and share no code with the library algorithms.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use causalfuse::identify::{SearchBudget, SearchOptions};
use causalfuse::symexpr::{Assignment, DistOracle};
use causalfuse::{Admg, DistTerm, Error, Result, Var, VarSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Edge lists by vertex index; directed edges point from lower to higher
/// index, so every generated graph is acyclic.
#[derive(Clone, Debug)]
pub struct Edges {
    pub n: usize,
    pub directed: Vec<(usize, usize)>,
    pub bidirected: Vec<(usize, usize)>,
}

pub fn name(i: usize) -> String {
    format!("V{i}")
}

impl Edges {
    /// One code per unordered pair: 0 none, 1 directed, 2 bidirected,
    /// 3 both.
    pub fn from_codes(n: usize, codes: &[u8]) -> Self {
        let mut e = Edges {
            n,
            directed: Vec::new(),
            bidirected: Vec::new(),
        };
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                let c = codes.get(k).copied().unwrap_or(0) % 4;
                k += 1;
                if c & 1 != 0 {
                    e.directed.push((i, j));
                }
                if c & 2 != 0 {
                    e.bidirected.push((i, j));
                }
            }
        }
        e
    }

    pub fn random(n: usize, p_dir: f64, p_bi: f64, rng: &mut impl Rng) -> Self {
        let mut e = Edges {
            n,
            directed: Vec::new(),
            bidirected: Vec::new(),
        };
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(p_dir) {
                    e.directed.push((i, j));
                }
                if rng.random_bool(p_bi) {
                    e.bidirected.push((i, j));
                }
            }
        }
        e
    }

    pub fn admg(&self) -> Admg {
        let names: Vec<String> = (0..self.n).map(name).collect();
        Admg::new(
            names.iter().map(|s| Var::new(s.clone())),
            self.directed
                .iter()
                .map(|&(a, b)| (names[a].as_str(), names[b].as_str())),
            self.bidirected
                .iter()
                .map(|&(a, b)| (names[a].as_str(), names[b].as_str())),
        )
        .expect("generated graphs are valid")
    }

    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([v]);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &(a, b) in &self.directed {
                if a == u && seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    /// Edges as (from, to, arrowhead at from, arrowhead at to), both
    /// orientations.
    fn incidences(&self) -> Vec<(usize, usize, bool, bool)> {
        let mut out = Vec::new();
        for &(a, b) in &self.directed {
            out.push((a, b, false, true));
            out.push((b, a, true, false));
        }
        for &(a, b) in &self.bidirected {
            out.push((a, b, true, true));
            out.push((b, a, true, true));
        }
        out
    }

    /// d-separation by enumerating every simple path.
    pub fn d_separated(&self, a: &BTreeSet<usize>, b: &BTreeSet<usize>, c: &BTreeSet<usize>) -> bool {
        let inc = self.incidences();
        let anc_c: BTreeSet<usize> = (0..self.n)
            .filter(|&v| self.descendants(v).iter().any(|d| c.contains(d)))
            .collect();
        for &s in a {
            let mut visited = vec![false; self.n];
            visited[s] = true;
            if self.active_path(&inc, s, None, b, c, &anc_c, &mut visited) {
                return false;
            }
        }
        true
    }

    /// Whether an active path continues from `at`, entered with an
    /// arrowhead at `at` (`Some(true)`), a tail (`Some(false)`), or as the
    /// start (`None`).
    #[allow(clippy::too_many_arguments)]
    fn active_path(
        &self,
        inc: &[(usize, usize, bool, bool)],
        at: usize,
        entered_head: Option<bool>,
        b: &BTreeSet<usize>,
        c: &BTreeSet<usize>,
        anc_c: &BTreeSet<usize>,
        visited: &mut Vec<bool>,
    ) -> bool {
        for &(u, w, head_u, head_w) in inc {
            if u != at || visited[w] {
                continue;
            }
            if let Some(h) = entered_head {
                let collider = h && head_u;
                let ok = if collider {
                    anc_c.contains(&at)
                } else {
                    !c.contains(&at)
                };
                if !ok {
                    continue;
                }
            }
            if b.contains(&w) {
                return true;
            }
            visited[w] = true;
            if self.active_path(inc, w, Some(head_w), b, c, anc_c, visited) {
                return true;
            }
            visited[w] = false;
        }
        false
    }
}

/// Directed edges of the latent projection: `z -> w` iff a directed path
/// from `z` to `w` has all interior vertices outside `keep`.
pub fn project_directed(e: &Edges, keep: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &z in keep {
        let mut stack = vec![z];
        let mut seen = BTreeSet::from([z]);
        while let Some(u) = stack.pop() {
            for &(a, b) in &e.directed {
                if a != u || !seen.insert(b) {
                    continue;
                }
                if keep.contains(&b) {
                    out.insert((z, b));
                } else {
                    stack.push(b);
                }
            }
        }
    }
    out
}

/// Bidirected edges of the latent projection: `z <-> w` iff some path
/// between them has arrowheads at both ends, no collider, and all interior
/// vertices outside `keep`.
pub fn project_bidirected(e: &Edges, keep: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
    let inc = e.incidences();
    let mut out = BTreeSet::new();
    for &z in keep {
        let mut visited = vec![false; e.n];
        visited[z] = true;
        bi_walk(&inc, z, z, None, None, keep, &mut visited, &mut out);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn bi_walk(
    inc: &[(usize, usize, bool, bool)],
    start: usize,
    at: usize,
    first_head: Option<bool>,
    entered_head: Option<bool>,
    keep: &BTreeSet<usize>,
    visited: &mut Vec<bool>,
    out: &mut BTreeSet<(usize, usize)>,
) {
    for &(u, w, head_u, head_w) in inc {
        if u != at || visited[w] {
            continue;
        }
        if entered_head == Some(true) && head_u {
            continue;
        }
        let fh = first_head.unwrap_or(head_u);
        if keep.contains(&w) {
            if fh && head_w && start < w {
                out.insert((start, w));
            }
            continue;
        }
        visited[w] = true;
        bi_walk(inc, start, w, Some(fh), Some(head_w), keep, visited, out);
        visited[w] = false;
    }
}

type Cpt = BTreeMap<(Vec<u8>, Vec<u8>), f64>;

/// Binary SCM with one binary latent per bidirected edge; distributions by
/// brute-force truncated factorization.
pub struct ExactModel {
    pub edges: Edges,
    latent_p: Vec<f64>,
    /// P(V=1 | parent values, latent values), keyed by those values.
    cpt: Vec<Cpt>,
}

impl ExactModel {
    pub fn random(edges: &Edges, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let latent_p = edges.bidirected.iter().map(|_| rng.random_range(0.15..0.85)).collect();
        let mut cpt = Vec::new();
        for v in 0..edges.n {
            let np = edges.directed.iter().filter(|e| e.1 == v).count();
            let nl = edges.bidirected.iter().filter(|e| e.0 == v || e.1 == v).count();
            let mut table = BTreeMap::new();
            for pv in 0..1u32 << np {
                for lv in 0..1u32 << nl {
                    let pa = (0..np).map(|i| (pv >> i & 1) as u8).collect();
                    let la = (0..nl).map(|i| (lv >> i & 1) as u8).collect();
                    table.insert((pa, la), rng.random_range(0.1..0.9));
                }
            }
            cpt.push(table);
        }
        ExactModel {
            edges: edges.clone(),
            latent_p,
            cpt,
        }
    }

    /// P(values) under do(fixed), summed over latents.
    fn joint_prob(&self, values: &[u8], fixed: &BTreeMap<usize, u8>) -> f64 {
        for (&v, &x) in fixed {
            if values[v] != x {
                return 0.0;
            }
        }
        let nl = self.latent_p.len();
        let mut total = 0.0;
        for lv in 0..1u32 << nl {
            let lat: Vec<u8> = (0..nl).map(|i| (lv >> i & 1) as u8).collect();
            let mut p: f64 = lat
                .iter()
                .zip(&self.latent_p)
                .map(|(&u, &q)| if u == 1 { q } else { 1.0 - q })
                .product();
            for v in 0..self.edges.n {
                if fixed.contains_key(&v) {
                    continue;
                }
                let pa: Vec<u8> = self
                    .edges
                    .directed
                    .iter()
                    .filter(|e| e.1 == v)
                    .map(|e| values[e.0])
                    .collect();
                let la: Vec<u8> = self
                    .edges
                    .bidirected
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.0 == v || e.1 == v)
                    .map(|(i, _)| lat[i])
                    .collect();
                let p1 = self.cpt[v][&(pa, la)];
                p *= if values[v] == 1 { p1 } else { 1.0 - p1 };
            }
            total += p;
        }
        total
    }

    /// P(event | do(fixed), given) by summing the joint.
    pub fn conditional(
        &self,
        event: &BTreeMap<usize, u8>,
        fixed: &BTreeMap<usize, u8>,
        given: &BTreeMap<usize, u8>,
    ) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for x in 0..1u32 << self.edges.n {
            let values: Vec<u8> = (0..self.edges.n).map(|i| (x >> i & 1) as u8).collect();
            if given.iter().any(|(&v, &g)| values[v] != g) {
                continue;
            }
            let p = self.joint_prob(&values, fixed);
            den += p;
            if event.iter().all(|(&v, &g)| values[v] == g) {
                num += p;
            }
        }
        (den > 0.0).then(|| num / den)
    }
}

fn index(v: &Var) -> usize {
    v.name[1..].parse().expect("generated names are V<i>")
}

impl DistOracle for ExactModel {
    fn cardinality(&self, v: &Var) -> Option<usize> {
        (index(v) < self.edges.n).then_some(2)
    }

    fn prob(&self, t: &DistTerm, a: &Assignment) -> Result<f64> {
        let pick = |set: &causalfuse::VarSet| -> BTreeMap<usize, u8> {
            set.iter()
                .map(|v| (index(v), a.get(&v.name).expect("assigned") as u8))
                .collect()
        };
        self.conditional(&pick(t.outcomes()), &pick(t.interventions()), &pick(t.conditions()))
            .ok_or_else(|| Error::EmptyStratum {
                table: "reference".into(),
                stratum: t.text(),
            })
    }
}

pub fn set(idx: &[usize]) -> VarSet {
    idx.iter().map(|&i| Var::new(name(i))).collect()
}

pub fn small_budget() -> SearchOptions {
    SearchOptions {
        budget: SearchBudget {
            max_expressions: 40_000,
            max_depth: 64,
            time_limit: 20.0,
        },
        ..SearchOptions::default()
    }
}

/// Random graph, inputs and query drawn from `seed`.
pub fn problem(seed: u64) -> (Edges, Vec<DistTerm>, DistTerm) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=6);
    let e = Edges::random(n, 0.45, 0.2, &mut rng);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let x = order[0];
    let ny = rng.random_range(1..=2.min(n - 1));
    let y: Vec<usize> = order[1..1 + ny].to_vec();
    let query = DistTerm::new(set(&y), set(&[x]), VarSet::new()).unwrap();
    let mut inputs = vec![DistTerm::joint(set(&(0..n).collect::<Vec<_>>())).unwrap()];
    if rng.random_bool(0.5) {
        let w = order[rng.random_range(0..n)];
        let rest: Vec<usize> = (0..n).filter(|&v| v != w).collect();
        inputs.push(DistTerm::new(set(&rest), set(&[w]), VarSet::new()).unwrap());
    }
    (e, inputs, query)
}
