//! Binary SCMs over an ADMG with exactly enumerable distributions.
//!
//! Each bidirected edge becomes a binary latent parent of its two
//! endpoints. Interventional joints come from the truncated factorization
//! summed over the latents, so every answer is exact up to rounding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admg::{bit, bits, Admg, Mask};
use crate::error::{Error, Result};
use crate::symexpr::{Assignment, DistOracle, DistTerm};
use crate::var::{Var, VarSet};

/// Interventional joints keyed by (do mask, do values).
type JointCache = HashMap<(Mask, Mask), Arc<Vec<f64>>>;

pub struct DiscreteScm {
    graph: Admg,
    /// P(U = 1) per latent.
    latent_p: Vec<f64>,
    /// Latent indices attached to each vertex.
    latents_of: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
    /// P(V = 1 | parents, latents), indexed by the parent bits followed by
    /// the latent bits.
    cpt: Vec<Vec<f64>>,
    cache: Mutex<JointCache>,
}

impl DiscreteScm {
    /// Random strictly positive parameters drawn from `seed`.
    pub fn random(g: &Admg, seed: u64) -> Result<Self> {
        let n = g.len();
        if n > 16 || g.bidirected_edges().len() > 16 {
            return Err(Error::input(
                "exact enumeration is limited to 16 vertices and 16 latents",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges = g.bidirected_edges();
        let mut latents_of = vec![Vec::new(); n];
        let mut latent_p = Vec::new();
        for (l, (a, b)) in edges.iter().enumerate() {
            latents_of[g.index_of(a).expect("vertex")].push(l);
            latents_of[g.index_of(b).expect("vertex")].push(l);
            latent_p.push(rng.random_range(0.2..0.8));
        }
        let parents: Vec<Vec<usize>> = (0..n).map(|v| bits(g.parents_mask(v)).collect()).collect();
        let cpt = (0..n)
            .map(|v| {
                let width = parents[v].len() + latents_of[v].len();
                (0..1usize << width).map(|_| rng.random_range(0.1..0.9)).collect()
            })
            .collect();
        Ok(DiscreteScm {
            graph: g.clone(),
            latent_p,
            latents_of,
            parents,
            cpt,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn graph(&self) -> &Admg {
        &self.graph
    }

    /// Joint of all vertices under `do(do_mask = do_values)`, indexed by the
    /// vertex value bits.
    pub fn joint(&self, do_mask: Mask, do_values: Mask) -> Arc<Vec<f64>> {
        let key = (do_mask, do_values & do_mask);
        if let Some(j) = self.cache.lock().expect("cache lock").get(&key) {
            return j.clone();
        }
        let n = self.graph.len();
        let nl = self.latent_p.len();
        let mut joint = vec![0.0; 1 << n];
        for u in 0..1usize << nl {
            let mut pu = 1.0;
            for (l, p) in self.latent_p.iter().enumerate() {
                pu *= if u >> l & 1 == 1 { *p } else { 1.0 - p };
            }
            for (x, slot) in joint.iter_mut().enumerate() {
                let x = x as Mask;
                if x & do_mask != key.1 {
                    continue;
                }
                let mut p = pu;
                for v in 0..n {
                    if do_mask & bit(v) != 0 {
                        continue;
                    }
                    let mut idx = 0usize;
                    for &q in &self.parents[v] {
                        idx = idx << 1 | (x >> q & 1) as usize;
                    }
                    for &l in &self.latents_of[v] {
                        idx = idx << 1 | (u >> l & 1);
                    }
                    let p1 = self.cpt[v][idx];
                    p *= if x & bit(v) != 0 { p1 } else { 1.0 - p1 };
                }
                *slot += p;
            }
        }
        let joint = Arc::new(joint);
        self.cache.lock().expect("cache lock").insert(key, joint.clone());
        joint
    }

    /// Vertex mask and value bits of `set` under `a`; `None` when a value
    /// is outside the binary range.
    fn bits_of(&self, set: &VarSet, a: &Assignment) -> Result<Option<(Mask, Mask)>> {
        let mut mask = 0;
        let mut vals = 0;
        for v in set {
            let i = self
                .graph
                .index_of(&v.name)
                .ok_or_else(|| Error::input(format!("`{}` is not a vertex", v.name)))?;
            let x = a
                .value_of(v)
                .ok_or_else(|| Error::input(format!("variable `{}` is unassigned", v.name)))?;
            if x > 1 {
                return Ok(None);
            }
            mask |= bit(i);
            vals |= (x as Mask) << i;
        }
        Ok(Some((mask, vals)))
    }
}

/// Sum of `joint` over the cells agreeing with `vals` on `mask`.
fn marginal(joint: &[f64], mask: Mask, vals: Mask) -> f64 {
    joint
        .iter()
        .enumerate()
        .filter(|(x, _)| *x as Mask & mask == vals)
        .map(|(_, p)| p)
        .sum()
}

impl DistOracle for DiscreteScm {
    fn cardinality(&self, var: &Var) -> Option<usize> {
        self.graph.get(&var.name).map(|_| 2)
    }

    fn prob(&self, term: &DistTerm, a: &Assignment) -> Result<f64> {
        let parts = (
            self.bits_of(term.interventions(), a)?,
            self.bits_of(term.outcomes(), a)?,
            self.bits_of(term.conditions(), a)?,
        );
        let (Some((dm, dv)), Some((om, ov)), Some((cm, cv))) = parts else {
            return Ok(0.0);
        };
        let joint = self.joint(dm, dv);
        let den = marginal(&joint, cm, cv);
        if den == 0.0 {
            return Err(Error::EmptyStratum {
                table: "exact".into(),
                stratum: term.text(),
            });
        }
        Ok(marginal(&joint, cm | om, cv | ov) / den)
    }
}
