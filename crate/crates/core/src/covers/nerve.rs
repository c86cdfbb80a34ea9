//! Nerve maps. The barycentric partition of unity of a cover `W` sends the
//! open cell `c` into the open simplex of the nerve spanned by the members
//! containing a vertex of `c`; that simplex is the cell's carrier.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::cover::{Cover, FiberModel, JoinCover};
use super::solver::{d_conditional, SolveOptions};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NerveMap {
    cover: Arc<Cover>,
    carriers: Vec<Vec<u32>>,
}

impl NerveMap {
    pub fn new(cover: Arc<Cover>) -> Self {
        let c = cover.complex().clone();
        let carriers = (0..c.len())
            .map(|cell| {
                let mut s: Vec<u32> = c
                    .closure_vertices(cell)
                    .into_iter()
                    .flat_map(|v| {
                        cover.members().iter().enumerate().filter(move |(_, m)| m.contains(v)).map(|(i, _)| i as u32)
                    })
                    .collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        NerveMap { cover, carriers }
    }

    pub fn cover(&self) -> &Arc<Cover> {
        &self.cover
    }

    /// Members `i` with `g_i > 0` on the open cell.
    pub fn carrier(&self, cell: usize) -> &[u32] {
        &self.carriers[cell]
    }

    /// `g_i` at the barycenter of the cell: the share of its vertices lying in
    /// `W_i`, normalized over members.
    pub fn weights(&self, cell: usize) -> Vec<(u32, f64)> {
        let verts = self.cover.complex().closure_vertices(cell);
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for &v in &verts {
            let hits: Vec<usize> =
                self.cover.members().iter().enumerate().filter(|(_, m)| m.contains(v)).map(|(i, _)| i).collect();
            for &i in &hits {
                *acc.entry(i as u32).or_default() += 1.0 / (hits.len() * verts.len()) as f64;
            }
        }
        acc.into_iter().collect()
    }

    /// Dimension of the full nerve of the cover, which is `ord(W)`.
    pub fn nerve_dimension(&self) -> usize {
        self.cover.ord()
    }

    /// Dimension of the largest simplex hit by the map.
    pub fn image_dimension(&self) -> usize {
        self.carriers.iter().map(Vec::len).max().unwrap_or(1).saturating_sub(1)
    }

    /// Every point preimage lies in a member: the cells sharing a carrier
    /// all lie in each member of that carrier.
    pub fn preimages_in_members(&self) -> bool {
        self.carriers
            .iter()
            .enumerate()
            .all(|(cell, s)| !s.is_empty() && s.iter().all(|&i| self.cover.members()[i as usize].contains(cell)))
    }

    /// `{g^{-1}(q) ∩ π^{-1}(y)}` refines `U`: for every carrier and fiber
    /// class, the cells carrying both lie in one member of `U`.
    pub fn point_fibers_refine(&self, u: &JoinCover, fibers: &FiberModel) -> Result<bool> {
        if u.complex() != self.cover.complex() || fibers.complex() != self.cover.complex() {
            return Err(Error::ComplexMismatch);
        }
        let mut acc: BTreeMap<(&[u32], u32), Vec<u64>> = BTreeMap::new();
        for (cell, s) in self.carriers.iter().enumerate() {
            let masks = u.masks(cell);
            acc.entry((s.as_slice(), fibers.class_of(cell)))
                .and_modify(|m| m.iter_mut().zip(&masks).for_each(|(a, b)| *a &= b))
                .or_insert(masks);
        }
        Ok(acc.values().all(|m| u.all_parts_nonzero(m)))
    }

    /// The pullback `{g^{-1}(st e_i)}` of the open vertex stars of the nerve.
    pub fn pullback(&self) -> Result<Cover> {
        let c = self.cover.complex().clone();
        Cover::from_predicate(c, self.cover.len(), |i, cell| self.carriers[cell].contains(&(i as u32)))
    }
}

/// Whether each member's trace on each fiber lies in a member of `U`.
pub fn fiberwise_refines(w: &Cover, u: &JoinCover, fibers: &FiberModel) -> Result<bool> {
    if u.complex() != w.complex() || fibers.complex() != w.complex() {
        return Err(Error::ComplexMismatch);
    }
    for m in w.members() {
        let mut acc: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for cell in m.ones() {
            let masks = u.masks(cell);
            acc.entry(fibers.class_of(cell))
                .and_modify(|a| a.iter_mut().zip(&masks).for_each(|(x, y)| *x &= y))
                .or_insert(masks);
        }
        if !acc.values().all(|a| u.all_parts_nonzero(a)) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Both directions of the bridge between `D(U|Y) ≤ k` and nerve maps, on a
/// grid witness: the witness's nerve map has point fibers refining `U`
/// fiberwise, and the pullback of the nerve's vertex stars is an admissible
/// cover of `ord ≤ k`. False when no grid witness of `ord ≤ k` is found.
pub fn verify_bridge(u: &JoinCover, fibers: &FiberModel, k: usize, opts: &SolveOptions) -> Result<bool> {
    let rep = d_conditional(u, fibers, opts)?;
    if rep.lower > k || rep.grid > k {
        return Ok(false);
    }
    let w = Arc::new(rep.witness.cover(u.complex().clone())?);
    bridge_for(&w, u, fibers, k)
}

/// The bridge checks for a given cover `W`.
pub fn bridge_for(w: &Arc<Cover>, u: &JoinCover, fibers: &FiberModel, k: usize) -> Result<bool> {
    let g = NerveMap::new(w.clone());
    if !g.preimages_in_members() || g.nerve_dimension() > k || !g.point_fibers_refine(u, fibers)? {
        return Ok(false);
    }
    let back = g.pullback()?;
    Ok(back.ord() <= k && fiberwise_refines(&back, u, fibers)?)
}
