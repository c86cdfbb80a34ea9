//! Minimizing `ord(W)` over witness covers at a fixed grid.
//!
//! A witness cover is a family of open stars `star(S_i)` of vertex sets.
//! Shrinking members never raises `ord`, so the `S_i` may be taken to
//! partition the vertices, and then the number of members containing a top
//! cell is the number of distinct labels among its vertices. The search runs
//! over such labelings in lexicographic vertex order with canonical label
//! numbering, pruning on the incumbent and forward-checking top cells whose
//! label budget is exhausted.
//!
//! Independently of the grid search, every single vertex star is admissible
//! once the search can start, so the open vertex stars of the Freudenthal
//! triangulation of the grid are an admissible cover. Each point lies in the
//! stars of the vertices of its carrier simplex, so that cover has `ord` at
//! most the dimension of the complex. Reports carry both bounds.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::admissible::{Admissibility, DiameterAdmissibility, MemberAdmissibility};
use super::complex::CellComplex;
use super::cover::{CellMap, Cover, FiberModel, JoinCover};
use crate::error::{Error, Result};

const UNSET: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Search nodes allowed in total; past it the incumbent is reported as an
    /// upper bound with `grid_exact = false`.
    pub node_budget: u64,
    /// Run the search even when the lower bound already meets the
    /// triangulation bound.
    pub search_when_settled: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { node_budget: 2_000_000, search_when_settled: true }
    }
}

/// The vertex groups `S_i`; the witness cover is `{star(S_i)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub groups: Vec<Vec<usize>>,
}

impl Witness {
    pub fn cover(&self, complex: Arc<CellComplex>) -> Result<Cover> {
        let members = self.groups.iter().map(|g| complex.open_hull(g.iter().copied())).collect();
        Cover::new(complex, members)
    }

    /// Group index of every vertex of the layout, or an error if the groups do
    /// not partition the vertices.
    pub fn labels(&self, layout: &Layout) -> Result<Vec<u32>> {
        let mut labels = vec![UNSET; layout.verts.len()];
        for (g, group) in self.groups.iter().enumerate() {
            for &v in group {
                let i = layout.vertex_index(v).ok_or_else(|| Error::InvalidModel(format!("cell {v} is not a vertex")))?;
                if labels[i] != UNSET {
                    return Err(Error::InvalidModel(format!("vertex {v} is in two groups")));
                }
                labels[i] = g as u32;
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == UNSET) {
            return Err(Error::InvalidModel(format!("vertex {} is in no group", layout.verts[i])));
        }
        Ok(labels)
    }
}

/// Bracket `[lower, upper]` for the topological value. `grid` is the best
/// `ord` among star witnesses at this grid and `grid_exact` says it is the
/// minimum there; `triangulated` says `upper` comes from the triangulation
/// cover rather than from `witness`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DReport {
    pub lower: usize,
    pub upper: usize,
    pub grid: usize,
    pub grid_exact: bool,
    pub triangulated: bool,
    pub nodes: u64,
    pub resolution: Option<u32>,
    pub witness: Witness,
}

impl DReport {
    /// Lower and upper bounds agree.
    pub fn settled(&self) -> bool {
        self.lower == self.upper
    }
}

/// Vertices, top cells and their incidences.
pub struct Layout {
    verts: Vec<usize>,
    vindex: Vec<u32>,
    tops: Vec<Vec<u32>>,
    vtops: Vec<Vec<u32>>,
}

impl Layout {
    pub fn new(complex: &CellComplex) -> Self {
        let verts = complex.vertices();
        let mut vindex = vec![UNSET; complex.len()];
        for (i, &v) in verts.iter().enumerate() {
            vindex[v] = i as u32;
        }
        let mut vtops = vec![Vec::new(); verts.len()];
        let tops: Vec<Vec<u32>> = complex
            .top_cells()
            .into_iter()
            .enumerate()
            .map(|(t, c)| {
                let vs: Vec<u32> = complex.closure_vertices(c).into_iter().map(|v| vindex[v]).collect();
                for &v in &vs {
                    vtops[v as usize].push(t as u32);
                }
                vs
            })
            .collect();
        Layout { verts, vindex, tops, vtops }
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts
    }

    pub fn vertex_index(&self, cell: usize) -> Option<usize> {
        self.vindex.get(cell).filter(|&&i| i != UNSET).map(|&i| i as usize)
    }

    /// `ord` of the witness given by a labeling.
    pub fn ord(&self, labels: &[u32]) -> usize {
        self.ord_on(labels, 0..self.tops.len())
    }

    fn ord_on(&self, labels: &[u32], tops: impl IntoIterator<Item = usize>) -> usize {
        let mut seen = Vec::new();
        tops.into_iter()
            .map(|t| {
                seen.clear();
                for &v in &self.tops[t] {
                    let l = labels[v as usize];
                    if !seen.contains(&l) {
                        seen.push(l);
                    }
                }
                seen.len()
            })
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.verts.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.tops {
            for w in t.windows(2) {
                let (a, b) = (find(&mut parent, w[0] as usize), find(&mut parent, w[1] as usize));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut comps: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            comps.entry(r).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = comps.into_values().collect();
        out.sort();
        out
    }
}

struct Search<'a, A: Admissibility> {
    adm: &'a A,
    states: Vec<A::State>,
    vtops: Vec<Vec<u32>>,
    tverts: Vec<Vec<u32>>,
    label: Vec<u32>,
    groups: Vec<A::State>,
    top_labels: Vec<Vec<(u32, u32)>>,
    incumbent: usize,
    best: Vec<u32>,
    stop_at: usize,
    nodes: u64,
    budget: u64,
    exhausted: bool,
    done: bool,
}

impl<A: Admissibility> Search<'_, A> {
    fn run(&mut self) {
        if self.incumbent > self.stop_at {
            self.dfs(0, 0);
        }
    }

    fn dfs(&mut self, i: usize, max_distinct: usize) {
        if i == self.label.len() {
            self.incumbent = max_distinct.saturating_sub(1);
            self.best.clone_from(&self.label);
            if self.incumbent <= self.stop_at {
                self.done = true;
            }
            return;
        }
        let ng = self.groups.len() as u32;
        let mut cands: Vec<u32> = Vec::new();
        for &t in &self.vtops[i] {
            for &(l, _) in &self.top_labels[t as usize] {
                if !cands.contains(&l) {
                    cands.push(l);
                }
            }
        }
        for l in 0..ng {
            if !cands.contains(&l) {
                cands.push(l);
            }
        }
        cands.push(ng);

        for l in cands {
            self.nodes += 1;
            if self.nodes > self.budget {
                self.exhausted = true;
                return;
            }
            let merged = if l == ng {
                self.states[i].clone()
            } else {
                match self.adm.merge(&self.groups[l as usize], &self.states[i]) {
                    Some(s) => s,
                    None => continue,
                }
            };
            let mut new_max = max_distinct;
            let mut ok = true;
            for &t in &self.vtops[i] {
                let tl = &self.top_labels[t as usize];
                let d = tl.len() + usize::from(!tl.iter().any(|&(x, _)| x == l));
                if d > self.incumbent {
                    ok = false;
                    break;
                }
                new_max = new_max.max(d);
            }
            if !ok {
                continue;
            }

            self.label[i] = l;
            let saved = if l == ng {
                self.groups.push(merged);
                None
            } else {
                Some(std::mem::replace(&mut self.groups[l as usize], merged))
            };
            for k in 0..self.vtops[i].len() {
                let t = self.vtops[i][k] as usize;
                match self.top_labels[t].iter_mut().find(|(x, _)| *x == l) {
                    Some(e) => e.1 += 1,
                    None => self.top_labels[t].push((l, 1)),
                }
            }

            if self.forward_ok(i) {
                self.dfs(i + 1, new_max);
            }

            for k in 0..self.vtops[i].len() {
                let t = self.vtops[i][k] as usize;
                let pos = self.top_labels[t].iter().position(|(x, _)| *x == l).expect("label present");
                self.top_labels[t][pos].1 -= 1;
                if self.top_labels[t][pos].1 == 0 {
                    self.top_labels[t].swap_remove(pos);
                }
            }
            match saved {
                None => {
                    self.groups.pop();
                }
                Some(s) => self.groups[l as usize] = s,
            }
            self.label[i] = UNSET;
            if self.done || self.exhausted {
                return;
            }
        }
    }

    /// In top cells at their label budget the remaining vertices must join a
    /// label already present there.
    fn forward_ok(&self, i: usize) -> bool {
        for &t in &self.vtops[i] {
            let tl = &self.top_labels[t as usize];
            if tl.len() < self.incumbent {
                continue;
            }
            for &u in &self.tverts[t as usize] {
                let u = u as usize;
                if self.label[u] != UNSET {
                    continue;
                }
                if !tl.iter().any(|&(l, _)| self.adm.merge(&self.groups[l as usize], &self.states[u]).is_some()) {
                    return false;
                }
            }
        }
        true
    }
}

struct Solution {
    upper: usize,
    exact: bool,
    nodes: u64,
    labels: Vec<u32>,
}

fn first_fit<A: Admissibility>(adm: &A, states: &[A::State], vtops: &[Vec<u32>], ntops: usize) -> Vec<u32> {
    let mut labels = vec![UNSET; states.len()];
    let mut groups: Vec<A::State> = Vec::new();
    let mut top_labels: Vec<Vec<u32>> = vec![Vec::new(); ntops];
    for i in 0..states.len() {
        let mut cands: Vec<u32> = Vec::new();
        for &t in &vtops[i] {
            for &l in &top_labels[t as usize] {
                if !cands.contains(&l) {
                    cands.push(l);
                }
            }
        }
        let cost = |l: u32, top_labels: &Vec<Vec<u32>>| {
            vtops[i]
                .iter()
                .map(|&t| {
                    let tl = &top_labels[t as usize];
                    tl.len() + usize::from(!tl.contains(&l))
                })
                .max()
                .unwrap_or(0)
        };
        let mut best: Option<(usize, u32, A::State)> = None;
        for l in cands {
            if let Some(s) = adm.merge(&groups[l as usize], &states[i]) {
                let c = cost(l, &top_labels);
                if best.as_ref().is_none_or(|b| c < b.0) {
                    best = Some((c, l, s));
                }
            }
        }
        let l = match best {
            Some((_, l, s)) => {
                groups[l as usize] = s;
                l
            }
            None => {
                groups.push(states[i].clone());
                groups.len() as u32 - 1
            }
        };
        labels[i] = l;
        for &t in &vtops[i] {
            if !top_labels[t as usize].contains(&l) {
                top_labels[t as usize].push(l);
            }
        }
    }
    labels
}

/// Validates `labels` restricted to `comp` and returns its ord there.
fn seed_ord<A: Admissibility>(
    adm: &A,
    states: &[A::State],
    comp: &[usize],
    labels: &[u32],
    layout: &Layout,
    comp_tops: &[usize],
) -> Option<usize> {
    let mut groups: HashMap<u32, A::State> = HashMap::new();
    for &v in comp {
        let l = labels[v];
        let s = match groups.get(&l) {
            Some(g) => adm.merge(g, &states[v])?,
            None => states[v].clone(),
        };
        groups.insert(l, s);
    }
    Some(layout.ord_on(labels, comp_tops.iter().copied()))
}

/// Minimum of `ord` over admissible witness labelings.
pub fn minimize<A: Admissibility>(
    complex: &CellComplex,
    adm: &A,
    lower: usize,
    opts: &SolveOptions,
) -> Result<(Layout, usize, bool, u64, Vec<u32>)> {
    let layout = Layout::new(complex);
    let states: Vec<Option<A::State>> = layout.verts.par_iter().map(|&v| adm.vertex(v)).collect();
    if let Some(i) = states.iter().position(Option::is_none) {
        return Err(Error::ResolutionTooCoarse {
            resolution: complex.resolution().unwrap_or(0),
            vertex: layout.verts[i],
        });
    }
    let states: Vec<A::State> = states.into_iter().map(|s| s.expect("checked")).collect();
    let mut opts = opts.clone();
    if !opts.search_when_settled && lower >= complex.dimension() {
        opts.node_budget = 0;
    }
    let sol = solve_components(&layout, adm, &states, lower, &opts);
    Ok((layout, sol.upper, sol.exact, sol.nodes, sol.labels))
}

fn solve_components<A: Admissibility>(
    layout: &Layout,
    adm: &A,
    states: &[A::State],
    lower: usize,
    opts: &SolveOptions,
) -> Solution {
    let comps = layout.components();
    let mut comp_of = vec![0usize; layout.verts.len()];
    for (c, vs) in comps.iter().enumerate() {
        for &v in vs {
            comp_of[v] = c;
        }
    }
    let mut comp_tops: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
    for (t, vs) in layout.tops.iter().enumerate() {
        if let Some(&v) = vs.first() {
            comp_tops[comp_of[v as usize]].push(t);
        }
    }

    let mut seeds: Vec<Vec<u32>> = Vec::new();
    let canonical: Option<Vec<Vec<u32>>> = states.iter().map(|s| adm.canonical_label(s)).collect();
    if let Some(keys) = canonical {
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        seeds.push(
            keys.into_iter()
                .map(|k| {
                    let next = ids.len() as u32;
                    *ids.entry(k).or_insert(next)
                })
                .collect(),
        );
    }
    seeds.push(first_fit(adm, states, &layout.vtops, layout.tops.len()));

    // best seed per component
    let mut incumbents: Vec<(usize, Vec<u32>)> = comps
        .iter()
        .enumerate()
        .map(|(c, vs)| {
            seeds
                .iter()
                .filter_map(|s| seed_ord(adm, states, vs, s, layout, &comp_tops[c]).map(|o| (o, s)))
                .min_by_key(|(o, _)| *o)
                .map(|(o, s)| (o, vs.iter().map(|&v| s[v]).collect()))
                .expect("first fit is always valid")
        })
        .collect();

    let mut order: Vec<usize> = (0..comps.len()).collect();
    order.sort_by_key(|&c| std::cmp::Reverse(incumbents[c].0));
    let mut floor = lower;
    let mut nodes = 0u64;
    let mut exact = true;
    for c in order {
        let vs = &comps[c];
        if incumbents[c].0 > floor && opts.node_budget > nodes {
            let mut local = HashMap::new();
            for (i, &v) in vs.iter().enumerate() {
                local.insert(v, i as u32);
            }
            let mut tverts = Vec::new();
            let mut top_local = HashMap::new();
            for &t in &comp_tops[c] {
                top_local.insert(t as u32, tverts.len() as u32);
                tverts.push(layout.tops[t].iter().map(|v| local[&(*v as usize)]).collect::<Vec<u32>>());
            }
            let vtops = vs.iter().map(|&v| layout.vtops[v].iter().map(|t| top_local[t]).collect()).collect();
            let mut search = Search {
                adm,
                states: vs.iter().map(|&v| states[v].clone()).collect(),
                vtops,
                top_labels: vec![Vec::new(); tverts.len()],
                tverts,
                label: vec![UNSET; vs.len()],
                groups: Vec::new(),
                incumbent: incumbents[c].0,
                best: incumbents[c].1.clone(),
                stop_at: floor,
                nodes: 0,
                budget: opts.node_budget.saturating_sub(nodes),
                exhausted: false,
                done: false,
            };
            std::thread::scope(|s| {
                std::thread::Builder::new()
                    .stack_size(256 << 20)
                    .spawn_scoped(s, || search.run())
                    .expect("spawn search thread")
                    .join()
                    .expect("search thread panicked");
            });
            nodes += search.nodes.min(search.budget);
            if search.exhausted {
                exact = false;
            }
            incumbents[c] = (search.incumbent, search.best);
        } else if incumbents[c].0 > floor {
            exact = false;
        }
        floor = floor.max(incumbents[c].0);
    }

    // relabel canonically, components kept apart
    let mut labels = vec![UNSET; layout.verts.len()];
    let mut next = 0u32;
    for (c, vs) in comps.iter().enumerate() {
        let mut map: HashMap<u32, u32> = HashMap::new();
        for (i, &v) in vs.iter().enumerate() {
            let l = incumbents[c].1[i];
            labels[v] = *map.entry(l).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
    }
    let upper = incumbents.iter().map(|(o, _)| *o).max().unwrap_or(0);
    Solution { upper, exact, nodes, labels }
}

fn report(complex: &CellComplex, cap: usize, lower: usize, found: (Layout, usize, bool, u64, Vec<u32>)) -> DReport {
    let (layout, grid, grid_exact, nodes, labels) = found;
    let ngroups = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut groups = vec![Vec::new(); ngroups];
    for (i, &l) in labels.iter().enumerate() {
        groups[l as usize].push(layout.verts[i]);
    }
    DReport {
        lower,
        upper: grid.min(cap),
        grid,
        grid_exact,
        triangulated: cap < grid,
        nodes,
        resolution: complex.resolution(),
        witness: Witness { groups },
    }
}

/// `D(U|Y)` at the grid of `u`: minimum `ord(W)` over witness covers `W`
/// with `W ∨ {fibers}` refining `U`.
pub fn d_conditional(u: &JoinCover, fibers: &FiberModel, opts: &SolveOptions) -> Result<DReport> {
    let adm = MemberAdmissibility::new(u, fibers)?;
    let lower = u.lower_bound(fibers);
    let complex = u.complex();
    let cap = u.essential_dimension();
    let mut opts = opts.clone();
    if !opts.search_when_settled && lower >= cap {
        opts.node_budget = 0;
    }
    let rep = report(complex, cap, lower, minimize(complex, &adm, lower, &opts)?);
    debug_assert!(lower <= rep.upper, "lower bound {lower} above witness {}", rep.upper);
    Ok(rep)
}

pub fn d_unconditional(u: &JoinCover, opts: &SolveOptions) -> Result<DReport> {
    d_conditional(u, &FiberModel::single(u.complex().clone()), opts)
}

/// `D(U|Y)` after subdividing the grid of `u` to resolution `r`.
pub fn d_conditional_at(u: &Cover, fibers: &FiberModel, r: u32, opts: &SolveOptions) -> Result<DReport> {
    if fibers.complex() != u.complex() {
        return Err(Error::ComplexMismatch);
    }
    let (u, fibers) = match u.complex().resolution() {
        None => (u.clone(), fibers.clone()),
        Some(base) => {
            if r == 0 || r % base != 0 {
                return Err(Error::ResolutionMismatch { requested: r, base });
            }
            if r == base {
                (u.clone(), fibers.clone())
            } else {
                let fine = u.subdivide(r / base)?;
                let f = fibers.rebuild(fine.complex().clone())?;
                (fine, f)
            }
        }
    };
    d_conditional(&JoinCover::single(Arc::new(u))?, &fibers, opts)
}

pub fn d_unconditional_at(u: &Cover, r: u32, opts: &SolveOptions) -> Result<DReport> {
    d_conditional_at(u, &FiberModel::single(u.complex().clone()), r, opts)
}

/// Minimum `ord` of covers whose members meet every fiber in a set of
/// diameter `< ε` for the weighted observer metric.
pub fn wdim(
    fibers: &FiberModel,
    observers: &[Arc<CellMap>],
    weights: Vec<f64>,
    measured: Vec<usize>,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<DReport> {
    let adm = DiameterAdmissibility::new(fibers, observers, weights, measured, epsilon)?;
    let complex = fibers.complex();
    Ok(report(complex, complex.dimension(), 0, minimize(complex, &adm, 0, opts)?))
}

/// Checks a witness against an admissibility predicate and returns its ord.
pub fn check_witness<A: Admissibility>(complex: &CellComplex, adm: &A, witness: &Witness) -> Result<usize> {
    let layout = Layout::new(complex);
    let labels = witness.labels(&layout)?;
    for (g, group) in witness.groups.iter().enumerate() {
        let mut state: Option<A::State> = None;
        for &v in group {
            let s = adm.vertex(v).ok_or_else(|| Error::InvalidModel(format!("vertex {v} is inadmissible")))?;
            state = Some(match state {
                None => s,
                Some(acc) => adm
                    .merge(&acc, &s)
                    .ok_or_else(|| Error::InvalidModel(format!("group {g} is inadmissible")))?,
            });
        }
    }
    Ok(layout.ord(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Factor;
    use fixedbitset::FixedBitSet;
    use proptest::prelude::*;

    fn opts() -> SolveOptions {
        SolveOptions::default()
    }

    fn interval(r: u32) -> Arc<CellComplex> {
        Arc::new(CellComplex::interval(r))
    }

    fn two_member(r: u32) -> Cover {
        Cover::from_boxes(interval(r), &[vec![(-1.0, 0.6)], vec![(0.4, 2.0)]]).unwrap()
    }

    /// `star(S) ∩ f ⊆ U_j` checked directly on cells.
    fn admissible_direct(w: &FixedBitSet, u: &Cover, fibers: &FiberModel) -> bool {
        let mut by_class: HashMap<u32, Vec<usize>> = HashMap::new();
        for c in w.ones() {
            by_class.entry(fibers.class_of(c)).or_default().push(c);
        }
        by_class.values().all(|cells| u.members().iter().any(|m| cells.iter().all(|&c| m.contains(c))))
    }

    /// Minimum over every partition of the vertices (restricted growth strings).
    fn partition_oracle(u: &Cover, fibers: &FiberModel) -> Option<usize> {
        let complex = u.complex().clone();
        let verts = complex.vertices();
        let n = verts.len();
        assert!(n <= 9);
        let mut best: Option<usize> = None;
        let mut rgs = vec![0usize; n];
        loop {
            let k = rgs.iter().max().map_or(0, |m| m + 1);
            let groups: Vec<Vec<usize>> =
                (0..k).map(|g| (0..n).filter(|&i| rgs[i] == g).map(|i| verts[i]).collect()).collect();
            let w = Witness { groups }.cover(complex.clone()).unwrap();
            if w.members().iter().all(|m| admissible_direct(m, u, fibers)) {
                let o = w.ord();
                if best.is_none_or(|b| o < b) {
                    best = Some(o);
                }
            }
            // next restricted growth string
            let mut i = n;
            loop {
                if i == 1 || n == 0 {
                    return best;
                }
                i -= 1;
                let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
                if rgs[i] <= prefix_max {
                    rgs[i] += 1;
                    for x in rgs.iter_mut().skip(i + 1) {
                        *x = 0;
                    }
                    break;
                }
            }
        }
    }

    /// Minimum over all families of at most `max` open sets, with no
    /// assumption on their shape.
    fn open_family_oracle(u: &Cover, fibers: &FiberModel, max: usize) -> Option<usize> {
        let complex = u.complex().clone();
        let n = complex.len();
        assert!(n <= 12);
        let mut opens: Vec<FixedBitSet> = Vec::new();
        for bits in 1u32..(1 << n) {
            let mut s = FixedBitSet::with_capacity(n);
            for c in 0..n {
                if bits >> c & 1 == 1 {
                    s.insert(c);
                }
            }
            if complex.open_violation(&s).is_none() && admissible_direct(&s, u, fibers) {
                opens.push(s);
            }
        }
        let mut best: Option<usize> = None;
        let mut pick: Vec<usize> = Vec::new();
        fn go(
            start: usize,
            opens: &[FixedBitSet],
            pick: &mut Vec<usize>,
            max: usize,
            n: usize,
            complex: &Arc<CellComplex>,
            best: &mut Option<usize>,
        ) {
            if !pick.is_empty() {
                let mut union = FixedBitSet::with_capacity(n);
                pick.iter().for_each(|&i| union.union_with(&opens[i]));
                if union.is_full() {
                    let w = Cover::new(complex.clone(), pick.iter().map(|&i| opens[i].clone()).collect()).unwrap();
                    let o = w.ord();
                    if best.is_none_or(|b| o < b) {
                        *best = Some(o);
                    }
                }
            }
            if pick.len() == max {
                return;
            }
            for i in start..opens.len() {
                pick.push(i);
                go(i + 1, opens, pick, max, n, complex, best);
                pick.pop();
            }
        }
        go(0, &opens, &mut pick, max, n, &complex, &mut best);
        best
    }

    fn solve(u: &Cover, fibers: &FiberModel) -> Result<DReport> {
        d_conditional(&JoinCover::single(Arc::new(u.clone())).unwrap(), fibers, &opts())
    }

    #[test]
    fn interval_cover_has_d_one() {
        for r in [5, 10, 20] {
            let rep = d_unconditional_at(&two_member(5), r, &opts()).unwrap();
            assert_eq!((rep.lower, rep.grid, rep.grid_exact), (1, 1, true), "r = {r}");
        }
        let u = two_member(5);
        assert_eq!(partition_oracle(&u, &FiberModel::single(u.complex().clone())), Some(1));
    }

    #[test]
    fn fibers_that_are_points_give_zero() {
        let u = two_member(10);
        let rep = solve(&u, &FiberModel::identity(u.complex().clone())).unwrap();
        assert_eq!(rep.upper, 0);
        assert!(rep.grid_exact);
    }

    #[test]
    fn zero_dimensional_complex() {
        let c = Arc::new(CellComplex::new(vec![Factor::points(5)]).unwrap());
        let u = Cover::from_predicate(c.clone(), 2, |j, cell| (cell + j) % 2 == 0 || cell == 4).unwrap();
        let rep = d_unconditional(&JoinCover::single(Arc::new(u)).unwrap(), &opts()).unwrap();
        assert_eq!(rep.upper, 0);
    }

    #[test]
    fn projection_of_strips() {
        let sq = Arc::new(CellComplex::cube(2, 5));
        let proj = CellMap::projection(sq.clone(), &[0]).unwrap();
        let base = Cover::from_boxes(proj.target().clone(), &[vec![(-1.0, 0.6)], vec![(0.4, 2.0)]]).unwrap();
        let u = base.pullback(&proj).unwrap();
        let rep = solve(&u, &FiberModel::projection(sq.clone(), vec![0]).unwrap()).unwrap();
        assert_eq!(rep.upper, 0);
        // against the other projection the strips are transverse to the fibers
        let rep = solve(&u, &FiberModel::projection(sq.clone(), vec![1]).unwrap()).unwrap();
        assert_eq!((rep.lower, rep.upper), (1, 1));
        let rep = d_unconditional(&JoinCover::single(Arc::new(u)).unwrap(), &opts()).unwrap();
        assert_eq!(rep.upper, 1);
    }

    #[test]
    fn product_cover_of_cube_has_full_dimension() {
        for n in 1..=3 {
            let c = Arc::new(CellComplex::cube(n, 2));
            let base = Arc::new(Cover::from_boxes(interval(2), &[vec![(-1.0, 1.0)], vec![(0.0, 2.0)]]).unwrap());
            let parts =
                (0..n).map(|k| (base.clone(), Arc::new(CellMap::projection(c.clone(), &[k]).unwrap()))).collect();
            let u = JoinCover::new(c, parts).unwrap();
            let rep = d_unconditional(&u, &opts()).unwrap();
            assert_eq!((rep.lower, rep.grid, rep.grid_exact), (n, n, true), "n = {n}");
            assert_eq!(u.ord(), (1 << n) - 1);
        }
    }

    #[test]
    fn triangulation_settles_the_four_cube() {
        let n = 4;
        let c = Arc::new(CellComplex::cube(n, 2));
        let base = Arc::new(Cover::from_boxes(interval(2), &[vec![(-1.0, 1.0)], vec![(0.0, 2.0)]]).unwrap());
        let parts = (0..n).map(|k| (base.clone(), Arc::new(CellMap::projection(c.clone(), &[k]).unwrap()))).collect();
        let u = JoinCover::new(c, parts).unwrap();
        let o = SolveOptions { node_budget: 10_000, search_when_settled: false };
        let rep = d_unconditional(&u, &o).unwrap();
        assert_eq!((rep.lower, rep.upper), (4, 4));
        assert!(rep.settled() && rep.triangulated && rep.grid > 4);
        assert_eq!(rep.nodes, 0);
    }

    #[test]
    fn inessential_factors_cap_the_upper_bound() {
        let c = Arc::new(CellComplex::cube(3, 2));
        let base = Arc::new(Cover::from_boxes(interval(2), &[vec![(-1.0, 1.0)], vec![(0.0, 2.0)]]).unwrap());
        let parts = (0..2).map(|k| (base.clone(), Arc::new(CellMap::projection(c.clone(), &[k]).unwrap()))).collect();
        let u = JoinCover::new(c.clone(), parts).unwrap();
        assert_eq!(u.essential_dimension(), 2);
        let blind = SolveOptions { node_budget: 0, search_when_settled: false };
        let rep = d_unconditional(&u, &blind).unwrap();
        assert_eq!((rep.lower, rep.upper, rep.nodes), (2, 2, 0));
        assert_eq!(JoinCover::single(Arc::new(Cover::trivial(c))).unwrap().essential_dimension(), 0);
    }

    #[test]
    fn resolution_must_be_a_multiple() {
        assert!(matches!(
            d_unconditional_at(&two_member(5), 7, &opts()),
            Err(Error::ResolutionMismatch { requested: 7, base: 5 })
        ));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let c = Arc::new(CellComplex::cube(2, 3));
        let u = Cover::from_boxes(
            c.clone(),
            &[
                vec![(-1.0, 0.7), (-1.0, 0.7)],
                vec![(0.3, 2.0), (-1.0, 0.7)],
                vec![(-1.0, 0.7), (0.3, 2.0)],
                vec![(0.3, 2.0), (0.3, 2.0)],
            ],
        )
        .unwrap();
        let tight = SolveOptions { node_budget: 1, ..SolveOptions::default() };
        let rep = d_conditional(&JoinCover::single(Arc::new(u)).unwrap(), &FiberModel::single(c), &tight).unwrap();
        assert!(rep.grid >= 2);
        assert!(!rep.grid_exact || rep.grid == rep.lower);
    }

    #[test]
    fn witness_checks_out() {
        let u = two_member(10);
        let j = JoinCover::single(Arc::new(u.clone())).unwrap();
        let f = FiberModel::single(u.complex().clone());
        let rep = d_conditional(&j, &f, &opts()).unwrap();
        let adm = MemberAdmissibility::new(&j, &f).unwrap();
        assert_eq!(check_witness(u.complex(), &adm, &rep.witness).unwrap(), rep.grid);
        let w = rep.witness.cover(u.complex().clone()).unwrap();
        assert!(w.refines(&u).unwrap());
        assert_eq!(w.ord(), rep.grid);
    }

    #[test]
    fn wdim_of_interval_and_circle() {
        // identity observer on [0,1]: a single set of diameter < 1 cannot cover
        let c = interval(8);
        let id = vec![Arc::new(CellMap::identity(c.clone()))];
        let f = FiberModel::single(c.clone());
        assert_eq!(wdim(&f, &id, vec![1.0], vec![0], 0.3, &opts()).unwrap().grid, 1);
        assert_eq!(wdim(&f, &id, vec![1.0], vec![0], 1.5, &opts()).unwrap().grid, 0);
        let circ = Arc::new(CellComplex::new(vec![Factor::Circle { cells: 8 }]).unwrap());
        let id = vec![Arc::new(CellMap::identity(circ.clone()))];
        let f = FiberModel::single(circ);
        assert_eq!(wdim(&f, &id, vec![1.0], vec![0], 0.3, &opts()).unwrap().grid, 1);
        // the whole circle has diameter 1/2
        assert_eq!(wdim(&f, &id, vec![1.0], vec![0], 0.6, &opts()).unwrap().grid, 0);
        assert!(matches!(wdim(&f, &id, vec![1.0], vec![0], 0.1, &opts()), Err(Error::ResolutionTooCoarse { .. })));
    }

    fn small_complex(kind: u8) -> Arc<CellComplex> {
        Arc::new(match kind % 4 {
            0 => CellComplex::interval(4),
            1 => CellComplex::cube(2, 2),
            2 => CellComplex::new(vec![Factor::points(3), Factor::Interval { cells: 2 }]).unwrap(),
            _ => CellComplex::new(vec![Factor::Circle { cells: 4 }]).unwrap(),
        })
    }

    fn random_cover(c: &Arc<CellComplex>, k: usize, seed: &[u8]) -> Cover {
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); k];
        for cell in 0..c.len() {
            let b = seed[cell % seed.len()].wrapping_add((cell as u8).wrapping_mul(37)) as usize;
            let mut mask = b % ((1 << k) - 1) + 1;
            for (j, cs) in cells.iter_mut().enumerate() {
                if mask & 1 == 1 {
                    cs.push(cell);
                }
                mask >>= 1;
                let _ = j;
            }
        }
        let members = cells.into_iter().map(|cs| c.open_hull(cs)).collect();
        Cover::new(c.clone(), members).unwrap()
    }

    fn fiber_model(c: &Arc<CellComplex>, which: u8) -> FiberModel {
        match which % 3 {
            0 => FiberModel::single(c.clone()),
            1 => FiberModel::identity(c.clone()),
            _ => FiberModel::projection(c.clone(), vec![0]).unwrap(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn search_matches_partition_oracle(kind in 0u8..4, k in 2usize..5, seed in prop::collection::vec(any::<u8>(), 1..8), which in 0u8..3) {
            let c = small_complex(kind);
            let u = random_cover(&c, k, &seed);
            let f = fiber_model(&c, which);
            let oracle = partition_oracle(&u, &f);
            match solve(&u, &f) {
                Ok(rep) => {
                    prop_assert!(rep.grid_exact);
                    prop_assert_eq!(Some(rep.grid), oracle);
                    prop_assert!(rep.lower <= rep.upper && rep.upper <= rep.grid);
                    prop_assert!(rep.upper <= c.dimension());
                    let j = JoinCover::single(Arc::new(u.clone())).unwrap();
                    let adm = MemberAdmissibility::new(&j, &f).unwrap();
                    prop_assert_eq!(check_witness(&c, &adm, &rep.witness).unwrap(), rep.grid);
                }
                Err(Error::ResolutionTooCoarse { .. }) => prop_assert_eq!(oracle, None),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn vertex_star_witnesses_lose_nothing(r in 1u32..4, circle in any::<bool>(), k in 2usize..4, seed in prop::collection::vec(any::<u8>(), 1..6)) {
            let c = Arc::new(if circle {
                CellComplex::new(vec![Factor::Circle { cells: r + 1 }]).unwrap()
            } else {
                CellComplex::interval(r)
            });
            prop_assume!(c.len() <= 8);
            let u = random_cover(&c, k, &seed);
            let f = FiberModel::single(c.clone());
            let oracle = open_family_oracle(&u, &f, u.len() + 2);
            match solve(&u, &f) {
                Ok(rep) => prop_assert_eq!(Some(rep.grid), oracle),
                Err(_) => prop_assert_eq!(oracle, None),
            }
        }

        #[test]
        fn conditional_below_unconditional_and_subadditive(kind in 0u8..4, seed in prop::collection::vec(any::<u8>(), 1..8), seed2 in prop::collection::vec(any::<u8>(), 1..8), which in 0u8..3) {
            let c = small_complex(kind);
            let u = random_cover(&c, 3, &seed);
            let v = random_cover(&c, 2, &seed2);
            let f = fiber_model(&c, which);
            let single = FiberModel::single(c.clone());
            if let (Ok(a), Ok(b)) = (solve(&u, &f), solve(&u, &single)) {
                prop_assert!(a.grid <= b.grid && a.upper <= b.upper);
            }
            if let (Ok(du), Ok(dv), Ok(duv)) = (solve(&u, &f), solve(&v, &f), solve(&u.join(&v).unwrap(), &f)) {
                prop_assert!(duv.grid <= du.grid + dv.grid);
                prop_assert!(duv.upper <= du.upper + dv.upper);
                // refinement monotonicity: U ∨ V refines U
                prop_assert!(du.grid <= duv.grid);
            }
        }

        #[test]
        fn finer_grids_never_increase(seed in prop::collection::vec(any::<u8>(), 1..8), k in 2usize..4) {
            let c = interval(2);
            let u = random_cover(&c, k, &seed);
            if let Ok(d2) = d_unconditional_at(&u, 2, &opts()) {
                let d4 = d_unconditional_at(&u, 4, &opts()).unwrap();
                let d8 = d_unconditional_at(&u, 8, &opts()).unwrap();
                prop_assert!(d4.grid <= d2.grid && d8.grid <= d4.grid);
            }
        }
    }
}
