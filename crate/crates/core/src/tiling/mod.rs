//! ε-disjoint families and quasi-tilings of finite windows.
//!
//! Disjointness is certified by a flow: every translate `F_j c` demands
//! `⌈(1−ε)|F_j c|⌉` private elements and every group element can be handed to
//! at most one translate. The greedy tiler never trusts its own bookkeeping;
//! every tiling it returns carries a certificate produced by the flow.

mod flow;

use std::collections::HashMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub use flow::FlowNetwork;

use crate::error::{Error, Result};
use crate::group::{invariance_defect, FolnerSchedule, GroupElement, Window};
use crate::rational::{ceil, Rational};

fn one() -> Rational {
    Ratio::from_integer(1)
}

fn zero() -> Rational {
    Ratio::from_integer(0)
}

/// Required private part of a translate of size `n`.
pub fn demand(n: usize, epsilon: Rational) -> i64 {
    ceil((one() - epsilon) * Ratio::from_integer(n as i64)).max(0)
}

/// Tile shapes `F_1..F_m` with `e ∈ F_j ∈ B(K, ε)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileFamily {
    pub tiles: Vec<Window>,
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: Rational,
    pub k: Window,
}

impl TileFamily {
    pub fn new(tiles: Vec<Window>, epsilon: Rational, k: Window) -> Result<Self> {
        if epsilon <= zero() || epsilon >= one() {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        if tiles.is_empty() {
            return Err(Error::InvalidParameter("tile family is empty".into()));
        }
        for t in &tiles {
            let e = GroupElement::identity(t.dim());
            if !t.contains(&e) {
                return Err(Error::InvalidParameter(format!("tile {t:?} misses the identity")));
            }
            let defect = invariance_defect(t, &k)?;
            if defect > epsilon {
                return Err(Error::InvalidParameter(format!(
                    "tile {t:?} has defect {defect} > {epsilon} against K"
                )));
            }
        }
        Ok(TileFamily { tiles, epsilon, k })
    }

    /// The schedule windows that already lie in `B(K, ε)`.
    pub fn from_schedule(schedule: &FolnerSchedule, epsilon: Rational, k: Window) -> Result<Self> {
        let mut tiles = Vec::new();
        for w in &schedule.windows {
            if invariance_defect(w, &k)? <= epsilon {
                tiles.push(w.clone());
            }
        }
        Self::new(tiles, epsilon, k)
    }
}

/// Private sub-translates `F'_{j,c}` witnessing ε-disjointness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessCertificate {
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: Rational,
    pub translates: Vec<Window>,
    pub private_parts: Vec<Window>,
}

impl DisjointnessCertificate {
    pub fn verify(&self) -> std::result::Result<(), String> {
        if self.translates.len() != self.private_parts.len() {
            return Err("certificate length mismatch".into());
        }
        let mut owner: HashMap<&GroupElement, usize> = HashMap::new();
        for (i, (t, p)) in self.translates.iter().zip(&self.private_parts).enumerate() {
            if !p.is_subset(t) {
                return Err(format!("private part {i} leaves its translate"));
            }
            let need = demand(t.len(), self.epsilon);
            if (p.len() as i64) < need {
                return Err(format!("private part {i} has {} < {need} elements", p.len()));
            }
            for g in p.iter() {
                if let Some(j) = owner.insert(g, i) {
                    return Err(format!("element {g:?} shared by parts {j} and {i}"));
                }
            }
        }
        Ok(())
    }
}

/// Hall violator extracted from a minimum cut: the listed translates jointly
/// demand more elements than their union holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityWitness {
    pub translates: Vec<usize>,
    pub elements: Window,
    pub total_demand: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Disjointness {
    Certified(DisjointnessCertificate),
    Infeasible(InfeasibilityWitness),
}

/// Decides ε-disjointness of `translates` exactly by max-flow.
pub fn certify_eps_disjoint(translates: &[Window], epsilon: Rational) -> Result<Disjointness> {
    if epsilon < zero() || epsilon >= one() {
        return Err(Error::InvalidParameter(format!("epsilon must lie in [0,1), got {epsilon}")));
    }
    let dim = translates.first().map_or(1, |t| t.dim());
    if let Some(t) = translates.iter().find(|t| t.dim() != dim && !t.is_empty()) {
        return Err(Error::DimensionMismatch { expected: dim, found: t.dim() });
    }
    let mut index: HashMap<&GroupElement, usize> = HashMap::new();
    let mut elems: Vec<&GroupElement> = Vec::new();
    for t in translates {
        for g in t.iter() {
            index.entry(g).or_insert_with(|| {
                elems.push(g);
                elems.len() - 1
            });
        }
    }
    let m = translates.len();
    let source = m + elems.len();
    let sink = source + 1;
    let mut net = FlowNetwork::new(sink + 1);
    let demands: Vec<i64> = translates.iter().map(|t| demand(t.len(), epsilon)).collect();
    let mut middle: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    for (j, t) in translates.iter().enumerate() {
        net.add_edge(source, j, demands[j]);
        for g in t.iter() {
            let e = index[g];
            let idx = net.add_edge(j, m + e, i64::from(u32::MAX));
            middle[j].push((idx, e));
        }
    }
    for e in 0..elems.len() {
        net.add_edge(m + e, sink, 1);
    }
    let total: i64 = demands.iter().sum();
    let flow = net.max_flow(source, sink);
    if flow == total {
        let cap = i64::from(u32::MAX);
        let private_parts = (0..m)
            .map(|j| {
                let used = middle[j]
                    .iter()
                    .filter(|&&(idx, _)| net.residual(j, idx) < cap)
                    .map(|&(_, e)| elems[e].clone());
                Window::new(dim, used)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Disjointness::Certified(DisjointnessCertificate {
            epsilon,
            translates: translates.to_vec(),
            private_parts,
        }))
    } else {
        let side = net.source_side(source);
        let chosen: Vec<usize> = (0..m).filter(|&j| side[j]).collect();
        let mut elements = Window::empty(dim);
        for &j in &chosen {
            elements = elements.union(&translates[j]);
        }
        let total_demand = chosen.iter().map(|&j| demands[j]).sum();
        Ok(Disjointness::Infeasible(InfeasibilityWitness { translates: chosen, elements, total_demand }))
    }
}

/// Tiles `F_j` placed at centers `D_j` inside a target window `A`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiTiling {
    pub tiles: Vec<Window>,
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: Rational,
    pub target: Window,
    pub centers: Vec<Vec<GroupElement>>,
    pub certificate: DisjointnessCertificate,
    pub uncovered: Window,
    #[serde(with = "crate::rational::serde_str")]
    pub uncovered_fraction: Rational,
}

impl QuasiTiling {
    /// All translates `F_j c` in tile-major, center-lexicographic order.
    pub fn translates(&self) -> Vec<(usize, GroupElement, Window)> {
        let mut out = Vec::new();
        for (j, cs) in self.centers.iter().enumerate() {
            for c in cs {
                out.push((j, c.clone(), self.tiles[j].translate(c)));
            }
        }
        out
    }

    pub fn covered(&self) -> Window {
        self.translates().iter().fold(Window::empty(self.target.dim()), |acc, (_, _, t)| acc.union(t))
    }

    /// `Σ_j |F_j| |D_j|`.
    pub fn tiled_mass(&self) -> i64 {
        self.tiles.iter().zip(&self.centers).map(|(t, c)| (t.len() * c.len()) as i64).sum()
    }

    /// Re-checks every invariant from scratch: containment, the certificate,
    /// the uncovered set and fraction, the fraction bound and the density bound
    /// `Σ|F_j||D_j| ≤ |A|/(1−ε)`.
    pub fn verify(&self) -> std::result::Result<(), String> {
        if self.target.is_empty() {
            return Err("empty target".into());
        }
        let translates = self.translates();
        for (j, c, t) in &translates {
            if !t.is_subset(&self.target) {
                return Err(format!("translate of tile {j} at {c:?} leaves the target"));
            }
        }
        let listed: Vec<Window> = translates.iter().map(|(_, _, t)| t.clone()).collect();
        if listed != self.certificate.translates || self.certificate.epsilon != self.epsilon {
            return Err("certificate does not match the translates".into());
        }
        self.certificate.verify()?;
        let uncovered = self.target.difference(&self.covered());
        if uncovered != self.uncovered {
            return Err("recorded uncovered set is wrong".into());
        }
        let fraction = Ratio::new(uncovered.len() as i64, self.target.len() as i64);
        if fraction != self.uncovered_fraction {
            return Err("recorded uncovered fraction is wrong".into());
        }
        if fraction > self.epsilon {
            return Err(format!("uncovered fraction {fraction} exceeds {}", self.epsilon));
        }
        if self.epsilon < one() {
            let bound = Ratio::from_integer(self.target.len() as i64) / (one() - self.epsilon);
            if Ratio::from_integer(self.tiled_mass()) > bound {
                return Err(format!("density bound fails: {} > {bound}", self.tiled_mass()));
            }
        }
        Ok(())
    }
}

/// Greedy failed to reach the requested coverage; the partial placement and its
/// fraction are reported instead of an error.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingFailure {
    #[serde(with = "crate::rational::serde_str")]
    pub uncovered_fraction: Rational,
    pub partial: QuasiTiling,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TilingOutcome {
    Tiled(QuasiTiling),
    Failed(TilingFailure),
}

impl TilingOutcome {
    pub fn tiling(&self) -> Option<&QuasiTiling> {
        match self {
            TilingOutcome::Tiled(q) => Some(q),
            TilingOutcome::Failed(_) => None,
        }
    }

    pub fn uncovered_fraction(&self) -> Rational {
        match self {
            TilingOutcome::Tiled(q) => q.uncovered_fraction,
            TilingOutcome::Failed(f) => f.uncovered_fraction,
        }
    }
}

/// Dense occupancy grid over the bounding box of a window.
struct Grid {
    lo: Vec<i64>,
    sides: Vec<i64>,
    inside: Vec<bool>,
    covered: Vec<bool>,
}

impl Grid {
    fn new(a: &Window) -> Self {
        let d = a.dim();
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for g in a.iter() {
            for (i, &c) in g.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        let sides: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let n = sides.iter().product::<i64>() as usize;
        let mut grid = Grid { lo, sides, inside: vec![false; n], covered: vec![false; n] };
        for g in a.iter() {
            let i = grid.index(g.coords()).expect("inside bounding box");
            grid.inside[i] = true;
        }
        grid
    }

    fn index(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ((&c, &l), &s) in p.iter().zip(&self.lo).zip(&self.sides) {
            let off = c - l;
            if off < 0 || off >= s {
                return None;
            }
            idx = idx * s as usize + off as usize;
        }
        Some(idx)
    }
}

/// Places tiles largest-first, scanning centers lexicographically, accepting a
/// translate when it stays inside `A` and overlaps the union placed so far in
/// at most `max_overlap·|F_j|` elements.
fn greedy_place(tiles: &[Window], a: &Window, max_overlap: Rational) -> Vec<Vec<GroupElement>> {
    let mut grid = Grid::new(a);
    let mut order: Vec<usize> = (0..tiles.len()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(tiles[j].len()));
    let mut centers = vec![Vec::new(); tiles.len()];
    for j in order {
        let tile = &tiles[j];
        let Some(anchor) = tile.iter().next() else { continue };
        let allowed = (max_overlap * Ratio::from_integer(tile.len() as i64)).floor().to_integer();
        for p in a.iter() {
            let c: Vec<i64> = p.coords().iter().zip(anchor.coords()).map(|(x, f)| x - f).collect();
            let mut cells = Vec::with_capacity(tile.len());
            let mut overlap = 0i64;
            let mut fits = true;
            for f in tile.iter() {
                let q: Vec<i64> = f.coords().iter().zip(&c).map(|(x, y)| x + y).collect();
                match grid.index(&q) {
                    Some(i) if grid.inside[i] => {
                        if grid.covered[i] {
                            overlap += 1;
                            if overlap > allowed {
                                fits = false;
                                break;
                            }
                        }
                        cells.push(i);
                    }
                    _ => {
                        fits = false;
                        break;
                    }
                }
            }
            if fits {
                for i in cells {
                    grid.covered[i] = true;
                }
                centers[j].push(GroupElement::new(c).expect("d >= 1"));
            }
        }
    }
    centers
}

fn assemble(tiles: &[Window], a: &Window, epsilon: Rational, centers: Vec<Vec<GroupElement>>) -> Result<QuasiTiling> {
    let mut translates = Vec::new();
    for (j, cs) in centers.iter().enumerate() {
        for c in cs {
            translates.push(tiles[j].translate(c));
        }
    }
    let certificate = match certify_eps_disjoint(&translates, epsilon)? {
        Disjointness::Certified(c) => c,
        Disjointness::Infeasible(w) => {
            return Err(Error::InvalidModel(format!("greedy placement not ε-disjoint: {w:?}")))
        }
    };
    let covered = translates.iter().fold(Window::empty(a.dim()), |acc, t| acc.union(t));
    let uncovered = a.difference(&covered);
    let uncovered_fraction = Ratio::new(uncovered.len() as i64, a.len() as i64);
    Ok(QuasiTiling {
        tiles: tiles.to_vec(),
        epsilon,
        target: a.clone(),
        centers,
        certificate,
        uncovered,
        uncovered_fraction,
    })
}

/// Greedy ε-quasi-tiling of `a` by the family's tiles.
pub fn greedy_quasi_tile(family: &TileFamily, a: &Window) -> Result<TilingOutcome> {
    if a.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let centers = greedy_place(&family.tiles, a, family.epsilon);
    let q = assemble(&family.tiles, a, family.epsilon, centers)?;
    if q.uncovered_fraction <= family.epsilon {
        Ok(TilingOutcome::Tiled(q))
    } else {
        Ok(TilingOutcome::Failed(TilingFailure { uncovered_fraction: q.uncovered_fraction, partial: q }))
    }
}

/// Disjoint tiling of box `a` by box `t`: an exact partition when the sides
/// divide, otherwise the disjoint lexicographic greedy. The returned tiling's
/// `epsilon` is its uncovered fraction (disjoint translates are ε-disjoint for
/// every ε).
pub fn exact_box_tiling(t: &Window, a: &Window) -> Result<QuasiTiling> {
    let (Some((t_lo, t_sides)), Some((a_lo, a_sides))) = (t.as_box(), a.as_box()) else {
        return Err(Error::InvalidParameter("exact_box_tiling needs two boxes".into()));
    };
    if t.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: t.dim() });
    }
    let divides = t_sides.iter().zip(&a_sides).all(|(ts, as_)| as_ % ts == 0);
    let centers = if divides {
        let counts: Vec<i64> = t_sides.iter().zip(&a_sides).map(|(ts, as_)| as_ / ts).collect();
        let grid = Window::box_with(&vec![0; a.dim()], &counts);
        grid.iter()
            .map(|k| {
                let c = k
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(i, &ki)| a_lo[i] - t_lo[i] + ki * t_sides[i])
                    .collect();
                GroupElement::new(c)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        greedy_place(std::slice::from_ref(t), a, zero()).remove(0)
    };
    let covered = centers.len() * t.len();
    let fraction = Ratio::new((a.len() - covered) as i64, a.len() as i64);
    let epsilon = if fraction < one() { fraction } else { zero() };
    assemble(std::slice::from_ref(t), a, epsilon, vec![centers])
}

/// First schedule window `A` (in order) for which greedy tiles `A` with
/// fraction at most ε: the empirical stand-in for the existential `K'`.
pub fn smallest_tileable_stage(family: &TileFamily, schedule: &FolnerSchedule) -> Result<Option<usize>> {
    for (i, a) in schedule.windows.iter().enumerate() {
        if let TilingOutcome::Tiled(_) = greedy_quasi_tile(family, a)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}
