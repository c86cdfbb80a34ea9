//! Open covers as families of up-sets of cells, cellular maps, fiber models,
//! and covers presented as joins of pullbacks.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::complex::{CellComplex, Factor};
use crate::error::{Error, Result};

fn same(a: &Arc<CellComplex>, b: &Arc<CellComplex>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A finite open cover. Every member is an up-set of cells, i.e. a union of
/// open cells closed under taking cofaces; such sets are exactly the open
/// unions of open cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    complex: Arc<CellComplex>,
    members: Vec<FixedBitSet>,
}

impl Cover {
    pub fn new(complex: Arc<CellComplex>, members: Vec<FixedBitSet>) -> Result<Self> {
        let n = complex.len();
        let mut kept = Vec::with_capacity(members.len());
        let mut union = FixedBitSet::with_capacity(n);
        for mut m in members {
            m.grow(n);
            if m.len() > n {
                return Err(Error::ComplexMismatch);
            }
            if let Some(cell) = complex.open_violation(&m) {
                return Err(Error::NotOpen { cell });
            }
            if m.is_clear() {
                continue;
            }
            union.union_with(&m);
            kept.push(m);
        }
        let uncovered = n - union.count_ones(..);
        if uncovered > 0 {
            return Err(Error::NotACover { uncovered });
        }
        Ok(Cover { complex, members: kept })
    }

    /// Members given by a predicate on `(member, cell)`.
    pub fn from_predicate(
        complex: Arc<CellComplex>,
        count: usize,
        mut inside: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let members = (0..count)
            .map(|j| {
                let mut m = FixedBitSet::with_capacity(complex.len());
                for c in 0..complex.len() {
                    if inside(j, c) {
                        m.insert(c);
                    }
                }
                m
            })
            .collect();
        Self::new(complex, members)
    }

    /// Members that are products of open intervals `(lo, hi)`, one per factor,
    /// each replaced by the largest open cell union inside it.
    /// Interval bounds outside `[0,1]` make the member reach the endpoint;
    /// circle bounds are read modulo 1; point factors use their positions
    /// (or their index when no positions are given).
    pub fn from_boxes(complex: Arc<CellComplex>, boxes: &[Vec<(f64, f64)>]) -> Result<Self> {
        let members = Self::box_members(&complex, boxes)?;
        Self::new(complex, members)
    }

    /// The open sets of [`Cover::from_boxes`], without the covering check.
    pub fn box_members(complex: &CellComplex, boxes: &[Vec<(f64, f64)>]) -> Result<Vec<FixedBitSet>> {
        if let Some(b) = boxes.iter().find(|b| b.len() != complex.factors().len()) {
            return Err(Error::DimensionMismatch { expected: complex.factors().len(), found: b.len() });
        }
        Ok(boxes
            .iter()
            .map(|b| {
                let mut m = FixedBitSet::with_capacity(complex.len());
                for cell in 0..complex.len() {
                    let inside = complex.factors().iter().enumerate().all(|(k, f)| {
                        f.star(complex.code(cell, k)).into_iter().all(|c| code_in_interval(f, c, b[k]))
                    });
                    if inside {
                        m.insert(cell);
                    }
                }
                m
            })
            .collect())
    }

    /// `{X}`.
    pub fn trivial(complex: Arc<CellComplex>) -> Self {
        let mut m = FixedBitSet::with_capacity(complex.len());
        m.insert_range(..);
        Cover { complex, members: vec![m] }
    }

    /// Open stars of the vertices: the finest cover carried by the grid.
    pub fn vertex_stars(complex: Arc<CellComplex>) -> Self {
        let members = complex.vertices().into_iter().map(|v| complex.open_hull([v])).collect();
        Self::new(complex, members).expect("vertex stars cover")
    }

    pub fn complex(&self) -> &Arc<CellComplex> {
        &self.complex
    }

    pub fn members(&self) -> &[FixedBitSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of members containing `cell`, minus one, maximized over cells.
    /// Counts only grow along cofaces, so top cells suffice.
    pub fn ord(&self) -> usize {
        self.complex
            .top_cells()
            .into_iter()
            .map(|c| self.members.iter().filter(|m| m.contains(c)).count())
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Pairwise intersections, empty and repeated members dropped.
    pub fn join(&self, other: &Cover) -> Result<Cover> {
        if !same(&self.complex, &other.complex) {
            return Err(Error::ComplexMismatch);
        }
        let mut members: Vec<FixedBitSet> = Vec::new();
        for a in &self.members {
            for b in &other.members {
                let mut m = a.clone();
                m.intersect_with(b);
                if !m.is_clear() && !members.contains(&m) {
                    members.push(m);
                }
            }
        }
        Ok(Cover { complex: self.complex.clone(), members })
    }

    /// Every member of `self` lies in some member of `other`.
    pub fn refines(&self, other: &Cover) -> Result<bool> {
        if !same(&self.complex, &other.complex) {
            return Err(Error::ComplexMismatch);
        }
        Ok(self.members.iter().all(|a| other.members.iter().any(|b| a.is_subset(b))))
    }

    /// `map^{-1}(self)` on the source complex of `map`.
    pub fn pullback(&self, map: &CellMap) -> Result<Cover> {
        if !same(&self.complex, &map.target) {
            return Err(Error::ComplexMismatch);
        }
        let members = self
            .members
            .iter()
            .map(|m| {
                let mut p = FixedBitSet::with_capacity(map.source.len());
                for (c, &t) in map.table.iter().enumerate() {
                    if m.contains(t as usize) {
                        p.insert(c);
                    }
                }
                p
            })
            .collect();
        Cover::new(map.source.clone(), members)
    }

    /// The same cover on the complex subdivided by `m`.
    pub fn subdivide(&self, m: u32) -> Result<Cover> {
        let (fine, parent) = self.complex.subdivide(m)?;
        let map = CellMap { source: Arc::new(fine), target: self.complex.clone(), table: parent };
        self.pullback(&map)
    }

    /// Bitmask of the members containing `cell`, in 64-bit words.
    pub fn member_words(&self, cell: usize) -> Vec<u64> {
        let mut w = vec![0u64; self.members.len().div_ceil(64)];
        for (j, m) in self.members.iter().enumerate() {
            if m.contains(cell) {
                w[j / 64] |= 1 << (j % 64);
            }
        }
        w
    }

    pub fn to_index_sets(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|m| m.ones().collect()).collect()
    }

    pub fn lebesgue_face_lower_bound(&self) -> usize {
        let me = Arc::new(self.clone());
        let join = JoinCover::single(me).expect("cover on its own complex");
        join.lebesgue_lower_bound(&FiberModel::single(self.complex.clone()))
    }
}

/// Serialized form: the complex and the member cell sets.
#[derive(Serialize, Deserialize)]
struct CoverRepr {
    complex: CellComplex,
    members: Vec<Vec<usize>>,
}

impl Serialize for Cover {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoverRepr { complex: (*self.complex).clone(), members: self.to_index_sets() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cover {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = CoverRepr::deserialize(d)?;
        let n = r.complex.len();
        let members = r
            .members
            .into_iter()
            .map(|cells| {
                let mut m = FixedBitSet::with_capacity(n);
                for c in cells {
                    if c >= n {
                        return Err(serde::de::Error::custom(format!("cell {c} out of range")));
                    }
                    m.insert(c);
                }
                Ok(m)
            })
            .collect::<std::result::Result<Vec<_>, D::Error>>()?;
        Cover::new(Arc::new(r.complex), members).map_err(serde::de::Error::custom)
    }
}

fn code_in_interval(f: &Factor, code: u32, (lo, hi): (f64, f64)) -> bool {
    let inside = |a: f64, b: f64, open_cell: bool| {
        if open_cell {
            lo <= a && b <= hi
        } else {
            lo < a && a < hi
        }
    };
    match f {
        Factor::Points { positions, .. } => {
            let x = positions.as_ref().map_or(code as f64, |p| p[code as usize]);
            lo < x && x < hi
        }
        Factor::Interval { cells } => {
            let h = 2.0 * *cells as f64;
            let (a, b) = f.closure_halfsteps(code);
            inside(a as f64 / h, b as f64 / h, code % 2 == 1)
        }
        Factor::Circle { cells } => {
            let h = 2.0 * *cells as f64;
            let (a, b) = f.closure_halfsteps(code);
            (-1..=1).any(|shift| {
                let s = shift as f64;
                inside(a as f64 / h + s, b as f64 / h + s, code % 2 == 1)
            })
        }
    }
}

/// A cellular map given cell by cell. Faces go to faces, so preimages of open
/// sets are open.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMap {
    source: Arc<CellComplex>,
    target: Arc<CellComplex>,
    table: Vec<u32>,
}

impl CellMap {
    pub fn new(source: Arc<CellComplex>, target: Arc<CellComplex>, table: Vec<u32>) -> Result<Self> {
        if table.len() != source.len() {
            return Err(Error::InvalidModel(format!(
                "map table has {} entries for {} cells",
                table.len(),
                source.len()
            )));
        }
        if let Some(&t) = table.iter().find(|&&t| t as usize >= target.len()) {
            return Err(Error::InvalidModel(format!("map sends a cell to {t}, outside the target")));
        }
        let map = CellMap { source, target, table };
        if let Some(c) = map.first_non_cellular() {
            return Err(Error::InvalidModel(format!("map is not cellular at cell {c}")));
        }
        Ok(map)
    }

    /// For tables that are cellular by construction (products and
    /// relabelings of cellular maps).
    pub(crate) fn new_unchecked(source: Arc<CellComplex>, target: Arc<CellComplex>, table: Vec<u32>) -> Self {
        debug_assert_eq!(table.len(), source.len());
        CellMap { source, target, table }
    }

    pub fn identity(c: Arc<CellComplex>) -> Self {
        let table = (0..c.len() as u32).collect();
        CellMap { source: c.clone(), target: c, table }
    }

    /// Projection onto the listed factors (in that order).
    pub fn projection(source: Arc<CellComplex>, factors: &[usize]) -> Result<Self> {
        let target = CellComplex::new(factors.iter().map(|&k| source.factors()[k].clone()).collect())?;
        let table = (0..source.len())
            .map(|c| {
                let codes: Vec<u32> = factors.iter().map(|&k| source.code(c, k)).collect();
                target.cell_of(&codes) as u32
            })
            .collect();
        Ok(CellMap { source, target: Arc::new(target), table })
    }

    pub fn source(&self) -> &Arc<CellComplex> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CellComplex> {
        &self.target
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn apply(&self, cell: usize) -> usize {
        self.table[cell] as usize
    }

    pub fn compose(&self, then: &CellMap) -> Result<CellMap> {
        if !same(&self.target, &then.source) {
            return Err(Error::ComplexMismatch);
        }
        let table = self.table.iter().map(|&t| then.table[t as usize]).collect();
        Ok(CellMap { source: self.source.clone(), target: then.target.clone(), table })
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = FixedBitSet::with_capacity(self.target.len());
        for &t in &self.table {
            hit.insert(t as usize);
        }
        hit.is_full()
    }

    fn first_non_cellular(&self) -> Option<usize> {
        let src = &self.source;
        for b in 0..src.len() {
            let img_b = self.apply(b);
            for a in src.closure_vertices(b) {
                if !is_face(&self.target, self.apply(a), img_b) {
                    return Some(b);
                }
            }
        }
        None
    }
}

/// `a` lies in the closure of `b`.
pub fn is_face(c: &CellComplex, a: usize, b: usize) -> bool {
    c.factors().iter().enumerate().all(|(k, f)| {
        let (ca, cb) = (c.code(a, k), c.code(b, k));
        ca == cb || f.closure_vertices(cb).contains(&ca)
    })
}

#[derive(Clone, Debug, PartialEq)]
enum FiberKind {
    /// Fibers over cells of the product of these factors.
    Projection(Vec<usize>),
    Map,
}

/// The fibers of a cellular surjection `π`, one class per base cell. The
/// preimage of a point in an open base cell meets exactly the cells of its
/// class, so "for every fiber" is a finite condition.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberModel {
    complex: Arc<CellComplex>,
    class: Vec<u32>,
    classes: usize,
    kind: FiberKind,
}

impl FiberModel {
    /// One fiber: the unconditional case.
    pub fn single(complex: Arc<CellComplex>) -> Self {
        Self::projection(complex, Vec::new()).expect("empty projection")
    }

    /// Every point is its own fiber.
    pub fn identity(complex: Arc<CellComplex>) -> Self {
        let all = (0..complex.factors().len()).collect();
        Self::projection(complex, all).expect("full projection")
    }

    pub fn projection(complex: Arc<CellComplex>, base_factors: Vec<usize>) -> Result<Self> {
        if let Some(&k) = base_factors.iter().find(|&&k| k >= complex.factors().len()) {
            return Err(Error::InvalidParameter(format!("no factor {k}")));
        }
        let map = CellMap::projection(complex.clone(), &base_factors)?;
        let classes = map.target.len();
        Ok(FiberModel { complex, class: map.table, classes, kind: FiberKind::Projection(base_factors) })
    }

    pub fn from_map(map: &CellMap) -> Result<Self> {
        let mut hit = vec![false; map.target.len()];
        for &t in &map.table {
            hit[t as usize] = true;
        }
        if let Some(v) = hit.iter().position(|h| !h) {
            return Err(Error::EmptyFiber(v));
        }
        Ok(FiberModel {
            complex: map.source.clone(),
            class: map.table.clone(),
            classes: map.target.len(),
            kind: FiberKind::Map,
        })
    }

    pub fn complex(&self) -> &Arc<CellComplex> {
        &self.complex
    }

    pub fn class_of(&self, cell: usize) -> u32 {
        self.class[cell]
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Base factor indices when `π` is a coordinate projection.
    pub fn base_factors(&self) -> Option<&[usize]> {
        match &self.kind {
            FiberKind::Projection(b) => Some(b),
            FiberKind::Map => None,
        }
    }

    /// The same fibers on a subdivision of the complex.
    pub fn rebuild(&self, fine: Arc<CellComplex>) -> Result<FiberModel> {
        match &self.kind {
            FiberKind::Projection(b) => FiberModel::projection(fine, b.clone()),
            FiberKind::Map => Err(Error::InvalidParameter(
                "fibers of a general map must be rebuilt by the system at the new resolution".into(),
            )),
        }
    }
}

/// The cover `∨_t p_t^{-1}(U_t)` kept in factored form. A member is a tuple
/// `(j_t)`; a cell lies in it iff `p_t(cell) ∈ U_{t, j_t}` for every `t`.
/// Member masks of all parts are concatenated; part `t` owns the words
/// `offsets[t]..offsets[t+1]`.
#[derive(Clone, Debug)]
pub struct JoinCover {
    complex: Arc<CellComplex>,
    parts: Vec<(Arc<Cover>, Arc<CellMap>)>,
    offsets: Vec<usize>,
    masks: Vec<Vec<u64>>,
}

impl JoinCover {
    pub fn new(complex: Arc<CellComplex>, parts: Vec<(Arc<Cover>, Arc<CellMap>)>) -> Result<Self> {
        let mut masks = Vec::with_capacity(parts.len());
        let mut offsets = vec![0];
        for (u, p) in &parts {
            if !same(&p.source, &complex) || !same(&p.target, &u.complex) {
                return Err(Error::ComplexMismatch);
            }
            let w = u.len().div_ceil(64);
            offsets.push(offsets.last().unwrap() + w);
            masks.push((0..u.complex.len()).flat_map(|c| u.member_words(c)).collect());
        }
        Ok(JoinCover { complex, parts, offsets, masks })
    }

    pub fn single(u: Arc<Cover>) -> Result<Self> {
        let c = u.complex.clone();
        Self::new(c.clone(), vec![(u, Arc::new(CellMap::identity(c)))])
    }

    pub fn complex(&self) -> &Arc<CellComplex> {
        &self.complex
    }

    pub fn parts(&self) -> &[(Arc<Cover>, Arc<CellMap>)] {
        &self.parts
    }

    /// Word ranges of the parts inside a concatenated mask.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Concatenated member masks of the cell.
    pub fn masks(&self, cell: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(*self.offsets.last().unwrap());
        for t in 0..self.parts.len() {
            out.extend_from_slice(self.part_mask(t, cell));
        }
        out
    }

    pub fn part_mask(&self, t: usize, cell: usize) -> &[u64] {
        let w = self.offsets[t + 1] - self.offsets[t];
        let c = self.parts[t].1.apply(cell);
        &self.masks[t][c * w..(c + 1) * w]
    }

    /// Total dimension of the factors some member depends on. The join is
    /// pulled back from the product of those factors, so `D` is at most this.
    pub fn essential_dimension(&self) -> usize {
        let c = &self.complex;
        (0..c.factors().len())
            .filter(|&k| c.factors()[k].dimension() > 0)
            .filter(|&k| {
                (0..c.len()).any(|cell| {
                    let mut codes = c.codes(cell);
                    codes[k] = 0;
                    let base = c.cell_of(&codes);
                    (0..self.parts.len()).any(|t| self.part_mask(t, cell) != self.part_mask(t, base))
                })
            })
            .map(|k| c.factors()[k].dimension())
            .sum()
    }

    /// Whether every part of a concatenated mask is nonzero.
    pub fn all_parts_nonzero(&self, mask: &[u64]) -> bool {
        self.offsets.windows(2).all(|r| mask[r[0]..r[1]].iter().any(|&x| x != 0))
    }

    /// Whether every part of `a & b` is nonzero.
    pub fn all_parts_meet(&self, a: &[u64], b: &[u64]) -> bool {
        self.offsets.windows(2).all(|r| (r[0]..r[1]).any(|i| a[i] & b[i] != 0))
    }

    /// Whether `cell` lies in the member `(j_t)`.
    pub fn contains(&self, member: &[usize], cell: usize) -> bool {
        member.iter().enumerate().all(|(t, &j)| self.part_mask(t, cell)[j / 64] >> (j % 64) & 1 == 1)
    }

    /// `ord` of the join: the member count at a cell is the product of the
    /// part counts.
    pub fn ord(&self) -> usize {
        self.complex
            .top_cells()
            .into_iter()
            .map(|c| {
                (0..self.parts.len())
                    .map(|t| self.part_mask(t, c).iter().map(|w| w.count_ones() as u128).sum::<u128>())
                    .fold(1u128, |a, b| a.saturating_mul(b))
            })
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
            .min(usize::MAX as u128) as usize
    }

    /// Member tuples, limited to `cap` of them.
    pub fn member_tuples(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        let sizes: Vec<usize> = self.parts.iter().map(|(u, _)| u.len()).collect();
        let total = sizes.iter().try_fold(1usize, |a, &b| a.checked_mul(b));
        if total.is_none_or(|t| t > cap) {
            return Err(Error::InvalidParameter(format!("join has more than {cap} members")));
        }
        let mut out = vec![Vec::new()];
        for s in sizes {
            out = out
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    (0..s).map(move |j| {
                        let mut q = p.clone();
                        q.push(j);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// A member of `self` lying in no member of `other`, as a member tuple,
    /// or `None` when `self` refines `other`. Members are visited through
    /// the cells they contain, so empty intersections are skipped.
    pub fn refinement_violation(&self, other: &JoinCover) -> Result<Option<Vec<usize>>> {
        if !same(&self.complex, &other.complex) {
            return Err(Error::ComplexMismatch);
        }
        let mut acc: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
        for c in 0..self.complex.len() {
            let lists: Vec<Vec<u32>> =
                (0..self.parts.len()).map(|t| ones_of(self.part_mask(t, c)).collect()).collect();
            let theirs = other.masks(c);
            for tuple in cartesian(&lists) {
                acc.entry(tuple)
                    .and_modify(|a| a.iter_mut().zip(&theirs).for_each(|(x, y)| *x &= y))
                    .or_insert_with(|| theirs.clone());
            }
        }
        let mut bad: Vec<Vec<u32>> = acc.into_iter().filter(|(_, m)| !other.all_parts_nonzero(m)).map(|(k, _)| k).collect();
        bad.sort_unstable();
        Ok(bad.into_iter().next().map(|t| t.into_iter().map(|j| j as usize).collect()))
    }

    /// The explicit cover (empty intersections pruned).
    pub fn materialize(&self, cap: usize) -> Result<Cover> {
        let n = self.complex.len();
        let members = self
            .member_tuples(cap)?
            .into_iter()
            .map(|tuple| {
                let mut m = FixedBitSet::with_capacity(n);
                for c in 0..n {
                    if self.contains(&tuple, c) {
                        m.insert(c);
                    }
                }
                m
            })
            .collect();
        Cover::new(self.complex.clone(), members)
    }

    /// Factors fixed on each slice: the base factors and every factor that is
    /// not an interval.
    fn slicing(&self, fibers: &FiberModel) -> Option<(Vec<usize>, Vec<usize>)> {
        let base = fibers.base_factors()?;
        let factors = self.complex.factors();
        let fixed: Vec<usize> = (0..factors.len())
            .filter(|k| base.contains(k) || !matches!(factors[*k], Factor::Interval { .. }))
            .collect();
        let free: Vec<usize> = (0..factors.len()).filter(|k| !fixed.contains(k)).collect();
        Some((fixed, free))
    }

    /// Lebesgue's covering theorem on each fiber slice: if on some slice no
    /// member trace meets two opposite faces along each axis of a set `S`,
    /// the same holds on the `S`-face of the fiber cube through a vertex, so
    /// every admissible `W` has `ord ≥ |S|`. Returns the largest such `|S|`,
    /// or 0 when `π` is not a projection.
    pub fn lebesgue_lower_bound(&self, fibers: &FiberModel) -> usize {
        let Some((fixed, free)) = self.slicing(fibers) else { return 0 };
        if free.is_empty() {
            return 0;
        }
        let factors = self.complex.factors();
        let slice_lists: Vec<Vec<u32>> = fixed.iter().map(|&k| (0..factors[k].codes()).collect()).collect();
        let mut best = 0;
        for slice in cartesian(&slice_lists) {
            let certified = free.iter().filter(|&&axis| {
                let face = |upper: bool| -> HashSet<Vec<u64>> {
                    let lists: Vec<Vec<u32>> = (0..factors.len())
                        .map(|k| {
                            if let Some(i) = fixed.iter().position(|&f| f == k) {
                                vec![slice[i]]
                            } else if k == axis {
                                let r = factors[k].resolution().expect("interval");
                                vec![if upper { 2 * r } else { 0 }]
                            } else {
                                (0..factors[k].codes()).filter(|&c| factors[k].is_top(c)).collect()
                            }
                        })
                        .collect();
                    self.complex.product_cells(&lists).into_iter().map(|c| self.masks(c)).collect()
                };
                let lower = face(false);
                let upper = face(true);
                !lower.iter().any(|a| upper.iter().any(|b| self.all_parts_meet(a, b)))
            })
            .count();
            best = best.max(certified);
            if best == free.len() {
                break;
            }
        }
        best
    }

    /// A connected fiber that no single member contains forces `ord ≥ 1`.
    pub fn connectivity_lower_bound(&self, fibers: &FiberModel) -> usize {
        let Some(base) = fibers.base_factors() else { return 0 };
        let factors = self.complex.factors();
        let fixed: Vec<usize> = (0..factors.len())
            .filter(|k| base.contains(k) || matches!(factors[*k], Factor::Points { .. }))
            .collect();
        if fixed.len() == factors.len() {
            return 0;
        }
        let mut acc: HashMap<Vec<u32>, Vec<u64>> = HashMap::new();
        for c in 0..self.complex.len() {
            let key: Vec<u32> = fixed.iter().map(|&k| self.complex.code(c, k)).collect();
            let m = self.masks(c);
            acc.entry(key)
                .and_modify(|a| a.iter_mut().zip(&m).for_each(|(x, y)| *x &= y))
                .or_insert(m);
        }
        usize::from(acc.values().any(|a| !self.all_parts_nonzero(a)))
    }

    pub fn lower_bound(&self, fibers: &FiberModel) -> usize {
        self.lebesgue_lower_bound(fibers).max(self.connectivity_lower_bound(fibers))
    }
}

fn ones_of(words: &[u64]) -> impl Iterator<Item = u32> + '_ {
    words.iter().enumerate().flat_map(|(w, &x)| (0..64).filter(move |b| x >> b & 1 == 1).map(move |b| (w * 64 + b) as u32))
}

pub(crate) fn cartesian(lists: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                l.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(r: u32) -> Arc<CellComplex> {
        Arc::new(CellComplex::interval(r))
    }

    fn two_member(r: u32) -> Cover {
        Cover::from_boxes(interval(r), &[vec![(-1.0, 0.6)], vec![(0.4, 2.0)]]).unwrap()
    }

    #[test]
    fn ord_of_simple_covers() {
        assert_eq!(two_member(10).ord(), 1);
        let c = interval(4);
        let part = Cover::from_predicate(c.clone(), 1, |_, _| true).unwrap();
        assert_eq!(part.ord(), 0);
        let points = Arc::new(CellComplex::new(vec![Factor::points(3)]).unwrap());
        let disc = Cover::from_predicate(points, 3, |j, c| j == c).unwrap();
        assert_eq!(disc.ord(), 0);
    }

    #[test]
    fn cover_validation() {
        let c = interval(2);
        let err = Cover::from_boxes(c.clone(), &[vec![(-1.0, 0.4)]]).unwrap_err();
        assert!(matches!(err, Error::NotACover { .. }));
        let err = Cover::from_predicate(c, 1, |_, cell| cell == 2).unwrap_err();
        assert_eq!(err, Error::NotOpen { cell: 2 });
    }

    #[test]
    fn join_and_refinement() {
        let u = two_member(10);
        let x = Cover::trivial(u.complex().clone());
        let ux = u.join(&x).unwrap();
        assert_eq!(ux, u);
        // U ∨ U gains the member U_0 ∩ U_1, so its ord is 2, but it is
        // equivalent to U under refinement.
        let uu = u.join(&u).unwrap();
        assert_eq!(uu.len(), 3);
        assert_eq!(uu.ord(), 2);
        assert!(uu.refines(&u).unwrap() && u.refines(&uu).unwrap());
        let v = Cover::from_boxes(u.complex().clone(), &[vec![(-1.0, 0.5)], vec![(0.3, 2.0)]]).unwrap();
        let uv = u.join(&v).unwrap();
        assert!(uv.len() <= 4);
        assert!(uv.refines(&u).unwrap() && uv.refines(&v).unwrap());
        // [0,0.6) is not inside [0,0.5) nor (0.3,1]
        assert!(!u.refines(&v).unwrap());
        assert!(Cover::vertex_stars(u.complex().clone()).refines(&u).unwrap());
        let other = Cover::trivial(interval(3));
        assert_eq!(u.join(&other), Err(Error::ComplexMismatch));
    }

    #[test]
    fn brick_cover_ord() {
        // Lebesgue bricks on the square: the two rows offset by half a brick.
        let bricks = vec![
            vec![(-1.0, 0.55), (-1.0, 0.55)],
            vec![(0.45, 2.0), (-1.0, 0.55)],
            vec![(-1.0, 0.3), (0.45, 2.0)],
            vec![(0.2, 0.8), (0.45, 2.0)],
            vec![(0.7, 2.0), (0.45, 2.0)],
        ];
        let grid = Arc::new(CellComplex::cube(2, 20));
        let u = Cover::from_boxes(grid, &bricks).unwrap();
        assert_eq!(u.ord(), 2);
        assert_eq!(u.lebesgue_face_lower_bound(), 2);
    }

    #[test]
    fn lebesgue_bound_examples() {
        assert_eq!(two_member(10).lebesgue_face_lower_bound(), 1);
        assert_eq!(Cover::trivial(interval(3)).lebesgue_face_lower_bound(), 0);
    }

    #[test]
    fn pullback_along_projection() {
        let sq = Arc::new(CellComplex::cube(2, 10));
        let proj = CellMap::projection(sq.clone(), &[0]).unwrap();
        let u = Cover::from_boxes(proj.target().clone(), &[vec![(-1.0, 0.6)], vec![(0.4, 2.0)]]).unwrap();
        let p = u.pullback(&proj).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.ord(), u.ord());
        let strips = Cover::from_boxes(sq, &[vec![(-1.0, 0.6), (-1.0, 2.0)], vec![(0.4, 2.0), (-1.0, 2.0)]]).unwrap();
        assert_eq!(p, strips);
        let whole = Cover::trivial(proj.target().clone()).pullback(&proj).unwrap();
        assert_eq!(whole.len(), 1);
    }

    #[test]
    fn subdivision_keeps_cover() {
        let u = two_member(10);
        let f = u.subdivide(3).unwrap();
        assert_eq!(f.ord(), 1);
        assert_eq!(f.complex().resolution(), Some(30));
    }

    #[test]
    fn non_cellular_map_rejected() {
        let c = interval(2);
        // sends the middle vertex to an endpoint but its edges elsewhere
        let table = vec![0, 1, 4, 3, 4];
        assert!(CellMap::new(c.clone(), c, table).is_err());
    }

    #[test]
    fn join_cover_matches_materialized() {
        let sq = Arc::new(CellComplex::cube(2, 5));
        let px = Arc::new(CellMap::projection(sq.clone(), &[0]).unwrap());
        let py = Arc::new(CellMap::projection(sq.clone(), &[1]).unwrap());
        let u = Arc::new(Cover::from_boxes(px.target().clone(), &[vec![(-1.0, 0.6)], vec![(0.4, 2.0)]]).unwrap());
        let j = JoinCover::new(sq.clone(), vec![(u.clone(), px.clone()), (u.clone(), py.clone())]).unwrap();
        let m = j.materialize(64).unwrap();
        let direct = u.pullback(&px).unwrap().join(&u.pullback(&py).unwrap()).unwrap();
        assert_eq!(m, direct);
        assert_eq!(j.ord(), m.ord());
        assert_eq!(j.ord(), 3);
        assert_eq!(j.lebesgue_lower_bound(&FiberModel::single(sq.clone())), 2);
        assert_eq!(j.lower_bound(&FiberModel::projection(sq, vec![1]).unwrap()), 1);
    }

    #[test]
    fn cover_serde() {
        let u = two_member(5);
        let s = serde_json::to_string(&u).unwrap();
        let back: Cover = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
    }
}
