//! The acting group `Z^d`: elements, finite windows, invariance, Følner
//! schedules and tiles.
//!
//! Everything downstream is indexed by [`Window`]s. Defects and densities are
//! exact rationals because membership in `B(K, δ)` is a sharp threshold.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// A lattice vector of `Z^d`. The group law is coordinatewise addition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<i64>);

impl GroupElement {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("group elements need d >= 1".into()));
        }
        Ok(GroupElement(coords))
    }

    pub fn identity(d: usize) -> Self {
        GroupElement(vec![0; d])
    }

    /// Shorthand for `Z`.
    pub fn scalar(n: i64) -> Self {
        GroupElement(vec![n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.add_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, other: &GroupElement) -> GroupElement {
        GroupElement(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement(self.0.iter().map(|c| -c).collect())
    }

    /// Word length with respect to the standard generators.
    pub fn word_length(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// The standard generators `±e_i`.
    pub fn generators(d: usize) -> Vec<GroupElement> {
        let mut out = Vec::with_capacity(2 * d);
        for i in 0..d {
            for sign in [1, -1] {
                let mut v = vec![0; d];
                v[i] = sign;
                out.push(GroupElement(v));
            }
        }
        out
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// The small interface the rest of the crate needs from an amenable group.
/// Only `Z^d` ships.
pub trait AmenableGroup {
    type Element: Clone + Ord;
    fn identity(&self) -> Self::Element;
    fn multiply(&self, s: &Self::Element, t: &Self::Element) -> Self::Element;
    /// All elements of word length at most `radius`, in increasing order.
    fn ball(&self, radius: u64) -> Vec<Self::Element>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub d: usize,
}

impl AmenableGroup for Lattice {
    type Element = GroupElement;

    fn identity(&self) -> GroupElement {
        GroupElement::identity(self.d)
    }

    fn multiply(&self, s: &GroupElement, t: &GroupElement) -> GroupElement {
        s.add_unchecked(t)
    }

    fn ball(&self, radius: u64) -> Vec<GroupElement> {
        let r = radius as i64;
        let side = Window::box_with(&vec![-r; self.d], &vec![2 * r + 1; self.d]);
        side.iter().filter(|g| g.word_length() <= radius).cloned().collect()
    }
}

/// A finite subset of `Z^d`. The empty window is a legal value but every
/// operation that needs `F ∈ F(Γ)` rejects it.
#[derive(Clone)]
pub struct Window {
    dim: usize,
    elements: BTreeSet<GroupElement>,
}

// The empty window reads back from `[]` without a dimension.
impl PartialEq for Window {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements && (self.dim == other.dim || self.elements.is_empty())
    }
}

impl Eq for Window {}

impl std::hash::Hash for Window {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.elements.hash(h);
    }
}

impl Window {
    pub fn empty(dim: usize) -> Self {
        Window { dim, elements: BTreeSet::new() }
    }

    pub fn new<I: IntoIterator<Item = GroupElement>>(dim: usize, elements: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for e in elements {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.dim() });
            }
            set.insert(e);
        }
        Ok(Window { dim, elements: set })
    }

    /// A window of `Z` from integers.
    pub fn from_ints<I: IntoIterator<Item = i64>>(values: I) -> Self {
        Window { dim: 1, elements: values.into_iter().map(GroupElement::scalar).collect() }
    }

    /// `[0, n)^d`.
    pub fn cube(d: usize, n: i64) -> Self {
        Self::box_with(&vec![0; d], &vec![n; d])
    }

    /// The box `lower + [0, sides_0) × ... × [0, sides_{d-1})`.
    pub fn box_with(lower: &[i64], sides: &[i64]) -> Self {
        let d = lower.len();
        let mut elements = BTreeSet::new();
        if sides.iter().any(|&s| s <= 0) {
            return Window::empty(d);
        }
        let mut cur = lower.to_vec();
        loop {
            elements.insert(GroupElement(cur.clone()));
            let mut axis = d;
            while axis > 0 {
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] < lower[axis] + sides[axis] {
                    break;
                }
                cur[axis] = lower[axis];
                if axis == 0 {
                    return Window { dim: d, elements };
                }
            }
            if d == 0 {
                return Window { dim: d, elements };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.contains(g)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroupElement> + '_ {
        self.elements.iter()
    }

    pub fn elements(&self) -> &BTreeSet<GroupElement> {
        &self.elements
    }

    pub fn insert(&mut self, g: GroupElement) -> Result<()> {
        if g.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: g.dim() });
        }
        self.elements.insert(g);
        Ok(())
    }

    /// The right translate `Fs = {fs : f ∈ F}`.
    pub fn translate(&self, s: &GroupElement) -> Window {
        Window { dim: self.dim, elements: self.elements.iter().map(|f| f.add_unchecked(s)).collect() }
    }

    pub fn union(&self, other: &Window) -> Window {
        Window { dim: self.dim, elements: self.elements.union(&other.elements).cloned().collect() }
    }

    pub fn intersection(&self, other: &Window) -> Window {
        Window {
            dim: self.dim,
            elements: self.elements.intersection(&other.elements).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &Window) -> Window {
        Window {
            dim: self.dim,
            elements: self.elements.difference(&other.elements).cloned().collect(),
        }
    }

    pub fn is_subset(&self, other: &Window) -> bool {
        self.elements.is_subset(&other.elements)
    }

    /// `Kt = {kt : k ∈ K}` contained in `self`?
    fn contains_translate(&self, k: &Window, t: &GroupElement) -> bool {
        k.iter().all(|kk| self.contains(&kk.add_unchecked(t)))
    }

    /// If the window is a full box, its lower corner and side lengths.
    pub fn as_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let first = self.elements.iter().next()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for g in &self.elements {
            for (i, &c) in g.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        let sides: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
        let volume = sides.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s as usize))?;
        (volume == self.len()).then_some((lo, sides))
    }

    /// `|sF Δ F| / |F|`.
    pub fn boundary_ratio(&self, s: &GroupElement) -> Result<Rational> {
        if self.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let moved = self.translate(s);
        let sym = moved.difference(self).len() + self.difference(&moved).len();
        Ok(Ratio::new(sym as i64, self.len() as i64))
    }

    /// Largest coordinate spread, used to decide when boxes are "big enough".
    pub fn diameter(&self) -> i64 {
        match self.as_box_hull() {
            Some((lo, hi)) => lo.iter().zip(&hi).map(|(l, h)| h - l).max().unwrap_or(0),
            None => 0,
        }
    }

    fn as_box_hull(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let first = self.elements.iter().next()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for g in &self.elements {
            for (i, &c) in g.coords().iter().enumerate() {
                lo[i] = lo[i].min(c);
                hi[i] = hi[i].max(c);
            }
        }
        Some((lo, hi))
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elements.iter()).finish()
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let list: Vec<&Vec<i64>> = self.elements.iter().map(|g| &g.0).collect();
        list.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let list: Vec<Vec<i64>> = Vec::deserialize(d)?;
        let dim = list.first().map_or(0, |v| v.len());
        Window::new(dim, list.into_iter().map(GroupElement))
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// `1 − |{t ∈ F : Kt ⊆ F}| / |F|`; `F ∈ B(K, δ)` iff this is `≤ δ`.
pub fn invariance_defect(f: &Window, k: &Window) -> Result<Rational> {
    if f.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if k.dim() != f.dim() && !k.is_empty() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: k.dim() });
    }
    let good = f.iter().filter(|t| f.contains_translate(k, t)).count();
    Ok(Ratio::new((f.len() - good) as i64, f.len() as i64))
}

/// An element `(K, δ)` of the net of invariance requirements.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariancePair {
    pub k: Window,
    #[serde(with = "crate::rational::serde_str")]
    pub delta: Rational,
}

impl InvariancePair {
    pub fn new(k: Window, delta: Rational) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if delta <= Ratio::from_integer(0) || delta > Ratio::from_integer(1) {
            return Err(Error::InvalidParameter(format!("delta must lie in (0,1], got {delta}")));
        }
        Ok(InvariancePair { k, delta })
    }

    /// Membership `F ∈ B(K, δ)`.
    pub fn admits(&self, f: &Window) -> bool {
        matches!(invariance_defect(f, &self.k), Ok(d) if d <= self.delta)
    }

    /// Net order: `(K', δ') ⪰ (K, δ)` iff `K' ⊇ K` and `δ' ≤ δ`.
    pub fn succeeds(&self, other: &InvariancePair) -> bool {
        other.k.is_subset(&self.k) && self.delta <= other.delta
    }
}

/// An ordered list of windows meant to become more and more invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolnerSchedule {
    pub windows: Vec<Window>,
    pub tiling: bool,
}

impl FolnerSchedule {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Checks that `|sF_n Δ F_n| / |F_n|` is non-increasing along the schedule for
    /// every `s` in `generators`; returns the first offending `(index, s)`.
    pub fn check_monotone(&self, generators: &[GroupElement]) -> Result<Option<(usize, GroupElement)>> {
        for s in generators {
            let mut prev: Option<Rational> = None;
            for (i, w) in self.windows.iter().enumerate() {
                let r = w.boundary_ratio(s)?;
                if let Some(p) = prev {
                    if r > p {
                        return Ok(Some((i, s.clone())));
                    }
                }
                prev = Some(r);
            }
        }
        Ok(None)
    }
}

/// Boxes `[0, n)^d` for the given strictly increasing sizes; boxes tile, so the
/// schedule is flagged as a tiling schedule.
pub fn box_folner(d: usize, sizes: &[i64]) -> Result<FolnerSchedule> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    if sizes.is_empty() || sizes[0] < 1 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneSchedule(sizes.to_vec()));
    }
    Ok(FolnerSchedule { windows: sizes.iter().map(|&n| Window::cube(d, n)).collect(), tiling: true })
}

/// Outcome of a tile search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum TileVerdict {
    /// `{Tc}` partitions `Z^d` for `C = centers + period·Z^d`.
    Tile { period: Vec<i64>, centers: Vec<GroupElement> },
    /// No periodic tiling with period at most `bound` exists; larger periods
    /// were not examined, so this is "unknown" rather than "never".
    NotFoundWithinBound { bound: i64 },
}

impl TileVerdict {
    pub fn is_tile(&self) -> bool {
        matches!(self, TileVerdict::Tile { .. })
    }
}

/// Decides whether `t` tiles `Z^d`: exactly for boxes, otherwise by exhaustive
/// search over cubic periods `p ≤ period_bound`.
pub fn is_tile(t: &Window, period_bound: i64) -> Result<TileVerdict> {
    if t.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if let Some((_, sides)) = t.as_box() {
        return Ok(TileVerdict::Tile { period: sides, centers: vec![GroupElement::identity(t.dim())] });
    }
    let d = t.dim();
    for p in 1..=period_bound {
        let cells = (p as usize).pow(d as u32);
        if cells % t.len() != 0 {
            continue;
        }
        if let Some(centers) = periodic_tiling(t, p) {
            return Ok(TileVerdict::Tile { period: vec![p; d], centers });
        }
    }
    Ok(TileVerdict::NotFoundWithinBound { bound: period_bound })
}

fn torus_index(g: &[i64], p: i64) -> usize {
    g.iter().fold(0usize, |acc, &c| acc * p as usize + c.rem_euclid(p) as usize)
}

fn torus_point(mut idx: usize, p: i64, d: usize) -> Vec<i64> {
    let mut v = vec![0; d];
    for i in (0..d).rev() {
        v[i] = (idx % p as usize) as i64;
        idx /= p as usize;
    }
    v
}

/// Exact cover of the torus `(Z/p)^d` by translates of `t`.
fn periodic_tiling(t: &Window, p: i64) -> Option<Vec<GroupElement>> {
    let d = t.dim();
    let n = (p as usize).pow(d as u32);
    let shape: Vec<usize> = t.iter().map(|g| torus_index(g.coords(), p)).collect();
    let mut distinct = shape.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != shape.len() {
        return None;
    }
    let mut covered = vec![false; n];
    let mut centers = Vec::new();
    fn placed(t: &Window, c: &[i64], p: i64) -> Vec<usize> {
        t.iter()
            .map(|g| {
                let v: Vec<i64> = g.coords().iter().zip(c).map(|(a, b)| a + b).collect();
                torus_index(&v, p)
            })
            .collect()
    }
    fn search(
        t: &Window,
        p: i64,
        d: usize,
        covered: &mut Vec<bool>,
        centers: &mut Vec<Vec<i64>>,
    ) -> bool {
        let Some(hole) = covered.iter().position(|&c| !c) else {
            return true;
        };
        let x = torus_point(hole, p, d);
        for g in t.iter() {
            let c: Vec<i64> = x.iter().zip(g.coords()).map(|(a, b)| (a - b).rem_euclid(p)).collect();
            let cells = placed(t, &c, p);
            if cells.iter().all(|&i| !covered[i]) {
                for &i in &cells {
                    covered[i] = true;
                }
                centers.push(c);
                if search(t, p, d, covered, centers) {
                    return true;
                }
                centers.pop();
                for &i in &cells {
                    covered[i] = false;
                }
            }
        }
        false
    }
    if search(t, p, d, &mut covered, &mut centers) {
        let mut out: Vec<GroupElement> = centers.into_iter().map(GroupElement).collect();
        out.sort();
        Some(out)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(v: &[i64]) -> GroupElement {
        GroupElement::new(v.to_vec()).unwrap()
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(g(&[1, 0]).multiply(&g(&[2, 3])).unwrap(), g(&[3, 3]));
        assert_eq!(g(&[4, -2]).multiply(&GroupElement::identity(2)).unwrap(), g(&[4, -2]));
        assert_eq!(g(&[-1]).multiply(&g(&[1])).unwrap(), g(&[0]));
        assert!(matches!(g(&[1]).multiply(&g(&[1, 2])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn translate_examples() {
        assert_eq!(Window::from_ints([0, 1]).translate(&g(&[3])), Window::from_ints([3, 4]));
        let f = Window::from_ints([2, 7]);
        assert_eq!(f.translate(&GroupElement::identity(1)), f);
        let sq = Window::new(2, [g(&[0, 0]), g(&[1, 0])]).unwrap();
        let moved = Window::new(2, [g(&[0, 2]), g(&[1, 2])]).unwrap();
        assert_eq!(sq.translate(&g(&[0, 2])), moved);
    }

    /// Counts `t` with `Kt ⊄ F` by direct enumeration.
    fn failing_count(f: &Window, k: &Window) -> usize {
        f.iter()
            .filter(|t| k.iter().any(|kk| !f.contains(&kk.add_unchecked(t))))
            .count()
    }

    #[test]
    fn defect_examples() {
        let f = Window::cube(1, 10);
        let k = Window::from_ints([0, 1]);
        assert_eq!(failing_count(&f, &k), 1);
        assert_eq!(invariance_defect(&f, &k).unwrap(), Ratio::new(1, 10));
        assert_eq!(invariance_defect(&f, &Window::from_ints([0])).unwrap(), Ratio::from_integer(0));

        let k2 = Window::new(2, [g(&[0, 0]), g(&[1, 0]), g(&[0, 1])]).unwrap();
        for n in 1..8 {
            let f = Window::cube(2, n);
            let brute = failing_count(&f, &k2) as i64;
            assert_eq!(brute, 2 * n - 1);
            assert_eq!(invariance_defect(&f, &k2).unwrap(), Ratio::new(2 * n - 1, n * n));
        }
        assert_eq!(invariance_defect(&Window::empty(1), &k), Err(Error::EmptyWindow));
    }

    #[test]
    fn box_folner_examples() {
        let s = box_folner(1, &[1, 2, 4]).unwrap();
        assert_eq!(s.windows[0], Window::from_ints([0]));
        assert_eq!(s.windows[1], Window::from_ints([0, 1]));
        assert_eq!(s.windows[2], Window::from_ints([0, 1, 2, 3]));
        assert!(s.tiling);
        assert_eq!(box_folner(2, &[2]).unwrap().windows[0].len(), 4);
        assert!(box_folner(1, &[2, 2]).is_err());
        assert!(box_folner(1, &[0, 2]).is_err());

        let k = Window::from_ints([0, 1]);
        let sched = box_folner(1, &[1, 2, 3, 5, 8]).unwrap();
        let defects: Vec<Rational> =
            sched.windows.iter().map(|w| invariance_defect(w, &k).unwrap()).collect();
        for (w, d) in sched.windows.iter().zip(&defects) {
            assert_eq!(*d, Ratio::new(1, w.len() as i64));
        }
        assert!(defects.windows(2).all(|p| p[1] < p[0]));
        assert_eq!(sched.check_monotone(&GroupElement::generators(1)).unwrap(), None);
    }

    #[test]
    fn tile_examples() {
        match is_tile(&Window::cube(2, 3), 4).unwrap() {
            TileVerdict::Tile { period, .. } => assert_eq!(period, vec![3, 3]),
            v => panic!("{v:?}"),
        }
        match is_tile(&Window::from_ints([0, 2]), 4).unwrap() {
            TileVerdict::Tile { period, centers } => {
                assert_eq!(period, vec![4]);
                assert_eq!(centers, vec![g(&[0]), g(&[1])]);
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(
            is_tile(&Window::from_ints([0, 1, 3]), 4).unwrap(),
            TileVerdict::NotFoundWithinBound { bound: 4 }
        );
    }

    #[test]
    fn net_order_shrinks_families() {
        let family: Vec<Window> = (1..9).map(|n| Window::cube(1, n)).collect();
        let coarse = InvariancePair::new(Window::from_ints([0, 1]), Ratio::new(1, 3)).unwrap();
        let fine = InvariancePair::new(Window::from_ints([0, 1, 2]), Ratio::new(1, 4)).unwrap();
        assert!(fine.succeeds(&coarse));
        for f in &family {
            if fine.admits(f) {
                assert!(coarse.admits(f));
            }
        }
        assert!(InvariancePair::new(Window::from_ints([0]), Ratio::from_integer(0)).is_err());
    }

    #[test]
    fn ball_and_window_serde() {
        let lat = Lattice { d: 2 };
        assert_eq!(lat.ball(1).len(), 5);
        let w = Window::new(2, [g(&[1, 0]), g(&[0, 2])]).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "[[0,2],[1,0]]");
        let back: Window = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        let none: Window = serde_json::from_str("[]").unwrap();
        assert_eq!(none, Window::empty(2));
    }

    fn small_window() -> impl Strategy<Value = Window> {
        prop::collection::btree_set((-4i64..5, -4i64..5), 1..12).prop_map(|s| {
            Window::new(2, s.into_iter().map(|(a, b)| g(&[a, b]))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn defect_is_right_invariant(f in small_window(), k in small_window(), a in -5i64..5, b in -5i64..5) {
            let s = g(&[a, b]);
            prop_assert_eq!(invariance_defect(&f.translate(&s), &k).unwrap(), invariance_defect(&f, &k).unwrap());
        }

        #[test]
        fn defect_is_monotone_in_k(f in small_window(), k in small_window(), extra in small_window()) {
            let bigger = k.union(&extra);
            prop_assert!(invariance_defect(&f, &k).unwrap() <= invariance_defect(&f, &bigger).unwrap());
        }

        #[test]
        fn box_defect_decreases(n in 3i64..12, k in small_window()) {
            let (lo, hi) = (Window::cube(2, n), Window::cube(2, 3 * n));
            prop_assume!(k.diameter() < n);
            prop_assume!(invariance_defect(&lo, &k).unwrap() > Ratio::from_integer(0));
            prop_assert!(invariance_defect(&hi, &k).unwrap() < invariance_defect(&lo, &k).unwrap());
        }
    }
}
