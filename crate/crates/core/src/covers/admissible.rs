//! When may a set `S` of grid vertices be one member `star(S)` of a witness
//! cover? Both predicates are checked fiber class by fiber class, and both are
//! closed under merging: the state of `S ∪ {v}` is computed from the states
//! of `S` and `{v}` alone.

use std::sync::Arc;

use super::complex::{CellComplex, Factor};
use super::cover::{CellMap, FiberModel, JoinCover};
use crate::error::{Error, Result};

pub trait Admissibility: Sync {
    type State: Clone + Send + Sync;

    /// State of the singleton group at vertex cell `v`, or `None` when even
    /// `star(v)` is inadmissible.
    fn vertex(&self, v: usize) -> Option<Self::State>;

    fn merge(&self, group: &Self::State, other: &Self::State) -> Option<Self::State>;

    /// A label such that vertices sharing it always form an admissible group
    /// and the resulting witness has `ord ≤ ord(U)`.
    fn canonical_label(&self, _state: &Self::State) -> Option<Vec<u32>> {
        None
    }
}

/// Per fiber class data, sorted by class.
pub type Sparse<T> = Vec<(u32, Vec<T>)>;

fn merge_sparse<T: Copy>(
    a: &Sparse<T>,
    b: &Sparse<T>,
    mut combine: impl FnMut(&[T], &[T]) -> Option<Vec<T>>,
) -> Option<Sparse<T>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j].clone());
            j += 1;
        } else {
            out.push((a[i].0, combine(&a[i].1, &b[j].1)?));
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

fn accumulate<T: Copy>(acc: &mut Sparse<T>, class: u32, values: &[T], mut combine: impl FnMut(&mut T, T)) {
    match acc.binary_search_by_key(&class, |e| e.0) {
        Ok(i) => acc[i].1.iter_mut().zip(values).for_each(|(x, &y)| combine(x, y)),
        Err(i) => acc.insert(i, (class, values.to_vec())),
    }
}

/// `star(S) ∩ f` lies in a member of the (join) cover `U` for every fiber
/// class `f`. The state keeps, per class and per factor cover, the mask of
/// members containing every `star(v) ∩ f` so far.
pub struct MemberAdmissibility<'a> {
    cover: &'a JoinCover,
    fibers: &'a FiberModel,
}

impl<'a> MemberAdmissibility<'a> {
    pub fn new(cover: &'a JoinCover, fibers: &'a FiberModel) -> Result<Self> {
        if cover.complex() != fibers.complex() {
            return Err(Error::ComplexMismatch);
        }
        Ok(MemberAdmissibility { cover, fibers })
    }
}

impl Admissibility for MemberAdmissibility<'_> {
    type State = Sparse<u64>;

    fn vertex(&self, v: usize) -> Option<Sparse<u64>> {
        let mut acc: Sparse<u64> = Vec::new();
        for c in self.cover.complex().star(v) {
            let masks = self.cover.masks(c);
            accumulate(&mut acc, self.fibers.class_of(c), &masks, |x, y| *x &= y);
        }
        acc.iter().all(|(_, m)| self.cover.all_parts_nonzero(m)).then_some(acc)
    }

    fn merge(&self, a: &Sparse<u64>, b: &Sparse<u64>) -> Option<Sparse<u64>> {
        merge_sparse(a, b, |x, y| {
            let m: Vec<u64> = x.iter().zip(y).map(|(p, q)| p & q).collect();
            self.cover.all_parts_nonzero(&m).then_some(m)
        })
    }

    fn canonical_label(&self, state: &Sparse<u64>) -> Option<Vec<u32>> {
        let off = self.cover.offsets();
        let mut all = vec![u64::MAX; *off.last().unwrap()];
        for (_, m) in state {
            all.iter_mut().zip(m).for_each(|(a, b)| *a &= b);
        }
        off.windows(2)
            .map(|r| {
                let i = (r[0]..r[1]).find(|&i| all[i] != 0)?;
                Some(((i - r[0]) * 64) as u32 + all[i].trailing_zeros())
            })
            .collect()
    }
}

/// `diam(star(S) ∩ f) < ε` for every fiber class `f`, for the metric
/// `max_s w_s d_0(p_s x, p_s x')` on the window complex, where `d_0` is the
/// max of the listed factor metrics on the alphabet complex. The state keeps, per
/// class, observer and factor, the occupied half-step positions.
pub struct DiameterAdmissibility<'a> {
    complex: Arc<CellComplex>,
    fibers: &'a FiberModel,
    observers: &'a [Arc<CellMap>],
    weights: Vec<f64>,
    measured: Vec<usize>,
    epsilon: f64,
}

impl<'a> DiameterAdmissibility<'a> {
    pub fn new(
        fibers: &'a FiberModel,
        observers: &'a [Arc<CellMap>],
        weights: Vec<f64>,
        measured: Vec<usize>,
        epsilon: f64,
    ) -> Result<Self> {
        let complex = fibers.complex().clone();
        if observers.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if weights.len() != observers.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("one positive weight per observer".into()));
        }
        let base = observers[0].target().clone();
        for p in observers {
            if p.source() != &complex || p.target() != &base {
                return Err(Error::ComplexMismatch);
            }
        }
        for &k in &measured {
            let ok = match base.factors().get(k) {
                Some(Factor::Interval { cells }) => *cells <= 63,
                Some(Factor::Circle { cells }) => *cells <= 64,
                Some(Factor::Points { count, .. }) => *count <= 128,
                None => false,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!("factor {k} cannot be measured")));
            }
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        Ok(DiameterAdmissibility { complex, fibers, observers, weights, measured, epsilon })
    }

    fn bits(f: &Factor, code: u32) -> u128 {
        match f {
            Factor::Points { .. } => 1u128 << code,
            Factor::Interval { .. } => {
                let (lo, hi) = f.closure_halfsteps(code);
                (lo..=hi).fold(0, |acc, p| acc | 1u128 << p)
            }
            Factor::Circle { cells } => {
                let (lo, hi) = f.closure_halfsteps(code);
                (lo..=hi).fold(0, |acc, p| acc | 1u128 << (p % (2 * cells)))
            }
        }
    }

    fn fits(&self, occupancy: &[u128]) -> bool {
        let base = self.observers[0].target();
        let m = self.measured.len();
        occupancy.iter().enumerate().all(|(i, &bits)| {
            let f = &base.factors()[self.measured[i % m]];
            self.weights[i / m] * factor_diameter(f, bits) < self.epsilon
        })
    }
}

/// Diameter of the closure of the occupied positions.
pub fn factor_diameter(f: &Factor, bits: u128) -> f64 {
    if bits == 0 {
        return 0.0;
    }
    let lo = bits.trailing_zeros();
    let hi = 127 - bits.leading_zeros();
    match f {
        Factor::Interval { cells } => (hi - lo) as f64 / (2 * cells) as f64,
        Factor::Circle { cells } => {
            let n = 2 * cells;
            let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
            let rot = |d: u32| ((bits << d) | (bits >> (n - d))) & mask;
            let d = (1..=*cells).rev().find(|&d| bits & rot(d) != 0).unwrap_or(0);
            d as f64 / n as f64
        }
        Factor::Points { positions, .. } => match positions {
            None => f64::from(u8::from(lo != hi)),
            Some(p) => {
                let xs: Vec<f64> = (lo..=hi).filter(|&i| bits >> i & 1 == 1).map(|i| p[i as usize]).collect();
                let max = xs.iter().cloned().fold(f64::MIN, f64::max);
                let min = xs.iter().cloned().fold(f64::MAX, f64::min);
                max - min
            }
        },
    }
}

impl Admissibility for DiameterAdmissibility<'_> {
    type State = Sparse<u128>;

    fn vertex(&self, v: usize) -> Option<Sparse<u128>> {
        let base = self.observers[0].target().clone();
        let mut acc: Sparse<u128> = Vec::new();
        let mut row = vec![0u128; self.observers.len() * self.measured.len()];
        for c in self.complex.star(v) {
            for (s, p) in self.observers.iter().enumerate() {
                let c0 = p.apply(c);
                for (i, &k) in self.measured.iter().enumerate() {
                    row[s * self.measured.len() + i] = Self::bits(&base.factors()[k], base.code(c0, k));
                }
            }
            accumulate(&mut acc, self.fibers.class_of(c), &row, |x, y| *x |= y);
        }
        if self.measured.is_empty() {
            return Some(acc);
        }
        acc.iter().all(|(_, occ)| self.fits(occ)).then_some(acc)
    }

    fn merge(&self, a: &Sparse<u128>, b: &Sparse<u128>) -> Option<Sparse<u128>> {
        merge_sparse(a, b, |x, y| {
            let occ: Vec<u128> = x.iter().zip(y).map(|(p, q)| p | q).collect();
            (self.measured.is_empty() || self.fits(&occ)).then_some(occ)
        })
    }
}
