//! Dynamical systems as window models. For a window `E` the model is a
//! cell complex `X_E` of coordinate data together with observer maps
//! `p_s: X_E → X_e` giving the state of `s·x` at the identity. The action is
//! the relabeling `p_t(s·x) = p_{ts}(x)`, so equivariance is structural.

pub mod gext;
pub mod measure;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{CellComplex, CellMap, FiberModel, Factor};
use crate::error::{Error, Result};
use crate::group::{AmenableGroup, GroupElement, Lattice, Window};

pub use gext::{GExtension, GExtensionCheck};
pub use measure::{Atom, Configuration, MeasureModel};

/// How a generator of `Z^d` acts on a torus `G`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Automorphism {
    Trivial,
    Negation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `A^{Z^d}` with the shift.
    FullShift { dim: usize, alphabet: Factor },
    /// The orbit of one periodic configuration: `pattern` lists the symbols
    /// on the box `[0, period)` in lexicographic order.
    Periodic { dim: usize, period: Vec<u32>, pattern: Vec<u32>, symbols: u32 },
    /// `Y × Z` with the diagonal action, factor map onto `Y`.
    Product { base: Box<SystemSpec>, fiber: Box<SystemSpec> },
    /// `Y ×_σ T^k` with `s(y, g) = (sy, σ(s, y) + s(g))` over a base with a
    /// finite alphabet. `cocycle[i][a][j]` is the rotation of circle `j`, in
    /// grid steps, of generator `e_i` at base symbol `a`.
    Skew {
        base: Box<SystemSpec>,
        cells: u32,
        circles: usize,
        actions: Vec<Automorphism>,
        cocycle: Vec<Vec<Vec<i64>>>,
    },
    /// `x ↦ n·x` on the circle full shift over `Z`, as an extension of its
    /// image by the kernel `{0, 1/n, ...}^Z`.
    Kernel { cells: u32, multiplier: i64 },
}

/// Sup-type metric `ρ(x, x') = max_{|t| ≤ radius} 2^{-|t|} d_0((tx)_e, (tx')_e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub radius: u32,
}

impl Default for Metric {
    fn default() -> Self {
        Metric { radius: 1 }
    }
}

impl Metric {
    pub fn support(&self, d: usize) -> Vec<(GroupElement, f64)> {
        Lattice { d }
            .ball(self.radius as u64)
            .into_iter()
            .map(|t| {
                let w = 0.5f64.powi(t.word_length() as i32);
                (t, w)
            })
            .collect()
    }

    /// Weight of the first coordinate left out by the truncation.
    pub fn tail(&self) -> f64 {
        0.5f64.powi(self.radius as i32 + 1)
    }

    /// `F·T`, the window on which `ρ_F` is exact up to the tail.
    pub fn window_for(&self, f: &Window) -> Window {
        let mut out = Window::empty(f.dim());
        for (t, _) in self.support(f.dim()) {
            out = out.union(&f.translate(&t));
        }
        out
    }

    /// Weights `W_u = max_{s ∈ F, t ∈ T, ts = u} 2^{-|t|}` over `u ∈ F·T`.
    pub fn observer_weights(&self, f: &Window) -> Vec<(GroupElement, f64)> {
        let mut best: HashMap<GroupElement, f64> = HashMap::new();
        for s in f.iter() {
            for (t, w) in self.support(f.dim()) {
                let u = t.add_unchecked(s);
                let e = best.entry(u).or_insert(0.0);
                *e = e.max(w);
            }
        }
        let mut out: Vec<(GroupElement, f64)> = best.into_iter().collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

/// Distance between two vertex codes of one factor.
pub fn vertex_distance(f: &Factor, a: u32, b: u32) -> f64 {
    match f {
        Factor::Interval { cells } => (a as f64 - b as f64).abs() / (2 * cells) as f64,
        Factor::Circle { cells } => {
            let n = 2 * cells;
            let d = (a + n - b) % n;
            d.min(n - d) as f64 / n as f64
        }
        Factor::Points { positions: None, .. } => f64::from(u8::from(a != b)),
        Factor::Points { positions: Some(p), .. } => (p[a as usize] - p[b as usize]).abs(),
    }
}

/// `d_0` on the alphabet: the max over its factors.
pub fn alphabet_distance(alphabet: &CellComplex, a: usize, b: usize) -> f64 {
    alphabet
        .factors()
        .iter()
        .enumerate()
        .map(|(k, f)| vertex_distance(f, alphabet.code(a, k), alphabet.code(b, k)))
        .fold(0.0, f64::max)
}

pub fn alphabet_diameter(alphabet: &CellComplex) -> f64 {
    alphabet
        .factors()
        .iter()
        .map(|f| match f {
            Factor::Interval { .. } => 1.0,
            Factor::Circle { .. } => 0.5,
            Factor::Points { count: 1, .. } => 0.0,
            Factor::Points { positions: None, .. } => 1.0,
            Factor::Points { positions: Some(p), .. } => {
                let max = p.iter().cloned().fold(f64::MIN, f64::max);
                let min = p.iter().cloned().fold(f64::MAX, f64::min);
                max - min
            }
        })
        .fold(0.0, f64::max)
}

/// A validated system.
#[derive(Clone, Debug, PartialEq)]
pub struct System {
    spec: SystemSpec,
    dim: usize,
    alphabet: Arc<CellComplex>,
    orbit: Vec<Vec<u32>>,
}

/// `X_E` with its observers and the fibers of the factor map.
#[derive(Clone, Debug)]
pub struct WindowModel {
    pub window: Window,
    pub complex: Arc<CellComplex>,
    pub alphabet: Arc<CellComplex>,
    pub observers: Vec<Arc<CellMap>>,
    pub fibers: FiberModel,
    /// `π_E` onto the base window complex, if the system has a factor.
    pub factor: Option<Arc<CellMap>>,
}

impl WindowModel {
    pub fn observer(&self, s: &GroupElement) -> Option<&Arc<CellMap>> {
        self.window.iter().position(|e| e == s).map(|i| &self.observers[i])
    }

    /// `ρ_F(x, x')` between vertices and the truncation error bound.
    pub fn rho(&self, metric: &Metric, f: &Window, x: usize, x2: usize) -> Result<(f64, f64)> {
        let mut value: f64 = 0.0;
        for (u, w) in metric.observer_weights(f) {
            let p = self.observer(&u).ok_or(Error::WindowTooSmall {
                required: metric.window_for(f).len(),
                found: self.window.len(),
            })?;
            value = value.max(w * alphabet_distance(&self.alphabet, p.apply(x), p.apply(x2)));
        }
        Ok((value, metric.tail() * alphabet_diameter(&self.alphabet)))
    }

    /// Observers of `F·T` with their weights, in the order of `F·T`.
    pub fn weighted_observers(&self, metric: &Metric, f: &Window) -> Result<(Vec<Arc<CellMap>>, Vec<f64>)> {
        let mut maps = Vec::new();
        let mut weights = Vec::new();
        for (u, w) in metric.observer_weights(f) {
            let p = self.observer(&u).ok_or(Error::WindowTooSmall {
                required: metric.window_for(f).len(),
                found: self.window.len(),
            })?;
            maps.push(p.clone());
            weights.push(w);
        }
        Ok((maps, weights))
    }

    /// `x ↦ (c·x)|_E'` from this model onto the model `small` of `E'`, with
    /// `E' + c` inside this window: the cell of `small` whose observers read
    /// what the observers at `E' + c` read here. Fails when the observers of
    /// `small` do not determine its cells.
    pub fn shifted_restriction(&self, small: &WindowModel, c: &GroupElement) -> Result<CellMap> {
        let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
        for z in 0..small.complex.len() {
            let key: Vec<u32> = small.observers.iter().map(|p| p.apply(z) as u32).collect();
            if index.insert(key, z as u32).is_some() {
                return Err(Error::InvalidModel(format!("observers of {:?} do not separate cells", small.window)));
            }
        }
        let reads = small
            .window
            .iter()
            .map(|s| {
                let u = s.add_unchecked(c);
                self.observer(&u).cloned().ok_or(Error::WindowTooSmall { required: small.window.len(), found: self.window.len() })
            })
            .collect::<Result<Vec<_>>>()?;
        let table = (0..self.complex.len())
            .map(|x| {
                let key: Vec<u32> = reads.iter().map(|p| p.apply(x) as u32).collect();
                index.get(&key).copied().ok_or_else(|| Error::InvalidModel(format!("cell {x} has no restriction")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellMap::new_unchecked(self.complex.clone(), small.complex.clone(), table))
    }

    /// Base factor indices when `π_E` is a coordinate projection.
    pub fn base_factors(&self) -> Option<&[usize]> {
        self.factor.as_ref()?;
        self.fibers.base_factors()
    }

    /// The fiber over a base vertex as a complex of its own, with the
    /// inclusion into `X_E`.
    pub fn fiber(&self, base_cell: usize) -> Result<(Arc<CellComplex>, CellMap)> {
        let Some(pi) = &self.factor else {
            let id = CellMap::identity(self.complex.clone());
            return Ok((self.complex.clone(), id));
        };
        if !pi.target().is_vertex(base_cell) {
            return Err(Error::InvalidParameter(format!("base cell {base_cell} is not a vertex")));
        }
        match self.fibers.base_factors() {
            Some(base) => {
                let fixed: Vec<u32> = (0..base.len()).map(|i| pi.target().code(base_cell, i)).collect();
                let free: Vec<usize> = (0..self.complex.factors().len()).filter(|k| !base.contains(k)).collect();
                if free.is_empty() {
                    let sub = Arc::new(CellComplex::new(vec![Factor::points(1)])?);
                    let mut codes = vec![0u32; self.complex.factors().len()];
                    for (i, &k) in base.iter().enumerate() {
                        codes[k] = fixed[i];
                    }
                    let cell = self.complex.cell_of(&codes) as u32;
                    return Ok((sub.clone(), CellMap::new_unchecked(sub, self.complex.clone(), vec![cell])));
                }
                let sub = Arc::new(CellComplex::new(free.iter().map(|&k| self.complex.factors()[k].clone()).collect())?);
                let table = (0..sub.len())
                    .map(|c| {
                        let mut codes = vec![0u32; self.complex.factors().len()];
                        for (i, &k) in base.iter().enumerate() {
                            codes[k] = fixed[i];
                        }
                        for (i, &k) in free.iter().enumerate() {
                            codes[k] = sub.code(c, i);
                        }
                        self.complex.cell_of(&codes) as u32
                    })
                    .collect();
                Ok((sub.clone(), CellMap::new_unchecked(sub, self.complex.clone(), table)))
            }
            None => {
                let cells: Vec<u32> =
                    (0..self.complex.len()).filter(|&c| pi.apply(c) == base_cell).map(|c| c as u32).collect();
                if cells.is_empty() {
                    return Err(Error::EmptyFiber(base_cell));
                }
                if cells.iter().any(|&c| !self.complex.is_vertex(c as usize)) {
                    return Err(Error::InvalidModel("fiber over a vertex is not zero-dimensional".into()));
                }
                let sub = Arc::new(CellComplex::new(vec![Factor::points(cells.len() as u32)])?);
                Ok((sub.clone(), CellMap::new(sub, self.complex.clone(), cells)?))
            }
        }
    }
}

fn points_alphabet(spec: &SystemSpec) -> bool {
    matches!(spec, SystemSpec::Periodic { .. })
        || matches!(spec, SystemSpec::FullShift { alphabet: Factor::Points { .. }, .. })
}

impl System {
    pub fn new(spec: SystemSpec) -> Result<Self> {
        let (dim, alphabet, orbit) = match &spec {
            SystemSpec::FullShift { dim, alphabet } => {
                let c = CellComplex::new(vec![alphabet.clone()])?;
                (*dim, c, Vec::new())
            }
            SystemSpec::Periodic { dim, period, pattern, symbols } => {
                if period.len() != *dim || period.contains(&0) {
                    return Err(Error::InvalidParameter("one positive period per axis".into()));
                }
                let vol: usize = period.iter().map(|&p| p as usize).product();
                if pattern.len() != vol || pattern.iter().any(|&a| a >= *symbols) {
                    return Err(Error::InvalidParameter("pattern must fill the period box with valid symbols".into()));
                }
                let bx = Window::box_with(&vec![0; *dim], &period.iter().map(|&p| p as i64).collect::<Vec<_>>());
                let mut orbit: Vec<Vec<u32>> = Vec::new();
                for k in bx.iter() {
                    let translate: Vec<u32> =
                        bx.iter().map(|t| pattern[box_index(period, &t.add_unchecked(k))]).collect();
                    if !orbit.contains(&translate) {
                        orbit.push(translate);
                    }
                }
                let c = CellComplex::new(vec![Factor::points(*symbols)])?;
                (*dim, c, orbit)
            }
            SystemSpec::Product { base, fiber } => {
                let (b, f) = (System::new((**base).clone())?, System::new((**fiber).clone())?);
                if b.dim != f.dim {
                    return Err(Error::DimensionMismatch { expected: b.dim, found: f.dim });
                }
                (b.dim, b.alphabet.product(&f.alphabet), Vec::new())
            }
            SystemSpec::Skew { base, cells, circles, actions, cocycle } => {
                let b = System::new((**base).clone())?;
                if !points_alphabet(base) {
                    return Err(Error::InvalidParameter("skew products need a base with a finite alphabet".into()));
                }
                if *cells < 2 || *circles == 0 {
                    return Err(Error::InvalidParameter("torus needs at least one circle with two cells".into()));
                }
                let symbols = b.alphabet.len();
                if actions.len() != b.dim
                    || cocycle.len() != b.dim
                    || cocycle.iter().any(|g| g.len() != symbols || g.iter().any(|r| r.len() != *circles))
                {
                    return Err(Error::InvalidParameter(format!(
                        "cocycle needs {} generators x {symbols} symbols x {circles} circles",
                        b.dim
                    )));
                }
                let mut f = b.alphabet.factors().to_vec();
                f.extend(std::iter::repeat_n(Factor::Circle { cells: *cells }, *circles));
                (b.dim, CellComplex::new(f)?, Vec::new())
            }
            SystemSpec::Kernel { cells, multiplier } => {
                if !(1..=2).contains(multiplier) || cells % *multiplier as u32 != 0 || *cells / (*multiplier as u32) < 1 {
                    return Err(Error::InvalidParameter(
                        "kernel models ship for multipliers 1 and 2 dividing the cell count".into(),
                    ));
                }
                (1, CellComplex::new(vec![Factor::Circle { cells: *cells }])?, Vec::new())
            }
        };
        if dim == 0 {
            return Err(Error::InvalidParameter("group dimension must be >= 1".into()));
        }
        let sys = System { spec, dim, alphabet: Arc::new(alphabet), orbit };
        if let SystemSpec::Skew { .. } = &sys.spec {
            sys.check_cocycle()?;
        }
        Ok(sys)
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet(&self) -> &Arc<CellComplex> {
        &self.alphabet
    }

    /// The factor system, if any.
    pub fn base(&self) -> Option<System> {
        match &self.spec {
            SystemSpec::Product { base, .. } | SystemSpec::Skew { base, .. } => {
                Some(System::new((**base).clone()).expect("validated"))
            }
            SystemSpec::Kernel { cells, multiplier } => Some(
                System::new(SystemSpec::FullShift {
                    dim: 1,
                    alphabet: Factor::Circle { cells: cells / *multiplier as u32 },
                })
                .expect("valid"),
            ),
            _ => None,
        }
    }

    /// Common resolution of the interval and circle factors of the alphabet.
    pub fn resolution(&self) -> Option<u32> {
        self.alphabet.resolution()
    }

    /// The same system with every interval and circle subdivided by `m`.
    pub fn refined(&self, m: u32) -> Result<System> {
        if m == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        fn go(s: &SystemSpec, m: u32) -> SystemSpec {
            match s {
                SystemSpec::FullShift { dim, alphabet } => {
                    SystemSpec::FullShift { dim: *dim, alphabet: alphabet.subdivided(m) }
                }
                SystemSpec::Periodic { .. } => s.clone(),
                SystemSpec::Product { base, fiber } => {
                    SystemSpec::Product { base: Box::new(go(base, m)), fiber: Box::new(go(fiber, m)) }
                }
                SystemSpec::Skew { base, cells, circles, actions, cocycle } => SystemSpec::Skew {
                    base: Box::new(go(base, m)),
                    cells: cells * m,
                    circles: *circles,
                    actions: actions.clone(),
                    cocycle: cocycle
                        .iter()
                        .map(|g| g.iter().map(|r| r.iter().map(|&x| x * m as i64).collect()).collect())
                        .collect(),
                },
                SystemSpec::Kernel { cells, multiplier } => {
                    SystemSpec::Kernel { cells: cells * m, multiplier: *multiplier }
                }
            }
        }
        System::new(go(&self.spec, m))
    }

    /// The system at alphabet resolution `r` (a multiple of the current one).
    pub fn at_resolution(&self, r: u32) -> Result<System> {
        match self.resolution() {
            None => Ok(self.clone()),
            Some(q) if r >= q && r % q == 0 => self.refined(r / q),
            Some(q) => Err(Error::ResolutionMismatch { requested: r, base: q }),
        }
    }

    /// A model with observers at every element of `w`: `X_w` itself, or the
    /// model of the box spanned by `w` and the identity when coordinates are
    /// read along paths from the identity.
    pub fn reading_window(&self, w: &Window) -> Result<WindowModel> {
        match self.window(w) {
            Err(Error::InvalidParameter(_)) => {
                let d = w.dim();
                let (mut lo, mut hi) = (vec![0i64; d], vec![0i64; d]);
                for g in w.iter() {
                    for (i, &c) in g.coords().iter().enumerate() {
                        lo[i] = lo[i].min(c);
                        hi[i] = hi[i].max(c);
                    }
                }
                let sides: Vec<i64> = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).collect();
                self.window(&Window::box_with(&lo, &sides))
            }
            other => other,
        }
    }

    /// The window model `X_E`.
    pub fn window(&self, e: &Window) -> Result<WindowModel> {
        if e.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if e.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: e.dim() });
        }
        let elems: Vec<GroupElement> = e.iter().cloned().collect();
        match &self.spec {
            SystemSpec::FullShift { alphabet, .. } => {
                let complex = Arc::new(CellComplex::new(vec![alphabet.clone(); elems.len()])?);
                let observers = (0..elems.len())
                    .map(|k| CellMap::projection(complex.clone(), &[k]).map(|p| Arc::new(retarget(p, &self.alphabet))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.model(e.clone(), complex.clone(), observers, FiberModel::single(complex), None))
            }
            SystemSpec::Periodic { period, .. } => {
                let complex = Arc::new(CellComplex::new(vec![Factor::points(self.orbit.len() as u32)])?);
                let observers = elems
                    .iter()
                    .map(|s| {
                        let i = box_index(period, s);
                        let table = self.orbit.iter().map(|y| y[i]).collect();
                        CellMap::new(complex.clone(), self.alphabet.clone(), table).map(Arc::new)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.model(e.clone(), complex.clone(), observers, FiberModel::single(complex), None))
            }
            SystemSpec::Product { base, fiber } => {
                let (b, f) = (System::new((**base).clone())?, System::new((**fiber).clone())?);
                let (yb, zf) = (b.window(e)?, f.window(e)?);
                let complex = Arc::new(yb.complex.product(&zf.complex));
                let zn = zf.complex.len();
                let an = f.alphabet.len();
                let observers = yb
                    .observers
                    .iter()
                    .zip(&zf.observers)
                    .map(|(py, pz)| {
                        let table =
                            (0..complex.len()).map(|c| (py.apply(c / zn) * an + pz.apply(c % zn)) as u32).collect();
                        Ok(Arc::new(CellMap::new_unchecked(complex.clone(), self.alphabet.clone(), table)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let nb = yb.complex.factors().len();
                let base_idx: Vec<usize> = (0..nb).collect();
                let fibers = FiberModel::projection(complex.clone(), base_idx.clone())?;
                let pi = CellMap::projection(complex.clone(), &base_idx)?;
                let pi = retarget(pi, &yb.complex);
                Ok(self.model(e.clone(), complex, observers, fibers, Some(Arc::new(pi))))
            }
            SystemSpec::Skew { base, cells, circles, .. } => {
                let b = System::new((**base).clone())?;
                let yb = b.window(e)?;
                let mut f = yb.complex.factors().to_vec();
                f.extend(std::iter::repeat_n(Factor::Circle { cells: *cells }, *circles));
                let complex = Arc::new(CellComplex::new(f)?);
                let nb = yb.complex.factors().len();
                let an = b.alphabet.len();
                let gn = complex.len() / yb.complex.len();
                let observers = elems
                    .iter()
                    .map(|s| {
                        let py = yb.observer(s).expect("s in window");
                        let mut table = vec![0u32; complex.len()];
                        for y in 0..yb.complex.len() {
                            let (rot, neg) = self.cocycle_at(&yb, s, y)?;
                            for g in 0..gn {
                                let c = y * gn + g;
                                let codes: Vec<u32> = (0..*circles)
                                    .map(|j| rotate(complex.code(c, nb + j), rot[j], neg, *cells))
                                    .collect();
                                let gcell: usize = codes.iter().fold(0usize, |acc, &x| acc * (2 * *cells as usize) + x as usize);
                                table[c] = (py.apply(y) * (self.alphabet.len() / an) + gcell) as u32;
                            }
                        }
                        Ok(Arc::new(CellMap::new_unchecked(complex.clone(), self.alphabet.clone(), table)))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let base_idx: Vec<usize> = (0..nb).collect();
                let fibers = FiberModel::projection(complex.clone(), base_idx.clone())?;
                let pi = retarget(CellMap::projection(complex.clone(), &base_idx)?, &yb.complex);
                Ok(self.model(e.clone(), complex, observers, fibers, Some(Arc::new(pi))))
            }
            SystemSpec::Kernel { cells, multiplier } => {
                let complex = Arc::new(CellComplex::new(vec![Factor::Circle { cells: *cells }; elems.len()])?);
                let observers = (0..elems.len())
                    .map(|k| CellMap::projection(complex.clone(), &[k]).map(|p| Arc::new(retarget(p, &self.alphabet))))
                    .collect::<Result<Vec<_>>>()?;
                let base = self.base().expect("kernel has a base").window(e)?;
                let m = 2 * (cells / *multiplier as u32);
                let table = (0..complex.len())
                    .map(|c| {
                        let codes: Vec<u32> = complex.codes(c).into_iter().map(|x| x % m).collect();
                        base.complex.cell_of(&codes) as u32
                    })
                    .collect();
                let pi = CellMap::new_unchecked(complex.clone(), base.complex.clone(), table);
                let fibers = FiberModel::from_map(&pi)?;
                Ok(self.model(e.clone(), complex, observers, fibers, Some(Arc::new(pi))))
            }
        }
    }

    fn model(
        &self,
        window: Window,
        complex: Arc<CellComplex>,
        observers: Vec<Arc<CellMap>>,
        fibers: FiberModel,
        factor: Option<Arc<CellMap>>,
    ) -> WindowModel {
        WindowModel { window, complex, alphabet: self.alphabet.clone(), observers, fibers, factor }
    }

    /// `σ(s, y)` in grid steps per circle and whether `s` acts on `G` by
    /// negation, for a base vertex `y` of the window model, following the
    /// monotone lattice path from the identity to `s`.
    fn cocycle_at(&self, yb: &WindowModel, s: &GroupElement, y: usize) -> Result<(Vec<i64>, bool)> {
        let SystemSpec::Skew { cells, circles, actions, cocycle, .. } = &self.spec else {
            unreachable!("cocycle of a skew product")
        };
        let q = *cells as i64;
        let symbol = |u: &GroupElement| -> Result<usize> {
            let p = yb.observer(u).ok_or_else(|| {
                Error::InvalidParameter(format!("window lacks {u:?} on the path to {s:?}"))
            })?;
            Ok(p.apply(y))
        };
        let mut sigma = vec![0i64; *circles];
        let mut neg = false;
        let mut u = GroupElement::identity(self.dim);
        for (i, &target) in s.coords().iter().enumerate() {
            let flip = actions[i] == Automorphism::Negation;
            let mut step = vec![0i64; self.dim];
            step[i] = target.signum();
            let step = GroupElement::new(step)?;
            for _ in 0..target.abs() {
                if target > 0 {
                    // σ(u + e_i) = c_i(y_u) + α_i(σ(u))
                    let a = symbol(&u)?;
                    for j in 0..*circles {
                        let prev = if flip { -sigma[j] } else { sigma[j] };
                        sigma[j] = (cocycle[i][a][j] + prev).rem_euclid(q);
                    }
                    u = u.add_unchecked(&step);
                } else {
                    // σ(u − e_i) = α_i(σ(u) − c_i(y_{u−e_i}))
                    u = u.add_unchecked(&step);
                    let a = symbol(&u)?;
                    for j in 0..*circles {
                        let diff = sigma[j] - cocycle[i][a][j];
                        sigma[j] = (if flip { -diff } else { diff }).rem_euclid(q);
                    }
                }
                neg ^= flip;
            }
        }
        Ok((sigma, neg))
    }

    /// The cocycle identity for every pair of generators `e_i, e_j`: going
    /// `e_i` then `e_j` and `e_j` then `e_i` give the same rotation, read on
    /// every base pattern of the window `{0, e_i, e_j}`. Together with the
    /// definition of `σ` along monotone paths this makes `σ` path independent.
    pub fn check_cocycle(&self) -> Result<()> {
        let SystemSpec::Skew { base, circles, cells, actions, cocycle } = &self.spec else {
            return Ok(());
        };
        let b = System::new((**base).clone())?;
        let d = self.dim;
        let q = *cells as i64;
        let act = |i: usize, x: i64| if actions[i] == Automorphism::Negation { -x } else { x };
        for i in 0..d {
            for j in i + 1..d {
                let mut ei = vec![0i64; d];
                ei[i] = 1;
                let mut ej = vec![0i64; d];
                ej[j] = 1;
                let (ei, ej) = (GroupElement::new(ei)?, GroupElement::new(ej)?);
                let w = Window::new(d, [GroupElement::identity(d), ei.clone(), ej.clone()])?;
                let yb = b.window(&w)?;
                let at = |u: &GroupElement, y: usize| yb.observer(u).expect("in window").apply(y);
                for y in 0..yb.complex.len() {
                    let (a0, ai, aj) = (at(&GroupElement::identity(d), y), at(&ei, y), at(&ej, y));
                    let ok = (0..*circles).all(|k| {
                        let via_i = cocycle[j][ai][k] + act(j, cocycle[i][a0][k]);
                        let via_j = cocycle[i][aj][k] + act(i, cocycle[j][a0][k]);
                        (via_i - via_j).rem_euclid(q) == 0
                    });
                    if !ok {
                        return Err(Error::CocycleViolation { s: ei.coords().to_vec(), t: ej.coords().to_vec(), y });
                    }
                }
            }
        }
        Ok(())
    }

    /// Generator data of the measure-theoretic base: the base window vertex
    /// for a periodic configuration.
    pub fn vertex_of(&self, y: &Configuration, e: &Window) -> Result<usize> {
        let model = self.window(e)?;
        match &self.spec {
            SystemSpec::FullShift { alphabet: Factor::Points { .. }, .. } => {
                let codes: Vec<u32> = e.iter().map(|s| y.at(s)).collect::<Result<_>>()?;
                Ok(model.complex.cell_of(&codes))
            }
            SystemSpec::Periodic { period, .. } => {
                let bx = Window::box_with(&vec![0; self.dim], &period.iter().map(|&p| p as i64).collect::<Vec<_>>());
                let values: Vec<u32> = bx.iter().map(|t| y.at(t)).collect::<Result<_>>()?;
                self.orbit
                    .iter()
                    .position(|o| *o == values && y.has_period(period))
                    .ok_or_else(|| Error::InvalidParameter("configuration is not in the orbit".into()))
            }
            _ => Err(Error::InvalidParameter("measures need a base with a finite alphabet".into())),
        }
    }

    /// Checks `π(s·x) = s·π(x)` on the window `E` in observer form:
    /// `π_0 ∘ p_s = p_s ∘ π_E` for every `s ∈ E`.
    pub fn check_equivariance(&self, e: &Window) -> Result<bool> {
        let Some(base) = self.base() else { return Ok(true) };
        let model = self.window(e)?;
        let bmodel = base.window(e)?;
        let pi = model.factor.as_ref().expect("factor");
        let pa = self.alphabet_factor(&base)?;
        for i in 0..e.len() {
            let (px, pb) = (&model.observers[i], &bmodel.observers[i]);
            for c in 0..model.complex.len() {
                if pa.apply(px.apply(c)) != pb.apply(pi.apply(c)) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `π` on the alphabet.
    pub fn alphabet_factor(&self, base: &System) -> Result<CellMap> {
        match &self.spec {
            SystemSpec::Product { .. } | SystemSpec::Skew { .. } => {
                let idx: Vec<usize> = (0..base.alphabet.factors().len()).collect();
                Ok(retarget(CellMap::projection(self.alphabet.clone(), &idx)?, &base.alphabet))
            }
            SystemSpec::Kernel { cells, multiplier } => {
                let m = 2 * (cells / *multiplier as u32);
                let table = (0..self.alphabet.len() as u32).map(|c| c % m).collect();
                CellMap::new(self.alphabet.clone(), base.alphabet.clone(), table)
            }
            _ => Err(Error::InvalidParameter("system has no factor".into())),
        }
    }
}

/// The same map with the target replaced by an equal complex shared elsewhere.
fn retarget(map: CellMap, target: &Arc<CellComplex>) -> CellMap {
    debug_assert_eq!(**map.target(), **target);
    CellMap::new_unchecked(map.source().clone(), target.clone(), map.table().to_vec())
}

fn rotate(code: u32, steps: i64, neg: bool, cells: u32) -> u32 {
    let n = 2 * cells as i64;
    let c = if neg { -(code as i64) } else { code as i64 };
    (c + 2 * steps).rem_euclid(n) as u32
}

/// Row-major index of `t mod period` in the period box.
fn box_index(period: &[u32], t: &GroupElement) -> usize {
    t.coords().iter().zip(period).fold(0usize, |acc, (&c, &p)| acc * p as usize + c.rem_euclid(p as i64) as usize)
}
