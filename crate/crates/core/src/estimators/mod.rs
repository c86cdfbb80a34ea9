//! Per-stage invariants on window models: `D(U^F|Y)`, fiber and measure
//! versions, `Wdim_ε` and `N_ε`, and the traces built from them.

pub mod separated;
pub mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{d_conditional, d_unconditional, wdim, CellMap, Cover, DReport, JoinCover, SolveOptions};
use crate::error::{Error, Result};
use crate::group::{GroupElement, Window};
use crate::rational::{self, Rational};
use crate::systems::{alphabet_distance, Configuration, MeasureModel, Metric, System, WindowModel};

pub use separated::{ball_cover, check_mesh, check_separated, greedy_separated, max_separated, Packing};
pub use trace::{ow_limit, ConvergenceTrace, MetricTrace, OwSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    D,
    DConditional,
    Fiber,
    Measure,
    Wdim,
    NEps,
    Mesh,
}

impl Quantity {
    pub fn is_metric(&self) -> bool {
        matches!(self, Quantity::NEps | Quantity::Mesh)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberValue {
    pub base: usize,
    #[serde(with = "rational::serde_str")]
    pub weight: Rational,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageWitness {
    None,
    /// Vertex groups `S_i`; the cover is `{star(S_i)}`.
    Cover { groups: Vec<Vec<usize>> },
    /// An ε-separated set of vertices of one fiber.
    Separated { base: usize, points: Vec<usize> },
    /// Groups of diameter `< ε`, one list per fiber.
    Mesh { fibers: Vec<Vec<Vec<usize>>> },
    Fibers { values: Vec<FiberValue>, equivariant: bool },
}

/// One stage: a bracket on the raw value (`D`, or the count `N`) at a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub quantity: Quantity,
    pub window: Window,
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
    pub epsilon: Option<f64>,
    pub resolution: Option<u32>,
    pub exact: bool,
    pub witness: StageWitness,
}

impl StageReport {
    fn from_d(quantity: Quantity, window: &Window, rep: DReport) -> Self {
        StageReport {
            quantity,
            window: window.clone(),
            lower: Rational::from_integer(rep.lower as i64),
            upper: Rational::from_integer(rep.upper as i64),
            epsilon: None,
            resolution: rep.resolution,
            exact: rep.settled(),
            witness: StageWitness::Cover { groups: rep.witness.groups },
        }
    }

    pub fn settled(&self) -> bool {
        self.lower == self.upper
    }

    /// `raw/|F|`, or `log N/(|F| |log ε|)` for metric quantities.
    pub fn normalized(&self) -> (f64, f64) {
        let size = self.window.len() as f64;
        let f = |x: Rational| {
            let x = rational::to_f64(x);
            match (self.quantity.is_metric(), self.epsilon) {
                (true, Some(e)) => x.ln() / (size * e.ln().abs()),
                _ => x / size,
            }
        };
        (f(self.lower), f(self.upper))
    }
}

/// The outcome of comparing two brackets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Certain,
    Refuted,
    Unresolved,
}

/// `a ≤ b` for values known only up to brackets.
pub fn bracket_le(a: (Rational, Rational), b: (Rational, Rational)) -> Comparison {
    if a.1 <= b.0 {
        Comparison::Certain
    } else if a.0 > b.1 {
        Comparison::Refuted
    } else {
        Comparison::Unresolved
    }
}

/// The system at resolution `r` and the seed cover subdivided to match.
pub fn prepare(sys: &System, u: &Cover, r: Option<u32>) -> Result<(System, Arc<Cover>)> {
    if **u.complex() != **sys.alphabet() {
        return Err(Error::ComplexMismatch);
    }
    match (r, sys.resolution()) {
        (Some(r), Some(q)) => {
            let fine = sys.at_resolution(r)?;
            let u = u.subdivide(r / q)?;
            let u = Cover::new(fine.alphabet().clone(), u.members().to_vec())?;
            Ok((fine, Arc::new(u)))
        }
        _ => Ok((sys.clone(), Arc::new(Cover::new(sys.alphabet().clone(), u.members().to_vec())?))),
    }
}

/// `U^F = ∨_{s∈F} p_s^{-1}(U)` on the window model.
pub fn cover_join(model: &WindowModel, u: &Arc<Cover>, f: &Window) -> Result<JoinCover> {
    let parts = f
        .iter()
        .map(|s| {
            let p = model.observer(s).ok_or(Error::WindowTooSmall { required: f.len(), found: model.window.len() })?;
            Ok((u.clone(), p.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    JoinCover::new(model.complex.clone(), parts)
}

/// `D(U^F|Y)` at resolution `r`.
pub fn stage_d_conditional(sys: &System, u: &Cover, f: &Window, r: Option<u32>, opts: &SolveOptions) -> Result<StageReport> {
    let (sys, u) = prepare(sys, u, r)?;
    let model = sys.window(f)?;
    let j = cover_join(&model, &u, f)?;
    Ok(StageReport::from_d(Quantity::DConditional, f, d_conditional(&j, &model.fibers, opts)?))
}

/// `D(U^F)` at resolution `r`.
pub fn stage_d_unconditional(sys: &System, u: &Cover, f: &Window, r: Option<u32>, opts: &SolveOptions) -> Result<StageReport> {
    let (sys, u) = prepare(sys, u, r)?;
    let model = sys.window(f)?;
    let j = cover_join(&model, &u, f)?;
    Ok(StageReport::from_d(Quantity::D, f, d_unconditional(&j, opts)?))
}

/// `D(U^F|_K)` for the fiber `K` over the base vertex `y` of the window model.
pub fn stage_fiber(sys: &System, u: &Cover, f: &Window, y: usize, r: Option<u32>, opts: &SolveOptions) -> Result<StageReport> {
    let (sys, u) = prepare(sys, u, r)?;
    let model = sys.window(f)?;
    let rep = fiber_d(&model, &u, f, y, opts)?;
    Ok(StageReport::from_d(Quantity::Fiber, f, rep))
}

/// `U^F` restricted to the fiber over base vertex `y`.
pub fn fiber_join(model: &WindowModel, u: &Arc<Cover>, f: &Window, y: usize) -> Result<JoinCover> {
    let (sub, incl) = model.fiber(y)?;
    let parts = f
        .iter()
        .map(|s| {
            let p = model.observer(s).ok_or(Error::WindowTooSmall { required: f.len(), found: model.window.len() })?;
            Ok((u.clone(), Arc::new(incl.compose(p)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    JoinCover::new(sub, parts)
}

fn fiber_d(model: &WindowModel, u: &Arc<Cover>, f: &Window, y: usize, opts: &SolveOptions) -> Result<DReport> {
    d_unconditional(&fiber_join(model, u, f, y)?, opts)
}

/// Base vertex of a configuration in the window model of `F`.
pub fn base_vertex(sys: &System, y: &Configuration, f: &Window) -> Result<usize> {
    let base = sys.base().ok_or(Error::InvalidModel("system has no factor".into()))?;
    base.vertex_of(y, f)
}

/// `Σ ν(y) D(U^F|_{π^{-1}(y)})` with the equivariance check
/// `D(U^{F+s}|_{π^{-1}(y)}) = D(U^F|_{π^{-1}(sy)})` on the generators.
pub fn stage_d_measure(
    sys: &System,
    nu: &MeasureModel,
    u: &Cover,
    f: &Window,
    r: Option<u32>,
    opts: &SolveOptions,
) -> Result<StageReport> {
    let (sys, u) = prepare(sys, u, r)?;
    let model = sys.window(f)?;
    let mut values = Vec::new();
    let (mut lower, mut upper) = (Rational::from_integer(0), Rational::from_integer(0));
    let mut exact = true;
    for atom in nu.atoms() {
        let y = base_vertex(&sys, &atom.configuration, f)?;
        let rep = fiber_d(&model, &u, f, y, opts)?;
        lower += atom.weight * Rational::from_integer(rep.lower as i64);
        upper += atom.weight * Rational::from_integer(rep.upper as i64);
        exact &= rep.settled();
        values.push(FiberValue { base: y, weight: atom.weight, lower: rep.lower, upper: rep.upper });
    }
    let mut equivariant = true;
    for s in GroupElement::generators(f.dim()) {
        let fs = f.translate(&s);
        let shifted = sys.reading_window(&fs)?;
        for atom in nu.atoms() {
            let here = fiber_d(&shifted, &u, &fs, base_vertex(&sys, &atom.configuration, &shifted.window)?, opts)?;
            let sy = atom.configuration.shifted(&s)?;
            let there = fiber_d(&model, &u, f, base_vertex(&sys, &sy, f)?, opts)?;
            equivariant &= (here.lower, here.upper) == (there.lower, there.upper);
        }
    }
    Ok(StageReport {
        quantity: Quantity::Measure,
        window: f.clone(),
        lower,
        upper,
        epsilon: None,
        resolution: r,
        exact,
        witness: StageWitness::Fibers { values, equivariant },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UscReport {
    pub lower: usize,
    pub upper: usize,
    /// Per neighbor: agreement radius with `y` and the fiber bracket.
    pub neighbors: Vec<(u32, usize, usize)>,
    /// First index from which every neighbor's value is certainly `≤` the
    /// value at `y`.
    pub tail_from: Option<usize>,
    pub radius: Option<u32>,
}

/// Largest `R ≤ cap` with `y = z` on `[-R, R]^d`.
pub fn agreement_radius(y: &Configuration, z: &Configuration, cap: u32) -> u32 {
    let d = y.dim();
    let mut r = 0;
    while r < cap {
        let cube = Window::box_with(&vec![-(r as i64 + 1); d], &vec![2 * r as i64 + 3; d]);
        if !cube.iter().all(|t| y.at(t).ok() == z.at(t).ok()) {
            break;
        }
        r += 1;
    }
    r
}

/// Upper semicontinuity of `y ↦ D(U^F|_{π^{-1}(y)})` along neighbors `z_k → y`.
pub fn usc_probe(
    sys: &System,
    u: &Cover,
    f: &Window,
    y: &Configuration,
    neighbors: &[Configuration],
    r: Option<u32>,
    opts: &SolveOptions,
) -> Result<UscReport> {
    let (sys, u) = prepare(sys, u, r)?;
    let model = sys.window(f)?;
    let at = fiber_d(&model, &u, f, base_vertex(&sys, y, f)?, opts)?;
    let mut out = UscReport { lower: at.lower, upper: at.upper, neighbors: Vec::new(), tail_from: None, radius: None };
    for z in neighbors {
        let rep = fiber_d(&model, &u, f, base_vertex(&sys, z, f)?, opts)?;
        out.neighbors.push((agreement_radius(y, z, 32), rep.lower, rep.upper));
    }
    let n = out.neighbors.len();
    let from = (0..=n).rev().take_while(|&k| k == n || out.neighbors[k].2 <= at.lower).last();
    if let Some(k) = from.filter(|&k| k < n) {
        out.tail_from = Some(k);
        out.radius = Some(out.neighbors[k].0);
    }
    Ok(out)
}

/// The window model, weighted observers and measured factors of `Wdim_ε` at
/// stage `F`.
pub fn wdim_setup(
    sys: &System,
    eps: f64,
    f: &Window,
    r: Option<u32>,
    metric: &Metric,
) -> Result<(System, WindowModel, Vec<Arc<CellMap>>, Vec<f64>, Vec<usize>)> {
    let sys = match r {
        Some(r) => sys.at_resolution(r)?,
        None => sys.clone(),
    };
    if let Some(q) = sys.resolution() {
        let quantum = 2.0 / q as f64;
        if eps <= quantum {
            return Err(Error::EpsilonBelowGrid { epsilon: eps, quantum });
        }
    }
    let model = sys.window(&metric.window_for(f))?;
    let (obs, weights) = model.weighted_observers(metric, f)?;
    let measured = (0..sys.alphabet().factors().len()).collect();
    Ok((sys, model, obs, weights, measured))
}

/// `Wdim_ε(X|Y, ρ_F)`: the least `ord` of a grid cover whose members meet
/// every fiber in a set of `ρ_F`-diameter `< ε`.
pub fn stage_wdim(
    sys: &System,
    eps: f64,
    f: &Window,
    r: Option<u32>,
    metric: &Metric,
    opts: &SolveOptions,
) -> Result<StageReport> {
    let (_, model, obs, weights, measured) = wdim_setup(sys, eps, f, r, metric)?;
    let rep = wdim(&model.fibers, &obs, weights, measured, eps, opts)?;
    let mut s = StageReport::from_d(Quantity::Wdim, f, rep);
    s.epsilon = Some(eps);
    Ok(s)
}

/// Vertices of every fiber of the window model, keyed by base vertex.
pub fn fiber_vertices(model: &WindowModel) -> Vec<(usize, Vec<usize>)> {
    let mut out: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in model.complex.vertices() {
        let y = model.factor.as_ref().map_or(0, |pi| pi.apply(v));
        out.entry(y).or_default().push(v);
    }
    out.into_iter().collect()
}

/// `ρ_F` between vertices, computed from a table of alphabet distances.
pub struct FiberMetric {
    reads: Vec<Vec<usize>>,
    weights: Vec<f64>,
    table: Vec<f64>,
    stride: usize,
}

impl FiberMetric {
    pub fn new(model: &WindowModel, metric: &Metric, f: &Window, points: &[usize]) -> Result<Self> {
        let (obs, weights) = model.weighted_observers(metric, f)?;
        let a = &model.alphabet;
        let stride = a.len();
        let mut table = vec![0.0; stride * stride];
        for i in a.vertices() {
            for j in a.vertices() {
                table[i * stride + j] = alphabet_distance(a, i, j);
            }
        }
        let reads = points.iter().map(|&v| obs.iter().map(|p| p.apply(v)).collect()).collect();
        Ok(FiberMetric { reads, weights, table, stride })
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.reads[i], &self.reads[j]);
        let mut d: f64 = 0.0;
        for k in 0..a.len() {
            d = d.max(self.weights[k] * self.table[a[k] * self.stride + b[k]]);
        }
        d
    }
}

/// `N_ε(X|Y, ρ_F) = max_y N_ε(π^{-1}(y), ρ_F)` on the grid of resolution `r`,
/// together with the cover-by-small-sets count of every fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationStage {
    pub n: StageReport,
    pub mesh: StageReport,
    /// `N_{ε/2}`, the upper end of the sandwich `N_ε ≤ mesh ≤ N_{ε/2}`.
    pub n_half: usize,
    pub sandwich: bool,
}

pub fn stage_n_eps(
    sys: &System,
    eps: f64,
    f: &Window,
    r: Option<u32>,
    metric: &Metric,
    budget: u64,
) -> Result<SeparationStage> {
    let sys = match r {
        Some(r) => sys.at_resolution(r)?,
        None => sys.clone(),
    };
    let model = sys.window(&metric.window_for(f))?;
    let mut best: Option<(usize, Packing)> = None;
    let mut exact = true;
    let mut mesh_max = 0usize;
    let mut mesh_groups = Vec::new();
    let mut half_max = 0usize;
    let mut half_exact = true;
    for (y, pts) in fiber_vertices(&model) {
        let m = FiberMetric::new(&model, metric, f, &pts)?;
        let p = max_separated(pts.len(), |i, j| m.dist(i, j), eps, budget);
        let half = max_separated(pts.len(), |i, j| m.dist(i, j), eps / 2.0, budget);
        let cover = ball_cover(pts.len(), |i, j| m.dist(i, j), eps);
        exact &= p.exact;
        half_exact &= half.exact;
        half_max = half_max.max(half.size());
        mesh_max = mesh_max.max(cover.len());
        mesh_groups.push(cover.into_iter().map(|g| g.into_iter().map(|i| pts[i]).collect()).collect());
        let p = Packing { set: p.set.iter().map(|&i| pts[i]).collect(), ..p };
        if best.as_ref().is_none_or(|b| p.size() > b.1.size()) {
            best = Some((y, p));
        }
    }
    let (y, p) = best.ok_or(Error::EmptyFiber(0))?;
    let n = p.size();
    let report = |quantity, value: usize, exact, witness| StageReport {
        quantity,
        window: f.clone(),
        lower: Rational::from_integer(value as i64),
        upper: Rational::from_integer(value as i64),
        epsilon: Some(eps),
        resolution: r,
        exact,
        witness,
    };
    let n_report = report(Quantity::NEps, n, exact, StageWitness::Separated { base: y, points: p.set });
    let mesh_report = report(Quantity::Mesh, mesh_max, mesh_max == n && exact, StageWitness::Mesh { fibers: mesh_groups });
    Ok(SeparationStage {
        sandwich: n <= mesh_max && (!half_exact || mesh_max <= half_max),
        n: n_report,
        mesh: mesh_report,
        n_half: half_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{CellComplex, Factor};
    use crate::systems::{Atom, SystemSpec};

    fn interval_shift() -> System {
        System::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::Interval { cells: 4 } }).unwrap()
    }

    fn two_member() -> Cover {
        Cover::from_boxes(Arc::new(CellComplex::interval(4)), &[vec![(-1.0, 0.8)], vec![(0.2, 2.0)]]).unwrap()
    }

    fn product() -> System {
        System::new(SystemSpec::Product {
            base: Box::new(SystemSpec::Periodic { dim: 1, period: vec![2], pattern: vec![0, 1], symbols: 2 }),
            fiber: Box::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::Interval { cells: 4 } }),
        })
        .unwrap()
    }

    fn product_seed(sys: &System) -> Cover {
        let a = sys.alphabet().clone();
        Cover::from_boxes(a, &[vec![(-1.0, 5.0), (-1.0, 0.8)], vec![(-1.0, 5.0), (0.2, 2.0)]]).unwrap()
    }

    #[test]
    fn interval_shift_stages() {
        let sys = interval_shift();
        let opts = SolveOptions::default();
        let u = two_member();
        let s = stage_d_unconditional(&sys, &u, &Window::from_ints([0]), Some(4), &opts).unwrap();
        assert_eq!((s.lower, s.upper), (Rational::from_integer(1), Rational::from_integer(1)));
        let s = stage_d_unconditional(&sys, &u, &Window::from_ints([0, 1]), Some(4), &opts).unwrap();
        assert!(s.exact);
        assert_eq!(s.upper, Rational::from_integer(2));
        assert_eq!(s.normalized(), (1.0, 1.0));
        // no factor: conditional equals unconditional
        let c = stage_d_conditional(&sys, &u, &Window::from_ints([0, 1]), Some(4), &opts).unwrap();
        assert_eq!((c.lower, c.upper), (s.lower, s.upper));
    }

    #[test]
    fn discrete_alphabets_have_zero_stages() {
        let sys = System::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::points(3) }).unwrap();
        let u = Cover::vertex_stars(sys.alphabet().clone());
        let s = stage_d_unconditional(&sys, &u, &Window::from_ints(0..3), None, &SolveOptions::default()).unwrap();
        assert_eq!(s.upper, Rational::from_integer(0));
    }

    #[test]
    fn product_stages() {
        let sys = product();
        let opts = SolveOptions::default();
        let u = product_seed(&sys);
        let f = Window::from_ints([0, 1]);
        let c = stage_d_conditional(&sys, &u, &f, Some(4), &opts).unwrap();
        assert_eq!(c.upper, Rational::from_integer(2));
        assert!(c.exact);
        for y in 0..2 {
            let fib = stage_fiber(&sys, &u, &f, y, Some(4), &opts).unwrap();
            assert_eq!(fib.upper, c.upper);
        }
        // the base cover pulled back is refined by the fibers
        let base = Cover::from_boxes(sys.alphabet().clone(), &[vec![(-1.0, 0.5), (-1.0, 2.0)], vec![(0.5, 5.0), (-1.0, 2.0)]]).unwrap();
        let b = stage_d_conditional(&sys, &base, &f, Some(4), &opts).unwrap();
        assert_eq!(b.upper, Rational::from_integer(0));
    }

    #[test]
    fn measure_stage_averages_fibers() {
        let sys = product();
        let u = product_seed(&sys);
        let half = Rational::new(1, 2);
        let nu = MeasureModel::new(vec![
            Atom { configuration: Configuration::new(vec![2], vec![0, 1]).unwrap(), weight: half },
            Atom { configuration: Configuration::new(vec![2], vec![1, 0]).unwrap(), weight: half },
        ])
        .unwrap();
        let f = Window::from_ints([0]);
        let m = stage_d_measure(&sys, &nu, &u, &f, Some(4), &SolveOptions::default()).unwrap();
        assert_eq!(m.upper, Rational::from_integer(1));
        let StageWitness::Fibers { values, equivariant } = &m.witness else { panic!() };
        assert!(*equivariant);
        assert_eq!(values.len(), 2);
    }

    #[test]
    fn wdim_stages() {
        let sys = interval_shift();
        let metric = Metric { radius: 0 };
        let opts = SolveOptions::default();
        let f = Window::from_ints([0]);
        let s = stage_wdim(&sys, 0.3, &f, Some(8), &metric, &opts).unwrap();
        assert_eq!(s.upper, Rational::from_integer(1));
        let s = stage_wdim(&sys, 1.5, &f, Some(8), &metric, &opts).unwrap();
        assert_eq!(s.upper, Rational::from_integer(0));
        assert!(matches!(stage_wdim(&sys, 0.2, &f, Some(8), &metric, &opts), Err(Error::EpsilonBelowGrid { .. })));
        // a product over an interval base with every point its own fiber
        let ident = System::new(SystemSpec::Product {
            base: Box::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::Interval { cells: 2 } }),
            fiber: Box::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::points(1) }),
        })
        .unwrap();
        let s = stage_wdim(&ident, 0.3, &f, Some(8), &metric, &opts).unwrap();
        assert_eq!(s.upper, Rational::from_integer(0));
    }

    #[test]
    fn separated_stages() {
        let m = 4u32;
        let positions = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
        let sys = System::new(SystemSpec::FullShift {
            dim: 1,
            alphabet: Factor::Points { count: m, positions: Some(positions) },
        })
        .unwrap();
        let metric = Metric { radius: 0 };
        let f = Window::from_ints([0, 1]);
        let s = stage_n_eps(&sys, 0.25, &f, None, &metric, separated::DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(s.n.upper, Rational::from_integer(16));
        assert!((s.n.normalized().0 - 1.0).abs() < 1e-12);
        assert!(s.sandwich);
        let s = stage_n_eps(&sys, 2.0, &f, None, &metric, separated::DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(s.n.upper, Rational::from_integer(1));
        assert_eq!(s.n.normalized().0, 0.0);
    }

    #[test]
    fn usc_along_agreeing_neighbors() {
        let sys = System::new(SystemSpec::Skew {
            base: Box::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::points(2) }),
            cells: 4,
            circles: 1,
            actions: vec![crate::systems::Automorphism::Trivial],
            cocycle: vec![vec![vec![0], vec![1]]],
        })
        .unwrap();
        let u = Cover::vertex_stars(sys.alphabet().clone());
        let y = Configuration::constant(1, 0);
        let zs: Vec<Configuration> = (1..5u32)
            .map(|k| {
                let mut pat = vec![0; 2 * k as usize + 2];
                pat[k as usize + 1] = 1;
                Configuration::new(vec![2 * k + 2], pat).unwrap()
            })
            .collect();
        let f = Window::from_ints([0, 1]);
        let rep = usc_probe(&sys, &u, &f, &y, &zs, None, &SolveOptions::default()).unwrap();
        assert_eq!(rep.tail_from, Some(0));
        assert!(rep.neighbors.windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn bracket_comparisons() {
        let r = Rational::from_integer;
        assert_eq!(bracket_le((r(1), r(2)), (r(2), r(3))), Comparison::Certain);
        assert_eq!(bracket_le((r(3), r(3)), (r(1), r(2))), Comparison::Refuted);
        assert_eq!(bracket_le((r(1), r(3)), (r(2), r(2))), Comparison::Unresolved);
    }
}
