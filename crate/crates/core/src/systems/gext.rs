//! Group extensions: a compact group `G` acting on `X` from the right,
//! commuting with the `Z^d` action up to its automorphisms and acting freely
//! and transitively on every fiber of `π`.

use std::collections::BTreeSet;
use std::sync::Arc;

use super::{Automorphism, System, SystemSpec, WindowModel};
use crate::covers::{CellComplex, CellMap, Factor, FiberModel};
use crate::error::{Error, Result};
use crate::group::Window;

#[derive(Clone, Debug)]
enum Kind {
    Torus { cells: u32, circles: usize, actions: Vec<Automorphism> },
    Kernel { cells: u32, n: u32 },
}

/// The `G`-extension structure of a skew product over a torus or of a
/// kernel extension.
#[derive(Clone, Debug)]
pub struct GExtension {
    system: System,
    kind: Kind,
    alphabet: Arc<CellComplex>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GExtensionCheck {
    /// Every fiber is a single `G`-orbit.
    pub orbits: bool,
    /// `x·h = x` only for `h = 0`.
    pub free: bool,
    /// `p_s(x·h) = p_s(x)·s(h)` and `π(x·h) = π(x)`.
    pub equivariant: bool,
}

impl GExtensionCheck {
    pub fn holds(&self) -> bool {
        self.orbits && self.free && self.equivariant
    }
}

impl GExtension {
    pub fn new(system: &System) -> Result<Self> {
        let (kind, alphabet) = match system.spec() {
            SystemSpec::Skew { cells, circles, actions, .. } => (
                Kind::Torus { cells: *cells, circles: *circles, actions: actions.clone() },
                CellComplex::new(vec![Factor::Circle { cells: *cells }; *circles])?,
            ),
            SystemSpec::Kernel { cells, multiplier } => {
                let n = *multiplier as u32;
                let positions = (0..n).map(|k| k as f64 / n as f64).collect();
                (Kind::Kernel { cells: *cells, n }, CellComplex::new(vec![Factor::Points { count: n, positions: Some(positions) }])?)
            }
            _ => return Err(Error::InvalidModel("only skew products over tori and kernel extensions carry a group".into())),
        };
        Ok(GExtension { system: system.clone(), kind, alphabet: Arc::new(alphabet) })
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    /// `G` with its `Z^d` action as a window model with a single fiber.
    pub fn group_window(&self, e: &Window) -> Result<WindowModel> {
        match &self.kind {
            Kind::Torus { actions, .. } => {
                let complex = self.alphabet.clone();
                let observers = e
                    .iter()
                    .map(|s| {
                        let neg = s
                            .coords()
                            .iter()
                            .enumerate()
                            .filter(|(i, c)| actions[*i] == Automorphism::Negation && c.rem_euclid(2) == 1)
                            .count()
                            % 2
                            == 1;
                        let table = (0..complex.len())
                            .map(|c| {
                                let codes: Vec<u32> = complex
                                    .codes(c)
                                    .into_iter()
                                    .zip(complex.factors())
                                    .map(|(x, f)| if neg { (f.codes() - x) % f.codes() } else { x })
                                    .collect();
                                complex.cell_of(&codes) as u32
                            })
                            .collect();
                        Arc::new(CellMap::new_unchecked(complex.clone(), self.alphabet.clone(), table))
                    })
                    .collect();
                Ok(WindowModel {
                    window: e.clone(),
                    complex: complex.clone(),
                    alphabet: self.alphabet.clone(),
                    observers,
                    fibers: FiberModel::single(complex),
                    factor: None,
                })
            }
            Kind::Kernel { .. } => {
                let f = self.alphabet.factors()[0].clone();
                let complex = Arc::new(CellComplex::new(vec![f; e.len()])?);
                let observers = (0..e.len())
                    .map(|k| {
                        let p = CellMap::projection(complex.clone(), &[k])?;
                        Ok(Arc::new(CellMap::new_unchecked(complex.clone(), self.alphabet.clone(), p.table().to_vec())))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WindowModel {
                    window: e.clone(),
                    complex: complex.clone(),
                    alphabet: self.alphabet.clone(),
                    observers,
                    fibers: FiberModel::single(complex),
                    factor: None,
                })
            }
        }
    }

    fn check_models(x: &WindowModel, g: &WindowModel) -> Result<()> {
        if x.window != g.window || x.factor.is_none() {
            return Err(Error::InvalidParameter("models of X and G on the same window are required".into()));
        }
        Ok(())
    }

    /// `x·h` for a cell `x` of `X_E` and a vertex `h` of `G_E`.
    pub fn act(&self, x: &WindowModel, g: &WindowModel, cell: usize, h: usize) -> usize {
        let mut codes = x.complex.codes(cell);
        match &self.kind {
            Kind::Torus { cells, circles, .. } => {
                let nb = codes.len() - circles;
                for j in 0..*circles {
                    codes[nb + j] = (codes[nb + j] + g.complex.code(h, j)) % (2 * cells);
                }
            }
            Kind::Kernel { cells, n } => {
                for (k, c) in codes.iter_mut().enumerate() {
                    *c = (*c + g.complex.code(h, k) * 2 * (cells / n)) % (2 * cells);
                }
            }
        }
        x.complex.cell_of(&codes)
    }

    /// Whether `τ` is continuous: the zero section of a skew product is, while
    /// `π_f` for `f = n > 1` has none since `n u n = n` has no integer `u`.
    pub fn has_continuous_section(&self) -> bool {
        match &self.kind {
            Kind::Torus { .. } => true,
            Kind::Kernel { n, .. } => *n == 1,
        }
    }

    /// `τ(y)`: the point of the fiber over the base vertex `y` with `G`
    /// coordinate zero.
    pub fn section(&self, x: &WindowModel, y: usize) -> Result<usize> {
        let pi = x.factor.as_ref().ok_or(Error::InvalidModel("no factor".into()))?;
        if !pi.target().is_vertex(y) {
            return Err(Error::InvalidParameter(format!("base cell {y} is not a vertex")));
        }
        let mut codes = pi.target().codes(y);
        if let Kind::Torus { circles, .. } = &self.kind {
            codes.extend(std::iter::repeat_n(0, *circles));
        }
        Ok(x.complex.cell_of(&codes))
    }

    /// The `h` with `x = τ(π x)·h`, for a vertex `x`.
    pub fn coordinate(&self, x: &WindowModel, g: &WindowModel, v: usize) -> Result<usize> {
        let pi = x.factor.as_ref().ok_or(Error::InvalidModel("no factor".into()))?;
        let codes = x.complex.codes(v);
        let h: Vec<u32> = match &self.kind {
            Kind::Torus { circles, .. } => codes[codes.len() - circles..].to_vec(),
            Kind::Kernel { cells, n } => {
                let y = pi.target().codes(pi.apply(v));
                codes.iter().zip(&y).map(|(&c, &b)| (c - b) / (2 * (cells / n))).collect()
            }
        };
        Ok(g.complex.cell_of(&h))
    }

    /// The orbit map `h ↦ x·h` from `G_E` onto the fiber through the vertex `x`.
    pub fn orbit_map(&self, x: &WindowModel, g: &WindowModel, v: usize) -> Result<CellMap> {
        Self::check_models(x, g)?;
        if !x.complex.is_vertex(v) {
            return Err(Error::InvalidParameter(format!("cell {v} is not a vertex")));
        }
        let table = match &self.kind {
            Kind::Torus { cells, circles, .. } => {
                let base = x.complex.codes(v);
                let nb = base.len() - circles;
                (0..g.complex.len())
                    .map(|h| {
                        let mut codes = base.clone();
                        for j in 0..*circles {
                            codes[nb + j] = (codes[nb + j] + g.complex.code(h, j)) % (2 * cells);
                        }
                        x.complex.cell_of(&codes) as u32
                    })
                    .collect()
            }
            Kind::Kernel { .. } => (0..g.complex.len()).map(|h| self.act(x, g, v, h) as u32).collect(),
        };
        CellMap::new(g.complex.clone(), x.complex.clone(), table)
    }

    /// The extension axioms on the window `E`, exhaustively over vertices.
    pub fn check(&self, e: &Window) -> Result<GExtensionCheck> {
        let x = self.system.window(e)?;
        let g = self.group_window(e)?;
        let pi = x.factor.clone().expect("extensions have a factor");
        let hs = g.complex.vertices();
        let xs = x.complex.vertices();
        let mut out = GExtensionCheck { orbits: true, free: true, equivariant: true };
        for &v in &xs {
            let orbit: BTreeSet<usize> = hs.iter().map(|&h| self.act(&x, &g, v, h)).collect();
            out.free &= orbit.len() == hs.len();
            for &h in &hs {
                let w = self.act(&x, &g, v, h);
                out.equivariant &= pi.apply(w) == pi.apply(v);
                for (s, p) in x.observers.iter().enumerate() {
                    let expected = self.act_alphabet(p.apply(v), g.observers[s].apply(h));
                    out.equivariant &= p.apply(w) == expected;
                }
            }
        }
        for y in pi.target().vertices() {
            let fiber: BTreeSet<usize> = xs.iter().copied().filter(|&v| pi.apply(v) == y).collect();
            let t = self.section(&x, y)?;
            let orbit: BTreeSet<usize> = hs.iter().map(|&h| self.act(&x, &g, t, h)).collect();
            out.orbits &= fiber == orbit;
        }
        Ok(out)
    }

    /// The right action on the alphabet.
    fn act_alphabet(&self, a: usize, h: usize) -> usize {
        let alphabet = self.system.alphabet();
        let mut codes = alphabet.codes(a);
        match &self.kind {
            Kind::Torus { cells, circles, .. } => {
                let nb = codes.len() - circles;
                for j in 0..*circles {
                    codes[nb + j] = (codes[nb + j] + self.alphabet.code(h, j)) % (2 * cells);
                }
            }
            Kind::Kernel { cells, n } => {
                codes[0] = (codes[0] + h as u32 * 2 * (cells / n)) % (2 * cells);
            }
        }
        alphabet.cell_of(&codes)
    }
}
