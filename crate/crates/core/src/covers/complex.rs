//! Products of subdivided intervals, circles and finite point sets.
//!
//! Each factor numbers its cells by a code. For an interval with `r` cells the
//! codes run over `0..=2r`: even codes are vertices at `code/(2r)`, odd codes
//! are the open edges between them. A circle with `r` cells uses `0..2r`
//! modulo `2r`. A point factor has one vertex per code. Product cells are
//! numbered in mixed radix with factor 0 most significant, so cell order is
//! lexicographic in the codes.

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Factor {
    Interval {
        cells: u32,
    },
    Circle {
        cells: u32,
    },
    Points {
        count: u32,
        /// Positions in `[0,1]`; without them the points are at mutual distance 1.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positions: Option<Vec<f64>>,
    },
}

impl Factor {
    pub fn points(count: u32) -> Self {
        Factor::Points { count, positions: None }
    }

    /// Number of cell codes.
    pub fn codes(&self) -> u32 {
        match *self {
            Factor::Interval { cells } => 2 * cells + 1,
            Factor::Circle { cells } => 2 * cells,
            Factor::Points { count, .. } => count,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Factor::Points { .. } => 0,
            _ => 1,
        }
    }

    pub fn resolution(&self) -> Option<u32> {
        match *self {
            Factor::Interval { cells } | Factor::Circle { cells } => Some(cells),
            Factor::Points { .. } => None,
        }
    }

    pub fn is_vertex(&self, code: u32) -> bool {
        match self {
            Factor::Points { .. } => true,
            _ => code % 2 == 0,
        }
    }

    pub fn is_top(&self, code: u32) -> bool {
        match self {
            Factor::Points { .. } => true,
            _ => code % 2 == 1,
        }
    }

    /// Vertex codes in the closure of `code`.
    pub fn closure_vertices(&self, code: u32) -> Vec<u32> {
        match *self {
            Factor::Points { .. } => vec![code],
            _ if code % 2 == 0 => vec![code],
            Factor::Interval { .. } => vec![code - 1, code + 1],
            Factor::Circle { cells } => {
                let n = 2 * cells;
                let mut v = vec![(code + n - 1) % n, (code + 1) % n];
                v.dedup();
                v
            }
        }
    }

    /// Codes whose closure contains `code` (the open star of `code`).
    pub fn star(&self, code: u32) -> Vec<u32> {
        match *self {
            Factor::Points { .. } => vec![code],
            _ if code % 2 == 1 => vec![code],
            Factor::Interval { cells } => {
                let mut v = vec![code];
                if code > 0 {
                    v.insert(0, code - 1);
                }
                if code < 2 * cells {
                    v.push(code + 1);
                }
                v
            }
            Factor::Circle { cells } => {
                let n = 2 * cells;
                let mut v = vec![(code + n - 1) % n, code, (code + 1) % n];
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    /// Closure of the cell as a range of half-step positions `lo..=hi`
    /// (circle positions may exceed `2r` and are read modulo `2r`).
    pub fn closure_halfsteps(&self, code: u32) -> (u32, u32) {
        match self {
            Factor::Points { .. } => (code, code),
            _ if code % 2 == 0 => (code, code),
            _ => (code - 1, code + 1),
        }
    }

    pub fn subdivided(&self, m: u32) -> Factor {
        match self {
            Factor::Interval { cells } => Factor::Interval { cells: cells * m },
            Factor::Circle { cells } => Factor::Circle { cells: cells * m },
            p => p.clone(),
        }
    }

    /// Code of the coarse cell containing fine cell `code` after subdividing by `m`.
    pub fn parent_code(&self, code: u32, m: u32) -> u32 {
        match self {
            Factor::Points { .. } => code,
            _ => {
                if code % 2 == 0 {
                    let k = code / 2;
                    if k % m == 0 {
                        2 * (k / m)
                    } else {
                        2 * (k / m) + 1
                    }
                } else {
                    2 * ((code - 1) / 2 / m) + 1
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Factor::Interval { cells } | Factor::Circle { cells } if *cells == 0 => {
                Err(Error::InvalidParameter("factor needs at least one cell".into()))
            }
            Factor::Points { count: 0, .. } => Err(Error::InvalidParameter("empty point factor".into())),
            Factor::Points { count, positions: Some(p) } if p.len() != *count as usize => {
                Err(Error::InvalidParameter("positions do not match the point count".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct CellComplex {
    factors: Vec<Factor>,
    radix: Vec<u32>,
    strides: Vec<usize>,
    len: usize,
}

impl TryFrom<Vec<Factor>> for CellComplex {
    type Error = Error;
    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        CellComplex::new(factors)
    }
}

impl From<CellComplex> for Vec<Factor> {
    fn from(c: CellComplex) -> Self {
        c.factors
    }
}

impl CellComplex {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            f.validate()?;
        }
        let radix: Vec<u32> = factors.iter().map(Factor::codes).collect();
        let mut strides = vec![1usize; factors.len()];
        let mut len = 1usize;
        for k in (0..factors.len()).rev() {
            strides[k] = len;
            len = len
                .checked_mul(radix[k] as usize)
                .filter(|&n| n <= u32::MAX as usize)
                .ok_or_else(|| Error::InvalidParameter("complex has too many cells".into()))?;
        }
        Ok(CellComplex { factors, radix, strides, len })
    }

    pub fn interval(cells: u32) -> Self {
        Self::new(vec![Factor::Interval { cells }]).expect("valid factor")
    }

    pub fn cube(n: usize, cells: u32) -> Self {
        Self::new(vec![Factor::Interval { cells }; n]).expect("valid factor")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Topological dimension.
    pub fn dimension(&self) -> usize {
        self.factors.iter().map(Factor::dimension).sum()
    }

    pub fn code(&self, cell: usize, k: usize) -> u32 {
        ((cell / self.strides[k]) % self.radix[k] as usize) as u32
    }

    pub fn codes(&self, cell: usize) -> Vec<u32> {
        (0..self.factors.len()).map(|k| self.code(cell, k)).collect()
    }

    pub fn cell_of(&self, codes: &[u32]) -> usize {
        codes.iter().zip(&self.strides).map(|(&c, &s)| c as usize * s).sum()
    }

    pub fn is_vertex(&self, cell: usize) -> bool {
        (0..self.factors.len()).all(|k| self.factors[k].is_vertex(self.code(cell, k)))
    }

    pub fn is_top(&self, cell: usize) -> bool {
        (0..self.factors.len()).all(|k| self.factors[k].is_top(self.code(cell, k)))
    }

    pub fn vertices(&self) -> Vec<usize> {
        let lists: Vec<Vec<u32>> =
            self.factors.iter().map(|f| (0..f.codes()).filter(|&c| f.is_vertex(c)).collect()).collect();
        self.product_cells(&lists)
    }

    pub fn top_cells(&self) -> Vec<usize> {
        let lists: Vec<Vec<u32>> =
            self.factors.iter().map(|f| (0..f.codes()).filter(|&c| f.is_top(c)).collect()).collect();
        self.product_cells(&lists)
    }

    /// Cells of the open star of `cell` (all cells having it as a face).
    pub fn star(&self, cell: usize) -> Vec<usize> {
        let lists: Vec<Vec<u32>> =
            self.factors.iter().enumerate().map(|(k, f)| f.star(self.code(cell, k))).collect();
        self.product_cells(&lists)
    }

    pub fn closure_vertices(&self, cell: usize) -> Vec<usize> {
        let lists: Vec<Vec<u32>> = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| f.closure_vertices(self.code(cell, k)))
            .collect();
        self.product_cells(&lists)
    }

    /// Cells whose codes are drawn from the given per-factor lists, in lex order.
    pub fn product_cells(&self, lists: &[Vec<u32>]) -> Vec<usize> {
        let mut out = Vec::new();
        if lists.iter().any(Vec::is_empty) {
            return out;
        }
        let mut idx = vec![0usize; lists.len()];
        loop {
            out.push(lists.iter().zip(&idx).zip(&self.strides).map(|((l, &i), &s)| l[i] as usize * s).sum());
            let mut k = lists.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < lists[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// `self × other` with the factors of `self` first.
    pub fn product(&self, other: &CellComplex) -> CellComplex {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        CellComplex::new(f).expect("product of valid complexes")
    }

    /// Subdivides every interval and circle factor by `m`; returns the fine
    /// complex and the map from fine cells to the coarse cells containing them.
    pub fn subdivide(&self, m: u32) -> Result<(CellComplex, Vec<u32>)> {
        if m == 0 {
            return Err(Error::InvalidParameter("subdivision factor must be positive".into()));
        }
        let fine = CellComplex::new(self.factors.iter().map(|f| f.subdivided(m)).collect())?;
        let parent = (0..fine.len())
            .map(|c| {
                let codes: Vec<u32> =
                    self.factors.iter().enumerate().map(|(k, f)| f.parent_code(fine.code(c, k), m)).collect();
                self.cell_of(&codes) as u32
            })
            .collect();
        Ok((fine, parent))
    }

    /// Common resolution of the interval and circle factors, if they agree.
    pub fn resolution(&self) -> Option<u32> {
        let mut it = self.factors.iter().filter_map(Factor::resolution);
        let r = it.next()?;
        it.all(|x| x == r).then_some(r)
    }

    /// First cell of `set` with a coface outside `set`, if any.
    pub fn open_violation(&self, set: &FixedBitSet) -> Option<usize> {
        for cell in set.ones() {
            for k in 0..self.factors.len() {
                let code = self.code(cell, k);
                for c in self.factors[k].star(code) {
                    if c != code {
                        let other = cell - code as usize * self.strides[k] + c as usize * self.strides[k];
                        if !set.contains(other) {
                            return Some(cell);
                        }
                    }
                }
            }
        }
        None
    }

    /// Smallest open set containing the given cells.
    pub fn open_hull(&self, cells: impl IntoIterator<Item = usize>) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.len);
        for c in cells {
            for s in self.star(c) {
                set.insert(s);
            }
        }
        set
    }

    /// Cells meeting the face `x_k = 0` (`upper = false`) or `x_k = 1` of an interval factor.
    pub fn on_face(&self, cell: usize, k: usize, upper: bool) -> bool {
        match self.factors[k] {
            Factor::Interval { cells } => self.code(cell, k) == if upper { 2 * cells } else { 0 },
            _ => false,
        }
    }
}
