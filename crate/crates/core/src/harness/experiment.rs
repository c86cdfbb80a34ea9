//! Experiment files: TOML with a canonical form obtained by parsing and
//! re-serializing.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{CellComplex, Cover, SolveOptions};
use crate::error::{Error, Result};
use crate::estimators::separated::DEFAULT_NODE_BUDGET;
use crate::group::Window;
use crate::rational::{self, Rational};
use crate::systems::{Metric, MeasureModel, System, SystemSpec};
use crate::tiling::TileFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Subadditivity,
    ProductFormula,
    GExtension,
    MetricVsTopological,
    MeasureBounds,
    FiberBound,
    QuasiTiling,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Subadditivity => "subadditivity",
            CheckKind::ProductFormula => "product_formula",
            CheckKind::GExtension => "g_extension",
            CheckKind::MetricVsTopological => "metric_vs_topological",
            CheckKind::MeasureBounds => "measure_bounds",
            CheckKind::FiberBound => "fiber_bound",
            CheckKind::QuasiTiling => "quasi_tiling",
        }
    }

    /// Verdicts of empirical checks never fail a run.
    pub fn is_empirical(&self) -> bool {
        matches!(self, CheckKind::MetricVsTopological)
    }
}

/// A seed cover on the alphabet of a system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverSpec {
    /// One open box `∏ (lo, hi)` per member, in the coordinates of the
    /// alphabet factors (points sit at their index).
    Boxes { boxes: Vec<Vec<[f64; 2]>> },
    VertexStars,
    Trivial,
}

impl CoverSpec {
    pub fn build(&self, complex: Arc<CellComplex>) -> Result<Cover> {
        match self {
            CoverSpec::Boxes { boxes } => {
                let b: Vec<Vec<(f64, f64)>> = boxes.iter().map(|m| m.iter().map(|p| (p[0], p[1])).collect()).collect();
                Cover::from_boxes(complex, &b)
            }
            CoverSpec::VertexStars => Ok(Cover::vertex_stars(complex)),
            CoverSpec::Trivial => Ok(Cover::trivial(complex)),
        }
    }

    /// Cells outside every member, in the coordinates of the alphabet.
    pub fn uncovered(&self, complex: &CellComplex) -> Result<Vec<Vec<u32>>> {
        let CoverSpec::Boxes { boxes } = self else { return Ok(Vec::new()) };
        let b: Vec<Vec<(f64, f64)>> = boxes.iter().map(|m| m.iter().map(|p| (p[0], p[1])).collect()).collect();
        let members = Cover::box_members(complex, &b)?;
        Ok((0..complex.len()).filter(|&c| !members.iter().any(|m| m.contains(c))).map(|c| complex.codes(c)).collect())
    }
}

fn default_radius() -> u32 {
    1
}

fn default_budget() -> u64 {
    SolveOptions::default().node_budget
}

fn default_packing_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Box side lengths of the stages `F_n`, each box starting at the identity.
    pub windows: Vec<Vec<i64>>,
    /// Grid resolutions; empty means the resolution of the system as given.
    #[serde(default)]
    pub resolutions: Vec<u32>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_radius")]
    pub metric_radius: u32,
    #[serde(default = "default_budget")]
    pub node_budget: u64,
    #[serde(default = "default_packing_budget")]
    pub packing_budget: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub name: String,
    pub atoms: MeasureModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubadditivitySpec {
    /// Box sides of the target `A`.
    pub target: Vec<i64>,
    /// Box sides of the tiles, smallest first.
    pub tiles: Vec<Vec<i64>>,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    /// Box sides of `K`; the identity alone when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
}

impl SubadditivitySpec {
    pub fn family(&self, dim: usize) -> Result<TileFamily> {
        let tiles = self.tiles.iter().map(|s| boxed(dim, s)).collect::<Result<Vec<_>>>()?;
        let k = match &self.k {
            Some(s) => boxed(dim, s)?,
            None => boxed(dim, &vec![1; dim])?,
        };
        TileFamily::new(tiles, self.epsilon, k)
    }
}

/// Random targets for the quasi-tiling check: boxes with sides drawn from
/// `sides` whose boundary is eroded at random while the invariance defect
/// against `K` stays at most `max_defect`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingSpec {
    pub dim: usize,
    pub tiles: Vec<Vec<i64>>,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub k: Vec<i64>,
    pub count: usize,
    pub sides: [i64; 2],
    #[serde(with = "rational::serde_str")]
    pub max_defect: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub system: SystemSpec,
    pub cover: CoverSpec,
    /// A cover of the fiber alphabet of a product, for the product formula.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_cover: Option<CoverSpec>,
    pub schedule: Schedule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measures: Vec<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subadditivity: Option<SubadditivitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiling: Option<TilingSpec>,
}

pub fn boxed(dim: usize, sides: &[i64]) -> Result<Window> {
    if sides.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: sides.len() });
    }
    if sides.iter().any(|&s| s <= 0) {
        return Err(Error::Experiment(format!("box sides must be positive: {sides:?}")));
    }
    Ok(Window::box_with(&vec![0; dim], sides))
}

impl Experiment {
    pub fn parse(text: &str) -> Result<Self> {
        let exp: Experiment = toml::from_str(text).map_err(|e| Error::Experiment(e.to_string()))?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The normalized form: defaults filled in, fields in a fixed order.
    pub fn canonical(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Experiment(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let sys = self.system()?;
        if let CoverSpec::Boxes { boxes } = &self.cover {
            if let Some(b) = boxes.iter().find(|b| b.len() != sys.alphabet().factors().len()) {
                return Err(Error::DimensionMismatch { expected: sys.alphabet().factors().len(), found: b.len() });
            }
        }
        if self.schedule.windows.is_empty() {
            return Err(Error::Experiment("the schedule needs at least one window".into()));
        }
        self.windows()?;
        for &r in &self.schedule.resolutions {
            sys.at_resolution(r)?;
        }
        if self.schedule.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::Experiment("epsilons must lie in (0, 1]".into()));
        }
        for m in &self.measures {
            if m.atoms.dim() != sys.dim() {
                return Err(Error::DimensionMismatch { expected: sys.dim(), found: m.atoms.dim() });
            }
        }
        if let Some(s) = &self.subadditivity {
            boxed(sys.dim(), &s.target)?;
            s.family(sys.dim())?;
        }
        if let Some(t) = &self.tiling {
            if t.sides[0] < 1 || t.sides[0] > t.sides[1] {
                return Err(Error::Experiment("tiling sides must be an increasing positive range".into()));
            }
            for s in &t.tiles {
                boxed(t.dim, s)?;
            }
            boxed(t.dim, &t.k)?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<System> {
        System::new(self.system.clone())
    }

    pub fn seed_cover(&self, sys: &System) -> Result<Cover> {
        self.cover.build(sys.alphabet().clone())
    }

    pub fn windows(&self) -> Result<Vec<Window>> {
        let d = self.system()?.dim();
        self.schedule.windows.iter().map(|s| boxed(d, s)).collect()
    }

    /// Resolutions to run; `None` stands for the system as given.
    pub fn resolutions(&self) -> Vec<Option<u32>> {
        if self.schedule.resolutions.is_empty() {
            vec![None]
        } else {
            self.schedule.resolutions.iter().map(|&r| Some(r)).collect()
        }
    }

    pub fn metric(&self) -> Metric {
        Metric { radius: self.schedule.metric_radius }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { node_budget: self.schedule.node_budget, ..SolveOptions::default() }
    }

    /// Keeps the first `n` stages.
    pub fn truncate_stages(&mut self, n: usize) {
        self.schedule.windows.truncate(n.max(1));
    }

    pub fn override_resolution(&mut self, r: u32) {
        self.schedule.resolutions = vec![r];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRODUCT: &str = r#"
name = "product"
checks = ["product_formula", "fiber_bound"]

[system]
kind = "product"

[system.base]
kind = "periodic"
dim = 1
period = [2]
pattern = [0, 1]
symbols = 2

[system.fiber]
kind = "full_shift"
dim = 1

[system.fiber.alphabet]
kind = "interval"
cells = 4

[cover]
kind = "boxes"
boxes = [[[-1, 2], [-1, 0.8]], [[-1, 2], [0.2, 2]]]

[schedule]
windows = [[1], [2]]
"#;

    #[test]
    fn parse_fills_defaults() {
        let e = Experiment::parse(PRODUCT).unwrap();
        assert_eq!(e.seed, 0);
        assert_eq!(e.schedule.metric_radius, 1);
        assert_eq!(e.windows().unwrap()[1], Window::from_ints(0..2));
        assert_eq!(e.resolutions(), vec![None]);
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let e = Experiment::parse(PRODUCT).unwrap();
        let c = e.canonical().unwrap();
        let again = Experiment::parse(&c).unwrap();
        assert_eq!(again, e);
        assert_eq!(again.canonical().unwrap(), c);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(Experiment::parse("name = 1"), Err(Error::Experiment(_))));
        let unknown = PRODUCT.replace("checks", "chekcs");
        assert!(Experiment::parse(&unknown).is_err());
        let uncovered = Experiment::parse(&PRODUCT.replace("[0.2, 2]", "[0.9, 2]")).unwrap();
        let sys = uncovered.system().unwrap();
        assert!(matches!(uncovered.seed_cover(&sys), Err(Error::NotACover { .. })));
        let holes = uncovered.cover.uncovered(sys.alphabet()).unwrap();
        assert!(!holes.is_empty() && holes.iter().all(|c| c[1] >= 3));
        let empty = PRODUCT.replace("windows = [[1], [2]]", "windows = []");
        assert!(Experiment::parse(&empty).is_err());
    }
}
