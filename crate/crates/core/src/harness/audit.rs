//! Witness dumps and their standalone re-verification. Every claim carries
//! enough of its model to be rebuilt; the audit checks the certificate
//! against its predicate and never runs a search.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::CoverSpec;
use super::replay::{audit_replay, ReplayReport};
use crate::covers::{check_witness, CellComplex, Cover, DiameterAdmissibility, FiberModel, MemberAdmissibility, Witness};
use crate::error::{Error, Result};
use crate::estimators::{check_mesh, check_separated, cover_join, fiber_join, fiber_vertices, prepare, wdim_setup, FiberMetric};
use crate::group::Window;
use crate::systems::{GExtension, Metric, System, SystemSpec, WindowModel};
use crate::tiling::QuasiTiling;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoverMode {
    Conditional,
    Unconditional,
    Fiber { base: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Claim {
    /// A bracket `[lower, upper]` on `D(U^F|Y)`, `D(U^F)` or a fiber value:
    /// `upper` is the `ord` of the star witness capped by the dimension,
    /// `lower` the combinatorial bound.
    Cover {
        system: SystemSpec,
        cover: Cover,
        resolution: Option<u32>,
        window: Window,
        mode: CoverMode,
        groups: Vec<Vec<usize>>,
        lower: usize,
        upper: usize,
    },
    /// `Wdim_ε(X|Y, ρ_F) ≤ upper` by a star witness.
    Wdim { system: SystemSpec, resolution: Option<u32>, window: Window, epsilon: f64, radius: u32, groups: Vec<Vec<usize>>, upper: usize },
    /// `Wdim_ε(G, ρ_F) ≤ upper` on the group of an extension.
    GroupWdim { system: SystemSpec, resolution: Option<u32>, window: Window, epsilon: f64, radius: u32, groups: Vec<Vec<usize>>, upper: usize },
    /// An ε-separated set in one fiber of `X_{F·T}`.
    Separated { system: SystemSpec, resolution: Option<u32>, window: Window, epsilon: f64, radius: u32, base: usize, points: Vec<usize> },
    /// An ε-separated set in the group model.
    GroupSeparated { system: SystemSpec, resolution: Option<u32>, window: Window, epsilon: f64, radius: u32, points: Vec<usize> },
    /// Covers of every fiber by sets of `ρ_F`-diameter `< ε`, the largest of
    /// size `count`.
    Mesh { system: SystemSpec, resolution: Option<u32>, window: Window, epsilon: f64, radius: u32, fibers: Vec<Vec<Vec<usize>>>, count: usize },
    Tiling { tiling: QuasiTiling },
    Replay { system: SystemSpec, cover: Cover, resolution: Option<u32>, report: Box<ReplayReport> },
    /// Alphabet cells (as factor codes) that no member of the seed contains.
    Uncovered { system: SystemSpec, cover: CoverSpec, cells: Vec<Vec<u32>> },
    /// A stage that failed before producing a certificate.
    Failure { message: String },
}

/// One dump file: the claims behind one stage of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessFile {
    pub experiment: String,
    pub check: String,
    pub stage: String,
    pub claims: Vec<Claim>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditLine {
    pub file: String,
    pub claims: usize,
    pub errors: Vec<String>,
}

impl AuditLine {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn at(spec: &SystemSpec, r: Option<u32>) -> Result<System> {
    let sys = System::new(spec.clone())?;
    match r {
        Some(r) => sys.at_resolution(r),
        None => Ok(sys),
    }
}

fn expect(what: &str, found: usize, recorded: usize) -> std::result::Result<(), String> {
    if found == recorded {
        Ok(())
    } else {
        Err(format!("{what}: recomputed {found}, recorded {recorded}"))
    }
}

fn star_bound(complex: &CellComplex, ord: usize) -> usize {
    ord.min(complex.dimension())
}

fn group_model(spec: &SystemSpec, r: Option<u32>, metric: &Metric, f: &Window) -> Result<WindowModel> {
    GExtension::new(&at(spec, r)?)?.group_window(&metric.window_for(f))
}

/// Verifies one claim.
pub fn audit_claim(claim: &Claim) -> std::result::Result<(), String> {
    let s = |e: Error| e.to_string();
    match claim {
        Claim::Cover { system, cover, resolution, window, mode, groups, lower, upper } => {
            let (sys, u) = prepare(&System::new(system.clone()).map_err(s)?, cover, *resolution).map_err(s)?;
            let model = sys.window(window).map_err(s)?;
            let (join, fibers) = match mode {
                CoverMode::Conditional => (cover_join(&model, &u, window).map_err(s)?, model.fibers.clone()),
                CoverMode::Unconditional => {
                    (cover_join(&model, &u, window).map_err(s)?, FiberModel::single(model.complex.clone()))
                }
                CoverMode::Fiber { base } => {
                    let j = fiber_join(&model, &u, window, *base).map_err(s)?;
                    let f = FiberModel::single(j.complex().clone());
                    (j, f)
                }
            };
            let adm = MemberAdmissibility::new(&join, &fibers).map_err(s)?;
            let ord = check_witness(join.complex(), &adm, &Witness { groups: groups.clone() }).map_err(s)?;
            expect("upper bound", ord.min(join.essential_dimension()), *upper)?;
            expect("lower bound", join.lower_bound(&fibers), *lower)
        }
        Claim::Wdim { system, resolution, window, epsilon, radius, groups, upper } => {
            let metric = Metric { radius: *radius };
            let (_, model, obs, weights, measured) =
                wdim_setup(&System::new(system.clone()).map_err(s)?, *epsilon, window, *resolution, &metric).map_err(s)?;
            let adm = DiameterAdmissibility::new(&model.fibers, &obs, weights, measured, *epsilon).map_err(s)?;
            let ord = check_witness(&model.complex, &adm, &Witness { groups: groups.clone() }).map_err(s)?;
            expect("upper bound", star_bound(&model.complex, ord), *upper)
        }
        Claim::GroupWdim { system, resolution, window, epsilon, radius, groups, upper } => {
            let metric = Metric { radius: *radius };
            let g = group_model(system, *resolution, &metric, window).map_err(s)?;
            let (obs, weights) = g.weighted_observers(&metric, window).map_err(s)?;
            let measured = (0..g.alphabet.factors().len()).collect();
            let adm = DiameterAdmissibility::new(&g.fibers, &obs, weights, measured, *epsilon).map_err(s)?;
            let ord = check_witness(&g.complex, &adm, &Witness { groups: groups.clone() }).map_err(s)?;
            expect("upper bound", star_bound(&g.complex, ord), *upper)
        }
        Claim::Separated { system, resolution, window, epsilon, radius, base, points } => {
            let metric = Metric { radius: *radius };
            let model = at(system, *resolution).and_then(|x| x.window(&metric.window_for(window))).map_err(s)?;
            let fiber = fiber_vertices(&model)
                .into_iter()
                .find(|(y, _)| y == base)
                .map(|(_, v)| v)
                .ok_or(format!("no fiber over {base}"))?;
            if let Some(p) = points.iter().find(|p| !fiber.contains(p)) {
                return Err(format!("point {p} is not in the fiber over {base}"));
            }
            let m = FiberMetric::new(&model, &metric, window, points).map_err(s)?;
            let idx: Vec<usize> = (0..points.len()).collect();
            check_separated(&idx, |i, j| m.dist(i, j), *epsilon).then_some(()).ok_or("points are not separated".into())
        }
        Claim::GroupSeparated { system, resolution, window, epsilon, radius, points } => {
            let metric = Metric { radius: *radius };
            let g = group_model(system, *resolution, &metric, window).map_err(s)?;
            if let Some(p) = points.iter().find(|&&p| !g.complex.is_vertex(p)) {
                return Err(format!("cell {p} is not a vertex"));
            }
            let m = FiberMetric::new(&g, &metric, window, points).map_err(s)?;
            let idx: Vec<usize> = (0..points.len()).collect();
            check_separated(&idx, |i, j| m.dist(i, j), *epsilon).then_some(()).ok_or("points are not separated".into())
        }
        Claim::Mesh { system, resolution, window, epsilon, radius, fibers, count } => {
            let metric = Metric { radius: *radius };
            let model = at(system, *resolution).and_then(|x| x.window(&metric.window_for(window))).map_err(s)?;
            let all = fiber_vertices(&model);
            if all.len() != fibers.len() {
                return Err(format!("{} fibers, {} covers", all.len(), fibers.len()));
            }
            for ((y, pts), groups) in all.iter().zip(fibers) {
                let m = FiberMetric::new(&model, &metric, window, pts).map_err(s)?;
                let local: Option<Vec<Vec<usize>>> =
                    groups.iter().map(|g| g.iter().map(|v| pts.iter().position(|p| p == v)).collect()).collect();
                let local = local.ok_or(format!("a group leaves the fiber over {y}"))?;
                if !check_mesh(pts.len(), |i, j| m.dist(i, j), *epsilon, &local) {
                    return Err(format!("cover of the fiber over {y} is not an ε-mesh"));
                }
            }
            expect("largest fiber cover", fibers.iter().map(Vec::len).max().unwrap_or(0), *count)
        }
        Claim::Tiling { tiling } => tiling.verify(),
        Claim::Replay { system, cover, resolution, report } => {
            let (sys, u) = prepare(&System::new(system.clone()).map_err(s)?, cover, *resolution).map_err(s)?;
            audit_replay(&sys, &u, report)
        }
        Claim::Uncovered { system, cover, cells } => {
            let sys = System::new(system.clone()).map_err(s)?;
            let found = cover.uncovered(sys.alphabet()).map_err(s)?;
            if &found == cells && !cells.is_empty() {
                Ok(())
            } else {
                Err(format!("recomputed {} uncovered cells, recorded {}", found.len(), cells.len()))
            }
        }
        Claim::Failure { .. } => Ok(()),
    }
}

pub fn audit_file(path: &Path) -> Result<AuditLine> {
    let text = std::fs::read_to_string(path)?;
    let file: WitnessFile = serde_json::from_str(&text).map_err(|e| Error::Experiment(format!("{}: {e}", path.display())))?;
    let errors = file
        .claims
        .iter()
        .enumerate()
        .filter_map(|(i, c)| audit_claim(c).err().map(|e| format!("claim {i}: {e}")))
        .collect();
    Ok(AuditLine { file: path.display().to_string(), claims: file.claims.len(), errors })
}

/// Audits a dump file, or every `.json` dump below a directory in path order.
pub fn audit_path(path: &Path) -> Result<Vec<AuditLine>> {
    if path.is_file() {
        return Ok(vec![audit_file(path)?]);
    }
    let mut files = Vec::new();
    let mut stack = vec![path.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "json") && p.parent().is_some_and(|d| d.ends_with("witnesses")) {
                files.push(p);
            }
        }
    }
    files.sort();
    files.iter().map(|p| audit_file(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{checks::run_check, CheckKind, Experiment};

    fn fiber_claims() -> Vec<Claim> {
        let exp = Experiment::parse(
            r#"
name = "skew"
checks = ["fiber_bound"]
[system]
kind = "skew"
cells = 3
circles = 1
actions = ["trivial"]
cocycle = [[[1], [0]]]
[system.base]
kind = "periodic"
dim = 1
period = [2]
pattern = [0, 1]
symbols = 2
[cover]
kind = "vertex_stars"
[schedule]
windows = [[2]]
"#,
        )
        .unwrap();
        let r = run_check(&exp, CheckKind::FiberBound);
        assert!(!r.failed());
        r.dumps.into_iter().flat_map(|(_, f)| f.claims).collect()
    }

    #[test]
    fn genuine_claims_pass_and_forged_ones_fail() {
        let claims = fiber_claims();
        assert!(claims.len() >= 3);
        for c in &claims {
            assert_eq!(audit_claim(c), Ok(()));
        }
        let mut forged = claims[0].clone();
        if let Claim::Cover { upper, .. } = &mut forged {
            *upper += 1;
        }
        assert!(audit_claim(&forged).unwrap_err().starts_with("upper bound"));
        let mut merged = claims[0].clone();
        if let Claim::Cover { groups, .. } = &mut merged {
            let all: Vec<usize> = groups.concat();
            *groups = vec![all];
        }
        assert!(audit_claim(&merged).is_err());
    }

    #[test]
    fn audit_reads_dump_files() {
        let dir = tempfile::tempdir().unwrap();
        let w = dir.path().join("witnesses");
        std::fs::create_dir(&w).unwrap();
        let file = WitnessFile { experiment: "skew".into(), check: "fiber_bound".into(), stage: "F=[2]".into(), claims: fiber_claims() };
        std::fs::write(w.join("a.json"), serde_json::to_string(&file).unwrap()).unwrap();
        std::fs::write(dir.path().join("other.json"), "not a dump").unwrap();
        let lines = audit_path(dir.path()).unwrap();
        assert_eq!(lines.len(), 1);
        assert!(lines[0].ok());
        std::fs::write(w.join("b.json"), "{}").unwrap();
        assert!(audit_path(dir.path()).is_err());
    }
}
