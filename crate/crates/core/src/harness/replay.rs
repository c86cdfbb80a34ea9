//! The subadditivity argument `D(U^A) ≤ D(V^A) + Σ_j |D_j| D(U^{F_j}|Y) + ε|A| D(U)`
//! executed on a window model: tile minimizers `W_j`, a base cover `V` read
//! off the finite base, a minimizer `W_A` for `V^A`, and the combined cover
//! `(∨_j ∨_{c∈D_j} c^{-1}W_j) ∨ π^{-1}(W_A)`, whose refinement of
//! `U^{∪ F_j D_j}` is checked member by member.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covers::{check_witness, d_conditional, d_unconditional, CellComplex, CellMap, Cover, MemberAdmissibility, DReport, Factor, JoinCover, SolveOptions, Witness};
use crate::error::{Error, Result};
use crate::estimators::{bracket_le, cover_join, Comparison};
use crate::group::{GroupElement, Window};
use crate::rational::{self, Rational};
use crate::systems::System;
use crate::tiling::{greedy_quasi_tile, QuasiTiling, TileFamily, TilingOutcome};

/// A bracket `[lower, upper]` on an integer-valued term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
}

impl Bracket {
    pub fn exact(v: Rational) -> Self {
        Bracket { lower: v, upper: v }
    }

    pub fn of(rep: &DReport) -> Self {
        Bracket { lower: Rational::from_integer(rep.lower as i64), upper: Rational::from_integer(rep.upper as i64) }
    }

    pub fn zero() -> Self {
        Self::exact(Rational::from_integer(0))
    }

    pub fn add(self, o: Bracket) -> Bracket {
        Bracket { lower: self.lower + o.lower, upper: self.upper + o.upper }
    }

    pub fn scale(self, k: Rational) -> Bracket {
        Bracket { lower: self.lower * k, upper: self.upper * k }
    }

    pub fn pair(self) -> (Rational, Rational) {
        (self.lower, self.upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub label: String,
    pub lhs: Bracket,
    pub rhs: Bracket,
    pub comparison: Comparison,
}

impl Step {
    fn new(label: &str, lhs: Bracket, rhs: Bracket) -> Self {
        Step { label: label.into(), lhs, rhs, comparison: bracket_le(lhs.pair(), rhs.pair()) }
    }

    pub fn holds(&self) -> bool {
        self.comparison == Comparison::Certain
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileTerm {
    pub tile: Window,
    pub centers: Vec<GroupElement>,
    /// `D(U^{F_j}|Y)`.
    pub d: Bracket,
    /// `ord(W_j)`.
    pub witness_ord: usize,
    pub witness: Witness,
    /// `W_j ∨ π^{-1}(V)` refines `U^{F_j}`.
    pub base_cover_refines: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub target: Window,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub tiling: QuasiTiling,
    pub tiles: Vec<TileTerm>,
    /// `V` as cell sets of the base alphabet.
    pub base_cover: Cover,
    /// `D(V^A)` with the minimizer `W_A`.
    pub d_base: Bracket,
    pub base_witness: Witness,
    pub base_witness_ord: usize,
    /// `c·W_A` refines `V` for every center `c`.
    pub base_witness_refines: bool,
    pub d_seed: Bracket,
    pub d_target: Bracket,
    pub d_remainder: Bracket,
    /// `D` of the combined cover, and its literal `ord`.
    pub d_combined: Bracket,
    pub combined_ord: usize,
    /// First member tuple of the combined cover outside `U^{∪ F_j D_j}`.
    pub combined_violation: Option<Vec<usize>>,
    pub steps: Vec<Step>,
}

impl ReplayReport {
    pub fn holds(&self) -> bool {
        self.combined_violation.is_none()
            && self.base_witness_refines
            && self.tiles.iter().all(|t| t.base_cover_refines)
            && self.steps.iter().all(Step::holds)
    }
}

/// Runs the argument for `sys` (at its current resolution) and the seed cover
/// `u` on its alphabet. A system without a factor is read over the one-point
/// base.
pub fn replay_subadditivity(
    sys: &System,
    u: &Cover,
    target: &Window,
    family: &TileFamily,
    opts: &SolveOptions,
) -> Result<ReplayReport> {
    if **u.complex() != **sys.alphabet() {
        return Err(Error::ComplexMismatch);
    }
    let u = Arc::new(Cover::new(sys.alphabet().clone(), u.members().to_vec())?);
    let base = sys.base();
    if let Some(b) = &base {
        if !b.alphabet().factors().iter().all(|f| matches!(f, Factor::Points { .. })) {
            return Err(Error::InvalidModel("the replay reads V off a base with a finite alphabet".into()));
        }
    }
    let tiling = match greedy_quasi_tile(family, target)? {
        TilingOutcome::Tiled(q) => q,
        TilingOutcome::Failed(f) => {
            return Err(Error::InvalidModel(format!("target not tiled: uncovered fraction {}", f.uncovered_fraction)))
        }
    };
    let v = Arc::new(match &base {
        Some(b) => Cover::vertex_stars(b.alphabet().clone()),
        None => Cover::trivial(Arc::new(CellComplex::new(vec![Factor::points(1)])?)),
    });
    let e = GroupElement::identity(sys.dim());

    let mut tiles = Vec::new();
    let mut models = Vec::new();
    for (tile, centers) in tiling.tiles.iter().zip(&tiling.centers) {
        if centers.is_empty() {
            continue;
        }
        let model = sys.window(tile)?;
        let uj = cover_join(&model, &u, tile)?;
        let rep = d_conditional(&uj, &model.fibers, opts)?;
        let w = Arc::new(rep.witness.cover(model.complex.clone())?);
        let mut parts = vec![(w.clone(), Arc::new(CellMap::identity(model.complex.clone())))];
        if let Some(b) = &base {
            let pi = model.factor.clone().expect("base exists");
            let q0 = pi.compose(b.window(tile)?.observer(&e).expect("tiles contain the identity"))?;
            parts.push((v.clone(), Arc::new(q0)));
        }
        let wv = JoinCover::new(model.complex.clone(), parts)?;
        let base_cover_refines = wv.refinement_violation(&uj)?.is_none();
        tiles.push(TileTerm {
            tile: tile.clone(),
            centers: centers.clone(),
            d: Bracket::of(&rep),
            witness_ord: w.ord(),
            witness: rep.witness.clone(),
            base_cover_refines,
        });
        models.push((model, w));
    }

    let model = sys.window(target)?;
    let mut base_witness_refines = true;
    let (rep_base, wa) = match &base {
        Some(b) => {
            let base_model = b.window(target)?;
            let va = cover_join(&base_model, &v, target)?;
            let rep = d_unconditional(&va, opts)?;
            let wa = Arc::new(rep.witness.cover(base_model.complex.clone())?);
            let wa_join = JoinCover::single(wa.clone())?;
            for t in &tiles {
                for c in &t.centers {
                    let p = base_model.observer(c).ok_or(Error::WindowTooSmall { required: 1, found: 0 })?;
                    let vc = JoinCover::new(base_model.complex.clone(), vec![(v.clone(), p.clone())])?;
                    base_witness_refines &= wa_join.refinement_violation(&vc)?.is_none();
                }
            }
            (rep, wa)
        }
        None => {
            let rep = d_unconditional(&JoinCover::single(v.clone())?, opts)?;
            (rep, v.clone())
        }
    };

    let mut parts = Vec::new();
    for (t, (m, w)) in tiles.iter().zip(&models) {
        for c in &t.centers {
            parts.push((w.clone(), Arc::new(model.shifted_restriction(m, c)?)));
        }
    }
    if base.is_some() {
        parts.push((wa.clone(), model.factor.clone().expect("base exists")));
    }
    let combined = JoinCover::new(model.complex.clone(), parts)?;
    let covered = tiling.covered();
    let ub = cover_join(&model, &u, &covered)?;
    let combined_violation = combined.refinement_violation(&ub)?;
    let combined_ord = combined.ord();
    let settled_only = SolveOptions { search_when_settled: false, ..opts.clone() };
    let rep_c = d_unconditional(&combined, &settled_only)?;

    let rep_target = d_unconditional(&cover_join(&model, &u, target)?, opts)?;
    let rep_seed = d_unconditional(&JoinCover::single(u.clone())?, opts)?;
    let rest = target.difference(&covered);
    let d_remainder = if rest.is_empty() {
        Bracket::zero()
    } else {
        let m = sys.reading_window(&rest)?;
        Bracket::of(&d_unconditional(&cover_join(&m, &u, &rest)?, opts)?)
    };

    let eps = tiling.epsilon;
    let size = Rational::from_integer(target.len() as i64);
    let d_target = Bracket::of(&rep_target);
    let d_seed = Bracket::of(&rep_seed);
    let d_combined = Bracket::of(&rep_c);
    let d_base = Bracket::of(&rep_base);
    let d_covered = if rest.is_empty() {
        d_target
    } else {
        let m = sys.reading_window(&covered)?;
        Bracket::of(&d_unconditional(&cover_join(&m, &u, &covered)?, opts)?)
    };
    let tile_sum = tiles
        .iter()
        .fold(Bracket::zero(), |acc, t| acc.add(t.d.scale(Rational::from_integer(t.centers.len() as i64))));
    let slack = d_seed.scale(eps * size);
    let ords = Rational::from_integer(
        tiles.iter().map(|t| t.witness_ord * t.centers.len()).sum::<usize>() as i64 + wa.ord() as i64,
    );
    let sup = tiles
        .iter()
        .map(|t| t.d.upper / Rational::from_integer(t.tile.len() as i64))
        .max()
        .unwrap_or_else(|| Rational::from_integer(0));

    let mut steps = Vec::new();
    steps.push(Step::new("D(U^A) <= D(U^B) + D(U^{A\\B})", d_target, d_covered.add(d_remainder)));
    steps.push(Step::new("D(U^{A\\B}) <= eps|A| D(U)", d_remainder, slack));
    steps.push(Step::new("D(U^B) <= D(C)", d_covered, d_combined));
    steps.push(Step::new("D(C) <= sum of part ords", d_combined, Bracket::exact(ords)));
    steps.push(Step::new("D(C) <= D(V^A) + sum_j |D_j| D(U^F_j|Y)", d_combined, d_base.add(tile_sum)));
    steps.push(Step::new(
        "D(U^A) <= D(V^A) + sum_j |D_j| D(U^F_j|Y) + eps|A| D(U)",
        d_target,
        d_base.add(tile_sum).add(slack),
    ));
    steps.push(Step::new(
        "sum_j |D_j| D(U^F_j|Y) <= |A|/(1-eps) max_j D(U^F_j|Y)/|F_j|",
        tile_sum,
        Bracket::exact(size / (Rational::from_integer(1) - eps) * sup),
    ));
    steps.push(Step::new(
        "sum_j |F_j||D_j| <= |A|/(1-eps)",
        Bracket::exact(Rational::from_integer(tiling.tiled_mass())),
        Bracket::exact(size / (Rational::from_integer(1) - eps)),
    ));

    Ok(ReplayReport {
        target: target.clone(),
        epsilon: eps,
        tiling,
        tiles,
        base_cover: (*v).clone(),
        d_base,
        base_witness: rep_base.witness.clone(),
        base_witness_ord: wa.ord(),
        base_witness_refines,
        d_seed,
        d_target,
        d_remainder,
        d_combined,
        combined_ord,
        combined_violation,
        steps,
    })
}

/// Re-checks a report without search: the tiling, every witness against its
/// refinement condition and recorded `ord`, the refinements of `V` and
/// `U^B`, and the literal `ord` of the combined cover.
pub fn audit_replay(sys: &System, u: &Cover, report: &ReplayReport) -> std::result::Result<(), String> {
    let s = |e: Error| e.to_string();
    report.tiling.verify()?;
    let u = Arc::new(Cover::new(sys.alphabet().clone(), u.members().to_vec()).map_err(s)?);
    let base = sys.base();
    let v = Arc::new(report.base_cover.clone());
    let e = GroupElement::identity(sys.dim());
    let model = sys.window(&report.target).map_err(s)?;
    let mut parts = Vec::new();
    for t in &report.tiles {
        let m = sys.window(&t.tile).map_err(s)?;
        let uj = cover_join(&m, &u, &t.tile).map_err(s)?;
        let adm = MemberAdmissibility::new(&uj, &m.fibers).map_err(s)?;
        let ord = check_witness(&m.complex, &adm, &t.witness).map_err(s)?;
        if ord != t.witness_ord {
            return Err(format!("tile {:?}: witness ord {ord}, recorded {}", t.tile, t.witness_ord));
        }
        let w = Arc::new(t.witness.cover(m.complex.clone()).map_err(s)?);
        let mut wv = vec![(w.clone(), Arc::new(CellMap::identity(m.complex.clone())))];
        if let Some(b) = &base {
            let q0 = m.factor.clone().expect("base exists").compose(b.window(&t.tile).map_err(s)?.observer(&e).expect("identity"));
            wv.push((v.clone(), Arc::new(q0.map_err(s)?)));
        }
        let wv = JoinCover::new(m.complex.clone(), wv).map_err(s)?;
        if wv.refinement_violation(&uj).map_err(s)?.is_some() != !t.base_cover_refines {
            return Err(format!("tile {:?}: refinement of U^F_j disagrees with the report", t.tile));
        }
        for c in &t.centers {
            parts.push((w.clone(), Arc::new(model.shifted_restriction(&m, c).map_err(s)?)));
        }
    }
    if let Some(b) = &base {
        let bm = b.window(&report.target).map_err(s)?;
        let va = cover_join(&bm, &v, &report.target).map_err(s)?;
        let adm = MemberAdmissibility::new(&va, &bm.fibers).map_err(s)?;
        let ord = check_witness(&bm.complex, &adm, &report.base_witness).map_err(s)?;
        if ord != report.base_witness_ord {
            return Err(format!("base witness ord {ord}, recorded {}", report.base_witness_ord));
        }
        let wa = Arc::new(report.base_witness.cover(bm.complex.clone()).map_err(s)?);
        let wa_join = JoinCover::single(wa.clone()).map_err(s)?;
        for t in &report.tiles {
            for c in &t.centers {
                let p = bm.observer(c).ok_or("center outside the target")?;
                let vc = JoinCover::new(bm.complex.clone(), vec![(v.clone(), p.clone())]).map_err(s)?;
                if wa_join.refinement_violation(&vc).map_err(s)?.is_some() == report.base_witness_refines {
                    return Err(format!("refinement of V at {c:?} disagrees with the report"));
                }
            }
        }
        parts.push((wa, model.factor.clone().expect("base exists")));
    }
    let combined = JoinCover::new(model.complex.clone(), parts).map_err(s)?;
    if combined.ord() != report.combined_ord {
        return Err(format!("combined ord {}, recorded {}", combined.ord(), report.combined_ord));
    }
    let ub = cover_join(&model, &u, &report.tiling.covered()).map_err(s)?;
    let violation = combined.refinement_violation(&ub).map_err(s)?;
    if violation != report.combined_violation {
        return Err(format!("combined cover refinement: found {violation:?}, recorded {:?}", report.combined_violation));
    }
    for st in &report.steps {
        if bracket_le(st.lhs.pair(), st.rhs.pair()) != st.comparison {
            return Err(format!("step {:?} misreports its comparison", st.label));
        }
    }
    Ok(())
}
