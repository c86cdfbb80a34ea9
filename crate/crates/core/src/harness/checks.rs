//! The checks an experiment can request. Each walks the schedule and records
//! one stage per window (and resolution, ε or measure where relevant).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::audit::{Claim, CoverMode};
use super::experiment::{boxed, CheckKind, Experiment, TilingSpec};
use super::replay::replay_subadditivity;
use super::{values, CheckResult, Recorder};
use crate::covers::{
    check_witness, wdim, CellMap, Cover, DReport, DiameterAdmissibility, SolveOptions, Witness,
};
use crate::error::{Error, Result};
use crate::estimators::{
    bracket_le, fiber_vertices, max_separated, prepare, stage_d_conditional, stage_d_measure, stage_d_unconditional,
    stage_fiber, stage_n_eps, wdim_setup, Comparison, ConvergenceTrace, FiberMetric, StageReport, StageWitness,
};
use crate::group::{invariance_defect, Window};
use crate::rational::{self, Rational};
use crate::systems::{GExtension, Metric, System, SystemSpec};
use crate::tiling::{greedy_quasi_tile, TileFamily, TilingOutcome};

type Outcome = Result<Option<String>>;

pub fn run_check(exp: &Experiment, kind: CheckKind) -> CheckResult {
    let mut rec = Recorder::new(&exp.name, kind);
    let sys = match exp.system() {
        Ok(s) => s,
        Err(e) => {
            rec.error("system", &e);
            return rec.finish();
        }
    };
    let outcome = match kind {
        CheckKind::Subadditivity => subadditivity(exp, &sys, &mut rec),
        CheckKind::ProductFormula => product_formula(exp, &sys, &mut rec),
        CheckKind::GExtension => g_extension(exp, &sys, &mut rec),
        CheckKind::MetricVsTopological => metric_vs_topological(exp, &sys, &mut rec),
        CheckKind::MeasureBounds => measure_bounds(exp, &sys, &mut rec),
        CheckKind::FiberBound => fiber_bound(exp, &sys, &mut rec),
        CheckKind::QuasiTiling => quasi_tiling(exp, &mut rec),
    };
    match outcome {
        Ok(Some(reason)) => CheckResult::skipped(kind, reason),
        Ok(None) => rec.finish(),
        Err(e) => {
            rec.error("setup", &e);
            rec.finish()
        }
    }
}

fn label(r: Option<u32>, f: &Window) -> String {
    let shape = match f.as_box() {
        Some((_, sides)) => format!("{sides:?}"),
        None => format!("|F|={}", f.len()),
    };
    match r {
        Some(r) => format!("r={r} F={shape}"),
        None => format!("F={shape}"),
    }
}

fn br(lo: Rational, hi: Rational) -> String {
    if lo == hi {
        lo.to_string()
    } else {
        format!("{lo}..{hi}")
    }
}

fn bracket(s: &StageReport) -> String {
    br(s.lower, s.upper)
}

fn le(a: &StageReport, b: &StageReport) -> bool {
    bracket_le((a.lower, a.upper), (b.lower, b.upper)) == Comparison::Certain
}

fn int(r: Rational) -> usize {
    r.to_integer() as usize
}

/// The seed cover, or a failed stage naming the uncovered alphabet cells.
fn seed(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Result<Option<Cover>> {
    match exp.seed_cover(sys) {
        Ok(u) => Ok(Some(u)),
        Err(e @ Error::NotACover { .. }) => {
            let cells = exp.cover.uncovered(sys.alphabet())?;
            rec.stage(
                "seed cover",
                false,
                values([("error", e.to_string())]),
                vec![Claim::Uncovered { system: sys.spec().clone(), cover: exp.cover.clone(), cells }],
            );
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

fn cover_claim(sys: &System, u: &Cover, r: Option<u32>, mode: CoverMode, s: &StageReport) -> Claim {
    let groups = match &s.witness {
        StageWitness::Cover { groups } => groups.clone(),
        _ => Vec::new(),
    };
    Claim::Cover {
        system: sys.spec().clone(),
        cover: u.clone(),
        resolution: r,
        window: s.window.clone(),
        mode,
        groups,
        lower: int(s.lower),
        upper: int(s.upper),
    }
}

/// Base vertices of the window model of `F`.
fn base_vertices(base: &System, f: &Window, r: Option<u32>) -> Result<Vec<usize>> {
    let b = match r {
        Some(r) => base.at_resolution(r).or_else(|_| Ok::<_, Error>(base.clone()))?,
        None => base.clone(),
    };
    Ok(b.window(f)?.complex.vertices())
}

fn fiber_bound(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    let Some(base) = sys.base() else { return Ok(Some("the system has no factor".into())) };
    let Some(u) = seed(exp, sys, rec)? else { return Ok(None) };
    let opts = exp.solve_options();
    for r in exp.resolutions() {
        let mut trace = Vec::new();
        for f in exp.windows()? {
            let l = label(r, &f);
            let stage = (|| -> Result<_> {
                let cond = stage_d_conditional(sys, &u, &f, r, &opts)?;
                let mut vals = values([("conditional", bracket(&cond))]);
                let mut claims = vec![cover_claim(sys, &u, r, CoverMode::Conditional, &cond)];
                let mut pass = true;
                for y in base_vertices(&base, &f, r)? {
                    let fy = stage_fiber(sys, &u, &f, y, r, &opts)?;
                    pass &= le(&fy, &cond);
                    vals.insert(format!("fiber[{y}]"), bracket(&fy));
                    claims.push(cover_claim(sys, &u, r, CoverMode::Fiber { base: y }, &fy));
                }
                Ok((pass, vals, claims, cond))
            })();
            match stage {
                Ok((pass, vals, claims, cond)) => {
                    rec.stage(l, pass, vals, claims);
                    trace.push(cond);
                }
                Err(e) => rec.error(l, &e),
            }
        }
        rec.trace(trace_name("conditional", r), ConvergenceTrace::new(trace));
    }
    Ok(None)
}

fn trace_name(what: &str, r: Option<u32>) -> String {
    match r {
        Some(r) => format!("{what}-r{r}"),
        None => what.to_string(),
    }
}

fn measure_bounds(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    let Some(base) = sys.base() else { return Ok(Some("the system has no factor".into())) };
    if exp.measures.is_empty() {
        return Ok(Some("no measures declared".into()));
    }
    let Some(u) = seed(exp, sys, rec)? else { return Ok(None) };
    let opts = exp.solve_options();
    for r in exp.resolutions() {
        for f in exp.windows()? {
            let l = label(r, &f);
            let stage = (|| -> Result<_> {
                let mut vals = BTreeMap::new();
                let mut claims = Vec::new();
                let mut fibers = BTreeMap::new();
                for y in base_vertices(&base, &f, r)? {
                    let fy = stage_fiber(sys, &u, &f, y, r, &opts)?;
                    vals.insert(format!("fiber[{y}]"), bracket(&fy));
                    claims.push(cover_claim(sys, &u, r, CoverMode::Fiber { base: y }, &fy));
                    fibers.insert(y, fy);
                }
                let max_lower = fibers.values().map(|s| s.lower).max().unwrap_or_default();
                let max_upper = fibers.values().map(|s| s.upper).max().unwrap_or_default();
                vals.insert("max_fiber".into(), br(max_lower, max_upper));
                let mut pass = true;
                let mut best: BTreeMap<usize, (Rational, String)> = BTreeMap::new();
                for m in &exp.measures {
                    let s = stage_d_measure(sys, &m.atoms, &u, &f, r, &opts)?;
                    let equivariant = matches!(s.witness, StageWitness::Fibers { equivariant: true, .. });
                    pass &= equivariant && bracket_le((s.lower, s.upper), (max_lower, max_upper)) == Comparison::Certain;
                    vals.insert(format!("measure[{}]", m.name), bracket(&s));
                    if let StageWitness::Fibers { values: vs, .. } = &s.witness {
                        for v in vs {
                            let e = best.entry(v.base).or_insert((s.lower, m.name.clone()));
                            if s.lower > e.0 {
                                *e = (s.lower, m.name.clone());
                            }
                        }
                    }
                }
                for (y, (v, name)) in best {
                    vals.insert(format!("best_measure[{y}]"), format!("{name}:{v}"));
                }
                Ok((pass, vals, claims))
            })();
            match stage {
                Ok((pass, vals, claims)) => rec.stage(l, pass, vals, claims),
                Err(e) => rec.error(l, &e),
            }
        }
    }
    Ok(None)
}

fn product_formula(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    let SystemSpec::Product { base, fiber } = sys.spec() else {
        return Ok(Some("the system is not a product".into()));
    };
    let Some(fc) = &exp.fiber_cover else { return Ok(Some("no fiber_cover declared".into())) };
    let (ysys, zsys) = (System::new((**base).clone())?, System::new((**fiber).clone())?);
    let alphabet = sys.alphabet().clone();
    let nb = ysys.alphabet().factors().len();
    let py = CellMap::projection(alphabet.clone(), &(0..nb).collect::<Vec<_>>())?;
    let pz = CellMap::projection(alphabet.clone(), &(nb..alphabet.factors().len()).collect::<Vec<_>>())?;
    let v0 = match fc.build(pz.target().clone()) {
        Ok(v) => v,
        Err(e @ Error::NotACover { .. }) => {
            let cells = fc.uncovered(zsys.alphabet())?;
            rec.stage(
                "fiber cover",
                false,
                values([("error", e.to_string())]),
                vec![Claim::Uncovered { system: zsys.spec().clone(), cover: fc.clone(), cells }],
            );
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let u0 = Cover::vertex_stars(py.target().clone());
    let v = v0.pullback(&pz)?;
    let uv = u0.pullback(&py)?.join(&v)?;
    let point_base = ysys.window(&Window::cube(ysys.dim(), 1))?.complex.len() == 1;
    let opts = exp.solve_options();
    for r in exp.resolutions() {
        for f in exp.windows()? {
            let l = label(r, &f);
            let stage = (|| -> Result<_> {
                let a = stage_d_conditional(sys, &uv, &f, r, &opts)?;
                let z = stage_d_unconditional(&zsys, &v0, &f, r, &opts)?;
                let b = stage_d_conditional(sys, &v, &f, r, &opts)?;
                let mut pass = le(&a, &z) && le(&z, &b);
                if point_base {
                    pass &= a.settled() && z.settled() && a.lower == z.lower;
                }
                let vals = values([
                    ("D((U0xV0)^F|Y)", bracket(&a)),
                    ("D(V0^F)", bracket(&z)),
                    ("D((pZ^-1 V0)^F|Y)", bracket(&b)),
                ]);
                let claims = vec![
                    cover_claim(sys, &uv, r, CoverMode::Conditional, &a),
                    cover_claim(&zsys, &v0, r, CoverMode::Unconditional, &z),
                    cover_claim(sys, &v, r, CoverMode::Conditional, &b),
                ];
                Ok((pass, vals, claims))
            })();
            match stage {
                Ok((pass, vals, claims)) => rec.stage(l, pass, vals, claims),
                Err(e) => rec.error(l, &e),
            }
        }
    }
    Ok(None)
}

fn at(sys: &System, r: Option<u32>) -> Result<System> {
    match r {
        Some(r) => sys.at_resolution(r),
        None => Ok(sys.clone()),
    }
}

/// Grid-exact `Wdim_ε(G, ρ_F)` with its witness.
fn group_wdim(gext: &GExtension, metric: &Metric, f: &Window, eps: f64, opts: &SolveOptions) -> Result<DReport> {
    let g = gext.group_window(&metric.window_for(f))?;
    let (obs, weights) = g.weighted_observers(metric, f)?;
    let measured = (0..g.alphabet.factors().len()).collect();
    wdim(&g.fibers, &obs, weights, measured, eps, opts)
}

fn g_extension(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    if GExtension::new(sys).is_err() {
        return Ok(Some("the system is not a group extension".into()));
    }
    if exp.schedule.epsilons.is_empty() {
        return Ok(Some("no epsilons declared".into()));
    }
    let metric = exp.metric();
    let opts = exp.solve_options();
    for r in exp.resolutions() {
        let sr = at(sys, r)?;
        let gext = GExtension::new(&sr)?;
        for f in exp.windows()? {
            let wide = metric.window_for(&f);
            let l = label(r, &f);
            match gext.check(&wide) {
                Ok(c) => rec.stage(
                    format!("{l} axioms"),
                    c.holds(),
                    values([("orbits", c.orbits), ("free", c.free), ("equivariant", c.equivariant)]),
                    Vec::new(),
                ),
                Err(e) => rec.error(format!("{l} axioms"), &e),
            }
            for &eps in &exp.schedule.epsilons {
                let le = format!("{l} eps={eps}");
                match separation_stage(exp, &sr, &gext, &metric, &f, eps) {
                    Ok((pass, vals, claims)) => rec.stage(format!("{le} N"), pass, vals, claims),
                    Err(e) => rec.error(format!("{le} N"), &e),
                }
                match wdim_transfer(&sr, &gext, &metric, &f, eps, &opts) {
                    Ok((pass, vals, claims)) => rec.stage(format!("{le} Wdim"), pass, vals, claims),
                    Err(e) => rec.error(format!("{le} Wdim"), &e),
                }
            }
        }
    }
    Ok(None)
}

type StageParts = (bool, BTreeMap<String, String>, Vec<Claim>);

/// `N_ε` of every fiber against `N_ε` of the group, both exact.
fn separation_stage(
    exp: &Experiment,
    sr: &System,
    gext: &GExtension,
    metric: &Metric,
    f: &Window,
    eps: f64,
) -> Result<StageParts> {
    let budget = exp.schedule.packing_budget;
    let wide = metric.window_for(f);
    let g = gext.group_window(&wide)?;
    let gv = g.complex.vertices();
    let gm = FiberMetric::new(&g, metric, f, &gv)?;
    let gp = max_separated(gv.len(), |i, j| gm.dist(i, j), eps, budget);
    let x = sr.window(&wide)?;
    let mut pass = gp.exact;
    let mut vals = values([("N(G)", gp.size())]);
    let spec = sr.spec().clone();
    let mut claims = vec![Claim::GroupSeparated {
        system: spec.clone(),
        resolution: None,
        window: f.clone(),
        epsilon: eps,
        radius: metric.radius,
        points: gp.set.iter().map(|&i| gv[i]).collect(),
    }];
    for (y, pts) in fiber_vertices(&x) {
        let m = FiberMetric::new(&x, metric, f, &pts)?;
        let p = max_separated(pts.len(), |i, j| m.dist(i, j), eps, budget);
        pass &= p.exact && p.size() == gp.size();
        vals.insert(format!("N(fiber[{y}])"), p.size().to_string());
        claims.push(Claim::Separated {
            system: spec.clone(),
            resolution: None,
            window: f.clone(),
            epsilon: eps,
            radius: metric.radius,
            base: y,
            points: p.set.iter().map(|&i| pts[i]).collect(),
        });
    }
    Ok((pass, vals, claims))
}

/// Grid minima of `Wdim_ε(X|Y)` and `Wdim_ε(G)` with each witness carried
/// to the other side: along the orbit map `g ↦ x_0 g` of one fiber, and back
/// along the coordinate `x = τ(πx) g_x` of the zero section.
fn wdim_transfer(
    sr: &System,
    gext: &GExtension,
    metric: &Metric,
    f: &Window,
    eps: f64,
    opts: &SolveOptions,
) -> Result<StageParts> {
    let (_, x, obs, weights, measured) = wdim_setup(sr, eps, f, None, metric)?;
    let rx = wdim(&x.fibers, &obs, weights.clone(), measured.clone(), eps, opts)?;
    let rg = group_wdim(gext, metric, f, eps, opts)?;
    let g = gext.group_window(&x.window)?;

    let (y0, _) = fiber_vertices(&x).into_iter().next().ok_or(Error::EmptyFiber(0))?;
    let orbit = gext.orbit_map(&x, &g, gext.section(&x, y0)?)?;
    let mut label_of = vec![usize::MAX; x.complex.len()];
    for (i, grp) in rx.witness.groups.iter().enumerate() {
        for &v in grp {
            label_of[v] = i;
        }
    }
    let mut to_g = vec![Vec::new(); rx.witness.groups.len()];
    for h in g.complex.vertices() {
        to_g[label_of[orbit.apply(h)]].push(h);
    }
    to_g.retain(|grp| !grp.is_empty());
    let to_g = Witness { groups: to_g };
    let (gobs, gweights) = g.weighted_observers(metric, f)?;
    let gmeasured: Vec<usize> = (0..g.alphabet.factors().len()).collect();
    let gadm = DiameterAdmissibility::new(&g.fibers, &gobs, gweights, gmeasured, eps)?;
    let t1 = check_witness(&g.complex, &gadm, &to_g);

    let mut glabel = vec![usize::MAX; g.complex.len()];
    for (i, grp) in rg.witness.groups.iter().enumerate() {
        for &h in grp {
            glabel[h] = i;
        }
    }
    let mut to_x = vec![Vec::new(); rg.witness.groups.len()];
    for v in x.complex.vertices() {
        to_x[glabel[gext.coordinate(&x, &g, v)?]].push(v);
    }
    to_x.retain(|grp| !grp.is_empty());
    let to_x = Witness { groups: to_x };
    let xadm = DiameterAdmissibility::new(&x.fibers, &obs, weights, measured, eps)?;
    let t2 = check_witness(&x.complex, &xadm, &to_x);

    let show = |t: &Result<usize>| match t {
        Ok(o) => o.to_string(),
        Err(e) => format!("inadmissible ({e})"),
    };
    let mut vals = values([
        ("Wdim(X|Y) grid", format!("{}{}", rx.grid, if rx.grid_exact { "" } else { "?" })),
        ("Wdim(G) grid", format!("{}{}", rg.grid, if rg.grid_exact { "" } else { "?" })),
        ("ord(X witness on G)", show(&t1)),
        ("ord(G witness on X)", show(&t2)),
    ]);
    let section = gext.has_continuous_section();
    vals.insert("continuous section".into(), section.to_string());
    // Without a continuous section only Wdim(G) <= Wdim(X|Y) is claimed.
    let lower = rx.grid_exact && rg.grid_exact && rg.grid <= rx.grid && t1.as_ref().is_ok_and(|&o| o <= rx.grid);
    let pass = lower && (!section || (rx.grid == rg.grid && t2.as_ref().is_ok_and(|&o| o <= rg.grid)));
    let spec = sr.spec().clone();
    let wd = |groups: Vec<Vec<usize>>, upper: usize| Claim::Wdim {
        system: spec.clone(),
        resolution: None,
        window: f.clone(),
        epsilon: eps,
        radius: metric.radius,
        groups,
        upper,
    };
    let gw = |groups: Vec<Vec<usize>>, upper: usize| Claim::GroupWdim {
        system: spec.clone(),
        resolution: None,
        window: f.clone(),
        epsilon: eps,
        radius: metric.radius,
        groups,
        upper,
    };
    let xdim = x.complex.dimension();
    let gdim = g.complex.dimension();
    let mut claims = vec![wd(rx.witness.groups.clone(), rx.upper), gw(rg.witness.groups.clone(), rg.upper)];
    if let Ok(o) = t1 {
        claims.push(gw(to_g.groups, o.min(gdim)));
    }
    if let Ok(o) = t2 {
        claims.push(wd(to_x.groups, o.min(xdim)));
    }
    Ok((pass, vals, claims))
}

fn metric_vs_topological(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    if exp.schedule.epsilons.is_empty() {
        return Ok(Some("no epsilons declared".into()));
    }
    let Some(u) = seed(exp, sys, rec)? else { return Ok(None) };
    let metric = exp.metric();
    let opts = exp.solve_options();
    for r in exp.resolutions() {
        let mut topo = Vec::new();
        let mut rows: BTreeMap<usize, Vec<StageReport>> = BTreeMap::new();
        for f in exp.windows()? {
            let l = label(r, &f);
            let t = match stage_d_conditional(sys, &u, &f, r, &opts) {
                Ok(t) => t,
                Err(e) => {
                    rec.error(l, &e);
                    continue;
                }
            };
            let (tlo, thi) = t.normalized();
            for (k, &eps) in exp.schedule.epsilons.iter().enumerate() {
                let le = format!("{l} eps={eps}");
                match stage_n_eps(sys, eps, &f, r, &metric, exp.schedule.packing_budget) {
                    Ok(m) => {
                        let (mlo, mhi) = m.n.normalized();
                        if tlo > mhi {
                            rec.finding(format!("{le}: topological {tlo:.4} above metric {mhi:.4}"));
                        }
                        let claims = vec![
                            cover_claim(sys, &u, r, CoverMode::Conditional, &t),
                            separated_claim(sys, r, &metric, &m.n),
                        ];
                        rec.stage(
                            le,
                            true,
                            values([
                                ("topological", format!("{}", fmt_pair(tlo, thi))),
                                ("metric", fmt_pair(mlo, mhi)),
                                ("N", m.n.upper.to_string()),
                            ]),
                            claims,
                        );
                        rows.entry(k).or_default().push(m.n);
                    }
                    Err(e) => rec.error(le, &e),
                }
            }
            topo.push(t);
        }
        rec.trace(trace_name("topological", r), ConvergenceTrace::new(topo));
        for (k, row) in rows {
            rec.trace(trace_name(&format!("metric-eps{}", exp.schedule.epsilons[k]), r), ConvergenceTrace::new(row));
        }
    }
    Ok(None)
}

fn fmt_pair(lo: f64, hi: f64) -> String {
    if lo == hi {
        format!("{lo:.6}")
    } else {
        format!("{lo:.6}..{hi:.6}")
    }
}

fn separated_claim(sys: &System, r: Option<u32>, metric: &Metric, s: &StageReport) -> Claim {
    let (base, points) = match &s.witness {
        StageWitness::Separated { base, points } => (*base, points.clone()),
        _ => (0, Vec::new()),
    };
    Claim::Separated {
        system: sys.spec().clone(),
        resolution: r,
        window: s.window.clone(),
        epsilon: s.epsilon.unwrap_or(1.0),
        radius: metric.radius,
        base,
        points,
    }
}

fn subadditivity(exp: &Experiment, sys: &System, rec: &mut Recorder) -> Outcome {
    let Some(spec) = &exp.subadditivity else { return Ok(Some("no subadditivity section".into())) };
    let Some(u) = seed(exp, sys, rec)? else { return Ok(None) };
    let family = spec.family(sys.dim())?;
    let target = boxed(sys.dim(), &spec.target)?;
    if let TilingOutcome::Failed(f) = greedy_quasi_tile(&family, &target)? {
        return Ok(Some(format!("target not tiled: uncovered fraction {}", f.uncovered_fraction)));
    }
    let (sr, ur) = prepare(sys, &u, spec.resolution)?;
    let rep = match replay_subadditivity(&sr, &ur, &target, &family, &exp.solve_options()) {
        Ok(rep) => rep,
        Err(e) => {
            rec.error("replay", &e);
            return Ok(None);
        }
    };
    rec.stage(
        "tiling",
        rep.tiling.verify().is_ok(),
        values([
            ("uncovered_fraction", rep.tiling.uncovered_fraction.to_string()),
            ("tiled_mass", rep.tiling.tiled_mass().to_string()),
        ]),
        vec![Claim::Tiling { tiling: rep.tiling.clone() }],
    );
    rec.stage(
        "refinement",
        rep.combined_violation.is_none() && rep.base_witness_refines && rep.tiles.iter().all(|t| t.base_cover_refines),
        values([
            ("combined_ord", rep.combined_ord.to_string()),
            ("violation", format!("{:?}", rep.combined_violation)),
            ("base_witness_refines", rep.base_witness_refines.to_string()),
        ]),
        vec![Claim::Replay {
            system: sys.spec().clone(),
            cover: u.clone(),
            resolution: spec.resolution,
            report: Box::new(rep.clone()),
        }],
    );
    for st in &rep.steps {
        rec.stage(
            st.label.clone(),
            st.holds(),
            values([
                ("lhs", br(st.lhs.lower, st.lhs.upper)),
                ("rhs", br(st.rhs.lower, st.rhs.upper)),
                ("comparison", format!("{:?}", st.comparison)),
            ]),
            Vec::new(),
        );
    }
    Ok(None)
}

/// A box with sides in `spec.sides`, eroded at random boundary points while
/// the invariance defect against `K` stays within `spec.max_defect`.
pub fn random_target(rng: &mut ChaCha8Rng, spec: &TilingSpec) -> Result<Window> {
    let d = spec.dim;
    let sides: Vec<i64> = (0..d).map(|_| rng.random_range(spec.sides[0]..=spec.sides[1])).collect();
    let k = boxed(d, &spec.k)?;
    let whole = boxed(d, &sides)?;
    // A notch at every corner, shrunk until the defect bound holds.
    let mut notches: Vec<Vec<i64>> =
        (0..1usize << d).map(|_| sides.iter().map(|&s| rng.random_range(0..=s / 4)).collect()).collect();
    loop {
        let mut a = whole.clone();
        for (corner, notch) in notches.iter().enumerate() {
            if notch.iter().any(|&n| n == 0) {
                continue;
            }
            let lo: Vec<i64> = (0..d).map(|i| if corner >> i & 1 == 1 { sides[i] - notch[i] } else { 0 }).collect();
            a = a.difference(&Window::box_with(&lo, notch));
        }
        if invariance_defect(&a, &k)? <= spec.max_defect || notches.iter().all(|n| n.iter().any(|&x| x == 0)) {
            return Ok(a);
        }
        for n in &mut notches {
            for x in n.iter_mut() {
                *x /= 2;
            }
        }
    }
}

fn quasi_tiling(exp: &Experiment, rec: &mut Recorder) -> Outcome {
    let Some(spec) = &exp.tiling else { return Ok(Some("no tiling section".into())) };
    let tiles = spec.tiles.iter().map(|s| boxed(spec.dim, s)).collect::<Result<Vec<_>>>()?;
    let family = TileFamily::new(tiles, spec.epsilon, boxed(spec.dim, &spec.k)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    for i in 0..spec.count {
        let a = random_target(&mut rng, spec)?;
        let l = format!("target {i} |A|={}", a.len());
        let defect = invariance_defect(&a, &family.k)?;
        let outcome = greedy_quasi_tile(&family, &a)?;
        let bound = Rational::from_integer(a.len() as i64) / (Rational::from_integer(1) - spec.epsilon);
        let mut vals = values([
            ("defect", defect.to_string()),
            ("uncovered_fraction", outcome.uncovered_fraction().to_string()),
            ("density_bound", format!("{:.3}", rational::to_f64(bound))),
        ]);
        match outcome {
            TilingOutcome::Tiled(q) => {
                let verified = q.verify();
                vals.insert("tiled_mass".into(), q.tiled_mass().to_string());
                vals.insert("verify".into(), verified.clone().err().unwrap_or_else(|| "ok".into()));
                let pass = verified.is_ok() && defect <= spec.max_defect;
                rec.stage(l, pass, vals, vec![Claim::Tiling { tiling: q }]);
            }
            TilingOutcome::Failed(fl) => {
                let message = format!("greedy left {} of {:?} uncovered", fl.uncovered_fraction, a.as_box());
                rec.stage(l, false, vals, vec![Claim::Failure { message }]);
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Verdict;

    fn spec() -> TilingSpec {
        TilingSpec {
            dim: 2,
            tiles: vec![vec![10, 10], vec![12, 12]],
            epsilon: Rational::new(1, 5),
            k: vec![2, 2],
            count: 3,
            sides: [40, 48],
            max_defect: Rational::new(1, 20),
        }
    }

    #[test]
    fn random_targets_are_seeded_and_invariant() {
        let s = spec();
        let k = boxed(2, &s.k).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| random_target(&mut rng, &s).unwrap()).collect::<Vec<_>>()
        };
        let a = draw(3);
        assert_eq!(a, draw(3));
        assert_ne!(a, draw(4));
        for t in &a {
            assert!(invariance_defect(t, &k).unwrap() <= s.max_defect);
            assert!(t.len() >= 40 * 40 * 9 / 16);
        }
    }

    #[test]
    fn broken_seed_cover_is_a_violation_with_its_holes() {
        let text = r#"
name = "holes"
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
kind = "boxes"
boxes = [[[-1, 2], [0.1, 0.3]]]
[schedule]
windows = [[1]]
"#;
        let exp = Experiment::parse(text).unwrap();
        let r = run_check(&exp, CheckKind::FiberBound);
        assert!(matches!(r.verdict, Verdict::Violations { .. }), "{:?} {:?}", r.verdict, r.stages);
        let claims = &r.dumps[0].1.claims;
        assert!(matches!(&claims[0], Claim::Uncovered { cells, .. } if !cells.is_empty()));
        assert!(crate::harness::audit_claim(&claims[0]).is_ok());
    }

    #[test]
    fn checks_without_their_inputs_are_skipped() {
        let text = r#"
name = "bare"
checks = ["product_formula", "measure_bounds", "subadditivity", "quasi_tiling", "g_extension"]
[system]
kind = "full_shift"
dim = 1
alphabet = { kind = "interval", cells = 1 }
[cover]
kind = "trivial"
[schedule]
windows = [[1]]
"#;
        let exp = Experiment::parse(text).unwrap();
        for &c in &exp.checks {
            let r = run_check(&exp, c);
            assert!(matches!(r.verdict, Verdict::Skipped { .. }), "{c:?}: {:?}", r.verdict);
        }
    }
}
