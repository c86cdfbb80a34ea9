//! The nine acceptance criteria, one printed line each. Exits nonzero when
//! any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mdim_core::covers::{
    d_conditional, d_unconditional, d_unconditional_at, CellComplex, CellMap, Cover, Factor, FiberModel, JoinCover,
    SolveOptions,
};
use mdim_core::estimators::separated::DEFAULT_NODE_BUDGET;
use mdim_core::estimators::stage_n_eps;
use mdim_core::group::{invariance_defect, Window};
use mdim_core::harness::{
    self, audit_path, CheckKind, CheckResult, Claim, Experiment, Format, RunVerdict, Verdict,
};
use mdim_core::systems::{Metric, System, SystemSpec};
use mdim_core::tiling::{exact_box_tiling, greedy_quasi_tile, TileFamily, TilingOutcome};
use mdim_core::Rational;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// 1. cover calculus against exhaustive enumeration

fn factor_options() -> Vec<(Factor, usize)> {
    let mut out = Vec::new();
    for c in 1..=8 {
        out.push((Factor::Interval { cells: c }, c as usize + 1));
    }
    for c in 1..=9 {
        out.push((Factor::Circle { cells: c }, c as usize));
    }
    for n in 1..=9 {
        out.push((Factor::points(n), n as usize));
    }
    out
}

/// Every product of at most three factors with at most nine vertices, up to
/// reordering; one-point factors only alone.
fn small_complexes() -> Vec<Arc<CellComplex>> {
    let opts = factor_options();
    let mut out = Vec::new();
    fn go(
        start: usize,
        verts: usize,
        picked: &mut Vec<Factor>,
        opts: &[(Factor, usize)],
        out: &mut Vec<Arc<CellComplex>>,
    ) {
        if !picked.is_empty() {
            out.push(Arc::new(CellComplex::new(picked.clone()).unwrap()));
        }
        if picked.len() == 3 {
            return;
        }
        for (i, (f, v)) in opts.iter().enumerate().skip(start) {
            if verts * v > 9 || (*v == 1 && !picked.is_empty()) {
                continue;
            }
            picked.push(f.clone());
            if *v > 1 {
                go(i, verts * v, picked, opts, out);
            } else {
                out.push(Arc::new(CellComplex::new(picked.clone()).unwrap()));
            }
            picked.pop();
        }
    }
    go(0, 1, &mut Vec::new(), &opts, &mut out);
    out
}

fn random_cover(c: &Arc<CellComplex>, k: usize, rng: &mut ChaCha8Rng) -> Cover {
    let mut cells = vec![Vec::new(); k];
    for cell in 0..c.len() {
        let mask = rng.random_range(1..1usize << k);
        for (j, cs) in cells.iter_mut().enumerate() {
            if mask >> j & 1 == 1 {
                cs.push(cell);
            }
        }
    }
    Cover::new(c.clone(), cells.into_iter().map(|cs| c.open_hull(cs)).collect()).unwrap()
}

/// Minimum `ord` of the star covers of vertex partitions whose blocks meet
/// every fiber inside one member; `None` if no partition is admissible.
fn partition_oracle(c: &CellComplex, u: &Cover, fibers: &FiberModel) -> Option<usize> {
    let verts = c.vertices();
    let n = verts.len();
    let stars: Vec<u128> = verts.iter().map(|&v| c.star(v).iter().fold(0u128, |m, &x| m | 1 << x)).collect();
    let member_of: Vec<u32> = (0..c.len())
        .map(|cell| u.members().iter().enumerate().filter(|(_, m)| m.contains(cell)).fold(0, |a, (j, _)| a | 1 << j))
        .collect();
    let open: Vec<u128> =
        (0..1usize << n).map(|s| (0..n).filter(|i| s >> i & 1 == 1).fold(0, |m, i| m | stars[i])).collect();
    let admissible: Vec<bool> = open
        .iter()
        .map(|&set| {
            let mut meet: HashMap<u32, u32> = HashMap::new();
            for cell in (0..c.len()).filter(|&x| set >> x & 1 == 1) {
                let e = meet.entry(fibers.class_of(cell)).or_insert(u32::MAX);
                *e &= member_of[cell];
            }
            meet.values().all(|&m| m != 0)
        })
        .collect();
    let mut best: Option<usize> = None;
    let mut rgs = vec![0usize; n];
    loop {
        let k = rgs.iter().max().map_or(0, |m| m + 1);
        let blocks: Vec<usize> =
            (0..k).map(|b| (0..n).filter(|&i| rgs[i] == b).fold(0, |s, i| s | 1 << i)).collect();
        if blocks.iter().all(|&b| admissible[b]) {
            let ord = (0..c.len())
                .map(|cell| blocks.iter().filter(|&&b| open[b] >> cell & 1 == 1).count())
                .max()
                .unwrap_or(1)
                - 1;
            if best.is_none_or(|b| ord < b) {
                best = Some(ord);
            }
        }
        let mut i = n;
        loop {
            if i <= 1 {
                return best;
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().max().copied().unwrap_or(0);
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                rgs[i + 1..].iter_mut().for_each(|x| *x = 0);
                break;
            }
        }
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = SolveOptions::default();
    let complexes = small_complexes();
    let mut instances = 0;
    for c in &complexes {
        let mut fibers = vec![FiberModel::single(c.clone()), FiberModel::identity(c.clone())];
        if c.factors().len() > 1 {
            fibers.push(FiberModel::projection(c.clone(), vec![0]).unwrap());
            fibers.push(FiberModel::projection(c.clone(), vec![c.factors().len() - 1]).unwrap());
        }
        for k in 1..=4 {
            for _ in 0..3 {
                let u = random_cover(c, k, &mut rng);
                for f in &fibers {
                    let oracle = partition_oracle(c, &u, f);
                    let solved = d_conditional(&JoinCover::single(Arc::new(u.clone())).unwrap(), f, &opts);
                    let got = match solved {
                        Ok(rep) => {
                            ensure(rep.grid_exact, || format!("{:?}: search not exact", c.factors()))?;
                            ensure(rep.lower <= rep.upper && rep.upper <= rep.grid, || "bracket out of order".into())?;
                            Some(rep.grid)
                        }
                        Err(mdim_core::Error::ResolutionTooCoarse { .. }) => None,
                        Err(e) => return Err(e.to_string()),
                    };
                    ensure(got == oracle, || {
                        format!("{:?} with {k} members: search {got:?}, enumeration {oracle:?}", c.factors())
                    })?;
                    instances += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("suite took {secs:.1}s"))?;
    Ok(format!("{instances} instances on {} complexes agree, {secs:.1}s", complexes.len()))
}

// ---------------------------------------------------------------------------
// 2. dimension sanity

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let opts = SolveOptions::default();
    let base = Arc::new(CellComplex::interval(4));
    let u = Arc::new(Cover::from_boxes(base, &[vec![(-1.0, 0.8)], vec![(0.2, 2.0)]]).map_err(|e| e.to_string())?);
    for r in [4, 8, 16] {
        let rep = d_unconditional_at(&u, r, &opts).map_err(|e| e.to_string())?;
        ensure((rep.lower, rep.upper) == (1, 1), || format!("r={r}: bracket [{}, {}]", rep.lower, rep.upper))?;
    }
    for n in 1..=3 {
        let cube = Arc::new(CellComplex::cube(n, 4));
        let parts = (0..n).map(|k| (u.clone(), Arc::new(CellMap::projection(cube.clone(), &[k]).unwrap()))).collect();
        let bricks = JoinCover::new(cube, parts).map_err(|e| e.to_string())?;
        let rep = d_unconditional(&bricks, &opts).map_err(|e| e.to_string())?;
        ensure((rep.lower, rep.upper) == (n, n), || format!("n={n}: bracket [{}, {}]", rep.lower, rep.upper))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("took {secs:.1}s"))?;
    Ok(format!("interval D=1 at r=4,8,16; bricks [n,n] for n=1,2,3; {secs:.1}s"))
}

// ---------------------------------------------------------------------------
// Bundled experiments, run twice into separate directories.

struct Bundled {
    runs: Vec<(String, RunVerdict)>,
    first: PathBuf,
    second: PathBuf,
    _tmp: tempfile::TempDir,
}

fn experiments_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("experiments")
}

fn run_bundled() -> Result<Bundled, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(experiments_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    let (first, second) = (tmp.path().join("first"), tmp.path().join("second"));
    let mut runs = Vec::new();
    for f in &files {
        let exp = Experiment::load(f).map_err(|e| e.to_string())?;
        let all = [Format::Csv, Format::Json, Format::Svg];
        let v = harness::run(&exp, &first.join(&exp.name), &all).map_err(|e| e.to_string())?.verdict;
        harness::run(&exp, &second.join(&exp.name), &all).map_err(|e| e.to_string())?;
        runs.push((exp.name.clone(), v));
    }
    Ok(Bundled { runs, first, second, _tmp: tmp })
}

impl Bundled {
    fn check(&self, experiment: &str, kind: CheckKind) -> Result<&CheckResult, String> {
        self.runs
            .iter()
            .find(|(n, _)| n == experiment)
            .and_then(|(_, v)| v.checks.iter().find(|c| c.check == kind))
            .ok_or_else(|| format!("{experiment} has no {} check", kind.name()))
    }
}

fn all_pass(c: &CheckResult) -> Result<(), String> {
    ensure(c.verdict == Verdict::AllPass, || format!("{}: {:?}", c.check.name(), c.verdict))
}

fn claims(c: &CheckResult) -> impl Iterator<Item = &Claim> {
    c.dumps.iter().flat_map(|(_, f)| f.claims.iter())
}

// ---------------------------------------------------------------------------
// 3. quasi-tilings

fn density_ok(q: &mdim_core::tiling::QuasiTiling, eps: Rational) -> bool {
    Rational::from_integer(q.tiled_mass()) * (Rational::from_integer(1) - eps)
        <= Rational::from_integer(q.target.len() as i64)
}

fn criterion_3(b: &Bundled) -> Outcome {
    let zero = Rational::from_integer(0);
    let eps = Rational::new(1, 5);
    let mut boxes = 0;
    for k in 1..=10 {
        let a = Window::from_ints(0..1 << k);
        for j in 0..k {
            let t = Window::from_ints(0..1 << j);
            let q = exact_box_tiling(&t, &a).map_err(|e| e.to_string())?;
            q.verify()?;
            ensure(q.uncovered_fraction == zero && q.uncovered.is_empty(), || format!("[0,{}) by [0,{})", 1 << k, 1 << j))?;
            ensure(q.certificate.verify().is_ok() && density_ok(&q, q.epsilon), || "certificate".into())?;
            let family = TileFamily::new(vec![t], eps, Window::from_ints([0])).map_err(|e| e.to_string())?;
            match greedy_quasi_tile(&family, &a).map_err(|e| e.to_string())? {
                TilingOutcome::Tiled(g) => {
                    g.verify()?;
                    let ok = g.uncovered_fraction <= eps && density_ok(&g, eps);
                    ensure(ok, || format!("greedy [0,{}) by [0,{}): uncovered {}", 1 << k, 1 << j, g.uncovered_fraction))?;
                }
                TilingOutcome::Failed(f) => return Err(format!("greedy left {}", f.uncovered_fraction)),
            }
            boxes += 1;
        }
    }
    let c = b.check("tiling", CheckKind::QuasiTiling)?;
    all_pass(c)?;
    let spec = Experiment::load(&experiments_dir().join("tiling.toml")).map_err(|e| e.to_string())?.tiling.unwrap();
    ensure(spec.epsilon == eps && spec.max_defect * 4 <= eps, || "tiling.toml parameters".into())?;
    let k = Window::box_with(&[0, 0], &spec.k);
    let mut worst = zero;
    let mut targets = 0;
    for claim in claims(c) {
        let Claim::Tiling { tiling } = claim else { return Err("non-tiling claim".into()) };
        tiling.verify()?;
        let defect = invariance_defect(&tiling.target, &k).map_err(|e| e.to_string())?;
        ensure(defect * 4 <= eps, || format!("target defect {defect}"))?;
        ensure(tiling.uncovered_fraction <= eps && density_ok(tiling, eps), || "random target".into())?;
        worst = worst.max(tiling.uncovered_fraction);
        targets += 1;
    }
    ensure(targets == 20, || format!("{targets} random targets"))?;
    Ok(format!("{boxes} dyadic boxes exact, greedy within 1/5; 20 random targets, worst uncovered {worst} <= 1/5"))
}

// ---------------------------------------------------------------------------
// 4-5. product formula and the subadditivity replay

fn criterion_4(b: &Bundled) -> Outcome {
    let c = b.check("product", CheckKind::ProductFormula)?;
    all_pass(c)?;
    let labels: Vec<&str> = c.stages.iter().map(|s| s.label.as_str()).collect();
    ensure(labels == ["r=4 F=[1]", "r=4 F=[2]", "r=4 F=[3]"], || format!("stages {labels:?}"))?;
    Ok(format!("both inequalities at r=4 for |F|=1,2,3 ({})", values_of(c, 2)))
}

fn values_of(c: &CheckResult, stage: usize) -> String {
    let v: &BTreeMap<String, String> = &c.stages[stage].values;
    v.iter().map(|(k, x)| format!("{k}={x}")).collect::<Vec<_>>().join(" ")
}

fn criterion_5(b: &Bundled, setup: f64) -> Outcome {
    ensure(setup < 600.0, || format!("bundled runs took {setup:.1}s"))?;
    let mut steps = 0;
    for name in ["product", "skew"] {
        let c = b.check(name, CheckKind::Subadditivity)?;
        all_pass(c)?;
        let report = claims(c)
            .find_map(|cl| match cl {
                Claim::Replay { report, .. } => Some(report),
                _ => None,
            })
            .ok_or_else(|| format!("{name}: no replay"))?;
        ensure(report.target == Window::from_ints(0..8) && report.epsilon == Rational::new(1, 4), || "parameters".into())?;
        ensure(report.tiling.tiles == [Window::from_ints(0..2), Window::from_ints(0..4)], || "tiles".into())?;
        let terms = [report.d_base, report.d_seed, report.d_target, report.d_remainder, report.d_combined];
        let exact = terms.iter().chain(report.tiles.iter().map(|t| &t.d)).all(|t| t.lower == t.upper);
        ensure(exact, || format!("{name}: an unsettled term"))?;
        for claim in claims(c) {
            harness::audit_claim(claim)?;
        }
        steps += report.steps.len();
    }
    Ok(format!("{steps} chain steps exact and certain on product and skew"))
}

// ---------------------------------------------------------------------------
// 6. metric mean dimension of nets

fn net_shift(m: u32) -> System {
    let positions = (0..m).map(|k| if m == 1 { 0.0 } else { k as f64 / (m - 1) as f64 }).collect();
    System::new(SystemSpec::FullShift { dim: 1, alphabet: Factor::Points { count: m, positions: Some(positions) } })
        .unwrap()
}

fn criterion_6() -> Outcome {
    let metric = Metric { radius: 0 };
    let tol = 1e-12;
    for m in [2u32, 3, 5] {
        let gap = 1.0 / (m - 1) as f64;
        for eps in [gap * 0.5, gap * 0.9] {
            for n in 1..=3 {
                let s = stage_n_eps(&net_shift(m), eps, &Window::from_ints(0..n), None, &metric, DEFAULT_NODE_BUDGET)
                    .map_err(|e| e.to_string())?;
                ensure(s.n.upper == Rational::from_integer((m as i64).pow(n as u32)), || format!("m={m} |F|={n}"))?;
                let want = (m as f64).ln() / eps.ln().abs();
                ensure((s.n.normalized().0 - want).abs() < tol, || format!("m={m} eps={eps}: {}", s.n.normalized().0))?;
            }
        }
    }
    let mut values = Vec::new();
    for eps in [0.25f64, 0.125, 0.0625] {
        let m = (1.0 / eps).ceil() as u32;
        let s = stage_n_eps(&net_shift(m), eps, &Window::from_ints(0..2), None, &metric, DEFAULT_NODE_BUDGET)
            .map_err(|e| e.to_string())?;
        values.push(s.n.normalized().0);
    }
    ensure(values.iter().all(|&v| (0.5 - tol..=1.0 + tol).contains(&v)), || format!("values {values:?}"))?;
    ensure(values.windows(2).all(|w| w[1] >= w[0] - tol), || format!("not increasing {values:?}"))?;
    ensure((values[2] - 1.0).abs() < tol, || format!("last value {}", values[2]))?;
    Ok(format!("log m/|log eps| exact below the gap; nets give {values:.6?}"))
}

// ---------------------------------------------------------------------------
// 7-9

fn criterion_7(b: &Bundled) -> Outcome {
    let c = b.check("circle_extension", CheckKind::GExtension)?;
    all_pass(c)?;
    let mut n = 0;
    let mut w = 0;
    for s in &c.stages {
        if s.label.ends_with(" N") {
            let vals: Vec<&String> = s.values.values().collect();
            ensure(vals.windows(2).all(|p| p[0] == p[1]), || format!("{}: {:?}", s.label, s.values))?;
            n += 1;
        }
        if s.label.ends_with(" Wdim") {
            ensure(s.values.get("continuous section").map(String::as_str) == Some("true"), || "section".into())?;
            w += 1;
        }
    }
    for eps in ["eps=0.25", "eps=0.125"] {
        ensure(c.stages.iter().any(|s| s.label.contains(eps)), || format!("no stage at {eps}"))?;
    }
    Ok(format!("{n} N stages equal on every fiber, {w} Wdim transfers both ways"))
}

fn criterion_8(b: &Bundled) -> Outcome {
    let mut stages = 0;
    let mut kinds = [0, 0];
    for (_, v) in &b.runs {
        for c in &v.checks {
            let slot = match c.check {
                CheckKind::FiberBound => 0,
                CheckKind::MeasureBounds => 1,
                _ => continue,
            };
            all_pass(c)?;
            stages += c.stages.len();
            kinds[slot] += 1;
        }
    }
    ensure(kinds[0] > 0 && kinds[1] > 0, || "no fiber or measure checks bundled".into())?;
    Ok(format!("{stages} stages over {} fiber and {} measure checks, no violations", kinds[0], kinds[1]))
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(b: &Bundled) -> Outcome {
    let (a, c) = (files_under(&b.first), files_under(&b.second));
    ensure(a == c, || "the two runs wrote different file sets".into())?;
    for f in &a {
        let same = std::fs::read(b.first.join(f)).unwrap() == std::fs::read(b.second.join(f)).unwrap();
        ensure(same, || format!("{} differs between runs", f.display()))?;
    }
    let lines = audit_path(&b.first).map_err(|e| e.to_string())?;
    let claims: usize = lines.iter().map(|l| l.claims).sum();
    let bad: Vec<&str> = lines.iter().filter(|l| !l.ok()).map(|l| l.file.as_str()).collect();
    ensure(bad.is_empty(), || format!("audit failed: {bad:?}"))?;
    Ok(format!("{} files byte-identical; {} dumps, {claims} claims re-verified", a.len(), lines.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, start: Instant, out: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {n} {name:<28} PASS  {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name:<28} FAIL  {why} [{secs:.1}s]");
            }
        }
    };
    let t = Instant::now();
    report(1, "cover-calculus oracle", t, criterion_1());
    let t = Instant::now();
    report(2, "dimension sanity", t, criterion_2());
    let t = Instant::now();
    let bundled = run_bundled();
    let setup = t.elapsed().as_secs_f64();
    let names = [
        (3, "quasi-tiling"),
        (4, "product formula"),
        (5, "subadditivity replay"),
        (7, "G-extension equalities"),
        (8, "fiber and measure bounds"),
        (9, "reproducibility and audit"),
    ];
    match &bundled {
        Ok(b) => {
            for (n, name) in names {
                let t = Instant::now();
                let out = match n {
                    3 => criterion_3(b),
                    4 => criterion_4(b),
                    5 => criterion_5(b, setup),
                    7 => criterion_7(b),
                    8 => criterion_8(b),
                    _ => criterion_9(b),
                };
                report(n, name, t, out);
                if n == 5 {
                    let t = Instant::now();
                    report(6, "metric mean dimension", t, criterion_6());
                }
            }
        }
        Err(e) => {
            for (n, name) in names {
                report(n, name, Instant::now(), Err(format!("bundled experiments did not run: {e}")));
            }
            report(6, "metric mean dimension", Instant::now(), criterion_6());
        }
    }
    println!("bundled experiments ran twice in {setup:.1}s");
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
