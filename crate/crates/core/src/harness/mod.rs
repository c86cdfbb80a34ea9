//! Experiment files, the checks that replay the finite-stage arguments,
//! artifact writing, and the witness audit.

pub mod audit;
pub mod checks;
pub mod experiment;
pub mod replay;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audit::{audit_claim, audit_path, AuditLine, Claim, CoverMode, WitnessFile};
pub use experiment::{CheckKind, CoverSpec, Experiment, MeasureSpec, Schedule, SubadditivitySpec, TilingSpec};
pub use replay::{audit_replay, replay_subadditivity, Bracket, ReplayReport, Step};

use crate::error::Result;
use crate::estimators::ConvergenceTrace;

/// One stage of a check: a pass flag, the values compared, and the dump
/// files holding its certificates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageCheck {
    pub label: String,
    pub pass: bool,
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    AllPass,
    Violations { stages: Vec<String> },
    /// Observations only; the list names stages worth a closer look.
    Empirical { findings: Vec<String> },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: CheckKind,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub stages: Vec<StageCheck>,
    #[serde(skip)]
    pub traces: Vec<(String, ConvergenceTrace)>,
    #[serde(skip)]
    pub dumps: Vec<(String, WitnessFile)>,
}

impl CheckResult {
    pub fn failed(&self) -> bool {
        !self.check.is_empirical() && matches!(self.verdict, Verdict::Violations { .. })
    }

    pub fn skipped(check: CheckKind, reason: impl Into<String>) -> Self {
        CheckResult {
            check,
            verdict: Verdict::Skipped { reason: reason.into() },
            stages: Vec::new(),
            traces: Vec::new(),
            dumps: Vec::new(),
        }
    }
}

/// Collects the stages of one check and names their dump files.
pub struct Recorder {
    experiment: String,
    check: CheckKind,
    stages: Vec<StageCheck>,
    traces: Vec<(String, ConvergenceTrace)>,
    dumps: Vec<(String, WitnessFile)>,
    findings: Vec<String>,
}

impl Recorder {
    pub fn new(experiment: &str, check: CheckKind) -> Self {
        Recorder {
            experiment: experiment.into(),
            check,
            stages: Vec::new(),
            traces: Vec::new(),
            dumps: Vec::new(),
            findings: Vec::new(),
        }
    }

    pub fn stage(&mut self, label: impl Into<String>, pass: bool, values: BTreeMap<String, String>, claims: Vec<Claim>) {
        let label = label.into();
        let mut witnesses = Vec::new();
        if !claims.is_empty() {
            let name = format!("{}-{:03}.json", self.check.name(), self.stages.len());
            self.dumps.push((
                name.clone(),
                WitnessFile { experiment: self.experiment.clone(), check: self.check.name().into(), stage: label.clone(), claims },
            ));
            witnesses.push(name);
        }
        self.stages.push(StageCheck { label, pass, values, witnesses });
    }

    /// A stage that could not be computed counts as a violation.
    pub fn error(&mut self, label: impl Into<String>, e: &crate::Error) {
        self.stage(label, false, BTreeMap::new(), vec![Claim::Failure { message: e.to_string() }]);
    }

    pub fn trace(&mut self, name: impl Into<String>, t: ConvergenceTrace) {
        self.traces.push((name.into(), t));
    }

    pub fn finding(&mut self, f: impl Into<String>) {
        self.findings.push(f.into());
    }

    pub fn finish(self) -> CheckResult {
        let verdict = if self.check.is_empirical() {
            Verdict::Empirical { findings: self.findings }
        } else {
            let failed: Vec<String> = self.stages.iter().filter(|s| !s.pass).map(|s| s.label.clone()).collect();
            if failed.is_empty() {
                Verdict::AllPass
            } else {
                Verdict::Violations { stages: failed }
            }
        };
        CheckResult { check: self.check, verdict, stages: self.stages, traces: self.traces, dumps: self.dumps }
    }
}

/// Builds a value map from `(key, value)` pairs.
pub fn values<K: Into<String>, V: ToString>(pairs: impl IntoIterator<Item = (K, V)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub experiment: String,
    pub exit_code: i32,
    pub checks: Vec<CheckResult>,
}

pub struct RunOutcome {
    pub verdict: RunVerdict,
    pub directory: PathBuf,
}

pub fn run_checks(exp: &Experiment) -> Vec<CheckResult> {
    exp.checks.par_iter().map(|&c| checks::run_check(exp, c)).collect()
}

/// Runs every check concurrently, then writes the canonical echo, the
/// traces, the dumps and `verdict.json` in a fixed order.
pub fn run(exp: &Experiment, out: &Path, formats: &[Format]) -> Result<RunOutcome> {
    let results = run_checks(exp);
    let exit_code = i32::from(results.iter().any(CheckResult::failed));
    let verdict = RunVerdict { experiment: exp.name.clone(), exit_code, checks: results };
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("experiment.toml"), exp.canonical()?)?;
    let wdir = out.join("witnesses");
    if wdir.exists() {
        std::fs::remove_dir_all(&wdir)?;
    }
    let tdir = out.join("traces");
    if tdir.exists() {
        std::fs::remove_dir_all(&tdir)?;
    }
    for c in &verdict.checks {
        if !c.dumps.is_empty() {
            std::fs::create_dir_all(&wdir)?;
        }
        for (name, file) in &c.dumps {
            std::fs::write(wdir.join(name), to_json(file)?)?;
        }
        if !c.traces.is_empty() {
            std::fs::create_dir_all(&tdir)?;
        }
        for (name, t) in &c.traces {
            let stem = format!("{}-{name}", c.check.name());
            for f in formats {
                let (ext, body) = match f {
                    Format::Csv => ("csv", t.to_csv(&format!("{stem}#"))),
                    Format::Json => ("json", to_json(t)?),
                    Format::Svg => ("svg", t.to_svg(&stem)),
                };
                std::fs::write(tdir.join(format!("{stem}.{ext}")), body)?;
            }
        }
    }
    std::fs::write(out.join("verdict.json"), to_json(&verdict)?)?;
    std::fs::write(out.join("stages.csv"), stages_csv(&verdict))?;
    Ok(RunOutcome { verdict, directory: out.to_path_buf() })
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| crate::Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// `check,stage,pass,values,witnesses` over every stage of every check.
pub fn stages_csv(v: &RunVerdict) -> String {
    let mut s = String::from("check,stage,pass,values,witnesses\n");
    for c in &v.checks {
        for st in &c.stages {
            let vals: Vec<String> = st.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                s,
                "{},\"{}\",{},\"{}\",{}",
                c.check.name(),
                st.label.replace('"', "'"),
                st.pass,
                vals.join(" ").replace('"', "'"),
                st.witnesses.join(" ")
            );
        }
    }
    s
}

/// One line per check for terminal output.
pub fn summary(v: &RunVerdict) -> String {
    let mut s = String::new();
    for c in &v.checks {
        let stages = c.stages.len();
        let passed = c.stages.iter().filter(|x| x.pass).count();
        let word = match &c.verdict {
            Verdict::AllPass => "pass".to_string(),
            Verdict::Violations { stages } => format!("FAIL ({} stages)", stages.len()),
            Verdict::Empirical { findings } => format!("empirical ({} findings)", findings.len()),
            Verdict::Skipped { reason } => format!("skipped: {reason}"),
        };
        let _ = writeln!(s, "{:<22} {passed}/{stages} stages  {word}", c.check.name());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const INTERVAL: &str = r#"
name = "interval"
checks = ["subadditivity", "metric_vs_topological"]

[system]
kind = "full_shift"
dim = 1
alphabet = { kind = "interval", cells = 1 }

[cover]
kind = "boxes"
boxes = [[[-1, 1]], [[0, 2]]]

[schedule]
windows = [[1], [2]]
resolutions = [4]
epsilons = [0.5]

[subadditivity]
target = [8]
tiles = [[2]]
epsilon = "1/4"
"#;

    #[test]
    fn recorder_verdicts() {
        let mut rec = Recorder::new("x", CheckKind::FiberBound);
        rec.stage("a", true, values([("k", 1)]), vec![Claim::Failure { message: "none".into() }]);
        rec.stage("b", true, BTreeMap::new(), Vec::new());
        assert_eq!(rec.finish().verdict, Verdict::AllPass);

        let mut rec = Recorder::new("x", CheckKind::FiberBound);
        rec.stage("a", true, BTreeMap::new(), Vec::new());
        rec.error("b", &crate::Error::EmptyWindow);
        let r = rec.finish();
        assert_eq!(r.verdict, Verdict::Violations { stages: vec!["b".into()] });
        assert!(r.failed());
        assert_eq!(r.stages[1].witnesses, vec!["fiber_bound-001.json".to_string()]);
        assert!(matches!(r.dumps[0].1.claims[0], Claim::Failure { .. }));

        let mut rec = Recorder::new("x", CheckKind::MetricVsTopological);
        rec.stage("a", false, BTreeMap::new(), Vec::new());
        rec.finding("a");
        let r = rec.finish();
        assert_eq!(r.verdict, Verdict::Empirical { findings: vec!["a".into()] });
        assert!(!r.failed());
        assert!(!CheckResult::skipped(CheckKind::Subadditivity, "n/a").failed());
    }

    #[test]
    fn run_writes_a_reproducible_directory() {
        let exp = Experiment::parse(INTERVAL).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        let first = run(&exp, &a, &[Format::Csv, Format::Json]).unwrap();
        run(&exp, &b, &[Format::Csv, Format::Json]).unwrap();
        assert_eq!(first.verdict.exit_code, 0);
        for name in ["experiment.toml", "verdict.json", "stages.csv"] {
            assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
        }
        let lines = audit_path(&a).unwrap();
        assert!(!lines.is_empty() && lines.iter().all(AuditLine::ok));
        assert!(a.join("traces").read_dir().unwrap().count() > 0);
        let csv = std::fs::read_to_string(a.join("stages.csv")).unwrap();
        assert!(csv.starts_with("check,stage,pass,values,witnesses\nsubadditivity,\"tiling\",true,"));
        assert_eq!(summary(&first.verdict).lines().count(), 2);
    }
}
