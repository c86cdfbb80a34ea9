use std::path::Path;
use std::process::{Command, Output};

fn mdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdim")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const HOLES: &str = r#"
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

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn broken_cover_exits_one_with_an_uncovered_witness() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "holes.toml", HOLES);
    let out = dir.path().join("out");
    let o = mdim(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
    let dump = std::fs::read_to_string(out.join("witnesses/fiber_bound-000.json")).unwrap();
    assert!(dump.contains("\"uncovered\""), "{dump}");

    // The dump is a genuine certificate of the holes.
    let o = mdim(&["audit", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("1 of 1 dumps verified"));
}

#[test]
fn empty_check_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let text = HOLES.replace(r#"checks = ["fiber_bound"]"#, "checks = []");
    let file = write(dir.path(), "none.toml", &text);
    let out = dir.path().join("out");
    let o = mdim(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("verdict.json").exists());
}

#[test]
fn forged_dump_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "holes.toml", HOLES);
    let out = dir.path().join("out");
    mdim(&["run", &file, "--out", out.to_str().unwrap()]);
    let path = out.join("witnesses/fiber_bound-000.json");
    let mut dump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let claim = &mut dump["claims"][0];
    claim["cells"] = serde_json::json!([]);
    std::fs::write(&path, dump.to_string()).unwrap();
    let o = mdim(&["audit", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn tile_and_echo() {
    let o = mdim(&["tile", "16", "--tiles", "4", "--epsilon", "1/5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("tile,center,size\n0,0,4\n"), "{s}");
    assert!(s.ends_with("# uncovered fraction 0\n"), "{s}");

    let exp = Path::new(env!("CARGO_MANIFEST_DIR")).join("experiments/interval.toml");
    let o = mdim(&["echo", exp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("name = \"interval\""));

    let o = mdim(&["tile", "16", "--tiles", "4", "--epsilon", "two"]);
    assert_eq!(o.status.code(), Some(2));
}
