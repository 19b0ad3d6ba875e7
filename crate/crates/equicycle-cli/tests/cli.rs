use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equicycle"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn gen(dir: &Path, name: &str, kind: &[&str]) -> String {
    let path = dir.join(name);
    let mut args = vec!["gen"];
    args.extend_from_slice(kind);
    args.extend(["--to", path.to_str().unwrap()]);
    assert_eq!(code(&run(&args)), 0);
    path.to_str().unwrap().to_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn oracle_on_k44_and_a_cycle() {
    let dir = scratch("oracle");
    let k44 = gen(&dir, "k44.g", &["k44"]);
    let out = dir.join("k44");
    let o = run(&["oracle", "cycles", "--graph", &k44, "--k", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&out.join("oracle.json"));
    assert_eq!(v["outcome"], "found");
    assert_eq!(v["family"]["vertex_set"].as_array().unwrap().len(), 8);
    let log = json(&out.join("log.json"));
    assert_eq!(log["exit"], 0);
    assert_eq!(log["config_hash"].as_str().unwrap().len(), 64);

    let c5 = gen(&dir, "c5.g", &["cycle", "--n", "5"]);
    let o = run(&["oracle", "cycles", "--graph", &c5, "--k", "2"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"], "none");

    let o = run(&["oracle", "cycles", "--graph", &k44, "--k", "2", "--node-budget", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_expander_exit_codes() {
    let dir = scratch("check");
    let k44 = gen(&dir, "k44.g", &["k44"]);
    let o = run(&["check-expander", "--graph", &k44, "--epsilon", "0.03125", "--s", "1", "--mode", "exact"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "certificate");

    // Two disjoint triangles: a side of the cut has no neighbours outside.
    let path = dir.join("two-triangles.g");
    std::fs::write(&path, "6 6\n0 1\n1 2\n0 2\n3 4\n4 5\n3 5\n").unwrap();
    let o = run(&["check-expander", "--graph", path.to_str().unwrap(), "--s", "0"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "witness");

    let big = gen(&dir, "c40.g", &["cycle", "--n", "40"]);
    assert_eq!(code(&run(&["check-expander", "--graph", &big, "--s", "1", "--n-exact", "40"])), 2);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&["no-such-command"])), 64);
    assert_eq!(code(&run(&["oracle", "cycles", "--k", "2"])), 64);
    assert_eq!(code(&run(&["verify", "--graph", "/nonexistent.g", "--cycles", "/nonexistent.json", "--k", "2"])), 64);
    assert_eq!(code(&run(&["run", "--k", "0", "--bundled"])), 64);
    assert_eq!(code(&run(&["gen", "cycle", "--n", "2"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn bundled_run_verifies_and_reproduces() {
    let dir = scratch("run");
    let g = gen(&dir, "bundled.g", &["bundled"]);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&["run", "--bundled", "--k", "2", "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let cycles = a.join("cycles.json");
    let o = run(&["verify", "--graph", &g, "--cycles", cycles.to_str().unwrap(), "--k", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["verify", "--graph", &g, "--cycles", cycles.to_str().unwrap(), "--k", "3"])), 1);

    let mut files: Vec<PathBuf> = Vec::new();
    for sub in ["", "certificates"] {
        for e in std::fs::read_dir(a.join(sub)).unwrap() {
            let p = e.unwrap().path();
            if p.is_file() {
                files.push(p.strip_prefix(&a).unwrap().to_owned());
            }
        }
    }
    assert!(files.len() > 10);
    for f in files {
        assert_eq!(std::fs::read(a.join(&f)).unwrap(), std::fs::read(b.join(&f)).unwrap(), "{}", f.display());
    }
}

#[test]
fn failing_run_reports_its_stage() {
    let dir = scratch("fail");
    let o = run(&["run", "--bundled", "--k", "2", "--seed", "0", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let f = json(&dir.join("failure.json"));
    assert_eq!(f["stage"], "connect");
    assert_eq!(f["seed"], 0);
    assert!(!dir.join("cycles.json").exists());
}

#[test]
fn module_commands() {
    let dir = scratch("modules");
    let g = gen(&dir, "nr.g", &["near-regular", "--half", "40", "--d", "12", "--seed", "1"]);
    assert_eq!(code(&run(&["rmbg", "build", "--m", "1"])), 0);
    assert_eq!(code(&run(&["forest", "--graph", &g, "--t", "4", "--rule", "maximum"])), 0);
    assert_eq!(code(&run(&["regularize", "--graph", &g, "--lambda", "2", "--steps", "2"])), 0);
    assert_eq!(code(&run(&["decompose", "--graph", &g, "--k", "2", "--s", "0.1"])), 0);
    assert_eq!(code(&run(&["extract-expander", "--graph", &g])), 0);

    let pairs = dir.join("pairs.json");
    let set = dir.join("set.json");
    std::fs::write(&pairs, "[[0, 1]]").unwrap();
    std::fs::write(&set, serde_json::to_string(&(2..80).collect::<Vec<usize>>()).unwrap()).unwrap();
    let o = run(&["connect", "--graph", &g, "--pairs", pairs.to_str().unwrap(), "--set", set.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    std::fs::write(&set, "[]").unwrap();
    let o = run(&["connect", "--graph", &g, "--pairs", pairs.to_str().unwrap(), "--set", set.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}
