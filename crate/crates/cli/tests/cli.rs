use std::path::Path;
use std::process::{Command, Output};

fn foldyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foldyn")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const TYPE_40_49: &str = "[system]\na=1\nb=2\nc=-2\nap=0.75\nbp=1.5\ncp=0\napp=3\nbpp=6\ncpp=-6\n";

#[test]
fn no_arguments_prints_help() {
    let o = foldyn(&[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Usage"));
}

#[test]
fn fold_reports_reduction() {
    let o = foldyn(&["fold", "builtin:type-40-49"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for want in ["q = -3/2", "s = 1", "parts: a,b", "A2 = 6", "A1 = -9", "Aconst = 6", "D'cb = 3"] {
        assert!(s.lines().any(|l| l == want), "missing `{want}` in\n{s}");
    }
    let s = stdout(&foldyn(&["fold", "builtin:type-40-37"]));
    assert!(s.contains("q = -9/5\n") && s.contains("parts: a,d,e\n"), "{s}");
}

#[test]
fn fold_reports_non_degenerate_system() {
    let dir = tempfile::tempdir().unwrap();
    let spec =
        write_spec(dir.path(), "nd.spec", "[system]\na=1\nb=2\nc=-2\nap=1\nbp=1.5\ncp=0\napp=3\nbpp=6\ncpp=-6\n");
    let o = foldyn(&["fold", &spec]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("degenerate: no"), "{}", stdout(&o));
    let o = foldyn(&["analyze", &spec]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not degenerate"));
}

#[test]
fn validation_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(dir.path(), "b0.spec", &TYPE_40_49.replace("b=2", "b=0"));
    let o = foldyn(&["fold", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b ≠ 0"));

    let broken = write_spec(dir.path(), "broken.spec", "[system]\na = 1 +\n");
    assert_eq!(foldyn(&["fold", &broken]).status.code(), Some(2));
    assert_eq!(foldyn(&["fold", "/nonexistent/x.spec"]).status.code(), Some(2));
    assert_eq!(foldyn(&["fold", "builtin:nope"]).status.code(), Some(2));
}

#[test]
fn simulate_two_cycle_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.spec", &format!("{TYPE_40_49}[initial]\nx0=1\ny0=3/4\n"));
    let out = dir.path().join("orbit.csv");
    let o = foldyn(&["simulate", &spec, "--steps", "10", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,x,y");
    assert_eq!(rows.len(), 12);
    for (i, row) in rows[1..].iter().enumerate() {
        let want = if i % 2 == 0 {
            "1.0000000000000000,0.75000000000000000"
        } else {
            "0.50000000000000000,1.2500000000000000"
        };
        assert_eq!(*row, format!("{i},{want}"));
    }
    assert!(!csv.contains('\r'));
    let folded = std::fs::read_to_string(dir.path().join("orbit.folded.csv")).unwrap();
    assert!(folded.starts_with("n,r\n0,1.0000000000000000\n1,0.50000000000000000\n"));
    let residual: f64 =
        stdout(&o).lines().find_map(|l| l.strip_prefix("max folding residual = ")).unwrap().parse().unwrap();
    assert!(residual < 1e-12);
}

#[test]
fn simulate_forbidden_start_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "f.spec", &format!("{TYPE_40_49}[initial]\nx0=0\ny0=1\n"));
    let out = dir.path().join("o.csv");
    let o = foldyn(&["simulate", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n=0"));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "n,x,y\n0,0.0000000000000000,1.0000000000000000\n");
}

#[test]
fn simulate_needs_initial_point() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "n.spec", TYPE_40_49);
    assert_eq!(foldyn(&["simulate", &spec]).status.code(), Some(1));
}

#[test]
fn simulate_long_chaotic_orbit() {
    let o = foldyn(&["simulate", "builtin:modified-40-49", "--steps", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let residual: f64 =
        stdout(&o).lines().find_map(|l| l.strip_prefix("max folding residual = ")).unwrap().parse().unwrap();
    assert!(residual < 1e-9, "{residual}");
}

#[test]
fn analyze_examples() {
    let s = stdout(&foldyn(&["analyze", "builtin:type-40-49"]));
    assert!(s.contains("period=2\npoints=0.50000000000000000,1.0000000000000000\nmultiplier=0.0000000000000000\nstability=superstable"), "{s}");

    let o = foldyn(&["analyze", "builtin:modified-40-49", "--scan-periods", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("LiYorkeChaos"), "{s}");
    assert!(s.contains("orbit: aperiodic (no period <= 64 found)"), "{s}");
    let lambda: f64 = s.lines().find_map(|l| l.strip_prefix("lyapunov = ")).unwrap().parse().unwrap();
    assert!(lambda > 0.0);

    let s = stdout(&foldyn(&["analyze", "builtin:period-three", "--scan-periods", "3"]));
    assert!(s.contains("points=2.23976411351"), "{s}");
    assert!(s.contains("period 3: 1 cycle(s)"), "{s}");
}

#[test]
fn analyze_rejects_bad_interval() {
    let o = foldyn(&["analyze", "builtin:type-40-49", "--interval", "3:1"]);
    assert_eq!(o.status.code(), Some(1));
}

fn bifurcate(dir: &Path, name: &str, threads: &str, extra: &[&str]) -> (Output, Vec<u8>) {
    let out = dir.join(name);
    let mut args =
        vec!["bifurcate", "--interval=-1.95:-1.42", "--q-steps", "200", "--transient", "200", "--samples", "20"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let o = Command::new(env!("CARGO_BIN_EXE_foldyn")).args(&args).env("FOLDYN_THREADS", threads).output().unwrap();
    let bytes = std::fs::read(&out).unwrap_or_default();
    (o, bytes)
}

#[test]
fn bifurcate_csv_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (o, a) = bifurcate(dir.path(), "a.csv", "1", &["--seed", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, b) = bifurcate(dir.path(), "b.csv", "4", &["--seed", "5"]);
    let (_, c) = bifurcate(dir.path(), "c.csv", "0", &["--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("q,r\n-1.9500000000000000,"));
    assert_eq!(text.lines().count(), 1 + 200 * 20);
    assert!(stdout(&o).contains("q cells = 200"));
}

#[test]
fn bifurcate_two_value_clusters_in_window() {
    let dir = tempfile::tempdir().unwrap();
    let (o, bytes) = bifurcate(dir.path(), "w.csv", "0", &["--r0", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(bytes).unwrap();
    let mut by_q: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    for line in text.lines().skip(1) {
        let (q, r) = line.split_once(',').unwrap();
        by_q.entry(q.to_owned()).or_default().push(r.parse().unwrap());
    }
    let (lo, hi) = (-(2.5f64.sqrt()), -(2f64.sqrt()));
    let mut inside = 0;
    for (q, rs) in &by_q {
        let q: f64 = q.parse().unwrap();
        if q > lo + 0.01 && q < hi - 0.01 {
            let mut v = rs.clone();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            assert_eq!(v.len(), 2, "q = {q}: {v:?}");
            inside += 1;
        }
    }
    assert!(inside > 20);
}

#[test]
fn bifurcate_rejects_bad_input() {
    assert_eq!(foldyn(&["bifurcate", "--q-steps", "1"]).status.code(), Some(1));
    assert_eq!(foldyn(&["bifurcate", "--interval=-1:-2"]).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_foldyn"))
        .args(["bifurcate", "--q-steps", "3"])
        .env("FOLDYN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_single_criterion() {
    let o = foldyn(&["verify-paper", "--only", "A1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("A1  PASS"));
    assert_eq!(foldyn(&["verify-paper", "--only", "A99"]).status.code(), Some(1));
}

#[test]
fn presets_listed() {
    let s = stdout(&foldyn(&["presets"]));
    assert_eq!(s.lines().count(), 4);
    assert!(s.contains("builtin:period-three"));
}

#[test]
fn bifurcate_matches_library_across_thread_counts() {
    let cfg = foldyn::acceptance::determinism_config(0);
    let foldyn::analysis::R0Policy::Random { seed, count } = cfg.r0 else { panic!("random starts expected") };
    let rows = foldyn::analysis::bifurcation_scan(&cfg).unwrap();
    let mut want = Vec::new();
    foldyn::csv::write_bifurcation(&mut want, &rows).unwrap();

    let dir = tempfile::tempdir().unwrap();
    for (i, threads) in ["1", "1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let o = Command::new(env!("CARGO_BIN_EXE_foldyn"))
            .arg("bifurcate")
            .arg(format!("--interval={}:{}", cfg.q_lo, cfg.q_hi))
            .args(["--q-steps", &cfg.q_steps.to_string()])
            .args(["--transient", &cfg.transient.to_string()])
            .args(["--samples", &cfg.samples.to_string()])
            .args(["--seed", &seed.to_string(), "--starts", &count.to_string()])
            .arg("--out")
            .arg(&out)
            .env("FOLDYN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        assert!(std::fs::read(&out).unwrap() == want, "run {i} with FOLDYN_THREADS={threads} differs");
    }
}
