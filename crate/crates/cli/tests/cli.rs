use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halfspace"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn gen_writes_header_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.txt");
    let b = path(&dir, "b.txt");
    for p in [&a, &b] {
        let o = run(&["gen", "--d", "30", "--n", "2000", "--target", "dictator", "--noise", "none", "--seed", "7", "--out", s(p)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next().unwrap(), "d=30 n=2000 provenance=Clean");
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let set = robust_halfspace::LabeledSet::load(&a).unwrap();
    assert_eq!(set.to_text(), text);
}

#[test]
fn gen_rejects_bad_flags() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.txt");
    let o = run(&["gen", "--d", "5", "--n", "10", "--target", "sparse:9", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["gen", "--d", "5", "--n", "10", "--noise", "flip:2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["gen", "--d", "5", "--n", "10", "--target", "wobbly", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn learn_dictator_and_modes_agree() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "data.txt");
    let o = run(&["gen", "--d", "30", "--n", "5000", "--target", "dictator", "--seed", "3", "--out", s(&data)]);
    assert!(o.status.success());
    let r1 = path(&dir, "r1.json");
    let r2 = path(&dir, "r2.json");
    let h = path(&dir, "h.txt");
    let o = run(&["learn", "--eps", "0.1", "--seed", "1", "--in", s(&data), "--out", s(&r1), "--hypothesis-out", s(&h)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["learn", "--eps", "0.1", "--seed", "1", "--mode", "contaminated", "--in", s(&data), "--out", s(&r2)]);
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read_to_string(&r1).unwrap();
    assert_eq!(a, fs::read_to_string(&r2).unwrap());
    let report: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(report["chosen"]["s3_error"].as_f64(), Some(0.0));
    for field in ["chosen", "candidates", "params_applied", "seed"] {
        assert!(report.get(field).is_some(), "missing {field}");
    }

    // The report itself is accepted as a hypothesis.
    let o = run(&["eval", "--hypothesis", s(&r1), "--in", s(&data)]);
    assert_eq!(stdout(&o), "empirical_error=0\n");
    let o = run(&["eval", "--hypothesis", s(&h), "--in", s(&data)]);
    assert_eq!(stdout(&o), "empirical_error=0\n");
}

#[test]
fn learn_missing_file_exits_2() {
    let o = run(&["learn", "--in", "/nonexistent/data.txt"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["learn", "--in", "/nonexistent/data.txt", "--mode", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_examples() {
    let dir = TempDir::new().unwrap();
    let maj = path(&dir, "maj.txt");
    let dict = path(&dir, "dict.txt");
    fs::write(&maj, "1\n1\n1\ntau=0\n").unwrap();
    fs::write(&dict, "1\n0\n0\ntau=0\n").unwrap();
    let o = run(&["eval", "--hypothesis", s(&maj), "--target", s(&dict)]);
    assert_eq!(stdout(&o), "exact_error=0.25\n");

    let data = path(&dir, "data.txt");
    let t = path(&dir, "t.txt");
    let o = run(&["gen", "--d", "12", "--n", "500", "--seed", "4", "--out", s(&data), "--target-out", s(&t)]);
    assert!(o.status.success());
    let o = run(&["eval", "--hypothesis", s(&t), "--in", s(&data), "--target", s(&t)]);
    assert_eq!(stdout(&o), "empirical_error=0\nexact_error=0\n");
    let flipped = robust_halfspace::Halfspace::from_text(&fs::read_to_string(&t).unwrap()).unwrap().negate();
    let nt = path(&dir, "nt.txt");
    fs::write(&nt, flipped.to_text()).unwrap();
    let o = run(&["eval", "--hypothesis", s(&nt), "--target", s(&t)]);
    assert_eq!(stdout(&o), "exact_error=1\n");

    // Dimension mismatch.
    let o = run(&["eval", "--hypothesis", s(&maj), "--in", s(&data)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_is_sorted_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "bench.toml");
    fs::write(
        &cfg,
        "d = [12, 10]\neps = [0.1]\nnoise = [\"none\"]\ntarget = [\"dictator\", \"constant\"]\nseeds = [1, 2]\n",
    )
    .unwrap();
    let a = run(&["bench", "--config", s(&cfg), "--no-timing"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = bin().args(["bench", "--config", s(&cfg), "--no-timing"]).env("HALFSPACE_THREADS", "1").output().unwrap();
    assert_eq!(stdout(&a), stdout(&b));
    let lines: Vec<String> = stdout(&a).lines().map(String::from).collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("10\t") && lines[3].starts_with("12\t"));
    assert!(lines[1].contains("dictator") && lines[2].contains("constant"));
    for l in &lines[1..] {
        let mean: f64 = l.split('\t').nth(5).unwrap().parse().unwrap();
        assert_eq!(mean, 0.0);
    }
}

#[test]
fn one_cell_bench_matches_learn_then_eval() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "one.toml");
    fs::write(&cfg, "d = [8]\neps = [0.1]\ntarget = [\"regular\"]\nseeds = [5]\n").unwrap();
    let o = run(&["bench", "--config", s(&cfg), "--no-timing"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    let bench_err: f64 = row.split('\t').nth(5).unwrap().parse().unwrap();

    // Same cell by hand: the bench draws the target from split(1) of the seed.
    let rng = robust_halfspace::SeededRng::new(5);
    let target = robust_halfspace::synth::random_regular_halfspace(8, &mut rng.split(1)).unwrap();
    let source = robust_halfspace::PlantedSource::clean(target.clone());
    let report = robust_halfspace::learn_halfspace(&robust_halfspace::LearnerConfig::desk(0.1).with_seed(5), &source).unwrap();
    let exact = robust_halfspace::oracle::exact_error(report.hypothesis(), &target).unwrap();
    assert!((bench_err - exact).abs() < 1e-6);
}

#[test]
fn bench_rejects_malformed_config() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "bad.toml");
    fs::write(&cfg, "d = \"many\"\n").unwrap();
    assert_eq!(run(&["bench", "--config", s(&cfg)]).status.code(), Some(2));
    fs::write(&cfg, "d = [5]\neps = [0.1]\nseeds = []\n").unwrap();
    assert_eq!(run(&["bench", "--config", s(&cfg)]).status.code(), Some(2));
    assert_eq!(run(&["bench"]).status.code(), Some(2));
}

#[test]
fn glm_scaling_has_three_rows() {
    let o = run(&["bench", "--glm-scaling"]);
    assert!(matches!(o.status.code(), Some(0) | Some(1)));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let iters: Vec<usize> = rows.iter().map(|r| r.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert!(iters[2] <= 3 * iters[0]);
}
