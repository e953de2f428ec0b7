//! `halfspace`: generate data, learn, evaluate and benchmark.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use robust_halfspace::glm::{draw_glm_label, learn_sigmoid_glm, Activation, GlmData, GlmOptions};
use robust_halfspace::oracle::{clean_error, exact_error, ENUM_LIMIT};
use robust_halfspace::synth::{apply_noise, label_with, planted_sparse_halfspace, random_point, random_regular_halfspace, sample_uniform};
use robust_halfspace::{
    empirical_error, learn, EmpiricalSource, Halfspace, LabeledSet, LearnerConfig, Mode, NoiseSpec, PlantedSource, RunReport,
    SeededRng,
};

#[derive(Parser)]
#[command(name = "halfspace", version, about = "Robust halfspace learning over the Boolean cube")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a labeled data set from a planted target.
    Gen(GenArgs),
    /// Run the learner on a data set and write a JSON report.
    Learn(LearnArgs),
    /// Error of a hypothesis on a data set, and exactly against a target.
    Eval(EvalArgs),
    /// Sweep a grid of settings from a TOML file.
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    n: usize,
    /// regular | sparse:K | dictator | constant
    #[arg(long, default_value = "regular")]
    target: TargetKind,
    /// none | flip:R | boundary:R | contam:R:ADVERSARY
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the planted halfspace here.
    #[arg(long)]
    target_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct LearnArgs {
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// label-noise | contaminated
    #[arg(long, default_value = "label-noise")]
    mode: String,
    #[arg(long)]
    cap_k: Option<usize>,
    #[arg(long)]
    cap_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the formula sizes (clamped only by the caps) instead of desk sizes.
    #[arg(long)]
    full: bool,
    #[arg(long = "in")]
    input: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the chosen halfspace in text form here.
    #[arg(long)]
    hypothesis_out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Halfspace text file or a learn report.
    #[arg(long)]
    hypothesis: PathBuf,
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time the sigmoid GLM learner at w_max ∈ {1e3, 1e6, 1e9}.
    #[arg(long)]
    glm_scaling: bool,
    /// Leave wall time out of the table.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TargetKind {
    Regular,
    Sparse(usize),
    Dictator,
    Constant,
}

impl FromStr for TargetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "regular" => Ok(TargetKind::Regular),
            "dictator" => Ok(TargetKind::Dictator),
            "constant" => Ok(TargetKind::Constant),
            _ => s
                .strip_prefix("sparse:")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k > 0)
                .map(TargetKind::Sparse)
                .ok_or_else(|| format!("unknown target `{s}`")),
        }
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TargetKind::Regular => f.write_str("regular"),
            TargetKind::Sparse(k) => write!(f, "sparse:{k}"),
            TargetKind::Dictator => f.write_str("dictator"),
            TargetKind::Constant => f.write_str("constant"),
        }
    }
}

fn make_target(kind: TargetKind, d: usize, rng: &mut SeededRng) -> Result<Halfspace> {
    Ok(match kind {
        TargetKind::Regular => random_regular_halfspace(d, rng)?,
        TargetKind::Sparse(k) => {
            if k > d {
                bail!("sparse:{k} needs d ≥ {k}");
            }
            planted_sparse_halfspace(d, k, rng)?
        }
        TargetKind::Dictator => Halfspace::dictator(d, 0),
        TargetKind::Constant => Halfspace::new(vec![1.0; d], d as f64 + 1.0)?,
    })
}

/// Errors that should end the process with a given code.
struct Exit(u8);

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<Exit> {
    if a.d == 0 {
        bail!("--d must be positive");
    }
    let noise: NoiseSpec = a.noise.parse()?;
    let rng = SeededRng::new(a.seed);
    let target = make_target(a.target, a.d, &mut rng.split(1))?;
    let mut draw = rng.split(2);
    let set = label_with(&target, sample_uniform(a.d, a.n, &mut draw)?)?;
    let set = apply_noise(set, noise, Some(&target), &mut draw)?;
    set.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(p) = &a.target_out {
        fs::write(p, target.to_text()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(Exit(0))
}

fn learner_config(eps: f64, seed: u64, full: bool, cap_k: Option<usize>, cap_samples: Option<usize>) -> LearnerConfig {
    let mut cfg = if full { LearnerConfig::new(eps) } else { LearnerConfig::desk(eps) };
    cfg.seed = seed;
    if let Some(k) = cap_k {
        cfg.caps.cap_k = k;
    }
    if let Some(n) = cap_samples {
        cfg.caps.cap_samples = n;
    }
    cfg
}

fn load_set(path: &Path) -> Result<LabeledSet> {
    LabeledSet::load(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_learn(a: LearnArgs) -> Result<Exit> {
    let mode: Mode = a.mode.parse()?;
    let set = load_set(&a.input)?;
    let cfg = learner_config(a.eps, a.seed, a.full, a.cap_k, a.cap_samples);
    let source = EmpiricalSource::new(set)?;
    let report = learn(&cfg, &source, mode)?;
    let mut json = report.to_json();
    json.push('\n');
    write_out(a.out.as_deref(), &json)?;
    if let Some(p) = &a.hypothesis_out {
        fs::write(p, report.hypothesis().to_text()).with_context(|| format!("writing {}", p.display()))?;
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Exit(if report.warnings.is_empty() { 0 } else { 1 }))
}

fn load_hypothesis(path: &Path) -> Result<Halfspace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let report: RunReport = serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))?;
        return Ok(report.chosen.hypothesis);
    }
    Halfspace::from_text(&text).with_context(|| format!("parsing halfspace {}", path.display()))
}

fn cmd_eval(a: EvalArgs) -> Result<Exit> {
    let h = load_hypothesis(&a.hypothesis)?;
    if a.input.is_none() && a.target.is_none() {
        bail!("eval needs --in, --target, or both");
    }
    if let Some(p) = &a.input {
        let set = load_set(p)?;
        if set.dim() != h.dim() {
            bail!("dimension mismatch: hypothesis has d={}, data has d={}", h.dim(), set.dim());
        }
        println!("empirical_error={}", empirical_error(&h, &set)?);
    }
    if let Some(p) = &a.target {
        let f = load_hypothesis(p)?;
        if f.dim() != h.dim() {
            bail!("dimension mismatch: hypothesis has d={}, target has d={}", h.dim(), f.dim());
        }
        if h.dim() <= ENUM_LIMIT {
            println!("exact_error={}", exact_error(&h, &f)?);
        } else {
            eprintln!("note: d={} exceeds {ENUM_LIMIT}; exact error skipped", h.dim());
        }
    }
    Ok(Exit(0))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    d: Vec<usize>,
    eps: Vec<f64>,
    #[serde(default = "default_noise")]
    noise: Vec<String>,
    #[serde(default = "default_target")]
    target: Vec<String>,
    seeds: Vec<u64>,
    #[serde(default = "default_mode")]
    mode: String,
    /// Fresh samples for the error estimate when d exceeds the enumeration limit.
    #[serde(default = "default_fresh")]
    fresh: usize,
    #[serde(default)]
    full: bool,
    cap_k: Option<usize>,
    cap_samples: Option<usize>,
}

fn default_noise() -> Vec<String> {
    vec!["none".into()]
}
fn default_target() -> Vec<String> {
    vec!["regular".into()]
}
fn default_mode() -> String {
    "label-noise".into()
}
fn default_fresh() -> usize {
    100_000
}

#[derive(Debug, Clone)]
struct Cell {
    d: usize,
    eps: f64,
    noise: NoiseSpec,
    target: TargetKind,
}

impl Cell {
    fn key(&self) -> (usize, u64, String, TargetKind) {
        (self.d, self.eps.to_bits(), self.noise.to_string(), self.target)
    }
}

struct Row {
    cell: Cell,
    mean: f64,
    std: f64,
    seconds: f64,
}

fn run_cell(cell: &Cell, cfg: &BenchConfig, mode: Mode) -> Result<Row> {
    let start = Instant::now();
    let errors = cfg
        .seeds
        .iter()
        .map(|&seed| -> Result<f64> {
            let rng = SeededRng::new(seed);
            let target = make_target(cell.target, cell.d, &mut rng.split(1))?;
            let source = PlantedSource::new(target.clone(), cell.noise)?;
            let lc = learner_config(cell.eps, seed, cfg.full, cfg.cap_k, cfg.cap_samples);
            let report = learn(&lc, &source, mode)?;
            Ok(clean_error(report.hypothesis(), &target, cfg.fresh, &mut rng.split(9))?)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    Ok(Row { cell: cell.clone(), mean, std: var.sqrt(), seconds: start.elapsed().as_secs_f64() })
}

fn bench_table(cfg: &BenchConfig, timing: bool) -> Result<String> {
    if cfg.d.is_empty() || cfg.eps.is_empty() || cfg.noise.is_empty() || cfg.target.is_empty() || cfg.seeds.is_empty() {
        bail!("every sweep axis needs at least one value");
    }
    let mode: Mode = cfg.mode.parse()?;
    let noises = cfg.noise.iter().map(|s| s.parse::<NoiseSpec>()).collect::<Result<Vec<_>, _>>()?;
    let targets = cfg
        .target
        .iter()
        .map(|s| s.parse::<TargetKind>().map_err(|e| anyhow!(e)))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for &d in &cfg.d {
        for &eps in &cfg.eps {
            for &noise in &noises {
                for &target in &targets {
                    cells.push(Cell { d, eps, noise, target });
                }
            }
        }
    }
    let mut rows = cells.par_iter().map(|c| run_cell(c, cfg, mode)).collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.cell.key());
    let mut out = String::from("d\teps\tnoise\ttarget\tseeds\terror_mean\terror_std");
    out.push_str(if timing { "\tseconds\n" } else { "\n" });
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}",
            r.cell.d,
            r.cell.eps,
            r.cell.noise,
            r.cell.target,
            cfg.seeds.len(),
            r.mean,
            r.std
        ));
        if timing {
            out.push_str(&format!("\t{:.3}", r.seconds));
        }
        out.push('\n');
    }
    Ok(out)
}

const GLM_SCALING_W: [f64; 3] = [1e3, 1e6, 1e9];

/// Sigmoid GLM timings on one fixed d = 5 data set. Returns the table and
/// whether the largest-to-smallest time ratio stayed within 3.
fn glm_scaling(timing: bool) -> Result<(String, bool)> {
    let d = 5;
    let mut rng = SeededRng::new(2024);
    let w_star = [1.5, -1.0, 0.5, 0.0, 2.0];
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = (0..20_000)
        .map(|_| {
            let x = random_point(d, &mut rng).to_f64_vec();
            let z: f64 = x.iter().zip(&w_star).map(|(a, b)| a * b).sum::<f64>() + 0.25;
            let y = draw_glm_label(Activation::Sigmoid, z, rng.uniform()).to_f64();
            (x, y)
        })
        .unzip();
    let data = GlmData::new(d, &xs, &ys)?;
    let opts = GlmOptions::default();
    let mut rows = Vec::new();
    for &w in &GLM_SCALING_W {
        // Best of three to damp scheduler noise.
        let mut best = f64::INFINITY;
        let mut fit = None;
        for _ in 0..3 {
            let start = Instant::now();
            fit = Some(learn_sigmoid_glm(0.05, w, &data, &opts)?);
            best = best.min(start.elapsed().as_secs_f64());
        }
        rows.push((w, fit.expect("three runs"), best));
    }
    let base = rows[0].2.max(1e-9);
    let mut out = String::from("w_max\titerations\tbudget");
    out.push_str(if timing { "\tseconds\tratio\n" } else { "\n" });
    let mut ok = true;
    for (w, fit, secs) in &rows {
        out.push_str(&format!("{w:e}\t{}\t{}", fit.iterations, fit.budget));
        if timing {
            out.push_str(&format!("\t{secs:.4}\t{:.3}", secs / base));
        }
        out.push('\n');
        ok &= secs / base <= 3.0;
    }
    Ok((out, ok))
}

fn cmd_bench(a: BenchArgs) -> Result<Exit> {
    let mut text = String::new();
    let mut code = 0;
    if a.glm_scaling {
        let (t, ok) = glm_scaling(!a.no_timing)?;
        text.push_str(&t);
        if !ok {
            eprintln!("warning: GLM runtime grew more than 3x across w_max");
            code = 1;
        }
    }
    if let Some(p) = &a.config {
        let raw = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let cfg: BenchConfig = toml::from_str(&raw).with_context(|| format!("parsing {}", p.display()))?;
        text.push_str(&bench_table(&cfg, !a.no_timing)?);
    }
    if !a.glm_scaling && a.config.is_none() {
        bail!("bench needs --config, --glm-scaling, or both");
    }
    write_out(a.out.as_deref(), &text)?;
    Ok(Exit(code))
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HALFSPACE_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow!("HALFSPACE_THREADS must be a positive integer"))?;
        if n == 0 {
            bail!("HALFSPACE_THREADS must be a positive integer");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| match cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Learn(a) => cmd_learn(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    });
    match result {
        Ok(Exit(code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
