//! The end-to-end learner: influential coordinates, heavy and regular
//! stages for every head size, the sparse LP, and held-out selection.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AppliedParams, LearnerConfig, Param};
use crate::cube::{LabeledSet, Sign};
use crate::error::{Error, Result};
use crate::glm::{find_heavy_coefficients, GlmData, GlmOptions};
use crate::halfspace::{embed, empirical_error, Halfspace};
use crate::hinge::{find_regular_coefficients, TailProblem};
use crate::influence::{estimate_chow, top_k_indices};
use crate::robust::{find_regular_contaminated, FilterReport};
use crate::rng::SeededRng;
use crate::sparse::fit_sparse;
use crate::synth::SampleSource;

// Stream indices for SeededRng::split.
const STREAM_S1: u64 = 1;
const STREAM_S2: u64 = 2;
const STREAM_S3: u64 = 3;
const STREAM_HOLDOUT: u64 = 4;
const STREAM_GLM: u64 = 100;
const STREAM_HINGE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    LabelNoise,
    Contaminated,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "label-noise" => Ok(Mode::LabelNoise),
            "contaminated" => Ok(Mode::Contaminated),
            _ => Err(Error::InvalidParameter(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    /// Heavy + regular stages with a head of this size.
    Head(usize),
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmSummary {
    pub bias: f64,
    pub surrogate_value: f64,
    pub iterations: usize,
    pub budget: usize,
    pub samples: usize,
    pub distinct_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSummary {
    pub filtered: usize,
    pub drawn: usize,
    pub objective: f64,
    pub iterations: usize,
    pub empty_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub hypothesis: Halfspace,
    pub s3_error: f64,
    /// Set when a stage failed and the constant +1 was substituted.
    pub failure: Option<String>,
    pub glm: Option<GlmSummary>,
    pub tail: Option<TailSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub filter: Option<FilterReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub index: usize,
    pub kind: CandidateKind,
    pub hypothesis: Halfspace,
    pub s3_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub chosen: Chosen,
    pub candidates: Vec<Candidate>,
    pub influential: Vec<usize>,
    pub sparse_feasible: bool,
    pub params_applied: BTreeMap<String, Param>,
    pub seed: u64,
    pub d: usize,
    pub epsilon: f64,
    /// Conditions under which the learning guarantee does not apply.
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn hypothesis(&self) -> &Halfspace {
        &self.chosen.hypothesis
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct HeadResult {
    hypothesis: Halfspace,
    glm: GlmSummary,
    tail: TailSummary,
    filter: Option<FilterReport>,
}

fn head_candidate(
    params: &AppliedParams,
    source: &dyn SampleSource,
    head: &[usize],
    mode: Mode,
    rng: &SeededRng,
) -> Result<HeadResult> {
    let d = params.d;
    let delta = head.len();
    let glm_set = source.draw(params.glm_samples, &mut rng.split(STREAM_GLM + delta as u64))?;
    let data = GlmData::from_restricted(&glm_set, head)?;
    let opts = GlmOptions { c_const: params.c_const, tol: Some(params.glm_tol) };
    let fit = find_heavy_coefficients(params.eps_hv, delta, params.w_max, &data, &opts)?;
    let glm = GlmSummary {
        bias: fit.bias,
        surrogate_value: fit.surrogate_value,
        iterations: fit.iterations,
        budget: fit.budget,
        samples: fit.samples,
        distinct_rows: data.distinct_rows(),
    };
    let v_head = embed(&fit.weights, head, d)?;
    let problem = TailProblem::new(d, head.to_vec(), v_head, fit.bias, params.eps_reg)?;
    let tail_set = source.draw(params.hinge_samples, &mut rng.split(STREAM_HINGE + delta as u64))?;
    let (tail_fit, filter) = match mode {
        Mode::LabelNoise => (find_regular_coefficients(&problem, &tail_set, params.hinge_iters)?, None),
        Mode::Contaminated => {
            let out = find_regular_contaminated(&problem, &tail_set, params.phi_max, params.hinge_iters)?;
            (out.fit, Some(out.filter))
        }
    };
    Ok(HeadResult {
        tail: TailSummary {
            filtered: tail_fit.filtered,
            drawn: tail_fit.drawn,
            objective: tail_fit.objective,
            iterations: tail_fit.iterations,
            empty_band: tail_fit.empty_band,
        },
        hypothesis: tail_fit.hypothesis,
        glm,
        filter,
    })
}

fn run(cfg: &LearnerConfig, source: &dyn SampleSource, mode: Mode) -> Result<RunReport> {
    let d = source.dim();
    let params = cfg.resolve(d)?;
    let rng = SeededRng::new(cfg.seed);
    let mut warnings = Vec::new();
    if mode == Mode::LabelNoise && source.provenance().has_feature_contamination() {
        warnings.push("features are contaminated; the label-noise guarantee does not cover this input".into());
    }

    let s1 = source.draw(params.s1, &mut rng.split(STREAM_S1))?;
    let chow = estimate_chow(&s1)?;
    let top = top_k_indices(&chow, params.k)?;

    let constant = Halfspace::constant(d, Sign::Pos);
    let mut candidates: Vec<Candidate> = (0..=params.k)
        .into_par_iter()
        .map(|delta| match head_candidate(&params, source, &top[..delta], mode, &rng) {
            Ok(r) => Candidate {
                kind: CandidateKind::Head(delta),
                hypothesis: r.hypothesis,
                s3_error: f64::NAN,
                failure: None,
                glm: Some(r.glm),
                tail: Some(r.tail),
                filter: r.filter,
            },
            Err(e) => Candidate {
                kind: CandidateKind::Head(delta),
                hypothesis: constant.clone(),
                s3_error: f64::NAN,
                failure: Some(e.to_string()),
                glm: None,
                tail: None,
                filter: None,
            },
        })
        .collect();

    let s2 = source.draw(params.s2, &mut rng.split(STREAM_S2))?;
    let (sparse, failure) = match fit_sparse(&top, &s2) {
        Ok(out) => (out, None),
        Err(e) => (crate::sparse::SparseOutcome::Infeasible, Some(e.to_string())),
    };
    let sparse_feasible = sparse.is_feasible();
    candidates.push(Candidate {
        kind: CandidateKind::Sparse,
        hypothesis: sparse.into_hypothesis(d),
        s3_error: f64::NAN,
        failure,
        glm: None,
        tail: None,
        filter: None,
    });
    for c in &candidates {
        if let Some(f) = &c.failure {
            warnings.push(format!("{:?} stage failed: {f}", c.kind));
        }
    }

    let s3 = source.draw(params.s3, &mut rng.split(STREAM_S3))?;
    for c in candidates.iter_mut() {
        c.s3_error = empirical_error(&c.hypothesis, &s3)?;
    }
    let index = select(candidates.iter().map(|c| c.s3_error));
    let best = &candidates[index];
    Ok(RunReport {
        chosen: Chosen {
            index,
            kind: best.kind,
            hypothesis: best.hypothesis.clone(),
            s3_error: best.s3_error,
        },
        influential: top,
        sparse_feasible,
        params_applied: params.table.clone(),
        seed: cfg.seed,
        d,
        epsilon: cfg.epsilon,
        warnings,
        candidates,
    })
}

/// First index attaining the minimum.
fn select(errors: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, e) in errors.enumerate() {
        if e < best.1 {
            best = (i, e);
        }
    }
    best.0
}

/// Runs the full learner on samples from `source` under label noise.
pub fn learn_halfspace(cfg: &LearnerConfig, source: &dyn SampleSource) -> Result<RunReport> {
    run(cfg, source, Mode::LabelNoise)
}

/// The contamination-robust learner. When the source reports no feature
/// contamination this is exactly [`learn_halfspace`].
pub fn learn_halfspace_contaminated(cfg: &LearnerConfig, source: &dyn SampleSource) -> Result<RunReport> {
    if source.provenance().has_feature_contamination() {
        run(cfg, source, Mode::Contaminated)
    } else {
        run(cfg, source, Mode::LabelNoise)
    }
}

pub fn learn(cfg: &LearnerConfig, source: &dyn SampleSource, mode: Mode) -> Result<RunReport> {
    match mode {
        Mode::LabelNoise => learn_halfspace(cfg, source),
        Mode::Contaminated => learn_halfspace_contaminated(cfg, source),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub grid: Vec<f64>,
    pub runs: Vec<RunReport>,
    /// Error of each run's chosen hypothesis on the shared held-out set.
    pub held_out_errors: Vec<f64>,
    pub held_out_size: usize,
    pub chosen_run: usize,
    pub chosen: Halfspace,
}

/// Runs the learner once per ε′ in `grid` and keeps the run whose
/// hypothesis does best on a shared held-out set.
pub fn opt_grid_search(cfg: &LearnerConfig, source: &dyn SampleSource, grid: &[f64]) -> Result<GridReport> {
    if grid.is_empty() {
        return Err(Error::Empty("epsilon grid"));
    }
    if grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("grid must be ascending values in (0,1)".into()));
    }
    let runs = grid
        .iter()
        .map(|&e| {
            let mut c = cfg.clone();
            c.epsilon = e;
            learn_halfspace(&c, source)
        })
        .collect::<Result<Vec<_>>>()?;
    let size = runs
        .iter()
        .map(|r| r.params_applied["s3"].applied as usize)
        .max()
        .expect("nonempty grid");
    let held_out: LabeledSet = source.draw(size, &mut SeededRng::new(cfg.seed).split(STREAM_HOLDOUT))?;
    let held_out_errors = runs
        .iter()
        .map(|r| empirical_error(r.hypothesis(), &held_out))
        .collect::<Result<Vec<_>>>()?;
    let chosen_run = select(held_out_errors.iter().copied());
    Ok(GridReport {
        grid: grid.to_vec(),
        chosen: runs[chosen_run].hypothesis().clone(),
        held_out_size: size,
        held_out_errors,
        chosen_run,
        runs,
    })
}
