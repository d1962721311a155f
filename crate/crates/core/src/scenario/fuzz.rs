use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::invariants::{self, Outcome, RELATION_CHECKS};
use crate::linalg::Tol;
use crate::random;
use crate::relation::{compose_matrix, LinearRelation};

use super::report::Verdict;
use super::schema::{Expect, ObjectDef, Params, Scenario, TaskDef, TolOverride};
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Relation,
    Domination,
    Limits,
    Appendix,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "all" => Suite::All,
            "relation" => Suite::Relation,
            "domination" => Suite::Domination,
            "limits" => Suite::Limits,
            "appendix" => Suite::Appendix,
            other => {
                return Err(format!(
                "unknown suite {other:?} (expected all, relation, domination, limits or appendix)"
            ))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct FuzzOptions {
    /// Inclusive range of dimensions; values below 1 are raised to 1.
    pub dims: (usize, usize),
    pub trials: u64,
    pub seed: u64,
    pub suite: Suite,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InvariantSummary {
    pub runs: u64,
    pub failures: u64,
    /// Largest residual among the runs; `null` when a run returned an error.
    pub worst_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzFailure {
    pub trial: u64,
    pub invariant: String,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub suite: Suite,
    pub seed: u64,
    pub dims: [usize; 2],
    pub trials: u64,
    pub checks: u64,
    pub failures: u64,
    pub verdict: Verdict,
    pub invariants: BTreeMap<String, InvariantSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<FuzzFailure>,
    /// Scenario reproducing the first failure, with inputs shrunk where the
    /// check allows it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Scenario>,
}

impl FuzzReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fuzz report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let suite = serde_json::to_value(self.suite).expect("suite serializes");
        let _ = writeln!(
            out,
            "fuzz suite={} seed={} dims={}..{} trials={}: {} checks, {} failures",
            suite.as_str().unwrap_or_default(),
            self.seed,
            self.dims[0],
            self.dims[1],
            self.trials,
            self.checks,
            self.failures
        );
        for (name, s) in &self.invariants {
            let _ = writeln!(
                out,
                "  {name:<26} runs {:>6}  failures {:>4}  worst residual {:.3e}",
                s.runs, s.failures, s.worst_residual
            );
        }
        if let Some(f) = &self.first_failure {
            let _ = writeln!(
                out,
                "first failure: trial {} invariant {} residual {:.3e} {}",
                f.trial, f.invariant, f.residual, f.detail
            );
        }
        let _ = writeln!(
            out,
            "verdict: {}",
            if self.failures == 0 { "PASS" } else { "FAIL" }
        );
        out
    }
}

type Case = (&'static str, Vec<LinearRelation>);

/// Invariants whose inputs must keep a generated structure; their
/// counterexamples are reported unshrunk.
const STRUCTURED: [&str; 13] = [
    "dominated_pair",
    "transitivity",
    "link_factorization",
    "scaling_up",
    "scaling_down",
    "sqrt_n_chain",
    "truncation",
    "pipeline",
    "nonincreasing",
    "monotone_norm",
    "upper_bound",
    "resolvent_roundtrip",
    "sandwich",
];

fn pick_dim(rng: &mut ChaCha8Rng, dims: (usize, usize)) -> usize {
    let lo = dims.0.max(1);
    let hi = dims.1.max(lo);
    rng.random_range(lo..=hi)
}

fn relation_cases(
    rng: &mut ChaCha8Rng,
    dims: (usize, usize),
    tol: &Tol,
    appendix: bool,
) -> Vec<Case> {
    let (h, k) = (pick_dim(rng, dims), pick_dim(rng, dims));
    let t = random::gaussian_relation(rng, h, k, tol);
    let mut cases: Vec<Case> = RELATION_CHECKS
        .iter()
        .map(|&n| (n, vec![t.clone()]))
        .collect();
    if !appendix {
        let w = random::well_conditioned_relation(rng, h, k, tol);
        cases.push(("regular_idempotent", vec![t]));
        cases.extend(RELATION_CHECKS.iter().map(|&n| (n, vec![w.clone()])));
        cases.push(("regular_idempotent", vec![w]));
    }
    cases
}

fn domination_cases(rng: &mut ChaCha8Rng, dims: (usize, usize), tol: &Tol) -> Vec<Case> {
    let (h, k) = (pick_dim(rng, dims), pick_dim(rng, dims));
    let (a, b) = random::dominated_pair(rng, h, k, tol);
    let x = random::gaussian_relation(rng, h, k, tol);
    let y = random::gaussian_relation(rng, h, k, tol);
    let c = random::gaussian_relation(rng, h, k, tol);
    let b2 =
        compose_matrix(&random::random_contraction(rng, k, k), &c).expect("square contraction");
    let a2 =
        compose_matrix(&random::random_contraction(rng, k, k), &b2).expect("square contraction");
    let t = LinearRelation::from_matrix(&random::gaussian_matrix(rng, k, h), tol);
    vec![
        ("dominated_pair", vec![a.clone(), b.clone()]),
        ("bridge", vec![a, b]),
        ("bridge", vec![x, y]),
        ("transitivity", vec![a2, b2, c]),
        ("link_factorization", vec![t]),
    ]
}

fn limit_cases(rng: &mut ChaCha8Rng, dims: (usize, usize), tol: &Tol) -> Vec<Case> {
    let n = pick_dim(rng, dims);
    let op = random::random_psd(rng, n, true, true, tol)
        .relation()
        .clone();
    let rel = random::random_psd(rng, n, false, false, tol)
        .relation()
        .clone();
    let r = random::well_conditioned_operator(rng, n, n, tol);
    let terms = random::increasing_operator_terms(rng, n, 4, tol);
    let bound = terms.last().expect("four terms").scaled(1.5);
    let mut bounded = terms.clone();
    bounded.push(bound);
    vec![
        ("scaling_up", vec![op.clone()]),
        ("truncation", vec![op.clone()]),
        ("sandwich", vec![op]),
        ("scaling_down", vec![rel.clone()]),
        ("resolvent_roundtrip", vec![rel]),
        ("sqrt_n_chain", vec![r.clone()]),
        ("pipeline", vec![r.clone()]),
        ("nonincreasing", vec![r]),
        ("monotone_norm", terms),
        ("upper_bound", bounded),
    ]
}

fn trial_cases(suite: Suite, trial: u64, opts: &FuzzOptions, tol: &Tol) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(trial);
    match suite {
        Suite::Appendix => relation_cases(&mut rng, opts.dims, tol, true),
        Suite::Relation => relation_cases(&mut rng, opts.dims, tol, false),
        Suite::Domination => domination_cases(&mut rng, opts.dims, tol),
        Suite::Limits => limit_cases(&mut rng, opts.dims, tol),
        Suite::All => {
            let mut cases = relation_cases(&mut rng, opts.dims, tol, false);
            cases.extend(domination_cases(&mut rng, opts.dims, tol));
            cases.extend(limit_cases(&mut rng, opts.dims, tol));
            cases
        }
    }
}

fn evaluate(name: &str, inputs: &[LinearRelation], tol: &Tol) -> Outcome {
    invariants::check(name, inputs, tol).unwrap_or_else(|e| Outcome {
        name: name.to_string(),
        passed: false,
        residual: f64::INFINITY,
        threshold: 0.0,
        detail: format!("error: {e}"),
    })
}

struct TrialResult {
    outcomes: Vec<(Outcome, Vec<LinearRelation>)>,
}

fn run_trial(trial: u64, opts: &FuzzOptions, tol: &Tol) -> TrialResult {
    let outcomes = trial_cases(opts.suite, trial, opts, tol)
        .into_iter()
        .map(|(name, inputs)| (evaluate(name, &inputs, tol), inputs))
        .collect();
    TrialResult { outcomes }
}

/// Drops graph generators one at a time while the check keeps failing.
fn shrink(name: &str, mut inputs: Vec<LinearRelation>, tol: &Tol) -> Vec<LinearRelation> {
    if STRUCTURED.contains(&name) {
        return inputs;
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..inputs.len() {
            let basis = inputs[i].graph().basis().clone();
            for j in 0..basis.ncols() {
                let keep: Vec<usize> = (0..basis.ncols()).filter(|&c| c != j).collect();
                let gens = basis.select_columns(keep.iter());
                let Ok(smaller) =
                    LinearRelation::from_graph(inputs[i].dim_h(), inputs[i].dim_k(), &gens, tol)
                else {
                    continue;
                };
                let mut trial = inputs.clone();
                trial[i] = smaller;
                if !evaluate(name, &trial, tol).passed {
                    inputs = trial;
                    changed = true;
                    break;
                }
            }
        }
    }
    inputs
}

fn bundle(
    name: &str,
    inputs: &[LinearRelation],
    trial: u64,
    opts: &FuzzOptions,
    tol: &Tol,
) -> Scenario {
    let objects: Vec<ObjectDef> = inputs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Value::Relation(r.clone())
                .to_def(&format!("in{i}"))
                .expect("relations have a scenario form")
        })
        .collect();
    let suite = serde_json::to_value(opts.suite).expect("suite serializes");
    Scenario {
        name: format!(
            "counterexample-{}-seed{}-trial{}-{name}",
            suite.as_str().unwrap_or_default(),
            opts.seed,
            trial
        ),
        tolerance: TolOverride::full(tol),
        spaces: BTreeMap::new(),
        tasks: vec![TaskDef {
            op: "invariant".into(),
            args: (0..inputs.len()).map(|i| format!("in{i}")).collect(),
            params: Params {
                invariant: Some(name.to_string()),
                ..Params::default()
            },
            expect: Some(Expect {
                holds: Some(true),
                ..Expect::default()
            }),
            tol: None,
            save_as: None,
        }],
        objects,
        sequences: Vec::new(),
    }
}

/// Runs `opts.trials` randomized trials of the suite's invariant battery.
/// The report depends only on the options, not on thread scheduling.
pub fn fuzz(opts: &FuzzOptions) -> FuzzReport {
    let tol = Tol::default();
    let threads = if opts.threads == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        opts.threads
    };
    let threads = threads.clamp(1, opts.trials.max(1) as usize);
    let mut results: Vec<Option<TrialResult>> = (0..opts.trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunk = results.len().div_ceil(threads).max(1);
        for (c, slots) in results.chunks_mut(chunk).enumerate() {
            let tol = &tol;
            scope.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(run_trial((c * chunk + i) as u64, opts, tol));
                }
            });
        }
    });

    let mut summary: BTreeMap<String, InvariantSummary> = BTreeMap::new();
    let mut checks = 0;
    let mut failures = 0;
    let mut first: Option<(u64, Outcome, Vec<LinearRelation>)> = None;
    for (trial, result) in results.into_iter().enumerate() {
        for (o, inputs) in result.expect("every trial ran").outcomes {
            checks += 1;
            let s = summary.entry(o.name.clone()).or_default();
            s.runs += 1;
            s.worst_residual = if o.residual.is_finite() && s.worst_residual.is_finite() {
                s.worst_residual.max(o.residual)
            } else {
                f64::INFINITY
            };
            if !o.passed {
                s.failures += 1;
                failures += 1;
                if first.is_none() {
                    first = Some((trial as u64, o, inputs));
                }
            }
        }
    }
    let (first_failure, counterexample) = match first {
        None => (None, None),
        Some((trial, o, inputs)) => {
            let small = shrink(&o.name, inputs, &tol);
            let scenario = bundle(&o.name, &small, trial, opts, &tol);
            (
                Some(FuzzFailure {
                    trial,
                    invariant: o.name,
                    residual: o.residual,
                    detail: o.detail,
                }),
                Some(scenario),
            )
        }
    };
    FuzzReport {
        suite: opts.suite,
        seed: opts.seed,
        dims: [opts.dims.0, opts.dims.1],
        trials: opts.trials,
        checks,
        failures,
        verdict: if failures == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        invariants: summary,
        first_failure,
        counterexample,
    }
}
