use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value as Json};

use crate::domination::{bridge_verdicts, dominates, link_partial_isometry, psd_leq};
use crate::error::{RelError, Result};
use crate::invariants;
use crate::limits::{
    bounded_approximation, connect_maps, monotone_psd_limit, nondecreasing_operator_limit,
    nondecreasing_operator_limit_bounded, nonincreasing_operator_limit,
    nonincreasing_relation_check, range_space_map, relation_sequence_pipeline, representing_map,
    strong_graph_limit_check, Direction, GramSpec, LimitReport, Schedule, SequenceSpec,
};
use crate::linalg::{self, Matrix, Subspace, Tol};
use crate::relation::{
    adjoint, compose, compose_matrix, is_singular_relation, lebesgue_decompose, product_star,
    psd_sqrt_relation, relation_from_resolvent, relation_sum, resolvent, spectral_truncation,
    LinearRelation,
};

use super::report::{Assertion, Report, Status, TaskReport};
use super::schema::{
    Dim, Expect, MatrixRef, ObjectDef, ObjectLiteral, Scenario, ScheduleName, SequenceDef, TaskDef,
    TolOverride,
};
use super::value::{build_object, Value};

/// Assertion tolerance used when a task gives none.
pub const DEFAULT_EPS: f64 = 1e-6;

/// A scenario that cannot be run: schema violation, undefined name, or an
/// object definition the library rejects. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError(pub String);

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ScenarioError {}

/// Operations accepted in tasks, with their number of object arguments
/// (`None` for variadic) and the suffixes of the extra objects they save.
const OPS: &[(&str, Option<usize>, &[&str])] = &[
    ("orthonormalize", Some(1), &[]),
    ("complement", Some(1), &[]),
    ("sum", Some(2), &[]),
    ("intersect", Some(2), &[]),
    ("contains", Some(2), &[]),
    ("pseudoinverse", Some(1), &[]),
    ("psd_sqrt", Some(1), &[]),
    ("relation", Some(1), &[]),
    ("dom", Some(1), &[]),
    ("ran", Some(1), &[]),
    ("ker", Some(1), &[]),
    ("mul", Some(1), &[]),
    ("adjoint", Some(1), &[]),
    ("compose", Some(2), &[]),
    ("compose_matrix", Some(2), &[]),
    ("lebesgue_decompose", Some(1), &["singular", "projector"]),
    ("relation_sum", Some(2), &[]),
    ("is_singular", Some(1), &[]),
    ("is_operator", Some(1), &[]),
    ("equals", Some(2), &[]),
    ("product_star", Some(1), &[]),
    ("psd", Some(1), &[]),
    ("psd_sqrt_relation", Some(1), &[]),
    ("resolvent", Some(1), &[]),
    ("relation_from_resolvent", Some(1), &[]),
    ("spectral_truncation", Some(1), &[]),
    ("dominates", Some(2), &["contraction"]),
    ("psd_leq", Some(2), &[]),
    ("theorem_bridge_check", Some(2), &[]),
    ("link_partial_isometry", Some(2), &[]),
    ("representing_map", Some(2), &["neutral"]),
    ("connect_maps", Some(2), &[]),
    ("range_space_map", Some(1), &[]),
    ("evaluate", Some(1), &[]),
    (
        "nondecreasing_operator_limit",
        Some(1),
        &["dom_limit", "blowup_space", "upper_bound"],
    ),
    ("nonincreasing_operator_limit", Some(1), &["dom_limit"]),
    (
        "monotone_psd_limit",
        Some(1),
        &["dom_limit", "blowup_space"],
    ),
    (
        "relation_sequence_pipeline",
        Some(1),
        &["regular_limit", "isometry"],
    ),
    (
        "nonincreasing_relation_check",
        Some(1),
        &["limit", "isometry"],
    ),
    ("strong_graph_limit_check", Some(2), &[]),
    ("bounded_approximation", Some(1), &[]),
    ("invariant", None, &[]),
];

fn op_entry(op: &str) -> Option<&'static (&'static str, Option<usize>, &'static [&'static str])> {
    OPS.iter().find(|(name, _, _)| *name == op)
}

/// Names of all operations a task may use.
pub fn operation_names() -> Vec<&'static str> {
    OPS.iter().map(|(n, _, _)| *n).collect()
}

struct Output {
    result: Option<Value>,
    extras: Vec<(&'static str, Value)>,
    holds: Option<bool>,
    converged: Option<bool>,
    residuals: BTreeMap<String, f64>,
    diagnostics: Option<Json>,
}

impl Output {
    fn value(v: Value) -> Self {
        Output {
            result: Some(v),
            extras: Vec::new(),
            holds: None,
            converged: None,
            residuals: BTreeMap::new(),
            diagnostics: None,
        }
    }

    fn predicate(b: bool) -> Self {
        Output {
            holds: Some(b),
            ..Output::value(Value::Bool(b))
        }
    }

    fn extra(mut self, key: &'static str, v: Value) -> Self {
        self.extras.push((key, v));
        self
    }

    fn residual(mut self, key: &str, r: f64) -> Self {
        self.residuals.insert(key.to_string(), r);
        self
    }

    fn limit(mut self, rep: &LimitReport) -> Self {
        self.converged = Some(rep.diagnostics.converged);
        self.diagnostics =
            Some(serde_json::to_value(&rep.diagnostics).expect("diagnostics serialize"));
        for (k, v) in &rep.diagnostics.residuals {
            self.residuals.insert(k.clone(), *v);
        }
        self
    }
}

/// State of a scenario run: resolved tolerances and named values.
pub struct Runner {
    scenario: Scenario,
    tol: Tol,
    eps: f64,
    values: BTreeMap<String, Value>,
}

impl Runner {
    /// Validates the scenario and builds its objects and sequences.
    pub fn new(scenario: Scenario, eps: Option<f64>) -> std::result::Result<Runner, ScenarioError> {
        let tol = scenario.tolerance.apply(Tol::default());
        tol.validate()
            .map_err(|e| ScenarioError(format!("tolerance: {e}")))?;
        let eps = eps.unwrap_or(DEFAULT_EPS);
        if !(eps.is_finite() && eps > 0.0) {
            return Err(ScenarioError(format!("--eps must be positive, got {eps}")));
        }
        check_names(&scenario)?;
        let mut runner = Runner {
            tol,
            eps,
            values: BTreeMap::new(),
            scenario,
        };
        for (i, def) in runner.scenario.objects.clone().iter().enumerate() {
            let v = {
                let matrix = |r: &MatrixRef| runner.matrix_ref(r);
                let dim = |d: &Dim| runner.dim(d);
                build_object(def, &matrix, &dim, &tol)
            }
            .map_err(|e| ScenarioError(format!("objects[{i}] ({}): {e}", def.name())))?;
            runner.values.insert(def.name().to_string(), v);
        }
        for (i, def) in runner.scenario.sequences.clone().iter().enumerate() {
            let seq = runner
                .build_sequence(def)
                .map_err(|e| ScenarioError(format!("sequences[{i}] ({}): {e}", def.name())))?;
            runner
                .values
                .insert(def.name().to_string(), Value::Sequence(seq));
        }
        Ok(runner)
    }

    pub fn tol(&self) -> &Tol {
        &self.tol
    }

    pub fn value(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    fn get(&self, name: &str) -> Result<&Value> {
        self.values
            .get(name)
            .ok_or_else(|| RelError::InvalidInput(format!("undefined name {name:?}")))
    }

    fn dim(&self, d: &Dim) -> Result<usize> {
        match d {
            Dim::Literal(n) => Ok(*n),
            Dim::Space(s) => self
                .scenario
                .spaces
                .get(s)
                .copied()
                .ok_or_else(|| RelError::InvalidInput(format!("undefined space {s:?}"))),
        }
    }

    fn matrix_ref(&self, r: &MatrixRef) -> Result<Matrix> {
        match r {
            MatrixRef::Name(n) => self.get(n)?.as_matrix(),
            MatrixRef::Inline(m) => m.to_matrix().map_err(RelError::InvalidInput),
        }
    }

    fn build_sequence(&self, def: &SequenceDef) -> Result<SequenceSpec> {
        let seq = match def {
            SequenceDef::Scaled {
                schedule,
                base,
                c,
                p,
                q,
                ..
            } => {
                let schedule = match schedule {
                    ScheduleName::N => Schedule::N,
                    ScheduleName::SqrtN => Schedule::SqrtN,
                    ScheduleName::InvN => Schedule::InvN,
                    ScheduleName::InvSqrtN => Schedule::InvSqrtN,
                    ScheduleName::Const => Schedule::Const(c.ok_or_else(|| {
                        RelError::InvalidInput("schedule \"const\" needs \"c\"".into())
                    })?),
                    ScheduleName::Pow => Schedule::Pow {
                        p: p.ok_or_else(|| {
                            RelError::InvalidInput("schedule \"pow\" needs \"p\"".into())
                        })?,
                        q: q.ok_or_else(|| {
                            RelError::InvalidInput("schedule \"pow\" needs \"q\"".into())
                        })?,
                    },
                };
                SequenceSpec::scaled(schedule, self.get(base)?.as_relation(&self.tol)?)
            }
            SequenceDef::Explicit { terms, .. } => SequenceSpec::Explicit(
                terms
                    .iter()
                    .map(|t| self.get(t)?.as_relation(&self.tol))
                    .collect::<Result<_>>()?,
            ),
            SequenceDef::DirectSum { parts, .. } => SequenceSpec::DirectSum(
                parts
                    .iter()
                    .map(|p| self.get(p)?.as_sequence())
                    .collect::<Result<_>>()?,
            ),
        };
        seq.validate()?;
        Ok(seq)
    }

    /// Runs every task in order and assembles the report.
    pub fn run(mut self) -> Report {
        let tasks = self.scenario.tasks.clone();
        let reports = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| self.run_task(i, t))
            .collect();
        Report::assemble(self.scenario.name.clone(), reports)
    }

    fn run_task(&mut self, index: usize, task: &TaskDef) -> TaskReport {
        let mut report = TaskReport {
            index,
            op: task.op.clone(),
            args: task.args.clone(),
            status: Status::Pass,
            message: None,
            error_kind: None,
            assertions: Vec::new(),
            residuals: BTreeMap::new(),
            objects: BTreeMap::new(),
            diagnostics: None,
            counterexample: None,
        };
        let expect = task.expect.clone().unwrap_or_default();
        let eps = task.tol.unwrap_or(self.eps);
        match self.execute(task) {
            Err(e) => {
                report.error_kind = Some(e.kind().to_string());
                report.message = Some(e.to_string());
                match &expect.error {
                    Some(kind) if kind == e.kind() => {
                        report.assertions.push(Assertion {
                            what: format!("error {kind}"),
                            passed: true,
                            residual: None,
                            tol: None,
                            detail: None,
                        });
                    }
                    _ => {
                        report.status = if e.is_input_error() {
                            Status::Error
                        } else {
                            Status::Fail
                        };
                    }
                }
            }
            Ok(out) => {
                if let Some(kind) = &expect.error {
                    report.assertions.push(Assertion {
                        what: format!("error {kind}"),
                        passed: false,
                        residual: None,
                        tol: None,
                        detail: Some("operation succeeded".into()),
                    });
                }
                if let Some(false) = out.converged {
                    if expect.converged != Some(false) {
                        report.message = Some("limit engine did not converge".into());
                        report.assertions.push(Assertion {
                            what: "converged".into(),
                            passed: false,
                            residual: None,
                            tol: None,
                            detail: None,
                        });
                    }
                }
                match self.check_expectations(&expect, &out, eps) {
                    Ok(mut a) => report.assertions.append(&mut a),
                    Err(e) => {
                        report.status = Status::Error;
                        report.message = Some(format!("expectation: {e}"));
                    }
                }
                if let Some(v) = &out.result {
                    report.objects.insert("result".into(), v.to_json());
                }
                for (k, v) in &out.extras {
                    report.objects.insert((*k).to_string(), v.to_json());
                }
                report.residuals = out.residuals.clone();
                report.diagnostics = out.diagnostics.clone();
                if let Some(name) = &task.save_as {
                    if let Some(v) = out.result {
                        self.values.insert(name.clone(), v);
                    }
                    for (k, v) in out.extras {
                        self.values.insert(format!("{name}.{k}"), v);
                    }
                }
                if report.status == Status::Pass && report.assertions.iter().any(|a| !a.passed) {
                    report.status = Status::Fail;
                }
            }
        }
        if report.status != Status::Pass {
            report.counterexample = self.counterexample(task);
        }
        report
    }

    fn execute(&self, task: &TaskDef) -> Result<Output> {
        let (_, arity, _) = op_entry(&task.op)
            .ok_or_else(|| RelError::InvalidInput(format!("unknown operation {:?}", task.op)))?;
        if let Some(n) = arity {
            if task.args.len() != *n {
                return Err(RelError::InvalidInput(format!(
                    "{} takes {n} arguments, got {}",
                    task.op,
                    task.args.len()
                )));
            }
        }
        let tol = &self.tol;
        let arg = |i: usize| self.get(&task.args[i]);
        let p = &task.params;
        Ok(match task.op.as_str() {
            "orthonormalize" => Output::value(Value::Subspace(linalg::orthonormalize(
                &arg(0)?.as_matrix()?,
                tol,
            ))),
            "complement" => Output::value(Value::Subspace(linalg::complement(
                &arg(0)?.as_subspace(tol)?,
            ))),
            "sum" => Output::value(Value::Subspace(linalg::sum(
                &arg(0)?.as_subspace(tol)?,
                &arg(1)?.as_subspace(tol)?,
                tol,
            )?)),
            "intersect" => Output::value(Value::Subspace(linalg::intersect(
                &arg(0)?.as_subspace(tol)?,
                &arg(1)?.as_subspace(tol)?,
                tol,
            )?)),
            "contains" => Output::predicate(linalg::contains(
                &arg(0)?.as_subspace(tol)?,
                &arg(1)?.as_subspace(tol)?,
                tol,
            )?),
            "pseudoinverse" => Output::value(Value::Matrix(linalg::pseudoinverse(
                &arg(0)?.as_matrix()?,
                tol,
            ))),
            "psd_sqrt" => {
                Output::value(Value::Matrix(linalg::psd_sqrt(&arg(0)?.as_matrix()?, tol)?))
            }
            "relation" => Output::value(Value::Relation(arg(0)?.as_relation(tol)?)),
            "dom" | "ran" | "ker" | "mul" => {
                let r = arg(0)?.as_relation(tol)?;
                let s = match task.op.as_str() {
                    "dom" => r.dom(),
                    "ran" => r.ran(),
                    "ker" => r.ker(),
                    _ => r.mul(),
                };
                Output::value(Value::Subspace(s.clone()))
            }
            "adjoint" => Output::value(Value::Relation(adjoint(&arg(0)?.as_relation(tol)?))),
            "compose" => Output::value(Value::Relation(compose(
                &arg(0)?.as_relation(tol)?,
                &arg(1)?.as_relation(tol)?,
            )?)),
            "compose_matrix" => Output::value(Value::Relation(compose_matrix(
                &arg(0)?.as_matrix()?,
                &arg(1)?.as_relation(tol)?,
            )?)),
            "lebesgue_decompose" => {
                let l = lebesgue_decompose(&arg(0)?.as_relation(tol)?)?;
                Output::value(Value::Operator(l.regular))
                    .extra("singular", Value::Relation(l.singular))
                    .extra("projector", Value::Matrix(l.projector))
            }
            "relation_sum" => Output::value(Value::Relation(relation_sum(
                &arg(0)?.as_relation(tol)?,
                &arg(1)?.as_relation(tol)?,
            )?)),
            "is_singular" => Output::predicate(is_singular_relation(&arg(0)?.as_relation(tol)?)),
            "is_operator" => Output::predicate(arg(0)?.as_relation(tol)?.is_operator()),
            "equals" => {
                let a = arg(0)?.as_relation(tol)?;
                let b = arg(1)?.as_relation(tol)?;
                let d = a.distance(&b);
                Output::predicate(d < tol.sub_eq_tol).residual("distance", d)
            }
            "product_star" => Output::value(Value::Psd(product_star(&arg(0)?.as_relation(tol)?)?)),
            "psd" => Output::value(Value::Psd(arg(0)?.as_psd(tol)?)),
            "psd_sqrt_relation" => {
                Output::value(Value::Psd(psd_sqrt_relation(&arg(0)?.as_psd(tol)?)))
            }
            "resolvent" => Output::value(Value::Matrix(resolvent(&arg(0)?.as_psd(tol)?))),
            "relation_from_resolvent" => Output::value(Value::Psd(relation_from_resolvent(
                &arg(0)?.as_matrix()?,
                tol,
            )?)),
            "spectral_truncation" => {
                let n = p.n.ok_or_else(|| {
                    RelError::InvalidInput("spectral_truncation needs params.n".into())
                })?;
                let a = match arg(0)? {
                    Value::Matrix(m) => m.clone(),
                    other => other.as_psd(tol)?.op(),
                };
                Output::value(Value::Matrix(spectral_truncation(&a, n, tol)?))
            }
            "dominates" => {
                let a = arg(0)?.as_relation(tol)?;
                let b = arg(1)?.as_relation(tol)?;
                match dominates(&a, &b, tol)? {
                    Some(c) => {
                        let image = compose_matrix(&c.matrix, &b)?;
                        let incl = linalg::containment_residual(a.graph(), image.graph());
                        Output::predicate(true)
                            .residual("contraction_norm", c.norm())
                            .residual("inclusion", incl)
                            .extra("contraction", Value::Matrix(c.matrix))
                    }
                    None => Output::predicate(false),
                }
            }
            "psd_leq" => {
                Output::predicate(psd_leq(&arg(0)?.as_psd(tol)?, &arg(1)?.as_psd(tol)?, tol))
            }
            "theorem_bridge_check" => {
                let v =
                    bridge_verdicts(&arg(0)?.as_relation(tol)?, &arg(1)?.as_relation(tol)?, tol)?;
                let mut out = Output::predicate(v.agree());
                out.diagnostics = Some(serde_json::to_value(v).expect("verdicts serialize"));
                out
            }
            "link_partial_isometry" => {
                let u = link_partial_isometry(
                    &arg(0)?.as_operator(tol)?,
                    &arg(1)?.as_operator(tol)?,
                    tol,
                )?;
                Output::value(Value::Matrix(u.matrix.clone()))
                    .residual("initial", u.initial_residual())
                    .residual("final", u.final_residual())
            }
            "representing_map" => {
                let spec = GramSpec::new(arg(0)?.as_matrix()?, arg(1)?.as_matrix()?, tol)?;
                let (t, neutral) = representing_map(&spec, tol)?;
                Output::value(Value::Operator(t)).extra("neutral", Value::Subspace(neutral))
            }
            "connect_maps" => {
                let v = connect_maps(&arg(0)?.as_operator(tol)?, &arg(1)?.as_operator(tol)?, tol)?;
                Output::value(Value::Matrix(v.matrix))
            }
            "range_space_map" => Output::value(Value::Operator(range_space_map(
                &arg(0)?.as_matrix()?,
                tol,
            )?)),
            "evaluate" => {
                let n =
                    p.n.ok_or_else(|| RelError::InvalidInput("evaluate needs params.n".into()))?;
                if !(n >= 1.0 && n.fract() == 0.0 && n < 9.0e18) {
                    return Err(RelError::InvalidInput(format!(
                        "evaluate needs a positive integer n, got {n}"
                    )));
                }
                Output::value(Value::Relation(arg(0)?.as_sequence()?.evaluate(n as u64)?))
            }
            "nondecreasing_operator_limit" => {
                let seq = arg(0)?.as_sequence()?;
                let rep = match &p.bound {
                    Some(b) => nondecreasing_operator_limit_bounded(
                        &seq,
                        &self.get(b)?.as_relation(tol)?,
                        tol,
                    )?,
                    None => nondecreasing_operator_limit(&seq, tol)?,
                };
                let mut out = operator_limit_output(&rep);
                if let Some(c) = &rep.upper_bound {
                    out = out.extra("upper_bound", Value::Matrix(c.matrix.clone()));
                }
                out
            }
            "nonincreasing_operator_limit" => {
                let rep = nonincreasing_operator_limit(&arg(0)?.as_sequence()?, tol)?;
                operator_limit_output(&rep)
            }
            "monotone_psd_limit" => {
                let direction = match p.direction.as_deref() {
                    Some("nondecreasing") | None => Direction::Nondecreasing,
                    Some("nonincreasing") => Direction::Nonincreasing,
                    Some(other) => {
                        return Err(RelError::InvalidInput(format!(
                        "direction must be \"nondecreasing\" or \"nonincreasing\", got {other:?}"
                    )))
                    }
                };
                let rep = monotone_psd_limit(&arg(0)?.as_sequence()?, direction, tol)?;
                Output::value(Value::Psd(rep.psd().expect("psd limit").clone()))
                    .extra("dom_limit", Value::Subspace(rep.dom_limit.clone()))
                    .extra("blowup_space", Value::Subspace(rep.blowup_space.clone()))
                    .limit(&rep)
            }
            "relation_sequence_pipeline" => {
                let rep = relation_sequence_pipeline(&arg(0)?.as_sequence()?, tol)?;
                Output::value(Value::Psd(rep.h_infinity().clone()))
                    .extra("regular_limit", Value::Operator(rep.limit().clone()))
                    .extra("isometry", Value::Matrix(rep.isometry.matrix.clone()))
                    .limit(&rep.gram)
                    .residual("domain_distance", rep.domain_distance)
                    .residual("norm_residual", rep.norm_residual)
                    .residual("star_distance", rep.star_distance)
                    .residual("star_residual", rep.star_residual)
            }
            "nonincreasing_relation_check" => {
                let rep = nonincreasing_relation_check(&arg(0)?.as_sequence()?, tol)?;
                let mut out = Output::value(Value::Psd(rep.k_infinity().clone()))
                    .extra("limit", Value::Operator(rep.limit().clone()))
                    .extra("isometry", Value::Matrix(rep.isometry.matrix.clone()))
                    .limit(&rep.gram)
                    .residual("star_distance", rep.star_distance)
                    .residual("factorization_residual", rep.factorization_residual);
                out.holds = Some(rep.limit_singular);
                out
            }
            "strong_graph_limit_check" => {
                let c = strong_graph_limit_check(
                    &arg(0)?.as_sequence()?,
                    &arg(1)?.as_relation(tol)?,
                    tol,
                )?;
                Output::predicate(c.holds).residual("worst_distance", c.worst_distance)
            }
            "bounded_approximation" => {
                let count = p.count.ok_or_else(|| {
                    RelError::InvalidInput("bounded_approximation needs params.count".into())
                })?;
                Output::value(Value::Matrices(bounded_approximation(
                    &arg(0)?.as_operator(tol)?,
                    count,
                    tol,
                )?))
            }
            "invariant" => {
                let name = p.invariant.as_deref().ok_or_else(|| {
                    RelError::InvalidInput("invariant needs params.invariant".into())
                })?;
                let inputs = (0..task.args.len())
                    .map(|i| arg(i)?.as_relation(tol))
                    .collect::<Result<Vec<_>>>()?;
                let o = invariants::check(name, &inputs, tol)?;
                let mut out = Output::predicate(o.passed).residual("residual", o.residual);
                out.diagnostics = Some(serde_json::to_value(&o).expect("outcome serializes"));
                out
            }
            other => unreachable!("operation {other} is listed but not dispatched"),
        })
    }

    fn literal(&self, lit: &ObjectLiteral) -> Result<Value> {
        match lit {
            ObjectLiteral::Name(n) => Ok(self.get(n)?.clone()),
            ObjectLiteral::Relation {
                dim_h,
                dim_k,
                generators,
            } => Ok(Value::Relation(LinearRelation::from_graph(
                *dim_h,
                *dim_k,
                &generators.to_matrix().map_err(RelError::InvalidInput)?,
                &self.tol,
            )?)),
            ObjectLiteral::Matrix(m) => Ok(Value::Matrix(
                m.to_matrix().map_err(RelError::InvalidInput)?,
            )),
        }
    }

    fn check_expectations(&self, e: &Expect, out: &Output, eps: f64) -> Result<Vec<Assertion>> {
        let tol = &self.tol;
        let mut a = Vec::new();
        let measured = |what: &str, r: f64| Assertion {
            what: what.to_string(),
            passed: r.is_finite() && r <= eps,
            residual: Some(r),
            tol: Some(eps),
            detail: None,
        };
        let flag = |what: &str, want: bool, got: Option<bool>| Assertion {
            what: format!("{what} = {want}"),
            passed: got == Some(want),
            residual: None,
            tol: None,
            detail: Some(match got {
                Some(g) => format!("got {g}"),
                None => "operation has no such result".into(),
            }),
        };
        if let Some(h) = e.holds {
            a.push(flag("holds", h, out.holds));
        }
        if let Some(c) = e.converged {
            a.push(flag("converged", c, out.converged));
        }
        let result = out.result.as_ref();
        if let Some(lit) = &e.equals {
            let want = self.literal(lit)?;
            let r = match result {
                None => f64::INFINITY,
                Some(got) => value_distance(got, &want, tol)?,
            };
            a.push(measured("result equals expected", r));
        }
        for (what, spec) in [("dom", &e.dom), ("mul", &e.mul), ("ker", &e.ker)] {
            if let Some(spec) = spec {
                let want = linalg::orthonormalize(&self.matrix_ref(spec)?, tol);
                let r = match result {
                    Some(v @ (Value::Relation(_) | Value::Operator(_) | Value::Psd(_))) => {
                        let rel = v.as_relation(tol)?;
                        let got = match what {
                            "dom" => rel.dom(),
                            "mul" => rel.mul(),
                            _ => rel.ker(),
                        };
                        subspace_distance(got, &want)
                    }
                    _ => f64::INFINITY,
                };
                a.push(measured(&format!("{what} equals expected"), r));
            }
        }
        if let Some(m) = &e.matrix {
            let want = self.matrix_ref(m)?;
            let got = match result {
                Some(Value::Matrix(m)) => Some(m.clone()),
                Some(Value::Operator(t)) => Some(t.action().clone()),
                Some(Value::Psd(h)) => Some(h.op()),
                Some(Value::Relation(r)) => Some(r.regular_action().clone()),
                _ => None,
            };
            a.push(measured(
                "matrix equals expected",
                matrix_distance(got.as_ref(), &want),
            ));
        }
        if let Some(ms) = &e.matrices {
            let got = match result {
                Some(Value::Matrices(v)) => v.clone(),
                _ => Vec::new(),
            };
            let mut worst = if got.len() == ms.len() {
                0.0f64
            } else {
                f64::INFINITY
            };
            for (g, w) in got.iter().zip(ms) {
                worst = worst.max(matrix_distance(Some(g), &self.matrix_ref(w)?));
            }
            a.push(measured("matrices equal expected", worst));
        }
        Ok(a)
    }

    /// Scenario reproducing `task` from scratch: every referenced input is
    /// written out in scenario form.
    fn counterexample(&self, task: &TaskDef) -> Option<Scenario> {
        let mut objects: Vec<ObjectDef> = Vec::new();
        let mut sequences: Vec<SequenceDef> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut names: Vec<&String> = task.args.iter().collect();
        if let Some(b) = &task.params.bound {
            names.push(b);
        }
        for name in names {
            self.export(name, &mut objects, &mut sequences, &mut seen)?;
        }
        if let Some(e) = &task.expect {
            for r in [&e.dom, &e.mul, &e.ker, &e.matrix].into_iter().flatten() {
                if let MatrixRef::Name(n) = r {
                    self.export(n, &mut objects, &mut sequences, &mut seen)?;
                }
            }
            if let Some(ObjectLiteral::Name(n)) = &e.equals {
                self.export(n, &mut objects, &mut sequences, &mut seen)?;
            }
            for r in e.matrices.iter().flatten() {
                if let MatrixRef::Name(n) = r {
                    self.export(n, &mut objects, &mut sequences, &mut seen)?;
                }
            }
        }
        let mut task = task.clone();
        task.save_as = None;
        Some(Scenario {
            name: format!("{}-counterexample", self.scenario.name),
            tolerance: TolOverride::full(&self.tol),
            spaces: BTreeMap::new(),
            objects,
            sequences,
            tasks: vec![task],
        })
    }

    fn export(
        &self,
        name: &str,
        objects: &mut Vec<ObjectDef>,
        sequences: &mut Vec<SequenceDef>,
        seen: &mut BTreeSet<String>,
    ) -> Option<()> {
        if !seen.insert(name.to_string()) {
            return Some(());
        }
        match self.values.get(name)? {
            Value::Sequence(seq) => {
                export_sequence(name, seq, objects, sequences);
                Some(())
            }
            v => {
                objects.push(v.to_def(name)?);
                Some(())
            }
        }
    }
}

/// Writes `seq` as sequence definitions, with generated names for its
/// components.
pub fn export_sequence(
    name: &str,
    seq: &SequenceSpec,
    objects: &mut Vec<ObjectDef>,
    sequences: &mut Vec<SequenceDef>,
) {
    match seq {
        SequenceSpec::Scaled { schedule, base } => {
            let base_name = format!("{name}.base");
            objects.push(
                Value::Relation(base.clone())
                    .to_def(&base_name)
                    .expect("relations have a scenario form"),
            );
            let (schedule, c, p, q) = match *schedule {
                Schedule::N => (ScheduleName::N, None, None, None),
                Schedule::SqrtN => (ScheduleName::SqrtN, None, None, None),
                Schedule::InvN => (ScheduleName::InvN, None, None, None),
                Schedule::InvSqrtN => (ScheduleName::InvSqrtN, None, None, None),
                Schedule::Const(c) => (ScheduleName::Const, Some(c), None, None),
                Schedule::Pow { p, q } => (ScheduleName::Pow, None, Some(p), Some(q)),
            };
            sequences.push(SequenceDef::Scaled {
                name: name.to_string(),
                schedule,
                base: base_name,
                c,
                p,
                q,
            });
        }
        SequenceSpec::Explicit(terms) => {
            let names: Vec<String> = (0..terms.len()).map(|i| format!("{name}.t{i}")).collect();
            for (t, n) in terms.iter().zip(&names) {
                objects.push(Value::Relation(t.clone()).to_def(n).expect("relation"));
            }
            sequences.push(SequenceDef::Explicit {
                name: name.to_string(),
                terms: names,
            });
        }
        SequenceSpec::DirectSum(parts) => {
            let names: Vec<String> = (0..parts.len()).map(|i| format!("{name}.p{i}")).collect();
            for (p, n) in parts.iter().zip(&names) {
                export_sequence(n, p, objects, sequences);
            }
            sequences.push(SequenceDef::DirectSum {
                name: name.to_string(),
                parts: names,
            });
        }
    }
}

fn operator_limit_output(rep: &LimitReport) -> Output {
    Output::value(Value::Operator(
        rep.operator().expect("operator limit").clone(),
    ))
    .extra("dom_limit", Value::Subspace(rep.dom_limit.clone()))
    .extra("blowup_space", Value::Subspace(rep.blowup_space.clone()))
    .limit(rep)
}

fn subspace_distance(a: &Subspace, b: &Subspace) -> f64 {
    if a.ambient_dim() != b.ambient_dim() {
        f64::INFINITY
    } else {
        a.distance(b)
    }
}

fn matrix_distance(got: Option<&Matrix>, want: &Matrix) -> f64 {
    match got {
        Some(g) if g.shape() == want.shape() => {
            if g.is_empty() {
                0.0
            } else {
                (g - want).amax()
            }
        }
        _ => f64::INFINITY,
    }
}

/// Distance between a computed value and an expected one: graph projector
/// distance for relations, column-space projector distance for subspaces,
/// and largest entry difference for matrices.
pub(crate) fn value_distance(got: &Value, want: &Value, tol: &Tol) -> Result<f64> {
    Ok(match (got, want) {
        (Value::Bool(a), Value::Bool(b)) => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
        (Value::Matrix(g), Value::Matrix(w)) => matrix_distance(Some(g), w),
        (Value::Subspace(g), w) => subspace_distance(g, &w.as_subspace(tol)?),
        (Value::Matrices(g), Value::Matrices(w)) => {
            if g.len() != w.len() {
                f64::INFINITY
            } else {
                g.iter()
                    .zip(w)
                    .map(|(a, b)| matrix_distance(Some(a), b))
                    .fold(0.0, f64::max)
            }
        }
        (g, w) => {
            let (g, w) = (g.as_relation(tol)?, w.as_relation(tol)?);
            if (g.dim_h(), g.dim_k()) != (w.dim_h(), w.dim_k()) {
                f64::INFINITY
            } else {
                g.distance(&w)
            }
        }
    })
}

/// Rejects undefined names and unknown operations before anything runs.
fn check_names(s: &Scenario) -> std::result::Result<(), ScenarioError> {
    let mut defined: BTreeSet<String> = BTreeSet::new();
    let need = |defined: &BTreeSet<String>, name: &str, at: String| {
        if defined.contains(name) {
            Ok(())
        } else {
            Err(ScenarioError(format!("{at}: undefined name {name:?}")))
        }
    };
    let need_ref = |defined: &BTreeSet<String>, r: &MatrixRef, at: String| match r {
        MatrixRef::Name(n) => need(defined, n, at),
        MatrixRef::Inline(_) => Ok(()),
    };
    let need_dim = |d: &Dim, at: String| match d {
        Dim::Space(n) if !s.spaces.contains_key(n) => {
            Err(ScenarioError(format!("{at}: undefined space {n:?}")))
        }
        _ => Ok(()),
    };
    let fresh = |defined: &mut BTreeSet<String>, name: &str, at: String| {
        if name.is_empty() {
            return Err(ScenarioError(format!("{at}: empty name")));
        }
        if !defined.insert(name.to_string()) {
            return Err(ScenarioError(format!("{at}: name {name:?} defined twice")));
        }
        Ok(())
    };
    for (i, o) in s.objects.iter().enumerate() {
        let at = format!("objects[{i}]");
        match o {
            ObjectDef::Matrix { .. } => {}
            ObjectDef::Relation {
                dim_h,
                dim_k,
                generators,
                ..
            } => {
                need_dim(dim_h, format!("{at}.dim_h"))?;
                need_dim(dim_k, format!("{at}.dim_k"))?;
                need_ref(&defined, generators, format!("{at}.generators"))?;
            }
            ObjectDef::OperatorOnDomain { matrix, domain, .. }
            | ObjectDef::Psd { matrix, domain, .. } => {
                need_ref(&defined, matrix, format!("{at}.matrix"))?;
                if let Some(d) = domain {
                    need_ref(&defined, d, format!("{at}.domain"))?;
                }
            }
        }
        fresh(&mut defined, o.name(), format!("{at}.name"))?;
    }
    for (i, q) in s.sequences.iter().enumerate() {
        let at = format!("sequences[{i}]");
        match q {
            SequenceDef::Scaled { base, .. } => need(&defined, base, format!("{at}.base"))?,
            SequenceDef::Explicit { terms, .. } => {
                for (j, t) in terms.iter().enumerate() {
                    need(&defined, t, format!("{at}.terms[{j}]"))?;
                }
            }
            SequenceDef::DirectSum { parts, .. } => {
                for (j, t) in parts.iter().enumerate() {
                    need(&defined, t, format!("{at}.parts[{j}]"))?;
                }
            }
        }
        fresh(&mut defined, q.name(), format!("{at}.name"))?;
    }
    for (i, t) in s.tasks.iter().enumerate() {
        let at = format!("tasks[{i}]");
        let Some((_, _, extras)) = op_entry(&t.op) else {
            return Err(ScenarioError(format!(
                "{at}.op: unknown operation {:?}",
                t.op
            )));
        };
        for (j, a) in t.args.iter().enumerate() {
            need(&defined, a, format!("{at}.args[{j}]"))?;
        }
        if let Some(b) = &t.params.bound {
            need(&defined, b, format!("{at}.params.bound"))?;
        }
        if let Some(e) = &t.expect {
            for (field, r) in [
                ("dom", &e.dom),
                ("mul", &e.mul),
                ("ker", &e.ker),
                ("matrix", &e.matrix),
            ] {
                if let Some(r) = r {
                    need_ref(&defined, r, format!("{at}.expect.{field}"))?;
                }
            }
            for (j, r) in e.matrices.iter().flatten().enumerate() {
                need_ref(&defined, r, format!("{at}.expect.matrices[{j}]"))?;
            }
            if let Some(ObjectLiteral::Name(n)) = &e.equals {
                need(&defined, n, format!("{at}.expect.equals"))?;
            }
        }
        if let Some(name) = &t.save_as {
            fresh(&mut defined, name, format!("{at}.save_as"))?;
            for x in extras.iter() {
                defined.insert(format!("{name}.{x}"));
            }
        }
    }
    Ok(())
}

/// Parses and runs scenario text.
pub fn run_scenario_str(
    text: &str,
    eps: Option<f64>,
) -> std::result::Result<Report, ScenarioError> {
    let scenario = Scenario::parse(text).map_err(ScenarioError)?;
    Ok(Runner::new(scenario, eps)?.run())
}

/// Reads, parses and runs a scenario file.
pub fn run_scenario(
    path: &std::path::Path,
    eps: Option<f64>,
) -> std::result::Result<Report, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError(format!("cannot read {}: {e}", path.display())))?;
    run_scenario_str(&text, eps)
}

/// Parses one object from its report form.
pub fn parse_object(json: &Json, tol: &Tol) -> std::result::Result<Value, ScenarioError> {
    let mut obj = json.clone();
    if let Some(map) = obj.as_object_mut() {
        map.entry("name").or_insert(json!("x"));
    }
    let def: ObjectDef = serde_json::from_value(obj).map_err(|e| ScenarioError(e.to_string()))?;
    let no_names = |_: &MatrixRef| -> Result<Matrix> {
        Err(RelError::InvalidInput(
            "named references need a scenario".into(),
        ))
    };
    let matrix = |r: &MatrixRef| match r {
        MatrixRef::Inline(m) => m.to_matrix().map_err(RelError::InvalidInput),
        named => no_names(named),
    };
    let dim = |d: &Dim| match d {
        Dim::Literal(n) => Ok(*n),
        Dim::Space(s) => Err(RelError::InvalidInput(format!("undefined space {s:?}"))),
    };
    build_object(&def, &matrix, &dim, tol).map_err(|e| ScenarioError(e.to_string()))
}

/// Projector-level equality of two values of the same shape.
pub fn values_equal(a: &Value, b: &Value, tol: &Tol) -> bool {
    value_distance(a, b, tol).is_ok_and(|d| d < tol.sub_eq_tol)
}
