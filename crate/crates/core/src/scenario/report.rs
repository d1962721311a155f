use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value as Json;

use super::schema::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub what: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub op: String,
    pub args: Vec<String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<String>,
    pub assertions: Vec<Assertion>,
    pub residuals: BTreeMap<String, f64>,
    /// Computed objects in scenario form, keyed by role (`result`, ...).
    pub objects: BTreeMap<String, Json>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Json>,
    /// Ready-to-run scenario reproducing a failing or erroring task.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Scenario>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub tasks: Vec<TaskReport>,
}

impl Report {
    pub(crate) fn assemble(scenario: String, tasks: Vec<TaskReport>) -> Report {
        let input_error = tasks.iter().any(|t| t.status == Status::Error);
        let all_pass = tasks.iter().all(|t| t.status == Status::Pass);
        let exit_code = if input_error {
            2
        } else if all_pass {
            0
        } else {
            1
        };
        Report {
            scenario,
            verdict: if all_pass {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            exit_code,
            tasks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per task and assertion, then the verdict.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario);
        for t in &self.tasks {
            let status = match t.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Error => "ERROR",
            };
            let _ = writeln!(
                out,
                "  [{status}] task {} {}({})",
                t.index,
                t.op,
                t.args.join(", ")
            );
            if let Some(m) = &t.message {
                let _ = writeln!(out, "      {m}");
            }
            for a in &t.assertions {
                let mark = if a.passed { "ok" } else { "FAILED" };
                let _ = write!(out, "      {mark}: {}", a.what);
                if let (Some(r), Some(tol)) = (a.residual, a.tol) {
                    let _ = write!(out, " (residual {r:.3e}, tol {tol:.1e})");
                }
                if let Some(d) = &a.detail {
                    let _ = write!(out, " {d}");
                }
                out.push('\n');
            }
        }
        let verdict = match self.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        let passed = self
            .tasks
            .iter()
            .filter(|t| t.status == Status::Pass)
            .count();
        let _ = writeln!(
            out,
            "verdict: {verdict} ({passed}/{} tasks passed)",
            self.tasks.len()
        );
        out
    }
}
