//! JSON scenarios: schema, runner, reports, randomized fuzzing and the
//! bundled demos behind the `relcalc` binary.

mod demo;
mod fuzz;
mod report;
mod run;
mod schema;
mod value;

pub use demo::{demo, demo_names, demo_scenario};
pub use fuzz::{fuzz, FuzzOptions, FuzzReport, InvariantSummary, Suite};
pub use report::{Assertion, Report, Status, TaskReport, Verdict};
pub use run::{
    export_sequence, operation_names, parse_object, run_scenario, run_scenario_str, values_equal,
    Runner, ScenarioError, DEFAULT_EPS,
};
pub use schema::{
    Dim, Expect, MatrixJson, MatrixRef, ObjectDef, ObjectLiteral, Params, Scenario, ScheduleName,
    SequenceDef, TaskDef, TolOverride,
};
pub use value::Value;
