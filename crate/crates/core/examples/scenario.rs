//! Running a JSON scenario from Rust: build objects, run tasks, read the
//! report. The same file can be run with `relcalc run`.
//!
//! Run with `cargo run --example scenario`.

use relcalc::scenario::{run_scenario_str, Status};

const SCENARIO: &str = r#"{
  "name": "domination-walkthrough",
  "objects": [
    {"kind": "matrix", "name": "A", "rows": 2, "cols": 2, "data": [0.5, 0, 0, 1]},
    {"kind": "matrix", "name": "I", "rows": 2, "cols": 2, "data": [1, 0, 0, 1]}
  ],
  "tasks": [
    {"op": "dominates", "args": ["A", "I"], "expect": {"holds": true}},
    {"op": "dominates", "args": ["I", "A"], "expect": {"holds": false}},
    {"op": "adjoint", "args": ["A"], "expect": {"equals": "A"}}
  ]
}"#;

fn main() {
    let report = match run_scenario_str(SCENARIO, None) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    print!("{}", report.render_text());
    let failing = report
        .tasks
        .iter()
        .filter(|t| t.status != Status::Pass)
        .count();
    println!(
        "{failing} failing tasks, exit code would be {}",
        report.exit_code
    );
}
