use std::fmt::Write as _;

use serde_json::Value as Json;

use super::report::Report;
use super::run::{run_scenario_str, ScenarioError};
use super::schema::{MatrixRef, ObjectLiteral, Scenario};

const BUNDLED: [(&str, &str); 5] = [
    (
        "scaling-up",
        include_str!("../../scenarios/scaling-up.json"),
    ),
    (
        "scaling-down",
        include_str!("../../scenarios/scaling-down.json"),
    ),
    (
        "truncation",
        include_str!("../../scenarios/truncation.json"),
    ),
    ("pipeline", include_str!("../../scenarios/pipeline.json")),
    (
        "example-3-4",
        include_str!("../../scenarios/example-3-4.json"),
    ),
];

/// Names accepted by [`demo`].
pub fn demo_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Text of the bundled scenario behind a demo.
pub fn demo_scenario(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Runs a bundled scenario and renders each computed object next to the
/// closed form the scenario expects.
pub fn demo(name: &str) -> Result<(Report, String), ScenarioError> {
    let text = demo_scenario(name).ok_or_else(|| {
        ScenarioError(format!(
            "unknown demo {name:?} (expected one of: {})",
            demo_names().join(", ")
        ))
    })?;
    let scenario = Scenario::parse(text).map_err(ScenarioError)?;
    let report = run_scenario_str(text, None)?;
    let mut out = String::new();
    let _ = writeln!(out, "demo {name}");
    for (task, tr) in scenario.tasks.iter().zip(&report.tasks) {
        let _ = writeln!(out, "\n{}({})", task.op, task.args.join(", "));
        if let Some(result) = tr.objects.get("result") {
            let _ = writeln!(out, "  computed:");
            render_object(&mut out, result, "    ");
        }
        if let Some(e) = &task.expect {
            if let Some(lit) = &e.equals {
                let _ = writeln!(out, "  closed form: {}", literal_label(lit, &scenario));
            }
            for (what, r) in [
                ("dom", &e.dom),
                ("mul", &e.mul),
                ("ker", &e.ker),
                ("matrix", &e.matrix),
            ] {
                if let Some(r) = r {
                    let _ = writeln!(out, "  expected {what}: {}", matrix_label(r));
                }
            }
            if let Some(h) = e.holds {
                let _ = writeln!(out, "  expected holds: {h}");
            }
        }
    }
    out.push('\n');
    out.push_str(&report.render_text());
    Ok((report, out))
}

fn literal_label(lit: &ObjectLiteral, scenario: &Scenario) -> String {
    match lit {
        ObjectLiteral::Name(n) => {
            let def = scenario.objects.iter().find(|o| o.name() == n);
            match def.and_then(|d| serde_json::to_value(d).ok()) {
                Some(j) => format!("{n} = {}", compact(&j)),
                None => n.clone(),
            }
        }
        other => compact(&serde_json::to_value(other).expect("literal serializes")),
    }
}

fn matrix_label(r: &MatrixRef) -> String {
    match r {
        MatrixRef::Name(n) => n.clone(),
        MatrixRef::Inline(m) => compact(&serde_json::to_value(m).expect("matrix serializes")),
    }
}

fn compact(j: &Json) -> String {
    serde_json::to_string(j).expect("json serializes")
}

/// Prints the matrices of a report object row by row.
fn render_object(out: &mut String, obj: &Json, indent: &str) {
    if let Json::Array(items) = obj {
        for (i, item) in items.iter().enumerate() {
            let _ = writeln!(out, "{indent}[{}]", i + 1);
            render_object(out, item, &format!("{indent}  "));
        }
        return;
    }
    if let Json::Bool(b) = obj {
        let _ = writeln!(out, "{indent}{b}");
        return;
    }
    let kind = obj.get("kind").and_then(Json::as_str).unwrap_or("object");
    let note = if kind == "psd" {
        " (multivalued part: orthogonal complement of the domain)"
    } else {
        ""
    };
    let _ = writeln!(out, "{indent}{kind}{note}");
    let fields: &[&str] = match kind {
        "matrix" => &[""],
        "relation" => &["generators"],
        _ => &["matrix", "domain"],
    };
    for f in fields {
        let m = if f.is_empty() { Some(obj) } else { obj.get(*f) };
        if let Some(m) = m {
            if !f.is_empty() {
                let _ = writeln!(out, "{indent}  {f}:");
            }
            render_matrix(out, m, &format!("{indent}    "));
        }
    }
}

fn render_matrix(out: &mut String, m: &Json, indent: &str) {
    let rows = m.get("rows").and_then(Json::as_u64).unwrap_or(0) as usize;
    let cols = m.get("cols").and_then(Json::as_u64).unwrap_or(0) as usize;
    let data: Vec<f64> = m
        .get("data")
        .and_then(Json::as_array)
        .map(|a| a.iter().filter_map(Json::as_f64).collect())
        .unwrap_or_default();
    if rows == 0 || cols == 0 {
        let _ = writeln!(out, "{indent}({rows}x{cols})");
        return;
    }
    for r in 0..rows {
        let row: Vec<String> = (0..cols)
            .map(|c| {
                let x = data.get(r * cols + c).copied().unwrap_or(f64::NAN);
                // Print tiny roundoff as zero.
                format!("{:>10.6}", if x.abs() < 5e-13 { 0.0 } else { x })
            })
            .collect();
        let _ = writeln!(out, "{indent}{}", row.join(" "));
    }
}
