//! Serde model of scenario files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{Matrix, Tol};

/// Row-major matrix with explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Matrix) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                // Normalize negative zero so reports do not depend on it.
                let x = m[(i, j)];
                data.push(if x == 0.0 { 0.0 } else { x });
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<Matrix, String> {
        if self.rows * self.cols != self.data.len() {
            return Err(format!(
                "matrix declares {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            ));
        }
        if let Some(x) = self.data.iter().find(|x| !x.is_finite()) {
            return Err(format!("matrix entry {x} is not finite"));
        }
        Ok(Matrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Either the name of a defined matrix or an inline matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRef {
    Name(String),
    Inline(MatrixJson),
}

/// A dimension given literally or by the name of a declared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dim {
    Literal(usize),
    Space(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectDef {
    Matrix {
        name: String,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
    /// Relation whose graph is spanned by the columns of `generators`.
    Relation {
        name: String,
        dim_h: Dim,
        dim_k: Dim,
        generators: MatrixRef,
    },
    /// Operator given by `matrix` restricted to the span of the columns of
    /// `domain` (the whole space when omitted).
    OperatorOnDomain {
        name: String,
        matrix: MatrixRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<MatrixRef>,
    },
    /// Nonnegative selfadjoint relation with operator part `matrix` on the
    /// span of `domain` and multivalued part its complement.
    Psd {
        name: String,
        matrix: MatrixRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<MatrixRef>,
    },
}

impl ObjectDef {
    pub fn name(&self) -> &str {
        match self {
            ObjectDef::Matrix { name, .. }
            | ObjectDef::Relation { name, .. }
            | ObjectDef::OperatorOnDomain { name, .. }
            | ObjectDef::Psd { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    N,
    SqrtN,
    InvN,
    InvSqrtN,
    Const,
    Pow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceDef {
    Scaled {
        name: String,
        schedule: ScheduleName,
        base: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<i64>,
    },
    Explicit {
        name: String,
        terms: Vec<String>,
    },
    DirectSum {
        name: String,
        parts: Vec<String>,
    },
}

impl SequenceDef {
    pub fn name(&self) -> &str {
        match self {
            SequenceDef::Scaled { name, .. }
            | SequenceDef::Explicit { name, .. }
            | SequenceDef::DirectSum { name, .. } => name,
        }
    }
}

/// Partial tolerance record; missing fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_eq_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max_doublings: Option<u32>,
}

impl TolOverride {
    pub fn apply(&self, mut tol: Tol) -> Tol {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { tol.$f = v; } )* };
        }
        set!(
            rank_rel,
            psd_tol,
            sub_eq_tol,
            conv_eps,
            snap_tol,
            blowup_cap,
            n_max_doublings
        );
        tol
    }

    pub fn full(tol: &Tol) -> Self {
        TolOverride {
            rank_rel: Some(tol.rank_rel),
            psd_tol: Some(tol.psd_tol),
            sub_eq_tol: Some(tol.sub_eq_tol),
            conv_eps: Some(tol.conv_eps),
            snap_tol: Some(tol.snap_tol),
            blowup_cap: Some(tol.blowup_cap),
            n_max_doublings: Some(tol.n_max_doublings),
        }
    }
}

/// Operation parameters other than object arguments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// `"nondecreasing"` or `"nonincreasing"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    /// Truncation level or scale factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Number of terms for approximation tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Name of an upper bound for bounded limit tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<String>,
    /// Name of the check for `invariant` tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<String>,
}

/// Expected results. Every present field becomes one assertion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Truth value of a predicate task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
    /// Result object, compared by graph or column-space projector (relations
    /// and subspaces) or entrywise (matrices).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equals: Option<ObjectLiteral>,
    /// Domain of the result, as spanning columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dom: Option<MatrixRef>,
    /// Multivalued part of the result, as spanning columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mul: Option<MatrixRef>,
    /// Kernel of the result, as spanning columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ker: Option<MatrixRef>,
    /// Matrix of the result's operator part.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixRef>,
    /// Sequence of matrices, for approximation tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<MatrixRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Expected error kind, e.g. `"not_nonnegative"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Expected object: a name, an inline relation, or an inline matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectLiteral {
    Name(String),
    Relation {
        dim_h: usize,
        dim_k: usize,
        generators: MatrixJson,
    },
    Matrix(MatrixJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDef {
    pub op: String,
    #[serde(default)]
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
    /// Assertion tolerance; defaults to the `--eps` flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub save_as: Option<String>,
}

fn is_default(p: &Params) -> bool {
    *p == Params::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub tolerance: TolOverride,
    #[serde(default)]
    pub spaces: BTreeMap<String, usize>,
    #[serde(default)]
    pub objects: Vec<ObjectDef>,
    #[serde(default)]
    pub sequences: Vec<SequenceDef>,
    #[serde(default)]
    pub tasks: Vec<TaskDef>,
}

impl Scenario {
    /// Parses scenario JSON; errors carry the JSON path of the offending
    /// field.
    pub fn parse(text: &str) -> Result<Scenario, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            format!("at {path}: {}", e.into_inner())
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
