use serde_json::{json, Value as Json};

use crate::error::{RelError, Result};
use crate::limits::SequenceSpec;
use crate::linalg::{orthonormalize, Matrix, Subspace, Tol};
use crate::relation::{operator_on_domain, LinearRelation, OperatorRelation, PsdRelation};

use super::schema::{MatrixJson, ObjectDef};

/// A named value held by a running scenario.
#[derive(Debug, Clone)]
pub enum Value {
    Matrix(Matrix),
    Subspace(Subspace),
    Relation(LinearRelation),
    Operator(OperatorRelation),
    Psd(PsdRelation),
    Sequence(SequenceSpec),
    Matrices(Vec<Matrix>),
    Bool(bool),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Matrix(_) => "matrix",
            Value::Subspace(_) => "subspace",
            Value::Relation(_) => "relation",
            Value::Operator(_) => "operator",
            Value::Psd(_) => "psd relation",
            Value::Sequence(_) => "sequence",
            Value::Matrices(_) => "matrix list",
            Value::Bool(_) => "boolean",
        }
    }

    fn mismatch(&self, wanted: &str) -> RelError {
        RelError::InvalidInput(format!("expected a {wanted}, found a {}", self.type_name()))
    }

    pub fn as_matrix(&self) -> Result<Matrix> {
        match self {
            Value::Matrix(m) => Ok(m.clone()),
            Value::Subspace(s) => Ok(s.basis().clone()),
            other => Err(other.mismatch("matrix")),
        }
    }

    pub fn as_subspace(&self, tol: &Tol) -> Result<Subspace> {
        match self {
            Value::Subspace(s) => Ok(s.clone()),
            Value::Matrix(m) => Ok(orthonormalize(m, tol)),
            other => Err(other.mismatch("subspace")),
        }
    }

    pub fn as_relation(&self, tol: &Tol) -> Result<LinearRelation> {
        match self {
            Value::Relation(r) => Ok(r.clone()),
            Value::Operator(t) => Ok(t.relation().clone()),
            Value::Psd(h) => Ok(h.relation().clone()),
            Value::Matrix(m) => Ok(LinearRelation::from_matrix(m, tol)),
            other => Err(other.mismatch("relation")),
        }
    }

    pub fn as_operator(&self, tol: &Tol) -> Result<OperatorRelation> {
        match self {
            Value::Operator(t) => Ok(t.clone()),
            other => OperatorRelation::new(other.as_relation(tol)?),
        }
    }

    pub fn as_psd(&self, tol: &Tol) -> Result<PsdRelation> {
        match self {
            Value::Psd(h) => Ok(h.clone()),
            Value::Matrix(m) => PsdRelation::from_matrix(m, tol),
            other => PsdRelation::from_relation(&other.as_relation(tol)?),
        }
    }

    pub fn as_sequence(&self) -> Result<SequenceSpec> {
        match self {
            Value::Sequence(s) => Ok(s.clone()),
            other => Err(other.mismatch("sequence")),
        }
    }

    /// JSON form used in reports. Objects that have a scenario form are
    /// written as a scenario object definition without the name, so they
    /// can be pasted back into a scenario file.
    pub fn to_json(&self) -> Json {
        match self {
            Value::Bool(b) => json!(b),
            Value::Matrices(ms) => Json::Array(ms.iter().map(matrix_object).collect()),
            Value::Sequence(s) => {
                let (h, k) = s.dims();
                json!({ "kind": "sequence", "dim_h": h, "dim_k": k })
            }
            other => {
                let def = other
                    .to_def("")
                    .expect("every non-sequence value has a scenario form");
                let mut v = serde_json::to_value(def).expect("object definition serializes");
                v.as_object_mut().expect("object").remove("name");
                v
            }
        }
    }

    /// Scenario object definition reproducing this value, when one exists.
    pub fn to_def(&self, name: &str) -> Option<ObjectDef> {
        let name = name.to_string();
        Some(match self {
            Value::Matrix(m) => matrix_def(name, m),
            Value::Subspace(s) => matrix_def(name, s.basis()),
            Value::Relation(r) => ObjectDef::Relation {
                name,
                dim_h: super::schema::Dim::Literal(r.dim_h()),
                dim_k: super::schema::Dim::Literal(r.dim_k()),
                generators: super::schema::MatrixRef::Inline(MatrixJson::from_matrix(
                    r.graph().basis(),
                )),
            },
            Value::Operator(t) => ObjectDef::OperatorOnDomain {
                name,
                matrix: super::schema::MatrixRef::Inline(MatrixJson::from_matrix(t.action())),
                domain: Some(super::schema::MatrixRef::Inline(MatrixJson::from_matrix(
                    t.domain().basis(),
                ))),
            },
            Value::Psd(h) => ObjectDef::Psd {
                name,
                matrix: super::schema::MatrixRef::Inline(MatrixJson::from_matrix(&h.op())),
                domain: Some(super::schema::MatrixRef::Inline(MatrixJson::from_matrix(
                    h.dom().basis(),
                ))),
            },
            Value::Sequence(_) | Value::Matrices(_) | Value::Bool(_) => return None,
        })
    }
}

fn matrix_def(name: String, m: &Matrix) -> ObjectDef {
    let j = MatrixJson::from_matrix(m);
    ObjectDef::Matrix {
        name,
        rows: j.rows,
        cols: j.cols,
        data: j.data,
    }
}

fn matrix_object(m: &Matrix) -> Json {
    let j = MatrixJson::from_matrix(m);
    json!({ "kind": "matrix", "rows": j.rows, "cols": j.cols, "data": j.data })
}

/// Builds the value of an object definition; `matrix` resolves matrix
/// references and `dim` resolves dimensions.
pub(crate) fn build_object(
    def: &ObjectDef,
    matrix: &dyn Fn(&super::schema::MatrixRef) -> Result<Matrix>,
    dim: &dyn Fn(&super::schema::Dim) -> Result<usize>,
    tol: &Tol,
) -> Result<Value> {
    let span = |r: &Option<super::schema::MatrixRef>, n: usize| -> Result<Subspace> {
        match r {
            None => Ok(Subspace::full(n)),
            Some(r) => {
                let m = matrix(r)?;
                if m.nrows() != n {
                    return Err(RelError::DimensionMismatch(format!(
                        "domain columns live in R^{}, expected R^{n}",
                        m.nrows()
                    )));
                }
                Ok(orthonormalize(&m, tol))
            }
        }
    };
    Ok(match def {
        ObjectDef::Matrix {
            rows, cols, data, ..
        } => Value::Matrix(
            MatrixJson {
                rows: *rows,
                cols: *cols,
                data: data.clone(),
            }
            .to_matrix()
            .map_err(RelError::InvalidInput)?,
        ),
        ObjectDef::Relation {
            dim_h,
            dim_k,
            generators,
            ..
        } => Value::Relation(LinearRelation::from_graph(
            dim(dim_h)?,
            dim(dim_k)?,
            &matrix(generators)?,
            tol,
        )?),
        ObjectDef::OperatorOnDomain {
            matrix: m, domain, ..
        } => {
            let m = matrix(m)?;
            let d = span(domain, m.ncols())?;
            Value::Operator(operator_on_domain(&m, &d, tol)?)
        }
        ObjectDef::Psd {
            matrix: m, domain, ..
        } => {
            let m = matrix(m)?;
            if !m.is_square() {
                return Err(RelError::DimensionMismatch(format!(
                    "psd object needs a square matrix, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            let d = span(domain, m.ncols())?;
            Value::Psd(PsdRelation::from_operator_part(&d, &m, tol)?)
        }
    })
}
