use serde::{Deserialize, Serialize};

use crate::error::{RelError, Result};
use crate::relation::{LinearRelation, PsdRelation};

/// Scalar schedule `n ↦ c(n)` applied to the second graph component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Schedule {
    N,
    SqrtN,
    InvN,
    InvSqrtN,
    Const(f64),
    /// `n^(p/q)`.
    Pow {
        p: i64,
        q: i64,
    },
}

/// Long-run behaviour of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Growing,
    Decaying,
    Constant,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Const(c) if !c.is_finite() => Err(RelError::InvalidInput(
                "constant schedule needs a finite factor".into(),
            )),
            Schedule::Pow { q, .. } if q <= 0 => Err(RelError::InvalidInput(
                "power schedule needs a positive denominator q".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn factor(&self, n: u64) -> f64 {
        let x = n as f64;
        match *self {
            Schedule::N => x,
            Schedule::SqrtN => x.sqrt(),
            Schedule::InvN => 1.0 / x,
            Schedule::InvSqrtN => 1.0 / x.sqrt(),
            Schedule::Const(c) => c,
            Schedule::Pow { p, q } => x.powf(p as f64 / q as f64),
        }
    }

    pub fn trend(&self) -> Trend {
        match *self {
            Schedule::N | Schedule::SqrtN => Trend::Growing,
            Schedule::InvN | Schedule::InvSqrtN => Trend::Decaying,
            Schedule::Const(_) => Trend::Constant,
            Schedule::Pow { p, .. } if p > 0 => Trend::Growing,
            Schedule::Pow { p, .. } if p < 0 => Trend::Decaying,
            Schedule::Pow { .. } => Trend::Constant,
        }
    }
}

/// A finitely described sequence of relations, indexed by `n >= 1`.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum SequenceSpec {
    /// `T_n = { {f, c(n) f'} : {f, f'} ∈ base }`.
    Scaled {
        schedule: Schedule,
        base: LinearRelation,
    },
    /// The listed terms, then stationary at the last one.
    Explicit(Vec<LinearRelation>),
    /// Blockwise orthogonal sum of the component sequences.
    DirectSum(Vec<SequenceSpec>),
}

impl SequenceSpec {
    pub fn scaled(schedule: Schedule, base: LinearRelation) -> Self {
        SequenceSpec::Scaled { schedule, base }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Scaled { schedule, .. } => schedule.validate(),
            SequenceSpec::Explicit(terms) => {
                let first = terms.first().ok_or_else(|| {
                    RelError::InvalidInput("explicit sequence needs at least one term".into())
                })?;
                if terms
                    .iter()
                    .any(|t| t.dim_h() != first.dim_h() || t.dim_k() != first.dim_k())
                {
                    return Err(RelError::DimensionMismatch(
                        "explicit sequence terms act between different spaces".into(),
                    ));
                }
                Ok(())
            }
            SequenceSpec::DirectSum(parts) => {
                if parts.is_empty() {
                    return Err(RelError::InvalidInput(
                        "direct sum needs at least one component".into(),
                    ));
                }
                parts.iter().try_for_each(SequenceSpec::validate)
            }
        }
    }

    /// `(dim_h, dim_k)` of every term.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            SequenceSpec::Scaled { base, .. } => (base.dim_h(), base.dim_k()),
            SequenceSpec::Explicit(terms) => terms
                .first()
                .map(|t| (t.dim_h(), t.dim_k()))
                .unwrap_or((0, 0)),
            SequenceSpec::DirectSum(parts) => parts.iter().fold((0, 0), |(h, k), p| {
                let (ph, pk) = p.dims();
                (h + ph, k + pk)
            }),
        }
    }

    pub fn evaluate(&self, n: u64) -> Result<LinearRelation> {
        if n == 0 {
            return Err(RelError::InvalidInput(
                "sequences are indexed from n = 1".into(),
            ));
        }
        match self {
            SequenceSpec::Scaled { schedule, base } => Ok(base.scaled(schedule.factor(n))),
            SequenceSpec::Explicit(terms) => {
                let last = terms.len().checked_sub(1).ok_or_else(|| {
                    RelError::InvalidInput("explicit sequence needs at least one term".into())
                })?;
                let idx = usize::try_from(n - 1).unwrap_or(usize::MAX).min(last);
                Ok(terms[idx].clone())
            }
            SequenceSpec::DirectSum(parts) => {
                let mut iter = parts.iter();
                let first = iter.next().ok_or_else(|| {
                    RelError::InvalidInput("direct sum needs at least one component".into())
                })?;
                let mut acc = first.evaluate(n)?;
                for p in iter {
                    acc = acc.direct_sum(&p.evaluate(n)?);
                }
                Ok(acc)
            }
        }
    }

    /// Evaluates a sequence of nonnegative selfadjoint relations.
    pub fn evaluate_psd(&self, n: u64) -> Result<PsdRelation> {
        if n == 0 {
            return Err(RelError::InvalidInput(
                "sequences are indexed from n = 1".into(),
            ));
        }
        match self {
            SequenceSpec::Scaled { schedule, base } => {
                PsdRelation::from_relation(base)?.scaled(schedule.factor(n))
            }
            SequenceSpec::Explicit(_) => PsdRelation::from_relation(&self.evaluate(n)?),
            SequenceSpec::DirectSum(parts) => {
                let mut iter = parts.iter();
                let first = iter.next().ok_or_else(|| {
                    RelError::InvalidInput("direct sum needs at least one component".into())
                })?;
                let mut acc = first.evaluate_psd(n)?;
                for p in iter {
                    acc = acc.direct_sum(&p.evaluate_psd(n)?);
                }
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Tol};

    #[test]
    fn schedule_factors() {
        assert_eq!(Schedule::N.factor(4), 4.0);
        assert_eq!(Schedule::SqrtN.factor(4), 2.0);
        assert_eq!(Schedule::InvN.factor(4), 0.25);
        assert_eq!(Schedule::InvSqrtN.factor(4), 0.5);
        assert_eq!(Schedule::Const(3.0).factor(4), 3.0);
        assert!((Schedule::Pow { p: 3, q: 2 }.factor(4) - 8.0).abs() < 1e-12);
        assert_eq!(Schedule::Pow { p: -1, q: 1 }.trend(), Trend::Decaying);
        assert!(Schedule::Pow { p: 1, q: 0 }.validate().is_err());
    }

    #[test]
    fn scaled_at_one_is_base() {
        let tol = Tol::default();
        let base =
            LinearRelation::from_matrix(&Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]), &tol);
        let seq = SequenceSpec::scaled(Schedule::N, base.clone());
        assert!(seq.evaluate(1).unwrap().equals(&base));
    }

    #[test]
    fn explicit_is_stationary() {
        let tol = Tol::default();
        let a = LinearRelation::identity(2, &tol);
        let b = LinearRelation::from_matrix(&Matrix::zeros(2, 2), &tol);
        let seq = SequenceSpec::Explicit(vec![a.clone(), b.clone()]);
        assert!(seq.evaluate(1).unwrap().equals(&a));
        assert!(seq.evaluate(2).unwrap().equals(&b));
        assert!(seq.evaluate(1 << 40).unwrap().equals(&b));
        assert!(seq.evaluate(0).is_err());
    }

    #[test]
    fn direct_sum_dims() {
        let tol = Tol::default();
        let a = LinearRelation::from_matrix(&Matrix::from_row_slice(1, 2, &[1.0, 1.0]), &tol);
        let b = LinearRelation::identity(1, &tol);
        let seq = SequenceSpec::DirectSum(vec![
            SequenceSpec::scaled(Schedule::SqrtN, a),
            SequenceSpec::Explicit(vec![b]),
        ]);
        assert_eq!(seq.dims(), (3, 2));
        let t = seq.evaluate(4).unwrap();
        assert!((t.regular_action()[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((t.regular_action()[(1, 2)] - 1.0).abs() < 1e-12);
    }
}
