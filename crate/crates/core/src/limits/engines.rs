//! Monotone limit engines.
//!
//! Every engine samples its sequence on the doubling schedule `n = 2^k`,
//! tracks the resolvents `(H_n + I)^{-1}` of the associated nonnegative
//! relations, and stops once two consecutive resolvent steps are below
//! `conv_eps` and the domain has been stable for three samples.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::domination::{dominates, psd_leq, Contraction, PartialIsometry};
use crate::error::{RelError, Result};
use crate::limits::representing::{representing_map, GramSpec};
use crate::limits::sequence::{SequenceSpec, Trend};
use crate::linalg::{
    complement, intersect, psd_sqrt, sym_eigen, symmetrize, Matrix, Subspace, Tol,
};
use crate::relation::{
    gram_relation, product_star, relation_from_resolvent, resolvent, spectral_truncation,
    LinearRelation, OperatorRelation, PsdRelation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
}

/// Convergence bookkeeping of a limit engine.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Diagnostics {
    /// Number of doublings performed (the last sample is `n = 2^doublings`).
    pub doublings: u32,
    pub final_n: u64,
    pub converged: bool,
    /// First sample at which the domain had been equal for three samples.
    pub domain_stable_at: Option<u64>,
    /// `‖R_n − R_{2n}‖_F` for consecutive samples.
    pub resolvent_steps: Vec<f64>,
    /// Named residuals of the internal checks.
    pub residuals: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub enum LimitObject {
    Operator(OperatorRelation),
    Psd(PsdRelation),
}

impl LimitObject {
    pub fn relation(&self) -> &LinearRelation {
        match self {
            LimitObject::Operator(t) => t.relation(),
            LimitObject::Psd(h) => h.relation(),
        }
    }
}

/// Output of a limit engine.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub limit: LimitObject,
    /// Directions on which the limit is defined.
    pub dom_limit: Subspace,
    /// Directions of the stabilized common domain where the form diverges.
    pub blowup_space: Subspace,
    /// `C_n` with `C_n T ⊆ T_n` (nondecreasing) or `C_n T_n ⊆ T`
    /// (nonincreasing), for every sampled `n`.
    pub contractions: Vec<(u64, Contraction)>,
    /// Contraction certifying `T ≺_c T'` for a supplied upper bound `T'`.
    pub upper_bound: Option<Contraction>,
    pub isometry: Option<PartialIsometry>,
    pub diagnostics: Diagnostics,
}

impl LimitReport {
    /// The limit as an operator; `None` for PSD limits.
    pub fn operator(&self) -> Option<&OperatorRelation> {
        match &self.limit {
            LimitObject::Operator(t) => Some(t),
            LimitObject::Psd(_) => None,
        }
    }

    pub fn psd(&self) -> Option<&PsdRelation> {
        match &self.limit {
            LimitObject::Psd(h) => Some(h),
            LimitObject::Operator(_) => None,
        }
    }
}

struct Sample {
    n: u64,
    psd: PsdRelation,
}

struct Doubling {
    samples: Vec<Sample>,
    last_resolvent: Matrix,
    diagnostics: Diagnostics,
}

/// Samples `eval` on `n = 1, 2, 4, ...`, checking monotonicity between
/// consecutive samples, until the resolvents converge.
fn run_doubling<F>(eval: F, direction: Direction, tol: &Tol) -> Result<Doubling>
where
    F: Fn(u64) -> Result<PsdRelation>,
{
    let mut samples: Vec<Sample> = Vec::new();
    let mut diag = Diagnostics::default();
    let mut last_r: Option<Matrix> = None;
    let mut stable_run = 0usize;
    for k in 0..=tol.n_max_doublings {
        let n = 1u64 << k;
        let h = eval(n)?;
        let r = resolvent(&h);
        if let Some(prev) = samples.last() {
            let ordered = match direction {
                Direction::Nondecreasing => psd_leq(&prev.psd, &h, tol),
                Direction::Nonincreasing => psd_leq(&h, &prev.psd, tol),
            };
            if !ordered {
                return Err(RelError::Monotonicity {
                    earlier: prev.n,
                    later: n,
                });
            }
            if prev.psd.dom().equals(h.dom(), tol) {
                stable_run += 1;
            } else {
                stable_run = 0;
            }
        }
        if let Some(prev_r) = &last_r {
            diag.resolvent_steps.push((&r - prev_r).norm());
        }
        if stable_run >= 2 && diag.domain_stable_at.is_none() {
            diag.domain_stable_at = Some(n);
        }
        if stable_run < 2 {
            diag.domain_stable_at = None;
        }
        diag.doublings = k;
        diag.final_n = n;
        samples.push(Sample { n, psd: h });
        last_r = Some(r);
        let steps = &diag.resolvent_steps;
        let settled =
            steps.len() >= 2 && steps[steps.len() - 2..].iter().all(|&s| s <= tol.conv_eps);
        if settled && stable_run >= 2 {
            diag.converged = true;
            break;
        }
    }
    Ok(Doubling {
        samples,
        last_resolvent: last_r.expect("at least one sample is always taken"),
        diagnostics: diag,
    })
}

/// Nonnegative relation built from a resolvent restricted to `dom`, with
/// no snapping at the small end: every direction of `dom` stays finite.
fn bounded_from_resolvent(r: &Matrix, dom: &Subspace, tol: &Tol) -> Result<PsdRelation> {
    let q = dom.basis();
    let (vals, w) = sym_eigen(&symmetrize(&(q.transpose() * r * q)));
    let mut lambdas = Vec::with_capacity(vals.len());
    for &v in &vals {
        if v <= 0.0 || v > 1.0 + tol.psd_tol {
            return Err(RelError::NotResolvent(v));
        }
        let v = if v > 1.0 - tol.snap_tol { 1.0 } else { v };
        lambdas.push((1.0 - v) / v);
    }
    PsdRelation::from_eigen(&(q * w), &lambdas, tol)
}

fn representing_limit(gram_rel: &PsdRelation, tol: &Tol) -> Result<OperatorRelation> {
    let q = gram_rel.dom().basis().clone();
    let g = symmetrize(&(q.transpose() * gram_rel.op() * &q));
    let spec = GramSpec::new(q, g, tol)?;
    Ok(representing_map(&spec, tol)?.0)
}

fn operator_limit(
    seq: &SequenceSpec,
    direction: Direction,
    upper: Option<&LinearRelation>,
    tol: &Tol,
) -> Result<LimitReport> {
    tol.validate()?;
    seq.validate()?;
    let eval = |n: u64| -> Result<LinearRelation> {
        let t = seq.evaluate(n)?.with_tol(tol);
        let m = t.mul().dim();
        if m != 0 {
            return Err(RelError::NotOperator(m));
        }
        Ok(t)
    };
    let run = run_doubling(|n| Ok(gram_relation(&eval(n)?)), direction, tol)?;
    let mut diag = run.diagnostics;
    let stable_dom = run
        .samples
        .last()
        .expect("at least one sample")
        .psd
        .dom()
        .clone();

    let (gram_limit, blowup) = match direction {
        Direction::Nondecreasing => {
            let h = relation_from_resolvent(&run.last_resolvent, tol)?;
            let lost = intersect(&stable_dom, &complement(h.dom()), tol)?;
            (h, lost)
        }
        Direction::Nonincreasing => (
            bounded_from_resolvent(&run.last_resolvent, &stable_dom, tol)?,
            Subspace::zero(stable_dom.ambient_dim()),
        ),
    };
    let t = representing_limit(&gram_limit, tol)?;
    let t_rel = t.relation().clone();

    let mut contractions = Vec::new();
    for s in &run.samples {
        let tn = eval(s.n)?;
        let (small, big) = match direction {
            Direction::Nondecreasing => (&tn, &t_rel),
            Direction::Nonincreasing => (&t_rel, &tn),
        };
        match dominates(small, big, tol)? {
            Some(c) => contractions.push((s.n, c)),
            None => {
                return Err(RelError::verification(
                    "operator_limit",
                    format!("sampled term n = {} is not ordered against the limit", s.n),
                ))
            }
        }
    }

    let upper_bound = match upper {
        None => None,
        Some(bound) => {
            for s in &run.samples {
                if dominates(&eval(s.n)?, bound, tol)?.is_none() {
                    return Err(RelError::InvalidInput(format!(
                        "supplied bound does not dominate the term n = {}",
                        s.n
                    )));
                }
            }
            match dominates(&t_rel, bound, tol)? {
                Some(c) => Some(c),
                None => {
                    return Err(RelError::verification(
                        "operator_limit",
                        "limit is not dominated by an upper bound of the sequence",
                    ))
                }
            }
        }
    };
    diag.residuals
        .insert("blowup_dim".into(), blowup.dim() as f64);
    Ok(LimitReport {
        dom_limit: t.domain().clone(),
        blowup_space: blowup,
        limit: LimitObject::Operator(t),
        contractions,
        upper_bound,
        isometry: None,
        diagnostics: diag,
    })
}

/// Limit of `T_1 ≺_c T_2 ≺_c ...` for a sequence of operators.
pub fn nondecreasing_operator_limit(seq: &SequenceSpec, tol: &Tol) -> Result<LimitReport> {
    operator_limit(seq, Direction::Nondecreasing, None, tol)
}

/// As [`nondecreasing_operator_limit`], and additionally certifies that the
/// limit is dominated by `bound` whenever every sampled term is.
pub fn nondecreasing_operator_limit_bounded(
    seq: &SequenceSpec,
    bound: &LinearRelation,
    tol: &Tol,
) -> Result<LimitReport> {
    operator_limit(seq, Direction::Nondecreasing, Some(bound), tol)
}

/// Limit of `... ≺_c T_2 ≺_c T_1` for a sequence of operators.
pub fn nonincreasing_operator_limit(seq: &SequenceSpec, tol: &Tol) -> Result<LimitReport> {
    operator_limit(seq, Direction::Nonincreasing, None, tol)
}

/// Strong resolvent limit of a monotone sequence of nonnegative
/// selfadjoint relations.
pub fn monotone_psd_limit(
    seq: &SequenceSpec,
    direction: Direction,
    tol: &Tol,
) -> Result<LimitReport> {
    tol.validate()?;
    seq.validate()?;
    let run = run_doubling(|n| Ok(seq.evaluate_psd(n)?.with_tol(tol)), direction, tol)?;
    psd_limit_from_run(run, Some(seq), direction, tol)
}

fn psd_limit_from_run(
    run: Doubling,
    seq: Option<&SequenceSpec>,
    direction: Direction,
    tol: &Tol,
) -> Result<LimitReport> {
    let mut diag = run.diagnostics;
    let h_inf = relation_from_resolvent(&run.last_resolvent, tol)?;
    let last_dom = run.samples.last().expect("at least one sample").psd.dom();
    let blowup = match direction {
        Direction::Nondecreasing => intersect(last_dom, &complement(h_inf.dom()), tol)?,
        Direction::Nonincreasing => Subspace::zero(h_inf.dim()),
    };

    let sandwich_failures = run
        .samples
        .iter()
        .filter(|s| match direction {
            Direction::Nondecreasing => !psd_leq(&s.psd, &h_inf, tol),
            Direction::Nonincreasing => !psd_leq(&h_inf, &s.psd, tol),
        })
        .count();
    diag.residuals
        .insert("sandwich_failures".into(), sandwich_failures as f64);
    if diag.converged && sandwich_failures > 0 {
        return Err(RelError::verification(
            "monotone_psd_limit",
            format!("{sandwich_failures} sampled terms are not ordered against the limit"),
        ));
    }

    if let Some(SequenceSpec::Scaled { schedule, base }) = seq {
        let a = PsdRelation::from_relation(&base.with_tol(tol))?;
        let expected = match schedule.trend() {
            Trend::Growing => LinearRelation::product(a.ker(), &complement(a.ker()), tol),
            Trend::Decaying => LinearRelation::product(a.dom(), a.mul(), tol),
            Trend::Constant => a.scaled(schedule.factor(1))?.relation().clone(),
        };
        let gap = expected.distance(h_inf.relation());
        diag.residuals.insert("analytic_distance".into(), gap);
        if diag.converged && gap > 1e-6 {
            return Err(RelError::verification(
                "monotone_psd_limit",
                format!("limit differs from the closed form by {gap:e}"),
            ));
        }
    }

    Ok(LimitReport {
        dom_limit: h_inf.dom().clone(),
        blowup_space: blowup,
        limit: LimitObject::Psd(h_inf),
        contractions: Vec::new(),
        upper_bound: None,
        isometry: None,
        diagnostics: diag,
    })
}

/// Monotone PSD limit of `n ↦ gram_relation(T_n)`, the route used by the
/// relation pipelines.
pub(crate) fn gram_sequence_limit(
    seq: &SequenceSpec,
    direction: Direction,
    tol: &Tol,
) -> Result<LimitReport> {
    let run = run_doubling(
        |n| Ok(gram_relation(&seq.evaluate(n)?.with_tol(tol))),
        direction,
        tol,
    )?;
    psd_limit_from_run(run, None, direction, tol)
}

/// Outcome of [`strong_graph_limit_check`].
#[derive(Debug, Clone, Serialize)]
pub struct GraphLimitCheck {
    pub holds: bool,
    /// Largest final distance over the candidate's graph basis.
    pub worst_distance: f64,
    /// Index of the graph basis vector attaining `worst_distance`.
    pub worst_index: Option<usize>,
}

/// Checks that every graph vector of `candidate` is approximated by graph
/// vectors of the sequence terms along the doubling schedule.
pub fn strong_graph_limit_check(
    seq: &SequenceSpec,
    candidate: &LinearRelation,
    tol: &Tol,
) -> Result<GraphLimitCheck> {
    seq.validate()?;
    if seq.dims() != (candidate.dim_h(), candidate.dim_k()) {
        return Err(RelError::DimensionMismatch(
            "candidate and sequence act between different spaces".into(),
        ));
    }
    let basis = candidate.graph().basis();
    let m = basis.ncols();
    let mut history: Vec<Vec<f64>> = vec![Vec::new(); m];
    for k in 0..=tol.n_max_doublings {
        let g = seq.evaluate(1u64 << k)?.graph().clone();
        for (j, h) in history.iter_mut().enumerate() {
            h.push(g.residual(&basis.column(j).clone_owned()));
        }
    }
    let mut holds = true;
    let mut worst = 0.0;
    let mut worst_index = None;
    for (j, h) in history.iter().enumerate() {
        let passes = match h.iter().position(|&d| d < 1e-6) {
            None => false,
            Some(first) => h[first..]
                .windows(2)
                .all(|w| w[1] <= w[0] + tol.conv_eps && w[1] < 1e-6),
        };
        holds &= passes;
        let last = *h.last().unwrap_or(&0.0);
        if last >= worst {
            worst = last;
            worst_index = Some(j);
        }
    }
    Ok(GraphLimitCheck {
        holds,
        worst_distance: worst,
        worst_index: if m == 0 { None } else { worst_index },
    })
}

/// `T_k = (spectral_truncation(T*T, k))^{1/2}` for `k = 1..=count`.
pub fn bounded_approximation(t: &OperatorRelation, count: usize, tol: &Tol) -> Result<Vec<Matrix>> {
    let a = product_star(t.relation())?.op();
    (1..=count)
        .map(|k| psd_sqrt(&spectral_truncation(&a, k as f64, tol)?, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::sequence::Schedule;
    use crate::linalg::{orthonormalize, Vector};

    fn tol() -> Tol {
        Tol::default()
    }

    fn mat(r: usize, c: usize, d: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, d)
    }

    fn diag(d: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(d))
    }

    fn e(n: usize, i: usize) -> Subspace {
        Subspace::from_orthonormal(Matrix::identity(n, n).columns(i, 1).clone_owned())
    }

    #[test]
    fn sqrt_n_r_blows_up_off_the_kernel() {
        let r = LinearRelation::from_matrix(&diag(&[1.0, 0.0]), &tol());
        let rep = nondecreasing_operator_limit(&SequenceSpec::scaled(Schedule::SqrtN, r), &tol())
            .unwrap();
        assert!(rep.diagnostics.converged);
        assert!(rep.dom_limit.equals(&e(2, 1), &tol()));
        assert!(rep.blowup_space.equals(&e(2, 0), &tol()));
        let t = rep.operator().unwrap();
        assert_eq!(t.action().amax(), 0.0);
    }

    #[test]
    fn constant_operator_sequence() {
        let m = mat(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let t0 = LinearRelation::from_matrix(&m, &tol());
        let rep = nondecreasing_operator_limit(&SequenceSpec::Explicit(vec![t0]), &tol()).unwrap();
        let t = rep.operator().unwrap();
        assert!((t.action().transpose() * t.action() - m.transpose() * &m).amax() < 1e-9);
        assert_eq!(rep.blowup_space.dim(), 0);
        assert_eq!(rep.diagnostics.final_n, 4);
    }

    #[test]
    fn direct_sum_blows_up_one_block() {
        let one = LinearRelation::identity(1, &tol());
        let seq = SequenceSpec::DirectSum(vec![
            SequenceSpec::scaled(Schedule::SqrtN, one.clone()),
            SequenceSpec::Explicit(vec![one]),
        ]);
        let rep = nondecreasing_operator_limit(&seq, &tol()).unwrap();
        assert!(rep.dom_limit.equals(&e(2, 1), &tol()));
        let t = rep.operator().unwrap();
        let e2 = Vector::from_vec(vec![0.0, 1.0]);
        assert!((t.apply(&e2).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_operator_sequences() {
        let r = LinearRelation::from_matrix(&mat(2, 2, &[1.0, 1.0, 0.0, 2.0]), &tol());
        let rep = nonincreasing_operator_limit(
            &SequenceSpec::scaled(Schedule::InvSqrtN, r.clone()),
            &tol(),
        )
        .unwrap();
        let t = rep.operator().unwrap();
        assert_eq!(t.domain().dim(), 2);
        assert!(t.action().amax() < 1e-9);

        let m = LinearRelation::from_matrix(&mat(1, 1, &[3.0]), &tol());
        let seq = SequenceSpec::DirectSum(vec![
            SequenceSpec::scaled(Schedule::InvSqrtN, r),
            SequenceSpec::Explicit(vec![m]),
        ]);
        let rep = nonincreasing_operator_limit(&seq, &tol()).unwrap();
        let t = rep.operator().unwrap();
        let g = t.action().transpose() * t.action();
        assert!((g - diag(&[0.0, 0.0, 9.0])).amax() < 1e-7);
    }

    #[test]
    fn monotonicity_violation_is_reported() {
        let r = LinearRelation::identity(1, &tol());
        let seq = SequenceSpec::scaled(Schedule::InvN, r);
        assert!(matches!(
            nondecreasing_operator_limit(&seq, &tol()),
            Err(RelError::Monotonicity {
                earlier: 1,
                later: 2
            })
        ));
    }

    #[test]
    fn psd_examples() {
        let a = LinearRelation::from_matrix(&diag(&[0.0, 1.0]), &tol());
        let rep = monotone_psd_limit(
            &SequenceSpec::scaled(Schedule::N, a),
            Direction::Nondecreasing,
            &tol(),
        )
        .unwrap();
        let h = rep.psd().unwrap();
        let expected = LinearRelation::product(&e(2, 0), &e(2, 1), &tol());
        assert!(h.relation().distance(&expected) < 1e-6);
        assert!(h.dom().equals(&e(2, 0), &tol()));

        let a = LinearRelation::from_matrix(&diag(&[1.0, 2.0]), &tol());
        let rep = monotone_psd_limit(
            &SequenceSpec::scaled(Schedule::InvN, a),
            Direction::Nonincreasing,
            &tol(),
        )
        .unwrap();
        let zero = LinearRelation::from_matrix(&Matrix::zeros(2, 2), &tol());
        assert!(rep.psd().unwrap().relation().distance(&zero) < 1e-6);

        let h0 = LinearRelation::from_matrix(&diag(&[2.0, 0.5]), &tol());
        let rep = monotone_psd_limit(
            &SequenceSpec::Explicit(vec![h0.clone()]),
            Direction::Nondecreasing,
            &tol(),
        )
        .unwrap();
        assert!(rep.psd().unwrap().relation().equals(&h0));
    }

    #[test]
    fn graph_limit_examples() {
        let a = LinearRelation::from_matrix(&diag(&[0.0, 1.0]), &tol());
        let seq = SequenceSpec::scaled(Schedule::N, a.clone());
        let good = LinearRelation::product(&e(2, 0), &e(2, 1), &tol());
        assert!(strong_graph_limit_check(&seq, &good, &tol()).unwrap().holds);
        let zero = LinearRelation::from_matrix(&Matrix::zeros(2, 2), &tol());
        let bad = strong_graph_limit_check(&seq, &zero, &tol()).unwrap();
        assert!(!bad.holds);
        assert!(bad.worst_distance > 0.5);
        let constant = SequenceSpec::Explicit(vec![a.clone()]);
        assert!(
            strong_graph_limit_check(&constant, &a, &tol())
                .unwrap()
                .holds
        );
    }

    #[test]
    fn truncation_chain() {
        let m = diag(&[1.0, 3f64.sqrt()]);
        let t = crate::relation::operator_on_domain(&m, &Subspace::full(2), &tol()).unwrap();
        let parts = bounded_approximation(&t, 3, &tol()).unwrap();
        assert!((&parts[0] - diag(&[1.0, 0.0])).amax() < 1e-9);
        assert!((&parts[1] - diag(&[1.0, 0.0])).amax() < 1e-9);
        assert!((&parts[2] - diag(&[1.0, 3f64.sqrt()])).amax() < 1e-9);

        let z = crate::relation::operator_on_domain(
            &Matrix::zeros(2, 2),
            &orthonormalize(&mat(2, 1, &[1.0, 1.0]), &tol()),
            &tol(),
        )
        .unwrap();
        for p in bounded_approximation(&z, 3, &tol()).unwrap() {
            assert!(p.amax() < 1e-12);
        }
    }

    #[test]
    fn upper_bound_passes_to_the_limit() {
        let r = LinearRelation::from_matrix(&diag(&[0.5, 0.0]), &tol());
        let seq =
            SequenceSpec::DirectSum(vec![SequenceSpec::Explicit(vec![r.scaled(0.5), r.clone()])]);
        let bound = LinearRelation::identity(2, &tol());
        let rep = nondecreasing_operator_limit_bounded(&seq, &bound, &tol()).unwrap();
        assert!(rep.upper_bound.unwrap().norm() <= 1.0 + 1e-8);
    }
}
