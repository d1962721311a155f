use crate::domination::{link_partial_isometry, PartialIsometry};
use crate::error::{RelError, Result};
use crate::limits::engines::{
    gram_sequence_limit, nondecreasing_operator_limit, nonincreasing_operator_limit, Direction,
    LimitReport,
};
use crate::limits::sequence::SequenceSpec;
use crate::linalg::Tol;
use crate::relation::{
    is_singular_relation, operator_on_domain, product_star, psd_sqrt_relation, OperatorRelation,
    PsdRelation,
};

/// Regular parts of the terms of a relation sequence, as a sequence.
struct RegularParts<'a>(&'a SequenceSpec);

impl RegularParts<'_> {
    fn spec(&self) -> Result<SequenceSpec> {
        Ok(match self.0 {
            SequenceSpec::Scaled { schedule, base } => SequenceSpec::Scaled {
                schedule: *schedule,
                base: base.regular_part().into_relation(),
            },
            SequenceSpec::Explicit(terms) => SequenceSpec::Explicit(
                terms
                    .iter()
                    .map(|t| t.regular_part().into_relation())
                    .collect(),
            ),
            SequenceSpec::DirectSum(parts) => SequenceSpec::DirectSum(
                parts
                    .iter()
                    .map(|p| RegularParts(p).spec())
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

/// `(H_op)^{1/2}` as an operator on `dom H`.
fn root_operator(h: &PsdRelation, tol: &Tol) -> Result<OperatorRelation> {
    operator_on_domain(&psd_sqrt_relation(h).op(), h.dom(), tol)
}

/// Result of [`relation_sequence_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Limit `S_r` of the regular parts.
    pub regular: LimitReport,
    /// Limit `H_∞` of `T_n* T_n`.
    pub gram: LimitReport,
    /// `U` with `(H_∞,op)^{1/2} = U S_r`.
    pub isometry: PartialIsometry,
    /// Distance between `dom S_r` and `dom H_∞`.
    pub domain_distance: f64,
    /// Largest `| ‖S_r φ‖ − ‖(H_∞,op)^{1/2} φ‖ |` over a basis of the domain.
    pub norm_residual: f64,
    /// Graph distance between `S_r* S_r` and `H_∞`.
    pub star_distance: f64,
    /// Largest entry of `S_r^T S_r − H_∞,op`.
    pub star_residual: f64,
}

impl PipelineReport {
    pub fn limit(&self) -> &OperatorRelation {
        self.regular
            .operator()
            .expect("regular limit is an operator")
    }

    pub fn h_infinity(&self) -> &PsdRelation {
        self.gram.psd().expect("gram limit is a PSD relation")
    }
}

/// Runs the nondecreasing relation pipeline: limit of the regular parts,
/// limit of `T_n* T_n`, and the identities linking them.
pub fn relation_sequence_pipeline(seq: &SequenceSpec, tol: &Tol) -> Result<PipelineReport> {
    tol.validate()?;
    seq.validate()?;
    for n in [1u64, 2] {
        let t = seq.evaluate(n)?.with_tol(tol);
        let structural = crate::relation::gram_relation(&t);
        let composed = product_star(&t)?;
        let gap = structural.relation().distance(composed.relation());
        if gap >= tol.sub_eq_tol {
            return Err(RelError::verification(
                "relation_sequence_pipeline",
                format!("T*T by composition and by parts differ by {gap:e} at n = {n}"),
            ));
        }
    }
    let regular = nondecreasing_operator_limit(&RegularParts(seq).spec()?, tol)?;
    let gram = gram_sequence_limit(seq, Direction::Nondecreasing, tol)?;
    let s_r = regular.operator().expect("operator limit");
    let h = gram.psd().expect("psd limit");

    let domain_distance = s_r.domain().distance(h.dom());
    if domain_distance >= tol.sub_eq_tol {
        return Err(RelError::verification(
            "relation_sequence_pipeline",
            format!("dom S_r and dom H_inf differ by {domain_distance:e}"),
        ));
    }
    let root = root_operator(h, tol)?;
    let q = s_r.domain().basis();
    let norm_residual = q
        .column_iter()
        .map(|phi| ((s_r.action() * phi).norm() - (root.action() * phi).norm()).abs())
        .fold(0.0, f64::max);
    if norm_residual > 1e-6 {
        return Err(RelError::verification(
            "relation_sequence_pipeline",
            format!("norms of S_r and the root of H_inf differ by {norm_residual:e}"),
        ));
    }
    let isometry = link_partial_isometry(s_r, &root, tol)?;
    let star = product_star(s_r.relation())?;
    let star_distance = star.relation().distance(h.relation());
    let star_residual = (star.op() - h.op()).amax();
    if star_distance >= tol.sub_eq_tol || star_residual >= tol.sub_eq_tol * h.op().amax().max(1.0) {
        return Err(RelError::verification(
            "relation_sequence_pipeline",
            format!("S_r* S_r differs from H_inf (graph {star_distance:e}, op {star_residual:e})"),
        ));
    }
    Ok(PipelineReport {
        regular,
        gram,
        isometry,
        domain_distance,
        norm_residual,
        star_distance,
        star_residual,
    })
}

/// Result of [`nonincreasing_relation_check`].
#[derive(Debug, Clone)]
pub struct NonincreasingReport {
    /// Limit `T` of the operators.
    pub operator: LimitReport,
    /// Limit `K_∞` of `T_n* T_n`.
    pub gram: LimitReport,
    /// `U` with `(K_∞,reg)^{1/2} = U T`.
    pub isometry: PartialIsometry,
    /// Graph distance between `K_∞` and `T* T`.
    pub star_distance: f64,
    /// Largest entry of `Uᵀ (K_∞,reg)^{1/2} − T`.
    pub factorization_residual: f64,
    pub limit_singular: bool,
    pub gram_singular: bool,
}

impl NonincreasingReport {
    pub fn limit(&self) -> &OperatorRelation {
        self.operator.operator().expect("operator limit")
    }

    pub fn k_infinity(&self) -> &PsdRelation {
        self.gram.psd().expect("psd limit")
    }
}

/// Limit of a nonincreasing operator sequence together with the identities
/// relating it to the limit of `T_n* T_n`.
pub fn nonincreasing_relation_check(seq: &SequenceSpec, tol: &Tol) -> Result<NonincreasingReport> {
    let operator = nonincreasing_operator_limit(seq, tol)?;
    let gram = gram_sequence_limit(seq, Direction::Nonincreasing, tol)?;
    let t = operator.operator().expect("operator limit");
    let k = gram.psd().expect("psd limit");

    let star = product_star(t.relation())?;
    let star_distance = star.relation().distance(k.relation());
    if star_distance >= tol.sub_eq_tol {
        return Err(RelError::verification(
            "nonincreasing_relation_check",
            format!("K_inf differs from T*T by {star_distance:e}"),
        ));
    }
    let root = root_operator(k, tol)?;
    let isometry = link_partial_isometry(t, &root, tol)?;
    let back = isometry.matrix.transpose() * root.action();
    let factorization_residual = (back - t.action()).amax();
    if factorization_residual >= tol.sub_eq_tol {
        return Err(RelError::verification(
            "nonincreasing_relation_check",
            format!("T differs from U^T (K_inf)^(1/2) by {factorization_residual:e}"),
        ));
    }
    let limit_singular = is_singular_relation(t.relation());
    let gram_singular = is_singular_relation(k.relation());
    if limit_singular != gram_singular {
        return Err(RelError::verification(
            "nonincreasing_relation_check",
            format!("T singular: {limit_singular}, K_inf singular: {gram_singular}"),
        ));
    }
    Ok(NonincreasingReport {
        operator,
        gram,
        isometry,
        star_distance,
        factorization_residual,
        limit_singular,
        gram_singular,
    })
}
