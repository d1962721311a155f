//! Contractive domination `A ≺_c B`: there is a contraction `C` with
//! `C B ⊆ A`.
//!
//! The decision runs on parts (domain inclusion, kernel inclusion, and a
//! comparison of the regular quadratic forms on `dom B`). When the answer is
//! positive the canonical contraction is built explicitly and re-verified.

use serde::Serialize;

use crate::error::{RelError, Result};
use crate::linalg::{
    containment_residual, contains, op_norm, pseudoinverse, sym_eigen, symmetrize, Matrix,
    Subspace, Tol,
};
use crate::relation::{
    compose_matrix, lebesgue_decompose, product_star, LinearRelation, OperatorRelation, PsdRelation,
};

/// Canonical contraction with `C B ⊆ A`, zero on `(ran B)⊥`.
#[derive(Debug, Clone)]
pub struct Contraction {
    pub matrix: Matrix,
    /// `(ran B)⊥`, where `C` vanishes.
    pub convention_subspace: Subspace,
}

impl Contraction {
    pub fn norm(&self) -> f64 {
        op_norm(&self.matrix)
    }
}

/// Partial isometry with initial space `initial` and final space
/// `final_space`.
#[derive(Debug, Clone)]
pub struct PartialIsometry {
    pub matrix: Matrix,
    pub initial: Subspace,
    pub final_space: Subspace,
}

impl PartialIsometry {
    /// `‖UᵀU − P_initial‖_F`.
    pub fn initial_residual(&self) -> f64 {
        (self.matrix.transpose() * &self.matrix - self.initial.projector()).norm()
    }

    /// `‖UUᵀ − P_final‖_F`.
    pub fn final_residual(&self) -> f64 {
        (&self.matrix * self.matrix.transpose() - self.final_space.projector()).norm()
    }
}

fn same_h(a: &LinearRelation, b: &LinearRelation) -> Result<()> {
    if a.dim_h() != b.dim_h() {
        return Err(RelError::DimensionMismatch(format!(
            "relations start in R^{} and R^{}",
            a.dim_h(),
            b.dim_h()
        )));
    }
    Ok(())
}

/// Smallest eigenvalue of `(FB Q)ᵀ(FB Q) − (FA Q)ᵀ(FA Q)`, relative to the
/// size of the first term. The forms are passed as factors `F` with
/// `G = FᵀF` so that nothing is squared before it is projected.
/// Returns `+inf` when `Q` is empty.
fn form_gap(fa: &Matrix, fb: &Matrix, q: &Matrix) -> f64 {
    if q.ncols() == 0 {
        return f64::INFINITY;
    }
    let (aq, bq) = (fa * q, fb * q);
    let rb = symmetrize(&(bq.transpose() * &bq));
    let ra = symmetrize(&(aq.transpose() * &aq));
    let scale = sym_eigen(&rb).0[0].abs().max(1.0);
    let (vals, _) = sym_eigen(&(rb - ra));
    vals.last().copied().unwrap_or(0.0) / scale
}

/// Decision part of [`dominates`] without building the contraction.
pub(crate) fn form_dominated(a: &LinearRelation, b: &LinearRelation, tol: &Tol) -> Result<bool> {
    same_h(a, b)?;
    if !contains(a.dom(), b.dom(), tol)? || !contains(a.ker(), b.ker(), tol)? {
        return Ok(false);
    }
    Ok(form_gap(a.regular_action(), b.regular_action(), b.dom().basis()) >= -tol.psd_tol)
}

/// Returns the canonical contraction when `A ≺_c B`, and `None` otherwise.
pub fn dominates(a: &LinearRelation, b: &LinearRelation, tol: &Tol) -> Result<Option<Contraction>> {
    if !form_dominated(a, b, tol)? {
        return Ok(None);
    }
    let mb = b.regular_action();
    let c = a.regular_action() * pseudoinverse(mb, tol);
    let norm = op_norm(&c);
    if norm > 1.0 + 1e-8 {
        return Err(RelError::verification(
            "dominates",
            format!("canonical contraction has norm {norm}"),
        ));
    }
    let image = compose_matrix(&c, b)?;
    let gap = containment_residual(a.graph(), image.graph());
    if gap >= tol.sub_eq_tol {
        return Err(RelError::verification(
            "dominates",
            format!("C B is not contained in A (residual {gap:e})"),
        ));
    }
    Ok(Some(Contraction {
        matrix: c,
        convention_subspace: crate::linalg::complement(b.ran()),
    }))
}

/// Order of nonnegative selfadjoint relations: `dom H2 ⊆ dom H1` and
/// `(H1 φ, φ) ≤ (H2 φ, φ)` on `dom H2`.
///
/// The implied inclusion `ker H2 ⊆ ker H1` is tested on its own with
/// `sub_eq_tol`, the same test [`dominates`] applies to kernels. The form
/// slack is `psd_tol` times the largest eigenvalue of `H2` on its
/// domain (at least 1).
pub fn psd_leq(h1: &PsdRelation, h2: &PsdRelation, tol: &Tol) -> bool {
    if h1.dim() != h2.dim() {
        return false;
    }
    if !contains(h1.dom(), h2.dom(), tol).unwrap_or(false)
        || !contains(h1.ker(), h2.ker(), tol).unwrap_or(false)
    {
        return false;
    }
    form_gap(&h1.root_factor(), &h2.root_factor(), h2.dom().basis()) >= -tol.psd_tol
}

/// The three verdicts compared by [`theorem_bridge_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BridgeVerdicts {
    /// `A*A ≤ B*B`.
    pub psd_order: bool,
    /// `A ≺_c B`.
    pub dominates: bool,
    /// `A_reg ≺_c B_reg`.
    pub regular_dominates: bool,
}

impl BridgeVerdicts {
    pub fn agree(&self) -> bool {
        self.psd_order == self.dominates && self.dominates == self.regular_dominates
    }
}

pub fn bridge_verdicts(
    a: &LinearRelation,
    b: &LinearRelation,
    tol: &Tol,
) -> Result<BridgeVerdicts> {
    same_h(a, b)?;
    let psd_order = psd_leq(&product_star(a)?, &product_star(b)?, tol);
    let dom = dominates(a, b, tol)?.is_some();
    let ar = lebesgue_decompose(a)?.regular;
    let br = lebesgue_decompose(b)?.regular;
    let reg = dominates(ar.relation(), br.relation(), tol)?.is_some();
    Ok(BridgeVerdicts {
        psd_order,
        dominates: dom,
        regular_dominates: reg,
    })
}

/// True iff `A*A ≤ B*B`, `A ≺_c B` and `A_reg ≺_c B_reg` agree. A
/// disagreement is returned as a verification error carrying the verdicts.
pub fn theorem_bridge_check(a: &LinearRelation, b: &LinearRelation, tol: &Tol) -> Result<bool> {
    let v = bridge_verdicts(a, b, tol)?;
    if v.agree() {
        Ok(true)
    } else {
        Err(RelError::verification(
            "theorem_bridge_check",
            format!(
                "psd_order={} dominates={} regular_dominates={}",
                v.psd_order, v.dominates, v.regular_dominates
            ),
        ))
    }
}

/// Partial isometry `U` with `U X = Y` on the common domain, zero on
/// `(ran X)⊥`.
pub fn link_partial_isometry(
    x: &OperatorRelation,
    y: &OperatorRelation,
    tol: &Tol,
) -> Result<PartialIsometry> {
    if x.dim_h() != y.dim_h() {
        return Err(RelError::DimensionMismatch(format!(
            "operators start in R^{} and R^{}",
            x.dim_h(),
            y.dim_h()
        )));
    }
    let gap = x.domain().distance(y.domain());
    if gap >= tol.sub_eq_tol {
        return Err(RelError::NotIsometric(gap));
    }
    let q = x.domain().basis();
    let xq = x.action() * q;
    let yq = y.action() * q;
    let gx = xq.transpose() * &xq;
    let gy = yq.transpose() * &yq;
    let scale = gx.amax().max(gy.amax()).max(1.0);
    let mismatch = (&gx - &gy).amax() / scale;
    if mismatch > 1e-8 {
        return Err(RelError::NotIsometric(mismatch));
    }
    let u = y.action() * pseudoinverse(x.action(), tol);
    let residual = (&u * x.action() - y.action()).amax() / scale.sqrt();
    if residual >= tol.sub_eq_tol {
        return Err(RelError::verification(
            "link_partial_isometry",
            format!("U X differs from Y by {residual:e}"),
        ));
    }
    Ok(PartialIsometry {
        matrix: u,
        initial: x.relation().ran().clone(),
        final_space: y.relation().ran().clone(),
    })
}
