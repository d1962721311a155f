//! Nonnegative selfadjoint relations, their square roots and resolvents.

use crate::error::{RelError, Result};
use crate::linalg::{
    checked_psd_eigen, complement, sym_eigen, symmetrize, Matrix, Subspace, Tol, Vector,
};
use crate::relation::{adjoint, compose, LinearRelation, Parts};

/// A nonnegative selfadjoint relation on `R^n`, kept in eigen form:
/// an orthonormal eigenbasis of `dom` with eigenvalues `>= 0` in decreasing
/// order, and `mul = dom⊥`.
#[derive(Debug, Clone)]
pub struct PsdRelation {
    rel: LinearRelation,
    basis: Matrix,
    eigenvalues: Vec<f64>,
}

impl PsdRelation {
    /// Builds the relation with operator part `Σ λ_i v_i v_iᵀ` on
    /// `span{v_i}` and multivalued part the orthogonal complement.
    pub fn from_eigen(basis: &Matrix, eigenvalues: &[f64], tol: &Tol) -> Result<Self> {
        if basis.ncols() != eigenvalues.len() {
            return Err(RelError::DimensionMismatch(format!(
                "{} eigenvectors but {} eigenvalues",
                basis.ncols(),
                eigenvalues.len()
            )));
        }
        if let Some(&bad) = eigenvalues.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(RelError::NotNonnegative(bad));
        }
        let dom = Subspace::from_basis(basis.clone(), tol)?;
        let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let basis = dom.basis().select_columns(order.iter());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
        let mut left = basis.clone();
        for (i, &l) in eigenvalues.iter().enumerate() {
            if l == 0.0 {
                left.column_mut(i).fill(0.0);
            }
        }
        let mul = complement(&dom);
        let parts = Parts::assemble(basis.clone(), eigenvalues.clone(), left, mul, tol);
        Ok(PsdRelation {
            rel: LinearRelation::with_parts(parts, tol),
            basis,
            eigenvalues,
        })
    }

    /// Everywhere-defined relation given by a symmetric PSD matrix.
    pub fn from_matrix(m: &Matrix, tol: &Tol) -> Result<Self> {
        let (vals, vecs) = checked_psd_eigen(m, tol)?;
        let cut = tol.rank_rel * vals.first().copied().unwrap_or(0.0).max(1.0);
        let vals: Vec<f64> = vals
            .iter()
            .map(|&v| if v < cut { 0.0 } else { v })
            .collect();
        Self::from_eigen(&vecs, &vals, tol)
    }

    /// Operator part `op` on `dom`, multivalued part `dom⊥`.
    pub fn from_operator_part(dom: &Subspace, op: &Matrix, tol: &Tol) -> Result<Self> {
        let q = dom.basis();
        let restricted = q.transpose() * op * q;
        let (vals, w) = checked_psd_eigen(&restricted, tol)?;
        let cut = tol.rank_rel * vals.first().copied().unwrap_or(0.0).max(1.0);
        let vals: Vec<f64> = vals
            .iter()
            .map(|&v| if v < cut { 0.0 } else { v })
            .collect();
        Self::from_eigen(&(q * w), &vals, tol)
    }

    /// Validates that `rel` is selfadjoint and nonnegative.
    pub fn from_relation(rel: &LinearRelation) -> Result<Self> {
        let tol = *rel.tol();
        if rel.dim_h() != rel.dim_k() {
            return Err(RelError::NotSelfadjoint(format!(
                "relation maps R^{} to R^{}",
                rel.dim_h(),
                rel.dim_k()
            )));
        }
        let expected_mul = complement(rel.dom());
        let gap = rel.mul().distance(&expected_mul);
        if gap >= tol.sub_eq_tol {
            return Err(RelError::NotSelfadjoint(format!(
                "multivalued part differs from dom⊥ by {gap:e}"
            )));
        }
        let q = rel.dom().basis();
        let a = q.transpose() * rel.regular_action() * q;
        let scale = a.amax().max(1.0);
        let asym = (&a - a.transpose()).amax();
        if asym > tol.sub_eq_tol * scale {
            return Err(RelError::NotSelfadjoint(format!(
                "operator part is not symmetric (asymmetry {asym:e})"
            )));
        }
        let (vals, w) = sym_eigen(&symmetrize(&a));
        let top = vals.first().copied().unwrap_or(0.0).max(1.0);
        if let Some(&neg) = vals.iter().find(|&&v| v < -tol.psd_tol * top) {
            return Err(RelError::NotNonnegative(neg));
        }
        let cut = tol.rank_rel * top;
        let vals: Vec<f64> = vals
            .iter()
            .map(|&v| if v < cut { 0.0 } else { v })
            .collect();
        Self::from_eigen(&(q * w), &vals, &tol)
    }

    pub fn relation(&self) -> &LinearRelation {
        &self.rel
    }

    pub fn dim(&self) -> usize {
        self.rel.dim_h()
    }

    pub fn tol(&self) -> &Tol {
        self.rel.tol()
    }

    pub fn dom(&self) -> &Subspace {
        self.rel.dom()
    }

    pub fn mul(&self) -> &Subspace {
        self.rel.mul()
    }

    pub fn ker(&self) -> &Subspace {
        self.rel.ker()
    }

    /// Orthonormal eigenbasis of `dom`, ordered by decreasing eigenvalue.
    pub fn eigenbasis(&self) -> &Matrix {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Operator part as an `n × n` matrix, zero on `mul`.
    pub fn op(&self) -> Matrix {
        self.spectral(|l| l)
    }

    /// `Λ^{1/2} Vᵀ`, a factor `F` of the operator part with `H_op = FᵀF`.
    pub fn root_factor(&self) -> Matrix {
        let mut f = self.basis.transpose();
        for (i, l) in self.eigenvalues.iter().enumerate() {
            f.row_mut(i).scale_mut(l.sqrt());
        }
        f
    }

    /// Operator part in the coordinates of [`Self::eigenbasis`].
    pub fn op_on_dom(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_vec(self.eigenvalues.clone()))
    }

    /// Quadratic form `(H_op φ, φ)`.
    pub fn form(&self, phi: &Vector) -> f64 {
        let c = self.basis.transpose() * phi;
        c.iter()
            .zip(&self.eigenvalues)
            .map(|(ci, l)| l * ci * ci)
            .sum()
    }

    pub(crate) fn spectral(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.dim();
        let mut out = Matrix::zeros(n, n);
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            let v = self.basis.column(i);
            out += v * v.transpose() * f(l);
        }
        out
    }

    /// `c · H` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(RelError::InvalidInput(format!(
                "PSD relations scale by positive factors only (got {c})"
            )));
        }
        let vals: Vec<f64> = self.eigenvalues.iter().map(|l| l * c).collect();
        Self::from_eigen(&self.basis, &vals, self.tol())
    }

    /// Orthogonal direct sum `H1 ⊕ H2`.
    pub fn direct_sum(&self, other: &PsdRelation) -> PsdRelation {
        let basis = crate::linalg::block_diag(&[self.basis.clone(), other.basis.clone()]);
        let vals: Vec<f64> = self
            .eigenvalues
            .iter()
            .chain(&other.eigenvalues)
            .copied()
            .collect();
        Self::from_eigen(&basis, &vals, self.tol()).expect("block eigenbases are orthonormal")
    }

    pub fn with_tol(&self, tol: &Tol) -> PsdRelation {
        PsdRelation {
            rel: self.rel.with_tol(tol),
            ..self.clone()
        }
    }

    pub fn equals(&self, other: &PsdRelation) -> bool {
        self.rel.equals(&other.rel)
    }
}

/// `T* T`, computed by relational composition of the adjoint after `T`.
///
/// The composed graph must match [`gram_relation`] within `sub_eq_tol`; the
/// returned eigen form is the structural one, so its rank follows the
/// singular values of `T` instead of their squares.
pub fn product_star(t: &LinearRelation) -> Result<PsdRelation> {
    let composed = compose(&adjoint(t), t)?;
    PsdRelation::from_relation(&composed).map_err(|e| {
        RelError::verification("product_star", format!("T*T failed validation: {e}"))
    })?;
    let gram = gram_relation(t);
    let gap = composed.distance(gram.relation());
    if gap >= t.tol().sub_eq_tol {
        return Err(RelError::verification(
            "product_star",
            format!("composed graph differs from the Gram form by {gap:e}"),
        ));
    }
    Ok(gram)
}

/// `T* T` assembled from the parts of `T`: domain `dom T`, operator part
/// `M_reg^T M_reg`, multivalued part `(dom T)⊥`.
pub fn gram_relation(t: &LinearRelation) -> PsdRelation {
    let p = t.parts();
    let vals: Vec<f64> = p.sigma.iter().map(|s| s * s).collect();
    PsdRelation::from_eigen(&p.right, &vals, t.tol()).expect("singular vectors are orthonormal")
}

pub fn psd_sqrt_relation(h: &PsdRelation) -> PsdRelation {
    let vals: Vec<f64> = h.eigenvalues.iter().map(|l| l.sqrt()).collect();
    PsdRelation::from_eigen(&h.basis, &vals, h.tol()).expect("eigenbasis is orthonormal")
}

/// `(H + I)^{-1}`: `(H_op + I)^{-1}` on `dom H`, zero on `mul H`.
pub fn resolvent(h: &PsdRelation) -> Matrix {
    h.spectral(|l| 1.0 / (1.0 + l))
}

/// Inverse of [`resolvent`]. Eigenvalues below `snap_tol` become `mul`,
/// eigenvalues above `1 - snap_tol` become `ker`.
pub fn relation_from_resolvent(r: &Matrix, tol: &Tol) -> Result<PsdRelation> {
    if !r.is_square() {
        return Err(RelError::DimensionMismatch(format!(
            "resolvent must be square, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    let asym = (r - r.transpose()).amax();
    if asym > 10.0 * tol.rank_rel * r.amax().max(1.0) {
        return Err(RelError::InvalidInput(format!(
            "resolvent is not symmetric (asymmetry {asym:e})"
        )));
    }
    let (vals, vecs) = sym_eigen(r);
    let mut cols = Vec::new();
    let mut lambdas = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v < -tol.psd_tol || v > 1.0 + tol.psd_tol {
            return Err(RelError::NotResolvent(v));
        }
        if v < tol.snap_tol {
            continue;
        }
        let v = if v > 1.0 - tol.snap_tol { 1.0 } else { v };
        cols.push(i);
        lambdas.push((1.0 - v) / v);
    }
    PsdRelation::from_eigen(&vecs.select_columns(cols.iter()), &lambdas, tol)
}

/// Zeroes every eigenvalue of the symmetric PSD matrix `a` that exceeds `n`.
/// Eigenvalues equal to `n` are kept.
pub fn spectral_truncation(a: &Matrix, n: f64, tol: &Tol) -> Result<Matrix> {
    if !(n.is_finite() && n > 0.0) {
        return Err(RelError::InvalidInput(format!(
            "truncation level must be positive (got {n})"
        )));
    }
    let (vals, vecs) = checked_psd_eigen(a, tol)?;
    let level = n * (1.0 + 1e-12);
    if vals.iter().all(|&l| l <= level) {
        return Ok(a.clone());
    }
    let mut out = Matrix::zeros(a.nrows(), a.ncols());
    for (i, &l) in vals.iter().enumerate() {
        if l <= level {
            let v = vecs.column(i);
            out += v * v.transpose() * l;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormalize;
    use crate::relation::{lebesgue_decompose, operator_on_domain};

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
    fn product_star_examples() {
        let m = mat(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        let h = product_star(&LinearRelation::from_matrix(&m, &tol())).unwrap();
        assert!((h.op() - m.transpose() * &m).amax() < 1e-9);
        assert_eq!(h.mul().dim(), 0);

        // Zero operator on D gives D × D⊥.
        let d = e(2, 0);
        let z = operator_on_domain(&Matrix::zeros(2, 2), &d, &tol()).unwrap();
        let h = product_star(z.relation()).unwrap();
        let expected = LinearRelation::product(&d, &complement(&d), &tol());
        assert!(h.relation().equals(&expected));

        // {(x, (x, t))}: only the regular part x ↦ (x, 0) contributes.
        let t =
            LinearRelation::from_graph(1, 2, &mat(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]), &tol())
                .unwrap();
        let h = product_star(&t).unwrap();
        assert!(h
            .relation()
            .equals(&LinearRelation::from_matrix(&mat(1, 1, &[1.0]), &tol())));
        let reg = lebesgue_decompose(&t).unwrap().regular;
        let a = reg.action();
        assert!((h.op() - a.transpose() * a).amax() < 1e-9);
    }

    #[test]
    fn sqrt_examples() {
        let h = PsdRelation::from_matrix(&diag(&[4.0, 9.0]), &tol()).unwrap();
        let s = psd_sqrt_relation(&h);
        assert!((s.op() - diag(&[2.0, 3.0])).amax() < 1e-12);

        let p = PsdRelation::from_relation(&LinearRelation::product(&e(2, 0), &e(2, 1), &tol()))
            .unwrap();
        assert!(psd_sqrt_relation(&p).equals(&p));

        // H = {(x e1, 2x e1 + t e2)}; its root squares back to H.
        let h = PsdRelation::from_eigen(&mat(2, 1, &[1.0, 0.0]), &[2.0], &tol()).unwrap();
        let r = psd_sqrt_relation(&h);
        let expected = LinearRelation::from_graph(
            2,
            2,
            &mat(4, 2, &[1.0, 0.0, 0.0, 0.0, 2f64.sqrt(), 0.0, 0.0, 1.0]),
            &tol(),
        )
        .unwrap();
        assert!(r.relation().equals(&expected));
        let sq = compose(r.relation(), r.relation()).unwrap();
        assert!(sq.equals(h.relation()));
    }

    #[test]
    fn resolvent_examples() {
        let h = PsdRelation::from_matrix(&diag(&[0.0, 1.0]), &tol()).unwrap();
        assert!((resolvent(&h) - diag(&[1.0, 0.5])).amax() < 1e-12);

        // H + I = {(x e1, x e1 + t e2)}; flipping the graph gives diag(1, 0).
        let p = PsdRelation::from_relation(&LinearRelation::product(&e(2, 0), &e(2, 1), &tol()))
            .unwrap();
        let h_plus_i = LinearRelation::from_graph(
            2,
            2,
            &mat(4, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]),
            &tol(),
        )
        .unwrap();
        let flipped = crate::linalg::vcat(&h_plus_i.k_block(), &h_plus_i.h_block());
        let inverse = LinearRelation::from_graph(2, 2, &flipped, &tol()).unwrap();
        assert!((resolvent(&p) - inverse.regular_action()).amax() < 1e-12);
        assert!((resolvent(&p) - diag(&[1.0, 0.0])).amax() < 1e-12);

        let z = PsdRelation::from_matrix(&Matrix::zeros(2, 2), &tol()).unwrap();
        assert!((resolvent(&z) - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn from_resolvent_examples() {
        let h = relation_from_resolvent(&Matrix::identity(2, 2), &tol()).unwrap();
        assert!(h
            .relation()
            .equals(&LinearRelation::from_matrix(&Matrix::zeros(2, 2), &tol())));

        let h = relation_from_resolvent(&Matrix::zeros(2, 2), &tol()).unwrap();
        assert_eq!(h.dom().dim(), 0);
        assert_eq!(h.mul().dim(), 2);

        let r = diag(&[1.0, 0.5, 0.0]);
        let h = relation_from_resolvent(&r, &tol()).unwrap();
        let expected = LinearRelation::from_graph(
            3,
            3,
            &mat(
                6,
                3,
                &[
                    1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
                    0.0, 1.0,
                ],
            ),
            &tol(),
        )
        .unwrap();
        assert!(h.relation().equals(&expected));
        assert!(h.ker().equals(&e(3, 0), &tol()));
        assert!((resolvent(&h) - r).amax() < 1e-12);

        assert!(matches!(
            relation_from_resolvent(&diag(&[1.5, 0.5]), &tol()),
            Err(RelError::NotResolvent(_))
        ));
    }

    #[test]
    fn truncation_examples() {
        let a = diag(&[1.0, 3.0]);
        assert!((spectral_truncation(&a, 2.0, &tol()).unwrap() - diag(&[1.0, 0.0])).amax() < 1e-14);
        assert_eq!(spectral_truncation(&a, 3.0, &tol()).unwrap(), a);
        let z = Matrix::zeros(3, 3);
        assert_eq!(spectral_truncation(&z, 0.5, &tol()).unwrap(), z);
        assert!(spectral_truncation(&a, 0.0, &tol()).is_err());
    }

    #[test]
    fn validation_rejects_non_selfadjoint() {
        let t = LinearRelation::from_matrix(&mat(2, 2, &[0.0, 1.0, 0.0, 0.0]), &tol());
        assert!(matches!(
            PsdRelation::from_relation(&t),
            Err(RelError::NotSelfadjoint(_))
        ));
        let neg = LinearRelation::from_matrix(&diag(&[1.0, -1.0]), &tol());
        assert!(matches!(
            PsdRelation::from_relation(&neg),
            Err(RelError::NotNonnegative(_))
        ));
        let span_e1 = orthonormalize(&mat(2, 1, &[1.0, 0.0]), &tol());
        let not_sa = LinearRelation::product(&span_e1, &span_e1, &tol());
        assert!(PsdRelation::from_relation(&not_sa).is_err());
    }
}
