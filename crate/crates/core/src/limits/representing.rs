use crate::domination::{link_partial_isometry, PartialIsometry};
use crate::error::{RelError, Result};
use crate::linalg::{
    checked_psd_eigen, column_space, null_space, orthonormalize, pinv_with_cut, psd_sqrt,
    sym_eigen, symmetrize, Matrix, Subspace, Tol,
};
use crate::relation::{operator_on_domain, OperatorRelation};

/// A semi-inner product on the span of finitely many vectors, given by the
/// Gram matrix of the generators.
#[derive(Debug, Clone)]
pub struct GramSpec {
    pub generators: Matrix,
    pub gram: Matrix,
}

impl GramSpec {
    pub fn new(generators: Matrix, gram: Matrix, tol: &Tol) -> Result<Self> {
        let m = generators.ncols();
        if gram.shape() != (m, m) {
            return Err(RelError::DimensionMismatch(format!(
                "{m} generators but a {}x{} Gram matrix",
                gram.nrows(),
                gram.ncols()
            )));
        }
        checked_psd_eigen(&gram, tol)?;
        Ok(GramSpec { generators, gram })
    }

    pub fn ambient_dim(&self) -> usize {
        self.generators.nrows()
    }
}

/// Flips each column so that its first entry of magnitude above `1e-8`
/// is positive.
pub(crate) fn canonical_signs(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        if let Some(x) = col.iter().find(|x| x.abs() > 1e-8) {
            if *x < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Operator `T` with `(Tφ_i, Tφ_j) = G_ij` on the span of the generators,
/// together with the subspace of neutral elements (seminorm zero).
///
/// The codomain is `R^r` with `r` the rank of the form. Coordinates follow
/// the eigenvectors of the form in decreasing eigenvalue order, each with
/// its first nonzero entry positive.
pub fn representing_map(spec: &GramSpec, tol: &Tol) -> Result<(OperatorRelation, Subspace)> {
    let n = spec.ambient_dim();
    let dom = orthonormalize(&spec.generators, tol);
    let q = dom.basis();
    let w = q.transpose() * &spec.generators;
    let g = &spec.gram;
    let scale = g.amax().max(1.0);

    let (_, s, _) = crate::linalg::svd_sorted(&w);
    let cut = tol.rank_cut(s.first().copied().unwrap_or(0.0));
    let kernel = null_space(&w, cut);
    if kernel.ncols() > 0 {
        let leak = (g * &kernel).amax();
        if leak > tol.psd_tol * scale {
            return Err(RelError::InconsistentGram(leak));
        }
    }

    let w_pinv = pinv_with_cut(&w, cut);
    let form = symmetrize(&(w_pinv.transpose() * g * &w_pinv));
    let (vals, vecs) = sym_eigen(&form);
    let rcut = tol.rank_cut(vals.first().copied().unwrap_or(0.0));
    let rank = vals.iter().take_while(|&&v| v >= rcut && v > 0.0).count();

    let mut directions = q * &vecs;
    canonical_signs(&mut directions);
    let mut action = Matrix::zeros(rank, n);
    for (i, v) in vals.iter().take(rank).enumerate() {
        let row = directions.column(i).transpose() * v.sqrt();
        action.row_mut(i).copy_from(&row);
    }
    let neutral =
        Subspace::from_orthonormal(directions.columns(rank, dom.dim() - rank).clone_owned());
    let t = operator_on_domain(&action, &dom, tol)?;
    Ok((t, neutral))
}

/// Partial isometry `V` with `T2 = V T`, for two representing maps of the
/// same semi-inner product.
pub fn connect_maps(
    t: &OperatorRelation,
    t2: &OperatorRelation,
    tol: &Tol,
) -> Result<PartialIsometry> {
    link_partial_isometry(t, t2, tol)
}

/// For a PSD contraction `A`, the operator on `ran A^{1/2}` sending
/// `A^{1/2} h` to the projection of `h` onto `ran A^{1/2}`.
pub fn range_space_map(a: &Matrix, tol: &Tol) -> Result<OperatorRelation> {
    let (vals, _) = checked_psd_eigen(a, tol)?;
    if let Some(&top) = vals.first() {
        if top > 1.0 + tol.psd_tol {
            return Err(RelError::InvalidInput(format!(
                "range-space map needs a contraction (largest eigenvalue {top})"
            )));
        }
    }
    let root = psd_sqrt(a, tol)?;
    let cut = tol.rank_cut(vals.first().copied().unwrap_or(0.0).sqrt());
    let dom = Subspace::from_orthonormal(column_space(&root, cut));
    operator_on_domain(&pinv_with_cut(&root, cut), &dom, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;

    fn tol() -> Tol {
        Tol::default()
    }

    fn mat(r: usize, c: usize, d: &[f64]) -> Matrix {
        Matrix::from_row_slice(r, c, d)
    }

    fn diag(d: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_row_slice(d))
    }

    fn induced_gram(t: &OperatorRelation, gens: &Matrix) -> Matrix {
        let img = t.action() * gens;
        img.transpose() * img
    }

    #[test]
    fn diagonal_gram() {
        let spec = GramSpec::new(Matrix::identity(2, 2), diag(&[1.0, 0.0]), &tol()).unwrap();
        let (t, neutral) = representing_map(&spec, &tol()).unwrap();
        assert_eq!(t.dim_k(), 1);
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let e2 = Vector::from_vec(vec![0.0, 1.0]);
        assert!((t.apply(&e1).norm() - 1.0).abs() < 1e-12);
        assert_eq!(t.apply(&e2).norm(), 0.0);
        assert!(neutral.equals(&orthonormalize(&mat(2, 1, &[0.0, 1.0]), &tol()), &tol()));
    }

    #[test]
    fn dependent_generators() {
        let gens = mat(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let spec = GramSpec::new(gens.clone(), mat(2, 2, &[1.0, 1.0, 1.0, 1.0]), &tol()).unwrap();
        let (t, neutral) = representing_map(&spec, &tol()).unwrap();
        assert_eq!(t.domain().dim(), 1);
        assert_eq!(neutral.dim(), 0);
        assert!((induced_gram(&t, &gens) - &spec.gram).amax() < 1e-8);

        let bad = GramSpec::new(gens, diag(&[1.0, 2.0]), &tol()).unwrap();
        assert!(matches!(
            representing_map(&bad, &tol()),
            Err(RelError::InconsistentGram(_))
        ));
    }

    #[test]
    fn two_maps_are_linked() {
        let gens = mat(3, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 2.0]);
        let gram = mat(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let spec = GramSpec::new(gens.clone(), gram, &tol()).unwrap();
        let (t, _) = representing_map(&spec, &tol()).unwrap();
        let c = std::f64::consts::FRAC_PI_3.cos();
        let s = std::f64::consts::FRAC_PI_3.sin();
        let rot = mat(3, 2, &[c, -s, s, c, 0.0, 0.0]);
        let t2 = operator_on_domain(&(&rot * t.action()), t.domain(), &tol()).unwrap();
        let v = connect_maps(&t, &t2, &tol()).unwrap();
        assert!((&v.matrix * t.action() - t2.action()).amax() < 1e-10);
        assert!(v.initial_residual() < 1e-7 && v.final_residual() < 1e-7);
    }

    #[test]
    fn range_space_examples() {
        let id = range_space_map(&Matrix::identity(2, 2), &tol()).unwrap();
        assert!((id.action() - Matrix::identity(2, 2)).amax() < 1e-12);

        let m = range_space_map(&diag(&[1.0, 0.25]), &tol()).unwrap();
        assert!((m.action() - diag(&[1.0, 2.0])).amax() < 1e-12);

        let p = range_space_map(&diag(&[1.0, 0.0]), &tol()).unwrap();
        assert_eq!(p.domain().dim(), 1);
        assert!((p.action() - diag(&[1.0, 0.0])).amax() < 1e-12);

        assert!(range_space_map(&diag(&[2.0, 0.0]), &tol()).is_err());
    }
}
