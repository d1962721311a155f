//! Dense real matrix and subspace primitives.
//!
//! Every rank decision in the crate goes through [`Tol`]. Subspaces are kept
//! as orthonormal bases and compared through their orthogonal projectors, so
//! two different bases of the same subspace are always equal.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{RelError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical tolerance policy shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tol {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Eigenvalue floor for nonnegativity tests.
    pub psd_tol: f64,
    /// Frobenius distance between projectors below which subspaces are equal.
    pub sub_eq_tol: f64,
    /// Frobenius threshold for convergence of resolvent iterates.
    pub conv_eps: f64,
    /// Resolvent eigenvalues within this distance of 0 or 1 are snapped.
    pub snap_tol: f64,
    /// Magnitude treated as divergent.
    pub blowup_cap: f64,
    /// Cap on the doubling schedule n = 1, 2, 4, ...
    pub n_max_doublings: u32,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            rank_rel: 1e-9,
            psd_tol: 1e-8,
            sub_eq_tol: 1e-7,
            conv_eps: 1e-8,
            snap_tol: 1e-6,
            blowup_cap: 1e12,
            n_max_doublings: 40,
        }
    }
}

impl Tol {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.rank_rel,
            self.psd_tol,
            self.sub_eq_tol,
            self.conv_eps,
            self.snap_tol,
            self.blowup_cap,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.n_max_doublings == 0 {
            return Err(RelError::InvalidInput(
                "all tolerance fields must be strictly positive".into(),
            ));
        }
        if !(self.rank_rel < self.sub_eq_tol && self.sub_eq_tol < 1.0) {
            return Err(RelError::InvalidInput(
                "tolerances must satisfy rank_rel < sub_eq_tol < 1".into(),
            ));
        }
        if !(self.snap_tol < 1.0 && 1.0 < self.blowup_cap) {
            return Err(RelError::InvalidInput(
                "tolerances must satisfy snap_tol < 1 < blowup_cap".into(),
            ));
        }
        if self.n_max_doublings > 62 {
            return Err(RelError::InvalidInput(
                "n_max_doublings must be at most 62".into(),
            ));
        }
        Ok(())
    }

    /// Absolute singular-value cutoff for a matrix whose largest singular
    /// value is `largest`. The floor at 1 keeps pure round-off from being
    /// promoted to rank.
    pub fn rank_cut(&self, largest: f64) -> f64 {
        self.rank_rel * largest.max(1.0)
    }
}

/// A linear subspace of a finite-dimensional real Hilbert space, stored as
/// an orthonormal basis (columns).
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: Matrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps a basis the caller guarantees to be orthonormal.
    pub(crate) fn from_orthonormal(basis: Matrix) -> Self {
        Subspace { basis }
    }

    /// Checks orthonormality within `10 * rank_rel` and wraps the basis.
    pub fn from_basis(basis: Matrix, tol: &Tol) -> Result<Self> {
        let gram = basis.transpose() * &basis;
        let eye = Matrix::identity(gram.nrows(), gram.ncols());
        let dev = (gram - eye).amax();
        if dev > 10.0 * tol.rank_rel {
            return Err(RelError::InvalidInput(format!(
                "basis columns are not orthonormal (deviation {dev:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    /// Frobenius distance between the orthogonal projectors.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.ambient_dim() != other.ambient_dim() {
            return f64::INFINITY;
        }
        (self.projector() - other.projector()).norm()
    }

    pub fn equals(&self, other: &Subspace, tol: &Tol) -> bool {
        self.distance(other) < tol.sub_eq_tol
    }

    pub fn project(&self, v: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * v)
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &Vector) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }
}

impl PartialEq for Subspace {
    /// Exact projector comparison at the default subspace tolerance.
    fn eq(&self, other: &Self) -> bool {
        self.equals(other, &Tol::default())
    }
}

// ---------------------------------------------------------------------------
// Decompositions
// ---------------------------------------------------------------------------

fn to_faer(m: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD through faer; `None` when the iteration does not converge.
fn faer_svd(m: &Matrix) -> Option<(Matrix, Vec<f64>, Matrix)> {
    let svd = to_faer(m).thin_svd().ok()?;
    let s = svd.S().column_vector().iter().copied().collect();
    Some((from_faer(svd.U()), s, from_faer(svd.V()).transpose()))
}

/// Thin SVD with singular values sorted in decreasing order.
pub(crate) fn svd_sorted(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return (Matrix::zeros(r, 0), Vec::new(), Matrix::zeros(0, c));
    }
    let Some((u, s, vt)) = faer_svd(m) else {
        let svd = m.clone().svd(true, true);
        return sort_svd(
            svd.u.expect("u requested"),
            svd.singular_values.as_slice().to_vec(),
            svd.v_t.expect("v_t requested"),
        );
    };
    sort_svd(u, s, vt)
}

fn sort_svd(u: Matrix, s: Vec<f64>, vt: Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let u_sorted = u.select_columns(order.iter());
    let vt_sorted = vt.select_rows(order.iter());
    let s_sorted = order.iter().map(|&i| s[i]).collect();
    (u_sorted, s_sorted, vt_sorted)
}

/// SVD with a full set of right singular vectors: returns `(u, s, v)` where
/// `v` is `ncols x ncols` orthogonal, `s` has length `ncols` (zeros appended
/// past the rank) and `u` is `nrows x ncols` with the columns belonging to
/// zero singular values set to zero. Singular values at or below `cut` are
/// set to exactly zero.
pub(crate) fn svd_full_right(m: &Matrix, cut: f64) -> (Matrix, Vec<f64>, Matrix) {
    let (r, c) = m.shape();
    if c == 0 {
        return (Matrix::zeros(r, 0), Vec::new(), Matrix::zeros(0, 0));
    }
    // Pad with zero rows so the thin SVD carries every right singular vector.
    let padded = if r < c {
        let mut p = Matrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let (u, mut s, vt) = svd_sorted(&padded);
    let mut u = u.rows(0, r).clone_owned();
    for (i, si) in s.iter_mut().enumerate() {
        if *si <= cut {
            *si = 0.0;
            u.column_mut(i).fill(0.0);
        }
    }
    (u, s, vt.transpose())
}

/// Symmetric eigendecomposition with eigenvalues sorted in decreasing order.
pub(crate) fn sym_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let sym = symmetrize(m);
    let (vals, vecs): (Vec<f64>, Matrix) = match to_faer(&sym).self_adjoint_eigen(faer::Side::Lower)
    {
        Ok(eig) => (
            eig.S().column_vector().iter().copied().collect(),
            from_faer(eig.U()),
        ),
        Err(_) => {
            let eig = SymmetricEigen::new(sym);
            (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[b]
            .partial_cmp(&vals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    (
        order.iter().map(|&i| vals[i]).collect(),
        vecs.select_columns(order.iter()),
    )
}

pub(crate) fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Orthonormal basis of the column space, keeping singular values `>= cut`.
pub(crate) fn column_space(m: &Matrix, cut: f64) -> Matrix {
    let (u, s, _) = svd_sorted(m);
    let rank = s.iter().take_while(|&&v| v >= cut && v > 0.0).count();
    u.columns(0, rank).clone_owned()
}

/// Orthonormal basis of the null space, with the same rank decision as
/// [`column_space`] applied to the rows.
pub(crate) fn null_space(m: &Matrix, cut: f64) -> Matrix {
    let row_space = column_space(&m.transpose(), cut);
    complement(&Subspace::from_orthonormal(row_space)).basis
}

/// Pseudoinverse with an absolute singular-value cutoff.
pub(crate) fn pinv_with_cut(m: &Matrix, cut: f64) -> Matrix {
    let (r, c) = m.shape();
    let (u, s, vt) = svd_sorted(m);
    let mut out = Matrix::zeros(c, r);
    for (i, &si) in s.iter().enumerate() {
        if si >= cut && si > 0.0 {
            out += vt.row(i).transpose() * u.column(i).transpose() / si;
        }
    }
    out
}

pub(crate) fn hcat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.nrows(), b.nrows(), "hcat row mismatch");
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub(crate) fn vcat(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.ncols(), b.ncols(), "vcat column mismatch");
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub(crate) fn block_diag(blocks: &[Matrix]) -> Matrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Spectral norm.
pub(crate) fn op_norm(m: &Matrix) -> f64 {
    svd_sorted(m).1.first().copied().unwrap_or(0.0)
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Orthonormal basis of the span of the columns of `vectors`.
///
/// Rank is decided by singular values `>= rank_rel * max(largest, 1)`.
pub fn orthonormalize(vectors: &Matrix, tol: &Tol) -> Subspace {
    let (u, s, _) = svd_sorted(vectors);
    let cut = tol.rank_cut(s.first().copied().unwrap_or(0.0));
    let rank = s.iter().take_while(|&&v| v >= cut && v > 0.0).count();
    Subspace::from_orthonormal(u.columns(0, rank).clone_owned())
}

/// Orthogonal complement within the ambient space.
pub fn complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let k = s.dim();
    if k == 0 {
        return Subspace::full(n);
    }
    if k >= n {
        return Subspace::zero(n);
    }
    let residual = Matrix::identity(n, n) - s.projector();
    let (_, vecs) = sym_eigen(&residual);
    Subspace::from_orthonormal(vecs.columns(0, n - k).clone_owned())
}

fn check_same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(RelError::DimensionMismatch(format!(
            "subspaces live in R^{} and R^{}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}

pub fn sum(a: &Subspace, b: &Subspace, tol: &Tol) -> Result<Subspace> {
    check_same_ambient(a, b)?;
    Ok(orthonormalize(&hcat(a.basis(), b.basis()), tol))
}

pub fn intersect(a: &Subspace, b: &Subspace, tol: &Tol) -> Result<Subspace> {
    check_same_ambient(a, b)?;
    Ok(complement(&sum(&complement(a), &complement(b), tol)?))
}

/// True iff every basis vector of `inner` lies in `outer` up to `sub_eq_tol`.
pub fn contains(outer: &Subspace, inner: &Subspace, tol: &Tol) -> Result<bool> {
    check_same_ambient(outer, inner)?;
    Ok(containment_residual(outer, inner) < tol.sub_eq_tol)
}

/// Largest residual of a basis vector of `inner` after projection onto `outer`.
pub(crate) fn containment_residual(outer: &Subspace, inner: &Subspace) -> f64 {
    let proj = outer.projector();
    let res = inner.basis() - &proj * inner.basis();
    res.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Moore–Penrose pseudoinverse, rank cut at `rank_rel` times the largest
/// singular value.
pub fn pseudoinverse(m: &Matrix, tol: &Tol) -> Matrix {
    let (_, s, _) = svd_sorted(m);
    let largest = s.first().copied().unwrap_or(0.0);
    pinv_with_cut(m, tol.rank_rel * largest)
}

/// Nonnegative square root of a symmetric positive semidefinite matrix.
pub fn psd_sqrt(m: &Matrix, tol: &Tol) -> Result<Matrix> {
    let (vals, vecs) = checked_psd_eigen(m, tol)?;
    let roots = Vector::from_iterator(vals.len(), vals.iter().map(|v| v.sqrt()));
    Ok(&vecs * Matrix::from_diagonal(&roots) * vecs.transpose())
}

/// Eigendecomposition of a symmetric PSD matrix. Eigenvalues below the rank
/// cutoff, including slightly negative ones, are set to zero.
pub(crate) fn checked_psd_eigen(m: &Matrix, tol: &Tol) -> Result<(Vec<f64>, Matrix)> {
    if !m.is_square() {
        return Err(RelError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > 10.0 * tol.rank_rel * scale {
        return Err(RelError::InvalidInput(format!(
            "matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    let (mut vals, vecs) = sym_eigen(m);
    let floor = -tol.psd_tol * scale;
    let cut = tol.rank_cut(vals.first().copied().unwrap_or(0.0));
    for v in vals.iter_mut() {
        if *v < floor {
            return Err(RelError::NotNonnegative(*v));
        }
        if *v < cut {
            *v = 0.0;
        }
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn dependent_columns_give_a_line() {
        let tol = Tol::default();
        let s = orthonormalize(&mat(2, 2, &[1.0, 2.0, 0.0, 0.0]), &tol);
        assert_eq!(s.dim(), 1);
        let expected = Subspace::from_orthonormal(mat(2, 1, &[1.0, 0.0]));
        assert!(s.equals(&expected, &tol));
    }

    #[test]
    fn empty_input_is_zero_subspace() {
        let s = orthonormalize(&Matrix::zeros(3, 0), &Tol::default());
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient_dim(), 3);
    }

    #[test]
    fn independent_columns_span_the_plane() {
        let s = orthonormalize(&mat(2, 2, &[1.0, 1.0, 1.0, -1.0]), &Tol::default());
        let p = s.projector();
        assert_abs_diff_eq!(p, Matrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn complement_examples() {
        let tol = Tol::default();
        let e1 = Subspace::from_orthonormal(mat(2, 1, &[1.0, 0.0]));
        let c = complement(&e1);
        assert!(c.equals(&Subspace::from_orthonormal(mat(2, 1, &[0.0, 1.0])), &tol));

        assert_eq!(complement(&Subspace::zero(3)).dim(), 3);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = Subspace::from_orthonormal(mat(2, 1, &[h, h]));
        let anti = complement(&diag);
        let expected = Subspace::from_orthonormal(mat(2, 1, &[h, -h]));
        assert!(anti.equals(&expected, &tol));
        let total = diag.projector() + anti.projector();
        assert!((total - Matrix::identity(2, 2)).norm() < tol.sub_eq_tol);
        assert!((diag.basis().transpose() * anti.basis()).amax() < 1e-12);
    }

    #[test]
    fn intersect_sum_contains() {
        let tol = Tol::default();
        let e1 = Subspace::from_orthonormal(mat(2, 1, &[1.0, 0.0]));
        let e2 = Subspace::from_orthonormal(mat(2, 1, &[0.0, 1.0]));
        assert_eq!(intersect(&e1, &e2, &tol).unwrap().dim(), 0);
        let d = orthonormalize(&mat(2, 1, &[1.0, 1.0]), &tol);
        assert_eq!(sum(&e1, &d, &tol).unwrap().dim(), 2);
        let any = orthonormalize(&mat(3, 2, &[1.0, 0.0, 2.0, 1.0, 0.0, 3.0]), &tol);
        assert!(contains(&Subspace::full(3), &any, &tol).unwrap());
        assert!(sum(&e1, &Subspace::zero(3), &tol).is_err());
    }

    #[test]
    fn pseudoinverse_examples() {
        let tol = Tol::default();
        let p = pseudoinverse(&mat(2, 2, &[2.0, 0.0, 0.0, 0.0]), &tol);
        assert_abs_diff_eq!(p, mat(2, 2, &[0.5, 0.0, 0.0, 0.0]), epsilon = 1e-14);

        let z = pseudoinverse(&Matrix::zeros(2, 3), &tol);
        assert_eq!(z.shape(), (3, 2));
        assert_eq!(z.amax(), 0.0);

        let m = mat(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        let mp = pseudoinverse(&m, &tol);
        assert_abs_diff_eq!(mp, mat(2, 2, &[0.5, 0.0, 0.5, 0.0]), epsilon = 1e-14);
        // Penrose identities.
        let lim = 10.0 * tol.rank_rel;
        assert!((&m * &mp * &m - &m).amax() < lim);
        assert!((&mp * &m * &mp - &mp).amax() < lim);
        let mmp = &m * &mp;
        let mpm = &mp * &m;
        assert!((&mmp - mmp.transpose()).amax() < lim);
        assert!((&mpm - mpm.transpose()).amax() < lim);
    }

    #[test]
    fn psd_sqrt_examples() {
        let tol = Tol::default();
        let r = psd_sqrt(&mat(2, 2, &[4.0, 0.0, 0.0, 9.0]), &tol).unwrap();
        assert_abs_diff_eq!(r, mat(2, 2, &[2.0, 0.0, 0.0, 3.0]), epsilon = 1e-12);

        let z = psd_sqrt(&Matrix::zeros(2, 2), &tol).unwrap();
        assert_eq!(z.amax(), 0.0);

        let m = mat(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let s = psd_sqrt(&m, &tol).unwrap();
        assert!((&s * &s - &m).amax() < 10.0 * tol.psd_tol);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Vector::from_vec(vec![h, h]);
        let minus = Vector::from_vec(vec![h, -h]);
        assert_abs_diff_eq!(&s * &plus, &plus * 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(&s * &minus, minus.clone(), epsilon = 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative_and_asymmetric() {
        let tol = Tol::default();
        assert!(matches!(
            psd_sqrt(&mat(2, 2, &[1.0, 0.0, 0.0, -1.0]), &tol),
            Err(RelError::NotNonnegative(_))
        ));
        assert!(psd_sqrt(&mat(2, 2, &[1.0, 1.0, 0.0, 1.0]), &tol).is_err());
        // Round-off negativity is clamped.
        let ok = psd_sqrt(&mat(2, 2, &[1.0, 0.0, 0.0, -1e-12]), &tol).unwrap();
        assert!(ok[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn svd_full_right_pads_short_matrices() {
        let m = mat(1, 3, &[0.0, 3.0, 4.0]);
        let (u, s, v) = svd_full_right(&m, 1e-12);
        assert_eq!(v.shape(), (3, 3));
        assert_eq!(s.len(), 3);
        assert_abs_diff_eq!(s[0], 5.0, epsilon = 1e-12);
        assert_eq!(s[1], 0.0);
        assert_abs_diff_eq!(&v.transpose() * &v, Matrix::identity(3, 3), epsilon = 1e-12);
        let recon = &u * Matrix::from_diagonal(&Vector::from_vec(s)) * v.transpose();
        assert_abs_diff_eq!(recon, m, epsilon = 1e-12);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tol::default().validate().is_ok());
        let bad = Tol {
            sub_eq_tol: 1e-12,
            ..Tol::default()
        };
        assert!(bad.validate().is_err());
        let bad = Tol {
            snap_tol: 2.0,
            ..Tol::default()
        };
        assert!(bad.validate().is_err());
    }
}
