//! Random generators for relations, operators, PSD relations and dominated
//! pairs. All generators take an explicit RNG so runs are reproducible.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{op_norm, orthonormalize, Matrix, Subspace, Tol};
use crate::relation::{compose_matrix, LinearRelation, PsdRelation};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `k` orthonormal columns in `R^n`, Haar-distributed up to signs.
pub fn orthonormal_columns<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Matrix {
    assert!(k <= n, "cannot fit {k} orthonormal columns in R^{n}");
    if k == 0 {
        return Matrix::zeros(n, 0);
    }
    gaussian_matrix(rng, n, k)
        .qr()
        .q()
        .columns(0, k)
        .clone_owned()
}

pub fn random_subspace<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> Subspace {
    orthonormalize(&orthonormal_columns(rng, n, dim), &Tol::default())
}

/// Relation with graph dimension uniform in `0..=dim_h + dim_k` and
/// standard normal generators.
pub fn gaussian_relation<R: Rng + ?Sized>(
    rng: &mut R,
    dim_h: usize,
    dim_k: usize,
    tol: &Tol,
) -> LinearRelation {
    let d = rng.random_range(0..=dim_h + dim_k);
    let gens = gaussian_matrix(rng, dim_h + dim_k, d);
    LinearRelation::from_graph(dim_h, dim_k, &gens, tol).expect("row count matches")
}

/// Singular value drawn from `{0} ∪ [0.3, 3]`, zero with probability 1/4.
fn well_conditioned_value<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random_bool(0.25) {
        0.0
    } else {
        rng.random_range(0.3..=3.0)
    }
}

/// Relation with well-separated spectral data: domain dimension uniform in
/// `0..=dim_h`, multivalued dimension uniform in `0..=dim_k`, and regular
/// singular values in `{0} ∪ [0.3, 3]`.
pub fn well_conditioned_relation<R: Rng + ?Sized>(
    rng: &mut R,
    dim_h: usize,
    dim_k: usize,
    tol: &Tol,
) -> LinearRelation {
    let m = rng.random_range(0..=dim_k);
    relation_with_mul(rng, dim_h, dim_k, m, tol)
}

/// Well-conditioned operator (multivalued part zero).
pub fn well_conditioned_operator<R: Rng + ?Sized>(
    rng: &mut R,
    dim_h: usize,
    dim_k: usize,
    tol: &Tol,
) -> LinearRelation {
    relation_with_mul(rng, dim_h, dim_k, 0, tol)
}

fn relation_with_mul<R: Rng + ?Sized>(
    rng: &mut R,
    dim_h: usize,
    dim_k: usize,
    mul_dim: usize,
    tol: &Tol,
) -> LinearRelation {
    let d = rng.random_range(0..=dim_h);
    let v = orthonormal_columns(rng, dim_h, d);
    let k_basis = orthonormal_columns(rng, dim_k, dim_k);
    let mul = Subspace::from_orthonormal(k_basis.columns(0, mul_dim).clone_owned());
    let free = dim_k - mul_dim;
    let r = d.min(free);
    let mut action = Matrix::zeros(dim_k, dim_h);
    for i in 0..r {
        let s = well_conditioned_value(rng);
        action += k_basis.column(mul_dim + i) * v.column(i).transpose() * s;
    }
    let dom = Subspace::from_orthonormal(v);
    LinearRelation::from_parts(&dom, &action, &mul, tol).expect("dimensions agree")
}

/// Everywhere-defined matrix with singular values in `{0} ∪ [0.3, 3]`.
pub fn well_conditioned_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let r = rows.min(cols);
    let u = orthonormal_columns(rng, rows, r);
    let v = orthonormal_columns(rng, cols, r);
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..r {
        m += u.column(i) * v.column(i).transpose() * well_conditioned_value(rng);
    }
    m
}

/// Nonnegative selfadjoint relation on `R^n`: domain dimension in
/// `1..=n` (or exactly `n` when `operator` is set), eigenvalues in
/// `{0} ∪ [0.2, 4]` with at least one zero when `with_kernel` is set.
pub fn random_psd<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    operator: bool,
    with_kernel: bool,
    tol: &Tol,
) -> PsdRelation {
    let d = if operator { n } else { rng.random_range(1..=n) };
    let basis = orthonormal_columns(rng, n, d);
    let mut vals: Vec<f64> = (0..d)
        .map(|_| {
            if rng.random_bool(0.25) {
                0.0
            } else {
                rng.random_range(0.2..=4.0)
            }
        })
        .collect();
    if with_kernel && d > 0 {
        let i = rng.random_range(0..d);
        vals[i] = 0.0;
        if vals.iter().all(|&v| v == 0.0) && d > 1 {
            let j = (i + 1) % d;
            vals[j] = rng.random_range(0.2..=4.0);
        }
    }
    PsdRelation::from_eigen(&basis, &vals, tol).expect("orthonormal eigenbasis")
}

/// Random contraction `R^cols → R^rows` with norm in `[1/2, 1]`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let g = gaussian_matrix(rng, rows, cols);
    let norm = op_norm(&g);
    if norm == 0.0 {
        return g;
    }
    let shrink: f64 = rng.random_range(1.0..2.0);
    g / (norm * shrink)
}

/// Pair `(A, B)` with `A ≺_c B` by construction: `B` Gaussian, `A` the span
/// of `C₀ B` for a random contraction `C₀`, optionally enlarged by extra
/// graph vectors.
pub fn dominated_pair<R: Rng + ?Sized>(
    rng: &mut R,
    dim_h: usize,
    dim_k: usize,
    tol: &Tol,
) -> (LinearRelation, LinearRelation) {
    let b = gaussian_relation(rng, dim_h, dim_k, tol);
    let c0 = random_contraction(rng, dim_k, dim_k);
    let core = compose_matrix(&c0, &b).expect("square contraction");
    let extra = rng.random_range(0..=1usize);
    let a = if extra == 0 {
        core
    } else {
        let gens = crate::linalg::hcat(
            core.graph().basis(),
            &gaussian_matrix(rng, dim_h + dim_k, extra),
        );
        LinearRelation::from_graph(dim_h, dim_k, &gens, tol).expect("row count matches")
    };
    (a, b)
}

/// Explicit nondecreasing sequence `T_1 ≺_c ... ≺_c T_len` of operators on a
/// common domain, built as `T_i = D_i V` with diagonal `D_i` increasing
/// entrywise.
pub fn increasing_operator_terms<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    len: usize,
    tol: &Tol,
) -> Vec<LinearRelation> {
    let v = orthonormal_columns(rng, n, n);
    let mut diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let d = Matrix::from_diagonal(&crate::linalg::Vector::from_vec(diag.clone()));
        out.push(LinearRelation::from_matrix(&(d * v.transpose()), tol));
        for x in diag.iter_mut() {
            *x += rng.random_range(0.0..=0.5);
        }
    }
    out
}
