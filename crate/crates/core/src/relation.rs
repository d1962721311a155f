//! Linear relations between finite-dimensional spaces.
//!
//! A relation `T` from `H = R^dim_h` to `K = R^dim_k` is a subspace of
//! `H ⊕ K`. Its graph basis stacks the `H` coordinates above the `K`
//! coordinates. The parts `dom`, `ran`, `ker`, `mul` and the regular action
//! are derived once and cached.
//!
//! At finite dimension every relation is closed, so [`LinearRelation::closure`]
//! returns the relation unchanged.

use std::sync::OnceLock;

use crate::error::{RelError, Result};
use crate::linalg::{
    column_space, complement, hcat, null_space, orthonormalize, pinv_with_cut, svd_full_right,
    vcat, Matrix, Subspace, Tol, Vector,
};

/// Cached decomposition of a relation into its regular action and parts.
///
/// `right` is an orthonormal basis of `dom`, and `action * right[:, i] =
/// sigma[i] * left[:, i]`. Columns of `left` with `sigma == 0` are zero.
#[derive(Debug, Clone)]
pub(crate) struct Parts {
    pub(crate) right: Matrix,
    pub(crate) sigma: Vec<f64>,
    pub(crate) left: Matrix,
    pub(crate) dom: Subspace,
    pub(crate) mul: Subspace,
    pub(crate) ker: Subspace,
    pub(crate) ran: Subspace,
    pub(crate) action: Matrix,
}

impl Parts {
    pub(crate) fn assemble(
        right: Matrix,
        sigma: Vec<f64>,
        left: Matrix,
        mul: Subspace,
        tol: &Tol,
    ) -> Parts {
        let dim_h = right.nrows();
        let dim_k = left.nrows();
        let mut action = Matrix::zeros(dim_k, dim_h);
        let mut ker_cols = Vec::new();
        let mut ran_cols = Vec::new();
        for (i, &s) in sigma.iter().enumerate() {
            if s > 0.0 {
                action += left.column(i) * right.column(i).transpose() * s;
                ran_cols.push(i);
            } else {
                ker_cols.push(i);
            }
        }
        let ker = Subspace::from_orthonormal(right.select_columns(ker_cols.iter()));
        let ran_gen = hcat(&left.select_columns(ran_cols.iter()), mul.basis());
        let ran = orthonormalize(&ran_gen, tol);
        Parts {
            dom: Subspace::from_orthonormal(right.clone()),
            right,
            sigma,
            left,
            mul,
            ker,
            ran,
            action,
        }
    }

    /// Orthonormal graph basis: `(v_i, s_i u_i) / sqrt(1 + s_i^2)` for the
    /// domain directions followed by `(0, m_j)` for the multivalued part.
    fn graph_basis(&self) -> Matrix {
        let dim_h = self.right.nrows();
        let dim_k = self.left.nrows();
        let r = self.sigma.len();
        let m = self.mul.dim();
        let mut g = Matrix::zeros(dim_h + dim_k, r + m);
        for (i, &s) in self.sigma.iter().enumerate() {
            let w = 1.0 / (1.0 + s * s).sqrt();
            g.view_mut((0, i), (dim_h, 1))
                .copy_from(&(self.right.column(i) * w));
            if s > 0.0 {
                g.view_mut((dim_h, i), (dim_k, 1))
                    .copy_from(&(self.left.column(i) * (s * w)));
            }
        }
        g.view_mut((dim_h, r), (dim_k, m))
            .copy_from(self.mul.basis());
        g
    }
}

/// A linear relation from `R^dim_h` to `R^dim_k`.
#[derive(Debug, Clone)]
pub struct LinearRelation {
    dim_h: usize,
    dim_k: usize,
    graph: Subspace,
    tol: Tol,
    parts: OnceLock<Parts>,
}

impl LinearRelation {
    /// Relation whose graph is the span of the columns of `generators`.
    pub fn from_graph(dim_h: usize, dim_k: usize, generators: &Matrix, tol: &Tol) -> Result<Self> {
        if generators.nrows() != dim_h + dim_k {
            return Err(RelError::DimensionMismatch(format!(
                "graph generators have {} rows, expected {} + {}",
                generators.nrows(),
                dim_h,
                dim_k
            )));
        }
        Ok(LinearRelation {
            dim_h,
            dim_k,
            graph: orthonormalize(generators, tol),
            tol: *tol,
            parts: OnceLock::new(),
        })
    }

    pub(crate) fn with_parts(parts: Parts, tol: &Tol) -> Self {
        let graph = Subspace::from_orthonormal(parts.graph_basis());
        let rel = LinearRelation {
            dim_h: parts.right.nrows(),
            dim_k: parts.left.nrows(),
            graph,
            tol: *tol,
            parts: OnceLock::new(),
        };
        let _ = rel.parts.set(parts);
        rel
    }

    /// Builds `{ {f, M f + m} : f ∈ dom, m ∈ mul }`.
    ///
    /// `action` is first projected so that it vanishes on `dom⊥` and maps
    /// into `mul⊥`; only its restriction to `dom` modulo `mul` matters.
    pub fn from_parts(dom: &Subspace, action: &Matrix, mul: &Subspace, tol: &Tol) -> Result<Self> {
        let (dim_k, dim_h) = action.shape();
        if dom.ambient_dim() != dim_h || mul.ambient_dim() != dim_k {
            return Err(RelError::DimensionMismatch(format!(
                "action is {}x{} but dom lives in R^{} and mul in R^{}",
                dim_k,
                dim_h,
                dom.ambient_dim(),
                mul.ambient_dim()
            )));
        }
        let q = dom.basis();
        let mq = action * q - mul.projector() * action * q;
        let (_, s, _) = crate::linalg::svd_sorted(&mq);
        let cut = tol.rank_cut(s.first().copied().unwrap_or(0.0));
        let (u, sigma, v) = svd_full_right(&mq, cut);
        let right = q * v;
        Ok(Self::with_parts(
            Parts::assemble(right, sigma, u, mul.clone(), tol),
            tol,
        ))
    }

    /// Graph of `M` restricted to `dom`.
    pub fn from_operator(action: &Matrix, dom: &Subspace, tol: &Tol) -> Result<Self> {
        Self::from_parts(dom, action, &Subspace::zero(action.nrows()), tol)
    }

    /// Graph of an everywhere-defined matrix.
    pub fn from_matrix(m: &Matrix, tol: &Tol) -> Self {
        Self::from_operator(m, &Subspace::full(m.ncols()), tol)
            .expect("dimensions agree by construction")
    }

    /// The product relation `dom × ran`.
    pub fn product(dom: &Subspace, ran: &Subspace, tol: &Tol) -> Self {
        let action = Matrix::zeros(ran.ambient_dim(), dom.ambient_dim());
        Self::from_parts(dom, &action, ran, tol).expect("dimensions agree by construction")
    }

    pub fn identity(n: usize, tol: &Tol) -> Self {
        Self::from_matrix(&Matrix::identity(n, n), tol)
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn graph(&self) -> &Subspace {
        &self.graph
    }

    pub fn tol(&self) -> &Tol {
        &self.tol
    }

    /// Same relation with a different tolerance policy attached.
    pub fn with_tol(&self, tol: &Tol) -> Self {
        LinearRelation {
            tol: *tol,
            ..self.clone()
        }
    }

    pub(crate) fn parts(&self) -> &Parts {
        self.parts.get_or_init(|| self.compute_parts())
    }

    fn compute_parts(&self) -> Parts {
        let tol = &self.tol;
        let g = self.graph.basis();
        let gh = g.rows(0, self.dim_h).clone_owned();
        let gk = g.rows(self.dim_h, self.dim_k).clone_owned();
        // The graph basis is orthonormal, so every block has norm at most 1
        // and an absolute cutoff is also a relative one.
        let cut = tol.rank_rel;
        let dom_basis = column_space(&gh, cut);
        let pure_k = null_space(&gh, cut);
        let mul = orthonormalize(&(&gk * &pure_k), tol);
        let lift = &gk * pinv_with_cut(&gh, cut);
        let action = &lift - mul.projector() * &lift;
        let mq = &action * &dom_basis;
        let (_, s, _) = crate::linalg::svd_sorted(&mq);
        let scut = tol.rank_cut(s.first().copied().unwrap_or(0.0));
        let (u, sigma, v) = svd_full_right(&mq, scut);
        Parts::assemble(&dom_basis * v, sigma, u, mul, tol)
    }

    pub fn dom(&self) -> &Subspace {
        &self.parts().dom
    }

    pub fn ran(&self) -> &Subspace {
        &self.parts().ran
    }

    pub fn ker(&self) -> &Subspace {
        &self.parts().ker
    }

    pub fn mul(&self) -> &Subspace {
        &self.parts().mul
    }

    /// Matrix of the regular part: zero on `dom⊥`, range orthogonal to `mul`.
    pub fn regular_action(&self) -> &Matrix {
        &self.parts().action
    }

    /// Singular values of the regular part on `dom`, in decreasing order.
    pub fn singular_values(&self) -> &[f64] {
        &self.parts().sigma
    }

    /// Gram matrix `M^T M` of the regular part, as an `H × H` matrix.
    pub fn gram(&self) -> Matrix {
        let a = self.regular_action();
        a.transpose() * a
    }

    pub fn is_operator(&self) -> bool {
        self.mul().is_zero()
    }

    /// At finite dimension every graph is closed.
    pub fn closure(&self) -> Self {
        self.clone()
    }

    /// Graph equality within `sub_eq_tol`.
    pub fn equals(&self, other: &LinearRelation) -> bool {
        self.dim_h == other.dim_h
            && self.dim_k == other.dim_k
            && self.graph.equals(&other.graph, &self.tol)
    }

    /// Graph inclusion `other ⊆ self`, measured by the worst basis residual.
    pub fn contains(&self, other: &LinearRelation) -> bool {
        self.dim_h == other.dim_h
            && self.dim_k == other.dim_k
            && crate::linalg::containment_residual(&self.graph, &other.graph) < self.tol.sub_eq_tol
    }

    /// Distance between the graph projectors.
    pub fn distance(&self, other: &LinearRelation) -> f64 {
        self.graph.distance(&other.graph)
    }

    /// `{ {f, c f'} : {f, f'} ∈ T }`.
    pub fn scaled(&self, c: f64) -> Self {
        let p = self.parts();
        if c == 0.0 {
            return Self::product(&p.dom, &Subspace::zero(self.dim_k), &self.tol);
        }
        let sigma = p.sigma.iter().map(|s| s * c.abs()).collect();
        let left = &p.left * c.signum();
        Self::with_parts(
            Parts::assemble(p.right.clone(), sigma, left, p.mul.clone(), &self.tol),
            &self.tol,
        )
    }

    /// Orthogonal direct sum `T1 ⊕ T2` acting on `H1 ⊕ H2`.
    ///
    /// Works on the cached parts so blocks of very different scale keep
    /// their own rank decisions.
    pub fn direct_sum(&self, other: &LinearRelation) -> Self {
        let (a, b) = (self.parts(), other.parts());
        let bd = |x: &Matrix, y: &Matrix| crate::linalg::block_diag(&[x.clone(), y.clone()]);
        let right = bd(&a.right, &b.right);
        let left = bd(&a.left, &b.left);
        let sigma: Vec<f64> = a.sigma.iter().chain(&b.sigma).copied().collect();
        let mut order: Vec<usize> = (0..sigma.len()).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
        let mul = Subspace::from_orthonormal(bd(a.mul.basis(), b.mul.basis()));
        Self::with_parts(
            Parts::assemble(
                right.select_columns(order.iter()),
                order.iter().map(|&i| sigma[i]).collect(),
                left.select_columns(order.iter()),
                mul,
                &self.tol,
            ),
            &self.tol,
        )
    }

    /// The regular part as a relation, built from the cached parts.
    pub fn regular_part(&self) -> OperatorRelation {
        let p = self.parts();
        let mul = Subspace::zero(self.dim_k);
        OperatorRelation {
            rel: Self::with_parts(
                Parts::assemble(
                    p.right.clone(),
                    p.sigma.clone(),
                    p.left.clone(),
                    mul,
                    &self.tol,
                ),
                &self.tol,
            ),
        }
    }

    pub(crate) fn h_block(&self) -> Matrix {
        self.graph.basis().rows(0, self.dim_h).clone_owned()
    }

    pub(crate) fn k_block(&self) -> Matrix {
        self.graph
            .basis()
            .rows(self.dim_h, self.dim_k)
            .clone_owned()
    }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// A relation with trivial multivalued part.
#[derive(Debug, Clone)]
pub struct OperatorRelation {
    rel: LinearRelation,
}

impl OperatorRelation {
    pub fn new(rel: LinearRelation) -> Result<Self> {
        let m = rel.mul().dim();
        if m != 0 {
            return Err(RelError::NotOperator(m));
        }
        Ok(OperatorRelation { rel })
    }

    pub fn relation(&self) -> &LinearRelation {
        &self.rel
    }

    pub fn into_relation(self) -> LinearRelation {
        self.rel
    }

    pub fn domain(&self) -> &Subspace {
        self.rel.dom()
    }

    /// Action matrix, zero on `domain()⊥`.
    pub fn action(&self) -> &Matrix {
        self.rel.regular_action()
    }

    pub fn apply(&self, f: &Vector) -> Vector {
        self.action() * f
    }

    pub fn dim_h(&self) -> usize {
        self.rel.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.rel.dim_k
    }
}

/// Operator with matrix `m` on the subspace `d`.
pub fn operator_on_domain(m: &Matrix, d: &Subspace, tol: &Tol) -> Result<OperatorRelation> {
    if d.ambient_dim() != m.ncols() {
        return Err(RelError::DimensionMismatch(format!(
            "matrix has {} columns but the domain lives in R^{}",
            m.ncols(),
            d.ambient_dim()
        )));
    }
    OperatorRelation::new(LinearRelation::from_operator(m, d, tol)?)
}

// ---------------------------------------------------------------------------
// Calculus
// ---------------------------------------------------------------------------

/// Adjoint relation from `K` to `H`: the orthogonal complement of the rotated
/// graph `{ {f', -f} }` inside `K ⊕ H`.
pub fn adjoint(t: &LinearRelation) -> LinearRelation {
    let rotated = vcat(&t.k_block(), &(-t.h_block()));
    let graph = complement(&Subspace::from_orthonormal(rotated));
    LinearRelation {
        dim_h: t.dim_k,
        dim_k: t.dim_h,
        graph,
        tol: t.tol,
        parts: OnceLock::new(),
    }
}

/// `{ {f, C f'} : {f, f'} ∈ T }`.
pub fn compose_matrix(c: &Matrix, t: &LinearRelation) -> Result<LinearRelation> {
    if c.ncols() != t.dim_k {
        return Err(RelError::DimensionMismatch(format!(
            "matrix has {} columns but the relation maps into R^{}",
            c.ncols(),
            t.dim_k
        )));
    }
    let gens = vcat(&t.h_block(), &(c * t.k_block()));
    LinearRelation::from_graph(t.dim_h, c.nrows(), &gens, &t.tol)
}

/// Relational product `S T = { {f, g} : {f, h} ∈ T, {h, g} ∈ S for some h }`.
///
/// The two graph cylinders are intersected by solving for the coefficient
/// pairs that agree on the middle space.
pub fn compose(s: &LinearRelation, t: &LinearRelation) -> Result<LinearRelation> {
    if s.dim_h != t.dim_k {
        return Err(RelError::DimensionMismatch(format!(
            "cannot compose: inner spaces R^{} and R^{}",
            t.dim_k, s.dim_h
        )));
    }
    let tk = t.k_block();
    let sk = s.h_block();
    let coupling = hcat(&tk, &(-&sk));
    let n = null_space(&coupling, t.tol.rank_rel);
    let a = n.rows(0, tk.ncols()).clone_owned();
    let b = n.rows(tk.ncols(), sk.ncols()).clone_owned();
    let gens = vcat(&(t.h_block() * a), &(s.k_block() * b));
    LinearRelation::from_graph(t.dim_h, s.dim_k, &gens, &t.tol)
}

/// Result of the Lebesgue decomposition `T = T_reg + T_sing`.
#[derive(Debug, Clone)]
pub struct Lebesgue {
    pub regular: OperatorRelation,
    pub singular: LinearRelation,
    /// Orthogonal projector onto `mul T`.
    pub projector: Matrix,
}

pub fn lebesgue_decompose(t: &LinearRelation) -> Result<Lebesgue> {
    let p = t.mul().projector();
    let eye = Matrix::identity(t.dim_k, t.dim_k);
    let reg = compose_matrix(&(eye - &p), t)?;
    let regular = OperatorRelation::new(reg)
        .map_err(|e| RelError::verification("lebesgue_decompose", format!("regular part: {e}")))?;
    let singular = compose_matrix(&p, t)?;
    Ok(Lebesgue {
        regular,
        singular,
        projector: p,
    })
}

/// Componentwise sum `{ {f, g + g'} : {f, g} ∈ A, {f, g'} ∈ B }`.
pub fn relation_sum(a: &LinearRelation, b: &LinearRelation) -> Result<LinearRelation> {
    if a.dim_h != b.dim_h || a.dim_k != b.dim_k {
        return Err(RelError::DimensionMismatch(
            "relations act between different spaces".into(),
        ));
    }
    // Pairs (x, y) of coefficients with equal H-components.
    let coupling = hcat(&a.h_block(), &(-b.h_block()));
    let n = null_space(&coupling, a.tol.rank_rel);
    let da = a.graph.dim();
    let x = n.rows(0, da).clone_owned();
    let y = n.rows(da, b.graph.dim()).clone_owned();
    let gens = vcat(&(a.h_block() * &x), &(a.k_block() * x + b.k_block() * y));
    LinearRelation::from_graph(a.dim_h, a.dim_k, &gens, &a.tol)
}

/// True iff the graph is the product of its domain and range.
pub fn is_singular_relation(t: &LinearRelation) -> bool {
    t.graph.dim() == t.dom().dim() + t.ran().dim()
}

pub use crate::psd::{
    gram_relation, product_star, psd_sqrt_relation, relation_from_resolvent, resolvent,
    spectral_truncation, PsdRelation,
};
