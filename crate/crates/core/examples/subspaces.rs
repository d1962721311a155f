//! Subspaces as orthonormal bases: sums, intersections, complements and
//! projector-based equality.
//!
//! Run with `cargo run --example subspaces`.

use relcalc::linalg::{complement, contains, intersect, orthonormalize, sum, Subspace};
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    // span{e1, e2} and span{e2, e3} in R^3.
    let a = Subspace::from_basis(
        Matrix::from_row_slice(3, 2, &[1., 0., 0., 1., 0., 0.]),
        &tol,
    )?;
    let b = Subspace::from_basis(
        Matrix::from_row_slice(3, 2, &[0., 0., 1., 0., 0., 1.]),
        &tol,
    )?;

    let s = sum(&a, &b, &tol)?;
    let i = intersect(&a, &b, &tol)?;
    println!("dim A = {}, dim B = {}", a.dim(), b.dim());
    println!("dim (A + B) = {}, dim (A ∩ B) = {}", s.dim(), i.dim());
    println!("A ∩ B basis:\n{}", i.basis());

    let perp = complement(&a);
    println!("A⊥ basis:\n{}", perp.basis());
    println!("A⊥ ⊆ B: {}", contains(&b, &perp, &tol)?);

    // Redundant generators collapse to the same subspace.
    let spread = orthonormalize(
        &Matrix::from_row_slice(3, 3, &[1., 1., 2., 1., -1., 0., 0., 0., 0.]),
        &tol,
    );
    println!(
        "span{{(1,1,0), (1,-1,0), (2,0,0)}} equals A: {} (projector distance {:.1e})",
        spread.equals(&a, &tol),
        spread.distance(&a)
    );
    Ok(())
}
