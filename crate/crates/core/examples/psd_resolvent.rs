//! Nonnegative selfadjoint relations: square roots, resolvents and spectral
//! truncation.
//!
//! Run with `cargo run --example psd_resolvent`.

use relcalc::linalg::Subspace;
use relcalc::relation::{
    psd_sqrt_relation, relation_from_resolvent, resolvent, spectral_truncation, PsdRelation,
};
use relcalc::{Matrix, Tol, Vector};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    // H acts as 4 on span{e1} and is multivalued on span{e2}.
    let dom = Subspace::from_basis(Matrix::from_row_slice(2, 1, &[1., 0.]), &tol)?;
    let h = PsdRelation::from_operator_part(
        &dom,
        &Matrix::from_row_slice(2, 2, &[4., 0., 0., 0.]),
        &tol,
    )?;
    println!("eigenvalues on dom H: {:?}", h.eigenvalues());
    println!("mul H basis:\n{}", h.mul().basis());

    let root = psd_sqrt_relation(&h);
    println!("eigenvalues of H^(1/2): {:?}", root.eigenvalues());

    let r = resolvent(&h);
    println!("(H + I)^-1 =\n{r}");
    let back = relation_from_resolvent(&r, &tol)?;
    println!("relation recovered from its resolvent: {}", back.equals(&h));

    let a = Matrix::from_row_slice(2, 2, &[2., 1., 1., 2.]);
    let phi = Vector::from_vec(vec![1.0, 0.5]);
    for k in [1.0, 2.0, 3.0, 4.0] {
        let ak = spectral_truncation(&a, k, &tol)?;
        println!("k = {k}: (A_k φ, φ) = {:.6}", phi.dot(&(&ak * &phi)));
    }
    println!("(A φ, φ)       = {:.6}", phi.dot(&(&a * &phi)));
    Ok(())
}
