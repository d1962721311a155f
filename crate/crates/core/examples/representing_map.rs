//! Representing maps of a semi-inner product and the partial isometry
//! connecting two of them.
//!
//! Run with `cargo run --example representing_map`.

use relcalc::limits::{connect_maps, representing_map, GramSpec};
use relcalc::relation::operator_on_domain;
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    let generators = Matrix::identity(3, 3);
    // A rank-two form: e3 is neutral.
    let gram = Matrix::from_row_slice(3, 3, &[2., 1., 0., 1., 2., 0., 0., 0., 0.]);
    let spec = GramSpec::new(generators.clone(), gram.clone(), &tol)?;

    let (t, neutral) = representing_map(&spec, &tol)?;
    println!("codomain dimension: {}", t.dim_k());
    println!("T =\n{}", t.action());
    println!("neutral elements:\n{}", neutral.basis());
    let tq = t.action() * &generators;
    println!("Gram of T φ_i:\n{}", tq.transpose() * &tq);

    // Another representing map: rotate the codomain.
    let (c, s) = (0.6, 0.8);
    let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let t2 = operator_on_domain(&(rot * t.action()), t.domain(), &tol)?;
    let v = connect_maps(&t, &t2, &tol)?;
    println!("V with T2 = V T:\n{}", v.matrix);
    println!("VᵀV − P_initial residual: {:.1e}", v.initial_residual());
    Ok(())
}
