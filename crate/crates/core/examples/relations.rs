//! A multivalued relation, its parts, adjoint and Lebesgue decomposition.
//!
//! Run with `cargo run --example relations`.

use relcalc::relation::{adjoint, is_singular_relation, lebesgue_decompose, LinearRelation};
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    // Graph generators in R^2 x R^2, stacked as [h; k]:
    //   (e1, e1) and (0, e2). So T e1 = e1 + span{e2}, and e2 is not in dom T.
    let gens = Matrix::from_row_slice(4, 2, &[1., 0., 0., 0., 1., 0., 0., 1.]);
    let t = LinearRelation::from_graph(2, 2, &gens, &tol)?;

    println!("dim graph = {}", t.graph().dim());
    println!("dom T basis:\n{}", t.dom().basis());
    println!("mul T basis:\n{}", t.mul().basis());
    println!("ker T is zero: {}", t.ker().is_zero());
    println!("T is an operator: {}", t.is_operator());

    let ts = adjoint(&t);
    println!("dom T* basis:\n{}", ts.dom().basis());
    println!("T** = T: {}", adjoint(&ts).equals(&t));

    let leb = lebesgue_decompose(&t)?;
    println!("regular part action on dom T:\n{}", leb.regular.action());
    println!(
        "singular part is singular: {}",
        is_singular_relation(&leb.singular)
    );
    println!("projector onto mul T:\n{}", leb.projector);
    Ok(())
}
