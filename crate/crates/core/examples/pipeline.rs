//! Nondecreasing operator limit of `√n R` and the relation pipeline that
//! links it with the limit of `T_n* T_n`.
//!
//! Run with `cargo run --example pipeline`.

use relcalc::limits::{
    nondecreasing_operator_limit, relation_sequence_pipeline, Schedule, SequenceSpec,
};
use relcalc::relation::LinearRelation;
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    let r = Matrix::from_row_slice(3, 3, &[1., 0., 1., 0., 1., 1., 1., 1., 2.]);
    let seq = SequenceSpec::scaled(Schedule::SqrtN, LinearRelation::from_matrix(&r, &tol));

    let lim = nondecreasing_operator_limit(&seq, &tol)?;
    let t = lim.operator().expect("operator limit");
    println!(
        "dom T (expected ker R, spanned by (1, 1, -1)/√3):\n{}",
        t.domain().basis()
    );
    // The limit maps into R^rank; here the rank is zero, so T vanishes on its domain.
    println!("codomain dimension of T: {}", t.dim_k());

    let report = relation_sequence_pipeline(&seq, &tol)?;
    println!(
        "domain distance dom S_r vs dom H_inf: {:.2e}",
        report.domain_distance
    );
    println!("norm residual: {:.2e}", report.norm_residual);
    println!(
        "S_r* S_r vs H_inf graph distance: {:.2e}",
        report.star_distance
    );
    println!(
        "isometry residuals: initial {:.2e}, final {:.2e}",
        report.isometry.initial_residual(),
        report.isometry.final_residual()
    );
    Ok(())
}
