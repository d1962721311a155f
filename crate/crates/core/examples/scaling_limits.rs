//! Strong resolvent limits of `n A` and `A / n` for a PSD operator `A`
//! with a kernel.
//!
//! Run with `cargo run --example scaling_limits`.

use relcalc::limits::{monotone_psd_limit, Direction, Schedule, SequenceSpec};
use relcalc::relation::LinearRelation;
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();
    let a = LinearRelation::from_matrix(&Matrix::from_row_slice(2, 2, &[0., 0., 0., 1.]), &tol);

    let up = monotone_psd_limit(
        &SequenceSpec::scaled(Schedule::N, a.clone()),
        Direction::Nondecreasing,
        &tol,
    )?;
    let h = up.psd().expect("psd limit");
    println!("n A:");
    println!("  converged after {} doublings", up.diagnostics.doublings);
    println!("  dom H_inf basis:\n{}", h.dom().basis());
    println!("  eigenvalues on dom: {:?}", h.eigenvalues());
    println!("  blow-up directions: {}", up.blowup_space.dim());

    let down = monotone_psd_limit(
        &SequenceSpec::scaled(Schedule::InvN, a),
        Direction::Nonincreasing,
        &tol,
    )?;
    let k = down.psd().expect("psd limit");
    println!("A / n:");
    println!("  converged: {}", down.diagnostics.converged);
    println!("  dom K_inf = R^2: {}", k.dom().dim() == 2);
    println!("  eigenvalues: {:?}", k.eigenvalues());
    Ok(())
}
