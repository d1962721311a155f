//! Contractive domination between relations, its PSD counterpart, and the
//! canonical contraction that witnesses it.
//!
//! Run with `cargo run --example domination`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relcalc::domination::{bridge_verdicts, dominates, psd_leq};
use relcalc::random::dominated_pair;
use relcalc::relation::{compose_matrix, product_star, LinearRelation};
use relcalc::{Matrix, Tol};

fn main() -> relcalc::Result<()> {
    let tol = Tol::default();

    let a = LinearRelation::from_matrix(&Matrix::from_row_slice(2, 2, &[0.5, 0., 0., 1.]), &tol);
    let b = LinearRelation::identity(2, &tol);
    match dominates(&a, &b, &tol)? {
        Some(c) => println!("diag(0.5, 1) ≺ I with C =\n{}‖C‖ = {}", c.matrix, c.norm()),
        None => println!("diag(0.5, 1) is not dominated by I"),
    }
    println!("I ≺ diag(0.5, 1): {}", dominates(&b, &a, &tol)?.is_some());
    println!(
        "A*A ≤ B*B: {}",
        psd_leq(&product_star(&a)?, &product_star(&b)?, &tol)
    );

    // A random pair built as A = C0 B, possibly with extra graph directions.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, b) = dominated_pair(&mut rng, 3, 2, &tol);
    let verdicts = bridge_verdicts(&a, &b, &tol)?;
    println!("random pair verdicts: {verdicts:?}");
    if let Some(c) = dominates(&a, &b, &tol)? {
        let image = compose_matrix(&c.matrix, &b)?;
        println!("C B ⊆ A: {} (‖C‖ = {:.6})", a.contains(&image), c.norm());
    }
    Ok(())
}
