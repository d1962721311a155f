//! Seeded randomized checking of the invariant suites.
//!
//! Run with `cargo run --release --example fuzz`.

use relcalc::scenario::{fuzz, FuzzOptions, Suite};

fn main() {
    let opts = FuzzOptions {
        dims: (1, 4),
        trials: 50,
        seed: 2024,
        suite: Suite::All,
        threads: 0,
    };
    let report = fuzz(&opts);
    print!("{}", report.render_text());
    // Same seed, same bytes.
    let again = fuzz(&opts);
    println!("deterministic: {}", report.to_json() == again.to_json());
}
