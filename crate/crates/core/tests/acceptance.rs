//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Inputs come from generators defined in this file, seeded per criterion.
//! Expected values are computed here from the construction of each input
//! (kernels, domains, spectra), with nalgebra's own decompositions standing
//! in for the library's.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use relcalc::domination::{dominates, link_partial_isometry, theorem_bridge_check};
use relcalc::invariants::RELATION_CHECKS;
use relcalc::limits::{
    monotone_psd_limit, nondecreasing_operator_limit, nondecreasing_operator_limit_bounded,
    nonincreasing_relation_check, relation_sequence_pipeline, Direction, Schedule, SequenceSpec,
};
use relcalc::linalg::Subspace;
use relcalc::relation::{
    compose_matrix, operator_on_domain, product_star, psd_sqrt_relation, spectral_truncation,
    LinearRelation, OperatorRelation, PsdRelation,
};
use relcalc::scenario::{
    demo_names, demo_scenario, fuzz, parse_object, run_scenario_str, values_equal, FuzzOptions,
    Suite, Value,
};
use relcalc::{Matrix, Tol, Vector};

// ---- generators and oracles -------------------------------------------

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-like orthogonal `n x n` matrix from the QR of a Gaussian.
fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    gaussian(rng, n, n).qr().q()
}

fn projector(a: &Matrix) -> Matrix {
    if a.ncols() == 0 {
        return Matrix::zeros(a.nrows(), a.nrows());
    }
    a * a
        .clone()
        .pseudo_inverse(1e-12)
        .expect("nonnegative epsilon")
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = Matrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Graph projector of `D × D⊥` inside `R^n × R^n`.
fn product_projector(d: &Matrix) -> Matrix {
    let p = projector(d);
    let n = p.nrows();
    block_diag(&p, &(Matrix::identity(n, n) - &p))
}

fn graph_gap(r: &LinearRelation, expected_projector: &Matrix) -> f64 {
    (r.graph().projector() - expected_projector).norm()
}

fn subspace(cols: &Matrix) -> Subspace {
    Subspace::from_basis(cols.clone(), &Tol::default()).expect("independent columns")
}

fn pick(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// A relation between `R^h` and `R^k` from a random number of Gaussian
/// generators of random rank.
fn random_relation(rng: &mut ChaCha8Rng, h: usize, k: usize) -> LinearRelation {
    let count = pick(rng, 1, h + k);
    let rank = pick(rng, 0, count);
    let g = gaussian(rng, h + k, rank) * gaussian(rng, rank, count);
    LinearRelation::from_graph(h, k, &g, &Tol::default()).expect("row count matches")
}

fn contraction(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let m = gaussian(rng, n, n);
    let s = m.clone().singular_values().max();
    m / s.max(1.0) * rng.random_range(0.2..1.0)
}

/// `V diag(λ) Vᵀ` with the first `zeros` eigenvalues zero.
fn psd_with_kernel(rng: &mut ChaCha8Rng, n: usize, zeros: usize) -> (Matrix, Matrix) {
    let v = orthogonal(rng, n);
    let lam: Vec<f64> = (0..n)
        .map(|i| {
            if i < zeros {
                0.0
            } else {
                rng.random_range(0.5..4.0)
            }
        })
        .collect();
    let a = &v * Matrix::from_diagonal(&Vector::from_vec(lam)) * v.transpose();
    (a, v.columns(0, zeros).clone_owned())
}

/// Oracle truncation: keep the eigenvalues `<= k`.
fn truncate(a: &Matrix, k: f64) -> Matrix {
    let e = a.clone().symmetric_eigen();
    let mut out = Matrix::zeros(a.nrows(), a.ncols());
    for (i, &l) in e.eigenvalues.iter().enumerate() {
        if l <= k {
            let v = e.eigenvectors.column(i);
            out += v * v.transpose() * l;
        }
    }
    out
}

/// Symmetric square root by nalgebra's eigendecomposition, with eigenvalues
/// under the relative rank cut `1e-9 · max(λ_max, 1)` treated as zero.
fn sqrt_psd(a: &Matrix) -> Matrix {
    let e = a.clone().symmetric_eigen();
    let cut = 1e-9 * e.eigenvalues.max().max(1.0);
    let d = e.eigenvalues.map(|l| if l < cut { 0.0 } else { l.sqrt() });
    &e.eigenvectors * Matrix::from_diagonal(&d) * e.eigenvectors.transpose()
}

/// `ker T` of a relation, read from its generators `[Gh; Gk]`: the image
/// under `Gh` of the null space of `Gk`.
fn kernel_of(t: &LinearRelation) -> Matrix {
    let g = t.graph().basis();
    let (h, k, m) = (t.dim_h(), t.dim_k(), g.ncols());
    if m == 0 {
        return Matrix::zeros(h, 0);
    }
    // Null space of the codomain block, from the eigenvectors of GkᵀGk.
    let gk = g.rows(h, k).clone_owned();
    let e = (gk.transpose() * &gk).symmetric_eigen();
    let mut null = Matrix::zeros(m, m);
    for (j, &lam) in e.eigenvalues.iter().enumerate() {
        if lam < 1e-12 {
            null.set_column(j, &e.eigenvectors.column(j));
        }
    }
    let ker = g.rows(0, h) * null;
    let u = ker.svd(true, false);
    let r = u.singular_values.iter().filter(|&&s| s > 1e-9).count();
    u.u.expect("requested").columns(0, r).clone_owned()
}

// ---- reporting --------------------------------------------------------

struct Verdict {
    passed: bool,
    summary: String,
}

fn criterion(n: u32, title: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    println!(
        "criterion {n:>2} {title:<34} {} ({}; {:.1}s)",
        if v.passed { "PASS" } else { "FAIL" },
        v.summary,
        start.elapsed().as_secs_f64()
    );
    v.passed
}

// ---- criteria ---------------------------------------------------------

fn scaling_up() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..50 {
        let n = pick(&mut rng, 2, 6);
        let zeros = pick(&mut rng, 1, n - 1);
        let (a, ker) = psd_with_kernel(&mut rng, n, zeros);
        let seq = SequenceSpec::scaled(Schedule::N, LinearRelation::from_matrix(&a, &tol));
        match monotone_psd_limit(&seq, Direction::Nondecreasing, &tol) {
            Ok(rep) => {
                let h = rep.psd().expect("psd limit");
                let g = graph_gap(h.relation(), &product_projector(&ker));
                let d = (psd_sqrt_relation(h).dom().projector() - projector(&ker)).norm();
                worst = worst.max(g).max(d);
                if g >= 1e-6 || d >= 1e-6 || !rep.diagnostics.converged {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!("50 runs, {failures} failures, worst {worst:.1e}, tol 1e-6"),
    }
}

fn sqrt_n_chain() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..50 {
        let n = pick(&mut rng, 2, 6);
        let rank = pick(&mut rng, 0, n);
        let q = orthogonal(&mut rng, n);
        // R = X Yᵀ with Y orthonormal on the first `rank` columns of Q, so
        // ker R is spanned by the remaining columns.
        let r = gaussian(&mut rng, n, rank) * q.columns(0, rank).transpose();
        let ker = q.columns(rank, n - rank).clone_owned();
        let base = LinearRelation::from_matrix(&r, &tol);
        let seq = SequenceSpec::scaled(Schedule::SqrtN, base);
        let expected = product_projector(&ker);
        let res = (|| -> relcalc::Result<f64> {
            let lim = nondecreasing_operator_limit(&seq, &tol)?;
            let t = lim.operator().expect("operator limit");
            let dom = (t.domain().projector() - projector(&ker)).norm();
            let zero = (t.action() * t.domain().basis()).amax();
            let star = graph_gap(product_star(t.relation())?.relation(), &expected);
            let pipe = relation_sequence_pipeline(&seq, &tol)?;
            let h = graph_gap(pipe.h_infinity().relation(), &expected);
            Ok(dom.max(zero).max(star).max(h))
        })();
        match res {
            Ok(r) => {
                worst = worst.max(r);
                if r >= 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!("50 runs, {failures} failures, worst {worst:.1e}, tol 1e-6"),
    }
}

fn scaling_down() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for i in 0..50 {
        let n = pick(&mut rng, 2, 6);
        // Even runs: operators. Odd runs: a proper domain and a multivalued part.
        let d = if i % 2 == 0 {
            n
        } else {
            pick(&mut rng, 0, n - 1)
        };
        let q = orthogonal(&mut rng, n);
        let dom = q.columns(0, d).clone_owned();
        let b = gaussian(&mut rng, n, n);
        let h = PsdRelation::from_operator_part(&subspace(&dom), &(b.transpose() * &b), &tol)
            .expect("psd");
        let seq = SequenceSpec::scaled(Schedule::InvN, h.relation().clone());
        match monotone_psd_limit(&seq, Direction::Nonincreasing, &tol) {
            Ok(rep) => {
                let g = graph_gap(rep.psd().expect("psd").relation(), &product_projector(&dom));
                worst = worst.max(g);
                if g >= 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!("50 runs, {failures} failures, worst {worst:.1e}, tol 1e-6"),
    }
}

fn bridge() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut worst_norm: f64 = 0.0;
    let mut worst_incl: f64 = 0.0;
    let mut pairs = 0;
    for dim in 2..=5 {
        for i in 0..2000 {
            let (h, k) = (dim, pick(&mut rng, 1, dim));
            let b = random_relation(&mut rng, h, k);
            let constructed = i % 2 == 0;
            let a = if constructed {
                let c0 = contraction(&mut rng, k);
                compose_matrix(&c0, &b).expect("square contraction")
            } else {
                random_relation(&mut rng, h, k)
            };
            pairs += 1;
            let ok = (|| -> relcalc::Result<bool> {
                if !theorem_bridge_check(&a, &b, &tol)? {
                    return Ok(false);
                }
                match dominates(&a, &b, &tol)? {
                    Some(c) => {
                        let image = compose_matrix(&c.matrix, &b)?;
                        let basis = image.graph().basis();
                        let incl = (0..basis.ncols())
                            .map(|j| a.graph().residual(&basis.column(j).clone_owned()))
                            .fold(0.0, f64::max);
                        worst_norm = worst_norm.max(c.norm());
                        worst_incl = worst_incl.max(incl);
                        Ok(c.norm() <= 1.0 + 1e-8 && incl < 1e-8)
                    }
                    None => Ok(!constructed),
                }
            })();
            if !matches!(ok, Ok(true)) {
                failures += 1;
            }
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!(
            "{pairs} pairs, {failures} failures, max ‖C‖ {worst_norm:.6}, worst inclusion {worst_incl:.1e}"
        ),
    }
}

fn appendix() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for h in 1..=6 {
        for k in 1..=6 {
            for _ in 0..1000 {
                let t = random_relation(&mut rng, h, k);
                for name in RELATION_CHECKS {
                    checks += 1;
                    match relcalc::invariants::check(name, std::slice::from_ref(&t), &tol) {
                        Ok(o) => {
                            worst = worst.max(o.residual);
                            if !(o.passed && o.residual < 1e-8) {
                                failures += 1;
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
            }
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!("{checks} checks, {failures} failures, worst {worst:.1e}, tol 1e-8"),
    }
}

fn factorization() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    let (mut worst_fac, mut worst_proj): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let (h, k) = (pick(&mut rng, 1, 6), pick(&mut rng, 1, 6));
        let d = pick(&mut rng, 1, h);
        let dom = orthogonal(&mut rng, h).columns(0, d).clone_owned();
        let m = gaussian(&mut rng, k, h);
        let res = (|| -> relcalc::Result<(f64, f64)> {
            let t = operator_on_domain(&m, &subspace(&dom), &tol)?;
            let hrel = product_star(t.relation())?;
            let root = operator_on_domain(&psd_sqrt_relation(&hrel).op(), t.domain(), &tol)?;
            let u = link_partial_isometry(&t, &root, &tol)?;
            let q = t.domain().basis();
            let scale = (t.action() * q).norm().max(1.0);
            let fac = (&u.matrix * t.action() * q - root.action() * q).amax() / scale;
            // Oracle: projector onto ran T = span of M Q.
            let proj = (u.matrix.transpose() * &u.matrix - projector(&(&m * &dom))).amax();
            Ok((fac, proj))
        })();
        match res {
            Ok((fac, proj)) => {
                worst_fac = worst_fac.max(fac);
                worst_proj = worst_proj.max(proj);
                if fac >= 1e-8 || proj >= 1e-7 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!(
            "500 operators, {failures} failures, factorization {worst_fac:.1e} (tol 1e-8), UᵀU {worst_proj:.1e} (tol 1e-7)"
        ),
    }
}

/// `T_i = D_i V` with `D_i` diagonal and entrywise nondecreasing in `i`.
fn increasing_terms(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Vec<Matrix> {
    let v = orthogonal(rng, n);
    let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(Matrix::from_diagonal(&Vector::from_vec(d.clone())) * v.transpose());
        for x in d.iter_mut() {
            *x += rng.random_range(0.0..0.5);
        }
    }
    out
}

fn limit_properties() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = pick(&mut rng, 1, 6);
        let terms = increasing_terms(&mut rng, n, 5);
        let rels: Vec<_> = terms
            .iter()
            .map(|m| LinearRelation::from_matrix(m, &tol))
            .collect();
        let ok = (|| -> relcalc::Result<bool> {
            let lim = nondecreasing_operator_limit(&SequenceSpec::Explicit(rels.clone()), &tol)?;
            let t = lim.operator().expect("operator limit");
            let mut fine = true;
            for _ in 0..20 {
                let phi = gaussian(&mut rng, n, 1).column(0).clone_owned();
                let norms: Vec<f64> = terms.iter().map(|m| (m * &phi).norm()).collect();
                fine &= norms.windows(2).all(|w| w[1] >= w[0] - 1e-12);
                let target = t.apply(&phi).norm();
                let gap = (norms.last().expect("five terms") - target).abs();
                worst = worst.max(gap);
                fine &= gap < 1e-6;
            }
            Ok(fine)
        })();
        if !matches!(ok, Ok(true)) {
            failures += 1;
        }
    }

    let mut bound_failures = 0;
    for _ in 0..200 {
        let n = pick(&mut rng, 1, 6);
        let terms = increasing_terms(&mut rng, n, 4);
        let scale = rng.random_range(1.0..2.0);
        let bound = LinearRelation::from_matrix(&(terms.last().expect("four terms") * scale), &tol);
        let rels: Vec<_> = terms
            .iter()
            .map(|m| LinearRelation::from_matrix(m, &tol))
            .collect();
        let ok = (|| -> relcalc::Result<bool> {
            let rep =
                nondecreasing_operator_limit_bounded(&SequenceSpec::Explicit(rels), &bound, &tol)?;
            let Some(c) = &rep.upper_bound else {
                return Ok(false);
            };
            let t = rep.operator().expect("operator limit");
            let image = compose_matrix(&c.matrix, &bound)?;
            Ok(c.norm() <= 1.0 + 1e-8 && t.relation().contains(&image))
        })();
        if !matches!(ok, Ok(true)) {
            bound_failures += 1;
        }
    }
    Verdict {
        passed: failures == 0 && bound_failures == 0,
        summary: format!(
            "monotone norm: 50 runs x 20 vectors, {failures} failures, worst {worst:.1e}; upper bound: 200 trials, {bound_failures} failures"
        ),
    }
}

fn pipeline() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut failures, mut unconverged) = (0, 0);
    let (mut worst_norm, mut worst_star): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let n = pick(&mut rng, 1, 5);
        let k = pick(&mut rng, 1, 5);
        let base = random_relation(&mut rng, n, k);
        let schedule = match i % 3 {
            0 => Schedule::N,
            1 => Schedule::SqrtN,
            _ => Schedule::Pow { p: 1, q: 3 },
        };
        let ker = kernel_of(&base);
        let seq = SequenceSpec::scaled(schedule, base);
        let res = (|| -> relcalc::Result<(f64, f64, Option<f64>)> {
            let rep = relation_sequence_pipeline(&seq, &tol)?;
            let s = rep.limit();
            let h = rep.h_infinity();
            let root = sqrt_psd(&h.op());
            let q = s.domain().basis();
            let norm = (0..q.ncols())
                .map(|j| {
                    let phi = q.column(j).clone_owned();
                    (s.apply(&phi).norm() - (&root * &phi).norm()).abs()
                })
                .fold(0.0, f64::max);
            let sq = s.action() * q;
            let star = (sq.transpose() * &sq - q.transpose() * h.op() * q).amax();
            // The analytic limit is only reached once the doubling schedule has converged.
            let converged = rep.gram.diagnostics.converged && rep.regular.diagnostics.converged;
            let closed = converged.then(|| graph_gap(h.relation(), &product_projector(&ker)));
            Ok((norm, star, closed))
        })();
        match res {
            Ok((norm, star, closed)) => {
                worst_norm = worst_norm.max(norm);
                worst_star = worst_star.max(star);
                if closed.is_none() {
                    unconverged += 1;
                }
                if norm >= 1e-6 || star >= 1e-7 || closed.is_some_and(|c| c >= 1e-6) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    Verdict {
        passed: failures == 0,
        summary: format!(
            "200 sequences, {failures} failures, norm {worst_norm:.1e} (tol 1e-6), star {worst_star:.1e} (tol 1e-7), {unconverged} hit the doubling cap"
        ),
    }
}

fn truncation() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = 0;
    let (mut worst_violation, mut worst_oracle): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let n = pick(&mut rng, 1, 6);
        let zeros = pick(&mut rng, 0, n - 1);
        let (a, _) = psd_with_kernel(&mut rng, n, zeros);
        let a = a * rng.random_range(1.0..3.0);
        let lmax = a.clone().symmetric_eigen().eigenvalues.max();
        let phi = gaussian(&mut rng, n, 1).column(0).clone_owned();
        let full = phi.dot(&(&a * &phi));
        let mut prev = f64::NEG_INFINITY;
        let mut ok = true;
        for k in 1..=(lmax.ceil() as usize + 2) {
            let Ok(ak) = spectral_truncation(&a, k as f64, &tol) else {
                ok = false;
                break;
            };
            worst_oracle = worst_oracle.max((&ak - truncate(&a, k as f64)).amax());
            let f = phi.dot(&(&ak * &phi));
            worst_violation = worst_violation.max(prev - f);
            ok &= f >= prev - 1e-10;
            if k as f64 >= lmax {
                ok &= (f - full).abs() <= 1e-10 * full.abs().max(1.0);
            }
            prev = f;
        }
        if !ok {
            failures += 1;
        }
    }
    Verdict {
        passed: failures == 0 && worst_oracle < 1e-10,
        summary: format!(
            "200 matrices, {failures} failures, worst violation {:.1e} (tol 1e-10), oracle gap {worst_oracle:.1e}",
            worst_violation.max(0.0)
        ),
    }
}

fn nonincreasing() -> Verdict {
    let tol = Tol::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    let (mut worst_star, mut worst_fac): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let n = pick(&mut rng, 1, 5);
        let d = pick(&mut rng, 1, n);
        let dom = orthogonal(&mut rng, n).columns(0, d).clone_owned();
        let m = gaussian(&mut rng, n, n);
        let base = operator_on_domain(&m, &subspace(&dom), &tol)
            .expect("operator")
            .into_relation();
        let seq = match i % 3 {
            0 => SequenceSpec::scaled(Schedule::InvN, base),
            1 => SequenceSpec::scaled(Schedule::InvSqrtN, base),
            _ => {
                // Decreasing explicit terms D_i V on the full space.
                let mut terms = increasing_terms(&mut rng, n, 4);
                terms.reverse();
                SequenceSpec::Explicit(
                    terms
                        .iter()
                        .map(|t| LinearRelation::from_matrix(t, &tol))
                        .collect(),
                )
            }
        };
        let ok = (|| -> relcalc::Result<bool> {
            let rep = nonincreasing_relation_check(&seq, &tol)?;
            worst_star = worst_star.max(rep.star_distance);
            worst_fac = worst_fac.max(rep.factorization_residual);
            // Oracle for K_∞: dom × dom⊥ when the terms vanish, the last term's
            // T*T for the explicit sequences.
            let k = rep.k_infinity().relation();
            let gap = match &seq {
                SequenceSpec::Explicit(terms) => {
                    let last = terms.last().expect("four terms").regular_action().clone();
                    let g = last.transpose() * &last;
                    let mut gens = Matrix::zeros(2 * n, n);
                    gens.view_mut((0, 0), (n, n))
                        .copy_from(&Matrix::identity(n, n));
                    gens.view_mut((n, 0), (n, n)).copy_from(&g);
                    graph_gap(k, &projector(&gens))
                }
                _ => graph_gap(k, &product_projector(&dom)),
            };
            Ok(rep.star_distance < 1e-6 && rep.factorization_residual < 1e-7 && gap < 1e-6)
        })();
        if !matches!(ok, Ok(true)) {
            failures += 1;
        }
    }

    // Singularity battery. Vanishing limits are products dom × {0}, hence
    // singular; constant injective operators are not.
    let mut battery_failures = 0;
    for i in 0..40 {
        let singular = i < 20;
        let n = pick(&mut rng, 1, 4);
        let d = pick(&mut rng, 1, n);
        let dom = orthogonal(&mut rng, n).columns(0, d).clone_owned();
        let m = gaussian(&mut rng, n, n) + Matrix::identity(n, n) * 3.0;
        let t = operator_on_domain(&m, &subspace(&dom), &tol)
            .expect("operator")
            .into_relation();
        let seq = if singular {
            SequenceSpec::scaled(Schedule::InvSqrtN, t)
        } else {
            SequenceSpec::Explicit(vec![t])
        };
        let ok = nonincreasing_relation_check(&seq, &tol)
            .map(|r| r.limit_singular == singular && r.gram_singular == singular);
        if !matches!(ok, Ok(true)) {
            battery_failures += 1;
        }
    }
    Verdict {
        passed: failures == 0 && battery_failures == 0,
        summary: format!(
            "200 sequences, {failures} failures, star {worst_star:.1e} (tol 1e-6), factorization {worst_fac:.1e} (tol 1e-7); battery 40 cases, {battery_failures} failures"
        ),
    }
}

fn determinism() -> Verdict {
    let tol = Tol::default();
    let opts = FuzzOptions {
        dims: (1, 4),
        trials: 40,
        seed: 12345,
        suite: Suite::All,
        threads: 0,
    };
    let a = fuzz(&opts).to_json();
    let b = fuzz(&opts).to_json();
    let serial = fuzz(&FuzzOptions { threads: 1, ..opts }).to_json();
    let identical = a == b && a == serial;

    // Every object in the reports of the bundled scenarios, plus random
    // relations and PSD relations, must survive serialization.
    let mut objects = 0;
    let mut broken = 0;
    for name in demo_names() {
        let report = run_scenario_str(demo_scenario(name).expect("bundled"), None)
            .expect("bundled scenario runs");
        for task in &report.tasks {
            for json in task.objects.values() {
                let items = match json {
                    serde_json::Value::Array(v) => v.clone(),
                    serde_json::Value::Bool(_) => continue,
                    other => vec![other.clone()],
                };
                for item in items {
                    objects += 1;
                    let ok = parse_object(&item, &tol).is_ok_and(|v| {
                        parse_object(&v.to_json(), &tol).is_ok_and(|w| values_equal(&v, &w, &tol))
                    });
                    if !ok {
                        broken += 1;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (h, k) = (pick(&mut rng, 1, 5), pick(&mut rng, 1, 5));
        let t = random_relation(&mut rng, h, k);
        let psd = product_star(&t).expect("T*T");
        let op: OperatorRelation = t.regular_part();
        for v in [Value::Relation(t), Value::Psd(psd), Value::Operator(op)] {
            objects += 1;
            let ok = parse_object(&v.to_json(), &tol).is_ok_and(|w| values_equal(&v, &w, &tol));
            if !ok {
                broken += 1;
            }
        }
    }
    Verdict {
        passed: identical && broken == 0,
        summary: format!(
            "fuzz reports identical: {identical}; {objects} objects round-tripped, {broken} broken"
        ),
    }
}

fn main() {
    let start = Instant::now();
    let results = [
        criterion(1, "scaling-up limit", scaling_up),
        criterion(2, "sqrt(n) chain", sqrt_n_chain),
        criterion(3, "scaling-down limit", scaling_down),
        criterion(4, "domination bridge", bridge),
        criterion(5, "relation identity suite", appendix),
        criterion(6, "square-root factorization", factorization),
        criterion(7, "monotone norm and upper bound", limit_properties),
        criterion(8, "relation pipeline", pipeline),
        criterion(9, "spectral truncation", truncation),
        criterion(10, "nonincreasing checks", nonincreasing),
        criterion(11, "determinism and round trip", determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.1}s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
