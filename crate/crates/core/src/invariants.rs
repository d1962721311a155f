//! Named invariant checks. Each check takes relations (and plain matrices)
//! only, so any failing input can be written out as a scenario file and
//! replayed with the `invariant` task.

use serde::Serialize;

use crate::domination::{bridge_verdicts, dominates, link_partial_isometry, psd_leq};
use crate::error::{RelError, Result};
use crate::limits::{
    monotone_psd_limit, nondecreasing_operator_limit, nondecreasing_operator_limit_bounded,
    nonincreasing_relation_check, relation_sequence_pipeline, Direction, Schedule, SequenceSpec,
};
use crate::linalg::{complement, containment_residual, psd_sqrt, Matrix, Tol, Vector};
use crate::relation::{
    adjoint, is_singular_relation, lebesgue_decompose, operator_on_domain, product_star,
    psd_sqrt_relation, relation_from_resolvent, relation_sum, resolvent, spectral_truncation,
    LinearRelation, PsdRelation,
};

/// Result of one invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub name: String,
    pub passed: bool,
    /// Worst residual seen; compared against `threshold`.
    pub residual: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Outcome {
    fn measured(name: &str, residual: f64, threshold: f64) -> Outcome {
        Outcome {
            name: name.to_string(),
            passed: residual.is_finite() && residual < threshold,
            residual,
            threshold,
            detail: String::new(),
        }
    }

    fn boolean(name: &str, ok: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            name: name.to_string(),
            passed: ok,
            residual: if ok { 0.0 } else { 1.0 },
            threshold: 0.5,
            detail: detail.into(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Outcome {
        self.detail = detail.into();
        self
    }
}

/// Threshold of the relation identity battery.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Threshold for limit objects compared against closed forms.
pub const LIMIT_TOL: f64 = 1e-6;

/// Names of the relation identities, in battery order.
pub const RELATION_CHECKS: [&str; 9] = [
    "involution",
    "part_duality",
    "lebesgue_reconstruction",
    "mul_of_product",
    "product_of_regular_part",
    "mul_of_regular_adjoint",
    "pairing",
    "regular_form",
    "square_root_form",
];

fn arity(name: &str, inputs: &[LinearRelation], n: usize) -> Result<()> {
    if inputs.len() < n {
        return Err(RelError::InvalidInput(format!(
            "invariant {name} needs {n} relation arguments, got {}",
            inputs.len()
        )));
    }
    Ok(())
}

/// Runs the invariant `name` on `inputs`.
pub fn check(name: &str, inputs: &[LinearRelation], tol: &Tol) -> Result<Outcome> {
    match name {
        "involution" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            Ok(Outcome::measured(
                name,
                adjoint(&adjoint(t)).distance(t),
                IDENTITY_TOL,
            ))
        }
        "part_duality" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let ts = adjoint(t);
            let a = ts.mul().distance(&complement(t.dom()));
            let b = ts.ker().distance(&complement(t.ran()));
            Ok(Outcome::measured(name, a.max(b), IDENTITY_TOL))
        }
        "lebesgue_reconstruction" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let l = lebesgue_decompose(t)?;
            let back = relation_sum(l.regular.relation(), &l.singular)?.distance(t);
            let ran_reg = l.regular.relation().ran().basis();
            let orth = (t.mul().basis().transpose() * ran_reg).amax();
            let singular = is_singular_relation(&l.singular);
            let out = Outcome::measured(name, back.max(orth), IDENTITY_TOL);
            Ok(Outcome {
                passed: out.passed && singular,
                ..out.with_detail(format!("T_sing singular: {singular}"))
            })
        }
        "mul_of_product" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let r = product_star(t)?.mul().distance(adjoint(t).mul());
            Ok(Outcome::measured(name, r, IDENTITY_TOL))
        }
        "product_of_regular_part" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let reg = lebesgue_decompose(t)?.regular;
            let r = product_star(t)?
                .relation()
                .distance(product_star(reg.relation())?.relation());
            Ok(Outcome::measured(name, r, IDENTITY_TOL))
        }
        "mul_of_regular_adjoint" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let reg = lebesgue_decompose(t)?.regular;
            let r = adjoint(t).mul().distance(adjoint(reg.relation()).mul());
            Ok(Outcome::measured(name, r, IDENTITY_TOL))
        }
        "pairing" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            Ok(Outcome::measured(name, pairing_residual(t), IDENTITY_TOL))
        }
        "regular_form" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let h = product_star(t)?;
            let m = t.regular_action();
            let scale = crate::linalg::op_norm(m).powi(2).max(1.0);
            let phi = h.dom().basis();
            let psi = t.dom().basis();
            let lhs = (h.op() * phi).transpose() * psi;
            let rhs = (m * phi).transpose() * (m * psi);
            let r = if phi.ncols() == 0 || psi.ncols() == 0 {
                0.0
            } else {
                (lhs - rhs).amax() / scale
            };
            Ok(Outcome::measured(name, r, IDENTITY_TOL))
        }
        "square_root_form" => {
            arity(name, inputs, 1)?;
            let h = PsdRelation::from_relation(&inputs[0]).or_else(|_| product_star(&inputs[0]))?;
            Ok(Outcome::measured(
                name,
                square_root_residual(&h, tol)?,
                IDENTITY_TOL,
            ))
        }
        "regular_idempotent" => {
            arity(name, inputs, 1)?;
            let reg = lebesgue_decompose(&inputs[0])?.regular;
            let again = lebesgue_decompose(reg.relation())?;
            let r = again
                .regular
                .relation()
                .distance(reg.relation())
                .max(again.projector.amax());
            Ok(Outcome::measured(name, r, IDENTITY_TOL))
        }
        "bridge" => {
            arity(name, inputs, 2)?;
            let v = bridge_verdicts(&inputs[0], &inputs[1], tol)?;
            let mut out = Outcome::boolean(name, v.agree(), format!("{v:?}"));
            if v.dominates {
                let c = dominates(&inputs[0], &inputs[1], tol)?.expect("verdict was positive");
                let image = crate::relation::compose_matrix(&c.matrix, &inputs[1])?;
                let incl = containment_residual(inputs[0].graph(), image.graph());
                let norm_excess = (c.norm() - 1.0).max(0.0);
                out.residual = out.residual.max(incl).max(norm_excess);
                out.threshold = IDENTITY_TOL;
                out.passed = out.passed && incl < IDENTITY_TOL && c.norm() <= 1.0 + 1e-8;
            }
            Ok(out)
        }
        "dominated_pair" => {
            arity(name, inputs, 2)?;
            let (a, b) = (&inputs[0], &inputs[1]);
            let Some(c) = dominates(a, b, tol)? else {
                return Ok(Outcome::boolean(name, false, "pair is not dominated"));
            };
            let dom = crate::linalg::contains(a.dom(), b.dom(), tol)?;
            let ker = crate::linalg::contains(a.ker(), b.ker(), tol)?;
            let ar = lebesgue_decompose(a)?.regular;
            let br = lebesgue_decompose(b)?.regular;
            let reg = dominates(ar.relation(), br.relation(), tol)?.is_some();
            let closed = crate::relation::compose_matrix(&c.matrix, &b.closure())?;
            let incl = containment_residual(a.closure().graph(), closed.graph());
            let ok = dom && ker && reg && incl < IDENTITY_TOL && c.norm() <= 1.0 + 1e-8;
            Ok(Outcome {
                residual: incl,
                ..Outcome::boolean(
                    name,
                    ok,
                    format!("dom {dom}, ker {ker}, regular {reg}, norm {}", c.norm()),
                )
            })
        }
        "transitivity" => {
            arity(name, inputs, 3)?;
            let ab = dominates(&inputs[0], &inputs[1], tol)?.is_some();
            let bc = dominates(&inputs[1], &inputs[2], tol)?.is_some();
            let ac = dominates(&inputs[0], &inputs[2], tol)?.is_some();
            Ok(Outcome::boolean(
                name,
                !(ab && bc) || ac,
                format!("A≺B {ab}, B≺C {bc}, A≺C {ac}"),
            ))
        }
        "link_factorization" => {
            arity(name, inputs, 1)?;
            let t = &inputs[0];
            let reg = lebesgue_decompose(t)?.regular;
            let h = product_star(t)?;
            let root = operator_on_domain(&psd_sqrt_relation(&h).op(), t.dom(), tol)?;
            let u = link_partial_isometry(&reg, &root, tol)?;
            let scale = crate::linalg::op_norm(reg.action()).max(1.0);
            let fac = (&u.matrix * reg.action() - root.action()).amax() / scale;
            let init = u.initial_residual();
            let init_target = u.initial.distance(reg.relation().ran());
            let out = Outcome::measured(name, fac, IDENTITY_TOL);
            let ok = out.passed && init < 1e-7 && init_target < 1e-7 && u.final_residual() < 1e-7;
            Ok(Outcome {
                passed: ok,
                ..out.with_detail(format!(
                    "UᵀU residual {init:e}, initial space gap {init_target:e}, UUᵀ residual {:e}",
                    u.final_residual()
                ))
            })
        }
        "scaling_up" => {
            arity(name, inputs, 1)?;
            let a = PsdRelation::from_relation(&inputs[0])?;
            let rep = monotone_psd_limit(
                &SequenceSpec::scaled(Schedule::N, inputs[0].clone()),
                Direction::Nondecreasing,
                tol,
            )?;
            let h = rep.psd().expect("psd limit");
            let expected = LinearRelation::product(a.ker(), &complement(a.ker()), tol);
            let r = h
                .relation()
                .distance(&expected)
                .max(psd_sqrt_relation(h).dom().distance(a.ker()));
            Ok(Outcome::measured(name, r, LIMIT_TOL)
                .with_detail(format!("converged {}", rep.diagnostics.converged)))
        }
        "scaling_down" => {
            arity(name, inputs, 1)?;
            let a = PsdRelation::from_relation(&inputs[0])?;
            let rep = monotone_psd_limit(
                &SequenceSpec::scaled(Schedule::InvN, inputs[0].clone()),
                Direction::Nonincreasing,
                tol,
            )?;
            let expected = LinearRelation::product(a.dom(), a.mul(), tol);
            let r = rep.psd().expect("psd limit").relation().distance(&expected);
            Ok(Outcome::measured(name, r, LIMIT_TOL))
        }
        "sqrt_n_chain" => {
            arity(name, inputs, 1)?;
            let r = &inputs[0];
            let seq = SequenceSpec::scaled(Schedule::SqrtN, r.clone());
            let rep = nondecreasing_operator_limit(&seq, tol)?;
            let t = rep.operator().expect("operator limit");
            let ker = r.ker();
            let d1 = t.domain().distance(ker);
            let zero = t.action().amax();
            let expected = LinearRelation::product(ker, &complement(ker), tol);
            let d2 = product_star(t.relation())?.relation().distance(&expected);
            let pipe = relation_sequence_pipeline(&seq, tol)?;
            let d3 = pipe.h_infinity().relation().distance(&expected);
            Ok(Outcome::measured(
                name,
                d1.max(zero).max(d2).max(d3),
                LIMIT_TOL,
            ))
        }
        "truncation" => {
            arity(name, inputs, 1)?;
            let a = PsdRelation::from_relation(&inputs[0])?.op();
            Ok(Outcome::measured(
                name,
                truncation_violation(&a, tol)?,
                1e-10,
            ))
        }
        "pipeline" => {
            arity(name, inputs, 1)?;
            let seq = SequenceSpec::scaled(Schedule::SqrtN, inputs[0].clone());
            let rep = relation_sequence_pipeline(&seq, tol)?;
            let out = Outcome::measured(name, rep.norm_residual, LIMIT_TOL);
            let ok = out.passed && rep.star_distance < tol.sub_eq_tol;
            Ok(Outcome {
                passed: ok,
                ..out.with_detail(format!("star distance {:e}", rep.star_distance))
            })
        }
        "nonincreasing" => {
            arity(name, inputs, 1)?;
            let seq = SequenceSpec::scaled(Schedule::InvSqrtN, inputs[0].clone());
            let rep = nonincreasing_relation_check(&seq, tol)?;
            let r = rep.star_distance.max(rep.factorization_residual);
            Ok(Outcome::measured(name, r, 1e-7))
        }
        "monotone_norm" => {
            arity(name, inputs, 1)?;
            let seq = SequenceSpec::Explicit(inputs.to_vec());
            let rep = nondecreasing_operator_limit(&seq, tol)?;
            let t = rep.operator().expect("operator limit");
            let mut worst = 0.0f64;
            for phi in t.domain().basis().column_iter() {
                let phi = phi.clone_owned();
                let target = t.apply(&phi).norm();
                let mut prev = 0.0;
                for term in inputs {
                    let v = (term.regular_action() * &phi).norm();
                    worst = worst.max(prev - v - 1e-10).max(0.0);
                    prev = v;
                }
                worst = worst.max((prev - target).abs());
            }
            Ok(Outcome::measured(name, worst, LIMIT_TOL))
        }
        "upper_bound" => {
            arity(name, inputs, 2)?;
            let (terms, bound) = inputs.split_at(inputs.len() - 1);
            let seq = SequenceSpec::Explicit(terms.to_vec());
            let rep = nondecreasing_operator_limit_bounded(&seq, &bound[0], tol)?;
            let ok = rep.upper_bound.is_some_and(|c| c.norm() <= 1.0 + 1e-8);
            Ok(Outcome::boolean(name, ok, ""))
        }
        "resolvent_roundtrip" => {
            arity(name, inputs, 1)?;
            let h = PsdRelation::from_relation(&inputs[0])?;
            let back = relation_from_resolvent(&resolvent(&h), tol)?;
            Ok(Outcome::measured(
                name,
                back.relation().distance(h.relation()),
                LIMIT_TOL,
            ))
        }
        "sandwich" => {
            arity(name, inputs, 1)?;
            let seq = SequenceSpec::scaled(Schedule::N, inputs[0].clone());
            let rep = monotone_psd_limit(&seq, Direction::Nondecreasing, tol)?;
            let h = rep.psd().expect("psd limit");
            let ok = [1u64, 4, 64, 1 << 20]
                .iter()
                .map(|&n| seq.evaluate_psd(n).map(|hn| psd_leq(&hn, h, tol)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .all(|b| b);
            Ok(Outcome::boolean(name, ok, ""))
        }
        other => Err(RelError::InvalidInput(format!(
            "unknown invariant {other:?}"
        ))),
    }
}

/// Worst normalized pairing defect `(g', f) − (g, f')` over graph bases of
/// `T` and `T*`.
pub fn pairing_residual(t: &LinearRelation) -> f64 {
    let ts = adjoint(t);
    let (h, k) = (t.dim_h(), t.dim_k());
    let g = t.graph().basis();
    let s = ts.graph().basis();
    let mut worst = 0.0f64;
    for a in g.column_iter() {
        let (f, fp) = (a.rows(0, h), a.rows(h, k));
        for b in s.column_iter() {
            let (gg, gp) = (b.rows(0, k), b.rows(k, h));
            let defect = (gp.dot(&f) - gg.dot(&fp)).abs();
            let scale = (f.norm() + fp.norm()) * (gg.norm() + gp.norm());
            if scale > 0.0 {
                worst = worst.max(defect / scale);
            }
        }
    }
    worst
}

/// Worst `|(f', f) − ‖H_op^{1/2} f‖²|` over a graph basis of `H`.
pub fn square_root_residual(h: &PsdRelation, tol: &Tol) -> Result<f64> {
    let n = h.dim();
    let root = psd_sqrt(&h.op(), tol)?;
    let scale = h.eigenvalues().first().copied().unwrap_or(0.0).max(1.0);
    let mut worst = 0.0f64;
    for col in h.relation().graph().basis().column_iter() {
        let f: Vector = col.rows(0, n).clone_owned();
        let fp: Vector = col.rows(n, n).clone_owned();
        let lhs = fp.dot(&f);
        let rhs = (&root * &f).norm_squared();
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}

/// Largest decrease of `k ↦ (A_k φ, φ)` over eigenvectors and random-free
/// test vectors, plus the deviation from `(Aφ, φ)` once `k ≥ λ_max`.
pub fn truncation_violation(a: &Matrix, tol: &Tol) -> Result<f64> {
    let n = a.nrows();
    let (vals, _) = crate::linalg::checked_psd_eigen(a, tol)?;
    let top = vals.first().copied().unwrap_or(0.0);
    let kmax = top.ceil().max(1.0) as usize + 1;
    let mut probes: Vec<Vector> = (0..n)
        .map(|i| Matrix::identity(n, n).column(i).clone_owned())
        .collect();
    probes.push(Vector::from_element(n, 1.0));
    let mut worst = 0.0f64;
    for phi in &probes {
        let full = (a * phi).dot(phi);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=kmax {
            let ak = spectral_truncation(a, k as f64, tol)?;
            let v = (&ak * phi).dot(phi);
            if prev.is_finite() {
                worst = worst.max(prev - v);
            }
            prev = v;
            if k as f64 >= top && v != full {
                worst = worst.max((v - full).abs().max(f64::MIN_POSITIVE));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_relation, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn battery_passes_on_random_relations() {
        let tol = Tol::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let t = gaussian_relation(&mut rng, 3, 2, &tol);
            for name in RELATION_CHECKS {
                let out = check(name, std::slice::from_ref(&t), &tol).unwrap();
                assert!(out.passed, "{out:?}");
            }
        }
    }

    #[test]
    fn limit_checks_on_random_psd() {
        let tol = Tol::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let a = random_psd(&mut rng, 3, true, true, &tol);
            let rel = [a.relation().clone()];
            for name in [
                "scaling_up",
                "scaling_down",
                "truncation",
                "resolvent_roundtrip",
                "sandwich",
            ] {
                let out = check(name, &rel, &tol).unwrap();
                assert!(out.passed, "{out:?}");
            }
        }
    }

    #[test]
    fn unknown_invariant_is_input_error() {
        let err = check("nope", &[], &Tol::default()).unwrap_err();
        assert!(err.is_input_error());
    }
}
