//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured time. Tolerances and thresholds are pinned here in code.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use binetcalc_core::canonical::{canonicalize, prove_identity, ProofVerdict};
use binetcalc_core::corpus::{load_corpus_dir, run_corpus, run_entry};
use binetcalc_core::expr::{Expr, Identity};
use binetcalc_core::family::{FamilyEnv, FamilyRole};
use binetcalc_core::numeric::{derivative_fact_errors, numeric_verify};
use binetcalc_core::parser::parse_identity;
use binetcalc_core::pipeline::{run_derive, ComponentKind, DeriveConfig};
use binetcalc_core::quad::QuadCtx;
use binetcalc_core::rational::{rat, ratio, Rational};
use binetcalc_core::seedpoly::SeedPoly;
use binetcalc_core::sequence::{BinetPair, SequenceSpec};
use binetcalc_core::verify::{verify_instances, Grid};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn golden_env() -> FamilyEnv {
    FamilyEnv::standard()
}

fn derive_cfg(wrt: &str, component: ComponentKind) -> DeriveConfig {
    DeriveConfig {
        wrt: wrt.into(),
        component,
        shift: None,
        pivot: None,
        combine: None,
        heavy_simplify: false,
    }
}

/// lhs - rhs of one identity equals lhs - rhs of the other, decided by the
/// canonical prover.
fn canonically_equivalent(a: &Identity, b: &Identity, env: &FamilyEnv) -> bool {
    let diff = Expr::sub(a.difference(), b.difference());
    match canonicalize(&diff, &a.constraints, env) {
        Ok(form) => form.cases.iter().all(|(_, p)| p.is_zero()),
        Err(_) => false,
    }
}

#[test]
fn criterion_1_first_component_reproduction() {
    let start = Instant::now();
    let mut env = golden_env();
    let id = parse_identity("F[2k] = L[k]*F[k]", &env).unwrap();
    let out = run_derive(&id, &derive_cfg("k", ComponentKind::Real), &mut env, None, 30).unwrap();
    assert!(out.verdict.is_positive(), "derived identity must be proved");
    let target = parse_identity("2*L[2k] = L[k]^2 + 5*F[k]^2", &env).unwrap();
    assert!(
        canonically_equivalent(&out.identity, &target, &env),
        "canonical difference to the double-angle companion must be zero"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "runtime {elapsed:?} exceeds 1 s");
    println!("ACCEPTANCE 1: PASS first-component reproduction ({elapsed:?})");
}

#[test]
fn criterion_2_second_component_reproduction() {
    // exact sigma-power form
    let start = Instant::now();
    let mut env = golden_env();
    let id = parse_identity("F[2k] = L[k]*F[k]", &env).unwrap();
    let out = run_derive(&id, &derive_cfg("k", ComponentKind::Imag), &mut env, None, 30).unwrap();
    assert_eq!(out.output, "2*beta^(k) = L[k] - sqrtD*F[k]");
    assert!(out.verdict.is_positive());
    let t1 = start.elapsed();
    assert!(t1.as_secs_f64() < 1.0, "runtime {t1:?} exceeds 1 s");

    // recombination pipeline on the sum of consecutive squares
    let start2 = Instant::now();
    let mut env = golden_env();
    let id = parse_identity("F[k+1]^2 + F[k]^2 = F[2k+1]", &env).unwrap();
    let mut cfg = derive_cfg("k", ComponentKind::Imag);
    cfg.combine = Some("G".into());
    let out = run_derive(&id, &cfg, &mut env, None, 30).unwrap();
    assert_eq!(out.output, "F[k+1]*G[s+1] + F[k]*G[s] = G[k+s+1]");
    assert!(matches!(out.verdict, binetcalc_core::pipeline::Verdict::Proved { .. }));
    let t2 = start2.elapsed();
    assert!(t2.as_secs_f64() < 1.0, "runtime {t2:?} exceeds 1 s");
    println!("ACCEPTANCE 2: PASS second-component reproduction ({t1:?} + {t2:?})");
}

#[test]
fn criterion_3_prover_corpus() {
    let start = Instant::now();
    let entries = load_corpus_dir(&corpus_dir()).unwrap();
    let prove_entries: Vec<_> = entries.iter().filter(|e| e.mode() == "prove").collect();
    assert!(
        prove_entries.len() >= 25,
        "need at least 25 prove entries, have {}",
        prove_entries.len()
    );
    for required in [
        "gib.howard",         // eq with three free indices
        "gib.howard_two_family",
        "gib.docagne_ext",
        "gib.catalan_ext",
        "gib.candido_two_family",
        "gib.triple_three_family",
        "gib.gelin_two_family",
        "hor.recombination",
        "fib.mult_lucas",
        "fib.mult_lucas_diff",
        "hor.mult_companion",
    ] {
        assert!(
            prove_entries.iter().any(|e| e.id == required),
            "mandated prove entry {required} missing"
        );
    }
    let mut failures = Vec::new();
    for e in &prove_entries {
        let r = run_entry(e);
        if !r.passed() {
            failures.push(format!("{}: {:?}", e.id, r.detail));
        }
    }
    assert!(failures.is_empty(), "prover corpus failures: {failures:#?}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "prover corpus took {elapsed:?} (limit 30 s)");
    println!(
        "ACCEPTANCE 3: PASS prover corpus, {} sum-free identities proved ({elapsed:?})",
        prove_entries.len()
    );
}

#[test]
fn criterion_4_instantiation_corpus() {
    let start = Instant::now();
    let entries = load_corpus_dir(&corpus_dir()).unwrap();
    let verify_entries: Vec<_> = entries.iter().filter(|e| e.mode() == "verify").collect();
    for required in [
        "sum.hoggatt_quartic",
        "sum.hoggatt_cubic_l",
        "sum.hoggatt_square",
        "sum.hoggatt_linear",
        "sum.hoggatt_lucas",
        "sum.long",
        "sum.jennings",
        "sum.melham",
        "sum.melham_two_family",
        "sum.rabinowitz",
        "sum.rabinowitz_lucas",
    ] {
        assert!(
            verify_entries.iter().any(|e| e.id == required),
            "mandated verify entry {required} missing"
        );
    }
    let mut failures = Vec::new();
    for e in &verify_entries {
        let r = run_entry(e);
        if !r.passed() {
            failures.push(format!("{}: {:?}", e.id, r.detail));
        }
    }
    assert!(failures.is_empty(), "instantiation corpus failures: {failures:#?}");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "instantiation corpus took {elapsed:?} (limit 60 s)");
    println!(
        "ACCEPTANCE 4: PASS instantiation corpus, {} summation identities verified exactly ({elapsed:?})",
        verify_entries.len()
    );
}

#[test]
fn criterion_5_analytic_facts() {
    let start = Instant::now();
    // derivative facts to 1e-12 over j in [-10, 10] at 30 digits
    for j in -10..=10 {
        let errs = derivative_fact_errors(j, 30).unwrap();
        for (i, e) in errs.iter().enumerate() {
            assert!(
                *e < 1e-12,
                "derivative fact {i} at j={j}: error {e} exceeds 1e-12"
            );
        }
    }
    let env = golden_env();
    // arctan telescoping identity
    let id = parse_identity(
        "arctan(1/F[2k+1]) = arctan(1/F[2k]) - arctan(1/F[2k+2])",
        &env,
    )
    .unwrap();
    let r = numeric_verify(&id, 30, &Grid::empty().with_range("k", 1, 8), &env).unwrap();
    assert!(r.all_pass(), "{r:?}");
    // even-m arctan identity on a branch-safe grid
    let mut id = parse_identity(
        "arctan(F[2m]/F[2k+2m-1]) = arctan(L[m]/L[2k+m-1]) - arctan(L[m]/L[2k+3m-1])",
        &env,
    )
    .unwrap();
    id.constraints
        .push(binetcalc_core::expr::Constraint::parse("m even").unwrap());
    let r = numeric_verify(&id, 30, &Grid::empty().with_range("m", 0, 4).with_range("k", 1, 5), &env).unwrap();
    assert!(r.all_pass(), "{r:?}");
    // the derived rational identity: numerically and exactly
    let id = parse_identity(
        "L[2k+1]/(F[2k+1]^2 + 1) = L[2k]/(F[2k]^2 + 1) - L[2k+2]/(F[2k+2]^2 + 1)",
        &env,
    )
    .unwrap();
    let r = numeric_verify(&id, 30, &Grid::empty().with_range("k", 1, 8), &env).unwrap();
    assert!(r.all_pass(), "{r:?}");
    assert!(prove_identity(&id, &env).unwrap().is_proved());
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 5: PASS analytic facts at 30 digits, tolerance 1e-12 ({elapsed:?})");
}

#[test]
fn criterion_6_structural_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20260809);
    // combination lemma and Binet reconstruction: 100 random (p, q, seeds)
    let mut done = 0;
    while done < 100 {
        let p = ratio(rng.gen_range(-8..=8), rng.gen_range(1..=3));
        let q = ratio(rng.gen_range(-8..=8), rng.gen_range(1..=2));
        if p == rat(0) || q == rat(0) {
            continue;
        }
        let Ok(ctx) = QuadCtx::for_recurrence(&p, &q) else { continue };
        let seed0 = SeedPoly::constant(ctx.from_rational(ratio(rng.gen_range(-9..=9), rng.gen_range(1..=3))));
        let seed1 = SeedPoly::constant(ctx.from_rational(ratio(rng.gen_range(-9..=9), rng.gen_range(1..=3))));
        let spec = SequenceSpec::new("W", FamilyRole::Horadam, p, q, &ctx, seed0, seed1).unwrap();
        let BinetPair { a, b } = spec.binet_coefficients();
        for j in -8..=8 {
            // lemma_combination asserts A tau^j - B sigma^j internally
            let lhs = spec.lemma_combination(j);
            let rhs = a
                .scale(&spec.tau().pow(j).unwrap())
                .sub(&b.scale(&spec.sigma().pow(j).unwrap()));
            assert_eq!(lhs, rhs);
            assert_eq!(spec.term_at(j), spec.binet_term(j), "Binet reconstruction at {j}");
        }
        done += 1;
    }
    // conjugation is a field automorphism: 1e4 random values
    let ctx = QuadCtx::golden();
    let rand_q = |rng: &mut ChaCha8Rng| {
        ctx.from_parts(
            ratio(rng.gen_range(-50..=50), rng.gen_range(1..=9)),
            ratio(rng.gen_range(-50..=50), rng.gen_range(1..=9)),
        )
    };
    for _ in 0..10_000 {
        let x = rand_q(&mut rng);
        let y = rand_q(&mut rng);
        assert_eq!(x.mul(&y).conj(), x.conj().mul(&y.conj()));
        assert_eq!(x.add(&y).conj(), x.conj().add(&y.conj()));
        assert_eq!(x.conj().conj(), x);
        if !x.is_zero() {
            assert!(x.mul(&x.inv().unwrap()).is_one());
        }
    }
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 6: PASS structural invariants, 100 parameterizations x j in [-8,8], 10^4 conjugation samples ({elapsed:?})");
}

#[test]
fn criterion_7_negative_controls() {
    let start = Instant::now();
    let entries = load_corpus_dir(&corpus_dir()).unwrap();
    let prove_entries: Vec<_> = entries
        .iter()
        .filter(|e| e.mode() == "prove" && e.samples.is_empty() && !e.has_tag("sigma"))
        .collect();
    assert!(!prove_entries.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut count = 0;
    let mut i = 0;
    while count < 100 {
        let entry = prove_entries[i % prove_entries.len()];
        i += 1;
        let env = entry.build_env(&entry.p, &entry.q).unwrap();
        let good = parse_identity(&entry.identity, &env)
            .unwrap()
            .with_constraints(entry.constraints.clone());
        // perturb: add a nonzero constant to the left side; provably falsifying
        let c: i64 = loop {
            let c = rng.gen_range(-7..=7);
            if c != 0 {
                break c;
            }
        };
        let mut bad = good.clone();
        bad.lhs = Expr::add2(bad.lhs, Expr::int(c));
        match prove_identity(&bad, &env).unwrap() {
            ProofVerdict::Refuted { .. } => {}
            other => panic!("perturbed {} not refuted: {other:?}", entry.id),
        }
        // the verifier finds a concrete counterexample
        let grid = Grid::default_for(&bad);
        let report = verify_instances(&bad, &grid, &env).unwrap();
        assert!(report.fail > 0, "no counterexample for perturbed {}", entry.id);
        assert!(report.first_counterexample.is_some());
        count += 1;
    }
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 7: PASS 100 perturbed identities refuted and falsified ({elapsed:?})");
}

#[test]
fn criterion_8_determinism() {
    let start = Instant::now();
    let entries = load_corpus_dir(&corpus_dir()).unwrap();
    let strip_elapsed = |v: &mut serde_json::Value| {
        fn walk(v: &mut serde_json::Value) {
            match v {
                serde_json::Value::Object(map) => {
                    map.remove("elapsed_ms");
                    for (_, x) in map.iter_mut() {
                        walk(x);
                    }
                }
                serde_json::Value::Array(xs) => {
                    for x in xs {
                        walk(x);
                    }
                }
                _ => {}
            }
        }
        walk(v)
    };
    let run = || {
        let report = run_corpus(&entries, None).unwrap();
        let mut v = serde_json::to_value(&report).unwrap();
        strip_elapsed(&mut v);
        v
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "two corpus runs must serialize identically modulo timing");
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 8: PASS byte-identical corpus JSON modulo timing fields ({elapsed:?})");
}

/// The classical tau+sigma = p, tau*sigma = q relations over randomized
/// parameters (part of the exact-arithmetic invariants).
#[test]
fn criterion_6b_root_relations_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut done = 0;
    while done < 200 {
        let p = ratio(rng.gen_range(-9..=9), rng.gen_range(1..=4));
        let q = ratio(rng.gen_range(-9..=9), rng.gen_range(1..=4));
        if p == rat(0) || q == rat(0) {
            continue;
        }
        let Ok(ctx) = QuadCtx::for_recurrence(&p, &q) else { continue };
        let tau = ctx.tau(&p);
        let sigma = ctx.sigma(&p);
        assert_eq!(tau.add(&sigma), ctx.from_rational(p.clone()));
        assert_eq!(tau.mul(&sigma), ctx.from_rational(q.clone()));
        assert_eq!(tau.sub(&sigma), ctx.radical());
        done += 1;
    }
    // q = -1 reproduces the golden relations
    let ctx = QuadCtx::golden();
    let alpha = ctx.tau(&rat(1));
    let beta = ctx.sigma(&rat(1));
    assert_eq!(alpha.mul(&beta), ctx.from_int(-1));
    assert_eq!(alpha.add(&beta), ctx.one());
    println!("ACCEPTANCE 6b: PASS root relations over 200 random parameter pairs");
}

/// Parity completeness: an identity holding only for even m must not be
/// provable unrestricted, and wrongly restricting a false identity must not
/// rescue it.
#[test]
fn criterion_3b_parity_completeness() {
    let env = golden_env();
    // valid for all m
    let id = parse_identity("L[k+m] + (-1)^m*L[k-m] = L[m]*L[k]", &env).unwrap();
    assert!(prove_identity(&id, &env).unwrap().is_proved());
    // drop the (-1)^m: true only for even m
    let only_even = parse_identity("L[k+m] + L[k-m] = L[m]*L[k]", &env).unwrap();
    assert!(!prove_identity(&only_even, &env).unwrap().is_proved());
    let mut restricted = only_even.clone();
    restricted.constraints.push(
        binetcalc_core::expr::Constraint::Parity("m".into(), binetcalc_core::expr::Parity::Even),
    );
    assert!(prove_identity(&restricted, &env).unwrap().is_proved());
    // restricting the wrong identity still fails
    let wrong = parse_identity("L[k+m] + (-1)^m*L[k-m] = 5*F[m]*F[k]", &env).unwrap();
    let mut wrong_restricted = wrong.clone();
    wrong_restricted.constraints.push(
        binetcalc_core::expr::Constraint::Parity("m".into(), binetcalc_core::expr::Parity::Even),
    );
    assert!(!prove_identity(&wrong_restricted, &env).unwrap().is_proved());
    println!("ACCEPTANCE 3b: PASS parity case-splits are complete and honest");
}

/// Prover/verifier agreement: every sum-free prove-mode corpus identity also
/// passes exact instantiation; a disagreement is a build-breaking defect.
#[test]
fn criterion_3c_prover_verifier_agreement() {
    let start = Instant::now();
    let entries = load_corpus_dir(&corpus_dir()).unwrap();
    let mut checked = 0;
    for e in entries.iter().filter(|e| e.mode() == "prove") {
        for (p, q) in e.parameter_sets() {
            let Ok(env) = e.build_env(&p, &q) else { continue };
            let id = parse_identity(&e.identity, &env)
                .unwrap()
                .with_constraints(e.constraints.clone());
            let proved = match prove_identity(&id, &env) {
                Ok(v) => v.is_proved(),
                Err(_) => continue,
            };
            // keep 4-index grids affordable: shrink to [-3,3] above 3 indices
            let mut grid = Grid::default_for(&id);
            if id.free_indices.len() >= 4 {
                for v in id.free_indices.iter() {
                    grid = grid.with_range(v, -3, 3);
                }
            }
            let report = verify_instances(&id, &grid, &env).unwrap();
            assert!(
                proved && report.fail == 0,
                "prover/verifier disagreement on {} at p={p}, q={q}: proved={proved}, fails={}",
                e.id,
                report.fail
            );
            checked += 1;
        }
    }
    assert!(checked >= 25);
    let elapsed = start.elapsed();
    println!("ACCEPTANCE 3c: PASS prover and verifier agree on {checked} sum-free runs ({elapsed:?})");
}
