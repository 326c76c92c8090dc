//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; the assertions are the gate either way.

use std::process::Command;
use std::time::Instant;

use qtheta_core::blocks::{poch_finite, theta_partial_spec, Param, SumRange, SumSpec};
use qtheta_core::catalog::{check_identity_struct, Catalog};
use qtheta_core::expr::eval_expr;
use qtheta_core::laurent::{rat, rat_int, ExpVec, LaurentPoly, Rational, Var};
use qtheta_core::series::{Monomial, QSeries};

fn verdict(name: &str, ok: bool) {
    println!(
        "acceptance {:44} {}",
        name,
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "acceptance criterion failed: {name}");
}

fn qtheta() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qtheta"))
}

// 1. Full catalog at the registered default orders (40, or 24 for the
// specialized transformations) exits 0 with zero coefficient mismatches.
#[test]
fn criterion_1_full_catalog_pass() {
    let cat = Catalog::standard();
    let reduced = [
        "heine1-spec",
        "gr-product-spec",
        "sears-carlitz-nt-spec",
        "jane-spec",
        "octonic",
        "quad-transform",
    ];
    for e in cat.entries() {
        let expect = if reduced.contains(&e.id.as_str()) {
            24
        } else {
            40
        };
        assert_eq!(
            e.default_order, expect,
            "registered default order of {}",
            e.id
        );
    }

    let t0 = Instant::now();
    let out = qtheta()
        .args(["check", "all", "--format", "json"])
        .output()
        .expect("binary runs");
    let elapsed = t0.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut count = 0;
    for line in stdout.lines() {
        let r: qtheta_core::report::Report = serde_json::from_str(line).unwrap();
        assert_eq!(
            r.status,
            qtheta_core::report::Status::Pass,
            "{} failed: {:?}",
            r.id,
            r.mismatch
        );
        count += 1;
    }
    println!(
        "  checked {count} identities in {:.1}s (target: five minutes)",
        elapsed.as_secs_f64()
    );
    verdict(
        "1 full catalog at default orders, exit 0",
        out.status.code() == Some(0) && count >= 24,
    );
}

// 2. The difference theorem passes at order 60 and its first five
// coefficients match the hand-derived prefix: the uncleared sides begin
// -1 + (x + y) q + 0 q^2 - (x^2 + xy + y^2) q^3 + 0 q^4, so the stored
// (x - y)-cleared sides carry (x - y) times that.
#[test]
fn criterion_2_difference_theorem_focus() {
    let cat = Catalog::standard();
    let outcome = cat.check("main-difference", 60).unwrap();
    assert!(outcome.passed(), "mismatch: {:?}", outcome.mismatch);

    let x = LaurentPoly::var(Var::X);
    let y = LaurentPoly::var(Var::Y);
    let x_minus_y = x.sub(&y);
    // hand-derived prefix of the published form (division by x - y):
    // q^0: -1, q^1: x + y, q^2: 0, q^3: -(x^2 + xy + y^2), q^4: 0
    let h = [
        LaurentPoly::constant(rat_int(-1)),
        x.add(&y),
        LaurentPoly::zero(),
        "-x^2 - x * y - y^2".parse().unwrap(),
        LaurentPoly::zero(),
    ];
    let ident = cat.get("main-difference").unwrap();
    let lhs = eval_expr(&ident.lhs, 4).unwrap();
    let rhs = eval_expr(&ident.rhs, 4).unwrap();
    let mut ok = true;
    for (e, href) in h.iter().enumerate() {
        let want = x_minus_y.mul(href);
        ok &= lhs.coeff(e as i64).unwrap() == want;
        ok &= rhs.coeff(e as i64).unwrap() == want;
    }
    verdict("2 difference theorem at order 60 + prefix", ok);
}

// 3. Derivation-chain closure: the index recurrence, the sum-side
// recurrence, and the vanishing-kernel forms all pass at order 40,
// mechanically confirming both equivalence arguments.
#[test]
fn criterion_3_derivation_chain() {
    let cat = Catalog::standard();
    let mut ok = true;
    for id in ["recurrence-xy", "rhs-recurrence", "qdiff-F", "qdiff-F-eq"] {
        let r = cat.check(id, 40).unwrap();
        if !r.passed() {
            eprintln!("{id} failed: {:?}", r.mismatch);
            ok = false;
        }
    }
    verdict("3 derivation chain closure at order 40", ok);
}

// 4. The factorial lemma families hold as exact polynomial identities for
// every n <= 10 with formal variables: verified beyond the top q-degree
// (190 for the splitting lemma), so the truncated check is the whole
// polynomial identity.
#[test]
fn criterion_4_lemma_families_exact() {
    let cat = Catalog::standard();
    let split = cat.check("lemma-poch-split", 200).unwrap();
    let diff = cat.check("lemma-diff-poch", 140).unwrap();

    // and the splitting lemma per n directly on the builders
    let mut per_n = true;
    for n in 0..=10u32 {
        let order = 200;
        let lhs = poch_finite(&Param::Mono(Monomial::var_pow(Var::X, 1)), 2 * n, 1, order);
        let rhs = poch_finite(&Param::PairSqrt(Monomial::var_pow(Var::X, 1)), n, 1, order)
            .mul(&poch_finite(
                &Param::PairSqrt(Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, 1))),
                n,
                1,
                order,
            ))
            .unwrap();
        per_n &= lhs
            .truncated(rhs.order())
            .diff_report(&rhs)
            .unwrap()
            .is_none();
    }
    verdict(
        "4 lemma families exact for all n <= 10",
        split.passed() && diff.passed() && per_n,
    );
}

// 5. The two encodings of the partial-theta product (direct and 4phi3)
// normalize to syntactically identical sum-side normal forms.
#[test]
fn criterion_5_normal_form_equivalence() {
    let cat = Catalog::standard();
    let a = cat.get("aw-product").unwrap();
    let b = cat.get("aw-4phi3").unwrap();
    verdict("5 normal forms syntactically identical", a.rhs == b.rhs);
}

// 6. Dual-path oracle: windowed brute force agrees with exact mode on
// every catalog identity at order 12 with window 28.
#[test]
fn criterion_6_dual_path_oracle() {
    let t0 = Instant::now();
    let out = qtheta()
        .args([
            "oracle", "all", "--order", "12", "--window", "28", "--format", "json",
        ])
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    let mut count = 0;
    let mut ok = out.status.code() == Some(0);
    for line in stdout.lines() {
        let r: qtheta_core::report::OracleReport = serde_json::from_str(line).unwrap();
        if r.status != qtheta_core::report::Status::Pass {
            eprintln!("oracle divergence on {}: {:?}", r.id, r.checks);
            ok = false;
        }
        count += 1;
    }
    println!(
        "  oracle cross-checked {count} identities in {:.1}s",
        t0.elapsed().as_secs_f64()
    );
    verdict("6 oracle agrees at order 12, window 28", ok && count >= 24);
}

// 7. Specialization sanity: substituting into registered identities
// reproduces the expected targets, each passing at order 30.
#[test]
fn criterion_7_specialization_sanity() {
    let cat = Catalog::standard();
    let mut ok = true;

    // y = q/x collapses the two-variable sum formula to the triple product
    let sub = cat
        .substituted(
            "warnaar-sum",
            &[(
                Var::Y,
                Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, -1)),
            )],
            None,
        )
        .unwrap();
    ok &= check_identity_struct(&sub, 30).unwrap().passed();
    let jtp = cat.get("jtp").unwrap();
    for (a, b) in [(&sub.lhs, &jtp.lhs), (&sub.rhs, &jtp.rhs)] {
        let sa = eval_expr(a, 30).unwrap();
        let sb = eval_expr(b, 30).unwrap();
        ok &= sa.diff_report(&sb).unwrap().is_none();
    }

    // y = x/q gives the (1 - x/q)-cleared shifted representation
    let sub = cat
        .substituted(
            "warnaar-sum",
            &[(
                Var::Y,
                Monomial::new(rat_int(1), -1, ExpVec::var(Var::X, 1)),
            )],
            None,
        )
        .unwrap();
    ok &= check_identity_struct(&sub, 30).unwrap().passed();
    let ps = cat.get("ptheta-shift").unwrap();
    for (a, b) in [(&sub.lhs, &ps.lhs), (&sub.rhs, &ps.rhs)] {
        let sa = eval_expr(a, 30).unwrap();
        let sb = eval_expr(b, 30).unwrap();
        ok &= sa.diff_report(&sb).unwrap().is_none();
    }

    // y = -x gives the even/odd collapse feeding the double-square series
    let sub = cat
        .substituted(
            "main-difference",
            &[(
                Var::Y,
                Monomial::new(rat_int(-1), 0, ExpVec::var(Var::X, 1)),
            )],
            None,
        )
        .unwrap();
    ok &= check_identity_struct(&sub, 30).unwrap().passed();

    verdict("7 substitution derivations at order 30", ok);
}

// 8. Kernel property batteries, 1000 random cases each: ring axioms,
// truncation soundness, inversion round-trip, substitution homomorphism.
#[test]
fn criterion_8_kernel_properties() {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};

    const CASES: u32 = 1000;

    fn runner() -> TestRunner {
        TestRunner::new(Config {
            cases: CASES,
            failure_persistence: None,
            ..Config::default()
        })
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=9).prop_map(|(n, d)| rat(n, d))
    }

    fn arb_expvec() -> impl Strategy<Value = ExpVec> {
        proptest::array::uniform4(-5i32..=5).prop_map(ExpVec)
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((arb_expvec(), arb_rational()), 0..8)
            .prop_map(LaurentPoly::from_terms)
    }

    fn arb_series() -> impl Strategy<Value = QSeries> {
        proptest::collection::vec((-3i64..=8, arb_poly()), 0..6)
            .prop_map(|terms| QSeries::from_terms(8, terms))
    }

    fn arb_monomial() -> impl Strategy<Value = Monomial> {
        (
            arb_rational(),
            -2i64..=3,
            proptest::array::uniform4(-2i32..=2),
        )
            .prop_map(|(c, q, ev)| {
                let c = if num_traits::Zero::is_zero(&c) {
                    rat_int(1)
                } else {
                    c
                };
                Monomial::new(c, q, ExpVec(ev))
            })
    }

    // ---- ring axioms --------------------------------------------------
    runner()
        .run(&(arb_poly(), arb_poly(), arb_poly()), |(p, q, r)| {
            prop_assert_eq!(p.add(&q), q.add(&p));
            prop_assert_eq!(p.add(&q).add(&r), p.add(&q.add(&r)));
            prop_assert_eq!(p.mul(&q), q.mul(&p));
            prop_assert_eq!(p.mul(&q).mul(&r), p.mul(&q.mul(&r)));
            prop_assert_eq!(p.mul(&q.add(&r)), p.mul(&q).add(&p.mul(&r)));
            prop_assert_eq!(p.add(&LaurentPoly::zero()), p.clone());
            prop_assert_eq!(p.mul(&LaurentPoly::one()), p.clone());
            // canonical-form uniqueness: reprinting reparses identically
            let printed = p.to_string();
            prop_assert_eq!(printed.parse::<LaurentPoly>().unwrap(), p.clone());
            Ok(())
        })
        .unwrap();
    println!("  ring axioms + canonical form: {CASES} cases");

    // ---- truncation soundness -----------------------------------------
    runner()
        .run(&(arb_series(), arb_series(), 0i64..=6), |(a, b, m)| {
            let full = a.mul(&b).unwrap();
            prop_assume!(m <= full.order());
            // recompute with inputs truncated just enough to deliver order m
            let ta = a.truncated(m - b.lo());
            let tb = b.truncated(m - a.lo());
            let direct = ta.mul(&tb).unwrap();
            prop_assert!(direct.order() >= m);
            prop_assert!(full
                .truncated(m)
                .diff_report(&direct.truncated(m))
                .unwrap()
                .is_none());
            let s_full = a.add(&b).unwrap();
            let s_direct = a.truncated(m).add(&b.truncated(m)).unwrap();
            prop_assert!(s_full
                .truncated(m)
                .diff_report(&s_direct)
                .unwrap()
                .is_none());
            Ok(())
        })
        .unwrap();
    // sums: evaluating high and truncating equals evaluating low directly
    runner()
        .run(&(arb_monomial(), 1i64..=6), |(m, n2)| {
            let spec = theta_partial_spec(&m);
            let hi = qtheta_core::blocks::sum_eval(&spec, n2 + 6).unwrap();
            let lo = qtheta_core::blocks::sum_eval(&spec, n2).unwrap();
            prop_assert!(hi.truncated(n2).diff_report(&lo).unwrap().is_none());
            Ok(())
        })
        .unwrap();
    println!("  truncation soundness: {CASES} cases x 2 batteries");

    // ---- inversion round-trip ------------------------------------------
    runner()
        .run(
            &(arb_monomial(), arb_series(), 1i64..=8),
            |(lead, rest, k)| {
                // build a unit-leading series: lead * (1 + q^4 * rest); the
                // shift keeps the random part strictly above the unit term
                let one = QSeries::one(8);
                let tail = rest.mul_monomial(&Monomial::q_pow(4)).truncated(8);
                let a = one.add(&tail).unwrap().mul_monomial(&lead);
                let inv = a.invert(k).unwrap();
                let prod = a.mul(&inv).unwrap();
                prop_assert!(prod
                    .diff_report(&QSeries::one(prod.order()))
                    .unwrap()
                    .is_none());
                Ok(())
            },
        )
        .unwrap();
    // unit inversion is an involution on monomials
    runner()
        .run(&arb_monomial(), |m| {
            let p = LaurentPoly::term(m.coef.clone(), m.vars);
            let back = p.invert_unit().unwrap().invert_unit().unwrap();
            prop_assert_eq!(back, p);
            Ok(())
        })
        .unwrap();
    println!("  inversion round-trip: {CASES} cases x 2 batteries");

    // ---- substitution homomorphism ---------------------------------------
    // The engine's post-substitution order bound stands in the stored
    // window's degree profile for the unknown tail; for generated inputs the
    // true profile is known, so the comparison happens on the bound derived
    // from the inputs themselves.
    fn worst_degree(s: &QSeries, var: Var) -> i64 {
        s.iter()
            .map(|(_, p)| i64::from(p.max_abs_exp(var)))
            .max()
            .unwrap_or(0)
    }
    runner()
        .run(
            &(arb_series(), arb_series(), arb_monomial(), 0usize..=3),
            |(a, b, m, vi)| {
                let var = Var::ALL[vi];
                // keep the substitution monomial free of the substituted
                // variable so iterated replacement questions do not arise
                let mut mv = m.vars;
                mv.0[var.index()] = 0;
                let m = Monomial::new(m.coef.clone(), m.q_exp, mv);
                let ka = worst_degree(&a, var);
                let kb = worst_degree(&b, var);

                let sum = a.add(&b).unwrap();
                let l = sum.subst_var(var, &m);
                let ra = a.subst_var(var, &m);
                let rb = b.subst_var(var, &m);
                if let (Ok(l), Ok(ra), Ok(rb)) = (l, ra, rb) {
                    let r = ra.add(&rb).unwrap();
                    let safe = a.order().min(b.order()) - m.q_exp.abs() * ka.max(kb);
                    let cut = l.order().min(r.order()).min(safe);
                    if cut >= l.lo().max(r.lo()) {
                        prop_assert!(l
                            .truncated(cut)
                            .diff_report(&r.truncated(cut))
                            .unwrap()
                            .is_none());
                    }
                }

                let prod = a.mul(&b).unwrap();
                let l = prod.subst_var(var, &m);
                let ra = a.subst_var(var, &m);
                let rb = b.subst_var(var, &m);
                if let (Ok(l), Ok(ra), Ok(rb)) = (l, ra, rb) {
                    let r = ra.mul(&rb).unwrap();
                    let safe = prod.order() - m.q_exp.abs() * (ka + kb);
                    let cut = l.order().min(r.order()).min(safe);
                    if cut >= l.lo().max(r.lo()) {
                        prop_assert!(l
                            .truncated(cut)
                            .diff_report(&r.truncated(cut))
                            .unwrap()
                            .is_none());
                    }
                }
                Ok(())
            },
        )
        .unwrap();
    println!("  substitution homomorphism: {CASES} cases");

    verdict("8 kernel property batteries (1000 cases each)", true);
}

// Splitting and pair laws over a spread of monomial bases, n <= 10:
// (m)_{2n} = (m; q^2)_n (m q; q^2)_n, and the PairSqrt encoding of the
// right side matches factor for factor.
#[test]
fn splitting_and_pair_laws_diverse_bases() {
    let cases = [
        Monomial::var_pow(Var::X, 1),
        Monomial::new(rat_int(-1), -1, ExpVec::var(Var::X, 1)),
        Monomial::new(rat_int(1), 0, ExpVec([1, 1, 0, 0])),
        Monomial::new(rat(3, 2), 2, ExpVec([0, 2, 0, 0])),
        Monomial::new(rat_int(-2), 1, ExpVec([1, -1, 0, 0])),
    ];
    for m in &cases {
        for n in 0..=10u32 {
            let order = 60;
            let lhs = poch_finite(&Param::Mono(m.clone()), 2 * n, 1, order);
            let rhs = poch_finite(&Param::Mono(m.clone()), n, 2, order)
                .mul(&poch_finite(&Param::Mono(m.shift_q(1)), n, 2, order))
                .unwrap();
            let cut = lhs.order().min(rhs.order());
            assert!(
                lhs.truncated(cut)
                    .diff_report(&rhs.truncated(cut))
                    .unwrap()
                    .is_none(),
                "splitting law failed for {m} at n = {n}"
            );
            let pair = poch_finite(&Param::PairSqrt(m.clone()), n, 1, order);
            let plain = poch_finite(&Param::Mono(m.clone()), n, 2, order);
            assert!(
                pair.diff_report(&plain).unwrap().is_none(),
                "pair law failed for {m} at n = {n}"
            );
        }
    }
}

// Folding law from the factorial algebra, kept alongside the acceptance
// batteries: (m)_inf = (m)_L * (m q^L)_inf wherever both sides make sense.
#[test]
fn folding_law_cleared_comparison() {
    use qtheta_core::blocks::poch_infinite;
    let cases = [
        Monomial::var_pow(Var::X, 1),
        Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, 1)),
        Monomial::new(rat_int(-1), -1, ExpVec::var(Var::X, 2)),
        Monomial::new(rat(2, 3), 2, ExpVec([1, 1, 0, 0])),
    ];
    for m in &cases {
        for len in 0..=6u32 {
            let order = 14;
            let lhs = poch_infinite(m, 1, order);
            let shifted = m.shift_q(i64::from(len));
            let rhs = poch_finite(&Param::Mono(m.clone()), len, 1, order)
                .mul(&poch_infinite(&shifted, 1, order))
                .unwrap();
            assert!(
                lhs.truncated(rhs.order())
                    .diff_report(&rhs)
                    .unwrap()
                    .is_none(),
                "folding law failed for {m} at length {len}"
            );
        }
    }
}

// The difference lemma family in its cleared polynomial form, matching the
// catalog entry but checked term by term over the stated range.
#[test]
fn difference_lemma_per_n() {
    let xy = Monomial::new(rat_int(1), 0, ExpVec([1, 1, 0, 0]));
    let one = |o: i64| QSeries::one(o);
    for n in 2..=8i64 {
        let order = 120;
        // (xy q^{n-2})_n - (1 - xy/q)(xy q^n)_{n-1}
        let a = poch_finite(&Param::Mono(xy.shift_q(n - 2)), n as u32, 1, order);
        let b = one(order)
            .sub(&QSeries::monomial(&xy.shift_q(-1), order))
            .unwrap()
            .mul(&poch_finite(
                &Param::Mono(xy.shift_q(n)),
                (n - 1) as u32,
                1,
                order,
            ))
            .unwrap();
        let lhs = a.sub(&b.truncated(a.order())).unwrap();
        // (xy/q)(xy q^n)_{n-2} (1 - q^n)(1 - q^{n-1})
        let rhs = poch_finite(&Param::Mono(xy.shift_q(n)), (n - 2) as u32, 1, order)
            .mul_monomial(&xy.shift_q(-1))
            .mul(&poch_finite(&Param::Mono(Monomial::q_pow(n)), 1, 1, order))
            .unwrap()
            .mul(&poch_finite(
                &Param::Mono(Monomial::q_pow(n - 1)),
                1,
                1,
                order,
            ))
            .unwrap();
        let cut = lhs.order().min(rhs.order());
        assert!(
            lhs.truncated(cut)
                .diff_report(&rhs.truncated(cut))
                .unwrap()
                .is_none(),
            "difference lemma failed at n = {n}"
        );
    }
}

// The sum evaluator certifies divergence before summing; a spec whose
// valuation bound cannot diverge is rejected, not mis-summed.
#[test]
fn divergence_certificate_required() {
    // argument of q-valuation zero and no quadratic growth
    let spec = SumSpec::new(SumRange::NonNegative, Monomial::var_pow(Var::X, 1));
    match qtheta_core::blocks::sum_eval(&spec, 8) {
        Err(qtheta_core::error::Error::NonEvaluable { reason, .. }) => {
            assert!(reason.contains("diverge"), "{reason}");
        }
        other => panic!("expected a divergence rejection, got {other:?}"),
    }
}
