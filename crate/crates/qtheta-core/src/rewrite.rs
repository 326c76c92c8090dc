//! Normalization rewrites.
//!
//! `normalize` maps an expression to an evaluable normal form, applying
//! value-preserving rules until fixpoint:
//!
//! * pair elimination: a `±sqrt(m)` pair at step `s` is the plain factor
//!   `(m; q^{2s})`;
//! * pair merging: `(m; q^{2s})_L (m q^s; q^{2s})_L = (m; q^s)_{2L}`;
//! * ratio cancellation: `(m; q^s)_{L1} / (m q^{sc}; q^s)_{L2}
//!   = (m; q^s)_c * (m q^{s(c + L2)}; q^s)_{L1 - L2 - c}` whenever the
//!   leftover length stays nonnegative on the range;
//! * square splitting: a denominator `(w^2; q^{2t})_L` of nonpositive
//!   valuation splits into `(w; q^t)_L (-w; q^t)_L` so the halves can
//!   cancel or fold;
//! * folding: a sibling infinite product `(a; q^s)_inf` absorbs a
//!   denominator `(a; q^s)_{L(n)}` into the per-summand tail
//!   `(a q^{s L(n)}; q^s)_inf`;
//! * inverse distribution over products, constant folding, flattening,
//!   and a canonical ordering of all commutative children.
//!
//! Two encodings of the same object normalize to syntactically identical
//! trees, which is how equivalent published forms are recognized.

use crate::blocks::{Affine, Param, PochFactor, Side, SumSpec, TailFactor};
use crate::expr::{add, cnst, inv, mul, pfin, pinf, sum, term, Expr};
use crate::laurent::LaurentPoly;
use crate::series::Monomial;

/// Stable ordering key for commutative children.
fn expr_key(e: &Expr) -> (u8, String) {
    let rank = match e {
        Expr::MonomialTerm { .. } => 0,
        Expr::Const { .. } => 1,
        Expr::PochFin { .. } => 2,
        Expr::PochInf { .. } => 3,
        Expr::Inv { .. } => 4,
        Expr::Add { .. } => 5,
        Expr::Sum { .. } => 6,
        Expr::Mul { .. } => 7,
        Expr::Neg { .. } => 8,
    };
    (rank, format!("{e:?}"))
}

fn mono_key(m: &Monomial) -> (i64, [i32; 4], String) {
    (m.q_exp, m.vars.0, m.coef.to_string())
}

fn factor_key(f: &PochFactor) -> impl Ord {
    let (m, s) = f.param.resolved(f.step);
    (
        match f.side {
            Side::Numerator => 0u8,
            Side::Denominator => 1,
        },
        s,
        mono_key(m),
        (f.shift.a, f.shift.b),
        (f.len.a, f.len.b),
    )
}

/// Apply the rewrite rules until fixpoint and return the normal form.
pub fn normalize(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..64 {
        let next = normalize_once(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
    cur
}

fn normalize_once(e: &Expr) -> Expr {
    match e {
        Expr::Const { value } => {
            // a constant that is a single monomial is a monomial term
            match value.as_monomial() {
                Some((ev, c)) if !ev.is_zero() => term(Monomial::new(c, 0, ev)),
                _ => cnst(value.clone()),
            }
        }
        Expr::MonomialTerm { value } => term(value.clone()),
        Expr::Neg { of } => {
            // fold the sign into the child where a coefficient lives
            let inner = normalize_once(of);
            match inner {
                Expr::Const { value } => cnst(value.neg()),
                Expr::MonomialTerm { value } => {
                    term(Monomial::new(-value.coef.clone(), value.q_exp, value.vars))
                }
                Expr::Neg { of } => *of,
                other => mul(vec![cnst_int_expr(-1), other]),
            }
        }
        Expr::Add { terms } => {
            let mut flat: Vec<Expr> = Vec::new();
            for t in terms {
                match normalize_once(t) {
                    Expr::Add { terms } => flat.extend(terms),
                    other => flat.push(other),
                }
            }
            // merge plain constants, drop zeros
            let mut const_sum = LaurentPoly::zero();
            let mut rest: Vec<Expr> = Vec::new();
            for t in flat {
                match t {
                    Expr::Const { value } => const_sum.add_assign(&value),
                    other => rest.push(other),
                }
            }
            if !const_sum.is_zero() {
                rest.push(cnst(const_sum));
            }
            rest.sort_by_key(expr_key);
            match rest.len() {
                0 => cnst(LaurentPoly::zero()),
                1 => rest.into_iter().next().unwrap(),
                _ => add(rest),
            }
        }
        Expr::Mul { factors } => normalize_mul(factors),
        Expr::PochInf { base, step } => pinf(base.clone(), *step),
        Expr::PochFin { param, len, step } => {
            // pair elimination
            let (m, s) = param.resolved(*step);
            pfin(Param::Mono(m.clone()), *len, s)
        }
        Expr::Sum { spec } => {
            let mut s = spec.clone();
            let mut no_pinfs = Vec::new();
            normalize_spec(&mut s, &mut no_pinfs);
            sum(s)
        }
        Expr::Inv { of } => {
            let inner = normalize_once(of);
            match inner {
                Expr::Mul { factors } => {
                    // distribute the inverse over the product
                    mul(factors.into_iter().map(inv).collect())
                }
                Expr::Inv { of } => *of,
                Expr::MonomialTerm { value } => term(value.inverse()),
                Expr::Const { value } => match value.invert_unit() {
                    Ok(p) => cnst(p),
                    Err(_) => inv(cnst(value)),
                },
                other => inv(other),
            }
        }
    }
}

fn cnst_int_expr(n: i64) -> Expr {
    cnst(LaurentPoly::constant(crate::laurent::rat_int(n)))
}

fn normalize_mul(factors: &[Expr]) -> Expr {
    let mut flat: Vec<Expr> = Vec::new();
    for f in factors {
        match normalize_once(f) {
            Expr::Mul { factors } => flat.extend(factors),
            other => flat.push(other),
        }
    }
    // give sums a chance to absorb sibling infinite products
    let mut pinfs: Vec<(Monomial, u32)> = Vec::new();
    let mut others: Vec<Expr> = Vec::new();
    for f in flat {
        match f {
            Expr::PochInf { base, step } => pinfs.push((base, step)),
            other => others.push(other),
        }
    }
    let mut rebuilt: Vec<Expr> = Vec::new();
    for f in others {
        match f {
            Expr::Sum { spec } => {
                let mut s = spec;
                normalize_spec(&mut s, &mut pinfs);
                rebuilt.push(sum(s));
            }
            other => rebuilt.push(other),
        }
    }
    for (m, s) in pinfs {
        rebuilt.push(pinf(m, s));
    }
    // fold scalar monomials and plain constants together
    let mut scalar = Monomial::one();
    let mut final_children: Vec<Expr> = Vec::new();
    let mut zero = false;
    for f in rebuilt {
        match f {
            Expr::MonomialTerm { value } => scalar = scalar.mul(&value),
            Expr::Const { value } => {
                if value.is_zero() {
                    zero = true;
                } else if let Some((ev, c)) = value.as_monomial() {
                    scalar = scalar.mul(&Monomial::new(c, 0, ev));
                } else {
                    final_children.push(cnst(value));
                }
            }
            other => final_children.push(other),
        }
    }
    if zero {
        return cnst(LaurentPoly::zero());
    }
    if !scalar.is_one() {
        final_children.push(term(scalar));
    }
    final_children.sort_by_key(expr_key);
    match final_children.len() {
        0 => cnst_int_expr(1),
        1 => final_children.into_iter().next().unwrap(),
        _ => mul(final_children),
    }
}

/// Normalize one sum's factor lists, folding matching sibling infinite
/// products (consumed from `pinfs`) into per-summand tails.
fn normalize_spec(spec: &mut SumSpec, pinfs: &mut Vec<(Monomial, u32)>) {
    // pair elimination and shift-constant absorption
    let mut factors: Vec<PochFactor> = Vec::new();
    for f in &spec.factors {
        let (m, s) = f.param.resolved(f.step);
        let mut base = m.clone();
        let mut shift = f.shift;
        if shift.b != 0 {
            base = base.shift_q(shift.b);
            shift = Affine::new(shift.a, 0);
        }
        if f.len.a == 0 && f.len.b <= 0 {
            continue; // empty product
        }
        factors.push(PochFactor {
            param: Param::Mono(base),
            shift,
            len: f.len,
            step: s,
            side: f.side,
        });
    }

    // merge split pairs: (m; q^{2t})_L (m q^t; q^{2t})_L -> (m; q^t)_{2L}
    'merge: loop {
        for i in 0..factors.len() {
            for j in 0..factors.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (&factors[i], &factors[j]);
                if a.side != b.side || a.step != b.step || a.step % 2 != 0 {
                    continue;
                }
                if a.shift != b.shift || a.len != b.len {
                    continue;
                }
                let t = a.step / 2;
                let (ma, _) = a.param.resolved(a.step);
                let (mb, _) = b.param.resolved(b.step);
                if &ma.shift_q(i64::from(t)) == mb {
                    let merged = PochFactor {
                        param: Param::Mono(ma.clone()),
                        shift: a.shift,
                        len: Affine::new(2 * a.len.a, 2 * a.len.b),
                        step: t,
                        side: a.side,
                    };
                    let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                    factors.remove(hi);
                    factors.remove(lo);
                    factors.push(merged);
                    continue 'merge;
                }
            }
        }
        break;
    }

    // split even-step square denominators that are not yet geometric
    let n0 = match spec.range {
        crate::blocks::SumRange::FromOne => 1,
        _ => 0,
    };
    let mut split: Vec<PochFactor> = Vec::new();
    for f in factors.drain(..) {
        let (base, _, _) = f.instantiate(n0);
        let applicable = f.side == Side::Denominator
            && base.q_exp + f.shift.a * n0 < 1
            && f.step % 2 == 0
            && f.shift.a % 2 == 0;
        if applicable {
            let (m, _) = f.param.resolved(f.step);
            if let Some(w) = m.sqrt_exact() {
                let t = f.step / 2;
                let half_shift = Affine::new(f.shift.a / 2, 0);
                split.push(PochFactor {
                    param: Param::Mono(w.clone()),
                    shift: half_shift,
                    len: f.len,
                    step: t,
                    side: Side::Denominator,
                });
                split.push(PochFactor {
                    param: Param::Mono(Monomial::new(-w.coef.clone(), w.q_exp, w.vars)),
                    shift: half_shift,
                    len: f.len,
                    step: t,
                    side: Side::Denominator,
                });
                continue;
            }
        }
        split.push(f);
    }
    factors = split;

    // cancel numerator/denominator ratios with a common base
    'cancel: loop {
        for i in 0..factors.len() {
            if factors[i].side != Side::Numerator {
                continue;
            }
            for j in 0..factors.len() {
                if factors[j].side != Side::Denominator {
                    continue;
                }
                let (num, den) = (&factors[i], &factors[j]);
                if num.step != den.step || num.shift != den.shift {
                    continue;
                }
                let s = i64::from(num.step);
                let (mn, _) = num.param.resolved(num.step);
                let (md, _) = den.param.resolved(den.step);
                if mn.coef != md.coef || mn.vars != md.vars {
                    continue;
                }
                let dq = md.q_exp - mn.q_exp;
                if dq < 0 || dq % s != 0 {
                    continue;
                }
                let c = dq / s;
                let rem = Affine::new(num.len.a - den.len.a, num.len.b - den.len.b - c);
                if rem.a < 0 || rem.eval(n0) < 0 {
                    continue;
                }
                let shift = num.shift;
                let base = mn.clone();
                let den_len = den.len;
                let mut new_factors: Vec<PochFactor> = Vec::new();
                if c > 0 {
                    new_factors.push(PochFactor {
                        param: Param::Mono(base.clone()),
                        shift,
                        len: Affine::constant(c),
                        step: num.step,
                        side: Side::Numerator,
                    });
                }
                if rem.a != 0 || rem.b != 0 {
                    new_factors.push(PochFactor {
                        param: Param::Mono(base.shift_q(s * (c + den_len.b))),
                        shift: Affine::new(shift.a + s * den_len.a, 0),
                        len: rem,
                        step: num.step,
                        side: Side::Numerator,
                    });
                }
                let (hi, lo) = if i > j { (i, j) } else { (j, i) };
                factors.remove(hi);
                factors.remove(lo);
                factors.extend(new_factors);
                continue 'cancel;
            }
        }
        break;
    }

    // fold remaining non-geometric denominators against sibling infinite
    // products: (a)_inf / (a q^{sigma})_{L(n)} with constant sigma folded
    // into the base -> tail (a q^{s L(n)})_inf
    let mut kept: Vec<PochFactor> = Vec::new();
    for f in factors.drain(..) {
        if f.side == Side::Denominator && f.shift.a == 0 {
            let (base, s, _) = f.instantiate(n0);
            if base.q_exp < 1 {
                if let Some(pos) = pinfs.iter().position(|(m, st)| {
                    *m == base
                        && i64::from(f.param.resolved(f.step).1) == s
                        && *st == f.param.resolved(f.step).1
                }) {
                    pinfs.remove(pos);
                    spec.tails.push(TailFactor {
                        base,
                        shift: Affine::new(s * f.len.a, s * f.len.b),
                        step: s as u32,
                    });
                    continue;
                }
            }
        }
        kept.push(f);
    }
    factors = kept;

    // canonicalize tails: absorb constant shifts into bases, sort
    let mut tails: Vec<TailFactor> = Vec::new();
    for t in &spec.tails {
        let mut base = t.base.clone();
        let mut shift = t.shift;
        if shift.b != 0 {
            base = base.shift_q(shift.b);
            shift = Affine::new(shift.a, 0);
        }
        tails.push(TailFactor {
            base,
            shift,
            step: t.step,
        });
    }
    tails.sort_by_key(|t| {
        let k = mono_key(&t.base);
        (t.step, k, (t.shift.a, t.shift.b))
    });
    factors.sort_by_key(factor_key);
    spec.factors = factors;
    spec.tails = tails;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{poch_finite, Affine, SumRange};
    use crate::expr::{eval_expr, neg};
    use crate::laurent::{rat_int, ExpVec, Var};
    use crate::series::QSeries;

    fn qm(e: i64) -> Monomial {
        Monomial::q_pow(e)
    }

    fn xm() -> Monomial {
        Monomial::var_pow(Var::X, 1)
    }

    fn ym() -> Monomial {
        Monomial::var_pow(Var::Y, 1)
    }

    fn xy() -> Monomial {
        xm().mul(&ym())
    }

    /// (m q^shift; q)_len as a plain product for cross-checking rewrites.
    fn poch_num(m: &Monomial, shift: i64, len: u32, order: i64) -> QSeries {
        poch_finite(&Param::Mono(m.shift_q(shift)), len, 1, order)
    }

    #[test]
    fn ratio_cancellation_same_base() {
        // (xy)_{2n} = (xy q^n)_n * (xy)_n as polynomials, n <= 6
        for n in 0..=6u32 {
            let order = 40;
            let lhs = poch_num(&xy(), 0, 2 * n, order);
            let rhs = poch_num(&xy(), i64::from(n), n, order)
                .mul(&poch_num(&xy(), 0, n, order))
                .unwrap();
            assert!(lhs
                .truncated(rhs.order())
                .diff_report(&rhs)
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn ratio_cancellation_offset_base() {
        // (m)_{2n} = (1 - m) (m q^{n+1})_{n-1} * (m q)_n with m = xy/q, n >= 1
        let m = Monomial::new(rat_int(1), -1, ExpVec([1, 1, 0, 0]));
        for n in 1..=6i64 {
            let order = 40;
            let lhs = poch_num(&m, 0, 2 * n as u32, order);
            let rhs = poch_num(&m, 0, 1, order)
                .mul(&poch_num(&m, n + 1, (n - 1) as u32, order))
                .unwrap()
                .mul(&poch_num(&m, 1, n as u32, order))
                .unwrap();
            assert!(lhs
                .truncated(rhs.order())
                .diff_report(&rhs)
                .unwrap()
                .is_none());
        }
    }

    #[test]
    fn pair_law_and_split() {
        // (x)_{2n} = (x; q^2)_n (x q; q^2)_n, and the PairSqrt encoding
        for n in 0..=6u32 {
            let order = 60;
            let lhs = poch_finite(&Param::Mono(xm()), 2 * n, 1, order);
            let rhs = poch_finite(&Param::Mono(xm()), n, 2, order)
                .mul(&poch_finite(&Param::Mono(xm().shift_q(1)), n, 2, order))
                .unwrap();
            assert!(lhs
                .truncated(rhs.order())
                .diff_report(&rhs)
                .unwrap()
                .is_none());
            let pair = poch_finite(&Param::PairSqrt(xm()), n, 1, order);
            let plain = poch_finite(&Param::Mono(xm()), n, 2, order);
            assert!(pair.diff_report(&plain).unwrap().is_none());
        }
    }

    #[test]
    fn square_split_matches() {
        // (x^2; q^2)_n = (x; q)_n (-x; q)_n
        let minus_x = Monomial::new(rat_int(-1), 0, ExpVec::var(Var::X, 1));
        let xsq = Monomial::new(rat_int(1), 0, ExpVec::var(Var::X, 2));
        for n in 0..=6u32 {
            let order = 40;
            let lhs = poch_finite(&Param::Mono(xsq.clone()), n, 2, order);
            let rhs = poch_finite(&Param::Mono(xm()), n, 1, order)
                .mul(&poch_finite(&Param::Mono(minus_x.clone()), n, 1, order))
                .unwrap();
            assert!(lhs.diff_report(&rhs).unwrap().is_none());
        }
    }

    #[test]
    fn normalize_cancels_ratio_in_sum() {
        // num (xy)_{2n} against den (xy)_n becomes num (xy q^n)_n
        let spec = SumSpec::new(SumRange::NonNegative, qm(1))
            .factor(PochFactor::num(Param::Mono(xy()), 1, Affine::new(2, 0)))
            .factor(PochFactor::den(Param::Mono(xy()), 1, Affine::new(1, 0)))
            .factor(PochFactor::den(Param::Mono(qm(1)), 1, Affine::new(1, 0)));
        let n = normalize(&sum(spec));
        match &n {
            Expr::Sum { spec } => {
                assert_eq!(spec.factors.len(), 2);
                let num = spec
                    .factors
                    .iter()
                    .find(|f| f.side == Side::Numerator)
                    .unwrap();
                assert_eq!(num.shift, Affine::new(1, 0));
                assert_eq!(num.len, Affine::new(1, 0));
                let (m, _) = num.param.resolved(num.step);
                assert_eq!(m, &xy());
            }
            other => panic!("unexpected normal form {other:?}"),
        }
        // evaluate the normalized form; the raw form is non-evaluable in
        // exact mode, so compare against a by-hand expansion instead
        let v = eval_expr(&n, 4).unwrap();
        // n=0: 1; n=1: q (1 - xy q)/(1 - q); n=2: q^2 (1-xyq^2)(1-xyq^3)/((1-q)(1-q^2)); ...
        let mut want = QSeries::one(4);
        let t1 = poch_num(&xy(), 1, 1, 8)
            .mul(
                &QSeries::one(8)
                    .sub(&QSeries::monomial(&qm(1), 8))
                    .unwrap()
                    .invert(6)
                    .unwrap(),
            )
            .unwrap()
            .mul_monomial(&qm(1));
        want = want.add(&t1.truncated(4)).unwrap();
        let den2 = poch_finite(&Param::Mono(qm(1)), 2, 1, 8);
        let t2 = poch_num(&xy(), 2, 2, 8)
            .mul(&den2.invert(6).unwrap())
            .unwrap()
            .mul_monomial(&qm(2));
        want = want.add(&t2.truncated(4)).unwrap();
        let den3 = poch_finite(&Param::Mono(qm(1)), 3, 1, 8);
        let t3 = poch_num(&xy(), 3, 3, 8)
            .mul(&den3.invert(6).unwrap())
            .unwrap()
            .mul_monomial(&qm(3));
        want = want.add(&t3.truncated(4)).unwrap();
        let den4 = poch_finite(&Param::Mono(qm(1)), 4, 1, 8);
        let t4 = poch_num(&xy(), 4, 4, 8)
            .mul(&den4.invert(6).unwrap())
            .unwrap()
            .mul_monomial(&qm(4));
        want = want.add(&t4.truncated(4)).unwrap();
        assert!(v.diff_report(&want.truncated(4)).unwrap().is_none());
    }

    #[test]
    fn normalize_folds_infinite_product() {
        // (x)_inf * sum 1/((q)_n (x)_n) q^n -> sum with tail (x q^n)_inf
        let spec = SumSpec::new(SumRange::NonNegative, qm(1))
            .factor(PochFactor::den(Param::Mono(qm(1)), 1, Affine::new(1, 0)))
            .factor(PochFactor::den(Param::Mono(xm()), 1, Affine::new(1, 0)));
        let e = mul(vec![pinf(xm(), 1), sum(spec)]);
        let n = normalize(&e);
        match &n {
            Expr::Sum { spec } => {
                assert_eq!(spec.tails.len(), 1);
                assert_eq!(spec.tails[0].base, xm());
                assert_eq!(spec.tails[0].shift, Affine::new(1, 0));
                assert_eq!(spec.factors.len(), 1);
            }
            other => panic!("fold failed: {other:?}"),
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let spec = SumSpec::new(SumRange::NonNegative, qm(1))
            .factor(PochFactor::num(Param::PairSqrt(xy()), 1, Affine::new(1, 0)))
            .factor(PochFactor::num(
                Param::PairSqrt(xy().shift_q(-1)),
                1,
                Affine::new(1, 0),
            ))
            .factor(PochFactor::den(Param::Mono(qm(1)), 1, Affine::new(1, 0)))
            .factor(PochFactor::den(Param::Mono(xm()), 1, Affine::new(1, 0)))
            .factor(PochFactor::den(
                Param::Mono(xy().shift_q(-1)),
                1,
                Affine::new(1, 0),
            ));
        let e = mul(vec![
            pinf(qm(1), 1),
            pinf(xm(), 1),
            pinf(ym(), 1),
            sum(spec),
            neg(cnst(LaurentPoly::var(Var::X))),
        ]);
        let n1 = normalize(&e);
        let n2 = normalize(&n1);
        assert_eq!(n1, n2);
    }
}
