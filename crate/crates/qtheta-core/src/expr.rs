//! Expression trees for q-series objects, their evaluator, and the
//! evaluability validator.
//!
//! An [`Expr`] describes one side of an identity symbolically: constants,
//! monomials, sums/products, finite and infinite q-shifted factorials,
//! parameterized sums, and inverses. Evaluation produces an exact
//! [`QSeries`] whose order is a sound bound propagated bottom-up.
//!
//! The JSON encoding (node tags matching the variant names, monomials as
//! `{coef, q, x, y, u, v}`) is documented in `docs/formats.md` and
//! `docs/expr-schema.json`; user identity files use it.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::blocks::{
    poch_product, sum_eval_opts, valuation_bound_opt, EvalOpts, Param, SumRange, SumSpec,
};
use crate::error::{Error, NodePath, Result};
use crate::laurent::{parse_rational, ExpVec, LaurentPoly, Rational, Var};
use crate::series::{Monomial, QSeries};
use num_traits::One;

// ---------------------------------------------------------------------------
// serde plumbing for the leaf types
// ---------------------------------------------------------------------------

impl Serialize for LaurentPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(|e| D::Error::custom(format!("{e}")))
    }
}

#[derive(Serialize, Deserialize)]
struct MonomialRepr {
    coef: String,
    q: i64,
    #[serde(default)]
    x: i32,
    #[serde(default)]
    y: i32,
    #[serde(default)]
    u: i32,
    #[serde(default)]
    v: i32,
}

impl Serialize for Monomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MonomialRepr {
            coef: LaurentPoly::constant(self.coef.clone()).to_string(),
            q: self.q_exp,
            x: self.vars.get(Var::X),
            y: self.vars.get(Var::Y),
            u: self.vars.get(Var::U),
            v: self.vars.get(Var::V),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Monomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MonomialRepr::deserialize(d)?;
        let coef = parse_rational(&r.coef).map_err(|e| D::Error::custom(format!("{e}")))?;
        if num_traits::Zero::is_zero(&coef) {
            return Err(D::Error::custom("monomial coefficient must be nonzero"));
        }
        Ok(Monomial::new(coef, r.q, ExpVec([r.x, r.y, r.u, r.v])))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ParamRepr {
    Mono { base: Monomial },
    PairSqrt { base: Monomial },
}

impl Serialize for Param {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Param::Mono(m) => ParamRepr::Mono { base: m.clone() },
            Param::PairSqrt(m) => ParamRepr::PairSqrt { base: m.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Param {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match ParamRepr::deserialize(d)? {
            ParamRepr::Mono { base } => Param::Mono(base),
            ParamRepr::PairSqrt { base } => Param::PairSqrt(base),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PochFactorRepr {
    param: Param,
    #[serde(default = "affine_zero")]
    shift: crate::blocks::Affine,
    len: crate::blocks::Affine,
    step: u32,
    side: crate::blocks::Side,
}

fn affine_zero() -> crate::blocks::Affine {
    crate::blocks::Affine::ZERO
}

impl Serialize for crate::blocks::PochFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PochFactorRepr {
            param: self.param.clone(),
            shift: self.shift,
            len: self.len,
            step: self.step,
            side: self.side,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for crate::blocks::PochFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = PochFactorRepr::deserialize(d)?;
        Ok(crate::blocks::PochFactor {
            param: r.param,
            shift: r.shift,
            len: r.len,
            step: r.step,
            side: r.side,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TailFactorRepr {
    base: Monomial,
    shift: crate::blocks::Affine,
    step: u32,
}

impl Serialize for crate::blocks::TailFactor {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TailFactorRepr {
            base: self.base.clone(),
            shift: self.shift,
            step: self.step,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for crate::blocks::TailFactor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TailFactorRepr::deserialize(d)?;
        Ok(crate::blocks::TailFactor {
            base: r.base,
            shift: r.shift,
            step: r.step,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SumSpecRepr {
    range: SumRange,
    #[serde(default)]
    alternating: bool,
    #[serde(default = "quad_zero")]
    q_quad: crate::blocks::QuadExp,
    power: Monomial,
    #[serde(default = "weight_one")]
    weight: Vec<i64>,
    #[serde(default)]
    factors: Vec<crate::blocks::PochFactor>,
    #[serde(default)]
    tails: Vec<crate::blocks::TailFactor>,
}

fn quad_zero() -> crate::blocks::QuadExp {
    crate::blocks::QuadExp::ZERO
}

fn weight_one() -> Vec<i64> {
    vec![1]
}

impl Serialize for SumSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SumSpecRepr {
            range: self.range,
            alternating: self.alternating,
            q_quad: self.q_quad,
            power: self.power_mono.clone(),
            weight: self.weight.clone(),
            factors: self.factors.clone(),
            tails: self.tails.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SumSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SumSpecRepr::deserialize(d)?;
        Ok(SumSpec {
            range: r.range,
            alternating: r.alternating,
            q_quad: r.q_quad,
            power_mono: r.power,
            weight: r.weight,
            factors: r.factors,
            tails: r.tails,
        })
    }
}

// ---------------------------------------------------------------------------
// the expression tree
// ---------------------------------------------------------------------------

/// Symbolic q-series expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    /// A q-free Laurent-polynomial constant.
    Const {
        value: LaurentPoly,
    },
    /// A single monomial, possibly carrying a q-power.
    MonomialTerm {
        value: Monomial,
    },
    Add {
        terms: Vec<Expr>,
    },
    Mul {
        factors: Vec<Expr>,
    },
    Neg {
        of: Box<Expr>,
    },
    /// `(base; q^step)_inf`
    PochInf {
        base: Monomial,
        step: u32,
    },
    /// `(param; q^step)_len` with a concrete length.
    PochFin {
        param: Param,
        len: u32,
        step: u32,
    },
    Sum {
        spec: SumSpec,
    },
    /// Multiplicative inverse; the leading q-coefficient of the inner
    /// expression must be a single monomial (validated ahead of time).
    Inv {
        of: Box<Expr>,
    },
}

pub fn cnst(p: LaurentPoly) -> Expr {
    Expr::Const { value: p }
}

pub fn cnst_int(n: i64) -> Expr {
    cnst(LaurentPoly::constant(crate::laurent::rat_int(n)))
}

pub fn term(m: Monomial) -> Expr {
    Expr::MonomialTerm { value: m }
}

pub fn add(terms: Vec<Expr>) -> Expr {
    Expr::Add { terms }
}

pub fn mul(factors: Vec<Expr>) -> Expr {
    Expr::Mul { factors }
}

pub fn neg(e: Expr) -> Expr {
    Expr::Neg { of: Box::new(e) }
}

pub fn pinf(base: Monomial, step: u32) -> Expr {
    Expr::PochInf { base, step }
}

pub fn pfin(param: Param, len: u32, step: u32) -> Expr {
    Expr::PochFin { param, len, step }
}

pub fn sum(spec: SumSpec) -> Expr {
    Expr::Sum { spec }
}

pub fn inv(e: Expr) -> Expr {
    Expr::Inv { of: Box::new(e) }
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

/// Per-evaluation bookkeeping surfaced in reports.
#[derive(Debug, Default, Clone)]
pub struct EvalStats {
    /// Largest |n| actually summed, one entry per Sum node in evaluation order.
    pub sum_n_max: Vec<i64>,
}

fn neg_exp_sum(m: &Monomial, s: i64, len: Option<i64>) -> i64 {
    if m.q_exp >= 0 {
        return 0;
    }
    let mut c = (-m.q_exp + s - 1) / s;
    if let Some(l) = len {
        c = c.min(l);
    }
    c * m.q_exp + s * c * (c - 1) / 2
}

/// Structural floor of a sum: minimum of the per-term valuation bound over
/// the whole index range (finite because the bound diverges).
fn sum_lo_bound(spec: &SumSpec, opts: EvalOpts) -> Result<i64> {
    spec.validate(opts.window)
        .map_err(|reason| Error::NonEvaluable {
            path: NodePath::default(),
            reason,
        })?;
    let mut lo = i64::MAX;
    let mut dirs = vec![(
        match spec.range {
            SumRange::FromOne => 1,
            _ => 0,
        },
        1i64,
    )];
    if spec.range == SumRange::AllIntegers {
        dirs.push((-1, -1));
    }
    for (start, dir) in dirs {
        let mut n = start;
        let mut best = i64::MAX;
        loop {
            let b = valuation_bound_opt(spec, n, opts.window);
            best = best.min(b);
            // the bound is a parabola-plus-bounded-correction; once the bare
            // parabola sits above the best seen and we are past its vertex,
            // nothing smaller can follow
            let a = spec.q_quad.a;
            let bl = spec.q_quad.b + 2 * spec.power_mono.q_exp;
            let past_vertex = if a > 0 {
                2 * a * n * dir >= -bl * dir
            } else {
                true
            };
            let mut corr_floor = 0i64;
            for f in &spec.factors {
                let (base, s, len0) = f.instantiate(n.min(start));
                if f.side == crate::blocks::Side::Numerator {
                    corr_floor += neg_exp_sum(&base, s, None);
                } else if let Some(w) = opts.window {
                    corr_floor += crate::blocks::den_window_floor(&base, s, len0.max(64), w);
                }
            }
            for t in &spec.tails {
                let base = t.base.shift_q(t.shift.eval(n.min(start)));
                corr_floor += neg_exp_sum(&base, i64::from(t.step), None);
            }
            let poly = (a * n * n + bl * n + spec.q_quad.c) / 2 + corr_floor;
            if past_vertex && poly > best {
                break;
            }
            n += dir;
            if (n - start).abs() > 1_000_000 {
                return Err(Error::DivergentBound(
                    "sum floor scan did not stabilize".into(),
                ));
            }
        }
        lo = lo.min(best);
    }
    Ok(lo.min(0).min(lo))
}

/// Structural floor of an expression's value. For inverses this needs the
/// inner leading valuation, found by a small evaluation.
fn lo_bound(e: &Expr, opts: EvalOpts) -> Result<i64> {
    Ok(match e {
        Expr::Const { .. } => 0,
        Expr::MonomialTerm { value } => value.q_exp,
        Expr::Add { terms } => {
            let mut lo = 0;
            for t in terms {
                lo = lo.min(lo_bound(t, opts)?);
            }
            lo
        }
        Expr::Mul { factors } => {
            let mut lo = 0;
            for t in factors {
                lo += lo_bound(t, opts)?;
            }
            lo
        }
        Expr::Neg { of } => lo_bound(of, opts)?,
        Expr::PochInf { base, step } => neg_exp_sum(base, i64::from(*step), None),
        Expr::PochFin { param, len, step } => {
            let (m, s) = param.resolved(*step);
            neg_exp_sum(m, i64::from(s), Some(i64::from(*len)))
        }
        Expr::Sum { spec } => sum_lo_bound(spec, opts)?,
        Expr::Inv { of } => {
            let v = leading_valuation(of, opts)?;
            let extra = match opts.window {
                Some(w) => inv_window_floor(of, w).unwrap_or(0),
                None => 0,
            };
            -v + extra
        }
    })
}

/// Find the leading (lowest nonzero) q-exponent of an expression by
/// evaluating at progressively larger small orders.
fn leading_valuation(e: &Expr, opts: EvalOpts) -> Result<i64> {
    let lo = lo_bound(e, opts)?;
    let mut probe = 8i64;
    let mut stats = EvalStats::default();
    loop {
        let s = eval_expr_opts(e, lo + probe, opts, &mut stats)?;
        if let Some(v) = s.valuation() {
            return Ok(v);
        }
        probe *= 2;
        if probe > 512 {
            return Err(Error::NotAUnit(
                "expression evaluates to zero; it has no invertible leading term".into(),
            ));
        }
    }
}

/// Multiplicative pieces of an expression, when it is structurally a
/// product of monomials and q-shifted factorials.
enum Piece {
    Scalar(Rational),
    Mono(Monomial),
    Poch {
        base: Monomial,
        step: i64,
        len: Option<i64>,
    },
}

fn as_product_pieces(e: &Expr, out: &mut Vec<Piece>) -> bool {
    match e {
        Expr::MonomialTerm { value } => {
            out.push(Piece::Mono(value.clone()));
            true
        }
        Expr::Const { value } => match value.as_monomial() {
            Some((ev, c)) => {
                out.push(Piece::Mono(Monomial::new(c, 0, ev)));
                true
            }
            None => false,
        },
        Expr::Neg { of } => {
            out.push(Piece::Scalar(-Rational::one()));
            as_product_pieces(of, out)
        }
        Expr::Mul { factors } => factors.iter().all(|f| as_product_pieces(f, out)),
        Expr::PochInf { base, step } => {
            out.push(Piece::Poch {
                base: base.clone(),
                step: i64::from(*step),
                len: None,
            });
            true
        }
        Expr::PochFin { param, len, step } => {
            let (m, s) = param.resolved(*step);
            out.push(Piece::Poch {
                base: m.clone(),
                step: i64::from(s),
                len: Some(i64::from(*len)),
            });
            true
        }
        _ => false,
    }
}

/// How far below zero the inverse of a factor product reaches in windowed
/// mode. `None` when the expression is not a plain product.
fn inv_window_floor(e: &Expr, w: i64) -> Option<i64> {
    let mut pieces = Vec::new();
    if !as_product_pieces(e, &mut pieces) {
        return None;
    }
    let mut floor = 0i64;
    for p in &pieces {
        if let Piece::Poch { base, step, len } = p {
            let mut j = 0i64;
            loop {
                if let Some(l) = len {
                    if j >= *l {
                        break;
                    }
                }
                let v = base.q_exp + step * j;
                if v >= 1 {
                    break;
                }
                let deg = i64::from(base.vars.max_abs());
                if v < 0 && deg > 0 {
                    floor += v * (w / deg);
                }
                j += 1;
            }
        }
    }
    Some(floor)
}

/// Invert a structural product factor-by-factor (geometric expansions).
fn invert_pieces(pieces: &[Piece], order: i64, opts: EvalOpts) -> Result<QSeries> {
    // working order must absorb everything the inverses can dip below zero
    let mut dip = 0i64;
    for p in pieces {
        match p {
            Piece::Mono(m) => dip += (-m.q_exp).min(0),
            Piece::Poch { base, step, len } => {
                if let Some(w) = opts.window {
                    // handled inside mul_geom_inv; approximate with the floor
                    let mut j = 0i64;
                    loop {
                        if let Some(l) = len {
                            if j >= *l {
                                break;
                            }
                        }
                        let v = base.q_exp + step * j;
                        if v >= 1 {
                            break;
                        }
                        let deg = i64::from(base.vars.max_abs());
                        if v < 0 && deg > 0 {
                            dip += v * (w / deg);
                        }
                        j += 1;
                    }
                }
            }
            Piece::Scalar(_) => {}
        }
    }
    let work = order - dip;
    let mut acc = QSeries::one(work);
    for p in pieces {
        match p {
            Piece::Scalar(c) => {
                acc = acc.scale(&c.recip());
            }
            Piece::Mono(m) => {
                acc = acc.mul_monomial(&m.inverse());
            }
            Piece::Poch { base, step, len } => {
                let mut j = 0i64;
                loop {
                    if let Some(l) = len {
                        if j >= *l {
                            break;
                        }
                    }
                    let e = base.q_exp + step * j;
                    if e > acc.order() {
                        break;
                    }
                    acc = acc.mul_geom_inv(
                        &Monomial::new(base.coef.clone(), e, base.vars),
                        opts.window,
                    )?;
                    j += 1;
                }
            }
        }
    }
    acc.truncate_to(order);
    Ok(acc)
}

/// Evaluate to an exact truncated series valid through `order`.
pub fn eval_expr(e: &Expr, order: i64) -> Result<QSeries> {
    let mut stats = EvalStats::default();
    eval_expr_opts(e, order, EvalOpts::EXACT, &mut stats)
}

pub fn eval_expr_opts(
    e: &Expr,
    order: i64,
    opts: EvalOpts,
    stats: &mut EvalStats,
) -> Result<QSeries> {
    let out = match e {
        Expr::Const { value } => QSeries::constant(value.clone(), order),
        Expr::MonomialTerm { value } => QSeries::monomial(value, order),
        Expr::Add { terms } => {
            let mut acc = QSeries::zero(order);
            for t in terms {
                let s = eval_expr_opts(t, order, opts, stats)?;
                acc = acc.add(&s)?;
            }
            acc
        }
        Expr::Neg { of } => eval_expr_opts(of, order, opts, stats)?.neg(),
        Expr::Mul { factors } => {
            let los: Vec<i64> = factors
                .iter()
                .map(|f| lo_bound(f, opts))
                .collect::<Result<_>>()?;
            let total: i64 = los.iter().sum();
            // each child is evaluated high enough that the full product
            // stays valid through `order` once the other floors land
            let mut acc = QSeries::one(order - total.min(0));
            for (i, f) in factors.iter().enumerate() {
                let child_order = order - (total - los[i]);
                let s = eval_expr_opts(f, child_order, opts, stats)?;
                acc = acc.mul_clipped(&s, opts.window)?;
            }
            acc.truncate_to(order);
            acc
        }
        Expr::PochInf { base, step } => poch_product(base, i64::from(*step), None, order, opts),
        Expr::PochFin { param, len, step } => {
            let (m, s) = param.resolved(*step);
            poch_product(m, i64::from(s), Some(i64::from(*len)), order, opts)
        }
        Expr::Sum { spec } => {
            let (s, n_max) = sum_eval_opts(spec, order, opts)?;
            stats.sum_n_max.push(n_max);
            s
        }
        Expr::Inv { of } => {
            let mut pieces = Vec::new();
            if as_product_pieces(of, &mut pieces) {
                match invert_pieces(&pieces, order, opts) {
                    Ok(s) => s,
                    Err(Error::NotAUnit(_)) if opts.window.is_none() => {
                        invert_generic(of, order, opts, stats)?
                    }
                    Err(e) => return Err(e),
                }
            } else {
                invert_generic(of, order, opts, stats)?
            }
        }
    };
    let mut out = out;
    if let Some(w) = opts.window {
        out.clip_window_mut(w);
    }
    Ok(out)
}

fn invert_generic(of: &Expr, order: i64, opts: EvalOpts, stats: &mut EvalStats) -> Result<QSeries> {
    let v = leading_valuation(of, opts)?;
    let inner = eval_expr_opts(of, order + 2 * v.max(0), opts, stats)?;
    inner.invert(order + v)
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

/// What the validator certifies for one expression.
#[derive(Debug, Default, Clone)]
pub struct EvalCertificate {
    /// Per sum node: path and a rendering of its valuation bound.
    pub sums: Vec<(NodePath, String)>,
    /// Per inverse node: path and how the inverse will be computed.
    pub inversions: Vec<(NodePath, String)>,
}

impl std::fmt::Display for EvalCertificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "evaluable: {} sum(s), {} inversion(s)",
            self.sums.len(),
            self.inversions.len()
        )?;
        for (p, d) in &self.sums {
            writeln!(f, "  sum at {p}: {d}")?;
        }
        for (p, d) in &self.inversions {
            writeln!(f, "  inverse at {p}: {d}")?;
        }
        Ok(())
    }
}

/// Certify that every inverse has a monomial-unit leading term, every
/// denominator factor is geometric, and every sum's valuation bound
/// diverges. Returns the first violation as a diagnostic naming the node.
pub fn validate_evaluable(e: &Expr) -> Result<EvalCertificate> {
    validate_opts(e, EvalOpts::EXACT)
}

pub fn validate_opts(e: &Expr, opts: EvalOpts) -> Result<EvalCertificate> {
    let mut cert = EvalCertificate::default();
    let mut path = Vec::new();
    walk_validate(e, opts, &mut path, &mut cert)?;
    Ok(cert)
}

fn walk_validate(
    e: &Expr,
    opts: EvalOpts,
    path: &mut Vec<usize>,
    cert: &mut EvalCertificate,
) -> Result<()> {
    match e {
        Expr::Const { .. } | Expr::MonomialTerm { .. } => {}
        Expr::Add { terms } => {
            for (i, t) in terms.iter().enumerate() {
                path.push(i);
                walk_validate(t, opts, path, cert)?;
                path.pop();
            }
        }
        Expr::Mul { factors } => {
            for (i, t) in factors.iter().enumerate() {
                path.push(i);
                walk_validate(t, opts, path, cert)?;
                path.pop();
            }
        }
        Expr::Neg { of } => {
            path.push(0);
            walk_validate(of, opts, path, cert)?;
            path.pop();
        }
        Expr::PochInf { step, .. } | Expr::PochFin { step, .. } => {
            if *step == 0 {
                return Err(Error::NonEvaluable {
                    path: NodePath(path.clone()),
                    reason: "factorial step must be positive".into(),
                });
            }
        }
        Expr::Sum { spec } => {
            spec.validate(opts.window)
                .map_err(|reason| Error::NonEvaluable {
                    path: NodePath(path.clone()),
                    reason,
                })?;
            let v = spec.power_mono.q_exp;
            cert.sums.push((
                NodePath(path.clone()),
                format!(
                    "bound(n) = ({}n^2 + {}n + {})/2 + corrections, diverges",
                    spec.q_quad.a,
                    spec.q_quad.b + 2 * v,
                    spec.q_quad.c
                ),
            ));
        }
        Expr::Inv { of } => {
            path.push(0);
            walk_validate(of, opts, path, cert)?;
            path.pop();
            let mut pieces = Vec::new();
            let desc = if as_product_pieces(of, &mut pieces) {
                let all_geometric = pieces.iter().all(|p| match p {
                    Piece::Poch { base, .. } => {
                        base.q_exp >= 1
                            || (opts.window.is_some()
                                && (base.vars.max_abs() > 0
                                    || (base.q_exp == 0 && !base.coef.is_one())))
                    }
                    _ => true,
                });
                if all_geometric {
                    Some("factor-wise geometric expansion".to_string())
                } else {
                    None
                }
            } else {
                None
            };
            let desc = match desc {
                Some(d) => d,
                None => {
                    // need a monomial-unit leading coefficient
                    let v = leading_valuation(of, opts).map_err(|err| Error::NonEvaluable {
                        path: NodePath(path.clone()),
                        reason: err.to_string(),
                    })?;
                    let mut stats = EvalStats::default();
                    let probe = eval_expr_opts(of, v + 1, opts, &mut stats)?;
                    let lead = probe.coeff(v).map_err(|err| Error::NonEvaluable {
                        path: NodePath(path.clone()),
                        reason: err.to_string(),
                    })?;
                    if lead.as_monomial().is_none() {
                        return Err(Error::NonEvaluable {
                            path: NodePath(path.clone()),
                            reason: format!(
                                "leading coefficient {lead} at q^{v} is not a monomial unit"
                            ),
                        });
                    }
                    format!("unit-leading series inversion at q^{v}")
                }
            };
            cert.inversions.push((NodePath(path.clone()), desc));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// substitution on expressions
// ---------------------------------------------------------------------------

fn mono_subst(m: &Monomial, var: Var, by: &Monomial) -> Monomial {
    let k = i64::from(m.vars.get(var));
    if k == 0 {
        return m.clone();
    }
    let mut stripped = m.vars;
    stripped.0[var.index()] = 0;
    Monomial::new(m.coef.clone(), m.q_exp, stripped).mul(&by.pow(k))
}

/// Substitute a variable by a monomial everywhere in an expression.
/// Constants whose terms acquire q-powers become sums of monomial terms.
pub fn expr_subst_var(e: &Expr, var: Var, by: &Monomial) -> Expr {
    match e {
        Expr::Const { value } => {
            let mut terms = Vec::new();
            let mut plain = LaurentPoly::zero();
            let mut any_q = false;
            for (ev, c) in value.terms() {
                let m = Monomial::new(c.clone(), 0, *ev);
                let sub = mono_subst(&m, var, by);
                if sub.q_exp != 0 {
                    any_q = true;
                }
                terms.push(sub);
            }
            if !any_q {
                for m in &terms {
                    plain.add_assign(&m.var_part());
                }
                return cnst(plain);
            }
            add(terms.into_iter().map(term).collect())
        }
        Expr::MonomialTerm { value } => term(mono_subst(value, var, by)),
        Expr::Add { terms } => add(terms.iter().map(|t| expr_subst_var(t, var, by)).collect()),
        Expr::Mul { factors } => mul(factors.iter().map(|t| expr_subst_var(t, var, by)).collect()),
        Expr::Neg { of } => neg(expr_subst_var(of, var, by)),
        Expr::PochInf { base, step } => pinf(mono_subst(base, var, by), *step),
        Expr::PochFin { param, len, step } => {
            let p = match param {
                Param::Mono(m) => Param::Mono(mono_subst(m, var, by)),
                Param::PairSqrt(m) => Param::PairSqrt(mono_subst(m, var, by)),
            };
            pfin(p, *len, *step)
        }
        Expr::Sum { spec } => {
            let mut s = spec.clone();
            s.power_mono = mono_subst(&s.power_mono, var, by);
            for f in &mut s.factors {
                f.param = match &f.param {
                    Param::Mono(m) => Param::Mono(mono_subst(m, var, by)),
                    Param::PairSqrt(m) => Param::PairSqrt(mono_subst(m, var, by)),
                };
            }
            for t in &mut s.tails {
                t.base = mono_subst(&t.base, var, by);
            }
            sum(s)
        }
        Expr::Inv { of } => inv(expr_subst_var(of, var, by)),
    }
}

/// Substitute `q -> q^k` (positive integer k) throughout an expression:
/// q-exponents, steps, shifts and quadratic exponents all scale by `k`;
/// lengths and weights are counts and stay fixed.
pub fn expr_subst_q_power(e: &Expr, k: i64) -> Expr {
    assert!(k >= 1);
    let scale_mono = |m: &Monomial| Monomial::new(m.coef.clone(), m.q_exp * k, m.vars);
    let scale_param = |p: &Param| match p {
        Param::Mono(m) => Param::Mono(scale_mono(m)),
        Param::PairSqrt(m) => Param::PairSqrt(scale_mono(m)),
    };
    let ku32: u32 = k.try_into().expect("q-power too large");
    match e {
        Expr::Const { value } => cnst(value.clone()),
        Expr::MonomialTerm { value } => term(scale_mono(value)),
        Expr::Add { terms } => add(terms.iter().map(|t| expr_subst_q_power(t, k)).collect()),
        Expr::Mul { factors } => mul(factors.iter().map(|t| expr_subst_q_power(t, k)).collect()),
        Expr::Neg { of } => neg(expr_subst_q_power(of, k)),
        Expr::PochInf { base, step } => pinf(scale_mono(base), step * ku32),
        Expr::PochFin { param, len, step } => pfin(scale_param(param), *len, step * ku32),
        Expr::Sum { spec } => {
            let mut s = spec.clone();
            s.q_quad = crate::blocks::QuadExp {
                a: s.q_quad.a * k,
                b: s.q_quad.b * k,
                c: s.q_quad.c * k,
            };
            s.power_mono = scale_mono(&s.power_mono);
            for f in &mut s.factors {
                f.param = scale_param(&f.param);
                f.step *= ku32;
                f.shift = crate::blocks::Affine::new(f.shift.a * k, f.shift.b * k);
            }
            for t in &mut s.tails {
                t.base = scale_mono(&t.base);
                t.step *= ku32;
                t.shift = crate::blocks::Affine::new(t.shift.a * k, t.shift.b * k);
            }
            sum(s)
        }
        Expr::Inv { of } => inv(expr_subst_q_power(of, k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::{theta_complete, theta_partial_spec, Affine, PochFactor};
    use crate::laurent::rat_int;

    fn qm(e: i64) -> Monomial {
        Monomial::q_pow(e)
    }

    fn xm() -> Monomial {
        Monomial::var_pow(Var::X, 1)
    }

    fn ym() -> Monomial {
        Monomial::var_pow(Var::Y, 1)
    }

    fn lp(s: &str) -> LaurentPoly {
        s.parse().unwrap()
    }

    #[test]
    fn eval_triple_product_expr() {
        // (q, x, q/x)_inf at order 1: q^1 coefficient is x^2 - x^-1
        let q_over_x = Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, -1));
        let e = mul(vec![pinf(qm(1), 1), pinf(xm(), 1), pinf(q_over_x, 1)]);
        let s = eval_expr(&e, 1).unwrap();
        assert_eq!(s.coeff(0).unwrap(), lp("1 - x"));
        assert_eq!(s.coeff(1).unwrap(), lp("-x^-1 + x^2"));
        // matches the bilateral theta coefficient
        let t = theta_complete(&xm(), 1).unwrap();
        assert!(s.diff_report(&t).unwrap().is_none());
    }

    #[test]
    fn eval_const_one() {
        let s = eval_expr(&cnst_int(1), 7).unwrap();
        assert!(s.diff_report(&QSeries::one(7)).unwrap().is_none());
    }

    #[test]
    fn validator_rejects_raw_denominator() {
        // denominator (xy)_n has q-valuation 0
        let spec = SumSpec::new(SumRange::NonNegative, qm(1)).factor(PochFactor::den(
            Param::Mono(xm().mul(&ym())),
            1,
            Affine::new(1, 0),
        ));
        let err = validate_evaluable(&sum(spec)).unwrap_err();
        match err {
            Error::NonEvaluable { reason, .. } => assert!(reason.contains("q-valuation")),
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn validator_rejects_inv_pochinf_x() {
        let e = inv(pinf(xm(), 1));
        let err = validate_evaluable(&e).unwrap_err();
        match err {
            Error::NonEvaluable { reason, .. } => {
                assert!(reason.contains("not a monomial unit"), "{reason}")
            }
            other => panic!("wrong error {other}"),
        }
    }

    #[test]
    fn validator_accepts_normalized_sum() {
        // the (xy q^n)_n / (q, qx, qy)_n shape
        let xy = xm().mul(&ym());
        let spec = SumSpec::new(SumRange::NonNegative, qm(1))
            .factor(
                PochFactor::num(Param::Mono(xy), 1, Affine::new(1, 0))
                    .with_shift(Affine::new(1, 0)),
            )
            .factor(PochFactor::den(Param::Mono(qm(1)), 1, Affine::new(1, 0)))
            .factor(PochFactor::den(
                Param::Mono(xm().shift_q(1)),
                1,
                Affine::new(1, 0),
            ))
            .factor(PochFactor::den(
                Param::Mono(ym().shift_q(1)),
                1,
                Affine::new(1, 0),
            ));
        let cert = validate_evaluable(&sum(spec)).unwrap();
        assert_eq!(cert.sums.len(), 1);
    }

    #[test]
    fn inverse_of_geometric_products() {
        // 1/(q; q)_inf via the structural path
        let e = inv(pinf(qm(1), 1));
        let s = eval_expr(&e, 8).unwrap();
        let back = s.mul(&crate::blocks::poch_infinite(&qm(1), 1, 8)).unwrap();
        assert!(back
            .diff_report(&QSeries::one(back.order()))
            .unwrap()
            .is_none());
    }

    #[test]
    fn eval_inverse_of_monomial_leading() {
        // 1/(-x + q) has leading coefficient -x, a monomial unit
        let e = inv(add(vec![
            term(Monomial::new(rat_int(-1), 0, ExpVec::var(Var::X, 1))),
            term(qm(1)),
        ]));
        let s = eval_expr(&e, 5).unwrap();
        let f = eval_expr(
            &add(vec![
                term(Monomial::new(rat_int(-1), 0, ExpVec::var(Var::X, 1))),
                term(qm(1)),
            ]),
            10,
        )
        .unwrap();
        let prod = s.mul(&f).unwrap();
        assert!(prod
            .diff_report(&QSeries::one(prod.order()))
            .unwrap()
            .is_none());
    }

    #[test]
    fn subst_var_on_theta_spec() {
        // substituting x -> -q into the partial theta spec matches the
        // series-level substitution
        let e = sum(theta_partial_spec(&xm()));
        let minus_q = Monomial::new(rat_int(-1), 1, ExpVec::zero());
        let e2 = expr_subst_var(&e, Var::X, &minus_q);
        let direct = eval_expr(&e2, 10).unwrap();
        let via_series = eval_expr(&e, 14)
            .unwrap()
            .subst_var(Var::X, &minus_q)
            .unwrap()
            .truncated(10);
        assert!(direct
            .truncated(10)
            .diff_report(&via_series)
            .unwrap()
            .is_none());
    }

    #[test]
    fn subst_q_power_on_expr() {
        let e = pinf(qm(1), 1);
        let e2 = expr_subst_q_power(&e, 2);
        let direct = eval_expr(&e2, 12).unwrap();
        let via_series = eval_expr(&e, 6).unwrap().subst_q_power(2);
        assert!(direct
            .truncated(12)
            .diff_report(&via_series)
            .unwrap()
            .is_none());
    }

    #[test]
    fn json_roundtrip() {
        let q_over_x = Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, -1));
        let e = mul(vec![
            pinf(qm(1), 1),
            neg(cnst(lp("1 - x"))),
            inv(pinf(q_over_x, 1)),
            sum(theta_partial_spec(&xm())),
            pfin(Param::PairSqrt(xm()), 3, 1),
        ]);
        let s = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
