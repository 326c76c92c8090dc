//! Builders for the named q-series objects: q-shifted factorials (finite,
//! infinite, paired-square-root), theta and partial theta sums, Gaussian
//! binomials, basic hypergeometric series, and a generic valuation-bounded
//! sum evaluator that covers all of them.
//!
//! Square roots never appear: parameter pairs `±sqrt(m)` are represented
//! jointly by [`Param::PairSqrt`], whose Pochhammer contribution is
//! `(m; q^{2 step})_len`, so every exponent stays an integer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::Rational;
use crate::series::{Monomial, QSeries};
use num_traits::One;

/// A Pochhammer parameter: a plain monomial, or a `±sqrt(m)` pair entered
/// jointly. The pair contributes `(m; q^{2 step})_len`; an unpaired square
/// root is unrepresentable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Param {
    Mono(Monomial),
    PairSqrt(Monomial),
}

impl Param {
    /// The base monomial whose powers occur, with the effective step.
    pub fn resolved(&self, step: u32) -> (&Monomial, u32) {
        match self {
            Param::Mono(m) => (m, step),
            Param::PairSqrt(m) => (m, 2 * step),
        }
    }
}

/// An integer-affine function of the summation index: `a*n + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub a: i64,
    pub b: i64,
}

impl Affine {
    pub const ZERO: Affine = Affine { a: 0, b: 0 };

    pub fn new(a: i64, b: i64) -> Affine {
        Affine { a, b }
    }

    pub const fn constant(b: i64) -> Affine {
        Affine { a: 0, b }
    }

    pub fn eval(&self, n: i64) -> i64 {
        self.a * n + self.b
    }

    pub fn is_constant(&self) -> bool {
        self.a == 0
    }
}

/// Which side of the summand's fraction a factor lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Numerator,
    Denominator,
}

/// One q-shifted factorial attached to each summand:
/// `(param * q^{shift(n)}; q^step)_{len(n)}`, on the given side.
///
/// Denominator factors must have q-valuation at least 1 after
/// normalization, so their inverses expand as geometric series; this is
/// checked by the evaluability validator, never discovered mid-sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PochFactor {
    pub param: Param,
    pub shift: Affine,
    pub len: Affine,
    pub step: u32,
    pub side: Side,
}

impl PochFactor {
    pub fn num(param: Param, step: u32, len: Affine) -> PochFactor {
        PochFactor {
            param,
            shift: Affine::ZERO,
            len,
            step,
            side: Side::Numerator,
        }
    }

    pub fn den(param: Param, step: u32, len: Affine) -> PochFactor {
        PochFactor {
            param,
            shift: Affine::ZERO,
            len,
            step,
            side: Side::Denominator,
        }
    }

    pub fn with_shift(mut self, shift: Affine) -> PochFactor {
        self.shift = shift;
        self
    }

    /// Base monomial (shift folded in at index `n`), effective step, length.
    pub(crate) fn instantiate(&self, n: i64) -> (Monomial, i64, i64) {
        let (m, s) = self.param.resolved(self.step);
        let base = m.shift_q(self.shift.eval(n));
        (base, i64::from(s), self.len.eval(n).max(0))
    }
}

/// A per-summand infinite product `(base * q^{shift(n)}; q^step)_inf`.
/// Arises from folding a standalone infinite product against a denominator
/// factor with the same base: `(a)_inf / (a)_n = (a q^n)_inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailFactor {
    pub base: Monomial,
    pub shift: Affine,
    pub step: u32,
}

impl TailFactor {
    pub fn new(base: Monomial, step: u32, shift: Affine) -> TailFactor {
        TailFactor { base, step, shift }
    }
}

/// Index range of a sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumRange {
    NonNegative,
    FromOne,
    AllIntegers,
}

/// Integer-valued quadratic exponent `n -> (a n^2 + b n + c)/2`;
/// `a + b` and `c` must be even so the value is always an integer.
/// `binom(n, 2) = (n^2 - n)/2` is `(1, -1, 0)` and covers negative `n`
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadExp {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadExp {
    pub const ZERO: QuadExp = QuadExp { a: 0, b: 0, c: 0 };

    /// binom(n, 2)
    pub const BINOM2: QuadExp = QuadExp { a: 1, b: -1, c: 0 };

    pub fn eval(&self, n: i64) -> i64 {
        let v = self.a * n * n + self.b * n + self.c;
        debug_assert!(v % 2 == 0, "quadratic exponent must be integer-valued");
        v / 2
    }

    pub fn parity_ok(&self) -> bool {
        (self.a + self.b) % 2 == 0 && self.c % 2 == 0
    }
}

/// Uniform container for every sum the engine evaluates:
///
/// ```text
/// sum over n in range of
///   (-1)^n?  *  weight(n)  *  q^{q_quad(n)}  *  power_mono^n
///   *  prod numerator factors  /  prod denominator factors
///   *  prod tails
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumSpec {
    pub range: SumRange,
    pub alternating: bool,
    pub q_quad: QuadExp,
    pub power_mono: Monomial,
    /// Integer polynomial in n, low coefficients first; `[1]` means weight 1.
    pub weight: Vec<i64>,
    pub factors: Vec<PochFactor>,
    pub tails: Vec<TailFactor>,
}

impl SumSpec {
    pub fn new(range: SumRange, power_mono: Monomial) -> SumSpec {
        SumSpec {
            range,
            alternating: false,
            q_quad: QuadExp::ZERO,
            power_mono,
            weight: vec![1],
            factors: Vec::new(),
            tails: Vec::new(),
        }
    }

    pub fn alternating(mut self) -> SumSpec {
        self.alternating = true;
        self
    }

    pub fn quad(mut self, a: i64, b: i64, c: i64) -> SumSpec {
        self.q_quad = QuadExp { a, b, c };
        self
    }

    pub fn weight_poly(mut self, coeffs: &[i64]) -> SumSpec {
        self.weight = coeffs.to_vec();
        self
    }

    pub fn factor(mut self, f: PochFactor) -> SumSpec {
        self.factors.push(f);
        self
    }

    pub fn tail(mut self, t: TailFactor) -> SumSpec {
        self.tails.push(t);
        self
    }

    fn start(&self) -> i64 {
        match self.range {
            SumRange::NonNegative | SumRange::AllIntegers => 0,
            SumRange::FromOne => 1,
        }
    }

    fn weight_at(&self, n: i64) -> i64 {
        let mut acc: i64 = 0;
        for &c in self.weight.iter().rev() {
            acc = acc * n + c;
        }
        acc
    }

    /// Structural evaluability check. `window` enables the lenient rules of
    /// windowed mode. Returns a human-readable reason on failure.
    pub fn validate(&self, window: Option<i64>) -> std::result::Result<(), String> {
        if !self.q_quad.parity_ok() {
            return Err(format!(
                "quadratic exponent ({},{},{})/2 is not integer-valued",
                self.q_quad.a, self.q_quad.b, self.q_quad.c
            ));
        }
        let n0 = self.start();
        let bilateral = self.range == SumRange::AllIntegers;
        for (i, f) in self.factors.iter().enumerate() {
            if bilateral && (!f.len.is_constant() || !f.shift.is_constant()) {
                return Err(format!(
                    "factor #{i}: bilateral sums require constant factor lengths/shifts"
                ));
            }
            if f.len.a < 0 || f.len.eval(n0) < 0 {
                return Err(format!(
                    "factor #{i}: length {}n+{} goes negative on the range",
                    f.len.a, f.len.b
                ));
            }
            if f.shift.a < 0 {
                return Err(format!("factor #{i}: decreasing shift is unsupported"));
            }
            if f.step == 0 {
                return Err(format!("factor #{i}: step must be positive"));
            }
            if f.side == Side::Denominator {
                let (base, _, _) = f.instantiate(n0);
                let v = base.q_exp;
                if v < 1 {
                    match window {
                        None => {
                            return Err(format!(
                                "factor #{i}: denominator ({base}; q^{}) has q-valuation {v} < 1; \
                                 the identity needs normalization (fold or cancel it)",
                                f.param.resolved(f.step).1
                            ));
                        }
                        Some(_) => {
                            // windowed mode can expand it if a variable (or a
                            // non-unit constant) bounds the expansion
                            let deg = base.vars.max_abs();
                            if deg == 0 && v < 0 {
                                return Err(format!(
                                    "factor #{i}: denominator ({base}) diverges in q even within a window"
                                ));
                            }
                            if deg == 0 && v == 0 && base.coef.is_one() {
                                return Err(format!(
                                    "factor #{i}: denominator contains the zero factor (1 - 1)"
                                ));
                            }
                        }
                    }
                }
            }
        }
        for (i, t) in self.tails.iter().enumerate() {
            if bilateral && !t.shift.is_constant() {
                return Err(format!("tail #{i}: bilateral sums require constant shifts"));
            }
            if t.shift.a < 0 {
                return Err(format!("tail #{i}: decreasing shift is unsupported"));
            }
            if t.step == 0 {
                return Err(format!("tail #{i}: step must be positive"));
            }
        }
        // divergence of the valuation bound
        let a = self.q_quad.a;
        let slope = self.q_quad.b / 2 + self.power_mono.q_exp; // per-n linear growth for a == 0
        if a < 0 {
            return Err("quadratic exponent opens downward; valuations cannot diverge".into());
        }
        if bilateral {
            if a == 0 {
                return Err(
                    "bilateral sum needs a genuinely quadratic exponent to diverge both ways"
                        .into(),
                );
            }
        } else if a == 0 && slope < 1 {
            return Err(format!(
                "valuation bound grows like {slope} per term; it must diverge (need >= 1 when the quadratic part vanishes)"
            ));
        }
        Ok(())
    }
}

/// Sum of the negative exponents among `v0, v0+s, v0+2s, ...` (at most
/// `len` of them; `None` = unbounded, only finitely many are negative).
fn neg_exponent_sum(v0: i64, s: i64, len: Option<i64>) -> i64 {
    if v0 >= 0 {
        return 0;
    }
    // number of j with v0 + s*j < 0
    let mut c = (-v0 + s - 1) / s;
    if let Some(l) = len {
        c = c.min(l);
    }
    c * v0 + s * c * (c - 1) / 2
}

/// Windowed floor of a denominator factor's expansion: how far below zero
/// its geometric inverse can reach inside the variable window.
pub(crate) fn den_window_floor(base: &Monomial, s: i64, len: i64, window: i64) -> i64 {
    let mut floor = 0i64;
    let deg = i64::from(base.vars.max_abs());
    for j in 0..len {
        let v = base.q_exp + s * j;
        if v >= 1 {
            break; // later factors have higher valuation
        }
        if v < 0 && deg > 0 {
            floor += v * (window / deg);
        }
        // v == 0 or deg == 0 contribute nothing below zero
    }
    floor
}

/// A provable lower bound on the q-valuation of the summand at index `n`:
/// the quadratic exponent, plus `n` times the argument's q-power, plus
/// every negative exponent occurring in numerator factors and tails.
/// Denominator factors contribute zero (their geometric expansions have
/// nonnegative valuation by the validator's rules).
pub fn valuation_bound(spec: &SumSpec, n: i64) -> i64 {
    valuation_bound_opt(spec, n, None)
}

pub(crate) fn valuation_bound_opt(spec: &SumSpec, n: i64, window: Option<i64>) -> i64 {
    let mut b = spec.q_quad.eval(n) + n * spec.power_mono.q_exp;
    for f in &spec.factors {
        let (base, s, len) = f.instantiate(n);
        match f.side {
            Side::Numerator => b += neg_exponent_sum(base.q_exp, s, Some(len)),
            Side::Denominator => {
                if let Some(w) = window {
                    b += den_window_floor(&base, s, len, w);
                }
            }
        }
    }
    for t in &spec.tails {
        let v0 = t.base.q_exp + t.shift.eval(n);
        b += neg_exponent_sum(v0, i64::from(t.step), None);
    }
    b
}

/// Evaluation options: exact mode, or windowed mode with a per-variable
/// exponent window (the brute-force oracle path).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOpts {
    pub window: Option<i64>,
}

impl EvalOpts {
    pub const EXACT: EvalOpts = EvalOpts { window: None };

    pub fn windowed(w: i64) -> EvalOpts {
        EvalOpts { window: Some(w) }
    }
}

// ---------------------------------------------------------------------------
// finite / infinite products
// ---------------------------------------------------------------------------

/// `(param; q^step)_len` truncated at `order`. For a `PairSqrt(m)` this is
/// `(m; q^{2 step})_len`, the pair's joint contribution.
pub fn poch_finite(param: &Param, len: u32, step: u32, order: i64) -> QSeries {
    let (m, s) = param.resolved(step);
    poch_product(
        m,
        i64::from(s),
        Some(i64::from(len)),
        order,
        EvalOpts::EXACT,
    )
}

/// `(m; q^step)_inf` truncated at `order`. Only factors whose q-exponent can
/// influence the window are multiplied; `(1; q)_inf = 0` comes out naturally.
pub fn poch_infinite(m: &Monomial, step: u32, order: i64) -> QSeries {
    poch_product(m, i64::from(step), None, order, EvalOpts::EXACT)
}

pub(crate) fn poch_product(
    m: &Monomial,
    s: i64,
    len: Option<i64>,
    order: i64,
    opts: EvalOpts,
) -> QSeries {
    let g = neg_exponent_sum(m.q_exp, s, len);
    let work = order - g;
    let mut acc = QSeries::one(work);
    let mut j = 0i64;
    loop {
        if let Some(l) = len {
            if j >= l {
                break;
            }
        }
        let e = m.q_exp + s * j;
        if e > work {
            break;
        }
        let factor = Monomial::new(m.coef.clone(), e, m.vars);
        acc = acc.mul_one_minus(&factor, opts.window);
        if acc.is_zero() {
            break;
        }
        j += 1;
    }
    acc.truncate_to(order);
    acc
}

// ---------------------------------------------------------------------------
// sum evaluation
// ---------------------------------------------------------------------------

struct FactorChange {
    multiply: Vec<Monomial>,
    divide: Vec<Monomial>,
    needs_fresh: bool,
}

fn factor_sets_delta(
    base_old: &Monomial,
    base_new: &Monomial,
    s: i64,
    len_old: i64,
    len_new: i64,
) -> FactorChange {
    let dv = base_new.q_exp - base_old.q_exp;
    if dv < 0 || dv % s != 0 {
        return FactorChange {
            multiply: vec![],
            divide: vec![],
            needs_fresh: true,
        };
    }
    let r = dv / s;
    let mut change = FactorChange {
        multiply: vec![],
        divide: vec![],
        needs_fresh: false,
    };
    // old offsets [0, len_old); new offsets (in old coordinates) [r, r + len_new)
    for j in 0..r.min(len_old) {
        change.divide.push(Monomial::new(
            base_old.coef.clone(),
            base_old.q_exp + s * j,
            base_old.vars,
        ));
    }
    for j in len_old.max(r)..(r + len_new) {
        change.multiply.push(Monomial::new(
            base_old.coef.clone(),
            base_old.q_exp + s * j,
            base_old.vars,
        ));
    }
    change
}

/// The combined factor part of a summand (numerators, inverted
/// denominators, tails) as one series, advanced incrementally across `n`
/// where removals stay geometric and recomputed from scratch otherwise.
struct CombinedState {
    value: QSeries,
    work_order: i64,
    cap: i64,
    opts: EvalOpts,
}

impl CombinedState {
    fn fresh(
        spec: &SumSpec,
        n: i64,
        work_order: i64,
        cap: i64,
        opts: EvalOpts,
    ) -> Result<CombinedState> {
        let mut value = QSeries::one(work_order);
        for f in &spec.factors {
            let (base, s, len) = f.instantiate(n);
            match f.side {
                Side::Numerator => {
                    for j in 0..len {
                        let e = base.q_exp + s * j;
                        if e > cap {
                            break;
                        }
                        value = value.mul_one_minus(
                            &Monomial::new(base.coef.clone(), e, base.vars),
                            opts.window,
                        );
                        if value.is_zero() {
                            return Ok(CombinedState {
                                value,
                                work_order,
                                cap,
                                opts,
                            });
                        }
                    }
                }
                Side::Denominator => {
                    for j in 0..len {
                        let e = base.q_exp + s * j;
                        if e > cap {
                            break;
                        }
                        value = value.mul_geom_inv(
                            &Monomial::new(base.coef.clone(), e, base.vars),
                            opts.window,
                        )?;
                    }
                }
            }
        }
        for t in &spec.tails {
            let base = t.base.shift_q(t.shift.eval(n));
            let s = i64::from(t.step);
            let mut j = 0i64;
            loop {
                let e = base.q_exp + s * j;
                if e > cap {
                    break;
                }
                value = value
                    .mul_one_minus(&Monomial::new(base.coef.clone(), e, base.vars), opts.window);
                if value.is_zero() {
                    return Ok(CombinedState {
                        value,
                        work_order,
                        cap,
                        opts,
                    });
                }
                j += 1;
            }
        }
        Ok(CombinedState {
            value,
            work_order,
            cap,
            opts,
        })
    }

    /// Advance from index `n` to `n + 1`; falls back to a fresh computation
    /// when a numerator or tail factor would need a non-geometric division.
    fn advance(&mut self, spec: &SumSpec, n: i64) -> Result<()> {
        let mut mults: Vec<Monomial> = Vec::new();
        let mut num_divs: Vec<Monomial> = Vec::new();
        let mut den_mults: Vec<Monomial> = Vec::new();
        let mut den_divs: Vec<Monomial> = Vec::new();
        for f in &spec.factors {
            let (b_old, s, l_old) = f.instantiate(n);
            let (b_new, _, l_new) = f.instantiate(n + 1);
            let ch = factor_sets_delta(&b_old, &b_new, s, l_old, l_new);
            if ch.needs_fresh {
                *self = CombinedState::fresh(spec, n + 1, self.work_order, self.cap, self.opts)?;
                return Ok(());
            }
            match f.side {
                Side::Numerator => {
                    mults.extend(ch.multiply);
                    num_divs.extend(ch.divide);
                }
                Side::Denominator => {
                    den_divs.extend(ch.multiply);
                    den_mults.extend(ch.divide);
                }
            }
        }
        let mut tail_divs: Vec<Monomial> = Vec::new();
        for t in &spec.tails {
            let b_old = t.base.shift_q(t.shift.eval(n));
            let b_new = t.base.shift_q(t.shift.eval(n + 1));
            let s = i64::from(t.step);
            let dv = b_new.q_exp - b_old.q_exp;
            if dv < 0 || dv % s != 0 {
                *self = CombinedState::fresh(spec, n + 1, self.work_order, self.cap, self.opts)?;
                return Ok(());
            }
            for j in 0..(dv / s) {
                tail_divs.push(Monomial::new(
                    b_old.coef.clone(),
                    b_old.q_exp + s * j,
                    b_old.vars,
                ));
            }
        }
        // numerator and tail removals must be geometric to invert exactly
        if num_divs.iter().chain(tail_divs.iter()).any(|m| m.q_exp < 1) {
            *self = CombinedState::fresh(spec, n + 1, self.work_order, self.cap, self.opts)?;
            return Ok(());
        }
        let w = self.opts.window;
        for m in mults {
            if m.q_exp <= self.cap {
                self.value = self.value.mul_one_minus(&m, w);
            }
        }
        for m in den_mults {
            // a factor leaving the denominator multiplies back in
            if m.q_exp <= self.cap {
                self.value = self.value.mul_one_minus(&m, w);
            }
        }
        for m in num_divs.into_iter().chain(tail_divs) {
            if m.q_exp <= self.cap {
                self.value = self.value.mul_geom_inv(&m, w)?;
            }
        }
        for m in den_divs {
            if m.q_exp <= self.cap {
                self.value = self.value.mul_geom_inv(&m, w)?;
            }
        }
        Ok(())
    }
}

/// Scan one direction (upward from `start` if `dir = 1`, downward if `-1`)
/// collecting indices whose valuation bound reaches the target order.
fn scan_indices(
    spec: &SumSpec,
    start: i64,
    dir: i64,
    order: i64,
    opts: EvalOpts,
) -> Result<Vec<i64>> {
    let a = spec.q_quad.a;
    let bl = spec.q_quad.b + 2 * spec.power_mono.q_exp;
    let c0 = spec.q_quad.c;
    // constant floor for all factor/tail corrections from `start` onward
    let mut gfloor = 0i64;
    for f in &spec.factors {
        let (base, s, len0) = f.instantiate(start);
        match f.side {
            Side::Numerator => gfloor += neg_exponent_sum(base.q_exp, s, None),
            Side::Denominator => {
                if let Some(w) = opts.window {
                    gfloor += den_window_floor(&base, s, len0.max(order.max(1) * 2), w);
                }
            }
        }
    }
    for t in &spec.tails {
        let v0 = t.base.q_exp + t.shift.eval(start);
        gfloor += neg_exponent_sum(v0, i64::from(t.step), None);
    }
    let poly_floor = |n: i64| (a * n * n + bl * n + c0) / 2 + gfloor;
    let mut out = Vec::new();
    let mut n = start;
    let mut steps = 0u64;
    loop {
        let b = valuation_bound_opt(spec, n, opts.window);
        if b <= order {
            out.push(n);
        }
        // safe stop: past the parabola vertex (or on a monotone line) with
        // the floor bound above the target
        let past_vertex = if a > 0 {
            2 * a * n * dir >= -bl * dir
        } else {
            true
        };
        if past_vertex && poly_floor(n) > order && b > order {
            break;
        }
        n += dir;
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::DivergentBound(format!(
                "scanned {steps} indices without the valuation bound clearing order {order}"
            )));
        }
    }
    Ok(out)
}

/// Evaluate the sum exactly to `order`. The given [`SumSpec`] must pass
/// [`SumSpec::validate`]; truncation soundness comes from the valuation
/// bound, certified to diverge before anything is summed.
pub fn sum_eval(spec: &SumSpec, order: i64) -> Result<QSeries> {
    sum_eval_opts(spec, order, EvalOpts::EXACT).map(|r| r.0)
}

/// As [`sum_eval`], also reporting the largest |n| whose term was evaluated.
pub fn sum_eval_opts(spec: &SumSpec, order: i64, opts: EvalOpts) -> Result<(QSeries, i64)> {
    spec.validate(opts.window)
        .map_err(|reason| Error::NonEvaluable {
            path: Default::default(),
            reason,
        })?;

    // constant factors that vanish identically kill every term
    for f in &spec.factors {
        if f.side == Side::Numerator && f.len.is_constant() && f.shift.is_constant() {
            let (base, s, len) = f.instantiate(spec.start());
            for j in 0..len {
                let e = base.q_exp + s * j;
                if e == 0 && base.vars.is_zero() && base.coef.is_one() {
                    return Ok((QSeries::zero(order), 0));
                }
            }
        }
    }

    let mut directions: Vec<(i64, i64)> = vec![(spec.start(), 1)];
    if spec.range == SumRange::AllIntegers {
        directions.push((-1, -1));
    }

    let mut acc = QSeries::zero(order);
    let mut n_max: i64 = 0;
    for (start, dir) in directions {
        let ns = scan_indices(spec, start, dir, order, opts)?;
        if ns.is_empty() {
            continue;
        }
        // global working order from the worst per-term bound
        let b_min = ns
            .iter()
            .map(|&n| valuation_bound_opt(spec, n, opts.window))
            .min()
            .unwrap()
            .min(0);
        let work = order - b_min;
        let cap = work - b_min;
        let mut state: Option<(i64, CombinedState)> = None;
        for &n in &ns {
            n_max = n_max.max(n.abs());
            let w = spec.weight_at(n);
            if w == 0 {
                continue;
            }
            let st = match state.take() {
                Some((prev, mut s)) if dir == 1 && n >= prev => {
                    let mut cur = prev;
                    while cur < n {
                        // advancing a zero state is cheap and keeps the
                        // bookkeeping aligned; only a fresh rebuild revives it
                        s.advance(spec, cur)?;
                        cur += 1;
                    }
                    s
                }
                _ => CombinedState::fresh(spec, n, work, cap, opts)?,
            };
            if st.value.is_zero() {
                // nothing can revive the product unless some factor shifts
                let shifting = spec.factors.iter().any(|f| f.shift.a != 0 || f.len.a != 0)
                    || spec.tails.iter().any(|t| t.shift.a != 0);
                state = Some((n, st));
                if !shifting {
                    break;
                }
                continue;
            }
            let mut coef = Rational::from_integer(w.into());
            if spec.alternating && n.rem_euclid(2) == 1 {
                coef = -coef;
            }
            let mono = Monomial::new(coef, spec.q_quad.eval(n), Default::default())
                .mul(&spec.power_mono.pow(n));
            let term = st.value.mul_monomial(&mono);
            acc = acc.add(&term.truncated(order))?;
            state = Some((n, st));
        }
    }
    if let Some(w) = opts.window {
        acc.clip_window_mut(w);
    }
    Ok((acc, n_max))
}

// ---------------------------------------------------------------------------
// named objects
// ---------------------------------------------------------------------------

/// Spec of the partial theta sum `sum_{n>=0} (-1)^n q^{binom(n,2)} m^n`.
pub fn theta_partial_spec(m: &Monomial) -> SumSpec {
    SumSpec::new(SumRange::NonNegative, m.clone())
        .alternating()
        .quad(1, -1, 0)
}

/// Spec of the complete theta sum `sum_{n in Z} (-1)^n q^{binom(n,2)} m^n`.
pub fn theta_complete_spec(m: &Monomial) -> SumSpec {
    SumSpec::new(SumRange::AllIntegers, m.clone())
        .alternating()
        .quad(1, -1, 0)
}

/// Partial theta sum, truncated at `order`.
pub fn theta_partial(m: &Monomial, order: i64) -> Result<QSeries> {
    sum_eval(&theta_partial_spec(m), order)
}

/// Complete (bilateral) theta sum, truncated at `order`. Equals the triple
/// product `(q, m, q/m)_inf` wherever both make sense.
pub fn theta_complete(m: &Monomial, order: i64) -> Result<QSeries> {
    sum_eval(&theta_complete_spec(m), order)
}

/// Gaussian binomial `[top, bottom]_q = (q)_top / ((q)_bottom (q)_{top-bottom})`,
/// a polynomial in q, truncated at `order`.
pub fn gauss_binom(top: u32, bottom: u32, order: i64) -> Result<QSeries> {
    if bottom > top {
        return Err(Error::Usage(format!(
            "gaussian binomial needs bottom <= top, got [{top} choose {bottom}]"
        )));
    }
    let q = Param::Mono(Monomial::q_pow(1));
    let num = poch_finite(&q, top, 1, order);
    let den = poch_finite(&q, bottom, 1, order).mul(&poch_finite(&q, top - bottom, 1, order))?;
    let inv = den.invert(order)?;
    let mut out = num.mul(&inv)?;
    out.truncate_to(order);
    Ok(out)
}

/// Build the balanced basic hypergeometric sum
/// `sum_j (uppers; Q)_j / ((Q; Q)_j (lowers; Q)_j) * arg^j` with `Q = q^base_step`.
pub fn hypergeometric_spec(
    uppers: &[Param],
    lowers: &[Param],
    arg: &Monomial,
    base_step: u32,
) -> SumSpec {
    let mut spec = SumSpec::new(SumRange::NonNegative, arg.clone());
    for u in uppers {
        spec = spec.factor(PochFactor::num(u.clone(), base_step, Affine::new(1, 0)));
    }
    spec = spec.factor(PochFactor::den(
        Param::Mono(Monomial::q_pow(i64::from(base_step))),
        base_step,
        Affine::new(1, 0),
    ));
    for l in lowers {
        spec = spec.factor(PochFactor::den(l.clone(), base_step, Affine::new(1, 0)));
    }
    spec
}

/// Evaluate a balanced basic hypergeometric series; the compiled spec must
/// pass the evaluability rules (cleared denominators).
pub fn hypergeometric(
    uppers: &[Param],
    lowers: &[Param],
    arg: &Monomial,
    base_step: u32,
    order: i64,
) -> Result<QSeries> {
    sum_eval(&hypergeometric_spec(uppers, lowers, arg, base_step), order)
}
