//! Truncated Laurent series in `q` with [`LaurentPoly`] coefficients.
//!
//! A [`QSeries`] stores exact coefficients for q-exponents in `lo..=order`.
//! `lo` is structural: every coefficient below it is exactly zero. `order`
//! is a validity ceiling: coefficients above it were truncated away and are
//! unknown. Arithmetic propagates both bounds pessimistically, so a result
//! never claims coefficients it cannot actually stand behind.
//!
//! Exponents are integers; `base_div` records what one unit of exponent
//! means (multiples of `1/base_div`). All arithmetic requires operands to
//! agree on it.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{ExpVec, LaurentPoly, Rational, Var};

/// A monomial `coef * q^q_exp * x^a y^b u^c v^d` with nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub coef: Rational,
    pub q_exp: i64,
    pub vars: ExpVec,
}

impl Monomial {
    pub fn new(coef: Rational, q_exp: i64, vars: ExpVec) -> Monomial {
        assert!(!coef.is_zero(), "monomial coefficient must be nonzero");
        Monomial { coef, q_exp, vars }
    }

    pub fn one() -> Monomial {
        Monomial::new(Rational::one(), 0, ExpVec::zero())
    }

    /// `q^e`.
    pub fn q_pow(e: i64) -> Monomial {
        Monomial::new(Rational::one(), e, ExpVec::zero())
    }

    /// `v^e`.
    pub fn var_pow(v: Var, e: i32) -> Monomial {
        Monomial::new(Rational::one(), 0, ExpVec::var(v, e))
    }

    pub fn is_one(&self) -> bool {
        self.coef.is_one() && self.q_exp == 0 && self.vars.is_zero()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::new(
            &self.coef * &other.coef,
            self.q_exp + other.q_exp,
            self.vars.add(&other.vars),
        )
    }

    pub fn inverse(&self) -> Monomial {
        Monomial::new(self.coef.recip(), -self.q_exp, self.vars.neg())
    }

    /// Integer power, negative allowed.
    pub fn pow(&self, k: i64) -> Monomial {
        if k == 0 {
            return Monomial::one();
        }
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let n = k.unsigned_abs();
        let mut coef = Rational::one();
        for _ in 0..n {
            coef *= &base.coef;
        }
        Monomial::new(
            coef,
            base.q_exp * n as i64,
            base.vars
                .scale(n.try_into().expect("monomial power too large")),
        )
    }

    /// Multiply by `q^k`.
    pub fn shift_q(&self, k: i64) -> Monomial {
        Monomial::new(self.coef.clone(), self.q_exp + k, self.vars)
    }

    /// The coefficient part as a Laurent polynomial (drops the q-power).
    pub fn var_part(&self) -> LaurentPoly {
        LaurentPoly::term(self.coef.clone(), self.vars)
    }

    /// True if the monomial is `c * q^e` with no formal variables.
    pub fn is_pure_q(&self) -> bool {
        self.vars.is_zero()
    }

    /// If the monomial is a perfect square `w^2` (square rational
    /// coefficient, even exponents), return `w` with positive coefficient.
    pub fn sqrt_exact(&self) -> Option<Monomial> {
        if self.q_exp % 2 != 0 {
            return None;
        }
        for v in Var::ALL {
            if self.vars.get(v) % 2 != 0 {
                return None;
            }
        }
        if self.coef.is_negative() {
            return None;
        }
        let ns = num_integer::Roots::sqrt(self.coef.numer());
        let ds = num_integer::Roots::sqrt(self.coef.denom());
        if &(&ns * &ns) != self.coef.numer() || &(&ds * &ds) != self.coef.denom() {
            return None;
        }
        let mut half = ExpVec::zero();
        for v in Var::ALL {
            half.0[v.index()] = self.vars.get(v) / 2;
        }
        Some(Monomial::new(Rational::new(ns, ds), self.q_exp / 2, half))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poly = LaurentPoly::term(self.coef.clone(), self.vars);
        if self.q_exp == 0 {
            write!(f, "{poly}")
        } else if poly.is_one() {
            write!(f, "q^{}", self.q_exp)
        } else {
            write!(f, "{poly} * q^{}", self.q_exp)
        }
    }
}

/// First point of disagreement between two series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MismatchRecord {
    /// Smallest q-exponent whose coefficients differ.
    pub q_exp: i64,
    /// `lhs - rhs` coefficient there; never zero.
    pub diff: LaurentPoly,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct MismatchJson {
    pub q_exp: i64,
    pub diff: String,
}

impl From<&MismatchRecord> for MismatchJson {
    fn from(m: &MismatchRecord) -> Self {
        MismatchJson {
            q_exp: m.q_exp,
            diff: m.diff.to_string(),
        }
    }
}

/// Truncated q-Laurent series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    lo: i64,
    order: i64,
    base_div: u32,
    coeffs: BTreeMap<i64, LaurentPoly>,
}

impl QSeries {
    pub fn zero(order: i64) -> QSeries {
        QSeries {
            lo: 0,
            order,
            base_div: 1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(order: i64) -> QSeries {
        QSeries::constant(LaurentPoly::one(), order)
    }

    pub fn constant(p: LaurentPoly, order: i64) -> QSeries {
        let mut s = QSeries::zero(order);
        if !p.is_zero() && order >= 0 {
            s.coeffs.insert(0, p);
        }
        s
    }

    /// A single monomial as a series valid through `order`.
    pub fn monomial(m: &Monomial, order: i64) -> QSeries {
        let mut s = QSeries::zero(order);
        s.lo = m.q_exp.min(0);
        if m.q_exp <= order {
            s.coeffs.insert(m.q_exp, m.var_part());
        }
        s
    }

    pub fn with_base_div(mut self, base_div: u32) -> QSeries {
        assert!(base_div >= 1);
        self.base_div = base_div;
        self
    }

    /// Build from explicit terms; terms above `order` are dropped, the floor
    /// is the minimum term exponent (or 0 for an empty list).
    pub fn from_terms(order: i64, terms: impl IntoIterator<Item = (i64, LaurentPoly)>) -> QSeries {
        let mut s = QSeries::zero(order);
        let mut min_e: Option<i64> = None;
        for (e, p) in terms {
            min_e = Some(min_e.map_or(e, |m: i64| m.min(e)));
            if e <= order && !p.is_zero() {
                let entry = s.coeffs.entry(e).or_insert_with(LaurentPoly::zero);
                entry.add_assign(&p);
                if entry.is_zero() {
                    s.coeffs.remove(&e);
                }
            }
        }
        if let Some(m) = min_e {
            s.lo = m.min(0).min(s.lo);
            s.lo = s.lo.min(m);
        }
        s
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn base_div(&self) -> u32 {
        self.base_div
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &LaurentPoly)> {
        self.coeffs.iter()
    }

    /// Exact coefficient of `q^e`. Below the structural floor the value is
    /// zero by construction; above `order` nothing is known.
    pub fn coeff(&self, e: i64) -> Result<LaurentPoly> {
        if e > self.order {
            return Err(Error::OrderExceeded {
                requested: e,
                lo: self.lo,
                order: self.order,
            });
        }
        Ok(self
            .coeffs
            .get(&e)
            .cloned()
            .unwrap_or_else(LaurentPoly::zero))
    }

    pub fn coeff_ref(&self, e: i64) -> Option<&LaurentPoly> {
        self.coeffs.get(&e)
    }

    /// Lowest exponent with a nonzero stored coefficient.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    fn check_base(&self, other: &QSeries) -> Result<()> {
        if self.base_div != other.base_div {
            return Err(Error::BaseDivMismatch(self.base_div, other.base_div));
        }
        Ok(())
    }

    fn insert_add(&mut self, e: i64, p: &LaurentPoly) {
        if e > self.order || p.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(LaurentPoly::zero);
        entry.add_assign(p);
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn add(&self, other: &QSeries) -> Result<QSeries> {
        self.check_base(other)?;
        let mut out = QSeries::zero(self.order.min(other.order));
        out.base_div = self.base_div;
        out.lo = self.lo.min(other.lo);
        for (e, p) in &self.coeffs {
            out.insert_add(*e, p);
        }
        for (e, p) in &other.coeffs {
            out.insert_add(*e, p);
        }
        Ok(out)
    }

    pub fn neg(&self) -> QSeries {
        let mut out = self.clone();
        for p in out.coeffs.values_mut() {
            *p = p.neg();
        }
        out
    }

    pub fn sub(&self, other: &QSeries) -> Result<QSeries> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> QSeries {
        let mut out = QSeries::zero(self.order);
        out.base_div = self.base_div;
        out.lo = self.lo;
        if c.is_zero() {
            return out;
        }
        for (e, p) in &self.coeffs {
            out.coeffs.insert(*e, p.scale(c));
        }
        out
    }

    /// Cauchy product with pessimistic order bookkeeping:
    /// `order = min(a.order + b.lo, b.order + a.lo)`, `lo = a.lo + b.lo`.
    pub fn mul(&self, other: &QSeries) -> Result<QSeries> {
        self.mul_clipped(other, None)
    }

    pub(crate) fn mul_clipped(&self, other: &QSeries, window: Option<i64>) -> Result<QSeries> {
        self.check_base(other)?;
        let order = (self.order + other.lo).min(other.order + self.lo);
        let mut out = QSeries::zero(order);
        out.base_div = self.base_div;
        out.lo = self.lo + other.lo;
        for (ea, pa) in &self.coeffs {
            for (eb, pb) in &other.coeffs {
                let e = ea + eb;
                if e > order {
                    continue;
                }
                let prod = pa.mul(pb);
                out.insert_add(e, &prod);
            }
        }
        if let Some(w) = window {
            out.clip_window_mut(w);
        }
        Ok(out)
    }

    /// Multiply by a single monomial (exact, order shifts with its q-power).
    pub fn mul_monomial(&self, m: &Monomial) -> QSeries {
        let mut out = QSeries::zero(self.order + m.q_exp);
        out.base_div = self.base_div;
        out.lo = self.lo + m.q_exp;
        for (e, p) in &self.coeffs {
            out.coeffs.insert(e + m.q_exp, p.mul_term(&m.vars, &m.coef));
        }
        out
    }

    /// Multiply in place by `(1 - m)`, truncating at the current order.
    /// Validity: if `m.q_exp < 0` the order drops by `|m.q_exp|`.
    pub(crate) fn mul_one_minus(&self, m: &Monomial, window: Option<i64>) -> QSeries {
        let shifted = self.mul_monomial(m);
        let mut out = QSeries::zero(self.order.min(shifted.order));
        out.base_div = self.base_div;
        out.lo = self.lo.min(shifted.lo);
        for (e, p) in &self.coeffs {
            out.insert_add(*e, p);
        }
        for (e, p) in &shifted.coeffs {
            out.insert_add(*e, &p.neg());
        }
        if let Some(w) = window {
            out.clip_window_mut(w);
        }
        out
    }

    /// Multiply by the geometric expansion of `1/(1 - m)`.
    ///
    /// Exact mode requires `q`-valuation of `m` at least 1. Windowed mode
    /// (`window = Some(w)`) additionally accepts monomials with a variable
    /// part (the expansion self-truncates once variable exponents leave the
    /// window) and pure constants other than 1.
    pub(crate) fn mul_geom_inv(&self, m: &Monomial, window: Option<i64>) -> Result<QSeries> {
        let v = m.q_exp;
        if v >= 1 {
            // sum m^k while k*v stays within reach of the order
            let mut out = self.clone();
            let mut term = self.clone();
            let mut k = 1i64;
            while self.lo + k * v <= out.order {
                term = term.mul_monomial(m);
                term.truncate_to(out.order);
                if let Some(w) = window {
                    term.clip_window_mut(w);
                }
                if term.is_zero() {
                    break;
                }
                for (e, p) in &term.coeffs {
                    out.insert_add(*e, p);
                }
                k += 1;
            }
            if let Some(w) = window {
                out.clip_window_mut(w);
            }
            return Ok(out);
        }
        let w = window.ok_or_else(|| {
            Error::NotAUnit(format!(
                "1/(1 - {m}) has q-valuation {v} < 1; exact mode needs a cleared form"
            ))
        })?;
        let deg = i64::from(m.vars.max_abs());
        if deg == 0 {
            // pure constant or pure negative q-power
            if v < 0 {
                return Err(Error::NotAUnit(format!(
                    "1/(1 - {m}) diverges in q even within a window"
                )));
            }
            if m.coef.is_one() {
                return Err(Error::NotAUnit("1/(1 - 1) division by zero".into()));
            }
            let c = (Rational::one() - &m.coef).recip();
            return Ok(self.scale(&c));
        }
        // variable part bounds the number of geometric terms
        let k_max = w / deg;
        let mut out = self.clone();
        if v < 0 {
            // terms reach k_max * v below the current floor, and coefficients
            // above order + k_max * v would need unknown parts of self
            out.lo += v * k_max;
            out.truncate_to(self.order + v * k_max);
        }
        let mut term = self.clone();
        for k in 1..=k_max {
            term = term.mul_monomial(m);
            // the running term must keep the content that later powers will
            // shift down into range: at step k it may be truncated only to
            // out.order - v * (k_max - k)
            term.truncate_to(out.order - v.min(0) * (k_max - k));
            term.clip_window_mut(w);
            if term.is_zero() {
                break;
            }
            for (e, p) in &term.coeffs {
                out.insert_add(*e, p);
            }
        }
        out.clip_window_mut(w);
        Ok(out)
    }

    /// Reduce the validity ceiling, dropping coefficients above it.
    pub fn truncate_to(&mut self, order: i64) {
        if order >= self.order {
            self.order = self.order.min(order);
            return;
        }
        self.order = order;
        self.coeffs.retain(|e, _| *e <= order);
    }

    pub fn truncated(&self, order: i64) -> QSeries {
        let mut out = self.clone();
        out.truncate_to(order);
        out
    }

    pub(crate) fn clip_window_mut(&mut self, window: i64) {
        let mut dead = Vec::new();
        for (e, p) in self.coeffs.iter_mut() {
            *p = p.clip_window(window);
            if p.is_zero() {
                dead.push(*e);
            }
        }
        for e in dead {
            self.coeffs.remove(&e);
        }
    }

    pub fn clip_window(&self, window: i64) -> QSeries {
        let mut out = self.clone();
        out.clip_window_mut(window);
        out
    }

    /// Multiplicative inverse to `n_terms` coefficients past the leading
    /// valuation. The leading coefficient must be a single monomial.
    pub fn invert(&self, n_terms: i64) -> Result<QSeries> {
        let v = self.valuation().ok_or_else(|| {
            Error::NotAUnit("cannot invert the zero series (a vanished factor?)".into())
        })?;
        let lead = &self.coeffs[&v];
        let lead_inv = lead.invert_unit()?;
        // r(e) = lead^{-1} * coeff(v + e) for e >= 1, so that
        // self = lead * q^v * (1 + sum_e r(e) q^e).
        let avail = self.order - v;
        let n = n_terms.min(avail).max(0);
        // back-substitution: c(0) = 1, c(k) = -sum_{i=1..k} r(i) c(k-i)
        let mut c: Vec<LaurentPoly> = Vec::with_capacity(n as usize + 1);
        c.push(LaurentPoly::one());
        for k in 1..=n {
            let mut acc = LaurentPoly::zero();
            for i in 1..=k {
                if let Some(pi) = self.coeffs.get(&(v + i)) {
                    let r = lead_inv.mul(pi);
                    acc.add_assign(&r.mul(&c[(k - i) as usize]).neg());
                }
            }
            c.push(acc);
        }
        let mut out = QSeries::zero(-v + n);
        out.base_div = self.base_div;
        out.lo = -v;
        for (k, ck) in c.into_iter().enumerate() {
            if !ck.is_zero() {
                out.coeffs.insert(-v + k as i64, ck.mul(&lead_inv));
            }
        }
        Ok(out)
    }

    /// Substitute `q -> q^k` for a positive integer `k`.
    pub fn subst_q_power(&self, k: i64) -> QSeries {
        assert!(k >= 1, "q-power substitution requires a positive exponent");
        let mut out = QSeries::zero(self.order * k);
        out.base_div = self.base_div;
        out.lo = self.lo * k;
        for (e, p) in &self.coeffs {
            out.coeffs.insert(e * k, p.clone());
        }
        out
    }

    /// Substitute a formal variable by a monomial (which may itself mention
    /// q, the same variable, or other variables; all occurrences are
    /// replaced simultaneously).
    ///
    /// When the monomial carries a q-power, variable degrees move mass
    /// between q-exponents, so the validity ceiling shrinks by
    /// |q-power| * (worst relevant degree of `var` seen in the stored
    /// window); the window's degree profile stands in for the unknown tail.
    /// An empty resulting validity range is refused.
    pub fn subst_var(&self, var: Var, m: &Monomial) -> Result<QSeries> {
        let alpha = m.q_exp;
        let mut penalty: i64 = 0;
        if alpha != 0 {
            let mut worst: i64 = 0;
            for p in self.coeffs.values() {
                if let Some((kmin, kmax)) = p.exp_range(var) {
                    if alpha > 0 {
                        worst = worst.max(-i64::from(kmin));
                    } else {
                        worst = worst.max(i64::from(kmax));
                    }
                }
            }
            penalty = alpha.abs() * worst;
        }
        let new_order = self.order - penalty;
        let mut out = QSeries::zero(new_order);
        out.base_div = self.base_div;
        let mut min_seen = self.lo.min(new_order);
        for (e, p) in &self.coeffs {
            for (ev, c) in p.terms() {
                let k = i64::from(ev.get(var));
                let target = e + alpha * k;
                min_seen = min_seen.min(target);
                // strip var^k, then multiply by (coef * q^alpha * rest)^k
                let mut stripped = *ev;
                stripped.0[var.index()] = 0;
                let mk = m.pow(k);
                let new_ev = stripped.add(&mk.vars);
                let new_c = c * &mk.coef;
                if target <= new_order {
                    out.insert_add(target, &LaurentPoly::term(new_c, new_ev));
                }
            }
        }
        out.lo = min_seen;
        if out.order < out.lo {
            return Err(Error::Usage(format!(
                "substitution {} -> {m} leaves no validated window (order {} < floor {})",
                var.name(),
                out.order,
                out.lo
            )));
        }
        Ok(out)
    }

    /// Compare two series on every exponent both can speak for:
    /// from the smaller structural floor through the smaller order.
    /// Returns the first disagreement, if any.
    pub fn diff_report(&self, other: &QSeries) -> Result<Option<MismatchRecord>> {
        self.check_base(other)?;
        let hi = self.order.min(other.order);
        let max_lo = self.lo.max(other.lo);
        if max_lo > hi {
            return Err(Error::Usage(format!(
                "no overlap: floors ({}, {}) vs orders ({}, {})",
                self.lo, other.lo, self.order, other.order
            )));
        }
        let lo = self.lo.min(other.lo);
        let mut exps: Vec<i64> = self
            .coeffs
            .range(lo..=hi)
            .map(|(e, _)| *e)
            .chain(other.coeffs.range(lo..=hi).map(|(e, _)| *e))
            .collect();
        exps.sort_unstable();
        exps.dedup();
        for e in exps {
            let a = self.coeffs.get(&e);
            let b = other.coeffs.get(&e);
            let diff = match (a, b) {
                (Some(a), Some(b)) => a.sub(b),
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.neg(),
                (None, None) => continue,
            };
            if !diff.is_zero() {
                return Ok(Some(MismatchRecord { q_exp: e, diff }));
            }
        }
        Ok(None)
    }

    /// Render in the line-per-exponent dump format used by the CLI.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for e in self.lo..=self.order {
            let p = self.coeffs.get(&e);
            match p {
                Some(p) => writeln!(s, "q^{e} : {p}").unwrap(),
                None => writeln!(s, "q^{e} : 0").unwrap(),
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::{rat_int, LaurentPoly};

    fn qp(e: i64, order: i64) -> QSeries {
        QSeries::monomial(&Monomial::q_pow(e), order)
    }

    #[test]
    fn add_examples() {
        let order = 5;
        // (1 - q) + q = 1
        let a = QSeries::one(order).sub(&qp(1, order)).unwrap();
        let sum = a.add(&qp(1, order)).unwrap();
        assert!(sum.diff_report(&QSeries::one(order)).unwrap().is_none());

        // a + 0 truncates to the min order
        let b = qp(3, 7);
        let z = QSeries::zero(4);
        assert_eq!(b.add(&z).unwrap().order(), 4);

        // (1 + x q) + (-x q + q^2) = 1 + q^2
        let xq = QSeries::monomial(&Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, 1)), order);
        let lhs = QSeries::one(order).add(&xq).unwrap();
        let rhs = xq.neg().add(&qp(2, order)).unwrap();
        let got = lhs.add(&rhs).unwrap();
        let want = QSeries::one(order).add(&qp(2, order)).unwrap();
        assert!(got.diff_report(&want).unwrap().is_none());
    }

    #[test]
    fn base_div_mismatch_rejected() {
        let a = QSeries::one(3);
        let b = QSeries::one(3).with_base_div(2);
        assert!(matches!(a.add(&b), Err(Error::BaseDivMismatch(1, 2))));
    }

    #[test]
    fn mul_examples() {
        let order = 6;
        let one_minus_q = QSeries::one(order).sub(&qp(1, order)).unwrap();
        let one_plus_q = QSeries::one(order).add(&qp(1, order)).unwrap();
        let got = one_minus_q.mul(&one_plus_q).unwrap();
        let want = QSeries::one(got.order()).sub(&qp(2, got.order())).unwrap();
        assert!(got.diff_report(&want).unwrap().is_none());

        // (q^-1 x) * (q x^-1) = 1 with lo = -1 on the left factor
        let a = QSeries::monomial(&Monomial::new(rat_int(1), -1, ExpVec::var(Var::X, 1)), 4);
        let b = QSeries::monomial(&Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, -1)), 4);
        assert_eq!(a.lo(), -1);
        let got = a.mul(&b).unwrap();
        assert!(got
            .diff_report(&QSeries::one(got.order()))
            .unwrap()
            .is_none());
    }

    #[test]
    fn mul_cube_binomial() {
        // (1 - q)^3 to order 1 is 1 - 3q (binomial theorem oracle).
        let f = QSeries::one(1).sub(&qp(1, 1)).unwrap();
        let cube = f.mul(&f).unwrap().mul(&f).unwrap();
        assert_eq!(cube.coeff(0).unwrap(), LaurentPoly::one());
        assert_eq!(cube.coeff(1).unwrap(), LaurentPoly::constant(rat_int(-3)));
    }

    #[test]
    fn invert_geometric() {
        // 1/(1 - q) to order 3
        let f = QSeries::one(5).sub(&qp(1, 5)).unwrap();
        let inv = f.invert(3).unwrap();
        for e in 0..=3 {
            assert_eq!(inv.coeff(e).unwrap(), LaurentPoly::one());
        }

        // 1/(-x + q): leading term is the monomial -x at q^0
        let minus_x = QSeries::monomial(&Monomial::new(rat_int(-1), 0, ExpVec::var(Var::X, 1)), 5);
        let f = minus_x.add(&qp(1, 5)).unwrap();
        let inv = f.invert(4).unwrap();
        let prod = f.mul(&inv).unwrap();
        assert!(prod
            .diff_report(&QSeries::one(prod.order()))
            .unwrap()
            .is_none());

        // non-monomial leading coefficient is rejected
        let one_minus_x = QSeries::constant(LaurentPoly::one().sub(&LaurentPoly::var(Var::X)), 5);
        assert!(matches!(one_minus_x.invert(3), Err(Error::NotAUnit(_))));
    }

    #[test]
    fn subst_q_power_examples() {
        let f = QSeries::one(3).sub(&qp(1, 3)).unwrap();
        let g = f.subst_q_power(2);
        assert_eq!(g.order(), 6);
        assert_eq!(g.coeff(2).unwrap(), LaurentPoly::constant(rat_int(-1)));
        assert_eq!(g.coeff(1).unwrap(), LaurentPoly::zero());

        // (1 + x q + q^3) with k = 4
        let xq = QSeries::monomial(&Monomial::new(rat_int(1), 1, ExpVec::var(Var::X, 1)), 3);
        let f = QSeries::one(3).add(&xq).unwrap().add(&qp(3, 3)).unwrap();
        let g = f.subst_q_power(4);
        assert_eq!(g.order(), 12);
        assert_eq!(g.coeff(4).unwrap(), LaurentPoly::var(Var::X));
        assert_eq!(g.coeff(12).unwrap(), LaurentPoly::one());
    }

    #[test]
    fn subst_var_examples() {
        // (1 - x) with x -> q
        let f = QSeries::constant(LaurentPoly::one().sub(&LaurentPoly::var(Var::X)), 4);
        let g = f.subst_var(Var::X, &Monomial::q_pow(1)).unwrap();
        let want = QSeries::one(g.order()).sub(&qp(1, g.order())).unwrap();
        assert!(g.diff_report(&want).unwrap().is_none());

        // (1 - x) with x -> -q
        let h = f
            .subst_var(Var::X, &Monomial::new(rat_int(-1), 1, ExpVec::zero()))
            .unwrap();
        let want = QSeries::one(h.order()).add(&qp(1, h.order())).unwrap();
        assert!(h.diff_report(&want).unwrap().is_none());
    }

    #[test]
    fn coeff_bounds() {
        let f = QSeries::one(3).sub(&qp(1, 3)).unwrap();
        assert_eq!(f.coeff(1).unwrap(), LaurentPoly::constant(rat_int(-1)));
        assert!(matches!(f.coeff(4), Err(Error::OrderExceeded { .. })));
        // structurally zero below the floor
        assert_eq!(f.coeff(-2).unwrap(), LaurentPoly::zero());
    }

    #[test]
    fn diff_report_examples() {
        let a = QSeries::one(3).sub(&qp(1, 3)).unwrap();
        assert!(a.diff_report(&a).unwrap().is_none());

        let one = QSeries::one(3);
        let other = QSeries::one(3).add(&qp(2, 3)).unwrap();
        let m = one.diff_report(&other).unwrap().unwrap();
        assert_eq!(m.q_exp, 2);
        assert_eq!(m.diff, LaurentPoly::constant(rat_int(-1)));
    }

    #[test]
    fn monomial_sqrt() {
        let m = Monomial::new(rat_int(4), 2, ExpVec([2, 0, 0, 0]));
        let r = m.sqrt_exact().unwrap();
        assert_eq!(r, Monomial::new(rat_int(2), 1, ExpVec([1, 0, 0, 0])));
        assert!(Monomial::new(rat_int(1), 1, ExpVec::zero())
            .sqrt_exact()
            .is_none());
        assert!(Monomial::new(rat_int(-1), 0, ExpVec::zero())
            .sqrt_exact()
            .is_none());
    }
}
