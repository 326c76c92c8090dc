//! Sparse multivariate Laurent polynomials over arbitrary-precision rationals.
//!
//! These are the coefficients of every q-series in the engine. The scalar
//! type is [`Rational`] (always reduced, positive denominator, zero stored
//! as 0/1). Polynomials live in the fixed variable set `x, y, u, v`;
//! exponents may be negative.
//!
//! The text form is a sum of terms `c * x^a * y^b` with `c` a plain
//! fraction `p/q` (see `docs/formats.md` for the grammar); parsing the
//! printed form recovers an identical term map.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact scalar used everywhere; invariants (reduced form, denominator >= 1)
/// are maintained by the `num-rational` constructors.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(num: i64) -> Rational {
    Rational::from_integer(BigInt::from(num))
}

/// Number of formal variables.
pub const NVARS: usize = 4;

/// The formal variables of the coefficient ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    U,
    V,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::X, Var::Y, Var::U, Var::V];

    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::U => 2,
            Var::V => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::U => "u",
            Var::V => "v",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        match s {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "u" => Some(Var::U),
            "v" => Some(Var::V),
            _ => None,
        }
    }
}

/// Exponent vector of a monomial in `x, y, u, v`.
///
/// Component-wise addition is the monomial product law. All values in one
/// computation share this fixed arity, so the mismatched-arity failure mode
/// is unrepresentable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct ExpVec(pub [i32; NVARS]);

impl ExpVec {
    pub fn zero() -> Self {
        ExpVec([0; NVARS])
    }

    pub fn var(v: Var, e: i32) -> Self {
        let mut ev = ExpVec::zero();
        ev.0[v.index()] = e;
        ev
    }

    pub fn get(&self, v: Var) -> i32 {
        self.0[v.index()]
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &ExpVec) -> ExpVec {
        let mut out = [0; NVARS];
        for (o, (a, b)) in out.iter_mut().zip(self.0.iter().zip(&other.0)) {
            *o = a + b;
        }
        ExpVec(out)
    }

    pub fn neg(&self) -> ExpVec {
        let mut out = [0; NVARS];
        for (o, a) in out.iter_mut().zip(&self.0) {
            *o = -a;
        }
        ExpVec(out)
    }

    pub fn scale(&self, k: i32) -> ExpVec {
        let mut out = [0; NVARS];
        for (o, a) in out.iter_mut().zip(&self.0) {
            *o = a * k;
        }
        ExpVec(out)
    }

    /// Largest |exponent| over all variables.
    pub fn max_abs(&self) -> i32 {
        self.0.iter().map(|e| e.abs()).max().unwrap_or(0)
    }
}

/// Sparse multivariate Laurent polynomial: a finite map from exponent
/// vectors to nonzero rationals. The map form is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<ExpVec, Rational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn one() -> Self {
        LaurentPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = LaurentPoly::zero();
        if !c.is_zero() {
            p.terms.insert(ExpVec::zero(), c);
        }
        p
    }

    /// Single term c * vars^ev.
    pub fn term(c: Rational, ev: ExpVec) -> Self {
        let mut p = LaurentPoly::zero();
        if !c.is_zero() {
            p.terms.insert(ev, c);
        }
        p
    }

    /// The variable itself, e.g. `x`.
    pub fn var(v: Var) -> Self {
        LaurentPoly::term(Rational::one(), ExpVec::var(v, 1))
    }

    pub fn from_terms(ts: impl IntoIterator<Item = (ExpVec, Rational)>) -> Self {
        let mut p = LaurentPoly::zero();
        for (ev, c) in ts {
            p.add_term(&ev, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&ExpVec::zero())
                .map(|c| c.is_one())
                .unwrap_or(false)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExpVec, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, ev: &ExpVec) -> Rational {
        self.terms.get(ev).cloned().unwrap_or_else(Rational::zero)
    }

    /// If the polynomial is a single term, return it.
    pub fn as_monomial(&self) -> Option<(ExpVec, Rational)> {
        if self.terms.len() == 1 {
            let (ev, c) = self.terms.iter().next().unwrap();
            Some((*ev, c.clone()))
        } else {
            None
        }
    }

    pub fn add_term(&mut self, ev: &ExpVec, c: &Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(*ev) {
            Entry::Vacant(e) => {
                e.insert(c.clone());
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + c;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &LaurentPoly) {
        for (ev, c) in &other.terms {
            self.add_term(ev, c);
        }
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (ev, c) in &other.terms {
            out.add_term(ev, &(-c.clone()));
        }
        out
    }

    pub fn neg(&self) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (ev, c) in &self.terms {
            out.terms.insert(*ev, -c.clone());
        }
        out
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(&ea.add(eb), &(ca * cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero();
        }
        let mut out = LaurentPoly::zero();
        for (ev, cc) in &self.terms {
            out.terms.insert(*ev, cc * c);
        }
        out
    }

    /// Multiply by a single term c * vars^ev.
    pub fn mul_term(&self, ev: &ExpVec, c: &Rational) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero();
        }
        let mut out = LaurentPoly::zero();
        for (e, cc) in &self.terms {
            out.terms.insert(e.add(ev), cc * c);
        }
        out
    }

    /// Inverse of a one-term polynomial `c * m`; anything else is not a unit
    /// of the Laurent ring and signals an identity registered in a
    /// non-evaluable form.
    pub fn invert_unit(&self) -> Result<LaurentPoly> {
        match self.as_monomial() {
            Some((ev, c)) => Ok(LaurentPoly::term(c.recip(), ev.neg())),
            None => Err(Error::NotAUnit(format!(
                "{self} has {} terms (need exactly one)",
                self.num_terms()
            ))),
        }
    }

    /// Drop every term with a variable exponent outside [-window, window].
    pub fn clip_window(&self, window: i64) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (ev, c) in &self.terms {
            if i64::from(ev.max_abs()) <= window {
                out.terms.insert(*ev, c.clone());
            }
        }
        out
    }

    /// Largest |exponent| of `v` appearing in any term.
    pub fn max_abs_exp(&self, v: Var) -> i32 {
        self.terms
            .keys()
            .map(|ev| ev.get(v).abs())
            .max()
            .unwrap_or(0)
    }

    /// Extreme exponents of `v`: (min, max) over stored terms.
    pub fn exp_range(&self, v: Var) -> Option<(i32, i32)> {
        let mut range: Option<(i32, i32)> = None;
        for ev in self.terms.keys() {
            let e = ev.get(v);
            range = Some(match range {
                None => (e, e),
                Some((lo, hi)) => (lo.min(e), hi.max(e)),
            });
        }
        range
    }
}

fn fmt_coeff(c: &Rational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.denom().is_one() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (ev, c) in &self.terms {
            let neg = c.is_negative();
            let mag = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut wrote_var = false;
            if ev.is_zero() {
                fmt_coeff(&mag, f)?;
            } else {
                if !mag.is_one() {
                    fmt_coeff(&mag, f)?;
                    write!(f, " * ")?;
                }
                for v in Var::ALL {
                    let e = ev.get(v);
                    if e == 0 {
                        continue;
                    }
                    if wrote_var {
                        write!(f, " * ")?;
                    }
                    wrote_var = true;
                    if e == 1 {
                        write!(f, "{}", v.name())?;
                    } else {
                        write!(f, "{}^{}", v.name(), e)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parser for the printed form. Grammar in `docs/formats.md`.
impl FromStr for LaurentPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<LaurentPoly> {
        let mut p = LaurentPoly::zero();
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        if s == "0" {
            return Ok(p);
        }
        // Split into signed terms at top level (no parentheses in grammar).
        let mut rest = s;
        let mut sign = 1i64;
        // leading sign
        if let Some(r) = rest.strip_prefix('-') {
            sign = -1;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        }
        loop {
            // find the next top-level " + " or " - "
            let (term_str, next) = match rest.find(" + ").into_iter().chain(rest.find(" - ")).min()
            {
                Some(pos) => {
                    let (t, r) = rest.split_at(pos);
                    let next_sign = if r.starts_with(" + ") { 1 } else { -1 };
                    (t, Some((next_sign, &r[3..])))
                }
                None => (rest, None),
            };
            let (ev, c) = parse_term(term_str.trim())?;
            p.add_term(&ev, &(c * rat_int(sign)));
            match next {
                Some((next_sign, r)) => {
                    sign = next_sign;
                    rest = r;
                }
                None => break,
            }
        }
        Ok(p)
    }
}

fn parse_term(s: &str) -> Result<(ExpVec, Rational)> {
    let mut coeff = Rational::one();
    let mut ev = ExpVec::zero();
    let mut saw_any = false;
    for piece in s.split('*') {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(Error::Parse(format!("empty factor in term '{s}'")));
        }
        saw_any = true;
        let first = piece.chars().next().unwrap();
        if first.is_ascii_digit() || first == '-' || first == '+' {
            // rational coefficient p or p/q
            let c = parse_rational(piece)?;
            coeff *= c;
        } else {
            // var or var^exp
            let (name, exp) = match piece.split_once('^') {
                Some((n, e)) => {
                    let exp: i32 = e
                        .trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad exponent '{e}'")))?;
                    (n.trim(), exp)
                }
                None => (piece, 1),
            };
            let v = Var::from_name(name)
                .ok_or_else(|| Error::Parse(format!("unknown variable '{name}'")))?;
            ev = ev.add(&ExpVec::var(v, exp));
        }
    }
    if !saw_any {
        return Err(Error::Parse(format!("empty term '{s}'")));
    }
    Ok((ev, coeff))
}

pub(crate) fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|_| Error::Parse(format!("bad integer '{num}'")))?;
    let d = BigInt::from_str(den).map_err(|_| Error::Parse(format!("bad integer '{den}'")))?;
    if d.is_zero() {
        return Err(Error::Parse("zero denominator".into()));
    }
    Ok(Rational::new(n, d))
}
