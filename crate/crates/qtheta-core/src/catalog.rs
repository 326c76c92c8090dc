//! The identity catalog: every identity the engine verifies, stored in an
//! evaluable normal form together with a raw form for the windowed oracle
//! and provenance describing how the stored form was obtained.
//!
//! Naming convention for references: classical results carry their usual
//! names; numbered transformations cite Gasper & Rahman, "Basic
//! Hypergeometric Series" (GR).

use std::collections::BTreeMap;
use std::time::Instant;

use crate::blocks::{Affine, Param, PochFactor, SumRange, SumSpec, TailFactor};
use crate::error::{Error, Result};
use crate::expr::{
    add, cnst, eval_expr_opts, expr_subst_q_power, expr_subst_var, inv, mul, neg, pfin, pinf, sum,
    term, validate_evaluable, EvalStats, Expr,
};
use crate::laurent::{rat_int, ExpVec, LaurentPoly, Var};
use crate::rewrite::normalize;
use crate::series::{MismatchRecord, Monomial};
use serde::{Deserialize, Serialize};

/// How a stored form relates to the published one.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Registered exactly as published.
    Direct,
    /// Same identity, denominators folded/cancelled by value-preserving
    /// rewrites only.
    Rewritten { note: String },
    /// Both sides multiplied by a clearing factor first.
    Cleared { multiplier: String, note: String },
    /// A transformation verified at a recorded monomial specialization
    /// (one formal variable stays alive).
    Specialized { bindings: String, note: String },
}

/// One verifiable identity.
#[derive(Debug, Clone)]
pub struct Identity {
    pub id: String,
    pub title: String,
    /// Literature reference or descriptive name.
    pub source: String,
    /// Stored, evaluable sides (normal form).
    pub lhs: Expr,
    pub rhs: Expr,
    /// Value-equal raw routes for the windowed oracle (clearing multiplier
    /// already folded in); `None` means the stored side is already the raw
    /// route.
    pub oracle_lhs: Option<Expr>,
    pub oracle_rhs: Option<Expr>,
    pub base_div: u32,
    pub default_order: i64,
    pub provenance: Provenance,
}

impl Identity {
    pub fn oracle_lhs(&self) -> &Expr {
        self.oracle_lhs.as_ref().unwrap_or(&self.lhs)
    }

    pub fn oracle_rhs(&self) -> &Expr {
        self.oracle_rhs.as_ref().unwrap_or(&self.rhs)
    }
}

/// Result of checking one identity at one order.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: String,
    pub order: i64,
    pub mismatch: Option<MismatchRecord>,
    pub lhs_n_max: Vec<i64>,
    pub rhs_n_max: Vec<i64>,
    pub elapsed_ms: u64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// The immutable identity registry.
pub struct Catalog {
    entries: Vec<Identity>,
    index: BTreeMap<String, usize>,
}

impl Catalog {
    pub fn from_entries(entries: Vec<Identity>) -> Result<Catalog> {
        let mut index = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::Usage(format!("duplicate identity id {}", e.id)));
            }
        }
        Ok(Catalog { entries, index })
    }

    pub fn entries(&self) -> &[Identity] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Result<&Identity> {
        self.index
            .get(id)
            .map(|&i| &self.entries[i])
            .ok_or_else(|| Error::UnknownIdentity(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// The standard catalog, assembled from [`standard_entries`].
    pub fn standard() -> Catalog {
        Catalog::from_entries(standard_entries()).expect("standard catalog is well-formed")
    }

    /// Evaluate both sides of an identity to `order` and compare exactly.
    pub fn check(&self, id: &str, order: i64) -> Result<CheckOutcome> {
        if order < 1 {
            return Err(Error::Usage(format!("order must be >= 1, got {order}")));
        }
        let ident = self.get(id)?;
        check_identity_struct(ident, order)
    }

    /// Substitute variables (and optionally q -> q^k) into a registered
    /// identity, returning a new unregistered one in validated normal form.
    pub fn substituted(
        &self,
        id: &str,
        bindings: &[(Var, Monomial)],
        q_power: Option<i64>,
    ) -> Result<Identity> {
        let ident = self.get(id)?;
        substitute_identity(ident, bindings, q_power)
    }
}

pub fn check_identity_struct(ident: &Identity, order: i64) -> Result<CheckOutcome> {
    let t0 = Instant::now();
    let mut lhs_stats = EvalStats::default();
    let mut rhs_stats = EvalStats::default();
    let lhs = eval_expr_opts(
        &ident.lhs,
        order,
        crate::blocks::EvalOpts::EXACT,
        &mut lhs_stats,
    )?;
    let rhs = eval_expr_opts(
        &ident.rhs,
        order,
        crate::blocks::EvalOpts::EXACT,
        &mut rhs_stats,
    )?;
    let mismatch = lhs.truncated(order).diff_report(&rhs.truncated(order))?;
    Ok(CheckOutcome {
        id: ident.id.clone(),
        order,
        mismatch,
        lhs_n_max: lhs_stats.sum_n_max,
        rhs_n_max: rhs_stats.sum_n_max,
        elapsed_ms: t0.elapsed().as_millis() as u64,
    })
}

pub fn substitute_identity(
    ident: &Identity,
    bindings: &[(Var, Monomial)],
    q_power: Option<i64>,
) -> Result<Identity> {
    let mut lhs = ident.lhs.clone();
    let mut rhs = ident.rhs.clone();
    for (v, m) in bindings {
        lhs = expr_subst_var(&lhs, *v, m);
        rhs = expr_subst_var(&rhs, *v, m);
    }
    if let Some(k) = q_power {
        if k < 1 {
            return Err(Error::Usage(format!("q-power must be >= 1, got {k}")));
        }
        lhs = expr_subst_q_power(&lhs, k);
        rhs = expr_subst_q_power(&rhs, k);
    }
    let lhs = normalize(&lhs);
    let rhs = normalize(&rhs);
    validate_evaluable(&lhs)?;
    validate_evaluable(&rhs)?;
    let binding_desc = bindings
        .iter()
        .map(|(v, m)| format!("{} -> {}", v.name(), m))
        .chain(q_power.map(|k| format!("q -> q^{k}")))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Identity {
        id: format!("{}[{}]", ident.id, binding_desc),
        title: format!("{} with {}", ident.title, binding_desc),
        source: ident.source.clone(),
        lhs,
        rhs,
        oracle_lhs: None,
        oracle_rhs: None,
        base_div: ident.base_div,
        default_order: ident.default_order,
        provenance: Provenance::Specialized {
            bindings: binding_desc,
            note: format!("derived from {}", ident.id),
        },
    })
}

// ---------------------------------------------------------------------------
// user-supplied definitions
// ---------------------------------------------------------------------------

/// Identity definitions file: versioned JSON with expression trees.
#[derive(Debug, Serialize, Deserialize)]
pub struct DefinitionsFile {
    pub schema: u32,
    pub identities: Vec<IdentityDef>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IdentityDef {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub source: String,
    #[serde(default = "default_base_div")]
    pub base_div: u32,
    pub default_order: i64,
    pub lhs: Expr,
    pub rhs: Expr,
}

fn default_base_div() -> u32 {
    1
}

/// Parse a definitions file, normalize and validate every entry.
pub fn load_definitions(json: &str) -> Result<Vec<Identity>> {
    let file: DefinitionsFile = serde_json::from_str(json)?;
    if file.schema != 1 {
        return Err(Error::Usage(format!(
            "unsupported definitions schema {} (expected 1)",
            file.schema
        )));
    }
    let mut out = Vec::new();
    for def in file.identities {
        let lhs = normalize(&def.lhs);
        let rhs = normalize(&def.rhs);
        validate_evaluable(&lhs)?;
        validate_evaluable(&rhs)?;
        out.push(Identity {
            id: def.id,
            title: def.title,
            source: def.source,
            lhs,
            rhs,
            oracle_lhs: None,
            oracle_rhs: None,
            base_div: def.base_div,
            default_order: def.default_order,
            provenance: Provenance::Direct,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// monomial shorthand
// ---------------------------------------------------------------------------

fn qn(e: i64) -> Monomial {
    Monomial::q_pow(e)
}

fn xv() -> Monomial {
    Monomial::var_pow(Var::X, 1)
}

fn yv() -> Monomial {
    Monomial::var_pow(Var::Y, 1)
}

/// c * q^e * x^a * y^b
fn m4(c: i64, e: i64, a: i32, b: i32) -> Monomial {
    Monomial::new(rat_int(c), e, ExpVec([a, b, 0, 0]))
}

fn one_minus(m: Monomial) -> Expr {
    add(vec![
        cnst(LaurentPoly::one()),
        term(Monomial::new(-m.coef.clone(), m.q_exp, m.vars)),
    ])
}

fn num_f(base: Monomial, step: u32, len: Affine) -> PochFactor {
    PochFactor::num(Param::Mono(base), step, len)
}

fn den_f(base: Monomial, step: u32, len: Affine) -> PochFactor {
    PochFactor::den(Param::Mono(base), step, len)
}

fn num_pair(base: Monomial, step: u32, len: Affine) -> PochFactor {
    PochFactor::num(Param::PairSqrt(base), step, len)
}

fn lin() -> Affine {
    Affine::new(1, 0)
}

/// `sum_{n>=1} (-1)^n q^{binom(n,2)} m^n`
fn theta_from_one(m: Monomial) -> Expr {
    sum(SumSpec::new(SumRange::FromOne, m)
        .alternating()
        .quad(1, -1, 0))
}

/// `sum_{n>=1} (-1)^n q^{binom(n,2)} (a^n - b^n)`
fn theta_difference(a: Monomial, b: Monomial) -> Expr {
    add(vec![theta_from_one(a), neg(theta_from_one(b))])
}

/// The evaluable form of Warnaar's sum-side:
/// `(q)_inf [ (x)_inf (y)_inf + sum_{n>=1} (1 - xy/q)(xy q^n)_{n-1} q^n
///             (x q^n)_inf (y q^n)_inf / (q)_n ]`.
fn warnaar_rhs_stored() -> Expr {
    let inner = SumSpec::new(SumRange::FromOne, qn(1))
        .factor(num_f(m4(1, -1, 1, 1), 1, Affine::constant(1)))
        .factor(num_f(m4(1, 0, 1, 1), 1, Affine::new(1, -1)).with_shift(lin()))
        .factor(den_f(qn(1), 1, lin()))
        .tail(TailFactor::new(xv(), 1, lin()))
        .tail(TailFactor::new(yv(), 1, lin()));
    mul(vec![
        pinf(qn(1), 1),
        add(vec![mul(vec![pinf(xv(), 1), pinf(yv(), 1)]), sum(inner)]),
    ])
}

/// Raw Warnaar sum-side for the windowed oracle.
fn warnaar_rhs_raw() -> Expr {
    let inner = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_f(m4(1, -1, 1, 1), 1, Affine::new(2, 0)))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(xv(), 1, lin()))
        .factor(den_f(yv(), 1, lin()))
        .factor(den_f(m4(1, 0, 1, 1), 1, lin()));
    mul(vec![
        pinf(qn(1), 1),
        pinf(xv(), 1),
        pinf(yv(), 1),
        sum(inner),
    ])
}

/// The difference-theorem sum-side (cleared by (x - y)):
/// `(y - x)(q, qx, qy)_inf sum (xy)_{2n} q^n / (q, qx, qy, xy)_n`, raw form.
fn difference_rhs_raw(xm: Monomial, ym: Monomial) -> Expr {
    let xy = xm.mul(&ym);
    let y_minus_x = LaurentPoly::term(ym.coef.clone(), ym.vars)
        .sub(&LaurentPoly::term(xm.coef.clone(), xm.vars));
    let inner = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_f(xy.clone(), 1, Affine::new(2, 0)))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(xm.shift_q(1), 1, lin()))
        .factor(den_f(ym.shift_q(1), 1, lin()))
        .factor(den_f(xy, 1, lin()));
    mul(vec![
        cnst(y_minus_x),
        pinf(qn(1), 1),
        pinf(xm.shift_q(1), 1),
        pinf(ym.shift_q(1), 1),
        sum(inner),
    ])
}

/// `G(x, y) = sum (-1)^n q^binom (x^n - y^n) + (x - y)(q, qx, qy)_inf
///   sum (xy)_{2n} q^n / (q, qx, qy, xy)_n`; identically zero.
fn qdiff_g() -> Expr {
    let x_minus_y = LaurentPoly::var(Var::X).sub(&LaurentPoly::var(Var::Y));
    let mut flipped = difference_rhs_raw(xv(), yv());
    // difference_rhs_raw carries (y - x); flip the sign to get (x - y)
    flipped = mul(vec![cnst(LaurentPoly::constant(rat_int(-1))), flipped]);
    let _ = x_minus_y;
    add(vec![theta_difference(xv(), yv()), flipped])
}

// ---------------------------------------------------------------------------
// the standard entries
// ---------------------------------------------------------------------------

struct Entry {
    id: &'static str,
    title: &'static str,
    source: &'static str,
    lhs: Expr,
    rhs: Expr,
    oracle_lhs: Option<Expr>,
    oracle_rhs: Option<Expr>,
    default_order: i64,
    provenance: Provenance,
}

fn build(e: Entry) -> Identity {
    let lhs = normalize(&e.lhs);
    let rhs = normalize(&e.rhs);
    if let Err(err) = validate_evaluable(&lhs) {
        panic!("catalog entry {} lhs not evaluable: {err}", e.id);
    }
    if let Err(err) = validate_evaluable(&rhs) {
        panic!("catalog entry {} rhs not evaluable: {err}", e.id);
    }
    Identity {
        id: e.id.to_string(),
        title: e.title.to_string(),
        source: e.source.to_string(),
        lhs,
        rhs,
        oracle_lhs: e.oracle_lhs,
        oracle_rhs: e.oracle_rhs,
        base_div: 1,
        default_order: e.default_order,
        provenance: e.provenance,
    }
}

fn rw(note: &str) -> Provenance {
    Provenance::Rewritten { note: note.into() }
}

fn cleared(multiplier: &str, note: &str) -> Provenance {
    Provenance::Cleared {
        multiplier: multiplier.into(),
        note: note.into(),
    }
}

fn spec_prov(bindings: &str, note: &str) -> Provenance {
    Provenance::Specialized {
        bindings: bindings.into(),
        note: note.into(),
    }
}

pub fn standard_entries() -> Vec<Identity> {
    let mut out = Vec::new();

    // ---- triple product and its weighted corollary --------------------
    out.push(build(Entry {
        id: "jtp",
        title: "Jacobi triple product",
        source: "Jacobi; GR (II.28)",
        lhs: sum(crate::blocks::theta_complete_spec(&xv())),
        rhs: mul(vec![
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(m4(1, 1, -1, 0), 1),
        ]),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 40,
        provenance: Provenance::Direct,
    }));

    out.push(build(Entry {
        id: "jacobi-cube",
        title: "Jacobi's cube identity (weighted theta)",
        source: "Jacobi",
        lhs: sum(SumSpec::new(SumRange::FromOne, Monomial::one())
            .alternating()
            .quad(1, -1, 0)
            .weight_poly(&[-1, 2])),
        rhs: neg(mul(vec![pinf(qn(1), 1), pinf(qn(1), 1), pinf(qn(1), 1)])),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 40,
        provenance: Provenance::Direct,
    }));

    // ---- Warnaar's sum of two partial thetas ---------------------------
    out.push(build(Entry {
        id: "warnaar-sum",
        title: "Warnaar's sum of two partial theta series",
        source: "Warnaar 2003",
        lhs: add(vec![
            cnst(LaurentPoly::one()),
            theta_from_one(xv()),
            theta_from_one(yv()),
        ]),
        rhs: warnaar_rhs_stored(),
        oracle_lhs: None,
        oracle_rhs: Some(warnaar_rhs_raw()),
        default_order: 40,
        provenance: rw("(xy/q)_{2n}/(xy)_n split as (1 - xy/q)(xy q^n)_{n-1}; \
             (x)_inf and (y)_inf folded into per-term tails"),
    }));

    // ---- partial theta as a folded 2phi1 -------------------------------
    let ptheta_heine_rhs_raw = mul(vec![
        pinf(qn(1), 1),
        pinf(xv(), 1),
        sum(SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))),
    ]);
    out.push(build(Entry {
        id: "ptheta-heine",
        title: "Partial theta via Heine's transformation",
        source: "GR (III.1) at vanishing parameters",
        lhs: sum(crate::blocks::theta_partial_spec(&xv())),
        rhs: ptheta_heine_rhs_raw.clone(),
        oracle_lhs: None,
        oracle_rhs: Some(ptheta_heine_rhs_raw),
        default_order: 40,
        provenance: rw("(x)_inf/(x)_n folded into the per-term tail (x q^n)_inf"),
    }));

    // ---- Andrews–Warnaar product of two partial thetas ------------------
    let aw_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, -1, 1, 1), 1, Affine::new(2, 0)))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))
            .factor(den_f(yv(), 1, lin()))
            .factor(den_f(m4(1, -1, 1, 1), 1, lin()));
        mul(vec![
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(yv(), 1),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "aw-product",
        title: "Andrews–Warnaar product of two partial theta series",
        source: "Andrews–Warnaar 2007",
        lhs: mul(vec![
            sum(crate::blocks::theta_partial_spec(&xv())),
            sum(crate::blocks::theta_partial_spec(&yv())),
        ]),
        rhs: aw_rhs_raw.clone(),
        oracle_lhs: None,
        oracle_rhs: Some(aw_rhs_raw.clone()),
        default_order: 40,
        provenance: rw("(xy/q)_{2n}/(xy/q)_n cancelled; (x)_inf, (y)_inf folded"),
    }));

    // ---- the same product as a 4phi3 ------------------------------------
    let aw4_lhs_raw = {
        let folded = |v: Monomial| {
            mul(vec![
                pinf(qn(1), 1),
                pinf(v.clone(), 1),
                sum(SumSpec::new(SumRange::NonNegative, qn(1))
                    .factor(den_f(qn(1), 1, lin()))
                    .factor(den_f(v, 1, lin()))),
            ])
        };
        mul(vec![folded(xv()), folded(yv())])
    };
    let aw4_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_pair(m4(1, -1, 1, 1), 1, lin()))
            .factor(num_pair(m4(1, 0, 1, 1), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))
            .factor(den_f(yv(), 1, lin()))
            .factor(den_f(m4(1, -1, 1, 1), 1, lin()));
        mul(vec![
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(yv(), 1),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "aw-4phi3",
        title: "Andrews–Warnaar product in 4phi3 form",
        source: "GR (8.8.18) at a = 0, b = aq/y, c = x, z = q",
        lhs: aw4_lhs_raw.clone(),
        rhs: aw4_rhs_raw.clone(),
        oracle_lhs: Some(aw4_lhs_raw),
        oracle_rhs: Some(aw4_rhs_raw),
        default_order: 40,
        provenance: rw("±sqrt pairs merged into (xy/q)_{2n}; shares the aw-product normal form"),
    }));

    // ---- quadratic representation of the partial theta ------------------
    let pq_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(-1, 0, 1, 0), 1, Affine::new(2, 0)))
            .factor(den_f(qn(2), 2, lin()))
            .factor(den_f(m4(1, 0, 2, 0), 2, lin()));
        mul(vec![pinf(xv(), 1), pinf(qn(1), 2), sum(inner)])
    };
    out.push(build(Entry {
        id: "ptheta-quadratic",
        title: "Partial theta with quadratic-base denominators",
        source: "Andrews–Warnaar 2007 (y = -q case)",
        lhs: sum(crate::blocks::theta_partial_spec(&xv())),
        rhs: pq_rhs_raw.clone(),
        oracle_lhs: None,
        oracle_rhs: Some(pq_rhs_raw),
        default_order: 40,
        provenance: rw("(x^2; q^2)_n split into (x)_n(-x)_n, folded and cancelled"),
    }));

    // ---- shifted-argument representation, cleared by (1 - x/q) ----------
    let ps_mult = one_minus(m4(1, -1, 1, 0));
    let ps_rhs_stored = {
        let inner = SumSpec::new(SumRange::FromOne, qn(1))
            .factor(num_f(m4(1, -2, 2, 0), 1, Affine::constant(1)))
            .factor(num_f(m4(1, 0, 2, 0), 1, Affine::new(1, -1)).with_shift(Affine::new(1, -1)))
            .factor(den_f(qn(1), 1, lin()))
            .tail(TailFactor::new(xv(), 1, lin()))
            .tail(TailFactor::new(xv(), 1, Affine::new(1, -1)));
        mul(vec![
            pinf(qn(1), 1),
            add(vec![
                mul(vec![ps_mult.clone(), pinf(xv(), 1), pinf(xv(), 1)]),
                sum(inner),
            ]),
        ])
    };
    let ps_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, -2, 2, 0), 1, Affine::new(2, 0)))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))
            .factor(den_f(m4(1, -1, 1, 0), 1, lin()))
            .factor(den_f(m4(1, -1, 2, 0), 1, lin()));
        mul(vec![
            ps_mult.clone(),
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(xv(), 1),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "ptheta-shift",
        title: "Partial theta from the shifted-argument substitution",
        source: "Warnaar 2003 specialization y = x/q",
        lhs: mul(vec![ps_mult, sum(crate::blocks::theta_partial_spec(&xv()))]),
        rhs: ps_rhs_stored,
        oracle_lhs: None,
        oracle_rhs: Some(ps_rhs_raw),
        default_order: 40,
        provenance: cleared(
            "(1 - x/q)",
            "clears the (x/q)_n denominator so the second (x)_inf folds",
        ),
    }));

    // ---- the quadratic transformation, cleared by (x^2/q; q)_inf --------
    let qt_mult = mul(vec![one_minus(m4(1, -1, 2, 0)), pinf(m4(1, 0, 2, 0), 1)]);
    let qt_lhs_stored = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(-1, 0, 1, 0), 1, Affine::new(2, 0)))
            .factor(den_f(qn(2), 2, lin()))
            .tail(TailFactor::new(m4(1, 0, 2, 0), 2, Affine::new(2, 0)));
        mul(vec![
            one_minus(m4(1, -1, 2, 0)),
            pinf(m4(1, 1, 2, 0), 2),
            sum(inner),
        ])
    };
    let qt_lhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(-1, 0, 1, 0), 2, lin()))
            .factor(num_f(m4(-1, 1, 1, 0), 2, lin()))
            .factor(den_f(qn(2), 2, lin()))
            .factor(den_f(m4(1, 0, 2, 0), 2, lin()));
        mul(vec![qt_mult.clone(), sum(inner)])
    };
    let qt_rhs_stored = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, -1, 2, 0), 2, lin()))
            .factor(num_f(m4(-1, -1, 1, 0), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .tail(TailFactor::new(xv(), 1, lin()))
            .tail(TailFactor::new(m4(1, -1, 2, 0), 1, lin()));
        mul(vec![pinf(qn(2), 2), sum(inner)])
    };
    let qt_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_pair(m4(1, -1, 2, 0), 1, lin()))
            .factor(num_f(m4(-1, -1, 1, 0), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))
            .factor(den_f(m4(1, -1, 2, 0), 1, lin()));
        mul(vec![
            qt_mult.clone(),
            pinf(xv(), 1),
            pinf(qn(2), 2),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "quad-transform",
        title: "Quadratic transformation between 2phi1 and 3phi2",
        source: "composition of the two partial-theta representations",
        lhs: qt_lhs_stored,
        rhs: qt_rhs_stored,
        oracle_lhs: Some(qt_lhs_raw),
        oracle_rhs: Some(qt_rhs_raw),
        default_order: 24,
        provenance: cleared(
            "(x^2/q; q)_inf = (1 - x^2/q)(x^2; q)_inf",
            "clears the (x^2; q^2)_n, (x)_n and (x^2/q)_n denominators",
        ),
    }));

    // ---- the difference theorem -----------------------------------------
    out.push(build(Entry {
        id: "main-difference",
        title: "Difference of two partial theta series",
        source: "companion to Warnaar's sum formula",
        lhs: theta_difference(xv(), yv()),
        rhs: difference_rhs_raw(xv(), yv()),
        oracle_lhs: None,
        oracle_rhs: Some(difference_rhs_raw(xv(), yv())),
        default_order: 40,
        provenance: cleared("(x - y)", "the h_{n-1}(x, y) weight becomes x^n - y^n"),
    }));

    // ---- the b = 1 Sears–Carlitz consequence (published cleared form) ---
    let scb1_rhs_raw = {
        let t1_inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_pair(m4(1, 0, -1, 1), 1, lin()))
            .factor(num_pair(m4(1, 1, -1, 1), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(yv(), 1, lin()))
            .factor(den_f(m4(1, 1, -1, 0), 1, lin()))
            .factor(den_f(m4(1, 1, -1, 1), 1, lin()));
        let t1 = mul(vec![
            pinf(qn(1), 1),
            pinf(yv(), 1),
            pinf(m4(1, 1, -1, 0), 1),
            sum(t1_inner),
        ]);
        let t2_inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_pair(m4(1, 0, 1, 1), 1, lin()))
            .factor(num_pair(m4(1, 1, 1, 1), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(1, 1, 1, 0), 1, lin()))
            .factor(den_f(m4(1, 1, 0, 1), 1, lin()))
            .factor(den_f(m4(1, 0, 1, 1), 1, lin()));
        let t2 = mul(vec![
            cnst(LaurentPoly::var(Var::Y).sub(&LaurentPoly::var(Var::X))),
            pinf(qn(1), 1),
            pinf(m4(1, 1, 1, 0), 1),
            pinf(m4(1, 1, 0, 1), 1),
            sum(t2_inner),
        ]);
        add(vec![t1, t2])
    };
    out.push(build(Entry {
        id: "sc-b1",
        title: "Triple product split via the b = 1 Sears-Carlitz case",
        source: "GR (3.4.1) at b = 1, a = y/x, rewritten",
        lhs: mul(vec![
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(m4(1, 1, -1, 0), 1),
        ]),
        rhs: scb1_rhs_raw.clone(),
        oracle_lhs: None,
        oracle_rhs: Some(scb1_rhs_raw),
        default_order: 40,
        provenance: Provenance::Direct,
    }));

    // ---- the index recurrence, cleared by (x - y) ------------------------
    out.push(build(Entry {
        id: "recurrence-xy",
        title: "Index recurrence relating sum and difference kernels",
        source: "elementary rearrangement",
        lhs: mul(vec![
            cnst(LaurentPoly::var(Var::X).sub(&LaurentPoly::var(Var::Y))),
            add(vec![
                cnst(LaurentPoly::one()),
                theta_from_one(xv()),
                theta_from_one(yv()),
            ]),
        ]),
        rhs: add(vec![
            neg(mul(vec![
                term(qn(1)),
                theta_difference(m4(1, -1, 1, 0), m4(1, -1, 0, 1)),
            ])),
            mul(vec![
                term(m4(1, 0, 1, 1)),
                theta_difference(m4(1, 1, 1, 0), m4(1, 1, 0, 1)),
            ]),
        ]),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 40,
        provenance: cleared(
            "(x - y)",
            "turns the divided differences into theta differences",
        ),
    }));

    // ---- the sum-side recurrence ------------------------------------------
    let rhs_rec_t1_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, -2, 1, 1), 1, Affine::new(2, 0)))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(xv(), 1, lin()))
            .factor(den_f(yv(), 1, lin()))
            .factor(den_f(m4(1, -2, 1, 1), 1, lin()));
        mul(vec![
            pinf(qn(1), 1),
            pinf(xv(), 1),
            pinf(yv(), 1),
            sum(inner),
        ])
    };
    let rhs_rec_t2_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, 2, 1, 1), 1, Affine::new(2, 0)))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(1, 2, 1, 0), 1, lin()))
            .factor(den_f(m4(1, 2, 0, 1), 1, lin()))
            .factor(den_f(m4(1, 2, 1, 1), 1, lin()));
        mul(vec![
            term(m4(1, 1, 1, 1)),
            pinf(qn(1), 1),
            pinf(m4(1, 2, 1, 0), 1),
            pinf(m4(1, 2, 0, 1), 1),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "rhs-recurrence",
        title: "Recurrence of the product-sum side under index shifts",
        source: "q-shifted factorial difference lemma",
        lhs: warnaar_rhs_stored(),
        rhs: add(vec![rhs_rec_t1_raw.clone(), neg(rhs_rec_t2_raw.clone())]),
        oracle_lhs: Some(warnaar_rhs_raw()),
        oracle_rhs: Some(add(vec![rhs_rec_t1_raw, neg(rhs_rec_t2_raw)])),
        default_order: 40,
        provenance: rw("each branch cancelled and folded like the sum formula"),
    }));

    // ---- the q-difference equation ----------------------------------------
    out.push(build(Entry {
        id: "qdiff-F",
        title: "Combined kernel vanishes identically",
        source: "difference theorem restated",
        lhs: qdiff_g(),
        rhs: cnst(LaurentPoly::zero()),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 40,
        provenance: cleared(
            "(x - y)",
            "the vanishing kernel form of the difference theorem",
        ),
    }));

    let g_shifted = {
        let g = qdiff_g();
        let g = expr_subst_var(&g, Var::X, &m4(1, 2, 1, 0));
        expr_subst_var(&g, Var::Y, &m4(1, 2, 0, 1))
    };
    out.push(build(Entry {
        id: "qdiff-F-eq",
        title: "Functional equation of the combined kernel",
        source: "difference theorem restated",
        lhs: qdiff_g(),
        rhs: mul(vec![term(m4(1, 1, 1, 1)), g_shifted]),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 40,
        provenance: cleared("(x - y)", "kernel equals q x y times its q^2-shifted image"),
    }));

    // ---- the double-square series -----------------------------------------
    let ds_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(-1, -1, 1, 0), 1, Affine::new(2, 0)))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(-1, -1, 1, 0), 1, lin()))
            .factor(den_f(m4(1, 1, 1, 0), 2, lin()));
        mul(vec![pinf(qn(1), 1), pinf(m4(1, 1, 1, 0), 2), sum(inner)])
    };
    out.push(build(Entry {
        id: "double-square",
        title: "Double-square generating series",
        source: "difference theorem at y = -x, x -> sqrt(x/q)",
        lhs: sum(SumSpec::new(SumRange::NonNegative, xv()).quad(4, 0, 0)),
        rhs: ds_rhs_raw.clone(),
        oracle_lhs: None,
        oracle_rhs: Some(ds_rhs_raw),
        default_order: 40,
        provenance: rw("(-x/q)_{2n}/(-x/q)_n cancelled to (-x q^{n-1})_n"),
    }));

    // ---- Gauss' triangular-number sum ---------------------------------------
    // stored uncleared: 1/(q)_inf is unit-leading, so exact inversion works
    out.push(build(Entry {
        id: "gauss-sum",
        title: "Gauss' triangular-number sum",
        source: "Gauss; GR (II.2 corollary)",
        lhs: sum(SumSpec::new(SumRange::NonNegative, Monomial::one()).quad(1, 1, 0)),
        rhs: mul(vec![pinf(qn(2), 2), pinf(qn(2), 2), inv(pinf(qn(1), 1))]),
        oracle_lhs: Some(mul(vec![
            sum(SumSpec::new(SumRange::NonNegative, Monomial::one()).quad(1, 1, 0)),
            pinf(qn(1), 1),
            inv(pinf(qn(1), 1)),
        ])),
        oracle_rhs: None,
        default_order: 40,
        provenance: Provenance::Direct,
    }));

    // ---- the q-Kummer corollary ----------------------------------------------
    out.push(build(Entry {
        id: "q-kummer-cor",
        title: "Eta-quotient case of the q-Kummer identity",
        source: "GR (II.9) special case",
        lhs: mul(vec![
            one_minus(qn(1)),
            pinf(qn(8), 8),
            pinf(qn(8), 8),
            pinf(qn(2), 2),
        ]),
        rhs: mul(vec![
            pinf(qn(4), 4),
            pinf(qn(1), 1),
            pinf(qn(1), 1),
            sum(SumSpec::new(SumRange::NonNegative, qn(1))
                .factor(num_f(m4(-1, 2, 0, 0), 2, lin()))
                .factor(num_f(m4(-1, 1, 0, 0), 2, lin()))
                .factor(den_f(qn(2), 2, lin()))
                .factor(den_f(qn(3), 2, lin()))),
        ]),
        oracle_lhs: Some(mul(vec![
            one_minus(qn(1)),
            pinf(qn(8), 8),
            pinf(qn(8), 8),
            pinf(qn(2), 2),
            pinf(qn(4), 4),
            inv(pinf(qn(4), 4)),
            pinf(qn(1), 1),
            inv(pinf(qn(1), 1)),
        ])),
        oracle_rhs: None,
        default_order: 40,
        provenance: cleared("(q^4; q^4)_inf (q; q)_inf^2", "clears the eta quotient"),
    }));

    // ---- the weighted Gaussian-binomial identity ------------------------------
    out.push(build(Entry {
        id: "weighted-binom",
        title: "Weighted theta sum as a Gaussian-binomial series",
        source: "difference theorem at x = 1, y -> 1",
        lhs: neg(sum(SumSpec::new(SumRange::FromOne, Monomial::one())
            .alternating()
            .quad(1, 1, 0)
            .weight_poly(&[0, 1]))),
        rhs: mul(vec![
            pinf(qn(1), 1),
            pinf(qn(1), 1),
            pinf(qn(1), 1),
            sum(SumSpec::new(SumRange::FromOne, qn(1))
                .factor(num_f(qn(1), 1, Affine::new(2, -1)))
                .factor(den_f(qn(1), 1, lin()))
                .factor(den_f(qn(1), 1, lin()))
                .factor(den_f(qn(1), 1, lin()))
                .factor(den_f(qn(1), 1, Affine::new(1, -1)))),
        ]),
        oracle_lhs: Some(mul(vec![
            neg(sum(SumSpec::new(SumRange::FromOne, Monomial::one())
                .alternating()
                .quad(1, 1, 0)
                .weight_poly(&[0, 1]))),
            pinf(qn(1), 1),
            inv(pinf(qn(1), 1)),
        ])),
        oracle_rhs: None,
        default_order: 40,
        provenance: cleared("(q; q)_inf^3", "clears the eta-cube denominator"),
    }));

    // ---- the octonic transformation ---------------------------------------------
    let oct_lhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(4))
            .factor(num_f(m4(1, 2, 1, 0), 8, lin()))
            .factor(num_f(m4(1, 6, 1, 0), 8, lin()))
            .factor(den_f(qn(8), 8, lin()))
            .factor(den_f(m4(1, 4, 2, 0), 8, lin()));
        mul(vec![pinf(m4(-1, -1, 1, 0), 1), sum(inner)])
    };
    let oct_rhs_raw = {
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_pair(m4(-1, 0, 1, 0), 1, lin()))
            .factor(num_pair(m4(-1, -1, 1, 0), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(-1, -1, 1, 0), 1, lin()))
            .factor(den_f(m4(1, 1, 1, 0), 2, lin()));
        mul(vec![
            pinf(m4(-1, -1, 1, 0), 1),
            pinf(qn(1), 1),
            pinf(m4(1, 1, 1, 0), 2),
            inv(pinf(qn(4), 8)),
            inv(pinf(m4(-1, 2, 1, 0), 4)),
            sum(inner),
        ])
    };
    out.push(build(Entry {
        id: "octonic",
        title: "Octonic transformation",
        source: "base q^8 to base q comparison of the quadratic forms",
        lhs: oct_lhs_raw.clone(),
        rhs: oct_rhs_raw.clone(),
        oracle_lhs: Some(oct_lhs_raw),
        oracle_rhs: Some(oct_rhs_raw),
        default_order: 24,
        provenance: cleared("(-x/q; q)_inf", "clears the (-x/q)_n denominator via tails"),
    }));

    // ---- factorial splitting lemma, as a family over n <= 10 ----------------------
    {
        let mut lhs_terms = Vec::new();
        let mut rhs_terms = Vec::new();
        for n in 0..=10u32 {
            let un = Monomial::new(rat_int(1), 0, ExpVec([0, 0, n as i32, 0]));
            lhs_terms.push(mul(vec![
                term(un.clone()),
                pfin(Param::Mono(xv()), 2 * n, 1),
            ]));
            rhs_terms.push(mul(vec![
                term(un),
                pfin(Param::PairSqrt(xv()), n, 1),
                pfin(Param::PairSqrt(xv().shift_q(1)), n, 1),
            ]));
        }
        out.push(build(Entry {
            id: "lemma-poch-split",
            title: "Even-length factorial splits into a ±sqrt pair product",
            source: "classical q-shifted factorial identity",
            lhs: add(lhs_terms),
            rhs: add(rhs_terms),
            oracle_lhs: None,
            oracle_rhs: None,
            default_order: 40,
            provenance: Provenance::Direct,
        }));
    }

    // ---- factorial difference lemma, family 2 <= n <= 8 ----------------------------
    {
        let xy = m4(1, 0, 1, 1);
        let mut lhs_terms = Vec::new();
        let mut rhs_terms = Vec::new();
        for n in 2..=8i64 {
            let un = Monomial::new(rat_int(1), 0, ExpVec([0, 0, n as i32, 0]));
            lhs_terms.push(mul(vec![
                term(un.clone()),
                add(vec![
                    pfin(Param::Mono(xy.shift_q(n - 2)), n as u32, 1),
                    neg(mul(vec![
                        one_minus(m4(1, -1, 1, 1)),
                        pfin(Param::Mono(xy.shift_q(n)), (n - 1) as u32, 1),
                    ])),
                ]),
            ]));
            rhs_terms.push(mul(vec![
                term(un),
                term(m4(1, -1, 1, 1)),
                pfin(Param::Mono(xy.shift_q(n)), (n - 2) as u32, 1),
                pfin(Param::Mono(qn(n)), 1, 1),
                pfin(Param::Mono(qn(n - 1)), 1, 1),
            ]));
        }
        out.push(build(Entry {
            id: "lemma-diff-poch",
            title: "Difference of factorial ratios in closed product form",
            source: "q-shifted factorial difference lemma",
            lhs: add(lhs_terms),
            rhs: add(rhs_terms),
            oracle_lhs: None,
            oracle_rhs: None,
            default_order: 40,
            provenance: Provenance::Direct,
        }));
    }

    // ---- Heine's first transformation at a recorded specialization -------------------
    out.push(build(Entry {
        id: "heine1-spec",
        title: "Heine's first transformation (specialized)",
        source: "GR (III.1) at a = q^2, b = q^3, c = q^5, z = qx",
        lhs: sum(SumSpec::new(SumRange::NonNegative, m4(1, 1, 1, 0))
            .factor(num_f(qn(2), 1, lin()))
            .factor(num_f(qn(3), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(qn(5), 1, lin()))),
        rhs: mul(vec![
            pinf(qn(3), 1),
            pinf(m4(1, 3, 1, 0), 1),
            inv(pinf(qn(5), 1)),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            sum(SumSpec::new(SumRange::NonNegative, qn(3))
                .factor(num_f(qn(2), 1, lin()))
                .factor(num_f(m4(1, 1, 1, 0), 1, lin()))
                .factor(den_f(qn(1), 1, lin()))
                .factor(den_f(m4(1, 3, 1, 0), 1, lin()))),
        ]),
        oracle_lhs: None,
        oracle_rhs: None,
        default_order: 24,
        provenance: spec_prov(
            "a = q^2, b = q^3, c = q^5, z = qx",
            "one formal variable stays alive through the argument",
        ),
    }));

    // ---- the Gasper–Rahman product formula at a recorded specialization ---------------
    let gr_lhs = mul(vec![
        pinf(xv(), 1),
        sum(SumSpec::new(SumRange::NonNegative, m4(1, 1, 1, 0))
            .factor(num_f(qn(3), 1, lin()))
            .factor(num_f(qn(1), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(qn(2), 1, lin()))),
        sum(SumSpec::new(SumRange::NonNegative, m4(1, 1, 1, 0))
            .factor(num_f(qn(3), 1, lin()))
            .factor(num_f(qn(2), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(qn(3), 1, lin()))),
    ]);
    let gr_t1_sum = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_f(qn(3), 1, lin()))
        .factor(num_f(qn(1), 1, lin()))
        .factor(num_pair(qn(4), 1, lin()))
        .factor(num_pair(qn(5), 1, lin()))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(qn(3), 1, lin()))
        .factor(den_f(qn(2), 1, lin()))
        .factor(den_f(qn(4), 1, lin()))
        .factor(den_f(m4(1, 4, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 1, -1, 0), 1, lin()));
    let gr_t2_sum = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_f(m4(1, 1, 1, 0), 1, lin()))
        .factor(num_f(m4(1, 3, 1, 0), 1, lin()))
        .factor(num_pair(m4(1, 4, 2, 0), 1, lin()))
        .factor(num_pair(m4(1, 5, 2, 0), 1, lin()))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(m4(1, 4, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 2, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 3, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 1, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 4, 2, 0), 1, lin()));
    let gr_rhs_stored = add(vec![
        mul(vec![
            pinf(m4(1, 4, 1, 0), 1),
            pinf(m4(1, 3, 1, 0), 1),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            sum(gr_t1_sum.clone()),
        ]),
        neg(mul(vec![
            term(xv()),
            pinf(qn(1), 1),
            pinf(m4(1, 4, 1, 0), 1),
            pinf(m4(1, 2, 1, 0), 1),
            pinf(m4(1, 3, 1, 0), 1),
            inv(pinf(qn(2), 1)),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            inv(pinf(m4(1, 1, -1, 0), 1)),
            sum(gr_t2_sum.clone()),
        ])),
    ]);
    let gr_rhs_raw = add(vec![
        mul(vec![
            pinf(xv(), 1),
            pinf(m4(1, 4, 1, 0), 1),
            pinf(m4(1, 3, 1, 0), 1),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            inv(pinf(xv(), 1)),
            sum(gr_t1_sum),
        ]),
        mul(vec![
            pinf(xv(), 1),
            pinf(qn(3), 1),
            pinf(qn(1), 1),
            pinf(m4(1, 4, 1, 0), 1),
            pinf(m4(1, 2, 1, 0), 1),
            pinf(m4(1, 3, 1, 0), 1),
            inv(pinf(qn(2), 1)),
            inv(pinf(qn(3), 1)),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            inv(pinf(m4(1, 0, -1, 0), 1)),
            sum(gr_t2_sum),
        ]),
    ]);
    out.push(build(Entry {
        id: "gr-product-spec",
        title: "Gasper–Rahman product formula (specialized)",
        source: "GR (8.8.18) at a = q^3, b = q, c = q^2, z = qx",
        lhs: gr_lhs,
        rhs: gr_rhs_stored,
        oracle_lhs: None,
        oracle_rhs: Some(gr_rhs_raw),
        default_order: 24,
        provenance: spec_prov(
            "a = q^3, b = q, c = q^2, z = qx; both sides times (x; q)_inf",
            "(x)_inf/(1/x)_inf replaced by -x (qx)_inf/(q/x)_inf",
        ),
    }));

    // ---- the nonterminating Sears–Carlitz transformation -------------------------------
    let sc_lhs = mul(vec![
        pinf(xv(), 1),
        sum(SumSpec::new(SumRange::NonNegative, m4(1, 1, 1, 0))
            .factor(num_f(qn(2), 1, lin()))
            .factor(num_f(qn(1), 1, lin()))
            .factor(num_f(qn(1), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(qn(2), 1, lin()))
            .factor(den_f(qn(2), 1, lin()))),
    ]);
    let sc_t1_sum = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_pair(qn(2), 1, lin()))
        .factor(num_pair(qn(3), 1, lin()))
        .factor(num_f(qn(1), 1, lin()))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(qn(2), 1, lin()))
        .factor(den_f(qn(2), 1, lin()))
        .factor(den_f(m4(1, 2, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 1, -1, 0), 1, lin()));
    let sc_t2_sum = SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_pair(m4(1, 2, 2, 0), 1, lin()))
        .factor(num_pair(m4(1, 3, 2, 0), 1, lin()))
        .factor(num_f(m4(1, 1, 1, 0), 1, lin()))
        .factor(den_f(qn(1), 1, lin()))
        .factor(den_f(m4(1, 2, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 2, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 1, 1, 0), 1, lin()))
        .factor(den_f(m4(1, 2, 2, 0), 1, lin()));
    let sc_rhs_stored = add(vec![
        mul(vec![pinf(m4(1, 2, 1, 0), 1), sum(sc_t1_sum.clone())]),
        neg(mul(vec![
            term(xv()),
            pinf(qn(1), 1),
            pinf(m4(1, 2, 1, 0), 1),
            pinf(m4(1, 2, 1, 0), 1),
            inv(pinf(qn(2), 1)),
            inv(pinf(m4(1, 1, -1, 0), 1)),
            sum(sc_t2_sum.clone()),
        ])),
    ]);
    let sc_rhs_raw = add(vec![
        mul(vec![
            pinf(xv(), 1),
            pinf(m4(1, 2, 1, 0), 1),
            inv(pinf(xv(), 1)),
            sum(sc_t1_sum),
        ]),
        mul(vec![
            pinf(xv(), 1),
            pinf(qn(2), 1),
            pinf(qn(1), 1),
            pinf(m4(1, 2, 1, 0), 1),
            pinf(m4(1, 2, 1, 0), 1),
            inv(pinf(qn(2), 1)),
            inv(pinf(qn(2), 1)),
            inv(pinf(m4(1, 1, 1, 0), 1)),
            inv(pinf(m4(1, 0, -1, 0), 1)),
            sum(sc_t2_sum),
        ]),
    ]);
    out.push(build(Entry {
        id: "sears-carlitz-nt-spec",
        title: "Nonterminating Sears–Carlitz transformation (specialized)",
        source: "GR (3.4.1) at a = q^2, b = c = q, x formal",
        lhs: sc_lhs,
        rhs: sc_rhs_stored,
        oracle_lhs: None,
        oracle_rhs: Some(sc_rhs_raw),
        default_order: 24,
        provenance: spec_prov(
            "a = q^2, b = q, c = q; both sides times (x; q)_inf",
            "(x)_inf/(1/x)_inf replaced by -x (qx)_inf/(q/x)_inf",
        ),
    }));

    // ---- Jane's quadratic formula at the recorded specialization -----------------------
    let jane_lhs_stored = sum(SumSpec::new(SumRange::NonNegative, qn(1))
        .factor(num_f(m4(-1, -1, 1, 0), 1, lin()))
        .factor(num_f(m4(1, -1, 2, 0), 2, lin()))
        .factor(den_f(qn(1), 1, lin()))
        .tail(TailFactor::new(xv(), 1, lin()))
        .tail(TailFactor::new(m4(1, -1, 2, 0), 1, lin())));
    let jane_lhs_raw = mul(vec![
        pinf(xv(), 1),
        pinf(m4(1, -1, 2, 0), 1),
        sum(SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(-1, -1, 1, 0), 1, lin()))
            .factor(num_pair(m4(1, -1, 2, 0), 1, lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(1, -1, 2, 0), 1, lin()))
            .factor(den_f(xv(), 1, lin()))),
    ]);
    let jane_rhs_stored = mul(vec![
        pinf(m4(-1, 1, 0, 0), 1),
        one_minus(m4(1, -1, 2, 0)),
        pinf(m4(1, 1, 2, 0), 2),
        sum(SumSpec::new(SumRange::NonNegative, qn(2))
            .factor(num_f(m4(-1, -1, 1, 0), 2, lin()))
            .factor(num_f(m4(-1, 0, 1, 0), 2, lin()))
            .factor(den_f(qn(2), 2, lin()))
            .tail(TailFactor::new(m4(1, 0, 2, 0), 2, Affine::new(2, 0)))),
    ]);
    let jane_rhs_raw = mul(vec![
        pinf(xv(), 1),
        pinf(m4(1, -1, 2, 0), 1),
        pinf(m4(-1, 1, 0, 0), 1),
        inv(pinf(xv(), 1)),
        sum(SumSpec::new(SumRange::NonNegative, qn(2))
            .factor(num_f(m4(-1, -1, 1, 0), 2, lin()))
            .factor(num_f(m4(-1, 0, 1, 0), 2, lin()))
            .factor(den_f(qn(2), 2, lin()))
            .factor(den_f(m4(1, 0, 2, 0), 2, lin()))),
    ]);
    out.push(build(Entry {
        id: "jane-spec",
        title: "Jane's quadratic formula (specialized)",
        source: "GR (Ex. 3.2.i) at a = -x/q, b = x/sqrt(q) paired, z = -q",
        lhs: jane_lhs_stored,
        rhs: jane_rhs_stored,
        oracle_lhs: Some(jane_lhs_raw),
        oracle_rhs: Some(jane_rhs_raw),
        default_order: 24,
        provenance: spec_prov(
            "a = -x/q, b^2 = x^2/q (paired), z = -q; both sides times (x)_inf (x^2/q)_inf",
            "pair contributes (x^2/q; q^2)_n; denominators fold into tails",
        ),
    }));

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::eval_expr;

    #[test]
    fn catalog_builds_and_lists() {
        let cat = Catalog::standard();
        assert!(cat.entries().len() >= 24, "got {}", cat.entries().len());
        assert!(cat.get("jtp").is_ok());
        assert!(cat.get("octonic").is_ok());
        assert!(matches!(cat.get("nosuch"), Err(Error::UnknownIdentity(_))));
    }

    #[test]
    fn jtp_passes_small() {
        let cat = Catalog::standard();
        let r = cat.check("jtp", 30).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
    }

    #[test]
    fn main_difference_passes_small() {
        let cat = Catalog::standard();
        let r = cat.check("main-difference", 30).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
    }

    #[test]
    fn perturbed_weight_detected() {
        // weight 2n - 1 -> 2n + 1 shifts the q^0 coefficient by -2
        let bad = build(Entry {
            id: "jacobi-cube-bad",
            title: "perturbed",
            source: "test",
            lhs: sum(SumSpec::new(SumRange::FromOne, Monomial::one())
                .alternating()
                .quad(1, -1, 0)
                .weight_poly(&[1, 2])),
            rhs: neg(mul(vec![pinf(qn(1), 1), pinf(qn(1), 1), pinf(qn(1), 1)])),
            oracle_lhs: None,
            oracle_rhs: None,
            default_order: 10,
            provenance: Provenance::Direct,
        });
        let r = check_identity_struct(&bad, 10).unwrap();
        let m = r.mismatch.expect("must mismatch");
        assert_eq!(m.q_exp, 0);
        assert_eq!(m.diff, LaurentPoly::constant(rat_int(-2)));
    }

    #[test]
    fn main_difference_prefix() {
        // cleared sides begin (y - x) + (x^2 - y^2) q + 0 q^2 + (y^3 - x^3) q^3
        let cat = Catalog::standard();
        let e = cat.get("main-difference").unwrap();
        let s = eval_expr(&e.lhs, 4).unwrap();
        let c0: LaurentPoly = "-x + y".parse().unwrap();
        let c1: LaurentPoly = "x^2 - y^2".parse().unwrap();
        let c3: LaurentPoly = "-x^3 + y^3".parse().unwrap();
        assert_eq!(s.coeff(0).unwrap(), c0);
        assert_eq!(s.coeff(1).unwrap(), c1);
        assert_eq!(s.coeff(2).unwrap(), LaurentPoly::zero());
        assert_eq!(s.coeff(3).unwrap(), c3);
        assert_eq!(s.coeff(4).unwrap(), LaurentPoly::zero());
    }

    #[test]
    fn warnaar_lhs_constant_term() {
        // 1 + sum of the two theta tails starts at 1 - x - y
        let cat = Catalog::standard();
        let e = cat.get("warnaar-sum").unwrap();
        let s = eval_expr(&e.lhs, 0).unwrap();
        let want: LaurentPoly = "1 - x - y".parse().unwrap();
        assert_eq!(s.coeff(0).unwrap(), want);
    }

    #[test]
    fn uncleared_difference_sum_side_prefix() {
        // -(q, qx, qy)_inf sum (xy q^n)_n q^n / (q, qx, qy)_n  starts
        // -1 + (x + y) q, computed by hand from the n = 0, 1 terms
        let inner = SumSpec::new(SumRange::NonNegative, qn(1))
            .factor(num_f(m4(1, 0, 1, 1), 1, lin()).with_shift(lin()))
            .factor(den_f(qn(1), 1, lin()))
            .factor(den_f(m4(1, 1, 1, 0), 1, lin()))
            .factor(den_f(m4(1, 1, 0, 1), 1, lin()));
        let e = neg(mul(vec![
            pinf(qn(1), 1),
            pinf(m4(1, 1, 1, 0), 1),
            pinf(m4(1, 1, 0, 1), 1),
            sum(inner),
        ]));
        let s = eval_expr(&e, 1).unwrap();
        assert_eq!(s.coeff(0).unwrap(), LaurentPoly::constant(rat_int(-1)));
        let want: LaurentPoly = "x + y".parse().unwrap();
        assert_eq!(s.coeff(1).unwrap(), want);
    }

    #[test]
    fn aw_normal_forms_agree() {
        let cat = Catalog::standard();
        let a = cat.get("aw-product").unwrap();
        let b = cat.get("aw-4phi3").unwrap();
        assert_eq!(a.rhs, b.rhs, "normal forms must be syntactically identical");
    }

    #[test]
    fn substitution_recovers_triple_product() {
        let cat = Catalog::standard();
        // y = q/x collapses the sum side of the two-variable sum formula
        let sub = cat
            .substituted("warnaar-sum", &[(Var::Y, m4(1, 1, -1, 0))], None)
            .unwrap();
        let r = check_identity_struct(&sub, 16).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
        // and both sides agree with the triple product's sides
        let jtp = cat.get("jtp").unwrap();
        let a = eval_expr(&sub.lhs, 12).unwrap();
        let b = eval_expr(&jtp.lhs, 12).unwrap();
        assert!(a.diff_report(&b).unwrap().is_none());
        let a = eval_expr(&sub.rhs, 12).unwrap();
        let b = eval_expr(&jtp.rhs, 12).unwrap();
        assert!(a.diff_report(&b).unwrap().is_none());
    }

    #[test]
    fn substitution_y_eq_x_over_q() {
        let cat = Catalog::standard();
        let sub = cat
            .substituted("warnaar-sum", &[(Var::Y, m4(1, -1, 1, 0))], None)
            .unwrap();
        let r = check_identity_struct(&sub, 16).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
        // equals the (1 - x/q)-cleared shifted representation
        let ps = cat.get("ptheta-shift").unwrap();
        let a = eval_expr(&sub.lhs, 12).unwrap();
        let b = eval_expr(&ps.lhs, 12).unwrap();
        assert!(a.diff_report(&b).unwrap().is_none());
        let a = eval_expr(&sub.rhs, 12).unwrap();
        let b = eval_expr(&ps.rhs, 12).unwrap();
        assert!(a.diff_report(&b).unwrap().is_none());
    }

    #[test]
    fn substitution_y_eq_minus_x() {
        let cat = Catalog::standard();
        let sub = cat
            .substituted("main-difference", &[(Var::Y, m4(-1, 0, 1, 0))], None)
            .unwrap();
        let r = check_identity_struct(&sub, 16).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
    }

    #[test]
    fn substitution_q_power() {
        // q -> q^2 maps a true identity to a true identity
        let cat = Catalog::standard();
        let sub = cat.substituted("gauss-sum", &[], Some(2)).unwrap();
        let r = check_identity_struct(&sub, 24).unwrap();
        assert!(r.passed(), "mismatch: {:?}", r.mismatch);
        // the image's lhs really is the q^2 series of the original
        let orig = cat.get("gauss-sum").unwrap();
        let a = eval_expr(&sub.lhs, 24).unwrap();
        let b = eval_expr(&orig.lhs, 12).unwrap().subst_q_power(2);
        assert!(a.truncated(24).diff_report(&b).unwrap().is_none());
    }

    #[test]
    fn definitions_roundtrip() {
        let cat = Catalog::standard();
        let e = cat.get("gauss-sum").unwrap();
        let file = DefinitionsFile {
            schema: 1,
            identities: vec![IdentityDef {
                id: "gauss-copy".into(),
                title: e.title.clone(),
                source: e.source.clone(),
                base_div: 1,
                default_order: 12,
                lhs: e.lhs.clone(),
                rhs: e.rhs.clone(),
            }],
        };
        let json = serde_json::to_string_pretty(&file).unwrap();
        let loaded = load_definitions(&json).unwrap();
        assert_eq!(loaded.len(), 1);
        let r = check_identity_struct(&loaded[0], 12).unwrap();
        assert!(r.passed());
    }
}
