//! The windowed brute-force oracle: an independent evaluation path.
//!
//! Windowed mode expands raw forms directly — including inverses whose
//! leading coefficient is not a unit — by truncating Laurent coefficients
//! to variable exponents in `[-W, W]` and expanding every `1/(1 - u)` by
//! the convention `1/(1 - u) = sum_{k >= 0} u^k` (the variable window makes
//! the expansion finite). Cross-comparing such a direct expansion with the
//! exact evaluation of the stored normal form checks the clearing
//! multipliers and rewrites end to end.
//!
//! Soundness margin: `W >= 2 * order + 4`. Internally the computation runs
//! at a padded window `W + order + 8` so truncation debris from window
//! edges cannot drift back into the reported window; the final comparison
//! happens on the exact side's validated q-range, with coefficients
//! projected to `[-W, W]`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blocks::EvalOpts;
use crate::catalog::Identity;
use crate::error::{Error, Result};
use crate::expr::{eval_expr_opts, EvalStats, Expr};
use crate::series::{MismatchJson, MismatchRecord, QSeries};

/// Minimum admissible window for a given order.
pub fn min_window(order: i64) -> i64 {
    2 * order + 4
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    /// Which comparison: `lhs`, `rhs` (windowed raw vs exact normal form)
    /// or `windowed-lhs-vs-rhs`.
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<MismatchJson>,
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub id: String,
    pub order: i64,
    pub window: i64,
    pub checks: Vec<OracleCheck>,
    pub elapsed_ms: u64,
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status == "agree")
    }
}

/// Compare two series on the exact side's validated range, coefficients
/// projected to the window.
fn compare_windowed(
    exact: &QSeries,
    windowed: &QSeries,
    order: i64,
    window: i64,
) -> Option<MismatchRecord> {
    let lo = exact.lo();
    for e in lo..=order {
        let a = exact
            .coeff_ref(e)
            .map(|p| p.clip_window(window))
            .unwrap_or_default();
        let b = windowed
            .coeff_ref(e)
            .map(|p| p.clip_window(window))
            .unwrap_or_default();
        let diff = a.sub(&b);
        if !diff.is_zero() {
            return Some(MismatchRecord { q_exp: e, diff });
        }
    }
    None
}

fn eval_windowed(e: &Expr, order: i64, padded_window: i64) -> Result<QSeries> {
    let mut stats = EvalStats::default();
    eval_expr_opts(e, order, EvalOpts::windowed(padded_window), &mut stats)
}

/// Run the dual-path check for one identity.
pub fn oracle_check(ident: &Identity, order: i64, window: i64) -> Result<OracleOutcome> {
    let required = min_window(order);
    if window < required {
        return Err(Error::WindowTooSmall {
            given: window,
            order,
            required,
        });
    }
    let t0 = Instant::now();
    let padded = window + order + 8;
    let mut stats = EvalStats::default();
    let exact_lhs = eval_expr_opts(&ident.lhs, order, EvalOpts::EXACT, &mut stats)?;
    let exact_rhs = eval_expr_opts(&ident.rhs, order, EvalOpts::EXACT, &mut stats)?;
    let win_lhs = eval_windowed(ident.oracle_lhs(), order, padded)?.clip_window(window);
    let win_rhs = eval_windowed(ident.oracle_rhs(), order, padded)?.clip_window(window);

    let mut checks = Vec::new();
    let mut push = |name: &str, m: Option<MismatchRecord>| {
        checks.push(OracleCheck {
            name: name.to_string(),
            status: if m.is_none() { "agree" } else { "diverge" }.to_string(),
            mismatch: m.as_ref().map(MismatchJson::from),
        });
    };
    push("lhs", compare_windowed(&exact_lhs, &win_lhs, order, window));
    push("rhs", compare_windowed(&exact_rhs, &win_rhs, order, window));
    // the windowed paths must also agree with each other on the shared range
    let lo = exact_lhs.lo().min(exact_rhs.lo());
    let cross = {
        let mut found = None;
        for e in lo..=order {
            let a = win_lhs.coeff_ref(e).cloned().unwrap_or_default();
            let b = win_rhs.coeff_ref(e).cloned().unwrap_or_default();
            let d = a.sub(&b);
            if !d.is_zero() {
                found = Some(MismatchRecord { q_exp: e, diff: d });
                break;
            }
        }
        found
    };
    push("windowed-lhs-vs-rhs", cross);

    Ok(OracleOutcome {
        id: ident.id.clone(),
        order,
        window,
        checks,
        elapsed_ms: t0.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    #[test]
    fn window_too_small_refused() {
        let cat = Catalog::standard();
        let e = cat.get("jtp").unwrap();
        match oracle_check(e, 12, 27) {
            Err(Error::WindowTooSmall { required, .. }) => assert_eq!(required, 28),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn oracle_jtp_agrees() {
        let cat = Catalog::standard();
        let e = cat.get("jtp").unwrap();
        let r = oracle_check(e, 8, 20).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn oracle_ptheta_heine_agrees() {
        // validates the tail folding against direct division by (x)_n
        let cat = Catalog::standard();
        let e = cat.get("ptheta-heine").unwrap();
        let r = oracle_check(e, 8, 20).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }

    #[test]
    fn oracle_main_difference_agrees() {
        let cat = Catalog::standard();
        let e = cat.get("main-difference").unwrap();
        let r = oracle_check(e, 8, 20).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
    }
}
