//! Command-line front end: `list`, `check`, `expand`, `oracle`.
//!
//! Exit codes: 0 all pass, 1 coefficient mismatch / oracle divergence,
//! 2 usage error (unknown id, bad flags, window too small), 3 internal or
//! non-evaluable error. Order precedence: `--order` flag, then the
//! `QTHETA_ORDER` environment variable, then each identity's default.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::mpsc;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::catalog::{check_identity_struct, load_definitions, Catalog, Identity};
use crate::error::Error;
use crate::expr::{eval_expr, validate_evaluable, Expr};
use crate::report::{ListEntry, OracleReport, Report, Status, SCHEMA_VERSION};
use crate::rewrite::normalize;
use crate::window::{min_window, oracle_check};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(
    name = "qtheta",
    version,
    about = "Exact verification of q-series identities, coefficient by coefficient"
)]
pub struct Cli {
    /// Extra identity definitions (JSON file, schema 1)
    #[arg(long, global = true, value_name = "FILE")]
    pub defs: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// List the identity catalog
    List {
        /// Only entries whose id or title contains this substring
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Verify identities coefficient-by-coefficient
    Check {
        /// Comma-separated ids, or "all" (default)
        ids: Option<String>,
        /// Alias for the positional ids
        #[arg(long = "ids", value_name = "IDS", conflicts_with = "ids")]
        ids_flag: Option<String>,
        /// Truncation order (default: QTHETA_ORDER, then per-identity)
        #[arg(long)]
        order: Option<i64>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the truncated series of an identity side or an inline JSON expression
    Expand {
        /// `<id>.lhs`, `<id>.rhs`, or an inline JSON expression
        target: String,
        #[arg(long)]
        order: Option<i64>,
    },
    /// Re-verify in windowed brute-force mode and cross-compare with exact mode
    Oracle {
        /// Comma-separated ids, or "all" (default)
        ids: Option<String>,
        #[arg(long = "ids", value_name = "IDS", conflicts_with = "ids")]
        ids_flag: Option<String>,
        #[arg(long)]
        order: Option<i64>,
        /// Variable-exponent window (default and minimum: 2*order + 4)
        #[arg(long)]
        window: Option<i64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn env_order() -> Option<i64> {
    std::env::var("QTHETA_ORDER")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn effective_order(flag: Option<i64>, ident: &Identity) -> i64 {
    flag.or_else(env_order).unwrap_or(ident.default_order)
}

fn build_catalog(defs: &Option<PathBuf>) -> Result<Catalog, (i32, String)> {
    let mut entries = crate::catalog::standard_entries();
    if let Some(path) = defs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| (EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
        let extra = load_definitions(&text).map_err(|e| (classify(&e), format!("{e}")))?;
        entries.extend(extra);
    }
    Catalog::from_entries(entries).map_err(|e| (EXIT_USAGE, format!("{e}")))
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::UnknownIdentity(_) | Error::Usage(_) | Error::WindowTooSmall { .. } => EXIT_USAGE,
        _ => EXIT_INTERNAL,
    }
}

fn resolve_ids(
    catalog: &Catalog,
    positional: Option<String>,
    flag: Option<String>,
) -> Result<Vec<String>, (i32, String)> {
    let spec = flag.or(positional).unwrap_or_else(|| "all".to_string());
    if spec == "all" {
        return Ok(catalog.ids().map(str::to_string).collect());
    }
    let mut out = Vec::new();
    for id in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        catalog.get(id).map_err(|e| (EXIT_USAGE, format!("{e}")))?;
        out.push(id.to_string());
    }
    if out.is_empty() {
        return Err((EXIT_USAGE, "no identities selected".into()));
    }
    Ok(out)
}

/// Run jobs in parallel, emitting each result in input order as soon as
/// every earlier result has been emitted. Workers share only the immutable
/// catalog; a reorder buffer keeps the output deterministic regardless of
/// completion order or worker count.
fn run_streamed<T, F, E>(jobs: Option<usize>, inputs: &[String], work: F, mut emit: E) -> Vec<T>
where
    F: Fn(&str) -> T + Sync,
    E: FnMut(&T),
    T: Send + 'static,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .expect("thread pool");
    let (tx, rx) = mpsc::channel::<(usize, T)>();
    let mut out: Vec<Option<T>> = Vec::new();
    out.resize_with(inputs.len(), || None);
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                inputs
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (i, id)| {
                        let r = work(id);
                        let _ = tx.send((i, r));
                    });
            });
        });
        let mut buffered: BTreeMap<usize, T> = BTreeMap::new();
        let mut next = 0usize;
        while next < inputs.len() {
            match rx.recv() {
                Ok((i, r)) => {
                    buffered.insert(i, r);
                    while let Some(r) = buffered.remove(&next) {
                        emit(&r);
                        out[next] = Some(r);
                        next += 1;
                    }
                }
                Err(_) => break,
            }
        }
    });
    out.into_iter()
        .map(|o| o.expect("worker completed"))
        .collect()
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("qtheta: {msg}");
            code
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<i32, (i32, String)> {
    let catalog = build_catalog(&cli.defs)?;
    match cli.command {
        Command::List { filter, format } => cmd_list(&catalog, filter, format),
        Command::Check {
            ids,
            ids_flag,
            order,
            jobs,
            format,
        } => cmd_check(&catalog, ids, ids_flag, order, jobs, format),
        Command::Expand { target, order } => cmd_expand(&catalog, &target, order),
        Command::Oracle {
            ids,
            ids_flag,
            order,
            window,
            jobs,
            format,
        } => cmd_oracle(&catalog, ids, ids_flag, order, window, jobs, format),
    }
}

fn cmd_list(
    catalog: &Catalog,
    filter: Option<String>,
    format: Format,
) -> Result<i32, (i32, String)> {
    let needle = filter.map(|f| f.to_lowercase());
    let rows: Vec<ListEntry> = catalog
        .entries()
        .iter()
        .filter(|e| match &needle {
            Some(n) => e.id.to_lowercase().contains(n) || e.title.to_lowercase().contains(n),
            None => true,
        })
        .map(|e| ListEntry {
            id: e.id.clone(),
            title: e.title.clone(),
            source: e.source.clone(),
            default_order: e.default_order,
        })
        .collect();
    match format {
        Format::Json => {
            let doc = serde_json::json!({ "schema": SCHEMA_VERSION, "identities": rows });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
        Format::Text => {
            println!("{:28} {:>5}  {:50} source", "id", "order", "title");
            for r in rows {
                println!(
                    "{:28} {:>5}  {:50} {}",
                    r.id, r.default_order, r.title, r.source
                );
            }
        }
    }
    Ok(EXIT_PASS)
}

fn cmd_check(
    catalog: &Catalog,
    ids: Option<String>,
    ids_flag: Option<String>,
    order: Option<i64>,
    jobs: Option<usize>,
    format: Format,
) -> Result<i32, (i32, String)> {
    let ids = resolve_ids(catalog, ids, ids_flag)?;
    let reports = run_streamed(
        jobs,
        &ids,
        |id| {
            let ident = catalog.get(id).expect("validated above");
            let n = effective_order(order, ident);
            match check_identity_struct(ident, n) {
                Ok(o) => Report::from_outcome(&o),
                Err(e) => Report::from_error(id, n, &e),
            }
        },
        |r| match format {
            Format::Text => println!("{}", r.render_text()),
            Format::Json => println!("{}", serde_json::to_string(r).unwrap()),
        },
    );
    let mut code = EXIT_PASS;
    for r in &reports {
        match r.status {
            Status::Pass => {}
            Status::Mismatch => code = code.max(EXIT_MISMATCH),
            Status::Error => code = code.max(EXIT_INTERNAL),
        }
    }
    Ok(code)
}

fn cmd_expand(catalog: &Catalog, target: &str, order: Option<i64>) -> Result<i32, (i32, String)> {
    let (expr, default_order): (Expr, i64) = if target.trim_start().starts_with('{') {
        let raw: Expr = serde_json::from_str(target)
            .map_err(|e| (EXIT_USAGE, format!("bad expression JSON: {e}")))?;
        (normalize(&raw), 10)
    } else {
        let (id, side) = target.rsplit_once('.').ok_or_else(|| {
            (
                EXIT_USAGE,
                format!("expected <id>.lhs or <id>.rhs, got {target}"),
            )
        })?;
        let ident = catalog.get(id).map_err(|e| (EXIT_USAGE, format!("{e}")))?;
        let e = match side {
            "lhs" => ident.lhs.clone(),
            "rhs" => ident.rhs.clone(),
            other => return Err((EXIT_USAGE, format!("side must be lhs or rhs, got {other}"))),
        };
        (e, ident.default_order)
    };
    let n = order.or_else(env_order).unwrap_or(default_order);
    validate_evaluable(&expr).map_err(|e| (EXIT_INTERNAL, format!("{e}")))?;
    let series = eval_expr(&expr, n).map_err(|e| (EXIT_INTERNAL, format!("{e}")))?;
    print!("{}", series.truncated(n).dump());
    Ok(EXIT_PASS)
}

fn cmd_oracle(
    catalog: &Catalog,
    ids: Option<String>,
    ids_flag: Option<String>,
    order: Option<i64>,
    window: Option<i64>,
    jobs: Option<usize>,
    format: Format,
) -> Result<i32, (i32, String)> {
    let ids = resolve_ids(catalog, ids, ids_flag)?;
    // window admissibility is checked eagerly against every effective order
    for id in &ids {
        let ident = catalog.get(id).expect("validated");
        let n = effective_order(order, ident);
        let w = window.unwrap_or_else(|| min_window(n));
        if w < min_window(n) {
            return Err((
                EXIT_USAGE,
                format!(
                    "window {w} too small for order {n} (need at least {})",
                    min_window(n)
                ),
            ));
        }
    }
    let reports = run_streamed(
        jobs,
        &ids,
        |id| {
            let ident = catalog.get(id).expect("validated");
            let n = effective_order(order, ident);
            let w = window.unwrap_or_else(|| min_window(n));
            match oracle_check(ident, n, w) {
                Ok(o) => OracleReport::from_outcome(&o),
                Err(e) => OracleReport::from_error(id, n, w, &e),
            }
        },
        |r| match format {
            Format::Text => println!("{}", r.render_text()),
            Format::Json => println!("{}", serde_json::to_string(r).unwrap()),
        },
    );
    let mut code = EXIT_PASS;
    for r in &reports {
        match r.status {
            Status::Pass => {}
            Status::Mismatch => code = code.max(EXIT_MISMATCH),
            Status::Error => code = code.max(EXIT_INTERNAL),
        }
    }
    Ok(code)
}
