use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qappell::catalog::{catalog, parse_identity, CheckKey};
use qappell::{
    contiguous_rhs, eval_phi, recursion_rhs, run_suite, Complex, Error, EvalConfig, Param, PhiKind,
    PhiSpec, QBase, SampleDomain, ShiftRequest, SuiteConfig,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EVAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qappell",
    version,
    about = "Evaluate q-Appell functions and check their recursion formulas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one function value.
    Eval(EvalArgs),
    /// Check identities over seeded random samples.
    Check(CheckArgs),
    /// Expand the right-hand side of an identity into a term list.
    Expand(ExpandArgs),
    /// List every identity with its source anchor.
    Catalog(CatalogArgs),
}

fn parse_complex(s: &str) -> Result<Complex, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let z = match s.split_once(',') {
        Some((re, im)) => Complex::new(parse(re)?, parse(im)?),
        None => Complex::new(parse(s)?, 0.0),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

#[derive(Args)]
struct PointArgs {
    /// Base q as `re` or `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    q: Complex,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    a: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    ap: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    b: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    bp: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    c: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    cp: Option<Complex>,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    x: Complex,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    y: Complex,
}

impl PointArgs {
    fn spec(&self, kind: PhiKind) -> Result<PhiSpec, Error> {
        let named: Vec<(Param, Complex)> = [
            (Param::A, self.a),
            (Param::Ap, self.ap),
            (Param::B, self.b),
            (Param::Bp, self.bp),
            (Param::C, self.c),
            (Param::Cp, self.cp),
        ]
        .into_iter()
        .filter_map(|(p, v)| v.map(|v| (p, v)))
        .collect();
        PhiSpec::from_named(kind, QBase::new(self.q)?, &named, self.x, self.y)
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_parser = |s: &str| s.parse::<PhiKind>().map_err(|e| e.to_string()))]
    kind: PhiKind,
    #[command(flatten)]
    point: PointArgs,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_layers: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    /// Identity ID, repeatable; `all` selects the whole catalog and the cross-checks.
    #[arg(long, required = true)]
    identity: Vec<String>,
    #[arg(long, default_value_t = 50)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Shift order for recursions and cross-checks, repeatable (default 1 2 3 4).
    #[arg(long)]
    n: Vec<u32>,
    #[arg(long, default_value_t = 1e-8)]
    threshold: f64,
}

#[derive(Args)]
struct ExpandArgs {
    #[arg(long)]
    identity: String,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[command(flatten)]
    point: PointArgs,
}

#[derive(Args)]
struct CatalogArgs {
    #[arg(long)]
    json: bool,
    /// Only identities whose printings disagree.
    #[arg(long)]
    flagged: bool,
}

/// Writes one line to stdout; a closed pipe is not an error worth reporting.
fn emit(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print_json(v: &impl serde::Serialize) {
    emit(&serde_json::to_string_pretty(v).expect("report types serialize"));
}

fn eval_error(e: &Error) -> ExitCode {
    print_json(&json!({ "error": e.kind_name(), "message": e.to_string() }));
    ExitCode::from(EXIT_EVAL)
}

fn usage_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_eval(args: EvalArgs) -> ExitCode {
    let spec = match args.point.spec(args.kind) {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let mut cfg = EvalConfig::default();
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.max_layers {
        cfg.max_layers = m;
    }
    if let Err(e) = cfg.validate() {
        return usage_error(&e);
    }
    match eval_phi(&spec, &cfg) {
        Ok(v) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Err(e) => eval_error(&e),
    }
}

fn cmd_check(args: CheckArgs) -> ExitCode {
    let cfg = SuiteConfig {
        domain: SampleDomain::with_seed(args.seed),
        samples_per_identity: args.samples,
        n_values: if args.n.is_empty() {
            vec![1, 2, 3, 4]
        } else {
            args.n
        },
        threshold: args.threshold,
        eval: EvalConfig::default(),
    };
    if args.samples == 0 {
        return usage_error(&Error::InvalidParameter(
            "--samples must be positive".into(),
        ));
    }
    match run_suite(&args.identity, &cfg) {
        Ok(outcome) => {
            print_json(&outcome);
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
        Err(e) => usage_error(&e),
    }
}

fn cmd_expand(args: ExpandArgs) -> ExitCode {
    let req = match parse_identity(&args.identity) {
        Ok(mut v) if v.len() == 1 => v.remove(0),
        Ok(_) => {
            return usage_error(&Error::UnknownIdentity(format!(
                "{} (expand takes a single identity)",
                args.identity
            )))
        }
        Err(e) => return usage_error(&e),
    };
    let variant = req.variant.unwrap_or(qappell::Variant::Derived);
    let expanded = match req.key {
        CheckKey::Contiguous(rel) => {
            let rel = rel.with_variant(variant);
            match args.point.spec(rel.kind) {
                Ok(base) => contiguous_rhs(&rel, &base),
                Err(e) => return usage_error(&e),
            }
        }
        CheckKey::Recursion(id) => {
            let id = id.with_variant(variant);
            let req = match args
                .point
                .spec(id.kind())
                .and_then(|base| ShiftRequest::new(id, base, args.n))
            {
                Ok(r) => r,
                Err(e) => return usage_error(&e),
            };
            recursion_rhs(&req)
        }
        CheckKey::Cross(..) => {
            return usage_error(&Error::UnknownIdentity(format!(
                "{} is a cross-check, not an identity",
                args.identity
            )))
        }
    };
    match expanded {
        Ok(tl) => {
            print_json(&tl);
            ExitCode::SUCCESS
        }
        Err(e) => eval_error(&e),
    }
}

fn cmd_catalog(args: CatalogArgs) -> ExitCode {
    let rows: Vec<_> = catalog()
        .into_iter()
        .filter(|e| !args.flagged || e.flagged)
        .collect();
    if args.json {
        print_json(&rows);
    } else {
        for e in rows {
            emit(&format!(
                "{:<14} {:<8} {}",
                e.id,
                if e.flagged { "flagged" } else { "-" },
                e.paper_ref
            ));
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Check(a) => cmd_check(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Catalog(a) => cmd_catalog(a),
    }
}
