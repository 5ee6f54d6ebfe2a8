mod config;
mod tables;

use clap::{Args, Parser, Subcommand};
use nct::{cdf, pdf, quantile, sf, Method, MethodConfig, TailValue};

#[derive(Parser)]
#[command(name = "nct", about = "Noncentral Student-t distribution evaluator", version)]
struct Cli {
    /// Config file with KEY=VALUE overrides (default: ./nct.conf if present)
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one point and print a key=value result line
    Eval(EvalArgs),
    /// Recompute a reference table and gate against its reported errors
    Table(TableArgs),
    /// Sweep one variable and emit CSV
    Sweep(SweepArgs),
    /// Run every applicable route at a point and compare
    Compare(CompareArgs),
}

#[derive(Args)]
struct CommonTuning {
    /// Target relative error
    #[arg(long)]
    tol: Option<f64>,
    /// Force a single route (series|trapezoid|large_delta_elem|
    /// large_delta_gamma|large_n_bounded|large_n_uniform)
    #[arg(long)]
    method: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long)]
    n: f64,
    #[command(flatten)]
    tuning: CommonTuning,
    /// Print the survival function as the primary result
    #[arg(long)]
    sf: bool,
    /// Print the density instead of the CDF
    #[arg(long)]
    pdf: bool,
    /// Invert: print the x with cdf(x) = P for this delta and n
    #[arg(long, value_name = "P")]
    quantile: Option<f64>,
}

#[derive(Args)]
struct TableArgs {
    /// One of T1, T2, T3, T4, EX1, TRAP
    id: String,
    /// Output format: text (default) or csv
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct SweepArgs {
    /// Variable to sweep: x, delta or n
    #[arg(long)]
    var: String,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    #[command(flatten)]
    tuning: CommonTuning,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, allow_hyphen_values = true)]
    delta: f64,
    #[arg(long)]
    n: f64,
    #[command(flatten)]
    tuning: CommonTuning,
}

const EXIT_BAD_ARGS: i32 = 2;
const EXIT_EVAL_FAILURE: i32 = 3;

fn fail(code: i32, msg: &str) -> ! {
    eprintln!("error: {msg}");
    std::process::exit(code);
}

fn build_config(path: Option<&std::path::Path>, tuning: Option<&CommonTuning>) -> MethodConfig {
    let mut cfg = match config::load(path) {
        Ok(c) => c,
        Err(e) => fail(EXIT_BAD_ARGS, &format!("config: {e}")),
    };
    if let Some(t) = tuning {
        if let Some(tol) = t.tol {
            cfg.tol = tol;
        }
        if let Some(m) = &t.method {
            match m.parse::<Method>() {
                Ok(m) => cfg.force_method = Some(m),
                Err(e) => fail(EXIT_BAD_ARGS, &e.to_string()),
            }
        }
    }
    if let Err(e) = cfg.validate() {
        fail(EXIT_BAD_ARGS, &e.to_string());
    }
    cfg
}

fn result_line(t: &TailValue) -> String {
    format!(
        "value={:.16e} complement={:.16e} est_rel_err={:.3e} method={} terms_used={}",
        t.value, t.complement, t.est_rel_err, t.method, t.terms_used
    )
}

fn cmd_eval(args: &EvalArgs, cfg: &MethodConfig) {
    if args.pdf {
        match pdf(args.x, args.delta, args.n, cfg) {
            Ok(v) => println!("value={v:.16e} kind=pdf"),
            Err(e) => fail(EXIT_EVAL_FAILURE, &e.to_string()),
        }
        return;
    }
    if let Some(p) = args.quantile {
        match quantile(p, args.delta, args.n, cfg) {
            Ok(x) => println!("value={x:.16e} kind=quantile p={p:.16e}"),
            Err(nct::Error::InvalidArgument(e)) => fail(EXIT_BAD_ARGS, &e),
            Err(e) => fail(EXIT_EVAL_FAILURE, &e.to_string()),
        }
        return;
    }
    let r = if args.sf {
        sf(args.x, args.delta, args.n, cfg)
    } else {
        cdf(args.x, args.delta, args.n, cfg)
    };
    match r {
        Ok(t) => println!("{}", result_line(&t)),
        Err(nct::Error::InvalidArgument(e)) => fail(EXIT_BAD_ARGS, &e),
        Err(e) => fail(EXIT_EVAL_FAILURE, &e.to_string()),
    }
}

fn cmd_sweep(args: &SweepArgs, cfg: &MethodConfig) {
    if args.count == 0 || !(args.from <= args.to) {
        fail(EXIT_BAD_ARGS, "sweep: need from <= to and count >= 1");
    }
    let values: Vec<f64> = (0..args.count)
        .map(|i| {
            if args.count == 1 {
                args.from
            } else {
                args.from + (args.to - args.from) * i as f64 / (args.count - 1) as f64
            }
        })
        .collect();
    let need = |o: Option<f64>, name: &str| -> f64 {
        o.unwrap_or_else(|| fail(EXIT_BAD_ARGS, &format!("sweep: --{name} is required")))
    };
    let point = |v: f64| -> (f64, f64, f64) {
        match args.var.as_str() {
            "x" => (v, need(args.delta, "delta"), need(args.n, "n")),
            "delta" => (need(args.x, "x"), v, need(args.n, "n")),
            "n" => (need(args.x, "x"), need(args.delta, "delta"), v),
            other => fail(EXIT_BAD_ARGS, &format!("sweep: unknown variable '{other}'")),
        }
    };
    let eval_one = |&v: &f64| -> Result<TailValue, nct::Error> {
        let (x, d, n) = point(v);
        cdf(x, d, n, cfg)
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        values.par_iter().map(eval_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = values.iter().map(eval_one).collect();

    println!("var,value,complement,est_rel_err,method");
    for (v, r) in values.iter().zip(results) {
        match r {
            Ok(t) => println!(
                "{v:.17e},{:.17e},{:.17e},{:.3e},{}",
                t.value, t.complement, t.est_rel_err, t.method
            ),
            Err(e) => fail(EXIT_EVAL_FAILURE, &format!("at {}={v}: {e}", args.var)),
        }
    }
}

fn cmd_compare(args: &CompareArgs, cfg: &MethodConfig) {
    let methods = [
        Method::LargeDeltaGamma,
        Method::LargeDeltaElem,
        Method::LargeNUniform,
        Method::LargeNBounded,
        Method::Series,
        Method::Trapezoid,
    ];
    // consensus reference: the dispatcher's own answer
    let reference = match cdf(args.x, args.delta, args.n, cfg) {
        Ok(t) => t,
        Err(e) => fail(EXIT_EVAL_FAILURE, &e.to_string()),
    };
    println!(
        "reference value={:.16e} method={} est_rel_err={:.3e}",
        reference.value, reference.method, reference.est_rel_err
    );
    for m in methods {
        let mut c = cfg.clone();
        c.force_method = Some(m);
        match cdf(args.x, args.delta, args.n, &c) {
            Ok(t) => {
                let dev = if reference.value != 0.0 {
                    ((t.value - reference.value) / reference.value).abs()
                } else {
                    t.value.abs()
                };
                let flag = if dev > t.est_rel_err.max(reference.est_rel_err) {
                    " FLAG=deviation-exceeds-estimate"
                } else {
                    ""
                };
                println!(
                    "route={m} value={:.16e} deviation={dev:.3e} est_rel_err={:.3e} terms_used={}{flag}",
                    t.value, t.est_rel_err, t.terms_used
                );
            }
            Err(e) => println!("route={m} inapplicable: {e}"),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match &cli.command {
        Command::Eval(a) => {
            let cfg = build_config(cli.config.as_deref(), Some(&a.tuning));
            cmd_eval(a, &cfg);
        }
        Command::Table(a) => {
            let cfg = build_config(cli.config.as_deref(), None);
            let csv = match a.format.as_str() {
                "csv" => true,
                "text" => false,
                other => fail(EXIT_BAD_ARGS, &format!("unknown format '{other}'")),
            };
            match tables::run(&a.id, csv, &cfg) {
                Ok(true) => {}
                Ok(false) => std::process::exit(1),
                Err(e) => fail(EXIT_BAD_ARGS, &e.to_string()),
            }
        }
        Command::Sweep(a) => {
            let cfg = build_config(cli.config.as_deref(), Some(&a.tuning));
            cmd_sweep(a, &cfg);
        }
        Command::Compare(a) => {
            let cfg = build_config(cli.config.as_deref(), Some(&a.tuning));
            cmd_compare(a, &cfg);
        }
    }
}
