mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ersa::critical_surface::{
    bisect_lambda_c, dual_product_consistent, duality_residual_buffered, monotonicity_violations, trace_surface,
    BisectConfig, BisectResult,
};
use ersa::discrete_torus::{centred_rect, crude_event, f_n_event, sample_x_field, torus_plane_gap, torus_plane_gap_unchecked, BlockModel};
use ersa::lattice::{Rect, Site};
use ersa::percolation::{estimate_h_buffered, CrossingSpec};
use ersa::pivotal::{estimate_phi, russo_residuals, PivotalQuery, Residual, SiteClass, Steps};
use ersa::rsa_process::Params;
use ersa::sharp_threshold::{check_leminfl, influences, wht, BooleanTable, ProbVector};
use ersa::verify::{failures, run_suite, Suite};
use ersa::Error;

use output::{g, s, Csv};

#[derive(Parser, Debug)]
#[command(name = "ersa", version, about = "eRSA percolation experiments", args_override_self = true)]
struct Cli {
    /// Base seed; every trial derives its own stream from it.
    #[arg(long, global = true, env = "ERSA_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads for trial parallelism (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Config file (flat JSON object or key=value lines) mirroring the flags.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
enum Cmd {
    /// Horizontal black crossing probability of R(2n, rho).
    #[command(after_help = "CSV: n,rho,lambda,p,delta,h,ci_lo,ci_hi,successes,trials,dense_failures")]
    EstimateH(EstimateH),
    /// Pivotality probability of one site for the crossing of R(2n, rho).
    #[command(after_help = "CSV: kind,x,y,class,phi,ci_lo,ci_hi,successes,trials")]
    EstimatePhi(EstimatePhi),
    /// Derivatives of h against their pivotal sums.
    #[command(after_help = "CSV: identity,h,derivative,derivative_se,pivot_sum,pivot_sum_se,residual,residual_se\nThe lambda row is evaluated at delta = 0 and is labelled lambda_at_delta0 when delta > 0.")]
    Russo(Russo),
    /// h(lambda, p) + h(1/lambda, 1-p) - 1 on the square box.
    #[command(after_help = "CSV: lambda,p,h,dual_lambda,dual_p,h_dual,residual,std_err,dense_failures")]
    Duality(Duality),
    /// Pseudo-critical lambda at fixed p and n by bisection.
    #[command(after_help = "CSV: p,n,lambda_lo,lambda_hi,h_at_mid,ci_lo,ci_hi,trials,seed")]
    Bisect(Bisect),
    /// Bisection over a grid of p values.
    #[command(after_help = "CSV: p,n,lambda_lo,lambda_hi,h_at_mid,ci_lo,ci_hi,trials,seed,error")]
    TraceSurface(TraceSurface),
    /// Crossing probability on the torus T(2n) against the free-boundary square.
    #[command(after_help = "CSV: n,width,height,torus,plane,gap,std_err,trials")]
    TorusGap(TorusGap),
    /// Crude crossing event of the block model on seeded block fields.
    #[command(after_help = "CSV: field,crude,undelayed")]
    CrudeEvent(CrudeEvent),
    /// Influences and Walsh spectrum of a truth table.
    #[command(after_help = "Table file: header 'k n', then one 0/1 per line in lexicographic order \
        (first coordinate most significant).\nCSV: quantity,index,value. For k = 1 the Walsh \
        coefficients are listed by subset bitmask, bit j for coordinate j.")]
    Fourier(Fourier),
    /// Run a verification suite; exit status 1 if any asserted check fails.
    #[command(after_help = "CSV (with --out): criterion,name,status,detail")]
    Verify(Verify),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::EstimateH(_) => "estimate-h",
            Cmd::EstimatePhi(_) => "estimate-phi",
            Cmd::Russo(_) => "russo",
            Cmd::Duality(_) => "duality",
            Cmd::Bisect(_) => "bisect",
            Cmd::TraceSurface(_) => "trace-surface",
            Cmd::TorusGap(_) => "torus-gap",
            Cmd::CrudeEvent(_) => "crude-event",
            Cmd::Fourier(_) => "fourier",
            Cmd::Verify(_) => "verify",
        }
    }
}

const SUBCOMMANDS: [&str; 10] = [
    "estimate-h",
    "estimate-phi",
    "russo",
    "duality",
    "bisect",
    "trace-surface",
    "torus-gap",
    "crude-event",
    "fourier",
    "verify",
];

#[derive(Args, Debug, Serialize)]
struct Model {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

impl Model {
    fn params(&self) -> Result<Params, Error> {
        Params::new(self.lambda, self.p, self.delta)
    }
}

#[derive(Args, Debug, Serialize)]
struct EstimateH {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    #[serde(flatten)]
    model: Model,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Buffer width around the box; defaults to 2 ceil(sqrt(long side)).
    #[arg(long)]
    buffer: Option<u32>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Octagon,
    Diamond,
}

#[derive(Args, Debug, Serialize)]
struct EstimatePhi {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    #[serde(flatten)]
    model: Model,
    #[arg(long, value_enum, default_value = "diamond")]
    kind: Kind,
    #[arg(long, allow_negative_numbers = true)]
    x: i32,
    #[arg(long, allow_negative_numbers = true)]
    y: i32,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

#[derive(Args, Debug, Serialize)]
struct Russo {
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    #[serde(flatten)]
    model: Model,
    #[arg(long, default_value_t = 0.05)]
    step_p: f64,
    #[arg(long, default_value_t = 0.05)]
    step_lambda: f64,
    #[arg(long, default_value_t = 0.05)]
    step_delta: f64,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
}

#[derive(Args, Debug, Serialize)]
struct Duality {
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    #[serde(flatten)]
    model: Model,
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    #[arg(long)]
    buffer: Option<u32>,
}

#[derive(Args, Debug, Serialize)]
struct BisectArgs {
    #[arg(long, default_value_t = 3.0)]
    rho: f64,
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    #[arg(long, default_value_t = 0.2)]
    tol: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda_lo: f64,
    #[arg(long, default_value_t = 20.0)]
    lambda_hi: f64,
    #[arg(long, default_value_t = 400)]
    trials: u64,
    #[arg(long, default_value_t = 6400)]
    max_trials: u64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

impl BisectArgs {
    fn config(&self) -> BisectConfig {
        BisectConfig {
            rho: self.rho,
            target: self.target,
            tol: self.tol,
            lambda_lo: self.lambda_lo,
            lambda_hi: self.lambda_hi,
            trials: self.trials,
            max_trials: self.max_trials,
            delta: self.delta,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct Bisect {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    #[serde(flatten)]
    cfg: BisectArgs,
}

#[derive(Args, Debug, Serialize)]
struct TraceSurface {
    /// Comma-separated p values in (0,1).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    p_grid: Vec<f64>,
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    #[serde(flatten)]
    cfg: BisectArgs,
}

#[derive(Args, Debug, Serialize)]
struct TorusGap {
    /// Torus side is 2n.
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 4)]
    width: usize,
    #[arg(long, default_value_t = 4)]
    height: usize,
    #[command(flatten)]
    #[serde(flatten)]
    model: Model,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    /// Skip the size condition on the box and only report the gap.
    #[arg(long)]
    unchecked: bool,
}

#[derive(Args, Debug, Serialize)]
struct CrudeEvent {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    lambda0: f64,
    #[arg(long)]
    p_tilde: f64,
    #[arg(long)]
    lambda1: f64,
    /// Block length; defaults to (log n)^(-1/2).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = 200)]
    fields: u64,
}

#[derive(Args, Debug, Serialize)]
struct Fourier {
    #[arg(long)]
    table: PathBuf,
    /// Probability vector p_0,..,p_k.
    #[arg(long, value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Check the influence lower bound at this q.
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
struct Verify {
    #[arg(long, default_value = "all", value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
    suite: String,
}

enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Domain(_) | Error::Size { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::Failed(e.to_string())
    }
}

fn provenance(cli: &Cli) -> Vec<(String, String)> {
    let mut out = vec![
        ("command".to_string(), cli.cmd.name().to_string()),
        ("seed".to_string(), cli.seed.to_string()),
    ];
    if let Ok(serde_json::Value::Object(m)) = serde_json::to_value(&cli.cmd) {
        for (k, v) in m {
            let v = match v {
                serde_json::Value::Number(n) => match n.as_f64() {
                    Some(x) if !n.is_u64() && !n.is_i64() => g(x),
                    _ => n.to_string(),
                },
                serde_json::Value::String(s) => s,
                serde_json::Value::Null => "default".into(),
                serde_json::Value::Array(a) => a
                    .iter()
                    .map(|x| x.as_f64().map(g).unwrap_or_else(|| x.to_string()))
                    .collect::<Vec<_>>()
                    .join(";"),
                other => other.to_string(),
            };
            out.push((k, v));
        }
    }
    out
}

fn bisect_row(r: &BisectResult) -> Vec<String> {
    vec![
        g(r.p),
        s(r.n),
        g(r.lambda_lo),
        g(r.lambda_hi),
        g(r.h_at_mid.value),
        g(r.h_at_mid.ci_lo),
        g(r.h_at_mid.ci_hi),
        s(r.trials),
        s(r.seed),
    ]
}

fn residual_row(name: &str, h: f64, r: &Residual) -> Vec<String> {
    vec![
        s(name),
        g(h),
        g(r.derivative.mean),
        g(r.derivative.std_err),
        g(r.pivot_sum.mean),
        g(r.pivot_sum.std_err),
        g(r.residual),
        g(r.std_err),
    ]
}

/// Subset bitmask (bit j for coordinate j) of a lexicographic index on `{0,1}^n`.
fn lex_to_mask(i: usize, n: usize) -> usize {
    (0..n).filter(|&j| i >> (n - 1 - j) & 1 == 1).fold(0, |m, j| m | 1 << j)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed;
    let prov = provenance(cli);
    for (k, v) in &prov {
        eprintln!("{k}={v}");
    }
    let out = cli.out.as_deref();
    match &cli.cmd {
        Cmd::EstimateH(a) => {
            let e = estimate_h_buffered(a.n, a.rho, &a.model.params()?, a.trials, seed, a.buffer)?;
            let mut csv = Csv::new(
                prov,
                &["n", "rho", "lambda", "p", "delta", "h", "ci_lo", "ci_hi", "successes", "trials", "dense_failures"],
            );
            csv.row(vec![
                s(a.n),
                g(a.rho),
                g(a.model.lambda),
                g(a.model.p),
                g(a.model.delta),
                g(e.value),
                g(e.ci_lo),
                g(e.ci_hi),
                s(e.successes),
                s(e.trials),
                s(e.dense_failures),
            ]);
            csv.write(out)?;
        }
        Cmd::EstimatePhi(a) => {
            let site = match a.kind {
                Kind::Octagon => Site::octagon(a.x, a.y),
                Kind::Diamond => Site::diamond(a.x, a.y),
            };
            let spec = CrossingSpec::horizontal_black(Rect::crossing_box(a.n, a.rho)?);
            let e = estimate_phi(&PivotalQuery::new(site, spec), &a.model.params()?, a.trials, seed)?;
            let class = match SiteClass::of(&site) {
                SiteClass::Diamond => "diamond",
                SiteClass::EvenOctagon => "even",
                SiteClass::OddOctagon => "odd",
            };
            let mut csv = Csv::new(prov, &["kind", "x", "y", "class", "phi", "ci_lo", "ci_hi", "successes", "trials"]);
            let kind = if matches!(a.kind, Kind::Octagon) { "octagon" } else { "diamond" };
            csv.row(vec![
                s(kind),
                s(a.x),
                s(a.y),
                s(class),
                g(e.value),
                g(e.ci_lo),
                g(e.ci_hi),
                s(e.successes),
                s(e.trials),
            ]);
            csv.write(out)?;
        }
        Cmd::Russo(a) => {
            let steps = Steps {
                p: a.step_p,
                lambda: a.step_lambda,
                delta: a.step_delta,
            };
            let r = russo_residuals(a.n, a.rho, &a.model.params()?, steps, a.trials, seed)?;
            let mut csv = Csv::new(
                prov,
                &["identity", "h", "derivative", "derivative_se", "pivot_sum", "pivot_sum_se", "residual", "residual_se"],
            );
            csv.row(residual_row("p", r.h.value, &r.p));
            // the lambda identity is only checked at delta = 0
            let lambda_id = if a.model.delta == 0.0 { "lambda" } else { "lambda_at_delta0" };
            if a.model.delta != 0.0 {
                eprintln!("note: lambda row evaluated at delta = 0; the general-delta form is unverified");
            }
            csv.row(residual_row(lambda_id, r.h.value, &r.lambda));
            csv.row(residual_row("delta", r.h.value, &r.delta));
            csv.write(out)?;
        }
        Cmd::Duality(a) => {
            let params = a.model.params()?;
            let r = duality_residual_buffered(a.n, &params, a.trials, seed, a.buffer)?;
            let mut csv = Csv::new(
                prov,
                &["lambda", "p", "h", "dual_lambda", "dual_p", "h_dual", "residual", "std_err", "dense_failures"],
            );
            csv.row(vec![
                g(params.lambda),
                g(params.p),
                g(r.h.value),
                g(1.0 / params.lambda),
                g(1.0 - params.p),
                g(r.h_dual.value),
                g(r.residual),
                g(r.std_err),
                s(r.dense_failures),
            ]);
            csv.write(out)?;
        }
        Cmd::Bisect(a) => {
            let r = bisect_lambda_c(a.p, a.n, &a.cfg.config(), seed)?;
            if !r.converged {
                eprintln!("warning: a midpoint stayed ambiguous at max_trials; bracket is wider than tol");
            }
            let mut csv = Csv::new(
                prov,
                &["p", "n", "lambda_lo", "lambda_hi", "h_at_mid", "ci_lo", "ci_hi", "trials", "seed"],
            );
            csv.row(bisect_row(&r));
            csv.write(out)?;
        }
        Cmd::TraceSurface(a) => {
            let rows = trace_surface(&a.p_grid, a.n, &a.cfg.config(), seed)?;
            let mut csv = Csv::new(
                prov,
                &["p", "n", "lambda_lo", "lambda_hi", "h_at_mid", "ci_lo", "ci_hi", "trials", "seed", "error"],
            );
            for row in &rows {
                match (&row.result, &row.error) {
                    (Some(r), _) => {
                        let mut cells = bisect_row(r);
                        cells.push(String::new());
                        csv.row(cells);
                    }
                    (None, e) => {
                        let mut cells = vec![g(row.p), s(a.n)];
                        cells.extend(std::iter::repeat_n(String::new(), 6));
                        cells.push(s(seed));
                        cells.push(e.clone().unwrap_or_default().replace(',', ";"));
                        csv.row(cells);
                    }
                }
            }
            let bad = monotonicity_violations(&rows);
            eprintln!("monotonicity violations: {}", bad.len());
            for a_row in &rows {
                for b_row in &rows {
                    if let (Some(x), Some(y)) = (&a_row.result, &b_row.result) {
                        if (x.p + y.p - 1.0).abs() < 1e-12 && x.p <= y.p {
                            eprintln!(
                                "dual pair p = {} / {}: product of brackets can equal 1: {}",
                                g(x.p),
                                g(y.p),
                                dual_product_consistent(x, y)
                            );
                        }
                    }
                }
            }
            csv.write(out)?;
        }
        Cmd::TorusGap(a) => {
            let rect = centred_rect(a.n, a.width, a.height)?;
            let params = a.model.params()?;
            let r = if a.unchecked {
                torus_plane_gap_unchecked(a.n, &rect, &params, a.trials, seed)?
            } else {
                torus_plane_gap(a.n, &rect, &params, a.trials, seed)?
            };
            let mut csv = Csv::new(prov, &["n", "width", "height", "torus", "plane", "gap", "std_err", "trials"]);
            csv.row(vec![
                s(a.n),
                s(a.width),
                s(a.height),
                g(r.torus.value),
                g(r.plane.value),
                g(r.gap),
                g(r.std_err),
                s(a.trials),
            ]);
            csv.write(out)?;
        }
        Cmd::CrudeEvent(a) => {
            let model = BlockModel::new(a.n, a.lambda0, a.p_tilde, a.lambda1, a.delta)?;
            let marg = model.marginals()?;
            eprintln!(
                "block length {}, last block {}, cell law [{}]",
                g(model.delta),
                model.last_block(),
                marg.map(g).join(", ")
            );
            let mut csv = Csv::new(prov, &["field", "crude", "undelayed"]);
            let (mut crude_n, mut und_n) = (0, 0);
            for i in 0..a.fields {
                let x = sample_x_field(&model, seed, i)?;
                let c = crude_event(&x);
                let u = f_n_event(&x, seed, i);
                crude_n += c as u64;
                und_n += u as u64;
                csv.row(vec![s(i), s(c as u8), s(u as u8)]);
            }
            eprintln!("crude {crude_n}/{} undelayed {und_n}/{}", a.fields, a.fields);
            csv.write(out)?;
        }
        Cmd::Fourier(a) => {
            let text = fs::read_to_string(&a.table)?;
            let f = BooleanTable::parse(&text)?;
            let pv = ProbVector::new(a.p.clone())?;
            let infl = influences(&f, &pv)?;
            let mut csv = Csv::new(prov, &["quantity", "index", "value"]);
            csv.row(vec![s("probability"), String::new(), g(f.prob(pv.entries()))]);
            for (j, v) in infl.iter().enumerate() {
                csv.row(vec![s("influence"), s(j), g(*v)]);
            }
            csv.row(vec![s("total_influence"), String::new(), g(infl.iter().sum())]);
            if let Some(q) = a.q {
                let r = check_leminfl(&f, &pv, q)?;
                match &r.not_applicable {
                    Some(why) => eprintln!("influence lower bound: {why}"),
                    None => eprintln!(
                        "influence lower bound: bound {}, margin {}, holds {}",
                        g(r.bound),
                        g(r.margin),
                        r.consistent()
                    ),
                }
                csv.row(vec![s("a_star"), String::new(), g(r.a_star)]);
                csv.row(vec![s("leminfl_bound"), String::new(), g(r.bound)]);
            }
            if f.k == 1 {
                let mut h = vec![0.0; f.len()];
                for i in 0..f.len() {
                    h[lex_to_mask(i, f.n)] = f.get(i) as u8 as f64;
                }
                for (mask, c) in wht(&h)?.iter().enumerate() {
                    csv.row(vec![s("walsh"), s(mask), g(*c)]);
                }
            }
            csv.write(out)?;
        }
        Cmd::Verify(a) => {
            let suite = Suite::parse(&a.suite).ok_or_else(|| Failure::Usage(format!("unknown suite {}", a.suite)))?;
            let checks = run_suite(suite, seed);
            for c in &checks {
                println!("{c}");
            }
            if let Some(p) = out {
                let mut csv = Csv::new(prov, &["criterion", "name", "status", "detail"]);
                for c in &checks {
                    let status = match (c.asserted, c.passed) {
                        (false, _) => "info",
                        (true, true) => "pass",
                        (true, false) => "fail",
                    };
                    csv.row(vec![s(c.criterion), c.name.replace(',', ";"), s(status), c.detail.replace(',', ";")]);
                }
                csv.write(Some(p))?;
            }
            let failed = failures(&checks);
            if !failed.is_empty() {
                return Err(Failure::Failed(format!("{} check(s) failed", failed.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::splice(argv, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let matches = Cli::command().get_matches_from(argv);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
