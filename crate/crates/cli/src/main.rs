use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gftlab::generate::{generate, suite, FamilyKind, GenSpec};
use gftlab::instances::{bilateral_example, high_buyer_example, two_seller_star};
use gftlab::market::{load_instance, MarketInstance};
use gftlab::mechanisms::{FirstPriceGsom, Market, MechanismConfig, MechanismId};
use gftlab::verify::identities::{is_single_edge, IdentityConfig};
use gftlab::verify::reference::reference_checks;
use gftlab::verify::suite::{check_market, map_suite};
use gftlab::verify::{
    check_incentives, expected_metrics, first_best_gft, monte_carlo_metrics, ratio, single_edge_bound, CheckKind,
    CheckReport, Metrics, Report, ReportMetrics, Tolerance,
};
use gftlab::Error;

#[derive(Parser)]
#[command(name = "gftlab", version, about = "Gains-from-trade mechanisms for two-sided markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance.
    Gen(GenArgs),
    /// Expected metrics of mechanisms on an instance.
    Eval(EvalArgs),
    /// Run the property suite.
    Check(CheckArgs),
    /// Metrics across a range of lambda values.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    All,
    MaxTrades,
    Explicit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 2)]
    buyers: usize,
    #[arg(long, default_value_t = 2)]
    sellers: usize,
    /// Atoms per agent.
    #[arg(long, default_value_t = 3)]
    atoms: usize,
    /// Probability that each pair is a trade edge.
    #[arg(long, default_value_t = 1.0)]
    density: f64,
    #[arg(long, value_enum, default_value_t = Family::All)]
    family: Family,
    /// Trade limit for `max_trades`.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    grid_step: f64,
    #[arg(long, default_value_t = 11)]
    grid_points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = gftlab::bilateral::DEFAULT_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Absolute and relative tolerance for inequality checks.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Mechanisms to report besides the GSOM/GBOM pair behind the ratio.
    #[arg(long = "mechanism", value_parser = parse_mechanism)]
    mechanisms: Vec<MechanismId>,
    /// Exact expectations over enumerated profiles (the default).
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Monte Carlo with this many samples instead.
    #[arg(long)]
    mc: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, conflicts_with_all = ["reference_suite", "random"])]
    instance: Option<PathBuf>,
    /// The built-in instances with hand-derived values.
    #[arg(long, alias = "paper-suite")]
    reference_suite: bool,
    /// A generated suite of `--count` instances.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Swap in pay-your-bid buyer payments as a negative control.
    #[arg(long, hide = true)]
    inject_bug: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    from: f64,
    #[arg(long, default_value_t = 0.95)]
    to: f64,
    #[arg(long, default_value_t = 19)]
    steps: usize,
    #[command(flatten)]
    common: Common,
}

fn parse_mechanism(s: &str) -> Result<MechanismId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure exit statuses. Success is 0.
enum Fail {
    Property,
    Usage(String),
    Capability(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Capability(m) => Fail::Capability(m),
            other => Fail::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<(), Fail>;

fn configure_threads() {
    if let Some(n) = std::env::var("GFTLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Fail> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Fail::Usage(e.to_string()))
        }
    }
}

/// Rows of `(instance, mechanism, metric, value)`.
fn csv_text(rows: &[(String, String, String, f64)]) -> Result<String, Fail> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "mechanism", "metric", "value"]).map_err(|e| Fail::Usage(e.to_string()))?;
    for (a, b, c, v) in rows {
        w.write_record([a.as_str(), b.as_str(), c.as_str(), &v.to_string()]).map_err(|e| Fail::Usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Fail::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Fail::Usage(e.to_string()))
}

fn metric_rows(instance: &str, mech: &str, m: &Metrics) -> Vec<(String, String, String, f64)> {
    [
        ("gft_star", m.gft_star),
        ("gft", m.gft),
        ("pi_sellers", m.pi_sellers),
        ("pi_buyers", m.pi_buyers),
        ("budget", m.budget),
    ]
    .into_iter()
    .map(|(k, v)| (instance.to_string(), mech.to_string(), k.to_string(), v))
    .collect()
}

fn mechanism(id: MechanismId, c: &Common) -> Result<MechanismConfig, Fail> {
    let m = MechanismConfig::new(id).with_lambda(c.lambda).with_seed(c.seed);
    m.validate()?;
    Ok(m)
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let spec = GenSpec {
        buyers: a.buyers,
        sellers: a.sellers,
        atoms: a.atoms,
        density: a.density,
        family: match a.family {
            Family::All => FamilyKind::All,
            Family::MaxTrades => FamilyKind::MaxTrades,
            Family::Explicit => FamilyKind::Explicit,
        },
        k: a.k,
        grid_step: a.grid_step,
        grid_points: a.grid_points,
        seed: a.seed,
        ..GenSpec::default()
    };
    let inst = generate(&spec)?;
    let text = serde_json::to_string_pretty(&inst).map_err(|e| Fail::Usage(e.to_string()))?;
    write_output(a.out.as_deref(), &text)
}

fn cmd_eval(a: EvalArgs) -> Outcome {
    let start = Instant::now();
    let inst = load_instance(&a.instance)?;
    let hash = inst.hash();
    let mk = Market::new(inst)?;
    let mut ids = vec![MechanismId::Gsom, MechanismId::Gbom];
    for id in a.mechanisms {
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    let mut per: BTreeMap<String, Metrics> = BTreeMap::new();
    let mut errors: BTreeMap<String, Metrics> = BTreeMap::new();
    let mut star = None;
    for id in ids {
        let mech = mechanism(id, &a.common)?;
        match a.mc {
            Some(n) => {
                let est = monte_carlo_metrics(&mk, &mech, n, a.common.seed)?;
                star.get_or_insert(est.mean.gft_star);
                per.insert(id.to_string(), est.mean);
                errors.insert(id.to_string(), est.stderr);
            }
            None => {
                if star.is_none() {
                    star = Some(first_best_gft(&mk)?);
                }
                per.insert(id.to_string(), expected_metrics(&mk, &mech)?);
            }
        }
    }
    let star = star.unwrap_or(0.0);
    let pi_s = per["gsom"].seller_profit();
    let pi_b = per["gbom"].buyer_profit();
    let metrics = ReportMetrics { gft_star: star, pi_s_gsom: pi_s, pi_b_gbom: pi_b, ratio: ratio(star, pi_s, pi_b) };
    let text = match a.common.format {
        Format::Json => {
            let mut v = json!({
                "instance_hash": hash,
                "metrics": metrics,
                "mechanisms": per,
                "mode": if a.mc.is_some() { "monte_carlo" } else { "exact" },
                "runtime_secs": start.elapsed().as_secs_f64(),
                "checks": [],
            });
            if a.mc.is_some() {
                v["standard_errors"] = json!(errors);
            }
            serde_json::to_string_pretty(&v).map_err(|e| Fail::Usage(e.to_string()))?
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for (id, m) in &per {
                rows.extend(metric_rows(&hash, id, m));
            }
            rows.push((hash.clone(), "gsom".into(), "pi_s".into(), pi_s));
            rows.push((hash.clone(), "gbom".into(), "pi_b".into(), pi_b));
            if let Some(r) = metrics.ratio {
                rows.push((hash.clone(), "gsom+gbom".into(), "ratio".into(), r));
            }
            csv_text(&rows)?
        }
    };
    write_output(a.common.out.as_deref(), &text)
}

fn report_for(mk: &Market, checks: Vec<CheckReport>) -> gftlab::Result<Report> {
    let metrics = if mk.instance.enumerable() {
        let star = first_best_gft(mk)?;
        let pi_s = expected_metrics(mk, &MechanismConfig::new(MechanismId::Gsom))?.seller_profit();
        let pi_b = expected_metrics(mk, &MechanismConfig::new(MechanismId::Gbom))?.buyer_profit();
        ReportMetrics { gft_star: star, pi_s_gsom: pi_s, pi_b_gbom: pi_b, ratio: ratio(star, pi_s, pi_b) }
    } else {
        ReportMetrics { gft_star: f64::NAN, pi_s_gsom: f64::NAN, pi_b_gbom: f64::NAN, ratio: None }
    };
    Ok(Report { instance_hash: mk.instance.hash(), metrics, checks })
}

fn checks_for(mk: &Market, cfg: &IdentityConfig, inject_bug: bool) -> gftlab::Result<Vec<CheckReport>> {
    let mut checks = check_market(mk, cfg)?;
    if inject_bug {
        checks.push(check_incentives(mk, &FirstPriceGsom, CheckKind::DsicB, cfg.tol)?);
    }
    Ok(checks)
}

fn cmd_check(a: CheckArgs) -> Outcome {
    let c = &a.common;
    mechanism(MechanismId::MaS, c)?;
    let cfg = IdentityConfig { lambda: c.lambda, tol: Tolerance::uniform(c.tol), ..IdentityConfig::default() };
    let reports: Vec<Report> = if a.reference_suite {
        let mut out = Vec::new();
        let star = Market::new(two_seller_star())?;
        out.push(Report {
            instance_hash: star.instance.hash(),
            metrics: ReportMetrics { gft_star: f64::NAN, pi_s_gsom: f64::NAN, pi_b_gbom: f64::NAN, ratio: None },
            checks: reference_checks(cfg.tol)?,
        });
        for inst in [bilateral_example(), high_buyer_example()] {
            let mk = Market::new(inst)?;
            out.push(report_for(&mk, checks_for(&mk, &cfg, a.inject_bug)?)?);
        }
        out
    } else if a.random {
        let instances = suite(c.seed, a.count);
        map_suite(&instances, |_, mk| report_for(mk, checks_for(mk, &cfg, a.inject_bug)?))?
    } else if let Some(p) = &a.instance {
        let mk = Market::new(load_instance(p)?)?;
        if !mk.instance.enumerable() {
            return Err(Fail::Capability("the property suite needs discrete laws".into()));
        }
        let checks = checks_for(&mk, &cfg, a.inject_bug)?;
        vec![report_for(&mk, checks)?]
    } else {
        return Err(Fail::Usage("check needs --instance, --reference-suite or --random".into()));
    };

    let failures: Vec<(&Report, &CheckReport)> =
        reports.iter().flat_map(|r| r.checks.iter().filter(|c| !c.pass).map(move |c| (r, c))).collect();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    let summary = {
        let mut s = format!("{:<16} {:>7} {:>7}\n", "instance", "checks", "failed");
        for r in &reports {
            let bad = r.checks.iter().filter(|c| !c.pass).count();
            s += &format!("{:<16} {:>7} {:>7}\n", &r.instance_hash[..16], r.checks.len(), bad);
        }
        for (r, f) in &failures {
            s += &format!("FAIL {} {} witness {}\n", &r.instance_hash[..16], f.name, serde_json::to_string(&f.witness).unwrap_or_default());
        }
        s += &format!("{} of {total} checks pass", total - failures.len());
        s
    };

    let text = match c.format {
        Format::Json => serde_json::to_string_pretty(&reports).map_err(|e| Fail::Usage(e.to_string()))?,
        Format::Csv => {
            let rows: Vec<_> = reports
                .iter()
                .flat_map(|r| r.checks.iter().map(|c| (r.instance_hash.clone(), c.name.clone(), "pass".to_string(), c.pass as u8 as f64)))
                .collect();
            csv_text(&rows)?
        }
    };
    write_output(c.out.as_deref(), &text)?;
    if c.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Fail::Property)
    }
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let c = &a.common;
    if a.steps == 0 {
        return Err(Fail::Usage("steps must be at least 1".into()));
    }
    let inst: MarketInstance = load_instance(&a.instance)?;
    let hash = inst.hash();
    let mk = Market::new(inst)?;
    let star = first_best_gft(&mk)?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for k in 0..a.steps {
        let lambda = if a.steps == 1 {
            a.from
        } else {
            let last = (a.steps - 1) as f64;
            (a.from * (last - k as f64) + a.to * k as f64) / last
        };
        let c2 = Common { lambda, seed: c.seed, out: None, format: c.format, tol: c.tol };
        let ma_s = expected_metrics(&mk, &mechanism(MechanismId::MaS, &c2)?)?;
        let ma_b = expected_metrics(&mk, &mechanism(MechanismId::MaB, &c2)?)?;
        let chain = 0.5 * (ma_s.seller_profit() + ma_b.buyer_profit());
        let mut point: Value = json!({
            "lambda": lambda,
            "ma_s": ma_s,
            "ma_b": ma_b,
            "chain_ratio": (star != 0.0).then(|| chain / star),
        });
        let tag = format!("lambda={lambda}");
        rows.extend(metric_rows(&hash, &format!("ma_s@{tag}"), &ma_s));
        rows.extend(metric_rows(&hash, &format!("ma_b@{tag}"), &ma_b));
        if is_single_edge(&mk.instance) {
            let b = single_edge_bound(&mk.instance, lambda, MechanismConfig::new(MechanismId::MaB).q_rule)?;
            point["single_edge_ratio"] = json!(b.ratio());
            if let Some(r) = b.ratio() {
                rows.push((hash.clone(), format!("single_edge@{tag}"), "ratio".into(), r));
            }
        }
        points.push(point);
    }
    let text = match c.format {
        Format::Json => serde_json::to_string_pretty(&json!({ "instance_hash": hash, "gft_star": star, "points": points }))
            .map_err(|e| Fail::Usage(e.to_string()))?,
        Format::Csv => csv_text(&rows)?,
    };
    write_output(c.out.as_deref(), &text)
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Eval(a) => {
            let _ = a.exact;
            cmd_eval(a)
        }
        Command::Check(a) => cmd_check(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Property) => ExitCode::from(1),
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::Capability(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
