use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cfmm::config::pool_from_path;
use cfmm::pricing::reported_price;
use cfmm::sim::{read_price_csv, simulate, trace_stats, SimConfig};
use cfmm::value::reserve_value;
use cfmm::verify::{
    brute_force_arbitrage, check_monotone_phi, check_path_deficiency, check_reachable_decomposition,
    check_reserve_floor, Report,
};
use cfmm::{solve_arbitrage, CfmmError, PoolSpec, PriceVector};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "cfmm", version, about = "Constant function market maker analysis")]
struct Cli {
    /// Write the main output here instead of stdout (or $CFMM_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Default directory for outputs when --out is not given.
    #[arg(long, env = "CFMM_OUT_DIR", global = true, hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Human-readable tables instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    All,
    Path,
    Phi,
    Floor,
    Decomposition,
    Oracle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reported price at the pool's reserves.
    Price {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 0)]
        numeraire: usize,
    },
    /// Optimal arbitrage against reference prices.
    Arb {
        #[arg(long)]
        pool: PathBuf,
        /// Comma-separated prices, or a file holding them.
        #[arg(long)]
        prices: String,
    },
    /// Value of the reserves at reference prices.
    Value {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        prices: String,
    },
    /// Run an arbitrageur against a simulated or replayed reference market.
    Simulate {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(long, default_value_t = 0.0)]
        threshold: f64,
        /// Initial reference prices (defaults to all ones).
        #[arg(long)]
        prices: Option<String>,
        /// CSV with price_1..price_n columns to replay instead of GBM.
        #[arg(long, conflicts_with_all = ["mu", "sigma"])]
        replay: Option<PathBuf>,
    },
    /// Randomized property checks.
    Check {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long)]
        prices: Option<String>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Longest strategy tried by the path checks.
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Check(String),
    Input(String),
    Numerical(String),
}

impl From<CfmmError> for Failure {
    fn from(e: CfmmError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn parse_prices(arg: &str) -> Result<PriceVector, Failure> {
    let parse_list = |s: &str| -> Option<Vec<f64>> {
        let items: Vec<&str> =
            s.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|t| !t.is_empty()).collect();
        if items.is_empty() {
            return None;
        }
        items.iter().map(|t| t.parse::<f64>().ok()).collect()
    };
    let values = match parse_list(arg) {
        Some(v) => v,
        None => {
            let text = fs::read_to_string(arg)
                .map_err(|e| Failure::Input(format!("--prices: not a number list or readable file ({e})")))?;
            let trimmed = text.trim();
            if trimmed.starts_with('[') {
                serde_json::from_str(trimmed).map_err(|e| Failure::Input(format!("--prices {arg}: {e}")))?
            } else {
                parse_list(trimmed.trim_matches(|ch| ch == '[' || ch == ']'))
                    .ok_or_else(|| Failure::Input(format!("--prices {arg}: expected numbers")))?
            }
        }
    };
    Ok(PriceVector::new(values)?)
}

fn load_pool(path: &Path) -> Result<PoolSpec, Failure> {
    pool_from_path(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Where the main output goes: --out, else $CFMM_OUT_DIR/<name>, else stdout.
fn destination(cli: &Cli, name: &str) -> Option<PathBuf> {
    cli.out.clone().or_else(|| cli.out_dir.as_ref().map(|d| d.join(name)))
}

fn emit(cli: &Cli, name: &str, text: &str) -> Result<(), Failure> {
    match destination(cli, name) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::Input(format!("{}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Input(e.to_string()))
        }
    }
}

fn json_line(v: &Value) -> String {
    format!("{v}\n")
}

fn require_json(cli: &Cli, what: &str) -> Result<(), Failure> {
    if cli.format == Format::Csv {
        return Err(Failure::Input(format!("--format csv is only available for simulate, not {what}")));
    }
    Ok(())
}

fn table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Price { pool, numeraire } => {
            require_json(cli, "price")?;
            let spec = load_pool(pool)?;
            let rp = reported_price(&spec, spec.reserves(), *numeraire)?;
            let band = rp.fee_band(spec.gamma());
            let text = if cli.pretty {
                let mut rows = vec![("coin".to_string(), "price  [band]".to_string())];
                for (i, p) in rp.normalized.iter().enumerate() {
                    rows.push((i.to_string(), format!("{p:.12}  [{:.12}, {:.12}]", band[i].0, band[i].1)));
                }
                table(&rows)
            } else {
                let mut v = serde_json::to_value(&rp).expect("serializable");
                v["fee_band"] = json!(band);
                json_line(&v)
            };
            emit(cli, "price.json", &text)
        }
        Command::Arb { pool, prices } => {
            require_json(cli, "arb")?;
            let spec = load_pool(pool)?;
            let c = parse_prices(prices)?;
            let res = solve_arbitrage(&spec, &c)?;
            let text = if cli.pretty {
                table(&[
                    ("status".into(), format!("{:?}", res.status)),
                    ("profit".into(), res.profit.to_string()),
                    ("delta".into(), format!("{:?}", res.trade.delta)),
                    ("lambda".into(), format!("{:?}", res.trade.lambda)),
                    ("post reserves".into(), format!("{:?}", res.post_reserves.as_slice())),
                    ("dual lambda".into(), res.dual_lambda.to_string()),
                ])
            } else {
                json_line(&serde_json::to_value(&res).expect("serializable"))
            };
            emit(cli, "arb.json", &text)
        }
        Command::Value { pool, prices } => {
            require_json(cli, "value")?;
            let spec = load_pool(pool)?;
            let c = parse_prices(prices)?;
            let res = reserve_value(&spec, &c)?;
            let text = if cli.pretty {
                let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| x.to_string());
                table(&[
                    ("value".into(), res.value.to_string()),
                    ("method".into(), format!("{:?}", res.method)),
                    ("dual lambda".into(), opt(res.dual_lambda)),
                    ("primal value".into(), opt(res.primal_value)),
                    ("duality gap".into(), opt(res.duality_gap)),
                    ("lower bound".into(), opt(res.lower_bound)),
                ])
            } else {
                json_line(&serde_json::to_value(&res).expect("serializable"))
            };
            emit(cli, "value.json", &text)
        }
        Command::Simulate { pool, steps, seed, mu, sigma, dt, threshold, prices, replay } => {
            let spec = load_pool(pool)?;
            let mut cfg = match replay {
                Some(path) => {
                    let file = fs::File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    let rows = read_price_csv(file)?;
                    let mut cfg = SimConfig::replay(spec, rows);
                    cfg.seed = *seed;
                    cfg
                }
                None => SimConfig::gbm(spec, *mu, *sigma, *steps, *seed),
            };
            cfg.dt = *dt;
            cfg.profit_threshold = *threshold;
            if let Some(p) = prices {
                cfg.initial_prices = Some(parse_prices(p)?.as_slice().to_vec());
            }
            let trace = simulate(&cfg)?;
            let stats = trace_stats(&trace)?;
            let (body, name) = match cli.format {
                Format::Csv => (trace.to_csv_string()?, "trace.csv"),
                Format::Json => (json_line(&serde_json::to_value(&trace).expect("serializable")), "trace.json"),
            };
            let summary = if cli.pretty {
                table(&[
                    ("steps".into(), stats.steps.to_string()),
                    ("final value".into(), stats.final_value.to_string()),
                    ("min value".into(), stats.min_value.to_string()),
                    ("max value".into(), stats.max_value.to_string()),
                    ("total profit".into(), stats.total_profit.to_string()),
                    ("max price gap".into(), stats.max_price_gap.to_string()),
                    ("trade fraction".into(), stats.trade_fraction.to_string()),
                ])
            } else {
                json_line(&serde_json::to_value(&stats).expect("serializable"))
            };
            if destination(cli, name).is_some() {
                emit(cli, name, &body)?;
                print!("{summary}");
            } else {
                print!("{body}");
                eprint!("{summary}");
            }
            Ok(())
        }
        Command::Check { pool, suite, prices, samples, steps, seed } => {
            require_json(cli, "check")?;
            let spec = load_pool(pool)?;
            let c = match prices {
                Some(p) => parse_prices(p)?,
                None => PriceVector::new(vec![1.0; spec.n()])?,
            };
            let reports = run_suite(&spec, &c, *suite, *samples, *steps, *seed)?;
            let text = if cli.pretty {
                let mut rows = vec![("check".to_string(), "samples  failures  result".to_string())];
                for r in &reports {
                    let verdict = if r.passed() { "PASS" } else { "FAIL" };
                    rows.push((r.check.clone(), format!("{:>7}  {:>8}  {verdict}", r.samples, r.failures.len())));
                }
                table(&rows)
            } else if reports.len() == 1 {
                json_line(&reports[0].to_json())
            } else {
                json_line(&Value::Array(reports.iter().map(Report::to_json).collect()))
            };
            emit(cli, "check.json", &text)?;
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(Failure::Check(failed.join(", ")))
            }
        }
    }
}

/// Grid oracle against the solver, as a one-sample report.
fn oracle_report(spec: &PoolSpec, c: &PriceVector) -> Result<Report, CfmmError> {
    let pitch = 1e-3;
    let grid = brute_force_arbitrage(spec, c, pitch)?;
    let exact = solve_arbitrage(spec, c)?;
    let l1: f64 = c.as_slice().iter().sum();
    let bound = 2.0 * pitch * l1 + 1e-9;
    let mut rep = Report::new("arbitrage_oracle");
    rep.samples = 1;
    let gap = (exact.profit - grid.profit).abs();
    if gap > bound || grid.profit > exact.profit + 1e-9 {
        rep.fail(0, json!({"prices": c}), json!({"solver": exact.profit, "grid": grid.profit}), json!(bound));
    }
    Ok(rep)
}

fn run_suite(
    spec: &PoolSpec,
    c: &PriceVector,
    suite: Suite,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<Report>, CfmmError> {
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Path {
        out.push(check_path_deficiency(spec, c, samples, steps, seed)?);
    }
    if all || suite == Suite::Phi {
        out.push(check_monotone_phi(spec, samples, seed)?);
    }
    if all || suite == Suite::Floor {
        out.push(check_reserve_floor(spec, samples, steps, seed)?);
    }
    if (all && spec.n() == 2) || suite == Suite::Decomposition {
        out.push(check_reachable_decomposition(spec, samples, seed)?);
    }
    if (all && spec.n() <= 3) || suite == Suite::Oracle {
        out.push(oracle_report(spec, c)?);
    }
    Ok(out)
}
