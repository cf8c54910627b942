use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use borrowbet::game::{run_game_with, LedgerOptions, Outcome, Path, Series};
use borrowbet::leverage::{evidence_functional, leverage_map, read_bets_csv, FunctionalRecord};
use borrowbet::oracle::{
    attest, attested_certificates, maximal_distribution, verify_certificate, GameTree, PathEnsemble, VerifyOptions,
};
use borrowbet::plot;
use borrowbet::rational::{self, Rational};
use borrowbet::simulate::{default_grid, run_mc, CertificateConstants, SimConfig};
use borrowbet::strategies::{parse_eta, parse_strategy};
use borrowbet::table1;
use borrowbet::verify::{parse_suites, run_suite, VerifyParams};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use errors::{fail, CliError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

mod errors {
    use std::fmt;

    /// `Usage` exits with 1, `Check` with 2.
    #[derive(Debug)]
    pub enum CliError {
        Usage(String),
        Check(String),
    }

    impl fmt::Display for CliError {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match self {
                CliError::Usage(m) | CliError::Check(m) => f.write_str(m),
            }
        }
    }

    pub fn fail(e: impl fmt::Display) -> CliError {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "borrowbet",
    version,
    about = "Betting games with borrowing: ledgers, certificates, exact checks and Monte Carlo"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Master seed for every pseudorandom choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write output files here instead of printing to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// TOML file of flat `key = value` stanzas, one per experiment.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Stanza to read from `--config` (defaults to the subcommand name).
    #[arg(long, global = true)]
    experiment: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Play one path and print its ledger.
    #[command(args_override_self = true)]
    Run {
        /// Strategy string, e.g. `constant:lambda=1/2,beta=1`.
        #[arg(long)]
        strategy: Option<String>,
        /// Outcomes such as `-1,+1`; drawn from the seed when absent.
        #[arg(long, allow_hyphen_values = true)]
        path: Option<String>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Heads probability used when the path is drawn.
        #[arg(long, default_value = "1/2")]
        p: String,
        /// Sub-liability weights: `unit`, `penalize-after-loss` or `random:SEED`.
        #[arg(long)]
        eta: Option<String>,
        /// Track compound-interest liabilities and adjusted series.
        #[arg(long)]
        compound: bool,
        /// Also write `ledger.svg` (needs `--out-dir`).
        #[arg(long)]
        plot: bool,
    },
    /// Recompute the two-round net/sub-net example and compare with the printed values.
    Table1,
    /// Run exact suites; exits 2 if any check fails.
    #[command(args_override_self = true)]
    Verify {
        /// Comma-separated suites or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        /// Strategy strings to check instead of the seeded corpus (repeatable).
        #[arg(long)]
        strategy: Vec<String>,
        #[arg(long, default_value_t = 24)]
        corpus: usize,
        /// Sampled stopping rules per strategy.
        #[arg(long, default_value_t = 64)]
        rules: usize,
        /// Leverage instances.
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 20)]
        save_configs: usize,
    },
    /// Seeded Monte Carlo of the running maximum of one series.
    #[command(args_override_self = true)]
    Mc {
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
        #[arg(long, default_value = "1/2")]
        p: String,
        #[arg(long, default_value = "W")]
        series: String,
        /// Stopping rule: `fixed:T`, `up:S:X[:T]`, `down:S:X[:T]` or `prefix:SEED:N[:T]`.
        #[arg(long)]
        stopping: Option<String>,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        compound: bool,
        /// Comma-separated thresholds; defaults to halves and powers of two up to 16.
        #[arg(long)]
        grid: Option<String>,
        /// Certificate `a,b[,c]` for the bound column and standardized e-values.
        #[arg(long)]
        certificate: Option<String>,
        /// Also write `tail.svg` (needs `--out-dir`).
        #[arg(long)]
        plot: bool,
    },
    /// Evidence functional of discrete bets read from CSV (`value,p,q[,bet]`).
    #[command(args_override_self = true)]
    Leverage {
        input: Option<PathBuf>,
        /// Leverage `beta` (repeatable); the unlevered bet when absent.
        #[arg(long, allow_hyphen_values = true)]
        beta: Vec<String>,
    },
    /// Enumerate every path of a small game exactly.
    #[command(args_override_self = true)]
    Enumerate {
        #[arg(long)]
        strategy: Option<String>,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        #[arg(long, default_value = "1/2")]
        p: String,
        #[arg(long, default_value = "W")]
        series: String,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        compound: bool,
        /// Print the oracle-attested certificates and their exact verdicts instead of paths.
        #[arg(long)]
        certify: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Run { .. } => "run",
            Command::Table1 => "table1",
            Command::Verify { .. } => "verify",
            Command::Mc { .. } => "mc",
            Command::Leverage { .. } => "leverage",
            Command::Enumerate { .. } => "enumerate",
        }
    }
}

fn parse_cli(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let matches = Cli::command().try_get_matches_from(&args)?;
    Cli::from_arg_matches(&matches)
}

/// Turns a stanza into flags placed right after the subcommand, so that
/// flags given on the command line override them.
fn stanza_args(path: &FsPath, name: &str) -> Result<Vec<OsString>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text.parse().map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let stanza = match table.get(name) {
        Some(toml::Value::Table(t)) => t,
        Some(_) => return Err(fail(format!("{}: `{name}` is not a stanza", path.display()))),
        None => return Err(fail(format!("{}: no stanza `{name}`", path.display()))),
    };
    let mut out = Vec::new();
    for (key, value) in stanza {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String, CliError> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(i) => Ok(i.to_string()),
                _ => Err(fail(format!("{}: `{key}` must be a string, integer or boolean", path.display()))),
            }
        };
        match value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for v in items {
                    out.push(format!("{flag}={}", scalar(v)?).into());
                }
            }
            v if key == "input" => out.push(scalar(v)?.into()),
            v => out.push(format!("{flag}={}", scalar(v)?).into()),
        }
    }
    Ok(out)
}

fn resolve(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    let cli = parse_cli(args.clone())?;
    let Some(config) = cli.config.clone() else {
        return Ok(cli);
    };
    let name = cli.experiment.clone().unwrap_or_else(|| cli.command.name().to_string());
    let extra = match stanza_args(&config, &name) {
        Ok(x) => x,
        Err(e) => return Err(Cli::command().error(clap::error::ErrorKind::InvalidValue, e.to_string())),
    };
    let sub = cli.command.name();
    let at = args.iter().position(|a| a == sub).map_or(args.len(), |i| i + 1);
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    parse_cli(merged)
}

struct Output {
    header: serde_json::Value,
    out_dir: Option<PathBuf>,
}

impl Output {
    fn comment_header(&self) -> String {
        format!(
            "# borrowbet {}\n# config: {}\n# seed: {}\n",
            self.header["version"].as_str().unwrap_or_default(),
            self.header["config"],
            self.header["seed"]
        )
    }

    /// `name` under `--out-dir`, or stdout.
    fn open(&self, name: &str) -> Result<Box<dyn Write>, CliError> {
        match &self.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
                let path = dir.join(name);
                let f = File::create(&path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
                Ok(Box::new(BufWriter::new(f)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    fn write_csv(&self, name: &str, body: &[u8]) -> Result<(), CliError> {
        let mut w = self.open(name)?;
        w.write_all(self.comment_header().as_bytes()).map_err(fail)?;
        w.write_all(body).map_err(fail)?;
        w.flush().map_err(fail)
    }

    fn write_jsonl(&self, name: &str, lines: &[serde_json::Value]) -> Result<(), CliError> {
        let mut w = self.open(name)?;
        writeln!(w, "{}", json!({ "header": self.header })).map_err(fail)?;
        for l in lines {
            writeln!(w, "{l}").map_err(fail)?;
        }
        w.flush().map_err(fail)
    }

    fn plot_path(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = self.out_dir.as_ref().ok_or_else(|| fail("--plot needs --out-dir"))?;
        fs::create_dir_all(dir).map_err(|e| fail(format!("{}: {e}", dir.display())))?;
        Ok(dir.join(name))
    }
}

fn require(value: &Option<String>, flag: &str) -> Result<String, CliError> {
    value.clone().ok_or_else(|| fail(format!("missing --{flag}")))
}

fn parse_rational(text: &str, what: &str) -> Result<Rational, CliError> {
    rational::parse(text).map_err(|e| fail(format!("{what}: {e}")))
}

fn parse_series(text: &str) -> Result<Series, CliError> {
    Series::parse(text).ok_or_else(|| fail(format!("unknown series `{text}`")))
}

fn ledger_options(eta: &Option<String>, compound: bool) -> Result<LedgerOptions, CliError> {
    Ok(LedgerOptions { eta: eta.as_deref().map(parse_eta).transpose().map_err(fail)?, compound })
}

fn random_path(seed: u64, horizon: usize, p: &Rational) -> Result<Path, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = rational::to_f64(p);
    if !(0.0..=1.0).contains(&p) {
        return Err(fail("p must lie in [0, 1]"));
    }
    Ok(Path::new((0..horizon).map(|_| if rng.gen_bool(p) { Outcome::Heads } else { Outcome::Tails }).collect()))
}

fn csv_bytes(f: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        f(&mut w).map_err(fail)?;
        w.flush().map_err(fail)?;
    }
    Ok(buf)
}

fn execute(cli: &Cli, out: &Output) -> Result<(), CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Run { strategy, path, horizon, p, eta, compound, plot } => {
            let built = parse_strategy(&require(strategy, "strategy")?).map_err(fail)?;
            let path = match (path, horizon) {
                (Some(text), h) => {
                    let path = Path::parse(text).map_err(fail)?;
                    if h.is_some_and(|h| h != path.horizon()) {
                        return Err(fail(format!(
                            "--path has {} rounds but --horizon is {}",
                            path.horizon(),
                            h.unwrap_or(0)
                        )));
                    }
                    path
                }
                (None, Some(h)) => random_path(cli.seed, *h, &parse_rational(p, "p")?)?,
                (None, None) => return Err(fail("give --path or --horizon")),
            };
            let options = ledger_options(eta, *compound)?;
            let ledger = run_game_with(built.strategy.as_ref(), &path, &built.schedule, &options).map_err(fail)?;
            match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    ledger.write_csv(&mut buf).map_err(fail)?;
                    out.write_csv("ledger.csv", &buf)?;
                }
                Format::Jsonl => {
                    let lines: Vec<serde_json::Value> = (0..=ledger.rounds())
                        .map(|t| {
                            let mut row = serde_json::Map::new();
                            row.insert("t".into(), json!(t));
                            if t > 0 {
                                let d = &ledger.decisions()[t - 1];
                                row.insert("X_t".into(), json!(ledger.outcomes()[t - 1].value()));
                                row.insert("beta_t".into(), json!(rational::to_fraction_string(&d.beta)));
                                row.insert("lambda_t".into(), json!(rational::to_fraction_string(&d.lambda)));
                                row.insert("b_t".into(), json!(rational::to_fraction_string(&ledger.bonuses()[t - 1])));
                            }
                            for s in Series::ALL {
                                if let Some(v) = ledger.value(s, t) {
                                    row.insert(s.name().into(), json!(rational::to_fraction_string(&v)));
                                }
                            }
                            serde_json::Value::Object(row)
                        })
                        .collect();
                    out.write_jsonl("ledger.jsonl", &lines)?;
                }
            }
            if *plot {
                plot::plot_ledger(&ledger, &out.plot_path("ledger.svg")?).map_err(fail)?;
            }
            Ok(())
        }
        Command::Table1 => {
            let rows = table1::table1().map_err(fail)?;
            match format {
                None => {
                    let mut w = out.open("table1.txt")?;
                    write!(w, "{}{}", out.comment_header(), table1::render(&rows)).map_err(fail)?;
                    w.flush().map_err(fail)
                }
                Some(Format::Jsonl) => {
                    let lines: Vec<_> = rows.iter().map(|r| serde_json::to_value(r).expect("row serializes")).collect();
                    out.write_jsonl("table1.jsonl", &lines)
                }
                Some(Format::Csv) => {
                    let buf = csv_bytes(|w| {
                        let mut head = vec!["X_1".to_string(), "X_2".to_string()];
                        head.extend(table1::COLUMNS.iter().map(|c| c.to_string()));
                        head.extend(table1::COLUMNS.iter().map(|c| format!("printed {c}")));
                        head.push("mismatches".into());
                        w.write_record(&head)?;
                        for r in &rows {
                            let mut rec = vec![r.x[0].to_string(), r.x[1].to_string()];
                            rec.extend(r.computed.iter().map(rational::to_fraction_string));
                            rec.extend(r.printed.iter().map(rational::to_fraction_string));
                            rec.push(r.mismatches.join(";"));
                            w.write_record(&rec)?;
                        }
                        Ok(())
                    })?;
                    out.write_csv("table1.csv", &buf)
                }
            }
        }
        Command::Verify { suite, horizon, strategy, corpus, rules, instances, save_configs } => {
            let suites = parse_suites(suite).map_err(fail)?;
            let params = VerifyParams {
                horizon: *horizon,
                seed: cli.seed,
                strategies: strategy.clone(),
                corpus: *corpus,
                rules: *rules,
                instances: *instances,
                save_configs: *save_configs,
            };
            let mut lines = Vec::new();
            let mut summary = Vec::new();
            let mut failed = 0;
            for s in suites {
                let reports = run_suite(s, &params).map_err(fail)?;
                let bad: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
                failed += bad.len();
                summary.push(format!(
                    "{} {s}: {}/{} checks passed",
                    if bad.is_empty() { "[PASS]" } else { "[FAIL]" },
                    reports.len() - bad.len(),
                    reports.len()
                ));
                for r in &bad {
                    summary.push(format!("  failed {}", r.to_jsonl()));
                }
                for r in &reports {
                    let mut v = serde_json::to_value(r).expect("report serializes");
                    v["suite"] = json!(s.name());
                    lines.push(v);
                }
            }
            match format {
                None => {
                    let mut w = out.open("verify.txt")?;
                    write!(w, "{}", out.comment_header()).map_err(fail)?;
                    for l in &summary {
                        writeln!(w, "{l}").map_err(fail)?;
                    }
                    w.flush().map_err(fail)?;
                }
                Some(Format::Jsonl) => out.write_jsonl("verify.jsonl", &lines)?,
                Some(Format::Csv) => {
                    let buf = csv_bytes(|w| {
                        w.write_record(["suite", "check", "passed", "params", "detail"])?;
                        for l in &lines {
                            w.write_record([
                                l["suite"].as_str().unwrap_or_default(),
                                l["check"].as_str().unwrap_or_default(),
                                &l["passed"].to_string(),
                                &l["params"].to_string(),
                                l["detail"].as_str().unwrap_or_default(),
                            ])?;
                        }
                        Ok(())
                    })?;
                    out.write_csv("verify.csv", &buf)?;
                }
            }
            if out.out_dir.is_some() {
                for l in &summary {
                    eprintln!("{l}");
                }
            }
            if failed > 0 {
                Err(CliError::Check(format!("{failed} check(s) failed")))
            } else {
                Ok(())
            }
        }
        Command::Mc {
            strategy,
            horizon,
            replications,
            p,
            series,
            stopping,
            eta,
            compound,
            grid,
            certificate,
            plot,
        } => {
            let mut config = SimConfig::new(require(strategy, "strategy")?, *horizon, *replications, cli.seed);
            config.p = parse_rational(p, "p")?;
            config.series = parse_series(series)?;
            config.stopping = stopping.clone();
            config.eta = eta.clone();
            config.compound = *compound;
            config.workers = cli.workers;
            config.grid = match grid {
                Some(g) => g.split(',').map(|x| parse_rational(x.trim(), "grid")).collect::<Result<_, _>>()?,
                None => default_grid(16),
            };
            config.certificate = certificate
                .as_deref()
                .map(|text| {
                    let parts: Vec<Rational> =
                        text.split(',').map(|x| parse_rational(x.trim(), "certificate")).collect::<Result<_, _>>()?;
                    match parts.as_slice() {
                        [a, b] => {
                            Ok(CertificateConstants { a: a.clone(), b: b.clone(), c: Rational::from_integer(0.into()) })
                        }
                        [a, b, c] => Ok(CertificateConstants { a: a.clone(), b: b.clone(), c: c.clone() }),
                        _ => Err(fail("--certificate takes a,b or a,b,c")),
                    }
                })
                .transpose()?;
            let report = run_mc(&config).map_err(fail)?;
            let mut summary = serde_json::to_value(&report.summary).expect("summary serializes");
            summary["header"] = out.header.clone();
            match format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut buf = Vec::new();
                    report.write_tail_csv(&mut buf).map_err(fail)?;
                    out.write_csv("tail.csv", &buf)?;
                }
                Format::Jsonl => out.write_jsonl("summary.jsonl", std::slice::from_ref(&summary))?,
            }
            if let Some(dir) = &out.out_dir {
                let mut buf = Vec::new();
                report.write_replications_csv(&mut buf).map_err(fail)?;
                out.write_csv("replications.csv", &buf)?;
                fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary).expect("json"))
                    .map_err(fail)?;
            }
            if *plot {
                plot::plot_tail(&report.summary, &out.plot_path("tail.svg")?).map_err(fail)?;
            }
            Ok(())
        }
        Command::Leverage { input, beta } => {
            let input = input.as_ref().ok_or_else(|| fail("missing input CSV"))?;
            let file = File::open(input).map_err(|e| fail(format!("{}: {e}", input.display())))?;
            let bets = read_bets_csv(file).map_err(fail)?;
            let betas: Vec<Rational> = if beta.is_empty() {
                vec![Rational::from_integer(0.into())]
            } else {
                beta.iter().map(|b| parse_rational(b, "beta")).collect::<Result<_, _>>()?
            };
            let mut records = Vec::new();
            for (id, bet) in &bets {
                for b in &betas {
                    let levered = leverage_map(bet, b).map_err(fail)?;
                    records.push(FunctionalRecord::new(id.clone(), b.clone(), &evidence_functional(&levered)));
                }
            }
            match format.unwrap_or(Format::Csv) {
                Format::Jsonl => {
                    let lines: Vec<_> = records.iter().map(|r| serde_json::to_value(r).expect("record")).collect();
                    out.write_jsonl("leverage.jsonl", &lines)
                }
                Format::Csv => {
                    let buf = csv_bytes(|w| {
                        w.write_record([
                            "bet",
                            "beta",
                            "value",
                            "value_dec",
                            "a",
                            "b",
                            "branch",
                            "bounded",
                            "restriction_binds",
                        ])?;
                        for r in &records {
                            let v = serde_json::to_value(r).expect("record");
                            let s = |k: &str| match &v[k] {
                                serde_json::Value::String(s) => s.clone(),
                                serde_json::Value::Null => String::new(),
                                other => other.to_string(),
                            };
                            w.write_record([
                                s("bet"),
                                s("beta"),
                                s("value"),
                                s("decimal"),
                                s("a"),
                                s("b"),
                                s("branch"),
                                s("bounded"),
                                (!v["restricted"].is_null()).to_string(),
                            ])?;
                        }
                        Ok(())
                    })?;
                    out.write_csv("leverage.csv", &buf)
                }
            }
        }
        Command::Enumerate { strategy, horizon, p, series, eta, compound, certify } => {
            let built = parse_strategy(&require(strategy, "strategy")?).map_err(fail)?;
            let ensemble = PathEnsemble::new(*horizon, parse_rational(p, "p")?).map_err(fail)?;
            let tree = GameTree::new(built.strategy.as_ref(), built.schedule.clone(), ensemble)
                .with_options(ledger_options(eta, *compound)?);
            let series = parse_series(series)?;
            let process = tree.process(series).map_err(fail)?;
            if *certify {
                let report = attest(&tree, None).map_err(fail)?;
                let mut lines = Vec::new();
                let mut failed = 0;
                for cert in attested_certificates(&tree, &report) {
                    let verdict = verify_certificate(&tree, &cert, &VerifyOptions::default()).map_err(fail)?;
                    failed += usize::from(!verdict.holds);
                    lines.push(json!({ "certificate": cert, "tail_bound": borrowbet::evidence::describe(&cert), "verdict": verdict }));
                }
                match format.unwrap_or(Format::Jsonl) {
                    Format::Jsonl => out.write_jsonl("certificates.jsonl", &lines)?,
                    Format::Csv => {
                        let buf = csv_bytes(|w| {
                            w.write_record(["subject", "kind", "a", "b", "c", "holds", "points_checked"])?;
                            for l in &lines {
                                let c = &l["certificate"];
                                w.write_record([
                                    c["subject"].to_string(),
                                    c["kind"].to_string(),
                                    c["a"].as_str().unwrap_or_default().to_string(),
                                    c["b"].as_str().unwrap_or_default().to_string(),
                                    c["c"].as_str().unwrap_or_default().to_string(),
                                    l["verdict"]["holds"].to_string(),
                                    l["verdict"]["points_checked"].to_string(),
                                ])?;
                            }
                            Ok(())
                        })?;
                        out.write_csv("certificates.csv", &buf)?;
                    }
                }
                return if failed > 0 {
                    Err(CliError::Check(format!("{failed} certificate(s) failed")))
                } else {
                    Ok(())
                };
            }
            let mut rows: Vec<serde_json::Value> = Vec::new();
            tree.for_each_path(|l, _, weight| {
                let values = l.series(series).unwrap_or_default();
                let sup = values.iter().max().cloned().unwrap_or_default();
                rows.push(json!({
                    "path": l.path().to_string(),
                    "probability": rational::to_fraction_string(weight),
                    "W_T": rational::to_fraction_string(&l.last().wealth),
                    "L_T": rational::to_fraction_string(&l.last().liabilities),
                    "N_T": rational::to_fraction_string(&l.last().net),
                    "terminal": rational::to_fraction_string(values.last().expect("index 0")),
                    "sup": rational::to_fraction_string(&sup),
                }));
            })
            .map_err(fail)?;
            let max = maximal_distribution(&tree, process).map_err(fail)?;
            rows.push(json!({
                "summary": {
                    "series": series.name(),
                    "paths": rows.len(),
                    "mean_terminal": rational::to_fraction_string(&borrowbet::oracle::expectation(&tree, |l| l.current(series).unwrap_or_default()).map_err(fail)?),
                    "mean_sup": rational::to_fraction_string(&max.mean()),
                }
            }));
            match format.unwrap_or(Format::Csv) {
                Format::Jsonl => out.write_jsonl("paths.jsonl", &rows),
                Format::Csv => {
                    let buf = csv_bytes(|w| {
                        w.write_record(["path", "probability", "W_T", "L_T", "N_T", "terminal", "sup"])?;
                        for r in rows.iter().filter(|r| r.get("path").is_some()) {
                            let f = |k: &str| r[k].as_str().unwrap_or_default().to_string();
                            w.write_record([
                                f("path"),
                                f("probability"),
                                f("W_T"),
                                f("L_T"),
                                f("N_T"),
                                f("terminal"),
                                f("sup"),
                            ])?;
                        }
                        Ok(())
                    })?;
                    out.write_csv("paths.csv", &buf)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match resolve(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let out = Output {
        header: json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": serde_json::to_value(&cli).expect("config serializes"),
            "seed": cli.seed,
        }),
        out_dir: cli.out_dir.clone(),
    };
    match execute(&cli, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(2)
        }
    }
}
