//! Command-line front end. Every subcommand parses and validates its flags,
//! calls one library pipeline, and writes the result with a reproducibility
//! header (version, seed, config digest).
//!
//! Exit codes: 0 success, 2 validation error, 3 data error, 4 internal error.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use sublinear::catalog::FnSpec;
use sublinear::envelope::{ingest_csv, ColumnRef, ColumnSpec, EnvelopeConfig, EnvelopeReport};
use sublinear::lln_sim::{self, MeanPolicy, NoiseSpec, SimConfig, SimReport};
use sublinear::mle::{self, SampleSet};
use sublinear::{axioms, GridSpec, MaximalDist, ScenarioFamily};

#[derive(Parser, Debug)]
#[command(
    name = "sublinear",
    version,
    about = "Sublinear expectations, maximal distributions and variance envelopes"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Flat key=value file with default flag values; flags given on the
    /// command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (written atomically); stdout when omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Randomized check of monotonicity, constant preservation,
    /// sub-additivity and positive homogeneity.
    VerifyAxioms {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
    },
    /// Evaluate E^[phi(X)] for a maximal distribution or a scenario family.
    Eval {
        #[arg(long, allow_negative_numbers = true)]
        mu_lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        mu_hi: Option<f64>,
        /// JSON array of measures, each {"atoms": [[point, weight], ...]}.
        #[arg(long, conflicts_with_all = ["mu_lo", "mu_hi"])]
        family: Option<PathBuf>,
        /// identity, square, neg-square, abs[:C], sin, cos, indicator:X:K
        #[arg(long, default_value = "identity")]
        phi: String,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long)]
        refine: bool,
        /// "A,B": also evaluate E^[phi(A X + B Y)] with Y an independent copy.
        #[arg(long)]
        convolve: Option<String>,
    },
    /// Monte-Carlo law of large numbers: E^[phi(S_n / n)] against its limit.
    Lln {
        #[arg(long, allow_negative_numbers = true)]
        mu_lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu_hi: f64,
        #[arg(long, default_value = "identity")]
        phi: String,
        /// Comma-separated: constant:M, periodic:M;M;..., random:M;M;..., oscillating.
        /// Defaults to constant policies at both endpoints.
        #[arg(long, allow_hyphen_values = true)]
        policies: Option<String>,
        /// none, uniform:A or two_point:A
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value_t = 10_000)]
        n_max: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Empirical E^[d(S_n / n)^2] against the bound E^[X_1^2] / n.
    Rate {
        #[arg(long, allow_negative_numbers = true)]
        mu_lo: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu_hi: f64,
        /// Defaults to constant policies at both endpoints and the midpoint,
        /// plus the periodic policy alternating between the endpoints.
        #[arg(long, allow_hyphen_values = true)]
        policies: Option<String>,
        #[arg(long, default_value = "none")]
        noise: String,
        #[arg(long, default_value_t = 10_000)]
        n_max: usize,
        #[arg(long, default_value_t = 200)]
        reps: usize,
    },
    /// Maximum likelihood estimate (min, max) of the mean interval.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Zero-based index or header name.
        #[arg(long, default_value = "0")]
        column: String,
        #[arg(long)]
        header: bool,
    },
    /// Rolling-window upper/lower variance envelope. K is fixed with prior
    /// knowledge; a larger K means a preference for more uncertainty.
    Envelope {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0")]
        column: String,
        #[arg(long)]
        timestamp_column: Option<String>,
        #[arg(long)]
        header: bool,
        /// Window length L (at least 2).
        #[arg(long)]
        window: usize,
        /// Number of windows K (at least 1).
        #[arg(long)]
        num_windows: usize,
        /// Use the raw second moment (mean-zero assumption) instead of
        /// subtracting each window's mean.
        #[arg(long)]
        raw: bool,
        /// Forecast index; defaults to the series length.
        #[arg(long)]
        t_index: Option<usize>,
    },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Data(m) => ("data", m),
            CliError::Internal(m) => ("internal", m),
        };
        let msg = msg.replace(['\n', '\r'], " ");
        write!(f, "error: code={} kind={kind} message={msg}", self.code())
    }
}

impl From<sublinear::Error> for CliError {
    fn from(e: sublinear::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Result of one command, ready to be rendered.
struct Rendered {
    json: Value,
    csv_header: &'static str,
    csv_rows: Vec<String>,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match parse(argv).and_then(run) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn parse(argv: Vec<String>) -> CliResult<Cli> {
    let cli = try_parse(&argv)?;
    let Some(path) = cli.config.clone() else {
        return Ok(cli);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let extra = config_args(&text)?;
    let at =
        subcommand_position(&argv).ok_or_else(|| validation("could not locate the subcommand"))?;
    let mut merged = argv[..=at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&argv[at + 1..]);
    try_parse(&merged)
}

fn try_parse(argv: &[String]) -> CliResult<Cli> {
    Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            let _ = e.print();
            std::process::exit(0);
        }
        let first = e
            .to_string()
            .lines()
            .next()
            .unwrap_or_default()
            .trim_start_matches("error: ")
            .to_string();
        validation(first)
    })
}

/// Translates `key=value` lines into `--key=value` flags; `key=true` becomes
/// a bare `--key` and `key=false` is dropped.
fn config_args(text: &str) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| validation(format!("config line {}: expected key=value", i + 1)))?;
        let (key, value) = (key.trim().trim_start_matches("--"), value.trim());
        if key == "config" {
            return Err(validation("config files cannot include other config files"));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

/// Index of the subcommand token; every top-level flag takes a value.
fn subcommand_position(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let tok = &argv[i];
        if tok.starts_with("--") {
            i += if tok.contains('=') { 1 } else { 2 };
        } else {
            return Some(i);
        }
    }
    None
}

fn run(cli: Cli) -> CliResult<()> {
    let rendered = execute(&cli.command, cli.seed)?;
    let digest = config_digest(&cli)?;
    let body = match cli.format {
        Format::Json => {
            let mut obj = match rendered.json {
                Value::Object(m) => m,
                other => {
                    let mut m = Map::new();
                    m.insert("result".into(), other);
                    m
                }
            };
            obj.insert(
                "meta".into(),
                json!({
                    "tool": "sublinear",
                    "version": sublinear::VERSION,
                    "command": command_name(&cli.command),
                    "seed": cli.seed,
                    "config_digest": digest,
                }),
            );
            let mut s = serde_json::to_string_pretty(&Value::Object(obj))
                .map_err(|e| CliError::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!(
                "# sublinear version={} command={} seed={} config_digest={}\n{}\n",
                sublinear::VERSION,
                command_name(&cli.command),
                cli.seed,
                digest,
                rendered.csv_header
            );
            for row in rendered.csv_rows {
                s.push_str(&row);
                s.push('\n');
            }
            s
        }
    };
    write_output(cli.output.as_deref(), body.as_bytes())
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::VerifyAxioms { .. } => "verify-axioms",
        Command::Eval { .. } => "eval",
        Command::Lln { .. } => "lln",
        Command::Rate { .. } => "rate",
        Command::Estimate { .. } => "estimate",
        Command::Envelope { .. } => "envelope",
    }
}

/// SHA-256 of the effective configuration (output path excluded).
fn config_digest(cli: &Cli) -> CliResult<String> {
    let cfg = json!({
        "command": &cli.command,
        "format": cli.format,
        "seed": cli.seed,
    });
    let bytes = serde_json::to_vec(&cfg).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(bytes)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Internal(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let internal = |e: std::io::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(internal)?;
    tmp.write_all(bytes).map_err(internal)?;
    tmp.as_file().sync_all().map_err(internal)?;
    tmp.persist(path).map_err(|e| internal(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}

fn execute(cmd: &Command, seed: u64) -> CliResult<Rendered> {
    match cmd {
        Command::VerifyAxioms { cases } => {
            if *cases == 0 {
                return Err(validation("--cases must be positive"));
            }
            let report = axioms::verify_axioms(*cases, seed)?;
            Ok(Rendered {
                json: to_json(&report)?,
                csv_header: axioms::AxiomReport::CSV_HEADER,
                csv_rows: report.to_csv_rows(),
            })
        }
        Command::Eval {
            mu_lo,
            mu_hi,
            family,
            phi,
            step,
            refine,
            convolve,
        } => eval(
            *mu_lo,
            *mu_hi,
            family.as_deref(),
            phi,
            *step,
            *refine,
            convolve.as_deref(),
        ),
        Command::Lln {
            mu_lo,
            mu_hi,
            phi,
            policies,
            noise,
            n_max,
            reps,
            step,
        } => {
            let d = MaximalDist::new(*mu_lo, *mu_hi)?;
            let noise: NoiseSpec = noise.parse()?;
            let policies = match policies {
                Some(s) => parse_policies(s, &d)?,
                None => vec![
                    MeanPolicy::Constant(d.mu_lo()),
                    MeanPolicy::Constant(d.mu_hi()),
                ],
            };
            let radius = d.mu_lo().abs().max(d.mu_hi().abs()) + noise_width(&noise);
            let f = phi.parse::<FnSpec>()?.build(radius)?;
            let cfg = SimConfig::new(*n_max, *reps, seed)?;
            let g = GridSpec::new(*step)?;
            let report = lln_sim::empirical_lln(&d, &f, &policies, &noise, &cfg, &g, None)?;
            sim_rendered(&report)
        }
        Command::Rate {
            mu_lo,
            mu_hi,
            policies,
            noise,
            n_max,
            reps,
        } => {
            let d = MaximalDist::new(*mu_lo, *mu_hi)?;
            let noise: NoiseSpec = noise.parse()?;
            let policies = match policies {
                Some(s) => parse_policies(s, &d)?,
                None => vec![
                    MeanPolicy::Constant(d.mu_lo()),
                    MeanPolicy::Constant(0.5 * (d.mu_lo() + d.mu_hi())),
                    MeanPolicy::Constant(d.mu_hi()),
                    MeanPolicy::Periodic(vec![d.mu_lo(), d.mu_hi()]),
                ],
            };
            let cfg = SimConfig::new(*n_max, *reps, seed)?;
            let report =
                lln_sim::rate_check(&d, &policies, &noise, &cfg, &lln_sim::log_schedule(*n_max))?;
            sim_rendered(&report)
        }
        Command::Estimate {
            input,
            column,
            header,
        } => {
            let spec = ColumnSpec {
                value: column.parse()?,
                timestamp: None,
                has_header: *header,
            };
            let series = ingest_csv(input, &spec)?;
            let samples = SampleSet::new(series.values().to_vec())
                .map_err(|e| CliError::Data(e.to_string()))?;
            let r = mle::mle_estimate(&samples);
            Ok(Rendered {
                json: to_json(&r)?,
                csv_header: "mu_lo_hat,mu_hi_hat,delta,n",
                csv_rows: vec![format!(
                    "{},{},{},{}",
                    r.mu_lo_hat, r.mu_hi_hat, r.delta, r.n
                )],
            })
        }
        Command::Envelope {
            input,
            column,
            timestamp_column,
            header,
            window,
            num_windows,
            raw,
            t_index,
        } => {
            let spec = ColumnSpec {
                value: column.parse()?,
                timestamp: timestamp_column
                    .as_deref()
                    .map(str::parse::<ColumnRef>)
                    .transpose()?,
                has_header: *header,
            };
            let cfg = EnvelopeConfig::new(*window, *num_windows, !raw)?;
            let series = ingest_csv(input, &spec)?;
            let report = EnvelopeReport::compute(&series, &cfg, *t_index)?;
            Ok(Rendered {
                json: to_json(&report)?,
                csv_header: EnvelopeReport::CSV_HEADER,
                csv_rows: report.to_csv_rows(),
            })
        }
    }
}

fn eval(
    mu_lo: Option<f64>,
    mu_hi: Option<f64>,
    family: Option<&Path>,
    phi: &str,
    step: f64,
    refine: bool,
    convolve: Option<&str>,
) -> CliResult<Rendered> {
    let spec: FnSpec = phi.parse()?;
    if let Some(path) = family {
        if convolve.is_some() {
            return Err(validation(
                "--convolve applies to maximal distributions only",
            ));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let fam = ScenarioFamily::from_json(&text)?;
        let radius = fam.support().fold(0.0, |r: f64, x| r.max(x.abs()));
        let r = fam.sublinear_expect(&spec.build(radius)?)?;
        return Ok(Rendered {
            json: json!({ "value": r.value, "argmax_index": r.argmax_index, "measures": fam.len() }),
            csv_header: "value,argmax_index",
            csv_rows: vec![format!("{},{}", r.value, r.argmax_index)],
        });
    }
    let (Some(lo), Some(hi)) = (mu_lo, mu_hi) else {
        return Err(validation("eval needs --mu-lo and --mu-hi, or --family"));
    };
    let d = MaximalDist::new(lo, hi)?;
    let mut g = GridSpec::new(step)?;
    g.refine = refine;
    let mut radius = lo.abs().max(hi.abs());
    let scales = convolve.map(parse_pair).transpose()?;
    if let Some((a, b)) = scales {
        radius *= a + b;
    }
    let f = spec.build(radius)?;
    let r = d.eval_maximal(&f, &g)?;
    let mut json = to_json(&r)?;
    let mut csv_header = "value,argmax,error_bound";
    let mut row = format!("{},{},{}", r.value, r.argmax, r.error_bound);
    if let Some((a, b)) = scales {
        let conv = d.convolve_scaled(a, b, &f, &g)?;
        let direct = d.eval_maximal(&f.compose_scale(a + b), &g)?;
        json["convolution"] = to_json(&conv)?;
        json["scaled"] = to_json(&direct)?;
        csv_header = "value,argmax,error_bound,convolution,convolution_error_bound,scaled,scaled_error_bound";
        row = format!(
            "{row},{},{},{},{}",
            conv.value, conv.error_bound, direct.value, direct.error_bound
        );
    }
    Ok(Rendered {
        json,
        csv_header,
        csv_rows: vec![row],
    })
}

fn parse_pair(s: &str) -> CliResult<(f64, f64)> {
    let bad = || validation(format!("--convolve expects A,B with A, B >= 0, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn noise_width(n: &NoiseSpec) -> f64 {
    match *n {
        NoiseSpec::None => 0.0,
        NoiseSpec::Uniform(a) | NoiseSpec::TwoPoint(a) => a,
    }
}

fn parse_policies(s: &str, d: &MaximalDist) -> CliResult<Vec<MeanPolicy>> {
    let list = |body: &str| -> CliResult<Vec<f64>> {
        body.split(';')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| validation(format!("policy `{s}`: bad mean `{t}`")))
            })
            .collect()
    };
    let policies = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            let policy = match p.split_once(':') {
                Some(("constant", m)) => MeanPolicy::Constant(
                    m.trim()
                        .parse()
                        .map_err(|_| validation(format!("policy `{p}`: bad mean")))?,
                ),
                Some(("periodic", body)) => MeanPolicy::Periodic(list(body)?),
                Some(("random", body)) => MeanPolicy::Random(list(body)?),
                None if p == "oscillating" => MeanPolicy::oscillating(d),
                _ => return Err(validation(format!("unknown policy `{p}`"))),
            };
            Ok(policy)
        })
        .collect::<CliResult<Vec<_>>>()?;
    // reject out-of-interval means before any simulation runs
    for p in &policies {
        if let MeanPolicy::Constant(m) = p {
            check_mean(*m, d)?;
        }
        if let MeanPolicy::Periodic(v) | MeanPolicy::Random(v) = p {
            for m in v {
                check_mean(*m, d)?;
            }
        }
    }
    Ok(policies)
}

fn check_mean(m: f64, d: &MaximalDist) -> CliResult<()> {
    if d.contains(m) {
        Ok(())
    } else {
        Err(validation(format!(
            "policy mean {m} outside [{}, {}]",
            d.mu_lo(),
            d.mu_hi()
        )))
    }
}

fn sim_rendered(report: &SimReport) -> CliResult<Rendered> {
    Ok(Rendered {
        json: to_json(report)?,
        csv_header: SimReport::CSV_HEADER,
        csv_rows: report.to_csv_rows(),
    })
}
