//! snclab — command-line laboratory for low-latency erasure protection.
//!
//! Subcommands: `simulate` runs a seeded Monte Carlo experiment from a TOML
//! config, `analyze` evaluates the closed-form error/delay formulas over
//! parameter grids, `channel` resolves a physical channel model to its
//! erasure probability, and `designs` lists or expands the coding designs.
//! All tabular output is schema-stable CSV; exit codes are 0 (success),
//! 2 (usage or configuration error), and 3 (I/O error).

mod config;

use clap::{Args, Parser, Subcommand};
use config::{OutputKind, Validated};
use snc_core::analysis::{self, DelayScheme};
use snc_core::channel::ChannelModel;
use snc_core::design::{self, SncDesign, SymbolicCombo};
use snc_core::sim::{self, Scheme, SimConfig, SweepAxis};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

enum CliError {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// Filesystem trouble: exit 3.
    Io(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage(e: snc_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser)]
#[command(
    name = "snclab",
    version,
    about = "Streaming-code laboratory: Monte Carlo experiments and closed-form \
             analysis for low-latency packet erasure protection"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a seeded Monte Carlo experiment from a TOML config and emit CSV
    Simulate(SimulateArgs),
    /// Evaluate closed-form error/delay formulas over parameter grids
    Analyze(AnalyzeArgs),
    /// Resolve a channel model to its packet erasure probability
    Channel(ChannelArgs),
    /// List the design catalog, or expand one design block by block
    Designs(DesignsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment configuration
    config: PathBuf,
    /// Override [session].seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 picks the machine default
    #[arg(long, env = "SNCLAB_THREADS", default_value_t = 0)]
    threads: usize,
    /// Prefix the CSV with gnuplot column-hint comment lines
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// One of: krep-error, snc-simple-error, snc-design-bound, rank-prob,
    /// rank-prob-nz, rlnc-all-success, krep-all-success, decode-delay
    #[arg(long)]
    formula: String,
    /// Comma-separated erasure probabilities
    #[arg(long)]
    epsilon: Option<String>,
    /// Comma-separated transmission budgets K
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated decoding delays D (decode-delay with --scheme snc)
    #[arg(long)]
    d: Option<String>,
    /// Comma-separated field orders q
    #[arg(long)]
    q: Option<String>,
    /// Comma-separated received-packet counts S
    #[arg(long)]
    s: Option<String>,
    /// Comma-separated data-packet counts M
    #[arg(long)]
    m: Option<String>,
    /// Comma-separated sent-packet counts N
    #[arg(long)]
    n: Option<String>,
    /// Design name (snc-design-bound), e.g. table3 or min-delay:4:4
    #[arg(long)]
    design: Option<String>,
    /// Scheme for decode-delay: krep, snc, or block-nc
    #[arg(long)]
    scheme: Option<String>,
    /// Write the CSV to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prefix the CSV with gnuplot column-hint comment lines
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct ChannelArgs {
    /// Finite-blocklength AWGN model (needs --snr-db or --snr-linear, --n, --nbit)
    #[arg(long)]
    fbl: bool,
    /// Grant-free random-access model (needs --lambda, --preambles)
    #[arg(long)]
    ra: bool,
    /// Signal-to-noise ratio in dB
    #[arg(long)]
    snr_db: Option<f64>,
    /// Signal-to-noise ratio, linear
    #[arg(long)]
    snr_linear: Option<f64>,
    /// Channel uses per packet
    #[arg(long)]
    n: Option<u32>,
    /// Information bits per packet
    #[arg(long)]
    nbit: Option<u32>,
    /// Mean arrivals per slot
    #[arg(long)]
    lambda: Option<f64>,
    /// Preamble pool size
    #[arg(long)]
    preambles: Option<u64>,
}

#[derive(Args)]
struct DesignsArgs {
    /// Design to expand: table1..table3, simple:K, or min-delay:K:Q
    #[arg(conflicts_with = "config")]
    name: Option<String>,
    /// Expand the sliding design found in this experiment config instead
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the listing to this path instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Analyze(args) => cmd_analyze(args),
        Cmd::Channel(args) => cmd_channel(args),
        Cmd::Designs(args) => cmd_designs(args),
    }
}

// ---------------------------------------------------------------- plumbing

fn read_config(path: &Path) -> CliResult<Validated> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    config::parse(&raw).map_err(CliError::Usage)
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// RFC-4180: quote a field only when it contains a separator, quote, or
/// line break.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Display an optional parameter column; absent values print as N/A.
fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "N/A".into())
}

/// Probability/value columns use scientific notation; absent values N/A.
fn opt_e(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_else(|| "N/A".into())
}

// ---------------------------------------------------------------- simulate

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let mut v = read_config(&args.config)?;
    if let Some(seed) = args.seed {
        v.sim.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    let csv = pool.install(|| render_simulation(&v, args.gnuplot))?;
    write_output(args.out.as_deref(), &csv)
}

fn render_simulation(v: &Validated, gnuplot: bool) -> CliResult<String> {
    match (v.output, &v.sweep) {
        (OutputKind::ErrorRate, Some(axis)) => render_sweep(&v.sim, axis, gnuplot),
        (OutputKind::ErrorRate, None) => render_error_rate(&v.sim, gnuplot),
        (OutputKind::RetxHistogram, _) => render_histogram(&v.sim, gnuplot),
        (OutputKind::ErrorTrace, _) => render_trace(&v.sim, gnuplot),
    }
}

/// Leading CSV columns shared by every simulation table.
fn scheme_cols(scheme: &Scheme) -> String {
    let (k, d, q) = scheme.params();
    format!("{},{},{},{}", csv_field(&scheme.label()), opt(k), opt(d), opt(q))
}

const ERROR_RATE_HEADER: &str =
    "scheme,k,d,q,epsilon,deadlines,failures,error_rate,ci_low,ci_high,seed";

fn render_error_rate(cfg: &SimConfig, gnuplot: bool) -> CliResult<String> {
    let est = sim::estimate_error_rate(cfg).map_err(usage)?;
    let mut out = String::new();
    if gnuplot {
        out.push_str("# gnuplot: set datafile separator \",\"\n");
        out.push_str("# gnuplot: error_rate vs epsilon -> using 5:8 (one header row)\n");
    }
    out.push_str(ERROR_RATE_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "{},{},{},{},{:e},{:e},{:e},{}\n",
        scheme_cols(&cfg.scheme),
        cfg.channel.epsilon(),
        est.trials,
        est.events,
        est.mean,
        est.ci_low,
        est.ci_high,
        cfg.seed
    ));
    Ok(out)
}

fn render_sweep(cfg: &SimConfig, axis: &SweepAxis, gnuplot: bool) -> CliResult<String> {
    let rows = sim::sweep(cfg, axis, std::slice::from_ref(&cfg.scheme)).map_err(usage)?;
    let mut out = String::new();
    if gnuplot {
        out.push_str("# gnuplot: set datafile separator \",\"\n");
        out.push_str(
            "# gnuplot: error_rate vs epsilon -> using 5:8; analytic curve -> using 5:13\n",
        );
    }
    out.push_str(ERROR_RATE_HEADER);
    out.push_str(",analytic_exact,analytic_leading,analytic_is_bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:e},{:e},{:e},{},{},{},{}\n",
            csv_field(&r.scheme),
            opt(r.k),
            opt(r.d),
            opt(r.q),
            r.epsilon,
            r.estimate.trials,
            r.estimate.events,
            r.estimate.mean,
            r.estimate.ci_low,
            r.estimate.ci_high,
            cfg.seed,
            opt_e(r.analytic_exact),
            opt_e(r.analytic_leading),
            opt(r.analytic_is_bound),
        ));
    }
    Ok(out)
}

fn render_histogram(cfg: &SimConfig, gnuplot: bool) -> CliResult<String> {
    let hist = sim::retx_histogram(cfg).map_err(usage)?;
    let mut out = String::new();
    if gnuplot {
        out.push_str("# gnuplot: set datafile separator \",\"\n");
        out.push_str("# gnuplot: probability vs retransmissions -> using 7:9 with boxes\n");
    }
    out.push_str("scheme,k,d,q,epsilon,sessions,retx,count,probability,seed\n");
    let lead = scheme_cols(&cfg.scheme);
    for (retx, count) in &hist.counts {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{}\n",
            lead,
            cfg.channel.epsilon(),
            hist.sessions,
            retx,
            count,
            *count as f64 / hist.sessions as f64,
            cfg.seed
        ));
    }
    Ok(out)
}

fn render_trace(cfg: &SimConfig, gnuplot: bool) -> CliResult<String> {
    let trace = sim::error_rate_trace(cfg).map_err(usage)?;
    let mut out = String::new();
    if gnuplot {
        out.push_str("# gnuplot: set datafile separator \",\"\n");
        out.push_str("# gnuplot: error_rate vs deadline -> using 6:9 with linespoints\n");
    }
    out.push_str("scheme,k,d,q,epsilon,deadline,deadlines,failures,error_rate,ci_low,ci_high,seed\n");
    let lead = scheme_cols(&cfg.scheme);
    for (i, est) in trace.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{:e},{}\n",
            lead,
            cfg.channel.epsilon(),
            i + 1,
            est.trials,
            est.events,
            est.mean,
            est.ci_low,
            est.ci_high,
            cfg.seed
        ));
    }
    Ok(out)
}

// ----------------------------------------------------------------- analyze

const ANALYZE_HEADER: &str = "formula,k,d,q,s,m,n,epsilon,value,is_upper_bound";

/// One analyze row; every column defaults to N/A.
struct ARow {
    k: Option<u32>,
    d: Option<u32>,
    q: Option<u16>,
    s: Option<u32>,
    m: Option<u64>,
    n: Option<u64>,
    epsilon: Option<f64>,
    value: f64,
    is_upper_bound: bool,
}

impl ARow {
    fn render(&self, formula: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:e},{}\n",
            csv_field(formula),
            opt(self.k),
            opt(self.d),
            opt(self.q),
            opt(self.s),
            opt(self.m),
            opt(self.n),
            opt(self.epsilon),
            self.value,
            self.is_upper_bound
        )
    }
}

/// Parse a required comma-separated flag; an empty string is an empty grid.
fn req_list<T: FromStr>(formula: &str, flag: &str, raw: &Option<String>) -> CliResult<Vec<T>> {
    let raw = raw
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("--formula {formula} requires {flag}")))?;
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|item| {
            let item = item.trim();
            item.parse::<T>().map_err(|_| {
                CliError::Usage(format!("{flag}: \"{item}\" is not a valid value"))
            })
        })
        .collect()
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let formula = args.formula.as_str();
    let allowed: &[&str] = match formula {
        "krep-error" | "snc-simple-error" => &["--epsilon", "--k"],
        "snc-design-bound" => &["--epsilon", "--design"],
        "rank-prob" | "rank-prob-nz" => &["--s", "--m", "--q"],
        "rlnc-all-success" => &["--n", "--m", "--epsilon", "--q"],
        "krep-all-success" => &["--n", "--m", "--epsilon", "--k"],
        "decode-delay" => &["--scheme", "--k", "--d", "--m"],
        other => {
            return Err(CliError::Usage(format!(
                "unknown --formula \"{other}\"; expected one of: krep-error, \
                 snc-simple-error, snc-design-bound, rank-prob, rank-prob-nz, \
                 rlnc-all-success, krep-all-success, decode-delay"
            )))
        }
    };
    let given = [
        ("--epsilon", args.epsilon.is_some()),
        ("--k", args.k.is_some()),
        ("--d", args.d.is_some()),
        ("--q", args.q.is_some()),
        ("--s", args.s.is_some()),
        ("--m", args.m.is_some()),
        ("--n", args.n.is_some()),
        ("--design", args.design.is_some()),
        ("--scheme", args.scheme.is_some()),
    ];
    for (flag, present) in given {
        if present && !allowed.contains(&flag) {
            return Err(CliError::Usage(format!(
                "{flag} is not used by --formula {formula}"
            )));
        }
    }

    let mut rows: Vec<ARow> = Vec::new();
    let na = ARow {
        k: None,
        d: None,
        q: None,
        s: None,
        m: None,
        n: None,
        epsilon: None,
        value: 0.0,
        is_upper_bound: false,
    };
    match formula {
        "krep-error" => {
            let eps: Vec<f64> = req_list(formula, "--epsilon", &args.epsilon)?;
            let ks: Vec<u32> = req_list(formula, "--k", &args.k)?;
            for &e in &eps {
                for &k in &ks {
                    let value = analysis::krep_error(e, k).map_err(usage)?;
                    rows.push(ARow { k: Some(k), epsilon: Some(e), value, ..na });
                }
            }
        }
        "snc-simple-error" => {
            let eps: Vec<f64> = req_list(formula, "--epsilon", &args.epsilon)?;
            let ks: Vec<u32> = req_list(formula, "--k", &args.k)?;
            for &e in &eps {
                for &k in &ks {
                    let est = analysis::snc_simple_error(e, k).map_err(usage)?;
                    rows.push(ARow {
                        k: Some(k),
                        d: Some(k - 1),
                        q: Some(2),
                        epsilon: Some(e),
                        value: est.exact.unwrap_or(est.leading),
                        is_upper_bound: est.is_upper_bound,
                        ..na
                    });
                }
            }
        }
        "snc-design-bound" => {
            let eps: Vec<f64> = req_list(formula, "--epsilon", &args.epsilon)?;
            let name = args.design.as_ref().ok_or_else(|| {
                CliError::Usage(format!("--formula {formula} requires --design"))
            })?;
            let d = SncDesign::lookup(name).map_err(usage)?;
            for &e in &eps {
                let est = analysis::snc_design_bound(&d, e).map_err(usage)?;
                rows.push(ARow {
                    k: Some(d.k()),
                    d: Some(d.d()),
                    q: Some(d.q()),
                    epsilon: Some(e),
                    value: est.leading,
                    is_upper_bound: est.is_upper_bound,
                    ..na
                });
            }
        }
        "rank-prob" | "rank-prob-nz" => {
            let ss: Vec<u32> = req_list(formula, "--s", &args.s)?;
            let ms: Vec<u32> = req_list(formula, "--m", &args.m)?;
            let qs: Vec<u16> = req_list(formula, "--q", &args.q)?;
            for &s in &ss {
                for &m in &ms {
                    for &q in &qs {
                        let value = if formula == "rank-prob" {
                            analysis::rlnc_rank_prob(s, m, q)
                        } else {
                            analysis::rlnc_rank_prob_nz(s, m, q)
                        }
                        .map_err(usage)?;
                        rows.push(ARow {
                            q: Some(q),
                            s: Some(s),
                            m: Some(m as u64),
                            value,
                            ..na
                        });
                    }
                }
            }
        }
        "rlnc-all-success" => {
            let ns: Vec<u32> = req_list(formula, "--n", &args.n)?;
            let ms: Vec<u32> = req_list(formula, "--m", &args.m)?;
            let eps: Vec<f64> = req_list(formula, "--epsilon", &args.epsilon)?;
            let qs: Vec<u16> = req_list(formula, "--q", &args.q)?;
            for &n in &ns {
                for &m in &ms {
                    for &e in &eps {
                        for &q in &qs {
                            let value =
                                analysis::rlnc_all_success(n, m, e, q).map_err(usage)?;
                            rows.push(ARow {
                                q: Some(q),
                                m: Some(m as u64),
                                n: Some(n as u64),
                                epsilon: Some(e),
                                value,
                                ..na
                            });
                        }
                    }
                }
            }
        }
        "krep-all-success" => {
            let ns: Vec<u32> = req_list(formula, "--n", &args.n)?;
            let ms: Vec<u32> = req_list(formula, "--m", &args.m)?;
            let eps: Vec<f64> = req_list(formula, "--epsilon", &args.epsilon)?;
            let ks: Vec<u32> = req_list(formula, "--k", &args.k)?;
            for &n in &ns {
                for &m in &ms {
                    for &e in &eps {
                        for &k in &ks {
                            let value =
                                analysis::krep_all_success(n, m, e, k).map_err(usage)?;
                            rows.push(ARow {
                                k: Some(k),
                                m: Some(m as u64),
                                n: Some(n as u64),
                                epsilon: Some(e),
                                value,
                                ..na
                            });
                        }
                    }
                }
            }
        }
        "decode-delay" => {
            let scheme = args.scheme.as_ref().ok_or_else(|| {
                CliError::Usage(format!("--formula {formula} requires --scheme"))
            })?;
            let delay_scheme = match scheme.as_str() {
                "krep" => DelayScheme::Krep,
                "snc" => DelayScheme::Snc,
                "block-nc" => DelayScheme::BlockNc,
                other => {
                    return Err(CliError::Usage(format!(
                        "--scheme must be krep, snc, or block-nc (got \"{other}\")"
                    )))
                }
            };
            if !matches!(delay_scheme, DelayScheme::Snc) && args.d.is_some() {
                return Err(CliError::Usage(
                    "--d is only used with --scheme snc".into(),
                ));
            }
            let ks: Vec<u32> = req_list(formula, "--k", &args.k)?;
            let ms: Vec<u64> = req_list(formula, "--m", &args.m)?;
            let ds: Vec<u32> = if matches!(delay_scheme, DelayScheme::Snc) {
                req_list(formula, "--d", &args.d)?
            } else {
                vec![0]
            };
            for &k in &ks {
                for &d in &ds {
                    for &m in &ms {
                        let slots = analysis::decode_delay_slots(delay_scheme, k, d, m);
                        rows.push(ARow {
                            k: Some(k),
                            d: matches!(delay_scheme, DelayScheme::Snc).then_some(d),
                            m: Some(m),
                            value: slots as f64,
                            ..na
                        });
                    }
                }
            }
        }
        _ => unreachable!("formula validated above"),
    }

    let mut out = String::new();
    if args.gnuplot {
        out.push_str("# gnuplot: set datafile separator \",\"\n");
        out.push_str("# gnuplot: value vs epsilon -> using 8:9 (one header row)\n");
    }
    out.push_str(ANALYZE_HEADER);
    out.push('\n');
    for row in &rows {
        out.push_str(&row.render(formula));
    }
    write_output(args.out.as_deref(), &out)
}

// ----------------------------------------------------------------- channel

fn cmd_channel(args: ChannelArgs) -> CliResult<()> {
    let model = match (args.fbl, args.ra) {
        (true, false) => {
            for (flag, present) in [
                ("--lambda", args.lambda.is_some()),
                ("--preambles", args.preambles.is_some()),
            ] {
                if present {
                    return Err(CliError::Usage(format!(
                        "{flag} is a random-access parameter, not valid with --fbl"
                    )));
                }
            }
            let snr = match (args.snr_db, args.snr_linear) {
                (Some(db), None) => 10f64.powf(db / 10.0),
                (None, Some(lin)) => lin,
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage(
                        "--snr-db and --snr-linear are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(CliError::Usage(
                        "--fbl requires --snr-db or --snr-linear".into(),
                    ))
                }
            };
            let n = args
                .n
                .ok_or_else(|| CliError::Usage("--fbl requires --n".into()))?;
            let nbit = args
                .nbit
                .ok_or_else(|| CliError::Usage("--fbl requires --nbit".into()))?;
            ChannelModel::fbl_awgn(snr, n, nbit).map_err(usage)?
        }
        (false, true) => {
            for (flag, present) in [
                ("--snr-db", args.snr_db.is_some()),
                ("--snr-linear", args.snr_linear.is_some()),
                ("--n", args.n.is_some()),
                ("--nbit", args.nbit.is_some()),
            ] {
                if present {
                    return Err(CliError::Usage(format!(
                        "{flag} is a finite-blocklength parameter, not valid with --ra"
                    )));
                }
            }
            let lambda = args
                .lambda
                .ok_or_else(|| CliError::Usage("--ra requires --lambda".into()))?;
            let preambles = args
                .preambles
                .ok_or_else(|| CliError::Usage("--ra requires --preambles".into()))?;
            ChannelModel::random_access(lambda, preambles).map_err(usage)?
        }
        _ => {
            return Err(CliError::Usage(
                "select exactly one channel model: --fbl or --ra".into(),
            ))
        }
    };
    // Twelve significant digits.
    println!("{:.11e}", model.epsilon());
    Ok(())
}

// ----------------------------------------------------------------- designs

fn cmd_designs(args: DesignsArgs) -> CliResult<()> {
    let out = if let Some(name) = &args.name {
        design_view(&SncDesign::lookup(name).map_err(usage)?)
    } else if let Some(path) = &args.config {
        let v = read_config(path)?;
        match &v.sim.scheme {
            Scheme::Snc { design } => design_view(design),
            other => {
                return Err(CliError::Usage(format!(
                    "the config's scheme is \"{}\", not a sliding design",
                    other.label()
                )))
            }
        }
    } else {
        catalog_listing()
    };
    write_output(args.out.as_deref(), &out)
}

fn catalog_listing() -> String {
    let mut out = String::from("name,k,d,q,mu,diag_condition,leading_exponent\n");
    for d in design::catalog() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_field(d.name()),
            d.k(),
            d.d(),
            d.q(),
            d.compute_mu(),
            d.check_diag_condition(),
            opt(d.leading_exponent().ok())
        ));
    }
    out
}

fn toml_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// A single design as a paste-ready config fragment, followed by its
/// analysis summary and steady-state block expansion as comments. The
/// output is valid TOML: `designs --config` on a file containing it (plus
/// channel/session sections) reproduces the same design.
fn design_view(d: &SncDesign) -> String {
    let mut out = String::from("[scheme]\nkind = \"snc\"\n\n[scheme.custom]\n");
    out.push_str(&format!("name = \"{}\"\n", toml_escape(d.name())));
    out.push_str(&format!("k = {}\n", d.k()));
    out.push_str(&format!("d = {}\n", d.d()));
    out.push_str(&format!("q = {}\n", d.q()));
    let rows: Vec<String> = d
        .rows()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|c| c.0.to_string()).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    out.push_str(&format!("rows = [{}]\n\n", rows.join(", ")));

    out.push_str(&format!("# mu = {}\n", d.compute_mu()));
    out.push_str(&format!(
        "# diagonal condition = {}\n",
        d.check_diag_condition()
    ));
    match d.leading_exponent() {
        Ok(e) => out.push_str(&format!(
            "# leading exponent = {e} (residual error ~ 2^d * epsilon^{e})\n"
        )),
        Err(_) => out.push_str("# leading exponent = N/A (diagonal condition not met)\n"),
    }
    out.push_str("# block m in steady state:\n");
    let m0 = i64::from(d.d()) + 1;
    for (i, combo) in d.expand_block(m0 as u64).iter().enumerate() {
        out.push_str(&format!("#   slot {}: {}\n", i + 1, render_combo(combo, m0)));
    }
    out
}

/// "X[m-2] + X[m-1] + 3*X[m]" — terms oldest first, unit coefficients bare.
fn render_combo(combo: &SymbolicCombo, m0: i64) -> String {
    if combo.is_empty() {
        return "0".into();
    }
    combo
        .iter()
        .map(|(&j, &c)| {
            let var = if j == m0 {
                "X[m]".to_string()
            } else {
                format!("X[m-{}]", m0 - j)
            };
            if c.0 == 1 {
                var
            } else {
                format!("{}*{var}", c.0)
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}
