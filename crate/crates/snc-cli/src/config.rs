//! TOML experiment configuration for the `simulate` command.
//!
//! A config has four mandatory sections — `[scheme]`, `[channel]`,
//! `[session]`, `[output]` (the last with defaults) — plus an optional
//! `[sweep]`. Unknown keys anywhere are hard errors, and every constraint
//! violation is reported with the dotted path of the offending field.

use serde::Deserialize;
use snc_core::channel::ChannelModel;
use snc_core::codec::{DecoderMode, DEFAULT_PAYLOAD_LEN};
use snc_core::design::SncDesign;
use snc_core::gf::{Field, Symbol};
use snc_core::sim::{Scheme, SimConfig, SweepAxis};

/// What `simulate` should compute and emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    /// Pooled per-deadline failure rate (one CSV row, or one per sweep cell).
    ErrorRate,
    /// Distribution of per-session retransmission counts.
    RetxHistogram,
    /// Per-deadline failure rate at each stream position.
    ErrorTrace,
}

/// A fully validated experiment: simulator input plus output selection.
#[derive(Clone, Debug)]
pub struct Validated {
    pub sim: SimConfig,
    pub output: OutputKind,
    pub sweep: Option<SweepAxis>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    scheme: SchemeSection,
    channel: ChannelSection,
    session: SessionSection,
    #[serde(default)]
    output: OutputSection,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeSection {
    /// "krep" | "snc" | "block-nc"
    kind: String,
    k: Option<u32>,
    q: Option<u16>,
    /// Catalog design name for kind = "snc".
    design: Option<String>,
    /// Inline design for kind = "snc", exclusive with `design`.
    custom: Option<CustomDesign>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomDesign {
    name: Option<String>,
    k: u32,
    d: u32,
    q: u16,
    /// (k-1) x d coefficient matrix; row r describes slot r+2, column c
    /// scales the packet c blocks old.
    rows: Vec<Vec<u16>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    /// "fixed" | "fbl-awgn" | "random-access"
    kind: String,
    epsilon: Option<f64>,
    snr_db: Option<f64>,
    snr_linear: Option<f64>,
    n: Option<u32>,
    nbit: Option<u32>,
    lambda: Option<f64>,
    preambles: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionSection {
    packets: u64,
    sessions: u64,
    payload_len: Option<usize>,
    seed: Option<u64>,
    /// "full-ge" (default) | "pairwise"
    decoder: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    /// "error-rate" (default) | "retx-histogram" | "error-trace"
    kind: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    epsilon: Option<Vec<f64>>,
    k: Option<Vec<u32>>,
}

/// Parse and validate a TOML experiment configuration.
pub fn parse(raw: &str) -> Result<Validated, String> {
    let cfg: RunConfig = toml::from_str(raw).map_err(|e| format!("config parse error: {e}"))?;
    validate(cfg)
}

/// Error if any of the listed fields is present in a context that forbids it.
fn forbid(context: &str, fields: &[(&str, bool)]) -> Result<(), String> {
    for (name, present) in fields {
        if *present {
            return Err(format!("{name} is not a parameter of {context}"));
        }
    }
    Ok(())
}

fn build_scheme(s: &SchemeSection) -> Result<Scheme, String> {
    match s.kind.as_str() {
        "krep" => {
            forbid(
                "scheme.kind = \"krep\"",
                &[
                    ("scheme.q", s.q.is_some()),
                    ("scheme.design", s.design.is_some()),
                    ("scheme.custom", s.custom.is_some()),
                ],
            )?;
            let k = s.k.ok_or("scheme.k is required for kind = \"krep\"")?;
            if k < 1 {
                return Err("scheme.k must be at least 1".into());
            }
            Ok(Scheme::Krep { k })
        }
        "snc" => {
            forbid(
                "scheme.kind = \"snc\" (the design carries k and q)",
                &[("scheme.k", s.k.is_some()), ("scheme.q", s.q.is_some())],
            )?;
            let design = match (&s.design, &s.custom) {
                (Some(name), None) => SncDesign::lookup(name)
                    .map_err(|e| format!("scheme.design: {e}"))?,
                (None, Some(custom)) => build_custom(custom)?,
                (Some(_), Some(_)) => {
                    return Err(
                        "scheme.design and scheme.custom are mutually exclusive".into()
                    )
                }
                (None, None) => {
                    return Err(
                        "kind = \"snc\" requires scheme.design or scheme.custom".into()
                    )
                }
            };
            Ok(Scheme::Snc { design })
        }
        "block-nc" => {
            forbid(
                "scheme.kind = \"block-nc\"",
                &[
                    ("scheme.design", s.design.is_some()),
                    ("scheme.custom", s.custom.is_some()),
                ],
            )?;
            let k = s.k.ok_or("scheme.k is required for kind = \"block-nc\"")?;
            if k < 1 {
                return Err("scheme.k must be at least 1".into());
            }
            let q = s.q.ok_or("scheme.q is required for kind = \"block-nc\"")?;
            Field::from_order(q).map_err(|e| format!("scheme.q: {e}"))?;
            Ok(Scheme::BlockNc { k, q })
        }
        other => Err(format!(
            "scheme.kind must be \"krep\", \"snc\", or \"block-nc\" (got \"{other}\")"
        )),
    }
}

fn build_custom(c: &CustomDesign) -> Result<SncDesign, String> {
    if c.k < 2 {
        return Err(format!(
            "scheme.custom.k must be at least 2 (got {}): a block needs the fresh \
             packet plus at least one coded slot",
            c.k
        ));
    }
    if c.d < 1 {
        return Err(format!("scheme.custom.d must be at least 1 (got {})", c.d));
    }
    Field::from_order(c.q).map_err(|e| format!("scheme.custom.q: {e}"))?;
    let mut rows = Vec::with_capacity(c.rows.len());
    for (r, row) in c.rows.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (col, &v) in row.iter().enumerate() {
            if v >= c.q {
                return Err(format!(
                    "scheme.custom.rows[{r}][{col}] = {v} is not an element of GF({})",
                    c.q
                ));
            }
            out.push(Symbol(v as u8));
        }
        rows.push(out);
    }
    let name = c.name.clone().unwrap_or_else(|| "custom".into());
    SncDesign::new(name, c.k, c.d, c.q, rows).map_err(|e| format!("scheme.custom: {e}"))
}

fn build_channel(c: &ChannelSection) -> Result<ChannelModel, String> {
    match c.kind.as_str() {
        "fixed" => {
            forbid(
                "channel.kind = \"fixed\"",
                &[
                    ("channel.snr_db", c.snr_db.is_some()),
                    ("channel.snr_linear", c.snr_linear.is_some()),
                    ("channel.n", c.n.is_some()),
                    ("channel.nbit", c.nbit.is_some()),
                    ("channel.lambda", c.lambda.is_some()),
                    ("channel.preambles", c.preambles.is_some()),
                ],
            )?;
            let eps = c
                .epsilon
                .ok_or("channel.epsilon is required for kind = \"fixed\"")?;
            ChannelModel::fixed(eps).map_err(|e| format!("channel.epsilon: {e}"))
        }
        "fbl-awgn" => {
            forbid(
                "channel.kind = \"fbl-awgn\"",
                &[
                    ("channel.epsilon", c.epsilon.is_some()),
                    ("channel.lambda", c.lambda.is_some()),
                    ("channel.preambles", c.preambles.is_some()),
                ],
            )?;
            let snr = match (c.snr_db, c.snr_linear) {
                (Some(db), None) => 10f64.powf(db / 10.0),
                (None, Some(lin)) => lin,
                (Some(_), Some(_)) => {
                    return Err(
                        "channel.snr_db and channel.snr_linear are mutually exclusive".into()
                    )
                }
                (None, None) => {
                    return Err(
                        "kind = \"fbl-awgn\" requires channel.snr_db or channel.snr_linear"
                            .into(),
                    )
                }
            };
            let n = c.n.ok_or("channel.n is required for kind = \"fbl-awgn\"")?;
            let nbit = c
                .nbit
                .ok_or("channel.nbit is required for kind = \"fbl-awgn\"")?;
            ChannelModel::fbl_awgn(snr, n, nbit).map_err(|e| format!("channel: {e}"))
        }
        "random-access" => {
            forbid(
                "channel.kind = \"random-access\"",
                &[
                    ("channel.epsilon", c.epsilon.is_some()),
                    ("channel.snr_db", c.snr_db.is_some()),
                    ("channel.snr_linear", c.snr_linear.is_some()),
                    ("channel.n", c.n.is_some()),
                    ("channel.nbit", c.nbit.is_some()),
                ],
            )?;
            let lambda = c
                .lambda
                .ok_or("channel.lambda is required for kind = \"random-access\"")?;
            let preambles = c
                .preambles
                .ok_or("channel.preambles is required for kind = \"random-access\"")?;
            ChannelModel::random_access(lambda, preambles).map_err(|e| format!("channel: {e}"))
        }
        other => Err(format!(
            "channel.kind must be \"fixed\", \"fbl-awgn\", or \"random-access\" (got \"{other}\")"
        )),
    }
}

fn build_sweep(sweep: &SweepSection, scheme: &Scheme) -> Result<SweepAxis, String> {
    match (&sweep.epsilon, &sweep.k) {
        (Some(grid), None) => {
            if grid.is_empty() {
                return Err("sweep.epsilon must not be empty".into());
            }
            for (i, &e) in grid.iter().enumerate() {
                if !(0.0..=1.0).contains(&e) {
                    return Err(format!("sweep.epsilon[{i}] = {e} is not a probability"));
                }
            }
            Ok(SweepAxis::Epsilon(grid.clone()))
        }
        (None, Some(grid)) => {
            if grid.is_empty() {
                return Err("sweep.k must not be empty".into());
            }
            let floor = if matches!(scheme, Scheme::Snc { .. }) { 2 } else { 1 };
            for (i, &k) in grid.iter().enumerate() {
                if k < floor {
                    return Err(format!(
                        "sweep.k[{i}] = {k}: the {} scheme needs at least {floor} \
                         transmissions per packet",
                        if floor == 2 { "sliding" } else { "configured" }
                    ));
                }
            }
            Ok(SweepAxis::K(grid.clone()))
        }
        (Some(_), Some(_)) => Err("sweep.epsilon and sweep.k are mutually exclusive".into()),
        (None, None) => Err("a [sweep] section needs sweep.epsilon or sweep.k".into()),
    }
}

fn validate(cfg: RunConfig) -> Result<Validated, String> {
    let scheme = build_scheme(&cfg.scheme)?;
    let channel = build_channel(&cfg.channel)?;

    if cfg.session.packets < 1 {
        return Err("session.packets must be at least 1".into());
    }
    if cfg.session.sessions < 1 {
        return Err("session.sessions must be at least 1".into());
    }
    let payload_len = cfg.session.payload_len.unwrap_or(DEFAULT_PAYLOAD_LEN);
    if payload_len < 1 {
        return Err("session.payload_len must be at least 1".into());
    }
    let decoder = match cfg.session.decoder.as_deref() {
        None | Some("full-ge") => DecoderMode::FullGe,
        Some("pairwise") => DecoderMode::Pairwise,
        Some(other) => {
            return Err(format!(
                "session.decoder must be \"full-ge\" or \"pairwise\" (got \"{other}\")"
            ))
        }
    };

    let output = match cfg.output.kind.as_deref() {
        None | Some("error-rate") => OutputKind::ErrorRate,
        Some("retx-histogram") => OutputKind::RetxHistogram,
        Some("error-trace") => OutputKind::ErrorTrace,
        Some(other) => {
            return Err(format!(
                "output.kind must be \"error-rate\", \"retx-histogram\", or \
                 \"error-trace\" (got \"{other}\")"
            ))
        }
    };

    let sweep = match &cfg.sweep {
        Some(section) => {
            if output != OutputKind::ErrorRate {
                return Err("a [sweep] section requires output.kind = \"error-rate\"".into());
            }
            Some(build_sweep(section, &scheme)?)
        }
        None => None,
    };

    let mut sim = SimConfig::new(scheme, channel, cfg.session.packets, cfg.session.sessions);
    sim.payload_len = payload_len;
    sim.seed = cfg.session.seed.unwrap_or(0);
    sim.decoder = decoder;
    Ok(Validated { sim, output, sweep })
}
