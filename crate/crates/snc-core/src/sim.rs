//! Deterministic parallel Monte Carlo engine.
//!
//! Every session (one stream of `packets` data packets, or one block batch)
//! is seeded from the master seed and its session index alone, with separate
//! counter-mode streams for payload, channel, and coding randomness. Results
//! are therefore byte-identical for any thread count, and any session can be
//! replayed in isolation.

use crate::analysis;
use crate::channel::ChannelModel;
use crate::codec::{
    krep_decode, krep_encode, rlnc_decode, rlnc_encode, snc_encode_block, DecoderMode,
    ReceivedPacket, ReceiverState, SessionPayloads, DEFAULT_PAYLOAD_LEN,
};
use crate::design::SncDesign;
use crate::error::{Error, Result};
use crate::gf::{Field, Symbol};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

const STREAMS_PER_SESSION: u64 = 4;
const PURPOSE_PAYLOAD: u64 = 0;
const PURPOSE_CHANNEL: u64 = 1;
const PURPOSE_CODING: u64 = 2;

/// One independent random stream for a (session, purpose) pair.
fn session_rng(master_seed: u64, session_index: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(session_index * STREAMS_PER_SESSION + purpose);
    rng
}

/// Transmission scheme to simulate.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    /// K identical copies of each packet.
    Krep { k: u32 },
    /// A sliding-window streaming design.
    Snc { design: SncDesign },
    /// One random-linear batch per session: k·M coded packets over GF(q)
    /// for M data packets.
    BlockNc { k: u32, q: u16 },
}

impl Scheme {
    /// Short identifier used in result tables.
    pub fn label(&self) -> String {
        match self {
            Scheme::Krep { .. } => "krep".into(),
            Scheme::Snc { design } => format!("snc:{}", design.name()),
            Scheme::BlockNc { .. } => "block-nc".into(),
        }
    }

    /// (k, d, q) as far as the scheme defines them.
    pub fn params(&self) -> (Option<u32>, Option<u32>, Option<u16>) {
        match self {
            Scheme::Krep { k } => (Some(*k), None, None),
            Scheme::Snc { design } => (Some(design.k()), Some(design.d()), Some(design.q())),
            Scheme::BlockNc { k, q } => (Some(*k), None, Some(*q)),
        }
    }

    fn build_field(&self) -> Result<Field> {
        match self {
            Scheme::Krep { .. } => Field::new(1),
            Scheme::Snc { design } => Field::from_order(design.q()),
            Scheme::BlockNc { q, .. } => Field::from_order(*q),
        }
    }
}

/// Everything a simulation run needs: scheme, channel, session shape, seed.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub channel: ChannelModel,
    /// Data packets per session (M).
    pub packets: u64,
    pub sessions: u64,
    pub payload_len: usize,
    pub seed: u64,
    /// Decoder for the sliding scheme; other schemes ignore it.
    pub decoder: DecoderMode,
}

impl SimConfig {
    pub fn new(scheme: Scheme, channel: ChannelModel, packets: u64, sessions: u64) -> SimConfig {
        SimConfig {
            scheme,
            channel,
            packets,
            sessions,
            payload_len: DEFAULT_PAYLOAD_LEN,
            seed: 0,
            decoder: DecoderMode::FullGe,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.packets < 1 {
            return Err(Error::parameter("need at least one packet per session"));
        }
        if self.sessions < 1 {
            return Err(Error::parameter("need at least one session"));
        }
        if self.payload_len < 1 {
            return Err(Error::parameter("payload length must be at least 1"));
        }
        match &self.scheme {
            Scheme::Krep { k } | Scheme::BlockNc { k, .. } if *k < 1 => {
                Err(Error::parameter("need at least one transmission per packet"))
            }
            Scheme::BlockNc { .. } if self.packets > u32::MAX as u64 => {
                Err(Error::parameter("block batches support at most 2^32 packets"))
            }
            _ => Ok(()),
        }
    }
}

/// Frequentist estimate of a probability from Bernoulli trials, with a 95%
/// interval: normal approximation in the interior, exact one-sided
/// Clopper-Pearson bounds when no (or only) events were seen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub events: u64,
    pub trials: u64,
}

fn binomial_estimate(events: u64, trials: u64) -> Estimate {
    debug_assert!(events <= trials && trials > 0);
    let n = trials as f64;
    let mean = events as f64 / n;
    let stderr = (mean * (1.0 - mean) / n).sqrt();
    let (ci_low, ci_high) = if events == 0 {
        (0.0, -libm::expm1(0.05f64.ln() / n))
    } else if events == trials {
        (0.05f64.powf(1.0 / n), 1.0)
    } else {
        (
            (mean - 1.96 * stderr).max(0.0),
            (mean + 1.96 * stderr).min(1.0),
        )
    };
    Estimate { mean, stderr, ci_low, ci_high, events, trials }
}

/// Outcome of one simulated session.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionResult {
    /// Deadline failures (equivalently: retransmissions needed).
    pub failures: u64,
    pub deadlines: u64,
    /// Per-deadline failure flags, index t−1 for deadline t.
    pub failed: Vec<bool>,
}

/// Simulate a single session and report every deadline outcome.
pub fn run_session(cfg: &SimConfig, session_index: u64) -> Result<SessionResult> {
    cfg.validate()?;
    let field = cfg.scheme.build_field()?;
    let flags = run_session_inner(cfg, &field, session_index, true)?
        .1
        .expect("trace requested");
    let failures = flags.iter().filter(|&&f| f).count() as u64;
    Ok(SessionResult { failures, deadlines: cfg.packets, failed: flags })
}

/// Core per-session run: returns the failure count and, when requested,
/// the per-deadline flags.
fn run_session_inner(
    cfg: &SimConfig,
    field: &Field,
    session_index: u64,
    record: bool,
) -> Result<(u64, Option<Vec<bool>>)> {
    let mut payload_rng = session_rng(cfg.seed, session_index, PURPOSE_PAYLOAD);
    let mut channel_rng = session_rng(cfg.seed, session_index, PURPOSE_CHANNEL);
    let m = cfg.packets;
    let data: Vec<Vec<Symbol>> = (0..m)
        .map(|_| (0..cfg.payload_len).map(|_| field.sample(&mut payload_rng)).collect())
        .collect();

    let mut failures = 0u64;
    let mut flags = if record { Some(Vec::with_capacity(m as usize)) } else { None };
    let mut note = |failed: bool, failures: &mut u64| {
        if failed {
            *failures += 1;
        }
        if let Some(f) = flags.as_mut() {
            f.push(failed);
        }
    };

    match &cfg.scheme {
        Scheme::Krep { k } => {
            for i in 1..=m {
                let sent = krep_encode(*k, i, &data[i as usize - 1])?;
                let received: Vec<ReceivedPacket> = sent
                    .into_iter()
                    .map(|p| cfg.channel.erase(&mut channel_rng, p))
                    .collect();
                let out = krep_decode(&received);
                debug_assert!(
                    out.payload.as_deref().map_or(true, |p| p == data[i as usize - 1]),
                    "surviving copy diverged from the source"
                );
                note(!out.is_decoded(), &mut failures);
            }
        }
        Scheme::Snc { design } => {
            let hist = SessionPayloads::new(&data, cfg.payload_len)?;
            let mut rx =
                ReceiverState::new(field, design, cfg.decoder, cfg.payload_len, Some(m))?;
            let d = design.d() as u64;
            for b in 1..=m + d {
                let sent = snc_encode_block(design, field, b, &hist)?;
                let received: Vec<ReceivedPacket> = sent
                    .into_iter()
                    .map(|p| cfg.channel.erase(&mut channel_rng, p))
                    .collect();
                rx.ingest(received)?;
                if b > d {
                    let t = b - d;
                    let out = rx.decode_deadline(t, &data[t as usize - 1])?;
                    note(!out.is_decoded(), &mut failures);
                }
            }
        }
        Scheme::BlockNc { k, q: _ } => {
            let mut coding_rng = session_rng(cfg.seed, session_index, PURPOSE_CODING);
            let n = *k as u64 * m;
            let sent = rlnc_encode(&data, n, field, &mut coding_rng, false)?;
            let received: Vec<ReceivedPacket> = sent
                .into_iter()
                .map(|p| cfg.channel.erase(&mut channel_rng, p))
                .collect();
            let out = rlnc_decode(&received, m as u32, field)?;
            for (i, payload) in out.payloads.iter().enumerate() {
                debug_assert!(
                    payload.as_deref().map_or(true, |p| p == data[i]),
                    "recovered payload diverged from the source"
                );
                note(payload.is_none(), &mut failures);
            }
        }
    }
    Ok((failures, flags))
}

/// Pooled per-deadline failure probability over all sessions.
pub fn estimate_error_rate(cfg: &SimConfig) -> Result<Estimate> {
    cfg.validate()?;
    let field = cfg.scheme.build_field()?;
    let events = (0..cfg.sessions)
        .into_par_iter()
        .map(|i| run_session_inner(cfg, &field, i, false).map(|(f, _)| f))
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    let trials = cfg
        .sessions
        .checked_mul(cfg.packets)
        .ok_or_else(|| Error::parameter("sessions * packets overflows"))?;
    Ok(binomial_estimate(events, trials))
}

/// Probability that a session needs at least one retransmission (any
/// deadline failure at all).
pub fn estimate_session_failure(cfg: &SimConfig) -> Result<Estimate> {
    cfg.validate()?;
    let field = cfg.scheme.build_field()?;
    let events = (0..cfg.sessions)
        .into_par_iter()
        .map(|i| run_session_inner(cfg, &field, i, false).map(|(f, _)| u64::from(f > 0)))
        .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
    Ok(binomial_estimate(events, cfg.sessions))
}

/// Distribution of per-session retransmission counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetxHistogram {
    /// count of failed deadlines → number of sessions observing it.
    pub counts: BTreeMap<u64, u64>,
    pub sessions: u64,
}

/// Histogram of the number of failed deadlines per session.
pub fn retx_histogram(cfg: &SimConfig) -> Result<RetxHistogram> {
    cfg.validate()?;
    let field = cfg.scheme.build_field()?;
    let counts = (0..cfg.sessions)
        .into_par_iter()
        .map(|i| run_session_inner(cfg, &field, i, false).map(|(f, _)| f))
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<u64, u64>, r| {
            *acc.entry(r?).or_insert(0) += 1;
            Ok(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    Ok(RetxHistogram { counts, sessions: cfg.sessions })
}

/// Failure probability of each deadline position t = 1..=M separately,
/// estimated across sessions. Exposes startup/steady-state behavior.
pub fn error_rate_trace(cfg: &SimConfig) -> Result<Vec<Estimate>> {
    cfg.validate()?;
    let field = cfg.scheme.build_field()?;
    let m = cfg.packets as usize;
    let sums = (0..cfg.sessions)
        .into_par_iter()
        .map(|i| {
            run_session_inner(cfg, &field, i, true).map(|(_, flags)| {
                flags.expect("trace requested")
            })
        })
        .try_fold(
            || vec![0u64; m],
            |mut acc: Vec<u64>, r: Result<Vec<bool>>| -> Result<Vec<u64>> {
                for (slot, failed) in acc.iter_mut().zip(r?) {
                    *slot += u64::from(failed);
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(sums
        .into_iter()
        .map(|events| binomial_estimate(events, cfg.sessions))
        .collect())
}

/// The grid a sweep walks over.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepAxis {
    /// Fixed-ε channels, one per value.
    Epsilon(Vec<f64>),
    /// Per-packet transmission budget; the sliding scheme is regenerated
    /// as the identity design simple:K at each point.
    K(Vec<u32>),
}

/// One sweep grid point for one scheme.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub scheme: String,
    pub k: Option<u32>,
    pub d: Option<u32>,
    pub q: Option<u16>,
    pub epsilon: f64,
    pub estimate: Estimate,
    pub analytic_exact: Option<f64>,
    pub analytic_leading: Option<f64>,
    pub analytic_is_bound: Option<bool>,
}

fn is_identity_design(design: &SncDesign) -> bool {
    design.d() == design.k() - 1
        && design.rows().iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, c)| if i == j { c.0 == 1 } else { c.is_zero() })
        })
}

fn analytic_columns(
    scheme: &Scheme,
    epsilon: f64,
) -> Result<(Option<f64>, Option<f64>, Option<bool>)> {
    Ok(match scheme {
        Scheme::Krep { k } => {
            let e = analysis::krep_error(epsilon, *k)?;
            (Some(e), Some(e), Some(false))
        }
        Scheme::Snc { design } => {
            if is_identity_design(design) {
                let e = analysis::snc_simple_error(epsilon, design.k())?;
                (e.exact, Some(e.leading), Some(e.is_upper_bound))
            } else {
                match analysis::snc_design_bound(design, epsilon) {
                    Ok(e) => (None, Some(e.leading), Some(e.is_upper_bound)),
                    Err(Error::NotApplicable(_)) => (None, None, None),
                    Err(other) => return Err(other),
                }
            }
        }
        Scheme::BlockNc { .. } => (None, None, None),
    })
}

/// Run `estimate_error_rate` over a grid × scheme matrix. Every run reuses
/// the base master seed, so schemes at the same grid point face common
/// random numbers.
pub fn sweep(base: &SimConfig, axis: &SweepAxis, schemes: &[Scheme]) -> Result<Vec<SweepRow>> {
    let grid_len = match axis {
        SweepAxis::Epsilon(g) => g.len(),
        SweepAxis::K(g) => g.len(),
    };
    if grid_len == 0 {
        return Err(Error::parameter("sweep grid is empty"));
    }
    let mut rows = Vec::with_capacity(grid_len * schemes.len());
    for point in 0..grid_len {
        for scheme in schemes {
            let (scheme, channel) = match axis {
                SweepAxis::Epsilon(g) => (scheme.clone(), ChannelModel::fixed(g[point])?),
                SweepAxis::K(g) => {
                    let k = g[point];
                    let regenerated = match scheme {
                        Scheme::Krep { .. } => Scheme::Krep { k },
                        Scheme::Snc { .. } => Scheme::Snc {
                            design: SncDesign::builtin(&format!("simple:{k}"))?,
                        },
                        Scheme::BlockNc { q, .. } => Scheme::BlockNc { k, q: *q },
                    };
                    (regenerated, base.channel)
                }
            };
            let cfg = SimConfig {
                scheme: scheme.clone(),
                channel,
                ..base.clone()
            };
            let estimate = estimate_error_rate(&cfg)?;
            let (exact, leading, bound) = analytic_columns(&scheme, channel.epsilon())?;
            let (k, d, q) = scheme.params();
            rows.push(SweepRow {
                scheme: scheme.label(),
                k,
                d,
                q,
                epsilon: channel.epsilon(),
                estimate,
                analytic_exact: exact,
                analytic_leading: leading,
                analytic_is_bound: bound,
            });
        }
    }
    Ok(rows)
}
