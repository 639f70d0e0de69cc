//! Packet-erasure channel models.
//!
//! Every model reduces to an i.i.d. erasure probability at construction
//! time: either given directly, derived from a finite-blocklength AWGN
//! decoding-error approximation, or derived from preamble collisions under
//! grant-free random access with Poisson arrivals.

use crate::codec::{CodedPacket, ReceivedPacket};
use crate::error::{Error, Result};
use rand::Rng;

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Dispersion of the AWGN channel at linear SNR `rho`, in bits²:
/// V = rho (2 + rho) / (1 + rho)² · (log₂ e)².
pub fn channel_dispersion(snr_linear: f64) -> f64 {
    let rho = snr_linear;
    let log2e = std::f64::consts::LOG2_E;
    rho * (2.0 + rho) / ((1.0 + rho) * (1.0 + rho)) * log2e * log2e
}

/// Packet error probability of an `n`-use AWGN transmission carrying
/// `n_bit` information bits, by the normal approximation:
/// ε = Q( sqrt(n/V) · (log₂(1+rho) − n_bit/n) ).
pub fn fbl_epsilon(snr_linear: f64, n: u32, n_bit: u32) -> Result<f64> {
    if !(snr_linear.is_finite() && snr_linear > 0.0) {
        return Err(Error::parameter(format!(
            "SNR must be positive and finite, got {snr_linear}"
        )));
    }
    if n < 1 {
        return Err(Error::parameter("blocklength must be at least 1"));
    }
    if n_bit < 1 {
        return Err(Error::parameter("payload must carry at least 1 bit"));
    }
    let v = channel_dispersion(snr_linear);
    let capacity = (1.0 + snr_linear).log2();
    let rate = n_bit as f64 / n as f64;
    Ok(qfunc((n as f64 / v).sqrt() * (capacity - rate)))
}

/// Preamble-collision probability for a tagged arrival under grant-free
/// random access: the number of simultaneous arrivals is Poisson(`lambda`)
/// conditioned on being at least one, each picks one of `preambles`
/// uniformly, and the tagged transmission is lost iff any other arrival
/// picked the same preamble. Closed form, arranged to avoid cancellation:
/// ε = (expm1(−λ)/L − expm1(−λ/L)) / ((−expm1(−λ)) (1 − 1/L)).
pub fn ra_epsilon_poisson(lambda: f64, preambles: u64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::parameter(format!(
            "arrival rate must be positive and finite, got {lambda}"
        )));
    }
    if preambles < 2 {
        return Err(Error::parameter("need at least 2 preambles"));
    }
    let l = preambles as f64;
    let num = libm::expm1(-lambda) / l - libm::expm1(-lambda / l);
    let den = -libm::expm1(-lambda) * (1.0 - 1.0 / l);
    Ok(num / den)
}

/// Preamble-collision probability for an arbitrary arrival-count
/// distribution. `pmf(m)` must return P(M = m) for the total number of
/// simultaneous arrivals, m ≥ 1, summing to 1. The sum is truncated once
/// the unaccounted probability mass drops below `tail_tol`; a pmf that is
/// negative, sums past 1, or fails to reach 1 − `tail_tol` within
/// 10 million terms is rejected.
pub fn ra_epsilon_general<F>(pmf: F, preambles: u64, tail_tol: f64) -> Result<f64>
where
    F: Fn(u64) -> f64,
{
    if preambles < 2 {
        return Err(Error::parameter("need at least 2 preambles"));
    }
    if !(tail_tol.is_finite() && tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::parameter(format!(
            "tail tolerance must be in (0, 1), got {tail_tol}"
        )));
    }
    const MAX_TERMS: u64 = 10_000_000;
    let survive = 1.0 - 1.0 / preambles as f64;
    let mut mass = 0.0;
    let mut eps = 0.0;
    let mut survive_pow = 1.0; // (1 − 1/L)^(m−1)
    for m in 1..=MAX_TERMS {
        let p = pmf(m);
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::parameter(format!(
                "pmf({m}) = {p} is not a probability"
            )));
        }
        mass += p;
        if mass > 1.0 + 1e-9 {
            return Err(Error::parameter(format!(
                "pmf mass exceeds 1 after {m} terms: {mass}"
            )));
        }
        eps += p * (1.0 - survive_pow);
        survive_pow *= survive;
        if 1.0 - mass < tail_tol {
            return Ok(eps);
        }
    }
    Err(Error::parameter(format!(
        "pmf mass reached only {mass} after {MAX_TERMS} terms"
    )))
}

/// How the erasure probability is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelKind {
    /// Erasure probability given directly.
    Fixed { epsilon: f64 },
    /// Finite-blocklength AWGN decoding error.
    FblAwgn { snr_linear: f64, n: u32, n_bit: u32 },
    /// Grant-free random-access preamble collision, Poisson arrivals.
    RandomAccess { lambda: f64, preambles: u64 },
}

/// An i.i.d. packet-erasure channel with its probability resolved once at
/// construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    kind: ChannelKind,
    epsilon: f64,
}

impl ChannelModel {
    pub fn fixed(epsilon: f64) -> Result<ChannelModel> {
        if !(epsilon.is_finite() && (0.0..=1.0).contains(&epsilon)) {
            return Err(Error::parameter(format!(
                "erasure probability must lie in [0, 1], got {epsilon}"
            )));
        }
        Ok(ChannelModel { kind: ChannelKind::Fixed { epsilon }, epsilon })
    }

    pub fn fbl_awgn(snr_linear: f64, n: u32, n_bit: u32) -> Result<ChannelModel> {
        let epsilon = fbl_epsilon(snr_linear, n, n_bit)?;
        Ok(ChannelModel {
            kind: ChannelKind::FblAwgn { snr_linear, n, n_bit },
            epsilon,
        })
    }

    pub fn random_access(lambda: f64, preambles: u64) -> Result<ChannelModel> {
        let epsilon = ra_epsilon_poisson(lambda, preambles)?;
        Ok(ChannelModel {
            kind: ChannelKind::RandomAccess { lambda, preambles },
            epsilon,
        })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Pass one packet through the channel, erasing it with probability ε.
    pub fn erase<R: Rng + ?Sized>(&self, rng: &mut R, packet: CodedPacket) -> ReceivedPacket {
        if rng.random::<f64>() < self.epsilon {
            ReceivedPacket::erased(packet.block, packet.slot)
        } else {
            ReceivedPacket::intact(packet)
        }
    }
}
