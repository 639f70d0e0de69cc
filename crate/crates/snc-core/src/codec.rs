//! Encoders and deadline decoders.
//!
//! The sliding-code receiver works in two stages: `ingest` files the packets
//! of each arriving block into a D-block window and peels newly determined
//! packets; `decode_deadline` must then produce X_t once block t+D is in.
//! Two decoder modes are provided. `FullGe` runs Gaussian elimination over
//! the whole window, which is the strongest linear decoder. `Pairwise` only
//! uses the two closed-form decode routes (a packet reducing to X_t alone,
//! or a two-term packet {X_t, X_u} closed by a received fresh copy of X_u),
//! so its failure rate matches the closed-form expressions exactly; it
//! exists to validate them.
//!
//! On a deadline miss the true payload is installed anyway ("genie"
//! correction): one miss equals one out-of-band retransmission, and later
//! deadlines see the same fully-delivered prefix the formulas assume.

use crate::design::{SncDesign, SymbolicCombo};
use crate::error::{Error, Result};
use crate::gf::{Field, Symbol};
use rand::Rng;
use std::collections::BTreeMap;

/// Default payload length in symbols; correctness is length-invariant.
pub const DEFAULT_PAYLOAD_LEN: usize = 8;

/// One transmitted packet: block/slot position, symbolic combination, and
/// the combined payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedPacket {
    pub block: u64,
    pub slot: u32,
    pub combo: SymbolicCombo,
    pub payload: Vec<Symbol>,
}

/// A packet after the channel: either intact or erased wholesale (position
/// survives for bookkeeping; combo and payload do not).
#[derive(Clone, Debug)]
pub struct ReceivedPacket {
    pub block: u64,
    pub slot: u32,
    pub body: Option<CodedPacket>,
}

impl ReceivedPacket {
    pub fn intact(packet: CodedPacket) -> ReceivedPacket {
        ReceivedPacket {
            block: packet.block,
            slot: packet.slot,
            body: Some(packet),
        }
    }

    pub fn erased(block: u64, slot: u32) -> ReceivedPacket {
        ReceivedPacket { block, slot, body: None }
    }

    pub fn is_erased(&self) -> bool {
        self.body.is_none()
    }
}

/// Source of true data payloads for the encoder.
///
/// `payload(j)` returns the payload of X_j, `None` if the history cannot
/// resolve the index. Virtual packets (j <= 0, or past the session end)
/// must resolve to all-zero payloads.
pub trait PayloadHistory {
    fn payload_len(&self) -> usize;
    fn payload(&self, index: i64) -> Option<&[Symbol]>;
}

/// History over a full session's payloads; indices outside [1, M] resolve
/// to the zero payload (virtual packets), so flush blocks encode cleanly.
pub struct SessionPayloads<'a> {
    data: &'a [Vec<Symbol>],
    zeros: Vec<Symbol>,
}

impl<'a> SessionPayloads<'a> {
    pub fn new(data: &'a [Vec<Symbol>], payload_len: usize) -> Result<SessionPayloads<'a>> {
        if payload_len == 0 {
            return Err(Error::parameter("payload length must be at least 1"));
        }
        if let Some(bad) = data.iter().position(|p| p.len() != payload_len) {
            return Err(Error::parameter(format!(
                "payload {} has length {}, expected {payload_len}",
                bad + 1,
                data[bad].len()
            )));
        }
        Ok(SessionPayloads { data, zeros: vec![Symbol::ZERO; payload_len] })
    }
}

impl PayloadHistory for SessionPayloads<'_> {
    fn payload_len(&self) -> usize {
        self.zeros.len()
    }

    fn payload(&self, index: i64) -> Option<&[Symbol]> {
        if index >= 1 && index as usize <= self.data.len() {
            Some(&self.data[index as usize - 1])
        } else {
            Some(&self.zeros)
        }
    }
}

/// Encode the K packets of block `m` for a sliding-code design. The emitted
/// combos are exactly `design.expand_block(m)`.
pub fn snc_encode_block(
    design: &SncDesign,
    field: &Field,
    m: u64,
    history: &dyn PayloadHistory,
) -> Result<Vec<CodedPacket>> {
    if field.order() != design.q() {
        return Err(Error::parameter(format!(
            "field order {} does not match design '{}' over GF({})",
            field.order(),
            design.name(),
            design.q()
        )));
    }
    let len = history.payload_len();
    let combos = design.expand_block(m);
    let mut out = Vec::with_capacity(combos.len());
    for (i, combo) in combos.into_iter().enumerate() {
        let mut payload = vec![Symbol::ZERO; len];
        for (&j, &c) in &combo {
            let x = history.payload(j).ok_or_else(|| {
                Error::contract(format!("history cannot resolve data packet {j}"))
            })?;
            field.axpy(c, x, &mut payload)?;
        }
        out.push(CodedPacket { block: m, slot: i as u32 + 1, combo, payload });
    }
    Ok(out)
}

/// Decode status for one deadline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Decoded,
    Failed,
}

/// Outcome of one deadline; `payload` is present exactly when decoded, and
/// `used_genie` marks a miss that was patched with the true payload.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub index: u64,
    pub status: DecodeStatus,
    pub payload: Option<Vec<Symbol>>,
    pub used_genie: bool,
}

impl DecodeOutcome {
    pub fn is_decoded(&self) -> bool {
        self.status == DecodeStatus::Decoded
    }
}

/// Decoder strength for the sliding-code receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderMode {
    /// Gaussian elimination over everything in the window.
    FullGe,
    /// Only the two closed-form decode routes; validates the formulas.
    Pairwise,
}

struct WinPacket {
    block: u64,
    combo: Vec<(i64, Symbol)>,
    payload: Vec<Symbol>,
}

/// Sliding-window receiver for one session.
pub struct ReceiverState<'a> {
    field: &'a Field,
    design: &'a SncDesign,
    mode: DecoderMode,
    payload_len: usize,
    /// Known session length M; indices past it are virtual zeros.
    session_len: Option<u64>,
    /// Delivered payloads (decoded or genie-installed), pruned to the D
    /// indices the window can still reference.
    fd: BTreeMap<i64, Vec<Symbol>>,
    /// Non-erased packets of the last D+1 blocks.
    window: Vec<WinPacket>,
    /// Received slot-1 payloads by index, same horizon as the window.
    fresh: BTreeMap<i64, Vec<Symbol>>,
    /// Packets determined ahead of their deadline by peeling or elimination
    /// by-products.
    recovered: BTreeMap<i64, Vec<Symbol>>,
    zeros: Vec<Symbol>,
    newest: Option<u64>,
    next_deadline: u64,
}

impl<'a> ReceiverState<'a> {
    pub fn new(
        field: &'a Field,
        design: &'a SncDesign,
        mode: DecoderMode,
        payload_len: usize,
        session_len: Option<u64>,
    ) -> Result<ReceiverState<'a>> {
        if field.order() != design.q() {
            return Err(Error::parameter(format!(
                "field order {} does not match design '{}' over GF({})",
                field.order(),
                design.name(),
                design.q()
            )));
        }
        if payload_len == 0 {
            return Err(Error::parameter("payload length must be at least 1"));
        }
        if session_len == Some(0) {
            return Err(Error::parameter("session length must be at least 1"));
        }
        Ok(ReceiverState {
            field,
            design,
            mode,
            payload_len,
            session_len,
            fd: BTreeMap::new(),
            window: Vec::new(),
            fresh: BTreeMap::new(),
            recovered: BTreeMap::new(),
            zeros: vec![Symbol::ZERO; payload_len],
            newest: None,
            next_deadline: 1,
        })
    }

    pub fn next_deadline(&self) -> u64 {
        self.next_deadline
    }

    /// Packets currently buffered; bounded by K(D+1).
    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// True if X_j is already determined ahead of its deadline.
    pub fn has_recovered(&self, j: u64) -> bool {
        self.recovered.contains_key(&(j as i64))
    }

    fn is_virtual(&self, j: i64) -> bool {
        j <= 0 || self.session_len.is_some_and(|m| j > m as i64)
    }

    /// Payload of X_j if determined: delivered, recovered early, or virtual.
    fn known(&self, j: i64) -> Option<&[Symbol]> {
        if self.is_virtual(j) {
            return Some(&self.zeros);
        }
        if let Some(p) = self.fd.get(&j) {
            return Some(p);
        }
        self.recovered.get(&j).map(|p| p.as_slice())
    }

    /// File one block's worth of received packets. Blocks must arrive in
    /// strictly increasing order; erased entries only advance the horizon.
    pub fn ingest(&mut self, packets: Vec<ReceivedPacket>) -> Result<()> {
        let Some(block) = packets.first().map(|p| p.block) else {
            return Ok(());
        };
        if packets.iter().any(|p| p.block != block) {
            return Err(Error::contract(
                "ingest expects the packets of exactly one block",
            ));
        }
        if let Some(newest) = self.newest {
            if block <= newest {
                return Err(Error::contract(format!(
                    "block {block} ingested after block {newest}"
                )));
            }
        }
        self.newest = Some(block);
        let horizon = block.saturating_sub(self.design.d() as u64) as i64;
        self.window.retain(|p| p.block as i64 >= horizon);
        self.fresh.retain(|&j, _| j >= horizon);

        for p in packets {
            let Some(body) = p.body else { continue };
            debug_assert_eq!(body.block, block);
            if body.combo.is_empty() {
                continue; // zero combination carries nothing
            }
            if body.slot == 1 {
                // fresh copies always have the singleton combo {block: 1}
                self.fresh.insert(block as i64, body.payload.clone());
            }
            self.window.push(WinPacket {
                block,
                combo: body.combo.into_iter().collect(),
                payload: body.payload,
            });
        }
        self.peel();
        Ok(())
    }

    /// Repeatedly scan the window for packets with a single undetermined
    /// term and recover it, until nothing changes.
    fn peel(&mut self) {
        loop {
            let mut learned: Option<(i64, Vec<Symbol>)> = None;
            'scan: for p in &self.window {
                let mut unknown: Option<(i64, Symbol)> = None;
                for &(j, c) in &p.combo {
                    if self.known(j).is_none() {
                        if unknown.is_some() {
                            continue 'scan; // two or more unknowns
                        }
                        unknown = Some((j, c));
                    }
                }
                let Some((j, c)) = unknown else { continue };
                let mut acc = p.payload.clone();
                for &(jj, cc) in &p.combo {
                    if jj != j {
                        let known = self.known(jj).expect("checked above");
                        // acc already borrows self.field only
                        let _ = self.field.axpy(cc, known, &mut acc);
                    }
                }
                let inv = self.field.inv(c).expect("combo coefficients are nonzero");
                for s in &mut acc {
                    *s = self.field.mul(inv, *s);
                }
                learned = Some((j, acc));
                break 'scan;
            }
            match learned {
                Some((j, payload)) => {
                    self.recovered.insert(j, payload);
                }
                None => return,
            }
        }
    }

    /// Decode X_t at its deadline. Requires t to be the next deadline, all
    /// blocks through t+D ingested, and the true payload for the genie
    /// patch on failure.
    pub fn decode_deadline(&mut self, t: u64, truth: &[Symbol]) -> Result<DecodeOutcome> {
        if t != self.next_deadline {
            return Err(Error::contract(format!(
                "deadline {t} out of order; expected {}",
                self.next_deadline
            )));
        }
        if let Some(m) = self.session_len {
            if t > m {
                return Err(Error::contract(format!(
                    "deadline {t} is past the session length {m}"
                )));
            }
        }
        let need = t + self.design.d() as u64;
        if !self.newest.is_some_and(|b| b >= need) {
            return Err(Error::contract(format!(
                "decode_deadline({t}) called before block {need} was ingested"
            )));
        }
        if truth.len() != self.payload_len {
            return Err(Error::parameter(format!(
                "truth payload has length {}, expected {}",
                truth.len(),
                self.payload_len
            )));
        }

        let decoded = match self.mode {
            DecoderMode::FullGe => self.decode_ge(t as i64),
            DecoderMode::Pairwise => self.decode_pairwise(t as i64),
        };

        self.recovered.remove(&(t as i64));
        let outcome = match decoded {
            Some(payload) => {
                debug_assert_eq!(
                    payload, truth,
                    "decoded payload diverged from the source at deadline {t}"
                );
                self.fd.insert(t as i64, payload.clone());
                DecodeOutcome {
                    index: t,
                    status: DecodeStatus::Decoded,
                    payload: Some(payload),
                    used_genie: false,
                }
            }
            None => {
                self.fd.insert(t as i64, truth.to_vec());
                DecodeOutcome {
                    index: t,
                    status: DecodeStatus::Failed,
                    payload: None,
                    used_genie: true,
                }
            }
        };
        // the next deadline's window reaches back at most D indices
        let floor = (t + 1) as i64 - self.design.d() as i64;
        self.fd.retain(|&j, _| j >= floor);
        self.next_deadline = t + 1;
        Ok(outcome)
    }

    /// Gaussian elimination over every windowed packet that still touches
    /// an undetermined index. Solves X_t when its unit vector is in the row
    /// span; any other index pinned down on the way is kept for later.
    fn decode_ge(&mut self, t: i64) -> Option<Vec<Symbol>> {
        if let Some(p) = self.recovered.get(&t) {
            return Some(p.clone());
        }
        // unknowns are the non-virtual, non-determined indices the window
        // can reference: t..=newest
        let newest = self.newest.expect("checked by caller") as i64;
        let mut cols: Vec<i64> = Vec::new();
        for j in t..=newest {
            if !self.is_virtual(j) && self.known(j).is_none() {
                cols.push(j);
            }
        }
        debug_assert_eq!(cols.first(), Some(&t));
        let col_of = |j: i64, cols: &[i64]| cols.binary_search(&j).ok();

        let mut rows: Vec<(Vec<Symbol>, Vec<Symbol>)> = Vec::new();
        for p in &self.window {
            if !p.combo.iter().any(|&(j, _)| col_of(j, &cols).is_some()) {
                continue;
            }
            let mut co = vec![Symbol::ZERO; cols.len()];
            let mut pay = p.payload.clone();
            for &(j, c) in &p.combo {
                match col_of(j, &cols) {
                    Some(idx) => co[idx] = c,
                    None => {
                        let known = self.known(j).expect("not a column, so determined");
                        let _ = self.field.axpy(c, known, &mut pay);
                    }
                }
            }
            rows.push((co, pay));
        }
        let rank = gauss_jordan(self.field, &mut rows);

        let mut answer = None;
        for (co, pay) in rows.iter().take(rank) {
            let mut nz = co.iter().enumerate().filter(|(_, c)| !c.is_zero());
            let (idx, _) = nz.next().expect("pivot rows are nonzero");
            if nz.next().is_none() {
                // unit row: cols[idx] is determined (pivots are normalized)
                if cols[idx] == t {
                    answer = Some(pay.clone());
                } else {
                    self.recovered.entry(cols[idx]).or_insert_with(|| pay.clone());
                }
            }
        }
        answer
    }

    /// The two closed-form decode routes, nothing else. Route (a): a packet
    /// whose undelivered part is X_t alone. Route (b): a packet whose
    /// undelivered part is {X_t, X_u} with u > t, closed by a received
    /// fresh copy of X_u. Early-recovered packets are deliberately ignored.
    fn decode_pairwise(&self, t: i64) -> Option<Vec<Symbol>> {
        // reduce a packet by delivered and virtual indices only
        let determined = |j: i64| -> Option<&[Symbol]> {
            if self.is_virtual(j) {
                Some(&self.zeros)
            } else if j < t {
                Some(self.fd.get(&j).expect("every index before t is delivered"))
            } else {
                None
            }
        };
        let extract = |p: &WinPacket, skip: &[i64]| -> Vec<Symbol> {
            let mut acc = p.payload.clone();
            for &(j, c) in &p.combo {
                if !skip.contains(&j) {
                    let _ = self.field.axpy(c, determined(j).expect("reduced term"), &mut acc);
                }
            }
            acc
        };

        // route (a)
        for p in &self.window {
            let live: Vec<(i64, Symbol)> = p
                .combo
                .iter()
                .copied()
                .filter(|&(j, _)| determined(j).is_none())
                .collect();
            if let [(j, c)] = live[..] {
                if j == t {
                    let mut acc = extract(p, &[t]);
                    let inv = self.field.inv(c).expect("nonzero");
                    for s in &mut acc {
                        *s = self.field.mul(inv, *s);
                    }
                    return Some(acc);
                }
            }
        }
        // route (b)
        for p in &self.window {
            let live: Vec<(i64, Symbol)> = p
                .combo
                .iter()
                .copied()
                .filter(|&(j, _)| determined(j).is_none())
                .collect();
            let [(j1, c1), (j2, c2)] = live[..] else { continue };
            let (ct, u, cu) = if j1 == t {
                (c1, j2, c2)
            } else if j2 == t {
                (c2, j1, c1)
            } else {
                continue;
            };
            let Some(xu) = self.fresh.get(&u) else { continue };
            let mut acc = extract(p, &[t, u]);
            let _ = self.field.axpy(cu, xu, &mut acc);
            let inv = self.field.inv(ct).expect("nonzero");
            for s in &mut acc {
                *s = self.field.mul(inv, *s);
            }
            return Some(acc);
        }
        None
    }
}

/// K copies of X_m, all with the singleton combo.
pub fn krep_encode(k: u32, m: u64, payload: &[Symbol]) -> Result<Vec<CodedPacket>> {
    if k < 1 {
        return Err(Error::parameter("repetition count must be at least 1"));
    }
    if m < 1 {
        return Err(Error::parameter("data indices start at 1"));
    }
    let combo = SymbolicCombo::from([(m as i64, Symbol::ONE)]);
    Ok((1..=k)
        .map(|slot| CodedPacket {
            block: m,
            slot,
            combo: combo.clone(),
            payload: payload.to_vec(),
        })
        .collect())
}

/// A repetition block decodes iff any copy survived.
pub fn krep_decode(block: &[ReceivedPacket]) -> DecodeOutcome {
    let index = block.first().map_or(0, |p| p.block);
    match block.iter().find_map(|p| p.body.as_ref()) {
        Some(body) => DecodeOutcome {
            index,
            status: DecodeStatus::Decoded,
            payload: Some(body.payload.clone()),
            used_genie: false,
        },
        None => DecodeOutcome {
            index,
            status: DecodeStatus::Failed,
            payload: None,
            used_genie: true,
        },
    }
}

/// N random linear combinations of the M data payloads. Coefficients are
/// i.i.d. uniform over the field; with `exclude_zero` an all-zero
/// coefficient vector is redrawn. Packets are tagged block = transmission
/// index, slot = 1.
pub fn rlnc_encode<R: Rng + ?Sized>(
    data: &[Vec<Symbol>],
    n: u64,
    field: &Field,
    rng: &mut R,
    exclude_zero: bool,
) -> Result<Vec<CodedPacket>> {
    if data.is_empty() {
        return Err(Error::parameter("need at least one data packet"));
    }
    if n < 1 {
        return Err(Error::parameter("need at least one coded packet"));
    }
    let len = data[0].len();
    if len == 0 || data.iter().any(|p| p.len() != len) {
        return Err(Error::parameter("payloads must share one nonzero length"));
    }
    let mut out = Vec::with_capacity(n as usize);
    let mut coeffs = vec![Symbol::ZERO; data.len()];
    for t in 1..=n {
        loop {
            for c in &mut coeffs {
                *c = field.sample(rng);
            }
            if !exclude_zero || coeffs.iter().any(|c| !c.is_zero()) {
                break;
            }
        }
        let mut combo = SymbolicCombo::new();
        let mut payload = vec![Symbol::ZERO; len];
        for (i, &c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                combo.insert(i as i64 + 1, c);
                field.axpy(c, &data[i], &mut payload)?;
            }
        }
        out.push(CodedPacket { block: t, slot: 1, combo, payload });
    }
    Ok(out)
}

/// Result of block decoding: overall success plus whatever individual
/// packets were pinned down even when the batch fell short of full rank.
#[derive(Clone, Debug)]
pub struct RlncOutcome {
    pub success: bool,
    pub rank: u32,
    /// Entry j-1 is Some iff X_j was recovered.
    pub payloads: Vec<Option<Vec<Symbol>>>,
}

/// Eliminate over the surviving combinations; X_j is recovered iff its unit
/// vector lies in the received row space, and success means all M are.
pub fn rlnc_decode(received: &[ReceivedPacket], m: u32, field: &Field) -> Result<RlncOutcome> {
    if m < 1 {
        return Err(Error::parameter("need at least one data packet"));
    }
    let mut rows: Vec<(Vec<Symbol>, Vec<Symbol>)> = Vec::new();
    for p in received {
        let Some(body) = p.body.as_ref() else { continue };
        let mut co = vec![Symbol::ZERO; m as usize];
        for (&j, &c) in &body.combo {
            if j < 1 || j > m as i64 {
                return Err(Error::contract(format!(
                    "combination references data packet {j}, batch holds 1..={m}"
                )));
            }
            co[j as usize - 1] = c;
        }
        rows.push((co, body.payload.clone()));
    }
    let rank = gauss_jordan(field, &mut rows);
    let mut payloads = vec![None; m as usize];
    for (co, pay) in rows.iter().take(rank) {
        let mut nz = co.iter().enumerate().filter(|(_, c)| !c.is_zero());
        let (idx, _) = nz.next().expect("pivot rows are nonzero");
        if nz.next().is_none() {
            payloads[idx] = Some(pay.clone());
        }
    }
    Ok(RlncOutcome {
        success: rank as u32 == m,
        rank: rank as u32,
        payloads,
    })
}

/// In-place Gauss-Jordan to reduced row echelon form; returns the rank.
/// Pivot rows end up first, normalized, each pivot the only nonzero in its
/// column.
fn gauss_jordan(field: &Field, rows: &mut [(Vec<Symbol>, Vec<Symbol>)]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].0.len();
    let mut r = 0;
    for col in 0..ncols {
        let Some(pivot) = (r..rows.len()).find(|&i| !rows[i].0[col].is_zero()) else {
            continue;
        };
        rows.swap(r, pivot);
        let inv = field
            .inv(rows[r].0[col])
            .expect("pivot is nonzero by construction");
        let (co, pay) = &mut rows[r];
        for s in co.iter_mut().chain(pay.iter_mut()) {
            *s = field.mul(inv, *s);
        }
        for i in 0..rows.len() {
            if i == r || rows[i].0[col].is_zero() {
                continue;
            }
            let factor = rows[i].0[col];
            let (head, tail) = rows.split_at_mut(r.max(i));
            let (a, b) = if i > r {
                (&head[r], &mut tail[0])
            } else {
                (&tail[0], &mut head[i])
            };
            for (dst, &src) in b.0.iter_mut().zip(&a.0) {
                *dst = field.add(*dst, field.mul(factor, src));
            }
            for (dst, &src) in b.1.iter_mut().zip(&a.1) {
                *dst = field.add(*dst, field.mul(factor, src));
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}
