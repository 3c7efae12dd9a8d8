//! Party contexts, key setup, transports and the three-party harness.

mod meter;
pub mod transport;
pub mod wire;

use std::net::SocketAddr;
use std::time::Duration;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::{PartyId, Prg, Word};

pub use meter::{CostLedger, Meter, PartyRecord, Protocol, ProtocolTotals, ScopeRecord};
pub use transport::{SimTransport, TcpTransport, Transport};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    U64(Vec<u64>),
    U128(Vec<u128>),
    /// Packed bits, least significant bit of word 0 first.
    Bits(Vec<u64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadKind {
    U64,
    U128,
    Bits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub tag: u8,
    pub width: u32,
    pub count: u32,
    pub depths: Vec<u32>,
    pub payload: Payload,
}

/// PRG keys of one party: `keys[j-1]` is present iff `j != id`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySetup {
    pub id: PartyId,
    pub keys: [Option<[u8; 32]>; 3],
    pub private: [u8; 32],
}

fn derive_key(seed: u64, label: &[u8], index: u8) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"fpsum/");
    h.update(label);
    h.update(seed.to_le_bytes());
    h.update([index]);
    h.finalize().into()
}

impl KeySetup {
    /// Key material of party `id` derived from a master seed.
    pub fn derive(seed: u64, id: PartyId) -> Self {
        let keys = [1u8, 2, 3].map(|j| (j != id.get()).then(|| derive_key(seed, b"prg", j)));
        KeySetup {
            id,
            keys,
            private: derive_key(seed, b"private", id.get()),
        }
    }

    /// Short digest that lets peers detect mismatched setups.
    pub fn fingerprint(seed: u64) -> [u8; 8] {
        derive_key(seed, b"fingerprint", 0)[..8].try_into().unwrap()
    }
}

/// One sent message in a transcript, without payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ShapeEntry {
    pub tag: u8,
    pub to: u8,
    pub width: u32,
    pub count: u32,
    pub depths: Vec<u32>,
}

/// Outgoing transcript of one party.
#[derive(Clone, Debug)]
pub struct Transcript {
    hasher: Sha256,
    pub shape: Vec<ShapeEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranscriptSummary {
    pub digest: [u8; 32],
    pub shape: Vec<ShapeEntry>,
}

impl Transcript {
    fn new() -> Self {
        Transcript {
            hasher: Sha256::new(),
            shape: Vec::new(),
        }
    }

    fn record(&mut self, to: PartyId, msg: &Message) {
        self.hasher.update([to.get()]);
        self.hasher.update(wire::encode(msg));
        self.shape.push(ShapeEntry {
            tag: msg.tag,
            to: to.get(),
            width: msg.width,
            count: msg.count,
            depths: msg.depths.clone(),
        });
    }

    fn finish(self) -> TranscriptSummary {
        TranscriptSummary {
            digest: self.hasher.finalize().into(),
            shape: self.shape,
        }
    }
}

/// Protocol context of one party.
pub struct Party {
    id: PartyId,
    prg: [Option<Prg>; 3],
    rng: ChaCha12Rng,
    net: Box<dyn Transport>,
    meter: Meter,
    transcript: Option<Transcript>,
}

impl Party {
    pub fn new(keys: &KeySetup, net: Box<dyn Transport>, record_transcript: bool) -> Self {
        Party {
            id: keys.id,
            prg: keys.keys.map(|k| k.map(Prg::new)),
            rng: ChaCha12Rng::from_seed(keys.private),
            net,
            meter: Meter::new(),
            transcript: record_transcript.then(Transcript::new),
        }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    /// Shared generator `G_j`, known to both parties other than `P_j`.
    pub fn prg(&mut self, j: u8) -> Result<&mut Prg> {
        let id = self.id.get();
        self.prg
            .get_mut((j as usize).wrapping_sub(1))
            .and_then(Option::as_mut)
            .ok_or(Error::PrgNotHeld(id, j))
    }

    /// Both generators this party holds, in slot order.
    pub fn prg_pair(&mut self) -> (&mut Prg, &mut Prg) {
        let [a, b] = self.id.held();
        let (lo, hi) = self.prg.split_at_mut(b as usize - 1);
        (
            lo[a as usize - 1].as_mut().expect("held key"),
            hi[0].as_mut().expect("held key"),
        )
    }

    /// Private randomness of this party.
    pub fn rng(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }

    pub fn meter(&self) -> &Meter {
        &self.meter
    }

    /// Runs `f` inside a metered scope. `width` and `items` describe the
    /// invocation for cost checks.
    pub fn scope<T>(
        &mut self,
        tag: Protocol,
        width: u32,
        items: usize,
        f: impl FnOnce(&mut Self) -> Result<T>,
    ) -> Result<T> {
        self.meter.enter(tag, width, items as u64);
        let out = f(self)?;
        self.meter.exit(tag)?;
        Ok(out)
    }

    /// Records a secondary size argument (such as a truncation amount) on
    /// the current scope.
    pub fn annotate(&mut self, arg: u32) {
        self.meter.annotate(arg);
    }

    fn send_msg(&mut self, to: PartyId, width: u32, count: usize, payload: Payload) -> Result<()> {
        if to == self.id {
            return Err(Error::Desync(format!("{} sending to itself", self.id)));
        }
        let bits = width as u64 * count as u64;
        let depths = self.meter.on_send(bits);
        let msg = Message {
            tag: self.meter.current() as u8,
            width,
            count: count as u32,
            depths,
            payload,
        };
        if let Some(t) = self.transcript.as_mut() {
            t.record(to, &msg);
        }
        self.net.send(to, msg)
    }

    fn recv_msg(&mut self, from: PartyId, width: u32, count: usize, kind: PayloadKind) -> Result<Payload> {
        let msg = self.net.recv(from, kind)?;
        if msg.width != width || msg.count as usize != count {
            return Err(Error::Desync(format!(
                "{} expected {count}x{width} bits from {from}, got {}x{}",
                self.id, msg.count, msg.width
            )));
        }
        if msg.tag != self.meter.current() as u8 {
            return Err(Error::Desync(format!(
                "{} in scope {} received message tagged {:?}",
                self.id,
                self.meter.current(),
                Protocol::from_tag(msg.tag)
            )));
        }
        self.meter.on_recv(&msg.depths)?;
        Ok(msg.payload)
    }

    pub fn send<W: Word>(&mut self, to: PartyId, width: u32, data: Vec<W>) -> Result<()> {
        let n = data.len();
        self.send_msg(to, width, n, W::into_payload(data))
    }

    pub fn recv<W: Word>(&mut self, from: PartyId, width: u32, count: usize) -> Result<Vec<W>> {
        let kind = if W::BITS > 64 { PayloadKind::U128 } else { PayloadKind::U64 };
        let p = self.recv_msg(from, width, count, kind)?;
        W::from_payload(p).ok_or_else(|| Error::Desync("payload word type".into()))
    }

    /// Sends `len` packed bits.
    pub fn send_bits(&mut self, to: PartyId, len: usize, words: Vec<u64>) -> Result<()> {
        debug_assert_eq!(words.len(), crate::ring::words_for(len));
        self.send_msg(to, 1, len, Payload::Bits(words))
    }

    pub fn recv_bits(&mut self, from: PartyId, len: usize) -> Result<Vec<u64>> {
        match self.recv_msg(from, 1, len, PayloadKind::Bits)? {
            Payload::Bits(mut w) => {
                w.resize(crate::ring::words_for(len), 0);
                Ok(w)
            }
            _ => Err(Error::Desync("expected bit payload".into())),
        }
    }

    /// Closes the session, returning scope records and the transcript.
    pub fn finish(self) -> Result<(Vec<PartyRecord>, Option<TranscriptSummary>)> {
        let records = self.meter.finish()?;
        Ok((records, self.transcript.map(Transcript::finish)))
    }
}

/// Three simulated party contexts built from a master seed.
pub fn setup_three_parties(seed: u64, record_transcript: bool) -> [Party; 3] {
    let nets = SimTransport::triple();
    let mut i = 0;
    nets.map(|net| {
        let id = PartyId::ALL[i];
        i += 1;
        Party::new(&KeySetup::derive(seed, id), Box::new(net), record_transcript)
    })
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub transcript: bool,
}

impl RunConfig {
    pub fn seeded(seed: u64) -> Self {
        RunConfig {
            seed,
            transcript: false,
        }
    }

    pub fn with_transcript(mut self) -> Self {
        self.transcript = true;
        self
    }
}

pub struct RunOutput<T> {
    pub outputs: [T; 3],
    pub ledger: CostLedger,
    pub transcripts: Option<[TranscriptSummary; 3]>,
}

/// Runs `f` as all three parties over the simulated transport, one thread
/// per party. The primitive cost check runs on every session.
pub fn run<T, F>(cfg: &RunConfig, f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let parties = setup_three_parties(cfg.seed, cfg.transcript);
    run_parties(parties, f)
}

/// Runs `f` on already constructed parties, one thread each.
pub fn run_parties<T, F>(parties: [Party; 3], f: F) -> Result<RunOutput<T>>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let f = &f;
    let results: Vec<Result<(T, Vec<PartyRecord>, Option<TranscriptSummary>)>> =
        std::thread::scope(|s| {
            let handles: Vec<_> = parties
                .into_iter()
                .map(|mut p| {
                    s.spawn(move || {
                        let out = f(&mut p)?;
                        let (rec, tr) = p.finish()?;
                        Ok((out, rec, tr))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or(Err(Error::PartyPanicked)))
                .collect()
        });
    // Prefer a root cause over the channel-closed errors it provokes.
    if results.iter().any(|r| r.is_err()) {
        let mut errs: Vec<Error> = results.into_iter().filter_map(|r| r.err()).collect();
        let idx = errs
            .iter()
            .position(|e| !matches!(e, Error::ChannelClosed(_)))
            .unwrap_or(0);
        return Err(errs.swap_remove(idx));
    }
    let mut outs = Vec::with_capacity(3);
    let mut recs = Vec::with_capacity(3);
    let mut trs = Vec::with_capacity(3);
    for r in results {
        let (o, rec, tr) = r?;
        outs.push(o);
        recs.push(rec);
        trs.push(tr);
    }
    let recs: [Vec<PartyRecord>; 3] = recs.try_into().map_err(|_| Error::PartyPanicked)?;
    let ledger = CostLedger::aggregate(recs)?;
    ledger.verify_primitive_costs()?;
    let transcripts = if trs.iter().all(Option::is_some) {
        let t: Vec<_> = trs.into_iter().map(Option::unwrap).collect();
        t.try_into().ok()
    } else {
        None
    };
    Ok(RunOutput {
        outputs: outs.try_into().map_err(|_| Error::PartyPanicked)?,
        ledger,
        transcripts,
    })
}

/// Runs `f` as a single party of a TCP session.
pub fn run_tcp_party<T, F>(
    id: PartyId,
    endpoints: &[SocketAddr; 3],
    seed: u64,
    record_transcript: bool,
    f: F,
) -> Result<(T, Vec<PartyRecord>, Option<TranscriptSummary>)>
where
    F: FnOnce(&mut Party) -> Result<T>,
{
    let net = TcpTransport::connect(id, endpoints, KeySetup::fingerprint(seed), Duration::from_secs(30))?;
    let mut p = Party::new(&KeySetup::derive(seed, id), Box::new(net), record_transcript);
    let out = f(&mut p)?;
    let (rec, tr) = p.finish()?;
    Ok((out, rec, tr))
}
