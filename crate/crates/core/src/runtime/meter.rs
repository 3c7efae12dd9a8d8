//! Communication and round metering.
//!
//! Every party keeps a stack of scope frames. Each frame carries a causal
//! clock: a message sent in the frame is stamped with `clock + 1`, and
//! receiving a message raises the receiver's clock to the stamp. The round
//! count of a scope is the largest stamp any party sent inside it, so
//! messages that need not wait for one another share a round.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

macro_rules! protocols {
    ($($name:ident = $id:literal, $label:literal;)*) => {
        /// Label of a metered protocol scope. The discriminant doubles as
        /// the scope tag byte on the wire.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum Protocol {
            $($name = $id,)*
        }

        impl Protocol {
            pub const ALL: &'static [Protocol] = &[$(Protocol::$name,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(Protocol::$name => $label,)*
                }
            }

            pub fn from_tag(tag: u8) -> Option<Protocol> {
                match tag {
                    $($id => Some(Protocol::$name),)*
                    _ => None,
                }
            }
        }
    };
}

protocols! {
    Session = 0, "Session";
    Mult = 1, "Mult";
    Dot = 2, "Dot";
    And = 3, "AND";
    Open = 4, "Open";
    B2A = 5, "B2A";
    RandBit = 6, "RandBit";
    EdaBit = 7, "edaBit";
    BitLT = 8, "BitLT";
    PrefixAnd = 9, "PrefixAND";
    PrefixOr = 10, "PrefixOR";
    Eqz = 11, "EQZ";
    Msb = 12, "MSB";
    Trunc = 13, "Trunc";
    BitDec = 14, "BitDec";
    AllOr = 15, "AllOr";
    Convert = 16, "Convert";
    Shift = 17, "Shift";
    B2U = 18, "B2U";
    FL2SA = 19, "FL2SA";
    SASum = 20, "SASum";
    SA2FL = 21, "SA2FL";
    Normalize = 22, "Normalize";
    FLSum = 23, "FLSum";
    Adder = 24, "Adder";
    Test = 25, "Test";
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Protocol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug)]
struct Frame {
    tag: Protocol,
    width: u32,
    items: u64,
    clock: u32,
    max_sent: u32,
    bits: u64,
    child_bits: u64,
    record: usize,
}

/// One scope invocation as seen by one party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartyRecord {
    pub tag: Protocol,
    pub width: u32,
    pub items: u64,
    pub arg: u32,
    pub bits: u64,
    pub exclusive_bits: u64,
    pub rounds: u32,
    pub depth: u32,
    pub parent: Option<usize>,
}

/// Per-party scope stack. Records are kept in pre-order of scope entry.
#[derive(Debug)]
pub struct Meter {
    frames: Vec<Frame>,
    records: Vec<PartyRecord>,
}

impl Default for Meter {
    fn default() -> Self {
        Self::new()
    }
}

impl Meter {
    pub fn new() -> Self {
        let mut m = Meter {
            frames: Vec::new(),
            records: Vec::new(),
        };
        m.enter(Protocol::Session, 0, 0);
        m
    }

    pub fn enter(&mut self, tag: Protocol, width: u32, items: u64) {
        let record = self.records.len();
        self.records.push(PartyRecord {
            tag,
            width,
            items,
            arg: 0,
            bits: 0,
            exclusive_bits: 0,
            rounds: 0,
            depth: self.frames.len() as u32,
            parent: self.frames.last().map(|f| f.record),
        });
        // A child starts no earlier than where its parent currently is, but
        // its own round count is relative to entry.
        self.frames.push(Frame {
            tag,
            width,
            items,
            clock: 0,
            max_sent: 0,
            bits: 0,
            child_bits: 0,
            record,
        });
    }

    pub fn exit(&mut self, tag: Protocol) -> Result<()> {
        if self.frames.len() <= 1 {
            return Err(Error::Desync(format!("unbalanced exit of {tag}")));
        }
        self.pop(tag)
    }

    fn pop(&mut self, tag: Protocol) -> Result<()> {
        let f = self.frames.pop().expect("frame stack non-empty");
        if f.tag != tag {
            return Err(Error::Desync(format!("exit {tag} while in {}", f.tag)));
        }
        let r = &mut self.records[f.record];
        debug_assert_eq!((r.width, r.items), (f.width, f.items));
        r.bits = f.bits;
        r.exclusive_bits = f.bits - f.child_bits;
        r.rounds = f.max_sent;
        if let Some(parent) = self.frames.last_mut() {
            parent.child_bits += f.bits;
        }
        Ok(())
    }

    /// Attaches a protocol-specific argument to the innermost scope.
    pub fn annotate(&mut self, arg: u32) {
        if let Some(f) = self.frames.last() {
            self.records[f.record].arg = arg;
        }
    }

    pub fn current(&self) -> Protocol {
        self.frames.last().map(|f| f.tag).unwrap_or(Protocol::Session)
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Stamps an outgoing message of `bits` payload bits.
    pub fn on_send(&mut self, bits: u64) -> Vec<u32> {
        self.frames
            .iter_mut()
            .map(|f| {
                let d = f.clock + 1;
                f.max_sent = f.max_sent.max(d);
                f.bits += bits;
                d
            })
            .collect()
    }

    pub fn on_recv(&mut self, depths: &[u32]) -> Result<()> {
        if depths.len() != self.frames.len() {
            return Err(Error::Desync(format!(
                "message from scope depth {} received at depth {} ({})",
                depths.len(),
                self.frames.len(),
                self.current()
            )));
        }
        for (f, &d) in self.frames.iter_mut().zip(depths) {
            f.clock = f.clock.max(d);
        }
        Ok(())
    }

    /// Closes the session scope and returns all records.
    pub fn finish(mut self) -> Result<Vec<PartyRecord>> {
        if self.frames.len() != 1 {
            return Err(Error::Desync(format!(
                "{} scopes left open at end of session",
                self.frames.len() - 1
            )));
        }
        self.pop(Protocol::Session)?;
        Ok(self.records)
    }
}

/// A scope invocation aggregated over the three parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScopeRecord {
    pub protocol: Protocol,
    pub width: u32,
    pub items: u64,
    /// Secondary size argument, 0 if the protocol has none.
    pub arg: u32,
    pub bits: u64,
    pub bits_per_party: [u64; 3],
    pub exclusive_bits: u64,
    pub rounds: u32,
    pub depth: u32,
    pub parent: Option<usize>,
}

/// Aggregate of one protocol label over a ledger.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProtocolTotals {
    pub invocations: u64,
    pub items: u64,
    pub bits: u64,
    pub max_rounds: u32,
}

/// Costs of a complete three-party session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    pub records: Vec<ScopeRecord>,
}

impl CostLedger {
    pub fn aggregate(parties: [Vec<PartyRecord>; 3]) -> Result<Self> {
        let n = parties[0].len();
        if parties.iter().any(|p| p.len() != n) {
            return Err(Error::Desync("parties recorded different scope trees".into()));
        }
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let [a, b, c] = [&parties[0][i], &parties[1][i], &parties[2][i]];
            for o in [b, c] {
                if (o.tag, o.width, o.items, o.depth, o.parent)
                    != (a.tag, a.width, a.items, a.depth, a.parent)
                {
                    return Err(Error::Desync(format!(
                        "scope {i} differs between parties: {} vs {}",
                        a.tag, o.tag
                    )));
                }
            }
            records.push(ScopeRecord {
                protocol: a.tag,
                width: a.width,
                items: a.items,
                arg: a.arg,
                bits: a.bits + b.bits + c.bits,
                bits_per_party: [a.bits, b.bits, c.bits],
                exclusive_bits: a.exclusive_bits + b.exclusive_bits + c.exclusive_bits,
                rounds: a.rounds.max(b.rounds).max(c.rounds),
                depth: a.depth,
                parent: a.parent,
            });
        }
        Ok(CostLedger { records })
    }

    pub fn total_bits(&self) -> u64 {
        self.records.first().map(|r| r.bits).unwrap_or(0)
    }

    pub fn total_rounds(&self) -> u32 {
        self.records.first().map(|r| r.rounds).unwrap_or(0)
    }

    pub fn of(&self, p: Protocol) -> impl Iterator<Item = &ScopeRecord> {
        self.records.iter().filter(move |r| r.protocol == p)
    }

    /// Top-most invocations of `p` (not nested inside another `p`).
    pub fn outermost(&self, p: Protocol) -> Vec<&ScopeRecord> {
        self.records
            .iter()
            .enumerate()
            .filter(|(i, r)| r.protocol == p && !self.has_ancestor(*i, p))
            .map(|(_, r)| r)
            .collect()
    }

    fn has_ancestor(&self, mut i: usize, p: Protocol) -> bool {
        while let Some(parent) = self.records[i].parent {
            if self.records[parent].protocol == p {
                return true;
            }
            i = parent;
        }
        false
    }

    /// Bits attributed to outermost invocations of `p`.
    pub fn bits_of(&self, p: Protocol) -> u64 {
        self.outermost(p).iter().map(|r| r.bits).sum()
    }

    pub fn totals(&self) -> BTreeMap<Protocol, ProtocolTotals> {
        let mut out: BTreeMap<Protocol, ProtocolTotals> = BTreeMap::new();
        for r in &self.records {
            let t = out.entry(r.protocol).or_default();
            t.invocations += 1;
            t.items += r.items;
            t.bits += r.bits;
            t.max_rounds = t.max_rounds.max(r.rounds);
        }
        out
    }

    /// Checks every invocation of the primitives with closed-form costs.
    ///
    /// Mult, Dot and AND cost `3k` bits per item in one round, Open(l)
    /// `3l` bits per item in one round, B2A `3k` bits per item in two.
    pub fn verify_primitive_costs(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            let want = match r.protocol {
                Protocol::Mult | Protocol::Dot | Protocol::And | Protocol::Open => {
                    Some((3 * r.width as u64 * r.items, 1))
                }
                Protocol::B2A => Some((3 * r.width as u64 * r.items, 2)),
                _ => None,
            };
            let Some((bits, rounds)) = want else { continue };
            let rounds = if r.items == 0 { 0 } else { rounds };
            if r.bits != bits || r.rounds != rounds {
                return Err(Error::CostMismatch(format!(
                    "scope {i} {} (width {}, {} items): measured {} bits / {} rounds, expected {} / {}",
                    r.protocol, r.width, r.items, r.bits, r.rounds, bits, rounds
                )));
            }
        }
        Ok(())
    }

    /// Number of invocations checked by [`Self::verify_primitive_costs`].
    pub fn checked_invocations(&self, p: Protocol) -> usize {
        self.of(p).count()
    }
}
