//! Frame encoding shared by the TCP transport and transcripts.
//!
//! ```text
//! u32 LE  length of everything after this field
//! u8      scope tag
//! u8      element width in bits, 0 standing for 128 (bits use 1)
//! u32 LE  element count
//! u8      number of scope clocks
//! u32 LE  scope clock per frame, outermost first
//! ...     payload: count * width bits, packed little-endian, byte padded
//! ```

use crate::error::{Error, Result};

use super::{Message, Payload, PayloadKind};

pub fn payload_bytes(count: usize, width: u32) -> usize {
    (count * width as usize).div_ceil(8)
}

struct BitWriter {
    out: Vec<u8>,
    acc: u128,
    fill: u32,
}

impl BitWriter {
    fn new(cap: usize) -> Self {
        Self {
            out: Vec::with_capacity(cap),
            acc: 0,
            fill: 0,
        }
    }

    #[inline]
    fn put(&mut self, mut v: u128, mut width: u32) {
        while width > 0 {
            let take = width.min(64);
            let chunk = v & ((1u128 << take) - 1);
            self.acc |= chunk << self.fill;
            self.fill += take;
            while self.fill >= 8 {
                self.out.push(self.acc as u8);
                self.acc >>= 8;
                self.fill -= 8;
            }
            v >>= take;
            width -= take;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.fill > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    src: &'a [u8],
    pos: usize,
    acc: u128,
    fill: u32,
}

impl<'a> BitReader<'a> {
    fn new(src: &'a [u8]) -> Self {
        Self {
            src,
            pos: 0,
            acc: 0,
            fill: 0,
        }
    }

    #[inline]
    fn get(&mut self, width: u32) -> u128 {
        let mut out = 0u128;
        let mut got = 0;
        while got < width {
            let take = (width - got).min(64);
            while self.fill < take {
                let b = self.src.get(self.pos).copied().unwrap_or(0);
                self.pos += 1;
                self.acc |= (b as u128) << self.fill;
                self.fill += 8;
            }
            let chunk = self.acc & ((1u128 << take) - 1);
            self.acc >>= take;
            self.fill -= take;
            out |= chunk << got;
            got += take;
        }
        out
    }
}

pub fn encode(msg: &Message) -> Vec<u8> {
    let count = msg.count as usize;
    let body = 1 + 1 + 4 + 1 + 4 * msg.depths.len() + payload_bytes(count, msg.width);
    let mut out = Vec::with_capacity(4 + body);
    out.extend_from_slice(&(body as u32).to_le_bytes());
    out.push(msg.tag);
    out.push(if msg.width == 128 { 0 } else { msg.width as u8 });
    out.extend_from_slice(&msg.count.to_le_bytes());
    out.push(msg.depths.len() as u8);
    for d in &msg.depths {
        out.extend_from_slice(&d.to_le_bytes());
    }
    match &msg.payload {
        Payload::Bits(words) => {
            let n = payload_bytes(count, 1);
            let mut bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
            bytes.truncate(n);
            out.extend_from_slice(&bytes);
        }
        Payload::U64(v) if msg.width == 64 => {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        Payload::U64(v) => {
            let mut w = BitWriter::new(payload_bytes(count, msg.width));
            for &x in v {
                w.put(x as u128, msg.width);
            }
            out.extend_from_slice(&w.finish());
        }
        Payload::U128(v) => {
            let mut w = BitWriter::new(payload_bytes(count, msg.width));
            for &x in v {
                w.put(x, msg.width);
            }
            out.extend_from_slice(&w.finish());
        }
    }
    out
}

/// Decodes a frame body (without the length prefix).
pub fn decode(body: &[u8], kind: PayloadKind) -> Result<Message> {
    let err = |s: &str| Error::Frame(s.to_string());
    if body.len() < 7 {
        return Err(err("short header"));
    }
    let tag = body[0];
    let width = match body[1] {
        0 => 128,
        w => w as u32,
    };
    let count = u32::from_le_bytes(body[2..6].try_into().unwrap());
    let nd = body[6] as usize;
    let hdr = 7 + 4 * nd;
    if body.len() < hdr {
        return Err(err("short depth vector"));
    }
    let depths = (0..nd)
        .map(|i| u32::from_le_bytes(body[7 + 4 * i..11 + 4 * i].try_into().unwrap()))
        .collect();
    let data = &body[hdr..];
    if data.len() != payload_bytes(count as usize, width) {
        return Err(err("payload length disagrees with count and width"));
    }
    let n = count as usize;
    let payload = match kind {
        PayloadKind::Bits => {
            if width != 1 {
                return Err(err("bit payload with width > 1"));
            }
            let words = data
                .chunks(8)
                .map(|c| {
                    let mut b = [0u8; 8];
                    b[..c.len()].copy_from_slice(c);
                    u64::from_le_bytes(b)
                })
                .collect();
            Payload::Bits(words)
        }
        PayloadKind::U64 => {
            if width > 64 {
                return Err(err("width exceeds 64-bit word"));
            }
            if width == 64 {
                Payload::U64(
                    data.chunks(8)
                        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            } else {
                let mut r = BitReader::new(data);
                Payload::U64((0..n).map(|_| r.get(width) as u64).collect())
            }
        }
        PayloadKind::U128 => {
            let mut r = BitReader::new(data);
            Payload::U128((0..n).map(|_| r.get(width)).collect())
        }
    };
    Ok(Message {
        tag,
        width,
        count,
        depths,
        payload,
    })
}
