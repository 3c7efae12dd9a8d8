//! Arithmetic in `Z_{2^k}`, the bit domain `Z_2`, and the three-party
//! replicated secret-sharing (RSS) representation.
//!
//! A value `x` is split into three sub-shares `x = x1 + x2 + x3 mod 2^k`.
//! Party `P_i` holds the two sub-shares whose index differs from `i`:
//!
//! | party | slot 0 | slot 1 |
//! |-------|--------|--------|
//! | P1    | x2     | x3     |
//! | P2    | x1     | x3     |
//! | P3    | x1     | x2     |
//!
//! Bits shared over `Z_2` use the same layout with XOR as the group
//! operation. Boolean shares are stored bit-sliced: one [`BitBatch`] packs
//! the same bit position of many independent instances into `u64` words.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{BitAnd, BitOr, BitXor, Not, Shl, Shr};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Largest supported ring width. Widths above 64 are carried in `u128`.
pub const MAX_WIDTH: u32 = 128;

/// Machine word backing ring elements of a given width.
pub trait Word:
    Copy
    + Default
    + Eq
    + Ord
    + Hash
    + Debug
    + Send
    + Sync
    + 'static
    + BitAnd<Output = Self>
    + BitOr<Output = Self>
    + BitXor<Output = Self>
    + Not<Output = Self>
    + Shl<u32, Output = Self>
    + Shr<u32, Output = Self>
{
    const BITS: u32;
    const ZERO: Self;
    const ONE: Self;

    fn from_u64(v: u64) -> Self;
    fn from_u128(v: u128) -> Self;
    fn to_u128(self) -> u128;
    fn wrapping_add(self, o: Self) -> Self;
    fn wrapping_sub(self, o: Self) -> Self;
    fn wrapping_mul(self, o: Self) -> Self;
    fn wrapping_neg(self) -> Self;
    fn sample<R: RngCore>(rng: &mut R) -> Self;

    #[inline]
    fn bit(self, i: u32) -> bool {
        (self >> i) & Self::ONE == Self::ONE
    }

    /// All-ones mask of `width` low bits.
    #[inline]
    fn mask(width: u32) -> Self {
        debug_assert!(width >= 1 && width <= Self::BITS);
        if width == Self::BITS {
            !Self::ZERO
        } else {
            (Self::ONE << width).wrapping_sub(Self::ONE)
        }
    }

    /// `2^i`, or zero when `i` falls outside the word.
    #[inline]
    fn pow2(i: u32) -> Self {
        if i >= Self::BITS {
            Self::ZERO
        } else {
            Self::ONE << i
        }
    }

    fn into_payload(v: Vec<Self>) -> crate::runtime::Payload;
    fn from_payload(p: crate::runtime::Payload) -> Option<Vec<Self>>;
}

macro_rules! impl_word {
    ($t:ty, $variant:ident, $sample:expr) => {
        impl Word for $t {
            const BITS: u32 = <$t>::BITS;
            const ZERO: Self = 0;
            const ONE: Self = 1;
            #[inline]
            fn from_u64(v: u64) -> Self {
                v as $t
            }
            #[inline]
            fn from_u128(v: u128) -> Self {
                v as $t
            }
            #[inline]
            fn to_u128(self) -> u128 {
                self as u128
            }
            #[inline]
            fn wrapping_add(self, o: Self) -> Self {
                <$t>::wrapping_add(self, o)
            }
            #[inline]
            fn wrapping_sub(self, o: Self) -> Self {
                <$t>::wrapping_sub(self, o)
            }
            #[inline]
            fn wrapping_mul(self, o: Self) -> Self {
                <$t>::wrapping_mul(self, o)
            }
            #[inline]
            fn wrapping_neg(self) -> Self {
                <$t>::wrapping_neg(self)
            }
            #[inline]
            fn sample<R: RngCore>(rng: &mut R) -> Self {
                $sample(rng)
            }
            fn into_payload(v: Vec<Self>) -> crate::runtime::Payload {
                crate::runtime::Payload::$variant(v)
            }
            fn from_payload(p: crate::runtime::Payload) -> Option<Vec<Self>> {
                match p {
                    crate::runtime::Payload::$variant(v) => Some(v),
                    _ => None,
                }
            }
        }
    };
}

impl_word!(u64, U64, |r: &mut R| r.next_u64());
impl_word!(u128, U128, |r: &mut R| ((r.next_u64() as u128) << 64)
    | r.next_u64() as u128);

/// Checks that `width` is a supported ring width for word type `W`.
pub fn check_width<W: Word>(width: u32) -> Result<()> {
    if width == 0 || width > W::BITS {
        return Err(Error::InvalidWidth {
            width,
            max: W::BITS,
        });
    }
    Ok(())
}

/// Interprets the low `width` bits of `v` as a two's-complement integer.
pub fn to_signed(v: u128, width: u32) -> i128 {
    debug_assert!(width >= 1 && width <= 128);
    if width == 128 {
        return v as i128;
    }
    let v = v & ((1u128 << width) - 1);
    if v >> (width - 1) == 1 {
        v as i128 - (1i128 << width)
    } else {
        v as i128
    }
}

/// Reduces a signed integer into `Z_{2^width}`.
pub fn from_signed(v: i128, width: u32) -> u128 {
    if width == 128 {
        v as u128
    } else {
        (v as u128) & ((1u128 << width) - 1)
    }
}

/// One of the three computing parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct PartyId(u8);

impl PartyId {
    pub const P1: PartyId = PartyId(1);
    pub const P2: PartyId = PartyId(2);
    pub const P3: PartyId = PartyId(3);
    pub const ALL: [PartyId; 3] = [Self::P1, Self::P2, Self::P3];

    pub fn new(id: u8) -> Result<Self> {
        match id {
            1..=3 => Ok(PartyId(id)),
            _ => Err(Error::InvalidParty(id)),
        }
    }

    /// 1-based party number.
    pub fn get(self) -> u8 {
        self.0
    }

    /// 0-based index, handy for arrays.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    /// Sub-share indices held by this party, in slot order.
    pub fn held(self) -> [u8; 2] {
        match self.0 {
            1 => [2, 3],
            2 => [1, 3],
            _ => [1, 2],
        }
    }

    /// Slot in which this party stores sub-share `j`, if it holds it.
    pub fn slot_of(self, j: u8) -> Option<usize> {
        let h = self.held();
        if h[0] == j {
            Some(0)
        } else if h[1] == j {
            Some(1)
        } else {
            None
        }
    }

    /// `P_{i+1}` cyclically.
    pub fn next(self) -> PartyId {
        PartyId(self.0 % 3 + 1)
    }

    /// `P_{i-1}` cyclically.
    pub fn prev(self) -> PartyId {
        PartyId((self.0 + 1) % 3 + 1)
    }
}

impl std::fmt::Display for PartyId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// A public element of `Z_{2^width}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingElement {
    value: u128,
    width: u32,
}

impl RingElement {
    pub fn new(value: u128, width: u32) -> Result<Self> {
        check_width::<u128>(width)?;
        Ok(Self {
            value: value & u128::mask(width),
            width,
        })
    }

    pub fn value(self) -> u128 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn signed(self) -> i128 {
        to_signed(self.value, self.width)
    }

    fn same(self, o: Self) -> Result<()> {
        if self.width != o.width {
            return Err(Error::WidthMismatch(self.width, o.width));
        }
        Ok(())
    }

    pub fn add(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Self::new(self.value.wrapping_add(o.value), self.width)
    }

    pub fn sub(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Self::new(self.value.wrapping_sub(o.value), self.width)
    }

    pub fn mul(self, o: Self) -> Result<Self> {
        self.same(o)?;
        Self::new(self.value.wrapping_mul(o.value), self.width)
    }

    pub fn neg(self) -> Self {
        Self {
            value: self.value.wrapping_neg() & u128::mask(self.width),
            width: self.width,
        }
    }

    pub fn reduce(self, width: u32) -> Result<Self> {
        if width > self.width {
            return Err(Error::WidthMismatch(width, self.width));
        }
        Self::new(self.value, width)
    }
}

/// The two sub-shares one party holds of a single ring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RssShare {
    pub sub: [u128; 2],
    pub width: u32,
}

/// The two sub-shares one party holds of a single bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BitShare {
    pub sub: [bool; 2],
}

/// Reconstructs a full three-party triple of holdings, verifying that the
/// replicated sub-shares agree between their two holders.
pub fn reconstruct_triple(holdings: [[u128; 2]; 3]) -> Result<[u128; 3]> {
    // x1 is in P2 slot 0 and P3 slot 0; x2 in P1 slot 0 and P3 slot 1;
    // x3 in P1 slot 1 and P2 slot 1.
    let x1 = holdings[1][0];
    let x2 = holdings[0][0];
    let x3 = holdings[0][1];
    if holdings[2][0] != x1 || holdings[2][1] != x2 || holdings[1][1] != x3 {
        return Err(Error::InconsistentShares);
    }
    Ok([x1, x2, x3])
}

impl RssShare {
    pub fn reconstruct(parts: &[RssShare; 3]) -> Result<RingElement> {
        let w = parts[0].width;
        if parts.iter().any(|p| p.width != w) {
            return Err(Error::WidthMismatch(parts[1].width, w));
        }
        let [a, b, c] = reconstruct_triple([parts[0].sub, parts[1].sub, parts[2].sub])?;
        RingElement::new(a.wrapping_add(b).wrapping_add(c), w)
    }
}

impl BitShare {
    pub fn reconstruct(parts: &[BitShare; 3]) -> Result<bool> {
        let h = parts.map(|p| [p.sub[0] as u128, p.sub[1] as u128]);
        let [a, b, c] = reconstruct_triple(h)?;
        Ok((a ^ b ^ c) == 1)
    }
}

/// Splits `x` into three sub-shares with the first two uniform.
pub fn split_value<R: RngCore>(x: u128, width: u32, rng: &mut R) -> [u128; 3] {
    let m = u128::mask(width);
    let a = u128::sample(rng) & m;
    let b = u128::sample(rng) & m;
    let c = x.wrapping_sub(a).wrapping_sub(b) & m;
    [a, b, c]
}

/// Per-party holdings `[P1, P2, P3]` for the sub-share triple `[x1, x2, x3]`.
pub fn holdings_of<T: Copy>(x: [T; 3]) -> [[T; 2]; 3] {
    [[x[1], x[2]], [x[0], x[2]], [x[0], x[1]]]
}

/// Secret-shares a public ring element into the three parties' holdings.
pub fn share_plaintext<R: RngCore>(x: RingElement, rng: &mut R) -> [RssShare; 3] {
    let subs = split_value(x.value(), x.width(), rng);
    holdings_of(subs).map(|sub| RssShare {
        sub,
        width: x.width(),
    })
}

/// Secret-shares a bit over `Z_2`.
pub fn share_bit<R: RngCore>(x: bool, rng: &mut R) -> [BitShare; 3] {
    let subs = split_value(x as u128, 1, rng).map(|v| v == 1);
    holdings_of(subs).map(|sub| BitShare { sub })
}

/// A batch of arithmetic shares over `Z_{2^width}` held by one party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithShares<W: Word> {
    width: u32,
    pub(crate) sub: [Vec<W>; 2],
}

impl<W: Word> ArithShares<W> {
    pub fn new(width: u32, s0: Vec<W>, s1: Vec<W>) -> Result<Self> {
        check_width::<W>(width)?;
        if s0.len() != s1.len() {
            return Err(Error::LengthMismatch(s0.len(), s1.len()));
        }
        let m = W::mask(width);
        let s0 = s0.into_iter().map(|v| v & m).collect();
        let s1 = s1.into_iter().map(|v| v & m).collect();
        Ok(Self { width, sub: [s0, s1] })
    }

    pub(crate) fn from_raw(width: u32, sub: [Vec<W>; 2]) -> Self {
        debug_assert_eq!(sub[0].len(), sub[1].len());
        Self { width, sub }
    }

    pub fn zeros(width: u32, len: usize) -> Self {
        Self {
            width,
            sub: [vec![W::ZERO; len], vec![W::ZERO; len]],
        }
    }

    /// Shares of a public vector: each value goes into sub-share 1.
    pub fn constant(id: PartyId, width: u32, values: &[W]) -> Self {
        let mut out = Self::zeros(width, values.len());
        out.add_public_assign(id, values);
        out
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.sub[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub[0].is_empty()
    }

    pub fn mask(&self) -> W {
        W::mask(self.width)
    }

    pub fn slot(&self, s: usize) -> &[W] {
        &self.sub[s]
    }

    pub fn get(&self, i: usize) -> RssShare {
        RssShare {
            sub: [self.sub[0][i].to_u128(), self.sub[1][i].to_u128()],
            width: self.width,
        }
    }

    pub fn from_shares(shares: &[RssShare]) -> Result<Self> {
        let width = shares.first().map(|s| s.width).unwrap_or(W::BITS);
        if let Some(s) = shares.iter().find(|s| s.width != width) {
            return Err(Error::WidthMismatch(s.width, width));
        }
        Self::new(
            width,
            shares.iter().map(|s| W::from_u128(s.sub[0])).collect(),
            shares.iter().map(|s| W::from_u128(s.sub[1])).collect(),
        )
    }

    fn same_shape(&self, o: &Self) -> Result<()> {
        if self.width != o.width {
            return Err(Error::WidthMismatch(self.width, o.width));
        }
        if self.len() != o.len() {
            return Err(Error::LengthMismatch(self.len(), o.len()));
        }
        Ok(())
    }

    fn zip_map(&self, o: &Self, f: impl Fn(W, W) -> W) -> Self {
        let m = self.mask();
        let sub = [0, 1].map(|s| {
            self.sub[s]
                .iter()
                .zip(&o.sub[s])
                .map(|(&a, &b)| f(a, b) & m)
                .collect()
        });
        Self::from_raw(self.width, sub)
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(self.zip_map(o, W::wrapping_add))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(self.zip_map(o, W::wrapping_sub))
    }

    pub fn neg(&self) -> Self {
        let m = self.mask();
        let sub = [0, 1].map(|s| self.sub[s].iter().map(|&a| a.wrapping_neg() & m).collect());
        Self::from_raw(self.width, sub)
    }

    /// Multiplication by a public scalar.
    pub fn scale(&self, c: W) -> Self {
        let m = self.mask();
        let sub = [0, 1].map(|s| self.sub[s].iter().map(|&a| a.wrapping_mul(c) & m).collect());
        Self::from_raw(self.width, sub)
    }

    /// Element-wise multiplication by public values.
    pub fn scale_each(&self, c: &[W]) -> Result<Self> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch(c.len(), self.len()));
        }
        let m = self.mask();
        let sub = [0, 1].map(|s| {
            self.sub[s]
                .iter()
                .zip(c)
                .map(|(&a, &b)| a.wrapping_mul(b) & m)
                .collect()
        });
        Ok(Self::from_raw(self.width, sub))
    }

    /// Adds public values into sub-share 1.
    pub fn add_public_assign(&mut self, id: PartyId, c: &[W]) {
        debug_assert_eq!(c.len(), self.len());
        if let Some(s) = id.slot_of(1) {
            let m = W::mask(self.width);
            for (a, &b) in self.sub[s].iter_mut().zip(c) {
                *a = a.wrapping_add(b) & m;
            }
        }
    }

    pub fn add_public(&self, id: PartyId, c: &[W]) -> Self {
        let mut out = self.clone();
        out.add_public_assign(id, c);
        out
    }

    pub fn add_scalar(&self, id: PartyId, c: W) -> Self {
        self.add_public(id, &vec![c; self.len()])
    }

    /// `c - x` for a public `c`.
    pub fn rsub_scalar(&self, id: PartyId, c: W) -> Self {
        self.neg().add_scalar(id, c)
    }

    /// Reduces every sub-share modulo `2^width`.
    pub fn mod_switch(&self, width: u32) -> Result<Self> {
        if width > self.width || width == 0 {
            return Err(Error::WidthMismatch(width, self.width));
        }
        let m = W::mask(width);
        let sub = [0, 1].map(|s| self.sub[s].iter().map(|&a| a & m).collect());
        Ok(Self::from_raw(width, sub))
    }

    /// Reinterprets the sub-shares in another word type and ring. Only the
    /// residue mod `2^min(width, new_width)` of the shared value is kept.
    pub fn recast<V: Word>(&self, width: u32) -> Result<ArithShares<V>> {
        check_width::<V>(width)?;
        let m = V::mask(width);
        let sub = [0, 1].map(|s| {
            self.sub[s]
                .iter()
                .map(|&a| V::from_u128(a.to_u128()) & m)
                .collect()
        });
        Ok(ArithShares::from_raw(width, sub))
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        let sub = [0, 1].map(|s| self.sub[s][range.clone()].to_vec());
        Self::from_raw(self.width, sub)
    }

    /// Gathers elements by index.
    pub fn select(&self, idx: &[usize]) -> Self {
        let sub = [0, 1].map(|s| idx.iter().map(|&i| self.sub[s][i]).collect());
        Self::from_raw(self.width, sub)
    }

    pub fn concat(parts: &[&Self]) -> Result<Self> {
        let width = parts.first().map(|p| p.width).unwrap_or(W::BITS);
        let mut sub = [Vec::new(), Vec::new()];
        for p in parts {
            if p.width != width {
                return Err(Error::WidthMismatch(p.width, width));
            }
            for s in 0..2 {
                sub[s].extend_from_slice(&p.sub[s]);
            }
        }
        Ok(Self::from_raw(width, sub))
    }

    pub fn push(&mut self, s0: W, s1: W) {
        let m = self.mask();
        self.sub[0].push(s0 & m);
        self.sub[1].push(s1 & m);
    }

    /// Sum of all elements as a single share.
    pub fn sum(&self) -> Self {
        let m = self.mask();
        let sub = [0, 1].map(|s| {
            vec![self.sub[s]
                .iter()
                .fold(W::ZERO, |acc, &a| acc.wrapping_add(a))
                & m]
        });
        Self::from_raw(self.width, sub)
    }
}

/// Reconstructs a batch from the three parties' holdings.
pub fn reconstruct_arith<W: Word>(parts: [&ArithShares<W>; 3]) -> Result<Vec<W>> {
    let w = parts[0].width;
    let n = parts[0].len();
    for p in &parts[1..] {
        if p.width != w {
            return Err(Error::WidthMismatch(p.width, w));
        }
        if p.len() != n {
            return Err(Error::LengthMismatch(p.len(), n));
        }
    }
    let m = W::mask(w);
    (0..n)
        .map(|i| {
            let (x1, x2, x3) = (parts[1].sub[0][i], parts[0].sub[0][i], parts[0].sub[1][i]);
            if parts[2].sub[0][i] != x1 || parts[2].sub[1][i] != x2 || parts[1].sub[1][i] != x3 {
                return Err(Error::InconsistentShares);
            }
            Ok(x1.wrapping_add(x2).wrapping_add(x3) & m)
        })
        .collect()
}

/// Splits public values into the three parties' batches.
pub fn share_arith<W: Word, R: RngCore>(
    values: &[W],
    width: u32,
    rng: &mut R,
) -> [ArithShares<W>; 3] {
    let m = W::mask(width);
    let mut subs: [Vec<W>; 3] = Default::default();
    for &v in values {
        let a = W::sample(rng) & m;
        let b = W::sample(rng) & m;
        subs[0].push(a);
        subs[1].push(b);
        subs[2].push(v.wrapping_sub(a).wrapping_sub(b) & m);
    }
    let [x1, x2, x3] = subs;
    [
        ArithShares::from_raw(width, [x2.clone(), x3.clone()]),
        ArithShares::from_raw(width, [x1.clone(), x3]),
        ArithShares::from_raw(width, [x1, x2]),
    ]
}

/// Number of `u64` words needed for `len` packed bits.
#[inline]
pub fn words_for(len: usize) -> usize {
    len.div_ceil(64)
}

/// A packed vector of public bits.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PackedBits {
    len: usize,
    words: Vec<u64>,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut p = Self {
            len,
            words: vec![!0; words_for(len)],
        };
        p.clear_tail();
        p
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut p = Self::zeros(0);
        for b in bits {
            p.push(b);
        }
        p
    }

    pub fn from_words(len: usize, words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        let mut p = Self { len, words };
        p.clear_tail();
        p
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        let w = &mut self.words[i / 64];
        let bit = 1u64 << (i % 64);
        if b {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn push(&mut self, b: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, b);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn not(&self) -> Self {
        Self::from_words(self.len, self.words.iter().map(|w| !w).collect())
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }
}

/// Bit-sliced boolean shares: bit `i` of this batch is one `Z_2` secret
/// belonging to instance `i`. Both slots are packed into `u64` words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitBatch {
    len: usize,
    pub(crate) sub: [Vec<u64>; 2],
}

impl BitBatch {
    pub fn zeros(len: usize) -> Self {
        let n = words_for(len);
        Self {
            len,
            sub: [vec![0; n], vec![0; n]],
        }
    }

    pub(crate) fn from_raw(len: usize, sub: [Vec<u64>; 2]) -> Self {
        let mut b = Self { len, sub };
        b.clear_tail();
        b
    }

    /// Shares of public bits (placed in sub-share 1).
    pub fn constant(id: PartyId, bits: &PackedBits) -> Self {
        let mut out = Self::zeros(bits.len());
        out.xor_public_assign(id, bits);
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn slot(&self, s: usize) -> &[u64] {
        &self.sub[s]
    }

    pub fn get(&self, i: usize) -> BitShare {
        let f = |s: usize| (self.sub[s][i / 64] >> (i % 64)) & 1 == 1;
        BitShare { sub: [f(0), f(1)] }
    }

    pub fn from_shares(shares: &[BitShare]) -> Self {
        let mut out = Self::zeros(shares.len());
        for (i, s) in shares.iter().enumerate() {
            for slot in 0..2 {
                if s.sub[slot] {
                    out.sub[slot][i / 64] |= 1 << (i % 64);
                }
            }
        }
        out
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            for s in 0..2 {
                if let Some(last) = self.sub[s].last_mut() {
                    *last &= (1u64 << r) - 1;
                }
            }
        }
    }

    pub fn xor(&self, o: &BitBatch) -> BitBatch {
        debug_assert_eq!(self.len, o.len);
        let sub = [0, 1].map(|s| self.sub[s].iter().zip(&o.sub[s]).map(|(a, b)| a ^ b).collect());
        BitBatch::from_raw(self.len, sub)
    }

    pub fn xor_assign(&mut self, o: &BitBatch) {
        debug_assert_eq!(self.len, o.len);
        for s in 0..2 {
            for (a, b) in self.sub[s].iter_mut().zip(&o.sub[s]) {
                *a ^= b;
            }
        }
    }

    /// XOR with public bits.
    pub fn xor_public_assign(&mut self, id: PartyId, bits: &PackedBits) {
        debug_assert_eq!(self.len, bits.len());
        if let Some(s) = id.slot_of(1) {
            for (a, b) in self.sub[s].iter_mut().zip(bits.words()) {
                *a ^= b;
            }
        }
    }

    pub fn xor_public(&self, id: PartyId, bits: &PackedBits) -> BitBatch {
        let mut out = self.clone();
        out.xor_public_assign(id, bits);
        out
    }

    /// Logical negation (XOR with all ones).
    pub fn not(&self, id: PartyId) -> BitBatch {
        self.xor_public(id, &PackedBits::ones(self.len))
    }

    /// AND with public bits (local).
    pub fn and_public(&self, bits: &PackedBits) -> BitBatch {
        debug_assert_eq!(self.len, bits.len());
        let sub = [0, 1].map(|s| self.sub[s].iter().zip(bits.words()).map(|(a, b)| a & b).collect());
        BitBatch::from_raw(self.len, sub)
    }

    pub fn slice(&self, start: usize, len: usize) -> BitBatch {
        debug_assert!(start + len <= self.len);
        let sub = [0, 1].map(|s| extract_bits(&self.sub[s], start, len));
        BitBatch::from_raw(len, sub)
    }

    #[inline]
    pub(crate) fn bit_raw(&self, i: usize) -> [bool; 2] {
        [0, 1].map(|s| (self.sub[s][i / 64] >> (i % 64)) & 1 == 1)
    }

    #[inline]
    pub(crate) fn set_bit_raw(&mut self, i: usize, b: [bool; 2]) {
        for s in 0..2 {
            let w = &mut self.sub[s][i / 64];
            let m = 1u64 << (i % 64);
            if b[s] {
                *w |= m;
            } else {
                *w &= !m;
            }
        }
    }

    /// Concatenates batches end to end.
    pub fn concat(parts: &[&BitBatch]) -> BitBatch {
        let total: usize = parts.iter().map(|p| p.len).sum();
        let mut sub = [Vec::with_capacity(words_for(total)), Vec::with_capacity(words_for(total))];
        let mut off = 0;
        for p in parts {
            for s in 0..2 {
                append_bits(&mut sub[s], off, &p.sub[s], p.len);
            }
            off += p.len;
        }
        BitBatch { len: total, sub }
    }

    /// Gathers bits by index.
    pub fn select(&self, idx: &[usize]) -> BitBatch {
        let mut out = BitBatch::zeros(idx.len());
        for (o, &i) in idx.iter().enumerate() {
            out.set_bit_raw(o, self.bit_raw(i));
        }
        out
    }

    /// Splits a concatenation back into `parts` batches of `len` bits each.
    pub fn split_even(&self, parts: usize) -> Vec<BitBatch> {
        if parts == 0 {
            return Vec::new();
        }
        let len = self.len / parts;
        (0..parts).map(|p| self.slice(p * len, len)).collect()
    }
}

/// Reads `len` bits of `src` starting at bit `start`.
pub fn extract_bits(src: &[u64], start: usize, len: usize) -> Vec<u64> {
    let nw = words_for(len);
    let (w0, sh) = (start / 64, (start % 64) as u32);
    let mut out: Vec<u64> = if sh == 0 {
        src[w0..w0 + nw].to_vec()
    } else {
        (0..nw)
            .map(|i| {
                let lo = src[w0 + i];
                let hi = src.get(w0 + i + 1).copied().unwrap_or(0);
                (lo >> sh) | (hi << (64 - sh))
            })
            .collect()
    };
    let r = len % 64;
    if r != 0 {
        if let Some(last) = out.last_mut() {
            *last &= (1u64 << r) - 1;
        }
    }
    out
}

/// Appends the first `len` bits of `src` after the first `dst_len` bits of
/// `dst`. Bits of `dst` past `dst_len` and of `src` past `len` must be zero.
pub fn append_bits(dst: &mut Vec<u64>, dst_len: usize, src: &[u64], len: usize) {
    dst.truncate(words_for(dst_len));
    let src = &src[..words_for(len)];
    let sh = (dst_len % 64) as u32;
    if sh == 0 {
        dst.extend_from_slice(src);
    } else {
        for &w in src {
            *dst.last_mut().expect("partial word present") |= w << sh;
            dst.push(w >> (64 - sh));
        }
        dst.truncate(words_for(dst_len + len));
    }
}

/// Reconstructs a bit batch from the three parties' holdings.
pub fn reconstruct_bits(parts: [&BitBatch; 3]) -> Result<PackedBits> {
    let n = parts[0].len;
    if parts.iter().any(|p| p.len != n) {
        return Err(Error::LengthMismatch(parts[1].len, n));
    }
    let nw = words_for(n);
    let mut words = Vec::with_capacity(nw);
    for w in 0..nw {
        let (x1, x2, x3) = (parts[1].sub[0][w], parts[0].sub[0][w], parts[0].sub[1][w]);
        if parts[2].sub[0][w] != x1 || parts[2].sub[1][w] != x2 || parts[1].sub[1][w] != x3 {
            return Err(Error::InconsistentShares);
        }
        words.push(x1 ^ x2 ^ x3);
    }
    Ok(PackedBits::from_words(n, words))
}

/// Splits public bits into the three parties' batches.
pub fn share_bits<R: RngCore>(bits: &PackedBits, rng: &mut R) -> [BitBatch; 3] {
    let n = bits.len();
    let nw = words_for(n);
    let x1: Vec<u64> = (0..nw).map(|_| rng.next_u64()).collect();
    let x2: Vec<u64> = (0..nw).map(|_| rng.next_u64()).collect();
    let x3: Vec<u64> = (0..nw).map(|w| bits.words()[w] ^ x1[w] ^ x2[w]).collect();
    [
        BitBatch::from_raw(n, [x2.clone(), x3.clone()]),
        BitBatch::from_raw(n, [x1.clone(), x3]),
        BitBatch::from_raw(n, [x1, x2]),
    ]
}

/// Seeded pseudorandom generator: ChaCha12 keystream over a 32-byte key.
///
/// Replaying the same key reproduces the same stream. Draws are consumed in
/// whole 64-bit words; elements are reduced to the requested width.
#[derive(Clone, Debug)]
pub struct Prg {
    rng: ChaCha12Rng,
    drawn: u64,
}

impl Prg {
    pub fn new(key: [u8; 32]) -> Self {
        Self {
            rng: ChaCha12Rng::from_seed(key),
            drawn: 0,
        }
    }

    /// Number of 64-bit words drawn so far.
    pub fn counter(&self) -> u64 {
        self.drawn
    }

    pub fn next_u64(&mut self) -> u64 {
        self.drawn += 1;
        self.rng.next_u64()
    }

    pub fn next_element<W: Word>(&mut self, width: u32) -> W {
        let lo = self.next_u64() as u128;
        let v = if W::BITS > 64 { lo | (self.next_u64() as u128) << 64 } else { lo };
        W::from_u128(v) & W::mask(width)
    }

    /// `n` raw words in one keystream call.
    pub fn words(&mut self, n: usize) -> Vec<u64> {
        let mut v = vec![0u64; n];
        rand::Rng::fill(&mut self.rng, &mut v[..]);
        self.drawn += n as u64;
        v
    }

    /// Same stream as `n` calls of [`Prg::next_element`].
    pub fn elements<W: Word>(&mut self, width: u32, n: usize) -> Vec<W> {
        let m = W::mask(width);
        if W::BITS > 64 {
            let w = self.words(2 * n);
            w.chunks_exact(2).map(|c| W::from_u128(c[0] as u128 | (c[1] as u128) << 64) & m).collect()
        } else {
            self.words(n).into_iter().map(|x| W::from_u64(x) & m).collect()
        }
    }

    /// `n` packed random bits.
    pub fn bit_words(&mut self, n: usize) -> Vec<u64> {
        let mut w = self.words(words_for(n));
        let r = n % 64;
        if r != 0 {
            if let Some(last) = w.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
        w
    }
}

/// Bit-sliced decomposition of public values: row `j` holds bit `j` of
/// every value.
pub fn transpose_public<W: Word>(values: &[W], bits: u32) -> Vec<PackedBits> {
    let n = values.len();
    let nw = words_for(n);
    let mut rows: Vec<Vec<u64>> = vec![vec![0u64; nw]; bits as usize];
    for (wi, chunk) in values.chunks(64).enumerate() {
        for (j, row) in rows.iter_mut().enumerate() {
            let mut acc = 0u64;
            for (bi, &v) in chunk.iter().enumerate() {
                acc |= ((((v >> j as u32) & W::ONE) == W::ONE) as u64) << bi;
            }
            row[wi] = acc;
        }
    }
    rows.into_iter().map(|r| PackedBits::from_words(n, r)).collect()
}

/// Inverse of [`transpose_public`].
pub fn untranspose_public<W: Word>(rows: &[PackedBits]) -> Vec<W> {
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut out = vec![W::ZERO; n];
    for (j, row) in rows.iter().enumerate() {
        for (chunk, &word) in out.chunks_mut(64).zip(row.words()) {
            for (bi, o) in chunk.iter_mut().enumerate() {
                if (word >> bi) & 1 == 1 {
                    *o = *o | (W::ONE << j as u32);
                }
            }
        }
    }
    out
}
